use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{join_floats, IoError};
use crate::circuit::Spectrum;
use crate::dataset::{Dataset, Provenance};

/// Column names of an external CSV layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    /// Without an id column, records are numbered from 0.
    pub id: Option<String>,
    pub circuit: Option<String>,
    pub freq: String,
    pub zreal: String,
    pub zimag: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            id: None,
            circuit: Some("Circuit".into()),
            freq: "freq".into(),
            zreal: "zreal".into(),
            zimag: "zimag".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetFormat {
    NativeCsv,
    NativeJsonl,
    ImportedCsv(ColumnMapping),
}

impl DatasetFormat {
    /// `.jsonl` selects JSONL, anything else native CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => DatasetFormat::NativeJsonl,
            _ => DatasetFormat::NativeCsv,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    id: String,
    circuit: Option<String>,
    freq: Vec<f64>,
    zreal: Vec<f64>,
    zimag: Vec<f64>,
}

pub fn read_dataset(path: &Path, format: &DatasetFormat) -> Result<Dataset, IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut d = read_dataset_from(BufReader::new(f), format)?;
    d.provenance = Provenance::File(path.to_path_buf());
    Ok(d)
}

pub fn read_dataset_from<R: Read>(reader: R, format: &DatasetFormat) -> Result<Dataset, IoError> {
    let spectra = match format {
        DatasetFormat::NativeJsonl => read_jsonl(reader)?,
        DatasetFormat::NativeCsv => read_csv(
            reader,
            &ColumnMapping {
                id: Some("id".into()),
                circuit: Some("circuit".into()),
                ..ColumnMapping::default()
            },
            true,
        )?,
        DatasetFormat::ImportedCsv(m) => read_csv(reader, m, false)?,
    };
    Ok(Dataset::new(spectra))
}

fn build(id: String, label: Option<String>, freq: Vec<f64>, re: Vec<f64>, im: Vec<f64>) -> Result<Spectrum, IoError> {
    if freq.len() != re.len() || freq.len() != im.len() {
        return Err(IoError::LengthMismatch { id });
    }
    let z = re.into_iter().zip(im).map(|(a, b)| Complex::new(a, b)).collect();
    let s = Spectrum::new(freq, z).map_err(|source| IoError::Spectrum { id: id.clone(), source })?;
    let s = s.with_id(id);
    Ok(match label {
        Some(l) if !l.is_empty() => s.with_label(l),
        _ => s,
    })
}

fn read_jsonl<R: Read>(reader: R) -> Result<Vec<Spectrum>, IoError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| IoError::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: JsonRecord = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            line: i as u64 + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(build(r.id, r.circuit, r.freq, r.zreal, r.zimag)?);
    }
    Ok(out)
}

/// Parse an array cell: `1;2;3`, `[1 2 3]`, `1, 2, 3` and similar.
fn parse_array(cell: &str) -> Result<Vec<f64>, String> {
    cell.trim()
        .trim_start_matches(['[', '('])
        .trim_end_matches([']', ')'])
        .split(|c: char| c == ';' || c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

fn read_csv<R: Read>(reader: R, m: &ColumnMapping, strict_header: bool) -> Result<Vec<Spectrum>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| IoError::Parse {
            line: 1,
            column: 0,
            message: format!("missing column `{name}`"),
        })
    };
    if strict_header && headers != ["id", "circuit", "freq", "zreal", "zimag"] {
        return Err(IoError::Parse {
            line: 1,
            column: 1,
            message: "expected header id,circuit,freq,zreal,zimag".into(),
        });
    }
    let id_col = m.id.as_deref().map(col).transpose()?;
    let label_col = m.circuit.as_deref().map(col).transpose()?;
    let (fc, rc, ic) = (col(&m.freq)?, col(&m.zreal)?, col(&m.zimag)?);
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k as u64 + 2;
        let rec = rec.map_err(|e| csv_error(e, line))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(line);
        let field = |c: usize| rec.get(c).unwrap_or("");
        let array = |c: usize| {
            parse_array(field(c)).map_err(|message| IoError::Parse {
                line,
                column: c + 1,
                message,
            })
        };
        let id = id_col.map(|c| field(c).to_string()).unwrap_or_else(|| k.to_string());
        let label = label_col.map(|c| field(c).trim().to_string());
        out.push(build(id, label, array(fc)?, array(rc)?, array(ic)?)?);
    }
    Ok(out)
}

fn csv_error(e: csv::Error, line: u64) -> IoError {
    let line = e.position().map(|p| p.line()).unwrap_or(line);
    IoError::Parse {
        line,
        column: 0,
        message: e.to_string(),
    }
}

pub fn write_dataset(d: &Dataset, path: &Path, format: &DatasetFormat) -> Result<(), IoError> {
    let f = File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = BufWriter::new(f);
    write_dataset_to(d, &mut w, format)?;
    w.flush().map_err(|e| IoError::file(path, e))
}

pub fn write_dataset_to<W: Write>(d: &Dataset, w: W, format: &DatasetFormat) -> Result<(), IoError> {
    let ioerr = |e: std::io::Error| IoError::Format(e.to_string());
    match format {
        DatasetFormat::NativeJsonl => {
            let mut w = w;
            for s in &d.spectra {
                let r = JsonRecord {
                    id: s.id.clone(),
                    circuit: s.label.clone(),
                    freq: s.freq().to_vec(),
                    zreal: s.real(),
                    zimag: s.imag(),
                };
                serde_json::to_writer(&mut w, &r).map_err(|e| IoError::Format(e.to_string()))?;
                w.write_all(b"\n").map_err(ioerr)?;
            }
            Ok(())
        }
        DatasetFormat::NativeCsv => {
            let mut wr = csv::Writer::from_writer(w);
            let cerr = |e: csv::Error| IoError::Format(e.to_string());
            wr.write_record(["id", "circuit", "freq", "zreal", "zimag"]).map_err(cerr)?;
            for s in &d.spectra {
                wr.write_record([
                    s.id.clone(),
                    s.label.clone().unwrap_or_default(),
                    join_floats(s.freq().iter().copied()),
                    join_floats(s.real()),
                    join_floats(s.imag()),
                ])
                .map_err(cerr)?;
            }
            wr.flush().map_err(ioerr)
        }
        DatasetFormat::ImportedCsv(_) => Err(IoError::Format("imported layouts are read-only".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_cells() {
        assert_eq!(parse_array("1;2.5;3e-3").unwrap(), vec![1.0, 2.5, 3e-3]);
        assert_eq!(parse_array("[1. 2.  3.]").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_array("[1, 2, 3]").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_array("1;x").is_err());
    }

    #[test]
    fn imported_layout() {
        let text = "freq,zreal,zimag,Circuit\n\"[1 2 3]\",\"[3 2 1]\",\"[-1 -2 -1]\",RCPE-RCPE\n";
        let d = read_dataset_from(text.as_bytes(), &DatasetFormat::ImportedCsv(ColumnMapping::default())).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.spectra[0].label.as_deref(), Some("RCPE-RCPE"));
        assert_eq!(d.spectra[0].id, "0");
    }

    #[test]
    fn parse_error_position() {
        let text = "id,circuit,freq,zreal,zimag\na,R,1;2,1;1,0;0\nb,R,1;2,1;q,0;0\n";
        match read_dataset_from(text.as_bytes(), &DatasetFormat::NativeCsv) {
            Err(IoError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 4)),
            other => panic!("{other:?}"),
        }
    }
}
