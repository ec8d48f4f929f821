use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use super::{format_float, IoError};
use crate::features::RelevanceTable;
use crate::metrics::ConfusionMatrix;
use crate::preprocess::{FeatureMatrix, FilterReport};

fn writer(path: &Path) -> Result<csv::Writer<File>, IoError> {
    let f = File::create(path).map_err(|e| IoError::file(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn cerr(e: csv::Error) -> IoError {
    IoError::Format(e.to_string())
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<(), IoError> {
    w.flush().map_err(|e| IoError::Format(e.to_string()))
}

/// Header `id,label,<feature columns..>`; empty label for unlabeled rows.
pub fn write_feature_matrix(m: &FeatureMatrix, path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(m.columns.iter().cloned());
    w.write_record(&header).map_err(cerr)?;
    for i in 0..m.n_rows() {
        let mut rec = vec![m.ids[i].clone(), m.labels[i].clone().unwrap_or_default()];
        rec.extend(m.rows[i].iter().map(|v| format_float(*v)));
        w.write_record(&rec).map_err(cerr)?;
    }
    finish(w)
}

pub fn read_feature_matrix(path: &Path) -> Result<FeatureMatrix, IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(f));
    let headers: Vec<String> = rdr.headers().map_err(cerr)?.iter().map(String::from).collect();
    if headers.len() < 2 || headers[0] != "id" || headers[1] != "label" {
        return Err(IoError::Parse {
            line: 1,
            column: 1,
            message: "expected header id,label,...".into(),
        });
    }
    let mut m = FeatureMatrix {
        columns: headers[2..].to_vec(),
        ..FeatureMatrix::default()
    };
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(cerr)?;
        let line = k as u64 + 2;
        if rec.len() != headers.len() {
            return Err(IoError::Parse {
                line,
                column: rec.len().min(headers.len()) + 1,
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        m.ids.push(rec[0].to_string());
        m.labels.push(Some(rec[1].to_string()).filter(|s| !s.is_empty()));
        let row = (2..rec.len())
            .map(|c| {
                rec[c].trim().parse::<f64>().map_err(|_| IoError::Parse {
                    line,
                    column: c + 1,
                    message: format!("`{}` is not a number", &rec[c]),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        m.rows.push(row);
    }
    Ok(m)
}

/// One line per input spectrum: `id,circuit,status,reason`.
pub fn write_filter_report(r: &FilterReport, path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    w.write_record(["id", "circuit", "status", "reason"]).map_err(cerr)?;
    for rec in &r.records {
        let (status, reason) = match rec.reason {
            None => ("kept", ""),
            Some(x) => ("rejected", x.code()),
        };
        w.write_record([rec.id.as_str(), rec.class.as_deref().unwrap_or(""), status, reason])
            .map_err(cerr)?;
    }
    finish(w)
}

/// Rows are true classes, columns predicted classes.
pub fn write_confusion_csv(cm: &ConfusionMatrix, path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    let mut header = vec!["true\\predicted".to_string()];
    header.extend(cm.classes.iter().cloned());
    w.write_record(&header).map_err(cerr)?;
    for (c, row) in cm.classes.iter().zip(&cm.counts) {
        let mut rec = vec![c.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(cerr)?;
    }
    finish(w)
}

pub fn write_relevance(t: &RelevanceTable, path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    w.write_record(["feature", "p_value", "selected"]).map_err(cerr)?;
    for i in 0..t.features.len() {
        w.write_record([
            t.features[i].clone(),
            format_float(t.p_values[i]),
            t.selected[i].to_string(),
        ])
        .map_err(cerr)?;
    }
    finish(w)
}

/// One fitted spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub id: String,
    pub circuit: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub cost: f64,
    pub rel_rmse: f64,
    pub converged: bool,
}

/// `id,circuit,params,cost,rel_rmse,converged`; `params` holds
/// `name=value` pairs joined by `;`.
pub fn write_fit_results(records: &[FitRecord], path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    w.write_record(["id", "circuit", "params", "cost", "rel_rmse", "converged"])
        .map_err(cerr)?;
    for r in records {
        let params = r
            .names
            .iter()
            .zip(&r.params)
            .map(|(n, v)| format!("{n}={}", format_float(*v)))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.id.clone(),
            r.circuit.clone(),
            params,
            format_float(r.cost),
            format_float(r.rel_rmse),
            r.converged.to_string(),
        ])
        .map_err(cerr)?;
    }
    finish(w)
}
