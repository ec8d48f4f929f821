use super::PreprocessError;
use crate::circuit::Spectrum;

/// Row-per-spectrum numeric table with optional class labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Option<String>>,
    pub ids: Vec<String>,
    /// Common frequencies for raw-impedance matrices.
    pub freq_grid: Option<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Self {
        Self {
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect(),
            labels: self.labels.clone(),
            ids: self.ids.clone(),
            freq_grid: None,
        }
    }

    pub fn select_rows(&self, keep: &[usize]) -> Self {
        Self {
            columns: self.columns.clone(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
            ids: keep.iter().map(|&i| self.ids[i].clone()).collect(),
            freq_grid: self.freq_grid.clone(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn check_shape(&self) -> Result<(), PreprocessError> {
        let n = self.rows.len();
        if self.labels.len() != n || self.ids.len() != n {
            return Err(PreprocessError::ShapeMismatch(format!(
                "{n} rows, {} labels, {} ids",
                self.labels.len(),
                self.ids.len()
            )));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != self.columns.len()) {
            return Err(PreprocessError::ShapeMismatch(format!(
                "row {i} has {} values for {} columns",
                r.len(),
                self.columns.len()
            )));
        }
        Ok(())
    }
}

/// `[Re(z_1..z_p) | Im(z_1..z_p)]` per spectrum. All spectra must share a grid.
pub fn raw_matrix(spectra: &[Spectrum<f64>]) -> Result<FeatureMatrix, PreprocessError> {
    let Some(first) = spectra.first() else {
        return Ok(FeatureMatrix::default());
    };
    let grid = first.freq().to_vec();
    let p = grid.len();
    let mut columns: Vec<String> = (0..p).map(|k| format!("zreal_{k:02}")).collect();
    columns.extend((0..p).map(|k| format!("zimag_{k:02}")));
    let mut m = FeatureMatrix {
        columns,
        freq_grid: Some(grid.clone()),
        ..FeatureMatrix::default()
    };
    for s in spectra {
        if s.freq() != grid.as_slice() {
            return Err(PreprocessError::ShapeMismatch(format!(
                "spectrum `{}` is not on the common grid",
                s.id
            )));
        }
        let mut row = s.real();
        row.extend(s.imag());
        m.rows.push(row);
        m.labels.push(s.label.clone());
        m.ids.push(s.id.clone());
    }
    Ok(m)
}
