use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::circuit::Spectrum;
use crate::datagen::GeneratorConfig;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Provenance {
    Generated(Box<GeneratorConfig>),
    File(PathBuf),
    #[default]
    Unknown,
}

/// An ordered collection of (optionally labeled) spectra.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub spectra: Vec<Spectrum<f64>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(spectra: Vec<Spectrum<f64>>) -> Self {
        Self {
            spectra,
            provenance: Provenance::Unknown,
        }
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .spectra
            .iter()
            .filter_map(|s| s.label.clone())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for s in &self.spectra {
            if let Some(l) = &s.label {
                *m.entry(l.clone()).or_insert(0) += 1;
            }
        }
        m
    }
}
