//! Potential file format (JSON):
//!
//! ```json
//! {
//!   "m": 2, "d": 2, "l": 17,
//!   "a": [3.14159, 3.14159],
//!   "coefficients": [ { "index": [0, 1], "matrix": [[0.1, 0.0], [0.0, -0.2]] } ]
//! }
//! ```
//!
//! Indices are nonnegative orbit representatives; matrices must be exactly
//! symmetric as stored (tolerance zero).

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use spectra_core::eigen::SymMatrix;
use spectra_core::geometry::BoxGeometry;
use spectra_core::lattice::LatticeVector;
use spectra_core::potential::MatrixFourierPotential;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub m: usize,
    pub d: usize,
    pub l: u32,
    pub a: Vec<f64>,
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub index: Vec<i64>,
    pub matrix: Vec<Vec<f64>>,
}

pub fn load(path: &Path) -> Result<MatrixFourierPotential> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading potential file {}", path.display()))?;
    let file: PotentialFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing potential file {}", path.display()))?;
    from_file(file)
}

pub fn from_file(file: PotentialFile) -> Result<MatrixFourierPotential> {
    if file.a.len() != file.d {
        bail!("edge list has {} entries, d = {}", file.a.len(), file.d);
    }
    let geometry = BoxGeometry::new(file.a).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut coefficients = BTreeMap::new();
    for entry in file.coefficients {
        if entry.index.len() != file.d {
            bail!("coefficient index {:?} has wrong dimension", entry.index);
        }
        if entry.index.iter().any(|&n| n < 0) {
            bail!(
                "coefficient index {:?} must be a nonnegative representative",
                entry.index
            );
        }
        if entry.matrix.len() != file.m || entry.matrix.iter().any(|r| r.len() != file.m) {
            bail!("matrix at {:?} is not {}x{}", entry.index, file.m, file.m);
        }
        for i in 0..file.m {
            for j in (i + 1)..file.m {
                if entry.matrix[i][j] != entry.matrix[j][i] {
                    bail!(
                        "matrix at {:?} is not exactly symmetric at ({i},{j})",
                        entry.index
                    );
                }
            }
        }
        let mat = SymMatrix::from_rows(&entry.matrix).map_err(|e| anyhow::anyhow!("{e}"))?;
        if coefficients
            .insert(LatticeVector::new(entry.index.clone()), mat)
            .is_some()
        {
            bail!("duplicate coefficient index {:?}", entry.index);
        }
    }
    MatrixFourierPotential::new(geometry, file.m, file.l, coefficients)
        .map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn to_file(potential: &MatrixFourierPotential) -> PotentialFile {
    let m = potential.m();
    let coefficients = potential
        .coefficients()
        .iter()
        .map(|(idx, mat)| CoefficientEntry {
            index: idx.index().to_vec(),
            matrix: (0..m)
                .map(|i| (0..m).map(|j| mat.get(i, j)).collect())
                .collect(),
        })
        .collect();
    PotentialFile {
        m,
        d: potential.geometry().dim(),
        l: potential.l(),
        a: potential.geometry().edges().to_vec(),
        coefficients,
    }
}
