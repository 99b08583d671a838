//! Box geometry: the rectangle `[0,a_1] x ... x [0,a_d]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::CoreError;

/// The d-dimensional box the operator lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGeometry {
    edges: Vec<f64>,
}

impl BoxGeometry {
    /// Edge lengths must be strictly positive and `d >= 2`.
    pub fn new(edges: Vec<f64>) -> Result<Self, CoreError> {
        if edges.len() < 2 {
            return Err(CoreError::Geometry(format!(
                "dimension must be >= 2, got {}",
                edges.len()
            )));
        }
        for (k, &a) in edges.iter().enumerate() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(CoreError::Geometry(format!(
                    "edge length a_{} must be strictly positive, got {a}",
                    k + 1
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, k: usize) -> f64 {
        self.edges[k]
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Box measure, the product of the edge lengths.
    pub fn measure(&self) -> f64 {
        self.edges.iter().product()
    }

    /// Frequency step `pi / a_k` of the dual lattice in dimension `k`.
    pub fn frequency_step(&self, k: usize) -> f64 {
        core::f64::consts::PI / self.edges[k]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.edges)
                .all(|(&xi, &ai)| (0.0..=ai).contains(&xi))
    }
}
