//! Run configuration: one JSON document. Every field has a default and the
//! fully materialized configuration is echoed into the output manifest, so
//! reports are self-describing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_edges")]
    pub geometry: Vec<f64>,
    pub potential: PotentialSource,
    #[serde(default)]
    pub params: ParamsConfig,
    /// Output directory; CLI `--out` overrides.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_edges() -> Vec<f64> {
    vec![std::f64::consts::PI, std::f64::consts::PI]
}

/// Where the potential comes from: a coefficient file or the seeded
/// generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSource {
    File { path: PathBuf },
    Generate(GenerateConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub seed: u64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_l")]
    pub l: u32,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_support_radius")]
    pub support_radius: f64,
}

fn default_m() -> usize {
    2
}
fn default_l() -> u32 {
    17
}
fn default_amplitude() -> f64 {
    2.5e5
}
fn default_support_radius() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Decay order; must match the potential file when one is given.
    #[serde(default = "default_l")]
    pub l: u32,
    /// Resonance direction axis (0-based).
    #[serde(default)]
    pub delta_axis: usize,
    /// Shell constants `c_1 < c_2` for the |gamma| ~ rho precondition.
    #[serde(default = "default_shell")]
    pub shell: [f64; 2],
    /// Sub-shell actually scanned for candidates, as multiples of rho.
    /// Must lie inside `shell`.
    #[serde(default = "default_scan")]
    pub scan: [f64; 2],
    /// Per-rho scan overrides (key: rho formatted as given in `rho_grid`).
    #[serde(default)]
    pub scan_overrides: BTreeMap<String, [f64; 2]>,
    /// 1D cosine truncation.
    #[serde(default = "default_n_trunc")]
    pub n_trunc: usize,
    /// Eigensolver residual tolerance (relative to the matrix norm).
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Cap on the full-solver matrix size `m * #basis`.
    #[serde(default = "default_size_cap")]
    pub size_cap: usize,
    /// Highest correction order `s` computed by predict/compare.
    #[serde(default = "default_order")]
    pub order: u32,
    /// Multiplier for the reported error budget `rho^(-s alpha_2)`.
    #[serde(default = "default_budget_constant")]
    pub budget_constant: f64,
    /// Path-sum truncation of the k-sum.
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    /// Band cap along expansion paths.
    #[serde(default = "default_band_halfwidth")]
    pub band_halfwidth: usize,
    /// Magnitude pruning threshold for path sums.
    #[serde(default = "default_prune")]
    pub prune: f64,
    /// Spectral-gap floor override; estimated from the 1D spectrum if null.
    #[serde(default)]
    pub c18_floor: Option<f64>,
    /// Monte Carlo attempts for measure mode.
    #[serde(default = "default_measure_samples")]
    pub measure_samples: u64,
    /// Seed for measure mode; CLI `--seed` overrides.
    #[serde(default = "default_measure_seed")]
    pub measure_seed: u64,
    /// Constant scaling the decay thresholds in reports.
    #[serde(default = "default_decay_constant")]
    pub decay_constant: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

fn default_rho_grid() -> Vec<f64> {
    vec![10.0, 20.0, 40.0]
}
fn default_alpha() -> f64 {
    0.04
}
fn default_shell() -> [f64; 2] {
    [0.5, 2.0]
}
fn default_scan() -> [f64; 2] {
    [0.5, 1.1]
}
fn default_n_trunc() -> usize {
    64
}
fn default_tol() -> f64 {
    1e-12
}
fn default_size_cap() -> usize {
    4000
}
fn default_order() -> u32 {
    2
}
fn default_budget_constant() -> f64 {
    1.0
}
fn default_k_max() -> u32 {
    4
}
fn default_band_halfwidth() -> usize {
    24
}
fn default_prune() -> f64 {
    1e-18
}
fn default_measure_samples() -> u64 {
    100_000
}
fn default_measure_seed() -> u64 {
    1
}
fn default_decay_constant() -> f64 {
    1.0
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()
            .with_context(|| format!("invalid configuration in {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.geometry.len() < 2 || self.geometry.iter().any(|&a| !(a > 0.0)) {
            bail!("geometry must list at least two strictly positive edge lengths");
        }
        let p = &self.params;
        if p.rho_grid.is_empty() {
            bail!("rho_grid must not be empty");
        }
        if p.rho_grid.windows(2).any(|w| w[0] >= w[1]) {
            bail!("rho_grid must be strictly ascending");
        }
        if !(p.tol > 0.0) || !(p.prune > 0.0) || !(p.budget_constant > 0.0) {
            bail!("tolerance fields must be positive");
        }
        if !(p.shell[0] > 0.0 && p.shell[0] < p.shell[1]) {
            bail!("shell constants must satisfy 0 < c1 < c2");
        }
        for scan in std::iter::once(&p.scan).chain(p.scan_overrides.values()) {
            if !(scan[0] >= p.shell[0] && scan[1] <= p.shell[1] && scan[0] < scan[1]) {
                bail!(
                    "scan window {scan:?} must lie inside the shell {:?}",
                    p.shell
                );
            }
        }
        if p.delta_axis >= self.geometry.len() {
            bail!(
                "delta_axis {} out of range for dimension {}",
                p.delta_axis,
                self.geometry.len()
            );
        }
        if let PotentialSource::File { path } = &self.potential {
            if !path.exists() {
                bail!("potential file {} does not exist", path.display());
            }
        }
        Ok(())
    }

    /// Scan window for one rho value, honoring overrides.
    pub fn scan_for(&self, rho: f64) -> [f64; 2] {
        for (key, window) in &self.params.scan_overrides {
            if let Ok(r) = key.parse::<f64>() {
                if (r - rho).abs() < 1e-9 {
                    return *window;
                }
            }
        }
        self.params.scan
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{ "potential": { "generate": { "seed": 7 } } }"#).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.params.rho_grid, vec![10.0, 20.0, 40.0]);
        assert_eq!(cfg.params.n_trunc, 64);
        assert_eq!(cfg.geometry.len(), 2);
        match cfg.potential {
            PotentialSource::Generate(g) => {
                assert_eq!(g.seed, 7);
                assert_eq!(g.m, 2);
                assert_eq!(g.l, 17);
            }
            _ => panic!("expected generator source"),
        }
    }

    #[test]
    fn scan_overrides_apply() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{
                "potential": { "generate": { "seed": 7 } },
                "params": { "scan_overrides": { "10": [0.5, 2.0] } }
            }"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.scan_for(10.0), [0.5, 2.0]);
        assert_eq!(cfg.scan_for(20.0), [0.5, 1.1]);
    }

    #[test]
    fn rejects_bad_grids_and_windows() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{ "potential": { "generate": { "seed": 1 } }, "params": { "rho_grid": [20.0, 10.0] } }"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
        let cfg: RunConfig = serde_json::from_str(
            r#"{ "potential": { "generate": { "seed": 1 } }, "params": { "scan": [0.1, 1.0] } }"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
