//! Artifact writing: CSV/JSON emission with fixed numeric formatting and a
//! manifest listing every artifact with its content hash.
//!
//! Numbers in CSV cells use 17 significant digits, `.` decimal separator,
//! no locale; identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// 17 significant digits, locale-free.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects artifacts as they are written and emits `manifest.json`.
pub struct ArtifactSink {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    mode: &'a str,
    /// Fully materialized configuration (defaults included).
    config: &'a C,
    incomplete: bool,
    /// Rows or stages that reported errors, with context.
    flags: &'a [String],
    artifacts: &'a [ManifestEntry],
}

impl ArtifactSink {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        let mut hasher = Sha256::new();
        hasher.update(contents.as_bytes());
        let digest = hasher.finalize();
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256,
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Emits the manifest itself (not listed among the artifacts).
    pub fn finish<C: Serialize>(
        self,
        mode: &str,
        config: &C,
        incomplete: bool,
        flags: &[String],
    ) -> Result<()> {
        let manifest = Manifest {
            mode,
            config,
            incomplete,
            flags,
            artifacts: &self.entries,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Simple CSV builder with fixed float formatting.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "csv row arity mismatch");
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Least-squares line through `(ln x, ln y)`; returns `(slope, intercept,
/// rms residual)`. Points with non-positive `y` are rejected by the caller.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut rss = 0.0;
    for &(x, y) in points {
        let r = y.ln() - (slope * x.ln() + intercept);
        rss += r * r;
    }
    Some((slope, intercept, (rss / n).sqrt()))
}

/// Outcome of a convergence study over one error sequence.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StudyOutcome {
    /// Errors sit at machine level; no meaningful rate.
    Degenerate { max_error: f64 },
    Fit {
        slope: f64,
        intercept: f64,
        rms_residual: f64,
    },
}

/// Least-squares rate of `log(median error)` against `log rho`. Needs at
/// least three grid points; sequences at machine level are reported as
/// degenerate (below noise floor) instead of fitted.
pub fn convergence_study(points: &[(f64, f64)]) -> anyhow::Result<StudyOutcome> {
    if points.len() < 3 {
        anyhow::bail!(
            "convergence study needs at least 3 rho values, got {}",
            points.len()
        );
    }
    let max_error = points.iter().map(|&(_, y)| y).fold(0.0f64, f64::max);
    if max_error < 1e-12 {
        return Ok(StudyOutcome::Degenerate { max_error });
    }
    let (slope, intercept, rms_residual) = loglog_fit(points)
        .ok_or_else(|| anyhow::anyhow!("degenerate abscissas in convergence study"))?;
    Ok(StudyOutcome::Fit {
        slope,
        intercept,
        rms_residual,
    })
}

/// Median of an unsorted slice; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
