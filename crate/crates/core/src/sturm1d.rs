//! Cosine-Galerkin solver for the matrix Sturm-Liouville problem
//! `T(P) Y = -|delta|^2 Y'' + P(s) Y` on `[0, pi]` with Neumann ends.
//!
//! Basis: the orthonormal cosine vectors `C_hat(n,i)`, `n = 0..N`,
//! `i = 0..m-1`, where the `n = 0` mode carries weight `1/sqrt(pi)` and the
//! rest `sqrt(2/pi)`. Multiplication by `cos(nu s)` couples mode `n` to
//! `|n +- nu|` with the entry
//!
//! ```text
//! w(n, n', nu) = 1/2 * #{e in {+1,-1} : |nu + e n| = n'} * sqrt(w_n / w_n'),
//! ```
//!
//! `w_0 = 1`, `w_n = 2` otherwise; the `n = 0` row picks up the familiar
//! `sqrt(2)` correction. Row `n*m + i` of the assembled matrix is the
//! coefficient of `C_hat(n,i)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::{eigensolve_symmetric, EigenDecomposition, SymMatrix};
use crate::error::CoreError;
use crate::float;
use crate::lattice::Direction;
use crate::params::AsymptoticParams;
use crate::potential::DirectionalPotential;

/// One labeled eigenpair of `T(P)`.
#[derive(Debug, Clone)]
pub struct Eigenpair1D {
    /// Band label `j >= 0`, the dominant cosine index.
    pub band: usize,
    /// Position within the band after sorting by eigenvalue (`0..m`).
    pub slot: usize,
    pub lambda: f64,
    /// Unit-norm coefficients in the orthonormal basis, entry `n*m + i`.
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

impl Eigenpair1D {
    #[inline]
    pub fn coeff(&self, n: usize, i: usize, m: usize) -> f64 {
        self.coeffs.get(n * m + i).copied().unwrap_or(0.0)
    }
}

/// Labeled spectrum of one `T(P)` problem, sorted by eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenpairSet {
    pub pairs: Vec<Eigenpair1D>,
    pub n_trunc: usize,
    pub m: usize,
    pub delta: Direction,
    pub delta_norm: f64,
    pub sup_p: f64,
    /// Pairs (indices into `pairs`) whose eigenvalue fell outside the
    /// `|lambda - |j delta|^2| <= sup P` window; expected empty in the
    /// trusted lower half of the spectrum.
    pub window_violations: Vec<usize>,
}

impl EigenpairSet {
    /// All pairs labeled with this band, in slot order.
    pub fn band(&self, band: usize) -> Vec<&Eigenpair1D> {
        self.pairs.iter().filter(|p| p.band == band).collect()
    }

    /// Largest band label carried by at least one pair.
    pub fn max_band(&self) -> usize {
        self.pairs.iter().map(|p| p.band).max().unwrap_or(0)
    }

    /// Gram-matrix deviation of the coefficient vectors from identity.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.pairs.iter().enumerate() {
            for (jj, b) in self.pairs.iter().enumerate().skip(i) {
                let dot: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum();
                let target = if i == jj { 1.0 } else { 0.0 };
                worst = float::max(worst, float::abs(dot - target));
            }
        }
        worst
    }

    /// Smallest gap between consecutive distinct eigenvalues, the empirical
    /// spectral-gap floor used by the expansion guards.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for w in self.pairs.windows(2) {
            let d = w[1].lambda - w[0].lambda;
            if d > 0.0 {
                gap = float::min(gap, d);
            }
        }
        if gap.is_finite() {
            gap
        } else {
            0.0
        }
    }
}

/// Orthonormal-basis coupling entry for multiplication by `cos(nu s)`.
#[inline]
pub(crate) fn coupling_weight(n: usize, n_target: usize, nu: usize) -> f64 {
    let mut count = 0u32;
    if nu + n == n_target {
        count += 1;
    }
    if (nu as i64 - n as i64).unsigned_abs() as usize == n_target {
        count += 1;
    }
    if count == 0 {
        return 0.0;
    }
    let wn = if n == 0 { 1.0 } else { 2.0 };
    let wt = if n_target == 0 { 1.0 } else { 2.0 };
    0.5 * count as f64 * float::sqrt(wn / wt)
}

/// Galerkin matrix of `T(P)` on modes `0..=n_trunc`, exactly symmetric.
pub fn assemble_t(p: &DirectionalPotential, n_trunc: usize) -> Result<SymMatrix, CoreError> {
    let bw = p.bandwidth();
    if n_trunc < 4 * bw {
        return Err(CoreError::Truncation(format!(
            "n_trunc = {n_trunc} below 4x potential bandwidth {bw}"
        )));
    }
    let m = p.m();
    let size = (n_trunc + 1) * m;
    let dn = p.delta_norm();
    let mut a = SymMatrix::zeros(size);
    for n in 0..=n_trunc {
        let diag = (n as f64 * dn) * (n as f64 * dn);
        for i in 0..m {
            a.add(n * m + i, n * m + i, diag);
        }
    }
    for (nu, mat) in p.coefficients().iter().enumerate() {
        for n in 0..=n_trunc {
            let lo = n.abs_diff(nu);
            let hi = n + nu;
            // candidate targets, deduplicated (lo == hi when nu = 0 or n = 0;
            // the epsilon count inside coupling_weight already covers that)
            let targets_buf = [lo, hi];
            let take = if lo == hi { 1 } else { 2 };
            for &target in &targets_buf[..take] {
                if target > n_trunc || target < n {
                    continue; // fill each unordered block pair once
                }
                let w = coupling_weight(n, target, nu);
                if w == 0.0 {
                    continue;
                }
                for i in 0..m {
                    let j_lo = if target == n { i } else { 0 };
                    for j in j_lo..m {
                        let v = mat.get(i, j) * w;
                        if v != 0.0 {
                            a.add(n * m + i, target * m + j, v);
                        }
                    }
                }
            }
        }
    }
    Ok(a)
}

/// Assemble, diagonalise and label one `T(P)` problem.
pub fn solve(
    p: &DirectionalPotential,
    n_trunc: usize,
    tol: f64,
) -> Result<EigenpairSet, CoreError> {
    let a = assemble_t(p, n_trunc)?;
    let dec = eigensolve_symmetric(&a, tol)?;
    label_bands(&dec, p, n_trunc)
}

/// Default truncation for a requested maximum band.
pub fn default_n_trunc(max_band: usize) -> usize {
    core::cmp::max(64, 8 * max_band)
}

/// Band labeling by dominant coefficient. Each eigenvector gets the `n`
/// maximising `sum_i coeff(n,i)^2`; slots within a band count off in
/// eigenvalue order. A band claiming more than `m` pairs inside the trusted
/// region (`band <= n_trunc/2`) is a labeling error; the window
/// `|lambda - |j delta|^2| <= sup P` is verified there and violations are
/// recorded.
pub fn label_bands(
    dec: &EigenDecomposition,
    p: &DirectionalPotential,
    n_trunc: usize,
) -> Result<EigenpairSet, CoreError> {
    let m = p.m();
    let sup_p = p.sup_norm();
    let dn = p.delta_norm();
    let size = (n_trunc + 1) * m;
    if dec.dim() != size {
        return Err(CoreError::Contract(format!(
            "decomposition size {} does not match (n_trunc+1)*m = {size}",
            dec.dim()
        )));
    }
    let mut pairs = Vec::with_capacity(size);
    let mut band_counts = vec![0usize; n_trunc + 1];
    for k in 0..size {
        let v = dec.vector(k);
        let mut best_n = 0usize;
        let mut best_mass = -1.0;
        for n in 0..=n_trunc {
            let mass: f64 = (0..m).map(|i| v[n * m + i] * v[n * m + i]).sum();
            if mass > best_mass {
                best_mass = mass;
                best_n = n;
            }
        }
        let slot = band_counts[best_n];
        band_counts[best_n] += 1;
        pairs.push(Eigenpair1D {
            band: best_n,
            slot,
            lambda: dec.values[k],
            coeffs: v.to_vec(),
            residual: dec.residuals[k],
        });
    }
    // multiplicity check in the trusted region
    let trusted = n_trunc / 2;
    for (band, &count) in band_counts.iter().enumerate() {
        if band <= trusted && count > m {
            let claimants: Vec<f64> = pairs
                .iter()
                .filter(|p| p.band == band)
                .map(|p| p.lambda)
                .collect();
            return Err(CoreError::Labeling(format!(
                "band {band} claimed by {count} > m = {m} pairs (lambdas {claimants:?})"
            )));
        }
    }
    let mut window_violations = Vec::new();
    for (k, pair) in pairs.iter().enumerate() {
        if pair.band <= trusted {
            let free = (pair.band as f64 * dn) * (pair.band as f64 * dn);
            if float::abs(pair.lambda - free) > sup_p * (1.0 + 1e-9) + 1e-9 {
                window_violations.push(k);
            }
        }
    }
    Ok(EigenpairSet {
        pairs,
        n_trunc,
        m,
        delta: p.delta(),
        delta_norm: dn,
        sup_p,
        window_violations,
    })
}

/// Decay statistics for one labeled pair.
#[derive(Debug, Clone)]
pub struct DecayRow {
    pub band: usize,
    pub slot: usize,
    pub lambda: f64,
    /// `max_{n >= 2r, i} |<phi, C_hat(n,i)>|`.
    pub lemma1_max: f64,
    /// Largest tail sum `sum_{|j1| >= 6r} |<phi_{band+j1}, C_hat(n+n1,i)>|`
    /// over the grid `0 <= n < 2r`, `|n1| < r_1/2`; the sum runs over every
    /// labeled pair of the target band.
    pub lemma2_max: f64,
}

/// Per-pair decay report with the reference thresholds
/// `rho^-(l-1)alpha` and `rho^-(l-2)alpha`.
#[derive(Debug, Clone)]
pub struct DecayStats {
    pub rows: Vec<DecayRow>,
    pub lemma1_threshold: f64,
    pub lemma2_threshold: f64,
    pub r: f64,
}

pub fn decay_report(
    set: &EigenpairSet,
    params: &AsymptoticParams,
    r: f64,
) -> Result<DecayStats, CoreError> {
    let r1 = params.r1(set.delta_norm);
    if r < r1 {
        return Err(CoreError::Params(format!(
            "decay radius r = {r} below r_1 = {r1}"
        )));
    }
    let m = set.m;
    let two_r = float::ceil(2.0 * r) as usize;
    let n1_max = float::ceil(r1 / 2.0) as i64;
    let six_r = 6.0 * r;
    let max_band = set.max_band() as i64;
    let mut rows = Vec::new();
    for pair in &set.pairs {
        if (pair.band as f64) + 1.0 >= r {
            continue;
        }
        let mut lemma1_max = 0.0f64;
        for n in two_r..=set.n_trunc {
            if (n as f64) < 2.0 * r {
                continue;
            }
            for i in 0..m {
                lemma1_max = float::max(lemma1_max, float::abs(pair.coeff(n, i, m)));
            }
        }
        let mut lemma2_max = 0.0f64;
        for n in 0..two_r.min(set.n_trunc + 1) {
            for n1 in -n1_max..=n1_max {
                if float::abs(n1 as f64) >= r1 / 2.0 {
                    continue;
                }
                let mode = (n as i64 + n1).unsigned_abs() as usize;
                if mode > set.n_trunc {
                    continue;
                }
                for i in 0..m {
                    let mut tail = 0.0f64;
                    let mut j1 = -(max_band + pair.band as i64);
                    while j1 <= max_band + pair.band as i64 {
                        if float::abs(j1 as f64) >= six_r {
                            let target = (pair.band as i64 + j1).unsigned_abs() as usize;
                            if target as i64 <= max_band {
                                for tp in set.band(target) {
                                    tail += float::abs(tp.coeff(mode, i, m));
                                }
                            }
                        }
                        j1 += 1;
                    }
                    lemma2_max = float::max(lemma2_max, tail);
                }
            }
        }
        rows.push(DecayRow {
            band: pair.band,
            slot: pair.slot,
            lambda: pair.lambda,
            lemma1_max,
            lemma2_max,
        });
    }
    let l = params.l() as f64;
    let a = params.alpha();
    Ok(DecayStats {
        rows,
        lemma1_threshold: float::powf(params.rho(), -(l - 1.0) * a),
        lemma2_threshold: float::powf(params.rho(), -(l - 2.0) * a),
        r,
    })
}
