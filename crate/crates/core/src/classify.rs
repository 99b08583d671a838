//! Resonance-domain classification of lattice points and the Monte Carlo
//! estimate of the single-resonance measure fraction.
//!
//! A point `x` lies in the resonance slab of `b` at level `eps` when
//! `| |x|^2 - |x+b|^2 | < eps`, i.e. `|2 x.b + |b|^2| < eps`. Level
//! `rho^{alpha_1}` over all `b` in the punctured ball `Gamma(p rho^alpha)`
//! defines the first-order resonance set; the second-order set requires two
//! linearly independent witnesses at level `rho^{alpha_2}`, each witness the
//! shortest lattice vector on its ray.

use alloc::format;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::float;
use crate::geometry::BoxGeometry;
use crate::lattice::{build_lattice, decompose, integer_rank, Direction, LatticeVector};
use crate::params::AsymptoticParams;
use crate::rng::SplitMix64;

/// Classification tag for a lattice point in the `rho` shell.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainClass {
    /// No witness in `Gamma(p rho^alpha)` at level `rho^{alpha_1}`.
    NonResonance,
    /// Exactly one resonant coordinate direction, outside the second-order
    /// set, with the `|j| < r_1` and `|beta^k| > rho^{alpha_1}/3` bounds.
    SingleResonance {
        direction: Direction,
        j: i64,
        beta: LatticeVector,
    },
    /// Everything else: second-order points, points whose only witnesses are
    /// non-coordinate directions, and points failing the single-resonance
    /// bounds. `order` is the rank of the level-`alpha_2` witness set,
    /// clamped below by 2.
    HigherResonance { order: usize },
}

/// Classification result: the tag plus the witness set at level
/// `rho^{alpha_1}` (all of `Gamma(p rho^alpha)`, not only primitive vectors).
#[derive(Debug, Clone)]
pub struct Classification {
    pub class: DomainClass,
    pub witnesses: Vec<LatticeVector>,
}

/// Precomputed witness scan data for one `(geometry, params)` pair.
pub struct WitnessScanner {
    /// All nonzero `b` with `|b| < p rho^alpha`, lexicographic.
    candidates: Vec<(LatticeVector, Vec<f64>, f64)>, // (b, frequency, |b|^2)
    /// Indices of the primitive candidates.
    primitive: Vec<usize>,
}

impl WitnessScanner {
    pub fn new(geometry: &BoxGeometry, params: &AsymptoticParams) -> Result<Self, CoreError> {
        let all = build_lattice(geometry, params.witness_radius())?;
        let mut candidates = Vec::new();
        let mut primitive = Vec::new();
        for b in all {
            if b.is_zero() {
                continue;
            }
            let freq = b.frequency(geometry);
            let norm_sq = freq.iter().map(|f| f * f).sum();
            if b.is_primitive() {
                primitive.push(candidates.len());
            }
            candidates.push((b, freq, norm_sq));
        }
        Ok(Self {
            candidates,
            primitive,
        })
    }

    /// Witnesses of `x` (a frequency-space point) at slab level `eps`.
    pub fn witnesses(&self, x: &[f64], eps: f64) -> Vec<&LatticeVector> {
        self.candidates
            .iter()
            .filter(|(_, freq, norm_sq)| {
                let dot: f64 = freq.iter().zip(x).map(|(f, xi)| f * xi).sum();
                float::abs(2.0 * dot + norm_sq) < eps
            })
            .map(|(b, _, _)| b)
            .collect()
    }

    /// True when `x` has two linearly independent primitive witnesses at
    /// level `eps` (membership in the second-order resonance set).
    pub fn in_second_order(&self, x: &[f64], eps: f64) -> bool {
        self.primitive_witness_rank(x, eps) >= 2
    }

    fn primitive_witness_rank(&self, x: &[f64], eps: f64) -> usize {
        let mut hits: Vec<&[i64]> = Vec::new();
        for &i in &self.primitive {
            let (b, freq, norm_sq) = &self.candidates[i];
            let dot: f64 = freq.iter().zip(x).map(|(f, xi)| f * xi).sum();
            if float::abs(2.0 * dot + norm_sq) < eps {
                hits.push(b.index());
            }
        }
        integer_rank(&hits)
    }
}

/// Classify a lattice point with `c_1 rho < |gamma| < c_2 rho`.
pub fn classify(
    gamma: &LatticeVector,
    params: &AsymptoticParams,
    geometry: &BoxGeometry,
) -> Result<Classification, CoreError> {
    let scanner = WitnessScanner::new(geometry, params)?;
    classify_with(gamma, params, geometry, &scanner)
}

/// Classification against a prebuilt scanner (for classifying many points).
pub fn classify_with(
    gamma: &LatticeVector,
    params: &AsymptoticParams,
    geometry: &BoxGeometry,
    scanner: &WitnessScanner,
) -> Result<Classification, CoreError> {
    let norm = gamma.norm(geometry);
    let (c1, c2) = params.shell();
    if !params.in_shell(norm) {
        return Err(CoreError::Domain(format!(
            "|gamma| = {norm} outside the shell ({} , {})",
            c1 * params.rho(),
            c2 * params.rho()
        )));
    }
    let x = gamma.frequency(geometry);
    let eps1 = params.rho_alpha_k(1);
    let eps2 = params.rho_alpha_k(2);

    let witnesses: Vec<LatticeVector> = scanner.witnesses(&x, eps1).into_iter().cloned().collect();
    if witnesses.is_empty() {
        return Ok(Classification {
            class: DomainClass::NonResonance,
            witnesses,
        });
    }

    let rank2 = scanner.primitive_witness_rank(&x, eps2);
    if rank2 >= 2 {
        return Ok(Classification {
            class: DomainClass::HigherResonance { order: rank2 },
            witnesses,
        });
    }

    // Which coordinate directions witness gamma at level alpha_1?
    let dim = geometry.dim();
    let mut best: Option<(f64, usize)> = None;
    for axis in 0..dim {
        let step = geometry.frequency_step(axis);
        let gap = float::abs(2.0 * x[axis] * step + step * step);
        if gap < eps1 {
            let better = match best {
                None => true,
                Some((bg, _)) => gap < bg,
            };
            if better {
                best = Some((gap, axis));
            }
        }
    }
    let Some((_, axis)) = best else {
        // resonant, but with no coordinate direction
        return Ok(Classification {
            class: DomainClass::HigherResonance { order: 2 },
            witnesses,
        });
    };
    let direction = Direction::new(axis, dim)?;
    let (j, beta) = decompose(gamma, direction);

    // single-resonance bounds: |j| < r_1 and |beta^k| > rho^{alpha_1}/3
    let r1 = params.r1(direction.norm(geometry));
    let bounds_ok = (float::abs(j as f64) < r1)
        && beta
            .frequency(geometry)
            .iter()
            .enumerate()
            .all(|(k, &f)| k == axis || float::abs(f) > eps1 / 3.0);
    if !bounds_ok {
        return Ok(Classification {
            class: DomainClass::HigherResonance { order: 2 },
            witnesses,
        });
    }

    Ok(Classification {
        class: DomainClass::SingleResonance { direction, j, beta },
        witnesses,
    })
}

/// Monte Carlo estimate of the single-resonance measure fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureEstimate {
    /// `mu((V_delta \ E_2) in shell) / mu(V_delta in shell)`.
    pub ratio: f64,
    /// Attempts that landed in the shell (the denominator count).
    pub accepted: u64,
    /// Accepted samples that fell in the second-order set.
    pub excluded: u64,
    /// Binomial standard error `sqrt(r (1-r) / accepted)`.
    pub standard_error: f64,
}

/// Rejection sampling of real points in
/// `{c_1 rho < |x| < c_2 rho} intersect V_delta(rho^{alpha_1})`:
/// the slab coordinate is drawn uniformly from the slab interval, the
/// orthogonal coordinates uniformly from `[-c_2 rho, c_2 rho]`. Each attempt
/// draws from its own counter-derived generator, so the result depends only
/// on `(seed, samples)`.
pub fn estimate_measure_ratio(
    delta: Direction,
    params: &AsymptoticParams,
    geometry: &BoxGeometry,
    samples: u64,
    seed: u64,
) -> Result<MeasureEstimate, CoreError> {
    if samples == 0 {
        return Err(CoreError::Params("samples must be >= 1".into()));
    }
    let scanner = WitnessScanner::new(geometry, params)?;
    let dim = geometry.dim();
    let axis = delta.axis();
    let dn = delta.norm(geometry);
    let eps1 = params.rho_alpha_k(1);
    let eps2 = params.rho_alpha_k(2);
    let (c1, c2) = params.shell();
    let rho = params.rho();
    // slab: |2 x_axis dn + dn^2| < eps1
    let slab_lo = (-dn * dn - eps1) / (2.0 * dn);
    let slab_hi = (-dn * dn + eps1) / (2.0 * dn);
    let box_half = c2 * rho;

    let mut accepted = 0u64;
    let mut excluded = 0u64;
    let mut x = alloc::vec![0.0f64; dim];
    for attempt in 0..samples {
        let mut rng = SplitMix64::substream(seed, attempt);
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = if k == axis {
                rng.next_in(slab_lo, slab_hi)
            } else {
                rng.next_in(-box_half, box_half)
            };
        }
        let norm = float::sqrt(x.iter().map(|v| v * v).sum());
        if !(c1 * rho < norm && norm < c2 * rho) {
            continue;
        }
        accepted += 1;
        if scanner.in_second_order(&x, eps2) {
            excluded += 1;
        }
    }
    if accepted == 0 {
        return Err(CoreError::InsufficientSamples);
    }
    let ratio = (accepted - excluded) as f64 / accepted as f64;
    let standard_error = float::sqrt(ratio * (1.0 - ratio) / accepted as f64);
    Ok(MeasureEstimate {
        ratio,
        accepted,
        excluded,
        standard_error,
    })
}
