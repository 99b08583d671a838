//! Matrix potentials as Fourier data over the dual lattice.
//!
//! Storage convention: coefficients live on nonnegative orbit
//! representatives, and the stored matrix `C_gamma` is the coefficient of
//! the plain cosine product `u_gamma` in the collapsed expansion
//!
//! ```text
//! v_ij(x) = sum_{gamma rep} C_gamma[i][j] u_gamma(x),
//! u_gamma(x) = prod_k cos(n_k pi x_k / a_k).
//! ```
//!
//! The full-lattice coefficient of the same orbit (the value of the
//! defining integral `(1/mu(F)) (v, u_gamma)`) is `C_gamma / |A_gamma|`;
//! the orthonormal-basis coefficient against
//! `u_hat = sqrt(|A_gamma|/mu(F)) u_gamma` is
//! `C_gamma sqrt(mu(F)/|A_gamma|)`. Conversions happen at the few places
//! that need them (coupling table, Galerkin assembly).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::SymMatrix;
use crate::error::CoreError;
use crate::float;
use crate::geometry::BoxGeometry;
use crate::lattice::{build_lattice_representatives, Direction, LatticeVector};
use crate::params::AsymptoticParams;
use crate::rng::SplitMix64;

/// Real symmetric matrix potential, finitely supported Fourier data.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFourierPotential {
    geometry: BoxGeometry,
    m: usize,
    l: u32,
    coefficients: BTreeMap<LatticeVector, SymMatrix>,
}

/// Weighted coefficient sums: `S_ij = sum |v_ijg|^2 (1+|g|^{2l})` and the
/// absolute mass `M_ij = sum |v_ijg|`, both over stored orbits.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub weighted_sums: SymMatrix,
    pub mass: SymMatrix,
}

/// Discarded-mass report from [`MatrixFourierPotential::truncate`].
#[derive(Debug, Clone)]
pub struct TruncationReport {
    /// Entrywise l2 norm of the discarded coefficients.
    pub tail_l2: SymMatrix,
    /// Cauchy-Schwarz bound `sqrt(S_ij) * rho^(-p alpha)`.
    pub tail_bound: SymMatrix,
    pub kept_orbits: usize,
    pub discarded_orbits: usize,
}

impl MatrixFourierPotential {
    pub fn new(
        geometry: BoxGeometry,
        m: usize,
        l: u32,
        coefficients: BTreeMap<LatticeVector, SymMatrix>,
    ) -> Result<Self, CoreError> {
        if m < 2 {
            return Err(CoreError::Contract(format!(
                "matrix size m must be >= 2, got {m}"
            )));
        }
        for (idx, mat) in &coefficients {
            if idx.dim() != geometry.dim() {
                return Err(CoreError::Contract(format!(
                    "coefficient index {:?} has dimension {}, geometry has {}",
                    idx.index(),
                    idx.dim(),
                    geometry.dim()
                )));
            }
            if !idx.is_rep() {
                return Err(CoreError::Contract(format!(
                    "coefficient index {:?} is not a nonnegative orbit representative",
                    idx.index()
                )));
            }
            if mat.dim() != m {
                return Err(CoreError::Contract(format!(
                    "coefficient matrix at {:?} has size {}, expected {m}",
                    idx.index(),
                    mat.dim()
                )));
            }
            if !mat.is_symmetric() {
                return Err(CoreError::Contract(format!(
                    "coefficient matrix at {:?} is not exactly symmetric",
                    idx.index()
                )));
            }
        }
        Ok(Self {
            geometry,
            m,
            l,
            coefficients,
        })
    }

    /// Separable potential `V(x) = P(x . delta)` built from a directional one.
    pub fn from_directional(
        p: &DirectionalPotential,
        geometry: BoxGeometry,
        l: u32,
    ) -> Result<Self, CoreError> {
        let axis = p.delta().axis();
        let dim = geometry.dim();
        let mut coefficients = BTreeMap::new();
        for (n, mat) in p.coefficients().iter().enumerate() {
            let mut idx = vec![0i64; dim];
            idx[axis] = n as i64;
            coefficients.insert(LatticeVector::new(idx), mat.clone());
        }
        Self::new(geometry, p.m(), l, coefficients)
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn coefficients(&self) -> &BTreeMap<LatticeVector, SymMatrix> {
        &self.coefficients
    }

    pub fn coefficient(&self, idx: &LatticeVector) -> Option<&SymMatrix> {
        self.coefficients.get(idx)
    }

    /// Largest `|gamma|` carrying a stored orbit.
    pub fn support_radius(&self) -> f64 {
        self.coefficients
            .keys()
            .map(|g| g.norm(&self.geometry))
            .fold(0.0, float::max)
    }

    /// Upper bound for `sup_x ||V(x)||_2` by the triangle inequality:
    /// the sum of spectral norms of the stored (collapsed) coefficients.
    pub fn sup_norm_bound(&self) -> f64 {
        self.coefficients
            .values()
            .map(SymMatrix::spectral_norm)
            .sum()
    }

    /// Entrywise weighted sums `S_ij` and mass `M_ij` over stored orbits.
    pub fn validate_decay(&self) -> DecayReport {
        let mut s = SymMatrix::zeros(self.m);
        let mut mass = SymMatrix::zeros(self.m);
        for (idx, mat) in &self.coefficients {
            let g2 = idx.norm_sq(&self.geometry);
            let weight = 1.0 + float::powi(g2, self.l as i32); // |g|^{2l} = (|g|^2)^l
            for i in 0..self.m {
                for j in i..self.m {
                    let v = mat.get(i, j);
                    s.add(i, j, v * v * weight);
                    mass.add(i, j, float::abs(v));
                }
            }
        }
        DecayReport {
            weighted_sums: s,
            mass,
        }
    }

    /// Keeps orbits with `|gamma| < rho^alpha` and reports the discarded
    /// tail together with its Cauchy-Schwarz bound.
    pub fn truncate(
        &self,
        params: &AsymptoticParams,
    ) -> Result<(Self, TruncationReport), CoreError> {
        let radius = params.rho_alpha();
        let decay = self.validate_decay();
        let mut kept = BTreeMap::new();
        let mut tail_sq = SymMatrix::zeros(self.m);
        let mut discarded = 0usize;
        for (idx, mat) in &self.coefficients {
            if idx.norm(&self.geometry) < radius {
                kept.insert(idx.clone(), mat.clone());
            } else {
                discarded += 1;
                for i in 0..self.m {
                    for j in i..self.m {
                        let v = mat.get(i, j);
                        tail_sq.add(i, j, v * v);
                    }
                }
            }
        }
        let mut tail_l2 = SymMatrix::zeros(self.m);
        let mut tail_bound = SymMatrix::zeros(self.m);
        let rho_neg_pa = float::powf(params.rho(), -(params.p() as f64) * params.alpha());
        for i in 0..self.m {
            for j in i..self.m {
                let t = float::sqrt(tail_sq.get(i, j));
                let k = float::sqrt(decay.weighted_sums.get(i, j));
                let bound = k * rho_neg_pa;
                tail_l2.set(i, j, t);
                tail_bound.set(i, j, bound);
                if t > bound * (1.0 + 1e-12) {
                    return Err(CoreError::Contract(format!(
                        "truncation tail {t:e} exceeds its Cauchy-Schwarz bound {bound:e} at ({i},{j})"
                    )));
                }
            }
        }
        let kept_orbits = kept.len();
        let truncated = Self {
            geometry: self.geometry.clone(),
            m: self.m,
            l: self.l,
            coefficients: kept,
        };
        Ok((
            truncated,
            TruncationReport {
                tail_l2,
                tail_bound,
                kept_orbits,
                discarded_orbits: discarded,
            },
        ))
    }

    /// Extract the coefficients on the ray `delta Z`: the sequence
    /// `P_n = C_{n delta}` defining `P(s) = sum_{n>=0} P_n cos(n s)`.
    pub fn directional_part(&self, delta: Direction) -> DirectionalPotential {
        let axis = delta.axis();
        let mut n_max = 0usize;
        for idx in self.coefficients.keys() {
            if on_ray(idx, axis) {
                n_max = core::cmp::max(n_max, idx.index()[axis] as usize);
            }
        }
        let mut coeffs = vec![SymMatrix::zeros(self.m); n_max + 1];
        for (idx, mat) in &self.coefficients {
            if on_ray(idx, axis) {
                coeffs[idx.index()[axis] as usize] = mat.clone();
            }
        }
        DirectionalPotential {
            delta,
            delta_norm: delta.norm(&self.geometry),
            m: self.m,
            coeffs,
        }
    }

    /// Everything not on the ray `delta Z`; together with
    /// [`Self::directional_part`] this reassembles the stored map exactly.
    pub fn off_ray_remainder(&self, delta: Direction) -> Self {
        let axis = delta.axis();
        let coefficients = self
            .coefficients
            .iter()
            .filter(|(idx, _)| !on_ray(idx, axis))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Self {
            geometry: self.geometry.clone(),
            m: self.m,
            l: self.l,
            coefficients,
        }
    }

    /// Off-ray coupling coefficients `d(beta_1, n_1)` for orbits inside the
    /// `rho^alpha` ball, in the full-lattice convention (the value of the
    /// defining integral), keyed by orbit representatives.
    pub fn coupling_table(
        &self,
        delta: Direction,
        params: &AsymptoticParams,
    ) -> Result<CouplingTable, CoreError> {
        let axis = delta.axis();
        let radius = params.rho_alpha();
        let delta_norm = delta.norm(&self.geometry);
        let r1 = params.r1(delta_norm);
        let p_radius = params.witness_radius();
        let mut entries = BTreeMap::new();
        for (idx, mat) in &self.coefficients {
            if on_ray(idx, axis) || idx.is_zero() {
                continue;
            }
            let norm = idx.norm(&self.geometry);
            if !(norm < radius) {
                continue;
            }
            let n1 = idx.index()[axis];
            let mut beta1_idx = idx.index().to_vec();
            beta1_idx[axis] = 0;
            let beta1 = LatticeVector::new(beta1_idx);
            // membership bounds carried by every key
            let beta1_norm = beta1.norm(&self.geometry);
            if !(beta1_norm < p_radius) || !((n1 as f64) < float::min(p_radius, r1 / 2.0)) {
                return Err(CoreError::Contract(format!(
                    "coupling key (n1={n1}, beta1={:?}) violates its membership bounds",
                    beta1.index()
                )));
            }
            let scale = 1.0 / idx.orbit_size() as f64;
            let mut d = SymMatrix::zeros(self.m);
            for i in 0..self.m {
                for j in i..self.m {
                    d.set(i, j, mat.get(i, j) * scale);
                }
            }
            entries.insert((n1, beta1), d);
        }
        Ok(CouplingTable {
            delta,
            m: self.m,
            radius,
            entries,
        })
    }

    /// Pointwise synthesis `sum_gamma C_gamma u_gamma(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<SymMatrix, CoreError> {
        if !self.geometry.contains(x) {
            return Err(CoreError::Domain(format!("point {x:?} is outside the box")));
        }
        let mut out = SymMatrix::zeros(self.m);
        for (idx, mat) in &self.coefficients {
            let mut u = 1.0;
            for (k, &n) in idx.index().iter().enumerate() {
                u *= float::cos(n as f64 * self.geometry.frequency_step(k) * x[k]);
            }
            for i in 0..self.m {
                for j in i..self.m {
                    out.add(i, j, mat.get(i, j) * u);
                }
            }
        }
        Ok(out)
    }

    /// Deterministic random potential: every stored entry satisfies
    /// `|v_ijg| <= amplitude * (1+|gamma|)^-(l+1)`. The draw scale saturates
    /// at 1/2 so large amplitudes sharpen the tail without inflating the low
    /// modes.
    pub fn generate_random(
        geometry: BoxGeometry,
        seed: u64,
        m: usize,
        l: u32,
        amplitude: f64,
        support_radius: f64,
    ) -> Result<Self, CoreError> {
        let d = geometry.dim();
        let l_min = (d as f64 + 20.0) * (d as f64 - 1.0) / 2.0 + d as f64 + 3.0;
        if !(l as f64 > l_min) {
            return Err(CoreError::Params(format!(
                "decay order l must exceed (d+20)(d-1)/2 + d + 3 = {l_min}, got {l}"
            )));
        }
        if !(amplitude >= 0.0) || !(support_radius >= 0.0) {
            return Err(CoreError::Params(
                "amplitude and support radius must be nonnegative".into(),
            ));
        }
        let mut reps = build_lattice_representatives(&geometry, support_radius + 1.0)?;
        reps.retain(|g| g.norm(&geometry) <= support_radius + 1e-12);
        let mut rng = SplitMix64::new(seed);
        let mut coefficients = BTreeMap::new();
        for rep in reps {
            let norm = rep.norm(&geometry);
            let envelope = amplitude * float::powf(1.0 + norm, -((l as f64) + 1.0));
            let scale = float::min(0.5, envelope);
            let mut mat = SymMatrix::zeros(m);
            for i in 0..m {
                for j in i..m {
                    mat.set(i, j, scale * rng.next_symmetric());
                }
            }
            coefficients.insert(rep, mat);
        }
        Self::new(geometry, m, l, coefficients)
    }
}

fn on_ray(idx: &LatticeVector, axis: usize) -> bool {
    idx.index()
        .iter()
        .enumerate()
        .all(|(k, &n)| k == axis || n == 0)
}

/// The separable part `P(s) = (p_ij(s))`, `s = x . delta in [0, pi]`,
/// stored as `P(s) = sum_{n >= 0} P_n cos(n s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalPotential {
    delta: Direction,
    delta_norm: f64,
    m: usize,
    coeffs: Vec<SymMatrix>,
}

impl DirectionalPotential {
    /// Direct construction; `m >= 1` (the scalar case is useful on its own).
    pub fn new(
        delta: Direction,
        delta_norm: f64,
        m: usize,
        coeffs: Vec<SymMatrix>,
    ) -> Result<Self, CoreError> {
        if m == 0 {
            return Err(CoreError::Contract("m must be >= 1".into()));
        }
        if !(delta_norm > 0.0) {
            return Err(CoreError::Contract(format!(
                "direction norm must be positive, got {delta_norm}"
            )));
        }
        for (n, mat) in coeffs.iter().enumerate() {
            if mat.dim() != m || !mat.is_symmetric() {
                return Err(CoreError::Contract(format!(
                    "coefficient P_{n} must be an exactly symmetric {m}x{m} matrix"
                )));
            }
        }
        Ok(Self {
            delta,
            delta_norm,
            m,
            coeffs,
        })
    }

    pub fn delta(&self) -> Direction {
        self.delta
    }

    /// `|delta| = pi / a_axis`.
    pub fn delta_norm(&self) -> f64 {
        self.delta_norm
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coefficients(&self) -> &[SymMatrix] {
        &self.coeffs
    }

    /// `P_n`, zero beyond the stored range.
    pub fn coeff(&self, n: usize) -> SymMatrix {
        self.coeffs
            .get(n)
            .cloned()
            .unwrap_or_else(|| SymMatrix::zeros(self.m))
    }

    /// Largest stored mode index.
    pub fn bandwidth(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Mean matrix `P_0` (the average of `P(s)` over `[0, pi]`).
    pub fn mean(&self) -> SymMatrix {
        self.coeff(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .all(|m| (0..m.dim()).all(|i| (i..m.dim()).all(|j| m.get(i, j) == 0.0)))
    }

    /// Pointwise value `P(s)`.
    pub fn evaluate(&self, s: f64) -> SymMatrix {
        let mut out = SymMatrix::zeros(self.m);
        for (n, mat) in self.coeffs.iter().enumerate() {
            let c = float::cos(n as f64 * s);
            for i in 0..self.m {
                for j in i..self.m {
                    out.add(i, j, mat.get(i, j) * c);
                }
            }
        }
        out
    }

    /// `sup_s ||P(s)||_2`, the maximum over a uniform grid on `[0, pi]`
    /// (1024 panels; exact for the mean part, a tight lower bound otherwise).
    pub fn sup_norm(&self) -> f64 {
        let grid = 1024usize;
        let mut best = 0.0;
        for i in 0..=grid {
            let s = core::f64::consts::PI * i as f64 / grid as f64;
            best = float::max(best, self.evaluate(s).spectral_norm());
        }
        best
    }
}

/// Off-ray coupling coefficients `d(beta_1, n_1)`, keyed by orbit
/// representatives `(n_1 >= 0, beta_1 rep)`. Values are in the full-lattice
/// convention: `d = C / |A_orbit|`, the value of the defining integral
/// `(1/mu(F)) int v_ij cos(n_1 s) u_beta1 dx`.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    delta: Direction,
    m: usize,
    radius: f64,
    entries: BTreeMap<(i64, LatticeVector), SymMatrix>,
}

impl CouplingTable {
    pub fn delta(&self) -> Direction {
        self.delta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Truncation radius `rho^alpha` the table was built with.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(i64, LatticeVector), &SymMatrix)> {
        self.entries.iter()
    }

    pub fn get(&self, n1: i64, beta1: &LatticeVector) -> Option<&SymMatrix> {
        self.entries.get(&(n1, beta1.clone()))
    }
}
