//! Ground-truth oracle: tensor cosine-Galerkin discretisation of
//! `-Delta + V(x)` on the box, overlap coefficients against the separable
//! comparison problem, and the eigenvalue matching rule.
//!
//! Basis: normalized product cosines `u_hat_gamma e_i` over nonnegative
//! orbit representatives with `|gamma| < cutoff`. Multiplication by one
//! stored potential orbit `nu` couples `gamma` to the representatives of
//! `nu + e o gamma` over sign vectors `e`, with the exact entry
//!
//! ```text
//! C_nu * 2^-d * #{e : rep(nu + e o gamma) = gamma'} * sqrt(|A_gamma| / |A_gamma'|).
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::{eigensolve_symmetric, EigenDecomposition, SymMatrix};
use crate::error::CoreError;
use crate::float;
use crate::geometry::BoxGeometry;
use crate::lattice::{build_lattice_representatives, Direction, LatticeVector};
use crate::params::AsymptoticParams;
use crate::potential::MatrixFourierPotential;
use crate::sturm1d::{Eigenpair1D, EigenpairSet};

/// Product-cosine basis over orbit representatives inside a ball.
#[derive(Debug, Clone)]
pub struct ProductBasis {
    geometry: BoxGeometry,
    m: usize,
    cutoff: f64,
    reps: Vec<LatticeVector>,
    positions: BTreeMap<LatticeVector, usize>,
}

impl ProductBasis {
    /// Enumerates representatives with `|gamma| < cutoff`; errors when
    /// `m * #basis` would exceed `size_cap`.
    pub fn new(
        geometry: BoxGeometry,
        m: usize,
        cutoff: f64,
        size_cap: usize,
    ) -> Result<Self, CoreError> {
        let reps = build_lattice_representatives(&geometry, cutoff)?;
        let size = reps.len() * m;
        if size > size_cap {
            return Err(CoreError::Resource {
                required: size,
                cap: size_cap,
            });
        }
        let positions = reps
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, r)| (r, i))
            .collect();
        Ok(Self {
            geometry,
            m,
            cutoff,
            reps,
            positions,
        })
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Number of lattice representatives (matrix size is `m * len`).
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn size(&self) -> usize {
        self.reps.len() * self.m
    }

    pub fn rep(&self, pos: usize) -> &LatticeVector {
        &self.reps[pos]
    }

    pub fn reps(&self) -> &[LatticeVector] {
        &self.reps
    }

    pub fn position(&self, rep: &LatticeVector) -> Option<usize> {
        self.positions.get(rep).copied()
    }

    #[inline]
    pub fn row(&self, pos: usize, slot: usize) -> usize {
        pos * self.m + slot
    }
}

/// Potential coupling block of the Galerkin matrix (no Laplacian diagonal).
pub fn assemble_potential_coupling(
    v: &MatrixFourierPotential,
    basis: &ProductBasis,
) -> Result<SymMatrix, CoreError> {
    if v.m() != basis.m() {
        return Err(CoreError::Contract(format!(
            "potential has m = {}, basis m = {}",
            v.m(),
            basis.m()
        )));
    }
    let d = basis.geometry().dim();
    let m = basis.m();
    let scale = float::powi(0.5, d as i32);
    let mut a = SymMatrix::zeros(basis.size());
    let mut target_counts: BTreeMap<usize, u32> = BTreeMap::new();
    let mut target_idx = vec![0i64; d];
    for row_pos in 0..basis.len() {
        let gamma = basis.rep(row_pos).clone();
        let a_gamma = gamma.orbit_size() as f64;
        let nz: Vec<usize> = (0..d).filter(|&k| gamma.index()[k] != 0).collect();
        let fixed_weight = 1u32 << (d - nz.len()); // zero components: both signs act alike
        for (nu, mat) in v.coefficients() {
            target_counts.clear();
            for mask in 0..(1u32 << nz.len()) {
                for k in 0..d {
                    target_idx[k] = nu.index()[k] + gamma.index()[k];
                }
                for (bit, &k) in nz.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        target_idx[k] = nu.index()[k] - gamma.index()[k];
                    }
                }
                for t in target_idx.iter_mut() {
                    *t = t.abs();
                }
                let rep = LatticeVector::new(target_idx.clone());
                if let Some(pos) = basis.position(&rep) {
                    if pos >= row_pos {
                        *target_counts.entry(pos).or_insert(0) += fixed_weight;
                    }
                }
            }
            for (&pos, &count) in &target_counts {
                let a_target = basis.rep(pos).orbit_size() as f64;
                let w = scale * count as f64 * float::sqrt(a_gamma / a_target);
                for i in 0..m {
                    let j_lo = if pos == row_pos { i } else { 0 };
                    for j in j_lo..m {
                        let val = mat.get(i, j) * w;
                        if val != 0.0 {
                            a.add(row_pos * m + i, pos * m + j, val);
                        }
                    }
                }
            }
        }
    }
    Ok(a)
}

/// Full Galerkin matrix of `-Delta + V`: `|gamma|^2` blocks plus the
/// potential coupling. Exactly symmetric.
pub fn assemble_l(
    v: &MatrixFourierPotential,
    basis: &ProductBasis,
) -> Result<SymMatrix, CoreError> {
    let mut a = assemble_potential_coupling(v, basis)?;
    let m = basis.m();
    for pos in 0..basis.len() {
        let g2 = basis.rep(pos).norm_sq(basis.geometry());
        for i in 0..m {
            a.add(pos * m + i, pos * m + i, g2);
        }
    }
    Ok(a)
}

/// Full oracle spectrum with its basis bookkeeping.
#[derive(Debug, Clone)]
pub struct FullSpectrum {
    pub basis: ProductBasis,
    dec: EigenDecomposition,
}

impl FullSpectrum {
    pub fn count(&self) -> usize {
        self.dec.values.len()
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.dec.values[n]
    }

    pub fn values(&self) -> &[f64] {
        &self.dec.values
    }

    pub fn psi(&self, n: usize) -> &[f64] {
        self.dec.vector(n)
    }

    pub fn residual(&self, n: usize) -> f64 {
        self.dec.residuals[n]
    }

    pub fn max_residual(&self) -> f64 {
        self.dec.max_residual()
    }
}

/// Assemble and diagonalise `-Delta + V` on the ball basis.
pub fn eigen_full(
    v: &MatrixFourierPotential,
    basis: ProductBasis,
    tol: f64,
) -> Result<FullSpectrum, CoreError> {
    let a = assemble_l(v, &basis)?;
    let dec = eigensolve_symmetric(&a, tol)?;
    Ok(FullSpectrum { basis, dec })
}

/// The comparison eigenfunction `chi_{j,beta} = u_hat_beta phi_hat_j`
/// projected onto the product basis.
#[derive(Debug, Clone)]
pub struct ComparisonVector {
    pub band: usize,
    pub slot: usize,
    pub beta: LatticeVector,
    /// `lambda_{j,beta} = lambda_j + |beta|^2`.
    pub lambda: f64,
    /// Coefficients in the product-basis ordering (in-ball projection).
    pub coeffs: Vec<f64>,
    /// l2 mass of the 1D modes that fall outside the ball.
    pub out_mass: f64,
}

/// Project one labeled 1D eigenpair times `u_hat_beta` onto the ball basis.
/// `beta` must be a nonnegative representative orthogonal to the problem
/// direction.
pub fn comparison_vector(
    set: &EigenpairSet,
    pair: &Eigenpair1D,
    beta: &LatticeVector,
    basis: &ProductBasis,
) -> Result<ComparisonVector, CoreError> {
    let axis = set.delta.axis();
    if beta.dim() != basis.geometry().dim() {
        return Err(CoreError::Contract("beta dimension mismatch".into()));
    }
    if !beta.is_rep() || beta.index()[axis] != 0 {
        return Err(CoreError::Contract(format!(
            "beta {:?} must be a nonnegative representative orthogonal to the direction",
            beta.index()
        )));
    }
    if set.m != basis.m() {
        return Err(CoreError::Contract(
            "1D problem and basis have different m".into(),
        ));
    }
    let m = set.m;
    let mut coeffs = vec![0.0; basis.size()];
    let mut out_sq = 0.0;
    let mut idx = beta.index().to_vec();
    for n in 0..=set.n_trunc {
        idx[axis] = n as i64;
        let rep = LatticeVector::new(idx.clone());
        match basis.position(&rep) {
            Some(pos) => {
                for i in 0..m {
                    coeffs[pos * m + i] = pair.coeff(n, i, m);
                }
            }
            None => {
                for i in 0..m {
                    let c = pair.coeff(n, i, m);
                    out_sq += c * c;
                }
            }
        }
    }
    let lambda = pair.lambda + beta.norm_sq(basis.geometry());
    Ok(ComparisonVector {
        band: pair.band,
        slot: pair.slot,
        beta: beta.clone(),
        lambda,
        coeffs,
        out_mass: float::sqrt(out_sq),
    })
}

/// One overlap row `(N, c, gap)` together with both sides of the binding
/// identity and its computed truncation allowance.
#[derive(Debug, Clone)]
pub struct OverlapRecord {
    pub n_index: usize,
    pub c: f64,
    /// `Lambda_N - lambda_{j,beta}`.
    pub gap: f64,
    /// `(Lambda_N - lambda) c`.
    pub binding_lhs: f64,
    /// `<psi_N, (V-P) chi>` evaluated through the coupling block.
    pub binding_rhs: f64,
    /// `||H_P chi - lambda chi|| + residual_N`; bounds `|lhs - rhs|`.
    pub tail_bound: f64,
}

/// Precomputed matrices for overlap/binding evaluation of one `(V, delta)`.
pub struct OverlapEngine<'a> {
    full: &'a FullSpectrum,
    h_p: SymMatrix,
    h_vp: SymMatrix,
}

impl<'a> OverlapEngine<'a> {
    pub fn new(
        v: &MatrixFourierPotential,
        delta: Direction,
        full: &'a FullSpectrum,
    ) -> Result<Self, CoreError> {
        let p = v.directional_part(delta);
        let p_ext =
            MatrixFourierPotential::from_directional(&p, full.basis.geometry().clone(), v.l())?;
        let h_p = assemble_l(&p_ext, &full.basis)?;
        let w = v.off_ray_remainder(delta);
        let h_vp = assemble_potential_coupling(&w, &full.basis)?;
        Ok(Self { full, h_p, h_vp })
    }

    /// Overlap records for every oracle eigenvalue against one comparison
    /// vector. The binding identity residual `|lhs - rhs|` is bounded by
    /// `tail_bound` up to roundoff; the caller asserts the tolerance.
    pub fn overlaps(&self, chi: &ComparisonVector) -> Vec<OverlapRecord> {
        let w_vp = self.h_vp.matvec(&chi.coeffs);
        let mut p_res = self.h_p.matvec(&chi.coeffs);
        for (r, c) in p_res.iter_mut().zip(&chi.coeffs) {
            *r -= chi.lambda * c;
        }
        let p_res_norm = float::sqrt(p_res.iter().map(|v| v * v).sum());
        let mut out = Vec::with_capacity(self.full.count());
        for n in 0..self.full.count() {
            let psi = self.full.psi(n);
            let c: f64 = psi.iter().zip(&chi.coeffs).map(|(a, b)| a * b).sum();
            let rhs: f64 = psi.iter().zip(&w_vp).map(|(a, b)| a * b).sum();
            let gap = self.full.lambda(n) - chi.lambda;
            out.push(OverlapRecord {
                n_index: n,
                c,
                gap,
                binding_lhs: gap * c,
                binding_rhs: rhs,
                tail_bound: p_res_norm + self.full.residual(n),
            });
        }
        out
    }
}

/// Result of the eigenvalue matching rule.
#[derive(Debug, Clone)]
pub struct MatchResult {
    pub n_index: usize,
    pub c: f64,
    pub gap: f64,
    /// Other candidates whose eigenvalue lies within `1e-9` of the winner
    /// (exposes near-degeneracy).
    pub near_degenerate: Vec<usize>,
}

/// Select the oracle eigenvalue for `(j, beta)`: among records with
/// `|Lambda_N - lambda| < 2 M` pick the largest `|c|`, then require
/// `|c| > rho^(-q alpha)`.
pub fn match_eigenvalue(
    records: &[OverlapRecord],
    m_norm: f64,
    params: &AsymptoticParams,
    j: i64,
    beta: &LatticeVector,
) -> Result<MatchResult, CoreError> {
    let window = 2.0 * m_norm;
    let mut best: Option<&OverlapRecord> = None;
    for rec in records {
        if float::abs(rec.gap) < window {
            let better = match best {
                None => true,
                Some(b) => float::abs(rec.c) > float::abs(b.c),
            };
            if better {
                best = Some(rec);
            }
        }
    }
    let Some(winner) = best else {
        return Err(CoreError::NoMatch {
            j,
            beta: beta.index().to_vec(),
        });
    };
    let c_floor = float::powf(params.rho(), -(params.q() as f64) * params.alpha());
    if !(float::abs(winner.c) > c_floor) {
        return Err(CoreError::NoMatch {
            j,
            beta: beta.index().to_vec(),
        });
    }
    let winner_gap = winner.gap;
    let near_degenerate = records
        .iter()
        .filter(|r| r.n_index != winner.n_index && float::abs(r.gap - winner_gap) < 1e-9)
        .map(|r| r.n_index)
        .collect();
    Ok(MatchResult {
        n_index: winner.n_index,
        c: winner.c,
        gap: winner.gap,
        near_degenerate,
    })
}

/// Oracle cutoff that contains the couplings of every studied point:
/// `max|gamma| + rho^alpha + support radius`, plus a hair of slack.
pub fn containment_cutoff(max_gamma: f64, params: &AsymptoticParams, support_radius: f64) -> f64 {
    max_gamma + params.rho_alpha() + support_radius + 1e-9
}
