//! Iterated eigenvalue corrections in a single resonance domain: effective
//! couplings between comparison modes, the return-path sums `S_k'`, the
//! residual sums `C_k'`, the correction recursion `E_s`, and the auxiliary
//! vectors `h_i`.
//!
//! Comparison states are indexed at function level by [`ChiIndex`]
//! `(band, slot, beta)`; the coupling between two states is the exact inner
//! product `<(V-P) chi_src, chi_tgt>` in the orthonormal basis, evaluated as
//! the triple sum over coupling keys, signed 1D shifts `n_1`, and cosine
//! modes `|n| < 2r`. Sign-symmetrized 1D coefficients carry the weight
//! `tau_0 = 1`, `tau_n = 1/sqrt(2)`, which reproduces the Galerkin matrix
//! elements of the full operator exactly (a unit test pins this).
//!
//! Path sums are enumerated depth-first with two cost controls recorded in
//! every report: a band half-width cap and a magnitude pruning threshold.
//! Contributions decay super-exponentially in the band shift, so both
//! truncations sit far below the retained terms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::error::CoreError;
use crate::float::{self, KahanSum};
use crate::geometry::BoxGeometry;
use crate::lattice::LatticeVector;
use crate::params::AsymptoticParams;
use crate::potential::CouplingTable;
use crate::sturm1d::EigenpairSet;

/// Function-level index of a comparison state `chi_{j,beta}`:
/// band label, slot within the band, and the orthogonal part as a
/// nonnegative representative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChiIndex {
    pub band: usize,
    pub slot: usize,
    pub beta: LatticeVector,
}

impl ChiIndex {
    pub fn new(band: usize, slot: usize, beta: LatticeVector) -> Self {
        Self { band, slot, beta }
    }
}

/// Cost controls for the path enumeration.
#[derive(Debug, Clone)]
pub struct PathOptions {
    /// Truncation of the `k`-sum (the theory allows up to `2p`).
    pub k_max: u32,
    /// Cap on band labels along paths; couplings beyond it are below the
    /// pruning threshold for every potential this artifact targets.
    pub band_halfwidth: usize,
    /// Drop a partial path once its magnitude falls below this.
    pub prune: f64,
    /// Spectral-gap floor for the `beta`-neutral guard; `None` estimates it
    /// as the minimum 1D gap over the usable bands.
    pub c18_floor: Option<f64>,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            k_max: 4,
            band_halfwidth: 24,
            prune: 1e-18,
            c18_floor: None,
        }
    }
}

/// Guard and enumeration statistics of one expansion run.
#[derive(Debug, Clone, PartialEq)]
pub struct GuardStats {
    pub min_denominator: f64,
    pub paths_enumerated: u64,
    pub paths_pruned: u64,
    pub k_max_used: u32,
}

impl GuardStats {
    fn new(k_max: u32) -> Self {
        Self {
            min_denominator: f64::INFINITY,
            paths_enumerated: 0,
            paths_pruned: 0,
            k_max_used: k_max,
        }
    }

    fn merge(&mut self, other: &GuardStats) {
        self.min_denominator = float::min(self.min_denominator, other.min_denominator);
        self.paths_enumerated += other.paths_enumerated;
        self.paths_pruned += other.paths_pruned;
    }
}

/// The `E_s` recursion output for one base state.
#[derive(Debug, Clone)]
pub struct ExpansionState {
    pub base: ChiIndex,
    pub lambda_base: f64,
    /// `E_0 = 0, E_1, ..., E_{s_max}`.
    pub e: Vec<f64>,
    /// Per order `s >= 1`: the `S_k'` values summed into `E_s`.
    pub s_terms: Vec<Vec<f64>>,
    /// Per order `s`: the scale `rho^-(s+1) alpha_2` of the next correction.
    pub remainder_estimates: Vec<f64>,
    pub guards: GuardStats,
}

/// Per-state return-path sums `S_1' .. S_k'` from a single enumeration.
#[derive(Debug, Clone)]
pub struct SSums {
    pub s: Vec<f64>,
    pub guards: GuardStats,
}

/// Auxiliary vector `h_i` in the comparison-state representation.
#[derive(Debug, Clone)]
pub struct HVector {
    pub power: u32,
    pub coeffs: BTreeMap<ChiIndex, f64>,
    pub norm: f64,
}

/// Shared data for expansions over one `(P spectrum, coupling table)` pair.
pub struct ExpansionContext<'a> {
    pairs: &'a EigenpairSet,
    table: &'a CouplingTable,
    params: &'a AsymptoticParams,
    geometry: &'a BoxGeometry,
    options: PathOptions,
    /// pairs index per band (slot order), up to the usable range.
    band_index: Vec<Vec<usize>>,
    halfwidth: usize,
    c18: f64,
    axis: usize,
    delta_norm: f64,
}

impl<'a> ExpansionContext<'a> {
    pub fn new(
        pairs: &'a EigenpairSet,
        table: &'a CouplingTable,
        params: &'a AsymptoticParams,
        geometry: &'a BoxGeometry,
        options: PathOptions,
    ) -> Result<Self, CoreError> {
        if pairs.m != table.m() {
            return Err(CoreError::Contract(
                "1D spectrum and coupling table have different m".into(),
            ));
        }
        if pairs.delta != table.delta() {
            return Err(CoreError::Contract(
                "1D spectrum and coupling table use different directions".into(),
            ));
        }
        let trusted = pairs.n_trunc / 2;
        let halfwidth = core::cmp::min(options.band_halfwidth, trusted);
        let mut band_index = vec![Vec::new(); halfwidth + 1];
        for (i, p) in pairs.pairs.iter().enumerate() {
            if p.band <= halfwidth {
                band_index[p.band].push(i);
            }
        }
        for (b, ids) in band_index.iter().enumerate() {
            if ids.len() != pairs.m {
                return Err(CoreError::Coverage {
                    band: b,
                    available: ids.len(),
                });
            }
        }
        // empirical spectral-gap floor over the usable bands
        let c18 = match options.c18_floor {
            Some(v) => v,
            None => {
                let mut lambdas: Vec<f64> = band_index
                    .iter()
                    .flat_map(|ids| ids.iter().map(|&i| pairs.pairs[i].lambda))
                    .collect();
                lambdas.sort_by(f64::total_cmp);
                let mut gap = f64::INFINITY;
                for w in lambdas.windows(2) {
                    let d = w[1] - w[0];
                    if d > 0.0 {
                        gap = float::min(gap, d);
                    }
                }
                if gap.is_finite() {
                    gap
                } else {
                    1.0
                }
            }
        };
        Ok(Self {
            pairs,
            table,
            params,
            geometry,
            options,
            band_index,
            halfwidth,
            c18,
            axis: pairs.delta.axis(),
            delta_norm: pairs.delta_norm,
        })
    }

    pub fn options(&self) -> &PathOptions {
        &self.options
    }

    /// Effective band cap after clamping to the trusted spectral range.
    pub fn band_halfwidth(&self) -> usize {
        self.halfwidth
    }

    /// The spectral-gap floor `c_18` in use.
    pub fn c18(&self) -> f64 {
        self.c18
    }

    fn pair(&self, idx: &ChiIndex) -> Result<&crate::sturm1d::Eigenpair1D, CoreError> {
        let ids = self.band_index.get(idx.band).ok_or(CoreError::Coverage {
            band: idx.band,
            available: self.halfwidth,
        })?;
        let &i = ids.get(idx.slot).ok_or(CoreError::Coverage {
            band: idx.band,
            available: ids.len(),
        })?;
        Ok(&self.pairs.pairs[i])
    }

    /// `lambda_{j,beta} = lambda_{band,slot} + |beta|^2`.
    pub fn lambda(&self, idx: &ChiIndex) -> Result<f64, CoreError> {
        Ok(self.pair(idx)?.lambda + idx.beta.norm_sq(self.geometry))
    }

    /// Exact orthogonal-coordinate weight of multiplying `u_hat_{src_beta}`
    /// by `u_{b1}` and landing on `u_hat_{tgt_beta}`.
    fn perp_weight(&self, b1: &LatticeVector, src: &LatticeVector, tgt: &LatticeVector) -> f64 {
        let d = self.geometry.dim();
        let mut count = 1u64;
        for k in 0..d {
            if k == self.axis {
                continue;
            }
            let b = b1.index()[k];
            let s = src.index()[k];
            let t = tgt.index()[k];
            let c = if s == 0 {
                if b == t {
                    2
                } else {
                    0
                }
            } else {
                let mut c = 0;
                if (b + s).abs() == t {
                    c += 1;
                }
                if (b - s).abs() == t {
                    c += 1;
                }
                c
            };
            if c == 0 {
                return 0.0;
            }
            count *= c as u64;
        }
        let orbit_perp = |v: &LatticeVector| -> f64 {
            let nz = v
                .index()
                .iter()
                .enumerate()
                .filter(|&(k, &n)| k != self.axis && n != 0)
                .count();
            (1u64 << nz) as f64
        };
        let scale = float::powi(0.5, (d - 1) as i32);
        scale * count as f64 * float::sqrt(orbit_perp(src) / orbit_perp(tgt))
    }

    /// Effective coupling `<(V-P) chi_src, chi_tgt>`, as the triple sum over
    /// coupling keys, signed shifts `n_1`, and modes `|n| < 2r`.
    pub fn a_coefficient(&self, src: &ChiIndex, tgt: &ChiIndex, r: f64) -> Result<f64, CoreError> {
        let src_pair = self.pair(src)?;
        let tgt_pair = self.pair(tgt)?;
        let m = self.pairs.m;
        let n_cap = core::cmp::min(float::ceil(2.0 * r) as i64, self.pairs.n_trunc as i64);
        let tau = |n: i64| -> f64 {
            if n == 0 {
                1.0
            } else {
                core::f64::consts::FRAC_1_SQRT_2
            }
        };
        let mut total = 0.0;
        for ((n1_rep, beta1), d_mat) in self.table.entries() {
            let fperp = self.perp_weight(beta1, &src.beta, &tgt.beta);
            if fperp == 0.0 {
                continue;
            }
            // full-lattice value restored to the collapsed 1D convention
            let perp_orbit = beta1.orbit_size() as f64 / if *n1_rep != 0 { 2.0 } else { 1.0 };
            let coeff_scale = perp_orbit;
            let signed: &[i64] = if *n1_rep == 0 {
                &[0]
            } else {
                &[*n1_rep, -*n1_rep]
            };
            // iterate over a stack copy to keep borrowck simple
            let signed_buf = [signed[0], *signed.last().unwrap()];
            let take = if *n1_rep == 0 { 1 } else { 2 };
            let mut orbit_sum = 0.0;
            for &n1 in &signed_buf[..take] {
                let mut g_sum = 0.0;
                let mut n = -n_cap;
                while n <= n_cap {
                    if (n as f64) < 2.0 * r && (-(n as f64)) < 2.0 * r {
                        let ns = n.unsigned_abs() as usize;
                        let nt = (n + n1).unsigned_abs() as usize;
                        if nt <= self.pairs.n_trunc {
                            let w = tau(n) * tau(n + n1);
                            for k in 0..m {
                                let gs = src_pair.coeff(ns, k, m);
                                if gs == 0.0 {
                                    continue;
                                }
                                for i in 0..m {
                                    let gt = tgt_pair.coeff(nt, i, m);
                                    if gt != 0.0 {
                                        g_sum += d_mat.get(i, k) * gs * gt * w;
                                    }
                                }
                            }
                        }
                    }
                    n += 1;
                }
                orbit_sum += g_sum;
            }
            total += fperp * coeff_scale * orbit_sum;
        }
        Ok(total)
    }

    /// Build an expansion for one base state (a classified single-resonance
    /// pair `(j, beta)` with a chosen slot).
    pub fn expansion(&'a self, base: ChiIndex) -> Result<Expansion<'a>, CoreError> {
        let lambda_base = self.lambda(&base)?;
        Ok(Expansion {
            ctx: self,
            base,
            lambda_base,
            memo: RefCell::new(BTreeMap::new()),
        })
    }
}

/// Expansion machinery bound to one base state, with coupling memoisation.
pub struct Expansion<'a> {
    ctx: &'a ExpansionContext<'a>,
    base: ChiIndex,
    lambda_base: f64,
    memo: RefCell<BTreeMap<(ChiIndex, ChiIndex, u64), f64>>,
}

impl<'a> Expansion<'a> {
    pub fn base(&self) -> &ChiIndex {
        &self.base
    }

    pub fn lambda_base(&self) -> f64 {
        self.lambda_base
    }

    fn a_cached(&self, src: &ChiIndex, tgt: &ChiIndex, r: f64) -> Result<f64, CoreError> {
        let key = (src.clone(), tgt.clone(), r.to_bits());
        if let Some(&v) = self.memo.borrow().get(&key) {
            return Ok(v);
        }
        let v = self.ctx.a_coefficient(src, tgt, r)?;
        self.memo.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// Candidate step targets from `from` within the level radius `r_k`,
    /// in deterministic order. The band shift obeys `|j_1 delta| < 6 r_k`.
    fn step_targets(&self, from: &ChiIndex, r_k: f64) -> Vec<ChiIndex> {
        let ctx = self.ctx;
        let mut betas: Vec<LatticeVector> = Vec::new();
        for ((_n1, b1), _) in ctx.table.entries() {
            // fold b1 onto from.beta over orthogonal sign choices
            let d = ctx.geometry.dim();
            let perp: Vec<usize> = (0..d)
                .filter(|&k| k != ctx.axis && from.beta.index()[k] != 0)
                .collect();
            for mask in 0..(1u32 << perp.len()) {
                let mut idx: Vec<i64> = (0..d)
                    .map(|k| {
                        if k == ctx.axis {
                            0
                        } else {
                            b1.index()[k] + from.beta.index()[k]
                        }
                    })
                    .collect();
                for (bit, &k) in perp.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        idx[k] = b1.index()[k] - from.beta.index()[k];
                    }
                }
                for v in idx.iter_mut() {
                    *v = v.abs();
                }
                let rep = LatticeVector::new(idx);
                if !betas.contains(&rep) {
                    betas.push(rep);
                }
            }
        }
        betas.sort();
        let band_shift = float::ceil(6.0 * r_k / ctx.delta_norm) as i64;
        let lo = (from.band as i64 - band_shift).max(0);
        let hi = (from.band as i64 + band_shift).min(ctx.halfwidth as i64);
        let mut out = Vec::new();
        for beta in betas {
            let mut b = lo;
            while b <= hi {
                if ((b - from.band as i64).abs() as f64) * ctx.delta_norm < 6.0 * r_k {
                    for slot in 0..ctx.pairs.m {
                        out.push(ChiIndex::new(b as usize, slot, beta.clone()));
                    }
                }
                b += 1;
            }
        }
        out
    }

    fn guard(&self, node: &ChiIndex, denom: f64, stats: &mut GuardStats) -> Result<(), CoreError> {
        let floor = if node.beta != self.base.beta {
            0.5 * self.ctx.params.rho_alpha_k(2)
        } else {
            0.5 * self.ctx.c18
        };
        let mag = float::abs(denom);
        stats.min_denominator = float::min(stats.min_denominator, mag);
        if mag <= floor {
            return Err(CoreError::SmallDenominator {
                j: node.band as i64,
                beta: node.beta.index().to_vec(),
                denominator: mag,
                floor,
            });
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        depth: u32,
        k_max: u32,
        node: &ChiIndex,
        partial: f64,
        lambda_arg: f64,
        close_sums: &mut [KahanSum],
        stats: &mut GuardStats,
    ) -> Result<(), CoreError> {
        // close the path back to the base: step depth+1 uses radius r_{depth+1}
        let r_close = self.ctx.params.r_k(depth + 1, self.ctx.delta_norm);
        let band_gap =
            (node.band as i64 - self.base.band as i64).unsigned_abs() as f64 * self.ctx.delta_norm;
        if band_gap < 6.0 * r_close {
            let a_close = self.a_cached(node, &self.base, r_close)?;
            if a_close != 0.0 {
                close_sums[(depth - 1) as usize].add(partial * a_close);
                stats.paths_enumerated += 1;
            }
        }
        if depth == k_max {
            return Ok(());
        }
        let r_next = self.ctx.params.r_k(depth + 1, self.ctx.delta_norm);
        for target in self.step_targets(node, r_next) {
            if target == self.base {
                continue;
            }
            let a_step = self.a_cached(node, &target, r_next)?;
            let trial = partial * a_step;
            if float::abs(trial) < self.ctx.options.prune {
                if a_step != 0.0 {
                    stats.paths_pruned += 1;
                }
                continue;
            }
            let denom = lambda_arg - self.ctx.lambda(&target)?;
            self.guard(&target, denom, stats)?;
            self.dfs(
                depth + 1,
                k_max,
                &target,
                trial / denom,
                lambda_arg,
                close_sums,
                stats,
            )?;
        }
        Ok(())
    }

    /// All return-path sums `S_1'(Lambda, .) .. S_kmax'(Lambda, .)` from one
    /// depth-first enumeration. Per first-step branch the contributions are
    /// compensated in a fixed order; branch subtotals are then combined in
    /// descending magnitude with compensation.
    pub fn s_sums(&self, lambda_arg: f64, k_max: u32) -> Result<SSums, CoreError> {
        let p2 = 2 * self.ctx.params.p();
        if k_max == 0 || k_max > p2 {
            return Err(CoreError::Params(format!(
                "k must satisfy 1 <= k <= 2p = {p2}, got {k_max}"
            )));
        }
        let r1 = self.ctx.params.r_k(1, self.ctx.delta_norm);
        let mut branch_totals: Vec<Vec<f64>> = vec![Vec::new(); k_max as usize];
        let mut stats = GuardStats::new(k_max);
        for first in self.step_targets(&self.base, r1) {
            if first == self.base {
                continue;
            }
            let a0 = self.a_cached(&self.base, &first, r1)?;
            if float::abs(a0) < self.ctx.options.prune {
                if a0 != 0.0 {
                    stats.paths_pruned += 1;
                }
                continue;
            }
            let denom = lambda_arg - self.ctx.lambda(&first)?;
            let mut branch_stats = GuardStats::new(k_max);
            self.guard(&first, denom, &mut branch_stats)
                .inspect_err(|_| stats.merge(&branch_stats))?;
            let mut close_sums = vec![KahanSum::new(); k_max as usize];
            self.dfs(
                1,
                k_max,
                &first,
                a0 / denom,
                lambda_arg,
                &mut close_sums,
                &mut branch_stats,
            )?;
            stats.merge(&branch_stats);
            for (k, sum) in close_sums.iter().enumerate() {
                branch_totals[k].push(sum.value());
            }
        }
        let s = branch_totals
            .into_iter()
            .map(|mut vals| {
                vals.sort_by(|a, b| float::abs(*b).total_cmp(&float::abs(*a)));
                let mut acc = KahanSum::new();
                for v in vals {
                    acc.add(v);
                }
                acc.value()
            })
            .collect();
        Ok(SSums { s, guards: stats })
    }

    /// Single `S_k'` value (evaluates the enumeration at depth `k`).
    pub fn s_k(&self, k: u32, lambda_arg: f64) -> Result<f64, CoreError> {
        let sums = self.s_sums(lambda_arg, k)?;
        Ok(sums.s[(k - 1) as usize])
    }

    /// `sum_Q |A(base -> base + step)|` over the first-level index set.
    pub fn a_sum_over_q(&self) -> Result<f64, CoreError> {
        let r1 = self.ctx.params.r_k(1, self.ctx.delta_norm);
        let mut total = KahanSum::new();
        for target in self.step_targets(&self.base, r1) {
            if target.beta == self.base.beta {
                continue; // Q requires beta_1 != 0
            }
            let a = self.a_cached(&self.base, &target, r1)?;
            total.add(float::abs(a));
        }
        Ok(total.value())
    }

    /// The correction recursion `E_0 = 0`,
    /// `E_s = sum_k S_k'(E_{s-1} + lambda_base, lambda_base)`.
    pub fn e_iterate(&self, s_max: u32) -> Result<ExpansionState, CoreError> {
        if s_max == 0 {
            return Err(CoreError::Params("s_max must be >= 1".into()));
        }
        let k_max = core::cmp::min(self.ctx.options.k_max, 2 * self.ctx.params.p());
        let mut e = vec![0.0];
        let mut s_terms = Vec::new();
        let mut remainders = vec![self.ctx.rho_alpha2_pow(1)];
        let mut guards = GuardStats::new(k_max);
        for s in 1..=s_max {
            let arg = self.lambda_base + e[(s - 1) as usize];
            let sums = self.s_sums(arg, k_max)?;
            guards.merge(&sums.guards);
            let mut ordered = sums.s.clone();
            ordered.sort_by(|a, b| float::abs(*b).total_cmp(&float::abs(*a)));
            let mut acc = KahanSum::new();
            for v in ordered {
                acc.add(v);
            }
            e.push(acc.value());
            s_terms.push(sums.s);
            remainders.push(self.ctx.rho_alpha2_pow(s + 1));
        }
        Ok(ExpansionState {
            base: self.base.clone(),
            lambda_base: self.lambda_base,
            e,
            s_terms,
            remainder_estimates: remainders,
            guards,
        })
    }

    /// Auxiliary vectors `h_i`, `i = 1..=i_max`, in the comparison-state
    /// representation, with norms.
    pub fn h_functions(&self, i_max: u32) -> Result<Vec<HVector>, CoreError> {
        let r1 = self.ctx.params.r_k(1, self.ctx.delta_norm);
        let r2 = self.ctx.params.r_k(2, self.ctx.delta_norm);
        let mut out = Vec::new();
        for power in 1..=i_max {
            let mut coeffs: BTreeMap<ChiIndex, f64> = BTreeMap::new();
            let mut stats = GuardStats::new(2);
            for first in self.step_targets(&self.base, r1) {
                if first.beta == self.base.beta {
                    continue;
                }
                let a1 = self.a_cached(&self.base, &first, r1)?;
                if float::abs(a1) < self.ctx.options.prune {
                    continue;
                }
                let gap = self.lambda_base - self.ctx.lambda(&first)?;
                self.guard(&first, gap, &mut stats)?;
                let denom = float::powi(gap, power as i32);
                for second in self.step_targets(&first, r2) {
                    let a2 = self.a_cached(&first, &second, r2)?;
                    let w = a1 * a2 / denom;
                    if w != 0.0 {
                        *coeffs.entry(second).or_insert(0.0) += w;
                    }
                }
            }
            coeffs.retain(|_, v| *v != 0.0);
            let norm = float::sqrt(coeffs.values().map(|v| v * v).sum());
            out.push(HVector {
                power,
                coeffs,
                norm,
            });
        }
        Ok(out)
    }

    /// Residual sum `C_k'`: non-returning paths weighted by the oracle
    /// overlaps `c(N, .)` supplied by the caller.
    pub fn c_k_prime(
        &self,
        k: u32,
        lambda_arg: f64,
        c_of: &mut dyn FnMut(&ChiIndex) -> Result<f64, CoreError>,
    ) -> Result<f64, CoreError> {
        if k == 0 {
            return Err(CoreError::Params("k must be >= 1".into()));
        }
        let mut total = KahanSum::new();
        let mut stats = GuardStats::new(k);
        self.c_dfs(
            1, k, &self.base, 1.0, lambda_arg, c_of, &mut total, &mut stats,
        )?;
        Ok(total.value())
    }

    #[allow(clippy::too_many_arguments)]
    fn c_dfs(
        &self,
        depth: u32,
        k: u32,
        node: &ChiIndex,
        partial: f64,
        lambda_arg: f64,
        c_of: &mut dyn FnMut(&ChiIndex) -> Result<f64, CoreError>,
        total: &mut KahanSum,
        stats: &mut GuardStats,
    ) -> Result<(), CoreError> {
        let r_k = self.ctx.params.r_k(depth, self.ctx.delta_norm);
        for target in self.step_targets(node, r_k) {
            if target == self.base {
                continue;
            }
            let a = self.a_cached(node, &target, r_k)?;
            let trial = partial * a;
            if float::abs(trial) < self.ctx.options.prune {
                continue;
            }
            if depth == k + 1 {
                // final hop: no denominator, weight by the overlap
                total.add(trial * c_of(&target)?);
                continue;
            }
            let denom = lambda_arg - self.ctx.lambda(&target)?;
            self.guard(&target, denom, stats)?;
            self.c_dfs(
                depth + 1,
                k,
                &target,
                trial / denom,
                lambda_arg,
                c_of,
                total,
                stats,
            )?;
        }
        Ok(())
    }
}

impl ExpansionContext<'_> {
    fn rho_alpha2_pow(&self, s: u32) -> f64 {
        float::powf(self.params.rho(), -(s as f64) * self.params.alpha_k(2))
    }
}

/// Prediction `Lambda_pred = lambda_base + E_{s-1}` with the error budget
/// `budget_constant * rho^(-s alpha_2)`.
pub fn predict(
    state: &ExpansionState,
    order: u32,
    budget_constant: f64,
    params: &AsymptoticParams,
) -> Result<(f64, f64), CoreError> {
    if order == 0 || (order as usize) > state.e.len() {
        return Err(CoreError::Params(format!(
            "prediction order {order} outside the computed range 1..={}",
            state.e.len().saturating_sub(1).max(1)
        )));
    }
    let lambda_pred = state.lambda_base + state.e[(order - 1) as usize];
    let budget = budget_constant * float::powf(params.rho(), -(order as f64) * params.alpha_k(2));
    Ok((lambda_pred, budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::SymMatrix;
    use crate::lattice::Direction;
    use crate::potential::MatrixFourierPotential;
    use crate::refsolver::{assemble_potential_coupling, comparison_vector, ProductBasis};
    use crate::sturm1d;
    use alloc::collections::BTreeMap as Map;

    fn square_pi() -> BoxGeometry {
        BoxGeometry::new(vec![core::f64::consts::PI, core::f64::consts::PI]).unwrap()
    }

    fn e1() -> Direction {
        Direction::new(0, 2).unwrap()
    }

    fn lv(idx: &[i64]) -> LatticeVector {
        LatticeVector::new(idx.to_vec())
    }

    /// Small test potential: gentle separable part plus off-ray couplings
    /// inside the rho^alpha ball.
    fn test_potential(geom: &BoxGeometry) -> MatrixFourierPotential {
        let mut map = Map::new();
        let mut c0 = SymMatrix::zeros(2);
        c0.set(0, 0, 0.21);
        c0.set(1, 1, -0.13);
        c0.set(0, 1, 0.07);
        map.insert(lv(&[0, 0]), c0);
        let mut c1 = SymMatrix::zeros(2);
        c1.set(0, 0, 0.16);
        c1.set(0, 1, -0.05);
        c1.set(1, 1, 0.09);
        map.insert(lv(&[1, 0]), c1);
        let mut o1 = SymMatrix::zeros(2);
        o1.set(0, 0, 0.23);
        o1.set(0, 1, 0.06);
        o1.set(1, 1, -0.17);
        map.insert(lv(&[0, 1]), o1);
        MatrixFourierPotential::new(geom.clone(), 2, 17, map).unwrap()
    }

    struct Setup {
        geom: BoxGeometry,
        v: MatrixFourierPotential,
        set: EigenpairSet,
        table: CouplingTable,
        params: AsymptoticParams,
    }

    fn setup(rho: f64) -> Setup {
        let geom = square_pi();
        let v = test_potential(&geom);
        let params = AsymptoticParams::new(rho, 0.04, 17, 2).unwrap();
        let p = v.directional_part(e1());
        let set = sturm1d::solve(&p, 64, 1e-12).unwrap();
        let table = v.coupling_table(e1(), &params).unwrap();
        Setup {
            geom,
            v,
            set,
            table,
            params,
        }
    }

    #[test]
    fn a_matches_full_galerkin_matrix_element() {
        // The triple-sum coupling must equal the exact matrix element
        // <(V-P) chi_src, chi_tgt> computed from the assembled coupling
        // block of the full operator.
        let s = setup(20.0);
        let basis = ProductBasis::new(s.geom.clone(), 2, 14.0, 6000).unwrap();
        let w = s.v.off_ray_remainder(e1());
        let h_vp = assemble_potential_coupling(&w, &basis).unwrap();
        let ctx =
            ExpansionContext::new(&s.set, &s.table, &s.params, &s.geom, PathOptions::default())
                .unwrap();
        let cases = [
            (
                ChiIndex::new(0, 0, lv(&[0, 11])),
                ChiIndex::new(0, 0, lv(&[0, 12])),
            ),
            (
                ChiIndex::new(0, 1, lv(&[0, 11])),
                ChiIndex::new(1, 0, lv(&[0, 10])),
            ),
            (
                ChiIndex::new(1, 0, lv(&[0, 11])),
                ChiIndex::new(3, 1, lv(&[0, 12])),
            ),
            (
                ChiIndex::new(2, 1, lv(&[0, 12])),
                ChiIndex::new(2, 0, lv(&[0, 11])),
            ),
        ];
        for (src, tgt) in cases {
            let src_pair = ctx.pair(&src).unwrap().clone();
            let tgt_pair = ctx.pair(&tgt).unwrap().clone();
            let chi_s = comparison_vector(&s.set, &src_pair, &src.beta, &basis).unwrap();
            let chi_t = comparison_vector(&s.set, &tgt_pair, &tgt.beta, &basis).unwrap();
            let w_vec = h_vp.matvec(&chi_s.coeffs);
            let exact: f64 = chi_t.coeffs.iter().zip(&w_vec).map(|(a, b)| a * b).sum();
            // large r so the |n| < 2r cutoff does not bite
            let got = ctx.a_coefficient(&src, &tgt, 40.0).unwrap();
            assert!(
                (got - exact).abs() < 1e-10,
                "A({src:?} -> {tgt:?}) = {got}, exact {exact}"
            );
        }
    }

    #[test]
    fn a_is_zero_for_separable_potential() {
        let geom = square_pi();
        let params = AsymptoticParams::new(20.0, 0.04, 17, 2).unwrap();
        let p = test_potential(&geom).directional_part(e1());
        let v = MatrixFourierPotential::from_directional(&p, geom.clone(), 17).unwrap();
        let set = sturm1d::solve(&p, 64, 1e-12).unwrap();
        let table = v.coupling_table(e1(), &params).unwrap();
        assert!(table.is_empty());
        let ctx =
            ExpansionContext::new(&set, &table, &params, &geom, PathOptions::default()).unwrap();
        let src = ChiIndex::new(0, 0, lv(&[0, 11]));
        let tgt = ChiIndex::new(0, 0, lv(&[0, 12]));
        assert_eq!(ctx.a_coefficient(&src, &tgt, 20.0).unwrap(), 0.0);
        // all corrections vanish identically
        let exp = ctx.expansion(src).unwrap();
        let state = exp.e_iterate(3).unwrap();
        assert_eq!(state.e, vec![0.0, 0.0, 0.0, 0.0]);
        assert_eq!(state.guards.paths_enumerated, 0);
    }

    #[test]
    fn s1_matches_hand_enumerated_sum() {
        // With the dominant couplings to beta +- e2 and the same band, S_1'
        // must reproduce the directly summed two-path expression.
        let s = setup(20.0);
        let ctx =
            ExpansionContext::new(&s.set, &s.table, &s.params, &s.geom, PathOptions::default())
                .unwrap();
        let base = ChiIndex::new(0, 0, lv(&[0, 15]));
        let exp = ctx.expansion(base.clone()).unwrap();
        let lambda = exp.lambda_base();
        let s1 = exp.s_k(1, lambda).unwrap();
        // hand enumeration over all first-step states
        let r1 = s.params.r1(1.0);
        let mut hand = 0.0;
        for target in exp.step_targets(&base, r1) {
            if target == base {
                continue;
            }
            let a_out = ctx.a_coefficient(&base, &target, r1).unwrap();
            let a_back = ctx
                .a_coefficient(&target, &base, s.params.r_k(2, 1.0))
                .unwrap();
            if a_out == 0.0 || a_back == 0.0 {
                continue;
            }
            hand += a_out * a_back / (lambda - ctx.lambda(&target).unwrap());
        }
        assert!(
            (s1 - hand).abs() <= 1e-12 * hand.abs().max(1.0),
            "s1 = {s1}, hand = {hand}"
        );
        assert!(s1 != 0.0);
    }

    #[test]
    fn e_iteration_contracts() {
        let s = setup(20.0);
        let ctx =
            ExpansionContext::new(&s.set, &s.table, &s.params, &s.geom, PathOptions::default())
                .unwrap();
        let base = ChiIndex::new(0, 0, lv(&[0, 15]));
        let exp = ctx.expansion(base).unwrap();
        let state = exp.e_iterate(2).unwrap();
        assert_eq!(state.e[0], 0.0);
        let e1v = state.e[1];
        let e2v = state.e[2];
        assert!(e1v != 0.0);
        assert!((e2v - e1v).abs() < e1v.abs());
        // every evaluated denominator cleared its class floor
        let floor = 0.5 * ctx.c18().min(s.params.rho_alpha_k(2));
        assert!(state.guards.min_denominator > floor);
        // magnitude sits at the predicted scale
        assert!(e1v.abs() <= 10.0 * s.params.rho_alpha_k(2).recip());
        // prediction wiring
        let (pred1, budget1) = predict(&state, 1, 1.0, &s.params).unwrap();
        assert_eq!(pred1, state.lambda_base);
        assert!(budget1 > 0.0);
        let (pred2, _) = predict(&state, 2, 1.0, &s.params).unwrap();
        assert_eq!(pred2, state.lambda_base + e1v);
    }

    #[test]
    fn a_sum_over_q_is_stable_across_rho() {
        let mut values = Vec::new();
        for rho in [10.0, 20.0, 40.0] {
            let s = setup(rho);
            let ctx =
                ExpansionContext::new(&s.set, &s.table, &s.params, &s.geom, PathOptions::default())
                    .unwrap();
            let beta_len = (0.55 * rho).round() as i64;
            let base = ChiIndex::new(0, 0, lv(&[0, beta_len]));
            let exp = ctx.expansion(base).unwrap();
            values.push(exp.a_sum_over_q().unwrap());
        }
        let max = values.iter().cloned().fold(0.0, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
        assert!(max / min <= 2.0, "A-sums {values:?} not stable");
    }

    #[test]
    fn h_functions_vanish_for_separable_and_scale_otherwise() {
        let s = setup(20.0);
        let ctx =
            ExpansionContext::new(&s.set, &s.table, &s.params, &s.geom, PathOptions::default())
                .unwrap();
        let base = ChiIndex::new(0, 0, lv(&[0, 15]));
        let exp = ctx.expansion(base).unwrap();
        let hs = exp.h_functions(s.params.p2()).unwrap();
        assert_eq!(hs.len(), s.params.p2() as usize);
        assert!(hs[0].norm > 0.0);
        // higher inverse powers of the same gaps: norms shrink when the
        // smallest first-level gap exceeds 1
        for w in hs.windows(2) {
            assert!(w[1].norm <= w[0].norm * 2.0);
        }
    }

    #[test]
    fn small_denominator_guard_fires() {
        // Force a guard violation by shifting the evaluation argument onto a
        // first-level state.
        let s = setup(20.0);
        let ctx =
            ExpansionContext::new(&s.set, &s.table, &s.params, &s.geom, PathOptions::default())
                .unwrap();
        let base = ChiIndex::new(0, 0, lv(&[0, 15]));
        let exp = ctx.expansion(base.clone()).unwrap();
        let neighbor = ChiIndex::new(0, 0, lv(&[0, 14]));
        let lam = ctx.lambda(&neighbor).unwrap();
        let err = exp.s_sums(lam, 1).unwrap_err();
        assert!(matches!(err, CoreError::SmallDenominator { .. }));
    }
}
