//! Scale parameters of the asymptotic machinery: the energy scale `rho`,
//! the exponent ladder `alpha_k = 3^k alpha`, decay order `l` and the derived
//! integers `p`, `q`, `p_2`, plus the radius ladder `r_k = 7 r_{k-1}`.

use alloc::format;

use crate::error::CoreError;
use crate::float;

/// Validated parameter bundle. The shell constants `c_1 < c_2` bounding
/// `|gamma| ~ rho` are not fixed by the theory and live here as
/// configuration (defaults 0.5 and 2.0).
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticParams {
    rho: f64,
    alpha: f64,
    l: u32,
    dim: usize,
    shell_c1: f64,
    shell_c2: f64,
}

impl AsymptoticParams {
    pub fn new(rho: f64, alpha: f64, l: u32, dim: usize) -> Result<Self, CoreError> {
        if dim < 2 {
            return Err(CoreError::Params(format!(
                "dimension must be >= 2, got {dim}"
            )));
        }
        if !(rho > 1.0) || !rho.is_finite() {
            return Err(CoreError::Params(format!(
                "rho must be a finite number > 1, got {rho}"
            )));
        }
        let alpha_max = 1.0 / (dim as f64 + 20.0);
        if !(alpha > 0.0 && alpha < alpha_max) {
            return Err(CoreError::Params(format!(
                "alpha must lie in (0, 1/(d+20)) = (0, {alpha_max}), got {alpha}"
            )));
        }
        // Geometric conditions behind the full-measure claim; implied by the
        // alpha range but asserted numerically on construction.
        let a1 = 3.0 * alpha;
        let a2 = 9.0 * alpha;
        if !(2.0 * a2 - a1 + (dim as f64 + 3.0) * alpha < 1.0) {
            return Err(CoreError::Params(format!(
                "condition 2*alpha_2 - alpha_1 + (d+3)*alpha < 1 failed for alpha={alpha}"
            )));
        }
        if !(a2 > 2.0 * a1) {
            return Err(CoreError::Params(format!(
                "condition alpha_2 > 2*alpha_1 failed for alpha={alpha}"
            )));
        }
        let l_min = (dim as f64 + 20.0) * (dim as f64 - 1.0) / 2.0 + dim as f64 + 3.0;
        if !(l as f64 > l_min) {
            return Err(CoreError::Params(format!(
                "decay order l must exceed (d+20)(d-1)/2 + d + 3 = {l_min}, got {l}"
            )));
        }
        Ok(Self {
            rho,
            alpha,
            l,
            dim,
            shell_c1: 0.5,
            shell_c2: 2.0,
        })
    }

    /// Override the shell constants `c_1 < c_2`.
    pub fn with_shell(mut self, c1: f64, c2: f64) -> Result<Self, CoreError> {
        if !(0.0 < c1 && c1 < c2) {
            return Err(CoreError::Params(format!(
                "shell constants must satisfy 0 < c1 < c2, got ({c1}, {c2})"
            )));
        }
        self.shell_c1 = c1;
        self.shell_c2 = c2;
        Ok(self)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self, CoreError> {
        let mut p = Self::new(rho, self.alpha, self.l, self.dim)?;
        p.shell_c1 = self.shell_c1;
        p.shell_c2 = self.shell_c2;
        Ok(p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shell(&self) -> (f64, f64) {
        (self.shell_c1, self.shell_c2)
    }

    /// `alpha_k = 3^k alpha`. Defined for `k <= max(2, d-1)`: the exponent
    /// `alpha_2` is used by the second-order resonance set for every `d >= 2`.
    pub fn alpha_k(&self, k: u32) -> f64 {
        debug_assert!(k >= 1 && (k as usize) <= core::cmp::max(2, self.dim - 1));
        float::powi(3.0, k as i32) * self.alpha
    }

    /// `p = l - d`.
    pub fn p(&self) -> u32 {
        self.l - self.dim as u32
    }

    /// `q = floor(d / (2 alpha)) + 2`, so that `q*alpha = (floor(d/(2a))+2)a`.
    pub fn q(&self) -> u32 {
        float::floor(self.dim as f64 / (2.0 * self.alpha)) as u32 + 2
    }

    /// `p_2 = floor(d / (2 alpha_2)) + 1`.
    pub fn p2(&self) -> u32 {
        float::floor(self.dim as f64 / (2.0 * self.alpha_k(2))) as u32 + 1
    }

    /// `rho^alpha` (truncation radius of the coupling data).
    pub fn rho_alpha(&self) -> f64 {
        float::powf(self.rho, self.alpha)
    }

    /// `rho^{alpha_k}`.
    pub fn rho_alpha_k(&self, k: u32) -> f64 {
        float::powf(self.rho, self.alpha_k(k))
    }

    /// Witness scan radius `p * rho^alpha`.
    pub fn witness_radius(&self) -> f64 {
        self.p() as f64 * self.rho_alpha()
    }

    /// `r_1 = rho^{alpha_1} |delta|^{-2} + 1` for a direction of norm
    /// `delta_norm`.
    pub fn r1(&self, delta_norm: f64) -> f64 {
        self.rho_alpha_k(1) / (delta_norm * delta_norm) + 1.0
    }

    /// `r_k = 7^{k-1} r_1`, monotone increasing in `k`.
    pub fn r_k(&self, k: u32, delta_norm: f64) -> f64 {
        debug_assert!(k >= 1);
        float::powi(7.0, k as i32 - 1) * self.r1(delta_norm)
    }

    /// Shell test `c_1 rho < |gamma| < c_2 rho` (strict, the sets are open).
    pub fn in_shell(&self, norm: f64) -> bool {
        self.shell_c1 * self.rho < norm && norm < self.shell_c2 * self.rho
    }
}
