//! Dense symmetric matrices and their full eigendecomposition.
//!
//! The solver reduces to tridiagonal form with Householder reflections and
//! diagonalises with the implicitly shifted QL iteration, accumulating the
//! transforms (the classic tred2/tql2 pair). Output ordering is
//! deterministic: eigenvalues ascending, ties kept in reduction order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::float;

/// Square symmetric matrix, full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CoreError> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CoreError::Contract(alloc::format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        if !m.is_symmetric() {
            return Err(CoreError::Contract("matrix is not symmetric".into()));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Writes both `(i,j)` and `(j,i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds to both `(i,j)` and `(j,i)` (only once on the diagonal).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, dv: f64) {
        self.data[i * self.n + j] += dv;
        if i != j {
            self.data[j * self.n + i] += dv;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.data[i * self.n + j] != self.data[j * self.n + i] {
                    return false;
                }
            }
        }
        true
    }

    /// Row-sum norm, an upper bound for the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        let mut best = 0.0;
        for i in 0..self.n {
            let s: f64 = self.row(i).iter().map(|&v| float::abs(v)).sum();
            best = float::max(best, s);
        }
        best
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// Spectral norm of a small matrix, via the eigendecomposition.
    pub fn spectral_norm(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        match eigensolve_symmetric(self, 1e-10) {
            Ok(d) => d
                .values
                .iter()
                .fold(0.0, |acc, &v| float::max(acc, float::abs(v))),
            // fall back to the row-sum bound if QL ever fails
            Err(_) => self.inf_norm(),
        }
    }
}

/// Full spectrum of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    n: usize,
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column-major; column `k` pairs with
    /// `values[k]`.
    vectors: Vec<f64>,
    /// Per-pair residuals `||A v - lambda v||_2`.
    pub residuals: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &b| float::max(a, b))
    }

    /// Largest off-diagonal entry of `Q^T Q - I`.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let mut dot = 0.0;
                for k in 0..self.n {
                    dot += self.vectors[i * self.n + k] * self.vectors[j * self.n + k];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = float::max(worst, float::abs(dot - target));
            }
        }
        worst
    }
}

/// Full eigendecomposition with the residual contract
/// `||A v - lambda v|| <= tol * ||A||` checked for every pair.
pub fn eigensolve_symmetric(a: &SymMatrix, tol: f64) -> Result<EigenDecomposition, CoreError> {
    if !(tol > 0.0) {
        return Err(CoreError::Contract(alloc::format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    if !a.is_symmetric() {
        return Err(CoreError::Contract(
            "eigensolve_symmetric requires an exactly symmetric matrix".into(),
        ));
    }
    let n = a.dim();
    if n == 0 {
        return Ok(EigenDecomposition {
            n,
            values: Vec::new(),
            vectors: Vec::new(),
            residuals: Vec::new(),
        });
    }

    let mut work = a.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut work, n, &mut d, &mut e);

    // Column-major accumulation buffer for QL rotations.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[j * n + i] = work[i * n + j];
        }
    }
    tql2(&mut d, &mut e, &mut z, n)?;

    // Deterministic ascending sort.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        vectors[new_col * n..(new_col + 1) * n].copy_from_slice(&z[old_col * n..(old_col + 1) * n]);
    }

    // Residuals against the original matrix, blocked over eigenvectors so
    // each matrix row is loaded once per block.
    const BLOCK: usize = 8;
    let mut residuals = vec![0.0; n];
    let mut res_sq = vec![0.0; n];
    let mut k0 = 0;
    while k0 < n {
        let kb = core::cmp::min(BLOCK, n - k0);
        let mut acc = [0.0f64; BLOCK];
        for i in 0..n {
            let row = a.row(i);
            let mut y = [0.0f64; BLOCK];
            for (j, &aij) in row.iter().enumerate() {
                for (b, yb) in y.iter_mut().enumerate().take(kb) {
                    *yb += aij * vectors[(k0 + b) * n + j];
                }
            }
            for (b, &yb) in y.iter().enumerate().take(kb) {
                let k = k0 + b;
                let r = yb - values[k] * vectors[k * n + i];
                acc[b] += r * r;
            }
        }
        for (b, &a2) in acc.iter().enumerate().take(kb) {
            res_sq[k0 + b] = a2;
        }
        k0 += kb;
    }
    for (r, &s) in residuals.iter_mut().zip(&res_sq) {
        *r = float::sqrt(s);
    }

    let bound = tol * float::max(a.inf_norm(), f64::MIN_POSITIVE);
    let max_res = residuals.iter().fold(0.0, |x, &y| float::max(x, y));
    if max_res > bound {
        return Err(CoreError::Contract(alloc::format!(
            "residual {max_res:e} exceeds tol*||A|| = {bound:e}"
        )));
    }

    Ok(EigenDecomposition {
        n,
        values,
        vectors,
        residuals,
    })
}

/// Householder reduction to tridiagonal form; `a` becomes the accumulated
/// orthogonal transform (row-major), `d` the diagonal, `e` the subdiagonal
/// (in `e[1..]`). The active block is kept fully symmetric so every inner
/// loop sweeps contiguous rows.
fn tred2(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    let mut v = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += float::abs(a[i * n + k]);
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 {
                    -float::sqrt(h)
                } else {
                    float::sqrt(h)
                };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                v[..=l].copy_from_slice(&a[i * n..i * n + l + 1]);
                // p = (A v) / h over the active block, row sweeps
                for ej in e.iter_mut().take(l + 1) {
                    *ej = 0.0;
                }
                for (k, &vk) in v.iter().enumerate().take(l + 1) {
                    if vk != 0.0 {
                        let row = &a[k * n..k * n + l + 1];
                        for (ej, &ajk) in e.iter_mut().zip(row) {
                            *ej += vk * ajk;
                        }
                    }
                }
                let mut f_acc = 0.0;
                for j in 0..=l {
                    e[j] /= h;
                    f_acc += e[j] * v[j];
                    a[j * n + i] = v[j] / h; // back-transform data in column i
                }
                // q = p - (v.p / 2h) v, then A -= v q^T + q v^T
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    e[j] -= hh * v[j];
                }
                for j in 0..=l {
                    let fj = v[j];
                    let gj = e[j];
                    let row = &mut a[j * n..j * n + l + 1];
                    for ((ak, &ek), &vk) in row.iter_mut().zip(&e[..=l]).zip(&v[..=l]) {
                        *ak -= fj * ek + gj * vk;
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    // accumulate the transforms, row-oriented
    let mut g = vec![0.0; n];
    for i in 0..n {
        if d[i] != 0.0 {
            for gj in g.iter_mut().take(i) {
                *gj = 0.0;
            }
            for k in 0..i {
                let vk = a[i * n + k];
                if vk != 0.0 {
                    let row = &a[k * n..k * n + i];
                    for (gj, &akj) in g.iter_mut().zip(row) {
                        *gj += vk * akj;
                    }
                }
            }
            for k in 0..i {
                let f = a[k * n + i];
                if f != 0.0 {
                    let row = &mut a[k * n..k * n + i];
                    for (akj, &gj) in row.iter_mut().zip(&g[..i]) {
                        *akj -= gj * f;
                    }
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicitly shifted QL iteration on a symmetric tridiagonal matrix, with
/// transform accumulation into the column-major `z`.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<(), CoreError> {
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = float::abs(d[m]) + float::abs(d[m + 1]);
                if float::abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(CoreError::Convergence { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = float::pythag(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + float::copysign(r, g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflowed = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = float::pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // rotate columns i and i+1
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let col_i = &mut lo[i * n..];
                let col_i1 = &mut hi[..n];
                for (zi, zi1) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                    let f = *zi1;
                    *zi1 = s * *zi + c * f;
                    *zi = c * *zi - s * f;
                }
            }
            if underflowed && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn solve(a: &SymMatrix) -> EigenDecomposition {
        eigensolve_symmetric(a, 1e-12).unwrap()
    }

    #[test]
    fn identity_matrix() {
        let mut a = SymMatrix::zeros(4);
        for i in 0..4 {
            a.set(i, i, 1.0);
        }
        let dec = solve(&a);
        assert!(dec.values.iter().all(|&v| v == 1.0));
        assert_eq!(dec.max_residual(), 0.0);
    }

    #[test]
    fn two_by_two_swap() {
        let a = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let dec = solve(&a);
        assert!((dec.values[0] + 1.0).abs() < 1e-14);
        assert!((dec.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_is_exact() {
        let mut a = SymMatrix::zeros(5);
        for (i, v) in [4.0, -1.0, 0.0, 2.5, 2.5].iter().enumerate() {
            a.set(i, i, *v);
        }
        let dec = solve(&a);
        assert_eq!(dec.values, vec![-1.0, 0.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn random_50x50_reconstruction() {
        let n = 50;
        let mut rng = SplitMix64::new(99);
        let mut a = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                a.set(i, j, rng.next_symmetric());
            }
        }
        let tol = 1e-12;
        let dec = eigensolve_symmetric(&a, tol).unwrap();
        assert!(dec.max_residual() <= tol * a.inf_norm());
        assert!(dec.gram_deviation() <= 10.0 * tol);
        // || A - Q Lambda Q^T || <= n * tol * ||A||
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += dec.vector(k)[i] * dec.values[k] * dec.vector(k)[j];
                }
                worst = worst.max((acc - a.get(i, j)).abs());
            }
        }
        assert!(worst <= n as f64 * tol * a.inf_norm());
    }

    #[test]
    fn rejects_nonsymmetric_input() {
        let mut a = SymMatrix::zeros(2);
        a.data[1] = 1.0; // (0,1) only
        assert!(matches!(
            eigensolve_symmetric(&a, 1e-12),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn known_3x3_spectrum() {
        // eigenvalues of [[2,1,0],[1,2,1],[0,1,2]] are 2, 2 +/- sqrt(2)
        let a = SymMatrix::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ])
        .unwrap();
        let dec = solve(&a);
        let s = core::f64::consts::SQRT_2;
        for (got, want) in dec.values.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn spectrum_invariant_under_basis_permutation() {
        let n = 12;
        let mut rng = SplitMix64::new(4);
        let mut a = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                a.set(i, j, rng.next_symmetric());
            }
        }
        // permute rows/cols by reversal
        let mut b = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                b.data[i * n + j] = a.get(n - 1 - i, n - 1 - j);
            }
        }
        let da = solve(&a);
        let db = solve(&b);
        for (x, y) in da.values.iter().zip(&db.values) {
            assert!((x - y).abs() <= 1e-12 * a.inf_norm());
        }
    }
}
