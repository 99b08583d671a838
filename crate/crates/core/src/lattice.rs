//! Dual-lattice vectors, directions, enumeration, and the split
//! `gamma = j*delta + beta` along a coordinate direction.

use alloc::format;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::float;
use crate::geometry::BoxGeometry;

/// A point of the dual lattice `Gamma/2`, stored by its integer multi-index.
/// The frequency vector `(n_1 pi/a_1, ..., n_d pi/a_d)` is always derived
/// from the index and a geometry, never stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeVector {
    index: Vec<i64>,
}

impl LatticeVector {
    pub fn new(index: Vec<i64>) -> Self {
        Self { index }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            index: alloc::vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn index(&self) -> &[i64] {
        &self.index
    }

    pub fn is_zero(&self) -> bool {
        self.index.iter().all(|&n| n == 0)
    }

    /// Frequency vector relative to `geometry`.
    pub fn frequency(&self, geometry: &BoxGeometry) -> Vec<f64> {
        self.index
            .iter()
            .enumerate()
            .map(|(k, &n)| n as f64 * geometry.frequency_step(k))
            .collect()
    }

    /// `|gamma|^2` in frequency units.
    pub fn norm_sq(&self, geometry: &BoxGeometry) -> f64 {
        self.index
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let f = n as f64 * geometry.frequency_step(k);
                f * f
            })
            .sum()
    }

    pub fn norm(&self, geometry: &BoxGeometry) -> f64 {
        float::sqrt(self.norm_sq(geometry))
    }

    /// Orbit representative: componentwise absolute value.
    pub fn rep(&self) -> LatticeVector {
        LatticeVector::new(self.index.iter().map(|&n| n.abs()).collect())
    }

    pub fn is_rep(&self) -> bool {
        self.index.iter().all(|&n| n >= 0)
    }

    /// Size of the sign-flip orbit `A_gamma`: `2^(number of nonzero components)`.
    pub fn orbit_size(&self) -> u64 {
        1u64 << self.index.iter().filter(|&&n| n != 0).count()
    }

    /// Shortest nonzero lattice vector on its ray, i.e. the index gcd is 1.
    pub fn is_primitive(&self) -> bool {
        let mut g: u64 = 0;
        for &n in &self.index {
            g = gcd(g, n.unsigned_abs());
        }
        g == 1
    }

    pub fn add(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector::new(
            self.index
                .iter()
                .zip(&other.index)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector::new(
            self.index
                .iter()
                .zip(&other.index)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// One of the coordinate directions `e_1 .. e_d` (frequency vector
/// `(0, ..., pi/a_k, ..., 0)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction(usize);

impl Direction {
    pub fn new(axis: usize, dim: usize) -> Result<Self, CoreError> {
        if axis >= dim {
            return Err(CoreError::Domain(format!(
                "direction axis {axis} out of range for dimension {dim}"
            )));
        }
        Ok(Self(axis))
    }

    pub fn axis(&self) -> usize {
        self.0
    }

    /// `|delta| = pi / a_k`.
    pub fn norm(&self, geometry: &BoxGeometry) -> f64 {
        geometry.frequency_step(self.0)
    }

    pub fn unit_vector(&self, dim: usize) -> LatticeVector {
        let mut idx = alloc::vec![0i64; dim];
        idx[self.0] = 1;
        LatticeVector::new(idx)
    }
}

/// All lattice vectors with `|gamma| < cutoff`, deduplicated, in
/// lexicographic index order.
pub fn build_lattice(geometry: &BoxGeometry, cutoff: f64) -> Result<Vec<LatticeVector>, CoreError> {
    if !(cutoff >= 0.0) {
        return Err(CoreError::Domain(format!(
            "cutoff must be nonnegative, got {cutoff}"
        )));
    }
    let d = geometry.dim();
    let bounds: Vec<i64> = (0..d)
        .map(|k| {
            // |n_k| * pi/a_k < cutoff
            let b = cutoff / geometry.frequency_step(k);
            if b.is_finite() {
                float::ceil(b) as i64
            } else {
                0
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut idx: Vec<i64> = bounds.iter().map(|&b| -b).collect();
    if d == 0 {
        return Ok(out);
    }
    'outer: loop {
        let v = LatticeVector::new(idx.clone());
        if v.norm_sq(geometry) < cutoff * cutoff {
            out.push(v);
        }
        // odometer increment
        let mut k = d;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            if idx[k] < bounds[k] {
                idx[k] += 1;
                for (j, item) in idx.iter_mut().enumerate().skip(k + 1) {
                    *item = -bounds[j];
                }
                continue 'outer;
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Nonnegative orbit representatives with `|gamma| < cutoff`, lexicographic.
pub fn build_lattice_representatives(
    geometry: &BoxGeometry,
    cutoff: f64,
) -> Result<Vec<LatticeVector>, CoreError> {
    let mut v = build_lattice(geometry, cutoff)?;
    v.retain(LatticeVector::is_rep);
    Ok(v)
}

/// Split `gamma = j*delta + beta` with `beta . delta = 0`, exactly in
/// integer arithmetic. Total function.
pub fn decompose(gamma: &LatticeVector, delta: Direction) -> (i64, LatticeVector) {
    let j = gamma.index()[delta.axis()];
    let mut beta = gamma.index().to_vec();
    beta[delta.axis()] = 0;
    (j, LatticeVector::new(beta))
}

/// Rank over the rationals of a set of integer vectors (fraction-free
/// Gaussian elimination in i128).
pub fn integer_rank(vectors: &[&[i64]]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols = vectors[0].len();
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .collect();
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows.len()).find(|&r| rows[r][col] != 0);
        let Some(p) = pivot else { continue };
        rows.swap(rank, p);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let pr = &head[rank];
        for row in tail {
            if row[col] != 0 {
                let a = pr[col];
                let b = row[col];
                for c in 0..cols {
                    row[c] = row[c] * a - pr[c] * b;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square_pi() -> BoxGeometry {
        BoxGeometry::new(vec![core::f64::consts::PI, core::f64::consts::PI]).unwrap()
    }

    #[test]
    fn ball_counts_on_unit_frequency_lattice() {
        let g = square_pi();
        // 9 vectors with n1^2+n2^2 < 2.25
        assert_eq!(build_lattice(&g, 1.5).unwrap().len(), 9);
        // empty ball
        assert_eq!(build_lattice(&g, 0.0).unwrap().len(), 0);
        // exhaustive count for n1^2+n2^2 < 6.25
        let pts = build_lattice(&g, 2.5).unwrap();
        assert_eq!(pts.len(), 21);
        // deterministic lexicographic order, no duplicates
        let mut sorted = pts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, pts);
    }

    #[test]
    fn representative_filter() {
        let g = square_pi();
        let reps = build_lattice_representatives(&g, 2.5).unwrap();
        // (0,0),(0,1),(0,2),(1,0),(1,1),(1,2),(2,0),(2,1)
        assert_eq!(reps.len(), 8);
        assert!(reps.iter().all(LatticeVector::is_rep));
    }

    #[test]
    fn decompose_splits_coordinates() {
        let g = square_pi();
        let gamma = LatticeVector::new(vec![3, 5]);
        let e1 = Direction::new(0, 2).unwrap();
        let e2 = Direction::new(1, 2).unwrap();
        let (j, beta) = decompose(&gamma, e1);
        assert_eq!(j, 3);
        assert_eq!(beta.index(), &[0, 5]);
        let (j2, beta2) = decompose(&gamma, e2);
        assert_eq!(j2, 5);
        assert_eq!(beta2.index(), &[3, 0]);
        let zero = LatticeVector::zero(2);
        let (j0, beta0) = decompose(&zero, e1);
        assert_eq!(j0, 0);
        assert!(beta0.is_zero());
        // round-trip: j*delta + beta == gamma
        let back = e1
            .unit_vector(2)
            .index()
            .iter()
            .map(|&u| u * j)
            .zip(beta.index())
            .map(|(a, b)| a + b)
            .collect::<Vec<_>>();
        assert_eq!(back, gamma.index());
        let _ = g;
    }

    #[test]
    fn orbit_sizes_and_primitivity() {
        assert_eq!(LatticeVector::new(vec![0, 0]).orbit_size(), 1);
        assert_eq!(LatticeVector::new(vec![1, 0]).orbit_size(), 2);
        assert_eq!(LatticeVector::new(vec![1, -2]).orbit_size(), 4);
        assert!(LatticeVector::new(vec![3, -1]).is_primitive());
        assert!(!LatticeVector::new(vec![2, 4]).is_primitive());
        assert!(!LatticeVector::new(vec![0, 0]).is_primitive());
        assert!(LatticeVector::new(vec![0, 1]).is_primitive());
    }

    #[test]
    fn rank_of_integer_sets() {
        assert_eq!(integer_rank(&[&[1, 0], &[2, 0]]), 1);
        assert_eq!(integer_rank(&[&[1, 0], &[2, 1]]), 2);
        assert_eq!(integer_rank(&[]), 0);
        assert_eq!(integer_rank(&[&[0, 0]]), 0);
        assert_eq!(integer_rank(&[&[3, -1], &[-6, 2], &[9, -3]]), 1);
    }

    proptest::proptest! {
        #[test]
        fn decompose_recompose_round_trip(n1 in -50i64..50, n2 in -50i64..50, axis in 0usize..2) {
            let gamma = LatticeVector::new(vec![n1, n2]);
            let delta = Direction::new(axis, 2).unwrap();
            let (j, beta) = decompose(&gamma, delta);
            // beta . delta = 0
            proptest::prop_assert_eq!(beta.index()[axis], 0);
            let mut rebuilt = beta.index().to_vec();
            rebuilt[axis] += j;
            proptest::prop_assert_eq!(rebuilt, gamma.index().to_vec());
        }
    }
}
