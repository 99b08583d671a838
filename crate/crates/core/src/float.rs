//! Scalar float helpers routed through `std` or `libm`, plus compensated
//! summation. Everything downstream calls these instead of the inherent
//! `f64` methods so the crate builds without `std`.

#[cfg(feature = "std")]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        x.powf(y)
    }
    #[inline]
    pub fn powi(x: f64, n: i32) -> f64 {
        x.powi(n)
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        x.ceil()
    }
    #[inline]
    pub fn copysign(x: f64, y: f64) -> f64 {
        x.copysign(y)
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        libm::pow(x, y)
    }
    #[inline]
    pub fn powi(x: f64, n: i32) -> f64 {
        libm::pow(x, n as f64)
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        libm::ceil(x)
    }
    #[inline]
    pub fn copysign(x: f64, y: f64) -> f64 {
        libm::copysign(x, y)
    }
}

pub use imp::*;

/// `sqrt(a^2 + b^2)` without destructive overflow or underflow.
pub fn pythag(a: f64, b: f64) -> f64 {
    let (a, b) = (abs(a), abs(b));
    if a > b {
        let r = b / a;
        a * sqrt(1.0 + r * r)
    } else if b > 0.0 {
        let r = a / b;
        b * sqrt(1.0 + r * r)
    } else {
        0.0
    }
}

#[inline]
pub fn max(a: f64, b: f64) -> f64 {
    if a > b || b.is_nan() {
        a
    } else {
        b
    }
}

#[inline]
pub fn min(a: f64, b: f64) -> f64 {
    if a < b || b.is_nan() {
        a
    } else {
        b
    }
}

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    err: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.err;
        let t = self.sum + y;
        self.err = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_alternating_series() {
        // sum_{k=1}^{n} (-1)^{k+1} / k with large/small mixing
        let mut kahan = KahanSum::new();
        let mut naive = 0.0f64;
        kahan.add(1e16);
        naive += 1e16;
        for k in 1..=1000 {
            let term = if k % 2 == 1 {
                1.0 / k as f64
            } else {
                -1.0 / k as f64
            };
            kahan.add(term);
            naive += term;
        }
        kahan.add(-1e16);
        naive += -1e16;
        let exact: f64 = (1..=1000)
            .map(|k| {
                if k % 2 == 1 {
                    1.0 / k as f64
                } else {
                    -1.0 / k as f64
                }
            })
            .sum();
        assert!((kahan.value() - exact).abs() <= (naive - exact).abs());
    }

    #[test]
    fn pythag_handles_extremes() {
        assert_eq!(pythag(3.0, 4.0), 5.0);
        assert_eq!(pythag(0.0, 0.0), 0.0);
        let big = 1e300;
        assert!((pythag(big, big) - big * core::f64::consts::SQRT_2).abs() < 1e287);
    }
}
