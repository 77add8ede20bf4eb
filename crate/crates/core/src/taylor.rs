//! Truncated univariate power series for Taylor-mode differentiation.
//!
//! A [`Series`] holds the normalized coefficients `a₀, a₁, …, a_d` of
//! `a(δ) = Σ a_j δʲ`, so that the k-th derivative at the expansion point is
//! `k! · a_k`.

use std::ops::{Add, Mul};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<f64>,
}

impl Series {
    /// The constant `c` truncated at degree `degree`.
    pub fn constant(c: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// The independent variable `v + δ` expanded around `v`.
    pub fn variable(v: f64, degree: usize) -> Self {
        let mut s = Self::constant(v, degree);
        if degree >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coeffs[k] * factorial(k)
    }

    pub fn scale(mut self, c: f64) -> Self {
        self.coeffs.iter_mut().for_each(|a| *a *= c);
        self
    }

    /// `a^r` for real `r`; requires `a₀ > 0`.
    ///
    /// Uses `b' a = r a' b`, i.e.
    /// `b_k = (1 / (k a₀)) Σ_{j=1..k} (r j − (k − j)) a_j b_{k−j}`.
    pub fn powf(&self, r: f64) -> Self {
        let a = &self.coeffs;
        let mut b = vec![0.0; a.len()];
        b[0] = a[0].powf(r);
        for k in 1..a.len() {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (r * j as f64 - (k - j) as f64) * a[j] * b[k - j];
            }
            b[k] = acc / (k as f64 * a[0]);
        }
        Self { coeffs: b }
    }

    /// `ln(1 + a)`; requires `1 + a₀ > 0`.
    ///
    /// With `w = 1 + a` and `f = ln w`, `f' w = w'` gives
    /// `f_k = (a_k − Σ_{j=1..k−1} (j/k) f_j a_{k−j}) / (1 + a₀)`.
    pub fn ln_1p(&self) -> Self {
        let a = &self.coeffs;
        let w0 = 1.0 + a[0];
        let mut f = vec![0.0; a.len()];
        f[0] = a[0].ln_1p();
        for k in 1..a.len() {
            let mut acc = a[k];
            for j in 1..k {
                acc -= (j as f64 / k as f64) * f[j] * a[k - j];
            }
            f[k] = acc / w0;
        }
        Self { coeffs: f }
    }
}

impl Add for &Series {
    type Output = Series;

    fn add(self, rhs: &Series) -> Series {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "degree mismatch");
        Series {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Mul for &Series {
    type Output = Series;

    /// Cauchy product, truncated.
    fn mul(self, rhs: &Series) -> Series {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "degree mismatch");
        let n = self.coeffs.len();
        let mut c = vec![0.0; n];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum();
        }
        Series { coeffs: c }
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
