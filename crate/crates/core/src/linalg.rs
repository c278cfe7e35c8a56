//! Small dense complex linear algebra on top of `nalgebra`.
//!
//! State dimensions are desk-sized (d <= 32), so singular values are always
//! computed directly rather than estimated.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Exact integer power of the imaginary unit.
pub fn i_pow(e: i64) -> Complex64 {
    match e.rem_euclid(4) {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// `(ik)^e`, split as `k^e * i^e` so the phase is exact.
pub fn ik_pow(k: i64, e: i64) -> Complex64 {
    i_pow(e) * real_pow(k as f64, e)
}

pub(crate) fn real_pow(x: f64, e: i64) -> f64 {
    if e >= 0 {
        x.powi(e as i32)
    } else {
        1.0 / x.powi((-e) as i32)
    }
}

/// `e^{i * phase}`.
pub fn cis(phase: f64) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(c, s)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 1 && m.ncols() == 1 {
        return vec![m[(0, 0)].norm()];
    }
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditioning {
    pub sigma_max: f64,
    pub sigma_min: f64,
}

impl Conditioning {
    pub fn of(m: &CMatrix) -> Self {
        let sv = singular_values(m);
        Conditioning {
            sigma_max: sv.first().copied().unwrap_or(0.0),
            sigma_min: sv.last().copied().unwrap_or(0.0),
        }
    }

    /// `sigma_max / sigma_min`, infinite for singular matrices.
    pub fn cond(&self) -> f64 {
        if self.sigma_min > 0.0 {
            self.sigma_max / self.sigma_min
        } else {
            f64::INFINITY
        }
    }
}

/// Inverse of a square matrix, or `None` if LU finds it singular.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 1 && m.ncols() == 1 {
        let z = m[(0, 0)];
        if z == ZERO {
            return None;
        }
        return Some(CMatrix::from_element(1, 1, z.inv()));
    }
    m.clone().lu().try_inverse()
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::zeros(dim, dim)
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}
