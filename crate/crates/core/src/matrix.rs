//! Small fixed-size matrices used throughout: real 2×2, symmetric 2×2 and
//! complex 2×2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the determinant used by the PSD test.
pub const PSD_DET_RTOL: f64 = 1e-12;

/// Real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * rhs.a11 + self.a12 * rhs.a21,
            self.a11 * rhs.a12 + self.a12 * rhs.a22,
            self.a21 * rhs.a11 + self.a22 * rhs.a21,
            self.a21 * rhs.a12 + self.a22 * rhs.a22,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    /// Eigenvalues as a complex pair, the one with non-negative imaginary
    /// part first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        if disc >= 0.0 {
            let r = disc.sqrt();
            [
                Complex64::new(half_tr + r, 0.0),
                Complex64::new(half_tr - r, 0.0),
            ]
        } else {
            let r = (-disc).sqrt();
            [Complex64::new(half_tr, r), Complex64::new(half_tr, -r)]
        }
    }

    /// Hurwitz test for a 2×2 matrix: trace < 0 and det > 0.
    pub fn is_hurwitz(&self) -> bool {
        self.trace() < 0.0 && self.det() > 0.0
    }

    /// `self * self^T` as a symmetric matrix.
    pub fn gram(&self) -> SymMatrix2 {
        SymMatrix2::new(
            self.a11 * self.a11 + self.a12 * self.a12,
            self.a11 * self.a21 + self.a12 * self.a22,
            self.a21 * self.a21 + self.a22 * self.a22,
        )
    }
}

/// Symmetric 2×2 matrix with the off-diagonal stored once.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMatrix2 {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
}

impl SymMatrix2 {
    pub const fn new(q11: f64, q12: f64, q22: f64) -> Self {
        Self { q11, q12, q22 }
    }

    pub const fn diag(q11: f64, q22: f64) -> Self {
        Self::new(q11, 0.0, q22)
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn trace(&self) -> f64 {
        self.q11 + self.q22
    }

    pub fn det(&self) -> f64 {
        self.q11 * self.q22 - self.q12 * self.q12
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.q11 * s, self.q12 * s, self.q22 * s)
    }

    pub fn add(&self, rhs: &SymMatrix2) -> Self {
        Self::new(self.q11 + rhs.q11, self.q12 + rhs.q12, self.q22 + rhs.q22)
    }

    pub fn sub(&self, rhs: &SymMatrix2) -> Self {
        Self::new(self.q11 - rhs.q11, self.q12 - rhs.q12, self.q22 - rhs.q22)
    }

    pub fn max_abs(&self) -> f64 {
        self.q11.abs().max(self.q12.abs()).max(self.q22.abs())
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2::new(self.q11, self.q12, self.q12, self.q22)
    }

    /// Symmetric part of an arbitrary 2×2 matrix.
    pub fn symmetrize(m: &Mat2) -> Self {
        Self::new(m.a11, 0.5 * (m.a12 + m.a21), m.a22)
    }

    /// Magnitude used to make the determinant test scale-free.
    fn det_scale(&self) -> f64 {
        self.q11.abs() * self.q22.abs() + self.q12 * self.q12
    }

    /// Positive-semidefinite within roundoff: non-negative diagonal and
    /// `det >= -1e-12 * (|q11 q22| + q12^2)`.
    pub fn is_psd(&self) -> bool {
        let tol = 1e-14 * self.max_abs();
        self.q11 >= -tol && self.q22 >= -tol && self.det() >= -PSD_DET_RTOL * self.det_scale()
    }

    /// Eigenvalues `(lambda_plus, lambda_minus)`, `lambda_plus >= lambda_minus`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.q11 + self.q22);
        let half_gap = 0.5 * (self.q11 - self.q22).hypot(2.0 * self.q12);
        (mean + half_gap, mean - half_gap)
    }
}

/// Lower-triangular `B` with `B Bᵀ = a`.
///
/// Rank-deficient input (determinant within roundoff of zero) yields a zero
/// second column; a vanishing `q11` pivots onto `q22`.
pub fn factorize_covariance(a: &SymMatrix2) -> Result<Mat2> {
    if !a.is_psd() {
        return Err(Error::NotPsd {
            q11: a.q11,
            det: a.det(),
        });
    }
    if a.max_abs() == 0.0 {
        return Ok(Mat2::new(0.0, 0.0, 0.0, 0.0));
    }
    if a.q11 <= 0.0 {
        // First row is zero within the PSD tolerance, so q12 is too.
        return Ok(Mat2::new(0.0, 0.0, 0.0, a.q22.max(0.0).sqrt()));
    }
    let b11 = a.q11.sqrt();
    let b21 = a.q12 / b11;
    let schur = a.q22 - b21 * b21;
    let b22 = if schur <= PSD_DET_RTOL * a.q22.abs().max(b21 * b21) {
        0.0
    } else {
        schur.sqrt()
    };
    Ok(Mat2::new(b11, 0.0, b21, b22))
}

/// Complex 2×2 matrix, row-major.
pub type CMat2 = [[Complex64; 2]; 2];

/// Largest entrywise modulus of `a - b`.
pub fn cmat_max_abs_diff(a: &CMat2, b: &CMat2) -> f64 {
    let mut out: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            out = out.max((a[i][j] - b[i][j]).norm());
        }
    }
    out
}
