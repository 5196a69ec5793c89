//! Dense complex factorizations with log-determinant accumulation.
//!
//! Determinants of Toeplitz matrices overflow long before the matrices get
//! large, so everything here works with sums of pivot logarithms.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Lower Cholesky factor `L` of a Hermitian positive definite matrix
/// (`A = L Lᴴ`) together with `log det A = 2 Σ log L_ii`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    pub lower: CMatrix,
    pub log_det: f64,
}

impl Cholesky {
    /// Factor `a`, reading only its lower triangle.
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky needs a square matrix");
        let mut l = CMatrix::zeros(n, n);
        let mut log_det = 0.0;
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for p in 0..j {
                d -= l[(j, p)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            log_det += 2.0 * djj.ln();
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { lower: l, log_det })
    }

    /// `L⁻¹` (lower triangular, positive diagonal).
    pub fn lower_inverse(&self) -> CMatrix {
        let n = self.lower.nrows();
        let mut inv = CMatrix::zeros(n, n);
        for j in 0..n {
            inv[(j, j)] = self.lower[(j, j)].inv();
            for i in (j + 1)..n {
                let mut s = Complex64::new(0.0, 0.0);
                for p in j..i {
                    s -= self.lower[(i, p)] * inv[(p, j)];
                }
                inv[(i, j)] = s / self.lower[(i, i)];
            }
        }
        inv
    }
}

/// Principal-branch `log det` of a general complex matrix by LU with partial
/// pivoting: `Σ log u_ii + iπ·(number of row swaps)`, imaginary part reduced
/// to `(−π, π]`.
pub fn lu_log_det(a: &CMatrix) -> Result<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "LU needs a square matrix");
    let mut m = a.clone();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut swaps = 0usize;
    for k in 0..n {
        let (piv, best) = (k..n).map(|i| (i, m[(i, k)].norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(best > 0.0) || !best.is_finite() {
            return Err(Error::Singular(k));
        }
        if piv != k {
            m.swap_rows(piv, k);
            swaps += 1;
        }
        let pivot = m[(k, k)];
        acc += pivot.ln();
        for i in (k + 1)..n {
            let f = m[(i, k)] / pivot;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in (k + 1)..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
        }
    }
    if swaps % 2 == 1 {
        acc += Complex64::new(0.0, std::f64::consts::PI);
    }
    Ok(Complex64::new(acc.re, wrap_angle(acc.im)))
}

/// Reduce an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// `max |A_ij − conj(A_ji)|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |A − I|` entrywise.
pub fn identity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a[(i, j)] - target).norm());
        }
    }
    worst
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}
