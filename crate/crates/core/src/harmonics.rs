//! Real orthonormal spherical harmonics with gradients.
//!
//! `Y_{l,m}` is normalized by `∫_{S²} Y² dA = 1` (area `4π`), with
//! `Y_{l,m} ∝ P̄_l^m(cosθ)·cos(mϕ)` for `m > 0`, `∝ P̄_l^{|m|}·sin(|m|ϕ)` for
//! `m < 0`. No Condon–Shortley phase. Coefficient lists are indexed by
//! [`index`], i.e. `l² + l + m`.

use std::f64::consts::PI;

/// Position of `(l, m)` in a coefficient list.
pub fn index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients for bandlimit `l_max`.
pub fn count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Inverse of [`index`].
pub fn degree_order(i: usize) -> (usize, i64) {
    let l = (i as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= i { l + 1 } else { l };
    (l, i as i64 - (l * l + l) as i64)
}

/// Value and gradient components of every `Y_{l,m}` at one point.
#[derive(Debug, Clone)]
pub struct HarmonicValues {
    /// `Y_{l,m}`.
    pub value: Vec<f64>,
    /// `∂_θ Y_{l,m}`.
    pub d_theta: Vec<f64>,
    /// `(1/sinθ) ∂_ϕ Y_{l,m}`.
    pub d_phi: Vec<f64>,
}

/// Fully normalized associated Legendre functions `P̄_l^m(x)` with
/// `∫_{−1}^{1} P̄² dx = 1`, returned as `p[l][m]` for `m ≤ l ≤ l_max`.
pub fn normalized_legendre(l_max: usize, x: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut p = vec![Vec::new(); l_max + 1];
    for (l, row) in p.iter_mut().enumerate() {
        *row = vec![0.0; l + 1];
    }
    let mut pmm = 1.0 / 2f64.sqrt();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        p[m][m] = pmm;
        if m < l_max {
            p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * x * pmm;
        }
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
        }
    }
    p
}

/// Evaluate all harmonics up to `l_max` at `(x, ϕ)` with `x = cosθ`.
///
/// Gradients are finite only away from the poles (`|x| < 1`).
pub fn evaluate(l_max: usize, x: f64, phi: f64) -> HarmonicValues {
    let p = normalized_legendre(l_max, x);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let n = count(l_max);
    let mut value = vec![0.0; n];
    let mut d_theta = vec![0.0; n];
    let mut d_phi = vec![0.0; n];
    let base = 1.0 / (2.0 * PI).sqrt();
    for l in 0..=l_max {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let below =
                if l > m { (lf + mf) * ((2.0 * lf + 1.0) * (lf - mf) / ((2.0 * lf - 1.0) * (lf + mf))).sqrt() * p[l - 1][m] } else { 0.0 };
            let dp = (lf * x * p[l][m] - below) / s;
            let over_s = p[l][m] / s;
            if m == 0 {
                let i = index(l, 0);
                value[i] = base * p[l][0];
                d_theta[i] = base * dp;
            } else {
                let c = base * 2f64.sqrt();
                let (sin, cos) = (mf * phi).sin_cos();
                let i = index(l, m as i64);
                value[i] = c * p[l][m] * cos;
                d_theta[i] = c * dp * cos;
                d_phi[i] = -c * mf * over_s * sin;
                let j = index(l, -(m as i64));
                value[j] = c * p[l][m] * sin;
                d_theta[j] = c * dp * sin;
                d_phi[j] = c * mf * over_s * cos;
            }
        }
    }
    HarmonicValues { value, d_theta, d_phi }
}

/// `Σ a_{l,m} Y_{l,m}(x, ϕ)`.
pub fn synthesize(coeffs: &[f64], x: f64, phi: f64) -> f64 {
    let l_max = bandlimit(coeffs.len());
    let h = evaluate(l_max, x, phi);
    coeffs.iter().zip(&h.value).map(|(a, y)| a * y).sum()
}

/// Bandlimit of a coefficient list of length `(L+1)²`.
pub fn bandlimit(len: usize) -> usize {
    let l = (len as f64).sqrt().round() as usize;
    assert_eq!(l * l, len, "coefficient list length must be a perfect square");
    l.saturating_sub(1)
}
