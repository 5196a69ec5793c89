//! Orthonormal bases of holomorphic sections and their Gram/Toeplitz matrices.
//!
//! A [`SectionBasis`] evaluates sections `f_j` in the chart trivialization.
//! Most consumers want the *unitary* values `f_j(z)·e^{−kΦ(z)/2}`, whose
//! squared moduli are the point-wise norms `‖Ψ_j‖²(z)`; those are computed
//! directly in a numerically stable form and never overflow.

use std::f64::consts::PI;

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, CMatrix, Cholesky};
use crate::surface::{ChartId, ChartPoint, QuadGrid, SurfaceKind, SurfaceModel};

/// Theta terms below this fraction of the peak are dropped.
pub const THETA_RELATIVE_CUTOFF: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq)]
enum BasisKind {
    /// `f_j(z) = c_j z^j`, `j = 0..=d`.
    Sphere { normalizers: Vec<f64> },
    /// Level-`d` theta functions with characteristics `j/d`.
    Torus { tau: Complex64, truncation: usize },
}

/// Orthonormal basis of `H⁰(X, kL)` for the sphere or the flat torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionBasis {
    model: SurfaceModel,
    level: usize,
    degree: usize,
    kind: BasisKind,
    /// Optional change of basis applied after evaluation (`g = T f`).
    transform: Option<CMatrix>,
}

fn degree_of(model: &SurfaceModel, k: usize) -> Result<usize> {
    let d = k as f64 * model.volume();
    if (d - d.round()).abs() > 1e-9 || d.round() < 0.0 {
        return Err(Error::InvalidParameter(format!("k·V = {d} must be an integer (degree of kL)")));
    }
    Ok(d.round() as usize)
}

impl SectionBasis {
    /// Monomial basis `c_j z^j` on the sphere, `c_j² = (d+1)·C(d, j)` with
    /// `d = kV`.
    pub fn sphere(model: &SurfaceModel, k: usize) -> Result<Self> {
        if !model.is_sphere() {
            return Err(Error::UnsupportedModel("sphere basis needs the sphere model".into()));
        }
        if k < 1 {
            return Err(Error::InvalidParameter("level k must be at least 1".into()));
        }
        let d = degree_of(model, k)?;
        Ok(Self::sphere_with_degree(model, k, d))
    }

    /// The one-dimensional space of constants (`N = 1`), used for the
    /// single-particle case.
    pub fn sphere_constants(model: &SurfaceModel) -> Result<Self> {
        if !model.is_sphere() {
            return Err(Error::UnsupportedModel("sphere basis needs the sphere model".into()));
        }
        Ok(Self::sphere_with_degree(model, 0, 0))
    }

    fn sphere_with_degree(model: &SurfaceModel, k: usize, d: usize) -> Self {
        let normalizers = (0..=d).map(|j| sphere_normalizer(d, j)).collect();
        Self { model: *model, level: k, degree: d, kind: BasisKind::Sphere { normalizers }, transform: None }
    }

    /// Sphere basis with `N` particles (`V = 1`, `k = N − 1`).
    pub fn sphere_with_particles(n: usize) -> Result<Self> {
        let model = SurfaceModel::sphere(1.0)?;
        match n {
            0 => Err(Error::InvalidParameter("need at least one particle".into())),
            1 => Self::sphere_constants(&model),
            _ => Self::sphere(&model, n - 1),
        }
    }

    /// Theta-function basis on the flat torus, normalized in closed form.
    ///
    /// `truncation` bounds the number of lattice terms kept on each side of
    /// the Gaussian peak of every theta series.
    pub fn torus(model: &SurfaceModel, k: usize, truncation: usize) -> Result<Self> {
        let tau = model.tau().ok_or_else(|| Error::UnsupportedModel("theta basis needs the flat torus model".into()))?;
        if k < 1 {
            return Err(Error::InvalidParameter("level k must be at least 1".into()));
        }
        let d = degree_of(model, k)?;
        if d < 1 {
            return Err(Error::InvalidParameter("degree k·V must be positive".into()));
        }
        let required = Self::required_truncation(d, tau);
        if truncation < required {
            return Err(Error::InsufficientTruncation { got: truncation, required });
        }
        Ok(Self { model: *model, level: k, degree: d, kind: BasisKind::Torus { tau, truncation }, transform: None })
    }

    /// Smallest admissible truncation for degree `d`.
    pub fn required_truncation(d: usize, tau: Complex64) -> usize {
        let half_width = theta_half_width(d, tau.im);
        (half_width / (tau.im * d as f64)).ceil() as usize + 1
    }

    pub fn model(&self) -> &SurfaceModel {
        &self.model
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Degree `d = kV` of the line bundle `kL`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Dimension `N` of the space of sections.
    pub fn dim(&self) -> usize {
        match self.kind {
            BasisKind::Sphere { .. } => self.degree + 1,
            BasisKind::Torus { .. } => self.degree,
        }
    }

    /// Weight `kΦ` of the level-`k` metric.
    pub fn level_weight(&self, p: &ChartPoint) -> f64 {
        self.level as f64 * self.model.weight(p)
    }

    /// Raw chart values `f_j(z)` (affine chart only).
    pub fn values(&self, p: &ChartPoint) -> Result<Vec<Complex64>> {
        if p.chart != ChartId::Affine {
            return Err(Error::ChartViolation("raw section values are only defined in the affine chart".into()));
        }
        let scale = (0.5 * self.level_weight(p)).exp();
        Ok(self.unitary_values(p).into_iter().map(|v| v * scale).collect())
    }

    /// `f_j(z)·e^{−kΦ(z)/2}` for every basis element.
    pub fn unitary_values(&self, p: &ChartPoint) -> Vec<Complex64> {
        let base = match &self.kind {
            BasisKind::Sphere { normalizers } => sphere_unitary(normalizers, self.degree, p),
            BasisKind::Torus { tau, .. } => torus_unitary(self.degree, *tau, p.z),
        };
        match &self.transform {
            None => base,
            Some(t) => (0..t.nrows()).map(|i| (0..t.ncols()).map(|j| t[(i, j)] * base[j]).sum()).collect(),
        }
    }

    /// Point-wise norms `‖Ψ_j‖²(x) = |f_j|² e^{−kΦ}`.
    pub fn pointwise_norms(&self, p: &ChartPoint) -> Vec<f64> {
        self.unitary_values(p).iter().map(|v| v.norm_sqr()).collect()
    }

    /// Bergman function `B_k(x) = Σ_j ‖Ψ_j‖²(x)`.
    pub fn bergman_function(&self, p: &ChartPoint) -> f64 {
        self.unitary_values(p).iter().map(|v| v.norm_sqr()).sum()
    }

    /// Sphere normalizers `c_j` (empty for the torus).
    pub fn normalizers(&self) -> &[f64] {
        match &self.kind {
            BasisKind::Sphere { normalizers } => normalizers,
            BasisKind::Torus { .. } => &[],
        }
    }

    pub fn truncation(&self) -> Option<usize> {
        match self.kind {
            BasisKind::Torus { truncation, .. } => Some(truncation),
            BasisKind::Sphere { .. } => None,
        }
    }

    /// Smallest grid resolution for which Gram matrices are assembled.
    pub fn required_resolution(&self) -> usize {
        match self.kind {
            BasisKind::Sphere { .. } => self.degree + 2,
            BasisKind::Torus { tau, .. } => torus_required_resolution(self.degree, tau),
        }
    }

    /// Evaluate the basis on every node of `grid`, ready for Toeplitz assembly.
    pub fn sample_on(&self, grid: &QuadGrid) -> Result<SampledBasis> {
        let required = self.required_resolution();
        if grid.resolution < required {
            return Err(Error::InsufficientResolution { got: grid.resolution, required });
        }
        let n = self.dim();
        let v = self.model.volume();
        let cols: Vec<Vec<Complex64>> = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(p, w)| {
                let s = (w / v).sqrt();
                self.unitary_values(p).into_iter().map(|x| x * s).collect()
            })
            .collect();
        let mut rows = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; n];
        for (node, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                rows[i][node] = *x;
            }
        }
        Ok(SampledBasis { rows, grid: grid.clone() })
    }
}

/// Basis values on a quadrature grid, `A_{i,n} = √(w_n/V)·f_i(x_n)e^{−kΦ(x_n)/2}`.
#[derive(Debug, Clone)]
pub struct SampledBasis {
    rows: Vec<Vec<Complex64>>,
    grid: QuadGrid,
}

impl SampledBasis {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn grid(&self) -> &QuadGrid {
        &self.grid
    }

    /// `T[g]_ij = ∫ g f_i conj(f_j) e^{−kΦ} dν` for symbol values `g` on the
    /// grid nodes. Entries are summed in node order.
    pub fn toeplitz(&self, symbol: &[Complex64]) -> CMatrix {
        assert_eq!(symbol.len(), self.grid.len(), "one symbol value per grid node");
        let n = self.dim();
        let weighted: Vec<Vec<Complex64>> = self.rows.iter().map(|r| r.iter().zip(symbol).map(|(a, s)| a * s).collect()).collect();
        let row_entries = |i: usize| -> Vec<Complex64> {
            (0..n).map(|j| weighted[i].iter().zip(&self.rows[j]).fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj())).collect()
        };
        #[cfg(feature = "parallel")]
        let entries: Vec<Vec<Complex64>> = (0..n).into_par_iter().map(row_entries).collect();
        #[cfg(not(feature = "parallel"))]
        let entries: Vec<Vec<Complex64>> = (0..n).map(row_entries).collect();
        CMatrix::from_fn(n, n, |i, j| entries[i][j])
    }

    /// Toeplitz matrix of a real symbol.
    pub fn toeplitz_real(&self, symbol: &[f64]) -> CMatrix {
        let s: Vec<Complex64> = symbol.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        self.toeplitz(&s)
    }
}

/// Gram matrix `⟨e^{−φ}Ψ_i, Ψ_j⟩` together with a description of its symbol.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub matrix: CMatrix,
    pub symbol: String,
}

impl GramMatrix {
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }
}

/// Assemble `⟨e^{−φ}Ψ_i, Ψ_j⟩` on `grid` for a (possibly complex) `φ`.
pub fn gram<F>(basis: &SectionBasis, grid: &QuadGrid, phi: F, symbol: &str) -> Result<GramMatrix>
where
    F: Fn(&ChartPoint) -> Complex64,
{
    let sampled = basis.sample_on(grid)?;
    let s: Vec<Complex64> = grid.nodes.iter().map(|p| (-phi(p)).exp()).collect();
    Ok(GramMatrix { matrix: sampled.toeplitz(&s), symbol: format!("exp(-({symbol}))") })
}

/// Re-orthonormalize `basis` against the quadrature measure on `grid`
/// (Cholesky, so the change of basis is lower triangular with positive
/// diagonal).
pub fn orthonormalize(basis: &SectionBasis, grid: &QuadGrid) -> Result<SectionBasis> {
    let g = gram(basis, grid, |_| Complex64::new(0.0, 0.0), "0")?;
    let chol = Cholesky::new(&g.matrix)?;
    let inv = chol.lower_inverse();
    let transform = match &basis.transform {
        None => inv,
        Some(t) => inv * t,
    };
    Ok(SectionBasis { transform: Some(transform), ..basis.clone() })
}

/// `N = kV − (g − 1)` for a global model.
pub fn riemann_roch_dimension(model: &SurfaceModel, k: usize) -> Result<i64> {
    let g = model.genus().ok_or(Error::LocalOnlyModel)? as i64;
    let d = degree_of(model, k)? as i64;
    Ok(d - (g - 1))
}

fn sphere_normalizer(d: usize, j: usize) -> f64 {
    // c_j² = (d+1)!/(j!(d−j)!), from ∫_0^∞ s^j (1+s)^{−d−2} ds = j!(d−j)!/(d+1)!
    let ln = ln_gamma(d as f64 + 2.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((d - j) as f64 + 1.0);
    (0.5 * ln).exp()
}

fn sphere_unitary(normalizers: &[f64], d: usize, p: &ChartPoint) -> Vec<Complex64> {
    let r2 = p.z.norm_sqr();
    let inv = 1.0 / (1.0 + r2).sqrt();
    let r = r2.sqrt();
    // a = |z|/√(1+|z|²), b = 1/√(1+|z|²) in terms of the affine coordinate z.
    let (a, b, phase) = match p.chart {
        ChartId::Affine => (r * inv, inv, if r > 0.0 { p.z / r } else { Complex64::new(1.0, 0.0) }),
        ChartId::Infinity => (inv, r * inv, if r > 0.0 { p.z.conj() / r } else { Complex64::new(1.0, 0.0) }),
    };
    let mut out = Vec::with_capacity(d + 1);
    let mut ph = Complex64::new(1.0, 0.0);
    for (j, c) in normalizers.iter().enumerate() {
        let m = c * a.powi(j as i32) * b.powi((d - j) as i32);
        out.push(ph * m);
        ph *= phase;
    }
    out
}

fn theta_half_width(d: usize, t: f64) -> f64 {
    // exp(−(π/(d t))·x²) ≥ cutoff  ⇔  |x| ≤ √(d t·ln(1/cutoff)/π)
    (d as f64 * t * (1.0 / THETA_RELATIVE_CUTOFF).ln() / PI).sqrt()
}

/// `f_j(z)e^{−dΦ/2}` for the normalized level-`d` theta basis
///
/// `f_j(z) = (2 d t)^{1/4} Σ_{m ≡ j (mod d)} exp(iπτ m²/d + 2πi m z)`,
/// `t = Im τ`, against the weight `Φ = 2π(Im z)²/t`.
fn torus_unitary(d: usize, tau: Complex64, z: Complex64) -> Vec<Complex64> {
    let t = tau.im;
    let a = tau.re;
    let df = d as f64;
    let norm = (2.0 * df * t).powf(0.25);
    let hw = theta_half_width(d, t);
    // terms with |t m + d y| ≤ hw
    let m_lo = ((-df * z.im - hw) / t).floor() as i64;
    let m_hi = ((-df * z.im + hw) / t).ceil() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for m in m_lo..=m_hi {
        let mf = m as f64;
        let g = t * mf + df * z.im;
        let modulus = (-(PI / (df * t)) * g * g).exp();
        let phase = PI * a * mf * mf / df + 2.0 * PI * mf * z.re;
        let j = m.rem_euclid(d as i64) as usize;
        out[j] += Complex64::from_polar(modulus, phase);
    }
    for v in &mut out {
        *v *= norm;
    }
    out
}

fn torus_required_resolution(d: usize, tau: Complex64) -> usize {
    // Integrands are sums of Gaussians of width ~ √(t/(2π d)) in y and
    // Fourier modes up to ~ d in x; the periodic rule converges spectrally
    // once both are resolved.
    let t = tau.im;
    let y_nodes = (2.0 * d as f64).max(6.0 * t * (d as f64 / t).sqrt());
    (y_nodes.ceil() as usize).max(2 * d) + 12
}

/// Whether the model supports a global section basis.
pub fn supports_global_basis(model: &SurfaceModel) -> bool {
    matches!(model.kind(), SurfaceKind::Sphere | SurfaceKind::FlatTorus { .. })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity_defect;
    use crate::quadrature::gauss_legendre_on;
    use crate::surface::polar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere1() -> SurfaceModel {
        SurfaceModel::sphere(1.0).unwrap()
    }

    fn beta_integral_oracle(j: usize, k: usize) -> f64 {
        // ∫_0^∞ s^j (1+s)^{−k−2} ds with s = t/(1−t): ∫_0^1 t^j (1−t)^{k−j} dt
        let (t, w) = gauss_legendre_on(64, 0.0, 1.0);
        t.iter().zip(&w).map(|(t, w)| w * t.powi(j as i32) * (1.0 - t).powi((k - j) as i32)).sum()
    }

    #[test]
    fn sphere_normalizers_match_beta_oracle() {
        let b = SectionBasis::sphere(&sphere1(), 1).unwrap();
        let c = b.normalizers();
        assert!((c[0] * c[0] - 2.0).abs() < 1e-13);
        assert!((c[1] * c[1] - 2.0).abs() < 1e-13);
        for k in [3, 7, 20] {
            let b = SectionBasis::sphere(&sphere1(), k).unwrap();
            for (j, c) in b.normalizers().iter().enumerate() {
                let oracle = 1.0 / beta_integral_oracle(j, k);
                assert!((c * c / oracle - 1.0).abs() < 1e-12, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn dimension_law() {
        let s = sphere1();
        for k in 1..=64 {
            assert_eq!(SectionBasis::sphere(&s, k).unwrap().dim() as i64, riemann_roch_dimension(&s, k).unwrap());
        }
        assert_eq!(SectionBasis::sphere(&s, 10).unwrap().dim(), 11);
        let t = SurfaceModel::torus(Complex64::new(0.0, 1.0), 1.0).unwrap();
        let b = SectionBasis::torus(&t, 3, 8).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(riemann_roch_dimension(&t, 3).unwrap(), 3);
        let h = SurfaceModel::hyperbolic_chart(-2.0, 0.5).unwrap();
        assert!(riemann_roch_dimension(&h, 3).is_err());
    }

    #[test]
    fn sphere_basis_errors() {
        assert!(SectionBasis::sphere(&sphere1(), 0).is_err());
        let t = SurfaceModel::torus(Complex64::new(0.0, 1.0), 1.0).unwrap();
        assert!(SectionBasis::sphere(&t, 2).is_err());
        let half = SurfaceModel::sphere(0.5).unwrap();
        assert!(SectionBasis::sphere(&half, 3).is_err());
        assert_eq!(SectionBasis::sphere(&half, 4).unwrap().dim(), 3);
    }

    #[test]
    fn sphere_gram_identity() {
        for k in [1, 5, 17] {
            let b = SectionBasis::sphere(&sphere1(), k).unwrap();
            let grid = sphere1().quadrature_grid(b.required_resolution()).unwrap();
            let g = gram(&b, &grid, |_| Complex64::new(0.0, 0.0), "0").unwrap();
            assert!(identity_defect(&g.matrix) < 1e-10, "k={k}");
            assert!(g.hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn gram_resolution_guard() {
        let b = SectionBasis::sphere(&sphere1(), 10).unwrap();
        let grid = sphere1().quadrature_grid(5).unwrap();
        assert!(matches!(gram(&b, &grid, |_| Complex64::new(0.0, 0.0), "0"), Err(Error::InsufficientResolution { got: 5, required: 12 })));
    }

    #[test]
    fn gram_constant_symbol_scales_identity() {
        let b = SectionBasis::sphere(&sphere1(), 6).unwrap();
        let grid = sphere1().quadrature_grid(10).unwrap();
        let c = 0.37;
        let g = gram(&b, &grid, |_| Complex64::new(c, 0.0), "c").unwrap();
        let scaled = g.matrix * Complex64::new(c.exp(), 0.0);
        assert!(identity_defect(&scaled) < 1e-12);
    }

    #[test]
    fn gram_cos_theta_level_one() {
        // Diagonal entries (1/2)∫ e^{−u}(1±u) du, off-diagonals vanish.
        let b = SectionBasis::sphere(&sphere1(), 1).unwrap();
        let grid = sphere1().quadrature_grid(24).unwrap();
        let g = gram(&b, &grid, |p| Complex64::new(polar(p).0, 0.0), "cos").unwrap().matrix;
        let (u, w) = gauss_legendre_on(40, -1.0, 1.0);
        let a_minus: f64 = u.iter().zip(&w).map(|(u, w)| w * (-u).exp() * (1.0 - u)).sum::<f64>() / 2.0;
        let a_plus: f64 = u.iter().zip(&w).map(|(u, w)| w * (-u).exp() * (1.0 + u)).sum::<f64>() / 2.0;
        // f_0 = c_0 lives near the south pole (u = −1), f_1 = c_1 z near the north.
        assert!((g[(0, 0)].re - a_minus).abs() < 1e-12);
        assert!((g[(1, 1)].re - a_plus).abs() < 1e-12);
        assert!(g[(0, 1)].norm() < 1e-14 && g[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn reproducing_consistency() {
        let b = SectionBasis::sphere(&sphere1(), 9).unwrap();
        let grid = sphere1().quadrature_grid(12).unwrap();
        let total = grid.integrate(|p| b.bergman_function(p));
        assert!((total - 10.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_infinity_chart_agrees() {
        let b = SectionBasis::sphere(&sphere1(), 7).unwrap();
        let z = Complex64::new(2.5, -1.2);
        let a = b.pointwise_norms(&ChartPoint::affine(z));
        let w = b.pointwise_norms(&ChartPoint::at_infinity(z.inv()));
        for (x, y) in a.iter().zip(&w) {
            assert!((x - y).abs() < 1e-13);
        }
        let north = b.pointwise_norms(&ChartPoint::at_infinity(Complex64::new(0.0, 0.0)));
        assert!((north.iter().sum::<f64>() - 8.0).abs() < 1e-12);
        assert!((north[7] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn raw_values_scale() {
        let b = SectionBasis::sphere(&sphere1(), 1).unwrap();
        let z = Complex64::new(0.3, 0.4);
        let v = b.values(&ChartPoint::affine(z)).unwrap();
        assert!((v[0] - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-14);
        assert!((v[1] - z * 2f64.sqrt()).norm() < 1e-14);
    }

    #[test]
    fn torus_truncation_guard() {
        let t = SurfaceModel::torus(Complex64::new(0.0, 1.0), 1.0).unwrap();
        let req = SectionBasis::required_truncation(5, Complex64::new(0.0, 1.0));
        assert!(matches!(SectionBasis::torus(&t, 5, req - 1), Err(Error::InsufficientTruncation { .. })));
        assert!(SectionBasis::torus(&t, 5, req).is_ok());
    }

    #[test]
    fn torus_norms_are_doubly_periodic() {
        let tau = Complex64::new(0.3, 1.2);
        let t = SurfaceModel::torus(tau, 1.0).unwrap();
        let b = SectionBasis::torus(&t, 4, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let a = b.pointwise_norms(&ChartPoint::affine(z));
            for shift in [Complex64::new(1.0, 0.0), tau, -tau + 2.0] {
                let s = b.pointwise_norms(&ChartPoint::affine(z + shift));
                for (x, y) in a.iter().zip(&s) {
                    assert!((x - y).abs() < 1e-12, "{x} {y}");
                }
            }
        }
    }

    #[test]
    fn torus_gram_identity_and_doubling() {
        for (tau, k) in [(Complex64::new(0.0, 1.0), 3), (Complex64::new(0.25, 1.5), 5), (Complex64::new(0.0, 3.0), 12)] {
            let t = SurfaceModel::torus(tau, 1.0).unwrap();
            let b = SectionBasis::torus(&t, k, 12).unwrap();
            let r = b.required_resolution();
            for res in [r, 2 * r] {
                let grid = t.quadrature_grid(res).unwrap();
                let g = gram(&b, &grid, |_| Complex64::new(0.0, 0.0), "0").unwrap();
                assert!(identity_defect(&g.matrix) < 1e-10, "tau={tau} k={k} res={res}: {}", identity_defect(&g.matrix));
            }
        }
    }

    #[test]
    fn torus_orthonormalize() {
        let t = SurfaceModel::torus(Complex64::new(0.1, 1.1), 1.0).unwrap();
        let b = SectionBasis::torus(&t, 5, 12).unwrap();
        let grid = t.quadrature_grid(b.required_resolution()).unwrap();
        let ob = orthonormalize(&b, &grid).unwrap();
        let g = gram(&ob, &grid, |_| Complex64::new(0.0, 0.0), "0").unwrap();
        assert!(identity_defect(&g.matrix) < 1e-12);
        let tr = ob.transform.as_ref().unwrap();
        // already orthonormal: the change of basis is the identity up to roundoff
        assert!(identity_defect(tr) < 1e-10);
        let det: f64 = (0..tr.nrows()).map(|i| tr[(i, i)].re).product();
        assert!(det > 0.0);
        // second pass is idempotent
        let again = orthonormalize(&ob, &grid).unwrap();
        let pts = [Complex64::new(0.2, 0.3), Complex64::new(0.7, 0.9)];
        for z in pts {
            let x = ob.unitary_values(&ChartPoint::affine(z));
            let y = again.unitary_values(&ChartPoint::affine(z));
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormalize_rescued_basis() {
        // A deliberately skewed basis is brought back to orthonormal.
        let b = SectionBasis::sphere(&sphere1(), 4).unwrap();
        let skew = CMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                Complex64::new(2.0, 0.0)
            } else if i > j {
                Complex64::new(0.3, 0.1)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let skewed = SectionBasis { transform: Some(skew), ..b };
        let grid = sphere1().quadrature_grid(8).unwrap();
        let ob = orthonormalize(&skewed, &grid).unwrap();
        let g = gram(&ob, &grid, |_| Complex64::new(0.0, 0.0), "0").unwrap();
        assert!(identity_defect(&g.matrix) < 1e-12);
    }

    #[test]
    fn gram_is_monotone_in_symbol() {
        use crate::linalg::Cholesky;
        let b = SectionBasis::sphere(&sphere1(), 5).unwrap();
        let grid = sphere1().quadrature_grid(30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a1: f64 = rng.random_range(-1.0..1.0);
            let a2: f64 = rng.random_range(-1.0..1.0);
            let bump: f64 = rng.random_range(0.0..0.5);
            let phi = move |p: &ChartPoint| {
                let (u, ph) = polar(p);
                Complex64::new(a1 * u + a2 * (1.0 - u * u).sqrt() * ph.cos(), 0.0)
            };
            let psi = move |p: &ChartPoint| phi(p) + bump * (1.0 + polar(p).0).powi(2);
            let g1 = Cholesky::new(&gram(&b, &grid, phi, "phi").unwrap().matrix).unwrap();
            let g2 = Cholesky::new(&gram(&b, &grid, psi, "psi").unwrap().matrix).unwrap();
            assert!(g1.log_det >= g2.log_det - 1e-12);
        }
    }
}
