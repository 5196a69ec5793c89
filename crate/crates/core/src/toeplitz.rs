//! Toeplitz determinants and the deterministic side of the fluctuation
//! theory: log moment generating functions, exact variances, the
//! Moser–Trudinger gap and the strong Szegő defect.
//!
//! Everything goes through `E[e^{−Σφ(x_i)}] = det T[e^{−φ}]`, where
//! `T[g]_ij = ∫ g Ψ_i conj(Ψ_j) dν` in an orthonormal basis.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{SampledBasis, SectionBasis};
use crate::linalg::{lu_log_det, trace_of_product, CMatrix, Cholesky};
use crate::surface::polar;
use crate::testfn::TestFunction;

/// Centering of a linear statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Centering {
    /// Subtract `N·∫φ ω/V`.
    MeanOmega,
    /// Subtract `E[Σφ(x_i)] = ∫φ B_k dν`.
    MeanProcess,
}

/// `‖dφ‖²` of a real test function.
pub fn dirichlet_norm(phi: &TestFunction) -> Result<f64> {
    phi.dirichlet_norm()
}

/// `ℰ_ω(φ)` on a sphere of area `volume`.
pub fn energy(phi: &TestFunction, volume: f64) -> Result<f64> {
    phi.energy(volume)
}

/// A sphere basis sampled on a quadrature grid, reused across symbols.
#[derive(Debug, Clone)]
pub struct ToeplitzContext {
    basis: SectionBasis,
    sampled: SampledBasis,
    polar: Vec<(f64, f64)>,
}

impl ToeplitzContext {
    /// Sample `basis` on the sphere grid of the given resolution.
    pub fn new(basis: &SectionBasis, resolution: usize) -> Result<Self> {
        if !basis.model().is_sphere() {
            return Err(Error::UnsupportedModel("test-function Toeplitz evaluation is defined on the sphere".into()));
        }
        let grid = basis.model().quadrature_grid(resolution)?;
        let sampled = basis.sample_on(&grid)?;
        let polar = grid.nodes.iter().map(polar).collect();
        Ok(Self { basis: basis.clone(), sampled, polar })
    }

    /// Context at [`default_resolution`].
    pub fn for_function(basis: &SectionBasis, phi: &TestFunction) -> Result<Self> {
        Self::new(basis, default_resolution(basis, phi))
    }

    /// Sphere context with `n` particles.
    pub fn with_particles(n: usize, phi: &TestFunction) -> Result<Self> {
        let basis = SectionBasis::sphere_with_particles(n)?;
        Self::for_function(&basis, phi)
    }

    pub fn basis(&self) -> &SectionBasis {
        &self.basis
    }

    /// Number of particles `N`.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn resolution(&self) -> usize {
        self.sampled.grid().resolution
    }

    fn symbol<F: Fn(Complex64) -> Complex64>(&self, phi: &TestFunction, g: F) -> Vec<Complex64> {
        self.polar.iter().map(|(x, p)| g(phi.eval_polar(*x, *p))).collect()
    }

    /// `T[φ]`.
    pub fn toeplitz(&self, phi: &TestFunction) -> CMatrix {
        self.sampled.toeplitz(&self.symbol(phi, |v| v))
    }

    /// `log det T[g]` for raw symbol values on the grid nodes: Cholesky when
    /// `hermitian`, principal-branch LU otherwise.
    pub fn log_det_symbol(&self, symbol: &[Complex64], hermitian: bool) -> Result<Complex64> {
        let t = self.sampled.toeplitz(symbol);
        if hermitian {
            Ok(Complex64::new(Cholesky::new(&t)?.log_det, 0.0))
        } else {
            lu_log_det(&t)
        }
    }

    /// `log E[e^{−Σφ(x_i)}] = log det T[e^{−φ}]`.
    ///
    /// Real `φ`: sum of Cholesky pivot logs (loss of definiteness is an
    /// error). Complex `φ`: the branch is continued from `0` along `s·φ`,
    /// `s ∈ [0, 1]`, with step halving whenever the phase jumps by more than
    /// `π/4` between steps.
    pub fn log_expectation(&self, phi: &TestFunction) -> Result<Complex64> {
        if phi.is_real() {
            let s = self.symbol(phi, |v| (-v).exp());
            return self.log_det_symbol(&s, true);
        }
        let eval = |s: f64| -> Result<Complex64> {
            let sym = self.symbol(phi, |v| (-(v * s)).exp());
            lu_log_det(&self.sampled.toeplitz(&sym))
        };
        let mut s: f64 = 0.0;
        let mut prev = eval(0.0)?;
        let max_step: f64 = 1.0 / 16.0;
        let mut h = max_step;
        while s < 1.0 {
            let next_s = (s + h).min(1.0);
            let mut v = eval(next_s)?;
            let turns = ((prev.im - v.im) / (2.0 * PI)).round();
            v.im += 2.0 * PI * turns;
            if (v.im - prev.im).abs() > PI / 4.0 {
                h /= 2.0;
                if h < 1e-9 {
                    return Err(Error::Numerical("log-determinant branch could not be tracked".into()));
                }
                continue;
            }
            prev = v;
            s = next_s;
            h = (2.0 * h).min(max_step);
        }
        Ok(prev)
    }

    /// `E[Σφ(x_i)] = Tr T[φ]`.
    pub fn process_mean(&self, phi: &TestFunction) -> Complex64 {
        let t = self.toeplitz(phi);
        (0..t.nrows()).map(|i| t[(i, i)]).sum()
    }

    fn center(&self, phi: &TestFunction, centering: Centering) -> Complex64 {
        match centering {
            Centering::MeanOmega => phi.mean() * self.dim() as f64,
            Centering::MeanProcess => self.process_mean(phi),
        }
    }

    /// `log E[e^{−t(Σφ(x_i) − center)}]`.
    pub fn fluctuation_log_mgf(&self, phi: &TestFunction, t: Complex64, centering: Centering) -> Result<Complex64> {
        if t == Complex64::new(0.0, 0.0) {
            return Ok(t);
        }
        let le = self.log_expectation(&phi.scaled(t))?;
        Ok(le + t * self.center(phi, centering))
    }

    /// `Var Σφ(x_i) = Tr T[φ²] − Tr(T[φ]²)` for real `φ`.
    pub fn variance_exact(&self, phi: &TestFunction) -> Result<f64> {
        if !phi.is_real() {
            return Err(Error::InvalidParameter("the variance formula needs a real test function".into()));
        }
        let t1 = self.toeplitz(phi);
        let t2 = self.sampled.toeplitz(&self.symbol(phi, |v| v * v));
        let tr2: f64 = (0..t2.nrows()).map(|i| t2[(i, i)].re).sum();
        let v = tr2 - trace_of_product(&t1, &t1).re;
        if v < -1e-10 {
            return Err(Error::Numerical(format!("negative variance {v}: assembly error")));
        }
        Ok(v.max(0.0))
    }

    /// `(N/(N+1))·½‖dφ‖² − log E[e^{−(Σφ − N∫φω)}]`, nonnegative by the
    /// Moser–Trudinger inequality on the sphere.
    pub fn mt_gap(&self, phi: &TestFunction) -> Result<f64> {
        let n = self.dim() as f64;
        let d = phi.dirichlet_norm()?;
        let lm = self.fluctuation_log_mgf(phi, Complex64::new(1.0, 0.0), Centering::MeanOmega)?;
        Ok(n / (n + 1.0) * 0.5 * d - lm.re)
    }

    /// `½Q(φ) − log E[e^{−(Σφ − N∫φω)}]` with the bilinear Dirichlet form.
    pub fn szego_defect(&self, phi: &TestFunction) -> Result<Complex64> {
        let lm = self.fluctuation_log_mgf(phi, Complex64::new(1.0, 0.0), Centering::MeanOmega)?;
        Ok(0.5 * phi.dirichlet_form() - lm)
    }

    /// `|log E[e^{−φ}]` at this resolution minus the same at twice the
    /// resolution`|.
    pub fn doubling_discrepancy(&self, phi: &TestFunction) -> Result<f64> {
        let fine = Self::new(&self.basis, 2 * self.resolution())?;
        Ok((self.log_expectation(phi)? - fine.log_expectation(phi)?).norm())
    }
}

/// Grid resolution for `φ` on `basis`: the exact-Gram resolution plus room
/// for the bandwidth of `e^{−φ}`.
pub fn default_resolution(basis: &SectionBasis, phi: &TestFunction) -> usize {
    let sup = phi.sup_bound();
    basis.required_resolution() + 16 + 2 * phi.bandwidth() + (2.0 * sup * phi.bandwidth().max(1) as f64).ceil() as usize
}

/// Reference variance `(2/3)·N/(N+1)` of `Σ cosθ_i` on the sphere.
pub fn cos_theta_variance(n: usize) -> f64 {
    let n = n as f64;
    2.0 / 3.0 * n / (n + 1.0)
}

/// One row of a Szegő sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SzegoRow {
    pub n: usize,
    pub log_mgf: f64,
    pub reference: f64,
    pub defect: f64,
}

/// Szegő defects for real `φ` over particle numbers `ns`.
pub fn szego_table(phi: &TestFunction, ns: &[usize]) -> Result<Vec<SzegoRow>> {
    let reference = 0.5 * phi.dirichlet_norm()?;
    ns.iter()
        .map(|&n| {
            let ctx = ToeplitzContext::with_particles(n, phi)?;
            let lm = ctx.fluctuation_log_mgf(phi, Complex64::new(1.0, 0.0), Centering::MeanOmega)?.re;
            Ok(SzegoRow { n, log_mgf: lm, reference, defect: reference - lm })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_on;
    use crate::surface::SurfaceModel;
    use statrs::function::gamma::ln_gamma;

    fn ctx(n: usize, phi: &TestFunction) -> ToeplitzContext {
        ToeplitzContext::with_particles(n, phi).unwrap()
    }

    /// `Σ_j log E[e^{−g(2s−1)}]`, `s ~ Beta(j+1, d−j+1)`: the Toeplitz matrix
    /// of a zonal symbol is diagonal in the monomial basis.
    fn zonal_oracle<G: Fn(f64) -> f64>(d: usize, g: G) -> f64 {
        let (s, w) = gauss_legendre_on(400, 0.0, 1.0);
        (0..=d)
            .map(|j| {
                let lb = ln_gamma((d + 2) as f64) - ln_gamma((j + 1) as f64) - ln_gamma((d - j + 1) as f64);
                let m: f64 = s
                    .iter()
                    .zip(&w)
                    .map(|(s, w)| w * (lb + j as f64 * s.ln() + (d - j) as f64 * (1.0 - s).ln() - g(2.0 * s - 1.0)).exp())
                    .sum();
                m.ln()
            })
            .sum()
    }

    #[test]
    fn zero_and_constants() {
        let z = TestFunction::zero();
        let c = ctx(8, &z);
        assert!(c.log_expectation(&z).unwrap().norm() < 1e-12);
        let k = TestFunction::constant(0.8);
        let c = ctx(8, &k);
        assert!((c.log_expectation(&k).unwrap().re + 8.0 * 0.8).abs() < 1e-12);
        assert!(c.variance_exact(&k).unwrap() < 1e-12);
    }

    #[test]
    fn level_one_cos_theta() {
        for t in [0.3, 1.0, 2.5] {
            let phi = TestFunction::cos_theta().scaled(t);
            let c = ctx(2, &phi);
            let (u, w) = gauss_legendre_on(60, -1.0, 1.0);
            let ap: f64 = u.iter().zip(&w).map(|(u, w)| w * (-t * u).exp() * (1.0 + u)).sum();
            let am: f64 = u.iter().zip(&w).map(|(u, w)| w * (-t * u).exp() * (1.0 - u)).sum();
            let oracle = (0.25 * ap * am).ln();
            assert!((c.log_expectation(&phi).unwrap().re - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn zonal_symbols_match_beta_oracle() {
        for n in [4, 16, 33] {
            for phi in [TestFunction::cos_theta().scaled(1.7), TestFunction::preset("exp-x3:1.2").unwrap()] {
                let c = ctx(n, &phi);
                let got = c.log_expectation(&phi).unwrap().re;
                let oracle = zonal_oracle(n - 1, |u| phi.eval_polar(u, 0.0).re);
                assert!((got - oracle).abs() < 1e-10, "n={n} {phi}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn scaling_identity() {
        let phi = TestFunction::preset("harmonic:5,3").unwrap().scaled(1.3);
        let c = ctx(12, &phi);
        let a = c.log_expectation(&phi).unwrap().re;
        let b = c.log_expectation(&phi.shifted(0.37)).unwrap().re;
        assert!((b - (a - 12.0 * 0.37)).abs() < 1e-12);
    }

    #[test]
    fn cos_theta_variance_closed_form() {
        let phi = TestFunction::cos_theta();
        for n in [1, 2, 8, 32, 64] {
            let c = ctx(n, &phi);
            let v = c.variance_exact(&phi).unwrap();
            assert!((v - cos_theta_variance(n)).abs() < 1e-10, "n={n}");
        }
        assert!((cos_theta_variance(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn variance_is_second_derivative() {
        let phi = TestFunction::preset("harmonic:4,11").unwrap();
        let c = ctx(8, &phi);
        let h = 1e-3;
        let f = |t: f64| c.fluctuation_log_mgf(&phi, Complex64::new(t, 0.0), Centering::MeanProcess).unwrap().re;
        let second = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let v = c.variance_exact(&phi).unwrap();
        assert!((second - v).abs() < 1e-6, "{second} vs {v}");
        let first = (f(h) - f(-h)) / (2.0 * h);
        assert!(first.abs() < 1e-8);
    }

    #[test]
    fn centerings_agree_on_sphere() {
        let phi = TestFunction::preset("harmonic:3,2").unwrap().shifted(0.4);
        let c = ctx(10, &phi);
        let a = c.fluctuation_log_mgf(&phi, Complex64::new(0.7, 0.0), Centering::MeanOmega).unwrap();
        let b = c.fluctuation_log_mgf(&phi, Complex64::new(0.7, 0.0), Centering::MeanProcess).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn onofri_case() {
        // N = 1: log ∫e^{−φ}dν + ∫φ dν ≤ ¼‖dφ‖².
        let phi = TestFunction::preset("exp-x3:1.5").unwrap();
        let c = ctx(1, &phi);
        let grid = SurfaceModel::sphere(1.0).unwrap().quadrature_grid(80).unwrap();
        let direct = grid.integrate(|p| (-phi.eval_real(p)).exp()).ln() + phi.mean().re;
        let gap = c.mt_gap(&phi).unwrap();
        assert!((0.25 * phi.dirichlet_norm().unwrap() - direct - gap).abs() < 1e-12);
        assert!(gap >= 0.0);
    }

    #[test]
    fn mt_gap_nonnegative_for_cos_theta() {
        for n in [2, 8, 32] {
            let phi = TestFunction::cos_theta().scaled(2.0);
            assert!(ctx(n, &phi).mt_gap(&phi).unwrap() >= -1e-8);
        }
        let z = TestFunction::zero();
        assert!(ctx(4, &z).mt_gap(&z).unwrap().abs() < 1e-13);
    }

    #[test]
    fn convex_along_affine_family() {
        let phi = TestFunction::preset("harmonic:3,5").unwrap();
        let c = ctx(6, &phi);
        let f = |t: f64| c.log_expectation(&phi.scaled(t)).unwrap().re;
        for i in -8..8 {
            let t = i as f64 * 0.25;
            assert!(f(t + 0.25) - 2.0 * f(t) + f(t - 0.25) >= -1e-9);
        }
    }

    #[test]
    fn szego_decreasing_for_cos_theta() {
        let rows = szego_table(&TestFunction::cos_theta(), &[8, 16, 32, 64]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].defect.abs() < w[0].defect.abs());
        }
        assert!(rows[3].defect.abs() < 0.05);
        assert!((rows[0].reference - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn complex_symbol_branch_and_bilinear_limit() {
        let s = 1.5;
        let phi = TestFunction::cos_theta().scaled(Complex64::new(0.0, s));
        let c = ctx(48, &phi);
        let lm = c.fluctuation_log_mgf(&phi, Complex64::new(1.0, 0.0), Centering::MeanOmega).unwrap();
        // limit ½Q(iφ) = −s²/3
        assert!((lm.re + s * s / 3.0).abs() < 0.05, "{lm}");
        let d = c.szego_defect(&phi).unwrap();
        assert!(d.norm() < 0.05);
        // the modulus from a plain LU agrees with the branch-tracked value
        let plain = {
            let sym: Vec<Complex64> = c.polar.iter().map(|(x, _)| (Complex64::new(0.0, -s) * x).exp()).collect();
            lu_log_det(&c.sampled.toeplitz(&sym)).unwrap()
        };
        assert!((plain.re - c.log_expectation(&phi).unwrap().re).abs() < 1e-10);
    }

    #[test]
    fn complex_branch_winds_continuously() {
        // For large imaginary amplitude the determinant winds; the tracked
        // imaginary part must agree with the zonal oracle's continuous phase.
        let s = 6.0;
        let n = 6;
        let phi = TestFunction::cos_theta().scaled(Complex64::new(0.0, s));
        let c = ctx(n, &phi);
        let got = c.log_expectation(&phi).unwrap();
        // each diagonal entry E[e^{−is(2x−1)}] has a phase we unwrap along s
        let (x, w) = gauss_legendre_on(200, 0.0, 1.0);
        let d = n - 1;
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..=d {
            let lb = ln_gamma((d + 2) as f64) - ln_gamma((j + 1) as f64) - ln_gamma((d - j + 1) as f64);
            let entry = |t: f64| -> Complex64 {
                x.iter()
                    .zip(&w)
                    .map(|(x, w)| {
                        let dens = (lb + j as f64 * x.ln() + (d - j) as f64 * (1.0 - x).ln()).exp();
                        Complex64::new(0.0, -t * (2.0 * x - 1.0)).exp() * (w * dens)
                    })
                    .sum()
            };
            let mut prev = Complex64::new(0.0, 0.0);
            for i in 1..=2000 {
                let mut v = entry(s * i as f64 / 2000.0).ln();
                v.im += 2.0 * PI * ((prev.im - v.im) / (2.0 * PI)).round();
                prev = v;
            }
            total += prev;
        }
        assert!((got - total).norm() < 1e-8, "{got} vs {total}");
    }

    #[test]
    fn resolution_doubling_is_stable() {
        let phi = TestFunction::preset("harmonic:8,1").unwrap().scaled(4.0);
        let c = ctx(16, &phi);
        assert!(c.doubling_discrepancy(&phi).unwrap() < 1e-9);
    }

    #[test]
    fn energy_and_norm_reexports() {
        let phi = TestFunction::cos_theta();
        assert!((dirichlet_norm(&phi).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((energy(&phi, 1.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_torus() {
        let t = SurfaceModel::torus(Complex64::new(0.0, 1.0), 1.0).unwrap();
        let b = SectionBasis::torus(&t, 3, 10).unwrap();
        assert!(ToeplitzContext::new(&b, 20).is_err());
    }
}
