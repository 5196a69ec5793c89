//! Bergman kernels: global (basis sums) and local model (closed form),
//! Möbius transfer identities, reproducing errors and decay-rate fits.

use std::f64::consts::PI;

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::SectionBasis;
use crate::quadrature::gauss_legendre_on;
use crate::surface::{model_weight, shortest_lattice_vector, ChartId, ChartPoint, SurfaceModel};

/// Below this |R| the flat limit formulas are used.
pub const FLAT_LIMIT: f64 = 1e-8;

/// A Bergman kernel that can be evaluated off the diagonal.
#[derive(Debug, Clone)]
pub enum KernelEval {
    /// `K(z, w) = Σ_j f_j(z) conj(f_j(w))` from an orthonormal basis.
    BasisSum(SectionBasis),
    /// `K(z, w) = (k + R/2)(1 + R z w̄)^{2k/R}` on a model chart.
    ModelClosedForm { curvature: f64, k: f64 },
}

/// Global kernel of an orthonormal basis.
pub fn global_kernel(basis: &SectionBasis) -> KernelEval {
    KernelEval::BasisSum(basis.clone())
}

/// Local model kernel of curvature `R` at level `k`.
pub fn model_kernel(curvature: f64, k: f64) -> Result<KernelEval> {
    if !curvature.is_finite() || !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("model kernel needs finite R and k > 0 (R={curvature}, k={k})")));
    }
    Ok(KernelEval::ModelClosedForm { curvature, k })
}

impl KernelEval {
    /// `K(z, w)` in the trivialization of the affine chart.
    pub fn evaluate(&self, z: &ChartPoint, w: &ChartPoint) -> Result<Complex64> {
        match self {
            KernelEval::BasisSum(b) => {
                let fz = b.values(z)?;
                let fw = b.values(w)?;
                Ok(fz.iter().zip(&fw).map(|(a, b)| a * b.conj()).sum())
            }
            KernelEval::ModelClosedForm { curvature, k } => {
                check_model_point(*curvature, z)?;
                check_model_point(*curvature, w)?;
                let r = *curvature;
                let x = z.z * w.z.conj();
                if r.abs() < FLAT_LIMIT {
                    return Ok(*k * (2.0 * k * x).exp());
                }
                let base = Complex64::new(1.0, 0.0) + r * x;
                if r > 0.0 && (r * x).norm() >= 1.0 {
                    return Err(Error::ChartViolation(format!("|R z w̄| = {} ≥ 1", (r * x).norm())));
                }
                Ok((k + r / 2.0) * (base.ln() * (2.0 * k / r)).exp())
            }
        }
    }

    /// `K(z, w)·e^{−kΦ(z)/2 − kΦ(w)/2}`; its modulus is the point-wise norm
    /// of the kernel and never overflows for basis sums.
    pub fn unitary(&self, z: &ChartPoint, w: &ChartPoint) -> Result<Complex64> {
        match self {
            KernelEval::BasisSum(b) => {
                let fz = b.unitary_values(z);
                let fw = b.unitary_values(w);
                Ok(fz.iter().zip(&fw).map(|(a, b)| a * b.conj()).sum())
            }
            KernelEval::ModelClosedForm { curvature, k } => {
                let kz = self.evaluate(z, w)?;
                let wz = model_weight(*curvature, z.z.norm_sqr());
                let ww = model_weight(*curvature, w.z.norm_sqr());
                Ok(kz * (-0.5 * k * (wz + ww)).exp())
            }
        }
    }

    /// Diagonal norm `B(x) = K(x,x)e^{−kΦ(x)}`.
    pub fn diagonal(&self, x: &ChartPoint) -> Result<f64> {
        match self {
            KernelEval::BasisSum(b) => Ok(b.bergman_function(x)),
            KernelEval::ModelClosedForm { .. } => Ok(self.unitary(x, x)?.re),
        }
    }
}

fn check_model_point(r: f64, p: &ChartPoint) -> Result<()> {
    if p.chart != ChartId::Affine {
        return Err(Error::ChartViolation("model kernels live in the affine chart".into()));
    }
    if !p.z.is_finite() || 1.0 + r * p.z.norm_sqr() <= 0.0 {
        return Err(Error::ChartViolation(format!("1 + R|z|² ≤ 0 at z = {}", p.z)));
    }
    Ok(())
}

/// `Φ_R(z) = (2/R) log(1 + R|z|²)`.
pub fn model_phi(z: Complex64, r: f64) -> Result<f64> {
    if 1.0 + r * z.norm_sqr() <= 0.0 {
        return Err(Error::ChartViolation(format!("1 + R|z|² ≤ 0 at z = {z}")));
    }
    Ok(model_weight(r, z.norm_sqr()))
}

/// `F_z(w) = (z − w)/(1 + R z̄ w)`; an involution in `w`.
pub fn mobius_map(z: Complex64, w: Complex64, r: f64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) + r * z.conj() * w;
    if den.norm() < 1e-12 * (1.0 + (z - w).norm()) {
        return Err(Error::ChartViolation(format!("Möbius denominator vanishes at z = {z}, w = {w}")));
    }
    Ok((z - w) / den)
}

/// Polarization `ψ(z, w) = (2/R) log(1 + R z w)` (principal branch,
/// `|R z w| < 1`), so that `ψ(z̄, z) = Φ(z)`.
pub fn psi(z: Complex64, w: Complex64, r: f64) -> Result<Complex64> {
    let x = z * w;
    if r.abs() < FLAT_LIMIT {
        return Ok(2.0 * x);
    }
    if (r * x).norm() >= 1.0 {
        return Err(Error::ChartViolation(format!("|R z w| = {} ≥ 1", (r * x).norm())));
    }
    Ok((Complex64::new(1.0, 0.0) + r * x).ln() * (2.0 / r))
}

/// Absolute residuals of the two transfer identities with `ζ = F_z(w)`:
/// `ψ(z̄,w) + ψ(z,w̄) − Φ(w) − Φ(z) + Φ(ζ)` and
/// `ψ(z̄,w) − Φ(w) − ψ(z,ζ̄) + Φ(ζ)`.
pub fn relation_residuals(z: Complex64, w: Complex64, r: f64) -> Result<(f64, f64)> {
    let zeta = mobius_map(z, w, r)?;
    let pz = model_phi(z, r)?;
    let pw = model_phi(w, r)?;
    let pzeta = model_phi(zeta, r)?;
    let a = psi(z.conj(), w, r)?;
    let b = psi(z, w.conj(), r)?;
    let c = psi(z, zeta.conj(), r)?;
    let r1 = (a + b - pw - pz + pzeta).norm();
    let r2 = (a - pw - c + pzeta).norm();
    Ok((r1, r2))
}

/// Residuals of all four identities (involution, polarization diagonal and
/// the two transfer relations) at one admissible pair.
pub fn identity_residuals(z: Complex64, w: Complex64, r: f64) -> Result<[f64; 4]> {
    let back = mobius_map(z, mobius_map(z, w, r)?, r)?;
    let diag = (psi(z.conj(), z, r)? - model_phi(z, r)?).norm();
    let (r1, r2) = relation_residuals(z, w, r)?;
    Ok([(back - w).norm(), diag, r1, r2])
}

/// Draw `(z, w)` with `|z|, |w| ≤ ρ/√|R|`, `ρ = 0.95` for `R < 0` and
/// `ρ = 0.55` for `R > 0` (radius 1 for `R = 0`). Then `|R z w̄| < 1` and
/// `|R z ζ̄| < 1` for `ζ = F_z(w)`, so every identity stays on the principal
/// branch.
pub fn sample_admissible_pair<G: rand::Rng + ?Sized>(r: f64, rng: &mut G) -> (Complex64, Complex64) {
    let radius = if r.abs() < FLAT_LIMIT {
        1.0
    } else if r < 0.0 {
        0.95 / (-r).sqrt()
    } else {
        0.55 / r.sqrt()
    };
    let mut draw = || {
        let rho = radius * rng.random::<f64>().sqrt();
        Complex64::from_polar(rho, rng.random_range(0.0..(2.0 * PI)))
    };
    let z = draw();
    let w = draw();
    (z, w)
}

/// `|f(0) − (k + R/2)∫_{|w|<ε} f e^{−kΦ} ω|` for a polynomial `f`
/// (coefficients in increasing degree), by Gauss–Legendre quadrature in
/// `s = |w|²` and a uniform azimuthal rule exact for `f`. The radial rule is
/// doubled until two successive values agree.
pub fn local_reproduce_error(f: &[Complex64], k: f64, eps: f64, r: f64) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::InvalidParameter("empty polynomial".into()));
    }
    if !(eps > 0.0) || 1.0 + r * eps * eps <= 0.0 {
        return Err(Error::ChartViolation(format!("ε = {eps} outside the model chart for R = {r}")));
    }
    let m = f.len() + 1;
    let mut n = ((k.abs() / 2.0).ceil() as usize + f.len() + 8).max(16);
    let mut prev = reproduce_integral(f, k, eps, r, n, m);
    for _ in 0..8 {
        n *= 2;
        let next = reproduce_integral(f, k, eps, r, n, m);
        let f0 = f[0];
        if (next - prev).norm() <= 1e-15 * f0.norm().max(1.0) {
            return Ok((f0 - next).norm());
        }
        prev = next;
    }
    Err(Error::InsufficientResolution { got: n / 2, required: n })
}

fn reproduce_integral(f: &[Complex64], k: f64, eps: f64, r: f64, n: usize, m: usize) -> Complex64 {
    // ω = (2/π)(1+Rs)^{−2} dA, e^{−kΦ} = (1+Rs)^{−2k/R}; dA = ½ ds dϕ.
    let (s, ws) = gauss_legendre_on(n, 0.0, eps * eps);
    let mut total = Complex64::new(0.0, 0.0);
    for (si, wi) in s.iter().zip(&ws) {
        let radial = if r.abs() < FLAT_LIMIT { (-2.0 * k * si).exp() } else { (1.0 + r * si).powf(-2.0 * k / r - 2.0) };
        let rho = si.sqrt();
        let mut ring = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let w = Complex64::from_polar(rho, 2.0 * PI * j as f64 / m as f64);
            let mut val = Complex64::new(0.0, 0.0);
            for c in f.iter().rev() {
                val = val * w + c;
            }
            ring += val;
        }
        // (2/π)·½·2π = 2 after averaging the ring
        total += ring / m as f64 * (2.0 * wi * radial);
    }
    total * (k + r / 2.0)
}

/// Closed-form error for `f = 1`: `(1 + Rε²)^{−2k/R − 1}` (`e^{−2kε²}` flat).
pub fn local_reproduce_error_constant(k: f64, eps: f64, r: f64) -> f64 {
    if r.abs() < FLAT_LIMIT {
        (-2.0 * k * eps * eps).exp()
    } else {
        (1.0 + r * eps * eps).powf(-2.0 * k / r - 1.0)
    }
}

/// Least-squares fit of `log error ≈ a − δ·k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub ks: Vec<usize>,
    pub errors: Vec<f64>,
    /// Fitted rate `δ̂` (negated slope).
    pub rate: f64,
    pub intercept: f64,
    /// RMS of the residuals in `log error`.
    pub residual: f64,
}

/// Fit a decay rate to errors over a window of levels.
pub fn fit_decay(ks: &[usize], errors: &[f64]) -> Result<DecayFit> {
    if ks.len() != errors.len() {
        return Err(Error::FitWindow("k and error lists differ in length".into()));
    }
    if ks.len() < 4 {
        return Err(Error::FitWindow(format!("need at least 4 points, got {}", ks.len())));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 1e-300) || !e.is_finite()) {
        return Err(Error::FitWindow(format!("error value {e} underflows the fit window")));
    }
    let n = ks.len() as f64;
    let x: Vec<f64> = ks.iter().map(|k| *k as f64).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitWindow("all k values are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { ks: ks.to_vec(), errors: errors.to_vec(), rate: -slope, intercept, residual })
}

/// Sweep of the local reproducing error over `ks` with its decay fit.
pub fn local_decay(f: &[Complex64], ks: &[usize], eps: f64, r: f64) -> Result<DecayFit> {
    let errors = sweep(ks, |k| local_reproduce_error(f, k as f64, eps, r))?;
    fit_decay(ks, &errors)
}

fn sweep<F>(ks: &[usize], f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let out: Vec<Result<f64>> = ks.par_iter().map(|k| f(*k)).collect();
    #[cfg(not(feature = "parallel"))]
    let out: Vec<Result<f64>> = ks.iter().map(|k| f(*k)).collect();
    out.into_iter().collect()
}

/// Leading periodization term of the flat-torus Bergman error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodizationOracle {
    /// Exponent `δ = πV|λ|²/(2 Im τ)` of the shortest lattice vector `λ`.
    pub rate: f64,
    /// Number of shortest lattice vectors.
    pub multiplicity: usize,
}

impl PeriodizationOracle {
    pub fn new(model: &SurfaceModel) -> Result<Self> {
        let tau = model.tau().ok_or_else(|| Error::UnsupportedModel("periodization needs the flat torus".into()))?;
        let shortest = shortest_lattice_vector(tau).norm_sqr();
        let mut multiplicity = 0;
        for a in -3i32..=3 {
            for b in -3i32..=3 {
                let v = tau * b as f64 + a as f64;
                if (a, b) != (0, 0) && (v.norm_sqr() - shortest).abs() <= 1e-12 * shortest {
                    multiplicity += 1;
                }
            }
        }
        Ok(Self { rate: PI * model.volume() * shortest / (2.0 * tau.im), multiplicity })
    }

    /// Predicted `sup |B_k/k − 1| ≈ m·e^{−δk}`.
    pub fn predicted_error(&self, k: usize) -> f64 {
        self.multiplicity as f64 * (-self.rate * k as f64).exp()
    }
}

/// `(2/(RV))·log cosh(√(πR/2)·I)` and its flat limit `π I²/(2V)`, with `I`
/// the injectivity radius measured in the metric `ω`.
pub fn injectivity_rate_bound(curvature: f64, volume: f64, injectivity: f64) -> f64 {
    if curvature.abs() < FLAT_LIMIT {
        PI * injectivity * injectivity / (2.0 * volume)
    } else if curvature > 0.0 {
        2.0 / (curvature * volume) * ((PI * curvature / 2.0).sqrt() * injectivity).cosh().ln()
    } else {
        2.0 / (curvature * volume) * ((PI * -curvature / 2.0).sqrt() * injectivity).cos().ln()
    }
}

/// Sup of `|B_k/k − 1|` over an `n × n` grid of the fundamental domain.
pub fn torus_sup_error(model: &SurfaceModel, k: usize, truncation: usize, n: usize) -> Result<f64> {
    let basis = SectionBasis::torus(model, k, truncation)?;
    let tau = model.tau().expect("torus model");
    let kv = basis.degree() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = tau * (i as f64 / n as f64) + j as f64 / n as f64;
            let e = basis.bergman_function(&ChartPoint::affine(z)) / kv - 1.0;
            worst = worst.max(e.abs());
        }
    }
    Ok(worst)
}

/// Flat-torus Bergman error sweep and comparison with the periodization
/// oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusDecay {
    pub fit: DecayFit,
    pub oracle: PeriodizationOracle,
    /// `π I²/(2V)` with `I` the injectivity radius in the metric of `ω`.
    pub injectivity_bound: f64,
    pub grid: usize,
}

impl TorusDecay {
    /// `|δ̂/δ_oracle − 1|`.
    pub fn relative_rate_error(&self) -> f64 {
        (self.fit.rate / self.oracle.rate - 1.0).abs()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.fit.errors.windows(2).all(|w| w[1] < w[0])
    }
}

/// Errors `sup |B_k/k − 1|` for `k ∈ ks` on a `grid_per_k·k` square grid
/// (at least 32), fitted and compared with the lattice-sum exponent.
pub fn torus_bergman_error(model: &SurfaceModel, ks: &[usize], truncation: usize, grid_per_k: usize) -> Result<TorusDecay> {
    let oracle = PeriodizationOracle::new(model)?;
    let errors = sweep(ks, |k| torus_sup_error(model, k, truncation, (grid_per_k * k).max(32)))?;
    let fit = fit_decay(ks, &errors)?;
    let inj = model.injectivity_radius()? * model.metric_scale();
    let grid = ks.iter().map(|k| (grid_per_k * k).max(32)).max().unwrap_or(0);
    Ok(TorusDecay { fit, oracle, injectivity_bound: injectivity_rate_bound(0.0, model.volume(), inj), grid })
}

/// Sup of `|B_k(x) − B|` over the nodes of a grid.
pub fn sup_deviation(basis: &SectionBasis, nodes: &[ChartPoint], target: f64) -> f64 {
    nodes.iter().map(|p| (basis.bergman_function(p) - target).abs()).fold(0.0, f64::max)
}
