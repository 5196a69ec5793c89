//! Test functions `φ` on the sphere, named presets and Dirichlet norms.
//!
//! A [`TestFunction`] is `α·shape + c` with complex `α` and `c`. Shapes are
//! real; complex `φ` arise only through the amplitude and offset.
//! The Dirichlet form `Q(φ) = ∫ dφ∧d^cφ = (1/4π)∫|∇φ|² dA` is extended
//! bilinearly, so `Q(αφ) = α²·Q(φ)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::harmonics;
use crate::quadrature::gauss_legendre;
use crate::surface::{polar, ChartPoint};

/// Real profile of a test function.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Zero,
    /// `x₃ = cosθ`.
    CosTheta,
    /// `e^{κ x₃}`.
    ExpX3 {
        kappa: f64,
    },
    /// `Σ a_{l,m} Y_{l,m}` (see [`crate::harmonics`]).
    Harmonic {
        coeffs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    shape: Shape,
    scale: Complex64,
    offset: Complex64,
    label: String,
}

/// Named presets with one-line descriptions, alphabetical.
pub const PRESETS: &[(&str, &str)] = &[
    ("cos-theta", "height function x3 = cos(theta); Dirichlet norm 2/3"),
    ("exp-x3:KAPPA", "exp(KAPPA * x3), zonal closed form"),
    ("harmonic:L,SEED", "random real harmonic of bandlimit L with unit Dirichlet norm"),
    ("zero", "the zero function"),
];

impl TestFunction {
    pub fn new(shape: Shape) -> Self {
        let label = match &shape {
            Shape::Zero => "zero".to_string(),
            Shape::CosTheta => "cos-theta".to_string(),
            Shape::ExpX3 { kappa } => format!("exp-x3:{kappa}"),
            Shape::Harmonic { coeffs } => format!("harmonic[{}]", harmonics::bandlimit(coeffs.len())),
        };
        Self { shape, scale: Complex64::new(1.0, 0.0), offset: Complex64::new(0.0, 0.0), label }
    }

    pub fn zero() -> Self {
        Self::new(Shape::Zero)
    }

    pub fn cos_theta() -> Self {
        Self::new(Shape::CosTheta)
    }

    pub fn constant(c: f64) -> Self {
        Self::zero().shifted(c)
    }

    /// Parse a preset descriptor (`cos-theta`, `zero`, `exp-x3:κ`,
    /// `harmonic:L,seed`).
    pub fn preset(descriptor: &str) -> Result<Self> {
        let d = descriptor.trim();
        let bad = || Error::InvalidParameter(format!("unknown test function preset '{d}'"));
        match d {
            "cos-theta" => return Ok(Self::cos_theta()),
            "zero" => return Ok(Self::zero()),
            _ => {}
        }
        if let Some(rest) = d.strip_prefix("exp-x3:") {
            let kappa: f64 = rest.trim().parse().map_err(|_| bad())?;
            if !kappa.is_finite() {
                return Err(bad());
            }
            return Ok(Self::new(Shape::ExpX3 { kappa }));
        }
        if let Some(rest) = d.strip_prefix("harmonic:") {
            let (l, seed) = rest.split_once(',').ok_or_else(bad)?;
            let l: usize = l.trim().parse().map_err(|_| bad())?;
            let seed: u64 = seed.trim().parse().map_err(|_| bad())?;
            let mut f = Self::random_harmonic(l, seed)?;
            f.label = format!("harmonic:{l},{seed}");
            return Ok(f);
        }
        Err(bad())
    }

    /// Random real harmonic with components in degrees `1..=l_max`
    /// (`a_{l,m} ~ N(0,1)/l`), normalized to `‖dφ‖² = 1`.
    pub fn random_harmonic(l_max: usize, seed: u64) -> Result<Self> {
        if l_max < 1 {
            return Err(Error::InvalidParameter("harmonic bandlimit must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![0.0; harmonics::count(l_max)];
        for (i, c) in coeffs.iter_mut().enumerate().skip(1) {
            let (l, _) = harmonics::degree_order(i);
            let g: f64 = StandardNormal.sample(&mut rng);
            *c = g / l as f64;
        }
        let norm = spectral_norm(&coeffs);
        let s = norm.sqrt().recip();
        coeffs.iter_mut().for_each(|c| *c *= s);
        Ok(Self::new(Shape::Harmonic { coeffs }))
    }

    pub fn label(&self) -> String {
        let mut s = self.label.clone();
        if self.scale != Complex64::new(1.0, 0.0) {
            s = if self.scale.im == 0.0 {
                format!("{}*{}", self.scale.re, s)
            } else {
                format!("({}{:+}i)*{}", self.scale.re, self.scale.im, s)
            };
        }
        if self.offset.im != 0.0 {
            s = format!("{s}+({}{:+}i)", self.offset.re, self.offset.im);
        } else if self.offset.re != 0.0 {
            s = format!("{s}{:+}", self.offset.re);
        }
        s
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn offset(&self) -> Complex64 {
        self.offset
    }

    pub fn is_real(&self) -> bool {
        self.scale.im == 0.0 && self.offset.im == 0.0
    }

    /// `α·φ` (the offset is scaled too).
    pub fn scaled(&self, alpha: impl Into<Complex64>) -> Self {
        let alpha = alpha.into();
        Self { scale: self.scale * alpha, offset: self.offset * alpha, ..self.clone() }
    }

    /// `φ + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { offset: self.offset + c, ..self.clone() }
    }

    fn harmonic_shape(&self) -> Option<Vec<f64>> {
        match &self.shape {
            Shape::Zero => Some(vec![0.0]),
            Shape::CosTheta => {
                let mut c = vec![0.0; 4];
                c[harmonics::index(1, 0)] = (4.0 * PI / 3.0).sqrt();
                Some(c)
            }
            Shape::Harmonic { coeffs } => Some(coeffs.clone()),
            Shape::ExpX3 { .. } => None,
        }
    }

    fn shape_value(&self, x3: f64, phi: f64) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::CosTheta => x3,
            Shape::ExpX3 { kappa } => (kappa * x3).exp(),
            Shape::Harmonic { coeffs } => harmonics::synthesize(coeffs, x3, phi),
        }
    }

    /// `φ(p)`.
    pub fn eval(&self, p: &ChartPoint) -> Complex64 {
        let (x3, phi) = polar(p);
        self.eval_polar(x3, phi)
    }

    /// `φ` at `(cosθ, ϕ)`.
    pub fn eval_polar(&self, x3: f64, phi: f64) -> Complex64 {
        self.scale * self.shape_value(x3, phi) + self.offset
    }

    /// Real part of `φ(p)`; meant for real test functions.
    pub fn eval_real(&self, p: &ChartPoint) -> f64 {
        self.eval(p).re
    }

    /// Spherical-harmonic coefficients of a real test function, when the
    /// shape has a finite expansion.
    pub fn harmonic_coefficients(&self) -> Option<Vec<f64>> {
        if !self.is_real() {
            return None;
        }
        let mut c = self.harmonic_shape()?;
        c.iter_mut().for_each(|a| *a *= self.scale.re);
        c[0] += self.offset.re * (4.0 * PI).sqrt();
        Some(c)
    }

    /// `∫ φ dν` on the sphere.
    pub fn mean(&self) -> Complex64 {
        let m = match &self.shape {
            Shape::Zero | Shape::CosTheta => 0.0,
            Shape::ExpX3 { kappa } => {
                if kappa.abs() < 1e-8 {
                    1.0 + kappa * kappa / 6.0
                } else {
                    kappa.sinh() / kappa
                }
            }
            Shape::Harmonic { coeffs } => coeffs[0] / (4.0 * PI).sqrt(),
        };
        self.scale * m + self.offset
    }

    /// Dirichlet form of the real shape, `(1/4π)∫|∇shape|² dA`.
    fn shape_dirichlet(&self) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::CosTheta => 2.0 / 3.0,
            Shape::Harmonic { coeffs } => spectral_norm(coeffs),
            Shape::ExpX3 { kappa } => {
                // ½∫(1−x²)κ²e^{2κx} dx
                let (x, w) = gauss_legendre(96);
                0.5 * x.iter().zip(&w).map(|(x, w)| w * (1.0 - x * x) * kappa * kappa * (2.0 * kappa * x).exp()).sum::<f64>()
            }
        }
    }

    /// `‖dφ‖² = ∫dφ∧d^cφ` of a real test function.
    pub fn dirichlet_norm(&self) -> Result<f64> {
        if !self.is_real() {
            return Err(Error::InvalidParameter("the Dirichlet norm needs a real test function".into()));
        }
        Ok(self.scale.re * self.scale.re * self.shape_dirichlet())
    }

    /// Spectral path `(1/4π)Σ l(l+1)a_{l,m}²`, when coefficients exist.
    pub fn dirichlet_norm_spectral(&self) -> Option<f64> {
        self.harmonic_coefficients().map(|c| spectral_norm(&c))
    }

    /// Quadrature path `(1/4π)∫|∇φ|² dA` on a Gauss–Legendre × uniform grid
    /// with `resolution` latitudes, doubled until two successive values
    /// agree to `1e−12` (relative).
    pub fn dirichlet_norm_quadrature(&self, resolution: usize) -> Result<f64> {
        if !self.is_real() {
            return Err(Error::InvalidParameter("the Dirichlet norm needs a real test function".into()));
        }
        let mut n = resolution.max(4);
        let mut prev = self.gradient_energy(n);
        for _ in 0..6 {
            let next = self.gradient_energy(2 * n);
            if (next - prev).abs() <= 1e-12 * next.abs().max(1.0) {
                return Ok(next);
            }
            prev = next;
            n *= 2;
        }
        Err(Error::InsufficientResolution { got: n, required: 2 * n })
    }

    fn gradient_energy(&self, n: usize) -> f64 {
        let (x, w) = gauss_legendre(n);
        let m = 2 * n + 1;
        let a = self.scale.re;
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let s2 = 1.0 - xi * xi;
            for j in 0..m {
                let phi = 2.0 * PI * j as f64 / m as f64;
                let g2 = match &self.shape {
                    Shape::Zero => 0.0,
                    Shape::CosTheta => s2,
                    Shape::ExpX3 { kappa } => s2 * (kappa * (kappa * xi).exp()).powi(2),
                    Shape::Harmonic { coeffs } => {
                        let h = harmonics::evaluate(harmonics::bandlimit(coeffs.len()), *xi, phi);
                        let dt: f64 = coeffs.iter().zip(&h.d_theta).map(|(c, d)| c * d).sum();
                        let dp: f64 = coeffs.iter().zip(&h.d_phi).map(|(c, d)| c * d).sum();
                        dt * dt + dp * dp
                    }
                };
                total += wi * (2.0 * PI / m as f64) * g2;
            }
        }
        a * a * total / (4.0 * PI)
    }

    /// Bilinear extension `Q(φ) = α²·Q(shape)`.
    pub fn dirichlet_form(&self) -> Complex64 {
        self.scale * self.scale * self.shape_dirichlet()
    }

    /// `ℰ(φ) = (1/V)(−½‖dφ‖² + ∫φ ω)` on a sphere of area `volume`.
    pub fn energy(&self, volume: f64) -> Result<f64> {
        let d = self.dirichlet_norm()?;
        Ok((-0.5 * d + volume * self.mean().re) / volume)
    }

    /// Upper bound for `sup |φ|` (used to size quadrature grids).
    pub fn sup_bound(&self) -> f64 {
        let s = match &self.shape {
            Shape::Zero => 0.0,
            Shape::CosTheta => 1.0,
            Shape::ExpX3 { kappa } => kappa.abs().exp(),
            Shape::Harmonic { coeffs } => {
                // |Y_{l,m}| ≤ √((2l+1)/4π)
                coeffs.iter().enumerate().map(|(i, c)| c.abs() * ((2 * harmonics::degree_order(i).0 + 1) as f64 / (4.0 * PI)).sqrt()).sum()
            }
        };
        self.scale.norm() * s + self.offset.norm()
    }

    /// Highest spherical-harmonic degree present (a rough bandwidth for
    /// closed forms).
    pub fn bandwidth(&self) -> usize {
        match &self.shape {
            Shape::Zero => 0,
            Shape::CosTheta => 1,
            Shape::ExpX3 { kappa } => (3.0 * kappa.abs()).ceil() as usize + 4,
            Shape::Harmonic { coeffs } => harmonics::bandlimit(coeffs.len()),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn spectral_norm(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let l = harmonics::degree_order(i).0 as f64;
            l * (l + 1.0) * a * a
        })
        .sum::<f64>()
        / (4.0 * PI)
}
