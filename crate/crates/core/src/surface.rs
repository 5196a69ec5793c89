//! Constant-curvature surface models, chart coordinates and quadrature grids.
//!
//! Three models are supported:
//!
//! * the round sphere of area `V` in the affine chart `z` (south pole at `z = 0`)
//!   with weight `Φ(z) = V·log(1 + |z|²)`;
//! * the flat torus `ℂ/(ℤ + τℤ)` with weight `Φ(z) = 2πV·(Im z)²/Im τ`;
//! * a hyperbolic disc chart `|w| < r_max` with the model weight
//!   `Φ(w) = (2/R)·log(1 + R|w|²)`, which only supports local operations.
//!
//! In every case `ω = dd^cΦ` with `dd^c = (i/2π)∂∂̄`, so the density of `ω`
//! with respect to Lebesgue measure in the chart is `(1/π)·∂²Φ/∂z∂z̄`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SurfaceKind {
    Sphere,
    FlatTorus { tau: Complex64 },
    HyperbolicChart { r_max: f64 },
}

/// Geometry of one of the three constant-curvature models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    kind: SurfaceKind,
    genus: Option<u32>,
    curvature: f64,
    volume: f64,
}

/// Which affine chart a coordinate refers to.
///
/// The sphere uses `Affine` (`z`, south pole at the origin) and `Infinity`
/// (`w = 1/z`, north pole at the origin). Torus and disc points are always
/// `Affine`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartId {
    Affine,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub z: Complex64,
    pub chart: ChartId,
}

impl ChartPoint {
    pub fn affine(z: Complex64) -> Self {
        Self { z, chart: ChartId::Affine }
    }

    pub fn at_infinity(w: Complex64) -> Self {
        Self { z: w, chart: ChartId::Infinity }
    }

    /// Coordinate in the affine chart; `None` at the north pole.
    pub fn affine_coordinate(&self) -> Option<Complex64> {
        match self.chart {
            ChartId::Affine => Some(self.z),
            ChartId::Infinity if self.z == Complex64::new(0.0, 0.0) => None,
            ChartId::Infinity => Some(self.z.inv()),
        }
    }
}

/// Quadrature rule for `∫ f ω` (total weight `V` on global models).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    pub nodes: Vec<ChartPoint>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree in `u = cos θ` integrated exactly (sphere and
    /// radial disc rules); `None` for the periodic torus rule.
    pub exact_degree: Option<usize>,
    pub resolution: usize,
}

impl QuadGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate<F: Fn(&ChartPoint) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn integrate_complex<F: Fn(&ChartPoint) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| f(p) * *w).sum()
    }

    /// CSV dump with columns `re_z,im_z,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_z,im_z,weight\n");
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", p.z.re, p.z.im, w);
        }
        out
    }
}

impl SurfaceModel {
    /// Round sphere of area `volume`, curvature `R = 2/V`.
    pub fn sphere(volume: f64) -> Result<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::InvalidParameter(format!("sphere volume must be positive, got {volume}")));
        }
        Ok(Self { kind: SurfaceKind::Sphere, genus: Some(0), curvature: 2.0 / volume, volume })
    }

    /// Flat torus `ℂ/(ℤ + τℤ)` with `ω` of total mass `volume`.
    pub fn torus(tau: Complex64, volume: f64) -> Result<Self> {
        if !(tau.im > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("torus modulus needs Im τ > 0, got {tau}")));
        }
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::InvalidParameter(format!("torus volume must be positive, got {volume}")));
        }
        Ok(Self { kind: SurfaceKind::FlatTorus { tau }, genus: Some(1), curvature: 0.0, volume })
    }

    /// Disc chart `|w| < r_max` of the hyperbolic model with curvature `R < 0`.
    pub fn hyperbolic_chart(curvature: f64, r_max: f64) -> Result<Self> {
        if !(curvature < 0.0 && curvature.is_finite()) {
            return Err(Error::InvalidParameter(format!("hyperbolic curvature must be negative, got {curvature}")));
        }
        if !(r_max > 0.0) {
            return Err(Error::InvalidParameter(format!("chart radius must be positive, got {r_max}")));
        }
        let limit = 1.0 / (-curvature).sqrt();
        if r_max >= limit {
            return Err(Error::ChartViolation(format!("r_max = {r_max} must be below 1/sqrt(-R) = {limit}")));
        }
        Ok(Self { kind: SurfaceKind::HyperbolicChart { r_max }, genus: None, curvature, volume: 1.0 })
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    /// Genus of the global model; `None` for the local hyperbolic chart.
    pub fn genus(&self) -> Option<u32> {
        self.genus
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn is_global(&self) -> bool {
        self.genus.is_some()
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, SurfaceKind::Sphere)
    }

    pub fn tau(&self) -> Option<Complex64> {
        match self.kind {
            SurfaceKind::FlatTorus { tau } => Some(tau),
            _ => None,
        }
    }

    /// Weight `Φ` of the reference metric at `p`, in the trivialization of
    /// `p.chart`.
    pub fn weight(&self, p: &ChartPoint) -> f64 {
        let r2 = p.z.norm_sqr();
        match self.kind {
            SurfaceKind::Sphere => self.volume * r2.ln_1p(),
            SurfaceKind::FlatTorus { tau } => 2.0 * PI * self.volume * p.z.im * p.z.im / tau.im,
            SurfaceKind::HyperbolicChart { .. } => model_weight(self.curvature, r2),
        }
    }

    /// Density of `ω` with respect to `dx dy` in the chart.
    pub fn omega_density(&self, p: &ChartPoint) -> f64 {
        let r2 = p.z.norm_sqr();
        match self.kind {
            SurfaceKind::Sphere => self.volume / (PI * (1.0 + r2).powi(2)),
            SurfaceKind::FlatTorus { tau } => self.volume / tau.im,
            SurfaceKind::HyperbolicChart { .. } => 2.0 / (PI * (1.0 + self.curvature * r2).powi(2)),
        }
    }

    /// Whether `p` lies in the admissible region of the model.
    pub fn contains(&self, p: &ChartPoint) -> bool {
        match self.kind {
            SurfaceKind::Sphere => p.z.is_finite(),
            SurfaceKind::FlatTorus { .. } => p.z.is_finite() && p.chart == ChartId::Affine,
            SurfaceKind::HyperbolicChart { r_max } => p.chart == ChartId::Affine && p.z.norm() <= r_max,
        }
    }

    /// Injectivity radius.
    ///
    /// Sphere: `π·ρ` for the round sphere of area `V` (radius `ρ = √(V/4π)`).
    /// Torus: half the shortest nonzero vector of `ℤ + τℤ`, in chart units;
    /// multiply by [`Self::metric_scale`] for the length in the metric of `ω`.
    pub fn injectivity_radius(&self) -> Result<f64> {
        match self.kind {
            SurfaceKind::Sphere => Ok(PI * (self.volume / (4.0 * PI)).sqrt()),
            SurfaceKind::FlatTorus { tau } => Ok(0.5 * shortest_lattice_vector(tau).norm()),
            SurfaceKind::HyperbolicChart { .. } => Err(Error::LocalOnlyModel),
        }
    }

    /// Ratio between `ω`-lengths and chart lengths on the flat torus,
    /// `√(V/Im τ)`; `1` elsewhere.
    pub fn metric_scale(&self) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus { tau } => (self.volume / tau.im).sqrt(),
            _ => 1.0,
        }
    }

    /// Product quadrature grid for `∫ f ω`.
    ///
    /// * Sphere: Gauss–Legendre in `u = cos θ` (`resolution` nodes) times a
    ///   uniform azimuth (`2·resolution + 1` nodes).
    /// * Torus: uniform `resolution × resolution` grid on the fundamental
    ///   parallelogram (periodic trapezoid rule).
    /// * Hyperbolic chart: Gauss–Legendre in `|w| ∈ [0, r_max]` times a
    ///   uniform azimuth.
    pub fn quadrature_grid(&self, resolution: usize) -> Result<QuadGrid> {
        if resolution == 0 {
            return Err(Error::InvalidParameter("grid resolution must be at least 1".into()));
        }
        match self.kind {
            SurfaceKind::Sphere => {
                let (u, wu) = gauss_legendre(resolution);
                let m = 2 * resolution + 1;
                let mut nodes = Vec::with_capacity(resolution * m);
                let mut weights = Vec::with_capacity(resolution * m);
                for (ui, wi) in u.iter().zip(&wu) {
                    let r = ((1.0 + ui) / (1.0 - ui)).sqrt();
                    for j in 0..m {
                        let phi = 2.0 * PI * j as f64 / m as f64;
                        nodes.push(ChartPoint::affine(Complex64::from_polar(r, phi)));
                        weights.push(self.volume * 0.5 * wi / m as f64);
                    }
                }
                Ok(QuadGrid { nodes, weights, exact_degree: Some(2 * resolution - 1), resolution })
            }
            SurfaceKind::FlatTorus { tau } => {
                let n = resolution;
                let w = self.volume / (n * n) as f64;
                let mut nodes = Vec::with_capacity(n * n);
                for i in 0..n {
                    let beta = i as f64 / n as f64;
                    for j in 0..n {
                        let alpha = j as f64 / n as f64;
                        nodes.push(ChartPoint::affine(tau * beta + alpha));
                    }
                }
                Ok(QuadGrid { weights: vec![w; nodes.len()], nodes, exact_degree: None, resolution })
            }
            SurfaceKind::HyperbolicChart { r_max } => {
                let (r, wr) = crate::quadrature::gauss_legendre_on(resolution, 0.0, r_max);
                let m = 2 * resolution + 1;
                let mut nodes = Vec::with_capacity(resolution * m);
                let mut weights = Vec::with_capacity(resolution * m);
                for (ri, wi) in r.iter().zip(&wr) {
                    let dens = 2.0 / (PI * (1.0 + self.curvature * ri * ri).powi(2));
                    for j in 0..m {
                        let phi = 2.0 * PI * j as f64 / m as f64;
                        nodes.push(ChartPoint::affine(Complex64::from_polar(*ri, phi)));
                        weights.push(dens * ri * wi * 2.0 * PI / m as f64);
                    }
                }
                Ok(QuadGrid { nodes, weights, exact_degree: Some(2 * resolution - 1), resolution })
            }
        }
    }

    /// Draw a point from `ν = ω/V` (global models only).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChartPoint> {
        match self.kind {
            SurfaceKind::Sphere => {
                let x3: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..(2.0 * PI));
                let s = (1.0 - x3 * x3).max(0.0).sqrt();
                Ok(from_embedding([s * phi.cos(), s * phi.sin(), x3]))
            }
            SurfaceKind::FlatTorus { tau } => {
                let a: f64 = rng.random();
                let b: f64 = rng.random();
                Ok(ChartPoint::affine(tau * b + a))
            }
            SurfaceKind::HyperbolicChart { .. } => Err(Error::LocalOnlyModel),
        }
    }
}

/// `Φ_R(s) = (2/R)·log(1 + R s)` as a function of `s = |w|²`, with the
/// `R → 0` limit `2s`.
pub fn model_weight(curvature: f64, s: f64) -> f64 {
    if curvature.abs() < 1e-12 {
        2.0 * s
    } else {
        2.0 * (curvature * s).ln_1p() / curvature
    }
}

/// Stereographic embedding into the unit sphere of `ℝ³`
/// (`z = 0 ↦ (0,0,−1)`, `z = ∞ ↦ (0,0,1)`).
pub fn embed(p: &ChartPoint) -> [f64; 3] {
    let r2 = p.z.norm_sqr();
    let d = 1.0 + r2;
    match p.chart {
        ChartId::Affine => [2.0 * p.z.re / d, 2.0 * p.z.im / d, (r2 - 1.0) / d],
        ChartId::Infinity => [2.0 * p.z.re / d, -2.0 * p.z.im / d, (1.0 - r2) / d],
    }
}

/// Inverse of [`embed`]; picks the chart in which `|coordinate| ≤ 1`.
pub fn from_embedding(x: [f64; 3]) -> ChartPoint {
    if x[2] <= 0.0 {
        ChartPoint::affine(Complex64::new(x[0], x[1]) / (1.0 - x[2]))
    } else {
        ChartPoint::at_infinity(Complex64::new(x[0], -x[1]) / (1.0 + x[2]))
    }
}

/// `(cos θ, ϕ)` of a sphere point, with `cos θ = x₃`.
pub fn polar(p: &ChartPoint) -> (f64, f64) {
    let x = embed(p);
    (x[2], x[1].atan2(x[0]))
}

/// Euclidean distance between the embeddings of two sphere points.
pub fn chordal_distance(p: &ChartPoint, q: &ChartPoint) -> f64 {
    let a = embed(p);
    let b = embed(q);
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Shortest nonzero vector of the lattice `ℤ + τℤ` (Lagrange–Gauss reduction).
pub fn shortest_lattice_vector(tau: Complex64) -> Complex64 {
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = tau;
    if b.norm_sqr() < a.norm_sqr() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        let mu = ((a.re * b.re + a.im * b.im) / a.norm_sqr()).round();
        b -= a * mu;
        if b.norm_sqr() >= a.norm_sqr() {
            return a;
        }
        std::mem::swap(&mut a, &mut b);
    }
}
