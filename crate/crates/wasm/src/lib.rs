//! Browser bindings: sphere samples, a Szegő curve and a torus Bergman
//! field. Each export wraps a plain function that is tested natively.

use canonical_dpp::dpp::{Sampler, SamplerId};
use canonical_dpp::hilbert::SectionBasis;
use canonical_dpp::surface::{ChartPoint, SurfaceModel};
use canonical_dpp::testfn::TestFunction;
use canonical_dpp::toeplitz::{Centering, ToeplitzContext};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

/// Largest particle number the page may request.
pub const MAX_PARTICLES: usize = 400;

/// Embedded coordinates `x0,y0,z0,x1,…` of one configuration.
pub fn sphere_points(n: usize, seed: u32, sampler: &str) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_PARTICLES {
        return Err(format!("particle number must be in 1..={MAX_PARTICLES}"));
    }
    let id: SamplerId = sampler.parse().map_err(|e: canonical_dpp::Error| e.to_string())?;
    let s = Sampler::sphere(id, n).map_err(|e| e.to_string())?;
    let (c, _) = s.draw(seed as u64, 0).map_err(|e| e.to_string())?;
    Ok(c.embeddings().into_iter().flatten().collect())
}

/// Rows `N, log E e^{−(Σφ − N∫φ)}, ½‖dφ‖²` for `φ = amplitude·cosθ`,
/// `N = 1..=n_max`.
pub fn szego_rows(n_max: usize, amplitude: f64) -> Result<Vec<f64>, String> {
    if n_max == 0 || n_max > 128 {
        return Err("n_max must be in 1..=128".into());
    }
    let phi = TestFunction::cos_theta().scaled(amplitude);
    let reference = 0.5 * phi.dirichlet_norm().map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * n_max);
    for n in 1..=n_max {
        let ctx = ToeplitzContext::with_particles(n, &phi).map_err(|e| e.to_string())?;
        let lm = ctx.fluctuation_log_mgf(&phi, Complex64::new(1.0, 0.0), Centering::MeanOmega).map_err(|e| e.to_string())?;
        out.extend([n as f64, lm.re, reference]);
    }
    Ok(out)
}

/// `B_k/k − 1` on a `grid × grid` lattice of the fundamental domain of
/// `ℂ/(ℤ + τℤ)`, `τ = i·tau_im`, row-major in the `τ` direction.
pub fn torus_field(k: usize, tau_im: f64, grid: usize) -> Result<Vec<f64>, String> {
    if !(2..=64).contains(&k) || !(4..=256).contains(&grid) {
        return Err("need 2 <= k <= 64 and 4 <= grid <= 256".into());
    }
    let tau = Complex64::new(0.0, tau_im);
    let model = SurfaceModel::torus(tau, 1.0).map_err(|e| e.to_string())?;
    let basis = SectionBasis::torus(&model, k, SectionBasis::required_truncation(k, tau)).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let z = tau * (i as f64 / grid as f64) + j as f64 / grid as f64;
            out.push(basis.bergman_function(&ChartPoint::affine(z)) / k as f64 - 1.0);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn sample_sphere(n: usize, seed: u32, sampler: &str) -> Result<Vec<f64>, JsError> {
    sphere_points(n, seed, sampler).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn szego_curve(n_max: usize, amplitude: f64) -> Result<Vec<f64>, JsError> {
    szego_rows(n_max, amplitude).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn torus_bergman_field(k: usize, tau_im: f64, grid: usize) -> Result<Vec<f64>, JsError> {
    torus_field(k, tau_im, grid).map_err(|e| JsError::new(&e))
}
