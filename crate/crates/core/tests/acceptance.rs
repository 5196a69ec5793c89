//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::Instant;

use canonical_dpp::bergman::{self, local_decay, sample_admissible_pair, torus_bergman_error};
use canonical_dpp::dpp::{self, sample_batch, Configuration, Sampler, SamplerId};
use canonical_dpp::hilbert::{riemann_roch_dimension, SectionBasis};
use canonical_dpp::stats::{self, LinearStatSample};
use canonical_dpp::surface::{model_weight, SurfaceModel};
use canonical_dpp::testfn::TestFunction;
use canonical_dpp::toeplitz::{Centering, ToeplitzContext};
use canonical_dpp::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome>;

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn dimension_law() -> Result<Outcome> {
    let s = SurfaceModel::sphere(1.0)?;
    let mut ok = true;
    for k in 1..=64 {
        ok &= SectionBasis::sphere(&s, k)?.dim() as i64 == riemann_roch_dimension(&s, k)? && k as i64 + 1 == riemann_roch_dimension(&s, k)?;
    }
    let t = SurfaceModel::torus(Complex64::new(0.0, 1.0), 1.0)?;
    for k in 2..=32 {
        let trunc = SectionBasis::required_truncation(k, Complex64::new(0.0, 1.0));
        ok &=
            SectionBasis::torus(&t, k, trunc)?.dim() as i64 == riemann_roch_dimension(&t, k)? && riemann_roch_dimension(&t, k)? == k as i64;
    }
    outcome(ok, "sphere k=1..64, torus k=2..32".into())
}

fn sphere_constancy() -> Result<Outcome> {
    let s = SurfaceModel::sphere(1.0)?;
    let mut worst: f64 = 0.0;
    for k in [1, 2, 4, 8, 16, 32, 64] {
        let b = SectionBasis::sphere(&s, k)?;
        let grid = s.quadrature_grid(2 * k + 8)?;
        worst = worst.max(bergman::sup_deviation(&b, &grid.nodes, (k + 1) as f64));
    }
    outcome(worst < 1e-9, format!("sup |B_k - (k+1)| = {worst:.3e}"))
}

fn torus_decay() -> Result<Outcome> {
    let t = SurfaceModel::torus(Complex64::new(0.0, 3.0), 1.0)?;
    let ks: Vec<usize> = (8..=40).collect();
    let trunc = SectionBasis::required_truncation(40, Complex64::new(0.0, 3.0));
    let d = torus_bergman_error(&t, &ks, trunc, 8)?;
    let rel = d.relative_rate_error();
    let pass = rel < 0.15 && d.strictly_decreasing() && d.fit.rate >= d.injectivity_bound;
    outcome(
        pass,
        format!(
            "tau=3i: rate {:.5} vs lattice-sum {:.5} (rel {:.2e}); injectivity bound {:.5}; residual {:.2e}",
            d.fit.rate, d.oracle.rate, rel, d.injectivity_bound, d.fit.residual
        ),
    )
}

fn local_model_decay() -> Result<Outcome> {
    let ks: Vec<usize> = (20..=120).step_by(5).collect();
    let fit = local_decay(&[Complex64::new(1.0, 0.0)], &ks, 0.3, -2.0)?;
    let target = model_weight(-2.0, 0.09);
    let rel = (fit.rate / target - 1.0).abs();
    outcome(rel < 0.15, format!("rate {:.6} vs Phi(eps^2) {:.6} (rel {:.2e})", fit.rate, target, rel))
}

fn mobius_identities() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for r in [-2.0, -0.5, 2.0] {
        for _ in 0..1000 {
            let (z, w) = sample_admissible_pair(r, &mut rng);
            for v in bergman::identity_residuals(z, w, r)? {
                worst = worst.max(v);
            }
        }
    }
    outcome(worst < 1e-12, format!("max residual {worst:.3e} over 3000 pairs"))
}

fn scaling_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for i in 0..10u64 {
        let n = rng.random_range(2..=24usize);
        let phi = TestFunction::random_harmonic(rng.random_range(1..=6), 100 + i)?.scaled(rng.random_range(0.2..2.0));
        let c: f64 = rng.random_range(-3.0..3.0);
        let ctx = ToeplitzContext::with_particles(n, &phi)?;
        let a = ctx.log_expectation(&phi)?.re;
        let b = ctx.log_expectation(&phi.shifted(c))?.re;
        worst = worst.max((b - (a - n as f64 * c)).abs());
    }
    outcome(worst < 1e-12, format!("max |defect| {worst:.3e} over 10 random (phi, c, N)"))
}

/// 20 random harmonics of bandlimit 1..8, unit Dirichlet norm.
fn mt_family() -> Result<Vec<TestFunction>> {
    (0..20u64).map(|s| TestFunction::random_harmonic(1 + (s as usize % 8), 1000 + s)).collect()
}

fn moser_trudinger() -> Result<Outcome> {
    let family = mt_family()?;
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for n in [2, 4, 8, 16, 32] {
        for f in &family {
            for a in [0.5, 1.0, 2.0, 4.0] {
                let phi = f.scaled(a);
                let ctx = ToeplitzContext::with_particles(n, &phi)?;
                worst = worst.min(ctx.mt_gap(&phi)?);
                count += 1;
            }
        }
    }
    // resolution check on the hardest member
    let hard = family[7].scaled(4.0);
    let disc = ToeplitzContext::with_particles(32, &hard)?.doubling_discrepancy(&hard)?;
    outcome(worst >= -1e-8 && disc < 1e-9, format!("min gap {worst:.4e} over {count} cases; doubling check {disc:.1e}"))
}

fn szego() -> Result<Outcome> {
    let phi = TestFunction::cos_theta();
    let mut d = Vec::new();
    for n in [8, 64] {
        let ctx = ToeplitzContext::with_particles(n, &phi)?;
        d.push(ctx.szego_defect(&phi)?.re);
    }
    outcome(d[1].abs() < d[0].abs() && d[1].abs() < 0.05, format!("defect N=8 {:.5}, N=64 {:.5}; reference 1/3", d[0], d[1]))
}

fn variance_convergence() -> Result<Outcome> {
    let phi = TestFunction::cos_theta();
    let mut ratios = Vec::new();
    for n in [8, 16, 32, 64] {
        ratios.push(ToeplitzContext::with_particles(n, &phi)?.variance_exact(&phi)? / (2.0 / 3.0));
    }
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let last = ratios[3];
    outcome(increasing && (0.9..=1.01).contains(&last), format!("ratios {ratios:.5?}"))
}

fn clt() -> Result<Outcome> {
    let phi = TestFunction::cos_theta();
    let n = 32;
    let batch = sample_batch(&Sampler::sphere(SamplerId::ChainRule, n)?, 10, 2000)?;
    let ctx = ToeplitzContext::with_particles(n, &phi)?;
    let center = ctx.process_mean(&phi).re;
    let vexact = ctx.variance_exact(&phi)?;
    let sample = LinearStatSample::from_batch(&batch, &phi, center);
    let r = stats::clt_check(&sample.fluctuations(), n, vexact, phi.dirichlet_norm()?)?;
    outcome(
        r.variance_rel_error < 0.1 && r.ks_p_value > 0.01,
        format!("var {:.5} vs exact {:.5} (rel {:.3}); KS p {:.3}", r.variance, vexact, r.variance_rel_error, r.ks_p_value),
    )
}

fn sampler_agreement() -> Result<Outcome> {
    let phi = TestFunction::cos_theta();
    let n = 8;
    let a = sample_batch(&Sampler::sphere(SamplerId::ChainRule, n)?, 11, 5000)?;
    let b = sample_batch(&Sampler::sphere(SamplerId::EigenvalueModel, n)?, 12, 5000)?;
    let sa = LinearStatSample::from_batch(&a, &phi, 0.0).values;
    let sb = LinearStatSample::from_batch(&b, &phi, 0.0).values;
    let (d, p) = stats::ks_two_sample(&sa, &sb);
    outcome(p > 0.01, format!("two-sample KS D {d:.4}, p {p:.3}"))
}

fn tail_bound() -> Result<Outcome> {
    let phi = TestFunction::cos_theta();
    let dn = phi.dirichlet_norm()?;
    let mut det_worst = f64::INFINITY;
    let mut mc_ok = true;
    let mut printed_exceeded = 0;
    for n in [8, 16, 32] {
        let nf = n as f64;
        let ctx = ToeplitzContext::with_particles(n, &phi.scaled(4.0))?;
        for i in -16..=16 {
            let t = i as f64 * 0.25;
            let lm = ctx.fluctuation_log_mgf(&phi, Complex64::new(-t, 0.0), Centering::MeanOmega)?.re;
            det_worst = det_worst.min(nf / (nf + 1.0) * t * t * dn / 2.0 - lm);
        }
        let batch = sample_batch(&Sampler::sphere(SamplerId::ChainRule, n)?, 20 + n as u64, 5000)?;
        let values = LinearStatSample::from_batch(&batch, &phi, 0.0).values;
        for lambda in [0.02, 0.05, 0.1] {
            let est = stats::empirical_tail(&values, n, phi.mean().re, lambda, 0.99)?;
            mc_ok &= est.ci_low <= stats::chernoff_tail_bound(n, lambda, dn);
            if est.ci_low > stats::sharp_form_tail_bound(n, lambda, dn) {
                printed_exceeded += 1;
            }
        }
    }
    outcome(
        det_worst >= -1e-8 && mc_ok,
        format!("min MGF slack {det_worst:.3e}; MC within Chernoff bound: {mc_ok}; sharp form exceeded in {printed_exceeded}/9 cells (report only)"),
    )
}

fn density_normalization() -> Result<Outcome> {
    let s = SurfaceModel::sphere(1.0)?;
    let grid = s.quadrature_grid(6)?;
    let mut total = 0.0;
    for (p, wp) in grid.nodes.iter().zip(&grid.weights) {
        for (q, wq) in grid.nodes.iter().zip(&grid.weights) {
            total += wp * wq * dpp::joint_density(&Configuration { points: vec![*p, *q], level: 1, replica: 0 })?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = 200_000;
    let mut acc = 0.0;
    for _ in 0..m {
        let pts = (0..3).map(|_| s.sample_uniform(&mut rng)).collect::<Result<Vec<_>>>()?;
        acc += dpp::joint_density(&Configuration { points: pts, level: 2, replica: 0 })?;
    }
    let z3 = acc / m as f64;
    let basis = SectionBasis::sphere_with_particles(4)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let pts = (0..4).map(|_| s.sample_uniform(&mut rng)).collect::<Result<Vec<_>>>()?;
        let a = dpp::joint_density(&Configuration { points: pts.clone(), level: 3, replica: 0 })?;
        worst = worst.max((a - dpp::joint_density_slater(&basis, &pts)?).abs());
    }
    outcome(
        (total - 1.0).abs() < 1e-8 && (z3 - 1.0).abs() < 0.02 && worst < 1e-10,
        format!("int rho2 = {total:.15}; MC mean of rho3 = {z3:.4}; Slater vs product {worst:.2e}"),
    )
}

fn main() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("dimension law", dimension_law),
        ("sphere Bergman constancy", sphere_constancy),
        ("torus Bergman decay", torus_decay),
        ("local-model reproducing error", local_model_decay),
        ("Mobius/polarization identities", mobius_identities),
        ("scaling identity", scaling_identity),
        ("Moser-Trudinger on the sphere", moser_trudinger),
        ("strong Szego limit", szego),
        ("variance convergence", variance_convergence),
        ("CLT Monte Carlo", clt),
        ("sampler agreement", sampler_agreement),
        ("tail bound", tail_bound),
        ("density normalization", density_normalization),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  [{:.1}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
