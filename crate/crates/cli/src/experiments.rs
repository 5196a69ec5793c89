//! The eight experiments. Each reads its parameters from a [`Config`],
//! computes against the core library and returns tables plus checks.

use std::fmt;

use canonical_dpp::bergman::{self, local_decay, torus_bergman_error};
use canonical_dpp::dpp::{self, replica_rng, sample_batch, Configuration, Sampler, SamplerId};
use canonical_dpp::hilbert::{riemann_roch_dimension, SectionBasis};
use canonical_dpp::stats::{self, LinearStatSample};
use canonical_dpp::surface::{model_weight, SurfaceModel};
use canonical_dpp::table::{fmt17, CsvTable};
use canonical_dpp::testfn::TestFunction;
use canonical_dpp::toeplitz::{cos_theta_variance, default_resolution, Centering, ToeplitzContext};
use num_complex::Complex64;

use crate::config::{Config, ConfigError};
use crate::report::Outcome;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(canonical_dpp::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<canonical_dpp::Error> for RunError {
    fn from(e: canonical_dpp::Error) -> Self {
        RunError::Core(e)
    }
}

type Run = fn(&Config, u64) -> Result<Outcome, RunError>;

pub struct Experiment {
    pub id: &'static str,
    pub description: &'static str,
    pub stochastic: bool,
    pub run: Run,
}

/// Alphabetical.
pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        id: "bergman-decay",
        description: "dimension law, sphere Bergman constancy, torus and local-model decay rates",
        stochastic: false,
        run: bergman_decay,
    },
    Experiment {
        id: "clt-check",
        description: "Monte Carlo fluctuations vs normal(0, exact variance) and log-MGF cross-check",
        stochastic: true,
        run: clt_check,
    },
    Experiment {
        id: "mobius-identities",
        description: "Mobius involution and polarization transfer identities on random pairs",
        stochastic: true,
        run: mobius_identities,
    },
    Experiment {
        id: "mt-check",
        description: "Moser-Trudinger gap and shift identity over a family of test functions",
        stochastic: false,
        run: mt_check,
    },
    Experiment {
        id: "sampler-agreement",
        description: "chain-rule vs eigenvalue-model samplers and joint-density normalization",
        stochastic: true,
        run: sampler_agreement,
    },
    Experiment {
        id: "szego-table",
        description: "strong Szego defect of the log-MGF across particle numbers",
        stochastic: false,
        run: szego_table,
    },
    Experiment {
        id: "tail-check",
        description: "sub-Gaussian log-MGF bound and empirical tails vs the Chernoff bound",
        stochastic: true,
        run: tail_check,
    },
    Experiment {
        id: "variance-table",
        description: "exact variance of the linear statistic vs the Dirichlet norm",
        stochastic: false,
        run: variance_table,
    },
];

pub fn find(id: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.id == id)
}

fn f(x: f64) -> String {
    fmt17(x)
}

fn sampler_id(cfg: &Config) -> Result<SamplerId, RunError> {
    let s = cfg.string("sampler", "chain-rule")?;
    s.parse().map_err(|_| RunError::Config(ConfigError(format!("`sampler`: unknown sampler `{s}`"))))
}

/// Preset named by `key`; an unknown preset is a configuration error.
fn preset(cfg: &Config, key: &str, default: &str) -> Result<TestFunction, RunError> {
    let d = cfg.string(key, default)?;
    TestFunction::preset(&d).map_err(|e| RunError::Config(ConfigError(format!("`{key}`: {e}"))))
}

fn context(cfg_res: usize, n: usize, phi: &TestFunction) -> Result<ToeplitzContext, RunError> {
    let basis = SectionBasis::sphere_with_particles(n)?;
    let res = if cfg_res == 0 { default_resolution(&basis, phi) } else { cfg_res };
    Ok(ToeplitzContext::new(&basis, res)?)
}

fn bergman_decay(cfg: &Config, _seed: u64) -> Result<Outcome, RunError> {
    let dim_sphere = cfg.get("dimension_sphere_k_max", 64usize)?;
    let dim_torus = cfg.get("dimension_torus_k_max", 32usize)?;
    let sphere_ks = cfg.list("sphere_ks", &[1usize, 2, 4, 8, 16, 32, 64])?;
    let sphere_tol = cfg.get("sphere_tolerance", 1e-9)?;
    let tau = Complex64::new(cfg.get("tau_re", 0.0)?, cfg.get("tau_im", 3.0)?);
    let volume = cfg.get("torus_volume", 1.0)?;
    let torus_ks = cfg.range("torus_k", (8, 40, 1))?;
    let grid_per_k = cfg.get("grid_per_k", 8usize)?;
    let curvature = cfg.get("local_curvature", -2.0)?;
    let eps = cfg.get("local_eps", 0.3)?;
    let local_ks = cfg.range("local_k", (20, 120, 5))?;
    let rate_tol = cfg.get("rate_tolerance", 0.15)?;

    let mut out = Outcome::default();
    let sphere = SurfaceModel::sphere(1.0)?;
    let torus = SurfaceModel::torus(tau, volume)?;

    let mut dims = CsvTable::new("dimension-law", &["model", "k", "dim", "riemann_roch"]);
    let mut dim_ok = true;
    for k in 1..=dim_sphere {
        let d = SectionBasis::sphere(&sphere, k)?.dim();
        let rr = riemann_roch_dimension(&sphere, k)?;
        dim_ok &= d as i64 == rr;
        dims.push(vec!["sphere".into(), k.to_string(), d.to_string(), rr.to_string()]);
    }
    for k in 2..=dim_torus {
        let d = SectionBasis::torus(&torus, k, SectionBasis::required_truncation(k, tau))?.dim();
        let rr = riemann_roch_dimension(&torus, k)?;
        dim_ok &= d as i64 == rr;
        dims.push(vec!["torus".into(), k.to_string(), d.to_string(), rr.to_string()]);
    }
    out.check("dimension law", dim_ok, format!("sphere k=1..{dim_sphere}, torus k=2..{dim_torus}"));

    let mut t = CsvTable::new("bergman-decay", &["k", "error", "model", "parameters"]);
    let mut worst: f64 = 0.0;
    for &k in &sphere_ks {
        let b = SectionBasis::sphere(&sphere, k)?;
        let grid = sphere.quadrature_grid(2 * k + 8)?;
        let e = bergman::sup_deviation(&b, &grid.nodes, (k + 1) as f64);
        worst = worst.max(e);
        t.push(vec![k.to_string(), f(e), "sphere".into(), "V=1".into()]);
    }
    out.check("sphere Bergman constancy", worst < sphere_tol, format!("sup |B_k - (k+1)| = {worst:.3e}"));

    let kmax = *torus_ks.iter().max().unwrap_or(&1);
    let trunc = cfg.get("truncation", SectionBasis::required_truncation(kmax, tau))?;
    let torus_fit = torus_bergman_error(&torus, &torus_ks, trunc, grid_per_k)?;
    let params = format!("tau={}+{}i;V={volume}", tau.re, tau.im);
    for (k, e) in torus_fit.fit.ks.iter().zip(&torus_fit.fit.errors) {
        t.push(vec![k.to_string(), f(*e), "torus".into(), params.clone()]);
    }
    let rel = torus_fit.relative_rate_error();
    out.check(
        "torus decay rate",
        rel < rate_tol,
        format!("fit {:.6} vs lattice-sum {:.6} (rel {rel:.2e})", torus_fit.fit.rate, torus_fit.oracle.rate),
    );
    out.check(
        "torus rate above injectivity bound",
        torus_fit.fit.rate >= torus_fit.injectivity_bound,
        format!("{:.6} >= {:.6}", torus_fit.fit.rate, torus_fit.injectivity_bound),
    );
    out.check("torus error strictly decreasing", torus_fit.strictly_decreasing(), "");

    let local = local_decay(&[Complex64::new(1.0, 0.0)], &local_ks, eps, curvature)?;
    let params = format!("R={curvature};eps={eps}");
    for (k, e) in local.ks.iter().zip(&local.errors) {
        t.push(vec![k.to_string(), f(*e), "local".into(), params.clone()]);
    }
    let target = model_weight(curvature, eps * eps);
    let lrel = (local.rate / target - 1.0).abs();
    out.check("local-model decay rate", lrel < rate_tol, format!("fit {:.6} vs Phi(eps^2) {target:.6} (rel {lrel:.2e})", local.rate));

    out.note("torus", &torus_fit);
    out.note("local", &local);
    out.note("local_target_rate", target);
    out.table("", t);
    out.table("dimensions", dims);
    Ok(out)
}

fn mobius_identities(cfg: &Config, seed: u64) -> Result<Outcome, RunError> {
    let curvatures = cfg.list("curvatures", &[-2.0, -0.5, 2.0])?;
    let samples = cfg.get("samples", 1000usize)?;
    let tol = cfg.get("tolerance", 1e-12)?;
    let mut t = CsvTable::new(
        "mobius-identities",
        &["curvature", "sample", "re_z", "im_z", "re_w", "im_w", "involution", "diagonal", "relation1", "relation2"],
    );
    let mut worst: f64 = 0.0;
    for (i, &r) in curvatures.iter().enumerate() {
        let mut rng = replica_rng(seed, i as u64);
        for s in 0..samples {
            let (z, w) = bergman::sample_admissible_pair(r, &mut rng);
            let res = bergman::identity_residuals(z, w, r)?;
            worst = res.iter().fold(worst, |a, b| a.max(*b));
            let mut row = vec![f(r), s.to_string(), f(z.re), f(z.im), f(w.re), f(w.im)];
            row.extend(res.iter().map(|x| f(*x)));
            t.push(row);
        }
    }
    let mut out = Outcome::default();
    out.check("identities", worst < tol, format!("max residual {worst:.3e} over {} pairs", samples * curvatures.len()));
    out.note("max_residual", worst);
    out.table("", t);
    Ok(out)
}

fn test_family(cfg: &Config) -> Result<Vec<TestFunction>, RunError> {
    let phi = cfg.string("phi", "family")?;
    if phi != "family" {
        return Ok(vec![preset(cfg, "phi", "family")?]);
    }
    let size = cfg.get("family_size", 20u64)?;
    let lmax = cfg.get("family_lmax", 8usize)?;
    let base = cfg.get("family_seed", 1000u64)?;
    (0..size).map(|s| TestFunction::preset(&format!("harmonic:{},{}", 1 + (s as usize % lmax), base + s)).map_err(Into::into)).collect()
}

fn mt_check(cfg: &Config, _seed: u64) -> Result<Outcome, RunError> {
    let family = test_family(cfg)?;
    let amplitudes = cfg.list("amplitudes", &[0.5, 1.0, 2.0, 4.0])?;
    let ns = cfg.list("ns", &[2usize, 4, 8, 16, 32])?;
    let shift = cfg.get("shift", 0.37)?;
    let tol = cfg.get("tolerance", 1e-8)?;
    let shift_tol = cfg.get("shift_tolerance", 1e-12)?;
    let res = cfg.get("resolution", 0usize)?;
    let doubling_tol = cfg.get("doubling_tolerance", 1e-9)?;

    let mut t = CsvTable::new("mt-check", &["n", "phi", "amplitude", "log_mgf", "bound", "gap", "shift_defect"]);
    let mut worst_gap = f64::INFINITY;
    let mut worst_case = None;
    let mut worst_shift: f64 = 0.0;
    for &n in &ns {
        let nf = n as f64;
        for base in &family {
            for &a in &amplitudes {
                let phi = base.scaled(a);
                let ctx = context(res, n, &phi)?;
                let le = ctx.log_expectation(&phi)?.re;
                let log_mgf = le + nf * phi.mean().re;
                let bound = nf / (nf + 1.0) * 0.5 * phi.dirichlet_norm()?;
                let gap = bound - log_mgf;
                let shifted = ctx.log_expectation(&phi.shifted(shift))?.re;
                let sd = (shifted - (le - nf * shift)).abs();
                // relative to the magnitude of the log-determinants compared
                worst_shift = worst_shift.max(sd / le.abs().max(shifted.abs()).max(1.0));
                if gap < worst_gap {
                    worst_gap = gap;
                    worst_case = Some((n, phi.clone()));
                }
                t.push(vec![n.to_string(), base.label(), f(a), f(log_mgf), f(bound), f(gap), f(sd)]);
            }
        }
    }
    let mut out = Outcome::default();
    out.check("Moser-Trudinger gap", worst_gap >= -tol, format!("min gap {worst_gap:.4e} over {} cases", t.rows.len()));
    out.check("shift identity", worst_shift < shift_tol, format!("max relative defect {worst_shift:.3e} at c = {shift}"));
    if let Some((n, phi)) = worst_case {
        let disc = context(res, n, &phi)?.doubling_discrepancy(&phi)?;
        out.check("resolution doubling at the minimal gap", disc < doubling_tol, format!("N={n} {phi}: {disc:.2e}"));
        out.note("doubling_discrepancy", disc);
    }
    out.note("min_gap", worst_gap);
    out.note("max_shift_defect", worst_shift);
    out.table("", t);
    Ok(out)
}

fn szego_table(cfg: &Config, _seed: u64) -> Result<Outcome, RunError> {
    let phi = preset(cfg, "phi", "cos-theta")?;
    let ns = cfg.list("ns", &[8usize, 16, 32, 64])?;
    let tol = cfg.get("tolerance", 0.05)?;
    let res = cfg.get("resolution", 0usize)?;
    let reference = 0.5 * phi.dirichlet_norm()?;
    let mut t = CsvTable::new("szego-table", &["n", "log_mgf", "reference", "defect"]);
    let mut defects = Vec::new();
    for &n in &ns {
        let ctx = context(res, n, &phi)?;
        let lm = ctx.fluctuation_log_mgf(&phi, Complex64::new(1.0, 0.0), Centering::MeanOmega)?.re;
        defects.push(reference - lm);
        t.push(vec![n.to_string(), f(lm), f(reference), f(reference - lm)]);
    }
    let first = defects[0].abs();
    let last = defects[defects.len() - 1].abs();
    let mut out = Outcome::default();
    out.check("defect shrinks", last <= first, format!("|defect| {first:.5} at N={} to {last:.5} at N={}", ns[0], ns[ns.len() - 1]));
    out.check("defect below tolerance", last < tol, format!("{last:.5} < {tol}"));
    out.note("reference", reference);
    out.note("defects", &defects);
    out.table("", t);
    Ok(out)
}

fn variance_table(cfg: &Config, _seed: u64) -> Result<Outcome, RunError> {
    let phi = preset(cfg, "phi", "cos-theta")?;
    let label = phi.label();
    let ns = cfg.list("ns", &[8usize, 16, 32, 64])?;
    let lo = cfg.get("ratio_min", 0.9)?;
    let hi = cfg.get("ratio_max", 1.01)?;
    let res = cfg.get("resolution", 0usize)?;
    let d = phi.dirichlet_norm()?;
    if d <= 0.0 {
        return Err(ConfigError(format!("`phi`: {label} has zero Dirichlet norm")).into());
    }
    let closed = label == "cos-theta";
    let mut t = CsvTable::new("variance-table", &["n", "variance_exact", "dirichlet", "ratio", "closed_form"]);
    let mut ratios = Vec::new();
    let mut closed_err: f64 = 0.0;
    for &n in &ns {
        let v = context(res, n, &phi)?.variance_exact(&phi)?;
        let cf = if closed { cos_theta_variance(n) } else { f64::NAN };
        if closed {
            closed_err = closed_err.max((v - cf).abs());
        }
        ratios.push(v / d);
        t.push(vec![n.to_string(), f(v), f(d), f(v / d), f(cf)]);
    }
    let last = ratios[ratios.len() - 1];
    let mut out = Outcome::default();
    out.check("ratio increasing in N", ratios.windows(2).all(|w| w[1] > w[0]), format!("{ratios:.5?}"));
    out.check("ratio at largest N", (lo..=hi).contains(&last), format!("{last:.5} in [{lo}, {hi}]"));
    if closed {
        out.check("closed form", closed_err < 1e-10, format!("max |Var - (2/3)N/(N+1)| = {closed_err:.2e}"));
    }
    out.note("ratios", &ratios);
    out.table("", t);
    Ok(out)
}

fn clt_check(cfg: &Config, seed: u64) -> Result<Outcome, RunError> {
    let phi = preset(cfg, "phi", "cos-theta")?;
    let n = cfg.get("n", 32usize)?;
    let replicas = cfg.get("replicas", 2000u64)?;
    let sampler = sampler_id(cfg)?;
    let var_tol = cfg.get("variance_tolerance", 0.1)?;
    let alpha = cfg.get("ks_alpha", 0.01)?;
    let ts = cfg.list("mgf_ts", &[0.5])?;
    let z_max = cfg.get("mgf_z_max", 3.0)?;
    let res = cfg.get("resolution", 0usize)?;

    let batch = sample_batch(&Sampler::sphere(sampler, n)?, seed, replicas)?;
    let ctx = context(res, n, &phi)?;
    let center = ctx.process_mean(&phi).re;
    let vexact = ctx.variance_exact(&phi)?;
    let sample = LinearStatSample::from_batch(&batch, &phi, center);
    let fl = sample.fluctuations();
    let report = stats::clt_check(&fl, n, vexact, phi.dirichlet_norm()?)?;

    let mut t = CsvTable::new("clt-check", &["replica", "value", "fluctuation"]);
    for (i, (v, x)) in sample.values.iter().zip(&fl).enumerate() {
        t.push(vec![i.to_string(), f(*v), f(*x)]);
    }
    let rows = stats::mgf_cross_check(&sample.values, &ts, |s| Ok(ctx.log_expectation(&phi.scaled(s))?.re))?;
    let mut m = CsvTable::new("clt-check-mgf", &["t", "empirical", "exact", "std_error", "z"]);
    for r in &rows {
        m.push(vec![f(r.t), f(r.empirical), f(r.exact), f(r.std_error), f(r.z_score())]);
    }
    let worst_z = rows.iter().map(|r| r.z_score()).fold(0.0, f64::max);

    let mut out = Outcome::default();
    out.check(
        "variance",
        report.variance_rel_error < var_tol,
        format!("{:.5} vs exact {vexact:.5} (rel {:.3})", report.variance, report.variance_rel_error),
    );
    out.check("normality", report.degenerate || report.ks_p_value > alpha, format!("KS p {:.4}", report.ks_p_value));
    out.check("log-MGF cross-check", worst_z < z_max, format!("max |z| {worst_z:.2}"));
    out.note("clt", &report);
    out.note("mgf", &rows);
    out.note("sampler_work", batch.work);
    out.table("", t);
    out.table("mgf", m);
    Ok(out)
}

fn tail_check(cfg: &Config, seed: u64) -> Result<Outcome, RunError> {
    let phi = preset(cfg, "phi", "cos-theta")?;
    let label = phi.label();
    let ns = cfg.list("ns", &[8usize, 16, 32])?;
    let lambdas = cfg.list("lambdas", &[0.02, 0.05, 0.1])?;
    let replicas = cfg.get("replicas", 5000u64)?;
    let conf = cfg.get("confidence", 0.99)?;
    let t_max = cfg.get("t_max", 4.0)?;
    let t_steps = cfg.get("t_steps", 16usize)?;
    let tol = cfg.get("tolerance", 1e-8)?;
    let sampler = sampler_id(cfg)?;
    let res = cfg.get("resolution", 0usize)?;
    let d = phi.dirichlet_norm()?;
    if d <= 0.0 || t_steps == 0 {
        return Err(ConfigError(format!("`phi`: {label} has zero Dirichlet norm, or `t_steps` is 0")).into());
    }

    let mut m = CsvTable::new("tail-check-mgf", &["n", "t", "log_mgf", "bound", "slack"]);
    let mut tails =
        CsvTable::new("tail-check", &["n", "lambda", "exceed", "total", "fraction", "ci_low", "ci_high", "chernoff_bound", "sharp_form"]);
    let mut min_slack = f64::INFINITY;
    let mut within = true;
    let mut sharp_exceeded = 0;
    let mean = phi.mean().re;
    for &n in &ns {
        let nf = n as f64;
        let ctx = context(res, n, &phi.scaled(t_max))?;
        for i in 0..=2 * t_steps {
            let t = t_max * (i as f64 / t_steps as f64 - 1.0);
            let lm = ctx.fluctuation_log_mgf(&phi, Complex64::new(-t, 0.0), Centering::MeanOmega)?.re;
            let bound = nf / (nf + 1.0) * t * t * d / 2.0;
            min_slack = min_slack.min(bound - lm);
            m.push(vec![n.to_string(), f(t), f(lm), f(bound), f(bound - lm)]);
        }
        let batch = sample_batch(&Sampler::sphere(sampler, n)?, seed.wrapping_add(n as u64), replicas)?;
        let values = LinearStatSample::from_batch(&batch, &phi, 0.0).values;
        for &l in &lambdas {
            let e = stats::empirical_tail(&values, n, mean, l, conf)?;
            let cb = stats::chernoff_tail_bound(n, l, d);
            let sb = stats::sharp_form_tail_bound(n, l, d);
            within &= e.ci_low <= cb;
            if e.ci_low > sb {
                sharp_exceeded += 1;
            }
            tails.push(vec![
                n.to_string(),
                f(l),
                e.exceed.to_string(),
                e.total.to_string(),
                f(e.fraction),
                f(e.ci_low),
                f(e.ci_high),
                f(cb),
                f(sb),
            ]);
        }
    }
    let mut out = Outcome::default();
    out.check("sub-Gaussian log-MGF bound", min_slack >= -tol, format!("min slack {min_slack:.3e}"));
    out.check("tails within Chernoff bound", within, format!("lower {}% Wilson limit <= bound in every cell", conf * 100.0));
    out.note("sharp_form_cells_exceeded", sharp_exceeded);
    out.note("cells", ns.len() * lambdas.len());
    out.table("", tails);
    out.table("mgf", m);
    Ok(out)
}

fn sampler_agreement(cfg: &Config, seed: u64) -> Result<Outcome, RunError> {
    let phi = preset(cfg, "phi", "cos-theta")?;
    let n = cfg.get("n", 8usize)?;
    let replicas = cfg.get("replicas", 5000u64)?;
    let alpha = cfg.get("ks_alpha", 0.01)?;
    let z3_samples = cfg.get("z3_samples", 200_000usize)?;
    let z3_tol = cfg.get("z3_tolerance", 0.02)?;
    let slater_samples = cfg.get("slater_samples", 100usize)?;

    let a = sample_batch(&Sampler::sphere(SamplerId::ChainRule, n)?, seed, replicas)?;
    let b = sample_batch(&Sampler::sphere(SamplerId::EigenvalueModel, n)?, seed.wrapping_add(1), replicas)?;
    let sa = LinearStatSample::from_batch(&a, &phi, 0.0).values;
    let sb = LinearStatSample::from_batch(&b, &phi, 0.0).values;
    let (ks_d, ks_p) = stats::ks_two_sample(&sa, &sb);
    let mut t = CsvTable::new("sampler-agreement", &["replica", "chain_rule", "eigenvalue_model"]);
    for (i, (x, y)) in sa.iter().zip(&sb).enumerate() {
        t.push(vec![i.to_string(), f(*x), f(*y)]);
    }

    // density normalization: ∫ρ₂ by product quadrature, E[ρ₃] under ν^{⊗3}, Slater vs product
    let s = SurfaceModel::sphere(1.0)?;
    let grid = s.quadrature_grid(6)?;
    let mut rho2 = 0.0;
    for (p, wp) in grid.nodes.iter().zip(&grid.weights) {
        for (q, wq) in grid.nodes.iter().zip(&grid.weights) {
            rho2 += wp * wq * dpp::joint_density(&Configuration { points: vec![*p, *q], level: 1, replica: 0 })?;
        }
    }
    let mut rng = replica_rng(seed.wrapping_add(2), 0);
    let mut acc = 0.0;
    for _ in 0..z3_samples {
        let pts = (0..3).map(|_| s.sample_uniform(&mut rng)).collect::<Result<Vec<_>, _>>()?;
        acc += dpp::joint_density(&Configuration { points: pts, level: 2, replica: 0 })?;
    }
    let z3 = acc / z3_samples as f64;
    let basis = SectionBasis::sphere_with_particles(4)?;
    let mut slater: f64 = 0.0;
    for _ in 0..slater_samples {
        let pts = (0..4).map(|_| s.sample_uniform(&mut rng)).collect::<Result<Vec<_>, _>>()?;
        let prod = dpp::joint_density(&Configuration { points: pts.clone(), level: 3, replica: 0 })?;
        slater = slater.max((prod - dpp::joint_density_slater(&basis, &pts)?).abs());
    }
    let mut dens = CsvTable::new("sampler-agreement-density", &["quantity", "value", "target"]);
    dens.push(vec!["int_rho2".into(), f(rho2), f(1.0)]);
    dens.push(vec!["mean_rho3".into(), f(z3), f(1.0)]);
    dens.push(vec!["slater_vs_product_n4".into(), f(slater), f(0.0)]);

    let mut out = Outcome::default();
    out.check("two-sample KS", ks_p > alpha, format!("D {ks_d:.4}, p {ks_p:.4}"));
    out.check("pair density integrates to 1", (rho2 - 1.0).abs() < 1e-8, format!("{rho2:.15}"));
    out.check("three-point normalization", (z3 - 1.0).abs() < z3_tol, format!("{z3:.5}"));
    out.check("Slater form agrees", slater < 1e-10, format!("{slater:.2e}"));
    out.note("ks_distance", ks_d);
    out.note("ks_p_value", ks_p);
    out.note("chain_rule_proposals", a.work);
    out.note("pencil_redraws", b.work);
    out.table("", t);
    out.table("density", dens);
    Ok(out)
}
