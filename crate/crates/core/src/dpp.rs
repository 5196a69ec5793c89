//! Exact sampling of the canonical N-particle process and its joint density.
//!
//! Replica `r` of a batch with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `r`, so a replica is
//! reproducible on its own and batches do not depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::hilbert::SectionBasis;
use crate::surface::{embed, ChartId, ChartPoint, SurfaceModel};
use crate::table::{fmt17, CsvTable};

/// Bound on redraws of a numerically defective matrix pencil.
pub const MAX_PENCIL_RETRIES: u32 = 16;

/// One sampled configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<ChartPoint>,
    pub level: usize,
    pub replica: u64,
}

impl Configuration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Unit-sphere embeddings of the points.
    pub fn embeddings(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(embed).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerId {
    ChainRule,
    EigenvalueModel,
}

impl fmt::Display for SamplerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerId::ChainRule => "chain-rule",
            SamplerId::EigenvalueModel => "eigenvalue-model",
        })
    }
}

impl FromStr for SamplerId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain-rule" => Ok(SamplerId::ChainRule),
            "eigenvalue-model" => Ok(SamplerId::EigenvalueModel),
            _ => Err(Error::InvalidParameter(format!("unknown sampler '{s}'"))),
        }
    }
}

/// Per-replica random stream.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// `log Z_N` with `1/Z_N = N^N ∏_j C(N−1, j) / N!`.
pub fn log_z_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("Z_N needs N ≥ 1".into()));
    }
    let nf = n as f64;
    let lg = |x: f64| ln_gamma(x + 1.0);
    let binoms: f64 = (0..n).map(|j| lg(nf - 1.0) - lg(j as f64) - lg(nf - 1.0 - j as f64)).sum();
    Ok(-(nf * nf.ln() + binoms - lg(nf)))
}

/// `Z_N`.
pub fn z_n(n: usize) -> Result<f64> {
    Ok(log_z_n(n)?.exp())
}

/// Joint density on the sphere (`V = 1`) with respect to `ν^{⊗N}`:
/// `∏_{i<j} (‖x_i − x_j‖/2)² / Z_N` for unit-sphere embeddings `x_i`.
pub fn joint_density(config: &Configuration) -> Result<f64> {
    Ok(log_joint_density(&config.points)?.exp())
}

/// Logarithm of [`joint_density`] (`−∞` for coincident points).
pub fn log_joint_density(points: &[ChartPoint]) -> Result<f64> {
    let x: Vec<[f64; 3]> = points.iter().map(embed).collect();
    let mut acc = -log_z_n(points.len())?;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let d2: f64 = (0..3).map(|c| (x[i][c] - x[j][c]).powi(2)).sum();
            acc += (d2 / 4.0).ln();
        }
    }
    Ok(acc)
}

/// `|det Ψ_i(x_j)|² / N!` for an orthonormal basis (any global model).
pub fn joint_density_slater(basis: &SectionBasis, points: &[ChartPoint]) -> Result<f64> {
    let n = basis.dim();
    if points.len() != n {
        return Err(Error::InvalidParameter(format!("need {n} points, got {}", points.len())));
    }
    let cols: Vec<Vec<Complex64>> = points.iter().map(|p| basis.unitary_values(p)).collect();
    let m = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    Ok(m.determinant().norm_sqr() / (ln_gamma(n as f64 + 1.0)).exp())
}

/// Sequential (chain-rule) sampler for the projection process of a basis,
/// by rejection from `ν` against a constant envelope on `B_k`.
#[derive(Debug, Clone)]
pub struct ChainRuleSampler {
    basis: SectionBasis,
    envelope: f64,
}

impl ChainRuleSampler {
    /// Sphere: envelope `B_k = N` exactly. Torus: grid sup of `B_k` times
    /// `1 + 1e−6`.
    pub fn new(basis: &SectionBasis) -> Result<Self> {
        let model = basis.model();
        let envelope = if model.is_sphere() {
            basis.dim() as f64
        } else if model.tau().is_some() {
            let n = (8 * basis.dim()).max(64);
            let grid = model.quadrature_grid(n)?;
            let sup = grid.nodes.iter().map(|p| basis.bergman_function(p)).fold(0.0, f64::max);
            sup * (1.0 + 1e-6)
        } else {
            return Err(Error::LocalOnlyModel);
        };
        Ok(Self { basis: basis.clone(), envelope })
    }

    pub fn basis(&self) -> &SectionBasis {
        &self.basis
    }

    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    /// One exact configuration and the number of proposals used.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<ChartPoint>, u64)> {
        let n = self.basis.dim();
        let model: SurfaceModel = *self.basis.model();
        // Orthonormal coefficient vectors spanning the remaining subspace.
        let mut q: DMatrix<Complex64> = DMatrix::identity(n, n);
        let mut points = Vec::with_capacity(n);
        let mut proposals = 0u64;
        for _ in 0..n {
            let r = q.ncols();
            loop {
                proposals += 1;
                let x = model.sample_uniform(rng)?;
                let w: Vec<Complex64> = self.basis.unitary_values(&x).iter().map(|v| v.conj()).collect();
                let c: Vec<Complex64> = (0..r).map(|m| (0..n).map(|i| q[(i, m)].conj() * w[i]).sum()).collect();
                let p: f64 = c.iter().map(|v| v.norm_sqr()).sum();
                if p > self.envelope * (1.0 + 1e-9) {
                    return Err(Error::Numerical(format!("envelope {} violated by {p}", self.envelope)));
                }
                let u: f64 = rng.random();
                if u * self.envelope < p {
                    points.push(x);
                    q = deflate(&q, &c);
                    break;
                }
            }
        }
        Ok((points, proposals))
    }
}

/// Remove the direction `Q·c` from the span of the columns of `Q`
/// (Householder reflection taking `c` to a multiple of `e₁`).
fn deflate(q: &DMatrix<Complex64>, c: &[Complex64]) -> DMatrix<Complex64> {
    let r = c.len();
    let n = q.nrows();
    if r == 1 {
        return DMatrix::zeros(n, 0);
    }
    let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let phase = if c[0].norm() > 0.0 { c[0] / c[0].norm() } else { Complex64::new(1.0, 0.0) };
    let mut v: Vec<Complex64> = c.to_vec();
    v[0] += phase * norm;
    let vv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    // H = I − 2 v vᴴ / (vᴴv); columns 2..r of Q·H span the complement.
    let mut out = DMatrix::zeros(n, r - 1);
    for i in 0..n {
        let qv: Complex64 = (0..r).map(|m| q[(i, m)] * v[m]).sum();
        for j in 1..r {
            out[(i, j - 1)] = q[(i, j)] - qv * v[j].conj() * (2.0 / vv);
        }
    }
    out
}

/// Generalized eigenvalues of a pair of independent complex Ginibre
/// matrices (`A⁻¹B`), placed on the sphere through the affine coordinate.
/// Returns the configuration and the number of redraws.
pub fn sample_eigenvalue_model<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(Vec<ChartPoint>, u32)> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one particle".into()));
    }
    let mut retries = 0;
    loop {
        let mut gin = || {
            DMatrix::from_fn(n, n, |_, _| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex64::new(a, b) / 2f64.sqrt()
            })
        };
        let a = gin();
        let b = gin();
        let eig = a.lu().solve(&b).and_then(|m| m.schur().eigenvalues());
        if let Some(ev) = eig {
            if ev.iter().all(|z| z.is_finite()) {
                let pts =
                    ev.iter().map(|z| if z.norm() <= 1.0 { ChartPoint::affine(*z) } else { ChartPoint::at_infinity(z.inv()) }).collect();
                return Ok((pts, retries));
            }
        }
        retries += 1;
        if retries > MAX_PENCIL_RETRIES {
            return Err(Error::Numerical("matrix pencil stayed defective after repeated draws".into()));
        }
    }
}

/// Which sampler a batch uses, with its parameters.
#[derive(Debug, Clone)]
pub enum Sampler {
    ChainRule(ChainRuleSampler),
    /// Sphere with `N` particles.
    EigenvalueModel {
        n: usize,
    },
}

impl Sampler {
    pub fn id(&self) -> SamplerId {
        match self {
            Sampler::ChainRule(_) => SamplerId::ChainRule,
            Sampler::EigenvalueModel { .. } => SamplerId::EigenvalueModel,
        }
    }

    /// Sphere sampler with `n` particles.
    pub fn sphere(id: SamplerId, n: usize) -> Result<Self> {
        match id {
            SamplerId::ChainRule => Ok(Sampler::ChainRule(ChainRuleSampler::new(&SectionBasis::sphere_with_particles(n)?)?)),
            SamplerId::EigenvalueModel => Ok(Sampler::EigenvalueModel { n }),
        }
    }

    fn level(&self) -> usize {
        match self {
            Sampler::ChainRule(s) => s.basis.level(),
            Sampler::EigenvalueModel { n } => n - 1,
        }
    }

    /// Draw replica `replica` of the batch with `master_seed`; returns the
    /// configuration and a work count (proposals or pencil redraws).
    pub fn draw(&self, master_seed: u64, replica: u64) -> Result<(Configuration, u64)> {
        let mut rng = replica_rng(master_seed, replica);
        let (points, work) = match self {
            Sampler::ChainRule(s) => s.sample(&mut rng)?,
            Sampler::EigenvalueModel { n } => {
                let (p, r) = sample_eigenvalue_model(*n, &mut rng)?;
                (p, r as u64)
            }
        };
        Ok((Configuration { points, level: self.level(), replica }, work))
    }
}

/// A reproducible batch of configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub configurations: Vec<Configuration>,
    pub sampler: SamplerId,
    pub master_seed: u64,
    /// Total proposals (chain rule) or pencil redraws (eigenvalue model).
    pub work: u64,
}

/// Draw replicas `0..replicas` in parallel; results are stored in replica
/// order.
pub fn sample_batch(sampler: &Sampler, master_seed: u64, replicas: u64) -> Result<SampleBatch> {
    #[cfg(feature = "parallel")]
    let draws: Vec<Result<(Configuration, u64)>> = (0..replicas).into_par_iter().map(|r| sampler.draw(master_seed, r)).collect();
    #[cfg(not(feature = "parallel"))]
    let draws: Vec<Result<(Configuration, u64)>> = (0..replicas).map(|r| sampler.draw(master_seed, r)).collect();
    let mut configurations = Vec::with_capacity(replicas as usize);
    let mut work = 0;
    for d in draws {
        let (c, w) = d?;
        configurations.push(c);
        work += w;
    }
    Ok(SampleBatch { configurations, sampler: sampler.id(), master_seed, work })
}

const MAGIC: &[u8; 4] = b"CDPB";
const BINARY_VERSION: u32 = 1;

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    /// Columns `replica,point,re_z,im_z` (affine coordinate).
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new("sample-batch", &["replica", "point", "re_z", "im_z"]);
        for c in &self.configurations {
            for (i, p) in c.points.iter().enumerate() {
                let z = p.affine_coordinate().unwrap_or(Complex64::new(f64::INFINITY, f64::INFINITY));
                t.push(vec![c.replica.to_string(), i.to_string(), fmt17(z.re), fmt17(z.im)]);
            }
        }
        t.render()
    }

    /// Little-endian binary form: magic, version, sampler, seed, count, then
    /// per configuration `(replica, level, n)` and `n` triples
    /// `(chart, re, im)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.push(match self.sampler {
            SamplerId::ChainRule => 0,
            SamplerId::EigenvalueModel => 1,
        });
        out.extend_from_slice(&self.master_seed.to_le_bytes());
        out.extend_from_slice(&self.work.to_le_bytes());
        out.extend_from_slice(&(self.configurations.len() as u64).to_le_bytes());
        for c in &self.configurations {
            out.extend_from_slice(&c.replica.to_le_bytes());
            out.extend_from_slice(&(c.level as u32).to_le_bytes());
            out.extend_from_slice(&(c.points.len() as u32).to_le_bytes());
            for p in &c.points {
                out.push(match p.chart {
                    ChartId::Affine => 0,
                    ChartId::Infinity => 1,
                });
                out.extend_from_slice(&p.z.re.to_le_bytes());
                out.extend_from_slice(&p.z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::InvalidParameter("not a sample batch".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != BINARY_VERSION {
            return Err(Error::InvalidParameter(format!("unsupported batch version {version}")));
        }
        let sampler = match r.take(1)?[0] {
            0 => SamplerId::ChainRule,
            1 => SamplerId::EigenvalueModel,
            x => return Err(Error::InvalidParameter(format!("unknown sampler tag {x}"))),
        };
        let master_seed = r.u64()?;
        let work = r.u64()?;
        let count = r.u64()?;
        let mut configurations = Vec::new();
        for _ in 0..count {
            let replica = r.u64()?;
            let level = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
            let n = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
            let mut points = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let chart = match r.take(1)?[0] {
                    0 => ChartId::Affine,
                    1 => ChartId::Infinity,
                    x => return Err(Error::InvalidParameter(format!("unknown chart tag {x}"))),
                };
                let re = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
                let im = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
                points.push(ChartPoint { z: Complex64::new(re, im), chart });
            }
            configurations.push(Configuration { points, level, replica });
        }
        if r.pos != bytes.len() {
            return Err(Error::InvalidParameter("trailing bytes after sample batch".into()));
        }
        Ok(Self { configurations, sampler, master_seed, work })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::InvalidParameter("truncated sample batch".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
