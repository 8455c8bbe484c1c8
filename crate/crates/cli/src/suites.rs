//! Randomized identity checks behind `verify --suite`.

use lovelock_mass::curvature::{
    divergence_of_p, gauss_bonnet_l2_direct, lovelock_l, riemann_symmetry_residual, weyl_sigma2_split,
    CurvatureBundle, PKind,
};
use lovelock_mass::graphcase::{
    graph_divergence_identity_residual, graph_hypersurface_data, graph_l2, Ellipsoid, GraphFunction, Hypersurface,
    Kernel, KernelShape, KernelSum,
};
use lovelock_mass::metrics::{
    graph_metric, pushforward, schwarzschild_family, AsymptoticChange, Chart, CoordinateChange, MetricField,
    SharedMetric,
};
use lovelock_oracles::{
    curvature_norms, direct_l2, hyperspherical, point_curvatures, riemann_lower, schouten_sigma2, EllipsoidEmbedding,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::CliError;

pub const SUITES: [&str; 6] = ["divergence", "graph-identity", "sigma2", "hypersurface", "l2-24h4", "invariance"];

/// Random points per check.
pub const POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Largest residual over all sampled points.
    pub residual: f64,
    pub tolerance: f64,
    pub points: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub n: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

struct Tracker {
    name: String,
    tolerance: f64,
    worst: f64,
    points: usize,
}

impl Tracker {
    fn new(name: &str, tolerance: f64) -> Self {
        Self { name: name.into(), tolerance, worst: 0.0, points: 0 }
    }
    fn push(&mut self, r: f64) {
        // NaN residuals must fail
        self.worst = if r.is_nan() { f64::NAN } else if self.worst.is_nan() { self.worst } else { self.worst.max(r) };
        self.points += 1;
    }
    fn done(self) -> Check {
        let pass = self.worst <= self.tolerance;
        Check { name: self.name, residual: self.worst, tolerance: self.tolerance, points: self.points, pass }
    }
}

fn unif(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    rng.random_range(a..b)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    (0..n).map(|_| unif(rng, -radius, radius)).collect()
}

/// A smooth compactly perturbed graph: a Gaussian, a fast-decaying algebraic
/// bump and a compactly supported polynomial bump with random centers.
pub fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> KernelSum {
    let mut terms = Vec::new();
    let shapes = [
        KernelShape::Gaussian { width: unif(rng, 0.8, 1.5) },
        KernelShape::Algebraic { width: unif(rng, 1.0, 2.0), beta: unif(rng, 0.5, 1.5) },
        KernelShape::CompactPoly { radius: unif(rng, 1.5, 2.5) },
    ];
    for shape in shapes {
        let center = random_point(rng, n, 0.6);
        let coeff = unif(rng, 0.3, 0.7) * if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
        terms.push(Kernel { center, coeff, shape });
    }
    KernelSum { n, terms }
}

/// A graph of compact support, sum of polynomial bumps.
pub fn random_bump(n: usize, rng: &mut ChaCha8Rng) -> KernelSum {
    let terms = (0..2)
        .map(|_| Kernel {
            center: random_point(rng, n, 0.5),
            coeff: unif(rng, -0.6, 0.6),
            shape: KernelShape::CompactPoly { radius: unif(rng, 1.5, 2.5) },
        })
        .collect();
    KernelSum { n, terms }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn rm_norm2(b: &CurvatureBundle<f64>) -> f64 {
    b.riemann_lo.iter().zip(&b.riemann_hi).map(|(a, h)| a * h).sum()
}

pub fn run_suite(suite: &str, n: usize, seed: u64) -> Result<SuiteReport, CliError> {
    if !(4..=8).contains(&n) {
        return Err(CliError::Config(format!("--n: suites need 4 ≤ n ≤ 8, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match suite {
        "divergence" => divergence(n, &mut rng)?,
        "graph-identity" => graph_identity(n, &mut rng)?,
        "sigma2" => sigma2(n, &mut rng)?,
        "hypersurface" => hypersurface(n, &mut rng)?,
        "l2-24h4" => l2_24h4(n, &mut rng)?,
        "invariance" => invariance(n, &mut rng)?,
        other => {
            return Err(CliError::Config(format!("--suite: unknown suite {other:?}; known suites: {}", SUITES.join(", "))))
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { suite: suite.into(), n, seed, checks, pass })
}

/// `∇_i P^{ijkl} = 0` with analytic and with finite-difference third
/// derivatives, plus the algebraic symmetries of `Rm`.
fn divergence(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let f = random_graph(n, rng);
    let g = graph_metric(Arc::new(f));
    let mut gb = Tracker::new("div P (Gauss-Bonnet formula), analytic", 1e-6);
    let mut gen = Tracker::new("div P_(2) (delta contraction), analytic", 1e-6);
    let mut sym = Tracker::new("Riemann symmetries and first Bianchi, analytic", 1e-9);
    for _ in 0..POINTS {
        let x = random_point(rng, n, 2.0);
        let jet = g.jet(&x, 3)?;
        gb.push(max_abs(&divergence_of_p(&jet, PKind::GaussBonnet)?));
        gen.push(max_abs(&divergence_of_p(&jet, PKind::General(2))?));
        let b = CurvatureBundle::from_jet(&jet)?;
        sym.push(riemann_symmetry_residual(&b.riemann_lo, n) / max_abs(&b.riemann_lo).max(1e-300));
    }
    let base: SharedMetric = Arc::new(schwarzschild_family(if n >= 5 { 2 } else { 1 }, n, unif(rng, 0.5, 1.5), Chart::Conformal)?);
    let change = Arc::new(AsymptoticChange::perturbation(n, unif(rng, 0.05, 0.15), 1.0));
    let pf = pushforward(base, change);
    let mut fd = Tracker::new("div P (Gauss-Bonnet formula), finite-difference pushforward", 1e-4);
    let mut fd_sym = Tracker::new("Riemann symmetries and first Bianchi, pushforward", 1e-6);
    let mut higher = (2 * 3 < n).then(|| Tracker::new("div P_(3) (delta contraction), analytic", 1e-6));
    for _ in 0..POINTS {
        let mut x = random_point(rng, n, 1.0);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = unif(rng, 0.5, 1.5);
        x.iter_mut().for_each(|v| *v *= target / r);
        let jet = pf.jet(&x, 3)?;
        fd.push(max_abs(&divergence_of_p(&jet, PKind::GaussBonnet)?));
        let b = CurvatureBundle::from_jet(&jet)?;
        fd_sym.push(riemann_symmetry_residual(&b.riemann_lo, n) / max_abs(&b.riemann_lo).max(1e-300));
    }
    if let Some(t) = higher.as_mut() {
        for _ in 0..POINTS {
            let x = random_point(rng, n, 2.0);
            let jet = g.jet(&x, 3)?;
            t.push(max_abs(&divergence_of_p(&jet, PKind::General(3))?));
        }
    }
    let mut out = vec![gb.done(), gen.done(), sym.done(), fd.done(), fd_sym.done()];
    out.extend(higher.map(Tracker::done));
    Ok(out)
}

/// `∂_i(P^{ijkl}∂_l g_jk) = ½L₂` for graphs of compact support.
fn graph_identity(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let f = random_bump(n, rng);
    let mut t = Tracker::new("flat divergence of P·∂g minus L2/2, compact bump", 1e-4);
    for _ in 0..POINTS {
        let x = random_point(rng, n, 2.0);
        t.push(graph_divergence_identity_residual(&f, &x)?);
    }
    Ok(vec![t.done()])
}

/// `L₂ = ‖W‖² + 8(n−2)(n−3)σ₂(A)` and the closed form of `σ₂` against an
/// explicit Schouten expansion.
fn sigma2(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let f = random_graph(n, rng);
    let g = graph_metric(Arc::new(f));
    let nf = n as f64;
    let mut split = Tracker::new("L2 - |W|^2 - 8(n-2)(n-3) sigma2, relative to |Rm|^2", 1e-9);
    let mut closed = Tracker::new("sigma2 closed form vs Schouten expansion, relative to |Rm|^2", 1e-9);
    for _ in 0..POINTS {
        let x = random_point(rng, n, 2.0);
        let jet = g.jet(&x, 2)?;
        let b = CurvatureBundle::from_jet(&jet)?;
        let scale = rm_norm2(&b).max(1e-300);
        let (w2, s2) = weyl_sigma2_split(&b);
        let l2 = lovelock_l(&b, 2);
        split.push((l2 - w2 - 8.0 * (nf - 2.0) * (nf - 3.0) * s2).abs() / scale);
        let rm = riemann_lower(n, &jet.g, &jet.dg, &jet.d2g)?;
        closed.push((s2 - schouten_sigma2(n, &jet.g, &rm)?).abs() / scale);
    }
    Ok(vec![split.done(), closed.done()])
}

/// Mean curvatures of ellipsoids from the level-set formula against the
/// parametric embedding, and the Gauss equation against the intrinsic scalar
/// curvature.
fn hypersurface(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let mut hk = Tracker::new("H_1..H_3 level set vs parametric embedding, relative", 1e-9);
    let mut gauss = Tracker::new("induced scalar curvature vs intrinsic, relative", 1e-9);
    let mut light = Tracker::new("H_1 of round sphere minus (n-1)/rho", 1e-12);
    for _ in 0..POINTS {
        let axes: Vec<f64> = (0..n).map(|_| unif(rng, 0.5, 2.0)).collect();
        let center = random_point(rng, n, 1.0);
        let sigma = Ellipsoid::new(axes.clone())?.centered(center.clone())?;
        let emb = EllipsoidEmbedding { axes, center };
        let mut th: Vec<f64> = (0..n - 2).map(|_| unif(rng, 0.1, 3.0)).collect();
        th.push(unif(rng, 0.0, 2.0 * std::f64::consts::PI));
        let omega = hyperspherical(&th);
        let (x, _) = sigma.surface_point(&omega)?;
        let d = sigma.data(&x)?;
        let o = point_curvatures(&emb, &th, true)?;
        let mut worst = 0.0f64;
        for k in 1..=3 {
            worst = worst.max((d.h(k) - o[k]).abs() / o[k].abs().max(1.0));
        }
        hk.push(worst);
        gauss.push((d.induced_scalar - o[4]).abs() / o[4].abs().max(1.0));
        let rho = unif(rng, 0.5, 3.0);
        let s = Ellipsoid::sphere(n, rho)?;
        let (y, _) = s.surface_point(&omega)?;
        light.push((s.data(&y)?.h(1) - (n as f64 - 1.0) / rho).abs());
    }
    Ok(vec![hk.done(), gauss.done(), light.done()])
}

/// `L₂ = 24H₄` for graphs, and agreement of four independent `L₂` evaluations.
fn l2_24h4(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let f = random_graph(n, rng);
    let g = graph_metric(Arc::new(f.clone()));
    let mut h4 = Tracker::new("L2 - 24 H_4, relative to |Rm|^2", 1e-8);
    let mut three = Tracker::new("L2 delta contraction vs norm formula vs oracle, relative", 1e-9);
    let mut alg = Tracker::new("L2 algebraic graph curvature vs metric derivatives, relative", 1e-9);
    for _ in 0..POINTS {
        let x = random_point(rng, n, 2.0);
        let jet = g.jet(&x, 2)?;
        let b = CurvatureBundle::from_jet(&jet)?;
        let scale = rm_norm2(&b).max(1e-300);
        let l2 = lovelock_l(&b, 2);
        let fj = f.jet(&x, 2)?;
        let hd = graph_hypersurface_data(&fj.grad, &fj.hess)?;
        h4.push((l2 - 24.0 * hd.h(4)).abs() / scale);
        let direct = gauss_bonnet_l2_direct(&b);
        let oracle = direct_l2(&g, &x)?;
        three.push(((l2 - direct).abs().max((l2 - oracle).abs())) / scale);
        alg.push((graph_l2(&f, &x)? - oracle).abs() / scale);
    }
    Ok(vec![h4.done(), three.done(), alg.done()])
}

/// Scalars `L₂`, `R` and `|Rm|²` are unchanged under random asymptotic
/// coordinate changes.
fn invariance(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let base: SharedMetric = Arc::new(schwarzschild_family(if n >= 5 { 2 } else { 1 }, n, unif(rng, 0.5, 1.5), Chart::Conformal)?);
    let angle = unif(rng, 0.0, 2.0 * std::f64::consts::PI);
    let mut change = AsymptoticChange::perturbation(n, unif(rng, 0.05, 0.2), unif(rng, 0.5, 2.0));
    change.rotation = AsymptoticChange::plane_rotation(n, 0, n - 1, angle);
    let change = Arc::new(change);
    let pf = pushforward(base.clone(), change.clone());
    let mut t = Tracker::new("L2, R and |Rm|^2 of pushforward vs base, relative", 1e-8);
    for _ in 0..POINTS {
        let mut y = random_point(rng, n, 1.0);
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = unif(rng, 2.0, 6.0);
        y.iter_mut().for_each(|v| *v *= target / r);
        let x = change.forward(&y);
        let a = pf.jet(&y, 2)?;
        let b = base.jet(&x, 2)?;
        let ra = riemann_lower(n, &a.g, &a.dg, &a.d2g)?;
        let rb = riemann_lower(n, &b.g, &b.dg, &b.d2g)?;
        let (na, ca, sa) = curvature_norms(n, &a.g, &ra)?;
        let (nb, cb, sb) = curvature_norms(n, &b.g, &rb)?;
        let scale = nb.max(1e-300);
        let la = na - 4.0 * ca + sa * sa;
        let lb = nb - 4.0 * cb + sb * sb;
        let worst = ((la - lb).abs() / scale).max((na - nb).abs() / scale).max((sa - sb).abs() / scale.sqrt());
        t.push(worst);
    }
    Ok(vec![t.done()])
}
