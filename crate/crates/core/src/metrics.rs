//! Metric families on ℝⁿ with derivatives up to third order, all in one
//! Cartesian chart. Angular parts `ρ²dΘ²` are realized through `x = ρω`.

use crate::error::{Error, Result};
use crate::graphcase::GraphFunction;
use crate::radial::{profile_derivs, Profile, RadialJet};
use num_dual::{Dual3_64, DualNum};
use std::sync::Arc;

pub type SharedMetric = Arc<dyn MetricField>;

/// How the third derivatives of a metric are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

/// Metric components and coordinate derivatives at one point.
///
/// Layouts (row-major): `g[i][j]`, `dg[k][i][j] = ∂_k g_ij`,
/// `d2g[k][l][i][j] = ∂_k∂_l g_ij`, `d3g[k][l][m][i][j]`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub n: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub d2g: Vec<f64>,
    pub d3g: Option<Vec<f64>>,
}

impl MetricJet {
    pub fn zeros(n: usize, order: usize) -> Self {
        Self {
            n,
            g: vec![0.0; n * n],
            dg: vec![0.0; n.pow(3)],
            d2g: vec![0.0; n.pow(4)],
            d3g: (order >= 3).then(|| vec![0.0; n.pow(5)]),
        }
    }

    pub fn flat(n: usize, order: usize) -> Self {
        let mut j = Self::zeros(n, order);
        for i in 0..n {
            j.g[i * n + i] = 1.0;
        }
        j
    }
}

/// An n-dimensional metric given pointwise with its derivatives.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    /// Declared decay order: `g − δ = O(r^{−τ})`.
    fn tau(&self) -> f64;

    /// Components and derivatives at `x` up to `order` (≤ 3).
    fn jet(&self, x: &[f64], order: usize) -> Result<MetricJet>;

    fn provenance(&self) -> Provenance;

    /// Radius inside which the metric is not defined (horizon or singularity).
    fn inner_radius(&self) -> f64 {
        0.0
    }

    fn label(&self) -> String;
}

/// Step for first-order central differences at `x`.
pub fn fd_step_first(x: &[f64]) -> f64 {
    norm(x).max(1.0) * 6e-6
}

/// Step for second-order central differences and for differencing second
/// derivatives into third ones.
pub fn fd_step_second(x: &[f64]) -> f64 {
    norm(x).max(1.0) * 3e-4
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Third derivatives by central differences of analytic second derivatives,
/// symmetrized over the three derivative slots.
pub fn fd_third_derivatives<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> Result<Vec<f64>> {
    let n = m.dim();
    let h = fd_step_second(x);
    let mut raw = vec![0.0; n.pow(5)];
    let mut xp = x.to_vec();
    for q in 0..n {
        xp[q] = x[q] + h;
        let a = m.jet(&xp, 2)?;
        xp[q] = x[q] - h;
        let b = m.jet(&xp, 2)?;
        xp[q] = x[q];
        let n4 = n.pow(4);
        for t in 0..n4 {
            raw[q * n4 + t] = (a.d2g[t] - b.d2g[t]) / (2.0 * h);
        }
    }
    let n2 = n * n;
    let mut out = vec![0.0; n.pow(5)];
    for k in 0..n {
        for l in 0..n {
            for p in 0..n {
                for ij in 0..n2 {
                    let at = |a: usize, b: usize, c: usize| raw[((a * n + b) * n + c) * n2 + ij];
                    out[((k * n + l) * n + p) * n2 + ij] = (at(k, l, p) + at(l, p, k) + at(p, k, l)) / 3.0;
                }
            }
        }
    }
    Ok(out)
}

fn check_point(x: &[f64], n: usize) -> Result<f64> {
    if x.len() != n {
        return Err(Error::Contract(format!("point of length {} in dimension {n}", x.len())));
    }
    let r = norm(x);
    if !r.is_finite() {
        return Err(Error::Numeric("non-finite point".into()));
    }
    Ok(r)
}

/// Flat ℝⁿ.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    pub n: usize,
}

pub fn euclidean(n: usize) -> Euclidean {
    Euclidean { n }
}

impl MetricField for Euclidean {
    fn dim(&self) -> usize {
        self.n
    }
    fn tau(&self) -> f64 {
        f64::INFINITY
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<MetricJet> {
        check_point(x, self.n)?;
        Ok(MetricJet::flat(self.n, order))
    }
    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }
    fn label(&self) -> String {
        format!("euclidean(n={})", self.n)
    }
}

/// `g_ij = a(r) δ_ij + b(r) x_i x_j` with `a`, `b` given as radial profiles.
///
/// Covers conformally flat radial metrics (`b = 0`) and metrics of the form
/// `A(ρ)dρ² + ρ²dΘ²` (`a = 1`, `b = (A − 1)/ρ²`).
#[derive(Clone)]
pub struct RadialMetric {
    pub n: usize,
    pub a: Profile,
    pub b: Profile,
    pub tau: f64,
    pub inner: f64,
    pub name: String,
}

impl RadialMetric {
    fn domain_ok(&self, r: f64) -> Result<()> {
        if r <= self.inner || r == 0.0 {
            return Err(Error::Domain(format!(
                "{}: radius {r} is not outside {}",
                self.name, self.inner
            )));
        }
        Ok(())
    }
}

impl MetricField for RadialMetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn tau(&self) -> f64 {
        self.tau
    }
    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }
    fn inner_radius(&self) -> f64 {
        self.inner
    }
    fn label(&self) -> String {
        self.name.clone()
    }

    fn jet(&self, x: &[f64], order: usize) -> Result<MetricJet> {
        let n = self.n;
        let r = check_point(x, n)?;
        self.domain_ok(r)?;
        let ja = RadialJet::from_r_derivs(&profile_derivs(&self.a, r), r);
        let jb = RadialJet::from_r_derivs(&profile_derivs(&self.b, r), r);
        let out = radial_jet(x, &ja, &jb, order);
        if out.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("{}: non-finite metric at r = {r}", self.name)));
        }
        Ok(out)
    }
}

/// Assembles the jet of `a δ + b x⊗x` from the radial jets of `a` and `b`.
fn radial_jet(x: &[f64], ja: &RadialJet, jb: &RadialJet, order: usize) -> MetricJet {
    let n = x.len();
    let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
    let (a, b) = (ja.value(), jb.value());
    let (a1, b1) = (ja.d1(x), jb.d1(x));
    let (a2, b2) = (ja.d2(x), jb.d2(x));
    // ∂_k (x_i x_j) and ∂_k∂_l (x_i x_j)
    let h1 = |k: usize, i: usize, j: usize| d(k, i) * x[j] + d(k, j) * x[i];
    let h2 = |k: usize, l: usize, i: usize, j: usize| d(k, i) * d(l, j) + d(k, j) * d(l, i);
    let mut out = MetricJet::zeros(n, order);
    for i in 0..n {
        for j in 0..n {
            out.g[i * n + j] = a * d(i, j) + b * x[i] * x[j];
            for k in 0..n {
                out.dg[(k * n + i) * n + j] = a1[k] * d(i, j) + b1[k] * x[i] * x[j] + b * h1(k, i, j);
                for l in 0..n {
                    out.d2g[((k * n + l) * n + i) * n + j] = a2[k * n + l] * d(i, j)
                        + b2[k * n + l] * x[i] * x[j]
                        + b1[k] * h1(l, i, j)
                        + b1[l] * h1(k, i, j)
                        + b * h2(k, l, i, j);
                }
            }
        }
    }
    if let Some(d3g) = out.d3g.as_mut() {
        let (a3, b3) = (ja.d3(x), jb.d3(x));
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let klm = (k * n + l) * n + m;
                    for i in 0..n {
                        for j in 0..n {
                            d3g[klm * n * n + i * n + j] = a3[klm] * d(i, j)
                                + b3[klm] * x[i] * x[j]
                                + b2[k * n + l] * h1(m, i, j)
                                + b2[k * n + m] * h1(l, i, j)
                                + b2[l * n + m] * h1(k, i, j)
                                + b1[k] * h2(l, m, i, j)
                                + b1[l] * h2(k, m, i, j)
                                + b1[m] * h2(k, l, i, j);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `g = e^{−2u(r)} δ`.
pub fn conformal_radial(n: usize, u: Profile, tau: f64) -> RadialMetric {
    let a: Profile = Arc::new(move |r| (u(r) * -2.0).exp());
    RadialMetric {
        n,
        a,
        b: zero_profile(),
        tau,
        inner: 0.0,
        name: format!("conformal_radial(n={n})"),
    }
}

pub fn zero_profile() -> Profile {
    Arc::new(|r: Dual3_64| r * 0.0)
}

/// Coordinate chart for the Schwarzschild family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Rho,
    Conformal,
}

fn schwarzschild_exponent(n: usize, k: usize) -> Result<f64> {
    if k == 0 || 2 * k >= n {
        return Err(Error::Contract(format!("Schwarzschild family needs 1 ≤ k < n/2, got k={k}, n={n}")));
    }
    Ok(n as f64 / k as f64 - 2.0)
}

/// The generalized Schwarzschild metric `g^(k)` with mass parameter `m`.
///
/// Rho chart: `(1 − 2m/ρ^p)^{−1}dρ² + ρ²dΘ²`. Conformal chart:
/// `(1 + m/(2r^p))^{4k/(n−2k)} δ`. Here `p = n/k − 2`.
pub fn schwarzschild_family(k: usize, n: usize, m: f64, chart: Chart) -> Result<RadialMetric> {
    let p = schwarzschild_exponent(n, k)?;
    let name = format!("schwarzschild(k={k}, n={n}, m={m}, {chart:?})");
    Ok(match chart {
        Chart::Conformal => {
            let e = 4.0 * k as f64 / (n as f64 - 2.0 * k as f64);
            let a: Profile = Arc::new(move |r: Dual3_64| (r.powf(-p) * (0.5 * m) + 1.0).powf(e));
            let inner = if m < 0.0 { (-m / 2.0).powf(1.0 / p) } else { 0.0 };
            RadialMetric { n, a, b: zero_profile(), tau: p, inner, name }
        }
        Chart::Rho => {
            let b: Profile = Arc::new(move |r: Dual3_64| {
                let s = r.powf(-p) * (2.0 * m);
                s / (-s + 1.0) / (r * r)
            });
            let inner = if m > 0.0 { (2.0 * m).powf(1.0 / p) } else { 0.0 };
            let a: Profile = Arc::new(|r: Dual3_64| r * 0.0 + 1.0);
            RadialMetric { n, a, b, tau: p, inner, name }
        }
    })
}

/// Horizon radius of the rho chart, `ρ₀^{n/k−2} = 2m`.
pub fn schwarzschild_horizon(k: usize, n: usize, m: f64) -> Result<f64> {
    let p = schwarzschild_exponent(n, k)?;
    Ok(if m > 0.0 { (2.0 * m).powf(1.0 / p) } else { 0.0 })
}

/// `α̃ = 2(n−2)(n−3)α`.
pub fn egb_alpha_tilde(n: usize, alpha: f64) -> f64 {
    2.0 * (n as f64 - 2.0) * (n as f64 - 3.0) * alpha
}

/// Horizon radius `r₀` of the EGB black hole: the positive root of
/// `m = ½r^{n−2} + (α̃/4)r^{n−4}`.
pub fn egb_horizon(n: usize, alpha: f64, m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let at = egb_alpha_tilde(n, alpha);
    let nf = n as f64;
    let f = |r: f64| 0.5 * r.powf(nf - 2.0) + 0.25 * at * r.powf(nf - 4.0) - m;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The EGB black hole
/// `(1 + (r²/α̃)(1 − √(1 + 4α̃m/rⁿ)))^{−1}dr² + r²dΘ²`.
///
/// The bracket is evaluated as `1 − 4m r^{2−n}/(1 + √(1 + 4α̃m/rⁿ))`, which is
/// free of cancellation and reduces to `1 − 2m/r^{n−2}` at `α = 0`.
pub fn egb_blackhole(n: usize, alpha: f64, m: f64) -> Result<RadialMetric> {
    if n < 5 {
        return Err(Error::Contract(format!("EGB black hole needs n ≥ 5, got {n}")));
    }
    let at = egb_alpha_tilde(n, alpha);
    let nf = n as f64;
    let b: Profile = Arc::new(move |r: Dual3_64| {
        let root = (r.powf(-nf) * (4.0 * at * m) + 1.0).sqrt();
        let s = r.powf(2.0 - nf) * (4.0 * m) / (root + 1.0);
        s / (-s + 1.0) / (r * r)
    });
    Ok(RadialMetric {
        n,
        a: Arc::new(|r: Dual3_64| r * 0.0 + 1.0),
        b,
        tau: nf - 2.0,
        inner: egb_horizon(n, alpha, m),
        name: format!("egb_blackhole(n={n}, alpha={alpha}, m={m})"),
    })
}

/// `g_ij = δ_ij + f_i f_j` for a graph function `f`.
#[derive(Clone)]
pub struct GraphMetric {
    pub f: Arc<dyn GraphFunction>,
}

pub fn graph_metric(f: Arc<dyn GraphFunction>) -> GraphMetric {
    GraphMetric { f }
}

impl MetricField for GraphMetric {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn tau(&self) -> f64 {
        self.f.tau()
    }
    fn provenance(&self) -> Provenance {
        if self.f.has_fourth() {
            Provenance::Analytic
        } else {
            Provenance::FiniteDifference
        }
    }
    fn inner_radius(&self) -> f64 {
        self.f.inner_radius()
    }
    fn label(&self) -> String {
        format!("graph({})", self.f.label())
    }

    fn jet(&self, x: &[f64], order: usize) -> Result<MetricJet> {
        let n = self.dim();
        check_point(x, n)?;
        let want_fourth = order >= 3 && self.f.has_fourth();
        let fj = self.f.jet(x, if want_fourth { 4 } else { 3 })?;
        let (f1, f2, f3) = (&fj.grad, &fj.hess, &fj.third);
        let mut out = MetricJet::zeros(n, order);
        for i in 0..n {
            for j in 0..n {
                out.g[i * n + j] = if i == j { 1.0 } else { 0.0 } + f1[i] * f1[j];
                for k in 0..n {
                    out.dg[(k * n + i) * n + j] = f2[i * n + k] * f1[j] + f1[i] * f2[j * n + k];
                    for l in 0..n {
                        let t3 = |a: usize, b: usize, c: usize| f3[(a * n + b) * n + c];
                        out.d2g[((k * n + l) * n + i) * n + j] = t3(i, k, l) * f1[j]
                            + f2[i * n + k] * f2[j * n + l]
                            + f2[i * n + l] * f2[j * n + k]
                            + f1[i] * t3(j, k, l);
                    }
                }
            }
        }
        if order >= 3 {
            out.d3g = Some(match &fj.fourth {
                Some(f4) if want_fourth => {
                    let mut d3 = vec![0.0; n.pow(5)];
                    let t2 = |a: usize, b: usize| f2[a * n + b];
                    let t3 = |a: usize, b: usize, c: usize| f3[(a * n + b) * n + c];
                    let t4 = |a: usize, b: usize, c: usize, e: usize| f4[((a * n + b) * n + c) * n + e];
                    for k in 0..n {
                        for l in 0..n {
                            for m in 0..n {
                                let klm = (k * n + l) * n + m;
                                for i in 0..n {
                                    for j in 0..n {
                                        d3[klm * n * n + i * n + j] = t4(i, k, l, m) * f1[j]
                                            + t3(i, k, l) * t2(j, m)
                                            + t3(i, k, m) * t2(j, l)
                                            + t2(i, k) * t3(j, l, m)
                                            + t3(i, l, m) * t2(j, k)
                                            + t2(i, l) * t3(j, k, m)
                                            + t2(i, m) * t3(j, k, l)
                                            + f1[i] * t4(j, k, l, m);
                                    }
                                }
                            }
                        }
                    }
                    d3
                }
                _ => fd_third_derivatives(self, x)?,
            });
        }
        Ok(out)
    }
}

/// Derivatives of a coordinate map `x = ψ(x̂)` at one point:
/// `jac[i][a] = ∂ψ^i/∂x̂^a`, `hess[i][a][b]`, `third[i][a][b][c]`.
#[derive(Debug, Clone)]
pub struct ChangeJet {
    pub x: Vec<f64>,
    pub jac: Vec<f64>,
    pub hess: Vec<f64>,
    pub third: Vec<f64>,
}

/// A change of coordinates near infinity, mapping new coordinates `x̂` to
/// old coordinates `x`.
pub trait CoordinateChange: Send + Sync {
    fn dim(&self) -> usize;
    fn jet(&self, y: &[f64]) -> ChangeJet;
    fn forward(&self, y: &[f64]) -> Vec<f64> {
        self.jet(y).x
    }
    /// Decay order `τ_φ` of the perturbation: `φ = O(r^{1−τ_φ})`.
    fn decay(&self) -> f64;
}

/// `ψ(x̂) = Q·(x̂ (1 + ε(1 + |x̂|²)^{−τ_φ/2}))`: a rigid rotation `Q` composed
/// with a decaying radial perturbation `φ = ε x̂ (1+|x̂|²)^{−τ_φ/2}`.
#[derive(Debug, Clone)]
pub struct AsymptoticChange {
    pub n: usize,
    pub rotation: Vec<f64>,
    pub eps: f64,
    pub tau_phi: f64,
}

impl AsymptoticChange {
    pub fn identity(n: usize) -> Self {
        Self::rotation(identity_matrix(n))
    }

    pub fn rotation(q: Vec<f64>) -> Self {
        let n = (q.len() as f64).sqrt().round() as usize;
        Self { n, rotation: q, eps: 0.0, tau_phi: f64::INFINITY }
    }

    pub fn perturbation(n: usize, eps: f64, tau_phi: f64) -> Self {
        Self { n, rotation: identity_matrix(n), eps, tau_phi }
    }

    /// Rotation by `angle` in the coordinate plane `(i, j)`.
    pub fn plane_rotation(n: usize, i: usize, j: usize, angle: f64) -> Vec<f64> {
        let mut q = identity_matrix(n);
        let (s, c) = angle.sin_cos();
        q[i * n + i] = c;
        q[j * n + j] = c;
        q[i * n + j] = -s;
        q[j * n + i] = s;
        q
    }
}

pub fn identity_matrix(n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    q
}

impl CoordinateChange for AsymptoticChange {
    fn dim(&self) -> usize {
        self.n
    }
    fn decay(&self) -> f64 {
        self.tau_phi
    }

    fn jet(&self, y: &[f64]) -> ChangeJet {
        let n = self.n;
        let r = norm(y);
        let hj = if self.eps == 0.0 {
            RadialJet::from_s_derivs([1.0, 0.0, 0.0, 0.0, 0.0])
        } else {
            let (eps, t) = (self.eps, self.tau_phi);
            // h(s) = 1 + ε(1 + 2s)^{−t/2}, derivatives in s in closed form.
            let w = 1.0 + r * r;
            let c = |j: i32| {
                let mut coef = eps;
                for q in 0..j {
                    coef *= -t - 2.0 * q as f64;
                }
                coef * w.powf(-t / 2.0 - j as f64)
            };
            RadialJet::from_s_derivs([1.0 + c(0), c(1), c(2), c(3), 0.0])
        };
        let (h, h1, h2, h3) = (hj.value(), hj.d1(y), hj.d2(y), hj.d3(y));
        let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
        // Unrotated map p^i = y^i h.
        let mut pj = vec![0.0; n * n];
        let mut ph = vec![0.0; n.pow(3)];
        let mut pt = vec![0.0; n.pow(4)];
        for i in 0..n {
            for a in 0..n {
                pj[i * n + a] = h * d(i, a) + y[i] * h1[a];
                for b in 0..n {
                    ph[(i * n + a) * n + b] = d(i, a) * h1[b] + d(i, b) * h1[a] + y[i] * h2[a * n + b];
                    for c in 0..n {
                        pt[((i * n + a) * n + b) * n + c] = d(i, a) * h2[b * n + c]
                            + d(i, b) * h2[a * n + c]
                            + d(i, c) * h2[a * n + b]
                            + y[i] * h3[(a * n + b) * n + c];
                    }
                }
            }
        }
        let q = &self.rotation;
        let rot = |v: &[f64], stride: usize| {
            let mut out = vec![0.0; v.len()];
            for i in 0..n {
                for k in 0..n {
                    let qik = q[i * n + k];
                    if qik == 0.0 {
                        continue;
                    }
                    for t in 0..stride {
                        out[i * stride + t] += qik * v[k * stride + t];
                    }
                }
            }
            out
        };
        let p: Vec<f64> = y.iter().map(|v| v * h).collect();
        ChangeJet {
            x: rot(&p, 1),
            jac: rot(&pj, n),
            hess: rot(&ph, n * n),
            third: rot(&pt, n.pow(3)),
        }
    }
}

/// `ĝ_ab(x̂) = (∂ψ^i/∂x̂^a)(∂ψ^j/∂x̂^b) g_ij(ψ(x̂))`.
pub struct Pushforward {
    pub base: SharedMetric,
    pub change: Arc<dyn CoordinateChange>,
}

pub fn pushforward(base: SharedMetric, change: Arc<dyn CoordinateChange>) -> Pushforward {
    Pushforward { base, change }
}

fn mat_tmul(a: &[f64], b: &[f64], c: &[f64], n: usize, out: &mut [f64], scale: f64) {
    // out += scale · aᵀ b c
    let mut bc = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let bik = b[i * n + k];
            if bik == 0.0 {
                continue;
            }
            for j in 0..n {
                bc[i * n + j] += bik * c[k * n + j];
            }
        }
    }
    for p in 0..n {
        for i in 0..n {
            let aip = a[i * n + p];
            if aip == 0.0 {
                continue;
            }
            for j in 0..n {
                out[p * n + j] += scale * aip * bc[i * n + j];
            }
        }
    }
}

impl Pushforward {
    fn jet2(&self, y: &[f64], order: usize) -> Result<MetricJet> {
        let n = self.base.dim();
        let cj = self.change.jet(y);
        let bj = self.base.jet(&cj.x, order.min(2))?;
        let nn = n * n;
        // Slices of the change jet as n×n matrices in (i, a).
        let hmat = |c: usize| -> Vec<f64> {
            let mut m = vec![0.0; nn];
            for i in 0..n {
                for a in 0..n {
                    m[i * n + a] = cj.hess[(i * n + a) * n + c];
                }
            }
            m
        };
        let tmat = |c: usize, d: usize| -> Vec<f64> {
            let mut m = vec![0.0; nn];
            for i in 0..n {
                for a in 0..n {
                    m[i * n + a] = cj.third[((i * n + a) * n + c) * n + d];
                }
            }
            m
        };
        // G = g∘ψ and its derivatives in x̂.
        let gmat = bj.g.clone();
        let mut dgm = vec![vec![0.0; nn]; n];
        for c in 0..n {
            for k in 0..n {
                let jkc = cj.jac[k * n + c];
                for ij in 0..nn {
                    dgm[c][ij] += bj.dg[k * nn + ij] * jkc;
                }
            }
        }
        let hs: Vec<Vec<f64>> = (0..n).map(hmat).collect();
        let jac = &cj.jac;
        let mut out = MetricJet::zeros(n, 0);
        mat_tmul(jac, &gmat, jac, n, &mut out.g, 1.0);
        for c in 0..n {
            let mut tmp = vec![0.0; nn];
            mat_tmul(&hs[c], &gmat, jac, n, &mut tmp, 1.0);
            mat_tmul(jac, &dgm[c], jac, n, &mut tmp, 0.5);
            for a in 0..n {
                for b in 0..n {
                    out.dg[c * nn + a * n + b] = tmp[a * n + b] + tmp[b * n + a];
                }
            }
        }
        if order >= 2 {
            for c in 0..n {
                for d in c..n {
                    let mut ddg = vec![0.0; nn];
                    for k in 0..n {
                        for l in 0..n {
                            let w = cj.jac[k * n + c] * cj.jac[l * n + d];
                            for ij in 0..nn {
                                ddg[ij] += bj.d2g[(k * n + l) * nn + ij] * w;
                            }
                        }
                        let hkcd = cj.hess[(k * n + c) * n + d];
                        for ij in 0..nn {
                            ddg[ij] += bj.dg[k * nn + ij] * hkcd;
                        }
                    }
                    let mut tmp = vec![0.0; nn];
                    mat_tmul(&tmat(c, d), &gmat, jac, n, &mut tmp, 1.0);
                    mat_tmul(&hs[c], &gmat, &hs[d], n, &mut tmp, 1.0);
                    mat_tmul(&hs[c], &dgm[d], jac, n, &mut tmp, 1.0);
                    mat_tmul(&hs[d], &dgm[c], jac, n, &mut tmp, 1.0);
                    mat_tmul(jac, &ddg, jac, n, &mut tmp, 0.5);
                    for a in 0..n {
                        for b in 0..n {
                            let v = tmp[a * n + b] + tmp[b * n + a];
                            out.d2g[(c * n + d) * nn + a * n + b] = v;
                            out.d2g[(d * n + c) * nn + a * n + b] = v;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl MetricField for Pushforward {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn tau(&self) -> f64 {
        self.base.tau().min(self.change.decay())
    }
    fn provenance(&self) -> Provenance {
        Provenance::FiniteDifference
    }
    fn inner_radius(&self) -> f64 {
        self.base.inner_radius()
    }
    fn label(&self) -> String {
        format!("pushforward({})", self.base.label())
    }
    fn jet(&self, y: &[f64], order: usize) -> Result<MetricJet> {
        check_point(y, self.dim())?;
        let mut j = self.jet2(y, order)?;
        if order >= 3 {
            j.d3g = Some(fd_third_derivatives(self, y)?);
        }
        Ok(j)
    }
}
