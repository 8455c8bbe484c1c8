//! Graphs `g = δ + df⊗df` over ℝⁿ: Hessian form of `L₂`, hypersurface
//! curvatures, bulk and horizon terms of the mass, Penrose and
//! Aleksandrov-Fenchel reports, and closed forms for radial graphs.

use crate::curvature::{lovelock_l, p_tensor, CurvatureBundle};
use crate::error::{Error, Result};
use crate::mass::c2;
use crate::metrics::{egb_alpha_tilde, egb_horizon, graph_metric, MetricField};
use crate::quadrature::{exterior_integral, omega, RadialRule, SphereRule};
use crate::radial::{profile_derivs, Profile, RadialJet};
use nalgebra::{DMatrix, SymmetricEigen};
use num_dual::{Dual3_64, DualNum};
use rayon::prelude::*;
use std::sync::Arc;

/// Derivatives of a graph function at one point; `third` is filled for
/// `order ≥ 3` and `fourth` for `order ≥ 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphJet {
    pub f: Option<f64>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub third: Vec<f64>,
    pub fourth: Option<Vec<f64>>,
}

pub trait GraphFunction: Send + Sync {
    fn dim(&self) -> usize;
    /// Decay order: `f_i = O(|x|^{−τ/2})`.
    fn tau(&self) -> f64;
    fn jet(&self, x: &[f64], order: usize) -> Result<GraphJet>;
    fn has_fourth(&self) -> bool {
        true
    }
    /// Radius of the excised region about the origin, `0` if none.
    fn inner_radius(&self) -> f64 {
        0.0
    }
    fn label(&self) -> String;
}

fn check_point(x: &[f64], n: usize) -> Result<f64> {
    if x.len() != n {
        return Err(Error::Contract(format!("point has {} coordinates, expected {n}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite point".into()));
    }
    Ok(x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `f(x) = a·x + b`.
#[derive(Debug, Clone)]
pub struct LinearGraph {
    pub a: Vec<f64>,
    pub b: f64,
}

impl GraphFunction for LinearGraph {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn tau(&self) -> f64 {
        0.0
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<GraphJet> {
        let n = self.dim();
        check_point(x, n)?;
        let f = self.a.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + self.b;
        Ok(GraphJet {
            f: Some(f),
            grad: self.a.clone(),
            hess: vec![0.0; n * n],
            third: if order >= 3 { vec![0.0; n * n * n] } else { Vec::new() },
            fourth: (order >= 4).then(|| vec![0.0; n.pow(4)]),
        })
    }
    fn label(&self) -> String {
        "linear".into()
    }
}

/// A radial graph given by its slope `f_r(r)` as a dual-number profile.
#[derive(Clone)]
pub struct RadialGraph {
    pub n: usize,
    pub slope: Profile,
    pub value: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub tau: f64,
    pub inner: f64,
    pub name: String,
}

impl RadialGraph {
    pub fn new(n: usize, slope: Profile, tau: f64, inner: f64, name: impl Into<String>) -> Self {
        Self { n, slope, value: None, tau, inner, name: name.into() }
    }

    /// The graph realizing `(1 − 2m/ρ^{n/2−2})^{−1}dρ² + ρ²dΘ²`, with
    /// `f_r² = s/(1 − s)`, `s = 2m r^{2−n/2}`. For `n = 5` the height
    /// function is known in closed form.
    pub fn schwarzschild(n: usize, m: f64) -> Result<Self> {
        if n < 5 {
            return Err(Error::Contract(format!("Schwarzschild graph needs n ≥ 5, got {n}")));
        }
        if m < 0.0 {
            return Err(Error::Domain("Schwarzschild graph needs m ≥ 0".into()));
        }
        let p = n as f64 / 2.0 - 2.0;
        let name = format!("schwarzschild_graph(n={n}, m={m})");
        if m == 0.0 {
            return Ok(Self::new(n, Arc::new(|r: Dual3_64| r * 0.0), f64::INFINITY, 0.0, name));
        }
        let slope: Profile = Arc::new(move |r: Dual3_64| {
            let s = r.powf(-p) * (2.0 * m);
            (s / (-s + 1.0)).sqrt()
        });
        let mut g = Self::new(n, slope, p, (2.0 * m).powf(1.0 / p), name);
        if n == 5 {
            g.value = Some(Arc::new(move |r: f64| {
                let q = 8.0 * m * (r.sqrt() - 2.0 * m);
                2.0 * r.sqrt() * q.sqrt() - q.powf(1.5) / (6.0 * m)
            }));
        }
        Ok(g)
    }

    /// The graph of the EGB black hole of mass `m` and coupling `alpha`.
    pub fn egb(n: usize, alpha: f64, m: f64) -> Result<Self> {
        if n < 5 {
            return Err(Error::Contract(format!("EGB graph needs n ≥ 5, got {n}")));
        }
        if m <= 0.0 {
            return Err(Error::Domain("EGB graph needs m > 0".into()));
        }
        let at = egb_alpha_tilde(n, alpha);
        let nf = n as f64;
        let slope: Profile = Arc::new(move |r: Dual3_64| {
            let root = (r.powf(-nf) * (4.0 * at * m) + 1.0).sqrt();
            let s = r.powf(2.0 - nf) * (4.0 * m) / (root + 1.0);
            (s / (-s + 1.0)).sqrt()
        });
        Ok(Self::new(
            n,
            slope,
            nf - 2.0,
            egb_horizon(n, alpha, m),
            format!("egb_graph(n={n}, alpha={alpha}, m={m})"),
        ))
    }
}

impl GraphFunction for RadialGraph {
    fn dim(&self) -> usize {
        self.n
    }
    fn tau(&self) -> f64 {
        self.tau
    }
    fn inner_radius(&self) -> f64 {
        self.inner
    }
    fn label(&self) -> String {
        self.name.clone()
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<GraphJet> {
        let r = check_point(x, self.n)?;
        if r <= self.inner || r == 0.0 {
            return Err(Error::Domain(format!("{}: radius {r} is not outside {}", self.name, self.inner)));
        }
        let d = profile_derivs(&self.slope, r);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("{}: non-finite slope at r = {r}", self.name)));
        }
        let value = self.value.as_ref().map(|v| v(r));
        let jet = RadialJet::from_r_derivs(&[value.unwrap_or(0.0), d[0], d[1], d[2], d[3]], r);
        Ok(GraphJet {
            f: value,
            grad: jet.d1(x),
            hess: jet.d2(x),
            third: if order >= 3 { jet.d3(x) } else { Vec::new() },
            fourth: (order >= 4).then(|| jet.d4(x)),
        })
    }
}

/// Radial bump profiles `K(|y|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    /// `exp(−|y|²/w²)`.
    Gaussian { width: f64 },
    /// `(1 + |y|²/w²)^{−β}`, decay order `4β + 2`.
    Algebraic { width: f64, beta: f64 },
    /// `(1 − |y|²/R²)⁵` inside the ball of radius `R`, zero outside.
    CompactPoly { radius: f64 },
}

impl KernelShape {
    /// `K` and its first four derivatives in `s = |y|²/2`.
    pub fn ds(&self, s: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        match *self {
            KernelShape::Gaussian { width } => {
                let c = -2.0 / (width * width);
                let e = (c * s).exp();
                for (j, o) in out.iter_mut().enumerate() {
                    *o = c.powi(j as i32) * e;
                }
            }
            KernelShape::Algebraic { width, beta } => {
                let c = 2.0 / (width * width);
                let base = 1.0 + c * s;
                let mut coef = 1.0;
                for (j, o) in out.iter_mut().enumerate() {
                    *o = coef * base.powf(-beta - j as f64);
                    coef *= -(beta + j as f64) * c;
                }
            }
            KernelShape::CompactPoly { radius } => {
                let c = -2.0 / (radius * radius);
                let base = 1.0 + c * s;
                if base > 0.0 {
                    let mut coef = 1.0;
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = coef * base.powi(5 - j as i32);
                        coef *= (5 - j) as f64 * c;
                    }
                }
            }
        }
        out
    }

    pub fn tau(&self) -> f64 {
        match *self {
            KernelShape::Algebraic { beta, .. } => 4.0 * beta + 2.0,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub center: Vec<f64>,
    pub coeff: f64,
    pub shape: KernelShape,
}

/// `f(x) = Σ c_a K_a(|x − x_a|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSum {
    pub n: usize,
    pub terms: Vec<Kernel>,
}

impl GraphFunction for KernelSum {
    fn dim(&self) -> usize {
        self.n
    }
    fn tau(&self) -> f64 {
        self.terms.iter().map(|k| k.shape.tau()).fold(f64::INFINITY, f64::min)
    }
    fn label(&self) -> String {
        format!("kernel_sum(n={}, terms={})", self.n, self.terms.len())
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<GraphJet> {
        let n = self.n;
        check_point(x, n)?;
        let mut out = GraphJet {
            f: Some(0.0),
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
            third: if order >= 3 { vec![0.0; n * n * n] } else { Vec::new() },
            fourth: (order >= 4).then(|| vec![0.0; n.pow(4)]),
        };
        let add = |acc: &mut [f64], v: Vec<f64>, c: f64| acc.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
        for k in &self.terms {
            let y: Vec<f64> = x.iter().zip(&k.center).map(|(a, b)| a - b).collect();
            let s = 0.5 * y.iter().map(|v| v * v).sum::<f64>();
            let jet = RadialJet::from_s_derivs(k.shape.ds(s));
            *out.f.as_mut().unwrap() += k.coeff * jet.value();
            add(&mut out.grad, jet.d1(&y), k.coeff);
            add(&mut out.hess, jet.d2(&y), k.coeff);
            if order >= 3 {
                add(&mut out.third, jet.d3(&y), k.coeff);
            }
            if let Some(f4) = out.fourth.as_mut() {
                add(f4, jet.d4(&y), k.coeff);
            }
        }
        Ok(out)
    }
}

/// Curvature bundle of the graph metric from `f_i`, `f_ij` alone, using
/// `R_ijkl = (f_ik f_jl − f_il f_jk)/(1 + |∇f|²)`.
pub fn graph_bundle(grad: &[f64], hess: &[f64]) -> Result<CurvatureBundle<f64>> {
    let n = grad.len();
    let w = 1.0 + grad.iter().map(|v| v * v).sum::<f64>();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = if i == j { 1.0 } else { 0.0 } + grad[i] * grad[j];
        }
    }
    let h = |a: usize, b: usize| hess[a * n + b];
    let mut rm = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    rm[((i * n + j) * n + k) * n + l] = (h(i, k) * h(j, l) - h(i, l) * h(j, k)) / w;
                }
            }
        }
    }
    CurvatureBundle::from_algebraic(n, &g, rm)
}

/// `L₂ = P^{ijkl}(f_ik f_jl − f_il f_jk)/(1 + |∇f|²)`.
pub fn graph_l2<F: GraphFunction + ?Sized>(f: &F, x: &[f64]) -> Result<f64> {
    let j = f.jet(x, 2)?;
    let b = graph_bundle(&j.grad, &j.hess)?;
    let p = p_tensor(&b);
    let n = b.n;
    let w = 1.0 + j.grad.iter().map(|v| v * v).sum::<f64>();
    let h = |a: usize, c: usize| j.hess[a * n + c];
    let mut s = 0.0;
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                for l in 0..n {
                    s += p.at(i, jj, k, l) * (h(i, k) * h(jj, l) - h(i, l) * h(jj, k));
                }
            }
        }
    }
    Ok(s / w)
}

/// `V^i = P^{ijkl} ∂_l g_jk` of the graph metric at `x`.
pub fn graph_gbc_vector<F: GraphFunction + ?Sized>(f: &F, x: &[f64]) -> Result<Vec<f64>> {
    let j = f.jet(x, 2)?;
    let n = j.grad.len();
    let b = graph_bundle(&j.grad, &j.hess)?;
    let p = p_tensor(&b);
    let dg = |l: usize, a: usize, c: usize| j.hess[a * n + l] * j.grad[c] + j.grad[a] * j.hess[c * n + l];
    let mut v = vec![0.0; n];
    for (i, vi) in v.iter_mut().enumerate() {
        for jj in 0..n {
            for k in 0..n {
                for l in 0..n {
                    *vi += p.at(i, jj, k, l) * dg(l, jj, k);
                }
            }
        }
    }
    Ok(v)
}

/// `|∂_i(P^{ijkl}∂_l g_jk) − ½L₂|` with the outer divergence taken by a
/// fourth-order central difference of the inner field.
pub fn graph_divergence_identity_residual<F: GraphFunction + ?Sized>(f: &F, x: &[f64]) -> Result<f64> {
    let n = f.dim();
    let r = check_point(x, n)?;
    let h = 1e-3 * r.max(1.0);
    let mut div = 0.0;
    let mut y = x.to_vec();
    for i in 0..n {
        let mut at = |t: f64| -> Result<f64> {
            y[i] = x[i] + t;
            let v = graph_gbc_vector(f, &y)?[i];
            y[i] = x[i];
            Ok(v)
        };
        div += (-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h);
    }
    Ok((div - 0.5 * graph_l2(f, x)?).abs())
}

/// Checks that `r^n |L₂|` decreases far out, so the bulk integral converges.
fn check_l2_tail<F: GraphFunction + ?Sized>(f: &F) -> Result<()> {
    let n = f.dim();
    let base = 1e3 * f.inner_radius().max(1.0);
    let probe = |r: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        for d in 0..n {
            let mut x = vec![0.0; n];
            x[d] = r;
            worst = worst.max(graph_l2(f, &x)?.abs() * r.powi(n as i32));
        }
        Ok(worst)
    };
    let (near, far) = (probe(base)?, probe(100.0 * base)?);
    if far > 1e-12 && far > 0.5 * near {
        return Err(Error::Numeric(format!(
            "L2 tail does not converge: r^n|L2| = {near:.3e} at r = {base}, {far:.3e} at r = {}",
            100.0 * base
        )));
    }
    Ok(())
}

/// `(c₂(n)/2)∫ L₂ dV_δ` over ℝⁿ, or over `|x| > r_in(1 + 10⁻³)` when `f`
/// has an excised core.
pub fn bulk_mass<F: GraphFunction + ?Sized>(f: &F, rule: &SphereRule, radial: &RadialRule) -> Result<f64> {
    check_l2_tail(f)?;
    let n = f.dim();
    let r_in = f.inner_radius() * (1.0 + 1e-3);
    let s = exterior_integral(|x| graph_l2(f, x), |_| r_in, rule, radial)?;
    Ok(0.5 * c2(n) * s)
}

/// Curvature data of a hypersurface at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersurfaceData {
    /// Second fundamental form in an orthonormal tangent frame, row-major.
    pub second_ff: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// `H_0 = 1, H_1, …, H_d`: elementary symmetric functions of the
    /// eigenvalues.
    pub mean_curvatures: Vec<f64>,
    /// Scalar curvature of the induced metric, `H_1² − |A|²`.
    pub induced_scalar: f64,
}

impl HypersurfaceData {
    pub fn h(&self, k: usize) -> f64 {
        self.mean_curvatures.get(k).copied().unwrap_or(0.0)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// From a symmetric second fundamental form `a` (d×d) in an orthonormal frame.
    pub fn from_second_ff(a: Vec<f64>, d: usize) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite second fundamental form".into()));
        }
        let m = DMatrix::from_row_slice(d, d, &a);
        let m = (&m + m.transpose()) * 0.5;
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|x, y| x.total_cmp(y));
        let mean_curvatures = elementary_symmetric(&eigenvalues);
        let tr: f64 = (0..d).map(|i| a[i * d + i]).sum();
        let sq: f64 = a.iter().map(|v| v * v).sum();
        Ok(Self { second_ff: a, eigenvalues, mean_curvatures, induced_scalar: tr * tr - sq })
    }
}

/// `e_0, …, e_d` of `lams`.
pub fn elementary_symmetric(lams: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; lams.len() + 1];
    e[0] = 1.0;
    for (i, &l) in lams.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += l * e[k - 1];
        }
    }
    e
}

/// Orthonormal basis of the complement of the unit vector `nu`, from a
/// Householder reflection.
pub fn tangent_frame(nu: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = nu.len();
    let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 1e-300) || !norm.is_finite() {
        return Err(Error::Numeric("degenerate normal: cannot build a tangent frame".into()));
    }
    let nu: Vec<f64> = nu.iter().map(|v| v / norm).collect();
    let k = (0..n).max_by(|&a, &b| nu[a].abs().total_cmp(&nu[b].abs())).unwrap();
    let mut u = nu.clone();
    u[k] += nu[k].signum();
    let uu: f64 = u.iter().map(|v| v * v).sum();
    Ok((0..n)
        .filter(|&j| j != k)
        .map(|j| (0..n).map(|i| (if i == j { 1.0 } else { 0.0 }) - 2.0 * u[i] * u[j] / uu).collect())
        .collect())
}

/// Curvatures of the level set `{F = F(x)}` with outward normal `∇F/|∇F|`:
/// `A_αβ = e_α·∇²F·e_β / |∇F|`.
pub fn level_set_data(grad: &[f64], hess: &[f64]) -> Result<HypersurfaceData> {
    let n = grad.len();
    let gn = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    let frame = tangent_frame(grad)?;
    let d = n - 1;
    let mut a = vec![0.0; d * d];
    for al in 0..d {
        for be in 0..d {
            let mut v = 0.0;
            for i in 0..n {
                for j in 0..n {
                    v += frame[al][i] * hess[i * n + j] * frame[be][j];
                }
            }
            a[al * d + be] = v / gn;
        }
    }
    HypersurfaceData::from_second_ff(a, d)
}

/// Curvatures of the graph of `f` in ℝ^{n+1}: `A_ij = f_ij/√(1+|∇f|²)`
/// taken in a `g`-orthonormal frame.
pub fn graph_hypersurface_data(grad: &[f64], hess: &[f64]) -> Result<HypersurfaceData> {
    let n = grad.len();
    let w: f64 = grad.iter().map(|v| v * v).sum();
    let root = (1.0 + w).sqrt();
    // g^{-1/2} = I + c ∇f∇fᵀ
    let c = if w > 0.0 { (1.0 / root - 1.0) / w } else { 0.0 };
    let s = |i: usize, j: usize| (if i == j { 1.0 } else { 0.0 }) + c * grad[i] * grad[j];
    let mut tmp = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            tmp[i * n + j] = (0..n).map(|k| s(i, k) * hess[k * n + j]).sum::<f64>() / root;
        }
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (0..n).map(|k| tmp[i * n + k] * s(k, j)).sum();
        }
    }
    HypersurfaceData::from_second_ff(a, n)
}

/// Eigenvalues of the second fundamental form of a radial graph:
/// `n−1` copies of `f_r/(r√(1+f_r²))` and one `f_rr/(1+f_r²)^{3/2}`.
pub fn radial_graph_eigenvalues(n: usize, fr: f64, frr: f64, r: f64) -> Vec<f64> {
    let q = 1.0 + fr * fr;
    let mut v = vec![fr / (r * q.sqrt()); n - 1];
    v.push(frr / q.powf(1.5));
    v
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGraphFormulas {
    pub l2: f64,
    /// `r^{n−4} f_r⁴/4`; its limit is `m₂`.
    pub mass_density: f64,
    /// `r^{n−4} f_r⁴ / (4(1+f_r²)²)`: the exact normalized GBC flux through
    /// `S_r`.
    pub flux: f64,
}

pub fn radial_graph_formulas(n: usize, slope: &Profile, r: f64) -> Result<RadialGraphFormulas> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial graph formulas need r > 0, got {r}")));
    }
    let d = profile_derivs(slope, r);
    let (fr, frr) = (d[0], d[1]);
    let q = 1.0 + fr * fr;
    let l2 = 24.0
        * (binom(n - 1, 4) * fr.powi(4) / (r.powi(4) * q * q)
            + binom(n - 1, 3) * fr.powi(3) * frr / (r.powi(3) * q * q * q));
    let rn = r.powi(n as i32 - 4);
    Ok(RadialGraphFormulas { l2, mass_density: rn * fr.powi(4) / 4.0, flux: rn * fr.powi(4) / (4.0 * q * q) })
}

/// A closed hypersurface star-shaped about `center`, given as a level set
/// `{F = 0}` with `F < 0` inside.
pub trait Hypersurface: Send + Sync {
    fn dim(&self) -> usize;
    fn center(&self) -> &[f64];
    /// `F`, `∇F`, `∇²F` at `x`.
    fn level(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>);
    /// Distance from the center to the surface along the unit vector `omega`.
    fn radius(&self, omega: &[f64]) -> Result<f64>;
    fn label(&self) -> String;

    fn point(&self, omega: &[f64]) -> Result<Vec<f64>> {
        let rho = self.radius(omega)?;
        Ok(self.center().iter().zip(omega).map(|(c, w)| c + rho * w).collect())
    }

    /// A point of the surface parametrized by `omega ∈ S^{n−1}` and the area
    /// element `dS/dω` there. The default is the radial parametrization,
    /// `dS = ρ^{n−1}/(ν·ω) dω`.
    fn surface_point(&self, omega: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.dim();
        let rho = self.radius(omega)?;
        let x: Vec<f64> = self.center().iter().zip(omega).map(|(c, w)| c + rho * w).collect();
        let (_, g, _) = self.level(&x);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos: f64 = g.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>() / gn;
        if !(cos > 0.0) {
            return Err(Error::Contract(format!("{}: surface is not star-shaped about its center", self.label())));
        }
        Ok((x, rho.powi(n as i32 - 1) / cos))
    }

    fn data(&self, x: &[f64]) -> Result<HypersurfaceData> {
        let (_, g, h) = self.level(x);
        level_set_data(&g, &h)
    }
}

/// Ellipsoid `Σ (x_i − c_i)²/a_i² = 1`; a sphere when all axes agree.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(axes: Vec<f64>) -> Result<Self> {
        if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Contract("ellipsoid axes must be positive".into()));
        }
        Ok(Self { center: vec![0.0; axes.len()], axes })
    }

    pub fn sphere(n: usize, rho: f64) -> Result<Self> {
        Self::new(vec![rho; n])
    }

    pub fn centered(mut self, center: Vec<f64>) -> Result<Self> {
        if center.len() != self.axes.len() {
            return Err(Error::Contract("center dimension mismatch".into()));
        }
        self.center = center;
        Ok(self)
    }
}

impl Hypersurface for Ellipsoid {
    fn dim(&self) -> usize {
        self.axes.len()
    }
    fn center(&self) -> &[f64] {
        &self.center
    }
    fn level(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut v = -0.5;
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            let y = x[i] - self.center[i];
            let a2 = self.axes[i] * self.axes[i];
            v += 0.5 * y * y / a2;
            g[i] = y / a2;
            h[i * n + i] = 1.0 / a2;
        }
        (v, g, h)
    }
    fn radius(&self, omega: &[f64]) -> Result<f64> {
        let s: f64 = omega.iter().zip(&self.axes).map(|(w, a)| w * w / (a * a)).sum();
        Ok(1.0 / s.sqrt())
    }
    fn label(&self) -> String {
        format!("ellipsoid{:?}", self.axes)
    }
    /// `x = c + a∘ω` with `dS = (Π a_i)|ω/a| dω`.
    fn surface_point(&self, omega: &[f64]) -> Result<(Vec<f64>, f64)> {
        let x = self.center.iter().zip(omega).zip(&self.axes).map(|((c, w), a)| c + a * w).collect();
        let det: f64 = self.axes.iter().product();
        let s: f64 = omega.iter().zip(&self.axes).map(|(w, a)| (w / a).powi(2)).sum();
        Ok((x, det * s.sqrt()))
    }
}

pub type LevelFunction = Arc<dyn Fn(&[f64]) -> (f64, Vec<f64>, Vec<f64>) + Send + Sync>;

/// A general star-shaped level set; the radial function is found by
/// bisection on `(0, r_max]`.
#[derive(Clone)]
pub struct LevelSet {
    pub center: Vec<f64>,
    pub func: LevelFunction,
    pub r_max: f64,
    pub name: String,
}

impl Hypersurface for LevelSet {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn center(&self) -> &[f64] {
        &self.center
    }
    fn level(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        (self.func)(x)
    }
    fn radius(&self, omega: &[f64]) -> Result<f64> {
        let at = |t: f64| {
            let x: Vec<f64> = self.center.iter().zip(omega).map(|(c, w)| c + t * w).collect();
            (self.func)(&x).0
        };
        if !(at(0.0) < 0.0 && at(self.r_max) > 0.0) {
            return Err(Error::Contract(format!("{}: level set does not bracket the center", self.name)));
        }
        let (mut lo, mut hi) = (0.0, self.r_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

/// Integrals of the boundary functionals over one closed hypersurface and
/// the quantities that enter the Penrose chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunctionals {
    pub area: f64,
    pub int_h1: f64,
    pub int_h2: f64,
    pub int_h3: f64,
    /// `∫ R` of the induced metric.
    pub int_r: f64,
    /// `c₂(n)∫ 3H₃ dS`.
    pub boundary: f64,
    /// `¼(∫R/((n−1)(n−2)ω))^{(n−4)/(n−3)}`.
    pub r_bound: f64,
    /// `¼(∫H₁/((n−1)ω))^{(n−4)/(n−2)}`.
    pub h_bound: f64,
    /// `¼(|Σ|/ω)^{(n−4)/(n−1)}`.
    pub area_bound: f64,
    pub convex: bool,
}

fn surface_sums<S: Hypersurface + ?Sized>(sigma: &S, rule: &SphereRule) -> Result<([f64; 5], bool)> {
    let n = sigma.dim();
    if rule.n != n {
        return Err(Error::Contract(format!("rule dimension {} does not match surface dimension {n}", rule.n)));
    }
    let parts: Vec<Result<([f64; 5], f64)>> = (0..rule.len())
        .into_par_iter()
        .map(|a| {
            let om = rule.node(a);
            let (x, jac) = sigma.surface_point(om)?;
            let (_, g, h) = sigma.level(&x);
            let d = level_set_data(&g, &h)?;
            let ds = rule.weights[a] * jac;
            Ok(([ds, d.h(1) * ds, d.h(2) * ds, d.h(3) * ds, d.induced_scalar * ds], d.eigenvalues[0]))
        })
        .collect();
    let mut sums = [0.0; 5];
    let mut min_eig = f64::INFINITY;
    for p in parts {
        let (v, e) = p?;
        for (s, x) in sums.iter_mut().zip(v) {
            *s += x;
        }
        min_eig = min_eig.min(e);
    }
    Ok((sums, min_eig >= -1e-12))
}

pub fn boundary_functionals<S: Hypersurface + ?Sized>(sigma: &S, rule: &SphereRule) -> Result<BoundaryFunctionals> {
    let n = sigma.dim();
    if n < 5 {
        return Err(Error::Contract(format!("boundary functionals need n ≥ 5, got {n}")));
    }
    let ([area, int_h1, int_h2, int_h3, int_r], convex) = surface_sums(sigma, rule)?;
    let (nf, w) = (n as f64, omega(n));
    Ok(BoundaryFunctionals {
        area,
        int_h1,
        int_h2,
        int_h3,
        int_r,
        boundary: c2(n) * 3.0 * int_h3,
        r_bound: 0.25 * (int_r / ((nf - 1.0) * (nf - 2.0) * w)).powf((nf - 4.0) / (nf - 3.0)),
        h_bound: 0.25 * (int_h1 / ((nf - 1.0) * w)).powf((nf - 4.0) / (nf - 2.0)),
        area_bound: 0.25 * (area / w).powf((nf - 4.0) / (nf - 1.0)),
        convex,
    })
}

/// `c₂(n)∫_Σ 3H₃ dS`.
pub fn horizon_boundary_term<S: Hypersurface + ?Sized>(sigma: &S, rule: &SphereRule) -> Result<f64> {
    Ok(boundary_functionals(sigma, rule)?.boundary)
}

/// Mass decomposition and Penrose chain of a graph with horizon.
///
/// `bounds[0..3]` are `bulk + Σ_i` of the `R`, `H₁` and area bounds of each
/// component and `bounds[3]` is `bulk` plus the area bound of the whole
/// horizon; `slack[0] = mass − bounds[0]` and `slack[j] = bounds[j−1] − bounds[j]`.
/// `af_chain` lists the boundary term and the three bounds summed over
/// components, without the bulk.
#[derive(Debug, Clone, PartialEq)]
pub struct PenroseReport {
    pub bulk: f64,
    /// False when no graph function was supplied and `bulk` is unset (zero).
    pub bulk_included: bool,
    pub boundary: f64,
    pub mass: f64,
    pub bounds: [f64; 4],
    pub slack: [f64; 4],
    pub af_chain: [f64; 4],
    pub af_slack: [f64; 3],
    pub convex: bool,
    pub per_component: Vec<BoundaryFunctionals>,
}

impl PenroseReport {
    /// Whether any slack is below `−tol` while the convexity hypothesis holds.
    pub fn violated(&self, tol: f64) -> bool {
        self.convex && self.slack.iter().chain(&self.af_slack).any(|s| *s < -tol)
    }
}

fn exterior_of<F, S>(f: &F, sigma: &S, integrand: impl Fn(&[f64]) -> Result<f64> + Sync, rule: &SphereRule, radial: &RadialRule) -> Result<f64>
where
    F: GraphFunction + ?Sized,
    S: Hypersurface + ?Sized,
{
    if sigma.center().iter().any(|c| *c != 0.0) {
        return Err(Error::Contract("bulk integrals need the horizon centered at the origin".into()));
    }
    if f.dim() != sigma.dim() {
        return Err(Error::Contract("graph and horizon dimensions differ".into()));
    }
    let lookup = |om: &[f64]| sigma.radius(om).unwrap_or(f64::NAN) * (1.0 + 1e-3);
    exterior_integral(integrand, lookup, rule, radial)
}

pub fn penrose_report(
    f: Option<&dyn GraphFunction>,
    components: &[&dyn Hypersurface],
    rule: &SphereRule,
    radial: &RadialRule,
) -> Result<PenroseReport> {
    let first = components.first().ok_or_else(|| Error::Contract("penrose report needs a horizon".into()))?;
    let n = first.dim();
    let per_component: Vec<BoundaryFunctionals> =
        components.iter().map(|s| boundary_functionals(*s, rule)).collect::<Result<_>>()?;
    let (bulk, bulk_included) = match f {
        Some(f) => {
            if components.len() != 1 {
                return Err(Error::Contract("bulk integral supports a single horizon component".into()));
            }
            check_l2_tail(f)?;
            let s = exterior_of(f, *first, |x| graph_l2(f, x), rule, radial)?;
            (0.5 * c2(n) * s, true)
        }
        None => (0.0, false),
    };
    let sum = |g: fn(&BoundaryFunctionals) -> f64| per_component.iter().map(g).sum::<f64>();
    let boundary = sum(|c| c.boundary);
    let (rb, hb, ab) = (sum(|c| c.r_bound), sum(|c| c.h_bound), sum(|c| c.area_bound));
    let nf = n as f64;
    let total = 0.25 * (sum(|c| c.area) / omega(n)).powf((nf - 4.0) / (nf - 1.0));
    let mass = bulk + boundary;
    let bounds = [bulk + rb, bulk + hb, bulk + ab, bulk + total];
    let slack = [mass - bounds[0], bounds[0] - bounds[1], bounds[1] - bounds[2], bounds[2] - bounds[3]];
    Ok(PenroseReport {
        bulk,
        bulk_included,
        boundary,
        mass,
        bounds,
        slack,
        af_chain: [boundary, rb, hb, ab],
        af_slack: [boundary - rb, rb - hb, hb - ab],
        convex: per_component.iter().all(|c| c.convex),
        per_component,
    })
}

/// The ADM form of the graph mass:
/// `(1/(2(n−1)ω))∫(R + αL₂)dV_δ + (1/(2(n−1)ω))∫_Σ(H₁ + 6αH₃)dS`.
#[derive(Debug, Clone, PartialEq)]
pub struct EgbPenroseReport {
    pub bulk: f64,
    pub bulk_included: bool,
    pub boundary: f64,
    pub mass: f64,
    /// `½(|Σ|/ω)^{(n−2)/(n−1)} + (α/2)(n−2)(n−3)(|Σ|/ω)^{(n−4)/(n−1)}`.
    pub bound: f64,
    pub slack: f64,
    pub per_component: Vec<BoundaryFunctionals>,
}

fn check_adm_decay<F: GraphFunction + ?Sized>(f: &F) -> Result<()> {
    let n = f.dim() as f64;
    if !(f.tau() > (n - 2.0) / 2.0) {
        return Err(Error::Contract(format!(
            "ADM graph mass needs decay order τ > {}, got {}",
            (n - 2.0) / 2.0,
            f.tau()
        )));
    }
    Ok(())
}

fn r_alpha_l2(grad: &[f64], hess: &[f64], alpha: f64) -> Result<f64> {
    let b = graph_bundle(grad, hess)?;
    Ok(b.scalar + if alpha != 0.0 { alpha * lovelock_l(&b, 2) } else { 0.0 })
}

pub fn egb_graph_penrose(
    f: Option<&dyn GraphFunction>,
    components: &[&dyn Hypersurface],
    alpha: f64,
    rule: &SphereRule,
    radial: &RadialRule,
) -> Result<EgbPenroseReport> {
    let first = components.first().ok_or_else(|| Error::Contract("penrose report needs a horizon".into()))?;
    let n = first.dim();
    let nf = n as f64;
    let norm = 1.0 / (2.0 * (nf - 1.0) * omega(n));
    let per_component: Vec<BoundaryFunctionals> =
        components.iter().map(|s| boundary_functionals(*s, rule)).collect::<Result<_>>()?;
    let (bulk, bulk_included) = match f {
        Some(f) => {
            check_adm_decay(f)?;
            if components.len() != 1 {
                return Err(Error::Contract("bulk integral supports a single horizon component".into()));
            }
            let s = exterior_of(
                f,
                *first,
                |x| {
                    let j = f.jet(x, 2)?;
                    r_alpha_l2(&j.grad, &j.hess, alpha)
                },
                rule,
                radial,
            )?;
            (norm * s, true)
        }
        None => (0.0, false),
    };
    let boundary: f64 = per_component.iter().map(|c| norm * (c.int_h1 + 6.0 * alpha * c.int_h3)).sum();
    let area: f64 = per_component.iter().map(|c| c.area).sum::<f64>() / omega(n);
    let bound = 0.5 * area.powf((nf - 2.0) / (nf - 1.0))
        + 0.5 * alpha * (nf - 2.0) * (nf - 3.0) * area.powf((nf - 4.0) / (nf - 1.0));
    let mass = bulk + boundary;
    Ok(EgbPenroseReport { bulk, bulk_included, boundary, mass, bound, slack: mass - bound, per_component })
}

/// `m_ADM` of a graph through the bulk identity, with the horizon term added
/// when a horizon is given.
pub fn adm_graph_mass(
    f: &dyn GraphFunction,
    alpha: f64,
    horizon: Option<&dyn Hypersurface>,
    rule: &SphereRule,
    radial: &RadialRule,
) -> Result<f64> {
    match horizon {
        Some(h) => Ok(egb_graph_penrose(Some(f), &[h], alpha, rule, radial)?.mass),
        None => {
            check_adm_decay(f)?;
            let n = f.dim();
            let norm = 1.0 / (2.0 * (n as f64 - 1.0) * omega(n));
            let r_in = f.inner_radius() * (1.0 + 1e-3);
            let s = exterior_integral(
                |x| {
                    let j = f.jet(x, 2)?;
                    r_alpha_l2(&j.grad, &j.hess, alpha)
                },
                |_| r_in,
                rule,
                radial,
            )?;
            Ok(norm * s)
        }
    }
}

/// ADM flux of the graph metric through `S_r` in the form
/// `(1/(2(n−1)ω))∫(f_ii f_j − f_ij f_i)ν_j/(1+|∇f|²) dS`.
pub fn graph_adm_flux<F: GraphFunction + ?Sized>(f: &F, r: f64, rule: &SphereRule) -> Result<f64> {
    let n = f.dim();
    let s = crate::quadrature::surface_integral(
        |x, nu| {
            let j = f.jet(x, 2)?;
            let w = 1.0 + j.grad.iter().map(|v| v * v).sum::<f64>();
            let lap: f64 = (0..n).map(|i| j.hess[i * n + i]).sum();
            let mut v = 0.0;
            for jj in 0..n {
                let hf: f64 = (0..n).map(|i| j.hess[i * n + jj] * j.grad[i]).sum();
                v += (lap * j.grad[jj] - hf) * nu[jj];
            }
            Ok(v / w)
        },
        r,
        rule,
    )?;
    Ok(s / (2.0 * (n as f64 - 1.0) * omega(n)))
}

/// The graph metric of `f` as a shared metric field.
pub fn metric_of(f: Arc<dyn GraphFunction>) -> Arc<dyn MetricField> {
    Arc::new(graph_metric(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::sphere_rule;

    #[test]
    fn elementary_symmetric_of_ones() {
        let e = elementary_symmetric(&[1.0; 4]);
        assert_eq!(e, vec![1.0, 4.0, 6.0, 4.0, 1.0]);
    }

    #[test]
    fn round_sphere_is_umbilic() {
        let s = Ellipsoid::sphere(5, 2.0).unwrap();
        let d = s.data(&[0.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(d.eigenvalues.iter().all(|l| (l - 0.5).abs() < 1e-14));
        assert!((d.h(3) - 4.0 / 8.0).abs() < 1e-14);
        assert!((d.induced_scalar - 2.0 * d.h(2)).abs() < 1e-14);
    }

    #[test]
    fn sphere_chain_coincides() {
        let rule = sphere_rule(5, 4).unwrap();
        let s = Ellipsoid::sphere(5, 3.0).unwrap();
        let b = boundary_functionals(&s, &rule).unwrap();
        for v in [b.boundary, b.r_bound, b.h_bound, b.area_bound] {
            assert!((v - 0.75).abs() < 1e-12, "{v}");
        }
        assert!(b.convex);
    }

    #[test]
    fn linear_graph_is_flat() {
        let f = LinearGraph { a: vec![0.3, -0.2, 0.1, 0.5, 0.0], b: 1.0 };
        let x = [0.4, 1.0, -2.0, 0.3, 0.7];
        assert!(graph_l2(&f, &x).unwrap().abs() < 1e-15);
        assert!(graph_divergence_identity_residual(&f, &x).unwrap() < 1e-14);
    }

    #[test]
    fn paraboloid_at_origin() {
        // f = |x|²/2: Rm is the unit-sphere tensor at the origin, L₂ = n(n−1)(n−2)(n−3).
        let f = KernelSum {
            n: 5,
            terms: vec![Kernel { center: vec![0.0; 5], coeff: -1000.0, shape: KernelShape::Gaussian { width: 1e3f64.sqrt() } }],
        };
        // −1000 exp(−|x|²/1000) = −1000 + |x|² − …; its Hessian at 0 is 2δ.
        let l2 = graph_l2(&f, &[0.0; 5]).unwrap();
        assert!((l2 - 120.0 * 16.0).abs() < 1e-9, "{l2}");
    }

    #[test]
    fn compact_kernel_derivatives() {
        let k = KernelShape::CompactPoly { radius: 2.0 };
        let s = 0.5;
        let h = 1e-5;
        let d = k.ds(s);
        for j in 0..4 {
            let fd = (k.ds(s + h)[j] - k.ds(s - h)[j]) / (2.0 * h);
            assert!((fd - d[j + 1]).abs() < 1e-6 * (1.0 + d[j + 1].abs()));
        }
        assert_eq!(k.ds(2.5), [0.0; 5]);
    }
}
