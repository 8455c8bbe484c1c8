//! Brute-force reference implementations for tests: permutation-sum
//! generalized deltas, finite-difference metric derivatives, the norm form of
//! `L₂` from a separately coded Riemann tensor, and curvature integrals of
//! parametrized hypersurfaces.
//!
//! Nothing here calls the contraction, curvature or quadrature code of
//! `lovelock-mass`; only the metric trait and error type are shared.

use lovelock_mass::metrics::MetricField;
use lovelock_mass::{Error, Result};
use nalgebra::DMatrix;
use num_dual::{DualNum, HyperHyperDual64};
use std::f64::consts::PI;

/// `δ^{i₁…i_r}_{j₁…j_r} = Σ_σ sign(σ) Π_a δ^{i_a}_{j_σ(a)}`, summed over all
/// `r!` permutations. Refuses `r > 5`.
pub fn brute_delta(upper: &[usize], lower: &[usize]) -> Result<i32> {
    let r = upper.len();
    if lower.len() != r {
        return Err(Error::Contract("upper and lower rows differ in length".into()));
    }
    if r > 5 {
        return Err(Error::Contract(format!("brute_delta refuses r = {r} > 5")));
    }
    let mut perm: Vec<usize> = (0..r).collect();
    let mut total = 0;
    loop {
        if (0..r).all(|a| upper[a] == lower[perm[a]]) {
            total += inversion_sign(&perm);
        }
        if !next_permutation(&mut perm) {
            return Ok(total);
        }
    }
}

fn inversion_sign(p: &[usize]) -> i32 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Step sizes for central differences, each scaled by `max(1, |x|)`.
///
/// Nested central differences have truncation error `O(h²)` at every order;
/// with `richardson` the steps `h` and `h/2` are combined to `O(h⁴)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { h1: 1e-5, h2: 1e-4, h3: 2e-3, richardson: true }
    }
}

/// Finite-difference `∂g`, `∂²g`, `∂³g` in the `MetricJet` layouts, using only
/// metric values.
pub type FdDerivatives = (Vec<f64>, Vec<f64>, Vec<f64>);

pub fn fd_metric_derivatives<M: MetricField + ?Sized>(g: &M, x: &[f64], cfg: &FdConfig) -> Result<FdDerivatives> {
    let n = g.dim();
    let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    for h in [cfg.h1, cfg.h2, cfg.h3] {
        if !(h > 0.0) || h * scale < 1e-12 * scale.max(1.0) {
            return Err(Error::Numeric(format!("finite-difference step {h} underflows")));
        }
    }
    let value = |y: &[f64]| -> Result<Vec<f64>> { Ok(g.jet(y, 0)?.g) };
    // D_{d1} … D_{dk} g with central steps of size h in each direction.
    let nested = |dirs: &[usize], h: f64| -> Result<Vec<f64>> {
        let k = dirs.len();
        let mut acc = vec![0.0; n * n];
        for mask in 0..(1usize << k) {
            let mut y = x.to_vec();
            let mut sign = 1.0;
            for (b, &d) in dirs.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    y[d] += h;
                } else {
                    y[d] -= h;
                    sign = -sign;
                }
            }
            let v = value(&y)?;
            for (a, vi) in acc.iter_mut().zip(v) {
                *a += sign * vi;
            }
        }
        let denom = (2.0 * h).powi(k as i32);
        Ok(acc.into_iter().map(|v| v / denom).collect())
    };
    let estimate = |dirs: &[usize], h: f64| -> Result<Vec<f64>> {
        let h = h * scale;
        let a = nested(dirs, h)?;
        if !cfg.richardson {
            return Ok(a);
        }
        let b = nested(dirs, 0.5 * h)?;
        Ok(a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
    };
    let n2 = n * n;
    let mut dg = vec![0.0; n * n2];
    for k in 0..n {
        let v = estimate(&[k], cfg.h1)?;
        dg[k * n2..(k + 1) * n2].copy_from_slice(&v);
    }
    let mut d2g = vec![0.0; n2 * n2];
    for k in 0..n {
        for l in k..n {
            let v = estimate(&[k, l], cfg.h2)?;
            for (k1, l1) in [(k, l), (l, k)] {
                d2g[(k1 * n + l1) * n2..(k1 * n + l1 + 1) * n2].copy_from_slice(&v);
            }
        }
    }
    let mut d3g = vec![0.0; n * n * n * n2];
    for k in 0..n {
        for l in k..n {
            for m in l..n {
                let v = estimate(&[k, l, m], cfg.h3)?;
                for (a, b, c) in [(k, l, m), (k, m, l), (l, k, m), (l, m, k), (m, k, l), (m, l, k)] {
                    let off = ((a * n + b) * n + c) * n2;
                    d3g[off..off + n2].copy_from_slice(&v);
                }
            }
        }
    }
    Ok((dg, d2g, d3g))
}

fn inverse(m: &[f64], n: usize) -> Result<Vec<f64>> {
    let inv = DMatrix::from_row_slice(n, n, m)
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular metric".into()))?;
    Ok((0..n * n).map(|a| inv[(a / n, a % n)]).collect())
}

/// `R_abcd = ½(g_ad,bc + g_bc,ad − g_ac,bd − g_bd,ac) + g_pq(Γ^p_bc Γ^q_ad − Γ^p_bd Γ^q_ac)`.
///
/// Layouts follow `MetricJet`: `dg[k][i][j] = ∂_k g_ij`,
/// `d2g[k][l][i][j] = ∂_k∂_l g_ij`.
pub fn riemann_lower(n: usize, g: &[f64], dg: &[f64], d2g: &[f64]) -> Result<Vec<f64>> {
    let ginv = inverse(g, n)?;
    let n2 = n * n;
    let dgf = |k: usize, i: usize, j: usize| dg[k * n2 + i * n + j];
    let d2 = |k: usize, l: usize, i: usize, j: usize| d2g[(k * n + l) * n2 + i * n + j];
    let mut gam = vec![0.0; n * n2];
    for p in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for s in 0..n {
                    v += 0.5 * ginv[p * n + s] * (dgf(i, s, j) + dgf(j, s, i) - dgf(s, i, j));
                }
                gam[p * n2 + i * n + j] = v;
            }
        }
    }
    let gm = |p: usize, i: usize, j: usize| gam[p * n2 + i * n + j];
    let mut r = vec![0.0; n2 * n2];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = 0.5 * (d2(b, c, a, d) + d2(a, d, b, c) - d2(b, d, a, c) - d2(a, c, b, d));
                    for p in 0..n {
                        for q in 0..n {
                            v += g[p * n + q] * (gm(p, b, c) * gm(q, a, d) - gm(p, b, d) * gm(q, a, c));
                        }
                    }
                    r[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    Ok(r)
}

/// `(|Rm|², |Ric|², R)` of a lower-index Riemann tensor.
pub fn curvature_norms(n: usize, g: &[f64], rm: &[f64]) -> Result<(f64, f64, f64)> {
    let gi = inverse(g, n)?;
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    let mut ric = vec![0.0; n * n];
    for a in 0..n {
        for c in 0..n {
            let mut v = 0.0;
            for b in 0..n {
                for d in 0..n {
                    v += gi[b * n + d] * rm[idx(a, b, c, d)];
                }
            }
            ric[a * n + c] = v;
        }
    }
    let scalar: f64 = (0..n * n).map(|a| gi[a] * ric[a]).sum();
    // raise all indices of Rm one pair at a time
    let mut up = rm.to_vec();
    for slot in 0..4 {
        let mut next = vec![0.0; up.len()];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut v = 0.0;
                        for s in 0..n {
                            let (src, gsi) = match slot {
                                0 => (idx(s, b, c, d), gi[a * n + s]),
                                1 => (idx(a, s, c, d), gi[b * n + s]),
                                2 => (idx(a, b, s, d), gi[c * n + s]),
                                _ => (idx(a, b, c, s), gi[d * n + s]),
                            };
                            v += gsi * up[src];
                        }
                        next[idx(a, b, c, d)] = v;
                    }
                }
            }
        }
        up = next;
    }
    let rm2: f64 = rm.iter().zip(&up).map(|(a, b)| a * b).sum();
    let mut ric2 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    ric2 += gi[a * n + c] * gi[b * n + d] * ric[a * n + b] * ric[c * n + d];
                }
            }
        }
    }
    Ok((rm2, ric2, scalar))
}

/// `½((tr A)² − |A|²)` for the Schouten tensor `A = (Ric − R g/(2(n−1)))/(n−2)`,
/// with traces taken against `g`.
pub fn schouten_sigma2(n: usize, g: &[f64], rm: &[f64]) -> Result<f64> {
    let gi = inverse(g, n)?;
    let mut ric = vec![0.0; n * n];
    for a in 0..n {
        for c in 0..n {
            for b in 0..n {
                for d in 0..n {
                    ric[a * n + c] += gi[b * n + d] * rm[((a * n + b) * n + c) * n + d];
                }
            }
        }
    }
    let r: f64 = (0..n * n).map(|t| gi[t] * ric[t]).sum();
    let nf = n as f64;
    let a: Vec<f64> = (0..n * n).map(|t| (ric[t] - r * g[t] / (2.0 * (nf - 1.0))) / (nf - 2.0)).collect();
    // mixed A^i_j = g^{ik} A_kj
    let mut am = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            am[i * n + j] = (0..n).map(|k| gi[i * n + k] * a[k * n + j]).sum();
        }
    }
    let tr: f64 = (0..n).map(|i| am[i * n + i]).sum();
    let mut sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            sq += am[i * n + j] * am[j * n + i];
        }
    }
    Ok(0.5 * (tr * tr - sq))
}

/// `L₂ = |Rm|² − 4|Ric|² + R²` from the analytic metric jet at `x`.
pub fn direct_l2<M: MetricField + ?Sized>(g: &M, x: &[f64]) -> Result<f64> {
    let j = g.jet(x, 2)?;
    let rm = riemann_lower(j.n, &j.g, &j.dg, &j.d2g)?;
    let (a, b, c) = curvature_norms(j.n, &j.g, &rm)?;
    Ok(a - 4.0 * b + c * c)
}

/// An embedding `S^{n−1} → ℝⁿ` in hyperspherical angles
/// `(θ_1, …, θ_{n−2}, φ)`.
pub trait Embedding: Sync {
    fn dim(&self) -> usize;
    fn center(&self) -> Vec<f64>;
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, angles: &[D]) -> Vec<D>;
}

/// Unit vector on `S^{n−1}` from hyperspherical angles.
pub fn hyperspherical<D: DualNum<Primitive = f64> + Copy>(angles: &[D]) -> Vec<D> {
    let n = angles.len() + 1;
    let mut out = Vec::with_capacity(n);
    let mut sprod = D::one();
    for a in &angles[..n - 2] {
        out.push(sprod * a.cos());
        sprod *= a.sin();
    }
    let phi = angles[n - 2];
    out.push(sprod * phi.cos());
    out.push(sprod * phi.sin());
    out
}

/// Ellipsoid `x = c + a∘ω(θ)`.
#[derive(Debug, Clone)]
pub struct EllipsoidEmbedding {
    pub axes: Vec<f64>,
    pub center: Vec<f64>,
}

impl EllipsoidEmbedding {
    pub fn new(axes: Vec<f64>) -> Self {
        let center = vec![0.0; axes.len()];
        Self { axes, center }
    }
}

impl Embedding for EllipsoidEmbedding {
    fn dim(&self) -> usize {
        self.axes.len()
    }
    fn center(&self) -> Vec<f64> {
        self.center.clone()
    }
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, angles: &[D]) -> Vec<D> {
        hyperspherical(angles)
            .into_iter()
            .zip(self.axes.iter().zip(&self.center))
            .map(|(w, (a, c))| w * *a + *c)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Area,
    H1,
    H2,
    H3,
    /// Scalar curvature of the induced metric, computed intrinsically.
    InducedR,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurfaceIntegrals {
    pub area: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub induced_r: f64,
}

impl SurfaceIntegrals {
    pub fn get(&self, f: Functional) -> f64 {
        match f {
            Functional::Area => self.area,
            Functional::H1 => self.h1,
            Functional::H2 => self.h2,
            Functional::H3 => self.h3,
            Functional::InducedR => self.induced_r,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_N`.
pub fn gauss_legendre(npts: usize) -> Vec<(f64, f64)> {
    let nf = npts as f64;
    (0..npts)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=npts {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if npts == 0 { 1.0 } else { p1 };
                dp = nf * (x * p - p0) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Jet of the embedding at one parameter point: `X`, `X_a`, `X_ab`, `X_abc`.
struct EmbeddingJet {
    x: Vec<f64>,
    d1: Vec<Vec<f64>>,
    d2: Vec<Vec<Vec<f64>>>,
    d3: Option<Vec<Vec<Vec<Vec<f64>>>>>,
}

fn embedding_jet<E: Embedding>(emb: &E, th: &[f64], third: bool) -> EmbeddingJet {
    let d = th.len();
    let n = emb.dim();
    let seed = |a: usize, b: usize, c: usize| {
        let v: Vec<HyperHyperDual64> = (0..d)
            .map(|i| {
                let mut h = HyperHyperDual64::from_re(th[i]);
                if i == a {
                    h = h.derivative1();
                }
                if i == b {
                    h = h.derivative2();
                }
                if i == c {
                    h = h.derivative3();
                }
                h
            })
            .collect();
        emb.eval(&v)
    };
    let mut d1 = vec![vec![0.0; n]; d];
    let mut d2 = vec![vec![vec![0.0; n]; d]; d];
    let mut d3 = third.then(|| vec![vec![vec![vec![0.0; n]; d]; d]; d]);
    let mut x = vec![0.0; n];
    for a in 0..d {
        for b in a..d {
            if third {
                for c in b..d {
                    let v = seed(a, b, c);
                    for (i, vi) in v.iter().enumerate() {
                        x[i] = vi.re;
                        d1[a][i] = vi.eps1;
                        d1[b][i] = vi.eps2;
                        d1[c][i] = vi.eps3;
                        d2[a][b][i] = vi.eps1eps2;
                        d2[b][a][i] = vi.eps1eps2;
                        if let Some(t) = d3.as_mut() {
                            for (p, q, r) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                                t[p][q][r][i] = vi.eps1eps2eps3;
                            }
                        }
                    }
                }
            } else {
                let v = seed(a, b, usize::MAX);
                for (i, vi) in v.iter().enumerate() {
                    x[i] = vi.re;
                    d1[a][i] = vi.eps1;
                    d1[b][i] = vi.eps2;
                    d2[a][b][i] = vi.eps1eps2;
                    d2[b][a][i] = vi.eps1eps2;
                }
            }
        }
    }
    EmbeddingJet { x, d1, d2, d3 }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(√det h, H₁, H₂, H₃, R_h)` at one parameter point; `R_h` is zero unless
/// `intrinsic`.
pub fn point_curvatures<E: Embedding>(emb: &E, th: &[f64], intrinsic: bool) -> Result<[f64; 5]> {
    let n = emb.dim();
    let d = n - 1;
    let j = embedding_jet(emb, th, intrinsic);
    let mut h = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            h[a * d + b] = dot(&j.d1[a], &j.d1[b]);
        }
    }
    let det_h = DMatrix::from_row_slice(d, d, &h).determinant();
    if !(det_h > 0.0) {
        return Err(Error::Numeric(format!("degenerate embedding at {th:?}")));
    }
    // normal: cofactors of the tangent vectors
    let mut nu = vec![0.0; n];
    for (i, nui) in nu.iter_mut().enumerate() {
        let mut m = DMatrix::zeros(n, n);
        for a in 0..d {
            for k in 0..n {
                m[(a, k)] = j.d1[a][k];
            }
        }
        m[(d, i)] = 1.0;
        *nui = m.determinant();
    }
    let norm = dot(&nu, &nu).sqrt();
    let c = emb.center();
    let out: Vec<f64> = j.x.iter().zip(&c).map(|(a, b)| a - b).collect();
    let s = if dot(&nu, &out) < 0.0 { -1.0 / norm } else { 1.0 / norm };
    nu.iter_mut().for_each(|v| *v *= s);
    let mut bmat = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            bmat[a * d + b] = -dot(&j.d2[a][b], &nu);
        }
    }
    let hinv = inverse(&h, d)?;
    let mut shape = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            shape[(a, b)] = (0..d).map(|c| hinv[a * d + c] * bmat[c * d + b]).sum::<f64>();
        }
    }
    let s2 = &shape * &shape;
    let s3 = &s2 * &shape;
    let (p1, p2, p3) = (shape.trace(), s2.trace(), s3.trace());
    let e1 = p1;
    let e2 = 0.5 * (p1 * p1 - p2);
    let e3 = (p1 * p1 * p1 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0;
    let mut r = 0.0;
    if let Some(t) = &j.d3 {
        let mut dh = vec![0.0; d * d * d];
        let mut d2h = vec![0.0; d * d * d * d];
        for k in 0..d {
            for a in 0..d {
                for b in 0..d {
                    dh[k * d * d + a * d + b] = dot(&j.d2[a][k], &j.d1[b]) + dot(&j.d1[a], &j.d2[b][k]);
                    for l in 0..d {
                        d2h[((k * d + l) * d + a) * d + b] = dot(&t[a][k][l], &j.d1[b])
                            + dot(&j.d2[a][k], &j.d2[b][l])
                            + dot(&j.d2[a][l], &j.d2[b][k])
                            + dot(&j.d1[a], &t[b][k][l]);
                    }
                }
            }
        }
        let rm = riemann_lower(d, &h, &dh, &d2h)?;
        r = curvature_norms(d, &h, &rm)?.2;
    }
    Ok([det_h.sqrt(), e1, e2, e3, r])
}

/// Integrals of area, `H₁`, `H₂`, `H₃` and (when `intrinsic`) the induced
/// scalar curvature, with `npts` Gauss-Legendre points per polar angle and
/// `2·npts` midpoints in the azimuth.
pub fn surface_integrals<E: Embedding>(emb: &E, npts: usize, intrinsic: bool) -> Result<SurfaceIntegrals> {
    let n = emb.dim();
    if n < 3 {
        return Err(Error::Contract("embedding dimension must be at least 3".into()));
    }
    let gl = gauss_legendre(npts);
    let polar: Vec<(f64, f64)> = gl.iter().map(|&(x, w)| (0.5 * PI * (x + 1.0), 0.5 * PI * w)).collect();
    let naz = 2 * npts;
    let az: Vec<(f64, f64)> =
        (0..naz).map(|j| (2.0 * PI * (j as f64 + 0.5) / naz as f64, 2.0 * PI / naz as f64)).collect();
    let mut total = [0.0; 5];
    let mut idx = vec![0usize; n - 2];
    let mut th = vec![0.0; n - 1];
    loop {
        let mut w = 1.0;
        for (a, &i) in idx.iter().enumerate() {
            th[a] = polar[i].0;
            w *= polar[i].1;
        }
        for &(phi, wp) in &az {
            th[n - 2] = phi;
            let v = point_curvatures(emb, &th, intrinsic)?;
            let dsw = v[0] * w * wp;
            total[0] += dsw;
            for k in 1..5 {
                total[k] += v[k] * dsw;
            }
        }
        let mut p = 0;
        loop {
            if p == idx.len() {
                return Ok(SurfaceIntegrals {
                    area: total[0],
                    h1: total[1],
                    h2: total[2],
                    h3: total[3],
                    induced_r: total[4],
                });
            }
            idx[p] += 1;
            if idx[p] < npts {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// One boundary functional of a parametrized hypersurface.
pub fn parametric_surface_integrals<E: Embedding>(emb: &E, functional: Functional, npts: usize) -> Result<f64> {
    Ok(surface_integrals(emb, npts, functional == Functional::InducedR)?.get(functional))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_signs() {
        assert_eq!(brute_delta(&[1, 2, 3], &[2, 3, 1]).unwrap(), 1);
        assert_eq!(brute_delta(&[1, 2, 3], &[1, 3, 2]).unwrap(), -1);
        assert!(brute_delta(&[0; 6], &[0; 6]).is_err());
    }

    #[test]
    fn legendre_rule() {
        let r = gauss_legendre(10);
        let s: f64 = r.iter().map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }
}
