//! Pointwise curvature: Christoffel symbols, Riemann, Ricci, Weyl, the
//! Lovelock scalars `L_k`, tensors `E^(k)` and `P_(k)`.
//!
//! Conventions:
//! `Γ^k_ij = ½g^{ks}(g_si,j + g_sj,i − g_ij,s)`,
//! `R_ijk^m = ∂_iΓ^m_jk − ∂_jΓ^m_ik + Γ^m_is Γ^s_jk − Γ^m_js Γ^s_ik`,
//! `R_ijkl = R_ijl^m g_mk`, `R_ik = g^{jl} R_ijkl`. The round sphere has
//! `R_ijkl = g_ik g_jl − g_il g_jk`.
//!
//! Everything is generic over [`Scalar`], so plain `f64` and first-order dual
//! numbers share one code path; the duals carry directional derivatives.

use crate::error::{Error, Result};
use crate::metrics::{MetricField, MetricJet};
use crate::multiindex::{increasing_subsets, ContractionPattern};
use num_dual::{Dual64, DualNum};

pub trait Scalar: DualNum<Primitive = f64> + Copy + Send + Sync {}
impl<T: DualNum<Primitive = f64> + Copy + Send + Sync> Scalar for T {}

#[inline]
fn c<T: Scalar>(v: f64) -> T {
    T::from(v)
}

/// Inverse of a symmetric positive-definite matrix by Gauss-Jordan with
/// partial pivoting on the real part.
pub fn invert<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut m = a.to_vec();
    let mut inv = vec![c::<T>(0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = c(1.0);
    }
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].re().abs() > m[piv * n + col].re().abs() {
                piv = r;
            }
        }
        let p = m[piv * n + col];
        if p.re().abs() < 1e-300 || !p.re().is_finite() {
            return Err(Error::Numeric("singular metric".into()));
        }
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let pinv = p.recip();
        for j in 0..n {
            m[col * n + j] *= pinv;
            inv[col * n + j] *= pinv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            for j in 0..n {
                let (mc, ic) = (m[col * n + j], inv[col * n + j]);
                m[r * n + j] -= f * mc;
                inv[r * n + j] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// A rank-4 contravariant tensor with the symmetries of the curvature tensor.
#[derive(Debug, Clone)]
pub struct Rank4Field<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Rank4Field<T> {
    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    /// Largest violation of `P^{ijkl} = −P^{jikl} = −P^{ijlk} = P^{klij}` and
    /// of the first Bianchi identity.
    pub fn symmetry_residual(&self) -> f64 {
        riemann_symmetry_residual(&self.data, self.n)
    }
}

/// Largest violation of the curvature-tensor symmetries and of the first
/// Bianchi identity for an `n⁴` array.
pub fn riemann_symmetry_residual<T: Scalar>(r: &[T], n: usize) -> f64 {
    let at = |i: usize, j: usize, k: usize, l: usize| r[((i * n + j) * n + k) * n + l].re();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = at(i, j, k, l);
                    worst = worst
                        .max((v + at(j, i, k, l)).abs())
                        .max((v + at(i, j, l, k)).abs())
                        .max((v - at(k, l, i, j)).abs())
                        .max((v + at(j, k, i, l) + at(k, i, j, l)).abs());
                }
            }
        }
    }
    worst
}

/// All pointwise curvature quantities at one point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle<T> {
    pub n: usize,
    pub g: Vec<T>,
    pub ginv: Vec<T>,
    /// `Γ^k_ij` at `[k][i][j]`.
    pub gamma: Vec<T>,
    /// `∂_l Γ^k_ij` at `[l][k][i][j]`.
    pub dgamma: Vec<T>,
    /// `R_ijkl`.
    pub riemann_lo: Vec<T>,
    /// `R^ijkl`.
    pub riemann_hi: Vec<T>,
    /// `R_ij^kl`.
    pub riemann_mixed: Vec<T>,
    pub ricci: Vec<T>,
    /// `R^ij`.
    pub ricci_hi: Vec<T>,
    pub scalar: T,
}

impl<T: Scalar> CurvatureBundle<T> {
    /// Builds the bundle from `g`, `∂g`, `∂²g` in the [`MetricJet`] layout.
    pub fn from_parts(n: usize, g: &[T], dg: &[T], d2g: &[T]) -> Result<Self> {
        let zero = c::<T>(0.0);
        let ginv = invert(g, n)?;
        let (n2, n3) = (n * n, n * n * n);
        // first kind Γ_{s,ij}
        let mut gam1 = vec![zero; n3];
        for s in 0..n {
            for i in 0..n {
                for j in 0..n {
                    gam1[(s * n + i) * n + j] =
                        (dg[j * n2 + s * n + i] + dg[i * n2 + s * n + j] - dg[s * n2 + i * n + j]) * 0.5;
                }
            }
        }
        let mut gamma = vec![zero; n3];
        for k in 0..n {
            for s in 0..n {
                let gks = ginv[k * n + s];
                for ij in 0..n2 {
                    gamma[k * n2 + ij] += gks * gam1[s * n2 + ij];
                }
            }
        }
        // ∂_l Γ^k_ij = g^{ks}(∂_l Γ_{s,ij} − ∂_l g_{sm} Γ^m_ij)
        let mut dgamma = vec![zero; n.pow(4)];
        let mut inner = vec![zero; n3];
        for l in 0..n {
            for s in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let d1 = (d2g[(l * n + j) * n2 + s * n + i] + d2g[(l * n + i) * n2 + s * n + j]
                            - d2g[(l * n + s) * n2 + i * n + j])
                            * 0.5;
                        let mut acc = d1;
                        for m in 0..n {
                            acc -= dg[l * n2 + s * n + m] * gamma[m * n2 + i * n + j];
                        }
                        inner[(s * n + i) * n + j] = acc;
                    }
                }
            }
            for k in 0..n {
                for s in 0..n {
                    let gks = ginv[k * n + s];
                    for ij in 0..n2 {
                        dgamma[l * n3 + k * n2 + ij] += gks * inner[s * n2 + ij];
                    }
                }
            }
        }
        // R_ijk^m at [i][j][k][m]
        let mut r13 = vec![zero; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut v = dgamma[i * n3 + m * n2 + j * n + k] - dgamma[j * n3 + m * n2 + i * n + k];
                        for s in 0..n {
                            v += gamma[m * n2 + i * n + s] * gamma[s * n2 + j * n + k]
                                - gamma[m * n2 + j * n + s] * gamma[s * n2 + i * n + k];
                        }
                        r13[((i * n + j) * n + k) * n + m] = v;
                    }
                }
            }
        }
        // R_ijkl = R_ijl^m g_mk
        let mut lo = vec![zero; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let base = ((i * n + j) * n + l) * n;
                    for k in 0..n {
                        let mut v = zero;
                        for m in 0..n {
                            v += r13[base + m] * g[m * n + k];
                        }
                        lo[((i * n + j) * n + k) * n + l] = v;
                    }
                }
            }
        }
        Ok(Self::finish(n, g.to_vec(), ginv, gamma, dgamma, lo))
    }

    /// Bundle of an algebraic curvature tensor `R_ijkl` on `(ℝⁿ, g)` at a
    /// point; Christoffel data are left empty.
    pub fn from_algebraic(n: usize, g: &[T], riemann_lo: Vec<T>) -> Result<Self> {
        let ginv = invert(g, n)?;
        Ok(Self::finish(n, g.to_vec(), ginv, Vec::new(), Vec::new(), riemann_lo))
    }

    fn finish(n: usize, g: Vec<T>, ginv: Vec<T>, gamma: Vec<T>, dgamma: Vec<T>, lo: Vec<T>) -> Self {
        let zero = c::<T>(0.0);
        let n2 = n * n;
        let mixed = raise_last_pair(&lo, &ginv, n);
        let hi = raise_first_pair(&mixed, &ginv, n);
        let mut ricci = vec![zero; n2];
        for i in 0..n {
            for k in 0..n {
                let mut v = zero;
                for j in 0..n {
                    for l in 0..n {
                        v += ginv[j * n + l] * lo[((i * n + j) * n + k) * n + l];
                    }
                }
                ricci[i * n + k] = v;
            }
        }
        let mut scalar = zero;
        for ik in 0..n2 {
            scalar += ginv[ik] * ricci[ik];
        }
        let ricci_hi = raise_pair(&ricci, &ginv, n);
        Self {
            n,
            g,
            ginv,
            gamma,
            dgamma,
            riemann_lo: lo,
            riemann_hi: hi,
            riemann_mixed: mixed,
            ricci,
            ricci_hi,
            scalar,
        }
    }

    #[inline]
    pub fn rm(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        let n = self.n;
        self.riemann_lo[((i * n + j) * n + k) * n + l]
    }
}

impl CurvatureBundle<f64> {
    pub fn from_jet(j: &MetricJet) -> Result<Self> {
        Self::from_parts(j.n, &j.g, &j.dg, &j.d2g)
    }
}

/// Curvature of `metric` at `x`.
pub fn riemann<M: MetricField + ?Sized>(metric: &M, x: &[f64]) -> Result<CurvatureBundle<f64>> {
    CurvatureBundle::from_jet(&metric.jet(x, 2)?)
}

/// Christoffel symbols `Γ^k_ij` at `[k][i][j]`.
pub fn christoffel<M: MetricField + ?Sized>(metric: &M, x: &[f64]) -> Result<Vec<f64>> {
    Ok(riemann(metric, x)?.gamma)
}

/// `T_ab^{kl} = T_abij g^{ik} g^{jl}`.
fn raise_last_pair<T: Scalar>(t: &[T], ginv: &[T], n: usize) -> Vec<T> {
    let zero = c::<T>(0.0);
    let n2 = n * n;
    let mut mid = vec![zero; n.pow(4)];
    for ab in 0..n2 {
        for i in 0..n {
            for l in 0..n {
                let mut v = zero;
                for j in 0..n {
                    v += t[ab * n2 + i * n + j] * ginv[j * n + l];
                }
                mid[ab * n2 + i * n + l] = v;
            }
        }
    }
    let mut out = vec![zero; n.pow(4)];
    for ab in 0..n2 {
        for k in 0..n {
            for l in 0..n {
                let mut v = zero;
                for i in 0..n {
                    v += ginv[i * n + k] * mid[ab * n2 + i * n + l];
                }
                out[ab * n2 + k * n + l] = v;
            }
        }
    }
    out
}

/// `T^{ab}{}_{kl} = g^{ai} g^{bj} T_ij..`, raising the first two slots.
fn raise_first_pair<T: Scalar>(t: &[T], ginv: &[T], n: usize) -> Vec<T> {
    let zero = c::<T>(0.0);
    let n2 = n * n;
    let mut mid = vec![zero; n.pow(4)];
    for i in 0..n {
        for b in 0..n {
            for kl in 0..n2 {
                let mut v = zero;
                for j in 0..n {
                    v += ginv[b * n + j] * t[(i * n + j) * n2 + kl];
                }
                mid[(i * n + b) * n2 + kl] = v;
            }
        }
    }
    let mut out = vec![zero; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            for kl in 0..n2 {
                let mut v = zero;
                for i in 0..n {
                    v += ginv[a * n + i] * mid[(i * n + b) * n2 + kl];
                }
                out[(a * n + b) * n2 + kl] = v;
            }
        }
    }
    out
}

fn raise_pair<T: Scalar>(t: &[T], ginv: &[T], n: usize) -> Vec<T> {
    let zero = c::<T>(0.0);
    let mut out = vec![zero; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut v = zero;
            for i in 0..n {
                for j in 0..n {
                    v += ginv[a * n + i] * ginv[b * n + j] * t[i * n + j];
                }
            }
            out[a * n + b] = v;
        }
    }
    out
}

/// Antisymmetrized contraction of `q` mixed Riemann factors `R_ij^kl` against
/// the generalized delta with `e` free upper and `e` free lower slots.
///
/// Output length is `n^{2e}`: a scalar, `[u][l]`, or `[s][t][a][b]`. With
/// `e = 2` only `s < t` is accumulated and the rest is filled by
/// antisymmetry.
pub fn delta_contract<T: Scalar>(mixed: &[T], n: usize, pat: &ContractionPattern) -> Vec<T> {
    let zero = c::<T>(0.0);
    let e = pat.e;
    let mut out = vec![zero; n.pow(2 * e as u32)];
    let size = pat.size();
    if size > n {
        return out;
    }
    let n2 = n * n;
    let m2 = size * size;
    // table[pu·m² + pl] = R_{subset[u1] subset[u2]}^{subset[l1] subset[l2]}
    let mut table = vec![zero; m2 * m2];
    for subset in increasing_subsets(n, size) {
        for u1 in 0..size {
            for u2 in 0..size {
                let row = (subset[u1] * n + subset[u2]) * n2;
                for l1 in 0..size {
                    for l2 in 0..size {
                        table[(u1 * size + u2) * m2 + l1 * size + l2] = mixed[row + subset[l1] * n + subset[l2]];
                    }
                }
            }
        }
        for ((up, us), upairs) in pat.upper.iter().zip(&pat.upper_pairs) {
            let fu = match e {
                0 => 0,
                1 => subset[up[0]],
                _ => subset[up[0]] * n + subset[up[1]],
            };
            for ((lp, ls), lpairs) in pat.lower.iter().zip(&pat.lower_pairs) {
                let mut prod = c::<T>((*us * *ls) as f64);
                for (pu, pl) in upairs.iter().zip(lpairs) {
                    prod *= table[pu * m2 + pl];
                }
                let slot = match e {
                    0 => 0,
                    1 => fu * n + subset[lp[0]],
                    _ => fu * n2 + subset[lp[0]] * n + subset[lp[1]],
                };
                out[slot] += prod;
            }
        }
    }
    let w = pat.weight();
    for v in out.iter_mut() {
        *v *= w;
    }
    if e == 2 {
        for s in 0..n {
            for t in (s + 1)..n {
                for a in 0..n {
                    for b in (a + 1)..n {
                        let v = out[((s * n + t) * n + a) * n + b];
                        out[((t * n + s) * n + a) * n + b] = -v;
                        out[((s * n + t) * n + b) * n + a] = -v;
                        out[((t * n + s) * n + b) * n + a] = v;
                    }
                }
            }
        }
    }
    out
}

/// Where `(n, k)` sits for the Lovelock scalar `L_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LovelockRegime {
    /// `2k < n`.
    Dynamical,
    /// `2k = n`: `L_k` is the Euler density.
    EulerDensity,
    /// `2k > n`: `L_k` vanishes identically.
    Vanishing,
}

pub fn lovelock_regime(n: usize, k: usize) -> LovelockRegime {
    match (2 * k).cmp(&n) {
        std::cmp::Ordering::Less => LovelockRegime::Dynamical,
        std::cmp::Ordering::Equal => LovelockRegime::EulerDensity,
        std::cmp::Ordering::Greater => LovelockRegime::Vanishing,
    }
}

/// `L_k = 2^{−k} δ^{i1…i2k}_{j1…j2k} Π R_{i i}^{j j}`; zero when `2k > n`.
pub fn lovelock_l<T: Scalar>(b: &CurvatureBundle<T>, k: usize) -> T {
    if k == 0 {
        return c(1.0);
    }
    let pat = ContractionPattern::new(k, 0);
    delta_contract(&b.riemann_mixed, b.n, &pat)[0] * 2f64.powi(-(k as i32))
}

/// `L₂ = |Rm|² − 4|Ric|² + R²` from norms.
pub fn gauss_bonnet_l2_direct<T: Scalar>(b: &CurvatureBundle<T>) -> T {
    let mut rm2 = c::<T>(0.0);
    for (a, h) in b.riemann_lo.iter().zip(&b.riemann_hi) {
        rm2 += *a * *h;
    }
    let mut ric2 = c::<T>(0.0);
    for (a, h) in b.ricci.iter().zip(&b.ricci_hi) {
        ric2 += *a * *h;
    }
    rm2 - ric2 * 4.0 + b.scalar * b.scalar
}

/// The Gauss-Bonnet tensor
/// `P^{ijkl} = R^{ijkl} + R^{jk}g^{il} − R^{jl}g^{ik} − R^{ik}g^{jl} + R^{il}g^{jk}
///  + ½R(g^{ik}g^{jl} − g^{il}g^{jk})`.
pub fn p_tensor<T: Scalar>(b: &CurvatureBundle<T>) -> Rank4Field<T> {
    let n = b.n;
    let gi = |i: usize, j: usize| b.ginv[i * n + j];
    let rc = |i: usize, j: usize| b.ricci_hi[i * n + j];
    let half_r = b.scalar * 0.5;
    let mut data = vec![c::<T>(0.0); n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let at = ((i * n + j) * n + k) * n + l;
                    data[at] = b.riemann_hi[at] + rc(j, k) * gi(i, l) - rc(j, l) * gi(i, k)
                        - rc(i, k) * gi(j, l)
                        + rc(i, l) * gi(j, k)
                        + half_r * (gi(i, k) * gi(j, l) - gi(i, l) * gi(j, k));
                }
            }
        }
    }
    Rank4Field { n, data }
}

/// `P_(k)^{stlm} = 2^{−k} δ^{i1…i_{2k−2} s t}_{j1…j_{2k−2} j j'} Π R g^{jl} g^{j'm}`;
/// the zero field when `2k > n`.
pub fn p_tensor_general<T: Scalar>(b: &CurvatureBundle<T>, k: usize) -> Rank4Field<T> {
    let pat = ContractionPattern::new(k.saturating_sub(1), 2);
    p_tensor_with(b, k, &pat)
}

/// [`p_tensor_general`] with a prebuilt contraction pattern for `(k − 1, 2)`.
pub fn p_tensor_with<T: Scalar>(b: &CurvatureBundle<T>, k: usize, pat: &ContractionPattern) -> Rank4Field<T> {
    let n = b.n;
    let zero = c::<T>(0.0);
    if k == 0 || 2 * k > n {
        return Rank4Field { n, data: vec![zero; n.pow(4)] };
    }
    let q = delta_contract(&b.riemann_mixed, n, pat);
    let scale = 2f64.powi(-(k as i32));
    let n2 = n * n;
    // raise the two lower free slots
    let mut data = vec![zero; n.pow(4)];
    for st in 0..n2 {
        let mut mid = vec![zero; n2];
        for a in 0..n {
            for m in 0..n {
                let mut v = zero;
                for bb in 0..n {
                    v += q[st * n2 + a * n + bb] * b.ginv[bb * n + m];
                }
                mid[a * n + m] = v;
            }
        }
        for l in 0..n {
            for m in 0..n {
                let mut v = zero;
                for a in 0..n {
                    v += b.ginv[a * n + l] * mid[a * n + m];
                }
                data[st * n2 + l * n + m] = v * scale;
            }
        }
    }
    Rank4Field { n, data }
}

/// `P·Rm = P^{ijkl} R_ijkl`.
pub fn contract_with_riemann<T: Scalar>(p: &Rank4Field<T>, b: &CurvatureBundle<T>) -> T {
    let mut s = c::<T>(0.0);
    for (x, y) in p.data.iter().zip(&b.riemann_lo) {
        s += *x * *y;
    }
    s
}

/// The Lovelock-Einstein tensor with lower indices,
/// `E^(k)_ij = g_il E^l_j`, `E^l_j = −2^{−(k+1)} δ^{l i1…i2k}_{j j1…j2k} Π R`.
pub fn lovelock_einstein<T: Scalar>(b: &CurvatureBundle<T>, k: usize) -> Vec<T> {
    let n = b.n;
    let pat = ContractionPattern::new(k, 1);
    let mixed = delta_contract(&b.riemann_mixed, n, &pat);
    let scale = -(2f64.powi(-(k as i32 + 1)));
    let mut out = vec![c::<T>(0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = c::<T>(0.0);
            for l in 0..n {
                v += b.g[i * n + l] * mixed[l * n + j];
            }
            out[i * n + j] = v * scale;
        }
    }
    out
}

/// `E^(2)` in expanded form:
/// `2RR_ij − 4R_is R^s_j − 4R_sl R^s_i^l_j + 2R_islt R_j^{slt} − ½g_ij L₂`.
pub fn lanczos_tensor<T: Scalar>(b: &CurvatureBundle<T>) -> Vec<T> {
    let n = b.n;
    let zero = c::<T>(0.0);
    let l2 = gauss_bonnet_l2_direct(b);
    let n2 = n * n;
    let n3 = n2 * n;
    // R^s_j = g^{sa} R_aj
    let mut ric_mixed = vec![zero; n2];
    for s in 0..n {
        for j in 0..n {
            let mut v = zero;
            for a in 0..n {
                v += b.ginv[s * n + a] * b.ricci[a * n + j];
            }
            ric_mixed[s * n + j] = v;
        }
    }
    // R_j^{slt} = g_ja R^{aslt}
    let mut rj = vec![zero; n.pow(4)];
    for j in 0..n {
        for a in 0..n {
            let gja = b.g[j * n + a];
            for slt in 0..n3 {
                rj[j * n3 + slt] += gja * b.riemann_hi[a * n3 + slt];
            }
        }
    }
    let mut out = vec![zero; n2];
    for i in 0..n {
        for j in 0..n {
            let mut t1 = zero;
            for s in 0..n {
                t1 += b.ricci[i * n + s] * ric_mixed[s * n + j];
            }
            let mut t2 = zero;
            for a in 0..n {
                for bb in 0..n {
                    t2 += b.ricci_hi[a * n + bb] * b.rm(a, i, bb, j);
                }
            }
            let mut t3 = zero;
            for slt in 0..n3 {
                t3 += b.riemann_lo[i * n3 + slt] * rj[j * n3 + slt];
            }
            out[i * n + j] = b.scalar * b.ricci[i * n + j] * 2.0 - t1 * 4.0 - t2 * 4.0 + t3 * 2.0
                - b.g[i * n + j] * l2 * 0.5;
        }
    }
    out
}

/// Kulkarni-Nomizu product
/// `(A⊙B)_ijkl = A_ik B_jl + A_jl B_ik − A_il B_jk − A_jk B_il`.
pub fn kulkarni_nomizu<T: Scalar>(a: &[T], bm: &[T], n: usize) -> Vec<T> {
    let mut out = vec![c::<T>(0.0); n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[((i * n + j) * n + k) * n + l] = a[i * n + k] * bm[j * n + l]
                        + a[j * n + l] * bm[i * n + k]
                        - a[i * n + l] * bm[j * n + k]
                        - a[j * n + k] * bm[i * n + l];
                }
            }
        }
    }
    out
}

/// `(‖W‖², σ₂)` with `σ₂` the second elementary function of the Schouten
/// tensor `(Ric − R g/(2(n−1)))/(n−2)`, so that
/// `L₂ = ‖W‖² + 8(n−2)(n−3)σ₂`.
pub fn weyl_sigma2_split<T: Scalar>(b: &CurvatureBundle<T>) -> (T, T) {
    let n = b.n;
    let nf = n as f64;
    let zero = c::<T>(0.0);
    let mut ric2 = zero;
    for (a, h) in b.ricci.iter().zip(&b.ricci_hi) {
        ric2 += *a * *h;
    }
    let r = b.scalar;
    let sigma2 = (r * r * (nf / (nf - 1.0)) - ric2 * 4.0) * (1.0 / (8.0 * (nf - 2.0) * (nf - 2.0)));
    // W = Rm − (Ric ⊙ g)/(n−2) + R (g ⊙ g)/(2(n−1)(n−2))
    let rg = kulkarni_nomizu(&b.ricci, &b.g, n);
    let gg = kulkarni_nomizu(&b.g, &b.g, n);
    let w: Vec<T> = (0..n.pow(4))
        .map(|t| b.riemann_lo[t] - rg[t] * (1.0 / (nf - 2.0)) + gg[t] * r * (1.0 / (2.0 * (nf - 1.0) * (nf - 2.0))))
        .collect();
    let w_hi = raise_first_pair(&raise_last_pair(&w, &b.ginv, n), &b.ginv, n);
    let mut wn = zero;
    for (a, h) in w.iter().zip(&w_hi) {
        wn += *a * *h;
    }
    (wn, sigma2)
}

/// Which divergence-free tensor to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PKind {
    /// `P_(k)` by delta contraction.
    General(usize),
    /// The explicit Gauss-Bonnet formula for `P = P_(2)`.
    GaussBonnet,
}

fn seeded(jet: &MetricJet, q: usize) -> Result<(Vec<Dual64>, Vec<Dual64>, Vec<Dual64>)> {
    let n = jet.n;
    let d3 = jet
        .d3g
        .as_ref()
        .ok_or_else(|| Error::Contract("third derivatives required".into()))?;
    let (n2, n3, n4) = (n * n, n * n * n, n.pow(4));
    let g = (0..n2).map(|t| Dual64::new(jet.g[t], jet.dg[q * n2 + t])).collect();
    let dg = (0..n3).map(|t| Dual64::new(jet.dg[t], jet.d2g[q * n3 + t])).collect();
    // d2g[k][l][ij] ← ∂_q gives d3g[q][k][l][ij]
    let d2g = (0..n4).map(|t| Dual64::new(jet.d2g[t], d3[q * n4 + t])).collect();
    Ok((g, dg, d2g))
}

fn p_of<T: Scalar>(b: &CurvatureBundle<T>, kind: PKind, pat: &Option<ContractionPattern>) -> Rank4Field<T> {
    match (kind, pat) {
        (PKind::GaussBonnet, _) => p_tensor(b),
        (PKind::General(k), Some(p)) => p_tensor_with(b, k, p),
        (PKind::General(k), None) => p_tensor_general(b, k),
    }
}

/// `∇_i P^{ijkl}` at `[j][k][l]`, with `∂_i P` obtained exactly by pushing
/// dual numbers seeded with `∂³g` through the whole curvature pipeline.
pub fn divergence_of_p(jet: &MetricJet, kind: PKind) -> Result<Vec<f64>> {
    let n = jet.n;
    let n3 = n * n * n;
    let pat = match kind {
        PKind::General(k) => Some(ContractionPattern::new(k.saturating_sub(1), 2)),
        PKind::GaussBonnet => None,
    };
    let mut div = vec![0.0; n3];
    let mut base: Option<(CurvatureBundle<f64>, Rank4Field<f64>)> = None;
    for q in 0..n {
        let (g, dg, d2g) = seeded(jet, q)?;
        let b = CurvatureBundle::from_parts(n, &g, &dg, &d2g)?;
        let p = p_of(&b, kind, &pat);
        // ∂_q P^{q jkl}
        for jkl in 0..n3 {
            div[jkl] += p.data[q * n3 + jkl].eps;
        }
        if base.is_none() {
            let b0 = CurvatureBundle::from_jet(jet)?;
            let p0 = Rank4Field { n, data: p.data.iter().map(|v| v.re).collect() };
            base = Some((b0, p0));
        }
    }
    let (b0, p0) = base.expect("n ≥ 1");
    let gam = |k: usize, i: usize, j: usize| b0.gamma[(k * n + i) * n + j];
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let mut v = 0.0;
                for i in 0..n {
                    for s in 0..n {
                        v += gam(i, i, s) * p0.at(s, j, k, l)
                            + gam(j, i, s) * p0.at(i, s, k, l)
                            + gam(k, i, s) * p0.at(i, j, s, l)
                            + gam(l, i, s) * p0.at(i, j, k, s);
                    }
                }
                div[(j * n + k) * n + l] += v;
            }
        }
    }
    Ok(div)
}

/// The vector field `V^i = P^{ijkl} ∂_l g_jk` whose flux defines the
/// Gauss-Bonnet-Chern mass.
pub fn gbc_vector<T: Scalar>(p: &Rank4Field<T>, dg: &[T]) -> Vec<T> {
    let n = p.n;
    let n2 = n * n;
    let mut out = vec![c::<T>(0.0); n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut v = c::<T>(0.0);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    v += p.at(i, j, k, l) * dg[l * n2 + j * n + k];
                }
            }
        }
        *o = v;
    }
    out
}

/// Flat divergence `∂_i(P^{ijkl} ∂_l g_jk)` computed exactly with dual numbers.
pub fn gbc_vector_divergence(jet: &MetricJet) -> Result<f64> {
    let n = jet.n;
    let mut s = 0.0;
    for q in 0..n {
        let (g, dg, d2g) = seeded(jet, q)?;
        let b = CurvatureBundle::from_parts(n, &g, &dg, &d2g)?;
        let v = gbc_vector(&p_tensor(&b), &dg);
        s += v[q].eps;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Metric of the round unit sphere in stereographic coordinates,
    /// `4/(1+|x|²)² δ`, whose Riemann tensor is `g_ik g_jl − g_il g_jk`.
    fn sphere_jet(x: &[f64]) -> MetricJet {
        let n = x.len();
        let s: f64 = x.iter().map(|v| v * v).sum();
        // φ(s) = 4(1+s)^{-2}, s = |x|²; ∂_k φ = φ'·2x_k
        let phi = 4.0 / (1.0 + s).powi(2);
        let p1 = -8.0 / (1.0 + s).powi(3);
        let p2 = 24.0 / (1.0 + s).powi(4);
        let mut j = MetricJet::zeros(n, 2);
        for i in 0..n {
            j.g[i * n + i] = phi;
            for k in 0..n {
                j.dg[(k * n + i) * n + i] = p1 * 2.0 * x[k];
                for l in 0..n {
                    let d = if k == l { 2.0 * p1 } else { 0.0 };
                    j.d2g[((k * n + l) * n + i) * n + i] = p2 * 4.0 * x[k] * x[l] + d;
                }
            }
        }
        j
    }

    #[test]
    fn sphere_convention() {
        let x = [0.3, -0.2, 0.5, 0.1, 0.4];
        let n = x.len();
        let b = CurvatureBundle::from_jet(&sphere_jet(&x)).unwrap();
        let g = |i: usize, j: usize| b.g[i * n + j];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let e = g(i, k) * g(j, l) - g(i, l) * g(j, k);
                        assert!((b.rm(i, j, k, l) - e).abs() < 1e-12);
                    }
                }
                assert!((b.ricci[i * n + j] - 4.0 * g(i, j)).abs() < 1e-12);
            }
        }
        assert!((b.scalar - 20.0).abs() < 1e-11);
        assert!(riemann_symmetry_residual(&b.riemann_lo, n) < 1e-12);
        // unit-curvature 5-manifold: L2 = 120
        assert!((lovelock_l(&b, 2) - 120.0).abs() < 1e-9);
        assert!((gauss_bonnet_l2_direct(&b) - 120.0).abs() < 1e-9);
    }

    #[test]
    fn p_tensor_contractions() {
        let x = [0.3, -0.2, 0.5, 0.1, 0.4, -0.7];
        let b = CurvatureBundle::from_jet(&sphere_jet(&x)).unwrap();
        let p = p_tensor(&b);
        let p2 = p_tensor_general(&b, 2);
        let l2 = lovelock_l(&b, 2);
        assert!((contract_with_riemann(&p, &b) - l2).abs() < 1e-8 * l2.abs());
        for (a, c) in p.data.iter().zip(&p2.data) {
            assert!((a - c).abs() < 1e-10 * (1.0 + a.abs()));
        }
        let l3 = lovelock_l(&b, 3);
        let p3 = p_tensor_general(&b, 3);
        assert!((contract_with_riemann(&p3, &b) - l3).abs() < 1e-8 * l3.abs());
        assert!(p.symmetry_residual() < 1e-9);
    }

    #[test]
    fn einstein_tensors() {
        let x = [0.3, -0.2, 0.5, 0.1, 0.4];
        let n = x.len();
        let b = CurvatureBundle::from_jet(&sphere_jet(&x)).unwrap();
        let e1 = lovelock_einstein(&b, 1);
        for i in 0..n * n {
            let expect = b.ricci[i] - 0.5 * b.scalar * b.g[i];
            assert!((e1[i] - expect).abs() < 1e-10);
        }
        let e2 = lovelock_einstein(&b, 2);
        let lz = lanczos_tensor(&b);
        for i in 0..n * n {
            assert!((e2[i] - lz[i]).abs() < 1e-9 * (1.0 + lz[i].abs()));
        }
    }

    #[test]
    fn vanishing_regimes() {
        let x = [0.3, -0.2, 0.5, 0.1];
        let b = CurvatureBundle::from_jet(&sphere_jet(&x)).unwrap();
        assert_eq!(lovelock_regime(4, 2), LovelockRegime::EulerDensity);
        assert_eq!(lovelock_l(&b, 3), 0.0);
        assert!(lovelock_einstein(&b, 2).iter().all(|v| v.abs() < 1e-9));
    }
}
