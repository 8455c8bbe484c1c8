//! Product quadrature on coordinate spheres and radial shells.
//!
//! Polar angles use Gauss-Jacobi rules in `t = cos θ` with weight
//! `(1 − t²)^{(q−1)/2}`, which is `sin^q θ dθ` folded in; the azimuth uses the
//! uniform trapezoid rule. A rule of level `L` integrates polynomials of
//! degree `≤ 2L − 1` exactly.

use crate::error::{Error, Result};
use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

/// Volume of the unit sphere `S^{n−1} ⊂ ℝⁿ`, `2π^{n/2}/Γ(n/2)`.
pub fn omega(n: usize) -> f64 {
    // ω_{n−1} via the recursion ω_{n+1} = 2π ω_{n−1}/n from ω₀ = 2, ω₁ = 2π.
    let mut prev = [2.0, 2.0 * PI];
    if n == 1 {
        return prev[0];
    }
    let mut d = 2;
    while d < n {
        let next = 2.0 * PI * prev[0] / (d as f64 - 1.0);
        prev = [prev[1], next];
        d += 1;
    }
    prev[1]
}

#[derive(Debug, Clone)]
pub struct SphereRule {
    pub n: usize,
    pub level: usize,
    /// Unit vectors, `n` components each.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, a: usize) -> &[f64] {
        &self.nodes[a * self.n..(a + 1) * self.n]
    }
}

/// Gauss-Jacobi (or Legendre) nodes and weights for `∫ (1−t²)^β F(t) dt`.
fn symmetric_jacobi(level: usize, beta: f64) -> Vec<(f64, f64)> {
    let deg = NonZeroUsize::new(level).expect("level ≥ 1");
    if beta == 0.0 {
        return GaussLegendre::new(deg).iter().map(|&(x, w)| (x, w)).collect();
    }
    let b = FiniteAboveNegOneF64::new(beta).expect("exponent above −1");
    GaussJacobi::new(deg, b, b).iter().map(|&(x, w)| (x, w)).collect()
}

/// Product rule on `S^{n−1}` with `level^{n−2}·2·level` nodes.
pub fn sphere_rule(n: usize, level: usize) -> Result<SphereRule> {
    if n < 2 {
        return Err(Error::Contract(format!("sphere rule needs n ≥ 2, got {n}")));
    }
    if level < 1 {
        return Err(Error::Contract("quadrature level must be ≥ 1".into()));
    }
    // polar angle θ_a (a = 1..n−2) carries sin^{n−1−a}
    let polar: Vec<Vec<(f64, f64)>> = (1..n - 1)
        .map(|a| symmetric_jacobi(level, ((n - 1 - a) as f64 - 1.0) / 2.0))
        .collect();
    let naz = 2 * level;
    let az: Vec<(f64, f64)> = (0..naz)
        .map(|j| (2.0 * PI * (j as f64 + 0.5) / naz as f64, 2.0 * PI / naz as f64))
        .collect();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; n - 2];
    loop {
        let mut w = 1.0;
        let mut x = vec![0.0; n];
        let mut sprod = 1.0;
        for (a, &ia) in idx.iter().enumerate() {
            let (t, wt) = polar[a][ia];
            x[a] = sprod * t;
            sprod *= (1.0 - t * t).max(0.0).sqrt();
            w *= wt;
        }
        for &(phi, wp) in &az {
            let mut y = x.clone();
            y[n - 2] = sprod * phi.cos();
            y[n - 1] = sprod * phi.sin();
            nodes.extend_from_slice(&y);
            weights.push(w * wp);
        }
        // advance the polar multi-index
        let mut p = 0;
        loop {
            if p == idx.len() {
                return Ok(SphereRule { n, level, nodes, weights });
            }
            idx[p] += 1;
            if idx[p] < level {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// Evaluates `f` at every node, in parallel, and sums in node order so the
/// result does not depend on scheduling.
fn reduce_nodes<F>(rule: &SphereRule, f: F) -> Result<f64>
where
    F: Fn(usize, &[f64]) -> Result<f64> + Sync,
{
    let vals: Vec<Result<f64>> = (0..rule.len())
        .into_par_iter()
        .map(|a| {
            let v = f(a, rule.node(a))?;
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite integrand at node {:?}", rule.node(a))));
            }
            Ok(v * rule.weights[a])
        })
        .collect();
    let mut s = 0.0;
    for v in vals {
        s += v?;
    }
    Ok(s)
}

/// `∫_{S_r} F dS = Σ_a w_a r^{n−1} F(r·ω_a)`. The integrand receives the point
/// and the outward unit normal.
pub fn surface_integral<F>(f: F, r: f64, rule: &SphereRule) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    if r <= 0.0 {
        return Err(Error::Contract(format!("sphere radius must be positive, got {r}")));
    }
    let scale = r.powi(rule.n as i32 - 1);
    let s = reduce_nodes(rule, |_, w| {
        let x: Vec<f64> = w.iter().map(|v| v * r).collect();
        f(&x, w)
    })?;
    Ok(s * scale)
}

/// `surface_integral` at `level` together with the change against level − 1,
/// a cheap proxy for the quadrature error.
pub fn surface_integral_with_error<F>(f: F, r: f64, n: usize, level: usize) -> Result<(f64, f64)>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    let hi = surface_integral(&f, r, &sphere_rule(n, level)?)?;
    let lo = surface_integral(&f, r, &sphere_rule(n, level.saturating_sub(1).max(1))?)?;
    Ok((hi, (hi - lo).abs()))
}

/// Radial panel layout for shell integrals.
#[derive(Debug, Clone, Copy)]
pub struct RadialRule {
    /// Gauss-Legendre points per panel.
    pub level: usize,
    /// Width of the first panel when the inner radius is 0.
    pub first_panel: f64,
    /// Geometric ratio between consecutive panel edges.
    pub ratio: f64,
}

impl Default for RadialRule {
    fn default() -> Self {
        Self { level: 8, first_panel: 0.5, ratio: 2.0 }
    }
}

impl RadialRule {
    /// Nodes `(r, w)` for `∫_{a}^{b} h(r) dr`, with `b = ∞` handled by
    /// `r = R + R·t/(1−t)` past the last geometric edge `R`.
    pub fn nodes(&self, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
        if !(a >= 0.0) || !(b > a) {
            return Err(Error::Contract(format!("radial range [{a}, {b}] is empty")));
        }
        let gl: Vec<(f64, f64)> = GaussLegendre::new(NonZeroUsize::new(self.level.max(1)).unwrap())
            .iter()
            .map(|&(x, w)| (x, w))
            .collect();
        let mut edges = vec![a];
        let mut e = if a == 0.0 { self.first_panel.min(b) } else { (a * self.ratio).min(b) };
        let cap = if b.is_finite() { b } else { a.max(self.first_panel) * self.ratio.powi(6) };
        while e < cap {
            edges.push(e);
            e *= self.ratio;
        }
        edges.push(cap);
        let mut out = Vec::new();
        for win in edges.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            if hi <= lo {
                continue;
            }
            let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            out.extend(gl.iter().map(|&(x, w)| (m + h * x, h * w)));
        }
        if !b.is_finite() {
            // r = R + R t/(1−t), dr = R/(1−t)² dt on t ∈ [0, 1)
            let rr = cap;
            for &(x, w) in &gl {
                let t = 0.5 * (x + 1.0);
                let jac = rr / ((1.0 - t) * (1.0 - t)) * 0.5;
                out.push((rr + rr * t / (1.0 - t), w * jac));
            }
        }
        Ok(out)
    }
}

/// `∫_{r_inner < |x| < r_outer} F dx` in flat measure; `r_outer` may be
/// infinite.
pub fn ball_integral<F>(f: F, r_inner: f64, r_outer: f64, rule: &SphereRule, radial: &RadialRule) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let rn = radial.nodes(r_inner, r_outer)?;
    let n = rule.n;
    let mut total = 0.0;
    for (r, w) in rn {
        let s = reduce_nodes(rule, |_, om| {
            let x: Vec<f64> = om.iter().map(|v| v * r).collect();
            f(&x)
        })?;
        total += s * w * r.powi(n as i32 - 1);
    }
    Ok(total)
}

/// `∫_{S^{n−1}} ∫_{ρ(ω)}^{∞} F(tω) t^{n−1} dt dω`: flat integral over the
/// exterior of a region star-shaped about the origin.
pub fn exterior_integral<F, P>(f: F, inner: P, rule: &SphereRule, radial: &RadialRule) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    P: Fn(&[f64]) -> f64 + Sync,
{
    let n = rule.n;
    reduce_nodes(rule, |_, om| {
        let rho = inner(om);
        let mut s = 0.0;
        for (t, w) in radial.nodes(rho, f64::INFINITY)? {
            let x: Vec<f64> = om.iter().map(|v| v * t).collect();
            s += f(&x)? * w * t.powi(n as i32 - 1);
        }
        Ok(s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_values() {
        assert!((omega(2) - 2.0 * PI).abs() < 1e-14);
        assert!((omega(3) - 4.0 * PI).abs() < 1e-13);
        assert!((omega(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!((omega(5) - 26.318_945_07).abs() < 1e-7);
    }

    #[test]
    fn weights_and_moments() {
        for n in 3..=7 {
            let rule = sphere_rule(n, 4).unwrap();
            assert_eq!(rule.len(), 4usize.pow(n as u32 - 2) * 8);
            let s: f64 = rule.weights.iter().sum();
            assert!((s / omega(n) - 1.0).abs() < 1e-12, "n={n}");
            let x2 = surface_integral(|x, _| Ok(x[0] * x[0]), 1.0, &rule).unwrap();
            assert!((x2 - omega(n) / n as f64).abs() < 1e-12);
            let odd = surface_integral(|x, _| Ok(x[1] * x[2] * x[2]), 1.0, &rule).unwrap();
            assert!(odd.abs() < 1e-13);
        }
    }

    #[test]
    fn polynomial_exactness() {
        // ∫ x₁⁴ over S^{n−1} = 3ω/(n(n+2)); ∫ x₁²x₂²x₃² = ω/(n(n+2)(n+4))
        let n = 5;
        let rule = sphere_rule(n, 4).unwrap();
        let nf = n as f64;
        let v = surface_integral(|x, _| Ok(x[0].powi(4)), 1.0, &rule).unwrap();
        assert!((v - 3.0 * omega(n) / (nf * (nf + 2.0))).abs() < 1e-12);
        let v = surface_integral(|x, _| Ok((x[0] * x[3] * x[4]).powi(2)), 1.0, &rule).unwrap();
        assert!((v - omega(n) / (nf * (nf + 2.0) * (nf + 4.0))).abs() < 1e-12);
    }

    #[test]
    fn ball_volume_and_tail() {
        let n = 5;
        let rule = sphere_rule(n, 3).unwrap();
        let rad = RadialRule::default();
        let v = ball_integral(|_| Ok(1.0), 0.0, 2.0, &rule, &rad).unwrap();
        assert!((v - omega(n) * 32.0 / 5.0).abs() < 1e-10);
        let t = ball_integral(
            |x| Ok(x.iter().map(|v| v * v).sum::<f64>().powf(-(n as f64 + 1.0) / 2.0)),
            1.0,
            f64::INFINITY,
            &rule,
            &rad,
        )
        .unwrap();
        assert!((t - omega(n)).abs() < 1e-10 * omega(n), "{t} {}", omega(n));
    }
}
