//! Cartesian derivatives of radial functions `ψ(|x|)`.

use num_dual::{Dual3_64, DualNum};
use std::sync::Arc;

/// A radial profile evaluated on third-order dual numbers, so one call gives
/// `ψ, ψ', ψ'', ψ'''` in `r`.
pub type Profile = Arc<dyn Fn(Dual3_64) -> Dual3_64 + Send + Sync>;

/// `[ψ, ψ', ψ'', ψ''']` of `profile` at `r`.
pub fn profile_derivs(profile: &Profile, r: f64) -> [f64; 4] {
    let d = profile(Dual3_64::new(r, 1.0, 0.0, 0.0));
    [d.re, d.v1, d.v2, d.v3]
}

/// Radial derivatives up to fourth order of a radial function at a point,
/// with the Cartesian tensors assembled on demand.
///
/// Uses `F(s) = ψ(√(2s))`, so that `∂_i ψ = F' x_i`,
/// `∂_ij ψ = F'' x_i x_j + F' δ_ij` and so on.
#[derive(Debug, Clone, Copy)]
pub struct RadialJet {
    /// `F, F', F'', F''', F''''` with respect to `s = r²/2`.
    pub ds: [f64; 5],
}

impl RadialJet {
    /// From `ψ` and its `r`-derivatives (`psi[j]` = j-th derivative) at radius `r`.
    /// Missing high orders are treated as zero.
    pub fn from_r_derivs(psi: &[f64], r: f64) -> Self {
        let p = |j: usize| psi.get(j).copied().unwrap_or(0.0);
        let (r2, r3) = (r * r, r * r * r);
        let f1 = p(1) / r;
        let f2 = p(2) / r2 - p(1) / r3;
        let f3 = p(3) / r3 - 3.0 * p(2) / (r2 * r2) + 3.0 * p(1) / (r2 * r3);
        let f4 = p(4) / (r2 * r2) - 6.0 * p(3) / (r2 * r3) + 15.0 * p(2) / (r3 * r3)
            - 15.0 * p(1) / (r3 * r2 * r2);
        Self { ds: [p(0), f1, f2, f3, f4] }
    }

    /// From derivatives with respect to `s` directly.
    pub fn from_s_derivs(ds: [f64; 5]) -> Self {
        Self { ds }
    }

    pub fn value(&self) -> f64 {
        self.ds[0]
    }

    pub fn d1(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| self.ds[1] * xi).collect()
    }

    pub fn d2(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.ds[2] * x[i] * x[j] + if i == j { self.ds[1] } else { 0.0 };
            }
        }
        out
    }

    pub fn d3(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[(i * n + j) * n + k] = self.ds[3] * x[i] * x[j] * x[k]
                        + self.ds[2] * (d(i, j) * x[k] + d(i, k) * x[j] + d(j, k) * x[i]);
                }
            }
        }
        out
    }

    pub fn d4(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut out = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let pairs = d(i, j) * x[k] * x[l]
                            + d(i, k) * x[j] * x[l]
                            + d(i, l) * x[j] * x[k]
                            + d(j, k) * x[i] * x[l]
                            + d(j, l) * x[i] * x[k]
                            + d(k, l) * x[i] * x[j];
                        let dd = d(i, j) * d(k, l) + d(i, k) * d(j, l) + d(i, l) * d(j, k);
                        out[((i * n + j) * n + k) * n + l] = self.ds[4] * x[i] * x[j] * x[k] * x[l]
                            + self.ds[3] * pairs
                            + self.ds[2] * dd;
                    }
                }
            }
        }
        out
    }
}

/// `x^p` on dual numbers, kept here so profiles read like the formulas.
pub fn pow(x: Dual3_64, p: f64) -> Dual3_64 {
    x.powf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_closed_form() {
        // ψ = r²/2 has ∂_ij ψ = δ_ij and vanishing third derivatives.
        let x = [0.3, -1.2, 0.7, 2.0];
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let j = RadialJet::from_r_derivs(&[r * r / 2.0, r, 1.0, 0.0, 0.0], r);
        let h = j.d2(&x);
        for a in 0..4 {
            for b in 0..4 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((h[a * 4 + b] - e).abs() < 1e-14);
            }
        }
        assert!(j.d3(&x).iter().all(|v| v.abs() < 1e-13));
        assert!(j.d4(&x).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn fourth_order_of_r4() {
        // ψ = r⁴ = 4s²: F'' = 8, so ∂_1111 ψ = 3·8 = 24.
        let x = [1.5, 0.0, 0.0];
        let r = 1.5;
        let j = RadialJet::from_r_derivs(&[r.powi(4), 4.0 * r.powi(3), 12.0 * r * r, 24.0 * r, 24.0], r);
        let d = j.d4(&x);
        assert!((d[0] - 24.0).abs() < 1e-12);
        assert!((j.ds[2] - 8.0).abs() < 1e-12);
    }
}
