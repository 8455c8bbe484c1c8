//! Generalized Kronecker deltas, permutation signs and the index patterns
//! behind every Lovelock contraction.
//!
//! Indices are 0-based throughout the code.

use crate::error::{Error, Result};

/// Sign of `p` viewed as a permutation of its own sorted values.
///
/// Returns 0 when `p` has a repeated entry.
pub fn permutation_sign(p: &[usize]) -> i8 {
    let mut sign = 1i8;
    for a in 0..p.len() {
        for b in (a + 1)..p.len() {
            if p[a] == p[b] {
                return 0;
            }
            if p[a] > p[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// The generalized Kronecker delta `δ^{upper}_{lower}`.
///
/// Equal to the determinant of the matrix of single deltas. Computed as the
/// sign of the permutation carrying `lower` onto `upper`, which is the only
/// surviving term of the determinant expansion.
pub fn gen_kronecker_delta(upper: &[usize], lower: &[usize]) -> i8 {
    assert_eq!(
        upper.len(),
        lower.len(),
        "generalized delta needs equal numbers of upper and lower indices"
    );
    let su = permutation_sign(upper);
    if su == 0 {
        return 0;
    }
    let sl = permutation_sign(lower);
    if sl == 0 {
        return 0;
    }
    let mut a = upper.to_vec();
    let mut b = lower.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return 0;
    }
    su * sl
}

/// Range-checked generalized delta of fixed order over dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaSymbol {
    pub n: usize,
    pub order: usize,
}

impl DeltaSymbol {
    pub fn new(n: usize, order: usize) -> Self {
        Self { n, order }
    }

    pub fn value(&self, upper: &[usize], lower: &[usize]) -> Result<i8> {
        if upper.len() != self.order || lower.len() != self.order {
            return Err(Error::Contract(format!(
                "delta of order {} given {} upper and {} lower indices",
                self.order,
                upper.len(),
                lower.len()
            )));
        }
        if let Some(&bad) = upper.iter().chain(lower).find(|&&i| i >= self.n) {
            return Err(Error::Contract(format!(
                "index {bad} out of range for dimension {}",
                self.n
            )));
        }
        Ok(gen_kronecker_delta(upper, lower))
    }
}

/// All strictly increasing `size`-subsets of `0..n`, in lexicographic order.
pub fn increasing_subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..size).collect();
    loop {
        out.push(cur.clone());
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - size + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in (i + 1)..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// A strictly increasing index subset of the kind summed over by an
/// antisymmetrized contraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSubset {
    pub indices: Vec<usize>,
}

impl IndexSubset {
    /// Every ordering of the subset with its sign; `(2k)!` entries.
    pub fn signed_permutations(&self) -> Vec<(Vec<usize>, i8)> {
        all_permutations(self.indices.len())
            .into_iter()
            .map(|p| {
                let s = permutation_sign(&p);
                (p.iter().map(|&a| self.indices[a]).collect(), s)
            })
            .collect()
    }
}

/// The increasing `2k`-subsets of `0..n`. Expanding each one by
/// [`IndexSubset::signed_permutations`] reproduces all `(2k)!·C(n,2k)`
/// nonvanishing terms of a full antisymmetrized sum. Empty when `2k > n`.
pub fn antisymmetric_index_pairs(n: usize, k: usize) -> Vec<IndexSubset> {
    increasing_subsets(n, 2 * k)
        .into_iter()
        .map(|indices| IndexSubset { indices })
        .collect()
}

/// All permutations of `0..m` in lexicographic order.
pub fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), &mut vec![false; m], &mut out);
    out
}

/// Pairings of `items` into increasing pairs. With `canonical` the pairs are
/// also ordered by their first element (one representative per perfect
/// matching); otherwise every order of the pairs is produced.
fn pairings(items: &[usize], canonical: bool) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let firsts: Vec<usize> = if canonical { vec![0] } else { (0..items.len()).collect() };
    for a in firsts {
        for b in 0..items.len() {
            if b == a || items[b] < items[a] {
                continue;
            }
            let rest: Vec<usize> = items
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != a && i != b)
                .map(|(_, &v)| v)
                .collect();
            for tail in pairings(&rest, canonical) {
                let mut p = vec![items[a], items[b]];
                p.extend(tail);
                out.push(p);
            }
        }
    }
    out
}

/// Position patterns for a delta contraction over a subset of size
/// `2q + e`: `e` free slots (increasing) followed by `q` increasing pairs.
///
/// The upper row uses canonical pairings, the lower row ordered pairings.
/// Summing `sign_u·sign_l·Π R` over both lists and multiplying by
/// [`ContractionPattern::weight`] gives the full antisymmetrized sum with the
/// free slots fixed.
#[derive(Debug, Clone)]
pub struct ContractionPattern {
    pub q: usize,
    pub e: usize,
    pub upper: Vec<(Vec<usize>, i8)>,
    pub lower: Vec<(Vec<usize>, i8)>,
    /// Pair codes `p₁·m + p₂` of each row's `q` pairs, `m = 2q + e`.
    pub upper_pairs: Vec<Vec<usize>>,
    pub lower_pairs: Vec<Vec<usize>>,
}

impl ContractionPattern {
    pub fn new(q: usize, e: usize) -> Self {
        let m = 2 * q + e;
        let build = |canonical: bool| {
            let mut rows = Vec::new();
            for free in increasing_subsets(m, e) {
                let rest: Vec<usize> = (0..m).filter(|i| !free.contains(i)).collect();
                for tail in pairings(&rest, canonical) {
                    let mut p = free.clone();
                    p.extend(tail);
                    let s = permutation_sign(&p);
                    rows.push((p, s));
                }
            }
            rows
        };
        let (upper, lower) = (build(true), build(false));
        let codes = |rows: &[(Vec<usize>, i8)]| {
            rows.iter()
                .map(|(p, _)| (0..q).map(|s| p[e + 2 * s] * m + p[e + 2 * s + 1]).collect())
                .collect()
        };
        Self {
            q,
            e,
            upper_pairs: codes(&upper),
            lower_pairs: codes(&lower),
            upper,
            lower,
        }
    }

    /// Size of the index subsets the pattern is applied to.
    pub fn size(&self) -> usize {
        2 * self.q + self.e
    }

    /// Multiplicity `2^q · q! · 2^q` of each pattern term.
    pub fn weight(&self) -> f64 {
        let q = self.q as i32;
        let fact: f64 = (1..=self.q).map(|v| v as f64).product();
        2f64.powi(2 * q) * fact
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_deltas() {
        assert_eq!(gen_kronecker_delta(&[0, 1], &[0, 1]), 1);
        assert_eq!(gen_kronecker_delta(&[0, 1], &[1, 0]), -1);
        assert_eq!(gen_kronecker_delta(&[0, 0], &[0, 1]), 0);
        assert_eq!(gen_kronecker_delta(&[0, 1, 2], &[1, 2, 0]), 1);
        assert_eq!(gen_kronecker_delta(&[0, 1, 2], &[0, 2, 1]), -1);
        assert_eq!(gen_kronecker_delta(&[0, 1], &[0, 2]), 0);
    }

    #[test]
    fn symbol_checks_contract() {
        let d = DeltaSymbol::new(4, 2);
        assert!(d.value(&[0, 1], &[1]).is_err());
        assert!(d.value(&[0, 4], &[4, 0]).is_err());
        assert_eq!(d.value(&[3, 1], &[1, 3]).unwrap(), -1);
    }

    #[test]
    fn subset_counts() {
        assert_eq!(antisymmetric_index_pairs(4, 2).len(), 1);
        assert_eq!(antisymmetric_index_pairs(4, 2)[0].signed_permutations().len(), 24);
        assert_eq!(antisymmetric_index_pairs(5, 2).len(), 5);
        assert!(antisymmetric_index_pairs(3, 2).is_empty());
        assert_eq!(increasing_subsets(7, 3).len(), 35);
        assert_eq!(increasing_subsets(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn pattern_sizes() {
        let p = ContractionPattern::new(3, 0);
        assert_eq!(p.upper.len(), 15);
        assert_eq!(p.lower.len(), 90);
        let p = ContractionPattern::new(1, 2);
        assert_eq!(p.upper.len(), 6);
        assert_eq!(p.lower.len(), 6);
        assert_eq!(ContractionPattern::new(2, 0).weight(), 32.0);
    }

    #[test]
    fn contraction_identity() {
        // δ^{i1..ir}_{j1..jr} summed over i_r = j_r is (n−r+1)·δ of order r−1.
        let n = 5;
        for r in 2..=4 {
            for up in all_tuples(n, r - 1) {
                for lo in all_tuples(n, r - 1) {
                    let mut s = 0i32;
                    for t in 0..n {
                        let mut u = up.clone();
                        u.push(t);
                        let mut l = lo.clone();
                        l.push(t);
                        s += gen_kronecker_delta(&u, &l) as i32;
                    }
                    let expect = (n - r + 1) as i32 * gen_kronecker_delta(&up, &lo) as i32;
                    assert_eq!(s, expect);
                }
            }
        }
    }

    fn all_tuples(n: usize, r: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for _ in 0..r {
            out = out
                .into_iter()
                .flat_map(|t| {
                    (0..n).map(move |i| {
                        let mut t = t.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
        out
    }
}
