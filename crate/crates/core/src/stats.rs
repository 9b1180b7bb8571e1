//! Nonparametric tests for repeated-measures comparisons of encodings.
//!
//! Ties always get mid-ranks with the standard correction terms.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of row-permutation expansions the exact Friedman
/// distribution may cost before falling back to the χ² approximation.
pub const FRIEDMAN_EXACT_BUDGET: usize = 5_000_000;
/// Largest number of nonzero pairs for the exact signed-rank distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 25;
/// Largest sample for the exact (tie-free) Kendall τ distribution.
pub const KENDALL_EXACT_MAX_N: usize = 50;
/// Largest tied sample whose τ null distribution is enumerated over all
/// permutations.
pub const KENDALL_TIED_EXACT_MAX_N: usize = 9;

const P_EPS: f64 = 1e-9;

/// Subjects × conditions matrix with no missing cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedMeasures {
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl RepeatedMeasures {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::InvalidData(format!("need at least 3 subjects, got {}", rows.len())));
        }
        let k = labels.len();
        if k < 2 {
            return Err(Error::InvalidData(format!("need at least 2 conditions, got {k}")));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::InvalidData(format!("subject {i} has {} values, expected {k}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("subject {i} has a missing or non-finite value")));
            }
        }
        Ok(RepeatedMeasures { rows, labels })
    }

    /// Conditions labelled `c1..ck`.
    pub fn unlabeled(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        Self::new(rows, (1..=k).map(|j| format!("c{j}")).collect())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn subjects(&self) -> usize {
        self.rows.len()
    }

    pub fn conditions(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// 1-based ranks with ties sharing their mean rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = r;
        }
        i = j;
    }
    ranks
}

/// Sizes of each group of equal values.
fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: usize,
    /// Exact permutation p when `exact`, otherwise the χ² tail.
    pub p: f64,
    /// Upper χ² tail with `df` degrees of freedom.
    pub p_asymptotic: f64,
    pub exact: bool,
}

fn friedman_statistic(rank_sums: &[f64], n: usize, k: usize, correction: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let mean = (kf + 1.0) / 2.0;
    let ss: f64 = rank_sums.iter().map(|r| (r / nf - mean).powi(2)).sum();
    12.0 * nf / (kf * (kf + 1.0)) * ss / correction
}

pub fn friedman(data: &RepeatedMeasures) -> FriedmanResult {
    let (n, k) = (data.subjects(), data.conditions());
    let df = k - 1;
    let ranks: Vec<Vec<f64>> = data.rows.iter().map(|r| mid_ranks(r)).collect();
    let ties: f64 = data
        .rows
        .iter()
        .flat_map(|r| tie_groups(r))
        .map(|t| (t * t * t - t) as f64)
        .sum();
    let correction = 1.0 - ties / (n as f64 * (k * k * k - k) as f64);
    if correction <= 1e-12 {
        return FriedmanResult {
            chi2: 0.0,
            df,
            p: 1.0,
            p_asymptotic: 1.0,
            exact: true,
        };
    }
    let mut sums = vec![0.0; k];
    for r in &ranks {
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v;
        }
    }
    let chi2 = friedman_statistic(&sums, n, k, correction);
    let p_asymptotic = clamp_p(ChiSquared::new(df as f64).expect("df >= 1").sf(chi2));
    match friedman_exact_p(&ranks, chi2, correction) {
        Some(p) => FriedmanResult {
            chi2,
            df,
            p,
            p_asymptotic,
            exact: true,
        },
        None => FriedmanResult {
            chi2,
            df,
            p: p_asymptotic,
            p_asymptotic,
            exact: false,
        },
    }
}

/// Distinct orderings of one row's (doubled, integer) ranks with their
/// probabilities under exchangeability.
fn row_arrangements(row: &[i64]) -> Vec<(Vec<i64>, f64)> {
    fn rec(rest: &mut Vec<i64>, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        let mut seen: Vec<i64> = Vec::new();
        for i in 0..rest.len() {
            let v = rest[i];
            if seen.contains(&v) {
                continue;
            }
            seen.push(v);
            rest.remove(i);
            cur.push(v);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut row.to_vec(), &mut Vec::new(), &mut out);
    let w = 1.0 / out.len() as f64;
    out.into_iter().map(|a| (a, w)).collect()
}

/// Exact upper tail of the Friedman statistic, conditioning on each row's
/// tie pattern. `None` when the state space would exceed the budget.
fn friedman_exact_p(ranks: &[Vec<f64>], chi2_obs: f64, correction: f64) -> Option<f64> {
    let (n, k) = (ranks.len(), ranks[0].len());
    let mut dist: HashMap<Vec<i64>, f64> = HashMap::from([(vec![0i64; k], 1.0)]);
    let mut work = 0usize;
    for row in ranks {
        let doubled: Vec<i64> = row.iter().map(|r| (2.0 * r).round() as i64).collect();
        let arrangements = row_arrangements(&doubled);
        work = work.saturating_add(dist.len().saturating_mul(arrangements.len()));
        if work > FRIEDMAN_EXACT_BUDGET {
            return None;
        }
        let mut next: HashMap<Vec<i64>, f64> = HashMap::with_capacity(dist.len() * arrangements.len());
        for (state, p) in &dist {
            for (a, w) in &arrangements {
                let s: Vec<i64> = state.iter().zip(a).map(|(x, y)| x + y).collect();
                *next.entry(s).or_insert(0.0) += p * w;
            }
        }
        dist = next;
    }
    let tail: f64 = dist
        .iter()
        .filter(|(sums, _)| {
            let sums: Vec<f64> = sums.iter().map(|&s| s as f64 / 2.0).collect();
            friedman_statistic(&sums, n, k, correction) >= chi2_obs * (1.0 - P_EPS) - P_EPS
        })
        .map(|(_, p)| p)
        .sum();
    Some(clamp_p(tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectSize {
    Negligible,
    Small,
    Moderate,
    Large,
}

/// Kendall's coefficient of concordance, `χ² / (n (k − 1))`.
pub fn kendalls_w(data: &RepeatedMeasures) -> f64 {
    let f = friedman(data);
    (f.chi2 / (data.subjects() as f64 * f.df as f64)).clamp(0.0, 1.0)
}

/// Bands: below 0.1 negligible, then small, moderate from 0.3, large from
/// 0.5.
pub fn classify_w(w: f64) -> EffectSize {
    if w < 0.1 {
        EffectSize::Negligible
    } else if w < 0.3 {
        EffectSize::Small
    } else if w < 0.5 {
        EffectSize::Moderate
    } else {
        EffectSize::Large
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `x` tends to exceed `y`.
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences `x − y`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub p: f64,
    pub exact: bool,
}

pub const WILCOXON_MIN_PAIRS: usize = 5;

pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alternative: Alternative) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidData(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < WILCOXON_MIN_PAIRS {
        return Err(Error::InvalidData(format!(
            "need at least {WILCOXON_MIN_PAIRS} pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value".into()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            w_plus: 0.0,
            w_minus: 0.0,
            n: 0,
            p: 1.0,
            exact: true,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = mid_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let (p, exact) = if n <= WILCOXON_EXACT_MAX_N {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        // probability of each doubled positive-rank sum under random signs
        let mut dist = vec![0.0f64; max + 1];
        dist[0] = 1.0;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                let v = dist[s] * 0.5;
                dist[s] = v;
                dist[s + r] += v;
            }
            reach += r;
        }
        let obs = (2.0 * w_plus).round() as usize;
        let upper: f64 = dist[obs..].iter().sum();
        let lower: f64 = dist[..=obs].iter().sum();
        let p = match alternative {
            Alternative::Greater => upper,
            Alternative::Less => lower,
            Alternative::TwoSided => 2.0 * upper.min(lower),
        };
        (clamp_p(p), true)
    } else {
        let nf = n as f64;
        let ties: f64 = tie_groups(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let mean = total / 2.0;
        let p = if var <= 0.0 {
            1.0
        } else {
            let sd = var.sqrt();
            let norm = std_normal();
            let upper = norm.sf((w_plus - mean - 0.5) / sd);
            let lower = norm.cdf((w_plus - mean + 0.5) / sd);
            match alternative {
                Alternative::Greater => upper,
                Alternative::Less => lower,
                Alternative::TwoSided => 2.0 * upper.min(lower),
            }
        };
        (clamp_p(p), false)
    };
    Ok(WilcoxonResult {
        w_plus,
        w_minus,
        n,
        p,
        exact,
    })
}

/// Bonferroni adjustment for `m` comparisons: `min(1, m p)`.
pub fn bonferroni(pvals: &[f64], m: usize) -> Vec<f64> {
    pvals.iter().map(|p| (p * m as f64).min(1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauStrength {
    Weak,
    Moderate,
    Strong,
}

pub const TAU_MODERATE_MIN: f64 = 0.26;
pub const TAU_MODERATE_MAX: f64 = 0.49;

pub fn classify_tau(tau: f64) -> TauStrength {
    let a = tau.abs();
    if a < TAU_MODERATE_MIN {
        TauStrength::Weak
    } else if a <= TAU_MODERATE_MAX {
        TauStrength::Moderate
    } else {
        TauStrength::Strong
    }
}

pub fn is_moderate(tau: f64) -> bool {
    classify_tau(tau) == TauStrength::Moderate
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallResult {
    /// τ-b.
    pub tau: f64,
    /// Concordant minus discordant pairs.
    pub s: i64,
    /// Two-sided.
    pub p: f64,
    pub exact: bool,
    pub strength: TauStrength,
}

pub const KENDALL_MIN_N: usize = 3;

pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<KendallResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidData(format!("samples differ in length: {} vs {}", n, y.len())));
    }
    if n < KENDALL_MIN_N {
        return Err(Error::InvalidData(format!("need at least {KENDALL_MIN_N} observations, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value".into()));
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
            if x[i] == x[j] || y[i] == y[j] {
                continue;
            }
            if s > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let pair_ties = |v: &[f64]| -> Vec<usize> { tie_groups(v).into_iter().filter(|&t| t > 1).collect() };
    let (tx, ty) = (pair_ties(x), pair_ties(y));
    let n0 = (n * (n - 1) / 2) as f64;
    let n1: f64 = tx.iter().map(|&t| (t * (t - 1) / 2) as f64).sum();
    let n2: f64 = ty.iter().map(|&t| (t * (t - 1) / 2) as f64).sum();
    if n1 == n0 || n2 == n0 {
        return Err(Error::InvalidData("τ is undefined for a constant sample".into()));
    }
    let s = concordant - discordant;
    let tau = (s as f64 / ((n0 - n1) * (n0 - n2)).sqrt()).clamp(-1.0, 1.0);

    let (p, exact) = if tx.is_empty() && ty.is_empty() && n <= KENDALL_EXACT_MAX_N {
        (kendall_exact_p(n, discordant as usize), true)
    } else if n <= KENDALL_TIED_EXACT_MAX_N {
        (kendall_permutation_p(x, y, s), true)
    } else {
        let nf = n as f64;
        let v = |ts: &[usize], f: &dyn Fn(f64) -> f64| -> f64 { ts.iter().map(|&t| f(t as f64)).sum() };
        let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
        let vt = v(&tx, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
        let vu = v(&ty, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
        let v1 = v(&tx, &|t| t * (t - 1.0)) * v(&ty, &|t| t * (t - 1.0)) / (2.0 * nf * (nf - 1.0));
        let v2 = v(&tx, &|t| t * (t - 1.0) * (t - 2.0)) * v(&ty, &|t| t * (t - 1.0) * (t - 2.0))
            / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
        let var = (v0 - vt - vu) / 18.0 + v1 + v2;
        let p = if var <= 0.0 {
            1.0
        } else {
            2.0 * std_normal().sf((s as f64).abs() / var.sqrt())
        };
        (clamp_p(p), false)
    };
    Ok(KendallResult {
        tau,
        s,
        p,
        exact,
        strength: classify_tau(tau),
    })
}

fn kendall_s(x: &[f64], y: &[f64], order: &[usize]) -> i64 {
    let mut s = 0i64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let a = x[i] - x[j];
            let b = y[order[i]] - y[order[j]];
            if a != 0.0 && b != 0.0 {
                s += if (a > 0.0) == (b > 0.0) { 1 } else { -1 };
            }
        }
    }
    s
}

/// Two-sided p from every pairing of `y` with `x` (Heap's algorithm).
fn kendall_permutation_p(x: &[f64], y: &[f64], s_obs: i64) -> f64 {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let (mut hits, mut total) = (0u64, 0u64);
    let mut tally = |order: &[usize]| {
        total += 1;
        if kendall_s(x, y, order).abs() >= s_obs.abs() {
            hits += 1;
        }
    };
    tally(&order);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            tally(&order);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    clamp_p(hits as f64 / total as f64)
}

/// Two-sided exact p for `discordant` inversions among `n` untied items,
/// from the Mahonian distribution of inversion counts.
fn kendall_exact_p(n: usize, discordant: usize) -> f64 {
    let max = n * (n - 1) / 2;
    let mut dist = vec![0.0f64; max + 1];
    dist[0] = 1.0;
    let mut reach = 0;
    for m in 2..=n {
        // convolve with the uniform distribution on 0..m
        let mut next = vec![0.0f64; max + 1];
        let w = 1.0 / m as f64;
        let mut window = 0.0;
        for s in 0..=(reach + m - 1) {
            if s <= reach {
                window += dist[s];
            }
            if s >= m && s - m <= reach {
                window -= dist[s - m];
            }
            next[s] = window * w;
        }
        reach += m - 1;
        dist = next;
    }
    let lo = discordant.min(max - discordant);
    let tail: f64 = dist[..=lo].iter().sum();
    clamp_p(2.0 * tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn mid_rank_ties() {
        assert_eq!(mid_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn friedman_no_variation() {
        let d = RepeatedMeasures::unlabeled(vec![vec![1.0, 1.0, 1.0]; 5]).unwrap();
        let f = friedman(&d);
        assert_eq!((f.chi2, f.p), (0.0, 1.0));
        assert_eq!(kendalls_w(&d), 0.0);
    }

    #[test]
    fn friedman_perfect_agreement() {
        let d = RepeatedMeasures::unlabeled(vec![vec![1.0, 2.0, 3.0]; 4]).unwrap();
        let f = friedman(&d);
        assert_relative_eq!(f.chi2, 8.0, max_relative = 1e-12);
        assert_eq!(f.df, 2);
        assert!((f.p_asymptotic - 0.0183).abs() < 5e-5);
        assert!(f.exact);
        assert_relative_eq!(f.p, 6.0 / 1296.0, max_relative = 1e-9);
        assert_relative_eq!(kendalls_w(&d), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn friedman_falls_back_for_large_designs() {
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 13) % 11) as f64).collect())
            .collect();
        let f = friedman(&RepeatedMeasures::unlabeled(rows).unwrap());
        assert!(!f.exact);
        assert_eq!(f.p, f.p_asymptotic);
    }

    #[test]
    fn data_validation() {
        assert!(RepeatedMeasures::unlabeled(vec![vec![1.0, 2.0]; 2]).is_err());
        assert!(RepeatedMeasures::unlabeled(vec![vec![1.0]; 4]).is_err());
        assert!(RepeatedMeasures::unlabeled(vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(RepeatedMeasures::unlabeled(vec![vec![1.0, f64::NAN]; 3]).is_err());
    }

    #[test]
    fn w_bands() {
        assert_eq!(classify_w(0.05), EffectSize::Negligible);
        assert_eq!(classify_w(0.1), EffectSize::Small);
        assert_eq!(classify_w(0.3), EffectSize::Moderate);
        assert_eq!(classify_w(0.5), EffectSize::Large);
    }

    #[test]
    fn wilcoxon_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&x, &x, Alternative::TwoSided).unwrap();
        assert_eq!(r.p, 1.0);
        let y: Vec<f64> = x.iter().map(|v| v - 0.5 * v).collect();
        let r = wilcoxon_signed_rank(&x, &y, Alternative::Greater).unwrap();
        assert_relative_eq!(r.p, 1.0 / 64.0, max_relative = 1e-12);
        assert_eq!(r.w_plus, 21.0);
        let r = wilcoxon_signed_rank(&x, &y, Alternative::TwoSided).unwrap();
        assert_relative_eq!(r.p, 2.0 / 64.0, max_relative = 1e-12);
        assert!(wilcoxon_signed_rank(&x[..4], &y[..4], Alternative::TwoSided).is_err());
        assert!(wilcoxon_signed_rank(&x, &y[..5], Alternative::TwoSided).is_err());
    }

    #[test]
    fn wilcoxon_large_uses_normal() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 + 0.3 * ((i * 5) % 7) as f64).collect();
        let y: Vec<f64> = (0..40).map(|i| i as f64 + 0.25 * ((i * 3) % 5) as f64).collect();
        let r = wilcoxon_signed_rank(&x, &y, Alternative::TwoSided).unwrap();
        assert!(!r.exact);
        assert!((0.0..=1.0).contains(&r.p));
    }

    #[test]
    fn bonferroni_rule() {
        assert_eq!(bonferroni(&[0.01, 0.4], 2), vec![0.02, 0.8]);
        assert_eq!(bonferroni(&[0.7], 3), vec![1.0]);
    }

    #[test]
    fn tau_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&x, &x).unwrap().tau, 1.0);
        assert_eq!(kendall_tau(&x, &rev).unwrap().tau, -1.0);
        assert_relative_eq!(kendall_tau(&x, &x).unwrap().p, 2.0 / 120.0, max_relative = 1e-12);
        assert!(kendall_tau(&x, &[1.0; 5]).is_err());
        assert!(kendall_tau(&x[..2], &x[..2]).is_err());
        assert!(is_moderate(0.262));
        assert!(is_moderate(0.26) && is_moderate(0.49) && is_moderate(-0.49));
        assert!(!is_moderate(0.2599) && !is_moderate(0.4901));
    }

    #[test]
    fn tau_tied_small_is_enumerated() {
        let r = kendall_tau(&[1.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 2.0, 3.0, 5.0]).unwrap();
        assert!(r.exact);
        assert!(r.tau > 0.0 && r.tau < 1.0);
        // 8 of 120 pairings reach |S| = 8
        assert_eq!(r.s, 8);
        assert!((r.p - 8.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn tau_tied_large_uses_normal() {
        let x: Vec<f64> = (0..12).map(|i| (i / 2) as f64).collect();
        let y: Vec<f64> = (0..12).map(|i| ((i * 7) % 12) as f64).collect();
        assert!(!kendall_tau(&x, &y).unwrap().exact);
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (3usize..6, 2usize..5).prop_flat_map(|(n, k)| {
            prop::collection::vec(prop::collection::vec(0u8..6, k).prop_map(|r| r.into_iter().map(f64::from).collect()), n)
        })
    }

    proptest! {
        #[test]
        fn friedman_row_monotone_invariant(rows in matrix()) {
            let d = RepeatedMeasures::unlabeled(rows.clone()).unwrap();
            let t = RepeatedMeasures::unlabeled(
                rows.iter().enumerate().map(|(i, r)| r.iter().map(|v| (v + i as f64).exp() * 3.0).collect()).collect(),
            ).unwrap();
            let (a, b) = (friedman(&d), friedman(&t));
            prop_assert!((a.chi2 - b.chi2).abs() < 1e-9);
            prop_assert!((a.p - b.p).abs() < 1e-9);
            prop_assert!((kendalls_w(&d) - kendalls_w(&t)).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&a.p));
            prop_assert!((0.0..=1.0).contains(&kendalls_w(&d)));
        }

        #[test]
        fn tau_symmetric_and_monotone_invariant(
            x in prop::collection::vec(-5i32..5, 3..12),
            seed in prop::collection::vec(-5i32..5, 12),
        ) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = seed[..x.len()].iter().map(|&v| f64::from(v)).collect();
            let (Ok(a), Ok(b)) = (kendall_tau(&x, &y), kendall_tau(&y, &x)) else {
                return Ok(());
            };
            prop_assert_eq!(a.tau, b.tau);
            let xt: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            let c = kendall_tau(&xt, &y).unwrap();
            prop_assert!((a.tau - c.tau).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.p));
        }

        #[test]
        fn bonferroni_never_decreases(p in prop::collection::vec(0.0..=1.0f64, 1..10), m in 1usize..20) {
            for (a, b) in p.iter().zip(bonferroni(&p, m)) {
                prop_assert!(b >= *a && b <= 1.0);
            }
        }

        #[test]
        fn wilcoxon_p_in_unit_interval(d in prop::collection::vec(-3i32..4, 5..30)) {
            let x: Vec<f64> = d.iter().map(|&v| f64::from(v)).collect();
            let y = vec![0.0; x.len()];
            for alt in [Alternative::TwoSided, Alternative::Greater, Alternative::Less] {
                let r = wilcoxon_signed_rank(&x, &y, alt).unwrap();
                prop_assert!((0.0..=1.0).contains(&r.p));
            }
        }
    }
}
