//! Log-log OLS with HC1 robust standard errors, significance stars and the
//! rank-sum distance criterion.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance class of a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `***` below 0.01, `**` below 0.05, `*` below 0.10.
pub fn significance_stars(p_value: f64) -> Result<Stars> {
    if !(0.0..=1.0).contains(&p_value) {
        return Err(Error::InvalidProbability(p_value));
    }
    Ok(if p_value < 0.01 {
        Stars::Three
    } else if p_value < 0.05 {
        Stars::Two
    } else if p_value < 0.10 {
        Stars::One
    } else {
        Stars::None
    })
}

/// Fit of ln c = intercept_log + gamma · ln p.
///
/// `intercept_log` is the natural logarithm of the power-law prefactor.
/// `stars` refer to the test of gamma = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub gamma: f64,
    pub intercept_log: f64,
    pub robust_se: f64,
    pub p_gamma_zero: f64,
    pub p_gamma_one: f64,
    pub stars: Stars,
    pub adj_r2: f64,
    pub pearson_log: f64,
    pub n_obs: usize,
}

/// Two-sided p-value of `estimate == hypothesis` under a t distribution.
fn two_sided_p(estimate: f64, hypothesis: f64, se: f64, dof: f64) -> Result<f64> {
    let diff = estimate - hypothesis;
    if se == 0.0 {
        return Ok(if diff == 0.0 { 1.0 } else { 0.0 });
    }
    let t = (diff / se).abs();
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Internal(e.to_string()))?;
    Ok((2.0 * dist.sf(t)).clamp(0.0, 1.0))
}

/// OLS of ln c on ln p with an intercept.
///
/// The slope's robust standard error is the HC1 sandwich estimator,
/// `n/(n−2) · Σ (x_i − x̄)² e_i² / Sxx²` on the log scale.
pub fn ols_loglog(pairs: &[(f64, f64)]) -> Result<RegressionResult> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::TooFewObservations(n));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for &(p, c) in pairs {
        if !(p > 0.0 && c > 0.0 && p.is_finite() && c.is_finite()) {
            return Err(Error::NonPositiveInput(p, c));
        }
        xs.push(p.ln());
        ys.push(c.ln());
    }
    let nf = n as f64;
    let x_bar = xs.iter().sum::<f64>() / nf;
    let y_bar = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - x_bar, y - y_bar);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= f64::EPSILON * nf * x_bar.abs().max(1.0) {
        return Err(Error::DegenerateDesign);
    }
    let gamma = sxy / sxx;
    let intercept_log = y_bar - gamma * x_bar;

    let mut ssr = 0.0;
    let mut meat = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let e = y - intercept_log - gamma * x;
        let dx = x - x_bar;
        ssr += e * e;
        meat += dx * dx * e * e;
    }
    let dof = nf - 2.0;
    let robust_se = (nf / dof * meat / (sxx * sxx)).sqrt();

    // A constant response has no variance to explain.
    let (r2, pearson_log) = if syy > 0.0 {
        (
            (1.0 - ssr / syy).clamp(0.0, 1.0),
            (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        )
    } else {
        (0.0, 0.0)
    };
    let adj_r2 = 1.0 - (1.0 - r2) * (nf - 1.0) / dof;

    let p_gamma_zero = two_sided_p(gamma, 0.0, robust_se, dof)?;
    let p_gamma_one = two_sided_p(gamma, 1.0, robust_se, dof)?;
    Ok(RegressionResult {
        gamma,
        intercept_log,
        robust_se,
        p_gamma_zero,
        p_gamma_one,
        stars: significance_stars(p_gamma_zero)?,
        adj_r2,
        pearson_log,
        n_obs: n,
    })
}

/// Rank-sum figures for one group.
///
/// Ranks run 1..N ascending in quality, ties take their mean position, so sums
/// are multiples of 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRankSum {
    pub size: usize,
    /// Sum of the top `size` positions.
    pub r_max: f64,
    /// Sum of the bottom `size` positions.
    pub r_min: f64,
    /// Actual rank sum.
    pub r_eff: f64,
    pub r_diff: f64,
    /// r_diff / (r_max − r_min), in [0, 1].
    pub normalized_distance: f64,
    /// r_eff − r_min; the Mann-Whitney U of this group against the other.
    pub u_statistic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Top,
    Rest,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    pub top: GroupRankSum,
    pub rest: GroupRankSum,
    /// The group closer to its own maximum-differentiation arrangement.
    pub verdict: Verdict,
}

/// Ranks 1..N ascending, ties receiving the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn position_sum(from: usize, to: usize) -> f64 {
    // Sum of integers from..=to.
    ((from + to) * (to + 1 - from)) as f64 / 2.0
}

fn group(size: usize, n: usize, r_eff: f64) -> GroupRankSum {
    let r_max = position_sum(n - size + 1, n);
    let r_min = position_sum(1, size);
    let r_diff = r_max - r_eff;
    GroupRankSum {
        size,
        r_max,
        r_min,
        r_eff,
        r_diff,
        normalized_distance: r_diff / (r_max - r_min),
        u_statistic: r_eff - r_min,
    }
}

/// Compares the two groups by how far each sits from occupying the top positions.
///
/// Items are `(is_top, quality)`.
pub fn rank_sum_distance(items: &[(bool, f64)]) -> Result<RankSumResult> {
    let n = items.len();
    let n_top = items.iter().filter(|(t, _)| *t).count();
    if n_top == 0 {
        return Err(Error::Empty("top group"));
    }
    if n_top == n {
        return Err(Error::Empty("rest group"));
    }
    let values: Vec<f64> = items.iter().map(|(_, q)| *q).collect();
    let ranks = midranks(&values);
    let top_sum: f64 = items
        .iter()
        .zip(&ranks)
        .filter(|((t, _), _)| *t)
        .map(|(_, r)| r)
        .sum();
    let total = position_sum(1, n);
    let top = group(n_top, n, top_sum);
    let rest = group(n - n_top, n, total - top_sum);
    let verdict = match top.normalized_distance.total_cmp(&rest.normalized_distance) {
        std::cmp::Ordering::Less => Verdict::Top,
        std::cmp::Ordering::Greater => Verdict::Rest,
        std::cmp::Ordering::Equal => Verdict::Tie,
    };
    Ok(RankSumResult { top, rest, verdict })
}
