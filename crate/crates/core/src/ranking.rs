//! Within-SDS %-ranks and top-scientist selection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::ProductivityIndicator;
use crate::error::{Error, Result};
use crate::indicators::ResearcherMetrics;

/// %-rank of `subject` among `values`: 100 × (1 − G/(N−1)), where G counts the
/// other subjects with a strictly greater value. A lone subject scores 50.
pub fn percent_rank<S: PartialEq + std::fmt::Debug>(
    values: &[(S, f64)],
    subject: &S,
) -> Result<f64> {
    let own = values
        .iter()
        .find(|(s, _)| s == subject)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::SubjectAbsent(format!("{subject:?}")))?;
    let n = values.len();
    if n == 1 {
        return Ok(50.0);
    }
    let greater = values.iter().filter(|(_, v)| *v > own).count();
    Ok(100.0 * (1.0 - greater as f64 / (n - 1) as f64))
}

/// %-ranks of every value, in input order. O(n log n).
pub fn percent_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![50.0];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    values
        .iter()
        .map(|v| {
            let greater = n - sorted.partition_point(|x| x <= v);
            100.0 * (1.0 - greater as f64 / (n - 1) as f64)
        })
        .collect()
}

/// Split of one SDS's publishing researchers into top scientists and the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdsPartition {
    pub sds_id: String,
    pub top: BTreeSet<String>,
    pub rest: BTreeSet<String>,
    /// `None` in intersection mode.
    pub indicator: Option<ProductivityIndicator>,
    pub fraction: f64,
    /// ceil(fraction × N); `top` exceeds it only through boundary ties.
    pub target_size: usize,
}

impl SdsPartition {
    pub fn is_top(&self, researcher_id: &str) -> bool {
        self.top.contains(researcher_id)
    }

    /// Researchers added beyond the target size by boundary ties.
    pub fn tie_inflation(&self) -> usize {
        self.top.len().saturating_sub(self.target_size)
    }
}

fn target_size(fraction: f64, n: usize) -> usize {
    // Guard against products like 0.1 * 30 = 3.0000000000000004.
    let k = (fraction * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

fn publishing<'a>(metrics: &[&'a ResearcherMetrics]) -> Vec<&'a ResearcherMetrics> {
    metrics.iter().copied().filter(|m| m.p >= 1).collect()
}

fn sds_of(metrics: &[&ResearcherMetrics]) -> Result<String> {
    let first = metrics
        .first()
        .ok_or(Error::Empty("SDS has no publishing researchers"))?;
    if let Some(other) = metrics.iter().find(|m| m.sds_id != first.sds_id) {
        return Err(Error::Internal(format!(
            "partition mixes SDS {} and {}",
            first.sds_id, other.sds_id
        )));
    }
    Ok(first.sds_id.clone())
}

fn top_ids(
    members: &[&ResearcherMetrics],
    indicator: ProductivityIndicator,
    k: usize,
) -> BTreeSet<String> {
    let mut values: Vec<f64> = members.iter().map(|m| m.productivity(indicator)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let threshold = values[k - 1];
    members
        .iter()
        .filter(|m| m.productivity(indicator) >= threshold)
        .map(|m| m.researcher_id.clone())
        .collect()
}

/// Top `fraction` of the SDS by one productivity indicator. Researchers tied
/// with the k-th largest value are all included.
pub fn select_top_scientists(
    metrics: &[&ResearcherMetrics],
    indicator: ProductivityIndicator,
    fraction: f64,
) -> Result<SdsPartition> {
    let members = publishing(metrics);
    let sds_id = sds_of(&members)?;
    let k = target_size(fraction, members.len());
    let top = top_ids(&members, indicator, k);
    let rest = members
        .iter()
        .filter(|m| !top.contains(&m.researcher_id))
        .map(|m| m.researcher_id.clone())
        .collect();
    Ok(SdsPartition {
        sds_id,
        top,
        rest,
        indicator: Some(indicator),
        fraction,
        target_size: k,
    })
}

/// Researchers in the top group under both P and FP.
pub fn select_top_scientists_intersection(
    metrics: &[&ResearcherMetrics],
    fraction: f64,
) -> Result<SdsPartition> {
    let members = publishing(metrics);
    let sds_id = sds_of(&members)?;
    let k = target_size(fraction, members.len());
    let by_p = top_ids(&members, ProductivityIndicator::P, k);
    let by_fp = top_ids(&members, ProductivityIndicator::FP, k);
    let top: BTreeSet<String> = by_p.intersection(&by_fp).cloned().collect();
    let rest = members
        .iter()
        .filter(|m| !top.contains(&m.researcher_id))
        .map(|m| m.researcher_id.clone())
        .collect();
    Ok(SdsPartition {
        sds_id,
        top,
        rest,
        indicator: None,
        fraction,
        target_size: k,
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// mean(top) − mean(rest).
pub fn mean_rank_difference(top_ranks: &[f64], rest_ranks: &[f64]) -> Result<f64> {
    if top_ranks.is_empty() {
        return Err(Error::Empty("top-scientist ranks"));
    }
    if rest_ranks.is_empty() {
        return Err(Error::Empty("rest-of-population ranks"));
    }
    Ok(mean(top_ranks) - mean(rest_ranks))
}
