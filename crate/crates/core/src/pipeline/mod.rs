//! The three correlation analyses over an eligible corpus.
//!
//! [`analyze`] applies the field-of-observation filters, computes indicators
//! and runs every analysis, returning an [`AnalysisRun`] from which all report
//! tables are rendered.

mod bundle;
mod tables;

pub use bundle::{
    input_checksums, read_run, write_report_bundle, Manifest, TableEntry, MANIFEST_FILE, RUN_FILE,
};
pub use tables::{build_table, detail_tables, render_table, Cell, Format, Table, TABLE_NAMES};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::config::{EngineConfig, ProductivityIndicator, QualityIndicator};
use crate::corpus::{apply_stability_filter, load_corpus, select_eligible_sds, Corpus};
use crate::error::{Error, Result};
use crate::indicators::{
    build_baselines, publication_quality, researcher_metrics_with, ResearcherMetrics,
};
use crate::ranking::{
    percent_ranks, select_top_scientists, select_top_scientists_intersection, SdsPartition,
};
use crate::stats::{ols_loglog, rank_sum_distance, RankSumResult, RegressionResult, Verdict};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TOTAL_LABEL: &str = "Total";

/// Dependent variable of the power-law regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionMode {
    /// Sum of normalized citations over all publications.
    TotalCitations,
    /// Normalized citations of the best publication.
    BestPublication,
}

/// Which publications characterise a researcher's quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Mean over all publications.
    AllPublications,
    /// Best publication only.
    BestPublication,
}

/// How top scientists are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Single(ProductivityIndicator),
    /// Top under both P and FP.
    Intersection,
}

impl Selection {
    pub fn label(self) -> &'static str {
        match self {
            Selection::Single(p) => p.label(),
            Selection::Intersection => "P&FP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub uda_id: String,
    pub n_subjects: usize,
    pub result: Option<RegressionResult>,
    /// Why `result` is absent.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTable {
    pub mode: RegressionMode,
    /// One row per UDA in id order, then the pooled Total row.
    pub rows: Vec<RegressionRow>,
}

/// Rank sums of the two groups for one quality indicator in one SDS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRanks {
    pub n_top: usize,
    pub n_rest: usize,
    pub sum_top: f64,
    pub sum_rest: f64,
}

impl GroupRanks {
    fn add(&mut self, other: &GroupRanks) {
        self.n_top += other.n_top;
        self.n_rest += other.n_rest;
        self.sum_top += other.sum_top;
        self.sum_rest += other.sum_rest;
    }

    /// Mean %-rank of top minus mean %-rank of rest; absent if a group is empty.
    pub fn mean_difference(&self) -> Option<f64> {
        (self.n_top > 0 && self.n_rest > 0)
            .then(|| self.sum_top / self.n_top as f64 - self.sum_rest / self.n_rest as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdsComparison {
    pub sds_id: String,
    pub uda_id: String,
    pub n_top: usize,
    pub n_rest: usize,
    /// Researchers admitted to the top group by boundary ties.
    pub tie_inflation: usize,
    /// Indexed like [`QualityIndicator::ALL`].
    pub quality: [Option<GroupRanks>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UdaComparison {
    pub uda_id: String,
    pub eligible_sds: usize,
    /// SDS with a usable partition.
    pub compared_sds: usize,
    pub mean_difference: [Option<f64>; 3],
    /// SDS where the top group's mean %-rank exceeds the rest's.
    pub sds_top_greater: [usize; 3],
}

/// Top-vs-rest comparison for one selection and scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub selection: Selection,
    pub scope: Scope,
    pub sds_rows: Vec<SdsComparison>,
    pub uda_rows: Vec<UdaComparison>,
    pub total: UdaComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdsRankSum {
    pub sds_id: String,
    pub uda_id: String,
    pub result: RankSumResult,
}

/// Rank-sum verdicts for one (selection, quality) pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSumPairing {
    pub selection: Selection,
    pub quality: QualityIndicator,
    pub sds: Vec<SdsRankSum>,
}

impl RankSumPairing {
    /// SDS per UDA where the verdict favours the rest, with a Total entry.
    pub fn rest_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for row in &self.sds {
            if row.result.verdict == Verdict::Rest {
                *out.entry(row.uda_id.clone()).or_insert(0) += 1;
                *out.entry(TOTAL_LABEL.to_owned()).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Column order of the rank-sum count table.
pub const RANK_SUM_PAIRINGS: [(ProductivityIndicator, QualityIndicator); 6] = [
    (ProductivityIndicator::P, QualityIndicator::QiCPerc),
    (ProductivityIndicator::P, QualityIndicator::QiCAve),
    (ProductivityIndicator::P, QualityIndicator::QiIf),
    (ProductivityIndicator::FP, QualityIndicator::QiCPerc),
    (ProductivityIndicator::FP, QualityIndicator::QiCAve),
    (ProductivityIndicator::FP, QualityIndicator::QiIf),
];

/// Per-researcher output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearcherRow {
    pub metrics: ResearcherMetrics,
    pub uda_id: String,
    /// Within-SDS %-ranks among publishing researchers.
    pub rank_p: Option<f64>,
    pub rank_fp: Option<f64>,
    /// %-ranks of mean publication quality, indexed like [`QualityIndicator::ALL`].
    pub rank_quality: [Option<f64>; 3],
}

/// Everything needed to re-render the report tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRun {
    pub engine_version: String,
    pub config: EngineConfig,
    /// SHA-256 of each input file; empty for in-memory corpora.
    pub input_checksums: BTreeMap<String, String>,
    pub eligible_sds: Vec<String>,
    /// Eligible SDS per UDA.
    pub sds_per_uda: BTreeMap<String, usize>,
    pub researchers: Vec<ResearcherRow>,
    pub regression_total: RegressionTable,
    pub regression_best: RegressionTable,
    /// All-publication comparisons, one per selection.
    pub comparisons: Vec<ComparisonTable>,
    /// Best-publication comparisons, one per selection.
    pub comparisons_best: Vec<ComparisonTable>,
    /// Rank-sum pairings in [`RANK_SUM_PAIRINGS`] order, then the configured
    /// intersection pairing when enabled.
    pub rank_sums: Vec<RankSumPairing>,
    pub warnings: Vec<String>,
}

impl AnalysisRun {
    /// Selection used for per-UDA and per-SDS detail tables.
    pub fn primary_selection(&self) -> Selection {
        if self.config.intersection_mode {
            Selection::Intersection
        } else {
            Selection::Single(self.config.productivity_indicator)
        }
    }

    pub fn comparison(&self, selection: Selection, scope: Scope) -> Option<&ComparisonTable> {
        let list = match scope {
            Scope::AllPublications => &self.comparisons,
            Scope::BestPublication => &self.comparisons_best,
        };
        list.iter().find(|c| c.selection == selection)
    }

    pub fn rank_sum(
        &self,
        selection: Selection,
        quality: QualityIndicator,
    ) -> Option<&RankSumPairing> {
        self.rank_sums
            .iter()
            .find(|r| r.selection == selection && r.quality == quality)
    }
}

/// Indicator values of the eligible population, grouped by SDS.
pub struct AnalysisContext<'a> {
    pub corpus: &'a Corpus,
    pub config: &'a EngineConfig,
    /// Metrics of researchers in eligible SDS, keyed by SDS.
    pub by_sds: BTreeMap<String, Vec<ResearcherMetrics>>,
}

impl<'a> AnalysisContext<'a> {
    /// Filters the corpus and computes indicators. The returned context borrows
    /// the filtered corpus, which the caller must keep alive.
    pub fn new(filtered: &'a Corpus, config: &'a EngineConfig) -> Result<Self> {
        let eligible = select_eligible_sds(filtered, config.min_publishing_fraction);
        let baselines = build_baselines(filtered);
        let quality = publication_quality(filtered, &baselines)?;
        let metrics = researcher_metrics_with(filtered, &quality);
        let mut by_sds: BTreeMap<String, Vec<ResearcherMetrics>> =
            eligible.iter().map(|s| (s.clone(), Vec::new())).collect();
        for m in metrics {
            if let Some(v) = by_sds.get_mut(&m.sds_id) {
                v.push(m);
            }
        }
        Ok(AnalysisContext {
            corpus: filtered,
            config,
            by_sds,
        })
    }

    fn uda_of(&self, sds: &str) -> String {
        self.corpus
            .classification()
            .uda_of(sds)
            .expect("sds validated at load")
            .to_owned()
    }

    /// UDA ids having at least one eligible SDS.
    fn udas(&self) -> BTreeSet<String> {
        self.by_sds.keys().map(|s| self.uda_of(s)).collect()
    }

    fn partition(
        &self,
        members: &[ResearcherMetrics],
        selection: Selection,
    ) -> Result<SdsPartition> {
        let refs: Vec<&ResearcherMetrics> = members.iter().collect();
        match selection {
            Selection::Single(p) => select_top_scientists(&refs, p, self.config.top_fraction),
            Selection::Intersection => {
                select_top_scientists_intersection(&refs, self.config.top_fraction)
            }
        }
    }
}

/// Power-law regression of C_o (or the best publication's qi_c_ave) on P, per UDA
/// and pooled. Researchers without citations are left out.
pub fn run_regression_analysis(ctx: &AnalysisContext<'_>, mode: RegressionMode) -> RegressionTable {
    let mut per_uda: BTreeMap<String, Vec<(f64, f64)>> =
        ctx.udas().into_iter().map(|u| (u, Vec::new())).collect();
    let mut pooled = Vec::new();
    for (sds, members) in &ctx.by_sds {
        let uda = ctx.uda_of(sds);
        for m in members.iter().filter(|m| m.p >= 1 && m.c_o > 0.0) {
            let y = match mode {
                RegressionMode::TotalCitations => m.c_o,
                RegressionMode::BestPublication => m.best_qi_c_ave.unwrap_or(0.0),
            };
            let pair = (m.p as f64, y);
            per_uda.get_mut(&uda).expect("uda listed").push(pair);
            pooled.push(pair);
        }
    }
    let fit = |uda: String, pairs: &[(f64, f64)]| {
        let (result, note) = match ols_loglog(pairs) {
            Ok(r) => (Some(r), None),
            Err(Error::TooFewObservations(_)) => (None, Some("insufficient-data".to_owned())),
            Err(Error::DegenerateDesign) => (None, Some("degenerate-design".to_owned())),
            Err(e) => (None, Some(e.to_string())),
        };
        RegressionRow {
            uda_id: uda,
            n_subjects: pairs.len(),
            result,
            note,
        }
    };
    let mut rows: Vec<RegressionRow> = per_uda
        .into_iter()
        .map(|(u, pairs)| fit(u, &pairs))
        .collect();
    rows.push(fit(TOTAL_LABEL.to_owned(), &pooled));
    RegressionTable { mode, rows }
}

fn quality_value(m: &ResearcherMetrics, q: QualityIndicator, scope: Scope) -> Option<f64> {
    match scope {
        Scope::AllPublications => m.mean(q),
        Scope::BestPublication => m.best(q),
    }
}

/// Mean %-rank difference between top scientists and the rest, for each quality
/// indicator: per SDS, pooled per UDA and pooled overall.
pub fn run_top_vs_rest(
    ctx: &AnalysisContext<'_>,
    selection: Selection,
    scope: Scope,
    warnings: &mut Vec<String>,
) -> Result<ComparisonTable> {
    let mut sds_rows = Vec::new();
    for (sds, members) in &ctx.by_sds {
        let publishing: Vec<ResearcherMetrics> =
            members.iter().filter(|m| m.p >= 1).cloned().collect();
        if publishing.is_empty() {
            warnings.push(format!("SDS {sds}: no publishing researchers; skipped"));
            continue;
        }
        let part = ctx.partition(&publishing, selection)?;
        if part.rest.is_empty() || part.top.is_empty() {
            let msg = format!(
                "SDS {sds}: {} group empty under {} selection; skipped",
                if part.top.is_empty() { "top" } else { "rest" },
                selection.label()
            );
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let mut quality = [None; 3];
        for (qi, q) in QualityIndicator::ALL.iter().enumerate() {
            let population: Vec<(&ResearcherMetrics, f64)> = publishing
                .iter()
                .filter_map(|m| quality_value(m, *q, scope).map(|v| (m, v)))
                .collect();
            if population.is_empty() {
                continue;
            }
            let values: Vec<f64> = population.iter().map(|(_, v)| *v).collect();
            let ranks = percent_ranks(&values);
            let mut g = GroupRanks {
                n_top: 0,
                n_rest: 0,
                sum_top: 0.0,
                sum_rest: 0.0,
            };
            for ((m, _), r) in population.iter().zip(&ranks) {
                if part.is_top(&m.researcher_id) {
                    g.n_top += 1;
                    g.sum_top += r;
                } else {
                    g.n_rest += 1;
                    g.sum_rest += r;
                }
            }
            quality[qi] = Some(g);
        }
        sds_rows.push(SdsComparison {
            sds_id: sds.clone(),
            uda_id: ctx.uda_of(sds),
            n_top: part.top.len(),
            n_rest: part.rest.len(),
            tie_inflation: part.tie_inflation(),
            quality,
        });
    }

    let eligible_per_uda = eligible_per_uda(ctx);
    let aggregate = |uda_id: &str, rows: &[&SdsComparison], eligible: usize| {
        let mut mean_difference = [None; 3];
        let mut sds_top_greater = [0usize; 3];
        for qi in 0..3 {
            let mut pooled = GroupRanks {
                n_top: 0,
                n_rest: 0,
                sum_top: 0.0,
                sum_rest: 0.0,
            };
            for row in rows {
                if let Some(g) = &row.quality[qi] {
                    pooled.add(g);
                    if g.mean_difference().is_some_and(|d| d > 0.0) {
                        sds_top_greater[qi] += 1;
                    }
                }
            }
            mean_difference[qi] = pooled.mean_difference();
        }
        UdaComparison {
            uda_id: uda_id.to_owned(),
            eligible_sds: eligible,
            compared_sds: rows.len(),
            mean_difference,
            sds_top_greater,
        }
    };
    let uda_rows = eligible_per_uda
        .iter()
        .map(|(uda, &eligible)| {
            let rows: Vec<&SdsComparison> = sds_rows.iter().filter(|r| &r.uda_id == uda).collect();
            aggregate(uda, &rows, eligible)
        })
        .collect();
    let all: Vec<&SdsComparison> = sds_rows.iter().collect();
    let total = aggregate(TOTAL_LABEL, &all, ctx.by_sds.len());
    Ok(ComparisonTable {
        selection,
        scope,
        sds_rows,
        uda_rows,
        total,
    })
}

fn eligible_per_uda(ctx: &AnalysisContext<'_>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for sds in ctx.by_sds.keys() {
        *out.entry(ctx.uda_of(sds)).or_insert(0) += 1;
    }
    out
}

/// Rank-sum distance criterion on best-publication quality, per eligible SDS.
pub fn run_rank_sum_analysis(
    ctx: &AnalysisContext<'_>,
    selection: Selection,
    quality: QualityIndicator,
    warnings: &mut Vec<String>,
) -> Result<RankSumPairing> {
    let mut sds_out = Vec::new();
    for (sds, members) in &ctx.by_sds {
        let publishing: Vec<ResearcherMetrics> =
            members.iter().filter(|m| m.p >= 1).cloned().collect();
        if publishing.is_empty() {
            continue;
        }
        let part = ctx.partition(&publishing, selection)?;
        let items: Vec<(bool, f64)> = publishing
            .iter()
            .filter_map(|m| m.best(quality).map(|q| (part.is_top(&m.researcher_id), q)))
            .collect();
        match rank_sum_distance(&items) {
            Ok(result) => sds_out.push(SdsRankSum {
                sds_id: sds.clone(),
                uda_id: ctx.uda_of(sds),
                result,
            }),
            Err(Error::Empty(group)) => warnings.push(format!(
                "SDS {sds}: {group} empty for {}-{} rank sum; skipped",
                selection.label(),
                quality.label()
            )),
            Err(e) => return Err(e),
        }
    }
    Ok(RankSumPairing {
        selection,
        quality,
        sds: sds_out,
    })
}

fn researcher_rows(ctx: &AnalysisContext<'_>) -> Vec<ResearcherRow> {
    let mut rows = Vec::new();
    for (sds, members) in &ctx.by_sds {
        let uda = ctx.uda_of(sds);
        let publishing: Vec<usize> = (0..members.len()).filter(|&i| members[i].p >= 1).collect();
        let rank_of = |values: Vec<Option<f64>>| -> Vec<Option<f64>> {
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            let ranks = percent_ranks(&present);
            let mut it = ranks.into_iter();
            values
                .into_iter()
                .map(|v| v.and_then(|_| it.next()))
                .collect()
        };
        let col = |f: &dyn Fn(&ResearcherMetrics) -> Option<f64>| -> Vec<Option<f64>> {
            let mut out = vec![None; members.len()];
            let ranks = rank_of(publishing.iter().map(|&i| f(&members[i])).collect());
            for (&i, r) in publishing.iter().zip(ranks) {
                out[i] = r;
            }
            out
        };
        let rank_p = col(&|m| Some(m.p as f64));
        let rank_fp = col(&|m| Some(m.fp));
        let rank_q: Vec<Vec<Option<f64>>> = QualityIndicator::ALL
            .iter()
            .map(|&q| col(&|m| m.mean(q)))
            .collect();
        for (i, m) in members.iter().enumerate() {
            rows.push(ResearcherRow {
                metrics: m.clone(),
                uda_id: uda.clone(),
                rank_p: rank_p[i],
                rank_fp: rank_fp[i],
                rank_quality: [rank_q[0][i], rank_q[1][i], rank_q[2][i]],
            });
        }
    }
    rows
}

/// Runs every analysis over an in-memory corpus.
pub fn analyze(corpus: &Corpus, config: &EngineConfig) -> Result<AnalysisRun> {
    config.validate()?;
    let filtered = apply_stability_filter(corpus);
    let ctx = AnalysisContext::new(&filtered, config)?;
    let mut warnings = Vec::new();
    for (sds, info) in corpus.classification().iter() {
        if !corpus.researchers().iter().any(|r| r.sds_id == sds) {
            warnings.push(format!(
                "SDS {sds} ({}) has no researchers; excluded",
                info.name
            ));
        }
    }

    let regression_total = run_regression_analysis(&ctx, RegressionMode::TotalCitations);
    let regression_best = run_regression_analysis(&ctx, RegressionMode::BestPublication);

    let mut selections: Vec<Selection> = ProductivityIndicator::ALL
        .iter()
        .map(|&p| Selection::Single(p))
        .collect();
    if config.intersection_mode {
        selections.push(Selection::Intersection);
    }
    let mut comparisons = Vec::new();
    let mut comparisons_best = Vec::new();
    for &s in &selections {
        comparisons.push(run_top_vs_rest(
            &ctx,
            s,
            Scope::AllPublications,
            &mut warnings,
        )?);
        comparisons_best.push(run_top_vs_rest(
            &ctx,
            s,
            Scope::BestPublication,
            &mut warnings,
        )?);
    }

    let mut rank_sums = Vec::new();
    for (p, q) in RANK_SUM_PAIRINGS {
        rank_sums.push(run_rank_sum_analysis(
            &ctx,
            Selection::Single(p),
            q,
            &mut warnings,
        )?);
    }
    if config.intersection_mode {
        rank_sums.push(run_rank_sum_analysis(
            &ctx,
            Selection::Intersection,
            config.quality_indicator,
            &mut warnings,
        )?);
    }
    // Identical skip messages arise once per pairing.
    let mut seen = BTreeSet::new();
    warnings.retain(|w| seen.insert(w.clone()));

    Ok(AnalysisRun {
        engine_version: ENGINE_VERSION.to_owned(),
        config: config.clone(),
        input_checksums: BTreeMap::new(),
        eligible_sds: ctx.by_sds.keys().cloned().collect(),
        sds_per_uda: eligible_per_uda(&ctx),
        researchers: researcher_rows(&ctx),
        regression_total,
        regression_best,
        comparisons,
        comparisons_best,
        rank_sums,
        warnings,
    })
}

/// Loads the corpus in `input_dir` and runs every analysis, recording input checksums.
pub fn analyze_dir(input_dir: &Path, config: &EngineConfig) -> Result<AnalysisRun> {
    let corpus = load_corpus(input_dir, config)?;
    let mut run = analyze(&corpus, config)?;
    run.input_checksums = input_checksums(input_dir)?;
    Ok(run)
}
