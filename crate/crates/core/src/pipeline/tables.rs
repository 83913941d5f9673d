use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    AnalysisRun, ComparisonTable, RegressionTable, Scope, Selection, RANK_SUM_PAIRINGS, TOTAL_LABEL,
};
use crate::config::{ProductivityIndicator, QualityIndicator};
use crate::error::Error;
use crate::stats::Verdict;

/// Report tables, in bundle order.
pub const TABLE_NAMES: [&str; 7] = [
    "table1_regression_total",
    "table2_mean_diff_overall",
    "table3_mean_diff_uda",
    "table4_sds_counts",
    "table5_regression_best",
    "table6_mean_diff_best",
    "table7_rank_sum_counts",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(usize),
    Real(Option<f64>),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Real(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(Some(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_owned(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn format_cell(cell: &Cell, precision: usize, missing: &str) -> String {
    match cell {
        Cell::Text(s) => s.clone(),
        Cell::Int(v) => v.to_string(),
        Cell::Real(Some(v)) => {
            let s = format!("{v:.precision$}");
            // Avoid "-0.000".
            if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
                s[1..].to_owned()
            } else {
                s
            }
        }
        Cell::Real(None) => missing.to_owned(),
    }
}

/// Renders a table as CSV or Markdown with reals at `precision` decimals.
pub fn render_table(table: &Table, format: Format, precision: usize) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(&table.columns).expect("in-memory write");
            for row in &table.rows {
                w.write_record(row.iter().map(|c| format_cell(c, precision, "")))
                    .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
        }
        Format::Markdown => {
            let escape = |s: &str| s.replace('|', "\\|");
            let mut out = String::new();
            let _ = writeln!(
                out,
                "| {} |",
                table
                    .columns
                    .iter()
                    .map(|c| escape(c))
                    .collect::<Vec<_>>()
                    .join(" | ")
            );
            let _ = writeln!(
                out,
                "|{}",
                table.columns.iter().map(|_| "---|").collect::<String>()
            );
            for row in &table.rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|c| escape(&format_cell(c, precision, "n/a")))
                    .collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            out
        }
    }
}

const REGRESSION_COLUMNS: [&str; 7] = [
    "UDA",
    "Obs",
    "Correlation",
    "gamma",
    "stars",
    "robust_se",
    "adj_R2",
];

fn regression_table(name: &str, reg: &RegressionTable) -> Table {
    let mut t = Table::new(name, &REGRESSION_COLUMNS);
    for row in &reg.rows {
        match &row.result {
            Some(r) => t.push(vec![
                row.uda_id.as_str().into(),
                row.n_subjects.into(),
                r.pearson_log.into(),
                r.gamma.into(),
                r.stars.as_str().into(),
                r.robust_se.into(),
                r.adj_r2.into(),
            ]),
            None => t.push(vec![
                row.uda_id.as_str().into(),
                row.n_subjects.into(),
                None.into(),
                None.into(),
                row.note.clone().unwrap_or_default().into(),
                None.into(),
                None.into(),
            ]),
        }
    }
    t
}

fn quality_columns(first: &str) -> Vec<&str> {
    let mut cols = vec![first];
    cols.extend(QualityIndicator::ALL.iter().map(|q| q.label()));
    cols
}

fn overall_table(name: &str, comparisons: &[ComparisonTable]) -> Table {
    let mut t = Table::new(name, &quality_columns("Selection"));
    for c in comparisons {
        let mut row: Vec<Cell> = vec![c.selection.label().into()];
        row.extend(c.total.mean_difference.iter().map(|d| Cell::from(*d)));
        t.push(row);
    }
    t
}

fn uda_table(name: &str, comparison: Option<&ComparisonTable>) -> Table {
    let mut t = Table::new(name, &quality_columns("UDA"));
    if let Some(c) = comparison {
        for u in c.uda_rows.iter().chain(std::iter::once(&c.total)) {
            let mut row: Vec<Cell> = vec![u.uda_id.as_str().into()];
            row.extend(u.mean_difference.iter().map(|d| Cell::from(*d)));
            t.push(row);
        }
    }
    t
}

fn counts_table(name: &str, comparison: Option<&ComparisonTable>) -> Table {
    let mut cols = vec!["UDA", "Number of SDS"];
    cols.extend(QualityIndicator::ALL.iter().map(|q| q.label()));
    let mut t = Table::new(name, &cols);
    if let Some(c) = comparison {
        for u in c.uda_rows.iter().chain(std::iter::once(&c.total)) {
            let mut row: Vec<Cell> = vec![u.uda_id.as_str().into(), u.eligible_sds.into()];
            row.extend(u.sds_top_greater.iter().map(|&n| Cell::from(n)));
            t.push(row);
        }
    }
    t
}

fn pairing_label(p: ProductivityIndicator, q: QualityIndicator) -> String {
    format!("{}-{}", p.label(), q.label())
}

fn rank_sum_table(name: &str, run: &AnalysisRun) -> Table {
    let labels: Vec<String> = RANK_SUM_PAIRINGS
        .iter()
        .map(|&(p, q)| pairing_label(p, q))
        .collect();
    let mut cols = vec!["UDA", "Total SDS"];
    cols.extend(labels.iter().map(String::as_str));
    let mut t = Table::new(name, &cols);
    let counts: Vec<_> = RANK_SUM_PAIRINGS
        .iter()
        .map(|&(p, q)| {
            run.rank_sum(Selection::Single(p), q)
                .map(|r| r.rest_counts())
                .unwrap_or_default()
        })
        .collect();
    let total: usize = run.sds_per_uda.values().sum();
    let rows = run
        .sds_per_uda
        .iter()
        .map(|(u, &n)| (u.as_str(), n))
        .chain(std::iter::once((TOTAL_LABEL, total)));
    for (uda, n) in rows {
        let mut row: Vec<Cell> = vec![uda.into(), n.into()];
        row.extend(
            counts
                .iter()
                .map(|c| Cell::from(c.get(uda).copied().unwrap_or(0))),
        );
        t.push(row);
    }
    t
}

/// One of the seven report tables by its bundle name.
pub fn build_table(run: &AnalysisRun, name: &str) -> Option<Table> {
    let primary = run.primary_selection();
    Some(match name {
        "table1_regression_total" => regression_table(name, &run.regression_total),
        "table2_mean_diff_overall" => overall_table(name, &run.comparisons),
        "table3_mean_diff_uda" => uda_table(name, run.comparison(primary, Scope::AllPublications)),
        "table4_sds_counts" => counts_table(name, run.comparison(primary, Scope::AllPublications)),
        "table5_regression_best" => regression_table(name, &run.regression_best),
        "table6_mean_diff_best" => overall_table(name, &run.comparisons_best),
        "table7_rank_sum_counts" => rank_sum_table(name, run),
        _ => return None,
    })
}

/// Supplementary tables written alongside the seven report tables.
pub fn detail_tables(run: &AnalysisRun) -> Vec<Table> {
    let mut out = Vec::new();

    let mut t = Table::new(
        "regression_tests",
        &[
            "mode",
            "UDA",
            "Obs",
            "gamma",
            "p_gamma_zero",
            "p_gamma_one",
            "intercept_log",
            "note",
        ],
    );
    for (mode, reg) in [
        ("total", &run.regression_total),
        ("best", &run.regression_best),
    ] {
        for row in &reg.rows {
            let r = row.result.as_ref();
            t.push(vec![
                mode.into(),
                row.uda_id.as_str().into(),
                row.n_subjects.into(),
                r.map(|r| r.gamma).into(),
                r.map(|r| r.p_gamma_zero).into(),
                r.map(|r| r.p_gamma_one).into(),
                r.map(|r| r.intercept_log).into(),
                row.note.clone().unwrap_or_default().into(),
            ]);
        }
    }
    out.push(t);

    let primary = run.primary_selection();
    let mut cols = vec!["scope", "SDS", "UDA", "n_top", "n_rest", "tie_inflation"];
    cols.extend(QualityIndicator::ALL.iter().map(|q| q.label()));
    let mut t = Table::new("sds_mean_diff", &cols);
    for scope in [Scope::AllPublications, Scope::BestPublication] {
        if let Some(c) = run.comparison(primary, scope) {
            let scope_label = match scope {
                Scope::AllPublications => "all",
                Scope::BestPublication => "best",
            };
            for r in &c.sds_rows {
                let mut row: Vec<Cell> = vec![
                    scope_label.into(),
                    r.sds_id.as_str().into(),
                    r.uda_id.as_str().into(),
                    r.n_top.into(),
                    r.n_rest.into(),
                    r.tie_inflation.into(),
                ];
                row.extend(
                    r.quality
                        .iter()
                        .map(|g| Cell::from(g.and_then(|g| g.mean_difference()))),
                );
                t.push(row);
            }
        }
    }
    out.push(t);

    let mut t = Table::new(
        "rank_sum_detail",
        &[
            "SDS",
            "UDA",
            "n_top",
            "n_rest",
            "top_r_max",
            "top_r_eff",
            "top_r_diff",
            "top_distance",
            "rest_r_max",
            "rest_r_eff",
            "rest_r_diff",
            "rest_distance",
            "top_u",
            "verdict",
        ],
    );
    if let Some(pairing) = run.rank_sum(primary, run.config.quality_indicator) {
        for s in &pairing.sds {
            let r = &s.result;
            let verdict = match r.verdict {
                Verdict::Top => "top",
                Verdict::Rest => "rest",
                Verdict::Tie => "tie",
            };
            t.push(vec![
                s.sds_id.as_str().into(),
                s.uda_id.as_str().into(),
                r.top.size.into(),
                r.rest.size.into(),
                r.top.r_max.into(),
                r.top.r_eff.into(),
                r.top.r_diff.into(),
                r.top.normalized_distance.into(),
                r.rest.r_max.into(),
                r.rest.r_eff.into(),
                r.rest.r_diff.into(),
                r.rest.normalized_distance.into(),
                r.top.u_statistic.into(),
                verdict.into(),
            ]);
        }
    }
    out.push(t);

    let mut t = Table::new(
        "researcher_metrics",
        &[
            "researcher_id",
            "sds_id",
            "uda_id",
            "P",
            "FP",
            "C_o",
            "best_QI_c_ave",
            "best_QI_c_perc",
            "best_QI_if",
            "rank_P",
            "rank_FP",
            "rank_QI_c_ave",
            "rank_QI_c_perc",
            "rank_QI_if",
        ],
    );
    for r in &run.researchers {
        let m = &r.metrics;
        t.push(vec![
            m.researcher_id.as_str().into(),
            m.sds_id.as_str().into(),
            r.uda_id.as_str().into(),
            (m.p as usize).into(),
            m.fp.into(),
            m.c_o.into(),
            m.best_qi_c_ave.into(),
            m.best_qi_c_perc.into(),
            m.best_qi_if.into(),
            r.rank_p.into(),
            r.rank_fp.into(),
            r.rank_quality[0].into(),
            r.rank_quality[1].into(),
            r.rank_quality[2].into(),
        ]);
    }
    out.push(t);
    out
}
