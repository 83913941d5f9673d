//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any failed.
//!
//! Run with `cargo test -p sciprod --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sciprod::config::{EngineConfig, ProductivityIndicator, QualityIndicator};
use sciprod::corpus::{
    apply_stability_filter, Classification, Corpus, PublicationRecord, ResearcherRecord,
};
use sciprod::indicators::{build_baselines, publication_quality, qi_c_ave, researcher_metrics};
use sciprod::pipeline::{analyze, analyze_dir, write_report_bundle, Format, Scope, Selection};
use sciprod::ranking::percent_rank;
use sciprod::stats::{ols_loglog, rank_sum_distance, Verdict};
use sciprod::synth::{
    gen_power_law_pairs, gen_synthetic_corpus, oracle_percentile, Coupling, SynthParams,
};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn researcher(id: &str, sds: &str) -> ResearcherRecord {
    ResearcherRecord {
        researcher_id: id.into(),
        sds_id: sds.into(),
        changed_university: false,
        changed_sds: false,
        entered_during_period: false,
        left_during_period: false,
    }
}

fn worked_examples() -> Outcome {
    // Pool mean 5; one paper cited 7 times is 40% above it.
    let mut class = Classification::new();
    class.insert("S", "U", "sector");
    let researchers = vec![researcher("r", "S")];
    let pubs: Vec<PublicationRecord> = [7u64, 3, 5, 5]
        .iter()
        .enumerate()
        .map(|(i, &c)| PublicationRecord {
            pub_id: format!("p{i}"),
            year: 2003,
            citation_count: c,
            journal_id: None,
            total_author_count: 1,
            category_ids: vec!["C".into()],
            corpus_author_ids: vec!["r".into()],
        })
        .collect();
    let corpus = Corpus::new((2001, 2005), researchers, pubs, Vec::new(), class).unwrap();
    let baselines = build_baselines(&corpus);
    let q = qi_c_ave(&corpus.publications()[0], &baselines).unwrap();
    let q_ok = (q * 100.0).round() / 100.0 == 1.40 && (q - 1.4).abs() < 1e-12;

    // Eleven researchers; two of the ten colleagues publish strictly more.
    let values: Vec<(usize, f64)> = [12.0, 15.0, 9.0, 9.0, 3.0, 1.0, 4.0, 8.0, 2.0, 9.0, 7.0]
        .into_iter()
        .enumerate()
        .collect();
    let rank = percent_rank(&values, &2).unwrap();
    outcome(
        q_ok && rank == 80.0,
        format!("qi_c_ave = {q:.2}, %-rank = {rank}"),
    )
}

fn noiseless_regression() -> Outcome {
    let start = Instant::now();
    let mut worst_gamma: f64 = 0.0;
    let mut worst_r2: f64 = 0.0;
    for (i, gamma) in [0.6, 1.0, 1.25].into_iter().enumerate() {
        for (j, a) in [0.01, 1.0, 37.5].into_iter().enumerate() {
            let pairs = gen_power_law_pairs(500, a, gamma, 0.0, (i * 3 + j) as u64).unwrap();
            let r = ols_loglog(&pairs).unwrap();
            worst_gamma = worst_gamma.max((r.gamma - gamma).abs());
            worst_r2 = worst_r2.max((r.adj_r2 - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_gamma < 1e-9 && worst_r2 < 1e-9 && elapsed < Duration::from_millis(100),
        format!(
            "max |gamma error| {worst_gamma:.1e}, max |adj R2 - 1| {worst_r2:.1e}, {}",
            secs(elapsed)
        ),
    )
}

fn noisy_recovery() -> Outcome {
    let start = Instant::now();
    let mut covered = 0;
    for seed in 0..100 {
        let pairs = gen_power_law_pairs(2000, 2.0, 1.25, 0.4, 1000 + seed).unwrap();
        let r = ols_loglog(&pairs).unwrap();
        if (r.gamma - 1.25).abs() <= 3.0 * r.robust_se {
            covered += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        covered >= 99 && elapsed < Duration::from_secs(5),
        format!("{covered}/100 seeds within 3 robust SE, {}", secs(elapsed)),
    )
}

/// HC1 standard error of the slope from the full 2x2 sandwich
/// n/(n-k) · (X'X)⁻¹ X' diag(e²) X (X'X)⁻¹ on the uncentered design.
fn brute_hc1(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (mut s1, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        s1 += 1.0;
        sx += x;
        sxx += x * x;
        sy += y;
        sxy += x * y;
    }
    let det = s1 * sxx - sx * sx;
    let inv = [[sxx / det, -sx / det], [-sx / det, s1 / det]];
    let b0 = inv[0][0] * sy + inv[0][1] * sxy;
    let b1 = inv[1][0] * sy + inv[1][1] * sxy;
    let mut meat = [[0.0; 2]; 2];
    for (x, y) in xs.iter().zip(&ys) {
        let e2 = (y - b0 - b1 * x).powi(2);
        let row = [1.0, *x];
        for i in 0..2 {
            for j in 0..2 {
                meat[i][j] += e2 * row[i] * row[j];
            }
        }
    }
    let mut tmp = [[0.0; 2]; 2];
    let mut v = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            tmp[i][j] = (0..2).map(|k| inv[i][k] * meat[k][j]).sum();
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            v[i][j] = (0..2).map(|k| tmp[i][k] * inv[k][j]).sum();
        }
    }
    (n / (n - 2.0) * v[1][1]).sqrt()
}

fn robust_se_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for d in 0..50u64 {
        let n = rng.random_range(5..400);
        let gamma = rng.random_range(0.3..1.8);
        let sigma = rng.random_range(0.05..1.0);
        let mut pairs = gen_power_law_pairs(n, 3.0, gamma, sigma, 77 + d).unwrap();
        // Heteroskedastic noise so HC1 differs from the classical SE.
        for (p, c) in pairs.iter_mut() {
            *c *= (rng.random_range(-1.0..1.0) * 0.3 * p.ln()).exp();
        }
        if pairs.iter().all(|p| p.0 == pairs[0].0) {
            continue;
        }
        let got = ols_loglog(&pairs).unwrap().robust_se;
        let want = brute_hc1(&pairs);
        worst = worst.max(((got - want) / want).abs());
    }
    outcome(
        worst <= 1e-12,
        format!("max relative difference {worst:.2e} over 50 datasets"),
    )
}

fn small_params(seed: u64) -> SynthParams {
    SynthParams {
        uda_count: 2,
        sds_count: 4,
        researcher_count: 40,
        categories_per_uda: 2,
        journals_per_category: 4,
        seed,
        ..SynthParams::default()
    }
}

fn indicator_oracles() -> Outcome {
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    let mut worst_mean: f64 = 0.0;
    let mut max_pubs = 0;
    for seed in 0..100 {
        let corpus = gen_synthetic_corpus(&small_params(seed)).unwrap();
        max_pubs = max_pubs.max(corpus.publications().len());
        let baselines = build_baselines(&corpus);
        let quality = publication_quality(&corpus, &baselines).unwrap();

        // Pools rebuilt directly from the records.
        let mut cites: BTreeMap<(&str, i32), Vec<f64>> = BTreeMap::new();
        let mut ifs: BTreeMap<(&str, i32), Vec<f64>> = BTreeMap::new();
        let mut multi: BTreeMap<(&str, i32), bool> = BTreeMap::new();
        for p in corpus.publications() {
            for c in &p.category_ids {
                let key = (c.as_str(), p.year);
                cites.entry(key).or_default().push(p.citation_count as f64);
                *multi.entry(key).or_default() |= p.category_ids.len() > 1;
                if let Some(f) = p
                    .journal_id
                    .as_deref()
                    .and_then(|j| corpus.impact_factor(j, p.year, c))
                {
                    ifs.entry(key).or_default().push(f);
                }
            }
        }
        for (p, q) in corpus.publications().iter().zip(&quality) {
            let mut perc = 0.0;
            let mut if_scores = Vec::new();
            for c in &p.category_ids {
                let key = (c.as_str(), p.year);
                perc += oracle_percentile(&cites[&key], p.citation_count as f64).unwrap();
                if let Some(f) = p
                    .journal_id
                    .as_deref()
                    .and_then(|j| corpus.impact_factor(j, p.year, c))
                {
                    if_scores.push(oracle_percentile(&ifs[&key], f).unwrap());
                }
            }
            let perc = perc / p.category_ids.len() as f64;
            let qif = (!if_scores.is_empty())
                .then(|| if_scores.iter().sum::<f64>() / if_scores.len() as f64);
            checked += 1;
            if perc != q.qi_c_perc || qif != q.qi_if {
                mismatches += 1;
            }
        }
        // Mean qi_c_ave over each single-category pool is 1.
        let mut sums: BTreeMap<(&str, i32), (f64, usize)> = BTreeMap::new();
        for (p, q) in corpus.publications().iter().zip(&quality) {
            let key = (p.category_ids[0].as_str(), p.year);
            if !multi[&key] {
                let e = sums.entry(key).or_default();
                e.0 += q.qi_c_ave;
                e.1 += 1;
            }
        }
        for (key, (sum, n)) in sums {
            if cites[&key].iter().any(|&c| c > 0.0) {
                worst_mean = worst_mean.max((sum / n as f64 - 1.0).abs());
            }
        }
    }
    outcome(
        mismatches == 0 && worst_mean <= 1e-12 && max_pubs <= 300,
        format!(
            "{mismatches} mismatches in {checked} publications (max {max_pubs} per corpus), pool mean error {worst_mean:.1e}"
        ),
    )
}

fn fractional_conservation() -> Outcome {
    let mut report = Vec::new();
    let mut pass = true;
    for (label, powers_of_two) in [("power-of-two teams", true), ("arbitrary teams", false)] {
        let base = gen_synthetic_corpus(&SynthParams {
            researcher_count: 1500,
            sds_count: 10,
            uda_count: 2,
            corpus_coauthor_prob: 0.9,
            seed: 8,
            ..SynthParams::default()
        })
        .unwrap();
        let researchers: Vec<ResearcherRecord> = base
            .researchers()
            .iter()
            .map(|r| researcher(&r.researcher_id, &r.sds_id))
            .collect();
        let pubs: Vec<PublicationRecord> = base
            .publications()
            .iter()
            .map(|p| {
                let mut p = p.clone();
                if powers_of_two {
                    let keep =
                        1usize << (usize::BITS - 1 - p.corpus_author_ids.len().leading_zeros());
                    p.corpus_author_ids.truncate(keep);
                }
                p.total_author_count = p.corpus_author_ids.len() as u32;
                p
            })
            .collect();
        let n_pubs = pubs.len();
        let corpus = Corpus::new(
            base.window(),
            researchers,
            pubs,
            base.journals().to_vec(),
            base.classification().clone(),
        )
        .unwrap();
        let corpus = apply_stability_filter(&corpus);
        let metrics = researcher_metrics(&corpus, &build_baselines(&corpus)).unwrap();
        let total: f64 = metrics.iter().map(|m| m.fp).sum();
        let ok = if powers_of_two {
            total == n_pubs as f64
        } else {
            (total - n_pubs as f64).abs() <= 1e-9 * n_pubs as f64
        };
        pass &= ok;
        report.push(format!(
            "{label}: sum FP = {total} for {n_pubs} publications"
        ));
    }
    outcome(pass, report.join("; "))
}

/// Verdict by enumerating every arrangement of a group of the same size.
fn brute_verdict(ranks: &[usize], top: &[bool]) -> (Verdict, f64) {
    let n = ranks.len();
    let distance = |member: bool| {
        let size = top.iter().filter(|&&t| t == member).count();
        let actual: usize = ranks
            .iter()
            .zip(top)
            .filter(|(_, &t)| t == member)
            .map(|(r, _)| r)
            .sum();
        let (mut hi, mut lo) = (0usize, usize::MAX);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == size {
                let s: usize = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).sum();
                hi = hi.max(s);
                lo = lo.min(s);
            }
        }
        (
            (hi - actual) as f64 / (hi - lo) as f64,
            (hi - actual) as f64,
        )
    };
    let (dt, diff_top) = distance(true);
    let (dr, _) = distance(false);
    let v = if dt < dr {
        Verdict::Top
    } else if dt > dr {
        Verdict::Rest
    } else {
        Verdict::Tie
    };
    (v, diff_top)
}

fn rank_sum_exhaustive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut cases = 0usize;
    let mut bad = 0usize;
    for n in 2..=8usize {
        // Several orderings per size; the verdict depends only on ranks.
        for _ in 0..4 {
            let mut ranks: Vec<usize> = (1..=n).collect();
            for i in (1..n).rev() {
                ranks.swap(i, rng.random_range(0..=i));
            }
            let quality: Vec<f64> = ranks.iter().map(|&r| r as f64 * 0.75 - 3.0).collect();
            for mask in 1u32..(1 << n) - 1 {
                let top: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
                let items: Vec<(bool, f64)> =
                    top.iter().copied().zip(quality.iter().copied()).collect();
                let r = rank_sum_distance(&items).unwrap();
                let (verdict, diff) = brute_verdict(&ranks, &top);
                let k = top.iter().filter(|&&t| t).count();
                let occupies_top = ranks
                    .iter()
                    .zip(&top)
                    .filter(|(_, &t)| t)
                    .all(|(&rk, _)| rk > n - k);
                cases += 1;
                if r.verdict != verdict
                    || r.top.r_diff != diff
                    || (r.top.r_diff == 0.0) != occupies_top
                {
                    bad += 1;
                }
            }
        }
    }
    outcome(
        bad == 0,
        format!("{bad} disagreements in {cases} partitions"),
    )
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn directional() -> Outcome {
    let start = Instant::now();
    let seeds = 20u64;
    let selection = Selection::Single(ProductivityIndicator::P);
    let config = EngineConfig::default();

    let mut coupled_ok = true;
    let mut coupled_gamma = Vec::new();
    let mut coupled_diff = vec![Vec::new(); 3];
    let mut indep_gamma_ok = 0;
    let mut indep_gamma = Vec::new();
    let mut indep_diff = vec![Vec::new(); 3];
    for seed in 0..seeds {
        for coupling in [Coupling::Coupled, Coupling::Independent] {
            let params = SynthParams {
                coupling,
                seed: 500 + seed,
                ..SynthParams::default()
            };
            let run = analyze(&gen_synthetic_corpus(&params).unwrap(), &config).unwrap();
            let total = run
                .regression_total
                .rows
                .last()
                .unwrap()
                .result
                .clone()
                .unwrap();
            let diffs = run
                .comparison(selection, Scope::AllPublications)
                .unwrap()
                .total
                .mean_difference;
            match coupling {
                Coupling::Coupled => {
                    let all_udas = run
                        .regression_total
                        .rows
                        .iter()
                        .all(|r| r.result.as_ref().is_some_and(|r| r.gamma > 1.0));
                    coupled_ok &= all_udas && diffs.iter().all(|d| d.is_some_and(|d| d > 0.0));
                    coupled_gamma.push(total.gamma);
                    for q in 0..3 {
                        coupled_diff[q].push(diffs[q].unwrap());
                    }
                }
                Coupling::Independent => {
                    if (total.gamma - 1.0).abs() <= 3.0 * total.robust_se {
                        indep_gamma_ok += 1;
                    }
                    indep_gamma.push(total.gamma);
                    for q in 0..3 {
                        indep_diff[q].push(diffs[q].unwrap());
                    }
                }
            }
        }
    }
    // Band for the seed-averaged difference: three standard errors of the mean,
    // estimated from the spread across independent-mode seeds.
    let mut band_ok = true;
    let mut bands = Vec::new();
    for (q, label) in QualityIndicator::ALL.iter().enumerate() {
        let (mean, sd) = mean_sd(&indep_diff[q]);
        let band = 3.0 * sd / (seeds as f64).sqrt();
        band_ok &= mean.abs() <= band;
        bands.push(format!("{} {mean:+.2} (band ±{band:.2})", label.label()));
    }
    let elapsed = start.elapsed();
    let (cg, _) = mean_sd(&coupled_gamma);
    let (ig, igsd) = mean_sd(&indep_gamma);
    let cd: Vec<String> = coupled_diff
        .iter()
        .map(|d| format!("{:+.1}", mean_sd(d).0))
        .collect();
    outcome(
        coupled_ok && indep_gamma_ok == seeds && band_ok && elapsed < Duration::from_secs(60),
        format!(
            "coupled: gamma {cg:.3}, differences [{}], all positive: {coupled_ok}; independent: gamma {ig:.3} (sd {igsd:.3}), {indep_gamma_ok}/{seeds} within 3 SE of 1, differences {}; {}",
            cd.join(", "),
            bands.join(", "),
            secs(elapsed)
        ),
    )
}

pub const PAPER_SCALE_LOG_MEAN: f64 = 1.37;

fn paper_scale_params() -> SynthParams {
    SynthParams {
        uda_count: 14,
        sds_count: 165,
        researcher_count: 30_000,
        productivity_log_mean: PAPER_SCALE_LOG_MEAN,
        seed: 2001,
        ..SynthParams::default()
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism_and_scale() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    let corpus = sciprod::synth::write_synthetic_corpus(&paper_scale_params(), &data).unwrap();
    let n_pubs = corpus.publications().len();
    let n_sds = corpus.classification().len();
    drop(corpus);
    let config = EngineConfig {
        seed: Some(2001),
        ..EngineConfig::default()
    };
    let formats = [Format::Csv, Format::Markdown];
    let mut timings = Vec::new();
    let mut bundles = Vec::new();
    for i in 0..2 {
        let out = root.path().join(format!("bundle{i}"));
        let start = Instant::now();
        let run = analyze_dir(&data, &config).unwrap();
        write_report_bundle(&run, &out, &formats).unwrap();
        timings.push(start.elapsed());
        bundles.push(snapshot(&out));
    }
    let identical = bundles[0] == bundles[1];
    let slowest = timings.iter().max().copied().unwrap();
    let scale_ok = (120_000..=180_000).contains(&n_pubs) && n_sds == 165;
    outcome(
        identical && scale_ok && slowest < Duration::from_secs(10),
        format!(
            "30000 researchers, {n_pubs} publications, {n_sds} SDS; slowest run {}; bundles identical: {identical}",
            secs(slowest)
        ),
    )
}

fn shape_fidelity() -> Outcome {
    let expected: [(&str, &[&str]); 7] = [
        (
            "table1_regression_total",
            &[
                "UDA",
                "Obs",
                "Correlation",
                "gamma",
                "stars",
                "robust_se",
                "adj_R2",
            ],
        ),
        (
            "table2_mean_diff_overall",
            &["Selection", "QI_c_ave", "QI_c_perc", "QI_if"],
        ),
        (
            "table3_mean_diff_uda",
            &["UDA", "QI_c_ave", "QI_c_perc", "QI_if"],
        ),
        (
            "table4_sds_counts",
            &["UDA", "Number of SDS", "QI_c_ave", "QI_c_perc", "QI_if"],
        ),
        (
            "table5_regression_best",
            &[
                "UDA",
                "Obs",
                "Correlation",
                "gamma",
                "stars",
                "robust_se",
                "adj_R2",
            ],
        ),
        (
            "table6_mean_diff_best",
            &["Selection", "QI_c_ave", "QI_c_perc", "QI_if"],
        ),
        (
            "table7_rank_sum_counts",
            &[
                "UDA",
                "Total SDS",
                "P-QI_c_perc",
                "P-QI_c_ave",
                "P-QI_if",
                "FP-QI_c_perc",
                "FP-QI_c_ave",
                "FP-QI_if",
            ],
        ),
    ];
    let root = tempfile::tempdir().unwrap();
    let params = SynthParams {
        researcher_count: 900,
        seed: 3,
        ..SynthParams::default()
    };
    let run = analyze(
        &gen_synthetic_corpus(&params).unwrap(),
        &EngineConfig::default(),
    )
    .unwrap();
    write_report_bundle(&run, root.path(), &[Format::Csv, Format::Markdown]).unwrap();
    let mut problems = Vec::new();
    for (name, columns) in expected {
        let csv = fs::read_to_string(root.path().join(format!("{name}.csv"))).unwrap_or_default();
        let header: Vec<&str> = csv.lines().next().unwrap_or("").split(',').collect();
        let md = fs::read_to_string(root.path().join(format!("{name}.md"))).unwrap_or_default();
        let md_header = format!("| {} |", columns.join(" | "));
        if header != columns || md.lines().next() != Some(md_header.as_str()) {
            problems.push(name);
        }
    }
    let files = fs::read_dir(root.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("table")
        })
        .count();
    outcome(
        problems.is_empty() && files == 14,
        format!("{files} table files (csv + md); mismatched headers: {problems:?}"),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("worked-example fidelity", worked_examples),
        ("noiseless regression", noiseless_regression),
        ("gamma recovery under noise", noisy_recovery),
        ("robust SE correctness", robust_se_oracle),
        ("indicator oracle equivalence", indicator_oracles),
        ("fractional-counting conservation", fractional_conservation),
        ("rank-sum criterion equivalence", rank_sum_exhaustive),
        ("directional end-to-end check", directional),
        ("determinism and scale", determinism_and_scale),
        ("shape fidelity", shape_fidelity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
