//! Synthetic corpora and datasets with known ground truth.
//!
//! All randomness flows from one `ChaCha8Rng` seeded from the parameters, and
//! the sampling crates are pinned to exact versions, so a given parameter set
//! yields byte-identical corpus files on every platform.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    Classification, Corpus, JournalImpactRecord, PublicationRecord, ResearcherRecord,
};
use crate::error::{Error, Result};

/// Bumped whenever a change alters the stream of generated values.
pub const GENERATOR_VERSION: u32 = 1;

/// Log-scale location and spread of the productivity draws in
/// [`gen_power_law_pairs`].
const PAIRS_LOG_MEAN: f64 = 1.5;
const PAIRS_LOG_SD: f64 = 1.0;

fn discretized_lognormal<R: Rng>(rng: &mut R, log_mean: f64, log_sd: f64) -> u32 {
    let z: f64 = rng.sample(StandardNormal);
    let v = (log_mean + log_sd * z).exp().floor() + 1.0;
    v.min(u32::MAX as f64 / 2.0) as u32
}

/// `n` pairs with integer productivity p and c = a · p^gamma · exp(ε), ε ~ N(0, sigma²).
pub fn gen_power_law_pairs(
    n: usize,
    a: f64,
    gamma: f64,
    sigma: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if n < 3 {
        return Err(Error::InvalidParams(format!(
            "need at least 3 pairs, got {n}"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "prefactor must be positive, got {a}"
        )));
    }
    if !gamma.is_finite() {
        return Err(Error::InvalidParams("gamma must be finite".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let p = discretized_lognormal(&mut rng, PAIRS_LOG_MEAN, PAIRS_LOG_SD) as f64;
            let eps: f64 = rng.sample(StandardNormal);
            (p, a * p.powf(gamma) * (sigma * eps).exp())
        })
        .collect())
}

/// Brute-force reference for the percentile convention: the share of the other
/// values not strictly greater than `x`, on 0-100. A singleton scores 50.
pub fn oracle_percentile(values: &[f64], x: f64) -> Result<f64> {
    if !values.contains(&x) {
        return Err(Error::ValueAbsent(x));
    }
    if values.len() == 1 {
        return Ok(50.0);
    }
    let mut strictly_greater = 0usize;
    for v in values {
        if *v > x {
            strictly_greater += 1;
        }
    }
    let colleagues = (values.len() - 1) as f64;
    Ok(100.0 * (1.0 - strictly_greater as f64 / colleagues))
}

/// Whether a researcher's latent quality depends on their productivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Coupled,
    Independent,
}

fn d_uda() -> usize {
    9
}
fn d_sds() -> usize {
    27
}
fn d_researchers() -> usize {
    2700
}
fn d_log_mean() -> f64 {
    1.0
}
fn d_log_sd() -> f64 {
    0.8
}
fn d_gamma() -> f64 {
    1.25
}
fn d_sigma() -> f64 {
    0.4
}
fn d_coupling() -> Coupling {
    Coupling::Coupled
}
fn d_categories() -> usize {
    3
}
fn d_citation_mean() -> f64 {
    20.0
}
fn d_dispersion() -> f64 {
    10.0
}
fn d_coauthor_mean() -> f64 {
    3.0
}
fn d_corpus_coauthor() -> f64 {
    0.3
}
fn d_multi_category() -> f64 {
    0.2
}
fn d_journals() -> usize {
    12
}
fn d_coverage() -> f64 {
    0.85
}
fn d_journal_noise() -> f64 {
    0.5
}
fn d_mobile() -> f64 {
    0.05
}
fn d_silent() -> f64 {
    0.15
}
fn d_start() -> i32 {
    2001
}
fn d_end() -> i32 {
    2005
}

/// Parameters of [`gen_synthetic_corpus`]. Read from JSON; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    #[serde(default = "d_uda")]
    pub uda_count: usize,
    /// SDS are assigned to UDA round-robin.
    #[serde(default = "d_sds")]
    pub sds_count: usize,
    /// Spread evenly over the SDS.
    #[serde(default = "d_researchers")]
    pub researcher_count: usize,
    /// Productivity of a publishing researcher is floor(exp(N(log_mean, log_sd²))) + 1.
    #[serde(default = "d_log_mean")]
    pub productivity_log_mean: f64,
    #[serde(default = "d_log_sd")]
    pub productivity_log_sd: f64,
    /// In coupled mode, expected normalized citations per paper scale as P^(gamma − 1).
    #[serde(default = "d_gamma")]
    pub gamma: f64,
    /// Log-scale spread of researcher-level latent quality.
    #[serde(default = "d_sigma")]
    pub sigma: f64,
    #[serde(default = "d_coupling")]
    pub coupling: Coupling,
    /// Subject categories per UDA; citation means vary by category.
    #[serde(default = "d_categories")]
    pub categories_per_uda: usize,
    #[serde(default = "d_citation_mean")]
    pub citation_mean: f64,
    /// Negative-binomial shape; smaller is more over-dispersed.
    #[serde(default = "d_dispersion")]
    pub citation_dispersion: f64,
    /// Mean number of co-authors beyond the lead author.
    #[serde(default = "d_coauthor_mean")]
    pub coauthor_mean: f64,
    /// Chance a publication gains a second corpus author from the same SDS.
    #[serde(default = "d_corpus_coauthor")]
    pub corpus_coauthor_prob: f64,
    #[serde(default = "d_multi_category")]
    pub multi_category_prob: f64,
    #[serde(default = "d_journals")]
    pub journals_per_category: usize,
    /// Share of journals with impact-factor records.
    #[serde(default = "d_coverage")]
    pub journal_coverage: f64,
    /// Log-scale noise between a researcher's quality and the journal tier chosen.
    #[serde(default = "d_journal_noise")]
    pub journal_noise: f64,
    #[serde(default = "d_mobile")]
    pub mobile_fraction: f64,
    /// Share of researchers without publications.
    #[serde(default = "d_silent")]
    pub silent_fraction: f64,
    #[serde(default = "d_start")]
    pub window_start: i32,
    #[serde(default = "d_end")]
    pub window_end: i32,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl SynthParams {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let params: SynthParams =
            serde_json::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: SynthParams = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.uda_count == 0 || self.sds_count < self.uda_count {
            return bad(format!(
                "need at least one SDS per UDA ({} SDS, {} UDA)",
                self.sds_count, self.uda_count
            ));
        }
        if self.researcher_count < self.sds_count {
            return bad("need at least one researcher per SDS".into());
        }
        if self.categories_per_uda == 0 || self.journals_per_category == 0 {
            return bad("categories_per_uda and journals_per_category must be positive".into());
        }
        for (name, v) in [
            ("productivity_log_sd", self.productivity_log_sd),
            ("sigma", self.sigma),
            ("coauthor_mean", self.coauthor_mean),
            ("journal_noise", self.journal_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        for (name, v) in [
            ("corpus_coauthor_prob", self.corpus_coauthor_prob),
            ("multi_category_prob", self.multi_category_prob),
            ("journal_coverage", self.journal_coverage),
            ("mobile_fraction", self.mobile_fraction),
            ("silent_fraction", self.silent_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.silent_fraction >= 1.0 {
            return bad("silent_fraction must be below 1".into());
        }
        if !(self.citation_mean > 0.0 && self.citation_dispersion > 0.0) {
            return bad("citation_mean and citation_dispersion must be positive".into());
        }
        if !self.gamma.is_finite() || !self.productivity_log_mean.is_finite() {
            return bad("gamma and productivity_log_mean must be finite".into());
        }
        if self.window_start > self.window_end {
            return bad("window_start after window_end".into());
        }
        Ok(())
    }
}

struct Category {
    id: String,
    citation_mean: f64,
    /// Journal ids ordered by ascending impact factor.
    journals: Vec<String>,
}

/// Generates a corpus satisfying every load-time invariant.
///
/// Each publishing researcher leads `P` papers drawn from their UDA's
/// categories. Citations follow a gamma-Poisson (negative binomial) law whose
/// mean is the category mean times the lead author's latent quality; journal
/// tier tracks the same latent quality. In coupled mode latent quality grows as
/// `P^(gamma − 1)`, in independent mode it ignores `P`.
pub fn gen_synthetic_corpus(params: &SynthParams) -> Result<Corpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let years: Vec<i32> = (params.window_start..=params.window_end).collect();

    let mut classification = Classification::new();
    let mut sds_ids = Vec::with_capacity(params.sds_count);
    for s in 0..params.sds_count {
        let uda = s % params.uda_count;
        let id = format!("S{s:04}");
        classification.insert(id.clone(), format!("U{uda:02}"), format!("Sector {s}"));
        sds_ids.push((id, uda));
    }

    let mut categories: Vec<Vec<Category>> = Vec::with_capacity(params.uda_count);
    let mut journals = Vec::new();
    for u in 0..params.uda_count {
        let mut cats = Vec::with_capacity(params.categories_per_uda);
        for c in 0..params.categories_per_uda {
            let id = format!("C{u:02}-{c:02}");
            let citation_mean = params.citation_mean * (0.5 + 1.5 * rng.random::<f64>());
            let mut base: Vec<f64> = (0..params.journals_per_category)
                .map(|_| (rng.sample::<f64, _>(StandardNormal) * 0.8).exp())
                .collect();
            base.sort_by(f64::total_cmp);
            let mut ids = Vec::with_capacity(base.len());
            for (j, impact) in base.iter().enumerate() {
                let jid = format!("J{u:02}-{c:02}-{j:03}");
                if rng.random::<f64>() < params.journal_coverage {
                    for &year in &years {
                        let drift = 1.0 + 0.05 * rng.sample::<f64, _>(StandardNormal);
                        let value = (impact * drift.max(0.5) * 1000.0).round() / 1000.0;
                        journals.push(JournalImpactRecord {
                            journal_id: jid.clone(),
                            year,
                            category_id: id.clone(),
                            impact_factor: value,
                        });
                    }
                }
                ids.push(jid);
            }
            cats.push(Category {
                id,
                citation_mean,
                journals: ids,
            });
        }
        categories.push(cats);
    }

    // Researchers, their SDS and latent productivity.
    let mut researchers = Vec::with_capacity(params.researcher_count);
    let mut latent: Vec<(usize, u32)> = Vec::with_capacity(params.researcher_count);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); params.sds_count];
    for i in 0..params.researcher_count {
        let s = i % params.sds_count;
        let mobile = rng.random::<f64>() < params.mobile_fraction;
        let flag = if mobile { rng.random_range(0..4) } else { 4 };
        researchers.push(ResearcherRecord {
            researcher_id: format!("R{i:06}"),
            sds_id: sds_ids[s].0.clone(),
            changed_university: flag == 0,
            changed_sds: flag == 1,
            entered_during_period: flag == 2,
            left_during_period: flag == 3,
        });
        let p = if rng.random::<f64>() < params.silent_fraction {
            0
        } else {
            discretized_lognormal(
                &mut rng,
                params.productivity_log_mean,
                params.productivity_log_sd,
            )
        };
        latent.push((s, p));
        if p > 0 {
            members[s].push(i);
        }
    }

    let reference_p = (params.productivity_log_mean.exp() + 1.0).max(1.0);
    let quality_noise =
        Normal::new(0.0, params.sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let coauthors = if params.coauthor_mean > 0.0 {
        Some(Poisson::new(params.coauthor_mean).map_err(|e| Error::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    let tier_noise = Normal::new(0.0, params.journal_noise.max(1e-12))
        .map_err(|e| Error::InvalidParams(e.to_string()))?;

    let mut publications = Vec::new();
    for (i, &(s, p)) in latent.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let log_quality = match params.coupling {
            Coupling::Coupled => (params.gamma - 1.0) * (p as f64 / reference_p).ln(),
            Coupling::Independent => 0.0,
        } + quality_noise.sample(&mut rng);
        let quality = log_quality.exp();
        let cats = &categories[sds_ids[s].1];
        for _ in 0..p {
            let year = *years.choose(&mut rng).expect("window is non-empty");
            let primary = rng.random_range(0..cats.len());
            let mut category_ids = vec![cats[primary].id.clone()];
            let mut mean = cats[primary].citation_mean;
            if cats.len() > 1 && rng.random::<f64>() < params.multi_category_prob {
                let mut second = rng.random_range(0..cats.len() - 1);
                if second >= primary {
                    second += 1;
                }
                category_ids.push(cats[second].id.clone());
                mean = 0.5 * (mean + cats[second].citation_mean);
            }

            let lambda_mean = mean * quality;
            let shape = params.citation_dispersion;
            let lambda = Gamma::new(shape, lambda_mean / shape)
                .map_err(|e| Error::InvalidParams(e.to_string()))?
                .sample(&mut rng);
            let citation_count = if lambda > 0.0 {
                Poisson::new(lambda)
                    .map_err(|e| Error::InvalidParams(e.to_string()))?
                    .sample(&mut rng) as u64
            } else {
                0
            };

            // Journal tier: a standard-normal score mapped onto the sorted journal list.
            let score = (log_quality / params.sigma.max(0.25) + tier_noise.sample(&mut rng)) / 1.5;
            let u = standard_normal_cdf(score);
            let tier_journals = &cats[primary].journals;
            let j = ((u * tier_journals.len() as f64) as usize).min(tier_journals.len() - 1);
            let journal_id = Some(tier_journals[j].clone());

            let mut authors = vec![researchers[i].researcher_id.clone()];
            let mut total = 1 + coauthors.as_ref().map_or(0, |d| d.sample(&mut rng) as u32);
            if members[s].len() > 1 && rng.random::<f64>() < params.corpus_coauthor_prob {
                let other = loop {
                    let c = *members[s].choose(&mut rng).expect("non-empty");
                    if c != i {
                        break c;
                    }
                };
                authors.push(researchers[other].researcher_id.clone());
                total = total.max(2);
            }

            publications.push(PublicationRecord {
                pub_id: format!("P{:07}", publications.len()),
                year,
                citation_count,
                journal_id,
                total_author_count: total,
                category_ids,
                corpus_author_ids: authors,
            });
        }
    }

    Corpus::new(
        (params.window_start, params.window_end),
        researchers,
        publications,
        journals,
        classification,
    )
}

/// Generates and writes a corpus in the six-file input format.
pub fn write_synthetic_corpus(params: &SynthParams, dir: &Path) -> Result<Corpus> {
    let corpus = gen_synthetic_corpus(params)?;
    corpus.write_to_dir(dir)?;
    Ok(corpus)
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ols_loglog;

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_percentile(&[1.0, 2.0, 3.0], 3.0).unwrap(), 100.0);
        assert!((oracle_percentile(&[1.0, 2.0, 2.0, 3.0], 2.0).unwrap() - 66.67).abs() < 0.01);
        assert_eq!(oracle_percentile(&[7.0], 7.0).unwrap(), 50.0);
        assert!(oracle_percentile(&[1.0], 2.0).is_err());
    }

    #[test]
    fn noiseless_pairs_recover_gamma() {
        let pairs = gen_power_law_pairs(200, 3.0, 1.25, 0.0, 11).unwrap();
        let r = ols_loglog(&pairs).unwrap();
        assert!((r.gamma - 1.25).abs() < 1e-9);
    }

    #[test]
    fn pairs_are_deterministic_and_validated() {
        assert_eq!(
            gen_power_law_pairs(50, 1.0, 1.1, 0.3, 5).unwrap(),
            gen_power_law_pairs(50, 1.0, 1.1, 0.3, 5).unwrap()
        );
        assert_ne!(
            gen_power_law_pairs(50, 1.0, 1.1, 0.3, 5).unwrap(),
            gen_power_law_pairs(50, 1.0, 1.1, 0.3, 6).unwrap()
        );
        assert!(gen_power_law_pairs(2, 1.0, 1.0, 0.1, 0).is_err());
        assert!(gen_power_law_pairs(10, 0.0, 1.0, 0.1, 0).is_err());
        assert!(gen_power_law_pairs(10, 1.0, 1.0, -0.1, 0).is_err());
        assert!(gen_power_law_pairs(10, 1.0, f64::NAN, 0.1, 0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SynthParams::default().validate().is_ok());
        let p = SynthParams {
            sds_count: 3,
            uda_count: 4,
            ..SynthParams::default()
        };
        assert!(p.validate().is_err());
        let p = SynthParams {
            silent_fraction: 1.0,
            ..SynthParams::default()
        };
        assert!(p.validate().is_err());
        let p = SynthParams {
            sigma: -1.0,
            ..SynthParams::default()
        };
        assert!(p.validate().is_err());
        assert!(serde_json::from_str::<SynthParams>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn small_corpus_is_valid_and_deterministic() {
        let params = SynthParams {
            researcher_count: 200,
            sds_count: 9,
            seed: 3,
            ..SynthParams::default()
        };
        let a = gen_synthetic_corpus(&params).unwrap();
        let b = gen_synthetic_corpus(&params).unwrap();
        assert_eq!(a.publications(), b.publications());
        assert_eq!(a.researchers().len(), 200);
        assert!(!a.publications().is_empty());
        assert!(a.researchers().iter().any(|r| !r.is_stable()));
    }
}
