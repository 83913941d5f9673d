//! Field-normalized publication quality and researcher productivity.
//!
//! Every publication is compared against the pool of corpus publications that
//! share one of its subject categories and its year. A publication in several
//! categories receives the arithmetic mean of its per-category values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{ProductivityIndicator, QualityIndicator};
use crate::corpus::{Corpus, PublicationRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoolKey {
    pub category_id: String,
    pub year: i32,
}

/// Normalization data for one (category, year).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub mean_citations: f64,
    /// Ascending.
    pub citations: Vec<u64>,
    /// Ascending; one entry per pool publication whose journal has an impact factor.
    pub impact_factors: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pools: BTreeMap<PoolKey, Pool>,
}

impl BaselineTable {
    pub fn get(&self, category_id: &str, year: i32) -> Result<&Pool> {
        // BTreeMap lookups need an owned key; pools are few so this is cheap enough.
        self.pools
            .get(&PoolKey {
                category_id: category_id.to_owned(),
                year,
            })
            .ok_or_else(|| Error::MissingPool {
                category: category_id.to_owned(),
                year,
            })
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PoolKey, &Pool)> {
        self.pools.iter()
    }
}

/// Builds one pool per (category, year) present in the corpus.
///
/// Every corpus publication enters its pools, including those no longer
/// attributed to any researcher after filtering.
pub fn build_baselines(corpus: &Corpus) -> BaselineTable {
    let mut raw: BTreeMap<PoolKey, (Vec<u64>, Vec<f64>)> = BTreeMap::new();
    for p in corpus.publications() {
        for c in &p.category_ids {
            let entry = raw
                .entry(PoolKey {
                    category_id: c.clone(),
                    year: p.year,
                })
                .or_default();
            entry.0.push(p.citation_count);
            if let Some(jif) = p
                .journal_id
                .as_deref()
                .and_then(|j| corpus.impact_factor(j, p.year, c))
            {
                entry.1.push(jif);
            }
        }
    }
    let pools = raw
        .into_iter()
        .map(|(key, (mut citations, mut impact_factors))| {
            citations.sort_unstable();
            impact_factors.sort_by(f64::total_cmp);
            let total: u128 = citations.iter().map(|&c| c as u128).sum();
            let mean_citations = total as f64 / citations.len() as f64;
            (
                key,
                Pool {
                    mean_citations,
                    citations,
                    impact_factors,
                },
            )
        })
        .collect();
    BaselineTable { pools }
}

/// Share of the other pool members not strictly above `value`, on a 0-100 scale.
///
/// `sorted` must be ascending and contain `value`. A singleton pool scores 50.
pub fn percentile_in_sorted<T: PartialOrd>(sorted: &[T], value: &T) -> f64 {
    let n = sorted.len();
    if n <= 1 {
        return 50.0;
    }
    let not_greater = sorted.partition_point(|v| v <= value);
    let greater = n - not_greater;
    100.0 * (1.0 - greater as f64 / (n - 1) as f64)
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Citations divided by the pool mean, averaged over the publication's categories.
pub fn qi_c_ave(publication: &PublicationRecord, baselines: &BaselineTable) -> Result<f64> {
    let mut sum = 0.0;
    for c in &publication.category_ids {
        let pool = baselines.get(c, publication.year)?;
        if pool.mean_citations > 0.0 {
            sum += publication.citation_count as f64 / pool.mean_citations;
        } else if publication.citation_count > 0 {
            return Err(Error::UndefinedBaseline {
                category: c.clone(),
                year: publication.year,
                pub_id: publication.pub_id.clone(),
            });
        }
    }
    Ok(sum / publication.category_ids.len() as f64)
}

/// Citation percentile within each pool, averaged over categories.
pub fn qi_c_perc(publication: &PublicationRecord, baselines: &BaselineTable) -> Result<f64> {
    let mut sum = 0.0;
    for c in &publication.category_ids {
        let pool = baselines.get(c, publication.year)?;
        if pool.citations.is_empty() {
            return Err(Error::MissingPool {
                category: c.clone(),
                year: publication.year,
            });
        }
        sum += percentile_in_sorted(&pool.citations, &publication.citation_count);
    }
    Ok(sum / publication.category_ids.len() as f64)
}

/// Journal impact-factor percentile, averaged over the categories for which the
/// journal has an impact factor. `None` when it has none.
pub fn qi_if(
    publication: &PublicationRecord,
    corpus: &Corpus,
    baselines: &BaselineTable,
) -> Result<Option<f64>> {
    let Some(journal) = publication.journal_id.as_deref() else {
        return Ok(None);
    };
    let mut scores = Vec::with_capacity(publication.category_ids.len());
    for c in &publication.category_ids {
        let pool = baselines.get(c, publication.year)?;
        if let Some(jif) = corpus.impact_factor(journal, publication.year, c) {
            scores.push(percentile_in_sorted(&pool.impact_factors, &jif));
        }
    }
    Ok(mean_of(scores.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationQuality {
    pub pub_id: String,
    pub qi_c_ave: f64,
    pub qi_c_perc: f64,
    pub qi_if: Option<f64>,
}

impl PublicationQuality {
    pub fn value(&self, indicator: QualityIndicator) -> Option<f64> {
        match indicator {
            QualityIndicator::QiCAve => Some(self.qi_c_ave),
            QualityIndicator::QiCPerc => Some(self.qi_c_perc),
            QualityIndicator::QiIf => self.qi_if,
        }
    }
}

/// Quality of every corpus publication, in corpus order.
pub fn publication_quality(
    corpus: &Corpus,
    baselines: &BaselineTable,
) -> Result<Vec<PublicationQuality>> {
    corpus
        .publications()
        .iter()
        .map(|p| {
            Ok(PublicationQuality {
                pub_id: p.pub_id.clone(),
                qi_c_ave: qi_c_ave(p, baselines)?,
                qi_c_perc: qi_c_perc(p, baselines)?,
                qi_if: qi_if(p, corpus, baselines)?,
            })
        })
        .collect()
}

/// Productivity and quality summary of one researcher.
///
/// `best_*` are maxima and `mean_*` averages over the researcher's publications;
/// impact-factor values skip publications without an impact factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearcherMetrics {
    pub researcher_id: String,
    pub sds_id: String,
    pub p: u32,
    pub fp: f64,
    /// Sum of qi_c_ave over the researcher's publications.
    pub c_o: f64,
    pub best_qi_c_ave: Option<f64>,
    pub best_qi_c_perc: Option<f64>,
    pub best_qi_if: Option<f64>,
    pub mean_qi_c_ave: Option<f64>,
    pub mean_qi_c_perc: Option<f64>,
    pub mean_qi_if: Option<f64>,
}

impl ResearcherMetrics {
    pub fn productivity(&self, indicator: ProductivityIndicator) -> f64 {
        match indicator {
            ProductivityIndicator::P => self.p as f64,
            ProductivityIndicator::FP => self.fp,
        }
    }

    pub fn best(&self, indicator: QualityIndicator) -> Option<f64> {
        match indicator {
            QualityIndicator::QiCAve => self.best_qi_c_ave,
            QualityIndicator::QiCPerc => self.best_qi_c_perc,
            QualityIndicator::QiIf => self.best_qi_if,
        }
    }

    pub fn mean(&self, indicator: QualityIndicator) -> Option<f64> {
        match indicator {
            QualityIndicator::QiCAve => self.mean_qi_c_ave,
            QualityIndicator::QiCPerc => self.mean_qi_c_perc,
            QualityIndicator::QiIf => self.mean_qi_if,
        }
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.max(v)))
    })
}

/// Metrics for every researcher of the corpus, in corpus order.
pub fn researcher_metrics(
    corpus: &Corpus,
    baselines: &BaselineTable,
) -> Result<Vec<ResearcherMetrics>> {
    let quality = publication_quality(corpus, baselines)?;
    Ok(researcher_metrics_with(corpus, &quality))
}

/// As [`researcher_metrics`], reusing precomputed publication quality.
pub fn researcher_metrics_with(
    corpus: &Corpus,
    quality: &[PublicationQuality],
) -> Vec<ResearcherMetrics> {
    let by_id: std::collections::HashMap<&str, &PublicationQuality> =
        quality.iter().map(|q| (q.pub_id.as_str(), q)).collect();
    corpus
        .researchers()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pubs: Vec<(&PublicationRecord, &PublicationQuality)> = corpus
                .authored_by(i)
                .map(|p| (p, by_id[p.pub_id.as_str()]))
                .collect();
            let fp = pubs
                .iter()
                .map(|(p, _)| 1.0 / p.total_author_count as f64)
                .sum();
            let c_o = pubs.iter().map(|(_, q)| q.qi_c_ave).sum();
            let ave = || pubs.iter().map(|(_, q)| q.qi_c_ave);
            let perc = || pubs.iter().map(|(_, q)| q.qi_c_perc);
            let jif = || pubs.iter().filter_map(|(_, q)| q.qi_if);
            ResearcherMetrics {
                researcher_id: r.researcher_id.clone(),
                sds_id: r.sds_id.clone(),
                p: pubs.len() as u32,
                fp,
                c_o,
                best_qi_c_ave: max_of(ave()),
                best_qi_c_perc: max_of(perc()),
                best_qi_if: max_of(jif()),
                mean_qi_c_ave: mean_of(ave()),
                mean_qi_c_perc: mean_of(perc()),
                mean_qi_if: mean_of(jif()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Classification, JournalImpactRecord, ResearcherRecord};
    use proptest::prelude::*;

    fn researcher(id: &str) -> ResearcherRecord {
        ResearcherRecord {
            researcher_id: id.into(),
            sds_id: "S".into(),
            changed_university: false,
            changed_sds: false,
            entered_during_period: false,
            left_during_period: false,
        }
    }

    fn publication(
        id: &str,
        cites: u64,
        cats: &[&str],
        journal: Option<&str>,
        total: u32,
    ) -> PublicationRecord {
        PublicationRecord {
            pub_id: id.into(),
            year: 2003,
            citation_count: cites,
            journal_id: journal.map(str::to_owned),
            total_author_count: total,
            category_ids: cats.iter().map(|s| s.to_string()).collect(),
            corpus_author_ids: vec!["r1".into()],
        }
    }

    fn corpus(pubs: Vec<PublicationRecord>, journals: Vec<JournalImpactRecord>) -> Corpus {
        let mut cls = Classification::new();
        cls.insert("S", "U", "");
        Corpus::new((2001, 2005), vec![researcher("r1")], pubs, journals, cls).unwrap()
    }

    fn brute_percentile(pool: &[f64], x: f64) -> f64 {
        if pool.len() == 1 {
            return 50.0;
        }
        // Remove one copy of x itself, then count the others above it.
        let others = pool.len() - 1;
        let greater = pool.iter().filter(|&&v| v > x).count();
        100.0 * (1.0 - greater as f64 / others as f64)
    }

    #[test]
    fn pool_mean_and_multiset() {
        let c = corpus(
            vec![
                publication("a", 0, &["A"], None, 1),
                publication("b", 2, &["A"], None, 1),
                publication("c", 4, &["A"], None, 1),
            ],
            vec![],
        );
        let b = build_baselines(&c);
        let pool = b.get("A", 2003).unwrap();
        assert_eq!(pool.mean_citations, 2.0);
        assert_eq!(pool.citations, vec![0, 2, 4]);
        assert!(b.get("A", 2004).is_err());
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn multi_category_publication_enters_every_pool() {
        let c = corpus(vec![publication("a", 3, &["A", "B"], None, 1)], vec![]);
        let b = build_baselines(&c);
        assert_eq!(b.get("A", 2003).unwrap().citations, vec![3]);
        assert_eq!(b.get("B", 2003).unwrap().citations, vec![3]);
    }

    #[test]
    fn forty_percent_above_mean_scores_1_40() {
        // Pool mean 5: citations {7, 3, 5}.
        let c = corpus(
            vec![
                publication("a", 7, &["A"], None, 1),
                publication("b", 3, &["A"], None, 1),
                publication("c", 5, &["A"], None, 1),
            ],
            vec![],
        );
        let b = build_baselines(&c);
        let v = qi_c_ave(c.publication("a").unwrap(), &b).unwrap();
        assert!((v - 1.40).abs() < 1e-12);
    }

    #[test]
    fn uniform_pool_gives_unit_ratio() {
        let pubs = (0..5)
            .map(|i| publication(&format!("p{i}"), 6, &["A"], None, 1))
            .collect();
        let c = corpus(pubs, vec![]);
        let b = build_baselines(&c);
        for p in c.publications() {
            assert_eq!(qi_c_ave(p, &b).unwrap(), 1.0);
        }
    }

    #[test]
    fn multi_category_ratio_is_mean_of_pool_ratios() {
        // A pool: {4, 0} mean 2 -> ratio 2.0; B pool: {4, 4} mean 4 -> ratio 1.0.
        let c = corpus(
            vec![
                publication("x", 4, &["A", "B"], None, 1),
                publication("a", 0, &["A"], None, 1),
                publication("b", 4, &["B"], None, 1),
            ],
            vec![],
        );
        let b = build_baselines(&c);
        let per_a = 4.0 / b.get("A", 2003).unwrap().mean_citations;
        let per_b = 4.0 / b.get("B", 2003).unwrap().mean_citations;
        assert_eq!((per_a, per_b), (2.0, 1.0));
        assert_eq!(qi_c_ave(c.publication("x").unwrap(), &b).unwrap(), 1.5);
    }

    #[test]
    fn zero_mean_pool_conventions() {
        let c = corpus(vec![publication("a", 0, &["A"], None, 1)], vec![]);
        let b = build_baselines(&c);
        assert_eq!(qi_c_ave(c.publication("a").unwrap(), &b).unwrap(), 0.0);
        let cited = publication("z", 1, &["A"], None, 1);
        assert!(matches!(
            qi_c_ave(&cited, &b),
            Err(Error::UndefinedBaseline { .. })
        ));
    }

    #[test]
    fn percentile_examples() {
        // Pool of 11, exactly one other strictly greater.
        let mut pool: Vec<u64> = (0..9).collect();
        pool.extend([20, 30]);
        assert!((percentile_in_sorted(&pool, &20) - 90.0).abs() < 1e-12);
        assert_eq!(percentile_in_sorted(&pool, &30), 100.0);
        assert_eq!(percentile_in_sorted(&[7u64], &7), 50.0);

        let pool = [1u64, 2, 2, 3];
        let expected = brute_percentile(&[1.0, 2.0, 2.0, 3.0], 2.0);
        assert!((expected - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(percentile_in_sorted(&pool, &2), expected);
    }

    #[test]
    fn tied_publications_share_citation_percentile() {
        let c = corpus(
            vec![
                publication("a", 1, &["A"], None, 1),
                publication("b", 2, &["A"], None, 1),
                publication("c", 2, &["A"], None, 1),
                publication("d", 3, &["A"], None, 1),
            ],
            vec![],
        );
        let b = build_baselines(&c);
        let sb = qi_c_perc(c.publication("b").unwrap(), &b).unwrap();
        let sc = qi_c_perc(c.publication("c").unwrap(), &b).unwrap();
        assert_eq!(sb, sc);
        assert!((sb - 66.666_666_666_666_67).abs() < 1e-9);
    }

    fn jif(j: &str, v: f64) -> JournalImpactRecord {
        JournalImpactRecord {
            journal_id: j.into(),
            year: 2003,
            category_id: "A".into(),
            impact_factor: v,
        }
    }

    #[test]
    fn impact_factor_percentile() {
        let c = corpus(
            vec![
                publication("a", 1, &["A"], Some("J05"), 1),
                publication("b", 1, &["A"], Some("J10"), 1),
                publication("c", 1, &["A"], Some("J10"), 1),
                publication("d", 1, &["A"], Some("J20"), 1),
                publication("e", 1, &["A"], Some("Jnone"), 1),
                publication("f", 1, &["A"], None, 1),
            ],
            vec![jif("J05", 0.5), jif("J10", 1.0), jif("J20", 2.0)],
        );
        let b = build_baselines(&c);
        assert_eq!(
            b.get("A", 2003).unwrap().impact_factors,
            vec![0.5, 1.0, 1.0, 2.0]
        );
        let v = qi_if(c.publication("b").unwrap(), &c, &b).unwrap().unwrap();
        assert!((v - brute_percentile(&[0.5, 1.0, 1.0, 2.0], 1.0)).abs() < 1e-12);
        assert!((v - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(
            qi_if(c.publication("d").unwrap(), &c, &b).unwrap(),
            Some(100.0)
        );
        assert_eq!(qi_if(c.publication("e").unwrap(), &c, &b).unwrap(), None);
        assert_eq!(qi_if(c.publication("f").unwrap(), &c, &b).unwrap(), None);
    }

    #[test]
    fn fractional_productivity_sums_reciprocals() {
        let c = corpus(
            vec![
                publication("a", 1, &["A"], None, 1),
                publication("b", 2, &["A"], None, 2),
                publication("c", 3, &["A"], None, 4),
            ],
            vec![],
        );
        let m = researcher_metrics(&c, &build_baselines(&c)).unwrap();
        assert_eq!(m[0].p, 3);
        assert_eq!(m[0].fp, 1.0 + 0.5 + 0.25);
        assert!(m[0].c_o >= m[0].best_qi_c_ave.unwrap());
        assert_eq!(m[0].best_qi_if, None);
    }

    #[test]
    fn researcher_without_publications_has_empty_metrics() {
        let mut cls = Classification::new();
        cls.insert("S", "U", "");
        let c = Corpus::new(
            (2001, 2005),
            vec![researcher("r1"), researcher("r2")],
            vec![publication("a", 1, &["A"], None, 1)],
            vec![],
            cls,
        )
        .unwrap();
        let m = researcher_metrics(&c, &build_baselines(&c)).unwrap();
        let r2 = &m[1];
        assert_eq!((r2.p, r2.fp, r2.c_o), (0, 0.0, 0.0));
        assert!(
            r2.best_qi_c_ave.is_none() && r2.best_qi_c_perc.is_none() && r2.best_qi_if.is_none()
        );
    }

    proptest! {
        #[test]
        fn percentile_matches_brute_force_and_is_monotone(mut pool in prop::collection::vec(0u64..20, 1..40)) {
            pool.sort_unstable();
            let as_f: Vec<f64> = pool.iter().map(|&v| v as f64).collect();
            let mut prev = f64::NEG_INFINITY;
            for &x in &pool {
                let s = percentile_in_sorted(&pool, &x);
                prop_assert_eq!(s, brute_percentile(&as_f, x as f64));
                prop_assert!((0.0..=100.0).contains(&s));
                prop_assert!(s >= prev);
                prev = s;
            }
        }

        #[test]
        fn citation_indicators_are_invariant_under_rescaling(
            cites in prop::collection::vec(0u64..50, 2..30),
            k in 1u64..7,
        ) {
            let build = |scale: u64| {
                let pubs = cites
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| publication(&format!("p{i}"), c * scale, &["A"], None, 1))
                    .collect();
                corpus(pubs, vec![])
            };
            let (c1, ck) = (build(1), build(k));
            let (b1, bk) = (build_baselines(&c1), build_baselines(&ck));
            let q1 = publication_quality(&c1, &b1).unwrap();
            let qk = publication_quality(&ck, &bk).unwrap();
            let mut mean = 0.0;
            for (a, b) in q1.iter().zip(&qk) {
                prop_assert!((a.qi_c_ave - b.qi_c_ave).abs() < 1e-12);
                prop_assert_eq!(a.qi_c_perc, b.qi_c_perc);
                mean += a.qi_c_ave;
            }
            mean /= q1.len() as f64;
            if b1.get("A", 2003).unwrap().mean_citations > 0.0 {
                prop_assert!((mean - 1.0).abs() < 1e-12);
            }
        }
    }
}
