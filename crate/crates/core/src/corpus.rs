//! Corpus loading, validation and the field-of-observation filters.
//!
//! A corpus is read from six comma-separated files with a header row:
//!
//! | file                 | columns                                                          |
//! |----------------------|------------------------------------------------------------------|
//! | `researchers.csv`    | `researcher_id,sds_id,changed_university,changed_sds,entered,left` |
//! | `publications.csv`   | `pub_id,year,citation_count,journal_id,total_author_count`       |
//! | `pub_categories.csv` | `pub_id,category_id`                                             |
//! | `pub_authors.csv`    | `pub_id,researcher_id`                                           |
//! | `journals.csv`       | `journal_id,year,category_id,impact_factor`                      |
//! | `classification.csv` | `sds_id,uda_id,sds_name`                                         |
//!
//! Parsing is strict: headers must match exactly, keys must be unique and every
//! reference must resolve. The only rows dropped without failing the load are
//! publications dated outside the observation window, together with their
//! category and author rows; they are counted in [`LoadReport`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};

pub const RESEARCHERS_FILE: &str = "researchers.csv";
pub const PUBLICATIONS_FILE: &str = "publications.csv";
pub const PUB_CATEGORIES_FILE: &str = "pub_categories.csv";
pub const PUB_AUTHORS_FILE: &str = "pub_authors.csv";
pub const JOURNALS_FILE: &str = "journals.csv";
pub const CLASSIFICATION_FILE: &str = "classification.csv";

/// All input files, in load order.
pub const INPUT_FILES: [&str; 6] = [
    CLASSIFICATION_FILE,
    RESEARCHERS_FILE,
    PUBLICATIONS_FILE,
    PUB_CATEGORIES_FILE,
    PUB_AUTHORS_FILE,
    JOURNALS_FILE,
];

const RESEARCHERS_HEADER: [&str; 6] = [
    "researcher_id",
    "sds_id",
    "changed_university",
    "changed_sds",
    "entered",
    "left",
];
const PUBLICATIONS_HEADER: [&str; 5] = [
    "pub_id",
    "year",
    "citation_count",
    "journal_id",
    "total_author_count",
];
const PUB_CATEGORIES_HEADER: [&str; 2] = ["pub_id", "category_id"];
const PUB_AUTHORS_HEADER: [&str; 2] = ["pub_id", "researcher_id"];
const JOURNALS_HEADER: [&str; 4] = ["journal_id", "year", "category_id", "impact_factor"];
const CLASSIFICATION_HEADER: [&str; 3] = ["sds_id", "uda_id", "sds_name"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearcherRecord {
    pub researcher_id: String,
    pub sds_id: String,
    pub changed_university: bool,
    pub changed_sds: bool,
    pub entered_during_period: bool,
    pub left_during_period: bool,
}

impl ResearcherRecord {
    /// A researcher is stable when none of the four mobility flags is set.
    pub fn is_stable(&self) -> bool {
        !(self.changed_university
            || self.changed_sds
            || self.entered_during_period
            || self.left_during_period)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub year: i32,
    pub citation_count: u64,
    pub journal_id: Option<String>,
    /// All co-authors, including those outside the corpus.
    pub total_author_count: u32,
    pub category_ids: Vec<String>,
    /// Authors that are corpus researchers. Empty only after filtering.
    pub corpus_author_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalImpactRecord {
    pub journal_id: String,
    pub year: i32,
    pub category_id: String,
    pub impact_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdsInfo {
    pub uda_id: String,
    pub name: String,
}

/// SDS to UDA mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    sectors: BTreeMap<String, SdsInfo>,
}

impl Classification {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the SDS was already present.
    pub fn insert(
        &mut self,
        sds_id: impl Into<String>,
        uda_id: impl Into<String>,
        name: impl Into<String>,
    ) -> bool {
        let sds_id = sds_id.into();
        if self.sectors.contains_key(&sds_id) {
            return false;
        }
        self.sectors.insert(
            sds_id,
            SdsInfo {
                uda_id: uda_id.into(),
                name: name.into(),
            },
        );
        true
    }

    pub fn get(&self, sds_id: &str) -> Option<&SdsInfo> {
        self.sectors.get(sds_id)
    }

    pub fn uda_of(&self, sds_id: &str) -> Option<&str> {
        self.sectors.get(sds_id).map(|s| s.uda_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SdsInfo)> {
        self.sectors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn udas(&self) -> BTreeSet<&str> {
        self.sectors.values().map(|s| s.uda_id.as_str()).collect()
    }
}

/// Per-file row accounting from [`load_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileCount {
    pub rows: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub files: BTreeMap<String, FileCount>,
}

impl LoadReport {
    pub fn accepted(&self, file: &str) -> usize {
        self.files
            .get(file)
            .map(|c| c.rows - c.rejected)
            .unwrap_or(0)
    }
}

/// Validated, immutable corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    window: (i32, i32),
    researchers: Vec<ResearcherRecord>,
    publications: Vec<PublicationRecord>,
    journals: Vec<JournalImpactRecord>,
    classification: Classification,
    researcher_index: HashMap<String, usize>,
    publication_index: HashMap<String, usize>,
    authored: Vec<Vec<usize>>,
    /// journal -> category -> year -> impact factor
    impact: HashMap<String, HashMap<String, HashMap<i32, f64>>>,
    report: LoadReport,
}

impl Corpus {
    /// Validates the records and builds the lookup indexes.
    pub fn new(
        window: (i32, i32),
        researchers: Vec<ResearcherRecord>,
        publications: Vec<PublicationRecord>,
        journals: Vec<JournalImpactRecord>,
        classification: Classification,
    ) -> Result<Self> {
        Self::build(
            window,
            researchers,
            publications,
            journals,
            classification,
            true,
        )
    }

    fn build(
        window: (i32, i32),
        researchers: Vec<ResearcherRecord>,
        publications: Vec<PublicationRecord>,
        journals: Vec<JournalImpactRecord>,
        classification: Classification,
        require_authors: bool,
    ) -> Result<Self> {
        if window.0 > window.1 {
            return Err(Error::Config(format!(
                "observation window {}..{} is empty",
                window.0, window.1
            )));
        }
        let mut researcher_index = HashMap::with_capacity(researchers.len());
        for (i, r) in researchers.iter().enumerate() {
            if researcher_index
                .insert(r.researcher_id.clone(), i)
                .is_some()
            {
                return Err(Error::DuplicateKey {
                    file: RESEARCHERS_FILE.into(),
                    line: i as u64 + 2,
                    key: r.researcher_id.clone(),
                });
            }
            if classification.get(&r.sds_id).is_none() {
                return Err(Error::DanglingReference {
                    file: RESEARCHERS_FILE.into(),
                    line: i as u64 + 2,
                    entity: format!("researcher {}", r.researcher_id),
                    kind: "sds",
                    key: r.sds_id.clone(),
                });
            }
        }

        let mut publication_index = HashMap::with_capacity(publications.len());
        let mut authored = vec![Vec::new(); researchers.len()];
        for (i, p) in publications.iter().enumerate() {
            let invalid = |message: String| Error::InvalidPublication {
                pub_id: p.pub_id.clone(),
                message,
            };
            if publication_index.insert(p.pub_id.clone(), i).is_some() {
                return Err(invalid("duplicate pub_id".into()));
            }
            if p.year < window.0 || p.year > window.1 {
                return Err(invalid(format!(
                    "year {} outside observation window {}..={}",
                    p.year, window.0, window.1
                )));
            }
            if p.total_author_count == 0 {
                return Err(invalid("total_author_count must be positive".into()));
            }
            if p.category_ids.is_empty() {
                return Err(invalid("no subject categories".into()));
            }
            let mut seen = HashSet::new();
            for c in &p.category_ids {
                if !seen.insert(c.as_str()) {
                    return Err(invalid(format!("category {c} listed twice")));
                }
            }
            if require_authors && p.corpus_author_ids.is_empty() {
                return Err(invalid("no corpus authors".into()));
            }
            let mut seen = HashSet::new();
            for a in &p.corpus_author_ids {
                if !seen.insert(a.as_str()) {
                    return Err(invalid(format!("author {a} listed twice")));
                }
                let Some(&ri) = researcher_index.get(a) else {
                    return Err(invalid(format!("author {a} is not a corpus researcher")));
                };
                authored[ri].push(i);
            }
            if (p.total_author_count as usize) < p.corpus_author_ids.len() {
                return Err(invalid(format!(
                    "total_author_count {} is below the {} corpus authors",
                    p.total_author_count,
                    p.corpus_author_ids.len()
                )));
            }
        }

        let mut impact: HashMap<String, HashMap<String, HashMap<i32, f64>>> = HashMap::new();
        for (i, j) in journals.iter().enumerate() {
            if !(j.impact_factor >= 0.0 && j.impact_factor.is_finite()) {
                return Err(Error::MalformedRow {
                    file: JOURNALS_FILE.into(),
                    line: i as u64 + 2,
                    message: format!(
                        "impact_factor {} must be finite and non-negative",
                        j.impact_factor
                    ),
                });
            }
            let slot = impact
                .entry(j.journal_id.clone())
                .or_default()
                .entry(j.category_id.clone())
                .or_default();
            if slot.insert(j.year, j.impact_factor).is_some() {
                return Err(Error::DuplicateKey {
                    file: JOURNALS_FILE.into(),
                    line: i as u64 + 2,
                    key: format!("{}/{}/{}", j.journal_id, j.year, j.category_id),
                });
            }
        }

        let mut report = LoadReport::default();
        report.files.insert(
            CLASSIFICATION_FILE.into(),
            FileCount {
                rows: classification.len(),
                rejected: 0,
            },
        );
        report.files.insert(
            RESEARCHERS_FILE.into(),
            FileCount {
                rows: researchers.len(),
                rejected: 0,
            },
        );
        report.files.insert(
            PUBLICATIONS_FILE.into(),
            FileCount {
                rows: publications.len(),
                rejected: 0,
            },
        );
        report.files.insert(
            PUB_CATEGORIES_FILE.into(),
            FileCount {
                rows: publications.iter().map(|p| p.category_ids.len()).sum(),
                rejected: 0,
            },
        );
        report.files.insert(
            PUB_AUTHORS_FILE.into(),
            FileCount {
                rows: publications.iter().map(|p| p.corpus_author_ids.len()).sum(),
                rejected: 0,
            },
        );
        report.files.insert(
            JOURNALS_FILE.into(),
            FileCount {
                rows: journals.len(),
                rejected: 0,
            },
        );

        Ok(Corpus {
            window,
            researchers,
            publications,
            journals,
            classification,
            researcher_index,
            publication_index,
            authored,
            impact,
            report,
        })
    }

    pub fn window(&self) -> (i32, i32) {
        self.window
    }

    pub fn researchers(&self) -> &[ResearcherRecord] {
        &self.researchers
    }

    pub fn publications(&self) -> &[PublicationRecord] {
        &self.publications
    }

    pub fn journals(&self) -> &[JournalImpactRecord] {
        &self.journals
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn load_report(&self) -> &LoadReport {
        &self.report
    }

    pub fn researcher(&self, id: &str) -> Option<&ResearcherRecord> {
        self.researcher_index.get(id).map(|&i| &self.researchers[i])
    }

    pub fn publication(&self, id: &str) -> Option<&PublicationRecord> {
        self.publication_index
            .get(id)
            .map(|&i| &self.publications[i])
    }

    /// Publications attributed to the researcher at `index` in [`Corpus::researchers`].
    pub fn authored_by(&self, index: usize) -> impl Iterator<Item = &PublicationRecord> {
        self.authored[index].iter().map(|&i| &self.publications[i])
    }

    pub fn publication_count_of(&self, index: usize) -> usize {
        self.authored[index].len()
    }

    /// Impact factor of a journal for a (year, category), if recorded.
    pub fn impact_factor(&self, journal_id: &str, year: i32, category_id: &str) -> Option<f64> {
        self.impact
            .get(journal_id)
            .and_then(|by_cat| by_cat.get(category_id))
            .and_then(|by_year| by_year.get(&year))
            .copied()
    }

    /// Writes the corpus in the six-file input format.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let flag = |b: bool| if b { "1" } else { "0" };

        write_csv(dir, CLASSIFICATION_FILE, &CLASSIFICATION_HEADER, |w| {
            for (sds, info) in self.classification.iter() {
                w.write_record([sds, info.uda_id.as_str(), info.name.as_str()])?;
            }
            Ok(())
        })?;
        write_csv(dir, RESEARCHERS_FILE, &RESEARCHERS_HEADER, |w| {
            for r in &self.researchers {
                w.write_record([
                    r.researcher_id.as_str(),
                    r.sds_id.as_str(),
                    flag(r.changed_university),
                    flag(r.changed_sds),
                    flag(r.entered_during_period),
                    flag(r.left_during_period),
                ])?;
            }
            Ok(())
        })?;
        write_csv(dir, PUBLICATIONS_FILE, &PUBLICATIONS_HEADER, |w| {
            for p in &self.publications {
                w.write_record([
                    p.pub_id.clone(),
                    p.year.to_string(),
                    p.citation_count.to_string(),
                    p.journal_id.clone().unwrap_or_default(),
                    p.total_author_count.to_string(),
                ])?;
            }
            Ok(())
        })?;
        write_csv(dir, PUB_CATEGORIES_FILE, &PUB_CATEGORIES_HEADER, |w| {
            for p in &self.publications {
                for c in &p.category_ids {
                    w.write_record([p.pub_id.as_str(), c.as_str()])?;
                }
            }
            Ok(())
        })?;
        write_csv(dir, PUB_AUTHORS_FILE, &PUB_AUTHORS_HEADER, |w| {
            for p in &self.publications {
                for a in &p.corpus_author_ids {
                    w.write_record([p.pub_id.as_str(), a.as_str()])?;
                }
            }
            Ok(())
        })?;
        write_csv(dir, JOURNALS_FILE, &JOURNALS_HEADER, |w| {
            for j in &self.journals {
                w.write_record([
                    j.journal_id.clone(),
                    j.year.to_string(),
                    j.category_id.clone(),
                    j.impact_factor.to_string(),
                ])?;
            }
            Ok(())
        })?;
        Ok(())
    }
}

fn write_csv<F>(dir: &Path, name: &str, header: &[&str], body: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<File>) -> csv::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let to_err = |e: csv::Error| Error::Internal(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(to_err)?;
    body(&mut w).map_err(to_err)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

struct CsvFile {
    name: &'static str,
    reader: csv::Reader<File>,
}

impl CsvFile {
    fn open(dir: &Path, name: &'static str, header: &[&str]) -> Result<Self> {
        let path: PathBuf = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(file);
        let found = reader.headers().map_err(|e| Error::MalformedRow {
            file: name.into(),
            line: 1,
            message: e.to_string(),
        })?;
        if found.iter().ne(header.iter().copied()) {
            return Err(Error::MalformedRow {
                file: name.into(),
                line: 1,
                message: format!(
                    "header must be `{}`, found `{}`",
                    header.join(","),
                    found.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        Ok(CsvFile { name, reader })
    }

    /// Visits each record with its 1-based line number.
    fn for_each<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(&csv::StringRecord, u64) -> Result<()>,
    {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map(|p| p.line()).unwrap_or(0);
                    f(&record, line)?;
                }
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    return Err(Error::MalformedRow {
                        file: self.name.into(),
                        line,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
}

fn field<'r>(
    file: &str,
    line: u64,
    rec: &'r csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<&'r str> {
    let v = rec.get(idx).unwrap_or("");
    if v.is_empty() {
        return Err(Error::MalformedRow {
            file: file.into(),
            line,
            message: format!("empty {name}"),
        });
    }
    Ok(v)
}

fn parse<T: std::str::FromStr>(file: &str, line: u64, raw: &str, name: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::MalformedRow {
        file: file.into(),
        line,
        message: format!("invalid {name} {raw:?}"),
    })
}

fn parse_flag(file: &str, line: u64, raw: &str, name: &str) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::MalformedRow {
            file: file.into(),
            line,
            message: format!("{name} must be 0 or 1, got {raw:?}"),
        }),
    }
}

/// Reads and validates the six input files in `dir`.
pub fn load_corpus(dir: &Path, config: &EngineConfig) -> Result<Corpus> {
    config.validate()?;
    let mut counts: BTreeMap<String, FileCount> = BTreeMap::new();

    let mut classification = Classification::new();
    let mut f = CsvFile::open(dir, CLASSIFICATION_FILE, &CLASSIFICATION_HEADER)?;
    let mut c = FileCount::default();
    f.for_each(|rec, line| {
        c.rows += 1;
        let sds = field(CLASSIFICATION_FILE, line, rec, 0, "sds_id")?;
        let uda = field(CLASSIFICATION_FILE, line, rec, 1, "uda_id")?;
        let name = rec.get(2).unwrap_or("");
        if !classification.insert(sds, uda, name) {
            return Err(Error::DuplicateKey {
                file: CLASSIFICATION_FILE.into(),
                line,
                key: sds.into(),
            });
        }
        Ok(())
    })?;
    counts.insert(CLASSIFICATION_FILE.into(), c);

    let mut researchers = Vec::new();
    let mut seen_researchers: HashMap<String, u64> = HashMap::new();
    let mut f = CsvFile::open(dir, RESEARCHERS_FILE, &RESEARCHERS_HEADER)?;
    let mut c = FileCount::default();
    f.for_each(|rec, line| {
        c.rows += 1;
        let file = RESEARCHERS_FILE;
        let id = field(file, line, rec, 0, "researcher_id")?;
        let sds = field(file, line, rec, 1, "sds_id")?;
        if seen_researchers.insert(id.to_owned(), line).is_some() {
            return Err(Error::DuplicateKey {
                file: file.into(),
                line,
                key: id.into(),
            });
        }
        if classification.get(sds).is_none() {
            return Err(Error::DanglingReference {
                file: file.into(),
                line,
                entity: format!("researcher {id}"),
                kind: "sds",
                key: sds.into(),
            });
        }
        researchers.push(ResearcherRecord {
            researcher_id: id.into(),
            sds_id: sds.into(),
            changed_university: parse_flag(
                file,
                line,
                rec.get(2).unwrap_or(""),
                "changed_university",
            )?,
            changed_sds: parse_flag(file, line, rec.get(3).unwrap_or(""), "changed_sds")?,
            entered_during_period: parse_flag(file, line, rec.get(4).unwrap_or(""), "entered")?,
            left_during_period: parse_flag(file, line, rec.get(5).unwrap_or(""), "left")?,
        });
        Ok(())
    })?;
    counts.insert(RESEARCHERS_FILE.into(), c);

    let mut publications: Vec<PublicationRecord> = Vec::new();
    let mut pub_lines: HashMap<String, (usize, u64)> = HashMap::new();
    let mut out_of_window: HashSet<String> = HashSet::new();
    let mut f = CsvFile::open(dir, PUBLICATIONS_FILE, &PUBLICATIONS_HEADER)?;
    let mut c = FileCount::default();
    f.for_each(|rec, line| {
        c.rows += 1;
        let file = PUBLICATIONS_FILE;
        let id = field(file, line, rec, 0, "pub_id")?;
        if pub_lines.contains_key(id) || out_of_window.contains(id) {
            return Err(Error::DuplicateKey {
                file: file.into(),
                line,
                key: id.into(),
            });
        }
        let year: i32 = parse(file, line, field(file, line, rec, 1, "year")?, "year")?;
        let citation_count: u64 = parse(
            file,
            line,
            field(file, line, rec, 2, "citation_count")?,
            "citation_count",
        )?;
        let journal = rec.get(3).unwrap_or("");
        let total_author_count: u32 = parse(
            file,
            line,
            field(file, line, rec, 4, "total_author_count")?,
            "total_author_count",
        )?;
        if total_author_count == 0 {
            return Err(Error::MalformedRow {
                file: file.into(),
                line,
                message: format!("publication {id}: total_author_count must be positive"),
            });
        }
        if !config.contains_year(year) {
            c.rejected += 1;
            out_of_window.insert(id.into());
            return Ok(());
        }
        pub_lines.insert(id.into(), (publications.len(), line));
        publications.push(PublicationRecord {
            pub_id: id.into(),
            year,
            citation_count,
            journal_id: (!journal.is_empty()).then(|| journal.to_owned()),
            total_author_count,
            category_ids: Vec::new(),
            corpus_author_ids: Vec::new(),
        });
        Ok(())
    })?;
    counts.insert(PUBLICATIONS_FILE.into(), c);

    let mut f = CsvFile::open(dir, PUB_CATEGORIES_FILE, &PUB_CATEGORIES_HEADER)?;
    let mut c = FileCount::default();
    let mut seen_pairs: HashSet<(String, String)> = HashSet::new();
    f.for_each(|rec, line| {
        c.rows += 1;
        let file = PUB_CATEGORIES_FILE;
        let pid = field(file, line, rec, 0, "pub_id")?;
        let cat = field(file, line, rec, 1, "category_id")?;
        if !seen_pairs.insert((pid.into(), cat.into())) {
            return Err(Error::DuplicateKey {
                file: file.into(),
                line,
                key: format!("{pid}/{cat}"),
            });
        }
        match pub_lines.get(pid) {
            Some(&(i, _)) => publications[i].category_ids.push(cat.into()),
            None if out_of_window.contains(pid) => c.rejected += 1,
            None => {
                return Err(Error::DanglingReference {
                    file: file.into(),
                    line,
                    entity: format!("category row {cat}"),
                    kind: "publication",
                    key: pid.into(),
                })
            }
        }
        Ok(())
    })?;
    counts.insert(PUB_CATEGORIES_FILE.into(), c);

    let mut f = CsvFile::open(dir, PUB_AUTHORS_FILE, &PUB_AUTHORS_HEADER)?;
    let mut c = FileCount::default();
    let mut seen_pairs: HashSet<(String, String)> = HashSet::new();
    f.for_each(|rec, line| {
        c.rows += 1;
        let file = PUB_AUTHORS_FILE;
        let pid = field(file, line, rec, 0, "pub_id")?;
        let rid = field(file, line, rec, 1, "researcher_id")?;
        if !seen_pairs.insert((pid.into(), rid.into())) {
            return Err(Error::DuplicateKey {
                file: file.into(),
                line,
                key: format!("{pid}/{rid}"),
            });
        }
        if !seen_researchers.contains_key(rid) {
            return Err(Error::DanglingReference {
                file: file.into(),
                line,
                entity: format!("publication {pid}"),
                kind: "researcher",
                key: rid.into(),
            });
        }
        match pub_lines.get(pid) {
            Some(&(i, _)) => publications[i].corpus_author_ids.push(rid.into()),
            None if out_of_window.contains(pid) => c.rejected += 1,
            None => {
                return Err(Error::DanglingReference {
                    file: file.into(),
                    line,
                    entity: format!("author row {rid}"),
                    kind: "publication",
                    key: pid.into(),
                })
            }
        }
        Ok(())
    })?;
    counts.insert(PUB_AUTHORS_FILE.into(), c);

    let mut journals = Vec::new();
    let mut f = CsvFile::open(dir, JOURNALS_FILE, &JOURNALS_HEADER)?;
    let mut c = FileCount::default();
    let mut seen_keys: HashSet<(String, i32, String)> = HashSet::new();
    f.for_each(|rec, line| {
        c.rows += 1;
        let file = JOURNALS_FILE;
        let jid = field(file, line, rec, 0, "journal_id")?;
        let year: i32 = parse(file, line, field(file, line, rec, 1, "year")?, "year")?;
        let cat = field(file, line, rec, 2, "category_id")?;
        let impact_factor: f64 = parse(
            file,
            line,
            field(file, line, rec, 3, "impact_factor")?,
            "impact_factor",
        )?;
        if !(impact_factor >= 0.0 && impact_factor.is_finite()) {
            return Err(Error::MalformedRow {
                file: file.into(),
                line,
                message: format!("impact_factor {impact_factor} must be finite and non-negative"),
            });
        }
        if !seen_keys.insert((jid.into(), year, cat.into())) {
            return Err(Error::DuplicateKey {
                file: file.into(),
                line,
                key: format!("{jid}/{year}/{cat}"),
            });
        }
        journals.push(JournalImpactRecord {
            journal_id: jid.into(),
            year,
            category_id: cat.into(),
            impact_factor,
        });
        Ok(())
    })?;
    counts.insert(JOURNALS_FILE.into(), c);

    // Row-level checks that need the assembled publication.
    for p in &publications {
        let line = pub_lines[&p.pub_id].1;
        let fail = |message: String| Error::MalformedRow {
            file: PUBLICATIONS_FILE.into(),
            line,
            message: format!("publication {}: {message}", p.pub_id),
        };
        if p.category_ids.is_empty() {
            return Err(fail(format!("no rows in {PUB_CATEGORIES_FILE}")));
        }
        if p.corpus_author_ids.is_empty() {
            return Err(fail(format!("no rows in {PUB_AUTHORS_FILE}")));
        }
        if (p.total_author_count as usize) < p.corpus_author_ids.len() {
            return Err(fail(format!(
                "total_author_count {} is below the {} corpus authors",
                p.total_author_count,
                p.corpus_author_ids.len()
            )));
        }
    }

    let mut corpus = Corpus::new(
        (config.window_start, config.window_end),
        researchers,
        publications,
        journals,
        classification,
    )?;
    corpus.report = LoadReport { files: counts };
    Ok(corpus)
}

/// Drops every researcher with a mobility flag set and unlinks their authorships.
///
/// Publications stay in the corpus so they still enter normalization baselines,
/// and `total_author_count` is unchanged.
pub fn apply_stability_filter(corpus: &Corpus) -> Corpus {
    let researchers: Vec<ResearcherRecord> = corpus
        .researchers
        .iter()
        .filter(|r| r.is_stable())
        .cloned()
        .collect();
    let kept: HashSet<&str> = researchers
        .iter()
        .map(|r| r.researcher_id.as_str())
        .collect();
    let publications = corpus
        .publications
        .iter()
        .map(|p| PublicationRecord {
            corpus_author_ids: p
                .corpus_author_ids
                .iter()
                .filter(|a| kept.contains(a.as_str()))
                .cloned()
                .collect(),
            ..p.clone()
        })
        .collect();
    let mut filtered = Corpus::build(
        corpus.window,
        researchers,
        publications,
        corpus.journals.clone(),
        corpus.classification.clone(),
        false,
    )
    .expect("filtering a valid corpus keeps it valid");
    filtered.report = corpus.report.clone();
    filtered
}

/// Publishing statistics of one SDS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SdsActivity {
    pub researchers: usize,
    pub publishing: usize,
}

impl SdsActivity {
    pub fn publishing_fraction(&self) -> Option<f64> {
        (self.researchers > 0).then(|| self.publishing as f64 / self.researchers as f64)
    }
}

/// Researcher and publishing-researcher counts for every SDS in the classification.
pub fn sds_activity(corpus: &Corpus) -> BTreeMap<String, SdsActivity> {
    let mut out: BTreeMap<String, SdsActivity> = corpus
        .classification
        .iter()
        .map(|(s, _)| (s.to_owned(), SdsActivity::default()))
        .collect();
    for (i, r) in corpus.researchers.iter().enumerate() {
        let a = out.get_mut(&r.sds_id).expect("sds validated at load");
        a.researchers += 1;
        if !corpus.authored[i].is_empty() {
            a.publishing += 1;
        }
    }
    out
}

/// SDS in which at least `min_publishing_fraction` of researchers published.
pub fn select_eligible_sds(corpus: &Corpus, min_publishing_fraction: f64) -> BTreeSet<String> {
    sds_activity(corpus)
        .into_iter()
        .filter_map(|(sds, a)| match a.publishing_fraction() {
            None => {
                warn!("SDS {sds} has no researchers; excluded");
                None
            }
            Some(f) if f >= min_publishing_fraction => Some(sds),
            Some(_) => None,
        })
        .collect()
}

/// Human-readable diagnostics for the `validate` command.
pub fn write_diagnostics<W: Write + ?Sized>(
    corpus: &Corpus,
    config: &EngineConfig,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "observation window: {}-{}",
        corpus.window.0, corpus.window.1
    )?;
    for (file, c) in &corpus.report.files {
        writeln!(
            out,
            "{file}: {} rows, {} rejected, {} accepted",
            c.rows,
            c.rejected,
            c.rows - c.rejected
        )?;
    }
    let stable = corpus.researchers.iter().filter(|r| r.is_stable()).count();
    writeln!(
        out,
        "researchers: {} ({} stable)",
        corpus.researchers.len(),
        stable
    )?;
    writeln!(out, "publications: {}", corpus.publications.len())?;
    writeln!(out, "journal impact records: {}", corpus.journals.len())?;
    writeln!(
        out,
        "SDS: {} in {} UDA",
        corpus.classification.len(),
        corpus.classification.udas().len()
    )?;
    let filtered = apply_stability_filter(corpus);
    let eligible = select_eligible_sds(&filtered, config.min_publishing_fraction);
    writeln!(
        out,
        "eligible SDS (publishing fraction >= {}): {}",
        config.min_publishing_fraction,
        eligible.len()
    )?;
    Ok(())
}
