use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tables::{build_table, detail_tables, render_table, Format, Table, TABLE_NAMES};
use super::AnalysisRun;
use crate::config::EngineConfig;
use crate::corpus::INPUT_FILES;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub rows: usize,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
}

/// Provenance record written next to the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub engine_version: String,
    pub seed: Option<u64>,
    pub config: EngineConfig,
    pub input_checksums: BTreeMap<String, String>,
    pub eligible_sds: usize,
    pub researchers: usize,
    pub warnings: Vec<String>,
    pub tables: BTreeMap<String, TableEntry>,
    /// Supplementary tables and the serialized run.
    pub supplementary: BTreeMap<String, TableEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of each input file present in `dir`.
pub fn input_checksums(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for name in INPUT_FILES {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        out.insert(name.to_owned(), sha256_hex(&bytes));
    }
    Ok(out)
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<String> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(sha256_hex(contents))
}

fn write_table(
    dir: &Path,
    table: &Table,
    formats: &[Format],
    precision: usize,
) -> Result<TableEntry> {
    let mut files = BTreeMap::new();
    for &f in formats {
        let name = format!("{}.{}", table.name, f.extension());
        let text = render_table(table, f, precision);
        files.insert(name.clone(), write_file(dir, &name, text.as_bytes())?);
    }
    Ok(TableEntry {
        rows: table.rows.len(),
        files,
    })
}

/// Writes the seven report tables, supplementary tables, `run.json` and
/// `manifest.json` into `dir`. Output depends only on `run`.
pub fn write_report_bundle(run: &AnalysisRun, dir: &Path, formats: &[Format]) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let precision = run.config.precision;
    let mut tables = BTreeMap::new();
    for name in TABLE_NAMES {
        let table = build_table(run, name).expect("known table name");
        tables.insert(
            name.to_owned(),
            write_table(dir, &table, formats, precision)?,
        );
    }
    let mut supplementary = BTreeMap::new();
    for table in detail_tables(run) {
        supplementary.insert(
            table.name.clone(),
            write_table(dir, &table, formats, precision)?,
        );
    }
    let run_json = serde_json::to_vec_pretty(run).map_err(|e| Error::Internal(e.to_string()))?;
    let mut files = BTreeMap::new();
    files.insert(RUN_FILE.to_owned(), write_file(dir, RUN_FILE, &run_json)?);
    supplementary.insert(
        "run".to_owned(),
        TableEntry {
            rows: run.researchers.len(),
            files,
        },
    );

    let manifest = Manifest {
        engine_version: run.engine_version.clone(),
        seed: run.config.seed,
        config: run.config.clone(),
        input_checksums: run.input_checksums.clone(),
        eligible_sds: run.eligible_sds.len(),
        researchers: run.researchers.len(),
        warnings: run.warnings.clone(),
        tables,
        supplementary,
    };
    let text = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    write_file(dir, MANIFEST_FILE, &text)?;
    Ok(manifest)
}

/// Reads a run previously written by [`write_report_bundle`].
pub fn read_run(dir: &Path) -> Result<AnalysisRun> {
    let path = dir.join(RUN_FILE);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    let text = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::json(&path, e))
}
