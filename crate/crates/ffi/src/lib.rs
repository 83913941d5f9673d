//! C ABI over the sciprod engine.
//!
//! Every function returns an [`SpStatus`]. On failure a description is kept
//! per thread and can be read with [`sp_last_error_message`]. Objects are
//! opaque handles released with their matching `_free` function; strings
//! returned by the library are released with [`sp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use sciprod::config::EngineConfig;
use sciprod::corpus::{load_corpus, Corpus};
use sciprod::pipeline::{
    analyze, build_table, render_table, write_report_bundle, AnalysisRun, Format,
};
use sciprod::ranking::percent_rank;
use sciprod::stats::{ols_loglog, rank_sum_distance, Verdict};
use sciprod::synth::{write_synthetic_corpus, SynthParams};
use sciprod::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidString = 2,
    /// Bad configuration, parameters or table name.
    InvalidArgument = 3,
    /// Input data failed validation.
    DataError = 4,
    IoError = 5,
    /// Too few, degenerate or missing observations for a statistic.
    InsufficientData = 6,
    Internal = 7,
}

/// Table output format.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpFormat {
    Csv = 0,
    Markdown = 1,
}

/// Engine configuration handle.
pub struct SpConfig(EngineConfig);

/// Loaded corpus handle.
pub struct SpCorpus(Corpus);

/// Analysis results handle.
pub struct SpRun(AnalysisRun);

/// Log-log regression summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpRegression {
    pub gamma: f64,
    pub intercept_log: f64,
    pub robust_se: f64,
    pub p_gamma_zero: f64,
    pub p_gamma_one: f64,
    pub adj_r2: f64,
    pub pearson_log: f64,
    pub n_obs: usize,
    /// Number of significance stars, 0 to 3.
    pub stars: u32,
}

/// Rank-sum figures for one group.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpGroupRankSum {
    pub size: usize,
    pub r_max: f64,
    pub r_min: f64,
    pub r_eff: f64,
    pub r_diff: f64,
    pub normalized_distance: f64,
    pub u_statistic: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpVerdict {
    #[default]
    Top = 0,
    Rest = 1,
    Tie = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpRankSum {
    pub top: SpGroupRankSum,
    pub rest: SpGroupRankSum,
    pub verdict: SpVerdict,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SpStatus, message: impl Into<String>) -> SpStatus {
    set_error(message.into());
    status
}

fn status_of(e: &Error) -> SpStatus {
    match e {
        Error::Config(_) | Error::InvalidParams(_) | Error::InvalidProbability(_) => {
            SpStatus::InvalidArgument
        }
        Error::Io { .. } | Error::MissingFile(_) => SpStatus::IoError,
        Error::TooFewObservations(_)
        | Error::NonPositiveInput(..)
        | Error::DegenerateDesign
        | Error::Empty(_)
        | Error::ValueAbsent(_)
        | Error::SubjectAbsent(_) => SpStatus::InsufficientData,
        Error::Internal(_) => SpStatus::Internal,
        _ => SpStatus::DataError,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), SpStatus>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SpStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(SpStatus::Internal, "panic inside sciprod"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, SpStatus>;
}

impl<T> OrStatus<T> for sciprod::Result<T> {
    fn or_status(self) -> Result<T, SpStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn string_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, SpStatus> {
    if s.is_null() {
        return Err(fail(SpStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        fail(
            SpStatus::InvalidString,
            format!("{name} is not valid UTF-8"),
        )
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, SpStatus> {
    p.as_ref()
        .ok_or_else(|| fail(SpStatus::NullArgument, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, SpStatus> {
    p.as_mut()
        .ok_or_else(|| fail(SpStatus::NullArgument, format!("{name} is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], SpStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SpStatus::NullArgument, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message describing the last failed call on this thread, or null. Valid
/// until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must be null or a string obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a configuration with default values.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_config_new(out: *mut *mut SpConfig) -> SpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(SpConfig(EngineConfig::default())));
        Ok(())
    })
}

/// Parses a configuration JSON document; missing keys take their defaults.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_config_from_json(
    json: *const c_char,
    out: *mut *mut SpConfig,
) -> SpStatus {
    guard(|| {
        let text = string_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let config = EngineConfig::from_json_str(text).or_status()?;
        *out = Box::into_raw(Box::new(SpConfig(config)));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_config_free(config: *mut SpConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Loads and validates the corpus in directory `dir`.
///
/// # Safety
/// `dir` must be a nul-terminated string, `config` a live handle and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_corpus_load(
    dir: *const c_char,
    config: *const SpConfig,
    out: *mut *mut SpCorpus,
) -> SpStatus {
    guard(|| {
        let dir = PathBuf::from(string_arg(dir, "dir")?);
        let config = ref_arg(config, "config")?;
        let out = out_arg(out, "out")?;
        let corpus = load_corpus(&dir, &config.0).or_status()?;
        *out = Box::into_raw(Box::new(SpCorpus(corpus)));
        Ok(())
    })
}

/// Number of researchers and publications in a corpus.
///
/// # Safety
/// `corpus` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sp_corpus_counts(
    corpus: *const SpCorpus,
    researchers: *mut usize,
    publications: *mut usize,
) -> SpStatus {
    guard(|| {
        let corpus = &ref_arg(corpus, "corpus")?.0;
        *out_arg(researchers, "researchers")? = corpus.researchers().len();
        *out_arg(publications, "publications")? = corpus.publications().len();
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_corpus_free(corpus: *mut SpCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Runs every analysis over `corpus`.
///
/// # Safety
/// `corpus` and `config` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_analyze(
    corpus: *const SpCorpus,
    config: *const SpConfig,
    out: *mut *mut SpRun,
) -> SpStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        let config = ref_arg(config, "config")?;
        let out = out_arg(out, "out")?;
        let run = analyze(&corpus.0, &config.0).or_status()?;
        *out = Box::into_raw(Box::new(SpRun(run)));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_run_free(run: *mut SpRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

fn format_of(f: SpFormat) -> Format {
    match f {
        SpFormat::Csv => Format::Csv,
        SpFormat::Markdown => Format::Markdown,
    }
}

/// Renders one report table (e.g. `"table1_regression_total"`). The string
/// written to `out` must be released with [`sp_string_free`].
///
/// # Safety
/// `run` must be a live handle, `name` a nul-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_run_render_table(
    run: *const SpRun,
    name: *const c_char,
    format: SpFormat,
    out: *mut *mut c_char,
) -> SpStatus {
    guard(|| {
        let run = &ref_arg(run, "run")?.0;
        let name = string_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let table = build_table(run, name)
            .ok_or_else(|| fail(SpStatus::InvalidArgument, format!("unknown table {name:?}")))?;
        let text = render_table(&table, format_of(format), run.config.precision);
        *out = CString::new(text)
            .map_err(|_| fail(SpStatus::Internal, "table contains a nul byte"))?
            .into_raw();
        Ok(())
    })
}

/// Writes the full report bundle into `dir` in both formats.
///
/// # Safety
/// `run` must be a live handle and `dir` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sp_run_write_bundle(run: *const SpRun, dir: *const c_char) -> SpStatus {
    guard(|| {
        let run = &ref_arg(run, "run")?.0;
        let dir = PathBuf::from(string_arg(dir, "dir")?);
        write_report_bundle(run, &dir, &[Format::Csv, Format::Markdown]).or_status()?;
        Ok(())
    })
}

/// Generates a synthetic corpus from a parameters JSON document into `dir`.
///
/// # Safety
/// `params_json` and `dir` must be nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sp_synth_write(
    params_json: *const c_char,
    dir: *const c_char,
) -> SpStatus {
    guard(|| {
        let text = string_arg(params_json, "params_json")?;
        let dir = PathBuf::from(string_arg(dir, "dir")?);
        let params = SynthParams::from_json_str(text).or_status()?;
        write_synthetic_corpus(&params, &dir).or_status()?;
        Ok(())
    })
}

/// Fits ln c = α + γ ln p by OLS with HC1 standard errors.
///
/// # Safety
/// `p` and `c` must each point to `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sp_ols_loglog(
    p: *const f64,
    c: *const f64,
    n: usize,
    out: *mut SpRegression,
) -> SpStatus {
    guard(|| {
        let p = slice_arg(p, n, "p")?;
        let c = slice_arg(c, n, "c")?;
        let out = out_arg(out, "out")?;
        let pairs: Vec<(f64, f64)> = p.iter().copied().zip(c.iter().copied()).collect();
        let r = ols_loglog(&pairs).or_status()?;
        *out = SpRegression {
            gamma: r.gamma,
            intercept_log: r.intercept_log,
            robust_se: r.robust_se,
            p_gamma_zero: r.p_gamma_zero,
            p_gamma_one: r.p_gamma_one,
            adj_r2: r.adj_r2,
            pearson_log: r.pearson_log,
            n_obs: r.n_obs,
            stars: r.stars as u32,
        };
        Ok(())
    })
}

/// %-rank of `values[subject]` among `values`: 100 × (1 − G / (n − 1)) where G
/// counts the values strictly greater.
///
/// # Safety
/// `values` must point to `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sp_percent_rank(
    values: *const f64,
    n: usize,
    subject: usize,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let values = slice_arg(values, n, "values")?;
        let out = out_arg(out, "out")?;
        let keyed: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
        *out = percent_rank(&keyed, &subject).or_status()?;
        Ok(())
    })
}

/// Rank-sum distance criterion for a two-group partition; `is_top[i]` is
/// non-zero for members of the top group.
///
/// # Safety
/// `is_top` and `quality` must each point to `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sp_rank_sum_distance(
    is_top: *const u8,
    quality: *const f64,
    n: usize,
    out: *mut SpRankSum,
) -> SpStatus {
    guard(|| {
        let is_top = slice_arg(is_top, n, "is_top")?;
        let quality = slice_arg(quality, n, "quality")?;
        let out = out_arg(out, "out")?;
        let items: Vec<(bool, f64)> = is_top
            .iter()
            .map(|&t| t != 0)
            .zip(quality.iter().copied())
            .collect();
        let r = rank_sum_distance(&items).or_status()?;
        let group = |g: &sciprod::stats::GroupRankSum| SpGroupRankSum {
            size: g.size,
            r_max: g.r_max,
            r_min: g.r_min,
            r_eff: g.r_eff,
            r_diff: g.r_diff,
            normalized_distance: g.normalized_distance,
            u_statistic: g.u_statistic,
        };
        *out = SpRankSum {
            top: group(&r.top),
            rest: group(&r.rest),
            verdict: match r.verdict {
                Verdict::Top => SpVerdict::Top,
                Verdict::Rest => SpVerdict::Rest,
                Verdict::Tie => SpVerdict::Tie,
            },
        };
        Ok(())
    })
}
