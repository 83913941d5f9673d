//! Engine configuration and the indicator identifiers shared across modules.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Productivity indicator used to select top scientists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProductivityIndicator {
    /// Publication count.
    P,
    /// Fractional productivity: sum of reciprocal author counts.
    FP,
}

impl ProductivityIndicator {
    pub const ALL: [ProductivityIndicator; 2] =
        [ProductivityIndicator::P, ProductivityIndicator::FP];

    pub fn label(self) -> &'static str {
        match self {
            ProductivityIndicator::P => "P",
            ProductivityIndicator::FP => "FP",
        }
    }
}

impl fmt::Display for ProductivityIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProductivityIndicator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(ProductivityIndicator::P),
            "FP" | "fp" => Ok(ProductivityIndicator::FP),
            other => Err(Error::Config(format!(
                "unknown productivity indicator {other:?}"
            ))),
        }
    }
}

/// Publication-level quality indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityIndicator {
    /// Citations relative to the (category, year) mean.
    QiCAve,
    /// Citation percentile within the (category, year) pool.
    QiCPerc,
    /// Journal impact-factor percentile within the (category, year) pool.
    QiIf,
}

impl QualityIndicator {
    pub const ALL: [QualityIndicator; 3] = [
        QualityIndicator::QiCAve,
        QualityIndicator::QiCPerc,
        QualityIndicator::QiIf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            QualityIndicator::QiCAve => "QI_c_ave",
            QualityIndicator::QiCPerc => "QI_c_perc",
            QualityIndicator::QiIf => "QI_if",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            QualityIndicator::QiCAve => "qi_c_ave",
            QualityIndicator::QiCPerc => "qi_c_perc",
            QualityIndicator::QiIf => "qi_if",
        }
    }
}

impl fmt::Display for QualityIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for QualityIndicator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qi_c_ave" => Ok(QualityIndicator::QiCAve),
            "qi_c_perc" => Ok(QualityIndicator::QiCPerc),
            "qi_if" => Ok(QualityIndicator::QiIf),
            other => Err(Error::Config(format!(
                "unknown quality indicator {other:?}"
            ))),
        }
    }
}

fn default_window_start() -> i32 {
    2001
}
fn default_window_end() -> i32 {
    2005
}
fn default_min_publishing_fraction() -> f64 {
    0.5
}
fn default_top_fraction() -> f64 {
    0.10
}
fn default_productivity() -> ProductivityIndicator {
    ProductivityIndicator::P
}
fn default_quality() -> QualityIndicator {
    QualityIndicator::QiCAve
}
fn default_precision() -> usize {
    3
}

/// Run configuration, read from a JSON document. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default = "default_window_start")]
    pub window_start: i32,
    #[serde(default = "default_window_end")]
    pub window_end: i32,
    /// Share of an SDS's researchers that must have published for it to be analysed.
    #[serde(default = "default_min_publishing_fraction")]
    pub min_publishing_fraction: f64,
    /// Share of publishing researchers selected as top scientists.
    #[serde(default = "default_top_fraction")]
    pub top_fraction: f64,
    #[serde(default = "default_productivity")]
    pub productivity_indicator: ProductivityIndicator,
    /// Quality indicator for the per-SDS rank-sum detail table.
    #[serde(default = "default_quality")]
    pub quality_indicator: QualityIndicator,
    /// Top scientists must be in the top group under both P and FP.
    #[serde(default)]
    pub intersection_mode: bool,
    /// Decimal places for reals in rendered tables.
    #[serde(default = "default_precision")]
    pub precision: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            window_start: default_window_start(),
            window_end: default_window_end(),
            min_publishing_fraction: default_min_publishing_fraction(),
            top_fraction: default_top_fraction(),
            productivity_indicator: default_productivity(),
            quality_indicator: default_quality(),
            intersection_mode: false,
            precision: default_precision(),
            seed: None,
        }
    }
}

impl EngineConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: EngineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: EngineConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_start > self.window_end {
            return Err(Error::Config(format!(
                "window_start {} is after window_end {}",
                self.window_start, self.window_end
            )));
        }
        for (name, v) in [
            ("min_publishing_fraction", self.min_publishing_fraction),
            ("top_fraction", self.top_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.precision > 12 {
            return Err(Error::Config(format!(
                "precision must be at most 12, got {}",
                self.precision
            )));
        }
        Ok(())
    }

    pub fn contains_year(&self, year: i32) -> bool {
        (self.window_start..=self.window_end).contains(&year)
    }
}
