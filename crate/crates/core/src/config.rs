//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "moments-small"
//! seed = 42
//! kinds = ["rademacher", "steinhaus"]
//! n = [16, 64, 128]
//! pairs = [[1, 1], [1, 2], [2, 2]]
//! trials = 50
//! ```
//!
//! Every field has a default, so a file only needs what its subcommand
//! reads. Unknown keys are rejected rather than ignored.

use serde::{Deserialize, Serialize};

use crate::dcount::SystemKind;
use crate::error::{Error, Result};
use crate::rmf::RmfKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Jsonl,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json-lines" => Ok(OutputFormat::Jsonl),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SampleEncoding {
    #[default]
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub kinds: Vec<RmfKind>,
    /// Polynomial lengths, strictly increasing.
    pub n: Vec<u64>,
    pub pairs: Vec<(u32, u32)>,
    pub trials: u64,
    /// Evaluation grid size; absent means the smallest exact power of two.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    /// Largest one-side tuple enumeration a count may perform.
    pub enumeration_cap: u64,
    /// Largest coefficient array (elements) the convolution route allocates.
    pub memory_cap: u64,
    /// Width of statistical acceptance bands, in standard errors.
    pub sigmas: f64,
    pub clt_tolerance: f64,
    /// Quantile bands per axis for the CLT measure.
    pub q: usize,
    pub system: SystemKind,
    pub constrained: bool,
    pub max_ell: u32,
    /// Integers to factorize, or tuples for the array factorizations.
    pub values: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<u64>>,
    /// Also report the Liouville polynomial alongside random samples.
    pub liouville: bool,
    /// Directory for raw sample tables written by `sample`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_dir: Option<String>,
    pub sample_encoding: SampleEncoding,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 0,
            kinds: vec![RmfKind::Rademacher, RmfKind::Steinhaus],
            n: vec![16],
            pairs: vec![(1, 1)],
            trials: 100,
            grid: None,
            output: None,
            format: None,
            enumeration_cap: 100_000_000,
            memory_cap: 1 << 26,
            sigmas: 4.0,
            clt_tolerance: 0.02,
            q: 9,
            system: SystemKind::EqualProduct,
            constrained: true,
            max_ell: 4,
            values: Vec::new(),
            columns: None,
            liouville: false,
            sample_dir: None,
            sample_encoding: SampleEncoding::Text,
        }
    }
}

fn field(name: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: name.into(),
        message: message.into(),
    }
}

/// Best-effort field name from a deserializer message such as
/// "unknown field `foo`" or "invalid type ... for key `n`".
fn field_of(message: &str) -> String {
    for marker in ["unknown field `", "missing field `", "for key `"] {
        if let Some(start) = message.find(marker) {
            let rest = &message[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "<file>".into()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = match toml::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                let message = e.message().to_string();
                let name = e
                    .span()
                    .and_then(|s| key_at(text, s.start))
                    .unwrap_or_else(|| field_of(&message));
                return Err(field(&name, message));
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() {
            return Err(field("n", "need at least one length"));
        }
        if self.n.contains(&0) {
            return Err(field("n", "lengths must be positive"));
        }
        if self.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field("n", "lengths must be strictly increasing"));
        }
        if self.kinds.is_empty() {
            return Err(field("kinds", "need at least one kind"));
        }
        if let Some((j, k)) = self.pairs.iter().find(|(j, k)| *j == 0 || *k == 0) {
            return Err(field("pairs", format!("({j}, {k}): exponents must be positive")));
        }
        if self.trials == 0 {
            return Err(field("trials", "must be positive"));
        }
        if self.grid == Some(0) {
            return Err(field("grid", "must be positive"));
        }
        if self.enumeration_cap == 0 {
            return Err(field("enumeration_cap", "must be positive"));
        }
        if self.memory_cap == 0 {
            return Err(field("memory_cap", "must be positive"));
        }
        if !(self.sigmas > 0.0 && self.sigmas.is_finite()) {
            return Err(field("sigmas", "must be a positive number"));
        }
        if !(self.clt_tolerance > 0.0 && self.clt_tolerance.is_finite()) {
            return Err(field("clt_tolerance", "must be a positive number"));
        }
        if self.q < 3 {
            return Err(field("q", "need at least 3 bands"));
        }
        if self.max_ell == 0 {
            return Err(field("max_ell", "must be positive"));
        }
        Ok(())
    }
}

/// The key whose assignment contains byte offset `pos`, if the line is a
/// plain `key = value`.
fn key_at(text: &str, pos: usize) -> Option<String> {
    let start = text[..pos.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let (key, _) = line.split_once('=')?;
    let key = key.trim();
    (!key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')).then(|| key.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(ExperimentConfig::parse("").unwrap(), c);
    }

    #[test]
    fn full_file() {
        let text = r#"
name = "counts"
seed = 7
kinds = ["steinhaus"]
n = [4, 9]
pairs = [[2, 2], [1, 2]]
system = "square-product"
constrained = false
grid = 1024
format = "csv"
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.kinds, vec![RmfKind::Steinhaus]);
        assert_eq!(c.pairs, vec![(2, 2), (1, 2)]);
        assert_eq!(c.system, SystemKind::SquareProduct);
        assert_eq!(c.grid, Some(1024));
        assert_eq!(c.format, Some(OutputFormat::Csv));
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
    }

    fn bad_field(text: &str) -> String {
        match ExperimentConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        assert_eq!(bad_field("n = [8, 4]"), "n");
        assert_eq!(bad_field("n = []"), "n");
        assert_eq!(bad_field("trials = 0"), "trials");
        assert_eq!(bad_field("q = 2"), "q");
        assert_eq!(bad_field("seed = \"x\""), "seed");
        assert_eq!(bad_field("bogus = 1"), "bogus");
        assert_eq!(bad_field("kinds = [\"gaussian\"]"), "kinds");
        assert_eq!(bad_field("pairs = [[0, 1]]"), "pairs");
    }
}
