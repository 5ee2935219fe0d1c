//! Scenario configuration, read from a JSON or TOML file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use formulads_core::scalar::MERSENNE_61;
use formulads_core::EngineKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Maintain,
    Determinant,
    Rank,
    Matching,
    BitsSweep,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Maintain => "maintain",
            Scenario::Determinant => "determinant",
            Scenario::Rank => "rank",
            Scenario::Matching => "matching",
            Scenario::BitsSweep => "bits-sweep",
        })
    }
}

impl FromStr for Scenario {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "maintain" => Ok(Scenario::Maintain),
            "determinant" => Ok(Scenario::Determinant),
            "rank" => Ok(Scenario::Rank),
            "matching" => Ok(Scenario::Matching),
            "bits-sweep" => Ok(Scenario::BitsSweep),
            other => Err(CliError::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Scalar ring for the real-valued scenarios: `rational`, `float64` or
/// `fixed(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RingChoice {
    Rational,
    Float64,
    Fixed(u32),
}

impl fmt::Display for RingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingChoice::Rational => f.write_str("rational"),
            RingChoice::Float64 => f.write_str("float64"),
            RingChoice::Fixed(b) => write!(f, "fixed({b})"),
        }
    }
}

impl FromStr for RingChoice {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("unknown ring {s:?}"));
        match s.trim() {
            "rational" => Ok(RingChoice::Rational),
            "float64" | "f64" => Ok(RingChoice::Float64),
            t => {
                let bits = t
                    .strip_prefix("fixed(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| t.strip_prefix("fixed:"))
                    .ok_or_else(bad)?;
                let b: u32 = bits.trim().parse().map_err(|_| bad())?;
                if b == 0 {
                    return Err(CliError::Config(
                        "fixed-point needs at least one fractional bit".into(),
                    ));
                }
                Ok(RingChoice::Fixed(b))
            }
        }
    }
}

impl TryFrom<String> for RingChoice {
    type Error = CliError;
    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<RingChoice> for String {
    fn from(r: RingChoice) -> String {
        r.to_string()
    }
}

fn default_s_max() -> usize {
    6
}
fn default_dim_max() -> usize {
    4
}
fn default_eps() -> f64 {
    1e-6
}
fn default_p() -> u64 {
    MERSENNE_61
}
fn default_ring() -> RingChoice {
    RingChoice::Float64
}
fn default_engine() -> EngineKind {
    EngineKind::TwoLevel
}
fn default_bound() -> i64 {
    3
}
fn default_bits() -> Vec<u32> {
    vec![16, 24, 32, 48, 64]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// May be omitted when the scenario is given on the command line.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Formula text such as `"A:4x4; inv(A)"`. When absent, `n` selects a
    /// default formula and otherwise one is generated from `s_max`/`dim_max`.
    #[serde(default)]
    pub formula: Option<String>,
    #[serde(default = "default_s_max")]
    pub s_max: usize,
    #[serde(default = "default_dim_max")]
    pub dim_max: usize,
    /// Matrix side, or vertex count for `matching`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Number of updates.
    #[serde(default)]
    pub t: usize,
    #[serde(default = "default_ring")]
    pub ring: RingChoice,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_p")]
    pub p: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_engine")]
    pub engine: EngineKind,
    /// Input entries and update deltas are drawn from `[-bound, bound]`.
    #[serde(default = "default_bound")]
    pub bound: i64,
    /// Adds `bound·side + 1` to the diagonal of every square input.
    #[serde(default)]
    pub dominant: bool,
    /// Fractional bit counts for `bits-sweep`, ascending.
    #[serde(default = "default_bits")]
    pub bits: Vec<u32>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Defaults for every field except the scenario and seed.
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        ScenarioConfig {
            scenario: Some(scenario),
            formula: None,
            s_max: default_s_max(),
            dim_max: default_dim_max(),
            n: None,
            t: 0,
            ring: default_ring(),
            eps: default_eps(),
            p: default_p(),
            seed: Some(seed),
            engine: default_engine(),
            bound: default_bound(),
            dominant: false,
            bits: default_bits(),
            out: None,
        }
    }

    /// JSON when the text starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        self.scenario
            .ok_or_else(|| CliError::Config("no scenario given".into()))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("seed is mandatory".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let scenario = self.scenario()?;
        self.seed()?;
        if self.s_max == 0 || self.dim_max == 0 {
            return bad("s_max and dim_max must be positive");
        }
        if self.n == Some(0) {
            return bad("n must be positive");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if self.bound <= 0 {
            return bad("bound must be positive");
        }
        if self.p < 2 {
            return bad("p must be a prime");
        }
        if scenario == Scenario::Matching && self.n.is_none() {
            return bad("matching needs n");
        }
        if scenario == Scenario::BitsSweep {
            if self.bits.is_empty() || self.bits.contains(&0) {
                return bad("bits must be a non-empty list of positive counts");
            }
            if self.bits.windows(2).any(|w| w[0] >= w[1]) {
                return bad("bits must be strictly ascending");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_names() {
        assert_eq!(
            "fixed(96)".parse::<RingChoice>().unwrap(),
            RingChoice::Fixed(96)
        );
        assert_eq!(
            "fixed:32".parse::<RingChoice>().unwrap(),
            RingChoice::Fixed(32)
        );
        assert_eq!(
            "float64".parse::<RingChoice>().unwrap(),
            RingChoice::Float64
        );
        assert!("fixed(0)".parse::<RingChoice>().is_err());
        assert!("complex".parse::<RingChoice>().is_err());
    }

    #[test]
    fn toml_and_json_agree() {
        let t = ScenarioConfig::parse(
            "scenario = \"bits-sweep\"\nformula = \"A:2x2; inv(A)\"\nt = 3\nring = \"fixed(40)\"\nseed = 5\nengine = \"lazy\"\n",
        )
        .unwrap();
        let j = ScenarioConfig::parse(
            r#"{"scenario": "bits-sweep", "formula": "A:2x2; inv(A)", "t": 3, "ring": "fixed(40)", "seed": 5, "engine": "lazy"}"#,
        )
        .unwrap();
        assert_eq!(t, j);
        assert_eq!(t.ring, RingChoice::Fixed(40));
        assert_eq!(t.engine, EngineKind::Lazy);
        assert_eq!(t.p, MERSENNE_61);
    }

    #[test]
    fn validation() {
        let mut c = ScenarioConfig::new(Scenario::Maintain, 1);
        assert!(c.validate().is_ok());
        c.eps = 0.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::new(Scenario::BitsSweep, 1);
        c.bits = vec![32, 16];
        assert!(c.validate().is_err());
        c.seed = None;
        c.bits = vec![16];
        assert!(matches!(c.validate(), Err(CliError::Config(m)) if m.contains("seed")));
        assert!(ScenarioConfig::parse("seed = 1\nbogus = 2\n").is_err());
        assert!(ScenarioConfig::new(Scenario::Matching, 1)
            .validate()
            .is_err());
    }
}
