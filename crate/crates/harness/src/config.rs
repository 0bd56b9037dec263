//! Experiment descriptions and their INI-style config files.
//!
//! ```text
//! [experiment]
//! name = thm11
//! operator = c2
//! resolutions = 8, 9, 10
//! seed = 7
//! cases = 6
//! nseq = 2
//!
//! [weights]
//! recipe = power
//! exponents = 0, 0.3, 0.5, 0.7, 0.8
//!
//! [exponents]
//! p = 2, 2
//! q = 2, 2
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Syntax(#[from] ini::ParseError),
    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("bad value for `{key}`: {value}")]
    Value { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// The experiments behind the CLI subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Constants,
    Dominate,
    Thm11,
    Thm12,
    Thm13,
    Buckley,
    Lemma32,
    Lemma44,
    Endpoint,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::Constants,
        Self::Dominate,
        Self::Thm11,
        Self::Thm12,
        Self::Thm13,
        Self::Buckley,
        Self::Lemma32,
        Self::Lemma44,
        Self::Endpoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Constants => "constants",
            Self::Dominate => "dominate",
            Self::Thm11 => "thm11",
            Self::Thm12 => "thm12",
            Self::Thm13 => "thm13",
            Self::Buckley => "buckley",
            Self::Lemma32 => "lemma32",
            Self::Lemma44 => "lemma44",
            Self::Endpoint => "endpoint",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| bad("name", s))
    }
}

/// Truncated Calderón commutator `C_2` (one slope) or `C_3` (two slopes).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    C2,
    C3,
}

impl OperatorKind {
    /// Number of slopes `m` in `C_{m+1}`.
    pub fn order(self) -> usize {
        match self {
            Self::C2 => 1,
            Self::C3 => 2,
        }
    }

    pub fn arity(self) -> usize {
        self.order() + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRecipe {
    Unit,
    /// `|x|^a` for each listed `a`, the same weight in every slot.
    Power(Vec<f64>),
    /// Two values on `[-1, 0)` and `[0, 1)`.
    TwoCell(f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub operator: OperatorKind,
    pub weights: WeightRecipe,
    /// Lebesgue exponents `p_j`, one per slot.
    pub p: Vec<f64>,
    /// Sequence exponents `q_j`, one per slot.
    pub q: Vec<f64>,
    /// Orlicz exponents `β_j`.
    pub beta: Vec<f64>,
    /// Oscillation exponents `s_j`.
    pub s: Vec<f64>,
    /// Resolution ladder: each `r` means `3·2^r` cells on `[-1, 1)`.
    pub resolutions: Vec<u32>,
    /// Ladder for the fixed smooth inputs of `dominate`.
    pub smooth_resolutions: Vec<u32>,
    pub seed: u64,
    pub cases: usize,
    /// Sequence length `N_seq` of the vector-valued inputs.
    pub n_seq: usize,
    pub lambda_points: usize,
}

impl Experiment {
    /// Defaults used when no config file is given.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            operator: OperatorKind::C2,
            weights: WeightRecipe::Unit,
            p: vec![2.0, 2.0],
            q: vec![2.0, 2.0],
            beta: vec![0.0, 0.0],
            s: vec![1.0, 1.0],
            resolutions: vec![8, 9, 10],
            smooth_resolutions: Vec::new(),
            seed: 20240601,
            cases: 6,
            n_seq: 2,
            lambda_points: 32,
        };
        let sweep = WeightRecipe::Power(vec![0.0, 0.3, 0.5, 0.7, 0.8]);
        match kind {
            ExperimentKind::Constants => Self {
                weights: sweep,
                resolutions: vec![10],
                ..base
            },
            ExperimentKind::Dominate => Self {
                resolutions: vec![10],
                smooth_resolutions: vec![8, 9, 10, 11, 12],
                cases: 20,
                n_seq: 4,
                ..base
            },
            ExperimentKind::Thm11 | ExperimentKind::Thm12 => Self {
                weights: sweep,
                ..base
            },
            ExperimentKind::Thm13 => Self {
                resolutions: vec![10],
                cases: 4,
                ..base
            },
            ExperimentKind::Buckley => Self {
                weights: sweep,
                p: vec![2.0],
                resolutions: vec![12],
                cases: 4,
                ..base
            },
            ExperimentKind::Lemma32 => Self {
                resolutions: vec![8, 9],
                cases: 20,
                n_seq: 1,
                ..base
            },
            ExperimentKind::Lemma44 => Self {
                beta: vec![1.0, 0.5],
                resolutions: vec![8, 9],
                cases: 10,
                ..base
            },
            ExperimentKind::Endpoint => Self {
                resolutions: vec![8, 9],
                cases: 6,
                ..base
            },
        }
    }

    pub fn from_path(path: &Path, kind: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?, kind)
    }

    /// Parses a config; `kind` overrides the `name` key when given.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text)?;
        let named = ini
            .section(Some("experiment"))
            .and_then(|s| s.get("name"))
            .map(str::parse)
            .transpose()?;
        let kind = kind
            .or(named)
            .ok_or_else(|| ConfigError::Invalid("no experiment name given".into()))?;
        let mut e = Self::preset(kind);
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (key, value) in props.iter() {
                e.apply(section, key, value.trim())?;
            }
        }
        e.validate()?;
        Ok(e)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        match (section, key) {
            ("experiment", "name") => {}
            ("experiment", "operator") => {
                self.operator = match value {
                    "c2" => OperatorKind::C2,
                    "c3" => OperatorKind::C3,
                    _ => return Err(bad(key, value)),
                }
            }
            ("experiment", "resolutions") => self.resolutions = list(key, value)?,
            ("experiment", "smooth_resolutions") => self.smooth_resolutions = list(key, value)?,
            ("experiment", "seed") => self.seed = scalar(key, value)?,
            ("experiment", "cases") => self.cases = scalar(key, value)?,
            ("experiment", "nseq") => self.n_seq = scalar(key, value)?,
            ("weights", "recipe") => {
                self.weights = match value {
                    "unit" => WeightRecipe::Unit,
                    "power" => match &self.weights {
                        WeightRecipe::Power(v) => WeightRecipe::Power(v.clone()),
                        _ => WeightRecipe::Power(vec![0.0]),
                    },
                    "two-cell" => WeightRecipe::TwoCell(2.0, 1.0),
                    _ => return Err(bad(key, value)),
                }
            }
            ("weights", "exponents") => self.weights = WeightRecipe::Power(list(key, value)?),
            ("weights", "values") => {
                let v: Vec<f64> = list(key, value)?;
                if v.len() != 2 {
                    return Err(bad(key, value));
                }
                self.weights = WeightRecipe::TwoCell(v[0], v[1]);
            }
            ("exponents", "p") => self.p = list(key, value)?,
            ("exponents", "q") => self.q = list(key, value)?,
            ("exponents", "beta") => self.beta = list(key, value)?,
            ("exponents", "s") => self.s = list(key, value)?,
            ("endpoint", "lambda_points") => self.lambda_points = scalar(key, value)?,
            ("experiment" | "weights" | "exponents" | "endpoint", _) => {
                return Err(ConfigError::UnknownKey {
                    section: section.into(),
                    key: key.into(),
                })
            }
            _ => return Err(ConfigError::UnknownSection(section.into())),
        }
        Ok(())
    }

    /// Checks the exponent identities and the resolution ladder.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let slots = match self.kind {
            ExperimentKind::Buckley => 1,
            _ => self.operator.arity(),
        };
        for (name, v) in [
            ("p", &self.p),
            ("q", &self.q),
            ("beta", &self.beta),
            ("s", &self.s),
        ] {
            if name != "p" && self.kind == ExperimentKind::Buckley {
                continue;
            }
            if v.len() != slots {
                return Err(ConfigError::Invalid(format!(
                    "`{name}` needs {slots} entries"
                )));
            }
        }
        if self.p.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return Err(ConfigError::Invalid(
                "every p_j must be finite and at least 1".into(),
            ));
        }
        if self.q.iter().any(|&q| !(q > 1.0)) && self.kind != ExperimentKind::Buckley {
            return Err(ConfigError::Invalid("every q_j must exceed 1".into()));
        }
        if self.beta.iter().any(|&b| !(b >= 0.0)) || self.s.iter().any(|&s| !(s >= 1.0)) {
            return Err(ConfigError::Invalid("need beta_j >= 0 and s_j >= 1".into()));
        }
        let ladder = self.resolutions.iter().chain(&self.smooth_resolutions);
        if self.resolutions.is_empty() || ladder.clone().any(|&r| !(2..=16).contains(&r)) {
            return Err(ConfigError::Invalid(
                "resolutions must lie in 2..=16".into(),
            ));
        }
        if self.cases == 0 || self.n_seq == 0 || self.lambda_points < 2 {
            return Err(ConfigError::Invalid(
                "cases, nseq and lambda_points must be positive".into(),
            ));
        }
        if let WeightRecipe::Power(a) = &self.weights {
            if a.is_empty() || a.iter().any(|&a| !(a > -1.0 && a < 1.0)) {
                return Err(ConfigError::Invalid(
                    "power exponents must lie in (-1, 1)".into(),
                ));
            }
        }
        if let WeightRecipe::TwoCell(l, r) = self.weights {
            if !(l > 0.0 && r > 0.0) {
                return Err(ConfigError::Invalid(
                    "two-cell values must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Replaces every resolution ladder by the single value `r`.
    pub fn at_resolution(mut self, r: u32) -> Result<Self, ConfigError> {
        self.resolutions = vec![r];
        if !self.smooth_resolutions.is_empty() {
            self.smooth_resolutions = vec![r];
        }
        self.validate()?;
        Ok(self)
    }

    /// Power exponents of the sweep; a unit or two-cell recipe yields one point.
    pub fn sweep(&self) -> Vec<f64> {
        match &self.weights {
            WeightRecipe::Power(a) => a.clone(),
            _ => vec![0.0],
        }
    }
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        value: value.into(),
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| bad(key, value))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| bad(key, value)))
        .collect()
}
