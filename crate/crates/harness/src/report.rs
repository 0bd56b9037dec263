//! Sweep rows and run reports.

use serde::Serialize;
use sparsedom::{DominationStats, SparseFamily};

use crate::config::{Experiment, ExperimentKind};

/// Version of the CSV column layout.
pub const SCHEMA_VERSION: u32 = 1;

/// One measured inequality. Constants that an experiment does not use are empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub experiment: ExperimentKind,
    pub schema: u32,
    /// `r` in `3·2^r` cells.
    pub resolution: u32,
    pub case: String,
    /// Weight exponent, `λ`, or another sweep parameter.
    pub param: f64,
    pub ap_multi: Option<f64>,
    pub nu_ainfty: Option<f64>,
    /// `[σ_j]_{A_∞}` joined by `;`.
    pub sigma_ainfty: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub flagged: bool,
}

impl SweepRow {
    pub fn new(
        experiment: ExperimentKind,
        resolution: u32,
        case: impl Into<String>,
        param: f64,
        lhs: f64,
        rhs: f64,
    ) -> Self {
        let ratio = ratio(lhs, rhs);
        Self {
            experiment,
            schema: SCHEMA_VERSION,
            resolution,
            case: case.into(),
            param,
            ap_multi: None,
            nu_ainfty: None,
            sigma_ainfty: String::new(),
            lhs,
            rhs,
            ratio,
            flagged: !ratio.is_finite(),
        }
    }

    pub fn with_constants(mut self, c: &Constants) -> Self {
        self.ap_multi = Some(c.ap_multi);
        self.nu_ainfty = c.nu_ainfty;
        self.sigma_ainfty = c
            .sigma_ainfty
            .iter()
            .map(|s| format!("{s:e}"))
            .collect::<Vec<_>>()
            .join(";");
        self.flagged |= c.flagged;
        self
    }
}

/// `lhs / rhs`, with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// Weight constants attached to a row.
#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    pub ap_multi: f64,
    pub nu_ainfty: Option<f64>,
    pub sigma_ainfty: Vec<f64>,
    /// A weight touched the positivity floor or a constant is not finite.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

/// Family produced by a domination run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyRecord {
    pub resolution: u32,
    pub case: String,
    pub c_emp: f64,
    pub sparse: bool,
    pub stats: DominationStats,
    pub family: SparseFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub config: Experiment,
    pub rows: Vec<SweepRow>,
    pub metrics: Vec<Metric>,
    pub families: Vec<FamilyRecord>,
}

impl Report {
    pub fn new(config: &Experiment) -> Self {
        Self {
            experiment: config.kind,
            config: config.clone(),
            rows: Vec::new(),
            metrics: Vec::new(),
            families: Vec::new(),
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
        });
    }

    /// Value of the first metric called `name`.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.value)
    }

    /// Largest ratio among the rows at resolution `r`.
    pub fn max_ratio(&self, r: u32) -> f64 {
        self.rows
            .iter()
            .filter(|row| row.resolution == r)
            .map(|row| row.ratio)
            .fold(0.0, f64::max)
    }

    /// Records `max_ratio[r=…]` per resolution and their spread `stability = max/min`.
    pub fn record_ladder(&mut self, resolutions: &[u32]) {
        let maxima: Vec<f64> = resolutions.iter().map(|&r| self.max_ratio(r)).collect();
        for (&r, &m) in resolutions.iter().zip(&maxima) {
            self.metric(format!("max_ratio[r={r}]"), m);
        }
        self.metric("stability", spread(&maxima));
    }
}

/// `max/min` of positive values; `1` for a single value, `∞` if some value is zero.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() || hi == lo {
        1.0
    } else if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(3.0, 2.0), 1.5);
        let row = SweepRow::new(ExperimentKind::Thm11, 8, "x", 0.0, 1.0, 0.0);
        assert!(row.flagged);
    }

    #[test]
    fn spread_of_ladders() {
        assert_eq!(spread(&[2.0]), 1.0);
        assert_eq!(spread(&[1.0, 3.0, 2.0]), 3.0);
        assert_eq!(spread(&[0.0, 1.0]), f64::INFINITY);
        assert_eq!(spread(&[0.0, 0.0]), 1.0);
    }
}
