//! `summary.json`: the machine-readable record of a run.

use std::path::Path;

use obstacle_core::fmt9;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Nine significant digits; `None` for non-finite values.
pub fn num(x: f64) -> Option<f64> {
    x.is_finite().then(|| fmt9(x).parse().expect("formatted float"))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub name: String,
    pub scenario: Option<String>,
    pub resolution: usize,
    pub h: Option<f64>,
    pub status: String,
    pub exit_code: i32,
    pub hypotheses: Option<Hypotheses>,
    pub solver: Option<SolverRecord>,
    pub plan: Vec<String>,
    pub analyses: Vec<AnalysisRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Hypotheses {
    pub lambda: Option<f64>,
    pub c0: Option<f64>,
    pub dini_value: Option<f64>,
    pub double_dini_value: Option<f64>,
    pub log_dini_value: Option<f64>,
    pub a: Option<f64>,
    pub pass_h1: bool,
    pub h1_indicative: bool,
    pub pass_h2: bool,
    pub pass_h3: bool,
    pub pass_h4: bool,
    pub sampling_slack: Option<f64>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolverRecord {
    pub method: String,
    pub iterations: Option<usize>,
    pub complementarity_residual: Option<f64>,
    pub energy: Option<f64>,
    pub active_nodes: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AnalysisRecord {
    pub index: usize,
    pub plan: String,
    /// Set when no point could be selected.
    pub note: Option<String>,
    pub points: Vec<PointRecord>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct PointRecord {
    pub x0: [Option<f64>; 2],
    pub snap_distance: Option<f64>,
    pub radii: usize,
    pub weiss: Option<CurveRecord>,
    pub monneau: Option<CurveRecord>,
    pub classify: Option<ClassRecord>,
    pub growth: Option<GrowthRecord>,
    pub freezing: Option<FreezingRecord>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveRecord {
    pub c_min: Option<f64>,
    pub phi0: Option<f64>,
    pub phi0_uncertainty: Option<f64>,
    pub pass: bool,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ClassRecord {
    pub verdict: String,
    pub phi0: Option<f64>,
    pub uncertainty: Option<f64>,
    pub c_min: Option<f64>,
    pub fit_kind: Option<String>,
    pub fit_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GrowthRecord {
    pub theta_lower: Option<f64>,
    pub c_upper: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FreezingRecord {
    pub pairs: usize,
    pub exceeded: usize,
    /// Largest `lhs / rhs` over the pairs.
    pub max_ratio: Option<f64>,
}

impl Summary {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join("summary.json"), text)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Summary, CliError> {
        let path = dir.join("summary.json");
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_nine_digits() {
        assert_eq!(num(std::f64::consts::PI), Some(3.14159265));
        assert_eq!(num(0.0), Some(0.0));
        assert_eq!(num(f64::INFINITY), None);
        assert_eq!(num(f64::NAN), None);
    }
}
