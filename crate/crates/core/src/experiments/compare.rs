use std::collections::BTreeMap;

use super::{Estimator, ExperimentRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSettings {
    /// Allowed relative deviation of the formula from the reference.
    pub formula_tolerance: f64,
    /// Standard errors allowed between Monte Carlo and another estimate.
    pub z: f64,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            formula_tolerance: 0.10,
            z: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointComparison {
    pub experiment_id: String,
    pub formula: Option<f64>,
    /// Mean and standard error.
    pub mc: Option<(f64, f64)>,
    pub oracle: Option<f64>,
    /// `(formula - oracle) / oracle`.
    pub formula_vs_oracle: Option<f64>,
    /// `(formula - mc) / mc`.
    pub formula_vs_mc: Option<f64>,
    /// `(mc - oracle) / se`.
    pub mc_vs_oracle_z: Option<f64>,
    pub pass: bool,
}

/// Per-point deviations between the estimators present in `records`.
///
/// A point passes when the formula is within the relative tolerance of the
/// oracle, within the tolerance plus `z` standard errors of the Monte Carlo
/// mean, and the Monte Carlo mean is within `z` standard errors of the oracle.
/// Checks with a missing side are skipped.
pub fn compare(
    records: &[ExperimentRecord],
    settings: &CompareSettings,
) -> Result<Vec<PointComparison>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to compare".into()));
    }
    let mut order = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        let entry = groups.entry(&r.experiment_id).or_default();
        if entry.is_empty() {
            order.push(r.experiment_id.as_str());
        }
        entry.push(r);
    }
    let out = order
        .into_iter()
        .map(|id| {
            let rows = &groups[id];
            let find = |e: Estimator| {
                rows.iter()
                    .find(|r| r.estimator == e)
                    .and_then(|r| Some((r.mean?, r.std_error)))
            };
            let formula = find(Estimator::Formula).map(|(m, _)| m);
            let mc = find(Estimator::Mc).map(|(m, se)| (m, se.unwrap_or(0.0)));
            let oracle = find(Estimator::Oracle).map(|(m, _)| m);
            let rel = |a: f64, b: f64| (a - b) / b;
            let formula_vs_oracle = formula.zip(oracle).map(|(f, o)| rel(f, o));
            let formula_vs_mc = formula.zip(mc).map(|(f, (m, _))| rel(f, m));
            let mc_vs_oracle_z = mc.zip(oracle).map(|((m, se), o)| (m - o) / se);
            let mut pass = true;
            if let Some(d) = formula_vs_oracle {
                pass &= d.abs() <= settings.formula_tolerance;
            }
            if let (Some(f), Some((m, se))) = (formula, mc) {
                pass &= (f - m).abs() <= settings.formula_tolerance * m.abs() + settings.z * se;
            }
            if let Some(((m, se), o)) = mc.zip(oracle) {
                pass &= (m - o).abs() <= settings.z * se;
            }
            PointComparison {
                experiment_id: id.to_string(),
                formula,
                mc,
                oracle,
                formula_vs_oracle,
                formula_vs_mc,
                mc_vs_oracle_z,
                pass,
            }
        })
        .collect();
    Ok(out)
}
