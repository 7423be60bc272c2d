use std::path::{Path, PathBuf};

use super::{
    estimate_with, write_records_to, EstimateOptions, Estimator, Experiment, ExperimentRecord,
    DEFAULT_FIGURE_TRIALS, DEFAULT_SEED,
};
use crate::error::{Error, Result};
use crate::model::{Boundary, DiffusionRates, ReactionScheme};
use crate::oracle::Oracle;

pub const FIGURE_TAGS: [&str; 8] = [
    "fig1",
    "fig2",
    "fig-tri-sweep-h",
    "fig-tri-sweep-Du",
    "fig-reaction",
    "figB1",
    "figB2",
    "figB3",
];

const BOUNDARIES: [Boundary; 2] = [Boundary::Periodic, Boundary::Reflective];
const TRIMOL_SETS: [[f64; 3]; 3] = [[0.1, 0.1, 0.1], [0.5, 0.2, 0.1], [2.5, 0.5, 0.1]];
const BIMOL_2D_SETS: [[f64; 2]; 3] = [[1.0, 1.0], [2.0, 1.0], [1.0, 3.0]];
const TRIMOL_K: [usize; 8] = [8, 16, 20, 32, 40, 64, 80, 100];
const BIMOL_2D_K: [usize; 6] = [10, 20, 40, 60, 80, 100];
const UNEQUAL_PAIRS: [[f64; 2]; 6] = [
    [1.0, 0.5],
    [2.0, 0.5],
    [1.0, 0.1],
    [3.0, 1.0],
    [5.0, 2.0],
    [0.5, 0.2],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FigureOptions {
    pub trials: u64,
    pub seed: u64,
    pub estimate: EstimateOptions,
    /// Skip the Monte Carlo rows.
    pub skip_mc: bool,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            trials: DEFAULT_FIGURE_TRIALS,
            seed: DEFAULT_SEED,
            estimate: EstimateOptions::default(),
            skip_mc: false,
        }
    }
}

fn rates(r: [f64; 3]) -> DiffusionRates {
    DiffusionRates::new(r[0], r[1], r[2]).expect("valid built-in rates")
}

/// The parameter grid of a figure, in CSV row order.
pub fn figure_points(tag: &str) -> Result<Vec<Experiment>> {
    let mut points = Vec::new();
    match tag {
        "fig1" => {
            for bc in BOUNDARIES {
                for [du, dv] in BIMOL_2D_SETS {
                    for k in BIMOL_2D_K {
                        points.push(Experiment::bimol_2d(1.0, k, bc, du, dv)?);
                    }
                }
            }
        }
        "fig2" => {
            for du in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
                points.push(Experiment::bimol_2d(
                    1.0,
                    100,
                    Boundary::Reflective,
                    du,
                    1.0,
                )?);
            }
        }
        "fig-tri-sweep-h" => {
            for bc in BOUNDARIES {
                for set in TRIMOL_SETS {
                    for k in TRIMOL_K {
                        points.push(Experiment::trimol(1.0, k, bc, rates(set))?);
                    }
                }
            }
        }
        "fig-tri-sweep-Du" => {
            for bc in BOUNDARIES {
                for du in [0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
                    points.push(Experiment::trimol(1.0, 20, bc, rates([du, 0.2, 0.1]))?);
                }
            }
        }
        "fig-reaction" => {
            for k_1d in [1.0, 5.0, 25.0] {
                for k in TRIMOL_K {
                    points.push(Experiment::reaction(
                        1.0,
                        k,
                        Boundary::Reflective,
                        rates(TRIMOL_SETS[1]),
                        ReactionScheme::one_d(k_1d)?,
                    )?);
                }
            }
        }
        "figB1" => {
            for d in [0.1, 0.2, 0.5, 1.0, 2.0, 5.0] {
                points.push(Experiment::bimol_1d(0.1, 64, Boundary::Reflective, d, d)?);
            }
        }
        "figB2" => {
            for [dv, dw] in UNEQUAL_PAIRS {
                points.push(Experiment::bimol_1d(0.1, 64, Boundary::Reflective, dv, dw)?);
            }
        }
        "figB3" => {
            for [dv, dw] in UNEQUAL_PAIRS {
                points.push(Experiment::bimol_1d(0.1, 128, Boundary::Periodic, dv, dw)?);
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown figure tag {other:?}; expected one of {FIGURE_TAGS:?}"
            )))
        }
    }
    Ok(points)
}

/// Formula, Monte Carlo and oracle rows for every point of a figure. Point
/// `i` uses master seed `seed + i`. Oracle rows beyond the solver caps are
/// written with an empty mean.
pub fn figure_records(tag: &str, options: &FigureOptions) -> Result<Vec<ExperimentRecord>> {
    let oracle = Oracle::default();
    let mut out = Vec::new();
    for (i, point) in figure_points(tag)?.iter().enumerate() {
        let id = format!("{tag}-{:03}", i + 1);

        let mut formula = point.record(&id, tag, Estimator::Formula);
        formula.mean = Some(point.formula()?);
        out.push(formula);

        if !options.skip_mc {
            let seed = options.seed.wrapping_add(i as u64);
            let summary = estimate_with(&point.sampler(), options.trials, seed, options.estimate)?;
            let mut mc = point.record(&id, tag, Estimator::Mc);
            mc.mean = Some(summary.mean);
            mc.std_error = Some(summary.std_error);
            mc.n_trials = Some(summary.n_trials);
            mc.seed = Some(seed);
            out.push(mc);
        }

        let mut exact = point.record(&id, tag, Estimator::Oracle);
        exact.mean = point.oracle_if_feasible(&oracle)?;
        out.push(exact);
    }
    Ok(out)
}

/// Writes `<out_dir>/<tag>.csv` and returns its path.
pub fn reproduce_figure(tag: &str, out_dir: &Path, options: &FigureOptions) -> Result<PathBuf> {
    let records = figure_records(tag, options)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(format!("{tag}.csv"));
    write_records_to(&path, &records)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tag_has_points() {
        for tag in FIGURE_TAGS {
            assert!(figure_points(tag).unwrap().len() >= 6, "{tag}");
        }
        assert!(figure_points("fig9").is_err());
    }

    #[test]
    fn formula_and_oracle_rows() {
        let options = FigureOptions {
            skip_mc: true,
            ..Default::default()
        };
        let records = figure_records("figB1", &options).unwrap();
        assert_eq!(records.len(), 12);
        assert!(records.iter().all(|r| r.mean.is_some()));
        let fig1 = figure_points("fig1").unwrap();
        // Reflective square lattices above the cap get an explicit empty oracle row.
        let big = fig1
            .iter()
            .find(|p| {
                p.domain().compartments() == 100 && p.domain().boundary() == Boundary::Reflective
            })
            .unwrap();
        assert_eq!(big.oracle_if_feasible(&Oracle::default()).unwrap(), None);
    }
}
