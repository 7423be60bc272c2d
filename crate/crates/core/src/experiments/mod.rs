//! Experiment harness: parameter points evaluated by formula, Monte Carlo
//! and exact oracle, written as CSV records.

mod compare;
mod estimate;
mod figures;
mod fit;
mod record;

pub use compare::{compare, CompareSettings, PointComparison};
pub use estimate::{estimate, estimate_with, EstimateOptions, EstimatorSummary};
pub use figures::{figure_points, figure_records, reproduce_figure, FigureOptions, FIGURE_TAGS};
pub use fit::{fit_intercept, fit_pooled, FitPoint, FitResult};
pub use record::{
    format_real, read_records, read_records_from, write_records, write_records_to, Estimator,
    ExperimentRecord, CSV_HEADER,
};

use crate::error::{Error, Result};
use crate::formulas;
use crate::model::{Boundary, DiffusionRates, Dimension, DomainSpec, ReactionScheme};
use crate::oracle::{InitialDistribution, Oracle};
use crate::ssa::SamplerSpec;

pub const DEFAULT_SEED: u64 = 20240601;
pub const DEFAULT_FIGURE_TRIALS: u64 = 10_000;
pub const DEFAULT_ACCEPTANCE_TRIALS: u64 = 100_000;

/// One parameter point of a first-passage experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    /// Collision of `U` and `V` on a square lattice.
    Bimol2D {
        domain: DomainSpec,
        du: f64,
        dv: f64,
    },
    /// Collision of `V` and `W` on a chain.
    Bimol1D {
        domain: DomainSpec,
        dv: f64,
        dw: f64,
    },
    /// Collision of `U`, `V` and `W` on a chain.
    Trimol {
        domain: DomainSpec,
        rates: DiffusionRates,
    },
    /// Reaction of one `U + V + W` triplet on a chain.
    Reaction {
        domain: DomainSpec,
        rates: DiffusionRates,
        scheme: ReactionScheme,
    },
}

impl Experiment {
    pub fn bimol_2d(length: f64, k: usize, boundary: Boundary, du: f64, dv: f64) -> Result<Self> {
        Ok(Experiment::Bimol2D {
            domain: DomainSpec::square(length, k, boundary)?,
            du,
            dv,
        })
    }

    pub fn bimol_1d(length: f64, k: usize, boundary: Boundary, dv: f64, dw: f64) -> Result<Self> {
        Ok(Experiment::Bimol1D {
            domain: DomainSpec::chain(length, k, boundary)?,
            dv,
            dw,
        })
    }

    pub fn trimol(
        length: f64,
        k: usize,
        boundary: Boundary,
        rates: DiffusionRates,
    ) -> Result<Self> {
        Ok(Experiment::Trimol {
            domain: DomainSpec::chain(length, k, boundary)?,
            rates,
        })
    }

    pub fn reaction(
        length: f64,
        k: usize,
        boundary: Boundary,
        rates: DiffusionRates,
        scheme: ReactionScheme,
    ) -> Result<Self> {
        Ok(Experiment::Reaction {
            domain: DomainSpec::chain(length, k, boundary)?,
            rates,
            scheme,
        })
    }

    pub fn domain(&self) -> &DomainSpec {
        match self {
            Experiment::Bimol2D { domain, .. }
            | Experiment::Bimol1D { domain, .. }
            | Experiment::Trimol { domain, .. }
            | Experiment::Reaction { domain, .. } => domain,
        }
    }

    /// Closed-form estimate of the mean time.
    pub fn formula(&self) -> Result<f64> {
        let d = self.domain();
        let (l, h, bc) = (d.length(), d.h(), d.boundary());
        match self {
            Experiment::Bimol2D { du, dv, .. } => formulas::bimol_collision_2d(l, h, *du, *dv, bc),
            Experiment::Bimol1D { dv, dw, .. } => formulas::bimol_1d_limit(l, *dv, *dw, bc),
            Experiment::Trimol { rates, .. } => formulas::trimol_collision(l, h, rates, bc),
            Experiment::Reaction { rates, scheme, .. } => {
                formulas::trimol_reaction(l, h, rates, scheme, bc)
            }
        }
    }

    pub fn sampler(&self) -> SamplerSpec {
        match self {
            Experiment::Bimol2D { domain, du, dv } => SamplerSpec::Collision2Walkers {
                domain: *domain,
                d_first: *du,
                d_second: *dv,
            },
            Experiment::Bimol1D { domain, dv, dw } => SamplerSpec::Collision2Walkers {
                domain: *domain,
                d_first: *dv,
                d_second: *dw,
            },
            Experiment::Trimol { domain, rates } => SamplerSpec::Collision3Walkers {
                domain: *domain,
                rates: *rates,
            },
            Experiment::Reaction {
                domain,
                rates,
                scheme,
            } => SamplerSpec::Reaction3Walkers {
                domain: *domain,
                rates: *rates,
                scheme: *scheme,
            },
        }
    }

    /// Exact mean time with every walker placed uniformly. Errors with
    /// [`Error::StateSpaceCap`] when the point is too large to solve.
    pub fn oracle(&self, oracle: &Oracle) -> Result<f64> {
        let init = InitialDistribution::UniformAll;
        let r = match self {
            Experiment::Bimol2D { domain, du, dv } => {
                oracle.mfpt_collision_2walkers(domain, *du, *dv, init)?
            }
            Experiment::Bimol1D { domain, dv, dw } => {
                oracle.mfpt_collision_2walkers(domain, *dv, *dw, init)?
            }
            Experiment::Trimol { domain, rates } => match domain.boundary() {
                // The relative-coordinate walker is exact here and much smaller.
                Boundary::Periodic => oracle.mfpt_pseudo_walker_trimol(domain, rates, init)?,
                Boundary::Reflective => oracle.mfpt_collision_3walkers_1d(domain, rates, init)?,
            },
            Experiment::Reaction {
                domain,
                rates,
                scheme,
            } => oracle.mean_reaction_time_3walkers_1d(domain, rates, scheme)?,
        };
        Ok(r.expected_time)
    }

    /// As [`Experiment::oracle`], with a cap overflow mapped to `None`.
    pub fn oracle_if_feasible(&self, oracle: &Oracle) -> Result<Option<f64>> {
        match self.oracle(oracle) {
            Ok(t) => Ok(Some(t)),
            Err(Error::StateSpaceCap { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// A record for this point with the estimate fields left empty.
    pub fn record(
        &self,
        experiment_id: &str,
        figure_tag: &str,
        estimator: Estimator,
    ) -> ExperimentRecord {
        let domain = self.domain();
        let (du, dv, dw) = match self {
            Experiment::Bimol2D { du, dv, .. } => (Some(*du), Some(*dv), None),
            Experiment::Bimol1D { dv, dw, .. } => (None, Some(*dv), Some(*dw)),
            Experiment::Trimol { rates, .. } | Experiment::Reaction { rates, .. } => {
                (Some(rates.du()), Some(rates.dv()), Some(rates.dw()))
            }
        };
        let (k_value, scaling) = match self {
            Experiment::Reaction { scheme, .. } => (Some(scheme.rate()), Some(scheme.scaling())),
            _ => (None, None),
        };
        ExperimentRecord {
            experiment_id: experiment_id.to_string(),
            figure_tag: figure_tag.to_string(),
            boundary: domain.boundary(),
            length: domain.length(),
            compartments: domain.compartments(),
            du,
            dv,
            dw,
            k_value,
            scaling,
            estimator,
            mean: None,
            std_error: None,
            n_trials: None,
            seed: None,
        }
    }

    /// Rebuilds a point from a CSV record.
    pub fn from_record(r: &ExperimentRecord) -> Result<Self> {
        let missing = |name: &str| Error::Parse(format!("record {} lacks {name}", r.experiment_id));
        let (l, k, bc) = (r.length, r.compartments, r.boundary);
        match (r.du, r.dv, r.dw, r.k_value) {
            (Some(du), Some(dv), None, None) => Experiment::bimol_2d(l, k, bc, du, dv),
            (None, Some(dv), Some(dw), None) => Experiment::bimol_1d(l, k, bc, dv, dw),
            (Some(du), Some(dv), Some(dw), None) => {
                Experiment::trimol(l, k, bc, DiffusionRates::new(du, dv, dw)?)
            }
            (Some(du), Some(dv), Some(dw), Some(rate)) => {
                let scaling = r.scaling.ok_or_else(|| missing("scaling"))?;
                let scheme =
                    ReactionScheme::new(crate::model::Variant::UPlusVPlusW, rate, scaling)?;
                Experiment::reaction(l, k, bc, DiffusionRates::new(du, dv, dw)?, scheme)
            }
            _ => Err(missing("a consistent set of rates")),
        }
    }

    pub fn dimension(&self) -> Dimension {
        self.domain().dimension()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip() {
        let rates = DiffusionRates::new(0.5, 0.2, 0.1).unwrap();
        let points = [
            Experiment::bimol_2d(1.0, 10, Boundary::Periodic, 1.0, 2.0).unwrap(),
            Experiment::bimol_1d(0.1, 64, Boundary::Reflective, 1.0, 2.0).unwrap(),
            Experiment::trimol(1.0, 20, Boundary::Reflective, rates).unwrap(),
            Experiment::reaction(
                1.0,
                20,
                Boundary::Reflective,
                rates,
                ReactionScheme::one_d(5.0).unwrap(),
            )
            .unwrap(),
        ];
        for p in points {
            let r = p.record("x", "t", Estimator::Formula);
            assert_eq!(Experiment::from_record(&r).unwrap(), p);
        }
    }

    #[test]
    fn oracle_cap_maps_to_none() {
        let p = Experiment::bimol_2d(1.0, 40, Boundary::Reflective, 1.0, 1.0).unwrap();
        assert_eq!(p.oracle_if_feasible(&Oracle::default()).unwrap(), None);
        let p = Experiment::bimol_2d(1.0, 40, Boundary::Periodic, 1.0, 1.0).unwrap();
        assert!(p.oracle_if_feasible(&Oracle::default()).unwrap().is_some());
    }
}
