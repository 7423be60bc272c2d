use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::formulas::{TrimolRateSummary, EULER_GAMMA, REFLECTIVE_LOG_OFFSET};
use crate::model::DiffusionRates;

/// One observation for a pinned-slope fit of the model
/// `mean = slope * log(L/h) + offset + b * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub log_ratio: f64,
    pub mean: f64,
    pub slope: f64,
    pub offset: f64,
    pub scale: f64,
}

impl FitPoint {
    /// Two walkers on a square lattice: slope `L^2 / (2 pi (Du + Dv))`,
    /// scale `L^2 / (Du + Dv)`.
    pub fn bimolecular_2d(length: f64, h: f64, du: f64, dv: f64, mean: f64) -> Self {
        let scale = length * length / (du + dv);
        Self {
            log_ratio: (length / h).ln(),
            mean,
            slope: scale / (2.0 * PI),
            offset: 0.0,
            scale,
        }
    }

    /// Three walkers on a reflective chain with every term of the
    /// collision-time formula pinned except the coefficient of `L^2 / (Dv + Dw)`.
    pub fn trimolecular_reflective(length: f64, h: f64, rates: &DiffusionRates, mean: f64) -> Self {
        let s = rates.sorted_desc();
        let summary = TrimolRateSummary::new(&s);
        let l2 = length * length;
        let offset = l2 / (4.0 * PI * summary.hat_d)
            * (2.0 * (EULER_GAMMA + (2.0 / PI).ln())
                - (REFLECTIVE_LOG_OFFSET + summary.eta_prime / 4.0).ln());
        Self {
            log_ratio: (length / h).ln(),
            mean,
            slope: l2 / (2.0 * PI * summary.hat_d),
            offset,
            scale: l2 / (s.dv() + s.dw()),
        }
    }

    /// Two walkers on a chain: `mean = b * L^2 / (Dv + Dw)`.
    pub fn encounter_1d(length: f64, dv: f64, dw: f64, mean: f64) -> Self {
        Self {
            log_ratio: 0.0,
            mean,
            slope: 0.0,
            offset: 0.0,
            scale: length * length / (dv + dw),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Dimensionless coefficient of `log(L/h)` held fixed (per unit `scale`).
    pub fixed_slope: f64,
    pub fitted_intercept_coefficient: f64,
    /// RMS of the fit residuals, in time units.
    pub residual_rms: f64,
    pub n_points: usize,
}

/// Least-squares `b` over points that may come from different parameter sets.
pub fn fit_pooled(points: &[FitPoint]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "fitting needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| {
        ![p.log_ratio, p.mean, p.slope, p.offset, p.scale]
            .iter()
            .all(|x| x.is_finite())
    }) {
        return Err(Error::InvalidArgument("non-finite fit data".into()));
    }
    let sss: f64 = points.iter().map(|p| p.scale * p.scale).sum();
    if sss == 0.0 {
        return Err(Error::InvalidArgument("all scales are zero".into()));
    }
    let residual = |p: &FitPoint| p.mean - p.slope * p.log_ratio - p.offset;
    let b = points.iter().map(|p| p.scale * residual(p)).sum::<f64>() / sss;
    let rms = (points
        .iter()
        .map(|p| (residual(p) - b * p.scale).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    let fixed_slope = points[0].slope / points[0].scale;
    Ok(FitResult {
        fixed_slope,
        fitted_intercept_coefficient: b,
        residual_rms: rms,
        n_points: points.len(),
    })
}

/// Intercept of `mean_j - slope_coefficient * (L^2 / rate_sum) * log(L/h_j)`,
/// reported as `b` with intercept `b * L^2 / rate_sum`.
pub fn fit_intercept(
    data: &[(f64, f64)],
    length: f64,
    slope_coefficient: f64,
    rate_sum: f64,
) -> Result<FitResult> {
    if !(length > 0.0 && rate_sum > 0.0) {
        return Err(Error::InvalidArgument(
            "length and rate sum must be positive".into(),
        ));
    }
    if data.iter().any(|&(h, _)| !(h > 0.0)) {
        return Err(Error::InvalidArgument(
            "compartment widths must be positive".into(),
        ));
    }
    if data.len() >= 2 && data.iter().all(|&(h, _)| h == data[0].0) {
        return Err(Error::InvalidArgument(
            "degenerate design: all compartment widths are equal".into(),
        ));
    }
    let scale = length * length / rate_sum;
    let points: Vec<FitPoint> = data
        .iter()
        .map(|&(h, mean)| FitPoint {
            log_ratio: (length / h).ln(),
            mean,
            slope: slope_coefficient * scale,
            offset: 0.0,
            scale,
        })
        .collect();
    fit_pooled(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::{bimol_1d_limit, bimol_collision_2d, trimol_collision};
    use crate::model::Boundary;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_reflective_constant() {
        let data: Vec<(f64, f64)> = [0.1, 0.05, 0.02, 0.01]
            .iter()
            .map(|&h| {
                (
                    h,
                    bimol_collision_2d(1.0, h, 1.0, 1.0, Boundary::Reflective).unwrap(),
                )
            })
            .collect();
        let fit = fit_intercept(&data, 1.0, 1.0 / (2.0 * PI), 2.0).unwrap();
        assert_relative_eq!(
            fit.fitted_intercept_coefficient,
            1.4053,
            max_relative = 1e-12
        );
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.n_points, 4);
    }

    #[test]
    fn recovers_periodic_constant() {
        let data: Vec<(f64, f64)> = [0.1, 0.05, 0.02]
            .iter()
            .map(|&h| {
                (
                    h,
                    bimol_collision_2d(2.0, h, 2.0, 1.0, Boundary::Periodic).unwrap(),
                )
            })
            .collect();
        let fit = fit_intercept(&data, 2.0, 1.0 / (2.0 * PI), 3.0).unwrap();
        assert_relative_eq!(
            fit.fitted_intercept_coefficient,
            4.878e-2,
            max_relative = 1e-10
        );
    }

    #[test]
    fn pooled_sets_recover_shared_constant() {
        let mut points = Vec::new();
        for (du, dv) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)] {
            for k in [16.0, 32.0, 64.0] {
                let h = 1.0 / k;
                let mean = bimol_collision_2d(1.0, h, du, dv, Boundary::Reflective).unwrap();
                points.push(FitPoint::bimolecular_2d(1.0, h, du, dv, mean));
            }
        }
        let fit = fit_pooled(&points).unwrap();
        assert_relative_eq!(
            fit.fitted_intercept_coefficient,
            1.4053,
            max_relative = 1e-12
        );
        assert_relative_eq!(fit.fixed_slope, 1.0 / (2.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn trimolecular_offset_variant() {
        let d = DiffusionRates::new(0.1, 0.5, 0.2).unwrap();
        let points: Vec<FitPoint> = [10.0, 20.0, 40.0]
            .iter()
            .map(|k| {
                let mean = trimol_collision(1.0, 1.0 / k, &d, Boundary::Reflective).unwrap();
                FitPoint::trimolecular_reflective(1.0, 1.0 / k, &d, mean)
            })
            .collect();
        let fit = fit_pooled(&points).unwrap();
        assert_relative_eq!(
            fit.fitted_intercept_coefficient,
            0.140,
            max_relative = 1e-12
        );
    }

    #[test]
    fn encounter_slope() {
        let points: Vec<FitPoint> = [0.1, 0.5, 1.0, 2.0]
            .iter()
            .map(|&d| {
                FitPoint::encounter_1d(
                    0.1,
                    d,
                    d,
                    bimol_1d_limit(0.1, d, d, Boundary::Reflective).unwrap(),
                )
            })
            .collect();
        let fit = fit_pooled(&points).unwrap();
        assert_relative_eq!(
            fit.fitted_intercept_coefficient,
            0.140,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_bad_designs() {
        assert!(fit_intercept(&[(0.1, 1.0), (0.1, 1.1), (0.1, 1.2)], 1.0, 0.1, 1.0).is_err());
        assert!(fit_intercept(&[(0.1, 1.0), (0.05, 1.1)], 1.0, 0.1, 1.0).is_err());
        assert!(
            fit_intercept(&[(0.1, 1.0), (0.05, 1.1), (0.02, f64::NAN)], 1.0, 0.1, 1.0).is_err()
        );
    }
}
