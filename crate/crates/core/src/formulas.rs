//! Closed-form estimates of first-collision and reaction times.
//!
//! Every function validates its inputs and returns a time in the units
//! implied by `L` and the diffusion constants. Functions taking three
//! diffusion constants sort them internally so that `D_u >= D_v >= D_w`;
//! the results are therefore invariant under relabelling the species.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{Boundary, DiffusionRates, RateScaling, ReactionScheme};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Constant term coefficient of the mean site count visited before first
/// hitting a fixed point on a periodic square lattice.
pub const LATTICE_HITTING_CONSTANT: f64 = 0.1951;

/// Constant term of the periodic 2D bimolecular collision time, in units of `L^2 / (D_u + D_v)`.
pub const PERIODIC_2D_COLLISION_CONSTANT: f64 = 4.878e-2;

/// Fitted constant term of the reflective 2D bimolecular collision time, in units of `L^2 / (D_u + D_v)`.
pub const REFLECTIVE_2D_COLLISION_CONSTANT: f64 = 1.4053;

/// Fitted constant of the reflective 1D collision time, in units of `L^2 / (D_v + D_w)`.
/// Also the large-`D_u` limit of the reflective trimolecular collision time.
pub const REFLECTIVE_1D_COLLISION_CONSTANT: f64 = 0.140;

/// Offset inside the anisotropy logarithm of the reflective trimolecular formula.
pub const REFLECTIVE_LOG_OFFSET: f64 = 0.125;

/// Hard cap on the odd wavenumber used by the exit-time series.
pub const SERIES_MAX_WAVENUMBER: usize = 10_001;

/// `2 (gamma + ln(2 / pi))`, the shared constant of the lattice estimates.
fn lattice_log_constant() -> f64 {
    2.0 * (EULER_GAMMA + (2.0 / PI).ln())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be finite and positive, got {x}"
        )))
    }
}

fn check_geometry(length: f64, h: f64) -> Result<()> {
    check_positive("L", length)?;
    check_positive("h", h)?;
    if h > length {
        return Err(Error::InvalidArgument(format!(
            "compartment width h = {h} exceeds L = {length}"
        )));
    }
    Ok(())
}

/// Mean number of steps for a simple walk started uniformly on a periodic
/// lattice of `n` sites to reach a fixed site: `n ln(n) / pi + 0.1951 n`.
pub fn nsteps_2d(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "site count must be at least 2, got {n}"
        )));
    }
    let n = n as f64;
    Ok(n * n.ln() / PI + LATTICE_HITTING_CONSTANT * n)
}

/// Mean number of steps to reach a fixed site when starting next to it: `n - 1`.
pub fn nsteps_one_apart(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "site count must be at least 2, got {n}"
        )));
    }
    Ok(n as f64 - 1.0)
}

/// Mean first collision time of two molecules on an `L x L` square lattice.
pub fn bimol_collision_2d(
    length: f64,
    h: f64,
    du: f64,
    dv: f64,
    boundary: Boundary,
) -> Result<f64> {
    check_geometry(length, h)?;
    let sum = du + dv;
    if !(du >= 0.0 && dv >= 0.0 && sum.is_finite() && sum > 0.0) {
        return Err(Error::InvalidRates(format!(
            "need Du, Dv >= 0 with Du + Dv > 0, got ({du}, {dv})"
        )));
    }
    let l2 = length * length;
    let constant = match boundary {
        Boundary::Periodic => PERIODIC_2D_COLLISION_CONSTANT,
        Boundary::Reflective => REFLECTIVE_2D_COLLISION_CONSTANT,
    };
    Ok(l2 * (length / h).ln() / (2.0 * PI * sum) + constant * l2 / sum)
}

/// Mean time until two molecules react on an `L x L` square lattice, given
/// a bimolecular rate constant `k_b` (m^2/s): `L^2 / k_b + tau_coll`.
pub fn bimol_reaction_2d(
    length: f64,
    h: f64,
    du: f64,
    dv: f64,
    k_b: f64,
    boundary: Boundary,
) -> Result<f64> {
    if k_b.is_nan() || k_b <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "reaction rate must be positive, got {k_b}"
        )));
    }
    Ok(length * length / k_b + bimol_collision_2d(length, h, du, dv, boundary)?)
}

/// Mean time for a walker hopping with `D_u` along one axis and `D_v` along
/// the other of a periodic `K x K` lattice to hit a fixed site.
pub fn anisotropic_collision_2d(length: f64, h: f64, du: f64, dv: f64) -> Result<f64> {
    check_geometry(length, h)?;
    let (fast, slow) = if du >= dv { (du, dv) } else { (dv, du) };
    if !(slow.is_finite() && fast.is_finite() && slow > 0.0) {
        return Err(Error::InvalidRates(format!(
            "both axis rates must be positive, got ({du}, {dv})"
        )));
    }
    let l2 = length * length;
    let root = (fast * slow).sqrt();
    Ok(l2 / (2.0 * PI * root) * (length / h).ln()
        + l2 / (12.0 * slow)
        + l2 / (4.0 * PI * root) * (lattice_log_constant() - (1.0 + fast / slow).ln()))
}

/// Derived rate quantities shared by the trimolecular formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimolRateSummary {
    /// `sqrt(D_u D_v + D_u D_w + D_v D_w)`.
    pub hat_d: f64,
    /// `D_u^2 / hat_d^2` with `D_u` the largest constant.
    pub eta_prime: f64,
}

impl TrimolRateSummary {
    pub fn new(rates: &DiffusionRates) -> Self {
        let s = rates.sorted_desc();
        let hat_d = (s.du() * s.dv() + s.du() * s.dw() + s.dv() * s.dw()).sqrt();
        Self {
            hat_d,
            eta_prime: s.du() * s.du() / (hat_d * hat_d),
        }
    }
}

fn sorted_trimol_rates(rates: &DiffusionRates) -> Result<DiffusionRates> {
    let s = rates.sorted_desc();
    if !(s.dv() + s.dw() > 0.0) {
        return Err(Error::InvalidRates(
            "at least two diffusion rates must be positive".into(),
        ));
    }
    Ok(s)
}

/// Mean first collision time of three molecules diffusing on `[0, L]`.
pub fn trimol_collision(
    length: f64,
    h: f64,
    rates: &DiffusionRates,
    boundary: Boundary,
) -> Result<f64> {
    check_geometry(length, h)?;
    let s = sorted_trimol_rates(rates)?;
    let TrimolRateSummary { hat_d, eta_prime } = TrimolRateSummary::new(&s);
    let l2 = length * length;
    let slow_sum = s.dv() + s.dw();
    let log_term = l2 / (2.0 * PI * hat_d) * (length / h).ln();
    let tail = match boundary {
        Boundary::Periodic => {
            l2 / (12.0 * slow_sum)
                + l2 / (4.0 * PI * hat_d) * (lattice_log_constant() - (1.0 + eta_prime).ln())
        }
        Boundary::Reflective => {
            REFLECTIVE_1D_COLLISION_CONSTANT * l2 / slow_sum
                + l2 / (4.0 * PI * hat_d)
                    * (lattice_log_constant() - (REFLECTIVE_LOG_OFFSET + eta_prime / 4.0).ln())
        }
    };
    Ok(log_term + tail)
}

/// Mean time until the trimolecular reaction fires, starting from uniformly
/// placed molecules: the reaction-limited term plus [`trimol_collision`].
pub fn trimol_reaction(
    length: f64,
    h: f64,
    rates: &DiffusionRates,
    scheme: &ReactionScheme,
    boundary: Boundary,
) -> Result<f64> {
    if !(scheme.rate() > 0.0) {
        return Err(Error::InvalidScheme(format!(
            "reaction rate must be positive, got {}",
            scheme.rate()
        )));
    }
    let collision = trimol_collision(length, h, rates, boundary)?;
    let l2 = length * length;
    let limited = match scheme.scaling() {
        RateScaling::OneD => l2 / scheme.rate(),
        RateScaling::Macro3D => l2 * h.powi(4) / scheme.rate(),
    };
    Ok(limited + collision)
}

/// Mean collision time of two molecules on `[0, L]` (the `D_u -> inf` limit
/// of the trimolecular formulas). Independent of `h`.
pub fn bimol_1d_limit(length: f64, dv: f64, dw: f64, boundary: Boundary) -> Result<f64> {
    check_positive("L", length)?;
    let sum = dv + dw;
    if !(dv >= 0.0 && dw >= 0.0 && sum.is_finite() && sum > 0.0) {
        return Err(Error::InvalidRates(format!(
            "need Dv, Dw >= 0 with Dv + Dw > 0, got ({dv}, {dw})"
        )));
    }
    let l2 = length * length;
    Ok(match boundary {
        Boundary::Periodic => l2 / (12.0 * sum),
        Boundary::Reflective => REFLECTIVE_1D_COLLISION_CONSTANT * l2 / sum,
    })
}

/// Generating-function expansion of the mean hitting steps for a walker
/// with axis and diagonal steps on a periodic square lattice.
///
/// With `sigma_i^2 = D_i / (D_u + D_v + D_w)` (sorted descending), the mean
/// number of steps to reach the origin from a uniform start on `N` sites is
/// `c1 N ln N + c2 N + c3 + O(1/N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MontrollCoefficients {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma3_sq: f64,
    pub eta: f64,
    pub r: f64,
    pub hat_sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl MontrollCoefficients {
    pub fn from_rates(rates: &DiffusionRates) -> Result<Self> {
        let s = rates.sorted_desc();
        if s.positive_count() < 2 {
            return Err(Error::InvalidRates(
                "at least two diffusion rates must be positive".into(),
            ));
        }
        let total = s.sum();
        let (s1, s2, s3) = (s.du() / total, s.dv() / total, s.dw() / total);
        let cross = s1 * s2 + s1 * s3 + s2 * s3;
        let hat_sigma = cross.sqrt();
        let eta = s1 * s1 / cross;
        let c1 = 1.0 / (2.0 * PI * hat_sigma);
        let c2 = 1.0 / (6.0 * (1.0 - s1)) + c1 * (lattice_log_constant() - (1.0 + eta).ln());
        let c3 = PI / (24.0 * hat_sigma) * (eta - 1.0 / 3.0);
        Ok(Self {
            sigma1_sq: s1,
            sigma2_sq: s2,
            sigma3_sq: s3,
            eta,
            r: hat_sigma / (1.0 - s1),
            hat_sigma,
            c1,
            c2,
            c3,
        })
    }

    /// The same expansion with the constant term `c3` dropped, which is the
    /// truncation the collision-time formulas are built from.
    pub fn leading_order(&self) -> Self {
        Self { c3: 0.0, ..*self }
    }
}

/// `c1 N ln N + c2 N + c3`.
pub fn mean_steps_to_origin(sites: f64, coeffs: &MontrollCoefficients) -> Result<f64> {
    if !(sites >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "site count must be at least 2, got {sites}"
        )));
    }
    Ok(coeffs.c1 * sites * sites.ln() + coeffs.c2 * sites + coeffs.c3)
}

/// Converts a step count of the pseudo-walker into time. Each step takes on
/// average `h^2 / (2 * rate_sum)`, where `rate_sum` is the sum of the
/// diffusion constants driving the walk.
pub fn collision_from_steps(steps: f64, h: f64, rate_sum: f64) -> Result<f64> {
    if steps.is_nan() || steps < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step count must be non-negative, got {steps}"
        )));
    }
    check_positive("h", h)?;
    check_positive("rate sum", rate_sum)?;
    Ok(steps * h * h / (2.0 * rate_sum))
}

/// `sinh(a) / sinh(b)` for `0 <= a <= b`, without overflow.
fn sinh_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    (a - b).exp() * (-(-2.0 * a).exp_m1()) / (-(-2.0 * b).exp_m1())
}

/// Mean time for a molecule diffusing with constant `D` from `(x, y)` to
/// leave the absorbing square `(0, L)^2`, by its sine/sinh series. Summation
/// stops once the bound on the next term falls below `tol` relative to the
/// partial sum.
pub fn exit_time_point(x: f64, y: f64, length: f64, diffusion: f64, tol: f64) -> Result<f64> {
    check_positive("L", length)?;
    check_positive("D", diffusion)?;
    check_positive("tol", tol)?;
    if !(0.0..=length).contains(&x) || !(0.0..=length).contains(&y) {
        return Err(Error::InvalidArgument(format!(
            "point ({x}, {y}) outside [0, {length}]^2"
        )));
    }
    if x == 0.0 || y == 0.0 || x == length || y == length {
        return Ok(0.0);
    }
    let (xs, ys) = (x / length, y / length);
    let mut sum = 0.0;
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        let kpi = kf * PI;
        let bound =
            (sinh_ratio(kpi * ys, kpi) + sinh_ratio(kpi * (1.0 - ys), kpi)) / (kf * kf * kf);
        let term = (kpi * xs).sin() * bound;
        sum += term;
        if bound.abs() < tol * sum.abs() {
            break;
        }
        k += 2;
        if k > SERIES_MAX_WAVENUMBER {
            return Err(Error::SeriesCap {
                max_terms: SERIES_MAX_WAVENUMBER.div_ceil(2),
            });
        }
    }
    let l2 = length * length;
    let value = x * (length - x) / (2.0 * diffusion) - 4.0 * l2 / (diffusion * PI.powi(3)) * sum;
    Ok(value.max(0.0))
}

/// Dimensionless mean exit time of the unit square for `D = 1` from a
/// uniform start: `1/12 - 16/pi^5 * sum_{k odd} tanh(k pi / 2) / k^5`.
fn unit_square_mean_exit() -> Result<f64> {
    let tol = 1e-16;
    let mut sum = 0.0;
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        // (cosh(x) - 1) / sinh(x) == tanh(x / 2)
        let term = (kf * PI / 2.0).tanh() / kf.powi(5);
        sum += term;
        if term < tol * sum {
            break;
        }
        k += 2;
        if k > SERIES_MAX_WAVENUMBER {
            return Err(Error::SeriesCap {
                max_terms: SERIES_MAX_WAVENUMBER.div_ceil(2),
            });
        }
    }
    Ok(1.0 / 12.0 - 16.0 / PI.powi(5) * sum)
}

/// Mean exit time of the absorbing square `(0, L)^2` from a uniform start.
pub fn mean_exit_time_square(length: f64, diffusion: f64) -> Result<f64> {
    check_positive("L", length)?;
    check_positive("D", diffusion)?;
    Ok(unit_square_mean_exit()? * length * length / diffusion)
}

/// Mean first encounter time of two molecules with equal diffusion constant
/// `D` on a reflective segment of length `l_theta`, uniformly placed.
///
/// The pair maps onto one walker in a triangle which unfolds into an
/// absorbing square of side `sqrt(2) * l_theta`.
pub fn encounter_time_1d_equal_rates(l_theta: f64, diffusion: f64) -> Result<f64> {
    check_positive("D", diffusion)?;
    if l_theta == 0.0 {
        return Ok(0.0);
    }
    mean_exit_time_square(std::f64::consts::SQRT_2 * l_theta, diffusion)
}
