//! Lattice geometry, diffusion and reaction parameters, and molecule state.
//!
//! The simulated domain `[0, L]` is split into `K` compartments of width
//! `h = L / K`. A molecule of a species with diffusion constant `D` hops to
//! each neighbouring compartment with rate `D / h^2`. Compartment indices are
//! 1-based, `1..=K` along every axis.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    /// `K` compartments in a line.
    Chain1D,
    /// `K x K` square lattice, `N = K^2` sites.
    Square2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    /// Jumps wrap around the ends of the domain.
    Periodic,
    /// Jumps through the domain wall have zero rate.
    Reflective,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Reflective => "reflective",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "reflective" => Ok(Boundary::Reflective),
            other => Err(Error::Parse(format!(
                "unknown boundary condition `{other}`"
            ))),
        }
    }
}

/// Lattice geometry. The compartment width is always derived from `L / K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    length: f64,
    compartments: usize,
    dimension: Dimension,
    boundary: Boundary,
}

impl DomainSpec {
    pub fn new(
        length: f64,
        compartments: usize,
        dimension: Dimension,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "length must be finite and positive, got {length}"
            )));
        }
        if compartments == 0 {
            return Err(Error::InvalidDomain(
                "compartment count must be at least 1".into(),
            ));
        }
        Ok(Self {
            length,
            compartments,
            dimension,
            boundary,
        })
    }

    pub fn chain(length: f64, compartments: usize, boundary: Boundary) -> Result<Self> {
        Self::new(length, compartments, Dimension::Chain1D, boundary)
    }

    pub fn square(length: f64, compartments: usize, boundary: Boundary) -> Result<Self> {
        Self::new(length, compartments, Dimension::Square2D, boundary)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Compartments per axis, `K`.
    pub fn compartments(&self) -> usize {
        self.compartments
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Compartment width `h = L / K`.
    pub fn h(&self) -> f64 {
        self.length / self.compartments as f64
    }

    /// Total number of lattice sites: `K` for a chain, `K^2` for a square.
    pub fn sites(&self) -> usize {
        match self.dimension {
            Dimension::Chain1D => self.compartments,
            Dimension::Square2D => self.compartments * self.compartments,
        }
    }

    pub fn with_boundary(self, boundary: Boundary) -> Self {
        Self { boundary, ..self }
    }

    pub fn with_compartments(self, compartments: usize) -> Result<Self> {
        Self::new(self.length, compartments, self.dimension, self.boundary)
    }
}

/// Diffusion constants `(D_u, D_v, D_w)` in length^2 / time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionRates {
    du: f64,
    dv: f64,
    dw: f64,
}

impl DiffusionRates {
    pub fn new(du: f64, dv: f64, dw: f64) -> Result<Self> {
        for (name, d) in [("Du", du), ("Dv", dv), ("Dw", dw)] {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidRates(format!(
                    "{name} must be finite and non-negative, got {d}"
                )));
            }
        }
        if du == 0.0 && dv == 0.0 && dw == 0.0 {
            return Err(Error::InvalidRates("all diffusion rates are zero".into()));
        }
        Ok(Self { du, dv, dw })
    }

    pub fn du(&self) -> f64 {
        self.du
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn dw(&self) -> f64 {
        self.dw
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.du, self.dv, self.dw]
    }

    pub fn sum(&self) -> f64 {
        self.du + self.dv + self.dw
    }

    /// The same three constants sorted so that `D_u >= D_v >= D_w`.
    pub fn sorted_desc(&self) -> Self {
        let mut d = self.as_array();
        d.sort_by(|a, b| b.total_cmp(a));
        Self {
            du: d[0],
            dv: d[1],
            dw: d[2],
        }
    }

    /// Per-direction hopping rates `D / h^2`.
    pub fn jump_rates(&self, h: f64) -> [f64; 3] {
        let inv = 1.0 / (h * h);
        [self.du * inv, self.dv * inv, self.dw * inv]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.du * factor, self.dv * factor, self.dw * factor)
    }

    /// Number of strictly positive constants.
    pub fn positive_count(&self) -> usize {
        self.as_array().iter().filter(|d| **d > 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `3U -> 0`
    ThreeU,
    /// `2U + V -> 0`
    TwoUPlusV,
    /// `U + V + W -> 0`
    UPlusVPlusW,
}

impl Variant {
    /// Molecules of (U, V, W) consumed by one firing.
    pub fn stoichiometry(self) -> [u64; 3] {
        match self {
            Variant::ThreeU => [3, 0, 0],
            Variant::TwoUPlusV => [2, 1, 0],
            Variant::UPlusVPlusW => [1, 1, 1],
        }
    }
}

/// How the rate constant of the reaction maps to a per-compartment propensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateScaling {
    /// Macroscopic constant `k` in m^6/s; one triplet fires with rate `k / h^6`.
    Macro3D,
    /// One-dimensional constant `k_1D` in m^2/s; one triplet fires with rate `k_1D / h^2`.
    OneD,
}

impl RateScaling {
    pub fn as_str(self) -> &'static str {
        match self {
            RateScaling::Macro3D => "3d",
            RateScaling::OneD => "1d",
        }
    }
}

impl FromStr for RateScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1d" => Ok(RateScaling::OneD),
            "3d" => Ok(RateScaling::Macro3D),
            other => Err(Error::Parse(format!("unknown rate scaling `{other}`"))),
        }
    }
}

/// A trimolecular reaction and its rate constant.
///
/// An infinite rate is accepted and means the reaction fires as soon as a
/// full triplet shares a compartment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionScheme {
    variant: Variant,
    rate: f64,
    scaling: RateScaling,
}

impl ReactionScheme {
    pub fn new(variant: Variant, rate: f64, scaling: RateScaling) -> Result<Self> {
        if rate.is_nan() || rate < 0.0 {
            return Err(Error::InvalidScheme(format!(
                "rate constant must be non-negative, got {rate}"
            )));
        }
        Ok(Self {
            variant,
            rate,
            scaling,
        })
    }

    /// `U + V + W -> 0` with a one-dimensional rate constant `k_1D`.
    pub fn one_d(k_1d: f64) -> Result<Self> {
        Self::new(Variant::UPlusVPlusW, k_1d, RateScaling::OneD)
    }

    /// `U + V + W -> 0` with a macroscopic rate constant `k`.
    pub fn macro_3d(k: f64) -> Result<Self> {
        Self::new(Variant::UPlusVPlusW, k, RateScaling::Macro3D)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn scaling(&self) -> RateScaling {
        self.scaling
    }

    pub fn is_instantaneous(&self) -> bool {
        self.rate.is_infinite()
    }

    /// The equivalent one-dimensional constant `k_1D = k / h^4`.
    pub fn k_1d(&self, h: f64) -> f64 {
        match self.scaling {
            RateScaling::OneD => self.rate,
            RateScaling::Macro3D => self.rate / h.powi(4),
        }
    }
}

/// Firing rate of one triplet of reactants sharing a compartment.
pub fn propensity_single_triplet(scheme: &ReactionScheme, domain: &DomainSpec) -> Result<f64> {
    let h = domain.h();
    if !(h > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "compartment width {h} is not positive"
        )));
    }
    Ok(match scheme.scaling {
        RateScaling::Macro3D => scheme.rate / h.powi(6),
        RateScaling::OneD => scheme.rate / (h * h),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SpeciesCounts {
    pub u: u64,
    pub v: u64,
    pub w: u64,
}

impl SpeciesCounts {
    pub fn new(u: u64, v: u64, w: u64) -> Self {
        Self { u, v, w }
    }

    pub fn as_array(&self) -> [u64; 3] {
        [self.u, self.v, self.w]
    }
}

/// Propensity of the reaction channel in a compartment holding `counts`.
///
/// Counts distinct reactant combinations: `u(u-1)(u-2)/6` for `3U`,
/// `u(u-1)/2 * v` for `2U + V` and `u v w` for `U + V + W`. One triplet
/// gives exactly [`propensity_single_triplet`].
pub fn general_propensity(
    scheme: &ReactionScheme,
    counts: SpeciesCounts,
    domain: &DomainSpec,
) -> Result<f64> {
    let alpha = propensity_single_triplet(scheme, domain)?;
    let combinations = reactant_combinations(scheme.variant, counts);
    if combinations == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha * combinations)
}

pub(crate) fn reactant_combinations(variant: Variant, counts: SpeciesCounts) -> f64 {
    let (u, v, w) = (counts.u as f64, counts.v as f64, counts.w as f64);
    match variant {
        Variant::ThreeU if counts.u >= 3 => u * (u - 1.0) * (u - 2.0) / 6.0,
        Variant::TwoUPlusV if counts.u >= 2 && counts.v >= 1 => u * (u - 1.0) / 2.0 * v,
        Variant::UPlusVPlusW => u * v * w,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    U,
    V,
    W,
}

/// Positions of individually tracked molecules, `AXES` coordinates each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerState<const AXES: usize> {
    positions: Vec<[usize; AXES]>,
    species: Vec<Species>,
}

impl<const AXES: usize> WalkerState<AXES> {
    pub fn new(
        positions: Vec<[usize; AXES]>,
        species: Vec<Species>,
        domain: &DomainSpec,
    ) -> Result<Self> {
        if positions.len() != species.len() {
            return Err(Error::InvalidArgument(format!(
                "{} positions but {} species tags",
                positions.len(),
                species.len()
            )));
        }
        let k = domain.compartments();
        if let Some(p) = positions
            .iter()
            .find(|p| p.iter().any(|&c| c == 0 || c > k))
        {
            return Err(Error::InvalidArgument(format!(
                "position {p:?} outside compartments 1..={k}"
            )));
        }
        Ok(Self { positions, species })
    }

    pub fn positions(&self) -> &[[usize; AXES]] {
        &self.positions
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    /// All tracked molecules share one compartment.
    pub fn collided(&self) -> bool {
        match self.positions.split_first() {
            Some((first, rest)) => rest.iter().all(|p| p == first),
            None => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_triplet_one_d() {
        let scheme = ReactionScheme::one_d(5.0).unwrap();
        let d1 = DomainSpec::chain(1.0, 1, Boundary::Reflective).unwrap();
        assert_eq!(propensity_single_triplet(&scheme, &d1).unwrap(), 5.0);
        let d20 = DomainSpec::chain(1.0, 20, Boundary::Reflective).unwrap();
        let p = propensity_single_triplet(&scheme, &d20).unwrap();
        assert!((p - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn macro_and_one_d_agree() {
        let d = DomainSpec::chain(1.0, 20, Boundary::Periodic).unwrap();
        let h = d.h();
        let macro_3d = ReactionScheme::macro_3d(5.0 * h.powi(4)).unwrap();
        let one_d = ReactionScheme::one_d(5.0).unwrap();
        let a = propensity_single_triplet(&macro_3d, &d).unwrap();
        let b = propensity_single_triplet(&one_d, &d).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn general_propensity_examples() {
        let d = DomainSpec::chain(1.0, 20, Boundary::Periodic).unwrap();
        let one_d = ReactionScheme::one_d(5.0).unwrap();
        let alpha = propensity_single_triplet(&one_d, &d).unwrap();
        let single = general_propensity(&one_d, SpeciesCounts::new(1, 1, 1), &d).unwrap();
        assert_eq!(single, alpha);
        let double_u = general_propensity(&one_d, SpeciesCounts::new(2, 1, 1), &d).unwrap();
        assert!((double_u - 4000.0).abs() < 1e-9);

        let three_u = ReactionScheme::new(Variant::ThreeU, 5.0, RateScaling::OneD).unwrap();
        assert_eq!(
            general_propensity(&three_u, SpeciesCounts::new(2, 0, 0), &d).unwrap(),
            0.0
        );
        assert_eq!(
            general_propensity(&three_u, SpeciesCounts::new(3, 0, 0), &d).unwrap(),
            alpha
        );

        let two_u_v = ReactionScheme::new(Variant::TwoUPlusV, 5.0, RateScaling::OneD).unwrap();
        assert_eq!(
            general_propensity(&two_u_v, SpeciesCounts::new(2, 1, 0), &d).unwrap(),
            alpha
        );
        assert_eq!(
            general_propensity(&two_u_v, SpeciesCounts::new(2, 0, 9), &d).unwrap(),
            0.0
        );
    }

    #[test]
    fn validation() {
        assert!(DomainSpec::chain(0.0, 4, Boundary::Periodic).is_err());
        assert!(DomainSpec::chain(1.0, 0, Boundary::Periodic).is_err());
        assert!(DomainSpec::chain(f64::NAN, 4, Boundary::Periodic).is_err());
        assert!(DiffusionRates::new(0.0, 0.0, 0.0).is_err());
        assert!(DiffusionRates::new(-1.0, 1.0, 0.0).is_err());
        assert!(ReactionScheme::one_d(-1.0).is_err());
        assert!(ReactionScheme::one_d(f64::INFINITY)
            .unwrap()
            .is_instantaneous());
    }

    #[test]
    fn walker_state_bounds_and_collision() {
        let d = DomainSpec::chain(1.0, 5, Boundary::Reflective).unwrap();
        let tags = vec![Species::U, Species::V, Species::W];
        let s = WalkerState::new(vec![[3], [3], [3]], tags.clone(), &d).unwrap();
        assert!(s.collided());
        let s = WalkerState::new(vec![[3], [4], [3]], tags.clone(), &d).unwrap();
        assert!(!s.collided());
        assert!(WalkerState::new(vec![[0], [1], [1]], tags.clone(), &d).is_err());
        assert!(WalkerState::new(vec![[6], [1], [1]], tags, &d).is_err());
    }

    proptest! {
        #[test]
        fn h_times_k_recovers_length(length in 1e-6f64..1e6, k in 1usize..100_000) {
            let d = DomainSpec::chain(length, k, Boundary::Periodic).unwrap();
            let back = d.h() * k as f64;
            prop_assert!((back - length).abs() <= 4.0 * f64::EPSILON * length);
        }

        #[test]
        fn scaling_equivalence(k_1d in 1e-3f64..1e3, k in 1usize..500) {
            let d = DomainSpec::chain(1.0, k, Boundary::Periodic).unwrap();
            let h = d.h();
            let a = propensity_single_triplet(&ReactionScheme::one_d(k_1d).unwrap(), &d).unwrap();
            let b = propensity_single_triplet(
                &ReactionScheme::macro_3d(k_1d * h.powi(4)).unwrap(), &d).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn propensity_monotone_in_counts(u in 0u64..8, v in 0u64..8, w in 0u64..8, which in 0usize..3) {
            let d = DomainSpec::chain(1.0, 10, Boundary::Periodic).unwrap();
            for variant in [Variant::ThreeU, Variant::TwoUPlusV, Variant::UPlusVPlusW] {
                let s = ReactionScheme::new(variant, 2.0, RateScaling::OneD).unwrap();
                let base = SpeciesCounts::new(u, v, w);
                let mut more = base;
                match which { 0 => more.u += 1, 1 => more.v += 1, _ => more.w += 1 }
                let a = general_propensity(&s, base, &d).unwrap();
                let b = general_propensity(&s, more, &d).unwrap();
                prop_assert!(b >= a);
                let need = variant.stoichiometry();
                if base.as_array().iter().zip(need).any(|(c, n)| *c < n) {
                    prop_assert_eq!(a, 0.0);
                }
            }
        }
    }
}
