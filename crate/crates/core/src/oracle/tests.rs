use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::model::{DiffusionRates, DomainSpec, ReactionScheme};

fn rates(du: f64, dv: f64, dw: f64) -> DiffusionRates {
    DiffusionRates::new(du, dv, dw).unwrap()
}

#[test]
fn three_walkers_two_compartments() {
    // Hop rate d = D / h^2 = 0.4. From any non-collided state the lone
    // walker leaves at rate d out of a total 3d (reflective) or 2d out of 6d
    // (periodic, two directions reach the same site).
    let domain = DomainSpec::chain(1.0, 2, Boundary::Reflective).unwrap();
    let d = rates(0.1, 0.1, 0.1);
    let r = mfpt_collision_3walkers_1d(&domain, &d, InitialDistribution::UniformNonTarget).unwrap();
    assert_relative_eq!(r.expected_time, 2.5, max_relative = 1e-12);
    let r = mfpt_collision_3walkers_1d(&domain, &d, InitialDistribution::UniformAll).unwrap();
    assert_relative_eq!(r.expected_time, 1.875, max_relative = 1e-12);

    let periodic = domain.with_boundary(Boundary::Periodic);
    let r = mfpt_collision_3walkers_1d(&periodic, &d, InitialDistribution::UniformAll).unwrap();
    assert_relative_eq!(r.expected_time, 0.9375, max_relative = 1e-12);
}

#[test]
fn two_walkers_two_compartments() {
    let h = 0.5;
    let dc = 0.3;
    let chain = DomainSpec::chain(1.0, 2, Boundary::Reflective).unwrap();
    let r = mfpt_collision_2walkers(&chain, dc, dc, InitialDistribution::UniformAll).unwrap();
    assert_relative_eq!(r.expected_time, h * h / (4.0 * dc), max_relative = 1e-12);

    let square = DomainSpec::square(1.0, 2, Boundary::Reflective).unwrap();
    let r = mfpt_collision_2walkers(&square, dc, dc, InitialDistribution::UniformAll).unwrap();
    assert_relative_eq!(
        r.expected_time,
        5.0 * h * h / (8.0 * dc),
        max_relative = 1e-12
    );
}

#[test]
fn periodic_square_reduction_matches_product_space() {
    for k in [2, 3, 5, 8] {
        let domain = DomainSpec::square(1.0, k, Boundary::Periodic).unwrap();
        let reduced =
            mfpt_collision_2walkers(&domain, 1.0, 0.5, InitialDistribution::UniformAll).unwrap();
        let full = Oracle::default()
            .mfpt_collision_2walkers_product(&domain, 1.0, 0.5, InitialDistribution::UniformAll)
            .unwrap();
        assert_relative_eq!(
            reduced.expected_time,
            full.expected_time,
            max_relative = 1e-9
        );
    }
}

#[test]
fn pseudo_walker_matches_three_walkers() {
    let domain = DomainSpec::chain(1.0, 20, Boundary::Periodic).unwrap();
    let d = rates(1.0, 1.0, 0.0);
    for init in [
        InitialDistribution::UniformAll,
        InitialDistribution::UniformNonTarget,
    ] {
        let full = mfpt_collision_3walkers_1d(&domain, &d, init).unwrap();
        let pseudo = mfpt_pseudo_walker_trimol(&domain, &d, init).unwrap();
        assert_relative_eq!(
            full.expected_time,
            pseudo.expected_time,
            max_relative = 1e-9
        );
    }
    let full = mfpt_collision_3walkers_1d(
        &domain,
        &rates(0.1, 0.1, 0.1),
        InitialDistribution::UniformAll,
    )
    .unwrap();
    assert_relative_eq!(full.expected_time, 3.143_705_733_3, max_relative = 1e-9);
}

#[test]
fn pseudo_walker_rejects_reflective() {
    let domain = DomainSpec::chain(1.0, 8, Boundary::Reflective).unwrap();
    assert!(matches!(
        mfpt_pseudo_walker_trimol(
            &domain,
            &rates(1.0, 1.0, 1.0),
            InitialDistribution::UniformAll
        ),
        Err(Error::InvalidDomain(_))
    ));
}

#[test]
fn simple_walk_from_neighbour_takes_n_minus_one_steps() {
    // Mean return time to the origin is N, and all four neighbours are equivalent.
    for k in [3, 7, 16] {
        let r = Oracle::default()
            .expected_steps_discrete_2d_from(k, &StepLaw::simple(), [1, 0])
            .unwrap();
        assert_relative_eq!(r.expected_time, (k * k - 1) as f64, max_relative = 1e-9);
    }
}

#[test]
fn diagonal_only_walk_is_unreachable() {
    let law = StepLaw::new(0.0, 0.0, 1.0).unwrap();
    assert!(matches!(
        expected_steps_discrete_2d(5, &law, InitialDistribution::UniformAll),
        Err(Error::Unreachable { .. })
    ));
}

#[test]
fn step_law_validation() {
    assert!(StepLaw::new(0.5, 0.5, 0.5).is_err());
    assert!(StepLaw::new(-0.5, 1.0, 0.5).is_err());
    let law = StepLaw::from_rates(&rates(1.0, 3.0, 0.0));
    assert_eq!(law, StepLaw::new(0.75, 0.25, 0.0).unwrap());
}

#[test]
fn caps_are_enforced() {
    let domain = DomainSpec::chain(1.0, MAX_K_THREE_WALKERS + 1, Boundary::Periodic).unwrap();
    assert!(matches!(
        mfpt_collision_3walkers_1d(
            &domain,
            &rates(1.0, 1.0, 1.0),
            InitialDistribution::UniformAll
        ),
        Err(Error::StateSpaceCap { .. })
    ));
    let square =
        DomainSpec::square(1.0, MAX_K_TWO_WALKERS_SQUARE + 1, Boundary::Reflective).unwrap();
    assert!(matches!(
        mfpt_collision_2walkers(&square, 1.0, 1.0, InitialDistribution::UniformAll),
        Err(Error::StateSpaceCap { .. })
    ));
    assert!(matches!(
        expected_steps_discrete_2d(
            MAX_K_DISCRETE + 1,
            &StepLaw::simple(),
            InitialDistribution::UniformAll
        ),
        Err(Error::StateSpaceCap { .. })
    ));
}

#[test]
fn instantaneous_reaction_equals_collision() {
    let domain = DomainSpec::chain(1.0, 6, Boundary::Reflective).unwrap();
    let d = rates(1.0, 0.5, 0.25);
    let scheme = ReactionScheme::one_d(f64::INFINITY).unwrap();
    let reaction = mean_reaction_time_3walkers_1d(&domain, &d, &scheme).unwrap();
    let collision =
        mfpt_collision_3walkers_1d(&domain, &d, InitialDistribution::UniformAll).unwrap();
    assert_eq!(reaction.expected_time, collision.expected_time);
}

#[test]
fn periodic_reaction_time_adds_mean_waiting_time() {
    // Under periodic boundaries the walker configuration seen at collision
    // is uniform over the diagonal, so each failed attempt restarts from the
    // same distribution and the excess is exactly L^2 / k_1d.
    let domain = DomainSpec::chain(1.0, 10, Boundary::Periodic).unwrap();
    let d = rates(1.0, 1.0, 1.0);
    let collision =
        mfpt_collision_3walkers_1d(&domain, &d, InitialDistribution::UniformAll).unwrap();
    for k in [1.0, 5.0] {
        let scheme = ReactionScheme::one_d(k).unwrap();
        let reaction = mean_reaction_time_3walkers_1d(&domain, &d, &scheme).unwrap();
        assert_relative_eq!(
            (reaction.expected_time - collision.expected_time) * k,
            1.0,
            max_relative = 1e-7
        );
    }
}

#[test]
fn zero_reaction_rate_is_rejected() {
    let domain = DomainSpec::chain(1.0, 4, Boundary::Periodic).unwrap();
    let scheme = ReactionScheme::one_d(0.0).unwrap();
    assert!(mean_reaction_time_3walkers_1d(&domain, &rates(1.0, 1.0, 1.0), &scheme).is_err());
}

#[test]
fn residual_is_reported() {
    let domain = DomainSpec::chain(1.0, 12, Boundary::Reflective).unwrap();
    let r = mfpt_collision_3walkers_1d(
        &domain,
        &rates(1.0, 2.0, 3.0),
        InitialDistribution::UniformAll,
    )
    .unwrap();
    assert!(r.residual <= 1e-10);
    assert_eq!(r.states, 12usize.pow(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn time_scales_inversely_with_diffusion(
        k in 2usize..9,
        du in 0.1f64..5.0,
        dv in 0.1f64..5.0,
        dw in 0.0f64..5.0,
        factor in 0.1f64..10.0,
        reflective in any::<bool>(),
    ) {
        let bc = if reflective { Boundary::Reflective } else { Boundary::Periodic };
        let domain = DomainSpec::chain(1.0, k, bc).unwrap();
        let base = mfpt_collision_3walkers_1d(&domain, &rates(du, dv, dw), InitialDistribution::UniformAll).unwrap();
        let scaled = mfpt_collision_3walkers_1d(
            &domain,
            &rates(du * factor, dv * factor, dw * factor),
            InitialDistribution::UniformAll,
        ).unwrap();
        prop_assert!((base.expected_time - scaled.expected_time * factor).abs() <= 1e-8 * base.expected_time);
    }

    #[test]
    fn initial_distributions_differ_by_target_fraction(
        k in 2usize..10,
        du in 0.1f64..5.0,
        dv in 0.1f64..5.0,
        reflective in any::<bool>(),
    ) {
        let bc = if reflective { Boundary::Reflective } else { Boundary::Periodic };
        let domain = DomainSpec::chain(1.0, k, bc).unwrap();
        let d = rates(du, dv, 1.0);
        let all = mfpt_collision_3walkers_1d(&domain, &d, InitialDistribution::UniformAll).unwrap();
        let non = mfpt_collision_3walkers_1d(&domain, &d, InitialDistribution::UniformNonTarget).unwrap();
        let n = (k * k * k) as f64;
        let expected = non.expected_time * (n - k as f64) / n;
        prop_assert!((all.expected_time - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn finer_lattice_takes_longer(k in 2usize..20, reflective in any::<bool>()) {
        let bc = if reflective { Boundary::Reflective } else { Boundary::Periodic };
        let d = rates(1.0, 0.5, 0.25);
        let coarse = mfpt_collision_3walkers_1d(&DomainSpec::chain(1.0, k, bc).unwrap(), &d, InitialDistribution::UniformAll).unwrap();
        let fine = mfpt_collision_3walkers_1d(&DomainSpec::chain(1.0, k + 1, bc).unwrap(), &d, InitialDistribution::UniformAll).unwrap();
        prop_assert!(fine.expected_time > coarse.expected_time);
    }

    #[test]
    fn expected_steps_are_at_least_one(k in 2usize..12, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let total = 1.0 + x + y;
        let law = StepLaw::new(1.0 / total, x / total, y / total).unwrap();
        let r = expected_steps_discrete_2d(k, &law, InitialDistribution::UniformNonTarget).unwrap();
        prop_assert!(r.expected_time >= 1.0);
    }
}
