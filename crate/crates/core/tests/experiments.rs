use trimol::experiments::{
    estimate, estimate_with, read_records_from, reproduce_figure, EstimateOptions, Experiment,
    FigureOptions,
};
use trimol::{Boundary, DiffusionRates};

fn set_a() -> DiffusionRates {
    DiffusionRates::new(0.1, 0.1, 0.1).unwrap()
}

#[test]
fn single_compartment_collides_at_once() {
    let p = Experiment::trimol(1.0, 1, Boundary::Reflective, set_a()).unwrap();
    let s = estimate(&p.sampler(), 100, 1).unwrap();
    assert_eq!((s.mean, s.std_error, s.n_capped), (0.0, 0.0, 0));
}

#[test]
fn two_compartments_match_the_exact_mean() {
    let p = Experiment::trimol(1.0, 2, Boundary::Reflective, set_a()).unwrap();
    let s = estimate(&p.sampler(), 100_000, 20240601).unwrap();
    assert!((s.mean - 1.875).abs() <= 3.0 * s.std_error, "{s:?}");
    let (lo, hi) = s.confidence_interval();
    assert!(lo < s.mean && s.mean < hi);
}

#[test]
fn worker_count_does_not_change_the_result() {
    let p = Experiment::bimol_2d(1.0, 12, Boundary::Periodic, 2.0, 1.0).unwrap();
    let run = |workers| {
        let options = EstimateOptions {
            workers: Some(workers),
            ..Default::default()
        };
        estimate_with(&p.sampler(), 3000, 11, options).unwrap()
    };
    let one = run(1);
    for w in [2, 8] {
        let other = run(w);
        assert_eq!(one.mean.to_bits(), other.mean.to_bits());
        assert_eq!(one.std_error.to_bits(), other.std_error.to_bits());
    }
}

#[test]
fn too_few_trials_is_an_error() {
    let p = Experiment::trimol(1.0, 4, Boundary::Periodic, set_a()).unwrap();
    assert!(estimate(&p.sampler(), 1, 1).unwrap_err().is_validation());
}

#[test]
fn figure_csv_keeps_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let options = FigureOptions {
        skip_mc: true,
        ..Default::default()
    };
    let path = reproduce_figure("fig1", dir.path(), &options).unwrap();
    let records = read_records_from(&path).unwrap();
    // 36 points, formula and oracle rows each.
    assert_eq!(records.len(), 72);
    let absent = records.iter().filter(|r| r.mean.is_none()).count();
    assert!(
        absent > 0,
        "reflective points above the cap keep an empty oracle row"
    );
    assert!(records
        .iter()
        .all(|r| (r.h() - r.length / r.compartments as f64).abs() == 0.0));

    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    assert!(reproduce_figure("fig1", &blocked.join("sub"), &options).is_err());
}
