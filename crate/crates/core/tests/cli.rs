use std::process::{Command, Output};

use trimol::experiments::{read_records, Estimator, CSV_HEADER};

fn trimol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trimol"))
        .args(args)
        .output()
        .expect("run trimol binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn formula_prints_one_record() {
    let o = trimol(&[
        "formula", "--model", "bimol2d", "--L", "1", "--K", "100", "--bc", "periodic", "--Du", "1",
        "--Dv", "1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let records = read_records(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].estimator, Estimator::Formula);
    assert!((records[0].mean.unwrap() - 0.390858).abs() < 1e-6);
    assert_eq!(records[0].std_error, None);
}

#[test]
fn mc_is_reproducible() {
    let args = [
        "mc",
        "--model",
        "trimol",
        "--K",
        "6",
        "--bc",
        "reflective",
        "--Du",
        "0.5",
        "--Dv",
        "0.2",
        "--Dw",
        "0.1",
        "--trials",
        "500",
        "--seed",
        "7",
    ];
    let a = trimol(&args);
    let mut one_worker = args.to_vec();
    one_worker.extend(["--workers", "1"]);
    let b = trimol(&one_worker);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let r = &read_records(stdout(&a).as_bytes()).unwrap()[0];
    assert_eq!((r.n_trials, r.seed), (Some(500), Some(7)));
}

#[test]
fn reaction_needs_a_rate() {
    let base = [
        "formula", "--model", "reaction", "--Du", "0.5", "--Dv", "0.2", "--Dw", "0.1",
    ];
    assert_eq!(trimol(&base).status.code(), Some(2));
    let mut with_rate = base.to_vec();
    with_rate.extend(["--k1d", "5"]);
    let o = trimol(&with_rate);
    assert!(o.status.success());
    let r = &read_records(stdout(&o).as_bytes()).unwrap()[0];
    assert_eq!(r.k_value, Some(5.0));
    assert_eq!(r.scaling.unwrap().as_str(), "1d");
}

#[test]
fn exit_codes() {
    // Validation.
    assert_eq!(
        trimol(&["formula", "--model", "trimol", "--Du=-1", "--Dv", "1", "--Dw", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(trimol(&["formula", "--bc", "open"]).status.code(), Some(2));
    // Oracle cap.
    let cap = trimol(&[
        "oracle",
        "--model",
        "trimol",
        "--K",
        "100",
        "--bc",
        "reflective",
        "--Du",
        "1",
        "--Dv",
        "1",
        "--Dw",
        "1",
    ]);
    assert_eq!(cap.status.code(), Some(3));
    // I/O.
    assert_eq!(
        trimol(&["compare", "--input", "/nonexistent/records.csv"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        "# trimolecular point\nmodel = trimol\nK = 8\nbc = reflective\nDu = 0.5\nDv = 0.2\nDw = 0.1\ntrials = 99\n",
    )
    .unwrap();
    let c = config.to_str().unwrap();
    // `trials` is not a formula flag and is ignored there.
    let from_file = trimol(&["formula", "--config", c]);
    assert!(
        from_file.status.success(),
        "{}",
        String::from_utf8_lossy(&from_file.stderr)
    );
    let r = &read_records(stdout(&from_file).as_bytes()).unwrap()[0];
    assert_eq!((r.compartments, r.dw), (8, Some(0.1)));
    // The command line wins over the file.
    let overridden = trimol(&["formula", "--config", c, "--K", "16"]);
    let r = &read_records(stdout(&overridden).as_bytes()).unwrap()[0];
    assert_eq!(r.compartments, 16);

    std::fs::write(&config, "K 8\n").unwrap();
    assert_eq!(trimol(&["formula", "--config", c]).status.code(), Some(2));
}

#[test]
fn figure_then_compare_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = trimol(&["figure", "--tag", "figB1", "--out", out, "--trials", "200"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("figB1.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let records = read_records(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 18);

    let again = dir.path().join("again");
    trimol(&[
        "figure",
        "--tag",
        "figB1",
        "--out",
        again.to_str().unwrap(),
        "--trials",
        "200",
    ]);
    assert_eq!(
        std::fs::read_to_string(again.join("figB1.csv")).unwrap(),
        text
    );

    let p = path.to_str().unwrap();
    let cmp = trimol(&["compare", "--input", p]);
    assert!(cmp.status.success());
    assert_eq!(stdout(&cmp).lines().count(), 7);

    let fit = trimol(&[
        "fit",
        "--input",
        p,
        "--kind",
        "encounter",
        "--estimator",
        "oracle",
    ]);
    assert!(fit.status.success());
    let line = stdout(&fit)
        .lines()
        .find(|l| l.starts_with("fitted_intercept_coefficient"))
        .unwrap()
        .to_string();
    let b: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((b - 0.1406).abs() < 1e-3, "{b}");

    assert_eq!(
        trimol(&["figure", "--tag", "fig9", "--out", out])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oracle_steps_and_montroll() {
    let o = trimol(&[
        "oracle",
        "--steps",
        "--K",
        "8",
        "--Du",
        "1",
        "--Dv",
        "1",
        "--Dw",
        "0",
        "--init",
        "non-target",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("steps = "));
    let m = trimol(&[
        "formula", "--kind", "montroll", "--Du", "1", "--Dv", "1", "--Dw", "1",
    ]);
    assert!(stdout(&m).contains("eta = 0.333333"));
}
