use std::fs;
use std::path::Path;

use twistbethe::config::{Experiment, ExperimentConfig, FitSpec, ParityFilter};
use twistbethe::emit::emit_all;
use twistbethe::record::{read_csv, read_json, ResultRecord, Status};
use twistbethe::run::run;
use twistbethe::svg::FIT_CURVE_POINTS;
use twistbethe_core::model::Boundary;
use twistbethe_core::scaling::FitKind;

fn config(experiment: Experiment, eta: &[f64], n: &[usize], out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment, eta.to_vec(), n.to_vec(), Boundary::Antiperiodic);
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn value(r: &ResultRecord, name: &str) -> f64 {
    r.output(name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn two_site_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config(Experiment::EdSpectrum, &[0.7, 2.0], &[2], dir.path())).unwrap();
    assert_eq!(out.records.len(), 2);
    for r in &out.records {
        assert!((value(r, "e0") + 2.0).abs() < 1e-12);
        assert_eq!(value(r, "degeneracy"), 2.0);
    }
}

#[test]
fn inhomogeneous_term_is_positive_for_even_chains() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Experiment::EinhScan, &[2.0], &[8, 10, 12, 14, 16, 18], dir.path());
    let out = run(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    let values: Vec<f64> = out.records.iter().map(|r| value(r, "e_inh_scaled")).collect();
    assert!(values.iter().all(|&v| v > 0.0), "{values:?}");
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");

    let svg = fs::read_to_string(out.files.svg.unwrap()).unwrap();
    assert!(svg.contains(r#"data-axes="log-log""#));
    assert!(svg.contains(&format!(r#"data-points="{FIT_CURVE_POINTS}""#)));
}

#[test]
fn thermo_table_has_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config(Experiment::Thermo, &[2.0, 3.0], &[], dir.path())).unwrap();
    let eb: Vec<f64> = out.records.iter().map(|r| value(r, "e_b_scaled")).collect();
    assert!((eb[0] - 1.02746).abs() < 1e-5 && (eb[1] - 1.61356).abs() < 1e-5, "{eb:?}");
    let gap: Vec<f64> = out.records.iter().map(|r| value(r, "gap_odd_scaled")).collect();
    assert!((gap[0] - 2.05492).abs() < 1e-5 && (gap[1] - 3.22712).abs() < 1e-5, "{gap:?}");
}

#[test]
fn written_tables_parse_back_to_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config(Experiment::SolveHom, &[1.5], &[6, 7, 40], dir.path())).unwrap();
    let from_csv = read_csv(fs::File::open(out.files.csv.unwrap()).unwrap()).unwrap();
    let from_json = read_json(fs::File::open(out.files.json.unwrap()).unwrap()).unwrap();
    assert_eq!(from_csv, out.records);
    assert_eq!(from_json, out.records);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = config(Experiment::BoundaryEnergyScan, &[2.0, 3.0], &[4, 5, 6], a.path());
    cfg.timestamp = Some(1_700_000_000);
    cfg.workers = Some(3);
    let first = run(&cfg).unwrap();
    cfg.output_dir = b.path().to_path_buf();
    cfg.workers = Some(1);
    let second = run(&cfg).unwrap();
    for (x, y) in [
        (first.files.csv, second.files.csv),
        (first.files.json, second.files.json),
        (first.files.svg, second.files.svg),
    ] {
        assert_eq!(fs::read(x.unwrap()).unwrap(), fs::read(y.unwrap()).unwrap());
    }
}

#[test]
fn cached_points_agree_with_fresh_ones() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::GapScan, &[2.0], &[6, 7, 8], dir.path());
    let fresh = run(&cfg).unwrap();
    assert_eq!(fresh.cached, 0);
    let cached = run(&cfg).unwrap();
    assert_eq!(cached.cached, 3);
    cfg.force = true;
    let forced = run(&cfg).unwrap();
    assert_eq!(forced.cached, 0);
    for (a, b) in fresh.records.iter().zip(&cached.records).chain(fresh.records.iter().zip(&forced.records)) {
        for (name, &x) in &a.outputs {
            assert!((x - value(b, name)).abs() <= 1e-14 * x.abs().max(1.0), "{name}");
        }
    }
    let cache_files = fs::read_dir(dir.path().join("cache")).unwrap().count();
    assert_eq!(cache_files, 3);
}

#[test]
fn failed_points_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Fit, &[], &[], dir.path());
    cfg.fit = Some(FitSpec {
        kind: FitKind::Power,
        input: dir.path().join("missing.csv"),
        column: None,
        parity: None,
    });
    let out = run(&cfg).unwrap();
    assert_eq!(out.failures, 1);
    let r = &out.records[0];
    assert_eq!(r.status, Status::Error);
    assert!(r.error.as_deref().unwrap().contains("missing.csv"));
    assert!(r.outputs.values().all(|v| v.is_nan()));
}

#[test]
fn fit_of_a_scan_overlays_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let scan = run(&config(Experiment::BoundaryEnergyScan, &[2.0], &[4, 6, 8, 10], dir.path())).unwrap();
    let mut cfg = config(Experiment::Fit, &[], &[], dir.path());
    cfg.fit = Some(FitSpec {
        kind: FitKind::ExpOffset,
        input: scan.files.csv.unwrap(),
        column: Some("diff_scaled".into()),
        parity: Some(ParityFilter::Even),
    });
    let out = run(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    let r = &out.records[0];
    assert_eq!(r.variant, "exp-offset");
    assert_eq!(r.eta, 2.0);
    assert_eq!(value(r, "n_points"), 4.0);
    assert!((value(r, "asymptote") - 1.02746).abs() < 0.05, "{}", value(r, "asymptote"));
    let svg = fs::read_to_string(out.files.svg.unwrap()).unwrap();
    assert!(svg.contains(&format!(r#"data-points="{FIT_CURVE_POINTS}""#)));
}

#[test]
fn mixed_schemas_are_not_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&config(Experiment::Thermo, &[2.0], &[], dir.path())).unwrap();
    let b = run(&config(Experiment::SolveHom, &[2.0], &[6], dir.path())).unwrap();
    let mixed: Vec<ResultRecord> = a.records.into_iter().chain(b.records).collect();
    assert!(emit_all(&mixed, &dir.path().join("mixed"), None).is_err());
}
