use std::path::{Path, PathBuf};
use std::process::Command;

use sparsemm::bench::CSV_HEADER;
use sparsemm::cli::{parse_and_dispatch, FIT_CSV_HEADER, MEDIAN_CSV_HEADER};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sparsemm").chain(args.iter().copied());
    let code = parse_and_dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Parses CSV strictly: the header must match and every row must have the
/// header's width.
fn strict_rows(text: &str, header: &str) -> Vec<csv::StringRecord> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
    let got: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(got.join(","), header);
    reader.records().map(|r| r.unwrap()).collect()
}

#[test]
fn median_example_row_is_zero() {
    let (code, out, _) = run(&["median", "--pi", "0.5", "--sigma", "1", "--tau", "1", "--y", "0"]);
    assert_eq!(code, 0);
    let rows = strict_rows(&out, MEDIAN_CSV_HEADER);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][6], "0");
    let pi_y: f64 = rows[0][2].parse().unwrap();
    assert!((pi_y - 2f64.sqrt() / (2f64.sqrt() + 1.0)).abs() < 1e-11);
}

#[test]
fn median_accepts_negative_lists() {
    let (code, out, _) = run(&["median", "--pi", "0.9", "--y", "-10,0.1,10", "--sigma", "1", "--tau", "1"]);
    assert_eq!(code, 0);
    let rows = strict_rows(&out, MEDIAN_CSV_HEADER);
    let medians: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(medians[0] < 0.0 && medians[1] == 0.0 && medians[2] > 0.0);
    assert_eq!(&rows[0][5], "negative");
}

#[test]
fn missing_flag_is_a_usage_error_naming_it() {
    let (code, out, err) = run(&["median", "--pi", "0.5", "--sigma", "1", "--y", "0"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("--tau"), "{err}");
}

#[test]
fn invalid_parameter_values_exit_two() {
    let (code, _, err) = run(&["median", "--pi", "1.5", "--sigma", "1", "--tau", "1", "--y", "0"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = run(&["median", "--pi", "0.5", "--sigma", "0", "--tau", "1", "--y", "0"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["emlift", "--penalty", "scad"]);
    assert_eq!(code, 2);
}

#[test]
fn help_goes_to_stdout() {
    let (code, out, err) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("bench") && err.is_empty());
}

#[test]
fn bench_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = config("orthonormal.toml");
    for out in [&a, &b] {
        let (code, _, err) = run(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let rows = strict_rows(std::str::from_utf8(&first).unwrap(), CSV_HEADER);
    assert_eq!(rows.len(), 10);
    for row in rows {
        let rates: f64 = (1..4).map(|i| row[i].parse::<f64>().unwrap()).sum();
        assert!((rates - 1.0).abs() < 1e-12);
        assert_eq!(&row[6], "100");
    }
}

#[test]
fn bench_seed_override_changes_output() {
    let cfg = config("orthonormal.toml");
    let (_, one, _) = run(&["bench", "--config", cfg.to_str().unwrap(), "--seed", "1", "--lambda", "0.4"]);
    let (_, two, _) = run(&["bench", "--config", cfg.to_str().unwrap(), "--seed", "2", "--lambda", "0.4"]);
    assert_ne!(one, two);
    assert!(one.contains("scad-full[lambda=0.4]"));
}

#[test]
fn shipped_contrast_config_shows_full_scad_overfitting() {
    let cfg = config("overfit_contrast.toml");
    let (code, out, err) = run(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(err.contains("over-fits more than scad-1step"), "{err}");
    strict_rows(&out, CSV_HEADER);
}

#[test]
fn correlated_posterior_median_needs_the_flag() {
    let cfg = config("correlated_strict.toml");
    let (code, out, err) = run(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(err.contains("skipped posterior-median"), "{err}");
    assert!(!out.contains("posterior-median"));
    let (code, out, _) = run(&["bench", "--config", cfg.to_str().unwrap(), "--allow-marginal-approx"]);
    assert_eq!(code, 0);
    assert!(out.contains("posterior-median[pi=0.9 tau=1]"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("orthonormal.toml")).unwrap() + "\nbogus = 1\n";
    let text = text.replacen("replicates", "bogus_top = 2\nreplicates", 1);
    std::fs::write(&path, text).unwrap();
    let (code, _, err) = run(&["bench", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus_top"), "{err}");
}

#[test]
fn emlift_reports_verdicts() {
    let verdict = |penalty: &str| {
        let (code, out, _) = run(&["emlift", "--penalty", penalty, "--lambda", "0.7", "--seed", "3"]);
        assert_eq!(code, 0);
        out.lines().find_map(|l| l.strip_prefix("verdict = ").map(str::to_string)).unwrap()
    };
    assert_eq!(verdict("l1"), "EquivalentUpToConstant");
    assert_eq!(verdict("log"), "EquivalentUpToConstant");
    assert_eq!(verdict("quadratic"), "MgfInvalid");
}

#[test]
fn fit_from_csv_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    // y = 2 x1 exactly, x2 is noise-free and irrelevant
    let mut text = String::from("y,x1,x2\n");
    for i in 0..20 {
        let x1 = (i as f64 - 9.5) / 5.0;
        let x2 = ((i * 7) % 11) as f64 / 5.0 - 1.0;
        text.push_str(&format!("{},{},{}\n", 2.0 * x1, x1, x2));
    }
    std::fs::write(&data, text).unwrap();
    let out = dir.path().join("beta.csv");
    let (code, _, err) = run(&[
        "fit", "--data", data.to_str().unwrap(), "--lambda", "0.05", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("converged=true"));
    let rows = strict_rows(&std::fs::read_to_string(&out).unwrap(), FIT_CSV_HEADER);
    let beta: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    // SCAD leaves large coefficients unbiased
    assert!((beta[0] - 2.0).abs() < 1e-8, "{beta:?}");
    assert_eq!(beta[1], 0.0);
}

#[test]
fn fit_rejects_ragged_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "y,x\n1,2\n3\n").unwrap();
    let (code, _, err) = run(&["fit", "--data", data.to_str().unwrap(), "--lambda", "0.1"]);
    assert_eq!(code, 2);
    assert!(err.contains("row 3"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sparsemm");
    let status = Command::new(bin).args(["median", "--pi", "0.5"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let ok = Command::new(bin).args(["median", "--pi", "0.5", "--sigma", "1", "--tau", "1", "--y", "0"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8(ok.stdout).unwrap().starts_with(MEDIAN_CSV_HEADER));
}
