use std::process::{Command, Output};

use approx::assert_relative_eq;

fn polya(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polya")).args(args).output().expect("binary runs")
}

fn polya_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polya")).args(args).env("POLYA_THREADS", threads).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header and data rows (the comment line stripped).
fn table(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(o);
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# config_hash=") && comment.contains(" seed="), "{comment}");
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], row: &[String], name: &str) -> f64 {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    row[i].parse().unwrap()
}

#[test]
fn density_example() {
    let o = polya(&["density", "--space", "G", "--n", "2", "--weight", "ginibre:nu=1", "--points", "1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = table(&o);
    assert_eq!(h, ["a1", "a2", "density"]);
    assert_relative_eq!(col(&h, &rows[0], "density"), 0.0248935341839319, max_relative = 1e-10);
}

#[test]
fn hciz_example() {
    let o = polya(&["verify", "hciz", "--n", "2", "--a", "1,2", "--s", "3,5", "--samples", "1000000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = table(&o);
    assert_relative_eq!(col(&h, &rows[0], "closed_re"), 0.7100786216886721, max_relative = 1e-12);
    assert_relative_eq!(col(&h, &rows[0], "closed_im"), -0.4515105417310725, max_relative = 1e-12);
    assert!(col(&h, &rows[0], "sigmas") < 5.0);
    assert!(col(&h, &rows[0], "std_error") > 0.0);
}

#[test]
fn gap_indicator_has_witness() {
    let o = polya(&["pff-check", "--weight", "indicator_gap", "--order", "2", "--trials", "10000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let (h, rows) = table(&o);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][h.iter().position(|c| c == "is_pff").unwrap()], "false");
    assert!(col(&h, &rows[0], "value") < 0.0);
}

#[test]
fn gaussian_passes_pff_check() {
    let o = polya(&["pff-check", "--weight", "gaussian", "--order", "3", "--trials", "500", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        vec!["density", "--space", "Q", "--weight", "gaussian", "--points", "1"],
        vec!["pff-check", "--weight", "gaussian"],
        vec!["verify", "hciz", "--a", "1,2", "--s", "3,5", "--samples", "10"],
        vec!["density", "--space", "G", "--n", "2", "--weight", "ginibre:nu=-3", "--points", "1,2"],
        vec!["density", "--space", "G", "--n", "2", "--weight", "nosuch", "--points", "1,2"],
        vec!["verify", "hciz", "--n", "3", "--a", "1,2", "--s", "3,5", "--samples", "10", "--seed", "1"],
        vec!["--config", "/nonexistent/run.json"],
        vec![],
    ] {
        let o = polya(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn json_config_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command":"density","space":"G","n":2,"weight":"ginibre:nu=1","points":[[1,2],[0.5,3]]}"#)
        .unwrap();
    let o = polya(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = table(&o);
    assert_eq!(rows.len(), 2);
    assert_relative_eq!(col(&h, &rows[0], "density"), 0.0248935341839319, max_relative = 1e-10);
    // ω = e^{−x}: C = 1/2 and the density is Δ(a)² e^{−a₁−a₂}/2
    let o = polya(&["--config", cfg.to_str().unwrap(), "density", "--weight", "ginibre:nu=0"]);
    let (h, rows) = table(&o);
    assert_relative_eq!(col(&h, &rows[1], "density"), 6.25 * (-3.5f64).exp() / 2.0, max_relative = 1e-10);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"command":"density","sead":1}"#).unwrap();
    assert_eq!(polya(&["--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let args = ["simulate", "--space", "H2", "--n", "2", "--family", "gaussian:eps=1", "--samples", "3000", "--seed", "11"];
    let a = polya_env(&args, "1");
    let b = polya_env(&args, "4");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = polya(&["simulate", "--space", "H2", "--n", "2", "--family", "gaussian:eps=1", "--samples", "3000", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = polya(&["normalize", "--space", "M", "--n", "2", "--weight", "ginibre:nu=0", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("M,2,0,"));
    assert_relative_eq!(last[6..].parse::<f64>().unwrap(), 0.5, max_relative = 1e-12);
}

#[test]
fn transform_and_convolution_rows() {
    let o = polya(&["transform", "--space", "G", "--weight", "ginibre:nu=0", "--s", "0.5,2"]);
    let (h, rows) = table(&o);
    assert_eq!(h, ["s_re", "s_im", "value_re", "value_im"]);
    assert_relative_eq!(col(&h, &rows[0], "value_re"), std::f64::consts::PI.sqrt(), max_relative = 1e-10);
    assert_relative_eq!(col(&h, &rows[1], "value_re"), 1.0, max_relative = 1e-10);

    let o = polya(&[
        "convolve", "--space", "M", "--weight", "exponential:a=1", "--weight2", "exponential:a=2", "--grid", "0.5,1,4",
    ]);
    let (h, rows) = table(&o);
    for r in &rows {
        let x = col(&h, r, "x");
        assert_relative_eq!(col(&h, r, "value"), (-x / 3.0).exp() / 3.0, max_relative = 1e-8);
    }
}

#[test]
fn bk_and_group_identity_pass() {
    let o = polya(&[
        "verify", "bk", "--space", "M", "--nu", "1", "--a", "1,2", "--s", "0.5,1.5", "--samples", "100000", "--seed", "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = polya(&[
        "verify", "group-identity", "--space", "H2", "--n", "2", "--weight", "gaussian", "--x", "0.3,1", "--y", "-0.5,0.7",
        "--samples", "100000", "--seed", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn failed_verification_exits_1() {
    // a threshold of zero standard errors cannot be met by a noisy estimate
    let o = polya(&["verify", "gn", "--a", "1,2", "--s", "1,2", "--samples", "2000", "--seed", "5", "--threshold", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let (h, rows) = table(&o);
    assert_eq!(rows[0][h.iter().position(|c| c == "passed").unwrap()], "false");
}
