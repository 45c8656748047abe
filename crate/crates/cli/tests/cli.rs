//! End-to-end tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ocbsim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn cool_writes_artifacts_and_cools() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "cool", "--g", "0.1", "--dt", "0.05", "--nbar0", "1", "--kappa-nbar", "1", "--dim",
        "32", "--max-ocb", "30", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in [
        "trace.csv",
        "trace.json",
        "final_state.dm",
        "effective.conf",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let text = stdout(&out);
    let nbar_f: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("nbar_f = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(nbar_f < 1.0, "nbar_f = {nbar_f}");
    assert!(text.contains("P_f = "));
    assert!(text.contains("stable_ocb = "));

    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "cool");
    let artifacts: Vec<String> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    for name in ["trace.csv", "trace.json", "final_state.dm", "effective.conf", "manifest.json"] {
        assert!(artifacts.contains(&name.to_string()), "{name} not listed");
    }
}

#[test]
fn cool_without_kicks_keeps_probability_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "cool", "--g", "0", "--dt", "0.1", "--nbar0", "1", "--kappa-nbar", "1", "--dim", "32",
        "--max-ocb", "10", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let p_f: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("P_f = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((p_f - 1.0).abs() < 1e-12);
    // nbar stays at the bath value on every row.
    for line in read(dir.path(), "trace.csv").lines().skip(1) {
        let nbar: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((nbar - 1.0).abs() < 1e-6, "{line}");
    }
}

#[test]
fn lossless_run_matches_k_round_recursion() {
    // kappa = 0, dt = 0: four blocks from nbar0 = 5 at g = 0.1. The
    // per-round recursion nbar -> nbar (1 - 2|g|^2 (nbar + 1)) tracks the
    // run; at this nbar0 the temperature factor moves too much for the
    // frozen k-round power form to stay within a few percent.
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "cool", "--g", "0.1", "--dt", "0", "--kappa", "0", "--nbar0", "5", "--max-ocb", "4",
        "--stability-tol", "1e-9", "--dim", "96", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = read(dir.path(), "trace.csv");
    let last = trace.lines().last().unwrap();
    let nbar: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    let mut predicted = 5.0;
    for _ in 0..4 {
        predicted *= 1.0 - 2.0 * 0.01 * (predicted + 1.0);
    }
    assert!(
        (nbar - predicted).abs() / predicted < 0.05,
        "nbar {nbar} vs recursion {predicted}"
    );
    // Monotone decrease block to block.
    let mut prev = f64::INFINITY;
    for line in trace.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v <= prev + 1e-12);
        prev = v;
    }
}

#[test]
fn invalid_arguments_exit_2() {
    // Unparseable coupling.
    let out = run(&["cool", "--g", "abc", "--dt", "0.05"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    // Missing required parameter.
    let out = run(&["cool", "--dt", "0.05"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown flag (clap).
    let out = run(&["cool", "--nonsense", "1"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown formula.
    let out = run(&["analytic", "--formula", "mystery", "--nbar", "1", "--g", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing --k for a k-round formula.
    let out = run(&["analytic", "--formula", "nbark", "--nbar", "1", "--g", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulation_errors_exit_3_naming_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    // dim 16 cannot hold a thermal state at nbar = 5.
    let out = run(&[
        "cool", "--g", "0.1", "--dt", "0.05", "--nbar0", "5", "--dim", "16", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("thermal tail"), "{}", stderr(&out));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        "g = 0.2\ndt = 0.05\nnbar0 = 1\nkappa-nbar = 1\ndim = 32\nmax-ocb = 5\n",
    )
    .unwrap();
    let out = run(&[
        "cool",
        "--config",
        conf.to_str().unwrap(),
        "--g",
        "0.1",
        "--stability-tol",
        "1e-9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["effective_config"]["g"][0], 0.1);
    assert_eq!(manifest["effective_config"]["dim"], 32);
    let conf_echo = read(dir.path(), "effective.conf");
    assert!(conf_echo.contains("g = 0.1"), "{conf_echo}");

    // Unknown config key fails loudly.
    std::fs::write(&conf, "gg = 0.2\n").unwrap();
    let out = run(&["cool", "--config", conf.to_str().unwrap(), "--g", "0.1", "--dt", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifest_config_reruns_identically() {
    let first = tempfile::tempdir().unwrap();
    let out = run(&[
        "cool", "--g", "0.1", "--dt", "0.05", "--nbar0", "1", "--kappa-nbar", "1", "--dim",
        "32", "--max-ocb", "10", "--stability-tol", "1e-9", "--out",
        first.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let second = tempfile::tempdir().unwrap();
    let conf = first.path().join("effective.conf");
    let out = run(&[
        "cool",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        second.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    assert_eq!(
        read(first.path(), "trace.csv"),
        read(second.path(), "trace.csv"),
        "rerun from the echoed config must be numerically identical"
    );
}

#[test]
fn sweep_degenerate_grid_and_slices() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep", "--g-values", "0.1,0.2", "--dt-values", "0.05,0.1", "--dim", "32",
        "--max-ocb", "20", "--workers", "2", "--slice-dt", "0.05", "--slice-g", "0.2",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let heatmap = read(dir.path(), "heatmap.csv");
    assert_eq!(heatmap.lines().count(), 5); // header + 4 cells
    assert!(heatmap.starts_with("g,dt_kappa,cooling_ratio,prob_final,reached,ocb_at_stability"));

    let slice_dt = read(dir.path(), "slice_dt_0.05.csv");
    assert_eq!(slice_dt.lines().count(), 3); // header + 2 g cells
    let slice_g = read(dir.path(), "slice_g_0.2.csv");
    assert_eq!(slice_g.lines().count(), 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "sweep");

    // Off-grid slice exits 2 and lists the grid.
    let out = run(&[
        "sweep", "--g-values", "0.1", "--dt-values", "0.05", "--dim", "32", "--slice-dt",
        "0.42", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("0.05"), "{}", stderr(&out));
}

#[test]
fn sweep_single_cell_matches_cool() {
    let sweep_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep", "--g-values", "0.1", "--dt-values", "0.05", "--nbar0", "1", "--kappa-nbar",
        "1", "--dim", "32", "--max-ocb", "30", "--out", sweep_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let heatmap = read(sweep_dir.path(), "heatmap.csv");
    let row = heatmap.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    let ratio: f64 = cols[2].parse().unwrap();
    let prob: f64 = cols[3].parse().unwrap();

    let cool_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "cool", "--g", "0.1", "--dt", "0.05", "--nbar0", "1", "--kappa-nbar", "1", "--dim",
        "32", "--max-ocb", "30", "--out", cool_dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    let nbar_f: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("nbar_f = "))
        .unwrap()
        .parse()
        .unwrap();
    let p_f: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("P_f = "))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(ratio, nbar_f, "cooling ratio vs nbar_f at nbar0 = 1");
    assert_eq!(prob, p_f);
}

#[test]
fn wigner_thermal_and_saved_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "wigner", "--nbar", "0", "--dim", "32", "--range", "1", "--points", "5", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = read(dir.path(), "wigner.csv");
    assert!(csv.starts_with("x,p,w"));
    assert_eq!(csv.lines().count(), 26);
    // Vacuum peak 1/pi at the origin (row p=0, x=0).
    let peak: f64 = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .fold(f64::MIN, f64::max)
        ;
    assert!((peak - 1.0 / std::f64::consts::PI).abs() < 1e-9, "peak {peak}");

    // Evaluate a state produced by cool: after eight lossless blocks from
    // nbar0 = 2 the state is narrower than the initial thermal, so its
    // Wigner peak exceeds 1/(pi (2*2 + 1)).
    let cool_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "cool", "--g", "0.1", "--dt", "0", "--kappa", "0", "--nbar0", "2", "--max-ocb", "8",
        "--stability-tol", "1e-9", "--dim", "48", "--out", cool_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let state = cool_dir.path().join("final_state.dm");
    let wig_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "wigner", "--state", state.to_str().unwrap(), "--range", "2", "--points", "5",
        "--out", wig_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let peak: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("peak = "))
        .unwrap()
        .parse()
        .unwrap();
    let initial_peak = 1.0 / (std::f64::consts::PI * 5.0);
    assert!(peak > initial_peak, "peak {peak} vs initial {initial_peak}");

    // Mismatched --dim exits 2.
    let out = run(&[
        "wigner", "--state", state.to_str().unwrap(), "--dim", "64", "--out",
        wig_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // --nbar and --state together exit 2.
    let out = run(&["wigner", "--nbar", "1", "--state", state.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_with_failing_cells_exits_3() {
    // dim 16 cannot hold thermal(5): every cell fails, so the run reports
    // under 90% success.
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep", "--g-values", "0.1,0.2", "--dt-values", "0.05", "--nbar0", "5", "--dim",
        "16", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    // The heatmap is still written, with the failures flagged.
    let heatmap = read(dir.path(), "heatmap.csv");
    assert_eq!(heatmap.lines().count(), 3);
    assert!(stderr(&out).contains("failed"), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "heatmap.json")).unwrap();
    assert!(json["cells"][0]["error"].as_str().unwrap().contains("thermal tail"));
}

#[test]
fn analytic_prints_json_values() {
    let out = run(&["analytic", "--formula", "p-plus", "--nbar", "1", "--g", "0.1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let expected = 0.5 * (1.0 + (-0.015f64).exp());
    assert!((doc["value"].as_f64().unwrap() - expected).abs() < 1e-15);
    assert_eq!(doc["formula"], "p-plus");
    assert_eq!(doc["inputs"]["nbar"], 1.0);

    let out = run(&["analytic", "--formula", "nbar1", "--nbar", "5", "--g", "0.1"]);
    let doc: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!((doc["value"].as_f64().unwrap() - 4.4).abs() < 1e-12);

    let out = run(&[
        "analytic", "--formula", "probk", "--nbar", "1", "--g", "0.05", "--k", "0",
    ]);
    let doc: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(doc["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["wigner", "--nbar", "0", "--dim", "16", "--range", "1", "--points", "3"])
        .env("OCBSIM_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("wigner.csv").exists());
}
