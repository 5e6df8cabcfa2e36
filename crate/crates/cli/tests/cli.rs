use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn device() -> String {
    root().join("data/device.json").display().to_string()
}

fn fixture(name: &str) -> String {
    root()
        .join("data/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxline"))
        .args(args)
        .env_remove("FLUXLINE_CONFIG")
        .output()
        .expect("running fluxline")
}

fn json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn csv_rows(text: &[u8]) -> Vec<Vec<String>> {
    String::from_utf8_lossy(text)
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fluxline-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn spectrum_summary_for_q0() {
    let out = run(&["--json", "spectrum", &device(), "--qubit", "q0"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert!((v["f_max_mhz"].as_f64().unwrap() - 3851.0).abs() < 10.0);
    assert!((v["f_min_mhz"].as_f64().unwrap() - 2981.0).abs() < 15.0);
    assert!((v["anharmonicity_at_max_mhz"].as_f64().unwrap() + 206.0).abs() < 10.0);
    assert_eq!(v["points"], 101);
    assert_eq!(v["all_converged"], true);
}

#[test]
fn spectrum_table_has_one_row_per_point() {
    let out = run(&[
        "spectrum",
        &device(),
        "--qubit",
        "q2",
        "--points",
        "1",
        "--phi-min",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out.stdout);
    assert_eq!(
        rows[0],
        [
            "phi",
            "f01_asymptotic_mhz",
            "f01_diag_mhz",
            "anharmonicity_mhz"
        ]
    );
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "0");
}

#[test]
fn unknown_qubit_is_an_input_error() {
    let out = run(&["spectrum", &device(), "--qubit", "q9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q9"));
}

#[test]
fn missing_config_is_an_input_error() {
    let out = run(&["spectrum", "--qubit", "q0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_fluxline"))
        .args(["--json", "spectrum", "--qubit", "q0", "--points", "3"])
        .env("FLUXLINE_CONFIG", device())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["qubit"], "q0");
}

#[test]
fn malformed_config_is_an_input_error() {
    let dir = temp_dir("badcfg");
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"qubits": [{"name": "a", "e_c_mhz": -1}]}"#).unwrap();
    let out = run(&["diplexer", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn modulate_zero_drive_and_small_amplitude() {
    let out = run(&[
        "modulate",
        &device(),
        "--qubit",
        "q0",
        "--phi-ac",
        "0,1.6e-4",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&out.stdout);
    assert_eq!(
        rows[0],
        ["phi_ac", "f_bar_series_mhz", "delta_hz", "second_order_hz"]
    );
    let f0: f64 = rows[1][1].parse().unwrap();
    assert_eq!(rows[1][2], "0");
    assert!((f0 - 3851.0).abs() < 10.0);
    let delta: f64 = rows[2][2].parse().unwrap();
    let second: f64 = rows[2][3].parse().unwrap();
    assert!((delta + 79.0).abs() < 2.0, "{delta}");
    assert!((second + 79.0).abs() < 2.0, "{second}");
}

#[test]
fn modulate_oracle_column_stays_in_band() {
    let table = temp_dir("mod").join("m.csv");
    let out = run(&[
        "--json",
        "modulate",
        &device(),
        "--qubit",
        "q0",
        "--oracle",
        "--points",
        "7",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert!(v["max_series_oracle_deviation_mhz"].as_f64().unwrap() < 0.005 * 870.0);
}

#[test]
fn crosstalk_reproduces_the_spurious_flux() {
    let out = run(&[
        "crosstalk",
        &device(),
        "--qubit",
        "q0",
        "--gamma-db",
        "85",
        "--v-p",
        "0.3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let phi = v["phi_ac"].as_f64().unwrap();
    assert!((phi / 1.6e-4 - 1.0).abs() < 0.03, "{phi}");
    let delta = v["delta_f_hz"].as_f64().unwrap();
    assert!((delta + 82.04).abs() < 0.05, "{delta}");
    assert_eq!(v["detectable"], false);
}

#[test]
fn crosstalk_zero_amplitude_and_bad_attenuation() {
    let out = run(&[
        "crosstalk",
        &device(),
        "--qubit",
        "q0",
        "--gamma-db",
        "85",
        "--v-p",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["phi_ac"].as_f64(), Some(0.0));
    assert_eq!(v["delta_f_hz"].as_f64(), Some(0.0));

    let out = run(&[
        "crosstalk",
        &device(),
        "--qubit",
        "q0",
        "--gamma-db",
        "-3",
        "--v-p",
        "0.3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn crosstalk_from_named_chain() {
    let out = run(&[
        "crosstalk",
        &device(),
        "--qubit",
        "q0",
        "--chain",
        "xy",
        "--v-p",
        "0.3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["gamma_db"].as_f64(), Some(66.0));
}

#[test]
fn diplexer_default_design_passes() {
    let dir = temp_dir("dip");
    let report = dir.join("report.json");
    let out = run(&[
        "diplexer",
        &device(),
        "--points",
        "400",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out.stdout);
    assert_eq!(
        rows[0],
        ["frequency_mhz", "s31_db", "s32_db", "s12_db", "s33_db"]
    );
    assert_eq!(rows.len(), 401);
    let body: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(body["report"]["pass"], true);
}

#[test]
fn diplexer_spec_failure_is_reported_not_an_error() {
    let out = run(&[
        "--json",
        "diplexer",
        &device(),
        "--lp-order",
        "1",
        "--bp-order",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["pass"], false);
}

#[test]
fn fit_rb_fixture() {
    let out = run(&["fit", "rb", &fixture("rb.csv")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["converged"], true);
    let fidelity = 100.0 * v["derived"]["fidelity"].as_f64().unwrap();
    assert!((fidelity - 99.77).abs() < 0.05, "{fidelity}");
}

#[test]
fn fit_t1_fixture_with_residuals() {
    let dir = temp_dir("t1");
    let residuals = dir.join("res.csv");
    let out = run(&[
        "fit",
        "t1",
        &fixture("t1.csv"),
        "--residuals",
        residuals.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let t1 = json(&out)["params"]["T1"].as_f64().unwrap();
    assert!((t1 / 53.0 - 1.0).abs() < 0.01, "{t1}");
    let rows = csv_rows(&std::fs::read(residuals).unwrap());
    assert_eq!(rows[0], ["x", "y", "model", "residual"]);
    assert_eq!(rows.len(), 102);
}

#[test]
fn fit_beta_uses_config_qubit() {
    let out = run(&[
        "fit",
        "beta",
        &fixture("beta.csv"),
        &device(),
        "--qubit",
        "q0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let beta = json(&out)["params"]["beta"].as_f64().unwrap();
    assert!((beta / 0.51 - 1.0).abs() < 0.01, "{beta}");

    let out = run(&["fit", "beta", &fixture("beta.csv")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_input_errors_and_non_convergence() {
    let dir = temp_dir("fitbad");
    let empty = dir.join("empty.csv");
    std::fs::write(&empty, "t_us,population\n").unwrap();
    assert_eq!(
        run(&["fit", "t1", empty.to_str().unwrap()]).status.code(),
        Some(2)
    );

    let flat = dir.join("flat.csv");
    let text: String = (0..20).map(|i| format!("{i},0.5\n")).collect();
    std::fs::write(&flat, format!("t_us,population\n{text}")).unwrap();
    let out = run(&["fit", "t1", flat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["converged"], false);
}
