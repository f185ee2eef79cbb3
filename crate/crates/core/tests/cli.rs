//! End-to-end runs of the `darkpath` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use darkpath::lambda::{minimal_loss, LambdaParams, LinearTheta};
use darkpath::master::{transfer_fidelity, SimOptions};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_darkpath"))
}

struct Run {
    dir: tempfile::TempDir,
    out: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().unwrap_or(-1)
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.file(name)).unwrap()).unwrap()
    }

    /// Header and rows of a CSV, skipping the `#` provenance lines.
    fn csv(&self, name: &str) -> (Vec<String>, Vec<Vec<f64>>) {
        let text = std::fs::read_to_string(self.file(name)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# darkpath "));
        assert!(lines.next().unwrap().starts_with("# config: {"));
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
            .collect();
        (header, rows)
    }
}

fn run_config(cmd: &str, config: &Value, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    run_path(dir, cmd, &path, extra)
}

fn run_path(dir: tempfile::TempDir, cmd: &str, path: &Path, extra: &[&str]) -> Run {
    let out = bin()
        .arg(cmd)
        .arg(path)
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .args(extra)
        .output()
        .unwrap();
    Run { dir, out }
}

fn reference_rates() -> Value {
    json!({
        "kappa_r": 0.1, "gamma1_r": 2.5e-3, "gamma2_r": 2e-3,
        "gamma1_phi": 1e-3, "gamma2_phi": 1e-3,
        "constraint": {"kind": "pap", "g_max": 1.0}
    })
}

fn lambda_config(params: Value, pulse: Value, run: Value) -> Value {
    json!({"model": {"kind": "lambda", "params": params}, "pulse": pulse, "run": run})
}

#[test]
fn help_and_usage() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("--version").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("bogus").output().unwrap().status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(run_path(dir, "analytic", &missing, &[]).code(), 2);

    let mut unknown = lambda_config(reference_rates(), json!({"kind": "linear"}), json!({}));
    unknown["run"]["tf"] = json!(3.0);
    assert_eq!(run_config("analytic", &unknown, &[]).code(), 2);

    let mut negative = reference_rates();
    negative["gamma1_r"] = json!(-1e-3);
    assert_eq!(run_config("analytic", &lambda_config(negative, json!({"kind": "linear"}), json!({})), &[]).code(), 2);

    let no_time = lambda_config(reference_rates(), json!({"kind": "linear"}), json!({}));
    assert_eq!(run_config("simulate", &no_time, &[]).code(), 2);

    let ok = lambda_config(reference_rates(), json!({"kind": "linear"}), json!({"t_f": 5.0}));
    assert_eq!(run_config("simulate", &ok, &["--threads", "0"]).code(), 2);
}

#[test]
fn analytic_writes_potential_and_summary() {
    let cfg = lambda_config(reference_rates(), json!({"kind": "linear"}), json!({}));
    let r = run_config("analytic", &cfg, &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stderr));
    let (header, rows) = r.csv("analytic_potential.csv");
    assert_eq!(header, ["theta", "V", "gmax"]);
    assert_eq!(rows.len(), 181);
    assert!(rows.iter().all(|row| row[1] <= 0.0 && row[2] == 1.0));

    let doc = r.json("analytic_summary.json");
    assert_eq!(doc["tool"], "darkpath");
    assert_eq!(doc["config"]["model"]["params"]["kappa_r"], 0.1);
    let p: LambdaParams = serde_json::from_value(reference_rates()).unwrap();
    let df = doc["result"]["delta_F_min"].as_f64().unwrap();
    assert!((df - minimal_loss(&p).unwrap()).abs() <= 1e-15);
    assert_eq!(doc["result"]["divergent"], false);
    assert!(doc["result"]["t_f_opt"].as_f64().unwrap() > 0.0);
}

#[test]
fn divergent_time_exit_3_only_when_required() {
    let params = json!({
        "kappa_r": 0.1, "gamma1_r": 2.5e-3,
        "constraint": {"kind": "bounded", "g1_max": 1.0, "g2_max": 2.0}
    });
    let lenient = lambda_config(params.clone(), json!({"kind": "linear"}), json!({}));
    let r = run_config("analytic", &lenient, &[]);
    assert_eq!(r.code(), 0);
    let doc = r.json("analytic_summary.json");
    assert_eq!(doc["result"]["divergent"], true);
    assert!(doc["result"]["t_f_opt"].is_null());
    assert_eq!(doc["result"]["closed_form_match"], true);

    let strict = lambda_config(params, json!({"kind": "linear"}), json!({"require_optimal_time": true}));
    let r = run_config("analytic", &strict, &[]);
    assert_eq!(r.code(), 3);
    assert!(r.file("analytic_summary.json").exists());
}

#[test]
fn simulate_trajectory_matches_library() {
    let cfg = lambda_config(reference_rates(), json!({"kind": "linear"}), json!({"t_f": 15.0, "n_samples": 31}));
    let r = run_config("simulate", &cfg, &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stderr));
    let (header, rows) = r.csv("simulate_trajectory.csv");
    assert_eq!(header, ["t", "theta", "p_eg0", "p_ge0", "p_gg1", "p_gg0", "F"]);
    assert_eq!(rows.len(), 31);
    let last = rows.last().unwrap();
    let p: LambdaParams = serde_json::from_value(reference_rates()).unwrap();
    let f = transfer_fidelity(&p, LinearTheta { t_f: 15.0 }, &SimOptions::default()).unwrap();
    assert!((last[6] - f).abs() < 1e-10);
    assert!((rows[0][2] - 1.0).abs() < 1e-15);
    let doc = r.json("simulate_summary.json");
    assert!(doc["result"]["trace_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn simulate_energy_optimal_and_file_pulses() {
    let cfg = lambda_config(reference_rates(), json!({"kind": "energy_optimal", "energy": 0.0, "smoothing": 0.1}), json!({}));
    let r = run_config("simulate", &cfg, &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stderr));
    let doc = r.json("simulate_summary.json");
    assert!(doc["result"]["leading_order_loss"].as_f64().unwrap() > 0.0);

    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..=20)
        .map(|k| {
            let t = k as f64 * 0.5;
            format!("{t},{}\n", std::f64::consts::FRAC_PI_2 * t / 10.0)
        })
        .collect();
    std::fs::write(dir.path().join("pulse.csv"), format!("# linear\nt,theta\n{rows}")).unwrap();
    let cfg = lambda_config(reference_rates(), json!({"kind": "file", "path": "pulse.csv"}), json!({}));
    let path = dir.path().join("config.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let r = run_path(dir, "simulate", &path, &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stderr));
    let p: LambdaParams = serde_json::from_value(reference_rates()).unwrap();
    let f = transfer_fidelity(&p, LinearTheta { t_f: 10.0 }, &SimOptions::default()).unwrap();
    let got = r.json("simulate_summary.json")["result"]["fidelity"].as_f64().unwrap();
    assert!((got - f).abs() < 1e-6, "{got} vs {f}");
}

#[test]
fn simulate_generic_model() {
    let cfg = json!({
        "model": {
            "kind": "generic",
            "generators": [{"re": [[0, 1], [1, 0]]}, {"re": [[1, 0], [0, -1]]}],
            "channels": [{"label": "decay", "op": {"re": [[0, 1], [0, 0]]}, "rate": 0.01}],
            "initial_state": 1,
            "target_state": 0
        },
        "pulse": {"kind": "controls", "start": [1.0, -3.0], "end": [1.0, 3.0]},
        "run": {"t_f": 20.0, "n_samples": 11}
    });
    let r = run_config("simulate", &cfg, &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stderr));
    let (header, rows) = r.csv("simulate_trajectory.csv");
    assert_eq!(header, ["t", "g1", "g2", "p0", "p1", "F"]);
    assert_eq!(rows.len(), 11);
    let f = rows.last().unwrap()[5];
    assert!(f > 0.5 && f <= 1.0);
}

#[test]
fn step_limit_is_a_numeric_failure() {
    let run = json!({"t_f": 15.0, "sim": {"rtol": 1e-9, "atol": 1e-12, "max_steps": 5}});
    let r = run_config("simulate", &lambda_config(reference_rates(), json!({"kind": "linear"}), run), &[]);
    assert_eq!(r.code(), 4);
}

#[test]
fn unwritable_output_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, lambda_config(reference_rates(), json!({"kind": "linear"}), json!({})).to_string()).unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = bin().arg("analytic").arg(&cfg).arg("--out-dir").arg(&blocker).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn optimize_nested_orders() {
    let run = json!({
        "t_f": 15.0, "n_values": [0, 1, 2], "n_samples": 11,
        "optimizer": {"nelder_mead": {"max_evals": 150, "f_tol": 1e-10, "x_tol": 1e-7, "initial_step": 0.1, "restarts": 0}, "n_seeds": 2}
    });
    let r = run_config("optimize", &lambda_config(reference_rates(), json!({"kind": "linear"}), run), &["--threads", "1"]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stderr));
    let doc = r.json("optimize_result.json");
    let f: Vec<f64> = doc["result"]["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["fidelity"].as_f64().unwrap())
        .collect();
    assert_eq!(f.len(), 3);
    assert!(f.windows(2).all(|w| w[1] >= w[0]));
    let (header, rows) = r.csv("optimize_pulse.csv");
    assert_eq!(header, ["t", "theta", "theta_dot"]);
    assert!((rows.last().unwrap()[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn sweep_transfer_time() {
    let run = json!({
        "t_f_grid": {"start": 8.0, "stop": 24.0, "points": 3}, "n_values": [0],
        "optimizer": {"n_seeds": 1}
    });
    let r = run_config("sweep", &lambda_config(reference_rates(), json!({"kind": "linear"}), run), &["--threads", "1"]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stderr));
    let (header, rows) = r.csv("sweep_tf.csv");
    assert_eq!(header, ["t_f", "F_N0", "F_analytic", "analytic_status"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], 16.0);
    // the leading-order curve bounds the N = 0 pulse from above
    assert!(rows.iter().all(|r| r[2] >= r[1] - 1e-3));
    let doc = r.json("sweep_tf.json");
    assert_eq!(doc["result"]["peaks"][0]["n"], 0);
}

#[test]
fn sweep_needs_a_grid() {
    let r = run_config("sweep", &lambda_config(reference_rates(), json!({"kind": "linear"}), json!({})), &[]);
    assert_eq!(r.code(), 2);
}
