// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! `darkpath analytic|simulate|optimize|sweep <config.json>`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 divergent optimal time
//! (when required), 4 numeric failure, 1 output I/O failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bench::{
    analytic_fidelity, lambda_point, optimize_nested, optimize_time_and_pulse, sweep_point, unique_interior_max,
    LambdaRow, OptimizationResult, SweepRow,
};
use crate::config::{read_pulse_file, ConfigError, ExperimentConfig, ModelConfig, PulseConfig, SampledTheta};
use crate::lambda::{
    closed_form, general_prefactor, gmax, lambda_family, minimal_loss, optimal_time_equal_rates,
    optimal_trajectory, pap_prefactor, potential_theta, protocol_loss, smooth_boundaries, transfer_time,
    weak_coupling_prefactor, Constraint, LambdaError, LambdaParams, LambdaPath, LinearTheta, ThetaProfile, EG0,
    GE0,
};
use crate::master::{propagate_lindblad_sampled, FourierPulse, SimError};
use crate::operator::DensityMatrix;
use crate::path::{ControlPath, LinearPath, SplinePath};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "darkpath", version, about = "Design and verify quasi-adiabatic transfer pulses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form and quadrature results of the least-action analysis.
    Analytic(CommonArgs),
    /// Propagate the master equation for one pulse.
    Simulate(CommonArgs),
    /// Optimize Fourier pulse coefficients.
    Optimize(CommonArgs),
    /// Transfer-time or rate-asymmetry sweep.
    Sweep(CommonArgs),
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Divergent(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Divergent(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Divergent(m) => write!(f, "divergent: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn numeric(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(e.to_string())
}

fn lambda_failure(e: LambdaError) -> Failure {
    match e {
        LambdaError::InvalidParams(_) | LambdaError::Domain(_) => Failure::Config(e.to_string()),
        LambdaError::Divergent { .. } => Failure::Divergent(e.to_string()),
        _ => numeric(e),
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, a) = match &cli.command {
        Command::Analytic(a) => ("analytic", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Optimize(a) => ("optimize", a),
        Command::Sweep(a) => ("sweep", a),
    };
    match execute(name, a) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("darkpath {name}: {e}");
            e.exit_code()
        }
    }
}

fn execute(name: &str, a: &CommonArgs) -> Result<Vec<PathBuf>, Failure> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = a.threads {
        if k == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(numeric)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let out = Outputs::new(&a.out_dir, cfg.output.prefix.as_deref().unwrap_or(name), &cfg);
    pool.install(|| match name {
        "analytic" => cmd_analytic(&cfg, &out),
        "simulate" => cmd_simulate(&cfg, &out),
        "optimize" => cmd_optimize(&cfg, &out),
        _ => cmd_sweep(&cfg, &out),
    })?;
    Ok(out.written.into_inner().unwrap_or_default())
}

/// Output files carrying the tool version and the full input config.
pub struct Outputs {
    dir: PathBuf,
    prefix: String,
    config: Value,
    written: std::sync::Mutex<Vec<PathBuf>>,
}

/// Scientific notation with 13 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub struct CsvOut {
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), Failure> {
        self.w.flush()?;
        Ok(())
    }
}

impl Outputs {
    pub fn new(dir: &Path, prefix: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            dir: dir.to_path_buf(),
            prefix: prefix.to_string(),
            config: serde_json::to_value(cfg).unwrap_or(Value::Null),
            written: Default::default(),
        }
    }

    fn path(&self, suffix: &str) -> PathBuf {
        let p = self.dir.join(format!("{}_{suffix}", self.prefix));
        if let Ok(mut w) = self.written.lock() {
            w.push(p.clone());
        }
        p
    }

    pub fn json(&self, suffix: &str, result: Value) -> Result<(), Failure> {
        let doc = json!({
            "tool": "darkpath",
            "version": VERSION,
            "config": self.config,
            "result": result,
        });
        let mut f = BufWriter::new(File::create(self.path(suffix))?);
        serde_json::to_writer_pretty(&mut f, &doc).map_err(|e| Failure::Io(e.to_string()))?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    /// A CSV whose leading `#` lines record the version and config.
    pub fn csv(&self, suffix: &str, header: &[String]) -> Result<CsvOut, Failure> {
        let mut f = BufWriter::new(File::create(self.path(suffix))?);
        writeln!(f, "# darkpath {VERSION}")?;
        writeln!(f, "# config: {}", self.config)?;
        let mut w = csv::WriterBuilder::new().from_writer(f);
        w.write_record(header)?;
        w.flush()?;
        Ok(CsvOut { w })
    }
}

fn require_lambda(cfg: &ExperimentConfig, what: &str) -> Result<LambdaParams, Failure> {
    cfg.lambda_params()
        .copied()
        .ok_or_else(|| Failure::Config(format!("{what} needs a lambda model")))
}

fn cmd_analytic(cfg: &ExperimentConfig, out: &Outputs) -> Result<(), Failure> {
    let p = require_lambda(cfg, "analytic")?;
    let n = cfg.run.theta_samples;
    let mut csv = out.csv("potential.csv", &["theta".into(), "V".into(), "gmax".into()])?;
    for k in 0..n {
        let th = std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64;
        csv.row(&[fmt_num(th), fmt_num(potential_theta(th, &p)), fmt_num(gmax(th, &p))])?;
    }
    csv.flush()?;

    let df_min = minimal_loss(&p).map_err(lambda_failure)?;
    let (t_opt, divergent) = match transfer_time(0.0, &p) {
        Ok(t) => (Some(t), None),
        Err(LambdaError::Divergent { theta }) => (None, Some(theta)),
        Err(e) => return Err(lambda_failure(e)),
    };
    let (c, c1) = prefactors(&p).map_err(lambda_failure)?;
    let cf = closed_form(&p);
    let cf_match = cf.map(|c| (c.delta_f_min - df_min).abs() <= 1e-8 * df_min.abs().max(f64::MIN_POSITIVE));
    let result = json!({
        "delta_F_min": df_min,
        "t_f_opt": t_opt,
        "divergent": divergent.is_some(),
        "divergent_theta": divergent,
        "c": c,
        "c1": c1,
        "closed_form": cf.map(|c| json!({"limit": format!("{:?}", c.limit), "delta_F_min": c.delta_f_min})),
        "closed_form_match": cf_match,
        "t_f_opt_equal_rates": optimal_time_equal_rates(&p).ok(),
        "outside_validity": p.outside_validity(),
    });
    out.json("summary.json", result)?;
    if let (Some(theta), true) = (divergent, cfg.run.require_optimal_time) {
        return Err(Failure::Divergent(format!("optimal transfer time is infinite (theta = {theta})")));
    }
    Ok(())
}

// (c, c₁): the spread prefactor of the constraint and, for bounded
// couplings, its normalization to the weaker coupling.
fn prefactors(p: &LambdaParams) -> Result<(Option<f64>, Option<f64>), LambdaError> {
    let Some((r1, r2)) = p.ratios() else {
        return Ok((None, None));
    };
    match p.constraint {
        Constraint::Pap { .. } => Ok((Some(pap_prefactor(r1, r2)?), None)),
        Constraint::Bounded { g1_max, g2_max } => {
            let tb = (g1_max / g2_max).atan();
            let c = general_prefactor(r1, r2, tb)?;
            let c1 = if tb <= std::f64::consts::FRAC_PI_4 {
                weak_coupling_prefactor(r1, r2, tb)?
            } else {
                weak_coupling_prefactor(r2, r1, std::f64::consts::FRAC_PI_2 - tb)?
            };
            Ok((Some(c), Some(c1)))
        }
    }
}

fn theta_profile(cfg: &ExperimentConfig, p: &LambdaParams) -> Result<Box<dyn ThetaProfile>, Failure> {
    let need_tf = || {
        cfg.run
            .t_f
            .ok_or_else(|| Failure::Config("run.t_f is required for this pulse".into()))
    };
    Ok(match &cfg.pulse {
        PulseConfig::Linear => Box::new(LinearTheta { t_f: need_tf()? }),
        PulseConfig::Fourier { coeffs } => Box::new(FourierPulse::new(need_tf()?, coeffs.clone())),
        PulseConfig::EnergyOptimal { energy, smoothing } => {
            let sol = optimal_trajectory(*energy, p, 2001).map_err(lambda_failure)?;
            match smoothing {
                Some(dt) => Box::new(smooth_boundaries(sol, *dt).map_err(|e| Failure::Config(e.to_string()))?),
                None => Box::new(sol),
            }
        }
        PulseConfig::File { path } => {
            let (t, rows) = read_pulse_file(path)?;
            if rows[0].len() != 1 {
                return Err(Failure::Config("a lambda pulse file needs columns t, theta".into()));
            }
            Box::new(SampledTheta(SplinePath::new(t, &rows)))
        }
        PulseConfig::Controls { .. } => return Err(Failure::Config("controls pulse needs a generic model".into())),
    })
}

fn sample_times(t_f: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_f * k as f64 / (n - 1) as f64).collect()
}

fn cmd_simulate(cfg: &ExperimentConfig, out: &Outputs) -> Result<(), Failure> {
    let sim = cfg.run.sim;
    match &cfg.model {
        ModelConfig::Lambda { params: p } => {
            let profile = theta_profile(cfg, p)?;
            let fam = lambda_family(p).map_err(lambda_failure)?;
            let path = LambdaPath::new(&*profile, *p);
            let times = sample_times(profile.duration(), cfg.run.n_samples);
            let mut rows = Vec::with_capacity(times.len());
            let report = propagate_lindblad_sampled(
                &fam,
                &path,
                &DensityMatrix::basis(4, EG0),
                Some(GE0),
                &sim,
                &times,
                |t, rho| {
                    let mut r = vec![t, profile.theta(t)];
                    r.extend((0..4).map(|k| rho[(k, k)].re));
                    r.push(rho[(GE0, GE0)].re);
                    rows.push(r);
                },
            )
            .map_err(sim_failure)?;
            let header = ["t", "theta", "p_eg0", "p_ge0", "p_gg1", "p_gg0", "F"];
            write_rows(out, "trajectory.csv", &header, &rows)?;
            let leading = protocol_loss(&*profile, p).ok();
            out.json(
                "summary.json",
                json!({
                    "t_f": profile.duration(),
                    "fidelity": report.fidelity,
                    "loss": report.fidelity.map(|f| 1.0 - f),
                    "leading_order_loss": leading,
                    "delta_F_min": minimal_loss(p).ok(),
                    "trace_drift": report.trace_drift,
                    "hermiticity_drift": report.hermiticity_drift,
                    "min_eigenvalue": report.min_eigenvalue,
                    "n_steps": report.n_steps(),
                }),
            )
        }
        ModelConfig::Generic(g) => {
            let fam = g.family()?;
            let path: Box<dyn ControlPath> = match &cfg.pulse {
                PulseConfig::Controls { start, end } => Box::new(LinearPath {
                    start: start.clone(),
                    end: end.clone(),
                    t_f: cfg
                        .run
                        .t_f
                        .ok_or_else(|| Failure::Config("run.t_f is required for a controls pulse".into()))?,
                }),
                PulseConfig::File { path } => {
                    let (t, rows) = read_pulse_file(path)?;
                    if rows[0].len() != fam.n_controls() {
                        return Err(Failure::Config(format!(
                            "pulse file needs {} control columns",
                            fam.n_controls()
                        )));
                    }
                    Box::new(SplinePath::new(t, &rows))
                }
                _ => return Err(Failure::Config("a generic model needs a controls or file pulse".into())),
            };
            let d = fam.dim();
            let times = sample_times(path.duration(), cfg.run.n_samples);
            let mut rows = Vec::with_capacity(times.len());
            let report = propagate_lindblad_sampled(
                &fam,
                &*path,
                &DensityMatrix::basis(d, g.initial_state),
                g.target_state,
                &sim,
                &times,
                |t, rho| {
                    let mut r = vec![t];
                    r.extend(path.evaluate(t));
                    r.extend((0..d).map(|k| rho[(k, k)].re));
                    if let Some(k) = g.target_state {
                        r.push(rho[(k, k)].re);
                    }
                    rows.push(r);
                },
            )
            .map_err(sim_failure)?;
            let mut header: Vec<String> = vec!["t".into()];
            header.extend((0..fam.n_controls()).map(|j| format!("g{}", j + 1)));
            header.extend((0..d).map(|k| format!("p{k}")));
            if g.target_state.is_some() {
                header.push("F".into());
            }
            let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
            write_rows(out, "trajectory.csv", &hdr, &rows)?;
            out.json(
                "summary.json",
                json!({
                    "t_f": path.duration(),
                    "fidelity": report.fidelity,
                    "trace_drift": report.trace_drift,
                    "hermiticity_drift": report.hermiticity_drift,
                    "min_eigenvalue": report.min_eigenvalue,
                    "n_steps": report.n_steps(),
                }),
            )
        }
    }
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Lambda(l) => lambda_failure(l),
        SimError::StateDimension { .. } | SimError::NotNormalized(_) => Failure::Config(e.to_string()),
        _ => numeric(e),
    }
}

fn write_rows(out: &Outputs, suffix: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), Failure> {
    let mut csv = out.csv(suffix, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    for r in rows {
        csv.row(&r.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>())?;
    }
    csv.flush()
}

fn bench_failure(e: crate::bench::BenchError) -> Failure {
    use crate::bench::BenchError;
    match e {
        BenchError::Lambda(l) => lambda_failure(l),
        BenchError::Sim(s) => sim_failure(s),
        BenchError::Invalid(m) => Failure::Config(m),
        other => numeric(other),
    }
}

fn cmd_optimize(cfg: &ExperimentConfig, out: &Outputs) -> Result<(), Failure> {
    let p = require_lambda(cfg, "optimize")?;
    let opts = cfg.run.optimize_options();
    let ns = cfg.run.n_values.clone().unwrap_or_else(|| vec![cfg.run.n_max]);
    let results: Vec<OptimizationResult> = if cfg.run.optimize_time {
        let mut v: Vec<OptimizationResult> = Vec::new();
        for &n in &ns {
            let r = optimize_time_and_pulse(&p, n, v.last(), &opts).map_err(bench_failure)?;
            v.push(r);
        }
        v
    } else {
        let t_f = cfg
            .run
            .t_f
            .ok_or_else(|| Failure::Config("run.t_f is required unless run.optimize_time is set".into()))?;
        optimize_nested(&p, t_f, &ns, &opts).map_err(bench_failure)?
    };
    let best = results.last().expect("n_values is non-empty");
    let pulse = best.pulse();
    let rows: Vec<Vec<f64>> = sample_times(best.t_f, cfg.run.n_samples)
        .into_iter()
        .map(|t| {
            let (th, thd) = pulse.theta_of_t(t);
            vec![t, th, thd]
        })
        .collect();
    write_rows(out, "pulse.csv", &["t", "theta", "theta_dot"], &rows)?;
    out.json(
        "result.json",
        json!({
            "results": results,
            "delta_F_min": minimal_loss(&p).ok(),
        }),
    )
}

fn cmd_sweep(cfg: &ExperimentConfig, out: &Outputs) -> Result<(), Failure> {
    let p = require_lambda(cfg, "sweep")?;
    let opts = cfg.run.optimize_options();
    let chunk = rayon::current_num_threads().max(1);
    if let Some(grid) = &cfg.run.lambda_grid {
        let lambdas = grid.values()?;
        let n_max = cfg.run.n_max;
        let mut header: Vec<String> = vec!["lambda".into(), "gamma1_r".into(), "gamma2_r".into()];
        header.extend((0..=n_max).map(|n| format!("dF_N{n}")));
        header.extend(["dF_extrap".into(), "dF_extrap_sigma".into(), "dF_bound".into()]);
        let mut csv = out.csv("lambda.csv", &header)?;
        let mut all: Vec<LambdaRow> = Vec::new();
        for block in lambdas.chunks(chunk) {
            let rows: Vec<LambdaRow> = block
                .par_iter()
                .map(|&l| lambda_point(&p, l, n_max, &opts))
                .collect::<Result<_, _>>()
                .map_err(bench_failure)?;
            for r in &rows {
                let mut f = vec![fmt_num(r.lambda), fmt_num(r.gamma1_r), fmt_num(r.gamma2_r)];
                f.extend(r.losses().into_iter().map(fmt_num));
                f.push(fmt_opt(r.extrapolation.as_ref().map(|e| e.delta_f_inf)));
                f.push(fmt_opt(r.extrapolation.as_ref().and_then(|e| e.sigma)));
                f.push(fmt_num(r.bound));
                csv.row(&f)?;
            }
            csv.flush()?;
            all.extend(rows);
        }
        return out.json("lambda.json", json!({ "rows": all }));
    }

    let grid = cfg
        .run
        .t_f_grid
        .as_ref()
        .ok_or_else(|| Failure::Config("sweep needs run.t_f_grid or run.lambda_grid".into()))?
        .values()?;
    let ns = cfg.run.n_values.clone().unwrap_or_else(|| vec![0, 2, 4]);
    let mut header: Vec<String> = vec!["t_f".into()];
    header.extend(ns.iter().map(|n| format!("F_N{n}")));
    header.extend(["F_analytic".into(), "analytic_status".into()]);
    let mut csv = out.csv("tf.csv", &header)?;
    let mut all: Vec<SweepRow> = Vec::new();
    for block in grid.chunks(chunk) {
        let rows: Vec<SweepRow> = block
            .par_iter()
            .map(|&t| sweep_point(&p, t, &ns, &opts))
            .collect::<Result<_, _>>()
            .map_err(bench_failure)?;
        for r in &rows {
            let mut f = vec![fmt_num(r.t_f)];
            f.extend(r.numeric.iter().map(|o| fmt_num(o.fidelity)));
            f.push(fmt_opt(r.analytic));
            f.push(match analytic_fidelity(r.t_f, &p) {
                Ok(_) => "ok".into(),
                Err(e) => e.to_string(),
            });
            csv.row(&f)?;
        }
        csv.flush()?;
        all.extend(rows);
    }
    let peaks: Vec<Value> = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let f: Vec<f64> = all.iter().map(|r| r.numeric[i].fidelity).collect();
            let k = unique_interior_max(&f);
            json!({"n": n, "interior_max": k.is_some(), "t_f_max": k.map(|k| grid[k])})
        })
        .collect();
    let analytic: Vec<f64> = all.iter().map(|r| r.analytic.unwrap_or(f64::NAN)).collect();
    let t_opt = transfer_time(0.0, &p);
    out.json(
        "tf.json",
        json!({
            "rows": all,
            "peaks": peaks,
            "analytic_peak": analytic
                .iter()
                .all(|x| x.is_finite())
                .then(|| unique_interior_max(&analytic).map(|k| grid[k]))
                .flatten(),
            "t_f_opt": t_opt.as_ref().ok(),
            "t_f_opt_error": t_opt.as_ref().err().map(|e| e.to_string()),
            "delta_F_min": minimal_loss(&p).ok(),
        }),
    )
}
