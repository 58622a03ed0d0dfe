//! Command-line front end. Every run writes `run_config.json` next to its
//! outputs; passing that file back through `--config` repeats the run.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytic::{
    self, design_branch, design_cz, design_phase_gate_loops, simulated_controlled_phase, Branch, ControlRatio,
    GateDesign,
};
use crate::dynamics::{basis_averaged_rydberg_population, propagate_sequence, PhysicsParams};
use crate::error::{precondition, Error, Result};
use crate::fidelity::{fidelity_report, FidelityReport};
use crate::io;
use crate::optimizer::{
    evaluate_shifted, evaluate_waveform, fidelity_scan, robust_optimize, symmetric_grid, time_optimal_search,
    weighted_average_error, NoiseModel, OperatingPoint, OptimizerConfig, PhaseWaveform, RobustParameter, RobustSpec,
};

#[derive(Parser, Debug)]
#[command(name = "rydberg-cz", version, about = "Design, simulate and optimize asymmetric Rydberg CZ gates (V = 1 units)")]
pub struct Cli {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON run config, as written to `run_config.json` by a previous run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `V/2π` in MHz; only used to print durations in µs.
    #[arg(long, global = true)]
    pub mhz: Option<f64>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Analytic gate design: CZ, controlled-θ, or a detuning branch.
    Design(DesignArgs),
    /// Scattering error and duration versus control ratio p.
    SweepError(SweepArgs),
    /// Detuning branches and gate phases versus Ω/V.
    Branches(BranchArgs),
    /// Time-optimal or robust phase waveform.
    Optimize(OptimizeArgs),
    /// Gaussian-averaged error of robust pulses versus duration.
    AverageError(AverageArgs),
    /// Propagate a pulse-sequence file and report its fidelity.
    Simulate(SimulateArgs),
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mhz: Option<f64>,
    #[serde(flatten)]
    pub command: Command,
}

/// Angles as numbers or multiples of π: `pi`, `-pi/2`, `3pi/4`, `0.7`.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim().to_ascii_lowercase().replace(['*', ' '], "").replace('π', "pi");
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?),
        None => (s.clone(), 1.0),
    };
    let value = match num.strip_suffix("pi") {
        Some("") | Some("+") => PI,
        Some("-") => -PI,
        Some(c) => c.parse::<f64>().map_err(|e| format!("{s:?}: {e}"))? * PI,
        None => num.parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?,
    };
    Ok(value / den)
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignArgs {
    /// Controlled phase, e.g. `pi` or `pi/2`.
    #[arg(long, value_parser = parse_angle)]
    pub theta: Option<f64>,
    #[arg(long = "V", default_value_t = 1.0)]
    #[serde(rename = "V")]
    pub v: f64,
    /// Control ratio Ω_c/Ω, or `inf` for instantaneous control pulses.
    #[arg(long, default_value = "1")]
    pub p: ControlRatio,
    /// Target loops for the controlled-nθ design.
    #[arg(long, default_value_t = 1)]
    pub loops: u32,
    #[arg(long)]
    pub n0: Option<u32>,
    #[arg(long = "nV")]
    #[serde(rename = "nV")]
    pub n_v: Option<u32>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// `+` or `-`.
    #[arg(long, allow_hyphen_values = true)]
    pub branch: Option<Branch>,
    /// Vτ at which to quote the scattering error.
    #[arg(long)]
    pub vtau: Option<f64>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Control ratios; 25 log-spaced points on [1, 100] if omitted.
    #[arg(long = "p-grid", value_delimiter = ',')]
    pub p_grid: Vec<f64>,
    #[arg(long, default_value_t = 1e5)]
    pub vtau: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchArgs {
    #[arg(long, default_value_t = 2)]
    pub n0: u32,
    #[arg(long = "nV", default_value_t = 1)]
    #[serde(rename = "nV")]
    pub n_v: u32,
    #[arg(long = "V", default_value_t = 1.0)]
    #[serde(rename = "V")]
    pub v: f64,
    #[arg(long, default_value_t = 0.005)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizeMode {
    Time,
    RobustRabi,
    RobustV,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[arg(long, value_enum)]
    pub mode: OptimizeMode,
    #[arg(long = "V", default_value_t = 1.0)]
    #[serde(rename = "V")]
    pub v: f64,
    /// Target Rabi frequency; `√3V/2` if omitted.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Constant detuning under the phase modulation; `V/2` if omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Robust pulse duration in units of `2π/V`; 2 (Rabi) or 1.5 (V) if omitted.
    #[arg(long)]
    pub duration_factor: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 3000)]
    pub max_iter: usize,
    #[arg(long)]
    pub smoothness: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub target: f64,
    #[arg(long, default_value_t = 41)]
    pub scan_points: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageArgs {
    /// Evaluate this waveform instead of optimizing one per duration.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
    /// Durations in units of `2π/V`; 1 is the flat analytic pulse.
    #[arg(long, value_delimiter = ',', default_value = "1,1.25,1.5,2,2.5,3")]
    pub durations: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2.0 * PI * 150.0)]
    pub omega_over_gamma: f64,
    #[arg(long = "N", default_value_t = 128)]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub smoothness: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Pulse-sequence JSON.
    #[arg(long)]
    pub sequence: PathBuf,
    #[arg(long = "V", default_value_t = 1.0)]
    #[serde(rename = "V")]
    pub v: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, value_parser = parse_angle, default_value = "pi", allow_hyphen_values = true)]
    pub theta: f64,
}

/// Exit status for an error: 2 for bad input, 3 for non-convergence.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Precondition(_) | Error::NonFinite | Error::Json(_) => 2,
        Error::NotConverged { .. } => 3,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

/// Parse arguments, merge with `--config`, and run.
pub fn run_from_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            return precondition(e.to_string().trim_end().to_string());
        }
        Err(e) => {
            print!("{e}");
            return Ok(());
        }
    };
    let base = match &cli.config {
        Some(path) => Some(io::read_json::<RunConfig>(path)?),
        None => None,
    };
    let command = match (cli.command, &base) {
        (Some(c), _) => c,
        (None, Some(b)) => b.command.clone(),
        (None, None) => return precondition("a subcommand or --config is required"),
    };
    let config = RunConfig {
        seed: cli.seed.or(base.as_ref().map(|b| b.seed)).unwrap_or(0),
        out: cli.out.or(base.as_ref().map(|b| b.out.clone())).unwrap_or_else(|| PathBuf::from("out")),
        threads: cli.threads.or(base.as_ref().and_then(|b| b.threads)),
        mhz: cli.mhz.or(base.as_ref().and_then(|b| b.mhz)),
        command,
    };
    run(&config)
}

pub fn run(config: &RunConfig) -> Result<()> {
    if let Some(n) = config.threads {
        if n == 0 {
            return precondition("--threads must be positive");
        }
        // the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    std::fs::create_dir_all(&config.out)?;
    io::write_json(&config.out.join("run_config.json"), config)?;
    let out = config.out.as_path();
    match &config.command {
        Command::Design(a) => cmd_design(a, out, config.mhz).map(|_| ()),
        Command::SweepError(a) => cmd_sweep_error(a, out).map(|_| ()),
        Command::Branches(a) => cmd_branches(a, out).map(|_| ()),
        Command::Optimize(a) => cmd_optimize(a, config.seed, out).map(|_| ()),
        Command::AverageError(a) => cmd_average_error(a, config.seed, out).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(a, out).map(|_| ()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignSummary {
    pub units: io::Units,
    pub design: GateDesign,
    pub phi: f64,
    pub phi_v: f64,
    /// `φ - φ_V` from the closed form, wrapped.
    pub theta: f64,
    pub on_manifold: bool,
    pub gate_duration: f64,
    /// Controlled phase of the simulated lossless gate.
    pub simulated_theta: f64,
    #[serde(serialize_with = "crate::fidelity::serialize_sci")]
    pub simulated_infidelity: f64,
    /// Basis-averaged integrated Rydberg population, equal to `ε·Vτ`.
    pub error_vtau: f64,
    pub ratio_to_ddp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

pub fn cmd_design(a: &DesignArgs, out: &Path, mhz: Option<f64>) -> Result<DesignSummary> {
    let design = match (a.n0, a.n_v) {
        (Some(n0), Some(n_v)) => {
            let (Some(omega), Some(branch)) = (a.omega, a.branch) else {
                return precondition("branch designs need --omega and --branch");
            };
            design_branch(n0, n_v, omega, a.v, branch)?.with_control_ratio(a.p)?
        }
        (None, None) => match a.theta {
            None if a.loops == 1 => design_cz(a.v, a.p)?,
            theta => design_phase_gate_loops(theta.unwrap_or(PI), a.v, a.loops)?.with_control_ratio(a.p)?,
        },
        _ => return precondition("--n0 and --nV must be given together"),
    };
    let est = analytic::target_pulse_phases(design.omega, design.delta, design.v, design.t_target);
    let seq = design.sequence();
    let lossless = design.params(0.0)?;
    let u = propagate_sequence(&seq, &lossless)?;
    let report = fidelity_report(&u, design.theta);
    let pr = basis_averaged_rydberg_population(&seq, &lossless)?;
    let error_vtau = pr * design.v;
    let ddp_vtau = 1.0 + PI / 2.0;
    let summary = DesignSummary {
        units: io::Units { v_over_2pi_mhz: mhz, ..Default::default() },
        phi: est.phases.phi,
        phi_v: est.phases.phi_v,
        theta: crate::fidelity::wrap_angle(est.phases.gate_phase()),
        on_manifold: est.on_manifold,
        gate_duration: design.gate_duration(),
        simulated_theta: simulated_controlled_phase(&design)?,
        simulated_infidelity: report.infidelity,
        error_vtau,
        ratio_to_ddp: error_vtau / ddp_vtau,
        error: a.vtau.map(|vt| error_vtau / vt),
        design,
    };
    io::write_json(&out.join("design.json"), &summary)?;
    io::write_sequence(&out.join("sequence.json"), &seq)?;

    let d = &summary.design;
    println!("Omega = {:.6}  Delta = {:.6}  t_target = {:.6}  (n0, nV) = ({}, {})", d.omega, d.delta, d.t_target, d.n0, d.n_v);
    println!(
        "phi = {:.6}  phi_V = {:.6}  theta = {:.6}  simulated theta = {:.6}",
        summary.phi, summary.phi_v, summary.theta, summary.simulated_theta
    );
    match mhz {
        Some(f) => println!("t_gate = {:.6} /V = {:.6} us", summary.gate_duration, summary.gate_duration / (2.0 * PI * f)),
        None => println!("t_gate = {:.6} /V", summary.gate_duration),
    }
    print!("eps*Vtau = {:.4}  (x{:.3} of the lifetime bound)", summary.error_vtau, summary.ratio_to_ddp);
    match summary.error {
        Some(e) => println!("  eps = {e:.4e}"),
        None => println!(),
    }
    Ok(summary)
}

pub fn cmd_sweep_error(a: &SweepArgs, out: &Path) -> Result<Vec<analytic::ErrorCurvePoint>> {
    let grid = if a.p_grid.is_empty() {
        (0..25).map(|k| 10f64.powf(2.0 * k as f64 / 24.0)).collect()
    } else {
        a.p_grid.clone()
    };
    let rows = analytic::error_curve(&grid, a.vtau)?;
    let ddp_vtau = 1.0 + PI / 2.0;
    io::write_table(
        &out.join("sweep_error.csv"),
        &["p", "error_vtau", "simulated_error_vtau", "t_gate_v_over_2pi", "ratio_to_ddp", "ddp_vtau", "mto_vtau"],
        rows.iter().map(|r| {
            vec![
                Some(r.p),
                Some(r.formula_error_vtau),
                Some(r.simulated_error_vtau),
                Some(r.duration_v_over_2pi),
                Some(r.ratio_to_ddp),
                Some(ddp_vtau),
                Some(analytic::MTO_ERROR_RATIO * ddp_vtau),
            ]
        }),
    )?;
    let limit = analytic::scattering_error(ControlRatio::Instant, 1.0, 1.0)?;
    println!("{} rows; p -> inf: eps*Vtau = {:.4} (x{:.3} of the bound)", rows.len(), limit, limit / ddp_vtau);
    Ok(rows)
}

pub fn cmd_branches(a: &BranchArgs, out: &Path) -> Result<Vec<analytic::BranchCurvePoint>> {
    if a.points < 2 || !(a.omega_min > 0.0 && a.omega_max > a.omega_min) {
        return precondition("need at least 2 points on 0 < omega_min < omega_max");
    }
    let grid: Vec<f64> = (0..a.points)
        .map(|k| a.v * (a.omega_min + (a.omega_max - a.omega_min) * k as f64 / (a.points - 1) as f64))
        .collect();
    let rows = analytic::branch_curve(a.n0, a.n_v, &grid, a.v)?;
    io::write_table(
        &out.join("branches.csv"),
        &["omega_over_v", "delta_plus_over_v", "delta_minus_over_v", "theta_plus", "theta_minus", "residual"],
        rows.iter().map(|r| vec![Some(r.omega_over_v), r.delta_plus, r.delta_minus, r.theta_plus, r.theta_minus, r.residual]),
    )?;
    let real = rows.iter().filter(|r| r.delta_plus.is_some()).count();
    println!("{} of {} grid points have real branches", real, rows.len());
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeSummary {
    pub units: io::Units,
    pub mode: OptimizeMode,
    pub duration: f64,
    /// Duration in units of `2π/V`.
    pub duration_over_topt: f64,
    pub duration_times_omega: f64,
    #[serde(serialize_with = "crate::fidelity::serialize_sci")]
    pub infidelity: f64,
    pub max_detuning_over_omega: f64,
    pub detuning_proxy_over_omega: f64,
    /// Flat-pulse over optimized infidelity at `∓5%`, robust modes only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_improvement: Option<[f64; 2]>,
    pub restart: usize,
}

pub fn cmd_optimize(a: &OptimizeArgs, seed: u64, out: &Path) -> Result<OptimizeSummary> {
    let omega = a.omega.unwrap_or(3f64.sqrt() / 2.0 * a.v);
    let op = OperatingPoint::with_detuning(omega, a.v, a.delta.unwrap_or(a.v / 2.0))?;
    let base = match a.mode {
        OptimizeMode::Time => OptimizerConfig::default(),
        _ => OptimizerConfig::robust(),
    };
    let config = OptimizerConfig {
        n: a.n.unwrap_or(base.n),
        restarts: a.restarts,
        max_iter: a.max_iter,
        target_infidelity: a.target,
        seed,
        smoothness: a.smoothness.unwrap_or(base.smoothness),
        ..base
    };
    let t_opt = op.analytic_duration();
    let (result, parameter) = match a.mode {
        OptimizeMode::Time => {
            let r = time_optimal_search(&op, &config)?;
            io::write_json(&out.join("probes.json"), &r.probes)?;
            (r.result, RobustParameter::Rabi)
        }
        OptimizeMode::RobustRabi | OptimizeMode::RobustV => {
            let (parameter, factor) = match a.mode {
                OptimizeMode::RobustRabi => (RobustParameter::Rabi, 2.0),
                _ => (RobustParameter::Interaction, 1.5),
            };
            let duration = a.duration_factor.unwrap_or(factor) * t_opt;
            (robust_optimize(&op, duration, &RobustSpec::new(parameter), &config)?, parameter)
        }
    };
    let w = &result.waveform;
    io::write_waveform(&out.join("waveform.json"), w)?;
    io::write_log(&out.join("log.csv"), &result.log)?;
    let grid = symmetric_grid(0.1, a.scan_points);
    io::write_scan(&out.join("scan.csv"), &fidelity_scan(w, parameter, &grid, 0.0)?)?;
    let flat = PhaseWaveform::flat(op, 1, t_opt)?;
    io::write_scan(&out.join("flat_scan.csv"), &fidelity_scan(&flat, parameter, &grid, 0.0)?)?;

    let edge_improvement = match a.mode {
        OptimizeMode::Time => None,
        _ => {
            let ratio = |x: f64| -> Result<f64> {
                Ok(evaluate_shifted(&flat, parameter, x, 0.0)?.infidelity / evaluate_shifted(w, parameter, x, 0.0)?.infidelity)
            };
            Some([ratio(-0.05)?, ratio(0.05)?])
        }
    };
    let summary = OptimizeSummary {
        units: io::Units::default(),
        mode: a.mode,
        duration: w.duration,
        duration_over_topt: w.duration / t_opt,
        duration_times_omega: w.duration * op.omega,
        infidelity: evaluate_waveform(w, 0.0)?.infidelity,
        max_detuning_over_omega: w.max_detuning() / op.omega,
        detuning_proxy_over_omega: w.detuning_proxy_max() / op.omega,
        edge_improvement,
        restart: result.restart,
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    println!(
        "duration = {:.6} /V = {:.6} /Omega  infidelity = {:.3e}  |Delta|max = {:.3} Omega (proxy {:.3})",
        summary.duration, summary.duration_times_omega, summary.infidelity, summary.max_detuning_over_omega,
        summary.detuning_proxy_over_omega
    );
    if let Some([lo, hi]) = edge_improvement {
        println!("improvement over the flat pulse at -5% / +5%: {lo:.2}x / {hi:.2}x");
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AverageRow {
    pub t_over_topt: f64,
    pub nominal_infidelity: f64,
    pub no_decay: f64,
    pub decay: f64,
    /// Decay-free average with the 31-node rule.
    pub no_decay_reference: f64,
}

pub fn cmd_average_error(a: &AverageArgs, seed: u64, out: &Path) -> Result<Vec<AverageRow>> {
    let op = OperatingPoint::analytic(1.0)?;
    if !(a.omega_over_gamma > 0.0) {
        return precondition("omega_over_gamma must be positive");
    }
    let gamma = op.omega / a.omega_over_gamma;
    let noise = NoiseModel::new(a.sigma)?;
    let t_opt = op.analytic_duration();
    let row = |w: &PhaseWaveform| -> Result<AverageRow> {
        let free = weighted_average_error(w, &noise, 0.0)?;
        let lossy = weighted_average_error(w, &noise, gamma)?;
        Ok(AverageRow {
            t_over_topt: w.duration / t_opt,
            nominal_infidelity: evaluate_waveform(w, 0.0)?.infidelity,
            no_decay: free.infidelity,
            decay: lossy.infidelity,
            no_decay_reference: free.reference,
        })
    };
    let flat = row(&PhaseWaveform::flat(op, 1, t_opt)?)?;
    let mut rows = Vec::new();
    match &a.waveform {
        Some(path) => rows.push(row(&io::read_waveform(path)?)?),
        None => {
            let config = OptimizerConfig { n: a.n, restarts: a.restarts, seed, smoothness: a.smoothness, ..OptimizerConfig::robust() };
            let spec = RobustSpec::new(RobustParameter::Rabi);
            for &m in &a.durations {
                if !(m >= 1.0) {
                    return precondition(format!("durations must be at least the analytic duration, got {m}"));
                }
                if m == 1.0 {
                    rows.push(flat);
                    continue;
                }
                let r = robust_optimize(&op, m * t_opt, &spec, &config)?;
                io::write_waveform(&out.join(format!("waveform_{m:.2}.json")), &r.waveform)?;
                rows.push(row(&r.waveform)?);
            }
        }
    }
    io::write_table(
        &out.join("average_error.csv"),
        &[
            "t_over_topt",
            "nominal_infidelity",
            "avg_error_no_decay",
            "avg_error_decay",
            "avg_error_no_decay_31",
            "flat_avg_error_no_decay",
            "flat_avg_error_decay",
        ],
        rows.iter().map(|r| {
            vec![
                Some(r.t_over_topt),
                Some(r.nominal_infidelity),
                Some(r.no_decay),
                Some(r.decay),
                Some(r.no_decay_reference),
                Some(flat.no_decay),
                Some(flat.decay),
            ]
        }),
    )?;
    for r in &rows {
        println!("t/t_opt = {:.3}: 1-F = {:.4e} (no decay), {:.4e} (decay)", r.t_over_topt, r.no_decay, r.decay);
    }
    Ok(rows)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &Path) -> Result<FidelityReport> {
    let seq = io::read_sequence(&a.sequence)?;
    let params = PhysicsParams::new(a.v, a.gamma)?;
    let u = propagate_sequence(&seq, &params)?;
    let mut report = fidelity_report(&u, a.theta);
    if a.gamma == 0.0 {
        report.rydberg_time = Some(basis_averaged_rydberg_population(&seq, &params)?);
    }
    io::write_json(&out.join("report.json"), &report)?;
    println!(
        "F* = {:.12}  1-F* = {:.3e}  raw F = {:.6}  alpha = {:.6}  beta = {:.6}  residual = {:.3e}",
        report.corrected_fidelity, report.infidelity, report.raw_fidelity, report.alpha, report.beta, report.residual
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert!((parse_angle("3pi/4").unwrap() - 0.75 * PI).abs() < 1e-15);
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig {
            seed: 7,
            out: "x".into(),
            threads: None,
            mhz: None,
            command: Command::Branches(BranchArgs { n0: 2, n_v: 1, v: 1.0, omega_min: 0.1, omega_max: 1.0, points: 3 }),
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"command\":\"branches\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }
}
