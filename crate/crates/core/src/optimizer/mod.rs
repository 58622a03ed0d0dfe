//! GRAPE optimization of the target-pulse laser phase.
//!
//! Optimization runs on the block-reduced model without decay; every
//! reported figure of merit ([`evaluate_waveform`], [`fidelity_scan`],
//! [`weighted_average_error`]) is recomputed with the full 9-level
//! propagator, with decay when requested.

mod grape;
mod lbfgs;
mod waveform;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhysicsParams;
use crate::error::{precondition, Error, Result};
use crate::fidelity::{evaluate_sequence, FidelityReport};
use crate::quadrature::GaussHermite;

use grape::Perturbation;
pub use waveform::{OperatingPoint, PhaseWaveform};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Segment count.
    #[serde(rename = "N")]
    pub n: usize,
    /// Random initializations on top of the flat (and warm-start) ones.
    pub restarts: usize,
    pub max_iter: usize,
    /// Gradient-norm floor below which a restart stops.
    pub grad_tol: f64,
    pub target_infidelity: f64,
    pub seed: u64,
    /// Weight of the mean-square modulation detuning `⟨(dξ/dt)²⟩/Ω²` added
    /// to the objective. Zero disables it.
    pub smoothness: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { n: 64, restarts: 20, max_iter: 3000, grad_tol: 1e-14, target_infidelity: 1e-8, seed: 0, smoothness: 0.0 }
    }
}

impl OptimizerConfig {
    /// Defaults for robust pulses: more segments and a smoothness weight
    /// that keeps the instantaneous detuning near `2Ω`.
    pub fn robust() -> Self {
        Self { n: 128, smoothness: 1e-3, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.max_iter == 0 {
            return precondition("segment count and iteration limit must be positive");
        }
        if !(self.smoothness >= 0.0 && self.smoothness.is_finite()) {
            return precondition("smoothness weight must be non-negative");
        }
        if !(self.target_infidelity > 0.0) {
            return precondition("target infidelity must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustParameter {
    /// Target Rabi frequency `Ω`.
    Rabi,
    /// Interaction `V`.
    Interaction,
}

/// Weighted sum `w0 F(q) + w1 F((1-s)q) + w2 F((1+s)q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustSpec {
    pub parameter: RobustParameter,
    pub spread: f64,
    pub weights: [f64; 3],
}

impl RobustSpec {
    pub fn new(parameter: RobustParameter) -> Self {
        Self { parameter, spread: 0.05, weights: [2.0, 1.0, 1.0] }
    }

    /// `(fractional shift, weight)` triples.
    pub fn points(&self) -> [(f64, f64); 3] {
        [(0.0, self.weights[0]), (-self.spread, self.weights[1]), (self.spread, self.weights[2])]
    }

    fn validate(&self) -> Result<()> {
        if !(self.spread > 0.0 && self.spread < 1.0) {
            return precondition(format!("robust spread must lie in (0, 1), got {}", self.spread));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || self.weights.iter().sum::<f64>() <= 0.0 {
            return precondition("robust weights must be non-negative and not all zero");
        }
        Ok(())
    }
}

/// Gaussian fluctuation of `Ω` with fractional standard deviation `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 0.2) {
            return precondition(format!("noise σ must lie in (0, 0.2), got {sigma}"));
        }
        Ok(Self { sigma })
    }
}

/// Quantity minimized by the optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// `1 - F*` at the operating point.
    Nominal,
    /// Weighted mean of `1 - F*` at the shifted operating points.
    Robust(RobustSpec),
}

/// Objective value on the block model, without decay.
pub fn objective_value(w: &PhaseWaveform, objective: &Objective) -> f64 {
    grape::objective(&w.operating_point(), &w.xi, w.duration, objective, None)
}

/// Exact derivative of [`objective_value`] with respect to each phase.
pub fn grape_gradient(w: &PhaseWaveform, objective: &Objective) -> Vec<f64> {
    let mut g = vec![0.0; w.n];
    grape::objective(&w.operating_point(), &w.xi, w.duration, objective, Some(&mut g));
    g
}

/// Full-model fidelity to CZ at the waveform's operating point.
pub fn evaluate_waveform(w: &PhaseWaveform, gamma: f64) -> Result<FidelityReport> {
    evaluate_shifted(w, RobustParameter::Rabi, 0.0, gamma)
}

/// Full-model fidelity with `Ω` or `V` scaled by `1 + frac`.
pub fn evaluate_shifted(w: &PhaseWaveform, parameter: RobustParameter, frac: f64, gamma: f64) -> Result<FidelityReport> {
    w.validate()?;
    let pert = Perturbation::along(parameter, frac);
    let params = PhysicsParams::new(w.v * pert.v_scale, gamma)?;
    evaluate_sequence(&w.sequence_with(w.omega * pert.omega_scale), &params, PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    TargetReached,
    GradientTolerance,
    Stalled,
    MaxIterations,
}

impl From<lbfgs::Status> for ConvergenceStatus {
    fn from(s: lbfgs::Status) -> Self {
        match s {
            lbfgs::Status::TargetReached => Self::TargetReached,
            lbfgs::Status::GradientTol => Self::GradientTolerance,
            lbfgs::Status::Stalled => Self::Stalled,
            lbfgs::Status::MaxIter => Self::MaxIterations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub waveform: PhaseWaveform,
    /// Final objective on the block model, smoothness penalty included.
    pub objective: f64,
    /// Nominal `1 - F*` on the block model.
    pub infidelity: f64,
    pub status: ConvergenceStatus,
    /// Index of the winning initialization.
    pub restart: usize,
    pub log: Vec<LogEntry>,
}

impl OptimizationResult {
    pub fn converged(&self, target: f64) -> bool {
        self.infidelity <= target
    }
}

const CHUNK: usize = 8;

fn initial_phases(index: usize, n: usize, warm: Option<&[f64]>, smooth: bool, seed: u64) -> Vec<f64> {
    let warm_slots = usize::from(warm.is_some());
    if index == 0 {
        return vec![0.0; n];
    }
    if let (1, Some(w)) = (index, warm) {
        return w.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((index - 1 - warm_slots) as u64));
    if smooth {
        // a few low Fourier modes keep the waveform free of phase jumps
        let modes: Vec<(f64, f64)> =
            (1..=4).map(|m| (rng.random_range(-2.0..2.0) / m as f64, rng.random_range(0.0..2.0 * PI))).collect();
        (0..n)
            .map(|k| {
                let s = (k as f64 + 0.5) / n as f64;
                modes.iter().enumerate().map(|(m, (a, ph))| a * (2.0 * PI * (m + 1) as f64 * s + ph).sin()).sum()
            })
            .collect()
    } else {
        (0..n).map(|_| rng.random_range(-PI..PI)).collect()
    }
}

fn run_restart(
    op: &OperatingPoint,
    duration: f64,
    config: &OptimizerConfig,
    objective: &Objective,
    x0: Vec<f64>,
) -> lbfgs::Outcome {
    let target = match objective {
        Objective::Nominal => config.target_infidelity * 0.1,
        Objective::Robust(_) => 0.0,
    };
    let opts = lbfgs::Options {
        max_iter: config.max_iter,
        memory: 10,
        grad_tol: config.grad_tol,
        target,
        stall_window: 100,
        stall_rel: 1e-4,
    };
    lbfgs::minimize(
        |x| {
            let mut g = vec![0.0; x.len()];
            let mut f = grape::objective(op, x, duration, objective, Some(&mut g));
            if config.smoothness > 0.0 {
                f += grape::modulation_penalty(x, duration, op.omega, config.smoothness, Some(&mut g));
            }
            (f, g)
        },
        x0,
        &opts,
    )
}

/// Multi-start L-BFGS from the flat waveform, an optional warm start and
/// `config.restarts` random initializations. Restarts run in parallel in
/// fixed chunks; the result does not depend on the thread count.
///
/// For the nominal objective the lowest-index restart reaching the target
/// wins and [`Error::NotConverged`] is returned if none does; for robust
/// objectives the lowest objective wins.
pub fn optimize(
    op: &OperatingPoint,
    duration: f64,
    config: &OptimizerConfig,
    objective: &Objective,
) -> Result<OptimizationResult> {
    let best = optimize_from(op, duration, config, objective, None)?;
    if matches!(objective, Objective::Nominal) && !best.converged(config.target_infidelity) {
        return Err(Error::NotConverged { target: config.target_infidelity, best: best.infidelity });
    }
    Ok(best)
}

/// As [`optimize`], seeding restart 1 with `warm` and reporting the best
/// attempt even when the target is missed.
pub fn optimize_from(
    op: &OperatingPoint,
    duration: f64,
    config: &OptimizerConfig,
    objective: &Objective,
    warm: Option<&[f64]>,
) -> Result<OptimizationResult> {
    config.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return precondition(format!("duration must be positive, got {duration}"));
    }
    if let Objective::Robust(spec) = objective {
        spec.validate()?;
    }
    let warm = warm.filter(|w| w.len() == config.n);
    let smooth = matches!(objective, Objective::Robust(_));
    let total = 1 + usize::from(warm.is_some()) + config.restarts;

    let mut best: Option<(usize, lbfgs::Outcome)> = None;
    let indices: Vec<usize> = (0..total).collect();
    for chunk in indices.chunks(CHUNK) {
        let outcomes: Vec<lbfgs::Outcome> = chunk
            .par_iter()
            .map(|&i| run_restart(op, duration, config, objective, initial_phases(i, config.n, warm, smooth, config.seed)))
            .collect();
        for (&i, out) in chunk.iter().zip(outcomes) {
            if best.as_ref().is_none_or(|(_, b)| out.f < b.f) {
                best = Some((i, out));
            }
        }
        if let (Objective::Nominal, Some((_, b))) = (objective, &best) {
            if b.f <= config.target_infidelity {
                break;
            }
        }
    }
    let (restart, out) = best.expect("at least one restart");
    let waveform = PhaseWaveform::new(*op, duration, out.x)?;
    let infidelity = grape::infidelity(op, &waveform.xi, duration, Perturbation::NONE, 0.0, None);
    Ok(OptimizationResult {
        objective: out.f,
        infidelity,
        status: out.status.into(),
        restart,
        log: out.log.into_iter().map(|(iter, objective, grad_norm)| LogEntry { iter, objective, grad_norm }).collect(),
        waveform,
    })
}

/// One feasibility probe of the duration search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationProbe {
    pub duration: f64,
    pub infidelity: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeOptimalResult {
    pub duration: f64,
    pub result: OptimizationResult,
    pub probes: Vec<DurationProbe>,
}

/// Default bracket `[π/V, 4(2π/Ω + 2π/V)]`.
pub fn default_bracket(op: &OperatingPoint) -> (f64, f64) {
    (PI / op.v, 4.0 * (2.0 * PI / op.omega + 2.0 * PI / op.v))
}

/// Shortest duration at which the target infidelity is reached, by
/// bisection on the default bracket to relative resolution `1e-3`.
pub fn time_optimal_search(op: &OperatingPoint, config: &OptimizerConfig) -> Result<TimeOptimalResult> {
    let (lo, hi) = default_bracket(op);
    time_optimal_search_in(op, config, lo, hi, 1e-3)
}

pub fn time_optimal_search_in(
    op: &OperatingPoint,
    config: &OptimizerConfig,
    mut lo: f64,
    mut hi: f64,
    resolution: f64,
) -> Result<TimeOptimalResult> {
    if !(lo > 0.0 && hi > lo && resolution > 0.0) {
        return precondition(format!("invalid duration bracket [{lo}, {hi}]"));
    }
    let mut probes = Vec::new();
    let probe = |d: f64, warm: Option<&[f64]>, probes: &mut Vec<DurationProbe>| -> Result<OptimizationResult> {
        let r = optimize_from(op, d, config, &Objective::Nominal, warm)?;
        probes.push(DurationProbe { duration: d, infidelity: r.infidelity, feasible: r.converged(config.target_infidelity) });
        Ok(r)
    };

    let mut best = probe(hi, None, &mut probes)?;
    if !best.converged(config.target_infidelity) {
        return Err(Error::NotConverged { target: config.target_infidelity, best: best.infidelity });
    }
    let at_lo = probe(lo, Some(&best.waveform.xi), &mut probes)?;
    if at_lo.converged(config.target_infidelity) {
        return Ok(TimeOptimalResult { duration: lo, result: at_lo, probes });
    }
    while hi - lo > resolution * hi {
        let mid = 0.5 * (lo + hi);
        let r = probe(mid, Some(&best.waveform.xi), &mut probes)?;
        if r.converged(config.target_infidelity) {
            hi = mid;
            best = r;
        } else {
            lo = mid;
        }
    }
    Ok(TimeOptimalResult { duration: hi, result: best, probes })
}

/// Waveform maximizing the weighted fidelity sum of `spec` at `duration`,
/// which should not be shorter than the nominal time-optimal duration.
pub fn robust_optimize(
    op: &OperatingPoint,
    duration: f64,
    spec: &RobustSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize_from(op, duration, config, &Objective::Robust(*spec), None)
}

/// Gaussian-averaged infidelity with the reference rule used to check it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageError {
    pub infidelity: f64,
    /// Same average with twice as many nodes plus one.
    pub reference: f64,
    pub nodes: usize,
}

impl AverageError {
    pub fn relative_change(&self) -> f64 {
        (self.infidelity - self.reference).abs() / self.reference.abs().max(f64::MIN_POSITIVE)
    }
}

/// `1 - F̄ = ∫ p(δ) (1 - F*(Ω(1+δ))) dδ` for Gaussian `δ`, by Gauss–Hermite
/// quadrature with 15 nodes, checked against 31.
pub fn weighted_average_error(w: &PhaseWaveform, noise: &NoiseModel, gamma: f64) -> Result<AverageError> {
    let average = |n: usize| -> Result<f64> {
        let rule = GaussHermite::new(n)?;
        let terms: Result<Vec<f64>> = rule
            .normal_points(noise.sigma)
            .par_iter()
            .map(|&(x, p)| Ok(p * evaluate_shifted(w, RobustParameter::Rabi, x, gamma)?.infidelity))
            .collect();
        Ok(terms?.iter().sum())
    };
    Ok(AverageError { infidelity: average(15)?, reference: average(31)?, nodes: 15 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub param_frac_error: f64,
    pub infidelity: f64,
}

/// `1 - F*` over fractional shifts of `Ω` or `V`, all within ±10%.
pub fn fidelity_scan(w: &PhaseWaveform, parameter: RobustParameter, grid: &[f64], gamma: f64) -> Result<Vec<ScanPoint>> {
    if let Some(x) = grid.iter().find(|x| !(x.abs() <= 0.1 + 1e-12)) {
        return precondition(format!("scan points must lie within ±10%, got {x}"));
    }
    grid.par_iter()
        .map(|&x| {
            Ok(ScanPoint { param_frac_error: x, infidelity: evaluate_shifted(w, parameter, x, gamma)?.infidelity })
        })
        .collect()
}

/// `count` evenly spaced points on `[-extent, extent]`.
pub fn symmetric_grid(extent: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..count).map(|k| -extent + 2.0 * extent * k as f64 / (count - 1) as f64).collect(),
    }
}
