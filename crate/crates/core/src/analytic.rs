//! Closed-form designs for the asymmetric π–2π–π gate and its
//! controlled-phase generalizations, with the matching error and duration
//! formulas.
//!
//! Every design drives the control with a resonant π pulse, the target with a
//! detuned pulse that closes an integer number of loops on both the
//! unblocked (`Δ`) and blocked (`Δ - V`) branches, and then un-excites the
//! control. The controlled phase of the resulting gate is `φ - φ_V`, where
//! `e^{-iφ}` and `e^{-iφ_V}` are the target amplitude factors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_sequence, InstantPulse, PhysicsParams, PulseSegment, PulseSequence,
};
use crate::error::{precondition, Result};
use crate::fidelity::{
    computational_block, controlled_phase_of, fidelity_report, optimize_local_phases, wrap_angle,
    controlled_phase,
};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Ratio `p = Ω_c / Ω` of control to target Rabi frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RatioRepr", into = "RatioRepr")]
pub enum ControlRatio {
    Finite(f64),
    /// `p → ∞`: control π pulses are instantaneous.
    Instant,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RatioRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<RatioRepr> for ControlRatio {
    type Error = String;
    fn try_from(r: RatioRepr) -> std::result::Result<Self, String> {
        match r {
            RatioRepr::Number(p) => Ok(ControlRatio::Finite(p)),
            RatioRepr::Text(s) if s == "inf" => Ok(ControlRatio::Instant),
            RatioRepr::Text(s) => Err(format!("control ratio must be a number or \"inf\", got {s:?}")),
        }
    }
}

impl From<ControlRatio> for RatioRepr {
    fn from(p: ControlRatio) -> Self {
        match p {
            ControlRatio::Finite(p) => RatioRepr::Number(p),
            ControlRatio::Instant => RatioRepr::Text("inf".into()),
        }
    }
}

impl ControlRatio {
    pub fn validate(self) -> Result<Self> {
        match self {
            ControlRatio::Finite(p) if !(p >= 1.0 && p.is_finite()) => {
                precondition(format!("control ratio p must satisfy p >= 1, got {p}"))
            }
            _ => Ok(self),
        }
    }

    /// `1/p`, zero for instantaneous control pulses.
    pub fn inverse(self) -> f64 {
        match self {
            ControlRatio::Finite(p) => 1.0 / p,
            ControlRatio::Instant => 0.0,
        }
    }
}

impl std::str::FromStr for ControlRatio {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inf" | "infinity" => Ok(ControlRatio::Instant),
            _ => s.parse::<f64>().map(ControlRatio::Finite).map_err(|e| format!("{s:?}: {e}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl std::str::FromStr for Branch {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            _ => Err(format!("branch must be + or -, got {s:?}")),
        }
    }
}

/// Analytic gate parameters. Units follow the caller; the CLI uses `V = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDesign {
    /// Controlled phase implemented by the design.
    pub theta: f64,
    pub v: f64,
    pub p: ControlRatio,
    /// Target Rabi frequency.
    pub omega: f64,
    /// Target detuning.
    pub delta: f64,
    pub t_target: f64,
    pub n0: u32,
    pub n_v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
}

impl GateDesign {
    pub fn with_control_ratio(mut self, p: ControlRatio) -> Result<Self> {
        self.p = p.validate()?;
        Ok(self)
    }

    pub fn control_omega(&self) -> Option<f64> {
        match self.p {
            ControlRatio::Finite(p) => Some(p * self.omega),
            ControlRatio::Instant => None,
        }
    }

    pub fn gate_duration(&self) -> f64 {
        self.t_target + 2.0 * PI * self.p.inverse() / self.omega
    }

    /// Control π, detuned target pulse, control π.
    pub fn sequence(&self) -> PulseSequence {
        let target = PulseSegment::target(self.omega, self.delta, 0.0, self.t_target);
        match self.control_omega() {
            Some(oc) => PulseSequence::new()
                .with(PulseSegment::control_pi(oc))
                .with(target)
                .with(PulseSegment::control_pi(oc)),
            None => PulseSequence::new()
                .with(InstantPulse::ControlPi)
                .with(target)
                .with(InstantPulse::ControlPi),
        }
    }

    pub fn params(&self, gamma: f64) -> Result<PhysicsParams> {
        PhysicsParams::new(self.v, gamma)
    }

    pub fn phases(&self) -> PhasePair {
        target_pulse_phases(self.omega, self.delta, self.v, self.t_target).phases
    }
}

fn check_interaction(v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return precondition(format!("interaction V must be positive, got {v}"));
    }
    Ok(())
}

/// CZ design: `Ω = √3 V/2`, `Δ = V/2`, target pulse `2π/V`.
pub fn design_cz(v: f64, p: ControlRatio) -> Result<GateDesign> {
    check_interaction(v)?;
    Ok(GateDesign {
        theta: PI,
        v,
        p: p.validate()?,
        omega: SQRT3 * v / 2.0,
        delta: v / 2.0,
        t_target: 2.0 * PI / v,
        n0: 1,
        n_v: 1,
        branch: None,
    })
}

/// Controlled-phase design `diag(1,1,1,e^{iθ})` with `Ω = V√((π/θ)² - 1/4)`,
/// `Δ = V/2` and target pulse `2θ/V`. Control ratio defaults to `p = 1`.
pub fn design_phase_gate(theta: f64, v: f64) -> Result<GateDesign> {
    design_phase_gate_loops(theta, v, 1)
}

/// Same Rabi frequency as [`design_phase_gate`] with the target pulse
/// extended to `n` loops (`2nθ/V`), giving a controlled `nθ` gate.
pub fn design_phase_gate_loops(theta: f64, v: f64, loops: u32) -> Result<GateDesign> {
    check_interaction(v)?;
    if !(theta > 0.0 && theta <= PI) {
        return precondition(format!("controlled phase θ must lie in (0, π], got {theta}"));
    }
    if loops == 0 {
        return precondition("loop count must be a positive integer");
    }
    let n = loops as f64;
    Ok(GateDesign {
        theta: n * theta,
        v,
        p: ControlRatio::Finite(1.0),
        omega: v * ((PI / theta).powi(2) - 0.25).sqrt(),
        delta: v / 2.0,
        t_target: 2.0 * n * theta / v,
        n0: loops,
        n_v: loops,
        branch: None,
    })
}

/// Real roots of the two-loop condition, or the negative discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BranchSolutions {
    Real { plus: f64, minus: f64 },
    NoRealSolution { discriminant: f64 },
}

impl BranchSolutions {
    pub fn get(&self, branch: Branch) -> Option<f64> {
        match (self, branch) {
            (BranchSolutions::Real { plus, .. }, Branch::Plus) => Some(*plus),
            (BranchSolutions::Real { minus, .. }, Branch::Minus) => Some(*minus),
            _ => None,
        }
    }
}

fn check_loops(n0: u32, n_v: u32) -> Result<()> {
    if n0 == 0 || n_v == 0 {
        return precondition("loop counts n0, nV must be positive integers");
    }
    if n0 == n_v {
        return precondition(format!("branch solutions need n0 != nV, got n0 = nV = {n0}"));
    }
    Ok(())
}

/// Detunings at which the target closes `n0` loops unblocked and `n_v`
/// loops blocked within the same pulse.
pub fn detuning_branches(n0: u32, n_v: u32, omega: f64, v: f64) -> Result<BranchSolutions> {
    check_loops(n0, n_v)?;
    check_interaction(v)?;
    if !(omega >= 0.0 && omega.is_finite()) {
        return precondition(format!("Rabi frequency must be non-negative, got {omega}"));
    }
    let a = (n0 * n0) as f64;
    let b = (n_v * n_v) as f64;
    let mut disc = a * b * v * v - (a - b).powi(2) * omega * omega;
    let scale = a * b * v * v;
    if disc < 0.0 && disc > -1e-12 * scale {
        disc = 0.0;
    }
    if disc < 0.0 {
        return Ok(BranchSolutions::NoRealSolution { discriminant: disc });
    }
    let root = disc.sqrt();
    Ok(BranchSolutions::Real {
        plus: (a * v + root) / (a - b),
        minus: (a * v - root) / (a - b),
    })
}

/// Target-pulse duration closing `n0` unblocked loops at detuning `delta`.
pub fn branch_duration(n0: u32, omega: f64, delta: f64) -> f64 {
    2.0 * PI * n0 as f64 / omega.hypot(delta)
}

/// Amplitude-factor phases of a target pulse: `e^{-iφ}` with the control dark,
/// `e^{-iφ_V}` with the control in `|r⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePair {
    pub phi: f64,
    pub phi_v: f64,
}

impl PhasePair {
    /// Controlled phase `φ - φ_V` produced by the full sequence.
    pub fn gate_phase(&self) -> f64 {
        self.phi - self.phi_v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPhases {
    pub phi: f64,
    pub phi_v: f64,
    /// `φ - φ_V`, wrapped to `(-π, π]`.
    pub theta: f64,
}

/// `φ = n0 π + n0 π Δ/√(Ω²+Δ²)`, `φ_V = n_V π + n0 π (Δ-V)/√(Ω²+Δ²)`.
pub fn branch_phases(n0: u32, n_v: u32, delta: f64, omega: f64, v: f64) -> Result<BranchPhases> {
    check_loops(n0, n_v)?;
    check_interaction(v)?;
    let w = omega.hypot(delta);
    let n0f = n0 as f64;
    let phi = n0f * PI + n0f * PI * delta / w;
    let phi_v = n_v as f64 * PI + n0f * PI * (delta - v) / w;
    Ok(BranchPhases { phi, phi_v, theta: wrap_angle(phi - phi_v) })
}

/// Gate from a detuning branch. The control ratio defaults to instantaneous.
pub fn design_branch(n0: u32, n_v: u32, omega: f64, v: f64, branch: Branch) -> Result<GateDesign> {
    let solutions = detuning_branches(n0, n_v, omega, v)?;
    let Some(delta) = solutions.get(branch) else {
        return precondition(format!(
            "no real detuning for n0 = {n0}, nV = {n_v} at Ω/V = {}",
            omega / v
        ));
    };
    let phases = branch_phases(n0, n_v, delta, omega, v)?;
    Ok(GateDesign {
        theta: phases.theta,
        v,
        p: ControlRatio::Instant,
        omega,
        delta,
        t_target: branch_duration(n0, omega, delta),
        n0,
        n_v,
        branch: Some(branch),
    })
}

/// Phases plus loop counts inferred from the pulse area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub phases: PhasePair,
    pub n0: u32,
    pub n_v: u32,
    /// Both branches close an integer number of loops to within `1e-9` rad.
    pub on_manifold: bool,
}

/// `φ = n0 π + Δt/2`, `φ_V = n_V π + (Δ-V)t/2` with loop counts rounded from
/// the pulse area. Off the return manifold the result is still returned but
/// flagged, since optimizer iterates routinely land there.
pub fn target_pulse_phases(omega: f64, delta: f64, v: f64, t: f64) -> PhaseEstimate {
    let area0 = t * omega.hypot(delta);
    let area_v = t * omega.hypot(delta - v);
    let n0 = (area0 / (2.0 * PI)).round();
    let n_v = (area_v / (2.0 * PI)).round();
    let on_manifold = n0 >= 1.0
        && n_v >= 1.0
        && (area0 - 2.0 * PI * n0).abs() <= 1e-9
        && (area_v - 2.0 * PI * n_v).abs() <= 1e-9;
    PhaseEstimate {
        phases: PhasePair { phi: n0 * PI + delta * t / 2.0, phi_v: n_v * PI + (delta - v) * t / 2.0 },
        n0: n0 as u32,
        n_v: n_v as u32,
        on_manifold,
    }
}

/// Scattering error `(11/8 + 1/(√3 p)) π/(Vτ)` of the CZ design.
pub fn scattering_error(p: ControlRatio, v: f64, tau: f64) -> Result<f64> {
    let p = p.validate()?;
    if !(v * tau > 0.0) {
        return precondition(format!("Vτ must be positive, got {}", v * tau));
    }
    Ok((11.0 / 8.0 + p.inverse() / SQRT3) * PI / (v * tau))
}

/// Rydberg time `P_r = (11/8 + 1/(√3 p)) π/V` of the CZ design, averaged over
/// computational inputs.
pub fn cz_rydberg_time(p: ControlRatio, v: f64) -> Result<f64> {
    scattering_error(p, v, 1.0)
}

/// Total CZ duration `(1 + 2/(√3 p)) 2π/V`.
pub fn gate_duration(p: ControlRatio, v: f64) -> Result<f64> {
    let p = p.validate()?;
    check_interaction(v)?;
    Ok((1.0 + 2.0 * p.inverse() / SQRT3) * 2.0 * PI / v)
}

/// Lifetime-limited bound `(1 + π/2)/(Vτ)`.
pub fn ddp_bound(v: f64, tau: f64) -> Result<f64> {
    if !(v > 0.0 && tau > 0.0) {
        return precondition("V and τ must be positive");
    }
    Ok((1.0 + PI / 2.0) / (v * tau))
}

/// Ratio of the modified time-optimal gate's error to the bound.
pub const MTO_ERROR_RATIO: f64 = 1.33;

/// Duration of the modified time-optimal gate in units of `1/Ω`, placed at
/// the `p = 2.9` crossover of [`gate_duration`].
pub const MTO_DURATION_OMEGA: f64 = SQRT3 * PI + 2.0 * PI / 2.9;

/// Resonant π–2π–π baseline at its optimal Rabi frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegacyBaselines {
    pub omega_opt: f64,
    pub error: f64,
    pub ddp_bound: f64,
}

/// `Ω_opt = (7π)^{1/3} (V²/τ)^{1/3}`, `ε = 3(7π)^{2/3}/8 (Vτ)^{-2/3}`.
pub fn legacy_baselines(v: f64, tau: f64) -> Result<LegacyBaselines> {
    let ddp = ddp_bound(v, tau)?;
    let seven_pi = 7.0 * PI;
    Ok(LegacyBaselines {
        omega_opt: seven_pi.cbrt() * (v * v / tau).cbrt(),
        error: 3.0 * seven_pi.powf(2.0 / 3.0) / 8.0 * (v * tau).powf(-2.0 / 3.0),
        ddp_bound: ddp,
    })
}

/// Resonant π (control), 2π (target), π (control), all at Rabi frequency `omega`.
pub fn legacy_sequence(omega: f64) -> PulseSequence {
    PulseSequence::new()
        .with(PulseSegment::control_pi(omega))
        .with(PulseSegment::target(omega, 0.0, 0.0, 2.0 * PI / omega))
        .with(PulseSegment::control_pi(omega))
}

/// Simulated error of the resonant π–2π–π gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegacySimulation {
    pub omega: f64,
    /// Mean infidelity over one period of the blocked-branch oscillation.
    pub error: f64,
    /// Deterministic conditional phase picked up on the blocked branch,
    /// relative to π.
    pub blockade_phase: f64,
}

/// Simulate the π–2π–π gate with decay `Γ = 1/τ` at Rabi frequency `omega`.
///
/// Two conventions match the leading-order closed form: the deterministic
/// blockade Stark phase is calibrated out (the target is the nearest
/// controlled-phase gate), and the blocked-branch leakage, which oscillates
/// as `sin²(πW/Ω)` with `W = √(Ω²+V²)`, is averaged over one period by
/// sampling `samples` interaction strengths across it.
pub fn simulate_legacy_gate(v: f64, tau: f64, omega: f64, samples: usize) -> Result<LegacySimulation> {
    check_interaction(v)?;
    if !(tau > 0.0 && omega > 0.0) || samples == 0 {
        return precondition("τ, Ω and the sample count must be positive");
    }
    let seq = legacy_sequence(omega);
    let w = omega.hypot(v);
    let mut error = 0.0;
    let mut phase = 0.0;
    for k in 0..samples {
        let wk = w + omega * ((k as f64 + 0.5) / samples as f64 - 0.5);
        let vk = (wk * wk - omega * omega).sqrt();
        let u = propagate_sequence(&seq, &PhysicsParams::new(vk, 1.0 / tau)?)?;
        let diag = computational_block(&u).diagonal();
        let theta = controlled_phase_of(&diag);
        error += 1.0 - fidelity_report(&u, theta).corrected_fidelity;
        phase += wrap_angle(theta - PI);
    }
    Ok(LegacySimulation { omega, error: error / samples as f64, blockade_phase: phase / samples as f64 })
}

/// Local corrections bringing a diagonal gate to `diag(1,1,1,e^{iθ})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCorrection {
    /// Z angle on the control.
    pub alpha: f64,
    /// Z angle on the target.
    pub beta: f64,
    pub global_phase: f64,
    /// Remaining `φ00 + φ11 - φ01 - φ10 - θ`, wrapped.
    pub residual: f64,
}

pub fn canonical_correction(diagonal: &[crate::dynamics::C64; 4], theta: f64) -> CanonicalCorrection {
    let ph: [f64; 4] = std::array::from_fn(|i| diagonal[i].arg());
    CanonicalCorrection {
        alpha: wrap_angle(ph[2] - ph[0]),
        beta: wrap_angle(ph[1] - ph[0]),
        global_phase: wrap_angle(ph[0]),
        residual: wrap_angle(ph[0] + ph[3] - ph[1] - ph[2] - theta),
    }
}

/// `δV/V ≈ -α δr/r` for a power-law interaction `V ∝ r^{-α}`.
pub fn spacing_to_interaction_error(alpha_exponent: u32, dr_over_r: f64) -> Result<f64> {
    if !matches!(alpha_exponent, 3 | 6) {
        return precondition(format!("interaction exponent must be 3 or 6, got {alpha_exponent}"));
    }
    Ok(-(alpha_exponent as f64) * dr_over_r)
}

/// One row of the error-versus-`p` curve, in `V = 1` units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorCurvePoint {
    pub p: f64,
    pub formula_error_vtau: f64,
    pub simulated_error_vtau: f64,
    pub duration_v_over_2pi: f64,
    pub ratio_to_ddp: f64,
}

/// Formula and simulated `ε·Vτ` for each `p`, simulated with `Γ = 1/τ`.
pub fn error_curve(p_grid: &[f64], vtau: f64) -> Result<Vec<ErrorCurvePoint>> {
    use rayon::prelude::*;
    let ddp = ddp_bound(1.0, vtau)?;
    p_grid
        .par_iter()
        .map(|&p| {
            let ratio = ControlRatio::Finite(p);
            let design = design_cz(1.0, ratio)?;
            let report = crate::fidelity::evaluate_sequence(&design.sequence(), &design.params(1.0 / vtau)?, PI)?;
            let formula = scattering_error(ratio, 1.0, vtau)?;
            Ok(ErrorCurvePoint {
                p,
                formula_error_vtau: formula * vtau,
                simulated_error_vtau: report.infidelity * vtau,
                duration_v_over_2pi: gate_duration(ratio, 1.0)? / (2.0 * PI),
                ratio_to_ddp: formula / ddp,
            })
        })
        .collect()
}

/// One row of the branch curve; `None` where the discriminant is negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchCurvePoint {
    pub omega_over_v: f64,
    pub delta_plus: Option<f64>,
    pub delta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
    pub theta_minus: Option<f64>,
    /// Largest back-substitution error of the two loop conditions (rad).
    pub residual: Option<f64>,
}

/// Loop-condition mismatch `|t√(Ω²+(Δ-V)²) - 2π n_V|` for the duration that
/// closes `n0` unblocked loops.
pub fn loop_residual(n0: u32, n_v: u32, omega: f64, delta: f64, v: f64) -> f64 {
    let t = branch_duration(n0, omega, delta);
    let r0 = (t * omega.hypot(delta) - 2.0 * PI * n0 as f64).abs();
    let rv = (t * omega.hypot(delta - v) - 2.0 * PI * n_v as f64).abs();
    r0.max(rv)
}

pub fn branch_curve(n0: u32, n_v: u32, omega_grid: &[f64], v: f64) -> Result<Vec<BranchCurvePoint>> {
    omega_grid
        .iter()
        .map(|&omega| {
            let row = match detuning_branches(n0, n_v, omega, v)? {
                BranchSolutions::Real { plus, minus } => BranchCurvePoint {
                    omega_over_v: omega / v,
                    delta_plus: Some(plus / v),
                    delta_minus: Some(minus / v),
                    theta_plus: Some(branch_phases(n0, n_v, plus, omega, v)?.theta),
                    theta_minus: Some(branch_phases(n0, n_v, minus, omega, v)?.theta),
                    residual: Some(
                        loop_residual(n0, n_v, omega, plus, v).max(loop_residual(n0, n_v, omega, minus, v)),
                    ),
                },
                BranchSolutions::NoRealSolution { .. } => BranchCurvePoint {
                    omega_over_v: omega / v,
                    delta_plus: None,
                    delta_minus: None,
                    theta_plus: None,
                    theta_minus: None,
                    residual: None,
                },
            };
            Ok(row)
        })
        .collect()
}

/// Controlled phase of the simulated design (lossless), after local Z
/// correction.
pub fn simulated_controlled_phase(design: &GateDesign) -> Result<f64> {
    let u = propagate_sequence(&design.sequence(), &design.params(0.0)?)?;
    Ok(controlled_phase_of(&computational_block(&u).diagonal()))
}

/// Corrected infidelity of a design against its own controlled phase.
pub fn simulated_infidelity(design: &GateDesign, gamma: f64) -> Result<f64> {
    let u = propagate_sequence(&design.sequence(), &design.params(gamma)?)?;
    let block = computational_block(&u);
    Ok(1.0 - optimize_local_phases(&block.0, &controlled_phase(design.theta)).fidelity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cz_design_values() {
        let d = design_cz(1.0, ControlRatio::Finite(1.0)).unwrap();
        assert!((d.omega - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(d.delta, 0.5);
        assert!((d.t_target - 2.0 * PI).abs() < 1e-15);
        assert!((d.gate_duration() - 2.0 * PI * (1.0 + 2.0 / 3f64.sqrt())).abs() < 1e-12);
        assert!((d.sequence().total_duration() - d.gate_duration()).abs() < 1e-12);
    }

    #[test]
    fn cz_design_scales_with_interaction() {
        let a = design_cz(1.0, ControlRatio::Finite(1.0)).unwrap();
        let b = design_cz(2.0, ControlRatio::Finite(1.0)).unwrap();
        assert!((b.omega - 2.0 * a.omega).abs() < 1e-14);
        assert!((b.delta - 2.0 * a.delta).abs() < 1e-14);
        assert!((b.gate_duration() - a.gate_duration() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn instant_control_duration() {
        let d = design_cz(1.0, ControlRatio::Instant).unwrap();
        assert!((d.gate_duration() - 2.0 * PI).abs() < 1e-15);
        assert!((gate_duration(ControlRatio::Instant, 1.0).unwrap() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn slow_control_rejected() {
        assert!(design_cz(1.0, ControlRatio::Finite(0.5)).is_err());
        assert!(design_cz(-1.0, ControlRatio::Finite(1.0)).is_err());
        assert!(scattering_error(ControlRatio::Finite(0.9), 1.0, 1.0).is_err());
    }

    #[test]
    fn phase_gate_formula() {
        let cz = design_phase_gate(PI, 1.0).unwrap();
        assert!((cz.omega - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((cz.t_target - 2.0 * PI).abs() < 1e-15);
        let half = design_phase_gate(PI / 2.0, 1.0).unwrap();
        assert!((half.omega - 15f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((half.t_target - PI).abs() < 1e-15);
        assert!(design_phase_gate(0.0, 1.0).is_err());
        assert!(design_phase_gate(3.5, 1.0).is_err());
        assert!(design_phase_gate_loops(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn phase_gate_diverges_as_theta_vanishes() {
        let mut last = design_phase_gate(PI, 1.0).unwrap();
        for k in 1..12 {
            let d = design_phase_gate(PI / 2f64.powi(k), 1.0).unwrap();
            assert!(d.omega > last.omega && d.t_target < last.t_target);
            last = d;
        }
    }

    #[test]
    fn coincident_branches() {
        match detuning_branches(2, 1, 2.0 / 3.0, 1.0).unwrap() {
            BranchSolutions::Real { plus, minus } => {
                assert!((plus - 4.0 / 3.0).abs() < 1e-7);
                assert!((minus - 4.0 / 3.0).abs() < 1e-7);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_branch_above_threshold() {
        assert!(matches!(
            detuning_branches(2, 1, 0.9, 1.0).unwrap(),
            BranchSolutions::NoRealSolution { discriminant } if discriminant < 0.0
        ));
        assert!(design_branch(2, 1, 0.9, 1.0, Branch::Plus).is_err());
    }

    #[test]
    fn equal_loops_rejected() {
        assert!(detuning_branches(1, 1, 0.5, 1.0).is_err());
        assert!(branch_phases(2, 2, 0.5, 0.5, 1.0).is_err());
        assert!(detuning_branches(0, 1, 0.5, 1.0).is_err());
    }

    #[test]
    fn basic_phases() {
        let est = target_pulse_phases(3f64.sqrt() / 2.0, 0.5, 1.0, 2.0 * PI);
        assert!(est.on_manifold);
        assert!((est.phases.phi - 1.5 * PI).abs() < 1e-12);
        assert!((est.phases.phi_v - 0.5 * PI).abs() < 1e-12);
        assert!((est.phases.gate_phase() - PI).abs() < 1e-12);
    }

    #[test]
    fn resonant_loop_phase() {
        // Δ = 0, one loop: geometric phase π only
        let est = target_pulse_phases(1.0, 0.0, 1e6, 2.0 * PI);
        assert!((est.phases.phi - PI).abs() < 1e-15);
        assert_eq!(est.n0, 1);
    }

    #[test]
    fn off_manifold_flagged() {
        let est = target_pulse_phases(3f64.sqrt() / 2.0, 0.5, 1.0, 2.0 * PI * 1.01);
        assert!(!est.on_manifold);
    }

    #[test]
    fn scattering_values() {
        let e1 = scattering_error(ControlRatio::Finite(1.0), 1.0, 1.0).unwrap();
        assert!((e1 - (11.0 / 8.0 + 1.0 / 3f64.sqrt()) * PI).abs() < 1e-14);
        assert!((e1 - 6.134).abs() < 1e-3);
        let ddp = ddp_bound(1.0, 1.0).unwrap();
        assert!((e1 / ddp - 2.39).abs() < 5e-3);
        let einf = scattering_error(ControlRatio::Instant, 1.0, 1.0).unwrap();
        assert!((einf - 11.0 * PI / 8.0).abs() < 1e-14);
        assert!((einf / ddp - 1.68).abs() < 5e-3);
    }

    #[test]
    fn duration_in_rabi_units() {
        let omega = 3f64.sqrt() / 2.0;
        let t1 = gate_duration(ControlRatio::Finite(1.0), 1.0).unwrap() * omega;
        assert!((t1 - (3f64.sqrt() * PI + 2.0 * PI)).abs() < 1e-12);
        assert!((t1 - 11.73).abs() < 1e-2);
        let tinf = gate_duration(ControlRatio::Instant, 1.0).unwrap() * omega;
        assert!((tinf - 5.441).abs() < 1e-3);
    }

    #[test]
    fn crossover_with_modified_time_optimal() {
        let omega = 3f64.sqrt() / 2.0;
        let at = |p: f64| gate_duration(ControlRatio::Finite(p), 1.0).unwrap() * omega;
        assert!(at(2.9) <= MTO_DURATION_OMEGA + 1e-12);
        assert!(at(2.8) > MTO_DURATION_OMEGA);
    }

    #[test]
    fn ddp_constant() {
        let ddp = ddp_bound(1.0, 1.0).unwrap();
        assert!(((ddp * 100.0).round() / 100.0 - 2.57).abs() < 1e-12);
    }

    #[test]
    fn legacy_closed_form() {
        let b = legacy_baselines(1.0, 1e6).unwrap();
        // 3 (7π)^{2/3} / 8 × 1e-4
        let expected = 3.0 * (7.0 * PI).powf(2.0 / 3.0) / 8.0 * 1e-4;
        assert!((b.error - expected).abs() < 1e-18);
        assert!((b.error - 2.9435e-4).abs() < 1e-7);
        assert!((b.omega_opt - (7.0 * PI * 1e-6).cbrt()).abs() < 1e-14);
        // ratio to the bound grows without limit
        let r = |vt: f64| {
            let b = legacy_baselines(1.0, vt).unwrap();
            b.error / b.ddp_bound
        };
        assert!(r(1e4) < r(1e6) && r(1e6) < r(1e8));
    }

    #[test]
    fn canonical_cz_correction() {
        use crate::dynamics::C64;
        let one = C64::new(1.0, 0.0);
        let c = canonical_correction(&[one, one, one, -one], PI);
        assert_eq!((c.alpha, c.beta), (0.0, 0.0));
        assert!(c.residual.abs() < 1e-15);
        let (a, b) = (0.8, -1.9);
        let d = [one, C64::from_polar(1.0, b), C64::from_polar(1.0, a), C64::from_polar(1.0, a + b + PI)];
        let c = canonical_correction(&d, PI);
        assert!(c.residual.abs() < 1e-12);
        assert!((c.alpha - a).abs() < 1e-12 && (c.beta - b).abs() < 1e-12);
    }

    #[test]
    fn spacing_conversion() {
        let dv = spacing_to_interaction_error(6, 0.05 / 6.0).unwrap();
        assert!((dv + 0.05).abs() < 1e-12);
        assert_eq!(spacing_to_interaction_error(3, 0.0).unwrap(), 0.0);
        assert!((spacing_to_interaction_error(6, -0.01).unwrap() - 0.06).abs() < 1e-15);
        assert!(spacing_to_interaction_error(4, 0.01).is_err());
    }

    #[test]
    fn control_ratio_json() {
        let json = serde_json::to_string(&ControlRatio::Instant).unwrap();
        assert_eq!(json, "\"inf\"");
        let back: ControlRatio = serde_json::from_str("2.5").unwrap();
        assert_eq!(back, ControlRatio::Finite(2.5));
    }
}
