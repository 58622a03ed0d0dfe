use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{InstantPulse, PulseSegment, PulseSequence};
use crate::error::{precondition, Result};
use crate::fidelity::wrap_angle;

/// Target Rabi frequency, interaction and the constant detuning on which
/// the phase modulation is superimposed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub omega: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub delta: f64,
}

impl OperatingPoint {
    /// Detuning defaults to `V/2`, so a flat waveform at `Ω = √3V/2` and
    /// duration `2π/V` is the analytic CZ gate.
    pub fn new(omega: f64, v: f64) -> Result<Self> {
        Self::with_detuning(omega, v, v / 2.0)
    }

    pub fn with_detuning(omega: f64, v: f64, delta: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return precondition(format!("Rabi frequency must be positive, got {omega}"));
        }
        if !(v > 0.0 && v.is_finite()) {
            return precondition(format!("interaction V must be positive, got {v}"));
        }
        if !delta.is_finite() {
            return precondition("detuning must be finite");
        }
        Ok(Self { omega, v, delta })
    }

    /// `Ω = √3V/2`, `Δ = V/2`.
    pub fn analytic(v: f64) -> Result<Self> {
        Self::new(3f64.sqrt() / 2.0 * v, v)
    }

    /// Duration of the analytic gate's target pulse.
    pub fn analytic_duration(&self) -> f64 {
        2.0 * PI / self.v
    }
}

/// Piecewise-constant laser phase on the target pulse. Control π pulses
/// are instantaneous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseWaveform {
    #[serde(rename = "N")]
    pub n: usize,
    pub duration: f64,
    pub omega: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub delta: f64,
    pub xi: Vec<f64>,
}

impl PhaseWaveform {
    pub fn new(op: OperatingPoint, duration: f64, xi: Vec<f64>) -> Result<Self> {
        if xi.is_empty() {
            return precondition("waveform needs at least one segment");
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return precondition(format!("duration must be positive, got {duration}"));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return precondition("waveform phases must be finite");
        }
        Ok(Self { n: xi.len(), duration, omega: op.omega, v: op.v, delta: op.delta, xi })
    }

    pub fn flat(op: OperatingPoint, n: usize, duration: f64) -> Result<Self> {
        Self::new(op, duration, vec![0.0; n])
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint { omega: self.omega, v: self.v, delta: self.delta }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != self.xi.len() {
            return precondition(format!("N = {} but {} phases given", self.n, self.xi.len()));
        }
        Self::new(self.operating_point(), self.duration, self.xi.clone())?;
        Ok(())
    }

    pub fn segment_duration(&self) -> f64 {
        self.duration / self.n as f64
    }

    /// Adds `c` to every phase.
    pub fn shifted(&self, c: f64) -> Self {
        Self { xi: self.xi.iter().map(|x| x + c).collect(), ..self.clone() }
    }

    /// `max |Δξ| / dt` over adjacent segments, with jumps wrapped to `(-π, π]`.
    pub fn detuning_proxy_max(&self) -> f64 {
        let dt = self.segment_duration();
        self.xi.windows(2).map(|w| wrap_angle(w[1] - w[0]).abs() / dt).fold(0.0, f64::max)
    }

    /// Largest instantaneous detuning `|Δ - dξ/dt|`, including the constant
    /// detuning of unmodulated stretches.
    pub fn max_detuning(&self) -> f64 {
        let dt = self.segment_duration();
        self.xi
            .windows(2)
            .map(|w| (self.delta - wrap_angle(w[1] - w[0]) / dt).abs())
            .fold(self.delta.abs(), f64::max)
    }

    /// Instant control π, the `N` target segments, instant control π.
    pub fn sequence_with(&self, omega: f64) -> PulseSequence {
        let dt = self.segment_duration();
        let mut seq = PulseSequence::new().with(InstantPulse::ControlPi);
        for &xi in &self.xi {
            seq.push(PulseSegment::target(omega, self.delta, xi, dt));
        }
        seq.with(InstantPulse::ControlPi)
    }

    pub fn sequence(&self) -> PulseSequence {
        self.sequence_with(self.omega)
    }

    /// Same phases, zero-order-hold resampled onto `n` segments.
    pub fn resampled(&self, n: usize) -> Self {
        let xi = (0..n).map(|k| self.xi[(k * self.n) / n]).collect();
        Self { n, xi, ..self.clone() }
    }
}
