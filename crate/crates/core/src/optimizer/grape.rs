//! Block-reduced dynamics and exact phase gradients.
//!
//! With instantaneous control π pulses the computational diagonal is
//! `m00 = -[U_V]_gg`, `m01 = -e^{-ΓT/2}`, `m10 = [U_0]_gg`, `m11 = 1`, where
//! `U_0` (`U_V`) is the target propagator with the control in `|1⟩` (`|r⟩`).

use std::f64::consts::PI;

use crate::dynamics::C64;
use crate::fidelity::corrected_fidelity_with_gradient;
use crate::two_level::{Mat2, TwoLevel};

use super::{Objective, OperatingPoint, RobustParameter};

/// Multiplicative shift of the operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Perturbation {
    pub omega_scale: f64,
    pub v_scale: f64,
}

impl Perturbation {
    pub const NONE: Self = Self { omega_scale: 1.0, v_scale: 1.0 };

    pub fn along(parameter: RobustParameter, frac: f64) -> Self {
        match parameter {
            RobustParameter::Rabi => Self { omega_scale: 1.0 + frac, v_scale: 1.0 },
            RobustParameter::Interaction => Self { omega_scale: 1.0, v_scale: 1.0 + frac },
        }
    }
}

/// `[U]_gg` for phases `xi` and its derivative with respect to each phase.
///
/// Every segment shares the same unmodulated propagator `U(0)`; the phase
/// enters as `U(ξ) = R U(0) R†` with `R = diag(e^{iξ}, 1)`.
fn ground_amplitude(block: TwoLevel, xi: &[f64], dt: f64, grad: Option<&mut [C64]>) -> C64 {
    let u0 = block.propagator(dt);
    let seg = |x: f64| -> Mat2 {
        let e = C64::from_polar(1.0, x);
        Mat2::new(u0[(0, 0)], u0[(0, 1)] * e, u0[(1, 0)] * e.conj(), u0[(1, 1)])
    };
    let Some(grad) = grad else {
        let (mut g, mut r) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        for &x in xi {
            let u = seg(x);
            (g, r) = (u[(0, 0)] * g + u[(0, 1)] * r, u[(1, 0)] * g + u[(1, 1)] * r);
        }
        return g;
    };

    let n = xi.len();
    let mut psi = Vec::with_capacity(n + 1);
    psi.push([C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let segs: Vec<Mat2> = xi.iter().map(|&x| seg(x)).collect();
    for u in &segs {
        let [g, r] = *psi.last().expect("non-empty");
        psi.push([u[(0, 0)] * g + u[(0, 1)] * r, u[(1, 0)] * g + u[(1, 1)] * r]);
    }
    // co-state row χ_k = e_gᵀ U_N ⋯ U_{k+1}
    let mut chi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mi = C64::new(0.0, -1.0);
    for k in (1..=n).rev() {
        let u = &segs[k - 1];
        let prev = [chi[0] * u[(0, 0)] + chi[1] * u[(1, 0)], chi[0] * u[(0, 1)] + chi[1] * u[(1, 1)]];
        grad[k - 1] = mi * (chi[1] * psi[k][1] - prev[1] * psi[k - 1][1]);
        chi = prev;
    }
    psi[n][0]
}

/// Infidelity `1 - F*` of the block model and, optionally, its gradient.
pub(crate) fn infidelity(
    op: &OperatingPoint,
    xi: &[f64],
    duration: f64,
    pert: Perturbation,
    gamma: f64,
    grad: Option<&mut [f64]>,
) -> f64 {
    let omega = op.omega * pert.omega_scale;
    let v = op.v * pert.v_scale;
    let dt = duration / xi.len() as f64;
    let free = TwoLevel { omega, xi: 0.0, e_g: C64::new(0.0, 0.0), e_r: C64::new(op.delta, -0.5 * gamma) };
    let blocked =
        TwoLevel { omega, xi: 0.0, e_g: C64::new(0.0, -0.5 * gamma), e_r: C64::new(op.delta - v, -gamma) };

    match grad {
        None => {
            let m = [
                -ground_amplitude(blocked, xi, dt, None),
                C64::new(-(-0.5 * gamma * duration).exp(), 0.0),
                ground_amplitude(free, xi, dt, None),
                C64::new(1.0, 0.0),
            ];
            1.0 - corrected_fidelity_with_gradient(&m, PI).0
        }
        Some(out) => {
            let n = xi.len();
            let mut d_blocked = vec![C64::new(0.0, 0.0); n];
            let mut d_free = vec![C64::new(0.0, 0.0); n];
            let m = [
                -ground_amplitude(blocked, xi, dt, Some(&mut d_blocked)),
                C64::new(-(-0.5 * gamma * duration).exp(), 0.0),
                ground_amplitude(free, xi, dt, Some(&mut d_free)),
                C64::new(1.0, 0.0),
            ];
            let (f, w) = corrected_fidelity_with_gradient(&m, PI);
            for k in 0..n {
                // J = 1 - F*, dm00 = -d[U_V]_gg
                out[k] = (w[0] * d_blocked[k]).re - (w[2] * d_free[k]).re;
            }
            1.0 - f
        }
    }
}

/// Objective value and gradient. Robust objectives are the weighted mean of
/// the shifted infidelities.
pub(crate) fn objective(
    op: &OperatingPoint,
    xi: &[f64],
    duration: f64,
    objective: &Objective,
    grad: Option<&mut [f64]>,
) -> f64 {
    match objective {
        Objective::Nominal => infidelity(op, xi, duration, Perturbation::NONE, 0.0, grad),
        Objective::Robust(spec) => {
            let points = spec.points();
            let total: f64 = points.iter().map(|p| p.1).sum();
            match grad {
                None => points
                    .iter()
                    .map(|&(frac, w)| w * infidelity(op, xi, duration, Perturbation::along(spec.parameter, frac), 0.0, None))
                    .sum::<f64>()
                    / total,
                Some(out) => {
                    out.iter_mut().for_each(|g| *g = 0.0);
                    let mut buf = vec![0.0; xi.len()];
                    let mut value = 0.0;
                    for &(frac, w) in &points {
                        let pert = Perturbation::along(spec.parameter, frac);
                        value += w * infidelity(op, xi, duration, pert, 0.0, Some(&mut buf));
                        out.iter_mut().zip(&buf).for_each(|(g, b)| *g += w * b / total);
                    }
                    value / total
                }
            }
        }
    }
}

/// `weight · ⟨(dξ/dt)²⟩/Ω²` of the piecewise phases, accumulating its
/// derivative into `grad`.
pub(crate) fn modulation_penalty(xi: &[f64], duration: f64, omega: f64, weight: f64, grad: Option<&mut [f64]>) -> f64 {
    let n = xi.len();
    let dt = duration / n as f64;
    // Σ (Δξ/dt)² dt / T / Ω²
    let scale = weight / (dt * duration * omega * omega);
    let value = xi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() * scale;
    if let Some(g) = grad {
        for k in 0..n.saturating_sub(1) {
            let d = 2.0 * scale * (xi[k + 1] - xi[k]);
            g[k] -= d;
            g[k + 1] += d;
        }
    }
    value
}
