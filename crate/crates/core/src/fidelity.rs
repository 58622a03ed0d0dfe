//! Average gate fidelity on the computational subspace, optimized over local
//! Z rotations and a global phase.
//!
//! `F = [Tr(M†M) + |Tr(T†M)|²] / 20` for a 4×4 block `M` and target `T`.
//! Population that leaves the computational subspace (decay or a Rydberg
//! remnant) is treated as leakage; `M` is never renormalized.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize, Serializer};

use crate::dynamics::{propagate_sequence, LevelBasis, PhysicsParams, Propagator, PulseSequence, C64};
use crate::error::{precondition, Result};

pub type Mat4 = Matrix4<C64>;

const DIM: f64 = 4.0;
const NORM: f64 = DIM * (DIM + 1.0);

/// Restriction of a propagator to `|00⟩, |01⟩, |10⟩, |11⟩` (control, target).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComputationalBlock(pub Mat4);

impl ComputationalBlock {
    pub fn diagonal(&self) -> [C64; 4] {
        std::array::from_fn(|i| self.0[(i, i)])
    }

    /// `1 - Σ_i |M_ij|²` for each input column.
    pub fn leakage(&self) -> [f64; 4] {
        std::array::from_fn(|j| 1.0 - self.0.column(j).norm_squared())
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    m = m.max(self.0[(i, j)].norm());
                }
            }
        }
        m
    }
}

pub fn computational_block(u: &Propagator) -> ComputationalBlock {
    let idx = LevelBasis::COMPUTATIONAL;
    ComputationalBlock(Mat4::from_fn(|i, j| u.0[(idx[i], idx[j])]))
}

/// `diag(1, 1, 1, e^{iθ})`.
pub fn controlled_phase(theta: f64) -> Mat4 {
    Mat4::from_diagonal(&nalgebra::Vector4::new(
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, theta),
    ))
}

pub fn average_gate_fidelity(m: &Mat4, target: &Mat4) -> f64 {
    let overlap = (target.adjoint() * m).trace();
    let purity = (m.adjoint() * m).trace().re;
    (purity + overlap.norm_sqr()) / NORM
}

/// Wrap an angle to `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Best local-Z and global-phase correction of a gate.
///
/// The corrected target is `e^{iγ} diag(1, e^{iβ}, e^{iα}, e^{i(α+β)}) T`,
/// with `α` acting on the control and `β` on the target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalPhaseFit {
    pub alpha: f64,
    pub beta: f64,
    pub global_phase: f64,
    pub fidelity: f64,
    /// Gauge factors `e^{-iφ_i}`, `φ = (0, β, α, α+β)`.
    pub(crate) coefficients: [C64; 4],
}

/// `A_i = Σ_j conj(T_ij) M_ij`, so that the gauge-corrected overlap is
/// `Σ_i e^{-iφ_i} A_i` with `φ = (0, β, α, α+β)`.
fn gauge_amplitudes(m: &Mat4, target: &Mat4) -> [C64; 4] {
    std::array::from_fn(|i| (0..4).map(|j| target[(i, j)].conj() * m[(i, j)]).sum())
}

fn gauge_coefficients(alpha: f64, beta: f64) -> [C64; 4] {
    [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, -beta),
        C64::from_polar(1.0, -alpha),
        C64::from_polar(1.0, -(alpha + beta)),
    ]
}

fn is_diagonal(m: &Mat4) -> bool {
    (0..4).all(|i| (0..4).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Maximize `F` over local Z angles and global phase.
///
/// For a diagonal target the overlap only involves four complex numbers and
/// the maximization reduces to a one-dimensional problem, solved here to
/// machine precision. Other targets fall back to
/// [`optimize_local_phases_numeric`].
pub fn optimize_local_phases(m: &Mat4, target: &Mat4) -> LocalPhaseFit {
    if !is_diagonal(target) {
        return optimize_local_phases_numeric(m, target);
    }
    let a = gauge_amplitudes(m, target);
    let purity = (m.adjoint() * m).trace().re;
    let (alpha, beta, magnitude) = align_phases(&a);
    let coefficients = gauge_coefficients(alpha, beta);
    let s: C64 = coefficients.iter().zip(&a).map(|(c, a)| c * a).sum();
    LocalPhaseFit {
        alpha,
        beta,
        global_phase: s.arg(),
        fidelity: (purity + magnitude * magnitude) / NORM,
        coefficients,
    }
}

/// Returns `(α, β, max |S|)` for `S = A0 + e^{-iβ}A1 + e^{-iα}A2 + e^{-i(α+β)}A3`.
fn align_phases(a: &[C64; 4]) -> (f64, f64, f64) {
    let r: [f64; 4] = std::array::from_fn(|i| a[i].norm());
    let psi: [f64; 4] = std::array::from_fn(|i| a[i].arg());
    let delta = psi[0] + psi[3] - psi[1] - psi[2];

    // x, y are the phases of terms 1, 2 relative to term 0; term 3 then sits
    // at x + y + δ. For fixed x the best y aligns the two pairs.
    let g1 = |x: f64| C64::new(r[0], 0.0) + C64::from_polar(r[1], x);
    let g2 = |x: f64| C64::new(r[2], 0.0) + C64::from_polar(r[3], x + delta);
    let h = |x: f64| g1(x).norm() + g2(x).norm();

    const GRID: usize = 64;
    let step = 2.0 * PI / GRID as f64;
    let samples: Vec<f64> = (0..GRID).map(|k| h(-PI + k as f64 * step)).collect();
    let mut best_x = -PI;
    let mut best_h = f64::NEG_INFINITY;
    for k in 0..GRID {
        let prev = samples[(k + GRID - 1) % GRID];
        let next = samples[(k + 1) % GRID];
        if samples[k] >= prev && samples[k] >= next {
            let x0 = -PI + k as f64 * step;
            let x = newton_polish(&r, delta, golden_max(&h, x0 - step, x0 + step));
            let hx = h(x);
            if hx > best_h {
                best_h = hx;
                best_x = x;
            }
        }
    }
    let x = best_x;
    let y = g1(x).arg() - g2(x).arg();
    let beta = wrap_angle(psi[1] - psi[0] - x);
    let alpha = wrap_angle(psi[2] - psi[0] - y);
    (alpha, beta, best_h)
}

/// Newton on `h'(x) = 0` with analytic derivatives. Golden section alone
/// resolves a smooth maximum only to `√ε`.
fn newton_polish(r: &[f64; 4], delta: f64, mut x: f64) -> f64 {
    // f = √(a + b cos(x + c)), returns (f', f'')
    let derivs = |a: f64, b: f64, c: f64, x: f64| {
        let f = (a + b * (x + c).cos()).max(0.0).sqrt();
        if f < 1e-300 {
            return (0.0, 0.0);
        }
        let d1 = -b * (x + c).sin() / (2.0 * f);
        (d1, -b * (x + c).cos() / (2.0 * f) - d1 * d1 / f)
    };
    for _ in 0..6 {
        let (p1, p2) = derivs(r[0] * r[0] + r[1] * r[1], 2.0 * r[0] * r[1], 0.0, x);
        let (q1, q2) = derivs(r[2] * r[2] + r[3] * r[3], 2.0 * r[2] * r[3], delta, x);
        let (d1, d2) = (p1 + q1, p2 + q2);
        if !(d2 < 0.0) {
            break;
        }
        let dx = -d1 / d2;
        if dx.abs() > 1e-3 {
            break;
        }
        x += dx;
        if dx.abs() < 1e-15 {
            break;
        }
    }
    x
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-11 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Generic maximization over `(α, β)`: a 16×16 grid followed by Newton
/// refinement on `|S|²` to gradient norm below `1e-12`.
pub fn optimize_local_phases_numeric(m: &Mat4, target: &Mat4) -> LocalPhaseFit {
    let a = gauge_amplitudes(m, target);
    let purity = (m.adjoint() * m).trace().re;
    let overlap = |alpha: f64, beta: f64| -> C64 {
        gauge_coefficients(alpha, beta).iter().zip(&a).map(|(c, a)| c * a).sum()
    };

    const GRID: usize = 16;
    let step = 2.0 * PI / GRID as f64;
    let mut starts: Vec<(f64, f64, f64)> = Vec::with_capacity(GRID * GRID);
    for i in 0..GRID {
        for j in 0..GRID {
            let (al, be) = (-PI + i as f64 * step, -PI + j as f64 * step);
            starts.push((overlap(al, be).norm_sqr(), al, be));
        }
    }
    starts.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &(_, al, be) in starts.iter().take(4) {
        let (al, be) = newton_refine(&a, al, be);
        let f = overlap(al, be).norm_sqr();
        if f > best.0 {
            best = (f, al, be);
        }
    }
    let (f, alpha, beta) = best;
    let coefficients = gauge_coefficients(alpha, beta);
    LocalPhaseFit {
        alpha: wrap_angle(alpha),
        beta: wrap_angle(beta),
        global_phase: overlap(alpha, beta).arg(),
        fidelity: (purity + f) / NORM,
        coefficients,
    }
}

fn newton_refine(a: &[C64; 4], mut alpha: f64, mut beta: f64) -> (f64, f64) {
    let mi = C64::new(0.0, -1.0);
    // value, gradient and Hessian of |S|²
    let derivs = |al: f64, be: f64| {
        let c = gauge_coefficients(al, be);
        let t: [C64; 4] = std::array::from_fn(|i| c[i] * a[i]);
        let s = t[0] + t[1] + t[2] + t[3];
        let s_a = mi * (t[2] + t[3]);
        let s_b = mi * (t[1] + t[3]);
        let s_aa = -(t[2] + t[3]);
        let s_bb = -(t[1] + t[3]);
        let s_ab = -t[3];
        let f = s.norm_sqr();
        let g = [2.0 * (s.conj() * s_a).re, 2.0 * (s.conj() * s_b).re];
        let h = [
            2.0 * (s_a.conj() * s_a + s.conj() * s_aa).re,
            2.0 * (s_a.conj() * s_b + s.conj() * s_ab).re,
            2.0 * (s_b.conj() * s_b + s.conj() * s_bb).re,
        ];
        (f, g, h)
    };
    for _ in 0..100 {
        let (f, g, h) = derivs(alpha, beta);
        if g[0].hypot(g[1]) < 1e-12 {
            break;
        }
        let det = h[0] * h[2] - h[1] * h[1];
        let negative_definite = h[0] < 0.0 && det > 0.0;
        let (da, db) = if negative_definite {
            ((-h[2] * g[0] + h[1] * g[1]) / det, (h[1] * g[0] - h[0] * g[1]) / det)
        } else {
            (g[0] * 0.1, g[1] * 0.1)
        };
        let mut t = 1.0;
        loop {
            let (fa, _, _) = derivs(alpha + t * da, beta + t * db);
            if fa >= f || t < 1e-12 {
                break;
            }
            t *= 0.5;
        }
        alpha += t * da;
        beta += t * db;
    }
    (alpha, beta)
}

/// Corrected fidelity of a diagonal gate `m` against `diag(1,1,1,e^{iθ})`
/// and its sensitivity `w` with `dF* = Re Σ_i w_i dm_i`. Since `F*` is a
/// maximum over the gauge, the gauge stays fixed when differentiating.
pub(crate) fn corrected_fidelity_with_gradient(m: &[C64; 4], theta: f64) -> (f64, [C64; 4]) {
    let target: [C64; 4] = [
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, theta),
    ];
    let a: [C64; 4] = std::array::from_fn(|i| target[i].conj() * m[i]);
    let (alpha, beta, _) = align_phases(&a);
    let coef = gauge_coefficients(alpha, beta);
    let s: C64 = (0..4).map(|i| coef[i] * a[i]).sum();
    let purity: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let f = (purity + s.norm_sqr()) / NORM;
    let w = std::array::from_fn(|i| (m[i].conj() + s.conj() * coef[i] * target[i].conj()) * (2.0 / NORM));
    (f, w)
}

/// Fidelity after local phase correction plus bookkeeping of where the
/// missing population went.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Fidelity against the target without any correction.
    pub raw_fidelity: f64,
    pub corrected_fidelity: f64,
    /// `1 - corrected_fidelity`, written with 12 significant digits.
    #[serde(serialize_with = "serialize_sci")]
    pub infidelity: f64,
    pub alpha: f64,
    pub beta: f64,
    pub global_phase: f64,
    /// Bell-nonlocal phase defect `φ00 + φ11 - φ01 - φ10 - θ`, wrapped.
    pub residual: f64,
    pub leakage: [f64; 4],
    /// Mean norm lost from the full 9-level space per computational input.
    pub decay_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rydberg_time: Option<f64>,
}

pub(crate) fn serialize_sci<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = serde_json::value::RawValue::from_string(format!("{x:.12e}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// Bell-nonlocal combination of diagonal phases, `φ00 + φ11 - φ01 - φ10 - θ`.
pub fn bell_phase_defect(diagonal: &[C64; 4], theta: f64) -> f64 {
    wrap_angle(diagonal[0].arg() + diagonal[3].arg() - diagonal[1].arg() - diagonal[2].arg() - theta)
}

/// Controlled phase of a diagonal gate after local Z correction.
pub fn controlled_phase_of(diagonal: &[C64; 4]) -> f64 {
    bell_phase_defect(diagonal, 0.0)
}

pub fn fidelity_report(u: &Propagator, theta: f64) -> FidelityReport {
    let block = computational_block(u);
    let target = controlled_phase(theta);
    let fit = optimize_local_phases(&block.0, &target);
    let decay_loss = LevelBasis::COMPUTATIONAL
        .iter()
        .map(|&j| 1.0 - u.0.column(j).norm_squared())
        .sum::<f64>()
        / 4.0;
    FidelityReport {
        raw_fidelity: average_gate_fidelity(&block.0, &target),
        corrected_fidelity: fit.fidelity,
        infidelity: 1.0 - fit.fidelity,
        alpha: fit.alpha,
        beta: fit.beta,
        global_phase: fit.global_phase,
        residual: bell_phase_defect(&block.diagonal(), theta),
        leakage: block.leakage(),
        decay_loss,
        rydberg_time: None,
    }
}

/// Propagate a sequence and report its fidelity to `diag(1,1,1,e^{iθ})`.
pub fn evaluate_sequence(seq: &PulseSequence, params: &PhysicsParams, theta: f64) -> Result<FidelityReport> {
    Ok(fidelity_report(&propagate_sequence(seq, params)?, theta))
}

/// Scattering error `ε = P_r / τ`.
pub fn decay_error(rydberg_time: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return precondition(format!("lifetime must be positive, got {tau}"));
    }
    Ok(rydberg_time / tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: [C64; 4]) -> Mat4 {
        Mat4::from_diagonal(&nalgebra::Vector4::from(d))
    }

    #[test]
    fn identity_against_itself() {
        let t = controlled_phase(PI);
        assert!((average_gate_fidelity(&t, &t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_against_cz() {
        let f = average_gate_fidelity(&Mat4::identity(), &controlled_phase(PI));
        assert!((f - 0.4).abs() < 1e-15);
    }

    #[test]
    fn identity_against_cz_corrected() {
        let fit = optimize_local_phases(&Mat4::identity(), &controlled_phase(PI));
        assert!((fit.fidelity - 0.6).abs() < 1e-12, "{}", fit.fidelity);
        // optimum at α = β = ±π/2
        assert!((fit.alpha.abs() - PI / 2.0).abs() < 1e-8);
        assert!((fit.beta.abs() - PI / 2.0).abs() < 1e-8);
    }

    #[test]
    fn canonical_cz_needs_no_correction() {
        let fit = optimize_local_phases(&controlled_phase(PI), &controlled_phase(PI));
        assert!((fit.fidelity - 1.0).abs() < 1e-14);
        assert!(fit.alpha.abs() < 1e-9 && fit.beta.abs() < 1e-9);
    }

    #[test]
    fn local_phase_family_is_corrected() {
        let (a, b) = (0.37, -2.1);
        let m = diag([
            C64::new(1.0, 0.0),
            C64::from_polar(1.0, b),
            C64::from_polar(1.0, a),
            C64::from_polar(1.0, a + b + PI),
        ]);
        let fit = optimize_local_phases(&m, &controlled_phase(PI));
        assert!((fit.fidelity - 1.0).abs() < 1e-13);
        assert!((wrap_angle(fit.alpha - a)).abs() < 1e-8);
        assert!((wrap_angle(fit.beta - b)).abs() < 1e-8);
    }

    #[test]
    fn numeric_route_agrees_on_non_diagonal_target() {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut target = Mat4::zeros();
        target[(0, 0)] = h;
        target[(0, 1)] = h;
        target[(1, 0)] = h;
        target[(1, 1)] = -h;
        target[(2, 2)] = C64::new(1.0, 0.0);
        target[(3, 3)] = C64::new(1.0, 0.0);
        let fit = optimize_local_phases(&target, &target);
        assert!((fit.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leakage_detected() {
        let mut m = Mat4::identity();
        m[(0, 0)] = C64::new(0.8, 0.0);
        let block = ComputationalBlock(m);
        let leak = block.leakage();
        assert!((leak[0] - 0.36).abs() < 1e-15);
        assert_eq!(leak[1], 0.0);
    }

    #[test]
    fn decay_error_basic() {
        assert_eq!(decay_error(0.0, 10.0).unwrap(), 0.0);
        assert!((decay_error(3.0, 100.0).unwrap() - 0.03).abs() < 1e-16);
        assert!(decay_error(1.0, 0.0).is_err());
    }

    #[test]
    fn report_serializes_infidelity_in_scientific_notation() {
        let report = fidelity_report(&Propagator::identity(), PI);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"infidelity\":4.000000000000e-1"), "{json}");
        let back: FidelityReport = serde_json::from_str(&json).unwrap();
        assert!((back.infidelity - report.infidelity).abs() < 1e-12);
    }
}
