//! Two-atom Hamiltonians in the rotating frame and exact propagation over
//! piecewise-constant pulse segments.
//!
//! Each atom has three levels ordered `|0⟩, |1⟩, |r⟩`. The two-atom basis
//! index is `3 * control + target`, so the computational states
//! `|00⟩, |01⟩, |10⟩, |11⟩` sit at indices `0, 1, 3, 4`.
//!
//! Frame convention. The target Rydberg level sits at energy `+Δ` and the
//! pair state `|rr⟩` is shifted by `-V`; the target drive couples
//! `(Ω/2) e^{iξ} |0⟩⟨r| + h.c.`. With this orientation a target pulse that
//! completes one loop multiplies `|0⟩` by `e^{-i(π + Δt/2)}` when the control
//! is dark and by `e^{-i(π + (Δ-V)t/2)}` when the control is in `|r⟩`. It is
//! the complex conjugate of the lab-frame `(-Δ, +V)` Hamiltonian with the
//! laser phase reversed, so all gate fidelities are unchanged.
//!
//! Rydberg decay is modelled as pure loss through `-iΓ/2` on every Rydberg
//! projector.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};

pub type C64 = Complex64;
pub type Mat9 = SMatrix<C64, 9, 9>;
pub type Vec9 = SVector<C64, 9>;

/// Single-atom level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Ground = 0,
    One = 1,
    Rydberg = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground, Level::One, Level::Rydberg];

    pub fn is_rydberg(self) -> bool {
        self == Level::Rydberg
    }
}

/// Fixed ordering of the 9-dimensional two-atom basis.
#[derive(Clone, Copy, Debug, Default)]
pub struct LevelBasis;

impl LevelBasis {
    pub const DIM: usize = 9;

    /// Indices of `|00⟩, |01⟩, |10⟩, |11⟩` (control, target).
    pub const COMPUTATIONAL: [usize; 4] = [0, 1, 3, 4];

    pub const fn index(control: Level, target: Level) -> usize {
        3 * control as usize + target as usize
    }

    pub fn levels(index: usize) -> (Level, Level) {
        (Level::ALL[index / 3], Level::ALL[index % 3])
    }

    /// Number of atoms in `|r⟩` for a basis index.
    pub fn rydberg_count(index: usize) -> u32 {
        let (c, t) = Self::levels(index);
        c.is_rydberg() as u32 + t.is_rydberg() as u32
    }
}

/// Interaction strength and Rydberg decay rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    /// Pair-state interaction `V` (angular frequency).
    pub v: f64,
    /// Decay rate `Γ = 1/τ` out of `|r⟩`.
    pub gamma: f64,
}

impl PhysicsParams {
    pub fn new(v: f64, gamma: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return precondition(format!("interaction V must be positive and finite, got {v}"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return precondition(format!("decay rate must be non-negative, got {gamma}"));
        }
        Ok(Self { v, gamma })
    }

    pub fn lossless(v: f64) -> Result<Self> {
        Self::new(v, 0.0)
    }

    /// `τ = 1/Γ`, or `None` without decay.
    pub fn lifetime(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| 1.0 / self.gamma)
    }

    pub fn without_decay(&self) -> Self {
        Self { v: self.v, gamma: 0.0 }
    }
}

/// One piecewise-constant interval of drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub duration: f64,
    pub omega_control: f64,
    pub omega_target: f64,
    /// Laser phase of the target drive (radians).
    pub xi: f64,
    /// Target-drive detuning.
    pub delta: f64,
}

impl PulseSegment {
    pub fn control(omega: f64, duration: f64) -> Self {
        Self { duration, omega_control: omega, omega_target: 0.0, xi: 0.0, delta: 0.0 }
    }

    pub fn target(omega: f64, delta: f64, xi: f64, duration: f64) -> Self {
        Self { duration, omega_control: 0.0, omega_target: omega, xi, delta }
    }

    /// Resonant π pulse on the control at Rabi frequency `omega`.
    pub fn control_pi(omega: f64) -> Self {
        Self::control(omega, std::f64::consts::PI / omega)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstantPulse {
    /// Zero-duration resonant π pulse on the control, `|0⟩ → -i|r⟩`,
    /// `|r⟩ → -i|0⟩`. Stands in for a control drive much faster than the
    /// target drive.
    ControlPi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PulseStep {
    Instant { instant: InstantPulse },
    Segment(PulseSegment),
}

impl PulseStep {
    pub fn duration(&self) -> f64 {
        match self {
            PulseStep::Instant { .. } => 0.0,
            PulseStep::Segment(s) => s.duration,
        }
    }
}

impl From<PulseSegment> for PulseStep {
    fn from(s: PulseSegment) -> Self {
        PulseStep::Segment(s)
    }
}

impl From<InstantPulse> for PulseStep {
    fn from(instant: InstantPulse) -> Self {
        PulseStep::Instant { instant }
    }
}

/// Ordered list of steps; the first step acts first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseSequence {
    pub steps: Vec<PulseStep>,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: impl Into<PulseStep>) -> &mut Self {
        self.steps.push(step.into());
        self
    }

    pub fn with(mut self, step: impl Into<PulseStep>) -> Self {
        self.push(step);
        self
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(PulseStep::duration).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }
}

impl FromIterator<PulseStep> for PulseSequence {
    fn from_iter<I: IntoIterator<Item = PulseStep>>(iter: I) -> Self {
        Self { steps: iter.into_iter().collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoAtomState(pub Vec9);

impl TwoAtomState {
    pub fn basis(control: Level, target: Level) -> Self {
        let mut v = Vec9::zeros();
        v[LevelBasis::index(control, target)] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn amplitude(&self, control: Level, target: Level) -> C64 {
        self.0[LevelBasis::index(control, target)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Propagator(pub Mat9);

impl Propagator {
    pub fn identity() -> Self {
        Self(Mat9::identity())
    }

    pub fn matrix(&self) -> &Mat9 {
        &self.0
    }

    pub fn apply(&self, state: &TwoAtomState) -> TwoAtomState {
        TwoAtomState(self.0 * state.0)
    }

    /// `‖U†U - 1‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.0.adjoint() * self.0 - Mat9::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_singular_value(&self) -> f64 {
        self.0.singular_values().max()
    }
}

const fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Rotating-frame Hamiltonian for one segment, including `-iΓ/2` per
/// Rydberg excitation. Hermitian when `Γ = 0`.
pub fn build_hamiltonian(segment: &PulseSegment, params: &PhysicsParams) -> Mat9 {
    use Level::*;
    let idx = LevelBasis::index;
    let mut h = Mat9::zeros();

    let half_c = c(0.5 * segment.omega_control);
    let half_t = C64::from_polar(0.5 * segment.omega_target, segment.xi);
    for other in Level::ALL {
        // control drive, target spectator
        h[(idx(Ground, other), idx(Rydberg, other))] += half_c;
        h[(idx(Rydberg, other), idx(Ground, other))] += half_c;
        // target drive, control spectator
        h[(idx(other, Ground), idx(other, Rydberg))] += half_t;
        h[(idx(other, Rydberg), idx(other, Ground))] += half_t.conj();
        h[(idx(other, Rydberg), idx(other, Rydberg))] += c(segment.delta);
    }
    h[(idx(Rydberg, Rydberg), idx(Rydberg, Rydberg))] -= c(params.v);

    if params.gamma > 0.0 {
        for i in 0..LevelBasis::DIM {
            let n = LevelBasis::rydberg_count(i) as f64;
            h[(i, i)] -= C64::new(0.0, 0.5 * params.gamma * n);
        }
    }
    h
}

/// `exp(-iHt)` by scaling and squaring.
pub fn propagate_segment(h: &Mat9, t: f64) -> Result<Propagator> {
    if !(t >= 0.0 && t.is_finite()) {
        return precondition(format!("segment duration must be non-negative, got {t}"));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if t == 0.0 {
        return Ok(Propagator::identity());
    }
    let generator = h * C64::new(0.0, -t);
    Ok(Propagator(generator.exp()))
}

/// Map of the zero-duration control π pulse.
pub fn instant_propagator(pulse: InstantPulse) -> Propagator {
    match pulse {
        InstantPulse::ControlPi => {
            use Level::*;
            let idx = LevelBasis::index;
            let mut u = Mat9::zeros();
            let minus_i = C64::new(0.0, -1.0);
            for t in Level::ALL {
                u[(idx(Rydberg, t), idx(Ground, t))] = minus_i;
                u[(idx(Ground, t), idx(Rydberg, t))] = minus_i;
                u[(idx(One, t), idx(One, t))] = c(1.0);
            }
            Propagator(u)
        }
    }
}

pub fn step_propagator(step: &PulseStep, params: &PhysicsParams) -> Result<Propagator> {
    match step {
        PulseStep::Instant { instant } => Ok(instant_propagator(*instant)),
        PulseStep::Segment(s) => propagate_segment(&build_hamiltonian(s, params), s.duration),
    }
}

/// Time-ordered product, last step leftmost.
pub fn propagate_sequence(seq: &PulseSequence, params: &PhysicsParams) -> Result<Propagator> {
    seq.steps.iter().try_fold(Propagator::identity(), |acc, step| {
        let u = step_propagator(step, params)?;
        Ok(Propagator(u.0 * acc.0))
    })
}

/// States after each step, starting with `initial`.
pub fn trajectory(
    seq: &PulseSequence,
    params: &PhysicsParams,
    initial: &TwoAtomState,
) -> Result<Vec<TwoAtomState>> {
    let mut out = Vec::with_capacity(seq.len() + 1);
    out.push(*initial);
    let mut psi = *initial;
    for step in &seq.steps {
        psi = step_propagator(step, params)?.apply(&psi);
        out.push(psi);
    }
    Ok(out)
}

/// `∫₀^T e^{iωs} ds`.
fn phase_integral(omega: f64, t: f64) -> C64 {
    let x = omega * t;
    if x.abs() < 1e-4 {
        // series keeps the small-ω limit accurate
        C64::new(t * (1.0 - x * x / 6.0), t * (x / 2.0 - x * x * x / 24.0))
    } else {
        (C64::from_polar(1.0, x) - 1.0) / C64::new(0.0, omega)
    }
}

/// Time-integrated Rydberg population `∫ dt ⟨ψ|N_r|ψ⟩`, where `N_r` counts
/// the number of atoms in `|r⟩` (so `|rr⟩` has weight 2).
///
/// Evaluated exactly per segment from the eigendecomposition of the
/// Hermitian segment Hamiltonian, so it requires `Γ = 0`.
pub fn integrated_rydberg_population(
    seq: &PulseSequence,
    params: &PhysicsParams,
    initial: &TwoAtomState,
) -> Result<f64> {
    if params.gamma != 0.0 {
        return precondition("integrated Rydberg population is defined on the lossless trajectory (Γ = 0)");
    }
    let weight: [f64; 9] = std::array::from_fn(|i| LevelBasis::rydberg_count(i) as f64);
    let mut psi = initial.0;
    let mut total = 0.0;
    for step in &seq.steps {
        match step {
            PulseStep::Instant { instant } => psi = instant_propagator(*instant).0 * psi,
            PulseStep::Segment(s) => {
                if s.duration == 0.0 {
                    continue;
                }
                let h = build_hamiltonian(s, params);
                if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                let eig = h.symmetric_eigen();
                let q = eig.eigenvectors;
                let lambda = eig.eigenvalues;
                let coeff = q.adjoint() * psi;
                // W' = Q† W Q
                let mut wq = q;
                for (i, w) in weight.iter().enumerate() {
                    wq.row_mut(i).scale_mut(*w);
                }
                let w_eig = q.adjoint() * wq;
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..9 {
                    for k in 0..9 {
                        let amp = coeff[j].conj() * coeff[k] * w_eig[(j, k)];
                        if amp.norm() == 0.0 {
                            continue;
                        }
                        acc += amp * phase_integral(lambda[j] - lambda[k], s.duration);
                    }
                }
                total += acc.re;
                let evolved = SVector::<C64, 9>::from_fn(|k, _| {
                    coeff[k] * C64::from_polar(1.0, -lambda[k] * s.duration)
                });
                psi = q * evolved;
            }
        }
    }
    Ok(total)
}

/// Integrated Rydberg population averaged over the four computational
/// basis states.
pub fn basis_averaged_rydberg_population(seq: &PulseSequence, params: &PhysicsParams) -> Result<f64> {
    let mut sum = 0.0;
    for &i in &LevelBasis::COMPUTATIONAL {
        let (c, t) = LevelBasis::levels(i);
        sum += integrated_rydberg_population(seq, params, &TwoAtomState::basis(c, t))?;
    }
    Ok(sum / 4.0)
}
