//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//!     cargo test -p rydberg-cz --test acceptance

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydberg_cz::analytic::{
    branch_curve, design_branch, design_cz, design_phase_gate, ddp_bound, legacy_baselines, scattering_error,
    simulate_legacy_gate, simulated_controlled_phase, simulated_infidelity, target_pulse_phases, Branch,
    ControlRatio,
};
use rydberg_cz::dynamics::{
    basis_averaged_rydberg_population, propagate_sequence, trajectory, Level, PhysicsParams, PulseSegment,
    PulseSequence, TwoAtomState,
};
use rydberg_cz::fidelity::{computational_block, controlled_phase, optimize_local_phases, wrap_angle, Mat4};
use rydberg_cz::optimizer::{
    evaluate_shifted, evaluate_waveform, grape_gradient, objective_value, optimize, robust_optimize,
    time_optimal_search, weighted_average_error, NoiseModel, Objective, OperatingPoint, OptimizerConfig,
    PhaseWaveform, RobustParameter, RobustSpec,
};
use rydberg_cz::dynamics::C64;

// tolerances
const COHERENT_TOL: f64 = 1e-10;
const SCATTERING_REL: f64 = 0.02;
const DDP_RATIO_REL: f64 = 0.01;
const POPULATION_REL: f64 = 0.005;
const PHASE_TOL: f64 = 1e-9;
const GATE_PHASE_TOL: f64 = 1e-6;
const BRANCH_SPAN: f64 = 0.95 * PI;
const BRANCH_RESIDUAL: f64 = 1e-10;
const LEGACY_REL: f64 = 0.05;
const LEGACY_SLOPE_TOL: f64 = 0.03;
const ANALYTIC_DURATION: f64 = 5.441;
const ANALYTIC_DURATION_REL: f64 = 0.01;
/// Bisection stops at this relative width, so a bound can be undershot by it.
const SEARCH_RESOLUTION: f64 = 1e-3;
const TARGET_INFIDELITY: f64 = 1e-8;
const RABI_IMPROVEMENT: f64 = 4.0;
const INTERACTION_IMPROVEMENT: f64 = 2.0;
const DETUNING_REFERENCE: f64 = 2.8;
const DETUNING_FACTOR: f64 = 1.5;
const GRADIENT_REL: f64 = 1e-5;
const BLOCK_TOL: f64 = 1e-10;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} [{id}] {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1(r: &mut Report) {
    let mut worst: f64 = 0.0;
    for p in [ControlRatio::Finite(1.0), ControlRatio::Finite(4.0), ControlRatio::Instant] {
        let d = design_cz(1.0, p).unwrap();
        worst = worst.max(simulated_infidelity(&d, 0.0).unwrap());
    }
    r.line("1 coherent CZ", worst <= COHERENT_TOL, format!("max infidelity over p=1,4,inf: {worst:.3e}"));
}

fn criterion_2(r: &mut Report) {
    let vtau = 1e5;
    let mut ok = true;
    let mut parts = Vec::new();
    let simulated = |p: ControlRatio| {
        let d = design_cz(1.0, p).unwrap();
        simulated_infidelity(&d, 1.0 / vtau).unwrap()
    };
    for p in [1.0, 2.0, 10.0] {
        let sim = simulated(ControlRatio::Finite(p));
        let formula = scattering_error(ControlRatio::Finite(p), 1.0, vtau).unwrap();
        let e = rel(sim, formula);
        ok &= e <= SCATTERING_REL;
        parts.push(format!("p={p}: rel {e:.2e}"));
    }
    let ddp = ddp_bound(1.0, vtau).unwrap();
    let r1 = simulated(ControlRatio::Finite(1.0)) / ddp;
    let rinf = simulated(ControlRatio::Instant) / ddp;
    ok &= rel(r1, 2.39) <= DDP_RATIO_REL && rel(rinf, 1.68) <= DDP_RATIO_REL;
    parts.push(format!("ratio p=1 {r1:.4}, p=inf {rinf:.4}"));
    r.line("2 scattering error", ok, parts.join("; "));
}

fn criterion_3(r: &mut Report) {
    let d = design_cz(1.0, ControlRatio::Finite(1.0)).unwrap();
    let pr = basis_averaged_rydberg_population(&d.sequence(), &d.params(0.0).unwrap()).unwrap();
    let expected = PI * (33.0 + 8.0 * 3f64.sqrt()) / 24.0;
    let e = rel(pr, expected);
    r.line("3 Rydberg population", e <= POPULATION_REL, format!("P_r·V = {pr:.6} vs {expected:.6}, rel {e:.2e}"));
}

fn criterion_4(r: &mut Report) {
    let d = design_cz(1.0, ControlRatio::Instant).unwrap();
    let est = target_pulse_phases(d.omega, d.delta, d.v, d.t_target);
    let dphi = (est.phases.phi - 1.5 * PI).abs().max((est.phases.phi_v - 0.5 * PI).abs());
    let u = propagate_sequence(&d.sequence(), &d.params(0.0).unwrap()).unwrap();
    let m = computational_block(&u).diagonal();
    // |10⟩ picks up e^{-iφ}; |00⟩ passes the blocked loop and two control π pulses
    let sim = wrap_angle(m[2].arg() + est.phases.phi).abs().max(wrap_angle((-m[0]).arg() + est.phases.phi_v).abs());
    r.line(
        "4 phase values",
        dphi <= PHASE_TOL && sim <= PHASE_TOL && est.on_manifold,
        format!("|Δ(φ,φ_V)| = {dphi:.2e}, simulated diagonal mismatch {sim:.2e}"),
    );
}

fn criterion_5(r: &mut Report) {
    let mut worst: f64 = 0.0;
    for theta in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI] {
        let d = design_phase_gate(theta, 1.0).unwrap();
        worst = worst.max(wrap_angle(simulated_controlled_phase(&d).unwrap() - theta).abs());
    }
    let grid: Vec<f64> = (1..=4000).map(|k| 2.0 / 3.0 * k as f64 / 4000.0).collect();
    let curve = branch_curve(2, 1, &grid, 1.0).unwrap();
    let thetas: Vec<f64> = curve.iter().flat_map(|p| [p.theta_plus, p.theta_minus]).flatten().collect();
    let lo = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let residual = curve.iter().filter_map(|p| p.residual).fold(0.0, f64::max);
    // a few branch designs through the full simulation
    let mut branch_sim: f64 = 0.0;
    for (omega, b) in [(0.2, Branch::Plus), (0.4, Branch::Minus), (0.6, Branch::Plus)] {
        let d = design_branch(2, 1, omega, 1.0, b).unwrap();
        branch_sim = branch_sim.max(wrap_angle(simulated_controlled_phase(&d).unwrap() - d.theta).abs());
    }
    r.line(
        "5 phase gates",
        worst <= GATE_PHASE_TOL && branch_sim <= GATE_PHASE_TOL && lo <= -BRANCH_SPAN && hi >= BRANCH_SPAN
            && residual <= BRANCH_RESIDUAL,
        format!(
            "θ error {worst:.2e}; branch θ span [{:.4}π, {:.4}π], residual {residual:.2e}, simulated {branch_sim:.2e}",
            lo / PI,
            hi / PI
        ),
    );
}

fn criterion_6(r: &mut Report) {
    let sim = |vtau: f64| {
        let b = legacy_baselines(1.0, vtau).unwrap();
        (simulate_legacy_gate(1.0, vtau, b.omega_opt, 32).unwrap().error, b.error)
    };
    let (e6, closed) = sim(1e6);
    let e = rel(e6, closed);
    let xs: [f64; 4] = [1e4, 1e5, 1e6, 1e7];
    let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x.log10(), sim(x).0.log10())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    r.line(
        "6 legacy baseline",
        e <= LEGACY_REL && (slope + 2.0 / 3.0).abs() <= LEGACY_SLOPE_TOL,
        format!("Vτ=1e6: {e6:.4e} vs {closed:.4e} (rel {e:.2e}); slope {slope:.4}"),
    );
}

fn criterion_7(r: &mut Report) {
    let config = OptimizerConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();

    let op = OperatingPoint::analytic(1.0).unwrap();
    let res = time_optimal_search(&op, &config).unwrap();
    let t_omega = res.duration * op.omega;
    // the flat waveform reaches the target at 2π/V and the search finds nothing shorter
    let flat = PhaseWaveform::flat(op, config.n, op.analytic_duration()).unwrap();
    let flat_inf = evaluate_waveform(&flat, 0.0).unwrap().infidelity;
    let flat_optimal = res.duration >= op.analytic_duration() * (1.0 - SEARCH_RESOLUTION)
        && res.duration <= op.analytic_duration() * (1.0 + SEARCH_RESOLUTION);
    let full = evaluate_waveform(&res.result.waveform, 0.0).unwrap().infidelity;
    ok &= rel(t_omega, ANALYTIC_DURATION) <= ANALYTIC_DURATION_REL
        && flat_inf <= TARGET_INFIDELITY
        && flat_optimal
        && full <= TARGET_INFIDELITY;
    parts.push(format!("analytic tΩ {t_omega:.4} (flat 1-F {flat_inf:.1e})"));

    let op = OperatingPoint::new(20.0, 1.0).unwrap();
    let res = time_optimal_search(&op, &config).unwrap();
    let x = res.duration / (PI / op.v);
    let full = evaluate_waveform(&res.result.waveform, 0.0).unwrap().infidelity;
    ok &= (1.0 - SEARCH_RESOLUTION..=1.10).contains(&x) && full <= TARGET_INFIDELITY;
    parts.push(format!("Ω/V=20 t/(π/V) {x:.4}"));

    let op = OperatingPoint::new(1.0, 20.0).unwrap();
    let res = time_optimal_search(&op, &config).unwrap();
    let x = res.duration / (2.0 * PI / op.omega);
    let full = evaluate_waveform(&res.result.waveform, 0.0).unwrap().infidelity;
    ok &= (1.0 - SEARCH_RESOLUTION..=1.05).contains(&x) && full <= TARGET_INFIDELITY;
    parts.push(format!("V/Ω=20 t/(2π/Ω) {x:.4}"));

    r.line("7 time-optimal search", ok, parts.join("; "));
}

fn robust(parameter: RobustParameter, duration: f64) -> PhaseWaveform {
    let op = OperatingPoint::analytic(1.0).unwrap();
    robust_optimize(&op, duration, &RobustSpec::new(parameter), &OptimizerConfig::robust()).unwrap().waveform
}

/// Smaller of the two improvement factors at `±frac`.
fn improvement(w: &PhaseWaveform, flat: &PhaseWaveform, parameter: RobustParameter, frac: f64) -> (f64, f64) {
    let f = |w: &PhaseWaveform, x: f64| evaluate_shifted(w, parameter, x, 0.0).unwrap().infidelity;
    (f(flat, -frac) / f(w, -frac), f(flat, frac) / f(w, frac))
}

fn criterion_8(r: &mut Report) {
    let op = OperatingPoint::analytic(1.0).unwrap();
    let t_opt = op.analytic_duration();
    let flat = PhaseWaveform::flat(op, 1, t_opt).unwrap();
    let gamma = op.omega / (2.0 * PI * 150.0);
    let noise = NoiseModel::new(0.02).unwrap();

    let w2 = robust(RobustParameter::Rabi, 2.0 * t_opt);
    let (lo, hi) = improvement(&w2, &flat, RobustParameter::Rabi, 0.05);
    let edge_ok = lo.min(hi) >= RABI_IMPROVEMENT;
    r.line(
        "8a robust Rabi ±5%",
        edge_ok,
        format!("improvement {lo:.2}x / {hi:.2}x, |Δ|max {:.2}Ω", w2.detuning_proxy_max() / op.omega),
    );

    let flat_avg = weighted_average_error(&flat, &noise, 0.0).unwrap().infidelity;
    let flat_decay = weighted_average_error(&flat, &noise, gamma).unwrap().infidelity;
    let mut curve = vec![(1.0, flat_avg, flat_decay)];
    for m in [1.25, 1.5, 1.75, 2.0, 2.5, 3.0] {
        let w = if m == 2.0 { w2.clone() } else { robust(RobustParameter::Rabi, m * t_opt) };
        let free = weighted_average_error(&w, &noise, 0.0).unwrap().infidelity;
        let decay = weighted_average_error(&w, &noise, gamma).unwrap().infidelity;
        curve.push((m, free, decay));
    }
    let beats = curve.iter().filter(|c| c.0 >= 1.5).all(|c| c.1 < flat_avg);
    let table: Vec<String> = curve.iter().map(|c| format!("{}:{:.2e}", c.0, c.1)).collect();
    r.line("8b σ=2% average, decay-free", beats, format!("flat {flat_avg:.2e}; t/t_opt {}", table.join(" ")));

    let argmin = curve.iter().min_by(|a, b| a.2.total_cmp(&b.2)).unwrap().0;
    let table: Vec<String> = curve.iter().map(|c| format!("{}:{:.2e}", c.0, c.2)).collect();
    r.line(
        "8c σ=2% average with decay, minimum in [1.5, 3]",
        (1.5..=3.0).contains(&argmin),
        format!("argmin t/t_opt = {argmin}; {}", table.join(" ")),
    );
}

fn criterion_9(r: &mut Report) {
    let op = OperatingPoint::analytic(1.0).unwrap();
    let t_opt = op.analytic_duration();
    let flat = PhaseWaveform::flat(op, 1, t_opt).unwrap();
    let w = robust(RobustParameter::Interaction, 1.5 * t_opt);
    let (lo, hi) = improvement(&w, &flat, RobustParameter::Interaction, 0.05);
    let dmax = w.detuning_proxy_max() / op.omega;
    let ratio = dmax / DETUNING_REFERENCE;
    r.line(
        "9 robust interaction ±5%",
        lo.min(hi) >= INTERACTION_IMPROVEMENT && (1.0 / DETUNING_FACTOR..=DETUNING_FACTOR).contains(&ratio),
        format!("improvement {lo:.2}x / {hi:.2}x, |Δ|max {dmax:.2}Ω"),
    );
}

fn random_waveform(rng: &mut ChaCha8Rng, n: usize) -> PhaseWaveform {
    let op = OperatingPoint::with_detuning(rng.random_range(0.3..2.0), rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0))
        .unwrap();
    let xi = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
    PhaseWaveform::new(op, rng.random_range(2.0..10.0), xi).unwrap()
}

fn criterion_10(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let mut unitarity: f64 = 0.0;
    let mut norm_ok = true;
    for _ in 0..20 {
        let mut seq = PulseSequence::new();
        for _ in 0..4 {
            seq.push(PulseSegment {
                duration: rng.random_range(0.1..3.0),
                omega_control: rng.random_range(0.0..2.0),
                omega_target: rng.random_range(0.0..2.0),
                xi: rng.random_range(-PI..PI),
                delta: rng.random_range(-2.0..2.0),
            });
        }
        let v = rng.random_range(0.2..5.0);
        unitarity = unitarity.max(propagate_sequence(&seq, &PhysicsParams::lossless(v).unwrap()).unwrap().unitarity_defect());
        let lossy = PhysicsParams::new(v, rng.random_range(0.01..0.5)).unwrap();
        let states = trajectory(&seq, &lossy, &TwoAtomState::basis(Level::Ground, Level::Ground)).unwrap();
        norm_ok &= states.windows(2).all(|s| s[1].norm_sqr() <= s[0].norm_sqr() + 1e-14);
    }

    let mut grad_err: f64 = 0.0;
    for n in [4, 16, 64] {
        let w = random_waveform(&mut rng, n);
        let g = grape_gradient(&w, &Objective::Nominal);
        for k in 0..n {
            let h = 1e-6;
            let mut a = w.clone();
            let mut b = w.clone();
            a.xi[k] += h;
            b.xi[k] -= h;
            let fd = (objective_value(&a, &Objective::Nominal) - objective_value(&b, &Objective::Nominal)) / (2.0 * h);
            grad_err = grad_err.max((g[k] - fd).abs() / (fd.abs() + 1e-5));
        }
    }

    let mut gauge: f64 = 0.0;
    let target = controlled_phase(PI);
    for _ in 0..20 {
        let d: [C64; 4] = std::array::from_fn(|_| C64::from_polar(rng.random_range(0.8..1.0), rng.random_range(-PI..PI)));
        let (a, b, c): (f64, f64, f64) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let phases = [0.0, b, a, a + b];
        let m = Mat4::from_diagonal(&d.into());
        let m2 = Mat4::from_diagonal(&std::array::from_fn::<C64, 4, _>(|i| d[i] * C64::from_polar(1.0, phases[i] + c)).into());
        gauge = gauge.max((optimize_local_phases(&m, &target).fidelity - optimize_local_phases(&m2, &target).fidelity).abs());
    }

    let mut scale: f64 = 0.0;
    let mut block: f64 = 0.0;
    for _ in 0..10 {
        let w = random_waveform(&mut rng, 8);
        let f0 = evaluate_waveform(&w, 0.0).unwrap().infidelity;
        let s = rng.random_range(0.1..10.0);
        let ws = PhaseWaveform { omega: w.omega * s, v: w.v * s, delta: w.delta * s, duration: w.duration / s, ..w.clone() };
        scale = scale.max((evaluate_waveform(&ws, 0.0).unwrap().infidelity - f0).abs());
        block = block.max((objective_value(&w, &Objective::Nominal) - f0).abs());
    }

    let op = OperatingPoint::analytic(1.0).unwrap();
    let config = OptimizerConfig { n: 16, restarts: 4, seed: 7, ..OptimizerConfig::default() };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| optimize(&op, 1.2 * op.analytic_duration(), &config, &Objective::Nominal).unwrap())
    };
    let deterministic = run(1) == run(1) && run(1) == run(3);

    let ok = unitarity <= 1e-12
        && norm_ok
        && grad_err <= GRADIENT_REL
        && gauge <= 1e-12
        && scale <= 1e-10
        && block <= BLOCK_TOL
        && deterministic;
    r.line(
        "10 property suites",
        ok,
        format!(
            "unitarity {unitarity:.1e}, norm monotone {norm_ok}, gradient rel {grad_err:.1e}, gauge {gauge:.1e}, \
             scale {scale:.1e}, block {block:.1e}, deterministic {deterministic}"
        ),
    );
}

fn main() {
    let mut r = Report { failures: 0 };
    let criteria: [(&str, fn(&mut Report)); 10] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
    ];
    let start = Instant::now();
    for (id, f) in criteria {
        let t = Instant::now();
        f(&mut r);
        eprintln!("  criterion {id}: {:.1}s", t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} failed, {:.0}s", r.failures, start.elapsed().as_secs_f64());
    if r.failures > 0 {
        std::process::exit(1);
    }
}
