//! Shortest duration reaching 1 - F* ≤ 1e-8 at a few operating points.

use std::f64::consts::PI;

use rydberg_cz::optimizer::{evaluate_waveform, time_optimal_search, OperatingPoint, OptimizerConfig};

fn main() -> rydberg_cz::Result<()> {
    let config = OptimizerConfig::default();
    for (label, op) in [
        ("analytic", OperatingPoint::analytic(1.0)?),
        ("Ω/V = 5", OperatingPoint::new(5.0, 1.0)?),
        ("Ω/V = 0.2", OperatingPoint::new(0.2, 1.0)?),
    ] {
        let r = time_optimal_search(&op, &config)?;
        let w = &r.result.waveform;
        println!(
            "{label:<10} t·Ω={:.4}  t·V/2π={:.4}  probes={}  1-F*={:.1e}  |Δ|max/Ω={:.2}",
            r.duration * op.omega,
            r.duration * op.v / (2.0 * PI),
            r.probes.len(),
            evaluate_waveform(w, 0.0)?.infidelity,
            w.detuning_proxy_max() / op.omega,
        );
    }
    Ok(())
}
