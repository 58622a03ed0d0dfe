//! Phase waveform insensitive to a static Rabi-frequency offset.

use rydberg_cz::optimizer::{
    evaluate_shifted, robust_optimize, symmetric_grid, OperatingPoint, OptimizerConfig, PhaseWaveform,
    RobustParameter, RobustSpec,
};

fn main() -> rydberg_cz::Result<()> {
    let op = OperatingPoint::analytic(1.0)?;
    let t_opt = op.analytic_duration();
    let spec = RobustSpec::new(RobustParameter::Rabi);
    let r = robust_optimize(&op, 2.0 * t_opt, &spec, &OptimizerConfig::robust())?;
    let flat = PhaseWaveform::flat(op, 1, t_opt)?;

    println!("δΩ/Ω     flat       robust");
    for x in symmetric_grid(0.1, 9) {
        let f = evaluate_shifted(&flat, RobustParameter::Rabi, x, 0.0)?.infidelity;
        let g = evaluate_shifted(&r.waveform, RobustParameter::Rabi, x, 0.0)?.infidelity;
        println!("{x:+.3}   {f:.3e}  {g:.3e}");
    }
    println!("restart {} status {:?}, |Δ|max ≈ {:.2}Ω", r.restart, r.status, r.waveform.detuning_proxy_max() / op.omega);
    Ok(())
}
