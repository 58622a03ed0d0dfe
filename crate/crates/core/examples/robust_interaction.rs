//! Phase waveform insensitive to a static interaction offset.

use rydberg_cz::optimizer::{
    fidelity_scan, robust_optimize, symmetric_grid, OperatingPoint, OptimizerConfig, PhaseWaveform,
    RobustParameter, RobustSpec,
};

fn main() -> rydberg_cz::Result<()> {
    let op = OperatingPoint::analytic(1.0)?;
    let t_opt = op.analytic_duration();
    let spec = RobustSpec::new(RobustParameter::Interaction);
    let r = robust_optimize(&op, 1.5 * t_opt, &spec, &OptimizerConfig::robust())?;
    let grid = symmetric_grid(0.1, 9);
    let flat = fidelity_scan(&PhaseWaveform::flat(op, 1, t_opt)?, RobustParameter::Interaction, &grid, 0.0)?;
    let robust = fidelity_scan(&r.waveform, RobustParameter::Interaction, &grid, 0.0)?;

    println!("δV/V     flat       robust");
    for (a, b) in flat.iter().zip(&robust) {
        println!("{:+.3}   {:.3e}  {:.3e}", a.param_frac_error, a.infidelity, b.infidelity);
    }
    println!("|Δ|max ≈ {:.2}Ω", r.waveform.detuning_proxy_max() / op.omega);
    Ok(())
}
