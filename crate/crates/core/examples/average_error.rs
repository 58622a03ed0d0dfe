//! Gaussian-averaged error of Rabi-robust pulses versus duration, with and
//! without Rydberg decay.

use std::f64::consts::PI;

use rydberg_cz::optimizer::{
    robust_optimize, weighted_average_error, NoiseModel, OperatingPoint, OptimizerConfig, PhaseWaveform,
    RobustParameter, RobustSpec,
};

fn main() -> rydberg_cz::Result<()> {
    let op = OperatingPoint::analytic(1.0)?;
    let t_opt = op.analytic_duration();
    let noise = NoiseModel::new(0.02)?;
    let gamma = op.omega / (2.0 * PI * 150.0);
    let spec = RobustSpec::new(RobustParameter::Rabi);

    println!("t/t_opt  decay-free  with decay");
    for m in [1.0, 1.25, 1.5, 2.0, 2.5, 3.0] {
        let w = if m == 1.0 {
            PhaseWaveform::flat(op, 1, t_opt)?
        } else {
            robust_optimize(&op, m * t_opt, &spec, &OptimizerConfig::robust())?.waveform
        };
        let free = weighted_average_error(&w, &noise, 0.0)?;
        let decay = weighted_average_error(&w, &noise, gamma)?;
        println!("{m:<8} {:.3e}   {:.3e}", free.infidelity, decay.infidelity);
    }
    Ok(())
}
