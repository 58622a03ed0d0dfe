//! Analytic CZ design at several control ratios, checked by simulation.

use rydberg_cz::analytic::{design_cz, scattering_error, simulated_infidelity, ControlRatio};
use rydberg_cz::dynamics::basis_averaged_rydberg_population;

fn main() -> rydberg_cz::Result<()> {
    let v = 1.0;
    for p in [ControlRatio::Finite(1.0), ControlRatio::Finite(4.0), ControlRatio::Instant] {
        let d = design_cz(v, p)?;
        let phases = d.phases();
        let pr = basis_averaged_rydberg_population(&d.sequence(), &d.params(0.0)?)?;
        println!(
            "p={p:?}: Ω={:.4} Δ={:.2} t_gate={:.4}  φ={:.4}π φ_V={:.4}π  1-F={:.1e}  P_r·V={:.4} (formula {:.4})",
            d.omega,
            d.delta,
            d.gate_duration(),
            phases.phi / std::f64::consts::PI,
            phases.phi_v / std::f64::consts::PI,
            simulated_infidelity(&d, 0.0)?,
            pr,
            scattering_error(p, v, 1.0)?,
        );
    }
    Ok(())
}
