//! Controlled-θ gates from the detuned single-loop design.

use std::f64::consts::PI;

use rydberg_cz::analytic::{design_phase_gate, design_phase_gate_loops, simulated_controlled_phase};

fn main() -> rydberg_cz::Result<()> {
    for theta in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI] {
        let d = design_phase_gate(theta, 1.0)?;
        let sim = simulated_controlled_phase(&d)?;
        println!("θ={:.3}π  Ω/V={:.4}  t·V={:.4}  simulated θ={:.9}π", theta / PI, d.omega, d.t_target, sim / PI);
    }
    // two loops of the π/4 design give a controlled π/2
    let d = design_phase_gate_loops(PI / 4.0, 1.0, 2)?;
    println!("2 loops of π/4: simulated θ={:.9}π", simulated_controlled_phase(&d)? / PI);
    Ok(())
}
