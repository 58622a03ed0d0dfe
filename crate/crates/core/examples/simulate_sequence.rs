//! Build a pulse sequence by hand, write it to JSON, read it back and
//! report its fidelity to CZ with and without decay.

use std::f64::consts::PI;

use rydberg_cz::dynamics::{InstantPulse, PhysicsParams, PulseSegment, PulseSequence};
use rydberg_cz::fidelity::evaluate_sequence;
use rydberg_cz::io::{read_sequence, write_sequence};

fn main() -> rydberg_cz::Result<()> {
    let omega = 3f64.sqrt() / 2.0;
    let seq = PulseSequence::new()
        .with(InstantPulse::ControlPi)
        .with(PulseSegment::target(omega, 0.5, 0.0, 2.0 * PI))
        .with(InstantPulse::ControlPi);

    let path = std::env::temp_dir().join("rydberg_cz_sequence.json");
    write_sequence(&path, &seq)?;
    let seq = read_sequence(&path)?;

    for gamma in [0.0, 1e-4, 1e-3] {
        let r = evaluate_sequence(&seq, &PhysicsParams::new(1.0, gamma)?, PI)?;
        println!(
            "Γ/V={gamma:.0e}: 1-F*={:.4e}  decay loss={:.3e}  phase defect={:.1e}",
            r.infidelity, r.decay_loss, r.residual
        );
    }
    Ok(())
}
