//! Resonant π–2π–π gate at its optimal Rabi frequency.

use rydberg_cz::analytic::{legacy_baselines, simulate_legacy_gate};

fn main() -> rydberg_cz::Result<()> {
    println!("Vτ       Ω_opt/V   closed form  simulated");
    for vtau in [1e4, 1e5, 1e6, 1e7] {
        let b = legacy_baselines(1.0, vtau)?;
        let s = simulate_legacy_gate(1.0, vtau, b.omega_opt, 32)?;
        println!("{vtau:<8.0e} {:.5}   {:.4e}   {:.4e}", b.omega_opt, b.error, s.error);
    }
    Ok(())
}
