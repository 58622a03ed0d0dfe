//! Detuning branches for unequal loop counts and the gate phases they reach.

use std::f64::consts::PI;

use rydberg_cz::analytic::{branch_curve, design_branch, simulated_controlled_phase, Branch};

fn main() -> rydberg_cz::Result<()> {
    let (n0, nv) = (2, 1);
    let grid: Vec<f64> = (1..=12).map(|k| 0.055 * k as f64).collect();
    println!("Ω/V      Δ+/V      Δ-/V      θ+/π      θ-/π");
    for p in branch_curve(n0, nv, &grid, 1.0)? {
        let f = |x: Option<f64>, s: f64| x.map_or("      -".into(), |x| format!("{:9.4}", x / s));
        println!(
            "{:.3} {} {} {} {}",
            p.omega_over_v,
            f(p.delta_plus, 1.0),
            f(p.delta_minus, 1.0),
            f(p.theta_plus, PI),
            f(p.theta_minus, PI)
        );
    }
    let d = design_branch(n0, nv, 0.4, 1.0, Branch::Minus)?;
    println!("Ω/V=0.4, Δ-: predicted θ={:.6}π, simulated {:.6}π", d.theta / PI, simulated_controlled_phase(&d)? / PI);
    Ok(())
}
