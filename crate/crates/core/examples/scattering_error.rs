//! Scattering error versus control ratio p, formula against simulation.

use rydberg_cz::analytic::{ddp_bound, error_curve, MTO_ERROR_RATIO};

fn main() -> rydberg_cz::Result<()> {
    let vtau = 1e5;
    let grid = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0];
    println!("p      ε·Vτ formula  simulated  t·V/2π   ratio to bound");
    for p in error_curve(&grid, vtau)? {
        println!(
            "{:<6} {:.5}       {:.5}    {:.4}   {:.4}",
            p.p, p.formula_error_vtau, p.simulated_error_vtau, p.duration_v_over_2pi, p.ratio_to_ddp
        );
    }
    println!("bound ε·Vτ = {:.5}, mTO reference ratio {MTO_ERROR_RATIO}", ddp_bound(1.0, vtau)? * vtau);
    Ok(())
}
