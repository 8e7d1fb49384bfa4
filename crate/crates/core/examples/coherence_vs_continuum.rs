//! Degree of coherence for a few discrete mode grids against the
//! continuum-limit integral, at 6 K.
//!
//! cargo run --release --example coherence_vs_continuum

use phonon_entanglement::continuum::{continuum_coherence, continuum_plateau, QuadratureSpec};
use phonon_entanglement::measures::dephasing_exponent;
use phonon_entanglement::model::{build_mode_grid, Kelvin, MaterialParams};

fn main() -> phonon_entanglement::Result<()> {
    let material = MaterialParams::default();
    let temperature = Kelvin(6.0);
    let quadrature = QuadratureSpec::default();
    let grids = [3, 5, 100]
        .into_iter()
        .map(|n| build_mode_grid(0.001, 0.9, n, &material))
        .collect::<Result<Vec<_>, _>>()?;

    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "t/ps", "n=3", "n=5", "n=100", "continuum");
    for i in 0..=16 {
        let t = 0.5 * i as f64;
        let mut row = format!("{t:>6.2}");
        for grid in &grids {
            let u = (-dephasing_exponent(&grid.modes, temperature, t)?).exp();
            row += &format!(" {u:>10.6}");
        }
        row += &format!(" {:>10.6}", continuum_coherence(&material, temperature, t, &quadrature)?);
        println!("{row}");
    }
    println!("plateau: {:.6}", continuum_plateau(&material, temperature, &quadrature)?);
    println!("n=3 refocuses every {:.3} ps", grids[0].cycle_time(&material));
    Ok(())
}
