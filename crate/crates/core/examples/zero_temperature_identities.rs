//! At T = 0 the qubit-phonon state stays pure, so the entropy and the
//! Negativity follow from the degree of coherence alone. This builds the
//! dense joint state for two modes and compares.
//!
//! cargo run --release --example zero_temperature_identities

use num_complex::Complex64;
use phonon_entanglement::assembly::{assemble_joint_state, evolve_blocks};
use phonon_entanglement::fock::{select_cutoffs, CutoffPolicy};
use phonon_entanglement::measures::{coherence_of_state, negativity_of_state, pure_state_entropy, reduced_state_entropy};
use phonon_entanglement::model::{build_mode_grid, Environment, Kelvin, MaterialParams, QubitParams};

fn main() -> phonon_entanglement::Result<()> {
    let alpha = Complex64::new(0.6, 0.0);
    let beta = Complex64::from_polar(0.8, 1.1);
    let qubit = QubitParams::new(0.5, alpha, beta)?;
    let grid = build_mode_grid(0.001, 0.9, 2, &MaterialParams::default())?;
    let policy = CutoffPolicy { tail_epsilon: 1e-12, ..CutoffPolicy::default() };
    let cutoffs = select_cutoffs(&grid, Kelvin(0.0), 1.5, &policy)?;
    println!("cutoffs {:?}", cutoffs.cutoffs);
    let env = Environment::new(grid, Kelvin(0.0), cutoffs.cutoffs, policy.dim_cap)?;

    println!("{:>5} {:>9} {:>12} {:>12} {:>12} {:>12}", "t", "|u|", "S", "S closed", "N", "N closed");
    for i in 1..=6 {
        let t = 0.25 * i as f64;
        let blocks = evolve_blocks(&env, t)?;
        let state = assemble_joint_state(&blocks, &qubit, t)?;
        let u = coherence_of_state(&blocks);
        println!(
            "{t:>5.2} {u:>9.6} {:>12.9} {:>12.9} {:>12.9} {:>12.9}",
            reduced_state_entropy(&state),
            pure_state_entropy(u, alpha, beta),
            negativity_of_state(&state)?.value,
            alpha.norm() * beta.norm() * (1.0 - u * u).sqrt(),
        );
    }
    Ok(())
}
