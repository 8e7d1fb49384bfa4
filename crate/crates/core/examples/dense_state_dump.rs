//! Builds the full qubit-phonon density matrix at finite temperature,
//! checks trace and purity, and writes it in the binary dump format.
//!
//! cargo run --release --example dense_state_dump -- /tmp/sigma.bin

use std::fs::File;
use std::io::BufWriter;

use phonon_entanglement::assembly::{assemble_joint_state, evolve_blocks, read_state_dump, write_state_dump};
use phonon_entanglement::fock::{select_cutoffs, CutoffPolicy};
use phonon_entanglement::measures::{negativity_of_state, purity_closed_form, purity_of_state};
use phonon_entanglement::model::{build_mode_grid, Environment, Kelvin, MaterialParams, QubitParams};

fn main() -> phonon_entanglement::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "sigma.bin".into());
    let temperature = Kelvin(4.0);
    let grid = build_mode_grid(0.001, 0.9, 3, &MaterialParams::default())?;
    let policy = CutoffPolicy { dim_cap: 1024, ..CutoffPolicy::default() };
    let cutoffs = select_cutoffs(&grid, temperature, 2.0, &policy)?;
    let env = Environment::new(grid, temperature, cutoffs.cutoffs.clone(), policy.dim_cap)?;
    println!("cutoffs {:?}, environment dimension {}", cutoffs.cutoffs, env.dimension());

    let t = 1.0;
    let state = assemble_joint_state(&evolve_blocks(&env, t)?, &QubitParams::equal_superposition(), t)?;
    println!("trace       {:.12}", state.trace().re);
    println!("purity      {:.12} (product form {:.12})", purity_of_state(&state), purity_closed_form(&env));
    println!("tail mass   {:.3e}", state.tail_mass_total);
    println!("negativity  {:.12}", negativity_of_state(&state)?.value);

    write_state_dump(&state, BufWriter::new(File::create(&path)?))?;
    let (dimension, _) = read_state_dump(File::open(&path)?)?;
    println!("wrote {path} ({dimension} x {dimension})");
    Ok(())
}
