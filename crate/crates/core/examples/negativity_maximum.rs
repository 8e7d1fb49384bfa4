//! First Negativity maximum for n = 4 and 6 modes at 6 and 9 K, using the
//! branch-frame solver on an energy-shell basis.
//!
//! cargo run --release --example negativity_maximum

use phonon_entanglement::fock::CutoffPolicy;
use phonon_entanglement::frame::{FrameSolver, COARSE_TAIL_EPSILON};
use phonon_entanglement::measures::MaxSearch;
use phonon_entanglement::model::{build_mode_grid, Kelvin, MaterialParams, QubitParams};

fn main() -> phonon_entanglement::Result<()> {
    let material = MaterialParams::default();
    let policy = CutoffPolicy::default();
    let qubit = QubitParams::equal_superposition();
    for n in [4, 6] {
        let grid = build_mode_grid(0.001, 0.9, n, &material)?;
        let end = grid.cycle_time(&material);
        for temperature in [Kelvin(6.0), Kelvin(9.0)] {
            let solver = FrameSolver::new(&grid, temperature, end, &policy)?;
            let fine = solver.basis(policy.tail_epsilon, policy.dim_cap)?;
            let coarse = solver.basis(COARSE_TAIL_EPSILON, policy.dim_cap)?;
            let search = MaxSearch { start: 0.0, end, grid_points: 400, tolerance: 2e-3 };
            let max = solver.first_maximum(&qubit, search, &coarse, &fine)?;
            println!(
                "n={n} T={:>4}K  N_max={:.6} at t={:.4} ps  shell {} states{}",
                temperature.0,
                max.value,
                max.t_at_max,
                fine.len(),
                if fine.capped { " (capped)" } else { "" },
            );
        }
    }
    Ok(())
}
