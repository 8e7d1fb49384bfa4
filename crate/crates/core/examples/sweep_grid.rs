//! A small (n, T) sweep with the convergence probe, written as CSV plus a
//! JSON sidecar.
//!
//! cargo run --release --example sweep_grid -- out/sweep

use std::path::PathBuf;

use phonon_entanglement::experiments::{run_sweep, write_sweep_files, SweepSpec};
use phonon_entanglement::fock::CutoffPolicy;
use phonon_entanglement::model::Kelvin;

fn main() -> phonon_entanglement::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/sweep".into()));
    let spec = SweepSpec {
        mode_counts: vec![3, 4, 5],
        temperatures: vec![Kelvin(6.0), Kelvin(12.0)],
        convergence_probe: true,
        policy: CutoffPolicy { dim_cap: 1024, ..CutoffPolicy::default() },
        ..SweepSpec::default()
    };
    let outcome = run_sweep(&spec)?;
    for r in &outcome.records {
        println!(
            "n={} T={:>4}K  N_max={:.6}  refined={:.6}  basis={}",
            r.n,
            r.temperature.0,
            r.n_max,
            r.refined_n_max.unwrap_or(f64::NAN),
            r.basis_size
        );
    }
    for path in write_sweep_files("sweep", &spec, &outcome, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}
