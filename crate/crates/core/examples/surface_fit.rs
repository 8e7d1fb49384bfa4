//! Fits the N_max(n, T) surface: first a round trip on data generated from
//! known parameters, then on a freshly computed sweep.
//!
//! cargo run --release --example surface_fit

use phonon_entanglement::experiments::fit::REFERENCE_PARAMS;
use phonon_entanglement::experiments::{fit_negativity_surface, fit_points, power_law_exponent, run_sweep, FitParams, FitPoint, SweepSpec};
use phonon_entanglement::fock::CutoffPolicy;
use phonon_entanglement::model::Kelvin;

fn main() -> phonon_entanglement::Result<()> {
    let truth = FitParams::from_vector(REFERENCE_PARAMS);
    let synthetic: Vec<FitPoint> = (3..=8)
        .flat_map(|n| [4.0, 6.0, 9.0, 12.0, 15.0].map(|t| FitPoint { n, temperature: t, value: truth.predict(n, t) }))
        .collect();
    let recovered = fit_points(&synthetic)?;
    println!("round trip  {:?}", recovered.vector());
    println!("generating  {REFERENCE_PARAMS:?}");

    let spec = SweepSpec {
        mode_counts: (3..=6).collect(),
        temperatures: vec![Kelvin(6.0), Kelvin(9.0), Kelvin(12.0)],
        policy: CutoffPolicy { dim_cap: 1024, ..CutoffPolicy::default() },
        ..SweepSpec::default()
    };
    let outcome = run_sweep(&spec)?;
    let fit = fit_negativity_surface(&outcome.records)?;
    println!("sweep fit   {:?}  R² = {:.4}", fit.vector(), fit.r_squared);
    for t in [6.0, 12.0] {
        let points: Vec<FitPoint> = outcome.records.iter().filter(|r| r.temperature.0 == t).map(FitPoint::from).collect();
        println!(
            "T={t:>4}K exponent raw {:.3}, with fitted offset {:.3}",
            power_law_exponent(&points, 0.0)?,
            power_law_exponent(&points, fit.size_offset(t))?
        );
    }
    Ok(())
}
