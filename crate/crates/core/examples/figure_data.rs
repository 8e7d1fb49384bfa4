//! Emits the data files behind the coherence figure and a reduced
//! temperature figure.
//!
//! cargo run --release --example figure_data -- out/figures

use std::path::PathBuf;

use phonon_entanglement::experiments::{emit_figure_data, FigureId, FigureOptions, SweepSpec};
use phonon_entanglement::model::Kelvin;

fn main() -> phonon_entanglement::Result<()> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/figures".into()));
    let coherence = FigureOptions { out_dir: out_dir.clone(), ..FigureOptions::default() };
    let reduced = SweepSpec {
        mode_counts: vec![2, 4],
        temperatures: [0.0, 3.0, 6.0, 12.0].map(Kelvin).to_vec(),
        ..SweepSpec::default()
    };
    let temperature = FigureOptions { out_dir, config: Some(reduced), dim_cap: Some(512), ..FigureOptions::default() };
    for (figure, options) in [(FigureId::Fig2, &coherence), (FigureId::Fig4, &temperature)] {
        for path in emit_figure_data(figure, options)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}
