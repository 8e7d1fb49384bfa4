//! Sweeps over mode count and temperature, the N_max surface fit and
//! figure data.

pub mod config;
pub mod figures;
pub mod fit;
pub mod output;
pub mod selftest;
pub mod sweep;

pub use config::SweepSpec;
pub use figures::{emit_figure_data, write_fit_files, write_sweep_files, FigureId, FigureOptions};
pub use fit::{fit_negativity_surface, fit_points, power_law_exponent, FitParams, FitPoint};
pub use sweep::{run_point, run_sweep, SkippedPoint, SweepOutcome, SweepRecord};
