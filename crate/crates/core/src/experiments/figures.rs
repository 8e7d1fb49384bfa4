//! Data behind each figure, written as CSV plus a JSON sidecar.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use super::config::SweepSpec;
use super::fit::{fit_negativity_surface, power_law_exponent, FitParams, FitPoint};
use super::output::{write_table, write_timing, Cell, CsvTable, TOOL_VERSION};
use super::sweep::{run_sweep, SweepOutcome};
use crate::continuum::{continuum_coherence, QuadratureSpec};
use crate::error::{Error, Result};
use crate::frame::FrameSolver;
use crate::measures::{dephasing_exponent, find_first_maximum, MaxSearch};
use crate::model::{build_mode_grid, Kelvin};

/// Basis cap for Negativity time series unless overridden.
pub const SERIES_DIM_CAP: usize = 1024;
/// Samples per Negativity time series.
pub const SERIES_POINTS: usize = 121;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }

    /// Mode counts and temperatures used when no config is given.
    pub fn default_axes(self) -> (Vec<usize>, Vec<f64>) {
        match self {
            FigureId::Fig2 => (vec![3, 5, 7, 100], vec![6.0]),
            FigureId::Fig3 => (vec![10], vec![6.0, 9.0, 12.0]),
            FigureId::Fig4 => {
                (vec![2, 4, 6], vec![0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0])
            }
            FigureId::Fig5 => (vec![6, 8, 10], vec![6.0]),
            FigureId::Fig6 => ((3..=8).collect(), vec![6.0, 9.0, 12.0]),
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure '{s}'")))
    }
}

/// How a figure run differs from its defaults.
#[derive(Debug, Clone, Default)]
pub struct FigureOptions {
    pub out_dir: PathBuf,
    /// Replaces the figure's default axes and every other sweep setting.
    pub config: Option<SweepSpec>,
    pub dim_cap: Option<usize>,
    pub threads: Option<usize>,
}

impl FigureOptions {
    /// The sweep settings a figure runs with.
    pub fn spec_for(&self, figure: FigureId) -> SweepSpec {
        let mut spec = self.config.clone().unwrap_or_else(|| {
            let (mode_counts, temperatures) = figure.default_axes();
            SweepSpec {
                mode_counts,
                temperatures: temperatures.into_iter().map(Kelvin).collect(),
                ..SweepSpec::default()
            }
        });
        if let Some(cap) = self.dim_cap {
            spec.policy.dim_cap = cap;
        }
        if let Some(threads) = self.threads {
            spec.threads = threads;
        }
        spec
    }

    fn series_cap(&self, spec: &SweepSpec) -> usize {
        self.dim_cap.unwrap_or_else(|| spec.policy.dim_cap.min(SERIES_DIM_CAP))
    }
}

fn temperature_label(t: Kelvin) -> String {
    let v = t.0;
    if v.fract() == 0.0 { format!("{v:.0}K") } else { format!("{v}K") }
}

/// Writes the data files for `figure` and returns their paths.
pub fn emit_figure_data(figure: FigureId, options: &FigureOptions) -> Result<Vec<PathBuf>> {
    let spec = options.spec_for(figure);
    spec.validate()?;
    match figure {
        FigureId::Fig2 => coherence_figure(&spec, &options.out_dir),
        FigureId::Fig3 => {
            let n = spec.mode_counts[0];
            let series = spec.temperatures.iter().map(|&t| (n, t)).collect();
            let window = spec.window(n)?;
            negativity_series_figure(figure, &spec, options.series_cap(&spec), series, window, &options.out_dir)
        }
        FigureId::Fig5 => {
            let t = spec.temperatures[0];
            let series = spec.mode_counts.iter().map(|&n| (n, t)).collect();
            let window = match spec.time_window {
                Some([a, b]) => (a, b),
                None => (0.0, 8.0),
            };
            negativity_series_figure(figure, &spec, options.series_cap(&spec), series, window, &options.out_dir)
        }
        FigureId::Fig4 => {
            let outcome = run_sweep(&spec)?;
            temperature_figure(&spec, &outcome, &options.out_dir)
        }
        FigureId::Fig6 => {
            let outcome = run_sweep(&spec)?;
            write_fit_files(figure.name(), &spec, &outcome, &options.out_dir)
        }
    }
}

fn coherence_figure(spec: &SweepSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    let temperature = spec.temperatures[0];
    let [start, end] = spec.time_window.unwrap_or([0.0, 8.0]);
    let points = 161;
    let quadrature = QuadratureSpec::default();
    let grids = spec
        .mode_counts
        .iter()
        .map(|&n| build_mode_grid(spec.k_min, spec.k_max, n, &spec.material))
        .collect::<Result<Vec<_>>>()?;
    let mut table = CsvTable::new(
        std::iter::once("t_ps".to_string())
            .chain(spec.mode_counts.iter().map(|n| format!("coherence_n{n}")))
            .chain(std::iter::once("coherence_continuum".to_string())),
    );
    for i in 0..points {
        let t = start + (end - start) * i as f64 / (points - 1) as f64;
        let mut row = vec![Cell::from(t)];
        for grid in &grids {
            row.push(Cell::from((-dephasing_exponent(&grid.modes, temperature, t)?).exp()));
        }
        row.push(Cell::from(continuum_coherence(&spec.material, temperature, t, &quadrature)?));
        table.push(row);
    }
    let sidecar = json!({
        "figure": "fig2",
        "tool_version": TOOL_VERSION,
        "spec": spec,
        "temperature": temperature,
        "time_window": [start, end],
        "time_points": points,
        "quadrature": quadrature,
    });
    write_table(dir, "fig2", &table, &sidecar)
}

#[derive(Debug, Clone, Serialize)]
struct SeriesInfo {
    n: usize,
    temperature: Kelvin,
    basis_size: usize,
    shell_budget: f64,
    capped: bool,
    tail_mass_total: f64,
    cutoffs_used: Vec<usize>,
    pruned_modes: Vec<usize>,
    t_at_max: Option<f64>,
    n_max: Option<f64>,
    warning: Option<String>,
}

fn negativity_series_figure(
    figure: FigureId,
    spec: &SweepSpec,
    cap: usize,
    series: Vec<(usize, Kelvin)>,
    (start, end): (f64, f64),
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let times: Vec<f64> =
        (0..SERIES_POINTS).map(|i| start + (end - start) * i as f64 / (SERIES_POINTS - 1) as f64).collect();
    let mut columns = Vec::new();
    let mut infos = Vec::new();
    let mut header = vec!["t_ps".to_string()];
    for &(n, temperature) in &series {
        header.push(match figure {
            FigureId::Fig3 => format!("negativity_T{}", temperature_label(temperature)),
            _ => format!("negativity_n{n}"),
        });
        let grid = build_mode_grid(spec.k_min, spec.k_max, n, &spec.material)?;
        let solver = FrameSolver::new(&grid, temperature, end, &spec.policy)?;
        let basis = solver.basis(spec.policy.tail_epsilon, cap)?;
        let values = times
            .iter()
            .map(|&t| Ok(solver.negativity(&basis, &spec.qubit, t)?.value))
            .collect::<Result<Vec<f64>>>()?;
        let search = MaxSearch { start, end, grid_points: spec.time_points, tolerance: spec.refine_tolerance };
        let value_at = |t: f64| Ok(solver.negativity(&basis, &spec.qubit, t)?.value);
        let max = find_first_maximum(search, value_at, value_at).ok();
        let mut cutoffs_used = vec![1; n];
        for (&i, &e) in solver.active_modes().iter().zip(&basis.extents) {
            cutoffs_used[i] = e;
        }
        let warning = basis.capped.then(|| {
            format!(
                "basis capped at {} states: shell budget {:.3} instead of {:.3}",
                cap,
                basis.budget,
                (1.0 / spec.policy.tail_epsilon).ln()
            )
        });
        infos.push(SeriesInfo {
            n,
            temperature,
            basis_size: basis.len(),
            shell_budget: basis.budget,
            capped: basis.capped,
            tail_mass_total: basis.excluded_mass,
            cutoffs_used,
            pruned_modes: solver.pruned_modes().iter().map(|p| p.0).collect(),
            t_at_max: max.map(|m| m.t_at_max),
            n_max: max.map(|m| m.value),
            warning,
        });
        columns.push(values);
    }
    let mut table = CsvTable::new(header);
    for (i, &t) in times.iter().enumerate() {
        table.push(std::iter::once(Cell::from(t)).chain(columns.iter().map(|c| Cell::from(c[i]))).collect());
    }
    let sidecar = json!({
        "figure": figure.name(),
        "tool_version": TOOL_VERSION,
        "spec": spec,
        "series_dim_cap": cap,
        "time_window": [start, end],
        "series": infos,
    });
    write_table(dir, figure.name(), &table, &sidecar)
}

fn temperature_figure(spec: &SweepSpec, outcome: &SweepOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut table = CsvTable::new(
        std::iter::once("temperature_K".to_string()).chain(spec.mode_counts.iter().map(|n| format!("n_max_n{n}"))),
    );
    for t in &spec.temperatures {
        let mut row = vec![Cell::from(t.0)];
        for &n in &spec.mode_counts {
            row.push(Cell::from(outcome.record(n, t.0).map(|r| r.n_max)));
        }
        table.push(row);
    }
    let sidecar = json!({
        "figure": "fig4",
        "tool_version": TOOL_VERSION,
        "spec": spec,
        "records": outcome.records,
        "skipped": outcome.skipped,
    });
    let mut paths = write_table(dir, "fig4", &table, &sidecar)?;
    paths.push(write_sweep_timing(dir, "fig4", outcome)?);
    Ok(paths)
}

fn write_sweep_timing(dir: &Path, stem: &str, outcome: &SweepOutcome) -> Result<PathBuf> {
    let timing: Vec<_> = outcome
        .records
        .iter()
        .map(|r| json!({"n": r.n, "temperature": r.temperature, "wall_time": r.wall_time}))
        .collect();
    write_timing(dir, stem, &timing)
}

/// One line of the sweep table.
pub fn sweep_table(outcome: &SweepOutcome) -> CsvTable {
    let mut table = CsvTable::new([
        "n",
        "temperature_K",
        "t_at_max_ps",
        "n_max",
        "purity0",
        "coherence_min",
        "basis_size",
        "shell_budget",
        "capped",
        "tail_mass_total",
        "cutoffs_used",
        "refined_n_max",
    ]);
    for r in &outcome.records {
        let cutoffs: Vec<String> = r.cutoffs_used.iter().map(ToString::to_string).collect();
        table.push(vec![
            Cell::from(r.n),
            Cell::from(r.temperature.0),
            Cell::from(r.t_at_max),
            Cell::from(r.n_max),
            Cell::from(r.purity0),
            Cell::from(r.coherence_min),
            Cell::from(r.basis_size),
            Cell::from(r.shell_budget),
            Cell::from(r.capped),
            Cell::from(r.tail_mass_total),
            Cell::Text(cutoffs.join(";")),
            Cell::from(r.refined_n_max),
        ]);
    }
    table
}

/// `<stem>.csv` with one row per record, `<stem>.json` and timings.
pub fn write_sweep_files(stem: &str, spec: &SweepSpec, outcome: &SweepOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let sidecar = json!({
        "tool_version": TOOL_VERSION,
        "spec": spec,
        "records": outcome.records,
        "skipped": outcome.skipped,
    });
    let mut paths = write_table(dir, stem, &sweep_table(outcome), &sidecar)?;
    paths.push(write_sweep_timing(dir, stem, outcome)?);
    Ok(paths)
}

#[derive(Debug, Clone, Serialize)]
struct ExponentSummary {
    temperature: Kelvin,
    /// Slope of ln N_max against ln n.
    raw: Option<f64>,
    /// Slope against ln(n + D − BT + CT²) from the fit.
    with_fitted_offset: Option<f64>,
}

/// Exponents per temperature, with and without the fitted offset.
fn exponents(spec: &SweepSpec, outcome: &SweepOutcome, fit: Option<&FitParams>) -> Vec<ExponentSummary> {
    spec.temperatures
        .iter()
        .map(|&t| {
            let points: Vec<FitPoint> =
                outcome.records.iter().filter(|r| r.temperature == t).map(FitPoint::from).collect();
            ExponentSummary {
                temperature: t,
                raw: power_law_exponent(&points, 0.0).ok(),
                with_fitted_offset: fit.and_then(|f| power_law_exponent(&points, f.size_offset(t.0)).ok()),
            }
        })
        .collect()
}

/// Fit of the records plus a CSV of data against fitted values.
pub fn write_fit_files(stem: &str, spec: &SweepSpec, outcome: &SweepOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let fit = fit_negativity_surface(&outcome.records);
    let mut table = CsvTable::new(["n", "temperature_K", "n_max", "fitted"]);
    for r in &outcome.records {
        table.push(vec![
            Cell::from(r.n),
            Cell::from(r.temperature.0),
            Cell::from(r.n_max),
            Cell::from(fit.as_ref().ok().map(|f| f.predict(r.n, r.temperature.0))),
        ]);
    }
    let sidecar = json!({
        "figure": stem,
        "tool_version": TOOL_VERSION,
        "spec": spec,
        "fit": fit.as_ref().ok(),
        "fit_error": fit.as_ref().err().map(ToString::to_string),
        "exponents": exponents(spec, outcome, fit.as_ref().ok()),
        "records": outcome.records,
        "skipped": outcome.skipped,
    });
    let mut paths = write_table(dir, stem, &table, &sidecar)?;
    paths.push(write_sweep_timing(dir, stem, outcome)?);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in FigureId::ALL {
            assert_eq!(f.name().parse::<FigureId>().unwrap(), f);
        }
        assert_eq!("fig9".parse::<FigureId>().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn overrides_apply() {
        let opts = FigureOptions { dim_cap: Some(64), threads: Some(3), ..FigureOptions::default() };
        let spec = opts.spec_for(FigureId::Fig6);
        assert_eq!(spec.policy.dim_cap, 64);
        assert_eq!(spec.threads, 3);
        assert_eq!(spec.mode_counts, (3..=8).collect::<Vec<_>>());
        assert_eq!(opts.series_cap(&spec), 64);
        assert_eq!(FigureOptions::default().series_cap(&SweepSpec::default()), SERIES_DIM_CAP);
    }

    #[test]
    fn labels() {
        assert_eq!(temperature_label(Kelvin(6.0)), "6K");
        assert_eq!(temperature_label(Kelvin(0.5)), "0.5K");
    }
}
