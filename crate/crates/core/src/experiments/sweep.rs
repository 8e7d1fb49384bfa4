//! Maximum Negativity over a grid of mode counts and temperatures.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::config::SweepSpec;
use crate::error::Result;
use crate::frame::{FrameSolver, ShellBasis, COARSE_TAIL_EPSILON};
use crate::measures::{dephasing_exponent, purity_of_modes, MaxSearch};
use crate::model::{build_mode_grid, Kelvin};

/// A refined basis may hold up to this many times `dim_cap` states.
pub const PROBE_SIZE_FACTOR: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub temperature: Kelvin,
    pub t_at_max: f64,
    pub n_max: f64,
    /// Tr ρ² of the initial thermal environment.
    pub purity0: f64,
    /// Smallest degree of coherence on the scan grid.
    pub coherence_min: f64,
    /// Levels used per mode in grid order; 1 for modes left out.
    pub cutoffs_used: Vec<usize>,
    /// Thermal probability outside the environment basis.
    pub tail_mass_total: f64,
    pub basis_size: usize,
    pub shell_budget: f64,
    pub capped: bool,
    pub degenerate: bool,
    pub pruned_modes: Vec<usize>,
    /// N at t_at_max on a basis with every mode at least one level deeper.
    pub refined_n_max: Option<f64>,
    pub refined_basis_size: Option<usize>,
    /// Why the refined evaluation failed, when it did; the point itself stands.
    pub refined_error: Option<String>,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub n: usize,
    pub temperature: Kelvin,
    pub reason: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub skipped: Vec<SkippedPoint>,
}

impl SweepOutcome {
    pub fn record(&self, n: usize, temperature: f64) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.n == n && r.temperature.0 == temperature)
    }
}

fn cutoffs_in_grid_order(mode_count: usize, solver: &FrameSolver, basis: &ShellBasis) -> Vec<usize> {
    let mut cutoffs = vec![1; mode_count];
    for (&i, &e) in solver.active_modes().iter().zip(&basis.extents) {
        cutoffs[i] = e;
    }
    cutoffs
}

/// Evaluates one (n, T) point.
pub fn run_point(spec: &SweepSpec, n: usize, temperature: Kelvin) -> Result<SweepRecord> {
    let started = Instant::now();
    let grid = build_mode_grid(spec.k_min, spec.k_max, n, &spec.material)?;
    let (start, end) = spec.window(n)?;
    let policy = &spec.policy;
    let solver = FrameSolver::new(&grid, temperature, end, policy)?;
    let fine = solver.basis(policy.tail_epsilon, policy.dim_cap)?;
    let coarse = solver.basis(COARSE_TAIL_EPSILON.max(policy.tail_epsilon), policy.dim_cap)?;
    let search = MaxSearch { start, end, grid_points: spec.time_points, tolerance: spec.refine_tolerance };
    let max = solver.first_maximum(&spec.qubit, search, &coarse, &fine)?;

    let step = (end - start) / (spec.time_points - 1) as f64;
    let mut coherence_min = f64::INFINITY;
    for i in 0..spec.time_points {
        let t = start + step * i as f64;
        coherence_min = coherence_min.min((-dephasing_exponent(&grid.modes, temperature, t)?).exp());
    }

    let (mut refined_n_max, mut refined_basis_size, mut refined_error) = (None, None, None);
    if spec.convergence_probe && !max.degenerate {
        let probe = solver
            .refined(&fine, PROBE_SIZE_FACTOR * policy.dim_cap)
            .and_then(|b| Ok((solver.negativity(&b, &spec.qubit, max.t_at_max)?.value, b.len())));
        match probe {
            Ok((value, size)) => (refined_n_max, refined_basis_size) = (Some(value), Some(size)),
            Err(e) => refined_error = Some(e.to_string()),
        }
    }

    Ok(SweepRecord {
        n,
        temperature,
        t_at_max: max.t_at_max,
        n_max: max.value,
        purity0: purity_of_modes(&grid.modes, temperature),
        coherence_min,
        cutoffs_used: cutoffs_in_grid_order(n, &solver, &fine),
        tail_mass_total: fine.excluded_mass,
        basis_size: fine.len(),
        shell_budget: fine.budget,
        capped: fine.capped,
        degenerate: max.degenerate,
        pruned_modes: solver.pruned_modes().iter().map(|p| p.0).collect(),
        refined_n_max,
        refined_basis_size,
        refined_error,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Worker count allowed by `spec.threads` and the memory budget; one point
/// holds about two dense dim_cap² matrices of f64 (a sector matrix and the
/// eigensolver's workspace), scaled up by the probe's larger basis.
pub fn worker_count(spec: &SweepSpec) -> usize {
    let cap = spec.policy.dim_cap as f64;
    let factor = if spec.convergence_probe { (2 * PROBE_SIZE_FACTOR * PROBE_SIZE_FACTOR) as f64 } else { 2.0 };
    let per_point_mb = (factor * 8.0 * cap * cap / 1.0e6).max(1.0);
    let by_memory = (spec.memory_budget_mb as f64 / per_point_mb).floor() as usize;
    spec.threads.min(by_memory).max(1)
}

/// Runs every (n, T) point of `spec`. Points that fail are reported in
/// `skipped` without affecting the others; records keep the order of `spec`
/// (mode counts outer, temperatures inner).
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    let points: Vec<(usize, Kelvin)> =
        spec.mode_counts.iter().flat_map(|&n| spec.temperatures.iter().map(move |&t| (n, t))).collect();
    let results: Mutex<Vec<Option<Result<SweepRecord>>>> = Mutex::new((0..points.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = worker_count(spec).min(points.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(n, t)) = points.get(i) else { break };
                let result = run_point(spec, n, t);
                results.lock().expect("result slot poisoned")[i] = Some(result);
            });
        }
    });
    let mut outcome = SweepOutcome::default();
    for ((n, temperature), result) in points.into_iter().zip(results.into_inner().expect("result slot poisoned")) {
        match result.expect("every point evaluated") {
            Ok(record) => outcome.records.push(record),
            Err(e) => outcome.skipped.push(SkippedPoint {
                n,
                temperature,
                reason: e.to_string(),
                exit_code: e.exit_code(),
            }),
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::CutoffPolicy;
    use crate::model::QubitParams;
    use num_complex::Complex64;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            mode_counts: vec![2, 3],
            temperatures: vec![Kelvin(0.0), Kelvin(6.0)],
            time_points: 120,
            policy: CutoffPolicy { dim_cap: 256, ..CutoffPolicy::default() },
            ..SweepSpec::default()
        }
    }

    #[test]
    fn records_follow_spec_order_and_invariants() {
        let out = run_sweep(&small_spec()).unwrap();
        assert!(out.skipped.is_empty());
        let keys: Vec<_> = out.records.iter().map(|r| (r.n, r.temperature.0)).collect();
        assert_eq!(keys, vec![(2, 0.0), (2, 6.0), (3, 0.0), (3, 6.0)]);
        for r in &out.records {
            assert!(r.n_max >= 0.0);
            assert!(r.purity0 > 0.0 && r.purity0 <= 1.0);
            assert!(r.t_at_max > 0.0);
            assert_eq!(r.cutoffs_used.len(), r.n);
        }
    }

    #[test]
    fn threads_do_not_change_results() {
        let one = run_sweep(&small_spec()).unwrap();
        let two = run_sweep(&SweepSpec { threads: 2, ..small_spec() }).unwrap();
        // Serialized form leaves out wall times.
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&two).unwrap());
    }

    #[test]
    fn failing_point_is_isolated() {
        let short = SweepSpec { time_window: Some([0.0, 0.05]), ..small_spec() };
        let out = run_sweep(&short).unwrap();
        assert!(out.records.is_empty());
        assert!(out.skipped.iter().all(|s| s.exit_code == 4));

        // n = 2 peaks at half its 1.36 ps cycle; n = 3 peaks after 1 ps.
        let spec = SweepSpec { time_window: Some([0.0, 1.0]), temperatures: vec![Kelvin(0.0)], ..small_spec() };
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!((out.skipped[0].n, out.skipped[0].exit_code), (3, 4));
        let alone = run_point(&spec, 2, Kelvin(0.0)).unwrap();
        assert_eq!(out.records[0], SweepRecord { wall_time: out.records[0].wall_time, ..alone });
    }

    #[test]
    fn no_superposition_gives_degenerate_zero() {
        let spec = SweepSpec {
            qubit: QubitParams::new(0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap(),
            ..small_spec()
        };
        let out = run_sweep(&spec).unwrap();
        assert!(out.records.iter().all(|r| r.degenerate && r.n_max == 0.0));
    }

    #[test]
    fn memory_budget_limits_workers() {
        let spec = SweepSpec { threads: 8, memory_budget_mb: 1000, ..SweepSpec::default() };
        assert_eq!(worker_count(&spec), 3);
        assert_eq!(worker_count(&SweepSpec { memory_budget_mb: 1, ..spec }), 1);
    }
}
