//! Negativity without building the joint state.
//!
//! After conjugating with the branch-0 evolution, the partial transpose
//! becomes [[aR, |γ|H], [|γ|H, cR]] with R the thermal state of the
//! environment and H = D(λ) R P D(λ)† (P the parity operator). D(λ) differs
//! from D(|λ|) by a diagonal phase similarity, so H can be taken real
//! symmetric. For a = c the spectrum splits into the two problems aR ± |γ|H.
//!
//! The environment basis is a "shell": every product state whose summed
//! per-mode cost stays within a budget, the cost of a level being
//! −ln of its larger probability under the thermal and the maximally
//! displaced thermal distribution. This follows the occupied part of the
//! Fock space much more closely than a rectangular box.

use faer::{Mat, Side};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{
    dephasing_strength, displaced_thermal_populations, raw_thermal_weights, real_displacement, thermal_support,
    CutoffPolicy, DisplacementAmplitude, MAX_MODE_CUTOFF,
};
use crate::measures::{find_first_maximum, MaxNegativity, MaxSearch, NegativityResult};
use crate::model::{Kelvin, ModeGrid, PhononMode, QubitParams};

/// Levels whose cost exceeds this are never tabulated.
const COST_CEILING: f64 = 50.0;
/// Thermal weight ignored when summing over internal levels.
const INTERNAL_MASS: f64 = 1e-17;
/// tail_epsilon of the cheap basis used for the coarse time scan.
pub const COARSE_TAIL_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone)]
struct ActiveMode {
    grid_index: usize,
    mode: PhononMode,
    ratio: f64,
    costs: Vec<f64>,
    /// suffix_min[m] = min cost over levels ≥ m.
    suffix_min: Vec<f64>,
}

impl ActiveMode {
    fn next_cost(&self, extent: usize) -> f64 {
        self.suffix_min.get(extent).copied().unwrap_or(f64::INFINITY)
    }
}

/// Product states of the active modes within a cost budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellBasis {
    pub budget: f64,
    /// Row-major, one row of levels per state.
    pub levels: Vec<u16>,
    pub mode_count: usize,
    /// 1 + highest level used, per active mode.
    pub extents: Vec<usize>,
    /// Thermal probability outside the basis.
    pub excluded_mass: f64,
    /// Whether the budget had to be lowered to respect the size cap.
    pub capped: bool,
}

impl ShellBasis {
    pub fn len(&self) -> usize {
        if self.mode_count == 0 {
            1
        } else {
            self.levels.len() / self.mode_count
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn state(&self, s: usize) -> &[u16] {
        &self.levels[s * self.mode_count..(s + 1) * self.mode_count]
    }
}

/// Per-(grid, temperature, window) data for Negativity in the branch frame.
#[derive(Debug, Clone)]
pub struct FrameSolver {
    temperature: Kelvin,
    active: Vec<ActiveMode>,
    pruned: Vec<(usize, f64)>,
}

impl FrameSolver {
    /// Modes with dephasing strength at most `policy.decoupling_tolerance`
    /// on [0, t_max] are left out.
    pub fn new(grid: &ModeGrid, temperature: Kelvin, t_max: f64, policy: &CutoffPolicy) -> Result<Self> {
        policy.validate()?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
        }
        if !(temperature.0 >= 0.0 && temperature.0.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad temperature {}", temperature.0)));
        }
        let mut active = Vec::new();
        let mut pruned = Vec::new();
        for (i, mode) in grid.modes.iter().enumerate() {
            if mode.is_decoupled() {
                continue;
            }
            let strength = dephasing_strength(mode, temperature, t_max);
            if strength <= policy.decoupling_tolerance {
                pruned.push((i, strength));
                continue;
            }
            let ratio = temperature.energy_ratio(mode.omega);
            let lam = mode.max_displacement(t_max);
            let levels = (thermal_support(ratio, (-COST_CEILING).exp())
                + (lam * lam + 10.0 * lam).ceil() as usize
                + 20)
                .min(MAX_MODE_CUTOFF);
            let thermal = raw_thermal_weights(ratio, levels);
            let displaced = displaced_thermal_populations(ratio, lam, levels);
            let weight: Vec<f64> = thermal.iter().zip(&displaced).map(|(a, b)| a.max(*b)).collect();
            let top = weight.iter().copied().fold(0.0, f64::max);
            let mut costs: Vec<f64> =
                weight.iter().map(|&w| if w > 0.0 { (top / w).ln() } else { f64::INFINITY }).collect();
            let keep = costs.iter().rposition(|&c| c <= COST_CEILING).map_or(1, |p| p + 1);
            costs.truncate(keep);
            let mut suffix_min = costs.clone();
            for m in (0..suffix_min.len().saturating_sub(1)).rev() {
                suffix_min[m] = suffix_min[m].min(suffix_min[m + 1]);
            }
            active.push(ActiveMode { grid_index: i, mode: *mode, ratio, costs, suffix_min });
        }
        Ok(Self { temperature, active, pruned })
    }

    pub fn temperature(&self) -> Kelvin {
        self.temperature
    }

    /// Grid indices of the modes kept in the basis.
    pub fn active_modes(&self) -> Vec<usize> {
        self.active.iter().map(|m| m.grid_index).collect()
    }

    /// Modes left out, with their dephasing strength.
    pub fn pruned_modes(&self) -> &[(usize, f64)] {
        &self.pruned
    }

    /// Number of shell states at `budget`, stopping once it passes `limit`.
    pub fn count(&self, budget: f64, limit: usize) -> usize {
        let mut count = 0usize;
        self.walk(budget, &mut |_| {
            count += 1;
            count <= limit
        });
        count
    }

    /// Visits every state within `budget`; the visitor returns false to stop.
    fn walk(&self, budget: f64, visit: &mut dyn FnMut(&[u16]) -> bool) {
        fn go(
            modes: &[ActiveMode],
            depth: usize,
            remaining: f64,
            current: &mut Vec<u16>,
            visit: &mut dyn FnMut(&[u16]) -> bool,
        ) -> bool {
            if depth == modes.len() {
                return visit(current);
            }
            let mode = &modes[depth];
            for (m, &cost) in mode.costs.iter().enumerate() {
                if mode.suffix_min[m] > remaining {
                    break;
                }
                if cost <= remaining {
                    current.push(m as u16);
                    let go_on = go(modes, depth + 1, remaining - cost, current, visit);
                    current.pop();
                    if !go_on {
                        return false;
                    }
                }
            }
            true
        }
        let mut current = Vec::with_capacity(self.active.len());
        go(&self.active, 0, budget + 1e-12, &mut current, visit);
    }

    fn enumerate(&self, budget: f64, capped: bool) -> ShellBasis {
        let k = self.active.len();
        let mut levels = Vec::new();
        let mut extents = vec![1usize; k];
        let mut kept_mass = 0.0;
        let thermal: Vec<Vec<f64>> =
            self.active.iter().map(|m| raw_thermal_weights(m.ratio, m.costs.len())).collect();
        self.walk(budget, &mut |state| {
            levels.extend_from_slice(state);
            let mut w = 1.0;
            for (j, &m) in state.iter().enumerate() {
                extents[j] = extents[j].max(m as usize + 1);
                w *= thermal[j][m as usize];
            }
            kept_mass += w;
            true
        });
        ShellBasis { budget, levels, mode_count: k, extents, excluded_mass: (1.0 - kept_mass).max(0.0), capped }
    }

    /// Shell with budget ln(1/tail_epsilon), lowered by bisection if it
    /// would hold more than `cap` states.
    pub fn basis(&self, tail_epsilon: f64, cap: usize) -> Result<ShellBasis> {
        if !(tail_epsilon > 0.0 && tail_epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("tail_epsilon must lie in (0, 1), got {tail_epsilon}")));
        }
        let budget = (1.0 / tail_epsilon).ln();
        if self.count(budget, cap) <= cap {
            return Ok(self.enumerate(budget, false));
        }
        let floor = self.count(0.0, cap);
        if floor > cap {
            return Err(Error::InfeasibleDimension { required: floor, cap });
        }
        let (mut lo, mut hi) = (0.0, budget);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.count(mid, cap) <= cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.enumerate(lo, true))
    }

    /// The smallest shell containing `basis` in which every per-mode extent
    /// has grown by at least one level. Fails if that needs more than
    /// `limit` states.
    pub fn refined(&self, basis: &ShellBasis, limit: usize) -> Result<ShellBasis> {
        let budget = self
            .active
            .iter()
            .zip(&basis.extents)
            .map(|(m, &e)| m.next_cost(e))
            .filter(|c| c.is_finite())
            .fold(basis.budget, f64::max);
        let size = self.count(budget, limit);
        if size > limit {
            return Err(Error::InfeasibleDimension { required: size, cap: limit });
        }
        Ok(self.enumerate(budget, basis.capped))
    }

    /// Negativity of the joint state at time `t`, with the environment
    /// restricted to `basis` and renormalized there.
    pub fn negativity(&self, basis: &ShellBasis, qubit: &QubitParams, t: f64) -> Result<NegativityResult> {
        crate::error::ensure_finite("t", t)?;
        let size = basis.len();
        let k = self.active.len();
        let mut weights = vec![1.0; size];
        let mut blocks = Vec::with_capacity(k);
        for (j, mode) in self.active.iter().enumerate() {
            let (thermal, block) = self.mode_blocks(mode, basis.extents[j], t);
            for (s, w) in weights.iter_mut().enumerate() {
                *w *= thermal[basis.state(s)[j] as usize];
            }
            blocks.push(block);
        }
        let z: f64 = weights.iter().sum();
        if !(z > 0.0) {
            return Err(Error::Numerical("shell basis holds no thermal weight".into()));
        }
        let a = qubit.weight_0() / z;
        let c = qubit.weight_1() / z;
        let g = qubit.overlap_magnitude() / z;

        // H restricted to the shell, one entry at a time; only the lower
        // triangle is read by the eigensolver.
        let cross = |i: usize, l: usize| -> f64 {
            if l > i {
                return 0.0;
            }
            let (si, sl) = (basis.state(i), basis.state(l));
            let mut v = 1.0;
            for j in 0..k {
                v *= blocks[j][si[j] as usize * basis.extents[j] + sl[j] as usize];
            }
            v
        };
        let eig = |m: Mat<f64>| -> Result<Vec<f64>> {
            let v = m
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numerical("non-finite eigenvalue".into()));
            }
            Ok(v)
        };
        let spectra = if (a - c).abs() <= 1e-14 * (a + c) {
            let sector = |sign: f64| {
                Mat::from_fn(size, size, |i, l| sign * g * cross(i, l) + if i == l { a * weights[i] } else { 0.0 })
            };
            let plus = eig(sector(1.0))?;
            vec![plus, eig(sector(-1.0))?]
        } else {
            let full = Mat::from_fn(2 * size, 2 * size, |i, l| {
                let (bi, ri) = (i / size, i % size);
                let (bl, rl) = (l / size, l % size);
                if bi != bl {
                    // Lower triangle of the off-diagonal block: i in the
                    // second half, l in the first; H is symmetric.
                    if bi > bl { g * if rl <= ri { cross(ri, rl) } else { cross(rl, ri) } } else { 0.0 }
                } else if ri == rl {
                    if bi == 0 { a * weights[ri] } else { c * weights[ri] }
                } else {
                    0.0
                }
            });
            vec![eig(full)?]
        };
        Ok(NegativityResult::from_spectra(spectra.iter().map(Vec::as_slice)))
    }

    /// Raw thermal weights (first `extent`) and the real block
    /// D(|λ|) R P D(|λ|)ᵀ restricted to `extent` levels, row-major.
    fn mode_blocks(&self, mode: &ActiveMode, extent: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
        let inner = extent.max(thermal_support(mode.ratio, INTERNAL_MASS));
        let thermal = raw_thermal_weights(mode.ratio, inner);
        let r = DisplacementAmplitude::at(&mode.mode, t).value.norm();
        let d = real_displacement(r, extent, inner);
        let signed: Vec<f64> =
            thermal.iter().enumerate().map(|(l, w)| if l % 2 == 0 { *w } else { -*w }).collect();
        let mut block = vec![0.0; extent * extent];
        for m in 0..extent {
            let row_m = &d[m * inner..(m + 1) * inner];
            for n in 0..=m {
                let row_n = &d[n * inner..(n + 1) * inner];
                let v: f64 = row_m.iter().zip(row_n).zip(&signed).map(|((x, y), w)| x * y * w).sum();
                block[m * extent + n] = v;
                block[n * extent + m] = v;
            }
        }
        (thermal[..extent].to_vec(), block)
    }

    /// First Negativity maximum: coarse scan on a cheap shell, refinement
    /// on `fine`.
    pub fn first_maximum(
        &self,
        qubit: &QubitParams,
        search: MaxSearch,
        coarse: &ShellBasis,
        fine: &ShellBasis,
    ) -> Result<MaxNegativity> {
        if qubit.overlap_magnitude() == 0.0 {
            return Ok(MaxNegativity { t_at_max: search.start, value: 0.0, degenerate: true, fine_evaluations: 0 });
        }
        find_first_maximum(
            search,
            |t| Ok(self.negativity(coarse, qubit, t)?.value),
            |t| Ok(self.negativity(fine, qubit, t)?.value),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_joint_state, evolve_blocks};
    use crate::measures::{dephasing_exponent, negativity_of_state};
    use crate::model::{build_mode_grid, Environment, MaterialParams};
    use num_complex::Complex64;

    fn grid(n: usize) -> ModeGrid {
        build_mode_grid(0.001, 0.9, n, &MaterialParams::default()).unwrap()
    }

    fn solver(n: usize, t: f64) -> (ModeGrid, FrameSolver) {
        let g = grid(n);
        let t_max = g.cycle_time(&MaterialParams::default());
        let s = FrameSolver::new(&g, Kelvin(t), t_max, &CutoffPolicy::default()).unwrap();
        (g, s)
    }

    #[test]
    fn weakest_mode_is_pruned() {
        let (_, s) = solver(4, 12.0);
        assert_eq!(s.pruned_modes().len(), 1);
        assert_eq!(s.pruned_modes()[0].0, 0);
        assert_eq!(s.active_modes(), vec![1, 2, 3]);
    }

    #[test]
    fn shell_grows_with_budget_and_respects_cap() {
        let (_, s) = solver(5, 9.0);
        let small = s.basis(1e-3, 100_000).unwrap();
        let large = s.basis(1e-6, 100_000).unwrap();
        assert!(small.len() < large.len());
        assert!(small.excluded_mass > large.excluded_mass);
        let capped = s.basis(1e-6, 50).unwrap();
        assert!(capped.capped && capped.len() <= 50 && capped.len() > 10);
        assert_eq!(s.count(large.budget, usize::MAX), large.len());
    }

    #[test]
    fn refined_shell_grows_every_extent() {
        let (_, s) = solver(4, 6.0);
        let base = s.basis(1e-4, 4096).unwrap();
        let finer = s.refined(&base, 100_000).unwrap();
        assert!(finer.budget > base.budget);
        for (a, b) in base.extents.iter().zip(&finer.extents) {
            assert!(b > a);
        }
        assert!(s.refined(&base, base.len()).is_err());
    }

    #[test]
    fn cold_negativity_matches_schmidt_oracle() {
        let (g, s) = solver(4, 0.0);
        let basis = s.basis(1e-12, 4096).unwrap();
        let alpha = Complex64::new(0.6, 0.0);
        let beta = Complex64::from_polar(0.8, 0.4);
        let q = QubitParams::new(1.2, alpha, beta).unwrap();
        // The k ≈ 0 mode is pruned; the oracle covers the kept modes.
        let kept: Vec<_> = s.active_modes().iter().map(|&i| g.modes[i]).collect();
        for t in [0.4, 1.1, 2.5] {
            let u = (-dephasing_exponent(&kept, Kelvin(0.0), t).unwrap()).exp();
            let want = 0.48 * (1.0 - u * u).sqrt();
            let got = s.negativity(&basis, &q, t).unwrap().value;
            assert!((got - want).abs() < 1e-8, "t = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn agrees_with_dense_state() {
        let g = grid(3);
        let policy = CutoffPolicy::default();
        let s = FrameSolver::new(&g, Kelvin(6.0), 5.0, &policy).unwrap();
        let basis = s.basis(1e-12, 4096).unwrap();
        let env = Environment::new(g, Kelvin(6.0), vec![1, 30, 22], 4096).unwrap();
        for q in [
            QubitParams::equal_superposition(),
            QubitParams::new(0.7, Complex64::new(0.6, 0.0), Complex64::from_polar(0.8, -1.0)).unwrap(),
        ] {
            for t in [0.5, 1.3] {
                let dense = negativity_of_state(&assemble_joint_state(&evolve_blocks(&env, t).unwrap(), &q, t).unwrap())
                    .unwrap()
                    .value;
                let fast = s.negativity(&basis, &q, t).unwrap().value;
                assert!((dense - fast).abs() < 1e-7, "t = {t}: {dense} vs {fast}");
            }
        }
    }

    #[test]
    fn no_environment_means_no_negativity() {
        let g = grid(2);
        let policy = CutoffPolicy { decoupling_tolerance: 10.0, ..CutoffPolicy::default() };
        let s = FrameSolver::new(&g, Kelvin(6.0), 1.0, &policy).unwrap();
        let basis = s.basis(1e-6, 10).unwrap();
        assert_eq!(basis.len(), 1);
        let r = s.negativity(&basis, &QubitParams::equal_superposition(), 0.7).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
