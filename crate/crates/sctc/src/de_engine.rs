//! Density-evolution drivers: fixed points, BP thresholds and MAP thresholds.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{DeState, EnsembleDe, EnsembleSpec};
use crate::{Error, Result};

/// Stopping rules for a density-evolution run.
#[derive(Clone, Copy, Debug)]
pub struct RunParams {
    /// Iteration cap; hitting it without a verdict counts as failure.
    pub max_iter: usize,
    /// Success once the largest a-posteriori erasure probability drops below this.
    pub target: f64,
    /// Declared stalled when the largest per-message change drops below this
    /// while still above target.
    pub stall: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            max_iter: 20_000,
            target: 1e-8,
            stall: 1e-12,
        }
    }
}

impl RunParams {
    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Outcome of iterating density evolution from the all-ones state.
#[derive(Clone, Debug)]
pub struct DeRunResult {
    /// The a-posteriori erasure probability dropped below target.
    pub converged: bool,
    /// The iteration stalled at a nonzero fixed point.
    pub stalled: bool,
    pub iterations: usize,
    pub final_state: DeState,
    pub max_aposteriori: f64,
}

/// Iterates the exact DE update from the all-ones state until success, stall
/// or the iteration cap. Non-convergence is a result, not an error.
pub fn run_de(de: &mut EnsembleDe, eps: f64, params: &RunParams) -> Result<DeRunResult> {
    let state = de.initial_state();
    run_de_from(de, eps, state, params)
}

fn run_de_from(
    de: &mut EnsembleDe,
    eps: f64,
    mut state: DeState,
    params: &RunParams,
) -> Result<DeRunResult> {
    let mut max_pa = 1.0;
    for iter in 1..=params.max_iter {
        let next = de.update(&state, eps)?;
        max_pa = de
            .aposteriori(&next, eps)?
            .into_iter()
            .fold(0.0f64, f64::max);
        if max_pa < params.target {
            return Ok(DeRunResult {
                converged: true,
                stalled: false,
                iterations: iter,
                final_state: next,
                max_aposteriori: max_pa,
            });
        }
        let diff = state.max_abs_diff(&next);
        state = next;
        if diff < params.stall {
            return Ok(DeRunResult {
                converged: false,
                stalled: true,
                iterations: iter,
                final_state: state,
                max_aposteriori: max_pa,
            });
        }
    }
    Ok(DeRunResult {
        converged: false,
        stalled: false,
        iterations: params.max_iter,
        final_state: state,
        max_aposteriori: max_pa,
    })
}

/// Iterates to a stationary state (change below `stall`), regardless of the
/// erasure target. Used for the fixed points behind the area theorem.
fn fixed_point_from(
    de: &mut EnsembleDe,
    eps: f64,
    mut state: DeState,
    max_iter: usize,
    stall: f64,
) -> Result<DeState> {
    for _ in 0..max_iter {
        let next = de.update(&state, eps)?;
        let diff = state.max_abs_diff(&next);
        state = next;
        if diff < stall {
            break;
        }
    }
    Ok(state)
}

/// Threshold flavor reported in result tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThresholdKind {
    #[serde(rename = "BP")]
    Bp,
    #[serde(rename = "MAP")]
    Map,
    #[serde(rename = "SC")]
    Sc,
}

impl ThresholdKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdKind::Bp => "BP",
            ThresholdKind::Map => "MAP",
            ThresholdKind::Sc => "SC",
        }
    }
}

impl std::fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A bracketed threshold estimate.
#[derive(Clone, Debug, Serialize)]
pub struct ThresholdResult {
    pub kind: ThresholdKind,
    /// Bracket midpoint.
    pub value: f64,
    /// Achieved bracket width.
    pub tolerance: f64,
    /// Largest erasure probability with a successful run.
    pub bracket_lo: f64,
    /// Smallest erasure probability with a failed run.
    pub bracket_hi: f64,
    pub m: usize,
    #[serde(rename = "L")]
    pub chain_length: usize,
    pub max_iter: usize,
}

/// Largest channel erasure probability for which DE drives the a-posteriori
/// erasure probability to zero, located by bisection.
///
/// The reported kind is `BP` for uncoupled ensembles and `SC` for coupled
/// ones; the bracket endpoints are actual run outcomes.
pub fn bp_threshold(spec: &EnsembleSpec, tol: f64, params: &RunParams) -> Result<ThresholdResult> {
    if tol < 1e-5 {
        return Err(Error::Validation(format!(
            "bisection tolerance {tol} below the supported minimum 1e-5"
        )));
    }
    let mut de = EnsembleDe::new(spec)?;
    let mut lo = 0.0f64; // eps = 0 succeeds in one iteration
    let mut hi = 1.0f64;
    if run_de(&mut de, hi, params)?.converged {
        // Degenerate ensemble where even a fully erased channel decodes.
        return Err(Error::InconsistentOracle { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if run_de(&mut de, mid, params)?.converged {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kind = if spec.is_uncoupled() {
        ThresholdKind::Bp
    } else {
        ThresholdKind::Sc
    };
    Ok(ThresholdResult {
        kind,
        value: 0.5 * (lo + hi),
        tolerance: hi - lo,
        bracket_lo: lo,
        bracket_hi: hi,
        m: spec.m,
        chain_length: spec.chain_length,
        max_iter: params.max_iter,
    })
}

/// Iteration budget for the uncoupled fixed points behind the area theorem.
const MAP_FP_MAX_ITER: usize = 400_000;
const MAP_FP_STALL: f64 = 1e-13;
/// Refinement target for the area integral.
const MAP_INTEGRAL_TOL: f64 = 2e-6;
const MAP_MAX_GRID: usize = 6_000;

struct MapPoint {
    eps: f64,
    pbar: f64,
    state: DeState,
}

/// MAP threshold of an uncoupled ensemble via the area theorem: the lower
/// integration limit at which the average extrinsic erasure probability of
/// the BP fixed points integrates to the code rate.
///
/// The fixed points are computed on an adaptively refined grid above the BP
/// cliff (warm-started downward in eps), integrated by trapezoid with
/// Richardson-style refinement, and the area equation is solved by bisection
/// on the lower limit.
pub fn map_threshold(spec: &EnsembleSpec, tol: f64) -> Result<ThresholdResult> {
    if !spec.is_uncoupled() {
        return Err(Error::Validation(
            "the MAP threshold is defined on the uncoupled ensemble \
             (m = 0, or a tail-bitten BCC chain of length 1)"
                .into(),
        ));
    }
    let mut de = EnsembleDe::new(spec)?;
    let rate = spec.rate();

    // The integrand is zero below the BP cliff of the uncoupled ensemble.
    let cliff = bp_threshold(spec, 1e-5, &RunParams::default())?;
    let lo_edge = cliff.bracket_hi;

    let sample = |eps: f64, warm: Option<&DeState>, de: &mut EnsembleDe| -> Result<MapPoint> {
        let start = warm.cloned().unwrap_or_else(|| de.initial_state());
        let state = fixed_point_from(de, eps, start, MAP_FP_MAX_ITER, MAP_FP_STALL)?;
        let pbar = de.average_extrinsic(&state)?;
        Ok(MapPoint { eps, pbar, state })
    };

    // Initial descending grid from eps = 1 to the cliff.
    let initial = 65usize;
    let mut grid: Vec<MapPoint> = Vec::with_capacity(initial);
    for i in 0..initial {
        let eps = 1.0 - (1.0 - lo_edge) * i as f64 / (initial - 1) as f64;
        let warm = grid.last().map(|p: &MapPoint| &p.state);
        let point = sample(eps, warm, &mut de)?;
        grid.push(point);
    }
    grid.reverse(); // ascending in eps

    // Refine cells until the local trapezoid error estimate is within budget.
    let mut idx = 0;
    while idx + 1 < grid.len() && grid.len() < MAP_MAX_GRID {
        let (e0, y0) = (grid[idx].eps, grid[idx].pbar);
        let (e1, y1) = (grid[idx + 1].eps, grid[idx + 1].pbar);
        let h = e1 - e0;
        if h < 1e-7 {
            idx += 1;
            continue;
        }
        let mid = 0.5 * (e0 + e1);
        let point = sample(mid, Some(&grid[idx + 1].state), &mut de)?;
        // Richardson error estimate of the single-cell trapezoid.
        let est = (h / 4.0) * (y0 - 2.0 * point.pbar + y1).abs() / 3.0;
        let budget = MAP_INTEGRAL_TOL * h / (1.0 - lo_edge);
        let fine_enough = est <= budget;
        grid.insert(idx + 1, point);
        if fine_enough {
            idx += 2;
        }
    }

    // Sanity: the BP-EXIT curve must be non-decreasing in eps.
    for w in grid.windows(2) {
        if w[1].pbar < w[0].pbar - 1e-9 {
            return Err(Error::NonMonotoneExtrinsic {
                eps: w[1].eps,
                before: w[0].pbar,
                after: w[1].pbar,
            });
        }
    }

    // Cumulative integral from each grid point up to eps = 1.
    let n = grid.len();
    let mut cum = vec![0.0f64; n];
    for i in (0..n - 1).rev() {
        let h = grid[i + 1].eps - grid[i].eps;
        cum[i] = cum[i + 1] + 0.5 * h * (grid[i].pbar + grid[i + 1].pbar);
    }
    if cum[0] < rate {
        return Err(Error::Validation(format!(
            "area integral above the BP cliff is {:.6}, below the rate {:.6}; \
             cannot solve the area equation",
            cum[0], rate
        )));
    }

    // Locate the cell containing the solution of integral(a) = rate.
    let mut cell = 0;
    while cell + 1 < n && cum[cell + 1] > rate {
        cell += 1;
    }

    // Bisect inside the cell with exact integrand evaluations: the integral
    // from `a` to 1 is the cumulative value at the cell's right edge plus the
    // trapezoid piece from `a` to that edge.
    let mut a_lo = grid[cell].eps; // integral(a_lo) >= rate
    let mut a_hi = grid[cell + 1].eps; // integral(a_hi) <= rate
    let base = cum[cell + 1];
    let solve_tol = (tol * 0.25).max(1e-7);
    while a_hi - a_lo > solve_tol {
        let a = 0.5 * (a_lo + a_hi);
        let p = sample(a, Some(&grid[cell + 1].state), &mut de)?;
        let piece = 0.5 * (grid[cell + 1].eps - a) * (p.pbar + grid[cell + 1].pbar);
        if base + piece >= rate {
            a_lo = a;
        } else {
            a_hi = a;
        }
    }

    Ok(ThresholdResult {
        kind: ThresholdKind::Map,
        value: 0.5 * (a_lo + a_hi),
        tolerance: a_hi - a_lo,
        bracket_lo: a_lo,
        bracket_hi: a_hi,
        m: spec.m,
        chain_length: spec.chain_length,
        max_iter: MAP_FP_MAX_ITER,
    })
}

/// One requested cell of a threshold sweep.
#[derive(Clone, Debug)]
pub struct SweepTask {
    pub label: String,
    pub spec: EnsembleSpec,
    pub kind: ThresholdKind,
    pub tol: f64,
    pub params: RunParams,
}

/// Sweep outcome; failures are recorded per cell and do not abort the sweep.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub label: String,
    pub family: String,
    pub states: usize,
    pub rate: f64,
    pub kind: ThresholdKind,
    pub m: usize,
    pub chain_length: usize,
    pub outcome: std::result::Result<ThresholdResult, String>,
}

/// Evaluates the requested thresholds in parallel, preserving input order.
pub fn threshold_sweep(tasks: &[SweepTask]) -> Vec<SweepOutcome> {
    tasks
        .par_iter()
        .map(|task| {
            let outcome = match task.kind {
                ThresholdKind::Map => map_threshold(&task.spec, task.tol),
                _ => bp_threshold(&task.spec, task.tol, &task.params),
            };
            SweepOutcome {
                label: task.label.clone(),
                family: task.spec.family.as_str().to_string(),
                states: task.spec.component_states().unwrap_or(0),
                rate: task.spec.rate(),
                kind: task.kind,
                m: task.spec.m,
                chain_length: task.spec.chain_length,
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Family;

    fn pcc_rate_third() -> EnsembleSpec {
        EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7")
    }

    #[test]
    fn zero_erasure_converges_immediately() {
        let mut de = EnsembleDe::new(&pcc_rate_third()).unwrap();
        let r = run_de(&mut de, 0.0, &RunParams::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn full_erasure_stalls_at_ones() {
        let mut de = EnsembleDe::new(&pcc_rate_third()).unwrap();
        let r = run_de(&mut de, 1.0, &RunParams::default()).unwrap();
        assert!(!r.converged);
        assert!(r.stalled);
        assert!((r.max_aposteriori - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pcc_rate_third_straddles_its_bp_threshold() {
        // 0.6428 from the published rate-1/3 table.
        let mut de = EnsembleDe::new(&pcc_rate_third()).unwrap();
        let params = RunParams::default();
        assert!(run_de(&mut de, 0.64, &params).unwrap().converged);
        let above = run_de(&mut de, 0.65, &params).unwrap();
        assert!(!above.converged);
        assert!(above.stalled);
        assert!(above.max_aposteriori > 0.0);
    }

    #[test]
    fn empty_sweep_is_empty() {
        assert!(threshold_sweep(&[]).is_empty());
    }

    #[test]
    fn map_threshold_rejects_coupled_specs() {
        let spec = pcc_rate_third().with_coupling(1, 10);
        assert!(map_threshold(&spec, 1e-4).is_err());
    }
}
