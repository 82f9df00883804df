//! Scalar admissible systems `(f, g)`, their potential functions and
//! thresholds, and the coupled scalar recursion.
//!
//! An ensemble with identical component encoders collapses to the
//! single-variable recursion `x <- f(g(x); eps)`:
//!
//! * PCC: `f(x; eps) = f_s(eps0 * x, eps2)`, `g(x) = x`;
//! * SCC: `f(x; eps) = eps1 * f_s(eps1 * x, eps2)`,
//!   `g(x) = (f_s(x, x) + f_p(x, x)) / 2`;
//! * BCC with time-varying trellises: `f(x; eps) = f_ave(eps_r * x, ...)`,
//!   `g(x) = x`, where `f_ave` averages the three edge transfers,
//!
//! with `eps_j = 1 - (1 - eps) * rho_j` absorbing random puncturing. The
//! potential function is
//!
//! ```text
//! U(x; eps) = x g(x) - G(x) - F(g(x); eps),
//! F(x; eps) = int_0^x f(z; eps) dz,   G(x) = int_0^x g(z) dz,
//! ```
//!
//! evaluated by adaptive quadrature. Fixed points of the recursion are the
//! stationary points of `U`, which is what the threshold scans exploit.

use crate::ensembles::{EnsembleDe, EnsembleSpec, Family};
use crate::metric_chain::TransferEvaluator;
use crate::trellis::{build_trellis, GeneratorMatrix};
use crate::{Error, Result};

/// Absolute tolerance of the potential quadrature.
pub const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_INTERVALS: usize = 1_000_000;
const ROOT_GRID: usize = 2_000;
const RECURSION_TARGET: f64 = 1e-10;
const RECURSION_STALL: f64 = 1e-14;
const RECURSION_MAX_ITER: usize = 300_000;

/// A scalar admissible system backed by exact transfer-function evaluations.
///
/// Functionally pure; the internal mutability is the transfer memo cache, so
/// clone one instance per worker for parallel sweeps.
#[derive(Clone, Debug)]
pub struct ScalarSystem {
    de: EnsembleDe,
    label: String,
}

impl ScalarSystem {
    pub fn f(&mut self, x: f64, eps: f64) -> Result<f64> {
        self.de.scalar_f(x, eps)
    }

    pub fn g(&mut self, x: f64) -> Result<f64> {
        self.de.scalar_g(x)
    }

    /// One recursion step `f(g(x); eps)`.
    pub fn step(&mut self, x: f64, eps: f64) -> Result<f64> {
        let y = self.de.scalar_g(x)?;
        self.de.scalar_f(y, eps)
    }

    /// Family and component description, e.g. `SCC (1,5/7)`.
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spec(&self) -> &EnsembleSpec {
        self.de.spec()
    }

    /// Whether `f(x; 0) = 0` holds exactly: true when the streams feeding the
    /// recursion survive puncturing (a perfect channel reveals them).
    pub fn vanishes_at_zero_eps(&self) -> bool {
        let s = self.de.spec();
        match s.family {
            Family::Pcc => s.rho0 == 1.0,
            Family::Scc => s.rho1 == 1.0,
            _ => s.rho0 == 1.0 && s.rho2 == 1.0,
        }
    }
}

/// Builds the scalar system of an ensemble with identical component encoders.
///
/// SCC additionally requires `rho0 == rho1`; BCC requires `timeVarying` and
/// `rho0 == rho2`. Ensembles with distinct components are directed to the
/// vector formulation ([`vector_potential_pcc`]).
pub fn scalar_system(spec: &EnsembleSpec) -> Result<ScalarSystem> {
    let mut de = EnsembleDe::new(spec)?;
    de.scalar_f(0.0, 0.0)?; // surfaces the family-specific preconditions
    let label = format!("{} {}", spec.family.as_str(), de.component_labels().0);
    Ok(ScalarSystem { de, label })
}

/// Numerically checks the admissibility conditions on a `grid x grid` lattice:
/// `f` increasing in both arguments, `g` increasing, and the exact zero
/// conditions `f(0; eps) = g(0) = 0` (plus `f(x; 0) = 0` where puncturing
/// permits it).
pub fn verify_admissible(sys: &mut ScalarSystem, grid: usize) -> Result<()> {
    if sys.g(0.0)? != 0.0 {
        return Err(Error::Validation("g(0) != 0".into()));
    }
    let pts: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    for &e in &pts {
        if sys.f(0.0, e)? != 0.0 {
            return Err(Error::Validation(format!("f(0; {e}) != 0")));
        }
    }
    if sys.vanishes_at_zero_eps() {
        for &x in &pts {
            if sys.f(x, 0.0)? != 0.0 {
                return Err(Error::Validation(format!("f({x}; 0) != 0")));
            }
        }
    }
    let tol = 1e-12;
    let mut prev_g = 0.0;
    for &x in &pts {
        let gx = sys.g(x)?;
        if gx < prev_g - tol {
            return Err(Error::Validation(format!("g decreases at x = {x}")));
        }
        prev_g = gx;
    }
    for &e in &pts {
        let mut prev = 0.0;
        for &x in &pts {
            let fx = sys.f(x, e)?;
            if fx < prev - tol {
                return Err(Error::Validation(format!("f decreases in x at ({x}, {e})")));
            }
            prev = fx;
        }
    }
    for &x in &pts {
        let mut prev = 0.0;
        for &e in &pts {
            let fe = sys.f(x, e)?;
            if fe < prev - tol {
                return Err(Error::Validation(format!(
                    "f decreases in eps at ({x}, {e})"
                )));
            }
            prev = fe;
        }
    }
    Ok(())
}

/// Adaptive Simpson quadrature with an absolute tolerance and interval cap.
fn adaptive_simpson<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut intervals = 0usize;
    simpson_split(f, a, b, fa, fm, fb, whole, tol, 0, &mut intervals)
}

#[allow(clippy::too_many_arguments)]
fn simpson_split<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    intervals: &mut usize,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    *intervals += 1;
    if *intervals > QUAD_MAX_INTERVALS {
        return Err(Error::Quadrature {
            tol,
            max_intervals: QUAD_MAX_INTERVALS,
        });
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth > 2 && (delta.abs() <= 15.0 * tol || b - a < 1e-12) {
        return Ok(left + right + delta / 15.0);
    }
    let half_tol = 0.5 * tol;
    Ok(simpson_split(f, a, m, fa, flm, fm, left, half_tol, depth + 1, intervals)?
        + simpson_split(f, m, b, fm, frm, fb, right, half_tol, depth + 1, intervals)?)
}

/// `int_0^x f(z; eps) dz` to within [`QUAD_TOL`].
pub fn integral_f(sys: &mut ScalarSystem, x: f64, eps: f64) -> Result<f64> {
    adaptive_simpson(&mut |z| sys.f(z, eps), 0.0, x, QUAD_TOL)
}

/// `int_0^x g(z) dz` to within [`QUAD_TOL`].
pub fn integral_g(sys: &mut ScalarSystem, x: f64) -> Result<f64> {
    adaptive_simpson(&mut |z| sys.g(z), 0.0, x, QUAD_TOL)
}

/// Potential value `U(x; eps) = x g(x) - G(x) - F(g(x); eps)`.
pub fn potential(sys: &mut ScalarSystem, x: f64, eps: f64) -> Result<f64> {
    let gx = sys.g(x)?;
    let big_g = integral_g(sys, x)?;
    let big_f = integral_f(sys, gx, eps)?;
    Ok(x * gx - big_g - big_f)
}

/// `U(x; eps)` sampled on a uniform x-grid, for CSV export and plotting.
#[derive(Clone, Debug)]
pub struct PotentialCurve {
    pub eps: f64,
    pub samples: Vec<(f64, f64)>,
    pub quad_tol: f64,
}

pub fn potential_curve(sys: &mut ScalarSystem, eps: f64, points: usize) -> Result<PotentialCurve> {
    let mut samples = Vec::with_capacity(points + 1);
    for i in 0..=points {
        let x = i as f64 / points as f64;
        samples.push((x, potential(sys, x, eps)?));
    }
    Ok(PotentialCurve {
        eps,
        samples,
        quad_tol: QUAD_TOL,
    })
}

/// First upcrossing of `f(g(x); eps) >= x` on a scanned grid, refined by
/// bisection; `None` when the recursion sits strictly below the diagonal on
/// all of `(0, 1]`. This is the minimum unstable fixed point `u(eps)`.
pub fn first_unstable_fixed_point(sys: &mut ScalarSystem, eps: f64) -> Result<Option<f64>> {
    let h = |sys: &mut ScalarSystem, x: f64| -> Result<f64> { Ok(sys.step(x, eps)? - x) };
    let mut prev_x = 0.0;
    let mut prev_h = 0.0; // h(0) = 0
    for i in 1..=ROOT_GRID {
        let x = i as f64 / ROOT_GRID as f64;
        let hx = h(sys, x)?;
        if hx >= 0.0 && (prev_h < 0.0 || i == 1) {
            if hx == 0.0 && prev_h < 0.0 {
                return Ok(Some(x));
            }
            // Refine the crossing inside (prev_x, x].
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..60 {
                if hi - lo < 1e-12 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if h(sys, mid)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(hi));
        }
        prev_x = x;
        prev_h = hx;
    }
    Ok(None)
}

/// All sign changes of `f(g(x); eps) - x` on the grid, refined; candidate
/// stationary points of the potential.
fn fixed_point_candidates(sys: &mut ScalarSystem, eps: f64) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_h = 0.0;
    for i in 1..=ROOT_GRID {
        let x = i as f64 / ROOT_GRID as f64;
        let hx = sys.step(x, eps)? - x;
        if (prev_h < 0.0 && hx >= 0.0) || (prev_h > 0.0 && hx <= 0.0) {
            let (mut lo, mut hi) = (prev_x, x);
            let rising = prev_h < 0.0;
            for _ in 0..60 {
                if hi - lo < 1e-12 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let hm = sys.step(mid, eps)? - mid;
                if (hm < 0.0) == rising {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_h = hx;
    }
    Ok(roots)
}

/// Whether the scalar recursion from `x = 1` converges to zero at `eps`.
pub fn recursion_converges(sys: &mut ScalarSystem, eps: f64) -> Result<bool> {
    let mut x = 1.0f64;
    for _ in 0..RECURSION_MAX_ITER {
        let next = sys.step(x, eps)?;
        if next < RECURSION_TARGET {
            return Ok(true);
        }
        if (x - next).abs() < RECURSION_STALL {
            return Ok(false);
        }
        x = next;
    }
    Ok(false)
}

/// BP threshold of the scalar system: bisection on the convergence of the
/// recursion from `x = 1`, cross-checked against a dense-grid sign scan of
/// `x - f(g(x); eps)` just outside the final bracket.
pub fn bp_threshold_scalar(sys: &mut ScalarSystem, tol: f64) -> Result<f64> {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    if recursion_converges(sys, hi)? {
        return Ok(1.0);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if recursion_converges(sys, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    // Below the threshold the recursion must sit strictly below the diagonal;
    // above it an unstable fixed point must exist.
    let below = (lo - 2.0 * tol).max(0.0);
    if below > 0.0 && first_unstable_fixed_point(sys, below)?.is_some() {
        return Err(Error::ThresholdMismatch {
            recursion: value,
            grid: below,
        });
    }
    let above = (hi + 2.0 * tol).min(1.0);
    if first_unstable_fixed_point(sys, above)?.is_none() {
        return Err(Error::ThresholdMismatch {
            recursion: value,
            grid: above,
        });
    }
    Ok(value)
}

/// `min U(x; eps)` over `x in [u(eps), 1]`, taking the minimum over the
/// stationary points (fixed points of the recursion) and the endpoints.
fn min_potential_above_unstable(sys: &mut ScalarSystem, eps: f64) -> Result<f64> {
    let u = match first_unstable_fixed_point(sys, eps)? {
        Some(u) => u,
        None => 1.0,
    };
    let mut candidates = vec![u, 1.0];
    for root in fixed_point_candidates(sys, eps)? {
        if root >= u {
            candidates.push(root);
        }
    }
    let mut min = f64::INFINITY;
    for x in candidates {
        min = min.min(potential(sys, x, eps)?);
    }
    Ok(min)
}

/// Potential threshold: the supremum of `eps` for which the potential stays
/// positive over `[u(eps), 1]`.
pub fn potential_threshold(sys: &mut ScalarSystem, tol: f64) -> Result<f64> {
    let eps_bp = bp_threshold_scalar(sys, tol.min(1e-4))?;
    if eps_bp < 1.0 {
        let probe = (eps_bp + 0.02).min(1.0);
        if probe < 1.0 && first_unstable_fixed_point(sys, probe)?.is_none() {
            return Err(Error::DegenerateSystem);
        }
    }
    let mut lo = (eps_bp - 1e-3).max(0.0); // potential positive at and below the BP threshold
    let mut hi = 1.0f64;
    if min_potential_above_unstable(sys, hi)? > 0.0 {
        return Ok(1.0);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if min_potential_above_unstable(sys, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One step of the coupled scalar recursion over a terminated chain:
///
/// ```text
/// x_t <- 1/(m+1) * sum_j f( 1/(m+1) * sum_k g(x_{t+j-k}); eps )
/// ```
///
/// Slots outside `[0, L)` read as zero, both for `g` inputs and for the
/// factor terms (termination pins those blocks to known values).
pub fn coupled_scalar_update(
    sys: &mut ScalarSystem,
    xs: &[f64],
    eps: f64,
    m: usize,
) -> Result<Vec<f64>> {
    let len = xs.len() as i64;
    let span = (m + 1) as f64;
    // g over the chain, reused across slots.
    let gx: Vec<f64> = xs
        .iter()
        .map(|&x| sys.g(x))
        .collect::<Result<Vec<f64>>>()?;
    let g_at = |t: i64| -> f64 {
        if t < 0 || t >= len {
            0.0
        } else {
            gx[t as usize]
        }
    };
    let mut out = vec![0.0; xs.len()];
    for t in 0..len {
        let mut acc = 0.0;
        for j in 0..=m as i64 {
            let slot = t + j;
            if slot < 0 || slot >= len {
                continue;
            }
            let mut inner = 0.0;
            for k in 0..=m as i64 {
                inner += g_at(slot - k);
            }
            acc += sys.f(inner / span, eps)?;
        }
        out[t as usize] = acc / span;
    }
    Ok(out)
}

/// Outcome of iterating the coupled scalar recursion from the all-ones chain.
#[derive(Clone, Debug)]
pub struct CoupledScalarRun {
    pub converged: bool,
    pub stalled: bool,
    pub iterations: usize,
    pub max_x: f64,
    pub profile: Vec<f64>,
}

/// Iterates [`coupled_scalar_update`] from all ones until the chain drops
/// below `target`, stalls, or hits the iteration cap.
pub fn run_coupled_scalar(
    sys: &mut ScalarSystem,
    eps: f64,
    m: usize,
    chain_length: usize,
    max_iter: usize,
    target: f64,
    stall: f64,
) -> Result<CoupledScalarRun> {
    let mut xs = vec![1.0; chain_length];
    for iter in 1..=max_iter {
        let next = coupled_scalar_update(sys, &xs, eps, m)?;
        let max_x = next.iter().fold(0.0f64, |a, &b| a.max(b));
        let diff = xs
            .iter()
            .zip(&next)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        xs = next;
        if max_x < target {
            return Ok(CoupledScalarRun {
                converged: true,
                stalled: false,
                iterations: iter,
                max_x,
                profile: xs,
            });
        }
        if diff < stall {
            return Ok(CoupledScalarRun {
                converged: false,
                stalled: true,
                iterations: iter,
                max_x,
                profile: xs,
            });
        }
    }
    let max_x = xs.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(CoupledScalarRun {
        converged: false,
        stalled: false,
        iterations: max_iter,
        max_x,
        profile: xs,
    })
}

/// The `F`, `G` and `U` values of the two-stream PCC vector system.
#[derive(Clone, Copy, Debug)]
pub struct VectorPotential {
    pub f_value: f64,
    pub g_value: f64,
    pub u_value: f64,
}

/// Vector-system potential of a PCC with possibly distinct component
/// encoders, punctured with `rho = [rho0, rho1, rho2]` where `rho1`/`rho2`
/// are the upper/lower parity permeabilities (unlike the ensemble config,
/// which punctures both parity streams with `rho2`).
///
/// ```text
/// F = int_0^{x1} f_Us(eps0 z, eps1) dz + int_0^{x2} f_Ls(eps0 z, eps2) dz
/// G = x1 x2,    U = x . g(x)^T D - G - F   with D = I, g(x) = (x2, x1)
/// ```
pub fn vector_potential_pcc(
    upper: &GeneratorMatrix,
    lower: &GeneratorMatrix,
    rho: [f64; 3],
    x: [f64; 2],
    eps: f64,
) -> Result<VectorPotential> {
    for g in [upper, lower] {
        if g.input_count() != 1 || g.output_count() != 2 {
            return Err(Error::Validation(
                "the PCC vector potential needs rate-1/2 component encoders".into(),
            ));
        }
    }
    let e0 = 1.0 - (1.0 - eps) * rho[0];
    let e1 = 1.0 - (1.0 - eps) * rho[1];
    let e2 = 1.0 - (1.0 - eps) * rho[2];
    let mut eval_u = TransferEvaluator::for_trellis(&build_trellis(upper)?)?;
    let mut eval_l = TransferEvaluator::for_trellis(&build_trellis(lower)?)?;
    let f_upper = adaptive_simpson(&mut |z| Ok(eval_u.eval(&[e0 * z, e1])?[0]), 0.0, x[0], QUAD_TOL)?;
    let f_lower = adaptive_simpson(&mut |z| Ok(eval_l.eval(&[e0 * z, e2])?[0]), 0.0, x[1], QUAD_TOL)?;
    let f_value = f_upper + f_lower;
    let g_value = x[0] * x[1];
    let u_value = 2.0 * x[0] * x[1] - g_value - f_value;
    Ok(VectorPotential {
        f_value,
        g_value,
        u_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcc_sys() -> ScalarSystem {
        scalar_system(&EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7")).unwrap()
    }

    #[test]
    fn scalar_system_rejects_distinct_components() {
        let spec = EnsembleSpec::new(Family::Pcc, "1,5/7", "1,11/13");
        assert!(scalar_system(&spec).is_err());
    }

    #[test]
    fn scalar_system_rejects_bcc_without_time_varying() {
        let spec = EnsembleSpec::new(Family::Bcc1, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7");
        assert!(scalar_system(&spec).is_err());
    }

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        let mut f = |x: f64| Ok(3.0 * x * x);
        let v = adaptive_simpson(&mut f, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let mut f = |x: f64| Ok(x.sin());
        let v = adaptive_simpson(&mut f, 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn potential_vanishes_at_origin() {
        let mut sys = pcc_sys();
        for eps in [0.1, 0.5, 0.9] {
            assert_eq!(potential(&mut sys, 0.0, eps).unwrap(), 0.0);
        }
    }

    #[test]
    fn pcc_total_erasure_saturates() {
        let mut sys = pcc_sys();
        assert!((sys.f(1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sys.g(0.5).unwrap(), 0.5);
    }

    #[test]
    fn coupled_update_keeps_zero_fixed() {
        let mut sys = pcc_sys();
        let xs = vec![0.0; 20];
        let out = coupled_scalar_update(&mut sys, &xs, 0.7, 3).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn vector_potential_zero_at_origin() {
        let g = crate::trellis::parse_generator("1,5/7", crate::trellis::Notation::Octal).unwrap();
        let v = vector_potential_pcc(&g, &g, [1.0, 1.0, 1.0], [0.0, 0.0], 0.5).unwrap();
        assert_eq!(v.f_value, 0.0);
        assert_eq!(v.g_value, 0.0);
        assert_eq!(v.u_value, 0.0);
    }
}
