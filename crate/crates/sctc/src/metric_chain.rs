//! Exact BCJR erasure transfer functions via metric-support Markov chains.
//!
//! On the BEC the nonzero entries of the BCJR forward and backward metric
//! vectors are all equal, so each vector is characterized by its support: the
//! set of trellis states with nonzero metric. Under transmission of the
//! all-zero codeword the reachable supports form a finite set, and the support
//! sequence along the trellis is a Markov chain whose transition probabilities
//! are polynomials in the per-position input erasure probabilities.
//!
//! From the stationary distributions of the forward and backward chains and a
//! per-section ambiguity test, the extrinsic erasure probability of every code
//! bit follows exactly:
//!
//! ```text
//! f_l(p_1, ..., p_n) = pi_f . T_l . pi_b
//! ```
//!
//! where `T_l(i, j)` is the probability that bit `l` of a section is erased at
//! the decoder output given the adjacent supports, marginalized over the
//! erasure pattern of the other `n - 1` positions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::trellis::Trellis;
use crate::{Error, Result};

/// Default cap on the support closure size.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;
/// Support sets are stored as `u128` bitmasks over trellis states.
pub const MAX_SUPPORT_STATES: usize = 128;
/// Erasure patterns are enumerated exhaustively, exponential in `n`.
pub const MAX_OUTPUTS: usize = 8;

// Iterate past the documented 1e-12 residual contract to leave headroom for
// the downstream 1e-10 transfer-function accuracy targets.
const STEADY_RESIDUAL: f64 = 1e-14;
const POWER_ITER_CAP: usize = 100_000;
/// Switch from plain power iteration to the dense solve after this many steps.
const POWER_ITER_DIRECT: usize = 2_000;

/// Chain direction: forward metrics run with the trellis, backward against it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A set of trellis states with nonzero (unit) metric.
///
/// Bit `s` of the mask marks membership of state `s`. Every reachable support
/// contains the zero state because the all-zero codeword is always consistent
/// with the observations.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SupportVector(pub u128);

impl SupportVector {
    pub fn contains(self, state: usize) -> bool {
        self.0 >> state & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Membership indicator over the first `num_states` states, zero state first.
    pub fn indicator(self, num_states: usize) -> Vec<u8> {
        (0..num_states).map(|s| self.contains(s) as u8).collect()
    }
}

impl std::fmt::Debug for SupportVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let states: Vec<usize> = (0..128).filter(|&s| self.contains(s)).collect();
        write!(f, "{{")?;
        for (i, s) in states.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "s{}", s + 1)?;
        }
        write!(f, "}}")
    }
}

/// The reachable metric supports of one chain direction, in discovery order,
/// together with the support-to-support step map for every erasure pattern.
///
/// Erasure patterns are indexed so that bit `n - 1 - l` of the pattern id
/// marks position `l` (0-based) as erased; enumerating ids in increasing order
/// therefore visits patterns in the paper-table order used throughout.
#[derive(Clone, Debug)]
pub struct MetricStateSpace {
    direction: Direction,
    num_states: usize,
    num_outputs: usize,
    supports: Vec<SupportVector>,
    index: HashMap<u128, usize>,
    /// `step[s * 2^n + e]` is the successor support index of support `s`
    /// under erasure pattern `e`.
    step: Vec<u32>,
}

impl MetricStateSpace {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Number of trellis states the supports range over.
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn supports(&self) -> &[SupportVector] {
        &self.supports
    }

    pub fn index_of(&self, support: SupportVector) -> Option<usize> {
        self.index.get(&support.0).copied()
    }

    #[inline]
    fn successor(&self, support_idx: usize, pattern: usize) -> usize {
        self.step[(support_idx << self.num_outputs) + pattern] as usize
    }
}

/// Bit `l` of the returned mask is set when position `l` is observed (not
/// erased) under pattern id `e`.
#[inline]
fn observed_mask(e: usize, n: usize) -> u32 {
    let mut mask = 0u32;
    for l in 0..n {
        if e >> (n - 1 - l) & 1 == 0 {
            mask |= 1 << l;
        }
    }
    mask
}

/// Enumerates the closure of `{zero state}` under all erasure patterns with
/// the default support cap.
pub fn enumerate_supports(trellis: &Trellis, direction: Direction) -> Result<MetricStateSpace> {
    enumerate_supports_capped(trellis, direction, DEFAULT_SUPPORT_CAP)
}

/// Breadth-first closure of the metric supports, `{zero state}` first.
pub fn enumerate_supports_capped(
    trellis: &Trellis,
    direction: Direction,
    cap: usize,
) -> Result<MetricStateSpace> {
    let num_states = trellis.num_states();
    if num_states > MAX_SUPPORT_STATES {
        return Err(Error::TooManyStates {
            states: num_states,
            max: MAX_SUPPORT_STATES,
        });
    }
    let n = trellis.output_count();
    if n > MAX_OUTPUTS {
        return Err(Error::TooManyOutputs { n });
    }
    let num_patterns = 1usize << n;
    let obs_masks: Vec<u32> = (0..num_patterns).map(|e| observed_mask(e, n)).collect();

    let mut supports = vec![SupportVector(1)];
    let mut index = HashMap::new();
    index.insert(1u128, 0usize);
    let mut step: Vec<u32> = Vec::new();

    let mut cursor = 0usize;
    while cursor < supports.len() {
        let current = supports[cursor];
        for &obs in &obs_masks {
            let next = step_support(trellis, direction, current, obs);
            debug_assert!(next.contains(0), "support lost the zero state");
            let idx = match index.get(&next.0) {
                Some(&i) => i,
                None => {
                    if supports.len() >= cap {
                        return Err(Error::EnumerationCap { cap });
                    }
                    supports.push(next);
                    index.insert(next.0, supports.len() - 1);
                    supports.len() - 1
                }
            };
            step.push(idx as u32);
        }
        cursor += 1;
    }

    Ok(MetricStateSpace {
        direction,
        num_states,
        num_outputs: n,
        supports,
        index,
        step,
    })
}

/// One section update of a metric support under a fixed observation mask.
/// Observed positions carry the value 0 (all-zero codeword).
fn step_support(
    trellis: &Trellis,
    direction: Direction,
    support: SupportVector,
    obs: u32,
) -> SupportVector {
    let mut next = 0u128;
    match direction {
        Direction::Forward => {
            for state in 0..trellis.num_states() {
                if !support.contains(state) {
                    continue;
                }
                for input in 0..trellis.num_inputs() {
                    let (to, out) = trellis.branch(state, input);
                    if out & obs == 0 {
                        next |= 1u128 << to;
                    }
                }
            }
        }
        Direction::Backward => {
            for state in 0..trellis.num_states() {
                for input in 0..trellis.num_inputs() {
                    let (to, out) = trellis.branch(state, input);
                    if out & obs == 0 && support.contains(to) {
                        next |= 1u128 << state;
                    }
                }
            }
        }
    }
    SupportVector(next)
}

/// Column-stochastic transition matrix of a metric-support chain at a fixed
/// erasure vector.
///
/// Entry `(i, j)` is the probability of moving from the `j`-th support to the
/// `i`-th in one trellis section, so every column sums to one and the
/// stationary distribution satisfies `M . pi = pi`.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Infinity norm of `M . pi - pi`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut res = 0.0f64;
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            let yi: f64 = row.iter().zip(pi).map(|(a, b)| a * b).sum();
            res = res.max((yi - pi[i]).abs());
        }
        res
    }
}

/// Per-pattern probability weights of an erasure vector, in pattern-id order.
fn pattern_weights(p: &[f64], out: &mut Vec<f64>) {
    let n = p.len();
    out.clear();
    out.resize(1 << n, 1.0);
    for e in 0..out.len() {
        let mut w = 1.0;
        for (l, &pl) in p.iter().enumerate() {
            w *= if e >> (n - 1 - l) & 1 == 1 {
                pl
            } else {
                1.0 - pl
            };
        }
        out[e] = w;
    }
}

/// Builds the transition matrix of `space` at erasure vector `p` (one entry
/// per encoder output position, channel and a-priori combined).
pub fn transition_matrix(space: &MetricStateSpace, p: &[f64]) -> Result<TransitionMatrix> {
    if p.len() != space.num_outputs {
        return Err(Error::Validation(format!(
            "erasure vector has {} entries, encoder has {} outputs",
            p.len(),
            space.num_outputs
        )));
    }
    if let Some(&bad) = p.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Validation(format!(
            "erasure probability {bad} outside [0, 1]"
        )));
    }
    let mut weights = Vec::new();
    pattern_weights(p, &mut weights);
    let dim = space.len();
    let mut data = vec![0.0; dim * dim];
    fill_transition(space, &weights, &mut data);
    Ok(TransitionMatrix { dim, data })
}

fn fill_transition(space: &MetricStateSpace, weights: &[f64], data: &mut [f64]) {
    let dim = space.len();
    data.iter_mut().for_each(|x| *x = 0.0);
    for j in 0..dim {
        for (e, &w) in weights.iter().enumerate() {
            let i = space.successor(j, e);
            data[i * dim + j] += w;
        }
    }
}

/// Stationary distribution of a column-stochastic matrix.
///
/// Power iteration from the uniform vector with a Cesaro-averaged assist;
/// falls back to a dense least-squares solve when iteration converges slowly.
/// The result is nonnegative, sums to one, and satisfies
/// `||M . pi - pi||_inf <= 1e-12`.
pub fn steady_state(m: &TransitionMatrix) -> Result<Vec<f64>> {
    let mut pi = vec![1.0 / m.dim as f64; m.dim];
    let mut next = vec![0.0; m.dim];
    match power_iterate(m, &mut pi, &mut next, POWER_ITER_DIRECT) {
        Ok(()) => return Ok(pi),
        Err(_) => {}
    }
    if let Ok(direct) = steady_state_solve(m) {
        return Ok(direct);
    }
    // Dense solve can fail only on badly conditioned closures; grind out the
    // remaining power-iteration budget with Cesaro averaging.
    let mut avg = pi.clone();
    let mut count = 1.0;
    for _ in 0..POWER_ITER_CAP {
        matvec(m, &pi, &mut next);
        std::mem::swap(&mut pi, &mut next);
        normalize(&mut pi);
        for (a, &x) in avg.iter_mut().zip(&pi) {
            *a += x;
        }
        count += 1.0;
        let mut cand: Vec<f64> = avg.iter().map(|a| a / count).collect();
        normalize(&mut cand);
        if m.residual(&cand) <= STEADY_RESIDUAL {
            return Ok(cand);
        }
    }
    Err(Error::SteadyState {
        residual: m.residual(&pi),
    })
}

fn power_iterate(
    m: &TransitionMatrix,
    pi: &mut Vec<f64>,
    next: &mut Vec<f64>,
    max_steps: usize,
) -> std::result::Result<(), ()> {
    for _ in 0..max_steps {
        matvec(m, pi, next);
        let mut res = 0.0f64;
        for (a, b) in next.iter().zip(pi.iter()) {
            res = res.max((a - b).abs());
        }
        std::mem::swap(pi, next);
        normalize(pi);
        if res <= STEADY_RESIDUAL {
            return Ok(());
        }
    }
    Err(())
}

#[inline]
fn matvec(m: &TransitionMatrix, x: &[f64], y: &mut [f64]) {
    let dim = m.dim;
    for i in 0..dim {
        let row = &m.data[i * dim..(i + 1) * dim];
        y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

fn normalize(x: &mut [f64]) {
    let sum: f64 = x.iter().sum();
    if sum > 0.0 {
        x.iter_mut().for_each(|v| *v /= sum);
    }
}

/// Direct stationary solve of `(M - I) pi = 0`, `sum pi = 1` via the normal
/// equations; used as a fallback and as an independent oracle in tests.
pub fn steady_state_solve(m: &TransitionMatrix) -> Result<Vec<f64>> {
    let dim = m.dim;
    // A = [M - I; 1^T], b = [0; 1]; solve A^T A x = A^T b.
    let mut ata = vec![0.0f64; dim * dim];
    for c1 in 0..dim {
        for c2 in 0..dim {
            let mut acc = 1.0; // ones-row contribution
            for r in 0..dim {
                let a1 = m.entry(r, c1) - if r == c1 { 1.0 } else { 0.0 };
                let a2 = m.entry(r, c2) - if r == c2 { 1.0 } else { 0.0 };
                acc += a1 * a2;
            }
            ata[c1 * dim + c2] = acc;
        }
    }
    let rhs = vec![1.0f64; dim]; // A^T b = ones
    let mut pi = solve_dense(&mut ata, rhs, dim)?;
    for v in pi.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-9 {
                return Err(Error::SteadyState { residual: -*v });
            }
            *v = 0.0;
        }
    }
    normalize(&mut pi);
    let residual = m.residual(&pi);
    if residual <= STEADY_RESIDUAL {
        Ok(pi)
    } else {
        Err(Error::SteadyState { residual })
    }
}

/// Gaussian elimination with partial pivoting; consumes the matrix buffer.
fn solve_dense(a: &mut [f64], mut b: Vec<f64>, dim: usize) -> Result<Vec<f64>> {
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r1, &r2| {
                a[r1 * dim + col]
                    .abs()
                    .total_cmp(&a[r2 * dim + col].abs())
            })
            .unwrap();
        let pivot = a[pivot_row * dim + col];
        if pivot.abs() < 1e-300 {
            return Err(Error::SteadyState { residual: f64::NAN });
        }
        if pivot_row != col {
            for k in 0..dim {
                a.swap(col * dim + k, pivot_row * dim + k);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..dim {
            let factor = a[row * dim + col] / a[col * dim + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..dim {
                a[row * dim + k] -= factor * a[col * dim + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; dim];
    for row in (0..dim).rev() {
        let mut acc = b[row];
        for k in row + 1..dim {
            acc -= a[row * dim + k] * x[k];
        }
        x[row] = acc / a[row * dim + row];
    }
    Ok(x)
}

/// Immutable per-trellis tables: both support spaces plus the precomputed
/// reachability masks behind the per-bit ambiguity test. Safe to share across
/// threads; built once per trellis fingerprint.
#[derive(Debug)]
pub struct TransferTable {
    n: usize,
    num_subpatterns: usize,
    forward: MetricStateSpace,
    backward: MetricStateSpace,
    /// `reach[(l * 2^(n-1) + ep) * |Mf| + i]` holds the end-state masks of
    /// branches from forward support `i` that are consistent with observed
    /// zeros under sub-pattern `ep` and carry bit `l` equal to 0 / 1.
    reach: Vec<[u128; 2]>,
    /// `others[l]` lists the positions different from `l` in increasing order.
    others: Vec<Vec<usize>>,
    fingerprint: u64,
}

impl TransferTable {
    pub fn build(trellis: &Trellis) -> Result<Self> {
        let forward = enumerate_supports(trellis, Direction::Forward)?;
        let backward = enumerate_supports(trellis, Direction::Backward)?;
        let n = trellis.output_count();
        let num_subpatterns = 1usize << (n - 1);
        let others: Vec<Vec<usize>> = (0..n)
            .map(|l| (0..n).filter(|&j| j != l).collect())
            .collect();

        let mut reach = vec![[0u128; 2]; n * num_subpatterns * forward.len()];
        for l in 0..n {
            for ep in 0..num_subpatterns {
                let mut obs = 0u32;
                for (b, &pos) in others[l].iter().enumerate() {
                    if ep >> b & 1 == 0 {
                        obs |= 1 << pos;
                    }
                }
                for (i, &support) in forward.supports().iter().enumerate() {
                    let mut masks = [0u128; 2];
                    for state in 0..trellis.num_states() {
                        if !support.contains(state) {
                            continue;
                        }
                        for input in 0..trellis.num_inputs() {
                            let (to, out) = trellis.branch(state, input);
                            if out & obs == 0 {
                                masks[(out >> l & 1) as usize] |= 1u128 << to;
                            }
                        }
                    }
                    reach[(l * num_subpatterns + ep) * forward.len() + i] = masks;
                }
            }
        }

        Ok(TransferTable {
            n,
            num_subpatterns,
            forward,
            backward,
            reach,
            others,
            fingerprint: trellis.fingerprint(),
        })
    }

    /// Cached table for this trellis, building it on first use.
    pub fn get_or_build(trellis: &Trellis) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<TransferTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().unwrap().get(&trellis.fingerprint()) {
            return Ok(Arc::clone(t));
        }
        let built = Arc::new(Self::build(trellis)?);
        let mut guard = cache.lock().unwrap();
        Ok(Arc::clone(
            guard.entry(trellis.fingerprint()).or_insert(built),
        ))
    }

    pub fn forward(&self) -> &MetricStateSpace {
        &self.forward
    }

    pub fn backward(&self) -> &MetricStateSpace {
        &self.backward
    }

    pub fn output_count(&self) -> usize {
        self.n
    }
}

const MEMO_QUANTUM: f64 = 1e-14;
const MEMO_CAP: usize = 1 << 18;

type MemoKey = [i64; MAX_OUTPUTS];
type MemoVal = [f64; MAX_OUTPUTS];

/// Evaluates transfer functions for one trellis, memoizing on the quantized
/// erasure vector. Cloning shares the table but starts an empty memo, so each
/// worker can own an evaluator.
#[derive(Debug)]
pub struct TransferEvaluator {
    table: Arc<TransferTable>,
    memo: HashMap<MemoKey, MemoVal>,
    weights: Vec<f64>,
    mat: Vec<f64>,
    pi_f: Vec<f64>,
    pi_b: Vec<f64>,
    scratch: Vec<f64>,
}

impl Clone for TransferEvaluator {
    fn clone(&self) -> Self {
        Self::new(Arc::clone(&self.table))
    }
}

impl TransferEvaluator {
    pub fn new(table: Arc<TransferTable>) -> Self {
        let dim = table.forward.len().max(table.backward.len());
        TransferEvaluator {
            table,
            memo: HashMap::new(),
            weights: Vec::new(),
            mat: vec![0.0; dim * dim],
            pi_f: Vec::new(),
            pi_b: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn for_trellis(trellis: &Trellis) -> Result<Self> {
        Ok(Self::new(TransferTable::get_or_build(trellis)?))
    }

    pub fn table(&self) -> &TransferTable {
        &self.table
    }

    pub fn output_count(&self) -> usize {
        self.table.n
    }

    /// Trellis fingerprint of the underlying table.
    pub fn fingerprint(&self) -> u64 {
        self.table.fingerprint
    }

    /// Extrinsic erasure probabilities of all `n` code bits at input erasure
    /// vector `p` (channel and a-priori combined, one entry per position).
    pub fn transfer(&mut self, p: &[f64]) -> Result<Vec<f64>> {
        let vals = self.eval(p)?;
        Ok(vals[..self.table.n].to_vec())
    }

    /// Extrinsic erasure probability of the single position `l` (0-based).
    pub fn extrinsic_prob(&mut self, p: &[f64], l: usize) -> Result<f64> {
        if l >= self.table.n {
            return Err(Error::Validation(format!(
                "output index {l} out of range for n = {}",
                self.table.n
            )));
        }
        Ok(self.eval(p)?[l])
    }

    /// Fixed-size variant used by the density-evolution inner loops.
    pub(crate) fn eval(&mut self, p: &[f64]) -> Result<MemoVal> {
        let n = self.table.n;
        if p.len() != n {
            return Err(Error::Validation(format!(
                "erasure vector has {} entries, encoder has {n} outputs",
                p.len()
            )));
        }
        let mut key: MemoKey = [0; MAX_OUTPUTS];
        for (k, &x) in key.iter_mut().zip(p) {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Validation(format!(
                    "erasure probability {x} outside [0, 1]"
                )));
            }
            *k = (x / MEMO_QUANTUM).round() as i64;
        }
        if let Some(hit) = self.memo.get(&key) {
            return Ok(*hit);
        }

        pattern_weights(p, &mut self.weights);
        let forward = &self.table.forward;
        let backward = &self.table.backward;

        let dim_f = forward.len();
        fill_transition(forward, &self.weights, &mut self.mat[..dim_f * dim_f]);
        let mf = TransitionMatrix {
            dim: dim_f,
            data: self.mat[..dim_f * dim_f].to_vec(),
        };
        self.pi_f = steady_state(&mf)?;

        let dim_b = backward.len();
        fill_transition(backward, &self.weights, &mut self.mat[..dim_b * dim_b]);
        let mb = TransitionMatrix {
            dim: dim_b,
            data: self.mat[..dim_b * dim_b].to_vec(),
        };
        self.pi_b = steady_state(&mb)?;

        // Weight of each backward support, masked by reachability below.
        self.scratch.clear();
        self.scratch.extend(self.pi_b.iter());

        let mut out: MemoVal = [0.0; MAX_OUTPUTS];
        for l in 0..n {
            let mut total = 0.0;
            for ep in 0..self.table.num_subpatterns {
                // Probability of this sub-pattern on the other n-1 positions.
                let mut w = 1.0;
                for (b, &pos) in self.table.others[l].iter().enumerate() {
                    w *= if ep >> b & 1 == 1 {
                        p[pos]
                    } else {
                        1.0 - p[pos]
                    };
                }
                if w == 0.0 {
                    continue;
                }
                let base = (l * self.table.num_subpatterns + ep) * dim_f;
                let mut s = 0.0;
                for i in 0..dim_f {
                    let pf = self.pi_f[i];
                    if pf == 0.0 {
                        continue;
                    }
                    let [m0, m1] = self.table.reach[base + i];
                    if m0 == 0 || m1 == 0 {
                        continue;
                    }
                    let mut inner = 0.0;
                    for (j, &support) in backward.supports().iter().enumerate() {
                        if m0 & support.0 != 0 && m1 & support.0 != 0 {
                            inner += self.pi_b[j];
                        }
                    }
                    s += pf * inner;
                }
                total += w * s;
            }
            out[l] = total.clamp(0.0, 1.0);
        }

        if self.memo.len() >= MEMO_CAP {
            self.memo.clear();
        }
        self.memo.insert(key, out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trellis::{build_trellis, parse_generator, Notation};

    fn space(spec: &str, direction: Direction) -> MetricStateSpace {
        let g = parse_generator(spec, Notation::Octal).unwrap();
        let t = build_trellis(&g).unwrap();
        enumerate_supports(&t, direction).unwrap()
    }

    #[test]
    fn single_state_trellis_has_one_support() {
        let s = space("1,1", Direction::Forward);
        assert_eq!(s.len(), 1);
        assert_eq!(s.supports()[0], SupportVector(1));
    }

    #[test]
    fn four_state_bcc_component_has_five_supports() {
        // Rate-2/3 4-state encoder; both directions have cardinality 5 and the
        // forward discovery order matches the published listing.
        let fwd = space("1 0 1/7; 0 1 5/7", Direction::Forward);
        let bwd = space("1 0 1/7; 0 1 5/7", Direction::Backward);
        assert_eq!(fwd.len(), 5);
        assert_eq!(bwd.len(), 5);
        let expected = [0b0001u128, 0b0011, 0b1001, 0b0101, 0b1111];
        for (s, &e) in fwd.supports().iter().zip(&expected) {
            assert_eq!(s.0, e, "forward discovery order");
        }
        let mut fwd_set: Vec<u128> = fwd.supports().iter().map(|s| s.0).collect();
        let mut bwd_set: Vec<u128> = bwd.supports().iter().map(|s| s.0).collect();
        fwd_set.sort_unstable();
        bwd_set.sort_unstable();
        assert_eq!(fwd_set, bwd_set, "directions share the same support sets");
    }

    #[test]
    fn forward_and_backward_cardinalities_match_for_rate_half() {
        // Brute-force BFS oracle: both directions closed under all patterns.
        for spec in ["1,5/7", "1,11/13", "1,1/3"] {
            let fwd = space(spec, Direction::Forward);
            let bwd = space(spec, Direction::Backward);
            assert_eq!(fwd.len(), bwd.len(), "{spec}");
            assert!(fwd.supports().iter().all(|s| s.contains(0)));
            assert!(bwd.supports().iter().all(|s| s.contains(0)));
        }
    }

    #[test]
    fn transition_matrix_columns_are_stochastic() {
        let s = space("1 0 1/7; 0 1 5/7", Direction::Forward);
        for p in [[0.3, 0.6, 0.9], [0.0, 0.5, 1.0], [0.5, 0.5, 0.5]] {
            let m = transition_matrix(&s, &p).unwrap();
            for j in 0..m.dim() {
                let col: f64 = (0..m.dim()).map(|i| m.entry(i, j)).sum();
                assert!((col - 1.0).abs() < 1e-14, "column {j} sums to {col}");
            }
        }
    }

    #[test]
    fn no_erasures_pin_the_zero_support() {
        let s = space("1,5/7", Direction::Forward);
        let m = transition_matrix(&s, &[0.0, 0.0]).unwrap();
        // {zero} is absorbing and the decoder always resynchronizes to it.
        assert_eq!(m.entry(0, 0), 1.0);
        let pi = steady_state(&m).unwrap();
        assert!((pi[0] - 1.0).abs() < 1e-12);
        assert!(pi[1..].iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn steady_state_matches_dense_solve() {
        let s = space("1 0 1/7; 0 1 5/7", Direction::Forward);
        for p in [[0.5, 0.5, 0.5], [0.2, 0.7, 0.4], [0.9, 0.9, 0.9]] {
            let m = transition_matrix(&s, &p).unwrap();
            let pi = steady_state(&m).unwrap();
            let oracle = steady_state_solve(&m).unwrap();
            for (a, b) in pi.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b} at p={p:?}");
            }
            assert!(m.residual(&pi) <= 1e-12);
            let sum: f64 = pi.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_ones_steady_state_is_valid() {
        let s = space("1,5/7", Direction::Forward);
        let m = transition_matrix(&s, &[1.0, 1.0]).unwrap();
        let pi = steady_state(&m).unwrap();
        assert!(m.residual(&pi) <= 1e-12);
    }

    /// Closed-form transfer of the 2-state accumulator-style (1, 1/3) encoder,
    /// derived from its two-support chains.
    fn two_state_systematic_transfer(p1: f64, p2: f64) -> f64 {
        let da = 1.0 - p2 + p1 * p2;
        let pf1 = (1.0 - p2) / da;
        let pf2 = p1 * p2 / da;
        let db = (1.0 - p1) * (1.0 - p2) + p1;
        let pb2 = p1 / db;
        pf1 * pb2 * p2 + pf2
    }

    #[test]
    fn two_state_transfer_matches_closed_form() {
        let g = parse_generator("1,1/3", Notation::Octal).unwrap();
        let t = build_trellis(&g).unwrap();
        let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
        for &(p1, p2) in &[(0.5, 0.5), (0.3, 0.8), (0.9, 0.1), (0.25, 0.75)] {
            let f = eval.transfer(&[p1, p2]).unwrap();
            let expect = two_state_systematic_transfer(p1, p2);
            assert!(
                (f[0] - expect).abs() < 1e-12,
                "f_1({p1},{p2}) = {} expected {expect}",
                f[0]
            );
        }
    }

    #[test]
    fn zero_erasure_input_gives_zero_transfer() {
        for spec in ["1,5/7", "1,11/13", "1 0 1/7; 0 1 5/7"] {
            let g = parse_generator(spec, Notation::Octal).unwrap();
            let t = build_trellis(&g).unwrap();
            let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
            let p = vec![0.0; g.output_count()];
            let f = eval.transfer(&p).unwrap();
            assert!(f.iter().all(|&x| x == 0.0), "{spec}: {f:?}");
        }
    }

    #[test]
    fn recursive_rate_half_saturates_at_full_erasure() {
        let g = parse_generator("1,5/7", Notation::Octal).unwrap();
        let t = build_trellis(&g).unwrap();
        let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
        let f = eval.transfer(&[1.0, 1.0]).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-12);
        assert!((f[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_code_swaps_positions() {
        // (1,1) duplicates the input, so each bit is recovered from the other.
        let g = parse_generator("1,1", Notation::Octal).unwrap();
        let t = build_trellis(&g).unwrap();
        let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
        let f = eval.transfer(&[0.3, 0.8]).unwrap();
        assert!((f[0] - 0.8).abs() < 1e-15);
        assert!((f[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn memoization_returns_identical_values() {
        let g = parse_generator("1,5/7", Notation::Octal).unwrap();
        let t = build_trellis(&g).unwrap();
        let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
        let a = eval.transfer(&[0.37, 0.61]).unwrap();
        let b = eval.transfer(&[0.37, 0.61]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_in_every_argument_spot_check() {
        let g = parse_generator("1 0 1/7; 0 1 5/7", Notation::Octal).unwrap();
        let t = build_trellis(&g).unwrap();
        let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
        let base = [0.4, 0.5, 0.6];
        let f0 = eval.transfer(&base).unwrap();
        for l in 0..3 {
            let mut bumped = base;
            bumped[l] += 0.2;
            let f1 = eval.transfer(&bumped).unwrap();
            for (a, b) in f0.iter().zip(&f1) {
                assert!(b + 1e-12 >= *a, "bump {l}: {f0:?} -> {f1:?}");
            }
        }
    }
}
