//! Ensemble families and their exact density-evolution updates.
//!
//! Four families are supported: parallel concatenated codes (PCC), serially
//! concatenated codes (SCC), and braided convolutional codes with parity-only
//! coupling (Type I) or parity-and-information coupling (Type II). Each
//! ensemble couples `L` code blocks with memory `m`; `m = 0` (PCC/SCC) or a
//! tail-bitten chain of length `L = 1` (BCC) recovers the uncoupled ensemble.
//!
//! Messages live on the compact graph: one erasure probability per message
//! type per time slot. Terminated chains read any message outside `[0, L)` as
//! a perfect (zero-erasure) message; tail-biting chains wrap the index.
//!
//! Random puncturing with permeability `rho` replaces a stream's channel
//! quality by `eps_rho = 1 - (1 - eps) * rho`: information bits use `rho0`,
//! parity streams use `rho2` (PCC/BCC) or `rho1`/`rho2` for the outer/inner
//! parity of an SCC.

use serde::{Deserialize, Serialize};

use crate::metric_chain::TransferEvaluator;
use crate::trellis::{build_trellis, parse_generator, GeneratorMatrix, Notation};
use crate::{Error, Result};

/// Ensemble family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "PCC")]
    Pcc,
    #[serde(rename = "SCC")]
    Scc,
    #[serde(rename = "BCC1")]
    Bcc1,
    #[serde(rename = "BCC2")]
    Bcc2,
}

impl Family {
    pub fn is_bcc(self) -> bool {
        matches!(self, Family::Bcc1 | Family::Bcc2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Pcc => "PCC",
            Family::Scc => "SCC",
            Family::Bcc1 => "BCC1",
            Family::Bcc2 => "BCC2",
        }
    }
}

fn default_rho() -> f64 {
    1.0
}

fn default_chain_length() -> usize {
    1
}

/// Declarative description of an ensemble; serializes to the JSON config
/// format used by the command-line tool.
///
/// Generator strings are octal by default (`"1,5/7"`); a `0b` prefix switches
/// the whole string to binary coefficient notation, lowest degree first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: Family,
    /// Upper component encoder (PCC/BCC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<String>,
    /// Lower component encoder (PCC/BCC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<String>,
    /// Outer component encoder (SCC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<String>,
    /// Inner component encoder (SCC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<String>,
    /// Coupling memory; 0 means uncoupled for PCC/SCC, BCC requires >= 1.
    #[serde(default)]
    pub m: usize,
    /// Coupling chain length.
    #[serde(rename = "L", default = "default_chain_length")]
    pub chain_length: usize,
    /// Permeability of the information stream.
    #[serde(default = "default_rho")]
    pub rho0: f64,
    /// Permeability of the outer parity stream (SCC only).
    #[serde(default = "default_rho")]
    pub rho1: f64,
    /// Permeability of the (inner) parity stream(s).
    #[serde(default = "default_rho")]
    pub rho2: f64,
    /// Replace every BCC edge transfer by the average over the three edges,
    /// modeling component encoders with time-varying trellises.
    #[serde(rename = "timeVarying", default)]
    pub time_varying: bool,
    /// Nominal trellis length; informational only, DE is independent of it.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub trellis_length: Option<u64>,
    /// Wrap message indices modulo `L` instead of terminating the chain.
    /// Forced on for BCC with `L = 1` (the uncoupled BCC ensemble).
    #[serde(skip)]
    pub tailbiting: bool,
}

impl EnsembleSpec {
    /// PCC/BCC constructor with upper and lower generator strings.
    pub fn new(family: Family, first: &str, second: &str) -> Self {
        let (upper, lower, outer, inner) = match family {
            Family::Scc => (None, None, Some(first.into()), Some(second.into())),
            _ => (Some(first.into()), Some(second.into()), None, None),
        };
        EnsembleSpec {
            family,
            upper,
            lower,
            outer,
            inner,
            m: if family.is_bcc() { 1 } else { 0 },
            chain_length: 1,
            rho0: 1.0,
            rho1: 1.0,
            rho2: 1.0,
            time_varying: false,
            trellis_length: None,
            tailbiting: false,
        }
    }

    pub fn with_coupling(mut self, m: usize, chain_length: usize) -> Self {
        self.m = m;
        self.chain_length = chain_length;
        self
    }

    pub fn with_puncturing(mut self, rho0: f64, rho1: f64, rho2: f64) -> Self {
        self.rho0 = rho0;
        self.rho1 = rho1;
        self.rho2 = rho2;
        self
    }

    pub fn with_time_varying(mut self, on: bool) -> Self {
        self.time_varying = on;
        self
    }

    pub fn with_tailbiting(mut self, on: bool) -> Self {
        self.tailbiting = on;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Design rate after puncturing, ignoring termination rate loss.
    pub fn rate(&self) -> f64 {
        match self.family {
            Family::Scc => 1.0 / (self.rho0 + self.rho1 + 2.0 * self.rho2),
            _ => 1.0 / (self.rho0 + 2.0 * self.rho2),
        }
    }

    /// True when the spec describes the uncoupled ensemble the in-family
    /// MAP-threshold machinery operates on.
    pub fn is_uncoupled(&self) -> bool {
        if self.family.is_bcc() {
            self.chain_length == 1
        } else {
            self.m == 0 && self.chain_length == 1
        }
    }

    /// State count of the larger component trellis; table metadata.
    pub fn component_states(&self) -> Result<usize> {
        let (a, b) = self.component_strings()?;
        let sa = build_trellis(&parse_component(a)?)?.num_states();
        let sb = build_trellis(&parse_component(b)?)?.num_states();
        Ok(sa.max(sb))
    }

    fn component_strings(&self) -> Result<(&str, &str)> {
        let missing = |which: &str| {
            Error::Validation(format!(
                "{} ensemble requires the `{which}` generator",
                self.family.as_str()
            ))
        };
        match self.family {
            Family::Scc => Ok((
                self.outer.as_deref().ok_or_else(|| missing("outer"))?,
                self.inner.as_deref().ok_or_else(|| missing("inner"))?,
            )),
            _ => Ok((
                self.upper.as_deref().ok_or_else(|| missing("upper"))?,
                self.lower.as_deref().ok_or_else(|| missing("lower"))?,
            )),
        }
    }
}

/// Parses a generator string, honoring the optional `0b` binary prefix.
pub fn parse_component(s: &str) -> Result<GeneratorMatrix> {
    match s.strip_prefix("0b") {
        Some(rest) => parse_generator(rest, Notation::Binary),
        None => parse_generator(s, Notation::Octal),
    }
}

/// Per-slot messages of a PCC chain: extrinsic erasure probabilities from the
/// upper/lower factor node toward the systematic and parity sequences.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PccMsgs {
    pub upper_sys: f64,
    pub upper_par: f64,
    pub lower_sys: f64,
    pub lower_par: f64,
}

/// Per-slot messages of an SCC chain.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SccMsgs {
    pub outer_sys: f64,
    pub outer_par: f64,
    pub inner_sys: f64,
    pub inner_par: f64,
}

/// Per-slot messages of a BCC chain, one triple per factor node edge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BccMsgs {
    pub upper: [f64; 3],
    pub lower: [f64; 3],
}

/// Erasure probabilities of every message in the chain, one entry per slot.
#[derive(Clone, Debug, PartialEq)]
pub enum DeState {
    Pcc(Vec<PccMsgs>),
    Scc(Vec<SccMsgs>),
    Bcc(Vec<BccMsgs>),
}

impl DeState {
    pub fn all_ones(family: Family, chain_length: usize) -> Self {
        match family {
            Family::Pcc => DeState::Pcc(vec![
                PccMsgs {
                    upper_sys: 1.0,
                    upper_par: 1.0,
                    lower_sys: 1.0,
                    lower_par: 1.0,
                };
                chain_length
            ]),
            Family::Scc => DeState::Scc(vec![
                SccMsgs {
                    outer_sys: 1.0,
                    outer_par: 1.0,
                    inner_sys: 1.0,
                    inner_par: 1.0,
                };
                chain_length
            ]),
            _ => DeState::Bcc(vec![
                BccMsgs {
                    upper: [1.0; 3],
                    lower: [1.0; 3],
                };
                chain_length
            ]),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DeState::Pcc(v) => v.len(),
            DeState::Scc(v) => v.len(),
            DeState::Bcc(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All message values flattened, slot-major.
    pub fn flat(&self) -> Vec<f64> {
        match self {
            DeState::Pcc(v) => v
                .iter()
                .flat_map(|x| [x.upper_sys, x.upper_par, x.lower_sys, x.lower_par])
                .collect(),
            DeState::Scc(v) => v
                .iter()
                .flat_map(|x| [x.outer_sys, x.outer_par, x.inner_sys, x.inner_par])
                .collect(),
            DeState::Bcc(v) => v
                .iter()
                .flat_map(|x| {
                    let mut a = [0.0; 6];
                    a[..3].copy_from_slice(&x.upper);
                    a[3..].copy_from_slice(&x.lower);
                    a
                })
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &DeState) -> f64 {
        self.flat()
            .iter()
            .zip(other.flat())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.flat().iter().fold(0.0f64, |acc, &x| acc.max(x))
    }
}

fn eps_rho(eps: f64, rho: f64) -> f64 {
    1.0 - (1.0 - eps) * rho
}

/// A validated ensemble bound to its transfer-function evaluators.
///
/// [`update`](EnsembleDe::update) is a pure state-to-state map; the only
/// mutability is the transfer memo cache, so cloning yields an independent
/// worker sharing the immutable trellis tables.
#[derive(Clone, Debug)]
pub struct EnsembleDe {
    spec: EnsembleSpec,
    m: usize,
    len: usize,
    tailbiting: bool,
    comp_a: TransferEvaluator,
    comp_b: TransferEvaluator,
    identical: bool,
    label_a: String,
    label_b: String,
    states: usize,
}

impl EnsembleDe {
    pub fn new(spec: &EnsembleSpec) -> Result<Self> {
        let mut spec = spec.clone();
        for (name, rho) in [("rho0", spec.rho0), ("rho1", spec.rho1), ("rho2", spec.rho2)] {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::Validation(format!(
                    "{name} = {rho} outside [0, 1]"
                )));
            }
        }
        if spec.chain_length == 0 {
            return Err(Error::Validation("chain length L must be >= 1".into()));
        }
        if spec.family.is_bcc() {
            if spec.m == 0 {
                return Err(Error::Validation(
                    "BCC ensembles require coupling memory m >= 1; the uncoupled \
                     ensemble is the tail-bitten chain of length L = 1 with m = 1"
                        .into(),
                ));
            }
            if spec.chain_length == 1 {
                spec.tailbiting = true;
            }
        }
        if !spec.family.is_bcc() && spec.rho1 != 1.0 && spec.family == Family::Pcc {
            return Err(Error::Validation(
                "PCC puncturing uses rho2 for both parity streams; leave rho1 at 1".into(),
            ));
        }
        if spec.time_varying && !spec.family.is_bcc() {
            return Err(Error::Validation(
                "timeVarying applies to BCC ensembles only".into(),
            ));
        }

        let (first, second) = spec.component_strings()?;
        let ga = parse_component(first)?;
        let gb = parse_component(second)?;
        let (want_k, want_n) = if spec.family.is_bcc() { (2, 3) } else { (1, 2) };
        for (g, name) in [(&ga, "first"), (&gb, "second")] {
            if g.input_count() != want_k || g.output_count() != want_n {
                return Err(Error::Validation(format!(
                    "{} ensemble needs rate-{want_k}/{want_n} components, the {name} \
                     generator is {}x{}",
                    spec.family.as_str(),
                    g.input_count(),
                    g.output_count()
                )));
            }
        }
        let ta = build_trellis(&ga)?;
        let tb = build_trellis(&gb)?;
        let identical = ta.fingerprint() == tb.fingerprint();
        let states = ta.num_states().max(tb.num_states());
        Ok(EnsembleDe {
            m: spec.m,
            len: spec.chain_length,
            tailbiting: spec.tailbiting,
            comp_a: TransferEvaluator::for_trellis(&ta)?,
            comp_b: TransferEvaluator::for_trellis(&tb)?,
            identical,
            label_a: ga.octal_label(),
            label_b: gb.octal_label(),
            states,
            spec,
        })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn chain_length(&self) -> usize {
        self.len
    }

    pub fn coupling_memory(&self) -> usize {
        self.m
    }

    pub fn rate(&self) -> f64 {
        self.spec.rate()
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn identical_components(&self) -> bool {
        self.identical
    }

    pub fn component_labels(&self) -> (&str, &str) {
        (&self.label_a, &self.label_b)
    }

    pub fn initial_state(&self) -> DeState {
        DeState::all_ones(self.spec.family, self.len)
    }

    #[inline]
    fn slot(&self, t: i64) -> Option<usize> {
        if self.tailbiting {
            Some(t.rem_euclid(self.len as i64) as usize)
        } else if t >= 0 && (t as usize) < self.len {
            Some(t as usize)
        } else {
            None
        }
    }

    /// One flooding iteration of the exact DE equations.
    pub fn update(&mut self, state: &DeState, eps: f64) -> Result<DeState> {
        check_eps(eps)?;
        match (self.spec.family, state) {
            (Family::Pcc, DeState::Pcc(v)) => self.update_pcc(v, eps),
            (Family::Scc, DeState::Scc(v)) => self.update_scc(v, eps),
            (Family::Bcc1, DeState::Bcc(v)) => self.update_bcc(v, eps, false),
            (Family::Bcc2, DeState::Bcc(v)) => self.update_bcc(v, eps, true),
            _ => Err(Error::Validation(
                "density-evolution state does not match the ensemble family".into(),
            )),
        }
    }

    fn update_pcc(&mut self, v: &[PccMsgs], eps: f64) -> Result<DeState> {
        let e0 = eps_rho(eps, self.spec.rho0);
        let e2 = eps_rho(eps, self.spec.rho2);
        let span = (self.m + 1) as f64;
        let mut out = Vec::with_capacity(v.len());
        for t in 0..v.len() as i64 {
            let mut sum_upper = 0.0;
            let mut sum_lower = 0.0;
            for k in 0..=self.m as i64 {
                for j in 0..=self.m as i64 {
                    if let Some(s) = self.slot(t + j - k) {
                        sum_upper += v[s].upper_sys;
                        sum_lower += v[s].lower_sys;
                    }
                }
            }
            let q_to_upper = e0 * sum_lower / (span * span);
            let q_to_lower = e0 * sum_upper / (span * span);
            let fu = self.comp_a.eval(&[q_to_upper, e2])?;
            let fl = self.comp_b.eval(&[q_to_lower, e2])?;
            out.push(PccMsgs {
                upper_sys: fu[0],
                upper_par: fu[1],
                lower_sys: fl[0],
                lower_par: fl[1],
            });
        }
        Ok(DeState::Pcc(out))
    }

    fn update_scc(&mut self, v: &[SccMsgs], eps: f64) -> Result<DeState> {
        let e0 = eps_rho(eps, self.spec.rho0);
        let e1 = eps_rho(eps, self.spec.rho1);
        let e2 = eps_rho(eps, self.spec.rho2);
        let span = (self.m + 1) as f64;
        let mut out = vec![SccMsgs::default(); v.len()];

        // Outer factor nodes see the previous inner messages.
        for t in 0..v.len() as i64 {
            let mut qbar = 0.0;
            for j in 0..=self.m as i64 {
                if let Some(s) = self.slot(t + j) {
                    qbar += v[s].inner_sys;
                }
            }
            qbar /= span;
            let fo = self.comp_a.eval(&[e0 * qbar, e1 * qbar])?;
            out[t as usize].outer_sys = fo[0];
            out[t as usize].outer_par = fo[1];
        }

        // Inner factor nodes see the outer messages just computed.
        for t in 0..v.len() as i64 {
            let mut q = 0.0;
            for k in 0..=self.m as i64 {
                if let Some(s) = self.slot(t - k) {
                    q += (e0 * out[s].outer_sys + e1 * out[s].outer_par) / 2.0;
                }
            }
            q /= span;
            let fi = self.comp_b.eval(&[q, e2])?;
            out[t as usize].inner_sys = fi[0];
            out[t as usize].inner_par = fi[1];
        }
        Ok(DeState::Scc(out))
    }

    fn update_bcc(&mut self, v: &[BccMsgs], eps: f64, couple_info: bool) -> Result<DeState> {
        let e0 = eps_rho(eps, self.spec.rho0);
        let e2 = eps_rho(eps, self.spec.rho2);
        let m = self.m as i64;
        let span = (self.m + 1) as f64;
        let time_varying = self.spec.time_varying;
        let mut out = Vec::with_capacity(v.len());
        for t in 0..v.len() as i64 {
            // Inputs to the upper factor node come from lower messages and
            // vice versa; the chain is symmetric under swapping the roles.
            let q_info = |pick: fn(&BccMsgs) -> f64, me: &Self| -> f64 {
                if couple_info {
                    let mut acc = 0.0;
                    for k in 0..=me.m as i64 {
                        for j in 0..=me.m as i64 {
                            if let Some(s) = me.slot(t + j - k) {
                                acc += pick(&v[s]);
                            }
                        }
                    }
                    e0 * acc / (span * span)
                } else {
                    me.slot(t).map_or(0.0, |s| e0 * pick(&v[s]))
                }
            };
            let q1_upper = q_info(|x| x.lower[0], self);
            let q1_lower = q_info(|x| x.upper[0], self);

            let mut q2_upper = 0.0;
            let mut q3_upper = 0.0;
            let mut q2_lower = 0.0;
            let mut q3_lower = 0.0;
            for j in 1..=m {
                if let Some(s) = self.slot(t - j) {
                    q2_upper += v[s].lower[2];
                    q2_lower += v[s].upper[2];
                }
                if let Some(s) = self.slot(t + j) {
                    q3_upper += v[s].lower[1];
                    q3_lower += v[s].upper[1];
                }
            }
            let scale = e2 / m as f64;
            let fu = bcc_eval(
                &mut self.comp_a,
                [q1_upper, scale * q2_upper, scale * q3_upper],
                time_varying,
            )?;
            let fl = bcc_eval(
                &mut self.comp_b,
                [q1_lower, scale * q2_lower, scale * q3_lower],
                time_varying,
            )?;
            out.push(BccMsgs {
                upper: fu,
                lower: fl,
            });
        }
        Ok(DeState::Bcc(out))
    }

    /// A-posteriori erasure probability of the information bits, per slot.
    pub fn aposteriori(&self, state: &DeState, eps: f64) -> Result<Vec<f64>> {
        check_eps(eps)?;
        let e0 = eps_rho(eps, self.spec.rho0);
        let span = (self.m + 1) as f64;
        match (self.spec.family, state) {
            (Family::Pcc, DeState::Pcc(v)) => Ok((0..v.len() as i64)
                .map(|t| {
                    let (mut qu, mut ql) = (0.0, 0.0);
                    for j in 0..=self.m as i64 {
                        if let Some(s) = self.slot(t + j) {
                            qu += v[s].upper_sys;
                            ql += v[s].lower_sys;
                        }
                    }
                    e0 * (qu / span) * (ql / span)
                })
                .collect()),
            (Family::Scc, DeState::Scc(v)) => Ok((0..v.len() as i64)
                .map(|t| {
                    let mut qi = 0.0;
                    for j in 0..=self.m as i64 {
                        if let Some(s) = self.slot(t + j) {
                            qi += v[s].inner_sys;
                        }
                    }
                    e0 * v[t as usize].outer_sys * (qi / span)
                })
                .collect()),
            (Family::Bcc1, DeState::Bcc(v)) => Ok(v
                .iter()
                .map(|x| e0 * x.upper[0] * x.lower[0])
                .collect()),
            (Family::Bcc2, DeState::Bcc(v)) => Ok((0..v.len() as i64)
                .map(|t| {
                    let (mut qu, mut ql) = (0.0, 0.0);
                    for j in 0..=self.m as i64 {
                        if let Some(s) = self.slot(t + j) {
                            qu += v[s].upper[0];
                            ql += v[s].lower[0];
                        }
                    }
                    e0 * (qu / span) * (ql / span)
                })
                .collect()),
            _ => Err(Error::Validation(
                "density-evolution state does not match the ensemble family".into(),
            )),
        }
    }

    /// Average extrinsic erasure probability over all transmitted bits,
    /// weighted by each stream's surviving fraction after puncturing.
    ///
    /// Meaningful when `state` is a DE fixed point; feeds the area theorem.
    pub fn average_extrinsic(&self, state: &DeState) -> Result<f64> {
        let r0 = self.spec.rho0;
        let r1 = self.spec.rho1;
        let r2 = self.spec.rho2;
        let per_slot: Vec<f64> = match (self.spec.family, state) {
            (Family::Pcc, DeState::Pcc(v)) => v
                .iter()
                .map(|x| {
                    (r0 * x.upper_sys * x.lower_sys + r2 * x.upper_par + r2 * x.lower_par)
                        / (r0 + 2.0 * r2)
                })
                .collect(),
            (Family::Scc, DeState::Scc(v)) => v
                .iter()
                .map(|x| {
                    (r0 * x.outer_sys * x.inner_sys
                        + r1 * x.outer_par * x.inner_sys
                        + 2.0 * r2 * x.inner_par)
                        / (r0 + r1 + 2.0 * r2)
                })
                .collect(),
            (Family::Bcc1, DeState::Bcc(v)) | (Family::Bcc2, DeState::Bcc(v)) => v
                .iter()
                .map(|x| {
                    (r0 * x.upper[0] * x.lower[0]
                        + r2 * x.upper[2] * x.lower[1]
                        + r2 * x.lower[2] * x.upper[1])
                        / (r0 + 2.0 * r2)
                })
                .collect(),
            _ => {
                return Err(Error::Validation(
                    "density-evolution state does not match the ensemble family".into(),
                ))
            }
        };
        Ok(per_slot.iter().sum::<f64>() / per_slot.len() as f64)
    }

    /// One step of the single-variable recursion available when both
    /// components are identical (BCC additionally needs `timeVarying`).
    pub fn scalar_update(&mut self, x: f64, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let y = self.scalar_g(x)?;
        self.scalar_f(y, eps)
    }

    /// `f(x; eps)` of the scalar system behind [`scalar_update`](Self::scalar_update).
    pub fn scalar_f(&mut self, x: f64, eps: f64) -> Result<f64> {
        self.require_scalar()?;
        let e0 = eps_rho(eps, self.spec.rho0);
        let e2 = eps_rho(eps, self.spec.rho2);
        match self.spec.family {
            Family::Pcc => {
                // A fully known input stream pins the state sequence of a
                // k = 1 encoder, so the systematic extrinsic is exactly zero.
                if e0 * x == 0.0 {
                    return Ok(0.0);
                }
                Ok(self.comp_a.eval(&[e0 * x, e2])?[0])
            }
            Family::Scc => {
                let e1 = eps_rho(eps, self.spec.rho1);
                if e1 * x == 0.0 {
                    return Ok(0.0);
                }
                Ok(e1 * self.comp_a.eval(&[e1 * x, e2])?[0])
            }
            Family::Bcc1 | Family::Bcc2 => {
                let v = self.comp_a.eval(&[e0 * x, e0 * x, e0 * x])?;
                Ok((v[0] + v[1] + v[2]) / 3.0)
            }
        }
    }

    /// `g(x)` of the scalar system: identity for PCC/BCC, the averaged outer
    /// transfer for SCC.
    pub fn scalar_g(&mut self, x: f64) -> Result<f64> {
        self.require_scalar()?;
        match self.spec.family {
            Family::Scc => {
                let v = self.comp_a.eval(&[x, x])?;
                Ok((v[0] + v[1]) / 2.0)
            }
            _ => Ok(x),
        }
    }

    fn require_scalar(&self) -> Result<()> {
        if !self.identical {
            return Err(Error::Validation(format!(
                "scalar recursion needs identical component encoders, got {} and {}",
                self.label_a, self.label_b
            )));
        }
        match self.spec.family {
            Family::Scc if self.spec.rho0 != self.spec.rho1 => Err(Error::Validation(
                "the SCC scalar recursion requires rho0 == rho1".into(),
            )),
            Family::Bcc1 | Family::Bcc2 => {
                if !self.spec.time_varying {
                    Err(Error::Validation(
                        "the BCC scalar recursion requires timeVarying trellises".into(),
                    ))
                } else if self.spec.rho0 != self.spec.rho2 {
                    Err(Error::Validation(
                        "the BCC scalar recursion punctures all streams equally; \
                         set rho0 == rho2"
                            .into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn bcc_eval(
    eval: &mut TransferEvaluator,
    q: [f64; 3],
    time_varying: bool,
) -> Result<[f64; 3]> {
    let v = eval.eval(&q)?;
    if time_varying {
        let ave = (v[0] + v[1] + v[2]) / 3.0;
        Ok([ave; 3])
    } else {
        Ok([v[0], v[1], v[2]])
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "channel erasure probability {eps} outside [0, 1]"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcc_spec() -> EnsembleSpec {
        EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7")
    }

    fn bcc_spec() -> EnsembleSpec {
        EnsembleSpec::new(Family::Bcc1, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7")
    }

    #[test]
    fn json_round_trip_uses_fixed_field_names() {
        let spec = EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7")
            .with_coupling(1, 50)
            .with_puncturing(1.0, 0.0, 0.5);
        let json = spec.to_json().unwrap();
        assert!(json.contains("\"family\": \"SCC\""));
        assert!(json.contains("\"outer\""));
        assert!(json.contains("\"L\": 50"));
        assert!(json.contains("\"rho2\": 0.5"));
        let back = EnsembleSpec::from_json(&json).unwrap();
        assert_eq!(back.family, Family::Scc);
        assert_eq!(back.chain_length, 50);
        assert_eq!(back.rho1, 0.0);
    }

    #[test]
    fn json_defaults_apply() {
        let spec = EnsembleSpec::from_json(
            r#"{"family":"PCC","upper":"1,5/7","lower":"1,5/7"}"#,
        )
        .unwrap();
        assert_eq!(spec.m, 0);
        assert_eq!(spec.chain_length, 1);
        assert_eq!(spec.rho2, 1.0);
        assert!(!spec.time_varying);
        EnsembleDe::new(&spec).unwrap();
    }

    #[test]
    fn validation_rejects_mismatched_components() {
        // BCC components must be rate 2/3.
        let bad = EnsembleSpec::new(Family::Bcc1, "1,5/7", "1,5/7");
        assert!(EnsembleDe::new(&bad).is_err());
        // PCC components must be rate 1/2.
        let bad = EnsembleSpec::new(Family::Pcc, "1 0 1/7; 0 1 5/7", "1,5/7");
        assert!(EnsembleDe::new(&bad).is_err());
        // BCC with m = 0 has no meaning.
        let mut spec = bcc_spec();
        spec.m = 0;
        assert!(EnsembleDe::new(&spec).is_err());
        // Out-of-range permeability.
        let bad = pcc_spec().with_puncturing(1.0, 1.0, 1.5);
        assert!(EnsembleDe::new(&bad).is_err());
    }

    #[test]
    fn bcc_chain_of_length_one_tailbites() {
        let de = EnsembleDe::new(&bcc_spec()).unwrap();
        assert!(de.spec().tailbiting);
        assert!(de.spec().is_uncoupled());
    }

    #[test]
    fn uncoupled_pcc_update_matches_transfer_composition() {
        // From the all-ones state: p_Us' = f_s(eps * 1, eps).
        let mut de = EnsembleDe::new(&pcc_spec()).unwrap();
        let eps = 0.37;
        let s0 = de.initial_state();
        let s1 = de.update(&s0, eps).unwrap();
        let mut eval = de.comp_a.clone();
        let expect = eval.eval(&[eps, eps]).unwrap();
        match s1 {
            DeState::Pcc(v) => {
                assert!((v[0].upper_sys - expect[0]).abs() < 1e-15);
                assert!((v[0].upper_par - expect[1]).abs() < 1e-15);
                assert!((v[0].lower_sys - expect[0]).abs() < 1e-15);
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn zero_channel_erases_nothing_after_one_iteration() {
        for spec in [
            pcc_spec(),
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7"),
            bcc_spec(),
            EnsembleSpec::new(Family::Bcc2, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7"),
        ] {
            let mut de = EnsembleDe::new(&spec).unwrap();
            let s1 = de.update(&de.initial_state(), 0.0).unwrap();
            assert_eq!(s1.max_value(), 0.0, "{:?}", spec.family);
            let pa = de.aposteriori(&s1, 0.0).unwrap();
            assert!(pa.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn coupled_pcc_boundary_sum_matches_hand_expansion() {
        // m = 1, L = 3, all messages 1, eps = 0.5: the double-averaged message
        // entering slot 0 has three in-range terms of four, so the factor-node
        // input is 0.5 * 3/4 = 0.375; at the middle slot all four terms are in
        // range giving 0.5.
        let spec = pcc_spec().with_coupling(1, 3);
        let mut de = EnsembleDe::new(&spec).unwrap();
        let eps = 0.5;
        let s1 = de.update(&de.initial_state(), eps).unwrap();
        let mut eval = de.comp_a.clone();
        let expect_edge = eval.eval(&[0.375, 0.5]).unwrap()[0];
        let expect_mid = eval.eval(&[0.5, 0.5]).unwrap()[0];
        match s1 {
            DeState::Pcc(v) => {
                assert!((v[0].upper_sys - expect_edge).abs() < 1e-15);
                assert!((v[1].upper_sys - expect_mid).abs() < 1e-15);
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn coupling_memory_zero_equals_uncoupled() {
        // m = 0 coupling sums collapse to single terms; every slot of an
        // L = 4 chain evolves exactly like the uncoupled ensemble.
        for spec in [
            pcc_spec(),
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7").with_puncturing(1.0, 0.0, 0.5),
        ] {
            let mut un = EnsembleDe::new(&spec).unwrap();
            let coupled_spec = spec.clone().with_coupling(0, 4);
            let mut co = EnsembleDe::new(&coupled_spec).unwrap();
            let mut su = un.initial_state();
            let mut sc = co.initial_state();
            for _ in 0..25 {
                su = un.update(&su, 0.45).unwrap();
                sc = co.update(&sc, 0.45).unwrap();
                let fu = su.flat();
                let fc = sc.flat();
                for slot in 0..4 {
                    for msg in 0..fu.len() {
                        assert!(
                            (fc[slot * fu.len() + msg] - fu[msg]).abs() <= 1e-15,
                            "slot {slot} msg {msg}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bcc_uncoupled_update_follows_swapped_messages() {
        // L = 1 tail-bitten: q_{U,2} reads the lower parity-output message and
        // q_{U,3} the lower second-input message of the same slot.
        let mut de = EnsembleDe::new(&bcc_spec()).unwrap();
        let eps = 0.5;
        let state = DeState::Bcc(vec![BccMsgs {
            upper: [0.9, 0.8, 0.7],
            lower: [0.6, 0.5, 0.4],
        }]);
        let next = de.update(&state, eps).unwrap();
        let mut eval = de.comp_a.clone();
        let expect = eval
            .eval(&[eps * 0.6, eps * 0.4, eps * 0.5])
            .unwrap();
        match next {
            DeState::Bcc(v) => {
                for k in 0..3 {
                    assert!((v[0].upper[k] - expect[k]).abs() < 1e-15);
                }
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn iterates_decrease_monotonically_from_all_ones() {
        for spec in [
            pcc_spec().with_coupling(1, 5),
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7").with_coupling(1, 5),
            bcc_spec().with_coupling(2, 5),
        ] {
            let mut de = EnsembleDe::new(&spec).unwrap();
            let mut state = de.initial_state();
            for _ in 0..30 {
                let next = de.update(&state, 0.5).unwrap();
                for (a, b) in state.flat().iter().zip(next.flat()) {
                    assert!(b <= a + 1e-12, "{:?}", spec.family);
                }
                state = next;
            }
        }
    }

    #[test]
    fn scalar_update_requires_identical_components() {
        let spec = EnsembleSpec::new(Family::Pcc, "1,5/7", "1,11/13");
        let mut de = EnsembleDe::new(&spec).unwrap();
        assert!(de.scalar_update(0.5, 0.5).is_err());
    }

    #[test]
    fn scalar_update_zero_is_fixed() {
        let mut de = EnsembleDe::new(&pcc_spec()).unwrap();
        for eps in [0.1, 0.5, 0.9] {
            assert_eq!(de.scalar_update(0.0, eps).unwrap(), 0.0);
        }
    }

    #[test]
    fn pcc_scalar_trajectory_matches_full_de() {
        let mut de = EnsembleDe::new(&pcc_spec()).unwrap();
        let mut de2 = EnsembleDe::new(&pcc_spec()).unwrap();
        let eps = 0.62;
        let mut state = de.initial_state();
        let mut x = 1.0;
        for _ in 0..50 {
            state = de.update(&state, eps).unwrap();
            x = de2.scalar_update(x, eps).unwrap();
            if let DeState::Pcc(v) = &state {
                assert!((v[0].upper_sys - x).abs() < 1e-12);
                assert!((v[0].lower_sys - x).abs() < 1e-12);
            }
        }
    }
}
