//! Binary rational generator matrices and their trellis realizations.
//!
//! A component encoder is described by a `k x n` matrix of binary rational
//! functions in the delay operator `D`. Encoders with `k = 1` are realized in
//! controller canonical form, encoders with `n - k = 1` in observer canonical
//! form; both need `2^nu` states, where `nu` is the maximum polynomial degree
//! appearing in the matrix.
//!
//! Octal notation follows the convention that the most significant bit of the
//! octal value is the constant term, so `7 = 1 + D + D^2`, `5 = 1 + D^2` and
//! `13 = 1 + D^2 + D^3`. Binary notation lists coefficients lowest degree
//! first and is not stripped, so `"01"` denotes `D`.

use std::fmt;

use crate::{Error, Result};

/// Hard cap on encoder memory so state indices fit comfortably in a word.
pub const MAX_MEMORY: usize = 32;

/// Polynomial over GF(2) in the delay operator `D`.
///
/// Bit `i` of the backing word is the coefficient of `D^i`; the representation
/// is canonical (no stored zero coefficients beyond the degree).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryPolynomial(u64);

impl BinaryPolynomial {
    pub const ZERO: Self = BinaryPolynomial(0);
    pub const ONE: Self = BinaryPolynomial(1);

    /// Builds a polynomial from its coefficient bits, lowest degree first.
    pub fn from_bits(bits: u64) -> Result<Self> {
        let p = BinaryPolynomial(bits);
        if p.degree() > MAX_MEMORY {
            return Err(Error::Parse(format!(
                "polynomial degree {} exceeds the supported maximum {}",
                p.degree(),
                MAX_MEMORY
            )));
        }
        Ok(p)
    }

    /// Parses an octal value; the most significant bit maps to the constant term.
    pub fn from_octal(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || !s.bytes().all(|b| (b'0'..=b'7').contains(&b)) {
            return Err(Error::Parse(format!("malformed octal polynomial {s:?}")));
        }
        let value = u64::from_str_radix(s, 8)
            .map_err(|_| Error::Parse(format!("octal polynomial {s:?} overflows")))?;
        if value == 0 {
            return Ok(Self::ZERO);
        }
        // Reverse the significant bits: MSB (constant term) becomes bit 0.
        let width = 64 - value.leading_zeros();
        let mut bits = 0u64;
        for i in 0..width {
            if value >> i & 1 == 1 {
                bits |= 1 << (width - 1 - i);
            }
        }
        Self::from_bits(bits)
    }

    /// Parses a coefficient string, lowest degree first (`"011"` is `D + D^2`).
    pub fn from_binary(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Parse(format!("malformed binary polynomial {s:?}")));
        }
        let mut bits = 0u64;
        for (i, b) in s.bytes().enumerate() {
            if i > MAX_MEMORY {
                return Err(Error::Parse(format!(
                    "polynomial degree {} exceeds the supported maximum {}",
                    s.len() - 1,
                    MAX_MEMORY
                )));
            }
            if b == b'1' {
                bits |= 1 << i;
            }
        }
        Ok(BinaryPolynomial(bits))
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_one(self) -> bool {
        self.0 == 1
    }

    /// Degree of the polynomial; zero for the zero polynomial.
    pub fn degree(self) -> usize {
        if self.0 == 0 {
            0
        } else {
            63 - self.0.leading_zeros() as usize
        }
    }

    pub fn coeff(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn constant_term(self) -> bool {
        self.coeff(0)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Carry-less product in GF(2)[D].
    pub fn mul(self, other: Self) -> Result<Self> {
        let mut acc = 0u64;
        let mut a = self.0;
        let mut shift = 0;
        while a != 0 {
            if a & 1 == 1 {
                acc ^= other.0 << shift;
            }
            a >>= 1;
            shift += 1;
        }
        Self::from_bits(acc)
    }

    /// Octal rendering under the same MSB-equals-constant-term convention.
    pub fn to_octal(self) -> String {
        if self.0 == 0 {
            return "0".to_string();
        }
        let width = self.degree() as u32 + 1;
        let mut value = 0u64;
        for i in 0..width {
            if self.0 >> i & 1 == 1 {
                value |= 1 << (width - 1 - i);
            }
        }
        format!("{value:o}")
    }
}

impl fmt::Debug for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for i in 0..=self.degree() {
            if self.coeff(i) {
                if !first {
                    write!(f, "+")?;
                }
                match i {
                    0 => write!(f, "1")?,
                    1 => write!(f, "D")?,
                    _ => write!(f, "D^{i}")?,
                }
                first = false;
            }
        }
        Ok(())
    }
}

/// Ratio of two binary polynomials; the denominator must have constant term 1
/// so the feedback is realizable.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryRational {
    pub num: BinaryPolynomial,
    pub den: BinaryPolynomial,
}

impl BinaryRational {
    pub fn new(num: BinaryPolynomial, den: BinaryPolynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Parse("zero denominator polynomial".into()));
        }
        if !den.constant_term() {
            return Err(Error::Parse(format!(
                "denominator {den:?} has constant term 0 and cannot be realized as feedback"
            )));
        }
        Ok(BinaryRational { num, den })
    }

    pub fn is_one(self) -> bool {
        self.num == self.den
    }

    fn max_degree(self) -> usize {
        self.num.degree().max(self.den.degree())
    }
}

impl fmt::Debug for BinaryRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{:?}", self.num)
        } else {
            write!(f, "({:?})/({:?})", self.num, self.den)
        }
    }
}

/// Polynomial notation accepted by [`parse_generator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Notation {
    Octal,
    Binary,
}

/// A `k x n` matrix of binary rational functions defining a component encoder.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    k: usize,
    n: usize,
    entries: Vec<BinaryRational>,
    memory: usize,
    systematic: bool,
}

impl GeneratorMatrix {
    /// Validates shape and realizability and computes the encoder memory.
    pub fn new(k: usize, n: usize, entries: Vec<BinaryRational>) -> Result<Self> {
        if k == 0 || n == 0 || entries.len() != k * n {
            return Err(Error::Parse(format!(
                "generator matrix shape mismatch: {k}x{n} with {} entries",
                entries.len()
            )));
        }
        if k >= n {
            return Err(Error::Validation(format!(
                "generator matrix must have k < n, got {k}x{n}"
            )));
        }
        if k != 1 && n - k != 1 {
            return Err(Error::Validation(format!(
                "only k = 1 or n - k = 1 encoders are supported, got {k}x{n}"
            )));
        }
        let memory = entries.iter().map(|e| e.max_degree()).max().unwrap_or(0);
        if memory > MAX_MEMORY {
            return Err(Error::Validation(format!(
                "encoder memory {memory} exceeds the supported maximum {MAX_MEMORY}"
            )));
        }
        let systematic = (0..k).all(|i| {
            (0..k).all(|j| {
                let e = entries[i * n + j];
                if i == j {
                    e.is_one()
                } else {
                    e.num.is_zero()
                }
            })
        });
        let g = GeneratorMatrix {
            k,
            n,
            entries,
            memory,
            systematic,
        };
        g.check_realizable()?;
        Ok(g)
    }

    /// Controller form needs a single feedback polynomial; observer form needs
    /// a leading identity and a common denominator in the parity column.
    fn check_realizable(&self) -> Result<()> {
        if self.k == 1 {
            let den = self.common_denominator()?;
            for e in &self.entries {
                let eff = self.effective_numerator(*e, den)?;
                if eff.degree() > self.memory {
                    return Err(Error::Validation(format!(
                        "entry {e:?} is not realizable with {} memory elements",
                        self.memory
                    )));
                }
            }
        } else {
            if !self.systematic {
                return Err(Error::Validation(
                    "k >= 2 encoders must be systematic (leading identity block)".into(),
                ));
            }
            let mut den: Option<BinaryPolynomial> = None;
            for i in 0..self.k {
                let e = self.entries[i * self.n + self.n - 1];
                match den {
                    None => den = Some(e.den),
                    Some(d) if d == e.den => {}
                    Some(d) => {
                        return Err(Error::Validation(format!(
                            "parity column entries must share one denominator, got {d:?} and {:?}",
                            e.den
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    fn common_denominator(&self) -> Result<BinaryPolynomial> {
        let mut den = BinaryPolynomial::ONE;
        for e in &self.entries {
            if !e.den.is_one() {
                if !den.is_one() && den != e.den {
                    return Err(Error::Validation(format!(
                        "entries must share one feedback denominator, got {den:?} and {:?}",
                        e.den
                    )));
                }
                den = e.den;
            }
        }
        Ok(den)
    }

    /// Numerator taps relative to the shared feedback polynomial.
    fn effective_numerator(
        &self,
        e: BinaryRational,
        den: BinaryPolynomial,
    ) -> Result<BinaryPolynomial> {
        if e.den == den {
            Ok(e.num)
        } else {
            // Denominator-1 entry v = c(D) u with u = den(D) w.
            e.num.mul(den)
        }
    }

    pub fn input_count(&self) -> usize {
        self.k
    }

    pub fn output_count(&self) -> usize {
        self.n
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn is_systematic(&self) -> bool {
        self.systematic
    }

    pub fn entry(&self, i: usize, j: usize) -> BinaryRational {
        self.entries[i * self.n + j]
    }

    /// Compact label such as `(1,5/7)` used in reports.
    pub fn octal_label(&self) -> String {
        let mut rows = Vec::with_capacity(self.k);
        for i in 0..self.k {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let e = self.entry(i, j);
                    if e.den.is_one() {
                        e.num.to_octal()
                    } else {
                        format!("{}/{}", e.num.to_octal(), e.den.to_octal())
                    }
                })
                .collect();
            rows.push(row.join(","));
        }
        format!("({})", rows.join(";"))
    }
}

/// Parses a generator matrix from text.
///
/// Rows are separated by `;`, entries by commas or whitespace, and each entry
/// is `num` or `num/den` in the requested notation. Feedback polynomials given
/// in octal must have odd value so the encoding is canonical.
///
/// ```
/// use sctc::trellis::{parse_generator, Notation};
/// let g = parse_generator("1,5/7", Notation::Octal).unwrap();
/// assert_eq!((g.input_count(), g.output_count(), g.memory()), (1, 2, 2));
/// ```
pub fn parse_generator(spec: &str, notation: Notation) -> Result<GeneratorMatrix> {
    let parse_poly = |s: &str| -> Result<BinaryPolynomial> {
        match notation {
            Notation::Octal => BinaryPolynomial::from_octal(s),
            Notation::Binary => BinaryPolynomial::from_binary(s),
        }
    };
    let mut rows: Vec<Vec<BinaryRational>> = Vec::new();
    for row_str in spec.split(';') {
        let mut row = Vec::new();
        for tok in row_str.split(|c: char| c == ',' || c.is_whitespace()) {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let entry = match tok.split_once('/') {
                Some((num, den)) => {
                    if notation == Notation::Octal {
                        let den_trim = den.trim();
                        let value = u64::from_str_radix(den_trim, 8).map_err(|_| {
                            Error::Parse(format!("malformed octal polynomial {den_trim:?}"))
                        })?;
                        if value % 2 == 0 {
                            return Err(Error::Parse(format!(
                                "feedback polynomial {den_trim} is even; octal feedback must be odd"
                            )));
                        }
                    }
                    BinaryRational::new(parse_poly(num)?, parse_poly(den)?)?
                }
                None => BinaryRational::new(parse_poly(tok)?, BinaryPolynomial::ONE)?,
            };
            row.push(entry);
        }
        if !row.is_empty() {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("empty generator spec {spec:?}")));
    }
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("ragged generator matrix in {spec:?}")));
    }
    let k = rows.len();
    GeneratorMatrix::new(k, n, rows.into_iter().flatten().collect())
}

/// Explicit state/branch table realized from a [`GeneratorMatrix`].
///
/// Branches are indexed by `(state, input tuple)`; state 0 is the zero state
/// and input bit `i` of the tuple drives row `i` of the generator. Output bit
/// `l` of a branch mask is code-bit position `l` (systematic bits first).
#[derive(Clone, Debug)]
pub struct Trellis {
    num_states: usize,
    k: usize,
    n: usize,
    next: Vec<u32>,
    out: Vec<u32>,
    fingerprint: u64,
}

impl Trellis {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn input_count(&self) -> usize {
        self.k
    }

    pub fn output_count(&self) -> usize {
        self.n
    }

    pub fn num_inputs(&self) -> usize {
        1 << self.k
    }

    #[inline]
    pub fn branch(&self, state: usize, input: usize) -> (usize, u32) {
        let idx = (state << self.k) | input;
        (self.next[idx] as usize, self.out[idx])
    }

    /// Stable identifier for memoization keyed on the branch table.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Encodes a sequence of input tuples starting from the zero state,
    /// returning one n-bit output mask per trellis section.
    pub fn encode(&self, inputs: &[usize]) -> Vec<u32> {
        let mut state = 0usize;
        inputs
            .iter()
            .map(|&u| {
                let (next, out) = self.branch(state, u);
                state = next;
                out
            })
            .collect()
    }
}

/// Realizes the generator matrix as an explicit trellis.
///
/// `k = 1` matrices use controller canonical form, `n - k = 1` matrices use
/// observer canonical form; `(1, b/a)` rate-1/2 encoders fall under the first
/// rule. Both yield `2^nu` states and `2^k` branches per state.
pub fn build_trellis(g: &GeneratorMatrix) -> Result<Trellis> {
    let nu = g.memory();
    let k = g.input_count();
    let n = g.output_count();
    let num_states = 1usize << nu;
    let num_inputs = 1usize << k;
    let mask = (num_states - 1) as u64;

    let mut next = vec![0u32; num_states * num_inputs];
    let mut out = vec![0u32; num_states * num_inputs];

    if k == 1 {
        // Controller canonical form: the register holds the feedback sequence
        // w, with the most recent value in bit 0.
        let den = g.common_denominator()?;
        let fb_taps = den.bits() >> 1; // coefficients a_1..a_nu
        let taps: Vec<(bool, u64)> = (0..n)
            .map(|j| {
                let eff = g.effective_numerator(g.entry(0, j), den)?;
                Ok((eff.coeff(0), eff.bits() >> 1))
            })
            .collect::<Result<Vec<_>>>()?;
        for state in 0..num_states as u64 {
            for input in 0..2u64 {
                let w = input ^ parity(fb_taps & state);
                let mut bits = 0u32;
                for (l, &(tap0, tap_rest)) in taps.iter().enumerate() {
                    let v = (w & tap0 as u64) ^ parity(tap_rest & state);
                    bits |= (v as u32) << l;
                }
                let ns = ((state << 1) | w) & mask;
                let idx = (state as usize) << 1 | input as usize;
                next[idx] = ns as u32;
                out[idx] = bits;
            }
        }
    } else {
        // Observer canonical form for the single parity output; register bit 0
        // feeds the output next.
        let den = g.entry(0, n - 1).den;
        let nums: Vec<BinaryPolynomial> = (0..k).map(|i| g.entry(i, n - 1).num).collect();
        for state in 0..num_states as u64 {
            for input in 0..num_inputs as u64 {
                let mut y = (state & 1) as u64;
                for (i, num) in nums.iter().enumerate() {
                    y ^= (input >> i & 1) & num.coeff(0) as u64;
                }
                let mut ns = 0u64;
                for reg in 0..nu {
                    let mut bit = state >> (reg + 1) & 1;
                    for (i, num) in nums.iter().enumerate() {
                        bit ^= (input >> i & 1) & num.coeff(reg + 1) as u64;
                    }
                    bit ^= y & den.coeff(reg + 1) as u64;
                    ns |= bit << reg;
                }
                let mut bits = (input as u32) & ((1 << k) - 1);
                bits |= (y as u32) << (n - 1);
                let idx = ((state as usize) << k) | input as usize;
                next[idx] = ns as u32;
                out[idx] = bits;
            }
        }
    }

    let fingerprint = fingerprint_table(k, n, &next, &out);
    Ok(Trellis {
        num_states,
        k,
        n,
        next,
        out,
        fingerprint,
    })
}

#[inline]
fn parity(word: u64) -> u64 {
    (word.count_ones() & 1) as u64
}

/// FNV-1a over the branch table; stable across runs and platforms.
fn fingerprint_table(k: usize, n: usize, next: &[u32], out: &[u32]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    let mut eat = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(k as u64);
    eat(n as u64);
    for (&a, &b) in next.iter().zip(out) {
        eat(((a as u64) << 32) | b as u64);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octal_convention_matches_examples() {
        // 5 -> 1 + D^2, 7 -> 1 + D + D^2, 13 -> 1 + D^2 + D^3, 11 -> 1 + D^3
        assert_eq!(BinaryPolynomial::from_octal("5").unwrap().bits(), 0b101);
        assert_eq!(BinaryPolynomial::from_octal("7").unwrap().bits(), 0b111);
        assert_eq!(BinaryPolynomial::from_octal("13").unwrap().bits(), 0b1101);
        assert_eq!(BinaryPolynomial::from_octal("11").unwrap().bits(), 0b1001);
        assert_eq!(BinaryPolynomial::from_octal("3").unwrap().bits(), 0b11);
        assert_eq!(BinaryPolynomial::from_octal("1").unwrap().bits(), 0b1);
        assert_eq!(BinaryPolynomial::from_octal("5").unwrap().to_octal(), "5");
        assert_eq!(BinaryPolynomial::from_octal("13").unwrap().to_octal(), "13");
    }

    #[test]
    fn binary_notation_keeps_leading_zeros() {
        // "01" is D, which stripped octal cannot express.
        let d = BinaryPolynomial::from_binary("01").unwrap();
        assert_eq!(d.bits(), 0b10);
        assert_eq!(d.degree(), 1);
        assert!(!d.constant_term());
    }

    #[test]
    fn parse_rate_half_recursive() {
        let g = parse_generator("1,5/7", Notation::Octal).unwrap();
        assert_eq!(g.input_count(), 1);
        assert_eq!(g.output_count(), 2);
        assert_eq!(g.memory(), 2);
        assert!(g.is_systematic());
        assert_eq!(g.octal_label(), "(1,5/7)");
    }

    #[test]
    fn parse_repetition() {
        let g = parse_generator("1,1", Notation::Octal).unwrap();
        assert_eq!(g.memory(), 0);
        let t = build_trellis(&g).unwrap();
        assert_eq!(t.num_states(), 1);
        assert_eq!(t.branch(0, 1), (0, 0b11));
        assert_eq!(t.branch(0, 0), (0, 0b00));
    }

    #[test]
    fn parse_bcc_component() {
        let g = parse_generator("1 0 1/7 ; 0 1 5/7", Notation::Octal).unwrap();
        assert_eq!((g.input_count(), g.output_count()), (2, 3));
        assert_eq!(g.memory(), 2);
        assert!(g.is_systematic());
        let t = build_trellis(&g).unwrap();
        assert_eq!(t.num_states(), 4);
        assert_eq!(t.num_inputs(), 4);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_generator("", Notation::Octal).is_err());
        assert!(parse_generator("1,5/0", Notation::Octal).is_err());
        // Even feedback value is a non-canonical encoding.
        assert!(parse_generator("1,5/6", Notation::Octal).is_err());
        // Denominator with zero constant term cannot be realized.
        assert!(parse_generator("1,10/01", Notation::Binary).is_err());
        // Ragged rows.
        assert!(parse_generator("1 0 1/7; 0 1", Notation::Octal).is_err());
        // k >= 2 requires n - k = 1.
        assert!(parse_generator("1 0 1 1; 0 1 1 1", Notation::Octal).is_err());
    }

    #[test]
    fn state_counts_match_memory() {
        for (spec, states) in [("1,5/7", 4), ("1,11/13", 8), ("1,1/3", 2), ("1,1", 1)] {
            let g = parse_generator(spec, Notation::Octal).unwrap();
            let t = build_trellis(&g).unwrap();
            assert_eq!(t.num_states(), states, "{spec}");
        }
    }

    #[test]
    fn zero_state_zero_input_stays_put() {
        for spec in ["1,5/7", "1,11/13", "1 0 1/7; 0 1 5/7"] {
            let g = parse_generator(spec, Notation::Octal).unwrap();
            let t = build_trellis(&g).unwrap();
            assert_eq!(t.branch(0, 0), (0, 0));
        }
    }

    #[test]
    fn branches_are_complete_and_deterministic() {
        let g = parse_generator("1 0 1/7; 0 1 5/7", Notation::Octal).unwrap();
        let t = build_trellis(&g).unwrap();
        for state in 0..t.num_states() {
            let mut seen = std::collections::HashSet::new();
            for input in 0..t.num_inputs() {
                let (next, _) = t.branch(state, input);
                assert!(next < t.num_states());
                seen.insert(input);
            }
            assert_eq!(seen.len(), t.num_inputs());
        }
    }

    #[test]
    fn systematic_outputs_echo_inputs() {
        for spec in ["1,5/7", "1,11/13", "1 0 1/7; 0 1 5/7"] {
            let g = parse_generator(spec, Notation::Octal).unwrap();
            let t = build_trellis(&g).unwrap();
            for state in 0..t.num_states() {
                for input in 0..t.num_inputs() {
                    let (_, out) = t.branch(state, input);
                    assert_eq!(
                        out as usize & (t.num_inputs() - 1),
                        input,
                        "systematic bits must equal the input tuple"
                    );
                }
            }
        }
    }

    /// Series expansion of u(D) * num(D) / den(D), one coefficient at a time.
    fn series_encode(u: &[u64], num: BinaryPolynomial, den: BinaryPolynomial) -> Vec<u64> {
        let mut v = vec![0u64; u.len()];
        for t in 0..u.len() {
            let mut acc = 0u64;
            for i in 0..=num.degree().min(t) {
                if num.coeff(i) {
                    acc ^= u[t - i];
                }
            }
            for i in 1..=den.degree().min(t) {
                if den.coeff(i) {
                    acc ^= v[t - i];
                }
            }
            v[t] = acc;
        }
        v
    }

    #[test]
    fn trellis_encoding_matches_polynomial_division() {
        // Direct shift-register encoding from G, bit exact, 100 random
        // length-64 sequences per encoder.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for spec in ["1,5/7", "1,11/13", "1,1/3", "1,1", "1 0 1/7; 0 1 5/7"] {
            let g = parse_generator(spec, Notation::Octal).unwrap();
            let t = build_trellis(&g).unwrap();
            let k = g.input_count();
            for _ in 0..100 {
                let inputs: Vec<usize> = (0..64).map(|_| rng.gen_range(0..1 << k)).collect();
                let encoded = t.encode(&inputs);
                for j in 0..g.output_count() {
                    // Column j is the sum over input rows of u_i * G[i][j].
                    let mut expect = vec![0u64; inputs.len()];
                    for i in 0..k {
                        let e = g.entry(i, j);
                        let ui: Vec<u64> =
                            inputs.iter().map(|&u| (u >> i & 1) as u64).collect();
                        let vi = series_encode(&ui, e.num, e.den);
                        for (acc, b) in expect.iter_mut().zip(vi) {
                            *acc ^= b;
                        }
                    }
                    for (tau, mask) in encoded.iter().enumerate() {
                        assert_eq!(
                            (mask >> j & 1) as u64,
                            expect[tau],
                            "{spec} output {j} section {tau}"
                        );
                    }
                }
            }
        }
    }
}
