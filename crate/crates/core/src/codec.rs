//! Binary codes of one-tape NTMs over the fixed alphabet Σ = {0,1},
//! Γ = {0,1,_}.
//!
//! A code is front-padded with `0^m 1`, where m >= 1 is minimal subject to the
//! total length reaching q^2 (and capped at 4q^2), so every code starts with
//! at least one redundant zero followed by a redundant one and prepending more
//! zeros never changes the decoded machine. The body is either
//!
//! - tag `10`: a transition table. The state count q in unary (`1^q 0`), then
//!   one cell per (state, read symbol, target state) triple in lexicographic
//!   index order. A cell holds 2|Γ| presence bits, one per (write, direction)
//!   pair in lexicographic order, set when that transition exists.
//! - tag `11`: a tuple of codes. The component count k in unary, then each
//!   component as a unary length prefix (`1^len 0`) followed by its bits.
//!   Decoding a tuple composes the components left to right.
//!
//! States are indexed canonically: start = 0, accept = 1, reject = 2, the
//! rest in declaration order. The alphabet is not encoded; machines over any
//! other alphabet are refused rather than guessed at.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::machine::{compose, validate, Direction, MachineError, OneTapeNTM, RawMachine};

/// The fixed tape alphabet, in encoding order.
pub const FIXED_TAPE: [&str; 3] = ["0", "1", "_"];
/// The fixed input alphabet.
pub const FIXED_INPUT: [&str; 2] = ["0", "1"];

/// A finite bit string, rendered as ASCII `0`/`1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        BitString::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn bit(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Pushes `n` copies of `bit`.
    pub fn push_run(&mut self, bit: bool, n: usize) {
        self.bits.resize(self.bits.len() + n, bit);
    }

    /// Prepends `n` zeros; decodes to the same machine.
    pub fn pad_front(&self, n: usize) -> BitString {
        let mut bits = vec![false; n];
        bits.extend_from_slice(&self.bits);
        BitString { bits }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, CodecError> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() => {}
                c => return Err(CodecError::BadCharacter(c)),
            }
        }
        Ok(BitString { bits })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("machine alphabet is not the fixed codec alphabet: {0}")]
    UnsupportedAlphabet(String),
    #[error("empty tuple")]
    EmptyTuple,
    #[error("malformed code at bit {position}: {reason}")]
    MalformedCode { position: usize, reason: String },
    #[error("character `{0}` is not a bit")]
    BadCharacter(char),
    #[error("decoded table is not a valid machine: {0}")]
    InvalidMachine(#[from] MachineError),
}

fn malformed(position: usize, reason: impl Into<String>) -> CodecError {
    CodecError::MalformedCode {
        position,
        reason: reason.into(),
    }
}

/// Checks the fixed alphabet and returns the map from the machine's symbol ids
/// to the canonical symbol indices 0, 1, 2 (= `0`, `1`, `_`).
fn fixed_alphabet_map(m: &OneTapeNTM) -> Result<Vec<usize>, CodecError> {
    let tape: Vec<&str> = m.tape_alphabet().iter().map(|s| s.0.as_str()).collect();
    let input: Vec<&str> = m.input_alphabet().iter().map(|s| s.0.as_str()).collect();
    let mut tape_sorted = tape.clone();
    tape_sorted.sort_unstable();
    let mut fixed_sorted = FIXED_TAPE.to_vec();
    fixed_sorted.sort_unstable();
    let mut input_sorted = input.clone();
    input_sorted.sort_unstable();
    let mut fixed_input_sorted = FIXED_INPUT.to_vec();
    fixed_input_sorted.sort_unstable();
    if tape_sorted != fixed_sorted || input_sorted != fixed_input_sorted || m.blank().0 != "_" {
        return Err(CodecError::UnsupportedAlphabet(format!(
            "input {{{}}}, tape {{{}}}, blank `{}`",
            input.join(","),
            tape.join(","),
            m.blank()
        )));
    }
    Ok(m.tape_alphabet()
        .iter()
        .map(|s| FIXED_TAPE.iter().position(|t| *t == s.0).unwrap())
        .collect())
}

/// Canonical state index: start 0, accept 1, reject 2, others in declaration
/// order. With the state list layout produced by validation this is the
/// identity, but the map is computed rather than assumed.
fn canonical_state_index(m: &OneTapeNTM) -> Vec<usize> {
    let mut index = vec![usize::MAX; m.state_count() as usize];
    index[m.start_id() as usize] = 0;
    index[m.accept_id() as usize] = 1;
    index[m.reject_id() as usize] = 2;
    let mut next = 3;
    for slot in index.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    index
}

fn pad_len(q: u64, body_len: usize) -> usize {
    let q2 = (q as usize).saturating_mul(q as usize);
    // minimal m with 1 <= m <= 4q^2 such that m + 1 + body reaches q^2
    let need = q2.saturating_sub(1 + body_len);
    need.clamp(1, (4 * q2).max(1))
}

/// Encodes the transition table of a machine over the fixed alphabet.
pub fn encode(m: &OneTapeNTM) -> Result<BitString, CodecError> {
    let sym_map = fixed_alphabet_map(m)?;
    let st_map = canonical_state_index(m);
    let q = m.state_count() as usize;
    let gamma = FIXED_TAPE.len();

    let mut cells = vec![false; q * gamma * q * (2 * gamma)];
    for ix in 0..m.rule_count() {
        let r = m.rule_ids(ix);
        let from = st_map[r.from as usize];
        let read = sym_map[r.read as usize];
        let to = st_map[r.to as usize];
        let write = sym_map[r.write as usize];
        let d = match r.dir {
            Direction::Left => 0,
            Direction::Right => 1,
        };
        let cell = (from * gamma + read) * q + to;
        cells[cell * (2 * gamma) + write * 2 + d] = true;
    }

    let mut body = BitString::new();
    body.push(true);
    body.push(false); // tag 10
    body.push_run(true, q);
    body.push(false); // unary q
    for &bit in &cells {
        body.push(bit);
    }

    let m_pad = pad_len(q as u64, body.len());
    let mut out = BitString::new();
    out.push_run(false, m_pad);
    out.push(true);
    out.extend(&body);
    Ok(out)
}

/// Reads the state count of an already-valid code, for tuple padding.
fn code_state_count(code: &BitString) -> Result<u64, CodecError> {
    let mut p = Parser::new(code);
    p.strip_padding()?;
    match p.tag()? {
        Tag::Table => p.unary(),
        Tag::Tuple => {
            let k = p.unary()?;
            if k == 0 {
                return Err(malformed(p.pos, "tuple of zero machines"));
            }
            let mut total = 0u64;
            for _ in 0..k {
                let comp = p.component()?;
                total += code_state_count(&comp)?;
            }
            Ok(total - 2 * (k - 1))
        }
    }
}

/// Encodes a tuple of codes; decoding composes the components left to right.
/// Runs in time linear in the output length.
pub fn encode_composition(codes: &[BitString]) -> Result<BitString, CodecError> {
    if codes.is_empty() {
        return Err(CodecError::EmptyTuple);
    }
    let mut q = 0u64;
    for c in codes {
        q += code_state_count(c)?;
    }
    q -= 2 * (codes.len() as u64 - 1);

    let mut body = BitString::new();
    body.push(true);
    body.push(true); // tag 11
    body.push_run(true, codes.len());
    body.push(false);
    for c in codes {
        body.push_run(true, c.len());
        body.push(false);
        body.extend(c);
    }
    let m_pad = pad_len(q, body.len());
    let mut out = BitString::new();
    out.push_run(false, m_pad);
    out.push(true);
    out.extend(&body);
    Ok(out)
}

enum Tag {
    Table,
    Tuple,
}

struct Parser<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(code: &'a BitString) -> Self {
        Parser {
            bits: code.bits(),
            pos: 0,
        }
    }

    fn next(&mut self) -> Result<bool, CodecError> {
        let b = self
            .bits
            .get(self.pos)
            .copied()
            .ok_or_else(|| malformed(self.pos, "truncated"))?;
        self.pos += 1;
        Ok(b)
    }

    fn strip_padding(&mut self) -> Result<(), CodecError> {
        loop {
            if self.next()? {
                return Ok(());
            }
        }
    }

    fn tag(&mut self) -> Result<Tag, CodecError> {
        let hi = self.next()?;
        let lo = self.next()?;
        if !hi {
            return Err(malformed(self.pos - 2, "unknown tag"));
        }
        Ok(if lo { Tag::Tuple } else { Tag::Table })
    }

    fn unary(&mut self) -> Result<u64, CodecError> {
        let mut n = 0u64;
        while self.next()? {
            n += 1;
        }
        Ok(n)
    }

    fn component(&mut self) -> Result<BitString, CodecError> {
        let len = self.unary()? as usize;
        let mut out = BitString::new();
        for _ in 0..len {
            out.push(self.next()?);
        }
        Ok(out)
    }

    fn end(&self) -> Result<(), CodecError> {
        if self.pos != self.bits.len() {
            return Err(malformed(self.pos, "trailing bits after body"));
        }
        Ok(())
    }
}

/// Decodes a padded code back into a machine. Tuple codes are decoded
/// recursively and flattened with `compose`.
pub fn decode(code: &BitString) -> Result<OneTapeNTM, CodecError> {
    let mut p = Parser::new(code);
    p.strip_padding()?;
    let m = decode_body(&mut p)?;
    p.end()?;
    Ok(m)
}

#[allow(clippy::needless_range_loop)] // read/write parallel the state indices
fn decode_body(p: &mut Parser<'_>) -> Result<OneTapeNTM, CodecError> {
    match p.tag()? {
        Tag::Table => {
            let q = p.unary()? as usize;
            if q == 0 {
                return Err(malformed(p.pos, "zero states"));
            }
            if q < 3 {
                return Err(malformed(p.pos, "fewer than three states"));
            }
            let gamma = FIXED_TAPE.len();
            let state_name = |i: usize| format!("q{i}");
            let mut raw = RawMachine {
                input_alphabet: FIXED_INPUT.iter().map(|s| s.to_string()).collect(),
                tape_alphabet: FIXED_TAPE.iter().map(|s| s.to_string()).collect(),
                blank: "_".into(),
                start: state_name(0),
                accept: state_name(1),
                reject: state_name(2),
                // declared explicitly so the decoded declaration order is the
                // canonical table order
                states: (0..q).map(state_name).collect(),
                rules: Vec::new(),
            };
            for from in 0..q {
                for read in 0..gamma {
                    for to in 0..q {
                        for write in 0..gamma {
                            for d in 0..2usize {
                                if p.next()? {
                                    raw.rules.push((
                                        state_name(from),
                                        FIXED_TAPE[read].into(),
                                        state_name(to),
                                        FIXED_TAPE[write].into(),
                                        if d == 0 { Direction::Left } else { Direction::Right },
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            let at = p.pos;
            validate(&raw).map_err(|e| malformed(at, format!("invalid decoded table: {e}")))
        }
        Tag::Tuple => {
            let k = p.unary()?;
            if k == 0 {
                return Err(malformed(p.pos, "tuple of zero machines"));
            }
            let mut machines = Vec::with_capacity(k as usize);
            for _ in 0..k {
                let comp = p.component()?;
                machines.push(decode(&comp)?);
            }
            let mut acc = machines.remove(0);
            for next in machines {
                let at = p.pos;
                acc = compose(&acc, &next)
                    .map_err(|e| malformed(at, format!("composition failed: {e}")))?;
            }
            Ok(acc)
        }
    }
}

/// Exact primitive-code length for a machine over the fixed alphabet:
/// padding + terminator + tag + unary q + q * |Γ| * q cells of 2|Γ| bits.
pub fn table_code_len(q: u64) -> u64 {
    let gamma = FIXED_TAPE.len() as u64;
    let body = 2 + (q + 1) + q * gamma * q * (2 * gamma);
    pad_len(q, body as usize) as u64 + 1 + body
}
