//! Hardness gadget machines: prime-window search, one-pass divisibility
//! checkers, the multi-pass input-length filter, and the two-phase reduction
//! machines that tie a time-bound verdict to the behavior of a simulated
//! machine.
//!
//! Both gadget builders produce a composition `filter ∘ payload`. The filter
//! makes C-1 passes over the input, each checking divisibility of the input
//! length by one prime from the window (m, 2m], and rejects anything shorter
//! than the product of the primes; accepted inputs are long enough that the
//! payload's worst-case halting work fits under the linear budget. The
//! rejection payload writes a fixed word w and simulates M on it directly,
//! spinning forever when M accepts. The step-count payload simulates M on w
//! under a binary counter initialized to T(|w|), interleaving counter digits
//! with a folded image of M's tape, and spins when the counter runs out
//! first.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::machine::{compose, validate, Direction, MachineError, OneTapeNTM, RawMachine};
use crate::sim::enumerate_computations;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("prime window ({0}, {1}] holds {2} primes, {3} needed")]
    WindowTooSmall(u64, u64, u64, u64),
    #[error("gadget parameter out of range: {0}")]
    BadParameter(String),
    #[error("machine construction failed: {0}")]
    Machine(#[from] MachineError),
}

/// Deterministic primality by trial division; exact for all u64 inputs in the
/// sizes gadgets use.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The smallest `count` primes strictly above `m` and at most `2m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeWindow {
    pub m: u64,
    pub primes: Vec<u64>,
}

pub fn prime_window(m: u64, count: u64) -> Result<PrimeWindow, GadgetError> {
    if m < 1 || count < 1 {
        return Err(GadgetError::BadParameter(
            "prime window needs m >= 1 and count >= 1".into(),
        ));
    }
    let mut primes = Vec::new();
    let mut n = m + 1;
    while n <= 2 * m && (primes.len() as u64) < count {
        if is_prime(n) {
            primes.push(n);
        }
        n += 1;
    }
    if (primes.len() as u64) < count {
        return Err(GadgetError::WindowTooSmall(
            m,
            2 * m,
            primes.len() as u64,
            count,
        ));
    }
    Ok(PrimeWindow { m, primes })
}

/// Incremental machine builder: collect rules, then make every non-halting
/// state total by routing unhandled reads to the reject state.
struct Builder {
    input: Vec<String>,
    tape: Vec<String>,
    start: String,
    accept: String,
    reject: String,
    rules: Vec<(String, String, String, String, Direction)>,
}

impl Builder {
    fn new(input: &[&str], tape: &[&str], start: &str, accept: &str, reject: &str) -> Self {
        Builder {
            input: input.iter().map(|s| s.to_string()).collect(),
            tape: tape.iter().map(|s| s.to_string()).collect(),
            start: start.into(),
            accept: accept.into(),
            reject: reject.into(),
            rules: Vec::new(),
        }
    }

    fn rule(&mut self, from: &str, read: &str, to: &str, write: &str, dir: Direction) {
        self.rules
            .push((from.into(), read.into(), to.into(), write.into(), dir));
    }

    fn build(self) -> Result<OneTapeNTM, MachineError> {
        let mut states: Vec<String> = vec![self.start.clone()];
        let mut seen_states: HashSet<String> = states.iter().cloned().collect();
        for (from, _, to, _, _) in &self.rules {
            for s in [from, to] {
                if seen_states.insert(s.clone()) {
                    states.push(s.clone());
                }
            }
        }
        let mut covered: HashSet<(String, String)> = HashSet::new();
        for (from, read, _, _, _) in &self.rules {
            covered.insert((from.clone(), read.clone()));
        }
        let mut rules = self.rules;
        for s in &states {
            if *s == self.accept || *s == self.reject {
                continue;
            }
            for a in &self.tape {
                if !covered.contains(&(s.clone(), a.clone())) {
                    rules.push((s.clone(), a.clone(), self.reject.clone(), a.clone(), Direction::Right));
                }
            }
        }
        validate(&RawMachine {
            input_alphabet: self.input,
            tape_alphabet: self.tape,
            blank: "_".into(),
            start: self.start,
            accept: self.accept,
            reject: self.reject,
            states: Vec::new(),
            rules,
        })
    }
}

/// A deterministic machine with p counting states that accepts exactly the
/// inputs whose length is divisible by p, in one left-to-right pass of at
/// most n+2 steps.
pub fn divisibility_machine(p: u64) -> Result<OneTapeNTM, GadgetError> {
    if p < 2 {
        return Err(GadgetError::BadParameter("divisor must be at least 2".into()));
    }
    let mut b = Builder::new(&["0", "1"], &["0", "1", "_"], "c0", "acc", "rej");
    for i in 0..p {
        let from = format!("c{i}");
        let to = format!("c{}", (i + 1) % p);
        for sym in ["0", "1"] {
            b.rule(&from, sym, &to, sym, Direction::Right);
        }
        let verdict = if i == 0 { "acc" } else { "rej" };
        b.rule(&from, "_", verdict, "_", Direction::Right);
    }
    Ok(b.build()?)
}

/// Marked variants of the two input symbols, used by the length filter to
/// recognize the ends of the input without extra passes.
const MARKS: [(&str, &str); 2] = [("0", "k0"), ("1", "k1")];

fn marked(sym: &str) -> &'static str {
    match sym {
        "0" => "k0",
        "1" => "k1",
        _ => unreachable!("only input symbols are marked"),
    }
}

/// Builds the C-1 pass length filter over the given tape alphabet (which must
/// contain 0, 1, _, k0, k1). Pass k checks divisibility by `primes[k-1]`,
/// alternating direction; with `erase` the tape is left fully blank on
/// acceptance. The accept state hands off to the payload under composition.
/// Total steps before acceptance: at most (C-1)*n + 1.
fn length_filter_into(b: &mut Builder, primes: &[u64], erase: bool) {
    let pass_count = primes.len();
    let state = |k: usize, i: u64| format!("p{k}c{i}");
    // pass 1, rightward; the start state marks cell 0 when a later pass will
    // stop there and rejects the empty input outright
    let p1 = primes[0];
    let first_write = |sym: &str| -> String {
        if pass_count >= 2 {
            marked(sym).to_string()
        } else if erase {
            "_".to_string()
        } else {
            sym.to_string()
        }
    };
    for sym in ["0", "1"] {
        b.rule("init", sym, &state(1, 1 % p1), &first_write(sym), Direction::Right);
    }
    b.rule("init", "_", "no", "_", Direction::Right);
    for i in 0..p1 {
        let from = state(1, i);
        for sym in ["0", "1"] {
            let w = if pass_count == 1 && erase { "_" } else { sym };
            b.rule(&from, sym, &state(1, (i + 1) % p1), w, Direction::Right);
        }
        // blank at cell n ends pass 1
        if i == 0 {
            if pass_count == 1 {
                b.rule(&from, "_", "ok", "_", Direction::Right);
            } else {
                b.rule(&from, "_", "p2m", "_", Direction::Left);
            }
        } else {
            b.rule(&from, "_", "no", "_", Direction::Right);
        }
    }
    if pass_count >= 2 {
        // pass 2 init at cell n-1, leftward; marks its cell when pass 3 exists
        let p2 = primes[1];
        for sym in ["0", "1"] {
            let w = if pass_count >= 3 {
                marked(sym).to_string()
            } else if erase {
                "_".to_string()
            } else {
                sym.to_string()
            };
            b.rule("p2m", sym, &state(2, 1 % p2), &w, Direction::Left);
        }
    }
    for (kx, &p) in primes.iter().enumerate().skip(1) {
        let k = kx + 1; // pass number, 2-based here
        let dir = if k % 2 == 1 { Direction::Right } else { Direction::Left };
        let final_pass = k == pass_count;
        let erase_branch_cell = erase && (final_pass || (k == pass_count - 1 && pass_count >= 3));
        for i in 0..p {
            let from = state(k, i);
            for sym in ["0", "1"] {
                let w = if final_pass && erase { "_" } else { sym };
                b.rule(&from, sym, &state(k, (i + 1) % p), w, dir);
            }
            for (plain, mark) in MARKS {
                // the marked far end: the cell counts, then branch
                if (i + 1) % p == 0 {
                    let keep: String = if erase_branch_cell {
                        "_".into()
                    } else {
                        mark.to_string()
                    };
                    if final_pass {
                        b.rule(&from, mark, "ok", &keep, dir);
                    } else {
                        let np = primes[k];
                        let back = match dir {
                            Direction::Right => Direction::Left,
                            Direction::Left => Direction::Right,
                        };
                        b.rule(&from, mark, &state(k + 1, 1 % np), &keep, back);
                    }
                } else {
                    b.rule(&from, mark, "no", plain, dir);
                }
            }
        }
    }
}

/// The standalone length filter: accepts exactly the inputs whose length is
/// divisible by every prime, rejecting short inputs within (C-1)*n + 1 steps.
pub fn phase1_machine(primes: &[u64], erase_last_pass: bool) -> Result<OneTapeNTM, GadgetError> {
    if primes.is_empty() {
        return Err(GadgetError::BadParameter("no primes given".into()));
    }
    let mut b = Builder::new(&["0", "1"], &["0", "1", "_", "k0", "k1"], "init", "ok", "no");
    length_filter_into(&mut b, primes, erase_last_pass);
    Ok(b.build()?)
}

/// Parameters shared by the gadget builders: the time bound T(n) = K*n^k + 1
/// of the simulated machine and the target linear bound Cn+D.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetSpec {
    pub big_k: u64,
    pub little_k: u64,
    pub c: u64,
    pub d: u64,
}

impl GadgetSpec {
    pub fn new(big_k: u64, little_k: u64, c: u64, d: u64) -> Result<Self, GadgetError> {
        if big_k < 1 || little_k < 1 {
            return Err(GadgetError::BadParameter("K and k must be at least 1".into()));
        }
        if c < 2 || d < 1 {
            return Err(GadgetError::BadParameter("need C >= 2 and D >= 1".into()));
        }
        Ok(GadgetSpec {
            big_k,
            little_k,
            c,
            d,
        })
    }

    /// T(n) = K * n^k + 1.
    pub fn time_bound(&self, n: u64) -> BigUint {
        BigUint::from(self.big_k) * BigUint::from(n).pow(self.little_k as u32)
            + BigUint::from(1u32)
    }
}

/// Construction record emitted next to a gadget machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetManifest {
    pub primes: Vec<u64>,
    pub m: u64,
    /// Calibration ratio ceil(worst-case payload steps / T(|w|)), decimal.
    pub c_ratio: String,
    pub phase2_state_count: u64,
    /// Accepted input lengths are exactly the multiples of this stride.
    pub stride: u64,
    /// Worst-case payload steps used for sizing, decimal.
    pub phase2_step_bound: String,
}

fn ceil_nth_root(x: &BigUint, n: u32) -> BigUint {
    let root = x.nth_root(n);
    if root.pow(n) < *x {
        root + BigUint::from(1u32)
    } else {
        root
    }
}

/// Measures the worst halting run of a freshly built payload machine on the
/// empty input, falling back to `closed_form` when enumeration is too big.
fn measure_payload(p2: &OneTapeNTM, closed_form: &BigUint) -> BigUint {
    const NODE_CAP: u64 = 2_000_000;
    let cap = match closed_form.to_u64() {
        Some(v) if v <= 500_000 => v,
        _ => return closed_form.clone(),
    };
    let mut iter = match enumerate_computations(p2, &[], cap) {
        Ok(it) => it.with_node_cap(NODE_CAP),
        Err(_) => return closed_form.clone(),
    };
    let mut worst = 0u64;
    for comp in &mut iter {
        if comp.halted && comp.steps() > worst {
            worst = comp.steps();
        }
    }
    if iter.budget_exhausted() {
        return closed_form.clone();
    }
    BigUint::from(worst.max(1))
}

/// Finds the window base m: at least the (C-1)-th root of the payload step
/// bound, doubled until the window (m, 2m] holds C-1 primes.
fn size_window(bound: &BigUint, passes: u64) -> Result<PrimeWindow, GadgetError> {
    let mut m = ceil_nth_root(bound, passes as u32)
        .to_u64()
        .ok_or_else(|| GadgetError::BadParameter("payload bound too large to size".into()))?
        .max(2);
    loop {
        match prime_window(m, passes) {
            Ok(w) => return Ok(w),
            Err(GadgetError::WindowTooSmall(..)) => {
                m = m
                    .checked_mul(2)
                    .ok_or_else(|| GadgetError::BadParameter("window search overflow".into()))?;
            }
            Err(e) => return Err(e),
        }
    }
}

const REJECTION_TAPE: [&str; 5] = ["0", "1", "_", "k0", "k1"];

/// Payload of the rejection gadget: writes `w` on the blank tape, then runs M
/// on it verbatim. M accepting diverges in a spin state; M rejecting halts.
fn rejection_payload(m: &OneTapeNTM, w: &[crate::machine::SymId]) -> Result<OneTapeNTM, GadgetError> {
    let mut b = Builder::new(&["0", "1"], &REJECTION_TAPE, "v0", "fin", "junk");
    let n = w.len();
    // write w back to front, walking left, then bounce onto its first symbol
    for i in 0..n {
        let from = format!("v{i}");
        let to = if i + 1 < n { format!("v{}", i + 1) } else { "go".into() };
        let sym = m.sym_name(w[n - 1 - i]);
        b.rule(&from, "_", &to, sym, Direction::Left);
    }
    let entry = format!("m.{}", m.state_name(m.start_id()));
    if n == 0 {
        b.rule("v0", "_", &entry, "_", Direction::Right);
    } else {
        b.rule("go", "_", &entry, "_", Direction::Right);
    }
    // M verbatim; its accept diverges, its reject ends the gadget
    let map_state = |sid: crate::machine::StateId| -> String {
        if sid == m.accept_id() {
            "spin".into()
        } else if sid == m.reject_id() {
            "fin".into()
        } else {
            format!("m.{}", m.state_name(sid))
        }
    };
    for ix in 0..m.rule_count() {
        let r = m.rule_ids(ix);
        b.rule(
            &format!("m.{}", m.state_name(r.from)),
            m.sym_name(r.read),
            &map_state(r.to),
            m.sym_name(r.write),
            r.dir,
        );
    }
    for sym in REJECTION_TAPE {
        b.rule("spin", sym, "spin", sym, Direction::Right);
    }
    Ok(b.build()?)
}

/// Builds a machine that runs in time Cn+D exactly when M rejects w.
/// Requires M over the alphabet {0,1,_} and, for the forward direction of the
/// biconditional, that M runs in time T.
pub fn rejection_gadget(
    m: &OneTapeNTM,
    w: &[crate::machine::SymId],
    spec: &GadgetSpec,
) -> Result<(OneTapeNTM, GadgetManifest), GadgetError> {
    check_gadget_input(m)?;
    let payload = rejection_payload(m, w)?;
    let t = spec.time_bound(w.len() as u64);
    // worst halting payload run: |w| writes, one bounce, then M's run
    let closed_form = BigUint::from(w.len() as u64 + 2) + &t;
    let measured = measure_payload(&payload, &closed_form);
    assemble_gadget(payload, measured, t, spec)
}

fn check_gadget_input(m: &OneTapeNTM) -> Result<(), GadgetError> {
    let tape: Vec<&str> = m.tape_alphabet().iter().map(|s| s.0.as_str()).collect();
    let mut sorted = tape.clone();
    sorted.sort_unstable();
    if sorted != ["0", "1", "_"] {
        return Err(GadgetError::BadParameter(format!(
            "simulated machine must use tape alphabet {{0,1,_}}, found {{{}}}",
            tape.join(",")
        )));
    }
    Ok(())
}

fn assemble_gadget(
    payload: OneTapeNTM,
    step_bound: BigUint,
    t: BigUint,
    spec: &GadgetSpec,
) -> Result<(OneTapeNTM, GadgetManifest), GadgetError> {
    let passes = spec.c - 1;
    let window = size_window(&step_bound, passes)?;
    let mut filter = Builder::new(
        &["0", "1"],
        &payload
            .tape_alphabet()
            .iter()
            .map(|s| s.0.as_str())
            .collect::<Vec<_>>(),
        "init",
        "ok",
        "no",
    );
    length_filter_into(&mut filter, &window.primes, true);
    let filter = filter.build()?;
    let machine = compose(&filter, &payload)?;
    let stride = window.primes.iter().product();
    let c_ratio = (&step_bound + &t - BigUint::from(1u32)) / &t;
    Ok((
        machine,
        GadgetManifest {
            primes: window.primes.clone(),
            m: window.m,
            c_ratio: c_ratio.to_string(),
            phase2_state_count: payload.state_count(),
            stride,
            phase2_step_bound: step_bound.to_string(),
        },
    ))
}

const COUNTER_TAPE: [&str; 16] = [
    "0", "1", "_", "k0", "k1", "B", "cl0", "cl1", "c0", "c1", "hp0", "hp1", "hp:", "hn0", "hn1",
    "hn:",
];

fn head_mark(side_neg: bool, sym: &str) -> String {
    let tag = if side_neg { "hn" } else { "hp" };
    match sym {
        "_" => format!("{tag}:"),
        s => format!("{tag}{s}"),
    }
}

fn unmarked(mark: &str) -> &str {
    match mark {
        "hp0" | "hn0" => "0",
        "hp1" | "hn1" => "1",
        "hp:" | "hn:" => "_",
        _ => unreachable!(),
    }
}

const HEAD_MARKS: [&str; 6] = ["hp0", "hp1", "hp:", "hn0", "hn1", "hn:"];
const N_MARKS: [&str; 3] = ["hn0", "hn1", "hn:"];
const SIM_SYMS: [&str; 3] = ["0", "1", "_"];

/// Payload of the step-count gadget. Tape layout relative to a base cell that
/// holds the sentinel B: counter bit j lives two cells right of base plus 2j
/// (bit 0 carries the cl marker), M's tape folds onto the remaining even
/// offsets (cell i at base+1+4i for i >= 0, cell -i at base+4i-1), and the
/// simulated head position is a marked symbol carrying its fold side. Each
/// simulated step first decrements the counter (spinning forever on
/// exhaustion), then applies one nondeterministic choice of M at the mark.
fn counter_payload(
    m: &OneTapeNTM,
    w: &[crate::machine::SymId],
    t: &BigUint,
) -> Result<OneTapeNTM, GadgetError> {
    let mut b = Builder::new(&["0", "1"], &COUNTER_TAPE, "v0", "fin", "junk");
    let digits: Vec<bool> = {
        let bits = t.bits();
        (0..bits).map(|j| t.bit(j)).collect()
    };
    let n = w.len();

    // writer: one rightward sweep laying out B, the marked start cell, the
    // counter digits and the folded image of w
    let w_end_digit = 2 + 2 * (digits.len() as i64 - 1);
    let w_end_word = if n >= 2 { 1 + 4 * (n as i64 - 1) } else { 1 };
    let extent = w_end_digit.max(w_end_word);
    let content_at = |off: i64| -> String {
        if off == 0 {
            return "B".into();
        }
        if off == 1 {
            let first = if n == 0 { "_" } else { m.sym_name(w[0]) };
            return head_mark(false, first);
        }
        let rel = off - 1; // offset from the base sim cell
        if rel % 2 == 1 {
            let j = ((rel - 1) / 2) as usize;
            if j < digits.len() {
                let bit = if digits[j] { "1" } else { "0" };
                return if j == 0 {
                    format!("cl{bit}")
                } else {
                    format!("c{bit}")
                };
            }
            return "_".into();
        }
        if rel % 4 == 0 {
            let i = (rel / 4) as usize;
            if i >= 1 && i < n {
                return m.sym_name(w[i]).to_string();
            }
        }
        "_".into()
    };
    for off in 0..=extent {
        let from = format!("v{off}");
        let to = if off == extent {
            "ret".to_string()
        } else {
            format!("v{}", off + 1)
        };
        let dir = if off == extent { Direction::Left } else { Direction::Right };
        b.rule(&from, "_", &to, &content_at(off), dir);
    }
    // walk back to the sentinel, then start the first cycle
    let sim = |q: &str| format!("sim.{q}");
    let start_sim = sim(m.state_name(m.start_id()));
    for sym in COUNTER_TAPE {
        if sym == "B" {
            b.rule("ret", "B", &start_sim, "B", Direction::Right);
        } else {
            b.rule("ret", sym, "ret", sym, Direction::Left);
        }
    }

    let nonhalting: Vec<String> = (0..m.state_count() as crate::machine::StateId)
        .filter(|&s| !m.is_halting(s))
        .map(|s| m.state_name(s).to_string())
        .collect();

    for q in &nonhalting {
        let simq = sim(q);
        let decq = format!("dec.{q}");
        let bwq = format!("bw.{q}");
        let borq = format!("bor.{q}");
        let retlq = format!("retl.{q}");
        let dbq = format!("db.{q}");
        let actq = format!("act.{q}");

        // scan right to the mark, then step left to begin the decrement
        for sym in COUNTER_TAPE {
            if HEAD_MARKS.contains(&sym) {
                b.rule(&simq, sym, &decq, sym, Direction::Left);
            } else {
                b.rule(&simq, sym, &simq, sym, Direction::Right);
            }
        }
        // decrement walker: left to the low digit
        for sym in ["0", "1", "_", "c0", "c1", "k0", "k1"] {
            b.rule(&decq, sym, &decq, sym, Direction::Left);
        }
        b.rule(&decq, "cl1", &retlq, "cl0", Direction::Left);
        b.rule(&decq, "cl0", &bwq, "cl1", Direction::Right);
        b.rule(&decq, "B", &dbq, "B", Direction::Right);
        for mark in HEAD_MARKS {
            b.rule(&dbq, mark, &decq, mark, Direction::Right);
        }
        // borrow: hop the even cell, then resolve at the next digit
        for sym in COUNTER_TAPE {
            if sym != "B" {
                b.rule(&bwq, sym, &borq, sym, Direction::Right);
            }
        }
        b.rule(&borq, "c1", &retlq, "c0", Direction::Left);
        b.rule(&borq, "c0", &bwq, "c1", Direction::Right);
        b.rule(&borq, "_", "spin", "_", Direction::Right);
        // return to the sentinel, then rescan to act
        for sym in COUNTER_TAPE {
            if sym == "B" {
                b.rule(&retlq, "B", &actq, "B", Direction::Right);
            } else {
                b.rule(&retlq, sym, &retlq, sym, Direction::Left);
            }
        }
        // act: scan right to the mark and apply one choice of M
        for sym in COUNTER_TAPE {
            if !HEAD_MARKS.contains(&sym) {
                b.rule(&actq, sym, &actq, sym, Direction::Right);
            }
        }
        let qid = m.state_id_of(q).expect("known state");
        for mark in HEAD_MARKS {
            let reading = unmarked(mark);
            let read_id = m.sym_id_of(reading).expect("sim symbol");
            let neg_side = N_MARKS.contains(&mark);
            // accept and reject collapse onto one halting target, so identical
            // choices can arise; emit each gadget rule once
            let mut emitted: HashSet<(String, String, bool)> = HashSet::new();
            for &rix in m.rules_for(qid, read_id) {
                let r = m.rule_ids(rix);
                let write = m.sym_name(r.write);
                if m.is_halting(r.to) {
                    // M halts before the counter runs out: the gadget halts
                    if emitted.insert(("fin".into(), write.into(), true)) {
                        b.rule(&actq, mark, "fin", write, Direction::Right);
                    }
                    continue;
                }
                let q2 = m.state_name(r.to);
                match (neg_side, r.dir) {
                    (false, Direction::Right) => {
                        // fold offset +4
                        b.rule(&actq, mark, &format!("pr1.{q2}"), write, Direction::Right);
                    }
                    (false, Direction::Left) => {
                        // peek for the sentinel: cell 0 folds to offset +2
                        b.rule(&actq, mark, &format!("ppk.{q2}"), write, Direction::Left);
                    }
                    (true, Direction::Left) => {
                        // fold offset +4 on the negative side
                        b.rule(&actq, mark, &format!("nr1.{q2}"), write, Direction::Right);
                    }
                    (true, Direction::Right) => {
                        // peek for the low digit: cell -1 folds to offset -2
                        b.rule(&actq, mark, &format!("npk.{q2}"), write, Direction::Left);
                    }
                }
            }
        }
    }

    // mover chains, one family per target state
    for q2 in &nonhalting {
        let landp = format!("lp.{q2}");
        let landn = format!("ln.{q2}");
        let pr = |i: usize| format!("pr{i}.{q2}");
        let nr = |i: usize| format!("nr{i}.{q2}");
        let pl = |i: usize| format!("pl{i}.{q2}");
        let nl = |i: usize| format!("nl{i}.{q2}");
        let ps = |i: usize| format!("ps{i}.{q2}");
        let ppk = format!("ppk.{q2}");
        let npk = format!("npk.{q2}");
        let simq2 = sim(q2);
        // chain states pass over whatever sits between simulated cells; only
        // the landing states insist on a plain cell to mark
        for sym in COUNTER_TAPE {
            if sym == "B" || HEAD_MARKS.contains(&sym) {
                continue;
            }
            // positive-side right move: three more right hops, land positive
            b.rule(&pr(1), sym, &pr(2), sym, Direction::Right);
            b.rule(&pr(2), sym, &pr(3), sym, Direction::Right);
            b.rule(&pr(3), sym, &landp, sym, Direction::Right);
            // negative-side left move: same shape, landing negative
            b.rule(&nr(1), sym, &nr(2), sym, Direction::Right);
            b.rule(&nr(2), sym, &nr(3), sym, Direction::Right);
            b.rule(&nr(3), sym, &landn, sym, Direction::Right);
            // positive-side left move, generic case: three more left hops
            b.rule(&pl(1), sym, &pl(2), sym, Direction::Left);
            b.rule(&pl(2), sym, &landp, sym, Direction::Left);
            // negative-side right move, generic case
            b.rule(&nl(1), sym, &nl(2), sym, Direction::Left);
            b.rule(&nl(2), sym, &landn, sym, Direction::Left);
            // crossing the fold from cell 0 to cell -1: forward two cells
            b.rule(&ps(1), sym, &ps(2), sym, Direction::Right);
            b.rule(&ps(2), sym, &landn, sym, Direction::Right);
        }
        // peeks
        b.rule(&ppk, "B", &ps(1), "B", Direction::Right);
        for sym in ["0", "1", "_", "c0", "c1", "cl0", "cl1", "k0", "k1"] {
            b.rule(&ppk, sym, &pl(1), sym, Direction::Left);
        }
        for sym in ["cl0", "cl1"] {
            b.rule(&npk, sym, &landp, sym, Direction::Left);
        }
        for sym in ["0", "1", "_", "c0", "c1", "k0", "k1"] {
            b.rule(&npk, sym, &nl(1), sym, Direction::Left);
        }
        // landing writes the new mark and turns left into the next cycle's scan
        for sym in SIM_SYMS {
            b.rule(&landp, sym, &simq2, &head_mark(false, sym), Direction::Left);
            b.rule(&landn, sym, &simq2, &head_mark(true, sym), Direction::Left);
        }
    }
    for sym in COUNTER_TAPE {
        b.rule("spin", sym, "spin", sym, Direction::Right);
    }
    Ok(b.build()?)
}

/// Conservative closed-form bound on the halting work of the counter payload:
/// initialization plus T cycles of scan, decrement, return and move, each
/// bounded by the maximum tape extent reached.
fn counter_closed_form(n: u64, t: &BigUint) -> BigUint {
    let digits = BigUint::from(t.bits().max(1));
    let extent = BigUint::from(4u32) * (BigUint::from(n) + t)
        + BigUint::from(2u32) * &digits
        + BigUint::from(16u32);
    let init = BigUint::from(2u32) * &extent + BigUint::from(8u32);
    init + t * (BigUint::from(4u32) * &extent + BigUint::from(2u32) * digits + BigUint::from(24u32))
}

/// Builds a machine that runs in time Cn+D exactly when M makes at most
/// T(|w|) steps on input w.
pub fn stepcount_gadget(
    m: &OneTapeNTM,
    w: &[crate::machine::SymId],
    spec: &GadgetSpec,
) -> Result<(OneTapeNTM, GadgetManifest), GadgetError> {
    check_gadget_input(m)?;
    let t = spec.time_bound(w.len() as u64);
    let payload = counter_payload(m, w, &t)?;
    let closed_form = counter_closed_form(w.len() as u64, &t);
    let measured = measure_payload(&payload, &closed_form);
    assemble_gadget(payload, measured, t, spec)
}
