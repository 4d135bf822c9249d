//! One-tape nondeterministic Turing machines: definition, validation, the
//! line-oriented text format, and machine composition.
//!
//! A machine is the 8-tuple (states, input alphabet, tape alphabet, blank,
//! transition relation, start, accept, reject). The head must move on every
//! step and the transition relation is total on non-halting states, so every
//! non-halting configuration has at least one successor.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a state inside one machine's state list.
pub type StateId = u16;
/// Index of a symbol inside one machine's tape alphabet.
pub type SymId = u16;

/// A tape symbol, held by token name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub String);

/// A machine state, held by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State(pub String);

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Head movement. The head moves on every step; there is no stay-put move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    /// Cell offset of the move: -1 for left, +1 for right.
    pub fn offset(self) -> i64 {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Direction::Left => "L",
            Direction::Right => "R",
        }
    }
}

/// One transition: in `from` reading `read`, enter `to`, write `write`, move `dir`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionRule {
    pub from: State,
    pub read: Symbol,
    pub to: State,
    pub write: Symbol,
    pub dir: Direction,
}

/// An unvalidated machine description, as produced by the text-format parser
/// or by programmatic builders. `validate` turns it into a `OneTapeNTM`.
#[derive(Debug, Clone, Default)]
pub struct RawMachine {
    pub input_alphabet: Vec<String>,
    pub tape_alphabet: Vec<String>,
    pub blank: String,
    pub start: String,
    pub accept: String,
    pub reject: String,
    /// Optional explicit state-declaration order. When empty, states are
    /// inferred in order of first appearance in the rules.
    pub states: Vec<String>,
    pub rules: Vec<(String, String, String, String, Direction)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("no transition for non-halting state `{0}` on symbol `{1}`")]
    MissingTransition(String, String),
    #[error("halting state `{0}` has an outgoing rule")]
    HaltingStateHasRule(String),
    #[error("alphabet violation: {0}")]
    AlphabetViolation(String),
    #[error("duplicate rule: {0} {1} -> {2} {3} {4}")]
    DuplicateRule(String, String, String, String, &'static str),
    #[error("distinctness violation: {0}")]
    DistinctnessViolation(String),
    #[error("invalid token `{0}`: {1}")]
    BadToken(String, &'static str),
    #[error("machine too large: {0}")]
    TooLarge(String),
    #[error("operand alphabets differ: {0}")]
    AlphabetMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Compiled form of a rule, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleIds {
    pub from: StateId,
    pub read: SymId,
    pub to: StateId,
    pub write: SymId,
    pub dir: Direction,
}

/// A validated one-tape NTM. Immutable after construction; all simulation
/// modules work over the compiled id-level view.
#[derive(Debug, Clone)]
pub struct OneTapeNTM {
    states: Vec<State>,
    input_alphabet: Vec<Symbol>,
    tape_alphabet: Vec<Symbol>,
    blank: Symbol,
    rules: Vec<TransitionRule>,
    start: State,
    accept: State,
    reject: State,
    // compiled view
    start_id: StateId,
    accept_id: StateId,
    reject_id: StateId,
    blank_id: SymId,
    input_ids: Vec<SymId>,
    rule_ids: Vec<RuleIds>,
    // [state][symbol] -> applicable rule indices in declaration order
    table: Vec<Vec<Vec<u32>>>,
}

fn check_token(tok: &str) -> Result<(), MachineError> {
    if tok.is_empty() {
        return Err(MachineError::BadToken(tok.into(), "empty"));
    }
    if tok == "#" {
        return Err(MachineError::BadToken(tok.into(), "reserved comment marker"));
    }
    if tok.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(MachineError::BadToken(tok.into(), "whitespace or control character"));
    }
    Ok(())
}

/// Validates a raw description against every machine invariant and compiles
/// the transition table.
pub fn validate(raw: &RawMachine) -> Result<OneTapeNTM, MachineError> {
    for tok in raw
        .input_alphabet
        .iter()
        .chain(raw.tape_alphabet.iter())
        .chain([&raw.blank, &raw.start, &raw.accept, &raw.reject])
    {
        check_token(tok)?;
    }

    // tape alphabet: duplicate-free, contains the input alphabet and the blank
    let mut sym_ix: HashMap<&str, SymId> = HashMap::new();
    for (i, tok) in raw.tape_alphabet.iter().enumerate() {
        if sym_ix.insert(tok.as_str(), i as SymId).is_some() {
            return Err(MachineError::AlphabetViolation(format!(
                "duplicate tape symbol `{tok}`"
            )));
        }
    }
    if raw.tape_alphabet.len() > SymId::MAX as usize {
        return Err(MachineError::TooLarge("tape alphabet".into()));
    }
    if raw.input_alphabet.is_empty() {
        return Err(MachineError::AlphabetViolation("empty input alphabet".into()));
    }
    let mut seen_input: HashMap<&str, ()> = HashMap::new();
    for tok in &raw.input_alphabet {
        if seen_input.insert(tok.as_str(), ()).is_some() {
            return Err(MachineError::AlphabetViolation(format!(
                "duplicate input symbol `{tok}`"
            )));
        }
        if !sym_ix.contains_key(tok.as_str()) {
            return Err(MachineError::AlphabetViolation(format!(
                "input symbol `{tok}` not in tape alphabet"
            )));
        }
        if *tok == raw.blank {
            return Err(MachineError::AlphabetViolation(
                "blank symbol appears in the input alphabet".into(),
            ));
        }
    }
    let blank_id = *sym_ix
        .get(raw.blank.as_str())
        .ok_or_else(|| MachineError::AlphabetViolation(format!("blank `{}` not in tape alphabet", raw.blank)))?;

    if raw.start == raw.accept || raw.start == raw.reject || raw.accept == raw.reject {
        return Err(MachineError::DistinctnessViolation(
            "start, accept and reject must be pairwise distinct".into(),
        ));
    }

    // state list: start, accept, reject, then the explicit declaration order
    // when given, otherwise first appearance in the rules
    let mut states: Vec<String> = vec![raw.start.clone(), raw.accept.clone(), raw.reject.clone()];
    let mut state_ix: HashMap<String, StateId> = HashMap::new();
    for (i, s) in states.iter().enumerate() {
        state_ix.insert(s.clone(), i as StateId);
    }
    let add_state = |s: &String,
                         states: &mut Vec<String>,
                         state_ix: &mut HashMap<String, StateId>|
     -> Result<(), MachineError> {
        check_token(s)?;
        if !state_ix.contains_key(s.as_str()) {
            if states.len() >= StateId::MAX as usize {
                return Err(MachineError::TooLarge("state set".into()));
            }
            state_ix.insert(s.clone(), states.len() as StateId);
            states.push(s.clone());
        }
        Ok(())
    };
    if raw.states.is_empty() {
        for (from, _, to, _, _) in &raw.rules {
            for s in [from, to] {
                add_state(s, &mut states, &mut state_ix)?;
            }
        }
    } else {
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for s in &raw.states {
            if seen.insert(s.as_str(), ()).is_some() {
                return Err(MachineError::DistinctnessViolation(format!(
                    "state `{s}` declared twice"
                )));
            }
            add_state(s, &mut states, &mut state_ix)?;
        }
        for name in [&raw.start, &raw.accept, &raw.reject] {
            if !raw.states.contains(name) {
                return Err(MachineError::DistinctnessViolation(format!(
                    "declared state list misses `{name}`"
                )));
            }
        }
        for (from, _, to, _, _) in &raw.rules {
            for s in [from, to] {
                if !state_ix.contains_key(s.as_str()) {
                    return Err(MachineError::DistinctnessViolation(format!(
                        "rule references undeclared state `{s}`"
                    )));
                }
            }
        }
    }

    let accept_id = 1 as StateId;
    let reject_id = 2 as StateId;

    // rules: symbols in the tape alphabet, no rule out of a halting state,
    // duplicate-free
    let mut rule_ids = Vec::with_capacity(raw.rules.len());
    let mut seen_rules: HashMap<(StateId, SymId, StateId, SymId, Direction), ()> = HashMap::new();
    for (from, read, to, write, dir) in &raw.rules {
        let from_id = state_ix[from.as_str()];
        if from_id == accept_id || from_id == reject_id {
            return Err(MachineError::HaltingStateHasRule(from.clone()));
        }
        let read_id = *sym_ix
            .get(read.as_str())
            .ok_or_else(|| MachineError::AlphabetViolation(format!("rule reads `{read}` not in tape alphabet")))?;
        let write_id = *sym_ix
            .get(write.as_str())
            .ok_or_else(|| MachineError::AlphabetViolation(format!("rule writes `{write}` not in tape alphabet")))?;
        let to_id = state_ix[to.as_str()];
        let key = (from_id, read_id, to_id, write_id, *dir);
        if seen_rules.insert(key, ()).is_some() {
            return Err(MachineError::DuplicateRule(
                from.clone(),
                read.clone(),
                to.clone(),
                write.clone(),
                dir.token(),
            ));
        }
        rule_ids.push(RuleIds {
            from: from_id,
            read: read_id,
            to: to_id,
            write: write_id,
            dir: *dir,
        });
    }

    // totality
    let mut table = vec![vec![Vec::new(); raw.tape_alphabet.len()]; states.len()];
    for (ix, r) in rule_ids.iter().enumerate() {
        table[r.from as usize][r.read as usize].push(ix as u32);
    }
    for (sid, name) in states.iter().enumerate() {
        if sid == accept_id as usize || sid == reject_id as usize {
            continue;
        }
        for (aid, atok) in raw.tape_alphabet.iter().enumerate() {
            if table[sid][aid].is_empty() {
                return Err(MachineError::MissingTransition(name.clone(), atok.clone()));
            }
        }
    }

    let rules = raw
        .rules
        .iter()
        .map(|(from, read, to, write, dir)| TransitionRule {
            from: State(from.clone()),
            read: Symbol(read.clone()),
            to: State(to.clone()),
            write: Symbol(write.clone()),
            dir: *dir,
        })
        .collect();

    Ok(OneTapeNTM {
        states: states.into_iter().map(State).collect(),
        input_alphabet: raw.input_alphabet.iter().cloned().map(Symbol).collect(),
        tape_alphabet: raw.tape_alphabet.iter().cloned().map(Symbol).collect(),
        blank: Symbol(raw.blank.clone()),
        rules,
        start: State(raw.start.clone()),
        accept: State(raw.accept.clone()),
        reject: State(raw.reject.clone()),
        start_id: 0,
        accept_id,
        reject_id,
        blank_id,
        input_ids: raw
            .input_alphabet
            .iter()
            .map(|t| sym_ix[t.as_str()])
            .collect(),
        rule_ids,
        table,
    })
}

impl OneTapeNTM {
    pub fn states(&self) -> &[State] {
        &self.states
    }

    /// Number of states, including start, accept and reject.
    pub fn state_count(&self) -> u64 {
        self.states.len() as u64
    }

    pub fn input_alphabet(&self) -> &[Symbol] {
        &self.input_alphabet
    }

    pub fn tape_alphabet(&self) -> &[Symbol] {
        &self.tape_alphabet
    }

    pub fn blank(&self) -> &Symbol {
        &self.blank
    }

    pub fn rules(&self) -> &[TransitionRule] {
        &self.rules
    }

    pub fn start(&self) -> &State {
        &self.start
    }

    pub fn accept(&self) -> &State {
        &self.accept
    }

    pub fn reject(&self) -> &State {
        &self.reject
    }

    pub fn start_id(&self) -> StateId {
        self.start_id
    }

    pub fn accept_id(&self) -> StateId {
        self.accept_id
    }

    pub fn reject_id(&self) -> StateId {
        self.reject_id
    }

    pub fn blank_id(&self) -> SymId {
        self.blank_id
    }

    /// Input alphabet as tape-symbol ids, in declared order.
    pub fn input_ids(&self) -> &[SymId] {
        &self.input_ids
    }

    pub fn is_halting(&self, s: StateId) -> bool {
        s == self.accept_id || s == self.reject_id
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s as usize].0
    }

    pub fn sym_name(&self, a: SymId) -> &str {
        &self.tape_alphabet[a as usize].0
    }

    pub fn state_id_of(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.0 == name).map(|i| i as StateId)
    }

    pub fn sym_id_of(&self, tok: &str) -> Option<SymId> {
        self.tape_alphabet
            .iter()
            .position(|s| s.0 == tok)
            .map(|i| i as SymId)
    }

    /// Compiled rule by global rule index.
    pub fn rule_ids(&self, ix: u32) -> RuleIds {
        self.rule_ids[ix as usize]
    }

    pub fn rule_count(&self) -> u32 {
        self.rule_ids.len() as u32
    }

    /// Indices of the rules applicable in `state` reading `sym`, in
    /// declaration order. Empty exactly for halting states.
    pub fn rules_for(&self, state: StateId, sym: SymId) -> &[u32] {
        &self.table[state as usize][sym as usize]
    }

    /// Parses a word over the input alphabet. If every input token is a single
    /// character the word is read character by character, otherwise it is
    /// whitespace-separated.
    pub fn parse_input_word(&self, s: &str) -> Result<Vec<SymId>, MachineError> {
        self.parse_word_over(s, false)
    }

    /// Parses a word over the full tape alphabet (used for tape parts).
    pub fn parse_tape_word(&self, s: &str) -> Result<Vec<SymId>, MachineError> {
        self.parse_word_over(s, true)
    }

    fn parse_word_over(&self, s: &str, tape: bool) -> Result<Vec<SymId>, MachineError> {
        let alphabet: Vec<&Symbol> = if tape {
            self.tape_alphabet.iter().collect()
        } else {
            self.input_alphabet.iter().collect()
        };
        let single = alphabet.iter().all(|t| t.0.chars().count() == 1);
        let toks: Vec<String> = if single && !s.contains(char::is_whitespace) {
            s.chars().map(|c| c.to_string()).collect()
        } else {
            s.split_whitespace().map(|t| t.to_string()).collect()
        };
        let mut out = Vec::with_capacity(toks.len());
        for t in toks {
            let id = self.sym_id_of(&t).ok_or_else(|| {
                MachineError::AlphabetViolation(format!("symbol `{t}` not in tape alphabet"))
            })?;
            if !tape && !self.input_ids.contains(&id) {
                return Err(MachineError::AlphabetViolation(format!(
                    "symbol `{t}` not in input alphabet"
                )));
            }
            out.push(id);
        }
        Ok(out)
    }

    /// Renders a word of symbol ids. Single-character alphabets concatenate,
    /// others join with spaces.
    pub fn word_string(&self, w: &[SymId]) -> String {
        let single = self.tape_alphabet.iter().all(|t| t.0.chars().count() == 1);
        let toks: Vec<&str> = w.iter().map(|&a| self.sym_name(a)).collect();
        if single {
            toks.concat()
        } else {
            toks.join(" ")
        }
    }

    /// Serializes to the text format: header lines in fixed order, then rules
    /// in declaration order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("ntm v1\n");
        out.push_str("input");
        for s in &self.input_alphabet {
            out.push(' ');
            out.push_str(&s.0);
        }
        out.push('\n');
        out.push_str("tape");
        for s in &self.tape_alphabet {
            out.push(' ');
            out.push_str(&s.0);
        }
        out.push('\n');
        out.push_str(&format!("blank {}\n", self.blank));
        out.push_str(&format!("start {}\n", self.start));
        out.push_str(&format!("accept {}\n", self.accept));
        out.push_str(&format!("reject {}\n", self.reject));
        for r in &self.rules {
            out.push_str(&format!(
                "{} {} -> {} {} {}\n",
                r.from,
                r.read,
                r.to,
                r.write,
                r.dir.token()
            ));
        }
        out
    }
}

/// Parses the text format and validates the result.
///
/// Format: first non-comment line `ntm v1`; header lines `input`, `tape`,
/// `blank`, `start`, `accept`, `reject` in any order, each exactly once; then
/// one rule per line `<state> <symbol> -> <state> <symbol> <L|R>`. `#` starts
/// a comment, blank lines are ignored.
pub fn parse_machine(text: &str) -> Result<OneTapeNTM, MachineError> {
    let raw = parse_raw(text)?;
    validate(&raw)
}

pub fn parse_raw(text: &str) -> Result<RawMachine, MachineError> {
    let mut raw = RawMachine::default();
    let mut saw = HashMap::new();
    let mut version_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let err = |msg: String| MachineError::Parse {
            line: lineno + 1,
            msg,
        };
        if !version_seen {
            if toks == ["ntm", "v1"] {
                version_seen = true;
                continue;
            }
            return Err(err("expected `ntm v1` header".into()));
        }
        match toks[0] {
            "input" | "tape" => {
                if saw.insert(toks[0].to_string(), ()).is_some() {
                    return Err(err(format!("duplicate `{}` header", toks[0])));
                }
                let syms: Vec<String> = toks[1..].iter().map(|s| s.to_string()).collect();
                if syms.is_empty() {
                    return Err(err(format!("`{}` header lists no symbols", toks[0])));
                }
                if toks[0] == "input" {
                    raw.input_alphabet = syms;
                } else {
                    raw.tape_alphabet = syms;
                }
            }
            "blank" | "start" | "accept" | "reject" => {
                if saw.insert(toks[0].to_string(), ()).is_some() {
                    return Err(err(format!("duplicate `{}` header", toks[0])));
                }
                if toks.len() != 2 {
                    return Err(err(format!("`{}` header takes exactly one token", toks[0])));
                }
                let v = toks[1].to_string();
                match toks[0] {
                    "blank" => raw.blank = v,
                    "start" => raw.start = v,
                    "accept" => raw.accept = v,
                    _ => raw.reject = v,
                }
            }
            _ => {
                // rule line
                if toks.len() != 6 || toks[2] != "->" {
                    return Err(err(
                        "expected `<state> <symbol> -> <state> <symbol> <L|R>`".into(),
                    ));
                }
                let dir = match toks[5] {
                    "L" => Direction::Left,
                    "R" => Direction::Right,
                    other => return Err(err(format!("bad direction `{other}`"))),
                };
                raw.rules.push((
                    toks[0].into(),
                    toks[1].into(),
                    toks[3].into(),
                    toks[4].into(),
                    dir,
                ));
            }
        }
    }
    if !version_seen {
        return Err(MachineError::Parse {
            line: 0,
            msg: "empty description".into(),
        });
    }
    for h in ["input", "tape", "blank", "start", "accept", "reject"] {
        if !saw.contains_key(h) {
            return Err(MachineError::Parse {
                line: 0,
                msg: format!("missing `{h}` header"),
            });
        }
    }
    Ok(raw)
}

/// Composes two machines: the result computes as `m1` but enters `m2` where
/// `m1` would accept. If `m1` rejects, the composition rejects. Operand states
/// are prefixed `a.` and `b.` so the renaming is reproducible; the state count
/// is `q1 + q2 - 2`.
pub fn compose(m1: &OneTapeNTM, m2: &OneTapeNTM) -> Result<OneTapeNTM, MachineError> {
    if m1.input_alphabet != m2.input_alphabet
        || m1.tape_alphabet != m2.tape_alphabet
        || m1.blank != m2.blank
    {
        return Err(MachineError::AlphabetMismatch(
            "composition operands must share input alphabet, tape alphabet and blank".into(),
        ));
    }
    let map1 = |s: &State| -> String {
        if s == &m1.accept {
            format!("b.{}", m2.start.0)
        } else if s == &m1.reject {
            format!("b.{}", m2.reject.0)
        } else {
            format!("a.{}", s.0)
        }
    };
    let map2 = |s: &State| -> String { format!("b.{}", s.0) };

    let mut declared: Vec<String> = Vec::new();
    for s in &m1.states {
        if s != &m1.accept && s != &m1.reject {
            declared.push(format!("a.{}", s.0));
        }
    }
    for s in &m2.states {
        declared.push(format!("b.{}", s.0));
    }
    let mut raw = RawMachine {
        input_alphabet: m1.input_alphabet.iter().map(|s| s.0.clone()).collect(),
        tape_alphabet: m1.tape_alphabet.iter().map(|s| s.0.clone()).collect(),
        blank: m1.blank.0.clone(),
        start: format!("a.{}", m1.start.0),
        accept: format!("b.{}", m2.accept.0),
        reject: format!("b.{}", m2.reject.0),
        states: declared,
        rules: Vec::with_capacity(m1.rules.len() + m2.rules.len()),
    };
    for r in &m1.rules {
        raw.rules.push((
            map1(&r.from),
            r.read.0.clone(),
            map1(&r.to),
            r.write.0.clone(),
            r.dir,
        ));
    }
    for r in &m2.rules {
        raw.rules.push((
            map2(&r.from),
            r.read.0.clone(),
            map2(&r.to),
            r.write.0.clone(),
            r.dir,
        ));
    }
    validate(&raw)
}

/// True when the two machines have equal alphabets and identical transition
/// relations under canonical state indexing (start, accept, reject, then
/// declaration order). Used for codec round-trips and composition laws.
pub fn canonically_equal(a: &OneTapeNTM, b: &OneTapeNTM) -> bool {
    if a.state_count() != b.state_count()
        || a.input_alphabet != b.input_alphabet
        || a.tape_alphabet != b.tape_alphabet
        || a.blank != b.blank
    {
        return false;
    }
    let set = |m: &OneTapeNTM| -> std::collections::BTreeSet<(StateId, SymId, StateId, SymId, bool)> {
        m.rule_ids
            .iter()
            .map(|r| (r.from, r.read, r.to, r.write, r.dir == Direction::Right))
            .collect()
    };
    set(a) == set(b)
}
