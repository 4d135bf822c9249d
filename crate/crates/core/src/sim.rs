//! Full-input simulation: configurations, depth-first enumeration of all
//! nondeterministic computations under a step budget, choice-sequence replay,
//! crossing sequences, and the brute-force time-bound oracle.
//!
//! Cell and boundary numbering: the input's first symbol sits in cell 0 and
//! boundary `i` is the line between cells `i-1` and `i`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::machine::{OneTapeNTM, StateId, SymId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("symbol id {0} is not in the input alphabet")]
    SymbolNotInInput(SymId),
    #[error("time {t} is out of range for a computation of {steps} steps")]
    TimeOutOfRange { t: u64, steps: u64 },
    #[error("choice {choice} at step {step} is not applicable")]
    BadChoice { step: u64, choice: u32 },
    #[error("step bound C*n+D overflows")]
    BoundOverflow,
    #[error("work budget exhausted")]
    BudgetExhausted,
}

/// A machine snapshot: sparse tape (absent cells hold the blank), head cell,
/// current state, and the number of steps taken so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub tape: BTreeMap<i64, SymId>,
    pub head: i64,
    pub state: StateId,
    pub step: u64,
}

impl Configuration {
    pub fn read(&self, m: &OneTapeNTM, cell: i64) -> SymId {
        self.tape.get(&cell).copied().unwrap_or_else(|| m.blank_id())
    }
}

/// A choice-resolved computation: the input word, one global rule index per
/// step, the final configuration, and whether the machine halted (as opposed
/// to being truncated at the step budget).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Computation {
    pub input: Vec<SymId>,
    pub choices: Vec<u32>,
    pub final_config: Configuration,
    pub halted: bool,
}

impl Computation {
    pub fn steps(&self) -> u64 {
        self.final_config.step
    }
}

/// An ordered list of the states carried across one tape boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CrossingSequence {
    pub states: Vec<StateId>,
    pub finite: bool,
}

impl CrossingSequence {
    pub fn new(states: Vec<StateId>) -> Self {
        CrossingSequence {
            states,
            finite: true,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn display(&self, m: &OneTapeNTM) -> String {
        let names: Vec<&str> = self.states.iter().map(|&s| m.state_name(s)).collect();
        format!("({})", names.join(","))
    }
}

/// Evidence that some computation on `input` exceeds the bound `C*n+D`.
#[derive(Debug, Clone)]
pub struct RunViolation {
    pub input: Vec<SymId>,
    pub computation: Computation,
    pub steps: u64,
    pub bound: u64,
}

/// Start configuration on `w`: the word in cells `0..|w|-1`, head on cell 0,
/// start state, step 0.
pub fn start_configuration(m: &OneTapeNTM, w: &[SymId]) -> Result<Configuration, SimError> {
    let mut tape = BTreeMap::new();
    for (i, &a) in w.iter().enumerate() {
        if !m.input_ids().contains(&a) {
            return Err(SimError::SymbolNotInInput(a));
        }
        if a != m.blank_id() {
            tape.insert(i as i64, a);
        }
    }
    Ok(Configuration {
        tape,
        head: 0,
        state: m.start_id(),
        step: 0,
    })
}

/// All successor configurations of `c`, one per applicable rule in declaration
/// order, paired with the global rule index. Empty exactly when `c` is in a
/// halting state.
pub fn successors(m: &OneTapeNTM, c: &Configuration) -> Vec<(u32, Configuration)> {
    if m.is_halting(c.state) {
        return Vec::new();
    }
    let read = c.read(m, c.head);
    m.rules_for(c.state, read)
        .iter()
        .map(|&ix| {
            let r = m.rule_ids(ix);
            let mut next = c.clone();
            if r.write == m.blank_id() {
                next.tape.remove(&c.head);
            } else {
                next.tape.insert(c.head, r.write);
            }
            next.head += r.dir.offset();
            next.state = r.to;
            next.step += 1;
            (ix, next)
        })
        .collect()
}

struct Undo {
    cell: i64,
    prev: Option<SymId>,
    prev_head: i64,
    prev_state: StateId,
}

struct Frame {
    options: Vec<u32>,
    next: usize,
    undo: Option<Undo>,
}

/// Depth-first stream of all computations on `input` under `max_steps`.
/// A computation is emitted when it halts at step `<= max_steps`, or truncated
/// (`halted = false`) exactly at `max_steps`. Branches follow rule declaration
/// order, so the stream order is canonical.
pub struct ComputationIter<'m> {
    m: &'m OneTapeNTM,
    input: Vec<SymId>,
    max_steps: u64,
    cfg: Configuration,
    path: Vec<u32>,
    stack: Vec<Frame>,
    started: bool,
    done: bool,
    steps_expended: u64,
    node_cap: Option<u64>,
    budget_hit: bool,
}

pub fn enumerate_computations<'m>(
    m: &'m OneTapeNTM,
    input: &[SymId],
    max_steps: u64,
) -> Result<ComputationIter<'m>, SimError> {
    let cfg = start_configuration(m, input)?;
    Ok(ComputationIter {
        m,
        input: input.to_vec(),
        max_steps,
        cfg,
        path: Vec::new(),
        stack: Vec::new(),
        started: false,
        done: false,
        steps_expended: 0,
        node_cap: None,
        budget_hit: false,
    })
}

impl<'m> ComputationIter<'m> {
    /// Caps the total number of simulated steps across all branches; when the
    /// cap is hit the stream ends early and `budget_exhausted` reports it.
    pub fn with_node_cap(mut self, cap: u64) -> Self {
        self.node_cap = Some(cap);
        self
    }

    pub fn steps_expended(&self) -> u64 {
        self.steps_expended
    }

    pub fn budget_exhausted(&self) -> bool {
        self.budget_hit
    }

    fn at_leaf(&self) -> bool {
        self.m.is_halting(self.cfg.state) || self.cfg.step == self.max_steps
    }

    fn emit(&self) -> Computation {
        Computation {
            input: self.input.clone(),
            choices: self.path.clone(),
            final_config: self.cfg.clone(),
            halted: self.m.is_halting(self.cfg.state),
        }
    }

    fn options_here(&self) -> Vec<u32> {
        let read = self.cfg.read(self.m, self.cfg.head);
        self.m.rules_for(self.cfg.state, read).to_vec()
    }

    fn apply(&mut self, rule_ix: u32) -> Undo {
        let r = self.m.rule_ids(rule_ix);
        let undo = Undo {
            cell: self.cfg.head,
            prev: self.cfg.tape.get(&self.cfg.head).copied(),
            prev_head: self.cfg.head,
            prev_state: self.cfg.state,
        };
        if r.write == self.m.blank_id() {
            self.cfg.tape.remove(&self.cfg.head);
        } else {
            self.cfg.tape.insert(self.cfg.head, r.write);
        }
        self.cfg.head += r.dir.offset();
        self.cfg.state = r.to;
        self.cfg.step += 1;
        self.steps_expended += 1;
        undo
    }

    fn revert(&mut self, undo: Undo) {
        match undo.prev {
            Some(a) => {
                self.cfg.tape.insert(undo.cell, a);
            }
            None => {
                self.cfg.tape.remove(&undo.cell);
            }
        }
        self.cfg.head = undo.prev_head;
        self.cfg.state = undo.prev_state;
        self.cfg.step -= 1;
    }
}

impl<'m> Iterator for ComputationIter<'m> {
    type Item = Computation;

    fn next(&mut self) -> Option<Computation> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.at_leaf() {
                self.done = true;
                return Some(self.emit());
            }
            self.stack.push(Frame {
                options: self.options_here(),
                next: 0,
                undo: None,
            });
        }
        while let Some(top) = self.stack.last_mut() {
            if let Some(cap) = self.node_cap {
                if self.steps_expended >= cap {
                    self.budget_hit = true;
                    self.done = true;
                    return None;
                }
            }
            if top.next >= top.options.len() {
                let frame = self.stack.pop().unwrap();
                if let Some(u) = frame.undo {
                    self.revert(u);
                    self.path.pop();
                }
                continue;
            }
            let rule_ix = top.options[top.next];
            top.next += 1;
            let undo = self.apply(rule_ix);
            self.path.push(rule_ix);
            if self.at_leaf() {
                let item = self.emit();
                self.revert(undo);
                self.path.pop();
                return Some(item);
            }
            self.stack.push(Frame {
                options: self.options_here(),
                next: 0,
                undo: Some(undo),
            });
        }
        self.done = true;
        None
    }
}

/// One applied step, as observed during replay.
#[derive(Debug, Clone, Copy)]
pub struct StepEvent {
    /// 1-based step number.
    pub step: u64,
    pub rule: u32,
    pub from_head: i64,
    pub to_head: i64,
    pub state_after: StateId,
}

/// Replays `choices` on `input` for the first `t` steps, verifying that every
/// chosen rule is applicable, and feeds each step to `on_step`.
pub fn replay_trace(
    m: &OneTapeNTM,
    input: &[SymId],
    choices: &[u32],
    t: u64,
    mut on_step: impl FnMut(&StepEvent),
) -> Result<Configuration, SimError> {
    if t > choices.len() as u64 {
        return Err(SimError::TimeOutOfRange {
            t,
            steps: choices.len() as u64,
        });
    }
    let mut cfg = start_configuration(m, input)?;
    for (i, &ix) in choices.iter().take(t as usize).enumerate() {
        let step = (i + 1) as u64;
        if ix >= m.rule_count() {
            return Err(SimError::BadChoice { step, choice: ix });
        }
        let r = m.rule_ids(ix);
        if r.from != cfg.state || r.read != cfg.read(m, cfg.head) {
            return Err(SimError::BadChoice { step, choice: ix });
        }
        let from_head = cfg.head;
        if r.write == m.blank_id() {
            cfg.tape.remove(&cfg.head);
        } else {
            cfg.tape.insert(cfg.head, r.write);
        }
        cfg.head += r.dir.offset();
        cfg.state = r.to;
        cfg.step += 1;
        on_step(&StepEvent {
            step,
            rule: ix,
            from_head,
            to_head: cfg.head,
            state_after: cfg.state,
        });
    }
    Ok(cfg)
}

/// Replays a full choice sequence; the result is the final configuration.
pub fn replay(m: &OneTapeNTM, input: &[SymId], choices: &[u32]) -> Result<Configuration, SimError> {
    replay_trace(m, input, choices, choices.len() as u64, |_| {})
}

/// The crossing sequence of `comp` at `boundary` after `t` steps: the state
/// after each step whose head move crosses the line between cells
/// `boundary-1` and `boundary`.
pub fn crossing_sequence(
    m: &OneTapeNTM,
    comp: &Computation,
    boundary: i64,
    t: u64,
) -> Result<CrossingSequence, SimError> {
    if t > comp.steps() {
        return Err(SimError::TimeOutOfRange {
            t,
            steps: comp.steps(),
        });
    }
    let mut states = Vec::new();
    replay_trace(m, &comp.input, &comp.choices, t, |ev| {
        let crossed = ev.from_head.max(ev.to_head);
        if crossed == boundary {
            states.push(ev.state_after);
        }
    })?;
    Ok(CrossingSequence::new(states))
}

/// Crossing sequences at every boundary after `t` steps, with the step number
/// of each crossing. Only boundaries that are crossed appear in the map.
pub fn crossing_sequences_upto(
    m: &OneTapeNTM,
    input: &[SymId],
    choices: &[u32],
    t: u64,
) -> Result<BTreeMap<i64, Vec<(StateId, u64)>>, SimError> {
    let mut map: BTreeMap<i64, Vec<(StateId, u64)>> = BTreeMap::new();
    replay_trace(m, input, choices, t, |ev| {
        let crossed = ev.from_head.max(ev.to_head);
        map.entry(crossed).or_default().push((ev.state_after, ev.step));
    })?;
    Ok(map)
}

/// Checks every computation on `w` against the bound `C*|w|+D`. Since every
/// non-halting configuration has a successor, exceeding the bound is the same
/// as reaching step `C*|w|+D+1`, so the enumeration runs with that budget and
/// the first offending computation (in canonical order) is returned.
pub fn check_input(
    m: &OneTapeNTM,
    w: &[SymId],
    c: u64,
    d: u64,
) -> Result<Option<RunViolation>, SimError> {
    check_input_counted(m, w, c, d, None, &mut 0, &mut 0)
}

/// `check_input` with an optional total-step cap and step/computation
/// accounting, for callers that meter their work.
pub(crate) fn check_input_counted(
    m: &OneTapeNTM,
    w: &[SymId],
    c: u64,
    d: u64,
    node_cap: Option<u64>,
    steps_out: &mut u64,
    comps_out: &mut u64,
) -> Result<Option<RunViolation>, SimError> {
    let bound = c
        .checked_mul(w.len() as u64)
        .and_then(|x| x.checked_add(d))
        .ok_or(SimError::BoundOverflow)?;
    let budget = bound.checked_add(1).ok_or(SimError::BoundOverflow)?;
    let mut iter = enumerate_computations(m, w, budget)?;
    if let Some(cap) = node_cap {
        iter = iter.with_node_cap(cap);
    }
    let mut hit = None;
    for comp in &mut iter {
        *comps_out += 1;
        if comp.steps() > bound {
            hit = Some(comp);
            break;
        }
    }
    *steps_out += iter.steps_expended();
    if iter.budget_exhausted() {
        return Err(SimError::BudgetExhausted);
    }
    Ok(hit.map(|computation| RunViolation {
        input: w.to_vec(),
        steps: computation.steps(),
        bound,
        computation,
    }))
}

/// Iterator over all input words of a fixed length, in lexicographic order of
/// the declared input alphabet.
pub struct WordIter {
    alphabet: Vec<SymId>,
    digits: Vec<usize>,
    first: bool,
    done: bool,
}

pub fn words_of_length(m: &OneTapeNTM, n: usize) -> WordIter {
    WordIter {
        alphabet: m.input_ids().to_vec(),
        digits: vec![0; n],
        first: true,
        done: false,
    }
}

impl Iterator for WordIter {
    type Item = Vec<SymId>;

    fn next(&mut self) -> Option<Vec<SymId>> {
        if self.done {
            return None;
        }
        if self.first {
            self.first = false;
            return Some(self.digits.iter().map(|&d| self.alphabet[d]).collect());
        }
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.digits[i] + 1 < self.alphabet.len() {
                self.digits[i] += 1;
                for d in self.digits[i + 1..].iter_mut() {
                    *d = 0;
                }
                return Some(self.digits.iter().map(|&d| self.alphabet[d]).collect());
            }
            self.digits[i] = 0;
        }
    }
}

/// Brute-force oracle for "runs in time Cn+D" restricted to inputs of length
/// at most `n_max`, in length-then-lexicographic order.
pub fn brute_force_runs_in_time(
    m: &OneTapeNTM,
    c: u64,
    d: u64,
    n_max: usize,
) -> Result<Option<RunViolation>, SimError> {
    for n in 0..=n_max {
        for w in words_of_length(m, n) {
            if let Some(v) = check_input(m, &w, c, d)? {
                return Ok(Some(v));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::fixtures::*;

    fn w(m: &OneTapeNTM, s: &str) -> Vec<SymId> {
        m.parse_input_word(s).unwrap()
    }

    #[test]
    fn start_configuration_places_input() {
        let m = m_sweep();
        let c = start_configuration(&m, &w(&m, "11")).unwrap();
        assert_eq!(c.head, 0);
        assert_eq!(c.state, m.start_id());
        assert_eq!(c.step, 0);
        assert_eq!(c.tape.len(), 2);
        assert_eq!(c.read(&m, 0), m.sym_id_of("1").unwrap());
        assert_eq!(c.read(&m, 1), m.sym_id_of("1").unwrap());
        assert_eq!(c.read(&m, 2), m.blank_id());

        let e = start_configuration(&m_acc(), &[]).unwrap();
        assert!(e.tape.is_empty());
    }

    #[test]
    fn start_configuration_rejects_non_input_symbols() {
        let m = m_acc();
        let blank = m.blank_id();
        assert!(matches!(
            start_configuration(&m, &[blank]),
            Err(SimError::SymbolNotInInput(_))
        ));
    }

    #[test]
    fn successors_follow_declaration_order() {
        let m = m_acc();
        let c = start_configuration(&m, &[]).unwrap();
        let succ = successors(&m, &c);
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].1.state, m.accept_id());
        assert_eq!(succ[0].1.head, 1);
        assert!(successors(&m, &succ[0].1).is_empty());

        // two rules for the same (state, symbol) yield two successors
        let nd = crate::machine::parse_machine(
            "ntm v1\ninput 0 1\ntape 0 1 _\nblank _\nstart s\naccept a\nreject r\n\
             s 1 -> a 1 R\n\
             s 1 -> r 0 L\n\
             s 0 -> a 0 R\n\
             s _ -> a _ R\n",
        )
        .unwrap();
        let c = start_configuration(&nd, &w(&nd, "1")).unwrap();
        let succ = successors(&nd, &c);
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[0].0, 0);
        assert_eq!(succ[1].0, 1);
    }

    #[test]
    fn enumerate_counts_and_truncates() {
        let m = m_acc();
        let comps: Vec<_> = enumerate_computations(&m, &w(&m, "1"), 5).unwrap().collect();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].steps(), 1);
        assert!(comps[0].halted);

        let l = m_loop();
        let comps: Vec<_> = enumerate_computations(&l, &[], 3).unwrap().collect();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].steps(), 3);
        assert!(!comps[0].halted);

        let s = m_sweep();
        let comps: Vec<_> = enumerate_computations(&s, &w(&s, "11"), 10).unwrap().collect();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].steps(), 3);
        assert!(comps[0].halted);
    }

    #[test]
    fn check_input_matches_hand_traces() {
        let s = m_sweep();
        assert!(check_input(&s, &w(&s, "11"), 1, 1).unwrap().is_none());
        let v = check_input(&s, &w(&s, "11"), 1, 0).unwrap().unwrap();
        assert_eq!(v.steps, 3);
        assert_eq!(v.bound, 2);

        let a = m_acc();
        assert!(check_input(&a, &[], 0, 1).unwrap().is_none());
    }

    #[test]
    fn brute_force_finds_first_violation() {
        let a = m_acc();
        assert!(brute_force_runs_in_time(&a, 2, 1, 4).unwrap().is_none());

        let l = m_loop();
        let v = brute_force_runs_in_time(&l, 2, 1, 0).unwrap().unwrap();
        assert!(v.input.is_empty());
        assert_eq!(v.steps, 2);
        assert_eq!(v.bound, 1);

        let d = m_double();
        let v = brute_force_runs_in_time(&d, 1, 3, 4).unwrap().unwrap();
        assert_eq!(v.input.len(), 2);
        assert_eq!(v.steps, 6);
        assert_eq!(v.bound, 5);
    }

    #[test]
    fn crossing_sequences_match_hand_traces() {
        let s = m_sweep();
        let comp = enumerate_computations(&s, &w(&s, "11"), 10)
            .unwrap()
            .next()
            .unwrap();
        let c1 = crossing_sequence(&s, &comp, 1, 3).unwrap();
        assert_eq!(c1.len(), 1);
        assert_eq!(s.state_name(c1.states[0]), "s");
        let c2 = crossing_sequence(&s, &comp, 2, 3).unwrap();
        let names: Vec<_> = c2.states.iter().map(|&q| s.state_name(q)).collect();
        assert_eq!(names, ["s", "a"]);
        let c0 = crossing_sequence(&s, &comp, 1, 0).unwrap();
        assert!(c0.is_empty());
        assert!(matches!(
            crossing_sequence(&s, &comp, 1, 99),
            Err(SimError::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn replay_reconstructs_final_configuration() {
        let d = m_double();
        for comp in enumerate_computations(&d, &w(&d, "101"), 20).unwrap() {
            let end = replay(&d, &comp.input, &comp.choices).unwrap();
            assert_eq!(end, comp.final_config);
        }
    }

    #[test]
    fn composition_runs_factors_in_sequence() {
        use crate::machine::compose;
        // three sweep steps, then one accepting step of the second factor
        let c = compose(&m_sweep(), &m_acc()).unwrap();
        let input = c.parse_input_word("11").unwrap();
        let comps: Vec<_> = enumerate_computations(&c, &input, 20).unwrap().collect();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].steps(), 4);
        assert!(comps[0].halted);
        assert_eq!(comps[0].final_config.state, c.accept_id());

        // an immediate acceptor on the left adds exactly one initial step
        let c = compose(&m_acc(), &m_sweep()).unwrap();
        for text in ["1", "01", "110"] {
            let w = c.parse_input_word(text).unwrap();
            let base = enumerate_computations(&m_sweep(), &w, 30)
                .unwrap()
                .next()
                .unwrap();
            let shifted = enumerate_computations(&c, &w, 30).unwrap().next().unwrap();
            // the sweep from cell 1 reads one fewer input cell, so totals agree
            assert_eq!(shifted.steps(), base.steps());
            assert!(shifted.halted);
            assert_eq!(shifted.final_config.state, c.accept_id());
        }
    }

    #[test]
    fn brute_force_agrees_with_check_input() {
        let d = m_double();
        let v = brute_force_runs_in_time(&d, 1, 3, 4).unwrap().unwrap();
        assert!(check_input(&d, &v.input, 1, 3).unwrap().is_some());
        // every input before the reported one passes individually
        for n in 0..v.input.len() {
            for w in words_of_length(&d, n) {
                assert!(check_input(&d, &w, 1, 3).unwrap().is_none());
            }
        }
    }

    #[test]
    fn non_halting_configurations_always_have_successors() {
        for m in [m_acc(), m_sweep(), m_loop(), m_double()] {
            let w = m.parse_input_word("10").unwrap();
            for comp in enumerate_computations(&m, &w, 12).unwrap() {
                let mut cfg = start_configuration(&m, &w).unwrap();
                for &ix in &comp.choices {
                    assert!(!successors(&m, &cfg).is_empty());
                    let r = m.rule_ids(ix);
                    if r.write == m.blank_id() {
                        cfg.tape.remove(&cfg.head);
                    } else {
                        cfg.tape.insert(cfg.head, r.write);
                    }
                    cfg.head += r.dir.offset();
                    cfg.state = r.to;
                    cfg.step += 1;
                }
                if comp.halted {
                    assert!(successors(&m, &cfg).is_empty());
                }
            }
        }
    }

    #[test]
    fn crossing_identity_on_fixtures() {
        for (m, input) in [
            (m_acc(), "10"),
            (m_sweep(), "111"),
            (m_double(), "0110"),
        ] {
            let word = w(&m, input);
            for comp in enumerate_computations(&m, &word, 40).unwrap() {
                assert!(comp.halted);
                let map = crossing_sequences_upto(&m, &comp.input, &comp.choices, comp.steps())
                    .unwrap();
                let total: u64 = map.values().map(|v| v.len() as u64).sum();
                assert_eq!(total, comp.steps());
            }
        }
    }
}
