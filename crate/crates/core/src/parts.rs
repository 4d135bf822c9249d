//! Computations of a machine on a tape part with a prescribed ending crossing
//! sequence, their length metric, and the maximum part time.
//!
//! A part computation runs on a word of length n written on an isolated tape
//! segment. Interaction with the outside world is prescribed by a single
//! crossing sequence `crs` imposed at both ends: leaving the segment consumes
//! the next entry of the matching remainder (the state carried out must agree
//! with it) and re-entering consumes the one after (the state carried back
//! in). The computation completes when both remainders are spent by a final
//! exit. Its length is the number of crossings of the n-1 interior boundaries
//! plus `|crs|`, which equals the number of steps the surrounding full
//! computation spends with its head on the segment.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{Direction, OneTapeNTM, StateId, SymId};
use crate::sim::{crossing_sequences_upto, replay, Computation, CrossingSequence, SimError};

/// Signals that a metered search ran out of its node budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartError {
    #[error("part word is empty")]
    EmptyPart,
    #[error("ending crossing sequence is empty")]
    EmptyCrs,
    #[error("crossing sequences at the two boundaries differ")]
    BoundaryMismatch,
    #[error("computation is not halted")]
    NotHalted,
    #[error("computation input does not equal the given decomposition")]
    InputMismatch,
    #[error("invalid part move at index {0}: {1}")]
    BadMove(usize, String),
    #[error("simulation error: {0}")]
    Sim(#[from] SimError),
}

/// A 5-tuple configuration of a computation on a part. The remainders are
/// suffixes of the imposed crossing sequence, stored as start offsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartConfiguration {
    /// Offset into `crs` of the left remainder.
    pub left_pos: usize,
    /// Offset into `crs` of the right remainder.
    pub right_pos: usize,
    /// Current segment content, length n.
    pub content: Vec<SymId>,
    /// Head position, `0..n` (meaningless when `is_ending`).
    pub head: usize,
    /// Current state (meaningless when `is_ending`).
    pub state: StateId,
    pub is_ending: bool,
}

impl PartConfiguration {
    fn ending(crs_len: usize) -> Self {
        PartConfiguration {
            left_pos: crs_len,
            right_pos: crs_len,
            content: Vec::new(),
            head: 0,
            state: 0,
            is_ending: true,
        }
    }
}

/// One move of a part computation, recording the rule that drives it. An exit
/// move covers the excursion outside the segment: the re-entry state is
/// dictated by the crossing sequence, so the rule of the exiting step is
/// enough to replay it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartMove {
    Interior { rule: u32 },
    ExitLeft { rule: u32 },
    ExitRight { rule: u32 },
    End { rule: u32 },
}

impl PartMove {
    pub fn rule(self) -> u32 {
        match self {
            PartMove::Interior { rule }
            | PartMove::ExitLeft { rule }
            | PartMove::ExitRight { rule }
            | PartMove::End { rule } => rule,
        }
    }
}

/// A completed computation on a part, with per-boundary crossing counts for
/// the interior boundaries `1..n-1` and the length metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartComputation {
    pub part: Vec<SymId>,
    pub crs: CrossingSequence,
    pub moves: Vec<PartMove>,
    /// `internal_crossings[i]` counts crossings of interior boundary `i+1`.
    pub internal_crossings: Vec<u64>,
    /// Sum of interior crossing counts plus `|crs|`.
    pub length: u64,
}

/// The maximum part time: undefined (-1) when no valid computation exists,
/// unbounded when a cycle lies on some completing path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartTime {
    Undefined,
    Finite(u64),
    Unbounded,
}

impl PartTime {
    pub fn exceeds(self, bound: u64) -> bool {
        match self {
            PartTime::Undefined => false,
            PartTime::Finite(v) => v > bound,
            PartTime::Unbounded => true,
        }
    }
}

impl std::fmt::Display for PartTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartTime::Undefined => f.write_str("-1"),
            PartTime::Finite(v) => write!(f, "{v}"),
            PartTime::Unbounded => f.write_str("inf"),
        }
    }
}

/// Starting configuration on part `w` with ending crossing sequence `crs`:
/// the head has just crossed into cell 0 in state `crs[0]`, so the left
/// remainder starts one entry in and the right remainder is all of `crs`.
pub fn part_start(w: &[SymId], crs: &CrossingSequence) -> Result<PartConfiguration, PartError> {
    if w.is_empty() {
        return Err(PartError::EmptyPart);
    }
    if crs.is_empty() {
        return Err(PartError::EmptyCrs);
    }
    Ok(PartConfiguration {
        left_pos: 1,
        right_pos: 0,
        content: w.to_vec(),
        head: 0,
        state: crs.states[0],
        is_ending: false,
    })
}

/// All successors of a part configuration, in fixed order: interior moves by
/// rule declaration order, then left exit-and-reenter pairs, then right pairs,
/// then the ending transition. At most one ending successor is emitted.
pub fn part_successors(
    m: &OneTapeNTM,
    crs: &CrossingSequence,
    pc: &PartConfiguration,
) -> Vec<(PartMove, PartConfiguration)> {
    if pc.is_ending || m.is_halting(pc.state) {
        return Vec::new();
    }
    let n = pc.content.len();
    let read = pc.content[pc.head];
    let rules = m.rules_for(pc.state, read);
    let seq = &crs.states;
    let mut out = Vec::new();

    // interior moves keep the head inside the segment
    for &ix in rules {
        let r = m.rule_ids(ix);
        let stays = match r.dir {
            Direction::Left => pc.head > 0,
            Direction::Right => pc.head + 1 < n,
        };
        if stays {
            let mut next = pc.clone();
            next.content[pc.head] = r.write;
            next.head = match r.dir {
                Direction::Left => pc.head - 1,
                Direction::Right => pc.head + 1,
            };
            next.state = r.to;
            out.push((PartMove::Interior { rule: ix }, next));
        }
    }
    // exit left, re-enter in the state after next
    if pc.head == 0 && pc.left_pos + 2 <= seq.len() {
        for &ix in rules {
            let r = m.rule_ids(ix);
            if r.dir == Direction::Left && r.to == seq[pc.left_pos] {
                let mut next = pc.clone();
                next.content[0] = r.write;
                next.state = seq[pc.left_pos + 1];
                next.left_pos += 2;
                out.push((PartMove::ExitLeft { rule: ix }, next));
            }
        }
    }
    // exit right, symmetric
    if pc.head == n - 1 && pc.right_pos + 2 <= seq.len() {
        for &ix in rules {
            let r = m.rule_ids(ix);
            if r.dir == Direction::Right && r.to == seq[pc.right_pos] {
                let mut next = pc.clone();
                next.content[n - 1] = r.write;
                next.state = seq[pc.right_pos + 1];
                next.right_pos += 2;
                out.push((PartMove::ExitRight { rule: ix }, next));
            }
        }
    }
    // ending: the last remainder entry is consumed by a final exit
    let left_rem = seq.len() - pc.left_pos;
    let right_rem = seq.len() - pc.right_pos;
    let ending_rule = if pc.head == 0 && left_rem == 1 && right_rem == 0 {
        rules
            .iter()
            .copied()
            .find(|&ix| {
                let r = m.rule_ids(ix);
                r.dir == Direction::Left && r.to == seq[pc.left_pos]
            })
    } else if pc.head == n - 1 && right_rem == 1 && left_rem == 0 {
        rules
            .iter()
            .copied()
            .find(|&ix| {
                let r = m.rule_ids(ix);
                r.dir == Direction::Right && r.to == seq[pc.right_pos]
            })
    } else {
        None
    };
    if let Some(rule) = ending_rule {
        out.push((PartMove::End { rule }, PartConfiguration::ending(seq.len())));
    }
    out
}

fn interior_boundary(move_dir: Direction, head: usize) -> usize {
    match move_dir {
        Direction::Right => head + 1,
        Direction::Left => head,
    }
}

struct PartGraph {
    nodes: Vec<PartConfiguration>,
    /// (target node, move)
    edges: Vec<Vec<(usize, PartMove)>>,
    ending: Option<usize>,
}

fn explore(
    m: &OneTapeNTM,
    w: &[SymId],
    crs: &CrossingSequence,
    mut budget: Option<&mut u64>,
) -> Result<PartGraph, BudgetExhausted> {
    let start = match part_start(w, crs) {
        Ok(s) => s,
        Err(_) => {
            return Ok(PartGraph {
                nodes: Vec::new(),
                edges: Vec::new(),
                ending: None,
            })
        }
    };
    let mut nodes = vec![start];
    let mut index: HashMap<PartConfiguration, usize> = HashMap::new();
    index.insert(nodes[0].clone(), 0);
    let mut edges: Vec<Vec<(usize, PartMove)>> = vec![Vec::new()];
    let mut ending = None;
    let mut queue = VecDeque::from([0usize]);
    while let Some(at) = queue.pop_front() {
        if let Some(b) = budget.as_deref_mut() {
            if *b == 0 {
                return Err(BudgetExhausted);
            }
            *b -= 1;
        }
        let succ = part_successors(m, crs, &nodes[at]);
        for (mv, next) in succ {
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = nodes.len();
                    index.insert(next.clone(), id);
                    if next.is_ending {
                        ending = Some(id);
                    }
                    nodes.push(next);
                    edges.push(Vec::new());
                    queue.push_back(id);
                    id
                }
            };
            edges[at].push((id, mv));
        }
    }
    Ok(PartGraph {
        nodes,
        edges,
        ending,
    })
}

/// The maximum length over completing computations on part `w` with ending
/// crossing sequence `crs`. Undefined when the ending configuration is
/// unreachable (or `crs` is empty or infinite); unbounded when a cycle lies on
/// a completing path, since every cycle consists of interior moves only.
pub fn part_time(m: &OneTapeNTM, w: &[SymId], crs: &CrossingSequence) -> PartTime {
    part_time_budgeted(m, w, crs, None).expect("unbudgeted search cannot run out")
}

/// `part_time` with an optional node budget.
pub fn part_time_budgeted(
    m: &OneTapeNTM,
    w: &[SymId],
    crs: &CrossingSequence,
    budget: Option<&mut u64>,
) -> Result<PartTime, BudgetExhausted> {
    if w.is_empty() || crs.is_empty() || !crs.finite {
        return Ok(PartTime::Undefined);
    }
    let g = explore(m, w, crs, budget)?;
    let end = match g.ending {
        Some(e) => e,
        None => return Ok(PartTime::Undefined),
    };
    // co-reachability to the ending node
    let mut redges = vec![Vec::new(); g.nodes.len()];
    for (u, outs) in g.edges.iter().enumerate() {
        for &(v, _) in outs {
            redges[v].push(u);
        }
    }
    let mut co = vec![false; g.nodes.len()];
    co[end] = true;
    let mut q = VecDeque::from([end]);
    while let Some(v) = q.pop_front() {
        for &u in &redges[v] {
            if !co[u] {
                co[u] = true;
                q.push_back(u);
            }
        }
    }
    if !co[0] {
        return Ok(PartTime::Undefined);
    }
    // cycle detection on the useful subgraph (reachable and co-reachable);
    // exploration already restricted nodes to the reachable set
    let mut color = vec![0u8; g.nodes.len()]; // 0 white, 1 gray, 2 black
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    color[0] = 1;
    while let Some(&mut (v, ref mut i)) = stack.last_mut() {
        let outs: Vec<usize> = g.edges[v]
            .iter()
            .map(|&(t, _)| t)
            .filter(|&t| co[t])
            .collect();
        if *i < outs.len() {
            let t = outs[*i];
            *i += 1;
            match color[t] {
                0 => {
                    color[t] = 1;
                    stack.push((t, 0));
                }
                1 => return Ok(PartTime::Unbounded),
                _ => {}
            }
        } else {
            color[v] = 2;
            stack.pop();
        }
    }
    // longest path on the acyclic useful subgraph; interior edges weigh 1
    let useful: Vec<usize> = (0..g.nodes.len()).filter(|&v| co[v]).collect();
    let mut indeg: HashMap<usize, usize> = useful.iter().map(|&v| (v, 0)).collect();
    for &u in &useful {
        for &(v, _) in &g.edges[u] {
            if co[v] {
                *indeg.get_mut(&v).unwrap() += 1;
            }
        }
    }
    // only nodes reachable from the start matter; the start is node 0
    let mut dist: HashMap<usize, Option<u64>> = useful.iter().map(|&v| (v, None)).collect();
    dist.insert(0, Some(0));
    let mut ready: VecDeque<usize> = useful
        .iter()
        .copied()
        .filter(|v| indeg[v] == 0)
        .collect();
    while let Some(u) = ready.pop_front() {
        for &(v, mv) in &g.edges[u] {
            if !co[v] {
                continue;
            }
            let w_edge = matches!(mv, PartMove::Interior { .. }) as u64;
            if let Some(du) = dist[&u] {
                let cand = du + w_edge;
                let dv = dist.get_mut(&v).unwrap();
                if dv.is_none() || dv.unwrap() < cand {
                    *dv = Some(cand);
                }
            }
            let e = indeg.get_mut(&v).unwrap();
            *e -= 1;
            if *e == 0 {
                ready.push_back(v);
            }
        }
    }
    let interior = dist[&end].expect("ending is reachable from the start");
    Ok(PartTime::Finite(interior + crs.len() as u64))
}

/// True exactly when the part time exceeds `bound`, decided by a
/// length-bounded search rather than a full longest-path computation: the
/// search tracks the interior-move count saturated at the value needed for
/// length `bound + 1`, so cycles (unbounded part time) are handled correctly.
pub fn part_time_exceeds(m: &OneTapeNTM, w: &[SymId], crs: &CrossingSequence, bound: u64) -> bool {
    let mut budget = u64::MAX;
    find_part_computation_exceeding(m, w, crs, bound, &mut budget)
        .map(|o| o.is_some())
        .unwrap_or(false)
}

/// Searches for a completing part computation of length at least `bound + 1`
/// and reconstructs it. `budget` meters node expansions; exhaustion is `Err`.
pub fn find_part_computation_exceeding(
    m: &OneTapeNTM,
    w: &[SymId],
    crs: &CrossingSequence,
    bound: u64,
    budget: &mut u64,
) -> Result<Option<PartComputation>, BudgetExhausted> {
    if w.is_empty() || crs.is_empty() || !crs.finite {
        return Ok(None);
    }
    let start = match part_start(w, crs) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    // interior moves needed so that interior + |crs| > bound
    let cap = (bound + 1).saturating_sub(crs.len() as u64);

    type Key = (usize, u64); // (node index, saturated interior count)
    let mut nodes: Vec<PartConfiguration> = vec![start];
    let mut node_ix: HashMap<PartConfiguration, usize> = HashMap::new();
    node_ix.insert(nodes[0].clone(), 0);
    let mut parent: HashMap<Key, (Key, PartMove)> = HashMap::new();
    let mut queue: VecDeque<Key> = VecDeque::from([(0usize, 0u64)]);
    let mut seen: HashMap<Key, ()> = HashMap::new();
    seen.insert((0, 0), ());

    let mut goal: Option<Key> = None;
    'bfs: while let Some(key) = queue.pop_front() {
        if *budget == 0 {
            return Err(BudgetExhausted);
        }
        *budget -= 1;
        let (at, cnt) = key;
        let succ = part_successors(m, crs, &nodes[at]);
        for (mv, next) in succ {
            let cnt2 = match mv {
                PartMove::Interior { .. } => (cnt + 1).min(cap),
                _ => cnt,
            };
            let id = match node_ix.get(&next) {
                Some(&id) => id,
                None => {
                    let id = nodes.len();
                    node_ix.insert(next.clone(), id);
                    nodes.push(next.clone());
                    id
                }
            };
            let k2 = (id, cnt2);
            if seen.contains_key(&k2) {
                continue;
            }
            seen.insert(k2, ());
            parent.insert(k2, (key, mv));
            if next.is_ending && cnt2 >= cap {
                goal = Some(k2);
                break 'bfs;
            }
            queue.push_back(k2);
        }
    }
    let goal = match goal {
        Some(g) => g,
        None => return Ok(None),
    };
    // reconstruct the move chain
    let mut chain = Vec::new();
    let mut cur = goal;
    while let Some(&(prev, mv)) = parent.get(&cur) {
        chain.push(mv);
        cur = prev;
    }
    chain.reverse();
    Ok(Some(assemble_part_computation(m, w, crs, chain)))
}

pub(crate) fn assemble_part_computation(
    m: &OneTapeNTM,
    w: &[SymId],
    crs: &CrossingSequence,
    moves: Vec<PartMove>,
) -> PartComputation {
    let n = w.len();
    let mut internal = vec![0u64; n.saturating_sub(1)];
    let mut head = 0usize;
    let mut interior = 0u64;
    for mv in &moves {
        match mv {
            PartMove::Interior { rule } => {
                let r = m.rule_ids(*rule);
                let b = interior_boundary(r.dir, head);
                internal[b - 1] += 1;
                interior += 1;
                head = match r.dir {
                    Direction::Left => head - 1,
                    Direction::Right => head + 1,
                };
            }
            PartMove::ExitLeft { .. } => head = 0,
            PartMove::ExitRight { .. } => head = n - 1,
            PartMove::End { .. } => {}
        }
    }
    PartComputation {
        part: w.to_vec(),
        crs: crs.clone(),
        moves,
        internal_crossings: internal,
        length: interior + crs.len() as u64,
    }
}

/// Replays a part computation move by move against the transition relation and
/// the crossing-sequence discipline, recomputing the length metric. This is a
/// separate code path from the searches, usable as an independent check.
pub fn verify_part_computation(
    m: &OneTapeNTM,
    pc: &PartComputation,
) -> Result<(), PartError> {
    let mut cfg = part_start(&pc.part, &pc.crs)?;
    let n = pc.part.len();
    let seq = &pc.crs.states;
    let mut interior = 0u64;
    let mut internal = vec![0u64; n.saturating_sub(1)];
    let bad = |i: usize, msg: &str| PartError::BadMove(i, msg.into());
    for (i, mv) in pc.moves.iter().enumerate() {
        if cfg.is_ending {
            return Err(bad(i, "move after the ending configuration"));
        }
        let r = m.rule_ids(mv.rule());
        if r.from != cfg.state || r.read != cfg.content[cfg.head] {
            return Err(bad(i, "rule does not apply"));
        }
        match mv {
            PartMove::Interior { .. } => {
                let ok = match r.dir {
                    Direction::Left => cfg.head > 0,
                    Direction::Right => cfg.head + 1 < n,
                };
                if !ok {
                    return Err(bad(i, "interior move leaves the segment"));
                }
                internal[interior_boundary(r.dir, cfg.head) - 1] += 1;
                interior += 1;
                cfg.content[cfg.head] = r.write;
                cfg.head = match r.dir {
                    Direction::Left => cfg.head - 1,
                    Direction::Right => cfg.head + 1,
                };
                cfg.state = r.to;
            }
            PartMove::ExitLeft { .. } => {
                if cfg.head != 0 || r.dir != Direction::Left {
                    return Err(bad(i, "left exit not at the left edge"));
                }
                if cfg.left_pos + 2 > seq.len() || r.to != seq[cfg.left_pos] {
                    return Err(bad(i, "left exit state disagrees with the crossing sequence"));
                }
                cfg.content[0] = r.write;
                cfg.state = seq[cfg.left_pos + 1];
                cfg.left_pos += 2;
            }
            PartMove::ExitRight { .. } => {
                if cfg.head != n - 1 || r.dir != Direction::Right {
                    return Err(bad(i, "right exit not at the right edge"));
                }
                if cfg.right_pos + 2 > seq.len() || r.to != seq[cfg.right_pos] {
                    return Err(bad(i, "right exit state disagrees with the crossing sequence"));
                }
                cfg.content[n - 1] = r.write;
                cfg.state = seq[cfg.right_pos + 1];
                cfg.right_pos += 2;
            }
            PartMove::End { .. } => {
                let left_rem = seq.len() - cfg.left_pos;
                let right_rem = seq.len() - cfg.right_pos;
                let ok = (cfg.head == 0
                    && left_rem == 1
                    && right_rem == 0
                    && r.dir == Direction::Left
                    && r.to == seq[cfg.left_pos])
                    || (cfg.head == n - 1
                        && right_rem == 1
                        && left_rem == 0
                        && r.dir == Direction::Right
                        && r.to == seq[cfg.right_pos]);
                if !ok {
                    return Err(bad(i, "ending conditions not met"));
                }
                cfg = PartConfiguration::ending(seq.len());
            }
        }
    }
    if !cfg.is_ending {
        return Err(PartError::BadMove(
            pc.moves.len(),
            "computation does not reach the ending configuration".into(),
        ));
    }
    if internal != pc.internal_crossings {
        return Err(PartError::BadMove(0, "interior crossing counts disagree".into()));
    }
    if interior + seq.len() as u64 != pc.length {
        return Err(PartError::BadMove(0, "length metric disagrees".into()));
    }
    Ok(())
}

/// Result of splitting a full computation around a segment with equal boundary
/// crossing sequences.
pub(crate) struct SpliceParts {
    pub crs: CrossingSequence,
    pub part_moves: Vec<PartMove>,
    pub kept_choices: Vec<u32>,
}

/// Walks the first `t` steps of `choices` on `input` and splits them around
/// the segment `[seg_start, seg_start + seg_len)`: steps whose head starts on
/// the segment become part moves, the rest become the cut computation.
/// Requires the crossing sequences at the two segment boundaries (after `t`
/// steps) to be equal.
pub(crate) fn splice(
    m: &OneTapeNTM,
    input: &[SymId],
    choices: &[u32],
    t: u64,
    seg_start: usize,
    seg_len: usize,
) -> Result<SpliceParts, PartError> {
    let b1 = seg_start as i64;
    let b2 = (seg_start + seg_len) as i64;
    let all = crossing_sequences_upto(m, input, choices, t)?;
    let empty = Vec::new();
    let left = all.get(&b1).unwrap_or(&empty);
    let right = all.get(&b2).unwrap_or(&empty);
    if left.len() != right.len()
        || left
            .iter()
            .zip(right.iter())
            .any(|((qa, _), (qb, _))| qa != qb)
    {
        return Err(PartError::BoundaryMismatch);
    }
    let crs = CrossingSequence::new(left.iter().map(|&(q, _)| q).collect());

    let seg = b1..b2;
    let mut part_moves = Vec::new();
    let mut kept = Vec::new();
    let mut pending_exit: Option<(bool, u32)> = None; // (left side, rule)
    let mut entered = false;
    crate::sim::replay_trace(m, input, choices, t, |ev| {
        let in_before = seg.contains(&ev.from_head);
        let in_after = seg.contains(&ev.to_head);
        if in_before {
            if in_after {
                part_moves.push(PartMove::Interior { rule: ev.rule });
            } else {
                pending_exit = Some((ev.to_head < b1, ev.rule));
            }
        } else {
            kept.push(ev.rule);
            if in_after {
                if !entered {
                    entered = true;
                } else if let Some((left_side, rule)) = pending_exit.take() {
                    part_moves.push(if left_side {
                        PartMove::ExitLeft { rule }
                    } else {
                        PartMove::ExitRight { rule }
                    });
                }
            }
        }
    })?;
    if let Some((_, rule)) = pending_exit.take() {
        part_moves.push(PartMove::End { rule });
    }
    Ok(SpliceParts {
        crs,
        part_moves,
        kept_choices: kept,
    })
}

/// Splits a halted computation on `w1 · w · w2` whose crossing sequences at
/// the two boundaries of `w` agree: extracts the induced part computation on
/// `w` and the induced computation on `w1 · w2`, replays the latter, and
/// returns `(len_full, len_part, len_cut)` with the identity
/// `len_cut = len_full - len_part` checked.
pub fn cut_paste_check(
    m: &OneTapeNTM,
    w1: &[SymId],
    w: &[SymId],
    w2: &[SymId],
    comp: &Computation,
) -> Result<(u64, u64, u64), PartError> {
    if w1.is_empty() || w.is_empty() {
        return Err(PartError::EmptyPart);
    }
    if !comp.halted {
        return Err(PartError::NotHalted);
    }
    let full: Vec<SymId> = w1.iter().chain(w.iter()).chain(w2.iter()).copied().collect();
    if comp.input != full {
        return Err(PartError::InputMismatch);
    }
    let len_full = comp.steps();
    let parts = splice(m, &comp.input, &comp.choices, len_full, w1.len(), w.len())?;

    let len_part = if parts.crs.is_empty() {
        0
    } else {
        let pc = assemble_part_computation(m, w, &parts.crs, parts.part_moves);
        verify_part_computation(m, &pc)?;
        pc.length
    };

    let cut_input: Vec<SymId> = w1.iter().chain(w2.iter()).copied().collect();
    let end = replay(m, &cut_input, &parts.kept_choices)?;
    if !m.is_halting(end.state) {
        return Err(PartError::NotHalted);
    }
    let len_cut = parts.kept_choices.len() as u64;
    assert_eq!(
        len_cut,
        len_full - len_part,
        "splice identity violated; this is a bug"
    );
    Ok((len_full, len_part, len_cut))
}
