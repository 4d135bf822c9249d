//! Shared fixtures and a seeded machine generator for the integration suites.

use std::path::PathBuf;

use tmtime::machine::{parse_machine, validate, Direction, OneTapeNTM, RawMachine, SymId};
use tmtime::rng::SplitMix64;

/// Loads one of the example machines shipped in `machines/`.
pub fn fixture(name: &str) -> OneTapeNTM {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "machines", name]
        .iter()
        .collect();
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read fixture {}: {e}", path.display()));
    parse_machine(&text).expect("fixture machine is valid")
}

pub fn word(m: &OneTapeNTM, s: &str) -> Vec<SymId> {
    m.parse_input_word(s).unwrap()
}

#[derive(Clone, Copy)]
pub struct GenCfg {
    pub q: u16,
    pub unary: bool,
    /// Chance (num/den) that a transition cell holds a second rule.
    pub branch: (u64, u64),
    /// Chance (num/den) that a rule targets a halting state.
    pub halt: (u64, u64),
}

impl Default for GenCfg {
    fn default() -> Self {
        GenCfg {
            q: 4,
            unary: false,
            branch: (1, 8),
            halt: (1, 3),
        }
    }
}

/// Generates a random valid machine: total, duplicate-free, with the given
/// state count and a halting bias that keeps computation trees small.
pub fn gen_machine(rng: &mut SplitMix64, cfg: &GenCfg) -> OneTapeNTM {
    assert!(cfg.q >= 3);
    let sigma: Vec<String> = if cfg.unary {
        vec!["1".into()]
    } else {
        vec!["0".into(), "1".into()]
    };
    let mut tape = sigma.clone();
    tape.push("_".into());
    let mut nonhalt: Vec<String> = vec!["s".into()];
    for i in 1..=(cfg.q - 3) {
        nonhalt.push(format!("t{i}"));
    }
    let mut rules = Vec::new();
    for st in &nonhalt {
        for sym in &tape {
            let count = if rng.chance(cfg.branch.0, cfg.branch.1) {
                2
            } else {
                1
            };
            let mut cell: Vec<(String, String, Direction)> = Vec::new();
            let mut guard = 0;
            while cell.len() < count && guard < 16 {
                guard += 1;
                let to = if rng.chance(cfg.halt.0, cfg.halt.1) {
                    if rng.chance(1, 2) { "acc".to_string() } else { "rej".to_string() }
                } else {
                    nonhalt[rng.below(nonhalt.len() as u64) as usize].clone()
                };
                let write = tape[rng.below(tape.len() as u64) as usize].clone();
                let dir = if rng.chance(1, 2) {
                    Direction::Left
                } else {
                    Direction::Right
                };
                if !cell.contains(&(to.clone(), write.clone(), dir)) {
                    cell.push((to, write, dir));
                }
            }
            for (to, write, dir) in cell {
                rules.push((st.clone(), sym.clone(), to, write, dir));
            }
        }
    }
    validate(&RawMachine {
        input_alphabet: sigma,
        tape_alphabet: tape,
        blank: "_".into(),
        start: "s".into(),
        accept: "acc".into(),
        reject: "rej".into(),
        states: Vec::new(),
        rules,
    })
    .expect("generated machine is valid by construction")
}

/// A random input word over the machine's input alphabet.
pub fn gen_word(rng: &mut SplitMix64, m: &OneTapeNTM, max_len: u64) -> Vec<SymId> {
    let len = rng.range_inclusive(0, max_len);
    (0..len)
        .map(|_| m.input_ids()[rng.below(m.input_ids().len() as u64) as usize])
        .collect()
}

/// Every deterministic unary 3-state machine: one rule per (state, symbol)
/// cell for the single working state.
pub fn all_unary_deterministic_q3() -> Vec<OneTapeNTM> {
    let states = ["s", "acc", "rej"];
    let tape = ["1", "_"];
    let mut out = Vec::new();
    let options: Vec<(&str, &str, Direction)> = states
        .iter()
        .flat_map(|&to| {
            tape.iter().flat_map(move |&w| {
                [Direction::Left, Direction::Right]
                    .into_iter()
                    .map(move |d| (to, w, d))
            })
        })
        .collect();
    for on_one in &options {
        for on_blank in &options {
            let rules = vec![
                (
                    "s".to_string(),
                    "1".to_string(),
                    on_one.0.to_string(),
                    on_one.1.to_string(),
                    on_one.2,
                ),
                (
                    "s".to_string(),
                    "_".to_string(),
                    on_blank.0.to_string(),
                    on_blank.1.to_string(),
                    on_blank.2,
                ),
            ];
            out.push(
                validate(&RawMachine {
                    input_alphabet: vec!["1".into()],
                    tape_alphabet: vec!["1".into(), "_".into()],
                    blank: "_".into(),
                    start: "s".into(),
                    accept: "acc".into(),
                    reject: "rej".into(),
                    states: Vec::new(),
                    rules,
                })
                .unwrap(),
            );
        }
    }
    assert_eq!(out.len(), 144);
    out
}
