//! Wire representations of computations, part computations, witnesses and
//! decision reports. Machine-internal ids are rendered as names; big integers
//! are rendered as decimal strings so no reader loses precision.

use serde::{Deserialize, Serialize};

use crate::decide::{CrsEntry, DecisionReport, Expansion, PartWitness, Verdict, Witness};
use crate::machine::OneTapeNTM;
use crate::parts::{PartComputation, PartMove, PartTime};
use crate::sim::Computation;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ComputationJson {
    pub input: String,
    pub choices: Vec<u32>,
    pub steps: u64,
    pub halted: bool,
    pub final_state: String,
}

pub fn computation_json(m: &OneTapeNTM, comp: &Computation) -> ComputationJson {
    ComputationJson {
        input: m.word_string(&comp.input),
        choices: comp.choices.clone(),
        steps: comp.steps(),
        halted: comp.halted,
        final_state: m.state_name(comp.final_config.state).to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PartComputationJson {
    pub part: String,
    pub crs: Vec<String>,
    pub moves: Vec<PartMove>,
    pub internal_crossings: Vec<u64>,
    pub length: u64,
}

pub fn part_computation_json(m: &OneTapeNTM, pc: &PartComputation) -> PartComputationJson {
    PartComputationJson {
        part: m.word_string(&pc.part),
        crs: pc
            .crs
            .states
            .iter()
            .map(|&q| m.state_name(q).to_string())
            .collect(),
        moves: pc.moves.clone(),
        internal_crossings: pc.internal_crossings.clone(),
        length: pc.length,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CrsEntryJson {
    pub crs: Vec<String>,
    pub left: String,
    pub right: String,
    pub boundary: u64,
    pub t0: u64,
    pub choices: Vec<u32>,
}

pub fn crs_entry_json(m: &OneTapeNTM, e: &CrsEntry) -> CrsEntryJson {
    CrsEntryJson {
        crs: e
            .crs
            .states
            .iter()
            .map(|&q| m.state_name(q).to_string())
            .collect(),
        left: m.word_string(&e.left),
        right: m.word_string(&e.right),
        boundary: e.boundary() as u64,
        t0: e.t0,
        choices: e.comp.choices.clone(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExpansionJson {
    pub input: String,
    pub exponent: u64,
    pub steps: u64,
    pub bound: u64,
}

fn expansion_json(m: &OneTapeNTM, e: &Expansion) -> ExpansionJson {
    ExpansionJson {
        input: m.word_string(&e.input),
        exponent: e.exponent,
        steps: e.steps,
        bound: e.bound,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessJson {
    Direct {
        input: String,
        steps: u64,
        bound: u64,
        choices: Vec<u32>,
        final_state: String,
    },
    Part {
        crs: Vec<String>,
        part: String,
        part_length: u64,
        part_bound: u64,
        part_time: String,
        provenance: CrsEntryJson,
        moves: Vec<PartMove>,
        expanded: Option<ExpansionJson>,
    },
}

pub fn witness_json(m: &OneTapeNTM, c: u64, w: &Witness) -> WitnessJson {
    match w {
        Witness::Direct(v) => WitnessJson::Direct {
            input: m.word_string(&v.input),
            steps: v.steps,
            bound: v.bound,
            choices: v.computation.choices.clone(),
            final_state: m.state_name(v.computation.final_config.state).to_string(),
        },
        Witness::Part(pw) => part_witness_json(m, c, pw),
    }
}

fn part_witness_json(m: &OneTapeNTM, c: u64, pw: &PartWitness) -> WitnessJson {
    WitnessJson::Part {
        crs: pw
            .entry
            .crs
            .states
            .iter()
            .map(|&q| m.state_name(q).to_string())
            .collect(),
        part: m.word_string(&pw.part_word),
        part_length: pw.part_comp.length,
        part_bound: c * pw.part_word.len() as u64,
        part_time: match pw.part_time {
            PartTime::Undefined => "-1".to_string(),
            PartTime::Finite(v) => v.to_string(),
            PartTime::Unbounded => "inf".to_string(),
        },
        provenance: crs_entry_json(m, &pw.entry),
        moves: pw.part_comp.moves.clone(),
        expanded: pw.expansion.as_ref().map(|e| expansion_json(m, e)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StatsJson {
    pub inputs: u64,
    pub computations: u64,
    pub crs_entries: u64,
    pub parts: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DecisionReportJson {
    pub verdict: String,
    pub exact: bool,
    #[serde(rename = "C")]
    pub c: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub ell: String,
    pub r: String,
    pub ell_eff: u64,
    pub r_eff: u64,
    pub witness: Option<WitnessJson>,
    pub stats: StatsJson,
}

pub fn report_json(m: &OneTapeNTM, rep: &DecisionReport) -> DecisionReportJson {
    DecisionReportJson {
        verdict: match rep.verdict {
            Verdict::Runs => "runs".to_string(),
            Verdict::Violates => "violates".to_string(),
        },
        exact: rep.exact,
        c: rep.bounds.c,
        d: rep.bounds.d,
        ell: rep.bounds.ell.to_string(),
        r: rep.bounds.r.to_string(),
        ell_eff: rep.bounds.ell_eff,
        r_eff: rep.bounds.r_eff,
        witness: rep
            .witness
            .as_ref()
            .map(|w| witness_json(m, rep.bounds.c, w)),
        stats: StatsJson {
            inputs: rep.stats.inputs,
            computations: rep.stats.computations,
            crs_entries: rep.stats.crs_entries,
            parts: rep.stats.parts,
        },
    }
}
