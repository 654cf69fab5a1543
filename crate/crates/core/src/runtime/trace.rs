use super::config::Configuration;
use super::intf;
use super::sched::{Outcome, RunResult, Step};
use crate::ast::{ClassTable, Name};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ObjectSummary {
    pub id: String,
    pub class: Name,
    pub idle: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub id: String,
    pub intf: Vec<Name>,
    pub exports: Vec<(String, Name)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceFinal {
    pub outcome: Outcome,
    pub steps: usize,
    pub objects: Vec<ObjectSummary>,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep<'a> {
    #[serde(flatten)]
    pub step: &'a Step,
}

#[derive(Serialize)]
struct Trace<'a> {
    steps: Vec<TraceStep<'a>>,
    #[serde(rename = "final")]
    last: TraceFinal,
}

pub fn group_summaries(table: &ClassTable, cfg: &Configuration) -> Vec<GroupSummary> {
    cfg.groups
        .iter()
        .map(|(g, state)| GroupSummary {
            id: g.to_string(),
            intf: intf(table, &state.exports).into_iter().collect(),
            exports: state
                .exports
                .iter()
                .map(|(v, i)| (v.to_string(), i.clone()))
                .collect(),
        })
        .collect()
}

pub fn final_record(table: &ClassTable, result: &RunResult) -> TraceFinal {
    TraceFinal {
        outcome: result.outcome.clone(),
        steps: result.steps.len(),
        objects: result
            .last
            .objects
            .iter()
            .map(|(o, obj)| ObjectSummary {
                id: o.to_string(),
                class: obj.class.clone(),
                idle: obj.is_idle(),
            })
            .collect(),
        groups: group_summaries(table, &result.last),
    }
}

/// The JSON trace of a run: every step, then a final record.
pub fn trace_json(table: &ClassTable, result: &RunResult) -> String {
    let trace = Trace {
        steps: result.steps.iter().map(|step| TraceStep { step }).collect(),
        last: final_record(table, result),
    };
    let mut out = serde_json::to_string_pretty(&trace).expect("trace serializes");
    out.push('\n');
    out
}
