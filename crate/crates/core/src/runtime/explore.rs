use super::config::Configuration;
use super::digest::fingerprint;
use super::sched::halted;
use super::step::{apply, RuleName, Transition};
use super::initial_configuration;
use crate::ast::ClassTable;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub depth: usize,
    pub state_bound: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self {
            depth: 500,
            state_bound: 1_000_000,
        }
    }
}

/// A property failure reported by a monitor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub rule: String,
    pub location: String,
    pub message: String,
}

/// Per-state and per-transition checks run during exploration.
pub trait Monitor {
    fn state(&mut self, _table: &ClassTable, _cfg: &Configuration) -> Vec<Finding> {
        Vec::new()
    }

    fn step(
        &mut self,
        _table: &ClassTable,
        _before: &Configuration,
        _t: &Transition,
        _after: &Configuration,
    ) -> Vec<Finding> {
        Vec::new()
    }
}

pub struct NoMonitor;

impl Monitor for NoMonitor {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    #[serde(flatten)]
    pub finding: Finding,
    /// Transitions from the initial state to the offending state or step.
    pub path: Vec<Transition>,
}

#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExploreReport {
    pub states: usize,
    pub transitions: usize,
    /// Final states by outcome label.
    pub outcomes: BTreeMap<&'static str, usize>,
    pub max_depth: usize,
    pub truncated: bool,
    pub rule_coverage: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
}

impl ExploreReport {
    pub fn count(&self, outcome: &str) -> usize {
        self.outcomes.get(outcome).copied().unwrap_or(0)
    }

    pub fn uncovered(&self) -> Vec<RuleName> {
        RuleName::ALL
            .into_iter()
            .filter(|r| self.rule_coverage.get(r.label()).copied().unwrap_or(0) == 0)
            .collect()
    }
}

struct Node {
    parent: Option<usize>,
    via: Option<Transition>,
}

fn path_to(nodes: &[Node], mut id: usize) -> Vec<Transition> {
    let mut path = Vec::new();
    while let Some(t) = &nodes[id].via {
        path.push(t.clone());
        id = nodes[id].parent.expect("non-root node has a parent");
    }
    path.reverse();
    path
}

/// Breadth-first enumeration of every interleaving up to the bounds.
/// States are deduplicated by canonical fingerprint.
pub fn explore(table: &ClassTable, options: ExploreOptions, monitor: &mut dyn Monitor) -> ExploreReport {
    let mut report = ExploreReport {
        rule_coverage: RuleName::ALL.iter().map(|r| (r.label().to_string(), 0)).collect(),
        ..ExploreReport::default()
    };
    let initial = initial_configuration(table);
    let mut nodes = vec![Node {
        parent: None,
        via: None,
    }];
    let mut seen: HashMap<u128, usize> = HashMap::from([(fingerprint(&initial), 0)]);
    for finding in monitor.state(table, &initial) {
        report.violations.push(Violation {
            finding,
            path: Vec::new(),
        });
    }
    let mut queue = VecDeque::from([(0usize, 0usize, initial)]);

    while let Some((id, depth, cfg)) = queue.pop_front() {
        report.max_depth = report.max_depth.max(depth);
        let mut ready = Vec::new();
        if let Some(outcome) = halted(table, &cfg, &mut ready) {
            *report.outcomes.entry(outcome.label()).or_default() += 1;
            continue;
        }
        if depth >= options.depth {
            report.truncated = true;
            continue;
        }
        for t in ready {
            let next = apply(table, &cfg, &t).expect("enabled transitions apply");
            report.transitions += 1;
            *report.rule_coverage.entry(t.rule.label().to_string()).or_default() += 1;
            let step_findings = monitor.step(table, &cfg, &t, &next);
            if !step_findings.is_empty() {
                let mut path = path_to(&nodes, id);
                path.push(t.clone());
                for finding in step_findings {
                    report.violations.push(Violation {
                        finding,
                        path: path.clone(),
                    });
                }
            }
            let fp = fingerprint(&next);
            if seen.contains_key(&fp) {
                continue;
            }
            if nodes.len() >= options.state_bound {
                report.truncated = true;
                continue;
            }
            let child = nodes.len();
            nodes.push(Node {
                parent: Some(id),
                via: Some(t),
            });
            seen.insert(fp, child);
            for finding in monitor.state(table, &next) {
                report.violations.push(Violation {
                    finding,
                    path: path_to(&nodes, child),
                });
            }
            queue.push_back((child, depth + 1, next));
        }
    }
    report.states = nodes.len();
    report
}
