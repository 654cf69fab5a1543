use super::{canonical_env, check_config, RuntimeEnv};
use crate::ast::{ClassTable, Value};
use crate::runtime::{
    explore, intf, run_observed, Configuration, ExploreOptions, ExploreReport, Finding, Monitor,
    Policy, RuleName, RunResult, Transition,
};
use crate::typecheck::is_subtype;
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub enum Mode {
    Trace { policy: Policy, max_steps: usize },
    Explore(ExploreOptions),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarnessViolation {
    pub rule: String,
    pub location: String,
    pub message: String,
    pub path: Vec<Transition>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct HarnessReport {
    pub states_checked: usize,
    pub transitions_checked: usize,
    pub violations: Vec<HarnessViolation>,
    pub truncated: bool,
    #[serde(skip)]
    pub leave1_checked: usize,
    #[serde(skip)]
    pub leave2_checked: usize,
    /// The run itself, in trace mode.
    #[serde(skip)]
    pub run: Option<RunResult>,
    /// The exploration statistics, in explore mode.
    #[serde(skip)]
    pub exploration: Option<ExploreReport>,
}

impl HarnessReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

fn finding(rule: &str, location: impl Into<String>, message: impl Into<String>) -> Finding {
    Finding {
        rule: rule.to_string(),
        location: location.into(),
        message: message.into(),
    }
}

/// Monitor that type checks every state and checks the growth and leave
/// disciplines on every transition.
pub struct SubjectReduction {
    pub states: usize,
    pub transitions: usize,
    pub leave1: usize,
    pub leave2: usize,
}

impl SubjectReduction {
    pub fn new() -> Self {
        Self {
            states: 0,
            transitions: 0,
            leave1: 0,
            leave2: 0,
        }
    }

    fn growth(table: &ClassTable, before: &RuntimeEnv, after: &RuntimeEnv) -> Vec<Finding> {
        let mut out = Vec::new();
        for (v, old) in before.iter() {
            let Some(new) = after.get(v) else {
                out.push(finding("Growth", v.to_string(), "entry vanished from the environment"));
                continue;
            };
            match v {
                Value::Obj(_) if new != old => {
                    out.push(finding("Growth", v.to_string(), format!("object entry changed from {old} to {new}")));
                }
                Value::Group(_) if !is_subtype(table, new, old) => {
                    out.push(finding("Growth", v.to_string(), format!("group type {new} does not refine {old}")));
                }
                _ => {}
            }
        }
        out
    }

    fn leave(&mut self, table: &ClassTable, before: &Configuration, t: &Transition, after: &Configuration) -> Vec<Finding> {
        if !matches!(t.rule, RuleName::Leave1 | RuleName::Leave2) {
            return Vec::new();
        }
        let Some(Value::Group(g)) = t.partner else {
            return vec![finding("Leave", t.object.to_string(), "leave without a group operand")];
        };
        let (Some(old), Some(new)) = (before.group(g), after.group(g)) else {
            return vec![finding("Leave", g.to_string(), "group missing around a leave")];
        };
        match t.rule {
            RuleName::Leave1 => {
                self.leave1 += 1;
                let (a, b) = (intf(table, &old.exports), intf(table, &new.exports));
                if a != b {
                    return vec![finding("Leave", g.to_string(), format!("intf changed from {a:?} to {b:?}"))];
                }
            }
            RuleName::Leave2 => {
                self.leave2 += 1;
                if old.exports != new.exports {
                    return vec![finding("Leave", g.to_string(), "exports changed on the failing branch")];
                }
            }
            _ => {}
        }
        Vec::new()
    }
}

impl Default for SubjectReduction {
    fn default() -> Self {
        Self::new()
    }
}

impl Monitor for SubjectReduction {
    fn state(&mut self, table: &ClassTable, cfg: &Configuration) -> Vec<Finding> {
        self.states += 1;
        check_config(table, &canonical_env(cfg), cfg)
            .into_iter()
            .map(|v| finding(v.rule.label(), v.location, v.message))
            .collect()
    }

    fn step(&mut self, table: &ClassTable, before: &Configuration, t: &Transition, after: &Configuration) -> Vec<Finding> {
        self.transitions += 1;
        let mut out = Self::growth(table, &canonical_env(before), &canonical_env(after));
        out.extend(self.leave(table, before, t, after));
        out
    }
}

/// Checks the initial configuration, then every state and step reached
/// under `mode`.
pub fn check_program_runtime(table: &ClassTable, mode: Mode) -> HarnessReport {
    let mut monitor = SubjectReduction::new();
    match mode {
        Mode::Explore(options) => {
            let report = explore(table, options, &mut monitor);
            HarnessReport {
                states_checked: monitor.states,
                transitions_checked: monitor.transitions,
                violations: report
                    .violations
                    .iter()
                    .map(|v| HarnessViolation {
                        rule: v.finding.rule.clone(),
                        location: v.finding.location.clone(),
                        message: v.finding.message.clone(),
                        path: v.path.clone(),
                    })
                    .collect(),
                truncated: report.truncated,
                leave1_checked: monitor.leave1,
                leave2_checked: monitor.leave2,
                run: None,
                exploration: Some(report),
            }
        }
        Mode::Trace { policy, max_steps } => {
            let mut violations = Vec::new();
            let mut path = Vec::new();
            let initial = crate::runtime::initial_configuration(table);
            for f in monitor.state(table, &initial) {
                violations.push(HarnessViolation {
                    rule: f.rule,
                    location: f.location,
                    message: f.message,
                    path: Vec::new(),
                });
            }
            let run = run_observed(table, policy, max_steps, |before, t, after| {
                path.push(t.clone());
                let mut found = monitor.step(table, before, t, after);
                found.extend(monitor.state(table, after));
                for f in found {
                    violations.push(HarnessViolation {
                        rule: f.rule,
                        location: f.location,
                        message: f.message,
                        path: path.clone(),
                    });
                }
            });
            HarnessReport {
                states_checked: monitor.states,
                transitions_checked: monitor.transitions,
                violations,
                truncated: matches!(run.outcome, crate::runtime::Outcome::BudgetExhausted),
                leave1_checked: monitor.leave1,
                leave2_checked: monitor.leave2,
                run: Some(run),
                exploration: None,
            }
        }
    }
}
