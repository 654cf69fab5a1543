use super::config::{Configuration, Process};
use super::digest::digest_hex;
use super::step::{apply, object_status, RuleName, Status, Transition};
use super::initial_configuration;
use crate::ast::{ClassTable, ObjId, Name};
use crate::parser::stmt_head;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Uniform choice among all enabled transitions.
    Random { seed: u64 },
    /// Cycles over object ids; takes the first enabled transition of the
    /// next object that has one.
    RoundRobin,
}

enum Scheduler {
    Random(Box<ChaCha8Rng>),
    RoundRobin(Option<ObjId>),
}

impl Scheduler {
    fn new(policy: Policy) -> Self {
        match policy {
            Policy::Random { seed } => Scheduler::Random(Box::new(ChaCha8Rng::seed_from_u64(seed))),
            Policy::RoundRobin => Scheduler::RoundRobin(None),
        }
    }

    fn pick<'a>(&mut self, enabled: &'a [Transition]) -> &'a Transition {
        match self {
            Scheduler::Random(rng) => &enabled[rng.gen_range(0..enabled.len())],
            Scheduler::RoundRobin(cursor) => {
                let after = enabled
                    .iter()
                    .find(|t| cursor.is_none_or(|c| t.object > c))
                    .unwrap_or(&enabled[0]);
                *cursor = Some(after.object);
                after
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockedObject {
    pub object: ObjId,
    pub class: Name,
    pub rule: RuleName,
    pub reason: String,
}

/// Why a configuration with work left cannot move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnosis {
    pub blocked: Vec<BlockedObject>,
    /// Objects waiting on each other in a cycle, first object repeated last.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<ObjId>>,
}

impl Diagnosis {
    pub fn rules(&self) -> impl Iterator<Item = RuleName> + '_ {
        self.blocked.iter().map(|b| b.rule)
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocked {
            writeln!(f, "  {} ({}): {}", b.object, b.class, b.reason)?;
        }
        if let Some(cycle) = &self.cycle {
            let path: Vec<String> = cycle.iter().map(ToString::to_string).collect();
            writeln!(f, "  wait cycle at Call1: {}", path.join(" -> "))?;
        }
        Ok(())
    }
}

/// Describes every non-idle object of a configuration that cannot move.
pub fn diagnose(table: &ClassTable, cfg: &Configuration) -> Diagnosis {
    let mut waits: BTreeMap<ObjId, ObjId> = BTreeMap::new();
    let mut blocked = Vec::new();
    for (&o, obj) in &cfg.objects {
        if let Status::Blocked(b) = object_status(table, cfg, o) {
            if let Some(target) = b.waits_on() {
                waits.insert(o, target);
            }
            blocked.push(BlockedObject {
                object: o,
                class: obj.class.clone(),
                rule: b.rule(),
                reason: b.to_string(),
            });
        }
    }
    Diagnosis {
        blocked,
        cycle: find_cycle(&waits),
    }
}

fn find_cycle(waits: &BTreeMap<ObjId, ObjId>) -> Option<Vec<ObjId>> {
    for &start in waits.keys() {
        let mut path = vec![start];
        let mut at = start;
        while let Some(&next) = waits.get(&at) {
            if let Some(i) = path.iter().position(|&p| p == next) {
                let mut cycle = path[i..].to_vec();
                // Rotate so the smallest id comes first.
                let min = cycle.iter().enumerate().min_by_key(|(_, o)| **o).map(|(i, _)| i)?;
                cycle.rotate_left(min);
                cycle.push(cycle[0]);
                return Some(cycle);
            }
            path.push(next);
            at = next;
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Terminated,
    Stuck { diagnosis: Diagnosis },
    ErrorProcess { object: ObjId, message: String },
    /// Null or ill-typed operand; only reachable without the type check.
    RuntimeError { object: ObjId, message: String },
    BudgetExhausted,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Terminated => "terminated",
            Outcome::Stuck { .. } => "stuck",
            Outcome::ErrorProcess { .. } => "error-process",
            Outcome::RuntimeError { .. } => "runtime-error",
            Outcome::BudgetExhausted => "budget-exhausted",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Terminated => 0,
            Outcome::Stuck { .. } => 2,
            Outcome::ErrorProcess { .. } | Outcome::RuntimeError { .. } => 3,
            Outcome::BudgetExhausted => 4,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Stuck { diagnosis } => write!(f, "stuck\n{diagnosis}"),
            Outcome::ErrorProcess { object, message } | Outcome::RuntimeError { object, message } => {
                write!(f, "{} in {object}: {message}", self.label())
            }
            _ => f.write_str(self.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub index: usize,
    #[serde(flatten)]
    pub transition: Transition,
    pub stmt: String,
    pub digest: String,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub initial: Configuration,
    pub last: Configuration,
}

/// The statement the acting object is about to execute.
pub fn stmt_text(cfg: &Configuration, o: ObjId) -> String {
    let Some(frame) = cfg.objects.get(&o).and_then(|obj| obj.top_frame()) else {
        return String::new();
    };
    match (frame.body.first(), &frame.ret) {
        (Some(stmt), _) => stmt_head(stmt),
        (None, Some(x)) => format!("return {x}"),
        (None, None) => String::new(),
    }
}

/// Why `cfg` cannot continue, if it cannot.
pub(crate) fn halted(table: &ClassTable, cfg: &Configuration, enabled: &mut Vec<Transition>) -> Option<Outcome> {
    let mut fault = None;
    for &o in cfg.objects.keys() {
        match object_status(table, cfg, o) {
            Status::Errored(message) => return Some(Outcome::ErrorProcess { object: o, message }),
            Status::Faulted(message) => {
                fault.get_or_insert(Outcome::RuntimeError { object: o, message });
            }
            Status::Ready(ts) => enabled.extend(ts),
            Status::Idle | Status::Blocked(_) => {}
        }
    }
    // A non-top error process can only surface once uncovered, but report
    // it as soon as it exists.
    for (&o, obj) in &cfg.objects {
        if let Some(Process::Error(message)) = obj.stack.iter().find(|p| matches!(p, Process::Error(_))) {
            return Some(Outcome::ErrorProcess {
                object: o,
                message: message.clone(),
            });
        }
    }
    if fault.is_some() {
        return fault;
    }
    if enabled.is_empty() {
        return Some(if cfg.all_idle() {
            Outcome::Terminated
        } else {
            Outcome::Stuck {
                diagnosis: diagnose(table, cfg),
            }
        });
    }
    None
}

/// Executes the program under `policy` for at most `max_steps` steps.
/// `observe` sees every applied transition with the states around it.
pub fn run_observed(
    table: &ClassTable,
    policy: Policy,
    max_steps: usize,
    mut observe: impl FnMut(&Configuration, &Transition, &Configuration),
) -> RunResult {
    let initial = initial_configuration(table);
    let mut cfg = initial.clone();
    let mut scheduler = Scheduler::new(policy);
    let mut steps = Vec::new();
    let outcome = loop {
        let mut ready = Vec::new();
        if let Some(outcome) = halted(table, &cfg, &mut ready) {
            break outcome;
        }
        if steps.len() >= max_steps {
            break Outcome::BudgetExhausted;
        }
        let t = scheduler.pick(&ready).clone();
        let stmt = stmt_text(&cfg, t.object);
        let next = apply(table, &cfg, &t).expect("scheduler picks enabled transitions");
        observe(&cfg, &t, &next);
        steps.push(Step {
            index: steps.len(),
            transition: t,
            stmt,
            digest: digest_hex(&next),
        });
        cfg = next;
    };
    RunResult {
        steps,
        outcome,
        initial,
        last: cfg,
    }
}

pub fn run(table: &ClassTable, policy: Policy, max_steps: usize) -> RunResult {
    run_observed(table, policy, max_steps, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::typecheck::check_program;

    fn table(src: &str) -> ClassTable {
        check_program(parse(src).unwrap()).unwrap()
    }

    #[test]
    fn skip_terminates_in_one_step() {
        let r = run(&table("{ skip; }"), Policy::Random { seed: 0 }, 100);
        assert_eq!(r.outcome, Outcome::Terminated);
        assert_eq!(r.steps.len(), 1);
    }

    #[test]
    fn budget_is_respected() {
        let src = "{ Bool b; b = true; while b { skip; } }";
        let r = run(&table(src), Policy::RoundRobin, 50);
        assert_eq!(r.outcome, Outcome::BudgetExhausted);
        assert_eq!(r.steps.len(), 50);
        assert_eq!(r.outcome.exit_code(), 4);
    }

    #[test]
    fn unmatched_acquire_is_stuck() {
        let src = "interface P {} { P p; p = acquire P; }";
        let r = run(&table(src), Policy::Random { seed: 3 }, 100);
        let Outcome::Stuck { diagnosis } = &r.outcome else {
            panic!("expected stuck, got {:?}", r.outcome);
        };
        assert_eq!(diagnosis.rules().collect::<Vec<_>>(), vec![RuleName::Acquire]);
        assert!(diagnosis.cycle.is_none());
    }

    #[test]
    fn cycle_detection() {
        let waits = BTreeMap::from([(ObjId(2), ObjId(1)), (ObjId(1), ObjId(2)), (ObjId(0), ObjId(1))]);
        assert_eq!(find_cycle(&waits), Some(vec![ObjId(1), ObjId(2), ObjId(1)]));
        let chain = BTreeMap::from([(ObjId(0), ObjId(1))]);
        assert_eq!(find_cycle(&chain), None);
    }

    #[test]
    fn same_seed_same_trace() {
        let src = r#"
interface D {}
class A() implements D {}
{ Group<> g; D a; D b; D x; g = newgroup; a = new A(); b = new A();
  a joins g as D; b joins g as D; x = acquire D in g; }"#;
        let t = table(src);
        let a = run(&t, Policy::Random { seed: 7 }, 1000);
        let b = run(&t, Policy::Random { seed: 7 }, 1000);
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn round_robin_alternates_between_objects() {
        let src = r#"
class Spin() { { Bool b; b = true; b = true; b = true; } }
{ Any s; Bool b; s = new Spin(); b = true; b = true; b = true; }"#;
        let r = run(&table(src), Policy::RoundRobin, 100);
        assert_eq!(r.outcome, Outcome::Terminated);
        let actors: Vec<u32> = r.steps.iter().map(|s| s.transition.object.0).collect();
        // Once the second object exists, the two take turns.
        let after = actors.iter().position(|&a| a == 1).unwrap();
        assert!(actors[after..after + 4].windows(2).all(|w| w[0] != w[1]));
    }
}
