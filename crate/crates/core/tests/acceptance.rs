//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and fails if any criterion fails.

mod common;

use common::*;
use kog::ast::{ObjId, Type, Value};
use kog::parser::parse;
use kog::rtcheck::{canonical_env, check_config, check_program_runtime, Mode};
use kog::runtime::{
    explore, initial_configuration, intf, run, Configuration, ExploreOptions, Finding, Monitor,
    Outcome, Policy, RuleName, Transition,
};
use kog::typecheck::{check_program, is_subtype};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Criterion 1: The editor program checks, terminates under seeds 0..=9, and ends
/// with a well-typed editor group that lost its old dictionary.
fn editor_end_to_end() -> Verdict {
    let src = source("editor.kog");
    let table = check_program(parse(&src).map_err(|e| e.to_string())?)
        .map_err(|errs| format!("{} type error(s): {errs:?}", errs.len()))?;
    let demand = Type::group(["SpellChecker", "Dictionary"]);
    let mut slowest = Duration::ZERO;
    for seed in 0..10u64 {
        let start = Instant::now();
        let result = run(&table, Policy::Random { seed }, 100_000);
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        ensure(elapsed < Duration::from_secs(1), || format!("seed {seed} took {elapsed:?}"))?;
        ensure(result.outcome == Outcome::Terminated, || format!("seed {seed}: {}", result.outcome))?;

        let factory_group = result.steps.iter().find_map(|s| {
            let t = &s.transition;
            let by_factory = result.last.class_of(t.object) == Some("Factory");
            match (t.rule, t.partner) {
                (RuleName::NewGroup, Some(Value::Group(g))) if by_factory => Some(g),
                _ => None,
            }
        });
        let g = factory_group.ok_or_else(|| format!("seed {seed}: factory created no group"))?;
        let env = canonical_env(&result.last);
        let ty = env.get(&Value::Group(g)).cloned().unwrap_or(Type::Bool);
        ensure(is_subtype(&table, &ty, &demand), || format!("seed {seed}: editor group has type {ty}"))?;

        // The replacement lookup inside the editor yields the old dictionary.
        let old = result
            .steps
            .iter()
            .rev()
            .find_map(|s| match (s.transition.rule, s.transition.partner) {
                (RuleName::Acquire, Some(Value::Group(h))) if h == g => s.transition.choice,
                _ => None,
            })
            .ok_or_else(|| format!("seed {seed}: no lookup inside the editor"))?;
        let exports = &result.last.groups[&g].exports;
        ensure(!exports.contains(&(old, "Dictionary".to_string())), || {
            format!("seed {seed}: old dictionary {old} still exported")
        })?;
        let covered = intf(&table, exports)
            .iter()
            .any(|i| is_subtype(&table, &Type::iface(i.clone()), &Type::iface("Dictionary")));
        ensure(covered, || format!("seed {seed}: intf no longer covers Dictionary"))?;
    }
    Ok(format!("10 seeds terminated, slowest {slowest:?}"))
}

/// Brute-force `intf` and the leave discipline, checked on every Leave
/// transition during exploration.
struct LeaveOracle<'a> {
    table: &'a kog::ast::ClassTable,
    leave1: usize,
    leave2: usize,
    counterexamples: Vec<String>,
}

fn oracle_intf(table: &kog::ast::ClassTable, exports: &BTreeSet<(Value, String)>) -> BTreeSet<String> {
    let ifaces: BTreeSet<&String> = exports.iter().map(|(_, i)| i).collect();
    ifaces
        .iter()
        .filter(|i| {
            !ifaces.iter().any(|j| {
                j != *i && is_subtype(table, &Type::iface((*j).clone()), &Type::iface((**i).clone()))
            })
        })
        .map(|i| (*i).clone())
        .collect()
}

impl Monitor for LeaveOracle<'_> {
    fn step(&mut self, _: &kog::ast::ClassTable, before: &Configuration, t: &Transition, after: &Configuration) -> Vec<Finding> {
        if !matches!(t.rule, RuleName::Leave1 | RuleName::Leave2) {
            return Vec::new();
        }
        let Some(Value::Group(g)) = t.partner else {
            self.counterexamples.push(format!("{} without a group", t.rule));
            return Vec::new();
        };
        let (old, new) = (&before.groups[&g].exports, &after.groups[&g].exports);
        match t.rule {
            RuleName::Leave1 => {
                self.leave1 += 1;
                if oracle_intf(self.table, old) != oracle_intf(self.table, new) {
                    self.counterexamples.push(format!("Leave1 on {g} changed intf"));
                }
            }
            RuleName::Leave2 => {
                self.leave2 += 1;
                if old != new {
                    self.counterexamples.push(format!("Leave2 on {g} changed exports"));
                }
            }
            _ => {}
        }
        Vec::new()
    }
}

const DEPTH: usize = 300;
const STATE_BOUND: usize = 100_000;

/// Criterion 2: Exhaustive exploration with the runtime type checker finds nothing,
/// and together the programs use every rule.
fn subject_reduction() -> Verdict {
    let start = Instant::now();
    let mut coverage: BTreeMap<String, usize> = BTreeMap::new();
    let mut states = 0;
    for name in EXPLORED {
        let table = checked(name);
        let initial = initial_configuration(&table);
        let v = check_config(&table, &canonical_env(&initial), &initial);
        ensure(v.is_empty(), || format!("{name}: initial state ill typed: {v:?}"))?;
        let report = check_program_runtime(
            &table,
            Mode::Explore(ExploreOptions {
                depth: DEPTH,
                state_bound: STATE_BOUND,
            }),
        );
        let stats = report.exploration.as_ref().expect("explore mode");
        ensure(report.ok(), || format!("{name}: {:?}", report.violations.first()))?;
        ensure(stats.count("error-process") == 0, || format!("{name}: error process reached"))?;
        ensure(stats.count("runtime-error") == 0, || format!("{name}: runtime fault reached"))?;
        ensure(stats.states <= STATE_BOUND, || format!("{name}: {} states", stats.states))?;
        states += stats.states;
        for (rule, n) in &stats.rule_coverage {
            *coverage.entry(rule.clone()).or_default() += n;
        }
    }
    let missing: Vec<&str> = RuleName::ALL
        .iter()
        .map(|r| r.label())
        .filter(|r| coverage.get(*r).copied().unwrap_or(0) == 0)
        .collect();
    ensure(missing.is_empty(), || format!("rules never taken: {missing:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} programs, {states} states, 19/19 rules, 0 violations, {elapsed:?}",
        EXPLORED.len()
    ))
}

/// Criterion 3: Every negative program is rejected, first with its expected rule.
fn negative_corpus() -> Verdict {
    let names = programs_in("negative");
    ensure(names.len() >= 8, || format!("only {} negative programs", names.len()))?;
    let required = ["LocalRequired", "T-Call", "T-New", "T-Return", "T-Inspect", "T-Leave"];
    let mut seen = BTreeSet::new();
    for name in &names {
        let src = source(name);
        let expected = expected_rule(&src).ok_or_else(|| format!("{name}: no expect header"))?;
        let errors = match parse(&src) {
            Ok(p) => check_program(p).err().unwrap_or_default(),
            Err(e) => return Err(format!("{name}: {e}")),
        };
        let first = errors.first().map(|e| e.rule.label().to_string());
        ensure(first.as_deref() == Some(expected.as_str()), || {
            format!("{name}: expected {expected}, got {first:?}")
        })?;
        seen.insert(expected);
    }
    let missing: Vec<&&str> = required.iter().filter(|r| !seen.contains(**r)).collect();
    ensure(missing.is_empty(), || format!("no negative program for {missing:?}"))?;
    Ok(format!("{} programs rejected with their expected rule", names.len()))
}

/// Criterion 4: `intf` agrees with deleting every interface that has a strict subtype
/// in the set, where subtyping is reachability in the generated hierarchy.
fn intf_oracle() -> Verdict {
    let strategy = hierarchy(5).prop_flat_map(|h| {
        let n = h.len();
        (Just(h), proptest::collection::vec((0u32..4, 0..n), 0..=6))
    });
    let mut runner = runner(1000);
    runner
        .run(&strategy, |(h, entries)| {
            let table = h.table();
            let exports: BTreeSet<(Value, String)> = entries
                .iter()
                .map(|&(v, i)| (Value::Obj(ObjId(v)), Hierarchy::name(i)))
                .collect();
            let present: BTreeSet<usize> = entries.iter().map(|&(_, i)| i).collect();
            let expected: BTreeSet<String> = present
                .iter()
                .filter(|&&i| !present.iter().any(|&j| j != i && h.reaches(j, i)))
                .map(|&i| Hierarchy::name(i))
                .collect();
            prop_assert_eq!(intf(&table, &exports), expected);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 export sets match the oracle".into())
}

/// Criterion 5: Subtyping is reflexive and transitive and matches the definitions on
/// interfaces and group types.
fn subtyping_properties() -> Verdict {
    let n_sets = 6;
    let strategy = hierarchy(6).prop_flat_map(move |h| {
        let n = h.len();
        let set = proptest::collection::btree_set(0..n, 0..=n.min(3));
        (Just(h), proptest::collection::vec(set, n_sets))
    });
    let mut runner = runner(200);
    runner
        .run(&strategy, |(h, sets)| {
            let table = h.table();
            let n = h.len();
            let iface = |i: usize| Type::iface(Hierarchy::name(i));
            let group = |s: &BTreeSet<usize>| Type::group(s.iter().map(|&i| Hierarchy::name(i)));
            // Interfaces against reachability.
            for i in 0..n {
                prop_assert!(is_subtype(&table, &iface(i), &Type::Any));
                for j in 0..n {
                    prop_assert_eq!(is_subtype(&table, &iface(i), &iface(j)), h.reaches(i, j), "I{} <= I{}", i, j);
                }
            }
            // Group types against the forall-exists definition.
            for s in &sets {
                for t in &sets {
                    let expected = t.iter().all(|&j| s.iter().any(|&i| h.reaches(i, j)));
                    prop_assert_eq!(is_subtype(&table, &group(s), &group(t)), expected);
                }
                for j in 0..n {
                    let expected = s.iter().any(|&i| h.reaches(i, j));
                    prop_assert_eq!(is_subtype(&table, &group(s), &iface(j)), expected);
                }
                // Dropping demands only makes the supertype easier to reach.
                for k in 0..=s.len() {
                    let sub: BTreeSet<usize> = s.iter().copied().take(k).collect();
                    prop_assert!(is_subtype(&table, &group(s), &group(&sub)));
                }
            }
            // Reflexivity and transitivity over a mixed universe.
            let mut universe = vec![Type::Bool, Type::Any];
            universe.extend((0..n).map(iface));
            universe.extend(sets.iter().map(group));
            for a in &universe {
                prop_assert!(is_subtype(&table, a, a));
                for b in &universe {
                    if !is_subtype(&table, a, b) {
                        continue;
                    }
                    for c in &universe {
                        if is_subtype(&table, b, c) {
                            prop_assert!(is_subtype(&table, a, c), "{} <= {} <= {}", a, b, c);
                        }
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("200 hierarchies".into())
}

/// Criterion 6: Leave1 keeps `intf` and Leave2 keeps the exports, in every explored
/// state of the subject-reduction programs.
fn leave_discipline() -> Verdict {
    let (mut leave1, mut leave2) = (0, 0);
    for name in EXPLORED {
        let table = checked(name);
        let mut oracle = LeaveOracle {
            table: &table,
            leave1: 0,
            leave2: 0,
            counterexamples: Vec::new(),
        };
        explore(
            &table,
            ExploreOptions {
                depth: DEPTH,
                state_bound: STATE_BOUND,
            },
            &mut oracle,
        );
        ensure(oracle.counterexamples.is_empty(), || format!("{name}: {:?}", oracle.counterexamples))?;
        leave1 += oracle.leave1;
        leave2 += oracle.leave2;
    }
    ensure(leave1 > 0 && leave2 > 0, || format!("too few leaves: {leave1} Leave1, {leave2} Leave2"))?;
    Ok(format!("{leave1} Leave1 and {leave2} Leave2 transitions, 0 counterexamples"))
}

fn kog(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kog"))
        .args(args)
        .env_remove("KOG_SEED")
        .output()
        .expect("kog runs")
}

/// Criterion 7: The same invocation writes the same trace, byte for byte.
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let editor = corpus_path("editor.kog");
    let editor = editor.to_str().unwrap();
    for policy in ["random", "round-robin"] {
        let mut traces = Vec::new();
        for i in 0..2 {
            let path = dir.path().join(format!("{policy}-{i}.json"));
            let out = kog(&["run", editor, "--seed", "7", "--policy", policy, "--json", path.to_str().unwrap()]);
            ensure(out.status.code() == Some(0), || format!("{policy}: exit {:?}", out.status.code()))?;
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            traces.push((bytes, out.stdout));
        }
        ensure(!traces[0].0.is_empty(), || format!("{policy}: empty trace"))?;
        ensure(traces[0] == traces[1], || format!("{policy}: traces differ"))?;
    }
    Ok("seed 7 and round-robin traces byte-identical".into())
}

/// Criterion 8: Both stuck programs exit with 2 and name the blocking rule.
fn stuck_detection() -> Verdict {
    for (name, rule, extra) in [
        ("stuck/mutual_call.kog", "Call1", "wait cycle at Call1"),
        ("stuck/unsat_acquire.kog", "Acquire", "blocked at Acquire"),
    ] {
        let out = kog(&["run", corpus_path(name).to_str().unwrap()]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.code() == Some(2), || format!("{name}: exit {:?}", out.status.code()))?;
        ensure(stdout.contains(extra), || format!("{name}: diagnosis lacks `{extra}`: {stdout}"))?;
        let result = run(&checked(name), Policy::Random { seed: 0 }, 100_000);
        let Outcome::Stuck { diagnosis } = &result.outcome else {
            return Err(format!("{name}: {}", result.outcome));
        };
        ensure(diagnosis.rules().any(|r| r.label() == rule), || format!("{name}: {diagnosis}"))?;
    }
    Ok("Call1 wait cycle and Acquire no-match, both exit 2".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("editor end-to-end", editor_end_to_end),
        ("subject reduction", subject_reduction),
        ("negative corpus", negative_corpus),
        ("intf oracle", intf_oracle),
        ("subtyping properties", subtyping_properties),
        ("leave discipline", leave_discipline),
        ("determinism", determinism),
        ("stuck detection", stuck_detection),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
