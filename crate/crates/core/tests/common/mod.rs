#![allow(dead_code)]

use kog::ast::ClassTable;
use kog::parser::parse;
use kog::typecheck::check_program;
use proptest::prelude::*;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_path(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn checked(name: &str) -> ClassTable {
    let program = parse(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    check_program(program).unwrap_or_else(|errs| panic!("{name}: {errs:?}"))
}

/// Well-formed but not type checked.
pub fn unchecked(name: &str) -> ClassTable {
    ClassTable::new(parse(&source(name)).unwrap()).unwrap()
}

/// `.kog` files directly inside `corpus/<sub>`, sorted.
pub fn programs_in(sub: &str) -> Vec<String> {
    let dir = corpus_dir().join(sub);
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .filter_map(|e| {
            let name = e.ok()?.file_name().into_string().ok()?;
            name.ends_with(".kog").then(|| {
                if sub.is_empty() {
                    name
                } else {
                    format!("{sub}/{name}")
                }
            })
        })
        .collect();
    names.sort();
    names
}

/// The rule named by a `// expect: <rule>` header line.
pub fn expected_rule(src: &str) -> Option<String> {
    src.lines()
        .find_map(|l| l.trim().strip_prefix("// expect:"))
        .map(|r| r.trim().to_string())
}

/// The programs whose exploration makes up the subject-reduction run.
pub const EXPLORED: [&str; 8] = [
    "editor.kog",
    "registry.kog",
    "counter.kog",
    "group_call.kog",
    "leave.kog",
    "discovery.kog",
    "stuck/mutual_call.kog",
    "stuck/unsat_acquire.kog",
];

/// A random acyclic interface hierarchy: interface `i` may only extend
/// interfaces with a smaller index.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub parents: Vec<BTreeSet<usize>>,
}

impl Hierarchy {
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn name(i: usize) -> String {
        format!("I{i}")
    }

    pub fn source(&self) -> String {
        let mut out = String::new();
        for (i, ps) in self.parents.iter().enumerate() {
            out.push_str(&format!("interface {}", Self::name(i)));
            if !ps.is_empty() {
                let list: Vec<String> = ps.iter().map(|&p| Self::name(p)).collect();
                out.push_str(&format!(" extends {}", list.join(", ")));
            }
            out.push_str(" {}\n");
        }
        out.push_str("{ skip; }\n");
        out
    }

    pub fn table(&self) -> ClassTable {
        check_program(parse(&self.source()).unwrap()).unwrap()
    }

    /// Reflexive-transitive reachability along `extends`, by depth-first
    /// search over the parent lists.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(i) = stack.pop() {
            if i == to {
                return true;
            }
            if seen.insert(i) {
                stack.extend(self.parents[i].iter().copied());
            }
        }
        false
    }
}

pub fn hierarchy(max: usize) -> impl Strategy<Value = Hierarchy> {
    (1..=max)
        .prop_flat_map(|n| {
            (0..n)
                .map(|i| proptest::collection::btree_set(0..i.max(1), 0..=i.min(3)))
                .collect::<Vec<_>>()
        })
        .prop_map(|parents| Hierarchy { parents })
}
