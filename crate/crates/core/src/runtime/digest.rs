//! Canonical state encoding. Object and group names are renamed in the
//! order a traversal from the main object first reaches them, so states
//! that differ only in which fresh names were handed out collapse.

use super::config::{Binding, Configuration, Frame, GroupState, ObjectState, Process};
use crate::ast::{Expr, GroupId, ObjId, Operand, Stmt, StmtKind, Value};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, VecDeque};
use std::hash::{Hash, Hasher};

#[derive(Default)]
struct Renaming {
    objects: BTreeMap<ObjId, ObjId>,
    groups: BTreeMap<GroupId, GroupId>,
}

impl Renaming {
    fn assigned(&self, v: &Value) -> Option<u64> {
        match v {
            Value::Obj(o) => self.objects.get(o).map(|n| n.0 as u64),
            Value::Group(g) => self.groups.get(g).map(|n| n.0 as u64),
            _ => None,
        }
    }

    /// Assigns the next name to `v`; returns whether it was new.
    fn reach(&mut self, v: Value) -> bool {
        match v {
            Value::Obj(o) if !self.objects.contains_key(&o) => {
                let n = ObjId(self.objects.len() as u32);
                self.objects.insert(o, n);
                true
            }
            Value::Group(g) if !self.groups.contains_key(&g) => {
                let n = GroupId(self.groups.len() as u32);
                self.groups.insert(g, n);
                true
            }
            _ => false,
        }
    }

    fn value(&self, v: Value) -> Value {
        match v {
            Value::Obj(o) => Value::Obj(self.objects[&o]),
            Value::Group(g) => Value::Group(self.groups[&g]),
            other => other,
        }
    }
}

fn stmt_values(stmts: &[Stmt], out: &mut Vec<Value>) {
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::Assign { expr, .. } => match expr {
                Expr::Lit(v) => out.push(*v),
                Expr::Call {
                    target: Operand::Value(v),
                    ..
                } => out.push(*v),
                Expr::Wait { callee, .. } => out.push(Value::Obj(*callee)),
                _ => {}
            },
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            }
            | StmtKind::Leave {
                then_branch,
                else_branch,
                ..
            }
            | StmtKind::SubtypeOf {
                then_branch,
                else_branch,
                ..
            } => {
                stmt_values(then_branch, out);
                stmt_values(else_branch, out);
            }
            StmtKind::While { body, .. } => stmt_values(body, out),
            _ => {}
        }
    }
}

fn object_values(obj: &ObjectState) -> Vec<Value> {
    let mut out: Vec<Value> = obj.fields.values().map(|s| s.value).collect();
    for process in &obj.stack {
        if let Process::Frame(f) = process {
            out.extend(f.locals.values().map(|s| s.value));
            stmt_values(&f.body, &mut out);
        }
    }
    out
}

fn renaming(cfg: &Configuration) -> Renaming {
    let mut names = Renaming::default();
    let mut queue = VecDeque::new();
    let roots = cfg
        .objects
        .keys()
        .map(|o| Value::Obj(*o))
        .chain(cfg.groups.keys().map(|g| Value::Group(*g)));
    // The main object is reached first; anything unreachable from it
    // follows in id order.
    for root in roots {
        if names.reach(root) {
            queue.push_back(root);
        }
        while let Some(v) = queue.pop_front() {
            let next: Vec<Value> = match v {
                Value::Obj(o) => cfg.objects.get(&o).map(object_values).unwrap_or_default(),
                Value::Group(g) => {
                    let Some(state) = cfg.groups.get(&g) else {
                        continue;
                    };
                    let mut entries: Vec<(&str, u64, Value)> = state
                        .exports
                        .iter()
                        .enumerate()
                        .map(|(raw, (v, i))| {
                            let key = names.assigned(v).unwrap_or(1 << 40 | raw as u64);
                            (i.as_str(), key, *v)
                        })
                        .collect();
                    entries.sort();
                    entries.into_iter().map(|(_, _, v)| v).collect()
                }
                _ => Vec::new(),
            };
            for v in next {
                if names.reach(v) {
                    queue.push_back(v);
                }
            }
        }
    }
    names
}

fn rename_stmts(stmts: &[Stmt], names: &Renaming) -> Vec<Stmt> {
    stmts
        .iter()
        .map(|stmt| {
            let kind = match &stmt.kind {
                StmtKind::Assign { target, expr } => StmtKind::Assign {
                    target: target.clone(),
                    expr: match expr {
                        Expr::Lit(v) => Expr::Lit(names.value(*v)),
                        Expr::Call {
                            target: Operand::Value(v),
                            method,
                            args,
                        } => Expr::Call {
                            target: Operand::Value(names.value(*v)),
                            method: method.clone(),
                            args: args.clone(),
                        },
                        Expr::Wait { callee, method } => Expr::Wait {
                            callee: names.objects[callee],
                            method: method.clone(),
                        },
                        other => other.clone(),
                    },
                },
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => StmtKind::If {
                    cond: cond.clone(),
                    then_branch: rename_stmts(then_branch, names),
                    else_branch: rename_stmts(else_branch, names),
                },
                StmtKind::While { cond, body } => StmtKind::While {
                    cond: cond.clone(),
                    body: rename_stmts(body, names),
                },
                StmtKind::Leave {
                    member,
                    group,
                    ifaces,
                    then_branch,
                    else_branch,
                } => StmtKind::Leave {
                    member: member.clone(),
                    group: group.clone(),
                    ifaces: ifaces.clone(),
                    then_branch: rename_stmts(then_branch, names),
                    else_branch: rename_stmts(else_branch, names),
                },
                StmtKind::SubtypeOf {
                    subject,
                    iface,
                    alias,
                    then_branch,
                    else_branch,
                } => StmtKind::SubtypeOf {
                    subject: subject.clone(),
                    iface: iface.clone(),
                    alias: alias.clone(),
                    then_branch: rename_stmts(then_branch, names),
                    else_branch: rename_stmts(else_branch, names),
                },
                other => other.clone(),
            };
            Stmt::new(kind, stmt.pos)
        })
        .collect()
}

fn rename_binding(b: &Binding, names: &Renaming) -> Binding {
    b.iter()
        .map(|(k, s)| {
            let mut s = s.clone();
            s.value = names.value(s.value);
            (k.clone(), s)
        })
        .collect()
}

/// The configuration with entity names replaced by canonical ones.
pub fn canonicalize(cfg: &Configuration) -> Configuration {
    let names = renaming(cfg);
    let objects = cfg
        .objects
        .iter()
        .map(|(o, obj)| {
            let stack = obj
                .stack
                .iter()
                .map(|p| match p {
                    Process::Frame(f) => Process::Frame(Frame {
                        method: f.method.clone(),
                        locals: rename_binding(&f.locals, &names),
                        body: rename_stmts(&f.body, &names),
                        ret: f.ret.clone(),
                    }),
                    Process::Error(m) => Process::Error(m.clone()),
                })
                .collect();
            (
                names.objects[o],
                ObjectState {
                    class: obj.class.clone(),
                    fields: rename_binding(&obj.fields, &names),
                    stack,
                },
            )
        })
        .collect();
    let groups = cfg
        .groups
        .iter()
        .map(|(g, state)| {
            (
                names.groups[g],
                GroupState {
                    exports: state
                        .exports
                        .iter()
                        .map(|(v, i)| (names.value(*v), i.clone()))
                        .collect(),
                },
            )
        })
        .collect();
    Configuration {
        objects,
        groups,
        next_object: cfg.next_object,
        next_group: cfg.next_group,
    }
}

struct ShaHasher(Sha256);

impl Hasher for ShaHasher {
    fn finish(&self) -> u64 {
        let out = self.0.clone().finalize();
        u64::from_be_bytes(out[..8].try_into().expect("8 bytes"))
    }

    fn write(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }
}

fn sha(cfg: &Configuration) -> [u8; 32] {
    let mut h = ShaHasher(Sha256::new());
    canonicalize(cfg).hash(&mut h);
    h.0.finalize().into()
}

/// 128-bit canonical fingerprint used for state deduplication.
pub fn fingerprint(cfg: &Configuration) -> u128 {
    u128::from_be_bytes(sha(cfg)[..16].try_into().expect("16 bytes"))
}

/// 64-bit hex digest of the canonical state encoding.
pub fn digest_hex(cfg: &Configuration) -> String {
    let bytes = sha(cfg);
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::config::Slot;
    use crate::ast::Type;

    fn object(class: &str, fields: &[(&str, Value)]) -> ObjectState {
        ObjectState {
            class: class.into(),
            fields: fields
                .iter()
                .map(|(n, v)| (n.to_string(), Slot::new(Type::Any, *v)))
                .collect(),
            stack: Vec::new(),
        }
    }

    /// Main holds two fresh objects of different classes; the ids they got
    /// depend on creation order only.
    fn swapped(first: &str, second: &str) -> Configuration {
        let mut cfg = Configuration::default();
        cfg.objects.insert(
            ObjId(0),
            object(
                "Main",
                &[("a", Value::Obj(ObjId(if first == "A" { 1 } else { 2 }))),
                  ("b", Value::Obj(ObjId(if first == "A" { 2 } else { 1 })))],
            ),
        );
        cfg.objects.insert(ObjId(1), object(first, &[]));
        cfg.objects.insert(ObjId(2), object(second, &[]));
        cfg.next_object = 3;
        cfg
    }

    #[test]
    fn creation_order_does_not_matter() {
        assert_eq!(fingerprint(&swapped("A", "B")), fingerprint(&swapped("B", "A")));
    }

    #[test]
    fn different_states_differ() {
        let mut other = swapped("A", "B");
        other.objects.get_mut(&ObjId(1)).unwrap().class = "C".into();
        assert_ne!(fingerprint(&swapped("A", "B")), fingerprint(&other));
    }

    #[test]
    fn digest_is_sixteen_hex_digits() {
        let d = digest_hex(&swapped("A", "B"));
        assert_eq!(d.len(), 16);
        assert!(d.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let c = canonicalize(&swapped("B", "A"));
        assert_eq!(canonicalize(&c), c);
    }
}
