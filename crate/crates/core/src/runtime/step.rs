use super::config::{Configuration, Frame, GroupState, ObjectState, Process, Slot};
use super::{atts, bind, init, intf};
use crate::ast::{
    ClassTable, Expr, GroupId, Name, ObjId, Operand, Stmt, StmtKind, Type, Value,
};
use crate::typecheck::subtype::{iface_le, is_subtype};
use serde::{Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleName {
    Skip,
    Assign1,
    Assign2,
    NewGroup,
    Cond1,
    Cond2,
    While,
    Call1,
    Call2,
    Call3,
    Return1,
    Return2,
    NewObject,
    Join,
    Acquire,
    Leave1,
    Leave2,
    Query1,
    Query2,
}

impl RuleName {
    pub const ALL: [RuleName; 19] = [
        RuleName::Skip,
        RuleName::Assign1,
        RuleName::Assign2,
        RuleName::NewGroup,
        RuleName::Cond1,
        RuleName::Cond2,
        RuleName::While,
        RuleName::Call1,
        RuleName::Call2,
        RuleName::Call3,
        RuleName::Return1,
        RuleName::Return2,
        RuleName::NewObject,
        RuleName::Join,
        RuleName::Acquire,
        RuleName::Leave1,
        RuleName::Leave2,
        RuleName::Query1,
        RuleName::Query2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RuleName::Skip => "Skip",
            RuleName::Assign1 => "Assign1",
            RuleName::Assign2 => "Assign2",
            RuleName::NewGroup => "New-Group",
            RuleName::Cond1 => "Cond1",
            RuleName::Cond2 => "Cond2",
            RuleName::While => "While",
            RuleName::Call1 => "Call1",
            RuleName::Call2 => "Call2",
            RuleName::Call3 => "Call3",
            RuleName::Return1 => "Return1",
            RuleName::Return2 => "Return2",
            RuleName::NewObject => "New-Object",
            RuleName::Join => "Join",
            RuleName::Acquire => "Acquire",
            RuleName::Leave1 => "Leave1",
            RuleName::Leave2 => "Leave2",
            RuleName::Query1 => "Query1",
            RuleName::Query2 => "Query2",
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for RuleName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// One enabled rule instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Transition {
    pub rule: RuleName,
    pub object: ObjId,
    /// The callee, caller, group or newly created entity involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<Value>,
    /// The exporter picked by a discovery or group call.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choice: Option<Value>,
}

impl Transition {
    fn new(rule: RuleName, object: ObjId) -> Self {
        Self {
            rule,
            object,
            partner: None,
            choice: None,
        }
    }

    fn with_partner(mut self, partner: Value) -> Self {
        self.partner = Some(partner);
        self
    }

    fn with_choice(mut self, choice: Value) -> Self {
        self.choice = Some(choice);
        self
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} by {}", self.rule, self.object)?;
        if let Some(p) = self.partner {
            write!(f, " with {p}")?;
        }
        if let Some(c) = self.choice {
            write!(f, " choosing {c}")?;
        }
        Ok(())
    }
}

/// Why an object with work left has no enabled rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Blocker {
    /// Synchronous call to an object that is not idle.
    CalleeBusy { callee: ObjId, method: Name },
    /// Discovery with no matching exporter.
    NoMatch { iface: Name, within: Option<GroupId> },
    /// Call to a group where no exported interface offers the method.
    NoExporter { group: GroupId, method: Name },
    /// Blocked on `wait(callee, method)`.
    AwaitingReturn { callee: ObjId, method: Name },
    /// A method finished but nobody is waiting for its result.
    NoCaller { method: Name },
}

impl Blocker {
    /// The rule this object is waiting to take.
    pub fn rule(&self) -> RuleName {
        match self {
            Blocker::CalleeBusy { .. } => RuleName::Call1,
            Blocker::NoMatch { .. } => RuleName::Acquire,
            Blocker::NoExporter { .. } => RuleName::Call3,
            Blocker::AwaitingReturn { .. } | Blocker::NoCaller { .. } => RuleName::Return1,
        }
    }

    /// The object this one waits for, if any.
    pub fn waits_on(&self) -> Option<ObjId> {
        match self {
            Blocker::CalleeBusy { callee, .. } | Blocker::AwaitingReturn { callee, .. } => {
                Some(*callee)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Blocker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Blocker::CalleeBusy { callee, method } => {
                write!(f, "blocked at Call1: callee {callee} is busy (calling `{method}`)")
            }
            Blocker::NoMatch { iface, within } => match within {
                Some(g) => write!(f, "blocked at Acquire: no exporter of `{iface}` in {g}"),
                None => write!(f, "blocked at Acquire: no exporter of `{iface}` in any group"),
            },
            Blocker::NoExporter { group, method } => {
                write!(f, "blocked at Call3: no exporter in {group} offers `{method}`")
            }
            Blocker::AwaitingReturn { callee, method } => {
                write!(f, "waiting for {callee} to return from `{method}`")
            }
            Blocker::NoCaller { method } => {
                write!(f, "return from `{method}` has no waiting caller")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Idle,
    Ready(Vec<Transition>),
    Blocked(Blocker),
    /// A runtime error: null or ill-typed operand, undeclared variable.
    Faulted(String),
    /// The active process is the error process.
    Errored(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("transition `{0}` is not enabled")]
    NotEnabled(Transition),
}

fn eval(obj: &ObjectState, name: &str) -> Result<Value, String> {
    obj.lookup(name)
        .map(|s| s.value)
        .ok_or_else(|| format!("undeclared variable `{name}`"))
}

fn eval_all(obj: &ObjectState, names: &[Name]) -> Result<Vec<Value>, String> {
    names.iter().map(|n| eval(obj, n)).collect()
}

fn operand(obj: &ObjectState, op: &Operand) -> Result<Value, String> {
    match op {
        Operand::Var(name) => eval(obj, name),
        Operand::Value(v) => Ok(*v),
    }
}

fn group_operand(cfg: &Configuration, obj: &ObjectState, name: &str) -> Result<GroupId, String> {
    match eval(obj, name)? {
        Value::Group(g) if cfg.groups.contains_key(&g) => Ok(g),
        Value::Null => Err(format!("`{name}` is null where a group is required")),
        other => Err(format!("`{name}` holds {other}, not a group")),
    }
}

fn entity_operand(obj: &ObjectState, name: &str) -> Result<Value, String> {
    match eval(obj, name)? {
        v if v.is_entity() => Ok(v),
        other => Err(format!("`{name}` holds {other}, not an object or group")),
    }
}

/// The interfaces a variable's stored type already knows about, the base
/// set a join or query extends.
fn known_ifaces(ty: &Type) -> BTreeSet<Name> {
    match ty {
        Type::Group(s) => s.clone(),
        Type::Iface(j) => BTreeSet::from([j.clone()]),
        _ => BTreeSet::new(),
    }
}

fn is_waiting_for(stmt: Option<&Stmt>, callee: ObjId, method: &str) -> bool {
    matches!(
        stmt.map(|s| &s.kind),
        Some(StmtKind::Assign {
            expr: Expr::Wait { callee: c, method: m },
            ..
        }) if *c == callee && m == method
    )
}

fn distinct_values<'a>(entries: impl Iterator<Item = &'a (Value, Name)>) -> Vec<Value> {
    let mut seen = BTreeSet::new();
    entries.map(|(v, _)| *v).filter(|v| seen.insert(*v)).collect()
}

fn leave_exports(group: &GroupState, member: Value, ifaces: &[Name]) -> BTreeSet<(Value, Name)> {
    group
        .exports
        .iter()
        .filter(|(v, i)| !(*v == member && ifaces.contains(i)))
        .cloned()
        .collect()
}

/// Everything an object can do next, or why it cannot.
pub fn object_status(table: &ClassTable, cfg: &Configuration, o: ObjId) -> Status {
    let Some(obj) = cfg.objects.get(&o) else {
        return Status::Faulted(format!("no object {o}"));
    };
    let frame = match obj.top() {
        None => return Status::Idle,
        Some(Process::Error(m)) => return Status::Errored(m.clone()),
        Some(Process::Frame(f)) => f,
    };
    match frame_status(table, cfg, o, obj, frame) {
        Ok(status) => status,
        Err(message) => Status::Faulted(message),
    }
}

fn frame_status(
    table: &ClassTable,
    cfg: &Configuration,
    o: ObjId,
    obj: &ObjectState,
    frame: &Frame,
) -> Result<Status, String> {
    let ready = |t: Transition| Ok(Status::Ready(vec![t]));
    let Some(head) = frame.body.first() else {
        let ret = frame
            .ret
            .as_ref()
            .ok_or("finished return-free process still on the stack")?;
        eval(obj, ret)?;
        let n = obj.stack.len();
        if n >= 2 {
            let below = obj.stack[n - 2].frame().and_then(|f| f.body.first());
            if is_waiting_for(below, o, &frame.method) {
                return ready(Transition::new(RuleName::Return2, o));
            }
        } else {
            let caller = cfg.objects.iter().find(|(id, other)| {
                **id != o
                    && is_waiting_for(
                        other.top_frame().and_then(|f| f.body.first()),
                        o,
                        &frame.method,
                    )
            });
            if let Some((id, _)) = caller {
                return ready(Transition::new(RuleName::Return1, o).with_partner(Value::Obj(*id)));
            }
        }
        return Ok(Status::Blocked(Blocker::NoCaller {
            method: frame.method.clone(),
        }));
    };

    match &head.kind {
        StmtKind::Skip => ready(Transition::new(RuleName::Skip, o)),
        StmtKind::Assign { target, expr } => {
            let assign = if frame.locals.contains_key(target) {
                RuleName::Assign1
            } else if obj.fields.contains_key(target) {
                RuleName::Assign2
            } else {
                return Err(format!("assignment to undeclared variable `{target}`"));
            };
            match expr {
                Expr::Var(y) => {
                    eval(obj, y)?;
                    ready(Transition::new(assign, o))
                }
                Expr::Lit(_) => ready(Transition::new(assign, o)),
                Expr::NewGroup => ready(
                    Transition::new(RuleName::NewGroup, o)
                        .with_partner(Value::Group(GroupId(cfg.next_group))),
                ),
                Expr::New { class, args } => {
                    eval_all(obj, args)?;
                    if table.class(class).is_none() {
                        return Err(format!("undeclared class `{class}`"));
                    }
                    ready(
                        Transition::new(RuleName::NewObject, o)
                            .with_partner(Value::Obj(ObjId(cfg.next_object))),
                    )
                }
                Expr::Call {
                    target,
                    method,
                    args,
                } => {
                    eval_all(obj, args)?;
                    call_status(table, cfg, o, operand(obj, target)?, method)
                }
                Expr::Acquire {
                    iface,
                    within,
                    except,
                } => {
                    let excluded = eval_all(obj, except)?;
                    let (group, entries): (Option<GroupId>, Vec<&(Value, Name)>) = match within {
                        Some(y) => {
                            let g = group_operand(cfg, obj, y)?;
                            (Some(g), cfg.groups[&g].exports.iter().collect())
                        }
                        None => (None, cfg.all_exports().collect()),
                    };
                    let choices = distinct_values(entries.into_iter().filter(|(v, j)| {
                        iface_le(table, j, iface) && !excluded.contains(v)
                    }));
                    if choices.is_empty() {
                        return Ok(Status::Blocked(Blocker::NoMatch {
                            iface: iface.clone(),
                            within: group,
                        }));
                    }
                    Ok(Status::Ready(
                        choices
                            .into_iter()
                            .map(|v| {
                                let t = Transition::new(RuleName::Acquire, o).with_choice(v);
                                match group {
                                    Some(g) => t.with_partner(Value::Group(g)),
                                    None => t,
                                }
                            })
                            .collect(),
                    ))
                }
                Expr::Wait { callee, method } => Ok(Status::Blocked(Blocker::AwaitingReturn {
                    callee: *callee,
                    method: method.clone(),
                })),
            }
        }
        StmtKind::If { cond, .. } => match eval(obj, cond)? {
            Value::Bool(true) => ready(Transition::new(RuleName::Cond1, o)),
            Value::Bool(false) => ready(Transition::new(RuleName::Cond2, o)),
            other => Err(format!("condition `{cond}` holds {other}, not a Bool")),
        },
        StmtKind::While { .. } => ready(Transition::new(RuleName::While, o)),
        StmtKind::Join { member, group, .. } => {
            if !frame.locals.contains_key(group) {
                return Err(format!("join target `{group}` is not a local variable"));
            }
            let g = group_operand(cfg, obj, group)?;
            entity_operand(obj, member)?;
            ready(Transition::new(RuleName::Join, o).with_partner(Value::Group(g)))
        }
        StmtKind::Leave {
            member,
            group,
            ifaces,
            ..
        } => {
            let g = group_operand(cfg, obj, group)?;
            let v = entity_operand(obj, member)?;
            let state = &cfg.groups[&g];
            let after = leave_exports(state, v, ifaces);
            let rule = if intf(table, &state.exports) == intf(table, &after) {
                RuleName::Leave1
            } else {
                RuleName::Leave2
            };
            ready(Transition::new(rule, o).with_partner(Value::Group(g)))
        }
        StmtKind::SubtypeOf {
            subject,
            iface,
            alias,
            ..
        } => {
            if obj.lookup(alias).is_some() {
                return Err(format!("query variable `{alias}` is already bound"));
            }
            let v = entity_operand(obj, subject)?;
            let offers = match v {
                Value::Group(g) => cfg
                    .groups
                    .get(&g)
                    .ok_or_else(|| format!("no group {g}"))?
                    .exports
                    .iter()
                    .any(|(_, j)| iface_le(table, j, iface)),
                Value::Obj(x) => {
                    let class = cfg.class_of(x).ok_or_else(|| format!("no object {x}"))?;
                    is_subtype(table, &Type::Class(class.to_string()), &Type::Iface(iface.clone()))
                }
                _ => unreachable!("entity_operand returns entities"),
            };
            let rule = if offers {
                RuleName::Query1
            } else {
                RuleName::Query2
            };
            ready(Transition::new(rule, o).with_partner(v))
        }
        StmtKind::EndScope(alias) => Err(format!("unnormalized end of scope for `{alias}`")),
    }
}

fn call_status(
    table: &ClassTable,
    cfg: &Configuration,
    o: ObjId,
    target: Value,
    method: &str,
) -> Result<Status, String> {
    match target {
        Value::Obj(callee) if callee == o => Ok(Status::Ready(vec![Transition::new(RuleName::Call2, o)])),
        Value::Obj(callee) => {
            let state = cfg
                .objects
                .get(&callee)
                .ok_or_else(|| format!("no object {callee}"))?;
            if state.is_idle() {
                Ok(Status::Ready(vec![
                    Transition::new(RuleName::Call1, o).with_partner(target)
                ]))
            } else {
                Ok(Status::Blocked(Blocker::CalleeBusy {
                    callee,
                    method: method.to_string(),
                }))
            }
        }
        Value::Group(g) => {
            let state = cfg.groups.get(&g).ok_or_else(|| format!("no group {g}"))?;
            let offers = |iface: &Name| {
                table
                    .mtd(&Type::Iface(iface.clone()))
                    .map(|sigs| sigs.iter().any(|s| s.name == method))
                    .unwrap_or(false)
            };
            let choices = distinct_values(state.exports.iter().filter(|(_, i)| offers(i)));
            if choices.is_empty() {
                return Ok(Status::Blocked(Blocker::NoExporter {
                    group: g,
                    method: method.to_string(),
                }));
            }
            Ok(Status::Ready(
                choices
                    .into_iter()
                    .map(|v| {
                        Transition::new(RuleName::Call3, o)
                            .with_partner(target)
                            .with_choice(v)
                    })
                    .collect(),
            ))
        }
        Value::Null => Err(format!("call of `{method}` on null")),
        Value::Bool(b) => Err(format!("call of `{method}` on {b}")),
    }
}

/// All enabled transitions, ordered by acting object and then by choice.
pub fn enabled(table: &ClassTable, cfg: &Configuration) -> Vec<Transition> {
    cfg.objects
        .keys()
        .flat_map(|&o| match object_status(table, cfg, o) {
            Status::Ready(ts) => ts,
            _ => Vec::new(),
        })
        .collect()
}

fn frame_mut(cfg: &mut Configuration, o: ObjId) -> &mut Frame {
    cfg.objects
        .get_mut(&o)
        .and_then(ObjectState::top_frame_mut)
        .expect("enabled transition has an active frame")
}

fn pop_head(cfg: &mut Configuration, o: ObjId) -> Stmt {
    frame_mut(cfg, o).body.remove(0)
}

fn push_front(cfg: &mut Configuration, o: ObjId, stmts: Vec<Stmt>) {
    frame_mut(cfg, o).body.splice(0..0, stmts);
}

/// Replaces the right-hand side of the head assignment.
fn rewrite_head(cfg: &mut Configuration, o: ObjId, f: impl FnOnce(&mut Expr)) {
    match frame_mut(cfg, o).body.first_mut().map(|s| &mut s.kind) {
        Some(StmtKind::Assign { expr, .. }) => f(expr),
        _ => unreachable!("rewrite of a non-assignment"),
    }
}

fn head_args(cfg: &Configuration, o: ObjId) -> Vec<Value> {
    let obj = &cfg.objects[&o];
    let args = match obj.top_frame().and_then(|f| f.body.first()).map(|s| &s.kind) {
        Some(StmtKind::Assign {
            expr: Expr::Call { args, .. } | Expr::New { args, .. },
            ..
        }) => args,
        _ => return Vec::new(),
    };
    args.iter()
        .map(|a| eval(obj, a).expect("arguments checked when enabled"))
        .collect()
}

/// Applies an enabled transition and returns the successor configuration.
pub fn apply(table: &ClassTable, cfg: &Configuration, t: &Transition) -> Result<Configuration, ApplyError> {
    match object_status(table, cfg, t.object) {
        Status::Ready(ts) if ts.contains(t) => {}
        _ => return Err(ApplyError::NotEnabled(t.clone())),
    }
    let mut next = cfg.clone();
    let o = t.object;
    match t.rule {
        RuleName::Skip => {
            pop_head(&mut next, o);
        }
        RuleName::Assign1 | RuleName::Assign2 => {
            let head = pop_head(&mut next, o);
            let StmtKind::Assign { target, expr } = head.kind else {
                unreachable!()
            };
            let obj = next.objects.get_mut(&o).expect("acting object");
            let value = match expr {
                Expr::Lit(v) => v,
                Expr::Var(y) => eval(obj, &y).expect("checked when enabled"),
                _ => unreachable!(),
            };
            let slot = if t.rule == RuleName::Assign1 {
                obj.top_frame_mut().and_then(|f| f.locals.get_mut(&target))
            } else {
                obj.fields.get_mut(&target)
            };
            slot.expect("target checked when enabled").value = value;
        }
        RuleName::NewGroup => {
            let g = next.fresh_group();
            next.groups.insert(g, GroupState::default());
            rewrite_head(&mut next, o, |e| *e = Expr::Lit(Value::Group(g)));
        }
        RuleName::NewObject => {
            let args = head_args(&next, o);
            let class = match next.objects[&o].top_frame().and_then(|f| f.body.first()).map(|s| &s.kind) {
                Some(StmtKind::Assign {
                    expr: Expr::New { class, .. },
                    ..
                }) => class.clone(),
                _ => unreachable!(),
            };
            let id = next.fresh_object();
            let (fields, process) = match atts(table, &class, &args, id) {
                Ok(fields) => (fields, init(table, &class)),
                Err(message) => (
                    std::iter::once((
                        "this".to_string(),
                        Slot::new(Type::Class(class.clone()), Value::Obj(id)),
                    ))
                    .collect(),
                    Process::Error(message),
                ),
            };
            next.objects.insert(
                id,
                ObjectState {
                    class,
                    fields,
                    stack: vec![process],
                },
            );
            normalize(&mut next, id);
            rewrite_head(&mut next, o, |e| *e = Expr::Lit(Value::Obj(id)));
        }
        RuleName::Cond1 | RuleName::Cond2 => {
            let head = pop_head(&mut next, o);
            let StmtKind::If {
                then_branch,
                else_branch,
                ..
            } = head.kind
            else {
                unreachable!()
            };
            let branch = if t.rule == RuleName::Cond1 {
                then_branch
            } else {
                else_branch
            };
            push_front(&mut next, o, branch);
        }
        RuleName::While => {
            let head = pop_head(&mut next, o);
            let pos = head.pos;
            let StmtKind::While { cond, body } = &head.kind else {
                unreachable!()
            };
            let mut then_branch = body.clone();
            then_branch.push(head.clone());
            let unfolded = Stmt::new(
                StmtKind::If {
                    cond: cond.clone(),
                    then_branch,
                    else_branch: vec![Stmt::new(StmtKind::Skip, pos)],
                },
                pos,
            );
            push_front(&mut next, o, vec![unfolded]);
        }
        RuleName::Call1 | RuleName::Call2 => {
            let args = head_args(&next, o);
            let callee = match t.partner {
                Some(Value::Obj(c)) => c,
                _ => o,
            };
            let mut method = String::new();
            rewrite_head(&mut next, o, |e| {
                let Expr::Call { method: m, .. } = e else {
                    unreachable!()
                };
                method = m.clone();
                *e = Expr::Wait {
                    callee,
                    method: m.clone(),
                };
            });
            let class = next.objects[&callee].class.clone();
            let process = bind(table, &method, &class, &args);
            next.objects
                .get_mut(&callee)
                .expect("callee exists")
                .stack
                .push(process);
        }
        RuleName::Call3 => {
            let chosen = t.choice.expect("group call carries its exporter");
            rewrite_head(&mut next, o, |e| {
                if let Expr::Call { target, .. } = e {
                    *target = Operand::Value(chosen);
                }
            });
        }
        RuleName::Return1 | RuleName::Return2 => {
            let obj = next.objects.get_mut(&o).expect("acting object");
            let ret = obj.top_frame().and_then(|f| f.ret.clone()).expect("return");
            let value = eval(obj, &ret).expect("checked when enabled");
            obj.stack.pop();
            let caller = match t.partner {
                Some(Value::Obj(c)) => c,
                _ => o,
            };
            rewrite_head(&mut next, caller, |e| *e = Expr::Lit(value));
        }
        RuleName::Join => {
            let head = pop_head(&mut next, o);
            let StmtKind::Join {
                member,
                group,
                ifaces,
            } = head.kind
            else {
                unreachable!()
            };
            let obj = next.objects.get_mut(&o).expect("acting object");
            let v = eval(obj, &member).expect("checked when enabled");
            let slot = obj
                .top_frame_mut()
                .and_then(|f| f.locals.get_mut(&group))
                .expect("join target is local");
            let Value::Group(g) = slot.value else {
                unreachable!()
            };
            let mut known = known_ifaces(&slot.ty);
            known.extend(ifaces.iter().cloned());
            slot.ty = Type::Group(known);
            let exports = &mut next.groups.get_mut(&g).expect("group exists").exports;
            for iface in ifaces {
                exports.insert((v, iface));
            }
        }
        RuleName::Acquire => {
            let chosen = t.choice.expect("discovery carries its choice");
            rewrite_head(&mut next, o, |e| *e = Expr::Lit(chosen));
        }
        RuleName::Leave1 | RuleName::Leave2 => {
            let head = pop_head(&mut next, o);
            let StmtKind::Leave {
                member,
                ifaces,
                then_branch,
                else_branch,
                ..
            } = head.kind
            else {
                unreachable!()
            };
            let Some(Value::Group(g)) = t.partner else {
                unreachable!()
            };
            if t.rule == RuleName::Leave1 {
                let v = eval(&next.objects[&o], &member).expect("checked when enabled");
                let group = next.groups.get_mut(&g).expect("group exists");
                group.exports = leave_exports(group, v, &ifaces);
                push_front(&mut next, o, then_branch);
            } else {
                push_front(&mut next, o, else_branch);
            }
        }
        RuleName::Query1 | RuleName::Query2 => {
            let head = pop_head(&mut next, o);
            let pos = head.pos;
            let StmtKind::SubtypeOf {
                subject,
                iface,
                alias,
                then_branch,
                else_branch,
            } = head.kind
            else {
                unreachable!()
            };
            if t.rule == RuleName::Query1 {
                let obj = next.objects.get_mut(&o).expect("acting object");
                let slot = obj.lookup(&subject).expect("checked when enabled").clone();
                let mut known = known_ifaces(&slot.ty);
                known.insert(iface);
                obj.top_frame_mut()
                    .expect("active frame")
                    .locals
                    .insert(alias.clone(), Slot::new(Type::Group(known), slot.value));
                let mut branch = then_branch;
                branch.push(Stmt::new(StmtKind::EndScope(alias), pos));
                push_front(&mut next, o, branch);
            } else {
                push_front(&mut next, o, else_branch);
            }
        }
    }
    normalize(&mut next, o);
    if let Some(Value::Obj(p)) = t.partner {
        normalize(&mut next, p);
    }
    Ok(next)
}

/// Administrative clean-up after every step: drops finished return-free
/// processes and closes the scope of query variables whose block ended.
pub(crate) fn normalize(cfg: &mut Configuration, o: ObjId) {
    let Some(obj) = cfg.objects.get_mut(&o) else {
        return;
    };
    loop {
        let Some(Process::Frame(frame)) = obj.stack.last_mut() else {
            return;
        };
        if let Some(StmtKind::EndScope(alias)) = frame.body.first().map(|s| &s.kind) {
            let alias = alias.clone();
            frame.body.remove(0);
            frame.locals.remove(&alias);
        } else if frame.body.is_empty() && frame.ret.is_none() {
            obj.stack.pop();
        } else {
            return;
        }
    }
}
