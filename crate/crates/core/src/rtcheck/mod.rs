//! The runtime type system: typing of whole configurations, and a harness
//! that re-checks every configuration a program can reach.

mod harness;

pub use harness::{check_program_runtime, HarnessReport, HarnessViolation, Mode, SubjectReduction};

use crate::ast::{ClassTable, ObjId, Type, Value, MAIN_CLASS};
use crate::runtime::{Binding, Configuration, Frame, Process};
use crate::typecheck::{is_subtype, Checker, RuntimeTyping, Scope, TypingContext};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Types of object and group identities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuntimeEnv(pub BTreeMap<Value, Type>);

impl RuntimeEnv {
    pub fn get(&self, v: &Value) -> Option<&Type> {
        self.0.get(v)
    }

    pub fn insert(&mut self, v: Value, ty: Type) {
        self.0.insert(v, ty);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Value, &Type)> {
        self.0.iter()
    }
}

/// Objects get their class; groups get exactly the interfaces they export.
pub fn canonical_env(cfg: &Configuration) -> RuntimeEnv {
    let objects = cfg
        .objects
        .iter()
        .map(|(o, obj)| (Value::Obj(*o), Type::Class(obj.class.clone())));
    let groups = cfg.groups.iter().map(|(g, state)| {
        let ifaces = state.exports.iter().map(|(_, i)| i.clone());
        (Value::Group(*g), Type::group(ifaces))
    });
    RuntimeEnv(objects.chain(groups).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RtRule {
    #[serde(rename = "RTT-Config")]
    Config,
    #[serde(rename = "RTT-Group")]
    Group,
    #[serde(rename = "RTT-Exp")]
    Exp,
    #[serde(rename = "RTT-Object")]
    Object,
    #[serde(rename = "RTT-Sub")]
    Sub,
    #[serde(rename = "RTT-Stack")]
    Stack,
    #[serde(rename = "RTT-Proc")]
    Proc,
    #[serde(rename = "RTT-Wait")]
    Wait,
    #[serde(rename = "RTT-Def")]
    Def,
    #[serde(rename = "RTT-Idle")]
    Idle,
    #[serde(rename = "RTT-Empty")]
    Empty,
}

impl RtRule {
    pub fn label(self) -> &'static str {
        match self {
            RtRule::Config => "RTT-Config",
            RtRule::Group => "RTT-Group",
            RtRule::Exp => "RTT-Exp",
            RtRule::Object => "RTT-Object",
            RtRule::Sub => "RTT-Sub",
            RtRule::Stack => "RTT-Stack",
            RtRule::Proc => "RTT-Proc",
            RtRule::Wait => "RTT-Wait",
            RtRule::Def => "RTT-Def",
            RtRule::Idle => "RTT-Idle",
            RtRule::Empty => "RTT-Empty",
        }
    }
}

impl fmt::Display for RtRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RtViolation {
    pub rule: RtRule,
    pub location: String,
    pub message: String,
}

impl fmt::Display for RtViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.location, self.rule, self.message)
    }
}

struct Typing<'a> {
    table: &'a ClassTable,
    env: &'a RuntimeEnv,
    cfg: &'a Configuration,
}

impl RuntimeTyping for Typing<'_> {
    fn value_type(&self, value: &Value) -> Option<Type> {
        self.env.get(value).cloned()
    }

    fn wait_type(&self, callee: ObjId, method: &str) -> Result<Type, String> {
        let class = self
            .cfg
            .class_of(callee)
            .ok_or_else(|| format!("wait on unknown object {callee}"))?;
        self.table
            .ret_type(&Type::Class(class.to_string()), method)
            .map_err(|e| e.to_string())
    }
}

struct Checking<'a> {
    table: &'a ClassTable,
    env: &'a RuntimeEnv,
    cfg: &'a Configuration,
    out: Vec<RtViolation>,
}

impl Checking<'_> {
    fn report(&mut self, rule: RtRule, location: impl Into<String>, message: impl Into<String>) {
        self.out.push(RtViolation {
            rule,
            location: location.into(),
            message: message.into(),
        });
    }

    fn exists(&self, v: &Value) -> bool {
        match v {
            Value::Obj(o) => self.cfg.objects.contains_key(o),
            Value::Group(g) => self.cfg.groups.contains_key(g),
            _ => true,
        }
    }

    /// Whether `v` inhabits `ty`. Null inhabits every reference type.
    fn inhabits(&self, v: &Value, ty: &Type) -> Result<bool, String> {
        match v {
            Value::Bool(_) => Ok(*ty == Type::Bool),
            Value::Null => Ok(ty.is_reference()),
            _ => match self.env.get(v) {
                Some(vt) => Ok(is_subtype(self.table, vt, ty)),
                None => Err(format!("`{v}` has no runtime type")),
            },
        }
    }

    fn binding(&mut self, binding: &Binding, location: &str) {
        for (name, slot) in binding {
            let at = format!("{location} `{name}`");
            if !self.exists(&slot.value) {
                self.report(RtRule::Config, at, format!("dangling reference to {}", slot.value));
                continue;
            }
            match self.inhabits(&slot.value, &slot.ty) {
                Ok(true) => {}
                Ok(false) => self.report(
                    RtRule::Sub,
                    at,
                    format!("value {} does not inhabit {}", slot.value, slot.ty),
                ),
                Err(m) => self.report(RtRule::Config, at, m),
            }
        }
    }

    fn env_domain(&mut self) {
        let ids = self
            .cfg
            .objects
            .keys()
            .map(|o| Value::Obj(*o))
            .chain(self.cfg.groups.keys().map(|g| Value::Group(*g)));
        for v in ids {
            if self.env.get(&v).is_none() {
                self.report(RtRule::Config, v.to_string(), "missing from the runtime environment");
            }
        }
    }

    fn groups(&mut self) {
        for (g, state) in &self.cfg.groups {
            let Some(Type::Group(declared)) = self.env.get(&Value::Group(*g)).cloned() else {
                if self.env.get(&Value::Group(*g)).is_some() {
                    self.report(RtRule::Group, g.to_string(), "environment entry is not a group type");
                }
                continue;
            };
            for (v, iface) in &state.exports {
                let at = format!("{g} export ({v}, {iface})");
                if !declared.contains(iface) {
                    self.report(RtRule::Exp, at.clone(), format!("{iface} is not part of {}", Type::Group(declared.clone())));
                }
                if !self.exists(v) {
                    self.report(RtRule::Config, at, format!("dangling exporter {v}"));
                    continue;
                }
                match self.inhabits(v, &Type::iface(iface.clone())) {
                    Ok(true) => {}
                    Ok(false) => self.report(RtRule::Exp, at, format!("{v} does not implement {iface}")),
                    Err(m) => self.report(RtRule::Exp, at, m),
                }
            }
        }
    }

    fn frame(&mut self, o: ObjId, class: &str, fields: &Binding, index: usize, frame: &Frame, top: bool) {
        let location = format!("{o} process {index} ({})", frame.method);
        self.binding(&frame.locals, &location);
        if !top && !matches!(
            frame.body.first().map(|s| &s.kind),
            Some(crate::ast::StmtKind::Assign {
                expr: crate::ast::Expr::Wait { .. },
                ..
            })
        ) {
            self.report(RtRule::Stack, location.clone(), "suspended process is not waiting for a return");
        }
        let ctx: TypingContext = fields
            .iter()
            .chain(&frame.locals)
            .map(|(n, s)| (n.clone(), s.ty.clone()))
            .collect();
        let scope = Scope::new(ctx, frame.locals.keys().cloned());
        let typing = Typing {
            table: self.table,
            env: self.env,
            cfg: self.cfg,
        };
        let checker = Checker::with_runtime(self.table, &typing);
        let result = match &frame.ret {
            None => checker.check_seq(&scope, &frame.body).map(|_| ()),
            Some(x) => {
                let pos = frame.body.first().map(|s| s.pos).unwrap_or_default();
                match self.table.ret_type(&Type::Class(class.to_string()), &frame.method) {
                    Ok(ret_ty) => checker.check_returning(&scope, &frame.body, x, &ret_ty, pos),
                    Err(e) => {
                        self.report(RtRule::Proc, location, e.to_string());
                        return;
                    }
                }
            }
        };
        if let Err(e) = result {
            let rule = if e.rule == crate::typecheck::Rule::RttWait {
                RtRule::Wait
            } else {
                RtRule::Proc
            };
            self.report(rule, location, format!("{}: {}", e.rule, e.message));
        }
    }

    fn objects(&mut self) {
        for (&o, obj) in &self.cfg.objects {
            let expected = Type::Class(obj.class.clone());
            match self.env.get(&Value::Obj(o)) {
                Some(t) if *t == expected => {}
                Some(t) => self.report(RtRule::Object, o.to_string(), format!("environment says {t}, class is {}", obj.class)),
                None => {}
            }
            if obj.class != MAIN_CLASS {
                match obj.fields.get("this") {
                    Some(slot) if slot.value == Value::Obj(o) && slot.ty == expected => {}
                    _ => self.report(RtRule::Object, o.to_string(), "`this` is not bound to the object itself"),
                }
            }
            self.binding(&obj.fields, &format!("{o} field"));
            let depth = obj.stack.len();
            for (i, process) in obj.stack.iter().enumerate() {
                match process {
                    Process::Frame(f) => self.frame(o, &obj.class, &obj.fields, i, f, i + 1 == depth),
                    Process::Error(m) => {
                        self.report(RtRule::Proc, format!("{o} process {i}"), format!("error process: {m}"))
                    }
                }
            }
        }
    }
}

/// Every premise of the runtime typing judgement that fails for `cfg`
/// under `env`. Empty means the configuration is well typed.
pub fn check_config(table: &ClassTable, env: &RuntimeEnv, cfg: &Configuration) -> Vec<RtViolation> {
    let mut c = Checking {
        table,
        env,
        cfg,
        out: Vec::new(),
    };
    c.env_domain();
    c.groups();
    c.objects();
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::GroupId;
    use crate::parser::parse;
    use crate::runtime::{apply, enabled, initial_configuration, Slot};
    use crate::typecheck::check_program;

    fn table(src: &str) -> ClassTable {
        check_program(parse(src).unwrap()).unwrap()
    }

    fn check(table: &ClassTable, cfg: &Configuration) -> Vec<RtViolation> {
        check_config(table, &canonical_env(cfg), cfg)
    }

    fn drive_until(table: &ClassTable, mut cfg: Configuration, stop: impl Fn(&Configuration) -> bool) -> Configuration {
        while !stop(&cfg) {
            let ts = enabled(table, &cfg);
            cfg = apply(table, &cfg, &ts[0]).unwrap();
        }
        cfg
    }

    const CALLS: &str = r#"
interface D { Bool get(); }
class A() implements D { Bool get() { Bool r; r = true; return r; } }
{ D a; Bool b; a = new A(); b = a.get(); }"#;

    #[test]
    fn empty_group_env() {
        let mut cfg = Configuration::default();
        cfg.groups.insert(GroupId(0), Default::default());
        let env = canonical_env(&cfg);
        assert_eq!(env.get(&Value::Group(GroupId(0))), Some(&Type::group(Vec::<String>::new())));
    }

    #[test]
    fn env_covers_every_id() {
        let t = table(CALLS);
        let cfg = drive_until(&t, initial_configuration(&t), |c| c.objects.len() == 2);
        let env = canonical_env(&cfg);
        assert_eq!(env.0.len(), 2);
        assert_eq!(env.get(&Value::Obj(ObjId(1))), Some(&Type::Class("A".into())));
    }

    #[test]
    fn initial_and_mid_call_states_check() {
        let t = table(CALLS);
        let mut cfg = initial_configuration(&t);
        assert!(check(&t, &cfg).is_empty());
        loop {
            let ts = enabled(&t, &cfg);
            let Some(first) = ts.first() else { break };
            cfg = apply(&t, &cfg, first).unwrap();
            assert_eq!(check(&t, &cfg), Vec::new());
        }
    }

    #[test]
    fn bool_in_interface_field_is_rtt_sub() {
        let t = table(CALLS);
        let mut cfg = drive_until(&t, initial_configuration(&t), |c| c.objects.len() == 2);
        let main = cfg.objects.get_mut(&ObjId(0)).unwrap();
        main.fields.insert("bad".into(), Slot::new(Type::iface("D"), Value::Bool(true)));
        let v = check(&t, &cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, RtRule::Sub);
    }

    #[test]
    fn wait_against_wrong_stored_type_is_flagged() {
        let src = r#"
interface D { Group<> get(); }
class A() implements D { Group<> get() { Group<> r; r = newgroup; return r; } }
{ D a; Group<> b; a = new A(); b = a.get(); }"#;
        let t = table(src);
        let mut cfg = drive_until(&t, initial_configuration(&t), |c| {
            c.objects.get(&ObjId(1)).is_some_and(|o| !o.is_idle())
        });
        assert!(check(&t, &cfg).is_empty());
        // Retype the waiting variable so the pending result no longer fits.
        let main = cfg.objects.get_mut(&ObjId(0)).unwrap();
        main.top_frame_mut().unwrap().locals.get_mut("b").unwrap().ty = Type::Bool;
        let rules: Vec<RtRule> = check(&t, &cfg).into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&RtRule::Wait), "{rules:?}");
    }

    #[test]
    fn error_process_is_a_violation() {
        let t = table(CALLS);
        let mut cfg = initial_configuration(&t);
        cfg.objects
            .get_mut(&ObjId(0))
            .unwrap()
            .stack
            .push(Process::Error("no such method".into()));
        let v = check(&t, &cfg);
        assert!(v.iter().any(|v| v.rule == RtRule::Proc));
    }

    #[test]
    fn exporter_must_implement_the_interface() {
        let src = "interface D {} interface E {} class A() implements D {} { skip; }";
        let t = table(src);
        let mut cfg = initial_configuration(&t);
        let a = cfg.fresh_object();
        cfg.objects.insert(
            a,
            crate::runtime::ObjectState {
                class: "A".into(),
                fields: crate::runtime::atts(&t, "A", &[], a).unwrap(),
                stack: Vec::new(),
            },
        );
        let g = cfg.fresh_group();
        let mut state = crate::runtime::GroupState::default();
        state.exports.insert((Value::Obj(a), "E".into()));
        cfg.groups.insert(g, state);
        let v = check(&t, &cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, RtRule::Exp);
    }

    #[test]
    fn check_is_pure() {
        let t = table(CALLS);
        let cfg = drive_until(&t, initial_configuration(&t), |c| c.objects.len() == 2);
        assert_eq!(check(&t, &cfg), check(&t, &cfg));
    }
}
