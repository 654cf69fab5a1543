//! Runtime configurations and the small-step semantics: one transition per
//! rule instance, scheduling policies, and exhaustive interleaving search.

mod config;
mod digest;
mod explore;
mod sched;
mod step;
mod trace;

pub use config::{Binding, Configuration, Frame, GroupState, ObjectState, Process, Slot};
pub use digest::{canonicalize, digest_hex, fingerprint};
pub use explore::{explore, ExploreOptions, ExploreReport, Finding, Monitor, NoMonitor, Violation};
pub use sched::{
    diagnose, run, run_observed, stmt_text, BlockedObject, Diagnosis, Outcome, Policy, RunResult,
    Step,
};
pub use step::{apply, enabled, object_status, ApplyError, Blocker, RuleName, Status, Transition};
pub use trace::{final_record, group_summaries, trace_json, GroupSummary, ObjectSummary, TraceFinal};

use crate::ast::{ClassTable, Name, ObjId, Type, Value, MAIN_CLASS};
use crate::typecheck::subtype::iface_lt;
use std::collections::BTreeSet;

/// Initial value of a variable of type `ty`.
pub fn default_value(ty: &Type) -> Value {
    match ty {
        Type::Bool => Value::Bool(false),
        _ => Value::Null,
    }
}

fn defaults<'a>(decls: impl IntoIterator<Item = &'a crate::ast::VarDecl>) -> Binding {
    decls
        .into_iter()
        .map(|d| (d.name.clone(), Slot::new(d.ty.clone(), default_value(&d.ty))))
        .collect()
}

/// Interfaces of an export set with redundant entries removed: an entry
/// is redundant when a strict subtype of it is also exported.
pub fn intf<'a>(table: &ClassTable, exports: impl IntoIterator<Item = &'a (Value, Name)>) -> BTreeSet<Name> {
    let all: BTreeSet<&Name> = exports.into_iter().map(|(_, i)| i).collect();
    all.iter()
        .filter(|i| !all.iter().any(|j| iface_lt(table, j, i)))
        .map(|i| (*i).clone())
        .collect()
}

/// Activation of `method` in `class` with actual arguments `args`.
pub fn bind(table: &ClassTable, method: &str, class: &str, args: &[Value]) -> Process {
    let Some(decl) = table.class(class).and_then(|c| c.method(method)) else {
        return Process::Error(format!("class `{class}` has no method `{method}`"));
    };
    if decl.sig.params.len() != args.len() {
        return Process::Error(format!(
            "`{class}.{method}` expects {} argument(s), got {}",
            decl.sig.params.len(),
            args.len()
        ));
    }
    let mut locals: Binding = decl
        .sig
        .params
        .iter()
        .zip(args)
        .map(|(p, v)| (p.name.clone(), Slot::new(p.ty.clone(), *v)))
        .collect();
    locals.extend(defaults(&decl.locals));
    Process::Frame(Frame {
        method: method.to_string(),
        locals,
        body: decl.body.clone(),
        ret: Some(decl.ret.clone()),
    })
}

/// Initial field binding of a new object: `this`, the class parameters
/// bound to `args`, and the fields at their defaults.
pub fn atts(table: &ClassTable, class: &str, args: &[Value], this: ObjId) -> Result<Binding, String> {
    let decl = table
        .class(class)
        .ok_or_else(|| format!("undeclared class `{class}`"))?;
    if decl.params.len() != args.len() {
        return Err(format!(
            "class `{class}` expects {} argument(s), got {}",
            decl.params.len(),
            args.len()
        ));
    }
    let mut fields = defaults(&decl.fields);
    for (p, v) in decl.params.iter().zip(args) {
        fields.insert(p.name.clone(), Slot::new(p.ty.clone(), *v));
    }
    fields.insert(
        "this".to_string(),
        Slot::new(Type::Class(class.to_string()), Value::Obj(this)),
    );
    Ok(fields)
}

/// The init-block of `class` as a return-free process.
pub fn init(table: &ClassTable, class: &str) -> Process {
    match table.class(class) {
        Some(decl) => Process::Frame(Frame {
            method: "init".to_string(),
            locals: defaults(&decl.init.locals),
            body: decl.init.body.clone(),
            ret: None,
        }),
        None => Process::Error(format!("undeclared class `{class}`")),
    }
}

/// One object of the synthetic main class running the main block.
pub fn initial_configuration(table: &ClassTable) -> Configuration {
    let main = &table.program().main;
    let mut config = Configuration::default();
    let id = config.fresh_object();
    config.objects.insert(
        id,
        ObjectState {
            class: MAIN_CLASS.to_string(),
            fields: Binding::new(),
            stack: vec![Process::Frame(Frame {
                method: "main".to_string(),
                locals: defaults(&main.locals),
                body: main.body.clone(),
                ret: None,
            })],
        },
    );
    step::normalize(&mut config, id);
    config
}
