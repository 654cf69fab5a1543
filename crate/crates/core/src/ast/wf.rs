//! Well-formedness of a parsed program: declared names, distinct names,
//! an acyclic extends-relation and unambiguous inherited signatures.

use super::{
    walk_stmts, ClassTable, Expr, Name, Pos, Program, Stmt, StmtKind, Type, VarDecl, MAIN_CLASS,
};
use crate::typecheck::{Rule, TypeError};
use std::collections::{BTreeMap, BTreeSet};

pub fn check_well_formed(program: &Program) -> Vec<TypeError> {
    let mut wf = Wf {
        program,
        errors: Vec::new(),
    };
    wf.declarations();
    let cyclic = wf.cycles();
    wf.types_declared();
    wf.distinct_names();
    if !cyclic && wf.errors.is_empty() {
        wf.inherited_signatures();
    }
    wf.errors
}

struct Wf<'a> {
    program: &'a Program,
    errors: Vec<TypeError>,
}

impl Wf<'_> {
    fn error(&mut self, rule: Rule, pos: Pos, message: String) {
        self.errors.push(TypeError::new(rule, pos, message));
    }

    fn iface_declared(&self, name: &str) -> bool {
        name == "Any" || self.program.interface(name).is_some()
    }

    fn declarations(&mut self) {
        let mut seen = BTreeSet::new();
        for decl in &self.program.interfaces {
            if !seen.insert(decl.name.as_str()) {
                self.error(
                    Rule::WfDuplicate,
                    decl.pos,
                    format!("interface `{}` declared twice", decl.name),
                );
            }
        }
        let mut seen = BTreeSet::new();
        for decl in &self.program.classes {
            if decl.name == MAIN_CLASS {
                self.error(
                    Rule::WfReserved,
                    decl.pos,
                    format!("class name `{MAIN_CLASS}` is reserved for the main block"),
                );
            }
            if !seen.insert(decl.name.as_str()) {
                self.error(
                    Rule::WfDuplicate,
                    decl.pos,
                    format!("class `{}` declared twice", decl.name),
                );
            }
        }
        for decl in &self.program.interfaces {
            for parent in &decl.extends {
                if !self.iface_declared(parent) {
                    self.error(
                        Rule::WfUndeclared,
                        decl.pos,
                        format!("`{}` extends undeclared interface `{parent}`", decl.name),
                    );
                }
            }
        }
        for decl in &self.program.classes {
            for iface in &decl.implements {
                if !self.iface_declared(iface) {
                    self.error(
                        Rule::WfUndeclared,
                        decl.pos,
                        format!("`{}` implements undeclared interface `{iface}`", decl.name),
                    );
                }
            }
        }
    }

    /// Reports every cycle of the extends-relation once. Returns whether any
    /// cycle exists.
    fn cycles(&mut self) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Active,
            Done,
        }
        let names: Vec<&Name> = self.program.interfaces.iter().map(|d| &d.name).collect();
        let mut marks: BTreeMap<&str, Mark> =
            names.iter().map(|n| (n.as_str(), Mark::Fresh)).collect();
        let mut found = Vec::new();

        fn visit<'p>(
            program: &'p Program,
            name: &'p str,
            marks: &mut BTreeMap<&'p str, Mark>,
            path: &mut Vec<&'p str>,
            found: &mut Vec<(Vec<&'p str>, Pos)>,
        ) {
            let Some(decl) = program.interface(name) else {
                return;
            };
            marks.insert(name, Mark::Active);
            path.push(name);
            for parent in &decl.extends {
                match marks.get(parent.as_str()).copied() {
                    Some(Mark::Fresh) => visit(program, parent, marks, path, found),
                    Some(Mark::Active) => {
                        let start = path.iter().position(|p| *p == parent).unwrap_or(0);
                        let mut cycle: Vec<&str> = path[start..].to_vec();
                        cycle.push(parent);
                        found.push((cycle, decl.pos));
                    }
                    _ => {}
                }
            }
            path.pop();
            marks.insert(name, Mark::Done);
        }

        for name in names {
            if marks.get(name.as_str()) == Some(&Mark::Fresh) {
                visit(self.program, name, &mut marks, &mut Vec::new(), &mut found);
            }
        }
        let any = !found.is_empty();
        for (cycle, pos) in found {
            self.error(
                Rule::WfCycle,
                pos,
                format!("cyclic extends: {}", cycle.join(" -> ")),
            );
        }
        any
    }

    fn check_type(&mut self, ty: &Type, pos: Pos, what: &str) {
        match ty {
            Type::Iface(name) if !self.iface_declared(name) => self.error(
                Rule::WfUndeclared,
                pos,
                format!("{what} uses undeclared interface `{name}`"),
            ),
            Type::Group(set) => {
                for name in set {
                    if self.program.interface(name).is_none() {
                        self.error(
                            Rule::WfUndeclared,
                            pos,
                            format!("{what} uses undeclared interface `{name}` in a group type"),
                        );
                    }
                }
            }
            _ => {}
        }
    }

    fn check_decls(&mut self, decls: &[VarDecl], pos: Pos, what: &str) {
        for decl in decls {
            self.check_type(&decl.ty, pos, &format!("{what} `{}`", decl.name));
        }
    }

    fn types_declared(&mut self) {
        let program = self.program;
        for decl in &program.interfaces {
            for sig in &decl.signatures {
                self.check_type(&sig.ret, sig.pos, &format!("method `{}`", sig.name));
                self.check_decls(&sig.params, sig.pos, "parameter");
            }
        }
        for class in &program.classes {
            self.check_decls(&class.params, class.pos, "class parameter");
            self.check_decls(&class.fields, class.pos, "field");
            self.check_decls(&class.init.locals, class.pos, "local");
            self.check_body(&class.init.body);
            for method in &class.methods {
                let sig = &method.sig;
                self.check_type(&sig.ret, sig.pos, &format!("method `{}`", sig.name));
                self.check_decls(&sig.params, sig.pos, "parameter");
                self.check_decls(&method.locals, sig.pos, "local");
                self.check_body(&method.body);
            }
        }
        self.check_decls(&program.main.locals, Pos::new(1, 1), "local");
        self.check_body(&program.main.body);
    }

    fn check_body(&mut self, body: &[Stmt]) {
        let mut found: Vec<(Pos, String)> = Vec::new();
        let ifaces_ok = |names: &[Name]| -> Option<Name> {
            names.iter().find(|n| !self.iface_declared(n)).cloned()
        };
        walk_stmts(body, &mut |stmt| match &stmt.kind {
            StmtKind::Assign { expr, .. } => match expr {
                Expr::New { class, .. } if self.program.class(class).is_none() => {
                    found.push((stmt.pos, format!("undeclared class `{class}`")))
                }
                Expr::Acquire { iface, .. } if !self.iface_declared(iface) => {
                    found.push((stmt.pos, format!("undeclared interface `{iface}`")))
                }
                _ => {}
            },
            StmtKind::Join { ifaces, .. } | StmtKind::Leave { ifaces, .. } => {
                if let Some(name) = ifaces_ok(ifaces) {
                    found.push((stmt.pos, format!("undeclared interface `{name}`")));
                }
            }
            StmtKind::SubtypeOf { iface, .. } if !self.iface_declared(iface) => {
                found.push((stmt.pos, format!("undeclared interface `{iface}`")))
            }
            _ => {}
        });
        for (pos, message) in found {
            self.error(Rule::WfUndeclared, pos, message);
        }
    }

    fn distinct(&mut self, names: impl IntoIterator<Item = (Name, Pos)>, what: &str) {
        let mut seen = BTreeSet::new();
        for (name, pos) in names {
            if name == "this" {
                self.error(Rule::WfReserved, pos, format!("`this` cannot name a {what}"));
            } else if !seen.insert(name.clone()) {
                self.error(Rule::WfDuplicate, pos, format!("{what} `{name}` declared twice"));
            }
        }
    }

    fn distinct_names(&mut self) {
        let program = self.program;
        for decl in &program.interfaces {
            self.distinct(
                decl.signatures.iter().map(|s| (s.name.clone(), s.pos)),
                "method",
            );
            for sig in &decl.signatures {
                self.distinct(sig.params.iter().map(|p| (p.name.clone(), sig.pos)), "parameter");
            }
        }
        for class in &program.classes {
            let pos = class.pos;
            self.distinct(
                class
                    .params
                    .iter()
                    .chain(&class.fields)
                    .map(|d| (d.name.clone(), pos)),
                "field or class parameter",
            );
            self.distinct(class.init.locals.iter().map(|d| (d.name.clone(), pos)), "local");
            self.distinct(
                class.methods.iter().map(|m| (m.sig.name.clone(), m.sig.pos)),
                "method",
            );
            for method in &class.methods {
                let pos = method.sig.pos;
                self.distinct(
                    method
                        .sig
                        .params
                        .iter()
                        .chain(&method.locals)
                        .map(|d| (d.name.clone(), pos)),
                    "parameter or local",
                );
            }
        }
        self.distinct(
            program.main.locals.iter().map(|d| (d.name.clone(), Pos::new(1, 1))),
            "local",
        );
    }

    fn inherited_signatures(&mut self) {
        let table = ClassTable::build(self.program.clone());
        for decl in &self.program.interfaces {
            let sigs = match table.mtd(&Type::Iface(decl.name.clone())) {
                Ok(sigs) => sigs,
                Err(e) => {
                    self.error(Rule::WfUndeclared, decl.pos, e.to_string());
                    continue;
                }
            };
            let mut reported = BTreeSet::new();
            for (i, a) in sigs.iter().enumerate() {
                if sigs[i + 1..].iter().any(|b| b.name == a.name && !b.same_shape(a))
                    && reported.insert(a.name.clone())
                {
                    self.error(
                        Rule::AmbiguousSignature,
                        decl.pos,
                        format!(
                            "interface `{}` inherits conflicting signatures for `{}`",
                            decl.name, a.name
                        ),
                    );
                }
            }
        }
    }
}
