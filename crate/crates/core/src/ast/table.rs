use super::{check_well_formed, ClassDecl, InterfaceDecl, Name, Program, Signature, Type, MAIN_CLASS};
use crate::typecheck::{subtype, TypeError};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("undeclared name `{0}`")]
    UndeclaredName(Name),
    #[error("no method `{method}` in `{ty}`")]
    NoSuchMethod { ty: Type, method: Name },
    #[error("method `{method}` has conflicting signatures in `{ty}`")]
    AmbiguousSignature { ty: Type, method: Name },
}

/// A well-formed program together with its interface and class tables and
/// the transitive closure of the extends-relation.
#[derive(Debug, Clone)]
pub struct ClassTable {
    program: Program,
    ifaces: BTreeMap<Name, usize>,
    classes: BTreeMap<Name, usize>,
    /// Strict superinterfaces of every declared interface (never `Any`).
    supers: BTreeMap<Name, BTreeSet<Name>>,
}

impl ClassTable {
    pub fn new(program: Program) -> Result<Self, Vec<TypeError>> {
        let errors = check_well_formed(&program);
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(Self::build(program))
    }

    /// Builds the tables without the well-formedness pass. Callers must
    /// guarantee an acyclic extends-relation.
    pub(crate) fn build(program: Program) -> Self {
        let ifaces = program
            .interfaces
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), i))
            .collect();
        let classes = program
            .classes
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), i))
            .collect();
        let mut table = ClassTable {
            program,
            ifaces,
            classes,
            supers: BTreeMap::new(),
        };
        let mut supers = BTreeMap::new();
        for decl in &table.program.interfaces {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&str> = decl.extends.iter().map(String::as_str).collect();
            while let Some(next) = stack.pop() {
                if next == "Any" || !seen.insert(next.to_string()) {
                    continue;
                }
                if let Some(parent) = table.iface(next) {
                    stack.extend(parent.extends.iter().map(String::as_str));
                }
            }
            supers.insert(decl.name.clone(), seen);
        }
        table.supers = supers;
        table
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn iface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.ifaces.get(name).map(|&i| &self.program.interfaces[i])
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.get(name).map(|&i| &self.program.classes[i])
    }

    pub fn has_iface(&self, name: &str) -> bool {
        self.ifaces.contains_key(name)
    }

    pub fn iface_names(&self) -> impl Iterator<Item = &Name> {
        self.ifaces.keys()
    }

    /// `sub` extends `sup` through one or more extends-edges.
    pub fn extends_strictly(&self, sub: &str, sup: &str) -> bool {
        self.supers.get(sub).is_some_and(|s| s.contains(sup))
    }

    /// All method signatures offered by a value of type `ty`.
    pub fn mtd(&self, ty: &Type) -> Result<Vec<Signature>, LookupError> {
        let mut out: Vec<Signature> = Vec::new();
        match ty {
            Type::Bool | Type::Any => {}
            Type::Iface(name) => self.collect_iface(name, &mut out)?,
            Type::Group(set) => {
                for name in set {
                    self.collect_iface(name, &mut out)?;
                }
            }
            Type::Class(name) if name == MAIN_CLASS => {}
            Type::Class(name) => {
                let class = self
                    .class(name)
                    .ok_or_else(|| LookupError::UndeclaredName(name.clone()))?;
                for method in &class.methods {
                    push_unique(&mut out, &method.sig);
                }
            }
        }
        Ok(out)
    }

    fn collect_iface(&self, name: &str, out: &mut Vec<Signature>) -> Result<(), LookupError> {
        let decl = self
            .iface(name)
            .ok_or_else(|| LookupError::UndeclaredName(name.to_string()))?;
        for sig in &decl.signatures {
            push_unique(out, sig);
        }
        for parent in &decl.extends {
            if parent != "Any" {
                self.collect_iface(parent, out)?;
            }
        }
        Ok(())
    }

    /// Some signature of `method` in `ty` accepts arguments of `args`.
    pub fn match_method(&self, method: &str, args: &[Type], ty: &Type) -> bool {
        let Ok(sigs) = self.mtd(ty) else {
            return false;
        };
        sigs.iter().any(|sig| {
            sig.name == method
                && sig.params.len() == args.len()
                && args
                    .iter()
                    .zip(sig.param_types())
                    .all(|(arg, param)| subtype::is_subtype(self, arg, param))
        })
    }

    pub fn ret_type(&self, ty: &Type, method: &str) -> Result<Type, LookupError> {
        let sigs = self.mtd(ty)?;
        let mut named = sigs.iter().filter(|s| s.name == method);
        let first = named.next().ok_or_else(|| LookupError::NoSuchMethod {
            ty: ty.clone(),
            method: method.to_string(),
        })?;
        if named.any(|s| !s.same_shape(first)) {
            return Err(LookupError::AmbiguousSignature {
                ty: ty.clone(),
                method: method.to_string(),
            });
        }
        Ok(first.ret.clone())
    }

    pub fn ptypes(&self, class: &str) -> Result<Vec<Type>, LookupError> {
        let decl = self
            .class(class)
            .ok_or_else(|| LookupError::UndeclaredName(class.to_string()))?;
        Ok(decl.params.iter().map(|p| p.ty.clone()).collect())
    }

    pub fn implements(&self, class: &str, iface: &str) -> Result<bool, LookupError> {
        if class == MAIN_CLASS {
            return Ok(iface == "Any");
        }
        let decl = self
            .class(class)
            .ok_or_else(|| LookupError::UndeclaredName(class.to_string()))?;
        if iface == "Any" {
            return Ok(true);
        }
        if !self.has_iface(iface) {
            return Err(LookupError::UndeclaredName(iface.to_string()));
        }
        Ok(decl
            .implements
            .iter()
            .any(|j| j == iface || self.extends_strictly(j, iface)))
    }
}

fn push_unique(out: &mut Vec<Signature>, sig: &Signature) {
    if !out.iter().any(|s| s.same_shape(sig)) {
        out.push(sig.clone());
    }
}
