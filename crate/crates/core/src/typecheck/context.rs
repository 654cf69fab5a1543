use super::subtype::{is_strict_subtype, is_subtype};
use crate::ast::{ClassTable, Name, Type};
use std::collections::BTreeMap;

/// Finite map from variable names to types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingContext(BTreeMap<Name, Type>);

/// Local-variable type upgrades produced by joins, threaded through
/// sequential composition.
pub type Effect = TypingContext;

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Type> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn insert(&mut self, name: impl Into<Name>, ty: Type) {
        self.0.insert(name.into(), ty);
    }

    pub fn remove(&mut self, name: &str) -> Option<Type> {
        self.0.remove(name)
    }

    pub fn with(mut self, name: impl Into<Name>, ty: Type) -> Self {
        self.insert(name, ty);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.0.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    /// `self ∘ other`: bindings of `other` win.
    pub fn compose(&self, other: &TypingContext) -> TypingContext {
        let mut out = self.clone();
        for (name, ty) in &other.0 {
            out.0.insert(name.clone(), ty.clone());
        }
        out
    }

    /// Keeps only the bindings whose names satisfy `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&str) -> bool) -> TypingContext {
        TypingContext(
            self.0
                .iter()
                .filter(|(n, _)| keep(n))
                .map(|(n, t)| (n.clone(), t.clone()))
                .collect(),
        )
    }

    /// `self ∩ other` over the names bound in both contexts.
    pub fn intersect(&self, table: &ClassTable, other: &TypingContext) -> TypingContext {
        TypingContext(
            self.0
                .iter()
                .filter_map(|(name, a)| {
                    other
                        .0
                        .get(name)
                        .map(|b| (name.clone(), best_common_supertype(table, a, b)))
                })
                .collect(),
        )
    }
}

impl<N: Into<Name>> FromIterator<(N, Type)> for TypingContext {
    fn from_iter<I: IntoIterator<Item = (N, Type)>>(iter: I) -> Self {
        TypingContext(iter.into_iter().map(|(n, t)| (n.into(), t)).collect())
    }
}

/// Effect of a statement with two alternative continuations: both branch
/// effects are applied to `base`, intersected, and restricted to the names
/// either branch upgraded. Names unknown to `base` (scope-local aliases)
/// are dropped.
pub fn branch_effect(
    table: &ClassTable,
    base: &TypingContext,
    left: &Effect,
    right: &Effect,
) -> Effect {
    let l = base.compose(left);
    let r = base.compose(right);
    l.intersect(table, &r)
        .restrict(|n| base.contains(n) && (left.contains(n) || right.contains(n)))
}

/// The least type above both `a` and `b`. Group types meet by intersecting
/// their interface sets; otherwise the unique minimal common upper bound
/// among `Any` and the declared interfaces, falling back to `Any`.
pub fn best_common_supertype(table: &ClassTable, a: &Type, b: &Type) -> Type {
    if a == b {
        return a.clone();
    }
    if let (Type::Group(s1), Type::Group(s2)) = (a, b) {
        return Type::Group(s1.intersection(s2).cloned().collect());
    }
    if is_subtype(table, a, b) {
        return b.clone();
    }
    if is_subtype(table, b, a) {
        return a.clone();
    }
    let bounds: Vec<Type> = std::iter::once(Type::Any)
        .chain(table.iface_names().map(|n| Type::Iface(n.clone())))
        .filter(|t| is_subtype(table, a, t) && is_subtype(table, b, t))
        .collect();
    let minimal: Vec<&Type> = bounds
        .iter()
        .filter(|t| !bounds.iter().any(|u| is_strict_subtype(table, u, t)))
        .collect();
    match minimal.as_slice() {
        [only] => (*only).clone(),
        _ => Type::Any,
    }
}
