//! Nominal subtyping over interfaces, group types and class types.
//!
//! `≺` is the transitive closure of `extends` with every interface below
//! `Any`; a group type sits below each interface one of its members reaches,
//! and below every group type whose demands it covers. Classes sit below the
//! interfaces they implement. `is_subtype` is the reflexive closure `≼`.

use crate::ast::{ClassTable, Type};

/// `a ≼ b`.
pub fn is_subtype(table: &ClassTable, a: &Type, b: &Type) -> bool {
    a == b || is_strict_subtype(table, a, b)
}

/// `a ≺ b`: `a ≼ b` and `a ≠ b`.
pub fn is_strict_subtype(table: &ClassTable, a: &Type, b: &Type) -> bool {
    if a == b {
        return false;
    }
    match (a, b) {
        (Type::Bool, _) | (_, Type::Bool) => false,
        (_, Type::Any) => true,
        (Type::Any, _) => false,
        (Type::Iface(i), Type::Iface(j)) => table.extends_strictly(i, j),
        (Type::Iface(_), _) => false,
        (Type::Group(s), Type::Iface(i)) => s.iter().any(|j| iface_le(table, j, i)),
        (Type::Group(s), Type::Group(t)) => t
            .iter()
            .all(|j| s.iter().any(|i| iface_le(table, i, j))),
        (Type::Group(_), Type::Class(_)) => false,
        (Type::Class(c), Type::Iface(i)) => table.implements(c, i).unwrap_or(false),
        // A class type covers a group demand when it implements every member.
        (Type::Class(c), Type::Group(t)) => {
            t.iter().all(|i| table.implements(c, i).unwrap_or(false))
        }
        (Type::Class(_), Type::Class(_)) => false,
    }
}

/// `i ≼ j` on interface names.
pub fn iface_le(table: &ClassTable, i: &str, j: &str) -> bool {
    i == j || j == "Any" || table.extends_strictly(i, j)
}

/// `i ≺ j` on interface names.
pub fn iface_lt(table: &ClassTable, i: &str, j: &str) -> bool {
    i != j && (j == "Any" || table.extends_strictly(i, j))
}
