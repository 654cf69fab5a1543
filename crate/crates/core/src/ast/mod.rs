//! Abstract syntax of the kernel language, extended with the runtime-only
//! forms the interpreter rewrites statements into (`wait`, literal values,
//! value call targets and end-of-scope markers).

mod table;
mod wf;

pub use table::{ClassTable, LookupError};
pub use wf::check_well_formed;

use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

pub type Name = String;

/// Name of the synthetic class that owns the main block at runtime.
pub const MAIN_CLASS: &str = "Main";

/// Prefix of compiler-generated variable names. Never lexes as an identifier.
pub const SYNTHETIC_PREFIX: char = '%';

/// Name of the hidden local returned by `void` methods.
pub const VOID_RETURN: &str = "%ret";

pub fn is_synthetic(name: &str) -> bool {
    name.starts_with(SYNTHETIC_PREFIX)
}

/// Source position. Positions never participate in equality or hashing, so
/// two ASTs that differ only in layout compare equal.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl Hash for Pos {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Type {
    Bool,
    Any,
    Iface(Name),
    Group(BTreeSet<Name>),
    /// Only ever the type of `this` and of object identities at runtime.
    Class(Name),
}

impl Type {
    pub fn group<I, S>(names: I) -> Type
    where
        I: IntoIterator<Item = S>,
        S: Into<Name>,
    {
        Type::Group(names.into_iter().map(Into::into).collect())
    }

    pub fn iface(name: impl Into<Name>) -> Type {
        Type::Iface(name.into())
    }

    pub fn is_reference(&self) -> bool {
        !matches!(self, Type::Bool)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("Bool"),
            Type::Any => f.write_str("Any"),
            Type::Iface(name) | Type::Class(name) => f.write_str(name),
            Type::Group(set) => {
                f.write_str("Group<")?;
                for (i, name) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(name)?;
                }
                f.write_str(">")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ObjId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GroupId(pub u32);

impl fmt::Display for ObjId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// Runtime values. `Null` is the default of every reference type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Value {
    Obj(ObjId),
    Group(GroupId),
    Bool(bool),
    Null,
}

impl Value {
    pub fn is_entity(&self) -> bool {
        matches!(self, Value::Obj(_) | Value::Group(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Obj(o) => o.fmt(f),
            Value::Group(g) => g.fmt(f),
            Value::Bool(b) => b.fmt(f),
            Value::Null => f.write_str("null"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VarDecl {
    pub ty: Type,
    pub name: Name,
}

impl VarDecl {
    pub fn new(ty: Type, name: impl Into<Name>) -> Self {
        Self {
            ty,
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Signature {
    pub ret: Type,
    pub name: Name,
    pub params: Vec<VarDecl>,
    /// Declared `void` in the source; `ret` is then `Bool`.
    pub is_void: bool,
    pub pos: Pos,
}

impl Signature {
    pub fn param_types(&self) -> impl Iterator<Item = &Type> {
        self.params.iter().map(|p| &p.ty)
    }

    /// Signatures with the same name, parameter types and return type.
    pub fn same_shape(&self, other: &Signature) -> bool {
        self.name == other.name
            && self.ret == other.ret
            && self.params.len() == other.params.len()
            && self.param_types().eq(other.param_types())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterfaceDecl {
    pub name: Name,
    /// May contain `Any`, which is implicit for every interface.
    pub extends: Vec<Name>,
    pub signatures: Vec<Signature>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub locals: Vec<VarDecl>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodDecl {
    pub sig: Signature,
    pub locals: Vec<VarDecl>,
    pub body: Vec<Stmt>,
    pub ret: Name,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassDecl {
    pub name: Name,
    pub params: Vec<VarDecl>,
    pub implements: Vec<Name>,
    pub fields: Vec<VarDecl>,
    pub init: Block,
    pub methods: Vec<MethodDecl>,
    pub pos: Pos,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.sig.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Program {
    pub interfaces: Vec<InterfaceDecl>,
    pub classes: Vec<ClassDecl>,
    pub main: Block,
}

/// Target of a call: a variable in source programs, a value once a group
/// call has been forwarded to one of its exporters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Operand {
    Var(Name),
    Value(Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expr {
    Var(Name),
    /// `true`/`false` in source; any value at runtime.
    Lit(Value),
    Call {
        target: Operand,
        method: Name,
        args: Vec<Name>,
    },
    New {
        class: Name,
        args: Vec<Name>,
    },
    NewGroup,
    Acquire {
        iface: Name,
        within: Option<Name>,
        except: Vec<Name>,
    },
    /// Runtime only: the caller is blocked until `callee` returns from `method`.
    Wait {
        callee: ObjId,
        method: Name,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    #[serde(skip)]
    pub pos: Pos,
}

impl Stmt {
    pub fn new(kind: StmtKind, pos: Pos) -> Self {
        Self { kind, pos }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum StmtKind {
    Skip,
    Assign {
        target: Name,
        expr: Expr,
    },
    If {
        cond: Name,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While {
        cond: Name,
        body: Vec<Stmt>,
    },
    Join {
        member: Name,
        group: Name,
        ifaces: Vec<Name>,
    },
    Leave {
        member: Name,
        group: Name,
        ifaces: Vec<Name>,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    SubtypeOf {
        subject: Name,
        iface: Name,
        alias: Name,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    /// Runtime only: the query alias `0` goes out of scope.
    EndScope(Name),
}

impl Program {
    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }
}

/// Calls `f` on every statement of `stmts`, recursing into nested blocks.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for stmt in stmts {
        f(stmt);
        match &stmt.kind {
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
                walk_stmts(then_branch, f);
                walk_stmts(else_branch, f);
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}
