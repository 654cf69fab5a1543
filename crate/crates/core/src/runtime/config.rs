use crate::ast::{GroupId, Name, ObjId, Stmt, Type, Value};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// A stored variable: its current runtime type and value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Slot {
    pub ty: Type,
    pub value: Value,
}

impl Slot {
    pub fn new(ty: Type, value: Value) -> Self {
        Self { ty, value }
    }
}

/// Variable names to stored types and values (fields or locals).
pub type Binding = BTreeMap<Name, Slot>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Frame {
    pub method: Name,
    pub locals: Binding,
    pub body: Vec<Stmt>,
    /// `return x` after the body; `None` for main and init blocks.
    pub ret: Option<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Process {
    Frame(Frame),
    /// Result of binding a method the class does not define, or a call
    /// with the wrong number of arguments.
    Error(String),
}

impl Process {
    pub fn frame(&self) -> Option<&Frame> {
        match self {
            Process::Frame(f) => Some(f),
            Process::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ObjectState {
    pub class: Name,
    pub fields: Binding,
    /// Top of stack is the last element; empty means idle.
    pub stack: Vec<Process>,
}

impl ObjectState {
    pub fn is_idle(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn top(&self) -> Option<&Process> {
        self.stack.last()
    }

    pub fn top_frame(&self) -> Option<&Frame> {
        self.top().and_then(Process::frame)
    }

    pub fn top_frame_mut(&mut self) -> Option<&mut Frame> {
        match self.stack.last_mut() {
            Some(Process::Frame(f)) => Some(f),
            _ => None,
        }
    }

    /// Looks a variable up in `fields ∘ locals` of the active frame.
    pub fn lookup(&self, name: &str) -> Option<&Slot> {
        self.top_frame()
            .and_then(|f| f.locals.get(name))
            .or_else(|| self.fields.get(name))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct GroupState {
    pub exports: BTreeSet<(Value, Name)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    pub objects: BTreeMap<ObjId, ObjectState>,
    pub groups: BTreeMap<GroupId, GroupState>,
    pub next_object: u32,
    pub next_group: u32,
}

impl Configuration {
    pub fn object(&self, id: ObjId) -> Option<&ObjectState> {
        self.objects.get(&id)
    }

    pub fn group(&self, id: GroupId) -> Option<&GroupState> {
        self.groups.get(&id)
    }

    pub fn class_of(&self, id: ObjId) -> Option<&str> {
        self.objects.get(&id).map(|o| o.class.as_str())
    }

    pub fn all_idle(&self) -> bool {
        self.objects.values().all(ObjectState::is_idle)
    }

    pub fn fresh_object(&mut self) -> ObjId {
        let id = ObjId(self.next_object);
        self.next_object += 1;
        id
    }

    pub fn fresh_group(&mut self) -> GroupId {
        let id = GroupId(self.next_group);
        self.next_group += 1;
        id
    }

    /// Every exported entry of every group, the search space of a
    /// discovery without an `in` clause.
    pub fn all_exports(&self) -> impl Iterator<Item = &(Value, Name)> {
        self.groups.values().flat_map(|g| g.exports.iter())
    }
}
