use crate::ast::Pos;
use serde::Serialize;
use std::fmt;

/// Label of the typing rule (or well-formedness check) whose premise failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    TVar,
    TLit,
    TCall,
    TNew,
    TGroup,
    TAcquire,
    TSub,
    TAssign,
    TReturn,
    TConditional,
    TWhile,
    TJoin,
    TLeave,
    TInspect,
    TMethod,
    TClass,
    LocalRequired,
    RttWait,
    WfDuplicate,
    WfUndeclared,
    WfCycle,
    WfReserved,
    AmbiguousSignature,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::TVar => "T-Var",
            Rule::TLit => "T-Lit",
            Rule::TCall => "T-Call",
            Rule::TNew => "T-New",
            Rule::TGroup => "T-Group",
            Rule::TAcquire => "T-Acquire",
            Rule::TSub => "T-Sub",
            Rule::TAssign => "T-Assign",
            Rule::TReturn => "T-Return",
            Rule::TConditional => "T-Conditional",
            Rule::TWhile => "T-While",
            Rule::TJoin => "T-Join",
            Rule::TLeave => "T-Leave",
            Rule::TInspect => "T-Inspect",
            Rule::TMethod => "T-Method",
            Rule::TClass => "T-Class",
            Rule::LocalRequired => "LocalRequired",
            Rule::RttWait => "RTT-Wait",
            Rule::WfDuplicate => "WF-Duplicate",
            Rule::WfUndeclared => "WF-Undeclared",
            Rule::WfCycle => "WF-Cycle",
            Rule::WfReserved => "WF-Reserved",
            Rule::AmbiguousSignature => "AmbiguousSignature",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {rule}: {message}")]
pub struct TypeError {
    pub rule: Rule,
    pub message: String,
    pub pos: Pos,
}

impl TypeError {
    pub fn new(rule: Rule, pos: Pos, message: impl Into<String>) -> Self {
        Self {
            rule,
            message: message.into(),
            pos,
        }
    }

    /// `<file>:<line>:<col>: <rule>: <message>`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {}: {}",
            file, self.pos.line, self.pos.col, self.rule, self.message
        )
    }
}
