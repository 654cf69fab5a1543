//! Interpreter and type checkers for a small object-oriented kernel language
//! with groups, interface-based discovery and join/leave effects.

pub mod ast;
pub mod typecheck;
pub mod parser;
pub mod runtime;
pub mod rtcheck;
pub mod cli;
