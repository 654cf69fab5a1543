//! Concrete syntax. A program is a list of interface and class declarations
//! followed by the main block:
//!
//! ```text
//! interface Dictionary extends Any { Bool lookup(Word w); }
//! class Plain() implements Dictionary {
//!     Bool lookup(Word w) { Bool r; r = true; return r; }
//! }
//! { Dictionary d; d = new Plain(); }
//! ```
//!
//! Group types are written `Group<I,J>`, the empty group type `Group<>`.

mod grammar;
mod lexer;
mod printer;

pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use printer::{expr as render_expr, print_program, stmt_head};

use crate::ast::Program;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub message: String,
    pub expected: Vec<String>,
    pub line: u32,
    pub col: u32,
}

impl ParseError {
    pub fn new(message: impl Into<String>, expected: Vec<String>, line: u32, col: u32) -> Self {
        Self {
            message: message.into(),
            expected,
            line,
            col,
        }
    }

    pub fn render(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: parse error: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    grammar::Parser::new(tokens).program()
}
