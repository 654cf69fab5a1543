//! Static type-and-effect checking.

mod check;
mod context;
mod error;
pub mod subtype;

pub use check::{Checker, RuntimeTyping, Scope};
pub use context::{best_common_supertype, branch_effect, Effect, TypingContext};
pub use error::{Rule, TypeError};
pub use subtype::{is_strict_subtype, is_subtype};

use crate::ast::{ClassTable, Program};

/// Well-formedness followed by typing. Returns the class table of a
/// well-typed program, or every error found.
pub fn check_program(program: Program) -> Result<ClassTable, Vec<TypeError>> {
    let table = ClassTable::new(program)?;
    let errors = Checker::new(&table).check_program();
    if errors.is_empty() {
        Ok(table)
    } else {
        Err(errors)
    }
}
