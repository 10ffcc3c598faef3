//! Linear distribution temporal logic: syntax, parser and reference
//! semantics over finite words.

mod expr;
mod formula;
mod oracle;
mod parser;

pub use expr::BeliefExpr;
pub use formula::{Formula, Predicate};
pub use oracle::{oracle_satisfies, Letter, Word};
pub use parser::{is_reserved, parse_expr, parse_formula, ParseError, Symbols};
