//! Command-line surface: operator expressions and subcommand dispatch.

pub mod commands;
pub mod expr;

pub use commands::{main_with_args, run, Cli, Outcome, SCHEMA};
pub use expr::{parse_operator, parse_operator_with, Bindings, LowerError, OperatorExpr, ParseError, Symbol};
