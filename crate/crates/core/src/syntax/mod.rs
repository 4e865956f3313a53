//! Surface syntax of the calculus: AST, parser and the deterministic deparser.
//!
//! The grammar is a small R-flavoured language over strings. `+` is string
//! concatenation, functions take positional parameters with optional
//! defaults, and `environment()`, `substitute(x)`, `eval(code, env)` and
//! `delayedAssign(x, code, env)` are keyword forms rather than ordinary calls.

mod ast;
mod deparse;
mod lexer;
mod parser;

pub use ast::{is_identifier, Expr, ExprKind, Name, Param, SourceSpan, RESERVED_WORDS};
pub use deparse::{deparse, quote_str};
pub use parser::{parse, parse_source, ParseError};
