//! Exact-arithmetic symbolic scalar expressions.
//!
//! Every coordinate function handled by the engine is a [`ScalarExpr`]: an
//! immutable tree over arbitrary-precision rationals with `exp`, `log` and
//! rational powers. Equality of expressions is decided by sampling
//! ([`ZeroTester`]) rather than by canonical simplification.

mod eval;
mod expr;
mod parse;
mod zero;

pub use eval::{EvalError, Number, Point, Scaled};
pub use expr::{Node, Rational, ScalarExpr};
pub use parse::{parse_decimal, parse_expr, ParseError};
pub use zero::{is_probably_zero, SampleDomain, SamplePoint, ZeroTestError, ZeroTester, ZeroVerdict, DEFAULT_RANGE};

