//! Metric and vector-field input language.
//!
//! A metric file looks like
//!
//! ```text
//! dim = 4            # first statement
//! vars = t x y z     # optional, these are the 4D defaults
//! g tt = 1
//! g yy = x^3; g zz = 1/x
//! domain x > 0
//! ```
//!
//! Omitted off-diagonal entries are zero. `^` takes integer literals only and
//! binds tighter than unary minus. Vector fields are written as
//! `cos(x)*dt + sin(x)*dx`, where `d<var>` is the coordinate field.

pub mod expr;
pub mod metric;
pub mod parser;

pub use expr::{Expr, Func};
pub use metric::{parse_metric, DomainConstraint, MetricError, MetricSpec, VectorFieldSpec};
pub use parser::{parse_expr, parse_vector_field, DomainOp, ParseError};
