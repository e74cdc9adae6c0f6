//! Weighted signal temporal logic: AST, text grammar and semantics.
//!
//! # Grammar
//!
//! ```text
//! formula  := conj ('|' conj)*
//! conj     := unary ('&' unary)*
//! unary    := '!' unary
//!           | ('G' | 'F') '[' INT ',' INT ']' weights? unary
//!           | primary
//! primary  := '(' formula ')' weights?
//!           | 'x' ('>=' | '<') NUMBER weights?
//! weights  := '{' 'w' '=' NUMBER (',' NUMBER)* '}'
//! ```
//!
//! `G` is "always", `F` is "eventually"; windows are closed integer sample
//! ranges. Precedence from tightest: `!`, temporal operators, `&`, `|`.
//! A chain `a & b & c` is one n-ary node; parentheses keep nesting.
//!
//! A weight group annotates the node it follows: one weight for a
//! predicate, one per operand for `&`/`|` (written after the closing
//! parenthesis of the group), and one per window point right after a
//! temporal interval. Omitted weights are 1.
//!
//! ```
//! use tlnn::logic::{format_formula, parse_formula};
//! let f = parse_formula::<f64>("F[0,5] G[20,25] (x < 0.1) & G[65,72] (x >= 0.3)").unwrap();
//! assert_eq!(format_formula(&f), "F[0,5] G[20,25] (x < 0.1) & G[65,72] (x >= 0.3)");
//! ```

pub mod activation;
mod format;
mod formula;
mod parse;
mod semantics;

pub use activation::{Activation, Aggregate, Branch};
pub use format::{format_formula, format_pruned};
pub use formula::{Comparison, Formula, Interval, Signal, Temporal};
pub use parse::parse_formula;
pub use semantics::{eval_boolean, robustness_classic, robustness_weighted};

