//! A toolkit for dependently typed call-by-push-value: abstract syntax,
//! concrete syntax, a bidirectional type-checking kernel, a CK abstract
//! machine with effects, CBV/CBN elaboration of a dependently typed surface
//! calculus, and executable metatheory checks over program corpora.

pub mod ast;
pub mod gen;
pub mod kernel;
pub mod machine;
pub mod meta;
pub mod parser;
pub mod pretty;
pub mod surface;
pub mod translate;

pub use ast::{Comp, CompType, Context, EffectSignature, Features, Value, ValueType};
