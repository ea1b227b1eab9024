//! Reasoning about completeness of partially complete databases: table and
//! query completeness, containment of conjunctive queries with comparisons,
//! aggregate queries, instance-level checks, null values and data-creating
//! processes.

pub mod aggregates;
pub mod completeness;
pub mod containment;
pub mod error;
pub mod eval;
pub mod instance;
pub mod json;
pub mod model;
pub mod nulls;
pub mod parse;
pub mod process;
pub mod value;

pub use error::{Error, Result};
pub use model::*;
pub use value::{NullKind, NullToken, Sym, Value};
