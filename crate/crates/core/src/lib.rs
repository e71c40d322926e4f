#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arc;
pub mod continuum;
pub mod edge;
pub mod error;
pub mod flow;
pub mod halfline;
pub mod loops;
pub mod numerics;
pub mod profiles;
pub mod runner;
pub mod tight_binding;

pub use error::{Error, Result};
