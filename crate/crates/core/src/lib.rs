#![allow(clippy::needless_range_loop, clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod exec;
pub mod forward;
pub mod greens;
pub mod inversion;
pub mod model;
pub mod nearfield;
pub mod scenario;
pub mod special;
pub mod trials;

pub use error::{Error, Result};
pub use exec::Exec;
