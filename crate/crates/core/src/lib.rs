//! Geodesic pattern engine: distance fields on triangle meshes, curve
//! tracing, region subdivision and procedural decoration.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod command;
pub mod engine;
pub mod error;
pub mod field;
pub mod geom;
pub mod graph;
pub mod mesh;
pub mod ops;
pub mod procedural;
pub mod script;
pub mod trace;
pub mod tree;

pub use command::OperatorCommand;
pub use engine::{ApplyReport, Engine};
pub use error::{Error, Result};
