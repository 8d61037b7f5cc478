//! Low-precision inference for deterministic probabilistic circuits.
//!
//! Circuits compiled from Bayesian networks multiply exactly one sum-edge
//! weight per variable along every complete instantiation. That makes two
//! weight transformations exactly invertible after inference: uniform
//! scaling (output scales by `c^V`) and, on deterministic circuits, the
//! n-th root (output becomes `F^(1/n)`). Choosing `n` from the circuit's
//! smallest non-zero output keeps every intermediate value above a
//! format's underflow threshold.
//!
//! Modules:
//! - [`circuit`]: circuit types, `.pcir` I/O, structural checks
//! - [`bayesnet`]: networks, enumeration oracles, circuit compilation
//! - [`numerics`]: binary16/32/64 emulation with flush-to-zero
//! - [`analysis`]: `P_min`, root index, precision sweeps
//! - [`transform`]: scaling, n-th root, recovery
//! - [`engine`]: evaluation, dynamic rescaling, MPE
//! - [`codegen`]: straight-line C emission

pub mod analysis;
pub mod bayesnet;
pub mod circuit;
pub mod codegen;
pub mod engine;
pub mod error;
pub mod evidence;
pub mod numerics;
pub mod transform;

pub use circuit::{Circuit, Node, NodeId};
pub use error::{Error, Result};
pub use evidence::{Assignment, Evidence};
pub use numerics::{Format, Precision};
pub use transform::TransformMeta;
