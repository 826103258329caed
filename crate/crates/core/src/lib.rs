//! Quantum-memory benchmarking toolkit: truncated Fock-space states,
//! phase-symmetric bipartite block matrices, purification Gram matrices and
//! semidefinite negativity bounds.

pub mod bench;
pub mod bipartite;
pub mod blocksym;
pub mod channels;
pub mod error;
pub mod fock;
pub mod gram;
pub mod io;
pub mod linalg;
mod sdpkit;

pub use error::{CoreError, Result};
pub use fock::{DensityMatrix, FockOperator, QuadratureMoments};
pub use linalg::{CMatrix, CVector};
