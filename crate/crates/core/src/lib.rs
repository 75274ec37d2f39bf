//! Bures distance between completely positive maps on matrix algebras.

pub mod bures;
pub mod convex;
pub mod cpmap;
pub mod error;
pub mod gns;
pub mod io;
pub mod matrix;
pub mod random;
pub mod suites;

pub use bures::{
    bound_report, bures_extension, bures_id_unitary, bures_intertwiner, bures_states_classical,
    brute_force_upper, rigidity_decompose, BoundReport, BuresResult, Formulation,
    RigidityDecomposition, Witness,
};
pub use cpmap::{cb_norm, CpMap, HermitianMap, KrausSet};
pub use error::{Error, Result};
pub use matrix::{CMat, C64};
