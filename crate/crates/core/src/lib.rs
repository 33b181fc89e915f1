//! Steady states, coherent-state synchronization measures and symmetry
//! analysis for driven-dissipative few-level quantum systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`opkit`]: dense complex operators and spin/transition constructors.
//! - [`lindblad`]: models, Liouvillians, steady states and trajectories.
//! - [`coherent`]: SU(2) and SU(3) coherent-state families, quadrature, Husimi functions.
//! - [`syncmeas`]: phase-space, l1, relative-entropy and trace-distance measures.
//! - [`liealg`]: connectivity blocks and dynamical Lie-algebra closure.
//! - [`experiments`]: case-study models, sweeps and blockade searches.
// `!(x >= 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherent;
pub mod error;
pub mod experiments;
pub mod liealg;
pub mod lindblad;
pub mod opkit;
pub mod syncmeas;

pub use coherent::{make_spin_family, make_su3_family, CoherentFamily, Quadrature};
pub use error::{Error, Result};
pub use liealg::{analyze, AlgebraReport, ClosureOptions};
pub use lindblad::{
    build_liouvillian, evolve, steady_state, DensityMatrix, Dissipator, HamiltonianTerm,
    LindbladModel, Liouvillian, SteadyState, TermRole,
};
pub use opkit::Operator;
pub use syncmeas::{SyncResult, ZMatrix};
