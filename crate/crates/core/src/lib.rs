//! Discontinuous Galerkin solver for the one-dimensional periodic nonlocal
//! wave equation `u_tt + L_delta u = f` with radial power-law kernels.
//!
//! The nonlocal operator is discretized through an auxiliary difference
//! quotient field, which is eliminated to give a symmetric positive
//! semidefinite stiffness operator; time stepping uses an energy-conserving
//! Crank-Nicolson scheme.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cholesky;
pub mod error;
pub mod integrator;
pub mod kernel;
pub mod legendre;
pub mod operator;
pub mod oracle;
pub mod par;
pub mod quadrature;
pub mod selftest;
pub mod space;
pub mod studies;

pub use assembly::{
    ldg_stiffness, shift_matrix_h, shift_matrix_k, stiffness_matrix, SQuadConfig, SchemeVariant,
};
pub use error::{Error, Result};
pub use integrator::{CnState, EnergySample, Forcing};
pub use kernel::{forcing_coefficient, kernel_moment, make_kernel, KernelSpec};
pub use operator::OperatorMatrix;
pub use par::Execution;
pub use quadrature::{gauss_jacobi_weighted, gauss_legendre, gauss_lobatto, QuadRule, WeightKind};
pub use space::{eval_field, l2_error, l2_project, linf_error, make_space, DgSpace, FieldCoeffs, MassOperator};
