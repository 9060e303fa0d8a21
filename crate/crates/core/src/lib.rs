//! Verification toolkit for the Plebański elliptic complex on flat T⁴.
//!
//! The crate is layered bottom-up: exact scalars and small matrices
//! ([`scalar`], [`mat`]), perfect triples ([`sigma_core`]), fiber algebra
//! ([`forms`]), constant-coefficient operator stencils ([`stencil`]), the
//! Plebański operators ([`plebanski_ops`]), symbol calculus
//! ([`symbolcheck`]), the general coefficient family ([`coefficient_lab`]),
//! the twisted operator and its splitting ([`twisted`]), and spectral lattice
//! fields ([`lattice`]).

pub mod coefficient_lab;
pub mod error;
pub mod forms;
pub mod lattice;
pub mod mat;
pub mod plebanski_ops;
pub mod scalar;
pub mod sigma_core;
pub mod stencil;
pub mod symbolcheck;
pub mod twisted;

pub use error::{PlebError, Result};
pub use forms::{EOneForm, EScalar, ETwoForm, GramForm, SElement};
pub use mat::Mat;
pub use scalar::{One, QSqrt2, Scalar, Zero};
pub use sigma_core::{standard_triple, PerfectTriple};
pub use stencil::OperatorStencil;
