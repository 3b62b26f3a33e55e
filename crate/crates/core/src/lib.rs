//! KMS states for band operators on finite truncations of uniformly locally
//! finite metric spaces.
//!
//! The crate models a space `X` ([`space`]), partial translations of it
//! ([`translation`]), sparse band operators `a = Σ d_i v_{f_i}` ([`operator`]),
//! the diagonal-conjugation flow `σ_h` induced by a potential `h` ([`flow`]),
//! Gibbs states with their two KMS verifiers ([`kms`]), depth-sequence
//! diagnostics ([`asymptotics`]) and the exact phase transition of the
//! `n`-branching tree at `β = log n` ([`tree`]).

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod flow;
pub mod kms;
pub mod numeric;
pub mod operator;
pub mod sample;
pub mod space;
pub mod translation;
pub mod tree;

pub use error::{Error, Result};
pub use flow::{analytic_evolve, evolve, Potential, PotentialRule};
pub use kms::{
    gibbs_state, kms_defect_criterion, kms_defect_direct, partition_function, DiagonalState, KmsReport,
    MatrixState, State,
};
pub use operator::{band_decompose, expectation, isometry_of, reassemble, BandOperator, Diagonal};
pub use space::{make_interval, make_squares, make_tree, FiniteSpace, SpaceRef, TruncationSequence};
pub use translation::{compose, inverse, PartialTranslation, PointSet};
pub use tree::{branch_isometry, explicit_tree_state, phase_report, Word};

/// Version string embedded in every CLI artifact.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
