//! Statistical decomposition of gate-model quantum circuits.
//!
//! A circuit `U_G = G_M ... G_0` acting on an initial state is expanded into a
//! superposition whose amplitudes are products of per-gate (or per-block)
//! expectations `<G>^psi` and uncertainties `Delta_psi G`, by applying the
//! Aharonov-Vaidman identity recursively. A generalized identity re-expresses
//! the result on a chosen target state `K|phi>` plus an orthogonal remainder.
//! Every decomposition is checked against direct state-vector simulation.

pub mod av_identity;
pub mod circuits;
pub mod cli;
pub mod config;
pub mod decomposer;
pub mod dsl;
pub mod error;
pub mod qcore;
pub mod random;
pub mod report;

pub use av_identity::{
    av_decompose, generalized_decompose, normalization_constant_basis_form, projector_r, AvTerms,
    GeneralizedTerms,
};
pub use config::Tolerances;
pub use decomposer::{
    amplitudes_in_computational_basis, decompose, decompose_rebased, factor_report,
    group_matrix, make_partition, orthogonal_chain, rebase, DecomposeOptions,
    DecompositionResult, GateSequence, Group, PartitionMode, RebaseTarget, SubSequencePartition,
};
pub use error::{Error, Result};
pub use qcore::{
    basis_state, expectation, inner, tensor_gate, tensor_state, uncertainty, weak_value,
    BasisLabel, ComplexScalar, GateMatrix, StateVector,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
