//! JSON tree reports. Field order and map ordering are fixed, so equal inputs
//! give byte-identical output.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::av_identity::GeneralizedTerms;
use crate::decomposer::{
    amplitudes_in_computational_basis, describe_state, factor_report, DecompositionResult,
    FactorRecord, Group, Leaf,
};
use crate::qcore::StateVector;

pub const SCHEMA_VERSION: u32 = 1;

/// Entries below this magnitude are left out of `basis_amplitudes`.
pub const BASIS_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

pub fn serialize_complex<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    ComplexJson::from(*z).serialize(s)
}

fn complex_list(v: &[Complex64]) -> Vec<ComplexJson> {
    v.iter().copied().map(ComplexJson::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateJson {
    /// A computational basis state such as `|01>`.
    Basis(String),
    Amplitudes(Vec<ComplexJson>),
}

impl StateJson {
    pub fn of(state: &StateVector) -> Self {
        let label = describe_state(state, "?");
        if label.starts_with('|') {
            StateJson::Basis(label)
        } else {
            StateJson::Amplitudes(complex_list(state.amplitudes()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupJson {
    pub start: usize,
    pub span: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafJson {
    pub path: String,
    pub amplitude: ComplexJson,
    pub state: StateJson,
}

impl From<&Leaf> for LeafJson {
    fn from(l: &Leaf) -> Self {
        Self {
            path: l.path.clone(),
            amplitude: l.amplitude.into(),
            state: StateJson::of(&l.state),
        }
    }
}

/// Leaves, factors and checks of one expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeJson {
    pub partition: Vec<GroupJson>,
    pub leaves: Vec<LeafJson>,
    pub factors: Vec<FactorRecord>,
    pub basis_amplitudes: BTreeMap<String, ComplexJson>,
    pub reconstruction_residual: f64,
    pub pruned_count: usize,
}

impl TreeJson {
    pub fn of(result: &DecompositionResult) -> Self {
        let partition = result
            .partition
            .groups()
            .iter()
            .zip(&result.group_labels)
            .map(|(g, label): (&Group, &String)| GroupJson {
                start: g.start,
                span: g.span,
                label: label.clone(),
            })
            .collect();
        let basis_amplitudes = amplitudes_in_computational_basis(result, BASIS_CUTOFF)
            .into_iter()
            .map(|(i, z)| (StateVector::basis_label(result.n_qubits, i), z.into()))
            .collect();
        Self {
            partition,
            leaves: result.leaves.iter().map(LeafJson::from).collect(),
            factors: factor_report(result),
            basis_amplitudes,
            reconstruction_residual: result.reconstruction_residual,
            pruned_count: result.pruned_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RebaseJson {
    pub phi: StateJson,
    pub q: f64,
    pub weak_value_scaled: ComplexJson,
    pub kappa: ComplexJson,
    pub mu: Option<f64>,
    pub delta: f64,
    pub c: f64,
    pub orthogonal_coefficient: f64,
    pub projected_expectation: ComplexJson,
    pub phi_perp: Option<StateJson>,
    pub cascade: TreeJson,
}

impl RebaseJson {
    pub fn of(terms: &GeneralizedTerms, cascade: &DecompositionResult) -> Self {
        Self {
            phi: StateJson::of(&terms.phi),
            q: terms.q,
            weak_value_scaled: terms.weak_value_scaled.into(),
            kappa: terms.kappa.into(),
            mu: terms.mu,
            delta: terms.delta,
            c: terms.c,
            orthogonal_coefficient: terms.orthogonal_coefficient(),
            projected_expectation: terms.projected_expectation.into(),
            phi_perp: terms.phi_perp.as_ref().map(StateJson::of),
            cascade: TreeJson::of(cascade),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub circuit: String,
    pub n_qubits: usize,
    #[serde(flatten)]
    pub tree: TreeJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rebase: Option<RebaseJson>,
}

impl TreeReport {
    pub fn new(circuit: impl Into<String>, result: &DecompositionResult) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: crate::VERSION.to_string(),
            circuit: circuit.into(),
            n_qubits: result.n_qubits,
            tree: TreeJson::of(result),
            rebase: None,
        }
    }

    pub fn with_rebase(mut self, terms: &GeneralizedTerms, cascade: &DecompositionResult) -> Self {
        self.rebase = Some(RebaseJson::of(terms, cascade));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report types always serialize")
    }
}
