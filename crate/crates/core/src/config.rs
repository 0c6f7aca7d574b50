/// Numerical tolerances shared by every layer.
///
/// Defaults: normalization and unitarity at 1e-10, orthogonality assertions
/// and the weak-value overlap cutoff at 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a state norm from 1.
    pub normalization: f64,
    /// Allowed `max |M^dagger M - I|` for matrices declared unitary.
    pub unitarity: f64,
    /// Allowed `|<a|b>|` when asserting orthogonality.
    pub orthogonality: f64,
    /// Smallest `|<post|pre>|` accepted for a weak value.
    pub overlap: f64,
    /// Uncertainties (and normalization constants) at or below this are degenerate.
    pub degenerate: f64,
    /// Allowed `|<K>^phi - q|`.
    pub condition: f64,
    /// Largest register the dense representation accepts.
    pub max_qubits: usize,
}

pub const DEFAULT_MAX_QUBITS: usize = 12;

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            normalization: 1e-10,
            unitarity: 1e-10,
            orthogonality: 1e-12,
            overlap: 1e-12,
            degenerate: 1e-12,
            condition: 1e-10,
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }
}
