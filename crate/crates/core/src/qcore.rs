//! Dense states and gates over the computational basis.
//!
//! Qubit 0 is the most significant bit of a basis-state label, so `|01>` is
//! index 1 and the Kronecker product `a (x) b` places `a`'s qubits first.

use ndarray::{linalg::kron, Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Builds a scalar, rejecting NaN and infinities.
pub fn scalar(re: f64, im: f64) -> Result<ComplexScalar> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(Error::Numerical(format!("non-finite scalar ({re}, {im})")))
    }
}

fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "length {dim} is not a power of two >= 2"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Euclidean norm of a raw amplitude vector.
pub fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>` for raw vectors, conjugating the first argument.
pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Elementwise max-norm distance between two raw vectors of equal length.
pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// A unit-norm state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Named product states used as initial states and rebase targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    Zero,
    Plus,
}

impl StateVector {
    /// Wraps amplitudes that already have unit norm (within 1e-10).
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new_with(amplitudes, &Tolerances::default())
    }

    pub fn new_with(amplitudes: Vec<Complex64>, tol: &Tolerances) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        if !all_finite(&amplitudes) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = vector_norm(&amplitudes);
        if (norm - 1.0).abs() > tol.normalization {
            return Err(Error::InvalidState(format!(
                "norm {norm} differs from 1 by more than {:e}",
                tol.normalization
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Divides by the Euclidean norm. Fails on a zero or non-finite vector.
    pub fn normalize(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        if !all_finite(&amplitudes) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = vector_norm(&amplitudes);
        if norm == 0.0 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            n_qubits,
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidParams("a register needs at least one qubit".into()));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, n_qubits });
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// The uniform superposition `|+>^n`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidParams("a register needs at least one qubit".into()));
        }
        let dim = 1usize << n_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self {
            n_qubits,
            amplitudes: vec![a; dim],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vector_norm(&self.amplitudes)
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        StateVector {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes,
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<ComplexScalar> {
        check_dim(self.dim(), other.dim())?;
        Ok(vdot(&self.amplitudes, &other.amplitudes))
    }

    /// Index of the computational basis state this equals up to a global
    /// phase, if any.
    pub fn basis_index(&self, tol: f64) -> Option<usize> {
        let (idx, peak) = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm()))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        ((1.0 - peak).abs() <= tol).then_some(idx)
    }

    /// Binary label of a basis index, qubit 0 first.
    pub fn basis_label(n_qubits: usize, index: usize) -> String {
        (0..n_qubits)
            .map(|q| {
                if (index >> (n_qubits - 1 - q)) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

pub fn basis_state(n: usize, label: BasisLabel) -> Result<StateVector> {
    match label {
        BasisLabel::Zero => StateVector::zero(n),
        BasisLabel::Plus => StateVector::plus(n),
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dense square matrix on `n_qubits` qubits.
///
/// `unitary` is a declaration checked at construction: a matrix can only be
/// flagged unitary if `max |M^dagger M - I| <= 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    n_qubits: usize,
    entries: Array2<Complex64>,
    unitary: bool,
}

impl GateMatrix {
    pub fn new_unitary(entries: Array2<Complex64>) -> Result<Self> {
        Self::new_unitary_with(entries, &Tolerances::default())
    }

    pub fn new_unitary_with(entries: Array2<Complex64>, tol: &Tolerances) -> Result<Self> {
        let mut m = Self::new_general(entries)?;
        let defect = m.unitarity_defect();
        if defect > tol.unitarity {
            return Err(Error::InvalidGate(format!(
                "matrix declared unitary has defect {defect:e}"
            )));
        }
        m.unitary = true;
        Ok(m)
    }

    pub fn new_general(entries: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::InvalidGate(format!("matrix is {rows}x{cols}, not square")));
        }
        let n_qubits = qubits_for_dim(rows)
            .map_err(|_| Error::InvalidGate(format!("dimension {rows} is not 2^n with n >= 1")))?;
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidGate("non-finite entry".into()));
        }
        Ok(Self {
            n_qubits,
            entries,
            unitary: false,
        })
    }

    /// Flags a matrix unitary without the O(d^3) check; callers construct it
    /// from unitary pieces.
    pub(crate) fn assume_unitary(entries: Array2<Complex64>) -> Self {
        let n_qubits = entries.nrows().trailing_zeros() as usize;
        Self {
            n_qubits,
            entries,
            unitary: true,
        }
    }

    /// Row-major construction; `unitary` requests verification.
    pub fn from_rows(rows: &[Vec<Complex64>], unitary: bool) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidGate("ragged or non-square rows".into()));
        }
        let flat: Vec<Complex64> = rows.iter().flatten().copied().collect();
        let entries = Array2::from_shape_vec((dim, dim), flat)
            .map_err(|e| Error::InvalidGate(e.to_string()))?;
        if unitary {
            Self::new_unitary(entries)
        } else {
            Self::new_general(entries)
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            entries: Array2::eye(1 << n_qubits),
            unitary: true,
        }
    }

    /// Diagonal matrix; flagged unitary when every entry has modulus 1.
    pub fn diagonal(diag: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        let mut entries = Array2::zeros((n, n));
        for (i, d) in diag.iter().enumerate() {
            entries[[i, i]] = *d;
        }
        if diag.iter().all(|d| (d.norm() - 1.0).abs() <= 1e-12) {
            Self::new_unitary(entries)
        } else {
            Self::new_general(entries)
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// `max |M^dagger M - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let product = self.entries.t().mapv(|z| z.conj()).dot(&self.entries);
        product
            .indexed_iter()
            .map(|((i, j), z)| {
                let target = if i == j { ONE } else { ZERO };
                (z - target).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries
            .indexed_iter()
            .all(|((i, j), z)| (z - self.entries[[j, i]].conj()).norm() <= tol)
    }

    pub fn dagger(&self) -> GateMatrix {
        GateMatrix {
            n_qubits: self.n_qubits,
            entries: self.entries.t().mapv(|z| z.conj()),
            unitary: self.unitary,
        }
    }

    /// Matrix product `self * right`: `right` acts first.
    pub fn compose(&self, right: &GateMatrix) -> Result<GateMatrix> {
        check_dim(self.dim(), right.dim())?;
        Ok(GateMatrix {
            n_qubits: self.n_qubits,
            entries: self.entries.dot(&right.entries),
            unitary: self.unitary && right.unitary,
        })
    }

    pub fn scale(&self, factor: Complex64) -> GateMatrix {
        GateMatrix {
            n_qubits: self.n_qubits,
            entries: self.entries.mapv(|z| z * factor),
            unitary: self.unitary && (factor.norm() - 1.0).abs() <= 1e-15,
        }
    }

    pub fn tensor(&self, other: &GateMatrix) -> GateMatrix {
        GateMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            entries: kron(&self.entries, &other.entries),
            unitary: self.unitary && other.unitary,
        }
    }

    /// Exact matrix-vector product on raw amplitudes, no renormalization.
    pub fn apply_raw(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.dim(), v.len())?;
        Ok(self.entries.dot(&ArrayView1::from(v)).to_vec())
    }

    pub fn apply(&self, s: &StateVector) -> Result<Vec<Complex64>> {
        self.apply_raw(s.amplitudes())
    }

    /// Applies a unitary and wraps the result as a state.
    pub fn apply_unitary(&self, s: &StateVector) -> Result<StateVector> {
        if !self.unitary {
            return Err(Error::InvalidGate("apply_unitary on a non-unitary matrix".into()));
        }
        Ok(StateVector {
            n_qubits: s.n_qubits,
            amplitudes: self.apply(s)?,
        })
    }

    /// Rank-one outer product `|a><b|`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Result<GateMatrix> {
        check_dim(a.len(), b.len())?;
        let col = Array1::from(a.to_vec()).insert_axis(ndarray::Axis(1));
        let row = Array1::from(b.iter().map(|z| z.conj()).collect::<Vec<_>>())
            .insert_axis(ndarray::Axis(0));
        Self::new_general(col.dot(&row))
    }

    pub fn add(&self, other: &GateMatrix) -> Result<GateMatrix> {
        check_dim(self.dim(), other.dim())?;
        Self::new_general(&self.entries + &other.entries)
    }

    pub fn sub(&self, other: &GateMatrix) -> Result<GateMatrix> {
        check_dim(self.dim(), other.dim())?;
        Self::new_general(&self.entries - &other.entries)
    }

    /// Largest entrywise distance.
    pub fn max_abs_diff(&self, other: &GateMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn tensor_state(a: &StateVector, b: &StateVector) -> StateVector {
    a.tensor(b)
}

pub fn tensor_gate(a: &GateMatrix, b: &GateMatrix) -> GateMatrix {
    a.tensor(b)
}

pub fn apply(g: &GateMatrix, s: &StateVector) -> Result<Vec<ComplexScalar>> {
    g.apply(s)
}

pub fn inner(a: &StateVector, b: &StateVector) -> Result<ComplexScalar> {
    a.inner(b)
}

/// `<s|g|s>`.
pub fn expectation(g: &GateMatrix, s: &StateVector) -> Result<ComplexScalar> {
    let gs = g.apply(s)?;
    Ok(vdot(s.amplitudes(), &gs))
}

/// `||(g - <g>) |s>||`, the standard deviation of `g` in `s` extended to
/// non-Hermitian operators. Equals `sqrt(<g^dagger g> - |<g>|^2)`.
pub fn uncertainty(g: &GateMatrix, s: &StateVector) -> Result<f64> {
    let gs = g.apply(s)?;
    Ok(uncertainty_from_image(&gs, s).1)
}

/// Expectation and uncertainty from a precomputed image `g|s>`.
pub(crate) fn uncertainty_from_image(image: &[Complex64], s: &StateVector) -> (Complex64, f64) {
    let e = vdot(s.amplitudes(), image);
    let delta = image
        .iter()
        .zip(s.amplitudes())
        .map(|(gz, z)| (gz - e * z).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (e, delta)
}

/// `<post|g|pre> / <post|pre>`.
pub fn weak_value(g: &GateMatrix, pre: &StateVector, post: &StateVector) -> Result<ComplexScalar> {
    weak_value_with(g, pre, post, &Tolerances::default())
}

pub fn weak_value_with(
    g: &GateMatrix,
    pre: &StateVector,
    post: &StateVector,
    tol: &Tolerances,
) -> Result<ComplexScalar> {
    check_dim(pre.dim(), post.dim())?;
    let overlap = post.inner(pre)?;
    if overlap.norm() <= tol.overlap {
        return Err(Error::OrthogonalPostSelection {
            overlap: overlap.norm(),
        });
    }
    let g_pre = g.apply(pre)?;
    Ok(vdot(post.amplitudes(), &g_pre) / overlap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x() -> GateMatrix {
        GateMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]], true).unwrap()
    }

    fn h() -> GateMatrix {
        let s = c(FRAC_1_SQRT_2, 0.0);
        GateMatrix::from_rows(&[vec![s, s], vec![s, -s]], true).unwrap()
    }

    fn z() -> GateMatrix {
        GateMatrix::diagonal(&[ONE, -ONE]).unwrap()
    }

    #[test]
    fn tensor_state_orders_first_operand_most_significant() {
        let s = StateVector::zero(1).unwrap().tensor(&StateVector::basis(1, 1).unwrap());
        assert_eq!(s.amplitudes()[1], ONE);
        assert_eq!(s.n_qubits(), 2);
        let pp = StateVector::plus(1).unwrap().tensor(&StateVector::plus(1).unwrap());
        for a in pp.amplitudes() {
            assert!((a - c(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((pp.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_gate_flips_second_qubit() {
        let ix = GateMatrix::identity(1).tensor(&x());
        let out = ix.apply(&StateVector::basis(2, 2).unwrap()).unwrap();
        assert_eq!(out[3], ONE);
        let hh = h().tensor(&h());
        let out = hh.apply(&StateVector::zero(2).unwrap()).unwrap();
        assert!(max_abs_diff(&out, StateVector::plus(2).unwrap().amplitudes()) < 1e-15);
    }

    #[test]
    fn apply_examples() {
        let zero = StateVector::zero(1).unwrap();
        assert_eq!(x().apply(&zero).unwrap(), vec![ZERO, ONE]);
        let hz = h().apply(&zero).unwrap();
        assert!((hz[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-16);
        assert!((hz[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-16);
        // (I - |0><0|)|0> = 0
        let proj = GateMatrix::identity(1)
            .sub(&GateMatrix::outer(zero.amplitudes(), zero.amplitudes()).unwrap())
            .unwrap();
        assert_eq!(proj.apply(&zero).unwrap(), vec![ZERO, ZERO]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = x().apply(&StateVector::zero(2).unwrap()).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 4 });
        let err = StateVector::zero(1)
            .unwrap()
            .inner(&StateVector::zero(2).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn inner_examples() {
        let zero = StateVector::zero(1).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let plus = StateVector::plus(1).unwrap();
        assert_eq!(zero.inner(&zero).unwrap(), ONE);
        assert_eq!(zero.inner(&one).unwrap(), ZERO);
        assert!((plus.inner(&zero).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expectation_and_uncertainty_examples() {
        let zero = StateVector::zero(1).unwrap();
        assert_eq!(expectation(&x(), &zero).unwrap(), ZERO);
        assert!((expectation(&h(), &zero).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(uncertainty(&GateMatrix::identity(1), &zero).unwrap(), 0.0);
        assert!((uncertainty(&h(), &zero).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((uncertainty(&x(), &zero).unwrap() - 1.0).abs() < 1e-15);

        // <01| H (x) H |01> = <0|H|0><1|H|1>
        let hh = h().tensor(&h());
        let s01 = StateVector::basis(2, 1).unwrap();
        assert!((expectation(&hh, &s01).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn weak_value_examples() {
        let zero = StateVector::zero(1).unwrap();
        let plus = StateVector::plus(1).unwrap();
        assert!((weak_value(&x(), &zero, &plus).unwrap() - ONE).norm() < 1e-15);
        assert!((weak_value(&GateMatrix::identity(1), &plus, &zero).unwrap() - ONE).norm() < 1e-15);

        let post = StateVector::normalize(vec![c(3.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let w = weak_value(&z(), &plus, &post).unwrap();
        assert!((w - c(2.0, 0.0)).norm() < 1e-14, "{w}");
    }

    #[test]
    fn weak_value_rejects_orthogonal_post_selection() {
        let zero = StateVector::zero(1).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        assert!(matches!(
            weak_value(&x(), &zero, &one),
            Err(Error::OrthogonalPostSelection { .. })
        ));
    }

    #[test]
    fn basis_state_examples() {
        assert_eq!(basis_state(1, BasisLabel::Zero).unwrap().amplitudes(), &[ONE, ZERO]);
        let p = basis_state(2, BasisLabel::Plus).unwrap();
        assert!(p.amplitudes().iter().all(|a| (a - c(0.5, 0.0)).norm() < 1e-16));
        for n in 1..6 {
            let o = basis_state(n, BasisLabel::Plus)
                .unwrap()
                .inner(&basis_state(n, BasisLabel::Zero).unwrap())
                .unwrap();
            assert!((o.re - 2f64.powf(-(n as f64) / 2.0)).abs() < 1e-15);
        }
        assert!(basis_state(0, BasisLabel::Zero).is_err());
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(StateVector::new(vec![ONE, ONE]).is_err());
        assert!(StateVector::new(vec![ONE, ZERO, ZERO]).is_err());
        assert!(StateVector::new(vec![c(f64::NAN, 0.0), ZERO]).is_err());
        assert!(StateVector::normalize(vec![ZERO, ZERO]).is_err());
        assert!(scalar(f64::INFINITY, 0.0).is_err());
        assert!(GateMatrix::from_rows(&[vec![ONE, ONE], vec![ONE, ONE]], true).is_err());
        assert!(GateMatrix::from_rows(&[vec![ONE, ONE], vec![ONE, ONE]], false).is_ok());
    }

    #[test]
    fn basis_labels_put_qubit_zero_first() {
        assert_eq!(StateVector::basis_label(2, 1), "01");
        assert_eq!(StateVector::basis_label(3, 5), "101");
        let s = StateVector::basis(3, 6).unwrap();
        assert_eq!(s.basis_index(1e-12), Some(6));
        assert_eq!(StateVector::plus(2).unwrap().basis_index(1e-12), None);
    }
}
