//! The Aharonov-Vaidman identity and its basis-changing generalization.
//!
//! `A|psi> = <A>|psi> + Delta A |psi_perp>` splits the action of an operator
//! along the input state and one orthogonal direction.
//!
//! The generalized form projects `A|psi>` off a chosen direction `K|phi>`
//! with `R_phi = qI - K|phi><phi|` (requiring `<K>^phi = q`):
//!
//! ```text
//! A|psi> = <kappa A>_w^{phi,psi} K|phi> + mu Delta_psi(R_phi A) |phi_perp>
//! ```
//!
//! where `kappa = <phi|psi> / <K>^phi`, `|phi_perp> = R_phi A|psi> / C` and
//! `C = q mu Delta_psi(R_phi A)`.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::qcore::{
    check_dim, expectation, uncertainty_from_image, vdot, weak_value_with, GateMatrix,
    StateVector, ONE, ZERO,
};

/// Terms of `A|psi> = <A>|psi> + Delta|psi_perp>`.
#[derive(Debug, Clone, PartialEq)]
pub struct AvTerms {
    pub expectation: Complex64,
    pub uncertainty: f64,
    /// `(A - <A>)|psi> / Delta`; absent when `Delta` is degenerate.
    pub orthogonal_state: Option<StateVector>,
    pub source_state: StateVector,
}

impl AvTerms {
    /// `<A>|psi> + Delta|psi_perp>` as a raw vector.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self
            .source_state
            .amplitudes()
            .iter()
            .map(|z| self.expectation * z)
            .collect();
        if let Some(perp) = &self.orthogonal_state {
            for (o, z) in out.iter_mut().zip(perp.amplitudes()) {
                *o += self.uncertainty * z;
            }
        }
        out
    }
}

pub fn av_decompose(a: &GateMatrix, psi: &StateVector) -> Result<AvTerms> {
    av_decompose_with(a, psi, &Tolerances::default())
}

pub fn av_decompose_with(a: &GateMatrix, psi: &StateVector, tol: &Tolerances) -> Result<AvTerms> {
    let image = a.apply(psi)?;
    Ok(av_from_image(&image, psi, tol))
}

/// AV terms from a precomputed image `A|psi>`.
pub(crate) fn av_from_image(image: &[Complex64], psi: &StateVector, tol: &Tolerances) -> AvTerms {
    let (e, delta) = uncertainty_from_image(image, psi);
    let orthogonal_state = if delta > tol.degenerate {
        let residual: Vec<Complex64> = image
            .iter()
            .zip(psi.amplitudes())
            .map(|(gz, z)| gz - e * z)
            .collect();
        StateVector::normalize(residual).ok()
    } else {
        None
    };
    AvTerms {
        expectation: e,
        uncertainty: delta,
        orthogonal_state,
        source_state: psi.clone(),
    }
}

/// `R_phi = qI - K|phi><phi|`.
///
/// Not a projector in general; it is the operator that removes the
/// `K|phi>` component of a vector scaled by `q`.
pub fn projector_r(phi: &StateVector, k: &GateMatrix, q: f64) -> Result<GateMatrix> {
    projector_r_with(phi, k, q, &Tolerances::default())
}

pub fn projector_r_with(
    phi: &StateVector,
    k: &GateMatrix,
    q: f64,
    tol: &Tolerances,
) -> Result<GateMatrix> {
    check_condition(phi, k, q, tol)?;
    let k_phi = k.apply(phi)?;
    let rank_one = GateMatrix::outer(&k_phi, phi.amplitudes())?;
    GateMatrix::identity(phi.n_qubits())
        .scale(Complex64::new(q, 0.0))
        .sub(&rank_one)
}

fn check_condition(phi: &StateVector, k: &GateMatrix, q: f64, tol: &Tolerances) -> Result<Complex64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidParams(format!("q must be a positive real, got {q}")));
    }
    let k_exp = expectation(k, phi)?;
    if (k_exp - Complex64::new(q, 0.0)).norm() > tol.condition {
        return Err(Error::ConditionViolated { actual: k_exp, q });
    }
    Ok(k_exp)
}

/// Terms of the generalized identity.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedTerms {
    /// `<kappa A>_w^{phi,psi} = <phi|A|psi> / q`.
    pub weak_value_scaled: Complex64,
    /// `<phi|psi> / <K>^phi`.
    pub kappa: Complex64,
    pub q: f64,
    pub k: GateMatrix,
    /// `sqrt(1 + |<R_phi A>^psi|^2 / Delta^2) / q`; absent when `Delta` is degenerate.
    pub mu: Option<f64>,
    /// `Delta_psi(R_phi A)`.
    pub delta: f64,
    /// `||R_phi A|psi>||`.
    pub c: f64,
    /// `<R_phi A>^psi`.
    pub projected_expectation: Complex64,
    pub phi: StateVector,
    pub phi_perp: Option<StateVector>,
}

impl GeneralizedTerms {
    /// `K|phi>` as a raw vector.
    pub fn k_phi(&self) -> Vec<Complex64> {
        self.k
            .apply(&self.phi)
            .expect("K and phi dimensions are checked at construction")
    }

    /// Coefficient of `|phi_perp>`, i.e. `C / q`.
    pub fn orthogonal_coefficient(&self) -> f64 {
        self.c / self.q
    }

    /// `weak_value_scaled K|phi> + (C/q)|phi_perp>`.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self
            .k_phi()
            .into_iter()
            .map(|z| self.weak_value_scaled * z)
            .collect();
        if let Some(perp) = &self.phi_perp {
            let coeff = self.orthogonal_coefficient();
            for (o, z) in out.iter_mut().zip(perp.amplitudes()) {
                *o += coeff * z;
            }
        }
        out
    }
}

pub fn generalized_decompose(
    a: &GateMatrix,
    psi: &StateVector,
    phi: &StateVector,
    k: &GateMatrix,
    q: f64,
) -> Result<GeneralizedTerms> {
    generalized_decompose_with(a, psi, phi, k, q, &Tolerances::default())
}

pub fn generalized_decompose_with(
    a: &GateMatrix,
    psi: &StateVector,
    phi: &StateVector,
    k: &GateMatrix,
    q: f64,
    tol: &Tolerances,
) -> Result<GeneralizedTerms> {
    check_dim(a.dim(), psi.dim())?;
    let a_psi = a.apply(psi)?;
    generalized_from_image(&a_psi, psi, phi, k, q, tol)
}

/// Generalized terms from a precomputed image `A|psi>`. Dimensions of `K`,
/// `phi` and `psi` must already agree.
pub(crate) fn generalized_from_image(
    a_psi: &[Complex64],
    psi: &StateVector,
    phi: &StateVector,
    k: &GateMatrix,
    q: f64,
    tol: &Tolerances,
) -> Result<GeneralizedTerms> {
    check_dim(a_psi.len(), psi.dim())?;
    check_dim(psi.dim(), phi.dim())?;
    check_dim(k.dim(), phi.dim())?;
    check_condition(phi, k, q, tol)?;

    let overlap = phi.inner(psi)?;
    if overlap.norm() <= tol.overlap {
        return Err(Error::OrthogonalPostSelection {
            overlap: overlap.norm(),
        });
    }
    let phi_a_psi = vdot(phi.amplitudes(), a_psi);
    // <K>^phi is pinned to q by the condition above.
    let kappa = overlap / q;
    let weak_value_scaled = kappa * (phi_a_psi / overlap);

    let k_phi = k.apply(phi)?;
    let projected: Vec<Complex64> = a_psi
        .iter()
        .zip(&k_phi)
        .map(|(x, y)| q * x - y * phi_a_psi)
        .collect();

    let (projected_expectation, delta) = uncertainty_from_image(&projected, psi);
    let c = projected.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let phi_perp = if c > tol.degenerate {
        StateVector::normalize(projected).ok()
    } else {
        None
    };
    let mu = (delta > tol.degenerate)
        .then(|| (1.0 + projected_expectation.norm_sqr() / (delta * delta)).sqrt() / q);

    Ok(GeneralizedTerms {
        weak_value_scaled,
        kappa,
        q,
        k: k.clone(),
        mu,
        delta,
        c,
        projected_expectation,
        phi: phi.clone(),
        phi_perp,
    })
}

/// The normalization constant written as a sum of weak-value products over a
/// complete orthonormal basis, for `q = 1` and `K = I`:
///
/// `C = sqrt( sum_{j != which} <psi|phi_j><phi_j|psi> <A^dagger>_w^{psi,phi_j} <A>_w^{phi_j,psi} )`
///
/// Summands whose overlap `<phi_j|psi>` vanishes are evaluated in their
/// cancelled form `|<phi_j|A|psi>|^2`.
pub fn normalization_constant_basis_form(
    a: &GateMatrix,
    psi: &StateVector,
    basis: &[StateVector],
    which_phi: usize,
) -> Result<f64> {
    normalization_constant_basis_form_with(a, psi, basis, which_phi, &Tolerances::default())
}

pub fn normalization_constant_basis_form_with(
    a: &GateMatrix,
    psi: &StateVector,
    basis: &[StateVector],
    which_phi: usize,
    tol: &Tolerances,
) -> Result<f64> {
    check_dim(a.dim(), psi.dim())?;
    check_basis(basis, psi.dim(), tol)?;
    if which_phi >= basis.len() {
        return Err(Error::InvalidParams(format!(
            "basis index {which_phi} out of range for {} vectors",
            basis.len()
        )));
    }
    let a_dag = a.dagger();
    let mut total = ZERO;
    for (j, phi_j) in basis.iter().enumerate() {
        if j == which_phi {
            continue;
        }
        let overlap = phi_j.inner(psi)?;
        total += if overlap.norm() > tol.overlap {
            let forward = weak_value_with(a, psi, phi_j, tol)?;
            let backward = weak_value_with(&a_dag, phi_j, psi, tol)?;
            overlap.conj() * overlap * backward * forward
        } else {
            let amp = vdot(phi_j.amplitudes(), &a.apply(psi)?);
            Complex64::new(amp.norm_sqr(), 0.0)
        };
    }
    Ok(total.re.max(0.0).sqrt())
}

fn check_basis(basis: &[StateVector], dim: usize, tol: &Tolerances) -> Result<()> {
    if basis.len() != dim {
        return Err(Error::BasisNotComplete(format!(
            "{} vectors cannot span dimension {dim}",
            basis.len()
        )));
    }
    for v in basis {
        check_dim(dim, v.dim())?;
    }
    // sum_j |phi_j><phi_j| = I
    for r in 0..dim {
        for c in 0..dim {
            let sum: Complex64 = basis
                .iter()
                .map(|v| v.amplitudes()[r] * v.amplitudes()[c].conj())
                .sum();
            let target = if r == c { ONE } else { ZERO };
            if (sum - target).norm() > tol.normalization {
                return Err(Error::BasisNotComplete(format!(
                    "resolution of identity fails at ({r}, {c}) by {:e}",
                    (sum - target).norm()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::max_abs_diff;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn h() -> GateMatrix {
        let s = c(FRAC_1_SQRT_2, 0.0);
        GateMatrix::from_rows(&[vec![s, s], vec![s, -s]], true).unwrap()
    }

    fn x() -> GateMatrix {
        GateMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]], true).unwrap()
    }

    fn ry(theta: f64) -> GateMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        GateMatrix::from_rows(&[vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]], true)
            .unwrap()
    }

    #[test]
    fn av_identity_operator_is_degenerate() {
        let psi = StateVector::normalize(vec![c(0.6, 0.1), c(0.2, -0.7)]).unwrap();
        let t = av_decompose(&GateMatrix::identity(1), &psi).unwrap();
        assert!((t.expectation - ONE).norm() < 1e-15);
        assert!(t.uncertainty < 1e-15);
        assert!(t.orthogonal_state.is_none());
        assert!(max_abs_diff(&t.reconstruct(), psi.amplitudes()) < 1e-15);
    }

    #[test]
    fn av_hadamard_on_zero() {
        let zero = StateVector::zero(1).unwrap();
        let t = av_decompose(&h(), &zero).unwrap();
        assert!((t.expectation - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((t.uncertainty - FRAC_1_SQRT_2).abs() < 1e-15);
        let perp = t.orthogonal_state.unwrap();
        assert!(max_abs_diff(perp.amplitudes(), &[ZERO, ONE]) < 1e-15);
    }

    #[test]
    fn av_not_on_zero() {
        let zero = StateVector::zero(1).unwrap();
        let t = av_decompose(&x(), &zero).unwrap();
        assert_eq!(t.expectation, ZERO);
        assert!((t.uncertainty - 1.0).abs() < 1e-15);
        assert!(max_abs_diff(t.orthogonal_state.unwrap().amplitudes(), &[ZERO, ONE]) < 1e-15);
    }

    #[test]
    fn projector_examples() {
        let zero = StateVector::zero(1).unwrap();
        let r = projector_r(&zero, &GateMatrix::identity(1), 1.0).unwrap();
        assert!(!r.is_unitary());
        assert_eq!(r.entries()[[0, 0]], ZERO);
        assert_eq!(r.entries()[[1, 1]], ONE);

        let phi = StateVector::normalize(vec![c(0.3, 0.4), c(-0.5, 0.2)]).unwrap();
        let twice = GateMatrix::identity(1).scale(c(2.0, 0.0));
        assert!(matches!(
            projector_r(&phi, &twice, 1.0),
            Err(Error::ConditionViolated { .. })
        ));
        assert!(matches!(
            projector_r(&phi, &GateMatrix::identity(1), -1.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn projector_output_is_orthogonal_to_phi() {
        let phi = StateVector::normalize(vec![c(0.3, 0.4), c(-0.5, 0.2)]).unwrap();
        let psi = StateVector::normalize(vec![c(0.1, -0.4), c(0.8, 0.2)]).unwrap();
        let a = ry(0.77);
        for q in [0.5, 1.0, 2.0] {
            let k = GateMatrix::identity(1).scale(c(q, 0.0));
            let r = projector_r(&phi, &k, q).unwrap();
            let v = r.compose(&a).unwrap().apply(&psi).unwrap();
            assert!(vdot(phi.amplitudes(), &v).norm() < 1e-15);
        }
    }

    #[test]
    fn generalized_reduces_to_av_when_phi_is_psi() {
        let psi = StateVector::normalize(vec![c(0.1, -0.4), c(0.8, 0.2)]).unwrap();
        let a = ry(1.3).compose(&h()).unwrap();
        let av = av_decompose(&a, &psi).unwrap();
        let g = generalized_decompose(&a, &psi, &psi, &GateMatrix::identity(1), 1.0).unwrap();
        assert!((g.weak_value_scaled - av.expectation).norm() < 1e-12);
        assert!((g.c - av.uncertainty).abs() < 1e-12);
        let (p1, p2) = (g.phi_perp.unwrap(), av.orthogonal_state.unwrap());
        assert!((p1.inner(&p2).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_rebase_to_plus() {
        let zero = StateVector::zero(1).unwrap();
        let plus = StateVector::plus(1).unwrap();
        let g0 = ry(0.4).compose(&h()).unwrap();
        let t = generalized_decompose(&g0, &zero, &plus, &GateMatrix::identity(1), 1.0).unwrap();
        let direct = g0.apply(&zero).unwrap();
        assert!(max_abs_diff(&t.reconstruct(), &direct) < 1e-10);
        assert!((t.c - 1.0 * t.mu.unwrap() * t.delta).abs() / t.c < 1e-8);
        assert!(plus.inner(t.phi_perp.as_ref().unwrap()).unwrap().norm() < 1e-12);
    }

    #[test]
    fn generalized_identity_is_degenerate() {
        let zero = StateVector::zero(1).unwrap();
        let id = GateMatrix::identity(1);
        let t = generalized_decompose(&id, &zero, &zero, &id, 1.0).unwrap();
        assert!((t.weak_value_scaled - ONE).norm() < 1e-15);
        assert_eq!(t.c, 0.0);
        assert!(t.phi_perp.is_none());
        assert!(t.mu.is_none());
    }

    #[test]
    fn generalized_rejects_orthogonal_phi() {
        let zero = StateVector::zero(1).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let id = GateMatrix::identity(1);
        assert!(matches!(
            generalized_decompose(&h(), &zero, &one, &id, 1.0),
            Err(Error::OrthogonalPostSelection { .. })
        ));
    }

    #[test]
    fn basis_form_examples() {
        let zero = StateVector::zero(1).unwrap();
        let basis = vec![zero.clone(), StateVector::basis(1, 1).unwrap()];
        let id = GateMatrix::identity(1);
        assert_eq!(normalization_constant_basis_form(&id, &zero, &basis, 0).unwrap(), 0.0);
        let ch = normalization_constant_basis_form(&h(), &zero, &basis, 0).unwrap();
        assert!((ch - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn basis_form_rejects_incomplete_basis() {
        let zero = StateVector::zero(1).unwrap();
        let plus = StateVector::plus(1).unwrap();
        assert!(matches!(
            normalization_constant_basis_form(&h(), &zero, std::slice::from_ref(&zero), 0),
            Err(Error::BasisNotComplete(_))
        ));
        assert!(matches!(
            normalization_constant_basis_form(&h(), &zero, &[zero.clone(), plus], 0),
            Err(Error::BasisNotComplete(_))
        ));
    }
}
