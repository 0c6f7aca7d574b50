//! Random states, operators and circuits for property checks and `selftest`.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuits::{cx, embed, standard_gate, StdGate};
use crate::decomposer::{GateSequence, Group};
use crate::qcore::{GateMatrix, StateVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-like random state (normalized complex Gaussian vector).
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize) -> StateVector {
    let v: Vec<Complex64> = (0..1usize << n_qubits).map(|_| gaussian(rng)).collect();
    StateVector::normalize(v).expect("a Gaussian vector is almost surely nonzero")
}

/// Random unitary by Gram-Schmidt orthonormalization of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize) -> GateMatrix {
    let dim = 1usize << n_qubits;
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        // Two passes keep the columns orthogonal to machine precision.
        for _ in 0..2 {
            for c in &cols {
                let proj: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(c) {
                    *x -= proj * a;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    let m = Array2::from_shape_fn((dim, dim), |(r, c)| cols[c][r]);
    GateMatrix::new_unitary(m).expect("Gram-Schmidt output is unitary")
}

/// Random Hermitian matrix `(G + G^dagger) / 2` with Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize) -> GateMatrix {
    let dim = 1usize << n_qubits;
    let g = Array2::from_shape_fn((dim, dim), |_| gaussian(rng));
    let h = Array2::from_shape_fn((dim, dim), |(r, c)| (g[[r, c]] + g[[c, r]].conj()) * 0.5);
    GateMatrix::new_general(h).expect("finite entries")
}

/// Random circuit of `m` gates drawn from {H, X, Z, S, T, CX, random 1-qubit unitary}.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, m: usize) -> GateSequence {
    let mut seq = GateSequence::new(n_qubits);
    for _ in 0..m {
        let target = rng.random_range(0..n_qubits);
        let choice = rng.random_range(0..7);
        let (label, matrix) = match choice {
            0..=4 => {
                let g = [StdGate::H, StdGate::X, StdGate::Z, StdGate::S, StdGate::T][choice];
                (format!("{g}_q{target}"), standard_gate(g, n_qubits, target).unwrap())
            }
            5 if n_qubits > 1 => {
                let mut control = rng.random_range(0..n_qubits - 1);
                if control >= target {
                    control += 1;
                }
                (format!("cx_q{control}q{target}"), cx(n_qubits, control, target).unwrap())
            }
            _ => {
                let u = random_unitary(rng, 1);
                (format!("u_q{target}"), embed(&u, n_qubits, &[target]).unwrap())
            }
        };
        seq.push(label, matrix).expect("gates built for this register");
    }
    seq
}

/// Random tiling of `0..m` into contiguous groups.
pub fn random_tiling<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<Group> {
    let mut groups = Vec::new();
    let mut start = 0;
    while start < m {
        let span = rng.random_range(0..m - start);
        groups.push(Group::new(start, span));
        start += span + 1;
    }
    groups
}
