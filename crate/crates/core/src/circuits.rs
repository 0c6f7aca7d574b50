//! Standard gates and builders for Deutsch, Grover and phase estimation.
//!
//! Subscripts in labels are 0-based qubit indices: `X_q1` is the NOT gate on
//! the second qubit.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;

use crate::decomposer::{GateSequence, Group};
use crate::error::{Error, Result};
use crate::qcore::{GateMatrix, StateVector, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StdGate {
    I,
    X,
    Y,
    Z,
    H,
    S,
    T,
}

impl StdGate {
    pub const ALL: [StdGate; 7] = [
        StdGate::I,
        StdGate::X,
        StdGate::Y,
        StdGate::Z,
        StdGate::H,
        StdGate::S,
        StdGate::T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StdGate::I => "i",
            StdGate::X => "x",
            StdGate::Y => "y",
            StdGate::Z => "z",
            StdGate::H => "h",
            StdGate::S => "s",
            StdGate::T => "t",
        }
    }

    /// The 2x2 matrix.
    pub fn matrix(self) -> GateMatrix {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let rows = match self {
            StdGate::I => [[ONE, ZERO], [ZERO, ONE]],
            StdGate::X => [[ZERO, ONE], [ONE, ZERO]],
            StdGate::Y => [[ZERO, -i], [i, ZERO]],
            StdGate::Z => [[ONE, ZERO], [ZERO, -ONE]],
            StdGate::H => [[h, h], [h, -h]],
            StdGate::S => [[ONE, ZERO], [ZERO, i]],
            StdGate::T => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, PI / 4.0)]],
        };
        GateMatrix::assume_unitary(Array2::from_shape_fn((2, 2), |(r, c)| rows[r][c]))
    }
}

impl FromStr for StdGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StdGate::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown gate name {s:?}")))
    }
}

impl fmt::Display for StdGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-qubit phase gate `diag(1, e^{i theta})`.
pub fn phase_gate(theta: f64) -> GateMatrix {
    let mut m = Array2::zeros((2, 2));
    m[[0, 0]] = ONE;
    m[[1, 1]] = Complex64::from_polar(1.0, theta);
    GateMatrix::assume_unitary(m)
}

/// Embeds a `k`-qubit matrix on the listed targets of an `n`-qubit register.
/// `targets[0]` plays the role of the matrix's most significant qubit.
pub fn embed(u: &GateMatrix, n: usize, targets: &[usize]) -> Result<GateMatrix> {
    let k = u.n_qubits();
    if targets.len() != k {
        return Err(Error::InvalidParams(format!(
            "a {k}-qubit gate needs {k} targets, got {}",
            targets.len()
        )));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(Error::IndexOutOfRange {
                index: t,
                n_qubits: n,
            });
        }
        if targets[..i].contains(&t) {
            return Err(Error::InvalidParams(format!("target {t} repeated")));
        }
    }
    let dim = 1usize << n;
    let sub_dim = 1usize << k;
    let masks: Vec<usize> = targets.iter().map(|&t| 1usize << (n - 1 - t)).collect();
    let all_mask: usize = masks.iter().sum();
    let scatter = |sub: usize| -> usize {
        masks
            .iter()
            .enumerate()
            .filter(|(b, _)| (sub >> (k - 1 - b)) & 1 == 1)
            .map(|(_, m)| m)
            .sum()
    };
    let scattered: Vec<usize> = (0..sub_dim).map(scatter).collect();
    let gather = |i: usize| -> usize {
        masks
            .iter()
            .enumerate()
            .filter(|(_, m)| i & **m != 0)
            .map(|(b, _)| 1usize << (k - 1 - b))
            .sum()
    };

    let src = u.entries();
    let mut m = Array2::zeros((dim, dim));
    for col in 0..dim {
        let sub_in = gather(col);
        let base = col & !all_mask;
        for (sub_out, offset) in scattered.iter().enumerate() {
            let v = src[[sub_out, sub_in]];
            if v != ZERO {
                m[[base | offset, col]] = v;
            }
        }
    }
    if u.is_unitary() {
        Ok(GateMatrix::assume_unitary(m))
    } else {
        GateMatrix::new_general(m)
    }
}

pub fn standard_gate(gate: StdGate, n: usize, target: usize) -> Result<GateMatrix> {
    embed(&gate.matrix(), n, &[target])
}

/// The same single-qubit gate on several qubits at once.
pub fn gate_on_each(gate: StdGate, n: usize, targets: &[usize]) -> Result<GateMatrix> {
    let mut out = GateMatrix::identity(n);
    for &t in targets {
        out = standard_gate(gate, n, t)?.compose(&out)?;
    }
    Ok(out)
}

/// `g^(x)n`.
pub fn tensor_power(g: &GateMatrix, n: usize) -> GateMatrix {
    (1..n).fold(g.clone(), |acc, _| acc.tensor(g))
}

/// `|0><0| (x) I + |1><1| (x) U` placed on `control` and `targets`.
pub fn controlled(u: &GateMatrix, n: usize, control: usize, targets: &[usize]) -> Result<GateMatrix> {
    let d = u.dim();
    let mut block = Array2::zeros((2 * d, 2 * d));
    for i in 0..d {
        block[[i, i]] = ONE;
    }
    for ((r, c), v) in u.entries().indexed_iter() {
        block[[d + r, d + c]] = *v;
    }
    let block = if u.is_unitary() {
        GateMatrix::assume_unitary(block)
    } else {
        GateMatrix::new_general(block)?
    };
    let mut all = Vec::with_capacity(targets.len() + 1);
    all.push(control);
    all.extend_from_slice(targets);
    embed(&block, n, &all)
}

pub fn cx(n: usize, control: usize, target: usize) -> Result<GateMatrix> {
    controlled(&StdGate::X.matrix(), n, control, &[target])
}

/// `u^power` by repeated squaring.
pub fn matrix_power(u: &GateMatrix, mut power: u64) -> GateMatrix {
    let mut result = GateMatrix::identity(u.n_qubits());
    let mut base = u.clone();
    while power > 0 {
        if power & 1 == 1 {
            result = base.compose(&result).expect("same dimension");
        }
        base = base.compose(&base).expect("same dimension");
        power >>= 1;
    }
    result
}

/// The four Boolean functions on one bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeutschOracle {
    Const0,
    Const1,
    /// `f(x) = x`
    IdentityBalanced,
    /// `f(x) = 1 - x`
    NotBalanced,
}

impl DeutschOracle {
    pub const ALL: [DeutschOracle; 4] = [
        DeutschOracle::Const0,
        DeutschOracle::Const1,
        DeutschOracle::IdentityBalanced,
        DeutschOracle::NotBalanced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DeutschOracle::Const0 => "const0",
            DeutschOracle::Const1 => "const1",
            DeutschOracle::IdentityBalanced => "identity_balanced",
            DeutschOracle::NotBalanced => "not_balanced",
        }
    }

    pub fn eval(self, x: usize) -> usize {
        match self {
            DeutschOracle::Const0 => 0,
            DeutschOracle::Const1 => 1,
            DeutschOracle::IdentityBalanced => x & 1,
            DeutschOracle::NotBalanced => 1 - (x & 1),
        }
    }

    pub fn is_balanced(self) -> bool {
        matches!(self, DeutschOracle::IdentityBalanced | DeutschOracle::NotBalanced)
    }

    /// `U_f |x, y> = |x, y xor f(x)>` on two qubits.
    pub fn matrix(self) -> GateMatrix {
        let mut m = Array2::zeros((4, 4));
        for x in 0..2 {
            for y in 0..2 {
                let col = (x << 1) | y;
                let row = (x << 1) | (y ^ self.eval(x));
                m[[row, col]] = ONE;
            }
        }
        GateMatrix::assume_unitary(m)
    }
}

impl FromStr for DeutschOracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "const0" => Ok(DeutschOracle::Const0),
            "const1" => Ok(DeutschOracle::Const1),
            "identity_balanced" | "identity" => Ok(DeutschOracle::IdentityBalanced),
            "not_balanced" | "not" => Ok(DeutschOracle::NotBalanced),
            other => Err(Error::InvalidParams(format!("unknown Deutsch oracle {other:?}"))),
        }
    }
}

/// Either a Deutsch function or a Grover marked set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Deutsch(DeutschOracle),
    Marked(BTreeSet<usize>),
}

/// `[X_q1, H_q0 H_q1, U_f, H_q0]` on two qubits.
pub fn deutsch_sequence(oracle: DeutschOracle) -> GateSequence {
    let mut seq = GateSequence::new(2);
    let mut build = || -> Result<()> {
        seq.push("X_q1", standard_gate(StdGate::X, 2, 1)?)?;
        seq.push("H_q0.H_q1", gate_on_each(StdGate::H, 2, &[0, 1])?)?;
        seq.push(format!("U_f[{}]", oracle.name()), oracle.matrix())?;
        seq.push("H_q0", standard_gate(StdGate::H, 2, 0)?)?;
        Ok(())
    };
    build().expect("fixed two-qubit construction");
    seq
}

fn check_marked(n: usize, marked: &BTreeSet<usize>) -> Result<()> {
    if marked.is_empty() {
        return Err(Error::InvalidParams("marked set is empty".into()));
    }
    if let Some(&bad) = marked.iter().find(|&&m| m >= 1 << n) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n_qubits: n,
        });
    }
    Ok(())
}

/// Phase oracle: `-1` on every marked basis state.
pub fn phase_oracle(n: usize, marked: &BTreeSet<usize>) -> Result<GateMatrix> {
    check_marked(n, marked)?;
    let diag: Vec<Complex64> = (0..1usize << n)
        .map(|i| if marked.contains(&i) { -ONE } else { ONE })
        .collect();
    GateMatrix::diagonal(&diag)
}

/// `I - 2|0><0|`.
pub fn zero_reflection(n: usize) -> GateMatrix {
    phase_oracle(n, &BTreeSet::from([0])).expect("index 0 always in range")
}

/// Pieces of `Q = A S_0 A^dagger S_f` with `A = H^(x)n`.
#[derive(Debug, Clone)]
pub struct GroverPieces {
    pub s_f: GateMatrix,
    pub s_0: GateMatrix,
    pub a: GateMatrix,
    /// `A S_0 A^dagger S_f`
    pub q: GateMatrix,
    /// `A^dagger S_f`
    pub g1: GateMatrix,
    /// `A S_0`
    pub g2: GateMatrix,
}

pub fn grover_pieces(n: usize, marked: &BTreeSet<usize>) -> Result<GroverPieces> {
    let s_f = phase_oracle(n, marked)?;
    let s_0 = zero_reflection(n);
    let a = tensor_power(&StdGate::H.matrix(), n);
    let g1 = a.dagger().compose(&s_f)?;
    let g2 = a.compose(&s_0)?;
    let q = g2.compose(&g1)?;
    Ok(GroverPieces {
        s_f,
        s_0,
        a,
        q,
        g1,
        g2,
    })
}

/// `[A^dagger S_f, A S_0]` repeated `iterations` times.
pub fn grover_subroutine_sequence(
    n: usize,
    marked: &BTreeSet<usize>,
    iterations: usize,
) -> Result<GateSequence> {
    let pieces = grover_pieces(n, marked)?;
    let mut seq = GateSequence::new(n);
    for _ in 0..iterations {
        seq.push("A^dag.S_f", pieces.g1.clone())?;
        seq.push("A.S_0", pieces.g2.clone())?;
    }
    Ok(seq)
}

/// `[S_f, A^dagger, S_0, A]` repeated; pair with [`grover_partition`] to
/// recover the two sub-routines as groups.
pub fn grover_gate_sequence(
    n: usize,
    marked: &BTreeSet<usize>,
    iterations: usize,
) -> Result<GateSequence> {
    let pieces = grover_pieces(n, marked)?;
    let mut seq = GateSequence::new(n);
    for _ in 0..iterations {
        seq.push("S_f", pieces.s_f.clone())?;
        seq.push("A^dag", pieces.a.dagger())?;
        seq.push("S_0", pieces.s_0.clone())?;
        seq.push("A", pieces.a.clone())?;
    }
    Ok(seq)
}

/// Groups `(4i:1)(4i+2:1)` for [`grover_gate_sequence`].
pub fn grover_partition(iterations: usize) -> Vec<Group> {
    (0..2 * iterations).map(|i| Group::new(2 * i, 1)).collect()
}

/// Inverse QFT: entries `2^{-n/2} e^{-2 pi i jk / 2^n}`.
pub fn iqft(n: usize) -> GateMatrix {
    fourier(n, -1.0)
}

pub fn qft(n: usize) -> GateMatrix {
    fourier(n, 1.0)
}

fn fourier(n: usize, sign: f64) -> GateMatrix {
    let dim = 1usize << n;
    let scale = (dim as f64).sqrt().recip();
    let m = Array2::from_shape_fn((dim, dim), |(j, k)| {
        let angle = sign * 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
        Complex64::from_polar(scale, angle)
    });
    GateMatrix::assume_unitary(m)
}

/// Inputs of phase estimation: `U |v> = e^{i phase} |v>`.
#[derive(Debug, Clone)]
pub struct QpeSpec {
    pub n_count: usize,
    pub unitary: GateMatrix,
    pub eigenstate: StateVector,
    pub phase: Option<f64>,
}

impl QpeSpec {
    pub fn new(
        n_count: usize,
        unitary: GateMatrix,
        eigenstate: StateVector,
        phase: Option<f64>,
    ) -> Result<Self> {
        if n_count == 0 {
            return Err(Error::InvalidParams("phase estimation needs a counting qubit".into()));
        }
        if unitary.dim() != eigenstate.dim() {
            return Err(Error::DimensionMismatch {
                expected: unitary.dim(),
                found: eigenstate.dim(),
            });
        }
        if !unitary.is_unitary() {
            return Err(Error::InvalidGate("U must be unitary".into()));
        }
        if let Some(phi) = phase {
            let image = unitary.apply(&eigenstate)?;
            let expected = Complex64::from_polar(1.0, phi);
            let defect = image
                .iter()
                .zip(eigenstate.amplitudes())
                .map(|(a, v)| (a - expected * v).norm())
                .fold(0.0, f64::max);
            if defect > 1e-10 {
                return Err(Error::InvalidParams(format!(
                    "|v> is not an eigenstate of U with phase {phi} (defect {defect:e})"
                )));
            }
        }
        Ok(Self {
            n_count,
            unitary,
            eigenstate,
            phase,
        })
    }

    /// `U = diag(1, e^{i 2 pi k / 2^n})`, `|v> = |1>`, phase `2 pi k / 2^n`.
    pub fn exact_phase(n_count: usize, k: usize) -> Result<Self> {
        let phi = 2.0 * PI * k as f64 / (1usize << n_count) as f64;
        Self::new(n_count, phase_gate(phi), StateVector::basis(1, 1)?, Some(phi))
    }

    /// Same eigenphase as [`QpeSpec::exact_phase`] but carried by `|+>` of
    /// `U = H diag(e^{i phi}, 1) H`, so `|v>` overlaps `|0>`.
    pub fn exact_phase_plus(n_count: usize, k: usize) -> Result<Self> {
        let phi = 2.0 * PI * k as f64 / (1usize << n_count) as f64;
        let h = StdGate::H.matrix();
        let d = GateMatrix::diagonal(&[Complex64::from_polar(1.0, phi), ONE])?;
        let u = h.compose(&d)?.compose(&h)?;
        Self::new(n_count, u, StateVector::plus(1)?, Some(phi))
    }

    pub fn n_target(&self) -> usize {
        self.unitary.n_qubits()
    }

    pub fn n_total(&self) -> usize {
        self.n_count + self.n_target()
    }

    /// `|0>^(x)N (x) |v>`.
    pub fn initial_state(&self) -> StateVector {
        StateVector::zero(self.n_count)
            .expect("n_count >= 1")
            .tensor(&self.eigenstate)
    }
}

/// `[H^N, C U^1, C U^2, ..., C U^{2^{N-1}}, IQFT]`; gate `G_k` (k = 1..N) is
/// controlled by counting qubit `N - k`, so qubit `c` controls
/// `U^{2^{N-1-c}}` and an exact phase `2 pi m / 2^N` decodes to `|m>`.
pub fn qpe_sequence(spec: &QpeSpec) -> Result<GateSequence> {
    let n = spec.n_count;
    let total = spec.n_total();
    let counting: Vec<usize> = (0..n).collect();
    let targets: Vec<usize> = (n..total).collect();
    let mut seq = GateSequence::new(total);
    seq.push(format!("H^{n}"), gate_on_each(StdGate::H, total, &counting)?)?;
    for k in 1..=n {
        let control = n - k;
        let power = 1u64 << (k - 1);
        let u_pow = matrix_power(&spec.unitary, power);
        seq.push(
            format!("C_q{control}.U^{power}"),
            controlled(&u_pow, total, control, &targets)?,
        )?;
    }
    seq.push("IQFT", embed(&iqft(n), total, &counting)?)?;
    Ok(seq)
}

/// Groups over the full QPE sequence: the Hadamard layer, the controlled
/// powers `G_N ... G_1` as one block, and the inverse QFT.
pub fn qpe_partition(n_count: usize) -> Vec<Group> {
    vec![
        Group::new(0, 0),
        Group::new(1, n_count - 1),
        Group::new(n_count + 1, 0),
    ]
}
