//! Naive dense linear algebra used as an independent oracle in tests.
#![allow(dead_code)]

use std::path::PathBuf;

use avdecomp::{GateMatrix, GateSequence, StateVector};
use num_complex::Complex64 as C;

pub type Mat = Vec<Vec<C>>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn zeros(d: usize) -> Mat {
    vec![vec![c(0.0, 0.0); d]; d]
}

pub fn identity(d: usize) -> Mat {
    let mut m = zeros(d);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let d = a.len();
    let mut out = zeros(d);
    for i in 0..d {
        for k in 0..d {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Mat, v: &[C]) -> Vec<C> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn dagger(a: &Mat) -> Mat {
    let d = a.len();
    (0..d).map(|i| (0..d).map(|j| a[j][i].conj()).collect()).collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (da, db) = (a.len(), b.len());
    let mut out = zeros(da * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[i * db + k][j * db + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn scale(a: &Mat, s: C) -> Mat {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn x2() -> Mat {
    vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn h2() -> Mat {
    let s = 0.5f64.sqrt();
    vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]
}

/// One-qubit `u` on `target` of `n` qubits; qubit 0 is the leftmost factor.
pub fn on_qubit(u: &Mat, n: usize, target: usize) -> Mat {
    let id = identity(2);
    let mut m = vec![vec![c(1.0, 0.0)]];
    for q in 0..n {
        m = kron(&m, if q == target { u } else { &id });
    }
    m
}

/// `H^(x)n` from its closed form `(-1)^{popcount(i & j)} / sqrt(2^n)`.
pub fn hadamard_n(n: usize) -> Mat {
    let d = 1usize << n;
    let s = (d as f64).sqrt().recip();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    c(sign * s, 0.0)
                })
                .collect()
        })
        .collect()
}

pub fn diag(d: &[C]) -> Mat {
    let mut m = zeros(d.len());
    for (i, z) in d.iter().enumerate() {
        m[i][i] = *z;
    }
    m
}

/// Permutation matrix sending `|i>` to `|f(i)>`.
pub fn permutation(d: usize, f: impl Fn(usize) -> usize) -> Mat {
    let mut m = zeros(d);
    for i in 0..d {
        m[f(i)][i] = c(1.0, 0.0);
    }
    m
}

pub fn basis(d: usize, i: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); d];
    v[i] = c(1.0, 0.0);
    v
}

pub fn vdot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn mat_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b)
        .map(|(r, s)| max_diff(r, s))
        .fold(0.0, f64::max)
}

pub fn expectation(a: &Mat, psi: &[C]) -> C {
    vdot(psi, &matvec(a, psi))
}

fn residual(a: &Mat, psi: &[C]) -> Vec<C> {
    let e = expectation(a, psi);
    matvec(a, psi)
        .iter()
        .zip(psi)
        .map(|(x, p)| x - e * p)
        .collect()
}

/// Standard deviation as the norm of `(A - <A>) psi`.
pub fn uncertainty(a: &Mat, psi: &[C]) -> f64 {
    norm(&residual(a, psi))
}

/// `(A - <A>) psi / Delta`, or `None` when `Delta` vanishes.
pub fn perp(a: &Mat, psi: &[C]) -> Option<Vec<C>> {
    let r = residual(a, psi);
    let d = norm(&r);
    (d > 1e-12).then(|| r.iter().map(|z| z / d).collect())
}

pub fn to_mat(g: &GateMatrix) -> Mat {
    g.entries()
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().collect())
        .collect()
}

pub fn gate_mats(seq: &GateSequence) -> Vec<Mat> {
    seq.gates().iter().map(|g| to_mat(&g.matrix)).collect()
}

pub fn simulate(gates: &[Mat], psi: &[C]) -> Vec<C> {
    gates.iter().fold(psi.to_vec(), |v, g| matvec(g, &v))
}

pub fn simulate_seq(seq: &GateSequence, psi: &StateVector) -> Vec<C> {
    simulate(&gate_mats(seq), psi.amplitudes())
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "qc"))
        .collect();
    files.sort();
    files
}

/// Malformed files with their `# expect L:C` header.
pub fn malformed_cases() -> Vec<(PathBuf, String, usize, usize)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir().join("malformed"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let header = text.lines().next().unwrap();
            let (l, col) = header
                .strip_prefix("# expect ")
                .and_then(|s| s.split_once(':'))
                .unwrap_or_else(|| panic!("{} lacks an expect header", p.display()));
            (p, text.clone(), l.parse().unwrap(), col.parse().unwrap())
        })
        .collect()
}

/// True when `(line, column)` lies inside `source`; column 1 of an empty
/// line counts.
pub fn position_in_source(source: &str, line: usize, column: usize) -> bool {
    let lines: Vec<&str> = source.split('\n').collect();
    if line == 0 || line > lines.len().max(1) {
        return false;
    }
    let len = lines.get(line - 1).map(|l| l.chars().count()).unwrap_or(0);
    column >= 1 && column <= len.max(1)
}
