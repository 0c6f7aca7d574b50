//! C ABI for `avdecomp`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns an [`AvStatus`];
//! on failure [`av_last_error_message`] describes the most recent error on the
//! calling thread. Complex numbers cross the boundary as [`AvComplex`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use avdecomp::decomposer::{decompose, decompose_rebased, make_partition, rebase};
use avdecomp::dsl::{self, BuiltCircuit};
use avdecomp::qcore::{expectation, uncertainty, weak_value};
use avdecomp::report::TreeReport;
use avdecomp::{DecomposeOptions, DecompositionResult, Error, GateMatrix, PartitionMode, StateVector};
use num_complex::Complex64;

/// Result codes. `AV_STATUS_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Build = 4,
    DimensionMismatch = 5,
    OrthogonalPostSelection = 6,
    ConditionViolated = 7,
    Numerical = 8,
    InvalidPartition = 9,
    InvalidArgument = 10,
    OutOfRange = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for AvComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<AvComplex> for Complex64 {
    fn from(z: AvComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// A parsed and built circuit.
pub struct AvCircuit {
    built: BuiltCircuit,
}

/// The outcome of decomposing an [`AvCircuit`].
pub struct AvDecomposition {
    name: String,
    result: DecompositionResult,
    rebase: Option<(avdecomp::GeneralizedTerms, DecompositionResult)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: AvStatus, msg: impl Into<String>) -> AvStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> AvStatus {
    match e {
        Error::DimensionMismatch { .. } => AvStatus::DimensionMismatch,
        Error::OrthogonalPostSelection { .. } => AvStatus::OrthogonalPostSelection,
        Error::ConditionViolated { .. } => AvStatus::ConditionViolated,
        Error::Numerical(_) => AvStatus::Numerical,
        Error::InvalidPartition(_) => AvStatus::InvalidPartition,
        Error::IndexOutOfRange { .. } => AvStatus::OutOfRange,
        _ => AvStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> AvStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning panics into `AV_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> AvStatus) -> AvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == AvStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(AvStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, AvStatus> {
    if p.is_null() {
        return Err(fail(AvStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(AvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Last error message on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn av_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn av_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `.qc` text and builds it. `base_dir` resolves UMAT paths and may be
/// null (current directory).
///
/// # Safety
/// `source` and a non-null `base_dir` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn av_circuit_parse(
    source: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut AvCircuit,
) -> AvStatus {
    guard(|| {
        if out.is_null() {
            return fail(AvStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let source = match str_arg(source, "source") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let base = if base_dir.is_null() {
            "."
        } else {
            match str_arg(base_dir, "base_dir") {
                Ok(s) => s,
                Err(s) => return s,
            }
        };
        let desc = match dsl::parse(source) {
            Ok(d) => d,
            Err(e) => return fail(AvStatus::Parse, e.to_string()),
        };
        match desc.build(Path::new(base)) {
            Ok(built) => {
                *out = Box::into_raw(Box::new(AvCircuit { built }));
                AvStatus::Ok
            }
            Err(e) => fail(AvStatus::Build, e.to_string()),
        }
    })
}

/// # Safety
/// `circuit` must come from [`av_circuit_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn av_circuit_free(circuit: *mut AvCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// # Safety
/// `circuit` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn av_circuit_n_qubits(circuit: *const AvCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.built.sequence.n_qubits())
}

/// # Safety
/// `circuit` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn av_circuit_gate_count(circuit: *const AvCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.built.sequence.len())
}

/// Decomposes `circuit`. `partition` is `whole`, `singles` or `(j:p)...`; null
/// uses the circuit's own partition, or `singles`. A negative `prune_tol`
/// selects the default. A rebase directive in the circuit is applied too.
///
/// # Safety
/// `circuit` must be live, a non-null `partition` NUL-terminated, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn av_decompose(
    circuit: *const AvCircuit,
    partition: *const c_char,
    prune_tol: f64,
    out: *mut *mut AvDecomposition,
) -> AvStatus {
    guard(|| {
        if out.is_null() {
            return fail(AvStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(c) = circuit.as_ref() else {
            return fail(AvStatus::NullPointer, "circuit is null");
        };
        let mode = if partition.is_null() {
            c.built.partition.clone().unwrap_or(PartitionMode::Singles)
        } else {
            let text = match str_arg(partition, "partition") {
                Ok(s) => s,
                Err(s) => return s,
            };
            match dsl::parse_partition(text) {
                Ok(m) => m,
                Err(e) => return fail(AvStatus::InvalidPartition, e.message),
            }
        };
        let mut opts = DecomposeOptions::default();
        if prune_tol.is_nan() {
            return fail(AvStatus::InvalidArgument, "prune_tol is NaN");
        }
        if prune_tol >= 0.0 {
            opts.prune_tol = prune_tol;
        }
        let seq = &c.built.sequence;
        let run = || -> avdecomp::Result<AvDecomposition> {
            let part = make_partition(seq, &mode)?;
            let result = decompose(seq, &part, &c.built.initial, &opts)?;
            let rebase = match &c.built.rebase {
                Some(t) => Some((
                    rebase(seq, &c.built.initial, t)?,
                    decompose_rebased(seq, &part, &c.built.initial, t, &opts)?,
                )),
                None => None,
            };
            Ok(AvDecomposition { name: c.built.name.clone(), result, rebase })
        };
        match run() {
            Ok(d) => {
                *out = Box::into_raw(Box::new(d));
                AvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `decomposition` must come from [`av_decompose`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_free(decomposition: *mut AvDecomposition) {
    if !decomposition.is_null() {
        drop(Box::from_raw(decomposition));
    }
}

/// # Safety
/// `d` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_leaf_count(d: *const AvDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.result.leaves.len())
}

/// # Safety
/// `d` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_pruned_count(d: *const AvDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.result.pruned_count)
}

/// Max-abs difference between the reconstruction and direct simulation, or
/// NaN for a null handle.
///
/// # Safety
/// `d` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_residual(d: *const AvDecomposition) -> f64 {
    d.as_ref().map_or(f64::NAN, |d| d.result.reconstruction_residual)
}

/// Amplitude of leaf `index` (leaves are ordered by path).
///
/// # Safety
/// `d` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_leaf_amplitude(
    d: *const AvDecomposition,
    index: usize,
    out: *mut AvComplex,
) -> AvStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(AvStatus::NullPointer, "null argument");
        };
        match d.result.leaves.get(index) {
            Some(l) => {
                *out = l.amplitude.into();
                AvStatus::Ok
            }
            None => fail(AvStatus::OutOfRange, format!("leaf {index} of {}", d.result.leaves.len())),
        }
    })
}

/// Copies the path of leaf `index` (letters E/O/K/P) as a NUL-terminated
/// string into `buf`. Needs `path length + 1` bytes.
///
/// # Safety
/// `d` must be live and `buf` writable for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_leaf_path(
    d: *const AvDecomposition,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> AvStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), buf.is_null()) else {
            return fail(AvStatus::NullPointer, "null argument");
        };
        let Some(leaf) = d.result.leaves.get(index) else {
            return fail(AvStatus::OutOfRange, format!("leaf {index} of {}", d.result.leaves.len()));
        };
        let bytes = leaf.path.as_bytes();
        if bytes.len() + 1 > buf_len {
            return fail(AvStatus::BufferTooSmall, format!("need {} bytes", bytes.len() + 1));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
        *buf.add(bytes.len()) = 0;
        AvStatus::Ok
    })
}

/// Writes the reconstructed final state (`2^n` amplitudes) into `out`.
///
/// # Safety
/// `d` must be live and `out` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_state(
    d: *const AvDecomposition,
    out: *mut AvComplex,
    len: usize,
) -> AvStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(AvStatus::NullPointer, "null argument");
        };
        let state = d.result.reconstruct();
        if len < state.len() {
            return fail(AvStatus::BufferTooSmall, format!("need {} amplitudes", state.len()));
        }
        for (i, z) in state.into_iter().enumerate() {
            *out.add(i) = z.into();
        }
        AvStatus::Ok
    })
}

/// The JSON report as a newly allocated string; release with
/// [`av_string_free`].
///
/// # Safety
/// `d` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn av_decomposition_report_json(
    d: *const AvDecomposition,
    out: *mut *mut c_char,
) -> AvStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(AvStatus::NullPointer, "null argument");
        };
        let mut report = TreeReport::new(d.name.clone(), &d.result);
        if let Some((terms, cascade)) = &d.rebase {
            report = report.with_rebase(terms, cascade);
        }
        match CString::new(report.to_json()) {
            Ok(s) => {
                *out = s.into_raw();
                AvStatus::Ok
            }
            Err(_) => fail(AvStatus::Numerical, "report contains NUL"),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn av_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_state(p: *const AvComplex, dim: usize, what: &str) -> Result<StateVector, AvStatus> {
    if p.is_null() {
        return Err(fail(AvStatus::NullPointer, format!("{what} is null")));
    }
    let v: Vec<Complex64> = std::slice::from_raw_parts(p, dim).iter().map(|&z| z.into()).collect();
    StateVector::new(v).map_err(from_error)
}

unsafe fn read_operator(p: *const AvComplex, dim: usize) -> Result<GateMatrix, AvStatus> {
    if p.is_null() {
        return Err(fail(AvStatus::NullPointer, "operator is null"));
    }
    if dim < 2 || !dim.is_power_of_two() {
        return Err(fail(AvStatus::InvalidArgument, format!("dimension {dim} is not a power of two >= 2")));
    }
    let flat = std::slice::from_raw_parts(p, dim * dim);
    let rows: Vec<Vec<Complex64>> = flat.chunks(dim).map(|r| r.iter().map(|&z| z.into()).collect()).collect();
    GateMatrix::from_rows(&rows, false).map_err(from_error)
}

/// `<psi|A|psi>` for a row-major `dim x dim` operator and a normalized state.
///
/// # Safety
/// `op` must hold `dim * dim` and `psi` `dim` elements; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn av_expectation(
    op: *const AvComplex,
    psi: *const AvComplex,
    dim: usize,
    out: *mut AvComplex,
) -> AvStatus {
    guard(|| {
        if out.is_null() {
            return fail(AvStatus::NullPointer, "out is null");
        }
        let r = read_operator(op, dim)
            .and_then(|a| Ok((a, read_state(psi, dim, "psi")?)))
            .and_then(|(a, s)| expectation(&a, &s).map_err(from_error));
        match r {
            Ok(z) => {
                *out = z.into();
                AvStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// `|| (A - <A>) psi ||`.
///
/// # Safety
/// As for [`av_expectation`].
#[no_mangle]
pub unsafe extern "C" fn av_uncertainty(
    op: *const AvComplex,
    psi: *const AvComplex,
    dim: usize,
    out: *mut f64,
) -> AvStatus {
    guard(|| {
        if out.is_null() {
            return fail(AvStatus::NullPointer, "out is null");
        }
        let r = read_operator(op, dim)
            .and_then(|a| Ok((a, read_state(psi, dim, "psi")?)))
            .and_then(|(a, s)| uncertainty(&a, &s).map_err(from_error));
        match r {
            Ok(x) => {
                *out = x;
                AvStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// `<phi|A|psi> / <phi|psi>`.
///
/// # Safety
/// As for [`av_expectation`], with `phi` holding `dim` elements.
#[no_mangle]
pub unsafe extern "C" fn av_weak_value(
    op: *const AvComplex,
    psi: *const AvComplex,
    phi: *const AvComplex,
    dim: usize,
    out: *mut AvComplex,
) -> AvStatus {
    guard(|| {
        if out.is_null() {
            return fail(AvStatus::NullPointer, "out is null");
        }
        let r = read_operator(op, dim)
            .and_then(|a| Ok((a, read_state(psi, dim, "psi")?, read_state(phi, dim, "phi")?)))
            .and_then(|(a, s, f)| weak_value(&a, &s, &f).map_err(from_error));
        match r {
            Ok(z) => {
                *out = z.into();
                AvStatus::Ok
            }
            Err(s) => s,
        }
    })
}
