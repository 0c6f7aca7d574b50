use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use avdecomp_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn c(re: f64, im: f64) -> AvComplex {
    AvComplex { re, im }
}

fn last_error() -> String {
    let p = av_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn parse(src: &str, base: Option<&Path>) -> Result<*mut AvCircuit, AvStatus> {
    let src = cstr(src);
    let base = base.map(|b| cstr(b.to_str().unwrap()));
    let mut out = ptr::null_mut();
    let s = unsafe {
        av_circuit_parse(src.as_ptr(), base.as_ref().map_or(ptr::null(), |b| b.as_ptr()), &mut out)
    };
    if s == AvStatus::Ok {
        Ok(out)
    } else {
        assert!(out.is_null());
        Err(s)
    }
}

fn decompose(circ: *const AvCircuit, partition: Option<&str>) -> Result<*mut AvDecomposition, AvStatus> {
    let p = partition.map(cstr);
    let mut out = ptr::null_mut();
    let s = unsafe { av_decompose(circ, p.as_ref().map_or(ptr::null(), |p| p.as_ptr()), -1.0, &mut out) };
    if s == AvStatus::Ok {
        Ok(out)
    } else {
        Err(s)
    }
}

fn state(d: *const AvDecomposition, dim: usize) -> Vec<AvComplex> {
    let mut v = vec![c(0.0, 0.0); dim];
    assert_eq!(unsafe { av_decomposition_state(d, v.as_mut_ptr(), dim) }, AvStatus::Ok);
    v
}

#[test]
fn bell_state_through_handles() {
    let circ = parse("qubits 2\ngate h 0\ngate cx 0 1\n", None).unwrap();
    unsafe {
        assert_eq!(av_circuit_n_qubits(circ), 2);
        assert_eq!(av_circuit_gate_count(circ), 2);
    }
    for part in [None, Some("whole"), Some("singles"), Some("(0:1)"), Some("(0:0)(1:0)")] {
        let d = decompose(circ, part).unwrap();
        let v = state(d, 4);
        let r = 0.5f64.sqrt();
        let want = [c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)];
        for (a, b) in v.iter().zip(&want) {
            assert!((a.re - b.re).abs() < 1e-12 && (a.im - b.im).abs() < 1e-12, "{part:?}");
        }
        unsafe {
            assert!(av_decomposition_residual(d) <= 1e-10);
            av_decomposition_free(d);
        }
    }
    unsafe { av_circuit_free(circ) };
}

#[test]
fn leaves_sum_to_state() {
    let src = std::fs::read_to_string(corpus().join("grover_n3_m5.qc")).unwrap();
    let circ = parse(&src, Some(&corpus())).unwrap();
    let d = decompose(circ, None).unwrap();
    let n = unsafe { av_decomposition_leaf_count(d) };
    assert!((1..=16).contains(&n));
    let mut paths = Vec::new();
    for i in 0..n {
        let mut z = c(0.0, 0.0);
        let mut buf = [0 as c_char; 16];
        unsafe {
            assert_eq!(av_decomposition_leaf_amplitude(d, i, &mut z), AvStatus::Ok);
            assert_eq!(av_decomposition_leaf_path(d, i, buf.as_mut_ptr(), buf.len()), AvStatus::Ok);
            paths.push(CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_owned());
        }
        assert!(z.re.is_finite() && z.im.is_finite());
    }
    assert!(paths.windows(2).all(|w| w[0] < w[1]));
    assert!(paths.iter().all(|p| p.len() == 4 && p.chars().all(|ch| ch == 'E' || ch == 'O')));
    let v = state(d, 8);
    let p101 = v[5].re * v[5].re + v[5].im * v[5].im;
    assert!((p101 - 121.0 / 128.0).abs() < 1e-12, "{p101}");
    unsafe {
        av_decomposition_free(d);
        av_circuit_free(circ);
    }
}

#[test]
fn umat_paths_resolve_against_base_dir() {
    let src = std::fs::read_to_string(corpus().join("umat_sqrt_x.qc")).unwrap();
    assert_eq!(parse(&src, Some(Path::new("/nonexistent"))).unwrap_err(), AvStatus::Build);
    let circ = parse(&src, Some(&corpus())).unwrap();
    unsafe { av_circuit_free(circ) };
}

#[test]
fn report_json_includes_rebase() {
    let src = std::fs::read_to_string(corpus().join("rebase_plus_kx.qc")).unwrap();
    let circ = parse(&src, None).unwrap();
    let d = decompose(circ, None).unwrap();
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(av_decomposition_report_json(d, &mut json), AvStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        av_string_free(json);
        av_decomposition_free(d);
        av_circuit_free(circ);
        assert!(text.contains("\"schema_version\": 1"));
        assert!(text.contains("\"rebase\""));
        assert!(text.contains("\"circuit\": \"rebase_plus_x\""));
    }
}

#[test]
fn errors_map_to_status_codes() {
    assert_eq!(parse("qubits 2\ngate frob 0\n", None).unwrap_err(), AvStatus::Parse);
    assert!(last_error().contains("line 2, column 6"), "{}", last_error());

    let circ = parse("qubits 1\ngate h 0\n", None).unwrap();
    assert_eq!(decompose(circ, Some("(0:0)(1:1)")).unwrap_err(), AvStatus::InvalidPartition);
    assert_eq!(decompose(circ, Some("bogus(")).unwrap_err(), AvStatus::InvalidPartition);
    let d = decompose(circ, None).unwrap();
    let mut z = c(0.0, 0.0);
    let mut small = [0 as c_char; 1];
    unsafe {
        assert_eq!(av_decomposition_leaf_amplitude(d, 7, &mut z), AvStatus::OutOfRange);
        assert_eq!(av_decomposition_leaf_path(d, 0, small.as_mut_ptr(), 1), AvStatus::BufferTooSmall);
        assert_eq!(av_decomposition_state(d, [c(0.0, 0.0)].as_mut_ptr(), 1), AvStatus::BufferTooSmall);
        av_decomposition_free(d);
        av_circuit_free(circ);
    }

    let orth = "qubits 1\ninit zero\ngate x 0\nrebase [0,0 1,0]\n";
    let circ = parse(orth, None).unwrap();
    assert_eq!(decompose(circ, None).unwrap_err(), AvStatus::OrthogonalPostSelection);
    unsafe { av_circuit_free(circ) };
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(av_circuit_parse(ptr::null(), ptr::null(), &mut out), AvStatus::NullPointer);
        assert_eq!(av_decompose(ptr::null(), ptr::null(), -1.0, &mut ptr::null_mut()), AvStatus::NullPointer);
        assert_eq!(av_circuit_n_qubits(ptr::null()), 0);
        assert_eq!(av_decomposition_leaf_count(ptr::null()), 0);
        assert!(av_decomposition_residual(ptr::null()).is_nan());
        av_circuit_free(ptr::null_mut());
        av_decomposition_free(ptr::null_mut());
        av_string_free(ptr::null_mut());
    }
    let bad = [0xffu8, 0];
    unsafe {
        assert_eq!(av_circuit_parse(bad.as_ptr().cast(), ptr::null(), &mut out), AvStatus::InvalidUtf8);
    }
}

#[test]
fn scalar_functions_match_closed_forms() {
    let r = 0.5f64.sqrt();
    let plus = [c(r, 0.0), c(r, 0.0)];
    let zero = [c(1.0, 0.0), c(0.0, 0.0)];
    let x = [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
    let z = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
    let mut e = c(0.0, 0.0);
    let mut d = 0.0;
    unsafe {
        assert_eq!(av_expectation(x.as_ptr(), plus.as_ptr(), 2, &mut e), AvStatus::Ok);
        assert!((e.re - 1.0).abs() < 1e-12 && e.im.abs() < 1e-12);
        assert_eq!(av_uncertainty(z.as_ptr(), plus.as_ptr(), 2, &mut d), AvStatus::Ok);
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(av_uncertainty(z.as_ptr(), zero.as_ptr(), 2, &mut d), AvStatus::Ok);
        assert!(d.abs() < 1e-12);
        // <0|X|+> / <0|+> = 1
        assert_eq!(av_weak_value(x.as_ptr(), plus.as_ptr(), zero.as_ptr(), 2, &mut e), AvStatus::Ok);
        assert!((e.re - 1.0).abs() < 1e-12 && e.im.abs() < 1e-12);
        let one = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(
            av_weak_value(x.as_ptr(), zero.as_ptr(), one.as_ptr(), 2, &mut e),
            AvStatus::OrthogonalPostSelection
        );
        assert_eq!(av_expectation(x.as_ptr(), plus.as_ptr(), 3, &mut e), AvStatus::InvalidArgument);
        let unnormalized = [c(1.0, 0.0), c(1.0, 0.0)];
        assert_ne!(av_expectation(x.as_ptr(), unnormalized.as_ptr(), 2, &mut e), AvStatus::Ok);
    }
}

#[test]
fn version_matches_core() {
    let v = unsafe { CStr::from_ptr(av_version()) }.to_str().unwrap();
    assert_eq!(v, avdecomp::VERSION);
}

fn exported_functions() -> Vec<String> {
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    src.lines()
        .filter_map(|l| l.split_once("extern \"C\" fn ").map(|(_, rest)| rest))
        .map(|rest| rest.split('(').next().unwrap().to_owned())
        .collect()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/avdecomp.h")).unwrap();
    let fns = exported_functions();
    assert!(fns.len() >= 18, "{fns:?}");
    for f in &fns {
        assert!(header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}(")), "{f} missing from header");
    }
    for item in ["typedef struct AvCircuit AvCircuit", "typedef struct AvDecomposition AvDecomposition", "AV_STATUS_OK = 0"] {
        assert!(header.contains(item), "{item}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libavdecomp_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("avdecomp_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-o")
        .arg(&exe)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .unwrap_or_else(|e| panic!("running {cc}: {e}"));
    assert!(status.success(), "compiling the C smoke test failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
