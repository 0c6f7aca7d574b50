//! Command-line front end. [`run`] returns the process exit code:
//! 0 on success, 2 for usage, parse, I/O and parameter errors, 3 when a
//! numerical check fails.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuits::{DeutschOracle, StdGate};
use crate::decomposer::{
    decompose, decompose_rebased, make_partition, rebase_with, DecomposeOptions,
    DecompositionResult, Group, PartitionMode, RebaseTarget, SubSequencePartition,
};
use crate::dsl::{
    self, BuiltCircuit, CircuitDescription, GateSpec, OracleGate, RebaseDirective, StateSpec,
};
use crate::error::Error;
use crate::random::{random_circuit, random_state, random_tiling};
use crate::report::{StateJson, TreeReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "avdecomp", version, about = "Statistical decomposition of quantum circuits")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Largest accepted reconstruction residual.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Children with |amplitude| or uncertainty at or below this are dropped.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub prune_tol: f64,
    /// Override the partition: whole, singles or (j:p)(j:p)...
    #[arg(long, global = true)]
    pub partition: Option<String>,
    /// Write the JSON report to this path (`-` for standard output).
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Worker threads for tree expansion (1 = serial, 0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Seed for `selftest`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a .qc circuit file.
    Decompose { file: PathBuf },
    /// Decompose a .qc file and report only whether the checks pass.
    Verify { file: PathBuf },
    /// Run a built-in circuit.
    Builtin {
        #[command(subcommand)]
        which: Builtin,
        /// Print the circuit as .qc text instead of decomposing it.
        #[arg(long)]
        emit: bool,
        /// Also rebase onto this state (zero or plus) with K = I, q = 1.
        #[arg(long)]
        rebase: Option<String>,
    },
    /// Decompose random circuits and check every reconstruction.
    Selftest {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 4)]
        max_qubits: usize,
        #[arg(long, default_value_t = 6)]
        max_gates: usize,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum Builtin {
    /// Deutsch's algorithm on two qubits.
    Deutsch {
        #[arg(long, default_value = "identity_balanced")]
        oracle: String,
    },
    /// Grover search from the uniform state, grouped as (A^dag S_f)(A S_0).
    Grover {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, num_args = 1.., default_values_t = [5usize])]
        marked: Vec<usize>,
        /// Defaults to round(pi/4 sqrt(N/M) - 1/2).
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Phase estimation of U = diag(1, e^{2 pi i k / 2^N}) on |1>.
    Qpe {
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        phase_k: usize,
        #[arg(long, value_enum, default_value_t = QpeEigenstate::One)]
        eigenstate: QpeEigenstate,
    },
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

fn all_qubits(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn deutsch_description(oracle: DeutschOracle) -> CircuitDescription {
    let mut d = CircuitDescription::new(2);
    d.name = Some(format!("deutsch_{}", oracle.name()));
    d.gates = vec![
        GateSpec::Std { gate: StdGate::X, targets: vec![1] },
        GateSpec::Std { gate: StdGate::H, targets: vec![0, 1] },
        GateSpec::Oracle(OracleGate::Deutsch { kind: oracle, input: 0, output: 1 }),
        GateSpec::Std { gate: StdGate::H, targets: vec![0] },
    ];
    d.partition = Some(PartitionMode::Singles);
    d
}

pub fn default_grover_iterations(n: usize, marked: usize) -> usize {
    let ratio = (1usize << n) as f64 / marked.max(1) as f64;
    (PI / 4.0 * ratio.sqrt() - 0.5).round().max(1.0) as usize
}

/// Grover iterations as `S_f, H^n, S_0, H^n` with groups `(A^dag S_f)(A S_0)`.
pub fn grover_description(n: usize, marked: &[usize], iterations: usize) -> CircuitDescription {
    let mut d = CircuitDescription::new(n);
    d.name = Some(format!("grover_n{n}"));
    d.initial = StateSpec::Plus;
    for _ in 0..iterations {
        d.gates.push(GateSpec::Oracle(OracleGate::Marked(marked.to_vec())));
        d.gates.push(GateSpec::Std { gate: StdGate::H, targets: all_qubits(n) });
        d.gates.push(GateSpec::Oracle(OracleGate::Marked(vec![0])));
        d.gates.push(GateSpec::Std { gate: StdGate::H, targets: all_qubits(n) });
    }
    d.partition = Some(PartitionMode::Explicit(
        (0..2 * iterations).map(|i| Group::new(2 * i, 1)).collect(),
    ));
    d
}

/// Which eigenstate of the phase-estimation unitary sits on the target qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum QpeEigenstate {
    /// `U = diag(1, e^{i phi})` on `|1>`.
    One,
    /// `U = H diag(e^{i phi}, 1) H` on `|+>`.
    Plus,
}

/// Phase estimation with `N` counting qubits and the target as the last qubit.
pub fn qpe_description(count: usize, phase_k: usize, eigenstate: QpeEigenstate) -> CircuitDescription {
    let n = count + 1;
    let phi = 2.0 * PI * phase_k as f64 / (1u64 << count) as f64;
    let mut d = CircuitDescription::new(n);
    d.name = Some(format!("qpe_n{count}_k{phase_k}"));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut init = vec![Complex64::new(0.0, 0.0); 1 << n];
    match eigenstate {
        QpeEigenstate::One => init[1] = Complex64::new(1.0, 0.0),
        QpeEigenstate::Plus => {
            init[0] = Complex64::new(h, 0.0);
            init[1] = Complex64::new(h, 0.0);
        }
    }
    d.initial = StateSpec::Explicit(init);
    d.gates.push(GateSpec::Std { gate: StdGate::H, targets: all_qubits(count) });
    for k in 1..=count {
        let cphase = GateSpec::CPhase {
            theta: phi * (1u64 << (k - 1)) as f64,
            control: count - k,
            target: count,
        };
        match eigenstate {
            QpeEigenstate::One => d.gates.push(cphase),
            QpeEigenstate::Plus => {
                let h_t = GateSpec::Std { gate: StdGate::H, targets: vec![count] };
                let x_t = GateSpec::Std { gate: StdGate::X, targets: vec![count] };
                d.gates.extend([h_t.clone(), x_t.clone(), cphase, x_t, h_t]);
            }
        }
    }
    d.gates.push(GateSpec::Iqft { first: 0, last: count - 1 });
    let middle = d.gates.len() - 2;
    d.partition = Some(PartitionMode::Explicit(vec![
        Group::new(0, 0),
        Group::new(1, middle - 1),
        Group::new(middle + 1, 0),
    ]));
    d
}

fn builtin_description(which: &Builtin) -> Result<CircuitDescription, CliError> {
    match which {
        Builtin::Deutsch { oracle } => oracle
            .parse::<DeutschOracle>()
            .map(deutsch_description)
            .map_err(|_| CliError::usage(format!("unknown Deutsch oracle {oracle:?}"))),
        Builtin::Grover { n, marked, iters } => {
            if *n == 0 || *n > crate::config::DEFAULT_MAX_QUBITS {
                return Err(CliError::usage(format!("--n must be in 1..={}", crate::config::DEFAULT_MAX_QUBITS)));
            }
            let mut m = marked.clone();
            m.sort_unstable();
            m.dedup();
            if m.is_empty() || m.iter().any(|&x| x >= 1 << n) {
                return Err(CliError::usage("marked indices must be in 0..2^n"));
            }
            let iters = iters.unwrap_or_else(|| default_grover_iterations(*n, m.len()));
            Ok(grover_description(*n, &m, iters))
        }
        Builtin::Qpe { count, phase_k, eigenstate } => {
            if *count == 0 || *count >= crate::config::DEFAULT_MAX_QUBITS {
                return Err(CliError::usage(format!(
                    "--count must be in 1..{}",
                    crate::config::DEFAULT_MAX_QUBITS
                )));
            }
            if *phase_k >= 1 << count {
                return Err(CliError::usage("--phase-k must be below 2^count"));
            }
            Ok(qpe_description(*count, *phase_k, *eigenstate))
        }
    }
}

fn load(file: &Path) -> Result<(CircuitDescription, PathBuf), CliError> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", file.display())))?;
    let desc = dsl::parse(&text)
        .map_err(|e| CliError::usage(format!("{}:{}:{}: {}", file.display(), e.line, e.column, e.message)))?;
    let base = file.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((desc, base))
}

struct Outcome {
    report: TreeReport,
    result: DecompositionResult,
    rebased: Option<DecompositionResult>,
}

fn override_mode(g: &GlobalOpts) -> Result<Option<PartitionMode>, CliError> {
    g.partition
        .as_deref()
        .map(|text| {
            dsl::parse_partition(text)
                .map_err(|e| CliError::usage(format!("--partition: {}", e.message)))
        })
        .transpose()
}

fn run_decomposition(
    built: &BuiltCircuit,
    mode: &PartitionMode,
    g: &GlobalOpts,
) -> Result<Outcome, CliError> {
    let partition: SubSequencePartition = make_partition(&built.sequence, mode)?;
    let opts = DecomposeOptions {
        prune_tol: g.prune_tol,
        parallel: g.threads != 1,
        ..DecomposeOptions::default()
    };
    let result = decompose(&built.sequence, &partition, &built.initial, &opts)?;
    let mut report = TreeReport::new(built.name.clone(), &result);
    let mut rebased = None;
    if let Some(target) = &built.rebase {
        let terms = rebase_with(&built.sequence, &built.initial, target, &opts.tolerances)?;
        let cascade = decompose_rebased(&built.sequence, &partition, &built.initial, target, &opts)?;
        report = report.with_rebase(&terms, &cascade);
        rebased = Some(cascade);
    }
    Ok(Outcome { report, result, rebased })
}

fn fmt_c(z: Complex64) -> String {
    format!("{:+.6}{:+.6}i", z.re, z.im)
}

fn fmt_state(s: &StateJson) -> String {
    match s {
        StateJson::Basis(label) => label.clone(),
        StateJson::Amplitudes(a) => {
            let parts: Vec<String> = a.iter().map(|z| fmt_c(Complex64::new(z.re, z.im))).collect();
            format!("[{}]", parts.join(" "))
        }
    }
}

fn write_text(out: &mut dyn Write, r: &TreeReport) -> std::io::Result<()> {
    let name = if r.circuit.is_empty() { "(unnamed)" } else { &r.circuit };
    writeln!(out, "circuit: {name} ({} qubits)", r.n_qubits)?;
    writeln!(out, "groups:")?;
    for (j, g) in r.tree.partition.iter().enumerate() {
        writeln!(out, "  {j}: ({}:{}) {}", g.start, g.span, g.label)?;
    }
    writeln!(out, "leaves: {} (pruned {})", r.tree.leaves.len(), r.tree.pruned_count)?;
    for l in &r.tree.leaves {
        let path = if l.path.is_empty() { "-" } else { &l.path };
        writeln!(out, "  {path:<12} {}  {}", fmt_c(Complex64::new(l.amplitude.re, l.amplitude.im)), fmt_state(&l.state))?;
    }
    writeln!(out, "basis amplitudes:")?;
    for (label, z) in &r.tree.basis_amplitudes {
        writeln!(out, "  |{label}>  {}", fmt_c(Complex64::new(z.re, z.im)))?;
    }
    writeln!(out, "reconstruction residual: {:e}", r.tree.reconstruction_residual)?;
    if let Some(rb) = &r.rebase {
        writeln!(out, "rebase onto {} (q = {}):", fmt_state(&rb.phi), rb.q)?;
        writeln!(out, "  weak value term: {}", fmt_c(Complex64::new(rb.weak_value_scaled.re, rb.weak_value_scaled.im)))?;
        writeln!(out, "  orthogonal coefficient C/q: {:.6}", rb.orthogonal_coefficient)?;
        match rb.mu {
            Some(mu) => writeln!(out, "  mu: {mu:.6}  delta: {:.6}", rb.delta)?,
            None => writeln!(out, "  mu: undefined  delta: {:.6}", rb.delta)?,
        }
        writeln!(out, "  cascade leaves: {}", rb.cascade.leaves.len())?;
        for l in &rb.cascade.leaves {
            writeln!(out, "    {:<12} {}  {}", l.path, fmt_c(Complex64::new(l.amplitude.re, l.amplitude.im)), fmt_state(&l.state))?;
        }
        writeln!(out, "  cascade residual: {:e}", rb.cascade.reconstruction_residual)?;
    }
    Ok(())
}

fn residual_check(o: &Outcome, tol: f64) -> Result<(), CliError> {
    let worst = o
        .rebased
        .iter()
        .map(|r| r.reconstruction_residual)
        .fold(o.result.reconstruction_residual, f64::max);
    if worst.is_finite() && worst <= tol {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_NUMERICAL,
            message: format!("reconstruction residual {worst:e} exceeds {tol:e}"),
        })
    }
}

fn decompose_and_print(
    built: &BuiltCircuit,
    g: &GlobalOpts,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mode = match override_mode(g)? {
        Some(m) => m,
        None => built.partition.clone().unwrap_or(PartitionMode::Singles),
    };
    let o = run_decomposition(built, &mode, g)?;
    let io = |e: std::io::Error| CliError::usage(e.to_string());
    match &g.json {
        Some(path) if path.as_os_str() == "-" => {
            writeln!(out, "{}", o.report.to_json()).map_err(io)?;
        }
        Some(path) => {
            let mut text = o.report.to_json();
            text.push('\n');
            std::fs::write(path, text)
                .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
            write_text(out, &o.report).map_err(io)?;
        }
        None => write_text(out, &o.report).map_err(io)?,
    }
    residual_check(&o, g.tol)
}

fn verify(
    file: &Path,
    built: &BuiltCircuit,
    modes: &[PartitionMode],
    g: &GlobalOpts,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::usage(e.to_string());
    writeln!(out, "{}", file.display()).map_err(io)?;
    writeln!(out, "  {:<24} {:>7} {:>12} {:>12}  status", "partition", "leaves", "residual", "rebased").map_err(io)?;
    let mut failed = 0;
    for mode in modes {
        let o = run_decomposition(built, mode, g)?;
        let ok = residual_check(&o, g.tol).is_ok();
        failed += usize::from(!ok);
        let rebased = o
            .rebased
            .as_ref()
            .map(|r| format!("{:e}", r.reconstruction_residual))
            .unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "  {:<24} {:>7} {:>12} {:>12}  {}",
            mode.to_string(),
            o.result.leaves.len(),
            format!("{:e}", o.result.reconstruction_residual),
            rebased,
            if ok { "ok" } else { "FAIL" }
        )
        .map_err(io)?;
    }
    if failed > 0 {
        return Err(CliError {
            code: EXIT_NUMERICAL,
            message: format!("{failed} partition mode(s) exceed --tol {:e}", g.tol),
        });
    }
    Ok(())
}

fn build(desc: &CircuitDescription, base: &Path) -> Result<BuiltCircuit, CliError> {
    desc.build(base).map_err(|e| CliError::usage(e.to_string()))
}

fn selftest(
    g: &GlobalOpts,
    cases: usize,
    max_qubits: usize,
    max_gates: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if max_qubits == 0 || max_qubits > crate::config::DEFAULT_MAX_QUBITS {
        return Err(CliError::usage("--max-qubits out of range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let opts = DecomposeOptions {
        prune_tol: g.prune_tol,
        parallel: g.threads != 1,
        ..DecomposeOptions::default()
    };
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=max_qubits);
        let m = rng.random_range(0..=max_gates);
        let seq = random_circuit(&mut rng, n, m);
        let partition = SubSequencePartition::new(random_tiling(&mut rng, m), m)?;
        let psi = random_state(&mut rng, n);
        let r = decompose(&seq, &partition, &psi, &opts)?;
        let target = RebaseTarget {
            phi: random_state(&mut rng, n),
            k: crate::qcore::GateMatrix::identity(n),
            q: 1.0,
        };
        let rb = decompose_rebased(&seq, &partition, &psi, &target, &opts)?;
        for res in [r.reconstruction_residual, rb.reconstruction_residual] {
            worst = worst.max(res);
            if res.is_nan() || res > g.tol {
                failures += 1;
            }
        }
    }
    writeln!(out, "selftest: {cases} circuits, seed {}, max residual {worst:e}, failures {failures}", g.seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    if failures > 0 {
        return Err(CliError { code: EXIT_NUMERICAL, message: format!("{failures} reconstruction(s) above {:e}", g.tol) });
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let g = cli.global;
    if g.tol.is_nan() || g.tol <= 0.0 || g.prune_tol.is_nan() || g.prune_tol < 0.0 {
        return Err(CliError::usage("--tol must be positive and --prune-tol non-negative"));
    }
    match cli.command {
        Command::Decompose { file } => {
            let (desc, base) = load(&file)?;
            decompose_and_print(&build(&desc, &base)?, &g, out)
        }
        Command::Verify { file } => {
            let (desc, base) = load(&file)?;
            let built = build(&desc, &base)?;
            let modes = match override_mode(&g)? {
                Some(m) => vec![m],
                None => {
                    let mut m = vec![PartitionMode::Whole, PartitionMode::Singles];
                    if let Some(p @ PartitionMode::Explicit(_)) = &built.partition {
                        m.push(p.clone());
                    }
                    m
                }
            };
            verify(&file, &built, &modes, &g, out)
        }
        Command::Builtin { which, emit, rebase } => {
            let mut desc = builtin_description(&which)?;
            if let Some(basis) = rebase {
                let basis = match basis.to_ascii_lowercase().as_str() {
                    "zero" => StateSpec::Zero,
                    "plus" => StateSpec::Plus,
                    _ => return Err(CliError::usage("--rebase must be zero or plus")),
                };
                desc.rebase = Some(RebaseDirective { basis, k: StdGate::I, q: 1.0 });
            }
            if emit {
                write!(out, "{}", dsl::serialize(&desc)).map_err(|e| CliError::usage(e.to_string()))?;
                return Ok(());
            }
            decompose_and_print(&build(&desc, Path::new("."))?, &g, out)
        }
        Command::Selftest { cases, max_qubits, max_gates } => selftest(&g, cases, max_qubits, max_gates, out),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let threads = cli.global.threads;
    let result = if threads == 1 {
        dispatch(cli, out)
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => {
                let mut buf = Vec::new();
                let r = pool.install(|| dispatch(cli, &mut buf));
                let _ = out.write_all(&buf);
                r
            }
            Err(e) => Err(CliError::usage(format!("cannot start thread pool: {e}"))),
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
