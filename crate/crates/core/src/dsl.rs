//! Line-oriented circuit description format (`.qc`) and matrix files (UMAT).
//!
//! ```text
//! circuit deutsch            # optional header
//! qubits 2                   # required before gates
//! init zero                  # zero | plus | [re,im re,im ...]
//! gate x 1
//! gate h 0 1                 # one gate acting on both qubits
//! gate cx 0 1
//! gate phase(0.785) 0
//! gate cphase(1.57) 0 1
//! gate iqft 0..1
//! gate oracle const1 0 1     # const0 | const1 | identity_balanced | not_balanced
//! gate oracle marked 3       # phase oracle on the whole register
//! gate umat u.txt 0 1        # matrix file, optional targets
//! partition singles          # whole | singles | (j:p)(j:p)... | () for no gates
//! rebase zero k=i q=1        # zero | plus | [..], optional K gate and q
//! ```
//!
//! Keywords and gate names are case-insensitive; `#` starts a comment.

use std::fmt;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::circuits::{
    controlled, cx, embed, gate_on_each, iqft, phase_gate, phase_oracle, tensor_power,
    DeutschOracle, StdGate,
};
use crate::config::DEFAULT_MAX_QUBITS;
use crate::decomposer::{validate_tiling, GateSequence, Group, PartitionMode, RebaseTarget};
use crate::qcore::{GateMatrix, StateVector};

/// A parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub offending_token: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)?;
        if !self.offending_token.is_empty() {
            write!(f, " (at {:?})", self.offending_token)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// A state given by name or by explicit amplitudes (normalized on build).
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Zero,
    Plus,
    Explicit(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleGate {
    Deutsch {
        kind: DeutschOracle,
        input: usize,
        output: usize,
    },
    Marked(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateSpec {
    /// The same single-qubit gate on each listed target, as one step.
    Std { gate: StdGate, targets: Vec<usize> },
    Cx { control: usize, target: usize },
    Phase { theta: f64, target: usize },
    CPhase { theta: f64, control: usize, target: usize },
    /// Inverse QFT on the contiguous range `first..=last`.
    Iqft { first: usize, last: usize },
    Oracle(OracleGate),
    /// Matrix file; empty targets means the whole register.
    Umat { path: String, targets: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RebaseDirective {
    pub basis: StateSpec,
    pub k: StdGate,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDescription {
    pub name: Option<String>,
    pub n_qubits: usize,
    pub initial: StateSpec,
    pub gates: Vec<GateSpec>,
    pub partition: Option<PartitionMode>,
    pub rebase: Option<RebaseDirective>,
}

impl CircuitDescription {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            name: None,
            n_qubits,
            initial: StateSpec::Zero,
            gates: Vec::new(),
            partition: None,
            rebase: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

/// Splits on whitespace, keeping `(...)` and `[...]` groups in one token.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut depth = 0i32;
    let mut start: Option<(usize, usize)> = None;
    for (col0, (byte, ch)) in line.char_indices().enumerate() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if ch.is_whitespace() && depth <= 0 {
            if let Some((b, c)) = start.take() {
                tokens.push(Token {
                    text: &line[b..byte],
                    column: c,
                });
            }
        } else if start.is_none() {
            start = Some((byte, col0 + 1));
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token {
            text: &line[b..],
            column: c,
        });
    }
    tokens
}

struct Parser<'a> {
    line_no: usize,
    line_len: usize,
    tokens: Vec<Token<'a>>,
    max_qubits: usize,
}

impl<'a> Parser<'a> {
    fn err_at(&self, tok: Token<'_>, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line_no,
            column: tok.column,
            message: message.into(),
            offending_token: tok.text.to_string(),
        }
    }

    /// Error positioned just past the last token (missing argument).
    fn err_end(&self, message: impl Into<String>) -> ParseError {
        let column = self
            .tokens
            .last()
            .map(|t| t.column + t.text.chars().count() - 1)
            .unwrap_or(1)
            .min(self.line_len.max(1));
        ParseError {
            line: self.line_no,
            column,
            message: message.into(),
            offending_token: String::new(),
        }
    }

    fn arity(&self, expected: &str, min: usize, max: usize) -> Result<(), ParseError> {
        let args = self.tokens.len() - 1;
        if args < min {
            return Err(self.err_end(format!("expected {expected}")));
        }
        if args > max {
            return Err(self.err_at(self.tokens[max + 1], format!("unexpected argument; expected {expected}")));
        }
        Ok(())
    }

    fn usize_at(&self, tok: Token<'_>) -> Result<usize, ParseError> {
        tok.text
            .parse::<usize>()
            .map_err(|_| self.err_at(tok, "malformed integer"))
    }

    fn qubit_at(&self, tok: Token<'_>, n: usize) -> Result<usize, ParseError> {
        let q = self.usize_at(tok)?;
        if q >= n {
            return Err(self.err_at(tok, format!("target {q} out of range for {n} qubit(s)")));
        }
        Ok(q)
    }

    fn real(&self, tok: Token<'_>, text: &str) -> Result<f64, ParseError> {
        match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err_at(tok, "malformed number")),
        }
    }

    fn amplitude_list(&self, tok: Token<'_>, n: usize) -> Result<Vec<Complex64>, ParseError> {
        let inner = tok
            .text
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| self.err_at(tok, "expected [re,im re,im ...]"))?;
        let mut out = Vec::new();
        for pair in inner.split_whitespace() {
            let (re, im) = pair
                .split_once(',')
                .ok_or_else(|| self.err_at(tok, format!("amplitude {pair:?} is not re,im")))?;
            out.push(Complex64::new(self.real(tok, re)?, self.real(tok, im)?));
        }
        if out.len() != 1 << n {
            return Err(self.err_at(
                tok,
                format!("expected {} amplitudes for {n} qubit(s), got {}", 1usize << n, out.len()),
            ));
        }
        if out.iter().all(|z| z.norm() == 0.0) {
            return Err(self.err_at(tok, "amplitudes are all zero"));
        }
        Ok(out)
    }

    fn state_spec(&self, tok: Token<'_>, n: usize) -> Result<StateSpec, ParseError> {
        if tok.text.starts_with('[') {
            return Ok(StateSpec::Explicit(self.amplitude_list(tok, n)?));
        }
        match tok.text.to_ascii_lowercase().as_str() {
            "zero" => Ok(StateSpec::Zero),
            "plus" => Ok(StateSpec::Plus),
            _ => Err(self.err_at(tok, "expected zero, plus or [re,im ...]")),
        }
    }

    fn distinct(&self, toks: &[Token<'_>], n: usize) -> Result<Vec<usize>, ParseError> {
        let mut out = Vec::with_capacity(toks.len());
        for &t in toks {
            let q = self.qubit_at(t, n)?;
            if out.contains(&q) {
                return Err(self.err_at(t, format!("qubit {q} listed twice")));
            }
            out.push(q);
        }
        Ok(out)
    }

    /// `NAME(<real>)` → the real.
    fn paren_arg(&self, tok: Token<'_>, name: &str) -> Result<Option<f64>, ParseError> {
        let lower = tok.text.to_ascii_lowercase();
        let Some(rest) = lower.strip_prefix(name) else {
            return Ok(None);
        };
        let Some(arg) = rest.trim_start().strip_prefix('(').and_then(|r| r.strip_suffix(')')) else {
            return Ok(None);
        };
        self.real(tok, arg).map(Some)
    }

    fn gate(&self, n: usize) -> Result<GateSpec, ParseError> {
        if self.tokens.len() < 2 {
            return Err(self.err_end("expected a gate name"));
        }
        let name_tok = self.tokens[1];
        let args = &self.tokens[2..];
        let name = name_tok.text.to_ascii_lowercase();

        if let Some(theta) = self.paren_arg(name_tok, "cphase")? {
            self.arity("cphase(<radians>) <control> <target>", 3, 3)?;
            let q = self.distinct(args, n)?;
            return Ok(GateSpec::CPhase { theta, control: q[0], target: q[1] });
        }
        if let Some(theta) = self.paren_arg(name_tok, "phase")? {
            self.arity("phase(<radians>) <target>", 2, 2)?;
            return Ok(GateSpec::Phase { theta, target: self.qubit_at(args[0], n)? });
        }
        if let Ok(gate) = name.parse::<StdGate>() {
            if args.is_empty() {
                return Err(self.err_end(format!("gate {name} needs at least one target")));
            }
            return Ok(GateSpec::Std { gate, targets: self.distinct(args, n)? });
        }
        match name.as_str() {
            "cx" | "cnot" => {
                self.arity("cx <control> <target>", 3, 3)?;
                let q = self.distinct(args, n)?;
                Ok(GateSpec::Cx { control: q[0], target: q[1] })
            }
            "iqft" => {
                self.arity("iqft <first>..<last>", 2, 2)?;
                let tok = args[0];
                let (a, b) = tok
                    .text
                    .split_once("..")
                    .ok_or_else(|| self.err_at(tok, "expected a range like 0..2"))?;
                if a.is_empty() || b.is_empty() {
                    return Err(self.err_at(tok, "expected a range like 0..2"));
                }
                let first = self.qubit_at(Token { text: a, column: tok.column }, n)?;
                let b_column = tok.column + a.chars().count() + 2;
                let last = self.qubit_at(Token { text: b, column: b_column }, n)?;
                if first > last {
                    return Err(self.err_at(tok, "range is empty"));
                }
                Ok(GateSpec::Iqft { first, last })
            }
            "oracle" => self.oracle(n),
            "umat" => {
                if args.is_empty() {
                    return Err(self.err_end("expected umat <path> [targets...]"));
                }
                Ok(GateSpec::Umat {
                    path: args[0].text.to_string(),
                    targets: self.distinct(&args[1..], n)?,
                })
            }
            _ => Err(self.err_at(name_tok, "unknown gate")),
        }
    }

    fn oracle(&self, n: usize) -> Result<GateSpec, ParseError> {
        if self.tokens.len() < 3 {
            return Err(self.err_end("expected oracle <kind> ..."));
        }
        let kind_tok = self.tokens[2];
        let args = &self.tokens[3..];
        if kind_tok.text.eq_ignore_ascii_case("marked") {
            if args.is_empty() {
                return Err(self.err_end("marked oracle needs at least one basis index"));
            }
            let mut marked = Vec::new();
            for &t in args {
                let m = self.usize_at(t)?;
                if m >= 1 << n {
                    return Err(self.err_at(t, format!("basis index {m} out of range for {n} qubit(s)")));
                }
                if marked.contains(&m) {
                    return Err(self.err_at(t, format!("basis index {m} listed twice")));
                }
                marked.push(m);
            }
            return Ok(GateSpec::Oracle(OracleGate::Marked(marked)));
        }
        let kind = kind_tok
            .text
            .parse::<DeutschOracle>()
            .map_err(|_| self.err_at(kind_tok, "unknown oracle kind"))?;
        self.arity("oracle <kind> <input> <output>", 4, 4)?;
        let q = self.distinct(args, n)?;
        Ok(GateSpec::Oracle(OracleGate::Deutsch { kind, input: q[0], output: q[1] }))
    }

    fn partition(&self) -> Result<PartitionMode, ParseError> {
        if self.tokens.len() < 2 {
            return Err(self.err_end("expected whole, singles or (j:p)..."));
        }
        let first = self.tokens[1];
        if self.tokens.len() == 2 {
            match first.text.to_ascii_lowercase().as_str() {
                "whole" => return Ok(PartitionMode::Whole),
                "singles" => return Ok(PartitionMode::Singles),
                _ => {}
            }
        }
        let mut groups = Vec::new();
        if self.tokens.len() == 2 && first.text == "()" {
            return Ok(PartitionMode::Explicit(groups));
        }
        for &tok in &self.tokens[1..] {
            let mut rest = tok.text;
            let mut offset = 0;
            while !rest.is_empty() {
                let sub = Token { text: rest, column: tok.column + offset };
                let close = rest
                    .find(')')
                    .filter(|_| rest.starts_with('('))
                    .ok_or_else(|| self.err_at(sub, "expected (j:p) groups"))?;
                let body = &rest[1..close];
                let (j, p) = body
                    .split_once(':')
                    .ok_or_else(|| self.err_at(sub, "expected (j:p)"))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| self.err_at(sub, "malformed integer in group"))
                };
                groups.push(Group::new(parse(j)?, parse(p)?));
                offset += rest[..close + 1].chars().count();
                rest = &rest[close + 1..];
            }
        }
        Ok(PartitionMode::Explicit(groups))
    }

    fn rebase(&self, n: usize) -> Result<RebaseDirective, ParseError> {
        if self.tokens.len() < 2 {
            return Err(self.err_end("expected rebase zero|plus|[..] [k=<gate>] [q=<real>]"));
        }
        let basis = self.state_spec(self.tokens[1], n)?;
        let mut k = None;
        let mut q = None;
        for &tok in &self.tokens[2..] {
            let (key, value) = tok
                .text
                .split_once('=')
                .ok_or_else(|| self.err_at(tok, "expected k=<gate> or q=<real>"))?;
            match key.to_ascii_lowercase().as_str() {
                "k" if k.is_none() => {
                    k = Some(value.parse::<StdGate>().map_err(|_| self.err_at(tok, "unknown gate for K"))?)
                }
                "q" if q.is_none() => {
                    let v = self.real(tok, value)?;
                    if v <= 0.0 {
                        return Err(self.err_at(tok, "q must be positive"));
                    }
                    q = Some(v);
                }
                "k" | "q" => return Err(self.err_at(tok, "option given twice")),
                _ => return Err(self.err_at(tok, "unknown rebase option")),
            }
        }
        Ok(RebaseDirective {
            basis,
            k: k.unwrap_or(StdGate::I),
            q: q.unwrap_or(1.0),
        })
    }
}

/// Parses `.qc` text using the default register cap.
pub fn parse(source: &str) -> Result<CircuitDescription, ParseError> {
    parse_with_limit(source, DEFAULT_MAX_QUBITS)
}

pub fn parse_with_limit(source: &str, max_qubits: usize) -> Result<CircuitDescription, ParseError> {
    let mut name = None;
    let mut n_qubits: Option<usize> = None;
    let mut initial = None;
    let mut gates = Vec::new();
    let mut partition: Option<(PartitionMode, usize, usize, String)> = None;
    let mut rebase = None;
    let mut last_line = 1;

    for (idx, raw) in source.split('\n').enumerate() {
        let line_no = idx + 1;
        if !raw.trim().is_empty() {
            last_line = line_no;
        }
        let code = raw.split('#').next().unwrap_or("").trim_end_matches('\r');
        let tokens = tokenize(code);
        let Some(&head) = tokens.first() else {
            continue;
        };
        let p = Parser {
            line_no,
            line_len: raw.chars().count(),
            tokens,
            max_qubits,
        };
        let keyword = head.text.to_ascii_lowercase();
        let need_qubits = || {
            n_qubits.ok_or_else(|| p.err_at(head, "`qubits <n>` must come first"))
        };
        match keyword.as_str() {
            "circuit" => {
                p.arity("circuit <name>", 1, 1)?;
                if name.is_some() {
                    return Err(p.err_at(head, "duplicate circuit header"));
                }
                name = Some(p.tokens[1].text.to_string());
            }
            "qubits" => {
                p.arity("qubits <n>", 1, 1)?;
                if n_qubits.is_some() {
                    return Err(p.err_at(head, "duplicate qubits statement"));
                }
                let tok = p.tokens[1];
                let n = p.usize_at(tok)?;
                if n == 0 || n > p.max_qubits {
                    return Err(p.err_at(tok, format!("qubit count must be in 1..={}", p.max_qubits)));
                }
                n_qubits = Some(n);
            }
            "init" => {
                let n = need_qubits()?;
                p.arity("init zero|plus|[re,im ...]", 1, 1)?;
                if initial.is_some() {
                    return Err(p.err_at(head, "duplicate init statement"));
                }
                initial = Some(p.state_spec(p.tokens[1], n)?);
            }
            "gate" => {
                let n = need_qubits()?;
                gates.push(p.gate(n)?);
            }
            "partition" => {
                need_qubits()?;
                if partition.is_some() {
                    return Err(p.err_at(head, "duplicate partition statement"));
                }
                let mode = p.partition()?;
                let arg = p.tokens.get(1).copied().unwrap_or(head);
                partition = Some((mode, line_no, arg.column, arg.text.to_string()));
            }
            "rebase" => {
                let n = need_qubits()?;
                if rebase.is_some() {
                    return Err(p.err_at(head, "duplicate rebase statement"));
                }
                rebase = Some(p.rebase(n)?);
            }
            _ => return Err(p.err_at(head, "unknown keyword")),
        }
    }

    let n_qubits = n_qubits.ok_or_else(|| ParseError {
        line: last_line,
        column: 1,
        message: "missing `qubits <n>` statement".into(),
        offending_token: String::new(),
    })?;
    let partition = match partition {
        Some((PartitionMode::Explicit(groups), line, column, token)) => {
            validate_tiling(&groups, gates.len()).map_err(|e| ParseError {
                line,
                column,
                message: e.to_string(),
                offending_token: token,
            })?;
            Some(PartitionMode::Explicit(groups))
        }
        other => other.map(|(mode, ..)| mode),
    };
    Ok(CircuitDescription {
        name,
        n_qubits,
        initial: initial.unwrap_or(StateSpec::Zero),
        gates,
        partition,
        rebase,
    })
}

/// Parses a partition argument (`whole`, `singles` or `(j:p)...`) on its own.
pub fn parse_partition(text: &str) -> Result<PartitionMode, ParseError> {
    let line = format!("partition {text}");
    let p = Parser {
        line_no: 1,
        line_len: line.chars().count(),
        tokens: tokenize(&line),
        max_qubits: DEFAULT_MAX_QUBITS,
    };
    p.partition().map_err(|mut e| {
        e.column = e.column.saturating_sub(10).max(1);
        e
    })
}

fn fmt_amplitudes(amps: &[Complex64]) -> String {
    let parts: Vec<String> = amps.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
    format!("[{}]", parts.join(" "))
}

fn fmt_state(spec: &StateSpec) -> String {
    match spec {
        StateSpec::Zero => "zero".into(),
        StateSpec::Plus => "plus".into(),
        StateSpec::Explicit(a) => fmt_amplitudes(a),
    }
}

fn join(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateSpec::Std { gate, targets } => write!(f, "{gate} {}", join(targets)),
            GateSpec::Cx { control, target } => write!(f, "cx {control} {target}"),
            GateSpec::Phase { theta, target } => write!(f, "phase({theta}) {target}"),
            GateSpec::CPhase { theta, control, target } => {
                write!(f, "cphase({theta}) {control} {target}")
            }
            GateSpec::Iqft { first, last } => write!(f, "iqft {first}..{last}"),
            GateSpec::Oracle(OracleGate::Deutsch { kind, input, output }) => {
                write!(f, "oracle {} {input} {output}", kind.name())
            }
            GateSpec::Oracle(OracleGate::Marked(m)) => write!(f, "oracle marked {}", join(m)),
            GateSpec::Umat { path, targets } if targets.is_empty() => write!(f, "umat {path}"),
            GateSpec::Umat { path, targets } => write!(f, "umat {path} {}", join(targets)),
        }
    }
}

/// Canonical text: lowercase keywords, single spaces, gates in order.
pub fn serialize(desc: &CircuitDescription) -> String {
    let mut out = String::new();
    if let Some(name) = &desc.name {
        out.push_str(&format!("circuit {name}\n"));
    }
    out.push_str(&format!("qubits {}\n", desc.n_qubits));
    out.push_str(&format!("init {}\n", fmt_state(&desc.initial)));
    for g in &desc.gates {
        out.push_str(&format!("gate {g}\n"));
    }
    if let Some(p) = &desc.partition {
        out.push_str(&format!("partition {p}\n"));
    }
    if let Some(r) = &desc.rebase {
        out.push_str(&format!("rebase {} k={} q={}\n", fmt_state(&r.basis), r.k, r.q));
    }
    out
}

/// A description turned into matrices and states.
#[derive(Debug, Clone)]
pub struct BuiltCircuit {
    pub name: String,
    pub sequence: GateSequence,
    pub initial: StateVector,
    pub partition: Option<PartitionMode>,
    pub rebase: Option<RebaseTarget>,
}

/// Failure while materializing a parsed description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildError {
    /// Index of the offending gate statement, when one is responsible.
    pub gate_index: Option<usize>,
    pub message: String,
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gate_index {
            Some(i) => write!(f, "gate #{i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for BuildError {}

fn build_state(spec: &StateSpec, n: usize) -> crate::Result<StateVector> {
    match spec {
        StateSpec::Zero => StateVector::zero(n),
        StateSpec::Plus => StateVector::plus(n),
        StateSpec::Explicit(a) => StateVector::normalize(a.clone()),
    }
}

fn build_gate(spec: &GateSpec, n: usize, base_dir: &Path) -> Result<GateMatrix, String> {
    let r = match spec {
        GateSpec::Std { gate, targets } => gate_on_each(*gate, n, targets),
        GateSpec::Cx { control, target } => cx(n, *control, *target),
        GateSpec::Phase { theta, target } => embed(&phase_gate(*theta), n, &[*target]),
        GateSpec::CPhase { theta, control, target } => {
            controlled(&phase_gate(*theta), n, *control, &[*target])
        }
        GateSpec::Iqft { first, last } => {
            let targets: Vec<usize> = (*first..=*last).collect();
            embed(&iqft(targets.len()), n, &targets)
        }
        GateSpec::Oracle(OracleGate::Deutsch { kind, input, output }) => {
            embed(&kind.matrix(), n, &[*input, *output])
        }
        GateSpec::Oracle(OracleGate::Marked(m)) => phase_oracle(n, &m.iter().copied().collect()),
        GateSpec::Umat { path, targets } => {
            let u = load_umat(&base_dir.join(path))?;
            let targets: Vec<usize> = if targets.is_empty() {
                (0..n).collect()
            } else {
                targets.clone()
            };
            embed(&u, n, &targets)
        }
    };
    r.map_err(|e| e.to_string())
}

impl CircuitDescription {
    /// Builds matrices; UMAT paths are resolved against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<BuiltCircuit, BuildError> {
        let n = self.n_qubits;
        let whole = |message: String| BuildError { gate_index: None, message };
        let mut sequence = GateSequence::new(n);
        for (i, spec) in self.gates.iter().enumerate() {
            let at = |message: String| BuildError { gate_index: Some(i), message };
            let m = build_gate(spec, n, base_dir).map_err(at)?;
            sequence.push(spec.to_string(), m).map_err(|e| at(e.to_string()))?;
        }
        let initial = build_state(&self.initial, n).map_err(|e| whole(e.to_string()))?;
        let rebase = match &self.rebase {
            Some(r) => Some(RebaseTarget {
                phi: build_state(&r.basis, n).map_err(|e| whole(e.to_string()))?,
                k: tensor_power(&r.k.matrix(), n),
                q: r.q,
            }),
            None => None,
        };
        Ok(BuiltCircuit {
            name: self.name.clone().unwrap_or_default(),
            sequence,
            initial,
            partition: self.partition.clone(),
            rebase,
        })
    }
}

/// Parses one `re{+|-}im i` entry, e.g. `0.5-0.25i`, `-1e-3+2i`, `1+0i`.
pub fn parse_complex(token: &str) -> Option<Complex64> {
    let body = token.strip_suffix('i')?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    (re.is_finite() && im.is_finite()).then(|| Complex64::new(re, im))
}

/// Parses a UMAT document: `dim <2^k>` then `2^k` rows of entries. Blank
/// lines and `#` comments are ignored. Unitarity is checked to 1e-10.
pub fn parse_umat(text: &str) -> Result<GateMatrix, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or("empty matrix file")?;
    let dim = header
        .strip_prefix("dim")
        .and_then(|d| d.trim().parse::<usize>().ok())
        .ok_or_else(|| format!("line {hl}: expected `dim <2^k>`"))?;
    if dim < 2 || !dim.is_power_of_two() {
        return Err(format!("line {hl}: dim {dim} is not a power of two >= 2"));
    }
    let mut entries = Array2::zeros((dim, dim));
    for r in 0..dim {
        let (ln, row) = lines.next().ok_or_else(|| format!("expected {dim} rows, found {r}"))?;
        let cells: Vec<&str> = row.split_whitespace().collect();
        if cells.len() != dim {
            return Err(format!("line {ln}: expected {dim} entries, found {}", cells.len()));
        }
        for (c, cell) in cells.iter().enumerate() {
            entries[[r, c]] =
                parse_complex(cell).ok_or_else(|| format!("line {ln}: malformed entry {cell:?}"))?;
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(format!("line {ln}: unexpected content after {dim} rows"));
    }
    GateMatrix::new_unitary(entries).map_err(|e| e.to_string())
}

pub fn load_umat(path: &Path) -> Result<GateMatrix, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_umat(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Writes a matrix in UMAT form.
pub fn write_umat(m: &GateMatrix) -> String {
    let mut out = format!("dim {}\n", m.dim());
    for row in m.entries().rows() {
        let cells: Vec<String> = row
            .iter()
            .map(|z| {
                let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                format!("{}{sign}{}i", z.re, z.im.abs())
            })
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}
