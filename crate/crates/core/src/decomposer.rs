//! Recursive AV expansion of a partitioned gate sequence.
//!
//! Each group `G_{j;p} = G_{j+p} ... G_j` of a partition is applied to every
//! state reached so far, splitting it into an expectation branch (state kept,
//! factor `<G>`) and an orthogonal branch (state `|perp>`, factor `Delta G`).
//! Leaves of the resulting binary tree carry the path product of factors.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::av_identity::{av_from_image, generalized_from_image, GeneralizedTerms};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::qcore::{check_dim, max_abs_diff, vdot, GateMatrix, StateVector, ZERO};

/// A gate together with a short human-readable label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGate {
    pub label: String,
    pub matrix: GateMatrix,
}

/// Gates `G_0 .. G_M` in application order (`G_0` acts first).
#[derive(Debug, Clone, PartialEq)]
pub struct GateSequence {
    n_qubits: usize,
    gates: Vec<LabeledGate>,
}

impl GateSequence {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<LabeledGate>) -> Result<Self> {
        let mut seq = Self::new(n_qubits);
        for g in gates {
            seq.push(g.label, g.matrix)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, label: impl Into<String>, matrix: GateMatrix) -> Result<()> {
        if matrix.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_qubits,
                found: matrix.dim(),
            });
        }
        if !matrix.is_unitary() {
            return Err(Error::InvalidGate(
                "gate sequences only hold unitary gates".into(),
            ));
        }
        self.gates.push(LabeledGate {
            label: label.into(),
            matrix,
        });
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[LabeledGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gates `range` as a new sequence, re-indexed from zero.
    pub fn slice(&self, range: std::ops::Range<usize>) -> GateSequence {
        GateSequence {
            n_qubits: self.n_qubits,
            gates: self.gates[range].to_vec(),
        }
    }

    /// Appends every gate of `other`.
    pub fn extend(&mut self, other: &GateSequence) -> Result<()> {
        for g in &other.gates {
            self.push(g.label.clone(), g.matrix.clone())?;
        }
        Ok(())
    }

    /// Applies `G_{j+p} ... G_j` to a raw vector.
    pub fn apply_group(&self, group: Group, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_group(group)?;
        let mut out = v.to_vec();
        for g in &self.gates[group.start..=group.end()] {
            out = g.matrix.apply_raw(&out)?;
        }
        Ok(out)
    }

    /// Direct state-vector simulation of the whole sequence.
    pub fn simulate(&self, initial: &StateVector) -> Result<Vec<Complex64>> {
        check_dim(1 << self.n_qubits, initial.dim())?;
        let mut out = initial.amplitudes().to_vec();
        for g in &self.gates {
            out = g.matrix.apply_raw(&out)?;
        }
        Ok(out)
    }

    /// `G_M ... G_0` as one matrix (identity for an empty sequence).
    pub fn product(&self) -> GateMatrix {
        self.gates
            .iter()
            .fold(GateMatrix::identity(self.n_qubits), |acc, g| {
                g.matrix.compose(&acc).expect("dimensions checked on push")
            })
    }

    fn check_group(&self, group: Group) -> Result<()> {
        if group.end() >= self.gates.len() {
            return Err(Error::InvalidPartition(format!(
                "group {group} exceeds the last gate index of a {}-gate sequence",
                self.gates.len()
            )));
        }
        Ok(())
    }

    /// `G{j;p}` plus the member labels, last-applied first.
    pub fn group_label(&self, group: Group) -> String {
        let members: Vec<&str> = self.gates[group.start..=group.end()]
            .iter()
            .rev()
            .map(|g| g.label.as_str())
            .collect();
        format!("G{{{};{}}}[{}]", group.start, group.span, members.join("*"))
    }
}

/// The contiguous block `G_{j;p} = G_{j+p} ... G_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Group {
    /// `j`
    pub start: usize,
    /// `p`
    pub span: usize,
}

impl Group {
    pub fn new(start: usize, span: usize) -> Self {
        Self { start, span }
    }

    pub fn end(&self) -> usize {
        self.start + self.span
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{})", self.start, self.span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionMode {
    Whole,
    Singles,
    Explicit(Vec<Group>),
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionMode::Whole => f.write_str("whole"),
            PartitionMode::Singles => f.write_str("singles"),
            PartitionMode::Explicit(groups) if groups.is_empty() => f.write_str("()"),
            PartitionMode::Explicit(groups) => {
                for g in groups {
                    write!(f, "{g}")?;
                }
                Ok(())
            }
        }
    }
}

/// A tiling of `0..=M` by contiguous groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSequencePartition {
    groups: Vec<Group>,
}

impl SubSequencePartition {
    /// Validates that `groups` tile `0..gate_count` exactly, in order.
    pub fn new(groups: Vec<Group>, gate_count: usize) -> Result<Self> {
        validate_tiling(&groups, gate_count)?;
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

impl fmt::Display for SubSequencePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.groups {
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

pub(crate) fn validate_tiling(groups: &[Group], gate_count: usize) -> Result<()> {
    let mut next = 0usize;
    for g in groups {
        if g.start != next {
            let kind = if g.start < next { "overlap" } else { "gap" };
            return Err(Error::InvalidPartition(format!(
                "{kind} at group {g}: expected start {next}"
            )));
        }
        if g.end() >= gate_count {
            return Err(Error::InvalidPartition(format!(
                "group {g} runs past the last gate index {}",
                gate_count as isize - 1
            )));
        }
        next = g.end() + 1;
    }
    if next != gate_count {
        return Err(Error::InvalidPartition(format!(
            "groups cover gates 0..{next} but the sequence has {gate_count}"
        )));
    }
    Ok(())
}

pub fn make_partition(seq: &GateSequence, mode: &PartitionMode) -> Result<SubSequencePartition> {
    let m = seq.len();
    let groups = match mode {
        PartitionMode::Whole if m == 0 => Vec::new(),
        PartitionMode::Whole => vec![Group::new(0, m - 1)],
        PartitionMode::Singles => (0..m).map(|j| Group::new(j, 0)).collect(),
        PartitionMode::Explicit(groups) => groups.clone(),
    };
    SubSequencePartition::new(groups, m)
}

/// Dense product `G_{j+p} ... G_j`.
pub fn group_matrix(seq: &GateSequence, group: Group) -> Result<GateMatrix> {
    seq.check_group(group)?;
    Ok(seq.gates[group.start..=group.end()]
        .iter()
        .fold(GateMatrix::identity(seq.n_qubits), |acc, g| {
            g.matrix.compose(&acc).expect("dimensions checked on push")
        }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Root,
    /// Factor `<G>^psi`, state unchanged.
    Expectation,
    /// Factor `Delta_psi G`, state `|psi_perp>`.
    Orthogonal,
    /// Rebase step: factor `<kappa A>_w ||K phi||`, state `K|phi>` normalized.
    WeakValue,
    /// Rebase step: factor `C / q`, state `|phi_perp>`.
    Complement,
}

impl Branch {
    pub fn letter(self) -> Option<char> {
        match self {
            Branch::Root => None,
            Branch::Expectation => Some('E'),
            Branch::Orthogonal => Some('O'),
            Branch::WeakValue => Some('K'),
            Branch::Complement => Some('P'),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionNode {
    pub branch: Branch,
    /// The factor this branch contributes (1 for the root).
    pub factor: Complex64,
    /// Product of factors from the root down to this node.
    pub amplitude: Complex64,
    pub state: StateVector,
    /// Number of groups consumed to reach this node.
    pub group_index: usize,
    pub path: String,
    pub children: Vec<DecompositionNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub path: String,
    pub amplitude: Complex64,
    pub state: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub n_qubits: usize,
    pub partition: SubSequencePartition,
    pub group_labels: Vec<String>,
    pub root: DecompositionNode,
    /// Sorted by path.
    pub leaves: Vec<Leaf>,
    pub pruned_count: usize,
    /// `max |sum_leaves amplitude * state - direct simulation|`.
    pub reconstruction_residual: f64,
}

impl DecompositionResult {
    /// `sum_leaves amplitude * leaf_state`.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        superpose(&self.leaves, 1 << self.n_qubits)
    }

    pub fn leaf(&self, path: &str) -> Option<&Leaf> {
        self.leaves.iter().find(|l| l.path == path)
    }
}

fn superpose(leaves: &[Leaf], dim: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; dim];
    for leaf in leaves {
        for (o, z) in out.iter_mut().zip(leaf.state.amplitudes()) {
            *o += leaf.amplitude * z;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Children whose cumulative amplitude or uncertainty factor is at or
    /// below this are dropped.
    pub prune_tol: f64,
    /// Expand sibling subtrees on the rayon pool.
    pub parallel: bool,
    pub tolerances: Tolerances,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            prune_tol: 1e-12,
            parallel: false,
            tolerances: Tolerances::default(),
        }
    }
}

struct Expander<'a> {
    seq: &'a GateSequence,
    groups: &'a [Group],
    opts: &'a DecomposeOptions,
}

impl Expander<'_> {
    /// Grows the subtree below `node`; returns the number of dropped children.
    fn expand(&self, node: &mut DecompositionNode) -> Result<usize> {
        let Some(&group) = self.groups.get(node.group_index) else {
            return Ok(0);
        };
        let image = self.seq.apply_group(group, node.state.amplitudes())?;
        let terms = av_from_image(&image, &node.state, &self.opts.tolerances);

        let mut pruned = 0;
        let mut children = Vec::with_capacity(2);
        let tol = self.opts.prune_tol;

        let amp_e = node.amplitude * terms.expectation;
        if amp_e.norm() > tol {
            children.push(self.child(node, Branch::Expectation, terms.expectation, node.state.clone()));
        } else {
            pruned += 1;
        }
        let delta = Complex64::new(terms.uncertainty, 0.0);
        match terms.orthogonal_state {
            Some(perp) if terms.uncertainty > tol && (node.amplitude * delta).norm() > tol => {
                children.push(self.child(node, Branch::Orthogonal, delta, perp));
            }
            _ => pruned += 1,
        }

        pruned += self.expand_children(&mut children)?;
        node.children = children;
        Ok(pruned)
    }

    fn expand_children(&self, children: &mut [DecompositionNode]) -> Result<usize> {
        match children {
            [a, b] if self.opts.parallel => {
                let (ra, rb) = rayon::join(|| self.expand(a), || self.expand(b));
                Ok(ra? + rb?)
            }
            _ => children.iter_mut().map(|c| self.expand(c)).sum(),
        }
    }

    fn child(
        &self,
        parent: &DecompositionNode,
        branch: Branch,
        factor: Complex64,
        state: StateVector,
    ) -> DecompositionNode {
        let mut path = parent.path.clone();
        path.extend(branch.letter());
        DecompositionNode {
            branch,
            factor,
            amplitude: parent.amplitude * factor,
            state,
            group_index: parent.group_index + 1,
            path,
            children: Vec::new(),
        }
    }
}

fn root_node(initial: &StateVector) -> DecompositionNode {
    DecompositionNode {
        branch: Branch::Root,
        factor: Complex64::new(1.0, 0.0),
        amplitude: Complex64::new(1.0, 0.0),
        state: initial.clone(),
        group_index: 0,
        path: String::new(),
        children: Vec::new(),
    }
}

fn collect_leaves(node: &DecompositionNode, depth: usize, out: &mut Vec<Leaf>) {
    if node.group_index == depth {
        out.push(Leaf {
            path: node.path.clone(),
            amplitude: node.amplitude,
            state: node.state.clone(),
        });
    }
    for c in &node.children {
        collect_leaves(c, depth, out);
    }
}

fn finish(
    seq: &GateSequence,
    partition: &SubSequencePartition,
    initial: &StateVector,
    root: DecompositionNode,
    pruned_count: usize,
    depth: usize,
) -> Result<DecompositionResult> {
    let mut leaves = Vec::new();
    collect_leaves(&root, depth, &mut leaves);
    leaves.sort_by(|a, b| a.path.cmp(&b.path));
    let direct = seq.simulate(initial)?;
    let recon = superpose(&leaves, initial.dim());
    Ok(DecompositionResult {
        n_qubits: seq.n_qubits(),
        partition: partition.clone(),
        group_labels: partition.groups().iter().map(|g| seq.group_label(*g)).collect(),
        root,
        leaves,
        pruned_count,
        reconstruction_residual: max_abs_diff(&recon, &direct),
    })
}

fn check_inputs(
    seq: &GateSequence,
    partition: &SubSequencePartition,
    initial: &StateVector,
) -> Result<()> {
    check_dim(1 << seq.n_qubits(), initial.dim())?;
    validate_tiling(partition.groups(), seq.len())
}

/// Expands the AV tree of `seq` over `partition` starting from `initial`.
pub fn decompose(
    seq: &GateSequence,
    partition: &SubSequencePartition,
    initial: &StateVector,
    opts: &DecomposeOptions,
) -> Result<DecompositionResult> {
    check_inputs(seq, partition, initial)?;
    let expander = Expander {
        seq,
        groups: partition.groups(),
        opts,
    };
    let mut root = root_node(initial);
    let pruned = expander.expand(&mut root)?;
    finish(seq, partition, initial, root, pruned, partition.len())
}

/// Target of a rebase: `|phi>`, `K` and `q` with `<K>^phi = q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RebaseTarget {
    pub phi: StateVector,
    pub k: GateMatrix,
    pub q: f64,
}

/// Expresses `U_G |initial>` through the generalized identity with
/// `A = G_M ... G_0`.
pub fn rebase(
    seq: &GateSequence,
    initial: &StateVector,
    target: &RebaseTarget,
) -> Result<GeneralizedTerms> {
    rebase_with(seq, initial, target, &Tolerances::default())
}

pub fn rebase_with(
    seq: &GateSequence,
    initial: &StateVector,
    target: &RebaseTarget,
    tol: &Tolerances,
) -> Result<GeneralizedTerms> {
    let image = seq.simulate(initial)?;
    generalized_from_image(&image, initial, &target.phi, &target.k, target.q, tol)
}

/// Like [`decompose`], but the first group is expanded with the generalized
/// identity onto `K|phi>` and `|phi_perp>`; later groups use the plain AV
/// identity. An empty partition rebases the identity.
pub fn decompose_rebased(
    seq: &GateSequence,
    partition: &SubSequencePartition,
    initial: &StateVector,
    target: &RebaseTarget,
    opts: &DecomposeOptions,
) -> Result<DecompositionResult> {
    check_inputs(seq, partition, initial)?;
    let image = match partition.groups().first() {
        Some(&g) => seq.apply_group(g, initial.amplitudes())?,
        None => initial.amplitudes().to_vec(),
    };
    let terms = generalized_from_image(
        &image,
        initial,
        &target.phi,
        &target.k,
        target.q,
        &opts.tolerances,
    )?;

    let mut root = root_node(initial);
    let expander = Expander {
        seq,
        groups: partition.groups(),
        opts,
    };
    let tol = opts.prune_tol;
    let mut pruned = 0;
    let mut children = Vec::with_capacity(2);

    let k_phi = terms.k_phi();
    let k_norm = k_phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let factor = terms.weak_value_scaled * k_norm;
    if factor.norm() > tol {
        children.push(expander.child(&root, Branch::WeakValue, factor, StateVector::normalize(k_phi)?));
    } else {
        pruned += 1;
    }
    let coeff = terms.orthogonal_coefficient();
    match &terms.phi_perp {
        Some(perp) if coeff > tol => {
            children.push(expander.child(
                &root,
                Branch::Complement,
                Complex64::new(coeff, 0.0),
                perp.clone(),
            ));
        }
        _ => pruned += 1,
    }
    pruned += expander.expand_children(&mut children)?;
    root.children = children;
    // With no groups the rebase step itself is the only level.
    let depth = partition.len().max(1);
    finish(seq, partition, initial, root, pruned, depth)
}

/// `normalize((I - |prev><prev|) g |prev>)` and its normalization constant.
pub fn orthogonal_chain(prev: &StateVector, g: &GateMatrix) -> Result<(Option<StateVector>, f64)> {
    orthogonal_chain_with(prev, g, &Tolerances::default())
}

pub fn orthogonal_chain_with(
    prev: &StateVector,
    g: &GateMatrix,
    tol: &Tolerances,
) -> Result<(Option<StateVector>, f64)> {
    let image = g.apply(prev)?;
    let along = vdot(prev.amplitudes(), &image);
    let projected: Vec<Complex64> = image
        .iter()
        .zip(prev.amplitudes())
        .map(|(x, p)| x - p * along)
        .collect();
    let c = projected.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if c > tol.degenerate {
        Ok((Some(StateVector::normalize(projected)?), c))
    } else {
        Ok((None, c))
    }
}

/// The reconstructed state expanded over computational basis indices,
/// dropping entries with `|c_x| <= cutoff`.
pub fn amplitudes_in_computational_basis(
    result: &DecompositionResult,
    cutoff: f64,
) -> BTreeMap<usize, Complex64> {
    result
        .reconstruct()
        .into_iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > cutoff)
        .collect()
}

/// One visited node: the factor a group contributed on a given source state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorRecord {
    pub path: String,
    pub group: Group,
    pub group_label: String,
    pub branch: Branch,
    /// `|bits>` when the source is a computational basis state, otherwise
    /// `psi[<parent path>]`.
    pub source: String,
    #[serde(serialize_with = "crate::report::serialize_complex")]
    pub factor: Complex64,
}

pub fn describe_state(state: &StateVector, path: &str) -> String {
    match state.basis_index(1e-10) {
        Some(i) if (state.amplitudes()[i] - Complex64::new(1.0, 0.0)).norm() <= 1e-10 => {
            format!("|{}>", StateVector::basis_label(state.n_qubits(), i))
        }
        _ if path.is_empty() => "psi[root]".to_string(),
        _ => format!("psi[{path}]"),
    }
}

/// Pre-order listing of every non-root node.
pub fn factor_report(result: &DecompositionResult) -> Vec<FactorRecord> {
    fn walk(node: &DecompositionNode, result: &DecompositionResult, out: &mut Vec<FactorRecord>) {
        for child in &node.children {
            let gi = child.group_index.saturating_sub(1);
            let (group, group_label) = match result.partition.groups().get(gi) {
                Some(g) => (*g, result.group_labels[gi].clone()),
                None => (Group::new(0, 0), "I".to_string()),
            };
            out.push(FactorRecord {
                path: child.path.clone(),
                group,
                group_label,
                branch: child.branch,
                source: describe_state(&node.state, &node.path),
                factor: child.factor,
            });
            walk(child, result, out);
        }
    }
    let mut out = Vec::new();
    walk(&result.root, result, &mut out);
    out
}

/// Merges leaves whose states coincide up to phase (`|<a|b>| >= 1 - 1e-10`),
/// folding the relative phase into the amplitude. Paths are joined with `+`.
pub fn collapse_equal_leaves(leaves: &[Leaf]) -> Vec<Leaf> {
    let mut merged: Vec<Leaf> = Vec::new();
    'outer: for leaf in leaves {
        for m in merged.iter_mut() {
            let ov = vdot(m.state.amplitudes(), leaf.state.amplitudes());
            if ov.norm() >= 1.0 - 1e-10 {
                m.amplitude += leaf.amplitude * ov;
                m.path.push('+');
                m.path.push_str(&leaf.path);
                continue 'outer;
            }
        }
        merged.push(leaf.clone());
    }
    merged
}
