//! The restricted operator space: canonical matrix-unit bases for two- and
//! four-level systems, and the library of equally weighted combinations of
//! up to `C` basis terms, each classified by Hermiticity and optical role.
//!
//! Level ordering is `(e, g)` for `d = 2` and `(g, alpha, beta, e)` for
//! `d = 4`; labels follow that ordering (`σ₋` is `|g><e|`, `σ_{gα}` is
//! `|g><α|`).

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{matrix_unit, ComplexMatrix};

/// Dipole-allowed lowering transitions as `(to, from)` level pairs.
fn lowering_pairs(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        2 => &[(1, 0)],                           // e -> g
        4 => &[(1, 3), (2, 3), (0, 1), (0, 2)],   // e -> alpha/beta, alpha/beta -> g
        _ => &[],
    }
}

fn level_letter(dim: usize, i: usize) -> &'static str {
    match (dim, i) {
        (2, 0) => "e",
        (2, 1) => "g",
        (4, 0) => "g",
        (4, 1) => "α",
        (4, 2) => "β",
        (4, 3) => "e",
        _ => "?",
    }
}

fn term_label(dim: usize, to: usize, from: usize) -> String {
    if dim == 2 {
        return match (to, from) {
            (0, 1) => "σ₊".into(),
            (1, 0) => "σ₋".into(),
            (0, 0) => "σ_e".into(),
            (1, 1) => "σ_g".into(),
            _ => unreachable!(),
        };
    }
    if to == from {
        format!("σ_{}", level_letter(dim, to))
    } else {
        format!("σ_{{{}{}}}", level_letter(dim, to), level_letter(dim, from))
    }
}

/// Parse a single term label back into its `(to, from)` pair.
pub fn parse_term_label(label: &str, dim: usize) -> Result<(usize, usize)> {
    let letters: Vec<&str> = (0..dim).map(|i| level_letter(dim, i)).collect();
    let find = |s: &str| -> Result<usize> {
        letters
            .iter()
            .position(|l| *l == s)
            .ok_or_else(|| Error::Parse(format!("unknown level '{s}' for dim {dim}")))
    };
    if dim == 2 {
        return match label {
            "σ₊" => Ok((0, 1)),
            "σ₋" => Ok((1, 0)),
            "σ_e" => Ok((0, 0)),
            "σ_g" => Ok((1, 1)),
            _ => Err(Error::Parse(format!("unknown term label '{label}'"))),
        };
    }
    if let Some(rest) = label.strip_prefix("σ_{") {
        let inner = rest
            .strip_suffix('}')
            .ok_or_else(|| Error::Parse(format!("malformed term label '{label}'")))?;
        let chars: Vec<String> = inner.chars().map(|c| c.to_string()).collect();
        if chars.len() != 2 {
            return Err(Error::Parse(format!("malformed term label '{label}'")));
        }
        return Ok((find(&chars[0])?, find(&chars[1])?));
    }
    if let Some(rest) = label.strip_prefix("σ_") {
        let i = find(rest)?;
        return Ok((i, i));
    }
    Err(Error::Parse(format!("unknown term label '{label}'")))
}

/// One canonical matrix unit `|to><from|`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisTerm {
    pub dim: usize,
    pub to: usize,
    pub from: usize,
    pub label: String,
}

impl BasisTerm {
    pub fn new(dim: usize, to: usize, from: usize) -> Self {
        Self {
            dim,
            to,
            from,
            label: term_label(dim, to, from),
        }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        matrix_unit(self.dim, self.to, self.from)
    }

    pub fn is_diagonal(&self) -> bool {
        self.to == self.from
    }
}

/// Canonical basis of matrix units for a supported dimension.
///
/// Returns the four Pauli-like units for `d = 2` and all sixteen units for
/// `d = 4` (the pairwise tensor products of the two-level set, reordered to
/// the `(g, alpha, beta, e)` basis).
pub fn enumerate_basis(dim: usize) -> Result<Vec<BasisTerm>> {
    match dim {
        2 => Ok(vec![
            BasisTerm::new(2, 0, 1), // sigma_+
            BasisTerm::new(2, 1, 0), // sigma_-
            BasisTerm::new(2, 0, 0), // sigma_e
            BasisTerm::new(2, 1, 1), // sigma_g
        ]),
        4 => {
            let mut terms = Vec::with_capacity(16);
            for to in 0..4 {
                for from in 0..4 {
                    terms.push(BasisTerm::new(4, to, from));
                }
            }
            Ok(terms)
        }
        _ => Err(Error::InvalidInput(format!(
            "unsupported dimension {dim}; expected 2 or 4"
        ))),
    }
}

/// Optical role of a process, as seen by the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpticalClass {
    /// Every term is a dipole-allowed lowering transition; triggers clicks.
    MonitoredEmission,
    /// Every term is the adjoint of an allowed lowering transition.
    Excitation,
    /// Everything else: diagonal, mixed, two-step, or lateral terms.
    Dark,
}

impl OpticalClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            OpticalClass::MonitoredEmission => "monitored_emission",
            OpticalClass::Excitation => "excitation",
            OpticalClass::Dark => "dark",
        }
    }
}

/// An equally weighted sum of basis terms (unit coefficients, no
/// normalization; the associated rate absorbs overall scale).
#[derive(Debug, Clone)]
pub struct ProcessOperator {
    pub dim: usize,
    pub terms: Vec<BasisTerm>,
    pub matrix: ComplexMatrix,
    pub hermitian: bool,
    pub optical_class: OpticalClass,
    pub label: String,
}

impl PartialEq for ProcessOperator {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.label == other.label
    }
}

impl ProcessOperator {
    /// Build from `(to, from)` pairs; terms are sorted canonically and must
    /// be distinct.
    pub fn from_terms(dim: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("a process needs at least one term".into()));
        }
        let mut sorted: Vec<(usize, usize)> = pairs.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != pairs.len() {
            return Err(Error::InvalidInput("duplicate terms in process".into()));
        }
        for &(to, from) in &sorted {
            if to >= dim || from >= dim {
                return Err(Error::InvalidInput(format!(
                    "term ({to},{from}) out of range for dim {dim}"
                )));
            }
        }
        let terms: Vec<BasisTerm> = sorted
            .iter()
            .map(|&(to, from)| BasisTerm::new(dim, to, from))
            .collect();
        let mut matrix = ComplexMatrix::zeros(dim, dim);
        for t in &terms {
            matrix[(t.to, t.from)] += C64::new(1.0, 0.0);
        }
        let hermitian = sorted.iter().all(|&(to, from)| sorted.contains(&(from, to)));
        let optical_class = classify_pairs(&sorted, dim);
        let label = terms
            .iter()
            .map(|t| t.label.as_str())
            .collect::<Vec<_>>()
            .join("+");
        Ok(Self {
            dim,
            terms,
            matrix,
            hermitian,
            optical_class,
            label,
        })
    }

    pub fn from_label(label: &str, dim: usize) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = label
            .split('+')
            .map(|part| parse_term_label(part, dim))
            .collect::<Result<_>>()?;
        Self::from_terms(dim, &pairs)
    }

    /// The Hermitian conjugate process (all terms transposed).
    pub fn adjoint(&self) -> Self {
        let pairs: Vec<(usize, usize)> = self.terms.iter().map(|t| (t.from, t.to)).collect();
        Self::from_terms(self.dim, &pairs).expect("adjoint of valid terms is valid")
    }

    fn term_pairs(&self) -> Vec<(usize, usize)> {
        self.terms.iter().map(|t| (t.to, t.from)).collect()
    }

    pub fn has_off_diagonal(&self) -> bool {
        self.terms.iter().any(|t| !t.is_diagonal())
    }
}

fn classify_pairs(pairs: &[(usize, usize)], dim: usize) -> OpticalClass {
    let lowering = lowering_pairs(dim);
    if pairs.iter().all(|p| lowering.contains(p)) {
        OpticalClass::MonitoredEmission
    } else if pairs.iter().all(|&(to, from)| lowering.contains(&(from, to))) {
        OpticalClass::Excitation
    } else {
        OpticalClass::Dark
    }
}

/// Classify a process: monitored emission iff every term is a dipole-allowed
/// lowering transition, excitation iff every term is the adjoint of one,
/// dark otherwise.
pub fn classify_optical(op: &ProcessOperator) -> OpticalClass {
    classify_pairs(&op.term_pairs(), op.dim)
}

/// The enumerated candidate space for one system dimension and complexity.
#[derive(Debug, Clone)]
pub struct OperatorLibrary {
    dim: usize,
    complexity: usize,
    ops: Vec<Arc<ProcessOperator>>,
    pre_dedup_count: usize,
    dedup_removed: Vec<(String, String)>,
    by_label: HashMap<String, usize>,
    hamiltonian_idx: Vec<usize>,
    adjoint_idx: Vec<Option<usize>>,
}

fn equal_up_to_positive_scalar(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
    let pivot = a.iter().zip(b.iter()).find(|(x, _)| x.norm() > 1e-14);
    let Some((x, y)) = pivot else {
        return b.iter().all(|z| z.norm() <= 1e-14);
    };
    let r = y / x;
    if r.im.abs() > 1e-12 || r.re <= 0.0 {
        return false;
    }
    a.iter().zip(b.iter()).all(|(x, y)| (x * r - y).norm() <= 1e-12)
}

impl OperatorLibrary {
    /// Enumerate all unordered combinations of `1..=complexity` basis terms,
    /// dropping candidates equal to an earlier entry up to a positive scalar.
    pub fn build(dim: usize, complexity: usize) -> Result<Self> {
        if complexity < 1 {
            return Err(Error::InvalidInput("complexity must be >= 1".into()));
        }
        let basis = enumerate_basis(dim)?;
        let n = basis.len();

        let mut candidates: Vec<Vec<usize>> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        fn combos(
            start: usize,
            n: usize,
            left: usize,
            stack: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if left == 0 {
                out.push(stack.clone());
                return;
            }
            for i in start..n {
                stack.push(i);
                combos(i + 1, n, left - 1, stack, out);
                stack.pop();
            }
        }
        for size in 1..=complexity.min(n) {
            combos(0, n, size, &mut stack, &mut candidates);
        }
        let pre_dedup_count = candidates.len();

        let mut ops: Vec<Arc<ProcessOperator>> = Vec::new();
        let mut dedup_removed = Vec::new();
        for idxs in candidates {
            let pairs: Vec<(usize, usize)> =
                idxs.iter().map(|&i| (basis[i].to, basis[i].from)).collect();
            let op = ProcessOperator::from_terms(dim, &pairs)?;
            if let Some(kept) = ops
                .iter()
                .find(|k| equal_up_to_positive_scalar(&k.matrix, &op.matrix))
            {
                dedup_removed.push((op.label.clone(), kept.label.clone()));
            } else {
                ops.push(Arc::new(op));
            }
        }
        Ok(Self::from_parts(dim, complexity, ops, pre_dedup_count, dedup_removed))
    }

    fn from_parts(
        dim: usize,
        complexity: usize,
        ops: Vec<Arc<ProcessOperator>>,
        pre_dedup_count: usize,
        dedup_removed: Vec<(String, String)>,
    ) -> Self {
        let by_label: HashMap<String, usize> = ops
            .iter()
            .enumerate()
            .map(|(i, op)| (op.label.clone(), i))
            .collect();
        let hamiltonian_idx: Vec<usize> = ops
            .iter()
            .enumerate()
            .filter(|(_, op)| op.hermitian)
            .map(|(i, _)| i)
            .collect();
        let adjoint_idx: Vec<Option<usize>> = ops
            .iter()
            .map(|op| by_label.get(&op.adjoint().label).copied())
            .collect();
        Self {
            dim,
            complexity,
            ops,
            pre_dedup_count,
            dedup_removed,
            by_label,
            hamiltonian_idx,
            adjoint_idx,
        }
    }

    /// Wrap an explicit operator list (used for reduced libraries in tests
    /// and diagnostics).
    pub fn from_ops(dim: usize, complexity: usize, ops: Vec<ProcessOperator>) -> Self {
        let n = ops.len();
        Self::from_parts(dim, complexity, ops.into_iter().map(Arc::new).collect(), n, Vec::new())
    }

    /// A sub-library containing only the named operators, in the given order.
    pub fn subset(&self, labels: &[&str]) -> Result<Self> {
        let ops: Vec<Arc<ProcessOperator>> = labels
            .iter()
            .map(|l| {
                self.by_label
                    .get(*l)
                    .map(|&i| self.ops[i].clone())
                    .ok_or_else(|| Error::InvalidInput(format!("label '{l}' not in library")))
            })
            .collect::<Result<_>>()?;
        let n = ops.len();
        Ok(Self::from_parts(self.dim, self.complexity, ops, n, Vec::new()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn complexity(&self) -> usize {
        self.complexity
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn pre_dedup_count(&self) -> usize {
        self.pre_dedup_count
    }

    pub fn dedup_removed(&self) -> &[(String, String)] {
        &self.dedup_removed
    }

    pub fn ops(&self) -> &[Arc<ProcessOperator>] {
        &self.ops
    }

    pub fn get(&self, idx: usize) -> &Arc<ProcessOperator> {
        &self.ops[idx]
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    /// Library index of the adjoint of `idx`, when present.
    pub fn adjoint_of(&self, idx: usize) -> Option<usize> {
        self.adjoint_idx[idx]
    }

    /// Indices of the Hermitian operators (the Hamiltonian-eligible subset).
    pub fn hamiltonian_indices(&self) -> &[usize] {
        &self.hamiltonian_idx
    }

    /// The Hermitian sub-library, as operators.
    pub fn hamiltonian_sublibrary(&self) -> Vec<Arc<ProcessOperator>> {
        self.hamiltonian_idx.iter().map(|&i| self.ops[i].clone()).collect()
    }

    pub fn hamiltonian_size(&self) -> usize {
        self.hamiltonian_idx.len()
    }
}
