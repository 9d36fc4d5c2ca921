//! The reversible-jump move library: rate perturbations, process birth,
//! death and swap for Hamiltonian and Lindblad parts, and the conjugate-pair
//! moves that add, remove, or exchange Hermitian-conjugate Lindblad pairs.
//!
//! Every proposal carries the exact log-densities of its forward and reverse
//! construction so the Metropolis-Hastings ratio stays correct across
//! dimension changes. Birth rates are drawn from the rate prior, making the
//! dimension-matching Jacobian unity.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::OperatorLibrary;
use crate::model::{GammaPrior, Model, Process, Rate};

/// Maximum redraws when a sampled move kind is inapplicable to the state.
pub const RESAMPLE_CAP: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Rate,
    BirthH,
    DeathH,
    SwapH,
    BirthL,
    DeathL,
    SwapL,
    BirthConj,
    DeathConj,
    SwapConj,
}

pub const MOVE_KINDS: [MoveKind; 10] = [
    MoveKind::Rate,
    MoveKind::BirthH,
    MoveKind::DeathH,
    MoveKind::SwapH,
    MoveKind::BirthL,
    MoveKind::DeathL,
    MoveKind::SwapL,
    MoveKind::BirthConj,
    MoveKind::DeathConj,
    MoveKind::SwapConj,
];

impl MoveKind {
    pub fn index(self) -> usize {
        MOVE_KINDS.iter().position(|k| *k == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Rate => "RATE",
            MoveKind::BirthH => "BIRTH[H]",
            MoveKind::DeathH => "DEATH[H]",
            MoveKind::SwapH => "SWAP[H]",
            MoveKind::BirthL => "BIRTH[L]",
            MoveKind::DeathL => "DEATH[L]",
            MoveKind::SwapL => "SWAP[L]",
            MoveKind::BirthConj => "BIRTH[L*]",
            MoveKind::DeathConj => "DEATH[L*]",
            MoveKind::SwapConj => "SWAP[L*]",
        }
    }

    /// The counterpart move whose proposal density enters the reverse side
    /// of the acceptance ratio.
    pub fn reverse(self) -> MoveKind {
        match self {
            MoveKind::Rate => MoveKind::Rate,
            MoveKind::BirthH => MoveKind::DeathH,
            MoveKind::DeathH => MoveKind::BirthH,
            MoveKind::SwapH => MoveKind::SwapH,
            MoveKind::BirthL => MoveKind::DeathL,
            MoveKind::DeathL => MoveKind::BirthL,
            MoveKind::SwapL => MoveKind::SwapL,
            MoveKind::BirthConj => MoveKind::DeathConj,
            MoveKind::DeathConj => MoveKind::BirthConj,
            MoveKind::SwapConj => MoveKind::SwapConj,
        }
    }
}

/// Selection probabilities over the ten move kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveTable {
    probs: [f64; 10],
}

impl Default for MoveTable {
    fn default() -> Self {
        // RATE 40%, BIRTH/DEATH[H] 4%, SWAP[H] 8%, BIRTH/DEATH[L] 8%,
        // SWAP[L] 16%, conjugate moves 4% each
        Self {
            probs: [0.40, 0.04, 0.04, 0.08, 0.08, 0.08, 0.16, 0.04, 0.04, 0.04],
        }
    }
}

impl MoveTable {
    pub fn new(probs: [f64; 10]) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidInput("move probabilities must be >= 0".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "move probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// All selection mass on RATE; used for fixed-structure rate fitting.
    pub fn rate_only() -> Self {
        let mut probs = [0.0; 10];
        probs[0] = 1.0;
        Self { probs }
    }

    pub fn prob(&self, kind: MoveKind) -> f64 {
        self.probs[kind.index()]
    }

    pub fn probs(&self) -> &[f64; 10] {
        &self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MoveKind {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return MOVE_KINDS[i];
            }
        }
        MOVE_KINDS[9]
    }
}

fn has_label(list: &[Process], label: &str) -> bool {
    list.iter().any(|p| p.op.label == label)
}

fn unused_hamiltonian(model: &Model, lib: &OperatorLibrary) -> Vec<usize> {
    lib.hamiltonian_indices()
        .iter()
        .copied()
        .filter(|&i| !has_label(&model.hamiltonian, &lib.get(i).label))
        .collect()
}

fn unused_lindblad(model: &Model, lib: &OperatorLibrary) -> Vec<usize> {
    (0..lib.len())
        .filter(|&i| !has_label(&model.lindblad, &lib.get(i).label))
        .collect()
}

/// Positions of Lindblad processes whose adjoint exists in the library but
/// is absent from the model (eligible parents for a conjugate birth).
fn conj_birth_candidates(model: &Model, lib: &OperatorLibrary) -> Vec<usize> {
    model
        .lindblad
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            if p.op.hermitian {
                return false;
            }
            match lib.find(&p.op.label).and_then(|i| lib.adjoint_of(i)) {
                Some(j) => !has_label(&model.lindblad, &lib.get(j).label),
                None => false,
            }
        })
        .map(|(pos, _)| pos)
        .collect()
}

/// Positions of Lindblad processes that are one member of a present
/// conjugate pair.
fn conj_members(model: &Model) -> Vec<usize> {
    model
        .lindblad
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.op.hermitian && has_label(&model.lindblad, &p.op.adjoint().label))
        .map(|(pos, _)| pos)
        .collect()
}

/// Present conjugate pairs as position pairs `(i, j)`, `i < j`.
fn conj_pairs(model: &Model) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..model.lindblad.len() {
        let pi = &model.lindblad[i];
        if pi.op.hermitian {
            continue;
        }
        let adj = pi.op.adjoint().label;
        for j in (i + 1)..model.lindblad.len() {
            if model.lindblad[j].op.label == adj {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Library index pairs `(i, j)`, `i < j`, of conjugate operators where both
/// members are absent from the model.
fn absent_conj_pairs(model: &Model, lib: &OperatorLibrary) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..lib.len() {
        if lib.get(i).hermitian {
            continue;
        }
        if let Some(j) = lib.adjoint_of(i) {
            if j > i
                && !has_label(&model.lindblad, &lib.get(i).label)
                && !has_label(&model.lindblad, &lib.get(j).label)
            {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Whether a move kind can produce a proposal from this state.
pub fn applicable(kind: MoveKind, model: &Model, lib: &OperatorLibrary) -> bool {
    let n_h = model.hamiltonian.len();
    let n_l = model.lindblad.len();
    match kind {
        MoveKind::Rate => true, // the background rate always exists
        MoveKind::BirthH => !unused_hamiltonian(model, lib).is_empty(),
        MoveKind::DeathH => n_h >= 1,
        MoveKind::SwapH => n_h >= 1 && !unused_hamiltonian(model, lib).is_empty(),
        MoveKind::BirthL => !unused_lindblad(model, lib).is_empty(),
        MoveKind::DeathL => n_l >= 1,
        MoveKind::SwapL => n_l >= 1 && !unused_lindblad(model, lib).is_empty(),
        MoveKind::BirthConj => !conj_birth_candidates(model, lib).is_empty(),
        MoveKind::DeathConj => !conj_members(model).is_empty(),
        MoveKind::SwapConj => {
            !conj_pairs(model).is_empty() && !absent_conj_pairs(model, lib).is_empty()
        }
    }
}

/// Total selection probability of the moves applicable at this state.
pub fn applicable_mass(table: &MoveTable, model: &Model, lib: &OperatorLibrary) -> f64 {
    MOVE_KINDS
        .iter()
        .filter(|k| applicable(**k, model, lib))
        .map(|k| table.prob(*k))
        .sum()
}

/// Probability that the capped move-kind resampling loop yields any
/// proposal at all from this state.
pub fn proposal_success_prob(applicable_mass: f64) -> f64 {
    1.0 - (1.0 - applicable_mass).powi(RESAMPLE_CAP as i32)
}

/// A candidate state with the log proposal densities of its construction
/// (`log_fwd`) and of the exact reverse construction (`log_rev`), excluding
/// move-kind selection factors, which the chain accounts for separately.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub model: Model,
    pub log_fwd: f64,
    pub log_rev: f64,
}

/// Generate a candidate for one move kind. Returns `None` when the move is
/// inapplicable.
pub fn propose<R: Rng + ?Sized>(
    model: &Model,
    kind: MoveKind,
    lib: &OperatorLibrary,
    proposal_sigma: f64,
    rate_prior: &GammaPrior,
    rng: &mut R,
) -> Option<Proposal> {
    let n_h = model.hamiltonian.len();
    let n_l = model.lindblad.len();
    match kind {
        MoveKind::Rate => {
            let n_r = n_h + n_l + 1;
            let idx = rng.random_range(0..n_r);
            let delta: f64 = Normal::new(0.0, proposal_sigma).unwrap().sample(rng);
            let mut m = model.clone();
            let slot = if idx < n_h {
                &mut m.hamiltonian[idx].rate
            } else if idx < n_h + n_l {
                &mut m.lindblad[idx - n_h].rate
            } else {
                &mut m.background
            };
            *slot = Rate::new(slot.value + delta);
            Some(Proposal {
                model: m,
                log_fwd: 0.0,
                log_rev: 0.0,
            })
        }
        MoveKind::BirthH | MoveKind::BirthL => {
            let cands = if kind == MoveKind::BirthH {
                unused_hamiltonian(model, lib)
            } else {
                unused_lindblad(model, lib)
            };
            if cands.is_empty() {
                return None;
            }
            let pick = cands[rng.random_range(0..cands.len())];
            let rate = rate_prior.sample(rng);
            let mut m = model.clone();
            let proc = Process {
                op: lib.get(pick).clone(),
                rate,
            };
            let n_after = if kind == MoveKind::BirthH {
                m.hamiltonian.push(proc);
                m.hamiltonian.len()
            } else {
                m.lindblad.push(proc);
                m.lindblad.len()
            };
            Some(Proposal {
                model: m,
                log_fwd: -(cands.len() as f64).ln() + rate_prior.log_pdf_rate(&rate),
                log_rev: -(n_after as f64).ln(),
            })
        }
        MoveKind::DeathH | MoveKind::DeathL => {
            let n = if kind == MoveKind::DeathH { n_h } else { n_l };
            if n == 0 {
                return None;
            }
            let pos = rng.random_range(0..n);
            let mut m = model.clone();
            let removed = if kind == MoveKind::DeathH {
                m.hamiltonian.remove(pos)
            } else {
                m.lindblad.remove(pos)
            };
            let unused_after = if kind == MoveKind::DeathH {
                unused_hamiltonian(&m, lib).len()
            } else {
                unused_lindblad(&m, lib).len()
            };
            Some(Proposal {
                model: m,
                log_fwd: -(n as f64).ln(),
                log_rev: -(unused_after as f64).ln() + rate_prior.log_pdf_rate(&removed.rate),
            })
        }
        MoveKind::SwapH | MoveKind::SwapL => {
            let n = if kind == MoveKind::SwapH { n_h } else { n_l };
            let cands = if kind == MoveKind::SwapH {
                unused_hamiltonian(model, lib)
            } else {
                unused_lindblad(model, lib)
            };
            if n == 0 || cands.is_empty() {
                return None;
            }
            let pos = rng.random_range(0..n);
            let pick = cands[rng.random_range(0..cands.len())];
            let mut m = model.clone();
            let slot = if kind == MoveKind::SwapH {
                &mut m.hamiltonian[pos]
            } else {
                &mut m.lindblad[pos]
            };
            slot.op = lib.get(pick).clone();
            // process and replacement counts match in both directions
            let q = -(n as f64).ln() - (cands.len() as f64).ln();
            Some(Proposal {
                model: m,
                log_fwd: q,
                log_rev: q,
            })
        }
        MoveKind::BirthConj => {
            let cands = conj_birth_candidates(model, lib);
            if cands.is_empty() {
                return None;
            }
            let pos = cands[rng.random_range(0..cands.len())];
            let parent_idx = lib.find(&model.lindblad[pos].op.label)?;
            let adj_idx = lib.adjoint_of(parent_idx)?;
            let rate = rate_prior.sample(rng);
            let mut m = model.clone();
            m.lindblad.push(Process {
                op: lib.get(adj_idx).clone(),
                rate,
            });
            let members_after = conj_members(&m).len();
            Some(Proposal {
                model: m,
                log_fwd: -(cands.len() as f64).ln() + rate_prior.log_pdf_rate(&rate),
                log_rev: -(members_after as f64).ln(),
            })
        }
        MoveKind::DeathConj => {
            let members = conj_members(model);
            if members.is_empty() {
                return None;
            }
            let pos = members[rng.random_range(0..members.len())];
            let mut m = model.clone();
            let removed = m.lindblad.remove(pos);
            let cands_after = conj_birth_candidates(&m, lib).len();
            Some(Proposal {
                model: m,
                log_fwd: -(members.len() as f64).ln(),
                log_rev: -(cands_after as f64).ln() + rate_prior.log_pdf_rate(&removed.rate),
            })
        }
        MoveKind::SwapConj => {
            let pairs = conj_pairs(model);
            let absent = absent_conj_pairs(model, lib);
            if pairs.is_empty() || absent.is_empty() {
                return None;
            }
            let (pi, pj) = pairs[rng.random_range(0..pairs.len())];
            let (ai, aj) = absent[rng.random_range(0..absent.len())];
            let mut m = model.clone();
            // rates transfer in label order, so the exchange is self-inverse
            let mut old = vec![
                (m.lindblad[pi].op.label.clone(), m.lindblad[pi].rate),
                (m.lindblad[pj].op.label.clone(), m.lindblad[pj].rate),
            ];
            old.sort_by(|a, b| a.0.cmp(&b.0));
            let mut new_ops = vec![lib.get(ai).clone(), lib.get(aj).clone()];
            new_ops.sort_by(|a, b| a.label.cmp(&b.label));
            m.lindblad.remove(pj);
            m.lindblad.remove(pi);
            m.lindblad.push(Process {
                op: new_ops[0].clone(),
                rate: old[0].1,
            });
            m.lindblad.push(Process {
                op: new_ops[1].clone(),
                rate: old[1].1,
            });
            let q_fwd = -(pairs.len() as f64).ln() - (absent.len() as f64).ln();
            let q_rev = -(conj_pairs(&m).len() as f64).ln()
                - (absent_conj_pairs(&m, lib).len() as f64).ln();
            Some(Proposal {
                model: m,
                log_fwd: q_fwd,
                log_rev: q_rev,
            })
        }
    }
}
