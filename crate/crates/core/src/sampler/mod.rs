//! Reversible-jump MCMC over master-equation structures and rates:
//! Metropolis-Hastings steps over the move library, Gibbs updates of the
//! per-experiment noise precisions, chain records, and parallel-chain
//! orchestration.

pub mod moves;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{
    log_likelihood_from_quadratics, residual_quadratics, sample_precision, ExperimentTrace,
    ResidualStat, SimOptions,
};
use crate::library::OperatorLibrary;
use crate::model::{model_prior_log, rate_prior_log, Model, PriorConfig};
pub use moves::{MoveKind, MoveTable, MOVE_KINDS, RESAMPLE_CAP};

/// Chain meta-parameters. Defaults follow the published settings: 1e5 steps,
/// proposal variance 0.3, 20% burn-in, thinning 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub steps: u64,
    pub proposal_variance: f64,
    /// Fraction of the chain discarded before recording.
    pub burn_in: f64,
    pub thinning: u64,
    pub seed: u64,
    /// Number of processes the initial model is seeded with.
    pub n_start: usize,
    pub move_table: MoveTable,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            steps: 100_000,
            proposal_variance: 0.3,
            burn_in: 0.2,
            thinning: 10,
            seed: 0,
            n_start: 2,
            move_table: MoveTable::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_variance > 0.0) {
            return Err(Error::InvalidInput("proposal variance must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidInput("burn-in fraction must be in [0, 1)".into()));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidInput("thinning must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything a chain needs to score a candidate: the operator library, the
/// measured traces, the priors, and the simulation switches.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    pub library: &'a OperatorLibrary,
    pub data: &'a [ExperimentTrace],
    pub priors: &'a PriorConfig,
    pub opts: SimOptions,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        library: &'a OperatorLibrary,
        data: &'a [ExperimentTrace],
        priors: &'a PriorConfig,
        opts: SimOptions,
    ) -> Result<Self> {
        if priors.beta_priors.len() != data.len() {
            return Err(Error::InvalidInput(format!(
                "{} beta priors for {} experiments",
                priors.beta_priors.len(),
                data.len()
            )));
        }
        Ok(Self {
            library,
            data,
            priors,
            opts,
        })
    }

    /// Structure prior plus rate priors; `-inf` rejects the candidate before
    /// any simulation runs.
    fn structural_log_prior(&self, model: &Model) -> f64 {
        let (n_h, n_l, n_c) = model.n_counts();
        let mp = model_prior_log(
            n_h,
            n_l,
            n_c,
            self.library.hamiltonian_size(),
            self.library.len(),
            self.priors,
        );
        if mp == f64::NEG_INFINITY {
            return mp;
        }
        let rp = rate_prior_log(model, self.priors);
        if model
            .rate_values()
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return f64::NEG_INFINITY;
        }
        mp + rp
    }

    fn beta_log_prior(&self, beta: &[f64]) -> f64 {
        beta.iter()
            .zip(&self.priors.beta_priors)
            .map(|(b, p)| p.log_pdf(*b))
            .sum()
    }

    /// Score a model at the given precisions. Returns the log posterior and,
    /// when the model simulates, the per-experiment residual quadratics.
    pub fn evaluate(&self, model: &Model, beta: &[f64]) -> (f64, f64, Option<Vec<ResidualStat>>) {
        let structural = self.structural_log_prior(model);
        if structural == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, structural, None);
        }
        if self.data.is_empty() {
            return (structural, structural, Some(Vec::new()));
        }
        match residual_quadratics(model, self.data, &self.opts) {
            Ok(stats) => {
                let lp = structural
                    + log_likelihood_from_quadratics(&stats, beta)
                    + self.beta_log_prior(beta);
                (lp, structural, Some(stats))
            }
            Err(_) => (f64::NEG_INFINITY, structural, None),
        }
    }
}

/// Current chain position with its cached score parts.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub model: Model,
    pub beta: Vec<f64>,
    pub log_posterior: f64,
    pub step_index: u64,
    structural: f64,
    stats: Option<Vec<ResidualStat>>,
}

/// One thinned post-burn-in sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub step: u64,
    pub log_posterior: f64,
    pub signature: String,
    pub hamiltonian: Vec<(String, f64)>,
    pub lindblad: Vec<(String, f64)>,
    pub background: f64,
    pub beta: Vec<f64>,
}

impl SampleRecord {
    /// Rebuild the sampled model from its labels and rates.
    pub fn to_model(&self, dim: usize) -> Result<Model> {
        let mut text = format!("dim {dim}\nbackground {}\n", self.background);
        for (label, rate) in &self.hamiltonian {
            text.push_str(&format!("H {label} {rate}\n"));
        }
        for (label, rate) in &self.lindblad {
            text.push_str(&format!("L {label} {rate}\n"));
        }
        Model::from_text(&text)
    }
}

/// Per-move proposal and acceptance counters, indexed by [`MOVE_KINDS`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: [u64; 10],
    pub accepted: [u64; 10],
    /// Steps where ten redraws found no applicable move.
    pub aborted_steps: u64,
    /// Individual move-kind draws discarded as inapplicable.
    pub inapplicable_draws: u64,
}

/// The recorded output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain_index: usize,
    pub dim: usize,
    pub seed: u64,
    pub config: SamplerConfig,
    pub samples: Vec<SampleRecord>,
    pub stats: MoveStats,
}

impl ChainRecord {
    /// Distinct structure signatures explored by the recorded samples.
    pub fn signature_set(&self) -> BTreeSet<String> {
        self.samples.iter().map(|s| s.signature.clone()).collect()
    }
}

fn make_sample(state: &ChainState) -> SampleRecord {
    SampleRecord {
        step: state.step_index,
        log_posterior: state.log_posterior,
        signature: state.model.canonical_signature(),
        hamiltonian: state
            .model
            .hamiltonian
            .iter()
            .map(|p| (p.op.label.clone(), p.rate.value))
            .collect(),
        lindblad: state
            .model
            .lindblad
            .iter()
            .map(|p| (p.op.label.clone(), p.rate.value))
            .collect(),
        background: state.model.background.value,
        beta: state.beta.clone(),
    }
}

/// Build the initial model: `n_start` add moves drawn from the birth subset
/// of the move table, with rates (and the background) drawn from the rate
/// prior.
pub fn init_model<R: Rng + ?Sized>(
    n_start: usize,
    library: &OperatorLibrary,
    priors: &PriorConfig,
    table: &MoveTable,
    rng: &mut R,
) -> Model {
    let mut model = Model::empty(library.dim());
    model.background = priors.rate_prior.sample(rng);
    let births = [MoveKind::BirthH, MoveKind::BirthL, MoveKind::BirthConj];
    for _ in 0..n_start {
        let eligible: Vec<MoveKind> = births
            .iter()
            .copied()
            .filter(|k| moves::applicable(*k, &model, library))
            .collect();
        if eligible.is_empty() {
            break;
        }
        let mut weights: Vec<f64> = eligible.iter().map(|k| table.prob(*k)).collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            weights = vec![1.0; eligible.len()];
        }
        let total: f64 = weights.iter().sum();
        let mut u: f64 = rng.random::<f64>() * total;
        let mut kind = eligible[eligible.len() - 1];
        for (k, w) in eligible.iter().zip(&weights) {
            if u < *w {
                kind = *k;
                break;
            }
            u -= w;
        }
        if let Some(prop) = moves::propose(&model, kind, library, 1.0, &priors.rate_prior, rng) {
            model = prop.model;
        }
    }
    model
}

/// Run one chain. Deterministic given the seed; individual step failures
/// (unsimulable candidates) become rejections.
pub fn run_chain(config: &SamplerConfig, evaluator: &Evaluator) -> Result<ChainRecord> {
    run_chain_indexed(config, evaluator, 0)
}

fn run_chain_indexed(
    config: &SamplerConfig,
    evaluator: &Evaluator,
    chain_index: usize,
) -> Result<ChainRecord> {
    config.validate()?;
    let lib = evaluator.library;
    let sigma = config.proposal_variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut stats_counter = MoveStats::default();

    let model = init_model(config.n_start, lib, evaluator.priors, &config.move_table, &mut rng);
    let beta: Vec<f64> = evaluator
        .priors
        .beta_priors
        .iter()
        .map(|p| p.sample(&mut rng).value)
        .collect();
    let (lp, structural, stats) = evaluator.evaluate(&model, &beta);
    let mut state = ChainState {
        model,
        beta,
        log_posterior: lp,
        step_index: 0,
        structural,
        stats,
    };

    let burn = (config.burn_in * config.steps as f64).floor() as u64;
    let mut samples = Vec::new();
    if config.steps == 0 {
        samples.push(make_sample(&state));
    }

    for step in 1..=config.steps {
        state.step_index = step;

        let mut chosen = None;
        for _ in 0..RESAMPLE_CAP {
            let kind = config.move_table.sample(&mut rng);
            if moves::applicable(kind, &state.model, lib) {
                chosen = Some(kind);
                break;
            }
            stats_counter.inapplicable_draws += 1;
        }

        if let Some(kind) = chosen {
            stats_counter.proposed[kind.index()] += 1;
            let mass_x = moves::applicable_mass(&config.move_table, &state.model, lib);
            let prop = moves::propose(
                &state.model,
                kind,
                lib,
                sigma,
                &evaluator.priors.rate_prior,
                &mut rng,
            )
            .expect("applicable move must propose");
            let (lp_new, structural_new, stats_new) = evaluator.evaluate(&prop.model, &state.beta);
            let mass_y = moves::applicable_mass(&config.move_table, &prop.model, lib);

            // full Metropolis-Hastings log ratio: posterior, move-kind
            // selection (renormalized over the applicable set, with the
            // capped-resampling success factor), and proposal construction
            let log_move = config.move_table.prob(kind.reverse()).ln()
                - config.move_table.prob(kind).ln()
                + mass_x.ln()
                - mass_y.ln()
                + moves::proposal_success_prob(mass_y).ln()
                - moves::proposal_success_prob(mass_x).ln()
                + prop.log_rev
                - prop.log_fwd;

            let u: f64 = rng.random();
            // a state outside the posterior support (a start-up artifact)
            // walks the prior-supported space freely until the likelihood
            // becomes finite; from a supported state, unsupported candidates
            // are always rejected
            let accept = if state.log_posterior == f64::NEG_INFINITY {
                structural_new > f64::NEG_INFINITY
            } else if lp_new == f64::NEG_INFINITY {
                false
            } else {
                let log_rho = (lp_new - state.log_posterior) + log_move;
                log_rho >= 0.0 || u.ln() < log_rho
            };
            if accept {
                stats_counter.accepted[kind.index()] += 1;
                state.model = prop.model;
                state.log_posterior = lp_new;
                state.structural = structural_new;
                state.stats = stats_new;
            }
        } else {
            stats_counter.aborted_steps += 1;
        }

        // Gibbs refresh of the noise precisions from the conjugate posterior
        if let Some(st) = &state.stats {
            if !st.is_empty() {
                for (k, s) in st.iter().enumerate() {
                    state.beta[k] = sample_precision(
                        s.q,
                        s.n,
                        &evaluator.priors.beta_priors[k],
                        &mut rng,
                    );
                }
                state.log_posterior = state.structural
                    + log_likelihood_from_quadratics(st, &state.beta)
                    + evaluator.beta_log_prior(&state.beta);
            }
        }

        // the stored log posterior must recompute from (model, beta, data)
        #[cfg(debug_assertions)]
        if step % 997 == 0 && state.log_posterior != f64::NEG_INFINITY {
            let (lp_check, _, _) = evaluator.evaluate(&state.model, &state.beta);
            debug_assert!(
                (lp_check - state.log_posterior).abs()
                    <= 1e-9 * state.log_posterior.abs().max(1.0),
                "state log posterior {} drifted from recomputation {}",
                state.log_posterior,
                lp_check
            );
        }

        if step > burn && (step - burn - 1) % config.thinning == 0 {
            samples.push(make_sample(&state));
        }
    }

    Ok(ChainRecord {
        chain_index,
        dim: lib.dim(),
        seed: config.seed,
        config: config.clone(),
        samples,
        stats: stats_counter,
    })
}

/// Run `n_chains` independent chains with derived seeds `seed + index`.
/// Results are ordered by chain index regardless of scheduling.
#[cfg(feature = "parallel")]
pub fn run_parallel(
    config: &SamplerConfig,
    n_chains: usize,
    evaluator: &Evaluator,
) -> Result<Vec<ChainRecord>> {
    (0..n_chains)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(i as u64);
            run_chain_indexed(&c, evaluator, i)
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_parallel(
    config: &SamplerConfig,
    n_chains: usize,
    evaluator: &Evaluator,
) -> Result<Vec<ChainRecord>> {
    run_chains_sequential(config, n_chains, evaluator)
}

/// Sequential fallback with identical output to [`run_parallel`].
pub fn run_chains_sequential(
    config: &SamplerConfig,
    n_chains: usize,
    evaluator: &Evaluator,
) -> Result<Vec<ChainRecord>> {
    (0..n_chains)
        .map(|i| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(i as u64);
            run_chain_indexed(&c, evaluator, i)
        })
        .collect()
}

/// Joint posterior samples over the rates of a fixed structure.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// Column labels: the structure's rates, then `background`, then one
    /// `beta_*` per experiment, then `log_posterior`.
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub proposed: u64,
    pub accepted: u64,
}

/// Standard MCMC over `(rates, background, beta)` with the structure held
/// fixed: a RATE-move-only chain plus the Gibbs precision updates.
pub fn fit_rates(
    structure: &Model,
    config: &SamplerConfig,
    evaluator: &Evaluator,
) -> Result<RateFit> {
    structure.validate()?;
    let mut c = config.clone();
    c.move_table = MoveTable::rate_only();
    c.n_start = 0;

    // reuse the chain loop but start from the given structure
    let lib = evaluator.library;
    let sigma = c.proposal_variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut state_model = structure.clone();
    // rates of exactly zero sit outside the prior support wall; nudge them
    for p in state_model
        .hamiltonian
        .iter_mut()
        .chain(state_model.lindblad.iter_mut())
    {
        if p.rate.value <= 0.0 {
            p.rate = evaluator.priors.rate_prior.sample(&mut rng);
        }
    }
    if state_model.background.value <= 0.0 {
        state_model.background = evaluator.priors.rate_prior.sample(&mut rng);
    }
    let beta: Vec<f64> = evaluator
        .priors
        .beta_priors
        .iter()
        .map(|p| p.sample(&mut rng).value)
        .collect();
    let (lp, structural, stats) = evaluator.evaluate(&state_model, &beta);
    let mut state = ChainState {
        model: state_model,
        beta,
        log_posterior: lp,
        step_index: 0,
        structural,
        stats,
    };

    let labels: Vec<String> = state
        .model
        .rate_labels()
        .into_iter()
        .chain(
            (0..evaluator.data.len()).map(|k| format!("beta_{}", evaluator.data[k].kind.as_str())),
        )
        .chain(std::iter::once("log_posterior".into()))
        .collect();

    let burn = (c.burn_in * c.steps as f64).floor() as u64;
    let mut rows = Vec::new();
    let mut proposed = 0;
    let mut accepted = 0;
    for step in 1..=c.steps {
        state.step_index = step;
        proposed += 1;
        let prop = moves::propose(
            &state.model,
            MoveKind::Rate,
            lib,
            sigma,
            &evaluator.priors.rate_prior,
            &mut rng,
        )
        .expect("rate move is always applicable");
        let (lp_new, structural_new, stats_new) = evaluator.evaluate(&prop.model, &state.beta);
        let u: f64 = rng.random();
        let accept = if state.log_posterior == f64::NEG_INFINITY {
            structural_new > f64::NEG_INFINITY
        } else if lp_new == f64::NEG_INFINITY {
            false
        } else {
            let log_rho = lp_new - state.log_posterior;
            log_rho >= 0.0 || u.ln() < log_rho
        };
        if accept {
            accepted += 1;
            state.model = prop.model;
            state.log_posterior = lp_new;
            state.structural = structural_new;
            state.stats = stats_new;
        }
        if let Some(st) = &state.stats {
            if !st.is_empty() {
                for (k, s) in st.iter().enumerate() {
                    state.beta[k] =
                        sample_precision(s.q, s.n, &evaluator.priors.beta_priors[k], &mut rng);
                }
                state.log_posterior = state.structural
                    + log_likelihood_from_quadratics(st, &state.beta)
                    + evaluator.beta_log_prior(&state.beta);
            }
        }
        if step > burn && (step - burn - 1) % c.thinning == 0 {
            let mut row = state.model.rate_values();
            row.extend_from_slice(&state.beta);
            row.push(state.log_posterior);
            rows.push(row);
        }
    }

    Ok(RateFit {
        labels,
        rows,
        proposed,
        accepted,
    })
}
