//! Post-processing of chain records: Liouvillian embedding, PCA projection,
//! k-means clustering with elbow selection, popularity ranking of model
//! classes, posterior-predictive MSE, and the chain-mixing overlap.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{g2_trace, lifetime_trace, ExperimentTrace, SimOptions, TraceKind};
use crate::model::Model;
use crate::sampler::ChainRecord;

/// Provenance of one embedded row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMeta {
    pub chain: usize,
    pub sample: usize,
    pub signature: String,
}

/// Vectorized Liouvillians of a subsample of recorded models: each row is
/// the real parts then the imaginary parts, `2 d^4` columns.
#[derive(Debug, Clone)]
pub struct EmbeddedSamples {
    pub matrix: DMatrix<f64>,
    pub meta: Vec<RowMeta>,
}

/// Embed a deterministic uniform subsample of the recorded models as
/// rate-weighted Liouvillian vectors.
pub fn embed_liouvillians(
    records: &[ChainRecord],
    fraction: f64,
    seed: u64,
) -> Result<EmbeddedSamples> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "subsample fraction {fraction} must be in (0, 1]"
        )));
    }
    let mut index: Vec<(usize, usize)> = Vec::new();
    for (c, rec) in records.iter().enumerate() {
        for s in 0..rec.samples.len() {
            index.push((c, s));
        }
    }
    let total = index.len();
    if total == 0 {
        return Ok(EmbeddedSamples {
            matrix: DMatrix::zeros(0, 0),
            meta: Vec::new(),
        });
    }
    let keep = ((fraction * total as f64).round() as usize).clamp(1, total);
    // partial Fisher-Yates, then restore chain order
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..keep {
        let j = i + rng.random_range(0..total - i);
        index.swap(i, j);
    }
    let mut selected: Vec<(usize, usize)> = index[..keep].to_vec();
    selected.sort_unstable();

    let dim = records[0].dim;
    let width = 2 * dim.pow(4);
    let mut matrix = DMatrix::zeros(keep, width);
    let mut meta = Vec::with_capacity(keep);
    for (row, &(c, s)) in selected.iter().enumerate() {
        let sample = &records[c].samples[s];
        let model = sample.to_model(dim)?;
        let lv = model.liouvillian()?;
        for (col, z) in lv.matrix().as_slice().iter().enumerate() {
            matrix[(row, col)] = z.re;
            matrix[(row, col + width / 2)] = z.im;
        }
        meta.push(RowMeta {
            chain: c,
            sample: s,
            signature: sample.signature.clone(),
        });
    }
    Ok(EmbeddedSamples { matrix, meta })
}

/// PCA projection result.
#[derive(Debug, Clone)]
pub struct Pca {
    pub projected: DMatrix<f64>,
    /// Retained component count.
    pub components: usize,
    /// Column mean of the input, for reconstruction.
    pub mean: Vec<f64>,
    /// Retained components as columns.
    pub basis: DMatrix<f64>,
    /// Eigenvalue mass discarded by the truncation.
    pub discarded_mass: f64,
    /// Set when the input had no variance at all.
    pub zero_variance: bool,
}

/// Mean-center and keep the smallest component count explaining at least
/// `variance_target` of the total variance.
pub fn pca_project(matrix: &DMatrix<f64>, variance_target: f64) -> Result<Pca> {
    let n = matrix.nrows();
    let d = matrix.ncols();
    if n < 2 {
        return Err(Error::InvalidInput("PCA needs at least two rows".into()));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::InvalidInput("variance target must be in (0, 1]".into()));
    }
    let mean: Vec<f64> = (0..d).map(|j| matrix.column(j).sum() / n as f64).collect();
    let mut centered = matrix.clone();
    for j in 0..d {
        for i in 0..n {
            centered[(i, j)] -= mean[j];
        }
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if total < 1e-18 {
        return Ok(Pca {
            projected: DMatrix::zeros(n, 1),
            components: 1,
            mean,
            basis: DMatrix::zeros(d, 1),
            discarded_mass: 0.0,
            zero_variance: true,
        });
    }
    let mut cum = 0.0;
    let mut k = 0;
    for &idx in &order {
        cum += eig.eigenvalues[idx].max(0.0);
        k += 1;
        if cum >= variance_target * total {
            break;
        }
    }
    let basis = DMatrix::from_fn(d, k, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Pca {
        projected: &centered * &basis,
        components: k,
        mean,
        basis,
        discarded_mass: total - cum,
        zero_variance: false,
    })
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row(points: &DMatrix<f64>, i: usize) -> Vec<f64> {
    points.row(i).iter().copied().collect()
}

fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = points.nrows();
    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(row(points, rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| dist_sq(&row(points, i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut u: f64 = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        };
        centers.push(row(points, next));
        for i in 0..n {
            let d = dist_sq(&row(points, i), centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let p = row(points, i);
            let best = (0..k)
                .min_by(|&a, &b| {
                    dist_sq(&p, &centers[a])
                        .partial_cmp(&dist_sq(&p, &centers[b]))
                        .unwrap()
                })
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; points.ncols()]; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (j, v) in points.row(i).iter().enumerate() {
                sums[assign[i]][j] += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed an empty cluster at the farthest point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist_sq(&row(points, a), &centers[assign[a]])
                            .partial_cmp(&dist_sq(&row(points, b), &centers[assign[b]]))
                            .unwrap()
                    })
                    .unwrap();
                centers[c] = row(points, far);
                changed = true;
            } else {
                for j in 0..points.ncols() {
                    centers[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let sse: f64 = (0..n).map(|i| dist_sq(&row(points, i), &centers[assign[i]])).sum();
    (assign, sse)
}

/// Elbow choice on a per-k SSE sequence (`sse[0]` is `k = 1`): the k
/// maximizing the second difference. When even the elbow leaves more than
/// half of the k = 1 scatter unexplained there is no real cluster structure
/// and k = 1 is returned.
pub fn elbow_from_sse(sse: &[f64]) -> usize {
    let k_max = sse.len();
    if k_max < 3 {
        return k_max.max(1);
    }
    if sse[0] <= 1e-18 {
        return 1;
    }
    let mut best_k = 2;
    let mut best = f64::NEG_INFINITY;
    for k in 2..k_max {
        let d2 = sse[k - 2] - 2.0 * sse[k - 1] + sse[k];
        if d2 > best {
            best = d2;
            best_k = k;
        }
    }
    if sse[best_k - 1] / sse[0] > 0.5 {
        return 1;
    }
    best_k
}

/// Clustering outcome for the elbow-chosen k.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub k: usize,
    /// Best-of-restarts SSE for each k in `1..=k_max`.
    pub sse: Vec<f64>,
}

/// K-means over `k = 1..=k_max` (k-means++ seeding, ten restarts each,
/// deterministic seed) with the elbow rule choosing k.
pub fn kmeans_elbow(points: &DMatrix<f64>, k_max: usize, seed: u64) -> Result<Clustering> {
    let n = points.nrows();
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be >= 1".into()));
    }
    if n < k_max {
        return Err(Error::InvalidInput(format!(
            "{n} rows cannot support k_max = {k_max}"
        )));
    }
    let run_k = |k: usize| -> (Vec<usize>, f64) {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for restart in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (k as u64).wrapping_mul(0x9e3779b97f4a7c15)
                    ^ (restart as u64).wrapping_mul(0xd1b54a32d192ed03),
            );
            let (assign, sse) = lloyd(points, k, &mut rng);
            if best.as_ref().map_or(true, |(_, b)| sse < *b) {
                best = Some((assign, sse));
            }
        }
        best.unwrap()
    };

    #[cfg(feature = "parallel")]
    let per_k: Vec<(Vec<usize>, f64)> = (1..=k_max).into_par_iter().map(run_k).collect();
    #[cfg(not(feature = "parallel"))]
    let per_k: Vec<(Vec<usize>, f64)> = (1..=k_max).map(run_k).collect();

    let sse: Vec<f64> = per_k.iter().map(|(_, s)| *s).collect();
    let k = elbow_from_sse(&sse);
    Ok(Clustering {
        assignments: per_k[k - 1].0.clone(),
        k,
        sse,
    })
}

/// A ranked cluster of sampled models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClass {
    pub id: usize,
    pub members: usize,
    /// Fraction of all embedded samples falling in this class.
    pub popularity: f64,
    /// Member signatures by frequency, most frequent first.
    pub signatures: Vec<(String, usize)>,
    /// Per-experiment MSE of the class representative, when computed.
    pub mse: Vec<(TraceKind, f64)>,
}

/// Group the embedded samples by cluster and rank classes by popularity.
pub fn rank_classes(clustering: &Clustering, meta: &[RowMeta]) -> Vec<ModelClass> {
    assert_eq!(clustering.assignments.len(), meta.len());
    let total = meta.len().max(1);
    let mut classes: Vec<ModelClass> = (0..clustering.k)
        .map(|id| ModelClass {
            id,
            members: 0,
            popularity: 0.0,
            signatures: Vec::new(),
            mse: Vec::new(),
        })
        .collect();
    let mut sig_counts: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); clustering.k];
    for (a, m) in clustering.assignments.iter().zip(meta) {
        classes[*a].members += 1;
        *sig_counts[*a].entry(m.signature.clone()).or_insert(0) += 1;
    }
    for (class, counts) in classes.iter_mut().zip(sig_counts) {
        class.popularity = class.members as f64 / total as f64;
        let mut sigs: Vec<(String, usize)> = counts.into_iter().collect();
        sigs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        class.signatures = sigs;
    }
    classes.sort_by(|a, b| {
        b.popularity
            .partial_cmp(&a.popularity)
            .unwrap()
            .then_with(|| a.id.cmp(&b.id))
    });
    classes
}

/// Posterior-predictive band for one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitEnvelope {
    pub kind: TraceKind,
    pub tau: Vec<f64>,
    pub data: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// MSE of a class against the data, with mean +- 1 sd trace envelopes.
#[derive(Debug, Clone)]
pub struct MseReport {
    pub per_experiment: Vec<(TraceKind, f64)>,
    pub envelopes: Vec<FitEnvelope>,
    /// Posterior draws that failed to simulate and were skipped.
    pub skipped: usize,
}

/// Average the per-point squared residual over posterior draws of a class
/// representative, and accumulate the simulated trace envelopes.
pub fn compute_mse(
    models: &[Model],
    data: &[ExperimentTrace],
    opts: &SimOptions,
) -> Result<MseReport> {
    if models.is_empty() {
        return Err(Error::InvalidInput("no posterior draws supplied".into()));
    }
    let mut used = 0usize;
    let mut skipped = 0usize;
    let mut mse_sum = vec![0.0; data.len()];
    let mut mean: Vec<Vec<f64>> = data.iter().map(|t| vec![0.0; t.tau.len()]).collect();
    let mut m2: Vec<Vec<f64>> = data.iter().map(|t| vec![0.0; t.tau.len()]).collect();

    for model in models {
        let sims: Result<Vec<ExperimentTrace>> = data
            .iter()
            .map(|t| match t.kind {
                TraceKind::Lifetime => lifetime_trace(model, &t.tau, opts),
                TraceKind::G2 => g2_trace(model, &t.tau, opts),
            })
            .collect();
        let sims = match sims {
            Ok(s) => s,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        used += 1;
        for (k, (sim, trace)) in sims.iter().zip(data).enumerate() {
            let n = trace.tau.len() as f64;
            mse_sum[k] += sim
                .values
                .iter()
                .zip(&trace.values)
                .map(|(s, y)| (s - y) * (s - y))
                .sum::<f64>()
                / n;
            for (j, s) in sim.values.iter().enumerate() {
                let delta = s - mean[k][j];
                mean[k][j] += delta / used as f64;
                m2[k][j] += delta * (s - mean[k][j]);
            }
        }
    }
    if used == 0 {
        return Err(Error::Numerical("every posterior draw failed to simulate".into()));
    }

    let envelopes = data
        .iter()
        .enumerate()
        .map(|(k, t)| FitEnvelope {
            kind: t.kind,
            tau: t.tau.clone(),
            data: t.values.clone(),
            mean: mean[k].clone(),
            sd: m2[k]
                .iter()
                .map(|v| if used > 1 { (v / (used as f64 - 1.0)).sqrt() } else { 0.0 })
                .collect(),
        })
        .collect();
    Ok(MseReport {
        per_experiment: data
            .iter()
            .zip(&mse_sum)
            .map(|(t, s)| (t.kind, s / used as f64))
            .collect(),
        envelopes,
        skipped,
    })
}

/// Set-overlap mixing statistic `mu = |A u B| / (|A| + |B|)`; 1/2 for
/// identical exploration, 1 for disjoint chains. Undefined when both sets
/// are empty.
pub fn mixing_mu(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Option<f64> {
    if a.is_empty() && b.is_empty() {
        return None;
    }
    let union = a.union(b).count();
    Some(union as f64 / (a.len() + b.len()) as f64)
}

/// Pairwise mixing over chains; diagonal exactly 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingMatrix {
    pub n: usize,
    values: Vec<f64>,
}

impl MixingMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Mean off-diagonal overlap.
    pub fn mean_off_diagonal(&self) -> f64 {
        if self.n < 2 {
            return 0.5;
        }
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    sum += self.get(i, j);
                }
            }
        }
        sum / (self.n * (self.n - 1)) as f64
    }
}

/// Mixing matrix over the post-burn-in structure sets of the records.
pub fn mixing_matrix(records: &[ChainRecord]) -> Result<MixingMatrix> {
    let sets: Vec<BTreeSet<String>> = records.iter().map(|r| r.signature_set()).collect();
    let n = sets.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = mixing_mu(&sets[i], &sets[j]).ok_or_else(|| {
                Error::InvalidInput(format!("chains {i} and {j} recorded no samples"))
            })?;
        }
    }
    Ok(MixingMatrix { n, values })
}
