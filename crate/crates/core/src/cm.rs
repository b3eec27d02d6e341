//! The Clustering-Minimisation algorithm: alternating nearest-prototype
//! assignment and exact center recomputation, with farthest-first or
//! random-sample initialization, restarts and convergence detection.
//!
//! Each iteration first recomputes codes against the current prototypes
//! (Clustering Step), then replaces every prototype by the exact mean of its
//! cluster (Minimisation Step). Because the means are exact, the empirical
//! risk trace is non-increasing and the run converges in finitely many steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::kl_theta_raw;
use crate::error::{Error, Result};
use crate::simplex::{Assignment, Dataset, ProbVector};

/// A set of k prototype vectors sharing a common dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    prototypes: Vec<ProbVector>,
}

impl Codebook {
    pub fn new(prototypes: Vec<ProbVector>) -> Result<Self> {
        let first = prototypes.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        for p in &prototypes {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
        }
        Ok(Self { prototypes })
    }

    pub fn k(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes[0].dim()
    }

    pub fn prototypes(&self) -> &[ProbVector] {
        &self.prototypes
    }

    pub fn prototype(&self, c: usize) -> &ProbVector {
        &self.prototypes[c]
    }
}

/// How the initial prototypes are picked from the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitPolicy {
    /// First prototype is a uniformly random data point; each next prototype
    /// is the data point maximizing divergence to its nearest chosen one.
    FarthestFirst,
    /// k distinct data points drawn uniformly at random.
    RandomSample,
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::FarthestFirst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// Per-iteration empirical risk trace of a CM run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmTrace {
    pub risks: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmConfig {
    pub k: usize,
    pub init: InitPolicy,
    pub seed: u64,
    pub max_iterations: usize,
    pub theta: f64,
}

impl CmConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            init: InitPolicy::FarthestFirst,
            seed: 0,
            max_iterations: 10_000,
            theta: 1.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_init(mut self, init: InitPolicy) -> Self {
        self.init = init;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }
}

/// The result of a CM run: final codebook, assignment, trace, and the
/// distortion of the returned pair (equal to the last trace entry).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmRun {
    pub codebook: Codebook,
    pub assignment: Assignment,
    pub trace: CmTrace,
    pub risk: f64,
    pub seed: u64,
}

fn loss(v: &ProbVector, u: &ProbVector, theta: f64) -> f64 {
    kl_theta_raw(v.components(), u.components(), theta)
}

/// Nearest-prototype assignment (Clustering Step). Ties break toward the
/// lowest prototype index; infinity compares larger than any finite loss.
pub fn assign(data: &Dataset, codebook: &Codebook, theta: f64) -> Result<Assignment> {
    if data.dim() != codebook.dim() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: codebook.dim(),
        });
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::ThetaOutOfRange { theta });
    }
    let codes = data
        .points()
        .iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_loss = f64::INFINITY;
            for (c, q) in codebook.prototypes().iter().enumerate() {
                let l = loss(p, q, theta);
                if l < best_loss {
                    best_loss = l;
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(Assignment::from_codes(codes, codebook.k()))
}

/// Exact center recomputation (Minimisation Step): prototype c becomes the
/// componentwise mean of its cluster. A cluster emptied during assignment
/// gets its prototype reset to the not-yet-claimed data point with the
/// largest current loss, which keeps k constant and cannot increase risk.
pub fn update_centers(data: &Dataset, assignment: &Assignment, theta: f64) -> Codebook {
    let k = assignment.k();
    let m = data.dim();
    let n = data.n();
    let mut sums = vec![vec![0.0f64; m]; k];
    for (t, &c) in assignment.codes().iter().enumerate() {
        for (s, &v) in sums[c].iter_mut().zip(data.point(t).components()) {
            *s += v;
        }
    }
    let mut prototypes: Vec<Option<ProbVector>> = sums
        .iter()
        .zip(assignment.cluster_sizes())
        .map(|(sum, &size)| {
            if size == 0 {
                None
            } else {
                let total: f64 = sum.iter().sum();
                Some(
                    ProbVector::new(sum.iter().map(|&s| s / total).collect())
                        .expect("cluster mean is a simplex point"),
                )
            }
        })
        .collect();

    let empties: Vec<usize> = (0..k).filter(|&c| prototypes[c].is_none()).collect();
    if !empties.is_empty() {
        // Loss of each point to its own (nonempty) cluster's new center.
        let mut losses: Vec<(f64, usize)> = (0..n)
            .map(|t| {
                let c = assignment.codes()[t];
                let center = prototypes[c].as_ref().expect("assigned cluster is nonempty");
                (loss(data.point(t), center, theta), t)
            })
            .collect();
        // Worst points first; ties toward the lowest index for reproducibility.
        losses.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (c, &(_, t)) in empties.iter().zip(losses.iter()) {
            prototypes[*c] = Some(data.point(t).clone());
        }
    }

    Codebook::new(prototypes.into_iter().map(Option::unwrap).collect())
        .expect("prototypes share the data dimension")
}

/// Distortion of a fixed (codebook, assignment) pair:
/// (1/n) sum_t loss(p_t, q(code_t)).
pub fn fixed_distortion(
    data: &Dataset,
    codebook: &Codebook,
    assignment: &Assignment,
    theta: f64,
) -> f64 {
    data.points()
        .iter()
        .zip(assignment.codes())
        .map(|(p, &c)| loss(p, codebook.prototype(c), theta))
        .sum::<f64>()
        / data.n() as f64
}

/// Picks the initial prototypes from the data.
pub fn init_codebook(
    data: &Dataset,
    k: usize,
    policy: InitPolicy,
    seed: u64,
    theta: f64,
) -> Codebook {
    let n = data.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<usize> = match policy {
        InitPolicy::RandomSample => rand::seq::index::sample(&mut rng, n, k).into_vec(),
        InitPolicy::FarthestFirst => {
            let mut chosen = vec![rng.random_range(0..n)];
            let mut nearest: Vec<f64> = data
                .points()
                .iter()
                .map(|p| loss(p, data.point(chosen[0]), theta))
                .collect();
            while chosen.len() < k {
                // Farthest point from the chosen set; ties toward the lowest
                // index. Falls back to any unchosen index when all distances
                // are zero (duplicate-heavy data).
                let mut best: Option<usize> = None;
                for t in 0..n {
                    if chosen.contains(&t) {
                        continue;
                    }
                    match best {
                        None => best = Some(t),
                        Some(b) if nearest[t] > nearest[b] => best = Some(t),
                        _ => {}
                    }
                }
                let next = best.expect("k <= n leaves an unchosen point");
                for (t, d) in nearest.iter_mut().enumerate() {
                    let l = loss(data.point(t), data.point(next), theta);
                    if l < *d {
                        *d = l;
                    }
                }
                chosen.push(next);
            }
            chosen
        }
    };
    Codebook::new(indices.into_iter().map(|t| data.point(t).clone()).collect())
        .expect("data points form a valid codebook")
}

/// Runs the CM algorithm once from a seeded initialization.
///
/// Terminates when an assignment pass changes no code, or at
/// `max_iterations`. The returned risk is the distortion of the returned
/// (codebook, assignment) pair and equals the last trace entry.
pub fn run_cm(data: &Dataset, config: &CmConfig) -> Result<CmRun> {
    let n = data.n();
    if config.k == 0 || config.k > n {
        return Err(Error::KTooLarge { k: config.k, n });
    }
    if !(0.0..=1.0).contains(&config.theta) {
        return Err(Error::ThetaOutOfRange {
            theta: config.theta,
        });
    }
    let max_iterations = config.max_iterations.max(1);
    let theta = config.theta;

    let codebook = init_codebook(data, config.k, config.init, config.seed, theta);
    let mut assignment = assign(data, &codebook, theta)?;
    let mut codebook = codebook;
    let mut risks = Vec::new();
    let mut termination = Termination::MaxIterations;

    for iteration in 1..=max_iterations {
        codebook = update_centers(data, &assignment, theta);
        risks.push(fixed_distortion(data, &codebook, &assignment, theta));
        let next = assign(data, &codebook, theta)?;
        if next.codes() == assignment.codes() {
            termination = Termination::Converged;
            break;
        }
        if iteration == max_iterations {
            // Keep the (assignment, centers) pair consistent on early exit.
            break;
        }
        assignment = next;
    }

    let risk = *risks.last().expect("at least one iteration ran");
    let trace = CmTrace {
        iterations: risks.len(),
        risks,
        termination,
    };
    Ok(CmRun {
        codebook,
        assignment,
        trace,
        risk,
        seed: config.seed,
    })
}

/// Best of `restarts` seeded CM runs by final empirical risk; ties go to the
/// lowest restart index. Deterministic given the base seed, regardless of
/// how the restarts are scheduled.
pub fn run_cm_restarts(data: &Dataset, config: &CmConfig, restarts: usize) -> Result<CmRun> {
    let restarts = restarts.max(1);
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..restarts).map(|_| seeder.random()).collect();
    let runs: Vec<Result<CmRun>> = seeds
        .into_par_iter()
        .map(|seed| {
            let cfg = CmConfig {
                seed,
                ..config.clone()
            };
            run_cm(data, &cfg)
        })
        .collect();
    let mut best: Option<CmRun> = None;
    for run in runs {
        let run = run?;
        match &best {
            None => best = Some(run),
            Some(b) if run.risk < b.risk => best = Some(run),
            _ => {}
        }
    }
    Ok(best.expect("restarts >= 1"))
}
