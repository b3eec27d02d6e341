//! Regularized selection of the number of clusters via the linear cost term
//! `C(k) = alpha * beta * k / 2` and the significance/difference constraints
//! C1 (every cluster probability at least alpha) and C2 (every pair of
//! centers at least beta apart in symmetric divergence).
//!
//! Constraints are diagnostic by default: they are reported per k but the
//! chosen k minimizes the penalized risk alone. A strict mode excludes
//! violating k values from the selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cm::{run_cm_restarts, CmConfig, Codebook, InitPolicy};
use crate::divergence::kls;
use crate::error::{Error, Result};
use crate::simplex::{Assignment, Dataset};

/// Regularization parameters: minimum cluster probability alpha and minimum
/// symmetric divergence beta between cluster centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationParams {
    pub alpha: f64,
    pub beta: f64,
}

impl RegularizationParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams {
                reason: format!("alpha must be in (0, 1), got {alpha}"),
            });
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParams {
                reason: format!("beta must be positive, got {beta}"),
            });
        }
        Ok(Self { alpha, beta })
    }
}

/// The cost term `C(k) = alpha * beta * k / 2`.
pub fn cost(k: usize, params: RegularizationParams) -> f64 {
    params.alpha * params.beta * k as f64 / 2.0
}

/// Constraint diagnostics for one clustering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    /// Clusters with p_c < alpha.
    pub c1_violations: Vec<usize>,
    /// Unordered center pairs with KLS < beta.
    pub c2_violations: Vec<(usize, usize)>,
}

impl ConstraintCheck {
    pub fn c1_ok(&self) -> bool {
        self.c1_violations.is_empty()
    }

    pub fn c2_ok(&self) -> bool {
        self.c2_violations.is_empty()
    }
}

pub fn check_constraints(
    assignment: &Assignment,
    codebook: &Codebook,
    params: RegularizationParams,
) -> ConstraintCheck {
    let k = codebook.k();
    let c1_violations = (0..k)
        .filter(|&c| assignment.fraction(c) < params.alpha)
        .collect();
    let mut c2_violations = Vec::new();
    for i in 0..k {
        for c in (i + 1)..k {
            let s = kls(codebook.prototype(i), codebook.prototype(c))
                .expect("codebook prototypes share a dimension");
            if s < params.beta {
                c2_violations.push((i, c));
            }
        }
    }
    ConstraintCheck {
        c1_violations,
        c2_violations,
    }
}

/// One row of the selection sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub k: usize,
    pub risk: f64,
    pub cost: f64,
    pub regularized_risk: f64,
    pub c1: bool,
    pub c2: bool,
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub rows: Vec<SelectionRow>,
    pub chosen_k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub params: RegularizationParams,
    pub restarts: usize,
    pub seed: u64,
    pub theta: f64,
    pub max_iterations: usize,
    pub init: InitPolicy,
    /// Strict mode: exclude k values violating C1 or C2 from the selection.
    pub enforce_constraints: bool,
}

impl SelectionConfig {
    /// Defaults: alpha 0.1, beta 0.03, 10 restarts, k range 1..min(12, n).
    pub fn new(n: usize) -> Self {
        Self {
            k_min: 1,
            k_max: 12.min(n),
            params: RegularizationParams {
                alpha: 0.1,
                beta: 0.03,
            },
            restarts: 10,
            seed: 0,
            theta: 1.0,
            max_iterations: 10_000,
            init: InitPolicy::FarthestFirst,
            enforce_constraints: false,
        }
    }
}

/// Runs best-of-restarts CM for every k in the range and selects the k
/// minimizing the penalized risk (ties go to the smaller k).
pub fn select_k(data: &Dataset, config: &SelectionConfig) -> Result<SelectionReport> {
    if config.k_min == 0 || config.k_min > config.k_max || config.k_max > data.n() {
        return Err(Error::KTooLarge {
            k: config.k_max.max(config.k_min),
            n: data.n(),
        });
    }
    let ks: Vec<usize> = (config.k_min..=config.k_max).collect();
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = ks.iter().map(|_| seeder.random()).collect();

    let rows: Vec<Result<SelectionRow>> = ks
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(&k, &seed)| {
            let cm_config = CmConfig {
                k,
                init: config.init,
                seed,
                max_iterations: config.max_iterations,
                theta: config.theta,
            };
            let run = run_cm_restarts(data, &cm_config, config.restarts)?;
            let check = check_constraints(&run.assignment, &run.codebook, config.params);
            let cost = cost(k, config.params);
            Ok(SelectionRow {
                k,
                risk: run.risk,
                cost,
                regularized_risk: run.risk + cost,
                c1: check.c1_ok(),
                c2: check.c2_ok(),
                restarts: config.restarts,
            })
        })
        .collect();
    let rows: Vec<SelectionRow> = rows.into_iter().collect::<Result<_>>()?;

    let pick = |candidates: &mut dyn Iterator<Item = &SelectionRow>| -> Option<usize> {
        let mut best: Option<&SelectionRow> = None;
        for row in candidates {
            match best {
                None => best = Some(row),
                Some(b) if row.regularized_risk < b.regularized_risk => best = Some(row),
                _ => {}
            }
        }
        best.map(|row| row.k)
    };

    let chosen_k = if config.enforce_constraints {
        // When no k satisfies both constraints, fall back to the
        // unconstrained penalized minimum.
        pick(&mut rows.iter().filter(|r| r.c1 && r.c2))
            .or_else(|| pick(&mut rows.iter()))
            .expect("k range is nonempty")
    } else {
        pick(&mut rows.iter()).expect("k range is nonempty")
    };

    Ok(SelectionReport { rows, chosen_k })
}
