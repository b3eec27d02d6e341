//! Numerical verification of the simplex geometry (worst-case-loss balls,
//! their remainders, and the distance bracket between them) plus an
//! empirical consistency harness for the minimal empirical risk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cm::{run_cm_restarts, CmConfig, InitPolicy};
use crate::datagen::{generate, MixtureSpec};
use crate::divergence::kl_raw;
use crate::error::{Error, Result};
use crate::risk::empirical_risk;
use crate::simplex::ProbVector;

/// The smallest radius with a nonempty ball: r0 = log m, at which the ball
/// holds exactly the uniform center.
pub fn min_ball_radius(m: usize) -> f64 {
    (m as f64).ln()
}

/// Worst-case loss of a prototype over all inputs:
/// `sup_x KL(x, q) = -log(min_l q_l)`, infinite on absolute margins.
pub fn sup_loss(q: &ProbVector) -> f64 {
    -q.min_component().ln()
}

/// Membership in the ball B(r): true iff every component is at least e^{-r},
/// equivalently `sup_loss(q) <= r`.
pub fn ball_contains(q: &ProbVector, r: f64) -> bool {
    q.min_component() >= (-r).exp()
}

/// The proven bracket on rho(B(r), T(Z)) for log m <= r < Z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoBracket {
    pub lower: f64,
    pub upper: f64,
}

pub fn rho_bracket(r: f64, z: f64, m: usize) -> Result<RhoBracket> {
    if r < min_ball_radius(m) - 1e-12 || z <= r {
        return Err(Error::InvalidRadii { r, z });
    }
    let er = (-r).exp();
    let ez = (-z).exp();
    Ok(RhoBracket {
        lower: -(m as f64).ln() + z * er,
        upper: er * (z - r) + (1.0 - er) * ((1.0 - er) / (1.0 - ez)).ln(),
    })
}

/// The extremal pair: first components e^{-r} and e^{-Z}, the rest spread
/// proportionally. Plugging it into KL gives exactly the upper-bound
/// expression of the bracket.
pub fn extremal_pair(r: f64, z: f64, m: usize) -> (ProbVector, ProbVector) {
    let er = (-r).exp();
    let ez = (-z).exp();
    let rest = m - 1;
    let mut v = vec![(1.0 - er) / rest as f64; m];
    v[0] = er;
    let mut u = vec![(1.0 - ez) / rest as f64; m];
    u[0] = ez;
    (
        ProbVector::new(v).expect("extremal ball member"),
        ProbVector::new(u).expect("extremal remainder member"),
    )
}

/// Result of one rho-bracket check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoCheck {
    pub r: f64,
    pub z: f64,
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
    /// Minimum sampled/refined divergence between a ball member and a
    /// remainder member.
    pub estimate: f64,
    pub pass: bool,
}

/// Estimates rho(B(r), T(Z)) by combining the extremal construction, random
/// sampling of members of both sets, and alternating refinement from the
/// best candidates, then checks the bracket: strict lower, upper within 1e-9.
pub fn rho_bounds_check(r: f64, z: f64, m: usize, samples: usize, seed: u64) -> Result<RhoCheck> {
    let bracket = rho_bracket(r, z, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let er = (-r).exp();
    let ez = (-z).exp();

    let (ev, eu) = extremal_pair(r, z, m);
    let mut best_pair = (ev.components().to_vec(), eu.components().to_vec());
    let mut estimate = kl_raw(&best_pair.0, &best_pair.1);

    for _ in 0..samples {
        let v = sample_ball_member(&mut rng, m, er);
        let u = sample_remainder_member(&mut rng, m, ez);
        let d = kl_raw(&v, &u);
        if d < estimate {
            estimate = d;
            best_pair = (v, u);
        }
    }

    // Alternating exact refinements: best remainder member for a fixed ball
    // member has closed form, best ball member for a fixed remainder member
    // is a water-filling projection.
    let (mut v, mut u) = best_pair;
    for _ in 0..32 {
        u = best_remainder_for(&v, ez);
        v = best_ball_for(&u, er);
    }
    estimate = estimate.min(kl_raw(&v, &u));

    let pass = bracket.lower < estimate && estimate <= bracket.upper + 1e-9;
    Ok(RhoCheck {
        r,
        z,
        m,
        lower: bracket.lower,
        upper: bracket.upper,
        estimate,
        pass,
    })
}

fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    // Exponential spacings give a uniform Dirichlet(1,...,1) draw.
    let raw: Vec<f64> = (0..m)
        .map(|_| -f64::ln(1.0 - rng.random::<f64>()))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|&x| x / sum).collect()
}

/// v = e^{-r} * 1 + (1 - m e^{-r}) * w keeps every component >= e^{-r}.
fn sample_ball_member(rng: &mut ChaCha8Rng, m: usize, er: f64) -> Vec<f64> {
    let slack = 1.0 - m as f64 * er;
    random_simplex(rng, m)
        .into_iter()
        .map(|w| er + slack * w)
        .collect()
}

/// A point with one component strictly below e^{-Z}.
fn sample_remainder_member(rng: &mut ChaCha8Rng, m: usize, ez: f64) -> Vec<f64> {
    let j = rng.random_range(0..m);
    let uj = ez * rng.random::<f64>().max(1e-12);
    let mut rest = random_simplex(rng, m - 1);
    for x in &mut rest {
        *x *= 1.0 - uj;
    }
    rest.insert(j, uj);
    rest
}

/// For fixed v strictly inside B(Z), the closest remainder member pins the
/// smallest component of v to e^{-Z} and rescales the rest proportionally.
fn best_remainder_for(v: &[f64], ez: f64) -> Vec<f64> {
    let j = v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty vector");
    let scale = (1.0 - ez) / (1.0 - v[j]);
    v.iter()
        .enumerate()
        .map(|(i, &x)| if i == j { ez } else { x * scale })
        .collect()
}

/// Water-filling projection: minimize KL(v, u) over {v : v_l >= e^{-r}}.
/// Inactive components are proportional to u, active ones sit at the floor.
fn best_ball_for(u: &[f64], er: f64) -> Vec<f64> {
    let m = u.len();
    let mut active = vec![false; m];
    for _ in 0..m {
        let active_mass = er * active.iter().filter(|&&a| a).count() as f64;
        let free_mass: f64 = u
            .iter()
            .zip(&active)
            .filter(|(_, &a)| !a)
            .map(|(&x, _)| x)
            .sum();
        let c = (1.0 - active_mass) / free_mass;
        let mut changed = false;
        for (i, &x) in u.iter().enumerate() {
            if !active[i] && c * x < er {
                active[i] = true;
                changed = true;
            }
        }
        if !changed {
            return u
                .iter()
                .zip(&active)
                .map(|(&x, &a)| if a { er } else { c * x })
                .collect();
        }
    }
    vec![er.max(1.0 / m as f64); m]
}

/// A full geometry report: membership, minimal-ball uniqueness and
/// remainder characterization checks plus the rho bracket over a grid of
/// radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub dims: Vec<usize>,
    /// ball_contains agrees with sup_loss thresholding.
    pub membership_agreement: bool,
    /// No non-uniform member of B(log m) found by random search.
    pub minimal_ball_uniqueness: bool,
    /// Every point outside B(r) has a component below e^{-r}.
    pub remainder_characterization: bool,
    pub rho_checks: Vec<RhoCheck>,
    pub pass: bool,
}

/// Runs the default geometry suite for the given dimensions.
pub fn run_theory_checks(dims: &[usize], samples: usize, seed: u64) -> TheoryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut membership_agreement = true;
    let mut minimal_ball_uniqueness = true;
    let mut remainder_characterization = true;

    for &m in dims {
        let r0 = min_ball_radius(m);
        for _ in 0..samples {
            let q = ProbVector::new(random_simplex(&mut rng, m)).expect("simplex draw");
            let r = rng.random::<f64>() * (r0 + 3.0);
            if ball_contains(&q, r) != (sup_loss(&q) <= r) {
                membership_agreement = false;
            }
            if sup_loss(&q) <= r0 + 1e-12 {
                let uniform = ProbVector::uniform(m).expect("m >= 2");
                let max_delta = q
                    .components()
                    .iter()
                    .zip(uniform.components())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if max_delta > 1e-9 {
                    minimal_ball_uniqueness = false;
                }
            }
            if sup_loss(&q) > r && q.min_component() >= (-r).exp() {
                remainder_characterization = false;
            }
        }
    }

    let mut rho_checks = Vec::new();
    for &m in dims {
        let r0 = min_ball_radius(m);
        for dr in [0.0, 0.5, 1.0] {
            let r = r0 + dr;
            for dz in [0.5, 1.0, 3.0] {
                let z = r + dz;
                let check = rho_bounds_check(r, z, m, samples, rng.random())
                    .expect("grid radii are valid");
                rho_checks.push(check);
            }
        }
    }

    let pass = membership_agreement
        && minimal_ball_uniqueness
        && remainder_characterization
        && rho_checks.iter().all(|c| c.pass);
    TheoryReport {
        dims: dims.to_vec(),
        membership_agreement,
        minimal_ball_uniqueness,
        remainder_characterization,
        rho_checks,
        pass,
    }
}

/// One row of the consistency experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub min_risk: f64,
    pub reference_risk: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCurve {
    pub rows: Vec<ConsistencyRow>,
    /// Held-out risk of the generating centers, a Monte-Carlo proxy for the
    /// actual risk, with its standard error across replicates.
    pub reference_risk: f64,
    pub reference_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub schedule: Vec<usize>,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub theta: f64,
    pub max_iterations: usize,
    pub init: InitPolicy,
    pub heldout_size: usize,
    pub heldout_replicates: usize,
}

impl ConsistencyConfig {
    pub fn new(schedule: Vec<usize>, k: usize) -> Self {
        Self {
            schedule,
            k,
            restarts: 10,
            seed: 0,
            theta: 1.0,
            max_iterations: 10_000,
            init: InitPolicy::FarthestFirst,
            heldout_size: 100_000,
            heldout_replicates: 10,
        }
    }
}

/// Runs the consistency experiment: for each n in the schedule, the minimal
/// empirical risk found by best-of-restarts CM on the first n points of one
/// seeded sample, against the held-out risk of the generating centers.
///
/// Using nested prefixes of a single sample makes successive risks share
/// their randomness, so the curve reflects the growth of n rather than
/// resampling noise.
pub fn run_consistency(spec: &MixtureSpec, config: &ConsistencyConfig) -> Result<ConsistencyCurve> {
    if config.schedule.is_empty() || config.schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpec {
            reason: "schedule must be nonempty and strictly increasing".to_string(),
        });
    }
    spec.validate()?;
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let data_seed: u64 = seeder.random();
    let max_n = *config.schedule.last().expect("nonempty schedule");

    let master = MixtureSpec {
        n: max_n,
        seed: data_seed,
        ..spec.clone()
    };
    let (full_data, _) = generate(&master)?;

    let centers = spec.center_codebook();
    let mut reference_risks = Vec::with_capacity(config.heldout_replicates);
    for _ in 0..config.heldout_replicates.max(1) {
        let heldout_spec = MixtureSpec {
            n: config.heldout_size,
            seed: seeder.random(),
            ..spec.clone()
        };
        let (heldout, _) = generate(&heldout_spec)?;
        reference_risks.push(empirical_risk(&heldout, &centers, config.theta)?);
    }
    let reps = reference_risks.len() as f64;
    let reference_risk = reference_risks.iter().sum::<f64>() / reps;
    let reference_se = if reference_risks.len() > 1 {
        let var = reference_risks
            .iter()
            .map(|r| (r - reference_risk).powi(2))
            .sum::<f64>()
            / (reps - 1.0);
        (var / reps).sqrt()
    } else {
        0.0
    };

    let mut rows = Vec::with_capacity(config.schedule.len());
    for &n in &config.schedule {
        let run_seed: u64 = seeder.random();
        let data = full_data.prefix(n)?;
        let cm_config = CmConfig {
            k: config.k,
            init: config.init,
            seed: run_seed,
            max_iterations: config.max_iterations,
            theta: config.theta,
        };
        let run = run_cm_restarts(&data, &cm_config, config.restarts)?;
        rows.push(ConsistencyRow {
            n,
            min_risk: run.risk,
            reference_risk,
            seed: config.seed,
        });
    }

    Ok(ConsistencyCurve {
        rows,
        reference_risk,
        reference_se,
    })
}
