//! Empirical risk accounting: the entropy-decomposition identities of the
//! risk, and cluster-merge operations with their upper bounds.
//!
//! With exact-mean centers the empirical risk decomposes as
//! `R_emp = -H(X) + sum_c p_c H(q_c)`, and the cost of merging a set of
//! clusters is bounded above by the probability-weighted divergences between
//! their centers. Merging compares fixed-assignment risks; no fresh
//! assignment pass is run, a follow-up CM run is the caller's choice.

use serde::{Deserialize, Serialize};

use crate::cm::Codebook;
use crate::divergence::{kl_raw, kl_theta_raw};
use crate::error::{Error, Result};
use crate::simplex::{Assignment, Dataset, ProbVector};

/// Max per-component deviation allowed between a prototype and the exact
/// cluster mean before the clustering is considered stale.
const STALE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRisk {
    /// Empirical cluster probability p_c = n_c / n.
    pub probability: f64,
    /// Entropy of the cluster center, H(q_c).
    pub center_entropy: f64,
    /// This cluster's share of the empirical risk, (1/n) sum_{t in c} KL(p_t, q_c).
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub empirical_risk: f64,
    pub per_cluster: Vec<ClusterRisk>,
    /// Mean observation entropy H(X).
    pub dataset_entropy: f64,
}

impl RiskReport {
    /// Residual of the identity `R_emp = -H(X) + sum_c p_c H(q_c)`.
    pub fn decomposition_gap(&self) -> f64 {
        let weighted: f64 = self
            .per_cluster
            .iter()
            .map(|c| c.probability * c.center_entropy)
            .sum();
        self.empirical_risk - (-self.dataset_entropy + weighted)
    }
}

/// Empirical risk of a codebook: `(1/n) sum_t min_c KL_theta(p_t, q_c)`.
/// May be +infinity when a prototype has zeros conflicting with the data
/// support; infinity is reported, never thrown.
pub fn empirical_risk(data: &Dataset, codebook: &Codebook, theta: f64) -> Result<f64> {
    if data.dim() != codebook.dim() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: codebook.dim(),
        });
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::ThetaOutOfRange { theta });
    }
    let total: f64 = data
        .points()
        .iter()
        .map(|p| {
            codebook
                .prototypes()
                .iter()
                .map(|q| kl_theta_raw(p.components(), q.components(), theta))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / data.n() as f64)
}

/// Entropy decomposition of the risk of a converged clustering.
///
/// Requires the codebook to hold the exact cluster means; otherwise
/// `StaleCenters` is returned. Empty clusters contribute nothing.
pub fn risk_decomposition(
    data: &Dataset,
    assignment: &Assignment,
    codebook: &Codebook,
) -> Result<RiskReport> {
    if assignment.k() != codebook.k() {
        return Err(Error::DimensionMismatch {
            left: assignment.k(),
            right: codebook.k(),
        });
    }
    let mut max_delta = 0.0f64;
    for c in 0..codebook.k() {
        if assignment.cluster_sizes()[c] == 0 {
            continue;
        }
        let members = assignment.members(c);
        let mean = ProbVector::mean(members.iter().map(|&t| data.point(t)))?;
        for (a, b) in mean.components().iter().zip(codebook.prototype(c).components()) {
            max_delta = max_delta.max((a - b).abs());
        }
    }
    if max_delta > STALE_TOLERANCE {
        return Err(Error::StaleCenters { max_delta });
    }

    let n = data.n() as f64;
    let per_cluster = (0..codebook.k())
        .map(|c| {
            let size = assignment.cluster_sizes()[c];
            if size == 0 {
                return ClusterRisk {
                    probability: 0.0,
                    center_entropy: 0.0,
                    contribution: 0.0,
                };
            }
            let center = codebook.prototype(c);
            let contribution = assignment
                .members(c)
                .iter()
                .map(|&t| kl_raw(data.point(t).components(), center.components()))
                .sum::<f64>()
                / n;
            ClusterRisk {
                probability: size as f64 / n,
                center_entropy: center.entropy(),
                contribution,
            }
        })
        .collect::<Vec<_>>();

    Ok(RiskReport {
        empirical_risk: per_cluster.iter().map(|c| c.contribution).sum(),
        per_cluster,
        dataset_entropy: data.mean_entropy(),
    })
}

/// A planned merge of a set of clusters: the probability-weighted merged
/// center and the two upper bounds on the risk increase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergePlan {
    pub merge_set: Vec<usize>,
    pub merged_center: ProbVector,
    /// `sum_{c in S} p_c KL(q_c, q_hat)` -- the tighter, centroid-based bound.
    pub centroid_bound: f64,
    /// Pairwise double-sum bound; reduces to the KLS form for two clusters.
    pub pairwise_bound: f64,
}

fn validate_merge_set(assignment: &Assignment, codebook: &Codebook, set: &[usize]) -> Result<Vec<usize>> {
    if set.len() < 2 {
        return Err(Error::InvalidMergeSet {
            reason: format!("need at least 2 clusters, got {}", set.len()),
        });
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidMergeSet {
            reason: "duplicate cluster index".to_string(),
        });
    }
    for &c in &sorted {
        if c >= codebook.k() {
            return Err(Error::InvalidMergeSet {
                reason: format!("cluster index {c} out of range for k = {}", codebook.k()),
            });
        }
        if assignment.cluster_sizes()[c] == 0 {
            return Err(Error::InvalidMergeSet {
                reason: format!("cluster {c} is empty"),
            });
        }
    }
    Ok(sorted)
}

/// Plans a merge: computes the merged center q_hat and both bounds.
pub fn plan_merge(assignment: &Assignment, codebook: &Codebook, set: &[usize]) -> Result<MergePlan> {
    let set = validate_merge_set(assignment, codebook, set)?;
    let total_p: f64 = set.iter().map(|&c| assignment.fraction(c)).sum();
    let m = codebook.dim();

    let mut merged = vec![0.0f64; m];
    for &c in &set {
        let w = assignment.fraction(c) / total_p;
        for (s, &q) in merged.iter_mut().zip(codebook.prototype(c).components()) {
            *s += w * q;
        }
    }
    let merged_center = ProbVector::new(merged)?;

    let centroid_bound: f64 = set
        .iter()
        .map(|&c| {
            assignment.fraction(c)
                * kl_raw(
                    codebook.prototype(c).components(),
                    merged_center.components(),
                )
        })
        .sum();

    let mut pairwise = 0.0;
    for &i in &set {
        for &c in &set {
            if i != c {
                pairwise += assignment.fraction(i)
                    * assignment.fraction(c)
                    * kl_raw(codebook.prototype(i).components(), codebook.prototype(c).components());
            }
        }
    }
    let pairwise_bound = pairwise / total_p;

    Ok(MergePlan {
        merge_set: set,
        merged_center,
        centroid_bound,
        pairwise_bound,
    })
}

/// Upper bound on the risk increase of merging the clusters in `set`:
/// the KLS form for two clusters, the pairwise double-sum form otherwise.
pub fn merge_bound(assignment: &Assignment, codebook: &Codebook, set: &[usize]) -> Result<f64> {
    Ok(plan_merge(assignment, codebook, set)?.pairwise_bound)
}

/// Merges the clusters in `set` into one (the lowest index in the set),
/// renumbering the remaining clusters compactly. Centers are recomputed as
/// exact means; the merged cluster's center equals q_hat. Clusters that were
/// already empty keep their old prototype.
pub fn apply_merge(
    data: &Dataset,
    assignment: &Assignment,
    codebook: &Codebook,
    set: &[usize],
) -> Result<(Assignment, Codebook)> {
    let set = validate_merge_set(assignment, codebook, set)?;
    let k = codebook.k();
    let target = set[0];
    let removed: Vec<usize> = set[1..].to_vec();

    // Old index -> new index, collapsing the merged set onto the target.
    let mut mapping = vec![0usize; k];
    let mut next = 0usize;
    for c in 0..k {
        if removed.contains(&c) {
            continue;
        }
        mapping[c] = next;
        next += 1;
    }
    for &c in &removed {
        mapping[c] = mapping[target];
    }
    let new_k = next;

    let codes: Vec<usize> = assignment.codes().iter().map(|&c| mapping[c]).collect();
    let new_assignment = Assignment::from_codes(codes, new_k);

    let mut prototypes = Vec::with_capacity(new_k);
    for old in 0..k {
        if removed.contains(&old) {
            continue;
        }
        let new_c = mapping[old];
        if new_assignment.cluster_sizes()[new_c] == 0 {
            prototypes.push(codebook.prototype(old).clone());
        } else {
            prototypes.push(ProbVector::mean(
                new_assignment.members(new_c).iter().map(|&t| data.point(t)),
            )?);
        }
    }

    Ok((new_assignment, Codebook::new(prototypes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{run_cm, CmConfig};
    use crate::divergence::{kl, kls};
    use crate::simplex::ProbVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pv(components: &[f64]) -> ProbVector {
        ProbVector::new(components.to_vec()).unwrap()
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dataset {
        let points = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 1e-3).collect();
                let sum: f64 = raw.iter().sum();
                ProbVector::new(raw.iter().map(|&x| x / sum).collect()).unwrap()
            })
            .collect();
        Dataset::new(points).unwrap()
    }

    #[test]
    fn risk_is_zero_when_every_point_is_its_own_prototype() {
        let points = vec![pv(&[0.2, 0.8]), pv(&[0.6, 0.4]), pv(&[0.9, 0.1])];
        let data = Dataset::new(points.clone()).unwrap();
        let codebook = Codebook::new(points).unwrap();
        assert_eq!(empirical_risk(&data, &codebook, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_cluster_risk_matches_two_term_oracle() {
        let data = Dataset::new(vec![pv(&[1.0, 0.0]), pv(&[0.0, 1.0])]).unwrap();
        let mean = data.global_center();
        let codebook = Codebook::new(vec![mean.clone()]).unwrap();
        let risk = empirical_risk(&data, &codebook, 1.0).unwrap();
        let oracle = 0.5
            * (kl(data.point(0), &mean).unwrap() + kl(data.point(1), &mean).unwrap());
        assert!((risk - oracle).abs() < 1e-15);
        assert!((risk - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn risk_matches_brute_force_argmin_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = random_dataset(&mut rng, 20, 4);
        let codebook = Codebook::new(vec![
            data.point(0).clone(),
            data.point(7).clone(),
            data.point(13).clone(),
        ])
        .unwrap();
        // Exhaustive per-point min-divergence summation.
        let oracle: f64 = data
            .points()
            .iter()
            .map(|p| {
                codebook
                    .prototypes()
                    .iter()
                    .map(|q| kl(p, q).unwrap())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / data.n() as f64;
        let got = empirical_risk(&data, &codebook, 1.0).unwrap();
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn risk_reports_infinity_on_conflicting_support() {
        let data = Dataset::new(vec![pv(&[0.5, 0.5]), pv(&[0.5, 0.5])]).unwrap();
        let codebook = Codebook::new(vec![pv(&[1.0, 0.0])]).unwrap();
        assert_eq!(
            empirical_risk(&data, &codebook, 1.0).unwrap(),
            f64::INFINITY
        );
    }

    fn converged(seed: u64, n: usize, m: usize, k: usize) -> (Dataset, Assignment, Codebook) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, n, m);
        let run = run_cm(&data, &CmConfig::new(k).with_seed(seed)).unwrap();
        (data, run.assignment, run.codebook)
    }

    #[test]
    fn decomposition_identity_holds_on_converged_clustering() {
        let (data, assignment, codebook) = converged(42, 100, 3, 4);
        let report = risk_decomposition(&data, &assignment, &codebook).unwrap();
        assert!(report.decomposition_gap().abs() <= 1e-9);
        // Both identities, each side by its own summation path.
        let r1 = empirical_risk(&data, &Codebook::new(vec![data.global_center()]).unwrap(), 1.0)
            .unwrap();
        let rk = empirical_risk(&data, &codebook, 1.0).unwrap();
        let qbar = data.global_center();
        let between: f64 = (0..codebook.k())
            .map(|c| assignment.fraction(c) * kl(codebook.prototype(c), &qbar).unwrap())
            .sum();
        assert!((r1 - rk - between).abs() <= 1e-9);
    }

    #[test]
    fn decomposition_difference_is_zero_for_single_cluster() {
        let (data, assignment, codebook) = converged(7, 50, 3, 1);
        let r1 = empirical_risk(&data, &codebook, 1.0).unwrap();
        let report = risk_decomposition(&data, &assignment, &codebook).unwrap();
        assert!((report.empirical_risk - r1).abs() < 1e-12);
        let qbar = data.global_center();
        assert!(kl(codebook.prototype(0), &qbar).unwrap() < 1e-12);
    }

    #[test]
    fn stale_centers_are_rejected() {
        let (data, assignment, _) = converged(9, 40, 3, 3);
        let wrong = Codebook::new(vec![
            pv(&[0.8, 0.1, 0.1]),
            pv(&[0.1, 0.8, 0.1]),
            pv(&[0.1, 0.1, 0.8]),
        ])
        .unwrap();
        assert!(matches!(
            risk_decomposition(&data, &assignment, &wrong).unwrap_err(),
            Error::StaleCenters { .. }
        ));
    }

    #[test]
    fn merge_bound_is_zero_for_equal_centers() {
        let assignment = Assignment::from_codes(vec![0, 0, 1, 1], 2);
        let codebook = Codebook::new(vec![pv(&[0.3, 0.7]), pv(&[0.3, 0.7])]).unwrap();
        assert_eq!(merge_bound(&assignment, &codebook, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn two_cluster_bound_matches_direct_formula() {
        // p_i = p_c = 0.5 with KLS known: bound = p_i * p_c * KLS / (p_i + p_c).
        let assignment = Assignment::from_codes(vec![0, 0, 1, 1], 2);
        let qi = pv(&[0.7, 0.3]);
        let qc = pv(&[0.4, 0.6]);
        let codebook = Codebook::new(vec![qi.clone(), qc.clone()]).unwrap();
        let s = kls(&qi, &qc).unwrap();
        let expected = 0.25 * s / 1.0;
        let got = merge_bound(&assignment, &codebook, &[0, 1]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        // Synthetic check of the arithmetic itself: KLS = 0.2 gives 0.05.
        assert!((0.25f64 * 0.2 / 1.0 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn centroid_bound_never_exceeds_pairwise_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..50 {
            let (_, assignment, codebook) = converged(100 + trial, 80, 4, 5);
            let plan = match plan_merge(&assignment, &codebook, &[0, 1, 2]) {
                Ok(p) => p,
                Err(Error::InvalidMergeSet { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(plan.centroid_bound <= plan.pairwise_bound + 1e-12);
            let _ = rng.random::<u64>();
        }
    }

    #[test]
    fn merging_everything_matches_the_decomposition_identity() {
        let (data, assignment, codebook) = converged(55, 120, 3, 4);
        let k = codebook.k();
        let all: Vec<usize> = (0..k).collect();
        let before = fixed_risk(&data, &assignment, &codebook);
        let (merged_assignment, merged_codebook) =
            apply_merge(&data, &assignment, &codebook, &all).unwrap();
        assert_eq!(merged_codebook.k(), 1);
        let after = fixed_risk(&data, &merged_assignment, &merged_codebook);
        let qbar = data.global_center();
        let exact: f64 = (0..k)
            .map(|c| assignment.fraction(c) * kl(codebook.prototype(c), &qbar).unwrap())
            .sum();
        assert!((after - before - exact).abs() <= 1e-9);
    }

    fn fixed_risk(data: &Dataset, assignment: &Assignment, codebook: &Codebook) -> f64 {
        crate::cm::fixed_distortion(data, codebook, assignment, 1.0)
    }

    #[test]
    fn merge_of_identical_centers_costs_nothing() {
        let data = Dataset::new(vec![
            pv(&[0.3, 0.7]),
            pv(&[0.3, 0.7]),
            pv(&[0.9, 0.1]),
        ])
        .unwrap();
        let assignment = Assignment::from_codes(vec![0, 1, 2], 3);
        let codebook = Codebook::new(vec![pv(&[0.3, 0.7]), pv(&[0.3, 0.7]), pv(&[0.9, 0.1])]).unwrap();
        let before = fixed_risk(&data, &assignment, &codebook);
        let (a2, c2) = apply_merge(&data, &assignment, &codebook, &[0, 1]).unwrap();
        let after = fixed_risk(&data, &a2, &c2);
        assert!((after - before).abs() < 1e-15);
    }

    #[test]
    fn actual_merge_cost_stays_below_the_bound() {
        for seed in 0..20u64 {
            let (data, assignment, codebook) = converged(200 + seed, 150, 3, 6);
            // Closest pair by KLS.
            let k = codebook.k();
            let mut best = (0usize, 1usize, f64::INFINITY);
            for i in 0..k {
                for c in (i + 1)..k {
                    if assignment.cluster_sizes()[i] == 0 || assignment.cluster_sizes()[c] == 0 {
                        continue;
                    }
                    let s = kls(codebook.prototype(i), codebook.prototype(c)).unwrap();
                    if s < best.2 {
                        best = (i, c, s);
                    }
                }
            }
            let set = [best.0, best.1];
            let bound = merge_bound(&assignment, &codebook, &set).unwrap();
            let before = fixed_risk(&data, &assignment, &codebook);
            let (a2, c2) = apply_merge(&data, &assignment, &codebook, &set).unwrap();
            let after = fixed_risk(&data, &a2, &c2);
            assert!(after - before <= bound + 1e-12, "seed {seed}");
            assert!(after + 1e-12 >= before, "merging must not decrease risk");
        }
    }

    #[test]
    fn invalid_merge_sets_are_rejected() {
        let assignment = Assignment::from_codes(vec![0, 1], 2);
        let codebook = Codebook::new(vec![pv(&[0.3, 0.7]), pv(&[0.6, 0.4])]).unwrap();
        assert!(matches!(
            merge_bound(&assignment, &codebook, &[0]).unwrap_err(),
            Error::InvalidMergeSet { .. }
        ));
        assert!(matches!(
            merge_bound(&assignment, &codebook, &[0, 0]).unwrap_err(),
            Error::InvalidMergeSet { .. }
        ));
        assert!(matches!(
            merge_bound(&assignment, &codebook, &[0, 5]).unwrap_err(),
            Error::InvalidMergeSet { .. }
        ));
    }
}
