//! Synthetic simplex-mixture generation: i.i.d. draws from a mixture of
//! Dirichlet components parameterized by (center, precision), so every
//! generated point is strictly interior almost surely. Ships the two
//! built-in presets: 4 and 6 well-separated centers in P^3.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{Dataset, ProbVector};

/// A Dirichlet mixture over the simplex. Component c has mean `centers[c]`
/// and precision `concentrations[c]` (Dirichlet parameters
/// `concentrations[c] * centers[c]`), and is drawn with probability
/// `weights[c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub centers: Vec<ProbVector>,
    pub weights: Vec<f64>,
    pub concentrations: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::InvalidSpec {
                reason: "no mixture components".to_string(),
            });
        }
        if self.weights.len() != self.centers.len()
            || self.concentrations.len() != self.centers.len()
        {
            return Err(Error::InvalidSpec {
                reason: "weights, concentrations and centers must have equal length".to_string(),
            });
        }
        let dim = self.centers[0].dim();
        for c in &self.centers {
            if c.dim() != dim {
                return Err(Error::InvalidSpec {
                    reason: "centers must share a dimension".to_string(),
                });
            }
            if c.is_absolute_margin() {
                return Err(Error::InvalidSpec {
                    reason: "centers must be strictly interior".to_string(),
                });
            }
        }
        if self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidSpec {
                reason: "weights must be nonnegative".to_string(),
            });
        }
        let wsum: f64 = self.weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec {
                reason: format!("weights sum to {wsum}, expected 1"),
            });
        }
        if self.concentrations.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidSpec {
                reason: "concentrations must be positive".to_string(),
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec {
                reason: "n must be at least 1".to_string(),
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// The generating centers as a codebook, for reference-risk evaluation.
    pub fn center_codebook(&self) -> crate::cm::Codebook {
        crate::cm::Codebook::new(self.centers.clone()).expect("validated centers")
    }
}

/// Draws `spec.n` i.i.d. points. Deterministic per seed; points are produced
/// sequentially from one stream, so a larger `n` with the same seed extends
/// the smaller sample.
pub fn generate(spec: &MixtureSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gammas: Vec<Vec<Gamma<f64>>> = spec
        .centers
        .iter()
        .zip(&spec.concentrations)
        .map(|(center, &conc)| {
            center
                .components()
                .iter()
                .map(|&q| Gamma::new(conc * q, 1.0).expect("positive shape"))
                .collect()
        })
        .collect();

    let mut points = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut component = spec.k() - 1;
        for (c, &w) in spec.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                component = c;
                break;
            }
        }
        // Standard construction: independent Gamma draws normalized by
        // their sum. Resample on (fp-rare) margin hits to keep every point
        // strictly interior.
        let point = loop {
            let draws: Vec<f64> = gammas[component].iter().map(|g| g.sample(&mut rng)).collect();
            let sum: f64 = draws.iter().sum();
            if sum > 0.0 && draws.iter().all(|&d| d > 0.0) {
                break ProbVector::new(draws.iter().map(|&d| d / sum).collect())?;
            }
        };
        points.push(point);
        labels.push(component);
    }
    Ok((Dataset::new(points)?, labels))
}

/// Named built-in presets: 4 and 6 cluster
/// centers in P^3 with equal weights. `n` defaults to 2000 and can be
/// overridden by the caller.
pub fn preset(name: &str) -> Option<MixtureSpec> {
    let centers: Vec<Vec<f64>> = match name {
        "fig1-4c" => vec![
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ],
        "fig1-6c" => vec![
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
            vec![0.45, 0.45, 0.1],
            vec![0.45, 0.1, 0.45],
            vec![0.1, 0.45, 0.45],
        ],
        _ => return None,
    };
    let k = centers.len();
    Some(MixtureSpec {
        centers: centers
            .into_iter()
            .map(|c| ProbVector::new(c).expect("preset centers are simplex points"))
            .collect(),
        weights: vec![1.0 / k as f64; k],
        concentrations: vec![60.0; k],
        n: 2000,
        seed: 0,
    })
}

pub fn preset_names() -> &'static [&'static str] {
    &["fig1-4c", "fig1-6c"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{run_cm_restarts, CmConfig};
    use crate::divergence::kls;

    fn pv(components: &[f64]) -> ProbVector {
        ProbVector::new(components.to_vec()).unwrap()
    }

    fn single_center_spec(n: usize, concentration: f64, seed: u64) -> MixtureSpec {
        MixtureSpec {
            centers: vec![pv(&[0.5, 0.3, 0.2])],
            weights: vec![1.0],
            concentrations: vec![concentration],
            n,
            seed,
        }
    }

    #[test]
    fn fixed_seed_reproduces_the_dataset() {
        let spec = preset("fig1-4c").unwrap();
        let (a, la) = generate(&spec).unwrap();
        let (b, lb) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn larger_n_extends_the_same_stream() {
        let mut small = single_center_spec(100, 60.0, 3);
        let large = single_center_spec(400, 60.0, 3);
        small.n = 100;
        let (ds, _) = generate(&small).unwrap();
        let (dl, _) = generate(&large).unwrap();
        assert_eq!(ds.points(), &dl.points()[..100]);
    }

    #[test]
    fn huge_concentration_pins_points_to_the_center() {
        let spec = single_center_spec(200, 1e6, 9);
        let (data, _) = generate(&spec).unwrap();
        for p in data.points() {
            for (a, b) in p.components().iter().zip(spec.centers[0].components()) {
                assert!((a - b).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn empirical_mean_matches_the_dirichlet_mean_identity() {
        let spec = single_center_spec(10_000, 60.0, 17);
        let (data, _) = generate(&spec).unwrap();
        let mean = data.global_center();
        // Component variance q(1-q)/(s+1); allow 3 standard errors.
        for (got, &q) in mean.components().iter().zip(spec.centers[0].components()) {
            let se = (q * (1.0 - q) / 61.0 / 10_000.0).sqrt();
            assert!((got - q).abs() < 3.0 * se, "got {got}, want {q} +- {se}");
        }
    }

    #[test]
    fn generated_points_are_strictly_interior() {
        let spec = MixtureSpec {
            n: 100_000,
            ..preset("fig1-6c").unwrap()
        };
        let (data, _) = generate(&spec).unwrap();
        assert!(data.points().iter().all(|p| !p.is_absolute_margin()));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = single_center_spec(10, 60.0, 0);
        spec.weights = vec![0.5];
        assert!(matches!(
            generate(&spec).unwrap_err(),
            Error::InvalidSpec { .. }
        ));
        let mut spec = single_center_spec(10, 0.0, 0);
        spec.concentrations = vec![0.0];
        assert!(generate(&spec).is_err());
        let mut spec = single_center_spec(10, 60.0, 0);
        spec.centers = vec![pv(&[1.0, 0.0, 0.0])];
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn preset_centers_are_well_separated() {
        for name in preset_names() {
            let spec = preset(name).unwrap();
            for i in 0..spec.k() {
                for c in (i + 1)..spec.k() {
                    let s = kls(&spec.centers[i], &spec.centers[c]).unwrap();
                    assert!(s >= 0.5, "{name}: pair ({i}, {c}) has KLS {s}");
                }
            }
        }
    }

    #[test]
    fn cm_recovers_the_generating_partition() {
        // Well-separated centers, high concentration: >= 95% label agreement
        // under the best cluster-to-component matching.
        let mut spec = preset("fig1-4c").unwrap();
        spec.concentrations = vec![100.0; spec.k()];
        spec.n = 400;
        for seed in 0..10u64 {
            spec.seed = seed;
            let (data, labels) = generate(&spec).unwrap();
            let run = run_cm_restarts(
                &data,
                &CmConfig::new(spec.k()).with_seed(seed),
                5,
            )
            .unwrap();
            let agreement = best_matching_agreement(run.assignment.codes(), &labels, spec.k());
            assert!(agreement >= 0.95, "seed {seed}: agreement {agreement}");
        }
    }

    fn best_matching_agreement(codes: &[usize], labels: &[usize], k: usize) -> f64 {
        let mut counts = vec![vec![0usize; k]; k];
        for (&c, &l) in codes.iter().zip(labels) {
            counts[c][l] += 1;
        }
        let perm: Vec<usize> = (0..k).collect();
        let mut best = 0usize;
        permute(&perm, 0, &mut perm.clone(), &mut |p| {
            let score: usize = (0..k).map(|c| counts[c][p[c]]).sum();
            if score > best {
                best = score;
            }
        });
        best as f64 / codes.len() as f64
    }

    fn permute(base: &[usize], i: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if i == base.len() {
            visit(current);
            return;
        }
        for j in i..base.len() {
            current.swap(i, j);
            permute(base, i + 1, current, visit);
            current.swap(i, j);
        }
    }
}
