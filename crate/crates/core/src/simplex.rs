//! Probability-simplex data model: validated probability vectors, datasets,
//! cluster assignments, entropy, smoothing and aggregate statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` when validating raw component sequences.
/// After validation passes, components are renormalized by the sum so
/// downstream math sees an exact simplex point.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point of the probability simplex P^m: m nonnegative reals summing to 1,
/// m >= 2. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector {
    components: Vec<f64>,
}

impl ProbVector {
    /// Validates a raw component sequence and renormalizes it onto the simplex.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::DimensionTooSmall {
                m: components.len(),
            });
        }
        for (index, &value) in components.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeComponent { index, value });
            }
        }
        let sum: f64 = components.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::SumOutOfTolerance { sum });
        }
        let components = components.iter().map(|&v| v / sum).collect();
        Ok(Self { components })
    }

    /// The uniform center of P^m: every component equals 1/m.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::DimensionTooSmall { m });
        }
        Ok(Self {
            components: vec![1.0 / m as f64; m],
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn get(&self, index: usize) -> f64 {
        self.components[index]
    }

    pub fn min_component(&self) -> f64 {
        self.components.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True if some component is exactly zero.
    pub fn is_absolute_margin(&self) -> bool {
        self.components.iter().any(|&v| v == 0.0)
    }

    /// Shannon entropy in nats, with the convention 0 * log 0 = 0.
    /// Always in [0, log m].
    pub fn entropy(&self) -> f64 {
        -self
            .components
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| v * v.ln())
            .sum::<f64>()
    }

    /// Blends toward the uniform center: `smooth(v, theta) = theta * v + (1 - theta) * v0`.
    /// Every component of the result is at least (1 - theta)/m.
    pub fn smooth(&self, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::ThetaOutOfRange { theta });
        }
        let floor = (1.0 - theta) / self.dim() as f64;
        Ok(Self {
            components: self.components.iter().map(|&v| theta * v + floor).collect(),
        })
    }

    /// Componentwise arithmetic mean of a nonempty collection of points,
    /// renormalized once to counter accumulation drift.
    pub fn mean<'a, I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ProbVector>,
    {
        let mut iter = points.into_iter();
        let first = iter.next().ok_or(Error::EmptyCluster)?;
        let mut sums = first.components.clone();
        for p in iter {
            if p.dim() != sums.len() {
                return Err(Error::DimensionMismatch {
                    left: sums.len(),
                    right: p.dim(),
                });
            }
            for (s, &v) in sums.iter_mut().zip(p.components.iter()) {
                *s += v;
            }
        }
        // Dividing by the recomputed total renormalizes the mean in one step.
        let total: f64 = sums.iter().sum();
        Ok(Self {
            components: sums.iter().map(|&s| s / total).collect(),
        })
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(components: Vec<f64>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(v: ProbVector) -> Self {
        v.components
    }
}

/// A sample of n probability vectors sharing a common dimension m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<ProbVector>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<ProbVector>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
        }
        Ok(Self { points, dim })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[ProbVector] {
        &self.points
    }

    pub fn point(&self, t: usize) -> &ProbVector {
        &self.points[t]
    }

    /// Dataset restricted to its first `n` points (same underlying sample).
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            points: self.points[..n].to_vec(),
            dim: self.dim,
        })
    }

    /// Mean entropy of the observations, H(X) = (1/n) sum_t H(p_t).
    pub fn mean_entropy(&self) -> f64 {
        self.points.iter().map(ProbVector::entropy).sum::<f64>() / self.n() as f64
    }

    /// Componentwise mean of all points, the global center q-bar.
    pub fn global_center(&self) -> ProbVector {
        ProbVector::mean(self.points.iter()).expect("dataset is nonempty")
    }
}

/// Per-observation cluster codes (0-based) plus derived cluster sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    codes: Vec<usize>,
    cluster_sizes: Vec<usize>,
}

impl Assignment {
    /// Builds an assignment from raw codes; sizes are recomputed, never stored
    /// redundantly by callers.
    pub fn from_codes(codes: Vec<usize>, k: usize) -> Self {
        let mut cluster_sizes = vec![0usize; k];
        for &c in &codes {
            assert!(c < k, "cluster code {c} out of range for k = {k}");
            cluster_sizes[c] += 1;
        }
        Self {
            codes,
            cluster_sizes,
        }
    }

    pub fn n(&self) -> usize {
        self.codes.len()
    }

    pub fn k(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    /// Empirical cluster probability p_c = n_c / n.
    pub fn fraction(&self, c: usize) -> f64 {
        self.cluster_sizes[c] as f64 / self.n() as f64
    }

    /// Indices of the observations assigned to cluster `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.codes
            .iter()
            .enumerate()
            .filter(|&(_, &code)| code == c)
            .map(|(t, _)| t)
            .collect()
    }
}
