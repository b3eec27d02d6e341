//! Kullback-Leibler divergence kernels: plain KL, the symmetrized form KLS,
//! the smoothed form KL_theta, and the xi/eta structural decomposition of the
//! loss.
//!
//! KL is extended-real valued: it returns positive infinity when some
//! component has `v > 0` and `u = 0`. Infinity propagates through argmin
//! comparisons as larger than any finite value; there is no silent
//! epsilon-flooring. Smoothing is an explicit, user-visible transform.

use crate::error::{Error, Result};
use crate::simplex::ProbVector;

/// KL(v, u) = sum_l v_l * log(v_l / u_l), in nats.
///
/// Terms with v_l = 0 contribute 0; the result is +infinity iff some l has
/// v_l > 0 and u_l = 0.
pub fn kl(v: &ProbVector, u: &ProbVector) -> Result<f64> {
    check_dims(v, u)?;
    Ok(kl_raw(v.components(), u.components()))
}

/// Symmetrized divergence KLS(v, u) = KL(v, u) + KL(u, v).
pub fn kls(v: &ProbVector, u: &ProbVector) -> Result<f64> {
    check_dims(v, u)?;
    Ok(kl_raw(v.components(), u.components()) + kl_raw(u.components(), v.components()))
}

/// Smoothed divergence KL_theta(v, u) = KL(v_theta, u_theta), where both
/// arguments are blended toward the uniform center with weight 1 - theta.
/// Finite for every pair when theta < 1; equals `kl` when theta = 1.
pub fn kl_smoothed(v: &ProbVector, u: &ProbVector, theta: f64) -> Result<f64> {
    check_dims(v, u)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::ThetaOutOfRange { theta });
    }
    Ok(kl_theta_raw(v.components(), u.components(), theta))
}

pub(crate) fn check_dims(v: &ProbVector, u: &ProbVector) -> Result<()> {
    if v.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            left: v.dim(),
            right: u.dim(),
        });
    }
    Ok(())
}

pub(crate) fn kl_raw(v: &[f64], u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in v.iter().zip(u.iter()) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc
}

pub(crate) fn kl_theta_raw(v: &[f64], u: &[f64], theta: f64) -> f64 {
    if theta == 1.0 {
        return kl_raw(v, u);
    }
    let floor = (1.0 - theta) / v.len() as f64;
    let mut acc = 0.0;
    for (&a, &b) in v.iter().zip(u.iter()) {
        let va = theta * a + floor;
        let ub = theta * b + floor;
        acc += va * (va / ub).ln();
    }
    acc
}

/// The xi half of the structural decomposition: xi_0(v) = sum v_l log v_l
/// (the negative entropy) and xi_l(v) = v_l.
#[derive(Clone, Debug, PartialEq)]
pub struct XiVector {
    pub xi0: f64,
    pub xi: Vec<f64>,
}

/// The eta half: eta_0(u) = 1 and eta_l(u) = -log u_l (infinite on margins).
#[derive(Clone, Debug, PartialEq)]
pub struct EtaVector {
    pub eta0: f64,
    pub eta: Vec<f64>,
}

pub fn xi(v: &ProbVector) -> XiVector {
    XiVector {
        xi0: -v.entropy(),
        xi: v.components().to_vec(),
    }
}

pub fn eta(u: &ProbVector) -> EtaVector {
    EtaVector {
        eta0: 1.0,
        eta: u.components().iter().map(|&x| -x.ln()).collect(),
    }
}

/// Inner product of the decomposition vectors. Terms where xi_l = 0
/// contribute 0 regardless of eta_l, matching the KL convention, so the
/// product equals KL(v, u) even when u has zeros at positions where v does.
pub fn structural_loss(xi: &XiVector, eta: &EtaVector) -> f64 {
    let mut acc = xi.xi0 * eta.eta0;
    for (&a, &b) in xi.xi.iter().zip(eta.eta.iter()) {
        if a != 0.0 {
            acc += a * b;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::ProbVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LOG_3: f64 = 1.0986122886681098;
    // Frozen from the two-term summation oracle: 0.5*ln(2) + 0.5*ln(2/3).
    const KL_HALF_QUARTER: f64 = 0.14384103622589045;

    fn pv(components: &[f64]) -> ProbVector {
        ProbVector::new(components.to_vec()).unwrap()
    }

    fn random_interior(rng: &mut ChaCha8Rng, m: usize) -> ProbVector {
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 1e-6).collect();
        let sum: f64 = raw.iter().sum();
        ProbVector::new(raw.iter().map(|&x| x / sum).collect()).unwrap()
    }

    #[test]
    fn kl_of_identical_vectors_is_zero() {
        let v = pv(&[0.2, 0.3, 0.5]);
        assert_eq!(kl(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn kl_vertex_to_uniform_is_log_m() {
        // Oracle identity: kl(v, uniform) = log m - entropy(v).
        let v = pv(&[1.0, 0.0, 0.0]);
        let u = ProbVector::uniform(3).unwrap();
        let got = kl(&v, &u).unwrap();
        assert!((got - (LOG_3 - v.entropy())).abs() < 1e-12);
        assert!((got - LOG_3).abs() < 1e-12);
    }

    #[test]
    fn kl_matches_two_term_summation_oracle() {
        let v = pv(&[0.5, 0.5]);
        let u = pv(&[0.25, 0.75]);
        let oracle = 0.5 * f64::ln(0.5 / 0.25) + 0.5 * f64::ln(0.5 / 0.75);
        assert!((oracle - KL_HALF_QUARTER).abs() < 1e-15);
        assert!((kl(&v, &u).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn kl_is_infinite_on_conflicting_support() {
        let v = pv(&[0.5, 0.5]);
        let u = pv(&[1.0, 0.0]);
        assert_eq!(kl(&v, &u).unwrap(), f64::INFINITY);
        // The reverse direction is finite: terms with v_l = 0 contribute 0.
        assert!(kl(&u, &v).unwrap().is_finite());
    }

    #[test]
    fn kl_rejects_dimension_mismatch() {
        let err = kl(&pv(&[0.5, 0.5]), &pv(&[0.2, 0.3, 0.5])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn kl_is_not_symmetric() {
        let v = pv(&[0.9, 0.1]);
        let u = pv(&[0.5, 0.5]);
        let forward = kl(&v, &u).unwrap();
        let backward = kl(&u, &v).unwrap();
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn kls_is_symmetric_and_zero_at_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let m = rng.random_range(2..=10);
            let v = random_interior(&mut rng, m);
            let u = random_interior(&mut rng, m);
            let a = kls(&v, &u).unwrap();
            let b = kls(&u, &v).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!(a >= 0.0);
        }
        let v = pv(&[0.4, 0.6]);
        assert_eq!(kls(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn kls_matches_both_direction_oracle() {
        let v = pv(&[0.5, 0.5]);
        let u = pv(&[0.25, 0.75]);
        let back = 0.25 * f64::ln(0.25 / 0.5) + 0.75 * f64::ln(0.75 / 0.5);
        let got = kls(&v, &u).unwrap();
        assert!((got - (KL_HALF_QUARTER + back)).abs() < 1e-15);
    }

    #[test]
    fn kl_smoothed_theta_one_equals_kl() {
        let v = pv(&[0.2, 0.3, 0.5]);
        let u = pv(&[0.6, 0.2, 0.2]);
        assert_eq!(
            kl_smoothed(&v, &u, 1.0).unwrap(),
            kl(&v, &u).unwrap()
        );
    }

    #[test]
    fn kl_smoothed_theta_zero_is_zero() {
        let v = pv(&[1.0, 0.0]);
        let u = pv(&[0.0, 1.0]);
        assert_eq!(kl_smoothed(&v, &u, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn kl_smoothed_matches_smooth_then_kl_composition() {
        // Oracle: kl((0.75, 0.25), (0.25, 0.75)) = 0.5 * ln 3.
        let v = pv(&[1.0, 0.0]);
        let u = pv(&[0.0, 1.0]);
        let got = kl_smoothed(&v, &u, 0.5).unwrap();
        let composed = kl(&v.smooth(0.5).unwrap(), &u.smooth(0.5).unwrap()).unwrap();
        assert!((got - composed).abs() < 1e-15);
        assert!((got - 0.5493061443340548).abs() < 1e-12);
    }

    #[test]
    fn kl_smoothed_is_finite_on_margins_for_theta_below_one() {
        let v = pv(&[1.0, 0.0, 0.0]);
        let u = pv(&[0.0, 0.0, 1.0]);
        for theta in [0.0, 0.25, 0.5, 0.9, 0.999] {
            assert!(kl_smoothed(&v, &u, theta).unwrap().is_finite());
        }
    }

    #[test]
    fn decomposition_of_self_loss_is_zero_for_interior_points() {
        let v = pv(&[0.2, 0.3, 0.5]);
        let got = structural_loss(&xi(&v), &eta(&v));
        assert!(got.abs() < 1e-15);
    }

    #[test]
    fn decomposition_matches_kl_oracle() {
        let v = pv(&[0.5, 0.5]);
        let u = pv(&[0.25, 0.75]);
        let got = structural_loss(&xi(&v), &eta(&u));
        assert!((got - KL_HALF_QUARTER).abs() < 1e-12);
    }

    #[test]
    fn xi0_bounds_at_extremes() {
        assert_eq!(xi(&pv(&[1.0, 0.0, 0.0])).xi0, 0.0);
        let u = ProbVector::uniform(3).unwrap();
        assert!((xi(&u).xi0.abs() - LOG_3).abs() < 1e-12);
    }

    #[test]
    fn xi_bounds_hold_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 2..=50 {
            for _ in 0..200 {
                let v = random_interior(&mut rng, m);
                let x = xi(&v);
                assert!(x.xi0.abs() <= (m as f64).ln() + 1e-12);
                assert!(x.xi.iter().all(|&c| c.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn gibbs_inequality_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let m = rng.random_range(2..=10);
            let v = random_interior(&mut rng, m);
            let u = random_interior(&mut rng, m);
            let d = kl(&v, &u).unwrap();
            assert!(d >= 0.0);
            if v != u {
                assert!(d > 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn decomposition_equals_kl_for_interior_pairs(
            raw_v in proptest::collection::vec(1e-6f64..1.0, 5),
            raw_u in proptest::collection::vec(1e-6f64..1.0, 5),
        ) {
            let sv: f64 = raw_v.iter().sum();
            let su: f64 = raw_u.iter().sum();
            let v = ProbVector::new(raw_v.iter().map(|&x| x / sv).collect()).unwrap();
            let u = ProbVector::new(raw_u.iter().map(|&x| x / su).collect()).unwrap();
            let direct = kl(&v, &u).unwrap();
            let decomposed = structural_loss(&xi(&v), &eta(&u));
            prop_assert!((direct - decomposed).abs() <= 1e-12);
        }
    }
}
