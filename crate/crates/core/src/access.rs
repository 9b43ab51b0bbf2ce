//! Access-class-barring contention on a framed random-access subchannel.
//!
//! Each frame, every backlogged device draws a uniform value and transmits
//! only if it falls below the broadcast threshold `p_access`; an attempting
//! device then picks one of the subchannel's `rb_count` resource blocks
//! uniformly. A tagged attempt survives iff none of the other `contenders-1`
//! devices lands on the same block:
//!
//! ```text
//! p_succ = (1 - p_access / RB)^(K - 1)
//! ```
//!
//! The equivalent binomial-sum form (condition on how many rivals attempt) is
//! kept purely as a cross-check oracle.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Contention parameters of one subchannel for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessConfig {
    /// Barring threshold, in [0, 1].
    pub p_access: f64,
    /// Resource blocks per frame on this subchannel (>= 1).
    pub rb_count: u32,
    /// Devices sharing the subchannel, including the tagged one (>= 1).
    pub contenders: u32,
}

impl AccessConfig {
    pub fn new(p_access: f64, rb_count: u32, contenders: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_access) {
            return Err(Error::Domain(format!(
                "p_access must be in [0,1], got {p_access}"
            )));
        }
        if rb_count < 1 {
            return Err(Error::Domain("rb_count must be >= 1".into()));
        }
        if contenders < 1 {
            return Err(Error::Domain("contenders must be >= 1".into()));
        }
        Ok(Self { p_access, rb_count, contenders })
    }
}

/// Collision-free probability of a tagged attempt, closed form.
pub fn access_success_prob(cfg: &AccessConfig) -> f64 {
    let base = 1.0 - cfg.p_access / f64::from(cfg.rb_count);
    base.powi(cfg.contenders as i32 - 1)
}

/// Same probability via the binomial sum over the number of attempting
/// rivals; cross-check oracle only (the closed form is what production code
/// uses).
pub fn access_success_prob_sum(cfg: &AccessConfig) -> f64 {
    let k = cfg.contenders - 1;
    let miss = 1.0 - 1.0 / f64::from(cfg.rb_count); // rival attempts, other block
    let p = cfg.p_access;
    let mut coeff = 1.0; // C(k, j), advanced multiplicatively
    let mut total = 0.0;
    for j in 0..=k {
        let term = coeff * (p * miss).powi(j as i32) * (1.0 - p).powi((k - j) as i32);
        total += term;
        coeff *= f64::from(k - j) / f64::from(j + 1);
    }
    total
}

/// How the per-frame service failure probability is assembled from the
/// access and decoding factors.
///
/// * `ErrorFactor` multiplies the raw decoding *error*: `p_o = p_succ *
///   p_access * eps`, and that product is used directly as the geometric
///   continuation probability of the service-time transform.
/// * `SuccessFactor` treats `p_succ * p_access * (1 - eps)` as the per-frame
///   *success* probability, so the continuation probability becomes its
///   complement. This is the reading the discrete-event simulator realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PoSemantics {
    #[default]
    ErrorFactor,
    SuccessFactor,
}

/// Overall per-frame transmission probability product.
pub fn overall_success_prob(p_succ: f64, p_access: f64, eps: f64, semantics: PoSemantics) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_succ));
    debug_assert!((0.0..=1.0).contains(&p_access));
    debug_assert!((0.0..=1.0).contains(&eps));
    match semantics {
        PoSemantics::ErrorFactor => p_succ * p_access * eps,
        PoSemantics::SuccessFactor => p_succ * p_access * (1.0 - eps),
    }
}

/// Per-frame probability that the head-of-line packet is *not* delivered —
/// the continuation parameter of the geometric service time.
pub fn service_continuation_prob(
    p_succ: f64,
    p_access: f64,
    eps: f64,
    semantics: PoSemantics,
) -> f64 {
    match semantics {
        PoSemantics::ErrorFactor => overall_success_prob(p_succ, p_access, eps, semantics),
        PoSemantics::SuccessFactor => {
            1.0 - overall_success_prob(p_succ, p_access, eps, semantics)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn closed_form_trivial_cases() {
        let cfg = AccessConfig::new(0.0, 10, 50).unwrap();
        assert_eq!(access_success_prob(&cfg), 1.0);
        let cfg = AccessConfig::new(0.7, 10, 1).unwrap();
        assert_eq!(access_success_prob(&cfg), 1.0);
    }

    #[test]
    fn sum_form_matches_closed_form() {
        let cfg = AccessConfig::new(0.3, 10, 20).unwrap();
        let a = access_success_prob(&cfg);
        let b = access_success_prob_sum(&cfg);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn sum_form_edge_probabilities() {
        for contenders in [1u32, 2, 50] {
            let cfg = AccessConfig::new(0.0, 25, contenders).unwrap();
            assert!((access_success_prob_sum(&cfg) - 1.0).abs() < 1e-12);
            let cfg = AccessConfig::new(1.0, 25, contenders).unwrap();
            let expect = access_success_prob(&cfg);
            assert!((access_success_prob_sum(&cfg) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn full_contention_matches_monte_carlo() {
        // 49 rivals always attempt (p_access = 1) and pick one of 25 blocks;
        // estimate P(tagged block stays clear) = (24/25)^49 ~ 0.13533.
        let cfg = AccessConfig::new(1.0, 25, 50).unwrap();
        let closed = access_success_prob(&cfg);
        assert!((closed - 0.13533).abs() < 5e-5);

        let mut rng = crate::rng::substream(20240917, "access-mc", 0);
        let trials = 100_000u32;
        let mut clear = 0u32;
        for _ in 0..trials {
            let mut hit = false;
            for _ in 0..49 {
                if rng.gen_range(0u32..25) == 0 {
                    hit = true;
                }
            }
            if !hit {
                clear += 1;
            }
        }
        let est = f64::from(clear) / f64::from(trials);
        let se = (closed * (1.0 - closed) / f64::from(trials)).sqrt();
        assert!(
            (est - closed).abs() <= 3.0 * se,
            "MC {est} vs closed {closed} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn monotonicity_in_parameters() {
        let base = AccessConfig::new(0.5, 10, 20).unwrap();
        let p0 = access_success_prob(&base);
        let more_contenders = AccessConfig::new(0.5, 10, 30).unwrap();
        assert!(access_success_prob(&more_contenders) <= p0);
        let higher_p = AccessConfig::new(0.8, 10, 20).unwrap();
        assert!(access_success_prob(&higher_p) <= p0);
        let more_blocks = AccessConfig::new(0.5, 20, 20).unwrap();
        assert!(access_success_prob(&more_blocks) >= p0);
    }

    #[test]
    fn overall_prob_products() {
        use PoSemantics::*;
        assert_eq!(overall_success_prob(0.0, 1.0, 1.0, ErrorFactor), 0.0);
        assert_eq!(overall_success_prob(1.0, 1.0, 1.0, ErrorFactor), 1.0);
        let p = overall_success_prob(0.9, 0.5, 0.1, ErrorFactor);
        assert!((p - 0.045).abs() < 1e-15);
        let p = overall_success_prob(0.9, 0.5, 0.1, SuccessFactor);
        assert!((p - 0.405).abs() < 1e-15);
    }

    #[test]
    fn continuation_prob_complements_success_reading() {
        use PoSemantics::*;
        let c = service_continuation_prob(0.9, 0.5, 0.1, SuccessFactor);
        assert!((c - (1.0 - 0.405)).abs() < 1e-15);
        let c = service_continuation_prob(0.9, 0.5, 0.1, ErrorFactor);
        assert!((c - 0.045).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn sum_identity_random(p in 0.0f64..=1.0, rb in 1u32..60, k in 1u32..120) {
            let cfg = AccessConfig::new(p, rb, k).unwrap();
            let a = access_success_prob(&cfg);
            let b = access_success_prob_sum(&cfg);
            proptest::prop_assert!((a - b).abs() < 1e-11, "{} vs {}", a, b);
        }
    }
}
