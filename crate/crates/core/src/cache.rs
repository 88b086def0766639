//! Cache planning for one UAV.
//!
//! Each UAV stores `cache_size` contents chosen from the catalog. The
//! objective is the expected number of cache-served requests from its
//! associated users: content n scores the sum over users of predicted
//! request probability times expected request volume. That objective is
//! additive over contents, so the exact optimum is the top-scoring set;
//! [`cache_oracle`] proves it by exhaustive enumeration and exists to
//! cross-check [`plan_cache`] forever.

use crate::error::{Result, SimError};
use crate::exec::map_indexed;
use crate::rng::{self, STREAM_CACHE_VERIFY};
use itertools::Itertools;
use rand::Rng;

/// A cache decision for one UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct CachePlan {
    /// Chosen content ids, ascending.
    pub contents: Vec<usize>,
    /// Aggregate score of each chosen content, aligned with `contents`.
    pub scores: Vec<f64>,
    /// True when no users were associated and the plan fell back to the
    /// lowest content ids.
    pub fallback: bool,
}

impl CachePlan {
    pub fn total_score(&self) -> f64 {
        self.scores.iter().sum()
    }
}

fn validate_inputs(
    assoc: &[usize],
    predicted: &[Vec<f64>],
    request_weight: &[f64],
    n_contents: usize,
) -> Result<()> {
    if n_contents == 0 {
        return Err(SimError::Empty("content catalog"));
    }
    if request_weight.len() != predicted.len() {
        return Err(SimError::DimensionMismatch {
            context: "request weights",
            expected: predicted.len(),
            got: request_weight.len(),
        });
    }
    for &user in assoc {
        if user >= predicted.len() {
            return Err(SimError::DimensionMismatch {
                context: "associated user id",
                expected: predicted.len(),
                got: user,
            });
        }
        if predicted[user].len() != n_contents {
            return Err(SimError::DimensionMismatch {
                context: "prediction row",
                expected: n_contents,
                got: predicted[user].len(),
            });
        }
    }
    Ok(())
}

/// Aggregate score per content over the associated users.
pub fn content_scores(
    assoc: &[usize],
    predicted: &[Vec<f64>],
    request_weight: &[f64],
    n_contents: usize,
) -> Result<Vec<f64>> {
    validate_inputs(assoc, predicted, request_weight, n_contents)?;
    let mut scores = vec![0.0; n_contents];
    for &user in assoc {
        let w = request_weight[user];
        for (n, &p) in predicted[user].iter().enumerate() {
            scores[n] += w * p;
        }
    }
    Ok(scores)
}

/// Picks the `cache_size` contents with the highest aggregate scores.
/// Ties break toward lower content ids. An empty association falls back
/// to the lowest ids and flags it.
pub fn plan_cache(
    assoc: &[usize],
    predicted: &[Vec<f64>],
    request_weight: &[f64],
    cache_size: usize,
    n_contents: usize,
) -> Result<CachePlan> {
    let scores = content_scores(assoc, predicted, request_weight, n_contents)?;
    let take = cache_size.min(n_contents);
    let mut order: Vec<usize> = (0..n_contents).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut contents: Vec<usize> = order[..take].to_vec();
    contents.sort_unstable();
    let chosen_scores = contents.iter().map(|&n| scores[n]).collect();
    Ok(CachePlan {
        contents,
        scores: chosen_scores,
        fallback: assoc.is_empty(),
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Exhaustive cache optimum: enumerates every size-`cache_size` subset and
/// returns the one with the highest total score (lexicographically first
/// on exact ties). Refuses instances with more than `enumeration_cap`
/// subsets.
pub fn cache_oracle(
    assoc: &[usize],
    predicted: &[Vec<f64>],
    request_weight: &[f64],
    cache_size: usize,
    n_contents: usize,
    enumeration_cap: u64,
) -> Result<CachePlan> {
    let scores = content_scores(assoc, predicted, request_weight, n_contents)?;
    let take = cache_size.min(n_contents);
    let count = binomial(n_contents, take);
    if count > enumeration_cap as u128 {
        return Err(SimError::InstanceTooLarge {
            what: "cache subset enumeration",
            size: count.min(u64::MAX as u128) as u64,
            cap: enumeration_cap,
        });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in (0..n_contents).combinations(take) {
        let total: f64 = subset.iter().map(|&n| scores[n]).sum();
        let better = match &best {
            None => true,
            Some((bt, _)) => total > *bt,
        };
        if better {
            best = Some((total, subset));
        }
    }
    let (_, contents) = best.ok_or(SimError::Empty("cache oracle candidates"))?;
    let chosen_scores = contents.iter().map(|&n| scores[n]).collect();
    Ok(CachePlan {
        contents,
        scores: chosen_scores,
        fallback: assoc.is_empty(),
    })
}

/// One random planning instance for cross-checking the planner against
/// the exhaustive oracle.
#[derive(Debug, Clone)]
pub struct CacheInstance {
    pub assoc: Vec<usize>,
    pub predicted: Vec<Vec<f64>>,
    pub request_weight: Vec<f64>,
    pub cache_size: usize,
    pub n_contents: usize,
}

pub fn random_cache_instance(
    seed: u64,
    index: u64,
    max_users: usize,
    max_contents: usize,
) -> CacheInstance {
    let mut rng = rng::stream(seed, STREAM_CACHE_VERIFY, index);
    let n_contents = rng.gen_range(1..=max_contents.max(1));
    let n_users = rng.gen_range(1..=max_users.max(1));
    let cache_size = rng.gen_range(0..=n_contents);
    let predicted: Vec<Vec<f64>> = (0..n_users)
        .map(|_| {
            let raw: Vec<f64> = (0..n_contents).map(|_| rng.gen::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    let request_weight: Vec<f64> = (0..n_users).map(|_| rng.gen_range(0.0..50.0)).collect();
    let assoc: Vec<usize> = (0..n_users).filter(|_| rng.gen::<bool>()).collect();
    CacheInstance {
        assoc,
        predicted,
        request_weight,
        cache_size,
        n_contents,
    }
}

/// A planner/oracle disagreement on one instance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CacheMismatch {
    pub instance: u64,
    pub planner: Vec<usize>,
    pub oracle: Vec<usize>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CacheVerification {
    pub instances: u64,
    pub exact: u64,
    pub mismatches: Vec<CacheMismatch>,
}

/// Cross-checks [`plan_cache`] against [`cache_oracle`] on random
/// instances. Chosen sets must agree exactly; both routes break score
/// ties toward lower content ids.
pub fn verify_cache(
    instances: u64,
    max_users: usize,
    max_contents: usize,
    seed: u64,
    parallel: bool,
) -> Result<CacheVerification> {
    let outcomes = map_indexed(instances as usize, parallel, |i| -> Result<_> {
        let inst = random_cache_instance(seed, i as u64, max_users, max_contents);
        let plan = plan_cache(
            &inst.assoc,
            &inst.predicted,
            &inst.request_weight,
            inst.cache_size,
            inst.n_contents,
        )?;
        let oracle = cache_oracle(
            &inst.assoc,
            &inst.predicted,
            &inst.request_weight,
            inst.cache_size,
            inst.n_contents,
            10_000_000,
        )?;
        Ok((i as u64, plan.contents, oracle.contents))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut exact = 0;
    let mut mismatches = vec![];
    for (instance, planner, oracle) in outcomes {
        if planner == oracle {
            exact += 1;
        } else {
            mismatches.push(CacheMismatch {
                instance,
                planner,
                oracle,
            });
        }
    }
    Ok(CacheVerification {
        instances,
        exact,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, STREAM_VERIFY};
    use proptest::prelude::*;
    use rand::Rng;

    fn two_user_instance() -> (Vec<Vec<f64>>, Vec<f64>) {
        let predicted = vec![vec![0.5, 0.3, 0.1, 0.1], vec![0.1, 0.1, 0.5, 0.3]];
        let weights = vec![10.0, 20.0];
        (predicted, weights)
    }

    #[test]
    fn scores_weight_by_request_volume() {
        let (predicted, weights) = two_user_instance();
        let s = content_scores(&[0, 1], &predicted, &weights, 4).unwrap();
        // content 0: 0.5*10 + 0.1*20 = 7; content 2: 0.1*10 + 0.5*20 = 11.
        assert!((s[0] - 7.0).abs() < 1e-12);
        assert!((s[1] - 5.0).abs() < 1e-12);
        assert!((s[2] - 11.0).abs() < 1e-12);
        assert!((s[3] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn plan_picks_top_scores() {
        let (predicted, weights) = two_user_instance();
        let plan = plan_cache(&[0, 1], &predicted, &weights, 2, 4).unwrap();
        // Top two scores are content 2 (11) and the 7-tie broken to id 0.
        assert_eq!(plan.contents, vec![0, 2]);
        assert!(!plan.fallback);
        assert!((plan.total_score() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn ties_break_to_lower_id() {
        let predicted = vec![vec![0.25, 0.25, 0.25, 0.25]];
        let plan = plan_cache(&[0], &predicted, &[1.0], 2, 4).unwrap();
        assert_eq!(plan.contents, vec![0, 1]);
    }

    #[test]
    fn empty_association_falls_back() {
        let predicted: Vec<Vec<f64>> = vec![vec![0.5, 0.5]];
        let plan = plan_cache(&[], &predicted, &[1.0], 3, 5).unwrap();
        assert!(plan.fallback);
        assert_eq!(plan.contents, vec![0, 1, 2]);
    }

    #[test]
    fn degenerate_cache_sizes() {
        let (predicted, weights) = two_user_instance();
        let none = plan_cache(&[0, 1], &predicted, &weights, 0, 4).unwrap();
        assert!(none.contents.is_empty());
        let all = plan_cache(&[0, 1], &predicted, &weights, 9, 4).unwrap();
        assert_eq!(all.contents, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_bad_user_id() {
        let (predicted, weights) = two_user_instance();
        assert!(plan_cache(&[5], &predicted, &weights, 2, 4).is_err());
    }

    #[test]
    fn oracle_agrees_on_random_instances() {
        for i in 0..50 {
            let mut rng = rng::stream(100, STREAM_VERIFY, i);
            let n_contents = rng.gen_range(1..=10);
            let n_users = rng.gen_range(1..=6);
            let cache_size = rng.gen_range(0..=4usize);
            let predicted: Vec<Vec<f64>> = (0..n_users)
                .map(|_| {
                    let raw: Vec<f64> = (0..n_contents).map(|_| rng.gen::<f64>()).collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / sum).collect()
                })
                .collect();
            let weights: Vec<f64> = (0..n_users).map(|_| rng.gen_range(0.0..50.0)).collect();
            let assoc: Vec<usize> = (0..n_users).filter(|_| rng.gen::<bool>()).collect();
            let plan = plan_cache(&assoc, &predicted, &weights, cache_size, n_contents).unwrap();
            let oracle = cache_oracle(
                &assoc, &predicted, &weights, cache_size, n_contents, 1_000_000,
            )
            .unwrap();
            assert_eq!(plan.contents, oracle.contents, "instance {i}");
        }
    }

    #[test]
    fn oracle_refuses_huge_enumerations() {
        let predicted = vec![vec![1.0 / 40.0; 40]];
        let err = cache_oracle(&[0], &predicted, &[1.0], 20, 40, 1_000_000);
        assert!(matches!(err, Err(SimError::InstanceTooLarge { .. })));
    }

    #[test]
    fn verification_driver_matches_on_random_instances() {
        let report = verify_cache(60, 6, 12, 9, false).unwrap();
        assert_eq!(report.instances, 60);
        assert_eq!(report.exact, 60);
        assert!(report.mismatches.is_empty());
        let parallel = verify_cache(60, 6, 12, 9, true).unwrap();
        assert_eq!(parallel.exact, 60);
    }

    proptest! {
        #[test]
        fn plan_invariant_to_weight_scale(scale in 0.1f64..100.0) {
            // Distinct scores: positive scaling cannot reorder them.
            let predicted = vec![
                vec![0.4, 0.3, 0.2, 0.1],
                vec![0.1, 0.2, 0.3, 0.4],
            ];
            let weights = vec![10.0, 20.0];
            let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
            let a = plan_cache(&[0, 1], &predicted, &weights, 2, 4).unwrap();
            let b = plan_cache(&[0, 1], &predicted, &scaled, 2, 4).unwrap();
            prop_assert_eq!(a.contents, b.contents);
        }
    }
}
