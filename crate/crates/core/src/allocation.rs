//! Spectrum allocation per UAV and the proposal action space.
//!
//! Each UAV splits two unit budgets, a licensed fraction vector `u` and an
//! unlicensed fraction vector `e`, over its associated users, trying to
//! maximize how many users get their full demand. A user's requirement on
//! a band is demand divided by its end-to-end rate there (cache hits use
//! the direct rate, misses the two-hop composition with the fronthaul
//! share).
//!
//! The allocator first tries the cheap-band profile: every user priced on
//! its cheaper band. If both budgets cover that profile, everyone is
//! stable. Otherwise it enumerates, for each band, the maximum-cardinality
//! selections of that band's cheap-profile users, prices every unselected
//! user on the other band, and greedily packs those; the best combination
//! wins. [`allocation_oracle`] checks the result by brute force over all
//! band assignments and must stay in the codebase as the reference.

use crate::cache::{plan_cache, CachePlan};
use crate::error::{Result, SimError};
use crate::exec::map_indexed;
use crate::rng::{self, STREAM_VERIFY};
use crate::traffic::harmonic_composition;
use rand::Rng;

/// Hard bound on exhaustive 3^n assignment enumeration.
pub const ORACLE_USER_CAP: usize = 12;
/// Default bound on enumerated maximum-cardinality selections.
pub const DEFAULT_SELECTION_CAP: u64 = 4096;

/// Per-user spectrum requirements for one UAV's association.
#[derive(Debug, Clone, PartialEq)]
pub struct RequirementVectors {
    /// Licensed fraction meeting the demand (`inf` if unserveable there).
    pub u_req: Vec<f64>,
    /// Unlicensed fraction meeting the demand.
    pub e_req: Vec<f64>,
    /// Cheap-band profile: `u_req` where licensed is no more expensive,
    /// else 0. Ties price on licensed.
    pub u_min: Vec<f64>,
    /// Cheap-band profile on unlicensed: `e_req` where strictly cheaper.
    pub e_min: Vec<f64>,
}

impl RequirementVectors {
    pub fn len(&self) -> usize {
        self.u_req.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_req.is_empty()
    }

    /// Users with no demand this slot are stable with zero allocation.
    pub fn zero_demand(&self, i: usize) -> bool {
        self.u_req[i] == 0.0 && self.e_req[i] == 0.0
    }
}

/// Builds requirement vectors from demands and end-to-end rates.
///
/// `fronthaul_bits` is the per-miss-user fronthaul share for this slot;
/// pass `f64::INFINITY` when there are no misses.
pub fn requirement_vectors(
    demand_bits: &[f64],
    licensed_full: &[f64],
    unlicensed_full: &[f64],
    fronthaul_bits: f64,
    cache_hit: &[bool],
) -> Result<RequirementVectors> {
    let n = demand_bits.len();
    for (name, len) in [
        ("licensed rates", licensed_full.len()),
        ("unlicensed rates", unlicensed_full.len()),
        ("cache hits", cache_hit.len()),
    ] {
        if len != n {
            return Err(SimError::DimensionMismatch {
                context: name,
                expected: n,
                got: len,
            });
        }
    }
    let mut u_req = Vec::with_capacity(n);
    let mut e_req = Vec::with_capacity(n);
    for i in 0..n {
        if demand_bits[i] < 0.0 {
            return Err(SimError::InvalidInput {
                name: "demand_bits",
                value: demand_bits[i],
                reason: "demand must be non-negative",
            });
        }
        let eff = |direct: f64| {
            if cache_hit[i] {
                direct
            } else {
                harmonic_composition(direct, fronthaul_bits)
            }
        };
        let req = |rate: f64| {
            if demand_bits[i] == 0.0 {
                0.0
            } else if rate <= 0.0 {
                f64::INFINITY
            } else {
                demand_bits[i] / rate
            }
        };
        u_req.push(req(eff(licensed_full[i])));
        e_req.push(req(eff(unlicensed_full[i])));
    }
    let mut u_min = vec![0.0; n];
    let mut e_min = vec![0.0; n];
    for i in 0..n {
        if u_req[i] <= e_req[i] {
            u_min[i] = u_req[i];
        } else {
            e_min[i] = e_req[i];
        }
    }
    Ok(RequirementVectors {
        u_req,
        e_req,
        u_min,
        e_min,
    })
}

/// All maximum-cardinality feasible selections from one requirement vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxCountSelection {
    /// Users servable simultaneously within the budget.
    pub max_count: usize,
    /// Every selection attaining `max_count`, as bitmasks over the
    /// original indices, ascending.
    pub selections: Vec<u64>,
}

/// Enumerates every maximum-cardinality subset of `req` fitting in
/// `budget`. Entries that are non-positive or individually over budget are
/// not candidates. Errors when more than `cap` selections exist.
pub fn max_count_selection(req: &[f64], budget: f64, cap: u64) -> Result<MaxCountSelection> {
    if req.len() > 64 {
        return Err(SimError::InstanceTooLarge {
            what: "selection bitmask",
            size: req.len() as u64,
            cap: 64,
        });
    }
    let mut candidates: Vec<(usize, f64)> = req
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r > 0.0 && r <= budget)
        .map(|(i, &r)| (i, r))
        .collect();
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));

    // Greedy prefix of the ascending ordering gives the max cardinality.
    let mut max_count = 0usize;
    let mut acc = 0.0;
    for &(_, r) in &candidates {
        if acc + r <= budget {
            acc += r;
            max_count += 1;
        } else {
            break;
        }
    }
    if max_count == 0 {
        return Ok(MaxCountSelection {
            max_count: 0,
            selections: vec![0],
        });
    }

    // Prefix sums let the search prune branches whose cheapest possible
    // completion already exceeds the budget.
    let mut prefix = vec![0.0; candidates.len() + 1];
    for (i, &(_, r)) in candidates.iter().enumerate() {
        prefix[i + 1] = prefix[i] + r;
    }
    let min_tail = |start: usize, take: usize| prefix[start + take] - prefix[start];

    let mut selections = Vec::new();
    let mut stack: Vec<(usize, usize, f64, u64)> = vec![(0, max_count, 0.0, 0)];
    while let Some((start, remaining, sum, mask)) = stack.pop() {
        if remaining == 0 {
            selections.push(mask);
            if selections.len() as u64 > cap {
                return Err(SimError::InstanceTooLarge {
                    what: "maximum-cardinality selections",
                    size: selections.len() as u64,
                    cap,
                });
            }
            continue;
        }
        for i in start..candidates.len() {
            if candidates.len() - i < remaining {
                break;
            }
            let (idx, r) = candidates[i];
            if sum + r + min_tail(i + 1, remaining - 1) > budget {
                // Entries are sorted ascending; later starts only cost more.
                break;
            }
            stack.push((i + 1, remaining - 1, sum + r, mask | (1u64 << idx)));
        }
    }
    selections.sort_unstable();
    Ok(MaxCountSelection {
        max_count,
        selections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationCase {
    /// Both budgets covered the cheap-band profile outright.
    BothFit,
    /// Maximum-cardinality traversal decided the allocation.
    Traversal,
}

/// A spectrum split for one UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub licensed: Vec<f64>,
    pub unlicensed: Vec<f64>,
    pub stable: Vec<bool>,
    pub stable_count: usize,
    /// Primary selections examined (1 when both budgets fit).
    pub candidates_examined: u64,
    pub case: AllocationCase,
}

fn greedy_pack(
    req: &[f64],
    exclude_mask: u64,
    zero_demand: &dyn Fn(usize) -> bool,
    budget: f64,
) -> u64 {
    let mut order: Vec<(usize, f64)> = req
        .iter()
        .enumerate()
        .filter(|&(i, &r)| {
            exclude_mask & (1u64 << i) == 0
                && !zero_demand(i)
                && r.is_finite()
                && r > 0.0
                && r <= budget
        })
        .map(|(i, &r)| (i, r))
        .collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let mut mask = 0u64;
    let mut acc = 0.0;
    for (i, r) in order {
        if acc + r <= budget {
            acc += r;
            mask |= 1u64 << i;
        }
    }
    mask
}

/// Splits both band budgets over the association to maximize the number
/// of users whose demand is fully met.
pub fn algorithm1_allocate(req: &RequirementVectors, selection_cap: u64) -> Result<AllocationPlan> {
    let n = req.len();
    if n > 64 {
        return Err(SimError::InstanceTooLarge {
            what: "allocation bitmask",
            size: n as u64,
            cap: 64,
        });
    }
    for v in req.u_req.iter().chain(req.e_req.iter()) {
        if v.is_nan() || *v < 0.0 {
            return Err(SimError::InvalidInput {
                name: "requirement",
                value: *v,
                reason: "requirements must be non-negative",
            });
        }
    }
    let budget = 1.0;
    let zero_count = (0..n).filter(|&i| req.zero_demand(i)).count();

    let sum_u_min: f64 = req.u_min.iter().sum();
    let sum_e_min: f64 = req.e_min.iter().sum();
    if sum_u_min <= budget && sum_e_min <= budget {
        return Ok(AllocationPlan {
            licensed: req.u_min.clone(),
            unlicensed: req.e_min.clone(),
            stable: vec![true; n],
            stable_count: n,
            candidates_examined: 1,
            case: AllocationCase::BothFit,
        });
    }

    let zero_demand = |i: usize| req.zero_demand(i);
    // (served, alloc_sum, family, primary, secondary); lower tuple wins at
    // equal served count, making the outcome deterministic.
    let mut best: Option<(usize, f64, u8, u64, u64)> = None;
    let mut examined = 0u64;

    let families: [(&[f64], &[f64], u8); 2] =
        [(&req.u_min, &req.e_req, 0), (&req.e_min, &req.u_req, 1)];
    for (primary_req, secondary_req, family) in families {
        let sel = max_count_selection(primary_req, budget, selection_cap)?;
        for &mask in &sel.selections {
            examined += 1;
            let secondary = greedy_pack(secondary_req, mask, &zero_demand, budget);
            let served = (mask.count_ones() + secondary.count_ones()) as usize;
            let alloc_sum: f64 = (0..n)
                .map(|i| {
                    let mut s = 0.0;
                    if mask & (1u64 << i) != 0 {
                        s += primary_req[i];
                    }
                    if secondary & (1u64 << i) != 0 {
                        s += secondary_req[i];
                    }
                    s
                })
                .sum();
            let key = (served, alloc_sum, family, mask, secondary);
            let better = match &best {
                None => true,
                Some((bs, ba, bf, bm, bsec)) => {
                    served > *bs
                        || (served == *bs
                            && (alloc_sum < *ba - 1e-12
                                || (alloc_sum <= *ba + 1e-12
                                    && (family, mask, secondary) < (*bf, *bm, *bsec))))
                }
            };
            if better {
                best = Some(key);
            }
        }
    }

    let (served, _, family, primary_mask, secondary_mask) =
        best.ok_or(SimError::Empty("allocation traversal"))?;
    let mut licensed = vec![0.0; n];
    let mut unlicensed = vec![0.0; n];
    let mut stable = vec![false; n];
    for i in 0..n {
        let bit = 1u64 << i;
        let (primary_is_licensed, primary_req, secondary_req) = if family == 0 {
            (true, &req.u_min, &req.e_req)
        } else {
            (false, &req.e_min, &req.u_req)
        };
        if primary_mask & bit != 0 {
            if primary_is_licensed {
                licensed[i] = primary_req[i];
            } else {
                unlicensed[i] = primary_req[i];
            }
            stable[i] = true;
        } else if secondary_mask & bit != 0 {
            if primary_is_licensed {
                unlicensed[i] = secondary_req[i];
            } else {
                licensed[i] = secondary_req[i];
            }
            stable[i] = true;
        } else if req.zero_demand(i) {
            stable[i] = true;
        }
    }
    Ok(AllocationPlan {
        licensed,
        unlicensed,
        stable,
        stable_count: served + zero_count,
        candidates_examined: examined,
        case: AllocationCase::Traversal,
    })
}

/// Brute-force optimum over every (licensed, unlicensed, unserved)
/// assignment.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub stable_count: usize,
    pub licensed_mask: u64,
    pub unlicensed_mask: u64,
    pub assignments_examined: u64,
}

pub fn allocation_oracle(req: &RequirementVectors) -> Result<OracleOutcome> {
    let n = req.len();
    let positive: Vec<usize> = (0..n).filter(|&i| !req.zero_demand(i)).collect();
    if positive.len() > ORACLE_USER_CAP {
        return Err(SimError::InstanceTooLarge {
            what: "oracle assignment enumeration",
            size: positive.len() as u64,
            cap: ORACLE_USER_CAP as u64,
        });
    }
    let zero_count = n - positive.len();
    let total = 3u64.pow(positive.len() as u32);
    let mut best_count = 0usize;
    let mut best_masks = (0u64, 0u64);
    for code in 0..total {
        let mut c = code;
        let mut sum_u = 0.0;
        let mut sum_e = 0.0;
        let mut served = 0usize;
        let mut mask_l = 0u64;
        let mut mask_e = 0u64;
        for &i in &positive {
            let digit = c % 3;
            c /= 3;
            match digit {
                1 => {
                    sum_u += req.u_req[i];
                    served += 1;
                    mask_l |= 1u64 << i;
                }
                2 => {
                    sum_e += req.e_req[i];
                    served += 1;
                    mask_e |= 1u64 << i;
                }
                _ => {}
            }
        }
        if sum_u <= 1.0 && sum_e <= 1.0 && served > best_count {
            best_count = served;
            best_masks = (mask_l, mask_e);
        }
    }
    Ok(OracleOutcome {
        stable_count: best_count + zero_count,
        licensed_mask: best_masks.0,
        unlicensed_mask: best_masks.1,
        assignments_examined: total,
    })
}

/// Which users a UAV may propose to serve.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    /// Candidate user ids, ascending.
    pub candidates: Vec<usize>,
    /// True when the candidate set was cut to the configured cap.
    pub truncated: bool,
}

impl ActionSpace {
    pub fn n_actions(&self) -> u64 {
        1u64 << self.candidates.len()
    }

    /// User ids selected by an action index (bit i = candidate i).
    pub fn decode(&self, action: u64) -> Vec<usize> {
        self.candidates
            .iter()
            .enumerate()
            .filter(|&(bit, _)| action & (1u64 << bit) != 0)
            .map(|(_, &u)| u)
            .collect()
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionSpaceParams {
    /// Candidate count cap; the action space is 2^candidates.
    pub user_cap: usize,
    /// Fronthaul dominance threshold: above `factor * direct rate` on both
    /// bands, candidacy reduces to the direct rates alone.
    pub dominance_factor: f64,
}

impl Default for ActionSpaceParams {
    fn default() -> Self {
        ActionSpaceParams {
            user_cap: 12,
            dominance_factor: 100.0,
        }
    }
}

/// Candidate rule: a user belongs to a UAV's action space when some band
/// could deliver one full content within a slot at full allocation. When
/// the fronthaul dominates both direct rates the two-hop composition is
/// within 1% of the direct rate, so the test simplifies to the direct
/// rates.
pub fn build_action_space(
    direct_licensed: &[f64],
    direct_unlicensed: &[f64],
    fronthaul_bits: f64,
    content_bits: f64,
    params: &ActionSpaceParams,
) -> Result<ActionSpace> {
    let n = direct_licensed.len();
    if direct_unlicensed.len() != n {
        return Err(SimError::DimensionMismatch {
            context: "action space rates",
            expected: n,
            got: direct_unlicensed.len(),
        });
    }
    if content_bits <= 0.0 {
        return Err(SimError::InvalidInput {
            name: "content_bits",
            value: content_bits,
            reason: "content size must be positive",
        });
    }
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let rl = direct_licensed[i];
            let ru = direct_unlicensed[i];
            let dominant = fronthaul_bits > params.dominance_factor * rl
                && fronthaul_bits > params.dominance_factor * ru;
            if dominant {
                rl >= content_bits || ru >= content_bits
            } else {
                harmonic_composition(rl, fronthaul_bits) >= content_bits
                    || harmonic_composition(ru, fronthaul_bits) >= content_bits
            }
        })
        .collect();
    let truncated = candidates.len() > params.user_cap;
    if truncated {
        candidates.sort_by(|&a, &b| {
            let ra = direct_licensed[a].max(direct_unlicensed[a]);
            let rb = direct_licensed[b].max(direct_unlicensed[b]);
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        candidates.truncate(params.user_cap);
        candidates.sort_unstable();
    }
    Ok(ActionSpace {
        candidates,
        truncated,
    })
}

/// Everything a slot evaluation needs besides the proposals themselves.
pub struct SlotContext<'a> {
    /// Full-allocation direct rates, bits per slot, indexed `[uav][user]`.
    pub licensed_full: &'a [Vec<f64>],
    pub unlicensed_full: &'a [Vec<f64>],
    /// Fronthaul bits per slot per UAV when serving a single miss.
    pub fronthaul_full: &'a [f64],
    /// Association preference when several UAVs propose the same user.
    pub preference: &'a [Vec<f64>],
    /// Demand in bits per user this slot.
    pub demands: &'a [f64],
    /// Requested content per user this slot.
    pub requested: &'a [Option<usize>],
    /// Predicted request distribution per user.
    pub predicted: &'a [Vec<f64>],
    /// Expected request volume per user (cache scoring weight).
    pub request_weight: &'a [f64],
    pub cache_size: usize,
    pub n_contents: usize,
    pub selection_cap: u64,
}

/// Outcome of one joint proposal across all UAVs.
#[derive(Debug, Clone)]
pub struct JointOutcome {
    pub assigned: Vec<Option<usize>>,
    pub assoc: Vec<Vec<usize>>,
    pub caches: Vec<CachePlan>,
    pub plans: Vec<AllocationPlan>,
    pub stable_per_uav: Vec<usize>,
    pub stable_total: usize,
    pub cache_hits: usize,
    pub fronthaul_users: usize,
    pub delivered_bits: Vec<f64>,
}

/// Resolves proposal conflicts, plans caches, allocates spectrum, and
/// scores the slot.
///
/// Conflicts go to the proposing UAV with the best end-to-end preference
/// (ties to the lower UAV id). The fronthaul splits evenly over all users
/// whose request misses their UAV's cache.
pub fn evaluate_joint_action(proposals: &[Vec<usize>], ctx: &SlotContext) -> Result<JointOutcome> {
    let n_uavs = proposals.len();
    let n_users = ctx.demands.len();
    if ctx.licensed_full.len() != n_uavs
        || ctx.unlicensed_full.len() != n_uavs
        || ctx.fronthaul_full.len() != n_uavs
        || ctx.preference.len() != n_uavs
    {
        return Err(SimError::DimensionMismatch {
            context: "slot context UAV tables",
            expected: n_uavs,
            got: ctx.licensed_full.len(),
        });
    }

    let mut assigned: Vec<Option<usize>> = vec![None; n_users];
    for (k, proposal) in proposals.iter().enumerate() {
        for &i in proposal {
            if i >= n_users {
                return Err(SimError::DimensionMismatch {
                    context: "proposed user id",
                    expected: n_users,
                    got: i,
                });
            }
            match assigned[i] {
                None => assigned[i] = Some(k),
                Some(cur) => {
                    if ctx.preference[k][i] > ctx.preference[cur][i] {
                        assigned[i] = Some(k);
                    }
                }
            }
        }
    }

    let mut assoc: Vec<Vec<usize>> = vec![Vec::new(); n_uavs];
    for (i, a) in assigned.iter().enumerate() {
        if let Some(k) = a {
            assoc[*k].push(i);
        }
    }

    let caches: Vec<CachePlan> = assoc
        .iter()
        .map(|users| {
            plan_cache(
                users,
                ctx.predicted,
                ctx.request_weight,
                ctx.cache_size,
                ctx.n_contents,
            )
        })
        .collect::<Result<_>>()?;

    let mut hit = vec![false; n_users];
    let mut cache_hits = 0usize;
    let mut fronthaul_users = 0usize;
    for i in 0..n_users {
        let (Some(k), Some(content)) = (assigned[i], ctx.requested[i]) else {
            continue;
        };
        if ctx.demands[i] <= 0.0 {
            continue;
        }
        if caches[k].contents.binary_search(&content).is_ok() {
            hit[i] = true;
            cache_hits += 1;
        } else {
            fronthaul_users += 1;
        }
    }

    let mut plans = Vec::with_capacity(n_uavs);
    let mut stable_per_uav = Vec::with_capacity(n_uavs);
    let mut delivered = vec![0.0; n_users];
    for k in 0..n_uavs {
        let users = &assoc[k];
        let demands: Vec<f64> = users.iter().map(|&i| ctx.demands[i]).collect();
        let rl: Vec<f64> = users.iter().map(|&i| ctx.licensed_full[k][i]).collect();
        let ru: Vec<f64> = users.iter().map(|&i| ctx.unlicensed_full[k][i]).collect();
        let hits: Vec<bool> = users.iter().map(|&i| hit[i]).collect();
        let fronthaul_share = if fronthaul_users == 0 {
            f64::INFINITY
        } else {
            ctx.fronthaul_full[k] / fronthaul_users as f64
        };
        let req = requirement_vectors(&demands, &rl, &ru, fronthaul_share, &hits)?;
        let plan = algorithm1_allocate(&req, ctx.selection_cap)?;
        for (slot, &i) in users.iter().enumerate() {
            let eff = |direct: f64| {
                if hit[i] {
                    direct
                } else {
                    harmonic_composition(direct, fronthaul_share)
                }
            };
            delivered[i] =
                plan.licensed[slot] * eff(rl[slot]) + plan.unlicensed[slot] * eff(ru[slot]);
        }
        stable_per_uav.push(plan.stable_count);
        plans.push(plan);
    }
    let stable_total = stable_per_uav.iter().sum();

    Ok(JointOutcome {
        assigned,
        assoc,
        caches,
        plans,
        stable_per_uav,
        stable_total,
        cache_hits,
        fronthaul_users,
        delivered_bits: delivered,
    })
}

/// Random requirement instances for verification campaigns: physically
/// shaped (demand over randomized end-to-end rates), salted with zero
/// demands and dead links.
pub fn random_requirements(seed: u64, index: u64, max_users: usize) -> RequirementVectors {
    let mut rng = rng::stream(seed, STREAM_VERIFY, index);
    let n = rng.gen_range(1..=max_users.max(1));
    let demand_bits = 2.0e6;
    let mut demands = Vec::with_capacity(n);
    let mut rl = Vec::with_capacity(n);
    let mut ru = Vec::with_capacity(n);
    let mut hits = Vec::with_capacity(n);
    for _ in 0..n {
        demands.push(if rng.gen::<f64>() < 0.1 {
            0.0
        } else {
            demand_bits
        });
        // Rates spread over two decades around the demand, with occasional
        // dead links.
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            if rng.gen::<f64>() < 0.05 {
                0.0
            } else {
                demand_bits * 10f64.powf(rng.gen_range(-0.7..1.3))
            }
        };
        rl.push(draw(&mut rng));
        ru.push(draw(&mut rng));
        hits.push(rng.gen::<f64>() < 0.5);
    }
    let fronthaul = demand_bits * 10f64.powf(rng.gen_range(-0.5..2.0));
    requirement_vectors(&demands, &rl, &ru, fronthaul, &hits).expect("generated instance is valid")
}

/// One allocator-vs-oracle disagreement, serializable for inspection.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AllocationMismatch {
    pub instance: u64,
    pub u_req: Vec<f64>,
    pub e_req: Vec<f64>,
    pub algorithm_count: usize,
    pub oracle_count: usize,
    pub algorithm_case: String,
}

/// Aggregate result of an allocator verification campaign.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VerificationReport {
    pub instances: u64,
    pub both_fit_instances: u64,
    pub both_fit_exact: u64,
    pub traversal_instances: u64,
    pub traversal_exact: u64,
    pub mean_algorithm_candidates: f64,
    pub mean_oracle_assignments: f64,
    pub mismatches: Vec<AllocationMismatch>,
}

impl VerificationReport {
    pub fn traversal_match_rate(&self) -> f64 {
        if self.traversal_instances == 0 {
            1.0
        } else {
            self.traversal_exact as f64 / self.traversal_instances as f64
        }
    }
}

/// Runs `instances` random allocation problems through both routes.
pub fn verify_allocation(
    instances: u64,
    max_users: usize,
    seed: u64,
    parallel: bool,
) -> Result<VerificationReport> {
    if max_users > ORACLE_USER_CAP {
        return Err(SimError::InstanceTooLarge {
            what: "verification instance size",
            size: max_users as u64,
            cap: ORACLE_USER_CAP as u64,
        });
    }
    struct Cell {
        both_fit: bool,
        exact: bool,
        algorithm_candidates: u64,
        oracle_assignments: u64,
        mismatch: Option<AllocationMismatch>,
    }
    let cells = map_indexed(instances as usize, parallel, |i| -> Result<Cell> {
        let req = random_requirements(seed, i as u64, max_users);
        let plan = algorithm1_allocate(&req, DEFAULT_SELECTION_CAP)?;
        let oracle = allocation_oracle(&req)?;
        let exact = plan.stable_count == oracle.stable_count;
        let mismatch = if exact {
            None
        } else {
            Some(AllocationMismatch {
                instance: i as u64,
                u_req: req.u_req.clone(),
                e_req: req.e_req.clone(),
                algorithm_count: plan.stable_count,
                oracle_count: oracle.stable_count,
                algorithm_case: format!("{:?}", plan.case),
            })
        };
        Ok(Cell {
            both_fit: plan.case == AllocationCase::BothFit,
            exact,
            algorithm_candidates: plan.candidates_examined,
            oracle_assignments: oracle.assignments_examined,
            mismatch,
        })
    });
    let mut report = VerificationReport {
        instances,
        both_fit_instances: 0,
        both_fit_exact: 0,
        traversal_instances: 0,
        traversal_exact: 0,
        mean_algorithm_candidates: 0.0,
        mean_oracle_assignments: 0.0,
        mismatches: Vec::new(),
    };
    for cell in cells {
        let cell = cell?;
        if cell.both_fit {
            report.both_fit_instances += 1;
            if cell.exact {
                report.both_fit_exact += 1;
            }
        } else {
            report.traversal_instances += 1;
            if cell.exact {
                report.traversal_exact += 1;
            }
        }
        report.mean_algorithm_candidates += cell.algorithm_candidates as f64;
        report.mean_oracle_assignments += cell.oracle_assignments as f64;
        if let Some(m) = cell.mismatch {
            report.mismatches.push(m);
        }
    }
    let n = instances.max(1) as f64;
    report.mean_algorithm_candidates /= n;
    report.mean_oracle_assignments /= n;
    Ok(report)
}
