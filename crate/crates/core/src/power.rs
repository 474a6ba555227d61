//! Stage 1: closed-form optimal power allocation for fixed beams.
//!
//! With beams fixed, the decoding order is fixed and the sum rate is
//! maximized by spending the whole budget, pinning every user except the
//! strongest to its minimum rate exactly, and giving the strongest user
//! the remainder. [`allocate`] evaluates that solution with a backward
//! recursion from the weakest position; [`sum_rate_derivative`] and
//! [`improvement_shift`] expose the marginal-value and power-transfer
//! constructions that justify it, which the test suites probe directly.
//!
//! Infeasibility is a first-class result ([`Infeasible`]), not an
//! exception: the swarm consumes it as fitness negative infinity.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::error::Error as ModelError;
use crate::model::{stable_total, DecodingOrder, PowerAllocation};

/// Tolerance used when deciding whether a computed rate misses a minimum
/// rate (absorbs double-precision log arithmetic).
const RATE_TOL: f64 = 1e-12;

/// Why no power allocation can satisfy the constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Infeasible {
    /// The minimum rates of positions `1..K` need more than the budget.
    #[error("minimum rates exceed the power budget")]
    Budget,
    /// The residual power leaves the strongest user below its own
    /// minimum rate.
    #[error("residual power cannot satisfy the strongest user's minimum rate")]
    StrongestUserRate,
    /// A user with zero effective gain has a positive minimum rate.
    #[error("zero effective gain with a positive minimum rate")]
    NullChannel,
}

/// Per-user linear SINR targets `eta_k = 2^{r_k} - 1`, indexed by
/// original user.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTargets {
    min_rates: Vec<f64>,
    eta: Vec<f64>,
}

impl RateTargets {
    pub fn from_min_rates(min_rates: &[f64]) -> Result<Self, ModelError> {
        if min_rates.is_empty() {
            return Err(ModelError::InvalidConfig(
                "at least one minimum rate is required".into(),
            ));
        }
        if let Some(r) = min_rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "minimum rates must be nonnegative and finite, got {r}"
            )));
        }
        let eta = min_rates.iter().map(|r| r.exp2() - 1.0).collect();
        Ok(Self {
            min_rates: min_rates.to_vec(),
            eta,
        })
    }

    pub fn n_users(&self) -> usize {
        self.eta.len()
    }

    pub fn min_rates(&self) -> &[f64] {
        &self.min_rates
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// SINR target of original user `user`.
    pub fn eta_of(&self, user: usize) -> f64 {
        self.eta[user]
    }

    /// Minimum rate of original user `user`.
    pub fn min_rate_of(&self, user: usize) -> f64 {
        self.min_rates[user]
    }
}

/// Optimal power allocation for the given decoding order.
///
/// Targets are indexed by original user and permuted through the order
/// internally. Powers for positions `K-1` down to `1` come from the
/// backward recursion
///
/// ```text
/// p_k = eta_k / (eta_k + 1) * (P - sum_{m>k} p_m + noise / g_k)
/// ```
///
/// and the strongest position takes the exact remainder, so the returned
/// allocation spends the budget bit-exactly and meets every constrained
/// minimum rate with equality.
pub fn allocate(
    order: &DecodingOrder,
    targets: &RateTargets,
    total_power: f64,
    noise_power: f64,
) -> Result<PowerAllocation, Infeasible> {
    let k = order.n_users();
    assert_eq!(
        targets.n_users(),
        k,
        "targets must cover every user in the decoding order"
    );
    let gains = order.gains();
    let eta: Vec<f64> = order
        .permutation()
        .iter()
        .map(|&u| targets.eta_of(u))
        .collect();

    for position in 0..k {
        if gains[position] == 0.0 && eta[position] > 0.0 {
            return Err(Infeasible::NullChannel);
        }
    }

    let mut powers = vec![0.0; k];
    let mut spent = 0.0; // sum over positions below the current one
    for position in (1..k).rev() {
        if eta[position] > 0.0 {
            let headroom = total_power - spent + noise_power / gains[position];
            let p = eta[position] / (eta[position] + 1.0) * headroom;
            if p < 0.0 {
                return Err(Infeasible::Budget);
            }
            powers[position] = p;
        }
        spent += powers[position];
    }

    // Strongest position absorbs the residual; nudge it until the
    // weakest-up total reproduces the budget bit-exactly.
    let mut lead = total_power - spent;
    for _ in 0..4 {
        powers[0] = lead;
        let gap = total_power - stable_total(&powers);
        if gap == 0.0 {
            break;
        }
        lead += gap;
    }
    if powers[0] < 0.0 {
        return Err(Infeasible::Budget);
    }

    let lead_rate = (1.0 + gains[0] * powers[0] / noise_power).log2();
    let lead_target = targets.min_rate_of(order.user_at(0));
    if lead_rate + RATE_TOL < lead_target {
        return Err(Infeasible::StrongestUserRate);
    }

    Ok(PowerAllocation::new(powers, order.clone(), total_power)
        .expect("recursion output is nonnegative and within budget"))
}

/// Marginal sum rate when the user at `position` receives extra power at
/// the expense of the adjacent stronger position, all other powers fixed:
///
/// ```text
/// (g_k - g_{k-1}) * noise / ((g_k S + noise)(g_{k-1} S + noise) ln 2)
/// ```
///
/// with `S` the power sum over positions `0..position`. Never positive
/// when gains are sorted descending.
pub fn sum_rate_derivative(position: usize, alloc: &PowerAllocation, noise_power: f64) -> f64 {
    assert!(
        position >= 1 && position < alloc.order().n_users(),
        "position must name a constrained user (1..K)"
    );
    let gains = alloc.order().gains();
    let s: f64 = alloc.powers()[..position].iter().sum();
    let g = gains[position];
    let g_up = gains[position - 1];
    (g - g_up) * noise_power / ((g * s + noise_power) * (g_up * s + noise_power) * LN_2)
}

/// Transfer power from a user with rate slack to the adjacent stronger
/// position.
///
/// Requires the rate at `position` to strictly exceed that user's
/// minimum. Moves
///
/// ```text
/// delta = (S + g p - sqrt(2^r S (S + g p))) / g,   S = g * sum_{m<k} p_m + noise
/// ```
///
/// from `position` to `position - 1`, which halves the slack (the new
/// rate is the midpoint of the old rate and the minimum) and strictly
/// increases the sum rate while preserving every constraint.
pub fn improvement_shift(
    position: usize,
    alloc: &PowerAllocation,
    targets: &RateTargets,
    noise_power: f64,
) -> Result<PowerAllocation, ModelError> {
    assert!(
        position >= 1 && position < alloc.order().n_users(),
        "position must name a constrained user (1..K)"
    );
    let rate = alloc.user_rate(position, noise_power);
    let target = targets.min_rate_of(alloc.order().user_at(position));
    if !(rate > target) {
        return Err(ModelError::NoSlack {
            position,
            rate,
            target,
        });
    }

    let g = alloc.order().gains()[position];
    let p = alloc.powers()[position];
    let s = g * alloc.powers()[..position].iter().sum::<f64>() + noise_power;
    let received = s + g * p;
    let delta = (received - (target.exp2() * s * received).sqrt()) / g;
    debug_assert!(delta > 0.0, "slack implies a positive transfer");

    let mut powers = alloc.powers().to_vec();
    powers[position] -= delta;
    powers[position - 1] += delta;
    PowerAllocation::new(powers, alloc.order().clone(), alloc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DecodingOrder;
    use crate::rng::stream_rng;
    use crate::testkit::central_diff_sum_rate;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn order(gains: &[f64]) -> DecodingOrder {
        DecodingOrder::from_gains(gains).unwrap()
    }

    #[test]
    fn eta_mapping() {
        let t = RateTargets::from_min_rates(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.eta(), &[0.0, 1.0, 3.0]);
        assert!(RateTargets::from_min_rates(&[-1.0]).is_err());
    }

    #[test]
    fn single_user_gets_everything() {
        let t = RateTargets::from_min_rates(&[0.5]).unwrap();
        let alloc = allocate(&order(&[2.0]), &t, 7.0, 1.0).unwrap();
        assert_eq!(alloc.powers(), &[7.0]);
    }

    #[test]
    fn two_user_closed_form() {
        // g = [10, 1], noise 1, P = 10, r = [1, 1] -> p = [4.5, 5.5]
        let t = RateTargets::from_min_rates(&[1.0, 1.0]).unwrap();
        let alloc = allocate(&order(&[10.0, 1.0]), &t, 10.0, 1.0).unwrap();
        assert_relative_eq!(alloc.powers()[1], 5.5, max_relative = 1e-12);
        assert_relative_eq!(alloc.powers()[0], 4.5, max_relative = 1e-12);
        assert_relative_eq!(alloc.user_rate(1, 1.0), 1.0, epsilon = 1e-12);
        assert_eq!(alloc.total(), 10.0);
    }

    #[test]
    fn budget_infeasible() {
        let t = RateTargets::from_min_rates(&[0.0, 10.0]).unwrap();
        assert_eq!(
            allocate(&order(&[1.0, 1.0]), &t, 1.0, 1.0),
            Err(Infeasible::Budget)
        );
    }

    #[test]
    fn strongest_user_rate_infeasible() {
        // the weaker user's share fits, but the remainder cannot carry
        // the leader's own minimum rate
        let t = RateTargets::from_min_rates(&[10.0, 1.0]).unwrap();
        assert_eq!(
            allocate(&order(&[2.0, 1.0]), &t, 10.0, 1.0),
            Err(Infeasible::StrongestUserRate)
        );
    }

    #[test]
    fn null_channel_infeasible() {
        let t = RateTargets::from_min_rates(&[0.0, 1.0]).unwrap();
        assert_eq!(
            allocate(&order(&[1.0, 0.0]), &t, 1.0, 1.0),
            Err(Infeasible::NullChannel)
        );
        // zero gain with zero target is a legal degenerate case
        let t = RateTargets::from_min_rates(&[0.0, 0.0]).unwrap();
        let alloc = allocate(&order(&[1.0, 0.0]), &t, 1.0, 1.0).unwrap();
        assert_eq!(alloc.powers()[1], 0.0);
    }

    #[test]
    fn constrained_rates_are_tight_and_budget_exact() {
        let mut rng = stream_rng(5, &[1]);
        for _ in 0..200 {
            let k = rng.random_range(2..=4usize);
            let mut gains: Vec<f64> = (0..k)
                .map(|_| 10f64.powf(rng.random_range(-1.5..1.0)))
                .collect();
            gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let rates: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.5)).collect();
            let p = 10f64.powf(rng.random_range(1.0..3.5));
            let t = RateTargets::from_min_rates(&rates).unwrap();
            let Ok(alloc) = allocate(&order(&gains), &t, p, 1.0) else {
                continue;
            };
            assert_eq!(alloc.total(), p, "full budget must be spent exactly");
            for position in 1..k {
                assert_relative_eq!(
                    alloc.user_rate(position, 1.0),
                    rates[alloc.order().user_at(position)],
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn derivative_zero_for_equal_gains() {
        let alloc = PowerAllocation::new(vec![2.0, 1.0], order(&[3.0, 3.0]), 3.0).unwrap();
        assert_eq!(sum_rate_derivative(1, &alloc, 1.0), 0.0);
    }

    #[test]
    fn derivative_nonpositive_and_matches_central_difference() {
        let mut rng = stream_rng(5, &[2]);
        for _ in 0..100 {
            let k = rng.random_range(2..=4usize);
            let mut gains: Vec<f64> = (0..k)
                .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
                .collect();
            gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let powers: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..4.0)).collect();
            let total = powers.iter().sum::<f64>();
            let alloc = PowerAllocation::new(powers, order(&gains), total).unwrap();
            for position in 1..k {
                let closed = sum_rate_derivative(position, &alloc, 1.0);
                assert!(closed <= 0.0, "derivative must be nonpositive, got {closed}");
                let fd = central_diff_sum_rate(position, &alloc, 1.0);
                assert_relative_eq!(closed, fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn derivative_vanishes_with_noise() {
        let alloc = PowerAllocation::new(vec![2.0, 1.0], order(&[5.0, 1.0]), 3.0).unwrap();
        let d = sum_rate_derivative(1, &alloc, 1e-12);
        assert!(d.abs() < 1e-10);
    }

    #[test]
    fn shift_halves_the_slack_exactly() {
        // allocate against r2 = 1.5, then shift against a target one bit
        // lower: the new rate must sit exactly halfway
        let tight = RateTargets::from_min_rates(&[0.0, 1.5]).unwrap();
        let alloc = allocate(&order(&[10.0, 1.0]), &tight, 10.0, 1.0).unwrap();
        let relaxed = RateTargets::from_min_rates(&[0.0, 0.5]).unwrap();
        let shifted = improvement_shift(1, &alloc, &relaxed, 1.0).unwrap();
        assert_relative_eq!(shifted.user_rate(1, 1.0), 1.0, epsilon = 1e-9);
        assert!(shifted.sum_rate(1.0) > alloc.sum_rate(1.0));
        assert_relative_eq!(shifted.total(), alloc.total(), max_relative = 1e-12);
    }

    #[test]
    fn shift_requires_strict_slack() {
        let t = RateTargets::from_min_rates(&[0.0, 1.0]).unwrap();
        let alloc = allocate(&order(&[10.0, 1.0]), &t, 10.0, 1.0).unwrap();
        // rate is exactly at target: no slack to trade
        assert!(matches!(
            improvement_shift(1, &alloc, &t, 1.0),
            Err(ModelError::NoSlack { position: 1, .. })
        ));
    }

    #[test]
    fn shift_strictly_improves_random_instances() {
        let mut rng = stream_rng(5, &[3]);
        let mut tested = 0;
        while tested < 50 {
            let k = rng.random_range(2..=4usize);
            let mut gains: Vec<f64> = (0..k)
                .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
                .collect();
            gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let rates: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
            let t = RateTargets::from_min_rates(&rates).unwrap();
            let Ok(alloc) = allocate(&order(&gains), &t, 100.0, 1.0) else {
                continue;
            };
            let position = rng.random_range(1..k);
            let mut slack_rates = rates.clone();
            slack_rates[alloc.order().user_at(position)] -= rng.random_range(0.1..0.4);
            let slack = RateTargets::from_min_rates(&slack_rates).unwrap();
            let shifted = improvement_shift(position, &alloc, &slack, 1.0).unwrap();
            assert!(shifted.sum_rate(1.0) > alloc.sum_rate(1.0));
            let old = alloc.user_rate(position, 1.0);
            let target = slack.min_rate_of(alloc.order().user_at(position));
            assert_relative_eq!(
                shifted.user_rate(position, 1.0),
                (old + target) / 2.0,
                epsilon = 1e-9
            );
            tested += 1;
        }
    }
}
