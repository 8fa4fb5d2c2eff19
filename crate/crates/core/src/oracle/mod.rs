//! Centralized ground truth for the convex relaxation
//!
//! ```text
//! min  Σ C_i(P_i) − Σ U_j(P_j)
//! s.t. Σ (P_i − B_i P_i²) ≥ Σ P_j,   boxes on every P
//! ```
//!
//! [`solve_centralized`] bisects on the balance price, [`kkt_check`]
//! certifies any candidate, and [`brute_force_reference`] is a grid-search
//! solver that shares no code path with the bisection.

mod brute;
mod kkt;

use alloc::vec::Vec;

pub use brute::brute_force_reference;
pub use kkt::{kkt_check, ActiveBound, AgentKkt, BalanceKkt, KktReport};

use crate::engine::Variant;
use crate::error::OracleError;
use crate::model::{check_feasibility_condition, ensure_valid, Dispatch, Scenario};
use crate::response::{consumer_response, generator_response_corrected};

/// Doublings allowed while searching for an upper price bracket.
const MAX_DOUBLINGS: usize = 64;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Solution {
    pub dispatch: Dispatch,
    pub lambda: f64,
    /// Total cost minus total utility.
    pub objective: f64,
    /// Net supply minus demand at `lambda`.
    pub balance_residual: f64,
    pub bracket_width: f64,
    pub iterations: usize,
}

/// Net supply minus demand when every agent best-responds to `lambda`
/// with the loss-aware generator rule. Nondecreasing in `lambda`.
pub fn supply_surplus(s: &Scenario, lambda: f64) -> Result<f64, OracleError> {
    Ok(-response_at(s, lambda)?.mismatch(s))
}

fn response_at(s: &Scenario, lambda: f64) -> Result<Dispatch, OracleError> {
    let generators =
        s.generators.iter().map(|g| generator_response_corrected(g, lambda)).collect::<Result<Vec<_>, _>>()?;
    let consumers = s.consumers.iter().map(|c| consumer_response(c, lambda)).collect::<Result<Vec<_>, _>>()?;
    Ok(Dispatch { generators, consumers })
}

/// Solves the relaxation by bisection on `λ ≥ 0`.
///
/// Returns `λ* = 0` when supply already covers demand at zero price.
/// Otherwise stops once the balance residual is within `tol` and the bracket
/// is narrower than `tol·max(1, λ)`. The upper end of the bracket is returned,
/// so the dispatch never has excess demand.
pub fn solve_centralized(s: &Scenario, tol: f64) -> Result<Solution, OracleError> {
    ensure_valid(s)?;
    let (holds, slack) = check_feasibility_condition(s);
    if !holds {
        return Err(OracleError::FeasibilityCondition { slack });
    }
    let max_supply: f64 = s.generators.iter().map(|g| g.net(g.p_max)).sum();
    let min_demand: f64 = s.consumers.iter().map(|c| c.p_min).sum();
    if max_supply < min_demand {
        return Err(OracleError::Infeasible { max_supply, min_demand });
    }

    let finish = |lambda: f64, width: f64, iterations: usize| -> Result<Solution, OracleError> {
        let dispatch = response_at(s, lambda)?;
        Ok(Solution {
            objective: dispatch.objective(s),
            balance_residual: -dispatch.mismatch(s),
            dispatch,
            lambda,
            bracket_width: width,
            iterations,
        })
    };

    if supply_surplus(s, 0.0)? >= 0.0 {
        return finish(0.0, 0.0, 0);
    }

    let mut hi = s
        .generators
        .iter()
        .map(|g| g.loss_adjusted_marginal_cost(g.p_max))
        .chain(s.consumers.iter().map(|c| c.w))
        .fold(1.0_f64, f64::max);
    let mut doublings = 0;
    while supply_surplus(s, hi)? < 0.0 {
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(OracleError::BracketFailure { lambda_hi: hi });
        }
        hi *= 2.0;
    }

    let mut lo = 0.0;
    let mut g_hi = supply_surplus(s, hi)?;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && !(g_hi <= tol && hi - lo <= tol * hi.max(1.0)) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = supply_surplus(s, mid)?;
        if g_mid >= 0.0 {
            hi = mid;
            g_hi = g_mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    finish(hi, hi - lo, iterations)
}

/// Price each generator's first-order condition implies at power `p`:
/// `2aP + b` for the original rule, `(2aP + b)/(1 − 2BP)` for the corrected one.
pub fn implied_prices(s: &Scenario, generator_power: &[f64], variant: Variant) -> Vec<f64> {
    s.generators
        .iter()
        .zip(generator_power)
        .map(|(g, &p)| match variant {
            Variant::Original => g.marginal_cost(p),
            Variant::Corrected => g.loss_adjusted_marginal_cost(p),
        })
        .collect()
}

/// `max − min` of a slice, zero when empty.
pub fn spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}
