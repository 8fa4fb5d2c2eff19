//! KKT certification of a candidate dispatch and balance price.
//!
//! Bound multipliers are recovered from complementarity: a multiplier may be
//! nonzero only when its bound is active (within `tol`), it takes the value
//! that zeroes the stationarity residual, and it is clamped at zero. Whatever
//! the clamp cuts off stays in the stationarity residual.

use alloc::vec::Vec;

use crate::model::{Dispatch, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ActiveBound {
    Lower,
    Upper,
    /// Degenerate box with `p_min == p_max`.
    Both,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AgentKkt {
    pub power: f64,
    pub active: Option<ActiveBound>,
    /// Lower-bound multiplier.
    pub gamma: f64,
    /// Upper-bound multiplier.
    pub nu: f64,
    pub stationarity: f64,
    /// `γ·(p_min − P)`.
    pub lower_complementarity: f64,
    /// `ν·(P − p_max)`.
    pub upper_complementarity: f64,
    /// `P − p_min`; negative means the lower bound is violated.
    pub lower_slack: f64,
    /// `p_max − P`.
    pub upper_slack: f64,
}

impl AgentKkt {
    fn new(power: f64, p_min: f64, p_max: f64, gradient: f64, tol: f64) -> Self {
        let at_lower = (power - p_min).abs() <= tol;
        let at_upper = (p_max - power).abs() <= tol;
        let active = match (at_lower, at_upper) {
            (true, true) => Some(ActiveBound::Both),
            (true, false) => Some(ActiveBound::Lower),
            (false, true) => Some(ActiveBound::Upper),
            (false, false) => None,
        };
        // stationarity: gradient − γ + ν = 0
        let gamma = if at_lower { gradient.max(0.0) } else { 0.0 };
        let nu = if at_upper { (-gradient).max(0.0) } else { 0.0 };
        Self {
            power,
            active,
            gamma,
            nu,
            stationarity: gradient - gamma + nu,
            lower_complementarity: gamma * (p_min - power),
            upper_complementarity: nu * (power - p_max),
            lower_slack: power - p_min,
            upper_slack: p_max - power,
        }
    }

    pub fn max_residual(&self) -> f64 {
        [
            self.stationarity.abs(),
            self.lower_complementarity.abs(),
            self.upper_complementarity.abs(),
            (-self.lower_slack).max(0.0),
            (-self.upper_slack).max(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BalanceKkt {
    /// Demand minus net supply; must be `≤ 0`.
    pub mismatch: f64,
    /// `max(mismatch, 0)`.
    pub primal_violation: f64,
    /// `λ · mismatch`.
    pub complementarity: f64,
    /// `max(−λ, 0)`.
    pub dual_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KktReport {
    pub lambda: f64,
    pub generators: Vec<AgentKkt>,
    pub consumers: Vec<AgentKkt>,
    pub balance: BalanceKkt,
    pub max_residual: f64,
    pub tol: f64,
    pub certified: bool,
}

impl KktReport {
    pub fn generator_stationarity(&self) -> Vec<f64> {
        self.generators.iter().map(|g| g.stationarity).collect()
    }

    pub fn max_generator_stationarity(&self) -> f64 {
        self.generators.iter().fold(0.0, |m, g| m.max(g.stationarity.abs()))
    }
}

/// Evaluates the KKT system of the relaxation at `(dispatch, lambda)`.
///
/// Generator stationarity is `C'(P) − λ(1 − 2BP) − γ + ν`; consumer
/// stationarity is `λ − U'(P) − γ + ν`. Out-of-box powers are reported as
/// primal violations, never as errors.
pub fn kkt_check(s: &Scenario, dispatch: &Dispatch, lambda: f64, tol: f64) -> KktReport {
    let generators: Vec<AgentKkt> = s
        .generators
        .iter()
        .zip(&dispatch.generators)
        .map(|(g, &p)| {
            let gradient = g.marginal_cost(p) - lambda * (1.0 - 2.0 * g.loss * p);
            AgentKkt::new(p, g.p_min, g.p_max, gradient, tol)
        })
        .collect();
    let consumers: Vec<AgentKkt> = s
        .consumers
        .iter()
        .zip(&dispatch.consumers)
        .map(|(c, &p)| AgentKkt::new(p, c.p_min, c.p_max, lambda - c.marginal_utility(p), tol))
        .collect();

    let mismatch = dispatch.mismatch(s);
    let balance = BalanceKkt {
        mismatch,
        primal_violation: mismatch.max(0.0),
        complementarity: lambda * mismatch,
        dual_violation: (-lambda).max(0.0),
    };
    let max_residual = generators
        .iter()
        .chain(&consumers)
        .map(AgentKkt::max_residual)
        .chain([balance.primal_violation, balance.complementarity.abs(), balance.dual_violation])
        .fold(0.0, f64::max);
    KktReport { lambda, generators, consumers, balance, max_residual, tol, certified: max_residual <= tol }
}
