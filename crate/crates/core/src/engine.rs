//! Synchronous-round CEMA engine.
//!
//! A round reads the state of round `k` and produces round `k+1`:
//!
//! 1. `λ(k+1) = W·λ(k) + η·ξ(k)`
//! 2. every agent best-responds to its own `λ_i(k+1)`
//! 3. `ξ(k+1) = Q·ξ(k) + Δ`, where `Δ` is the change in the node's demand
//!    (consumers) or the negated change in net injection (generators)
//! 4. stop once `|ξ_i(k+1)| ≤ eps_m` and `|λ_i(k+1) − λ_i(k)| ≤ eps_l` everywhere.
//!
//! Because `Q` is column-stochastic and the state starts at `P = 0, ξ = 0`,
//! `Σ ξ_i(k)` equals the demand/supply mismatch of round `k`.

use alloc::vec::Vec;

use crate::error::EngineError;
use crate::graph::Matrix;
use crate::model::{ensure_valid, Agent, Dispatch, Scenario};
use crate::response::{consumer_response, generator_response_corrected, generator_response_original, lambda_init};

/// Surplus magnitude treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e9;

/// Generator update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variant {
    /// Generators minimize `C(P) − λ·P`.
    Original,
    /// Generators minimize `C(P) − λ·(P − B·P²)`.
    Corrected,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Corrected => "corrected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NodeState {
    pub lambda: f64,
    pub power: f64,
    pub surplus: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IterationRecord {
    pub k: usize,
    pub nodes: Vec<NodeState>,
    /// Demand minus net supply.
    pub mismatch: f64,
    pub lambda_spread: f64,
    pub max_abs_xi: f64,
}

impl IterationRecord {
    pub fn surplus_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.surplus).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Termination {
    ByTolerance,
    ByMaxIters,
    Diverged,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::ByTolerance => "by-tolerance",
            Termination::ByMaxIters => "by-max-iters",
            Termination::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Record every `trace_stride`-th round. Round 0 and the last round are always recorded.
    pub trace_stride: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { trace_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub variant: Variant,
    pub termination: Termination,
    /// Index of the last completed round.
    pub rounds: usize,
    pub trace: Vec<IterationRecord>,
    pub final_states: Vec<NodeState>,
}

impl RunResult {
    pub fn final_record(&self) -> &IterationRecord {
        self.trace.last().expect("trace always holds round 0")
    }

    pub fn power(&self) -> Vec<f64> {
        self.final_states.iter().map(|s| s.power).collect()
    }

    pub fn dispatch(&self, s: &Scenario) -> Dispatch {
        Dispatch::from_nodes(s, &self.power())
    }

    /// Mean of the final node prices.
    pub fn consensus_lambda(&self) -> f64 {
        let n = self.final_states.len() as f64;
        self.final_states.iter().map(|s| s.lambda).sum::<f64>() / n
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), EngineError> {
    if expected == got {
        Ok(())
    } else {
        Err(EngineError::Dimension { expected, got })
    }
}

/// `λ_i(k+1) = Σ_j w_ij λ_j(k) + η ξ_i(k)`.
pub fn lambda_step(lambda: &[f64], surplus: &[f64], w: &Matrix, eta: f64) -> Result<Vec<f64>, EngineError> {
    check_dim(w.n(), lambda.len())?;
    check_dim(w.n(), surplus.len())?;
    let mixed = w.mul_vec(lambda);
    Ok(mixed.iter().zip(surplus).map(|(m, xi)| m + eta * xi).collect())
}

/// Best response of every node to its new price.
pub fn power_step(s: &Scenario, variant: Variant, new_lambda: &[f64]) -> Result<Vec<f64>, EngineError> {
    check_dim(s.n(), new_lambda.len())?;
    s.agents()
        .into_iter()
        .zip(new_lambda)
        .map(|(agent, &lambda)| {
            let p = match (agent, variant) {
                (Agent::Generator(g), Variant::Original) => generator_response_original(g, lambda),
                (Agent::Generator(g), Variant::Corrected) => generator_response_corrected(g, lambda),
                (Agent::Consumer(c), _) => consumer_response(c, lambda),
            };
            p.map_err(EngineError::from)
        })
        .collect()
}

/// Mixes surpluses through `q` and adds each node's local change in imbalance.
pub fn surplus_step(
    s: &Scenario,
    q: &Matrix,
    surplus: &[f64],
    old_power: &[f64],
    new_power: &[f64],
) -> Result<Vec<f64>, EngineError> {
    let n = s.n();
    check_dim(n, q.n())?;
    check_dim(n, surplus.len())?;
    check_dim(n, old_power.len())?;
    check_dim(n, new_power.len())?;
    let mixed = q.mul_vec(surplus);
    Ok(s.agents()
        .into_iter()
        .enumerate()
        .map(|(i, agent)| match agent {
            Agent::Generator(g) => mixed[i] + g.net(old_power[i]) - g.net(new_power[i]),
            Agent::Consumer(_) => mixed[i] + new_power[i] - old_power[i],
        })
        .collect())
}

/// Demand minus net supply for a node-ordered power vector.
pub fn mismatch(s: &Scenario, power: &[f64]) -> f64 {
    let mut demand = 0.0;
    let mut supply = 0.0;
    for (agent, &p) in s.agents().into_iter().zip(power) {
        match agent {
            Agent::Generator(g) => supply += g.net(p),
            Agent::Consumer(_) => demand += p,
        }
    }
    demand - supply
}

/// Round-by-round state of one run.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    scenario: &'a Scenario,
    variant: Variant,
    k: usize,
    lambda: Vec<f64>,
    power: Vec<f64>,
    surplus: Vec<f64>,
    last_lambda_change: f64,
}

/// Outcome of a single round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    Converged,
    Diverged,
}

impl<'a> Engine<'a> {
    /// Initial state: `λ` from [`lambda_init`], `P = 0`, `ξ = 0`.
    pub fn new(scenario: &'a Scenario, variant: Variant) -> Result<Self, EngineError> {
        ensure_valid(scenario)?;
        let n = scenario.n();
        Ok(Self {
            scenario,
            variant,
            k: 0,
            lambda: scenario.agents().into_iter().map(lambda_init).collect(),
            power: alloc::vec![0.0; n],
            surplus: alloc::vec![0.0; n],
            last_lambda_change: f64::INFINITY,
        })
    }

    pub fn round(&self) -> usize {
        self.k
    }

    pub fn states(&self) -> Vec<NodeState> {
        self.lambda
            .iter()
            .zip(&self.power)
            .zip(&self.surplus)
            .map(|((&lambda, &power), &surplus)| NodeState { lambda, power, surplus })
            .collect()
    }

    pub fn record(&self) -> IterationRecord {
        let (lo, hi) =
            self.lambda.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)));
        IterationRecord {
            k: self.k,
            nodes: self.states(),
            mismatch: mismatch(self.scenario, &self.power),
            lambda_spread: hi - lo,
            max_abs_xi: self.surplus.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// Executes one synchronous round.
    pub fn step(&mut self) -> Result<Step, EngineError> {
        let s = self.scenario;
        let new_lambda = lambda_step(&self.lambda, &self.surplus, &s.weights.w, s.eta)?;
        if new_lambda.iter().any(|l| !l.is_finite()) {
            self.lambda = new_lambda;
            self.k += 1;
            return Ok(Step::Diverged);
        }
        let new_power = power_step(s, self.variant, &new_lambda)?;
        let new_surplus = surplus_step(s, &s.weights.q, &self.surplus, &self.power, &new_power)?;

        self.last_lambda_change = new_lambda.iter().zip(&self.lambda).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        self.lambda = new_lambda;
        self.power = new_power;
        self.surplus = new_surplus;
        self.k += 1;

        if self.surplus.iter().any(|x| !x.is_finite() || x.abs() > DIVERGENCE_BOUND) {
            return Ok(Step::Diverged);
        }
        let settled = self.surplus.iter().all(|x| x.abs() <= s.eps_m) && self.last_lambda_change <= s.eps_l;
        Ok(if settled { Step::Converged } else { Step::Continue })
    }
}

/// Runs with the default options (full trace).
pub fn run(s: &Scenario, variant: Variant) -> Result<RunResult, EngineError> {
    run_with(s, variant, &RunOptions::default())
}

pub fn run_with(s: &Scenario, variant: Variant, opts: &RunOptions) -> Result<RunResult, EngineError> {
    let stride = opts.trace_stride.max(1);
    let mut engine = Engine::new(s, variant)?;
    let mut trace = alloc::vec![engine.record()];
    let mut termination = Termination::ByMaxIters;
    while engine.round() < s.max_iters {
        let step = engine.step()?;
        let done = match step {
            Step::Continue => None,
            Step::Converged => Some(Termination::ByTolerance),
            Step::Diverged => Some(Termination::Diverged),
        };
        if done.is_some() || engine.round() % stride == 0 || engine.round() == s.max_iters {
            trace.push(engine.record());
        }
        if let Some(t) = done {
            termination = t;
            break;
        }
    }
    Ok(RunResult { variant, termination, rounds: engine.round(), trace, final_states: engine.states() })
}
