//! Seeded random scenarios with parameters in the benchmark's ranges.
//!
//! Draws are rejected until the scenario validates, satisfies the feasibility
//! condition, and has a strictly positive balance price.

use cema_core::graph::{build_uniform_weights, Digraph, NodeKind};
use cema_core::model::validate_scenario;
use cema_core::oracle::solve_centralized;
use cema_core::presets::{DEFAULT_EPS, DEFAULT_MAX_ITERS};
use cema_core::{check_feasibility_condition, ConsumerParams, GeneratorParams, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Attempts before giving up on a seed.
pub const MAX_DRAWS: usize = 10_000;

/// Surplus gain as a fraction of the inverse aggregate response slope.
pub const GAIN_FRACTION: f64 = 0.3;
pub const MAX_ETA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("need at least one generator and one consumer")]
    EmptySide,
    #[error("no acceptable scenario after {0} draws")]
    Exhausted(usize),
}

fn generator<R: Rng>(rng: &mut R) -> GeneratorParams {
    let p_min = rng.gen_range(20.0..60.0);
    GeneratorParams {
        a: rng.gen_range(0.002..0.006),
        b: rng.gen_range(4.0..6.0),
        c: rng.gen_range(20.0..35.0),
        loss: rng.gen_range(1e-4..4e-4),
        p_min,
        p_max: rng.gen_range(300.0..500.0),
    }
}

fn consumer<R: Rng>(rng: &mut R) -> ConsumerParams {
    let p_min = rng.gen_range(40.0..100.0);
    ConsumerParams {
        w: rng.gen_range(12.0..20.0),
        alpha: rng.gen_range(0.04..0.09),
        p_min,
        p_max: p_min + rng.gen_range(50.0..100.0),
    }
}

/// Surplus gain scaled to the aggregate response slope `Σ 1/(2a) + Σ 1/(2α)`.
pub fn default_eta(generators: &[GeneratorParams], consumers: &[ConsumerParams]) -> f64 {
    let slope: f64 =
        generators.iter().map(|g| 0.5 / g.a).sum::<f64>() + consumers.iter().map(|c| 0.5 / c.alpha).sum::<f64>();
    (GAIN_FRACTION / slope).min(MAX_ETA)
}

fn acceptable(s: &Scenario) -> bool {
    validate_scenario(s).is_empty()
        && check_feasibility_condition(s).0
        && solve_centralized(s, 1e-10).is_ok_and(|sol| sol.lambda > 0.0)
}

/// Generators occupy the first nodes, consumers the rest, on a bidirectional
/// ring with uniform weights.
pub fn generate(seed: u64, n_generators: usize, n_consumers: usize) -> Result<Scenario, GenError> {
    if n_generators == 0 || n_consumers == 0 {
        return Err(GenError::EmptySide);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds: Vec<NodeKind> = std::iter::repeat_n(NodeKind::Generator, n_generators)
        .chain(std::iter::repeat_n(NodeKind::Consumer, n_consumers))
        .collect();
    let graph = Digraph::bidirectional_ring(kinds);
    let weights = build_uniform_weights(&graph).expect("a ring with self-loops is strongly connected");
    for _ in 0..MAX_DRAWS {
        let generators: Vec<_> = (0..n_generators).map(|_| generator(&mut rng)).collect();
        let consumers: Vec<_> = (0..n_consumers).map(|_| consumer(&mut rng)).collect();
        let s = Scenario {
            eta: default_eta(&generators, &consumers),
            generators,
            consumers,
            graph: graph.clone(),
            weights: weights.clone(),
            eps_m: DEFAULT_EPS,
            eps_l: DEFAULT_EPS,
            max_iters: DEFAULT_MAX_ITERS,
        };
        if acceptable(&s) {
            return Ok(s);
        }
    }
    Err(GenError::Exhausted(MAX_DRAWS))
}
