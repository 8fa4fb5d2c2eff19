//! Exact minimizers of the per-agent subproblems solved every round.

use crate::error::ModelError;
use crate::model::{Agent, ConsumerParams, GeneratorParams};

fn check_price(lambda: f64) -> Result<(), ModelError> {
    if lambda.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinitePrice(lambda))
    }
}

/// `argmin_{P in box} C(P) − λ·P`, i.e. `clip((λ − b)/(2a))`.
pub fn generator_response_original(g: &GeneratorParams, lambda: f64) -> Result<f64, ModelError> {
    check_price(lambda)?;
    Ok(((lambda - g.b) / (2.0 * g.a)).clamp(g.p_min, g.p_max))
}

/// `argmin_{P in box} C(P) − λ·(P − B·P²)`.
///
/// The objective is `(a + λB)·P² + (b − λ)·P + c`. When `a + λB ≤ 0` (only
/// possible for negative prices) it is concave and the better endpoint wins,
/// with ties going to `p_min`.
pub fn generator_response_corrected(g: &GeneratorParams, lambda: f64) -> Result<f64, ModelError> {
    check_price(lambda)?;
    let curvature = g.a + lambda * g.loss;
    if curvature > 0.0 {
        return Ok(((lambda - g.b) / (2.0 * curvature)).clamp(g.p_min, g.p_max));
    }
    let f = |p: f64| curvature * p * p + (g.b - lambda) * p;
    Ok(if f(g.p_min) <= f(g.p_max) { g.p_min } else { g.p_max })
}

/// `argmin_{P in box} λ·P − U(P)` for the saturating utility.
///
/// Positive prices give `clip((w − λ)/(2α))`. At `λ = 0` every demand past
/// saturation is optimal and the smallest one is returned. Negative prices
/// push demand to `p_max`.
pub fn consumer_response(c: &ConsumerParams, lambda: f64) -> Result<f64, ModelError> {
    check_price(lambda)?;
    let p = if lambda > 0.0 {
        ((c.w - lambda) / (2.0 * c.alpha)).clamp(c.p_min, c.p_max)
    } else if lambda == 0.0 {
        c.saturation().clamp(c.p_min, c.p_max)
    } else {
        c.p_max
    };
    Ok(p)
}

/// Initial price: `C'(p_min)/(1 − 2B·p_min)` for generators, `U'(p_max)` for
/// consumers (zero on the flat branch).
pub fn lambda_init(agent: Agent<'_>) -> f64 {
    match agent {
        Agent::Generator(g) => g.loss_adjusted_marginal_cost(g.p_min),
        Agent::Consumer(c) => c.marginal_utility(c.p_max),
    }
}
