//! Grid-search reference solver.
//!
//! Every generator except the last is enumerated on the grid
//! `p_min, p_min + h, …, p_max`. The last generator is then minimized over its
//! whole box by ternary search; for fixed other powers its reduced objective
//! `C(P) − V(S + net(P))` is convex because the best consumer value `V` is
//! concave and nondecreasing in supply and `net` is concave. Consumers share
//! the available net supply by a bisection on their common price.

use alloc::vec::Vec;

use crate::error::OracleError;
use crate::model::{ConsumerParams, Dispatch, GeneratorParams, Scenario};
use crate::response::consumer_response;

pub const MAX_GRID_GENERATORS: usize = 3;

const TERNARY_ITERS: usize = 200;
const BISECT_ITERS: usize = 200;

/// Consumer powers maximizing total utility with total demand at most `supply`.
/// `None` when even minimal demand exceeds it.
fn allocate(consumers: &[ConsumerParams], supply: f64) -> Option<Vec<f64>> {
    let floor: f64 = consumers.iter().map(|c| c.p_min).sum();
    if floor > supply {
        return None;
    }
    let at = |price: f64| -> Vec<f64> {
        consumers.iter().map(|c| consumer_response(c, price).expect("finite price")).collect()
    };
    let free = at(0.0);
    if free.iter().sum::<f64>() <= supply {
        return Some(free);
    }
    // at price max(w) every consumer sits at p_min
    let mut hi = consumers.iter().map(|c| c.w).fold(0.0, f64::max);
    let mut lo = 0.0;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid).iter().sum::<f64>() <= supply {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(at(hi))
}

fn utility(consumers: &[ConsumerParams], power: &[f64]) -> f64 {
    consumers.iter().zip(power).map(|(c, p)| c.utility(*p)).sum()
}

/// Smallest power in the box whose net injection reaches `target`.
fn min_power_for(g: &GeneratorParams, target: f64) -> Option<f64> {
    if g.net(g.p_max) < target {
        return None;
    }
    if g.net(g.p_min) >= target {
        return Some(g.p_min);
    }
    if g.loss == 0.0 {
        return Some(target);
    }
    let (mut lo, mut hi) = (g.p_min, g.p_max);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g.net(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

struct Candidate {
    last: f64,
    consumers: Vec<f64>,
    objective: f64,
}

/// Best power for the last generator given the net supply and cost of the others.
fn best_last(
    g: &GeneratorParams,
    consumers: &[ConsumerParams],
    other_supply: f64,
    other_cost: f64,
) -> Option<Candidate> {
    let floor: f64 = consumers.iter().map(|c| c.p_min).sum();
    let lo = min_power_for(g, floor - other_supply)?;
    let eval = |p: f64| -> Candidate {
        let alloc = allocate(consumers, other_supply + g.net(p)).expect("supply covers the demand floor");
        Candidate { last: p, objective: other_cost + g.cost(p) - utility(consumers, &alloc), consumers: alloc }
    };
    let (mut a, mut b) = (lo, g.p_max);
    for _ in 0..TERNARY_ITERS {
        if b - a <= 1e-12 * b.abs().max(1.0) {
            break;
        }
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if eval(m1).objective <= eval(m2).objective {
            b = m2;
        } else {
            a = m1;
        }
    }
    [eval(lo), eval(0.5 * (a + b)), eval(g.p_max)].into_iter().reduce(|best, c| {
        if c.objective < best.objective {
            c
        } else {
            best
        }
    })
}

fn grid(g: &GeneratorParams, step: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let mut k = 0usize;
    loop {
        let p = g.p_min + k as f64 * step;
        if p > g.p_max {
            break;
        }
        pts.push(p);
        k += 1;
    }
    if pts.last() != Some(&g.p_max) {
        pts.push(g.p_max);
    }
    pts
}

/// Grid-search optimum of the relaxation. Returns the dispatch and its
/// objective (total cost minus total utility).
///
/// Grid points are visited in lexicographic order and only a strictly better
/// objective replaces the incumbent, so ties go to the smallest grid point.
pub fn brute_force_reference(s: &Scenario, grid_step: f64) -> Result<(Dispatch, f64), OracleError> {
    let m = s.generators.len();
    if m == 0 || m > MAX_GRID_GENERATORS {
        return Err(OracleError::TooManyGenerators { max: MAX_GRID_GENERATORS, got: m });
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(OracleError::BadGridStep(grid_step));
    }
    let (last, gridded) = s.generators.split_last().expect("at least one generator");
    let axes: Vec<Vec<f64>> = gridded.iter().map(|g| grid(g, grid_step)).collect();

    let mut best: Option<(Vec<f64>, Candidate)> = None;
    let mut index = alloc::vec![0usize; axes.len()];
    loop {
        let point: Vec<f64> = index.iter().zip(&axes).map(|(&i, axis)| axis[i]).collect();
        let supply: f64 = gridded.iter().zip(&point).map(|(g, p)| g.net(*p)).sum();
        let cost: f64 = gridded.iter().zip(&point).map(|(g, p)| g.cost(*p)).sum();
        if let Some(c) = best_last(last, &s.consumers, supply, cost) {
            if best.as_ref().is_none_or(|(_, b)| c.objective < b.objective) {
                best = Some((point, c));
            }
        }
        // odometer over the grid, last axis fastest
        let mut d = axes.len();
        loop {
            if d == 0 {
                let (mut generators, cand) = best.ok_or(OracleError::NoFeasibleGridPoint)?;
                generators.push(cand.last);
                let dispatch = Dispatch { generators, consumers: cand.consumers };
                return Ok((dispatch, cand.objective));
            }
            d -= 1;
            index[d] += 1;
            if index[d] < axes[d].len() {
                break;
            }
            index[d] = 0;
        }
    }
}
