//! Built-in benchmark scenario: two generators and two consumers on a
//! four-node bidirectional ring.

use alloc::vec;

use crate::graph::{build_uniform_weights, Digraph, NodeKind};
use crate::model::{ConsumerParams, GeneratorParams, Scenario};

pub const TABLE1_GENERATORS: [GeneratorParams; 2] = [
    GeneratorParams { a: 0.0024, b: 5.56, c: 30.0, loss: 0.00021, p_min: 60.0, p_max: 339.69 },
    GeneratorParams { a: 0.0056, b: 4.32, c: 25.0, loss: 0.00031, p_min: 25.0, p_max: 479.10 },
];

pub const TABLE1_CONSUMERS: [ConsumerParams; 2] = [
    ConsumerParams { w: 18.43, alpha: 0.0545, p_min: 50.0, p_max: 100.34 },
    ConsumerParams { w: 13.17, alpha: 0.0877, p_min: 100.0, p_max: 159.13 },
];

/// Reference generator optimum for the benchmark, rounded to two decimals.
pub const TABLE1_REFERENCE_GENERATORS: [f64; 2] = [81.98, 124.80];

/// Surplus gain used by the preset. The linearized iteration is stable for
/// gains up to about 0.0037 on this scenario.
pub const TABLE1_ETA: f64 = 0.002;

pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 200_000;

/// Nodes 0 and 1 are the generators, 2 and 3 the consumers, connected by
/// `0 ↔ 1 ↔ 2 ↔ 3 ↔ 0` with self-loops and uniform weights.
pub fn ring4() -> Digraph {
    use NodeKind::*;
    Digraph::bidirectional_ring(vec![Generator, Generator, Consumer, Consumer])
}

pub fn table1() -> Scenario {
    let graph = ring4();
    let weights = build_uniform_weights(&graph).expect("ring4 is strongly connected with self-loops");
    Scenario {
        generators: TABLE1_GENERATORS.to_vec(),
        consumers: TABLE1_CONSUMERS.to_vec(),
        graph,
        weights,
        eta: TABLE1_ETA,
        eps_m: DEFAULT_EPS,
        eps_l: DEFAULT_EPS,
        max_iters: DEFAULT_MAX_ITERS,
    }
}
