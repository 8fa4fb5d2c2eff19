use std::path::Path;

use cema::scenario_file::{load_scenario, parse_scenario, to_json};
use cema_core::graph::{build_uniform_weights, Digraph, Matrix, NodeKind, WeightMatrices};
use cema_core::presets::table1;
use cema_core::{ConsumerParams, GeneratorParams, Scenario};
use proptest::prelude::*;

fn number() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

fn numbers(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(number(), n)
}

fn bits(s: &Scenario) -> Vec<u64> {
    let mut out = Vec::new();
    for g in &s.generators {
        out.extend([g.a, g.b, g.c, g.loss, g.p_min, g.p_max]);
    }
    for c in &s.consumers {
        out.extend([c.w, c.alpha, c.p_min, c.p_max]);
    }
    for m in [&s.weights.w, &s.weights.q] {
        out.extend(m.to_rows().into_iter().flatten());
    }
    out.extend([s.eta, s.eps_m, s.eps_l]);
    out.into_iter().map(f64::to_bits).collect()
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (1usize..4, 1usize..4, any::<bool>(), any::<usize>()).prop_flat_map(|(ng, nc, explicit, max_iters)| {
        let n = ng + nc;
        (numbers(6 * ng), numbers(4 * nc), numbers(2 * n * n), numbers(3)).prop_map(move |(g, c, w, scalars)| {
            let kinds: Vec<NodeKind> = std::iter::repeat_n(NodeKind::Generator, ng)
                .chain(std::iter::repeat_n(NodeKind::Consumer, nc))
                .collect();
            let graph = Digraph::bidirectional_ring(kinds);
            let weights = if explicit {
                let rows = |k: usize| -> Vec<Vec<f64>> {
                    w[k * n * n..(k + 1) * n * n].chunks(n).map(<[f64]>::to_vec).collect()
                };
                WeightMatrices { w: Matrix::from_rows(&rows(0)).unwrap(), q: Matrix::from_rows(&rows(1)).unwrap() }
            } else {
                build_uniform_weights(&graph).unwrap()
            };
            Scenario {
                generators: g
                    .chunks(6)
                    .map(|x| GeneratorParams { a: x[0], b: x[1], c: x[2], loss: x[3], p_min: x[4], p_max: x[5] })
                    .collect(),
                consumers: c
                    .chunks(4)
                    .map(|x| ConsumerParams { w: x[0], alpha: x[1], p_min: x[2], p_max: x[3] })
                    .collect(),
                graph,
                weights,
                eta: scalars[0],
                eps_m: scalars[1],
                eps_l: scalars[2],
                max_iters,
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialize_then_parse_is_identity(s in scenario()) {
        let parsed = parse_scenario(&to_json(&s)).unwrap();
        prop_assert_eq!(bits(&parsed), bits(&s));
        prop_assert_eq!(&parsed.graph, &s.graph);
        prop_assert_eq!(parsed.max_iters, s.max_iters);
        prop_assert_eq!(to_json(&parsed), to_json(&s));
    }
}

#[test]
fn shipped_table1_file_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/table1.json");
    assert_eq!(load_scenario(&path).unwrap(), table1());
}

#[test]
fn generated_scenario_round_trips() {
    let s = cema::gen::generate(7, 3, 2).unwrap();
    let json = to_json(&s);
    assert!(json.contains("\"weights\": \"uniform\""));
    assert_eq!(bits(&parse_scenario(&json).unwrap()), bits(&s));
}
