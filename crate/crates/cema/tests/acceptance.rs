//! Acceptance criteria. Each prints one `ACCEPTANCE <id> PASS|FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cema::gen::generate;
use cema_core::oracle::{brute_force_reference, implied_prices, kkt_check, solve_centralized, spread};
use cema_core::presets::{table1, TABLE1_REFERENCE_GENERATORS};
use cema_core::response::{consumer_response, generator_response_corrected, generator_response_original};
use cema_core::{
    run_with, ConsumerParams, GeneratorParams, NodeKind, RunOptions, RunResult, Scenario, Termination, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const RANDOM_SCENARIOS: u64 = 50;
const CRITERION3_ETA: f64 = 0.05;

fn verdict(id: &str, pass: bool, detail: &str) -> bool {
    println!("ACCEPTANCE {id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn cema() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cema"))
}

fn full_run(s: &Scenario, v: Variant) -> RunResult {
    run_with(s, v, &RunOptions { trace_stride: 1 }).unwrap()
}

fn criterion3_scenario() -> Scenario {
    let mut s = table1();
    s.eta = CRITERION3_ETA;
    s
}

fn random_scenario(seed: u64) -> Scenario {
    let generators = 1 + seed as usize % 3;
    let consumers = 1 + (seed as usize / 3) % 3;
    generate(seed, generators, consumers).unwrap()
}

fn c1_counterexample_reproduction() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("counterexample.txt");
    let start = Instant::now();
    let out = cema().args(["counterexample", "--report", report.to_str().unwrap()]).output().unwrap();
    let elapsed = start.elapsed();
    let code = out.status.code();

    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("counterexample.json")).unwrap()).unwrap();
    let printed: Vec<String> = v["reference_point"]["raw_prices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| format!("{:.2}", p.as_f64().unwrap()))
        .collect();
    let original_residual = v["original"]["kkt_max_generator_stationarity"].as_f64().unwrap();
    let corrected_residual = v["corrected"]["kkt_max_residual"].as_f64().unwrap();

    let pass = code == Some(0)
        && printed == ["5.95", "5.72"]
        && original_residual >= 1e-2
        && corrected_residual <= 1e-4
        && elapsed <= Duration::from_secs(30);
    let detail = format!(
        "exit {code:?}, prices at reference optimum ({}), original stationarity {original_residual:.3e}, \
         corrected KKT {corrected_residual:.3e}, {:.2}s",
        printed.join(", "),
        elapsed.as_secs_f64()
    );
    verdict("C1", pass, &detail)
}

fn c2_oracle_matches_reference_and_grid_optimum() -> bool {
    let s = table1();
    let sol = solve_centralized(&s, 1e-10).unwrap();
    let (grid, _) = brute_force_reference(&s, 0.05).unwrap();
    let reference =
        sol.dispatch.generators.iter().zip(TABLE1_REFERENCE_GENERATORS).map(|(p, r)| (p - r).abs()).fold(0.0, f64::max);
    let to_grid = sol.dispatch.generators.iter().zip(&grid.generators).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let pass = reference <= 1.5 && to_grid <= 0.1;
    let detail = format!(
        "oracle {:?}, grid {:?}, max gap to reference {reference:.4}, to grid {to_grid:.4}",
        sol.dispatch.generators, grid.generators
    );
    verdict("C2", pass, &detail)
}

fn consensus_claims(r: &RunResult) -> (bool, String) {
    let last = r.final_record();
    let pass = r.termination == Termination::ByTolerance
        && last.mismatch.abs() <= 1e-6
        && last.lambda_spread <= 1e-6
        && r.rounds <= 200_000;
    let detail = format!(
        "{} after {} rounds, |mismatch| {:.3e}, lambda_spread {:.3e}",
        r.termination.name(),
        r.rounds,
        last.mismatch.abs(),
        last.lambda_spread
    );
    (pass, detail)
}

/// Stated at a surplus gain of 0.05. On this scenario the linearized iteration
/// has spectral radius above 5 at that gain for any admissible weights, so the
/// run cannot settle.
fn c3_consensus_claims_at_stated_gain() -> bool {
    let s = criterion3_scenario();
    let r = full_run(&s, Variant::Corrected);
    let (pass, detail) = consensus_claims(&r);
    verdict("C3", pass, &format!("eta {}: {detail}", s.eta))
}

fn c3_consensus_claims_at_preset_gain() -> bool {
    let s = table1();
    let r = full_run(&s, Variant::Corrected);
    let (pass, detail) = consensus_claims(&r);
    verdict("C3-preset", pass, &format!("eta {}: {detail}", s.eta))
}

fn fixed_point_check(s: &Scenario) -> Result<(f64, f64), String> {
    let r = full_run(s, Variant::Corrected);
    if r.termination != Termination::ByTolerance {
        return Err(format!("{} after {} rounds", r.termination.name(), r.rounds));
    }
    let d = r.dispatch(s);
    let kkt = kkt_check(s, &d, r.consensus_lambda(), 1e-4);
    let interior: Vec<f64> = s
        .generators
        .iter()
        .zip(&d.generators)
        .zip(implied_prices(s, &d.generators, Variant::Corrected))
        .filter(|((g, &p), _)| p > g.p_min && p < g.p_max)
        .map(|(_, price)| price)
        .collect();
    Ok((kkt.max_residual, spread(&interior)))
}

fn c4_corrected_fixed_points_are_optimal() -> bool {
    let mut scenarios = vec![("table1".to_string(), table1())];
    scenarios.extend((0..RANDOM_SCENARIOS).map(|seed| (format!("seed {seed}"), random_scenario(seed))));
    let mut failures = Vec::new();
    let (mut worst_kkt, mut worst_spread) = (0.0_f64, 0.0_f64);
    for (label, s) in &scenarios {
        match fixed_point_check(s) {
            Ok((kkt, price_spread)) => {
                worst_kkt = worst_kkt.max(kkt);
                worst_spread = worst_spread.max(price_spread);
                if kkt > 1e-4 || price_spread > 1e-4 {
                    failures.push(format!("{label}: KKT {kkt:.3e}, spread {price_spread:.3e}"));
                }
            }
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }
    let detail = format!(
        "{} scenarios, worst KKT {worst_kkt:.3e}, worst interior price spread {worst_spread:.3e}, failures {failures:?}",
        scenarios.len()
    );
    verdict("C4", failures.is_empty(), &detail)
}

/// `Σξ(k)` against `Σ consumer P − Σ generator (P − B·P²)`, recomputed from the trace.
fn conservation_error(s: &Scenario, r: &RunResult) -> f64 {
    let mut worst = 0.0_f64;
    for rec in r.trace.iter().filter(|rec| rec.k >= 1) {
        let mut generators = s.generators.iter();
        let mut mismatch = 0.0;
        for (node, kind) in rec.nodes.iter().zip(s.graph.kinds()) {
            match kind {
                NodeKind::Consumer => mismatch += node.power,
                NodeKind::Generator => {
                    let g = generators.next().unwrap();
                    mismatch -= node.power - g.loss * node.power * node.power;
                }
            }
        }
        let xi: f64 = rec.nodes.iter().map(|n| n.surplus).sum();
        worst = worst.max((xi - mismatch).abs());
    }
    worst
}

fn c5_surplus_conservation() -> bool {
    let mut runs = vec![
        ("table1 original", table1(), Variant::Original),
        ("table1 corrected", table1(), Variant::Corrected),
        ("table1 eta 0.05 corrected", criterion3_scenario(), Variant::Corrected),
    ];
    for seed in 0..RANDOM_SCENARIOS {
        runs.push(("random corrected", random_scenario(seed), Variant::Corrected));
    }
    let mut worst = (0.0_f64, "");
    let mut rounds = 0;
    for (label, s, v) in &runs {
        let r = full_run(s, *v);
        rounds += r.rounds;
        let e = conservation_error(s, &r);
        if e > worst.0 {
            worst = (e, label);
        }
    }
    let detail = format!("{} runs, {rounds} rounds, worst error {:.3e} ({})", runs.len(), worst.0, worst.1);
    verdict("C5", worst.0 <= 1e-9, &detail)
}

// Double-double arithmetic for the reference minimizer: f64 alone cannot
// resolve a quadratic's argmin to 1e-7 when the curvature is small.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
struct Dd(f64, f64);

impl Dd {
    fn from(x: f64) -> Self {
        Dd(x, 0.0)
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    fn add(self, o: Dd) -> Dd {
        let Dd(s, e) = Dd::two_sum(self.0, o.0);
        let e = e + self.1 + o.1;
        Dd::two_sum(s, e)
    }

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p) + (self.0 * o.1 + self.1 * o.0);
        Dd::two_sum(p, e)
    }

    fn lt(self, o: Dd) -> bool {
        self.0 < o.0 || (self.0 == o.0 && self.1 < o.1)
    }
}

/// Golden-section search on `[lo, hi]` followed by a comparison with both
/// endpoints; the smallest objective wins, ties to the lower argument.
fn reference_argmin(lo: f64, hi: f64, f: impl Fn(f64) -> Dd) -> f64 {
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-12 * (1.0 + b.abs()) {
            break;
        }
        if fc.lt(fd) || fc == fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (lo, f(lo));
    for x in [mid, hi] {
        let fx = f(x);
        if fx.lt(best.1) {
            best = (x, fx);
        }
    }
    best.0
}

fn random_generator(rng: &mut ChaCha8Rng) -> GeneratorParams {
    let p_min = rng.gen_range(0.0..100.0);
    let p_max = p_min + rng.gen_range(1.0..500.0);
    GeneratorParams {
        a: rng.gen_range(0.001..0.01),
        b: rng.gen_range(1.0..10.0),
        c: rng.gen_range(0.0..50.0),
        loss: rng.gen_range(0.0..0.49) / p_max,
        p_min,
        p_max,
    }
}

fn random_consumer(rng: &mut ChaCha8Rng) -> ConsumerParams {
    let p_min = rng.gen_range(0.0..150.0);
    ConsumerParams {
        w: rng.gen_range(5.0..25.0),
        alpha: rng.gen_range(0.01..0.2),
        p_min,
        p_max: p_min + rng.gen_range(1.0..150.0),
    }
}

fn generator_cost(g: &GeneratorParams, p: Dd) -> Dd {
    Dd::from(g.a).mul(p).mul(p).add(Dd::from(g.b).mul(p)).add(Dd::from(g.c))
}

fn consumer_utility(c: &ConsumerParams, p: Dd) -> Dd {
    let saturation = c.w / (2.0 * c.alpha);
    let p = if p.0 > saturation { Dd::from(saturation) } else { p };
    Dd::from(c.w).mul(p).sub(Dd::from(c.alpha).mul(p).mul(p))
}

fn c6_best_responses_match_numerical_minimization() -> bool {
    const DRAWS: usize = 10_000;
    const TOL: f64 = 1e-7;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut worst_orig, mut worst_corr, mut worst_cons) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..DRAWS {
        let g = random_generator(&mut rng);
        let lambda: f64 = rng.gen_range(-20.0..40.0);
        let l = Dd::from(lambda);
        let original = reference_argmin(g.p_min, g.p_max, |p| generator_cost(&g, Dd::from(p)).sub(l.mul(Dd::from(p))));
        worst_orig = worst_orig.max((generator_response_original(&g, lambda).unwrap() - original).abs());
        let corrected = reference_argmin(g.p_min, g.p_max, |p| {
            let p = Dd::from(p);
            let net = p.sub(Dd::from(g.loss).mul(p).mul(p));
            generator_cost(&g, p).sub(l.mul(net))
        });
        worst_corr = worst_corr.max((generator_response_corrected(&g, lambda).unwrap() - corrected).abs());

        let c = random_consumer(&mut rng);
        let lambda: f64 = rng.gen_range(-5.0..30.0);
        let l = Dd::from(lambda);
        let consumer =
            reference_argmin(c.p_min, c.p_max, |p| l.mul(Dd::from(p)).sub(consumer_utility(&c, Dd::from(p))));
        worst_cons = worst_cons.max((consumer_response(&c, lambda).unwrap() - consumer).abs());
    }

    let mut reduction_mismatches = 0;
    for _ in 0..1_000 {
        let g = GeneratorParams { loss: 0.0, ..random_generator(&mut rng) };
        let lambda: f64 = rng.gen_range(-20.0..40.0);
        let a = generator_response_corrected(&g, lambda).unwrap();
        let b = generator_response_original(&g, lambda).unwrap();
        if a.to_bits() != b.to_bits() {
            reduction_mismatches += 1;
        }
    }

    let pass = worst_orig <= TOL && worst_corr <= TOL && worst_cons <= TOL && reduction_mismatches == 0;
    let detail = format!(
        "{DRAWS} draws each, worst |Δargmin| original {worst_orig:.2e}, corrected {worst_corr:.2e}, \
         consumer {worst_cons:.2e}; lossless reduction mismatches {reduction_mismatches}/1000"
    );
    verdict("C6", pass, &detail)
}

fn run_into(dir: &Path) -> bool {
    cema()
        .args(["run", "--scenario", "table1", "--variant", "both", "--output-dir", dir.to_str().unwrap()])
        .output()
        .unwrap()
        .status
        .success()
}

fn c7_identical_traces() -> bool {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ran = run_into(a.path()) && run_into(b.path());
    let files = ["trace_original.csv", "trace_corrected.csv", "summary_original.csv", "summary_corrected.csv"];
    let identical = files.iter().all(|f| fs::read(a.path().join(f)).unwrap() == fs::read(b.path().join(f)).unwrap());
    let bytes: u64 = files.iter().map(|f| fs::metadata(a.path().join(f)).unwrap().len()).sum();
    verdict("C7", ran && identical, &format!("{} files, {bytes} bytes compared", files.len()))
}

type Criterion = fn() -> bool;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("C1", c1_counterexample_reproduction),
        ("C2", c2_oracle_matches_reference_and_grid_optimum),
        ("C3", c3_consensus_claims_at_stated_gain),
        ("C3-preset", c3_consensus_claims_at_preset_gain),
        ("C4", c4_corrected_fixed_points_are_optimal),
        ("C5", c5_surplus_conservation),
        ("C6", c6_best_responses_match_numerical_minimization),
        ("C7", c7_identical_traces),
    ];
    let mut failed = Vec::new();
    for (id, criterion) in criteria {
        let pass = std::panic::catch_unwind(criterion).unwrap_or_else(|_| verdict(id, false, "panicked"));
        if !pass {
            failed.push(id);
        }
    }
    println!("ACCEPTANCE SUMMARY {}/{} passed, failed: {failed:?}", criteria.len() - failed.len(), criteria.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
