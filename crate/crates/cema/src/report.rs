//! Run summaries and the counterexample report, as text and JSON.

use std::fmt::Write as _;

use cema_core::oracle::{implied_prices, kkt_check, solve_centralized, spread, Solution};
use cema_core::presets::{TABLE1_GENERATORS, TABLE1_REFERENCE_GENERATORS};
use cema_core::{Dispatch, OracleError, RunResult, Scenario, Termination, Variant};
use serde::Serialize;

/// Loss-adjusted prices of interior generators farther apart than this are
/// reported as disagreeing.
pub const PRICE_AGREEMENT_TOL: f64 = 1e-3;
/// Distance from a box bound below which a generator counts as clipped.
pub const INTERIOR_TOL: f64 = 1e-9;
pub const KKT_TOL: f64 = 1e-4;
pub const ORACLE_TOL: f64 = 1e-10;

pub const MIN_ORIGINAL_SPREAD: f64 = 0.1;
pub const MIN_ORIGINAL_RESIDUAL: f64 = 1e-2;
pub const MAX_CORRECTED_RESIDUAL: f64 = 1e-4;

pub const DISAGREE: &str = "implied generator prices disagree";
pub const COINCIDE: &str = "variants coincide; no contradiction";

fn interior_prices(s: &Scenario, d: &Dispatch) -> Vec<f64> {
    let prices = implied_prices(s, &d.generators, Variant::Corrected);
    s.generators
        .iter()
        .zip(&d.generators)
        .zip(prices)
        .filter(|((g, &p), _)| p - g.p_min > INTERIOR_TOL && g.p_max - p > INTERIOR_TOL)
        .map(|(_, price)| price)
        .collect()
}

/// Largest `|Σξ − mismatch|` over the recorded rounds after round 0.
pub fn max_conservation_error(r: &RunResult) -> f64 {
    r.trace.iter().skip(1).map(|rec| (rec.surplus_sum() - rec.mismatch).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub variant: Variant,
    pub termination: Termination,
    pub rounds: usize,
    pub final_lambda: Vec<f64>,
    pub final_power: Vec<f64>,
    pub mismatch: f64,
    pub lambda_spread: f64,
    pub max_abs_xi: f64,
    pub max_conservation_error: f64,
    /// `(2aP + b)/(1 − 2BP)` of every generator strictly inside its box.
    pub interior_loss_adjusted_prices: Vec<f64>,
    pub interior_price_spread: f64,
    pub diagnostic: Option<String>,
}

impl RunSummary {
    pub fn new(s: &Scenario, r: &RunResult) -> Self {
        let last = r.final_record();
        let prices = interior_prices(s, &r.dispatch(s));
        let price_spread = spread(&prices);
        Self {
            variant: r.variant,
            termination: r.termination,
            rounds: r.rounds,
            final_lambda: r.final_states.iter().map(|n| n.lambda).collect(),
            final_power: r.power(),
            mismatch: last.mismatch,
            lambda_spread: last.lambda_spread,
            max_abs_xi: last.max_abs_xi,
            max_conservation_error: max_conservation_error(r),
            interior_loss_adjusted_prices: prices,
            interior_price_spread: price_spread,
            diagnostic: (price_spread > PRICE_AGREEMENT_TOL).then(|| DISAGREE.to_string()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "variant:        {}", self.variant.name());
        let _ = writeln!(t, "terminated:     {}", self.termination.name());
        let _ = writeln!(t, "rounds:         {}", self.rounds);
        let _ = writeln!(t, "final lambda:   {}", fmt_list(&self.final_lambda));
        let _ = writeln!(t, "final P:        {}", fmt_list(&self.final_power));
        let _ = writeln!(t, "mismatch:       {:.3e} (|mismatch| {:.3e})", self.mismatch, self.mismatch.abs());
        let _ = writeln!(t, "lambda_spread:  {:.3e}", self.lambda_spread);
        let _ = writeln!(t, "max |xi|:       {:.3e}", self.max_abs_xi);
        let _ = writeln!(t, "conservation:   {:.3e}", self.max_conservation_error);
        let _ = writeln!(
            t,
            "loss-adjusted interior prices: {} (spread {:.3e})",
            fmt_list(&self.interior_loss_adjusted_prices),
            self.interior_price_spread
        );
        if let Some(d) = &self.diagnostic {
            let _ = writeln!(t, "DIAGNOSTIC: {d}");
        }
        t
    }
}

fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub lambda: f64,
    pub generators: Vec<f64>,
    pub consumers: Vec<f64>,
    pub objective: f64,
    pub kkt_max_residual: f64,
    /// Original-rule prices `2aP + b` at the optimum.
    pub raw_prices: Vec<f64>,
    pub raw_spread: f64,
}

/// Evaluation of the reference benchmark optimum, present when the scenario's
/// generators are the benchmark ones.
#[derive(Debug, Clone, Serialize)]
pub struct ReferencePoint {
    pub generators: Vec<f64>,
    pub raw_prices: Vec<f64>,
    pub raw_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantOutcome {
    pub variant: Variant,
    pub termination: Termination,
    pub rounds: usize,
    pub lambda: f64,
    pub generators: Vec<f64>,
    pub consumers: Vec<f64>,
    pub raw_prices: Vec<f64>,
    pub raw_spread: f64,
    pub loss_adjusted_prices: Vec<f64>,
    pub loss_adjusted_spread: f64,
    pub kkt_generator_stationarity: Vec<f64>,
    pub kkt_max_generator_stationarity: f64,
    pub kkt_max_residual: f64,
    pub max_conservation_error: f64,
}

impl VariantOutcome {
    pub fn new(s: &Scenario, r: &RunResult) -> Self {
        let d = r.dispatch(s);
        let lambda = r.consensus_lambda();
        let kkt = kkt_check(s, &d, lambda, KKT_TOL);
        let raw = implied_prices(s, &d.generators, Variant::Original);
        let adjusted = implied_prices(s, &d.generators, Variant::Corrected);
        Self {
            variant: r.variant,
            termination: r.termination,
            rounds: r.rounds,
            lambda,
            raw_spread: spread(&raw),
            raw_prices: raw,
            loss_adjusted_spread: spread(&adjusted),
            loss_adjusted_prices: adjusted,
            kkt_generator_stationarity: kkt.generator_stationarity(),
            kkt_max_generator_stationarity: kkt.max_generator_stationarity(),
            kkt_max_residual: kkt.max_residual,
            max_conservation_error: max_conservation_error(r),
            generators: d.generators,
            consumers: d.consumers,
        }
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::ByTolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Contradiction,
    NoContradiction,
    NotConverged,
    VariantsCoincide,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub verdict: Verdict,
    pub message: String,
    pub oracle: OracleSummary,
    pub reference_point: Option<ReferencePoint>,
    pub original: Option<VariantOutcome>,
    pub corrected: Option<VariantOutcome>,
}

fn oracle_summary(s: &Scenario, sol: &Solution) -> OracleSummary {
    let raw = implied_prices(s, &sol.dispatch.generators, Variant::Original);
    OracleSummary {
        lambda: sol.lambda,
        generators: sol.dispatch.generators.clone(),
        consumers: sol.dispatch.consumers.clone(),
        objective: sol.objective,
        kkt_max_residual: kkt_check(s, &sol.dispatch, sol.lambda, KKT_TOL).max_residual,
        raw_spread: spread(&raw),
        raw_prices: raw,
    }
}

fn reference_point(s: &Scenario) -> Option<ReferencePoint> {
    (s.generators == TABLE1_GENERATORS).then(|| {
        let raw = implied_prices(s, &TABLE1_REFERENCE_GENERATORS, Variant::Original);
        ReferencePoint { generators: TABLE1_REFERENCE_GENERATORS.to_vec(), raw_spread: spread(&raw), raw_prices: raw }
    })
}

impl CounterexampleReport {
    /// Report for a lossless scenario, where both updates are the same map.
    pub fn coincide(s: &Scenario) -> Result<Self, OracleError> {
        let sol = solve_centralized(s, ORACLE_TOL)?;
        Ok(Self {
            verdict: Verdict::VariantsCoincide,
            message: COINCIDE.to_string(),
            oracle: oracle_summary(s, &sol),
            reference_point: None,
            original: None,
            corrected: None,
        })
    }

    /// Compares both engine fixed points against the oracle.
    ///
    /// The contradiction needs all of: original-rule prices at the optimum
    /// spread by at least 0.1, loss-adjusted prices at the original fixed point
    /// spread by at least 0.1, a generator stationarity residual of at least
    /// 1e-2 at the original fixed point, and a corrected KKT residual of at
    /// most 1e-4.
    pub fn analyze(s: &Scenario, original: &RunResult, corrected: &RunResult) -> Result<Self, OracleError> {
        let sol = solve_centralized(s, ORACLE_TOL)?;
        let oracle = oracle_summary(s, &sol);
        let original = VariantOutcome::new(s, original);
        let corrected = VariantOutcome::new(s, corrected);

        let (verdict, message) = if !original.converged() || !corrected.converged() {
            let msg = format!(
                "not converged: original {} after {} rounds, corrected {} after {} rounds",
                original.termination.name(),
                original.rounds,
                corrected.termination.name(),
                corrected.rounds
            );
            (Verdict::NotConverged, msg)
        } else if oracle.raw_spread >= MIN_ORIGINAL_SPREAD
            && original.loss_adjusted_spread >= MIN_ORIGINAL_SPREAD
            && original.kkt_max_generator_stationarity >= MIN_ORIGINAL_RESIDUAL
            && corrected.kkt_max_residual <= MAX_CORRECTED_RESIDUAL
        {
            (Verdict::Contradiction, format!("contradiction exhibited; {DISAGREE} under the original update"))
        } else {
            (Verdict::NoContradiction, "no contradiction exhibited".to_string())
        };
        Ok(Self {
            verdict,
            message,
            oracle,
            reference_point: reference_point(s),
            original: Some(original),
            corrected: Some(corrected),
        })
    }

    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let o = &self.oracle;
        let _ = writeln!(t, "== centralized optimum ==");
        let _ = writeln!(t, "lambda*:    {:.9}", o.lambda);
        let _ = writeln!(t, "P* gen:     {}", fmt_list(&o.generators));
        let _ = writeln!(t, "P* cons:    {}", fmt_list(&o.consumers));
        let _ = writeln!(t, "objective:  {:.9}", o.objective);
        let _ = writeln!(t, "KKT max residual: {:.3e}", o.kkt_max_residual);
        let _ = writeln!(t, "original-rule prices at P*: {} (spread {:.4})", fmt_list(&o.raw_prices), o.raw_spread);
        if let Some(r) = &self.reference_point {
            let _ = writeln!(t, "\n== reference optimum ==");
            let _ = writeln!(t, "P gen:      {}", fmt_list(&r.generators));
            let prices: Vec<String> = r.raw_prices.iter().map(|p| format!("{p:.2}")).collect();
            let _ = writeln!(t, "original-rule prices: ({}) (spread {:.4})", prices.join(", "), r.raw_spread);
        }
        for v in [&self.original, &self.corrected].into_iter().flatten() {
            let _ = writeln!(t, "\n== {} update fixed point ==", v.variant.name());
            let _ = writeln!(t, "terminated: {} after {} rounds", v.termination.name(), v.rounds);
            let _ = writeln!(t, "lambda:     {:.9}", v.lambda);
            let _ = writeln!(t, "P gen:      {}", fmt_list(&v.generators));
            let _ = writeln!(t, "P cons:     {}", fmt_list(&v.consumers));
            let _ = writeln!(t, "original-rule prices:  {} (spread {:.4})", fmt_list(&v.raw_prices), v.raw_spread);
            let _ = writeln!(
                t,
                "loss-adjusted prices:  {} (spread {:.4})",
                fmt_list(&v.loss_adjusted_prices),
                v.loss_adjusted_spread
            );
            let stat: Vec<String> = v.kkt_generator_stationarity.iter().map(|r| format!("{r:.3e}")).collect();
            let _ = writeln!(t, "KKT generator stationarity: [{}]", stat.join(", "));
            let _ = writeln!(t, "KKT max residual: {:.3e}", v.kkt_max_residual);
            let _ = writeln!(t, "surplus conservation error: {:.3e}", v.max_conservation_error);
        }
        let _ = writeln!(t, "\nverdict: {}", self.message);
        t
    }
}
