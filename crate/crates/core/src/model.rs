//! Agent parameters, scenarios and scenario validation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::ModelError;
use crate::graph::{Digraph, NodeKind, WeightMatrices};

/// Row/column sum tolerance for the mixing matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Quadratic cost `a·P² + b·P + c` with transmission loss `loss·P²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub loss: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl GeneratorParams {
    pub fn cost(&self, p: f64) -> f64 {
        self.a * p * p + self.b * p + self.c
    }

    pub fn marginal_cost(&self, p: f64) -> f64 {
        2.0 * self.a * p + self.b
    }

    /// `P - B·P²` without a box check. The engine evaluates this at `P = 0`.
    pub fn net(&self, p: f64) -> f64 {
        p - self.loss * p * p
    }

    /// Marginal cost divided by the marginal net injection `1 - 2BP`.
    pub fn loss_adjusted_marginal_cost(&self, p: f64) -> f64 {
        self.marginal_cost(p) / (1.0 - 2.0 * self.loss * p)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.p_min <= p && p <= self.p_max
    }
}

/// Saturating utility: `w·P - α·P²` up to `w/(2α)`, constant `w²/(4α)` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConsumerParams {
    pub w: f64,
    pub alpha: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl ConsumerParams {
    /// Demand at which the utility stops increasing.
    pub fn saturation(&self) -> f64 {
        self.w / (2.0 * self.alpha)
    }

    pub fn utility(&self, p: f64) -> f64 {
        if p <= self.saturation() {
            self.w * p - self.alpha * p * p
        } else {
            self.w * self.w / (4.0 * self.alpha)
        }
    }

    pub fn marginal_utility(&self, p: f64) -> f64 {
        if p <= self.saturation() {
            self.w - 2.0 * self.alpha * p
        } else {
            0.0
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.p_min <= p && p <= self.p_max
    }
}

/// Checked net injection `P - B·P²` for `P` inside the generator box.
pub fn net_injection(g: &GeneratorParams, p: f64) -> Result<f64, ModelError> {
    if !g.contains(p) {
        return Err(ModelError::OutOfBox { power: p, p_min: g.p_min, p_max: g.p_max });
    }
    Ok(g.net(p))
}

/// Power of every agent, split by kind, each in scenario order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dispatch {
    pub generators: Vec<f64>,
    pub consumers: Vec<f64>,
}

impl Dispatch {
    /// Splits a node-ordered vector by node kind.
    pub fn from_nodes(s: &Scenario, values: &[f64]) -> Self {
        Self {
            generators: s.generator_nodes().into_iter().map(|i| values[i]).collect(),
            consumers: s.consumer_nodes().into_iter().map(|i| values[i]).collect(),
        }
    }

    /// Inverse of [`Dispatch::from_nodes`].
    pub fn to_nodes(&self, s: &Scenario) -> Vec<f64> {
        let mut out = alloc::vec![0.0; s.n()];
        for (i, p) in s.generator_nodes().into_iter().zip(&self.generators) {
            out[i] = *p;
        }
        for (i, p) in s.consumer_nodes().into_iter().zip(&self.consumers) {
            out[i] = *p;
        }
        out
    }

    pub fn demand(&self) -> f64 {
        self.consumers.iter().sum()
    }

    /// `Σ (P − B·P²)` over generators.
    pub fn net_supply(&self, s: &Scenario) -> f64 {
        s.generators.iter().zip(&self.generators).map(|(g, p)| g.net(*p)).sum()
    }

    /// Demand minus net supply.
    pub fn mismatch(&self, s: &Scenario) -> f64 {
        self.demand() - self.net_supply(s)
    }

    /// Total cost minus total utility.
    pub fn objective(&self, s: &Scenario) -> f64 {
        let cost: f64 = s.generators.iter().zip(&self.generators).map(|(g, p)| g.cost(*p)).sum();
        let utility: f64 = s.consumers.iter().zip(&self.consumers).map(|(c, p)| c.utility(*p)).sum();
        cost - utility
    }
}

/// Parameters of a node, borrowed from its scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Agent<'a> {
    Generator(&'a GeneratorParams),
    Consumer(&'a ConsumerParams),
}

impl Agent<'_> {
    pub fn p_min(&self) -> f64 {
        match self {
            Agent::Generator(g) => g.p_min,
            Agent::Consumer(c) => c.p_min,
        }
    }

    pub fn p_max(&self) -> f64 {
        match self {
            Agent::Generator(g) => g.p_max,
            Agent::Consumer(c) => c.p_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub generators: Vec<GeneratorParams>,
    pub consumers: Vec<ConsumerParams>,
    pub graph: Digraph,
    pub weights: WeightMatrices,
    /// Surplus gain in the price update, `0 < eta < 1`.
    pub eta: f64,
    pub eps_m: f64,
    pub eps_l: f64,
    pub max_iters: usize,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Agents in node order. Generator nodes take `generators` in order, consumer
    /// nodes take `consumers` in order.
    ///
    /// Panics if the node kinds do not match the agent counts; call
    /// [`validate_scenario`] first.
    pub fn agents(&self) -> Vec<Agent<'_>> {
        let mut gens = self.generators.iter();
        let mut cons = self.consumers.iter();
        self.graph
            .kinds()
            .iter()
            .map(|k| match k {
                NodeKind::Generator => Agent::Generator(gens.next().expect("generator count")),
                NodeKind::Consumer => Agent::Consumer(cons.next().expect("consumer count")),
            })
            .collect()
    }

    /// Node index of every generator, in `generators` order.
    pub fn generator_nodes(&self) -> Vec<usize> {
        self.nodes_of(NodeKind::Generator)
    }

    pub fn consumer_nodes(&self) -> Vec<usize> {
        self.nodes_of(NodeKind::Consumer)
    }

    fn nodes_of(&self, kind: NodeKind) -> Vec<usize> {
        self.graph.kinds().iter().enumerate().filter(|(_, k)| **k == kind).map(|(i, _)| i).collect()
    }

    pub fn all_lossless(&self) -> bool {
        self.generators.iter().all(|g| g.loss == 0.0)
    }
}

/// Which invariant a [`Violation`] breaks. The declaration order is the report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Rule {
    NodeCount,
    KindCount,
    Eta,
    Tolerance,
    MaxIters,
    StronglyConnected,
    SelfLoop,
    NonFinite,
    Curvature,
    LossCoefficient,
    Bounds,
    LossBelowOutput,
    MonotoneNetInjection,
    UtilityIntercept,
    RowStochastic,
    ColumnStochastic,
    NegativeWeight,
    WeightSupport,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Violation {
    /// `None` for scenario-wide rules.
    pub node: Option<usize>,
    pub rule: Rule,
    pub message: String,
}

impl Violation {
    fn at(node: usize, rule: Rule, message: String) -> Self {
        Self { node: Some(node), rule, message }
    }

    fn global(rule: Rule, message: String) -> Self {
        Self { node: None, rule, message }
    }
}

/// Every broken scenario invariant, sorted by `(node, rule)` with scenario-wide
/// violations first. An empty result means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = s.graph.n();
    let kinds = s.graph.kinds();

    let expected = s.generators.len() + s.consumers.len();
    if n != expected {
        out.push(Violation::global(Rule::NodeCount, format!("graph has {n} nodes but scenario has {expected} agents")));
    }
    let n_gen = kinds.iter().filter(|k| **k == NodeKind::Generator).count();
    let n_con = kinds.len() - n_gen;
    if n_gen != s.generators.len() || n_con != s.consumers.len() {
        out.push(Violation::global(
            Rule::KindCount,
            format!(
                "node kinds list {n_gen} generators / {n_con} consumers, parameters list {} / {}",
                s.generators.len(),
                s.consumers.len()
            ),
        ));
    }
    if !(s.eta > 0.0 && s.eta < 1.0) {
        out.push(Violation::global(Rule::Eta, format!("eta = {} not in (0, 1)", s.eta)));
    }
    if !(s.eps_m > 0.0 && s.eps_m.is_finite() && s.eps_l > 0.0 && s.eps_l.is_finite()) {
        out.push(Violation::global(
            Rule::Tolerance,
            format!("tolerances must be positive (eps_m = {}, eps_l = {})", s.eps_m, s.eps_l),
        ));
    }
    if s.max_iters == 0 {
        out.push(Violation::global(Rule::MaxIters, "max_iters must be at least 1".into()));
    }
    if n == 0 {
        out.push(Violation::global(Rule::StronglyConnected, "graph has no nodes".into()));
    } else if !s.graph.is_strongly_connected() {
        out.push(Violation::global(
            Rule::StronglyConnected,
            format!("not strongly connected (unreachable nodes {:?})", s.graph.disconnected_nodes()),
        ));
    }

    for i in 0..n {
        if !s.graph.has_self_loop(i) {
            out.push(Violation::at(i, Rule::SelfLoop, format!("node {i} has no self-loop")));
        }
    }

    let agents_consistent = out.iter().all(|v| !matches!(v.rule, Rule::NodeCount | Rule::KindCount));
    if agents_consistent {
        for (i, agent) in s.agents().into_iter().enumerate() {
            match agent {
                Agent::Generator(g) => check_generator(i, g, &mut out),
                Agent::Consumer(c) => check_consumer(i, c, &mut out),
            }
        }
    }

    check_weights(s, &mut out);

    out.sort_by_key(|v| (v.node, v.rule));
    out
}

fn check_generator(i: usize, g: &GeneratorParams, out: &mut Vec<Violation>) {
    let fields = [g.a, g.b, g.c, g.loss, g.p_min, g.p_max];
    if fields.iter().any(|x| !x.is_finite()) {
        out.push(Violation::at(i, Rule::NonFinite, format!("generator {i} has a non-finite parameter")));
        return;
    }
    if g.a <= 0.0 {
        out.push(Violation::at(i, Rule::Curvature, format!("a = {} must be > 0", g.a)));
    }
    if g.loss < 0.0 {
        out.push(Violation::at(i, Rule::LossCoefficient, format!("B = {} must be >= 0", g.loss)));
    }
    if !(g.p_min > 0.0 && g.p_min <= g.p_max) {
        out.push(Violation::at(
            i,
            Rule::Bounds,
            format!("need 0 < p_min <= p_max (p_min = {}, p_max = {})", g.p_min, g.p_max),
        ));
    }
    if g.loss * g.p_max >= 1.0 {
        out.push(Violation::at(i, Rule::LossBelowOutput, format!("B·p_max = {} >= 1", g.loss * g.p_max)));
    }
    if 2.0 * g.loss * g.p_max >= 1.0 {
        out.push(Violation::at(
            i,
            Rule::MonotoneNetInjection,
            format!("2B·p_max ≥ 1 (2B·p_max = {})", 2.0 * g.loss * g.p_max),
        ));
    }
}

fn check_consumer(i: usize, c: &ConsumerParams, out: &mut Vec<Violation>) {
    let fields = [c.w, c.alpha, c.p_min, c.p_max];
    if fields.iter().any(|x| !x.is_finite()) {
        out.push(Violation::at(i, Rule::NonFinite, format!("consumer {i} has a non-finite parameter")));
        return;
    }
    if c.w <= 0.0 {
        out.push(Violation::at(i, Rule::UtilityIntercept, format!("w = {} must be > 0", c.w)));
    }
    if c.alpha <= 0.0 {
        out.push(Violation::at(i, Rule::Curvature, format!("alpha = {} must be > 0", c.alpha)));
    }
    if !(c.p_min > 0.0 && c.p_min <= c.p_max) {
        out.push(Violation::at(
            i,
            Rule::Bounds,
            format!("need 0 < p_min <= p_max (p_min = {}, p_max = {})", c.p_min, c.p_max),
        ));
    }
}

fn check_weights(s: &Scenario, out: &mut Vec<Violation>) {
    let n = s.graph.n();
    let (w, q) = (&s.weights.w, &s.weights.q);
    if w.n() != n || q.n() != n {
        out.push(Violation::global(
            Rule::WeightSupport,
            format!("weight matrices are {}x{} / {}x{}, graph has {n} nodes", w.n(), w.n(), q.n(), q.n()),
        ));
        return;
    }
    for i in 0..n {
        let r = w.row_sum(i);
        if (r - 1.0).abs() > STOCHASTIC_TOL {
            out.push(Violation::at(i, Rule::RowStochastic, format!("row {i} of W sums to {r}")));
        }
        let c = q.col_sum(i);
        if (c - 1.0).abs() > STOCHASTIC_TOL {
            out.push(Violation::at(i, Rule::ColumnStochastic, format!("column {i} of Q sums to {c}")));
        }
        for j in 0..n {
            for (name, m) in [("W", w), ("Q", q)] {
                let x = m[(i, j)];
                if x.is_nan() || x < 0.0 {
                    out.push(Violation::at(i, Rule::NegativeWeight, format!("{name}[{i}][{j}] = {x} is negative")));
                } else if x > 0.0 && i != j && !s.graph.has_edge(j, i) {
                    out.push(Violation::at(
                        i,
                        Rule::WeightSupport,
                        format!("{name}[{i}][{j}] > 0 but there is no edge {j} → {i}"),
                    ));
                }
            }
        }
    }
}

/// Validates and returns the scenario, or every violation as an error.
pub fn ensure_valid(s: &Scenario) -> Result<(), ModelError> {
    let v = validate_scenario(s);
    if v.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Invalid(v))
    }
}

/// Checks `Σ consumer p_max ≥ Σ generator (p_min − B·p_max²)` and returns
/// `(holds, lhs − rhs)`.
pub fn check_feasibility_condition(s: &Scenario) -> (bool, f64) {
    let lhs: f64 = s.consumers.iter().map(|c| c.p_max).sum();
    let rhs: f64 = s.generators.iter().map(|g| g.p_min - g.loss * g.p_max * g.p_max).sum();
    let slack = lhs - rhs;
    (slack >= 0.0, slack)
}
