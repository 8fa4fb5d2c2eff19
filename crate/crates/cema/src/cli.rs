//! `cema` subcommands and their exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | invalid input, unreadable or unwritable file |
//! | 2 | no convergence, infeasible scenario, or uncertified candidate |
//! | 3 | `counterexample` on a lossless scenario: the variants coincide |
//! | 4 | `counterexample` converged but exhibited no contradiction |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cema_core::model::validate_scenario;
use cema_core::oracle::{kkt_check, solve_centralized};
use cema_core::{run_with, Dispatch, OracleError, RunOptions, Scenario, Termination, Variant};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::gen::generate;
use crate::report::{CounterexampleReport, RunSummary, Verdict};
use crate::scenario_file::{load_scenario, to_json, BUILTIN_TABLE1};
use crate::trace::{write_summary, write_trace};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_FAILED: u8 = 2;
pub const EXIT_COINCIDE: u8 = 3;
pub const EXIT_NO_CONTRADICTION: u8 = 4;

/// Residual bound for `solve` to report a certified optimum.
pub const SOLVE_KKT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "cema", version, about = "Consensus-based energy management simulator and verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the distributed iteration and write trace CSVs and a summary.
    Run(RunArgs),
    /// Solve the centralized problem and certify it.
    Solve(SolveArgs),
    /// Check the KKT conditions of a candidate dispatch and price.
    Kkt(KktArgs),
    /// Reproduce the contradiction between the original update and the optimum.
    Counterexample(CounterexampleArgs),
    /// Write a random valid, feasible scenario.
    GenScenario(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Original,
    Corrected,
    Both,
}

impl VariantArg {
    fn variants(self) -> &'static [Variant] {
        match self {
            VariantArg::Original => &[Variant::Original],
            VariantArg::Corrected => &[Variant::Corrected],
            VariantArg::Both => &[Variant::Original, Variant::Corrected],
        }
    }
}

#[derive(Debug, Args)]
pub struct Overrides {
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eps_m: Option<f64>,
    #[arg(long)]
    pub eps_l: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl Overrides {
    fn apply(&self, s: &mut Scenario) {
        if let Some(v) = self.eta {
            s.eta = v;
        }
        if let Some(v) = self.eps_m {
            s.eps_m = v;
        }
        if let Some(v) = self.eps_l {
            s.eps_l = v;
        }
        if let Some(v) = self.max_iters {
            s.max_iters = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario JSON file, or `table1` for the built-in benchmark.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "corrected")]
    pub variant: VariantArg,
    #[arg(long, default_value = "cema-out")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trace_stride: u64,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Print the solution and its KKT report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct KktArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Balance price of the candidate.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Candidate power of every node, in node order, comma-separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub power: Vec<f64>,
    #[arg(long, default_value_t = SOLVE_KKT_TOL)]
    pub tol: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, default_value = BUILTIN_TABLE1)]
    pub scenario: PathBuf,
    /// Text report path; a JSON sidecar is written next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub generators: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub consumers: u64,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli.command),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn execute(command: Command) -> u8 {
    match command {
        Command::Run(a) => cmd_run(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Kkt(a) => cmd_kkt(&a),
        Command::Counterexample(a) => cmd_counterexample(&a),
        Command::GenScenario(a) => cmd_gen_scenario(&a),
    }
}

/// Loads, overrides and validates, printing every problem to stderr.
fn load_valid(path: &Path, overrides: Option<&Overrides>) -> Option<Scenario> {
    let mut s = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return None;
        }
    };
    if let Some(o) = overrides {
        o.apply(&mut s);
    }
    let violations = validate_scenario(&s);
    if violations.is_empty() {
        return Some(s);
    }
    eprintln!("error: invalid scenario {}", path.display());
    for v in violations {
        match v.node {
            Some(i) => eprintln!("  node {i}: {}", v.message),
            None => eprintln!("  {}", v.message),
        }
    }
    None
}

fn write_file(path: &Path, contents: &[u8]) -> bool {
    match fs::write(path, contents) {
        Ok(()) => true,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", path.display());
            false
        }
    }
}

fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_run(a: &RunArgs) -> u8 {
    let Some(s) = load_valid(&a.scenario, Some(&a.overrides)) else {
        return EXIT_INVALID;
    };
    if let Err(e) = fs::create_dir_all(&a.output_dir) {
        eprintln!("error: cannot create {}: {e}", a.output_dir.display());
        return EXIT_INVALID;
    }
    let opts = RunOptions { trace_stride: a.trace_stride as usize };
    let mut all_converged = true;
    for &variant in a.variant.variants() {
        let r = run_with(&s, variant, &opts).expect("validated scenario runs");
        let name = variant.name();
        let mut trace = Vec::new();
        let mut summary_csv = Vec::new();
        write_trace(&mut trace, &s, &r).expect("writing to memory");
        write_summary(&mut summary_csv, &r).expect("writing to memory");
        let summary = RunSummary::new(&s, &r);
        let text = summary.to_text();
        let dir = &a.output_dir;
        let written = write_file(&dir.join(format!("trace_{name}.csv")), &trace)
            && write_file(&dir.join(format!("summary_{name}.csv")), &summary_csv)
            && write_file(&dir.join(format!("report_{name}.txt")), text.as_bytes())
            && write_file(&dir.join(format!("report_{name}.json")), to_json_string(&summary).as_bytes());
        if !written {
            return EXIT_INVALID;
        }
        print!("{text}");
        if a.variant == VariantArg::Both {
            println!();
        }
        all_converged &= r.termination == Termination::ByTolerance;
    }
    if all_converged {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn oracle_exit(e: &OracleError) -> u8 {
    eprintln!("error: {e}");
    match e {
        OracleError::Model(_) => EXIT_INVALID,
        _ => EXIT_FAILED,
    }
}

pub fn cmd_solve(a: &SolveArgs) -> u8 {
    let Some(s) = load_valid(&a.scenario, None) else {
        return EXIT_INVALID;
    };
    let sol = match solve_centralized(&s, crate::report::ORACLE_TOL) {
        Ok(sol) => sol,
        Err(e) => return oracle_exit(&e),
    };
    let kkt = kkt_check(&s, &sol.dispatch, sol.lambda, SOLVE_KKT_TOL);
    if a.json {
        #[derive(Serialize)]
        struct Out<'a> {
            solution: &'a cema_core::oracle::Solution,
            kkt: &'a cema_core::KktReport,
        }
        print!("{}", to_json_string(&Out { solution: &sol, kkt: &kkt }));
    } else {
        println!("lambda*: {:.9}", sol.lambda);
        for (i, p) in sol.dispatch.generators.iter().enumerate() {
            println!("generator {i}: P = {p:.9}");
        }
        for (j, p) in sol.dispatch.consumers.iter().enumerate() {
            println!("consumer {j}: P = {p:.9}");
        }
        println!("objective: {:.9}", sol.objective);
        println!("balance residual: {:.3e}", sol.balance_residual);
        println!("KKT max residual: {:.3e}", kkt.max_residual);
    }
    if kkt.max_residual <= SOLVE_KKT_TOL {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

pub fn cmd_kkt(a: &KktArgs) -> u8 {
    let Some(s) = load_valid(&a.scenario, None) else {
        return EXIT_INVALID;
    };
    if a.power.len() != s.n() {
        eprintln!("error: expected {} powers, got {}", s.n(), a.power.len());
        return EXIT_INVALID;
    }
    let report = kkt_check(&s, &Dispatch::from_nodes(&s, &a.power), a.lambda, a.tol);
    let json = to_json_string(&report);
    match &a.output {
        Some(path) => {
            if !write_file(path, json.as_bytes()) {
                return EXIT_INVALID;
            }
        }
        None => print!("{json}"),
    }
    if report.certified {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// `report.txt` gets `report.json`; a path already ending in `.json` gets `.sidecar.json` appended.
pub fn sidecar_path(report: &Path) -> PathBuf {
    let sidecar = report.with_extension("json");
    if sidecar == report {
        let mut s = report.as_os_str().to_owned();
        s.push(".sidecar.json");
        PathBuf::from(s)
    } else {
        sidecar
    }
}

pub fn cmd_counterexample(a: &CounterexampleArgs) -> u8 {
    let Some(s) = load_valid(&a.scenario, Some(&a.overrides)) else {
        return EXIT_INVALID;
    };
    let report = if s.all_lossless() {
        CounterexampleReport::coincide(&s)
    } else {
        let original = run_with(&s, Variant::Original, &RunOptions::default()).expect("validated scenario runs");
        let corrected = run_with(&s, Variant::Corrected, &RunOptions::default()).expect("validated scenario runs");
        CounterexampleReport::analyze(&s, &original, &corrected)
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = &a.report {
        if !(write_file(path, text.as_bytes()) && write_file(&sidecar_path(path), to_json_string(&report).as_bytes())) {
            return EXIT_INVALID;
        }
    }
    match report.verdict {
        Verdict::Contradiction => EXIT_OK,
        Verdict::NotConverged => {
            eprintln!("error: {}", report.message);
            for v in [&report.original, &report.corrected].into_iter().flatten() {
                eprintln!(
                    "  {}: {} after {} rounds, lambda {:.6e}",
                    v.variant.name(),
                    v.termination.name(),
                    v.rounds,
                    v.lambda
                );
            }
            EXIT_FAILED
        }
        Verdict::VariantsCoincide => EXIT_COINCIDE,
        Verdict::NoContradiction => EXIT_NO_CONTRADICTION,
    }
}

pub fn cmd_gen_scenario(a: &GenArgs) -> u8 {
    let s = match generate(a.seed, a.generators as usize, a.consumers as usize) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let json = to_json(&s);
    match &a.output {
        Some(path) => {
            if !write_file(path, json.as_bytes()) {
                return EXIT_INVALID;
            }
        }
        None => {
            let _ = std::io::stdout().write_all(json.as_bytes());
        }
    }
    EXIT_OK
}
