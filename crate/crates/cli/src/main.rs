//! `shabound` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 incomplete factorization.

mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use shabound_core::arith::FactorBudget;
use shabound_core::bounds::{bound_report, theorem_budget, BoundInputs, BoundsError, FieldInvariants};
use shabound_core::descent::{character_matrix, sandwich_for_sets, DescentError};
use shabound_core::formats::{curve_from_str, point_from_str, poly_from_str};
use shabound_core::pipeline::{analyze, AnalyzeError};
use shabound_core::search::{scan, SearchConstraints, SearchError};

#[derive(Debug, Parser)]
#[command(name = "shabound", version)]
#[command(about = "Isogeny descent invariants and Selmer / Sha bounds for curves with a rational p-isogeny")]
struct Cli {
    /// Emit the JSON report instead of the text view.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Descent sets, character ranks, sandwiches and bounds for (E, P).
    Analyze {
        /// Coefficients [a1,a2,a3,a4,a6] as a JSON array.
        #[arg(long)]
        curve: String,
        /// Point as ["x","y"] with rational strings, or "O".
        #[arg(long)]
        point: String,
        #[arg(long)]
        p: u64,
        /// Kernel polynomial of a second p-isogeny on the input model, as a
        /// JSON coefficient array (constant term first).
        #[arg(long)]
        second_kernel: Option<String>,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Character matrix of T for given S1, S2.
    Matrix {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "", value_parser = parse_primes)]
        s1: PrimeList,
        #[arg(long, default_value = "", value_parser = parse_primes)]
        s2: PrimeList,
    },
    /// Lower and upper groups bracketing the Selmer group.
    Sandwich {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "", value_parser = parse_primes)]
        s1: PrimeList,
        #[arg(long, default_value = "", value_parser = parse_primes)]
        s2: PrimeList,
    },
    /// Evaluate the bound formulas, or the construction budget with --budget.
    Bounds(BoundsArgs),
    /// Construction budget for a target Sha dimension k.
    Budget {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        /// Degree of the auxiliary polynomial h.
        #[arg(long = "deg-h")]
        deg_h: u64,
    },
    /// Family scan with optional forced primes.
    Search {
        /// JSON file with search constraints; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads for fiber evaluation.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// Degree of the base field.
    #[arg(long, default_value_t = 1)]
    d: u64,
    /// p-rank of the class group.
    #[arg(long, default_value_t = 0)]
    cp: u64,
    #[arg(long)]
    totally_imaginary: bool,
    /// The base field contains the p-th roots of unity.
    #[arg(long)]
    zeta: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, default_value_t = 0)]
    s1: i64,
    #[arg(long, default_value_t = 0)]
    s2: i64,
    #[arg(long, default_value_t = 0)]
    m: i64,
    #[arg(long, default_value_t = 0)]
    mhat: i64,
    /// Ranks for a second isogeny; default to m and mhat.
    #[arg(long)]
    mpsi: Option<i64>,
    #[arg(long)]
    mpsihat: Option<i64>,
    /// Dimension of the phi-Selmer group fed to the Cassels interval.
    #[arg(long)]
    dim_phi: Option<i64>,
    /// Selmer sum for the Sha-from-sum bound.
    #[arg(long)]
    sum: Option<i64>,
    /// Rank used with --sum.
    #[arg(long)]
    r: Option<i64>,
    /// p,k,n,D: report the construction budget instead.
    #[arg(long, value_parser = parse_budget, conflicts_with_all = ["s1", "s2", "m", "mhat", "sum", "r"])]
    budget: Option<[u64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PrimeList(Vec<u64>);

fn parse_primes(s: &str) -> Result<PrimeList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|_| format!("{t:?} is not a nonnegative integer")))
        .collect::<Result<_, _>>()
        .map(PrimeList)
}

fn parse_budget(s: &str) -> Result<[u64; 4], String> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("{t:?} is not a nonnegative integer")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected p,k,n,D".to_string())
}

/// A failure with the exit code and the input field it concerns.
#[derive(Debug)]
struct Failure {
    code: u8,
    field: String,
    message: String,
}

impl Failure {
    fn input(field: &str, message: impl ToString) -> Self {
        Failure { code: 2, field: field.to_string(), message: message.to_string() }
    }
}

impl From<AnalyzeError> for Failure {
    fn from(e: AnalyzeError) -> Self {
        match e {
            AnalyzeError::Validation { field, message } => Failure { code: 2, field, message },
            AnalyzeError::Incomplete(inc) => {
                Failure { code: 3, field: "curve".into(), message: format!("incomplete factorization: {inc}") }
            }
        }
    }
}

fn field_invariants(f: &FieldArgs) -> Result<FieldInvariants, Failure> {
    FieldInvariants::new(f.d, f.cp, f.totally_imaginary, f.zeta).map_err(|e| Failure::input("field", e))
}

/// Names the list that holds the offending prime.
fn descent_failure(e: DescentError, s1: &[u64]) -> Failure {
    let field = match &e {
        DescentError::BadP(_) => "p",
        DescentError::NotPrime(q) | DescentError::AboveP(q) if s1.contains(q) => "s1",
        DescentError::Overlap(_) => "s1,s2",
        _ => "s2",
    };
    Failure::input(field, e)
}

fn bounds_failure(e: BoundsError) -> Failure {
    match e {
        BoundsError::BadP(_) => Failure::input("p", e),
        BoundsError::InvalidField(_) | BoundsError::HypothesisViolated(_) => Failure::input("field", e),
        _ => Failure::input("arguments", e),
    }
}

fn search_failure(e: SearchError) -> Failure {
    match e {
        SearchError::Incomplete(inc) => {
            Failure { code: 3, field: "config".into(), message: format!("incomplete factorization: {inc}") }
        }
        other => Failure::input("config", other),
    }
}

fn emit<T: Serialize>(value: &T, json: bool) -> Result<(), Failure> {
    let v = serde_json::to_value(value).map_err(|e| Failure::input("output", e))?;
    if json {
        println!("{}", serde_json::to_string_pretty(&v).expect("values serialize"));
    } else {
        print!("{}", render::text(&v));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let budget = FactorBudget::from_env();
    match cli.command {
        Command::Analyze { curve, point, p, second_kernel, field } => {
            let e = curve_from_str(&curve).map_err(|e| Failure::input("curve", e))?;
            let pt = point_from_str(&point).map_err(|e| Failure::input("point", e))?;
            let psi = second_kernel
                .map(|s| poly_from_str(&s))
                .transpose()
                .map_err(|e| Failure::input("second_kernel", e))?;
            let f = field_invariants(&field)?;
            let report = analyze(&e, &pt, p, psi.as_ref(), Some(f), budget)?;
            emit(&report, cli.json)
        }
        Command::Matrix { p, s1, s2 } => {
            let spec = character_matrix(p, &s1.0, &s2.0).map_err(|e| descent_failure(e, &s1.0))?;
            let rank = spec.matrix.rank();
            emit(&json!({ "spec": spec, "rank": rank.to_string() }), cli.json)
        }
        Command::Sandwich { p, s1, s2 } => {
            let sw = sandwich_for_sets(p, &s1.0, &s2.0).map_err(|e| descent_failure(e, &s1.0))?;
            emit(&sw, cli.json)
        }
        Command::Bounds(args) => {
            if let Some([p, k, n, deg_h]) = args.budget {
                let b = theorem_budget(p, k, n, deg_h).map_err(bounds_failure)?;
                return emit(&b, cli.json);
            }
            let f = field_invariants(&args.field)?;
            let inputs = BoundInputs {
                s1: args.s1,
                s2: args.s2,
                m: args.m,
                m_hat: args.mhat,
                m_psi: args.mpsi,
                m_psi_hat: args.mpsihat,
                dim_phi: args.dim_phi,
                selmer_sum: args.sum,
                rank: args.r,
            };
            emit(&bound_report(&f, &inputs).map_err(bounds_failure)?, cli.json)
        }
        Command::Budget { p, k, n, deg_h } => {
            emit(&theorem_budget(p, k, n, deg_h).map_err(bounds_failure)?, cli.json)
        }
        Command::Search { config, jobs } => {
            let constraints = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Failure::input("config", format!("{}: {e}", path.display())))?;
                    serde_json::from_str::<SearchConstraints>(&text).map_err(|e| Failure::input("config", e))?
                }
                None => SearchConstraints::default(),
            };
            constraints.validate().map_err(search_failure)?;
            eprintln!(
                "scanning p = {} up to parameter box {} on {} worker(s)",
                constraints.p,
                constraints.parameter_box,
                jobs.map_or_else(|| "default".to_string(), |j| j.to_string())
            );
            let report = scan(&constraints, jobs, budget).map_err(search_failure)?;
            eprintln!(
                "tried {}, kept {}, degenerate {}, filtered {}, incomplete {}",
                report.parameters_tried,
                report.rows.len(),
                report.degenerate,
                report.filtered_out,
                report.incomplete
            );
            emit(&report, cli.json)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if json {
                let payload = json!({ "error": { "field": f.field, "message": f.message, "exit_code": f.code.to_string() } });
                eprintln!("{}", serde_json::to_string_pretty(&payload).expect("values serialize"));
            } else {
                eprintln!("error: {}: {}", f.field, f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
