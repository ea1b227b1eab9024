use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use compl_core::aggregates::{tc_qc_aggregate, AggFn, AggregateQuery};
use compl_core::completeness::{qc_qc_bag, tc_qc_bag, tc_qc_set, tc_tc, weakest_precondition};
use compl_core::containment::{adversarial, contained, AdversarialKind, Cnf};
use compl_core::instance::{dimension_analysis, qc_qc_instance, tc_qc_instance, ValueStatus};
use compl_core::json::{dimension_json, error_json, render, verdict_json};
use compl_core::nulls::tc_qc_nulls;
use compl_core::parse::{parse_workspace, Workspace};
use compl_core::process::{design_time_verify, runtime_verify, runtime_verify_with_database, Qats};
use compl_core::{Error, Query, Regime, Result, Semantics, Sym, TcStatement, Verdict, Witness};

#[derive(Parser)]
#[command(name = "compl", about = "Completeness reasoning over partially complete databases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Workspace file (.cmpl)
    file: String,
    /// Print JSON (the default)
    #[arg(long, conflicts_with = "human")]
    json: bool,
    /// Print a short human-readable summary instead of JSON
    #[arg(long)]
    human: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemArg {
    Set,
    Bag,
}

impl From<SemArg> for Semantics {
    fn from(s: SemArg) -> Semantics {
        match s {
            SemArg::Set => Semantics::Set,
            SemArg::Bag => Semantics::Bag,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    None,
    Inc,
    Res,
    #[value(name = "3null")]
    ThreeNull,
    Amb,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "3unsat")]
    Unsat,
    #[value(name = "3sat")]
    Sat,
    ForallExists,
}

#[derive(Subcommand)]
enum Command {
    /// Is a query contained in a union of queries?
    CheckContainment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        query: String,
        /// Comma-separated container queries
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        union: Vec<String>,
    },
    /// Do the statements entail a table completeness statement?
    CheckTctc {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        statements: Option<Vec<String>>,
        #[arg(long)]
        goal: String,
    },
    /// Do the statements entail completeness of a query?
    CheckTcqc {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        statements: Option<Vec<String>>,
        #[arg(long)]
        query: String,
        #[arg(long, value_enum)]
        semantics: Option<SemArg>,
    },
    /// Does bag completeness of some queries entail that of another?
    CheckQcqcBag {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        premises: Vec<String>,
        #[arg(long)]
        query: String,
    },
    /// Completeness of an aggregate query.
    CheckAggregate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        statements: Option<Vec<String>>,
        #[arg(long)]
        query: String,
        #[arg(long = "fn")]
        func: String,
    },
    /// Completeness of a query given a concrete available database.
    CheckTcqcInstance {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        statements: Option<Vec<String>>,
        #[arg(long)]
        query: String,
        #[arg(long)]
        instance: String,
    },
    /// Query completeness entailment over a concrete available database.
    CheckQcqcInstance {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        premises: Vec<String>,
        #[arg(long)]
        query: String,
        #[arg(long)]
        instance: String,
    },
    /// Which values of some head variables have complete answers?
    DimensionAnalysis {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        statements: Option<Vec<String>>,
        #[arg(long)]
        query: String,
        #[arg(long)]
        instance: String,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<String>,
    },
    /// Query completeness with statements that project out attributes.
    CheckTcqcNulls {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        statements: Option<Vec<String>>,
        #[arg(long)]
        query: String,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long, value_enum)]
        semantics: Option<SemArg>,
    },
    /// Is a query complete at a state for every path leading there?
    VerifyDesign {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        state: String,
        #[arg(long)]
        query: String,
    },
    /// Is a query complete after a given path?
    VerifyRuntime {
        #[command(flatten)]
        common: Common,
        /// Comma-separated action labels from the initial state
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        path: Vec<String>,
        #[arg(long)]
        query: String,
        #[arg(long)]
        instance: Option<String>,
    },
    /// Print the weakest statements guaranteeing completeness of a query.
    WeakestPrecondition {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        query: String,
    },
    /// Print a random containment problem built from a propositional formula.
    GenAdversarial {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        vars: usize,
        #[arg(long, default_value_t = 6)]
        clauses: usize,
        /// Universally quantified variables (forall-exists only)
        #[arg(long, default_value_t = 2)]
        universals: usize,
    },
}

enum Output {
    Verdict(Verdict),
    Report(serde_json::Value, String),
}

fn load(path: &str) -> Result<Workspace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {path}: {e}")))?;
    parse_workspace(&text)
}

fn statements(ws: &Workspace, names: &Option<Vec<String>>) -> Result<Vec<TcStatement>> {
    match names {
        None => Ok(ws.statements.clone()),
        Some(ns) => ns.iter().filter(|n| !n.is_empty()).map(|n| ws.statement(n).cloned()).collect(),
    }
}

fn queries(ws: &Workspace, names: &[String]) -> Result<Vec<Query>> {
    names.iter().filter(|n| !n.is_empty()).map(|n| ws.query(n).cloned()).collect()
}

/// The semantics given on the command line, else the one of a `goal`
/// declaration for the query, else set semantics.
fn semantics(ws: &Workspace, q: &str, flag: Option<SemArg>) -> Semantics {
    match flag {
        Some(s) => s.into(),
        None => ws.goals.iter().find(|(_, g)| &**g == q).map_or(Semantics::Set, |(s, _)| *s),
    }
}

fn qats(ws: &Workspace) -> Result<&Qats> {
    ws.qats.as_ref().ok_or_else(|| Error::Invalid("the workspace declares no transition system".into()))
}

fn random_cnf(rng: &mut StdRng, vars: usize, clauses: usize, universals: usize) -> Cnf {
    let clauses = (0..clauses)
        .map(|_| {
            let len = rng.gen_range(1..=3.min(vars.max(1)));
            let mut picked: Vec<i32> = Vec::new();
            while picked.len() < len {
                let v = rng.gen_range(1..=vars) as i32;
                if picked.iter().all(|l| l.abs() != v) {
                    picked.push(if rng.gen_bool(0.5) { v } else { -v });
                }
            }
            picked
        })
        .collect();
    Cnf { vars, universals, clauses }
}

fn run(cmd: Command) -> Result<(Output, bool)> {
    let (out, human) = match cmd {
        Command::CheckContainment { common, query, union } => {
            let ws = load(&common.file)?;
            (Output::Verdict(contained(ws.query(&query)?, &queries(&ws, &union)?)?), common.human)
        }
        Command::CheckTctc { common, statements: s, goal } => {
            let ws = load(&common.file)?;
            (Output::Verdict(tc_tc(&statements(&ws, &s)?, ws.statement(&goal)?)?), common.human)
        }
        Command::CheckTcqc { common, statements: s, query, semantics: sem } => {
            let ws = load(&common.file)?;
            let cs = statements(&ws, &s)?;
            let q = ws.query(&query)?;
            let v = match semantics(&ws, &query, sem) {
                Semantics::Set => tc_qc_set(&cs, q)?,
                Semantics::Bag => tc_qc_bag(&cs, q)?,
            };
            (Output::Verdict(v), common.human)
        }
        Command::CheckQcqcBag { common, premises, query } => {
            let ws = load(&common.file)?;
            (Output::Verdict(qc_qc_bag(&queries(&ws, &premises)?, ws.query(&query)?)?), common.human)
        }
        Command::CheckAggregate { common, statements: s, query, func } => {
            let ws = load(&common.file)?;
            let f = AggFn::parse(&func).ok_or_else(|| Error::Invalid(format!("unknown aggregate function {func}")))?;
            let qa = AggregateQuery::new(ws.query(&query)?.clone(), f)?;
            (Output::Verdict(tc_qc_aggregate(&statements(&ws, &s)?, &qa)?), common.human)
        }
        Command::CheckTcqcInstance { common, statements: s, query, instance } => {
            let ws = load(&common.file)?;
            let v = tc_qc_instance(ws.instance(&instance)?, &statements(&ws, &s)?, ws.query(&query)?)?;
            (Output::Verdict(v), common.human)
        }
        Command::CheckQcqcInstance { common, premises, query, instance } => {
            let ws = load(&common.file)?;
            let v = qc_qc_instance(ws.instance(&instance)?, &queries(&ws, &premises)?, ws.query(&query)?)?;
            (Output::Verdict(v), common.human)
        }
        Command::DimensionAnalysis { common, statements: s, query, instance, dims } => {
            let ws = load(&common.file)?;
            let dims: Vec<Sym> = dims.iter().map(|d| Sym::from(d.as_str())).collect();
            let r = dimension_analysis(ws.instance(&instance)?, &statements(&ws, &s)?, ws.query(&query)?, &dims)?;
            let mut text = String::new();
            for (vals, st) in &r.per_value {
                let vals: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
                let st = match st {
                    ValueStatus::Complete => "complete",
                    ValueStatus::PossiblyIncomplete => "possibly incomplete",
                };
                text.push_str(&format!("{}: {st}\n", vals.join(", ")));
            }
            text.push_str(&format!("new values possible: {}\n", r.new_values_possible));
            (Output::Report(dimension_json(&r), text), common.human)
        }
        Command::CheckTcqcNulls { common, statements: s, query, regime, semantics: sem } => {
            let ws = load(&common.file)?;
            let regime = match regime {
                RegimeArg::None => Regime::NoNulls,
                RegimeArg::Inc => Regime::IncompleteFacts,
                RegimeArg::Res => Regime::RestrictedFacts,
                RegimeArg::ThreeNull => Regime::PartialFacts,
                RegimeArg::Amb => Regime::AmbiguousNulls,
            };
            let sem = semantics(&ws, &query, sem);
            let v = tc_qc_nulls(&statements(&ws, &s)?, ws.query(&query)?, regime, sem, &ws.keys)?;
            (Output::Verdict(v), common.human)
        }
        Command::VerifyDesign { common, state, query } => {
            let ws = load(&common.file)?;
            (Output::Verdict(design_time_verify(qats(&ws)?, &state, ws.query(&query)?)?), common.human)
        }
        Command::VerifyRuntime { common, path, query, instance } => {
            let ws = load(&common.file)?;
            let path: Vec<Sym> = path.iter().filter(|a| !a.is_empty()).map(|a| Sym::from(a.as_str())).collect();
            let v = match instance {
                Some(d) => runtime_verify_with_database(qats(&ws)?, &path, ws.query(&query)?, ws.instance(&d)?)?,
                None => runtime_verify(qats(&ws)?, &path, ws.query(&query)?)?,
            };
            (Output::Verdict(v), common.human)
        }
        Command::WeakestPrecondition { common, query } => {
            let ws = load(&common.file)?;
            let cs = weakest_precondition(ws.query(&query)?)?;
            let lines: Vec<String> = cs.iter().map(|c| format!("tc {} : {c}.", c.name)).collect();
            let text = lines.iter().map(|l| format!("{l}\n")).collect();
            (Output::Report(serde_json::json!({ "statements": lines }), text), common.human)
        }
        Command::GenAdversarial { kind, seed, vars, clauses, universals } => {
            let mut rng = StdRng::seed_from_u64(seed);
            let kind = match kind {
                KindArg::Unsat => AdversarialKind::Unsat,
                KindArg::Sat => AdversarialKind::Sat,
                KindArg::ForallExists => AdversarialKind::ForallExists,
            };
            let universals = if matches!(kind, AdversarialKind::ForallExists) { universals.min(vars) } else { 0 };
            if vars == 0 {
                return Err(Error::Invalid("need at least one variable".into()));
            }
            let cnf = random_cnf(&mut rng, vars, clauses, universals);
            let (q, union) = adversarial(kind, &cnf)?;
            let mut text = format!("query Containee{} :- {}.\n", head_text(&q), q.body);
            for (i, u) in union.iter().enumerate() {
                text.push_str(&format!("query Container{}{} :- {}.\n", i + 1, head_text(u), u.body));
            }
            print!("{text}");
            return Ok((Output::Report(serde_json::Value::Null, String::new()), true));
        }
    };
    Ok((out, human))
}

fn head_text(q: &Query) -> String {
    let args: Vec<String> = q.head.iter().map(|t| t.to_string()).collect();
    format!("({})", args.join(","))
}

fn human_verdict(v: &Verdict) -> String {
    let mut s = String::from(if v.holds { "holds\n" } else { "does not hold\n" });
    match &v.witness {
        Witness::Counterexample(idb) => {
            s.push_str(&format!("ideal: {}\navailable: {}\n", idb.ideal, idb.available));
        }
        Witness::TestDatabase { db, .. } => s.push_str(&format!("test database: {db}\n")),
        Witness::Development(d) => {
            s.push_str(&format!("failing action: {}\n", d.actions[d.failing_action]));
        }
        Witness::Sequence { actions, .. } => {
            let a: Vec<&str> = actions.iter().map(|a| &**a).collect();
            s.push_str(&format!("failing sequence: {}\n", a.join(",")));
        }
        _ => {}
    }
    for n in &v.notes {
        s.push_str(&format!("note: {n}\n"));
    }
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok((Output::Verdict(v), human)) => {
            if human {
                print!("{}", human_verdict(&v));
            } else {
                print!("{}", render(&verdict_json(&v)));
            }
            ExitCode::from(if v.holds { 0 } else { 1 })
        }
        Ok((Output::Report(j, text), human)) => {
            if human {
                print!("{text}");
            } else if !j.is_null() {
                print!("{}", render(&j));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", render(&error_json(&e)).trim_end());
            ExitCode::from(2)
        }
    }
}
