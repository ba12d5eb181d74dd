//! Command-line interface. Boolean verdicts map onto exit codes: 0 yes,
//! 1 no, 2 usage or parse error, 3 budget exhausted with partial output.


use std::ffi::OsString;
use std::io::{IsTerminal, Read};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser as ClapParser, Subcommand};
use serde_json::{json, Value};

use crate::completeness::{is_complete, IncompleteDatabase, TCSet};
use crate::generalize::mcg;
use crate::oracle::{
    oracle_containment, oracle_entails_complete, oracle_specializations, EnumerationBounds,
};
use crate::parse::{parse_with_options, Document};
use crate::query::{contained, equivalent, evaluate, ConjunctiveQuery};
use crate::render::{presentable, NONE_MARKER};
use crate::specialize::{k_mcs, mcs_size_bound, Budget, Provenance};
use crate::term::{Atom, Term};

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(ClapParser)]
#[command(
    name = "cqc",
    about = "Completeness reasoning for conjunctive queries over partially complete databases",
    version
)]
struct Cli {
    /// Read the document from this file (default: stdin)
    #[arg(short = 'f', long, global = true)]
    file: Option<PathBuf>,

    /// Read the document from stdin
    #[arg(long, global = true, conflicts_with = "file")]
    stdin: bool,

    /// Emit structured JSON instead of text
    #[arg(long, global = true)]
    json: bool,

    /// Accept unsafe queries for inspection
    #[arg(long, global = true)]
    allow_unsafe: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a query is complete under the document's statements
    Check {
        #[arg(short = 'q', long = "query")]
        query: String,
    },
    /// Compute the minimal complete generalization, or report none
    Generalize {
        #[arg(short = 'q', long = "query")]
        query: String,
        /// Show the fixed-point iteration
        #[arg(long)]
        trace: bool,
        /// Minimize the returned query
        #[arg(long)]
        minimize_output: bool,
    },
    /// Compute the k-bounded maximal complete specializations
    Specialize {
        #[arg(short = 'q', long = "query")]
        query: String,
        #[arg(long)]
        k: usize,
        /// Cap on the number of extensions searched
        #[arg(long)]
        max_extensions: Option<usize>,
        /// Cap on the number of unifier candidates tried
        #[arg(long)]
        max_unifiers: Option<usize>,
        /// Wall-clock limit in seconds
        #[arg(long)]
        time_limit: Option<f64>,
        /// Report which extension and statements produced each query
        #[arg(long)]
        explain: bool,
    },
    /// Decide containment of the first query in the second
    Contains {
        #[arg(short = 'q')]
        query: String,
        #[arg(short = 'Q')]
        other: String,
    },
    /// Minimize a query
    Minimize {
        #[arg(short = 'q', long = "query")]
        query: String,
    },
    /// Evaluate a query over the facts of a data document
    Eval {
        #[arg(short = 'q', long = "query")]
        query: String,
        #[arg(long)]
        data: PathBuf,
    },
    /// Check statement satisfaction over an ideal/available pair
    Satisfies {
        #[arg(long)]
        ideal: PathBuf,
        #[arg(long)]
        available: PathBuf,
    },
    /// Report acyclicity, the specialization size bound and a suggested k
    Bound {
        #[arg(short = 'q', long = "query")]
        query: String,
    },
    /// Cross-check engine verdicts against the brute-force oracles
    Verify,
}

struct Output {
    exit_code: i32,
    text: String,
    json: Value,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.exit_code() == 0 { 0 } else { EXIT_USAGE };
        }
    };
    let start = Instant::now();
    match dispatch(&cli) {
        Ok(output) => {
            if cli.json {
                let mut value = output.json;
                if let Value::Object(map) = &mut value {
                    map.insert("elapsed_ms".into(), json!(start.elapsed().as_millis() as u64));
                }
                println!("{}", serde_json::to_string_pretty(&value).expect("valid json"));
            } else if !output.text.is_empty() {
                print!("{}", output.text);
            }
            output.exit_code
        }
        Err(message) => {
            eprintln!("error: {}", message);
            EXIT_USAGE
        }
    }
}

fn styled(text: &str, code: &str) -> String {
    let enabled = std::env::var("CQC_COLOR").map(|v| v != "0").unwrap_or(true)
        && std::io::stdout().is_terminal();
    if enabled {
        format!("\x1b[{}m{}\x1b[0m", code, text)
    } else {
        text.to_string()
    }
}

fn read_text(path: Option<&Path>) -> Result<String, String> {
    match path {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {}", path.display(), e)),
        None => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| format!("cannot read stdin: {}", e))?;
            Ok(text)
        }
    }
}

fn load_document(cli: &Cli) -> Result<Document, String> {
    let text = read_text(cli.file.as_deref())?;
    parse_with_options(&text, cli.allow_unsafe).map_err(|e| e.to_string())
}

fn load_document_from(path: &Path, allow_unsafe: bool) -> Result<Document, String> {
    let text = read_text(Some(path))?;
    parse_with_options(&text, allow_unsafe).map_err(|e| format!("{}: {}", path.display(), e))
}

fn find_query<'d>(doc: &'d Document, name: &str) -> Result<&'d ConjunctiveQuery, String> {
    doc.query(name).ok_or_else(|| {
        let known: Vec<&str> = doc.queries().iter().map(|q| q.name()).collect();
        format!("unknown query '{}' (document defines: {})", name, known.join(", "))
    })
}

fn json_term(term: &Term) -> Value {
    match term {
        Term::Variable(name) => json!({"kind": "variable", "name": name}),
        Term::Constant(name) => json!({"kind": "constant", "name": name}),
        Term::Frozen(name) => json!({"kind": "frozen", "name": name}),
    }
}

fn json_atom(atom: &Atom) -> Value {
    json!({
        "relation": atom.relation,
        "args": atom.args.iter().map(json_term).collect::<Vec<_>>(),
    })
}

fn json_query(q: &ConjunctiveQuery) -> Value {
    json!({
        "name": q.name(),
        "text": q.to_string(),
        "head": q.head().iter().map(json_term).collect::<Vec<_>>(),
        "body": q.body().iter().map(json_atom).collect::<Vec<_>>(),
    })
}

fn explain_line(doc: &Document, prov: &Provenance) -> String {
    let body = prov.source.body_atoms();
    let matches: Vec<String> = prov
        .choice
        .assignments
        .iter()
        .map(|a| {
            let label = doc.statements().statements()[a.statement]
                .label()
                .map(String::from)
                .unwrap_or_else(|| format!("#{}", a.statement + 1));
            format!("{} -> {}", body[a.body_atom], label)
        })
        .collect();
    if matches.is_empty() {
        format!("% extension size {}; empty body", prov.extension_size)
    } else {
        format!(
            "% extension size {}; matches: {}",
            prov.extension_size,
            matches.join(", ")
        )
    }
}

fn dispatch(cli: &Cli) -> Result<Output, String> {
    match &cli.command {
        Command::Check { query } => {
            let doc = load_document(cli)?;
            let q = find_query(&doc, query)?;
            let complete = is_complete(q, doc.statements()).map_err(|e| e.to_string())?;
            let verdict = if complete { "complete" } else { "incomplete" };
            Ok(Output {
                exit_code: if complete { EXIT_YES } else { EXIT_NO },
                text: format!(
                    "{}\n",
                    styled(verdict, if complete { "32" } else { "31" })
                ),
                json: json!({
                    "command": "check",
                    "verdict": verdict,
                    "budget_exhausted": false,
                }),
            })
        }
        Command::Generalize {
            query,
            trace,
            minimize_output,
        } => {
            let doc = load_document(cli)?;
            let q = find_query(&doc, query)?;
            let result = mcg(q, doc.statements()).map_err(|e| e.to_string())?;
            let mut text = String::new();
            let mut trace_json = Vec::new();
            if *trace {
                for step in &result.trace.steps {
                    let removed: Vec<String> =
                        step.removed.iter().map(|a| a.to_string()).collect();
                    text.push_str(&format!(
                        "step {}: removed [{}] -> {}\n",
                        step.iteration,
                        removed.join(", "),
                        step.query
                    ));
                    trace_json.push(json!({
                        "iteration": step.iteration,
                        "removed": step.removed.iter().map(json_atom).collect::<Vec<_>>(),
                        "query": json_query(&step.query),
                    }));
                }
            }
            let (exit_code, verdict, queries) = match result.mcg {
                Some(found) => {
                    let shown = if *minimize_output { found.minimize() } else { found };
                    text.push_str(&format!("{}\n", shown));
                    (EXIT_YES, "mcg", vec![shown])
                }
                None => {
                    text.push_str(&format!("{}\n", NONE_MARKER));
                    (EXIT_NO, "none", vec![])
                }
            };
            Ok(Output {
                exit_code,
                text,
                json: json!({
                    "command": "generalize",
                    "verdict": verdict,
                    "queries": queries.iter().map(json_query).collect::<Vec<_>>(),
                    "trace": trace_json,
                    "budget_exhausted": false,
                }),
            })
        }
        Command::Specialize {
            query,
            k,
            max_extensions,
            max_unifiers,
            time_limit,
            explain,
        } => {
            let doc = load_document(cli)?;
            let q = find_query(&doc, query)?;
            let budget = Budget {
                max_extensions: *max_extensions,
                max_unifiers: *max_unifiers,
                time_limit: time_limit.map(Duration::from_secs_f64),
            };
            let result = k_mcs(q, doc.statements(), *k, budget).map_err(|e| e.to_string())?;
            let known = q.variables();
            let mut text = String::new();
            let mut queries_json = Vec::new();
            for (found, prov) in result.queries.iter().zip(&result.provenance) {
                let shown = presentable(found, &known).with_name(q.name());
                text.push_str(&format!("{}\n", shown));
                let mut entry = json_query(&shown);
                if *explain {
                    text.push_str(&format!("  {}\n", explain_line(&doc, prov)));
                    if let Value::Object(map) = &mut entry {
                        map.insert("extension_size".into(), json!(prov.extension_size));
                    }
                }
                queries_json.push(entry);
            }
            if result.queries.is_empty() {
                text.push_str(&format!("{}\n", NONE_MARKER));
            }
            if result.budget_exhausted {
                text.push_str("budget exhausted; results are partial\n");
            }
            let exit_code = if result.budget_exhausted {
                EXIT_BUDGET
            } else if result.queries.is_empty() {
                EXIT_NO
            } else {
                EXIT_YES
            };
            Ok(Output {
                exit_code,
                text,
                json: json!({
                    "command": "specialize",
                    "queries": queries_json,
                    "pruned": result.pruned,
                    "budget_exhausted": result.budget_exhausted,
                }),
            })
        }
        Command::Contains { query, other } => {
            let doc = load_document(cli)?;
            let left = find_query(&doc, query)?;
            let right = find_query(&doc, other)?;
            let holds = contained(left, right).map_err(|e| e.to_string())?;
            let verdict = if holds { "yes" } else { "no" };
            Ok(Output {
                exit_code: if holds { EXIT_YES } else { EXIT_NO },
                text: format!("{}\n", styled(verdict, if holds { "32" } else { "31" })),
                json: json!({
                    "command": "contains",
                    "verdict": verdict,
                    "budget_exhausted": false,
                }),
            })
        }
        Command::Minimize { query } => {
            let doc = load_document(cli)?;
            let q = find_query(&doc, query)?;
            if !q.is_safe() {
                return Err(format!("query '{}' is unsafe and cannot be minimized", query));
            }
            let minimized = q.minimize();
            Ok(Output {
                exit_code: EXIT_YES,
                text: format!("{}\n", minimized),
                json: json!({
                    "command": "minimize",
                    "queries": [json_query(&minimized)],
                    "budget_exhausted": false,
                }),
            })
        }
        Command::Eval { query, data } => {
            let doc = load_document(cli)?;
            let q = find_query(&doc, query)?;
            let data_doc = load_document_from(data, false)?;
            for (relation, arity) in data_doc.schema() {
                if let Some(expected) = doc.schema().get(relation) {
                    if expected != arity {
                        return Err(format!(
                            "data file uses relation '{}' with arity {} but the document uses arity {}",
                            relation, arity, expected
                        ));
                    }
                }
            }
            let answers = evaluate(q, data_doc.facts()).map_err(|e| e.to_string())?;
            Ok(Output {
                exit_code: EXIT_YES,
                text: crate::render::render_answers(&answers),
                json: json!({
                    "command": "eval",
                    "answers": answers
                        .iter()
                        .map(|t| t.iter().map(json_term).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                    "budget_exhausted": false,
                }),
            })
        }
        Command::Satisfies { ideal, available } => {
            let doc = load_document(cli)?;
            let ideal_doc = load_document_from(ideal, false)?;
            let available_doc = load_document_from(available, false)?;
            let idb = IncompleteDatabase::new(
                ideal_doc.facts().clone(),
                available_doc.facts().clone(),
            )
            .map_err(|e| e.to_string())?;
            let mut text = String::new();
            let mut entries = Vec::new();
            let mut all = true;
            for stmt in doc.statements().iter() {
                let ok = idb.satisfies(stmt);
                all &= ok;
                let label = stmt.label().unwrap_or("?");
                let verdict = if ok { "satisfied" } else { "violated" };
                text.push_str(&format!("{} {} : {}\n", label, stmt, verdict));
                entries.push(json!({
                    "label": label,
                    "statement": stmt.to_string(),
                    "satisfied": ok,
                }));
            }
            let verdict = if all { "satisfied" } else { "violated" };
            text.push_str(&format!("{}\n", styled(verdict, if all { "32" } else { "31" })));
            Ok(Output {
                exit_code: if all { EXIT_YES } else { EXIT_NO },
                text,
                json: json!({
                    "command": "satisfies",
                    "verdict": verdict,
                    "statements": entries,
                    "budget_exhausted": false,
                }),
            })
        }
        Command::Bound { query } => {
            let doc = load_document(cli)?;
            let q = find_query(&doc, query)?;
            match mcs_size_bound(q, doc.statements()) {
                Ok(bound) => {
                    let suggested = bound
                        .suggested_k
                        .map(|k| k.to_string())
                        .unwrap_or_else(|| "none (no relations in the statements)".to_string());
                    Ok(Output {
                        exit_code: EXIT_YES,
                        text: format!(
                            "acyclic: yes\nbound: {}\nsuggested k: {}\n",
                            bound.bound, suggested
                        ),
                        json: json!({
                            "command": "bound",
                            "acyclic": true,
                            "bound": bound.bound as u64,
                            "suggested_k": bound.suggested_k.map(|k| k as u64),
                            "budget_exhausted": false,
                        }),
                    })
                }
                Err(crate::Error::CyclicTcs) => Ok(Output {
                    exit_code: EXIT_NO,
                    text: "acyclic: no\nno finite bound: the statement dependency graph is cyclic\n"
                        .to_string(),
                    json: json!({
                        "command": "bound",
                        "acyclic": false,
                        "budget_exhausted": false,
                    }),
                }),
                Err(other) => Err(other.to_string()),
            }
        }
        Command::Verify => verify(),
    }
}

const SCHOOL_DOC: &str = "\
q_ppb(N) :- pupil(N,C,S), school(S,primary,merano).
q_pbl(N) :- pupil(N,C,S), school(S,primary,merano), learns(N,L).
q_pbl_spec(N) :- pupil(N,C,S), school(S,primary,merano), learns(N,english).
complete school(S,primary,D).
complete pupil(N,C,S) ; school(S,T,merano).
complete learns(N,english) ; pupil(N,C,S), school(S,primary,D).
";

const CONN_DOC: &str = "\
q_conn(X) :- conn(X,Y).
q_self(X0) :- conn(X0,X0).
q_cyc2(X0) :- conn(X0,X1), conn(X1,X0).
complete conn(X,Y) ; conn(Y,Z).
";

/// Desk-scale oracle cross-checks over the built-in scenarios.
fn verify() -> Result<Output, String> {
    let school = parse_with_options(SCHOOL_DOC, false).map_err(|e| e.to_string())?;
    let conn = parse_with_options(CONN_DOC, false).map_err(|e| e.to_string())?;
    let school_two = TCSet::new(school.statements().statements()[..2].iter().cloned());

    let mut text = String::new();
    let mut entries = Vec::new();
    let mut all = true;
    let mut record = |name: &str, ok: bool, text: &mut String| {
        text.push_str(&format!("{} {}\n", if ok { "ok  " } else { "FAIL" }, name));
        entries.push(json!({"check": name, "ok": ok}));
        all &= ok;
    };

    {
        let q = school.query("q_ppb").unwrap();
        let bounds = EnumerationBounds::for_scenario(q, &school_two, 1, 1, 4);
        let engine = is_complete(q, &school_two).map_err(|e| e.to_string())?;
        let oracle = oracle_entails_complete(q, &school_two, &bounds)
            .map_err(|e| e.to_string())?;
        record(
            "completeness of the pupil query matches the oracle",
            engine && oracle.holds,
            &mut text,
        );
    }
    {
        let q = school.query("q_pbl").unwrap();
        let bounds = EnumerationBounds::for_scenario(q, school.statements(), 1, 1, 4);
        let engine = is_complete(q, school.statements()).map_err(|e| e.to_string())?;
        let oracle = oracle_entails_complete(q, school.statements(), &bounds)
            .map_err(|e| e.to_string())?;
        record(
            "incompleteness of the learner query matches the oracle",
            !engine && !oracle.holds && oracle.witness.is_some(),
            &mut text,
        );
    }
    {
        let q = school.query("q_pbl_spec").unwrap();
        let bounds = EnumerationBounds::for_scenario(q, school.statements(), 1, 1, 4);
        let engine = is_complete(q, school.statements()).map_err(|e| e.to_string())?;
        let oracle = oracle_entails_complete(q, school.statements(), &bounds)
            .map_err(|e| e.to_string())?;
        record(
            "completeness of the english instantiation matches the oracle",
            engine && oracle.holds,
            &mut text,
        );
    }
    {
        let q_self = conn.query("q_self").unwrap();
        let q_cyc2 = conn.query("q_cyc2").unwrap();
        let bounds = EnumerationBounds::for_scenario(q_self, conn.statements(), 2, 4, 4);
        let engine_fwd = contained(q_self, q_cyc2).map_err(|e| e.to_string())?;
        let engine_bwd = contained(q_cyc2, q_self).map_err(|e| e.to_string())?;
        let oracle_fwd = oracle_containment(q_self, q_cyc2, &bounds).map_err(|e| e.to_string())?;
        let oracle_bwd = oracle_containment(q_cyc2, q_self, &bounds).map_err(|e| e.to_string())?;
        record(
            "cycle containment asymmetry matches the oracle",
            engine_fwd && !engine_bwd && oracle_fwd.holds && !oracle_bwd.holds,
            &mut text,
        );
    }
    {
        let q = conn.query("q_conn").unwrap();
        let result = k_mcs(q, conn.statements(), 0, Budget::default()).map_err(|e| e.to_string())?;
        let bounds = EnumerationBounds::for_scenario(q, conn.statements(), 2, 3, 3);
        let reference = oracle_specializations(q, conn.statements(), 1, &bounds)
            .map_err(|e| e.to_string())?;
        let agree = result.queries.len() == reference.len()
            && result.queries.iter().all(|found| {
                reference
                    .iter()
                    .any(|r| equivalent(found, r).unwrap_or(false))
            });
        record(
            "connection specializations match the oracle",
            agree,
            &mut text,
        );
    }
    {
        let q = conn.query("q_conn").unwrap();
        let refused = matches!(
            mcs_size_bound(q, conn.statements()),
            Err(crate::Error::CyclicTcs)
        );
        record("cyclic statement set is refused by the bound", refused, &mut text);
    }

    Ok(Output {
        exit_code: if all { EXIT_YES } else { EXIT_NO },
        text,
        json: json!({
            "command": "verify",
            "verdict": if all { "ok" } else { "failed" },
            "checks": entries,
            "budget_exhausted": false,
        }),
    })
}
