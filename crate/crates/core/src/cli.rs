//! Command-line front end. `run` parses argv, executes one subcommand and
//! returns the exit code together with everything that should be printed.
//!
//! Exit codes: 0 answered, 2 unknown or budget exhausted, 1 usage or input error.
//! JSON output carries `"version": 1`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::axioms::{lookup, schemas, soundness_fuzz, validity, Validity};
use crate::bench::{parse_plan, run_bench, to_csv};
use crate::expressivity::{distinguishable, fixture_pairs, hierarchy_report};
use crate::linsolve::{minimize_support, sat_additive, FormulaSat};
use crate::num::fmt_q;
use crate::polysolve::{sat_multiplicative, NumericWitness, PolyBudget, PolyVerdict};
use crate::reductions::{etr_inverse_to_ind, poly_to_etr, same_cond_to_comp, sat_via_supports, support_candidates, InverseSystem};
use crate::represent::{
    check_definetti_axioms, check_sk, event_name, fincan_violation, n2_chain, order_from_matrix, parse_matrix,
    quad_check_axioms, quad_representable_n2, representable, sweep_n2, CompOrder, NonRepr, QuadOrder, QuadRepr,
    Representability, SkResult,
};
use crate::semantics::{eval_counting, satisfies, Mode, Model};
use crate::syntax::{accepting_tags, classify, embed, free_letters, parse_formula, render, BoolExpr, Formula, LanguageTag};

pub const JSON_VERSION: u32 = 1;

const INTRO: &str = "# B is forced to probability 1/sqrt(2)\nP(A & B) = P(~(A & B)) && P(A |: B) = P(B)\n";
const ORDER5: &str = include_str!("../fixtures/order5.json");
const PLAN: &str = "lang,n,k,count,timeout_ms,seed\ncomp,3,4,20,1000,1\nadd,3,4,20,1000,1\nind,2,3,10,2000,1\ncond,2,3,10,2000,1\nquad,2,2,10,2000,1\npoly,2,2,10,2000,1\n";
const INVERSE: &str = "# x1 = 2, x2 = 1/2 is a solution\nx1 * x2 = 1\nx2 + x2 = x3\n";

#[derive(Parser, Debug)]
#[command(name = "probcalc", version, about = "Decision procedures for propositional probability logics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Largest denominator tried by the rational grid search
    #[arg(long, global = true, default_value_t = 64)]
    max_denom: u32,
    /// Maximum bisection depth of branch-and-prune
    #[arg(long, global = true, default_value_t = 24)]
    bp_depth: u32,
    /// Maximum number of cone factors in a Positivstellensatz product
    #[arg(long, global = true, default_value_t = 3)]
    psatz_degree: u32,
    /// Bound n for FinCan_n / Q5_n / Q6_n searches
    #[arg(long, global = true, default_value_t = 2)]
    fincan_bound: usize,
    /// Wall-clock limit per polynomial decision
    #[arg(long, global = true, default_value_t = 10_000)]
    timeout_ms: u64,
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

impl BudgetArgs {
    fn poly(&self) -> PolyBudget {
        PolyBudget {
            max_denom: self.max_denom,
            bp_depth: self.bp_depth,
            psatz_degree: self.psatz_degree,
            seed: self.seed,
            timeout_ms: Some(self.timeout_ms),
            ..PolyBudget::default()
        }
    }
}

#[derive(Args, Debug)]
struct Input {
    /// Formula text
    #[arg(short = 'e', long = "expr", conflicts_with = "file")]
    expr: Option<String>,
    /// File holding one formula; lines starting with # are ignored
    #[arg(short = 'f', long = "file")]
    file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and pretty-print a formula
    Parse(Input),
    /// Smallest language containing a formula
    Classify(Input),
    /// Decide satisfiability
    Sat {
        #[command(flatten)]
        input: Input,
        /// Solve in this language (the formula is embedded into it)
        #[arg(long)]
        lang: Option<String>,
        /// Shrink additive witnesses to a small support
        #[arg(long)]
        minimize: bool,
    },
    /// Decide validity of a formula, or fuzz an axiom schema
    Valid {
        #[command(flatten)]
        input: Input,
        /// Schema name such as Quasi, 2Canc or FinCan:3
        #[arg(long, conflicts_with_all = ["expr", "file"])]
        schema: Option<String>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// List the known schemas
        #[arg(long)]
        list: bool,
    },
    /// Evaluate a formula in a model file
    Model {
        #[command(flatten)]
        input: Input,
        #[arg(short = 'm', long)]
        model: PathBuf,
    },
    /// Find a formula separating two models, or replay the fixture pairs
    Distinguish {
        #[arg(long, requires = "m2")]
        m1: Option<PathBuf>,
        #[arg(long)]
        m2: Option<PathBuf>,
        #[arg(long)]
        lang: Option<String>,
        /// Run every fixture pair against its expected verdicts
        #[arg(long)]
        fixtures: bool,
    },
    /// Representability of a comparative order file
    Represent {
        #[arg(short = 'f', long)]
        file: PathBuf,
        /// Also search S_k violations with this many distinct pairs
        #[arg(long)]
        sk: Option<usize>,
        /// Also search FinCan_n violations up to --fincan-bound
        #[arg(long)]
        fincan: bool,
    },
    /// Quadratic orders: axiom checks, two-atom representability, matrices
    Quad {
        #[arg(short = 'f', long)]
        file: Option<PathBuf>,
        /// Bilinear matrix, rows separated by ';' and entries by ','
        #[arg(long)]
        matrix: Option<String>,
        /// Enumerate the two-atom orders passing all axiom checks
        #[arg(long)]
        sweep: bool,
    },
    /// Print and replay the infeasibility certificates for a formula
    Certify(Input),
    /// Run one of the reductions
    Reduce {
        #[arg(value_enum)]
        kind: ReduceKind,
        #[command(flatten)]
        input: Input,
        /// SMT-LIB output for `etr`
        #[arg(long)]
        smtlib: bool,
        /// Decide the inverse system through its polynomial encoding and transport the witness
        #[arg(long)]
        solve: bool,
    },
    /// Run a benchmark plan and print CSV
    Bench {
        #[arg(short = 'f', long)]
        plan: Option<PathBuf>,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Write the fixture files into a directory
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReduceKind {
    SameCond,
    Inverse,
    Etr,
    Supports,
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Report {
    code: i32,
    text: String,
    json: Value,
}

impl Report {
    fn answered(text: String, json: Value) -> Report {
        Report { code: 0, text, json }
    }
}

type Res = Result<Report, String>;

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome { code: 0, stdout: shown, stderr: String::new() },
                _ => Outcome { code: 1, stdout: String::new(), stderr: shown },
            };
        }
    };
    let command = command_name(&cli.cmd);
    match dispatch(&cli) {
        Ok(r) => {
            let stdout = match cli.format {
                Format::Text => {
                    let mut t = r.text;
                    if !t.ends_with('\n') {
                        t.push('\n');
                    }
                    t
                }
                Format::Json => {
                    let mut body = json!({"version": JSON_VERSION, "command": command});
                    if let (Value::Object(b), Value::Object(extra)) = (&mut body, r.json) {
                        b.extend(extra);
                    }
                    serde_json::to_string_pretty(&body).unwrap() + "\n"
                }
            };
            Outcome { code: r.code, stdout, stderr: String::new() }
        }
        Err(msg) => Outcome { code: 1, stdout: String::new(), stderr: format!("error: {}\n", msg) },
    }
}

fn command_name(c: &Cmd) -> &'static str {
    match c {
        Cmd::Parse(_) => "parse",
        Cmd::Classify(_) => "classify",
        Cmd::Sat { .. } => "sat",
        Cmd::Valid { .. } => "valid",
        Cmd::Model { .. } => "model",
        Cmd::Distinguish { .. } => "distinguish",
        Cmd::Represent { .. } => "represent",
        Cmd::Quad { .. } => "quad",
        Cmd::Certify(_) => "certify",
        Cmd::Reduce { .. } => "reduce",
        Cmd::Bench { .. } => "bench",
        Cmd::Fixtures { .. } => "fixtures",
    }
}

fn dispatch(cli: &Cli) -> Res {
    let budget = &cli.budget;
    match &cli.cmd {
        Cmd::Parse(i) => cmd_parse(&read_formula(i)?),
        Cmd::Classify(i) => cmd_classify(&read_formula(i)?),
        Cmd::Sat { input, lang, minimize } => cmd_sat(&read_formula(input)?, lang.as_deref(), *minimize, budget),
        Cmd::Valid { input, schema, trials, list } => {
            if *list {
                return Ok(cmd_list_schemas());
            }
            match schema {
                Some(s) => cmd_fuzz(s, *trials, budget.seed),
                None => cmd_valid(&read_formula(input)?, budget),
            }
        }
        Cmd::Model { input, model } => cmd_model(&read_formula(input)?, &read_model(model)?),
        Cmd::Distinguish { m1, m2, lang, fixtures } => {
            if *fixtures {
                return cmd_fixture_report();
            }
            let (Some(m1), Some(m2)) = (m1, m2) else { return Err("give --m1 and --m2, or --fixtures".into()) };
            let lang = parse_lang(lang.as_deref().ok_or("--lang is required with --m1/--m2")?)?;
            cmd_distinguish(&read_model(m1)?, &read_model(m2)?, lang)
        }
        Cmd::Represent { file, sk, fincan } => cmd_represent(file, *sk, fincan.then_some(budget.fincan_bound)),
        Cmd::Quad { file, matrix, sweep } => cmd_quad(file.as_deref(), matrix.as_deref(), *sweep, budget.fincan_bound),
        Cmd::Certify(i) => cmd_certify(&read_formula(i)?, budget),
        Cmd::Reduce { kind, input, smtlib, solve } => cmd_reduce(*kind, input, *smtlib, *solve, budget),
        Cmd::Bench { plan, out } => cmd_bench(plan.as_deref(), out.as_deref()),
        Cmd::Fixtures { out } => cmd_fixtures(out),
    }
}

// ---------------------------------------------------------------- input

fn read_text(i: &Input) -> Result<String, String> {
    match (&i.expr, &i.file) {
        (Some(e), _) => Ok(e.clone()),
        (None, Some(p)) => {
            let t = std::fs::read_to_string(p).map_err(|e| format!("{}: {}", p.display(), e))?;
            Ok(t.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n"))
        }
        (None, None) => Err("give a formula with -e or -f".into()),
    }
}

fn read_formula(i: &Input) -> Result<Formula, String> {
    parse_formula(&read_text(i)?).map_err(|e| e.to_string())
}

fn read_json(p: &Path) -> Result<Value, String> {
    let t = std::fs::read_to_string(p).map_err(|e| format!("{}: {}", p.display(), e))?;
    serde_json::from_str(&t).map_err(|e| format!("{}: {}", p.display(), e))
}

fn read_model(p: &Path) -> Result<Model, String> {
    Model::from_json(&read_json(p)?).map_err(|e| e.to_string())
}

fn parse_lang(s: &str) -> Result<LanguageTag, String> {
    LanguageTag::from_name(s).ok_or_else(|| format!("unknown language {}", s))
}

// ---------------------------------------------------------------- commands

fn cmd_parse(f: &Formula) -> Res {
    let r = render(f);
    Ok(Report::answered(r.clone(), json!({"formula": r, "letters": free_letters(f)})))
}

fn cmd_classify(f: &Formula) -> Res {
    let tag = classify(f).map_err(|e| e.to_string())?;
    let all: Vec<&str> = accepting_tags(f).iter().map(|t| t.name()).collect();
    Ok(Report::answered(
        format!("{}\naccepted by: {}", tag.name(), all.join(" ")),
        json!({"language": tag.name(), "accepted_by": all}),
    ))
}

fn letter_probs(m: &Model) -> String {
    m.letters
        .iter()
        .map(|l| format!("P({}) = {}", l, fmt_q(&m.prob(&BoolExpr::letter(l)).unwrap())))
        .collect::<Vec<_>>()
        .join(", ")
}

fn numeric_json(w: &NumericWitness) -> Value {
    json!({
        "letters": w.letters,
        "states": w.states,
        "weights": w.x,
        "residual": w.residual,
    })
}

fn numeric_text(w: &NumericWitness) -> String {
    let probs: Vec<String> =
        w.letters.iter().map(|l| format!("P({}) ≈ {:.6}", l, w.prob(&BoolExpr::letter(l)).unwrap())).collect();
    let mut s = format!("SAT (numeric) {}\n", probs.join(" "));
    for (st, x) in w.states.iter().zip(&w.x) {
        let _ = writeln!(s, "  {} ≈ {:.9}", st, x);
    }
    let _ = write!(s, "  residual {:.3e}", w.residual);
    s
}

fn verdict_report(v: PolyVerdict) -> Report {
    match v {
        PolyVerdict::SatRational(m) => Report::answered(
            format!("SAT\n  {}\n  {}", m, letter_probs(&m)),
            json!({"verdict": "SAT", "exact": true, "witness": m.to_json()}),
        ),
        PolyVerdict::SatNumeric(w) => Report::answered(
            numeric_text(&w),
            json!({"verdict": "SAT", "exact": false, "witness": numeric_json(&w)}),
        ),
        PolyVerdict::UnsatCertified(cs) => {
            let mut text = String::from("UNSAT");
            for (i, c) in cs.iter().enumerate() {
                let _ = write!(text, "\n  case {}: {}", i, c.kind());
            }
            let certs: Vec<Value> =
                cs.iter().map(|c| json!({"kind": c.kind(), "certificate": c.to_text(), "replayed": c.check()})).collect();
            Report::answered(text, json!({"verdict": "UNSAT", "certificates": certs}))
        }
        PolyVerdict::Unknown(r) => Report {
            code: 2,
            text: format!("UNKNOWN ({} cases)\n  {}", r.cases, r.notes.join("\n  ")),
            json: json!({"verdict": "UNKNOWN", "cases": r.cases, "notes": r.notes}),
        },
    }
}

fn cmd_sat(f: &Formula, lang: Option<&str>, minimize: bool, budget: &BudgetArgs) -> Res {
    let tag = classify(f).map_err(|e| e.to_string())?;
    let (g, lang) = match lang {
        Some(l) => {
            let l = parse_lang(l)?;
            (embed(f, l).map_err(|e| e.to_string())?, l)
        }
        None => (f.clone(), tag),
    };
    if matches!(lang, LanguageTag::Comp | LanguageTag::Add | LanguageTag::SameCond) {
        return match sat_additive(&g).map_err(|e| e.to_string())? {
            FormulaSat::Sat(m) => {
                let m = if minimize { minimize_support(&g, &m) } else { m };
                Ok(Report::answered(
                    format!("SAT\n  {}\n  {}", m, letter_probs(&m)),
                    json!({"verdict": "SAT", "exact": true, "language": lang.name(), "witness": m.to_json()}),
                ))
            }
            FormulaSat::Unsat(traces) => {
                let mut text = String::from("UNSAT");
                for (i, t) in traces.iter().enumerate() {
                    let m: Vec<String> = t.multipliers.iter().map(|(r, c)| format!("{}*row{}", c, r)).collect();
                    let _ = write!(text, "\n  case {}: {} gives {}", i, m.join(" + "), t.contradiction);
                }
                Ok(Report::answered(text, json!({"verdict": "UNSAT", "language": lang.name(), "traces": traces})))
            }
        };
    }
    let mut r = verdict_report(sat_multiplicative(&g, &budget.poly()).map_err(|e| e.to_string())?);
    if let Value::Object(o) = &mut r.json {
        o.insert("language".into(), json!(lang.name()));
    }
    Ok(r)
}

fn cmd_valid(f: &Formula, budget: &BudgetArgs) -> Res {
    Ok(match validity(f, &budget.poly()).map_err(|e| e.to_string())? {
        Validity::Valid => Report::answered("VALID".into(), json!({"verdict": "VALID"})),
        Validity::Countermodel(m) => Report::answered(
            format!("INVALID\n  countermodel {}", m),
            json!({"verdict": "INVALID", "countermodel": m.to_json()}),
        ),
        Validity::NumericCountermodel(w) => Report::answered(
            format!("INVALID (numeric countermodel)\n{}", numeric_text(&w)),
            json!({"verdict": "INVALID", "countermodel": numeric_json(&w)}),
        ),
        Validity::Unknown(why) => Report { code: 2, text: format!("UNKNOWN\n  {}", why), json: json!({"verdict": "UNKNOWN", "notes": why}) },
    })
}

fn cmd_list_schemas() -> Report {
    let mut text = String::new();
    let mut rows = Vec::new();
    for s in schemas() {
        let _ = writeln!(text, "{:<8} {:<8} bools={} terms={}", s.name, s.group.name(), s.bools, s.terms);
        rows.push(json!({"name": s.name, "group": s.group.name(), "bools": s.bools, "terms": s.terms}));
    }
    text.push_str("FinCan:n comp     bools=2n terms=0");
    Report::answered(text, json!({"schemas": rows}))
}

fn cmd_fuzz(name: &str, trials: usize, seed: u64) -> Res {
    let info = lookup(name).map_err(|e| e.to_string())?;
    Ok(match soundness_fuzz(&info.name, trials, seed).map_err(|e| e.to_string())? {
        None => Report::answered(
            format!("NO COUNTERMODEL for {} in {} trials", info.name, trials),
            json!({"schema": info.name, "trials": trials, "countermodel": null}),
        ),
        Some((inst, m)) => Report::answered(
            format!("COUNTERMODEL for {}\n  instance {}\n  model {}", info.name, render(&inst), m),
            json!({"schema": info.name, "trials": trials, "instance": render(&inst), "countermodel": m.to_json()}),
        ),
    })
}

fn cmd_model(f: &Formula, m: &Model) -> Res {
    let holds = match m.mode {
        Mode::Prob => satisfies(m, f),
        Mode::Count => eval_counting(m, f),
    }
    .map_err(|e| e.to_string())?;
    Ok(Report::answered(
        format!("{}\n  {}", if holds { "TRUE" } else { "FALSE" }, letter_probs(&m.normalized())),
        json!({"holds": holds}),
    ))
}

fn cmd_distinguish(m1: &Model, m2: &Model, lang: LanguageTag) -> Res {
    Ok(match distinguishable(m1, m2, lang).map_err(|e| e.to_string())? {
        Some(w) => Report::answered(
            format!("DISTINGUISHABLE in {} by {}", lang.name(), render(&w)),
            json!({"language": lang.name(), "distinguishable": true, "witness": render(&w)}),
        ),
        None => Report::answered(
            format!("INDISTINGUISHABLE in {}", lang.name()),
            json!({"language": lang.name(), "distinguishable": false}),
        ),
    })
}

fn cmd_fixture_report() -> Res {
    let rep = hierarchy_report().map_err(|e| e.to_string())?;
    let code = if rep.all_ok() { 0 } else { 1 };
    Ok(Report { code, text: rep.to_string(), json: json!({"all_ok": rep.all_ok(), "rows": rep.to_json()}) })
}

fn cmd_represent(file: &Path, sk: Option<usize>, fincan: Option<usize>) -> Res {
    let o = CompOrder::from_json(&read_json(file)?).map_err(|e| e.to_string())?;
    let rel = o.closure().map_err(|e| e.to_string())?;
    let mut text = String::new();
    let mut axioms = Vec::new();
    for ax in check_definetti_axioms(&rel) {
        let w = ax.witness.as_ref().map(|w| w.iter().map(|e| event_name(*e, o.atoms)).collect::<Vec<_>>());
        let _ = writeln!(text, "{:<8} {}", ax.name, match &w { None => "ok".to_string(), Some(w) => format!("fails at {}", w.join(" ")) });
        axioms.push(json!({"axiom": ax.name, "passed": w.is_none(), "witness": w}));
    }
    let mut out = json!({"atoms": o.atoms, "axioms": axioms});
    match representable(&o).map_err(|e| e.to_string())? {
        Representability::Yes(w) => {
            let ws: Vec<String> = w.iter().map(fmt_q).collect();
            let _ = write!(text, "REPRESENTABLE\n  weights {}", ws.join(" "));
            out["verdict"] = json!("REPRESENTABLE");
            out["weights"] = json!(ws);
        }
        Representability::No(NonRepr::Axiom { axiom, witness }) => {
            let w: Vec<String> = witness.iter().map(|e| event_name(*e, o.atoms)).collect();
            let _ = write!(text, "NOT REPRESENTABLE\n  {} fails at {}", axiom, w.join(" "));
            out["verdict"] = json!("NOT REPRESENTABLE");
            out["axiom"] = json!(axiom);
            out["witness"] = json!(w);
        }
        Representability::No(NonRepr::Balanced(c)) => {
            let ok = c.check(&rel);
            let _ = write!(text, "NOT REPRESENTABLE\nbalanced certificate (replay {}):\n{}", if ok { "ok" } else { "FAILED" }, c);
            out["verdict"] = json!("NOT REPRESENTABLE");
            out["certificate"] = json!(c.to_string());
            out["certificate_checked"] = json!(ok);
        }
    }
    if let Some(k) = sk {
        match check_sk(&rel, k, 2) {
            SkResult::HoldsUpTo { k, budget } => {
                let _ = write!(text, "\nS_{} holds up to multiplicity {}", k, budget);
                out["sk"] = json!({"k": k, "violated": false});
            }
            SkResult::Violated(c) => {
                let _ = write!(text, "\nS_{} violated:\n{}", k, c);
                out["sk"] = json!({"k": k, "violated": true, "certificate": c.to_string()});
            }
        }
    }
    if let Some(n) = fincan {
        let hit = (1..=n).find_map(|m| fincan_violation(&rel, m).map(|c| (m, c)));
        match hit {
            Some((m, c)) => {
                let _ = write!(text, "\nFinCan_{} violated:\n{}", m, c);
                out["fincan"] = json!({"bound": n, "violated_at": m, "certificate": c.to_string()});
            }
            None => {
                let _ = write!(text, "\nFinCan_n holds for n <= {}", n);
                out["fincan"] = json!({"bound": n, "violated_at": null});
            }
        }
    }
    Ok(Report::answered(text, out))
}

fn quad_report(q: &QuadOrder, bound: usize, text: &mut String, out: &mut Value) {
    let mut checks = Vec::new();
    for c in quad_check_axioms(q, bound) {
        let _ = writeln!(text, "{:<4} {}", c.name, if c.passed() { "ok" } else { "fails" });
        checks.push(json!({"axiom": c.name, "passed": c.passed()}));
    }
    out["axioms"] = json!(checks);
    if q.atoms == 2 {
        let _ = writeln!(text, "chain {}", n2_chain(q));
        match quad_representable_n2(q) {
            Ok(QuadRepr::Yes { region, sample }) => {
                let _ = write!(text, "REPRESENTABLE\n  {}", region);
                if let Some(s) = &sample {
                    let _ = write!(text, " (sample x = {})", fmt_q(s));
                }
                out["verdict"] = json!("REPRESENTABLE");
                out["region"] = json!(region.to_string());
                out["sample"] = json!(sample.as_ref().map(fmt_q));
            }
            Ok(QuadRepr::No) => {
                text.push_str("NOT REPRESENTABLE");
                out["verdict"] = json!("NOT REPRESENTABLE");
            }
            Err(e) => {
                let _ = write!(text, "{}", e);
            }
        }
    }
}

fn cmd_quad(file: Option<&Path>, matrix: Option<&str>, sweep: bool, bound: usize) -> Res {
    let mut text = String::new();
    let mut out = json!({});
    if sweep {
        let found = sweep_n2(bound);
        let _ = writeln!(text, "{} orders survive with bound {}", found.len(), bound);
        for q in &found {
            let _ = writeln!(text, "  {}", n2_chain(q));
        }
        out["survivors"] = json!(found.iter().map(n2_chain).collect::<Vec<_>>());
        return Ok(Report::answered(text, out));
    }
    let q = match (file, matrix) {
        (Some(p), None) => QuadOrder::from_json(&read_json(p)?).map_err(|e| e.to_string())?,
        (None, Some(m)) => {
            let m = parse_matrix(m).ok_or("bad matrix; use rows separated by ';' and entries by ','")?;
            let (q, rank) = order_from_matrix(&m);
            let _ = writeln!(text, "rank {}", rank);
            out["rank"] = json!(rank);
            out["order"] = q.to_json();
            q
        }
        _ => return Err("give exactly one of -f, --matrix or --sweep".into()),
    };
    quad_report(&q, bound, &mut text, &mut out);
    Ok(Report::answered(text, out))
}

fn cmd_certify(f: &Formula, budget: &BudgetArgs) -> Res {
    let tag = classify(f).map_err(|e| e.to_string())?;
    let g = if tag.leq(LanguageTag::Poly) { embed(f, LanguageTag::Poly).map_err(|e| e.to_string())? } else { f.clone() };
    let v = sat_multiplicative(&g, &budget.poly()).map_err(|e| e.to_string())?;
    let PolyVerdict::UnsatCertified(cs) = &v else {
        let mut r = verdict_report(v);
        r.text = format!("no certificate: {}", r.text);
        return Ok(r);
    };
    let mut text = String::from("UNSAT");
    let mut certs = Vec::new();
    for (i, c) in cs.iter().enumerate() {
        let ok = c.check();
        let _ = write!(text, "\ncase {} [{}] replay {}\n{}", i, c.kind(), if ok { "ok" } else { "FAILED" }, c.to_text().trim_end());
        certs.push(json!({"kind": c.kind(), "certificate": c.to_text(), "replayed": ok}));
    }
    Ok(Report::answered(text, json!({"verdict": "UNSAT", "certificates": certs})))
}

fn cmd_reduce(kind: ReduceKind, input: &Input, smtlib: bool, solve: bool, budget: &BudgetArgs) -> Res {
    match kind {
        ReduceKind::SameCond => {
            let g = same_cond_to_comp(&read_formula(input)?).map_err(|e| e.to_string())?;
            Ok(Report::answered(render(&g), json!({"formula": render(&g)})))
        }
        ReduceKind::Etr => {
            let s = poly_to_etr(&read_formula(input)?).map_err(|e| e.to_string())?;
            let body = if smtlib { s.to_smtlib() } else { s.to_text() };
            Ok(Report::answered(body.clone(), json!({"sentence": body, "smtlib": smtlib})))
        }
        ReduceKind::Supports => {
            let f = read_formula(input)?;
            let (k, cands) = support_candidates(&f);
            let mut r = verdict_report(sat_via_supports(&f, &budget.poly()).map_err(|e| e.to_string())?);
            r.text = format!("support size {} ({} candidates)\n{}", k, cands.len(), r.text);
            if let Value::Object(o) = &mut r.json {
                o.insert("support_size".into(), json!(k));
                o.insert("candidates".into(), json!(cands.len()));
            }
            Ok(r)
        }
        ReduceKind::Inverse => {
            let sys = InverseSystem::parse(&read_text(input)?).map_err(|e| e.to_string())?;
            let red = etr_inverse_to_ind(&sys).map_err(|e| e.to_string())?;
            let tag = classify(&red.formula).map_err(|e| e.to_string())?;
            let mut text = format!(
                "{} letters, {} atoms (bound {}), language {}\n{}",
                red.letters.len(),
                red.atom_count(),
                red.atom_bound(),
                tag.name(),
                render(&red.formula)
            );
            let mut out = json!({
                "letters": red.letters.len(),
                "atoms": red.atom_count(),
                "atom_bound": red.atom_bound(),
                "language": tag.name(),
                "formula": render(&red.formula),
            });
            if solve {
                let v = sat_multiplicative(&sys.to_poly_formula(), &budget.poly()).map_err(|e| e.to_string())?;
                match &v {
                    PolyVerdict::SatRational(m) => {
                        let x = sys.from_poly_model(m).map_err(|e| e.to_string())?;
                        let model = red.forward(&x, &num_traits::Zero::zero()).map_err(|e| e.to_string())?;
                        let ok = satisfies(&model, &red.formula).map_err(|e| e.to_string())?;
                        let back = red.backward(&model).map_err(|e| e.to_string())?;
                        let xs: Vec<String> = x.iter().map(fmt_q).collect();
                        let _ = write!(
                            text,
                            "\nSAT x = ({})\n  transported model satisfies the formula: {}\n  read back: {}",
                            xs.join(", "),
                            ok,
                            back == x
                        );
                        out["verdict"] = json!("SAT");
                        out["x"] = json!(xs);
                        out["transport_ok"] = json!(ok && back == x);
                    }
                    PolyVerdict::SatNumeric(w) => {
                        let xs: Vec<f64> =
                            (0..sys.n).map(|i| 4.0 * w.prob(&BoolExpr::letter(&format!("X{}", i + 1))).unwrap()).collect();
                        let _ = write!(text, "\nSAT (numeric) x ≈ {:?}", xs);
                        out["verdict"] = json!("SAT");
                        out["x_numeric"] = json!(xs);
                    }
                    PolyVerdict::UnsatCertified(_) => {
                        text.push_str("\nUNSAT");
                        out["verdict"] = json!("UNSAT");
                    }
                    PolyVerdict::Unknown(_) => {
                        text.push_str("\nUNKNOWN");
                        out["verdict"] = json!("UNKNOWN");
                        return Ok(Report { code: 2, text, json: out });
                    }
                }
            }
            Ok(Report::answered(text, out))
        }
    }
}

fn cmd_bench(plan: Option<&Path>, out: Option<&Path>) -> Res {
    let text = match plan {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {}", p.display(), e))?,
        None => PLAN.to_string(),
    };
    let plan = parse_plan(&text).map_err(|e| e.to_string())?;
    let rows = run_bench(&plan);
    let csv = to_csv(&rows);
    if let Some(o) = out {
        std::fs::write(o, &csv).map_err(|e| format!("{}: {}", o.display(), e))?;
    }
    let unknown = rows.iter().filter(|r| r.kind == "unknown").count();
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({"id": r.id, "lang": r.lang.name(), "n": r.n, "k": r.k, "seed": r.seed,
                   "verdict": r.verdict, "kind": r.kind, "wall_ms": r.wall_ms, "cases": r.cases})
        })
        .collect();
    Ok(Report::answered(csv.trim_end().to_string(), json!({"rows": json_rows, "unknown": unknown})))
}

fn cmd_fixtures(dir: &Path) -> Res {
    let write = |name: &str, body: &str| -> Result<String, String> {
        let p = dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| format!("{}: {}", parent.display(), e))?;
        }
        std::fs::write(&p, body).map_err(|e| format!("{}: {}", p.display(), e))?;
        Ok(p.display().to_string())
    };
    let mut written = vec![
        write("intro.pl", INTRO)?,
        write("order5.json", ORDER5)?,
        write("plan.csv", PLAN)?,
        write("inverse.txt", INVERSE)?,
    ];
    for fx in fixture_pairs() {
        for (tag, m) in [("m1", &fx.m1), ("m2", &fx.m2)] {
            let body = serde_json::to_string_pretty(&m.to_json()).unwrap() + "\n";
            written.push(write(&format!("expressivity/{}_{}.json", fx.name, tag), &body)?);
        }
        let body = serde_json::to_string_pretty(&fx.to_json()).unwrap() + "\n";
        written.push(write(&format!("expressivity/{}.json", fx.name), &body)?);
    }
    let uniform = CompOrder::from_measure(&[crate::num::q(1, 2), crate::num::q(1, 3), crate::num::q(1, 6)]);
    written.push(write("order3.json", &(serde_json::to_string_pretty(&uniform.to_json()).unwrap() + "\n"))?);
    Ok(Report::answered(written.join("\n"), json!({"written": written})))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> Outcome {
        run(std::iter::once("probcalc").chain(args.iter().copied()))
    }

    #[test]
    fn trivial_unsat() {
        let o = go(&["sat", "-e", "P(A) > P(T)"]);
        assert_eq!(o.code, 0);
        assert!(o.stdout.starts_with("UNSAT"), "{}", o.stdout);
    }

    #[test]
    fn json_is_versioned() {
        let o = go(&["--format", "json", "classify", "-e", "indep(A, B)"]);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["language"], "ind");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(go(&["sat"]).code, 1);
        assert_eq!(go(&["nonsense"]).code, 1);
        assert_eq!(go(&["sat", "-e", "P(A >"]).code, 1);
        assert_eq!(go(&["--help"]).code, 0);
    }

    #[test]
    fn numeric_intro() {
        let dir = std::env::temp_dir().join(format!("probcalc-cli-{}", std::process::id()));
        assert_eq!(go(&["fixtures", "--out", dir.to_str().unwrap()]).code, 0);
        let intro = dir.join("intro.pl");
        let o = go(&["sat", "--lang", "poly", "-f", intro.to_str().unwrap()]);
        assert_eq!(o.code, 0);
        assert!(o.stdout.starts_with("SAT (numeric)") && o.stdout.contains("P(B) ≈ 0.707107"), "{}", o.stdout);
        let o = go(&["represent", "-f", dir.join("order5.json").to_str().unwrap()]);
        assert!(o.stdout.contains("NOT REPRESENTABLE") && o.stdout.contains("replay ok"), "{}", o.stdout);
        let o = go(&["represent", "-f", dir.join("order3.json").to_str().unwrap()]);
        assert!(o.stdout.contains("REPRESENTABLE\n  weights 1/2 1/3 1/6"), "{}", o.stdout);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn same_seed_same_output() {
        let a = go(&["--format", "json", "valid", "--schema", "Quasi", "--trials", "50", "--seed", "3"]);
        let b = go(&["--format", "json", "valid", "--schema", "Quasi", "--trials", "50", "--seed", "3"]);
        assert_eq!(a.stdout, b.stdout);
        assert!(a.stdout.contains("\"countermodel\": null"));
    }
}
