mod certify;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use osf::balanced::{min_delta, CostClasses};
use osf::dual::{certify_all_classes, verify_class_duals};
use osf::generators::{gen_canonical_nested, gen_girth_lower_bound, gen_random_instance, Cage};
use osf::greedy::{compare_rules, run_greedy, ContractionRule};
use osf::opt::{dual_lower_bound_audit, steiner_forest_exact, tree_optimum, OracleCaps};
use osf::scalar::{format_fraction, parse_fraction, Extended};
use osf::transforms::{is_canonical, subdivide_pairs_rule3, to_canonical};
use osf::{Error, ExactInstance, ExactTrace, Weight};
use serde_json::{json, Value};

use crate::report::{exact_pair, extended_decimal, ReportRow};

#[derive(Parser)]
#[command(name = "osf", version, about = "Online Steiner Forest workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance and print its digest.
    Generate(GenerateArgs),
    /// Run greedy, write the trace and append a report row.
    Run(RunArgs),
    /// Build or check a certificate and print the audit.
    Certify(CertifyArgs),
    /// Apply an instance transformation and write the result with its receipt.
    Transform(TransformArgs),
    /// Structural checks on an instance under all three rules.
    Audit(AuditArgs),
    /// Aggregate report rows: ratio against k, and a contraction histogram.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[command(subcommand)]
    generator: Generator,
    /// Instance file to write; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Generator {
    /// Cage with a spanning tree of unit edges and a matching on the rest.
    Girth {
        #[arg(long)]
        cage: String,
    },
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Nested canonical instance with planted pairs.
    Canonical {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        per_class: usize,
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Args)]
struct Source {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "rule1")]
    rule: String,
    /// Existing trace; must match a fresh replay of its rule.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "rule1")]
    rule: String,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Report CSV to append to.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Seed label recorded in the report row.
    #[arg(long, default_value = "")]
    seed: String,
    /// Skip the exact oracles.
    #[arg(long)]
    no_opt: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CertKind {
    ClassDuals,
    Balanced,
    InductionBound,
    DualLb,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    kind: CertKind,
    /// Certificate to check instead of building one.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Where to write the certificate.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "1")]
    alpha: String,
    /// Defaults to the smallest admissible value for `alpha` and the bound.
    #[arg(long)]
    delta: Option<u64>,
    /// Defaults to `max(k, 2^M)`.
    #[arg(long)]
    k_bound: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    Canonical,
    Rule3,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    kind: TransformKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    receipt: Option<PathBuf>,
    #[arg(long, default_value = "1")]
    alpha: String,
    #[arg(long)]
    delta: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Also check canonicity under this `delta`.
    #[arg(long)]
    delta: Option<u64>,
    #[arg(long, default_value = "1")]
    alpha: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Report CSVs, concatenated in order.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Ratio table; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    histogram: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when a requested audit failed.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Certify(a) => certify::certify(a),
        Command::Transform(a) => transform(a),
        Command::Audit(a) => audit(a),
        Command::Report(a) => report_cmd(a),
    }
}

pub(crate) fn load_instance(path: &Path) -> Result<ExactInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = ExactInstance::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let bad = inst.validate();
    if let Some(v) = bad.first() {
        bail!("{}: invalid instance: {v}", path.display());
    }
    Ok(inst)
}

pub(crate) fn parse_rule(s: &str) -> Result<ContractionRule> {
    Ok(s.parse::<ContractionRule>()?)
}

pub(crate) fn parse_alpha(s: &str) -> Result<Weight> {
    Ok(parse_fraction(s)?)
}

/// Instance plus a full trace; a supplied trace file must agree with a replay.
pub(crate) fn load_source(src: &Source) -> Result<(ExactInstance, ExactTrace)> {
    let inst = load_instance(&src.instance)?;
    let Some(path) = &src.trace else {
        let trace = run_greedy(&inst, parse_rule(&src.rule)?)?;
        return Ok((inst, trace));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let given = ExactTrace::from_json(&text)?;
    let trace = run_greedy(&inst, given.rule)?;
    let same = given.steps.len() == trace.steps.len()
        && given.steps.iter().zip(&trace.steps).all(|(a, b)| {
            a.path == b.path && a.cost == b.cost && a.shortcuts == b.shortcuts && a.contraction == b.contraction
        });
    if !same {
        bail!("{} does not match a replay of {} on the instance", path.display(), given.rule);
    }
    Ok((inst, trace))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn print_json(v: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

pub(crate) fn caps() -> Result<OracleCaps> {
    Ok(OracleCaps::from_env()?)
}

/// Optimum, or `None` when the instance is over the oracle caps.
pub(crate) fn optimum<T>(r: osf::Result<T>) -> Result<Option<T>> {
    match r {
        Ok(s) => Ok(Some(s)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn default_bound(inst: &ExactInstance, trace: &ExactTrace) -> u64 {
    let m = CostClasses::from_trace(trace).count() as u32;
    (inst.pair_count() as u64).max(1u64 << m.min(63))
}

fn generate(a: GenerateArgs) -> Result<bool> {
    let (inst, seed): (ExactInstance, Option<u64>) = match a.generator {
        Generator::Girth { cage } => (gen_girth_lower_bound(Cage::from_name(&cage)?), None),
        Generator::Random { n, m, k, seed } => (gen_random_instance(n, m, k, seed)?, Some(seed)),
        Generator::Canonical { classes, per_class, delta, seed } => {
            (gen_canonical_nested(classes, per_class, delta, seed)?, Some(seed))
        }
    };
    let seed_text = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
    match &a.out {
        Some(path) => {
            write_text(path, &inst.to_json())?;
            println!("{} seed={seed_text}", inst.digest());
        }
        None => {
            println!("{}", inst.to_json());
            eprintln!("{} seed={seed_text}", inst.digest());
        }
    }
    Ok(true)
}

fn run(a: RunArgs) -> Result<bool> {
    let inst = load_instance(&a.instance)?;
    let rule = parse_rule(&a.rule)?;
    let trace = run_greedy(&inst, rule)?;
    if let Some(p) = &a.trace_out {
        write_text(p, &trace.to_json())?;
    }
    let caps = caps()?;
    let (opt, tstar) = if a.no_opt {
        (None, None)
    } else {
        (optimum(steiner_forest_exact(&inst, caps))?, optimum(tree_optimum(&inst, caps))?)
    };
    let ratio = opt.as_ref().map(|o| osf::scalar::ratio_or_infinite(&trace.total, &o.weight));
    let contractions: Vec<&Extended<Weight>> = trace.steps.iter().map(|s| &s.contraction).collect();
    let max_c = contractions.iter().copied().cloned().reduce(|x, y| if x.lt(&y) { y } else { x });
    let min_c = contractions.iter().copied().cloned().reduce(|x, y| if y.lt(&x) { y } else { x });

    let certs = certify_all_classes(&trace, &inst)?;
    let class_ok = certs
        .iter()
        .all(|c| verify_class_duals(&c.collection, &c.aux, &trace, &inst, &c.class_pairs, &c.class_pairs).all_hold());
    let lb = opt.as_ref().map(|o| {
        certs
            .iter()
            .all(|c| dual_lower_bound_audit(&c.collection.dual_balls(), &inst, &o.weight).bound_holds == Some(true))
    });

    let (greedy, greedy_dec) = exact_pair(Some(&trace.total));
    let (opt_s, opt_dec) = exact_pair(opt.as_ref().map(|o| &o.weight));
    let (tstar_s, tstar_dec) = exact_pair(tstar.as_ref().map(|o| &o.weight));
    let ext = |x: Option<&Extended<Weight>>| x.map_or((String::new(), String::new()), |x| (x.to_text(), extended_decimal(x)));
    let (ratio_s, ratio_dec) = ext(ratio.as_ref());
    let (max_s, max_dec) = ext(max_c.as_ref());
    let (min_s, min_dec) = ext(min_c.as_ref());
    let verdict = |b: bool| if b { "pass" } else { "fail" }.to_string();
    let row = ReportRow {
        seed: a.seed,
        digest: inst.digest(),
        rule: rule.name().to_string(),
        k: inst.pair_count(),
        greedy,
        greedy_dec,
        opt: opt_s,
        opt_dec,
        tstar: tstar_s,
        tstar_dec,
        ratio: ratio_s,
        ratio_dec,
        max_contraction: max_s,
        max_contraction_dec: max_dec,
        min_contraction: min_s,
        min_contraction_dec: min_dec,
        class_duals: verdict(class_ok),
        dual_lb: lb.map(verdict).unwrap_or_default(),
    };
    match &a.csv {
        Some(p) => report::append_row(p, &row)?,
        None => report::write_rows(io::stdout().lock(), &[row])?,
    }
    Ok(class_ok && lb != Some(false))
}

fn transform(a: TransformArgs) -> Result<bool> {
    let (inst, trace) = load_source(&a.source)?;
    let (out, receipt) = match a.kind {
        TransformKind::Canonical => {
            let alpha = parse_alpha(&a.alpha)?;
            let delta = a.delta.unwrap_or_else(|| min_delta(&alpha, inst.pair_count() as u64));
            to_canonical(&inst, &trace, &alpha, delta)?
        }
        TransformKind::Rule3 => {
            if trace.rule != ContractionRule::Rule3 {
                bail!("rule3 subdivision needs a rule3 trace, got {}", trace.rule);
            }
            subdivide_pairs_rule3(&inst, &trace)?
        }
    };
    write_text(&a.out, &out.to_json())?;
    if let Some(p) = &a.receipt {
        write_text(p, &receipt.to_json())?;
    }
    println!("{}", out.digest());
    Ok(true)
}

fn audit(a: AuditArgs) -> Result<bool> {
    let text = fs::read_to_string(&a.instance).with_context(|| format!("reading {}", a.instance.display()))?;
    let inst = ExactInstance::from_json(&text)?;
    let violations: Vec<String> = inst.validate().iter().map(ToString::to_string).collect();
    if !violations.is_empty() {
        print_json(&json!({ "digest": inst.digest(), "violations": violations, "verdict": "fail" }))?;
        return Ok(false);
    }
    let moore = osf::dual::moore_bound_audit(&inst.graph);
    let cmp = compare_rules(&inst)?;
    let mut ok = moore.consistent();
    let mut rules = serde_json::Map::new();
    for rule in ContractionRule::ALL {
        let trace = run_greedy(&inst, rule)?;
        let certs = certify_all_classes(&trace, &inst)?;
        let class_ok = certs.iter().all(|c| {
            verify_class_duals(&c.collection, &c.aux, &trace, &inst, &c.class_pairs, &c.class_pairs).all_hold()
        });
        ok &= class_ok;
        let mut entry = json!({
            "total": format_fraction(&trace.total),
            "classes": certs.len(),
            "class_duals": class_ok,
        });
        if let Some(delta) = a.delta {
            let rep = is_canonical(&inst, &trace, &parse_alpha(&a.alpha)?, delta);
            ok &= rep.all_hold();
            entry["canonical"] = clause_map(&rep.clauses());
            entry["witnesses"] = json!(rep.witnesses);
        }
        rules.insert(rule.name().to_string(), entry);
    }
    print_json(&json!({
        "digest": inst.digest(),
        "n": inst.graph.vertex_count(),
        "m": inst.graph.edge_count(),
        "k": inst.pair_count(),
        "girth": moore.girth,
        "moore_consistent": moore.consistent(),
        "rules_identical": cmp.identical,
        "rule2_dominates_rule1": cmp.rule2_dominates_rule1,
        "rules": rules,
        "verdict": if ok { "pass" } else { "fail" },
    }))?;
    Ok(ok)
}

fn report_cmd(a: ReportArgs) -> Result<bool> {
    let mut rows = Vec::new();
    for p in &a.input {
        rows.extend(report::read_rows(p)?);
    }
    let table = report::ratio_table(rows);
    match &a.out {
        Some(p) => report::write_rows(fs::File::create(p)?, &table)?,
        None => report::write_rows(io::stdout().lock(), &table)?,
    }
    if let Some(p) = &a.histogram {
        let buckets = report::contraction_histogram(&table)?;
        report::write_histogram(fs::File::create(p)?, &buckets)?;
    }
    Ok(true)
}

pub(crate) fn clause_map(clauses: &[(&'static str, bool)]) -> Value {
    Value::Object(clauses.iter().map(|&(n, b)| (n.to_string(), Value::Bool(b))).collect())
}

pub(crate) fn need<T>(x: Option<T>, what: &str) -> Result<T> {
    x.ok_or_else(|| anyhow!("{what} exceeds the oracle caps (raise {})", osf::opt::CAP_PAIRS_ENV))
}
