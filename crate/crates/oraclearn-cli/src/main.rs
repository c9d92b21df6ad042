//! Command-line harness: configure a class, learner, and adversary; run
//! seeded trial batches with query budgets; and emit CSV/JSON results,
//! dimension reports, tree-cost checks, Pareto tables, and class
//! enumerations. Exit codes: 2 for configuration errors, 3 for assertion or
//! budget failures, 4 for I/O failures.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use oraclearn::adversaries::{uniform_concept_environment, EqClassAdversary, NestedCellAdversary};
use oraclearn::analysis::{min_tree_cost, pareto_aggregate, pareto_csv};
use oraclearn::core::{
    expand, littlestone_dimension, vc_dimension, ExplicitClass, HiddenClassSpec, Labeling,
};
use oraclearn::learners::{
    mwu_default_eta, realizable_stream, run_erm_greedy, run_halving, run_mwu_agnostic, run_soa,
    transductive_enumerate, Adversary, TrialRecord,
};
use oraclearn::oracles::{ClassHandle, OracleSession, QueryCounters, QueryKind, TieBreakPolicy};
use oraclearn::structured::{
    hamming_optimal, hamming_single_query, kintervals_learn, threshold_det_erm,
    threshold_rand_erm, threshold_rand_wc, threshold_sort_wc,
};
use oraclearn::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const CSV_SCHEMA: &str = "# oraclearn-csv v1";

#[derive(Parser)]
#[command(name = "oraclearn", version, about = "Oracle-based online learning harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials of a learner against an adversary and emit results.
    Run(RunArgs),
    /// Print VC dimension, Littlestone dimension, and size of a class.
    Dims(DimsArgs),
    /// Print the minimum prediction-tree cost for n leaves and check the
    /// 0.1 * n * log2(n) lower bound.
    Treecost(TreecostArgs),
    /// Merge run CSVs into a Pareto frontier table over (queries, mistakes).
    Pareto(ParetoArgs),
    /// Recover a hidden class by weak-consistency queries and print it.
    Enumerate(EnumerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ClassKind {
    Thresholds,
    Kintervals,
    Hamming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Parser, Serialize)]
struct RunArgs {
    /// Concept class the target is drawn from (used by adv-target).
    #[arg(long, value_enum, default_value = "thresholds")]
    class: ClassKind,
    /// Domain size / horizon.
    #[arg(long)]
    t: usize,
    /// Interval count for k-intervals.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Radius for Hamming balls and depth for adv-eqclass / adv-nested.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Learner id: soa, halving, mwu, erm-greedy, thr-sort-wc, thr-rand-wc,
    /// thr-det-erm, thr-rand-erm, kint-wc, ham-1q, ham-opt.
    #[arg(long)]
    learner: String,
    /// Adversary id: adv-target, adv-nested, adv-eqclass, adv-uniform.
    #[arg(long, default_value = "adv-target")]
    adversary: String,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Base seed; trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failure probability for randomized learners.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Query budget as kind=N (kinds: wc, erm, agnostic_erm, restricted_erm).
    /// Repeatable.
    #[arg(long)]
    budget: Vec<String>,
    /// Output path (stdout when absent). Not part of the config hash.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Parser)]
struct DimsArgs {
    #[arg(long, value_enum, default_value = "thresholds")]
    class: ClassKind,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
}

#[derive(Parser)]
struct TreecostArgs {
    #[arg(long)]
    n: u64,
    /// Depth cap is floor(depth_factor * log2 n).
    #[arg(long, default_value_t = 1.05)]
    depth_factor: f64,
}

#[derive(Parser)]
struct ParetoArgs {
    /// Run CSV files, one homogeneous batch each.
    files: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct EnumerateArgs {
    #[arg(long, value_enum, default_value = "thresholds")]
    class: ClassKind,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// VC-dimension cap for the enumeration budget (brute-forced when absent).
    #[arg(long)]
    d_cap: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Dims(args) => cmd_dims(args),
        Command::Treecost(args) => cmd_treecost(args),
        Command::Pareto(args) => cmd_pareto(args),
        Command::Enumerate(args) => cmd_enumerate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::Unsupported(_)
        | Error::DomainTooLarge { .. }
        | Error::OutOfRange(_)
        | Error::Infeasible { .. }
        | Error::EmptyBatch => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn parse_budgets(specs: &[String]) -> Result<Vec<(QueryKind, u64)>, Error> {
    let mut out = Vec::new();
    for spec in specs {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| config_error(format!("budget must be kind=N, got {spec:?}")))?;
        let kind = match name {
            "wc" => QueryKind::Wc,
            "erm" => QueryKind::Erm,
            "agnostic_erm" => QueryKind::AgnosticErm,
            "restricted_erm" => QueryKind::RestrictedErm,
            other => return Err(config_error(format!("unknown query kind {other:?}"))),
        };
        let limit: u64 = value
            .parse()
            .map_err(|_| config_error(format!("budget limit must be an integer, got {value:?}")))?;
        out.push((kind, limit));
    }
    Ok(out)
}

fn config_hash(args: &RunArgs) -> u64 {
    let canonical = serde_json::to_string(args).expect("config serializes");
    let mut hasher = DefaultHasher::new();
    canonical.hash(&mut hasher);
    hasher.finish()
}

/// Draws a target concept from the configured class, together with the
/// hidden-class spec it belongs to. All randomness comes from `rng` in a
/// fixed order: structure first, then the concept.
fn draw_instance(args: &RunArgs, rng: &mut ChaCha8Rng) -> Result<(HiddenClassSpec, Labeling), Error> {
    let t = args.t;
    match args.class {
        ClassKind::Thresholds => {
            let mut perm: Vec<usize> = (0..t).collect();
            perm.shuffle(rng);
            let j = rng.gen_range(0..=t);
            let bits = (0..t).map(|i| perm[i] >= j).collect();
            Ok((HiddenClassSpec::Threshold { perm }, Labeling::new(bits)))
        }
        ClassKind::Kintervals => {
            let mut perm: Vec<usize> = (0..t).collect();
            perm.shuffle(rng);
            let blocks = rng.gen_range(0..=args.k);
            let mut cuts = rand::seq::index::sample(rng, t + 1, (2 * blocks).min(t + 1)).into_vec();
            cuts.sort_unstable();
            let bits = (0..t)
                .map(|i| cuts.chunks(2).any(|c| c.len() == 2 && c[0] <= perm[i] && perm[i] < c[1]))
                .collect();
            Ok((HiddenClassSpec::KIntervals { perm, k: args.k }, Labeling::new(bits)))
        }
        ClassKind::Hamming => {
            let center = Labeling::new((0..t).map(|_| rng.gen()).collect());
            let flips = rng.gen_range(0..=args.d.min(t));
            let mut target = center.clone();
            for i in rand::seq::index::sample(rng, t, flips) {
                target.set(i, !target.get(i));
            }
            Ok((HiddenClassSpec::HammingBall { center, d: args.d }, target))
        }
    }
}

fn explicit_class(handle: &ClassHandle) -> Result<ExplicitClass, Error> {
    match handle {
        ClassHandle::Explicit(c) => Ok(c.clone()),
        ClassHandle::Hidden(spec) => expand(spec, spec.domain_size()),
        ClassHandle::Interactive(_) => Err(config_error(
            "this learner needs an explicit class and cannot run against an interactive oracle",
        )),
    }
}

fn run_one_trial(args: &RunArgs, trial: u64, budgets: &[(QueryKind, u64)]) -> Result<TrialRecord, Error> {
    let seed = args.seed.wrapping_add(trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eqclass: Option<EqClassAdversary> = None;

    let (handle, mut adversary): (ClassHandle, Box<dyn Adversary>) = match args.adversary.as_str() {
        "adv-target" => {
            let (spec, target) = draw_instance(args, &mut rng)?;
            (ClassHandle::Hidden(spec), Box::new(realizable_stream(target)))
        }
        "adv-nested" => {
            let adv = NestedCellAdversary::new_realizable(args.t, seed)?;
            (adv.class_handle(), Box::new(adv))
        }
        "adv-eqclass" => {
            let adv = EqClassAdversary::new(args.t, args.d)?;
            let handle = adv.oracle_handle();
            eqclass = Some(adv.clone());
            (handle, Box::new(adv))
        }
        "adv-uniform" => {
            let (handle, stream) = uniform_concept_environment(args.t, seed);
            (handle, Box::new(stream))
        }
        other => return Err(config_error(format!("unknown adversary {other:?}"))),
    };

    let mut session = OracleSession::new(handle.clone(), TieBreakPolicy::CanonicalMin);
    for &(kind, limit) in budgets {
        session = session.with_budget(kind, limit);
    }

    let mut record = match args.learner.as_str() {
        "soa" => run_soa(&explicit_class(&handle)?, adversary.as_mut())?,
        "halving" => run_halving(&explicit_class(&handle)?, adversary.as_mut())?,
        "mwu" => {
            let class = explicit_class(&handle)?;
            let eta = mwu_default_eta(class.len(), args.t);
            run_mwu_agnostic(&class, adversary.as_mut(), eta, seed)?
        }
        "erm-greedy" => run_erm_greedy(&mut session, adversary.as_mut())?,
        "thr-sort-wc" => threshold_sort_wc(&mut session, adversary.as_mut(), false)?.record,
        "thr-rand-wc" => threshold_rand_wc(&mut session, adversary.as_mut(), args.delta, &mut rng)?,
        "thr-det-erm" => threshold_det_erm(&mut session, adversary.as_mut())?.record,
        "thr-rand-erm" => threshold_rand_erm(&mut session, adversary.as_mut(), &mut rng)?,
        "kint-wc" => {
            kintervals_learn(&mut session, adversary.as_mut(), args.k, args.delta, 1.0, &mut rng)?
                .record
        }
        "ham-1q" => hamming_single_query(&mut session, adversary.as_mut())?,
        "ham-opt" => hamming_optimal(&mut session, adversary.as_mut(), args.d)?,
        other => return Err(config_error(format!("unknown learner {other:?}"))),
    };

    if let Some(adv) = &eqclass {
        adv.validate_witness()?;
        record
            .events
            .push(format!("designating_queries={}", adv.designating_queries()));
    }
    record.learner = args.learner.clone();
    record.seed = seed;
    Ok(record)
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    if args.t < 1 {
        return Err(config_error("t must be at least 1"));
    }
    if args.trials < 1 {
        return Err(config_error("trials must be at least 1"));
    }
    if !(args.delta > 0.0 && args.delta < 1.0) {
        return Err(config_error(format!("delta must lie in (0,1), got {}", args.delta)));
    }
    let budgets = parse_budgets(&args.budget)?;
    let hash = config_hash(&args);

    let mut records = Vec::with_capacity(args.trials as usize);
    for trial in 0..args.trials {
        records.push(run_one_trial(&args, trial, &budgets)?);
    }

    let mut buf = Vec::new();
    match args.format {
        OutputFormat::Csv => write_run_csv(&mut buf, &records, hash)?,
        OutputFormat::Json => write_run_json(&mut buf, &records, hash)?,
    }
    match &args.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

const RUN_COLUMNS: [&str; 10] = [
    "kind",
    "learner",
    "seed",
    "mistakes",
    "wc_queries",
    "erm_queries",
    "agnostic_erm_queries",
    "restricted_erm_queries",
    "regret",
    "config_hash",
];

fn write_run_csv(w: &mut Vec<u8>, records: &[TrialRecord], hash: u64) -> Result<(), Error> {
    writeln!(w, "{CSV_SCHEMA}")?;
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wtr.write_record(RUN_COLUMNS).map_err(err)?;
    for r in records {
        wtr.write_record([
            "trial".into(),
            r.learner.clone(),
            r.seed.to_string(),
            r.mistakes.to_string(),
            r.counters.wc.to_string(),
            r.counters.erm.to_string(),
            r.counters.agnostic_erm.to_string(),
            r.counters.restricted_erm.to_string(),
            r.regret.map(|x| x.to_string()).unwrap_or_default(),
            String::new(),
        ])
        .map_err(err)?;
    }
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n;
    let maxi = |f: &dyn Fn(&TrialRecord) -> u64| records.iter().map(|r| f(r)).max().unwrap_or(0);
    wtr.write_record([
        "mean".into(),
        records[0].learner.clone(),
        records[0].seed.to_string(),
        format!("{}", mean(&|r| r.mistakes as f64)),
        format!("{}", mean(&|r| r.counters.wc as f64)),
        format!("{}", mean(&|r| r.counters.erm as f64)),
        format!("{}", mean(&|r| r.counters.agnostic_erm as f64)),
        format!("{}", mean(&|r| r.counters.restricted_erm as f64)),
        String::new(),
        format!("{hash:016x}"),
    ])
    .map_err(err)?;
    wtr.write_record([
        "max".into(),
        records[0].learner.clone(),
        records[0].seed.to_string(),
        maxi(&|r| r.mistakes).to_string(),
        maxi(&|r| r.counters.wc).to_string(),
        maxi(&|r| r.counters.erm).to_string(),
        maxi(&|r| r.counters.agnostic_erm).to_string(),
        maxi(&|r| r.counters.restricted_erm).to_string(),
        String::new(),
        format!("{hash:016x}"),
    ])
    .map_err(err)?;
    wtr.flush()?;
    Ok(())
}

fn write_run_json(w: &mut Vec<u8>, records: &[TrialRecord], hash: u64) -> Result<(), Error> {
    let n = records.len() as f64;
    let trials: Vec<serde_json::Value> = records.iter().map(|r| r.json_summary(hash)).collect();
    let doc = serde_json::json!({
        "schema": "oraclearn-json v1",
        "config_hash": format!("{hash:016x}"),
        "trials": trials,
        "summary": {
            "trials": records.len(),
            "mean_mistakes": records.iter().map(|r| r.mistakes as f64).sum::<f64>() / n,
            "mean_queries": records.iter().map(|r| r.total_queries() as f64).sum::<f64>() / n,
            "max_mistakes": records.iter().map(|r| r.mistakes).max().unwrap_or(0),
            "max_queries": records.iter().map(|r| r.total_queries()).max().unwrap_or(0),
        },
    });
    serde_json::to_writer_pretty(&mut *w, &doc).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

fn build_spec(class: ClassKind, t: usize, k: usize, d: usize) -> HiddenClassSpec {
    match class {
        ClassKind::Thresholds => HiddenClassSpec::Threshold { perm: (0..t).collect() },
        ClassKind::Kintervals => HiddenClassSpec::KIntervals { perm: (0..t).collect(), k },
        ClassKind::Hamming => HiddenClassSpec::HammingBall { center: Labeling::zeros(t), d },
    }
}

fn cmd_dims(args: DimsArgs) -> Result<(), Error> {
    let spec = build_spec(args.class, args.t, args.k, args.d);
    let class = expand(&spec, args.t)?;
    let vc = vc_dimension(&class)?;
    let ld = littlestone_dimension(&class)?;
    println!("class={:?} t={}", args.class, args.t);
    println!("labelings={}", class.len());
    println!("vc_dimension={vc}");
    println!("littlestone_dimension={ld}");
    Ok(())
}

fn cmd_treecost(args: TreecostArgs) -> Result<(), Error> {
    if args.n < 1 {
        return Err(config_error("n must be at least 1"));
    }
    let log_n = (args.n as f64).log2();
    let depth_cap = (args.depth_factor * log_n).floor().max(0.0) as u32;
    let cost = min_tree_cost(args.n, depth_cap)?;
    let bound = 0.1 * args.n as f64 * log_n;
    let verdict = if cost as f64 >= bound { "PASS" } else { "FAIL" };
    println!("n={} depth_cap={} cost={} bound={:.4} {}", args.n, depth_cap, cost, bound, verdict);
    Ok(())
}

fn cmd_pareto(args: ParetoArgs) -> Result<(), Error> {
    if args.files.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut batches = Vec::new();
    for path in &args.files {
        batches.push(read_run_csv(path)?);
    }
    let points = pareto_aggregate(&batches)?;
    let mut buf = Vec::new();
    pareto_csv(&points, &mut buf)?;
    match &args.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn read_run_csv(path: &PathBuf) -> Result<Vec<TrialRecord>, Error> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        if row.get(0) != Some("trial") {
            continue;
        }
        let field = |i: usize| row.get(i).unwrap_or("");
        let int = |i: usize| field(i).parse::<u64>().unwrap_or(0);
        let mut r = TrialRecord::new(field(1), int(2));
        r.mistakes = int(3);
        r.counters = QueryCounters {
            wc: int(4),
            erm: int(5),
            agnostic_erm: int(6),
            restricted_erm: int(7),
        };
        r.regret = field(8).parse::<i64>().ok();
        records.push(r);
    }
    if records.is_empty() {
        return Err(config_error(format!("{} contains no trial rows", path.display())));
    }
    Ok(records)
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<(), Error> {
    let spec = build_spec(args.class, args.t, args.k, args.d);
    let d_cap = match args.d_cap {
        Some(d) => d,
        None => vc_dimension(&expand(&spec, args.t)?)?,
    };
    let mut session = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
    let class = transductive_enumerate(&mut session, args.t, d_cap, 2)?;
    println!("labelings={} wc_queries={}", class.len(), session.counters().wc);
    for l in class.labelings() {
        println!("{l}");
    }
    Ok(())
}
