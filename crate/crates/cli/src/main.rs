//! `totalsr` command-line driver.
//!
//! Exit status: 0 on success, 2 on bad input (unreadable or malformed files,
//! invalid thresholds or rules), 1 on internal failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use totalsr::datagen::{self, DatasetStats, GenParams, PatternParams};
use totalsr::miner::{self, MineOptions, MiningStats, NoObserver, VariantConfig};
use totalsr::rules::format_ratio;
use totalsr::{
    report, ConfigError, DataError, GenError, OracleLimits, Rule, RuleError, SequenceDatabase,
    Thresholds, Utility, Variant,
};

#[derive(Parser)]
#[command(
    name = "totalsr",
    version,
    about = "High-utility totally-ordered sequential rule mining"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine all rules meeting both thresholds.
    Mine(MineArgs),
    /// Brute-force reference miner; exponential, for small databases only.
    Oracle(OracleArgs),
    /// Dump the tables, UPSLs and bounds of one rule.
    Inspect(InspectArgs),
    /// Generate a synthetic database and its external-utility file.
    Gen(GenArgs),
    /// Sweep minutil values × variants and emit one CSV row per run.
    Bench(BenchArgs),
    /// Print database statistics as JSON.
    Describe(DbArgs),
}

#[derive(Args)]
struct DbArgs {
    /// Sequence database, one sequence per line (`item:quantity ... -1 ... -2`).
    #[arg(long)]
    db: PathBuf,
    /// External utilities, one `item:utility` per line.
    #[arg(long)]
    eutil: PathBuf,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Minimum rule utility (decimal, > 0).
    #[arg(long)]
    minutil: String,
    /// Minimum confidence (decimal in [0, 1]).
    #[arg(long)]
    minconf: String,
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    input: DbArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// bald, seu, seu-, rsu, rspeu, totalsr or totalsr+.
    #[arg(long, default_value = "totalsr+")]
    variant: String,
    /// Rules file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run report with deterministic counters.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Stop the search after this many seconds; the rule set is then partial.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: DbArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Rules file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Caps on rule size; the default covers every rule.
    #[arg(long)]
    max_antecedent_items: Option<usize>,
    #[arg(long)]
    max_consequent_items: Option<usize>,
    #[arg(long)]
    max_total_items: Option<usize>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    input: DbArgs,
    /// Rule text such as `{e,f},{c} -> {b}`.
    #[arg(long)]
    rule: String,
    /// Remove items whose SEU falls below this value first, as mining does.
    #[arg(long)]
    minutil: Option<String>,
    /// Dump file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Database path; the utilities go to the same path with extension `utl`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    sequences: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 7312)]
    alphabet: usize,
    #[arg(long, default_value_t = 6.22)]
    avg_itemsets: f64,
    #[arg(long, default_value_t = 4.35)]
    avg_items: f64,
    #[arg(long, default_value_t = 5)]
    max_quantity: u32,
    #[arg(long, default_value = "1")]
    min_unit_utility: String,
    #[arg(long, default_value = "10")]
    max_unit_utility: String,
    /// Item popularity ∝ 1/rank^skew; 0 is uniform.
    #[arg(long, default_value_t = 0.0)]
    skew: f64,
    /// Size of the recurring-pattern pool; 0 draws every item independently.
    #[arg(long, default_value_t = 2000)]
    patterns: usize,
    /// Mean pattern embeddings per sequence.
    #[arg(long, default_value_t = 2.0)]
    patterns_per_sequence: f64,
    /// Probability of leaving a pattern item out of an embedding.
    #[arg(long, default_value_t = 0.25)]
    corruption: f64,
    /// Pattern popularity ∝ 1/rank^skew.
    #[arg(long, default_value_t = 1.0)]
    pattern_skew: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Input files; without them a synthetic database is generated.
    #[arg(long, requires = "eutil")]
    db: Option<PathBuf>,
    #[arg(long, requires = "db")]
    eutil: Option<PathBuf>,
    /// Size of the generated database.
    #[arg(long, default_value_t = 10_000, conflicts_with = "db")]
    sequences: usize,
    #[arg(long, default_value_t = 0, conflicts_with = "db")]
    seed: u64,
    /// Dataset column; defaults to the file stem or `syn<N>`.
    #[arg(long)]
    name: Option<String>,
    /// Comma-separated minutil values.
    #[arg(long, value_delimiter = ',', required = true)]
    minutil: Vec<String>,
    #[arg(long, default_value = "0.6")]
    minconf: String,
    /// Comma-separated variants; all seven by default.
    #[arg(long, value_delimiter = ',')]
    variant: Vec<String>,
    /// CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Worker threads; 1 keeps wall times free of contention.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// Marks failures caused by the caller rather than by this program.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn is_input_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<InputError>()
            || c.is::<io::Error>()
            || c.is::<DataError>()
            || c.is::<RuleError>()
            || c.is::<ConfigError>()
            || c.is::<GenError>()
            || c.is::<csv::Error>()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_input_error(&e) { 2 } else { 1 })
        }
        Err(_) => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Describe(a) => cmd_describe(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(args: &DbArgs) -> Result<SequenceDatabase> {
    let db = read(&args.db)?;
    let eutil = read(&args.eutil)?;
    SequenceDatabase::parse(&db, &eutil).with_context(|| {
        format!(
            "cannot load {} with {}",
            args.db.display(),
            args.eutil.display()
        )
    })
}

fn thresholds(t: &ThresholdArgs) -> Result<Thresholds> {
    Ok(Thresholds::parse(&t.minutil, &t.minconf)?)
}

fn time_limit(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| {
        Duration::try_from_secs_f64(s).map_err(|_| input_error(format!("bad time limit `{s}`")))
    })
    .transpose()
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct ConfigEcho {
    db: String,
    eutil: String,
    variant: String,
    minutil: String,
    minconf: String,
    time_limit_s: Option<f64>,
    strategies: VariantConfig,
}

#[derive(Serialize)]
struct Digests {
    rules_sha256: String,
}

/// Everything in it depends only on inputs and configuration.
#[derive(Serialize)]
struct RunReport {
    config: ConfigEcho,
    dataset: DatasetStats,
    stats: MiningStats,
    outputs: Digests,
}

fn cmd_mine(a: MineArgs) -> Result<()> {
    let db = load(&a.input)?;
    let t = thresholds(&a.thresholds)?;
    let variant: Variant = a.variant.parse()?;
    let options = MineOptions {
        time_limit: time_limit(a.time_limit)?,
    };
    let cfg = variant.config();
    let start = Instant::now();
    let result = miner::mine_with(&db, &t, &cfg, &options, &mut NoObserver);
    let elapsed = start.elapsed();
    if result.stats.aborted {
        eprintln!("warning: time limit reached; the rule set is partial");
    }
    let text = report::rules_text(&result.rules, db.vocab());
    emit(a.out.as_deref(), &text)?;
    eprintln!(
        "{} rules, {} candidates, {:.3} s ({:.3} s preprocessing)",
        result.rules.len(),
        result.stats.candidates_evaluated,
        elapsed.as_secs_f64(),
        result.timings.preprocess.as_secs_f64()
    );
    if let Some(path) = a.stats {
        let run = RunReport {
            config: ConfigEcho {
                db: a.input.db.display().to_string(),
                eutil: a.input.eutil.display().to_string(),
                variant: variant.name().to_string(),
                minutil: t.minutil().to_string(),
                minconf: format_ratio(t.minconf()),
                time_limit_s: a.time_limit,
                strategies: cfg,
            },
            dataset: datagen::describe(&db),
            stats: result.stats,
            outputs: Digests {
                rules_sha256: sha256_hex(text.as_bytes()),
            },
        };
        let json = serde_json::to_string_pretty(&run)? + "\n";
        emit(Some(&path), &json)?;
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let db = load(&a.input)?;
    let t = thresholds(&a.thresholds)?;
    let covering = OracleLimits::covering(&db);
    let limits = OracleLimits {
        max_antecedent_items: a
            .max_antecedent_items
            .unwrap_or(covering.max_antecedent_items),
        max_consequent_items: a
            .max_consequent_items
            .unwrap_or(covering.max_consequent_items),
        max_total_items: a.max_total_items.unwrap_or(covering.max_total_items),
    };
    let rules = totalsr::oracle_mine(&db, &t, &limits);
    emit(a.out.as_deref(), &report::rules_text(&rules, db.vocab()))
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    let mut db = load(&a.input)?;
    if let Some(minutil) = &a.minutil {
        let t = Thresholds::parse(minutil, "0")?;
        db = miner::preprocess(&db, &t, &Variant::TotalSr.config()).db;
    }
    let rule = Rule::parse(&a.rule, db.vocab())?;
    emit(a.out.as_deref(), &report::inspect(&db, &rule))
}

fn utility_arg(text: &str) -> Result<Utility> {
    text.parse()
        .map_err(|_| input_error(format!("bad unit utility `{text}`")))
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let params = GenParams {
        num_sequences: a.sequences,
        alphabet_size: a.alphabet,
        avg_itemsets_per_sequence: a.avg_itemsets,
        avg_items_per_itemset: a.avg_items,
        max_quantity: a.max_quantity,
        unit_utility_range: (
            utility_arg(&a.min_unit_utility)?,
            utility_arg(&a.max_unit_utility)?,
        ),
        skew: a.skew,
        patterns: (a.patterns > 0).then_some(PatternParams {
            pool_size: a.patterns,
            avg_per_sequence: a.patterns_per_sequence,
            corruption: a.corruption,
            skew: a.pattern_skew,
        }),
        seed: a.seed,
    };
    let db = datagen::generate(&params)?;
    let utl = a.out.with_extension("utl");
    if utl == a.out {
        return Err(input_error("the database path must not end in .utl"));
    }
    for (path, text) in [(&a.out, db.to_db_text()), (&utl, db.to_eutil_text())] {
        emit(Some(path), &text)?;
        println!("{}  {}", sha256_hex(text.as_bytes()), path.display());
    }
    Ok(())
}

/// One CSV row; the header is the field list.
#[derive(Serialize)]
struct BenchRow {
    dataset: String,
    variant: &'static str,
    minutil: String,
    minconf: String,
    candidates: u64,
    htsrs: u64,
    wall_ms: u128,
    peak_table_rows: u64,
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let (db, dataset) = match (&a.db, &a.eutil) {
        (Some(db), Some(eutil)) => {
            let input = DbArgs {
                db: db.clone(),
                eutil: eutil.clone(),
            };
            let stem = db
                .file_stem()
                .map_or_else(|| "db".into(), |s| s.to_string_lossy().into_owned());
            (load(&input)?, a.name.clone().unwrap_or(stem))
        }
        _ => (
            datagen::generate(&GenParams::syn(a.sequences, a.seed))?,
            a.name
                .clone()
                .unwrap_or_else(|| format!("syn{}", a.sequences)),
        ),
    };
    let variants: Vec<Variant> = if a.variant.is_empty() {
        Variant::ALL.to_vec()
    } else {
        a.variant
            .iter()
            .map(|v| v.parse())
            .collect::<Result<_, _>>()?
    };
    let cells: Vec<(Thresholds, Variant)> = a
        .minutil
        .iter()
        .map(|u| Thresholds::parse(u, &a.minconf))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flat_map(|t| variants.iter().map(move |&v| (t, v)))
        .collect();
    let options = MineOptions {
        time_limit: time_limit(a.time_limit)?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.max(1))
        .build()
        .map_err(|e| anyhow!("cannot start worker threads: {e}"))?;
    // Collecting an indexed parallel iterator keeps sweep order.
    let rows: Vec<BenchRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|(t, v)| {
                let start = Instant::now();
                let r = miner::mine_with(&db, t, &v.config(), &options, &mut NoObserver);
                let wall_ms = start.elapsed().as_millis();
                if r.stats.aborted {
                    eprintln!("warning: {v} at minutil {} hit the time limit", t.minutil());
                }
                BenchRow {
                    dataset: dataset.clone(),
                    variant: v.name(),
                    minutil: t.minutil().to_string(),
                    minconf: format_ratio(t.minconf()),
                    candidates: r.stats.candidates_evaluated,
                    htsrs: r.stats.htsrs,
                    wall_ms,
                    peak_table_rows: r.stats.peak_table_rows,
                }
            })
            .collect()
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    emit(a.out.as_deref(), &String::from_utf8(bytes)?)
}

fn cmd_describe(a: DbArgs) -> Result<()> {
    let db = load(&a)?;
    let json = serde_json::to_string_pretty(&datagen::describe(&db))? + "\n";
    emit(None, &json)
}
