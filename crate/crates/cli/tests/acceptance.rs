//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use totalsr::bounds::{self, ExpansionKind, Mode, Side};
use totalsr::datagen::{generate, small_random, GenParams, SmallDbShape};
use totalsr::example::{running_example, RUNNING_EXAMPLE_DB, RUNNING_EXAMPLE_EUTIL};
use totalsr::miner::{mine, mine_with, preprocess, Edge, MineOptions, Observer, Variant};
use totalsr::oracle::{oracle_mine, OracleLimits};
use totalsr::seqdb::build_upsl;
use totalsr::{MinedRule, Rule, SequenceDatabase, Thresholds, Utility};

/// Per-variant runtime cap on the running example.
const EXAMPLE_RUNTIME: Duration = Duration::from_secs(1);
/// Random databases for the equivalence and pruning criteria.
const CASES: u64 = 200;
/// Wall-time cap for the whole equivalence sweep.
const EQUIVALENCE_RUNTIME: Duration = Duration::from_secs(60);
/// Share of inputs on which Bald must evaluate strictly more candidates.
const STRICT_SHARE: f64 = 0.5;
/// Random (sequence, range) probes of the prefix sums.
const RANGE_PROBES: usize = 10_000;
/// Scalability sizes, threshold and generator seed.
const SCALE_SIZES: [usize; 3] = [5_000, 10_000, 20_000];
const SCALE_MINUTIL: &str = "10000";
const SCALE_MINCONF: &str = "0.6";
const SCALE_SEED: u64 = 7;
/// Generated input for the determinism criterion; same shape as the smallest scale point.
const DETERMINISM_SEQUENCES: &str = "5000";
const DETERMINISM_SEED: &str = "7";

type Check = fn(&Fixture) -> Result<String, String>;

struct Fixture {
    dir: tempfile::TempDir,
    db: PathBuf,
    eutil: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().expect("temporary directory");
        let db = dir.path().join("example.seq");
        let eutil = dir.path().join("example.utl");
        std::fs::write(&db, RUNNING_EXAMPLE_DB).expect("write database");
        std::fs::write(&eutil, RUNNING_EXAMPLE_EUTIL).expect("write utilities");
        Fixture { dir, db, eutil }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_totalsr"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run the binary: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn cli_owned(args: &[String]) -> Result<String, String> {
    cli(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temporary path")
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

const TABLE3: &str = "\
{e,f} -> {c} #SUP: 0.7500 #CONF: 1.0000 #UTIL: 34
{e,f} -> {c},{b} #SUP: 0.5000 #CONF: 0.6667 #UTIL: 28
{e,f},{c} -> {b} #SUP: 0.5000 #CONF: 0.6667 #UTIL: 28
{e} -> {c} #SUP: 0.7500 #CONF: 1.0000 #UTIL: 25
";

fn running_example_exactness(f: &Fixture) -> Result<String, String> {
    let mut slowest = Duration::ZERO;
    for v in Variant::ALL {
        let start = Instant::now();
        let out = cli(&[
            "mine",
            "--db",
            arg(&f.db),
            "--eutil",
            arg(&f.eutil),
            "--minutil",
            "25",
            "--minconf",
            "0.5",
            "--variant",
            v.name(),
        ])?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        ensure(out == TABLE3, || format!("variant {v} printed:\n{out}"))?;
        ensure(took < EXAMPLE_RUNTIME, || {
            format!("variant {v} took {took:?}")
        })?;
    }
    Ok(format!(
        "7 variants, 4 rules each, slowest {:.0} ms",
        slowest.as_secs_f64() * 1e3
    ))
}

fn bound_spot_values(_: &Fixture) -> Result<String, String> {
    let original = running_example();
    let t = Thresholds::parse("25", "0.5").expect("valid thresholds");
    // Rule bounds refer to the database after unpromising items are removed.
    let db = preprocess(&original, &t, &Variant::TotalSr.config()).db;
    let item = |t: &str| original.item(t).expect("known item");
    let rule = |t: &str| Rule::parse(t, db.vocab()).expect("valid rule");
    let r1_parent = rule("{e,f} -> {b}");
    let r3 = rule("{e,f} -> {c}");
    let r3_parent = rule("{e} -> {c}");
    let left_s_c = ExpansionKind::left(Mode::S, item("c"));
    let left_i_f = ExpansionKind::left(Mode::I, item("f"));
    let right_s_b = ExpansionKind::right(Mode::S, item("b"));
    let got = [
        ("SEU(a)", bounds::seu_item(&original, item("a")), 37),
        ("SEU(h)", bounds::seu_item(&original, item("h")), 16),
        ("LEPEU(r3)", bounds::lepeu(&r3, &db).total, 28),
        ("REPEU(r3)", bounds::repeu(&r3, &db).total, 37),
        (
            "LERSU(r3 via f)",
            bounds::lersu(&r3_parent, &left_i_f, &db),
            38,
        ),
        ("RERSU(r4 via b)", bounds::rersu(&r3, &right_s_b, &db), 37),
        (
            "LERSPEU(r1 via c)",
            bounds::lerspeu(&r1_parent, &left_s_c, &db),
            37,
        ),
        (
            "RERSPEU(r4 via b)",
            bounds::rerspeu(&r3, &right_s_b, &db),
            28,
        ),
    ];
    for (name, value, want) in got {
        ensure(value == Utility::from_int(want), || {
            format!("{name} = {value}, want {want}")
        })?;
    }
    Ok("8 of 8 values exact".into())
}

/// The seeded inputs shared by the equivalence and pruning criteria.
fn cases() -> impl Iterator<Item = (SequenceDatabase, Thresholds)> {
    (0..CASES).map(|seed| {
        let db = small_random(seed, SmallDbShape::default());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let total: u64 = db
            .sequences()
            .iter()
            .map(|s| db.sequence_utility(s).raw())
            .sum();
        let cap = (total / 10_000).max(2);
        let minutil = rng.gen_range(1..=cap * 2 / 3 + 1).to_string();
        let minconf = format!("{}", rng.gen_range(0..=4) as f64 / 4.0);
        (
            db,
            Thresholds::parse(&minutil, &minconf).expect("valid thresholds"),
        )
    })
}

fn texts(db: &SequenceDatabase, rules: &[MinedRule]) -> Vec<String> {
    rules
        .iter()
        .map(|r| format!("{} {:?}", r.rule.to_text(db.vocab()), r.measures))
        .collect()
}

fn oracle_equivalence(_: &Fixture) -> Result<String, String> {
    let start = Instant::now();
    let mut rules = 0;
    for (i, (db, t)) in cases().enumerate() {
        let expected = texts(&db, &oracle_mine(&db, &t, &OracleLimits::covering(&db)));
        rules += expected.len();
        for v in Variant::ALL {
            let got = texts(&db, &mine(&db, &t, &v.config()).rules);
            ensure(got == expected, || {
                format!("case {i}, variant {v}: {got:?} vs {expected:?}")
            })?;
        }
    }
    let took = start.elapsed();
    ensure(took < EQUIVALENCE_RUNTIME, || format!("took {took:?}"))?;
    Ok(format!(
        "{CASES} databases × 7 variants, {rules} oracle rules, {:.1} s",
        took.as_secs_f64()
    ))
}

fn pruning_monotonicity(_: &Fixture) -> Result<String, String> {
    let chain = [
        Variant::Bald,
        Variant::Seu,
        Variant::Rsu,
        Variant::Rspeu,
        Variant::TotalSr,
    ];
    let example = (
        running_example(),
        Thresholds::parse("25", "0.5").expect("valid"),
    );
    let mut inputs = 0;
    let mut strict = 0;
    for (i, (db, t)) in cases().chain(std::iter::once(example)).enumerate() {
        let counts: Vec<u64> = chain
            .iter()
            .map(|v| mine(&db, &t, &v.config()).stats.candidates_evaluated)
            .collect();
        ensure(counts.windows(2).all(|w| w[0] >= w[1]), || {
            format!("input {i}: {counts:?}")
        })?;
        inputs += 1;
        strict += usize::from(counts[0] > counts[4]);
    }
    let share = strict as f64 / inputs as f64;
    ensure(share >= STRICT_SHARE, || {
        format!("strict decrease on {strict} of {inputs}")
    })?;
    Ok(format!(
        "monotone on {inputs} inputs, strict on {strict} ({:.0}%)",
        share * 100.0
    ))
}

#[derive(Default)]
struct EdgeAudit {
    edges: u64,
    violations: Vec<String>,
}

impl Observer for EdgeAudit {
    fn wants_detail(&self) -> bool {
        true
    }

    fn edge(&mut self, e: &Edge<'_>) {
        self.edges += 1;
        let u = e.child_utility;
        let ok = match e.kind.side {
            Side::Left => u <= e.parent_table.lepeu && u <= e.rsu && u <= e.rspeu,
            Side::Right => {
                let pe = e.parent_table.repeu;
                u <= pe && u <= e.rsu && u <= e.rspeu && e.rspeu <= e.rsu && e.rsu <= pe
            }
        };
        if !ok && self.violations.len() < 5 {
            self.violations.push(format!(
                "{:?} → {:?}: u={u} rsu={} rspeu={} parent {:?}",
                e.parent, e.child, e.rsu, e.rspeu, e.parent_table
            ));
        }
    }
}

fn bound_soundness(_: &Fixture) -> Result<String, String> {
    let mut audit = EdgeAudit::default();
    for (db, t) in cases() {
        let cfg = Variant::Bald.config();
        mine_with(&db, &t, &cfg, &MineOptions::default(), &mut audit);
    }
    ensure(audit.violations.is_empty(), || audit.violations.join("\n"))?;
    ensure(audit.edges > 0, || "no edges recorded".into())?;
    Ok(format!("{} Bald edges, 0 violations", audit.edges))
}

/// The lines of the block headed `title` in an inspect dump.
fn block<'a>(dump: &'a str, title: &str) -> Result<Vec<&'a str>, String> {
    dump.split("\n\n")
        .map(|b| b.lines().collect::<Vec<_>>())
        .find(|b| b.first() == Some(&title))
        .map(|b| b[1..].to_vec())
        .ok_or_else(|| format!("no `{title}` block in:\n{dump}"))
}

fn table_fidelity(f: &Fixture) -> Result<String, String> {
    let inspect = |rule: &str| {
        cli(&[
            "inspect",
            "--db",
            arg(&f.db),
            "--eutil",
            arg(&f.eutil),
            "--minutil",
            "25",
            "--rule",
            rule,
        ])
    };
    let r1 = inspect("{e,f},{c} -> {b}")?;
    let r3 = inspect("{e,f} -> {c}")?;
    let expect = |got: Vec<&str>, want: &[&str], what: &str| {
        ensure(got == want, || format!("{what}: got {got:#?}"))
    };
    expect(
        block(&r1, "LE table")?,
        &[
            "SID\tUtility\tLEPEU\tREPEU\tPositions\tIndices",
            "s2\t0\t0\t0\t(4,-1,-1)\t(-1,-1)",
            "s3\t17\t0\t0\t(3,4,4)\t(5,5)",
            "s4\t11\t20\t0\t(2,4,4)\t(4,6)",
        ],
        "LE table of r1",
    )?;
    expect(
        block(&r3, "RE table")?,
        &[
            "SID\tUtility\tREPEU\tPosition\tIndex",
            "s3\t16\t17\t3\t5",
            "s4\t10\t20\t2\t6",
        ],
        "RE table of r3",
    )?;
    expect(
        block(&r1, "UPSL s4")?,
        &[
            "item\te\tf\tc\td\tg\tb",
            "index\t1\t2\t3\t4\t5\t6",
            "us\t4\t7\t10\t13\t19\t20",
        ],
        "UPSL of s4",
    )?;
    expect(
        block(&r1, "LE+ table")?,
        &[
            "SID\tUtility\tLEPEU\tREPEU\tPositions\tIndices",
            "s3\t17\t0\t0\t(3,4,4)\t(5,5)",
            "s4\t11\t20\t0\t(2,4,4)\t(4,6)",
        ],
        "LE+ table of r1",
    )?;
    expect(block(&r1, "ART")?, &["{e,f},{c}: {s2}"], "ART of r1")?;
    Ok("LE, RE, UPSL, LE+ and ART dumps match".into())
}

fn upsl_correctness(_: &Fixture) -> Result<String, String> {
    let db = generate(&GenParams::syn(2_000, 3)).map_err(|e| e.to_string())?;
    let seqs: Vec<_> = db.sequences().iter().filter(|s| !s.is_empty()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e);
    for probe in 0..RANGE_PROBES {
        let s = seqs[rng.gen_range(0..seqs.len())];
        let upsl = build_upsl(s, db.eutil());
        let (a, b) = (rng.gen_range(1..=s.len()), rng.gen_range(1..=s.len()));
        let (from, to) = (a.min(b), a.max(b));
        let naive: Utility = s.items()[from - 1..to]
            .iter()
            .map(|q| db.qitem_utility(q))
            .sum();
        let fast = upsl.range_utility(from, to).map_err(|e| e.to_string())?;
        ensure(fast == naive, || {
            format!(
                "probe {probe}: {} [{from}, {to}]: {fast} vs {naive}",
                s.sid()
            )
        })?;
    }
    Ok(format!("{RANGE_PROBES} probes exact"))
}

fn determinism(f: &Fixture) -> Result<String, String> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    let gen_args = |out: &Path| {
        let mut a = vec!["gen".to_string(), "--out".into(), arg(out).into()];
        a.extend(
            [
                "--sequences",
                DETERMINISM_SEQUENCES,
                "--seed",
                DETERMINISM_SEED,
            ]
            .map(String::from),
        );
        a
    };
    let gen = cli_owned(&gen_args(&f.path("g.seq")))?;
    let mut files = Vec::new();
    for run in 0..2 {
        let rules = f.path(&format!("rules{run}.txt"));
        let stats = f.path(&format!("stats{run}.json"));
        let seq = f.path(&format!("g{run}.seq"));
        let digests = cli_owned(&gen_args(&seq))?;
        ensure(
            digests
                .split_whitespace()
                .step_by(2)
                .eq(gen.split_whitespace().step_by(2)),
            || format!("gen digests differ:\n{digests}\n{gen}"),
        )?;
        cli(&[
            "mine",
            "--db",
            arg(&seq),
            "--eutil",
            arg(&seq.with_extension("utl")),
            "--minutil",
            SCALE_MINUTIL,
            "--minconf",
            SCALE_MINCONF,
            "--out",
            arg(&rules),
            "--stats",
            arg(&stats),
        ])?;
        files.push((
            read(&rules)?,
            read(&seq)?,
            read(&seq.with_extension("utl"))?,
        ));
    }
    // Stats echo their input paths, which differ between the two runs.
    let stats = |run: usize| -> Result<String, String> {
        let text = std::fs::read_to_string(f.path(&format!("stats{run}.json")))
            .map_err(|e| e.to_string())?;
        Ok(text.replace(&format!("g{run}."), "g."))
    };
    ensure(files[0].0 == files[1].0, || "rules files differ".into())?;
    ensure(stats(0)? == stats(1)?, || "stats files differ".into())?;
    ensure(files[0].1 == files[1].1 && files[0].2 == files[1].2, || {
        "generated files differ".into()
    })?;
    let rules = String::from_utf8_lossy(&files[0].0).lines().count();
    Ok(format!(
        "rules ({rules} lines), stats and generated files identical across runs"
    ))
}

fn scalability(_: &Fixture) -> Result<String, String> {
    let t = Thresholds::parse(SCALE_MINUTIL, SCALE_MINCONF).map_err(|e| e.to_string())?;
    let mut counts = Vec::new();
    let mut largest = None;
    for n in SCALE_SIZES {
        let db = generate(&GenParams::syn(n, SCALE_SEED)).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let r = mine(&db, &t, &Variant::TotalSrPlus.config());
        let took = start.elapsed();
        ensure(!r.stats.aborted, || format!("{n} sequences did not finish"))?;
        counts.push(r.stats.htsrs);
        largest = Some((db, took, r.rules));
    }
    ensure(counts.windows(2).all(|w| w[0] <= w[1]), || {
        format!("HTSR counts {counts:?}")
    })?;
    let (db, plus_time, plus_rules) = largest.expect("at least one size");
    let start = Instant::now();
    let base = mine(&db, &t, &Variant::TotalSr.config());
    let base_time = start.elapsed();
    ensure(base.rules == plus_rules, || {
        "TotalSR and TotalSR+ disagree".into()
    })?;
    ensure(plus_time <= base_time, || {
        format!("TotalSR+ {plus_time:?} slower than TotalSR {base_time:?}")
    })?;
    Ok(format!(
        "HTSRs {counts:?} at minutil {SCALE_MINUTIL}; 20k: TotalSR+ {:.2} s ≤ TotalSR {:.2} s",
        plus_time.as_secs_f64(),
        base_time.as_secs_f64()
    ))
}

fn main() {
    let checks: [(&str, Check); 9] = [
        ("running-example exactness", running_example_exactness),
        ("bound spot values", bound_spot_values),
        ("oracle equivalence", oracle_equivalence),
        ("pruning monotonicity", pruning_monotonicity),
        ("bound soundness", bound_soundness),
        ("table fidelity", table_fidelity),
        ("UPSL correctness", upsl_correctness),
        ("determinism", determinism),
        ("scalability smoke", scalability),
    ];
    let fixture = Fixture::new();
    let mut failed = 0;
    for (i, (name, check)) in checks.into_iter().enumerate() {
        let outcome = std::panic::catch_unwind(|| check(&fixture))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
