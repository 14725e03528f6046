//! Depth-first search for high-utility totally-ordered sequential rules.
//!
//! Every node is a rule with an LE table. A node first grows its antecedent
//! (left expansion), then its consequent (right expansion); a right-expanded
//! node only grows its consequent further. Under this discipline each rule is
//! reached along exactly one path, and the antecedent count of a node is
//! fixed once right expansion starts, so confidence can only fall.
//!
//! Each expansion runs in two phases: a scan over all of the node's rows that
//! builds every child's table and bound accumulators, then a filter and
//! recurse pass over children in (item, I before S) order.
//!
//! The plus engine keeps only full rows in its tables. Antecedent support
//! comes from an ART keyed by antecedent, so every rule sharing an antecedent
//! (such as all seeds ⟨a⟩ → ⟨b⟩) reuses one count. The antecedent-only
//! sequences of a rule are the ART entry minus its full rows.

use rustc_hash::FxHashMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use serde::Serialize;

use crate::bounds::{ExpansionKind, Mode};
use crate::error::ConfigError;
use crate::rules::{parse_ratio, Itemset, Rule, RuleMeasures};
use crate::seqdb::{build_upsl, Item, QSequence, SequenceDatabase, Sid, Upsl};
use crate::tables::{LeElement, ReElement, TableMeasures, ABSENT};
use crate::utility::Utility;

/// Which reduced-sequence bound filters children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RsBound {
    None,
    Rsu,
    Rspeu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// LE tables carry antecedent-only rows.
    TotalSr,
    /// LE tables carry full rows only; antecedent-only sids live in an ART.
    TotalSrPlus,
}

/// Per-strategy switches. None of them changes the result set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct VariantConfig {
    pub use_seu_item_pruning: bool,
    pub use_seu_rule_pruning: bool,
    /// Left gate on the padded LEPEU + REPEU − u, right gate on REPEU.
    pub use_pe_bounds: bool,
    pub use_rs_bounds: RsBound,
    pub use_confidence_pruning: bool,
    /// Range sums through prefix sums instead of naive summation.
    pub use_upsl: bool,
    pub engine: Engine,
}

/// Named presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Bald,
    Seu,
    SeuMinus,
    Rsu,
    Rspeu,
    TotalSr,
    TotalSrPlus,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Bald,
        Variant::Seu,
        Variant::SeuMinus,
        Variant::Rsu,
        Variant::Rspeu,
        Variant::TotalSr,
        Variant::TotalSrPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bald => "bald",
            Variant::Seu => "seu",
            Variant::SeuMinus => "seu-",
            Variant::Rsu => "rsu",
            Variant::Rspeu => "rspeu",
            Variant::TotalSr => "totalsr",
            Variant::TotalSrPlus => "totalsr+",
        }
    }

    pub fn config(self) -> VariantConfig {
        let bald = VariantConfig {
            use_seu_item_pruning: false,
            use_seu_rule_pruning: false,
            use_pe_bounds: false,
            use_rs_bounds: RsBound::None,
            use_confidence_pruning: false,
            use_upsl: true,
            engine: Engine::TotalSr,
        };
        let seu = VariantConfig {
            use_seu_item_pruning: true,
            use_seu_rule_pruning: true,
            ..bald
        };
        let rsu = VariantConfig {
            use_pe_bounds: true,
            use_rs_bounds: RsBound::Rsu,
            ..seu
        };
        let rspeu = VariantConfig {
            use_rs_bounds: RsBound::Rspeu,
            ..rsu
        };
        let totalsr = VariantConfig {
            use_confidence_pruning: true,
            ..rspeu
        };
        match self {
            Variant::Bald => bald,
            Variant::Seu => seu,
            Variant::SeuMinus => VariantConfig {
                use_upsl: false,
                ..seu
            },
            Variant::Rsu => rsu,
            Variant::Rspeu => rspeu,
            Variant::TotalSr => totalsr,
            Variant::TotalSrPlus => VariantConfig {
                engine: Engine::TotalSrPlus,
                ..totalsr
            },
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ConfigError::UnknownVariant(s.to_string()))
    }
}

/// minutil > 0 and minconf ∈ [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Thresholds {
    minutil: Utility,
    minconf: Ratio<u64>,
}

impl Thresholds {
    pub fn new(minutil: Utility, minconf: Ratio<u64>) -> Result<Self, ConfigError> {
        if minutil.is_zero() {
            return Err(ConfigError::NonPositiveMinutil);
        }
        if minconf > Ratio::from_integer(1) {
            return Err(ConfigError::BadMinconf(minconf.to_string()));
        }
        Ok(Thresholds { minutil, minconf })
    }

    /// Parses decimal text such as `25` and `0.5`.
    pub fn parse(minutil: &str, minconf: &str) -> Result<Self, ConfigError> {
        let u: Utility = minutil
            .parse()
            .map_err(|_| ConfigError::NonPositiveMinutil)?;
        let c = parse_ratio(minconf).ok_or_else(|| ConfigError::BadMinconf(minconf.to_string()))?;
        Thresholds::new(u, c)
    }

    pub fn minutil(&self) -> Utility {
        self.minutil
    }

    pub fn minconf(&self) -> Ratio<u64> {
        self.minconf
    }

    fn confident(&self, support: u64, antecedent: u64) -> bool {
        antecedent > 0 && Ratio::new(support, antecedent) >= self.minconf
    }
}

/// Children removed by each strategy; zero for disabled strategies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PruneCounters {
    /// Items deleted by the SEU fixpoint.
    pub seu_item: u64,
    /// 1 ∗ 1 seeds dropped by SEU.
    pub seu_rule: u64,
    /// Left expansions skipped by the combined prefix-extension gate.
    pub pe_left: u64,
    /// Right expansions skipped because REPEU < minutil.
    pub pe_right: u64,
    /// Left children dropped by REPEU(parent) + LERSU/LERSPEU.
    pub rs_left: u64,
    /// Right children dropped by RERSU/RERSPEU.
    pub rs_right: u64,
    /// Right expansions skipped because confidence < minconf.
    pub confidence: u64,
}

/// Deterministic work counters of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MiningStats {
    pub candidates_evaluated: u64,
    pub seeds: u64,
    pub left_expansions: u64,
    pub right_expansions: u64,
    pub htsrs: u64,
    pub prune: PruneCounters,
    /// Largest number of LE/RE rows alive at once. ART entries are not rows.
    pub peak_table_rows: u64,
    /// The time limit stopped the search; the rule set is partial.
    pub aborted: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseTimes {
    pub preprocess: Duration,
    pub mining: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinedRule {
    pub rule: Rule,
    pub measures: RuleMeasures,
}

#[derive(Clone, Debug)]
pub struct MiningResult {
    /// HTSRs ordered by rule text.
    pub rules: Vec<MinedRule>,
    pub stats: MiningStats,
    pub timings: PhaseTimes,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MineOptions {
    pub time_limit: Option<Duration>,
}

/// The rows behind an evaluated rule.
#[derive(Clone, Copy, Debug)]
pub enum RowsView<'a> {
    Le {
        full: &'a [LeElement],
        antecedent_only: &'a [LeElement],
        art: &'a [Sid],
    },
    Re(&'a [ReElement]),
}

/// A rule whose measures were computed.
#[derive(Clone, Copy, Debug)]
pub struct Evaluation<'a> {
    pub rule: &'a Rule,
    pub measures: RuleMeasures,
    pub rows: RowsView<'a>,
}

/// A generated child, reported before any filter runs.
#[derive(Clone, Copy, Debug)]
pub struct Edge<'a> {
    pub parent: &'a Rule,
    pub child: &'a Rule,
    pub kind: ExpansionKind,
    /// Totals of the parent's table (LEPEU and REPEU with zero branches).
    pub parent_table: TableMeasures,
    pub child_utility: Utility,
    /// LERSU or RERSU of the child.
    pub rsu: Utility,
    /// LERSPEU or RERSPEU of the child.
    pub rspeu: Utility,
}

/// Hooks into a run; used by tests and instrumentation.
pub trait Observer {
    fn evaluated(&mut self, _evaluation: &Evaluation<'_>) {}

    /// Whether [`Observer::edge`] should be called and ART sid lists be
    /// materialised for [`RowsView::Le`]; both cost time on every child.
    fn wants_detail(&self) -> bool {
        false
    }

    fn edge(&mut self, _edge: &Edge<'_>) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

/// Range sums over flat indices, by prefix sums or by naive summation.
#[derive(Clone, Debug)]
pub struct RangeSums {
    item_utilities: Vec<Vec<Utility>>,
    upsls: Option<Vec<Upsl>>,
    sequence_utilities: Vec<Utility>,
}

impl RangeSums {
    pub fn new(db: &SequenceDatabase, use_upsl: bool) -> Self {
        let item_utilities: Vec<Vec<Utility>> = db
            .sequences()
            .iter()
            .map(|s| s.items().iter().map(|q| db.qitem_utility(q)).collect())
            .collect();
        let sequence_utilities = item_utilities.iter().map(|u| u.iter().sum()).collect();
        let upsls = use_upsl.then(|| {
            db.sequences()
                .iter()
                .map(|s| build_upsl(s, db.eutil()))
                .collect()
        });
        RangeSums {
            item_utilities,
            upsls,
            sequence_utilities,
        }
    }

    /// Utility of flat indices `from..=to` of sequence `sid`; zero when the
    /// range is empty.
    pub fn range(&self, sid: Sid, from: u32, to: u32) -> Utility {
        if from > to {
            return Utility::ZERO;
        }
        let s = sid.0 as usize - 1;
        match &self.upsls {
            Some(upsls) => upsls[s].upto(to as usize) - upsls[s].upto(from as usize - 1),
            None => self.item_utilities[s][from as usize - 1..to as usize]
                .iter()
                .sum(),
        }
    }

    /// u(i, s) of the item at flat index `k`.
    pub fn item(&self, sid: Sid, k: u32) -> Utility {
        self.item_utilities[sid.0 as usize - 1][k as usize - 1]
    }

    pub fn sequence_utility(&self, sid: Sid) -> Utility {
        self.sequence_utilities[sid.0 as usize - 1]
    }

    /// `u + range(from, to)`, or zero when the range is empty.
    fn peu(&self, utility: Utility, sid: Sid, from: u32, to: u32) -> Utility {
        if from > to {
            Utility::ZERO
        } else {
            utility + self.range(sid, from, to)
        }
    }
}

/// The database after item pruning, with its range sums.
#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub db: SequenceDatabase,
    pub ranges: RangeSums,
    pub removed_items: u64,
}

/// Deletes items with SEU < minutil until none remain (when enabled) and
/// builds range sums.
pub fn preprocess(
    db: &SequenceDatabase,
    thresholds: &Thresholds,
    cfg: &VariantConfig,
) -> Preprocessed {
    let mut db = db.clone();
    let mut removed_items = 0;
    if cfg.use_seu_item_pruning {
        loop {
            let mut seu = vec![Utility::ZERO; db.vocab().len()];
            for s in db.sequences() {
                let su = db.sequence_utility(s);
                for q in s.items() {
                    seu[q.item.index()] += su;
                }
            }
            let victims: std::collections::BTreeSet<Item> = db
                .occurring_items()
                .into_iter()
                .filter(|i| seu[i.index()] < thresholds.minutil)
                .collect();
            if victims.is_empty() {
                break;
            }
            removed_items += victims.len() as u64;
            db = db.remove_items(&victims);
        }
    }
    let ranges = RangeSums::new(&db, cfg.use_upsl);
    Preprocessed {
        db,
        ranges,
        removed_items,
    }
}

/// A 1 ∗ 1 rule with its LE table, as produced before any expansion.
#[derive(Clone, Debug)]
pub struct Seed {
    pub rule: Rule,
    pub full: Vec<LeElement>,
    /// Antecedent-only rows (TotalSR engine).
    pub antecedent_only: Vec<LeElement>,
    /// Antecedent-only sids (TotalSR⁺ engine).
    pub art: Vec<Sid>,
}

impl Seed {
    pub fn measures(&self, db_size: u64) -> RuleMeasures {
        RuleMeasures {
            support_count: self.full.len() as u64,
            antecedent_count: (self.full.len() + self.antecedent_only.len() + self.art.len())
                as u64,
            db_size,
            utility: self.full.iter().map(|r| r.utility).sum(),
        }
    }
}

fn antecedent_only_row(sid: Sid, alpha: u32, ant_end: u32) -> LeElement {
    LeElement {
        sid,
        utility: Utility::ZERO,
        lepeu: Utility::ZERO,
        repeu: Utility::ZERO,
        positions: (alpha as i32, ABSENT, ABSENT),
        indices: (ABSENT, ABSENT),
        ant_end,
        cons_end: 0,
    }
}

/// Full LE row of a rule that was just completed in `seq`.
fn full_row(
    ranges: &RangeSums,
    seq: &QSequence,
    utility: Utility,
    repeu: Utility,
    (alpha, beta, gamma): (u32, u32, u32),
    ant_end: u32,
    cons_end: u32,
) -> LeElement {
    let len = seq.len() as u32;
    let last_legal = seq.itemset_start(beta) - 1;
    LeElement {
        sid: seq.sid(),
        utility,
        lepeu: ranges.peu(utility, seq.sid(), ant_end + 1, last_legal),
        repeu,
        positions: (alpha as i32, beta as i32, gamma as i32),
        indices: (
            if ant_end < last_legal {
                ant_end + 1
            } else {
                len
            } as i32,
            len as i32,
        ),
        ant_end,
        cons_end,
    }
}

/// Where each item occurs: (sid, flat index), ascending sid.
fn occurrence_lists(db: &SequenceDatabase) -> Vec<Vec<(Sid, u32)>> {
    let mut occ = vec![Vec::new(); db.vocab().len()];
    for s in db.sequences() {
        for (k, q) in s.items().iter().enumerate() {
            occ[q.item.index()].push((s.sid(), k as u32 + 1));
        }
    }
    occ
}

/// Seeds with antecedent `a`, in consequent order. Seeds failing the SEU
/// rule test are emitted as `None`. ART sids are listed only when
/// `collect_art` is set.
fn seeds_for(
    pre: &Preprocessed,
    cfg: &VariantConfig,
    minutil: Utility,
    a: Item,
    occ_a: &[(Sid, u32)],
    collect_art: bool,
    mut emit: impl FnMut(Option<Seed>) -> bool,
) {
    let db = &pre.db;
    let ranges = &pre.ranges;
    // Flat index of the first item after a's itemset, per occurrence of a.
    let starts: Vec<(Sid, u32, u32)> = occ_a
        .iter()
        .map(|&(sid, ka)| {
            let seq = db.sequence(sid).expect("sid from the database");
            let pos_a = seq.positions()[ka as usize - 1];
            let first_b = if (pos_a as usize) < seq.itemset_count() {
                seq.itemset_start(pos_a + 1)
            } else {
                seq.len() as u32 + 1
            };
            (sid, ka, first_b)
        })
        .collect();
    // SEU of every ⟨a⟩ → ⟨b⟩ first, so that pruned seeds never build rows.
    let mut seu: FxHashMap<Item, Utility> = FxHashMap::default();
    for &(sid, _, first_b) in &starts {
        let seq = db.sequence(sid).expect("sid from the database");
        let su = ranges.sequence_utility(sid);
        for q in &seq.items()[first_b as usize - 1..] {
            *seu.entry(q.item).or_insert(Utility::ZERO) += su;
        }
    }
    let mut bs: Vec<(Item, Utility)> = seu.into_iter().collect();
    bs.sort_unstable_by_key(|&(b, _)| b);
    let mut slot: FxHashMap<Item, usize> = FxHashMap::default();
    let mut tables: Vec<Vec<LeElement>> = Vec::new();
    for &(b, seu) in &bs {
        if !(cfg.use_seu_rule_pruning && seu < minutil) {
            slot.insert(b, tables.len());
            tables.push(Vec::new());
        }
    }
    for &(sid, ka, first_b) in &starts {
        let seq = db.sequence(sid).expect("sid from the database");
        let pos_a = seq.positions()[ka as usize - 1];
        let len = seq.len() as u32;
        let u_a = ranges.item(sid, ka);
        for k in first_b..=len {
            let Some(&t) = slot.get(&seq.items()[k as usize - 1].item) else {
                continue;
            };
            let pos_b = seq.positions()[k as usize - 1];
            let utility = u_a + ranges.item(sid, k);
            let repeu = ranges.peu(utility, sid, k + 1, len);
            tables[t].push(full_row(
                ranges,
                seq,
                utility,
                repeu,
                (pos_a, pos_b, pos_b),
                ka,
                k,
            ));
        }
    }
    for (b, _) in bs {
        let Some(&t) = slot.get(&b) else {
            if !emit(None) {
                return;
            }
            continue;
        };
        let full = std::mem::take(&mut tables[t]);
        let mut antecedent_only = Vec::new();
        let mut art = Vec::new();
        let mut rows = full.iter().peekable();
        for &(sid, ka) in occ_a {
            if rows.peek().is_some_and(|r| r.sid == sid) {
                rows.next();
                continue;
            }
            match cfg.engine {
                Engine::TotalSr => {
                    let seq = db.sequence(sid).expect("sid from the database");
                    let alpha = seq.positions()[ka as usize - 1];
                    antecedent_only.push(antecedent_only_row(sid, alpha, ka));
                }
                Engine::TotalSrPlus if collect_art => art.push(sid),
                Engine::TotalSrPlus => {}
            }
        }
        let seed = Seed {
            rule: Rule::pair(a, b),
            full,
            antecedent_only,
            art,
        };
        if !emit(Some(seed)) {
            return;
        }
    }
}

/// All seeds that survive the SEU rule test, in canonical order, with their
/// antecedent-only rows or ART sids.
pub fn seeds(pre: &Preprocessed, thresholds: &Thresholds, cfg: &VariantConfig) -> Vec<Seed> {
    let occ = occurrence_lists(&pre.db);
    let mut out = Vec::new();
    for a in pre.db.vocab().items() {
        seeds_for(
            pre,
            cfg,
            thresholds.minutil,
            a,
            &occ[a.index()],
            true,
            |s| {
                out.extend(s);
                true
            },
        );
    }
    out
}

pub fn mine(db: &SequenceDatabase, thresholds: &Thresholds, cfg: &VariantConfig) -> MiningResult {
    mine_with(
        db,
        thresholds,
        cfg,
        &MineOptions::default(),
        &mut NoObserver,
    )
}

/// TotalSR⁺: the full preset with the plus engine.
pub fn mine_plus(db: &SequenceDatabase, thresholds: &Thresholds) -> MiningResult {
    mine(db, thresholds, &Variant::TotalSrPlus.config())
}

pub fn mine_with(
    db: &SequenceDatabase,
    thresholds: &Thresholds,
    cfg: &VariantConfig,
    options: &MineOptions,
    observer: &mut dyn Observer,
) -> MiningResult {
    let start = Instant::now();
    let pre = preprocess(db, thresholds, cfg);
    let preprocess_time = start.elapsed();
    let mining_start = Instant::now();

    let occ = occurrence_lists(&pre.db);
    let detail = observer.wants_detail();
    let mut search = Search {
        pre: &pre,
        occ: &occ,
        art: FxHashMap::default(),
        detail,
        cfg,
        thresholds,
        db_size: db.len() as u64,
        deadline: options.time_limit.map(|t| start + t),
        observer,
        stats: MiningStats::default(),
        found: Vec::new(),
        live_rows: 0,
        #[cfg(debug_assertions)]
        seen: std::collections::HashSet::new(),
    };
    search.stats.prune.seu_item = pre.removed_items;
    for a in pre.db.vocab().items() {
        let occ_a = &occ[a.index()];
        if occ_a.is_empty() {
            continue;
        }
        // Every antecedent below seed group `a` starts with `a`.
        search.art.clear();
        seeds_for(&pre, cfg, thresholds.minutil, a, occ_a, detail, |seed| {
            match seed {
                None => search.stats.prune.seu_rule += 1,
                Some(seed) => {
                    search.stats.seeds += 1;
                    let rows = (seed.full.len() + seed.antecedent_only.len()) as u64;
                    search.grow_live(rows);
                    let antecedent_count = match cfg.engine {
                        Engine::TotalSr => Some(rows),
                        Engine::TotalSrPlus => None,
                    };
                    let node = LeftNode {
                        rule: seed.rule,
                        full: seed.full,
                        antecedent_only: seed.antecedent_only,
                        art: seed.art,
                        antecedent_count,
                    };
                    search.visit_left(node);
                    search.live_rows -= rows;
                }
            }
            !search.stats.aborted
        });
        if search.stats.aborted {
            break;
        }
    }

    let mut rules = search.found;
    let stats = MiningStats {
        htsrs: rules.len() as u64,
        ..search.stats
    };
    rules.sort_by_cached_key(|r| r.rule.to_text(db.vocab()));
    MiningResult {
        rules,
        stats,
        timings: PhaseTimes {
            preprocess: preprocess_time,
            mining: mining_start.elapsed(),
        },
    }
}

struct LeftNode {
    rule: Rule,
    full: Vec<LeElement>,
    antecedent_only: Vec<LeElement>,
    /// Antecedent-only sids; filled by the plus engine in detail mode only.
    art: Vec<Sid>,
    /// `None` until the plus engine needs it.
    antecedent_count: Option<u64>,
}

#[derive(Default)]
struct LeftChild {
    full: Vec<LeElement>,
    antecedent_only: Vec<LeElement>,
    rsu: Utility,
    rspeu: Utility,
}

#[derive(Default)]
struct RightChild {
    rows: Vec<ReElement>,
    rsu: Utility,
    rspeu: Utility,
}

struct Search<'a> {
    pre: &'a Preprocessed,
    occ: &'a [Vec<(Sid, u32)>],
    /// Antecedent → number of sequences containing it (plus engine).
    art: FxHashMap<Vec<Itemset>, u64>,
    detail: bool,
    cfg: &'a VariantConfig,
    thresholds: &'a Thresholds,
    db_size: u64,
    deadline: Option<Instant>,
    observer: &'a mut dyn Observer,
    stats: MiningStats,
    found: Vec<MinedRule>,
    live_rows: u64,
    #[cfg(debug_assertions)]
    seen: std::collections::HashSet<Rule>,
}

fn table_measures(full: &[LeElement], antecedent_count: u64) -> TableMeasures {
    let mut m = TableMeasures {
        support_count: full.len() as u64,
        antecedent_count,
        ..TableMeasures::default()
    };
    for r in full {
        m.utility += r.utility;
        m.lepeu += r.lepeu;
        m.repeu += r.repeu;
    }
    m
}

/// Items occur at most once, so `x` occurs in `seq` iff each itemset's items
/// share one position and those positions increase.
fn contains_antecedent(seq: &QSequence, x: &[Itemset]) -> bool {
    let mut last = 0;
    for itemset in x {
        let mut pos = None;
        for &item in itemset {
            match (seq.locate(item), pos) {
                (None, _) => return false,
                (Some(l), None) if l.position > last => pos = Some(l.position),
                (Some(l), Some(p)) if l.position == p => {}
                _ => return false,
            }
        }
        last = pos.expect("itemsets are nonempty");
    }
    true
}

impl Search<'_> {
    fn seq(&self, sid: Sid) -> &QSequence {
        self.pre.db.sequence(sid).expect("sid from the database")
    }

    /// Sequences containing `x`, found through the rarest item of `x`.
    fn antecedent_sids(&self, x: &[Itemset]) -> Vec<Sid> {
        let rarest = x
            .iter()
            .flatten()
            .min_by_key(|i| self.occ[i.index()].len())
            .expect("antecedents are nonempty");
        self.occ[rarest.index()]
            .iter()
            .map(|&(sid, _)| sid)
            .filter(|&sid| contains_antecedent(self.seq(sid), x))
            .collect()
    }

    /// |ant(x)|, computed once per antecedent.
    fn antecedent_support(&mut self, x: &[Itemset]) -> u64 {
        if let Some(&n) = self.art.get(x) {
            return n;
        }
        let n = self.antecedent_sids(x).len() as u64;
        self.art.insert(x.to_vec(), n);
        n
    }

    /// ART sids of a rule: sequences with its antecedent but no full row.
    fn art_sids(&self, x: &[Itemset], full: &[LeElement]) -> Vec<Sid> {
        let mut rows = full.iter().map(|r| r.sid).peekable();
        self.antecedent_sids(x)
            .into_iter()
            .filter(|&sid| {
                while rows.next_if(|&r| r < sid).is_some() {}
                rows.peek() != Some(&sid)
            })
            .collect()
    }

    fn grow_live(&mut self, rows: u64) {
        self.live_rows += rows;
        self.stats.peak_table_rows = self.stats.peak_table_rows.max(self.live_rows);
    }

    /// Records the evaluation and emits the rule if it is an HTSR. Returns
    /// false once the time limit has passed.
    fn evaluate(&mut self, rule: &Rule, measures: RuleMeasures, rows: RowsView<'_>) -> bool {
        self.stats.candidates_evaluated += 1;
        #[cfg(debug_assertions)]
        assert!(
            self.seen.insert(rule.clone()),
            "rule evaluated twice: {rule:?}"
        );
        if measures.utility >= self.thresholds.minutil
            && self
                .thresholds
                .confident(measures.support_count, measures.antecedent_count)
        {
            self.found.push(MinedRule {
                rule: rule.clone(),
                measures,
            });
        }
        self.observer.evaluated(&Evaluation {
            rule,
            measures,
            rows,
        });
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.stats.aborted = true;
        }
        !self.stats.aborted
    }

    /// REPEU and confidence gates in front of right expansion. REPEU goes
    /// first because it needs no antecedent support; `lazy` names a rule whose
    /// count must be looked up before the confidence test.
    fn right_gate(&mut self, m: &mut TableMeasures, lazy: Option<&Rule>) -> bool {
        if self.cfg.use_pe_bounds && m.repeu < self.thresholds.minutil {
            self.stats.prune.pe_right += 1;
            return false;
        }
        if let Some(rule) = lazy {
            m.antecedent_count = self.antecedent_support(rule.antecedent());
        }
        if self.cfg.use_confidence_pruning
            && !self
                .thresholds
                .confident(m.support_count, m.antecedent_count)
        {
            self.stats.prune.confidence += 1;
            return false;
        }
        true
    }

    fn visit_left(&mut self, node: LeftNode) {
        let mut antecedent_count = node.antecedent_count;
        let utility: Utility = node.full.iter().map(|r| r.utility).sum();
        if antecedent_count.is_none() && (self.detail || utility >= self.thresholds.minutil) {
            antecedent_count = Some(self.antecedent_support(node.rule.antecedent()));
        }
        // An unknown count is only left behind where nothing reads it.
        let mut m = table_measures(&node.full, antecedent_count.unwrap_or(0));
        let measures = RuleMeasures {
            support_count: m.support_count,
            antecedent_count: m.antecedent_count,
            db_size: self.db_size,
            utility: m.utility,
        };
        let rows = RowsView::Le {
            full: &node.full,
            antecedent_only: &node.antecedent_only,
            art: &node.art,
        };
        if !self.evaluate(&node.rule, measures, rows) {
            return;
        }

        let left_open = !self.cfg.use_pe_bounds || {
            // Padded terms: a side with nothing to extend contributes u, not 0.
            let gate: Utility = node
                .full
                .iter()
                .map(|r| {
                    let l = if r.lepeu.is_zero() {
                        r.utility
                    } else {
                        r.lepeu
                    };
                    let rr = if r.repeu.is_zero() {
                        r.utility
                    } else {
                        r.repeu
                    };
                    l + rr - r.utility
                })
                .sum();
            gate >= self.thresholds.minutil
        };
        if left_open {
            self.expand_left(&node, &m);
        } else {
            self.stats.prune.pe_left += 1;
        }
        if self.stats.aborted {
            return;
        }

        let lazy = antecedent_count.is_none().then_some(&node.rule);
        if self.right_gate(&mut m, lazy) {
            let rows: Vec<ReElement> = node
                .full
                .iter()
                .filter(|r| !r.repeu.is_zero())
                .map(LeElement::to_re)
                .collect();
            self.expand_right(&node.rule, &rows, m.antecedent_count, &m);
        }
    }

    fn expand_left(&mut self, node: &LeftNode, parent: &TableMeasures) {
        self.stats.left_expansions += 1;
        let ranges = &self.pre.ranges;
        let consequent: Vec<Item> = node.rule.consequent().iter().flatten().copied().collect();
        let plus = self.cfg.engine == Engine::TotalSrPlus;
        let mut children: FxHashMap<(Item, Mode), LeftChild> = FxHashMap::default();

        for row in &node.full {
            let seq = self.seq(row.sid);
            let (alpha, beta) = (row.alpha(), row.beta());
            let last_legal = seq.itemset_start(beta) - 1;
            for k in row.ant_end + 1..=seq.len() as u32 {
                let item = seq.items()[k as usize - 1].item;
                let pos = seq.positions()[k as usize - 1];
                if pos >= beta {
                    // The consequent cannot follow: antecedent support only,
                    // which the plus engine takes from its ART.
                    if !plus && !consequent.contains(&item) {
                        children
                            .entry((item, Mode::S))
                            .or_default()
                            .antecedent_only
                            .push(antecedent_only_row(row.sid, pos, k));
                    }
                    continue;
                }
                let mode = if pos == alpha { Mode::I } else { Mode::S };
                let utility = row.utility + ranges.item(row.sid, k);
                let repeu = if row.repeu.is_zero() {
                    Utility::ZERO
                } else {
                    utility + (row.repeu - row.utility)
                };
                let child = children.entry((item, mode)).or_default();
                child.full.push(full_row(
                    ranges,
                    seq,
                    utility,
                    repeu,
                    (pos, beta, row.gamma()),
                    k,
                    row.cons_end,
                ));
                child.rsu += row.lepeu;
                child.rspeu += row.utility + ranges.range(row.sid, k, last_legal);
            }
        }
        for row in &node.antecedent_only {
            let seq = self.seq(row.sid);
            let alpha = row.alpha();
            for k in row.ant_end + 1..=seq.len() as u32 {
                let item = seq.items()[k as usize - 1].item;
                if consequent.contains(&item) {
                    continue;
                }
                let pos = seq.positions()[k as usize - 1];
                let mode = if pos == alpha { Mode::I } else { Mode::S };
                children
                    .entry((item, mode))
                    .or_default()
                    .antecedent_only
                    .push(antecedent_only_row(row.sid, pos, k));
            }
        }

        // A child with no legal occurrence cannot reach minutil.
        let mut children: Vec<_> = children
            .into_iter()
            .filter(|(_, c)| !c.full.is_empty())
            .collect();
        children.sort_unstable_by_key(|(key, _)| *key);
        let pending: u64 = children
            .iter()
            .map(|(_, c)| (c.full.len() + c.antecedent_only.len()) as u64)
            .sum();
        self.grow_live(pending);

        for ((item, mode), mut child) in children {
            let rows = (child.full.len() + child.antecedent_only.len()) as u64;
            if self.stats.aborted {
                self.live_rows -= rows;
                continue;
            }
            let kind = ExpansionKind::left(mode, item);
            let rule = kind
                .apply(&node.rule)
                .expect("scan yields valid extensions");
            if self.observer.wants_detail() {
                let edge = Edge {
                    parent: &node.rule,
                    child: &rule,
                    kind,
                    parent_table: *parent,
                    child_utility: child.full.iter().map(|r| r.utility).sum(),
                    rsu: child.rsu,
                    rspeu: child.rspeu,
                };
                self.observer.edge(&edge);
            }
            let bound = match self.cfg.use_rs_bounds {
                RsBound::None => None,
                RsBound::Rsu => Some(child.rsu),
                RsBound::Rspeu => Some(child.rspeu),
            };
            if bound.is_some_and(|b| parent.repeu + b < self.thresholds.minutil) {
                self.stats.prune.rs_left += 1;
                self.live_rows -= rows;
                continue;
            }
            let (antecedent_count, art) = if plus {
                let art = if self.detail {
                    self.art_sids(rule.antecedent(), &child.full)
                } else {
                    Vec::new()
                };
                (None, art)
            } else {
                child.antecedent_only.sort_unstable_by_key(|r| r.sid);
                let n = child.full.len() + child.antecedent_only.len();
                (Some(n as u64), Vec::new())
            };
            self.visit_left(LeftNode {
                rule,
                full: child.full,
                antecedent_only: child.antecedent_only,
                art,
                antecedent_count,
            });
            self.live_rows -= rows;
        }
    }

    fn expand_right(
        &mut self,
        rule: &Rule,
        rows: &[ReElement],
        antecedent_count: u64,
        parent: &TableMeasures,
    ) {
        self.stats.right_expansions += 1;
        let ranges = &self.pre.ranges;
        let mut children: FxHashMap<(Item, Mode), RightChild> = FxHashMap::default();
        for row in rows {
            let seq = self.seq(row.sid);
            let len = seq.len() as u32;
            let gamma = row.position as u32;
            for k in row.cons_end + 1..=len {
                let item = seq.items()[k as usize - 1].item;
                let pos = seq.positions()[k as usize - 1];
                let mode = if pos == gamma { Mode::I } else { Mode::S };
                let utility = row.utility + ranges.item(row.sid, k);
                let child = children.entry((item, mode)).or_default();
                child.rows.push(ReElement {
                    sid: row.sid,
                    utility,
                    repeu: ranges.peu(utility, row.sid, k + 1, len),
                    position: pos as i32,
                    index: len as i32,
                    cons_end: k,
                });
                child.rsu += row.repeu;
                child.rspeu += row.utility + ranges.range(row.sid, k, len);
            }
        }
        let mut children: Vec<_> = children.into_iter().collect();
        children.sort_unstable_by_key(|(key, _)| *key);
        let pending: u64 = children.iter().map(|(_, c)| c.rows.len() as u64).sum();
        self.grow_live(pending);

        for ((item, mode), child) in children {
            let n = child.rows.len() as u64;
            if self.stats.aborted {
                self.live_rows -= n;
                continue;
            }
            let kind = ExpansionKind::right(mode, item);
            let child_rule = kind.apply(rule).expect("scan yields valid extensions");
            if self.observer.wants_detail() {
                let edge = Edge {
                    parent: rule,
                    child: &child_rule,
                    kind,
                    parent_table: *parent,
                    child_utility: child.rows.iter().map(|r| r.utility).sum(),
                    rsu: child.rsu,
                    rspeu: child.rspeu,
                };
                self.observer.edge(&edge);
            }
            let bound = match self.cfg.use_rs_bounds {
                RsBound::None => None,
                RsBound::Rsu => Some(child.rsu),
                RsBound::Rspeu => Some(child.rspeu),
            };
            if bound.is_some_and(|b| b < self.thresholds.minutil) {
                self.stats.prune.rs_right += 1;
                self.live_rows -= n;
                continue;
            }
            self.visit_right(child_rule, child.rows, antecedent_count);
            self.live_rows -= n;
        }
    }

    fn visit_right(&mut self, rule: Rule, rows: Vec<ReElement>, antecedent_count: u64) {
        let mut m = TableMeasures {
            support_count: rows.len() as u64,
            antecedent_count,
            ..TableMeasures::default()
        };
        for r in &rows {
            m.utility += r.utility;
            m.repeu += r.repeu;
        }
        let measures = RuleMeasures {
            support_count: m.support_count,
            antecedent_count,
            db_size: self.db_size,
            utility: m.utility,
        };
        if !self.evaluate(&rule, measures, RowsView::Re(&rows)) {
            return;
        }
        if self.right_gate(&mut m, None) {
            let next: Vec<ReElement> = rows.into_iter().filter(|r| !r.repeu.is_zero()).collect();
            self.expand_right(&rule, &next, antecedent_count, &m);
        }
    }
}
