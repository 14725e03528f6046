//! Seeded synthetic quantitative sequence databases.
//!
//! Itemset counts and itemset sizes are shifted geometric with the requested
//! means. Once a sequence's itemset sizes are fixed, recurring patterns from
//! a shared pool are embedded in order, and the remaining slots are filled
//! with items drawn without replacement, optionally skewed toward low item
//! numbers. Item tokens are the decimal numbers `1..=alphabet_size`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::GenError;
use crate::seqdb::{Item, QItem, QSequence, SequenceDatabase, Sid, Vocabulary};
use crate::utility::Utility;

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub num_sequences: usize,
    pub alphabet_size: usize,
    pub avg_itemsets_per_sequence: f64,
    pub avg_items_per_itemset: f64,
    pub max_quantity: u32,
    /// Inclusive bounds; unit utilities are drawn with two decimals.
    pub unit_utility_range: (Utility, Utility),
    /// Item popularity ∝ 1/rank^skew; 0 is uniform.
    pub skew: f64,
    /// Recurring patterns; `None` draws every item independently.
    pub patterns: Option<PatternParams>,
    pub seed: u64,
}

/// A pool of short itemset sequences that sequences embed in order, so that
/// rules with real support and confidence exist.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternParams {
    pub pool_size: usize,
    /// Mean embedding attempts per sequence; attempts that do not fit are
    /// skipped, so sequence shape never changes.
    pub avg_per_sequence: f64,
    /// Each pattern item is left out of an embedding with this probability.
    pub corruption: f64,
    /// Pattern popularity ∝ 1/rank^skew.
    pub skew: f64,
}

impl Default for PatternParams {
    fn default() -> Self {
        PatternParams {
            pool_size: 2000,
            avg_per_sequence: 2.0,
            corruption: 0.25,
            skew: 1.0,
        }
    }
}

impl GenParams {
    /// Shaped like a 10k-sequence IBM-style benchmark: 7312 items, 6.22
    /// itemsets per sequence, 4.35 items per itemset.
    pub fn syn(num_sequences: usize, seed: u64) -> Self {
        GenParams {
            num_sequences,
            alphabet_size: 7312,
            avg_itemsets_per_sequence: 6.22,
            avg_items_per_itemset: 4.35,
            max_quantity: 5,
            unit_utility_range: (Utility::from_int(1), Utility::from_int(10)),
            skew: 0.0,
            patterns: Some(PatternParams::default()),
            seed,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |why: String| Err(GenError::InfeasibleParams(why));
        if self.alphabet_size == 0 {
            return bad("alphabet_size must be positive".into());
        }
        if !(self.avg_itemsets_per_sequence >= 1.0 && self.avg_items_per_itemset >= 1.0) {
            return bad("averages must be at least 1".into());
        }
        let expected = self.avg_itemsets_per_sequence * self.avg_items_per_itemset;
        if expected > self.alphabet_size as f64 {
            return bad(format!(
                "{expected:.2} expected items per sequence exceed an alphabet of {}",
                self.alphabet_size
            ));
        }
        if self.max_quantity == 0 {
            return bad("max_quantity must be positive".into());
        }
        let (lo, hi) = self.unit_utility_range;
        if lo.raw() < 100 || lo > hi {
            return bad(format!(
                "unit utility range [{lo}, {hi}] must satisfy 0.01 ≤ low ≤ high"
            ));
        }
        if !(self.skew >= 0.0 && self.skew.is_finite()) {
            return bad("skew must be a finite nonnegative number".into());
        }
        if let Some(p) = &self.patterns {
            if p.pool_size == 0 || self.alphabet_size < PATTERN_MAX_ITEMS {
                return bad(format!(
                    "patterns need a nonempty pool and an alphabet of at least {PATTERN_MAX_ITEMS}"
                ));
            }
            if !(p.avg_per_sequence >= 0.0 && p.avg_per_sequence.is_finite()) {
                return bad("avg_per_sequence must be a finite nonnegative number".into());
            }
            if !(0.0..1.0).contains(&p.corruption) {
                return bad("corruption must lie in [0, 1)".into());
            }
            if !(p.skew >= 0.0 && p.skew.is_finite()) {
                return bad("pattern skew must be a finite nonnegative number".into());
            }
        }
        Ok(())
    }
}

/// Patterns span 2–4 itemsets of 1–2 items.
const PATTERN_MAX_ITEMS: usize = 8;

/// Geometric on {0, 1, ...} with mean `mean`.
fn geometric0(rng: &mut impl Rng, mean: f64) -> usize {
    let p = 1.0 / (1.0 + mean);
    let mut n = 0;
    while !rng.gen_bool(p) {
        n += 1;
    }
    n
}

/// 1 + Geometric(1/mean): at least one, mean `mean`.
fn shifted_geometric(rng: &mut impl Rng, mean: f64) -> usize {
    let p = 1.0 / mean;
    let mut n = 1;
    while p < 1.0 && !rng.gen_bool(p) {
        n += 1;
    }
    n
}

fn zipf(n: usize, skew: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((0..n).map(|r| (r as f64 + 1.0).powf(-skew))).expect("positive weights")
}

type Pattern = Vec<Vec<usize>>;

fn pattern_pool(rng: &mut impl Rng, alphabet: usize, size: usize) -> Vec<Pattern> {
    (0..size)
        .map(|_| {
            let shape: Vec<usize> = (0..rng.gen_range(2..=4))
                .map(|_| rng.gen_range(1..=2))
                .collect();
            let mut items = rand::seq::index::sample(rng, alphabet, shape.iter().sum()).into_iter();
            shape
                .iter()
                .map(|&k| items.by_ref().take(k).collect())
                .collect()
        })
        .collect()
}

/// Places a corrupted copy of `pattern` into free slot capacity, itemset j
/// into a slot after that of itemset j − 1. Leaves `slots` untouched when it
/// does not fit.
fn embed(
    rng: &mut impl Rng,
    pattern: &Pattern,
    corruption: f64,
    sizes: &[usize],
    slots: &mut [Vec<usize>],
    taken: &mut [bool],
) {
    let kept: Vec<Vec<usize>> = pattern
        .iter()
        .map(|set| {
            set.iter()
                .copied()
                .filter(|_| !rng.gen_bool(corruption))
                .collect::<Vec<_>>()
        })
        .filter(|set: &Vec<usize>| !set.is_empty())
        .collect();
    if kept.is_empty() || kept.len() > slots.len() || kept.iter().flatten().any(|&i| taken[i]) {
        return;
    }
    let mut chosen = rand::seq::index::sample(rng, slots.len(), kept.len()).into_vec();
    chosen.sort_unstable();
    let fits = chosen
        .iter()
        .zip(&kept)
        .all(|(&slot, set)| slots[slot].len() + set.len() <= sizes[slot]);
    if !fits {
        return;
    }
    for (&slot, set) in chosen.iter().zip(&kept) {
        for &i in set {
            taken[i] = true;
            slots[slot].push(i);
        }
    }
}

/// `count` distinct item indices drawn by weight, skipping `taken` ones.
fn draw_distinct(
    rng: &mut impl Rng,
    weights: &WeightedIndex<f64>,
    taken: &mut [bool],
    count: usize,
) -> Vec<usize> {
    let alphabet = taken.len();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 64 * count {
        attempts += 1;
        let i = weights.sample(rng);
        if !taken[i] {
            taken[i] = true;
            out.push(i);
        }
    }
    // Rejection stalls only when nearly the whole alphabet is needed.
    while out.len() < count {
        let free: Vec<usize> = (0..alphabet).filter(|&i| !taken[i]).collect();
        let i = free[rng.gen_range(0..free.len())];
        taken[i] = true;
        out.push(i);
    }
    out
}

pub fn generate(params: &GenParams) -> Result<SequenceDatabase, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.alphabet_size;
    let vocab = Vocabulary::from_tokens((1..=n).map(|i| i.to_string()));
    let (lo, hi) = params.unit_utility_range;
    let (lo_cents, hi_cents) = (lo.raw().div_ceil(100), hi.raw() / 100);
    let unit: Vec<Utility> = (0..n)
        .map(|_| Utility::from_raw(rng.gen_range(lo_cents..=hi_cents) * 100))
        .collect();
    let weights = zipf(n, params.skew);
    let patterns = params.patterns.map(|p| {
        let pool = pattern_pool(&mut rng, n, p.pool_size);
        (p, zipf(p.pool_size, p.skew), pool)
    });

    let mut sequences = Vec::with_capacity(params.num_sequences);
    for s in 0..params.num_sequences {
        let mut sizes: Vec<usize> =
            (0..shifted_geometric(&mut rng, params.avg_itemsets_per_sequence))
                .map(|_| shifted_geometric(&mut rng, params.avg_items_per_itemset))
                .collect();
        // Clamp the rare draw that needs more items than exist.
        let mut budget = n;
        sizes.retain_mut(|k| {
            *k = (*k).min(budget);
            budget -= *k;
            *k > 0
        });
        let mut taken = vec![false; n];
        let mut slots: Vec<Vec<usize>> = vec![Vec::new(); sizes.len()];
        if let Some((p, popularity, pool)) = &patterns {
            for _ in 0..geometric0(&mut rng, p.avg_per_sequence) {
                let pattern = &pool[popularity.sample(&mut rng)];
                embed(
                    &mut rng,
                    pattern,
                    p.corruption,
                    &sizes,
                    &mut slots,
                    &mut taken,
                );
            }
        }
        let free = sizes.iter().zip(&slots).map(|(k, s)| k - s.len()).sum();
        let mut fill = draw_distinct(&mut rng, &weights, &mut taken, free).into_iter();
        for (slot, &k) in slots.iter_mut().zip(&sizes) {
            slot.extend(fill.by_ref().take(k - slot.len()));
        }
        let itemsets = slots
            .into_iter()
            .map(|slot| {
                slot.into_iter()
                    .map(|i| QItem {
                        item: Item(i as u32),
                        quantity: rng.gen_range(1..=params.max_quantity),
                    })
                    .collect()
            })
            .collect();
        let seq = QSequence::new(Sid(s as u32 + 1), itemsets).expect("distinct items");
        sequences.push(seq);
    }
    Ok(SequenceDatabase::from_parts(vocab, unit, sequences).expect("consistent parts"))
}

/// Caps for [`small_random`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmallDbShape {
    pub max_sequences: usize,
    pub alphabet: usize,
    pub max_items_per_sequence: usize,
}

impl Default for SmallDbShape {
    fn default() -> Self {
        SmallDbShape {
            max_sequences: 8,
            alphabet: 8,
            max_items_per_sequence: 7,
        }
    }
}

/// A small random database for differential tests: 1..=max_sequences
/// sequences (possibly empty ones), integer unit utilities 1–5 and
/// quantities 1–3.
pub fn small_random(seed: u64, shape: SmallDbShape) -> SequenceDatabase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.alphabet.max(1);
    // Letters read like the running example; larger alphabets fall back to numbers.
    let token = |i: usize| match u8::try_from(i) {
        Ok(i) if n <= 26 => char::from(b'a' + i).to_string(),
        _ => (i + 1).to_string(),
    };
    let vocab = Vocabulary::from_tokens((0..n).map(token));
    let unit: Vec<Utility> = (0..n)
        .map(|_| Utility::from_int(rng.gen_range(1..=5)))
        .collect();
    let count = rng.gen_range(1..=shape.max_sequences.max(1));
    let sequences = (0..count)
        .map(|s| {
            let len = rng.gen_range(0..=shape.max_items_per_sequence.min(n));
            let mut pool: Vec<usize> = (0..n).collect();
            let mut itemsets: Vec<Vec<QItem>> = Vec::new();
            for _ in 0..len {
                let i = pool.swap_remove(rng.gen_range(0..pool.len()));
                let q = QItem {
                    item: Item(i as u32),
                    quantity: rng.gen_range(1..=3),
                };
                match itemsets.last_mut() {
                    Some(last) if rng.gen_bool(0.35) => last.push(q),
                    _ => itemsets.push(vec![q]),
                }
            }
            QSequence::new(Sid(s as u32 + 1), itemsets).expect("distinct items")
        })
        .collect();
    SequenceDatabase::from_parts(vocab, unit, sequences).expect("consistent parts")
}

/// Shape of a database.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DatasetStats {
    /// |𝒟|
    pub sequences: usize,
    /// Distinct items that occur.
    pub items: usize,
    /// Mean itemsets per sequence.
    pub avg_itemsets: f64,
    pub max_itemsets: usize,
    /// Mean items per sequence.
    pub avg_items: f64,
    /// Mean items per itemset.
    pub avg_itemset_size: f64,
}

pub fn describe(db: &SequenceDatabase) -> DatasetStats {
    let itemsets: usize = db.sequences().iter().map(QSequence::itemset_count).sum();
    let items: usize = db.sequences().iter().map(QSequence::len).sum();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    DatasetStats {
        sequences: db.len(),
        items: db.occurring_items().len(),
        avg_itemsets: ratio(itemsets, db.len()),
        max_itemsets: db
            .sequences()
            .iter()
            .map(QSequence::itemset_count)
            .max()
            .unwrap_or(0),
        avg_items: ratio(items, db.len()),
        avg_itemset_size: ratio(items, itemsets),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::running_example;

    #[test]
    fn describes_running_example() {
        let d = describe(&running_example());
        assert_eq!((d.sequences, d.items, d.max_itemsets), (4, 8, 5));
        assert_eq!(
            (d.avg_itemsets, d.avg_items, d.avg_itemset_size),
            (4.0, 5.75, 1.4375)
        );
    }

    #[test]
    fn describes_empty_database() {
        let db = SequenceDatabase::parse("", "a:1").unwrap();
        let d = describe(&db);
        assert_eq!((d.sequences, d.items, d.max_itemsets), (0, 0, 0));
        assert_eq!(
            (d.avg_itemsets, d.avg_items, d.avg_itemset_size),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn zero_sequences() {
        let db = generate(&GenParams::syn(0, 1)).unwrap();
        assert!(db.is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let p = GenParams::syn(200, 42);
        let (a, b) = (generate(&p).unwrap(), generate(&p).unwrap());
        assert_eq!(a.to_db_text(), b.to_db_text());
        assert_eq!(a.to_eutil_text(), b.to_eutil_text());
        let c = generate(&GenParams::syn(200, 43)).unwrap();
        assert_ne!(a.to_db_text(), c.to_db_text());
    }

    #[test]
    fn output_reparses() {
        let db = generate(&GenParams::syn(100, 7)).unwrap();
        let back = SequenceDatabase::parse(&db.to_db_text(), &db.to_eutil_text()).unwrap();
        assert_eq!(back.to_db_text(), db.to_db_text());
    }

    #[test]
    fn infeasible_alphabet() {
        let p = GenParams {
            alphabet_size: 10,
            ..GenParams::syn(5, 1)
        };
        assert!(matches!(generate(&p), Err(GenError::InfeasibleParams(_))));
    }

    #[test]
    fn small_alphabet_fills_without_repeats() {
        let p = GenParams {
            alphabet_size: 6,
            avg_itemsets_per_sequence: 2.0,
            avg_items_per_itemset: 3.0,
            skew: 4.0,
            patterns: None,
            ..GenParams::syn(300, 3)
        };
        let db = generate(&p).unwrap();
        assert!(db.sequences().iter().all(|s| s.len() <= 6));
    }

    #[test]
    fn syn_shape_within_five_percent() {
        let p = GenParams::syn(10_000, 11);
        let d = describe(&generate(&p).unwrap());
        let close = |got: f64, want: f64| (got - want).abs() <= 0.05 * want;
        assert!(close(d.avg_itemsets, p.avg_itemsets_per_sequence), "{d:?}");
        assert!(close(d.avg_itemset_size, p.avg_items_per_itemset), "{d:?}");
    }

    #[test]
    fn patterns_recur_in_order() {
        let p = GenParams {
            patterns: Some(PatternParams {
                pool_size: 1,
                avg_per_sequence: 1.0,
                corruption: 0.0,
                skew: 1.0,
            }),
            ..GenParams::syn(400, 5)
        };
        let with = generate(&p).unwrap();
        let without = generate(&GenParams {
            patterns: None,
            ..p.clone()
        })
        .unwrap();
        // The single pattern's first and last items, found in many sequences.
        let best_pair = |db: &SequenceDatabase| {
            let mut counts = std::collections::HashMap::new();
            for s in db.sequences() {
                for (i, a) in s.items().iter().enumerate() {
                    for b in &s.items()[i + 1..] {
                        *counts.entry((a.item, b.item)).or_insert(0) += 1;
                    }
                }
            }
            counts.into_values().max().unwrap_or(0)
        };
        assert!(best_pair(&with) > 100, "{}", best_pair(&with));
        assert!(best_pair(&without) < 10, "{}", best_pair(&without));
    }

    #[test]
    fn bad_pattern_params() {
        let p = GenParams {
            patterns: Some(PatternParams {
                corruption: 1.0,
                ..PatternParams::default()
            }),
            ..GenParams::syn(5, 1)
        };
        assert!(matches!(generate(&p), Err(GenError::InfeasibleParams(_))));
    }

    #[test]
    fn small_random_respects_shape() {
        let shape = SmallDbShape::default();
        for seed in 0..50 {
            let db = small_random(seed, shape);
            assert!((1..=8).contains(&db.len()));
            assert!(db.sequences().iter().all(|s| s.len() <= 7));
            assert!(db.vocab().len() <= 8);
        }
    }
}
