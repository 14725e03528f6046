//! Brute-force ground truth for small databases.
//!
//! Every itemset-list pattern that occurs somewhere is enumerated by
//! depth-first I- and S-extension; every split of a pattern at an itemset
//! boundary is a candidate rule. Measures come straight from [`crate::rules`]
//! with no bounds, tables or pruning involved.

use std::collections::BTreeSet;

use crate::miner::{MinedRule, Thresholds};
use crate::rules::{measures, Itemset, Rule};
use crate::seqdb::{QSequence, SequenceDatabase};

/// Size caps for enumeration. Completeness requires every cap to be at
/// least the longest sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_antecedent_items: usize,
    pub max_consequent_items: usize,
    pub max_total_items: usize,
}

impl OracleLimits {
    /// Limits that cannot cut off any rule of `db`.
    pub fn covering(db: &SequenceDatabase) -> Self {
        let longest = db
            .sequences()
            .iter()
            .map(QSequence::len)
            .max()
            .unwrap_or(0)
            .max(1);
        OracleLimits {
            max_antecedent_items: longest,
            max_consequent_items: longest,
            max_total_items: longest,
        }
    }
}

/// Positions of the last matched itemset of a pattern, one per supporting
/// sequence. Items occur once per sequence, so the match is unique.
type Support = Vec<(usize, u32)>;

fn collect_patterns(
    db: &SequenceDatabase,
    pattern: &mut Vec<Itemset>,
    support: &Support,
    max_items: usize,
    size: usize,
    out: &mut BTreeSet<Vec<Itemset>>,
) {
    if pattern.len() >= 2 {
        out.insert(pattern.clone());
    }
    if size == max_items {
        return;
    }
    let last_item = *pattern
        .last()
        .and_then(|s| s.last())
        .expect("nonempty pattern");
    let mut i_ext: BTreeSet<_> = BTreeSet::new();
    let mut s_ext: BTreeSet<_> = BTreeSet::new();
    for &(s, last_pos) in support {
        let seq = &db.sequences()[s];
        for (q, &pos) in seq.items().iter().zip(seq.positions()) {
            if pos == last_pos && q.item > last_item {
                i_ext.insert(q.item);
            } else if pos > last_pos {
                s_ext.insert(q.item);
            }
        }
    }
    for item in i_ext {
        let next: Support = support
            .iter()
            .filter(|&&(s, last_pos)| {
                db.sequences()[s]
                    .locate(item)
                    .is_some_and(|l| l.position == last_pos)
            })
            .copied()
            .collect();
        pattern.last_mut().unwrap().push(item);
        collect_patterns(db, pattern, &next, max_items, size + 1, out);
        pattern.last_mut().unwrap().pop();
    }
    for item in s_ext {
        let next: Support = support
            .iter()
            .filter_map(|&(s, last_pos)| {
                let l = db.sequences()[s].locate(item)?;
                (l.position > last_pos).then_some((s, l.position))
            })
            .collect();
        pattern.push(vec![item]);
        collect_patterns(db, pattern, &next, max_items, size + 1, out);
        pattern.pop();
    }
}

/// Every rule occurring in at least one sequence within `limits`, with exact
/// measures, ordered by rule text.
pub fn enumerate_rules(db: &SequenceDatabase, limits: &OracleLimits) -> Vec<MinedRule> {
    let mut patterns = BTreeSet::new();
    for item in db.occurring_items() {
        let support: Support = db
            .sequences()
            .iter()
            .enumerate()
            .filter_map(|(s, seq)| seq.locate(item).map(|l| (s, l.position)))
            .collect();
        let mut pattern = vec![vec![item]];
        collect_patterns(
            db,
            &mut pattern,
            &support,
            limits.max_total_items,
            1,
            &mut patterns,
        );
    }
    let mut rules = Vec::new();
    for pattern in patterns {
        let mut left = 0;
        for split in 1..pattern.len() {
            left += pattern[split - 1].len();
            let total: usize = pattern.iter().map(Vec::len).sum();
            if left > limits.max_antecedent_items || total - left > limits.max_consequent_items {
                continue;
            }
            let rule = Rule::new(pattern[..split].to_vec(), pattern[split..].to_vec())
                .expect("patterns from one sequence have distinct items");
            let measures = measures(&rule, db);
            debug_assert!(measures.support_count > 0);
            rules.push(MinedRule { rule, measures });
        }
    }
    rules.sort_by_cached_key(|r| r.rule.to_text(db.vocab()));
    rules
}

/// The exact HTSR set within `limits`.
pub fn oracle_mine(
    db: &SequenceDatabase,
    thresholds: &Thresholds,
    limits: &OracleLimits,
) -> Vec<MinedRule> {
    enumerate_rules(db, limits)
        .into_iter()
        .filter(|r| {
            r.measures.utility >= thresholds.minutil()
                && r.measures
                    .confidence()
                    .is_some_and(|c| c >= thresholds.minconf())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::running_example;
    use crate::utility::Utility;

    fn texts(db: &SequenceDatabase, rules: &[MinedRule]) -> Vec<String> {
        rules.iter().map(|r| r.rule.to_text(db.vocab())).collect()
    }

    #[test]
    fn table3() {
        let db = running_example();
        let limits = OracleLimits {
            max_antecedent_items: 4,
            max_consequent_items: 4,
            max_total_items: 8,
        };
        let t = Thresholds::parse("25", "0.5").unwrap();
        assert_eq!(
            texts(&db, &oracle_mine(&db, &t, &limits)),
            [
                "{e,f} -> {c}",
                "{e,f} -> {c},{b}",
                "{e,f},{c} -> {b}",
                "{e} -> {c}"
            ]
        );
        let t = Thresholds::parse("25", "0.8").unwrap();
        assert_eq!(
            texts(&db, &oracle_mine(&db, &t, &limits)),
            ["{e,f} -> {c}", "{e} -> {c}"]
        );
    }

    #[test]
    fn both_orders_of_c_and_d() {
        let db = running_example();
        let all = enumerate_rules(&db, &OracleLimits::covering(&db));
        let utility = |text: &str| {
            all.iter()
                .find(|r| r.rule.to_text(db.vocab()) == text)
                .map(|r| r.measures.utility)
        };
        assert_eq!(utility("{a,b} -> {c},{d}"), Some(Utility::from_int(15)));
        assert_eq!(utility("{a,b} -> {d},{c}"), Some(Utility::from_int(10)));
    }

    #[test]
    fn single_itemset_sequences_have_no_rules() {
        let db = SequenceDatabase::parse("a:1 b:2 -1 -2\nb:1 c:1 -1 -2", "a:1\nb:1\nc:1").unwrap();
        assert!(enumerate_rules(&db, &OracleLimits::covering(&db)).is_empty());
    }

    #[test]
    fn tiny_thresholds_keep_everything() {
        let db = running_example();
        let limits = OracleLimits::covering(&db);
        let t = Thresholds::parse("0.0001", "0").unwrap();
        assert_eq!(oracle_mine(&db, &t, &limits), enumerate_rules(&db, &limits));
    }
}
