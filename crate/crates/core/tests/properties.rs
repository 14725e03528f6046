use std::collections::BTreeSet;

use proptest::prelude::*;
use totalsr::datagen::{generate, small_random, GenParams, SmallDbShape};
use totalsr::oracle::{enumerate_rules, OracleLimits};
use totalsr::rules::{antecedent_sids, confidence, supporting_sids};
use totalsr::seqdb::{build_upsl, Item, QItem, QSequence, SequenceDatabase, Sid};
use totalsr::Utility;

fn shape() -> SmallDbShape {
    SmallDbShape::default()
}

fn triples(db: &SequenceDatabase) -> BTreeSet<(Sid, Item, u32)> {
    db.sequences()
        .iter()
        .flat_map(|s| s.items().iter().map(move |q| (s.sid(), q.item, q.quantity)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn range_utility_is_a_naive_sum(seed in any::<u64>(), a in 0usize..64, b in 0usize..64) {
        let db = small_random(seed, SmallDbShape { max_items_per_sequence: 8, ..shape() });
        for s in db.sequences().iter().filter(|s| !s.is_empty()) {
            let n = s.len();
            let (i, j) = (a % n + 1, b % n + 1);
            let (i, j) = (i.min(j), i.max(j));
            let naive: Utility = s.items()[i - 1..j].iter().map(|q| db.qitem_utility(q)).sum();
            prop_assert_eq!(build_upsl(s, db.eutil()).range_utility(i, j).unwrap(), naive);
        }
    }

    #[test]
    fn serialization_is_a_fixpoint(seed in any::<u64>()) {
        let db = small_random(seed, shape());
        let back = SequenceDatabase::parse(&db.to_db_text(), &db.to_eutil_text()).unwrap();
        prop_assert_eq!(triples(&back), triples(&db));
        prop_assert_eq!(back.to_db_text(), db.to_db_text());
    }

    #[test]
    fn removal_subtracts_exactly_the_victims(seed in any::<u64>(), mask in any::<u8>()) {
        let db = small_random(seed, shape());
        let victims: BTreeSet<Item> = db.vocab().items().filter(|i| mask >> i.0 & 1 == 1).collect();
        let pruned = db.remove_items(&victims);
        let expected: BTreeSet<_> = triples(&db).into_iter().filter(|t| !victims.contains(&t.1)).collect();
        prop_assert_eq!(triples(&pruned), expected);
        prop_assert_eq!(pruned.len(), db.len());
    }

    #[test]
    fn measures_are_consistent(seed in any::<u64>()) {
        let db = small_random(seed, shape());
        for r in enumerate_rules(&db, &OracleLimits::covering(&db)) {
            let seq: BTreeSet<Sid> = supporting_sids(&r.rule, &db).into_iter().collect();
            let ant: BTreeSet<Sid> = antecedent_sids(r.rule.antecedent(), &db).into_iter().collect();
            prop_assert!(seq.is_subset(&ant));
            let conf = confidence(&r.rule, &db).unwrap();
            prop_assert_eq!(conf * ant.len() as u64, r.measures.support() * db.len() as u64);
            prop_assert!(r.measures.support() <= conf);
        }
    }

    #[test]
    fn oracle_ignores_line_order(seed in any::<u64>(), rot in 0usize..8) {
        let db = small_random(seed, shape());
        let text = db.to_db_text();
        let mut lines: Vec<&str> = text.lines().collect();
        let n = lines.len().max(1);
        lines.rotate_left(rot % n);
        let shuffled = SequenceDatabase::parse(&lines.join("\n"), &db.to_eutil_text()).unwrap();
        let key = |d: &SequenceDatabase| -> Vec<(String, u64, u64, Utility)> {
            enumerate_rules(d, &OracleLimits::covering(d))
                .into_iter()
                .map(|r| (r.rule.to_text(d.vocab()), r.measures.support_count, r.measures.antecedent_count, r.measures.utility))
                .collect()
        };
        prop_assert_eq!(key(&shuffled), key(&db));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_databases_validate(seed in any::<u64>(), n in 0usize..120) {
        let db = generate(&GenParams { alphabet_size: 300, ..GenParams::syn(n, seed) }).unwrap();
        let back = SequenceDatabase::parse(&db.to_db_text(), &db.to_eutil_text()).unwrap();
        prop_assert_eq!(back.len(), n);
        for s in back.sequences() {
            prop_assert!(s.items().iter().all(|q| q.quantity >= 1));
        }
    }
}

#[test]
fn constructed_two_itemset_rule_occurs() {
    let q = |i| QItem {
        item: Item(i),
        quantity: 1,
    };
    let s = QSequence::new(Sid(1), vec![vec![q(0)], vec![q(1)]]).unwrap();
    let r = totalsr::Rule::pair(Item(0), Item(1));
    let occ = totalsr::rules::occurs_in(&r, &s).unwrap();
    assert_eq!((occ.alpha, occ.beta, occ.gamma), (1, 2, 2));
}
