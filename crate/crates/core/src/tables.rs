//! Per-sequence bookkeeping rows carried along expansions.
//!
//! An LE row describes one sequence that contains a rule's antecedent. A full
//! row (utility > 0) also contains the whole rule; an antecedent-only row
//! exists only to count toward |ant(r)| and uses `-1` sentinels. Plus-tables
//! keep full rows only and move antecedent-only sids into an [`Art`].
//!
//! Besides the displayed columns every row keeps the flat indices of the last
//! antecedent item and the last consequent item, which the miner needs to
//! resume scanning without re-matching the rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::rules::{self, occurs_in, side_text, Itemset, Rule};
use crate::seqdb::{ExternalUtilityTable, QSequence, SequenceDatabase, Sid, Upsl, Vocabulary};
use crate::utility::Utility;

/// Sentinel for positions and indices of antecedent-only rows.
pub const ABSENT: i32 = -1;

/// One row of an LE-utility table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeElement {
    pub sid: Sid,
    pub utility: Utility,
    pub lepeu: Utility,
    pub repeu: Utility,
    /// (α, β, γ); β = γ = −1 on antecedent-only rows.
    pub positions: (i32, i32, i32),
    /// (α′, γ′): first left-extendable index (γ′ when there is none) and the
    /// sequence length; (−1, −1) on antecedent-only rows.
    pub indices: (i32, i32),
    /// Flat index of the last antecedent item.
    pub ant_end: u32,
    /// Flat index of the last consequent item; 0 on antecedent-only rows.
    pub cons_end: u32,
}

impl LeElement {
    pub fn is_full(&self) -> bool {
        self.cons_end != 0
    }

    pub fn alpha(&self) -> u32 {
        self.positions.0 as u32
    }

    pub fn beta(&self) -> u32 {
        self.positions.1 as u32
    }

    pub fn gamma(&self) -> u32 {
        self.positions.2 as u32
    }

    /// The RE view of a full row.
    pub fn to_re(&self) -> ReElement {
        debug_assert!(self.is_full());
        ReElement {
            sid: self.sid,
            utility: self.utility,
            repeu: self.repeu,
            position: self.positions.2,
            index: self.indices.1,
            cons_end: self.cons_end,
        }
    }
}

/// Plus-table rows have the same shape; the difference is which rows exist.
pub type LeElementPlus = LeElement;

/// One row of an RE-utility table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReElement {
    pub sid: Sid,
    pub utility: Utility,
    pub repeu: Utility,
    /// γ, or −1 on antecedent-only rows.
    pub position: i32,
    /// Sequence length, or −1 on antecedent-only rows.
    pub index: i32,
    /// Flat index of the last consequent item; 0 on antecedent-only rows.
    pub cons_end: u32,
}

pub type ReElementPlus = ReElement;

fn sum_range(upsl: &Upsl, from: u32, to: u32) -> Utility {
    if from > to {
        return Utility::ZERO;
    }
    upsl.range_utility(from as usize, to as usize)
        .expect("range inside the sequence")
}

/// `u + extra`, or zero when `extra` is empty (nothing can extend).
pub(crate) fn peu(utility: Utility, from: u32, to: u32, upsl: &Upsl) -> Utility {
    if from > to {
        Utility::ZERO
    } else {
        utility + sum_range(upsl, from, to)
    }
}

fn flat_index(seq: &QSequence, item: crate::seqdb::Item) -> u32 {
    seq.locate(item)
        .expect("matched rule item is present")
        .index
}

/// LE row of `rule` in `seq`, or `None` when the antecedent does not occur.
pub fn le_element(
    rule: &Rule,
    seq: &QSequence,
    eutil: &ExternalUtilityTable,
    upsl: &Upsl,
) -> Option<LeElement> {
    let alpha = rules::antecedent_position(rule.antecedent(), seq)?;
    let ant_end = flat_index(seq, rule.last_antecedent_item());
    let Some(occ) = occurs_in(rule, seq) else {
        return Some(LeElement {
            sid: seq.sid(),
            utility: Utility::ZERO,
            lepeu: Utility::ZERO,
            repeu: Utility::ZERO,
            positions: (alpha as i32, ABSENT, ABSENT),
            indices: (ABSENT, ABSENT),
            ant_end,
            cons_end: 0,
        });
    };
    let len = seq.len() as u32;
    let cons_end = flat_index(seq, rule.last_consequent_item());
    let last_legal = seq.itemset_start(occ.beta) - 1;
    let utility = rules::rule_utility_in_seq(rule, seq, eutil);
    let first_left = if ant_end < last_legal {
        ant_end + 1
    } else {
        len
    };
    Some(LeElement {
        sid: seq.sid(),
        utility,
        lepeu: peu(utility, ant_end + 1, last_legal, upsl),
        repeu: peu(utility, cons_end + 1, len, upsl),
        positions: (occ.alpha as i32, occ.beta as i32, occ.gamma as i32),
        indices: (first_left as i32, len as i32),
        ant_end,
        cons_end,
    })
}

/// RE row of `rule` in `seq`: a sentinel row when only the antecedent
/// occurs, `None` when not even that.
pub fn re_element(
    rule: &Rule,
    seq: &QSequence,
    eutil: &ExternalUtilityTable,
    upsl: &Upsl,
) -> Option<ReElement> {
    let le = le_element(rule, seq, eutil, upsl)?;
    Some(if le.is_full() {
        le.to_re()
    } else {
        ReElement {
            sid: le.sid,
            utility: Utility::ZERO,
            repeu: Utility::ZERO,
            position: ABSENT,
            index: ABSENT,
            cons_end: 0,
        }
    })
}

/// LE-utility table: one row per sequence containing the antecedent.
pub fn le_table(rule: &Rule, db: &SequenceDatabase, upsls: &[Upsl]) -> Vec<LeElement> {
    db.sequences()
        .iter()
        .zip(upsls)
        .filter_map(|(s, u)| le_element(rule, s, db.eutil(), u))
        .collect()
}

/// LE-utility⁺ table and the antecedent-only sids that go to the ART.
pub fn le_plus_table(
    rule: &Rule,
    db: &SequenceDatabase,
    upsls: &[Upsl],
) -> (Vec<LeElementPlus>, Vec<Sid>) {
    let (full, only): (Vec<_>, Vec<_>) = le_table(rule, db, upsls)
        .into_iter()
        .partition(LeElement::is_full);
    (full, only.into_iter().map(|e| e.sid).collect())
}

/// RE-utility table as used for right expansion: full rows that still have
/// something to extend with (REPEU > 0). Sequences outside these rows cannot
/// support any right-expanded descendant.
pub fn re_table(rule: &Rule, db: &SequenceDatabase, upsls: &[Upsl]) -> Vec<ReElement> {
    le_table(rule, db, upsls)
        .iter()
        .filter(|e| e.is_full() && !e.repeu.is_zero())
        .map(LeElement::to_re)
        .collect()
}

/// Aggregates of one table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TableMeasures {
    pub support_count: u64,
    pub antecedent_count: u64,
    pub utility: Utility,
    pub lepeu: Utility,
    pub repeu: Utility,
}

/// Aggregates an LE table; `art_count` adds antecedent-only sids held
/// outside the table (zero for non-plus tables).
pub fn table_measures(rows: &[LeElement], art_count: usize) -> TableMeasures {
    let mut m = TableMeasures {
        antecedent_count: (rows.len() + art_count) as u64,
        ..TableMeasures::default()
    };
    for row in rows.iter().filter(|r| r.is_full()) {
        m.support_count += 1;
        m.utility += row.utility;
        m.lepeu += row.lepeu;
        m.repeu += row.repeu;
    }
    m
}

/// Auxiliary antecedent record table: antecedent → sids that contain it but
/// no legal rule.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Art {
    records: BTreeMap<Vec<Itemset>, BTreeSet<Sid>>,
}

impl Art {
    pub fn record(&mut self, antecedent: &[Itemset], sid: Sid) {
        self.records
            .entry(antecedent.to_vec())
            .or_default()
            .insert(sid);
    }

    pub fn count(&self, antecedent: &[Itemset]) -> usize {
        self.records.get(antecedent).map_or(0, BTreeSet::len)
    }

    pub fn sids(&self, antecedent: &[Itemset]) -> impl Iterator<Item = Sid> + '_ {
        self.records.get(antecedent).into_iter().flatten().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Itemset>, &BTreeSet<Sid>)> + '_ {
        self.records.iter()
    }
}

pub const LE_HEADER: &str = "SID\tUtility\tLEPEU\tREPEU\tPositions\tIndices";
pub const RE_HEADER: &str = "SID\tUtility\tREPEU\tPosition\tIndex";

/// Tab-separated dump, header first, one row per line.
pub fn format_le_table(rows: &[LeElement]) -> String {
    let mut out = format!("{LE_HEADER}\n");
    for r in rows {
        let (a, b, g) = r.positions;
        let (i, j) = r.indices;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t({a},{b},{g})\t({i},{j})",
            r.sid, r.utility, r.lepeu, r.repeu
        )
        .unwrap();
    }
    out
}

pub fn format_re_table(rows: &[ReElement]) -> String {
    let mut out = format!("{RE_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.sid, r.utility, r.repeu, r.position, r.index
        )
        .unwrap();
    }
    out
}

/// One line per antecedent: `{e,f}: {s2}`.
pub fn format_art(art: &Art, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (antecedent, sids) in art.iter() {
        let sids: Vec<String> = sids.iter().map(Sid::to_string).collect();
        writeln!(
            out,
            "{}: {{{}}}",
            side_text(antecedent, vocab),
            sids.join(",")
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::running_example;
    use crate::seqdb::build_upsl;

    fn setup() -> (SequenceDatabase, Vec<Upsl>) {
        let db = running_example();
        let db = db.remove_items(&BTreeSet::from([db.item("h").unwrap()]));
        let upsls = db
            .sequences()
            .iter()
            .map(|s| build_upsl(s, db.eutil()))
            .collect();
        (db, upsls)
    }

    #[test]
    fn le_table_of_r1() {
        let (db, upsls) = setup();
        let r1 = Rule::parse("{e,f},{c} -> {b}", db.vocab()).unwrap();
        let table = le_table(&r1, &db, &upsls);
        assert_eq!(
            format_le_table(&table),
            "SID\tUtility\tLEPEU\tREPEU\tPositions\tIndices\n\
             s2\t0\t0\t0\t(4,-1,-1)\t(-1,-1)\n\
             s3\t17\t0\t0\t(3,4,4)\t(5,5)\n\
             s4\t11\t20\t0\t(2,4,4)\t(4,6)\n"
        );
        let m = table_measures(&table, 0);
        assert_eq!(
            (
                m.support_count,
                m.antecedent_count,
                m.utility,
                m.lepeu,
                m.repeu
            ),
            (
                2,
                3,
                Utility::from_int(28),
                Utility::from_int(20),
                Utility::ZERO
            )
        );
    }

    #[test]
    fn plus_table_of_r1() {
        let (db, upsls) = setup();
        let r1 = Rule::parse("{e,f},{c} -> {b}", db.vocab()).unwrap();
        let (rows, only) = le_plus_table(&r1, &db, &upsls);
        assert_eq!(
            rows.iter().map(|r| r.sid).collect::<Vec<_>>(),
            [Sid(3), Sid(4)]
        );
        assert_eq!(only, [Sid(2)]);
        let mut art = Art::default();
        for sid in only {
            art.record(r1.antecedent(), sid);
        }
        assert_eq!(format_art(&art, db.vocab()), "{e,f},{c}: {s2}\n");
        let m = table_measures(&rows, art.count(r1.antecedent()));
        assert_eq!((m.support_count, m.antecedent_count), (2, 3));
    }

    #[test]
    fn re_table_of_r3() {
        let (db, upsls) = setup();
        let r3 = Rule::parse("{e,f} -> {c}", db.vocab()).unwrap();
        assert_eq!(
            format_re_table(&re_table(&r3, &db, &upsls)),
            "SID\tUtility\tREPEU\tPosition\tIndex\ns3\t16\t17\t3\t5\ns4\t10\t20\t2\t6\n"
        );
        let s1 = db.sequence(Sid(1)).unwrap();
        assert_eq!(re_element(&r3, s1, db.eutil(), &upsls[0]), None);
        let r = Rule::parse("{e} -> {a}", db.vocab()).unwrap();
        let s3 = db.sequence(Sid(3)).unwrap();
        let sentinel = re_element(&r, s3, db.eutil(), &upsls[2]).unwrap();
        assert_eq!(
            (sentinel.utility, sentinel.position, sentinel.index),
            (Utility::ZERO, -1, -1)
        );
    }

    #[test]
    fn empty_table_measures() {
        assert_eq!(table_measures(&[], 0), TableMeasures::default());
    }

    #[test]
    fn art_is_a_set() {
        let (db, _) = setup();
        let x = Rule::parse("{e,f} -> {b}", db.vocab()).unwrap();
        let mut art = Art::default();
        art.record(x.antecedent(), Sid(2));
        assert_eq!(art.count(x.antecedent()), 1);
        art.record(x.antecedent(), Sid(2));
        assert_eq!(art.count(x.antecedent()), 1);
        assert_eq!(art.count(&[vec![db.item("a").unwrap()]]), 0);
    }

    #[test]
    fn peu_fields_match_bounds() {
        let (db, upsls) = setup();
        let items: Vec<_> = db.vocab().items().collect();
        for &a in &items {
            for &b in &items {
                if a == b {
                    continue;
                }
                let r = Rule::pair(a, b);
                for (s, u) in db.sequences().iter().zip(&upsls) {
                    let Some(e) = le_element(&r, s, db.eutil(), u) else {
                        continue;
                    };
                    assert_eq!(e.lepeu, crate::bounds::lepeu_in_seq(&db, &r, s));
                    assert_eq!(e.repeu, crate::bounds::repeu_in_seq(&db, &r, s));
                }
            }
        }
    }
}
