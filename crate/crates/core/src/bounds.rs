//! Reference (non-incremental) upper bounds.
//!
//! These functions recompute SEU and the six expansion bounds from scratch
//! for a single rule. They are O(|𝒟|·|s|) per call and exist to pin down the
//! arithmetic the miner performs incrementally, and to check it in tests.
//!
//! Remaining-utility terms (`ULeft`, `URight`, `UILeft`, `UIRight`) are UPSL
//! range sums over flat indices. A left range runs from the first (or the
//! extension item's) left-extendable index to the last left-extendable
//! index; a right range runs to the end of the sequence. Items inside the
//! range that cannot extend the rule are still counted, which can only
//! loosen the bound.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::rules::{self, occurs_in, rule_utility_in_seq, Rule};
use crate::seqdb::{build_upsl, Item, QSequence, SequenceDatabase, Sid};
use crate::utility::Utility;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// I-expansion adds to the last itemset; S-expansion appends a new one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Mode {
    I,
    S,
}

/// One expansion step: which side grows, how, and with which item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExpansionKind {
    pub side: Side,
    pub mode: Mode,
    pub item: Item,
}

impl ExpansionKind {
    pub fn left(mode: Mode, item: Item) -> Self {
        ExpansionKind {
            side: Side::Left,
            mode,
            item,
        }
    }

    pub fn right(mode: Mode, item: Item) -> Self {
        ExpansionKind {
            side: Side::Right,
            mode,
            item,
        }
    }

    /// The expanded rule, or `None` when the expansion is not allowed: the
    /// item already occurs in the rule, or an I-expansion item is not
    /// greater than every item of the target itemset.
    pub fn apply(&self, rule: &Rule) -> Option<Rule> {
        if rule.contains(self.item) {
            return None;
        }
        let mut antecedent = rule.antecedent().to_vec();
        let mut consequent = rule.consequent().to_vec();
        let target = match self.side {
            Side::Left => &mut antecedent,
            Side::Right => &mut consequent,
        };
        match self.mode {
            Mode::I => {
                let last = target.last_mut().expect("nonempty side");
                if last.last().is_some_and(|&max| max >= self.item) {
                    return None;
                }
                last.push(self.item);
            }
            Mode::S => target.push(vec![self.item]),
        }
        Some(Rule::from_valid_parts(antecedent, consequent))
    }

    /// Recovers the step that produced `child` under left-first expansion:
    /// the last consequent item if the consequent has more than one item,
    /// otherwise the last antecedent item. `None` for 1 ∗ 1 rules.
    pub fn last_step(child: &Rule) -> Option<(Rule, ExpansionKind)> {
        let peel = |side: &[Vec<Item>]| -> Option<(Vec<Vec<Item>>, Mode, Item)> {
            let mut side = side.to_vec();
            let last = side.last_mut()?;
            let item = last.pop()?;
            if last.is_empty() {
                side.pop();
                if side.is_empty() {
                    return None;
                }
                Some((side, Mode::S, item))
            } else {
                Some((side, Mode::I, item))
            }
        };
        if let Some((consequent, mode, item)) = peel(child.consequent()) {
            let parent = Rule::from_valid_parts(child.antecedent().to_vec(), consequent);
            return Some((parent, ExpansionKind::right(mode, item)));
        }
        let (antecedent, mode, item) = peel(child.antecedent())?;
        let parent = Rule::from_valid_parts(antecedent, child.consequent().to_vec());
        Some((parent, ExpansionKind::left(mode, item)))
    }
}

/// An item that can extend a rule in one sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub item: Item,
    pub index: u32,
    pub mode: Mode,
}

/// Per-sequence values of a bound and their total.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub per_sequence: BTreeMap<Sid, Utility>,
    pub total: Utility,
}

impl BoundReport {
    fn from_terms(terms: impl IntoIterator<Item = (Sid, Utility)>) -> Self {
        let per_sequence: BTreeMap<Sid, Utility> = terms.into_iter().collect();
        let total = per_sequence.values().sum();
        BoundReport {
            per_sequence,
            total,
        }
    }

    pub fn get(&self, sid: Sid) -> Utility {
        self.per_sequence.get(&sid).copied().unwrap_or_default()
    }
}

/// SEU of an item: total utility of the sequences containing it.
pub fn seu_item(db: &SequenceDatabase, item: Item) -> Utility {
    db.sequences()
        .iter()
        .filter(|s| s.contains(item))
        .map(|s| db.sequence_utility(s))
        .sum()
}

/// SEU of a rule: total utility of the sequences in seq(r).
pub fn seu_rule(db: &SequenceDatabase, rule: &Rule) -> Utility {
    db.sequences()
        .iter()
        .filter(|s| occurs_in(rule, s).is_some())
        .map(|s| db.sequence_utility(s))
        .sum()
}

/// Items that can grow the antecedent of `rule` in `seq`. If the rule itself
/// does not occur (only its antecedent does) there is no consequent bound
/// and every later item qualifies.
pub fn left_extendable_items(rule: &Rule, seq: &QSequence) -> Vec<Candidate> {
    let Some(alpha) = rules::antecedent_position(rule.antecedent(), seq) else {
        return Vec::new();
    };
    let beta = occurs_in(rule, seq).map_or(u32::MAX, |o| o.beta);
    let last = rule.last_antecedent_item();
    let mut out = Vec::new();
    for (k, (q, &pos)) in seq.items().iter().zip(seq.positions()).enumerate() {
        if rule.contains(q.item) {
            continue;
        }
        let mode = if pos == alpha && q.item > last {
            Mode::I
        } else if pos > alpha && pos < beta {
            Mode::S
        } else {
            continue;
        };
        out.push(Candidate {
            item: q.item,
            index: k as u32 + 1,
            mode,
        });
    }
    out
}

/// Items that can grow the consequent of `rule` in `seq`.
pub fn right_extendable_items(rule: &Rule, seq: &QSequence) -> Vec<Candidate> {
    let Some(occ) = occurs_in(rule, seq) else {
        return Vec::new();
    };
    let last = rule.last_consequent_item();
    let mut out = Vec::new();
    for (k, (q, &pos)) in seq.items().iter().zip(seq.positions()).enumerate() {
        if rule.contains(q.item) {
            continue;
        }
        let mode = if pos == occ.gamma && q.item > last {
            Mode::I
        } else if pos > occ.gamma {
            Mode::S
        } else {
            continue;
        };
        out.push(Candidate {
            item: q.item,
            index: k as u32 + 1,
            mode,
        });
    }
    out
}

fn range(db: &SequenceDatabase, seq: &QSequence, from: u32, to: u32) -> Utility {
    build_upsl(seq, db.eutil())
        .range_utility(from as usize, to as usize)
        .expect("range inside the sequence")
}

/// ULeft(r, s) as a range sum from the first to the last left-extendable index.
pub fn u_left(db: &SequenceDatabase, rule: &Rule, seq: &QSequence) -> Utility {
    let cands = left_extendable_items(rule, seq);
    match (cands.first(), cands.last()) {
        (Some(first), Some(last)) => range(db, seq, first.index, last.index),
        _ => Utility::ZERO,
    }
}

/// URight(r, s) as a range sum from the first right-extendable index to the
/// end of the sequence.
pub fn u_right(db: &SequenceDatabase, rule: &Rule, seq: &QSequence) -> Utility {
    match right_extendable_items(rule, seq).first() {
        Some(first) => range(db, seq, first.index, seq.len() as u32),
        None => Utility::ZERO,
    }
}

fn with_zero_branch(u: Utility, extra: Utility) -> Utility {
    if extra.is_zero() {
        Utility::ZERO
    } else {
        u + extra
    }
}

/// LEPEU(r, s); zero when `r` does not occur in `s` or nothing extends it.
pub fn lepeu_in_seq(db: &SequenceDatabase, rule: &Rule, seq: &QSequence) -> Utility {
    if occurs_in(rule, seq).is_none() {
        return Utility::ZERO;
    }
    with_zero_branch(
        rule_utility_in_seq(rule, seq, db.eutil()),
        u_left(db, rule, seq),
    )
}

/// REPEU(r, s); zero when `r` does not occur in `s` or nothing extends it.
pub fn repeu_in_seq(db: &SequenceDatabase, rule: &Rule, seq: &QSequence) -> Utility {
    if occurs_in(rule, seq).is_none() {
        return Utility::ZERO;
    }
    with_zero_branch(
        rule_utility_in_seq(rule, seq, db.eutil()),
        u_right(db, rule, seq),
    )
}

fn over_support(
    db: &SequenceDatabase,
    rule: &Rule,
    term: impl Fn(&QSequence) -> Utility,
) -> BoundReport {
    BoundReport::from_terms(
        db.sequences()
            .iter()
            .filter(|s| occurs_in(rule, s).is_some())
            .map(|s| (s.sid(), term(s))),
    )
}

pub fn lepeu(rule: &Rule, db: &SequenceDatabase) -> BoundReport {
    over_support(db, rule, |s| lepeu_in_seq(db, rule, s))
}

pub fn repeu(rule: &Rule, db: &SequenceDatabase) -> BoundReport {
    over_support(db, rule, |s| repeu_in_seq(db, rule, s))
}

/// Σ over seq(r) of `u + ULeft + URight` with no zero branches: bounds the
/// utility of every rule reachable from `r` by left then right expansions.
pub fn combined_gate(rule: &Rule, db: &SequenceDatabase) -> Utility {
    over_support(db, rule, |s| {
        rule_utility_in_seq(rule, s, db.eutil()) + u_left(db, rule, s) + u_right(db, rule, s)
    })
    .total
}

fn child_of(parent: &Rule, ext: &ExpansionKind, side: Side) -> Option<Rule> {
    assert_eq!(ext.side, side, "expansion on the wrong side");
    ext.apply(parent)
}

/// LERSU: parent's LEPEU summed over the child's supporting sequences.
pub fn lersu(parent: &Rule, ext: &ExpansionKind, db: &SequenceDatabase) -> Utility {
    let Some(child) = child_of(parent, ext, Side::Left) else {
        return Utility::ZERO;
    };
    over_support(db, &child, |s| lepeu_in_seq(db, parent, s)).total
}

/// RERSU: parent's REPEU summed over the child's supporting sequences.
pub fn rersu(parent: &Rule, ext: &ExpansionKind, db: &SequenceDatabase) -> Utility {
    let Some(child) = child_of(parent, ext, Side::Right) else {
        return Utility::ZERO;
    };
    over_support(db, &child, |s| repeu_in_seq(db, parent, s)).total
}

/// LERSPEU of the child: `u(parent, s) + UILeft(parent, i, s)` over seq(child).
pub fn lerspeu(parent: &Rule, ext: &ExpansionKind, db: &SequenceDatabase) -> Utility {
    let Some(child) = child_of(parent, ext, Side::Left) else {
        return Utility::ZERO;
    };
    over_support(db, &child, |s| {
        let cands = left_extendable_items(parent, s);
        let from = cands
            .iter()
            .find(|c| c.item == ext.item)
            .expect("extension item is left-extendable where the child occurs")
            .index;
        let to = cands.last().expect("nonempty").index;
        rule_utility_in_seq(parent, s, db.eutil()) + range(db, s, from, to)
    })
    .total
}

/// RERSPEU of the child: `u(parent, s) + UIRight(parent, i, s)` over seq(child).
pub fn rerspeu(parent: &Rule, ext: &ExpansionKind, db: &SequenceDatabase) -> Utility {
    let Some(child) = child_of(parent, ext, Side::Right) else {
        return Utility::ZERO;
    };
    over_support(db, &child, |s| {
        let from = s.locate(ext.item).expect("child occurs").index;
        rule_utility_in_seq(parent, s, db.eutil()) + range(db, s, from, s.len() as u32)
    })
    .total
}
