//! Totally-ordered sequential rules and their exact measures.
//!
//! Everything here is computed directly from the database by definition.
//! It is slow and serves as the reference the miner is checked against.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::RuleError;
use crate::seqdb::{ExternalUtilityTable, Item, QSequence, SequenceDatabase, Sid, Vocabulary};
use crate::utility::Utility;

pub type Itemset = Vec<Item>;

/// A rule `X → Y` whose sides are ordered lists of itemsets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    antecedent: Vec<Itemset>,
    consequent: Vec<Itemset>,
}

/// `k ∗ m`: antecedent and consequent item counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RuleSize {
    pub antecedent: usize,
    pub consequent: usize,
}

/// Size `g ∗ h` is smaller than `f ∗ l` iff `g ≤ f ∧ h < l` or `g < f ∧ h ≤ l`.
impl PartialOrd for RuleSize {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let a = self.antecedent.cmp(&other.antecedent);
        let c = self.consequent.cmp(&other.consequent);
        match (a, c) {
            (Ordering::Equal, Ordering::Equal) => Some(Ordering::Equal),
            (Ordering::Less | Ordering::Equal, Ordering::Less | Ordering::Equal) => {
                Some(Ordering::Less)
            }
            (Ordering::Greater | Ordering::Equal, Ordering::Greater | Ordering::Equal) => {
                Some(Ordering::Greater)
            }
            _ => None,
        }
    }
}

impl fmt::Display for RuleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*{}", self.antecedent, self.consequent)
    }
}

impl Rule {
    /// Builds a rule, sorting every itemset. Both sides must be nonempty and
    /// no item may appear twice anywhere in the rule.
    pub fn new(antecedent: Vec<Itemset>, consequent: Vec<Itemset>) -> Result<Self, RuleError> {
        if antecedent.is_empty() || consequent.is_empty() {
            return Err(RuleError::EmptySide);
        }
        let mut rule = Rule {
            antecedent,
            consequent,
        };
        for set in rule.antecedent.iter_mut().chain(rule.consequent.iter_mut()) {
            if set.is_empty() {
                return Err(RuleError::EmptyItemset);
            }
            set.sort_unstable();
        }
        let mut all: Vec<Item> = rule.items().collect();
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(RuleError::RepeatedItem(format!("#{}", w[0].0)));
        }
        Ok(rule)
    }

    /// Builds a rule from parts already known to be valid (sorted, nonempty,
    /// disjoint). Used on the miner's hot path.
    pub(crate) fn from_valid_parts(antecedent: Vec<Itemset>, consequent: Vec<Itemset>) -> Self {
        let rule = Rule {
            antecedent,
            consequent,
        };
        debug_assert_eq!(
            Rule::new(rule.antecedent.clone(), rule.consequent.clone()).as_ref(),
            Ok(&rule)
        );
        rule
    }

    /// The 1 ∗ 1 rule `⟨a⟩ → ⟨b⟩`.
    pub fn pair(a: Item, b: Item) -> Self {
        assert_ne!(a, b, "a rule cannot repeat an item");
        Rule {
            antecedent: vec![vec![a]],
            consequent: vec![vec![b]],
        }
    }

    pub fn antecedent(&self) -> &[Itemset] {
        &self.antecedent
    }

    pub fn consequent(&self) -> &[Itemset] {
        &self.consequent
    }

    pub fn size(&self) -> RuleSize {
        RuleSize {
            antecedent: self.antecedent.iter().map(Vec::len).sum(),
            consequent: self.consequent.iter().map(Vec::len).sum(),
        }
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.antecedent
            .iter()
            .chain(self.consequent.iter())
            .flat_map(|s| s.iter().copied())
    }

    pub fn contains(&self, item: Item) -> bool {
        self.items().any(|i| i == item)
    }

    /// Greatest item of the antecedent's last itemset.
    pub fn last_antecedent_item(&self) -> Item {
        *self
            .antecedent
            .last()
            .and_then(|s| s.last())
            .expect("nonempty")
    }

    /// Greatest item of the consequent's last itemset.
    pub fn last_consequent_item(&self) -> Item {
        *self
            .consequent
            .last()
            .and_then(|s| s.last())
            .expect("nonempty")
    }

    /// Parses `{e,f},{c} -> {b}` against a vocabulary.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self, RuleError> {
        let syntax = |reason: &str| RuleError::Syntax {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (lhs, rhs) = text
            .split_once("->")
            .ok_or_else(|| syntax("missing `->`"))?;
        if rhs.contains("->") {
            return Err(syntax("more than one `->`"));
        }
        let side = |part: &str| -> Result<Vec<Itemset>, RuleError> {
            parse_side(part)
                .map_err(|reason| syntax(&reason))?
                .into_iter()
                .map(|set| {
                    set.into_iter()
                        .map(|tok| vocab.get(&tok).ok_or(RuleError::UnknownItem(tok)))
                        .collect()
                })
                .collect()
        };
        let rule = Rule::new(side(lhs)?, side(rhs)?);
        match rule {
            Err(RuleError::RepeatedItem(_)) => Err(syntax("an item appears twice")),
            other => other,
        }
    }

    /// Canonical text form, e.g. `{e,f},{c} -> {b}`.
    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        format!(
            "{} -> {}",
            side_text(&self.antecedent, vocab),
            side_text(&self.consequent, vocab)
        )
    }
}

/// Renders an itemset list as `{a,b},{c}`.
pub fn side_text(side: &[Itemset], vocab: &Vocabulary) -> String {
    side.iter()
        .map(|set| {
            let inner: Vec<&str> = set.iter().map(|&i| vocab.token(i)).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_side(text: &str) -> Result<Vec<Vec<String>>, String> {
    let mut sets = Vec::new();
    let mut rest = text.trim();
    if rest.is_empty() {
        return Err("empty side".into());
    }
    loop {
        rest = rest
            .strip_prefix('{')
            .ok_or_else(|| format!("expected `{{` at `{rest}`"))?;
        let close = rest.find('}').ok_or("unclosed `{`")?;
        let inner = &rest[..close];
        if inner.contains('{') {
            return Err("nested `{`".into());
        }
        let tokens: Vec<String> = inner.split(',').map(|t| t.trim().to_string()).collect();
        if tokens.iter().any(String::is_empty) {
            return Err("empty item token".into());
        }
        sets.push(tokens);
        rest = rest[close + 1..].trim_start();
        if rest.is_empty() {
            return Ok(sets);
        }
        rest = rest
            .strip_prefix(',')
            .ok_or_else(|| format!("expected `,` at `{rest}`"))?
            .trim_start();
    }
}

/// Itemset positions of a rule occurrence: the antecedent's last itemset
/// (α), the consequent's first (β) and last (γ).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub sid: Sid,
    pub alpha: u32,
    pub beta: u32,
    pub gamma: u32,
}

/// Leftmost itemset-wise match of `pattern` in `seq` using only itemsets at
/// positions greater than `after`. Returns the first and last matched
/// positions.
fn match_after(pattern: &[Itemset], seq: &QSequence, after: u32) -> Option<(u32, u32)> {
    let mut next = after + 1;
    let mut first = None;
    let mut last = after;
    for set in pattern {
        let found = (next..=seq.itemset_count() as u32).find(|&p| {
            let sequence_set = seq.itemset(p);
            set.iter()
                .all(|i| sequence_set.iter().any(|q| q.item == *i))
        })?;
        first.get_or_insert(found);
        last = found;
        next = found + 1;
    }
    first.map(|f| (f, last))
}

pub fn occurs_in(rule: &Rule, seq: &QSequence) -> Option<Occurrence> {
    let (_, alpha) = match_after(rule.antecedent(), seq, 0)?;
    let (beta, gamma) = match_after(rule.consequent(), seq, alpha)?;
    Some(Occurrence {
        sid: seq.sid(),
        alpha,
        beta,
        gamma,
    })
}

pub fn antecedent_occurs_in(antecedent: &[Itemset], seq: &QSequence) -> bool {
    antecedent_position(antecedent, seq).is_some()
}

/// Position of the itemset matching the antecedent's last itemset in the
/// leftmost match, if the antecedent occurs.
pub fn antecedent_position(antecedent: &[Itemset], seq: &QSequence) -> Option<u32> {
    if antecedent.is_empty() {
        return None;
    }
    match_after(antecedent, seq, 0).map(|(_, last)| last)
}

/// seq(r): sequences containing the whole rule.
pub fn supporting_sids(rule: &Rule, db: &SequenceDatabase) -> Vec<Sid> {
    db.sequences()
        .iter()
        .filter(|s| occurs_in(rule, s).is_some())
        .map(QSequence::sid)
        .collect()
}

/// ant(r): sequences containing the antecedent.
pub fn antecedent_sids(antecedent: &[Itemset], db: &SequenceDatabase) -> Vec<Sid> {
    db.sequences()
        .iter()
        .filter(|s| antecedent_occurs_in(antecedent, s))
        .map(QSequence::sid)
        .collect()
}

pub fn support(rule: &Rule, db: &SequenceDatabase) -> Ratio<u64> {
    let hits = supporting_sids(rule, db).len() as u64;
    Ratio::new(hits, (db.len() as u64).max(1))
}

pub fn confidence(rule: &Rule, db: &SequenceDatabase) -> Result<Ratio<u64>, RuleError> {
    let ant = antecedent_sids(rule.antecedent(), db).len() as u64;
    if ant == 0 {
        return Err(RuleError::AntecedentUnsupported);
    }
    Ok(Ratio::new(supporting_sids(rule, db).len() as u64, ant))
}

/// u(r, s); zero when the rule does not occur in `seq`.
pub fn rule_utility_in_seq(rule: &Rule, seq: &QSequence, eutil: &ExternalUtilityTable) -> Utility {
    if occurs_in(rule, seq).is_none() {
        return Utility::ZERO;
    }
    rule.items()
        .map(|i| {
            let q = seq.quantity(i).expect("occurring rule items are present");
            eutil.unit_utility(i).times(q)
        })
        .sum()
}

pub fn rule_utility(rule: &Rule, db: &SequenceDatabase) -> Utility {
    db.sequences()
        .iter()
        .map(|s| rule_utility_in_seq(rule, s, db.eutil()))
        .sum()
}

/// The counts behind support, confidence and utility of one rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RuleMeasures {
    pub support_count: u64,
    pub antecedent_count: u64,
    pub db_size: u64,
    pub utility: Utility,
}

impl RuleMeasures {
    pub fn support(&self) -> Ratio<u64> {
        Ratio::new(self.support_count, self.db_size.max(1))
    }

    /// `None` when the antecedent occurs nowhere.
    pub fn confidence(&self) -> Option<Ratio<u64>> {
        (self.antecedent_count > 0).then(|| Ratio::new(self.support_count, self.antecedent_count))
    }
}

/// All measures of `rule`, by definition.
pub fn measures(rule: &Rule, db: &SequenceDatabase) -> RuleMeasures {
    RuleMeasures {
        support_count: supporting_sids(rule, db).len() as u64,
        antecedent_count: antecedent_sids(rule.antecedent(), db).len() as u64,
        db_size: db.len() as u64,
        utility: rule_utility(rule, db),
    }
}

/// Renders a ratio with four decimals, rounding half up.
pub fn format_ratio(r: Ratio<u64>) -> String {
    let num = u128::from(*r.numer()) * 10_000;
    let den = u128::from(*r.denom());
    let scaled = (num * 2 + den) / (den * 2);
    format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
}

/// Parses a decimal such as `0.5` or `1` into an exact ratio.
pub fn parse_ratio(text: &str) -> Option<Ratio<u64>> {
    let u: Utility = text.parse().ok()?;
    Some(Ratio::new(u.raw(), crate::utility::SCALE))
}
