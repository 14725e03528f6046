//! Quantitative sequence databases.
//!
//! A database file holds one sequence per line. Each itemset is a run of
//! `item:quantity` tokens closed by `-1`, and the line is closed by `-2`:
//!
//! ```text
//! a:2 b:1 -1 c:2 -1 d:4 f:2 -1 -2
//! ```
//!
//! External utilities live in a separate file with one `item:unit_utility`
//! pair per line. Blank lines and lines starting with `#` are skipped in both.
//!
//! Items are interned into [`Item`] ids assigned in shortlex order of their
//! tokens, so comparing ids compares items.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use crate::error::DataError;
use crate::utility::Utility;

/// 1-based sequence identifier, assigned by line order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sid(pub u32);

impl fmt::Display for Sid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl serde::Serialize for Sid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Interned item. Ids follow shortlex order of the item tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item(pub u32);

impl Item {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Shortlex comparison: shorter tokens first, then bytewise.
pub fn shortlex_cmp(a: &str, b: &str) -> Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| a.as_bytes().cmp(b.as_bytes()))
}

fn valid_token(token: &str) -> bool {
    !token.is_empty() && token != "-1" && token != "-2" && !token.chars().any(char::is_whitespace)
}

/// Bidirectional map between item tokens and [`Item`] ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, Item>,
}

impl Vocabulary {
    /// Builds a vocabulary from distinct tokens; ids follow shortlex order.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        tokens.sort_by(|a, b| shortlex_cmp(a, b));
        tokens.dedup();
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), Item(i as u32)))
            .collect();
        Vocabulary { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<Item> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, item: Item) -> &str {
        &self.tokens[item.index()]
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        (0..self.tokens.len() as u32).map(Item)
    }
}

/// Unit utility (profit per unit) of every item.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExternalUtilityTable {
    unit: Vec<Utility>,
}

impl ExternalUtilityTable {
    pub fn unit_utility(&self, item: Item) -> Utility {
        self.unit[item.index()]
    }

    pub fn len(&self) -> usize {
        self.unit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit.is_empty()
    }
}

/// An item occurrence with its purchased quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QItem {
    pub item: Item,
    pub quantity: u32,
}

/// Where an item sits inside a sequence: 1-based itemset position and
/// 1-based flat index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub position: u32,
    pub index: u32,
}

/// A quantitative sequence. Items are stored flat, left to right, with each
/// itemset sorted by item order and no item repeated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSequence {
    sid: Sid,
    items: Vec<QItem>,
    positions: Vec<u32>,
    itemset_starts: Vec<u32>,
    /// (item, 0-based flat index), sorted by item, for binary-search lookup.
    by_item: Vec<(Item, u32)>,
}

impl QSequence {
    /// Builds a validated sequence. Itemsets are sorted; empty itemsets are
    /// rejected, as is any item occurring twice.
    pub fn new(sid: Sid, itemsets: Vec<Vec<QItem>>) -> Result<Self, DataError> {
        let mut items = Vec::new();
        let mut positions = Vec::new();
        let mut itemset_starts = Vec::with_capacity(itemsets.len());
        for (p, mut itemset) in itemsets.into_iter().enumerate() {
            if itemset.is_empty() {
                return Err(DataError::EmptyItemset { sid });
            }
            itemset.sort_by_key(|q| q.item);
            itemset_starts.push(items.len() as u32);
            for q in itemset {
                if q.quantity == 0 {
                    return Err(DataError::ZeroQuantity { sid });
                }
                items.push(q);
                positions.push(p as u32 + 1);
            }
        }
        let mut by_item: Vec<(Item, u32)> = items
            .iter()
            .enumerate()
            .map(|(k, q)| (q.item, k as u32))
            .collect();
        by_item.sort_unstable();
        if let Some(w) = by_item.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(DataError::DuplicateItem { sid, item: w[0].0 });
        }
        Ok(QSequence {
            sid,
            items,
            positions,
            itemset_starts,
            by_item,
        })
    }

    pub fn sid(&self) -> Sid {
        self.sid
    }

    /// Number of items (the largest flat index).
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn itemset_count(&self) -> usize {
        self.itemset_starts.len()
    }

    /// Items in flat order.
    pub fn items(&self) -> &[QItem] {
        &self.items
    }

    /// Itemset position of each flat item, parallel to [`QSequence::items`].
    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// The itemset at 1-based `position`.
    pub fn itemset(&self, position: u32) -> &[QItem] {
        let p = position as usize - 1;
        let start = self.itemset_starts[p] as usize;
        let end = self
            .itemset_starts
            .get(p + 1)
            .map_or(self.items.len(), |&e| e as usize);
        &self.items[start..end]
    }

    pub fn itemsets(&self) -> impl Iterator<Item = &[QItem]> + '_ {
        (1..=self.itemset_count() as u32).map(move |p| self.itemset(p))
    }

    /// Flat index (1-based) of the first item of the itemset at `position`.
    pub fn itemset_start(&self, position: u32) -> u32 {
        self.itemset_starts[position as usize - 1] + 1
    }

    fn flat_index(&self, item: Item) -> Option<usize> {
        self.by_item
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|k| self.by_item[k].1 as usize)
    }

    pub fn locate(&self, item: Item) -> Option<Location> {
        self.flat_index(item).map(|i| Location {
            position: self.positions[i],
            index: i as u32 + 1,
        })
    }

    pub fn quantity(&self, item: Item) -> Option<u32> {
        self.flat_index(item).map(|i| self.items[i].quantity)
    }

    pub fn contains(&self, item: Item) -> bool {
        self.flat_index(item).is_some()
    }

    fn without(&self, victims: &BTreeSet<Item>) -> QSequence {
        let itemsets = self
            .itemsets()
            .map(|set| {
                set.iter()
                    .filter(|q| !victims.contains(&q.item))
                    .copied()
                    .collect::<Vec<_>>()
            })
            .filter(|set| !set.is_empty())
            .collect();
        QSequence::new(self.sid, itemsets).expect("removal keeps a valid sequence")
    }
}

/// An immutable, validated sequence database with its external utilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceDatabase {
    sequences: Vec<QSequence>,
    vocab: Vocabulary,
    eutil: ExternalUtilityTable,
}

impl SequenceDatabase {
    /// Parses a database and its external utility table.
    pub fn parse(db_text: &str, eutil_text: &str) -> Result<Self, DataError> {
        let (vocab, eutil) = parse_eutil(eutil_text)?;
        let mut sequences = Vec::new();
        for (line_no, line) in db_text.lines().enumerate() {
            let line_no = line_no + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let sid = Sid(sequences.len() as u32 + 1);
            let itemsets = parse_sequence_line(line, line_no, &vocab)?;
            let seq = QSequence::new(sid, itemsets).map_err(|e| match e {
                DataError::DuplicateItem { sid, item } => DataError::DuplicateItemInSequence {
                    sid,
                    item: vocab.token(item).to_string(),
                },
                other => other,
            })?;
            sequences.push(seq);
        }
        Ok(SequenceDatabase {
            sequences,
            vocab,
            eutil,
        })
    }

    /// Assembles a database from already-interned parts. Every item must have
    /// a positive unit utility.
    pub fn from_parts(
        vocab: Vocabulary,
        unit_utilities: Vec<Utility>,
        sequences: Vec<QSequence>,
    ) -> Result<Self, DataError> {
        if unit_utilities.len() != vocab.len() {
            return Err(DataError::Malformed {
                line: 0,
                reason: format!(
                    "{} unit utilities for {} items",
                    unit_utilities.len(),
                    vocab.len()
                ),
            });
        }
        if let Some(i) = unit_utilities.iter().position(|u| u.is_zero()) {
            return Err(DataError::NonPositiveQuantityOrUtility {
                line: 0,
                item: vocab.token(Item(i as u32)).to_string(),
            });
        }
        for (i, seq) in sequences.iter().enumerate() {
            if seq.sid != Sid(i as u32 + 1) {
                return Err(DataError::Malformed {
                    line: i + 1,
                    reason: format!("sequence {} carries sid {}", i + 1, seq.sid),
                });
            }
            if let Some(q) = seq.items.iter().find(|q| q.item.index() >= vocab.len()) {
                return Err(DataError::UnknownItem {
                    item: format!("#{}", q.item.0),
                });
            }
        }
        Ok(SequenceDatabase {
            sequences,
            vocab,
            eutil: ExternalUtilityTable {
                unit: unit_utilities,
            },
        })
    }

    pub fn sequences(&self) -> &[QSequence] {
        &self.sequences
    }

    pub fn sequence(&self, sid: Sid) -> Option<&QSequence> {
        (sid.0 as usize)
            .checked_sub(1)
            .and_then(|i| self.sequences.get(i))
    }

    /// |𝒟|, counting empty sequences.
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn eutil(&self) -> &ExternalUtilityTable {
        &self.eutil
    }

    pub fn item(&self, token: &str) -> Option<Item> {
        self.vocab.get(token)
    }

    pub fn token(&self, item: Item) -> &str {
        self.vocab.token(item)
    }

    /// `q(i, s) × iu(i)`.
    pub fn item_utility(&self, item: Item, sid: Sid) -> Result<Utility, DataError> {
        let absent = || DataError::ItemAbsent {
            item: self.token(item).to_string(),
            sid,
        };
        let seq = self.sequence(sid).ok_or_else(absent)?;
        let q = seq.quantity(item).ok_or_else(absent)?;
        Ok(self.eutil.unit_utility(item).times(q))
    }

    /// Utility of a flat item occurrence.
    pub fn qitem_utility(&self, q: &QItem) -> Utility {
        self.eutil.unit_utility(q.item).times(q.quantity)
    }

    /// Total utility of a sequence.
    pub fn sequence_utility(&self, seq: &QSequence) -> Utility {
        seq.items().iter().map(|q| self.qitem_utility(q)).sum()
    }

    /// Distinct items that occur in at least one sequence, in item order.
    pub fn occurring_items(&self) -> Vec<Item> {
        let mut seen = vec![false; self.vocab.len()];
        for seq in &self.sequences {
            for q in seq.items() {
                seen[q.item.index()] = true;
            }
        }
        self.vocab.items().filter(|i| seen[i.index()]).collect()
    }

    /// A copy without `victims`. Itemsets left empty are dropped; emptied
    /// sequences stay so that |𝒟| is unchanged.
    pub fn remove_items(&self, victims: &BTreeSet<Item>) -> SequenceDatabase {
        if victims.is_empty() {
            return self.clone();
        }
        SequenceDatabase {
            sequences: self.sequences.iter().map(|s| s.without(victims)).collect(),
            vocab: self.vocab.clone(),
            eutil: self.eutil.clone(),
        }
    }

    /// Serializes the sequences in the database file format.
    pub fn to_db_text(&self) -> String {
        let mut out = String::new();
        for seq in &self.sequences {
            for set in seq.itemsets() {
                for q in set {
                    let _ = write!(out, "{}:{} ", self.token(q.item), q.quantity);
                }
                out.push_str("-1 ");
            }
            out.push_str("-2\n");
        }
        out
    }

    /// Serializes the external utility table, one item per line in item order.
    pub fn to_eutil_text(&self) -> String {
        let mut out = String::new();
        for item in self.vocab.items() {
            let _ = writeln!(
                out,
                "{}:{}",
                self.token(item),
                self.eutil.unit_utility(item)
            );
        }
        out
    }
}

fn split_pair(token: &str) -> Option<(&str, &str)> {
    token.rsplit_once(':')
}

fn parse_eutil(text: &str) -> Result<(Vocabulary, ExternalUtilityTable), DataError> {
    let mut entries: Vec<(String, Utility)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| DataError::Malformed {
            line: line_no,
            reason,
        };
        let (token, value) = split_pair(line)
            .ok_or_else(|| malformed(format!("expected item:utility, got `{line}`")))?;
        let (token, value) = (token.trim(), value.trim());
        if !valid_token(token) {
            return Err(malformed(format!("invalid item token `{token}`")));
        }
        let utility: Utility = value
            .parse()
            .map_err(|e| malformed(format!("bad unit utility for `{token}`: {e}")))?;
        if utility.is_zero() {
            return Err(DataError::NonPositiveQuantityOrUtility {
                line: line_no,
                item: token.to_string(),
            });
        }
        if seen.insert(token.to_string(), line_no).is_some() {
            return Err(DataError::DuplicateUtility {
                line: line_no,
                item: token.to_string(),
            });
        }
        entries.push((token.to_string(), utility));
    }
    let vocab = Vocabulary::from_tokens(entries.iter().map(|(t, _)| t.clone()));
    let mut unit = vec![Utility::ZERO; vocab.len()];
    for (token, utility) in entries {
        unit[vocab.get(&token).expect("interned").index()] = utility;
    }
    Ok((vocab, ExternalUtilityTable { unit }))
}

fn parse_sequence_line(
    line: &str,
    line_no: usize,
    vocab: &Vocabulary,
) -> Result<Vec<Vec<QItem>>, DataError> {
    let malformed = |reason: String| DataError::Malformed {
        line: line_no,
        reason,
    };
    let mut itemsets = Vec::new();
    let mut current: Vec<QItem> = Vec::new();
    let mut tokens = line.split_whitespace();
    let mut terminated = false;
    for token in tokens.by_ref() {
        match token {
            "-1" => {
                if current.is_empty() {
                    return Err(malformed("empty itemset".into()));
                }
                itemsets.push(std::mem::take(&mut current));
            }
            "-2" => {
                terminated = true;
                break;
            }
            _ => {
                let (name, qty) = split_pair(token)
                    .ok_or_else(|| malformed(format!("expected item:quantity, got `{token}`")))?;
                if !valid_token(name) {
                    return Err(malformed(format!("invalid item token `{name}`")));
                }
                let quantity: u64 = qty
                    .parse()
                    .map_err(|_| malformed(format!("bad quantity `{qty}` for `{name}`")))?;
                if quantity == 0 {
                    return Err(DataError::NonPositiveQuantityOrUtility {
                        line: line_no,
                        item: name.to_string(),
                    });
                }
                let quantity = u32::try_from(quantity)
                    .map_err(|_| malformed(format!("quantity `{qty}` too large")))?;
                let item = vocab.get(name).ok_or_else(|| DataError::UnknownItem {
                    item: name.to_string(),
                })?;
                current.push(QItem { item, quantity });
            }
        }
    }
    if !terminated {
        return Err(malformed("missing -2 terminator".into()));
    }
    if !current.is_empty() {
        return Err(malformed("itemset not closed by -1".into()));
    }
    if let Some(extra) = tokens.next() {
        return Err(malformed(format!("unexpected `{extra}` after -2")));
    }
    Ok(itemsets)
}

/// Utility prefix sum list: `prefix[k-1]` is the utility of the first `k`
/// items of a sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Upsl {
    prefix: Vec<Utility>,
}

impl Upsl {
    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    pub fn prefix(&self) -> &[Utility] {
        &self.prefix
    }

    /// Cumulative utility of the first `k` items (`k = 0` gives zero).
    pub fn upto(&self, k: usize) -> Utility {
        if k == 0 {
            Utility::ZERO
        } else {
            self.prefix[k - 1]
        }
    }

    /// Utility of flat indices `from..=to` (1-based) in O(1).
    pub fn range_utility(&self, from: usize, to: usize) -> Result<Utility, DataError> {
        if from == 0 || from > to || to > self.prefix.len() {
            return Err(DataError::IndexOutOfRange {
                from,
                to,
                len: self.prefix.len(),
            });
        }
        Ok(self.prefix[to - 1] - self.upto(from - 1))
    }
}

pub fn build_upsl(seq: &QSequence, eutil: &ExternalUtilityTable) -> Upsl {
    let mut acc = Utility::ZERO;
    let prefix = seq
        .items()
        .iter()
        .map(|q| {
            acc += eutil.unit_utility(q.item).times(q.quantity);
            acc
        })
        .collect();
    Upsl { prefix }
}
