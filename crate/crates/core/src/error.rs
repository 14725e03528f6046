use thiserror::Error;

use crate::seqdb::{Item, Sid};

/// Errors raised while loading, validating or indexing a database.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("item `{item}` occurs more than once in sequence {sid}")]
    DuplicateItemInSequence { sid: Sid, item: String },
    #[error("item #{} occurs more than once in sequence {sid}", item.0)]
    DuplicateItem { sid: Sid, item: Item },
    #[error("item `{item}` has no external utility")]
    UnknownItem { item: String },
    #[error("line {line}: quantity or unit utility of `{item}` must be positive")]
    NonPositiveQuantityOrUtility { line: usize, item: String },
    #[error("line {line}: duplicate external utility for `{item}`")]
    DuplicateUtility { line: usize, item: String },
    #[error("sequence {sid} has an empty itemset")]
    EmptyItemset { sid: Sid },
    #[error("sequence {sid} has a zero quantity")]
    ZeroQuantity { sid: Sid },
    #[error("item `{item}` does not occur in sequence {sid}")]
    ItemAbsent { item: String, sid: Sid },
    #[error("index range {from}..={to} outside 1..={len}")]
    IndexOutOfRange { from: usize, to: usize, len: usize },
}

/// Errors raised when building or parsing rules.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule side must not be empty")]
    EmptySide,
    #[error("rule itemsets must not be empty")]
    EmptyItemset,
    #[error("item `{0}` appears more than once in the rule")]
    RepeatedItem(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("cannot parse rule `{text}`: {reason}")]
    Syntax { text: String, reason: String },
    #[error("confidence is undefined: the antecedent occurs in no sequence")]
    AntecedentUnsupported,
}

/// Errors raised by the synthetic data generator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
}

/// Errors raised when configuring a mining run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("minutil must be positive")]
    NonPositiveMinutil,
    #[error("minconf `{0}` must be a number in [0, 1]")]
    BadMinconf(String),
    #[error(
        "unknown variant `{0}` (expected one of bald, seu, seu-, rsu, rspeu, totalsr, totalsr+)"
    )]
    UnknownVariant(String),
}
