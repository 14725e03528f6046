//! High-utility totally-ordered sequential rule mining.

pub mod bounds;
pub mod datagen;
pub mod error;
pub mod example;
pub mod miner;
pub mod oracle;
pub mod report;
pub mod rules;
pub mod seqdb;
pub mod tables;
pub mod utility;

pub use error::{ConfigError, DataError, GenError, RuleError};
pub use miner::{
    mine, mine_plus, mine_with, MinedRule, MiningResult, Thresholds, Variant, VariantConfig,
};
pub use oracle::{oracle_mine, OracleLimits};
pub use rules::{Rule, RuleMeasures};
pub use seqdb::{Item, QSequence, SequenceDatabase, Sid};
pub use utility::Utility;
