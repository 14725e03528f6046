//! Text renderings shared by the miner, the oracle and the CLI.

use std::fmt::Write as _;

use crate::bounds::{self, BoundReport, ExpansionKind, Mode, Side};
use crate::miner::MinedRule;
use crate::rules::{format_ratio, Rule};
use crate::seqdb::{build_upsl, SequenceDatabase, Upsl, Vocabulary};
use crate::tables::{
    format_art, format_le_table, format_re_table, le_plus_table, le_table, re_table, Art,
};
use crate::utility::Utility;

/// `{e,f},{c} -> {b} #SUP: 0.5000 #CONF: 0.6667 #UTIL: 28`
pub fn rule_line(rule: &MinedRule, vocab: &Vocabulary) -> String {
    let conf = rule
        .measures
        .confidence()
        .map_or_else(|| "NaN".to_string(), format_ratio);
    format!(
        "{} #SUP: {} #CONF: {} #UTIL: {}",
        rule.rule.to_text(vocab),
        format_ratio(rule.measures.support()),
        conf,
        rule.measures.utility
    )
}

/// One line per rule, newline-terminated, in the given order.
pub fn rules_text(rules: &[MinedRule], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for r in rules {
        writeln!(out, "{}", rule_line(r, vocab)).unwrap();
    }
    out
}

/// Everything `inspect` shows for one rule: its LE, LE⁺ and RE tables, the
/// ART, the UPSL of each sequence and the applicable upper bounds.
pub fn inspect(db: &SequenceDatabase, rule: &Rule) -> String {
    let upsls: Vec<Upsl> = db
        .sequences()
        .iter()
        .map(|s| build_upsl(s, db.eutil()))
        .collect();
    let vocab = db.vocab();
    let mut out = String::new();
    writeln!(out, "rule\t{}", rule.to_text(vocab)).unwrap();

    out.push_str("\nLE table\n");
    out.push_str(&format_le_table(&le_table(rule, db, &upsls)));
    let (plus, only) = le_plus_table(rule, db, &upsls);
    out.push_str("\nLE+ table\n");
    out.push_str(&format_le_table(&plus));
    let mut art = Art::default();
    for sid in only {
        art.record(rule.antecedent(), sid);
    }
    out.push_str("\nART\n");
    out.push_str(&format_art(&art, vocab));
    out.push_str("\nRE table\n");
    out.push_str(&format_re_table(&re_table(rule, db, &upsls)));

    for (s, upsl) in db.sequences().iter().zip(&upsls) {
        writeln!(out, "\nUPSL {}", s.sid()).unwrap();
        let row = |label: &str, cells: Vec<String>| {
            let mut line = label.to_string();
            for c in cells {
                line.push('\t');
                line.push_str(&c);
            }
            line
        };
        let items = s
            .items()
            .iter()
            .map(|q| vocab.token(q.item).to_string())
            .collect();
        writeln!(out, "{}", row("item", items)).unwrap();
        writeln!(
            out,
            "{}",
            row("index", (1..=s.len()).map(|k| k.to_string()).collect())
        )
        .unwrap();
        writeln!(
            out,
            "{}",
            row("us", upsl.prefix().iter().map(Utility::to_string).collect())
        )
        .unwrap();
    }

    out.push_str("\nbounds\n");
    let per_seq = |r: &BoundReport| {
        r.per_sequence
            .iter()
            .map(|(sid, v)| format!("{sid}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "SEU\t{}", bounds::seu_rule(db, rule)).unwrap();
    let lepeu = bounds::lepeu(rule, db);
    writeln!(out, "LEPEU\t{}\t{}", lepeu.total, per_seq(&lepeu)).unwrap();
    let repeu = bounds::repeu(rule, db);
    writeln!(out, "REPEU\t{}\t{}", repeu.total, per_seq(&repeu)).unwrap();
    match ExpansionKind::last_step(rule) {
        None => out.push_str("parent\t-\n"),
        Some((parent, kind)) => {
            let mode = match kind.mode {
                Mode::I => "I",
                Mode::S => "S",
            };
            let (side, rs, rspeu, names) = match kind.side {
                Side::Left => (
                    "left",
                    bounds::lersu(&parent, &kind, db),
                    bounds::lerspeu(&parent, &kind, db),
                    ("LERSU", "LERSPEU"),
                ),
                Side::Right => (
                    "right",
                    bounds::rersu(&parent, &kind, db),
                    bounds::rerspeu(&parent, &kind, db),
                    ("RERSU", "RERSPEU"),
                ),
            };
            writeln!(
                out,
                "parent\t{}\t{side} {mode} {}",
                parent.to_text(vocab),
                vocab.token(kind.item)
            )
            .unwrap();
            writeln!(out, "{}\t{rs}", names.0).unwrap();
            writeln!(out, "{}\t{rspeu}", names.1).unwrap();
        }
    }
    out
}
