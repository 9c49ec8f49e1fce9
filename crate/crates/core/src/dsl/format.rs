use std::fmt::Write;

use crate::dsl::{Item, SourceUnit};
use crate::model::*;

const INDENT: &str = "    ";

/// Print a unit in canonical form: four-space indentation, one statement per
/// line, sections in a fixed order, a blank line between items. Leading
/// comments are kept; comments elsewhere are dropped.
pub fn format_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for line in &unit.header {
        out.push_str(line);
        out.push('\n');
    }
    if !unit.header.is_empty() && !unit.items.is_empty() {
        out.push('\n');
    }
    for (i, item) in unit.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            Item::Database(db) => format_database(&mut out, db),
            Item::Configuration(c) => format_configuration(&mut out, c),
        }
    }
    out
}

fn format_database(out: &mut String, db: &SoftwareDatabase) {
    if db.features.is_empty() {
        let _ = writeln!(out, "Database {} {{ }}", db.name);
        return;
    }
    let _ = writeln!(out, "Database {} {{", db.name);
    for f in &db.features {
        let _ = writeln!(out, "{INDENT}Feature {} : {};", f.id, f.kind.keyword());
    }
    out.push_str("}\n");
}

fn join(ids: &[Ident]) -> String {
    ids.iter().map(Ident::as_str).collect::<Vec<_>>().join(", ")
}

fn format_configuration(out: &mut String, c: &SoftwareConfiguration) {
    let mut blocks: Vec<String> = Vec::new();
    if !c.features.is_empty() {
        blocks.push(format!("Features {{\n{INDENT}{};\n}}\n", join(&c.features)));
    }
    if !c.expected_events.is_empty() {
        blocks.push(format!("Events {{\n{INDENT}{};\n}}\n", join(&c.expected_events)));
    }
    if !c.relations.is_empty() {
        let mut b = String::from("Relations {\n");
        for r in c.relations.iter() {
            let _ = writeln!(b, "{INDENT}{r};");
        }
        b.push_str("}\n");
        blocks.push(b);
    }
    for p in &c.gaprogs {
        if p.clauses.is_empty() {
            blocks.push(format!("GAProg {} {{ }}\n", p.id));
            continue;
        }
        let mut b = format!("GAProg {} {{\n", p.id);
        for clause in &p.clauses {
            let _ = writeln!(b, "{INDENT}{}({});", clause.mode, join(&clause.features));
        }
        b.push_str("}\n");
        blocks.push(b);
    }
    for beh in &c.behaviors {
        let mut b = format!("Behavior {} {{\n", beh.id);
        for e in &beh.edges {
            let _ = write!(b, "{INDENT}{} -", e.from);
            for g in &e.guards {
                let _ = write!(b, " ({})", format_condition(g));
            }
            let _ = writeln!(b, " {};", e.to);
        }
        b.push_str("}\n");
        blocks.push(b);
    }
    for p in &c.gaprocs {
        let mut b = format!("GAProc {} {{\n", p.id);
        for clause in &p.clauses {
            let _ = write!(b, "{INDENT}(event = {}): {}", clause.event, clause.target);
            if let Some(beh) = &clause.behavior {
                let _ = write!(b, ", {beh}");
            }
            b.push_str(";\n");
        }
        b.push_str("}\n");
        blocks.push(b);
    }
    for m in &c.metamorphoses {
        blocks.push(format!(
            "Metamorphosis_Program {} {{\n\
             {INDENT}Metamorphose to Configuration {};\n\
             {INDENT}At the Adaptation State {} to the Adaptation State {};\n\
             {INDENT}Information transition ensured by {} {};\n\
             }}\n",
            m.id,
            m.target_configuration,
            m.from_state,
            m.to_state,
            m.transition_kind.keyword(),
            m.transition_fn
        ));
    }

    if blocks.is_empty() {
        let _ = writeln!(out, "Configuration {} on {} {{ }}", c.name, c.database);
        return;
    }
    let _ = writeln!(out, "Configuration {} on {} {{", c.name, c.database);
    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for line in block.lines() {
            let _ = writeln!(out, "{INDENT}{line}");
        }
    }
    out.push_str("}\n");
}

pub fn format_literal(lit: &Literal) -> String {
    match lit {
        Literal::Int(i) => i.to_string(),
        Literal::Str(s) => {
            let mut q = String::with_capacity(s.len() + 2);
            q.push('"');
            for c in s.chars() {
                match c {
                    '"' => q.push_str("\\\""),
                    '\\' => q.push_str("\\\\"),
                    '\n' => q.push_str("\\n"),
                    '\t' => q.push_str("\\t"),
                    c => q.push(c),
                }
            }
            q.push('"');
            q
        }
    }
}

/// Parenthesizes exactly where re-parsing would otherwise change the tree.
pub fn format_condition(c: &Condition) -> String {
    match c {
        Condition::Compare(op, lit) => format!("out {} {}", op.symbol(), format_literal(lit)),
        Condition::Not(inner) => match **inner {
            Condition::Compare(..) => format!("not {}", format_condition(inner)),
            _ => format!("not ({})", format_condition(inner)),
        },
        Condition::And(terms) => terms
            .iter()
            .map(|t| match t {
                Condition::And(_) | Condition::Or(_) => format!("({})", format_condition(t)),
                _ => format_condition(t),
            })
            .collect::<Vec<_>>()
            .join(" and "),
        Condition::Or(terms) => terms
            .iter()
            .map(|t| match t {
                Condition::Or(_) => format!("({})", format_condition(t)),
                _ => format_condition(t),
            })
            .collect::<Vec<_>>()
            .join(" or "),
    }
}
