//! Genetic adaptation framework for self-adaptive software.
//!
//! A software *database* lists every feature of a business domain. A
//! *configuration* selects a subset of them and adds the machinery that
//! drives adaptation: relations between features, GAProgs (Enable/Disable
//! deltas naming adaptation states), behaviors, lifecycles (GAProcs) and
//! metamorphosis programs into other configurations. An *instance* of a
//! configuration holds a total enabled/disabled map and adapts as events
//! arrive.
//!
//! * [`dsl`] parses and prints the `.gaf` source language.
//! * [`link`] resolves names across files and checks model invariants.
//! * [`coherence`] closes a GAProg under the relations and detects conflicts.
//! * [`runtime`] creates instances, dispatches events, runs behaviors and
//!   metamorphoses, and records a deterministic trace.
//! * [`batch`] evaluates many closures at once.

pub mod batch;
pub mod coherence;
pub mod diagnostic;
pub mod dsl;
pub mod link;
pub mod model;
pub mod runtime;

pub use diagnostic::{Diagnostic, Severity};
pub use dsl::{format_unit, parse_unit, SourceUnit};
pub use link::{link, validate_model, LinkedModel};

/// Parse every `(path, text)` source and link them together. Parse errors
/// from all files are collected before giving up.
pub fn load_sources<'a>(
    sources: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<(LinkedModel, Vec<SourceUnit>, Vec<Diagnostic>), Vec<Diagnostic>> {
    let mut units = Vec::new();
    let mut diags = Vec::new();
    for (path, text) in sources {
        match parse_unit(text, path) {
            Ok(u) => units.push(u),
            Err(d) => diags.extend(d),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let (model, warnings) = link(&units)?;
    Ok((model, units, warnings))
}
