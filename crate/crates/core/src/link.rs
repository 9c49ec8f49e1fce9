//! Cross-reference resolution and model invariants.
//!
//! [`validate_model`] checks every invariant of the domain types across a
//! set of parsed units; [`link`] runs it and, when no errors remain, builds
//! the name-indexed [`LinkedModel`] the engines work from.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::diagnostic::{codes, has_errors, Diagnostic};
use crate::dsl::SourceUnit;
use crate::model::*;

/// How a lifecycle clause's target resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClauseKind {
    /// Adapt to a GAProg of `configuration`.
    State { configuration: String },
    /// Run a metamorphosis program owned by `configuration`.
    Metamorphosis { configuration: String },
}

#[derive(Clone, Debug, Default)]
pub struct LinkedModel {
    pub databases: IndexMap<String, SoftwareDatabase>,
    pub configurations: IndexMap<String, SoftwareConfiguration>,
    /// Per (configuration, gaproc): one entry per clause, in clause order.
    pub clause_kinds: HashMap<(String, String), Vec<ClauseKind>>,
}

impl LinkedModel {
    pub fn database(&self, name: &str) -> Option<&SoftwareDatabase> {
        self.databases.get(name)
    }

    pub fn configuration(&self, name: &str) -> Option<&SoftwareConfiguration> {
        self.configurations.get(name)
    }

    pub fn clause_kinds(&self, configuration: &str, gaproc: &str) -> Option<&[ClauseKind]> {
        self.clause_kinds
            .get(&(configuration.to_string(), gaproc.to_string()))
            .map(Vec::as_slice)
    }
}

/// Resolve and validate `units`, producing a linked model or the full list of
/// diagnostics. Warnings alone do not prevent linking.
pub fn link(units: &[SourceUnit]) -> Result<(LinkedModel, Vec<Diagnostic>), Vec<Diagnostic>> {
    let diags = validate_model(units);
    if has_errors(&diags) {
        return Err(diags);
    }
    let mut model = LinkedModel::default();
    for unit in units {
        for db in unit.databases() {
            model.databases.insert(db.name.to_string(), db.clone());
        }
        for c in unit.configurations() {
            model.configurations.insert(c.name.to_string(), c.clone());
        }
    }
    let index = Index::build(units);
    for c in model.configurations.values() {
        for p in &c.gaprocs {
            let reach = index.reachable(c, p);
            let kinds = p
                .clauses
                .iter()
                .map(|clause| {
                    resolve_target(&index, &reach, clause.target.as_str())
                        .expect("validated clause target")
                        .0
                })
                .collect();
            model.clause_kinds.insert((c.name.to_string(), p.id.to_string()), kinds);
        }
    }
    Ok((model, diags))
}

/// Name tables over every loaded unit; the first definition wins.
struct Index<'a> {
    databases: IndexMap<&'a str, &'a SoftwareDatabase>,
    configurations: IndexMap<&'a str, &'a SoftwareConfiguration>,
}

impl<'a> Index<'a> {
    fn build(units: &'a [SourceUnit]) -> Self {
        let mut databases = IndexMap::new();
        let mut configurations = IndexMap::new();
        for unit in units {
            for db in unit.databases() {
                databases.entry(db.name.as_str()).or_insert(db);
            }
            for c in unit.configurations() {
                configurations.entry(c.name.as_str()).or_insert(c);
            }
        }
        Index {
            databases,
            configurations,
        }
    }

    /// Configurations a lifecycle can be in: its owner plus every target of a
    /// metamorphosis program one of its clauses can reach, transitively.
    fn reachable(&self, owner: &'a SoftwareConfiguration, proc: &GaProc) -> Vec<&'a SoftwareConfiguration> {
        let mut reach = vec![owner];
        let mut i = 0;
        while i < reach.len() {
            let c = reach[i];
            for clause in &proc.clauses {
                if let Some(m) = c.metamorphosis(clause.target.as_str()) {
                    if let Some(t) = self.configurations.get(m.target_configuration.as_str()) {
                        if !reach.iter().any(|r| r.name == t.name) {
                            reach.push(t);
                        }
                    }
                }
            }
            i += 1;
        }
        reach
    }
}

#[derive(Debug)]
enum Resolution {
    Unresolved,
    Ambiguous,
}

/// Classify a clause target against the reachable configurations, and
/// return the configuration its behavior must live in.
fn resolve_target<'a>(
    index: &Index<'a>,
    reach: &[&'a SoftwareConfiguration],
    target: &str,
) -> Result<(ClauseKind, Option<&'a SoftwareConfiguration>), Resolution> {
    let mut found: Option<(ClauseKind, Option<&'a SoftwareConfiguration>)> = None;
    let mut ambiguous = false;
    for c in reach {
        let hit = if c.gaprog(target).is_some() {
            Some((
                ClauseKind::State {
                    configuration: c.name.to_string(),
                },
                Some(*c),
            ))
        } else {
            c.metamorphosis(target).map(|m| {
                (
                    ClauseKind::Metamorphosis {
                        configuration: c.name.to_string(),
                    },
                    index.configurations.get(m.target_configuration.as_str()).copied(),
                )
            })
        };
        if let Some(hit) = hit {
            match &found {
                None => found = Some(hit),
                Some((kind, _)) => {
                    let same_class = matches!(
                        (kind, &hit.0),
                        (ClauseKind::State { .. }, ClauseKind::State { .. })
                            | (ClauseKind::Metamorphosis { .. }, ClauseKind::Metamorphosis { .. })
                    );
                    if !same_class {
                        ambiguous = true;
                    }
                }
            }
        }
    }
    match (found, ambiguous) {
        (_, true) => Err(Resolution::Ambiguous),
        (Some(f), false) => Ok(f),
        (None, false) => Err(Resolution::Unresolved),
    }
}

/// Check every model invariant across `units`. Pure: the same units always
/// yield the same diagnostics in the same order.
pub fn validate_model(units: &[SourceUnit]) -> Vec<Diagnostic> {
    let mut v = Validator {
        diags: Vec::new(),
        index: Index::build(units),
    };
    v.duplicates_across_units(units);
    for unit in units {
        for db in unit.databases() {
            v.database(&unit.path, db);
        }
        for c in unit.configurations() {
            v.configuration(&unit.path, c);
        }
    }
    v.diags
}

struct Validator<'a> {
    diags: Vec<Diagnostic>,
    index: Index<'a>,
}

impl<'a> Validator<'a> {
    fn error(&mut self, code: &'static str, file: &str, at: &Ident, message: String) {
        self.diags.push(Diagnostic::error(code, file, at.loc(), message));
    }

    fn duplicates_across_units(&mut self, units: &[SourceUnit]) {
        let mut dbs = HashSet::new();
        let mut configs = HashSet::new();
        for unit in units {
            for db in unit.databases() {
                if !dbs.insert(db.name.as_str()) {
                    self.error(
                        codes::DUPLICATE_DEFINITION,
                        &unit.path,
                        &db.name,
                        format!("database `{}` is defined more than once", db.name),
                    );
                }
            }
            for c in unit.configurations() {
                if !configs.insert(c.name.as_str()) {
                    self.error(
                        codes::DUPLICATE_DEFINITION,
                        &unit.path,
                        &c.name,
                        format!("configuration `{}` is defined more than once", c.name),
                    );
                }
            }
        }
    }

    fn database(&mut self, file: &str, db: &SoftwareDatabase) {
        let mut seen = HashSet::new();
        for f in &db.features {
            if !seen.insert(f.id.as_str()) {
                self.error(
                    codes::DUPLICATE_DEFINITION,
                    file,
                    &f.id,
                    format!(
                        "feature `{}` is declared more than once in database `{}`",
                        f.id, db.name
                    ),
                );
            }
        }
    }

    fn require_feature(&mut self, file: &str, c: &SoftwareConfiguration, f: &Ident, context: &str) {
        if !c.has_feature(f.as_str()) {
            self.error(
                codes::FEATURE_NOT_IN_CONFIGURATION,
                file,
                f,
                format!(
                    "{context} refers to `{f}`, which is not a feature of configuration `{}`",
                    c.name
                ),
            );
        }
    }

    fn configuration(&mut self, file: &str, c: &'a SoftwareConfiguration) {
        match self.index.databases.get(c.database.as_str()).copied() {
            None => self.error(
                codes::UNRESOLVED_DATABASE,
                file,
                &c.database,
                format!("unknown database `{}`", c.database),
            ),
            Some(db) => {
                for f in &c.features {
                    if db.feature(f.as_str()).is_none() {
                        self.error(
                            codes::UNRESOLVED_FEATURE,
                            file,
                            f,
                            format!("feature `{f}` is not declared in database `{}`", db.name),
                        );
                    }
                }
            }
        }

        let mut seen = HashSet::new();
        for f in &c.features {
            if !seen.insert(f.as_str()) {
                self.error(
                    codes::DUPLICATE_DEFINITION,
                    file,
                    f,
                    format!("feature `{f}` is listed more than once"),
                );
            }
        }
        let mut seen = HashSet::new();
        for e in &c.expected_events {
            if !seen.insert(e.as_str()) {
                self.error(
                    codes::DUPLICATE_DEFINITION,
                    file,
                    e,
                    format!("event `{e}` is listed more than once"),
                );
            }
        }

        // GAProgs, behaviors, lifecycles and metamorphosis programs share one
        // namespace per configuration.
        let mut names = HashSet::new();
        let ids = c
            .gaprogs
            .iter()
            .map(|p| &p.id)
            .chain(c.behaviors.iter().map(|b| &b.id))
            .chain(c.gaprocs.iter().map(|p| &p.id))
            .chain(c.metamorphoses.iter().map(|m| &m.id));
        for id in ids {
            if !names.insert(id.as_str()) {
                self.error(
                    codes::DUPLICATE_DEFINITION,
                    file,
                    id,
                    format!("`{id}` is defined more than once in configuration `{}`", c.name),
                );
            }
        }

        self.relations(file, c);
        for p in &c.gaprogs {
            self.gaprog(file, c, p);
        }
        for b in &c.behaviors {
            for e in &b.edges {
                for f in [&e.from, &e.to] {
                    self.require_feature(file, c, f, &format!("behavior `{}`", b.id));
                }
            }
        }
        for p in &c.gaprocs {
            self.gaproc(file, c, p);
        }
        for m in &c.metamorphoses {
            self.metaprog(file, c, m);
        }
    }

    fn relations(&mut self, file: &str, c: &SoftwareConfiguration) {
        let mut seen = HashSet::new();
        for r in c.relations.iter() {
            self.require_feature(file, c, &r.trigger, "relation");
            self.require_feature(file, c, &r.target, "relation");
            if r.is_mixed_mode() {
                self.error(
                    codes::MIXED_MODE_RELATION,
                    file,
                    &r.trigger,
                    format!("mixed-mode relation: {r}"),
                );
            }
            if r.trigger == r.target {
                self.error(
                    codes::SELF_RELATION,
                    file,
                    &r.trigger,
                    format!("relation of `{}` to itself: {r}", r.trigger),
                );
            }
            if !seen.insert(r) {
                self.error(
                    codes::DUPLICATE_RELATION,
                    file,
                    &r.trigger,
                    format!("duplicate relation: {r}"),
                );
            }
        }
    }

    fn gaprog(&mut self, file: &str, c: &SoftwareConfiguration, p: &GaProg) {
        let context = format!("GAProg `{}`", p.id);
        for clause in &p.clauses {
            for f in &clause.features {
                self.require_feature(file, c, f, &context);
            }
        }
        let enabled: HashSet<&str> = p
            .clauses_of(Mode::Enable)
            .flat_map(|cl| cl.features.iter().map(Ident::as_str))
            .collect();
        let mut reported = HashSet::new();
        for f in p.clauses_of(Mode::Disable).flat_map(|cl| cl.features.iter()) {
            if enabled.contains(f.as_str()) && reported.insert(f.as_str()) {
                self.error(codes::SEED_CONFLICT, file, f, format!("seed conflict: {f}"));
            }
        }
    }

    fn gaproc(&mut self, file: &str, c: &'a SoftwareConfiguration, p: &GaProc) {
        let mut events = HashSet::new();
        for clause in &p.clauses {
            if !events.insert(clause.event.as_str()) {
                self.error(
                    codes::DUPLICATE_EVENT,
                    file,
                    &clause.event,
                    format!("event `{}` has more than one clause in GAProc `{}`", clause.event, p.id),
                );
            }
        }
        match p.creation_clause() {
            None => self.error(
                codes::MISSING_CREATION_CLAUSE,
                file,
                &p.id,
                format!("GAProc `{}` has no `{CREATION_EVENT}` clause", p.id),
            ),
            Some(clause) if c.gaprog(clause.target.as_str()).is_none() => self.error(
                codes::INVALID_CREATION_TARGET,
                file,
                &clause.target,
                format!(
                    "creation clause must name a GAProg of configuration `{}`, found `{}`",
                    c.name, clause.target
                ),
            ),
            Some(_) => {}
        }

        let reach = self.index.reachable(c, p);
        for clause in &p.clauses {
            match resolve_target(&self.index, &reach, clause.target.as_str()) {
                Err(Resolution::Unresolved) => self.error(
                    codes::UNRESOLVED_TARGET,
                    file,
                    &clause.target,
                    format!(
                        "`{}` is neither a GAProg nor a metamorphosis program reachable from configuration `{}`",
                        clause.target, c.name
                    ),
                ),
                Err(Resolution::Ambiguous) => self.error(
                    codes::AMBIGUOUS_TARGET,
                    file,
                    &clause.target,
                    format!(
                        "`{}` names both a GAProg and a metamorphosis program in reachable configurations",
                        clause.target
                    ),
                ),
                Ok((_, home)) => {
                    if let (Some(beh), Some(home)) = (&clause.behavior, home) {
                        if home.behavior(beh.as_str()).is_none() {
                            self.error(
                                codes::UNRESOLVED_BEHAVIOR,
                                file,
                                beh,
                                format!("behavior `{beh}` is not defined in configuration `{}`", home.name),
                            );
                        }
                    }
                }
            }
        }
    }

    fn metaprog(&mut self, file: &str, c: &SoftwareConfiguration, m: &MetamorphosisProgram) {
        if c.gaprog(m.from_state.as_str()).is_none() {
            self.error(
                codes::UNRESOLVED_STATE,
                file,
                &m.from_state,
                format!("`{}` is not a GAProg of configuration `{}`", m.from_state, c.name),
            );
        }
        if m.target_configuration == c.name {
            self.error(
                codes::METAMORPHOSIS_SELF_TARGET,
                file,
                &m.target_configuration,
                format!("metamorphosis program `{}` targets its own configuration", m.id),
            );
            return;
        }
        match self.index.configurations.get(m.target_configuration.as_str()) {
            None => self.error(
                codes::MISSING_CONFIGURATION,
                file,
                &m.target_configuration,
                format!("target configuration `{}` is not loaded", m.target_configuration),
            ),
            Some(target) => {
                if target.gaprog(m.to_state.as_str()).is_none() {
                    self.error(
                        codes::UNRESOLVED_STATE,
                        file,
                        &m.to_state,
                        format!("`{}` is not a GAProg of configuration `{}`", m.to_state, target.name),
                    );
                }
            }
        }
    }
}
