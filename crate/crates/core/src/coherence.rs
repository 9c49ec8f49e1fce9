//! The adaptation manager: closes a GAProg's Enable/Disable seeds under a
//! configuration's relations and rejects any feature that ends up on both
//! sides.
//!
//! Propagation is worklist driven. Seeds enter the Disabled_List and
//! Enabled_List worklists in clause order; each round drains the disabled
//! worklist first, then the enabled one, scanning relations in declaration
//! order for every processed feature. A feature joins a list at most once
//! and the lists are checked for overlap on every insertion, so the loop
//! stops after at most one visit per feature.
//!
//! Relations fire on actions taken during this application only. A trigger
//! that was enabled by an earlier GAProg does not fire again.

use std::collections::VecDeque;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::{FeatureId, FeatureState, GaProg, Ident, Mode, Relation, RelationSet, Status};

/// Why a feature is in a list: a seed clause, or a relation fired by another
/// feature already in a list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    /// `clause` is the 1-based position of the clause in its GAProg.
    Seed {
        mode: Mode,
        clause: usize,
    },
    Relation {
        relation: Relation,
        from: FeatureId,
    },
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Seed { mode, clause } => write!(f, "seed {mode} clause {clause}"),
            Justification::Relation { relation, .. } => write!(f, "{relation}"),
        }
    }
}

/// One link of a derivation chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub feature: FeatureId,
    pub mode: Mode,
    pub cause: Justification,
}

/// A derivation from a feature back to the seed clause it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain(pub Vec<Step>);

impl Chain {
    pub fn steps(&self) -> &[Step] {
        &self.0
    }

    pub fn ends_in_seed(&self) -> bool {
        matches!(
            self.0.last(),
            Some(Step {
                cause: Justification::Seed { .. },
                ..
            })
        )
    }
}

/// `b by Enable(a) Implies Enable(b) <= a by seed Enable clause 1`
impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" <= ")?;
            }
            write!(f, "{} by {}", step.feature, step.cause)?;
        }
        Ok(())
    }
}

/// A feature derived into both lists.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("coherence conflict on {feature}: enabled via [{enable_chain}], disabled via [{disable_chain}]")]
pub struct CoherenceError {
    pub feature: FeatureId,
    pub enable_chain: Chain,
    pub disable_chain: Chain,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("feature {0} is not in the closure")]
pub struct NotInClosure(pub String);

/// Seeds of one GAProg, each with the clause that introduced it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedLists {
    pub enabled: Vec<(FeatureId, usize)>,
    pub disabled: Vec<(FeatureId, usize)>,
}

impl SeedLists {
    /// Seeds from plain feature lists, all attributed to clause 1.
    pub fn from_names(enabled: &[&str], disabled: &[&str]) -> Self {
        SeedLists {
            enabled: enabled.iter().map(|f| (Ident::new(*f), 1)).collect(),
            disabled: disabled.iter().map(|f| (Ident::new(*f), 1)).collect(),
        }
    }

    pub fn of(&self, mode: Mode) -> &[(FeatureId, usize)] {
        match mode {
            Mode::Enable => &self.enabled,
            Mode::Disable => &self.disabled,
        }
    }
}

/// Union of the Enable clauses and of the Disable clauses, in declaration
/// order, first occurrence kept.
pub fn seed_lists(gaprog: &GaProg) -> SeedLists {
    let mut seeds = SeedLists::default();
    for (i, clause) in gaprog.clauses.iter().enumerate() {
        let list = match clause.mode {
            Mode::Enable => &mut seeds.enabled,
            Mode::Disable => &mut seeds.disabled,
        };
        for f in &clause.features {
            if !list.iter().any(|(g, _)| g == f) {
                list.push((f.clone(), i + 1));
            }
        }
    }
    seeds
}

/// Final Enabled_List/Disabled_List with one justification per member.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Closure {
    enabled: IndexMap<FeatureId, Justification>,
    disabled: IndexMap<FeatureId, Justification>,
    order: Vec<(Mode, FeatureId)>,
}

impl Closure {
    /// Enabled_List in insertion order.
    pub fn enabled(&self) -> impl Iterator<Item = &FeatureId> {
        self.enabled.keys()
    }

    /// Disabled_List in insertion order.
    pub fn disabled(&self) -> impl Iterator<Item = &FeatureId> {
        self.disabled.keys()
    }

    pub fn list(&self, mode: Mode) -> impl Iterator<Item = &FeatureId> {
        match mode {
            Mode::Enable => self.enabled.keys(),
            Mode::Disable => self.disabled.keys(),
        }
    }

    pub fn contains(&self, mode: Mode, feature: &str) -> bool {
        match mode {
            Mode::Enable => self.enabled.contains_key(feature),
            Mode::Disable => self.disabled.contains_key(feature),
        }
    }

    pub fn verdict(&self, feature: &str) -> Option<Mode> {
        if self.enabled.contains_key(feature) {
            Some(Mode::Enable)
        } else if self.disabled.contains_key(feature) {
            Some(Mode::Disable)
        } else {
            None
        }
    }

    /// Features in the order they were processed (enabled or disabled).
    pub fn processing_order(&self) -> &[(Mode, FeatureId)] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.enabled.len() + self.disabled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn justification(&self, feature: &str) -> Option<&Justification> {
        self.enabled.get(feature).or_else(|| self.disabled.get(feature))
    }
}

/// Derivation chain from `feature` back to its seed clause.
pub fn explain(closure: &Closure, feature: &str) -> Result<Chain, NotInClosure> {
    let mode = closure
        .verdict(feature)
        .ok_or_else(|| NotInClosure(feature.to_string()))?;
    let key = closure
        .list(mode)
        .find(|f| *f == feature)
        .cloned()
        .expect("verdict implies membership");
    Ok(chain_from(&closure.enabled, &closure.disabled, key, mode))
}

fn chain_from(
    enabled: &IndexMap<FeatureId, Justification>,
    disabled: &IndexMap<FeatureId, Justification>,
    mut feature: FeatureId,
    mut mode: Mode,
) -> Chain {
    let mut steps = Vec::new();
    // Each relation step points at a feature inserted strictly earlier, so
    // the walk is bounded by the closure size.
    loop {
        let map = match mode {
            Mode::Enable => enabled,
            Mode::Disable => disabled,
        };
        let cause = map[&feature].clone();
        let next = match &cause {
            Justification::Seed { .. } => None,
            Justification::Relation { relation, from } => Some((from.clone(), relation.trigger_mode)),
        };
        steps.push(Step { feature, mode, cause });
        match next {
            Some((f, m)) => {
                feature = f;
                mode = m;
            }
            None => return Chain(steps),
        }
    }
}

/// Chooses which pending feature to process next.
///
/// The default [`Fifo`] order drains the disabled worklist before the
/// enabled one and takes each from the front. Other orders only change
/// derivation chains, never list membership or the conflict verdict.
pub trait Schedule {
    /// Pick from the two non-empty-in-total worklists; returns the worklist
    /// and an index into it.
    fn pick(&mut self, pending_disabled: usize, pending_enabled: usize) -> (Mode, usize);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Fifo;

impl Schedule for Fifo {
    fn pick(&mut self, pending_disabled: usize, _pending_enabled: usize) -> (Mode, usize) {
        if pending_disabled > 0 {
            (Mode::Disable, 0)
        } else {
            (Mode::Enable, 0)
        }
    }
}

impl<F: FnMut(usize, usize) -> (Mode, usize)> Schedule for F {
    fn pick(&mut self, pending_disabled: usize, pending_enabled: usize) -> (Mode, usize) {
        self(pending_disabled, pending_enabled)
    }
}

/// Close `seeds` under `relations` with the default schedule.
pub fn propagate(seeds: &SeedLists, relations: &RelationSet) -> Result<Closure, CoherenceError> {
    propagate_with(seeds, relations, &mut Fifo)
}

pub fn propagate_with<S: Schedule + ?Sized>(
    seeds: &SeedLists,
    relations: &RelationSet,
    schedule: &mut S,
) -> Result<Closure, CoherenceError> {
    let mut run = Run::default();

    // Seed-level intersection check first.
    for (f, clause) in &seeds.enabled {
        if let Some((_, dclause)) = seeds.disabled.iter().find(|(g, _)| g == f) {
            return Err(CoherenceError {
                feature: f.clone(),
                enable_chain: Chain(vec![Step {
                    feature: f.clone(),
                    mode: Mode::Enable,
                    cause: Justification::Seed {
                        mode: Mode::Enable,
                        clause: *clause,
                    },
                }]),
                disable_chain: Chain(vec![Step {
                    feature: f.clone(),
                    mode: Mode::Disable,
                    cause: Justification::Seed {
                        mode: Mode::Disable,
                        clause: *dclause,
                    },
                }]),
            });
        }
    }

    for mode in [Mode::Disable, Mode::Enable] {
        for (f, clause) in seeds.of(mode) {
            run.add(mode, f.clone(), Justification::Seed { mode, clause: *clause })?;
        }
    }

    while !(run.pending_disabled.is_empty() && run.pending_enabled.is_empty()) {
        let (mode, idx) = schedule.pick(run.pending_disabled.len(), run.pending_enabled.len());
        let queue = match mode {
            Mode::Enable => &mut run.pending_enabled,
            Mode::Disable => &mut run.pending_disabled,
        };
        let feature = queue.remove(idx).expect("schedule picked a valid worklist index");
        for r in relations.iter() {
            if r.trigger_mode == mode && r.trigger == feature {
                run.add(
                    r.effect(),
                    r.target.clone(),
                    Justification::Relation {
                        relation: r.clone(),
                        from: feature.clone(),
                    },
                )?;
            }
        }
        run.closure.order.push((mode, feature));
    }

    debug_assert!(run
        .closure
        .enabled
        .keys()
        .all(|f| !run.closure.disabled.contains_key(f)));
    Ok(run.closure)
}

#[derive(Default)]
struct Run {
    closure: Closure,
    pending_enabled: VecDeque<FeatureId>,
    pending_disabled: VecDeque<FeatureId>,
}

impl Run {
    fn add(&mut self, mode: Mode, feature: FeatureId, why: Justification) -> Result<(), CoherenceError> {
        let c = &mut self.closure;
        let (same, other, queue) = match mode {
            Mode::Enable => (&mut c.enabled, &c.disabled, &mut self.pending_enabled),
            Mode::Disable => (&mut c.disabled, &c.enabled, &mut self.pending_disabled),
        };
        if same.contains_key(&feature) {
            return Ok(());
        }
        if other.contains_key(&feature) {
            // Record the new derivation so both chains can be walked.
            let mut enabled = c.enabled.clone();
            let mut disabled = c.disabled.clone();
            match mode {
                Mode::Enable => enabled.insert(feature.clone(), why),
                Mode::Disable => disabled.insert(feature.clone(), why),
            };
            return Err(CoherenceError {
                enable_chain: chain_from(&enabled, &disabled, feature.clone(), Mode::Enable),
                disable_chain: chain_from(&enabled, &disabled, feature.clone(), Mode::Disable),
                feature,
            });
        }
        same.insert(feature.clone(), why);
        queue.push_back(feature);
        Ok(())
    }
}

/// Apply `gaprog` as a delta over `state`: members of the closure take its
/// verdict, every other feature keeps its status. `state` is left untouched
/// on error.
pub fn apply_gaprog(
    state: &FeatureState,
    gaprog: &GaProg,
    relations: &RelationSet,
) -> Result<(FeatureState, Closure), CoherenceError> {
    let closure = propagate(&seed_lists(gaprog), relations)?;
    let mut next = state.clone();
    for f in closure.disabled() {
        next.set(f.as_str(), Status::Disabled);
    }
    for f in closure.enabled() {
        next.set(f.as_str(), Status::Enabled);
    }
    Ok((next, closure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Verb;

    fn rel(tm: Mode, a: &str, verb: Verb, b: &str) -> Relation {
        Relation::new(tm, a, verb, tm, b)
    }

    fn names<'a>(it: impl Iterator<Item = &'a FeatureId>) -> Vec<&'a str> {
        it.map(|f| f.as_str()).collect()
    }

    #[test]
    fn seed_lists_follow_clause_order() {
        let p = GaProg::new("P").enable(&["a", "b"]).disable(&["c"]);
        let s = seed_lists(&p);
        assert_eq!(
            s,
            SeedLists {
                enabled: vec![("a".into(), 1), ("b".into(), 1)],
                disabled: vec![("c".into(), 2)],
            }
        );
        assert_eq!(seed_lists(&GaProg::new("E")), SeedLists::default());
        let s = seed_lists(&GaProg::new("P").enable(&["a"]).enable(&["b", "a"]));
        assert_eq!(s.enabled, vec![("a".into(), 1), ("b".into(), 2)]);
        assert!(s.disabled.is_empty());
    }

    #[test]
    fn implies_enable() {
        let rels = RelationSet::new(vec![rel(Mode::Enable, "a", Verb::Implies, "b")]);
        let c = propagate(&SeedLists::from_names(&["a"], &[]), &rels).unwrap();
        assert_eq!(names(c.enabled()), ["a", "b"]);
        assert_eq!(c.disabled().count(), 0);
    }

    #[test]
    fn implied_feature_already_disabled_conflicts() {
        let rels = RelationSet::new(vec![rel(Mode::Enable, "a", Verb::Implies, "b")]);
        let err = propagate(&SeedLists::from_names(&["a"], &["b"]), &rels).unwrap_err();
        assert_eq!(err.feature, "b");
        assert_eq!(
            err.enable_chain.to_string(),
            "b by Enable(a) Implies Enable(b) <= a by seed Enable clause 1"
        );
        assert_eq!(err.disable_chain.to_string(), "b by seed Disable clause 1");
        assert!(err.enable_chain.ends_in_seed() && err.disable_chain.ends_in_seed());
        assert_ne!(err.enable_chain, err.disable_chain);
    }

    #[test]
    fn disable_excludes_disable_enables_target() {
        let rels = RelationSet::new(vec![rel(Mode::Disable, "a", Verb::Excludes, "b")]);
        let c = propagate(&SeedLists::from_names(&[], &["a"]), &rels).unwrap();
        assert_eq!(names(c.enabled()), ["b"]);
        assert_eq!(names(c.disabled()), ["a"]);
    }

    #[test]
    fn enable_excludes_enable_disables_target() {
        let rels = RelationSet::new(vec![rel(Mode::Enable, "a", Verb::Excludes, "b")]);
        let c = propagate(&SeedLists::from_names(&["a"], &[]), &rels).unwrap();
        assert_eq!(names(c.disabled()), ["b"]);
    }

    #[test]
    fn disable_implies_disable_chains() {
        let rels = RelationSet::new(vec![
            rel(Mode::Disable, "b", Verb::Implies, "c"),
            rel(Mode::Disable, "a", Verb::Implies, "b"),
        ]);
        let c = propagate(&SeedLists::from_names(&[], &["a"]), &rels).unwrap();
        assert_eq!(names(c.disabled()), ["a", "b", "c"]);
        assert_eq!(explain(&c, "c").unwrap().steps().len(), 3);
    }

    #[test]
    fn seed_intersection_is_rejected_up_front() {
        let err = propagate(&SeedLists::from_names(&["a"], &["a"]), &RelationSet::default()).unwrap_err();
        assert_eq!(err.feature, "a");
    }

    #[test]
    fn disabled_worklist_drains_first() {
        let rels = RelationSet::new(vec![
            rel(Mode::Enable, "e", Verb::Implies, "e2"),
            rel(Mode::Disable, "d", Verb::Implies, "d2"),
        ]);
        let c = propagate(&SeedLists::from_names(&["e"], &["d"]), &rels).unwrap();
        let order: Vec<_> = c.processing_order().iter().map(|(m, f)| (*m, f.as_str())).collect();
        assert_eq!(
            order,
            [
                (Mode::Disable, "d"),
                (Mode::Disable, "d2"),
                (Mode::Enable, "e"),
                (Mode::Enable, "e2")
            ]
        );
    }

    #[test]
    fn explain_chains() {
        let rels = RelationSet::new(vec![rel(Mode::Enable, "a", Verb::Implies, "b")]);
        let c = propagate(&SeedLists::from_names(&["a"], &[]), &rels).unwrap();
        let b = explain(&c, "b").unwrap();
        assert_eq!(b.steps().len(), 2);
        assert_eq!(
            b.steps()[0].cause,
            Justification::Relation {
                relation: rels.relations[0].clone(),
                from: "a".into()
            }
        );
        assert_eq!(
            b.steps()[1].cause,
            Justification::Seed {
                mode: Mode::Enable,
                clause: 1
            }
        );
        assert_eq!(explain(&c, "a").unwrap().to_string(), "a by seed Enable clause 1");
        assert_eq!(explain(&c, "z").unwrap_err(), NotInClosure("z".into()));
    }

    #[test]
    fn apply_is_a_delta() {
        let features: Vec<FeatureId> = vec!["q".into(), "s".into(), "x".into()];
        let mut state = FeatureState::all_disabled(&features);
        state.set("q", Status::Enabled);
        state.set("x", Status::Enabled);
        let p = GaProg::new("StStack").enable(&["s"]).disable(&["q"]);
        let (next, closure) = apply_gaprog(&state, &p, &RelationSet::default()).unwrap();
        assert_eq!(next.status("q"), Some(Status::Disabled));
        assert_eq!(next.status("s"), Some(Status::Enabled));
        assert_eq!(next.status("x"), Some(Status::Enabled));
        assert_eq!(closure.len(), 2);

        let (same, empty) = apply_gaprog(&state, &GaProg::new("E"), &RelationSet::default()).unwrap();
        assert_eq!(same, state);
        assert!(empty.is_empty());
    }

    #[test]
    fn relations_do_not_refire_from_prior_state() {
        // `a` is already enabled; enabling `c` alone must not fire a's relation.
        let features: Vec<FeatureId> = vec!["a".into(), "b".into(), "c".into()];
        let mut state = FeatureState::all_disabled(&features);
        state.set("a", Status::Enabled);
        let rels = RelationSet::new(vec![rel(Mode::Enable, "a", Verb::Implies, "b")]);
        let (next, _) = apply_gaprog(&state, &GaProg::new("P").enable(&["c"]), &rels).unwrap();
        assert_eq!(next.status("b"), Some(Status::Disabled));
    }
}
