//! Test support for gaf-core: random models, a naive fixpoint oracle,
//! random worklist schedules and proptest strategies for source ASTs.
//!
//! The oracle deliberately shares no code with the worklist engine. It works
//! on plain strings and re-applies every relation until nothing changes.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use gaf_core::coherence::SeedLists;
use gaf_core::dsl::{Item, SourceUnit};
use gaf_core::link::LinkedModel;
use gaf_core::model::{
    Behavior, Condition, Edge, FeatureDecl, FeatureKind, FeatureState, GaClause, GaProc, GaProg, Ident, Literal,
    MetamorphosisProgram, Mode, ProcClause, RelOp, Relation, RelationSet, SoftwareConfiguration, SoftwareDatabase,
    SoftwareInstance, Status, Store, TransitionKind, Verb,
};

pub const MAX_FEATURES: usize = 8;
pub const MAX_RELATIONS: usize = 12;

/// The four legal relation forms as (trigger/target mode, verb).
pub const FORMS: [(Mode, Verb); 4] = [
    (Mode::Enable, Verb::Implies),
    (Mode::Disable, Verb::Implies),
    (Mode::Enable, Verb::Excludes),
    (Mode::Disable, Verb::Excludes),
];

/// A closure problem: relations over `features` plus disjoint seeds.
#[derive(Clone, Debug)]
pub struct RandomModel {
    pub features: Vec<String>,
    pub relations: RelationSet,
    pub enabled: Vec<String>,
    pub disabled: Vec<String>,
}

impl RandomModel {
    pub fn seeds(&self) -> SeedLists {
        let e: Vec<&str> = self.enabled.iter().map(String::as_str).collect();
        let d: Vec<&str> = self.disabled.iter().map(String::as_str).collect();
        SeedLists::from_names(&e, &d)
    }

    pub fn gaprog(&self, id: &str) -> GaProg {
        let mut p = GaProg::new(id);
        if !self.enabled.is_empty() {
            p.clauses.push(GaClause {
                mode: Mode::Enable,
                features: self.enabled.iter().map(Ident::new).collect(),
            });
        }
        if !self.disabled.is_empty() {
            p.clauses.push(GaClause {
                mode: Mode::Disable,
                features: self.disabled.iter().map(Ident::new).collect(),
            });
        }
        p
    }
}

/// At most 8 features, at most 12 distinct same-mode relations without
/// self-loops, and random disjoint Enable/Disable seeds.
pub fn random_model<R: Rng>(rng: &mut R) -> RandomModel {
    let n = rng.gen_range(1..=MAX_FEATURES);
    let features: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();

    let mut candidates = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                for form in FORMS {
                    candidates.push((a, b, form));
                }
            }
        }
    }
    candidates.shuffle(rng);
    let count = rng.gen_range(0..=MAX_RELATIONS).min(candidates.len());
    let relations = candidates[..count]
        .iter()
        .map(|&(a, b, (mode, verb))| Relation::new(mode, &features[a], verb, mode, &features[b]))
        .collect();

    let mut enabled = Vec::new();
    let mut disabled = Vec::new();
    let mut order = features.clone();
    order.shuffle(rng);
    for f in order {
        match rng.gen_range(0..3) {
            0 => enabled.push(f),
            1 => disabled.push(f),
            _ => {}
        }
    }
    RandomModel {
        features,
        relations: RelationSet::new(relations),
        enabled,
        disabled,
    }
}

/// What the naive fixpoint arrives at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    Closure {
        enabled: BTreeSet<String>,
        disabled: BTreeSet<String>,
    },
    /// Features that ended up in both lists.
    Conflict(BTreeSet<String>),
}

/// Apply every relation to the whole of both lists until neither grows;
/// the result is a conflict iff the lists intersect.
pub fn naive_closure(
    relations: &[(Mode, &str, Verb, Mode, &str)],
    enabled: &[&str],
    disabled: &[&str],
) -> OracleOutcome {
    let mut e: BTreeSet<String> = enabled.iter().map(|s| s.to_string()).collect();
    let mut d: BTreeSet<String> = disabled.iter().map(|s| s.to_string()).collect();
    loop {
        let mut changed = false;
        for &(trigger_mode, a, verb, _, b) in relations {
            let fired = match trigger_mode {
                Mode::Enable => e.contains(a),
                Mode::Disable => d.contains(a),
            };
            if !fired {
                continue;
            }
            let lands_in_e = matches!(
                (trigger_mode, verb),
                (Mode::Enable, Verb::Implies) | (Mode::Disable, Verb::Excludes)
            );
            let set = if lands_in_e { &mut e } else { &mut d };
            changed |= set.insert(b.to_string());
        }
        if !changed {
            break;
        }
    }
    let both: BTreeSet<String> = e.intersection(&d).cloned().collect();
    if both.is_empty() {
        OracleOutcome::Closure {
            enabled: e,
            disabled: d,
        }
    } else {
        OracleOutcome::Conflict(both)
    }
}

/// Run the oracle on a [`RandomModel`].
pub fn oracle(model: &RandomModel) -> OracleOutcome {
    let rels: Vec<(Mode, &str, Verb, Mode, &str)> = model
        .relations
        .iter()
        .map(|r| {
            (
                r.trigger_mode,
                r.trigger.as_str(),
                r.verb,
                r.target_mode,
                r.target.as_str(),
            )
        })
        .collect();
    let e: Vec<&str> = model.enabled.iter().map(String::as_str).collect();
    let d: Vec<&str> = model.disabled.iter().map(String::as_str).collect();
    naive_closure(&rels, &e, &d)
}

/// A schedule picking a uniformly random pending feature from either list.
pub fn random_schedule<R: Rng>(mut rng: R) -> impl FnMut(usize, usize) -> (Mode, usize) {
    move |pd, pe| {
        let i = rng.gen_range(0..pd + pe);
        if i < pd {
            (Mode::Disable, i)
        } else {
            (Mode::Enable, i - pd)
        }
    }
}

/// A behavior over some features of a configuration, and an instance in
/// which exactly one of the behavior's features is disabled.
pub struct BehaviorCase {
    pub model: LinkedModel,
    pub instance: SoftwareInstance,
    pub disabled: String,
}

pub fn random_behavior_case<R: Rng>(rng: &mut R) -> BehaviorCase {
    let n = rng.gen_range(2..=MAX_FEATURES);
    let features: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
    let mut involved = features.clone();
    involved.shuffle(rng);
    involved.truncate(rng.gen_range(2..=n));

    let mut edges = Vec::new();
    for w in involved.windows(2) {
        edges.push(Edge {
            from: Ident::new(&w[0]),
            guards: Vec::new(),
            to: Ident::new(&w[1]),
        });
    }
    for _ in 0..rng.gen_range(0..4) {
        let from = involved.choose(rng).unwrap();
        let to = involved.choose(rng).unwrap();
        edges.push(Edge {
            from: Ident::new(from),
            guards: vec![Condition::Compare(RelOp::Eq, Literal::Str("ok".into()))],
            to: Ident::new(to),
        });
    }
    edges.shuffle(rng);

    let mut config = SoftwareConfiguration::new("C", "D");
    config.features = features.iter().map(Ident::new).collect();
    config.behaviors.push(Behavior {
        id: Ident::new("B"),
        edges,
    });
    let database = SoftwareDatabase {
        name: Ident::new("D"),
        features: features
            .iter()
            .map(|f| FeatureDecl {
                id: Ident::new(f),
                kind: FeatureKind::Method,
            })
            .collect(),
    };

    let disabled = involved.choose(rng).unwrap().clone();
    let mut state = FeatureState::all_disabled(&config.features);
    for f in &features {
        let on = if involved.contains(f) {
            *f != disabled
        } else {
            rng.gen_bool(0.5)
        };
        if on {
            state.set(f, Status::Enabled);
        }
    }

    let mut model = LinkedModel::default();
    model.databases.insert("D".into(), database);
    model.configurations.insert("C".into(), config);
    let instance = SoftwareInstance {
        id: Ident::new("I"),
        configuration: Ident::new("C"),
        lifecycle: Ident::new("P"),
        lifecycle_configuration: Ident::new("C"),
        feature_state: state,
        current_state: None,
        active_behavior: Some(Ident::new("B")),
        store: Store::new(),
    };
    BehaviorCase {
        model,
        instance,
        disabled,
    }
}

// Strategies for syntactically valid source units.

pub fn ident() -> impl Strategy<Value = Ident> {
    "[A-Za-z][A-Za-z0-9_]{0,6}(-[A-Za-z0-9_]{1,4})?".prop_map(Ident::new)
}

fn idents(min: usize, max: usize) -> impl Strategy<Value = Vec<Ident>> {
    prop::collection::vec(ident(), min..=max)
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Enable), Just(Mode::Disable)]
}

fn verb() -> impl Strategy<Value = Verb> {
    prop_oneof![Just(Verb::Implies), Just(Verb::Excludes)]
}

pub fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<i64>().prop_map(Literal::Int),
        "[ -~\n\t]{0,8}".prop_map(Literal::Str),
    ]
}

pub fn condition() -> impl Strategy<Value = Condition> {
    let leaf = (prop::sample::select(RelOp::ALL.to_vec()), literal()).prop_map(|(op, lit)| Condition::Compare(op, lit));
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|c| Condition::Not(Box::new(c))),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Condition::And),
            prop::collection::vec(inner, 2..=3).prop_map(Condition::Or),
        ]
    })
}

fn relation() -> impl Strategy<Value = Relation> {
    (mode(), ident(), verb(), mode(), ident()).prop_map(|(tm, a, verb, m, b)| Relation {
        trigger_mode: tm,
        trigger: a,
        verb,
        target_mode: m,
        target: b,
    })
}

fn gaprog() -> impl Strategy<Value = GaProg> {
    (ident(), prop::collection::vec((mode(), idents(1, 3)), 0..=3)).prop_map(|(id, clauses)| GaProg {
        id,
        clauses: clauses
            .into_iter()
            .map(|(mode, features)| GaClause { mode, features })
            .collect(),
    })
}

fn behavior() -> impl Strategy<Value = Behavior> {
    let edge = (ident(), prop::collection::vec(condition(), 0..=2), ident()).prop_map(|(from, guards, to)| Edge {
        from,
        guards,
        to,
    });
    (ident(), prop::collection::vec(edge, 1..=3)).prop_map(|(id, edges)| Behavior { id, edges })
}

fn gaproc() -> impl Strategy<Value = GaProc> {
    let clause = (ident(), ident(), prop::option::of(ident())).prop_map(|(event, target, behavior)| ProcClause {
        event,
        target,
        behavior,
    });
    (ident(), prop::collection::vec(clause, 1..=3)).prop_map(|(id, clauses)| GaProc { id, clauses })
}

fn metamorphosis() -> impl Strategy<Value = MetamorphosisProgram> {
    let kind = prop_oneof![Just(TransitionKind::Function), Just(TransitionKind::Procedure)];
    (ident(), ident(), ident(), ident(), kind, ident()).prop_map(
        |(id, target_configuration, from_state, to_state, transition_kind, transition_fn)| MetamorphosisProgram {
            id,
            target_configuration,
            from_state,
            to_state,
            transition_kind,
            transition_fn,
        },
    )
}

fn database() -> impl Strategy<Value = SoftwareDatabase> {
    let kind = prop::sample::select(vec![
        FeatureKind::State,
        FeatureKind::Data,
        FeatureKind::Method,
        FeatureKind::Adapter,
    ]);
    let decl = (ident(), kind).prop_map(|(id, kind)| FeatureDecl { id, kind });
    (ident(), prop::collection::vec(decl, 0..=4)).prop_map(|(name, features)| SoftwareDatabase { name, features })
}

fn configuration() -> impl Strategy<Value = SoftwareConfiguration> {
    (
        (ident(), ident(), idents(0, 4), idents(0, 3)),
        prop::collection::vec(relation(), 0..=3),
        prop::collection::vec(gaprog(), 0..=2),
        prop::collection::vec(behavior(), 0..=2),
        prop::collection::vec(gaproc(), 0..=2),
        prop::collection::vec(metamorphosis(), 0..=1),
    )
        .prop_map(
            |((name, database, features, expected_events), relations, gaprogs, behaviors, gaprocs, metamorphoses)| {
                SoftwareConfiguration {
                    name,
                    database,
                    features,
                    expected_events,
                    relations: RelationSet::new(relations),
                    gaprogs,
                    behaviors,
                    gaprocs,
                    metamorphoses,
                }
            },
        )
}

/// Source units that print to parseable text. They need not link.
pub fn source_unit() -> impl Strategy<Value = SourceUnit> {
    let item = prop_oneof![
        database().prop_map(Item::Database),
        configuration().prop_map(Item::Configuration),
    ];
    (
        prop::collection::vec("// [ -~]{0,20}".prop_map(|s| s.trim_end().to_string()), 0..=2),
        prop::collection::vec(item, 0..=3),
    )
        .prop_map(|(header, items)| {
            let mut unit = SourceUnit::from_items("generated.gaf", items);
            unit.header = header;
            unit
        })
}
