use std::collections::BTreeSet;

use gaf_core::batch::{propagate_many, propagate_many_sequential, Job};
use gaf_core::coherence::{explain, propagate, Justification};
use gaf_core::model::Mode;
use gaf_testkit::{naive_closure, oracle, random_model, OracleOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn set<'a>(it: impl Iterator<Item = &'a gaf_core::model::FeatureId>) -> BTreeSet<String> {
    it.map(|f| f.to_string()).collect()
}

#[test]
fn worklist_matches_naive_fixpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a_f0);
    let (mut closures, mut conflicts) = (0, 0);
    for case in 0..1000 {
        let model = random_model(&mut rng);
        let got = propagate(&model.seeds(), &model.relations);
        match (oracle(&model), got) {
            (OracleOutcome::Closure { enabled, disabled }, Ok(c)) => {
                assert_eq!(set(c.enabled()), enabled, "case {case}: {model:?}");
                assert_eq!(set(c.disabled()), disabled, "case {case}: {model:?}");
                closures += 1;
            }
            (OracleOutcome::Conflict(both), Err(e)) => {
                assert!(
                    both.contains(e.feature.as_str()),
                    "case {case}: {} not in {both:?}",
                    e.feature
                );
                conflicts += 1;
            }
            (want, got) => panic!("case {case}: oracle {want:?}, engine {got:?}\n{model:?}"),
        }
    }
    // Both outcome classes must be exercised for the comparison to mean much.
    assert!(
        closures > 100 && conflicts > 100,
        "{closures} closures, {conflicts} conflicts"
    );
}

#[test]
fn every_closure_member_explains_back_to_a_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let model = random_model(&mut rng);
        let Ok(closure) = propagate(&model.seeds(), &model.relations) else {
            continue;
        };
        for (mode, f) in closure.processing_order() {
            let chain = explain(&closure, f.as_str()).unwrap();
            assert!(chain.ends_in_seed(), "{f}: {chain}");
            assert_eq!(chain.steps()[0].feature, *f);
            assert_eq!(chain.steps()[0].mode, *mode);
            // Every relation step names the feature one link further down.
            for w in chain.steps().windows(2) {
                match &w[0].cause {
                    Justification::Relation { relation, from } => {
                        assert_eq!(from, &w[1].feature);
                        assert_eq!(relation.trigger, w[1].feature);
                        assert_eq!(relation.effect(), w[0].mode);
                    }
                    other => panic!("seed in the middle of a chain: {other:?}"),
                }
            }
        }
        let universe: BTreeSet<String> = model.features.iter().cloned().collect();
        assert!(set(closure.enabled()).is_subset(&universe));
        assert!(set(closure.enabled()).is_disjoint(&set(closure.disabled())));
    }
}

#[test]
fn conflict_chains_reach_seeds_from_both_sides() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut seen = 0;
    for _ in 0..500 {
        let model = random_model(&mut rng);
        if let Err(e) = propagate(&model.seeds(), &model.relations) {
            assert!(e.enable_chain.ends_in_seed() && e.disable_chain.ends_in_seed());
            assert_eq!(e.enable_chain.steps()[0].mode, Mode::Enable);
            assert_eq!(e.disable_chain.steps()[0].mode, Mode::Disable);
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn empty_seeds_give_empty_closure() {
    let rels = [(Mode::Enable, "a", gaf_core::model::Verb::Implies, Mode::Enable, "b")];
    assert_eq!(
        naive_closure(&rels, &[], &[]),
        OracleOutcome::Closure {
            enabled: BTreeSet::new(),
            disabled: BTreeSet::new()
        }
    );
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut model = random_model(&mut rng);
    model.enabled.clear();
    model.disabled.clear();
    assert!(propagate(&model.seeds(), &model.relations).unwrap().is_empty());
}

#[test]
fn batch_verdicts_match_one_by_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let models: Vec<_> = (0..400).map(|_| random_model(&mut rng)).collect();
    let jobs: Vec<Job> = models
        .iter()
        .map(|m| Job {
            seeds: m.seeds(),
            relations: &m.relations,
        })
        .collect();
    let one_by_one: Vec<_> = models.iter().map(|m| propagate(&m.seeds(), &m.relations)).collect();
    assert_eq!(propagate_many(&jobs), one_by_one);
    assert_eq!(propagate_many_sequential(&jobs), one_by_one);
}
