//! Batch closure evaluation.
//!
//! With the `parallel` feature (on by default) jobs are spread over the rayon
//! thread pool; without it, or through the `_sequential` entry points, they
//! run one after another. Results always come back in job order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::coherence::{
    apply_gaprog, propagate, propagate_with, seed_lists, Closure, CoherenceError, Schedule, SeedLists,
};
use crate::diagnostic::{codes, Diagnostic};
use crate::dsl::SourceUnit;
use crate::link::LinkedModel;
use crate::model::{FeatureState, RelationSet};

/// One propagation problem.
#[derive(Clone, Debug)]
pub struct Job<'a> {
    pub seeds: SeedLists,
    pub relations: &'a RelationSet,
}

pub type Verdict = Result<Closure, CoherenceError>;

pub fn propagate_many_sequential(jobs: &[Job<'_>]) -> Vec<Verdict> {
    jobs.iter().map(|j| propagate(&j.seeds, j.relations)).collect()
}

#[cfg(feature = "parallel")]
pub fn propagate_many_parallel(jobs: &[Job<'_>]) -> Vec<Verdict> {
    jobs.par_iter().map(|j| propagate(&j.seeds, j.relations)).collect()
}

/// Propagate every job, in parallel when the `parallel` feature is enabled.
pub fn propagate_many(jobs: &[Job<'_>]) -> Vec<Verdict> {
    #[cfg(feature = "parallel")]
    {
        propagate_many_parallel(jobs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        propagate_many_sequential(jobs)
    }
}

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
pub fn map_all<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Propagate one job under many schedules; `make_schedule(i)` builds the
/// i-th schedule.
pub fn propagate_under_schedules<S, F>(job: &Job<'_>, count: usize, make_schedule: F) -> Vec<Verdict>
where
    S: Schedule,
    F: Fn(usize) -> S + Sync + Send,
{
    let idx: Vec<usize> = (0..count).collect();
    map_all(&idx, |i| {
        propagate_with(&job.seeds, job.relations, &mut make_schedule(*i))
    })
}

/// Apply every GAProg of every configuration to an all-disabled instance and
/// warn about those that fail the coherence check. `units` supply file
/// names for the diagnostics.
pub fn sweep_gaprogs(model: &LinkedModel, units: &[SourceUnit]) -> Vec<Diagnostic> {
    let mut work = Vec::new();
    for unit in units {
        for c in unit.configurations() {
            let Some(linked) = model.configuration(c.name.as_str()) else {
                continue;
            };
            for p in &linked.gaprogs {
                work.push((unit.path.as_str(), linked, p));
            }
        }
    }
    let verdicts = map_all(&work, |(_, c, p)| {
        let blank = FeatureState::all_disabled(&c.features);
        apply_gaprog(&blank, p, &c.relations).err()
    });
    work.iter()
        .zip(verdicts)
        .filter_map(|((file, c, p), err)| {
            // Seed-level conflicts are already reported as errors by the
            // validator, so only relation-induced ones are new here.
            let err = err?;
            let seeds = seed_lists(p);
            if seeds
                .enabled
                .iter()
                .any(|(f, _)| seeds.disabled.iter().any(|(g, _)| g == f))
            {
                return None;
            }
            Some(Diagnostic::warning(
                codes::INCOHERENT_GAPROG,
                file,
                p.id.loc(),
                format!(
                    "GAProg `{}` of configuration `{}` cannot be applied: {err}",
                    p.id, c.name
                ),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mode, Relation, Verb};

    #[test]
    fn parallel_and_sequential_agree() {
        let rels = RelationSet::new(vec![
            Relation::new(Mode::Enable, "a", Verb::Implies, Mode::Enable, "b"),
            Relation::new(Mode::Enable, "b", Verb::Excludes, Mode::Enable, "c"),
        ]);
        let jobs: Vec<Job> = [(&["a"][..], &[][..]), (&["a"][..], &["b"][..]), (&[][..], &["c"][..])]
            .iter()
            .map(|(e, d)| Job {
                seeds: SeedLists::from_names(e, d),
                relations: &rels,
            })
            .collect();
        let seq = propagate_many_sequential(&jobs);
        assert_eq!(propagate_many(&jobs), seq);
        assert!(seq[0].is_ok() && seq[1].is_err() && seq[2].is_ok());
    }
}
