//! Software-instance lifecycle: creation, event dispatch through the
//! instance's GAProc, behavior execution and metamorphosis between
//! configurations.
//!
//! Every operation either commits completely or leaves the instance as it
//! was. Records are appended to the trace only for work that committed; the
//! caller reports failures (see [`script::Session`]).

mod registry;
pub mod script;
mod trace;

use std::collections::HashMap;

use thiserror::Error;

use crate::coherence::{apply_gaprog, Closure, CoherenceError};
use crate::link::LinkedModel;
use crate::model::*;

pub use registry::{
    list_ops, parse_value, FeatureHandler, FeatureRegistry, Registries, StubMode, StubOutputs, StubParseError,
    TransitionFn, TransitionRegistry, ITEMS_KEY,
};
pub use trace::{Record, Trace};

pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("no instance has been created")]
    NoInstance,
    #[error("instance {0} already exists")]
    InstanceExists(String),
    #[error("unknown database {0}")]
    UnknownDatabase(String),
    #[error("unknown configuration {0}")]
    UnknownConfiguration(String),
    #[error("configuration {configuration} is defined on database {expected}, not {given}")]
    DatabaseMismatch {
        configuration: String,
        expected: String,
        given: String,
    },
    #[error("configuration {configuration} has no GAProc {gaproc}")]
    UnknownGaProc { configuration: String, gaproc: String },
    #[error("GAProc {0} has no creation clause")]
    MissingCreationClause(String),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error("{target} is not a GAProg or metamorphosis program of configuration {configuration}")]
    TargetNotInConfiguration { target: String, configuration: String },
    #[error("configuration {configuration} has no GAProg {state}")]
    UnknownState { configuration: String, state: String },
    #[error("configuration {configuration} has no behavior {behavior}")]
    UnknownBehavior { configuration: String, behavior: String },
    #[error("metamorphosis {program} starts from {expected} but the instance is in {actual}")]
    WrongSourceState {
        program: String,
        expected: String,
        actual: String,
    },
    #[error("no transition function {0} is registered")]
    UnknownTransitionFn(String),
    #[error("transition function {function} failed: {message}")]
    TransitionFailed { function: String, message: String },
    #[error("the instance has no active behavior")]
    NoActiveBehavior,
    #[error("behavior {behavior} involves disabled feature {feature}")]
    BehaviorFeatureDisabled { behavior: String, feature: String },
    #[error("behavior {behavior} exceeded {limit} steps")]
    StepLimitExceeded { behavior: String, limit: usize },
    #[error("ordering comparison `out {op} {literal}` against output {output}")]
    GuardTypeError {
        op: &'static str,
        literal: String,
        output: String,
    },
    #[error("{feature} is not a feature of configuration {configuration}")]
    UnknownFeature { feature: String, configuration: String },
    #[error("feature {0} is disabled")]
    FeatureDisabled(String),
    #[error("feature {0} has no handler")]
    UnboundFeature(String),
    #[error("feature {feature} failed: {message}")]
    HandlerFailed { feature: String, message: String },
}

impl RuntimeError {
    /// Stable code used in `ERROR` trace records.
    pub fn code(&self) -> &'static str {
        use RuntimeError::*;
        match self {
            NoInstance => "no-instance",
            InstanceExists(_) => "instance-exists",
            UnknownDatabase(_) => "unknown-database",
            UnknownConfiguration(_) => "unknown-configuration",
            DatabaseMismatch { .. } => "database-mismatch",
            UnknownGaProc { .. } => "unknown-gaproc",
            MissingCreationClause(_) => "missing-creation-clause",
            Coherence(_) => "coherence-conflict",
            TargetNotInConfiguration { .. } => "target-not-in-configuration",
            UnknownState { .. } => "unknown-state",
            UnknownBehavior { .. } => "unknown-behavior",
            WrongSourceState { .. } => "wrong-source-state",
            UnknownTransitionFn(_) => "unknown-transition-fn",
            TransitionFailed { .. } => "transition-failed",
            NoActiveBehavior => "no-active-behavior",
            BehaviorFeatureDisabled { .. } => "behavior-feature-disabled",
            StepLimitExceeded { .. } => "step-limit-exceeded",
            GuardTypeError { .. } => "guard-type-error",
            UnknownFeature { .. } => "unknown-feature",
            FeatureDisabled(_) => "feature-disabled",
            UnboundFeature(_) => "unbound-feature",
            HandlerFailed { .. } => "handler-failed",
        }
    }

    /// Detail text of the `ERROR` record; starts with the offending name.
    pub fn detail(&self) -> String {
        use RuntimeError::*;
        match self {
            Coherence(e) => format!(
                "{} enable=[{}] disable=[{}]",
                e.feature, e.enable_chain, e.disable_chain
            ),
            BehaviorFeatureDisabled { behavior, feature } => format!("{feature} in {behavior}"),
            FeatureDisabled(f) | UnboundFeature(f) => f.clone(),
            other => other.to_string(),
        }
    }

    pub fn record(&self) -> Record {
        Record::Error {
            code: self.code(),
            detail: self.detail(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IgnoreReason {
    /// The creation clause already fired.
    Creation,
    /// The lifecycle has no clause for the event.
    NoClause,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdaptationOutcome {
    StateChanged { gaprog: String, behavior: Option<String> },
    Metamorphosed { program: String, configuration: String },
    Ignored(IgnoreReason),
    Failed(RuntimeError),
}

impl AdaptationOutcome {
    pub fn error(&self) -> Option<&RuntimeError> {
        match self {
            AdaptationOutcome::Failed(e) => Some(e),
            _ => None,
        }
    }
}

fn closure_records(closure: &Closure) -> impl Iterator<Item = Record> + '_ {
    closure.processing_order().iter().map(|(mode, f)| match mode {
        Mode::Enable => Record::Enable(f.to_string()),
        Mode::Disable => Record::Disable(f.to_string()),
    })
}

fn eval_guard(cond: &Condition, out: &Value) -> Result<bool, RuntimeError> {
    Ok(match cond {
        Condition::Compare(op, lit) => compare(*op, lit, out)?,
        Condition::Not(inner) => !eval_guard(inner, out)?,
        Condition::And(terms) => {
            for t in terms {
                if !eval_guard(t, out)? {
                    return Ok(false);
                }
            }
            true
        }
        Condition::Or(terms) => {
            for t in terms {
                if eval_guard(t, out)? {
                    return Ok(true);
                }
            }
            false
        }
    })
}

fn compare(op: RelOp, lit: &Literal, out: &Value) -> Result<bool, RuntimeError> {
    let ordering = match (out, lit) {
        (Value::Int(a), Literal::Int(b)) => a.cmp(b),
        _ if op.is_ordering() => {
            return Err(RuntimeError::GuardTypeError {
                op: op.symbol(),
                literal: crate::dsl::format_literal(lit),
                output: out.to_string(),
            })
        }
        (Value::Str(a), Literal::Str(b)) => a.as_str().cmp(b.as_str()),
        // Values of different types are never equal.
        _ => return Ok(op == RelOp::Ne),
    };
    Ok(match op {
        RelOp::Eq => ordering.is_eq(),
        RelOp::Ne => ordering.is_ne(),
        RelOp::Lt => ordering.is_lt(),
        RelOp::Le => ordering.is_le(),
        RelOp::Gt => ordering.is_gt(),
        RelOp::Ge => ordering.is_ge(),
    })
}

/// Executes lifecycle operations for instances of one linked model.
///
/// The engine itself holds only the per-feature execution counters that
/// drive scripted stub outputs.
pub struct Engine<'m> {
    model: &'m LinkedModel,
    registries: &'m Registries,
    calls: HashMap<String, usize>,
    pub max_steps: usize,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m LinkedModel, registries: &'m Registries) -> Self {
        Engine {
            model,
            registries,
            calls: HashMap::new(),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn model(&self) -> &'m LinkedModel {
        self.model
    }

    fn configuration(&self, name: &str) -> Result<&'m SoftwareConfiguration, RuntimeError> {
        self.model
            .configuration(name)
            .ok_or_else(|| RuntimeError::UnknownConfiguration(name.to_string()))
    }

    fn lifecycle(&self, instance: &SoftwareInstance) -> Result<&'m GaProc, RuntimeError> {
        let owner = self.configuration(instance.lifecycle_configuration.as_str())?;
        owner
            .gaproc(instance.lifecycle.as_str())
            .ok_or_else(|| RuntimeError::UnknownGaProc {
                configuration: owner.name.to_string(),
                gaproc: instance.lifecycle.to_string(),
            })
    }

    fn resolve_behavior(
        config: &SoftwareConfiguration,
        behavior: Option<&Ident>,
    ) -> Result<Option<Ident>, RuntimeError> {
        match behavior {
            None => Ok(None),
            Some(b) if config.behavior(b.as_str()).is_some() => Ok(Some(b.clone())),
            Some(b) => Err(RuntimeError::UnknownBehavior {
                configuration: config.name.to_string(),
                behavior: b.to_string(),
            }),
        }
    }

    /// Create an instance with every feature disabled, then fire the
    /// lifecycle's creation clause.
    pub fn create_instance(
        &self,
        database: &str,
        configuration: &str,
        gaproc: &str,
        instance_id: &str,
        trace: &mut Trace,
    ) -> Result<SoftwareInstance, RuntimeError> {
        if self.model.database(database).is_none() {
            return Err(RuntimeError::UnknownDatabase(database.to_string()));
        }
        let config = self.configuration(configuration)?;
        if config.database != database {
            return Err(RuntimeError::DatabaseMismatch {
                configuration: configuration.to_string(),
                expected: config.database.to_string(),
                given: database.to_string(),
            });
        }
        let proc = config.gaproc(gaproc).ok_or_else(|| RuntimeError::UnknownGaProc {
            configuration: configuration.to_string(),
            gaproc: gaproc.to_string(),
        })?;
        let clause = proc
            .creation_clause()
            .ok_or_else(|| RuntimeError::MissingCreationClause(gaproc.to_string()))?;
        let initial = config
            .gaprog(clause.target.as_str())
            .ok_or_else(|| RuntimeError::UnknownState {
                configuration: configuration.to_string(),
                state: clause.target.to_string(),
            })?;
        let behavior = Self::resolve_behavior(config, clause.behavior.as_ref())?;

        let blank = FeatureState::all_disabled(&config.features);
        debug_assert!(blank.iter().all(|(_, s)| s == Status::Disabled));
        let (feature_state, closure) = apply_gaprog(&blank, initial, &config.relations)?;

        trace.push(Record::Create {
            instance: instance_id.to_string(),
            configuration: config.name.to_string(),
            gaproc: proc.id.to_string(),
        });
        trace.push(Record::State {
            gaprog: initial.id.to_string(),
            behavior: behavior.as_ref().map(Ident::to_string),
        });
        trace.extend(closure_records(&closure));

        Ok(SoftwareInstance {
            id: Ident::new(instance_id),
            configuration: config.name.clone(),
            lifecycle: proc.id.clone(),
            lifecycle_configuration: config.name.clone(),
            feature_state,
            current_state: Some(initial.id.clone()),
            active_behavior: behavior,
            store: Store::new(),
        })
    }

    /// Route `event` through the instance's lifecycle.
    pub fn dispatch_event(&self, instance: &mut SoftwareInstance, event: &str, trace: &mut Trace) -> AdaptationOutcome {
        trace.push(Record::Event(event.to_string()));
        if event == CREATION_EVENT {
            trace.push(Record::Warn {
                code: "creation-ignored",
                detail: event.to_string(),
            });
            return AdaptationOutcome::Ignored(IgnoreReason::Creation);
        }
        let (proc, config) = match self
            .lifecycle(instance)
            .and_then(|p| Ok((p, self.configuration(instance.configuration.as_str())?)))
        {
            Ok(x) => x,
            Err(e) => return AdaptationOutcome::Failed(e),
        };
        let Some(clause) = proc.clause_for(event) else {
            trace.push(Record::Warn {
                code: "no-clause",
                detail: event.to_string(),
            });
            return AdaptationOutcome::Ignored(IgnoreReason::NoClause);
        };
        if !config.expects(event) {
            trace.push(Record::Warn {
                code: "unexpected-event",
                detail: event.to_string(),
            });
        }

        let target = clause.target.as_str();
        if let Some(gaprog) = config.gaprog(target) {
            let applied = apply_gaprog(&instance.feature_state, gaprog, &config.relations)
                .map_err(RuntimeError::from)
                .and_then(|r| Ok((r, Self::resolve_behavior(config, clause.behavior.as_ref())?)));
            match applied {
                Err(e) => AdaptationOutcome::Failed(e),
                Ok(((state, closure), behavior)) => {
                    trace.push(Record::State {
                        gaprog: gaprog.id.to_string(),
                        behavior: behavior.as_ref().map(Ident::to_string),
                    });
                    trace.extend(closure_records(&closure));
                    instance.feature_state = state;
                    instance.current_state = Some(gaprog.id.clone());
                    instance.active_behavior = behavior.clone();
                    AdaptationOutcome::StateChanged {
                        gaprog: gaprog.id.to_string(),
                        behavior: behavior.map(|b| b.to_string()),
                    }
                }
            }
        } else if config.metamorphosis(target).is_some() {
            self.metamorphose(instance, target, clause.behavior.as_ref(), trace)
        } else {
            AdaptationOutcome::Failed(RuntimeError::TargetNotInConfiguration {
                target: target.to_string(),
                configuration: config.name.to_string(),
            })
        }
    }

    /// Move the instance into the program's target configuration. Identity
    /// and lifecycle carry over; features are rebuilt from all-disabled and
    /// the store is whatever the transition function writes.
    pub fn metamorphose(
        &self,
        instance: &mut SoftwareInstance,
        program: &str,
        behavior: Option<&Ident>,
        trace: &mut Trace,
    ) -> AdaptationOutcome {
        match self.prepare_metamorphosis(instance, program, behavior) {
            Err(e) => AdaptationOutcome::Failed(e),
            Ok((next, closure)) => {
                trace.push(Record::Metamorphose {
                    program: program.to_string(),
                    configuration: next.configuration.to_string(),
                });
                trace.push(Record::State {
                    gaprog: next.current_state.as_ref().map(Ident::to_string).unwrap_or_default(),
                    behavior: next.active_behavior.as_ref().map(Ident::to_string),
                });
                trace.extend(closure_records(&closure));
                let outcome = AdaptationOutcome::Metamorphosed {
                    program: program.to_string(),
                    configuration: next.configuration.to_string(),
                };
                *instance = next;
                outcome
            }
        }
    }

    fn prepare_metamorphosis(
        &self,
        instance: &SoftwareInstance,
        program: &str,
        behavior: Option<&Ident>,
    ) -> Result<(SoftwareInstance, Closure), RuntimeError> {
        let source = self.configuration(instance.configuration.as_str())?;
        let m = source
            .metamorphosis(program)
            .ok_or_else(|| RuntimeError::TargetNotInConfiguration {
                target: program.to_string(),
                configuration: source.name.to_string(),
            })?;
        if instance.current_state.as_ref() != Some(&m.from_state) {
            return Err(RuntimeError::WrongSourceState {
                program: program.to_string(),
                expected: m.from_state.to_string(),
                actual: instance
                    .current_state
                    .as_ref()
                    .map(Ident::to_string)
                    .unwrap_or_else(|| "-".into()),
            });
        }
        let target = self.configuration(m.target_configuration.as_str())?;
        let to_state = target
            .gaprog(m.to_state.as_str())
            .ok_or_else(|| RuntimeError::UnknownState {
                configuration: target.name.to_string(),
                state: m.to_state.to_string(),
            })?;
        let transition = self
            .registries
            .transitions
            .get(m.transition_fn.as_str())
            .ok_or_else(|| RuntimeError::UnknownTransitionFn(m.transition_fn.to_string()))?;
        let active_behavior = Self::resolve_behavior(target, behavior)?;

        let blank = FeatureState::all_disabled(&target.features);
        let (feature_state, closure) = apply_gaprog(&blank, to_state, &target.relations)?;
        let mut store = Store::new();
        transition(&instance.store, &mut store).map_err(|message| RuntimeError::TransitionFailed {
            function: m.transition_fn.to_string(),
            message,
        })?;

        let next = SoftwareInstance {
            id: instance.id.clone(),
            configuration: target.name.clone(),
            lifecycle: instance.lifecycle.clone(),
            lifecycle_configuration: instance.lifecycle_configuration.clone(),
            feature_state,
            current_state: Some(to_state.id.clone()),
            active_behavior,
            store,
        };
        Ok((next, closure))
    }

    /// Run the active behavior: every feature it mentions must be enabled,
    /// then walk the graph from its start feature, taking the first
    /// outgoing edge whose guards all hold for the last output.
    pub fn execute_behavior(&mut self, instance: &mut SoftwareInstance, trace: &mut Trace) -> Result<(), RuntimeError> {
        let behavior_id = instance.active_behavior.clone().ok_or(RuntimeError::NoActiveBehavior)?;
        let config = self.configuration(instance.configuration.as_str())?;
        let behavior = config
            .behavior(behavior_id.as_str())
            .ok_or_else(|| RuntimeError::UnknownBehavior {
                configuration: config.name.to_string(),
                behavior: behavior_id.to_string(),
            })?;
        for f in behavior.features() {
            if !instance.feature_state.is_enabled(f.as_str()) {
                return Err(RuntimeError::BehaviorFeatureDisabled {
                    behavior: behavior_id.to_string(),
                    feature: f.to_string(),
                });
            }
        }
        let Some(start) = behavior.start() else {
            return Ok(());
        };

        let mut current = start;
        let mut out = self.exec(instance, current.as_str(), None, trace)?;
        let mut steps = 1;
        loop {
            let mut next = None;
            for edge in behavior.edges.iter().filter(|e| e.from == *current) {
                let mut pass = true;
                for g in &edge.guards {
                    if !eval_guard(g, &out)? {
                        pass = false;
                        break;
                    }
                }
                if pass {
                    next = Some(&edge.to);
                    break;
                }
            }
            let Some(to) = next else {
                return Ok(());
            };
            if steps >= self.max_steps {
                return Err(RuntimeError::StepLimitExceeded {
                    behavior: behavior_id.to_string(),
                    limit: self.max_steps,
                });
            }
            out = self.exec(instance, to.as_str(), None, trace)?;
            steps += 1;
            current = to;
        }
    }

    /// Execute one enabled feature of the instance's configuration.
    pub fn invoke_feature(
        &mut self,
        instance: &mut SoftwareInstance,
        feature: &str,
        input: Option<Value>,
        trace: &mut Trace,
    ) -> Result<Value, RuntimeError> {
        if instance.feature_state.status(feature).is_none() {
            return Err(RuntimeError::UnknownFeature {
                feature: feature.to_string(),
                configuration: instance.configuration.to_string(),
            });
        }
        self.exec(instance, feature, input, trace)
    }

    fn exec(
        &mut self,
        instance: &mut SoftwareInstance,
        feature: &str,
        input: Option<Value>,
        trace: &mut Trace,
    ) -> Result<Value, RuntimeError> {
        if !instance.feature_state.is_enabled(feature) {
            return Err(RuntimeError::FeatureDisabled(feature.to_string()));
        }
        let features = &self.registries.features;
        let call = self.calls.get(feature).copied().unwrap_or(0);
        let output = if let Some(v) = features.stubs.get(feature, call) {
            v.clone()
        } else if let Some(handler) = features.handler(feature) {
            handler(&mut instance.store, input.as_ref()).map_err(|message| RuntimeError::HandlerFailed {
                feature: feature.to_string(),
                message,
            })?
        } else if features.stub_mode == StubMode::Constant {
            Value::str("ok")
        } else {
            return Err(RuntimeError::UnboundFeature(feature.to_string()));
        };
        *self.calls.entry(feature.to_string()).or_default() += 1;
        trace.push(Record::Exec {
            feature: feature.to_string(),
            input,
            output: output.clone(),
        });
        Ok(output)
    }
}
