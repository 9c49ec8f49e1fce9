//! Domain types shared by the parser, the coherence engine and the runtime.
//!
//! Everything here is a plain value. Identifiers remember where they were
//! written so that diagnostics can point at them, but equality, ordering and
//! hashing only look at the name: two models that differ only in layout are
//! the same model.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use indexmap::IndexMap;

/// Name of the event that fires a lifecycle's creation clause.
pub const CREATION_EVENT: &str = "creation";

/// 1-based line/column position. Line 0 means "not from source".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A name for a feature, event, program, behavior or configuration.
#[derive(Clone, Debug)]
pub struct Ident {
    name: String,
    loc: Loc,
}

pub type FeatureId = Ident;
pub type EventId = Ident;

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            loc: Loc::default(),
        }
    }

    pub fn at(name: impl Into<String>, loc: Loc) -> Self {
        Ident { name: name.into(), loc }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }

    pub fn loc(&self) -> Loc {
        self.loc
    }

    /// Letters, digits and underscores, starting with a letter. Hyphens may
    /// join two such runs (`Q-Beh0`) but never lead or trail.
    pub fn is_valid(name: &str) -> bool {
        let mut segments = name.split('-');
        let first = match segments.next() {
            Some(s) => s,
            None => return false,
        };
        let word = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        first.starts_with(|c: char| c.is_ascii_alphabetic()) && word(first) && segments.all(word)
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for Ident {}

impl PartialOrd for Ident {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ident {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}

impl Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.name
    }
}

impl PartialEq<str> for Ident {
    fn eq(&self, other: &str) -> bool {
        self.name == other
    }
}

impl PartialEq<&str> for Ident {
    fn eq(&self, other: &&str) -> bool {
        self.name == *other
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    State,
    Data,
    Method,
    Adapter,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::State,
        FeatureKind::Data,
        FeatureKind::Method,
        FeatureKind::Adapter,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            FeatureKind::State => "state",
            FeatureKind::Data => "data",
            FeatureKind::Method => "method",
            FeatureKind::Adapter => "adapter",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        FeatureKind::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureDecl {
    pub id: FeatureId,
    pub kind: FeatureKind,
}

/// The genome: every feature a business domain can offer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoftwareDatabase {
    pub name: Ident,
    pub features: Vec<FeatureDecl>,
}

impl SoftwareDatabase {
    pub fn feature(&self, name: &str) -> Option<&FeatureDecl> {
        self.features.iter().find(|f| f.id == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Enable,
    Disable,
}

impl Mode {
    pub fn keyword(self) -> &'static str {
        match self {
            Mode::Enable => "Enable",
            Mode::Disable => "Disable",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verb {
    Implies,
    Excludes,
}

impl Verb {
    pub fn keyword(self) -> &'static str {
        match self {
            Verb::Implies => "Implies",
            Verb::Excludes => "Excludes",
        }
    }
}

/// `<trigger_mode>(trigger) <verb> <target_mode>(target)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    pub trigger_mode: Mode,
    pub trigger: FeatureId,
    pub verb: Verb,
    pub target_mode: Mode,
    pub target: FeatureId,
}

impl Relation {
    pub fn new(trigger_mode: Mode, trigger: &str, verb: Verb, target_mode: Mode, target: &str) -> Self {
        Relation {
            trigger_mode,
            trigger: Ident::new(trigger),
            verb,
            target_mode,
            target: Ident::new(target),
        }
    }

    /// The list the target lands in when the trigger fires.
    ///
    /// Implies keeps the trigger's mode, Excludes flips it: enabling an
    /// excluder disables the target, disabling one enables it.
    pub fn effect(&self) -> Mode {
        match (self.trigger_mode, self.verb) {
            (m, Verb::Implies) => m,
            (Mode::Enable, Verb::Excludes) => Mode::Disable,
            (Mode::Disable, Verb::Excludes) => Mode::Enable,
        }
    }

    pub fn is_mixed_mode(&self) -> bool {
        self.trigger_mode != self.target_mode
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}) {} {}({})",
            self.trigger_mode,
            self.trigger,
            self.verb.keyword(),
            self.target_mode,
            self.target
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationSet {
    pub relations: Vec<Relation>,
}

impl RelationSet {
    pub fn new(relations: Vec<Relation>) -> Self {
        RelationSet { relations }
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Relation> {
        self.relations.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaClause {
    pub mode: Mode,
    pub features: Vec<FeatureId>,
}

/// A named Enable/Disable delta defining one adaptation state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaProg {
    pub id: Ident,
    pub clauses: Vec<GaClause>,
}

impl GaProg {
    pub fn new(id: &str) -> Self {
        GaProg {
            id: Ident::new(id),
            clauses: Vec::new(),
        }
    }

    pub fn enable(mut self, features: &[&str]) -> Self {
        self.clauses.push(GaClause {
            mode: Mode::Enable,
            features: features.iter().map(|f| Ident::new(*f)).collect(),
        });
        self
    }

    pub fn disable(mut self, features: &[&str]) -> Self {
        self.clauses.push(GaClause {
            mode: Mode::Disable,
            features: features.iter().map(|f| Ident::new(*f)).collect(),
        });
        self
    }

    pub fn clauses_of(&self, mode: Mode) -> impl Iterator<Item = &GaClause> {
        self.clauses.iter().filter(move |c| c.mode == mode)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcClause {
    pub event: EventId,
    pub target: Ident,
    pub behavior: Option<Ident>,
}

/// The lifecycle of an instance: which adaptation each event triggers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaProc {
    pub id: Ident,
    pub clauses: Vec<ProcClause>,
}

impl GaProc {
    pub fn clause_for(&self, event: &str) -> Option<&ProcClause> {
        self.clauses.iter().find(|c| c.event == event)
    }

    pub fn creation_clause(&self) -> Option<&ProcClause> {
        self.clause_for(CREATION_EVENT)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Int(i64),
    Str(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub const ALL: [RelOp; 6] = [RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, RelOp::Eq | RelOp::Ne)
    }
}

/// A guard over `out`, the output of the last executed feature.
///
/// `And`/`Or` hold at least two operands; the parser flattens chains of the
/// same connective and keeps explicit parentheses as nesting.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Compare(RelOp, Literal),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: FeatureId,
    pub guards: Vec<Condition>,
    pub to: FeatureId,
}

/// A guarded graph over a state's enabled features.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Behavior {
    pub id: Ident,
    pub edges: Vec<Edge>,
}

impl Behavior {
    pub fn start(&self) -> Option<&FeatureId> {
        self.edges.first().map(|e| &e.from)
    }

    /// Every feature mentioned by the edges, first mention first.
    pub fn features(&self) -> Vec<&FeatureId> {
        let mut seen: Vec<&FeatureId> = Vec::new();
        for e in &self.edges {
            for f in [&e.from, &e.to] {
                if !seen.contains(&f) {
                    seen.push(f);
                }
            }
        }
        seen
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    Function,
    Procedure,
}

impl TransitionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TransitionKind::Function => "function",
            TransitionKind::Procedure => "procedure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetamorphosisProgram {
    pub id: Ident,
    pub target_configuration: Ident,
    pub from_state: Ident,
    pub to_state: Ident,
    pub transition_kind: TransitionKind,
    pub transition_fn: Ident,
}

/// The genotype: a feature subset of a database plus its adaptation
/// machinery.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoftwareConfiguration {
    pub name: Ident,
    pub database: Ident,
    pub features: Vec<FeatureId>,
    pub expected_events: Vec<EventId>,
    pub relations: RelationSet,
    pub gaprogs: Vec<GaProg>,
    pub behaviors: Vec<Behavior>,
    pub gaprocs: Vec<GaProc>,
    pub metamorphoses: Vec<MetamorphosisProgram>,
}

impl SoftwareConfiguration {
    pub fn new(name: &str, database: &str) -> Self {
        SoftwareConfiguration {
            name: Ident::new(name),
            database: Ident::new(database),
            features: Vec::new(),
            expected_events: Vec::new(),
            relations: RelationSet::default(),
            gaprogs: Vec::new(),
            behaviors: Vec::new(),
            gaprocs: Vec::new(),
            metamorphoses: Vec::new(),
        }
    }

    pub fn has_feature(&self, name: &str) -> bool {
        self.features.iter().any(|f| f == name)
    }

    pub fn gaprog(&self, id: &str) -> Option<&GaProg> {
        self.gaprogs.iter().find(|p| p.id == id)
    }

    pub fn behavior(&self, id: &str) -> Option<&Behavior> {
        self.behaviors.iter().find(|b| b.id == id)
    }

    pub fn gaproc(&self, id: &str) -> Option<&GaProc> {
        self.gaprocs.iter().find(|p| p.id == id)
    }

    pub fn metamorphosis(&self, id: &str) -> Option<&MetamorphosisProgram> {
        self.metamorphoses.iter().find(|m| m.id == id)
    }

    pub fn expects(&self, event: &str) -> bool {
        self.expected_events.iter().any(|e| e == event)
    }
}

/// Runtime value held in an instance store or produced by a feature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Str(String),
    Seq(Vec<Value>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }
}

impl From<Literal> for Value {
    fn from(lit: Literal) -> Self {
        match lit {
            Literal::Int(i) => Value::Int(i),
            Literal::Str(s) => Value::Str(s),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => f.write_str(s),
            Value::Seq(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

pub type Store = BTreeMap<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Enabled,
    Disabled,
}

/// Total enabled/disabled map over a configuration's features, in
/// configuration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureState {
    statuses: IndexMap<String, Status>,
}

impl FeatureState {
    pub fn all_disabled<'a>(features: impl IntoIterator<Item = &'a FeatureId>) -> Self {
        FeatureState {
            statuses: features
                .into_iter()
                .map(|f| (f.as_str().to_string(), Status::Disabled))
                .collect(),
        }
    }

    pub fn status(&self, feature: &str) -> Option<Status> {
        self.statuses.get(feature).copied()
    }

    pub fn is_enabled(&self, feature: &str) -> bool {
        self.status(feature) == Some(Status::Enabled)
    }

    /// Returns false when the feature is not part of the map.
    pub fn set(&mut self, feature: &str, status: Status) -> bool {
        match self.statuses.get_mut(feature) {
            Some(s) => {
                *s = status;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statuses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Status)> {
        self.statuses.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn enabled(&self) -> impl Iterator<Item = &str> {
        self.iter().filter(|(_, s)| *s == Status::Enabled).map(|(k, _)| k)
    }

    pub fn is_total_over(&self, features: &[FeatureId]) -> bool {
        features.len() == self.statuses.len() && features.iter().all(|f| self.statuses.contains_key(f.as_str()))
    }
}

/// The phenotype: a running entity of some configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoftwareInstance {
    pub id: Ident,
    pub configuration: Ident,
    pub lifecycle: Ident,
    /// Configuration that declares the lifecycle GAProc; unchanged by
    /// metamorphosis.
    pub lifecycle_configuration: Ident,
    pub feature_state: FeatureState,
    pub current_state: Option<Ident>,
    pub active_behavior: Option<Ident>,
    pub store: Store,
}
