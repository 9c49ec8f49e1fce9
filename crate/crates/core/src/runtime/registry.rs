//! Host bindings for features and metamorphosis transition functions.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::model::{Store, Value};

/// Store key the built-in list operations work on.
pub const ITEMS_KEY: &str = "items";

pub type FeatureHandler = Arc<dyn Fn(&mut Store, Option<&Value>) -> Result<Value, String> + Send + Sync>;
pub type TransitionFn = Arc<dyn Fn(&Store, &mut Store) -> Result<(), String> + Send + Sync>;

/// Scripted outputs for features, one per execution, the last one
/// repeating.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StubOutputs {
    outputs: HashMap<String, Vec<Value>>,
}

impl StubOutputs {
    pub fn new() -> Self {
        StubOutputs::default()
    }

    pub fn set(&mut self, feature: &str, outputs: Vec<Value>) {
        self.outputs.insert(feature.to_string(), outputs);
    }

    pub fn get(&self, feature: &str, call: usize) -> Option<&Value> {
        let outs = self.outputs.get(feature)?;
        outs.get(call).or_else(|| outs.last())
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// `<feature> -> <literal>[, <literal>...]` per line; blank lines and
    /// `#` comments are skipped. Literals are integers or double-quoted
    /// strings.
    pub fn parse(text: &str) -> Result<Self, StubParseError> {
        let mut stubs = StubOutputs::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| StubParseError {
                line: n + 1,
                message: message.to_string(),
            };
            let (feature, rest) = line
                .split_once("->")
                .ok_or_else(|| err("expected `<feature> -> <literal>`"))?;
            let feature = feature.trim();
            if !crate::model::Ident::is_valid(feature) {
                return Err(err("invalid feature name"));
            }
            let values = parse_literal_list(rest).map_err(|m| err(&m))?;
            if values.is_empty() {
                return Err(err("expected at least one output"));
            }
            stubs.set(feature, values);
        }
        Ok(stubs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct StubParseError {
    pub line: usize,
    pub message: String,
}

/// Parse a single integer or `"string"` literal occupying all of `text`.
pub fn parse_value(text: &str) -> Result<Value, String> {
    let values = parse_literal_list(text)?;
    match <[Value; 1]>::try_from(values) {
        Ok([v]) => Ok(v),
        Err(_) => Err(format!("expected exactly one literal, found `{}`", text.trim())),
    }
}

fn parse_literal_list(text: &str) -> Result<Vec<Value>, String> {
    let mut chars = text.chars().peekable();
    let mut values = Vec::new();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.peek() {
            None if values.is_empty() => return Ok(values),
            None => return Err("trailing comma".into()),
            Some('"') => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err("invalid escape".into()),
                        },
                        Some(c) => s.push(c),
                    }
                }
                values.push(Value::Str(s));
            }
            Some(_) => {
                let mut tok = String::new();
                while let Some(c) = chars.peek().copied().filter(|c| *c != ',' && !c.is_whitespace()) {
                    tok.push(c);
                    chars.next();
                }
                let i = tok.parse::<i64>().map_err(|_| format!("invalid literal `{tok}`"))?;
                values.push(Value::Int(i));
            }
        }
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None => return Ok(values),
            Some(',') => continue,
            Some(c) => return Err(format!("unexpected `{c}`")),
        }
    }
}

/// How features without a binding behave.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum StubMode {
    /// Executing an unbound feature is an error.
    #[default]
    Off,
    /// Unbound features answer the constant `"ok"`.
    Constant,
}

/// Feature bindings. Lookup order for an execution: scripted stub output,
/// then a registered handler, then the stub-mode default.
#[derive(Clone, Default)]
pub struct FeatureRegistry {
    handlers: HashMap<String, FeatureHandler>,
    pub stub_mode: StubMode,
    pub stubs: StubOutputs,
}

impl fmt::Debug for FeatureRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.handlers.keys().collect();
        names.sort();
        f.debug_struct("FeatureRegistry")
            .field("handlers", &names)
            .field("stub_mode", &self.stub_mode)
            .field("stubs", &self.stubs)
            .finish()
    }
}

impl FeatureRegistry {
    pub fn new() -> Self {
        FeatureRegistry::default()
    }

    /// Registry with the built-in list operations bound.
    pub fn with_list_ops() -> Self {
        let mut r = FeatureRegistry::new();
        list_ops::register(&mut r);
        r
    }

    pub fn stub_unbound(mut self) -> Self {
        self.stub_mode = StubMode::Constant;
        self
    }

    pub fn with_stubs(mut self, stubs: StubOutputs) -> Self {
        self.stubs = stubs;
        self
    }

    pub fn bind<F>(&mut self, feature: &str, handler: F)
    where
        F: Fn(&mut Store, Option<&Value>) -> Result<Value, String> + Send + Sync + 'static,
    {
        self.handlers.insert(feature.to_string(), Arc::new(handler));
    }

    pub fn handler(&self, feature: &str) -> Option<&FeatureHandler> {
        self.handlers.get(feature)
    }

    pub fn is_bound(&self, feature: &str) -> bool {
        self.handlers.contains_key(feature)
    }
}

#[derive(Clone, Default)]
pub struct TransitionRegistry {
    functions: HashMap<String, TransitionFn>,
}

impl fmt::Debug for TransitionRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.functions.keys().collect();
        names.sort();
        f.debug_struct("TransitionRegistry").field("functions", &names).finish()
    }
}

impl TransitionRegistry {
    pub fn empty() -> Self {
        TransitionRegistry::default()
    }

    /// Registry holding `StQueueToDyQueueTrans` and `CopyAll`.
    pub fn with_builtins() -> Self {
        let mut r = TransitionRegistry::empty();
        r.bind("StQueueToDyQueueTrans", queue_transfer);
        r.bind("CopyAll", |src: &Store, dst: &mut Store| {
            dst.extend(src.iter().map(|(k, v)| (k.clone(), v.clone())));
            Ok(())
        });
        r
    }

    pub fn bind<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&Store, &mut Store) -> Result<(), String> + Send + Sync + 'static,
    {
        self.functions.insert(name.to_string(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&TransitionFn> {
        self.functions.get(name)
    }
}

/// Drain the source queue from the front while it is not empty, appending
/// each element to the end of the target queue. The source store is only
/// read; the drain happens on a copy.
fn queue_transfer(src: &Store, dst: &mut Store) -> Result<(), String> {
    let mut queue: VecDeque<Value> = match src.get(ITEMS_KEY) {
        None => VecDeque::new(),
        Some(Value::Seq(items)) => items.iter().cloned().collect(),
        Some(other) => return Err(format!("source `{ITEMS_KEY}` is not a sequence: {other}")),
    };
    let target = dst
        .entry(ITEMS_KEY.to_string())
        .or_insert_with(|| Value::Seq(Vec::new()));
    let Value::Seq(target) = target else {
        return Err(format!("target `{ITEMS_KEY}` is not a sequence"));
    };
    while let Some(v) = queue.pop_front() {
        target.push(v);
    }
    Ok(())
}

/// Default registries: list operations, stub mode for everything else, and
/// the built-in transition functions.
#[derive(Clone, Debug)]
pub struct Registries {
    pub features: FeatureRegistry,
    pub transitions: TransitionRegistry,
}

impl Default for Registries {
    fn default() -> Self {
        Registries {
            features: FeatureRegistry::with_list_ops().stub_unbound(),
            transitions: TransitionRegistry::with_builtins(),
        }
    }
}

/// Built-in handlers over the `items` sequence.
///
/// Insertions answer `"ok"`, removals answer the removed value, `Empty`
/// answers `1` for an empty (or absent) sequence and `0` otherwise.
/// `InsertAt` inserts its input at the index held in store key `cursor`
/// (default 0); `GetAt` reads the element at its integer input.
pub mod list_ops {
    use super::*;

    pub const NAMES: [&str; 7] = [
        "PutAtEnd",
        "GetFromBeg",
        "PutAtBeg",
        "GetFromEnd",
        "Empty",
        "InsertAt",
        "GetAt",
    ];

    fn items(store: &mut Store) -> Result<&mut Vec<Value>, String> {
        match store
            .entry(ITEMS_KEY.to_string())
            .or_insert_with(|| Value::Seq(Vec::new()))
        {
            Value::Seq(items) => Ok(items),
            other => Err(format!("`{ITEMS_KEY}` is not a sequence: {other}")),
        }
    }

    fn need(input: Option<&Value>) -> Result<Value, String> {
        input.cloned().ok_or_else(|| "missing input".to_string())
    }

    fn index(v: &Value, len: usize, inclusive: bool) -> Result<usize, String> {
        match v {
            Value::Int(i) if *i >= 0 && ((*i as usize) < len || (inclusive && *i as usize == len)) => Ok(*i as usize),
            other => Err(format!("index {other} out of range for length {len}")),
        }
    }

    pub fn register(r: &mut FeatureRegistry) {
        r.bind("PutAtEnd", |s, input| {
            let v = need(input)?;
            items(s)?.push(v);
            Ok(Value::str("ok"))
        });
        r.bind("PutAtBeg", |s, input| {
            let v = need(input)?;
            items(s)?.insert(0, v);
            Ok(Value::str("ok"))
        });
        r.bind("GetFromBeg", |s, _| {
            let items = items(s)?;
            if items.is_empty() {
                return Err("empty list".into());
            }
            Ok(items.remove(0))
        });
        r.bind("GetFromEnd", |s, _| {
            items(s)?.pop().ok_or_else(|| "empty list".to_string())
        });
        r.bind("Empty", |s, _| {
            let empty = match s.get(ITEMS_KEY) {
                None => true,
                Some(Value::Seq(items)) => items.is_empty(),
                Some(other) => return Err(format!("`{ITEMS_KEY}` is not a sequence: {other}")),
            };
            Ok(Value::Int(empty as i64))
        });
        r.bind("InsertAt", |s, input| {
            let v = need(input)?;
            let cursor = s.get("cursor").cloned().unwrap_or(Value::Int(0));
            let items = items(s)?;
            let at = index(&cursor, items.len(), true)?;
            items.insert(at, v);
            Ok(Value::str("ok"))
        });
        r.bind("GetAt", |s, input| {
            let at = need(input)?;
            let items = items(s)?;
            let at = index(&at, items.len(), false)?;
            Ok(items[at].clone())
        });
    }
}
