use std::fmt;

use crate::model::{FeatureState, Store, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Create {
        instance: String,
        configuration: String,
        gaproc: String,
    },
    State {
        gaprog: String,
        behavior: Option<String>,
    },
    Enable(String),
    Disable(String),
    Event(String),
    Warn {
        code: &'static str,
        detail: String,
    },
    Metamorphose {
        program: String,
        configuration: String,
    },
    Exec {
        feature: String,
        input: Option<Value>,
        output: Value,
    },
    Error {
        code: &'static str,
        detail: String,
    },
    Snapshot {
        enabled: Vec<String>,
        store: Vec<(String, Value)>,
    },
}

impl Record {
    pub fn snapshot(state: &FeatureState, store: &Store) -> Self {
        let mut enabled: Vec<String> = state.enabled().map(str::to_string).collect();
        enabled.sort();
        // Store is a BTreeMap, already sorted by key.
        let store = store.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        Record::Snapshot { enabled, store }
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Record::Create {
                instance,
                configuration,
                gaproc,
            } => write!(f, "CREATE {instance} CONFIG {configuration} PROC {gaproc}"),
            Record::State { gaprog, behavior } => {
                write!(f, "STATE {gaprog} BEHAVIOR {}", behavior.as_deref().unwrap_or("-"))
            }
            Record::Enable(feature) => write!(f, "ENABLE {feature}"),
            Record::Disable(feature) => write!(f, "DISABLE {feature}"),
            Record::Event(event) => write!(f, "EVENT {event}"),
            Record::Warn { code, detail } => write!(f, "WARN {code} {detail}"),
            Record::Metamorphose { program, configuration } => {
                write!(f, "METAMORPHOSE {program} TO {configuration}")
            }
            Record::Exec { feature, input, output } => {
                write!(f, "EXEC {feature} IN ")?;
                match input {
                    Some(v) => write!(f, "{v}")?,
                    None => f.write_str("-")?,
                }
                write!(f, " OUT {output}")
            }
            Record::Error { code, detail } => write!(f, "ERROR {code} {detail}"),
            Record::Snapshot { enabled, store } => {
                write!(f, "SNAPSHOT enabled=[{}] store={{", enabled.join(","))?;
                for (i, (k, v)) in store.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Append-only record log.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<Record>,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = Record>) {
        self.records.extend(records);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One record per line, `\n` terminated.
    pub fn render(&self) -> String {
        self.render_from(0)
    }

    pub fn render_from(&self, start: usize) -> String {
        let mut out = String::new();
        for r in &self.records[start.min(self.records.len())..] {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}
