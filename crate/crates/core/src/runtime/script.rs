//! Event scripts: one command per line, `#` starts a comment.
//!
//! ```text
//! create <instance> <database> <configuration> <gaproc>
//! event <name>
//! behave
//! invoke <feature> [<integer>|"<string>"]
//! store <key> = <integer>|"<string>"
//! dump
//! ```

use thiserror::Error;

use super::{parse_value, Engine, Record, Registries, RuntimeError, Trace};
use crate::link::LinkedModel;
use crate::model::{Ident, SoftwareInstance, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Create {
        instance: String,
        database: String,
        configuration: String,
        gaproc: String,
    },
    Event(String),
    Behave,
    Invoke {
        feature: String,
        input: Option<Value>,
    },
    Store {
        key: String,
        value: Value,
    },
    Dump,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

/// Drop a trailing `#` comment that is not inside a string literal.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn name(word: &str) -> Result<String, String> {
    if Ident::is_valid(word) {
        Ok(word.to_string())
    } else {
        Err(format!("invalid name `{word}`"))
    }
}

/// Parse a single command line. Blank and comment lines give `None`.
pub fn parse_command(line: &str) -> Result<Option<Command>, String> {
    let line = strip_comment(line).trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (verb, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim();
    let words: Vec<&str> = rest.split_whitespace().collect();
    let cmd = match verb {
        "create" => match words[..] {
            [instance, database, configuration, gaproc] => Command::Create {
                instance: name(instance)?,
                database: name(database)?,
                configuration: name(configuration)?,
                gaproc: name(gaproc)?,
            },
            _ => return Err("usage: create <instance> <database> <configuration> <gaproc>".into()),
        },
        "event" => match words[..] {
            [event] => Command::Event(name(event)?),
            _ => return Err("usage: event <name>".into()),
        },
        "behave" if words.is_empty() => Command::Behave,
        "dump" if words.is_empty() => Command::Dump,
        "invoke" => {
            let (feature, arg) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            if feature.is_empty() {
                return Err("usage: invoke <feature> [<literal>]".into());
            }
            let input = if arg.trim().is_empty() {
                None
            } else {
                Some(parse_value(arg)?)
            };
            Command::Invoke {
                feature: name(feature)?,
                input,
            }
        }
        "store" => {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| "usage: store <key> = <literal>".to_string())?;
            Command::Store {
                key: name(key.trim())?,
                value: parse_value(value)?,
            }
        }
        "behave" | "dump" => return Err(format!("`{verb}` takes no arguments")),
        other => return Err(format!("unknown command `{other}`")),
    };
    Ok(Some(cmd))
}

/// Parse a whole script, numbering commands by source line.
pub fn parse_script(text: &str) -> Result<Vec<(usize, Command)>, ScriptError> {
    let mut commands = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_command(line) {
            Ok(Some(cmd)) => commands.push((i + 1, cmd)),
            Ok(None) => {}
            Err(message) => return Err(ScriptError { line: i + 1, message }),
        }
    }
    Ok(commands)
}

/// A single scenario instance plus its trace.
pub struct Session<'m> {
    pub engine: Engine<'m>,
    pub instance: Option<SoftwareInstance>,
    pub trace: Trace,
}

impl<'m> Session<'m> {
    pub fn new(model: &'m LinkedModel, registries: &'m Registries) -> Self {
        Session {
            engine: Engine::new(model, registries),
            instance: None,
            trace: Trace::new(),
        }
    }

    /// Run one command. A failure is appended to the trace as an `ERROR`
    /// record and returned.
    pub fn execute(&mut self, command: &Command) -> Result<(), RuntimeError> {
        let result = self.apply(command);
        if let Err(e) = &result {
            self.trace.push(e.record());
        }
        result
    }

    pub fn snapshot(&mut self) -> Result<(), RuntimeError> {
        let inst = self.instance.as_ref().ok_or(RuntimeError::NoInstance)?;
        self.trace.push(Record::snapshot(&inst.feature_state, &inst.store));
        Ok(())
    }

    fn apply(&mut self, command: &Command) -> Result<(), RuntimeError> {
        match command {
            Command::Create {
                instance,
                database,
                configuration,
                gaproc,
            } => {
                if let Some(existing) = &self.instance {
                    return Err(RuntimeError::InstanceExists(existing.id.to_string()));
                }
                let inst = self
                    .engine
                    .create_instance(database, configuration, gaproc, instance, &mut self.trace)?;
                self.instance = Some(inst);
                Ok(())
            }
            Command::Event(event) => {
                let inst = self.instance.as_mut().ok_or(RuntimeError::NoInstance)?;
                match self.engine.dispatch_event(inst, event, &mut self.trace).error() {
                    Some(e) => Err(e.clone()),
                    None => Ok(()),
                }
            }
            Command::Behave => {
                let inst = self.instance.as_mut().ok_or(RuntimeError::NoInstance)?;
                self.engine.execute_behavior(inst, &mut self.trace)
            }
            Command::Invoke { feature, input } => {
                let inst = self.instance.as_mut().ok_or(RuntimeError::NoInstance)?;
                self.engine
                    .invoke_feature(inst, feature, input.clone(), &mut self.trace)
                    .map(drop)
            }
            Command::Store { key, value } => {
                let inst = self.instance.as_mut().ok_or(RuntimeError::NoInstance)?;
                inst.store.insert(key.clone(), value.clone());
                Ok(())
            }
            Command::Dump => self.snapshot(),
        }
    }
}

/// Result of running a script to completion or to its first failure.
#[derive(Debug)]
pub struct ScriptRun {
    pub trace: Trace,
    pub failure: Option<(usize, RuntimeError)>,
    pub instance: Option<SoftwareInstance>,
}

impl ScriptRun {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Parse and execute `script` against a fresh session. The first failing
/// command stops the run.
pub fn run_script(model: &LinkedModel, script: &str, registries: &Registries) -> Result<ScriptRun, ScriptError> {
    let commands = parse_script(script)?;
    let mut session = Session::new(model, registries);
    let mut failure = None;
    for (line, cmd) in &commands {
        if let Err(e) = session.execute(cmd) {
            failure = Some((*line, e));
            break;
        }
    }
    Ok(ScriptRun {
        trace: session.trace,
        failure,
        instance: session.instance,
    })
}
