//! `gaf`: check, run, format and explain `.gaf` models.
//!
//! Exit codes: 0 success, 1 semantic or runtime failure, 2 usage or I/O.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gaf_core::batch::sweep_gaprogs;
use gaf_core::coherence::{apply_gaprog, explain};
use gaf_core::diagnostic::has_errors;
use gaf_core::model::FeatureState;
use gaf_core::runtime::script::{parse_command, parse_script, Session};
use gaf_core::runtime::{Registries, StubOutputs};
use gaf_core::{format_unit, link, parse_unit, validate_model, Diagnostic, LinkedModel, SourceUnit};

#[derive(Parser)]
#[command(name = "gaf", version, about = "Genetic adaptation framework toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, link and validate model files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run an event script and write its trace.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        script: PathBuf,
        /// Trace destination; standard output when absent or `-`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Scripted feature outputs, `<feature> -> <literal>[, <literal>...]`.
        #[arg(long)]
        stub: Option<PathBuf>,
    },
    /// Rewrite a model file in canonical layout.
    Fmt {
        file: PathBuf,
        #[arg(long)]
        stdout: bool,
    },
    /// Show why each feature lands where it does when a GAProg is applied
    /// to an all-disabled instance.
    Explain {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        config: String,
        #[arg(long)]
        gaprog: String,
    },
    /// Interactive session on a fresh instance.
    Repl {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        config: String,
        #[arg(long)]
        proc: String,
    },
}

/// A failure that ends the command with a given exit code.
struct Fail(u8);

const SEMANTIC: Fail = Fail(1);
const USAGE: Fail = Fail(2);

type CmdResult = Result<(), Fail>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Check { files } => cmd_check(&files),
        Command::Run {
            files,
            script,
            trace,
            stub,
        } => cmd_run(&files, &script, trace.as_deref(), stub.as_deref()),
        Command::Fmt { file, stdout } => cmd_fmt(&file, stdout),
        Command::Explain { files, config, gaprog } => cmd_explain(&files, &config, &gaprog),
        Command::Repl { files, config, proc } => cmd_repl(&files, &config, &proc),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code)) => ExitCode::from(code),
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map(|s| s.replace("\r\n", "\n")).map_err(|e| {
        eprintln!("gaf: cannot read {}: {e}", path.display());
        USAGE
    })
}

fn print_diags(diags: &[Diagnostic]) {
    let stderr = io::stderr();
    let mut err = stderr.lock();
    for d in diags {
        let _ = writeln!(err, "{d}");
    }
}

/// Read and parse every file. All parse errors are reported before failing.
fn parse_files(files: &[PathBuf]) -> Result<Vec<SourceUnit>, Fail> {
    let mut texts = Vec::new();
    for f in files {
        texts.push((f.display().to_string(), read(f)?));
    }
    let mut units = Vec::new();
    let mut diags = Vec::new();
    for (path, text) in &texts {
        match parse_unit(text, path) {
            Ok(u) => units.push(u),
            Err(d) => diags.extend(d),
        }
    }
    if diags.is_empty() {
        Ok(units)
    } else {
        print_diags(&diags);
        Err(SEMANTIC)
    }
}

fn load(files: &[PathBuf]) -> Result<(LinkedModel, Vec<SourceUnit>), Fail> {
    let units = parse_files(files)?;
    match link(&units) {
        Ok((model, warnings)) => {
            print_diags(&warnings);
            Ok((model, units))
        }
        Err(diags) => {
            print_diags(&diags);
            Err(SEMANTIC)
        }
    }
}

fn cmd_check(files: &[PathBuf]) -> CmdResult {
    let units = parse_files(files)?;
    let mut diags = validate_model(&units);
    if !has_errors(&diags) {
        if let Ok((model, _)) = link(&units) {
            diags.extend(sweep_gaprogs(&model, &units));
        }
    }
    print_diags(&diags);
    if has_errors(&diags) {
        Err(SEMANTIC)
    } else {
        Ok(())
    }
}

fn write_out(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|e| {
            eprintln!("gaf: cannot write {}: {e}", p.display());
            USAGE
        }),
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|_| USAGE)
        }
    }
}

fn cmd_run(files: &[PathBuf], script: &Path, trace: Option<&Path>, stub: Option<&Path>) -> CmdResult {
    let (model, _) = load(files)?;
    let mut registries = Registries::default();
    if let Some(path) = stub {
        let stubs = StubOutputs::parse(&read(path)?).map_err(|e| {
            eprintln!("{}: {e}", path.display());
            SEMANTIC
        })?;
        registries.features.stubs = stubs;
    }
    let text = read(script)?;
    let commands = parse_script(&text).map_err(|e| {
        eprintln!("{}:{}: error[script-syntax]: {}", script.display(), e.line, e.message);
        SEMANTIC
    })?;
    let mut session = Session::new(&model, &registries);
    let mut failed = false;
    for (_, cmd) in &commands {
        if session.execute(cmd).is_err() {
            failed = true;
            break;
        }
    }
    write_out(trace, &session.trace.render())?;
    if failed {
        Err(SEMANTIC)
    } else {
        Ok(())
    }
}

fn cmd_fmt(file: &Path, to_stdout: bool) -> CmdResult {
    let text = read(file)?;
    let unit = parse_unit(&text, &file.display().to_string()).map_err(|d| {
        print_diags(&d);
        SEMANTIC
    })?;
    let formatted = format_unit(&unit);
    if to_stdout {
        write_out(None, &formatted)
    } else if formatted != text {
        write_out(Some(file), &formatted)
    } else {
        Ok(())
    }
}

fn cmd_explain(files: &[PathBuf], config: &str, gaprog: &str) -> CmdResult {
    let (model, _) = load(files)?;
    let Some(c) = model.configuration(config) else {
        eprintln!("gaf: unknown configuration `{config}`");
        return Err(USAGE);
    };
    let Some(p) = c.gaprog(gaprog) else {
        eprintln!("gaf: configuration `{config}` has no GAProg `{gaprog}`");
        return Err(USAGE);
    };
    let blank = FeatureState::all_disabled(&c.features);
    let closure = match apply_gaprog(&blank, p, &c.relations) {
        Ok((_, closure)) => closure,
        Err(e) => {
            eprintln!("gaf: {e}");
            return Err(SEMANTIC);
        }
    };
    let mut out = String::new();
    for (mode, feature) in closure.processing_order() {
        let chain = explain(&closure, feature.as_str()).expect("feature taken from the closure");
        let verdict = match mode {
            gaf_core::model::Mode::Enable => "enabled",
            gaf_core::model::Mode::Disable => "disabled",
        };
        out.push_str(&format!("{feature}: {verdict} because {chain}\n"));
    }
    write_out(None, &out)
}

fn cmd_repl(files: &[PathBuf], config: &str, proc: &str) -> CmdResult {
    let (model, _) = load(files)?;
    let Some(c) = model.configuration(config) else {
        eprintln!("gaf: unknown configuration `{config}`");
        return Err(USAGE);
    };
    if c.gaproc(proc).is_none() {
        eprintln!("gaf: configuration `{config}` has no GAProc `{proc}`");
        return Err(USAGE);
    }
    let registries = Registries::default();
    let mut session = Session::new(&model, &registries);
    let create = gaf_core::runtime::script::Command::Create {
        instance: "repl".into(),
        database: c.database.to_string(),
        configuration: config.to_string(),
        gaproc: proc.to_string(),
    };
    let ok = session.execute(&create).is_ok();
    write_out(None, &session.trace.render())?;
    if !ok {
        return Err(SEMANTIC);
    }

    let stdin = io::stdin();
    for line in stdin.lock().lines() {
        let line = line.map_err(|_| USAGE)?;
        let start = session.trace.len();
        match line.trim() {
            "quit" => break,
            "state" => {
                let _ = session.snapshot();
            }
            _ => match parse_command(&line) {
                Ok(Some(cmd)) => {
                    let _ = session.execute(&cmd);
                }
                Ok(None) => {}
                Err(message) => eprintln!("error: {message}"),
            },
        }
        write_out(None, &session.trace.render_from(start))?;
    }
    Ok(())
}
