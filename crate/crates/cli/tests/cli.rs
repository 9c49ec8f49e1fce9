use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn gaf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaf"))
}

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn list_files() -> Vec<PathBuf> {
    ["list.gaf", "static_list.gaf", "dynamic_list.gaf"]
        .iter()
        .map(|f| corpus(&format!("list/{f}")))
        .collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_accepts_the_list_corpus() {
    let o = gaf().arg("check").args(list_files()).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stderr(&o), "");
}

#[test]
fn check_rejects_mixed_mode_relations() {
    let o = gaf()
        .arg("check")
        .arg(corpus("fixtures/invalid/mixed_mode.gaf"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains(": error[mixed-mode-relation]: "), "{err}");
    assert!(err.contains("mixed_mode.gaf:12:16:"), "{err}");
}

#[test]
fn check_warns_about_incoherent_gaprogs() {
    let o = gaf()
        .arg("check")
        .arg(corpus("fixtures/conflict.gaf"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning[incoherent-gaprog]"), "{}", stderr(&o));
}

#[test]
fn io_and_usage_errors_exit_2() {
    assert_eq!(
        gaf().args(["check", "no/such/file.gaf"]).status().unwrap().code(),
        Some(2)
    );
    assert_eq!(gaf().arg("check").status().unwrap().code(), Some(2));
    assert_eq!(
        gaf().args(["check", "--bogus", "x.gaf"]).status().unwrap().code(),
        Some(2)
    );
    assert_eq!(gaf().arg("frobnicate").status().unwrap().code(), Some(2));
    assert_eq!(gaf().status().unwrap().code(), Some(2));
    let o = gaf().arg("run").args(list_files()).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "--script is required");
    let o = gaf()
        .arg("run")
        .args(list_files())
        .args(["--script", "missing.script"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_the_trace_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.trace");
    let o = gaf()
        .arg("run")
        .args(list_files())
        .arg("--script")
        .arg(corpus("list/list1.script"))
        .arg("--trace")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
    assert_eq!(
        fs::read_to_string(out).unwrap(),
        fs::read_to_string(corpus("list/list1.trace")).unwrap()
    );
}

#[test]
fn run_fails_on_coherence_conflicts() {
    let o = gaf()
        .arg("run")
        .arg(corpus("fixtures/conflict.gaf"))
        .arg("--script")
        .arg(corpus("fixtures/conflict.script"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("ERROR coherence-conflict b enable=["), "{last}");
}

#[test]
fn run_reports_script_syntax_errors() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("bad.script");
    fs::write(&script, "create L List Static_List Static\nteleport now\n").unwrap();
    let o = gaf()
        .arg("run")
        .args(list_files())
        .arg("--script")
        .arg(&script)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.script:2:"), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
}

#[test]
fn run_uses_stub_outputs() {
    let o = gaf()
        .arg("run")
        .args(["branch.gaf"].map(|f| corpus(&format!("fixtures/{f}"))))
        .arg("--script")
        .arg(corpus("fixtures/branch.script"))
        .arg("--stub")
        .arg(corpus("fixtures/branch.stub"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("EXEC Sense IN - OUT empty\nEXEC Retry IN - OUT ok\nEXEC Sense IN - OUT 7\nEXEC Report")
    );
}

#[test]
fn run_rejects_bad_stub_files() {
    let dir = tempfile::tempdir().unwrap();
    let stub = dir.path().join("s.stub");
    fs::write(&stub, "Sense => 1\n").unwrap();
    let o = gaf()
        .arg("run")
        .arg(corpus("fixtures/branch.gaf"))
        .arg("--script")
        .arg(corpus("fixtures/branch.script"))
        .arg("--stub")
        .arg(&stub)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fmt_rewrites_in_place_once() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.gaf");
    fs::write(
        &file,
        "// kept\nDatabase D { Feature a : method; Feature b : data; }\nConfiguration C on D { Features { a; } Features { b; }\n GAProg P { Enable(a); } GAProc L { (event = creation): P; } }\n",
    )
    .unwrap();
    assert_eq!(gaf().arg("fmt").arg(&file).status().unwrap().code(), Some(0));
    let once = fs::read_to_string(&file).unwrap();
    assert!(once.starts_with("// kept\n\nDatabase D {\n"), "{once}");
    assert!(once.contains("    Features {\n        a, b;\n    }\n"), "{once}");
    assert_eq!(gaf().arg("fmt").arg(&file).status().unwrap().code(), Some(0));
    assert_eq!(fs::read_to_string(&file).unwrap(), once);

    let o = gaf().arg("fmt").arg(&file).arg("--stdout").output().unwrap();
    assert_eq!(stdout(&o), once);
}

#[test]
fn fmt_refuses_unparseable_files() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.gaf");
    fs::write(&file, "Database D { Feature a method; }\n").unwrap();
    let o = gaf().arg("fmt").arg(&file).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("m.gaf:1:24: error[syntax-error]"), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&file).unwrap(), "Database D { Feature a method; }\n");
}

fn explain(config: &str, gaprog: &str, files: &[PathBuf]) -> Output {
    gaf()
        .arg("explain")
        .args(files)
        .args(["--config", config, "--gaprog", gaprog])
        .output()
        .unwrap()
}

#[test]
fn explain_lists_seed_then_derived() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.gaf");
    fs::write(
        &file,
        "Database D {\n    Feature a : method;\n    Feature b : method;\n}\n\nConfiguration C on D {\n    Features {\n        a, b;\n    }\n\n    Relations {\n        Enable(a) Implies Enable(b);\n    }\n\n    GAProg P {\n        Enable(a);\n    }\n\n    GAProg Nothing {\n    }\n}\n",
    )
    .unwrap();
    let o = explain("C", "P", std::slice::from_ref(&file));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "a: enabled because a by seed Enable clause 1\nb: enabled because b by Enable(a) Implies Enable(b) <= a by seed Enable clause 1\n"
    );
    let o = explain("C", "Nothing", std::slice::from_ref(&file));
    assert_eq!((o.status.code(), stdout(&o)), (Some(0), String::new()));
    assert_eq!(
        explain("C", "Missing", std::slice::from_ref(&file)).status.code(),
        Some(2)
    );
    assert_eq!(explain("Nope", "P", &[file]).status.code(), Some(2));
}

#[test]
fn explain_reports_conflicts() {
    let o = explain("Clash", "Bad", &[corpus("fixtures/conflict.gaf")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("coherence conflict on b"), "{}", stderr(&o));
}

fn repl(input: &str) -> Output {
    let mut child = gaf()
        .arg("repl")
        .args(list_files())
        .args(["--config", "Static_List", "--proc", "Static"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn repl_matches_script_semantics() {
    let o = repl("event eventi\nstate\nquit\nevent eventj\n");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let golden = fs::read_to_string(corpus("list/list1.trace")).unwrap();
    let transition: String = golden
        .lines()
        .skip_while(|l| *l != "EVENT eventi")
        .take_while(|l| !l.starts_with("EXEC"))
        .map(|l| format!("{l}\n"))
        .collect();
    assert!(out.contains(&transition), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("SNAPSHOT")).count(), 1);
    assert!(out.starts_with("CREATE repl CONFIG Static_List PROC Static\n"));
    assert!(!out.contains("EVENT eventj"), "quit must end the session");
}

#[test]
fn repl_keeps_going_after_errors() {
    let o = repl("invoke Nonexistent\nfly\nbehave\nstate\n");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("ERROR unknown-feature"), "{out}");
    assert!(stderr(&o).contains("unknown command `fly`"));
    assert!(out.contains("EXEC Empty IN - OUT 1"), "{out}");
    assert!(out.trim_end().lines().last().unwrap().starts_with("SNAPSHOT"));
}

#[test]
fn repl_without_active_behavior() {
    let mut child = gaf()
        .arg("repl")
        .args(list_files())
        .args(["--config", "Static_List", "--proc", "StaticToDynamic"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"event eventi\nbehave\nstate\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("ERROR no-active-behavior"), "{out}");
    assert!(out.contains("SNAPSHOT"), "{out}");
}
