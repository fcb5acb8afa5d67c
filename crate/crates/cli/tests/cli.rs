use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pronoun-audit");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

const PAIRS: &str = "He said his idea.\t彼は考えを言った。\nShe saw them.\t彼女は彼らを見た。\nI never liked biology.\t私は生物学は決して好きではありませんでした。\n";

#[test]
fn stats_prints_the_four_tests() {
    let o = run(&["stats", "--matrix", fixture("published_matrix.tsv").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    for id in ["T1", "T2", "T3", "T4"] {
        assert!(out.contains(&format!("{id}\t")), "{out}");
    }
    assert!(out.contains("uncorrected chi2=8426.7"), "{out}");
    assert!(out.contains("rate=0.5653"));
}

#[test]
fn audit_writes_a_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write(dir.path(), "pairs.tsv", PAIRS);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o = run(&["audit", "--pairs", &pairs, "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["audit", "--pairs", &pairs, "--out", b.to_str().unwrap(), "--workers", "3"]);
    assert_eq!(code(&o), 0);
    let a_text = std::fs::read_to_string(&a).unwrap();
    let b_text = std::fs::read_to_string(&b).unwrap();
    // only the echoed config differs
    let strip = |s: &str| {
        let v: serde_json::Value = serde_json::from_str(s).unwrap();
        let mut v = v.as_object().unwrap().clone();
        v.remove("config");
        v
    };
    assert_eq!(strip(&a_text), strip(&b_text));
    let v: serde_json::Value = serde_json::from_str(&a_text).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["matrix"]["total"], 3);
    assert_eq!(v["config"]["input"]["mode"], "pairs");
    assert_eq!(v["lexicons"][0]["source"]["version"], "builtin-1");
}

#[test]
fn tatoeba_input() {
    let dir = tempfile::tempdir().unwrap();
    let sentences = write(
        dir.path(),
        "sentences.tsv",
        "1\teng\tHe ran.\n2\tjpn\t彼は走った。\n3\teng\tShe sat.\n4\tjpn\t座った。\nbroken line\n",
    );
    let links = write(dir.path(), "links.tsv", "1\t2\n2\t1\n4\t3\n9\t1\n");
    let o = run(&["matrix", "--sentences", &sentences, "--links", &links]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = stdout(&o);
    assert!(m.starts_with("en\\ja\tNone\tA\tF"));
    assert!(m.contains("\nM\t0\t0\t0\t0\t1\t"), "{m}");
    assert!(m.contains("\nF\t1\t"), "{m}");
    let err = stderr(&o);
    assert!(err.contains("warning: "), "{err}");
}

#[test]
fn missing_file_is_an_input_error() {
    let o = run(&["audit", "--pairs", "/nonexistent/pairs.tsv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&["audit"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["audit", "--pairs", "x", "--sentences", "y", "--links", "z"])), 1);
    assert_eq!(code(&run(&["rewrite", "suggest", "--pairs", "x", "--scope", "some"])), 1);
}

#[test]
fn help_on_every_subcommand_exits_0() {
    let subcommands: &[&[&str]] = &[
        &[],
        &["audit"],
        &["matrix"],
        &["stats"],
        &["tokenize"],
        &["lexicon"],
        &["lexicon", "export"],
        &["lexicon", "validate"],
        &["rewrite"],
        &["rewrite", "suggest"],
        &["rewrite", "apply"],
        &["rewrite", "expand"],
        &["rewrite", "roundtrip"],
        &["serve"],
    ];
    for sub in subcommands {
        let mut args = sub.to_vec();
        args.push("--help");
        let o = run(&args);
        assert_eq!(code(&o), 0, "{args:?}");
        assert!(stdout(&o).contains("Usage:"));
    }
    let o = run(&["audit", "--help"]);
    for flag in ["--pairs", "--sentences", "--links", "--src-lang", "--tgt-lang", "--lexicon-en", "--lexicon-ja", "--out", "--workers"] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
    let o = run(&["serve", "--help"]);
    for flag in ["--decisions", "--port", "--scope"] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn lexicon_export_validates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ja.tsv");
    let o = run(&["lexicon", "export", "--lang", "jpn", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["lexicon", "validate", path.to_str().unwrap(), "--lang", "jpn"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("M=20"));

    let bad = write(dir.path(), "bad.tsv", "he\tM\nhe\tF\n");
    let o = run(&["lexicon", "validate", &bad, "--lang", "eng"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn rewrite_suggest_apply_expand() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write(dir.path(), "pairs.tsv", "He said his idea.\t考えを言った。\n");
    let o = run(&["rewrite", "suggest", "--pairs", &pairs]);
    assert_eq!(code(&o), 0);
    let ids: Vec<String> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["suggestion_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids.len(), 2);
    let log: String = ids
        .iter()
        .map(|id| format!("{{\"suggestion_id\":\"{id}\",\"action\":\"accept\",\"reviewer\":\"t\",\"timestamp\":\"x\"}}\n"))
        .collect();
    let decisions = write(dir.path(), "decisions.jsonl", &log);
    let templated = dir.path().join("templated.tsv");
    let o = run(&["rewrite", "apply", "--pairs", &pairs, "--decisions", &decisions, "--out", templated.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&templated).unwrap(), "[p1:subj] said [p1:poss] idea.\t考えを言った。\n");

    let o = run(&["rewrite", "expand", "--pairs", templated.to_str().unwrap(), "--assign", "1=they"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "They said their idea.\t考えを言った。\n");

    let o = run(&["rewrite", "expand", "--pairs", templated.to_str().unwrap(), "--assign", "2=they"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn corrupt_decisions_log_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write(dir.path(), "pairs.tsv", PAIRS);
    let decisions = write(dir.path(), "d.jsonl", "{nope\n{}\n");
    let o = run(&["rewrite", "apply", "--pairs", &pairs, "--decisions", &decisions]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn roundtrip_and_tokenize() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write(dir.path(), "pairs.tsv", PAIRS);
    let o = run(&["rewrite", "roundtrip", "--pairs", &pairs]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().all(|l| l.contains("\"passed\":true")));
    let o = run(&["tokenize", "--pairs", &pairs]);
    assert_eq!(code(&o), 0);
    let first: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(first["en_set"], "M");
    assert_eq!(first["en_occurrences"][0]["surface"], "He");
}
