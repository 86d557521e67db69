use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn chansel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chansel"))
        .current_dir(dir)
        .env("CHANSEL_OUTPUT_DIR", dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = chansel(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    chansel(dir, args).status.code().unwrap()
}

/// Every file under `root` with its contents.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn small_corpus(dir: &Path, name: &str, jobs: &str) -> PathBuf {
    let out = dir.join(name);
    ok(
        dir,
        &[
            "--preset", "desk", "--seed", "3", "--jobs", jobs, "gen-corpus", "--out", out.to_str().unwrap(), "--count", "40",
        ],
    );
    out
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["frobnicate"]), 1);
    assert_eq!(code(d, &["--preset", "desk", "gen-corpus", "--noise", "gaussian:50"]), 1);
    assert_eq!(code(d, &["--preset", "desk", "gen-corpus", "--scale", "0"]), 1);
    assert_eq!(code(d, &["--preset", "desk", "--jobs", "0", "gen-corpus"]), 1);
    assert_eq!(code(d, &["--preset", "huge", "gen-corpus"]), 1);
    assert_eq!(code(d, &["--preset", "desk", "label-channels", "--corpus", "missing"]), 1);
    assert_eq!(code(d, &["--config", "nope.cfg", "gen-corpus"]), 1);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--preset", "desk", "--dry-run", "gen-corpus"]);
    assert_eq!(std::fs::read_dir(d).unwrap().count(), 0);

    let corpus = small_corpus(d, "corpus", "2");
    let c = corpus.to_str().unwrap();
    let img = corpus.join("images/00000.png");
    let before = snapshot(d);
    for args in [
        vec!["--dry-run", "label-channels", "--corpus", c],
        vec!["--dry-run", "train-hmm", "--corpus", c, "--mode", "fixed:G"],
        vec!["--dry-run", "study", "--corpus", c, "--study", "channel-table"],
        vec!["--dry-run", "gen-corpus", "--out", c],
    ] {
        let mut full = vec!["--preset", "desk"];
        full.extend(args);
        ok(d, &full);
    }
    assert_eq!(snapshot(d), before);
    // Dry runs still check their inputs.
    assert_eq!(
        code(d, &["--preset", "desk", "--dry-run", "recognize", "--image", img.to_str().unwrap(), "--hmm", "x.hmm", "--lexicon", "x.txt"]),
        1
    );
}

#[test]
fn corpus_does_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_corpus(dir.path(), "a", "1");
    let b = small_corpus(dir.path(), "b", "4");
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn train_and_recognize_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = small_corpus(d, "corpus", "2");
    let c = corpus.to_str().unwrap();
    ok(d, &["--preset", "desk", "--jobs", "1", "label-channels", "--corpus", c, "--out", "l1.txt"]);
    ok(d, &["--preset", "desk", "--jobs", "3", "label-channels", "--corpus", c, "--out", "l3.txt"]);
    let labels = std::fs::read_to_string(d.join("l1.txt")).unwrap();
    assert_eq!(labels, std::fs::read_to_string(d.join("l3.txt")).unwrap());
    assert!(labels.starts_with("chansel-labels 1\n"));

    ok(d, &["--preset", "desk", "train-selector", "--labels", "l1.txt", "--features", "wavelet", "--out", "sel.model"]);
    ok(
        d,
        &["--preset", "desk", "train-hmm", "--corpus", c, "--mode", "per-window", "--selector", "sel.model", "--out", "pw.hmm"],
    );
    let images: Vec<String> = (0..3).map(|i| corpus.join(format!("images/{i:05}.png")).display().to_string()).collect();
    let mut args = vec!["--preset", "desk", "recognize", "--mode", "per-window", "--hmm", "pw.hmm", "--selector", "sel.model"];
    let lex = corpus.join("lexicon.txt").display().to_string();
    args.extend(["--lexicon", lex.as_str(), "--image"]);
    args.extend(images.iter().map(String::as_str));
    let first = ok(d, &args);
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 3);
    let lexicon = std::fs::read_to_string(&lex).unwrap();
    for (line, img) in lines.iter().zip(&images) {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f[0], img);
        assert!(lexicon.lines().any(|w| w == f[1]));
        assert!(f[2].parse::<f64>().is_ok());
    }
    assert_eq!(ok(d, &args), first);
    // Per-window decoding without a selector is a usage error.
    let no_sel: Vec<&str> = args.iter().copied().filter(|a| *a != "--selector" && *a != "sel.model").collect();
    assert_eq!(code(d, &no_sel), 1);
}
