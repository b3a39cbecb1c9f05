use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_codebridge"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A synthetic corpus with vectors, an anchored model and a classifier.
struct Prepared {
    dir: PathBuf,
}

impl Prepared {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn prepared() -> &'static Prepared {
    static PREPARED: OnceLock<Prepared> = OnceLock::new();
    PREPARED.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        let at = |n: &str| dir.join(n);
        run(&["synth", "--out", p(&dir), "--n", "3000", "--seed", "5", "--train-n", "1500"]);
        run(&[
            "embed", "train", "--corpus", p(&at("corpus.jsonl")), "--out", p(&at("vec.txt")), "--dim", "24",
            "--seed", "5",
        ]);
        run(&[
            "langid", "fit", "--vectors", p(&at("vec.txt")), "--corpus", p(&at("corpus.jsonl")), "--out",
            p(&at("model.txt")), "--seed", "5",
        ]);
        run(&[
            "hope", "train", "--vectors", p(&at("vec.txt")), "--corpus", p(&at("hope_train.jsonl")), "--labels",
            p(&at("hope_labels.jsonl")), "--out", p(&at("hope.txt")),
        ]);
        Prepared { dir }
    })
}

#[test]
fn synthetic_corpus_labels_accurately() {
    let w = prepared();
    run(&[
        "langid", "label", "--vectors", p(&w.path("vec.txt")), "--model", p(&w.path("model.txt")), "--corpus",
        p(&w.path("corpus.jsonl")), "--out", p(&w.path("pred.jsonl")),
    ]);
    let out = stdout(&run(&[
        "eval", "confusion", "--gold", p(&w.path("token_gold.jsonl")), "--pred", p(&w.path("pred.jsonl")),
    ]));
    let accuracy: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("accuracy"))
        .expect("accuracy line")
        .trim()
        .parse()
        .unwrap();
    assert!(accuracy >= 0.9, "{out}");
}

#[test]
fn pipeline_writes_batch_and_stage_report() {
    let w = prepared();
    let batch = w.path("batch.jsonl");
    let out = stdout(&run(&[
        "pipeline", "run", "--vectors", p(&w.path("vec.txt")), "--model", p(&w.path("model.txt")), "--hope",
        p(&w.path("hope.txt")), "--corpus", p(&w.path("corpus.jsonl")), "--out", p(&batch), "--extract", "--size",
        "3", "--pool", "h_e",
    ]));
    let names: Vec<&str> = out.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, ["D_cm", "D_hope", "E"]);
    let members = std::fs::read_to_string(&batch).unwrap();
    assert!(members.lines().count() > 0);
    for line in members.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["poolId"].as_str().unwrap().starts_with("he"), "{line}");
    }
    let y = stdout(&run(&["eval", "yield", "--batch", p(&batch), "--labels", p(&w.path("positives.jsonl"))]));
    let y: f64 = y.trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&y));
}

#[test]
fn code_mixed_selection_respects_threshold() {
    let w = prepared();
    let selected = w.path("dcm.jsonl");
    let reports = w.path("cmi.jsonl");
    run(&[
        "cmi", "select", "--vectors", p(&w.path("vec.txt")), "--model", p(&w.path("model.txt")), "--corpus",
        p(&w.path("corpus.jsonl")), "--out", p(&selected), "--threshold", "0.4", "--reports", p(&reports),
    ]);
    let kept: Vec<String> = std::fs::read_to_string(&selected)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    let scores = std::fs::read_to_string(&reports).unwrap();
    let mut above = 0;
    for line in scores.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let id = v["commentId"].as_str().unwrap();
        let high = v["cmi"].as_f64().unwrap() >= 0.4;
        assert_eq!(high, kept.iter().any(|k| k == id), "{line}");
        above += usize::from(high);
    }
    assert_eq!(above, kept.len());
    assert_eq!(scores.lines().count(), 3000);
}

#[test]
fn random_sample_is_reproducible() {
    let w = prepared();
    let a = w.path("rand_a.jsonl");
    let b = w.path("rand_b.jsonl");
    for out in [&a, &b] {
        run(&["sample", "random", "--pool", p(&w.path("corpus.jsonl")), "--out", p(out), "--n", "50", "--seed", "9"]);
    }
    let first = std::fs::read_to_string(&a).unwrap();
    assert_eq!(first, std::fs::read_to_string(&b).unwrap());
    assert_eq!(first.lines().count(), 50);

    let too_many = bin()
        .args(["sample", "random", "--pool", p(&w.path("corpus.jsonl")), "--out", p(&a), "--n", "999999"])
        .output()
        .unwrap();
    assert!(!too_many.status.success());
}

#[test]
fn ingest_skips_malformed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.jsonl");
    std::fs::write(
        &input,
        "{\"id\":\"a\",\"text\":\"Jang NAHI chahiye https://x.y\"}\nnot json\n{\"id\":\"b\",\"text\":\"🙏\"}\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = stdout(&run(&["ingest", "--in", p(&input), "--out", p(&out_dir), "--subset", "h_e"]));
    assert_eq!(out.trim(), "2 comments, 1 malformed lines, 1 empty after normalization");
    let tokens = std::fs::read_to_string(out_dir.join("tokens.jsonl")).unwrap();
    assert!(tokens.starts_with("{\"id\":\"a\",\"tokens\":[\"jang\",\"nahi\",\"chahiye\"],\"empty\":false}"));
    let corpus = std::fs::read_to_string(out_dir.join("corpus.jsonl")).unwrap();
    assert!(corpus.contains("\"subset\":\"h_e\""));
}

#[test]
fn kappa_from_count_rows() {
    let dir = tempfile::tempdir().unwrap();
    let agree = dir.path().join("agree.txt");
    std::fs::write(&agree, "2 0\n0 2\n2 0\n").unwrap();
    assert_eq!(stdout(&run(&["eval", "kappa", "--ratings", p(&agree)])).trim(), "1.0000");
    let split = dir.path().join("split.txt");
    std::fs::write(&split, "1 1\n1 1\n").unwrap();
    assert_eq!(stdout(&run(&["eval", "kappa", "--ratings", p(&split)])).trim(), "-1.0000");
    let ragged = dir.path().join("ragged.txt");
    std::fs::write(&ragged, "2 0\n1 0\n").unwrap();
    assert!(!bin().args(["eval", "kappa", "--ratings", p(&ragged)]).output().unwrap().status.success());
}

#[test]
fn missing_input_fails_with_message() {
    let out = bin()
        .args(["embed", "load", "--vectors", "/nonexistent/vectors.txt"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/vectors.txt"));
}

fn http(port: u16, request: &str) -> Option<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    stream.write_all(request.as_bytes()).ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_uses_port_from_environment() {
    let w = prepared();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let labels = w.path("serve_labels.jsonl");
    let mut child = bin()
        .env("CODEBRIDGE_PORT", port.to_string())
        .args([
            "serve", "--vectors", p(&w.path("vec.txt")), "--model", p(&w.path("model.txt")), "--pool",
            p(&w.path("corpus.jsonl")), "--labels", p(&labels),
        ])
        .spawn()
        .unwrap();
    let request = "GET /stats HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n";
    let deadline = Instant::now() + Duration::from_secs(30);
    let response = loop {
        if let Some(r) = http(port, request) {
            break r;
        }
        assert!(Instant::now() < deadline, "service did not start");
        std::thread::sleep(Duration::from_millis(100));
    };
    let no_batch = http(
        port,
        "GET /batch/next?annotator=a&n=3 HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n",
    )
    .unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"round\":0"), "{response}");
    assert!(no_batch.starts_with("HTTP/1.1 404"), "{no_batch}");
    assert!(labels.exists());
}
