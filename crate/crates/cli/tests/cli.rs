use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use confforge::configmodel::{parse, Vendor};
use confforge::corpus::{write_jsonl, DocKind, Document};
use confforge::fixtures::{synthetic_corpus, POLICY_CISCO, STATIC_CISCO, STATIC_JUNIPER};

const BIN: &str = env!("CARGO_BIN_EXE_confforge");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn translate_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let j = write(dir.path(), "r.conf", STATIC_JUNIPER);
    assert_eq!(ok(&["translate", "--vendor", "juniper", "--to", "cisco", "--check", &j]), STATIC_CISCO);

    let bad = write(dir.path(), "bad.conf", "ip route 0.0.0.0 80.0.0.2\n");
    let o = run(&["check", "--vendor", "cisco", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("bad.conf"));
    let good = write(dir.path(), "good.conf", POLICY_CISCO);
    ok(&["check", "--vendor", "cisco", &good]);

    let printed = ok(&["print", "--vendor", "cisco", &good]);
    assert_eq!(parse(&printed, Vendor::Cisco).unwrap(), parse(POLICY_CISCO, Vendor::Cisco).unwrap());
    let json: serde_json::Value = serde_json::from_str(&ok(&["parse", "--vendor", "cisco", &good])).unwrap();
    assert!(json.get("route_policies").is_some());
}

#[test]
fn intent_lines() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.conf", POLICY_CISCO);
    let out = ok(&["intent", "--from", &f, "--vendor", "cisco"]);
    assert_eq!(out.lines().count(), 4);
    assert!(out.starts_with("Create a community-list named comm1"));
    let g = ok(&["intent", "--from", &f, "--vendor", "cisco", "--generalize", "--llm", "echo"]);
    assert_eq!(g, out);
}

#[test]
fn corpus_noise_mine_dataset_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    write_jsonl(Path::new(&p("raw.jsonl")), &synthetic_corpus(120, 4).documents).unwrap();
    write_jsonl(
        Path::new(&p("seeds.jsonl")),
        &[
            Document::new("a", "juniper", DocKind::Config, STATIC_JUNIPER),
            Document::new("b", "cisco", DocKind::Config, POLICY_CISCO),
        ],
    )
    .unwrap();
    ok(&["corpus", "build", "--d1", &p("raw.jsonl"), "--d2", &p("seeds.jsonl"), "-n", "10", "-o", &p("corpus.jsonl")]);
    assert!(!fs::read_to_string(p("corpus.jsonl")).unwrap().is_empty());

    ok(&["augment", "--template", "sop", "--budget", "4", "--in", &p("corpus.jsonl"), "-o", &p("aug.jsonl"), "--llm", "oracle"]);
    ok(&["noise", "--in", &p("aug.jsonl"), "-o", &p("pretrain.jsonl"), "--seed", "3"]);
    let first = fs::read_to_string(p("pretrain.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    for key in ["tag", "noisy", "original", "strategy", "seed"] {
        assert!(rec.get(key).is_some(), "missing {key}");
    }
    ok(&["noise", "--in", &p("aug.jsonl"), "-o", &p("pretrain2.jsonl"), "--seed", "3"]);
    assert_eq!(first, fs::read_to_string(p("pretrain2.jsonl")).unwrap());

    ok(&[
        "mine", "--task", "translation", "--seeds", &p("seeds.jsonl"), "--llm", "oracle", "-o", &p("mined.jsonl"),
        "--rejected", &p("rejected.jsonl"),
    ]);
    let mined = fs::read_to_string(p("mined.jsonl")).unwrap();
    assert_eq!(mined.lines().count(), 1);
    ok(&["dataset", "assemble", "--name", "d", &p("mined.jsonl"), "-o", &p("d.jsonl"), "--manifest", &p("m.json")]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("m.json")).unwrap()).unwrap();
    assert_eq!(m["counts"]["translation"]["train"], 1);
    let stats: serde_json::Value = serde_json::from_str(&ok(&["dataset", "stats", &p("d.jsonl")])).unwrap();
    assert_eq!(stats["counts"], m["counts"]);
    let batches = ok(&["dataset", "sample", &p("d.jsonl"), "--batches", "3", "--batch-size", "2"]);
    assert_eq!(batches.lines().count(), 3);
}

#[test]
fn config_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 9\nlog_level = \"error\"\n");
    let bad = write(dir.path(), "b.toml", "sed = 9\n");
    let conf = write(dir.path(), "r.conf", STATIC_JUNIPER);
    ok(&["--config", &cfg, "check", "--vendor", "juniper", &conf]);
    let o = run(&["--config", &bad, "check", "--vendor", "juniper", &conf]);
    assert_eq!(o.status.code(), Some(2));
}

fn lookup_fixture(dir: &Path) -> (String, String) {
    let ex = serde_json::json!({
        "task": "translation", "src_lang": "<juniper>", "tgt_lang": "<cisco>",
        "input": STATIC_JUNIPER, "output": STATIC_CISCO, "meta": {}
    });
    let data = write(dir, "golden.jsonl", &format!("{ex}\n"));
    (data.clone(), data)
}

#[test]
fn eval_over_stdio_child() {
    let dir = tempfile::tempdir().unwrap();
    let (data, lookup) = lookup_fixture(dir.path());
    let builtin = ok(&["eval", "--dataset", &data, "--split", "train", "--address", "lookup", "--lookup", &lookup]);
    let child = format!("{BIN} serve --mode stdio --stub lookup --lookup {lookup}");
    let over_stdio = ok(&["eval", "--dataset", &data, "--split", "train", "--backend", "stdio", "--address", &child]);
    assert_eq!(builtin, over_stdio);
    assert!(builtin.contains("100.00"));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn eval_over_http_server() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = lookup_fixture(dir.path());
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let listen = format!("127.0.0.1:{port}");
    let mut server = Server(
        Command::new(BIN)
            .args(["serve", "--mode", "http", "--stub", "translate", "--listen", &listen, "--log-level", "info"])
            .stderr(Stdio::piped())
            .spawn()
            .unwrap(),
    );
    // the server logs once it is bound
    let mut line = String::new();
    BufReader::new(server.0.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let url = format!("http://{listen}");
    let out = ok(&["eval", "--dataset", &data, "--split", "train", "--backend", "http", "--address", &url]);
    assert!(out.contains("translation"), "{out}");
    assert!(out.contains("100.00"), "{out}");
}

#[test]
fn eval_against_missing_server_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = lookup_fixture(dir.path());
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let o = run(&["eval", "--dataset", &data, "--split", "train", "--backend", "http", "--address", &format!("http://127.0.0.1:{port}")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn probe_with_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let qs = write(
        dir.path(),
        "q.jsonl",
        "{\"question\": \"Start OSPF process 104.\", \"reference\": \"router ospf 104\"}\n",
    );
    let table = write(dir.path(), "t.jsonl", "{\"input\": \"Start OSPF process 104.\", \"output\": \"router ospf 104\"}\n");
    assert_eq!(ok(&["probe", "--questions", &qs, "--address", "lookup", "--lookup", &table]).trim(), "100.00");
    assert_eq!(ok(&["probe", "--questions", &qs, "--address", "echo"]).trim(), "0.00");
}

#[test]
fn pipeline_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let summary = ok(&["pipeline", "-o", out.to_str().unwrap(), "--documents", "80"]);
    assert!(summary.contains("dataset_examples"));
    for f in ["corpus.jsonl", "pretrain.jsonl", "mined.jsonl", "dataset.jsonl", "manifest.json", "report.json", "report.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
