use std::collections::HashMap;
use std::io::Cursor;
use std::thread;

use confforge::configmodel::{translate, Vendor};
use confforge::datasets::{assemble, Split, Task, TaskDataset, TaskExample};
use confforge::fixtures::{probe_questions, STATIC_CISCO, STATIC_JUNIPER};
use confforge::harness::metrics::{bleu_tagged, lcs_len, metric_tokens};
use confforge::harness::{
    bleu, evaluate, exact_match, probe_understanding, rouge_l, sentence_bleu, sentence_rouge_l, serve_stdio,
    Backend, BackendEndpoint, BackendError, BackendMode, EchoBackend, HarnessError, HttpBackend, LookupBackend,
    MetricError, TransformRequest, TransformResponse, TranslateBackend,
};
use confforge::noising::LanguageTag;
use proptest::prelude::{prop, prop_assert_eq, proptest, ProptestConfig};

/// Textbook BLEU-4 for a single pair: clipped precisions, add-one on zero counts, brevity
/// penalty.
fn naive_bleu(h: &[&str], r: &[&str]) -> f64 {
    let grams = |t: &[&str], n: usize| -> HashMap<Vec<String>, usize> {
        let mut m = HashMap::new();
        for i in 0..t.len().saturating_sub(n - 1) {
            *m.entry(t[i..i + n].iter().map(|s| s.to_string()).collect()).or_insert(0) += 1;
        }
        m
    };
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let (hg, rg) = (grams(h, n), grams(r, n));
        let matched: usize = hg.iter().map(|(g, c)| (*c).min(*rg.get(g).unwrap_or(&0))).sum();
        let total = h.len().saturating_sub(n - 1);
        let p = if matched == 0 { 1.0 / (total as f64 + 1.0) } else { matched as f64 / total as f64 };
        log_sum += p.ln();
    }
    let bp = if h.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / h.len() as f64).exp() };
    100.0 * bp * (log_sum / 4.0).exp()
}

/// Longest common subsequence by trying every subsequence of `a`.
fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let is_subseq = |s: &[u8]| {
        let mut it = b.iter();
        s.iter().all(|x| it.any(|y| y == x))
    };
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let s: Vec<u8> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
            is_subseq(&s).then_some(s.len())
        })
        .max()
        .unwrap_or(0)
}

#[test]
fn hand_computed_bleu() {
    // precisions 4/5, 3/4, 2/3, 1/2 multiply to 1/5
    let expected = 100.0 * 0.2f64.powf(0.25);
    let got = sentence_bleu("a b c d e", "a b c d f", LanguageTag::Nl);
    assert!((got - expected).abs() < 1e-6, "{got}");
    assert!((naive_bleu(&["a", "b", "c", "d", "e"], &["a", "b", "c", "d", "f"]) - expected).abs() < 1e-6);
    assert!((bleu(&["a b c d e"], &["a b c d f"], LanguageTag::Nl).unwrap() - expected).abs() < 1e-6);
}

#[test]
fn bleu_matches_naive_on_assorted_pairs() {
    let pairs = [
        ("the cat sat on the mat", "the cat is on the mat"),
        ("ip route 0.0.0.0 0.0.0.0 80.0.0.2", "ip route 0.0.0.0 0.0.0.0 80.0.0.1"),
        ("a a a a a a", "a a b"),
        ("short", "a much longer reference sentence"),
    ];
    for (h, r) in pairs {
        let hw: Vec<&str> = h.split(' ').collect();
        let rw: Vec<&str> = r.split(' ').collect();
        let got = sentence_bleu(h, r, LanguageTag::Nl);
        assert!((got - naive_bleu(&hw, &rw)).abs() < 1e-6, "{h} / {r}: {got}");
    }
}

#[test]
fn corpus_bleu_pools_counts() {
    let hyps = ["a b c d e", "x y z w"];
    let refs = [("a b c d f", LanguageTag::Nl), ("x y z w", LanguageTag::Nl)];
    // pooled precisions (4+4)/(5+4), (3+3)/(4+3), (2+2)/(3+2), (1+1)/(2+1)
    let p: f64 = (8.0 / 9.0) * (6.0 / 7.0) * (4.0 / 5.0) * (2.0 / 3.0);
    let got = bleu_tagged(&hyps, &refs).unwrap();
    assert!((got - 100.0 * p.powf(0.25)).abs() < 1e-6);
}

#[test]
fn identity_scores_are_perfect() {
    let refs = [STATIC_CISCO, "Create a static route to 0.0.0.0/0 with next hop 80.0.0.2.", "router ospf 1"];
    assert_eq!(bleu(&refs, &refs, LanguageTag::Cisco).unwrap(), 100.0);
    assert_eq!(rouge_l(&refs, &refs, LanguageTag::Cisco).unwrap(), 100.0);
    assert_eq!(exact_match(&refs, &refs).unwrap(), 100.0);
}

#[test]
fn half_length_rouge() {
    let r = "one two three four five six seven eight";
    let got = sentence_rouge_l("one two three four", r, LanguageTag::Nl);
    assert!((got - 66.67).abs() < 0.01);
}

#[test]
fn disjoint_long_pair_scores_low() {
    let h: Vec<String> = (0..30).map(|i| format!("h{i}")).collect();
    let r: Vec<String> = (0..30).map(|i| format!("r{i}")).collect();
    let s = sentence_bleu(&h.join(" "), &r.join(" "), LanguageTag::Nl);
    assert!(s < 5.0, "{s}");
    assert_eq!(sentence_rouge_l(&h.join(" "), &r.join(" "), LanguageTag::Nl), 0.0);
}

#[test]
fn new_line_sentinel_scores_like_line_breaks() {
    let a = sentence_bleu("ip route 1 NEW_LINE ip route 2", "ip route 1\nip route 2", LanguageTag::Cisco);
    assert_eq!(a, 100.0);
    assert_eq!(metric_tokens("a\nb", LanguageTag::Cisco), ["a", "NEW_LINE", "b"]);
}

#[test]
fn metric_errors() {
    assert!(matches!(bleu(&["a"], &[], LanguageTag::Nl), Err(MetricError::LengthMismatch { .. })));
    assert!(matches!(rouge_l(&[], &[], LanguageTag::Nl), Err(MetricError::Empty)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn lcs_matches_brute_force(a in prop::collection::vec(0u8..4, 0..11), b in prop::collection::vec(0u8..4, 0..11)) {
        let s = |v: &[u8]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        prop_assert_eq!(lcs_len(&s(&a), &s(&b)), brute_lcs(&a, &b));
    }
}

fn translation_dataset(n: usize) -> TaskDataset {
    let examples: Vec<TaskExample> = (0..n)
        .map(|i| {
            let ios = format!("ip route 10.{i}.0.0 255.255.0.0 192.0.2.{}\n", i % 200 + 1);
            let junos = translate(&ios, Vendor::Cisco, Vendor::Juniper).unwrap();
            TaskExample::new(Task::Translation, LanguageTag::Juniper, LanguageTag::Cisco, junos, ios)
        })
        .collect();
    assemble("tr", &[examples]).unwrap()
}

fn echo_analysis_dataset() -> TaskDataset {
    let examples: Vec<TaskExample> = (0..30)
        .map(|i| {
            let ios = format!("ip route 10.{i}.0.0 255.255.0.0 192.0.2.1");
            TaskExample::new(Task::Analysis, LanguageTag::Cisco, LanguageTag::Nl, ios.clone(), ios)
        })
        .collect();
    assemble("echo", &[examples]).unwrap()
}

#[test]
fn echo_stub_on_identity_fixture() {
    let report = evaluate(&echo_analysis_dataset(), Split::Test, &EchoBackend, 4).unwrap();
    assert_eq!(report.tasks[&Task::Analysis].em, 100.0);
    assert_eq!(report.tasks[&Task::Analysis].bleu, 100.0);
}

#[test]
fn lookup_stub_with_golden_pair() {
    let ds = assemble(
        "golden",
        &[vec![TaskExample::new(Task::Translation, LanguageTag::Juniper, LanguageTag::Cisco, STATIC_JUNIPER, STATIC_CISCO)]],
    )
    .unwrap();
    let backend = LookupBackend::new([(STATIC_JUNIPER, STATIC_CISCO)]);
    let report = evaluate(&ds, Split::Train, &backend, 1).unwrap();
    let t = report.tasks[&Task::Translation];
    assert_eq!((t.bleu, t.em), (100.0, 100.0));
}

#[test]
fn translate_stub_on_translation_split() {
    let ds = translation_dataset(60);
    let report = evaluate(&ds, Split::Test, &TranslateBackend, 4).unwrap();
    assert!(report.tasks[&Task::Translation].em >= 95.0);
    let again = evaluate(&ds, Split::Test, &TranslateBackend, 1).unwrap();
    assert_eq!(report.to_json(), again.to_json());
}

#[test]
fn failed_requests_score_zero_and_are_flagged() {
    let ds = echo_analysis_dataset();
    let report = evaluate(&ds, Split::Test, &TranslateBackend, 2).unwrap();
    let t = report.tasks[&Task::Analysis];
    assert_eq!(t.failed, t.n);
    assert_eq!(t.em, 0.0);
    assert!(report.summary_table().contains("analysis"));
}

#[test]
fn probe_scores() {
    let qs = probe_questions();
    let all = LookupBackend::new(qs.iter().map(|q| (q.question.clone(), q.reference.clone())));
    assert_eq!(probe_understanding(&qs, &all, 2).unwrap(), 100.0);
    assert_eq!(probe_understanding(&qs, &LookupBackend::default(), 2).unwrap(), 0.0);
    assert!(matches!(probe_understanding(&[], &all, 2), Err(HarnessError::NoQuestions)));
}

#[test]
fn stdio_protocol_keeps_order_and_survives_bad_lines() {
    let reqs: Vec<String> = (0..5)
        .map(|i| {
            serde_json::to_string(&TransformRequest {
                task: Task::Analysis,
                src_lang: LanguageTag::Cisco,
                tgt_lang: LanguageTag::Nl,
                input: format!("line {i}"),
                max_tokens: 16,
            })
            .unwrap()
        })
        .collect();
    let mut input = reqs[..2].join("\n");
    input.push_str("\n{\"task\":\"poetry\",\"src_lang\":\"<nl>\",\"tgt_lang\":\"<nl>\",\"input\":\"x\",\"max_tokens\":1}\n");
    input.push_str(&reqs[2..].join("\n"));
    let mut out = Vec::new();
    let served = serve_stdio(&EchoBackend, Cursor::new(input), &mut out).unwrap();
    assert_eq!(served, 6);
    let lines: Vec<TransformResponse> =
        String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[1].output, "line 1");
    assert!(lines[2].error.is_some());
    assert_eq!(lines[5].output, "line 4");
}

fn spawn_http_stub() -> String {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", server.server_addr().to_ip().unwrap());
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let resp = match serde_json::from_str::<TransformRequest>(&body) {
                Ok(r) => TranslateBackend.transform(&r).unwrap(),
                Err(e) => TransformResponse::error(e.to_string()),
            };
            let _ = req.respond(tiny_http::Response::from_string(serde_json::to_string(&resp).unwrap()));
        }
    });
    addr
}

#[test]
fn http_backend_matches_builtin() {
    let addr = spawn_http_stub();
    let ds = translation_dataset(40);
    let endpoint = BackendEndpoint::new(BackendMode::Http, addr);
    let remote = endpoint.connect(None).unwrap();
    let over_http = evaluate(&ds, Split::Test, &remote, 4).unwrap();
    let local = evaluate(&ds, Split::Test, &TranslateBackend, 4).unwrap();
    assert_eq!(over_http, local);
}

#[test]
fn unreachable_backend_fails_before_scoring() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    let backend = HttpBackend::new(&format!("http://127.0.0.1:{port}"), std::time::Duration::from_secs(1));
    let err = evaluate(&translation_dataset(10), Split::Train, &backend, 1).unwrap_err();
    assert!(matches!(err, HarnessError::BackendUnreachable(BackendError::Unreachable(_))));
}

#[test]
fn builtin_endpoint_names() {
    for name in ["echo", "translate", "lookup"] {
        assert!(BackendEndpoint::new(BackendMode::BuiltinStub, name).connect(None).is_ok());
    }
    assert!(BackendEndpoint::new(BackendMode::BuiltinStub, "oracle").connect(None).is_err());
    assert_eq!("builtin-stub".parse::<BackendMode>().unwrap(), BackendMode::BuiltinStub);
}
