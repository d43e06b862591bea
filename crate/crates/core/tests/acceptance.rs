//! One pass/fail line per headline criterion. Run with `--nocapture` to see the report.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::{Duration, Instant};

use confforge::configmodel::{check_equivalence, check_syntax, parse, print, translate, Vendor};
use confforge::corpus::{
    build_pretraining_corpus, data_process, data_selection, model_pretrain, tokenize, write_jsonl, Corpus,
    DocKind, Document, FREQUENCY_FLOOR,
};
use confforge::datasets::{draw_tasks, sample_probabilities, SamplerSpec, Task};
use confforge::fixtures::{
    random_config, synthetic_corpus, POLICY_CISCO, POLICY_INTENT, PINNED_NOISE, STATIC_CISCO, STATIC_JUNIPER,
};
use confforge::harness::metrics::lcs_len;
use confforge::harness::{bleu, em_hit, exact_match, rouge_l, sentence_rouge_l};
use confforge::llm::{fence, FnClient, LlmError, LlmRequest, LlmResponse, SequenceClient};
use confforge::miner::{mine, validate, CandidatePair, MineOptions, MiningTask, Verdict};
use confforge::noising::{apply_noise_at, tokenize as noise_tokenize, LanguageTag, NoiseSpec};
use confforge::pipeline::{dry_run, PipelineConfig};
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STATIC_BUDGET: Duration = Duration::from_secs(1);
const SAMPLER_BUDGET: Duration = Duration::from_secs(5);
const PIPELINE_BUDGET: Duration = Duration::from_secs(60);
const Q_TOL: f64 = 1e-4;
const FREQ_TOL: f64 = 0.01;
const METRIC_TOL: f64 = 1e-6;
const ROUGE_HALF_TOL: f64 = 0.01;
const ROUND_TRIP_CASES: u32 = 1000;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn static_translation() -> Outcome {
    let start = Instant::now();
    let cisco = translate(STATIC_JUNIPER, Vendor::Juniper, Vendor::Cisco).map_err(|e| e.to_string())?;
    ensure(em_hit(&cisco, STATIC_CISCO), || format!("got {cisco:?}"))?;
    let eq = check_equivalence(STATIC_JUNIPER, Vendor::Juniper, &cisco, Vendor::Cisco).map_err(|e| e.to_string())?;
    ensure(eq.equivalent, || format!("diffs {:?}", eq.diffs))?;
    let elapsed = start.elapsed();
    ensure(elapsed < STATIC_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("2 ip route lines, equivalent, {elapsed:?}"))
}

fn pinned_fidelity() -> Outcome {
    let expected = [
        "BGP uses a [MASK] ID to identify BGP-speaking [MASK] . <nl>",
        "bgp { group { type ; import Default ; export ; peer-as 100 ; neighbor { description \" ISP FastAccess: Circuit GD8AJ12B: ISP NOC 800-111-2222 \" ; } }... <juniper>",
        "router ospf 104 NEW_LINE redistribute bgp 104 subnets NEW_LINE network 104.0.0.0 0.0.0.255 [MASK] <cisco>",
    ];
    for (i, (row, want)) in PINNED_NOISE.iter().zip(expected).enumerate() {
        let seq = noise_tokenize(row.original, row.tag);
        let got = apply_noise_at(&seq, NoiseSpec::new(row.strategy, 0.15, 0), row.spans).noisy.noisy_text();
        ensure(got.as_bytes() == want.as_bytes(), || format!("row {}: {got:?}", i + 1))?;
    }
    Ok("3/3 rows byte-identical".into())
}

fn sampler() -> Outcome {
    let start = Instant::now();
    let q = sample_probabilities(&SamplerSpec::new(vec![4000, 4000, 2400], 0)).map_err(|e| e.to_string())?;
    let want = [0.3604, 0.3604, 0.2792];
    for (a, b) in q.iter().zip(want) {
        ensure((a - b).abs() <= Q_TOL, || format!("q = {q:?}"))?;
    }
    let draws = draw_tasks(&q, 100_000, 2024);
    let mut worst = 0.0f64;
    for (t, qt) in q.iter().enumerate() {
        let f = draws.iter().filter(|&&d| d == t).count() as f64 / draws.len() as f64;
        worst = worst.max((f - qt).abs());
    }
    ensure(worst <= FREQ_TOL, || format!("max frequency gap {worst:.4}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < SAMPLER_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("q = ({:.4}, {:.4}, {:.4}), max gap {worst:.4}, {elapsed:?}", q[0], q[1], q[2]))
}

/// Dense TF-IDF vectors for every document, computed without the library's model.
fn dense_vectors(docs: &[&Document]) -> HashMap<String, HashMap<String, f64>> {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text)).collect();
    let mut total: HashMap<&str, usize> = HashMap::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for ts in &toks {
        for t in ts {
            *total.entry(t).or_default() += 1;
        }
        for t in ts.iter().map(String::as_str).collect::<HashSet<_>>() {
            *df.entry(t).or_default() += 1;
        }
    }
    let n = docs.len() as f64;
    docs.iter()
        .zip(&toks)
        .map(|(d, ts)| {
            let mut v: HashMap<String, f64> = HashMap::new();
            for t in ts.iter().filter(|t| total[t.as_str()] >= FREQUENCY_FLOOR) {
                *v.entry(t.clone()).or_default() += ((1.0 + n) / (1.0 + df[t.as_str()] as f64)).ln() + 1.0;
            }
            let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
            v.values_mut().for_each(|x| *x /= norm);
            (d.id.clone(), v)
        })
        .collect()
}

fn selection_exactness() -> Outcome {
    let raw = synthetic_corpus(500, 31);
    let d1 = data_process(&raw.documents).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let other = synthetic_corpus(400, 77);
    let pool: Vec<&Document> = other.documents.iter().filter(|d| d.kind == DocKind::Config).collect();
    let d2 = Corpus::new(
        pool.choose_multiple(&mut rng, 50)
            .map(|d| Document { id: format!("seed-{}", d.id), ..(*d).clone() })
            .collect(),
    );
    let model = model_pretrain(&d1, &d2).map_err(|e| e.to_string())?;
    let mut unique: BTreeMap<&str, &Document> = BTreeMap::new();
    for d in d1.documents.iter().chain(&d2.documents) {
        unique.entry(&d.id).or_insert(d);
    }
    let vectors = dense_vectors(&unique.into_values().collect::<Vec<_>>());
    let n = 20;
    for seed in &d2.documents {
        let got = data_selection(seed, &model, n).map_err(|e| e.to_string())?.candidates;
        let s = &vectors[&seed.id];
        let mut want: Vec<(String, f64)> = d1
            .documents
            .iter()
            .map(|d| {
                let v = &vectors[&d.id];
                let dot: f64 = s.iter().filter_map(|(t, w)| v.get(t).map(|x| x * w)).sum();
                (d.id.clone(), if dot.is_nan() { 0.0 } else { dot.clamp(0.0, 1.0) })
            })
            .collect();
        want.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (rank, ((gi, gs), (wi, ws))) in got.iter().zip(&want).enumerate() {
            // ids may only differ inside a group of numerically tied scores
            let tied = want.iter().any(|(id, sc)| id == gi && (sc - ws).abs() < 1e-9);
            ensure((gs - ws).abs() < 1e-9 && (gi == wi || tied), || {
                format!("seed {} rank {rank}: {gi} ({gs}) vs {wi} ({ws})", seed.id)
            })?;
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for run in 0..2 {
        let c = build_pretraining_corpus(&raw.documents, &d2, n).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("run{run}.jsonl"));
        write_jsonl(&path, &c.documents).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(bytes[0] == bytes[1], || "corpus bytes differ between runs".into())?;
    Ok(format!("50/50 seeds agree with brute force, corpus idempotent ({} bytes)", bytes[0].len()))
}

fn ir_round_trip() -> Outcome {
    let mut report = Vec::new();
    for vendor in Vendor::ALL {
        let mut runner = TestRunner::new(PropConfig {
            cases: ROUND_TRIP_CASES,
            failure_persistence: None,
            ..PropConfig::default()
        });
        let count = std::cell::Cell::new(0u32);
        let result = runner.run(&proptest::num::u64::ANY, |seed| {
            count.set(count.get() + 1);
            let c = random_config(seed, vendor);
            let text = print(&c, vendor).map_err(|e| proptest::test_runner::TestCaseError::fail(e.to_string()))?;
            let back = parse(&text, vendor).map_err(|e| proptest::test_runner::TestCaseError::fail(e.to_string()))?;
            proptest::prop_assert_eq!(back, c);
            Ok(())
        });
        result.map_err(|e| format!("{vendor}: {e}"))?;
        report.push(format!("{vendor} {0}/{0}", count.get()));
    }
    Ok(format!("{}, zero failures", report.join(", ")))
}

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

fn metrics() -> Outcome {
    let refs = [STATIC_CISCO, POLICY_CISCO, "Create a static route to 0.0.0.0/0 with next hop 80.0.0.2."];
    let id = |r: Result<f64, _>| r.map_err(|e: confforge::harness::MetricError| e.to_string());
    let scores = (
        id(bleu(&refs, &refs, LanguageTag::Cisco))?,
        id(rouge_l(&refs, &refs, LanguageTag::Cisco))?,
        id(exact_match(&refs, &refs))?,
    );
    ensure(scores == (100.0, 100.0, 100.0), || format!("identity scores {scores:?}"))?;

    // clipped precisions 4/5, 3/4, 2/3, 1/2, equal lengths
    let hand = 100.0 * (0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
    let got = id(bleu(&["a b c d e"], &["a b c d f"], LanguageTag::Nl))?;
    ensure((got - hand).abs() < METRIC_TOL, || format!("BLEU fixture {got} vs {hand}"))?;

    let a = b"ACCGGTCGAGT";
    let b = b"GTCGTTCGGAA";
    let s = |x: &[u8]| x.iter().map(|c| (*c as char).to_string()).collect::<Vec<_>>();
    let lcs = lcs_len(&s(a), &s(b));
    ensure(lcs == brute_lcs(a, b), || format!("LCS {lcs} vs {}", brute_lcs(a, b)))?;
    let f = sentence_rouge_l(
        &s(a).join(" "),
        &s(b).join(" "),
        LanguageTag::Nl,
    );
    let want_f = 100.0 * lcs as f64 / a.len() as f64;
    ensure((f - want_f).abs() < METRIC_TOL, || format!("ROUGE-L fixture {f} vs {want_f}"))?;

    let half = sentence_rouge_l("one two three four", "one two three four five six seven eight", LanguageTag::Nl);
    ensure((half - 66.67).abs() <= ROUGE_HALF_TOL, || format!("half-length ROUGE-L {half}"))?;
    Ok(format!("identity 100/100/100, BLEU fixture {got:.6}, LCS {lcs}, half-length {half:.2}"))
}

fn miner_loop() -> Outcome {
    let mut task = MiningTask::new(Task::Translation, LanguageTag::Juniper, LanguageTag::Cisco);
    task.seed_inputs = vec![Document::new("t5", "juniper", DocKind::Config, STATIC_JUNIPER)];
    let options = MineOptions {
        max_attempts: 3,
        concurrency: 1,
    };
    let broken = "ip route 0.0.0.0 80.0.0.2";

    let once = SequenceClient::texts([fence(broken), fence(STATIC_CISCO)]);
    let (pairs, log) = mine(&task, &once, &options).map_err(|e| e.to_string())?;
    ensure(pairs.len() == 1 && log.seeds[0].attempts == 2, || format!("fail-once log {:?}", log.seeds))?;
    ensure(validate(&pairs[0]).verdict == Verdict::Accept, || "accepted pair fails re-validation".into())?;

    let always = FnClient(|_: &LlmRequest| -> Result<LlmResponse, LlmError> { Ok(LlmResponse::stop(broken)) });
    let (pairs, log) = mine(&task, &always, &options).map_err(|e| e.to_string())?;
    let rejected = log.rejected();
    ensure(pairs.is_empty() && rejected.len() == 1 && rejected[0].attempts == 3, || {
        format!("always-fail log {:?}", log.seeds)
    })?;

    let pair = CandidatePair {
        task: Task::Generation,
        src_lang: LanguageTag::Nl,
        tgt_lang: LanguageTag::Cisco,
        input_text: POLICY_INTENT.into(),
        output_text: POLICY_CISCO.into(),
        provenance: Vec::new(),
    };
    ensure(check_syntax(&pair.output_text, Vendor::Cisco).ok, || "policy config fails syntax".into())?;
    ensure(validate(&pair).verdict == Verdict::Accept, || format!("{:?}", validate(&pair).issues))?;
    Ok("fail-once: 2 attempts; always-fail: rejected after 3; intent bullets pair validates".into())
}

fn pipeline() -> Outcome {
    let config = PipelineConfig::default();
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut reports = Vec::new();
    let mut slowest = Duration::ZERO;
    for dir in &dirs {
        let start = Instant::now();
        let r = dry_run(&config, dir.path()).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        ensure(r.counts.dataset_examples > 0 && r.counts.mined_pairs > 0, || format!("{:?}", r.counts))?;
        reports.push(std::fs::read(dir.path().join("report.json")).map_err(|e| e.to_string())?);
    }
    ensure(slowest < PIPELINE_BUDGET, || format!("took {slowest:?}"))?;
    ensure(reports[0] == reports[1], || "report.json differs between runs".into())?;
    Ok(format!("two runs byte-identical, slowest {slowest:?}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("golden static translation", static_translation),
        ("pinned corruption fidelity", pinned_fidelity),
        ("task-mix sampler", sampler),
        ("neighbour selection exactness", selection_exactness),
        ("IR round-trip", ir_round_trip),
        ("metric correctness", metrics),
        ("miner repair loop", miner_loop),
        ("pipeline dry run", pipeline),
    ];
    let mut failed = Vec::new();
    println!();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
