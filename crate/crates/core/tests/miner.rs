use confforge::configmodel::{check_syntax, translate, Vendor};
use confforge::corpus::{DocKind, Document};
use confforge::datasets::{Task, TaskExample};
use confforge::fixtures::{oracle_client, random_config, POLICY_CISCO, POLICY_INTENT, STATIC_CISCO, STATIC_JUNIPER};
use confforge::llm::{fence, fenced_blocks, EchoClient, FnClient, LlmClient, LlmError, LlmRequest, LlmResponse, SequenceClient};
use confforge::miner::{
    decompose, execute_step, mine, validate, CandidatePair, Executor, MineOptions, MinerError, MiningTask, Verdict,
};
use confforge::noising::LanguageTag;

fn juniper_task(seeds: Vec<Document>) -> MiningTask {
    let mut t = MiningTask::new(Task::Translation, LanguageTag::Juniper, LanguageTag::Cisco);
    t.seed_inputs = seeds;
    t
}

fn static_seed() -> Document {
    Document::new("t5", "juniper", DocKind::Config, STATIC_JUNIPER)
}

fn options(max_attempts: u32) -> MineOptions {
    MineOptions {
        max_attempts,
        concurrency: 2,
    }
}

const BROKEN: &str = "ip route 0.0.0.0 80.0.0.2";

#[test]
fn one_failure_then_fix_takes_two_attempts() {
    let client = SequenceClient::texts([fence(BROKEN), fence(STATIC_CISCO)]);
    let (pairs, log) = mine(&juniper_task(vec![static_seed()]), &client, &options(3)).unwrap();
    assert_eq!(pairs.len(), 1);
    let s = &log.seeds[0];
    assert_eq!((s.attempts, s.repairs, s.client_calls), (2, 1, 2));
    assert!(s.accepted);
    assert_eq!(validate(&pairs[0]).verdict, Verdict::Accept);
    assert_eq!(pairs[0].output_text, STATIC_CISCO.trim_end());
    assert_eq!(pairs[0].provenance[0], ("translate".to_string(), 2));
}

#[test]
fn repair_prompt_quotes_the_issue() {
    let seen = std::sync::Mutex::new(Vec::new());
    let client = FnClient(|req: &LlmRequest| -> Result<LlmResponse, LlmError> {
        let mut s = seen.lock().unwrap();
        s.push(req.user.clone());
        Ok(LlmResponse::stop(if s.len() == 1 { BROKEN } else { STATIC_CISCO }))
    });
    mine(&juniper_task(vec![static_seed()]), &client, &options(3)).unwrap();
    let prompts = seen.into_inner().unwrap();
    assert_eq!(prompts.len(), 2);
    assert!(prompts[1].contains(BROKEN), "{}", prompts[1]);
    assert!(prompts[1].contains("line 1"), "{}", prompts[1]);
}

#[test]
fn always_invalid_is_rejected_after_max_attempts() {
    let client = FnClient(|_: &LlmRequest| -> Result<LlmResponse, LlmError> { Ok(LlmResponse::stop(BROKEN)) });
    let (pairs, log) = mine(&juniper_task(vec![static_seed()]), &client, &options(3)).unwrap();
    assert!(pairs.is_empty());
    let rejected = log.rejected();
    assert_eq!(rejected.len(), 1);
    assert_eq!(rejected[0].attempts, 3);
    assert!(!rejected[0].last_issues.is_empty());
    assert_eq!(log.seeds[0].client_calls, 3);
}

#[test]
fn non_equivalent_translation_is_retried() {
    let wrong = STATIC_CISCO.replace("80.0.0.1", "80.0.0.9");
    let client = SequenceClient::texts([wrong.clone(), STATIC_CISCO.to_string()]);
    let (pairs, log) = mine(&juniper_task(vec![static_seed()]), &client, &options(3)).unwrap();
    assert_eq!(pairs.len(), 1);
    assert_eq!(log.seeds[0].attempts, 2);
}

#[test]
fn broken_source_is_rejected_without_retry() {
    let seed = Document::new("bad", "juniper", DocKind::Config, "routing-options { static { route 0.0.0.0/0 next-hop x; } }");
    let (pairs, log) = mine(&juniper_task(vec![seed]), &EchoClient, &options(3)).unwrap();
    assert!(pairs.is_empty());
    assert_eq!(log.seeds[0].attempts, 1);
}

fn translator() -> impl LlmClient {
    FnClient(|req: &LlmRequest| -> Result<LlmResponse, LlmError> {
        let input = fenced_blocks(&req.user).pop().unwrap_or_default();
        translate(&input, Vendor::Juniper, Vendor::Cisco)
            .map(|t| LlmResponse::stop(fence(&t)))
            .map_err(|e| LlmError::Refusal(e.to_string()))
    })
}

#[test]
fn twenty_juniper_seeds_with_translator_stub() {
    let seeds: Vec<Document> = (0..20)
        .map(|i| {
            let ios = format!(
                "ip prefix-list p{i} seq 5 permit 10.{i}.0.0/16 le 24\nip route 10.{i}.1.0 255.255.255.0 192.0.2.{}\n",
                i + 1
            );
            let junos = translate(&ios, Vendor::Cisco, Vendor::Juniper).unwrap();
            Document::new(format!("j{i}"), "juniper", DocKind::Config, junos)
        })
        .collect();
    let task = juniper_task(seeds);
    let (pairs, log) = mine(&task, &translator(), &options(3)).unwrap();
    assert_eq!(pairs.len(), 20);
    for p in &pairs {
        let r = validate(p);
        assert_eq!(r.verdict, Verdict::Accept);
        assert!(r.equivalence.as_ref().unwrap().equivalent);
    }
    assert!(log.seeds.iter().all(|s| s.attempts == 1));
    let (again, log2) = mine(&task, &translator(), &options(3)).unwrap();
    assert_eq!(again, pairs);
    assert_eq!(log2, log);
}

#[test]
fn client_failures_stay_per_seed() {
    let client = FnClient(|req: &LlmRequest| -> Result<LlmResponse, LlmError> {
        if req.user.contains("80.0.0.2") {
            Err(LlmError::Unavailable("down".into()))
        } else {
            translator().complete(req)
        }
    });
    let other = Document::new("ok", "juniper", DocKind::Config, translate("ip route 10.0.0.0 255.0.0.0 192.0.2.1\n", Vendor::Cisco, Vendor::Juniper).unwrap());
    let (pairs, log) = mine(&juniper_task(vec![static_seed(), other]), &client, &options(3)).unwrap();
    assert_eq!(pairs.len(), 1);
    assert!(log.seeds[0].error.as_deref().unwrap().contains("down"));
    assert_eq!(log.rejected()[0].seed_id, "t5");
}

#[test]
fn client_calls_are_bounded_by_steps_times_attempts() {
    let seeds: Vec<Document> = (0..10)
        .map(|s| {
            let cfg = random_config(s, Vendor::Cisco);
            Document::new(format!("c{s}"), "cisco", DocKind::Config, confforge::configmodel::print(&cfg, Vendor::Cisco).unwrap())
        })
        .filter(|d| !d.text.is_empty())
        .collect();
    let mut task = MiningTask::new(Task::Generation, LanguageTag::Nl, LanguageTag::Cisco);
    task.seed_inputs = seeds;
    let steps = decompose(&task).unwrap().steps.len();
    for client in [Box::new(oracle_client()) as Box<dyn LlmClient>, Box::new(EchoClient)] {
        let (_, log) = mine(&task, &client, &options(3)).unwrap();
        for s in &log.seeds {
            assert!(s.client_calls <= steps * 3, "{s:?}");
        }
    }
}

#[test]
fn generation_pairs_from_oracle_validate() {
    let mut task = MiningTask::new(Task::Generation, LanguageTag::Nl, LanguageTag::Cisco);
    task.seed_inputs = vec![Document::new("policy", "cisco", DocKind::Config, POLICY_CISCO)];
    let (pairs, _) = mine(&task, &oracle_client(), &options(3)).unwrap();
    assert_eq!(pairs.len(), 1);
    assert!(pairs[0].input_text.contains("RMO"));
    let ex = TaskExample::from(&pairs[0]);
    assert_eq!(ex.meta.get("source").map(String::as_str), Some("mined"));
    ex.validate().unwrap();
}

#[test]
fn intent_bullets_pair_with_policy_config() {
    let pair = CandidatePair {
        task: Task::Generation,
        src_lang: LanguageTag::Nl,
        tgt_lang: LanguageTag::Cisco,
        input_text: POLICY_INTENT.to_string(),
        output_text: POLICY_CISCO.to_string(),
        provenance: Vec::new(),
    };
    assert_eq!(validate(&pair).verdict, Verdict::Accept);
    assert!(check_syntax(&pair.output_text, Vendor::Cisco).ok);

    let vague = CandidatePair {
        input_text: "Create some policy.".into(),
        ..pair
    };
    assert_eq!(validate(&vague).verdict, Verdict::Retry);
}

#[test]
fn plans_and_step_execution() {
    let task = juniper_task(vec![]);
    let mut with_constraint = task.clone();
    with_constraint.constraints = vec!["keep descriptions".into()];
    let plan = decompose(&with_constraint).unwrap();
    assert_eq!(plan.steps[0].executor, Executor::Llm);
    assert!(plan.steps.iter().all(|s| s.instruction_text.contains("keep descriptions")));

    let out = execute_step(&plan.steps[0], "abc", &EchoClient).unwrap();
    assert_eq!(out, "abc");
    let prose = SequenceClient::texts(["Sure, here it is:\n```\nip route 0.0.0.0 0.0.0.0 1.1.1.1\n```\nDone."]);
    assert_eq!(execute_step(&plan.steps[0], "x", &prose).unwrap(), "ip route 0.0.0.0 0.0.0.0 1.1.1.1");

    let translated = SequenceClient::texts([fence(STATIC_CISCO)]);
    assert_eq!(execute_step(&plan.steps[0], STATIC_JUNIPER, &translated).unwrap(), STATIC_CISCO.trim_end());

    let bad = MiningTask::new(Task::Translation, LanguageTag::Cisco, LanguageTag::Cisco);
    assert!(matches!(decompose(&bad), Err(MinerError::InvalidTask(_))));
    assert!(matches!(mine(&task, &EchoClient, &options(0)), Err(MinerError::ZeroAttempts)));
}
