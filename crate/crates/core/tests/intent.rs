use confforge::configmodel::{parse, ElementKind, SemanticConfig, Vendor};
use confforge::fixtures::{random_config, POLICY_CISCO, STATIC_CISCO};
use confforge::intent::{config_to_intent, generalize_intent, intent_to_pairs, IntentError, IntentStyle};
use confforge::llm::{EchoClient, FnClient, LlmError, LlmRequest, LlmResponse, SequenceClient};

fn policy_config() -> SemanticConfig {
    parse(POLICY_CISCO, Vendor::Cisco).unwrap()
}

#[test]
fn policy_example_renders_in_element_order() {
    let intent = config_to_intent(&policy_config()).unwrap();
    assert_eq!(
        intent.sentences,
        [
            "Create a community-list named comm1, permit routes with community values 1:2 and 1:3.",
            "Create an IP prefix list named pfx, permit routes matching 192.168.2.0/24.",
            "Create a route-map named RMO with sequence number 10, match community-list comm1 and prefix-list pfx, and set localpreference to 200.",
            "Create a route-map named RMO with sequence number 20, and set metric to 90.",
        ]
    );
    assert_eq!(intent.style, IntentStyle::Templated);
    let kinds: Vec<ElementKind> = intent.source_elements.iter().map(|(k, _)| *k).collect();
    assert_eq!(kinds, [ElementKind::CommunityList, ElementKind::PrefixList, ElementKind::RoutePolicy]);
}

#[test]
fn static_routes_render_one_sentence_each() {
    let intent = config_to_intent(&parse(STATIC_CISCO, Vendor::Cisco).unwrap()).unwrap();
    assert_eq!(
        intent.text(),
        "Create a static route to 0.0.0.0/0 with next hop 80.0.0.2.\nCreate a static route to 0.0.0.0/0 with next hop 80.0.0.1."
    );
}

#[test]
fn empty_and_opaque_configs_fail() {
    assert!(matches!(config_to_intent(&SemanticConfig::default()), Err(IntentError::MissingElements)));
    let opaque = parse("interface Loopback0\n ip address 10.0.0.1 255.255.255.255\n", Vendor::Cisco).unwrap();
    assert!(matches!(config_to_intent(&opaque), Err(IntentError::MissingTemplate(ElementKind::Opaque))));
}

#[test]
fn every_element_name_appears_in_the_text() {
    for seed in 0..200 {
        let cfg = random_config(seed, Vendor::Cisco);
        if cfg.is_empty() {
            continue;
        }
        let intent = config_to_intent(&cfg).unwrap();
        let text = intent.text();
        for (_, name) in cfg.element_names() {
            assert!(text.contains(&name), "seed {seed}: {name} missing from\n{text}");
        }
    }
}

#[test]
fn echo_generalization_keeps_text() {
    let intent = config_to_intent(&policy_config()).unwrap();
    let g = generalize_intent(&intent, &EchoClient, 2).unwrap();
    assert_eq!(g.intent.sentences, intent.sentences);
    assert_eq!(g.intent.style, IntentStyle::Generalized);
    assert!(g.reverted.is_empty());
    assert!(matches!(generalize_intent(&g.intent, &EchoClient, 2), Err(IntentError::AlreadyGeneralized)));
}

#[test]
fn rewrites_that_drop_parameters_revert() {
    let intent = config_to_intent(&parse(STATIC_CISCO, Vendor::Cisco).unwrap()).unwrap();
    let client = FnClient(|req: &LlmRequest| -> Result<LlmResponse, LlmError> {
        Ok(LlmResponse::stop(if req.user.contains("80.0.0.2") {
            req.user.replace("Create", "Add")
        } else {
            req.user.replace(" with next hop 80.0.0.1", "")
        }))
    });
    let g = generalize_intent(&intent, &client, 1).unwrap();
    assert_eq!(g.intent.sentences[0], "Add a static route to 0.0.0.0/0 with next hop 80.0.0.2.");
    assert_eq!(g.intent.sentences[1], intent.sentences[1]);
    assert_eq!(g.reverted, [1]);
}

#[test]
fn unavailable_client_returns_templated_text_with_warning() {
    let intent = config_to_intent(&policy_config()).unwrap();
    let g = generalize_intent(&intent, &SequenceClient::default(), 1).unwrap();
    assert_eq!(g.intent.sentences, intent.sentences);
    assert!(g.warning.is_some());
}

#[test]
fn pairs_validate_in_both_directions() {
    let configs: Vec<SemanticConfig> = (0..20)
        .map(|s| random_config(s, Vendor::Cisco))
        .filter(|c| !c.is_empty())
        .collect();
    let pairs = intent_to_pairs(&configs, Vendor::Cisco).unwrap();
    assert_eq!(pairs.len(), configs.len() * 2);
    for p in &pairs {
        p.validate().unwrap();
    }
}
