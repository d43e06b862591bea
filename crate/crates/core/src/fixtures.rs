//! Reference inputs and seeded generators shared by tests, the dry-run pipeline and the CLI.

use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::configmodel::{
    parse, print, translate, AccessList, AclEntry, Action, BgpNeighbor, BgpProcess, Clause,
    Community, CommunityList, Match, OspfArea, OspfNetwork, OspfProcess, PrefixEntry, PrefixList,
    RedistProtocol, Redistribution, RoutePolicy, SemanticConfig, SetAction, StaticRoute, Vendor,
};
use crate::corpus::{Corpus, DocKind, Document};
use crate::harness::ProbeQuestion;
use crate::intent::config_to_intent;
use crate::llm::{fenced_blocks, FnClient, LlmClient, LlmError, LlmRequest, LlmResponse};
use crate::noising::{LanguageTag, Strategy};

pub const STATIC_JUNIPER: &str = "routing-options {
    static {
        route 0.0.0.0/0 next-hop 80.0.0.2;
        route 0.0.0.0/0 next-hop 80.0.0.1;
    }
}
";

pub const STATIC_CISCO: &str = "ip route 0.0.0.0 0.0.0.0 80.0.0.2
ip route 0.0.0.0 0.0.0.0 80.0.0.1
";

pub const POLICY_INTENT: &str = "Create a community-list named comm1, permit routes with community values 1:2 and 1:3.
Create an IP prefix list named pfx, permit routes matching 192.168.2.0/24.
Create a route-map named RMO with sequence number 10, match community-list comm1 and prefix-list pfx, and set localpreference to 200. Create a route-map, named RMO with sequence number 20, and set metric to 90.";

pub const POLICY_CISCO: &str = "ip community-list standard comm1 permit 1:2 1:3
ip prefix-list pfx seq 5 permit 192.168.2.0/24
route-map RMO permit 10
 match community comm1
 match ip address prefix-list pfx
 set local-preference 200
route-map RMO permit 20
 set metric 90
";

/// A denoising example with pinned corruption: `spans` are `(start, len)` token ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinnedNoise {
    pub tag: LanguageTag,
    pub original: &'static str,
    pub strategy: Strategy,
    pub spans: &'static [(usize, usize)],
}

/// The three corruption examples: masked prose, Juniper with deletions, Cisco with one infilled
/// span.
pub const PINNED_NOISE: [PinnedNoise; 3] = [
    PinnedNoise {
        tag: LanguageTag::Nl,
        original: "BGP uses a router ID to identify BGP-speaking peers.",
        strategy: Strategy::Mask,
        spans: &[(3, 1), (8, 1)],
    },
    PinnedNoise {
        tag: LanguageTag::Juniper,
        original: "bgp { group { ISP-AS100 { type external ; import Default ; export Direct-To-BGP ; peer-as 100 ; neighbor 120.0.4.9 { description \" ISP FastAccess: Circuit GD8AJ12B: ISP NOC 800-111-2222 \" ; } }...",
        strategy: Strategy::Delete,
        spans: &[(4, 1), (5, 1), (7, 1), (13, 1), (19, 1)],
    },
    PinnedNoise {
        tag: LanguageTag::Cisco,
        original: "router ospf 104\nredistribute bgp 104 subnets\nnetwork 104.0.0.0 0.0.0.255 area 0",
        strategy: Strategy::Infill,
        spans: &[(12, 2)],
    },
];

pub fn probe_questions() -> Vec<ProbeQuestion> {
    let q = |question: &str, reference: &str| ProbeQuestion {
        question: question.into(),
        reference: reference.into(),
        vendor: LanguageTag::Cisco,
    };
    vec![
        q("Configure a default route with next hop 80.0.0.2.", "ip route 0.0.0.0 0.0.0.0 80.0.0.2"),
        q("Start BGP with AS number 65001.", "router bgp 65001"),
        q("Start OSPF process 104.", "router ospf 104"),
        q(
            "Permit 192.168.2.0/24 in prefix list pfx.",
            "ip prefix-list pfx seq 5 permit 192.168.2.0/24",
        ),
        q(
            "Create community list comm1 permitting 1:2 and 1:3.",
            "ip community-list standard comm1 permit 1:2 1:3",
        ),
    ]
}

fn random_net(rng: &mut impl Rng, min_len: u8) -> Ipv4Net {
    let len = rng.random_range(min_len..=32);
    let addr = Ipv4Addr::from(rng.random::<u32>());
    Ipv4Net::new(addr, len).expect("length within 0..=32").trunc()
}

fn random_unicast(rng: &mut impl Rng) -> Ipv4Addr {
    let a = rng.random_range(1..=223u8);
    Ipv4Addr::new(a, rng.random(), rng.random(), rng.random_range(1..=254))
}

fn random_community(rng: &mut impl Rng) -> Community {
    Community {
        asn: rng.random_range(1..=65535),
        value: rng.random(),
    }
}

fn distinct<T: PartialEq>(rng: &mut ChaCha8Rng, max: usize, mut gen: impl FnMut(&mut ChaCha8Rng) -> T) -> Vec<T> {
    let target = rng.random_range(1..=max);
    let mut out = Vec::new();
    for _ in 0..target * 3 {
        if out.len() == target {
            break;
        }
        let v = gen(rng);
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

const DESCRIPTIONS: &[&str] = &["uplink", "ISP FastAccess", "core peer 2", "backup-transit", "NOC 800-111"];

/// A random configuration in the subset both directions of `vendor`'s printer and parser
/// cover, in the canonical form the parser produces.
pub fn random_config(seed: u64, vendor: Vendor) -> SemanticConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let juniper = vendor == Vendor::Juniper;
    let mut cfg = SemanticConfig::default();

    for i in 0..rng.random_range(0..=2) {
        let mut seq = 0;
        let entries = distinct(rng, 4, |r| {
            let prefix = random_net(r, 0);
            let len = prefix.prefix_len();
            let length_range = if r.random_bool(0.5) {
                let lo = r.random_range(len..=32);
                Some((lo, r.random_range(lo..=32)))
            } else {
                None
            };
            (r.random_bool(0.7), prefix, length_range)
        })
        .into_iter()
        .map(|(permit, prefix, length_range)| {
            seq = if juniper { seq + 5 } else { seq + rng.random_range(1..=20) };
            PrefixEntry {
                seq,
                action: if permit { Action::Permit } else { Action::Deny },
                prefix,
                length_range,
            }
        })
        .collect();
        cfg.prefix_lists.push(PrefixList {
            name: format!("pl-{i}"),
            entries,
        });
    }

    for i in 0..rng.random_range(0..=2) {
        let deny = !juniper && rng.random_bool(0.3);
        cfg.community_lists.push(CommunityList {
            name: format!("cl-{i}"),
            action: if deny { Action::Deny } else { Action::Permit },
            values: distinct(rng, 3, random_community),
        });
    }

    for i in 0..rng.random_range(0..=2) {
        cfg.access_lists.push(AccessList {
            name: format!("acl-{i}"),
            entries: distinct(rng, 3, |r| AclEntry {
                action: if r.random_bool(0.6) { Action::Permit } else { Action::Deny },
                source: random_net(r, 0),
            }),
        });
    }

    let prefix_names: Vec<String> = cfg.prefix_lists.iter().map(|p| p.name.clone()).collect();
    let community_names: Vec<String> = cfg.community_lists.iter().map(|c| c.name.clone()).collect();
    for i in 0..rng.random_range(0..=2) {
        let mut seq = 0;
        let clauses = (0..rng.random_range(1..=3))
            .map(|_| {
                seq += rng.random_range(1..=20);
                let mut matches = Vec::new();
                if let Some(n) = community_names.choose(rng).filter(|_| rng.random_bool(0.5)) {
                    matches.push(Match::CommunityList(n.clone()));
                }
                if let Some(n) = prefix_names.choose(rng).filter(|_| rng.random_bool(0.6)) {
                    matches.push(Match::PrefixList(n.clone()));
                }
                let mut sets = Vec::new();
                if rng.random_bool(0.4) {
                    sets.push(SetAction::LocalPreference(rng.random_range(0..=1000)));
                }
                if rng.random_bool(0.4) {
                    sets.push(SetAction::Metric(rng.random_range(0..=1000)));
                }
                if rng.random_bool(0.3) {
                    sets.push(SetAction::Community(distinct(rng, 2, random_community)));
                }
                Clause {
                    seq,
                    action: if rng.random_bool(0.8) { Action::Permit } else { Action::Deny },
                    matches,
                    sets,
                }
            })
            .collect();
        cfg.route_policies.push(RoutePolicy {
            name: format!("rm-{i}"),
            clauses,
        });
    }

    if rng.random_bool(0.6) {
        cfg.static_routes = distinct(rng, 3, |r| StaticRoute {
            prefix: random_net(r, 0),
            next_hop: random_unicast(r),
        });
    }

    let policy_names: Vec<String> = cfg.route_policies.iter().map(|p| p.name.clone()).collect();
    if rng.random_bool(0.5) {
        let asn = rng.random_range(1..=65535);
        let count = if rng.random_bool(0.8) { rng.random_range(1..=3) } else { 0 };
        let mut neighbors: Vec<BgpNeighbor> = Vec::new();
        for _ in 0..count {
            let n = BgpNeighbor {
                peer: random_unicast(rng),
                remote_asn: if rng.random_bool(0.2) { asn } else { rng.random_range(1..=65535) },
                description: DESCRIPTIONS
                    .choose(rng)
                    .filter(|_| rng.random_bool(0.4))
                    .map(|d| d.to_string()),
                import_policy: policy_names.choose(rng).filter(|_| rng.random_bool(0.5)).cloned(),
                export_policy: policy_names.choose(rng).filter(|_| rng.random_bool(0.5)).cloned(),
            };
            if neighbors.iter().all(|m| m.peer != n.peer) {
                neighbors.push(n);
            }
        }
        cfg.bgp = Some(BgpProcess {
            asn,
            router_id: rng.random_bool(0.5).then(|| random_unicast(rng)),
            neighbors,
        });
    }

    if !juniper && rng.random_bool(0.4) {
        let networks = distinct(rng, 3, |r| {
            let net = random_net(r, 8);
            OspfNetwork {
                address: net.network(),
                wildcard: net.hostmask(),
                area: if r.random_bool(0.7) {
                    OspfArea::Id(r.random_range(0..=100))
                } else {
                    OspfArea::Dotted(Ipv4Addr::from(r.random_range(0..=1000u32)))
                },
            }
        });
        let mut protocols = [
            RedistProtocol::Bgp,
            RedistProtocol::Static,
            RedistProtocol::Connected,
            RedistProtocol::Rip,
        ];
        protocols.shuffle(rng);
        let redistributes = protocols[..rng.random_range(0..=2)]
            .iter()
            .map(|&protocol| {
                let mut options = Vec::new();
                if rng.random_bool(0.6) {
                    options.push("subnets".to_string());
                }
                if rng.random_bool(0.3) {
                    options.push(format!("metric {}", rng.random_range(1..=100)));
                }
                Redistribution {
                    protocol,
                    process: protocol.takes_process().then(|| rng.random_range(1..=65535)),
                    options,
                }
            })
            .collect();
        cfg.ospf = Some(OspfProcess {
            process_id: rng.random_range(1..=65535),
            networks,
            redistributes,
        });
    }
    cfg
}

const PROSE: &[&str] = &[
    "BGP uses a router ID to identify BGP-speaking peers.",
    "How do I configure a default route on my router?",
    "The route map below sets the local preference for routes learned from the provider.",
    "Thanks in advance for any help with this problem.",
    "Prefix lists are evaluated in order of their sequence numbers.",
    "We upgraded the firmware last week and the session keeps flapping.",
    "A community list groups community values so a policy can match them.",
    "Static routes are preferred over routes learned from OSPF by default.",
];

/// Prose, single-vendor configurations and mixed posts, `n` in total, ids `doc-0000` onward.
pub fn synthetic_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("doc-{i:04}");
        let vendor = if rng.random_bool(0.5) { Vendor::Cisco } else { Vendor::Juniper };
        let mut config = random_config(rng.random(), vendor);
        if config.is_empty() {
            config.static_routes.push(StaticRoute {
                prefix: "0.0.0.0/0".parse().unwrap(),
                next_hop: random_unicast(&mut rng),
            });
        }
        let text = print(&config, vendor).expect("generated configs print");
        let prose: Vec<&str> = PROSE.choose_multiple(&mut rng, 2).copied().collect();
        let doc = match rng.random_range(0..3) {
            0 => Document::new(id, "forum", DocKind::Nl, prose.join(" ")),
            1 => Document::new(id, vendor.as_str(), DocKind::Config, text),
            _ => Document::new(id, "forum", DocKind::Mixed, format!("{}\n{text}{}", prose[0], prose[1])),
        };
        docs.push(doc);
    }
    Corpus::new(docs)
}

/// A small configuration with a changed parameter, for stub augmentation.
fn variant(text: &str, k: u64) -> Option<String> {
    let vendor = crate::configmodel::detect_vendor(text);
    let mut cfg = parse(text, vendor).ok()?;
    for r in &mut cfg.static_routes {
        let o = r.next_hop.octets();
        r.next_hop = Ipv4Addr::new(o[0], o[1], o[2], (o[3] % 250) + 1 + (k % 3) as u8);
    }
    for p in &mut cfg.route_policies {
        for c in &mut p.clauses {
            for s in &mut c.sets {
                if let SetAction::LocalPreference(v) | SetAction::Metric(v) = s {
                    *v += 10 * (k as u32 + 1);
                }
            }
        }
    }
    if let Some(b) = &mut cfg.bgp {
        b.asn = b.asn % 60000 + 1 + k as u32;
    }
    print(&cfg, vendor).ok()
}

fn last_fenced(text: &str) -> String {
    fenced_blocks(text).pop().unwrap_or_else(|| text.to_string())
}

/// Deterministic stand-in for a hosted model. Augmentation prompts get a fenced variant of the
/// seed; mining steps are answered with the configuration model (translation, extraction,
/// templated intent); generalization echoes the sentence.
pub fn oracle_client() -> impl LlmClient {
    FnClient(|req: &LlmRequest| -> Result<LlmResponse, LlmError> {
        let input = last_fenced(&req.user);
        let text = match req.template_id.as_str() {
            "raw" | "dsp" | "sop" => {
                let k = req.template_id.len() as u64;
                match variant(&input, k) {
                    Some(v) => format!("Here is an enhanced version:\n```\n{v}```\n"),
                    None => "I could not enhance this text.".to_string(),
                }
            }
            "translate" => {
                let from = crate::configmodel::detect_vendor(&input);
                let to = if from == Vendor::Cisco { Vendor::Juniper } else { Vendor::Cisco };
                let out = translate(&input, from, to).map_err(|e| LlmError::Refusal(e.to_string()))?;
                format!("```\n{out}```")
            }
            "extract_attributes" => format!("```\n{input}\n```"),
            "render_intent" => {
                let vendor = crate::configmodel::detect_vendor(&input);
                let cfg = parse(&input, vendor).map_err(|e| LlmError::Refusal(e.to_string()))?;
                config_to_intent(&cfg)
                    .map_err(|e| LlmError::Refusal(e.to_string()))?
                    .text()
            }
            _ => req.user.clone(),
        };
        Ok(LlmResponse::stop(text))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_and_valid() {
        for seed in 0..50 {
            for vendor in Vendor::ALL {
                let a = random_config(seed, vendor);
                assert_eq!(a, random_config(seed, vendor));
                assert!(a.validate().is_empty(), "{seed} {vendor}: {:?}", a.validate());
            }
        }
    }

    #[test]
    fn corpus_has_every_kind() {
        let c = synthetic_corpus(60, 3);
        for kind in [DocKind::Nl, DocKind::Config, DocKind::Mixed] {
            assert!(c.documents.iter().any(|d| d.kind == kind));
        }
    }
}
