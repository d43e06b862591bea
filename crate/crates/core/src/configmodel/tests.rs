use super::*;

const JUNIPER_STATIC: &str = "routing-options {
  static {
    route 0.0.0.0/0 next-hop 80.0.0.2;
    route 0.0.0.0/0 next-hop 80.0.0.1;
  }
}
";

const CISCO_STATIC: &str = "ip route 0.0.0.0 0.0.0.0 80.0.0.2
ip route 0.0.0.0 0.0.0.0 80.0.0.1
";

const CISCO_POLICY: &str = "ip prefix-list pfx seq 5 permit 192.168.2.0/24
ip community-list standard comm1 permit 1:2 1:3
route-map RMO permit 10
 match community comm1
 match ip address prefix-list pfx
 set local-preference 200
route-map RMO permit 20
 set metric 90
";

#[test]
fn static_block_translates_to_ip_route_lines() {
    let out = translate(JUNIPER_STATIC, Vendor::Juniper, Vendor::Cisco).unwrap();
    assert_eq!(out, CISCO_STATIC);
    let report = check_equivalence(JUNIPER_STATIC, Vendor::Juniper, &out, Vendor::Cisco).unwrap();
    assert!(report.equivalent, "{:?}", report.diffs);
}

#[test]
fn edited_next_hop_yields_one_diff() {
    let edited = CISCO_STATIC.replace("80.0.0.2", "80.0.0.3");
    let report = check_equivalence(JUNIPER_STATIC, Vendor::Juniper, &edited, Vendor::Cisco).unwrap();
    assert!(!report.equivalent);
    assert_eq!(report.diffs.len(), 1);
    let d = &report.diffs[0];
    assert_eq!(d.element_kind, ElementKind::StaticRoute);
    assert_eq!(d.field_path, "next_hop");
    assert_eq!(d.left_value.as_deref(), Some("80.0.0.2"));
    assert_eq!(d.right_value.as_deref(), Some("80.0.0.3"));
}

#[test]
fn static_route_order_is_irrelevant() {
    let swapped = "ip route 0.0.0.0 0.0.0.0 80.0.0.1\nip route 0.0.0.0 0.0.0.0 80.0.0.2\n";
    let report = check_equivalence(JUNIPER_STATIC, Vendor::Juniper, swapped, Vendor::Cisco).unwrap();
    assert!(report.equivalent);
}

#[test]
fn route_map_translates_to_policy_statement() {
    let juniper = translate(CISCO_POLICY, Vendor::Cisco, Vendor::Juniper).unwrap();
    assert!(juniper.contains("policy-statement RMO {"));
    assert!(juniper.contains("community comm1 members [ 1:2 1:3 ];"));
    assert!(check_syntax(&juniper, Vendor::Juniper).ok);
    let report = check_equivalence(CISCO_POLICY, Vendor::Cisco, &juniper, Vendor::Juniper).unwrap();
    assert!(report.equivalent, "{:?}", report.diffs);
    let back = translate(&juniper, Vendor::Juniper, Vendor::Cisco).unwrap();
    assert_eq!(back, CISCO_POLICY);
}

#[test]
fn incomplete_ip_route_is_reported_on_line_one() {
    let err = parse("ip route 0.0.0.0", Vendor::Cisco).unwrap_err();
    let issues = err.issues();
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].line, 1);
    assert!(issues[0].message.contains("mask"));
}

#[test]
fn bad_route_map_keyword_is_named() {
    let report = check_syntax("route-map RMO allow 10\n set metric 5\n", Vendor::Cisco);
    assert!(!report.ok);
    assert_eq!(report.issues[0].line, 1);
    assert_eq!(report.issues[0].column, 15);
    assert_eq!(report.issues[0].offending_text, "allow");
    assert!(report.issues[0].message.contains("`allow`"));
}

#[test]
fn errors_accumulate() {
    let text = "ip route 10.0.0.0 255.0.0.0 1.1.1.x\nip prefix-list p seq 5 allow 10.0.0.0/8\n";
    let report = check_syntax(text, Vendor::Cisco);
    assert_eq!(report.issues.len(), 2);
    assert_eq!(report.issues[1].line, 2);
}

#[test]
fn juniper_structural_errors() {
    let missing_semicolon = "routing-options {\n  static {\n    route 10.0.0.0/8 next-hop 1.1.1.1\n  }\n}\n";
    let report = check_syntax(missing_semicolon, Vendor::Juniper);
    assert!(!report.ok);
    assert_eq!(report.issues[0].line, 3);
    assert!(report.issues[0].message.contains("missing `;`"));

    let unclosed = "policy-options {\n  prefix-list p {\n    10.0.0.0/8;\n  }\n";
    let report = check_syntax(unclosed, Vendor::Juniper);
    assert!(report.issues.iter().any(|i| i.line == 1 && i.message.contains("unclosed")));
}

#[test]
fn undefined_references_are_syntax_issues() {
    let text = "route-map R permit 10\n match ip address prefix-list nope\n";
    let report = check_syntax(text, Vendor::Cisco);
    assert!(!report.ok);
    assert!(report.issues[0].message.contains("nope"));
    assert_eq!(report.issues[0].line, 1);
}

#[test]
fn prefix_list_ranges_round_trip() {
    let text = "ip prefix-list a seq 5 permit 10.0.0.0/8 le 24
ip prefix-list a seq 10 deny 172.16.0.0/12 ge 20
ip prefix-list a seq 15 permit 192.168.0.0/16 ge 20 le 28
ip prefix-list a seq 20 permit 100.64.0.0/10 le 10
";
    let cfg = parse(text, Vendor::Cisco).unwrap();
    let ranges: Vec<_> = cfg.prefix_lists[0].entries.iter().map(|e| e.length_range).collect();
    assert_eq!(ranges, vec![Some((8, 24)), Some((20, 32)), Some((20, 28)), Some((10, 10))]);
    assert_eq!(print(&cfg, Vendor::Cisco).unwrap(), text);
    let juniper = print(&cfg, Vendor::Juniper).unwrap();
    assert!(juniper.contains("10.0.0.0/8 upto /24 accept;"));
    assert!(juniper.contains("172.16.0.0/12 prefix-length-range /20-/32 reject;"));
    assert!(compare(&cfg, &parse(&juniper, Vendor::Juniper).unwrap()).equivalent);
}

#[test]
fn unknown_stanzas_are_kept_opaque() {
    let text = "hostname r1
interface GigabitEthernet0/0
 ip address 10.0.0.1 255.255.255.0
router bgp 65001
 neighbor 10.0.0.2 remote-as 65002
 neighbor 10.0.0.2 send-community
";
    let (cfg, warnings) = parse_with_warnings(text, Vendor::Cisco).unwrap();
    assert_eq!(cfg.opaque.len(), 3);
    assert_eq!(warnings.len(), 3);
    assert_eq!(cfg.bgp.as_ref().unwrap().neighbors.len(), 1);
    let printed = print(&cfg, Vendor::Cisco).unwrap();
    assert!(compare(&cfg, &parse(&printed, Vendor::Cisco).unwrap()).equivalent);
    assert!(matches!(
        print(&cfg, Vendor::Juniper),
        Err(ConfigError::Unrepresentable { .. })
    ));

    let jtext = "system {\n  host-name r1;\n}\nrouting-options {\n  autonomous-system 65001;\n  graceful-restart;\n}\n";
    let (cfg, warnings) = parse_with_warnings(jtext, Vendor::Juniper).unwrap();
    assert_eq!(cfg.opaque.len(), 2);
    assert_eq!(warnings.len(), 2);
    let printed = print(&cfg, Vendor::Juniper).unwrap();
    assert_eq!(parse(&printed, Vendor::Juniper).unwrap(), cfg);
}

#[test]
fn bgp_round_trips_through_both_vendors() {
    let text = "route-map IN permit 10
 set local-preference 150
router bgp 65001
 bgp router-id 1.1.1.1
 neighbor 10.0.0.2 remote-as 65002
 neighbor 10.0.0.2 description uplink to \"isp\"
 neighbor 10.0.0.2 route-map IN in
";
    let cfg = parse(text, Vendor::Cisco).unwrap();
    let juniper = print(&cfg, Vendor::Juniper).unwrap();
    assert!(juniper.contains("description \"uplink to \\\"isp\\\"\";"));
    assert_eq!(parse(&juniper, Vendor::Juniper).unwrap(), cfg);
}

#[test]
fn policy_defaults_are_normalized() {
    let explicit = "ip prefix-list p seq 5 permit 10.0.0.0/8
route-map R permit 10
 match ip address prefix-list p
route-map R deny 20
";
    let implicit = "ip prefix-list p seq 5 permit 10.0.0.0/8
route-map R permit 10
 match ip address prefix-list p
";
    assert!(check_equivalence(explicit, Vendor::Cisco, implicit, Vendor::Cisco)
        .unwrap()
        .equivalent);
    let different = implicit.replace("permit 10\n", "deny 10\n");
    let report = check_equivalence(explicit, Vendor::Cisco, &different, Vendor::Cisco).unwrap();
    assert_eq!(report.diffs.len(), 1);
    assert_eq!(report.diffs[0].field_path, "clauses[0].action");
}

#[test]
fn ospf_is_cisco_only() {
    let text = "router ospf 104\n redistribute bgp 104 subnets\n network 104.0.0.0 0.0.0.255 area 0\n";
    let cfg = parse(text, Vendor::Cisco).unwrap();
    assert_eq!(print(&cfg, Vendor::Cisco).unwrap(), text);
    assert!(matches!(
        translate(text, Vendor::Cisco, Vendor::Juniper),
        Err(ConfigError::Unrepresentable { .. })
    ));
}

#[test]
fn access_lists_translate() {
    let text = "access-list 10 permit 10.1.0.0 0.0.255.255
access-list 10 deny any
ip access-list standard MGMT
 permit host 192.0.2.10
";
    let cfg = parse(text, Vendor::Cisco).unwrap();
    assert_eq!(print(&cfg, Vendor::Cisco).unwrap(), text);
    let juniper = print(&cfg, Vendor::Juniper).unwrap();
    assert_eq!(parse(&juniper, Vendor::Juniper).unwrap(), cfg);
}

#[test]
fn empty_text_is_empty_config() {
    for v in Vendor::ALL {
        let cfg = parse("  \n", v).unwrap();
        assert!(cfg.is_empty());
        assert_eq!(print(&cfg, v).unwrap(), "");
    }
}

#[test]
fn same_vendor_translation_is_rejected() {
    assert!(matches!(
        translate(CISCO_STATIC, Vendor::Cisco, Vendor::Cisco),
        Err(ConfigError::SameVendor(Vendor::Cisco))
    ));
}

#[test]
fn vendor_detection_and_line_recognition() {
    assert_eq!(detect_vendor(JUNIPER_STATIC), Vendor::Juniper);
    assert_eq!(detect_vendor(CISCO_POLICY), Vendor::Cisco);
    assert_eq!(recognizable_lines(CISCO_POLICY), 8);
    assert_eq!(recognizable_lines(JUNIPER_STATIC), 4);
    assert_eq!(recognizable_lines("the router is configured\nwith care"), 0);
}
