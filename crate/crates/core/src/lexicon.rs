//! Keyword lexicon separating configuration lines from prose.
//!
//! A line counts as configuration when it has Juniper block structure (`{`, `;`, `}` endings)
//! or when at least [`THETA_LINE`] of its tokens are configuration keywords or literals
//! (addresses, prefixes, communities, numbers, structural punctuation).

use std::net::Ipv4Addr;

/// Minimum fraction of lexicon tokens for a line to count as configuration.
pub const THETA_LINE: f64 = 0.6;
/// Minimum fraction of configuration lines for a candidate document to be accepted.
pub const THETA_ACCEPT: f64 = 0.5;

const KEYWORDS: &[&str] = &[
    // Cisco IOS
    "access-list", "address", "any", "area", "bgp", "community", "community-list", "connected",
    "default-information", "deny", "description", "eigrp", "end", "exit", "expanded", "ge", "host",
    "hostname", "in", "interface", "ip", "ipv6", "isis", "le", "local-preference", "log", "match",
    "metric", "metric-type", "neighbor", "network", "no", "ospf", "out", "passive-interface",
    "permit", "prefix-list", "redistribute", "remark", "remote-as", "rip", "route", "route-map",
    "router", "router-id", "seq", "set", "shutdown", "standard", "static", "subnets", "tag",
    "update-source", "version", "vrf",
    // Juniper
    "accept", "autonomous-system", "discard", "exact", "export", "external", "family", "filter",
    "firewall", "from", "group", "host-name", "import", "inet", "interfaces", "internal",
    "local-address", "longer", "members", "next", "next-hop", "orlonger", "peer-as",
    "policy-options", "policy-statement", "prefix-length-range", "protocols", "reject",
    "route-filter", "route-filter-list", "routing-options", "source-address", "system", "term",
    "then", "type", "unit", "upto",
];

fn is_literal(tok: &str) -> bool {
    if matches!(tok, "{" | "}" | ";" | "[" | "]" | "!" | "NEW_LINE") {
        return true;
    }
    let t = tok.trim_end_matches(';');
    if t.is_empty() {
        return true;
    }
    if t.parse::<Ipv4Addr>().is_ok() || t.parse::<ipnet::Ipv4Net>().is_ok() {
        return true;
    }
    if t.chars().all(|c| c.is_ascii_digit()) {
        return true;
    }
    if let Some(len) = t.strip_prefix('/') {
        return len.chars().all(|c| c.is_ascii_digit()) && !len.is_empty();
    }
    matches!(t.split_once(':'), Some((a, b)) if a.parse::<u16>().is_ok() && b.parse::<u16>().is_ok())
}

fn is_keyword(tok: &str) -> bool {
    KEYWORDS.contains(&tok.trim_end_matches(';'))
}

/// Fraction of a line's tokens that are keywords or configuration literals.
pub fn line_score(line: &str) -> f64 {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.is_empty() {
        return 0.0;
    }
    let hits = toks.iter().filter(|t| is_keyword(t) || is_literal(t)).count();
    hits as f64 / toks.len() as f64
}

fn juniper_structure(line: &str) -> bool {
    let t = line.trim();
    if t == "}" || t == "};" {
        return true;
    }
    let first = t.split_whitespace().next().unwrap_or_default();
    let lowercase_head = first
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_lowercase() || c.is_ascii_digit());
    lowercase_head && (t.ends_with('{') || t.ends_with(';'))
}

pub fn is_config_line(line: &str) -> bool {
    !line.trim().is_empty() && (juniper_structure(line) || line_score(line) >= THETA_LINE)
}

/// Fraction of non-blank lines that are configuration lines (0 for blank text).
pub fn config_likeness(text: &str) -> f64 {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return 0.0;
    }
    lines.iter().filter(|l| is_config_line(l)).count() as f64 / lines.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        for l in [
            "router ospf 104",
            "redistribute bgp 104 subnets",
            "network 104.0.0.0 0.0.0.255 area 0",
            "ip route 0.0.0.0 0.0.0.0 80.0.0.2",
            "route-map RMO permit 10",
            " match community comm1",
            "    route 0.0.0.0/0 next-hop 80.0.0.1;",
            "routing-options {",
            "}",
        ] {
            assert!(is_config_line(l), "{l}");
        }
    }

    #[test]
    fn prose_lines() {
        for l in [
            "BGP uses a router ID to identify BGP-speaking peers.",
            "How do I configure a default route on my router?",
            "Thanks in advance for any help",
            "",
        ] {
            assert!(!is_config_line(l), "{l}");
        }
    }

    #[test]
    fn likeness_is_line_fraction() {
        let text = "router bgp 100\nI am not sure why this fails\n";
        assert_eq!(config_likeness(text), 0.5);
        assert_eq!(config_likeness("\n\n"), 0.0);
    }
}
