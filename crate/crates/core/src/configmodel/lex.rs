use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use super::{Action, SyntaxIssue};

/// A whitespace-separated word with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Word<'a> {
    pub text: &'a str,
    pub col: usize,
}

pub(crate) fn words(line: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Word {
                    text: &line[s..i],
                    col: line[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Word {
            text: &line[s..],
            col: line[..s].chars().count() + 1,
        });
    }
    out
}

pub(crate) fn issue(line: usize, column: usize, message: impl Into<String>, offending: &str) -> SyntaxIssue {
    SyntaxIssue {
        line,
        column,
        message: message.into(),
        offending_text: offending.to_string(),
    }
}

pub(crate) fn parse_addr(s: &str) -> Result<Ipv4Addr, String> {
    s.parse::<Ipv4Addr>()
        .map_err(|_| format!("`{s}` is not an IPv4 address"))
}

pub(crate) fn parse_prefix(s: &str) -> Result<Ipv4Net, String> {
    if !s.contains('/') {
        return Err(format!("`{s}` is not an IPv4 prefix (missing /length)"));
    }
    s.parse::<Ipv4Net>()
        .map_err(|_| format!("`{s}` is not a valid IPv4 prefix"))
}

/// Converts a dotted netmask (`255.255.255.0`) to a prefix length.
pub(crate) fn mask_len(mask: Ipv4Addr) -> Result<u8, String> {
    ipnet::ipv4_mask_to_prefix(mask).map_err(|_| format!("`{mask}` is not a contiguous netmask"))
}

/// Converts a wildcard mask (`0.0.0.255`) to a prefix length.
pub(crate) fn wildcard_len(wildcard: Ipv4Addr) -> Result<u8, String> {
    let mask = Ipv4Addr::from(!u32::from(wildcard));
    ipnet::ipv4_mask_to_prefix(mask)
        .map_err(|_| format!("`{wildcard}` is not a contiguous wildcard mask"))
}

pub(crate) fn wildcard_of(net: &Ipv4Net) -> Ipv4Addr {
    net.hostmask()
}

pub(crate) fn parse_u32(s: &str, what: &str) -> Result<u32, String> {
    s.parse::<u32>()
        .map_err(|_| format!("{what} `{s}` is not a non-negative integer"))
}

pub(crate) fn parse_positive(s: &str, what: &str) -> Result<u32, String> {
    match parse_u32(s, what)? {
        0 => Err(format!("{what} must be positive")),
        n => Ok(n),
    }
}

pub(crate) fn parse_action(s: &str) -> Result<Action, String> {
    match s {
        "permit" => Ok(Action::Permit),
        "deny" => Ok(Action::Deny),
        other => Err(format!("invalid keyword `{other}`: expected `permit` or `deny`")),
    }
}

pub(crate) fn parse_len(s: &str) -> Result<u8, String> {
    match s.parse::<u8>() {
        Ok(n) if n <= 32 => Ok(n),
        _ => Err(format!("prefix length `{s}` is not in 0-32")),
    }
}
