//! Text rule format.
//!
//! ```text
//! # comment
//! rule watching-tv
//!   priority 10
//!   min_duration_s 600
//!   emit_label watching TV
//!   state label:tv active 0.8
//!   zone all:label:phone living room 0.5
//!   time 18:00-23:30
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::identity::DeviceKind;
use crate::mac::MacAddress;
use crate::sim::schedule::parse_clock;
use crate::traffic::DeviceState;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("rule error at line {line}: {message}")]
pub struct RuleError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Mac(MacAddress),
    Kind(DeviceKind),
    Label(String),
}

/// Which devices a condition looks at, and whether one or all of them must
/// satisfy it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    pub target: Target,
    pub all: bool,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.all {
            f.write_str("all:")?;
        }
        match &self.target {
            Target::Mac(m) => write!(f, "mac:{m}"),
            Target::Kind(k) => write!(f, "kind:{k}"),
            Target::Label(l) => write!(f, "label:{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    DeviceState {
        selector: Selector,
        states: BTreeSet<DeviceState>,
        min_fraction: f64,
    },
    DeviceZone {
        selector: Selector,
        zone: String,
        min_fraction: f64,
    },
    /// Seconds of day, `start < end` or wrapping past midnight.
    TimeOfDay { start_s: u64, end_s: u64 },
}

impl Condition {
    pub fn time_contains(start_s: u64, end_s: u64, tod_s: u64) -> bool {
        if start_s < end_s {
            (start_s..end_s).contains(&tod_s)
        } else {
            tod_s >= start_s || tod_s < end_s
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub priority: i32,
    pub min_duration_s: u64,
    pub emit_label: String,
    pub conditions: Vec<Condition>,
}

pub const DEFAULT_RULES: &str = include_str!("../../data/default_rules.txt");

fn err(line: usize, message: impl Into<String>) -> RuleError {
    RuleError {
        line,
        message: message.into(),
    }
}

pub fn parse_selector(s: &str) -> Option<Selector> {
    let (all, rest) = match s.strip_prefix("all:") {
        Some(r) => (true, r),
        None => (false, s),
    };
    let (kind, value) = rest.split_once(':')?;
    let target = match kind {
        "mac" => Target::Mac(value.parse().ok()?),
        "kind" => Target::Kind(DeviceKind::parse(value)?),
        "label" if !value.is_empty() => Target::Label(value.to_string()),
        _ => return None,
    };
    Some(Selector { target, all })
}

fn fraction(line: usize, s: &str) -> Result<f64, RuleError> {
    match s.parse::<f64>() {
        Ok(f) if f > 0.0 && f <= 1.0 => Ok(f),
        _ => Err(err(line, format!("fraction must lie in (0, 1], got {s:?}"))),
    }
}

/// Parses and checks a rule file. Every rule needs at least one condition
/// and a positive minimum duration. Rules come back highest priority first.
pub fn compile_rules(text: &str) -> Result<Vec<Rule>, RuleError> {
    let mut rules: Vec<(usize, Rule)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        if key == "rule" {
            if rest.is_empty() || rest.contains(char::is_whitespace) {
                return Err(err(ln, "rule needs a single-word name"));
            }
            if rules.iter().any(|(_, r)| r.name == rest) {
                return Err(err(ln, format!("duplicate rule {rest:?}")));
            }
            rules.push((
                ln,
                Rule {
                    name: rest.to_string(),
                    priority: 0,
                    min_duration_s: 600,
                    emit_label: rest.to_string(),
                    conditions: Vec::new(),
                },
            ));
            continue;
        }
        let Some((_, rule)) = rules.last_mut() else {
            return Err(err(ln, format!("{key:?} outside of a rule")));
        };
        let words: Vec<&str> = rest.split_whitespace().collect();
        match key {
            "priority" => {
                rule.priority = rest.parse().map_err(|_| err(ln, "priority must be an integer"))?;
            }
            "min_duration_s" => {
                rule.min_duration_s = match rest.parse::<u64>() {
                    Ok(d) if d > 0 => d,
                    _ => return Err(err(ln, "min_duration_s must be a positive integer")),
                };
            }
            "emit_label" => {
                if rest.is_empty() {
                    return Err(err(ln, "emit_label needs a value"));
                }
                rule.emit_label = rest.to_string();
            }
            "state" => {
                let [sel, states, frac] = words[..] else {
                    return Err(err(ln, "expected: state <selector> <state[|state]> <fraction>"));
                };
                let selector = parse_selector(sel).ok_or_else(|| err(ln, format!("bad selector {sel:?}")))?;
                let states = states
                    .split('|')
                    .map(|s| DeviceState::parse(s).ok_or_else(|| err(ln, format!("unknown state {s:?}"))))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                rule.conditions.push(Condition::DeviceState {
                    selector,
                    states,
                    min_fraction: fraction(ln, frac)?,
                });
            }
            "zone" => {
                if words.len() < 3 {
                    return Err(err(ln, "expected: zone <selector> <label> <fraction>"));
                }
                let selector =
                    parse_selector(words[0]).ok_or_else(|| err(ln, format!("bad selector {:?}", words[0])))?;
                rule.conditions.push(Condition::DeviceZone {
                    selector,
                    zone: words[1..words.len() - 1].join(" "),
                    min_fraction: fraction(ln, words[words.len() - 1])?,
                });
            }
            "time" => {
                let (a, b) = rest
                    .split_once('-')
                    .and_then(|(a, b)| Some((parse_clock(a)?, parse_clock(b)?)))
                    .ok_or_else(|| err(ln, "expected: time HH:MM-HH:MM"))?;
                if a == b || a >= 86_400 {
                    return Err(err(ln, "empty time range"));
                }
                rule.conditions.push(Condition::TimeOfDay {
                    start_s: a,
                    end_s: b % 86_400,
                });
            }
            other => return Err(err(ln, format!("unknown keyword {other:?}"))),
        }
    }
    for (ln, r) in &rules {
        if r.conditions.is_empty() {
            return Err(err(*ln, format!("rule {:?} has no conditions", r.name)));
        }
        if !r.conditions.iter().any(|c| !matches!(c, Condition::TimeOfDay { .. })) {
            return Err(err(*ln, format!("rule {:?} needs a device condition", r.name)));
        }
    }
    let mut rules: Vec<Rule> = rules.into_iter().map(|(_, r)| r).collect();
    rules.sort_by_key(|r| std::cmp::Reverse(r.priority));
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rules_compile() {
        let rules = compile_rules(DEFAULT_RULES).unwrap();
        let names: Vec<&str> = rules.iter().map(|r| r.name.as_str()).collect();
        for n in ["watching-tv", "working", "cooking", "sleeping", "gaming"] {
            assert!(names.contains(&n), "{n}");
        }
    }

    #[test]
    fn parses_all_condition_kinds() {
        let rules = compile_rules(
            "rule r\n priority 3\n min_duration_s 60\n emit_label hello there\n\
             state all:kind:manual off|idle 0.9\n zone mac:a4:45:19:00:00:0a living room 0.5\n\
             time 22:00-06:00 # night\n",
        )
        .unwrap();
        let r = &rules[0];
        assert_eq!((r.priority, r.min_duration_s, r.emit_label.as_str()), (3, 60, "hello there"));
        assert_eq!(r.conditions.len(), 3);
        match &r.conditions[1] {
            Condition::DeviceZone { selector, zone, .. } => {
                assert_eq!(zone, "living room");
                assert_eq!(selector.to_string(), "mac:a4:45:19:00:00:0a");
            }
            c => panic!("{c:?}"),
        }
        assert!(Condition::time_contains(79_200, 21_600, 3_600));
        assert!(!Condition::time_contains(79_200, 21_600, 43_200));
    }

    #[test]
    fn errors_carry_lines() {
        let cases = [
            ("priority 1\n", 1),
            ("rule a\n\n state label:x active 1.5\n", 3),
            ("rule a\n state bogus active 0.5\n", 2),
            ("rule a\n state label:x sleepy 0.5\n", 2),
            ("rule a\n time 25:00-01:00\n", 2),
            ("rule a\n priority 1\n", 1),
            ("rule a\n time 10:00-11:00\n", 1),
            ("rule a\n state label:x active 0.5\nrule a\n", 3),
            ("rule a\n frobnicate\n", 2),
        ];
        for (text, line) in cases {
            assert_eq!(compile_rules(text).unwrap_err().line, line, "{text:?}");
        }
    }
}
