//! Line-oriented scenario scripts driving the five-entity harness.
//!
//! Grammar (one statement per line; blank lines and `#` comments are
//! skipped; `"` quotes group words inside a value, no escapes):
//!
//! ```text
//! universe a b c d            # exactly once, first
//! owners o1 o2 o3             # exactly once, second
//! user u1 attrs=a,b           # issue a user key (attrs may be empty)
//! add_file f1 policy="a AND b" [content=<hex>]
//! user_search u1 f1 [expect=ok|denied|verify_fail|not_found]
//! owner_join o4
//! owner_leave o1
//! tamper f1 17                # corrupt byte 17 of f1 in responses
//! ```
//!
//! Parsing validates every reference: attributes against the
//! universe, searches against declared users, churn against the
//! roster as it evolves through the script, tampering against files
//! added so far. `user_search` may name an unknown file — that is
//! the `not_found` path — but every other dangling name is an error.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::policy::{parse_policy, PolicyAst};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("line {no}: {msg}")]
    Line { no: usize, msg: String },
    #[error("{0}")]
    Structure(String),
}

fn line_err<T>(no: usize, msg: impl Into<String>) -> Result<T, ScriptError> {
    Err(ScriptError::Line {
        no,
        msg: msg.into(),
    })
}

/// What a `user_search` line claims will happen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    Ok,
    Denied,
    VerifyFail,
    NotFound,
}

impl Expectation {
    fn parse(s: &str) -> Option<Expectation> {
        Some(match s {
            "ok" => Expectation::Ok,
            "denied" => Expectation::Denied,
            "verify_fail" => Expectation::VerifyFail,
            "not_found" => Expectation::NotFound,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScriptEvent {
    DeclareUser {
        name: String,
        attrs: BTreeSet<String>,
    },
    AddFile {
        id: String,
        policy: PolicyAst,
        content: Option<Vec<u8>>,
    },
    UserSearch {
        user: String,
        id: String,
        expect: Option<Expectation>,
    },
    OwnerJoin(String),
    OwnerLeave(String),
    Tamper {
        id: String,
        index: usize,
    },
}

/// One parsed statement with its source text for transcripts.
#[derive(Clone, Debug, PartialEq)]
pub struct ScriptLine {
    pub no: usize,
    pub raw: String,
    pub event: ScriptEvent,
}

/// A validated scenario: declarations plus an ordered event list.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioScript {
    pub universe: Vec<String>,
    pub owners: Vec<String>,
    pub lines: Vec<ScriptLine>,
}

/// Entity and file names share the attribute token rules.
fn valid_name(s: &str) -> bool {
    PolicyAst::valid_attribute(s)
}

/// Split a line into words, keeping double-quoted spans together.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    for ch in line.chars() {
        match ch {
            '"' => in_quotes = !in_quotes,
            c if c.is_whitespace() && !in_quotes => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if in_quotes {
        return Err("unterminated quote".into());
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    Ok(tokens)
}

/// Split `key=value` arguments; returns (positional, keyword).
fn split_args(tokens: &[String]) -> (Vec<&str>, BTreeMap<&str, &str>) {
    let mut positional = Vec::new();
    let mut keyword = BTreeMap::new();
    for tok in tokens {
        match tok.split_once('=') {
            Some((k, v)) => {
                keyword.insert(k, v);
            }
            None => positional.push(tok.as_str()),
        }
    }
    (positional, keyword)
}

struct Validator {
    universe: BTreeSet<String>,
    users: BTreeSet<String>,
    files: BTreeSet<String>,
    roster: BTreeSet<String>,
}

pub fn parse_scenario(text: &str) -> Result<ScenarioScript, ScriptError> {
    let mut universe: Option<Vec<String>> = None;
    let mut owners: Option<Vec<String>> = None;
    let mut lines = Vec::new();
    let mut v = Validator {
        universe: BTreeSet::new(),
        users: BTreeSet::new(),
        files: BTreeSet::new(),
        roster: BTreeSet::new(),
    };

    for (idx, raw_line) in text.lines().enumerate() {
        let no = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens = match tokenize(trimmed) {
            Ok(t) => t,
            Err(msg) => return line_err(no, msg),
        };
        let (head, rest) = tokens.split_first().expect("non-empty line");

        match head.as_str() {
            "universe" => {
                if universe.is_some() {
                    return line_err(no, "universe declared twice");
                }
                if owners.is_some() || !lines.is_empty() {
                    return line_err(no, "universe must be the first statement");
                }
                if rest.is_empty() {
                    return line_err(no, "universe needs at least one attribute");
                }
                for attr in rest {
                    if !valid_name(attr) {
                        return line_err(no, format!("invalid attribute name {attr:?}"));
                    }
                    if !v.universe.insert(attr.clone()) {
                        return line_err(no, format!("duplicate attribute {attr:?}"));
                    }
                }
                universe = Some(rest.to_vec());
            }
            "owners" => {
                if owners.is_some() {
                    return line_err(no, "owners declared twice");
                }
                if universe.is_none() {
                    return line_err(no, "owners must follow the universe declaration");
                }
                if !lines.is_empty() {
                    return line_err(no, "owners must precede all events");
                }
                if rest.is_empty() {
                    return line_err(no, "owners needs at least one name");
                }
                for owner in rest {
                    if !valid_name(owner) {
                        return line_err(no, format!("invalid owner name {owner:?}"));
                    }
                    if !v.roster.insert(owner.clone()) {
                        return line_err(no, format!("duplicate owner {owner:?}"));
                    }
                }
                owners = Some(rest.to_vec());
            }
            _ => {
                if universe.is_none() || owners.is_none() {
                    return line_err(no, "events must follow universe and owners declarations");
                }
                let event = parse_event(no, head, rest, &mut v)?;
                lines.push(ScriptLine {
                    no,
                    raw: trimmed.to_string(),
                    event,
                });
            }
        }
    }

    match (universe, owners) {
        (Some(universe), Some(owners)) => Ok(ScenarioScript {
            universe,
            owners,
            lines,
        }),
        _ => Err(ScriptError::Structure(
            "script must declare universe and owners".into(),
        )),
    }
}

fn parse_event(
    no: usize,
    head: &str,
    rest: &[String],
    v: &mut Validator,
) -> Result<ScriptEvent, ScriptError> {
    let (positional, keyword) = split_args(rest);
    let known_keys: &[&str] = match head {
        "user" => &["attrs"],
        "add_file" => &["policy", "content"],
        "user_search" => &["expect"],
        _ => &[],
    };
    for key in keyword.keys() {
        if !known_keys.contains(key) {
            return line_err(no, format!("unknown argument {key:?}"));
        }
    }

    match head {
        "user" => {
            let [name] = positional[..] else {
                return line_err(no, "usage: user <name> [attrs=a,b]");
            };
            if !valid_name(name) {
                return line_err(no, format!("invalid user name {name:?}"));
            }
            if !v.users.insert(name.to_string()) {
                return line_err(no, format!("user {name:?} declared twice"));
            }
            let mut attrs = BTreeSet::new();
            if let Some(list) = keyword.get("attrs") {
                for attr in list.split(',').filter(|a| !a.is_empty()) {
                    if !v.universe.contains(attr) {
                        return line_err(no, format!("attribute {attr:?} not in universe"));
                    }
                    attrs.insert(attr.to_string());
                }
            }
            Ok(ScriptEvent::DeclareUser {
                name: name.to_string(),
                attrs,
            })
        }
        "add_file" => {
            let [id] = positional[..] else {
                return line_err(no, "usage: add_file <id> policy=\"…\" [content=<hex>]");
            };
            if !valid_name(id) {
                return line_err(no, format!("invalid file id {id:?}"));
            }
            if !v.files.insert(id.to_string()) {
                return line_err(no, format!("file {id:?} added twice"));
            }
            let Some(policy_text) = keyword.get("policy") else {
                return line_err(no, "add_file requires policy=\"…\"");
            };
            let policy = match parse_policy(policy_text) {
                Ok(p) => p,
                Err(e) => return line_err(no, format!("bad policy: {e}")),
            };
            for attr in policy.attributes() {
                if !v.universe.contains(&attr) {
                    return line_err(no, format!("policy attribute {attr:?} not in universe"));
                }
            }
            let content = match keyword.get("content") {
                None => None,
                Some(hex_str) => match hex::decode(hex_str) {
                    Ok(bytes) => Some(bytes),
                    Err(e) => return line_err(no, format!("bad content hex: {e}")),
                },
            };
            Ok(ScriptEvent::AddFile {
                id: id.to_string(),
                policy,
                content,
            })
        }
        "user_search" => {
            let [user, id] = positional[..] else {
                return line_err(no, "usage: user_search <user> <file> [expect=…]");
            };
            if !v.users.contains(user) {
                return line_err(no, format!("unknown user {user:?}"));
            }
            if !valid_name(id) {
                return line_err(no, format!("invalid file id {id:?}"));
            }
            let expect = match keyword.get("expect") {
                None => None,
                Some(word) => match Expectation::parse(word) {
                    Some(e) => Some(e),
                    None => {
                        return line_err(
                            no,
                            "expect must be one of ok, denied, verify_fail, not_found",
                        )
                    }
                },
            };
            Ok(ScriptEvent::UserSearch {
                user: user.to_string(),
                id: id.to_string(),
                expect,
            })
        }
        "owner_join" => {
            let [name] = positional[..] else {
                return line_err(no, "usage: owner_join <name>");
            };
            if !valid_name(name) {
                return line_err(no, format!("invalid owner name {name:?}"));
            }
            if !v.roster.insert(name.to_string()) {
                return line_err(no, format!("owner {name:?} is already in the roster"));
            }
            Ok(ScriptEvent::OwnerJoin(name.to_string()))
        }
        "owner_leave" => {
            let [name] = positional[..] else {
                return line_err(no, "usage: owner_leave <name>");
            };
            if !v.roster.remove(name) {
                return line_err(no, format!("owner {name:?} is not in the roster"));
            }
            if v.roster.is_empty() {
                return line_err(no, "cannot leave: the roster would be empty");
            }
            Ok(ScriptEvent::OwnerLeave(name.to_string()))
        }
        "tamper" => {
            let [id, index] = positional[..] else {
                return line_err(no, "usage: tamper <file> <byte index>");
            };
            if !v.files.contains(id) {
                return line_err(no, format!("tamper references unknown file {id:?}"));
            }
            let Ok(index) = index.parse::<usize>() else {
                return line_err(no, format!("bad byte index {index:?}"));
            };
            Ok(ScriptEvent::Tamper {
                id: id.to_string(),
                index,
            })
        }
        other => line_err(no, format!("unknown statement {other:?}")),
    }
}
