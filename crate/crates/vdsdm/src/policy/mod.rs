//! Access policies: AST, text parser, LSSS compiler, satisfaction
//! check and reconstruction coefficients.
//!
//! Policy text grammar (case-sensitive keywords, AND binds tighter
//! than OR):
//!
//! ```text
//! expr   := term ("OR" term)*
//! term   := factor ("AND" factor)*
//! factor := ATTR | K"-of-(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! `2-of-(a, b, c)` is a threshold gate: any 2 of the 3 branches.
//! Attribute names may contain any characters except whitespace,
//! parentheses, commas and double quotes, and may not be the keywords
//! `AND` / `OR`.
//!
//! [`compile_lsss`] turns an AST into a linear secret-sharing program:
//! a matrix `M` (one row per leaf) and a row-to-attribute map `ρ`,
//! such that the rows labeled by a satisfying attribute set — and only
//! those — span the target vector (1, 0, …, 0).

mod enumerate;
mod lsss;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use enumerate::enumerate_policies;
pub use lsss::{
    compile_lsss, reconstruction_coeffs, share_secret, share_with_vector, LsssProgram,
    ReconstructionCoeffs, ShareVector,
};
pub use parse::{parse_policy, parse_policy_with};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("empty policy")]
    Empty,
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("invalid attribute name {0:?}")]
    BadAttribute(String),
    #[error("threshold k={k} out of range for {arity} branches")]
    BadThreshold { k: usize, arity: usize },
    #[error("gate with no branches")]
    EmptyGate,
    #[error("policy deeper than {0} levels")]
    TooDeep(usize),
    #[error("policy has more than {0} leaves")]
    TooManyLeaves(usize),
    #[error("gate with more than {0} branches")]
    TooWide(usize),
    #[error("share vector has length {got}, program width is {want}")]
    BadVectorLength { got: usize, want: usize },
    #[error("attribute {0:?} appears in more than one leaf (one-use mode)")]
    RepeatedAttribute(String),
}

/// Structural bounds enforced on parsed or validated policies.
#[derive(Clone, Copy, Debug)]
pub struct PolicyLimits {
    pub max_depth: usize,
    pub max_leaves: usize,
    pub max_arity: usize,
}

impl Default for PolicyLimits {
    fn default() -> Self {
        PolicyLimits {
            max_depth: 64,
            max_leaves: 1024,
            max_arity: 255,
        }
    }
}

/// A monotone access policy over attribute names.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PolicyAst {
    /// Satisfied iff the attribute is held.
    Leaf(String),
    /// Satisfied iff every branch is satisfied.
    And(Vec<PolicyAst>),
    /// Satisfied iff at least one branch is satisfied.
    Or(Vec<PolicyAst>),
    /// Satisfied iff at least `k` branches are satisfied.
    Threshold { k: usize, children: Vec<PolicyAst> },
}

impl PolicyAst {
    pub fn leaf(name: impl Into<String>) -> Self {
        PolicyAst::Leaf(name.into())
    }

    /// True iff `name` is acceptable as an attribute: nonempty, no
    /// whitespace / parentheses / commas / quotes, not a keyword.
    pub fn valid_attribute(name: &str) -> bool {
        !name.is_empty()
            && name != "AND"
            && name != "OR"
            && !name
                .chars()
                .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"'))
    }

    /// Check the structural invariants under the given bounds. Parsed
    /// policies already satisfy this; call it on hand-built ASTs.
    pub fn validate(&self, limits: &PolicyLimits) -> Result<(), PolicyError> {
        if self.leaf_count() > limits.max_leaves {
            return Err(PolicyError::TooManyLeaves(limits.max_leaves));
        }
        self.validate_node(limits, 1)
    }

    fn validate_node(&self, limits: &PolicyLimits, depth: usize) -> Result<(), PolicyError> {
        if depth > limits.max_depth {
            return Err(PolicyError::TooDeep(limits.max_depth));
        }
        let children = match self {
            PolicyAst::Leaf(name) => {
                if !Self::valid_attribute(name) {
                    return Err(PolicyError::BadAttribute(name.clone()));
                }
                return Ok(());
            }
            PolicyAst::And(c) | PolicyAst::Or(c) => c,
            PolicyAst::Threshold { k, children } => {
                if *k == 0 || *k > children.len() {
                    return Err(PolicyError::BadThreshold {
                        k: *k,
                        arity: children.len(),
                    });
                }
                children
            }
        };
        if children.is_empty() {
            return Err(PolicyError::EmptyGate);
        }
        if children.len() > limits.max_arity {
            return Err(PolicyError::TooWide(limits.max_arity));
        }
        for c in children {
            c.validate_node(limits, depth + 1)?;
        }
        Ok(())
    }

    /// Does the attribute set satisfy the policy? Pure boolean
    /// evaluation, independent of the LSSS compilation.
    pub fn satisfies(&self, attrs: &BTreeSet<String>) -> bool {
        match self {
            PolicyAst::Leaf(name) => attrs.contains(name),
            PolicyAst::And(c) => c.iter().all(|n| n.satisfies(attrs)),
            PolicyAst::Or(c) => c.iter().any(|n| n.satisfies(attrs)),
            PolicyAst::Threshold { k, children } => {
                children.iter().filter(|n| n.satisfies(attrs)).count() >= *k
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PolicyAst::Leaf(_) => 1,
            PolicyAst::And(c) | PolicyAst::Or(c) => c.iter().map(|n| n.leaf_count()).sum(),
            PolicyAst::Threshold { children, .. } => {
                children.iter().map(|n| n.leaf_count()).sum()
            }
        }
    }

    /// Distinct attribute names referenced by leaves.
    pub fn attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_attributes(&mut out);
        out
    }

    fn collect_attributes(&self, out: &mut BTreeSet<String>) {
        match self {
            PolicyAst::Leaf(name) => {
                out.insert(name.clone());
            }
            PolicyAst::And(c) | PolicyAst::Or(c) => {
                c.iter().for_each(|n| n.collect_attributes(out))
            }
            PolicyAst::Threshold { children, .. } => {
                children.iter().for_each(|n| n.collect_attributes(out))
            }
        }
    }

    /// First attribute appearing in more than one leaf, if any.
    pub fn repeated_attribute(&self) -> Option<String> {
        let mut seen = BTreeSet::new();
        self.find_repeat(&mut seen)
    }

    fn find_repeat(&self, seen: &mut BTreeSet<String>) -> Option<String> {
        match self {
            PolicyAst::Leaf(name) => {
                if !seen.insert(name.clone()) {
                    Some(name.clone())
                } else {
                    None
                }
            }
            PolicyAst::And(c) | PolicyAst::Or(c) => c.iter().find_map(|n| n.find_repeat(seen)),
            PolicyAst::Threshold { children, .. } => {
                children.iter().find_map(|n| n.find_repeat(seen))
            }
        }
    }
}

impl fmt::Display for PolicyAst {
    /// Fully parenthesized text form; parses back to the same AST.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyAst::Leaf(name) => f.write_str(name),
            PolicyAst::And(c) => write_gate(f, c, " AND "),
            PolicyAst::Or(c) => write_gate(f, c, " OR "),
            PolicyAst::Threshold { k, children } => {
                write!(f, "{k}-of-(")?;
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{child}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_gate(f: &mut fmt::Formatter<'_>, children: &[PolicyAst], sep: &str) -> fmt::Result {
    if children.len() == 1 {
        return write!(f, "{}", children[0]);
    }
    f.write_str("(")?;
    for (i, child) in children.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{child}")?;
    }
    f.write_str(")")
}
