//! Exhaustive enumeration of small policies in canonical form, used by
//! the test suites to sweep every distinct access structure up to a
//! size bound.

use super::PolicyAst;

/// Enumerate every canonical policy with at most `max_leaves` leaves
/// over the given attribute pool.
///
/// Canonical form means each policy family is produced exactly once:
///
/// * gate branches are sorted by their text form, so commuted variants
///   coincide;
/// * And/Or gates are n-ary and flattened — a branch never repeats its
///   parent's gate (nested associative variants coincide);
/// * threshold gates carry `2 ≤ k < arity` (so arity ≥ 3); `k = 1` and
///   `k = arity` are already covered by Or and And.
///
/// Leaves may repeat attributes (`a AND a` is a valid, distinct
/// policy). Output is ordered by leaf count, then deterministically
/// within each count.
pub fn enumerate_policies(max_leaves: usize, attrs: &[&str]) -> Vec<PolicyAst> {
    let mut names: Vec<&str> = attrs.to_vec();
    names.sort_unstable();
    names.dedup();

    // entries[n] = canonical policies with exactly n leaves, each with
    // its text form and root discriminant cached.
    let mut entries: Vec<Vec<Entry>> = vec![Vec::new(); max_leaves.max(1) + 1];
    entries[1] = names
        .iter()
        .map(|&a| Entry::new(PolicyAst::Leaf(a.to_string())))
        .collect();

    for n in 2..=max_leaves {
        // Pool of candidate branches (every policy smaller than n),
        // sorted by text so multiset choices come out sorted.
        let mut pool: Vec<Entry> = entries[1..n].iter().flatten().cloned().collect();
        pool.sort_by(|a, b| a.text.cmp(&b.text));
        let mut out = Vec::new();
        let mut picks = Vec::new();
        choose_branches(&pool, 0, n, &mut picks, &mut out);
        entries[n] = out;
    }

    entries
        .into_iter()
        .skip(1)
        .flatten()
        .map(|e| e.ast)
        .collect()
}

#[derive(Clone)]
struct Entry {
    ast: PolicyAst,
    text: String,
    leaves: usize,
    root: Root,
}

#[derive(Clone, Copy, PartialEq)]
enum Root {
    Leaf,
    And,
    Or,
    Threshold,
}

impl Entry {
    fn new(ast: PolicyAst) -> Self {
        let root = match &ast {
            PolicyAst::Leaf(_) => Root::Leaf,
            PolicyAst::And(_) => Root::And,
            PolicyAst::Or(_) => Root::Or,
            PolicyAst::Threshold { .. } => Root::Threshold,
        };
        Entry {
            text: ast.to_string(),
            leaves: ast.leaf_count(),
            root,
            ast,
        }
    }
}

/// Depth-first choice of a non-decreasing branch multiset with leaf
/// counts summing exactly to the budget; emits every gate the multiset
/// supports.
fn choose_branches(
    pool: &[Entry],
    start: usize,
    budget: usize,
    picks: &mut Vec<usize>,
    out: &mut Vec<Entry>,
) {
    if budget == 0 {
        if picks.len() >= 2 {
            emit_gates(pool, picks, out);
        }
        return;
    }
    for i in start..pool.len() {
        if pool[i].leaves <= budget {
            picks.push(i);
            choose_branches(pool, i, budget - pool[i].leaves, picks, out);
            picks.pop();
        }
    }
}

fn emit_gates(pool: &[Entry], picks: &[usize], out: &mut Vec<Entry>) {
    let children: Vec<PolicyAst> = picks.iter().map(|&i| pool[i].ast.clone()).collect();
    if picks.iter().all(|&i| pool[i].root != Root::And) {
        out.push(Entry::new(PolicyAst::And(children.clone())));
    }
    if picks.iter().all(|&i| pool[i].root != Root::Or) {
        out.push(Entry::new(PolicyAst::Or(children.clone())));
    }
    for k in 2..children.len() {
        out.push(Entry::new(PolicyAst::Threshold {
            k,
            children: children.clone(),
        }));
    }
}
