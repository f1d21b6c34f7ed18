//! Syntax of global protocols: well-formedness, substitution, lazy recursion
//! unfolding, congruence-aware redex enumeration and parallel decomposition.
//!
//! The congruence axioms (fork commutativity/associativity/identity, active
//! node distribution and permutation, recursion unfolding) are never applied
//! eagerly. Redex enumeration and decomposition unfold a recursion exactly
//! when an active node blocks on it, which keeps every operation terminating
//! for guarded protocols.

use std::fmt;

use thiserror::Error;

use crate::state::{Condition, NodeId};

/// Label of a synchronisation action.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionLabel(String);

impl ActionLabel {
    /// Creates a label. Panics unless the name is a nonempty identifier over
    /// `[A-Za-z0-9_]`.
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(
            !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
            "action label must be a nonempty identifier: {name:?}"
        );
        ActionLabel(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Target of a synchronisation action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// All nodes powered by the enabler (broadcast, glyph `*`).
    Children,
    /// The power provider of the enabler (glyph `^`).
    Parent,
    /// One neighbor of the enabler (glyph `>`).
    Neighbor,
    /// The enabler itself: a local computation step (glyph `@`).
    SelfLoop,
}

impl Direction {
    pub fn glyph(self) -> char {
        match self {
            Direction::Children => '*',
            Direction::Parent => '^',
            Direction::Neighbor => '>',
            Direction::SelfLoop => '@',
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, Direction::Parent | Direction::Neighbor)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.glyph())
    }
}

/// Recursion variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecVar(String);

impl RecVar {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "recursion variable must be nonempty");
        RecVar(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RecVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One synchronisation action: label, direction, enabler condition `o`,
/// reactor condition `i`, continuation protocol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SyncAction {
    pub label: ActionLabel,
    pub dir: Direction,
    pub out_cond: Condition,
    pub in_cond: Condition,
    pub cont: Protocol,
}

/// Nonempty alternative of synchronisation actions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Summation {
    branches: Vec<SyncAction>,
}

impl Summation {
    /// Panics on an empty branch list; the syntax has no empty summation.
    pub fn new(branches: Vec<SyncAction>) -> Self {
        assert!(
            !branches.is_empty(),
            "summation must have at least one branch"
        );
        Summation { branches }
    }

    pub fn branches(&self) -> &[SyncAction] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<SyncAction> {
        self.branches
    }
}

/// A global protocol term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Nil,
    Fork(Box<Protocol>, Box<Protocol>),
    Rec(RecVar, Box<Protocol>),
    Var(RecVar),
    Sum(Summation),
    Active(NodeId, Box<Protocol>),
}

impl Protocol {
    pub fn fork(left: Protocol, right: Protocol) -> Protocol {
        Protocol::Fork(Box::new(left), Box::new(right))
    }

    pub fn rec(var: RecVar, body: Protocol) -> Protocol {
        Protocol::Rec(var, Box::new(body))
    }

    pub fn active(id: NodeId, body: Protocol) -> Protocol {
        Protocol::Active(id, Box::new(body))
    }

    pub fn sum(branches: Vec<SyncAction>) -> Protocol {
        Protocol::Sum(Summation::new(branches))
    }

    /// Wraps `body` in active-node constructs for every id, first id outermost.
    pub fn activate_all(ids: &[NodeId], body: Protocol) -> Protocol {
        ids.iter()
            .rev()
            .fold(body, |acc, id| Protocol::active(id.clone(), acc))
    }

    /// All action labels occurring in the term, in syntactic order.
    pub fn labels(&self) -> Vec<ActionLabel> {
        let mut out = Vec::new();
        collect_labels(self, &mut out);
        out
    }
}

fn collect_labels(p: &Protocol, out: &mut Vec<ActionLabel>) {
    match p {
        Protocol::Nil | Protocol::Var(_) => {}
        Protocol::Fork(l, r) => {
            collect_labels(l, out);
            collect_labels(r, out);
        }
        Protocol::Rec(_, body) => collect_labels(body, out),
        Protocol::Active(_, body) => collect_labels(body, out),
        Protocol::Sum(s) => {
            for b in s.branches() {
                out.push(b.label.clone());
                collect_labels(&b.cont, out);
            }
        }
    }
}

/// Violations reported by the well-formedness checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnguardedRecursion(RecVar),
    DuplicateLabel(ActionLabel),
    DuplicateBinder(RecVar),
    UnboundVariable(RecVar),
    ActiveInsideRec(NodeId),
    ActiveBelowTop(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnguardedRecursion(x) => {
                write!(f, "recursion variable {x} occurs unguarded")
            }
            Violation::DuplicateLabel(l) => write!(f, "action label {l} is not unique"),
            Violation::DuplicateBinder(x) => {
                write!(f, "recursion binder {x} is used more than once")
            }
            Violation::UnboundVariable(x) => write!(f, "recursion variable {x} is unbound"),
            Violation::ActiveInsideRec(id) => {
                write!(f, "active node <{id}> appears inside a recursion body")
            }
            Violation::ActiveBelowTop(id) => write!(
                f,
                "active node <{id}> is only allowed as a top-level prefix in a static protocol"
            ),
        }
    }
}

/// Checks a user-supplied static protocol: guarded recursion, globally unique
/// action labels and recursion binders, bound variables, and active nodes
/// only as a top-level prefix chain.
pub fn well_formed(p: &Protocol) -> Vec<Violation> {
    check(p, true)
}

/// Like [`well_formed`] but allows active nodes anywhere outside recursion
/// bodies, which is where reduction legitimately moves them.
pub fn well_formed_runtime(p: &Protocol) -> Vec<Violation> {
    check(p, false)
}

fn check(p: &Protocol, static_placement: bool) -> Vec<Violation> {
    let mut violations = Vec::new();

    // label uniqueness on the static text
    let labels = p.labels();
    let mut seen = std::collections::BTreeSet::new();
    for label in labels {
        if !seen.insert(label.clone()) {
            let dup = Violation::DuplicateLabel(label);
            if !violations.contains(&dup) {
                violations.push(dup);
            }
        }
    }

    // binder distinctness
    let mut binders = Vec::new();
    collect_binders(p, &mut binders);
    let mut seen_binders = std::collections::BTreeSet::new();
    for binder in binders {
        if !seen_binders.insert(binder.clone()) {
            let dup = Violation::DuplicateBinder(binder);
            if !violations.contains(&dup) {
                violations.push(dup);
            }
        }
    }

    let mut scope = Vec::new();
    check_structure(
        p,
        &mut scope,
        false,
        static_placement,
        true,
        &mut violations,
    );
    violations
}

fn collect_binders(p: &Protocol, out: &mut Vec<RecVar>) {
    match p {
        Protocol::Nil | Protocol::Var(_) => {}
        Protocol::Fork(l, r) => {
            collect_binders(l, out);
            collect_binders(r, out);
        }
        Protocol::Rec(x, body) => {
            out.push(x.clone());
            collect_binders(body, out);
        }
        Protocol::Active(_, body) => collect_binders(body, out),
        Protocol::Sum(s) => {
            for b in s.branches() {
                collect_binders(&b.cont, out);
            }
        }
    }
}

/// Single traversal for binding, guardedness and active-node placement.
/// `scope` holds (binder, guarded-since-binding) pairs; entering an action
/// continuation marks every open binder as guarded. `top_prefix` is true
/// while we are still on the initial chain of active nodes of a static term.
fn check_structure(
    p: &Protocol,
    scope: &mut Vec<(RecVar, bool)>,
    inside_rec: bool,
    static_placement: bool,
    top_prefix: bool,
    out: &mut Vec<Violation>,
) {
    match p {
        Protocol::Nil => {}
        Protocol::Var(x) => match scope.iter().rev().find(|(v, _)| v == x) {
            None => out.push(Violation::UnboundVariable(x.clone())),
            Some((_, guarded)) => {
                if !guarded {
                    let v = Violation::UnguardedRecursion(x.clone());
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        },
        Protocol::Fork(l, r) => {
            check_structure(l, scope, inside_rec, static_placement, false, out);
            check_structure(r, scope, inside_rec, static_placement, false, out);
        }
        Protocol::Rec(x, body) => {
            scope.push((x.clone(), false));
            check_structure(body, scope, true, static_placement, false, out);
            scope.pop();
        }
        Protocol::Active(id, body) => {
            if inside_rec {
                out.push(Violation::ActiveInsideRec(id.clone()));
            } else if static_placement && !top_prefix {
                out.push(Violation::ActiveBelowTop(id.clone()));
            }
            check_structure(body, scope, inside_rec, static_placement, top_prefix, out);
        }
        Protocol::Sum(s) => {
            for branch in s.branches() {
                // the action guards every recursion variable opened so far
                let mut guarded_scope: Vec<(RecVar, bool)> =
                    scope.iter().map(|(v, _)| (v.clone(), true)).collect();
                check_structure(
                    &branch.cont,
                    &mut guarded_scope,
                    inside_rec,
                    static_placement,
                    false,
                    out,
                );
            }
        }
    }
}

/// Replaces every free occurrence of `x` in `p` by `q`. Binders are distinct
/// in well-formed protocols, so no capture can occur; shadowing is still
/// respected.
pub fn substitute(p: &Protocol, x: &RecVar, q: &Protocol) -> Protocol {
    match p {
        Protocol::Nil => Protocol::Nil,
        Protocol::Var(y) => {
            if y == x {
                q.clone()
            } else {
                p.clone()
            }
        }
        Protocol::Fork(l, r) => Protocol::fork(substitute(l, x, q), substitute(r, x, q)),
        Protocol::Rec(y, body) => {
            if y == x {
                p.clone()
            } else {
                Protocol::rec(y.clone(), substitute(body, x, q))
            }
        }
        Protocol::Active(id, body) => Protocol::active(id.clone(), substitute(body, x, q)),
        Protocol::Sum(s) => Protocol::Sum(Summation::new(
            s.branches()
                .iter()
                .map(|b| SyncAction {
                    label: b.label.clone(),
                    dir: b.dir,
                    out_cond: b.out_cond.clone(),
                    in_cond: b.in_cond.clone(),
                    cont: substitute(&b.cont, x, q),
                })
                .collect(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("term is not a recursion")]
pub struct NotARecursion;

/// One-step unfolding of a recursion: `rec X.P` becomes `P[rec X.P / X]`.
pub fn unfold(p: &Protocol) -> Result<Protocol, NotARecursion> {
    match p {
        Protocol::Rec(x, body) => Ok(substitute(body, x, p)),
        _ => Err(NotARecursion),
    }
}

/// A step on the path from the root of a protocol term to a summation.
/// `UnfoldRec` records that the recursion at this position was unfolded once
/// while searching for the summation, so replaying the path rewrites the
/// term deterministically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathStep {
    ForkLeft,
    ForkRight,
    ActiveBody,
    UnfoldRec,
    /// Descend into the continuation of the given summation branch.
    IntoBranch(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<PathStep>);

/// A reducible position: an active node `enabler` facing one branch of a
/// summation, addressed positionally so the semantics can rewrite in place.
/// Condition checks happen later, against a concrete network state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redex {
    pub path: Path,
    pub enabler: NodeId,
    pub branch_index: usize,
    pub action: SyncAction,
}

// Guardedness bounds consecutive unfoldings; this trips only on protocols
// that violate the documented precondition (e.g. `rec X.X`).
const UNFOLD_FUEL: usize = 10_000;

/// Enumerates every (enabler, branch) pair reachable by congruence
/// rewriting: active ids collected along the spine distribute over forks,
/// recursions unfold lazily when an active id blocks on them, and each
/// summation yields one redex per active id and branch before the search
/// continues inside the branch continuations.
pub fn enumerate_redexes(p: &Protocol) -> Vec<Redex> {
    let mut out = Vec::new();
    walk_redexes(p, &mut Vec::new(), &mut Vec::new(), &mut out, UNFOLD_FUEL);
    out
}

fn walk_redexes(
    p: &Protocol,
    actives: &mut Vec<NodeId>,
    path: &mut Vec<PathStep>,
    out: &mut Vec<Redex>,
    fuel: usize,
) {
    match p {
        Protocol::Nil | Protocol::Var(_) => {}
        Protocol::Active(id, body) => {
            actives.push(id.clone());
            path.push(PathStep::ActiveBody);
            walk_redexes(body, actives, path, out, fuel);
            path.pop();
            actives.pop();
        }
        Protocol::Fork(l, r) => {
            path.push(PathStep::ForkLeft);
            walk_redexes(l, actives, path, out, fuel);
            path.pop();
            path.push(PathStep::ForkRight);
            walk_redexes(r, actives, path, out, fuel);
            path.pop();
        }
        Protocol::Rec(..) => {
            // Without an active id in scope a recursion holds no redexes:
            // well-formed bodies are active-free.
            if !actives.is_empty() {
                assert!(
                    fuel > 0,
                    "unfold budget exhausted: recursion is not guarded"
                );
                let unfolded = unfold(p).expect("Rec node unfolds");
                path.push(PathStep::UnfoldRec);
                walk_redexes(&unfolded, actives, path, out, fuel - 1);
                path.pop();
            }
        }
        Protocol::Sum(s) => {
            for (branch_index, branch) in s.branches().iter().enumerate() {
                for enabler in actives.iter() {
                    out.push(Redex {
                        path: Path(path.clone()),
                        enabler: enabler.clone(),
                        branch_index,
                        action: branch.clone(),
                    });
                }
            }
            // Reduction may continue behind an already-performed action;
            // active ids do not cross the summation boundary.
            for (branch_index, branch) in s.branches().iter().enumerate() {
                path.push(PathStep::IntoBranch(branch_index));
                let mut inner_actives = Vec::new();
                walk_redexes(&branch.cont, &mut inner_actives, path, out, fuel);
                path.pop();
            }
        }
    }
}

/// Rewrites `p` by firing `redex`: the enabler's active binder is consumed,
/// the fired branch's continuation is wrapped in active nodes for every
/// reactor, and the summation itself (including the fired prefix) survives.
/// Unfoldings recorded on the path are materialized.
///
/// Panics if the path does not address a summation in `p`; redexes are only
/// valid against the exact term they were enumerated from.
pub(crate) fn apply_redex(p: &Protocol, redex: &Redex, reactors: &[NodeId]) -> Protocol {
    rewrite(p, &redex.path.0, &mut Vec::new(), redex, reactors)
}

fn rewrite(
    p: &Protocol,
    path: &[PathStep],
    pending: &mut Vec<NodeId>,
    redex: &Redex,
    reactors: &[NodeId],
) -> Protocol {
    match path.split_first() {
        None => {
            let Protocol::Sum(s) = p else {
                panic!("redex path does not address a summation");
            };
            let mut branches = s.branches().to_vec();
            let branch = &mut branches[redex.branch_index];
            branch.cont = Protocol::activate_all(reactors, branch.cont.clone());
            let fired = Protocol::Sum(Summation::new(branches));
            // consume one occurrence of the enabler; re-wrap the rest
            let pos = pending
                .iter()
                .position(|id| *id == redex.enabler)
                .expect("enabler is active over the summation");
            let mut remaining = pending.clone();
            remaining.remove(pos);
            Protocol::activate_all(&remaining, fired)
        }
        Some((step, rest)) => match (step, p) {
            (PathStep::ActiveBody, Protocol::Active(id, body)) => {
                pending.push(id.clone());
                rewrite(body, rest, pending, redex, reactors)
            }
            (PathStep::ForkLeft, Protocol::Fork(l, r)) => {
                // the untouched side keeps the binders collected so far
                let right = Protocol::activate_all(pending, (**r).clone());
                Protocol::fork(rewrite(l, rest, pending, redex, reactors), right)
            }
            (PathStep::ForkRight, Protocol::Fork(l, r)) => {
                let left = Protocol::activate_all(pending, (**l).clone());
                Protocol::fork(left, rewrite(r, rest, pending, redex, reactors))
            }
            (PathStep::UnfoldRec, Protocol::Rec(..)) => {
                let unfolded = unfold(p).expect("Rec node unfolds");
                rewrite(&unfolded, rest, pending, redex, reactors)
            }
            (PathStep::IntoBranch(i), Protocol::Sum(s)) => {
                let mut branches = s.branches().to_vec();
                let mut inner_pending = Vec::new();
                branches[*i].cont = rewrite(
                    &branches[*i].cont,
                    rest,
                    &mut inner_pending,
                    redex,
                    reactors,
                );
                Protocol::activate_all(pending, Protocol::Sum(Summation::new(branches)))
            }
            _ => panic!("redex path does not match term structure"),
        },
    }
}

/// One component of the parallel normal form: a summation under a multiset
/// of active node ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParComponent {
    /// Sorted multiset of active ids scoping the summation.
    pub actives: Vec<NodeId>,
    pub summation: Summation,
}

/// Decomposes a protocol into parallel active-scoped summations, unfolding
/// recursion only where it blocks the decomposition. Requires guarded
/// recursion. [`recompose`] of the result is congruent to the input.
pub fn decompose(p: &Protocol) -> Vec<ParComponent> {
    let mut out = Vec::new();
    split(p, &Vec::new(), &mut out, UNFOLD_FUEL);
    out
}

fn split(p: &Protocol, actives: &[NodeId], out: &mut Vec<ParComponent>, fuel: usize) {
    match p {
        Protocol::Nil => {}
        // Free variables cannot occur in closed guarded protocols; there is
        // nothing meaningful to decompose them into.
        Protocol::Var(_) => {}
        Protocol::Fork(l, r) => {
            split(l, actives, out, fuel);
            split(r, actives, out, fuel);
        }
        Protocol::Active(id, body) => {
            let mut inner = actives.to_vec();
            inner.push(id.clone());
            split(body, &inner, out, fuel);
        }
        Protocol::Rec(..) => {
            assert!(
                fuel > 0,
                "unfold budget exhausted: recursion is not guarded"
            );
            let unfolded = unfold(p).expect("Rec node unfolds");
            split(&unfolded, actives, out, fuel - 1);
        }
        Protocol::Sum(s) => {
            let mut sorted = actives.to_vec();
            sorted.sort();
            out.push(ParComponent {
                actives: sorted,
                summation: s.clone(),
            });
        }
    }
}

/// Parallel composition of the components, each summation wrapped in its
/// active ids. The empty list recomposes to the terminated protocol.
pub fn recompose(components: &[ParComponent]) -> Protocol {
    let mut terms: Vec<Protocol> = components
        .iter()
        .map(|c| Protocol::activate_all(&c.actives, Protocol::Sum(c.summation.clone())))
        .collect();
    match terms.pop() {
        None => Protocol::Nil,
        Some(last) => terms
            .into_iter()
            .rev()
            .fold(last, |acc, t| Protocol::fork(t, acc)),
    }
}

/// Axioms-only normal form used to compare protocol terms during state
/// deduplication: forks are flattened with units dropped, active ids are
/// pushed down to their components and sorted, summation branches are
/// ordered, components are ordered. Recursion is never unfolded; bodies are
/// normalized structurally and otherwise compared as written.
pub fn canonical_protocol(p: &Protocol) -> Protocol {
    let mut components = Vec::new();
    canonical_components(p, &Vec::new(), &mut components);
    components.sort();
    let mut terms: Vec<Protocol> = components
        .into_iter()
        .map(|(actives, body)| Protocol::activate_all(&actives, body))
        .collect();
    match terms.pop() {
        None => Protocol::Nil,
        Some(last) => terms
            .into_iter()
            .rev()
            .fold(last, |acc, t| Protocol::fork(t, acc)),
    }
}

fn canonical_components(p: &Protocol, actives: &[NodeId], out: &mut Vec<(Vec<NodeId>, Protocol)>) {
    match p {
        Protocol::Nil => {}
        Protocol::Fork(l, r) => {
            canonical_components(l, actives, out);
            canonical_components(r, actives, out);
        }
        Protocol::Active(id, body) => {
            let mut inner = actives.to_vec();
            inner.push(id.clone());
            canonical_components(body, &inner, out);
        }
        Protocol::Rec(x, body) => {
            let mut sorted = actives.to_vec();
            sorted.sort();
            out.push((sorted, Protocol::rec(x.clone(), canonical_protocol(body))));
        }
        Protocol::Var(x) => {
            let mut sorted = actives.to_vec();
            sorted.sort();
            out.push((sorted, Protocol::Var(x.clone())));
        }
        Protocol::Sum(s) => {
            let mut branches: Vec<SyncAction> = s
                .branches()
                .iter()
                .map(|b| SyncAction {
                    label: b.label.clone(),
                    dir: b.dir,
                    out_cond: b.out_cond.clone(),
                    in_cond: b.in_cond.clone(),
                    cont: canonical_protocol(&b.cont),
                })
                .collect();
            branches.sort();
            let mut sorted = actives.to_vec();
            sorted.sort();
            out.push((sorted, Protocol::Sum(Summation::new(branches))));
        }
    }
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_protocol(self, f)
    }
}

fn write_protocol(p: &Protocol, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Protocol::Fork(l, r) => {
            write_fork_operand(l, f)?;
            write!(f, " | ")?;
            write_fork_operand(r, f)
        }
        Protocol::Sum(s) => write_sum(s, f),
        _ => write_prefix(p, f),
    }
}

fn write_fork_operand(p: &Protocol, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Protocol::Fork(..) => write_protocol(p, f),
        Protocol::Sum(s) if s.branches().len() > 1 => write_sum(s, f),
        _ => write_prefix(p, f),
    }
}

fn write_sum(s: &Summation, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, branch) in s.branches().iter().enumerate() {
        if i > 0 {
            write!(f, " + ")?;
        }
        write_action(branch, f)?;
    }
    Ok(())
}

fn write_action(a: &SyncAction, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(
        f,
        "{}{}[o: {}][i: {}].",
        a.label, a.dir, a.out_cond, a.in_cond
    )?;
    write_atom(&a.cont, f)
}

fn write_prefix(p: &Protocol, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Protocol::Nil => write!(f, "0"),
        Protocol::Var(x) => write!(f, "{x}"),
        Protocol::Rec(x, body) => {
            write!(f, "rec {x}.")?;
            write_atom(body, f)
        }
        Protocol::Active(id, body) => {
            write!(f, "<{id}>")?;
            write_atom(body, f)
        }
        Protocol::Sum(s) if s.branches().len() == 1 => write_sum(s, f),
        Protocol::Sum(_) | Protocol::Fork(..) => {
            write!(f, "(")?;
            write_protocol(p, f)?;
            write!(f, ")")
        }
    }
}

fn write_atom(p: &Protocol, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Protocol::Nil | Protocol::Var(_) => write_prefix(p, f),
        _ => {
            write!(f, "(")?;
            write_protocol(p, f)?;
            write!(f, ")")
        }
    }
}
