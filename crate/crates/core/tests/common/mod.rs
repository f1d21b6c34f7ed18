//! Shared test machinery: random term generators and single-axiom
//! rewriters for the structural congruences of both languages.

#![allow(dead_code)]

use proptest::prelude::*;

use gridproto::dist::{Choice, Definition, Reaction};
use gridproto::global::{unfold, ActionLabel, Direction, Protocol, RecVar, Summation, SyncAction};
use gridproto::state::{CmpOp, Condition, Expr, Field, NetworkState, NodeId, NodeState, ParentRef};

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

pub fn arb_direction() -> impl Strategy<Value = Direction> {
    prop_oneof![
        Just(Direction::Children),
        Just(Direction::Parent),
        Just(Direction::Neighbor),
        Just(Direction::SelfLoop),
    ]
}

fn arb_numeric_field() -> impl Strategy<Value = Field> {
    prop_oneof![
        Just(Field::LinkStatus),
        Just(Field::Capacity),
        Just(Field::ActiveLinks),
        Just(Field::FaultyLinks),
    ]
}

fn arb_cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
    ]
}

pub fn arb_condition() -> impl Strategy<Value = Condition> {
    let leaf = prop_oneof![
        2 => Just(Condition::True),
        1 => Just(Condition::False),
        4 => (arb_numeric_field(), arb_cmp_op(), 0u64..3).prop_map(|(f, op, n)| {
            Condition::cmp(Expr::Field(f), op, Expr::Nat(n))
        }),
        1 => prop_oneof![Just(Expr::Disconnected), Just(Expr::Top)].prop_map(|rhs| {
            Condition::cmp(Expr::Field(Field::Parent), CmpOp::Eq, rhs)
        }),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Condition::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Condition::or(a, b)),
            inner.prop_map(Condition::not),
        ]
    })
}

/// Unlabelled protocol shape; materialized into a well-formed static
/// protocol with fresh labels and binders.
#[derive(Clone, Debug)]
pub enum Shape {
    Nil,
    Fork(Box<Shape>, Box<Shape>),
    Rec(Box<Shape>),
    VarRef,
    Sum(Vec<(Condition, Condition, Direction, Box<Shape>)>),
}

pub fn arb_shape() -> impl Strategy<Value = Shape> {
    let leaf = prop_oneof![
        1 => Just(Shape::Nil),
        2 => Just(Shape::VarRef),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        let branch = (
            arb_condition(),
            arb_condition(),
            arb_direction(),
            inner.clone(),
        )
            .prop_map(|(o, i, d, cont)| (o, i, d, Box::new(cont)));
        prop_oneof![
            3 => prop::collection::vec(branch, 1..3).prop_map(Shape::Sum),
            1 => (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Shape::Fork(Box::new(l), Box::new(r))),
            1 => inner.prop_map(|b| Shape::Rec(Box::new(b))),
        ]
    })
}

/// Turns a shape into a well-formed static protocol: labels and binders are
/// numbered off, and a variable reference resolves to the innermost guarded
/// binder (or terminates when none is in scope).
pub fn materialize(shape: &Shape) -> Protocol {
    let mut labels = 0usize;
    let mut binders = 0usize;
    fn walk(
        shape: &Shape,
        labels: &mut usize,
        binders: &mut usize,
        scope: &[(String, bool)],
    ) -> Protocol {
        match shape {
            Shape::Nil => Protocol::Nil,
            Shape::Fork(l, r) => Protocol::fork(
                walk(l, labels, binders, scope),
                walk(r, labels, binders, scope),
            ),
            Shape::Rec(body) => {
                let name = format!("X{}", *binders);
                *binders += 1;
                let mut inner: Vec<(String, bool)> = scope.to_vec();
                inner.push((name.clone(), false));
                Protocol::rec(RecVar::new(name), walk(body, labels, binders, &inner))
            }
            Shape::VarRef => match scope.iter().rev().find(|(_, guarded)| *guarded) {
                Some((name, _)) => Protocol::Var(RecVar::new(name.clone())),
                None => Protocol::Nil,
            },
            Shape::Sum(branches) => {
                let mut out = Vec::new();
                for (o, i, dir, cont) in branches {
                    let label = format!("a{}", *labels);
                    *labels += 1;
                    let guarded: Vec<(String, bool)> =
                        scope.iter().map(|(n, _)| (n.clone(), true)).collect();
                    out.push(SyncAction {
                        label: ActionLabel::new(label),
                        dir: *dir,
                        out_cond: o.clone(),
                        in_cond: i.clone(),
                        cont: walk(cont, labels, binders, &guarded),
                    });
                }
                Protocol::Sum(Summation::new(out))
            }
        }
    }
    walk(shape, &mut labels, &mut binders, &[])
}

/// A well-formed static protocol.
pub fn arb_static_protocol() -> impl Strategy<Value = Protocol> {
    arb_shape().prop_map(|s| materialize(&s))
}

/// A well-formed static protocol whose conditions are biased towards truth,
/// so that configurations built over it actually take steps.
pub fn arb_lively_protocol() -> impl Strategy<Value = Protocol> {
    (arb_shape(), prop::collection::vec(any::<bool>(), 16)).prop_map(|(shape, coins)| {
        let mut index = 0usize;
        let p = materialize(&shape);
        relax_conditions(&p, &coins, &mut index)
    })
}

fn relax(c: &Condition, coins: &[bool], index: &mut usize) -> Condition {
    let coin = coins[*index % coins.len()];
    *index += 1;
    if coin {
        Condition::True
    } else {
        c.clone()
    }
}

fn relax_conditions(p: &Protocol, coins: &[bool], index: &mut usize) -> Protocol {
    match p {
        Protocol::Nil | Protocol::Var(_) => p.clone(),
        Protocol::Fork(l, r) => Protocol::fork(
            relax_conditions(l, coins, index),
            relax_conditions(r, coins, index),
        ),
        Protocol::Rec(x, body) => Protocol::rec(x.clone(), relax_conditions(body, coins, index)),
        Protocol::Active(id, body) => {
            Protocol::active(id.clone(), relax_conditions(body, coins, index))
        }
        Protocol::Sum(s) => Protocol::Sum(Summation::new(
            s.branches()
                .iter()
                .map(|b| SyncAction {
                    label: b.label.clone(),
                    dir: b.dir,
                    out_cond: relax(&b.out_cond, coins, index),
                    in_cond: relax(&b.in_cond, coins, index),
                    cont: relax_conditions(&b.cont, coins, index),
                })
                .collect(),
        )),
    }
}

/// Node identifiers used by generated network states.
pub fn test_ids() -> Vec<NodeId> {
    ["n0", "n1", "n2", "n3"]
        .iter()
        .map(|s| NodeId::new(*s))
        .collect()
}

/// A network state over [`test_ids`]: a supply forest with random tie lines
/// and registers.
pub fn arb_network_state() -> impl Strategy<Value = NetworkState> {
    let ids = test_ids();
    let n = ids.len();
    (
        prop::collection::vec(0usize..=n, n), // parent choice, n = root
        prop::collection::vec(any::<bool>(), n), // link status
        prop::collection::vec((0u64..3, 0u64..3, 0u64..3), n),
        prop::collection::vec(any::<u8>(), n), // neighbor mask bits
    )
        .prop_map(move |(parents, links, counters, masks)| {
            let mut nodes = Vec::new();
            for (i, id) in ids.iter().enumerate() {
                // parent: an earlier node keeps the supply graph a forest
                let parent = if parents[i] >= i {
                    if parents[i] == n || i == 0 {
                        ParentRef::Top
                    } else {
                        ParentRef::Disconnected
                    }
                } else {
                    ParentRef::Station(ids[parents[i]].clone())
                };
                let mut neighbors = std::collections::BTreeSet::new();
                for (j, other) in ids.iter().enumerate() {
                    if j != i && masks[i] & (1 << j) != 0 {
                        neighbors.insert(other.clone());
                    }
                }
                let (k, a, e) = counters[i];
                nodes.push(NodeState {
                    id: id.clone(),
                    parent,
                    link_up: links[i],
                    neighbors,
                    capacity: k,
                    active_links: a.min(k),
                    faulty_links: e.min(k),
                });
            }
            NetworkState::from_nodes(nodes).expect("generated states satisfy the invariants")
        })
}

/// Wraps 1–2 of the test ids around a protocol.
pub fn arb_activation() -> impl Strategy<Value = Vec<NodeId>> {
    let ids = test_ids();
    prop::collection::vec(0..ids.len(), 1..3)
        .prop_map(move |picks| picks.into_iter().map(|i| ids[i].clone()).collect())
}

// ---------------------------------------------------------------------------
// protocol congruence: single-axiom rewriting
// ---------------------------------------------------------------------------

/// All terms reachable from `p` by one application of a congruence axiom at
/// any position: fork commutativity/associativity/identity, active-node
/// distribution/permutation/garbage-collection, summation branch
/// permutation, and one-step recursion unfolding.
pub fn table2_neighbors(p: &Protocol) -> Vec<Protocol> {
    table2_neighbors_with(p, true)
}

/// Like [`table2_neighbors`] but optionally without the unfolding axiom.
pub fn table2_neighbors_with(p: &Protocol, include_unfold: bool) -> Vec<Protocol> {
    let mut out = Vec::new();
    local_axioms(p, include_unfold, &mut out);
    match p {
        Protocol::Nil | Protocol::Var(_) => {}
        Protocol::Fork(l, r) => {
            for l2 in table2_neighbors_with(l, include_unfold) {
                out.push(Protocol::fork(l2, (**r).clone()));
            }
            for r2 in table2_neighbors_with(r, include_unfold) {
                out.push(Protocol::fork((**l).clone(), r2));
            }
        }
        Protocol::Rec(x, body) => {
            for b2 in table2_neighbors_with(body, include_unfold) {
                out.push(Protocol::rec(x.clone(), b2));
            }
        }
        Protocol::Active(id, body) => {
            for b2 in table2_neighbors_with(body, include_unfold) {
                out.push(Protocol::active(id.clone(), b2));
            }
        }
        Protocol::Sum(s) => {
            for (i, branch) in s.branches().iter().enumerate() {
                for c2 in table2_neighbors_with(&branch.cont, include_unfold) {
                    let mut branches = s.branches().to_vec();
                    branches[i].cont = c2;
                    out.push(Protocol::Sum(Summation::new(branches)));
                }
            }
        }
    }
    out
}

fn local_axioms(p: &Protocol, include_unfold: bool, out: &mut Vec<Protocol>) {
    match p {
        Protocol::Fork(l, r) => {
            // commutativity
            out.push(Protocol::fork((**r).clone(), (**l).clone()));
            // associativity, both directions
            if let Protocol::Fork(a, b) = &**l {
                out.push(Protocol::fork(
                    (**a).clone(),
                    Protocol::fork((**b).clone(), (**r).clone()),
                ));
            }
            if let Protocol::Fork(b, c) = &**r {
                out.push(Protocol::fork(
                    Protocol::fork((**l).clone(), (**b).clone()),
                    (**c).clone(),
                ));
            }
            // identity
            if **l == Protocol::Nil {
                out.push((**r).clone());
            }
            if **r == Protocol::Nil {
                out.push((**l).clone());
            }
        }
        Protocol::Active(id, body) => match &**body {
            Protocol::Fork(l, r) => out.push(Protocol::fork(
                Protocol::active(id.clone(), (**l).clone()),
                Protocol::active(id.clone(), (**r).clone()),
            )),
            Protocol::Active(id2, inner) => out.push(Protocol::active(
                id2.clone(),
                Protocol::active(id.clone(), (**inner).clone()),
            )),
            Protocol::Nil => out.push(Protocol::Nil),
            _ => {}
        },
        Protocol::Rec(..) => {
            if include_unfold {
                out.push(unfold(p).expect("Rec unfolds"));
            }
        }
        Protocol::Sum(s) if s.branches().len() > 1 => {
            // adjacent branch transpositions generate every permutation
            for i in 0..s.branches().len() - 1 {
                let mut branches = s.branches().to_vec();
                branches.swap(i, i + 1);
                out.push(Protocol::Sum(Summation::new(branches)));
            }
        }
        _ => {}
    }
    // identity in the expansion direction
    if !matches!(p, Protocol::Nil) {
        out.push(Protocol::fork(p.clone(), Protocol::Nil));
    }
    // distribution in the collection direction
    if let Protocol::Fork(l, r) = p {
        if let (Protocol::Active(id1, a), Protocol::Active(id2, b)) = (&**l, &**r) {
            if id1 == id2 {
                out.push(Protocol::active(
                    id1.clone(),
                    Protocol::fork((**a).clone(), (**b).clone()),
                ));
            }
        }
    }
}

/// Bounded search of the congruence class of `p`, restricted to spine
/// positions (outside summation branches and recursion bodies), which is
/// where parallel decomposition works. Returns whether `target` is
/// reachable.
pub fn congruent_on_spine(p: &Protocol, target: &Protocol, max_states: usize) -> bool {
    use std::collections::{BTreeSet, VecDeque};
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(p.clone());
    queue.push_back(p.clone());
    while let Some(current) = queue.pop_front() {
        if current == *target {
            return true;
        }
        for next in spine_rewrites(&current) {
            if seen.len() >= max_states {
                panic!("congruence search exceeded {max_states} states");
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    false
}

fn spine_rewrites(p: &Protocol) -> Vec<Protocol> {
    let mut out = Vec::new();
    local_axioms_spine(p, &mut out);
    match p {
        Protocol::Fork(l, r) => {
            for l2 in spine_rewrites(l) {
                out.push(Protocol::fork(l2, (**r).clone()));
            }
            for r2 in spine_rewrites(r) {
                out.push(Protocol::fork((**l).clone(), r2));
            }
        }
        Protocol::Active(id, body) => {
            for b2 in spine_rewrites(body) {
                out.push(Protocol::active(id.clone(), b2));
            }
        }
        _ => {}
    }
    out
}

fn local_axioms_spine(p: &Protocol, out: &mut Vec<Protocol>) {
    match p {
        Protocol::Fork(l, r) => {
            out.push(Protocol::fork((**r).clone(), (**l).clone()));
            if let Protocol::Fork(a, b) = &**l {
                out.push(Protocol::fork(
                    (**a).clone(),
                    Protocol::fork((**b).clone(), (**r).clone()),
                ));
            }
            if let Protocol::Fork(b, c) = &**r {
                out.push(Protocol::fork(
                    Protocol::fork((**l).clone(), (**b).clone()),
                    (**c).clone(),
                ));
            }
            if **l == Protocol::Nil {
                out.push((**r).clone());
            }
            if **r == Protocol::Nil {
                out.push((**l).clone());
            }
            if let (Protocol::Active(id1, a), Protocol::Active(id2, b)) = (&**l, &**r) {
                if id1 == id2 {
                    out.push(Protocol::active(
                        id1.clone(),
                        Protocol::fork((**a).clone(), (**b).clone()),
                    ));
                }
            }
        }
        Protocol::Active(id, body) => match &**body {
            Protocol::Fork(l, r) => out.push(Protocol::fork(
                Protocol::active(id.clone(), (**l).clone()),
                Protocol::active(id.clone(), (**r).clone()),
            )),
            Protocol::Active(id2, inner) => out.push(Protocol::active(
                id2.clone(),
                Protocol::active(id.clone(), (**inner).clone()),
            )),
            Protocol::Nil => out.push(Protocol::Nil),
            _ => {}
        },
        Protocol::Rec(..) => out.push(unfold(p).expect("Rec unfolds")),
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// spine terms for decomposition
// ---------------------------------------------------------------------------

/// Small terms with interesting parallel spines: up to three summation (or
/// recursion) components arranged in a random tree with stray terminated
/// branches and shared or per-component active wraps. The congruence class
/// of such a term is small enough for exhaustive search.
pub fn arb_spine_term() -> impl Strategy<Value = Protocol> {
    let branch = (arb_condition(), arb_direction()).prop_map(|(c, d)| (c.clone(), c, d));
    let component = (
        prop::collection::vec(branch, 1..3),
        any::<bool>(), // wrap in a recursion
    )
        .prop_map(|(branches, rec_wrap)| {
            let shape = Shape::Sum(
                branches
                    .into_iter()
                    .map(|(o, i, d)| (o, i, d, Box::new(Shape::VarRef)))
                    .collect(),
            );
            if rec_wrap {
                materialize(&Shape::Rec(Box::new(shape)))
            } else {
                materialize(&shape)
            }
        });
    (
        prop::collection::vec(component, 0..3),
        prop::collection::vec(0usize..4, 0..3), // active wraps (indices into test_ids)
        any::<bool>(),                          // sprinkle a terminated branch
        any::<bool>(),                          // left- or right-leaning tree
    )
        .prop_map(|(components, wraps, with_nil, lean_left)| {
            let ids = test_ids();
            let mut parts: Vec<Protocol> = components;
            if with_nil || parts.is_empty() {
                parts.push(Protocol::Nil);
            }
            let mut term = if lean_left {
                let mut it = parts.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Protocol::fork)
            } else {
                let mut it = parts.into_iter().rev();
                let last = it.next().unwrap();
                it.fold(last, |acc, p| Protocol::fork(p, acc))
            };
            for w in wraps {
                term = Protocol::active(ids[w].clone(), term);
            }
            term
        })
}

// ---------------------------------------------------------------------------
// distributed congruence: generators and single-axiom rewriting
// ---------------------------------------------------------------------------

pub fn arb_choice() -> impl Strategy<Value = Choice> {
    let output = (arb_condition(), 0usize..4, arb_direction())
        .prop_map(|(c, l, d)| Choice::output(c, ActionLabel::new(format!("f{l}")), d));
    output.prop_recursive(2, 6, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Choice::plus(a, b))
    })
}

pub fn arb_reaction() -> impl Strategy<Value = Reaction> {
    let leaf = prop_oneof![
        1 => Just(Reaction::Zero),
        3 => arb_choice().prop_map(Reaction::Of),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Reaction::par(a, b))
    })
}

pub fn arb_definition() -> impl Strategy<Value = Definition> {
    let leaf = prop_oneof![
        2 => arb_reaction().prop_map(Definition::React),
        3 => (arb_condition(), 0usize..4, arb_direction(), arb_reaction()).prop_map(
            |(c, l, d, cont)| Definition::input(c, ActionLabel::new(format!("f{l}")), d, cont)
        ),
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Definition::par(a, b))
    })
}

/// All definitions reachable by one congruence axiom application: parallel
/// commutativity/associativity/identity (in both directions), persistent
/// input absorption (both directions), and choice commutativity/
/// associativity.
pub fn table8_neighbors(d: &Definition) -> Vec<Definition> {
    let mut out = Vec::new();
    // identity expansion at the root
    out.push(Definition::par(d.clone(), Definition::zero()));
    // input duplication (absorption backwards)
    if matches!(d, Definition::Input { .. }) {
        out.push(Definition::par(d.clone(), d.clone()));
    }
    match d {
        Definition::Par(a, b) => {
            out.push(Definition::par((**b).clone(), (**a).clone()));
            if let Definition::Par(a1, a2) = &**a {
                out.push(Definition::par(
                    (**a1).clone(),
                    Definition::par((**a2).clone(), (**b).clone()),
                ));
            }
            if let Definition::Par(b1, b2) = &**b {
                out.push(Definition::par(
                    Definition::par((**a).clone(), (**b1).clone()),
                    (**b2).clone(),
                ));
            }
            if **a == Definition::zero() {
                out.push((**b).clone());
            }
            if **b == Definition::zero() {
                out.push((**a).clone());
            }
            // absorption forwards
            if a == b && matches!(**a, Definition::Input { .. }) {
                out.push((**a).clone());
            }
            for a2 in table8_neighbors(a) {
                out.push(Definition::par(a2, (**b).clone()));
            }
            for b2 in table8_neighbors(b) {
                out.push(Definition::par((**a).clone(), b2));
            }
        }
        Definition::Input {
            cond,
            label,
            dir,
            cont,
        } => {
            for c2 in reaction_neighbors(cont) {
                out.push(Definition::input(cond.clone(), label.clone(), *dir, c2));
            }
        }
        Definition::React(r) => {
            for r2 in reaction_neighbors(r) {
                out.push(Definition::React(r2));
            }
        }
    }
    out
}

fn reaction_neighbors(r: &Reaction) -> Vec<Reaction> {
    let mut out = vec![Reaction::par(r.clone(), Reaction::Zero)];
    match r {
        Reaction::Zero => {}
        Reaction::Of(c) => {
            for c2 in choice_neighbors(c) {
                out.push(Reaction::Of(c2));
            }
        }
        Reaction::Par(a, b) => {
            out.push(Reaction::par((**b).clone(), (**a).clone()));
            if let Reaction::Par(a1, a2) = &**a {
                out.push(Reaction::par(
                    (**a1).clone(),
                    Reaction::par((**a2).clone(), (**b).clone()),
                ));
            }
            if let Reaction::Par(b1, b2) = &**b {
                out.push(Reaction::par(
                    Reaction::par((**a).clone(), (**b1).clone()),
                    (**b2).clone(),
                ));
            }
            if **a == Reaction::Zero {
                out.push((**b).clone());
            }
            if **b == Reaction::Zero {
                out.push((**a).clone());
            }
            for a2 in reaction_neighbors(a) {
                out.push(Reaction::par(a2, (**b).clone()));
            }
            for b2 in reaction_neighbors(b) {
                out.push(Reaction::par((**a).clone(), b2));
            }
        }
    }
    out
}

fn choice_neighbors(c: &Choice) -> Vec<Choice> {
    let mut out = Vec::new();
    match c {
        Choice::Output { .. } => {}
        Choice::Plus(a, b) => {
            out.push(Choice::plus((**b).clone(), (**a).clone()));
            if let Choice::Plus(a1, a2) = &**a {
                out.push(Choice::plus(
                    (**a1).clone(),
                    Choice::plus((**a2).clone(), (**b).clone()),
                ));
            }
            if let Choice::Plus(b1, b2) = &**b {
                out.push(Choice::plus(
                    Choice::plus((**a).clone(), (**b1).clone()),
                    (**b2).clone(),
                ));
            }
            for a2 in choice_neighbors(a) {
                out.push(Choice::plus(a2, (**b).clone()));
            }
            for b2 in choice_neighbors(b) {
                out.push(Choice::plus((**a).clone(), b2));
            }
        }
    }
    out
}
