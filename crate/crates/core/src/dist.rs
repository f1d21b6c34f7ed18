//! The distributed target language: per-node definitions built from
//! persistent inputs, reactions and output choices; the labelled transition
//! systems of definitions, nodes and networks; and structural-congruence
//! canonicalization.
//!
//! Networks compose nodes with `||`. Binary actions synchronise pairwise
//! into `tau`; a broadcast must cross every sibling, each of which either
//! reacts or discards.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::global::{ActionLabel, Direction};
use crate::state::{
    apply_assignments, Condition, EffectRegistry, EffectSpec, NodeId, NodeState, ParentRef,
    StateError,
};

/// Alternative output behaviour.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Output {
        cond: Condition,
        label: ActionLabel,
        dir: Direction,
    },
    Plus(Box<Choice>, Box<Choice>),
}

impl Choice {
    pub fn output(cond: Condition, label: ActionLabel, dir: Direction) -> Choice {
        Choice::Output { cond, label, dir }
    }

    pub fn plus(a: Choice, b: Choice) -> Choice {
        Choice::Plus(Box::new(a), Box::new(b))
    }
}

/// Behaviour activated by an input: inaction, a choice, or both in parallel.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reaction {
    Zero,
    Of(Choice),
    Par(Box<Reaction>, Box<Reaction>),
}

impl Reaction {
    pub fn par(a: Reaction, b: Reaction) -> Reaction {
        Reaction::Par(Box::new(a), Box::new(b))
    }
}

/// A node's definition: persistent inputs and currently active reactions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Definition {
    Input {
        cond: Condition,
        label: ActionLabel,
        dir: Direction,
        cont: Reaction,
    },
    React(Reaction),
    Par(Box<Definition>, Box<Definition>),
}

impl Definition {
    pub fn input(
        cond: Condition,
        label: ActionLabel,
        dir: Direction,
        cont: Reaction,
    ) -> Definition {
        Definition::Input {
            cond,
            label,
            dir,
            cont,
        }
    }

    pub fn par(a: Definition, b: Definition) -> Definition {
        Definition::Par(Box::new(a), Box::new(b))
    }

    pub fn zero() -> Definition {
        Definition::React(Reaction::Zero)
    }
}

/// Action of a definition: the ability to react, to enable, or to take a
/// local step (the pairing of a self-directed output with a self-directed
/// input, whose conditions are conjoined).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DefAction {
    In {
        cond: Condition,
        label: ActionLabel,
        dir: Direction,
    },
    Out {
        cond: Condition,
        label: ActionLabel,
        dir: Direction,
    },
    Step {
        cond: Condition,
        label: ActionLabel,
    },
}

/// Network-level transition label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetLabel {
    Tau,
    /// `from -> to`: `from` enables a binary synchronisation targeting `to`.
    BinOut {
        from: NodeId,
        to: NodeId,
        label: ActionLabel,
    },
    /// `at <- from`: `at` reacts to a binary synchronisation from `from`.
    BinIn {
        at: NodeId,
        from: NodeId,
        label: ActionLabel,
    },
    /// `sender !*`: broadcast enabled towards the sender's children.
    BrdOut {
        sender: NodeId,
        label: ActionLabel,
    },
    /// `sender ?*`: willingness to react to (or discard) a broadcast.
    BrdIn {
        sender: NodeId,
        label: ActionLabel,
    },
}

impl NetLabel {
    pub fn is_broadcast(&self) -> bool {
        matches!(self, NetLabel::BrdOut { .. } | NetLabel::BrdIn { .. })
    }
}

impl fmt::Display for NetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetLabel::Tau => write!(f, "tau"),
            NetLabel::BinOut { from, to, label } => write!(f, "{from} -> {to} : {label}"),
            NetLabel::BinIn { at, from, label } => write!(f, "{at} <- {from} : {label}"),
            NetLabel::BrdOut { sender, label } => write!(f, "{sender} !* {label}"),
            NetLabel::BrdIn { sender, label } => write!(f, "{sender} ?* {label}"),
        }
    }
}

/// Labels observable of a whole network: internal steps and broadcasts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObservableLabel {
    Tau,
    Broadcast { sender: NodeId, label: ActionLabel },
}

impl fmt::Display for ObservableLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableLabel::Tau => write!(f, "tau"),
            ObservableLabel::Broadcast { sender, label } => write!(f, "{sender} !* {label}"),
        }
    }
}

/// A node: state register plus behaviour.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetNode {
    pub state: NodeState,
    pub defs: Definition,
}

/// A parallel composition of nodes with pairwise-distinct identifiers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[allow(clippy::large_enum_variant)]
pub enum Network {
    Node(NetNode),
    Par(Box<Network>, Box<Network>),
}

impl Network {
    pub fn node(state: NodeState, defs: Definition) -> Network {
        Network::Node(NetNode { state, defs })
    }

    pub fn par(a: Network, b: Network) -> Network {
        Network::Par(Box::new(a), Box::new(b))
    }

    /// Parallel composition of a nonempty node list, right associated.
    pub fn compose(mut nodes: Vec<NetNode>) -> Option<Network> {
        let last = nodes.pop()?;
        Some(nodes.into_iter().rev().fold(Network::Node(last), |acc, n| {
            Network::par(Network::Node(n), acc)
        }))
    }

    pub fn nodes(&self) -> Vec<&NetNode> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a Network, out: &mut Vec<&'a NetNode>) {
            match n {
                Network::Node(node) => out.push(node),
                Network::Par(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Rebuilds the same parallel shape with some leaves replaced. Indices
    /// refer to in-order leaf positions.
    fn with_replaced(&self, replacements: &[(usize, NetNode)]) -> Network {
        fn walk(n: &Network, counter: &mut usize, repl: &[(usize, NetNode)]) -> Network {
            match n {
                Network::Node(node) => {
                    let here = *counter;
                    *counter += 1;
                    match repl.iter().find(|(i, _)| *i == here) {
                        Some((_, new)) => Network::Node(new.clone()),
                        None => Network::Node(node.clone()),
                    }
                }
                Network::Par(a, b) => {
                    let left = walk(a, counter, repl);
                    let right = walk(b, counter, repl);
                    Network::par(left, right)
                }
            }
        }
        walk(self, &mut 0, replacements)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum NetError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("duplicate node id {0} in network")]
    DuplicateNodeId(NodeId),
}

// ---------------------------------------------------------------------------
// definition LTS
// ---------------------------------------------------------------------------

/// Transitions of a definition. Inputs persist: reacting leaves the input
/// available next to the activated reaction. Outputs fire to inaction; a
/// whole choice is consumed by firing any of its alternatives.
pub fn def_transitions(d: &Definition) -> Vec<(DefAction, Definition)> {
    match d {
        Definition::Input {
            cond,
            label,
            dir,
            cont,
        } => vec![(
            DefAction::In {
                cond: cond.clone(),
                label: label.clone(),
                dir: *dir,
            },
            Definition::par(Definition::React(cont.clone()), d.clone()),
        )],
        Definition::React(r) => reaction_transitions(r)
            .into_iter()
            .map(|(a, r2)| (a, Definition::React(r2)))
            .collect(),
        Definition::Par(d1, d2) => {
            let left = def_transitions(d1);
            let right = def_transitions(d2);
            let mut out = Vec::new();
            for (a, d1n) in &left {
                out.push((a.clone(), Definition::par(d1n.clone(), (**d2).clone())));
            }
            for (a, d2n) in &right {
                out.push((a.clone(), Definition::par((**d1).clone(), d2n.clone())));
            }
            // self-directed outputs pair with self-directed inputs across
            // the parallel composition, conjoining their conditions
            let pair = |outs: &[(DefAction, Definition)],
                        ins: &[(DefAction, Definition)],
                        flip: bool,
                        out: &mut Vec<(DefAction, Definition)>| {
                for (ao, dn_out) in outs {
                    let DefAction::Out {
                        cond: c1,
                        label: f,
                        dir: Direction::SelfLoop,
                    } = ao
                    else {
                        continue;
                    };
                    for (ai, dn_in) in ins {
                        let DefAction::In {
                            cond: c2,
                            label: g,
                            dir: Direction::SelfLoop,
                        } = ai
                        else {
                            continue;
                        };
                        if f != g {
                            continue;
                        }
                        let step = DefAction::Step {
                            cond: Condition::and(c1.clone(), c2.clone()),
                            label: f.clone(),
                        };
                        let next = if flip {
                            Definition::par(dn_in.clone(), dn_out.clone())
                        } else {
                            Definition::par(dn_out.clone(), dn_in.clone())
                        };
                        out.push((step, next));
                    }
                }
            };
            pair(&left, &right, false, &mut out);
            pair(&right, &left, true, &mut out);
            out
        }
    }
}

fn reaction_transitions(r: &Reaction) -> Vec<(DefAction, Reaction)> {
    match r {
        Reaction::Zero => vec![],
        Reaction::Of(c) => choice_outputs(c)
            .into_iter()
            .map(|a| (a, Reaction::Zero))
            .collect(),
        Reaction::Par(r1, r2) => {
            let mut out = Vec::new();
            for (a, r1n) in reaction_transitions(r1) {
                out.push((a, Reaction::par(r1n, (**r2).clone())));
            }
            for (a, r2n) in reaction_transitions(r2) {
                out.push((a, Reaction::par((**r1).clone(), r2n)));
            }
            out
        }
    }
}

fn choice_outputs(c: &Choice) -> Vec<DefAction> {
    match c {
        Choice::Output { cond, label, dir } => vec![DefAction::Out {
            cond: cond.clone(),
            label: label.clone(),
            dir: *dir,
        }],
        Choice::Plus(a, b) => {
            let mut out = choice_outputs(a);
            out.extend(choice_outputs(b));
            out
        }
    }
}

// ---------------------------------------------------------------------------
// node LTS
// ---------------------------------------------------------------------------

/// Closed-world parameters for node transitions: the peers a node could
/// exchange binary messages with and the labels it could be asked to
/// discard.
#[derive(Clone, Debug, Default)]
pub struct NetContext {
    pub peers: BTreeSet<NodeId>,
    pub labels: BTreeSet<ActionLabel>,
}

impl NetContext {
    pub fn of(network: &Network) -> NetContext {
        let mut peers = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for node in network.nodes() {
            peers.insert(node.state.id.clone());
            collect_def_labels(&node.defs, &mut labels);
        }
        NetContext { peers, labels }
    }
}

fn collect_def_labels(d: &Definition, out: &mut BTreeSet<ActionLabel>) {
    match d {
        Definition::Input { label, cont, .. } => {
            out.insert(label.clone());
            collect_reaction_labels(cont, out);
        }
        Definition::React(r) => collect_reaction_labels(r, out),
        Definition::Par(a, b) => {
            collect_def_labels(a, out);
            collect_def_labels(b, out);
        }
    }
}

fn collect_reaction_labels(r: &Reaction, out: &mut BTreeSet<ActionLabel>) {
    match r {
        Reaction::Zero => {}
        Reaction::Of(c) => collect_choice_labels(c, out),
        Reaction::Par(a, b) => {
            collect_reaction_labels(a, out);
            collect_reaction_labels(b, out);
        }
    }
}

fn collect_choice_labels(c: &Choice, out: &mut BTreeSet<ActionLabel>) {
    match c {
        Choice::Output { label, .. } => {
            out.insert(label.clone());
        }
        Choice::Plus(a, b) => {
            collect_choice_labels(a, out);
            collect_choice_labels(b, out);
        }
    }
}

/// Lifts the definition LTS to one node, checking conditions against the
/// node state and applying binary side effects at the endpoints. Broadcast
/// and local steps leave the state untouched. Discard transitions are
/// offered for every broadcast the node cannot (or may not) receive.
///
/// Binary transitions are enumerated against every peer; when the required
/// state update is unsatisfiable for some peer (a counter would underflow,
/// an invariant would break) that potential transition simply does not
/// exist. A real, condition-enabled synchronisation with an ill-specified
/// effect still surfaces as a hard error on the global side.
pub fn node_transitions(
    node: &NetNode,
    reg: &EffectRegistry,
    ctx: &NetContext,
) -> Vec<(NetLabel, NetNode)> {
    let s = &node.state;
    let mut out = Vec::new();
    let empty = EffectSpec::default();
    let try_apply = |assignments: &[crate::state::Assignment], other: &NodeId| {
        apply_assignments(s, assignments, other).ok()
    };
    for (action, defs) in def_transitions(&node.defs) {
        match action {
            DefAction::Step { cond, .. } => {
                if cond.eval(s) {
                    out.push((
                        NetLabel::Tau,
                        NetNode {
                            state: s.clone(),
                            defs,
                        },
                    ));
                }
            }
            DefAction::Out { cond, label, dir } => {
                if !cond.eval(s) {
                    continue;
                }
                match dir {
                    Direction::Parent => {
                        if let ParentRef::Station(parent) = &s.parent {
                            let spec = reg.get(&label).unwrap_or(&empty);
                            if let Some(state) = try_apply(&spec.enabler, parent) {
                                out.push((
                                    NetLabel::BinOut {
                                        from: s.id.clone(),
                                        to: parent.clone(),
                                        label,
                                    },
                                    NetNode { state, defs },
                                ));
                            }
                        }
                    }
                    Direction::Neighbor => {
                        for neighbor in &s.neighbors {
                            let spec = reg.get(&label).unwrap_or(&empty);
                            if let Some(state) = try_apply(&spec.enabler, neighbor) {
                                out.push((
                                    NetLabel::BinOut {
                                        from: s.id.clone(),
                                        to: neighbor.clone(),
                                        label: label.clone(),
                                    },
                                    NetNode {
                                        state,
                                        defs: defs.clone(),
                                    },
                                ));
                            }
                        }
                    }
                    Direction::Children => {
                        out.push((
                            NetLabel::BrdOut {
                                sender: s.id.clone(),
                                label,
                            },
                            NetNode {
                                state: s.clone(),
                                defs,
                            },
                        ));
                    }
                    // self-directed halves only fire paired, as a Step
                    Direction::SelfLoop => {}
                }
            }
            DefAction::In { cond, label, dir } => {
                if !cond.eval(s) {
                    continue;
                }
                match dir {
                    Direction::Parent | Direction::Neighbor => {
                        for from in &ctx.peers {
                            if *from == s.id {
                                continue;
                            }
                            let spec = reg.get(&label).unwrap_or(&empty);
                            if let Some(state) = try_apply(&spec.reactor, from) {
                                out.push((
                                    NetLabel::BinIn {
                                        at: s.id.clone(),
                                        from: from.clone(),
                                        label: label.clone(),
                                    },
                                    NetNode {
                                        state,
                                        defs: defs.clone(),
                                    },
                                ));
                            }
                        }
                    }
                    Direction::Children => {
                        // react only to the own parent's broadcast
                        if let ParentRef::Station(parent) = &s.parent {
                            if *parent != s.id {
                                out.push((
                                    NetLabel::BrdIn {
                                        sender: parent.clone(),
                                        label,
                                    },
                                    NetNode {
                                        state: s.clone(),
                                        defs,
                                    },
                                ));
                            }
                        }
                    }
                    Direction::SelfLoop => {}
                }
            }
        }
    }
    // discards: any broadcast with no enabled matching receive
    for sender in &ctx.peers {
        if *sender == s.id {
            continue;
        }
        for label in &ctx.labels {
            if broadcast_receives(node, sender, label).is_empty() {
                out.push((
                    NetLabel::BrdIn {
                        sender: sender.clone(),
                        label: label.clone(),
                    },
                    node.clone(),
                ));
            }
        }
    }
    out
}

/// The ways `node` can actually receive a broadcast of `label` from
/// `sender`: one successor per enabled matching input. Empty exactly when
/// the node discards.
fn broadcast_receives(node: &NetNode, sender: &NodeId, label: &ActionLabel) -> Vec<NetNode> {
    if node.state.parent != ParentRef::Station(sender.clone()) || *sender == node.state.id {
        return Vec::new();
    }
    def_transitions(&node.defs)
        .into_iter()
        .filter_map(|(action, defs)| match action {
            DefAction::In {
                cond,
                label: l,
                dir: Direction::Children,
            } if l == *label && cond.eval(&node.state) => Some(NetNode {
                state: node.state.clone(),
                defs,
            }),
            _ => None,
        })
        .collect()
}

/// Receive-or-discard options of a node for one broadcast: the enabled
/// receives when any exist, otherwise the single discard.
fn broadcast_options(node: &NetNode, sender: &NodeId, label: &ActionLabel) -> Vec<NetNode> {
    let receives = broadcast_receives(node, sender, label);
    if receives.is_empty() {
        vec![node.clone()]
    } else {
        receives
    }
}

// ---------------------------------------------------------------------------
// network LTS
// ---------------------------------------------------------------------------

/// Combines two labels into the label of their synchronisation: matched
/// binary halves give `tau`, a broadcast output absorbs matching reactions,
/// and two identical reactions merge. `None` when the labels do not
/// synchronise.
pub fn compose_labels(l1: &NetLabel, l2: &NetLabel) -> Option<NetLabel> {
    use NetLabel::*;
    match (l1, l2) {
        (
            BinOut {
                from: f1,
                to: t1,
                label: a,
            },
            BinIn {
                at: t2,
                from: f2,
                label: b,
            },
        )
        | (
            BinIn {
                at: t2,
                from: f2,
                label: b,
            },
            BinOut {
                from: f1,
                to: t1,
                label: a,
            },
        ) if a == b && t1 == t2 && f1 == f2 => Some(Tau),
        (
            BrdOut {
                sender: s1,
                label: a,
            },
            BrdIn {
                sender: s2,
                label: b,
            },
        )
        | (
            BrdIn {
                sender: s2,
                label: b,
            },
            BrdOut {
                sender: s1,
                label: a,
            },
        ) if s1 == s2 && a == b => Some(BrdOut {
            sender: s1.clone(),
            label: a.clone(),
        }),
        (
            BrdIn {
                sender: s1,
                label: a,
            },
            BrdIn {
                sender: s2,
                label: b,
            },
        ) if s1 == s2 && a == b => Some(l1.clone()),
        _ => None,
    }
}

fn check_distinct_ids(network: &Network) -> Result<Vec<NetNode>, NetError> {
    let nodes: Vec<NetNode> = network.nodes().into_iter().cloned().collect();
    let mut seen = BTreeSet::new();
    for node in &nodes {
        if !seen.insert(node.state.id.clone()) {
            return Err(NetError::DuplicateNodeId(node.state.id.clone()));
        }
    }
    Ok(nodes)
}

/// All transitions of a network: interleaved non-broadcast node transitions,
/// pairwise binary synchronisations, whole-network broadcasts (the sender's
/// output composed with a receive-or-discard at every other node), and
/// collective reactions to a broadcast.
pub fn network_transitions(
    network: &Network,
    reg: &EffectRegistry,
) -> Result<Vec<(NetLabel, Network)>, NetError> {
    let nodes = check_distinct_ids(network)?;
    let ctx = NetContext::of(network);
    let per_node: Vec<Vec<(NetLabel, NetNode)>> = nodes
        .iter()
        .map(|node| node_transitions(node, reg, &ctx))
        .collect();

    let mut out = Vec::new();

    // interleavings of non-broadcast labels
    for (i, transitions) in per_node.iter().enumerate() {
        for (label, next) in transitions {
            if !label.is_broadcast() {
                if matches!(label, NetLabel::Tau) {
                    out.push((NetLabel::Tau, network.with_replaced(&[(i, next.clone())])));
                } else {
                    out.push((label.clone(), network.with_replaced(&[(i, next.clone())])));
                }
            }
        }
    }

    // binary synchronisations
    for (i, left) in per_node.iter().enumerate() {
        for (li, ni) in left {
            let NetLabel::BinOut { .. } = li else {
                continue;
            };
            for (j, right) in per_node.iter().enumerate() {
                if i == j {
                    continue;
                }
                for (lj, nj) in right {
                    let NetLabel::BinIn { .. } = lj else { continue };
                    if compose_labels(li, lj) == Some(NetLabel::Tau) {
                        out.push((
                            NetLabel::Tau,
                            network.with_replaced(&[(i, ni.clone()), (j, nj.clone())]),
                        ));
                    }
                }
            }
        }
    }

    // broadcasts: the sender's output must cross every other node
    for (i, transitions) in per_node.iter().enumerate() {
        for (label, sender_next) in transitions {
            let NetLabel::BrdOut { sender, label: f } = label else {
                continue;
            };
            let mut combos: Vec<Vec<(usize, NetNode)>> = vec![vec![(i, sender_next.clone())]];
            for (j, node) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let options = broadcast_options(node, sender, f);
                combos = combos
                    .into_iter()
                    .flat_map(|combo| {
                        options.iter().map(move |opt| {
                            let mut with = combo.clone();
                            with.push((j, opt.clone()));
                            with
                        })
                    })
                    .collect();
            }
            for combo in combos {
                out.push((label.clone(), network.with_replaced(&combo)));
            }
        }
    }

    // collective reactions: every node receives or discards the same
    // broadcast, so the composition can itself be embedded under a sender
    for sender in &ctx.peers {
        for f in &ctx.labels {
            let mut combos: Vec<Vec<(usize, NetNode)>> = vec![vec![]];
            for (j, node) in nodes.iter().enumerate() {
                let options = broadcast_options(node, sender, f);
                combos = combos
                    .into_iter()
                    .flat_map(|combo| {
                        options.iter().map(move |opt| {
                            let mut with = combo.clone();
                            with.push((j, opt.clone()));
                            with
                        })
                    })
                    .collect();
            }
            for combo in combos {
                out.push((
                    NetLabel::BrdIn {
                        sender: sender.clone(),
                        label: f.clone(),
                    },
                    network.with_replaced(&combo),
                ));
            }
        }
    }

    Ok(out)
}

/// Transitions observable of the network as a whole: internal steps and
/// broadcast outputs. Unmatched binary halves and bare reactions are not
/// observable.
pub fn observable_transitions(
    network: &Network,
    reg: &EffectRegistry,
) -> Result<Vec<(ObservableLabel, Network)>, NetError> {
    let nodes = check_distinct_ids(network)?;
    let ctx = NetContext::of(network);
    let per_node: Vec<Vec<(NetLabel, NetNode)>> = nodes
        .iter()
        .map(|node| node_transitions(node, reg, &ctx))
        .collect();

    let mut out = Vec::new();
    for (i, transitions) in per_node.iter().enumerate() {
        for (label, next) in transitions {
            match label {
                NetLabel::Tau => {
                    out.push((
                        ObservableLabel::Tau,
                        network.with_replaced(&[(i, next.clone())]),
                    ));
                }
                NetLabel::BinOut { .. } => {
                    for (j, right) in per_node.iter().enumerate() {
                        if i == j {
                            continue;
                        }
                        for (lj, nj) in right {
                            if matches!(lj, NetLabel::BinIn { .. })
                                && compose_labels(label, lj) == Some(NetLabel::Tau)
                            {
                                out.push((
                                    ObservableLabel::Tau,
                                    network.with_replaced(&[(i, next.clone()), (j, nj.clone())]),
                                ));
                            }
                        }
                    }
                }
                NetLabel::BrdOut { sender, label: f } => {
                    let mut combos: Vec<Vec<(usize, NetNode)>> = vec![vec![(i, next.clone())]];
                    for (j, node) in nodes.iter().enumerate() {
                        if j == i {
                            continue;
                        }
                        let options = broadcast_options(node, sender, f);
                        combos = combos
                            .into_iter()
                            .flat_map(|combo| {
                                options.iter().map(move |opt| {
                                    let mut with = combo.clone();
                                    with.push((j, opt.clone()));
                                    with
                                })
                            })
                            .collect();
                    }
                    for combo in combos {
                        out.push((
                            ObservableLabel::Broadcast {
                                sender: sender.clone(),
                                label: f.clone(),
                            },
                            network.with_replaced(&combo),
                        ));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// canonicalization
// ---------------------------------------------------------------------------

/// Atom of a flattened definition: a persistent input or an output choice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum DefAtom {
    Input {
        cond: Condition,
        label: ActionLabel,
        dir: Direction,
        cont: Reaction,
    },
    Choice(Choice),
}

/// Canonical form deciding structural congruence of definitions: parallel
/// compositions are flattened and sorted under the structural term order,
/// inaction units are dropped, input continuations are canonicalized
/// recursively, and syntactically identical persistent inputs collapse to
/// one. Two definitions are congruent iff their canonical forms are equal.
pub fn canonical_definition(d: &Definition) -> Definition {
    let mut atoms = Vec::new();
    flatten_definition(d, &mut atoms);
    atoms.sort();
    // absorption applies to persistent inputs only
    atoms.dedup_by(|a, b| matches!(a, DefAtom::Input { .. }) && a == b);
    let defs: Vec<Definition> = atoms
        .into_iter()
        .map(|atom| match atom {
            DefAtom::Input {
                cond,
                label,
                dir,
                cont,
            } => Definition::Input {
                cond,
                label,
                dir,
                cont,
            },
            DefAtom::Choice(c) => Definition::React(Reaction::Of(c)),
        })
        .collect();
    let mut it = defs.into_iter().rev();
    match it.next() {
        None => Definition::zero(),
        Some(last) => it.fold(last, |acc, d| Definition::par(d, acc)),
    }
}

fn flatten_definition(d: &Definition, out: &mut Vec<DefAtom>) {
    match d {
        Definition::Input {
            cond,
            label,
            dir,
            cont,
        } => out.push(DefAtom::Input {
            cond: cond.clone(),
            label: label.clone(),
            dir: *dir,
            cont: canonical_reaction(cont),
        }),
        Definition::React(r) => flatten_reaction(r, out),
        Definition::Par(a, b) => {
            flatten_definition(a, out);
            flatten_definition(b, out);
        }
    }
}

fn flatten_reaction(r: &Reaction, out: &mut Vec<DefAtom>) {
    match r {
        Reaction::Zero => {}
        Reaction::Of(c) => out.push(DefAtom::Choice(canonical_choice(c))),
        Reaction::Par(a, b) => {
            flatten_reaction(a, out);
            flatten_reaction(b, out);
        }
    }
}

/// Canonical form of a reaction: sorted parallel of canonical choices.
pub fn canonical_reaction(r: &Reaction) -> Reaction {
    let mut atoms = Vec::new();
    flatten_reaction(r, &mut atoms);
    atoms.sort();
    let choices: Vec<Choice> = atoms
        .into_iter()
        .map(|a| match a {
            DefAtom::Choice(c) => c,
            DefAtom::Input { .. } => unreachable!("reactions hold no inputs"),
        })
        .collect();
    let mut it = choices.into_iter().rev();
    match it.next() {
        None => Reaction::Zero,
        Some(last) => it.fold(Reaction::Of(last), |acc, c| {
            Reaction::par(Reaction::Of(c), acc)
        }),
    }
}

/// Canonical form of a choice: alternatives flattened and sorted. There is
/// no idempotence axiom for choices, so duplicates are kept.
pub fn canonical_choice(c: &Choice) -> Choice {
    let mut outputs = Vec::new();
    fn collect(c: &Choice, out: &mut Vec<Choice>) {
        match c {
            Choice::Output { .. } => out.push(c.clone()),
            Choice::Plus(a, b) => {
                collect(a, out);
                collect(b, out);
            }
        }
    }
    collect(c, &mut outputs);
    outputs.sort();
    let mut it = outputs.into_iter().rev();
    let last = it.next().expect("choices are nonempty");
    it.fold(last, |acc, o| Choice::plus(o, acc))
}

/// Canonical form of a network: nodes sorted by identifier, each definition
/// canonicalized. Two networks with distinct per-node ids are congruent iff
/// their canonical forms are equal.
pub fn canonical_network(n: &Network) -> Network {
    let mut nodes: Vec<NetNode> = n
        .nodes()
        .into_iter()
        .map(|node| NetNode {
            state: node.state.clone(),
            defs: canonical_definition(&node.defs),
        })
        .collect();
    nodes.sort_by(|a, b| a.state.id.cmp(&b.state.id));
    Network::compose(nodes).unwrap_or_else(|| panic!("networks are nonempty"))
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Output { cond, label, dir } => write!(f, "[{cond}]{label}{dir}!"),
            Choice::Plus(a, b) => write!(f, "{a} + {b}"),
        }
    }
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Zero => write!(f, "0"),
            Reaction::Of(c) => match c {
                Choice::Plus(..) => write!(f, "({c})"),
                Choice::Output { .. } => write!(f, "{c}"),
            },
            Reaction::Par(a, b) => write!(f, "{a} | {b}"),
        }
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Definition::Input {
                cond,
                label,
                dir,
                cont,
            } => match cont {
                Reaction::Zero => write!(f, "[{cond}]{label}{dir}?.0"),
                Reaction::Of(Choice::Output { .. }) => {
                    write!(f, "[{cond}]{label}{dir}?.{cont}")
                }
                Reaction::Of(c @ Choice::Plus(..)) => {
                    write!(f, "[{cond}]{label}{dir}?.({c})")
                }
                _ => write!(f, "[{cond}]{label}{dir}?.({cont})"),
            },
            Definition::React(r) => write!(f, "{r}"),
            Definition::Par(a, b) => write!(f, "{a} | {b}"),
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, node) in self.nodes().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}  {}", node.state, node.defs)?;
        }
        Ok(())
    }
}
