//! Substation state registers, the condition language evaluated against them,
//! direction resolution, and side-effect application for binary synchronisations.
//!
//! Every value here is immutable after construction; updates return fresh
//! values and leave the input untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::global::{ActionLabel, Direction};

/// Identifier of a grid node (substation).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    /// Creates an identifier. Panics on an empty string; identifiers come
    /// from parsed input or literals and are never empty.
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "node identifier must be nonempty");
        NodeId(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Power source of a node: a concrete station, disconnected (`z`), or the
/// top of the supply hierarchy (`inf`, a primary station with no provider).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParentRef {
    Station(NodeId),
    Disconnected,
    Top,
}

impl fmt::Display for ParentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParentRef::Station(id) => write!(f, "{id}"),
            ParentRef::Disconnected => write!(f, "z"),
            ParentRef::Top => write!(f, "inf"),
        }
    }
}

/// Per-substation register: identity, power provider and input-link status,
/// neighbouring nodes, supply capacity `k`, active output links `a` and
/// faulty output links `e`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeState {
    pub id: NodeId,
    pub parent: ParentRef,
    /// Input power link status: `true` for a healthy link (`t = 1`).
    pub link_up: bool,
    pub neighbors: BTreeSet<NodeId>,
    pub capacity: u64,
    pub active_links: u64,
    pub faulty_links: u64,
}

impl NodeState {
    /// Checks the register invariants: `e <= k`, `a <= k`, `id not in n`.
    pub fn validate(&self) -> Result<(), StateError> {
        if self.faulty_links > self.capacity {
            return Err(StateError::InvariantViolation {
                node: self.id.clone(),
                message: format!(
                    "faulty links e={} exceed capacity k={}",
                    self.faulty_links, self.capacity
                ),
            });
        }
        if self.active_links > self.capacity {
            return Err(StateError::InvariantViolation {
                node: self.id.clone(),
                message: format!(
                    "active links a={} exceed capacity k={}",
                    self.active_links, self.capacity
                ),
            });
        }
        if self.neighbors.contains(&self.id) {
            return Err(StateError::InvariantViolation {
                node: self.id.clone(),
                message: "node listed among its own neighbors".to_string(),
            });
        }
        Ok(())
    }

    /// Numeric value of the `t` field as used by the condition language.
    pub fn link_status(&self) -> u64 {
        if self.link_up {
            1
        } else {
            0
        }
    }
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neighbors: Vec<&str> = self.neighbors.iter().map(|n| n.as_str()).collect();
        write!(
            f,
            "{{id: {}, parent: {}, t: {}, neighbors: [{}], k: {}, a: {}, e: {}}}",
            self.id,
            self.parent,
            self.link_status(),
            neighbors.join(", "),
            self.capacity,
            self.active_links,
            self.faulty_links
        )
    }
}

/// The network state: a mapping from node identifiers to registers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NetworkState {
    nodes: BTreeMap<NodeId, NodeState>,
}

impl NetworkState {
    /// Builds a network state from node registers, validating per-node
    /// invariants, identifier consistency and reference closure.
    pub fn from_nodes(nodes: Vec<NodeState>) -> Result<Self, StateError> {
        let mut map = BTreeMap::new();
        for node in nodes {
            node.validate()?;
            if map.insert(node.id.clone(), node.clone()).is_some() {
                return Err(StateError::DuplicateNode(node.id));
            }
        }
        let delta = NetworkState { nodes: map };
        delta.validate_references()?;
        Ok(delta)
    }

    fn validate_references(&self) -> Result<(), StateError> {
        for (id, node) in &self.nodes {
            if let ParentRef::Station(parent) = &node.parent {
                if parent == id {
                    return Err(StateError::InvariantViolation {
                        node: id.clone(),
                        message: "node cannot be its own power provider".to_string(),
                    });
                }
                if !self.nodes.contains_key(parent) {
                    return Err(StateError::DanglingReference {
                        node: id.clone(),
                        missing: parent.clone(),
                    });
                }
            }
            for neighbor in &node.neighbors {
                if !self.nodes.contains_key(neighbor) {
                    return Err(StateError::DanglingReference {
                        node: id.clone(),
                        missing: neighbor.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn node(&self, id: &NodeId) -> Result<&NodeState, StateError> {
        self.nodes
            .get(id)
            .ok_or_else(|| StateError::UnknownNode(id.clone()))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &NodeState)> {
        self.nodes.iter()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All nodes whose parent is `id`, in identifier order.
    pub fn children(&self, id: &NodeId) -> Vec<NodeId> {
        self.nodes
            .values()
            .filter(|n| n.parent == ParentRef::Station(id.clone()))
            .map(|n| n.id.clone())
            .collect()
    }
}

impl fmt::Display for NetworkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in self.nodes.values() {
            writeln!(f, "{node}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("node {node}: counter {field} would drop below zero")]
    NegativeCounter { node: NodeId, field: CounterField },
    #[error("node {node}: {message}")]
    InvariantViolation { node: NodeId, message: String },
    #[error("node {node} references unknown node {missing}")]
    DanglingReference { node: NodeId, missing: NodeId },
}

/// The three numeric counters of a register that effects may adjust.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CounterField {
    Capacity,
    ActiveLinks,
    FaultyLinks,
}

impl fmt::Display for CounterField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterField::Capacity => write!(f, "k"),
            CounterField::ActiveLinks => write!(f, "a"),
            CounterField::FaultyLinks => write!(f, "e"),
        }
    }
}

/// Register field referenced by a condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    LinkStatus,
    Capacity,
    ActiveLinks,
    FaultyLinks,
    Parent,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::LinkStatus => write!(f, "t"),
            Field::Capacity => write!(f, "k"),
            Field::ActiveLinks => write!(f, "a"),
            Field::FaultyLinks => write!(f, "e"),
            Field::Parent => write!(f, "parent"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Field(Field),
    Nat(u64),
    Id(NodeId),
    Disconnected,
    Top,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Field(field) => write!(f, "{field}"),
            Expr::Nat(n) => write!(f, "{n}"),
            Expr::Id(id) => write!(f, "{id}"),
            Expr::Disconnected => write!(f, "z"),
            Expr::Top => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        };
        write!(f, "{s}")
    }
}

/// Quantifier-free conditions over the register fields. The parser rejects
/// ill-typed comparisons (e.g. ordering the parent field); evaluation is
/// nevertheless total.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    True,
    False,
    Cmp(Expr, CmpOp, Expr),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
}

impl Condition {
    pub fn and(a: Condition, b: Condition) -> Condition {
        Condition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Condition, b: Condition) -> Condition {
        Condition::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Condition) -> Condition {
        Condition::Not(Box::new(c))
    }

    pub fn cmp(lhs: Expr, op: CmpOp, rhs: Expr) -> Condition {
        Condition::Cmp(lhs, op, rhs)
    }

    /// Whether state `s` satisfies this condition.
    pub fn eval(&self, s: &NodeState) -> bool {
        match self {
            Condition::True => true,
            Condition::False => false,
            Condition::Cmp(lhs, op, rhs) => {
                let l = eval_expr(lhs, s);
                let r = eval_expr(rhs, s);
                compare(&l, *op, &r)
            }
            Condition::And(a, b) => a.eval(s) && b.eval(s),
            Condition::Or(a, b) => a.eval(s) || b.eval(s),
            Condition::Not(c) => !c.eval(s),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_or(self, f)
    }
}

fn write_or(c: &Condition, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c {
        Condition::Or(a, b) => {
            write_or(a, f)?;
            write!(f, " or ")?;
            write_and(b, f)
        }
        _ => write_and(c, f),
    }
}

fn write_and(c: &Condition, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c {
        Condition::And(a, b) => {
            write_and(a, f)?;
            write!(f, " and ")?;
            write_not(b, f)
        }
        Condition::Or(..) => {
            write!(f, "(")?;
            write_or(c, f)?;
            write!(f, ")")
        }
        _ => write_not(c, f),
    }
}

fn write_not(c: &Condition, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c {
        Condition::Not(inner) => {
            write!(f, "not ")?;
            write_not(inner, f)
        }
        Condition::True => write!(f, "true"),
        Condition::False => write!(f, "false"),
        Condition::Cmp(l, op, r) => write!(f, "{l} {op} {r}"),
        Condition::And(..) | Condition::Or(..) => {
            write!(f, "(")?;
            write_or(c, f)?;
            write!(f, ")")
        }
    }
}

enum Value {
    Nat(u64),
    Parent(ParentRef),
}

fn eval_expr(e: &Expr, s: &NodeState) -> Value {
    match e {
        Expr::Field(Field::LinkStatus) => Value::Nat(s.link_status()),
        Expr::Field(Field::Capacity) => Value::Nat(s.capacity),
        Expr::Field(Field::ActiveLinks) => Value::Nat(s.active_links),
        Expr::Field(Field::FaultyLinks) => Value::Nat(s.faulty_links),
        Expr::Field(Field::Parent) => Value::Parent(s.parent.clone()),
        Expr::Nat(n) => Value::Nat(*n),
        Expr::Id(id) => Value::Parent(ParentRef::Station(id.clone())),
        Expr::Disconnected => Value::Parent(ParentRef::Disconnected),
        Expr::Top => Value::Parent(ParentRef::Top),
    }
}

fn compare(l: &Value, op: CmpOp, r: &Value) -> bool {
    match (l, r) {
        (Value::Nat(a), Value::Nat(b)) => match op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        },
        (Value::Parent(a), Value::Parent(b)) => match op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            // Ordering a parent reference is rejected at parse time; keep
            // evaluation total for hand-built conditions.
            _ => false,
        },
        // Mixed kinds never denote the same value.
        _ => matches!(op, CmpOp::Ne),
    }
}

/// Recipients of a synchronisation action resolved from the direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSet {
    /// Concrete recipients; may be empty (no parent, no children, ...).
    Nodes(Vec<NodeId>),
    /// The enabler itself: the action is a local computation step.
    SelfTarget,
}

/// Resolves direction `d` at `id` against `delta`: the parent station for
/// an upward action, each neighbor for a sideways one, all children for a
/// downward broadcast, and the node itself for a local step.
pub fn resolve_direction(
    d: Direction,
    delta: &NetworkState,
    id: &NodeId,
) -> Result<TargetSet, StateError> {
    let node = delta.node(id)?;
    Ok(match d {
        Direction::Parent => match &node.parent {
            ParentRef::Station(parent) => TargetSet::Nodes(vec![parent.clone()]),
            // A disconnected or top-level node has no provider to talk to;
            // an upward action is simply not enabled.
            ParentRef::Disconnected | ParentRef::Top => TargetSet::Nodes(vec![]),
        },
        Direction::Neighbor => TargetSet::Nodes(node.neighbors.iter().cloned().collect()),
        Direction::Children => TargetSet::Nodes(delta.children(id)),
        Direction::SelfLoop => TargetSet::SelfTarget,
    })
}

/// A single register adjustment. `Other` resolves to the peer of the
/// synchronisation: the reactor inside an enabler effect and vice versa.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assignment {
    SetParentOther,
    SetParentDisconnected,
    SetLink(bool),
    Inc(CounterField),
    Dec(CounterField),
    NeighborAddOther,
    NeighborRemoveOther,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::SetParentOther => write!(f, "parent := other"),
            Assignment::SetParentDisconnected => write!(f, "parent := z"),
            Assignment::SetLink(up) => write!(f, "t := {}", if *up { 1 } else { 0 }),
            Assignment::Inc(c) => write!(f, "{c} += 1"),
            Assignment::Dec(c) => write!(f, "{c} -= 1"),
            Assignment::NeighborAddOther => write!(f, "neighbors += other"),
            Assignment::NeighborRemoveOther => write!(f, "neighbors -= other"),
        }
    }
}

/// Side effects of one action label, split by role in the synchronisation.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EffectSpec {
    pub enabler: Vec<Assignment>,
    pub reactor: Vec<Assignment>,
}

impl EffectSpec {
    pub fn is_empty(&self) -> bool {
        self.enabler.is_empty() && self.reactor.is_empty()
    }
}

/// Mapping from action labels to side effects. Labels without an entry have
/// no effects. Consulted only for binary synchronisations.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EffectRegistry {
    effects: BTreeMap<ActionLabel, EffectSpec>,
}

impl EffectRegistry {
    pub fn new() -> Self {
        EffectRegistry::default()
    }

    pub fn insert(&mut self, label: ActionLabel, spec: EffectSpec) {
        self.effects.insert(label, spec);
    }

    pub fn get(&self, label: &ActionLabel) -> Option<&EffectSpec> {
        self.effects.get(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ActionLabel, &EffectSpec)> {
        self.effects.iter()
    }

    /// Labels in the registry that do not occur in `known` — useful to warn
    /// about effects that can never fire.
    pub fn unknown_labels(&self, known: &BTreeSet<ActionLabel>) -> Vec<ActionLabel> {
        self.effects
            .keys()
            .filter(|l| !known.contains(*l))
            .cloned()
            .collect()
    }
}

impl fmt::Display for EffectRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, spec) in &self.effects {
            writeln!(f, "effect {label} {{")?;
            writeln!(f, "  enabler {{")?;
            for a in &spec.enabler {
                writeln!(f, "    {a}")?;
            }
            writeln!(f, "  }}")?;
            writeln!(f, "  reactor {{")?;
            for a in &spec.reactor {
                writeln!(f, "    {a}")?;
            }
            writeln!(f, "  }}")?;
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

/// Applies the assignments for one endpoint of a binary synchronisation.
/// Assignments run left to right; invariants are re-checked at the end so a
/// transient `e > k` between two decrements is fine.
pub fn apply_assignments(
    s: &NodeState,
    assignments: &[Assignment],
    other: &NodeId,
) -> Result<NodeState, StateError> {
    let mut node = s.clone();
    for assignment in assignments {
        match assignment {
            Assignment::SetParentOther => node.parent = ParentRef::Station(other.clone()),
            Assignment::SetParentDisconnected => node.parent = ParentRef::Disconnected,
            Assignment::SetLink(up) => node.link_up = *up,
            Assignment::Inc(field) => {
                let counter = counter_mut(&mut node, *field);
                *counter += 1;
            }
            Assignment::Dec(field) => {
                let counter = counter_mut(&mut node, *field);
                *counter = counter.checked_sub(1).ok_or(StateError::NegativeCounter {
                    node: s.id.clone(),
                    field: *field,
                })?;
            }
            Assignment::NeighborAddOther => {
                node.neighbors.insert(other.clone());
            }
            Assignment::NeighborRemoveOther => {
                node.neighbors.remove(other);
            }
        }
    }
    node.validate()?;
    Ok(node)
}

fn counter_mut(node: &mut NodeState, field: CounterField) -> &mut u64 {
    match field {
        CounterField::Capacity => &mut node.capacity,
        CounterField::ActiveLinks => &mut node.active_links,
        CounterField::FaultyLinks => &mut node.faulty_links,
    }
}

/// Applies the side effects of a binary synchronisation on `label` between
/// `enabler` and `reactor`, returning the updated network state. Exactly the
/// two endpoint registers change; all other entries are shared untouched.
pub fn apply_update(
    delta: &NetworkState,
    enabler: &NodeId,
    reactor: &NodeId,
    label: &ActionLabel,
    reg: &EffectRegistry,
) -> Result<NetworkState, StateError> {
    assert_ne!(
        enabler, reactor,
        "binary synchronisation endpoints must differ"
    );
    let enabler_state = delta.node(enabler)?;
    let reactor_state = delta.node(reactor)?;
    let empty = EffectSpec::default();
    let spec = reg.get(label).unwrap_or(&empty);
    let new_enabler = apply_assignments(enabler_state, &spec.enabler, reactor)?;
    let new_reactor = apply_assignments(reactor_state, &spec.reactor, enabler)?;
    let mut nodes = delta.nodes.clone();
    nodes.insert(enabler.clone(), new_enabler);
    nodes.insert(reactor.clone(), new_reactor);
    Ok(NetworkState { nodes })
}
