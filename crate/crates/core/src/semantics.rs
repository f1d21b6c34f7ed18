//! Reduction semantics of configurations: successor enumeration, scheduled
//! runs, and bounded breadth-first exploration of the reachable state space.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::global::{apply_redex, canonical_protocol, enumerate_redexes, Direction, Protocol};
use crate::state::{
    apply_update, resolve_direction, EffectRegistry, NetworkState, NodeId, StateError, TargetSet,
};

/// Default bound on scheduled run length.
pub const DEFAULT_MAX_STEPS: usize = 10_000;
/// Default cap on the number of distinct states an exploration may visit.
pub const DEFAULT_STATE_CAP: usize = 100_000;

/// A network state paired with the protocol the network is running.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub delta: NetworkState,
    pub protocol: Protocol,
}

impl Configuration {
    pub fn new(delta: NetworkState, protocol: Protocol) -> Self {
        Configuration { delta, protocol }
    }

    /// Checks that every active node of the protocol has a register.
    pub fn validate(&self) -> Result<(), SemanticsError> {
        fn walk(p: &Protocol, delta: &NetworkState) -> Result<(), SemanticsError> {
            match p {
                Protocol::Nil | Protocol::Var(_) => Ok(()),
                Protocol::Fork(l, r) => {
                    walk(l, delta)?;
                    walk(r, delta)
                }
                Protocol::Rec(_, body) => walk(body, delta),
                Protocol::Active(id, body) => {
                    if !delta.contains(id) {
                        return Err(SemanticsError::State(StateError::UnknownNode(id.clone())));
                    }
                    walk(body, delta)
                }
                Protocol::Sum(s) => {
                    for b in s.branches() {
                        walk(&b.cont, delta)?;
                    }
                    Ok(())
                }
            }
        }
        walk(&self.protocol, &self.delta)
    }

    /// Key identifying this configuration up to structural congruence of the
    /// protocol part (recursion bodies compared as written).
    pub fn canonical_key(&self) -> Configuration {
        Configuration {
            delta: self.delta.clone(),
            protocol: canonical_protocol(&self.protocol),
        }
    }
}

/// What happened in one reduction step.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepKind {
    Binary {
        enabler: NodeId,
        reactor: NodeId,
        label: crate::global::ActionLabel,
    },
    Broadcast {
        enabler: NodeId,
        reactors: BTreeSet<NodeId>,
        label: crate::global::ActionLabel,
    },
    Local {
        enabler: NodeId,
        label: crate::global::ActionLabel,
    },
}

impl StepKind {
    pub fn label(&self) -> &crate::global::ActionLabel {
        match self {
            StepKind::Binary { label, .. }
            | StepKind::Broadcast { label, .. }
            | StepKind::Local { label, .. } => label,
        }
    }

    pub fn enabler(&self) -> &NodeId {
        match self {
            StepKind::Binary { enabler, .. }
            | StepKind::Broadcast { enabler, .. }
            | StepKind::Local { enabler, .. } => enabler,
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Binary {
                enabler,
                reactor,
                label,
            } => write!(f, "binary {enabler} [{reactor}] {label}"),
            StepKind::Broadcast {
                enabler,
                reactors,
                label,
            } => {
                let rs: Vec<&str> = reactors.iter().map(|r| r.as_str()).collect();
                write!(f, "broadcast {enabler} [{}] {label}", rs.join(","))
            }
            StepKind::Local { enabler, label } => write!(f, "local {enabler} [] {label}"),
        }
    }
}

/// One enabled reduction step together with the configuration it leads to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalStep {
    pub kind: StepKind,
    pub successor: Configuration,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("state budget exceeded: more than {cap} distinct states")]
    StateBudgetExceeded { cap: usize },
}

/// Enumerates every enabled reduction step of `c`.
///
/// For each reducible position: a binary action yields one step per
/// resolved target that satisfies the reactor condition, with both endpoint
/// registers updated; a broadcast yields exactly one step whose reactor set
/// collects the children satisfying the reactor condition (possibly none),
/// leaving the state unchanged; a local action requires the enabler to
/// satisfy both conditions and keeps it active.
pub fn successors(
    c: &Configuration,
    reg: &EffectRegistry,
) -> Result<Vec<GlobalStep>, SemanticsError> {
    let mut out = Vec::new();
    for redex in enumerate_redexes(&c.protocol) {
        let enabler_state = c.delta.node(&redex.enabler)?;
        if !redex.action.out_cond.eval(enabler_state) {
            continue;
        }
        let label = redex.action.label.clone();
        match redex.action.dir {
            Direction::Parent | Direction::Neighbor => {
                let TargetSet::Nodes(targets) =
                    resolve_direction(redex.action.dir, &c.delta, &redex.enabler)?
                else {
                    unreachable!("binary directions resolve to node sets")
                };
                for target in targets {
                    if target == redex.enabler {
                        continue;
                    }
                    if !redex.action.in_cond.eval(c.delta.node(&target)?) {
                        continue;
                    }
                    let delta = apply_update(&c.delta, &redex.enabler, &target, &label, reg)?;
                    let protocol = apply_redex(&c.protocol, &redex, std::slice::from_ref(&target));
                    out.push(GlobalStep {
                        kind: StepKind::Binary {
                            enabler: redex.enabler.clone(),
                            reactor: target,
                            label: label.clone(),
                        },
                        successor: Configuration::new(delta, protocol),
                    });
                }
            }
            Direction::Children => {
                let TargetSet::Nodes(candidates) =
                    resolve_direction(Direction::Children, &c.delta, &redex.enabler)?
                else {
                    unreachable!("child direction resolves to a node set")
                };
                let mut reactors = Vec::new();
                for candidate in candidates {
                    if redex.action.in_cond.eval(c.delta.node(&candidate)?) {
                        reactors.push(candidate);
                    }
                }
                reactors.sort();
                let protocol = apply_redex(&c.protocol, &redex, &reactors);
                out.push(GlobalStep {
                    kind: StepKind::Broadcast {
                        enabler: redex.enabler.clone(),
                        reactors: reactors.into_iter().collect(),
                        label,
                    },
                    successor: Configuration::new(c.delta.clone(), protocol),
                });
            }
            Direction::SelfLoop => {
                if redex.action.in_cond.eval(enabler_state) {
                    let protocol =
                        apply_redex(&c.protocol, &redex, std::slice::from_ref(&redex.enabler));
                    out.push(GlobalStep {
                        kind: StepKind::Local {
                            enabler: redex.enabler.clone(),
                            label,
                        },
                        successor: Configuration::new(c.delta.clone(), protocol),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Picks which of the enabled steps a run takes next. `None` stops the run.
pub trait Scheduler {
    fn pick(&mut self, c: &Configuration, steps: &[GlobalStep]) -> Option<usize>;
}

/// Always takes the first enabled step.
pub struct FirstInOrder;

impl Scheduler for FirstInOrder {
    fn pick(&mut self, _c: &Configuration, _steps: &[GlobalStep]) -> Option<usize> {
        Some(0)
    }
}

/// Uniform choice driven by a seeded generator; the same seed over the same
/// inputs reproduces the same run.
pub struct SeededRandom {
    rng: StdRng,
}

impl SeededRandom {
    pub fn new(seed: u64) -> Self {
        SeededRandom {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    /// Uniform index below `len`; usable for other successor lists too.
    pub fn pick_index(&mut self, len: usize) -> usize {
        self.rng.gen_range(0..len)
    }
}

impl Scheduler for SeededRandom {
    fn pick(&mut self, _c: &Configuration, steps: &[GlobalStep]) -> Option<usize> {
        Some(self.rng.gen_range(0..steps.len()))
    }
}

/// Record of a scheduled run: the steps taken and where it ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<StepKind>,
    pub final_config: Configuration,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            writeln!(f, "{step}")?;
        }
        Ok(())
    }
}

/// Runs `c` under the scheduler until no step is enabled, the scheduler
/// stops, or `max_steps` steps were taken.
pub fn run(
    c: &Configuration,
    reg: &EffectRegistry,
    scheduler: &mut dyn Scheduler,
    max_steps: usize,
) -> Result<Trace, SemanticsError> {
    let mut current = c.clone();
    let mut steps = Vec::new();
    for _ in 0..max_steps {
        let enabled = successors(&current, reg)?;
        if enabled.is_empty() {
            break;
        }
        let Some(index) = scheduler.pick(&current, &enabled) else {
            break;
        };
        let step = enabled
            .into_iter()
            .nth(index)
            .expect("scheduler picked a valid index");
        steps.push(step.kind);
        current = step.successor;
    }
    Ok(Trace {
        steps,
        final_config: current,
    })
}

/// An edge of the explored state graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub from: usize,
    pub kind: StepKind,
    pub to: usize,
}

/// Breadth-first slice of the reachable configurations, deduplicated up to
/// structural congruence of the protocol part. Index 0 is the initial
/// configuration.
#[derive(Clone, Debug)]
pub struct StateGraph {
    pub configs: Vec<Configuration>,
    pub edges: Vec<GraphEdge>,
}

impl StateGraph {
    /// Indices of configurations with no outgoing edge.
    pub fn terminal_states(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.configs.len()];
        for edge in &self.edges {
            has_out[edge.from] = true;
        }
        (0..self.configs.len()).filter(|i| !has_out[*i]).collect()
    }
}

/// Bounds for [`explore`].
#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    /// Depth bound in reduction steps; `None` explores exhaustively.
    pub max_depth: Option<usize>,
    /// Hard cap on distinct states.
    pub state_cap: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_depth: None,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Explores the reachable state space breadth first. Configurations are
/// merged when their network states are equal and their protocols are
/// structurally congruent. Exceeding the state cap is an error; a depth
/// bound truncates the search quietly.
pub fn explore(
    c: &Configuration,
    reg: &EffectRegistry,
    opts: &ExploreOptions,
) -> Result<StateGraph, SemanticsError> {
    let mut configs = vec![c.clone()];
    let mut edges = Vec::new();
    let mut index_of: HashMap<Configuration, usize> = HashMap::new();
    index_of.insert(c.canonical_key(), 0);
    let mut frontier = VecDeque::new();
    frontier.push_back((0usize, 0usize));

    while let Some((index, depth)) = frontier.pop_front() {
        if let Some(max) = opts.max_depth {
            if depth >= max {
                continue;
            }
        }
        let current = configs[index].clone();
        for step in successors(&current, reg)? {
            let key = step.successor.canonical_key();
            let to = match index_of.get(&key) {
                Some(&existing) => existing,
                None => {
                    let fresh = configs.len();
                    if fresh >= opts.state_cap {
                        return Err(SemanticsError::StateBudgetExceeded {
                            cap: opts.state_cap,
                        });
                    }
                    configs.push(step.successor.clone());
                    index_of.insert(key, fresh);
                    frontier.push_back((fresh, depth + 1));
                    fresh
                }
            };
            let edge = GraphEdge {
                from: index,
                kind: step.kind,
                to,
            };
            if !edges.contains(&edge) {
                edges.push(edge);
            }
        }
    }
    Ok(StateGraph { configs, edges })
}
