//! Bounded two-way step matching between a configuration and its projected
//! network: every global step must be matched by an observable network
//! transition reaching the projection of the global successor, and every
//! observable network transition must be matched by a global step, both up
//! to structural congruence of networks.

use std::fmt;

use thiserror::Error;

use crate::dist::{canonical_network, observable_transitions, NetError, Network, ObservableLabel};
use crate::project::{project_network, ProjectError};
use crate::semantics::{
    explore, successors, Configuration, ExploreOptions, SemanticsError, StepKind,
};
use crate::state::EffectRegistry;

/// Which side of the correspondence failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CexDirection {
    /// A global step with no matching network transition.
    Soundness,
    /// A network transition with no matching global step.
    Completeness,
}

impl fmt::Display for CexDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CexDirection::Soundness => write!(f, "soundness"),
            CexDirection::Completeness => write!(f, "completeness"),
        }
    }
}

/// The unmatched item.
#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Offending {
    Global(StepKind),
    Network(ObservableLabel, Network),
}

impl fmt::Display for Offending {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offending::Global(kind) => write!(f, "global step: {kind}"),
            Offending::Network(label, _) => write!(f, "network transition: {label}"),
        }
    }
}

/// A replayable mismatch: re-checking `configuration` reproduces it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub direction: CexDirection,
    pub configuration: Configuration,
    pub offending: Offending,
    pub explanation: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} counterexample: {} — {}",
            self.direction, self.offending, self.explanation
        )
    }
}

/// Aggregated result of the bounded check.
#[derive(Clone, Debug, Default)]
pub struct MatchReport {
    pub checked_states: usize,
    pub checked_edges: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl MatchReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }

    fn merge(&mut self, other: MatchReport) {
        self.checked_states += other.checked_states;
        self.checked_edges += other.checked_edges;
        self.counterexamples.extend(other.counterexamples);
    }

    fn sort(&mut self) {
        self.counterexamples.sort_by(|a, b| {
            (
                a.direction,
                format!("{:?}", a.configuration),
                format!("{:?}", a.offending),
            )
                .cmp(&(
                    b.direction,
                    format!("{:?}", b.configuration),
                    format!("{:?}", b.offending),
                ))
        });
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "checked {} state(s), {} edge(s); {} counterexample(s)",
            self.checked_states,
            self.checked_edges,
            self.counterexamples.len()
        )?;
        for cex in &self.counterexamples {
            writeln!(f, "{cex}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// How the network side of the check is produced from a configuration. The
/// standard projector synthesises the controllers; tests substitute mutated
/// variants to confirm the checker notices broken controllers.
pub trait NetworkProjector {
    fn project(&self, c: &Configuration) -> Result<Network, ProjectError>;
}

/// The synthesis of [`project_network`].
pub struct StandardProjector;

impl NetworkProjector for StandardProjector {
    fn project(&self, c: &Configuration) -> Result<Network, ProjectError> {
        project_network(c)
    }
}

fn kind_compatible(kind: &StepKind, label: &ObservableLabel) -> bool {
    match (kind, label) {
        (StepKind::Binary { .. } | StepKind::Local { .. }, ObservableLabel::Tau) => true,
        (
            StepKind::Broadcast {
                enabler, label: f, ..
            },
            ObservableLabel::Broadcast { sender, label: g },
        ) => enabler == sender && f == g,
        _ => false,
    }
}

/// Checks both match directions at one configuration, with the network side
/// given explicitly.
pub fn check_state_against(
    c: &Configuration,
    network: &Network,
    reg: &EffectRegistry,
) -> Result<MatchReport, CheckError> {
    check_state_inner(c, network, reg, &StandardProjector)
}

fn check_state_inner(
    c: &Configuration,
    network: &Network,
    reg: &EffectRegistry,
    projector: &dyn NetworkProjector,
) -> Result<MatchReport, CheckError> {
    let global_steps = successors(c, reg)?;
    let net_steps = observable_transitions(network, reg)?;

    let canonical_net_steps: Vec<(ObservableLabel, Network)> = net_steps
        .iter()
        .map(|(l, n)| (l.clone(), canonical_network(n)))
        .collect();

    let mut report = MatchReport {
        checked_states: 1,
        checked_edges: global_steps.len() + net_steps.len(),
        counterexamples: Vec::new(),
    };

    // soundness: each global step has a kind-compatible network transition
    // reaching the projection of the global successor
    let mut projected_successors = Vec::with_capacity(global_steps.len());
    for step in &global_steps {
        projected_successors.push(canonical_network(&projector.project(&step.successor)?));
    }
    for (step, projected) in global_steps.iter().zip(&projected_successors) {
        let matched = canonical_net_steps
            .iter()
            .any(|(label, net)| kind_compatible(&step.kind, label) && net == projected);
        if !matched {
            report.counterexamples.push(Counterexample {
                direction: CexDirection::Soundness,
                configuration: c.clone(),
                offending: Offending::Global(step.kind.clone()),
                explanation: format!(
                    "no observable network transition matches global step `{}` up to congruence",
                    step.kind
                ),
            });
        }
    }

    // completeness: each observable network transition has a global step
    // whose projected successor is the reached network
    for ((label, net), (_, canonical)) in net_steps.iter().zip(&canonical_net_steps) {
        let matched = global_steps
            .iter()
            .zip(&projected_successors)
            .any(|(step, projected)| kind_compatible(&step.kind, label) && projected == canonical);
        if !matched {
            report.counterexamples.push(Counterexample {
                direction: CexDirection::Completeness,
                configuration: c.clone(),
                offending: Offending::Network(label.clone(), net.clone()),
                explanation: format!(
                    "no global step matches observable network transition `{label}` up to congruence"
                ),
            });
        }
    }

    report.sort();
    Ok(report)
}

/// Checks both match directions at one configuration against the standard
/// projection.
pub fn check_state(c: &Configuration, reg: &EffectRegistry) -> Result<MatchReport, CheckError> {
    check_state_with(c, reg, &StandardProjector)
}

/// Like [`check_state`] with a custom projector on the network side.
pub fn check_state_with(
    c: &Configuration,
    reg: &EffectRegistry,
    projector: &dyn NetworkProjector,
) -> Result<MatchReport, CheckError> {
    let network = projector.project(c)?;
    check_state_inner(c, &network, reg, projector)
}

/// Runs [`check_state`] on every configuration reachable within `depth`
/// (exhaustively when `None`), aggregating the per-state reports.
pub fn check_bounded(
    c: &Configuration,
    reg: &EffectRegistry,
    depth: Option<usize>,
    state_cap: usize,
) -> Result<MatchReport, CheckError> {
    check_bounded_with(c, reg, depth, state_cap, &StandardProjector)
}

/// Like [`check_bounded`] with a custom projector on the network side.
pub fn check_bounded_with(
    c: &Configuration,
    reg: &EffectRegistry,
    depth: Option<usize>,
    state_cap: usize,
    projector: &dyn NetworkProjector,
) -> Result<MatchReport, CheckError> {
    let graph = explore(
        c,
        reg,
        &ExploreOptions {
            max_depth: depth,
            state_cap,
        },
    )?;
    let mut report = MatchReport::default();
    for config in &graph.configs {
        report.merge(check_state_with(config, reg, projector)?);
    }
    report.sort();
    Ok(report)
}
