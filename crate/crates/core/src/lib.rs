//! Operation-control protocols for radial power distribution grids.
//!
//! A grid-wide protocol is written once, from a global point of view, as a
//! term of the protocol language in [`global`]. Its meaning is a reduction
//! relation over configurations pairing the term with per-substation state
//! registers ([`state`], [`semantics`]). From the same term, [`mod@project`]
//! synthesises one reactive controller per substation in the distributed
//! target language of [`dist`], and [`correspond`] checks — over the whole
//! bounded reachable state space — that the synthesised network matches the
//! global behaviour step for step, up to structural congruence.
//!
//! [`syntax`] provides the concrete file formats (`.gp` protocols, `.net`
//! network states, `.fx` side effects) and [`corpus`] bundles an executable
//! fault-management scenario.

pub mod corpus;
pub mod correspond;
pub mod dist;
pub mod global;
pub mod project;
pub mod semantics;
pub mod state;
pub mod syntax;

pub use correspond::{check_bounded, check_state, Counterexample, MatchReport};
pub use dist::{
    canonical_definition, canonical_network, observable_transitions, Definition, NetLabel, NetNode,
    Network, ObservableLabel, Reaction,
};
pub use global::{
    enumerate_redexes, well_formed, ActionLabel, Direction, Protocol, RecVar, Summation,
    SyncAction, Violation,
};
pub use project::{project, project_network, Projected, ProjectionEnv, ProjectionRole};
pub use semantics::{
    explore, run, successors, Configuration, GlobalStep, Scheduler, StateGraph, StepKind, Trace,
};
pub use state::{
    apply_update, resolve_direction, Condition, EffectRegistry, EffectSpec, NetworkState, NodeId,
    NodeState, ParentRef,
};
pub use syntax::{parse_effects, parse_network, parse_protocol, ParseError};
