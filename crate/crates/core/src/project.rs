//! Synthesis of per-node controllers from a global protocol.
//!
//! Three projection roles drive the synthesis. The reactive role collects
//! one persistent input per synchronisation action, whose continuation
//! enables the follow-up behaviour. The enabling role turns a summation
//! into an output choice over its initial actions, consulting the recursion
//! environment so that a recursion variable stands for its unfolding. The
//! per-node role extracts the enabling behaviour sitting under that node's
//! active constructs.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::dist::{Choice, Definition, NetNode, Network, Reaction};
use crate::global::{Protocol, RecVar};
use crate::semantics::Configuration;
use crate::state::NodeId;

/// Role of a projection: reactive (`?`), enabling (`!`), or the view of one
/// concrete node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProjectionRole {
    Reactive,
    Enabling,
    ActiveOf(NodeId),
}

/// Environment binding recursion variables to their bodies, extended at
/// each recursion and consulted only by the enabling role.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProjectionEnv {
    bindings: BTreeMap<RecVar, Protocol>,
}

impl ProjectionEnv {
    pub fn new() -> Self {
        ProjectionEnv::default()
    }

    pub fn bind(&self, var: RecVar, body: Protocol) -> Self {
        let mut bindings = self.bindings.clone();
        bindings.insert(var, body);
        ProjectionEnv { bindings }
    }

    pub fn lookup(&self, var: &RecVar) -> Option<&Protocol> {
        self.bindings.get(var)
    }
}

/// Result of a projection: the reactive role yields a definition, the
/// enabling and per-node roles yield reactions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Projected {
    Definition(Definition),
    Reaction(Reaction),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProjectError {
    /// Cannot occur for well-formed input.
    #[error("recursion variable {0} is unbound")]
    UnboundVariable(RecVar),
    /// Cannot occur for well-formed input.
    #[error("recursion variable {0} is not guarded")]
    UnguardedRecursion(RecVar),
}

/// Projects `p` under `role`.
pub fn project(
    p: &Protocol,
    role: &ProjectionRole,
    env: &ProjectionEnv,
) -> Result<Projected, ProjectError> {
    Ok(match role {
        ProjectionRole::Reactive => Projected::Definition(project_reactive(p, env)?),
        ProjectionRole::Enabling => Projected::Reaction(project_enabling(p, env)?),
        ProjectionRole::ActiveOf(id) => Projected::Reaction(project_active(p, id, env)?),
    })
}

/// Reactive projection: a parallel composition of persistent inputs, one
/// per synchronisation action, each activating the enabling projection of
/// its continuation.
pub fn project_reactive(p: &Protocol, env: &ProjectionEnv) -> Result<Definition, ProjectError> {
    match p {
        Protocol::Nil | Protocol::Var(_) => Ok(Definition::zero()),
        Protocol::Fork(l, r) => Ok(Definition::par(
            project_reactive(l, env)?,
            project_reactive(r, env)?,
        )),
        Protocol::Rec(x, body) => {
            let env = env.bind(x.clone(), (**body).clone());
            project_reactive(body, &env)
        }
        Protocol::Active(_, body) => project_reactive(body, env),
        Protocol::Sum(s) => {
            let mut parts = Vec::new();
            for branch in s.branches() {
                let cont = enabling(&branch.cont, env, &mut BTreeSet::new())?;
                parts.push(Definition::input(
                    branch.in_cond.clone(),
                    branch.label.clone(),
                    branch.dir,
                    cont,
                ));
                parts.push(project_reactive(&branch.cont, env)?);
            }
            let mut it = parts.into_iter().rev();
            let last = it.next().expect("summations are nonempty");
            Ok(it.fold(last, |acc, d| Definition::par(d, acc)))
        }
    }
}

/// Enabling projection: the output choice over the initial actions of `p`.
pub fn project_enabling(p: &Protocol, env: &ProjectionEnv) -> Result<Reaction, ProjectError> {
    enabling(p, env, &mut BTreeSet::new())
}

/// `looked_up` holds the variables on the current lookup path; revisiting
/// one means an unguarded cycle, which only a non-well-formed protocol can
/// produce. The set backtracks so parallel occurrences of one variable are
/// fine.
fn enabling(
    p: &Protocol,
    env: &ProjectionEnv,
    looked_up: &mut BTreeSet<RecVar>,
) -> Result<Reaction, ProjectError> {
    match p {
        Protocol::Nil => Ok(Reaction::Zero),
        Protocol::Var(x) => {
            let body = env
                .lookup(x)
                .ok_or_else(|| ProjectError::UnboundVariable(x.clone()))?;
            if !looked_up.insert(x.clone()) {
                return Err(ProjectError::UnguardedRecursion(x.clone()));
            }
            let result = enabling(body, env, looked_up);
            looked_up.remove(x);
            result
        }
        Protocol::Fork(l, r) => Ok(Reaction::par(
            enabling(l, env, looked_up)?,
            enabling(r, env, looked_up)?,
        )),
        Protocol::Rec(x, body) => {
            let env = env.bind(x.clone(), (**body).clone());
            enabling(body, &env, looked_up)
        }
        Protocol::Active(_, body) => enabling(body, env, looked_up),
        Protocol::Sum(s) => {
            let mut outputs = s
                .branches()
                .iter()
                .map(|b| Choice::output(b.out_cond.clone(), b.label.clone(), b.dir));
            let first = outputs.next().expect("summations are nonempty");
            Ok(Reaction::Of(outputs.fold(first, Choice::plus)))
        }
    }
}

/// Per-node projection: the enabling behaviour of every stage where `id`
/// holds the active role.
pub fn project_active(
    p: &Protocol,
    id: &NodeId,
    env: &ProjectionEnv,
) -> Result<Reaction, ProjectError> {
    match p {
        Protocol::Nil | Protocol::Var(_) => Ok(Reaction::Zero),
        Protocol::Fork(l, r) => Ok(Reaction::par(
            project_active(l, id, env)?,
            project_active(r, id, env)?,
        )),
        Protocol::Rec(x, body) => {
            let env = env.bind(x.clone(), (**body).clone());
            project_active(body, id, &env)
        }
        Protocol::Active(node, body) => {
            if node == id {
                Ok(Reaction::par(
                    project_active(body, id, env)?,
                    project_enabling(body, env)?,
                ))
            } else {
                project_active(body, id, env)
            }
        }
        Protocol::Sum(s) => {
            let mut parts = Vec::new();
            for branch in s.branches() {
                parts.push(project_active(&branch.cont, id, env)?);
            }
            let mut it = parts.into_iter().rev();
            let last = it.next().expect("summations are nonempty");
            Ok(it.fold(last, |acc, r| Reaction::par(r, acc)))
        }
    }
}

/// Projects a whole configuration: one node per register, every node
/// carrying the shared reactive definition next to its own enabling view.
pub fn project_network(c: &Configuration) -> Result<Network, ProjectError> {
    let env = ProjectionEnv::new();
    let reactive = project_reactive(&c.protocol, &env)?;
    let mut nodes = Vec::new();
    for (id, state) in c.delta.iter() {
        let active = project_active(&c.protocol, id, &env)?;
        nodes.push(NetNode {
            state: state.clone(),
            defs: Definition::par(reactive.clone(), Definition::React(active)),
        });
    }
    Ok(Network::compose(nodes).expect("configuration domain is nonempty"))
}
