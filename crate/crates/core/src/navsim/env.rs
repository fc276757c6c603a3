use alloc::format;
use alloc::vec::Vec;

use super::world::{NavGraph, NodeId};
use crate::error::{Error, Result};

/// Move through a view slot, or stop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Move(usize),
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvState {
    pub node: NodeId,
    pub heading: f64,
    pub step_count: usize,
    pub stopped: bool,
}

impl EnvState {
    pub fn start(node: NodeId, heading: f64) -> Self {
        EnvState {
            node,
            heading,
            step_count: 0,
            stopped: false,
        }
    }
}

/// One navigable choice at the current node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate<'g> {
    pub action: Action,
    pub neighbor: Option<NodeId>,
    /// View feature; `None` for STOP.
    pub feature: Option<&'g [f64]>,
    pub heading: f64,
    pub elevation: f64,
}

/// Linked views in slot order, then STOP.
pub fn navigable_actions<'g>(graph: &'g NavGraph, state: &EnvState) -> Result<Vec<Candidate<'g>>> {
    graph.node(state.node)?;
    let mut out: Vec<Candidate<'g>> = graph.views[state.node]
        .iter()
        .enumerate()
        .filter_map(|(j, v)| {
            v.neighbor.map(|b| Candidate {
                action: Action::Move(j),
                neighbor: Some(b),
                feature: Some(&v.feature),
                heading: v.heading,
                elevation: v.elevation,
            })
        })
        .collect();
    out.push(Candidate {
        action: Action::Stop,
        neighbor: None,
        feature: None,
        heading: 0.0,
        elevation: 0.0,
    });
    Ok(out)
}

/// Deterministic transition. STOP keeps the node and marks the episode over.
pub fn step(graph: &NavGraph, state: &EnvState, action: Action) -> Result<EnvState> {
    if state.stopped {
        return Err(Error::Contract("episode already stopped".into()));
    }
    match action {
        Action::Stop => Ok(EnvState {
            stopped: true,
            ..*state
        }),
        Action::Move(j) => {
            let view = graph.views[state.node]
                .get(j)
                .filter(|v| v.neighbor.is_some())
                .ok_or_else(|| {
                    Error::Contract(format!("view {j} is not navigable from node {}", state.node))
                })?;
            Ok(EnvState {
                node: view.neighbor.expect("filtered"),
                heading: view.heading,
                step_count: state.step_count + 1,
                stopped: false,
            })
        }
    }
}
