use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::agent::{rollout, AgentParams, Route, StepTrace};
use crate::error::{Error, Result};
use crate::langgen::InstructionSet;
use crate::navsim::{DistanceTable, NavGraph, NodeId, Trajectory};

/// An episode succeeds when it stops closer than this to the goal, in meters.
pub const SUCCESS_RADIUS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub path_id: String,
    pub trajectory: Trajectory,
    pub goal: NodeId,
    /// Geodesic start → goal (ℓ).
    pub shortest: f64,
    /// Length actually walked (p).
    pub taken: f64,
    /// Geodesic final node → goal.
    pub nav_error: f64,
    pub success: bool,
    pub spl_term: f64,
}

/// Scores `traj` against `goal`: NE is the geodesic from the final node,
/// success means NE < 3 m, and the SPL term is `S · ℓ / max(p, ℓ)`.
pub fn score_episode(
    table: &DistanceTable,
    path_id: &str,
    traj: &Trajectory,
    goal: NodeId,
) -> Result<EpisodeResult> {
    let shortest = table.get(traj.start(), goal)?;
    let nav_error = table.get(traj.end(), goal)?;
    let success = nav_error < SUCCESS_RADIUS;
    let denom = traj.length.max(shortest);
    let spl_term = match (success, denom > 0.0) {
        (false, _) => 0.0,
        (true, true) => shortest / denom,
        // start is the goal and the agent never moved
        (true, false) => 1.0,
    };
    Ok(EpisodeResult {
        path_id: path_id.into(),
        trajectory: traj.clone(),
        goal,
        shortest,
        taken: traj.length,
        nav_error,
        success,
        spl_term,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSummary {
    pub n: usize,
    /// Mean trajectory length, meters.
    pub tl: f64,
    /// Mean navigation error, meters.
    pub ne: f64,
    pub sr: f64,
    pub spl: f64,
}

pub fn summarize(episodes: &[EpisodeResult]) -> Result<MetricsSummary> {
    if episodes.is_empty() {
        return Err(Error::Contract("cannot summarize zero episodes".into()));
    }
    let n = episodes.len() as f64;
    let mean = |f: &dyn Fn(&EpisodeResult) -> f64| episodes.iter().map(f).sum::<f64>() / n;
    Ok(MetricsSummary {
        n: episodes.len(),
        tl: mean(&|e| e.taken),
        ne: mean(&|e| e.nav_error),
        sr: mean(&|e| if e.success { 1.0 } else { 0.0 }),
        spl: mean(&|e| e.spl_term),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Setting {
    /// One episode per (trajectory, instruction), each seeing one instruction.
    A,
    /// One episode per trajectory seeing all of its instructions.
    B,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::A => "A",
            Setting::B => "B",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Setting::A),
            "B" | "b" => Ok(Setting::B),
            other => Err(Error::Config(format!("unknown setting {other:?}, expected A or B"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub setting: Setting,
    pub episodes: Vec<EpisodeResult>,
    /// Per episode, when requested.
    pub traces: Vec<Vec<StepTrace>>,
    pub summary: MetricsSummary,
}

/// Greedy rollouts over `records` in the given order. Setting A episodes are
/// named `<path_id>/<instruction index>`.
pub fn evaluate(
    params: &AgentParams,
    graphs: &[NavGraph],
    records: &[InstructionSet],
    setting: Setting,
    route: Route,
    t_max: usize,
    keep_traces: bool,
) -> Result<Evaluation> {
    if setting == Setting::B && route == Route::Seq2Seq {
        return Err(Error::Config(
            "setting B needs an aggregating route; the sequence-to-sequence agent reads one instruction".into(),
        ));
    }
    let tables: Vec<DistanceTable> = graphs.iter().map(DistanceTable::new).collect();
    let mut episodes = Vec::new();
    let mut traces = Vec::new();
    for rec in records {
        let gi = graphs
            .iter()
            .position(|g| g.graph_id == rec.graph_id)
            .ok_or_else(|| Error::Lookup(format!("{}: unknown graph {}", rec.path_id, rec.graph_id)))?;
        let goal = *rec
            .path
            .last()
            .ok_or_else(|| Error::Contract(format!("{}: empty path", rec.path_id)))?;
        let runs: Vec<(String, InstructionSet)> = match setting {
            Setting::A => (0..rec.m())
                .map(|i| (format!("{}/{i}", rec.path_id), rec.single(i)))
                .collect(),
            Setting::B => alloc::vec![(rec.path_id.clone(), rec.clone())],
        };
        for (id, set) in runs {
            let (traj, tr) = rollout(params, &graphs[gi], &set, route, t_max)?;
            episodes.push(score_episode(&tables[gi], &id, &traj, goal)?);
            if keep_traces {
                traces.push(tr);
            }
        }
    }
    let summary = summarize(&episodes)?;
    Ok(Evaluation {
        setting,
        episodes,
        traces,
        summary,
    })
}
