//! Deterministic graph-world navigation environment.

mod env;
mod paths;
mod world;

pub use env::{navigable_actions, step, Action, Candidate, EnvState};
pub use paths::{
    eligible_pairs, geodesic, sample_expert_trajectories, sample_expert_trajectory, DistanceTable,
    Trajectory,
};
pub use world::{
    distance, generate_world, heading_between, NavGraph, Node, NodeId, View, WorldConfig,
    MAX_LANDMARKS,
};
