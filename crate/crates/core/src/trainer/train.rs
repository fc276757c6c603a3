use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::config::{Paradigm, TrainConfig};
use super::optim::{clip_global_norm, Adam};
use crate::agent::{teacher_forced_on, AgentParams, Route};
use crate::error::{Error, Result};
use crate::langgen::InstructionSet;
use crate::navsim::{NavGraph, Trajectory};
use crate::numcore::Tape;
use crate::rng::stream;

/// One training trajectory resolved against its graph.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainItem {
    /// Index into the graph slice passed alongside.
    pub graph: usize,
    pub expert: Trajectory,
    pub set: InstructionSet,
}

/// Resolves `records` against `graphs` by `graph_id`, keeping record order.
pub fn prepare(records: &[InstructionSet], graphs: &[NavGraph]) -> Result<Vec<TrainItem>> {
    records
        .iter()
        .map(|r| {
            let gi = graphs
                .iter()
                .position(|g| g.graph_id == r.graph_id)
                .ok_or_else(|| Error::Lookup(format!("{}: unknown graph {}", r.path_id, r.graph_id)))?;
            Ok(TrainItem {
                graph: gi,
                expert: r.trajectory(&graphs[gi])?,
                set: r.clone(),
            })
        })
        .collect()
}

/// `(graph, expert, instruction set, route)` units whose losses are averaged.
fn units<'a>(
    params: &AgentParams,
    batch: &'a [TrainItem],
    paradigm: Paradigm,
) -> impl Iterator<Item = (&'a TrainItem, InstructionSet, Route)> + 'a {
    let scheme = params.config.scheme;
    batch.iter().flat_map(move |it| {
        let sets: Vec<(InstructionSet, Route)> = match paradigm {
            Paradigm::LeoJoint => vec![(it.set.clone(), Route::Joint(scheme))],
            Paradigm::BaselineIid => (0..it.set.m()).map(|i| (it.set.single(i), Route::Seq2Seq)).collect(),
        };
        sets.into_iter().map(move |(s, r)| (it, s, r))
    })
}

/// Mean negative log-likelihood over the batch: per (trajectory, single
/// instruction) pair for the baseline, per trajectory for the joint model.
pub fn compute_loss(params: &AgentParams, graphs: &[NavGraph], batch: &[TrainItem], paradigm: Paradigm) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for (it, set, route) in units(params, batch, paradigm) {
        let mut tape = Tape::no_grad();
        let b = params.bind(&mut tape);
        let ep = teacher_forced_on(&mut tape, params, &b, &graphs[it.graph], &it.expert, &set, route)?;
        total -= tape.scalar(ep.log_prob);
        n += 1;
    }
    Ok(total / n as f64)
}

/// [`compute_loss`] with its gradient, in parameter order. Episodes are
/// accumulated in batch order.
pub fn loss_and_grad(
    params: &AgentParams,
    graphs: &[NavGraph],
    batch: &[TrainItem],
    paradigm: Paradigm,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let mut grads: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.numel()]).collect();
    let mut total = 0.0;
    let mut n = 0usize;
    for (it, set, route) in units(params, batch, paradigm) {
        let mut tape = Tape::new();
        let b = params.bind(&mut tape);
        let ep = teacher_forced_on(&mut tape, params, &b, &graphs[it.graph], &it.expert, &set, route)?;
        let loss = tape.scale(ep.log_prob, -1.0);
        tape.backward(loss)?;
        total += tape.scalar(loss);
        for (acc, v) in grads.iter_mut().zip(b.vars()) {
            for (a, g) in acc.iter_mut().zip(tape.grad(v)) {
                *a += g;
            }
        }
        n += 1;
    }
    let inv = 1.0 / n as f64;
    grads.iter_mut().flatten().for_each(|g| *g *= inv);
    Ok((total * inv, grads))
}

/// Observer of training progress. `std` builds use it for timing, loss files
/// and per-epoch checkpoints.
pub trait TrainHooks {
    /// Called once before training (epoch 0, initial loss) and after every
    /// epoch with that epoch's mean batch loss.
    fn on_epoch(&mut self, _epoch: usize, _loss: f64, _params: &AgentParams) -> Result<()> {
        Ok(())
    }
}

/// Hooks that do nothing.
pub struct NoHooks;

impl TrainHooks for NoHooks {}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: AgentParams,
    /// Index 0: loss over the training set at initialization; index e: mean
    /// loss over the batches of epoch e.
    pub losses: Vec<f64>,
}

/// Teacher-forced MLE with Adam and global-norm clipping. The visiting order
/// of `items` is reshuffled each epoch from `cfg.seed`, so the run is a pure
/// function of its inputs.
pub fn train(
    cfg: &TrainConfig,
    params: AgentParams,
    graphs: &[NavGraph],
    items: &[TrainItem],
    hooks: &mut dyn TrainHooks,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::Contract("training split is empty".into()));
    }
    let mut params = params;
    let mut opt = Adam::new(&params, cfg.lr);
    let initial = compute_loss(&params, graphs, items, cfg.paradigm)?;
    if !initial.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            batch: 0,
            loss: initial,
        });
    }
    let mut losses = vec![initial];
    hooks.on_epoch(0, initial, &params)?;

    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut sorted = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream(cfg.seed, &[0x7368_7566, epoch as u64]));
        let mut sum = 0.0;
        let mut seen = 0usize;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            // accumulate in dataset (path_id) order so sums don't depend on the shuffle
            sorted.clear();
            sorted.extend_from_slice(chunk);
            sorted.sort_unstable();
            batch.clear();
            batch.extend(sorted.iter().map(|&i| items[i].clone()));
            let (loss, mut grads) = loss_and_grad(&params, graphs, &batch, cfg.paradigm)?;
            if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: bi,
                    loss,
                });
            }
            clip_global_norm(&mut grads, cfg.clip);
            opt.step(&mut params, &grads)?;
            sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let epoch_loss = sum / seen as f64;
        losses.push(epoch_loss);
        hooks.on_epoch(epoch, epoch_loss, &params)?;
    }
    Ok(TrainOutcome { params, losses })
}
