use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::params::{AgentParams, BoundParams, EncoderMode, Scheme};
use crate::error::{Error, Result};
use crate::langgen::{InstructionSet, TokenId};
use crate::navsim::{navigable_actions, step, Action, Candidate, EnvState, NavGraph, Trajectory};
use crate::numcore::{Tape, Tensor, Var};

/// Everything the policy computed at one decoding step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    /// Attention over the K panorama views.
    pub gamma: Vec<f64>,
    /// Per instruction, attention over its tokens.
    pub alpha: Vec<Vec<f64>>,
    /// Per instruction, the attended context, in slot order.
    pub contexts: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    /// Candidate actions in scoring order (moves by slot, then STOP).
    pub candidates: Vec<Action>,
    pub chosen: usize,
    /// `ln p(chosen)`.
    pub log_prob: f64,
}

/// How per-instruction contexts become `z_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Aggregate every instruction with the given scheme.
    Joint(Scheme),
    /// Single-instruction sequence-to-sequence agent: `z_t` is the one
    /// context, no aggregation step at all.
    Seq2Seq,
}

/// `[feature; sin ψ, cos ψ, sin ω, cos ω]`.
pub fn build_action_embedding(feature: &[f64], heading: f64, elevation: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(feature.len() + 4);
    out.extend_from_slice(feature);
    out.extend([
        libm::sin(heading),
        libm::cos(heading),
        libm::sin(elevation),
        libm::cos(elevation),
    ]);
    out
}

/// Embedding of a candidate; STOP is the zero vector.
pub fn candidate_embedding(c: &Candidate<'_>, feat_dim: usize) -> Vec<f64> {
    match c.feature {
        Some(f) => build_action_embedding(f, c.heading, c.elevation),
        None => vec![0.0; feat_dim + 4],
    }
}

/// Runs the encoder LSTM of `arm` over `tokens`; returns the `[L, H]` word
/// features.
pub fn encode_instruction(
    tape: &mut Tape<'_>,
    bound: &BoundParams,
    hidden: usize,
    arm: usize,
    tokens: &[TokenId],
) -> Result<Var> {
    if tokens.is_empty() {
        return Err(Error::Contract("cannot encode an empty instruction".into()));
    }
    let &(w, b) = bound.encoders.get(arm).ok_or(Error::Arity {
        expected: bound.encoders.len(),
        got: arm + 1,
    })?;
    let mut h = tape.constant_vec(vec![0.0; hidden]);
    let mut c = tape.constant_vec(vec![0.0; hidden]);
    let mut rows = Vec::with_capacity(tokens.len());
    for &t in tokens {
        let x = tape.gather_row(bound.embedding, t as usize)?;
        (h, c) = tape.lstm_cell(x, h, c, w, b)?;
        rows.push(h);
    }
    tape.stack(&rows)
}

/// One-hop attention over the panorama `[J, F]` keyed by `h_prev`; returns
/// `(s_t, γ)`.
pub fn visual_attend(tape: &mut Tape<'_>, bound: &BoundParams, h_prev: Var, panorama: Var) -> Result<(Var, Var)> {
    let q = tape.matvec(bound.w_h, h_prev)?;
    let r = tape.vecmat(q, bound.w_s)?;
    let logits = tape.matvec(panorama, r)?;
    let gamma = tape.softmax(logits)?;
    Ok((tape.vecmat(gamma, panorama)?, gamma))
}

/// Decoder step on `[s_t; a_prev]`; returns `(h_t, c_t)`.
pub fn memory_update(
    tape: &mut Tape<'_>,
    bound: &BoundParams,
    s_t: Var,
    a_prev: Var,
    h_prev: Var,
    c_prev: Var,
) -> Result<(Var, Var)> {
    let x = tape.concat(&[s_t, a_prev])?;
    tape.lstm_cell(x, h_prev, c_prev, bound.decoder.0, bound.decoder.1)
}

/// Attention of `h_t` over word features `[L, H]`; returns `(c, α)`.
pub fn text_context(tape: &mut Tape<'_>, h_t: Var, words: Var, masked: &[bool]) -> Result<(Var, Var)> {
    let logits = tape.matvec(words, h_t)?;
    let alpha = tape.masked_softmax(logits, masked)?;
    Ok((tape.vecmat(alpha, words)?, alpha))
}

fn by_content(tape: &Tape<'_>, a: Var, b: Var) -> Ordering {
    let (x, y) = (tape.value(a), tape.value(b));
    x.iter()
        .zip(y)
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Parameter-free combination of per-instruction contexts.
///
/// Mean and max reduce the contexts after sorting them by value, so any
/// permutation of the inputs gives bit-identical output. Concat keeps slot
/// order and insists on exactly `arity` parts.
pub fn aggregate(tape: &mut Tape<'_>, contexts: &[Var], scheme: Scheme, arity: usize) -> Result<Var> {
    if contexts.is_empty() {
        return Err(Error::Arity { expected: arity, got: 0 });
    }
    match scheme {
        Scheme::Concat => {
            if contexts.len() != arity {
                return Err(Error::Arity {
                    expected: arity,
                    got: contexts.len(),
                });
            }
            tape.concat(contexts)
        }
        Scheme::Mean | Scheme::Max => {
            let mut sorted = contexts.to_vec();
            sorted.sort_by(|&a, &b| by_content(tape, a, b));
            if scheme == Scheme::Mean {
                tape.mean(&sorted)
            } else {
                tape.max(&sorted)
            }
        }
    }
}

/// Bilinear candidate scores `u_kᵀ W_uᵀ W_z [h; z]`; returns the logits.
pub fn action_logits(tape: &mut Tape<'_>, bound: &BoundParams, h_t: Var, z_t: Var, cands: Var) -> Result<Var> {
    let hz = tape.concat(&[h_t, z_t])?;
    let q = tape.matvec(bound.w_z, hz)?;
    let r = tape.vecmat(q, bound.w_u)?;
    tape.matvec(cands, r)
}

/// Softmax of [`action_logits`].
pub fn action_distribution(tape: &mut Tape<'_>, bound: &BoundParams, h_t: Var, z_t: Var, cands: Var) -> Result<Var> {
    let logits = action_logits(tape, bound, h_t, z_t, cands)?;
    tape.softmax(logits)
}

/// First index of the maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

enum Drive<'a> {
    Greedy { t_max: usize },
    Forced(&'a [Action]),
}

/// Result of one episode on a tape.
pub struct Episode {
    pub trajectory: Trajectory,
    pub traces: Vec<StepTrace>,
    /// Scalar `Σ_t ln p(a_t)`.
    pub log_prob: Var,
}

fn arm_for(params: &AgentParams, slot: usize, m: usize) -> Result<usize> {
    match params.config.encoder_mode {
        EncoderMode::Shared => Ok(0),
        EncoderMode::MultiArm if m <= params.encoders.len() => Ok(slot),
        EncoderMode::MultiArm => Err(Error::Arity {
            expected: params.encoders.len(),
            got: m,
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn drive<'p>(
    tape: &mut Tape<'p>,
    params: &'p AgentParams,
    bound: &BoundParams,
    graph: &NavGraph,
    instructions: &[Vec<TokenId>],
    start: EnvState,
    route: Route,
    mode: Drive<'_>,
) -> Result<Episode> {
    let cfg = &params.config;
    let m = instructions.len();
    if m == 0 {
        return Err(Error::Contract("instruction set is empty".into()));
    }
    if route == Route::Seq2Seq && m != 1 {
        return Err(Error::Arity { expected: 1, got: m });
    }
    if graph.feat_dim() != cfg.feat_dim {
        return Err(Error::shape("rollout", &[cfg.feat_dim], &[graph.feat_dim()]));
    }
    let mut words = Vec::with_capacity(m);
    for (slot, toks) in instructions.iter().enumerate() {
        let arm = arm_for(params, slot, m)?;
        words.push(encode_instruction(tape, bound, cfg.hidden, arm, toks)?);
    }
    let masks: Vec<Vec<bool>> = instructions.iter().map(|t| vec![false; t.len()]).collect();

    let mut state = start;
    let mut h = tape.constant_vec(vec![0.0; cfg.hidden]);
    let mut c = tape.constant_vec(vec![0.0; cfg.hidden]);
    let mut a_prev = tape.constant_vec(vec![0.0; cfg.action_dim()]);
    let mut nodes = vec![state.node];
    let mut actions = Vec::new();
    let mut length = 0.0;
    let mut terms = Vec::new();
    let mut traces = Vec::new();

    loop {
        let t = actions.len();
        match mode {
            Drive::Greedy { t_max } if state.step_count >= t_max => break,
            Drive::Forced(expert) if t == expert.len() => break,
            _ => {}
        }
        let cands = navigable_actions(graph, &state)?;
        let views = &graph.views[state.node];
        let mut pano = Vec::with_capacity(views.len() * cfg.feat_dim);
        for v in views {
            pano.extend_from_slice(&v.feature);
        }
        let pano = tape.constant(Tensor::matrix(views.len(), cfg.feat_dim, pano)?);

        let (s_t, gamma) = visual_attend(tape, bound, h, pano)?;
        (h, c) = memory_update(tape, bound, s_t, a_prev, h, c)?;
        let mut ctx = Vec::with_capacity(m);
        let mut alphas = Vec::with_capacity(m);
        for (w, mask) in words.iter().zip(&masks) {
            let (ci, ai) = text_context(tape, h, *w, mask)?;
            ctx.push(ci);
            alphas.push(ai);
        }
        let z = match route {
            Route::Seq2Seq => ctx[0],
            Route::Joint(scheme) => {
                let z = aggregate(tape, &ctx, scheme, cfg.z_dim() / cfg.hidden)?;
                if tape.value(z).len() != cfg.z_dim() {
                    return Err(Error::Arity {
                        expected: cfg.z_dim() / cfg.hidden,
                        got: m,
                    });
                }
                z
            }
        };

        let mut emb = Vec::with_capacity(cands.len() * cfg.action_dim());
        for cand in &cands {
            emb.extend(candidate_embedding(cand, cfg.feat_dim));
        }
        let u = tape.constant(Tensor::matrix(cands.len(), cfg.action_dim(), emb)?);
        let logits = action_logits(tape, bound, h, z, u)?;
        let logp = tape.log_softmax(logits)?;

        let k = match mode {
            Drive::Greedy { .. } => argmax(tape.value(logits)),
            Drive::Forced(expert) => cands
                .iter()
                .position(|cd| cd.action == expert[t])
                .ok_or_else(|| Error::Data {
                    step: t,
                    msg: format!("expert action {:?} is not navigable from node {}", expert[t], state.node),
                })?,
        };
        let term = tape.pick(logp, k)?;
        terms.push(term);
        let lp = tape.value(logp);
        traces.push(StepTrace {
            gamma: tape.value(gamma).to_vec(),
            alpha: alphas.iter().map(|a| tape.value(*a).to_vec()).collect(),
            contexts: ctx.iter().map(|a| tape.value(*a).to_vec()).collect(),
            z: tape.value(z).to_vec(),
            logits: tape.value(logits).to_vec(),
            probs: lp.iter().map(|x| libm::exp(*x)).collect(),
            candidates: cands.iter().map(|cd| cd.action).collect(),
            chosen: k,
            log_prob: lp[k],
        });

        let action = cands[k].action;
        let next = step(graph, &state, action)?;
        actions.push(action);
        if action == Action::Stop {
            break;
        }
        length += graph.edge_length(state.node, next.node)?;
        nodes.push(next.node);
        a_prev = tape.constant_vec(candidate_embedding(&cands[k], cfg.feat_dim));
        state = next;
    }

    let log_prob = if terms.is_empty() {
        tape.constant(Tensor::scalar(0.0))
    } else {
        let all = tape.concat(&terms)?;
        tape.sum(all)
    };
    Ok(Episode {
        trajectory: Trajectory {
            nodes,
            actions,
            length,
        },
        traces,
        log_prob,
    })
}

fn start_of(set: &InstructionSet) -> Result<EnvState> {
    let node = *set
        .path
        .first()
        .ok_or_else(|| Error::Contract(format!("{}: empty path", set.path_id)))?;
    Ok(EnvState::start(node, set.heading))
}

/// Greedy decoding from the start of `set` until STOP or `t_max` moves.
pub fn rollout(
    params: &AgentParams,
    graph: &NavGraph,
    set: &InstructionSet,
    route: Route,
    t_max: usize,
) -> Result<(Trajectory, Vec<StepTrace>)> {
    let mut tape = Tape::no_grad();
    let bound = params.bind(&mut tape);
    let ep = drive(
        &mut tape,
        params,
        &bound,
        graph,
        &set.instructions,
        start_of(set)?,
        route,
        Drive::Greedy { t_max },
    )?;
    Ok((ep.trajectory, ep.traces))
}

/// Records the teacher-forced episode on `tape`. The trajectory must start at
/// the start of `set`.
pub fn teacher_forced_on<'p>(
    tape: &mut Tape<'p>,
    params: &'p AgentParams,
    bound: &BoundParams,
    graph: &NavGraph,
    expert: &Trajectory,
    set: &InstructionSet,
    route: Route,
) -> Result<Episode> {
    let start = start_of(set)?;
    if expert.start() != start.node {
        return Err(Error::Data {
            step: 0,
            msg: format!("expert starts at {} but the episode starts at {}", expert.start(), start.node),
        });
    }
    drive(
        tape,
        params,
        bound,
        graph,
        &set.instructions,
        start,
        route,
        Drive::Forced(&expert.actions),
    )
}

/// `ln π(τ | X)` with expert actions fed at every step.
pub fn teacher_forced_logprob(
    params: &AgentParams,
    graph: &NavGraph,
    expert: &Trajectory,
    set: &InstructionSet,
    route: Route,
) -> Result<f64> {
    Ok(teacher_forced_traced(params, graph, expert, set, route)?.0)
}

/// [`teacher_forced_logprob`] plus the per-step traces.
pub fn teacher_forced_traced(
    params: &AgentParams,
    graph: &NavGraph,
    expert: &Trajectory,
    set: &InstructionSet,
    route: Route,
) -> Result<(f64, Vec<StepTrace>)> {
    let mut tape = Tape::no_grad();
    let bound = params.bind(&mut tape);
    let ep = teacher_forced_on(&mut tape, params, &bound, graph, expert, set, route)?;
    Ok((tape.scalar(ep.log_prob), ep.traces))
}

/// Convenience: word features of one instruction as plain rows.
pub fn encode_tokens(params: &AgentParams, arm: usize, tokens: &[TokenId]) -> Result<Vec<Vec<f64>>> {
    let mut tape = Tape::no_grad();
    let bound = params.bind(&mut tape);
    let e = encode_instruction(&mut tape, &bound, params.config.hidden, arm, tokens)?;
    Ok(tape.value(e).chunks(params.config.hidden).map(|r| r.to_vec()).collect())
}
