use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::params::{AgentParams, EncoderMode, ModelConfig, Scheme};
use super::policy::{teacher_forced_logprob, teacher_forced_on, Route};
use crate::error::{Error, Result};
use crate::langgen::{InstructionSet, Split, Vocabulary};
use crate::navsim::{generate_world, DistanceTable, NavGraph, Trajectory, WorldConfig};
use crate::numcore::{finite_diff_check, GradCheckReport, Tape};
use crate::rng::stream;

/// A three-decision episode (two moves, then STOP) with two short
/// instructions, for checking the full teacher-forced gradient.
pub struct GradFixture {
    pub graph: NavGraph,
    pub expert: Trajectory,
    pub set: InstructionSet,
    pub params: AgentParams,
}

impl GradFixture {
    /// `hidden` is the model width. The world is compact (4 views, 8 feature
    /// dims) and parameters are drawn uniformly in ±0.5 rather than at the
    /// training initialization: central differences at eps 1e-5 cannot resolve
    /// gradient entries much below 1e-6, and at init many encoder weights sit
    /// around 1e-8.
    pub fn new(seed: u64, hidden: usize, scheme: Scheme) -> Result<Self> {
        let graph = generate_world(
            "gradcheck",
            seed,
            &WorldConfig {
                n_nodes: 12,
                k_views: 4,
                feat_dim: 8,
                density: 0.5,
            },
        )?;
        let table = DistanceTable::new(&graph);
        let (a, b) = (0..graph.n_nodes())
            .flat_map(|a| (0..graph.n_nodes()).map(move |b| (a, b)))
            .find(|&(a, b)| table.hops(a, b).map(|h| h == 2).unwrap_or(false))
            .ok_or_else(|| Error::Sampling("no two-hop pair in the check world".into()))?;
        let expert = Trajectory::from_path(&graph, table.path(a, b)?, true)?;
        let vocab = Vocabulary::standard();
        let instructions = vec![
            vocab.tokenize("<bos> go to the kitchen . <eos>"),
            vocab.tokenize("<bos> turn left and stop . <eos>"),
        ];
        let set = InstructionSet {
            path_id: "gradcheck-0000".into(),
            graph_id: graph.graph_id.clone(),
            split: Split::Train,
            heading: 0.0,
            path: expert.nodes.clone(),
            instr_text: vec!["go to the kitchen .".into(), "turn left and stop .".into()],
            hops_mentioned: vec![vec![false; 2]; 2],
            instructions,
        };
        let cfg = ModelConfig {
            vocab_size: vocab.len(),
            embed_dim: 4,
            hidden,
            feat_dim: graph.feat_dim(),
            scheme,
            encoder_mode: EncoderMode::Shared,
            arity: 2,
        };
        let mut params = AgentParams::init(cfg, seed)?;
        let mut rng = stream(seed, &[0x6763]);
        for t in params.tensors_mut() {
            for x in t.data_mut() {
                *x = rng.random_range(-0.5..0.5);
            }
        }
        Ok(GradFixture {
            graph,
            expert,
            set,
            params,
        })
    }

    /// Loss `-ln π(τ|X)` and its gradient by reverse mode, flattened in
    /// parameter order.
    pub fn analytic(&self, params: &AgentParams) -> Result<(f64, Vec<f64>)> {
        let route = Route::Joint(params.config.scheme);
        let mut tape = Tape::new();
        let b = params.bind(&mut tape);
        let ep = teacher_forced_on(&mut tape, params, &b, &self.graph, &self.expert, &self.set, route)?;
        let loss = tape.scale(ep.log_prob, -1.0);
        tape.backward(loss)?;
        Ok((tape.scalar(loss), b.grads(&tape).concat()))
    }

    pub fn loss(&self, params: &AgentParams) -> Result<f64> {
        let route = Route::Joint(params.config.scheme);
        Ok(-teacher_forced_logprob(params, &self.graph, &self.expert, &self.set, route)?)
    }

    /// Compares the reverse-mode gradient at `params` with central differences.
    pub fn check_at(&self, params: &AgentParams, eps: f64) -> Result<GradCheckReport> {
        let (_, analytic) = self.analytic(params)?;
        let mut scratch = params.clone();
        finite_diff_check(
            |x| {
                scratch.load_flat(x)?;
                self.loss(&scratch)
            },
            &params.flatten(),
            &analytic,
            eps,
        )
    }

    pub fn check(&self, eps: f64) -> Result<GradCheckReport> {
        self.check_at(&self.params, eps)
    }
}

/// End-to-end check of the teacher-forced loss for every aggregation scheme;
/// returns the worst report.
pub fn end_to_end_gradcheck(seed: u64, hidden: usize, eps: f64) -> Result<GradCheckReport> {
    let mut worst: Option<GradCheckReport> = None;
    for scheme in [Scheme::Mean, Scheme::Max, Scheme::Concat] {
        let r = GradFixture::new(seed, hidden, scheme)?.check(eps)?;
        if worst.as_ref().is_none_or(|w| r.max_rel_error > w.max_rel_error) {
            worst = Some(r);
        }
    }
    Ok(worst.expect("three schemes checked"))
}
