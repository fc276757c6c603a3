use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::describe::{describe_trajectory, N_STYLES};
use super::vocab::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::navsim::{sample_expert_trajectories, DistanceTable, NavGraph, NodeId, Trajectory};
use crate::rng::{derive, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    ValSeen,
    ValUnseen,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::ValSeen => "val_seen",
            Split::ValUnseen => "val_unseen",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val_seen" => Ok(Split::ValSeen),
            "val_unseen" => Ok(Split::ValUnseen),
            other => Err(Error::Format(format!("unknown split {other:?}"))),
        }
    }
}

/// One expert trajectory with its M instructions.
#[derive(Clone, Debug, PartialEq)]
pub struct InstructionSet {
    pub path_id: String,
    pub graph_id: String,
    pub split: Split,
    /// Heading at the start node, radians.
    pub heading: f64,
    pub path: Vec<NodeId>,
    /// Token ids per instruction, each wrapped in BOS/EOS.
    pub instructions: Vec<Vec<TokenId>>,
    pub instr_text: Vec<String>,
    /// Per instruction, one flag per hop.
    pub hops_mentioned: Vec<Vec<bool>>,
}

impl InstructionSet {
    pub fn m(&self) -> usize {
        self.instructions.len()
    }

    pub fn trajectory(&self, graph: &NavGraph) -> Result<Trajectory> {
        Trajectory::from_path(graph, self.path.clone(), true)
    }

    /// Copy holding only instruction `i`.
    pub fn single(&self, i: usize) -> InstructionSet {
        InstructionSet {
            instructions: alloc::vec![self.instructions[i].clone()],
            instr_text: alloc::vec![self.instr_text[i].clone()],
            hops_mentioned: alloc::vec![self.hops_mentioned[i].clone()],
            ..self.clone()
        }
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(format!("{}: {msg}", self.path_id)));
        if self.instructions.is_empty() {
            return bad("no instructions".into());
        }
        if self.path.is_empty() {
            return bad("empty path".into());
        }
        for ins in &self.instructions {
            if ins.len() < 3 || ins[0] != super::vocab::BOS || *ins.last().unwrap() != super::vocab::EOS {
                return bad("instruction must be BOS, at least one token, EOS".into());
            }
            if ins.iter().any(|&t| t as usize >= vocab.len()) {
                return bad("token id outside vocabulary".into());
            }
        }
        if self.instr_text.len() != self.instructions.len() {
            return bad("instr_text and instructions differ in length".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub n_train_per_world: usize,
    pub n_val_seen_per_world: usize,
    pub n_val_unseen_per_world: usize,
    pub m: usize,
    pub elide_p: f64,
    pub seed: u64,
    pub min_hops: usize,
    pub max_hops: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_train_per_world: 50,
            n_val_seen_per_world: 25,
            n_val_unseen_per_world: 100,
            m: 3,
            elide_p: 0.4,
            seed: 11,
            min_hops: 2,
            max_hops: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Sorted by `path_id`.
    pub records: Vec<InstructionSet>,
    /// Set when `m` exceeded the number of paraphrase banks.
    pub styles_reused: bool,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &InstructionSet> {
        self.records.iter().filter(move |r| r.split == split)
    }
}

/// Builds train / val_seen trajectories on `seen` graphs and val_unseen
/// trajectories on `unseen` graphs, M instructions each.
pub fn generate_dataset(
    cfg: &DatasetConfig,
    seen: &[NavGraph],
    unseen: &[NavGraph],
    vocab: &Vocabulary,
) -> Result<Dataset> {
    if cfg.m < 1 {
        return Err(Error::Config("need at least one instruction per trajectory".into()));
    }
    let mut records = Vec::new();
    let plan = seen
        .iter()
        .map(|g| (g, cfg.n_train_per_world, cfg.n_val_seen_per_world, false))
        .chain(unseen.iter().map(|g| (g, 0, cfg.n_val_unseen_per_world, true)));
    for (gi, (graph, n_train, n_val, held_out)) in plan.enumerate() {
        let table = DistanceTable::new(graph);
        let gseed = derive(cfg.seed, &[gi as u64]);
        let trajs = sample_expert_trajectories(
            graph,
            &table,
            gseed,
            n_train + n_val,
            cfg.min_hops,
            cfg.max_hops,
        )?;
        for (ti, traj) in trajs.iter().enumerate() {
            let split = match (held_out, ti < n_train) {
                (true, _) => Split::ValUnseen,
                (false, true) => Split::Train,
                (false, false) => Split::ValSeen,
            };
            let tseed = derive(gseed, &[ti as u64]);
            let mut order: Vec<usize> = (0..N_STYLES).collect();
            order.shuffle(&mut stream(tseed, &[0x7374_796c]));
            let heading = 0.0;
            let mut set = InstructionSet {
                path_id: format!("{}-{ti:04}", graph.graph_id),
                graph_id: graph.graph_id.clone(),
                split,
                heading,
                path: traj.nodes.clone(),
                instructions: Vec::with_capacity(cfg.m),
                instr_text: Vec::with_capacity(cfg.m),
                hops_mentioned: Vec::with_capacity(cfg.m),
            };
            for slot in 0..cfg.m {
                let style = order[slot % N_STYLES];
                let d = describe_trajectory(
                    graph,
                    traj,
                    heading,
                    derive(tseed, &[slot as u64]),
                    cfg.elide_p,
                    style,
                    vocab,
                )?;
                set.instructions.push(d.tokens);
                set.instr_text.push(d.text);
                set.hops_mentioned.push(d.mentioned);
            }
            records.push(set);
        }
    }
    records.sort_by(|a, b| a.path_id.cmp(&b.path_id));
    Ok(Dataset {
        records,
        styles_reused: cfg.m > N_STYLES,
    })
}
