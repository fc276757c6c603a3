//! Run configuration: one `key=value` file covering worlds, data and
//! training, with command-line overrides applied on top.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use leo_core::agent::Scheme;
use leo_core::langgen::DatasetConfig;
use leo_core::navsim::WorldConfig;
use leo_core::trainer::{get_or, parse_kv, TrainConfig};

use crate::error::{Error, Result};

/// Offset between seen and unseen world seeds.
pub const UNSEEN_SEED_OFFSET: u64 = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seen_graphs: usize,
    pub unseen_graphs: usize,
    /// Seen graph `i` uses `world_seed + i`, unseen graph `i` uses
    /// `world_seed + 1000 + i`.
    pub world_seed: u64,
    pub world: WorldConfig,
    pub data: DatasetConfig,
    pub train: TrainConfig,
    /// Model seeds for ablations; the worlds and data stay fixed across them.
    pub seeds: Vec<u64>,
    /// Keep a checkpoint file every this many epochs (0: final only).
    pub checkpoint_every: usize,
}

const RUN_KEYS: [&str; 17] = [
    "seen_graphs",
    "unseen_graphs",
    "world_seed",
    "n_nodes",
    "k_views",
    "feat_dim",
    "density",
    "n_train_per_world",
    "n_val_seen_per_world",
    "n_val_unseen_per_world",
    "m",
    "elide_p",
    "data_seed",
    "min_hops",
    "max_hops",
    "seeds",
    "checkpoint_every",
];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seen_graphs: 6,
            unseen_graphs: 2,
            world_seed: 0,
            world: WorldConfig::default(),
            data: DatasetConfig::default(),
            train: TrainConfig::default(),
            seeds: vec![1, 2, 3, 4, 5],
            checkpoint_every: 0,
        }
    }
}

/// Splits `key=value` overrides as given on the command line.
pub fn parse_overrides(items: &[String]) -> Result<Vec<(String, String)>> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::usage(format!("override {s:?} is not key=value"), "use --set key=value"))
        })
        .collect()
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map
            .keys()
            .find(|k| !RUN_KEYS.contains(&k.as_str()) && !TrainConfig::KEYS.contains(&k.as_str()))
        {
            return Err(Error::usage(
                format!("unknown config key {k:?}"),
                format!(
                    "known keys: {}, {}",
                    RUN_KEYS.join(", "),
                    TrainConfig::KEYS.join(", ")
                ),
            ));
        }
        let d = RunConfig::default();
        let seeds = match map.get("seeds") {
            None => d.seeds,
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::usage(format!("seeds={s:?} is not a comma-separated list"), "e.g. seeds=1,2,3"))?,
        };
        let cfg = RunConfig {
            seen_graphs: get_or(map, "seen_graphs", d.seen_graphs)?,
            unseen_graphs: get_or(map, "unseen_graphs", d.unseen_graphs)?,
            world_seed: get_or(map, "world_seed", d.world_seed)?,
            world: WorldConfig {
                n_nodes: get_or(map, "n_nodes", d.world.n_nodes)?,
                k_views: get_or(map, "k_views", d.world.k_views)?,
                feat_dim: get_or(map, "feat_dim", d.world.feat_dim)?,
                density: get_or(map, "density", d.world.density)?,
            },
            data: DatasetConfig {
                n_train_per_world: get_or(map, "n_train_per_world", d.data.n_train_per_world)?,
                n_val_seen_per_world: get_or(map, "n_val_seen_per_world", d.data.n_val_seen_per_world)?,
                n_val_unseen_per_world: get_or(map, "n_val_unseen_per_world", d.data.n_val_unseen_per_world)?,
                m: get_or(map, "m", d.data.m)?,
                elide_p: get_or(map, "elide_p", d.data.elide_p)?,
                seed: get_or(map, "data_seed", d.data.seed)?,
                min_hops: get_or(map, "min_hops", d.data.min_hops)?,
                max_hops: get_or(map, "max_hops", d.data.max_hops)?,
            },
            train: TrainConfig::from_map(map)?,
            seeds,
            checkpoint_every: get_or(map, "checkpoint_every", d.checkpoint_every)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `text` and applies `overrides` (later ones win).
    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut map = parse_kv(text)?;
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        Self::from_map(&map)
    }

    /// Cross-field checks the individual sections can't make.
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        if self.seen_graphs == 0 {
            return Err(Error::usage("seen_graphs must be at least 1", "training needs a seen world"));
        }
        if self.data.m == 0 {
            return Err(Error::usage("m must be at least 1", "set m=1 for single-instruction data"));
        }
        if self.train.t_max < self.data.max_hops {
            return Err(Error::usage(
                format!(
                    "t_max={} is shorter than the longest expert path (max_hops={})",
                    self.train.t_max, self.data.max_hops
                ),
                "raise t_max or lower max_hops",
            ));
        }
        if self.train.scheme == Scheme::Concat && self.data.m < 2 {
            return Err(Error::usage(
                "concat aggregation with m=1 is just the single-instruction model",
                "use scheme=mean for m=1 data",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::usage("seeds is empty", "e.g. seeds=1,2,3"));
        }
        Ok(())
    }

    /// Canonical `key=value` text; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &self.world;
        let d = &self.data;
        let _ = writeln!(s, "seen_graphs={}", self.seen_graphs);
        let _ = writeln!(s, "unseen_graphs={}", self.unseen_graphs);
        let _ = writeln!(s, "world_seed={}", self.world_seed);
        let _ = writeln!(s, "n_nodes={}\nk_views={}\nfeat_dim={}\ndensity={}", w.n_nodes, w.k_views, w.feat_dim, w.density);
        let _ = writeln!(
            s,
            "n_train_per_world={}\nn_val_seen_per_world={}\nn_val_unseen_per_world={}",
            d.n_train_per_world, d.n_val_seen_per_world, d.n_val_unseen_per_world
        );
        let _ = writeln!(s, "m={}\nelide_p={}\ndata_seed={}", d.m, d.elide_p, d.seed);
        let _ = writeln!(s, "min_hops={}\nmax_hops={}", d.min_hops, d.max_hops);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds={}", seeds.join(","));
        let _ = writeln!(s, "checkpoint_every={}", self.checkpoint_every);
        s.push_str(&self.train.to_text());
        s
    }

    /// `(graph_id, seed)` of every world, seen first.
    pub fn world_ids(&self) -> (Vec<(String, u64)>, Vec<(String, u64)>) {
        let seen = (0..self.seen_graphs)
            .map(|i| (format!("seen{i:02}"), self.world_seed + i as u64))
            .collect();
        let unseen = (0..self.unseen_graphs)
            .map(|i| (format!("unseen{i:02}"), self.world_seed + UNSEEN_SEED_OFFSET + i as u64))
            .collect();
        (seen, unseen)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.train.seed = seed;
        c
    }
}
