//! Worlds plus dataset, generated from a [`RunConfig`] or loaded from a data
//! directory written by `gen-data`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use leo_core::langgen::{generate_dataset, InstructionSet, Split, Vocabulary};
use leo_core::navsim::{generate_world, NavGraph};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::{dataset_from_jsonl, dataset_to_jsonl, world_from_json, world_to_json};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const WORLDS_DIR: &str = "worlds";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const SPLITS_FILE: &str = "splits.json";

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    /// Seen worlds first, then unseen.
    pub graphs: Vec<NavGraph>,
    /// Sorted by `path_id`.
    pub records: Vec<InstructionSet>,
    pub vocab: Vocabulary,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Corpus {
    pub fn generate(cfg: &RunConfig) -> Result<Self> {
        let (seen_ids, unseen_ids) = cfg.world_ids();
        let make = |ids: &[(String, u64)]| -> Result<Vec<NavGraph>> {
            ids.iter()
                .map(|(id, seed)| Ok(generate_world(id, *seed, &cfg.world)?))
                .collect()
        };
        let seen = make(&seen_ids)?;
        let unseen = make(&unseen_ids)?;
        let vocab = Vocabulary::standard();
        let ds = generate_dataset(&cfg.data, &seen, &unseen, &vocab)?;
        let mut graphs = seen;
        graphs.extend(unseen);
        Ok(Corpus {
            graphs,
            records: ds.records,
            vocab,
        })
    }

    /// Loads `dir/worlds/*.json`, `dir/dataset.jsonl` and `dir/vocab.txt`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let vocab_path = dir.join(VOCAB_FILE);
        let vocab = Vocabulary::from_tokens(read(&vocab_path)?.lines().map(str::to_string).collect())?;
        let wdir = dir.join(WORLDS_DIR);
        let mut paths: Vec<_> = fs::read_dir(&wdir)
            .map_err(|e| Error::io(&wdir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut graphs = paths
            .iter()
            .map(|p| world_from_json(p, &read(p)?))
            .collect::<Result<Vec<_>>>()?;
        let ds_path = dir.join(DATASET_FILE);
        let mut records = dataset_from_jsonl(&ds_path, &read(&ds_path)?)?;
        records.sort_by(|a, b| a.path_id.cmp(&b.path_id));
        for r in &records {
            r.validate(&vocab)?;
            let g = graphs
                .iter()
                .find(|g| g.graph_id == r.graph_id)
                .ok_or_else(|| Error::parse(&ds_path, format!("{}: unknown graph {}", r.path_id, r.graph_id)))?;
            r.trajectory(g)?;
        }
        // seen worlds first, matching generated corpora
        let unseen: BTreeSet<String> = records
            .iter()
            .filter(|r| r.split == Split::ValUnseen)
            .map(|r| r.graph_id.clone())
            .collect();
        graphs.sort_by_key(|g| (unseen.contains(&g.graph_id), g.graph_id.clone()));
        Ok(Corpus { graphs, records, vocab })
    }

    /// Writes the files [`Corpus::load`] reads plus a split listing; returns
    /// `(relative path, bytes)` of everything written.
    pub fn save(&self, dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
        let mut files = Vec::new();
        for g in &self.graphs {
            files.push((format!("{WORLDS_DIR}/{}.json", g.graph_id), world_to_json(g).into_bytes()));
        }
        files.push((DATASET_FILE.into(), self.dataset_bytes()));
        let mut vocab = self.vocab.tokens().join("\n");
        vocab.push('\n');
        files.push((VOCAB_FILE.into(), vocab.into_bytes()));
        files.push((SPLITS_FILE.into(), self.splits_json().into_bytes()));
        for (rel, bytes) in &files {
            crate::run::write_file(&dir.join(rel), bytes)?;
        }
        Ok(files)
    }

    pub fn dataset_bytes(&self) -> Vec<u8> {
        dataset_to_jsonl(&self.records).into_bytes()
    }

    pub fn dataset_hash(&self) -> String {
        sha256_hex(&self.dataset_bytes())
    }

    pub fn world_hashes(&self) -> BTreeMap<String, String> {
        self.graphs
            .iter()
            .map(|g| (g.graph_id.clone(), sha256_hex(world_to_json(g).as_bytes())))
            .collect()
    }

    fn splits_json(&self) -> String {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for s in [Split::Train, Split::ValSeen, Split::ValUnseen] {
            m.insert(s.as_str(), self.split(s).map(|r| r.path_id.as_str()).collect());
        }
        let mut s = serde_json::to_string_pretty(&m).expect("strings serialize");
        s.push('\n');
        s
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &InstructionSet> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn split_vec(&self, split: Split) -> Vec<InstructionSet> {
        self.split(split).cloned().collect()
    }

    /// Instructions per trajectory, when uniform across the corpus.
    pub fn m(&self) -> Result<usize> {
        let m = self.records.first().map_or(0, InstructionSet::m);
        if self.records.iter().any(|r| r.m() != m) {
            return Err(Error::usage(
                "records carry different numbers of instructions",
                "regenerate the dataset with a single m",
            ));
        }
        Ok(m)
    }

    pub fn feat_dim(&self) -> usize {
        self.graphs.first().map_or(0, NavGraph::feat_dim)
    }
}
