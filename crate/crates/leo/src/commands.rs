//! One function per subcommand. Each creates its own run directory and
//! returns it with the command's headline result.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use leo_core::agent::{end_to_end_gradcheck, Scheme};
use leo_core::langgen::Split;
use leo_core::metrics::{entropy_check, EntropyCheckReport, MetricsSummary, Setting};
use leo_core::numcore::{check_primitives, GradCheckReport, PrimitiveCheck};
use leo_core::trainer::{parse_kv, Checkpoint, TrainHooks, MODEL_KEYS};
use serde_json::json;

use crate::config::RunConfig;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::experiment::{
    ablation_csv, attention_files, episodes_csv, eval_split, loss_csv, run_grid, summary_json, train_model, Axis,
    Timing, VariantRun,
};
use crate::run::RunDir;

pub const CHECKPOINT_FILE: &str = "checkpoint.leo";

/// Reads `--config` (or the built-in defaults) and applies `--set` pairs and
/// `--seed`.
pub fn resolve_config(path: Option<&Path>, sets: &[(String, String)], seed: Option<u64>) -> Result<RunConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    let mut sets = sets.to_vec();
    if let Some(s) = seed {
        sets.push(("seed".into(), s.to_string()));
    }
    RunConfig::from_text(&text, &sets)
}

fn corpus_for(cfg: &RunConfig, data: Option<&Path>) -> Result<Corpus> {
    match data {
        Some(d) => Corpus::load(d),
        None => Corpus::generate(cfg),
    }
}

fn start(out: &Path, command: &str, cfg: &RunConfig, corpus: Option<&Corpus>) -> Result<RunDir> {
    let mut run = RunDir::create(out, command, &cfg.to_text(), cfg.train.seed)?;
    if let Some(c) = corpus {
        run.set_inputs(c.dataset_hash(), c.world_hashes())?;
    }
    Ok(run)
}

pub fn gen_world(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let corpus = Corpus::generate(cfg)?;
    let mut run = start(out, "gen-world", cfg, None)?;
    for g in &corpus.graphs {
        let bytes = crate::formats::world_to_json(g).into_bytes();
        run.write(&format!("worlds/{}.json", g.graph_id), &bytes, true)?;
    }
    run.manifest.world_hashes = corpus.world_hashes();
    run.finish()
}

pub fn gen_data(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let corpus = Corpus::generate(cfg)?;
    let mut run = start(out, "gen-data", cfg, Some(&corpus))?;
    for (rel, bytes) in corpus.save(&run.path)? {
        run.record(&rel, &bytes, true);
    }
    run.finish()
}

/// Checkpoints every `every` epochs and keeps the latest for resumption.
struct CheckpointHooks<'a> {
    run: &'a mut RunDir,
    config: String,
    every: usize,
    timing: Timing,
}

impl TrainHooks for CheckpointHooks<'_> {
    fn on_epoch(&mut self, epoch: usize, loss: f64, params: &leo_core::agent::AgentParams) -> leo_core::Result<()> {
        self.timing.on_epoch(epoch, loss, params)?;
        if epoch > 0 {
            let bytes = Checkpoint::from_params(params, &self.config, epoch as u64, loss).encode();
            let io = |e: Error| leo_core::Error::Format(e.to_string());
            crate::run::write_file(&self.run.path.join("checkpoints/last.leo"), &bytes).map_err(io)?;
            if self.every > 0 && epoch.is_multiple_of(self.every) {
                self.run
                    .write(&format!("checkpoints/epoch_{epoch:04}.leo"), &bytes, true)
                    .map_err(io)?;
            }
        }
        Ok(())
    }
}

pub struct TrainReport {
    pub losses: Vec<f64>,
    pub checkpoint: PathBuf,
}

pub fn train_cmd(cfg: &RunConfig, out: &Path, data: Option<&Path>) -> Result<(PathBuf, TrainReport)> {
    let corpus = corpus_for(cfg, data)?;
    let mut run = start(out, "train", cfg, Some(&corpus))?;
    let config = cfg.to_text();
    let mut hooks = CheckpointHooks {
        run: &mut run,
        config: config.clone(),
        every: cfg.checkpoint_every,
        timing: Timing::default(),
    };
    let outcome = train_model(&cfg.train, &corpus, &mut hooks)?;
    let rows = std::mem::take(&mut hooks.timing.rows);
    let epochs = outcome.losses.len() - 1;
    let ckpt = Checkpoint::from_params(&outcome.params, &config, epochs as u64, outcome.losses[epochs]).encode();
    let checkpoint = run.write(CHECKPOINT_FILE, &ckpt, true)?;
    run.write("loss.csv", &loss_csv(&rows), false)?;
    let _ = fs::remove_file(run.path.join("checkpoints/last.leo"));
    // fails, as intended, when periodic checkpoints were kept
    let _ = fs::remove_dir(run.path.join("checkpoints"));
    let path = run.finish()?;
    Ok((
        path,
        TrainReport {
            losses: outcome.losses,
            checkpoint,
        },
    ))
}

pub struct EvalArgs<'a> {
    pub checkpoint: &'a Path,
    pub split: Split,
    pub setting: Setting,
    pub scheme: Option<Scheme>,
    pub data: Option<&'a Path>,
    /// Replaces the run config stored in the checkpoint.
    pub config: Option<&'a Path>,
    pub sets: &'a [(String, String)],
    pub attention: bool,
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::decode(&bytes).map_err(|e| Error::parse(path, e))
}

/// The run configuration a checkpoint was trained under.
pub fn checkpoint_run_config(ck: &Checkpoint) -> Result<String> {
    let map = parse_kv(&ck.config)?;
    Ok(map
        .iter()
        .filter(|(k, _)| !MODEL_KEYS.contains(&k.as_str()))
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect())
}

pub fn eval_cmd(out: &Path, a: &EvalArgs<'_>) -> Result<(PathBuf, MetricsSummary)> {
    let ck = read_checkpoint(a.checkpoint)?;
    let params = ck.to_params()?;
    let base = match a.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => checkpoint_run_config(&ck)?,
    };
    let cfg = RunConfig::from_text(&base, a.sets)?;
    let corpus = corpus_for(&cfg, a.data)?;
    let mut run = start(out, "eval", &cfg, Some(&corpus))?;
    run.manifest.command = format!(
        "eval --checkpoint {} --split {} --setting {}{}",
        a.checkpoint.display(),
        a.split.as_str(),
        a.setting.as_str(),
        a.scheme.map(|s| format!(" --scheme {}", s.as_str())).unwrap_or_default()
    );
    run.add_input(a.checkpoint, &fs::read(a.checkpoint).map_err(|e| Error::io(a.checkpoint, e))?);
    let ev = eval_split(&params, &corpus, a.split, a.setting, a.scheme, cfg.train.t_max, a.attention)?;
    run.write("summary.json", summary_json(a.split, a.setting, &ev.summary).as_bytes(), true)?;
    run.write("episodes.csv", &episodes_csv(&ev), true)?;
    if a.attention {
        for (rel, bytes) in attention_files(&ev, &corpus.split_vec(a.split), &corpus.vocab)? {
            run.write(&rel, &bytes, true)?;
        }
    }
    Ok((run.finish()?, ev.summary))
}

/// Model seeds for an ablation: the config's list, continued consecutively
/// if `k` asks for more.
pub fn ablation_seeds(cfg: &RunConfig, k: Option<usize>) -> Vec<u64> {
    let mut seeds = cfg.seeds.clone();
    let k = k.unwrap_or(seeds.len());
    while seeds.len() < k {
        let next = seeds.last().map_or(1, |s| s + 1);
        seeds.push(next);
    }
    seeds.truncate(k);
    seeds
}

pub fn ablate_cmd(
    cfg: &RunConfig,
    out: &Path,
    axis: Axis,
    seeds: &[u64],
    data: Option<&Path>,
) -> Result<(PathBuf, Vec<VariantRun>)> {
    if seeds.is_empty() {
        return Err(Error::usage("no seeds to run", "pass --seeds k with k ≥ 1"));
    }
    let corpus = corpus_for(cfg, data)?;
    let mut run = start(out, &format!("ablate --axis {}", axis.as_str()), cfg, Some(&corpus))?;
    let variants: Vec<_> = axis.variants().into_iter().map(|(_, v)| v).collect();
    let runs = run_grid(cfg, &corpus, &variants, seeds, &axis.settings())?;
    run.write("ablation.csv", &ablation_csv(axis, &runs), true)?;
    Ok((run.finish()?, runs))
}

pub struct GradcheckOutcome {
    pub primitives: Vec<PrimitiveCheck>,
    pub end_to_end: GradCheckReport,
    pub tol: f64,
}

impl GradcheckOutcome {
    pub fn max_rel_error(&self) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.max_rel_error)
            .fold(self.end_to_end.max_rel_error, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() <= self.tol
    }
}

pub fn gradcheck_cmd(
    out: &Path,
    seed: u64,
    hidden: usize,
    eps: f64,
    tol: f64,
    instances: usize,
) -> Result<(PathBuf, GradcheckOutcome)> {
    let cfg = RunConfig::default().with_seed(seed);
    let mut run = start(out, "gradcheck", &cfg, None)?;
    run.manifest.command = format!("gradcheck --hidden {hidden} --eps {eps} --tol {tol} --instances {instances}");
    let primitives = check_primitives(seed, instances, eps)?;
    let end_to_end = end_to_end_gradcheck(seed, hidden, eps)?;
    let o = GradcheckOutcome {
        primitives,
        end_to_end,
        tol,
    };
    let prim: BTreeMap<&str, f64> = o.primitives.iter().map(|p| (p.op, p.max_rel_error)).collect();
    let report = json!({
        "eps": eps,
        "tolerance": tol,
        "hidden": hidden,
        "instances_per_primitive": instances,
        "primitives": prim,
        "end_to_end": {
            "max_rel_error": o.end_to_end.max_rel_error,
            "n_parameters": o.end_to_end.n_entries,
            "worst_index": o.end_to_end.worst_index,
        },
        "max_rel_error": o.max_rel_error(),
        "pass": o.passed(),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    run.write("gradcheck.json", text.as_bytes(), true)?;
    Ok((run.finish()?, o))
}

pub fn entropy_check_cmd(out: &Path, seed: u64, n: usize) -> Result<(PathBuf, EntropyCheckReport)> {
    let cfg = RunConfig::default().with_seed(seed);
    let mut run = start(out, "entropy-check", &cfg, None)?;
    run.manifest.command = format!("entropy-check --n {n}");
    let r = entropy_check(seed, n)?;
    let violations: Vec<_> = r
        .violations
        .iter()
        .map(|v| json!({"index": v.index, "reason": v.reason, "process": v.process}))
        .collect();
    let report = json!({
        "seed": r.seed,
        "n_processes": r.n_processes,
        "violations": violations,
        "worst_margin_bits": r.worst_margin,
        "worst_identity_gap_bits": r.worst_identity_gap,
        "disambiguation_mi_bits": r.disambiguation_mi,
        "independence_mi_bits": r.independence_mi,
        "pass": r.passed(),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    run.write("entropy_check.json", text.as_bytes(), true)?;
    Ok((run.finish()?, r))
}
