//! Training, evaluation and ablations on a [`Corpus`], plus the CSV / JSON
//! artifacts they produce.

use std::collections::BTreeMap;
use std::time::Instant;

use leo_core::agent::{AgentParams, EncoderMode, Route, Scheme};
use leo_core::langgen::{InstructionSet, Split, Vocabulary};
use leo_core::metrics::{evaluate, Evaluation, MetricsSummary, Setting};
use leo_core::trainer::{prepare, train, Paradigm, TrainConfig, TrainHooks, TrainOutcome};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub fn init_params(train: &TrainConfig, corpus: &Corpus) -> Result<AgentParams> {
    let mc = train.model_config(corpus.vocab.len(), corpus.feat_dim(), corpus.m()?);
    Ok(AgentParams::init(mc, train.seed)?)
}

/// Trains on the corpus' train split from a fresh initialization.
pub fn train_model(train_cfg: &TrainConfig, corpus: &Corpus, hooks: &mut dyn TrainHooks) -> Result<TrainOutcome> {
    let params = init_params(train_cfg, corpus)?;
    let items = prepare(&corpus.split_vec(Split::Train), &corpus.graphs)?;
    Ok(train(train_cfg, params, &corpus.graphs, &items, hooks)?)
}

/// Wall-clock seconds at each reported epoch.
pub struct Timing {
    start: Instant,
    pub rows: Vec<(usize, f64, f64)>,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            start: Instant::now(),
            rows: Vec::new(),
        }
    }
}

impl TrainHooks for Timing {
    fn on_epoch(&mut self, epoch: usize, loss: f64, _params: &AgentParams) -> leo_core::Result<()> {
        self.rows.push((epoch, loss, self.start.elapsed().as_secs_f64()));
        Ok(())
    }
}

/// How a model reads instructions under `setting`. Single-instruction models
/// run as the plain sequence-to-sequence agent in Setting A and mean-pool in
/// Setting B; everything else uses its own scheme unless `scheme` overrides.
pub fn route_for(params: &AgentParams, setting: Setting, scheme: Option<Scheme>) -> Route {
    if let Some(s) = scheme {
        return Route::Joint(s);
    }
    let single = params.config.arity == 1 && params.config.encoder_mode == EncoderMode::Shared;
    match (single, setting) {
        (true, Setting::A) => Route::Seq2Seq,
        (true, Setting::B) => Route::Joint(Scheme::Mean),
        (false, _) => Route::Joint(params.config.scheme),
    }
}

pub fn eval_split(
    params: &AgentParams,
    corpus: &Corpus,
    split: Split,
    setting: Setting,
    scheme: Option<Scheme>,
    t_max: usize,
    traces: bool,
) -> Result<Evaluation> {
    let records = corpus.split_vec(split);
    if records.is_empty() {
        return Err(Error::usage(
            format!("split {} is empty", split.as_str()),
            "pick a split the dataset has",
        ));
    }
    let route = route_for(params, setting, scheme);
    Ok(evaluate(params, &corpus.graphs, &records, setting, route, t_max, traces)?)
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Vec<u8>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header).expect("in-memory write");
        fill(&mut w).expect("in-memory write");
        w.flush().expect("in-memory write");
    }
    out
}

/// `path_id, setting, TL, NE, success, spl_term`, one row per episode.
pub fn episodes_csv(ev: &Evaluation) -> Vec<u8> {
    csv_bytes(&["path_id", "setting", "TL", "NE", "success", "spl_term"], |w| {
        for e in &ev.episodes {
            w.write_record([
                e.path_id.clone(),
                ev.setting.as_str().into(),
                e.taken.to_string(),
                e.nav_error.to_string(),
                (e.success as u8).to_string(),
                e.spl_term.to_string(),
            ])?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    split: &'a str,
    setting: &'a str,
    n: usize,
    #[serde(rename = "TL")]
    tl: f64,
    #[serde(rename = "NE")]
    ne: f64,
    #[serde(rename = "SR")]
    sr: f64,
    #[serde(rename = "SPL")]
    spl: f64,
}

pub fn summary_json(split: Split, setting: Setting, s: &MetricsSummary) -> String {
    let mut out = serde_json::to_string_pretty(&SummaryJson {
        split: split.as_str(),
        setting: setting.as_str(),
        n: s.n,
        tl: s.tl,
        ne: s.ne,
        sr: s.sr,
        spl: s.spl,
    })
    .expect("summary serializes");
    out.push('\n');
    out
}

/// `epoch, train_loss, wall_seconds`.
pub fn loss_csv(rows: &[(usize, f64, f64)]) -> Vec<u8> {
    csv_bytes(&["epoch", "train_loss", "wall_seconds"], |w| {
        for (e, l, t) in rows {
            w.write_record([e.to_string(), l.to_string(), format!("{t:.3}")])?;
        }
        Ok(())
    })
}

/// Attention dumps for one evaluation that kept its traces: per episode one
/// CSV per instruction (rows = decoding steps, columns = tokens, cells = α)
/// and one γ CSV (columns = panorama views). Returns `(relative path, bytes)`.
pub fn attention_files(ev: &Evaluation, records: &[InstructionSet], vocab: &Vocabulary) -> Result<Vec<(String, Vec<u8>)>> {
    if ev.traces.len() != ev.episodes.len() {
        return Err(Error::usage("evaluation kept no traces", "evaluate with traces enabled"));
    }
    let by_id: BTreeMap<&str, &InstructionSet> = records.iter().map(|r| (r.path_id.as_str(), r)).collect();
    let mut files = Vec::new();
    for (ep, steps) in ev.episodes.iter().zip(&ev.traces) {
        let (base, which) = match ep.path_id.split_once('/') {
            Some((b, i)) => (b, Some(i.parse::<usize>().map_err(|_| Error::usage("bad episode id", ""))?)),
            None => (ep.path_id.as_str(), None),
        };
        let rec = by_id
            .get(base)
            .ok_or_else(|| Error::usage(format!("episode {base} not in the split"), ""))?;
        let instr: Vec<usize> = match which {
            Some(i) => vec![i],
            None => (0..rec.m()).collect(),
        };
        let stem = ep.path_id.replace('/', "_");
        for (slot, &i) in instr.iter().enumerate() {
            let toks = &rec.instructions[i];
            let mut header = vec!["step".to_string()];
            for (j, &t) in toks.iter().enumerate() {
                header.push(format!("{j}:{}", vocab.word(t)?));
            }
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            let bytes = csv_bytes(&h, |w| {
                for (t, st) in steps.iter().enumerate() {
                    let mut row = vec![(t + 1).to_string()];
                    row.extend(st.alpha[slot].iter().map(f64::to_string));
                    w.write_record(&row)?;
                }
                Ok(())
            });
            files.push((format!("attention/{stem}_alpha{i}.csv"), bytes));
        }
        let k = steps.first().map_or(0, |s| s.gamma.len());
        let mut header = vec!["step".to_string()];
        header.extend((0..k).map(|v| format!("view{v}")));
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        let bytes = csv_bytes(&h, |w| {
            for (t, st) in steps.iter().enumerate() {
                let mut row = vec![(t + 1).to_string()];
                row.extend(st.gamma.iter().map(f64::to_string));
                w.write_record(&row)?;
            }
            Ok(())
        });
        files.push((format!("attention/{stem}_gamma.csv"), bytes));
    }
    Ok(files)
}

/// One trained configuration of an ablation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variant {
    pub paradigm: Paradigm,
    pub scheme: Scheme,
    pub encoder_mode: EncoderMode,
}

impl Variant {
    pub const BASELINE: Variant = Variant {
        paradigm: Paradigm::BaselineIid,
        scheme: Scheme::Mean,
        encoder_mode: EncoderMode::Shared,
    };

    pub const fn leo(scheme: Scheme, encoder_mode: EncoderMode) -> Self {
        Variant {
            paradigm: Paradigm::LeoJoint,
            scheme,
            encoder_mode,
        }
    }

    pub fn apply(&self, train: &TrainConfig) -> TrainConfig {
        TrainConfig {
            paradigm: self.paradigm,
            scheme: self.scheme,
            encoder_mode: self.encoder_mode,
            ..train.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Aggregation,
    Encoder,
    Paradigm,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "aggregation" => Ok(Axis::Aggregation),
            "encoder" => Ok(Axis::Encoder),
            "paradigm" => Ok(Axis::Paradigm),
            other => Err(Error::usage(
                format!("unknown ablation axis {other:?}"),
                "use aggregation, encoder or paradigm",
            )),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Aggregation => "aggregation",
            Axis::Encoder => "encoder",
            Axis::Paradigm => "paradigm",
        }
    }

    /// `(label, variant)` pairs compared along this axis.
    pub fn variants(self) -> Vec<(&'static str, Variant)> {
        use EncoderMode::*;
        use Scheme::*;
        match self {
            Axis::Aggregation => vec![
                ("mean", Variant::leo(Mean, Shared)),
                ("max", Variant::leo(Max, Shared)),
                ("concat", Variant::leo(Concat, Shared)),
            ],
            Axis::Encoder => vec![
                ("shared", Variant::leo(Mean, Shared)),
                ("multi_arm", Variant::leo(Mean, MultiArm)),
            ],
            Axis::Paradigm => vec![("baseline_iid", Variant::BASELINE), ("leo_joint", Variant::leo(Mean, Shared))],
        }
    }

    /// The aggregation and encoder comparisons feed all instructions at once.
    pub fn settings(self) -> Vec<Setting> {
        match self {
            Axis::Paradigm => vec![Setting::A, Setting::B],
            _ => vec![Setting::B],
        }
    }
}

/// A trained variant's metrics on both validation splits.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantRun {
    pub variant: Variant,
    pub seed: u64,
    pub losses: Vec<f64>,
    pub wall_seconds: f64,
    pub params: AgentParams,
    pub metrics: BTreeMap<(Split, Setting), MetricsSummary>,
}

impl VariantRun {
    pub fn get(&self, split: Split, setting: Setting) -> &MetricsSummary {
        &self.metrics[&(split, setting)]
    }
}

pub const VAL_SPLITS: [Split; 2] = [Split::ValSeen, Split::ValUnseen];

/// Trains `variant` with model seed `seed` and evaluates it on both
/// validation splits under each of `settings`.
pub fn run_variant(cfg: &RunConfig, corpus: &Corpus, variant: Variant, seed: u64, settings: &[Setting]) -> Result<VariantRun> {
    let tc = TrainConfig {
        seed,
        ..variant.apply(&cfg.train)
    };
    let start = Instant::now();
    let out = train_model(&tc, corpus, &mut leo_core::trainer::NoHooks)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut metrics = BTreeMap::new();
    for &split in &VAL_SPLITS {
        if corpus.split(split).next().is_none() {
            continue;
        }
        for &setting in settings {
            let ev = eval_split(&out.params, corpus, split, setting, None, tc.t_max, false)?;
            metrics.insert((split, setting), ev.summary);
        }
    }
    Ok(VariantRun {
        variant,
        seed,
        losses: out.losses,
        wall_seconds,
        params: out.params,
        metrics,
    })
}

/// Every `(variant, seed)` pair, trained concurrently, returned in input
/// order. Settings a variant cannot run (Setting A for concat) are skipped.
pub fn run_grid(
    cfg: &RunConfig,
    corpus: &Corpus,
    variants: &[Variant],
    seeds: &[u64],
    settings: &[Setting],
) -> Result<Vec<VariantRun>> {
    let jobs: Vec<(Variant, u64)> = variants
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    jobs.par_iter()
        .map(|&(v, s)| {
            let st: Vec<Setting> = settings
                .iter()
                .copied()
                .filter(|&x| !(x == Setting::A && v.scheme == Scheme::Concat && v.paradigm == Paradigm::LeoJoint))
                .collect();
            run_variant(cfg, corpus, v, s, &st)
        })
        .collect()
}

/// The combined ablation CSV: one row per (variant, seed, setting) with
/// both validation splits side by side.
pub fn ablation_csv(axis: Axis, runs: &[VariantRun]) -> Vec<u8> {
    let labels: BTreeMap<Variant, &str> = axis.variants().into_iter().map(|(l, v)| (v, l)).collect();
    let mut header: Vec<String> = ["axis", "variant", "seed", "setting", "final_train_loss"]
        .map(String::from)
        .to_vec();
    for split in VAL_SPLITS {
        for m in ["n", "TL", "NE", "SR", "SPL"] {
            header.push(format!("{}_{m}", split.as_str()));
        }
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_bytes(&h, |w| {
        for r in runs {
            for setting in axis.settings() {
                if !VAL_SPLITS.iter().any(|&s| r.metrics.contains_key(&(s, setting))) {
                    continue;
                }
                let mut row = vec![
                    axis.as_str().to_string(),
                    labels.get(&r.variant).copied().unwrap_or("?").to_string(),
                    r.seed.to_string(),
                    setting.as_str().to_string(),
                    r.losses.last().copied().unwrap_or(f64::NAN).to_string(),
                ];
                for split in VAL_SPLITS {
                    match r.metrics.get(&(split, setting)) {
                        Some(s) => row.extend([
                            s.n.to_string(),
                            s.tl.to_string(),
                            s.ne.to_string(),
                            s.sr.to_string(),
                            s.spl.to_string(),
                        ]),
                        None => row.extend(std::iter::repeat_n(String::new(), 5)),
                    }
                }
                w.write_record(&row)?;
            }
        }
        Ok(())
    })
}
