use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use crate::agent::{EncoderMode, ModelConfig, Scheme};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Paradigm {
    /// Each instruction treated as an independent sample of the trajectory.
    BaselineIid,
    /// The whole instruction set conditions one likelihood.
    LeoJoint,
}

impl Paradigm {
    pub fn as_str(self) -> &'static str {
        match self {
            Paradigm::BaselineIid => "baseline_iid",
            Paradigm::LeoJoint => "leo_joint",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "baseline_iid" => Ok(Paradigm::BaselineIid),
            "leo_joint" => Ok(Paradigm::LeoJoint),
            other => Err(Error::Config(format!("unknown paradigm {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub paradigm: Paradigm,
    pub scheme: Scheme,
    pub encoder_mode: EncoderMode,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub clip: f64,
    pub hidden: usize,
    pub embed: usize,
    pub t_max: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            paradigm: Paradigm::LeoJoint,
            scheme: Scheme::Mean,
            encoder_mode: EncoderMode::Shared,
            lr: 1e-3,
            epochs: 100,
            batch_size: 16,
            seed: 1,
            clip: 5.0,
            hidden: 64,
            embed: 32,
            t_max: 12,
        }
    }
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped;
/// repeated keys are an error.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: key {k:?} given twice", n + 1)));
        }
    }
    Ok(out)
}

/// Typed lookup with a default for absent keys.
pub fn get_or<T: core::str::FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}"))),
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 11] = [
        "paradigm",
        "scheme",
        "encoder_mode",
        "lr",
        "epochs",
        "batch_size",
        "seed",
        "clip",
        "hidden",
        "embed",
        "t_max",
    ];

    /// Reads the training keys of `map`, defaulting the rest; other keys are
    /// ignored.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            paradigm: match map.get("paradigm") {
                Some(v) => Paradigm::parse(v)?,
                None => d.paradigm,
            },
            scheme: match map.get("scheme") {
                Some(v) => Scheme::parse(v)?,
                None => d.scheme,
            },
            encoder_mode: match map.get("encoder_mode") {
                Some(v) => EncoderMode::parse(v)?,
                None => d.encoder_mode,
            },
            lr: get_or(map, "lr", d.lr)?,
            epochs: get_or(map, "epochs", d.epochs)?,
            batch_size: get_or(map, "batch_size", d.batch_size)?,
            seed: get_or(map, "seed", d.seed)?,
            clip: get_or(map, "clip", d.clip)?,
            hidden: get_or(map, "hidden", d.hidden)?,
            embed: get_or(map, "embed", d.embed)?,
            t_max: get_or(map, "t_max", d.t_max)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_map(&parse_kv(text)?)
    }

    /// `key=value` lines in [`Self::KEYS`] order; parses back to `self`.
    pub fn to_text(&self) -> String {
        format!(
            "paradigm={}\nscheme={}\nencoder_mode={}\nlr={}\nepochs={}\nbatch_size={}\nseed={}\nclip={}\nhidden={}\nembed={}\nt_max={}\n",
            self.paradigm.as_str(),
            self.scheme.as_str(),
            self.encoder_mode.as_str(),
            self.lr,
            self.epochs,
            self.batch_size,
            self.seed,
            self.clip,
            self.hidden,
            self.embed,
            self.t_max
        )
    }

    /// Learning rate 0 is allowed so a run can be checked for inertness.
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be finite and non-negative, got {}", self.lr)));
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config(format!("clip must be positive, got {}", self.clip)));
        }
        if self.hidden < 1 || self.embed < 1 {
            return Err(Error::Config("hidden and embed must be at least 1".into()));
        }
        if self.paradigm == Paradigm::BaselineIid && self.encoder_mode == EncoderMode::MultiArm {
            return Err(Error::Config(
                "baseline_iid sees one instruction at a time; use encoder_mode=shared".into(),
            ));
        }
        Ok(())
    }

    /// Model dimensions for a dataset with `arity` instructions per trajectory.
    /// The baseline is a single-instruction model whatever the dataset's M.
    pub fn model_config(&self, vocab_size: usize, feat_dim: usize, arity: usize) -> ModelConfig {
        let arity = match self.paradigm {
            Paradigm::BaselineIid => 1,
            Paradigm::LeoJoint => arity,
        };
        ModelConfig {
            vocab_size,
            embed_dim: self.embed,
            hidden: self.hidden,
            feat_dim,
            scheme: self.scheme,
            encoder_mode: self.encoder_mode,
            arity,
        }
    }
}

/// Keys written by [`model_config_text`].
pub const MODEL_KEYS: [&str; 7] = [
    "model_vocab_size",
    "model_embed_dim",
    "model_hidden",
    "model_feat_dim",
    "model_scheme",
    "model_encoder_mode",
    "model_arity",
];

/// `key=value` form of a model config, for checkpoint headers.
pub fn model_config_text(m: &ModelConfig) -> String {
    format!(
        "model_vocab_size={}\nmodel_embed_dim={}\nmodel_hidden={}\nmodel_feat_dim={}\nmodel_scheme={}\nmodel_encoder_mode={}\nmodel_arity={}\n",
        m.vocab_size,
        m.embed_dim,
        m.hidden,
        m.feat_dim,
        m.scheme.as_str(),
        m.encoder_mode.as_str(),
        m.arity
    )
}

pub fn model_config_from_map(map: &BTreeMap<String, String>) -> Result<ModelConfig> {
    let need = |k: &str| {
        map.get(k)
            .ok_or_else(|| Error::Format(format!("checkpoint config lacks {k}")))
    };
    let num = |k: &str| -> Result<usize> {
        need(k)?
            .parse()
            .map_err(|_| Error::Format(format!("checkpoint config: bad {k}")))
    };
    Ok(ModelConfig {
        vocab_size: num("model_vocab_size")?,
        embed_dim: num("model_embed_dim")?,
        hidden: num("model_hidden")?,
        feat_dim: num("model_feat_dim")?,
        scheme: Scheme::parse(need("model_scheme")?)?,
        encoder_mode: EncoderMode::parse(need("model_encoder_mode")?)?,
        arity: num("model_arity")?,
    })
}
