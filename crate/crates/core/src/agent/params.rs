use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::numcore::{Tape, Tensor, Var};
use crate::rng::stream;

/// Parameter-free function combining per-instruction contexts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Mean,
    Max,
    Concat,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Mean => "mean",
            Scheme::Max => "max",
            Scheme::Concat => "concat",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Scheme::Mean),
            "max" => Ok(Scheme::Max),
            "concat" => Ok(Scheme::Concat),
            other => Err(Error::Config(format!("unknown aggregation scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EncoderMode {
    /// One encoder for every instruction slot.
    Shared,
    /// Instruction slot i goes through its own encoder i.
    MultiArm,
}

impl EncoderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderMode::Shared => "shared",
            EncoderMode::MultiArm => "multi_arm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(EncoderMode::Shared),
            "multi_arm" => Ok(EncoderMode::MultiArm),
            other => Err(Error::Config(format!("unknown encoder mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Decoder hidden size; also the encoder hidden size and every projection
    /// width.
    pub hidden: usize,
    pub feat_dim: usize,
    pub scheme: Scheme,
    pub encoder_mode: EncoderMode,
    /// Number of instructions per trajectory seen in training.
    pub arity: usize,
}

impl ModelConfig {
    pub fn action_dim(&self) -> usize {
        self.feat_dim + 4
    }

    pub fn z_dim(&self) -> usize {
        match self.scheme {
            Scheme::Concat => self.arity * self.hidden,
            _ => self.hidden,
        }
    }

    pub fn n_arms(&self) -> usize {
        match self.encoder_mode {
            EncoderMode::Shared => 1,
            EncoderMode::MultiArm => self.arity,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.vocab_size < 5 || self.embed_dim == 0 || self.hidden == 0 || self.feat_dim == 0 {
            return Err(Error::Config(format!("degenerate model dimensions {self:?}")));
        }
        if self.arity == 0 {
            return Err(Error::Config("arity must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmWeights {
    /// `[4H, X + H]`, gate blocks input, forget, candidate, output.
    pub w: Tensor,
    pub b: Tensor,
}

/// Every trainable tensor of the policy.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentParams {
    pub config: ModelConfig,
    pub embedding: Tensor,
    pub encoders: Vec<LstmWeights>,
    pub decoder: LstmWeights,
    pub w_h: Tensor,
    pub w_s: Tensor,
    pub w_z: Tensor,
    pub w_u: Tensor,
}

/// Tape handles for a bound [`AgentParams`].
#[derive(Clone, Debug)]
pub struct BoundParams {
    pub embedding: Var,
    pub encoders: Vec<(Var, Var)>,
    pub decoder: (Var, Var),
    pub w_h: Var,
    pub w_s: Var,
    pub w_z: Var,
    pub w_u: Var,
}

fn uniform(shape: &[usize], bound: f64, seed: u64, tag: u64) -> Tensor {
    let mut rng = stream(seed, &[0x696e_6974, tag]);
    let mut t = Tensor::zeros(shape);
    for x in t.data_mut() {
        *x = rng.random_range(-bound..bound);
    }
    t
}

fn lstm_init(input: usize, hidden: usize, seed: u64, tag: u64) -> LstmWeights {
    let bound = 1.0 / libm::sqrt(hidden as f64);
    let mut b = Tensor::zeros(&[4 * hidden]);
    b.data_mut()[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
    LstmWeights {
        w: uniform(&[4 * hidden, input + hidden], bound, seed, tag),
        b,
    }
}

impl AgentParams {
    /// Seeded initialization: matrices uniform in ±1/√H, embeddings in ±0.1,
    /// biases zero except the forget gate at 1.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (h, e, f, a) = (
            config.hidden,
            config.embed_dim,
            config.feat_dim,
            config.action_dim(),
        );
        let bound = 1.0 / libm::sqrt(h as f64);
        let encoders = (0..config.n_arms())
            .map(|i| lstm_init(e, h, seed, 100 + i as u64))
            .collect();
        Ok(AgentParams {
            embedding: uniform(&[config.vocab_size, e], 0.1, seed, 1),
            encoders,
            decoder: lstm_init(f + a, h, seed, 2),
            w_h: uniform(&[h, h], bound, seed, 3),
            w_s: uniform(&[h, f], bound, seed, 4),
            w_z: uniform(&[h, h + config.z_dim()], bound, seed, 5),
            w_u: uniform(&[h, a], bound, seed, 6),
            config,
        })
    }

    /// Tensor names in the canonical order used by checkpoints and optimizers.
    pub fn names(&self) -> Vec<String> {
        let mut out = alloc::vec![String::from("embedding")];
        for i in 0..self.encoders.len() {
            out.push(format!("encoder.{i}.w"));
            out.push(format!("encoder.{i}.b"));
        }
        for n in ["decoder.w", "decoder.b", "w_h", "w_s", "w_z", "w_u"] {
            out.push(n.into());
        }
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = alloc::vec![&self.embedding];
        for enc in &self.encoders {
            out.push(&enc.w);
            out.push(&enc.b);
        }
        out.extend([
            &self.decoder.w,
            &self.decoder.b,
            &self.w_h,
            &self.w_s,
            &self.w_z,
            &self.w_u,
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = alloc::vec![&mut self.embedding];
        for enc in &mut self.encoders {
            out.push(&mut enc.w);
            out.push(&mut enc.b);
        }
        out.extend([
            &mut self.decoder.w,
            &mut self.decoder.b,
            &mut self.w_h,
            &mut self.w_s,
            &mut self.w_z,
            &mut self.w_u,
        ]);
        out
    }

    pub fn n_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.numel()).sum()
    }

    /// All scalars concatenated in [`Self::tensors`] order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_scalars());
        for t in self.tensors() {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Inverse of [`Self::flatten`].
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_scalars() {
            return Err(Error::shape("load_flat", &[self.n_scalars()], &[flat.len()]));
        }
        let mut at = 0;
        for t in self.tensors_mut() {
            let n = t.numel();
            t.data_mut().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Rebuilds parameters from named tensors, checking every shape against
    /// `config`.
    pub fn from_named(config: ModelConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        let mut p = Self::init(config, 0)?;
        let names = p.names();
        if names.len() != named.len() {
            return Err(Error::Format(format!(
                "expected {} tensors, found {}",
                names.len(),
                named.len()
            )));
        }
        for ((slot, want), (name, t)) in p.tensors_mut().into_iter().zip(&names).zip(named) {
            if *want != name {
                return Err(Error::Format(format!("expected tensor {want}, found {name}")));
            }
            if slot.shape() != t.shape() {
                return Err(Error::shape("from_named", slot.shape(), t.shape()));
            }
            *slot = t;
        }
        Ok(p)
    }

    /// Registers every tensor on `tape` without copying.
    pub fn bind<'p>(&'p self, tape: &mut Tape<'p>) -> BoundParams {
        BoundParams {
            embedding: tape.param(&self.embedding),
            encoders: self
                .encoders
                .iter()
                .map(|e| (tape.param(&e.w), tape.param(&e.b)))
                .collect(),
            decoder: (tape.param(&self.decoder.w), tape.param(&self.decoder.b)),
            w_h: tape.param(&self.w_h),
            w_s: tape.param(&self.w_s),
            w_z: tape.param(&self.w_z),
            w_u: tape.param(&self.w_u),
        }
    }
}

impl BoundParams {
    pub fn vars(&self) -> Vec<Var> {
        let mut out = alloc::vec![self.embedding];
        for &(w, b) in &self.encoders {
            out.push(w);
            out.push(b);
        }
        out.extend([
            self.decoder.0,
            self.decoder.1,
            self.w_h,
            self.w_s,
            self.w_z,
            self.w_u,
        ]);
        out
    }

    /// Gradients in [`AgentParams::tensors`] order.
    pub fn grads(&self, tape: &Tape<'_>) -> Vec<Vec<f64>> {
        self.vars().into_iter().map(|v| tape.grad(v)).collect()
    }
}
