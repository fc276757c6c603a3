//! Binary checkpoint codec.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "LEO1" | version u32 | config_len u32 | config UTF-8 | epoch u64 | loss f64
//!        | n_tensors u32 | n_tensors × (name_len u32 | name | rank u32
//!                                       | rank × dim u64 | payload f64 …)
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::config::{model_config_from_map, model_config_text, parse_kv};
use crate::agent::AgentParams;
use crate::error::{Error, Result};
use crate::numcore::Tensor;

pub const MAGIC: &[u8; 4] = b"LEO1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    /// `key=value` text: the training config followed by model dimensions.
    pub config: String,
    pub epoch: u64,
    pub running_loss: f64,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    /// Snapshot of `params`; `train_config` is prepended to the model
    /// dimensions in the stored config text.
    pub fn from_params(params: &AgentParams, train_config: &str, epoch: u64, running_loss: f64) -> Self {
        let mut config = String::from(train_config);
        if !config.is_empty() && !config.ends_with('\n') {
            config.push('\n');
        }
        config.push_str(&model_config_text(&params.config));
        Checkpoint {
            version: VERSION,
            config,
            epoch,
            running_loss,
            tensors: params
                .names()
                .into_iter()
                .zip(params.tensors())
                .map(|(n, t)| (n, t.clone()))
                .collect(),
        }
    }

    pub fn to_params(&self) -> Result<AgentParams> {
        let cfg = model_config_from_map(&parse_kv(&self.config)?)?;
        AgentParams::from_named(cfg, self.tensors.clone())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(self.config.len() as u32).to_le_bytes());
        out.extend_from_slice(self.config.as_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.running_loss.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a checkpoint: bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version} unsupported (expected {VERSION})"
            )));
        }
        let config = r.string()?;
        let epoch = r.u64()?;
        let running_loss = f64::from_le_bytes(r.array()?);
        let n = r.u32()? as usize;
        let mut tensors = Vec::new();
        for _ in 0..n {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            if rank == 0 || rank > 8 {
                return Err(Error::Format(format!("tensor {name}: implausible rank {rank}")));
            }
            let mut shape = Vec::with_capacity(rank);
            let mut numel: usize = 1;
            for _ in 0..rank {
                let d = usize::try_from(r.u64()?)
                    .map_err(|_| Error::Format(format!("tensor {name}: dimension overflows")))?;
                numel = numel
                    .checked_mul(d)
                    .ok_or_else(|| Error::Format(format!("tensor {name}: size overflows")))?;
                shape.push(d);
            }
            if numel.saturating_mul(8) > r.remaining() {
                return Err(Error::Format(format!("tensor {name}: truncated payload")));
            }
            let mut data = Vec::with_capacity(numel);
            for _ in 0..numel {
                data.push(f64::from_le_bytes(r.array()?));
            }
            let t = Tensor::new(shape, data).map_err(|e| Error::Format(format!("tensor {name}: {e}")))?;
            tensors.push((name, t));
        }
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes after last tensor", r.remaining())));
        }
        Ok(Checkpoint {
            version,
            config,
            epoch,
            running_loss,
            tensors,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.at
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Format(format!(
                "checkpoint truncated at byte {} (wanted {n} more)",
                self.at
            )));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::Format("invalid UTF-8 in checkpoint".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{EncoderMode, ModelConfig, Scheme};

    fn sample() -> Checkpoint {
        let cfg = ModelConfig {
            vocab_size: 52,
            embed_dim: 3,
            hidden: 4,
            feat_dim: 6,
            scheme: Scheme::Concat,
            encoder_mode: EncoderMode::MultiArm,
            arity: 2,
        };
        let p = AgentParams::init(cfg, 9).unwrap();
        Checkpoint::from_params(&p, "seed=9", 4, 1.25)
    }

    #[test]
    fn full_training_config_fits_beside_model_keys() {
        let tc = super::super::TrainConfig::default();
        let c = Checkpoint::from_params(&sample().to_params().unwrap(), &tc.to_text(), 1, 0.5);
        let back = Checkpoint::decode(&c.encode()).unwrap();
        assert_eq!(back.to_params().unwrap().config.hidden, 4);
        assert_eq!(super::super::TrainConfig::from_text(&back.config).unwrap(), tc);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = Checkpoint::decode(&c.encode()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.encode(), c.encode());
        let p = back.to_params().unwrap();
        for ((_, a), b) in c.tensors.iter().zip(p.tensors()) {
            let bits = |t: &Tensor| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn corrupt_inputs_are_format_errors() {
        let bytes = sample().encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::decode(&bad), Err(Error::Format(_))));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(Checkpoint::decode(&v2), Err(Error::Format(_))));
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(Checkpoint::decode(&bytes[..cut]), Err(Error::Format(_))), "{cut}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(Checkpoint::decode(&long), Err(Error::Format(_))));
    }
}
