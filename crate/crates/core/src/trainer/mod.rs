//! Maximum-likelihood training with teacher forcing.
//!
//! Two objectives share one code path: `baseline_iid` averages the
//! single-instruction log-likelihood over each instruction of a trajectory,
//! `leo_joint` conditions one log-likelihood on the whole instruction set.

mod checkpoint;
mod config;
mod optim;
mod train;

pub use checkpoint::{Checkpoint, MAGIC, VERSION};
pub use config::{get_or, model_config_from_map, model_config_text, parse_kv, Paradigm, TrainConfig, MODEL_KEYS};
pub use optim::{clip_global_norm, Adam};
pub use train::{compute_loss, loss_and_grad, prepare, train, NoHooks, TrainHooks, TrainItem, TrainOutcome};
