//! The navigation policy.
//!
//! Per decoding step: visual attention keyed by the previous memory, one
//! decoder LSTM step on `[s_t; a_{t-1}]`, textual attention over each
//! instruction keyed by the new memory, parameter-free aggregation of the
//! per-instruction contexts, then bilinear scoring of the candidates.

mod check;
mod params;
mod policy;

pub use check::{end_to_end_gradcheck, GradFixture};
pub use params::{AgentParams, BoundParams, EncoderMode, LstmWeights, ModelConfig, Scheme};
pub use policy::{
    action_distribution, action_logits, aggregate, argmax, build_action_embedding, candidate_embedding,
    encode_instruction, encode_tokens, memory_update, rollout, teacher_forced_logprob, teacher_forced_on,
    teacher_forced_traced, text_context, visual_attend, Episode, Route, StepTrace,
};
