//! Navigation metrics, the two evaluation settings, and exact entropy
//! bookkeeping on enumerable joints.

mod entropy;
mod nav;

pub use entropy::{
    analyze, conditional_mutual_information, disambiguation_process, entropy_check, exact_conditional_entropy,
    independence_process, random_process, Atom, EntropyCheckReport, EntropyReport, Process, Violation, TOL,
};
pub use nav::{evaluate, score_episode, summarize, EpisodeResult, Evaluation, MetricsSummary, Setting, SUCCESS_RADIUS};
