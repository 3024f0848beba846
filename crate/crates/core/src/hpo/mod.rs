//! Bayesian hyperparameter search: a Matérn-5/2 Gaussian process over the
//! unit-cube encoding of a search space, with expected improvement.

mod acquisition;
mod gp;
mod space;
mod tune;

pub use acquisition::{expected_improvement, normal_cdf, normal_pdf};
pub use gp::{GpHyper, GpState};
pub use space::{apply_config, default_space, Config, ParamKind, ParamSpec, SearchSpace};
pub use tune::{candidate_set, suggest_next, tune, Suggestion, TrialRecord, TuneResult, CANDIDATES, INITIAL_DESIGN};
