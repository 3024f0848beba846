//! The trial loop: space-filling start, then GP + expected improvement.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::acquisition::expected_improvement;
use super::gp::GpState;
use super::space::{Config, SearchSpace};
use crate::{Error, Result};

/// Trials drawn from the shifted Halton sequence before the GP takes over.
pub const INITIAL_DESIGN: usize = 8;
/// Random candidates scored by expected improvement per suggestion.
pub const CANDIDATES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config: Config,
    /// Validation objective; `None` marks a failed trial, treated as −∞.
    pub objective: Option<f64>,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl TrialRecord {
    pub fn objective_value(&self) -> f64 {
        self.objective.filter(|v| v.is_finite()).unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub config: Config,
    /// Expected improvement of the chosen point; `None` during the initial
    /// design.
    pub expected_improvement: Option<f64>,
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

fn trial_rng(seed: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((trial as u128) << 20);
    rng
}

/// The `trial`-th point of a Halton sequence, Cranley–Patterson shifted by
/// a seed-dependent offset.
fn initial_point(space: &SearchSpace, seed: u64, trial: usize) -> Config {
    let mut shift_rng = trial_rng(seed, 0, 1);
    let u: Vec<f64> = (0..space.params.len())
        .map(|j| {
            let shift: f64 = shift_rng.gen();
            let h = radical_inverse(trial as u64 + 1, PRIMES[j % PRIMES.len()]);
            (h + shift).fract()
        })
        .collect();
    space.at_unit(&u)
}

/// The seeded candidate configurations scored for trial `trial`. Each is a
/// feasible config, so integers and choices sit on their lattice.
pub fn candidate_set(space: &SearchSpace, seed: u64, trial: usize) -> Vec<Config> {
    let mut rng = trial_rng(seed, trial, 2);
    (0..CANDIDATES)
        .map(|_| {
            let u: Vec<f64> = (0..space.params.len()).map(|_| rng.gen()).collect();
            space.at_unit(&u)
        })
        .collect()
}

/// Next configuration to evaluate. Deterministic in `(history, seed)`, so a
/// resumed search repeats the choices an uninterrupted one would make.
pub fn suggest_next(history: &[TrialRecord], space: &SearchSpace, seed: u64) -> Result<Suggestion> {
    let trial = history.len();
    let observed: Vec<(Vec<f64>, f64)> = history
        .iter()
        .filter(|t| t.objective_value().is_finite())
        .map(|t| Ok((space.encode(&t.config)?, t.objective_value())))
        .collect::<Result<_>>()?;
    if trial < INITIAL_DESIGN || observed.is_empty() {
        return Ok(Suggestion { config: initial_point(space, seed, trial), expected_improvement: None });
    }
    let (points, y): (Vec<Vec<f64>>, Vec<f64>) = observed.into_iter().unzip();
    let gp = GpState::fit(&points, &y)?;
    let best = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<(f64, Config)> = None;
    for c in candidate_set(space, seed, trial) {
        let (m, v) = gp.posterior(&space.encode(&c)?)?;
        let ei = expected_improvement(m, v, best, true);
        if chosen.as_ref().is_none_or(|(e, _)| ei > *e) {
            chosen = Some((ei, c));
        }
    }
    let (ei, config) = chosen.expect("candidate set is nonempty");
    Ok(Suggestion { config, expected_improvement: Some(ei) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: TrialRecord,
    pub history: Vec<TrialRecord>,
}

/// Runs trials until `history` holds `budget` of them. `evaluate` gets the
/// config and a per-trial seed; an error marks the trial failed and the
/// search continues. `clock` returns seconds for wall-time bookkeeping and
/// `on_trial` sees each finished trial (for persistence).
pub fn tune<F, C, O>(
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    mut history: Vec<TrialRecord>,
    mut evaluate: F,
    clock: C,
    mut on_trial: O,
) -> Result<TuneResult>
where
    F: FnMut(&Config, u64) -> Result<f64>,
    C: Fn() -> f64,
    O: FnMut(&TrialRecord) -> Result<()>,
{
    if budget == 0 {
        return Err(Error::Parameter("tuning budget must be at least 1".into()));
    }
    while history.len() < budget {
        let suggestion = suggest_next(&history, space, seed)?;
        let trial_seed = seed.wrapping_add(history.len() as u64);
        let start = clock();
        let objective = match evaluate(&suggestion.config, trial_seed) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                log::warn!("trial {} returned non-finite objective {v}", history.len());
                None
            }
            Err(e) => {
                log::warn!("trial {} failed: {e}", history.len());
                None
            }
        };
        let record = TrialRecord { config: suggestion.config, objective, seed: trial_seed, wall_time_s: clock() - start };
        on_trial(&record)?;
        history.push(record);
    }
    let best = history
        .iter()
        .filter(|t| t.objective.is_some())
        .max_by(|a, b| a.objective_value().total_cmp(&b.objective_value()))
        .cloned()
        .ok_or_else(|| Error::Contract(format!("all {} trials failed", history.len())))?;
    Ok(TuneResult { best, history })
}
