//! Repeated rounds with outcomes drawn from the exact joint distribution of
//! the halt registers; a run stops at the first round satisfying the halt
//! predicate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::amplitude::ExactReal;

use super::{Engine, EngineError, SplitMix64};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSample {
    pub run: u64,
    /// 1-based round in which the run halted.
    pub halted_at: Option<u64>,
    pub rounds: u64,
    /// Outcome of each round, as comma-joined recorded values.
    pub draws: Vec<String>,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingSummary {
    pub runs: u64,
    pub seed: u64,
    pub max_rounds: u64,
    pub halted: u64,
    pub unhalted: u64,
    pub total_rounds: u64,
    pub mean_halting_round: Option<f64>,
    /// Fraction of all sampled rounds that satisfied the halt predicate.
    pub halt_frequency: f64,
    pub halt_probability: f64,
    pub counts: BTreeMap<String, u64>,
    /// Halting round of each run, in run order.
    pub halting_rounds: Vec<Option<u64>>,
    #[serde(skip)]
    pub samples: Vec<RunSample>,
}

/// Outcome keys in sorted order with cumulative probabilities.
#[derive(Debug, Clone)]
pub struct Sampler {
    keys: Vec<String>,
    cumulative: Vec<f64>,
    halt: String,
}

impl Sampler {
    pub fn new(engine: &Engine, distribution: &BTreeMap<Vec<String>, ExactReal>) -> Result<Self, EngineError> {
        let mut keys = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = ExactReal::zero();
        for (k, p) in distribution {
            acc = &acc + p;
            keys.push(k.join(","));
            cumulative.push(acc.to_f64());
        }
        if acc != ExactReal::one() {
            return Err(EngineError::NotNormalized);
        }
        Ok(Sampler {
            keys,
            cumulative,
            halt: engine.halt_key().join(","),
        })
    }

    pub fn run(&self, seed: u64, run: u64, max_rounds: u64) -> Result<RunSample, EngineError> {
        let mut rng = SplitMix64::for_run(seed, run);
        let mut sample = RunSample {
            run,
            halted_at: None,
            rounds: 0,
            draws: Vec::new(),
            counts: BTreeMap::new(),
        };
        while sample.rounds < max_rounds {
            sample.rounds += 1;
            let key = &self.keys[rng.categorical(&self.cumulative)];
            *sample.counts.entry(key.clone()).or_insert(0) += 1;
            sample.draws.push(key.clone());
            if key == &self.halt {
                sample.halted_at = Some(sample.rounds);
                return Ok(sample);
            }
        }
        Err(EngineError::MaxRoundsExceeded {
            partial: Box::new(sample),
        })
    }
}

impl Engine {
    fn sampler(&self) -> Result<Sampler, EngineError> {
        let trace = self.evolve_round::<ExactReal>()?;
        let dist = self.outcome_distribution(trace.final_state())?;
        Sampler::new(self, &dist)
    }

    /// One run: rounds until the halt predicate holds or `max_rounds` is hit.
    pub fn sample_run(&self, seed: u64, run: u64, max_rounds: u64) -> Result<RunSample, EngineError> {
        self.sampler()?.run(seed, run, max_rounds)
    }

    /// `runs` independent runs. Unless `allow_partial`, a run that does not
    /// halt is an error.
    pub fn sample_many(
        &self,
        runs: u64,
        seed: u64,
        max_rounds: u64,
        allow_partial: bool,
    ) -> Result<SamplingSummary, EngineError> {
        let sampler = self.sampler()?;
        let mut summary = SamplingSummary {
            runs,
            seed,
            max_rounds,
            halted: 0,
            unhalted: 0,
            total_rounds: 0,
            mean_halting_round: None,
            halt_frequency: 0.0,
            halt_probability: sampler
                .keys
                .iter()
                .position(|k| k == &sampler.halt)
                .map(|i| {
                    let prev = if i == 0 { 0.0 } else { sampler.cumulative[i - 1] };
                    sampler.cumulative[i] - prev
                })
                .unwrap_or(0.0),
            counts: BTreeMap::new(),
            halting_rounds: Vec::with_capacity(runs as usize),
            samples: Vec::with_capacity(runs as usize),
        };
        let mut halting_sum = 0u64;
        for run in 0..runs {
            let sample = match sampler.run(seed, run, max_rounds) {
                Ok(s) => s,
                Err(EngineError::MaxRoundsExceeded { partial }) if allow_partial => *partial,
                Err(e) => return Err(e),
            };
            summary.total_rounds += sample.rounds;
            match sample.halted_at {
                Some(r) => {
                    summary.halted += 1;
                    halting_sum += r;
                }
                None => summary.unhalted += 1,
            }
            for (k, n) in &sample.counts {
                *summary.counts.entry(k.clone()).or_insert(0) += n;
            }
            summary.halting_rounds.push(sample.halted_at);
            summary.samples.push(sample);
        }
        if summary.halted > 0 {
            summary.mean_halting_round = Some(halting_sum as f64 / summary.halted as f64);
        }
        if summary.total_rounds > 0 {
            let hits = summary.counts.get(&sampler.halt).copied().unwrap_or(0);
            summary.halt_frequency = hits as f64 / summary.total_rounds as f64;
        }
        Ok(summary)
    }
}
