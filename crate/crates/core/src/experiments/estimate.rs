use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ssa::{RngStream, SamplerSpec, StopReason, DEFAULT_EVENT_CAP};
use crate::stats::Moments;

/// Trials per reduction chunk. Fixed so the reduction tree, and therefore
/// every bit of the result, is independent of the worker count.
const CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSummary {
    pub mean: f64,
    pub std_error: f64,
    /// Trials that finished and enter the mean.
    pub n_trials: u64,
    pub master_seed: u64,
    /// Trials stopped by the event cap; excluded from the mean.
    pub n_capped: u64,
}

impl EstimatorSummary {
    /// `mean +- 1.96 SE`.
    pub fn confidence_interval(&self) -> (f64, f64) {
        (
            self.mean - 1.96 * self.std_error,
            self.mean + 1.96 * self.std_error,
        )
    }

    pub fn has_capped(&self) -> bool {
        self.n_capped > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub event_cap: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            workers: None,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

/// Monte Carlo mean of `spec` over `n_trials` trials. Trial `i` draws from
/// stream `i` of `master_seed`.
pub fn estimate(spec: &SamplerSpec, n_trials: u64, master_seed: u64) -> Result<EstimatorSummary> {
    estimate_with(spec, n_trials, master_seed, EstimateOptions::default())
}

pub fn estimate_with(
    spec: &SamplerSpec,
    n_trials: u64,
    master_seed: u64,
    options: EstimateOptions,
) -> Result<EstimatorSummary> {
    if n_trials < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 trials are needed for a standard error, got {n_trials}"
        )));
    }
    spec.validate()?;
    let chunks = n_trials.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> (Moments, u64) {
        let mut m = Moments::new();
        let mut capped = 0;
        for i in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
            let s = spec.sample(&mut RngStream::new(master_seed, i).rng(), options.event_cap);
            if s.stopped_on == StopReason::Cap {
                capped += 1;
            } else {
                m.push(s.time);
            }
        }
        (m, capped)
    };
    let parts: Vec<(Moments, u64)> = match options.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(run_chunk).collect()),
        None => (0..chunks).into_par_iter().map(run_chunk).collect(),
    };
    let (moments, n_capped) = parts.iter().fold((Moments::new(), 0), |(m, c), (pm, pc)| {
        (m.merge(pm), c + pc)
    });
    Ok(EstimatorSummary {
        mean: moments.mean(),
        std_error: moments.std_error(),
        n_trials: moments.count(),
        master_seed,
        n_capped,
    })
}
