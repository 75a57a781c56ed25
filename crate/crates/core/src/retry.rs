//! Exponential backoff shared by the chat and search gateways.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first one.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: f64,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff: Duration::from_secs(1),
            multiplier: 2.0,
            jitter: true,
        }
    }
}

/// Outcome of a retried operation that never succeeded.
#[derive(Debug)]
pub enum RetryFailure<E> {
    /// The error was classified as permanent.
    Permanent(E),
    /// Every attempt failed with a retryable error; carries the last one.
    Exhausted { attempts: u32, last: E },
}

impl RetryPolicy {
    /// No waiting between attempts. Used by mock backends and tests.
    pub fn immediate() -> Self {
        Self {
            initial_backoff: Duration::ZERO,
            jitter: false,
            ..Self::default()
        }
    }

    pub fn backoff_for(&self, retry: u32, jitter_unit: f64) -> Duration {
        let base = self.initial_backoff.as_secs_f64() * self.multiplier.powi(retry as i32);
        let scaled = if self.jitter { base * (0.5 + jitter_unit) } else { base };
        Duration::from_secs_f64(scaled.max(0.0))
    }

    pub fn run<T, E>(
        &self,
        mut op: impl FnMut(u32) -> Result<T, E>,
        is_retryable: impl Fn(&E) -> bool,
    ) -> Result<T, RetryFailure<E>> {
        let attempts = self.max_attempts.max(1);
        let mut rng = SplitMix64::seed_from_u64(
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0),
        );
        let mut attempt = 0;
        loop {
            attempt += 1;
            match op(attempt) {
                Ok(value) => return Ok(value),
                Err(err) if !is_retryable(&err) => return Err(RetryFailure::Permanent(err)),
                Err(err) if attempt >= attempts => {
                    return Err(RetryFailure::Exhausted {
                        attempts: attempt,
                        last: err,
                    })
                }
                Err(_) => {
                    let unit = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    let wait = self.backoff_for(attempt - 1, unit);
                    if !wait.is_zero() {
                        std::thread::sleep(wait);
                    }
                }
            }
        }
    }
}
