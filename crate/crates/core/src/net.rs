//! Retry policy shared by the Overpass client and the model gateway.

use std::time::Duration;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Delay before attempt `n + 1`, doubling from `base_delay`.
    pub fn delay(&self, n: u32) -> Duration {
        let factor = 1u32.checked_shl(n.min(16)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }

    /// Run `op` until it succeeds, fails with a non-retryable error, or the
    /// attempt budget is spent. The last error is returned as is.
    pub fn run<T>(&self, mut op: impl FnMut(u32) -> Result<T>) -> Result<T> {
        let attempts = self.max_attempts.max(1);
        let mut n = 0;
        loop {
            match op(n) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && n + 1 < attempts => {
                    log::warn!("attempt {} of {attempts} failed: {e}", n + 1);
                    std::thread::sleep(self.delay(n));
                    n += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

pub(crate) fn network_error(err: reqwest::Error) -> Error {
    Error::Network {
        message: err.to_string(),
        retryable: true,
    }
}
