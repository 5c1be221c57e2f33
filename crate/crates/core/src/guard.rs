//! Resource caps for the exhaustive enumerations.

use crate::{Error, Result};

/// Environment variable that overrides the default cap.
pub const GUARD_ENV: &str = "ANON_GUARD_CELLS";

pub const DEFAULT_CAP: u128 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Guard {
    pub cap: u128,
}

impl Default for Guard {
    fn default() -> Self {
        Guard { cap: DEFAULT_CAP }
    }
}

impl Guard {
    pub fn new(cap: u128) -> Self {
        Guard { cap }
    }

    /// Default cap, overridden by `ANON_GUARD_CELLS` when it parses.
    pub fn from_env() -> Self {
        std::env::var(GUARD_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
            .map(Guard::new)
            .unwrap_or_default()
    }

    pub fn check(&self, what: &str, size: u128) -> Result<()> {
        if size > self.cap {
            return Err(Error::GuardExceeded {
                what: what.to_string(),
                size,
                cap: self.cap,
            });
        }
        Ok(())
    }
}
