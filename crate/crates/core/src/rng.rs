//! Seedable random source used by every Monte-Carlo routine.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Named generator family. ChaCha20 is counter-based, so a fixed seed gives
/// the same stream on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RngKind {
    #[default]
    Chacha20,
}

impl RngKind {
    pub fn seeded(self, seed: u64) -> ChaCha20Rng {
        match self {
            RngKind::Chacha20 => ChaCha20Rng::seed_from_u64(seed),
        }
    }
}

impl fmt::Display for RngKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RngKind::Chacha20 => f.write_str("chacha20"),
        }
    }
}

impl FromStr for RngKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chacha20" => Ok(RngKind::Chacha20),
            other => Err(Error::Config(format!(
                "unknown rng `{other}` (expected chacha20)"
            ))),
        }
    }
}
