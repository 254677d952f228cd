use serde::{Deserialize, Serialize};

use crate::DmtError;

/// Network shape: `k` users with `m` transmit antennas each, `n` receive antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MacConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

/// Case split of the symmetric infinite-constellation bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum Regime {
    /// `N ≥ (K+1)M − 1`: the bound equals the single-user finite-constellation curve.
    UserLimited,
    /// `N < (K−1)M + 1`: a single line `MN − KMr`.
    HeavilyLoaded,
    /// `N = (K−1)M + 1 + l` with `0 ≤ l ≤ 2M − 3`.
    Intermediate { l: usize },
}

impl MacConfig {
    pub fn new(k: usize, m: usize, n: usize) -> Result<Self, DmtError> {
        if k == 0 || m == 0 || n == 0 {
            return Err(DmtError::InvalidConfig(format!(
                "K, M, N must be positive (got K={k}, M={m}, N={n})"
            )));
        }
        Ok(Self { k, m, n })
    }

    /// `L = min(N, KM)`.
    pub fn l_total(&self) -> usize {
        self.n.min(self.k * self.m)
    }

    /// Regime of the symmetric bound. A single user is always `UserLimited`:
    /// with no other users to pool with, the bound is the point-to-point curve.
    pub fn regime(&self) -> Regime {
        let (k, m, n) = (self.k, self.m, self.n);
        if k == 1 || n + 1 >= (k + 1) * m {
            Regime::UserLimited
        } else if n < (k - 1) * m + 1 {
            Regime::HeavilyLoaded
        } else {
            Regime::Intermediate { l: n - (k - 1) * m - 1 }
        }
    }

    pub fn validate(&self) -> Result<(), DmtError> {
        Self::new(self.k, self.m, self.n).map(|_| ())
    }
}

impl std::fmt::Display for MacConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "K={} M={} N={}", self.k, self.m, self.n)
    }
}
