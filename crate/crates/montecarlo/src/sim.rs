use macdmt_core::rational::{self, pair_vec, Rational};
use macdmt_core::MacConfig;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_rho, sample_channel, trial_rng};
use crate::lattice::lattice_decode_trial;
use crate::slope::{fit_slope, SlopeEstimate};
use crate::union::UnionBound;
use crate::McError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    UnionBound,
    LatticeDecode,
}

/// A simulation run, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub l: usize,
    #[serde(with = "pair_vec")]
    pub rates: Vec<Rational>,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
}

impl SimConfig {
    pub fn mac(&self) -> MacConfig {
        MacConfig { k: self.k, m: self.m, n: self.n }
    }

    pub fn rates_f64(&self) -> Vec<f64> {
        self.rates.iter().map(rational::to_f64).collect()
    }

    /// Structural checks; the point count is left to the estimator.
    pub fn validate(&self) -> Result<(), McError> {
        let cfg = MacConfig::new(self.k, self.m, self.n).map_err(|e| McError::Config(e.to_string()))?;
        if cfg.m > cfg.n || self.l >= cfg.m {
            return Err(McError::Config(format!("need M ≤ N and l < M (got {cfg}, l={})", self.l)));
        }
        if self.rates.len() != self.k {
            return Err(McError::Config(format!("expected {} rates, got {}", self.k, self.rates.len())));
        }
        let d = Rational::new((self.m * self.n - self.l * (self.l + 1)) as i64, (self.n + self.m - 1 - 2 * self.l) as i64);
        if self.rates.iter().any(|r| *r < Rational::from_integer(0) || *r > d) {
            return Err(McError::Config(format!("rates must lie in [0, D_l = {d}]")));
        }
        if self.trials == 0 {
            return Err(McError::Config("trials must be positive".into()));
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) || self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(McError::Config("snr_db must be finite and strictly increasing".into()));
        }
        Ok(())
    }
}

/// Per-SNR aggregate. `errors` is the summed per-trial error measure: decoding
/// errors in lattice mode, summed bound values in union-bound mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub snr_db: f64,
    pub trials: u64,
    pub errors: f64,
    pub pe_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutput {
    pub rows: Vec<SnrRow>,
    pub estimate: SlopeEstimate,
}

/// Average a per-trial kernel over the SNR grid. Every `(trial, snr)` cell
/// draws from its own counter-keyed stream and sums are taken in trial order,
/// so results do not depend on the thread count.
pub fn run_with<F>(snr_db: &[f64], trials: u64, seed: u64, kernel: F) -> Result<Vec<SnrRow>, McError>
where
    F: Fn(usize, f64, &mut ChaCha8Rng) -> Result<f64, McError> + Sync,
{
    let mut rows = Vec::with_capacity(snr_db.len());
    for (si, &db) in snr_db.iter().enumerate() {
        let rho = db_to_rho(db);
        let vals: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| kernel(si, rho, &mut trial_rng(seed, t, si as u64)))
            .collect::<Result<_, _>>()?;
        let errors: f64 = vals.iter().sum();
        rows.push(SnrRow { snr_db: db, trials, errors, pe_hat: errors / trials as f64 });
    }
    Ok(rows)
}

/// Fit the diversity slope over the upper half of the grid (at least three
/// points), skipping cells with no observed errors.
pub fn fit_rows(rows: &[SnrRow]) -> Result<SlopeEstimate, McError> {
    let take = rows.len().div_ceil(2).max(3).min(rows.len());
    let pts: Vec<(f64, f64)> = rows[rows.len() - take..]
        .iter()
        .filter(|r| r.pe_hat > 0.0)
        .map(|r| (r.snr_db / 10.0, r.pe_hat.log10()))
        .collect();
    fit_slope(&pts)
}

/// [`run_with`] followed by [`fit_rows`].
pub fn estimate_with<F>(snr_db: &[f64], trials: u64, seed: u64, kernel: F) -> Result<SimOutput, McError>
where
    F: Fn(usize, f64, &mut ChaCha8Rng) -> Result<f64, McError> + Sync,
{
    let rows = run_with(snr_db, trials, seed, kernel)?;
    let estimate = fit_rows(&rows)?;
    Ok(SimOutput { rows, estimate })
}

/// Per-SNR rows for a configured simulation.
pub fn run(sim: &SimConfig) -> Result<Vec<SnrRow>, McError> {
    sim.validate()?;
    let cfg = sim.mac();
    let rates = sim.rates_f64();
    match sim.mode {
        Mode::UnionBound => {
            let ub = UnionBound::new(&cfg, sim.l)?;
            run_with(&sim.snr_db, sim.trials, sim.seed, |_, rho, rng| {
                let h = sample_channel(&cfg, rng);
                Ok(ub.eval(&h, &rates, rho))
            })
        }
        Mode::LatticeDecode => run_with(&sim.snr_db, sim.trials, sim.seed, |_, rho, rng| {
            lattice_decode_trial(&cfg, sim.l, &rates, rho, rng).map(|e| if e { 1.0 } else { 0.0 })
        }),
    }
}

/// Diversity estimate for a configured simulation.
pub fn estimate_diversity(sim: &SimConfig) -> Result<SimOutput, McError> {
    let rows = run(sim)?;
    let estimate = fit_rows(&rows)?;
    Ok(SimOutput { rows, estimate })
}
