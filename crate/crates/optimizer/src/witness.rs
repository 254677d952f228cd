use macdmt_core::rational::{self, int, pair, pair_vec, rat, Rational};
use macdmt_core::{fc_dmt_mac_general, MacConfig, Regime};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::{ic_dmt_general_upper, OptError, OptOptions};

/// A rate tuple at which the IC upper bound is strictly below the optimal
/// finite-constellation diversity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "pair")]
    pub r0: Rational,
    #[serde(with = "pair")]
    pub epsilon: Rational,
    #[serde(with = "pair_vec")]
    pub rates: Vec<Rational>,
    #[serde(with = "pair")]
    pub ic_value: Rational,
    #[serde(with = "pair")]
    pub fc_value: Rational,
    #[serde(with = "pair_vec")]
    pub ic_argmax: Vec<Rational>,
}

fn report(cfg: &MacConfig, r0: Rational, epsilon: Rational, rates: Vec<Rational>, opts: &OptOptions) -> Result<WitnessReport, OptError> {
    let ic = ic_dmt_general_upper(cfg, &rates, opts)?;
    let fc_value = fc_dmt_mac_general(cfg, &rates);
    Ok(WitnessReport {
        k: cfg.k,
        m: cfg.m,
        n: cfg.n,
        r0,
        epsilon,
        rates,
        ic_value: ic.value,
        fc_value,
        ic_argmax: ic.argmax,
    })
}

/// Witness for the asymmetric family `K = 2, M = s+1, N = 3s`, where the
/// symmetric bound coincides with the finite-constellation curve. Rates are
/// `(r0 + ε, r0 − ε)` with `s < r0 < s + 1/2` and
/// `0 < ε < min(r0 + r0/s − 1, s + 1/2) − r0`; defaults are `r0 = s + 1/4` and
/// the midpoint of the admissible ε range.
pub fn witness_family(
    s: usize,
    r0: Option<Rational>,
    epsilon: Option<Rational>,
    opts: &OptOptions,
) -> Result<WitnessReport, OptError> {
    if s == 0 {
        return Err(OptError::Invalid("family index s must be ≥ 1".into()));
    }
    let si = int(s as i64);
    let r0 = r0.unwrap_or(si + rat(1, 4));
    if r0 <= si || r0 >= si + rat(1, 2) {
        return Err(OptError::Invalid(format!("r0={r0} outside ({s}, {s}+1/2)")));
    }
    let eps_hi = rational::min(r0 + r0 / si - int(1), si + rat(1, 2)) - r0;
    let epsilon = epsilon.unwrap_or(eps_hi / int(2));
    if epsilon <= Rational::zero() || epsilon >= eps_hi {
        return Err(OptError::Invalid(format!("epsilon={epsilon} outside (0, {eps_hi})")));
    }
    let cfg = MacConfig::new(2, s + 1, 3 * s)?;
    report(&cfg, r0, epsilon, vec![r0 + epsilon, r0 - epsilon], opts)
}

/// A sub-optimality witness for configurations below the user-limited
/// threshold, or `None` when the IC bound equals the finite-constellation
/// optimum everywhere (user-limited, including every single-user case).
pub fn suboptimality_witness(cfg: &MacConfig, opts: &OptOptions) -> Result<Option<WitnessReport>, OptError> {
    cfg.validate()?;
    let k = int(cfg.k as i64);
    let r = match cfg.regime() {
        Regime::UserLimited => return Ok(None),
        Regime::HeavilyLoaded => rat(cfg.n as i64, 2 * cfg.k as i64),
        Regime::Intermediate { l } => {
            let lo = int((l / 2 + 1) as i64);
            let hi = int(((cfg.k - 1) * cfg.m + (l + 1) / 2) as i64) / k;
            if lo < hi {
                (lo + hi) / int(2)
            } else if cfg.k == 2 && cfg.n == 3 * (cfg.m - 1) {
                return witness_family(cfg.m - 1, None, None, opts).map(Some);
            } else {
                return Err(OptError::Invalid(format!("no witness construction for {cfg}")));
            }
        }
    };
    report(cfg, r, Rational::zero(), vec![r; cfg.k], opts).map(Some)
}
