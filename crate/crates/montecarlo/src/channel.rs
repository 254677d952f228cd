use std::f64::consts::{E, FRAC_1_SQRT_2, PI};

use macdmt_core::MacConfig;
use macdmt_scheme::ComplexMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based generator for one `(trial, snr)` cell: ChaCha8 keyed by the
/// run seed, with the stream selected by a hash of the cell coordinates. Each
/// cell's draws are independent of evaluation order and thread count.
pub fn trial_rng(seed: u64, trial: u64, snr_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix(trial ^ splitmix(snr_index.wrapping_add(0x5EED))));
    rng
}

/// Circularly symmetric complex Gaussian with unit variance per entry.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `N × KM` channel with i.i.d. CN(0,1) entries, filled column by column.
pub fn sample_channel<R: Rng + ?Sized>(cfg: &MacConfig, rng: &mut R) -> ComplexMatrix {
    let cols = cfg.k * cfg.m;
    let mut data = Vec::with_capacity(cfg.n * cols);
    for _ in 0..cfg.n * cols {
        data.push(complex_gaussian(rng));
    }
    ComplexMatrix::from_columns(cfg.n, cols, data)
}

pub fn sample_channel_seeded(cfg: &MacConfig, trial_seed: u64) -> ComplexMatrix {
    sample_channel(cfg, &mut ChaCha8Rng::seed_from_u64(trial_seed))
}

pub fn db_to_rho(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noise variance per real component: `ρ⁻¹ / (2πe)`, i.e. `2/(2πe)·ρ⁻¹` per
/// complex entry.
pub fn noise_variance(rho: f64) -> f64 {
    1.0 / (2.0 * PI * E * rho)
}
