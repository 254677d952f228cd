use std::f64::consts::{E, PI};

use macdmt_core::rational::{int, rat};
use macdmt_core::MacConfig;
use macdmt_montecarlo::*;
use macdmt_scheme::ComplexMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn cfg(k: usize, m: usize, n: usize) -> MacConfig {
    MacConfig::new(k, m, n).unwrap()
}

/// `N × KM` matrix with orthonormal columns (requires `KM ≤ N`).
fn orthonormal(c: &MacConfig) -> ComplexMatrix {
    ComplexMatrix::from_fn(c.n, c.k * c.m, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

#[test]
fn channel_sampling_is_deterministic() {
    let c = cfg(2, 2, 5);
    let a = sample_channel_seeded(&c, 77);
    let b = sample_channel_seeded(&c, 77);
    assert_eq!((a.rows(), a.cols()), (5, 4));
    for j in 0..4 {
        assert_eq!(a.column(j), b.column(j));
    }
    let other = sample_channel_seeded(&c, 78);
    assert_ne!(a.column(0), other.column(0));
    let x = sample_channel(&c, &mut trial_rng(5, 3, 1));
    let y = sample_channel(&c, &mut trial_rng(5, 3, 1));
    assert_eq!(x.column(3), y.column(3));
}

#[test]
fn channel_entry_moments() {
    let c = cfg(1, 1, 1);
    let n = 100_000u64;
    let (mut sr, mut si, mut s2) = (0.0, 0.0, 0.0);
    for t in 0..n {
        let h = sample_channel(&c, &mut trial_rng(2024, t, 0)).get(0, 0);
        sr += h.re;
        si += h.im;
        s2 += h.norm_sqr();
    }
    let nf = n as f64;
    // each real part has variance 1/2
    let sigma = (0.5 / nf).sqrt();
    assert!((sr / nf).abs() < 3.0 * sigma, "real mean {}", sr / nf);
    assert!((si / nf).abs() < 3.0 * sigma, "imag mean {}", si / nf);
    let var = s2 / nf;
    assert!((var - 1.0).abs() < 0.02, "variance {var}");
}

#[test]
fn column_norms_are_chi_square_with_mean_n() {
    let c = cfg(2, 1, 4);
    let n = 100_000u64;
    let mut acc = 0.0;
    for t in 0..n {
        let h = sample_channel(&c, &mut trial_rng(99, t, 0));
        let col: f64 = h.column(1).iter().map(|z| z.norm_sqr()).sum();
        acc += col / c.n as f64;
    }
    let mean = acc / n as f64;
    assert!((mean - 1.0).abs() < 0.02, "mean column norm / N = {mean}");
}

#[test]
fn noise_convention() {
    let rho = db_to_rho(20.0);
    assert!((rho - 100.0).abs() < 1e-9);
    assert!((noise_variance(rho) - 1.0 / (200.0 * PI * E)).abs() < 1e-18);
}

#[test]
fn orthonormal_channel_saturates_bound_at_unit_snr() {
    for (k, m, n) in [(1, 1, 1), (2, 1, 2), (2, 2, 5), (3, 1, 3)] {
        let c = cfg(k, m, n);
        let h = orthonormal(&c);
        let p = pe_union_bound(&h, &c, 0, &vec![0.0; k], 1.0).unwrap();
        assert_eq!(p, 1.0, "{c}");
    }
}

#[test]
fn single_user_bound_scales_exactly_with_snr() {
    for (m, n, l) in [(1, 1, 0), (1, 3, 0), (2, 2, 0), (2, 2, 1), (2, 4, 1), (3, 5, 2)] {
        let c = cfg(1, m, n);
        let h = sample_channel_seeded(&c, 4);
        let dt = (m * n - l * (l + 1)) as i32;
        let rho = 1e3;
        let a = pe_union_bound(&h, &c, l, &[0.0], rho).unwrap();
        let b = pe_union_bound(&h, &c, l, &[0.0], rho * 10.0).unwrap();
        assert!(a < 1.0);
        let want = 10f64.powi(-dt);
        assert!(((b / a) - want).abs() <= 1e-9 * want, "{c} l={l}: ratio {} vs {want}", b / a);
    }
}

#[test]
fn bound_validates_inputs() {
    let c = cfg(2, 1, 2);
    let h = sample_channel_seeded(&c, 1);
    assert!(pe_union_bound(&h, &c, 0, &[0.0, 0.0], 0.0).is_err());
    assert!(pe_union_bound(&h, &c, 0, &[0.0, 1.5], 10.0).is_err());
    assert!(pe_union_bound(&h, &c, 0, &[0.0], 10.0).is_err());
    assert!(pe_union_bound(&h, &c, 1, &[0.0, 0.0], 10.0).is_err());
    let bad = sample_channel_seeded(&cfg(2, 1, 3), 1);
    assert!(pe_union_bound(&bad, &c, 0, &[0.0, 0.0], 10.0).is_err());
}

#[test]
fn singular_subset_makes_bound_trivial() {
    let c = cfg(2, 1, 2);
    let mut h = sample_channel_seeded(&c, 8);
    h.set(0, 1, h.get(0, 0));
    h.set(1, 1, h.get(1, 0));
    assert_eq!(pe_union_bound(&h, &c, 0, &[0.0, 0.0], 1e8).unwrap(), 1.0);
}

#[test]
fn effective_radius_of_orthonormal_channel_is_snr_free() {
    let c = cfg(2, 1, 2);
    let h = orthonormal(&c);
    // per user MN − l(l+1) = 2 complex symbols; n = |s|·2
    for (users, n) in [(vec![0usize], 2.0), (vec![1], 2.0), (vec![0, 1], 4.0)] {
        for rho in [1.0, 10.0, 1e4] {
            let r = effective_radius(&h, &c, 0, &[0.0, 0.0], rho, &users).unwrap();
            assert!((r - 2.0 * n / (2.0 * PI * E)).abs() < 1e-12, "{users:?} {rho}: {r}");
        }
    }
}

#[test]
fn effective_radius_scales_quadratically_with_channel_gain() {
    let c = cfg(2, 2, 5);
    let h = sample_channel_seeded(&c, 31);
    for l in [0, 1] {
        let base = effective_radius(&h, &c, l, &[0.5, 0.25], 100.0, &[0, 1]).unwrap();
        for s in [0.5, 2.0, 3.0] {
            let r = effective_radius(&h.scale(s), &c, l, &[0.5, 0.25], 100.0, &[0, 1]).unwrap();
            assert!((r / base - s * s).abs() < 1e-9 * s * s, "l={l} c={s}: {}", r / base);
        }
    }
}

#[test]
fn effective_radius_rate_dependence_and_singular_case() {
    let c = cfg(2, 1, 2);
    let h = sample_channel_seeded(&c, 12);
    let r0 = effective_radius(&h, &c, 0, &[0.0, 0.0], 100.0, &[0]).unwrap();
    let r1 = effective_radius(&h, &c, 0, &[0.5, 0.0], 100.0, &[0]).unwrap();
    // ρ^{−R_s/(|s|D_l)} with D_0 = 1
    assert!((r1 / r0 - 0.1).abs() < 1e-12);
    let mut sing = h.clone();
    sing.set(0, 1, h.get(0, 0));
    sing.set(1, 1, h.get(1, 0));
    assert_eq!(effective_radius(&sing, &c, 0, &[0.0, 0.0], 100.0, &[0, 1]).unwrap(), 0.0);
    assert!(effective_radius(&h, &c, 0, &[0.0, 0.0], 100.0, &[]).is_err());
    assert!(effective_radius(&h, &c, 0, &[0.0, 0.0], 100.0, &[2]).is_err());
}

#[test]
fn injected_power_law_recovers_exponent() {
    let snr = grid(0.0, 40.0, 5.0);
    for d in [1.0, 2.0, 3.5, 10.0] {
        let out = estimate_with(&snr, 3, 0, |_, rho, _| Ok(rho.powf(-d))).unwrap();
        assert!((out.estimate.slope - d).abs() < 1e-6, "d={d}: {}", out.estimate.slope);
        assert!(out.estimate.stderr >= 0.0 && out.estimate.stderr < 1e-6);
        assert_eq!(out.estimate.points.len(), 5);
    }
}

#[test]
fn zero_error_cells_are_dropped_and_short_grids_rejected() {
    let snr = grid(0.0, 30.0, 5.0);
    // errors vanish above 20 dB: only 2 usable points in the upper half
    let r = estimate_with(&snr, 2, 0, |_, rho, _| Ok(if rho > 150.0 { 0.0 } else { 1.0 / rho }));
    assert!(matches!(r, Err(McError::Estimation(_))));
    let r = estimate_with(&[10.0, 20.0], 2, 0, |_, rho, _| Ok(1.0 / rho));
    assert!(matches!(r, Err(McError::Estimation(_))));
}

fn sim(k: usize, m: usize, n: usize, snr: Vec<f64>, trials: u64, seed: u64, mode: Mode) -> SimConfig {
    SimConfig { k, m, n, l: 0, rates: vec![int(0); k], snr_db: snr, trials, seed, mode }
}

#[test]
fn two_point_grid_is_an_estimation_error() {
    let s = sim(2, 1, 2, vec![10.0, 20.0], 100, 1, Mode::UnionBound);
    assert!(s.validate().is_ok());
    assert!(matches!(estimate_diversity(&s), Err(McError::Estimation(_))));
}

#[test]
fn config_validation() {
    let good = sim(2, 1, 2, vec![0.0, 10.0, 20.0], 10, 1, Mode::UnionBound);
    assert!(good.validate().is_ok());
    let mut s = good.clone();
    s.trials = 0;
    assert!(s.validate().is_err());
    let mut s = good.clone();
    s.snr_db = vec![0.0, 10.0, 10.0];
    assert!(s.validate().is_err());
    let mut s = good.clone();
    s.rates = vec![int(0)];
    assert!(s.validate().is_err());
    let mut s = good.clone();
    s.rates = vec![int(0), rat(3, 2)];
    assert!(s.validate().is_err());
    let mut s = good.clone();
    s.l = 1;
    assert!(s.validate().is_err());
}

#[test]
fn config_json_round_trip() {
    let text = r#"{"K":2,"M":1,"N":2,"rates":[[0,1],[1,2]],"snr_db":[10,20,30],"trials":5,"seed":3,"mode":"union_bound"}"#;
    let s: SimConfig = serde_json::from_str(text).unwrap();
    assert_eq!(s.l, 0);
    assert_eq!(s.rates, vec![int(0), rat(1, 2)]);
    let back: SimConfig = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
    let bad = r#"{"K":2,"M":1,"N":2,"rates":[[0,1],[0,1]],"snr_db":[10,20,30],"trials":5,"seed":3,"mode":"union_bound","extra":1}"#;
    assert!(serde_json::from_str::<SimConfig>(bad).is_err());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let s = sim(2, 2, 5, grid(10.0, 30.0, 5.0), 3000, 42, Mode::UnionBound);
    let lat = sim(1, 1, 2, grid(0.0, 20.0, 5.0), 400, 42, Mode::LatticeDecode);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
    for cfg in [s, lat] {
        let a = one.install(|| run(&cfg)).unwrap();
        let b = many.install(|| run(&cfg)).unwrap();
        let c = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.pe_hat.to_bits(), y.pe_hat.to_bits());
        }
    }
}

#[test]
fn lattice_decoding_is_error_free_without_noise() {
    for (k, m, n) in [(1, 1, 1), (1, 1, 2), (2, 1, 2), (1, 2, 2)] {
        let c = cfg(k, m, n);
        for t in 0..25 {
            let mut rng = trial_rng(7, t, 0);
            assert!(!lattice_decode_trial(&c, 0, &vec![0.0; k], 1e14, &mut rng).unwrap(), "{c} trial {t}");
        }
    }
}

#[test]
fn lattice_decoding_rejects_oversized_problems() {
    let mut rng = trial_rng(0, 0, 0);
    assert!(lattice_decode_trial(&cfg(2, 2, 5), 0, &[0.0, 0.0], 10.0, &mut rng).is_err());
    assert!(lattice_decode_trial(&cfg(1, 2, 1), 0, &[0.0], 10.0, &mut rng).is_err());
}

#[test]
fn more_receive_antennas_do_not_hurt_lattice_decoding() {
    let trials = 4000;
    for db in [0.0, 5.0] {
        let p1 = run(&sim(1, 1, 1, vec![db], trials, 11, Mode::LatticeDecode)).unwrap()[0].pe_hat;
        let p2 = run(&sim(1, 1, 2, vec![db], trials, 11, Mode::LatticeDecode)).unwrap()[0].pe_hat;
        assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
        let sigma = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / trials as f64).sqrt();
        assert!(p2 <= p1 + 3.0 * sigma, "{db} dB: N=1 {p1}, N=2 {p2}");
        assert!(p1 > 0.0, "{db} dB should show errors for N=1");
    }
}

/// Exponential integral `E₁(x)` by its power series (valid for the small
/// arguments used here).
fn e1(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..60 {
        term *= -x / k as f64;
        sum -= term / k as f64;
    }
    -0.577_215_664_901_532_9 - x.ln() + sum
}

#[test]
fn single_antenna_bound_matches_closed_form_average() {
    // |h|² ~ Exp(1): E[min(1, 1/(ρ|h|²))] = 1 − e^{−1/ρ} + E₁(1/ρ)/ρ
    let snr = grid(10.0, 40.0, 5.0);
    let s = sim(1, 1, 1, snr.clone(), 100_000, 12345, Mode::UnionBound);
    let out = estimate_diversity(&s).unwrap();
    let exact: Vec<(f64, f64)> = snr
        .iter()
        .map(|&db| {
            let rho = db_to_rho(db);
            (db / 10.0, (1.0 - (-1.0 / rho).exp() + e1(1.0 / rho) / rho).log10())
        })
        .collect();
    let exact_fit = fit_slope(&exact[3..]).unwrap();
    let est = out.estimate;
    assert!(
        (est.slope - exact_fit.slope).abs() <= 3.0 * est.stderr,
        "simulated {} ± {} vs exact finite-grid slope {}",
        est.slope,
        est.stderr,
        exact_fit.slope
    );
    for (row, (_, lp)) in out.rows.iter().zip(&exact) {
        assert!((row.pe_hat.log10() - lp).abs() < 0.1, "{} dB: {} vs {}", row.snr_db, row.pe_hat, 10f64.powf(*lp));
    }
    // the logarithmic factor fades: far up the SNR axis the slope tends to MN = 1
    let far: Vec<(f64, f64)> = (0..4)
        .map(|i| {
            let db = 400.0 + 10.0 * i as f64;
            let x = 10f64.powf(-db / 10.0);
            (db / 10.0, ((x - x * x / 2.0) + e1(x) * x).log10())
        })
        .collect();
    assert!((fit_slope(&far).unwrap().slope - 1.0).abs() < 0.03);
}

#[test]
fn user_limited_union_bound_slope_matches_full_diversity() {
    // At rates 0 the dominant pooled term has a critical (index-one) tail, so
    // the finite-grid slope carries a `1/ln ρ` deficit on top of sampling noise.
    let snr = grid(10.0, 40.0, 5.0);
    let log_correction = 1.0 / db_to_rho(25.0).ln();
    for (k, m, n, trials) in [(1usize, 1usize, 1usize, 100_000u64), (1, 2, 2, 20_000), (2, 1, 3, 20_000)] {
        let s = sim(k, m, n, snr.clone(), trials, 12345, Mode::UnionBound);
        assert!(MacConfig::new(k, m, n).unwrap().regime() == macdmt_core::Regime::UserLimited);
        let est = estimate_diversity(&s).unwrap().estimate;
        let target = (m * n) as f64;
        let tol = 3.0 * est.stderr + log_correction;
        assert!(
            (est.slope - target).abs() <= tol,
            "{}: slope {} ± {} vs {target}",
            s.mac(),
            est.slope,
            est.stderr
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_is_monotone_in_snr_and_rates(
        seed in any::<u64>(),
        l in 0usize..2,
        r0 in 0.0f64..1.0,
        r1 in 0.0f64..1.0,
        bump in 0.0f64..1.0,
        db in 0.0f64..40.0,
        step in 0.0f64..10.0,
    ) {
        let c = cfg(2, 2, 4);
        let h = sample_channel_seeded(&c, seed);
        // D_l is 8/5 for l = 0 and 6/3 for l = 1; keep rates inside [0, 8/5]
        let dmax = 1.6;
        let rates = [r0 * dmax, r1 * dmax];
        let rho = db_to_rho(db);
        let p = pe_union_bound(&h, &c, l, &rates, rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let higher = pe_union_bound(&h, &c, l, &rates, db_to_rho(db + step)).unwrap();
        prop_assert!(higher <= p * (1.0 + 1e-12));
        let raised = [rates[0] + bump * (dmax - rates[0]), rates[1]];
        let q = pe_union_bound(&h, &c, l, &raised, rho).unwrap();
        prop_assert!(q >= p * (1.0 - 1e-12));
    }

    #[test]
    fn determinism_for_identical_configs(seed in any::<u64>()) {
        let s = sim(2, 1, 2, vec![0.0, 10.0, 20.0], 50, seed, Mode::UnionBound);
        prop_assert_eq!(run(&s).unwrap(), run(&s).unwrap());
    }
}
