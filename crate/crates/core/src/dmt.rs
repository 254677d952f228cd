use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::rational::{self, int, rat, Rational};
use crate::{DmtError, MacConfig, PiecewiseLinearCurve, Regime};

fn ri(n: usize) -> Rational {
    int(n as i64)
}

/// Finite-constellation point-to-point curve: breakpoints `(l, (m−l)(n−l))`.
pub fn fc_dmt_p2p(m: usize, n: usize) -> PiecewiseLinearCurve {
    let pts = (0..=m.min(n)).map(|l| (ri(l), ri((m - l) * (n - l)))).collect();
    PiecewiseLinearCurve::new(pts).expect("fc curve is monotone")
}

/// Range of average dimensions `D` whose IC line passes through the anchor
/// `(l, (m−l)(n−l))`. Adjacent ranges share endpoints.
pub fn ic_dim_interval(m: usize, n: usize, l: usize) -> Result<(Rational, Rational), DmtError> {
    if l >= m.min(n) {
        return Err(DmtError::Domain(format!(
            "level {l} outside 0..{} for m={m}, n={n}",
            m.min(n)
        )));
    }
    let hi = |l: usize| rat((m * n - l * (l + 1)) as i64, (n + m - 1 - 2 * l) as i64);
    let lo = if l == 0 { Rational::zero() } else { hi(l - 1) };
    Ok((lo, hi(l)))
}

/// Upper bound on the IC diversity at multiplexing gain `r` for `D` average
/// dimensions per channel use, clamped at zero for `r ≥ D`.
pub fn ic_dmt_upper_p2p(m: usize, n: usize, d: Rational, r: Rational) -> Result<Rational, DmtError> {
    let dmax = ri(m.min(n));
    if d <= Rational::zero() || d > dmax {
        return Err(DmtError::Domain(format!("D={d} outside (0, {dmax}]")));
    }
    if r < Rational::zero() {
        return Err(DmtError::Domain(format!("negative multiplexing gain {r}")));
    }
    if r >= d {
        return Ok(Rational::zero());
    }
    for l in 0..m.min(n) {
        let (_, hi) = ic_dim_interval(m, n, l)?;
        if d <= hi {
            let anchor = ri((m - l) * (n - l));
            return Ok(anchor / (d - ri(l)) * (d - r));
        }
    }
    unreachable!("last interval ends at min(m, n)")
}

/// Optimal finite-constellation curve of the symmetric MAC: the single-user
/// curve up to `min(N/(K+1), M)`, then the pooled curve at `K·r`.
pub fn fc_dmt_mac_symmetric(cfg: &MacConfig) -> PiecewiseLinearCurve {
    let (k, m, n) = (cfg.k, cfg.m, cfg.n);
    let switch = rational::min(rat(n as i64, (k + 1) as i64), ri(m));
    let end = rational::min(ri(m), rat(n as i64, k as i64));
    let single = fc_dmt_p2p(m, n);
    let pooled = fc_dmt_p2p(k * m, n).contract(k);
    let mut pts = single.restrict(Rational::zero(), switch);
    pts.extend(pooled.restrict(switch, end));
    PiecewiseLinearCurve::canonical(pts).expect("pieces meet at the switch point")
}

/// Per-user dimension `D_l` of the intermediate regime's middle segment.
pub fn intermediate_dim(cfg: &MacConfig, l: usize) -> Rational {
    let (a, slope) = intermediate_line(cfg, l);
    a / slope
}

/// Middle line `d*(r) = a − b·r` of the intermediate regime, returned as `(a, b)`.
pub fn intermediate_line(cfg: &MacConfig, l: usize) -> (Rational, Rational) {
    let (m, n) = (cfg.m, cfg.n);
    let f = l / 2;
    let a = (m * n) as i64 - (f * (f + 1)) as i64 - ((f + 1) * (l % 2)) as i64;
    (int(a), ri(n + m - 1 - l))
}

/// Endpoints of the middle segment `[⌊l/2⌋+1, ((K−1)M+⌊(l+1)/2⌋)/K]`.
fn middle_range(cfg: &MacConfig, l: usize) -> (Rational, Rational) {
    let lo = ri(l / 2 + 1);
    let hi = rat(((cfg.k - 1) * cfg.m + (l + 1) / 2) as i64, cfg.k as i64);
    (lo, hi)
}

/// Symmetric infinite-constellation upper bound and its regime.
pub fn ic_dmt_mac_symmetric(cfg: &MacConfig) -> (Regime, PiecewiseLinearCurve) {
    let (k, m, n) = (cfg.k, cfg.m, cfg.n);
    let regime = cfg.regime();
    let curve = match regime {
        Regime::UserLimited => fc_dmt_p2p(m, n),
        Regime::HeavilyLoaded => PiecewiseLinearCurve::new(vec![
            (Rational::zero(), ri(m * n)),
            (rat(n as i64, k as i64), Rational::zero()),
        ])
        .expect("line"),
        Regime::Intermediate { l } => {
            let (lo, hi) = middle_range(cfg, l);
            let (a, b) = intermediate_line(cfg, l);
            let end = rat(cfg.l_total() as i64, k as i64);
            let mut pts = fc_dmt_p2p(m, n).restrict(Rational::zero(), lo);
            pts.push((lo, a - b * lo));
            pts.push((hi, a - b * hi));
            pts.extend(fc_dmt_p2p(k * m, n).contract(k).restrict(hi, end));
            PiecewiseLinearCurve::canonical(pts).expect("pieces are continuous")
        }
    };
    (regime, curve)
}

/// Per-user `D` attaining the symmetric bound at gain `r`.
pub fn optimal_dim_symmetric(cfg: &MacConfig, r: Rational) -> Result<Rational, DmtError> {
    let (k, m, n) = (cfg.k, cfg.m, cfg.n);
    let end = rat(cfg.l_total() as i64, k as i64);
    if r < Rational::zero() || r > end {
        return Err(DmtError::Domain(format!("r={r} outside [0, {end}]")));
    }
    let fc_dim = |mm: usize, x: Rational| -> Rational {
        let lev = (rational::floor(&x) as usize).min(mm.min(n) - 1);
        ic_dim_interval(mm, n, lev).expect("level in range").1
    };
    Ok(match cfg.regime() {
        Regime::UserLimited => fc_dim(m, r),
        Regime::HeavilyLoaded => rat(n as i64, k as i64),
        Regime::Intermediate { l } => {
            let (lo, hi) = middle_range(cfg, l);
            if r < lo {
                fc_dim(m, r)
            } else if r <= hi {
                intermediate_dim(cfg, l)
            } else {
                fc_dim(k * m, ri(k) * r) / ri(k)
            }
        }
    })
}

/// Optimal finite-constellation diversity for an arbitrary rate tuple: the
/// minimum over user subsets of the pooled curve at the subset's total gain.
pub fn fc_dmt_mac_general(cfg: &MacConfig, rates: &[Rational]) -> Rational {
    assert_eq!(rates.len(), cfg.k, "one rate per user");
    let curves: Vec<_> = (1..=cfg.k).map(|s| fc_dmt_p2p(s * cfg.m, cfg.n)).collect();
    let mut best: Option<Rational> = None;
    for mask in 1u64..(1u64 << cfg.k) {
        let size = mask.count_ones() as usize;
        let total: Rational = (0..cfg.k)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| rates[i])
            .sum();
        let v = curves[size - 1].eval(total);
        best = Some(match best {
            Some(b) if b <= v => b,
            _ => v,
        });
    }
    best.unwrap()
}

/// Orthogonal multiple-access schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orthogonal {
    Tdma,
    Cdma,
}

/// Diversity of orthogonalized access at per-user gain `r`.
pub fn orthogonal_dmt(cfg: &MacConfig, r: Rational, mode: Orthogonal) -> Rational {
    let kr = ri(cfg.k) * r;
    match mode {
        Orthogonal::Tdma => fc_dmt_p2p(cfg.m, cfg.n).eval(kr),
        Orthogonal::Cdma => fc_dmt_p2p(1, cfg.n).eval(kr),
    }
}

/// True iff the segment slopes never decrease.
pub fn is_convex(curve: &PiecewiseLinearCurve) -> bool {
    curve.slopes().windows(2).all(|w| w[0] <= w[1])
}
