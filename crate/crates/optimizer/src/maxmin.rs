use std::cmp::Ordering;

use macdmt_core::rational::{self, int, pair, pair_vec, rat, Rational};
use macdmt_core::{fc_dmt_p2p, ic_dim_interval, ic_dmt_upper_p2p, intermediate_dim, MacConfig, Regime};
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::OptError;

/// Search controls for [`maximize_dim_allocation`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptOptions {
    #[serde(with = "pair")]
    pub step: Rational,
    pub refinements: u32,
    /// Largest K accepted; the inner minimum enumerates 2^K − 1 subsets.
    pub k_cap: usize,
    /// Grid/candidate disagreement above this is flagged.
    pub tolerance: f64,
    /// Upper limit on grid points visited in the first pass.
    pub max_grid_points: u64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            step: rat(1, 24),
            refinements: 3,
            k_cap: 12,
            tolerance: 1e-6,
            max_grid_points: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Grid,
}

/// Outcome of the max-min search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    #[serde(with = "pair")]
    pub value: Rational,
    pub value_f64: f64,
    #[serde(with = "pair_vec")]
    pub argmax: Vec<Rational>,
    /// 1-based users of the subset attaining the inner minimum at `argmax`.
    pub binding_subset: Vec<usize>,
    pub method: Method,
    #[serde(with = "opt_pair")]
    pub grid_value: Option<Rational>,
    #[serde(with = "opt_pair")]
    pub candidate_value: Option<Rational>,
    /// Grid and candidate maxima differ by more than the tolerance.
    pub disagreement: bool,
}

mod opt_pair {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        r.map(|r| [*r.numer(), *r.denom()]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let v = <Option<[i64; 2]>>::deserialize(d)?;
        match v {
            Some([_, 0]) => Err(serde::de::Error::custom("zero denominator")),
            Some([n, den]) => Ok(Some(rat(n, den))),
            None => Ok(None),
        }
    }
}

/// Non-empty subsets of `0..k`, by size then lexicographically.
fn ordered_subsets(k: usize) -> Vec<Vec<usize>> {
    fn combos(start: usize, k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            combos(i + 1, k, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity((1usize << k) - 1);
    for size in 1..=k {
        combos(0, k, size, &mut Vec::new(), &mut out);
    }
    out
}

fn check_inputs(cfg: &MacConfig, rates: &[Rational], opts: &OptOptions) -> Result<(), OptError> {
    cfg.validate()?;
    if cfg.k > opts.k_cap {
        return Err(OptError::Invalid(format!("K={} exceeds the cap {}", cfg.k, opts.k_cap)));
    }
    if rates.len() != cfg.k {
        return Err(OptError::Invalid(format!("expected {} rates, got {}", cfg.k, rates.len())));
    }
    if let Some(r) = rates.iter().find(|r| **r < Rational::zero()) {
        return Err(OptError::Invalid(format!("negative multiplexing gain {r}")));
    }
    Ok(())
}

fn check_dims(cfg: &MacConfig, dims: &[Rational]) -> Result<(), OptError> {
    if dims.len() != cfg.k {
        return Err(OptError::Infeasible(format!("expected {} dimensions, got {}", cfg.k, dims.len())));
    }
    let m = int(cfg.m as i64);
    if let Some(d) = dims.iter().find(|d| **d < Rational::zero() || **d > m) {
        return Err(OptError::Infeasible(format!("D={d} outside [0, {m}]")));
    }
    let total: Rational = dims.iter().sum();
    if total > int(cfg.l_total() as i64) {
        return Err(OptError::Infeasible(format!("sum of dimensions {total} exceeds L={}", cfg.l_total())));
    }
    Ok(())
}

fn subset_value(cfg: &MacConfig, subset: &[usize], dims: &[Rational], rates: &[Rational]) -> Rational {
    let d: Rational = subset.iter().map(|&i| dims[i]).sum();
    let r: Rational = subset.iter().map(|&i| rates[i]).sum();
    if d.is_zero() {
        return Rational::zero();
    }
    ic_dmt_upper_p2p(subset.len() * cfg.m, cfg.n, d, r).expect("pooled dimension within range")
}

fn objective_exact(cfg: &MacConfig, subsets: &[Vec<usize>], dims: &[Rational], rates: &[Rational]) -> (Rational, usize) {
    let mut best = (subset_value(cfg, &subsets[0], dims, rates), 0);
    for (idx, s) in subsets.iter().enumerate().skip(1) {
        let v = subset_value(cfg, s, dims, rates);
        if v < best.0 {
            best = (v, idx);
        }
    }
    best
}

/// Inner minimum over user subsets of the pooled IC line, with the binding
/// subset (1-based; ties go to the smallest subset, then lexicographic).
pub fn subset_objective(
    cfg: &MacConfig,
    dims: &[Rational],
    rates: &[Rational],
) -> Result<(Rational, Vec<usize>), OptError> {
    cfg.validate()?;
    check_dims(cfg, dims)?;
    if rates.len() != cfg.k {
        return Err(OptError::Invalid(format!("expected {} rates, got {}", cfg.k, rates.len())));
    }
    let subsets = ordered_subsets(cfg.k);
    let (v, idx) = objective_exact(cfg, &subsets, dims, rates);
    Ok((v, subsets[idx].iter().map(|i| i + 1).collect()))
}

/// Floating-point screen of the objective used to rank grid points.
struct FastObjective {
    subsets: Vec<Vec<usize>>,
    /// Per pooled size: (upper interval ends, anchors).
    tables: Vec<(Vec<f64>, Vec<f64>)>,
    rates: Vec<f64>,
}

impl FastObjective {
    fn new(cfg: &MacConfig, subsets: Vec<Vec<usize>>, rates: &[Rational]) -> Self {
        let tables = (1..=cfg.k)
            .map(|s| {
                let mm = s * cfg.m;
                let top = mm.min(cfg.n);
                let his = (0..top)
                    .map(|l| rational::to_f64(&ic_dim_interval(mm, cfg.n, l).unwrap().1))
                    .collect();
                let anchors = (0..top).map(|l| ((mm - l) * (cfg.n - l)) as f64).collect();
                (his, anchors)
            })
            .collect();
        Self {
            subsets,
            tables,
            rates: rates.iter().map(rational::to_f64).collect(),
        }
    }

    fn eval(&self, dims: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for s in &self.subsets {
            let d: f64 = s.iter().map(|&i| dims[i]).sum();
            let r: f64 = s.iter().map(|&i| self.rates[i]).sum();
            let v = if r >= d {
                0.0
            } else {
                let (his, anchors) = &self.tables[s.len() - 1];
                let l = his.iter().position(|&h| d <= h * (1.0 + 1e-12)).unwrap_or(his.len() - 1);
                anchors[l] / (d - l as f64) * (d - r)
            };
            if v < best {
                best = v;
                if best <= 0.0 {
                    break;
                }
            }
        }
        best
    }
}

/// Integer lattice of dimension tuples in units of `unit`.
struct Lattice {
    unit: Rational,
    max_coord: i64,
    max_sum: i64,
    symmetric: bool,
}

impl Lattice {
    fn dims(&self, c: &[i64]) -> Vec<Rational> {
        c.iter().map(|&x| self.unit * int(x)).collect()
    }

    fn feasible(&self, c: &[i64]) -> bool {
        c.iter().all(|&x| x >= 1 && x <= self.max_coord) && c.iter().sum::<i64>() <= self.max_sum
    }

    fn canon(&self, mut c: Vec<i64>) -> Vec<i64> {
        if self.symmetric {
            c.sort_unstable();
        }
        c
    }
}

/// Pick the best of `points`: highest exact value, then lexicographically
/// smallest coordinates. Floating-point values only pre-select contenders.
fn select_best(
    cfg: &MacConfig,
    lat: &Lattice,
    fast: &FastObjective,
    rates: &[Rational],
    points: Vec<Vec<i64>>,
) -> Option<(Rational, Vec<i64>)> {
    let unit = rational::to_f64(&lat.unit);
    let scored: Vec<(f64, Vec<i64>)> = points
        .into_par_iter()
        .map(|c| {
            let d: Vec<f64> = c.iter().map(|&x| x as f64 * unit).collect();
            (fast.eval(&d), c)
        })
        .collect();
    let top = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return None;
    }
    let cut = top - 1e-9 * top.abs().max(1.0);
    let mut contenders: Vec<Vec<i64>> = scored.into_iter().filter(|s| s.0 >= cut).map(|s| s.1).collect();
    contenders.sort();
    contenders.dedup();
    contenders
        .into_par_iter()
        .map(|c| (objective_exact(cfg, &fast.subsets, &lat.dims(&c), rates).0, c))
        .reduce_with(|a, b| match a.0.cmp(&b.0) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        })
}

fn grid_points(lat: &Lattice, stride: i64, k: usize) -> Vec<Vec<i64>> {
    fn rec(lat: &Lattice, stride: i64, k: usize, cur: &mut Vec<i64>, sum: i64, out: &mut Vec<Vec<i64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let start = if lat.symmetric { cur.last().copied().unwrap_or(stride) } else { stride };
        let mut x = start;
        while x <= lat.max_coord && sum + x <= lat.max_sum {
            cur.push(x);
            rec(lat, stride, k, cur, sum + x, out);
            cur.pop();
            x += stride;
        }
    }
    let mut out = Vec::new();
    rec(lat, stride, k, &mut Vec::with_capacity(k), 0, &mut out);
    out
}

fn neighbourhood(lat: &Lattice, centre: &[i64], stride: i64) -> Vec<Vec<i64>> {
    let k = centre.len();
    let mut out = Vec::new();
    if 9usize.checked_pow(k as u32).is_some_and(|n| n <= 1_000_000) {
        let mut offs = vec![-4i64; k];
        loop {
            let c: Vec<i64> = centre.iter().zip(&offs).map(|(x, o)| x + o * stride).collect();
            if lat.feasible(&c) {
                out.push(lat.canon(c));
            }
            let mut i = 0;
            while i < k && offs[i] == 4 {
                offs[i] = -4;
                i += 1;
            }
            if i == k {
                break;
            }
            offs[i] += 1;
        }
    } else {
        for i in 0..k {
            for o in -4..=4 {
                let mut c = centre.to_vec();
                c[i] += o * stride;
                if lat.feasible(&c) {
                    out.push(lat.canon(c));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Per-user dimensions of the analytic candidate set: every interval endpoint
/// of every pooled size divided by that size, the intermediate-regime `D_l`,
/// `N/K`, and the single-user optimum at `r_max`. Only feasible values are kept.
pub fn candidate_dims(cfg: &MacConfig, rates: &[Rational]) -> Vec<Rational> {
    let (k, m, n) = (cfg.k, cfg.m, cfg.n);
    let mut out = Vec::new();
    for s in 1..=k {
        let si = int(s as i64);
        for l in 0..(s * m).min(n) {
            let (lo, hi) = ic_dim_interval(s * m, n, l).unwrap();
            out.push(lo / si);
            out.push(hi / si);
        }
    }
    if let Regime::Intermediate { l } = cfg.regime() {
        out.push(intermediate_dim(cfg, l));
    }
    out.push(rat(n as i64, k as i64));
    let r_max = rates.iter().copied().max().unwrap_or_else(Rational::zero);
    out.push(single_user_dim(cfg, r_max));
    let cap = rational::min(int(m as i64), rat(cfg.l_total() as i64, k as i64));
    out.retain(|d| *d > Rational::zero() && *d <= cap);
    out.sort();
    out.dedup();
    out
}

fn single_user_dim(cfg: &MacConfig, r: Rational) -> Rational {
    let top = cfg.m.min(cfg.n);
    let l = (rational::floor(&r).max(0) as usize).min(top - 1);
    ic_dim_interval(cfg.m, cfg.n, l).unwrap().1
}

/// Maximize the subset objective over feasible dimension tuples by combining
/// the analytic candidate set with a refined grid search.
pub fn maximize_dim_allocation(
    cfg: &MacConfig,
    rates: &[Rational],
    opts: &OptOptions,
) -> Result<OptResult, OptError> {
    check_inputs(cfg, rates, opts)?;
    if opts.step <= Rational::zero() {
        return Err(OptError::Invalid("grid step must be positive".into()));
    }
    let k = cfg.k;
    let subsets = ordered_subsets(k);

    // (a) equal-dimension candidates, evaluated exactly
    let mut cand: Option<(Rational, Vec<Rational>)> = None;
    for d in candidate_dims(cfg, rates) {
        let dims = vec![d; k];
        let v = objective_exact(cfg, &subsets, &dims, rates).0;
        if cand.as_ref().is_none_or(|c| v > c.0) {
            cand = Some((v, dims));
        }
    }

    // (b) grid search plus local refinement on an integer lattice
    let scale = 4i64.pow(opts.refinements);
    let unit = opts.step / int(scale);
    let lat = Lattice {
        unit,
        max_coord: (int(cfg.m as i64) / unit).floor().to_integer(),
        max_sum: (int(cfg.l_total() as i64) / unit).floor().to_integer(),
        symmetric: rates.iter().all(|r| *r == rates[0]),
    };
    let per_axis = (lat.max_coord / scale) as f64;
    if per_axis.powi(k as i32) > opts.max_grid_points as f64 {
        return Err(OptError::Invalid(format!(
            "grid of ~{per_axis}^{k} points exceeds the limit {}",
            opts.max_grid_points
        )));
    }
    let fast = FastObjective::new(cfg, subsets.clone(), rates);
    let mut grid = select_best(cfg, &lat, &fast, rates, grid_points(&lat, scale, k));
    let mut stride = scale;
    for _ in 0..opts.refinements {
        stride /= 4;
        let Some((_, centre)) = grid.as_ref() else { break };
        let pts = neighbourhood(&lat, centre, stride);
        if let Some(b) = select_best(cfg, &lat, &fast, rates, pts) {
            grid = Some(b);
        }
    }
    let grid = grid.map(|(v, c)| (v, lat.dims(&c)));

    let (value, argmax, method) = match (&grid, &cand) {
        (Some(g), Some(c)) if g.0 > c.0 => (g.0, g.1.clone(), Method::Grid),
        (_, Some(c)) => (c.0, c.1.clone(), Method::ClosedForm),
        (Some(g), None) => (g.0, g.1.clone(), Method::Grid),
        (None, None) => {
            return Err(OptError::Infeasible("no feasible dimension tuple".into()));
        }
    };
    let grid_value = grid.as_ref().map(|g| g.0);
    let candidate_value = cand.as_ref().map(|c| c.0);
    let disagreement = match (grid_value, candidate_value) {
        (Some(g), Some(c)) => (rational::to_f64(&g) - rational::to_f64(&c)).abs() > opts.tolerance,
        _ => false,
    };
    let (_, binding_subset) = subset_objective(cfg, &argmax, rates)?;
    Ok(OptResult {
        value,
        value_f64: rational::to_f64(&value),
        argmax,
        binding_subset,
        method,
        grid_value,
        candidate_value,
        disagreement,
    })
}

/// Upper bound on the IC diversity for an arbitrary rate tuple. In the
/// user-limited regime this is the single-user curve at `r_max`, attained by
/// every user using the single-user optimal dimension; elsewhere it is the
/// numerical max-min.
pub fn ic_dmt_general_upper(
    cfg: &MacConfig,
    rates: &[Rational],
    opts: &OptOptions,
) -> Result<OptResult, OptError> {
    check_inputs(cfg, rates, opts)?;
    if cfg.regime() != Regime::UserLimited {
        return maximize_dim_allocation(cfg, rates, opts);
    }
    let r_max = rates.iter().copied().max().unwrap();
    let value = fc_dmt_p2p(cfg.m, cfg.n).eval(r_max);
    let argmax = vec![single_user_dim(cfg, r_max); cfg.k];
    let (attained, binding_subset) = subset_objective(cfg, &argmax, rates)?;
    debug_assert_eq!(attained, value, "closed form not attained for {cfg}");
    Ok(OptResult {
        value,
        value_f64: rational::to_f64(&value),
        argmax,
        binding_subset,
        method: Method::ClosedForm,
        grid_value: None,
        candidate_value: Some(value),
        disagreement: attained != value,
    })
}
