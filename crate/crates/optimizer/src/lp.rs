use macdmt_core::rational::{int, pair, pair_vec, Rational};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::OptError;

/// Solution of the exponent-minimization LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    #[serde(with = "pair")]
    pub value: Rational,
    #[serde(with = "pair_vec")]
    pub alphas: Vec<Rational>,
    /// Set when the right-hand side is negative or exceeds the box capacity.
    pub infeasible: bool,
}

struct Lp {
    cost: Vec<Rational>,
    weight: Vec<Rational>,
    cap: Rational,
    rhs: Rational,
}

fn build(s: usize, m: usize, n: usize, l: usize, r_max: Rational, k: usize) -> Result<Lp, OptError> {
    if s == 0 || s > k {
        return Err(OptError::Invalid(format!("subset size {s} outside 1..={k}")));
    }
    if l >= m {
        return Err(OptError::Invalid(format!("level {l} outside 0..{m}")));
    }
    if r_max < Rational::zero() {
        return Err(OptError::Invalid(format!("negative r_max {r_max}")));
    }
    if n < m {
        return Err(OptError::Invalid(format!("N={n} < M={m}: constraint weights not positive")));
    }
    let (mi, ni, li) = (m as i64, n as i64, l as i64);
    let mut cost = Vec::with_capacity(s * m);
    let mut weight = Vec::with_capacity(s * m);
    for a in 0..s as i64 {
        for b in 1..=mi {
            let i = a * mi + b;
            cost.push(int(ni - i + 1));
            weight.push(int(ni - b + 1));
        }
    }
    let rhs = int(s as i64) * (int(mi * ni - li * (li + 1)) - int(ni + mi - 1 - 2 * li) * r_max);
    Ok(Lp {
        cost,
        weight,
        cap: int((k * m * n) as i64),
        rhs,
    })
}

/// Minimum of `Σ (N−i+1)·α_i` over `α ∈ [0, KMN]^{sM}` subject to
/// `Σ_{a,b} (N−b+1)·α_{aM+b} = s·(MN − l(l+1) − (N+M−1−2l)·r_max)`.
///
/// A single equality with positive weights makes this a fractional knapsack:
/// fill coordinates in increasing cost-per-weight order (largest index first
/// on ties).
pub fn exponent_min_lp(s: usize, m: usize, n: usize, l: usize, r_max: Rational, k: usize) -> Result<LpSolution, OptError> {
    let lp = build(s, m, n, l, r_max, k)?;
    let dim = lp.cost.len();
    let capacity: Rational = lp.weight.iter().map(|w| *w * lp.cap).sum();
    if lp.rhs < Rational::zero() || lp.rhs > capacity {
        return Ok(LpSolution { value: Rational::zero(), alphas: vec![Rational::zero(); dim], infeasible: true });
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        (lp.cost[i] / lp.weight[i])
            .cmp(&(lp.cost[j] / lp.weight[j]))
            .then(j.cmp(&i))
    });
    let mut alphas = vec![Rational::zero(); dim];
    let mut left = lp.rhs;
    for i in order {
        if left.is_zero() {
            break;
        }
        let take = (left / lp.weight[i]).min(lp.cap);
        alphas[i] = take;
        left -= take * lp.weight[i];
    }
    let value = alphas.iter().zip(&lp.cost).map(|(a, c)| *a * *c).sum();
    Ok(LpSolution { value, alphas, infeasible: false })
}

/// Same LP solved by enumerating basic solutions: every coordinate at a bound
/// except at most one, which the equality determines. Limited to `s·M ≤ 8`.
pub fn exponent_min_lp_vertices(s: usize, m: usize, n: usize, l: usize, r_max: Rational, k: usize) -> Result<LpSolution, OptError> {
    let lp = build(s, m, n, l, r_max, k)?;
    let dim = lp.cost.len();
    if dim > 8 {
        return Err(OptError::Invalid(format!("vertex enumeration limited to 8 variables, got {dim}")));
    }
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    let mut consider = |alphas: Vec<Rational>| {
        let v: Rational = alphas.iter().zip(&lp.cost).map(|(a, c)| *a * *c).sum();
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, alphas));
        }
    };
    for mask in 0u32..(1 << dim) {
        let at = |i: usize| if mask >> i & 1 == 1 { lp.cap } else { Rational::zero() };
        let fixed: Rational = (0..dim).map(|i| at(i) * lp.weight[i]).sum();
        if fixed == lp.rhs {
            consider((0..dim).map(at).collect());
        }
        for free in 0..dim {
            let rest = fixed - at(free) * lp.weight[free];
            let x = (lp.rhs - rest) / lp.weight[free];
            if x >= Rational::zero() && x <= lp.cap {
                let mut a: Vec<Rational> = (0..dim).map(at).collect();
                a[free] = x;
                consider(a);
            }
        }
    }
    Ok(match best {
        Some((value, alphas)) => LpSolution { value, alphas, infeasible: false },
        None => LpSolution { value: Rational::zero(), alphas: vec![Rational::zero(); dim], infeasible: true },
    })
}

/// `s·(N − (aM+b) + 1) / (N − b + 1)`: ratio of a coordinate's cost to its
/// constraint weight, scaled by the subset size.
pub fn ratio_bound(s: usize, m: usize, n: usize, a: usize, b: usize) -> Result<Rational, OptError> {
    if s == 0 || a >= s || b == 0 || b > m {
        return Err(OptError::Invalid(format!("need 0 ≤ a < s and 1 ≤ b ≤ M (s={s}, a={a}, b={b}, M={m})")));
    }
    let den = n as i64 - b as i64 + 1;
    if den <= 0 {
        return Err(OptError::Invalid(format!("N − b + 1 = {den} ≤ 0")));
    }
    let num = s as i64 * (n as i64 - (a * m + b) as i64 + 1);
    Ok(Rational::new(num, den))
}
