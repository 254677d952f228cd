use std::f64::consts::{E, PI};

use macdmt_core::MacConfig;
use macdmt_scheme::{effective_structure, gram_determinant, stack_patterns, ComplexMatrix, EffectiveChannel};

use crate::McError;

struct SubsetTerm {
    users: Vec<usize>,
    columns: Vec<usize>,
    eff: EffectiveChannel,
}

/// Precomputed subset structure for the union bound at level `l`.
pub struct UnionBound {
    cfg: MacConfig,
    /// Complex symbols per user per block: `MN − l(l+1) = D_l·T_l`.
    per_user: usize,
    t: usize,
    terms: Vec<SubsetTerm>,
}

impl UnionBound {
    pub fn new(cfg: &MacConfig, l: usize) -> Result<Self, McError> {
        cfg.validate().map_err(|e| McError::Config(e.to_string()))?;
        if cfg.m > cfg.n || l >= cfg.m {
            return Err(McError::Config(format!("need M ≤ N and l < M ({cfg}, l={l})")));
        }
        if cfg.k > 16 {
            return Err(McError::Config(format!("K={} too large for subset enumeration", cfg.k)));
        }
        let mut structs = Vec::with_capacity(cfg.k);
        for size in 1..=cfg.k {
            structs.push(effective_structure(&stack_patterns(cfg, l, size)?));
        }
        let mut terms = Vec::new();
        for mask in 1u32..(1 << cfg.k) {
            let users: Vec<usize> = (0..cfg.k).filter(|i| mask >> i & 1 == 1).collect();
            let columns = users.iter().flat_map(|u| u * cfg.m..(u + 1) * cfg.m).collect();
            let eff = structs[users.len() - 1].clone();
            terms.push(SubsetTerm { users, columns, eff });
        }
        Ok(Self {
            cfg: *cfg,
            per_user: cfg.m * cfg.n - l * (l + 1),
            t: cfg.n + cfg.m - 1 - 2 * l,
            terms,
        })
    }

    /// `D_l`.
    pub fn dim(&self) -> f64 {
        self.per_user as f64 / self.t as f64
    }

    pub fn check_rates(&self, rates: &[f64]) -> Result<(), McError> {
        if rates.len() != self.cfg.k {
            return Err(McError::Config(format!("expected {} rates", self.cfg.k)));
        }
        let d = self.dim();
        if rates.iter().any(|r| !(0.0..=d + 1e-12).contains(r)) {
            return Err(McError::Config(format!("rates must lie in [0, D_l = {d}]")));
        }
        Ok(())
    }

    /// Gram determinant of the effective channel of user subset `users`.
    pub fn subset_gram(&self, h: &ComplexMatrix, users: &[usize]) -> f64 {
        let term = self.terms.iter().find(|t| t.users == users).expect("subset of users");
        gram_determinant(&h.select_columns(&term.columns), &term.eff)
    }

    /// `min(1, Σ_s ρ^{−T(|s|D − R_s)} / |H_eff(s)ᴴ H_eff(s)|)`.
    pub fn eval(&self, h: &ComplexMatrix, rates: &[f64], rho: f64) -> f64 {
        let ln_rho = rho.ln();
        let mut total = 0.0;
        for term in &self.terms {
            let g = gram_determinant(&h.select_columns(&term.columns), &term.eff);
            if !(g > 0.0) {
                return 1.0;
            }
            let rs: f64 = term.users.iter().map(|&u| rates[u]).sum();
            let expo = (term.users.len() * self.per_user) as f64 - self.t as f64 * rs;
            total += (-expo * ln_rho - g.ln()).exp();
            if total >= 1.0 {
                return 1.0;
            }
        }
        total
    }

    /// Effective radius squared of the received lattice for user subset `users`.
    pub fn effective_radius(&self, h: &ComplexMatrix, rates: &[f64], rho: f64, users: &[usize]) -> f64 {
        let g = self.subset_gram(h, users);
        if !(g > 0.0) {
            return 0.0;
        }
        let n = (users.len() * self.per_user) as f64;
        let rs: f64 = users.iter().map(|&u| rates[u]).sum();
        let size_dim = users.len() as f64 * self.dim();
        2.0 * n / (2.0 * PI * E) * rho.powf(-rs / size_dim) * g.powf(1.0 / n)
    }
}

fn check_h(cfg: &MacConfig, h: &ComplexMatrix) -> Result<(), McError> {
    if h.rows() != cfg.n || h.cols() != cfg.k * cfg.m {
        return Err(McError::Config(format!("H must be {}×{}", cfg.n, cfg.k * cfg.m)));
    }
    Ok(())
}

/// Union upper bound on the joint ML error probability for one channel draw.
pub fn pe_union_bound(h: &ComplexMatrix, cfg: &MacConfig, l: usize, rates: &[f64], rho: f64) -> Result<f64, McError> {
    if !(rho > 0.0) {
        return Err(McError::Config("rho must be positive".into()));
    }
    check_h(cfg, h)?;
    let ub = UnionBound::new(cfg, l)?;
    ub.check_rates(rates)?;
    Ok(ub.eval(h, rates, rho))
}

/// Squared effective radius `(2n/(2πe))·ρ^{−R_s/(|s|D_l)}·|H_effᴴH_eff|^{1/n}`
/// with `n = |s|·D_l·T_l`; users are 0-based.
pub fn effective_radius(
    h: &ComplexMatrix,
    cfg: &MacConfig,
    l: usize,
    rates: &[f64],
    rho: f64,
    users: &[usize],
) -> Result<f64, McError> {
    if !(rho > 0.0) {
        return Err(McError::Config("rho must be positive".into()));
    }
    check_h(cfg, h)?;
    let mut users = users.to_vec();
    users.sort_unstable();
    users.dedup();
    if users.is_empty() || users.iter().any(|&u| u >= cfg.k) {
        return Err(McError::Config("subset must be a non-empty set of users".into()));
    }
    let ub = UnionBound::new(cfg, l)?;
    ub.check_rates(rates)?;
    Ok(ub.effective_radius(h, rates, rho, &users))
}
