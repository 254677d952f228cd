//! Library half of the `macdmt` command-line tool: each subcommand's logic
//! returns its outputs as strings so the binary stays a thin argument layer
//! and the outputs can be tested directly.

pub mod verify;

use std::fmt;

use macdmt_core::rational::{self, Rational};
use macdmt_core::{
    fc_dmt_mac_symmetric, fc_dmt_p2p, ic_dmt_mac_symmetric, ic_dmt_upper_p2p, MacConfig, PiecewiseLinearCurve,
};
use macdmt_montecarlo::{estimate_diversity, McError, Mode, SimConfig};
use macdmt_optimizer::{maximize_dim_allocation, suboptimality_witness, witness_family, OptOptions};
use macdmt_scheme::{effective_structure, stack_patterns_numbered, Numbering};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Failure classes, mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or malformed input (exit 2).
    Usage(String),
    /// Well-formed request that failed at run time (exit 1).
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

/// Parse a rational from `a/b`, an integer or a decimal.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).ok_or_else(|| format!("'{s}' is not a rational (expected a/b, an integer or a decimal)"))
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- curve

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    FcP2p,
    FcMac,
    IcMac,
    IcLine,
}

pub struct CurveRequest {
    pub kind: CurveKind,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub dim: Option<Rational>,
    pub step: Rational,
}

/// Curve breakpoints plus sampled rows, as JSON and CSV.
pub struct CurveOutput {
    pub curve: PiecewiseLinearCurve,
    pub json: String,
    pub csv: String,
}

pub fn run_curve(req: &CurveRequest) -> CliResult<CurveOutput> {
    let cfg = MacConfig::new(req.k, req.m, req.n).map_err(usage)?;
    if req.step <= Rational::from_integer(0) {
        return Err(usage("grid step must be positive"));
    }
    if req.dim.is_some() && req.kind != CurveKind::IcLine {
        return Err(usage("--dim only applies to --kind ic_line"));
    }
    let mut extra = serde_json::Map::new();
    let curve = match req.kind {
        CurveKind::FcP2p => fc_dmt_p2p(cfg.m, cfg.n),
        CurveKind::FcMac => fc_dmt_mac_symmetric(&cfg),
        CurveKind::IcMac => {
            let (regime, curve) = ic_dmt_mac_symmetric(&cfg);
            extra.insert("regime".into(), serde_json::to_value(regime).expect("serializable"));
            curve
        }
        CurveKind::IcLine => {
            let d = req.dim.ok_or_else(|| usage("--kind ic_line needs --dim D"))?;
            let zero = Rational::from_integer(0);
            let top = ic_dmt_upper_p2p(cfg.m, cfg.n, d, zero).map_err(usage)?;
            extra.insert("dim".into(), json!([*d.numer(), *d.denom()]));
            PiecewiseLinearCurve::canonical(vec![(zero, top), (d, zero)]).map_err(usage)?
        }
    };
    let rows: Vec<[[i64; 2]; 2]> = curve
        .sample(req.step)
        .into_iter()
        .map(|(r, d)| [[*r.numer(), *r.denom()], [*d.numer(), *d.denom()]])
        .collect();
    let mut obj = serde_json::Map::new();
    obj.insert("kind".into(), serde_json::to_value(req.kind).expect("serializable"));
    obj.insert("K".into(), json!(cfg.k));
    obj.insert("M".into(), json!(cfg.m));
    obj.insert("N".into(), json!(cfg.n));
    obj.extend(extra);
    obj.insert("curve".into(), serde_json::to_value(&curve).expect("serializable"));
    obj.insert("step".into(), json!([*req.step.numer(), *req.step.denom()]));
    obj.insert("rows".into(), json!(rows));
    let json = to_json(&obj);
    let csv = curve.to_csv(req.step);
    Ok(CurveOutput { curve, json, csv })
}

// ---------------------------------------------------------------- optimize

/// `optimize` input file: `{"K":2,"M":2,"N":4,"rates":[[5,4],[5,4]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeInput {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "rational::pair_vec")]
    pub rates: Vec<Rational>,
}

pub fn parse_optimize_input(text: &str) -> CliResult<OptimizeInput> {
    serde_json::from_str(text).map_err(|e| usage(format!("malformed optimize input: {e}")))
}

pub fn run_optimize(input: &OptimizeInput, opts: &OptOptions) -> CliResult<String> {
    let cfg = MacConfig::new(input.k, input.m, input.n).map_err(usage)?;
    if input.rates.len() != cfg.k {
        return Err(usage(format!("expected {} rates, got {}", cfg.k, input.rates.len())));
    }
    let res = maximize_dim_allocation(&cfg, &input.rates, opts).map_err(|e| match e {
        macdmt_optimizer::OptError::Invalid(m) => CliError::Usage(m),
        other => failure(other),
    })?;
    let out = json!({
        "K": cfg.k,
        "M": cfg.m,
        "N": cfg.n,
        "regime": cfg.regime(),
        "rates": serde_json::to_value(Pairs(&input.rates)).expect("serializable"),
        "result": res,
    });
    Ok(to_json(&out))
}

struct Pairs<'a>(&'a [Rational]);

impl Serialize for Pairs<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        rational::pair_vec::serialize(self.0, s)
    }
}

// ---------------------------------------------------------------- witness

pub fn run_witness(
    k: usize,
    m: usize,
    n: usize,
    r0: Option<Rational>,
    eps: Option<Rational>,
    opts: &OptOptions,
) -> CliResult<String> {
    let cfg = MacConfig::new(k, m, n).map_err(usage)?;
    let report = if r0.is_some() || eps.is_some() {
        if !(k == 2 && m >= 2 && n == 3 * (m - 1)) {
            return Err(usage("--r0/--eps select the asymmetric family K=2, M=s+1, N=3s"));
        }
        Some(witness_family(m - 1, r0, eps, opts).map_err(usage)?)
    } else {
        suboptimality_witness(&cfg, opts).map_err(failure)?
    };
    Ok(to_json(&json!({
        "K": cfg.k,
        "M": cfg.m,
        "N": cfg.n,
        "regime": cfg.regime(),
        "witness": report,
    })))
}

// ---------------------------------------------------------------- scheme

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeFormat {
    Text,
    Json,
}

pub fn run_scheme(m: usize, n: usize, l: usize, users: usize, numbering: Numbering, format: SchemeFormat) -> CliResult<String> {
    let cfg = MacConfig::new(users, m, n).map_err(usage)?;
    let p = stack_patterns_numbered(&cfg, l, users, numbering).map_err(usage)?;
    let eff = effective_structure(&p);
    match format {
        SchemeFormat::Text => {
            let mut s = format!("M={m} N={n} l={l} T={} users={users}\n", p.t);
            s.push_str(&p.render());
            s.push_str("blocks (1-based pooled columns):\n");
            for (i, b) in eff.blocks.iter().enumerate() {
                let cols: Vec<String> = b.iter().map(|j| (j + 1).to_string()).collect();
                s.push_str(&format!("  {}: {}\n", i + 1, cols.join(" ")));
            }
            Ok(s)
        }
        SchemeFormat::Json => Ok(to_json(&json!({
            "M": m,
            "N": n,
            "l": l,
            "T": p.t,
            "users": users,
            "numbering": match numbering { Numbering::PerUser => "per_user", Numbering::ByLevel => "level" },
            "cells": p.triples(),
            "effective_channel": eff,
        }))),
    }
}

// ---------------------------------------------------------------- simulate

/// Effective configuration and fitted slope, written as the summary JSON.
#[derive(Debug, Serialize)]
pub struct SimSummary {
    pub config: SimConfig,
    pub estimate: macdmt_montecarlo::SlopeEstimate,
}

pub struct SimulateOutput {
    pub csv: String,
    pub summary: String,
}

/// Parse and validate a simulation config, applying the overrides.
pub fn load_sim_config(text: &str, mode: Option<Mode>, seed_override: Option<&str>) -> CliResult<SimConfig> {
    let mut sim: SimConfig = serde_json::from_str(text).map_err(|e| usage(format!("malformed config: {e}")))?;
    if let Some(m) = mode {
        sim.mode = m;
    }
    if let Some(s) = seed_override {
        sim.seed = s.trim().parse().map_err(|_| usage(format!("MACDMT_SEED='{s}' is not a 64-bit unsigned integer")))?;
    }
    sim.validate().map_err(usage)?;
    Ok(sim)
}

pub fn run_simulate(sim: &SimConfig) -> CliResult<SimulateOutput> {
    let out = estimate_diversity(sim).map_err(|e| match e {
        McError::Config(m) => CliError::Usage(m),
        other => failure(other),
    })?;
    let mut csv = String::from("snr_db,trials,errors,pe_hat\n");
    for r in &out.rows {
        csv.push_str(&format!("{},{},{},{}\n", r.snr_db, r.trials, r.errors, r.pe_hat));
    }
    let summary = SimSummary {
        config: sim.clone(),
        estimate: out.estimate,
    };
    Ok(SimulateOutput { csv, summary: to_json(&summary) })
}
