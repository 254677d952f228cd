use serde::{Deserialize, Serialize};

use crate::McError;

/// Least-squares fit of `log10 P̂e = intercept − slope·log10 ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// Estimated diversity order (negated log–log slope).
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// `(log10 ρ, log10 P̂e)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Fit a line through `(log10 ρ, log10 P̂e)` points; needs at least three.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeEstimate, McError> {
    let n = points.len();
    if n < 3 {
        return Err(McError::Estimation(format!("{n} usable points, need at least 3")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(McError::Estimation("SNR points are not distinct".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ssr: f64 = points.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeEstimate { slope: -b, intercept: a, stderr, points: points.to_vec() })
}
