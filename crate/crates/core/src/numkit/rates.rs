//! Competing rate laws for a decay `y(ε)`: a power law `C ε^p` and a
//! reciprocal-log law `C / |ln ε|^q`.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Which law fits better, by coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreferredLaw {
    Power,
    ReciprocalLog,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Exponent `p` in `y ≈ C ε^p`.
    pub power_slope: f64,
    pub power_r2: f64,
    /// Exponent `q` in `y ≈ C / |ln ε|^q`.
    pub log_slope: f64,
    pub log_r2: f64,
    pub n_points: usize,
    pub preferred: PreferredLaw,
}

/// Ordinary least-squares line; returns `(slope, intercept, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2.clamp(0.0, 1.0))
}

pub fn fit_rates(eps: &[f64], y: &[f64]) -> Result<RateFit> {
    if eps.len() != y.len() {
        return config(format!("{} epsilon values but {} observations", eps.len(), y.len()));
    }
    if eps.len() < 3 {
        return config(format!("rate fit needs at least 3 points, got {}", eps.len()));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return domain("epsilon values must lie in (0, 1)");
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return config("epsilon values must be strictly decreasing");
    }
    if y.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return domain("rate fit needs strictly positive finite observations");
    }
    let ln_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let ln_e: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ln_ln: Vec<f64> = eps.iter().map(|e| e.ln().abs().ln()).collect();
    let (power_slope, _, power_r2) = linear_fit(&ln_e, &ln_y);
    let (neg_q, _, log_r2) = linear_fit(&ln_ln, &ln_y);
    let preferred = if power_r2 > log_r2 {
        PreferredLaw::Power
    } else if log_r2 > power_r2 {
        PreferredLaw::ReciprocalLog
    } else {
        PreferredLaw::Tie
    };
    Ok(RateFit {
        power_slope,
        power_r2,
        log_slope: -neg_q,
        log_r2,
        n_points: eps.len(),
        preferred,
    })
}
