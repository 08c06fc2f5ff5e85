use crate::error::{domain, Result};

/// Legendre polynomial `P_n(t)` on `[-1, 1]`.
pub fn legendre_p(n: usize, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0) {
        return domain(format!("Legendre argument {t} outside [-1, 1]"));
    }
    Ok(legendre_table(n, t).0[n])
}

/// `P_0..=P_nmax` and their derivatives at `t`. The derivative recurrence
/// `P'_{n+1} = P'_{n-1} + (2n+1) P_n` stays regular at `t = ±1`.
pub fn legendre_table(nmax: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = Vec::with_capacity(nmax + 1);
    let mut dp = Vec::with_capacity(nmax + 1);
    p.push(1.0);
    dp.push(0.0);
    if nmax >= 1 {
        p.push(t);
        dp.push(1.0);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
        dp.push(dp[n - 1] + (2.0 * nf + 1.0) * p[n]);
    }
    (p, dp)
}

/// Fully normalized associated Legendre functions
/// `P̄_n^m(cos θ) = √((2n+1)/(4π) · (n−m)!/(n+m)!) P_n^m(cos θ)` for
/// `0 ≤ m ≤ mmax`, `m ≤ n ≤ nmax`, with their `θ`-derivatives, so that
/// `P̄_n^m(cos θ) e^{imφ}` are orthonormal on the unit sphere.
#[derive(Debug, Clone)]
pub struct AssocLegendre {
    nmax: usize,
    mmax: usize,
    p: Vec<f64>,
    dp: Vec<f64>,
}

impl AssocLegendre {
    /// Derivatives divide by `sin θ`; pass `sin θ > 0`.
    pub fn new(nmax: usize, mmax: usize, cos_t: f64, sin_t: f64) -> Self {
        let mmax = mmax.min(nmax);
        let len = (mmax + 1) * (nmax + 1);
        let mut p = vec![0.0; len];
        let mut dp = vec![0.0; len];
        let idx = |n: usize, m: usize| m * (nmax + 1) + n;
        let mut pmm = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
        for m in 0..=mmax {
            if m > 0 {
                let mf = m as f64;
                pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t;
            }
            p[idx(m, m)] = pmm;
            if m < nmax {
                p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_t * pmm;
            }
            for n in m + 2..=nmax {
                let (nf, mf) = (n as f64, m as f64);
                let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
                let b = (((nf - 1.0).powi(2) - mf * mf) / (4.0 * (nf - 1.0).powi(2) - 1.0)).sqrt();
                p[idx(n, m)] = a * (cos_t * p[idx(n - 1, m)] - b * p[idx(n - 2, m)]);
            }
            for n in m..=nmax {
                let (nf, mf) = (n as f64, m as f64);
                let lower = if n > m {
                    ((2.0 * nf + 1.0) / (2.0 * nf - 1.0) * (nf * nf - mf * mf)).sqrt() * p[idx(n - 1, m)]
                } else {
                    0.0
                };
                dp[idx(n, m)] = (nf * cos_t * p[idx(n, m)] - lower) / sin_t;
            }
        }
        AssocLegendre { nmax, mmax, p, dp }
    }

    pub fn p(&self, n: usize, m: usize) -> f64 {
        if m > self.mmax || n < m || n > self.nmax {
            0.0
        } else {
            self.p[m * (self.nmax + 1) + n]
        }
    }

    /// `d/dθ P̄_n^m(cos θ)`.
    pub fn dtheta(&self, n: usize, m: usize) -> f64 {
        if m > self.mmax || n < m || n > self.nmax {
            0.0
        } else {
            self.dp[m * (self.nmax + 1) + n]
        }
    }
}
