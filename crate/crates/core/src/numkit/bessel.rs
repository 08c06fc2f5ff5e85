//! Integer-order Bessel, Neumann and Hankel functions of real positive
//! argument, cylindrical and spherical.
//!
//! `J_n` and `j_n` come from Miller's downward recurrence normalized by the
//! Neumann sum `J_0 + 2 Σ J_2k = 1` (resp. the closed forms of `j_0`, `j_1`).
//! `Y_0` and `Y_1` are assembled from the same table through their Neumann
//! series; higher `Y_n`, `y_n` use upward recurrence, which is stable for the
//! dominant solution.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Highest order served unless a caller raises it explicitly.
pub const DEFAULT_MAX_ORDER: usize = 120;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_AT: f64 = 1e250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselKind {
    J,
    Y,
    H1,
    SphJ,
    SphY,
    SphH1,
}

/// Single value of the requested Bessel-family function.
pub fn bessel(kind: BesselKind, order: usize, z: f64) -> Result<C64> {
    bessel_with_max_order(kind, order, z, DEFAULT_MAX_ORDER)
}

pub fn bessel_with_max_order(kind: BesselKind, order: usize, z: f64, max_order: usize) -> Result<C64> {
    check_args(order, z, max_order)?;
    Ok(match kind {
        BesselKind::J | BesselKind::Y | BesselKind::H1 => {
            let t = CylTable::with_max_order(order, z, max_order)?;
            match kind {
                BesselKind::J => C64::new(t.j[order], 0.0),
                BesselKind::Y => C64::new(t.y[order], 0.0),
                _ => t.h1(order),
            }
        }
        _ => {
            let t = SphTable::with_max_order(order, z, max_order)?;
            match kind {
                BesselKind::SphJ => C64::new(t.j[order], 0.0),
                BesselKind::SphY => C64::new(t.y[order], 0.0),
                _ => t.h1(order),
            }
        }
    })
}

fn check_args(nmax: usize, z: f64, max_order: usize) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return domain(format!("Bessel argument must be positive and finite, got {z}"));
    }
    if nmax > max_order {
        return config(format!("order {nmax} exceeds the maximum supported order {max_order}"));
    }
    Ok(())
}

/// Starting order for the downward recurrence: far enough past both the
/// requested order and the turning point `n ≈ z` that the seed error is
/// below double precision.
fn miller_start(nmax: usize, z: f64) -> usize {
    let base = (nmax as f64).max(z);
    let start = (base + 20.0 + 12.5 * base.cbrt()).ceil() as usize;
    start + start % 2
}

/// `J_0..=J_nmax` and `Y_0..=Y_nmax` at one argument.
#[derive(Debug, Clone)]
pub struct CylTable {
    pub z: f64,
    pub j: Vec<f64>,
    pub y: Vec<f64>,
}

impl CylTable {
    pub fn new(nmax: usize, z: f64) -> Result<Self> {
        Self::with_max_order(nmax, z, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(nmax: usize, z: f64, max_order: usize) -> Result<Self> {
        check_args(nmax, z, max_order)?;
        let start = miller_start(nmax.max(1), z);
        let mut f = vec![0.0; start + 2];
        f[start] = 1e-30;
        let mut norm = 0.0;
        for m in (1..=start).rev() {
            let prev = 2.0 * m as f64 / z * f[m] - f[m + 1];
            f[m - 1] = prev;
            if (m - 1) % 2 == 0 && m - 1 > 0 {
                norm += 2.0 * prev;
            }
            if prev.abs() > RESCALE_AT {
                let s = 1.0 / RESCALE_AT;
                for v in f[m - 1..].iter_mut() {
                    *v *= s;
                }
                norm *= s;
            }
        }
        norm += f[0];
        for v in f.iter_mut() {
            *v /= norm;
        }

        let lg = (0.5 * z).ln() + EULER_GAMMA;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut k = 1;
        while 2 * k + 1 < f.len() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s0 += sign * f[2 * k] / k as f64;
            s1 += sign * (f[2 * k - 1] - f[2 * k + 1]) / k as f64;
            k += 1;
        }
        let y0 = FRAC_2_PI * lg * f[0] - 2.0 * FRAC_2_PI * s0;
        let y1 = -FRAC_2_PI / z * f[0] + FRAC_2_PI * lg * f[1] + FRAC_2_PI * s1;

        let mut y = Vec::with_capacity(nmax + 1);
        y.push(y0);
        if nmax >= 1 {
            y.push(y1);
        }
        for n in 1..nmax {
            let next = 2.0 * n as f64 / z * y[n] - y[n - 1];
            y.push(next);
        }
        f.truncate(nmax + 2);
        Ok(CylTable { z, j: f, y })
    }

    pub fn nmax(&self) -> usize {
        self.y.len() - 1
    }

    pub fn h1(&self, n: usize) -> C64 {
        C64::new(self.j[n], self.y[n])
    }

    pub fn dj(&self, n: usize) -> f64 {
        if n == 0 {
            -self.j[1]
        } else {
            self.j[n - 1] - n as f64 / self.z * self.j[n]
        }
    }

    /// Derivative of `Y_n`; needs `n ≥ 1` entries below it, and for `n = 0`
    /// uses `Y_0' = -Y_1` (table must hold order 1).
    pub fn dy(&self, n: usize) -> f64 {
        if n == 0 {
            -self.y1()
        } else {
            self.y[n - 1] - n as f64 / self.z * self.y[n]
        }
    }

    pub fn dh1(&self, n: usize) -> C64 {
        C64::new(self.dj(n), self.dy(n))
    }

    fn y1(&self) -> f64 {
        if self.y.len() > 1 {
            self.y[1]
        } else {
            // J_1 Y_0 - J_0 Y_1 = 2/(πz)
            (self.j[1] * self.y[0] - 2.0 / (PI * self.z)) / self.j[0]
        }
    }
}

/// Spherical `j_0..=j_nmax` and `y_0..=y_nmax` at one argument.
#[derive(Debug, Clone)]
pub struct SphTable {
    pub z: f64,
    pub j: Vec<f64>,
    pub y: Vec<f64>,
}

impl SphTable {
    pub fn new(nmax: usize, z: f64) -> Result<Self> {
        Self::with_max_order(nmax, z, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(nmax: usize, z: f64, max_order: usize) -> Result<Self> {
        check_args(nmax, z, max_order)?;
        // one extra order so derivatives are available at nmax
        let top = nmax + 1;
        let start = miller_start(top, z);
        let mut f = vec![0.0; start + 2];
        f[start] = 1e-30;
        for m in (1..=start).rev() {
            let prev = (2 * m + 1) as f64 / z * f[m] - f[m + 1];
            f[m - 1] = prev;
            if prev.abs() > RESCALE_AT {
                let s = 1.0 / RESCALE_AT;
                for v in f[m - 1..].iter_mut() {
                    *v *= s;
                }
            }
        }
        let (s, c) = z.sin_cos();
        let j0 = s / z;
        let scale = if f[0].abs() >= f[1].abs() {
            j0 / f[0]
        } else {
            (s / z - c) / z / f[1]
        };
        f.truncate(top + 1);
        for v in f.iter_mut() {
            *v *= scale;
        }
        let mut y = Vec::with_capacity(top + 1);
        y.push(-c / z);
        y.push(-c / (z * z) - s / z);
        for n in 1..top {
            let next = (2 * n + 1) as f64 / z * y[n] - y[n - 1];
            y.push(next);
        }
        Ok(SphTable { z, j: f, y })
    }

    pub fn nmax(&self) -> usize {
        self.y.len() - 2
    }

    pub fn h1(&self, n: usize) -> C64 {
        C64::new(self.j[n], self.y[n])
    }

    pub fn dj(&self, n: usize) -> f64 {
        if n == 0 {
            -self.j[1]
        } else {
            self.j[n - 1] - (n + 1) as f64 / self.z * self.j[n]
        }
    }

    pub fn dy(&self, n: usize) -> f64 {
        if n == 0 {
            -self.y[1]
        } else {
            self.y[n - 1] - (n + 1) as f64 / self.z * self.y[n]
        }
    }

    pub fn dh1(&self, n: usize) -> C64 {
        C64::new(self.dj(n), self.dy(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from a 40-digit arbitrary-precision evaluation.
    const CYL_REF: &[(usize, f64, f64, f64)] = &[
        (0, 0.5, 0.938_469_807_240_812_9, -0.444_518_733_506_706_56),
        (0, 1.0, 0.765_197_686_557_966_55, 0.088_256_964_215_676_958),
        (0, 5.0, -0.177_596_771_314_338_3, -0.308_517_625_249_033_78),
        (0, 20.0, 0.167_024_664_340_583_15, 0.062_640_596_809_383_831),
        (0, 0.01, 0.999_975_000_156_249_57, -3.005_455_637_083_646),
        (0, 100.0, 0.019_985_850_304_223_122, -0.077_244_313_365_083_152),
        (1, 0.5, 0.242_268_457_674_873_89, -1.471_472_392_670_243),
        (1, 1.0, 0.440_050_585_744_933_52, -0.781_212_821_300_288_7),
        (1, 5.0, -0.327_579_137_591_465_22, 0.147_863_143_391_226_84),
        (1, 20.0, 0.066_833_124_175_850_046, -0.165_511_614_362_521_3),
        (1, 0.01, 0.004_999_937_500_260_416_1, -63.678_596_282_060_656),
        (5, 0.5, 8.053_627_241_357_474e-6, -7946.301_478_807_473),
        (5, 5.0, 0.261_140_546_120_170_1, -0.453_694_822_491_101_88),
        (5, 20.0, 0.151_169_767_982_394_97, -0.100_035_767_889_532_43),
        (5, 150.0, -0.064_998_631_740_725_847, -0.004_652_497_340_417_635),
        (30, 1.0, 3.482_869_794_251_483e-42, -3.048_128_783_225_643_2e39),
        (30, 20.0, 0.000_124_015_363_603_543_28, -114.978_146_263_083_41),
        (30, 100.0, 0.081_460_129_581_172_223, 0.006_138_839_212_010_033_5),
    ];

    const SPH_REF: &[(usize, f64, f64, f64)] = &[
        (0, 0.1, 0.998_334_166_468_281_52, -9.950_041_652_780_258),
        (0, 7.5, 0.125_066_663_569_965_18, -0.046_218_042_378_003_441),
        (1, 0.1, 0.033_300_011_902_557_57, -100.498_750_694_270_86),
        (1, 2.0, 0.435_397_774_979_991_6, -0.350_612_004_276_055_25),
        (2, 7.5, -0.136_883_658_464_101_75, -0.006_273_585_310_142_814_5),
        (2, 40.0, -0.017_342_392_966_988_259, -0.018_039_275_995_565_375),
        (10, 0.1, 7.271_510_996_713_672e-21, -6.549_013_974_656_281e19),
        (10, 2.0, 6.825_300_864_974_725e-8, -355_414.720_085_438_4),
        (10, 40.0, 0.013_124_803_182_748_326, -0.021_803_068_636_888_072),
    ];

    #[test]
    fn cylindrical_matches_high_precision_reference() {
        for &(n, x, j, y) in CYL_REF {
            let t = CylTable::new(n, x).unwrap();
            assert!(rel(t.j[n], j) < 1e-12, "J_{n}({x}) = {} vs {j}", t.j[n]);
            assert!(rel(t.y[n], y) < 1e-12, "Y_{n}({x}) = {} vs {y}", t.y[n]);
        }
    }

    #[test]
    fn spherical_matches_high_precision_reference() {
        for &(n, x, j, y) in SPH_REF {
            let t = SphTable::new(n, x).unwrap();
            assert!(rel(t.j[n], j) < 1e-12, "j_{n}({x}) = {} vs {j}", t.j[n]);
            assert!(rel(t.y[n], y) < 1e-12, "y_{n}({x}) = {} vs {y}", t.y[n]);
        }
    }

    #[test]
    fn trivial_values() {
        let v = bessel(BesselKind::SphJ, 0, PI).unwrap();
        assert!(v.norm() < 1e-15);
        let h = bessel(BesselKind::SphH1, 0, 2.0).unwrap();
        assert!((h.norm() - 0.5).abs() < 1e-15);
        let h = bessel(BesselKind::H1, 3, 2.0).unwrap();
        let j = bessel(BesselKind::J, 3, 2.0).unwrap();
        let y = bessel(BesselKind::Y, 3, 2.0).unwrap();
        assert_eq!(h, j + C64::i() * y);
    }

    #[test]
    fn argument_and_order_errors() {
        assert!(matches!(bessel(BesselKind::J, 0, 0.0), Err(crate::Error::Domain(_))));
        assert!(matches!(bessel(BesselKind::SphY, 0, -1.0), Err(crate::Error::Domain(_))));
        assert!(matches!(bessel(BesselKind::J, 121, 1.0), Err(crate::Error::Config(_))));
        assert!(bessel(BesselKind::J, 120, 1.0).is_ok());
    }

    #[test]
    fn wronskians() {
        for i in 0..100 {
            let z = 10f64.powf(-2.0 + 4.0 * (i as f64 + 0.5) / 100.0);
            let c = CylTable::new(26, z).unwrap();
            for &m in &[0usize, 1, 3, 10, 25] {
                let w = c.j[m] * c.dy(m) - c.dj(m) * c.y[m];
                assert!(rel(w, 2.0 / (PI * z)) < 1e-10, "m={m} z={z} w={w}");
            }
            let s = SphTable::new(25, z).unwrap();
            for &n in &[0usize, 1, 4, 10, 25] {
                let w = s.j[n] * s.dy(n) - s.dj(n) * s.y[n];
                assert!(rel(w, 1.0 / (z * z)) < 1e-10, "n={n} z={z}");
            }
        }
    }
}
