use std::f64::consts::PI;

use cloaklab::experiments::lowfreq_audit;
use cloaklab::numkit::*;
use cloaklab::Wavenumber;
use proptest::prelude::*;

// 40-digit mpmath values
const CYL: &[(usize, f64, f64, f64)] = &[
    (0, 0.5, 0.938_469_807_240_812_9, -0.444_518_733_506_706_57),
    (0, 0.01, 0.999_975_000_156_249_6, -3.005_455_637_083_646),
    (0, 150.0, -0.000_774_090_375_394_291_2, -0.065_142_221_509_037_35),
    (1, 1.0, 0.440_050_585_744_933_5, -0.781_212_821_300_288_7),
    (1, 0.01, 0.004_999_937_500_260_416, -63.678_596_282_060_66),
    (5, 5.0, 0.261_140_546_120_170_1, -0.453_694_822_491_101_8),
    (5, 0.5, 8.053_627_241_357_474e-6, -7946.301_478_807_473),
    (30, 20.0, 0.000_124_015_363_603_543_28, -114.978_146_263_083_41),
    (30, 100.0, 0.081_460_129_581_172_22, 0.006_138_839_212_010_033),
];

const SPH: &[(usize, f64, f64, f64)] = &[
    (0, 0.1, 0.998_334_166_468_281_5, -9.950_041_652_780_258),
    (1, 2.0, 0.435_397_774_979_991_6, -0.350_612_004_276_055_25),
    (2, 7.5, -0.136_883_658_464_101_75, -0.006_273_585_310_142_815),
    (10, 2.0, 6.825_300_864_974_725e-8, -355_414.720_085_438_4),
    (10, 40.0, 0.013_124_803_182_748_326, -0.021_803_068_636_888_07),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn cylindrical_reference_values() {
    for &(n, x, j, y) in CYL {
        let t = CylTable::new(n, x).unwrap();
        assert!(rel(t.j[n], j) < 1e-12, "J_{n}({x}) = {}", t.j[n]);
        assert!(rel(t.y[n], y) < 1e-12, "Y_{n}({x}) = {}", t.y[n]);
    }
}

#[test]
fn spherical_reference_values() {
    for &(n, x, j, y) in SPH {
        let t = SphTable::new(n, x).unwrap();
        assert!(rel(t.j[n], j) < 1e-12, "j_{n}({x}) = {}", t.j[n]);
        assert!(rel(t.y[n], y) < 1e-12, "y_{n}({x}) = {}", t.y[n]);
    }
}

#[test]
fn hankel_ratio_reference_values() {
    let rows = lowfreq_audit(Wavenumber::new(2.0).unwrap(), &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    let want = [0.380_185_932_149_370_3, 0.202_513_924_032_212_63, 0.134_218_890_322_036_08, 0.099_767_129_195_858_59];
    for (r, w) in rows.iter().zip(want) {
        assert!(rel(r.ratio_2d, w) < 1e-12, "{} {}", r.eps, r.ratio_2d);
    }
}

#[test]
fn gauss_rule_integrates_polynomials() {
    let q = gauss_legendre(8, -1.0, 1.0).unwrap();
    for p in 0..16 {
        let s: f64 = q.nodes.iter().zip(&q.weights).map(|(x, w)| w * x.powi(p)).sum();
        let want = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
        assert!((s - want).abs() < 1e-14, "degree {p}: {s}");
    }
}

proptest! {
    #[test]
    fn cylindrical_wronskian(z in 0.01f64..100.0, n in 0usize..25) {
        let t = CylTable::new(n, z).unwrap();
        let w = t.j[n] * t.dy(n) - t.dj(n) * t.y[n];
        prop_assert!(rel(w, 2.0 / (PI * z)) < 1e-10);
    }

    #[test]
    fn spherical_wronskian(z in 0.01f64..100.0, n in 0usize..25) {
        let t = SphTable::new(n, z).unwrap();
        let w = t.j[n] * t.dy(n) - t.dj(n) * t.y[n];
        prop_assert!(rel(w, 1.0 / (z * z)) < 1e-10);
    }

    #[test]
    fn three_term_recurrence(z in 0.5f64..60.0, n in 1usize..20) {
        let t = CylTable::new(n + 1, z).unwrap();
        let lhs = t.j[n - 1] + t.j[n + 1];
        let rhs = 2.0 * n as f64 / z * t.j[n];
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + t.j[n].abs() + 1e-300) + 1e-15);
    }
}
