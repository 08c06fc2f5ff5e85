use std::f64::consts::PI;
use std::sync::OnceLock;

use cloaklab::analytic_ball::{self, BallGeom};
use cloaklab::fields::fd_gradient;
use cloaklab::mfs_cylinder::*;
use cloaklab::vector::{rotate_z, spherical};
use cloaklab::*;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn k2() -> Wavenumber {
    Wavenumber::new(2.0).unwrap()
}

fn generic_model() -> &'static MfsModel {
    static M: OnceLock<MfsModel> = OnceLock::new();
    M.get_or_init(|| {
        let s = PointSourceSet::default_experiment();
        solve_obstacle(Obstacle::cylinder(0.1).unwrap(), k2(), &s, &MfsConfig::default()).unwrap()
    })
}

fn axial_model() -> &'static MfsModel {
    static M: OnceLock<MfsModel> = OnceLock::new();
    M.get_or_init(|| {
        let s = PointSourceSet::single([0.0, 0.0, 2.5]).unwrap();
        solve_obstacle(Obstacle::cylinder(0.1).unwrap(), k2(), &s, &MfsConfig::default()).unwrap()
    })
}

fn mirror_model() -> &'static MfsModel {
    static M: OnceLock<MfsModel> = OnceLock::new();
    M.get_or_init(|| {
        let one = C64::new(1.0, 0.0);
        let s = PointSourceSet::new(vec![
            PointSource { location: [2.0, 1.5, 0.3], amplitude: one },
            PointSource { location: [-2.0, -1.5, 0.3], amplitude: one },
        ])
        .unwrap();
        solve_obstacle(Obstacle::cylinder(0.1).unwrap(), k2(), &s, &MfsConfig::default()).unwrap()
    })
}

fn annulus_points(n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| spherical(rng.gen_range(2.0..5.0), rng.gen::<f64>() * 2.0 * PI, rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn certificates_pass_the_default_gate() {
    assert!(generic_model().passes(DEFAULT_GATE), "{}", generic_model().certificate());
    assert!(axial_model().passes(DEFAULT_GATE), "{}", axial_model().certificate());
}

#[test]
fn ball_matches_series() {
    let eps = 0.2;
    let s = PointSourceSet::default_experiment();
    let mfs = solve_obstacle(Obstacle::ball(eps).unwrap(), k2(), &s, &MfsConfig::default()).unwrap();
    assert!(mfs.passes(DEFAULT_GATE));
    let series = analytic_ball::solve_ball_auto(BallGeom::new(eps, Dim::Three).unwrap(), k2(), &s).unwrap();
    let mut worst: f64 = 0.0;
    for x in annulus_points(50, 3) {
        let a = eval_total(&mfs, x).unwrap().value;
        let b = analytic_ball::eval_total(&series, x).unwrap().value;
        worst = worst.max((a - b).norm() / b.norm());
    }
    assert!(worst <= 1e-5, "{worst}");
}

#[test]
fn axisymmetric_data_gives_rotation_invariant_field() {
    let m = axial_model();
    let mut worst: f64 = 0.0;
    for x in annulus_points(20, 5) {
        let a = eval_total(m, x).unwrap().value;
        for angle in [0.7, 2.0, PI] {
            let b = eval_total(m, rotate_z(x, angle)).unwrap().value;
            worst = worst.max((a - b).norm() / a.norm());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
    // near the obstacle too
    let x = [0.13, 0.02, 0.45];
    let a = eval_scattered(m, x).unwrap().value;
    let b = eval_scattered(m, rotate_z(x, 1.1)).unwrap().value;
    assert!((a - b).norm() <= 1e-8 * a.norm());
}

#[test]
fn mirror_invariance() {
    let m = mirror_model();
    assert!(m.passes(DEFAULT_GATE));
    let mut worst: f64 = 0.0;
    let mut pts = annulus_points(20, 7);
    pts.extend([[0.11, 0.03, 0.2], [0.0, 0.15, -0.52], [0.3, -0.2, 0.0]]);
    for x in pts {
        let a = eval_total(m, x).unwrap().value;
        let b = eval_total(m, [-x[0], -x[1], x[2]]).unwrap().value;
        worst = worst.max((a - b).norm() / a.norm());
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn gradient_matches_finite_differences() {
    let m = generic_model();
    for x in [[0.0, 0.3, 0.1], [0.12, 0.05, 0.55], [1.5, -2.0, 0.4], [0.0, 0.0, 0.8]] {
        let g = eval_total(m, x).unwrap().grad;
        let fd = fd_gradient(|p| eval_total(m, p), Dim::Three, x, 1e-5).unwrap();
        let scale = g.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..3 {
            assert!((g[i] - fd[i]).norm() <= 1e-6 * scale, "{x:?} {i} {} {}", g[i], fd[i]);
        }
    }
}

#[test]
fn far_field_decays_like_inverse_distance() {
    let m = generic_model();
    for dir in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.0, 0.0, -1.0]] {
        let a = eval_scattered(m, [20.0 * dir[0], 20.0 * dir[1], 20.0 * dir[2]]).unwrap().value.norm();
        let b = eval_scattered(m, [40.0 * dir[0], 40.0 * dir[1], 40.0 * dir[2]]).unwrap().value.norm();
        assert!((a / b - 2.0).abs() <= 0.04, "{}", a / b);
    }
}

#[test]
fn near_and_far_evaluations_agree() {
    // the far expansion takes over at |x| = 2 R0; both sides must match
    let m = generic_model();
    for x in [[0.0, 0.0, 1.0001], [0.9999, 0.0, 0.0], [0.5, 0.5, 0.7072]] {
        let a = eval_scattered(m, x).unwrap();
        let y = [x[0] * 0.9999, x[1] * 0.9999, x[2] * 0.9999];
        let b = eval_scattered(m, y).unwrap();
        assert!((a.value - b.value).norm() <= 1e-3 * a.value.norm(), "{:?} {} {}", x, a.value, b.value);
    }
}

#[test]
fn certificate_is_honest_at_random_points() {
    let cases = [
        (generic_model(), PointSourceSet::default_experiment()),
        (axial_model(), PointSourceSet::single([0.0, 0.0, 2.5]).unwrap()),
    ];
    for (m, inc) in cases {
        let pts = random_boundary_points(m.obstacle(), 400, 11);
        let g_max = validation_nodes(m.obstacle(), &MfsConfig::default())
            .unwrap()
            .iter()
            .map(|n| fields::incident(&inc, k2(), Dim::Three, n.point).unwrap().value.norm())
            .fold(0.0, f64::max);
        let worst = pts
            .iter()
            .map(|&x| {
                let v = eval_scattered(m, x).unwrap().value;
                let u = fields::incident(&inc, k2(), Dim::Three, x).unwrap().value;
                (v + u).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst / g_max <= 3.0 * m.certificate(), "{} {}", worst / g_max, m.certificate());
    }
}

#[test]
fn ring_flux_symmetries() {
    let axial = ring_flux(axial_model(), 0.1, 16).unwrap();
    let s0 = axial.samples[0];
    assert!(axial.samples.iter().all(|s| (s - s0).norm() <= 1e-6 * s0.norm()));
    assert!((axial.total - axial.mean * (2.0 * PI * 0.1)).norm() < 1e-15 * axial.total.norm().max(1.0));

    let generic = ring_flux(mirror_model(), -0.2, 16).unwrap();
    for i in 0..8 {
        let (a, b) = (generic.samples[i], generic.samples[i + 8]);
        assert!((a - b).norm() <= 1e-6 * a.norm(), "{a} {b}");
    }
}

#[test]
fn static_ring_flux_matches_thin_wire_capacitance() {
    let eps = 0.1;
    let m = solve_dirichlet(
        Obstacle::cylinder(eps).unwrap(),
        Wavenumber::static_limit(),
        |_| Ok(C64::new(1.0, 0.0)),
        &MfsConfig::default(),
    )
    .unwrap();
    assert!(m.passes(DEFAULT_GATE), "{}", m.certificate());
    let total = ring_flux(&m, 0.0, 16).unwrap().total;
    let wire = 2.0 * PI / (1.0 / eps).ln();
    assert!(total.im.abs() < 1e-12 * total.re.abs());
    let ratio = total.norm() / wire;
    assert!((0.5..=2.0).contains(&ratio), "{total} vs {wire}");
}

#[test]
fn failing_certificate_is_reported() {
    let cfg = MfsConfig {
        n_theta: 4,
        n_z: 2,
        n_cap_rings: 1,
        axis_sources: 1,
        ..MfsConfig::default()
    };
    let s = PointSourceSet::default_experiment();
    let m = solve_obstacle(Obstacle::cylinder(0.2).unwrap(), k2(), &s, &cfg).unwrap();
    let cert = m.certificate();
    assert!(cert > 0.0);
    match m.require(cert / 2.0) {
        Err(Error::Certificate { certificate, .. }) => assert_eq!(certificate, cert),
        other => panic!("{other:?}"),
    }
}
