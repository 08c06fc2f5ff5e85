//! Quick closed-form checks across the library, each decided exactly or to
//! a tight tolerance. Used by `cloaklab selftest`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analytic_ball::{self, BallGeom};
use crate::cloak_transform::{
    continuity_audit, export_materials, make_cylinder_map, make_radial_map, pushforward, transform_identity_audit, GridPairing, GridSpec,
    TestFunction,
};
use crate::experiments::{h1_annulus_quadrature, stability_audit, Annulus, Scheme, SweepOptions};
use crate::fields::{green, helmholtz_residual, incident, plane_wave, Dim, FieldSample, PointSource, PointSourceSet, SourceProfile, Wavenumber};
use crate::mfs_cylinder::{boundary_nodes, source_points, CylinderGeom, MfsConfig, Obstacle};
use crate::numkit::{bessel, fit_rates, gauss_legendre, legendre_p, lstsq_tikhonov, BesselKind, CMatrix};
use crate::vector::{dist, dot, norm, Point};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

type Body = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Body)] = &[
    ("gauss one node", || {
        let q = gauss_legendre(1, -1.0, 1.0)?;
        Ok((q.nodes[0] == 0.0 && q.weights[0] == 2.0, format!("{:?} {:?}", q.nodes, q.weights)))
    }),
    ("gauss two nodes", || {
        let q = gauss_legendre(2, -1.0, 1.0)?;
        let r = 1.0 / 3f64.sqrt();
        let ok = close(q.nodes[0], -r, 1e-15) && close(q.nodes[1], r, 1e-15) && q.weights.iter().all(|&w| close(w, 1.0, 1e-15));
        Ok((ok, format!("{:?} {:?}", q.nodes, q.weights)))
    }),
    ("gauss cubic exactness", || {
        let v = gauss_legendre(2, 0.0, 1.0)?.integrate(|x| x * x * x);
        Ok((close(v, 0.25, 1e-15), format!("{v}")))
    }),
    ("spherical j0 at pi", || {
        let v = bessel(BesselKind::SphJ, 0, PI)?;
        Ok((v.norm() < 1e-15, format!("{v}")))
    }),
    ("spherical h0 modulus", || {
        let v = bessel(BesselKind::SphH1, 0, 2.0)?.norm();
        Ok((close(v, 0.5, 1e-14), format!("{v}")))
    }),
    ("legendre values", || {
        let (p0, p2, p3) = (legendre_p(0, 0.7)?, legendre_p(2, 1.0)?, legendre_p(3, 0.3)?);
        Ok((p0 == 1.0 && close(p2, 1.0, 1e-15) && close(p3, -0.3825, 1e-15), format!("{p0} {p2} {p3}")))
    }),
    ("least squares identity", || {
        let b: Vec<C64> = (0..4).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let rows: Vec<Vec<C64>> = (0..4)
            .map(|i| (0..4).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let s = lstsq_tikhonov(&CMatrix::from_rows(&rows)?, &b, 0.0)?;
        let err = s.x.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        Ok((err < 1e-14, format!("max error {err:e}")))
    }),
    ("least squares duplicate rows", || {
        let r0 = vec![C64::new(1.0, 0.0), C64::new(2.0, 1.0)];
        let r1 = vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)];
        let x = [C64::new(0.5, -1.0), C64::new(2.0, 0.25)];
        let rows = vec![r0.clone(), r1.clone(), r0, r1];
        let b: Vec<C64> = rows.iter().map(|r| r[0] * x[0] + r[1] * x[1]).collect();
        let s = lstsq_tikhonov(&CMatrix::from_rows(&rows)?, &b, 0.0)?;
        Ok((s.residual_norm < 1e-13, format!("residual {:e}", s.residual_norm)))
    }),
    ("rate fit exact laws", || {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let one = fit_rates(&eps, &eps)?;
        let two = fit_rates(&eps, &eps.map(|e| e * e))?;
        let ok = close(one.power_slope, 1.0, 1e-12) && close(one.power_r2, 1.0, 1e-12) && close(two.power_slope, 2.0, 1e-12);
        Ok((ok, format!("{} {}", one.power_slope, two.power_slope)))
    }),
    ("green modulus", || {
        let g = green(Wavenumber::new(2.0)?, Dim::Three, [0.3, -0.2, 0.9], [0.0, 0.0, 0.0])?;
        let r = norm([0.3, -0.2, 0.9]);
        Ok((close(g.value.norm(), 1.0 / (4.0 * PI * r), 1e-15), format!("{}", g.value)))
    }),
    ("single source equals green", || {
        let k = Wavenumber::new(2.0)?;
        let x = [0.4, 1.0, -0.3];
        let a = incident(&PointSourceSet::default_experiment(), k, Dim::Three, x)?;
        let b = green(k, Dim::Three, x, [2.5, 0.0, 0.0])?;
        let d = (a.value - b.value).norm();
        Ok((d == 0.0, format!("difference {d:e}")))
    }),
    ("antipodal sources mirror", || {
        let k = Wavenumber::new(2.0)?;
        let one = C64::new(1.0, 0.0);
        let s = PointSourceSet::new(vec![
            PointSource { location: [2.5, 0.0, 0.0], amplitude: one },
            PointSource { location: [-2.5, 0.0, 0.0], amplitude: one },
        ])?;
        let a = incident(&s, k, Dim::Three, [0.7, 0.2, -0.4])?.value;
        let b = incident(&s, k, Dim::Three, [-0.7, 0.2, -0.4])?.value;
        Ok(((a - b).norm() <= 1e-12 * a.norm(), format!("{a} {b}")))
    }),
    ("plane wave", || {
        let k = Wavenumber::new(2.0)?;
        let d = [0.6, 0.0, 0.8];
        let at0 = plane_wave(k, d, [0.0; 3])?.value;
        let f = plane_wave(k, d, [0.3, 1.1, -0.7])?;
        let ratio_err = (0..3).map(|i| (f.grad[i] / f.value - C64::new(0.0, 2.0 * d[i])).norm()).fold(0.0, f64::max);
        let ok = at0 == C64::new(1.0, 0.0) && close(f.value.norm(), 1.0, 1e-15) && ratio_err < 1e-15;
        Ok((ok, format!("grad/value error {ratio_err:e}")))
    }),
    ("helmholtz residual of exact fields", || {
        let k = Wavenumber::new(2.0)?;
        let pw = helmholtz_residual(|x| plane_wave(k, [0.0, 0.6, 0.8], x), 2.0, Dim::Three, [0.1, 0.2, 0.3], 1e-3)?.norm();
        let g = helmholtz_residual(|x| green(k, Dim::Three, x, [0.0; 3]), 2.0, Dim::Three, [0.5, 0.3, 0.2], 1e-4)?.norm();
        Ok((pw <= 1e-6 && g <= 1e-6, format!("{pw:e} {g:e}")))
    }),
    ("ball scattering axis symmetry", || {
        let m = analytic_ball::solve_ball_auto(BallGeom::new(0.2, Dim::Three)?, Wavenumber::new(2.0)?, &PointSourceSet::default_experiment())?;
        let a = analytic_ball::eval_scattered(&m, [0.5, 0.8, 0.0])?.value;
        let b = analytic_ball::eval_scattered(&m, [0.5, 0.0, -0.8])?.value;
        Ok(((a - b).norm() <= 1e-12 * a.norm(), format!("{a} {b}")))
    }),
    ("series linear in amplitude", || {
        let geom = BallGeom::new(0.2, Dim::Three)?;
        let k = Wavenumber::new(2.0)?;
        let s = PointSourceSet::default_experiment();
        let m1 = analytic_ball::solve_ball_auto(geom, k, &s)?;
        let m2 = analytic_ball::solve_ball_auto(geom, k, &s.scaled(C64::new(2.0, 0.0)))?;
        let x = [1.0, -0.5, 0.3];
        let (a, b) = (analytic_ball::eval_scattered(&m1, x)?, analytic_ball::eval_scattered(&m2, x)?);
        let ok = b.value == a.value * 2.0 && (0..3).all(|i| b.grad[i] == a.grad[i] * 2.0);
        Ok((ok, format!("{} {}", a.value, b.value)))
    }),
    ("low-frequency constant", || {
        let g0 = C64::new(0.3, -0.4);
        let at1 = analytic_ball::lowfreq_constant(Dim::Three, 0.2, g0, 1.0)?;
        let far = analytic_ball::lowfreq_constant(Dim::Three, 0.2, g0, 10.0)?.norm();
        let ok = (at1 - g0).norm() <= 1e-15 && close(far, 0.1 * g0.norm(), 1e-13);
        Ok((ok, format!("{at1} {far}")))
    }),
    ("sphere flux of zero data", || {
        let v = analytic_ball::sphere_flux_average(BallGeom::new(0.2, Dim::Three)?, Wavenumber::new(2.0)?, C64::new(0.0, 0.0))?;
        Ok((v.norm() == 0.0, format!("{v}")))
    }),
    ("cylinder boundary weights", || {
        let nodes = boundary_nodes(&Obstacle::cylinder(0.1)?, &MfsConfig::default())?;
        let area: f64 = nodes.iter().map(|n| n.weight).sum();
        Ok((close(area, 2.0 * PI * 0.1 + 2.0 * PI * 0.01, 1e-12), format!("{area}")))
    }),
    ("cylinder lateral normals and mirror nodes", || {
        let nodes = boundary_nodes(&Obstacle::cylinder(0.1)?, &MfsConfig::default())?;
        let lateral_ok = nodes.iter().filter(|n| n.normal[2] == 0.0).all(|n| close(dot(n.point, n.normal), 0.1, 1e-14));
        let mirror_ok = nodes
            .iter()
            .all(|n| nodes.iter().any(|m| dist(m.point, [-n.point[0], -n.point[1], n.point[2]]) < 1e-14));
        Ok((lateral_ok && mirror_ok, format!("lateral {lateral_ok}, mirror {mirror_ok}")))
    }),
    ("cylinder sources inside", || {
        let geom = CylinderGeom::new(0.05)?;
        let pts = source_points(&Obstacle::cylinder(0.05)?, &MfsConfig::default())?;
        let inside = pts.iter().all(|&p| geom.contains_strictly(p));
        let mirror = pts.iter().all(|p| pts.iter().any(|q| dist(*q, [-p[0], -p[1], p[2]]) < 1e-14));
        Ok((inside && mirror, format!("inside {inside}, mirror {mirror}")))
    }),
    ("cylinder map branches", || {
        let m = make_cylinder_map(0.1)?;
        let out = m.forward([0.0, 0.0, 2.0])?;
        let shell = m.forward_piece(crate::cloak_transform::Piece::Shell, [0.1, 0.0, 0.0])?;
        Ok((out == [0.0, 0.0, 2.0] && close(shell[0], 0.5, 1e-15), format!("{out:?} {shell:?}")))
    }),
    ("radial map interfaces", || {
        let m = make_radial_map(0.1, Dim::Three)?;
        let x: Point = [0.06, 0.0, 0.08];
        let inner = m.forward_piece(crate::cloak_transform::Piece::Inner, x)?;
        let shell = m.forward_piece(crate::cloak_transform::Piece::Shell, x)?;
        let at2 = m.forward([1.2, 0.0, 1.6])?;
        let jumps = continuity_audit(&m, 200)?.max_jump();
        let ok = close(norm(inner), 1.0, 1e-14) && close(norm(shell), 1.0, 1e-14) && dist(at2, [1.2, 0.0, 1.6]) < 1e-15 && jumps <= 1e-12;
        Ok((ok, format!("max jump {jumps:e}")))
    }),
    ("identity-region material", || {
        let p = pushforward(&make_radial_map(0.1, Dim::Three)?, [2.5, 0.3, 0.0])?;
        let eye = (0..3).all(|i| (0..3).all(|j| p.a[i][j] == if i == j { 1.0 } else { 0.0 }));
        Ok((eye && p.sigma == 1.0, format!("{p:?}")))
    }),
    ("weak form zero test function", || {
        let k = Wavenumber::new(2.0)?;
        let a = transform_identity_audit(
            &make_radial_map(0.1, Dim::Three)?,
            k,
            |x| plane_wave(k, [0.0, 0.0, 1.0], x),
            &[TestFunction::Zero],
            2,
            GridPairing::Matched,
        )?;
        let ok = a.source_side[0].norm() == 0.0 && a.image_side[0].norm() == 0.0;
        Ok((ok, format!("{} {}", a.source_side[0], a.image_side[0])))
    }),
    ("material export count", || {
        let grid = GridSpec { min: [-2.5, -2.5, 0.0], max: [2.5, 2.5, 0.0], n: [11, 11, 1] };
        let e = export_materials(&make_radial_map(0.1, Dim::Two)?, &grid)?;
        Ok((e.records.len() + e.skipped() == grid.len(), format!("{} records, {} skipped", e.records.len(), e.skipped())))
    }),
    ("annulus norm of constants", || {
        let ann = Annulus::new(Dim::Three);
        let zero = h1_annulus_quadrature(|_| Ok(FieldSample::zero()), &ann, 2)?;
        let c = C64::new(3.0, 4.0);
        let v = h1_annulus_quadrature(|_| Ok(FieldSample::new(c, [C64::new(0.0, 0.0); 3])), &ann, 2)?;
        let want = 5.0 * (156.0 * PI).sqrt();
        Ok((zero == 0.0 && close(v, want, 1e-12), format!("{v} vs {want}")))
    }),
    ("stability of a zero source", || {
        let s = PointSourceSet::with_profile(
            vec![PointSource { location: [2.5, 0.0, 0.0], amplitude: C64::new(0.0, 0.0) }],
            SourceProfile::Bump { radius: 0.4 },
        )?;
        let opts = SweepOptions { timing: false, ..SweepOptions::default() };
        let r = stability_audit(Scheme::Ball3d, Wavenumber::new(2.0)?, &s, &[0.2, 0.1], &opts)?;
        let ok = r.free_norm == 0.0 && r.rows.iter().all(|row| row.visibility == 0.0);
        Ok((ok, format!("free {} rows {:?}", r.free_norm, r.rows.iter().map(|r| r.visibility).collect::<Vec<_>>())))
    }),
];

/// Runs every check; a check that errors counts as failed.
pub fn run() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|(name, body)| {
            let (passed, detail) = match body() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            Check { name: name.to_string(), passed, detail }
        })
        .collect()
}
