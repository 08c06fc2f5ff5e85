//! Blow-up maps of transformation optics and the material tensors they push
//! forward.
//!
//! A [`CloakMap`] is piecewise smooth with three pieces: the small inclusion
//! (`Inner`), the layer around it (`Shell`) and the untouched exterior
//! (`Outer`). Push-forward follows
//! `F*A(y) = DF A DFᵀ / |det DF|`, `F*σ(y) = σ / |det DF|` at `x = F⁻¹(y)`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{Matrix2, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::fields::{Dim, FieldSample, Wavenumber};
use crate::numkit::{gauss_legendre, periodic_trapezoid};
use crate::vector::{dist, norm, spherical, Point};

/// Points closer than this to an interface are treated as lying on it.
pub const INTERFACE_TOL: f64 = 1e-12;

/// Version tag written in the header of material exports.
pub const MATERIAL_FORMAT: &str = "cloaklab-mat-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Identity,
    /// `x/ε` on `B_ε`, radial affine on `B₂ ∖ B_ε`, identity outside `B₂`.
    Radial,
    /// The three-branch map of the thin cylinder onto `D₁ = {|x′| ≤ 1/2, |z| ≤ 3/4}`.
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Piece {
    Inner,
    Shell,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloakMap {
    kind: MapKind,
    eps: f64,
    dim: Dim,
}

pub fn make_cylinder_map(eps: f64) -> Result<CloakMap> {
    if !(eps > 0.0 && eps < 0.5) {
        return config(format!("cylinder map needs 0 < ε < 1/2, got {eps}"));
    }
    Ok(CloakMap {
        kind: MapKind::Cylinder,
        eps,
        dim: Dim::Three,
    })
}

pub fn make_radial_map(eps: f64, dim: Dim) -> Result<CloakMap> {
    if !(eps > 0.0 && eps < 1.0) {
        return config(format!("radial map needs 0 < ε < 1, got {eps}"));
    }
    Ok(CloakMap {
        kind: MapKind::Radial,
        eps,
        dim,
    })
}

impl CloakMap {
    pub fn identity(dim: Dim) -> Self {
        CloakMap {
            kind: MapKind::Identity,
            eps: 0.0,
            dim,
        }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn descriptor(&self) -> String {
        let name = match self.kind {
            MapKind::Identity => "identity",
            MapKind::Radial => "radial",
            MapKind::Cylinder => "cylinder",
        };
        format!("map={name} eps={} dim={}", self.eps, self.dim.n())
    }

    pub fn pieces(&self) -> &'static [Piece] {
        match self.kind {
            MapKind::Identity => &[Piece::Outer],
            _ => &[Piece::Inner, Piece::Shell, Piece::Outer],
        }
    }

    fn check_point(&self, x: Point) -> Result<()> {
        if self.dim == Dim::Two && x[2] != 0.0 {
            return domain(format!("2D map evaluated at {x:?} with nonzero third coordinate"));
        }
        if !x.iter().all(|c| c.is_finite()) {
            return domain(format!("non-finite point {x:?}"));
        }
        Ok(())
    }

    /// Piece whose open interior contains `x`.
    pub fn locate(&self, x: Point) -> Result<Piece> {
        self.check_point(x)?;
        let on = |msg: &str| Err(Error::Interface(format!("{x:?} lies on {msg}")));
        match self.kind {
            MapKind::Identity => Ok(Piece::Outer),
            MapKind::Radial => {
                let r = norm(x);
                if (r - self.eps).abs() <= INTERFACE_TOL {
                    on("the inner sphere")
                } else if (r - 2.0).abs() <= INTERFACE_TOL {
                    on("the outer sphere")
                } else if r < self.eps {
                    Ok(Piece::Inner)
                } else if r < 2.0 {
                    Ok(Piece::Shell)
                } else {
                    Ok(Piece::Outer)
                }
            }
            MapKind::Cylinder => {
                let (s, z) = (x[0].hypot(x[1]), x[2].abs());
                let t = INTERFACE_TOL;
                let on_box = |rad: f64, half: f64| {
                    ((s - rad).abs() <= t && z <= half + t) || ((z - half).abs() <= t && s <= rad + t)
                };
                if on_box(self.eps, 0.5) {
                    on("the boundary of the inclusion")
                } else if on_box(1.0, 1.5) {
                    on("the boundary of D₂")
                } else if s < self.eps && z < 0.5 {
                    Ok(Piece::Inner)
                } else if s < 1.0 && z < 1.5 {
                    if s <= t {
                        on("the axis, where x′/|x′| is undefined")
                    } else {
                        Ok(Piece::Shell)
                    }
                } else {
                    Ok(Piece::Outer)
                }
            }
        }
    }

    /// The map with its branch conditions as stated: the inclusion is
    /// `|x′| < ε, |z| ≤ 1/2` and `D₂` is closed.
    pub fn forward(&self, x: Point) -> Result<Point> {
        self.check_point(x)?;
        let piece = match self.kind {
            MapKind::Identity => Piece::Outer,
            MapKind::Radial => {
                let r = norm(x);
                if r < self.eps {
                    Piece::Inner
                } else if r < 2.0 {
                    Piece::Shell
                } else {
                    Piece::Outer
                }
            }
            MapKind::Cylinder => {
                let (s, z) = (x[0].hypot(x[1]), x[2].abs());
                if s < self.eps && z <= 0.5 {
                    Piece::Inner
                } else if s <= 1.0 && z <= 1.5 {
                    Piece::Shell
                } else {
                    Piece::Outer
                }
            }
        };
        self.forward_piece(piece, x)
    }

    fn shell_profile(&self, s: f64) -> (f64, f64) {
        let e = self.eps;
        match self.kind {
            MapKind::Radial => (1.0 + (s - e) / (2.0 - e), 1.0 / (2.0 - e)),
            _ => ((1.0 - 2.0 * e) / (2.0 * (1.0 - e)) + s / (2.0 * (1.0 - e)), 1.0 / (2.0 * (1.0 - e))),
        }
    }

    /// Branch formula of `piece` evaluated at `x`, wherever it is defined.
    pub fn forward_piece(&self, piece: Piece, x: Point) -> Result<Point> {
        self.check_point(x)?;
        let e = self.eps;
        match (self.kind, piece) {
            (_, Piece::Outer) | (MapKind::Identity, _) => Ok(x),
            (MapKind::Radial, Piece::Inner) => Ok([x[0] / e, x[1] / e, x[2] / e]),
            (MapKind::Radial, Piece::Shell) => {
                let r = norm(x);
                if r == 0.0 {
                    return domain("radial shell branch is undefined at the origin");
                }
                let f = self.shell_profile(r).0 / r;
                Ok([f * x[0], f * x[1], f * x[2]])
            }
            (MapKind::Cylinder, Piece::Inner) => Ok([x[0] / (2.0 * e), x[1] / (2.0 * e), 1.5 * x[2]]),
            (MapKind::Cylinder, Piece::Shell) => {
                let s = x[0].hypot(x[1]);
                if s == 0.0 {
                    return domain("cylinder shell branch is undefined on the axis");
                }
                let f = self.shell_profile(s).0 / s;
                Ok([f * x[0], f * x[1], 0.75 * x[2] + 0.375])
            }
        }
    }

    /// Closed-form inverse of one branch formula.
    pub fn inverse_piece(&self, piece: Piece, y: Point) -> Result<Point> {
        self.check_point(y)?;
        let e = self.eps;
        match (self.kind, piece) {
            (_, Piece::Outer) | (MapKind::Identity, _) => Ok(y),
            (MapKind::Radial, Piece::Inner) => Ok([e * y[0], e * y[1], e * y[2]]),
            (MapKind::Radial, Piece::Shell) => {
                let big = norm(y);
                if big == 0.0 {
                    return Err(Error::NotInvertible("the origin is not in the image of the shell".into()));
                }
                let r = e + (big - 1.0) * (2.0 - e);
                if r <= 0.0 {
                    return Err(Error::NotInvertible(format!("{y:?} is not in the image of the shell")));
                }
                Ok([r * y[0] / big, r * y[1] / big, r * y[2] / big])
            }
            (MapKind::Cylinder, Piece::Inner) => Ok([2.0 * e * y[0], 2.0 * e * y[1], y[2] / 1.5]),
            (MapKind::Cylinder, Piece::Shell) => {
                let t = y[0].hypot(y[1]);
                let s = 2.0 * (1.0 - e) * t - (1.0 - 2.0 * e);
                if t == 0.0 || s <= 0.0 {
                    return Err(Error::NotInvertible(format!("{y:?} is not in the image of the shell")));
                }
                Ok([s * y[0] / t, s * y[1] / t, (y[2] - 0.375) / 0.75])
            }
        }
    }

    /// Analytic Jacobian of a branch. In 2D the third diagonal entry is 1.
    pub fn jacobian_piece(&self, piece: Piece, x: Point) -> Result<Matrix3<f64>> {
        self.check_point(x)?;
        let e = self.eps;
        let radial_block = |s: f64, u: [f64; 3], n: usize| {
            let (rho, drho) = self.shell_profile(s);
            let mut m = Matrix3::identity();
            for i in 0..n {
                for j in 0..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    m[(i, j)] = rho / s * delta + (drho - rho / s) * u[i] * u[j];
                }
            }
            m
        };
        match (self.kind, piece) {
            (_, Piece::Outer) | (MapKind::Identity, _) => Ok(Matrix3::identity()),
            (MapKind::Radial, Piece::Inner) => {
                let mut m = Matrix3::identity() / e;
                if self.dim == Dim::Two {
                    m[(2, 2)] = 1.0;
                }
                Ok(m)
            }
            (MapKind::Radial, Piece::Shell) => {
                let r = norm(x);
                if r == 0.0 {
                    return domain("radial shell Jacobian is undefined at the origin");
                }
                Ok(radial_block(r, [x[0] / r, x[1] / r, x[2] / r], self.dim.n()))
            }
            (MapKind::Cylinder, Piece::Inner) => Ok(Matrix3::from_diagonal(&Vector3::new(
                1.0 / (2.0 * e),
                1.0 / (2.0 * e),
                1.5,
            ))),
            (MapKind::Cylinder, Piece::Shell) => {
                let s = x[0].hypot(x[1]);
                if s == 0.0 {
                    return domain("cylinder shell Jacobian is undefined on the axis");
                }
                let mut m = radial_block(s, [x[0] / s, x[1] / s, 0.0], 2);
                m[(2, 2)] = 0.75;
                Ok(m)
            }
        }
    }

    /// Jacobian at `x` off the interfaces.
    pub fn jacobian(&self, x: Point) -> Result<Matrix3<f64>> {
        let piece = self.locate(x)?;
        self.jacobian_piece(piece, x)
    }

    /// Unique preimage of `y` and the piece that contains it.
    pub fn inverse(&self, y: Point) -> Result<(Piece, Point)> {
        let mut found = Vec::new();
        let mut on_interface = false;
        for &p in self.pieces() {
            let Ok(x) = self.inverse_piece(p, y) else { continue };
            match self.locate(x) {
                Ok(q) if q == p => found.push((p, x)),
                Err(Error::Interface(_)) => on_interface = true,
                _ => {}
            }
        }
        match found.len() {
            1 => Ok(found[0]),
            0 if on_interface => Err(Error::Interface(format!("{y:?} is the image of an interface point"))),
            0 => Err(Error::NotInvertible(format!("{y:?} has no preimage"))),
            _ => Err(Error::NotInvertible(format!(
                "{y:?} has preimages in {:?}",
                found.iter().map(|f| f.0).collect::<Vec<_>>()
            ))),
        }
    }

    /// `F⁺ − F⁻` of two branch formulas at `x`.
    pub fn branch_jump(&self, a: Piece, b: Piece, x: Point) -> Result<Point> {
        let (fa, fb) = (self.forward_piece(a, x)?, self.forward_piece(b, x)?);
        Ok([fa[0] - fb[0], fa[1] - fb[1], fa[2] - fb[2]])
    }

    /// Radii in the image where radially split maps change branch.
    fn radial_breaks(&self) -> Option<Vec<f64>> {
        match self.kind {
            MapKind::Identity => Some(vec![]),
            MapKind::Radial => Some(vec![1.0, 2.0]),
            MapKind::Cylinder => None,
        }
    }

    /// Preimage radius of an image radius, for radially split maps.
    fn radial_preimage(&self, r: f64) -> f64 {
        let e = self.eps;
        match self.kind {
            MapKind::Radial if r < 1.0 => e * r,
            MapKind::Radial if r < 2.0 => e + (r - 1.0) * (2.0 - e),
            _ => r,
        }
    }
}

/// Push-forward material at one point. In 2D only the upper-left block of
/// `a` is used and the rest is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialPoint {
    pub dim: Dim,
    pub a: [[f64; 3]; 3],
    pub sigma: f64,
}

impl MaterialPoint {
    /// Eigenvalues of `A` in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match self.dim {
            Dim::Three => Matrix3::from_fn(|i, j| self.a[i][j]).symmetric_eigenvalues().iter().copied().collect(),
            Dim::Two => Matrix2::from_fn(|i, j| self.a[i][j]).symmetric_eigenvalues().iter().copied().collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest over smallest eigenvalue.
    pub fn anisotropy(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[ev.len() - 1] / ev[0]
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            Dim::Three => Matrix3::from_fn(|i, j| self.a[i][j]).determinant(),
            Dim::Two => Matrix2::from_fn(|i, j| self.a[i][j]).determinant(),
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.a[i][j] - self.a[j][i]).abs());
            }
        }
        worst
    }
}

fn block_det(j: &Matrix3<f64>, dim: Dim) -> f64 {
    match dim {
        Dim::Three => j.determinant(),
        Dim::Two => j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)],
    }
}

/// `F*I` and `F*1` at `y`.
pub fn pushforward(map: &CloakMap, y: Point) -> Result<MaterialPoint> {
    let (piece, x) = map.inverse(y)?;
    let j = map.jacobian_piece(piece, x)?;
    let det = block_det(&j, map.dim).abs();
    if !(det > 0.0) {
        return Err(Error::NotInvertible(format!("singular Jacobian at {x:?}")));
    }
    let n = map.dim.n();
    let jj = j * j.transpose();
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate().take(n) {
        for (k, v) in row.iter_mut().enumerate().take(n) {
            *v = jj[(i, k)] / det;
        }
    }
    Ok(MaterialPoint {
        dim: map.dim,
        a,
        sigma: 1.0 / det,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceJump {
    pub name: String,
    pub sides: (Piece, Piece),
    pub samples: usize,
    pub max_jump: f64,
    /// Sample point with the largest jump.
    pub worst: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub map: String,
    pub interfaces: Vec<InterfaceJump>,
}

impl ContinuityReport {
    pub fn max_jump(&self) -> f64 {
        self.interfaces.iter().map(|i| i.max_jump).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&InterfaceJump> {
        self.interfaces.iter().find(|i| i.name == name)
    }
}

fn sphere_samples(dim: Dim, r: f64, n: usize) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| match dim {
            Dim::Three => spherical(r, golden * i as f64, 1.0 - 2.0 * (i as f64 + 0.5) / n as f64),
            Dim::Two => {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                [r * t.cos(), r * t.sin(), 0.0]
            }
        })
        .collect()
}

/// Surface samples of the box `|x′| ≤ rad, |z| ≤ half`, split between the
/// lateral side (`lateral`) and the two faces.
fn box_samples(rad: f64, half: f64, n: usize, lateral: bool, faces: bool) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let th = golden * i as f64;
        let f = (i as f64 + 0.5) / n as f64;
        let (s, z) = match (lateral, faces) {
            (true, false) => (rad, half * (2.0 * f - 1.0)),
            (false, true) => (rad * f.sqrt(), if i % 2 == 0 { -half } else { half }),
            _ => match i % 3 {
                0 => (rad, half * (2.0 * f - 1.0)),
                1 => (rad * f.sqrt(), -half),
                _ => (rad * f.sqrt(), half),
            },
        };
        out.push([s * th.cos(), s * th.sin(), z]);
    }
    out
}

/// Largest mismatch of the branch formulas on both sides of every interface.
pub fn continuity_audit(map: &CloakMap, n_samples: usize) -> Result<ContinuityReport> {
    if n_samples < 100 {
        return config("continuity audit needs at least 100 samples per interface");
    }
    let e = map.eps;
    let sets: Vec<(&str, (Piece, Piece), Vec<Point>)> = match map.kind {
        MapKind::Identity => Vec::new(),
        MapKind::Radial => vec![
            ("inner-sphere", (Piece::Inner, Piece::Shell), sphere_samples(map.dim, e, n_samples)),
            ("outer-sphere", (Piece::Shell, Piece::Outer), sphere_samples(map.dim, 2.0, n_samples)),
        ],
        MapKind::Cylinder => vec![
            ("lateral", (Piece::Inner, Piece::Shell), box_samples(e, 0.5, n_samples, true, false)),
            ("caps", (Piece::Inner, Piece::Shell), box_samples(e, 0.5, n_samples, false, true)),
            ("d2-boundary", (Piece::Shell, Piece::Outer), box_samples(1.0, 1.5, n_samples, true, true)),
        ],
    };
    let mut interfaces = Vec::new();
    for (name, (a, b), pts) in sets {
        let mut max_jump = 0.0;
        let mut worst = pts[0];
        for x in &pts {
            let d = map.branch_jump(a, b, *x)?;
            let j = norm(d);
            if j > max_jump {
                max_jump = j;
                worst = *x;
            }
        }
        interfaces.push(InterfaceJump {
            name: name.to_string(),
            sides: (a, b),
            samples: pts.len(),
            max_jump,
            worst,
        });
    }
    Ok(ContinuityReport {
        map: map.descriptor(),
        interfaces,
    })
}

/// Pointwise checks of a map at seeded random samples of `|x| < 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapAudit {
    pub map: String,
    pub samples: usize,
    /// Samples off every interface.
    pub located: usize,
    /// `max |F⁻¹(F(x)) − x| / (1 + |x|)` within each piece.
    pub round_trip: f64,
    /// Samples far enough from interfaces for a difference quotient.
    pub jacobian_samples: usize,
    /// `max ‖DF − DF_h‖ / ‖DF‖` with central differences, `h = 1e-6`.
    pub jacobian_fd: f64,
    /// Images at which the push-forward material was evaluated.
    pub material_samples: usize,
    pub min_eigenvalue: f64,
    pub max_asymmetry: f64,
}

fn fd_jacobian(map: &CloakMap, piece: Piece, x: Point) -> Result<Matrix3<f64>> {
    let h = 1e-6;
    let mut j = Matrix3::identity();
    for b in 0..map.dim.n() {
        let (mut xp, mut xm) = (x, x);
        xp[b] += h;
        xm[b] -= h;
        let (fp, fm) = (map.forward_piece(piece, xp)?, map.forward_piece(piece, xm)?);
        for a in 0..3 {
            j[(a, b)] = (fp[a] - fm[a]) / (2.0 * h);
        }
    }
    Ok(j)
}

pub fn map_audit(map: &CloakMap, n_samples: usize, seed: u64) -> Result<MapAudit> {
    if n_samples == 0 {
        return config("map audit needs at least one sample");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = MapAudit {
        map: map.descriptor(),
        samples: n_samples,
        located: 0,
        round_trip: 0.0,
        jacobian_samples: 0,
        jacobian_fd: 0.0,
        material_samples: 0,
        min_eigenvalue: f64::INFINITY,
        max_asymmetry: 0.0,
    };
    for _ in 0..n_samples {
        let r = 3.0 * rng.gen::<f64>();
        let phi = 2.0 * PI * rng.gen::<f64>();
        let c = 2.0 * rng.gen::<f64>() - 1.0;
        let x = match map.dim {
            Dim::Three => spherical(r, phi, c),
            Dim::Two => [r * phi.cos(), r * phi.sin(), 0.0],
        };
        let piece = match map.locate(x) {
            Ok(p) => p,
            Err(Error::Interface(_)) => continue,
            Err(e) => return Err(e),
        };
        out.located += 1;
        let y = map.forward_piece(piece, x)?;
        let back = map.inverse_piece(piece, y)?;
        out.round_trip = out.round_trip.max(dist(back, x) / (1.0 + norm(x)));

        let clear = [1e-4, -1e-4].iter().all(|d| {
            let p = x.map(|v| v * (1.0 + d));
            map.locate(p).ok() == Some(piece)
        });
        if clear && norm(x) > 1e-3 {
            let j = map.jacobian_piece(piece, x)?;
            out.jacobian_samples += 1;
            out.jacobian_fd = out.jacobian_fd.max((j - fd_jacobian(map, piece, x)?).norm() / j.norm());
        }

        match pushforward(map, y) {
            Ok(m) => {
                out.material_samples += 1;
                out.min_eigenvalue = out.min_eigenvalue.min(m.eigenvalues()[0]);
                out.max_asymmetry = out.max_asymmetry.max(m.max_asymmetry());
            }
            Err(Error::Interface(_) | Error::NotInvertible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Test functions for the weak-form audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Zero,
    /// `b(|y − center| / radius)` with `b(t) = exp(−1/(1 − t²))`.
    Bump { center: Point, radius: f64 },
    /// `b((|y| − mid) / half_width) · (1 + ⟨a, ŷ⟩ + ⟨c, ŷ⟩²)`: a radial bump
    /// on a spherical layer with a smooth angular factor.
    Layer {
        mid: f64,
        half_width: f64,
        a: Point,
        c: Point,
    },
}

/// `b(t)` and `b′(t)/t` for the bump `exp(−1/(1 − t²))`.
fn bump_profile(t2: f64) -> (f64, f64) {
    if t2 >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - t2;
    let v = (-1.0 / q).exp();
    (v, -2.0 * v / (q * q))
}

impl TestFunction {
    /// Value and gradient.
    pub fn eval(&self, y: Point) -> (f64, [f64; 3]) {
        match *self {
            TestFunction::Zero => (0.0, [0.0; 3]),
            TestFunction::Bump { center, radius } => {
                let d = [y[0] - center[0], y[1] - center[1], y[2] - center[2]];
                let (v, f) = bump_profile((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (radius * radius));
                let f = f / (radius * radius);
                (v, [f * d[0], f * d[1], f * d[2]])
            }
            TestFunction::Layer { mid, half_width, a, c } => {
                let r = norm(y);
                let t = (r - mid) / half_width;
                let (b, db_t) = bump_profile(t * t);
                if b == 0.0 {
                    return (0.0, [0.0; 3]);
                }
                let u = [y[0] / r, y[1] / r, y[2] / r];
                let (au, cu) = (dot3(a, u), dot3(c, u));
                let ang = 1.0 + au + cu * cu;
                // ∇⟨a, ŷ⟩ = (a − ⟨a, ŷ⟩ŷ) / r
                let db = db_t * t / half_width;
                let mut g = [0.0; 3];
                for i in 0..3 {
                    let da = (a[i] - au * u[i]) / r;
                    let dc = 2.0 * cu * (c[i] - cu * u[i]) / r;
                    g[i] = db * u[i] * ang + b * (da + dc);
                }
                (b * ang, g)
            }
        }
    }
}

impl TestFunction {
    /// Radii `[lo, hi]` outside of which the function vanishes.
    pub fn radial_support(&self) -> Option<(f64, f64)> {
        match *self {
            TestFunction::Zero => None,
            TestFunction::Bump { center, radius } => Some(((norm(center) - radius).max(0.0), norm(center) + radius)),
            TestFunction::Layer { mid, half_width, .. } => Some(((mid - half_width).max(0.0), mid + half_width)),
        }
    }
}

fn dot3(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `n` layer bumps supported in `B₂ ∖ {0}`; most straddle `|y| = 1`.
pub fn bump_family(n: usize, dim: Dim) -> Vec<TestFunction> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|j| {
            let f = (j as f64 * 0.618_034) % 1.0;
            let half_width = 0.3 + 0.25 * f;
            let mid = half_width + 0.05 + (1.9 - 2.0 * half_width - 0.05) * ((j as f64 * 0.414_214) % 1.0);
            let dir = match dim {
                Dim::Three => spherical(1.0, golden * j as f64, 1.0 - 2.0 * (j as f64 + 0.5) / n as f64),
                Dim::Two => [(golden * j as f64).cos(), (golden * j as f64).sin(), 0.0],
            };
            let perp = match dim {
                Dim::Three => spherical(0.8, golden * j as f64 + 1.3, 0.3),
                Dim::Two => [-0.8 * dir[1], 0.8 * dir[0], 0.0],
            };
            TestFunction::Layer {
                mid,
                half_width,
                a: [0.6 * dir[0], 0.6 * dir[1], 0.6 * dir[2]],
                c: perp,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityAudit {
    /// `∫ ∇u·∇(φ∘F) − k² u (φ∘F)` over the source ball, per test function.
    pub source_side: Vec<C64>,
    /// `∫ F*I ∇v·∇φ − k² F*1 v φ` over the image ball.
    pub image_side: Vec<C64>,
    /// `|∫ ∇u·∇(φ∘F)| + k² |∫ u (φ∘F)|`, the size of the individual terms.
    /// For an exact Helmholtz solution both sides vanish, so defects are
    /// measured against this.
    pub scale: Vec<f64>,
    pub defects: Vec<f64>,
    pub max_defect: f64,
}

/// How the image-side grid relates to the source-side grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridPairing {
    /// Same product structure on both sides. For radially affine maps the
    /// image grid is then the exact image of the source grid and the sums
    /// agree term by term.
    Matched,
    /// The image grid is rotated and has three more radial nodes per
    /// segment, so the two sums are independent quadratures of the same
    /// integral.
    Independent,
}

/// Product rule on the shells between consecutive `breaks`: `8·level` Gauss
/// nodes per radial segment and polar direction, `16·level` azimuthal nodes.
fn ball_rule(dim: Dim, breaks: &[f64], level: usize, rotated: bool) -> Result<Vec<(Point, f64)>> {
    let n = 8 * level;
    let n_r = if rotated { n + 3 } else { n };
    let az = periodic_trapezoid(2 * n, if rotated { 0.0 } else { 0.5 })?;
    let polar = gauss_legendre(n, -1.0, 1.0)?;
    // a fixed rotation taking the polar axis off every coordinate axis
    let rot = nalgebra::Rotation3::from_euler_angles(0.7, 0.4, 1.1);
    let mut out = Vec::new();
    for seg in breaks.windows(2) {
        for (r, wr) in gauss_legendre(n_r, seg[0], seg[1])?.iter() {
            for (phi, wp) in az.iter() {
                match dim {
                    Dim::Two => out.push(([r * phi.cos(), r * phi.sin(), 0.0], wr * wp * r)),
                    Dim::Three => {
                        for (c, wc) in polar.iter() {
                            let mut p = spherical(r, phi, c);
                            if rotated {
                                let v = rot * Vector3::from(p);
                                p = [v[0], v[1], v[2]];
                            }
                            out.push((p, wr * wp * wc * r * r));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_invertible(map: &CloakMap) -> Result<()> {
    let mut pts = Vec::new();
    for r in [0.05, 0.3, 0.6, 0.95, 1.05, 1.3, 1.7, 1.98] {
        pts.extend(sphere_samples(map.dim, r, 200));
    }
    if map.kind == MapKind::Cylinder {
        pts.extend(box_samples(0.7, 1.2, 200, true, true));
    }
    for y in pts {
        match map.inverse(y) {
            Ok((_, x)) => {
                let back = map.forward(x)?;
                if dist(back, y) > 1e-10 {
                    return Err(Error::NotInvertible(format!("round trip at {y:?} returns {back:?}")));
                }
            }
            Err(Error::Interface(_)) => {}
            Err(e) => return Err(Error::NotInvertible(format!("invertibility sampling failed: {e}"))),
        }
    }
    Ok(())
}

/// Compares both sides of the change-of-variables identity for the weak
/// form of `Δu + k²u` and its push-forward, over `B₂`.
pub fn transform_identity_audit<U>(
    map: &CloakMap,
    k: Wavenumber,
    u: U,
    tests: &[TestFunction],
    level: usize,
    pairing: GridPairing,
) -> Result<IdentityAudit>
where
    U: Fn(Point) -> Result<FieldSample> + Sync,
{
    if level == 0 {
        return config("quadrature level must be positive");
    }
    check_invertible(map)?;
    let image_breaks = map
        .radial_breaks()
        .ok_or_else(|| Error::NotInvertible("weak-form audit needs a radially split map".into()))?;
    let k2 = k.get() * k.get();
    let mut out = IdentityAudit {
        source_side: Vec::new(),
        image_side: Vec::new(),
        scale: Vec::new(),
        defects: Vec::new(),
        max_defect: 0.0,
    };
    for t in tests {
        let (grad, mass, image) = match t.radial_support() {
            None => (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            Some((lo, hi)) => {
                // integrate over the support only, split where the map or
                // the test function loses smoothness
                let mut yb = vec![lo, hi.min(2.0)];
                yb.extend(image_breaks.iter().copied().filter(|&r| r > lo && r < hi));
                yb.sort_by(f64::total_cmp);
                let xb: Vec<f64> = yb.iter().map(|&r| map.radial_preimage(r)).collect();
                let (g, m) = source_integral(map, &u, t, &xb, level)?;
                let i = image_integral(map, &u, k2, t, &yb, level, pairing)?;
                (g, m, i)
            }
        };
        let source = grad - k2 * mass;
        let scale = grad.norm() + k2 * mass.norm();
        let defect = if scale == 0.0 && source == image {
            0.0
        } else {
            (source - image).norm() / scale
        };
        out.source_side.push(source);
        out.image_side.push(image);
        out.scale.push(scale);
        out.defects.push(defect);
        out.max_defect = out.max_defect.max(defect);
    }
    Ok(out)
}

/// `(∫ ∇u·∇(φ∘F), ∫ u (φ∘F))` over the source shells.
fn source_integral<U>(map: &CloakMap, u: &U, t: &TestFunction, breaks: &[f64], level: usize) -> Result<(C64, C64)>
where
    U: Fn(Point) -> Result<FieldSample> + Sync,
{
    let n = map.dim.n();
    let terms: Vec<(C64, C64)> = ball_rule(map.dim, breaks, level, false)?
        .par_iter()
        .map(|&(x, w)| {
            let piece = map.locate(x)?;
            let y = map.forward_piece(piece, x)?;
            let j = map.jacobian_piece(piece, x)?;
            let us = u(x)?;
            let (phi, g) = t.eval(y);
            // ∇(φ∘F) = DFᵀ ∇φ
            let mut grad = C64::new(0.0, 0.0);
            for a in 0..n {
                let gc: f64 = (0..n).map(|b| j[(b, a)] * g[b]).sum();
                grad += us.grad[a] * gc;
            }
            Ok((grad * w, us.value * phi * w))
        })
        .collect::<Result<_>>()?;
    Ok(terms
        .iter()
        .fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |(g, m), (dg, dm)| (g + dg, m + dm)))
}

/// `∫ F*I ∇v·∇φ − k² F*1 v φ` with `v = u∘F⁻¹` over the image shells.
fn image_integral<U>(
    map: &CloakMap,
    u: &U,
    k2: f64,
    t: &TestFunction,
    breaks: &[f64],
    level: usize,
    pairing: GridPairing,
) -> Result<C64>
where
    U: Fn(Point) -> Result<FieldSample> + Sync,
{
    let n = map.dim.n();
    let terms: Vec<C64> = ball_rule(map.dim, breaks, level, pairing == GridPairing::Independent)?
        .par_iter()
        .map(|&(y, w)| {
            let (piece, x) = map.inverse(y)?;
            let m = pushforward(map, y)?;
            let j = map.jacobian_piece(piece, x)?;
            let jt_inv = j
                .transpose()
                .try_inverse()
                .ok_or_else(|| Error::NotInvertible(format!("singular Jacobian at {x:?}")))?;
            let us = u(x)?;
            let mut gv = [C64::new(0.0, 0.0); 3];
            for (a, slot) in gv.iter_mut().enumerate().take(n) {
                *slot = (0..n).map(|b| us.grad[b] * jt_inv[(a, b)]).sum();
            }
            let (phi, g) = t.eval(y);
            let mut acc = -k2 * m.sigma * us.value * phi;
            for a in 0..n {
                let agv: C64 = (0..n).map(|b| gv[b] * m.a[a][b]).sum();
                acc += agv * g[a];
            }
            Ok(acc * w)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// Tensor grid, endpoints included; an axis with one point sits at `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: Point,
    pub max: Point,
    pub n: [usize; 3],
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> Point {
        let mut rem = idx;
        let mut p = [0.0; 3];
        for a in 0..3 {
            let i = rem % self.n[a];
            rem /= self.n[a];
            p[a] = if self.n[a] == 1 {
                self.min[a]
            } else {
                self.min[a] + (self.max[a] - self.min[a]) * i as f64 / (self.n[a] - 1) as f64
            };
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub y: Point,
    pub material: MaterialPoint,
    pub eig_min: f64,
    pub eig_max: f64,
    pub anisotropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialExport {
    pub map: String,
    pub records: Vec<MaterialRecord>,
    /// Grid points on an interface image.
    pub skipped_interface: usize,
    /// Grid points inside the cloaked region `D`.
    pub skipped_interior: usize,
    /// Grid points without a unique preimage.
    pub skipped_not_invertible: usize,
}

impl MaterialExport {
    pub fn skipped(&self) -> usize {
        self.skipped_interface + self.skipped_interior + self.skipped_not_invertible
    }
}

enum Slot {
    Record(MaterialRecord),
    Interface,
    Interior,
    NotInvertible,
}

/// Materials `(A_c, Σ_c)` at every grid point outside the cloaked region,
/// in grid order.
pub fn export_materials(map: &CloakMap, grid: &GridSpec) -> Result<MaterialExport> {
    if grid.is_empty() {
        return config("empty material grid");
    }
    if map.dim == Dim::Two && (grid.n[2] != 1 || grid.min[2] != 0.0) {
        return config("2D material grids must have a single z = 0 layer");
    }
    let slots: Vec<Slot> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let y = grid.point(i);
            match map.inverse(y) {
                Ok((Piece::Inner, _)) => Ok(Slot::Interior),
                Ok(_) => {
                    let material = pushforward(map, y)?;
                    let ev = material.eigenvalues();
                    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
                    Ok(Slot::Record(MaterialRecord {
                        y,
                        material,
                        eig_min: lo,
                        eig_max: hi,
                        anisotropy: hi / lo,
                    }))
                }
                Err(Error::Interface(_)) => Ok(Slot::Interface),
                Err(Error::NotInvertible(_)) => Ok(Slot::NotInvertible),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = MaterialExport {
        map: map.descriptor(),
        records: Vec::new(),
        skipped_interface: 0,
        skipped_interior: 0,
        skipped_not_invertible: 0,
    };
    for s in slots {
        match s {
            Slot::Record(r) => out.records.push(r),
            Slot::Interface => out.skipped_interface += 1,
            Slot::Interior => out.skipped_interior += 1,
            Slot::NotInvertible => out.skipped_not_invertible += 1,
        }
    }
    Ok(out)
}

/// Whitespace-delimited text, one record per line, after a `#` header.
pub fn write_materials(export: &MaterialExport, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "# {MATERIAL_FORMAT} {}", export.map)?;
    writeln!(w, "y1 y2 y3 A11 A12 A13 A22 A23 A33 sigma eigmin eigmax")?;
    for r in &export.records {
        let a = &r.material.a;
        writeln!(
            w,
            "{:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e}",
            r.y[0],
            r.y[1],
            r.y[2],
            a[0][0],
            a[0][1],
            a[0][2],
            a[1][1],
            a[1][2],
            a[2][2],
            r.material.sigma,
            r.eig_min,
            r.eig_max
        )?;
    }
    Ok(())
}
