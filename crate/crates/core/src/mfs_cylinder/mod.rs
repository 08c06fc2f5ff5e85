//! Method of fundamental solutions for sound-soft obstacles in 3D.
//!
//! The scattered field is a finite superposition of outgoing Green's
//! functions with sources strictly inside the obstacle, so it solves the
//! Helmholtz equation and the radiation condition exactly. Coefficients are
//! fitted to the Dirichlet data at collocation nodes and accuracy is
//! certified on a separate, denser set of boundary points.
//!
//! On the cylinder the data is split into azimuthal Fourier modes and each
//! mode is fitted with ring sources on the generating curve, graded towards
//! the rim edges. On a ball, point sources on a concentric sphere are used.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic_ball::BallGeom;
use crate::error::{config, domain, Error, Result};
use crate::fields::{green3, incident, Dim, FieldSample, PointSourceSet, Wavenumber};
use crate::numkit::{lstsq_tikhonov, CMatrix, LstsqSolution};
use crate::vector::{dist, norm, scale, spherical, Point};

pub mod curve;
mod multipole;
pub mod ring;

use curve::{CurveNode, COLLOC_PER_PANEL};
use multipole::Multipole;
use ring::{ring_modes, ModeValue};

/// Default acceptance gate for residual certificates.
pub const DEFAULT_GATE: f64 = 1e-3;

/// Modes whose data amplitude stays below this fraction of the data maximum
/// are not fitted.
const MODE_TOL: f64 = 1e-10;

/// The thin cylinder `|x′| ≤ ε, |z| ≤ 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderGeom {
    radius: f64,
}

impl CylinderGeom {
    pub const HALF_HEIGHT: f64 = 0.5;

    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return config(format!("cylinder radius must lie in (0, 1), got {radius}"));
        }
        Ok(CylinderGeom { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        2.0 * PI * self.radius * 2.0 * Self::HALF_HEIGHT + 2.0 * PI * self.radius * self.radius
    }

    /// Strict interior.
    pub fn contains_strictly(&self, x: Point) -> bool {
        let tol = 1.0 - 1e-12;
        x[0].hypot(x[1]) < self.radius * tol && x[2].abs() < Self::HALF_HEIGHT * tol
    }
}

/// Obstacle handled by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Obstacle {
    Cylinder(CylinderGeom),
    Ball(BallGeom),
}

impl Obstacle {
    pub fn cylinder(eps: f64) -> Result<Self> {
        Ok(Obstacle::Cylinder(CylinderGeom::new(eps)?))
    }

    pub fn ball(eps: f64) -> Result<Self> {
        Ok(Obstacle::Ball(BallGeom::new(eps, Dim::Three)?))
    }

    pub fn radius(&self) -> f64 {
        match self {
            Obstacle::Cylinder(c) => c.radius(),
            Obstacle::Ball(b) => b.radius(),
        }
    }

    pub fn contains_strictly(&self, x: Point) -> bool {
        match self {
            Obstacle::Cylinder(c) => c.contains_strictly(x),
            Obstacle::Ball(b) => norm(x) < b.radius() * (1.0 - 1e-12),
        }
    }

    fn check(&self) -> Result<()> {
        if let Obstacle::Ball(b) = self {
            if b.dim() != Dim::Three {
                return config("the MFS solver handles 3D balls only");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfsConfig {
    /// Azimuthal samples per collocation ring; modes `|m| < n_theta/2` are fitted.
    pub n_theta: usize,
    /// Minimum number of uniform lateral panels.
    pub n_z: usize,
    /// Minimum number of uniform panels per cap.
    pub n_cap_rings: usize,
    /// Axial monopole stations.
    pub axis_sources: usize,
    pub proxy_scale_radial: f64,
    pub proxy_scale_axial: f64,
    /// Tikhonov parameter relative to the largest column norm.
    pub tikhonov: f64,
    pub validation_oversample: f64,
}

impl Default for MfsConfig {
    fn default() -> Self {
        MfsConfig {
            n_theta: 24,
            n_z: 48,
            n_cap_rings: 6,
            axis_sources: 64,
            proxy_scale_radial: 0.5,
            proxy_scale_axial: 0.9,
            tikhonov: 1e-11,
            validation_oversample: 2.0,
        }
    }
}

impl MfsConfig {
    /// Defaults with `n_z` and `axis_sources` grown like `8⌈ε^{-1/2}⌉`.
    pub fn for_radius(eps: f64) -> Self {
        let d = Self::default();
        let grow = 8 * (1.0 / eps.sqrt()).ceil() as usize;
        MfsConfig {
            n_z: d.n_z.max(grow),
            axis_sources: d.axis_sources.max(grow),
            ..d
        }
    }

    /// Every resolution parameter doubled.
    pub fn doubled(&self) -> Self {
        MfsConfig {
            n_theta: 2 * self.n_theta,
            n_z: 2 * self.n_z,
            n_cap_rings: 2 * self.n_cap_rings,
            axis_sources: 2 * self.axis_sources,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 4 || self.n_theta % 4 != 0 {
            return config("n_theta must be a positive multiple of 4");
        }
        if self.n_z < 2 || self.n_z % 2 != 0 {
            return config("n_z must be even and at least 2");
        }
        if self.n_cap_rings < 1 {
            return config("n_cap_rings must be at least 1");
        }
        for (name, v) in [("proxy_scale_radial", self.proxy_scale_radial), ("proxy_scale_axial", self.proxy_scale_axial)] {
            if !(v > 0.0 && v < 1.0) {
                return config(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.tikhonov >= 0.0 && self.tikhonov.is_finite()) {
            return config("tikhonov must be finite and non-negative");
        }
        if !(self.validation_oversample >= 2.0 && self.validation_oversample <= 16.0) {
            return config("validation_oversample must lie in [2, 16]");
        }
        Ok(())
    }

    fn oversample(&self) -> usize {
        self.validation_oversample.ceil() as usize
    }
}

/// Boundary sample: position, outward unit normal, surface weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub point: Point,
    pub normal: Point,
    pub weight: f64,
}

fn revolve(nodes: &[CurveNode], n_theta: usize, shift: f64) -> Vec<BoundaryNode> {
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut out = Vec::with_capacity(nodes.len() * n_theta);
    for n in nodes {
        for q in 0..n_theta {
            let (s, c) = ((q as f64 + shift) * dtheta).sin_cos();
            out.push(BoundaryNode {
                point: [n.rho * c, n.rho * s, n.z],
                normal: [n.normal.0 * c, n.normal.0 * s, n.normal.1],
                weight: n.ds * n.rho * dtheta,
            });
        }
    }
    out
}

fn ball_counts(cfg: &MfsConfig) -> (usize, usize) {
    let n_src = cfg.n_theta * cfg.n_theta / 4;
    (n_src, 2 * n_src)
}

fn ball_nodes(geom: &BallGeom, n: usize, offset: f64) -> Vec<BoundaryNode> {
    let w = 4.0 * PI * geom.radius() * geom.radius() / n as f64;
    geom.boundary_points(n, offset)
        .into_iter()
        .map(|p| BoundaryNode {
            point: p,
            normal: scale(p, 1.0 / geom.radius()),
            weight: w,
        })
        .collect()
}

fn curve_collocation(geom: &CylinderGeom, cfg: &MfsConfig) -> Vec<CurveNode> {
    curve::nodes(&curve::panels(geom, cfg), COLLOC_PER_PANEL)
}

fn curve_validation(geom: &CylinderGeom, cfg: &MfsConfig) -> Vec<CurveNode> {
    curve::nodes(&curve::panels(geom, cfg), COLLOC_PER_PANEL * cfg.oversample())
}

/// Collocation nodes on the obstacle boundary.
pub fn boundary_nodes(obstacle: &Obstacle, cfg: &MfsConfig) -> Result<Vec<BoundaryNode>> {
    cfg.validate()?;
    obstacle.check()?;
    Ok(match obstacle {
        Obstacle::Cylinder(c) => revolve(&curve_collocation(c, cfg), cfg.n_theta, 0.0),
        Obstacle::Ball(b) => ball_nodes(b, ball_counts(cfg).1, 0.0),
    })
}

/// Validation nodes: every collocation cell refined `validation_oversample`
/// times and the azimuthal pattern shifted by half a spacing, so no
/// validation node coincides with a collocation node.
pub fn validation_nodes(obstacle: &Obstacle, cfg: &MfsConfig) -> Result<Vec<BoundaryNode>> {
    cfg.validate()?;
    obstacle.check()?;
    let sub = cfg.oversample();
    Ok(match obstacle {
        Obstacle::Cylinder(c) => revolve(&curve_validation(c, cfg), cfg.n_theta * sub, 0.5),
        Obstacle::Ball(b) => ball_nodes(b, sub * ball_counts(cfg).1, 0.5),
    })
}

/// Uniformly distributed random boundary points (by area), seeded.
pub fn random_boundary_points(obstacle: &Obstacle, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| match obstacle {
            Obstacle::Ball(b) => spherical(b.radius(), rng.gen::<f64>() * 2.0 * PI, rng.gen::<f64>() * 2.0 - 1.0),
            Obstacle::Cylinder(c) => {
                let eps = c.radius();
                let lateral = 2.0 * PI * eps;
                let u = rng.gen::<f64>() * c.area();
                let th = rng.gen::<f64>() * 2.0 * PI;
                if u < lateral {
                    [eps * th.cos(), eps * th.sin(), rng.gen::<f64>() - 0.5]
                } else {
                    let rho = eps * rng.gen::<f64>().sqrt();
                    let side = if u < lateral + PI * eps * eps { -0.5 } else { 0.5 };
                    [rho * th.cos(), rho * th.sin(), side]
                }
            }
        })
        .collect()
}

fn cylinder_rings(geom: &CylinderGeom, cfg: &MfsConfig) -> Vec<(f64, f64)> {
    let panels = curve::panels(geom, cfg);
    let mut rings = curve::axis_stations(cfg);
    rings.extend(curve::ring_sources(geom, cfg, &panels));
    rings
}

/// Interior source points. Ring sources of the cylinder are reported by
/// `n_theta / 2` sample points each; axis stations by themselves.
pub fn source_points(obstacle: &Obstacle, cfg: &MfsConfig) -> Result<Vec<Point>> {
    cfg.validate()?;
    obstacle.check()?;
    let pts = match obstacle {
        Obstacle::Ball(b) => BallGeom::new(cfg.proxy_scale_radial * b.radius(), Dim::Three)?
            .boundary_points(ball_counts(cfg).0, 0.25),
        Obstacle::Cylinder(c) => {
            let n = cfg.n_theta / 2;
            let mut pts = Vec::new();
            for (rho, z) in cylinder_rings(c, cfg) {
                if rho == 0.0 {
                    pts.push([0.0, 0.0, z]);
                    continue;
                }
                for q in 0..n {
                    let (s, co) = ((q as f64 + 0.5) * 2.0 * PI / n as f64).sin_cos();
                    pts.push([rho * co, rho * s, z]);
                }
            }
            pts
        }
    };
    for p in &pts {
        if !obstacle.contains_strictly(*p) {
            return Err(Error::Internal(format!("source point {p:?} is not interior")));
        }
    }
    Ok(pts)
}

#[derive(Debug, Clone)]
enum Representation {
    Points {
        sources: Vec<Point>,
        coeffs: Vec<C64>,
    },
    Rings {
        rings: Vec<(f64, f64)>,
        mmax: usize,
        /// `coeffs[m + mmax][j]`
        coeffs: Vec<Vec<C64>>,
        far: Option<Multipole>,
    },
}

/// Fitted MFS representation with its residual certificate.
#[derive(Debug, Clone)]
pub struct MfsModel {
    obstacle: Obstacle,
    k: f64,
    incident: Option<PointSourceSet>,
    repr: Representation,
    certificate: f64,
    condition_estimate: f64,
    lambda: f64,
    escalated: bool,
    n_collocation: usize,
    n_unknowns: usize,
}

impl MfsModel {
    pub fn obstacle(&self) -> &Obstacle {
        &self.obstacle
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `max |v − g|` over validation points relative to `max |g|`, where
    /// `g` is the Dirichlet data (`−u_inc` for obstacle scattering).
    pub fn certificate(&self) -> f64 {
        self.certificate
    }

    /// Largest pivot ratio over the fitted systems.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Largest absolute Tikhonov parameter used.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Whether regularization was raised automatically.
    pub fn escalated(&self) -> bool {
        self.escalated
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    pub fn n_collocation(&self) -> usize {
        self.n_collocation
    }

    /// Largest coefficient magnitude.
    pub fn max_coefficient(&self) -> f64 {
        match &self.repr {
            Representation::Points { coeffs, .. } => coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max),
            Representation::Rings { coeffs, .. } => coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max),
        }
    }

    pub fn passes(&self, gate: f64) -> bool {
        self.certificate <= gate
    }

    /// Converts a failing certificate into an error.
    pub fn require(self, gate: f64) -> Result<Self> {
        if self.passes(gate) {
            Ok(self)
        } else {
            Err(Error::Certificate {
                certificate: self.certificate,
                gate,
            })
        }
    }

    fn check_point(&self, x: Point) -> Result<()> {
        if self.obstacle.contains_strictly(x) {
            return domain(format!("point {x:?} is inside the obstacle"));
        }
        Ok(())
    }

    fn scattered_unchecked(&self, x: Point) -> Result<FieldSample> {
        match &self.repr {
            Representation::Points { sources, coeffs } => {
                let mut acc = FieldSample::zero();
                for (y, c) in sources.iter().zip(coeffs) {
                    acc = acc + green3(self.k, x, *y) * *c;
                }
                Ok(acc)
            }
            Representation::Rings { rings, mmax, coeffs, far } => {
                if let Some(mp) = far {
                    if norm(x) >= mp.r_min() {
                        return mp.eval(x);
                    }
                }
                ring_field(self.k, rings, *mmax, coeffs, x)
            }
        }
    }
}

/// Direct evaluation of a ring-mode superposition.
fn ring_field(k: f64, rings: &[(f64, f64)], mmax: usize, coeffs: &[Vec<C64>], x: Point) -> Result<FieldSample> {
    let rho = x[0].hypot(x[1]);
    let (sp, cp) = if rho > 0.0 { (x[1] / rho, x[0] / rho) } else { (0.0, 1.0) };
    let mut modes = vec![ModeValue::default(); mmax + 1];
    // per mode: value, d_rho, d_z, (im/ρ)·value
    let width = 2 * mmax + 1;
    let mut acc = vec![[C64::new(0.0, 0.0); 4]; width];
    for (j, &(rs, zs)) in rings.iter().enumerate() {
        if (0..width).all(|mi| coeffs[mi][j] == C64::new(0.0, 0.0)) {
            continue;
        }
        let used = if rs == 0.0 { 1 } else { mmax + 1 };
        ring_modes(k, rho, x[2], rs, zs, &mut modes[..used])?;
        for (mi, slot) in acc.iter_mut().enumerate() {
            let m = (mi as i64 - mmax as i64).unsigned_abs() as usize;
            let c = coeffs[mi][j];
            if m >= used || c == C64::new(0.0, 0.0) {
                continue;
            }
            let o = modes[m];
            slot[0] += c * o.value;
            slot[1] += c * o.d_rho;
            slot[2] += c * o.d_z;
        }
    }
    let phi = sp.atan2(cp);
    let mut v = C64::new(0.0, 0.0);
    let mut g = [C64::new(0.0, 0.0); 3];
    for (mi, slot) in acc.iter().enumerate() {
        let mm = mi as i64 - mmax as i64;
        let e = C64::new((mm as f64 * phi).cos(), (mm as f64 * phi).sin());
        let im = C64::new(0.0, mm as f64);
        let (val, dr, dz) = (slot[0], slot[1], slot[2]);
        v += e * val;
        if rho > 0.0 {
            let dt = im * val / rho;
            g[0] += e * (dr * cp - dt * sp);
            g[1] += e * (dr * sp + dt * cp);
        } else if mm.abs() == 1 {
            // on the axis e^{±iθ}K₁ has gradient ∂ρK₁ (1, ±i, 0)
            g[0] += dr;
            g[1] += dr * C64::new(0.0, mm as f64);
        } else if mm == 0 {
            g[0] += dr;
        }
        g[2] += e * dz;
    }
    Ok(FieldSample::new(v, g))
}

/// Scattered (fitted) part at `x`.
pub fn eval_scattered(model: &MfsModel, x: Point) -> Result<FieldSample> {
    model.check_point(x)?;
    model.scattered_unchecked(x)
}

/// Incident plus scattered field (scattered only when no incident field is
/// attached).
pub fn eval_total(model: &MfsModel, x: Point) -> Result<FieldSample> {
    model.check_point(x)?;
    let v = model.scattered_unchecked(x)?;
    match &model.incident {
        Some(s) => Ok(incident(s, Wavenumber::new(model.k)?, Dim::Three, x)? + v),
        None => Ok(v),
    }
}

fn fit(a: &CMatrix, b: &[C64], cfg: &MfsConfig) -> Result<(LstsqSolution, bool)> {
    let lambda = cfg.tikhonov * a.max_column_norm();
    let sol = lstsq_tikhonov(a, b, lambda)?;
    if lambda == 0.0 && sol.condition_estimate > 1e16 {
        return Ok((lstsq_tikhonov(a, b, 1e-14 * a.max_column_norm())?, true));
    }
    Ok((sol, false))
}

/// Fits `v` with `v = g` on the boundary. `k = 0` gives the Laplace problem.
pub fn solve_dirichlet<G>(obstacle: Obstacle, k: Wavenumber, data: G, cfg: &MfsConfig) -> Result<MfsModel>
where
    G: Fn(Point) -> Result<C64> + Sync,
{
    cfg.validate()?;
    obstacle.check()?;
    if k.get() * obstacle.radius() > 10.0 {
        return config("k·ε must not exceed 10");
    }
    match obstacle {
        Obstacle::Ball(_) => solve_points(obstacle, k.get(), &data, cfg),
        Obstacle::Cylinder(c) => solve_rings(obstacle, &c, k.get(), &data, cfg),
    }
}

fn solve_points<G>(obstacle: Obstacle, k: f64, data: &G, cfg: &MfsConfig) -> Result<MfsModel>
where
    G: Fn(Point) -> Result<C64> + Sync,
{
    let colloc = boundary_nodes(&obstacle, cfg)?;
    let valid = validation_nodes(&obstacle, cfg)?;
    let sources = source_points(&obstacle, cfg)?;
    check_counts(colloc.len(), sources.len())?;
    check_disjoint(
        &colloc.iter().map(|n| n.point).collect::<Vec<_>>(),
        &valid.iter().map(|n| n.point).collect::<Vec<_>>(),
        obstacle.radius(),
    )?;
    let rhs: Vec<C64> = colloc.par_iter().map(|n| data(n.point)).collect::<Result<_>>()?;
    let g_valid: Vec<C64> = valid.par_iter().map(|n| data(n.point)).collect::<Result<_>>()?;
    let g_max = max_norm(rhs.iter().chain(&g_valid));
    let mut model = MfsModel {
        obstacle,
        k,
        incident: None,
        repr: Representation::Points {
            sources: sources.clone(),
            coeffs: vec![C64::new(0.0, 0.0); sources.len()],
        },
        certificate: 0.0,
        condition_estimate: 1.0,
        lambda: 0.0,
        escalated: false,
        n_collocation: colloc.len(),
        n_unknowns: sources.len(),
    };
    if g_max == 0.0 {
        return Ok(model);
    }
    let a = CMatrix::from_columns(colloc.len(), sources.len(), |j| {
        colloc.iter().map(|n| green3(k, n.point, sources[j]).value).collect()
    })?;
    let (sol, escalated) = fit(&a, &rhs, cfg)?;
    model.repr = Representation::Points { sources, coeffs: sol.x };
    model.condition_estimate = sol.condition_estimate;
    model.lambda = sol.lambda;
    model.escalated = escalated;
    let misfit: Vec<f64> = valid
        .par_iter()
        .zip(&g_valid)
        .map(|(n, g)| model.scattered_unchecked(n.point).map(|v| (v.value - g).norm()))
        .collect::<Result<_>>()?;
    model.certificate = max_f(&misfit) / g_max;
    Ok(model)
}

/// Samples of `data` on the revolved ring of a curve node.
fn ring_samples<G>(node: &CurveNode, n_theta: usize, shift: f64, data: &G) -> Result<Vec<C64>>
where
    G: Fn(Point) -> Result<C64> + Sync,
{
    (0..n_theta)
        .map(|q| {
            let (s, c) = ((q as f64 + shift) * 2.0 * PI / n_theta as f64).sin_cos();
            data([node.rho * c, node.rho * s, node.z])
        })
        .collect()
}

/// Kernel values `K_m(node, ring_j)` for `m ≤ mmax`, row-major by node.
fn kernel_table(k: f64, nodes: &[CurveNode], rings: &[(f64, f64)], mmax: usize) -> Result<Vec<Vec<Vec<C64>>>> {
    nodes
        .par_iter()
        .map(|n| {
            let mut buf = vec![ModeValue::default(); mmax + 1];
            rings
                .iter()
                .map(|&(rs, zs)| {
                    let used = if rs == 0.0 { 1 } else { mmax + 1 };
                    ring_modes(k, n.rho, n.z, rs, zs, &mut buf[..used])?;
                    Ok((0..=mmax).map(|m| if m < used { buf[m].value } else { C64::new(0.0, 0.0) }).collect())
                })
                .collect::<Result<Vec<Vec<C64>>>>()
        })
        .collect()
}

fn solve_rings<G>(obstacle: Obstacle, geom: &CylinderGeom, k: f64, data: &G, cfg: &MfsConfig) -> Result<MfsModel>
where
    G: Fn(Point) -> Result<C64> + Sync,
{
    let colloc = curve_collocation(geom, cfg);
    let valid = curve_validation(geom, cfg);
    let rings = cylinder_rings(geom, cfg);
    for &(r, z) in &rings {
        if !geom.contains_strictly([r, 0.0, z]) {
            return Err(Error::Internal(format!("ring source ({r}, {z}) is not interior")));
        }
    }
    check_counts(colloc.len(), rings.len())?;
    let n_theta = cfg.n_theta;
    let n_theta_v = n_theta * cfg.oversample();
    let mmax = n_theta / 2 - 1;
    let width = 2 * mmax + 1;

    let samples: Vec<Vec<C64>> = colloc
        .par_iter()
        .map(|n| ring_samples(n, n_theta, 0.0, data))
        .collect::<Result<_>>()?;
    let valid_samples: Vec<Vec<C64>> = valid
        .par_iter()
        .map(|n| ring_samples(n, n_theta_v, 0.5, data))
        .collect::<Result<_>>()?;
    let g_max = max_norm(samples.iter().chain(&valid_samples).flatten());

    // data modes g_m at every collocation node
    let modes: Vec<Vec<C64>> = samples
        .iter()
        .map(|s| {
            (0..width)
                .map(|mi| {
                    let m = mi as f64 - mmax as f64;
                    s.iter()
                        .enumerate()
                        .map(|(q, v)| {
                            let a = -m * 2.0 * PI * q as f64 / n_theta as f64;
                            v * C64::new(a.cos(), a.sin())
                        })
                        .sum::<C64>()
                        / n_theta as f64
                })
                .collect()
        })
        .collect();

    let mut model = MfsModel {
        obstacle,
        k,
        incident: None,
        repr: Representation::Rings {
            rings: rings.clone(),
            mmax,
            coeffs: vec![vec![C64::new(0.0, 0.0); rings.len()]; width],
            far: None,
        },
        certificate: 0.0,
        condition_estimate: 1.0,
        lambda: 0.0,
        escalated: false,
        n_collocation: colloc.len() * n_theta,
        n_unknowns: 0,
    };
    if g_max == 0.0 {
        return Ok(model);
    }

    let active: Vec<bool> = (0..width)
        .map(|mi| modes.iter().any(|row| row[mi].norm() > MODE_TOL * g_max))
        .collect();
    let m_used = (0..width)
        .filter(|&mi| active[mi])
        .map(|mi| (mi as i64 - mmax as i64).unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let table = kernel_table(k, &colloc, &rings, m_used)?;

    let mut coeffs = vec![vec![C64::new(0.0, 0.0); rings.len()]; width];
    let mut cond: f64 = 1.0;
    let mut lambda: f64 = 0.0;
    let mut escalated = false;
    let mut unknowns = 0;
    for mi in 0..width {
        if !active[mi] {
            continue;
        }
        let m = (mi as i64 - mmax as i64).unsigned_abs() as usize;
        let cols: Vec<usize> = (0..rings.len()).filter(|&j| m == 0 || rings[j].0 > 0.0).collect();
        let a = CMatrix::from_columns(colloc.len(), cols.len(), |c| table.iter().map(|row| row[cols[c]][m]).collect())?;
        let rhs: Vec<C64> = modes.iter().map(|row| row[mi]).collect();
        let (sol, esc) = fit(&a, &rhs, cfg)?;
        for (c, &j) in cols.iter().enumerate() {
            coeffs[mi][j] = sol.x[c];
        }
        cond = cond.max(sol.condition_estimate);
        lambda = lambda.max(sol.lambda);
        escalated |= esc;
        unknowns += cols.len();
    }

    // certificate on the validation rings
    let vtable = kernel_table(k, &valid, &rings, m_used)?;
    let misfit: Vec<f64> = vtable
        .par_iter()
        .zip(&valid_samples)
        .map(|(row, g)| {
            let per_mode: Vec<C64> = (0..width)
                .map(|mi| {
                    let m = (mi as i64 - mmax as i64).unsigned_abs() as usize;
                    if !active[mi] {
                        return C64::new(0.0, 0.0);
                    }
                    row.iter().zip(&coeffs[mi]).map(|(kj, c)| kj[m] * c).sum()
                })
                .collect();
            g.iter()
                .enumerate()
                .map(|(q, gq)| {
                    let th = (q as f64 + 0.5) * 2.0 * PI / n_theta_v as f64;
                    let v: C64 = per_mode
                        .iter()
                        .enumerate()
                        .map(|(mi, pm)| {
                            let a = (mi as f64 - mmax as f64) * th;
                            pm * C64::new(a.cos(), a.sin())
                        })
                        .sum();
                    (v - gq).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();

    let far = if k > 0.0 {
        Some(Multipole::from_rings(k, &rings, mmax, &coeffs)?)
    } else {
        None
    };
    model.repr = Representation::Rings {
        rings,
        mmax,
        coeffs,
        far,
    };
    model.certificate = max_f(&misfit) / g_max;
    model.condition_estimate = cond;
    model.lambda = lambda;
    model.escalated = escalated;
    model.n_unknowns = unknowns;
    Ok(model)
}

fn check_counts(n_colloc: usize, n_src: usize) -> Result<()> {
    if (n_colloc as f64) < 1.5 * n_src as f64 {
        return config(format!("{n_colloc} collocation nodes for {n_src} sources; need at least 1.5 per source"));
    }
    Ok(())
}

fn max_norm<'a>(it: impl Iterator<Item = &'a C64>) -> f64 {
    it.map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_f(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Sound-soft scattering of the field radiated by `sources`. The returned
/// model may carry a certificate above the gate; see [`MfsModel::require`].
pub fn solve_obstacle(obstacle: Obstacle, k: Wavenumber, sources: &PointSourceSet, cfg: &MfsConfig) -> Result<MfsModel> {
    let mut model = solve_dirichlet(obstacle, k, |x| incident(sources, k, Dim::Three, x).map(|u| -u.value), cfg)?;
    model.incident = Some(sources.clone());
    Ok(model)
}

fn check_disjoint(colloc: &[Point], valid: &[Point], eps: f64) -> Result<()> {
    let tol = 1e-9 * eps;
    let clash = valid.par_iter().any(|v| colloc.iter().any(|c| dist(*c, *v) < tol));
    if clash {
        return Err(Error::Internal("validation node coincides with a collocation node".into()));
    }
    Ok(())
}

/// Normal derivative of the fitted field on the ring `|x′| = ε, z = a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingFlux {
    pub height: f64,
    pub samples: Vec<C64>,
    /// Trapezoidal mean per unit arclength.
    pub mean: C64,
    /// Mean times ring circumference.
    pub total: C64,
}

/// Samples `∂v/∂η` of the scattered part on a lateral ring.
pub fn ring_flux(model: &MfsModel, a: f64, n_theta: usize) -> Result<RingFlux> {
    let eps = match model.obstacle {
        Obstacle::Cylinder(c) => c.radius(),
        Obstacle::Ball(_) => return config("ring flux needs a cylinder model"),
    };
    if !(a.abs() < CylinderGeom::HALF_HEIGHT) {
        return domain(format!("ring height {a} is not inside (-1/2, 1/2)"));
    }
    if n_theta == 0 {
        return config("n_theta must be positive");
    }
    let samples: Vec<C64> = (0..n_theta)
        .map(|i| {
            let (s, c) = (2.0 * PI * i as f64 / n_theta as f64).sin_cos();
            model
                .scattered_unchecked([eps * c, eps * s, a])
                .map(|v| v.directional([c, s, 0.0]))
        })
        .collect::<Result<_>>()?;
    let mean = samples.iter().sum::<C64>() / n_theta as f64;
    Ok(RingFlux {
        height: a,
        samples,
        mean,
        total: mean * (2.0 * PI * eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl(eps: f64) -> Obstacle {
        Obstacle::cylinder(eps).unwrap()
    }

    #[test]
    fn node_weights_sum_to_area() {
        for eps in [0.2, 0.1, 0.025] {
            let area = 2.0 * PI * eps + 2.0 * PI * eps * eps;
            let cfg = MfsConfig::for_radius(eps);
            for nodes in [boundary_nodes(&cyl(eps), &cfg).unwrap(), validation_nodes(&cyl(eps), &cfg).unwrap()] {
                let total: f64 = nodes.iter().map(|n| n.weight).sum();
                assert!((total - area).abs() <= 1e-10 * area, "{total} {area}");
            }
        }
        let nodes = boundary_nodes(&cyl(0.1), &MfsConfig::default()).unwrap();
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        assert!((total - 0.6912).abs() < 1e-4);
    }

    #[test]
    fn lateral_normals_and_mirror_symmetry() {
        let eps = 0.1;
        let nodes = boundary_nodes(&cyl(eps), &MfsConfig::default()).unwrap();
        for n in &nodes {
            if n.normal[2] == 0.0 {
                assert!((crate::vector::dot(n.point, n.normal) - eps).abs() < 1e-15);
            }
        }
        let has = |set: &[Point], p: Point| set.iter().any(|q| dist(*q, p) < 1e-13);
        let pts: Vec<Point> = nodes.iter().map(|n| n.point).collect();
        assert!(pts.iter().all(|p| has(&pts, [-p[0], -p[1], p[2]])));
        let src = source_points(&cyl(eps), &MfsConfig::default()).unwrap();
        assert!(src.iter().all(|p| has(&src, [-p[0], -p[1], p[2]])));
    }

    #[test]
    fn sources_are_interior() {
        let cfg = MfsConfig::default();
        for eps in [0.05, 0.2] {
            for p in source_points(&cyl(eps), &cfg).unwrap() {
                assert!(p[0].hypot(p[1]) < eps && p[2].abs() < 0.5);
            }
        }
        let src = source_points(&cyl(0.05), &cfg).unwrap();
        let rmax = src.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        assert!(rmax < 0.05);
    }

    #[test]
    fn validation_is_disjoint_from_collocation() {
        for ob in [cyl(0.1), Obstacle::ball(0.2).unwrap()] {
            let cfg = MfsConfig::default();
            let c: Vec<Point> = boundary_nodes(&ob, &cfg).unwrap().iter().map(|n| n.point).collect();
            let v: Vec<Point> = validation_nodes(&ob, &cfg).unwrap().iter().map(|n| n.point).collect();
            check_disjoint(&c, &v, ob.radius()).unwrap();
        }
    }

    #[test]
    fn config_validation() {
        let bad = [
            MfsConfig { n_theta: 6, ..Default::default() },
            MfsConfig { n_z: 7, ..Default::default() },
            MfsConfig { proxy_scale_radial: 1.0, ..Default::default() },
            MfsConfig { validation_oversample: 1.5, ..Default::default() },
            MfsConfig { tikhonov: -1.0, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(boundary_nodes(&cyl(0.1), &c), Err(Error::Config(_))));
        }
        let too_many = MfsConfig { axis_sources: 4000, ..Default::default() };
        let s = PointSourceSet::default_experiment();
        assert!(solve_obstacle(cyl(0.1), Wavenumber::new(2.0).unwrap(), &s, &too_many).is_err());
    }

    #[test]
    fn zero_data_gives_zero_model() {
        for ob in [cyl(0.1), Obstacle::ball(0.2).unwrap()] {
            let m = solve_dirichlet(ob, Wavenumber::new(2.0).unwrap(), |_| Ok(C64::new(0.0, 0.0)), &MfsConfig::default())
                .unwrap();
            assert_eq!(m.certificate(), 0.0);
            assert_eq!(m.max_coefficient(), 0.0);
        }
    }

    #[test]
    fn ring_flux_domain() {
        let m = solve_dirichlet(cyl(0.1), Wavenumber::new(2.0).unwrap(), |_| Ok(C64::new(0.0, 0.0)), &MfsConfig::default())
            .unwrap();
        assert!(matches!(ring_flux(&m, 0.5, 8), Err(Error::Domain(_))));
        assert!(ring_flux(&m, 0.2, 8).is_ok());
        assert!(matches!(eval_total(&m, [0.0, 0.0, 0.1]), Err(Error::Domain(_))));
    }
}
