//! Exact modal solutions for sound-soft scattering by a ball (3D) or disk (2D).
//!
//! Each point source is expanded with the addition theorem in a frame whose
//! polar axis (3D) or reference azimuth (2D) passes through the source; the
//! scattered field of a source set is the superposition of these expansions.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::fields::{incident, Dim, FieldSample, PointSourceSet, Wavenumber};
use crate::numkit::{legendre_table, CylTable, SphTable, DEFAULT_MAX_ORDER};
use crate::vector::{dot, norm, scale, spherical, Point};

/// Relative size below which trailing modal coefficients count as converged.
pub const TRUNCATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGeom {
    radius: f64,
    dim: Dim,
}

impl BallGeom {
    pub fn new(radius: f64, dim: Dim) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return config(format!("ball radius must lie in (0, 1), got {radius}"));
        }
        Ok(BallGeom { radius, dim })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn contains(&self, x: Point) -> bool {
        self.planar_norm(x) <= self.radius
    }

    fn planar_norm(&self, x: Point) -> f64 {
        match self.dim {
            Dim::Three => norm(x),
            Dim::Two => x[0].hypot(x[1]),
        }
    }

    /// `n` boundary points: a Fibonacci lattice on the sphere, or equispaced
    /// on the circle. `offset` in `[0, 1)` shifts the pattern.
    pub fn boundary_points(&self, n: usize, offset: f64) -> Vec<Point> {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5 + offset) / n as f64;
                match self.dim {
                    Dim::Three => spherical(self.radius, golden * (i as f64 + offset * 7.0), 1.0 - 2.0 * s.min(1.0)),
                    Dim::Two => {
                        let phi = 2.0 * PI * s;
                        [self.radius * phi.cos(), self.radius * phi.sin(), 0.0]
                    }
                }
            })
            .collect()
    }
}

/// Expansion of one source's scattered field in its own frame.
#[derive(Debug, Clone)]
struct SourceTerm {
    /// Unit vector towards the source; `azimuth` is used in 2D.
    axis: Point,
    azimuth: f64,
    coeffs: Vec<C64>,
}

/// Truncated modal expansion of the scattered field exterior to a ball.
#[derive(Debug, Clone)]
pub struct SeriesModel {
    geom: BallGeom,
    k: Wavenumber,
    n: usize,
    sources: PointSourceSet,
    terms: Vec<SourceTerm>,
}

impl SeriesModel {
    pub fn geom(&self) -> BallGeom {
        self.geom
    }

    pub fn k(&self) -> Wavenumber {
        self.k
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn sources(&self) -> &PointSourceSet {
        &self.sources
    }

    /// Coefficients of source `i`, modes `0..=N`.
    pub fn coefficients(&self, i: usize) -> &[C64] {
        &self.terms[i].coeffs
    }

    /// `max |u_inc + u_sc|` over boundary sample points, relative to
    /// `max |u_inc|` there.
    pub fn boundary_residual(&self, n_points: usize) -> Result<f64> {
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        let nudge = 1.0 + 1e-15;
        for p in self.geom.boundary_points(n_points, 0.37) {
            let p = scale(p, nudge);
            let u = incident(&self.sources, self.k, self.geom.dim, p)?.value;
            let v = eval_scattered(self, p)?.value;
            num = num.max((u + v).norm());
            den = den.max(u.norm());
        }
        Ok(if den == 0.0 { 0.0 } else { num / den })
    }
}

/// Raw modal coefficients for one source, modes `0..=nmax`. Non-finite
/// entries (underflowed ratios at high order) are set to zero.
fn modal_coefficients(geom: BallGeom, k: f64, s_radius: f64, amp: C64, nmax: usize) -> Result<Vec<C64>> {
    let ke = k * geom.radius;
    let ks = k * s_radius;
    let mut out = Vec::with_capacity(nmax + 1);
    match geom.dim {
        Dim::Three => {
            let te = SphTable::new(nmax, ke)?;
            let ts = SphTable::new(nmax, ks)?;
            let pref = C64::new(0.0, k / (4.0 * PI));
            for n in 0..=nmax {
                let ratio = te.j[n] / te.h1(n);
                let c = -amp * pref * (2 * n + 1) as f64 * ts.h1(n) * ratio;
                out.push(finite_or_zero(c));
            }
        }
        Dim::Two => {
            let te = CylTable::new(nmax, ke)?;
            let ts = CylTable::new(nmax, ks)?;
            let pref = C64::new(0.0, 0.25);
            for m in 0..=nmax {
                let ratio = te.j[m] / te.h1(m);
                let mult = if m == 0 { 1.0 } else { 2.0 };
                let c = -amp * pref * mult * ts.h1(m) * ratio;
                out.push(finite_or_zero(c));
            }
        }
    }
    Ok(out)
}

fn finite_or_zero(c: C64) -> C64 {
    if c.re.is_finite() && c.im.is_finite() {
        c
    } else {
        C64::new(0.0, 0.0)
    }
}

fn tail_converged(c: &[C64], n: usize) -> bool {
    let max = c[..=n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    n >= 1 && c[n].norm() <= TRUNCATION_TOL * max && c[n - 1].norm() <= TRUNCATION_TOL * max
}

fn check_sources(geom: BallGeom, sources: &PointSourceSet) -> Result<()> {
    for s in sources.sources() {
        if geom.planar_norm(s.location) <= geom.radius {
            return domain(format!("source {:?} lies inside the ball", s.location));
        }
        if geom.dim == Dim::Two && s.location[2] != 0.0 {
            return domain("2D sources must lie in the plane z = 0");
        }
    }
    Ok(())
}

fn build(geom: BallGeom, k: Wavenumber, sources: &PointSourceSet, n: Option<usize>) -> Result<SeriesModel> {
    check_sources(geom, sources)?;
    let amps = sources.equivalent_amplitudes(k, geom.dim)?;
    let mut terms = Vec::new();
    let n_min = (k.get() * sources.max_radius()).ceil() as usize + 20;
    let mut n_used = n.unwrap_or(n_min);
    if n_used > DEFAULT_MAX_ORDER {
        return config(format!("truncation {n_used} exceeds the maximum order {DEFAULT_MAX_ORDER}"));
    }
    let mut raw = Vec::new();
    for (s, &a) in sources.sources().iter().zip(&amps) {
        let r = norm(s.location);
        raw.push((s.location, r, modal_coefficients(geom, k.get(), r, a, DEFAULT_MAX_ORDER)?));
    }
    match n {
        Some(n) => {
            if n == 0 {
                return config("truncation order must be at least 1");
            }
            for (_, _, c) in &raw {
                if !tail_converged(c, n) {
                    return Err(Error::Accuracy(format!("truncation N = {n} does not meet the tail criterion")));
                }
            }
        }
        None => {
            while !raw.iter().all(|(_, _, c)| tail_converged(c, n_used)) {
                n_used += 1;
                if n_used > DEFAULT_MAX_ORDER {
                    return config("adaptive truncation exceeded the maximum special-function order");
                }
            }
        }
    }
    for (loc, r, mut c) in raw {
        c.truncate(n_used + 1);
        terms.push(SourceTerm {
            axis: scale(loc, 1.0 / r),
            azimuth: loc[1].atan2(loc[0]),
            coeffs: c,
        });
    }
    Ok(SeriesModel {
        geom,
        k,
        n: n_used,
        sources: sources.clone(),
        terms,
    })
}

/// Series solution truncated at mode `n`. Fails if the tail criterion is not
/// met at `n`.
pub fn solve_ball(geom: BallGeom, k: Wavenumber, sources: &PointSourceSet, n: usize) -> Result<SeriesModel> {
    build(geom, k, sources, Some(n))
}

/// Series solution with adaptive truncation.
pub fn solve_ball_auto(geom: BallGeom, k: Wavenumber, sources: &PointSourceSet) -> Result<SeriesModel> {
    build(geom, k, sources, None)
}

/// Scattered field and gradient at `x`, outside the ball.
pub fn eval_scattered(model: &SeriesModel, x: Point) -> Result<FieldSample> {
    let geom = model.geom;
    if geom.contains(x) {
        return domain(format!("point {x:?} is inside the ball"));
    }
    let k = model.k.get();
    let n = model.n;
    let mut total = FieldSample::zero();
    match geom.dim {
        Dim::Three => {
            let r = norm(x);
            let xh = scale(x, 1.0 / r);
            let tab = SphTable::new(n, k * r)?;
            for term in &model.terms {
                let t = dot(xh, term.axis).clamp(-1.0, 1.0);
                let (p, dp) = legendre_table(n, t);
                let mut radial = C64::new(0.0, 0.0);
                let mut value = C64::new(0.0, 0.0);
                let mut angular = C64::new(0.0, 0.0);
                for (m, c) in term.coeffs.iter().enumerate() {
                    let h = tab.h1(m);
                    value += c * h * p[m];
                    radial += c * k * tab.dh1(m) * p[m];
                    angular += c * h * dp[m];
                }
                let mut grad = [C64::new(0.0, 0.0); 3];
                for i in 0..3 {
                    grad[i] = radial * xh[i] + angular * (term.axis[i] - t * xh[i]) / r;
                }
                total = total + FieldSample::new(value, grad);
            }
        }
        Dim::Two => {
            let r = x[0].hypot(x[1]);
            let phi = x[1].atan2(x[0]);
            let tab = CylTable::new(n, k * r)?;
            let (sp, cp) = phi.sin_cos();
            for term in &model.terms {
                let psi = phi - term.azimuth;
                let mut value = C64::new(0.0, 0.0);
                let mut radial = C64::new(0.0, 0.0);
                let mut tangential = C64::new(0.0, 0.0);
                for (m, c) in term.coeffs.iter().enumerate() {
                    let (sm, cm) = (m as f64 * psi).sin_cos();
                    let h = tab.h1(m);
                    value += c * h * cm;
                    radial += c * k * tab.dh1(m) * cm;
                    tangential -= c * h * (m as f64 * sm) / r;
                }
                let grad = [
                    radial * cp - tangential * sp,
                    radial * sp + tangential * cp,
                    C64::new(0.0, 0.0),
                ];
                total = total + FieldSample::new(value, grad);
            }
        }
    }
    Ok(total)
}

/// Incident plus scattered field.
pub fn eval_total(model: &SeriesModel, x: Point) -> Result<FieldSample> {
    Ok(incident(&model.sources, model.k, model.geom.dim, x)? + eval_scattered(model, x)?)
}

/// Exterior solution with constant data `g0` on the unit sphere/circle at
/// the rescaled wavenumber `epsk`, evaluated at radius `r ≥ 1`.
pub fn lowfreq_constant(dim: Dim, epsk: f64, g0: C64, r: f64) -> Result<C64> {
    if !(epsk > 0.0 && epsk.is_finite()) {
        return config("rescaled wavenumber must be positive");
    }
    if !(r >= 1.0) {
        return domain(format!("radius {r} is inside the unit ball"));
    }
    if r == 1.0 {
        return Ok(g0);
    }
    let ratio = match dim {
        Dim::Three => sph_h0(epsk * r) / sph_h0(epsk),
        Dim::Two => CylTable::new(1, epsk * r)?.h1(0) / CylTable::new(1, epsk)?.h1(0),
    };
    Ok(g0 * ratio)
}

fn sph_h0(z: f64) -> C64 {
    C64::new(0.0, -1.0) * C64::new(z.cos(), z.sin()) / z
}

/// Total outward flux `∫ ∂_r u dΓ` over the boundary of the exterior solution
/// with constant Dirichlet data `c`.
pub fn sphere_flux_average(geom: BallGeom, k: Wavenumber, c: C64) -> Result<C64> {
    let eps = geom.radius;
    let k = k.get();
    Ok(match geom.dim {
        // k h0'(kε)/h0(kε) = ik − 1/ε
        Dim::Three => 4.0 * PI * c * C64::new(-eps, k * eps * eps),
        Dim::Two => {
            let t = CylTable::new(1, k * eps)?;
            -2.0 * PI * eps * c * k * t.h1(1) / t.h1(0)
        }
    })
}
