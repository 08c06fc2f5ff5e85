//! Fundamental solutions, incident fields and pointwise field algebra.
//!
//! Sign convention: the Green's function satisfies `(Δ + k²) G = −δ`, so a
//! unit point source at `s` produces the free field `G(·, s)` itself.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::numkit::{gauss_legendre, CylTable, QuadRule};
use crate::vector::{dist, dot, norm, scale, sub, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Dim {
    pub fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

/// Wavenumber `k > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Wavenumber(f64);

impl Wavenumber {
    pub fn new(k: f64) -> Result<Self> {
        if k > 0.0 && k.is_finite() {
            Ok(Wavenumber(k))
        } else {
            config(format!("wavenumber must be positive and finite, got {k}"))
        }
    }

    /// The static (Laplace) limit `k = 0`; accepted by the 3D kernels only.
    pub fn static_limit() -> Self {
        Wavenumber(0.0)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_static(self) -> bool {
        self.0 == 0.0
    }
}

/// Complex value and gradient of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub value: C64,
    pub grad: [C64; 3],
}

impl FieldSample {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(value: C64, grad: [C64; 3]) -> Self {
        FieldSample { value, grad }
    }

    /// `|∇u|²`.
    pub fn grad_norm_sqr(&self) -> f64 {
        self.grad.iter().map(|g| g.norm_sqr()).sum()
    }

    /// `⟨∇u, n⟩` for a real direction `n`.
    pub fn directional(&self, n: Point) -> C64 {
        self.grad[0] * n[0] + self.grad[1] * n[1] + self.grad[2] * n[2]
    }

    pub fn is_finite(&self) -> bool {
        let ok = |z: &C64| z.re.is_finite() && z.im.is_finite();
        ok(&self.value) && self.grad.iter().all(ok)
    }
}

impl Add for FieldSample {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        FieldSample {
            value: self.value + o.value,
            grad: [self.grad[0] + o.grad[0], self.grad[1] + o.grad[1], self.grad[2] + o.grad[2]],
        }
    }
}

impl Sub for FieldSample {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for FieldSample {
    type Output = Self;
    fn neg(self) -> Self {
        FieldSample {
            value: -self.value,
            grad: [-self.grad[0], -self.grad[1], -self.grad[2]],
        }
    }
}

impl Mul<C64> for FieldSample {
    type Output = Self;
    fn mul(self, c: C64) -> Self {
        FieldSample {
            value: self.value * c,
            grad: [self.grad[0] * c, self.grad[1] * c, self.grad[2] * c],
        }
    }
}

impl std::iter::Sum for FieldSample {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(FieldSample::zero(), |a, b| a + b)
    }
}

/// Outgoing fundamental solution `G_k(x, y)` and its gradient in `x`.
///
/// 3D: `e^{ikr} / (4πr)`; 2D: `(i/4) H₀⁽¹⁾(kr)`.
pub fn green(k: Wavenumber, dim: Dim, x: Point, y: Point) -> Result<FieldSample> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::Singularity(format!("Green's function evaluated at its pole {y:?}")));
    }
    match dim {
        Dim::Three => Ok(green3(k.get(), x, y)),
        Dim::Two => {
            if k.is_static() {
                return config("the static limit is only available in 3D");
            }
            green2(k.get(), x, y)
        }
    }
}

/// 3D kernel for any `k ≥ 0`, without the pole check.
#[inline]
pub(crate) fn green3(k: f64, x: Point, y: Point) -> FieldSample {
    let d = sub(x, y);
    let r = norm(d);
    let (s, c) = (k * r).sin_cos();
    let value = C64::new(c, s) / (4.0 * PI * r);
    let radial = value * C64::new(-1.0 / r, k) / r;
    FieldSample {
        value,
        grad: [radial * d[0], radial * d[1], radial * d[2]],
    }
}

fn green2(k: f64, x: Point, y: Point) -> Result<FieldSample> {
    let d = sub(x, y);
    let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let t = CylTable::new(1, k * r)?;
    let quarter_i = C64::new(0.0, 0.25);
    let value = quarter_i * t.h1(0);
    // d/dr H0 = -H1
    let radial = -quarter_i * t.h1(1) * (k / r);
    Ok(FieldSample {
        value,
        grad: [radial * d[0], radial * d[1], C64::new(0.0, 0.0)],
    })
}

/// Radial profile of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceProfile {
    #[default]
    Point,
    /// Unit-mass `C^∞` bump `exp(−1/(1 − (ρ/a)²))` of radius `a` (3D only).
    Bump { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    pub location: Point,
    pub amplitude: C64,
}

/// Sources strictly inside the annulus `2 < |x| < 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSourceSet {
    sources: Vec<PointSource>,
    #[serde(default)]
    profile: SourceProfile,
}

impl PointSourceSet {
    pub fn new(sources: Vec<PointSource>) -> Result<Self> {
        Self::with_profile(sources, SourceProfile::Point)
    }

    pub fn with_profile(sources: Vec<PointSource>, profile: SourceProfile) -> Result<Self> {
        if sources.is_empty() {
            return config("source set must not be empty");
        }
        for s in &sources {
            let r = norm(s.location);
            if !(r > 2.0 && r < 3.0) {
                return domain(format!("source at {:?} is not inside the annulus 2 < |x| < 3", s.location));
            }
            if !s.amplitude.re.is_finite() || !s.amplitude.im.is_finite() {
                return config("source amplitude must be finite");
            }
            if let SourceProfile::Bump { radius } = profile {
                if !(radius > 0.0 && r - radius >= 2.0 && r + radius <= 3.0) {
                    return domain(format!("bump of radius {radius} at {:?} leaves the annulus", s.location));
                }
            }
        }
        Ok(PointSourceSet { sources, profile })
    }

    /// One unit source.
    pub fn single(location: Point) -> Result<Self> {
        Self::new(vec![PointSource {
            location,
            amplitude: C64::new(1.0, 0.0),
        }])
    }

    /// Unit source at `(2.5, 0, 0)`.
    pub fn default_experiment() -> Self {
        Self::single([2.5, 0.0, 0.0]).expect("valid default source")
    }

    pub fn sources(&self) -> &[PointSource] {
        &self.sources
    }

    pub fn profile(&self) -> SourceProfile {
        self.profile
    }

    /// Same locations, amplitudes multiplied by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        PointSourceSet {
            sources: self
                .sources
                .iter()
                .map(|s| PointSource {
                    location: s.location,
                    amplitude: s.amplitude * c,
                })
                .collect(),
            profile: self.profile,
        }
    }

    pub fn max_radius(&self) -> f64 {
        self.sources.iter().map(|s| norm(s.location)).fold(0.0, f64::max)
    }

    /// Point-source amplitudes that reproduce the field outside every source
    /// support. For bumps this is the amplitude times the radial transform
    /// `4π ∫ b(t) j₀(kt) t² dt`.
    pub fn equivalent_amplitudes(&self, k: Wavenumber, dim: Dim) -> Result<Vec<C64>> {
        let factor = match self.profile {
            SourceProfile::Point => 1.0,
            SourceProfile::Bump { radius } => {
                require_3d(dim)?;
                BumpProfile::new(radius)?.far_field_factor(k.get())
            }
        };
        Ok(self.sources.iter().map(|s| s.amplitude * factor).collect())
    }
}

fn require_3d(dim: Dim) -> Result<()> {
    match dim {
        Dim::Three => Ok(()),
        Dim::Two => config("bump sources are implemented for 3D only"),
    }
}

/// Radial bump source evaluated through its monopole representation.
#[derive(Debug, Clone)]
pub struct BumpProfile {
    radius: f64,
    norm: f64,
    rule: QuadRule,
    unit: QuadRule,
}

impl BumpProfile {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return config("bump radius must be positive");
        }
        let rule = gauss_legendre(64, 0.0, radius)?;
        let mass = rule.integrate(|t| raw_bump(t / radius) * 4.0 * PI * t * t);
        Ok(BumpProfile {
            radius,
            norm: 1.0 / mass,
            rule,
            unit: gauss_legendre(48, 0.0, 1.0)?,
        })
    }

    /// Normalized density `b(t)`.
    pub fn density(&self, t: f64) -> f64 {
        self.norm * raw_bump(t / self.radius)
    }

    pub fn far_field_factor(&self, k: f64) -> f64 {
        self.rule
            .integrate(|t| self.density(t) * sinc(k * t) * 4.0 * PI * t * t)
    }

    /// Value and radial derivative of the field at distance `rho` from the
    /// center: `u(ρ) = ik ∫ b(t) j₀(k r<) h₀(k r>) t² dt`.
    pub fn field(&self, k: f64, rho: f64) -> Result<(C64, C64)> {
        if rho >= self.radius {
            let g = green3(k, [rho, 0.0, 0.0], [0.0; 3]);
            let f = self.far_field_factor(k);
            return Ok((g.value * f, g.grad[0] * f));
        }
        let ik = C64::new(0.0, k);
        let on = |a: f64, b: f64| self.unit.iter().map(move |(t, w)| (a + (b - a) * t, (b - a) * w));
        let (j_rho, dj_rho) = (sinc(k * rho), dsinc(k * rho));
        let (h_rho, dh_rho) = (h0(k * rho), dh0(k * rho));
        let mut value = C64::new(0.0, 0.0);
        let mut deriv = C64::new(0.0, 0.0);
        if rho > 0.0 {
            for (t, w) in on(0.0, rho) {
                let m = self.density(t) * t * t * w * sinc(k * t);
                value += ik * m * h_rho;
                deriv += ik * m * k * dh_rho;
            }
        }
        for (t, w) in on(rho, self.radius) {
            let m = self.density(t) * t * t * w;
            let h = h0(k * t);
            value += ik * m * j_rho * h;
            deriv += ik * m * k * dj_rho * h;
        }
        Ok((value, deriv))
    }
}

thread_local! {
    static BUMP: std::cell::RefCell<Option<std::rc::Rc<BumpProfile>>> = const { std::cell::RefCell::new(None) };
}

/// Last profile built on this thread; field sweeps reuse one radius.
fn cached_bump(radius: f64) -> Result<std::rc::Rc<BumpProfile>> {
    BUMP.with(|cell| {
        let mut slot = cell.borrow_mut();
        match slot.as_ref() {
            Some(b) if b.radius == radius => Ok(b.clone()),
            _ => {
                let b = std::rc::Rc::new(BumpProfile::new(radius)?);
                *slot = Some(b.clone());
                Ok(b)
            }
        }
    })
}

fn raw_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0 + z.powi(4) / 120.0
    } else {
        z.sin() / z
    }
}

fn dsinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        -z / 3.0 + z.powi(3) / 30.0
    } else {
        (z * z.cos() - z.sin()) / (z * z)
    }
}

/// Spherical `h₀⁽¹⁾(z) = −i e^{iz} / z`.
fn h0(z: f64) -> C64 {
    C64::new(0.0, -1.0) * C64::new(z.cos(), z.sin()) / z
}

fn dh0(z: f64) -> C64 {
    h0(z) * C64::new(-1.0 / z, 1.0)
}

/// Free field of a source set: `Σ a_j G(x, s_j)` (or the bump fields).
pub fn incident(sources: &PointSourceSet, k: Wavenumber, dim: Dim, x: Point) -> Result<FieldSample> {
    let mut total = FieldSample::zero();
    match sources.profile {
        SourceProfile::Point => {
            for s in &sources.sources {
                total = total + green(k, dim, x, s.location)? * s.amplitude;
            }
        }
        SourceProfile::Bump { radius } => {
            require_3d(dim)?;
            let bump = cached_bump(radius)?;
            for s in &sources.sources {
                let d = sub(x, s.location);
                let rho = norm(d);
                let (v, dv) = bump.field(k.get(), rho)?;
                let dir = if rho > 0.0 { scale(d, 1.0 / rho) } else { [0.0; 3] };
                let f = FieldSample::new(v, [dv * dir[0], dv * dir[1], dv * dir[2]]);
                total = total + f * s.amplitude;
            }
        }
    }
    Ok(total)
}

/// Plane wave `e^{ik⟨d, x⟩}`.
pub fn plane_wave(k: Wavenumber, dir: Point, x: Point) -> Result<FieldSample> {
    if (norm(dir) - 1.0).abs() > 1e-12 {
        return config(format!("plane-wave direction {dir:?} is not a unit vector"));
    }
    Ok(plane_wave_unchecked(k.get(), dir, x))
}

pub(crate) fn plane_wave_unchecked(k: f64, dir: Point, x: Point) -> FieldSample {
    let phase = k * dot(dir, x);
    let value = C64::new(phase.cos(), phase.sin());
    let ik = C64::new(0.0, k) * value;
    FieldSample::new(value, [ik * dir[0], ik * dir[1], ik * dir[2]])
}

/// Discrete `(Δ + k²) u` at `x`: fourth-order central differences along each
/// of the `dim` axes with step `h`.
pub fn helmholtz_residual<F>(field: F, k: f64, dim: Dim, x: Point, h: f64) -> Result<C64>
where
    F: Fn(Point) -> Result<FieldSample>,
{
    if !(h > 0.0) {
        return config("finite-difference step must be positive");
    }
    let center = field(x)?.value;
    let mut lap = C64::new(0.0, 0.0);
    for axis in 0..dim.n() {
        let at = |m: f64| {
            let mut p = x;
            p[axis] += m * h;
            field(p).map(|s| s.value)
        };
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        lap += (-p2 + 16.0 * p1 - 30.0 * center + 16.0 * m1 - m2) / (12.0 * h * h);
    }
    Ok(lap + k * k * center)
}

/// Central finite-difference gradient of the value of `field`, a test oracle
/// for analytic gradients.
pub fn fd_gradient<F>(field: F, dim: Dim, x: Point, h: f64) -> Result<[C64; 3]>
where
    F: Fn(Point) -> Result<FieldSample>,
{
    let mut g = [C64::new(0.0, 0.0); 3];
    for (axis, slot) in g.iter_mut().enumerate().take(dim.n()) {
        let mut p = x;
        p[axis] += h;
        let mut m = x;
        m[axis] -= h;
        *slot = (field(p)?.value - field(m)?.value) / (2.0 * h);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::add;

    fn k(v: f64) -> Wavenumber {
        Wavenumber::new(v).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn green_3d_unit_distance() {
        let g = green(k(1.0), Dim::Three, [1.0, 0.0, 0.0], [0.0; 3]).unwrap();
        let expect = C64::new(1f64.cos(), 1f64.sin()) / (4.0 * PI);
        assert!(close(g.value, expect, 1e-15));
        assert!((g.value.re - 0.04300).abs() < 5e-6 && (g.value.im - 0.06696).abs() < 5e-6);
        for &r in &[0.1, 1.7, 30.0] {
            let g = green(k(3.3), Dim::Three, [0.0, r, 0.0], [0.0; 3]).unwrap();
            assert!((g.value.norm() - 1.0 / (4.0 * PI * r)).abs() < 1e-15 / r);
        }
    }

    #[test]
    fn green_pole_and_wavenumber_errors() {
        assert!(matches!(
            green(k(1.0), Dim::Three, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
            Err(Error::Singularity(_))
        ));
        assert!(Wavenumber::new(0.0).is_err());
        assert!(Wavenumber::new(-1.0).is_err());
        assert!(green(Wavenumber::static_limit(), Dim::Two, [1.0, 0.0, 0.0], [0.0; 3]).is_err());
    }

    #[test]
    fn green_gradients_match_finite_differences() {
        let y = [0.3, -0.2, 0.1];
        for dim in [Dim::Two, Dim::Three] {
            for x in [[1.0, 0.5, 0.0], [-0.7, 1.9, 0.0], [2.0, 0.0, 0.0]] {
                let f = |p: Point| green(k(2.0), dim, p, y);
                let g = f(x).unwrap().grad;
                let fd = fd_gradient(f, dim, x, 1e-5).unwrap();
                let scale = g.iter().map(|c| c.norm()).fold(0.0, f64::max);
                for i in 0..dim.n() {
                    assert!((g[i] - fd[i]).norm() <= 1e-6 * scale, "{dim:?} {x:?} {i}");
                }
            }
        }
    }

    #[test]
    fn outgoing_decay() {
        let r_of = |r: f64, dim| green(k(2.0), dim, [r, 0.0, 0.0], [0.0; 3]).unwrap().value.norm();
        let a = 10.0 * r_of(10.0, Dim::Three);
        assert!((a - 40.0 * r_of(40.0, Dim::Three)).abs() < 1e-14);
        let c: Vec<f64> = [10.0_f64, 20.0, 40.0].iter().map(|&r| r.sqrt() * r_of(r, Dim::Two)).collect();
        let limit = 0.25 * (2.0 / (PI * 2.0_f64)).sqrt();
        for v in c {
            assert!((v - limit).abs() / limit < 0.02, "{v} vs {limit}");
        }
    }

    #[test]
    fn reciprocity() {
        let (x, y) = ([0.3, 1.1, -0.4], [2.0, -0.5, 0.7]);
        for dim in [Dim::Two, Dim::Three] {
            let a = green(k(1.7), dim, x, y).unwrap().value;
            let b = green(k(1.7), dim, y, x).unwrap().value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn incident_single_source_and_linearity() {
        let s = PointSourceSet::default_experiment();
        let x = [0.5, 0.2, -0.3];
        let u = incident(&s, k(2.0), Dim::Three, x).unwrap();
        assert_eq!(u, green(k(2.0), Dim::Three, x, [2.5, 0.0, 0.0]).unwrap());
        let c = C64::new(-1.5, 0.25);
        let v = incident(&s.scaled(c), k(2.0), Dim::Three, x).unwrap();
        assert!(close(v.value, u.value * c, 1e-15));
        assert!(incident(&s, k(2.0), Dim::Three, [2.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn antipodal_sources_give_mirror_symmetric_field() {
        let src = |p| PointSource {
            location: p,
            amplitude: C64::new(1.0, 0.0),
        };
        let s = PointSourceSet::new(vec![src([2.5, 0.0, 0.0]), src([-2.5, 0.0, 0.0])]).unwrap();
        for x in [[0.4, 0.7, 0.2], [1.3, -0.2, 0.9]] {
            let a = incident(&s, k(2.0), Dim::Three, x).unwrap().value;
            let b = incident(&s, k(2.0), Dim::Three, [-x[0], x[1], x[2]]).unwrap().value;
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn source_set_validation() {
        assert!(PointSourceSet::new(vec![]).is_err());
        assert!(PointSourceSet::single([1.0, 0.0, 0.0]).is_err());
        assert!(PointSourceSet::single([3.0, 0.0, 0.0]).is_err());
        assert!(PointSourceSet::with_profile(
            vec![PointSource {
                location: [2.5, 0.0, 0.0],
                amplitude: C64::new(1.0, 0.0)
            }],
            SourceProfile::Bump { radius: 0.6 }
        )
        .is_err());
    }

    #[test]
    fn incident_satisfies_helmholtz_away_from_sources() {
        let s = PointSourceSet::default_experiment();
        for dim in [Dim::Two, Dim::Three] {
            for x in [[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [4.0, -1.0, 0.0]] {
                let f = |p| incident(&s, k(2.0), dim, p);
                let res = helmholtz_residual(f, 2.0, dim, x, 1e-4).unwrap();
                let v = f(x).unwrap().value.norm();
                assert!(res.norm() <= 1e-6 * v * 4.0, "{dim:?} {x:?} {res}");
            }
        }
    }

    #[test]
    fn plane_wave_properties() {
        let d = [0.6, 0.0, 0.8];
        let p = plane_wave(k(2.0), d, [0.0; 3]).unwrap();
        assert_eq!(p.value, C64::new(1.0, 0.0));
        let q = plane_wave(k(2.0), d, [0.3, -1.2, 7.0]).unwrap();
        assert!((q.value.norm() - 1.0).abs() < 1e-15);
        for i in 0..3 {
            assert!(close(q.grad[i] / q.value, C64::new(0.0, 2.0 * d[i]), 1e-15) || d[i] == 0.0);
        }
        assert!(plane_wave(k(2.0), [1.0, 1.0, 0.0], [0.0; 3]).is_err());
    }

    #[test]
    fn residual_of_exact_solutions_and_gaussian() {
        let d = [1.0, 0.0, 0.0];
        let r = helmholtz_residual(|p| plane_wave(k(2.0), d, p), 2.0, Dim::Three, [0.3, 0.1, 0.2], 1e-3).unwrap();
        assert!(r.norm() <= 1e-6);
        let y = [0.1, 0.2, 0.3];
        let x = add(y, [0.3, 0.4, 0.0]);
        let r = helmholtz_residual(|p| green(k(2.0), Dim::Three, p, y), 2.0, Dim::Three, x, 1e-4).unwrap();
        assert!(r.norm() <= 1e-6);
        let gauss = |p: Point| -> Result<FieldSample> {
            Ok(FieldSample::new(C64::new((-dot(p, p)).exp(), 0.0), [C64::new(0.0, 0.0); 3]))
        };
        let r = helmholtz_residual(gauss, 2.0, Dim::Three, [0.0; 3], 1e-3).unwrap();
        assert!((r - C64::new(-2.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn bump_source_matches_point_source_outside_support() {
        let bump = BumpProfile::new(0.25).unwrap();
        // unit mass
        let mass = gauss_legendre(80, 0.0, 0.25)
            .unwrap()
            .integrate(|t| bump.density(t) * 4.0 * PI * t * t);
        assert!((mass - 1.0).abs() < 1e-12);
        // continuity of value and derivative across the support edge
        let (vi, di) = bump.field(2.0, 0.25 - 1e-9).unwrap();
        let (vo, dout) = bump.field(2.0, 0.25 + 1e-9).unwrap();
        assert!((vi - vo).norm() < 1e-7 && (di - dout).norm() < 1e-6);
        // inside, the field solves (Δ + k²) u = −b
        let s = PointSourceSet::with_profile(
            vec![PointSource {
                location: [2.5, 0.0, 0.0],
                amplitude: C64::new(1.0, 0.0),
            }],
            SourceProfile::Bump { radius: 0.25 },
        )
        .unwrap();
        let x = [2.58, 0.05, -0.02];
        let res = helmholtz_residual(|p| incident(&s, k(2.0), Dim::Three, p), 2.0, Dim::Three, x, 1e-3).unwrap();
        let rho = dist(x, [2.5, 0.0, 0.0]);
        assert!((res + bump.density(rho)).norm() < 1e-4 * bump.density(rho));
    }
}
