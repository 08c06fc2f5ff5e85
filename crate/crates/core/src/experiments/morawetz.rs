//! The Morawetz multiplier identity for `Δv + k²v = 0` on a star-shaped
//! domain `Ω` with exterior normal `η`:
//!
//! ```text
//! ½∫_Ω (|∇v|² + k²|v|²) − ∫_∂Ω Re(⟨∇v,η⟩⟨∇v̄,x⟩)
//!     = ∫_∂Ω Re(∂_η v v̄ + (k²/2)⟨x,η⟩|v|² − ½⟨x,η⟩|∇v|²)
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::fields::FieldSample;
use crate::mfs_cylinder::CylinderGeom;
use crate::numkit::{gauss_legendre, periodic_trapezoid};
use crate::vector::{dot, spherical, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MorawetzDomain {
    Ball { radius: f64 },
    /// `|x′| < eps`, `|z| < 1/2`.
    Cylinder { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|, volume_term)`.
    pub rel_residual: f64,
    /// `½∫_Ω (|∇v|² + k²|v|²)`.
    pub volume_term: f64,
    pub level: usize,
}

/// Node, weight and (for boundary nodes) exterior normal.
type Node = (Point, f64, Point);

fn volume_nodes(domain: MorawetzDomain, level: usize) -> Result<Vec<Node>> {
    let n = 8 * level;
    let az = periodic_trapezoid(2 * n, 0.5)?;
    let mut out = Vec::new();
    match domain {
        MorawetzDomain::Ball { radius } => {
            let polar = gauss_legendre(n, -1.0, 1.0)?;
            for (r, wr) in gauss_legendre(n, 0.0, radius)?.iter() {
                for (c, wc) in polar.iter() {
                    for (phi, wp) in az.iter() {
                        out.push((spherical(r, phi, c), wr * wc * wp * r * r, [0.0; 3]));
                    }
                }
            }
        }
        MorawetzDomain::Cylinder { eps } => {
            let h = CylinderGeom::HALF_HEIGHT;
            let zs = gauss_legendre(n, -h, h)?;
            for (rho, wr) in gauss_legendre(n, 0.0, eps)?.iter() {
                for (z, wz) in zs.iter() {
                    for (phi, wp) in az.iter() {
                        out.push(([rho * phi.cos(), rho * phi.sin(), z], wr * wz * wp * rho, [0.0; 3]));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn surface_nodes(domain: MorawetzDomain, level: usize) -> Result<Vec<Node>> {
    let n = 8 * level;
    let az = periodic_trapezoid(2 * n, 0.5)?;
    let mut out = Vec::new();
    match domain {
        MorawetzDomain::Ball { radius } => {
            for (c, wc) in gauss_legendre(n, -1.0, 1.0)?.iter() {
                for (phi, wp) in az.iter() {
                    let eta = spherical(1.0, phi, c);
                    out.push((spherical(radius, phi, c), wc * wp * radius * radius, eta));
                }
            }
        }
        MorawetzDomain::Cylinder { eps } => {
            let h = CylinderGeom::HALF_HEIGHT;
            for (z, wz) in gauss_legendre(n, -h, h)?.iter() {
                for (phi, wp) in az.iter() {
                    let (s, c) = phi.sin_cos();
                    out.push(([eps * c, eps * s, z], wz * wp * eps, [c, s, 0.0]));
                }
            }
            for (rho, wr) in gauss_legendre(n, 0.0, eps)?.iter() {
                for (phi, wp) in az.iter() {
                    let (s, c) = phi.sin_cos();
                    for side in [-1.0, 1.0] {
                        out.push(([rho * c, rho * s, side * h], wr * wp * rho, [0.0, 0.0, side]));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_domain(domain: MorawetzDomain) -> Result<()> {
    match domain {
        MorawetzDomain::Ball { radius } if radius > 0.0 && radius.is_finite() => Ok(()),
        MorawetzDomain::Cylinder { eps } if eps > 0.0 && eps < 0.5 => Ok(()),
        _ => config(format!("invalid Morawetz domain {domain:?}")),
    }
}

/// Sums node terms in chunk order so the result is thread-count independent.
fn ordered_sum<F>(nodes: &[Node], term: F) -> Result<f64>
where
    F: Fn(&Node) -> Result<f64> + Sync,
{
    let parts: Vec<f64> = nodes
        .par_chunks(1024)
        .map(|chunk| chunk.iter().map(&term).sum::<Result<f64>>())
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Both sides at one quadrature level, without a stabilization check.
pub fn morawetz_sides<V>(domain: MorawetzDomain, v: V, k: f64, level: usize) -> Result<MorawetzReport>
where
    V: Fn(Point) -> Result<FieldSample> + Sync,
{
    check_domain(domain)?;
    if !(k >= 0.0 && k.is_finite()) {
        return config("k must be finite and non-negative");
    }
    if level == 0 {
        return config("quadrature level must be positive");
    }
    let k2 = k * k;
    let volume_term = 0.5
        * ordered_sum(&volume_nodes(domain, level)?, |&(x, w, _)| {
            let u = v(x)?;
            Ok(w * (u.grad_norm_sqr() + k2 * u.value.norm_sqr()))
        })?;
    let surface = surface_nodes(domain, level)?;
    let boundary_lhs = ordered_sum(&surface, |&(x, w, eta)| {
        let u = v(x)?;
        Ok(w * (u.directional(eta) * u.directional(x).conj()).re)
    })?;
    let rhs = ordered_sum(&surface, |&(x, w, eta)| {
        let u = v(x)?;
        let xn = dot(x, eta);
        let t = (u.directional(eta) * u.value.conj()).re + 0.5 * k2 * xn * u.value.norm_sqr() - 0.5 * xn * u.grad_norm_sqr();
        Ok(w * t)
    })?;
    let lhs = volume_term - boundary_lhs;
    // for plane waves both sides vanish identically; the energy term keeps
    // the residual meaningful
    let den = lhs.abs().max(rhs.abs()).max(volume_term);
    Ok(MorawetzReport {
        lhs,
        rhs,
        rel_residual: if den == 0.0 { 0.0 } else { (lhs - rhs).abs() / den },
        volume_term,
        level,
    })
}

/// Both sides of the identity at `level`, after checking that the left side
/// agrees with the next level to `1e-3` relative.
pub fn morawetz_audit<V>(domain: MorawetzDomain, v: V, k: f64, level: usize) -> Result<MorawetzReport>
where
    V: Fn(Point) -> Result<FieldSample> + Sync,
{
    let coarse = morawetz_sides(domain, &v, k, level)?;
    let fine = morawetz_sides(domain, &v, k, level + 1)?;
    let scale = coarse.volume_term.abs().max(coarse.lhs.abs());
    if (coarse.lhs - fine.lhs).abs() > 1e-3 * scale {
        return Err(Error::Accuracy(format!(
            "Morawetz quadrature unstable: {} at level {level}, {} at level {}",
            coarse.lhs,
            fine.lhs,
            level + 1
        )));
    }
    Ok(coarse)
}
