//! Azimuthal modes of ring sources.
//!
//! A ring of radius `ρ'` at height `z'` carrying the density `e^{imθ'}`
//! radiates `e^{imθ} K_m(ρ, z; ρ', z')` with
//! `K_m = (1/π) ∫_0^π G_k(R(ψ)) cos(mψ) dψ`,
//! `R² = (ρ − ρ')² + (z − z')² + 4ρρ' sin²(ψ/2)`.
//! The integrand peaks at `ψ = 0` with width about `d / √(ρρ')`, where `d`
//! is the meridional distance; panels are refined geometrically there.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numkit::{gauss_legendre, QuadRule};

/// `K_m` and its derivatives in the target's `ρ` and `z`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModeValue {
    pub value: C64,
    pub d_rho: C64,
    pub d_z: C64,
}

fn unit_rule() -> &'static QuadRule {
    static RULE: OnceLock<QuadRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(12, 0.0, 1.0).expect("valid rule"))
}

/// Fills `out[m]` for `m = 0..out.len()` with the modal kernel between the
/// target `(rho, z)` and the ring `(rho_s, z_s)`.
pub fn ring_modes(k: f64, rho: f64, z: f64, rho_s: f64, z_s: f64, out: &mut [ModeValue]) -> Result<()> {
    out.iter_mut().for_each(|o| *o = ModeValue::default());
    let dz = z - z_s;
    let d2 = (rho - rho_s).powi(2) + dz * dz;
    if d2 == 0.0 {
        return Err(Error::Singularity(format!("target on the ring at ({rho}, {z})")));
    }
    let mmax = out.len().saturating_sub(1);
    let c = 4.0 * rho * rho_s;
    if c == 0.0 {
        // axial geometry: R does not depend on ψ
        let r = d2.sqrt();
        let g = green(k, r);
        let gp = g * C64::new(-1.0 / r, k) / r;
        if let Some(o) = out.first_mut() {
            o.value = g;
            o.d_rho = gp * rho;
            o.d_z = gp * dz;
        }
        if mmax >= 1 && rho == 0.0 {
            // only the m = 1 radial derivative survives on the axis
            out[1].d_rho = -gp * rho_s * 0.5;
        }
        return Ok(());
    }
    let width = 2.0 * (d2 / c).sqrt();
    let oscill = (k * c.sqrt() + mmax as f64) / 2.0;
    let base = PI / oscill.max(8.0).ceil();
    let mut edges = vec![0.0];
    let mut a = width;
    while a < base {
        edges.push(a);
        a *= 2.0;
    }
    let start = *edges.last().expect("non-empty");
    let n_uniform = ((PI - start) / base).ceil().max(1.0) as usize;
    let step = (PI - start) / n_uniform as f64;
    for i in 1..n_uniform {
        edges.push(start + i as f64 * step);
    }
    edges.push(PI);

    let rule = unit_rule();
    for pair in edges.windows(2) {
        let len = pair[1] - pair[0];
        for (t, w) in rule.iter() {
            let psi = pair[0] + t * len;
            let half = (0.5 * psi).sin();
            let r = (d2 + c * half * half).sqrt();
            let g = green(k, r);
            let gp = g * C64::new(-1.0 / r, k) / r;
            let cos_psi = psi.cos();
            let weight = w * len / PI;
            let v = g * weight;
            let vr = gp * (rho - rho_s * cos_psi) * weight;
            let vz = gp * dz * weight;
            let (mut cm, mut cprev) = (1.0, cos_psi);
            for o in out.iter_mut() {
                o.value += v * cm;
                o.d_rho += vr * cm;
                o.d_z += vz * cm;
                let next = 2.0 * cos_psi * cm - cprev;
                cprev = cm;
                cm = next;
            }
        }
    }
    Ok(())
}

#[inline]
fn green(k: f64, r: f64) -> C64 {
    let (s, c) = (k * r).sin_cos();
    C64::new(c, s) / (4.0 * PI * r)
}
