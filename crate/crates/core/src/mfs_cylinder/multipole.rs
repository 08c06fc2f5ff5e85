//! Outgoing spherical multipole expansion of ring-mode sources, used to
//! evaluate fitted fields far from the obstacle.

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::fields::FieldSample;
use crate::numkit::{AssocLegendre, SphTable, DEFAULT_MAX_ORDER};
use crate::vector::Point;

/// `v(x) = Σ_m e^{imφ} Σ_n A_{n,m} h_n(kr) P̄_n^{|m|}(cos θ)`, valid for
/// `r > r_sources`; used for `r ≥ r_min`.
#[derive(Debug, Clone)]
pub struct Multipole {
    k: f64,
    nmax: usize,
    mmax: usize,
    coeffs: Vec<C64>,
    r_min: f64,
}

impl Multipole {
    /// `rings[j] = (ρ', z')`; `coeffs[m + mmax][j]` is the coefficient of the
    /// `e^{imθ'}` density on ring `j`.
    pub fn from_rings(k: f64, rings: &[(f64, f64)], mmax: usize, coeffs: &[Vec<C64>]) -> Result<Self> {
        let r_src = rings.iter().map(|(r, z)| r.hypot(*z)).fold(0.0, f64::max);
        let nmax = ((k * r_src).ceil() as usize + 50).min(DEFAULT_MAX_ORDER - 2);
        let width = 2 * mmax + 1;
        let mut a = vec![C64::new(0.0, 0.0); width * (nmax + 1)];
        let ik = C64::new(0.0, k);
        for (j, &(rho, z)) in rings.iter().enumerate() {
            let r = rho.hypot(z);
            let jn: Vec<f64> = if k * r > 0.0 {
                SphTable::new(nmax, k * r)?.j[..=nmax].to_vec()
            } else {
                (0..=nmax).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect()
            };
            let (ct, st) = if r > 0.0 { (z / r, rho / r) } else { (1.0, 0.0) };
            let leg = AssocLegendre::new(nmax, mmax, ct, st.max(1e-300));
            for mi in 0..width {
                let c = coeffs[mi][j];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let m = (mi as i64 - mmax as i64).unsigned_abs() as usize;
                for n in m..=nmax {
                    a[mi * (nmax + 1) + n] += ik * c * jn[n] * leg.p(n, m);
                }
            }
        }
        Ok(Multipole {
            k,
            nmax,
            mmax,
            coeffs: a,
            r_min: 2.0 * r_src,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn eval(&self, x: Point) -> Result<FieldSample> {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let mut rho = x[0].hypot(x[1]);
        let (mut sp, mut cp) = (0.0, 1.0);
        if rho > 1e-9 * r {
            sp = x[1] / rho;
            cp = x[0] / rho;
        } else {
            rho = 1e-9 * r;
        }
        let ct = x[2] / r;
        let st = rho / r;
        let tab = SphTable::new(self.nmax, self.k * r)?;
        let leg = AssocLegendre::new(self.nmax, self.mmax, ct, st);
        let phi = sp.atan2(cp);
        let (mut v, mut dr, mut dt, mut dphi) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let width = 2 * self.mmax + 1;
        for mi in 0..width {
            let mm = mi as i64 - self.mmax as i64;
            let m = mm.unsigned_abs() as usize;
            let row = &self.coeffs[mi * (self.nmax + 1)..(mi + 1) * (self.nmax + 1)];
            let (mut sv, mut sr, mut st_) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for n in m..=self.nmax {
                let a = row[n];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let h = tab.h1(n);
                sv += a * h * leg.p(n, m);
                sr += a * self.k * tab.dh1(n) * leg.p(n, m);
                st_ += a * h * leg.dtheta(n, m);
            }
            let e = C64::new((mm as f64 * phi).cos(), (mm as f64 * phi).sin());
            v += e * sv;
            dr += e * sr;
            dt += e * st_ / r;
            dphi += e * sv * C64::new(0.0, mm as f64) / (r * st);
        }
        let rh = [st * cp, st * sp, ct];
        let th = [ct * cp, ct * sp, -st];
        let ph = [-sp, cp, 0.0];
        let mut grad = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            grad[i] = dr * rh[i] + dt * th[i] + dphi * ph[i];
        }
        Ok(FieldSample::new(v, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfs_cylinder::ring::{ring_modes, ModeValue};

    #[test]
    fn agrees_with_direct_ring_sum() {
        let k = 2.0;
        let rings = [(0.1, 0.3), (0.05, -0.45), (0.0, 0.2), (0.12, 0.0)];
        let mmax = 3;
        let mut coeffs: Vec<Vec<C64>> = (0..7)
            .map(|mi| {
                (0..rings.len())
                    .map(|j| C64::new((mi + j) as f64 * 0.1 + 0.3, -(j as f64) * 0.2 + mi as f64 * 0.05))
                    .collect()
            })
            .collect();
        // the axis ring only carries m = 0
        for (mi, row) in coeffs.iter_mut().enumerate() {
            if mi != mmax {
                row[2] = C64::new(0.0, 0.0);
            }
        }
        let mp = Multipole::from_rings(k, &rings, mmax, &coeffs).unwrap();
        for x in [[2.0, 0.5, 0.3], [-1.0, 2.5, -3.0], [0.3, -0.2, 4.0], [3.0, 0.0, 0.0]] {
            let far = mp.eval(x).unwrap();
            let rho = x[0].hypot(x[1]);
            let phi = x[1].atan2(x[0]);
            let mut direct = FieldSample::zero();
            let mut out = vec![ModeValue::default(); mmax + 1];
            for (j, &(rs, zs)) in rings.iter().enumerate() {
                ring_modes(k, rho, x[2], rs, zs, &mut out).unwrap();
                for mi in 0..7 {
                    let mm = mi as i64 - mmax as i64;
                    let o = out[mm.unsigned_abs() as usize];
                    let e = C64::new((mm as f64 * phi).cos(), (mm as f64 * phi).sin()) * coeffs[mi][j];
                    let (cp, sp) = (phi.cos(), phi.sin());
                    let dphi = o.value * C64::new(0.0, mm as f64) / rho;
                    direct = direct
                        + FieldSample::new(
                            o.value,
                            [o.d_rho * cp - dphi * sp, o.d_rho * sp + dphi * cp, o.d_z],
                        ) * e;
                }
            }
            let sc = direct.value.norm();
            assert!((far.value - direct.value).norm() <= 1e-11 * sc, "{x:?} {} {}", far.value, direct.value);
            for i in 0..3 {
                assert!((far.grad[i] - direct.grad[i]).norm() <= 1e-10 * sc, "{x:?} {i}");
            }
        }
    }
}
