//! Audits that need the cylinder solver: ring-flux symmetry and the split of
//! the boundary data into an axis part and a remainder.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{h1_annulus_norm, h1_annulus_quadrature, Annulus};
use crate::error::{config, Result};
use crate::fields::{incident, Dim, PointSource, PointSourceSet, Wavenumber};
use crate::mfs_cylinder::{self, ring_flux, CylinderGeom, MfsConfig, MfsModel, Obstacle, DEFAULT_GATE};
use crate::vector::Point;

/// Ring samples per height; even, so every sample has an antipode.
pub const RING_SAMPLES: usize = 16;
/// `|mean flux| / max |flux sample|` above which a ring total is counted as
/// nonzero.
pub const ZERO_FLUX_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// Unit source on the axis at `(0, 0, 2.5)`.
    AxisymSource,
    /// Unit sources at `(±2, ±1.5, 0.3)`, symmetric under `x′ → −x′` only.
    GenericSource,
    /// Laplace problem (`k = 0`) with data `1`.
    ConstantData,
}

impl DataMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DataMode::AxisymSource => "axisym_source",
            DataMode::GenericSource => "generic_source",
            DataMode::ConstantData => "constant_data",
        }
    }

    pub fn sources(self) -> Option<PointSourceSet> {
        let one = C64::new(1.0, 0.0);
        match self {
            DataMode::AxisymSource => PointSourceSet::single([0.0, 0.0, 2.5]).ok(),
            DataMode::GenericSource => PointSourceSet::new(vec![
                PointSource { location: [2.0, 1.5, 0.3], amplitude: one },
                PointSource { location: [-2.0, -1.5, 0.3], amplitude: one },
            ])
            .ok(),
            DataMode::ConstantData => None,
        }
    }
}

impl std::str::FromStr for DataMode {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axisym_source" => Ok(DataMode::AxisymSource),
            "generic_source" => Ok(DataMode::GenericSource),
            "constant_data" => Ok(DataMode::ConstantData),
            _ => config(format!("unknown data mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightReport {
    pub height: f64,
    pub samples: Vec<C64>,
    /// Ring flux `∫ ∂v/∂η` over the circle.
    pub total: C64,
    /// `max |s_i − s_0| / max |s_i|`.
    pub theta_variation: f64,
    /// `max |s_i − s_{i+n/2}| / max |s_i|` (antipodal samples).
    pub mirror_deviation: f64,
    /// `|mean| / max |s_i|`; zero when the flux cancels around the ring.
    pub cancellation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub eps: f64,
    pub k: f64,
    pub mode: DataMode,
    pub certificate: f64,
    pub heights: Vec<HeightReport>,
    pub max_theta_variation: f64,
    pub max_mirror_deviation: f64,
    /// Largest `cancellation` over the heights.
    pub max_cancellation: f64,
    /// Thin-wire capacitance `2π / ln(1/ε)` (constant data only).
    pub thin_wire: Option<f64>,
    /// `|total| / thin_wire` at each height (constant data only).
    pub thin_wire_ratios: Vec<f64>,
}

impl SymmetryReport {
    /// The zero-total-flux statement holds only if every ring cancels.
    pub fn zero_flux_holds(&self) -> bool {
        self.max_cancellation <= ZERO_FLUX_TOL
    }
}

fn height_report(model: &MfsModel, a: f64) -> Result<HeightReport> {
    let f = ring_flux(model, a, RING_SAMPLES)?;
    let s = &f.samples;
    let top = s.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let rel = |d: f64| if top == 0.0 { 0.0 } else { d / top };
    let half = s.len() / 2;
    Ok(HeightReport {
        height: a,
        theta_variation: rel(s.iter().map(|v| (v - s[0]).norm()).fold(0.0, f64::max)),
        mirror_deviation: rel((0..half).map(|i| (s[i] - s[i + half]).norm()).fold(0.0, f64::max)),
        cancellation: rel(f.mean.norm()),
        total: f.total,
        samples: f.samples,
    })
}

/// Ring fluxes of the scattered field at the given heights. Aborts with a
/// certificate error when the solve does not pass [`DEFAULT_GATE`].
pub fn symmetry_audit(eps: f64, k: Wavenumber, mode: DataMode, heights: &[f64], cfg: &MfsConfig) -> Result<SymmetryReport> {
    if heights.is_empty() {
        return config("symmetry audit needs at least one height");
    }
    if let Some(a) = heights.iter().find(|a| !(a.abs() < CylinderGeom::HALF_HEIGHT)) {
        return config(format!("height {a} is not inside (-1/2, 1/2)"));
    }
    let obstacle = Obstacle::cylinder(eps)?;
    let model = match mode.sources() {
        Some(s) => mfs_cylinder::solve_obstacle(obstacle, k, &s, cfg)?,
        None => mfs_cylinder::solve_dirichlet(obstacle, Wavenumber::static_limit(), |_| Ok(C64::new(1.0, 0.0)), cfg)?,
    };
    let model = model.require(DEFAULT_GATE)?;
    let rows: Vec<HeightReport> = heights.iter().map(|&a| height_report(&model, a)).collect::<Result<_>>()?;
    let max_of = |f: fn(&HeightReport) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (thin_wire, thin_wire_ratios) = match mode {
        DataMode::ConstantData => {
            let law = 2.0 * PI / (1.0 / eps).ln();
            (Some(law), rows.iter().map(|r| r.total.norm() / law).collect())
        }
        _ => (None, Vec::new()),
    };
    Ok(SymmetryReport {
        eps,
        k: if mode == DataMode::ConstantData { 0.0 } else { k.get() },
        mode,
        certificate: model.certificate(),
        max_theta_variation: max_of(|r| r.theta_variation),
        max_mirror_deviation: max_of(|r| r.mirror_deviation),
        max_cancellation: max_of(|r| r.cancellation),
        heights: rows,
        thin_wire,
        thin_wire_ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofSplit {
    pub eps: f64,
    /// `‖w₁‖_{H¹(B₅∖B₂)}`, data `−u(0, z)`.
    pub norm_w1: f64,
    /// `‖w₂‖_{H¹(B₅∖B₂)}`, data `−u(x′, z) + u(0, z)`.
    pub norm_w2: f64,
    /// `‖u_ε − u‖_{H¹(B₅∖B₂)}` from the unsplit solve.
    pub norm_full: f64,
    /// `‖(w₁ + w₂) − (u_ε − u)‖ / ‖u_ε − u‖`.
    pub norm_sum_check: f64,
    /// Certificates of the `w₁`, `w₂` and unsplit solves.
    pub certificates: [f64; 3],
    /// `max |w₂ data|` over the validation nodes.
    pub w2_data_max: f64,
    /// `ε · max |∇u|` sampled on the closed cylinder.
    pub w2_data_bound: f64,
}

/// Largest `|∇u|` on a grid of the closed cylinder including its axis and
/// lateral surface.
fn max_gradient(sources: &PointSourceSet, k: Wavenumber, eps: f64) -> Result<f64> {
    let h = CylinderGeom::HALF_HEIGHT;
    let mut best: f64 = 0.0;
    for iz in 0..=40 {
        let z = -h + 2.0 * h * iz as f64 / 40.0;
        for ir in 0..=4 {
            let rho = eps * ir as f64 / 4.0;
            for it in 0..16 {
                let (s, c) = (2.0 * PI * it as f64 / 16.0).sin_cos();
                let g = incident(sources, k, Dim::Three, [rho * c, rho * s, z])?;
                best = best.max(g.grad_norm_sqr().sqrt());
            }
        }
    }
    Ok(best)
}

/// Solves the two halves of the split boundary data separately and checks
/// them against the unsplit solve.
pub fn proof_split(eps: f64, k: Wavenumber, sources: &PointSourceSet, cfg: &MfsConfig, level: usize) -> Result<ProofSplit> {
    let obstacle = Obstacle::cylinder(eps)?;
    let u = |x: Point| incident(sources, k, Dim::Three, x);
    let axis = |x: Point| u([0.0, 0.0, x[2]]).map(|f| f.value);
    let w1 = mfs_cylinder::solve_dirichlet(obstacle, k, |x| axis(x).map(|v| -v), cfg)?.require(DEFAULT_GATE)?;
    let w2 = mfs_cylinder::solve_dirichlet(obstacle, k, |x| Ok(axis(x)? - u(x)?.value), cfg)?.require(DEFAULT_GATE)?;
    let full = mfs_cylinder::solve_obstacle(obstacle, k, sources, cfg)?.require(DEFAULT_GATE)?;

    let ann = Annulus::new(Dim::Three);
    let norm_w1 = h1_annulus_norm(|x| mfs_cylinder::eval_scattered(&w1, x), &ann, level)?;
    let norm_w2 = h1_annulus_norm(|x| mfs_cylinder::eval_scattered(&w2, x), &ann, level)?;
    let norm_full = h1_annulus_norm(|x| mfs_cylinder::eval_scattered(&full, x), &ann, level)?;
    // the defect is near rounding level, so no refinement loop
    let defect = h1_annulus_quadrature(
        |x| {
            let a = mfs_cylinder::eval_scattered(&w1, x)? + mfs_cylinder::eval_scattered(&w2, x)?;
            Ok(a - mfs_cylinder::eval_scattered(&full, x)?)
        },
        &ann,
        level,
    )?;

    let mut w2_data_max: f64 = 0.0;
    for n in mfs_cylinder::validation_nodes(&obstacle, cfg)? {
        w2_data_max = w2_data_max.max((axis(n.point)? - u(n.point)?.value).norm());
    }
    Ok(ProofSplit {
        eps,
        norm_w1,
        norm_w2,
        norm_full,
        norm_sum_check: if norm_full == 0.0 { defect } else { defect / norm_full },
        certificates: [w1.certificate(), w2.certificate(), full.certificate()],
        w2_data_max,
        w2_data_bound: eps * max_gradient(sources, k, eps)?,
    })
}
