//! Meridional discretization of the cylinder boundary.
//!
//! The generating curve runs from the bottom axis point along the bottom cap
//! to the rim, up the lateral side, and back along the top cap. Panels are
//! uniform away from the rims and shrink geometrically towards them.

use crate::mfs_cylinder::{CylinderGeom, MfsConfig};

/// Ratio between consecutive panel lengths approaching a rim.
pub const CORNER_RATIO: f64 = 0.5;
/// Smallest rim panel, relative to the radius.
pub const CORNER_FLOOR: f64 = 1e-5;
/// Source offset behind a panel, in panel lengths.
pub const SOURCE_OFFSET: f64 = 1.0;
/// Collocation nodes per panel.
pub const COLLOC_PER_PANEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    BottomCap,
    Lateral,
    TopCap,
}

/// Straight panel in the `(ρ, z)` half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub part: Part,
    pub start: (f64, f64),
    pub end: (f64, f64),
    /// Outward unit normal in `(ρ, z)`.
    pub normal: (f64, f64),
}

impl Panel {
    pub fn len(&self) -> f64 {
        (self.end.0 - self.start.0).hypot(self.end.1 - self.start.1)
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        (
            self.start.0 + t * (self.end.0 - self.start.0),
            self.start.1 + t * (self.end.1 - self.start.1),
        )
    }
}

/// Meridional node: position, outward normal, arclength weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveNode {
    pub rho: f64,
    pub z: f64,
    pub normal: (f64, f64),
    pub ds: f64,
}

/// Edges on `[0, 1]`: `n` uniform cells followed (towards each graded end)
/// by `levels` cells shrinking by `CORNER_RATIO`.
fn graded_edges(n: usize, levels: usize, low: bool, high: bool) -> Vec<f64> {
    let graded: Vec<f64> = (1..=levels).map(|j| CORNER_RATIO.powi(j as i32)).collect();
    let mut widths = Vec::new();
    if low {
        widths.extend(graded.iter().rev());
    }
    widths.extend(std::iter::repeat(1.0).take(n));
    if high {
        widths.extend(graded.iter());
    }
    let total: f64 = widths.iter().sum();
    let mut edges = vec![0.0];
    let mut acc = 0.0;
    for w in widths {
        acc += w / total;
        edges.push(acc);
    }
    *edges.last_mut().expect("non-empty") = 1.0;
    edges
}

fn levels_for(width: f64, eps: f64) -> usize {
    ((width / (CORNER_FLOOR * eps)).ln() / (1.0 / CORNER_RATIO).ln()).ceil().max(1.0) as usize
}

/// Number of uniform lateral panels: the configured count, raised so that
/// panels stay below half the proxy depth `(1 − proxy_scale_radial) ε`.
pub fn lateral_panels(geom: &CylinderGeom, cfg: &MfsConfig) -> usize {
    let depth = (1.0 - cfg.proxy_scale_radial) * geom.radius();
    let need = (2.0 * 2.0 * CylinderGeom::HALF_HEIGHT / depth).ceil() as usize;
    let n = cfg.n_z.max(need);
    n + n % 2
}

pub fn panels(geom: &CylinderGeom, cfg: &MfsConfig) -> Vec<Panel> {
    let eps = geom.radius();
    let h = CylinderGeom::HALF_HEIGHT;
    let n_lat = lateral_panels(geom, cfg);
    let w_lat = 2.0 * h / n_lat as f64;
    let n_cap = cfg.n_cap_rings.max((eps / w_lat).ceil() as usize);
    let w_cap = eps / n_cap as f64;

    let mut out = Vec::new();
    let cap = graded_edges(n_cap, levels_for(w_cap, eps), false, true);
    for pair in cap.windows(2) {
        out.push(Panel {
            part: Part::BottomCap,
            start: (eps * pair[0], -h),
            end: (eps * pair[1], -h),
            normal: (0.0, -1.0),
        });
    }
    let lat = graded_edges(n_lat, levels_for(w_lat, eps), true, true);
    for pair in lat.windows(2) {
        out.push(Panel {
            part: Part::Lateral,
            start: (eps, -h + 2.0 * h * pair[0]),
            end: (eps, -h + 2.0 * h * pair[1]),
            normal: (1.0, 0.0),
        });
    }
    for pair in cap.windows(2).rev() {
        out.push(Panel {
            part: Part::TopCap,
            start: (eps * pair[1], h),
            end: (eps * pair[0], h),
            normal: (0.0, 1.0),
        });
    }
    out
}

/// `per_panel` nodes at the midpoints of equal sub-cells of every panel.
pub fn nodes(panels: &[Panel], per_panel: usize) -> Vec<CurveNode> {
    let mut out = Vec::with_capacity(panels.len() * per_panel);
    for p in panels {
        let ds = p.len() / per_panel as f64;
        for i in 0..per_panel {
            let (rho, z) = p.at((i as f64 + 0.5) / per_panel as f64);
            out.push(CurveNode {
                rho,
                z,
                normal: p.normal,
                ds,
            });
        }
    }
    out
}

/// One ring source behind each panel, at depth
/// `min(SOURCE_OFFSET · length, (1 − proxy_scale_radial) ε)`.
pub fn ring_sources(geom: &CylinderGeom, cfg: &MfsConfig, panels: &[Panel]) -> Vec<(f64, f64)> {
    let cap_depth = (1.0 - cfg.proxy_scale_radial) * geom.radius();
    panels
        .iter()
        .map(|p| {
            let (rho, z) = p.at(0.5);
            let d = (SOURCE_OFFSET * p.len()).min(cap_depth);
            (rho - d * p.normal.0, z - d * p.normal.1)
        })
        .collect()
}

/// Axis stations `(0, z_j)` with Chebyshev heights on `|z| ≤ proxy_scale_axial / 2`.
pub fn axis_stations(cfg: &MfsConfig) -> Vec<(f64, f64)> {
    let n = cfg.axis_sources;
    (0..n)
        .map(|j| {
            let z = 0.5 * cfg.proxy_scale_axial * ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            (0.0, z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panels_cover_the_curve() {
        let g = CylinderGeom::new(0.1).unwrap();
        let p = panels(&g, &MfsConfig::default());
        let total: f64 = p.iter().map(Panel::len).sum();
        assert!((total - 1.2).abs() < 1e-12);
        for w in p.windows(2) {
            assert!((w[0].end.0 - w[1].start.0).abs() < 1e-15 && (w[0].end.1 - w[1].start.1).abs() < 1e-15);
        }
        let smallest = p.iter().map(Panel::len).fold(f64::INFINITY, f64::min);
        assert!(smallest <= CORNER_FLOOR * 0.1 && smallest >= CORNER_FLOOR * 0.1 * CORNER_RATIO * 0.5);
    }

    #[test]
    fn sources_strictly_inside() {
        for eps in [0.2, 0.05, 0.0125] {
            let g = CylinderGeom::new(eps).unwrap();
            let cfg = MfsConfig::for_radius(eps);
            for (r, z) in ring_sources(&g, &cfg, &panels(&g, &cfg)) {
                assert!(r > 0.0 && r < eps && z.abs() < 0.5);
            }
        }
    }
}
