use std::f64::consts::PI;
use std::path::PathBuf;

use cloaklab::analytic_ball::{sphere_flux_average, BallGeom};
use cloaklab::cloak_transform::{
    bump_family, continuity_audit, export_materials, make_cylinder_map, make_radial_map, map_audit, transform_identity_audit, CloakMap,
    GridPairing, GridSpec, Piece,
};
use cloaklab::experiments::{
    lowfreq_audit, morawetz_audit, proof_split, stability_audit, sweep_rows, symmetry_audit, AuditReport, DataMode, MorawetzDomain, Scheme,
    Verdict, SERIES_GATE, STABILITY_BUMP_RADIUS,
};
use cloaklab::fields::{green, incident, plane_wave};
use cloaklab::{Dim, Error, FieldSample, Point, PointSourceSet, SourceProfile};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::{ConfigError, MapChoice, RunConfig};
use crate::{output, Command};

#[derive(Debug)]
pub struct Outcome {
    pub gates_passed: bool,
    pub files: Vec<PathBuf>,
    pub reports: Vec<AuditReport>,
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    /// Any other solver or audit error that stops the command.
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn core(e: Error) -> Failure {
    match e {
        Error::Config(_) | Error::Domain(_) => Failure::Config(ConfigError::new("input", e.to_string())),
        other => Failure::Run(other.to_string()),
    }
}

/// Reports under construction plus the gate tally.
struct Audit {
    hash: String,
    reports: Vec<AuditReport>,
    gates_passed: bool,
}

impl Audit {
    fn new(cfg: &RunConfig) -> Self {
        Audit {
            hash: cfg.hash(),
            reports: Vec::new(),
            gates_passed: true,
        }
    }

    /// `gate = Some(ok)` makes the entry count towards the exit code.
    fn push(&mut self, claim: impl Into<String>, anchor: &str, measured: Value, asserted: Value, verdict: Verdict, gate: Option<bool>) {
        let mut measured = match measured {
            Value::Object(m) => m,
            other => {
                let mut m = serde_json::Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        measured.insert("config_hash".into(), Value::String(self.hash.clone()));
        if gate == Some(false) {
            self.gates_passed = false;
        }
        self.reports.push(AuditReport {
            claim: claim.into(),
            paper_anchor: anchor.into(),
            measured: Value::Object(measured),
            asserted,
            verdict,
        });
    }

    /// An oracle gate that is decided by `ok`.
    fn gate(&mut self, claim: impl Into<String>, anchor: &str, measured: Value, asserted: Value, ok: bool) {
        self.push(claim, anchor, measured, asserted, Verdict::from_check(ok), Some(ok));
    }

    /// A step that could not be carried out; counts as a failed gate.
    fn failed(&mut self, claim: impl Into<String>, anchor: &str, err: &Error) {
        self.push(claim, anchor, json!({ "error": err.to_string() }), Value::Null, Verdict::Informational, Some(false));
    }

    fn finish(self, name: &str, cfg: &RunConfig, mut files: Vec<PathBuf>) -> Result<Outcome, Failure> {
        files.push(output::audit_json(&cfg.out, name, &self.reports)?);
        Ok(Outcome {
            gates_passed: self.gates_passed,
            files,
            reports: self.reports,
        })
    }
}

fn c64(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Runs a subcommand with a validated configuration, on a dedicated pool
/// when a thread count is set.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.validate()?;
    match cfg.threads {
        None => dispatch(command, cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(ConfigError::new("threads", e.to_string())))?
            .install(|| dispatch(command, cfg)),
    }
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Outcome, Failure> {
    match command {
        Command::Sweep => sweep(cfg),
        Command::AuditMorawetz => morawetz(cfg),
        Command::AuditSymmetry => symmetry(cfg),
        Command::AuditTransform => transform(cfg),
        Command::AuditLowfreq => lowfreq(cfg),
        Command::ProofSplit => split(cfg),
        Command::Stability => stability(cfg),
        Command::Materials => materials(cfg),
        Command::Selftest => selftest(),
    }
}

const VISIBILITY_ANCHOR: &str = "degree-of-visibility estimates of the main theorem and the two propositions";
const CERTIFICATE_ANCHOR: &str = "a posteriori residual certificate of the exterior solver";

fn sweep(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let scheme = cfg.scheme;
    let eps = cfg.eps_or(&scheme.default_eps());
    let r = sweep_rows(scheme, cfg.wavenumber(), &cfg.source_set()?, &eps, &cfg.sweep_options()).map_err(core)?;
    let mut audit = Audit::new(cfg);
    let files = vec![output::sweep_csv(&cfg.out, &r, &audit.hash)?];

    let gate = match scheme {
        Scheme::Cyl3d => cfg.mfs.gate,
        _ => SERIES_GATE,
    };
    let rows: Vec<Value> = r
        .rows
        .iter()
        .map(|row| {
            json!({
                "eps": row.eps,
                "certificate": row.certificate,
                "spot_check": row.spot_check,
                "flags": row.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>(),
            })
        })
        .collect();
    audit.gate(
        "every sweep point passes its residual certificate, its random-point spot check and the quadrature stabilization",
        CERTIFICATE_ANCHOR,
        json!({ "scheme": scheme.as_str(), "rows": rows }),
        json!({ "max_certificate": gate, "max_spot_over_certificate": cloaklab::experiments::SPOT_FACTOR }),
        r.all_certified(),
    );

    let certified: Vec<(f64, f64)> = r.certified().map(|row| (row.eps, row.visibility)).collect();
    let decreasing = certified.windows(2).all(|w| w[0].1 > w[1].1);
    audit.gate(
        "visibility decreases along the sweep",
        VISIBILITY_ANCHOR,
        json!({ "points": certified }),
        json!("strictly decreasing in ε"),
        decreasing,
    );

    let p = r.hypothesis.exponent;
    audit.push(
        format!("visibility ≤ C ε^{p}"),
        match scheme {
            Scheme::Cyl3d => "main theorem and the thin-cylinder proposition",
            _ => "small-ball proposition, exponent d − 1",
        },
        json!({ "fit": r.fit, "certified_points": certified.len() }),
        json!({ "exponent": p }),
        r.hypothesis.verdict,
        None,
    );

    let (agrees, asserted) = match (&r.fit, scheme) {
        (Some(f), Scheme::Ball3d) => ((f.power_slope - r.reference.power_slope).abs() <= 0.05, json!({ "slope_tolerance": 0.05 })),
        (Some(f), Scheme::Ball2d) => (f.log_r2 > f.power_r2, json!("log-law R² exceeds power-law R²")),
        (Some(f), Scheme::Cyl3d) => (f.log_r2 > f.power_r2, json!("log-law R² exceeds power-law R²")),
        (None, _) => (false, Value::Null),
    };
    audit.push(
        format!("visibility follows the reference law {}", r.reference.name),
        "classical small-obstacle asymptotics used as the oracle",
        json!({ "reference": r.reference, "fit": r.fit, "agrees": agrees }),
        asserted,
        Verdict::Informational,
        None,
    );
    audit.finish("sweep", cfg, files)
}

const MORAWETZ_ANCHOR: &str = "Morawetz multiplier identity lemma";

fn morawetz(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let k = cfg.wavenumber();
    let level = cfg.morawetz_level;
    let mut audit = Audit::new(cfg);
    let ball = MorawetzDomain::Ball { radius: 1.0 };
    let zero = C64::new(0.0, 0.0);

    let linear = |x: Point| Ok(FieldSample::new(C64::new(x[0], 0.0), [C64::new(1.0, 0.0), zero, zero]));
    let claim = "k = 0, v = x₁ on the unit ball: both sides equal −2π/3";
    match morawetz_audit(ball, linear, 0.0, level) {
        Ok(r) => {
            let want = -2.0 * PI / 3.0;
            let ok = (r.lhs - want).abs() <= 1e-8 && (r.rhs - want).abs() <= 1e-8;
            audit.gate(claim, MORAWETZ_ANCHOR, json!(r), json!({ "both_sides": want, "tolerance": 1e-8 }), ok);
        }
        Err(e) => audit.failed(claim, MORAWETZ_ANCHOR, &e),
    }

    let s: Point = [1.0, 2.0, 2.0];
    let sources = cfg.source_set()?;
    let eps = cfg.eps_list.as_ref().map_or(0.1, |l| l[0]);
    type Field<'a> = Box<dyn Fn(Point) -> cloaklab::Result<FieldSample> + Sync + 'a>;
    let cases: Vec<(String, MorawetzDomain, Field)> = vec![
        ("plane wave on the unit ball".into(), ball, Box::new(move |x| plane_wave(k, [0.48, 0.6, 0.64], x))),
        ("G_k(·, s), |s| = 3, on the unit ball".into(), ball, Box::new(move |x| green(k, Dim::Three, x, s))),
        (
            format!("incident field of the configured sources on the cylinder ε = {eps}"),
            MorawetzDomain::Cylinder { eps },
            Box::new(|x| incident(&sources, k, Dim::Three, x)),
        ),
    ];
    for (what, domain, v) in cases {
        let claim = format!("identity holds for the {what}");
        match morawetz_audit(domain, v, k.get(), level) {
            Ok(r) => audit.gate(claim, MORAWETZ_ANCHOR, json!(r), json!({ "max_rel_residual": 1e-6 }), r.rel_residual <= 1e-6),
            Err(e) => audit.failed(claim, MORAWETZ_ANCHOR, &e),
        }
    }
    audit.finish("morawetz", cfg, Vec::new())
}

const SYMMETRY_ANCHOR: &str = "cross-section symmetry lemma for the thin cylinder";

fn symmetry(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let k = cfg.wavenumber();
    let eps = cfg.eps_list.as_ref().map_or(0.1, |l| l[0]);
    if eps >= 0.5 {
        return Err(ConfigError::new("eps_list", "the cylinder needs ε < 1/2").into());
    }
    let modes = match cfg.data_mode {
        Some(m) => vec![m],
        None => vec![DataMode::AxisymSource, DataMode::GenericSource, DataMode::ConstantData],
    };
    let mfs = cfg.mfs.plan().config(eps);
    let mut audit = Audit::new(cfg);
    for mode in modes {
        let r = match symmetry_audit(eps, k, mode, &cfg.heights, &mfs) {
            Ok(r) => r,
            Err(e) => {
                audit.failed(format!("ring-flux audit, {}", mode.as_str()), SYMMETRY_ANCHOR, &e);
                continue;
            }
        };
        let totals: Vec<Value> = r.heights.iter().map(|h| json!({ "height": h.height, "total": c64(h.total), "cancellation": h.cancellation })).collect();
        match mode {
            DataMode::AxisymSource => audit.gate(
                "axisymmetric data: ring flux samples are constant in θ",
                SYMMETRY_ANCHOR,
                json!({ "eps": eps, "certificate": r.certificate, "max_theta_variation": r.max_theta_variation }),
                json!({ "max_theta_variation": 1e-4 }),
                r.max_theta_variation <= 1e-4,
            ),
            DataMode::GenericSource => audit.gate(
                "mirror-symmetric data: antipodal ring flux samples are equal",
                SYMMETRY_ANCHOR,
                json!({ "eps": eps, "certificate": r.certificate, "max_mirror_deviation": r.max_mirror_deviation }),
                json!({ "max_mirror_deviation": 1e-5 }),
                r.max_mirror_deviation <= 1e-5,
            ),
            DataMode::ConstantData => audit.gate(
                "constant data, k → 0: ring flux within a factor 2 of the thin-wire law 2π/ln(1/ε)",
                "thin-wire capacitance law (oracle)",
                json!({ "eps": eps, "certificate": r.certificate, "thin_wire": r.thin_wire, "ratios": r.thin_wire_ratios }),
                json!({ "ratio_range": [0.5, 2.0] }),
                r.thin_wire_ratios.iter().all(|q| (0.5..=2.0).contains(q)),
            ),
        }
        audit.push(
            format!("total ring flux vanishes at every height ({})", mode.as_str()),
            SYMMETRY_ANCHOR,
            json!({ "eps": eps, "k": r.k, "rings": totals, "max_cancellation": r.max_cancellation }),
            json!({ "total_flux": 0.0 }),
            Verdict::from_check(r.zero_flux_holds()),
            None,
        );
    }
    audit.finish("symmetry", cfg, Vec::new())
}

const TRANSFORM_ANCHOR: &str = "change-of-variables proposition of transformation optics";
const MAP_ANCHOR: &str = "blow-up map of the thin cylinder";

fn map_checks(audit: &mut Audit, map: &CloakMap, cfg: &RunConfig) {
    let claim = format!("pointwise map checks ({})", map.descriptor());
    match map_audit(map, cfg.map_samples, cfg.seed) {
        Ok(a) => {
            let ok = a.round_trip <= 1e-12 && a.jacobian_fd <= 1e-7 && a.min_eigenvalue > 0.0 && a.max_asymmetry <= 1e-12;
            audit.gate(
                claim,
                TRANSFORM_ANCHOR,
                json!(a),
                json!({ "round_trip": 1e-12, "jacobian_fd": 1e-7, "material": "symmetric positive definite" }),
                ok,
            );
        }
        Err(e) => audit.failed(claim, TRANSFORM_ANCHOR, &e),
    }
}

fn transform(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let k = cfg.wavenumber();
    let eps = cfg.eps_list.as_ref().map_or(0.1, |l| l[0]);
    let dim = cfg.scheme.dim();
    let mut audit = Audit::new(cfg);
    let radial = make_radial_map(eps, dim).map_err(core)?;
    let dir = match dim {
        Dim::Three => [0.48, 0.6, 0.64],
        Dim::Two => [0.6, 0.8, 0.0],
    };
    let u = move |x: Point| plane_wave(k, dir, x);
    let tests = bump_family(10, dim);

    let claim = "weak forms agree under the radial blow-up map (levels 6 and 8)";
    let coarse = transform_identity_audit(&radial, k, u, &tests, 6, GridPairing::Independent);
    let fine = transform_identity_audit(&radial, k, u, &tests, 8, GridPairing::Independent);
    match (coarse, fine) {
        (Ok(c), Ok(f)) => audit.gate(
            claim,
            TRANSFORM_ANCHOR,
            json!({ "map": radial.descriptor(), "defect_level6": c.max_defect, "defect_level8": f.max_defect, "defects_level6": c.defects }),
            json!({ "defect_level6": 1e-6, "reduction_to_level8": 10.0 }),
            c.max_defect <= 1e-6 && f.max_defect <= c.max_defect / 10.0,
        ),
        (Err(e), _) | (_, Err(e)) => audit.failed(claim, TRANSFORM_ANCHOR, &e),
    }

    map_checks(&mut audit, &radial, cfg);
    let claim = "the radial map is continuous across both spheres";
    match continuity_audit(&radial, 500) {
        Ok(c) => audit.gate(claim, TRANSFORM_ANCHOR, json!(c), json!({ "max_jump": 1e-12 }), c.max_jump() <= 1e-12),
        Err(e) => audit.failed(claim, TRANSFORM_ANCHOR, &e),
    }

    let cyl_eps = eps.min(0.49);
    let cyl = make_cylinder_map(cyl_eps).map_err(core)?;
    map_checks(&mut audit, &cyl, cfg);
    match continuity_audit(&cyl, 600) {
        Ok(c) => {
            let lateral = cyl.branch_jump(Piece::Inner, Piece::Shell, [cyl_eps, 0.0, 0.0]).map_err(core)?;
            let bottom = cyl.branch_jump(Piece::Shell, Piece::Outer, [0.5, 0.0, -1.5]).map_err(core)?;
            audit.push(
                "the printed cylinder map is continuous (bi-Lipschitz) across its interfaces",
                MAP_ANCHOR,
                json!({ "interfaces": c.interfaces, "lateral_jump_at_z0": lateral, "bottom_face_jump": bottom }),
                json!({ "max_jump": 0.0 }),
                Verdict::from_check(c.max_jump() <= 1e-12),
                None,
            );
        }
        Err(e) => audit.failed("continuity of the cylinder map", MAP_ANCHOR, &e),
    }
    let claim = "the printed cylinder map is a bijection, so the weak-form identity applies";
    match transform_identity_audit(&cyl, k, |x| plane_wave(k, [0.48, 0.6, 0.64], x), &bump_family(2, Dim::Three), 1, GridPairing::Independent) {
        Err(Error::NotInvertible(msg)) => audit.push(
            claim,
            MAP_ANCHOR,
            json!({ "not_invertible": msg }),
            json!("bi-Lipschitz onto its image"),
            Verdict::RefutedAsPrinted,
            None,
        ),
        Ok(a) => audit.push(claim, MAP_ANCHOR, json!(a), json!("bi-Lipschitz onto its image"), Verdict::Confirmed, None),
        Err(e) => audit.failed(claim, MAP_ANCHOR, &e),
    }
    audit.finish("transform", cfg, Vec::new())
}

const LOWFREQ_ANCHOR: &str = "low-frequency exterior Dirichlet lemma";

fn lowfreq(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let k = cfg.wavenumber();
    let eps = cfg.eps_or(&[1e-1, 1e-2, 1e-3]);
    let rows = lowfreq_audit(k, &eps).map_err(core)?;
    let mut audit = Audit::new(cfg);
    let max = |f: fn(&cloaklab::experiments::LowFreqRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    audit.gate(
        "3D constant data: |v(1/ε)| / |g₀| = ε",
        LOWFREQ_ANCHOR,
        json!({ "rows": rows.iter().map(|r| json!({ "eps": r.eps, "ratio": r.ratio_3d, "defect": r.defect_3d })).collect::<Vec<_>>() }),
        json!({ "max_rel_defect": 1e-8 }),
        max(|r| r.defect_3d) <= 1e-8,
    );
    audit.gate(
        "2D constant data: |v(1/ε)| / |g₀| = |H₀(k)| / |H₀(εk)|",
        LOWFREQ_ANCHOR,
        json!({ "rows": rows.iter().map(|r| json!({ "eps": r.eps, "ratio": r.ratio_2d, "hankel": r.hankel_2d, "defect": r.defect_2d })).collect::<Vec<_>>() }),
        json!({ "max_rel_defect": 1e-8 }),
        max(|r| r.defect_2d) <= 1e-8,
    );
    let scaled: Vec<f64> = rows.iter().map(|r| r.log_scaled_2d).collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    audit.push(
        "2D: |v| ≤ C(τ) / |ln ε|",
        LOWFREQ_ANCHOR,
        json!({ "eps": eps, "ratio_times_abs_ln_eps": scaled }),
        json!("bounded"),
        Verdict::from_check(hi <= 2.0 * lo),
        None,
    );
    audit.push(
        "3D: |v| ≤ C(τ) ε",
        LOWFREQ_ANCHOR,
        json!({ "eps": eps, "ratio_over_eps": rows.iter().map(|r| r.ratio_3d / r.eps).collect::<Vec<_>>() }),
        json!("bounded"),
        Verdict::from_check(rows.iter().all(|r| r.ratio_3d / r.eps <= 1.0 + 1e-8)),
        None,
    );

    let mut fluxes = Vec::new();
    for &e in &eps {
        // rescaling to the unit sphere divides the physical flux by ε
        let flux = sphere_flux_average(BallGeom::new(e, Dim::Three).map_err(core)?, k, C64::new(1.0, 0.0)).map_err(core)? / e;
        fluxes.push(json!({ "eps": e, "flux": c64(flux), "abs": flux.norm() }));
    }
    let all_zero = fluxes.iter().all(|f| f["abs"].as_f64() == Some(0.0));
    audit.push(
        "the rescaled constant-data part has zero total flux through the unit sphere",
        "small-ball proposition, flux step of the proof",
        json!({ "k": k.get(), "data": 1.0, "fluxes": fluxes }),
        json!({ "total_flux": 0.0 }),
        Verdict::from_check(all_zero),
        None,
    );
    audit.finish("lowfreq", cfg, Vec::new())
}

const SPLIT_ANCHOR: &str = "axis/remainder split of the boundary data and its corollary bound";

fn split(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let k = cfg.wavenumber();
    let eps = cfg.eps_or(&[0.2, 0.1, 0.05]);
    if eps.iter().any(|&e| e >= 0.5) {
        return Err(ConfigError::new("eps_list", "the cylinder needs ε < 1/2").into());
    }
    let sources = cfg.source_set()?;
    let mut audit = Audit::new(cfg);
    let mut done = Vec::new();
    for &e in &eps {
        match proof_split(e, k, &sources, &cfg.mfs.plan().config(e), cfg.quad_level) {
            Ok(s) => {
                let bound = 3.0 * s.certificates.iter().sum::<f64>();
                audit.gate(
                    format!("w₁ + w₂ reproduces u_ε − u (ε = {e})"),
                    SPLIT_ANCHOR,
                    json!(s),
                    json!({ "max_norm_sum_check": bound }),
                    s.norm_sum_check <= bound,
                );
                audit.gate(
                    format!("|w₂ data| ≤ ε max|∇u| on the cylinder (ε = {e})"),
                    SPLIT_ANCHOR,
                    json!({ "w2_data_max": s.w2_data_max, "bound": s.w2_data_bound }),
                    json!("w2_data_max ≤ bound"),
                    s.w2_data_max <= s.w2_data_bound,
                );
                done.push(s);
            }
            Err(err) => audit.failed(format!("split solves (ε = {e})"), SPLIT_ANCHOR, &err),
        }
    }
    if done.len() >= 2 {
        let steps: Vec<Value> = done
            .windows(2)
            .map(|w| json!({ "eps": [w[0].eps, w[1].eps], "norm_w2_ratio": w[0].norm_w2 / w[1].norm_w2, "eps_ratio": w[0].eps / w[1].eps }))
            .collect();
        let ok = done.windows(2).all(|w| w[0].norm_w2 / w[1].norm_w2 >= 0.9 * w[0].eps / w[1].eps);
        audit.push(
            "‖w₂‖ ≤ C ε",
            SPLIT_ANCHOR,
            json!({ "steps": steps, "norm_w1": done.iter().map(|s| s.norm_w1).collect::<Vec<_>>() }),
            json!({ "norm_w2_ratio_at_least": "eps ratio" }),
            Verdict::from_check(ok),
            None,
        );
    }
    audit.finish("proof-split", cfg, Vec::new())
}

const STABILITY_ANCHOR: &str = "stability lemma for the exterior of the thin cylinder";

fn stability(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let scheme = cfg.scheme;
    if scheme == Scheme::Ball2d {
        return Err(ConfigError::new("scheme", "the stability audit covers ball3d and cyl3d").into());
    }
    let points = cfg.source_set()?.sources().to_vec();
    let sources = PointSourceSet::with_profile(points, SourceProfile::Bump { radius: STABILITY_BUMP_RADIUS })
        .map_err(|e| ConfigError::new("source", format!("a bump of radius {STABILITY_BUMP_RADIUS} must fit in 2 < |x| < 3: {e}")))?;
    let eps = cfg.eps_or(&scheme.default_eps());
    let r = stability_audit(scheme, cfg.wavenumber(), &sources, &eps, &cfg.sweep_options()).map_err(core)?;
    let mut audit = Audit::new(cfg);
    let all = r.rows.iter().all(|row| row.certified());
    audit.gate(
        "every sweep point passes its residual certificate",
        CERTIFICATE_ANCHOR,
        json!({ "rows": r.rows }),
        json!("no flags"),
        all,
    );
    audit.push(
        "‖u_ε‖ on the annulus stays bounded over the sweep",
        STABILITY_ANCHOR,
        json!({ "norms": r.rows.iter().map(|row| json!([row.eps, row.visibility])).collect::<Vec<_>>(), "max_min_ratio": r.max_min_ratio, "free_norm": r.free_norm }),
        json!({ "max_min_ratio": 1.5 }),
        Verdict::from_check(r.max_min_ratio <= 1.5),
        None,
    );
    audit.push(
        "‖u_ε‖ approaches the free-field norm as ε → 0",
        STABILITY_ANCHOR,
        json!({ "last_vs_free": r.last_vs_free }),
        json!({ "last_vs_free": 0.05 }),
        Verdict::from_check(r.last_vs_free <= 0.05),
        None,
    );
    audit.finish("stability", cfg, Vec::new())
}

fn materials(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let eps = cfg.eps_list.as_ref().map_or(0.1, |l| l[0]);
    let n = cfg.grid_n;
    let (map, grid) = match cfg.map {
        MapChoice::Radial => {
            let dim = cfg.scheme.dim();
            let grid = match dim {
                Dim::Three => GridSpec { min: [-2.5; 3], max: [2.5; 3], n: [n; 3] },
                Dim::Two => GridSpec { min: [-2.5, -2.5, 0.0], max: [2.5, 2.5, 0.0], n: [n, n, 1] },
            };
            (make_radial_map(eps, dim).map_err(core)?, grid)
        }
        MapChoice::Cylinder => (make_cylinder_map(eps).map_err(core)?, GridSpec { min: [-2.5; 3], max: [2.5; 3], n: [n; 3] }),
    };
    let export = export_materials(&map, &grid).map_err(core)?;
    let path = output::materials(&cfg.out, &export, &cfg.hash())?;
    println!(
        "{} records, skipped {} on interfaces, {} inside the cloaked region, {} without a unique preimage",
        export.records.len(),
        export.skipped_interface,
        export.skipped_interior,
        export.skipped_not_invertible
    );
    Ok(Outcome {
        gates_passed: true,
        files: vec![path],
        reports: Vec::new(),
    })
}

fn selftest() -> Result<Outcome, Failure> {
    let mut checks = cloaklab::selftest::run();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(cloaklab::selftest::Check {
            name: name.into(),
            passed,
            detail,
        })
    };
    let d = RunConfig::default();
    push(
        "config defaults",
        d.validate().is_ok() && d.k == 2.0 && d.scheme == Scheme::Ball3d && d.eps_or(&d.scheme.default_eps()) == [0.2, 0.1, 0.05, 0.025, 0.0125],
        format!("{d:?}"),
    );
    let zero_k = RunConfig { k: 0.0, ..d.clone() }.validate();
    push("k = 0 rejected", matches!(&zero_k, Err(e) if e.field == "k"), format!("{zero_k:?}"));
    let rising = RunConfig { eps_list: Some(vec![0.1, 0.2]), ..d.clone() }.validate();
    push("increasing ε list rejected", matches!(&rising, Err(e) if e.field == "eps_list"), format!("{rising:?}"));

    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        if c.passed {
            println!("PASS {}", c.name);
        } else {
            println!("FAIL {}: {}", c.name, c.detail);
        }
    }
    println!("{} of {} checks passed", checks.iter().filter(|c| c.passed).count(), checks.len());
    Ok(Outcome {
        gates_passed: passed,
        files: Vec::new(),
        reports: Vec::new(),
    })
}
