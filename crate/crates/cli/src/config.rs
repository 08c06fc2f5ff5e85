//! Run configuration: defaults, TOML file, command-line overrides, in that
//! order of precedence.

use std::fmt;
use std::path::PathBuf;

use cloaklab::experiments::{DataMode, MfsPlan, Scheme, SweepOptions, DEFAULT_LEVEL, MAX_LEVEL};
use cloaklab::mfs_cylinder::{CylinderGeom, MfsConfig, DEFAULT_GATE};
use cloaklab::{PointSource, PointSourceSet, Wavenumber};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: &str = "cloaklab-run-1";

/// A rejected configuration value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub location: [f64; 3],
    /// `[re, im]`.
    pub amplitude: [f64; 2],
}

impl SourceSpec {
    /// `x,y,re,im` (2D, `z = 0`) or `x,y,z,re,im`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let bad = |m: String| ConfigError::new("source", m);
        let v: Vec<f64> = text
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("{t:?} is not a number"))))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [x, y, re, im] => Ok(SourceSpec { location: [x, y, 0.0], amplitude: [re, im] }),
            [x, y, z, re, im] => Ok(SourceSpec { location: [x, y, z], amplitude: [re, im] }),
            _ => Err(bad(format!("expected x,y[,z],re,im, got {} numbers", v.len()))),
        }
    }
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            location: [2.5, 0.0, 0.0],
            amplitude: [1.0, 0.0],
        }
    }
}

/// Solver settings for the cylinder; every field optional in the file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfsSection {
    pub n_theta: usize,
    pub n_z: usize,
    pub n_cap_rings: usize,
    pub axis_sources: usize,
    pub proxy_scale_radial: f64,
    pub proxy_scale_axial: f64,
    pub tikhonov: f64,
    pub validation_oversample: f64,
    /// Raise `n_z` and `axis_sources` with `ε^{-1/2}`.
    pub scale_with_radius: bool,
    /// Doublings of every resolution parameter.
    pub refinements: u32,
    pub gate: f64,
}

impl Default for MfsSection {
    fn default() -> Self {
        let d = MfsConfig::default();
        MfsSection {
            n_theta: d.n_theta,
            n_z: d.n_z,
            n_cap_rings: d.n_cap_rings,
            axis_sources: d.axis_sources,
            proxy_scale_radial: d.proxy_scale_radial,
            proxy_scale_axial: d.proxy_scale_axial,
            tikhonov: d.tikhonov,
            validation_oversample: d.validation_oversample,
            scale_with_radius: true,
            refinements: 0,
            gate: DEFAULT_GATE,
        }
    }
}

impl MfsSection {
    pub fn base(&self) -> MfsConfig {
        MfsConfig {
            n_theta: self.n_theta,
            n_z: self.n_z,
            n_cap_rings: self.n_cap_rings,
            axis_sources: self.axis_sources,
            proxy_scale_radial: self.proxy_scale_radial,
            proxy_scale_axial: self.proxy_scale_axial,
            tikhonov: self.tikhonov,
            validation_oversample: self.validation_oversample,
        }
    }

    pub fn plan(&self) -> MfsPlan {
        MfsPlan {
            base: self.base(),
            scale_with_radius: self.scale_with_radius,
            refinements: self.refinements,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapChoice {
    Radial,
    Cylinder,
}

impl std::str::FromStr for MapChoice {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "radial" => Ok(MapChoice::Radial),
            "cylinder" => Ok(MapChoice::Cylinder),
            _ => Err(ConfigError::new("map", format!("unknown map {s:?}; expected radial or cylinder"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: String,
    pub scheme: Scheme,
    pub k: f64,
    /// Unset means the default list of the subcommand.
    pub eps_list: Option<Vec<f64>>,
    #[serde(rename = "source")]
    pub sources: Vec<SourceSpec>,
    pub quad_level: usize,
    /// Quadrature level of the Morawetz audit.
    pub morawetz_level: usize,
    pub mfs: MfsSection,
    pub out: PathBuf,
    /// Seed of every randomized check (boundary spot checks, map samples).
    pub seed: u64,
    /// Worker threads; unset uses all cores.
    pub threads: Option<usize>,
    /// Record wall-clock times; off keeps outputs byte-reproducible.
    pub timing: bool,
    /// Unset runs every mode.
    pub data_mode: Option<DataMode>,
    pub heights: Vec<f64>,
    pub map: MapChoice,
    /// Material grid points per axis.
    pub grid_n: usize,
    /// Random samples of the map audit.
    pub map_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: FORMAT_VERSION.into(),
            scheme: Scheme::Ball3d,
            k: 2.0,
            eps_list: None,
            sources: vec![SourceSpec::default()],
            quad_level: DEFAULT_LEVEL,
            morawetz_level: 6,
            mfs: MfsSection::default(),
            out: PathBuf::from("out"),
            seed: 1,
            threads: None,
            timing: false,
            data_mode: None,
            heights: vec![-0.25, 0.0, 0.25],
            map: MapChoice::Radial,
            grid_n: 21,
            map_samples: 2000,
        }
    }
}

pub fn parse_eps_list(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::new("eps_list", format!("{t:?} is not a number")))
        })
        .collect()
}

pub fn parse_toml(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        // unknown keys are quoted in the message; otherwise take the key on
        // the offending line
        let quoted = msg.contains("unknown field").then(|| msg.split('`').nth(1)).flatten();
        let on_line = e.span().and_then(|span| {
            let start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
            let line = &text[start..];
            line.split_once('=').map(|(key, _)| key.trim().to_string())
        });
        let field = quoted.map(str::to_string).or(on_line).unwrap_or_else(|| "config".into());
        ConfigError::new(field, msg)
    })
}

impl RunConfig {
    pub fn wavenumber(&self) -> Wavenumber {
        Wavenumber::new(self.k).expect("validated wavenumber")
    }

    pub fn source_set(&self) -> Result<PointSourceSet, ConfigError> {
        let list = self
            .sources
            .iter()
            .map(|s| PointSource {
                location: s.location,
                amplitude: C64::new(s.amplitude[0], s.amplitude[1]),
            })
            .collect();
        PointSourceSet::new(list).map_err(|e| ConfigError::new("source", e.to_string()))
    }

    /// The configured list, or `default` when none was given.
    pub fn eps_or(&self, default: &[f64]) -> Vec<f64> {
        self.eps_list.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            level: self.quad_level,
            mfs: self.mfs.plan(),
            mfs_gate: self.mfs.gate,
            timing: self.timing,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |f: &str, m: String| Err(ConfigError::new(f, m));
        if self.format_version != FORMAT_VERSION {
            return err("format_version", format!("expected {FORMAT_VERSION:?}, got {:?}", self.format_version));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return err("k", format!("k must be > 0, got {}", self.k));
        }
        if let Some(eps) = &self.eps_list {
            if eps.is_empty() {
                return err("eps_list", "must not be empty".into());
            }
            if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                return err("eps_list", format!("{e} is not in (0, 1)"));
            }
            if eps.windows(2).any(|w| !(w[1] < w[0])) {
                return err("eps_list", "values must be strictly decreasing".into());
            }
            if eps[0] * self.k > 10.0 {
                return err("eps_list", format!("k·ε = {} exceeds 10", eps[0] * self.k));
            }
        }
        self.source_set()?;
        if !(1..MAX_LEVEL).contains(&self.quad_level) {
            return err("quad_level", format!("must lie in 1..={}, got {}", MAX_LEVEL - 1, self.quad_level));
        }
        if !(1..=16).contains(&self.morawetz_level) {
            return err("morawetz_level", format!("must lie in 1..=16, got {}", self.morawetz_level));
        }
        self.mfs.base().validate().map_err(|e| ConfigError::new("mfs", e.to_string()))?;
        if self.mfs.refinements > 3 {
            return err("mfs.refinements", "at most 3 doublings".into());
        }
        if !(self.mfs.gate > 0.0 && self.mfs.gate.is_finite()) {
            return err("mfs.gate", format!("must be positive, got {}", self.mfs.gate));
        }
        if self.threads == Some(0) {
            return err("threads", "must be at least 1".into());
        }
        if self.heights.is_empty() {
            return err("heights", "must not be empty".into());
        }
        if let Some(a) = self.heights.iter().find(|a| !(a.abs() < CylinderGeom::HALF_HEIGHT)) {
            return err("heights", format!("{a} is not inside (-1/2, 1/2)"));
        }
        if !(2..=201).contains(&self.grid_n) {
            return err("grid_n", format!("must lie in 2..=201, got {}", self.grid_n));
        }
        if self.map_samples == 0 {
            return err("map_samples", "must be positive".into());
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, with
    /// the output directory and thread count left out.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("out");
            m.remove("threads");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
