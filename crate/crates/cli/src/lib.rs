//! The `cloaklab` command line: flag and config-file parsing, dispatch to
//! the experiments, and the CSV/JSON/text writers.

pub mod config;
mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run, Outcome};
pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
/// A certificate, accuracy or oracle gate failed; outputs were still written.
pub const EXIT_GATE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Visibility ε-sweep with rate fits (sweep.csv, audit-sweep.json).
    Sweep,
    /// Both sides of the Morawetz multiplier identity for exact fields.
    AuditMorawetz,
    /// Ring-flux symmetry of the cylinder solution.
    AuditSymmetry,
    /// Blow-up maps: weak-form identity, pointwise checks, continuity.
    AuditTransform,
    /// Constant-data low-frequency ratios and sphere flux.
    AuditLowfreq,
    /// Axis/remainder split of the cylinder boundary data.
    ProofSplit,
    /// Boundedness of the total-field annulus norm over a sweep.
    Stability,
    /// Push-forward material tensors on a grid (materials.dat).
    Materials,
    /// Closed-form checks across the library.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::AuditMorawetz => "audit-morawetz",
            Command::AuditSymmetry => "audit-symmetry",
            Command::AuditTransform => "audit-transform",
            Command::AuditLowfreq => "audit-lowfreq",
            Command::ProofSplit => "proof-split",
            Command::Stability => "stability",
            Command::Materials => "materials",
            Command::Selftest => "selftest",
        }
    }
}

/// Command-line values; each one given overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// ball2d, ball3d or cyl3d.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    pub eps_list: Option<String>,
    /// x,y[,z],re,im; repeat for several sources.
    #[arg(long = "source", global = true, value_name = "SPEC", allow_hyphen_values = true)]
    pub sources: Vec<String>,
    #[arg(long, global = true)]
    pub quad_level: Option<usize>,
    #[arg(long, global = true)]
    pub morawetz_level: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record wall-clock time per sweep point.
    #[arg(long, global = true)]
    pub timing: bool,
    #[arg(long, global = true)]
    pub mfs_n_theta: Option<usize>,
    #[arg(long, global = true)]
    pub mfs_n_z: Option<usize>,
    #[arg(long, global = true)]
    pub mfs_n_cap_rings: Option<usize>,
    #[arg(long, global = true)]
    pub mfs_axis_sources: Option<usize>,
    #[arg(long, global = true)]
    pub mfs_proxy_scale_radial: Option<f64>,
    #[arg(long, global = true)]
    pub mfs_proxy_scale_axial: Option<f64>,
    #[arg(long, global = true)]
    pub mfs_tikhonov: Option<f64>,
    #[arg(long, global = true)]
    pub mfs_validation_oversample: Option<f64>,
    /// Use the panel counts as given instead of growing them as ε shrinks.
    #[arg(long, global = true)]
    pub mfs_fixed_resolution: bool,
    #[arg(long, global = true)]
    pub mfs_refinements: Option<u32>,
    #[arg(long, global = true)]
    pub mfs_gate: Option<f64>,
    /// axisym_source, generic_source or constant_data.
    #[arg(long, global = true)]
    pub data_mode: Option<String>,
    /// Comma-separated ring heights in (-1/2, 1/2).
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    pub heights: Option<String>,
    /// radial or cylinder.
    #[arg(long, global = true)]
    pub map: Option<String>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub map_samples: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "cloaklab", version, about = "Approximate cloaking experiments for the Helmholtz equation")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

fn list(text: &str, field: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| ConfigError::new(field, format!("{t:?} is not a number"))))
        .collect()
}

fn parse_as<T: std::str::FromStr>(text: &str, field: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    text.parse::<T>().map_err(|e| ConfigError::new(field, e.to_string()))
}

/// Defaults, then the config file, then the flags; validated.
pub fn resolve(o: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut c = match &o.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
            config::parse_toml(&text)?
        }
    };
    if let Some(s) = &o.scheme {
        c.scheme = parse_as(s, "scheme")?;
    }
    if let Some(k) = o.k {
        c.k = k;
    }
    if let Some(e) = &o.eps_list {
        c.eps_list = Some(list(e, "eps_list")?);
    }
    if !o.sources.is_empty() {
        c.sources = o.sources.iter().map(|s| config::SourceSpec::parse(s)).collect::<Result<_, _>>()?;
    }
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = o.$flag { c.$($field).+ = v; })*
        };
    }
    set!(
        quad_level => quad_level,
        morawetz_level => morawetz_level,
        seed => seed,
        mfs_n_theta => mfs.n_theta,
        mfs_n_z => mfs.n_z,
        mfs_n_cap_rings => mfs.n_cap_rings,
        mfs_axis_sources => mfs.axis_sources,
        mfs_proxy_scale_radial => mfs.proxy_scale_radial,
        mfs_proxy_scale_axial => mfs.proxy_scale_axial,
        mfs_tikhonov => mfs.tikhonov,
        mfs_validation_oversample => mfs.validation_oversample,
        mfs_refinements => mfs.refinements,
        mfs_gate => mfs.gate,
        grid_n => grid_n,
        map_samples => map_samples,
    );
    if let Some(out) = &o.out {
        c.out = out.clone();
    }
    if o.threads.is_some() {
        c.threads = o.threads;
    }
    if o.timing {
        c.timing = true;
    }
    if o.mfs_fixed_resolution {
        c.mfs.scale_with_radius = false;
    }
    if let Some(m) = &o.data_mode {
        c.data_mode = Some(parse_as(m, "data_mode")?);
    }
    if let Some(h) = &o.heights {
        c.heights = list(h, "heights")?;
    }
    if let Some(m) = &o.map {
        c.map = m.parse()?;
    }
    c.validate()?;
    Ok(c)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match resolve(&cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(cli.command, &cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.gates_passed {
                EXIT_OK
            } else {
                eprintln!("{}: one or more gates failed", cli.command.name());
                EXIT_GATE
            }
        }
        Err(commands::Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(commands::Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            EXIT_GATE
        }
    }
}
