//! Command-line front end. Every command resolves its parameters from
//! defaults, an optional TOML config file and flags (in increasing
//! priority), writes its artifacts into a run directory and echoes the
//! resolved parameters into `report.txt`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure or a failed
//! check.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use config::{
    AssembleParams, ConfigFile, DiffNetworkParams, ExportParams, OracleParams, ProbeYetiParams,
    SolveParams, VerifyParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "translab",
    version,
    about = "Translating soliton graphs: oracles, solves, diagnostics, meshes"
)]
pub struct Cli {
    /// TOML file with one section per command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run directory; `runs/<command>-<timestamp>` when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a closed-form reaper onto a grid.
    Oracle(OracleArgs),
    /// Solve a capped boundary value problem.
    Solve(SolveArgs),
    /// Check a solved field against its asymptotic facts.
    Verify(VerifyArgs),
    /// Zero-set network of a (shifted) difference of two fields.
    DiffNetwork(DiffNetworkArgs),
    /// Assemble a surface mesh from a solved piece.
    Assemble(AssembleArgs),
    /// Capped yeti solves with ridge, witness and translation diagnostics.
    ProbeYeti(ProbeYetiArgs),
    /// Write a field diagnostic as CSV or OBJ.
    Export(ExportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Oracle(_) => "oracle",
            Command::Solve(_) => "solve",
            Command::Verify(_) => "verify",
            Command::DiffNetwork(_) => "diff-network",
            Command::Assemble(_) => "assemble",
            Command::ProbeYeti(_) => "probe-yeti",
            Command::Export(_) => "export",
        }
    }
}

macro_rules! overlay {
    ($args:expr, $p:expr; $($f:ident),* $(; opt $($o:ident),*)?) => {{
        $(if let Some(v) = $args.$f { $p.$f = v; })*
        $($(if let Some(v) = $args.$o { $p.$o = Some(v); })*)?
    }};
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// `reaper` or `pitchfork-left`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Sign of the linear term: -1, 0 or 1.
    #[arg(long, allow_negative_numbers = true)]
    pub tilt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub shift: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_center: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    /// `x_min,x_max,y_min,y_max,h` or `x_min,x_max,y_min,y_max,nx,ny`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `pitchfork`, `helicoid` or `yeti`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub cap: Option<f64>,
    /// Comma-separated intermediate caps.
    #[arg(long, value_delimiter = ',')]
    pub caps: Option<Vec<f64>>,
    #[arg(long)]
    pub max_newton_iters: Option<usize>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub perturb: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_probe: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_right: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub y_band: Option<Vec<f64>>,
    #[arg(long)]
    pub psi_tol: Option<f64>,
    #[arg(long)]
    pub gauss_tol: Option<f64>,
    #[arg(long)]
    pub normal_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiffNetworkArgs {
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub field2: Option<PathBuf>,
    /// `vx,vy`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub shift: Option<Vec<f64>>,
    #[arg(long)]
    pub normalize: Option<bool>,
    #[arg(long, allow_negative_numbers = true)]
    pub iso: Option<f64>,
    /// `x1,y1,x2,y2,...`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub singular: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub copies: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub decimate: Option<usize>,
    #[arg(long)]
    pub check_embedding: Option<bool>,
}

#[derive(Debug, Args)]
pub struct ProbeYetiArgs {
    #[arg(long, value_delimiter = ',')]
    pub truncations: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub caps: Option<Vec<f64>>,
    #[arg(long)]
    pub y_min: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_start: Option<f64>,
    #[arg(long)]
    pub witness_c: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub shifts: Option<Vec<f64>>,
    #[arg(long)]
    pub anchor_y: Option<f64>,
    #[arg(long)]
    pub max_newton_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// `gauss-map`, `slope-profile`, `ridge` or `mesh`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_probe: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub y_window: Option<Vec<f64>>,
}

/// Result of a command: the report text and the exit code it asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub exit_code: i32,
}

/// The parameters of `command` after applying the config file and flags.
pub enum Resolved {
    Oracle(OracleParams),
    Solve(SolveParams),
    Verify(VerifyParams),
    DiffNetwork(DiffNetworkParams),
    Assemble(AssembleParams),
    ProbeYeti(ProbeYetiParams),
    Export(ExportParams),
}

pub fn resolve(command: Command, file: ConfigFile) -> Resolved {
    match command {
        Command::Oracle(a) => {
            let mut p = file.oracle;
            overlay!(a, p; family, c, tilt, shift, y_center, w, grid);
            Resolved::Oracle(p)
        }
        Command::Solve(a) => {
            let mut p = file.solve;
            overlay!(a, p; family, a, x_min, x_max, margin, y_max, h, cap, caps, max_newton_iters,
                residual_tol, perturb, seed; opt w, init);
            Resolved::Solve(p)
        }
        Command::Verify(a) => {
            let mut p = file.verify;
            overlay!(a, p; family, stride, y_band, psi_tol, gauss_tol, normal_tol;
                opt field, w, compare, x_probe, x_right);
            Resolved::Verify(p)
        }
        Command::DiffNetwork(a) => {
            let mut p = file.diff_network;
            overlay!(a, p; shift, normalize, iso, singular; opt field, field2);
            Resolved::DiffNetwork(p)
        }
        Command::Assemble(a) => {
            let mut p = file.assemble;
            overlay!(a, p; family, a, copies, levels, decimate, check_embedding; opt field, w);
            Resolved::Assemble(p)
        }
        Command::ProbeYeti(a) => {
            let mut p = file.probe_yeti;
            overlay!(a, p; truncations, caps, y_min, y_max, h, x_start, shifts, anchor_y, max_newton_iters;
                opt witness_c);
            Resolved::ProbeYeti(p)
        }
        Command::Export(a) => {
            let mut p = file.export;
            overlay!(a, p; kind, stride; opt field, x_probe, y_window);
            Resolved::Export(p)
        }
    }
}

fn run_dir(out: Option<PathBuf>, command: &str) -> Result<PathBuf> {
    let dir = match out {
        Some(d) => d,
        None => {
            let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
            let base = PathBuf::from("runs").join(format!("{command}-{stamp}"));
            let mut dir = base.clone();
            let mut k = 2;
            while dir.exists() {
                dir = PathBuf::from(format!("{}-{k}", base.display()));
                k += 1;
            }
            dir
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| {
        Error::Config(format!(
            "cannot create run directory {}: {e}",
            dir.display()
        ))
    })?;
    Ok(dir)
}

/// Parses flags, runs the command and returns the outcome; errors carry
/// their exit code.
pub fn execute(cli: Cli) -> std::result::Result<(PathBuf, Outcome), (i32, Error)> {
    let classify = |e: Error| {
        let code = if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_INVALID
        };
        (code, e)
    };
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(classify)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    let resolved = resolve(cli.command, file);
    commands::validate_inputs(&resolved).map_err(classify)?;
    let existed = cli.out.as_ref().is_some_and(|d| d.exists());
    let dir = run_dir(cli.out, name).map_err(classify)?;
    let outcome = commands::run(resolved, &dir).map_err(|e| {
        if !existed {
            let _ = std::fs::remove_dir(&dir);
        }
        classify(e)
    })?;
    std::fs::write(dir.join("report.txt"), &outcome.report).map_err(|e| classify(e.into()))?;
    Ok((dir, outcome))
}

/// Entry point of the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match execute(cli) {
        Ok((dir, outcome)) => {
            print!("{}", outcome.report);
            println!("run_dir={}", display(&dir));
            outcome.exit_code
        }
        Err((code, e)) => {
            eprintln!("error: {e}");
            code
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
