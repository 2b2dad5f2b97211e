//! `phonocav` command line: subcommands, flag overrides and error reporting.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{log_log_slope, ModeExport, WedgeSummary};
pub use config::{
    BandsSection, CavitySection, CellSection, Command, CoolSection, CoupleSection, MaterialSection, ModesSection,
    OracleKind, OracleSection, RunConfig, WedgeSection,
};
pub use output::{Cell, Output};

use crate::error::{Error, Result};
use crate::fem::Model;
use crate::mesh::Termination;
use crate::nv::GammaConvention;

#[derive(Debug, Parser)]
#[command(name = "phonocav", version, about = "Diamond phononic-cavity FEM and colour-centre coupling")]
pub struct Cli {
    /// TOML file with [section] key = value entries; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Static tip-loaded wedge against the 1/r wedge solution.
    Wedge(WedgeArgs),
    /// Bloch band structure and complete gaps of the mirror cell.
    Bands(BandsArgs),
    /// Cavity eigenmodes, field exports and mode volumes.
    Modes(ModesArgs),
    /// Colour-centre coupling map from an exported mode.
    Couple(CoupleArgs),
    /// Cooperativity and cooling figures for one coupling rate.
    Cool(CoolArgs),
    /// Closed-form reference curves.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct WedgeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub half_angle: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tip_width: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub length: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub force: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub hot_size: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CellArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gap: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub height: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long)]
    pub n_k: Option<usize>,
    #[arg(long)]
    pub n_bands: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub thickness: Option<f64>,
    /// Comma-separated subset of in_plane,out_of_plane.
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    pub families: Option<Vec<Model>>,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub e: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_prime: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub mirror_cells: Option<usize>,
    #[arg(long, value_parser = parse_termination)]
    pub termination: Option<Termination>,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    #[arg(long, allow_negative_numbers = true)]
    pub thickness: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub shift_hz: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    /// Mode export (`mode_<i>.json`) written by `modes`.
    #[arg(long)]
    pub mode: Option<String>,
    /// `z=[..],x=[..]`, a label such as `z[111]x[-1-12]`, `reference` or `catalogue`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub orientation: Vec<String>,
    /// `x0,y0,x1,y1,nx,ny` in metres.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_e: Option<f64>,
    #[arg(long = "lambda-eprime", allow_negative_numbers = true)]
    pub lambda_e_prime: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_a: Option<f64>,
    #[arg(long = "lambda-aprime", allow_negative_numbers = true)]
    pub lambda_a_prime: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoolArgs {
    /// Coupling rate g/2π [Hz].
    #[arg(long, allow_negative_numbers = true)]
    pub g_hz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_hz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub temp_k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_xy_hz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_r_hz: Option<f64>,
    #[arg(long)]
    pub gamma_convention: Option<GammaConvention>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub kind: Option<OracleKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub half_angle: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub force: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
    /// `length:density:modulus`; repeatable, replaces the configured stack.
    #[arg(long)]
    pub layer: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub f_max_hz: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

fn parse_model(s: &str) -> std::result::Result<Model, String> {
    match s.replace('-', "_").as_str() {
        "in_plane" => Ok(Model::InPlane),
        "out_of_plane" => Ok(Model::OutOfPlane),
        _ => Err(format!("unknown model `{s}` (expected in_plane or out_of_plane)")),
    }
}

fn parse_termination(s: &str) -> std::result::Result<Termination, String> {
    match s {
        "free" => Ok(Termination::Free),
        "clamped" => Ok(Termination::Clamped),
        _ => Err(format!("unknown termination `{s}` (expected free or clamped)")),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl CellArgs {
    fn apply(self, c: &mut CellSection) {
        set(&mut c.a, self.a);
        set(&mut c.b, self.b);
        set(&mut c.r, self.r);
        set(&mut c.gap, self.gap);
        set(&mut c.height, self.height);
    }
}

impl Sub {
    fn command(&self) -> Command {
        match self {
            Sub::Wedge(_) => Command::Wedge,
            Sub::Bands(_) => Command::Bands,
            Sub::Modes(_) => Command::Modes,
            Sub::Couple(_) => Command::Couple,
            Sub::Cool(_) => Command::Cool,
            Sub::Oracle(_) => Command::Oracle,
        }
    }

    /// Flags win over the file.
    fn apply(self, cfg: &mut RunConfig) {
        match self {
            Sub::Wedge(a) => {
                let w = &mut cfg.wedge;
                set(&mut w.half_angle, a.half_angle);
                set(&mut w.tip_width, a.tip_width);
                set(&mut w.length, a.length);
                set(&mut w.force, a.force);
                set(&mut w.h, a.h);
                set(&mut w.hot_size, a.hot_size);
                set(&mut w.r_min, a.r_min);
                set(&mut w.r_max, a.r_max);
                set(&mut w.samples, a.samples);
            }
            Sub::Bands(a) => {
                a.cell.apply(&mut cfg.cell);
                let b = &mut cfg.bands;
                set(&mut b.h, a.h);
                set(&mut b.n_k, a.n_k);
                set(&mut b.n_bands, a.n_bands);
                set(&mut b.thickness, a.thickness);
                set(&mut b.families, a.families);
            }
            Sub::Modes(a) => {
                a.cell.apply(&mut cfg.cell);
                let c = &mut cfg.cavity;
                set(&mut c.d, a.d);
                set(&mut c.c, a.c);
                set(&mut c.e, a.e);
                set(&mut c.r_prime, a.r_prime);
                set(&mut c.theta, a.theta);
                set(&mut c.mirror_cells, a.mirror_cells);
                set(&mut c.termination, a.termination);
                let m = &mut cfg.modes;
                set(&mut m.model, a.model);
                set(&mut m.thickness, a.thickness);
                set(&mut m.h, a.h);
                set(&mut m.shift_hz, a.shift_hz);
                set(&mut m.count, a.count);
            }
            Sub::Couple(a) => {
                let c = &mut cfg.couple;
                set(&mut c.mode, a.mode);
                if !a.orientation.is_empty() {
                    c.orientations = a.orientation;
                }
                set(&mut c.grid, a.grid);
                set(&mut c.lambda_e, a.lambda_e);
                set(&mut c.lambda_e_prime, a.lambda_e_prime);
                if a.lambda_a.is_some() {
                    c.lambda_a = a.lambda_a;
                }
                if a.lambda_a_prime.is_some() {
                    c.lambda_a_prime = a.lambda_a_prime;
                }
            }
            Sub::Cool(a) => {
                let c = &mut cfg.cool;
                set(&mut c.g_hz, a.g_hz);
                set(&mut c.omega_hz, a.omega_hz);
                set(&mut c.q, a.q);
                set(&mut c.temp_k, a.temp_k);
                set(&mut c.gamma_xy_hz, a.gamma_xy_hz);
                if a.omega_r_hz.is_some() {
                    c.omega_r_hz = a.omega_r_hz;
                }
                set(&mut c.gamma_convention, a.gamma_convention);
            }
            Sub::Oracle(a) => {
                let o = &mut cfg.oracle;
                set(&mut o.kind, a.kind);
                set(&mut o.phi, a.phi);
                if !a.layer.is_empty() {
                    o.layers = a.layer;
                }
                set(&mut o.f_max_hz, a.f_max_hz);
                set(&mut o.samples, a.samples);
                let w = &mut cfg.wedge;
                set(&mut w.half_angle, a.half_angle);
                set(&mut w.force, a.force);
                set(&mut w.r_min, a.r_min);
                set(&mut w.r_max, a.r_max);
            }
        }
    }
}

/// Resolves the configuration (file, then flags) and checks it.
pub fn resolve(cli: Cli) -> Result<(Command, RunConfig, PathBuf, Option<usize>)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let command = cli.command.command();
    cli.command.apply(&mut cfg);
    cfg.validate(command)?;
    if cli.threads == Some(0) {
        return Err(Error::Config(vec!["--threads must be at least 1".into()]));
    }
    Ok((command, cfg, cli.out, cli.threads))
}

/// Runs one validated subcommand into `out`.
pub fn execute(command: Command, cfg: &RunConfig, out: &std::path::Path) -> Result<()> {
    let output = Output::new(out, command, cfg)?;
    match command {
        Command::Wedge => commands::wedge(cfg, &output).map(|_| ()),
        Command::Bands => commands::bands(cfg, &output),
        Command::Modes => commands::modes(cfg, &output),
        Command::Couple => commands::couple(cfg, &output),
        Command::Cool => commands::cool(cfg, &output).map(|_| ()),
        Command::Oracle => commands::oracle(cfg, &output),
    }
}

fn run(cli: Cli) -> Result<()> {
    let (command, cfg, out, threads) = resolve(cli)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    execute(command, &cfg, &out)
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.kind());
            ExitCode::FAILURE
        }
    }
}
