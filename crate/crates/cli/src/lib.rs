//! Command-line front end for the `kontact` engine.
//!
//! Every subcommand prints a human summary, optionally writes a JSON report,
//! and exits with 0 (all checks pass), 1 (a check fails or a computation
//! errors), 2 (bad usage or unreadable input) or 3 (a zero test was
//! inconclusive).

pub mod builtins;
mod commands;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use kontact::forms::DefinitionError;
use kontact::symexpr::ParseError;
use kontact::Config;

pub use commands::parse_point;
pub use report::{Report, Verdict};

/// Bad flags, unknown names, malformed input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "kontact", version, about = "k-contact geometry, HdDW systems and extensive hydrodynamics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random sample.
    #[arg(long, global = true, env = "KONTACT_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Sample points per zero test.
    #[arg(long, global = true, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub atol: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub rtol: f64,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub rank_threshold: f64,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Leave timestamp and wall time out of the JSON report.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

impl GlobalArgs {
    pub fn config(&self) -> Config {
        Config {
            seed: self.seed,
            samples: self.samples,
            atol: self.atol,
            rtol: self.rtol,
            rank_threshold: self.rank_threshold,
            ..Config::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct StructureSource {
    /// hydro4, hydro:K, canonical:n,k or thermo
    #[arg(long)]
    pub builtin: Option<String>,
    /// JSON definition file (chart, forms, eta, optional hamiltonian and maps).
    pub file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the three k-contact rank conditions, the Reeb frame and the polarization.
    VerifyStructure {
        #[command(flatten)]
        source: StructureSource,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Compute and check the Reeb frame.
    Reeb {
        #[command(flatten)]
        source: StructureSource,
    },
    /// Build and verify a Legendrian submanifold.
    Legendrian {
        /// JSON file with n, k, I and F.
        #[arg(long, conflicts_with = "builtin")]
        kfunction: Option<PathBuf>,
        /// thermo or hydro-equilibrium
        #[arg(long)]
        builtin: Option<String>,
        /// Fundamental relation E = f(S, V, N) (thermo).
        #[arg(long)]
        f: Option<String>,
        /// Heat capacity for the default ideal-gas relation (thermo).
        #[arg(long)]
        cv: Option<String>,
        /// Also check the Gibbs equality (thermo).
        #[arg(long)]
        gibbs: bool,
        /// Spacetime dimension (hydro-equilibrium).
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Pressure p(T, xi) (hydro-equilibrium).
        #[arg(long)]
        pressure: Option<String>,
    },
    /// Solve the HdDW equations pointwise; optionally test a section.
    Hddw {
        #[command(flatten)]
        source: StructureSource,
        /// Hamiltonian expression (overrides the file's).
        #[arg(long)]
        hamiltonian: Option<String>,
        /// `random` or `name=value,...`
        #[arg(long, default_value = "random")]
        point: String,
        /// Number of random points.
        #[arg(long, default_value_t = 8)]
        points: usize,
        /// Hydro section file (fields as functions of t, x, y, z).
        #[arg(long, value_name = "FILE")]
        section: Option<PathBuf>,
        /// Name of a map in the definition file to test as a section.
        #[arg(long, conflicts_with = "section")]
        map: Option<String>,
    },
    /// Integrate the isentropic contact flow of a monatomic ideal gas.
    IdealGas {
        #[arg(long, default_value = "3/2")]
        cv: String,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        s0: f64,
        #[arg(long, default_value_t = 1.0)]
        v0: f64,
        #[arg(long, default_value_t = 1.0)]
        n0: f64,
        /// Write the trajectory as CSV (`-` for stdout).
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Pseudo-gauge transformation on Bjorken flow.
    #[command(alias = "bjorken-demo")]
    Bjorken {
        /// I(T) in the superpotential.
        #[arg(long = "I", default_value = "T^3")]
        i_of_t: String,
        #[arg(long, default_value = "gamma")]
        gamma: String,
        /// Temperature as a function of tau.
        #[arg(long = "T-profile", default_value = "T0*(tau0/tau)^(1/3)")]
        t_profile: String,
        #[arg(long, default_value = "3*T^4")]
        energy: String,
        /// Pressure-volume term P V as a function of T.
        #[arg(long, default_value = "T^4")]
        pressure: String,
    },
}

fn dispatch(cmd: &Command, cfg: &Config) -> Result<Report> {
    let src = |s: &StructureSource| (s.builtin.clone(), s.file.clone());
    match cmd {
        Command::VerifyStructure { source, points } => {
            let (b, f) = src(source);
            commands::verify_structure(b.as_deref(), f.as_deref(), *points, cfg)
        }
        Command::Reeb { source } => {
            let (b, f) = src(source);
            commands::reeb(b.as_deref(), f.as_deref(), cfg)
        }
        Command::Legendrian { kfunction, builtin, f, cv, gibbs, k, pressure } => {
            let source = match (kfunction, builtin.as_deref()) {
                (Some(path), None) => commands::LegendrianSource::KFunction(path.clone()),
                (None, Some("thermo")) => {
                    let f = match (f, cv) {
                        (Some(_), Some(_)) => return Err(UsageError("--f and --cv are exclusive".into()).into()),
                        (Some(f), None) => Some(f.clone()),
                        (None, Some(cv)) => {
                            let cv = kontact::symexpr::parse_expr(cv).map_err(|e| UsageError(format!("--cv: {e}")))?;
                            let gas = kontact::legendrian::IdealGas { cv, ..Default::default() };
                            Some(kontact::legendrian::ideal_gas_energy(&gas).to_string())
                        }
                        (None, None) => None,
                    };
                    commands::LegendrianSource::Thermo { f, gibbs: *gibbs }
                }
                (None, Some("hydro-equilibrium")) => {
                    if *k < 2 {
                        return Err(UsageError("--k must be at least 2".into()).into());
                    }
                    commands::LegendrianSource::HydroEquilibrium { k: *k, pressure: pressure.clone() }
                }
                (None, Some(other)) => {
                    return Err(UsageError(format!("unknown Legendrian builtin `{other}` (thermo, hydro-equilibrium)")).into())
                }
                _ => return Err(UsageError("give --kfunction FILE or --builtin NAME".into()).into()),
            };
            commands::legendrian(&source, cfg)
        }
        Command::Hddw { source, hamiltonian, point, points, section, map } => {
            let (b, f) = src(source);
            let args = commands::HddwArgs {
                builtin: b.as_deref(),
                file: f.as_deref(),
                hamiltonian: hamiltonian.as_deref(),
                point,
                points: *points,
                section: section.as_deref(),
                map: map.as_deref(),
            };
            commands::hddw(&args, cfg)
        }
        Command::IdealGas { cv, t_end, dt, s0, v0, n0, csv } => {
            let args =
                commands::IdealGasArgs { cv, t_end: *t_end, dt: *dt, s0: *s0, v0: *v0, n0: *n0, csv: csv.as_deref() };
            commands::ideal_gas(&args, cfg)
        }
        Command::Bjorken { i_of_t, gamma, t_profile, energy, pressure } => {
            let args = commands::BjorkenArgs { i_of_t, gamma, t_profile, energy, pressure_volume: pressure };
            commands::bjorken(&args, cfg)
        }
    }
}

/// Run one parsed invocation and produce its report (no printing).
pub fn execute(cli: &Cli) -> Result<Report> {
    let cfg = cli.global.config();
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    let started = Instant::now();
    let mut report = dispatch(&cli.command, &cfg)?;
    if !cli.global.no_timestamp {
        report.timestamp = Some(SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        report.wall_time_s = Some(started.elapsed().as_secs_f64());
    }
    Ok(report)
}

/// Exit code for an error: 2 for anything the caller can fix by changing
/// the invocation or its input files, 1 otherwise.
pub fn error_exit_code(e: &anyhow::Error) -> i32 {
    let usage = e.chain().any(|c| {
        c.is::<UsageError>()
            || c.is::<DefinitionError>()
            || c.is::<ParseError>()
            || c.is::<std::io::Error>()
            || c.is::<serde_json::Error>()
    });
    if usage {
        2
    } else {
        1
    }
}

/// The cause chain joined with `: `, skipping causes already spelled out
/// by the message above them.
pub fn render_error(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn write_json(path: &Path, report: &Report) -> Result<()> {
    if path == Path::new("-") {
        print!("{}", report.to_json());
    } else {
        std::fs::write(path, report.to_json())?;
    }
    Ok(())
}

/// Parse `args`, run, print and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let to_stdout = cli.global.json.as_deref() == Some(Path::new("-"));
            let summary = report.summary();
            if to_stdout {
                eprint!("{summary}");
            } else {
                print!("{summary}");
            }
            if let Some(path) = &cli.global.json {
                if let Err(e) = write_json(path, &report) {
                    eprintln!("error: writing {}: {e:#}", path.display());
                    return 2;
                }
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {}", render_error(&e));
            error_exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_for_errors() {
        assert_eq!(error_exit_code(&UsageError("x".into()).into()), 2);
        let io = anyhow::Error::from(std::io::Error::other("gone")).context("reading file");
        assert_eq!(error_exit_code(&io), 2);
        assert_eq!(error_exit_code(&anyhow::anyhow!("numerical trouble")), 1);
    }

    #[test]
    fn rendered_chain_has_no_repeats() {
        let inner = UsageError("bad token".into());
        let e = anyhow::Error::from(inner).context("in f: bad token").context("reading x");
        assert_eq!(render_error(&e), "reading x: in f: bad token");
    }

    #[test]
    fn global_flags_reach_config() {
        let cli = Cli::try_parse_from(["kontact", "reeb", "--builtin", "thermo", "--seed", "7", "--samples", "5"]).unwrap();
        let cfg = cli.global.config();
        assert_eq!((cfg.seed, cfg.samples), (7, 5));
    }

    #[test]
    fn bjorken_demo_alias() {
        let cli = Cli::try_parse_from(["kontact", "bjorken-demo", "--gamma", "2"]).unwrap();
        assert!(matches!(cli.command, Command::Bjorken { ref gamma, .. } if gamma == "2"));
    }
}
