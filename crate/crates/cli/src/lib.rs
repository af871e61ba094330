//! Argument parsing and dispatch for the `qdel` binary.
//!
//! Exit codes: 0 on success, 2 for bad flags or unusable input files, 3 when
//! a computation fails, 1 when the output cannot be written.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use qdel_core::config::{seed_from_env, RunManifest, ToleranceConfig};
use qdel_core::deletion::{optimal_quality_with_step, DEFAULT_GRID_STEP};
use qdel_core::fidelity::{fidelity_report, fidelity_sweep, MIN_GRID};
use qdel_core::hilbert::{Ket, SpaceShape, C64};
use qdel_core::machines::{classify_deleter, delete_demo, BasisActionMachine};
use qdel_core::nogo::{nonorthogonal_constraints, sweep_overlap, verify_machine};
use qdel_core::report::{emit_report, Format, Report};
use qdel_core::signalling::{signal_sweep, signalling_report};
use qdel_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Table,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Table => Format::Table,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qdel",
    version,
    about = "Deleting machines, deletion bounds and the no-deleting principle"
)]
pub struct Cli {
    /// Output format; sweeps and curves default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,

    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Algebraic tolerance used by isometry checks.
    #[arg(long, global = true, value_parser = parse_tol)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal N-to-M deletion quality and the bound it comes from.
    Quality {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        m: u64,
        /// Emit the bound as a function of |α|² instead of the summary.
        #[arg(long)]
        curve: bool,
    },
    /// Fidelities of the conditional deleter.
    Fidelity {
        #[arg(long, value_parser = parse_unit)]
        alpha_sq: Option<f64>,
        /// Report Bloch-sphere averages on the --grid quadrature (default 256x256).
        #[arg(long)]
        average: bool,
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        /// Emit (|α|², F_a, F_b) at this many points instead.
        #[arg(long, value_parser = parse_points, conflicts_with_all = ["alpha_sq", "average", "grid"])]
        sweep: Option<usize>,
    },
    /// Inner-product constraints for deleting non-orthogonal states.
    #[command(group(ArgGroup::new("mode").required(true).args(["overlap", "sweep"])))]
    Nogo {
        #[arg(long, value_parser = parse_unit)]
        overlap: Option<f64>,
        #[arg(long, value_parser = parse_points)]
        sweep: Option<usize>,
        /// Phase χ of the overlap s·e^{iχ}.
        #[arg(long, value_parser = parse_angle, default_value = "0", allow_hyphen_values = true)]
        phase: f64,
    },
    /// Distinguishability of Bob's qubits for two choices of Alice's basis.
    Signal {
        #[arg(long, value_parser = parse_angle, required_unless_present = "sweep", allow_hyphen_values = true)]
        theta1: Option<f64>,
        #[arg(long, value_parser = parse_angle, required_unless_present = "sweep", allow_hyphen_values = true)]
        theta2: Option<f64>,
        /// Distance from θ = 0 at this many angles in [0, π].
        #[arg(long, value_parser = parse_points, conflicts_with_all = ["theta1", "theta2"])]
        sweep: Option<usize>,
    },
    /// Two-qudit deleter without ancilla applied to sqrt(x)|0> + sqrt(1-x)|1>.
    DeleteDemo {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=64))]
        dim: u64,
        #[arg(long, value_parser = parse_unit)]
        alpha_sq: f64,
    },
    /// Isometry and Gram-matrix checks for a machine file.
    Verify {
        #[arg(long)]
        machine: PathBuf,
        /// Semicolon-separated states: a basis index, `+`, `-`, or
        /// comma-separated real amplitudes (normalized automatically).
        #[arg(long, allow_hyphen_values = true)]
        alphabet: String,
    },
    /// Classify an ancilla machine from Haar-random inputs (seed from QDEL_SEED).
    Classify {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..=100_000))]
        samples: u64,
    },
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(x)
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(format!("{x} is outside [0, 1]"));
    }
    Ok(x)
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if x <= 0.0 || x >= 1.0 {
        return Err(format!("tolerance {x} must lie in (0, 1)"));
    }
    Ok(x)
}

/// Radians, or degrees with a `deg` suffix.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    match t.strip_suffix("deg") {
        Some(d) => Ok(parse_f64(d)?.to_radians()),
        None => parse_f64(t),
    }
}

fn parse_points(s: &str) -> Result<usize, String> {
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a point count"))?;
    if !(2..=1_000_000).contains(&n) {
        return Err(format!("point count {n} must lie in [2, 1000000]"));
    }
    Ok(n)
}

/// `AxB` with both sides at least the quadrature minimum.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid `{s}` is not of the form AxB"))?;
    let side = |v: &str| -> Result<usize, String> {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("grid side `{v}` is not an integer"))?;
        if !(MIN_GRID..=4096).contains(&n) {
            return Err(format!("grid side {n} must lie in [{MIN_GRID}, 4096]"));
        }
        Ok(n)
    };
    Ok((side(a)?, side(b)?))
}

/// Parses an alphabet for qudits of dimension `dim`.
pub fn parse_alphabet(text: &str, dim: usize) -> Result<Vec<Ket>, String> {
    let shape = SpaceShape::new(vec![dim]).map_err(|e| e.to_string())?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut out = Vec::new();
    for token in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let ket = match token {
            "+" | "-" => {
                let mut amps = vec![C64::new(0.0, 0.0); dim];
                amps[0] = h;
                amps[1] = if token == "+" { h } else { -h };
                Ket::new(shape.clone(), amps)
            }
            t if t.contains(',') => {
                let amps = t
                    .split(',')
                    .map(|v| parse_f64(v).map(|x| C64::new(x, 0.0)))
                    .collect::<Result<Vec<_>, _>>()?;
                if amps.len() != dim {
                    return Err(format!(
                        "state `{t}` has {} amplitudes, machine needs {dim}",
                        amps.len()
                    ));
                }
                Ket::new(shape.clone(), amps).and_then(|k| k.normalized())
            }
            t => {
                let i: usize = t
                    .parse()
                    .map_err(|_| format!("alphabet entry `{t}` is not understood"))?;
                Ket::basis(shape.clone(), i)
            }
        };
        out.push(ket.map_err(|e| format!("alphabet entry `{token}`: {e}"))?);
    }
    if out.is_empty() {
        return Err("alphabet is empty".to_string());
    }
    Ok(out)
}

enum Failure {
    Usage(String),
    Numeric(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnsupportedFormat { .. } | Error::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other),
        }
    }
}

fn load_machine(path: &PathBuf) -> Result<BasisActionMachine, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    BasisActionMachine::from_json(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn qubit_with_overlap(s: f64, phase: f64) -> Ket {
    Ket::qubit(
        C64::from_polar(s, phase),
        C64::new((1.0 - s * s).max(0.0).sqrt(), 0.0),
    )
}

/// Builds the report for a parsed command line and the format to emit it in.
fn execute(cli: &Cli, manifest: &RunManifest) -> Result<(Report, Format), Failure> {
    let explicit = cli.format.map(Format::from);
    let pick = |tabular: bool| explicit.unwrap_or(if tabular { Format::Csv } else { Format::Json });
    Ok(match &cli.command {
        Command::Quality { n, m, curve } => {
            if m > n {
                return Err(Failure::Usage(format!("--m {m} exceeds --n {n}")));
            }
            let step = manifest.config.grid_step.min(DEFAULT_GRID_STEP);
            (
                Report::Quality(optimal_quality_with_step(*n as usize, *m as usize, step)?),
                pick(*curve),
            )
        }
        Command::Fidelity {
            alpha_sq,
            average,
            grid,
            sweep,
        } => match sweep {
            Some(points) => (Report::FidelitySweep(fidelity_sweep(*points)?), pick(true)),
            None => {
                let (nt, np) = grid.unwrap_or(if *average { (256, 256) } else { (16, 16) });
                (
                    Report::Fidelity(fidelity_report(alpha_sq.unwrap_or(0.5), nt, np)?),
                    pick(false),
                )
            }
        },
        Command::Nogo {
            overlap,
            sweep,
            phase,
        } => match (overlap, sweep) {
            (_, Some(points)) => (
                Report::ConstraintSweep(sweep_overlap(*points, *phase)?),
                pick(true),
            ),
            (Some(s), None) => {
                let zero = Ket::qubit(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
                let psi2 = qubit_with_overlap(*s, *phase);
                (
                    Report::Constraints(nonorthogonal_constraints(&zero, &psi2, &zero)?),
                    pick(false),
                )
            }
            (None, None) => unreachable!("clap requires --overlap or --sweep"),
        },
        Command::Signal {
            theta1,
            theta2,
            sweep,
        } => match (sweep, theta1, theta2) {
            (Some(points), _, _) => (Report::SignalSweep(signal_sweep(*points)?), pick(true)),
            (None, Some(a), Some(b)) => {
                (Report::Signalling(signalling_report(*a, *b)?), pick(false))
            }
            _ => unreachable!("clap requires both angles without --sweep"),
        },
        Command::DeleteDemo { dim, alpha_sq } => (
            Report::DeleteDemo(delete_demo(*dim as usize, *alpha_sq)?),
            pick(false),
        ),
        Command::Verify { machine, alphabet } => {
            let machine = load_machine(machine)?;
            let dims = machine.input_shape().dims();
            let alphabet = parse_alphabet(alphabet, dims[0]).map_err(Failure::Usage)?;
            (
                Report::Verify(verify_machine(
                    &machine,
                    &alphabet,
                    manifest.config.algebraic_tol,
                )?),
                pick(false),
            )
        }
        Command::Classify { machine, samples } => {
            let machine = load_machine(machine)?;
            (
                Report::Verdict(classify_deleter(
                    &machine,
                    *samples as usize,
                    manifest.seed,
                )?),
                pick(false),
            )
        }
    })
}

fn build_manifest(cli: &Cli, args: &[String]) -> Result<RunManifest, Failure> {
    let mut config = ToleranceConfig::default();
    if let Some(tol) = cli.tol {
        config = config
            .with_algebraic_tol(tol)
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let seed = seed_from_env().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(RunManifest::new(seed, config, args.join(" ")))
}

/// Runs one command line (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = build_manifest(&cli, &args).and_then(|manifest| {
        let (report, format) = execute(&cli, &manifest)?;
        Ok(emit_report(&report, format)?)
    });
    let bytes = match result {
        Ok(bytes) => bytes,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
        Err(Failure::Numeric(e)) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_NUMERIC;
        }
    };
    let written = match &cli.out {
        Some(path) => {
            fs::write(path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => out
            .write_all(&bytes)
            .map_err(|e| format!("cannot write output: {e}")),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_IO
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!((parse_angle("45deg").unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((parse_angle("-90deg").unwrap() + PI / 2.0).abs() < 1e-15);
        assert!(parse_angle("abc").is_err());
        assert!(parse_angle("inf").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("256x128").unwrap(), (256, 128));
        assert!(parse_grid("4x256").is_err());
        assert!(parse_grid("256").is_err());
    }

    #[test]
    fn alphabets() {
        let a = parse_alphabet("0; 1;+;-;3,4", 2).unwrap();
        assert_eq!(a.len(), 5);
        assert!((a[4].amp(0).re - 0.6).abs() < 1e-15);
        assert!((a[3].amp(1).re + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(parse_alphabet("2", 2).is_err());
        assert!(parse_alphabet("1,2,3", 2).is_err());
        assert!(parse_alphabet("0,0", 2).is_err());
        assert!(parse_alphabet("", 2).is_err());
        assert!(parse_alphabet("x", 2).is_err());
    }
}
