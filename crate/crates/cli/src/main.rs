//! `nport`: scans, noise surfaces, verification suites and seeded sampling
//! for a two-path interferometer read out by a balanced N-port.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use nport_core::detectors::{
    ensemble_distribution, sample_distribution, thinned_distribution, LossSpec,
};
use nport_core::experiment::{DetectorKind, ExperimentSpec, InputState};
use nport_core::observables::MomentConvention;
use nport_core::phase::{noise_surface, DeltaPhi, Scan};
use nport_core::verify::run_suite;

#[derive(Parser)]
#[command(name = "nport", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coincidence moments and phase spread on a phase grid.
    Pattern {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Minimum phase spread over ranges of port counts and photon excesses.
    NoiseSurface {
        /// Port counts, e.g. `2-6` or `2,3,5`.
        #[arg(long, default_value = "2-6")]
        ports: String,
        /// Photon excesses, e.g. `0-12`.
        #[arg(long, default_value = "0-12")]
        excess: String,
        #[arg(long, value_enum, default_value_t = Convention::Reduced)]
        convention: Convention,
        /// Also compute the excess sheet under detector statistics.
        #[arg(long)]
        detector_sheet: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a named verification suite (`all` runs every suite).
    Verify {
        suite: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Seeded Monte Carlo detection record at a single phase.
    Sample {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// Flat JSON file with any of the flag values; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ports: Option<usize>,
    /// fock:J, excess:E, coherent:MEAN, noon:J, superposition:FILE, mixed:FILE
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    phase_points: Option<usize>,
    #[arg(long, value_enum)]
    convention: Option<Convention>,
    #[arg(long, value_enum)]
    detector: Option<Detector>,
    /// Per-channel amplitude transmissions `t1,...,tN`.
    #[arg(long, value_delimiter = ',')]
    loss: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    photon_cap: Option<u32>,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Convention {
    Reduced,
    Detector,
}

impl From<Convention> for MomentConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Reduced => MomentConvention::ReducedOperator,
            Convention::Detector => MomentConvention::DetectorStatistics,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Detector {
    Number,
    Threshold,
}

impl From<Detector> for DetectorKind {
    fn from(d: Detector) -> Self {
        match d {
            Detector::Number => DetectorKind::Number,
            Detector::Threshold => DetectorKind::Threshold,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Contents of a `--config` file.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    ports: Option<usize>,
    input: Option<String>,
    phase_points: Option<usize>,
    convention: Option<Convention>,
    detector: Option<Detector>,
    loss: Option<Vec<f64>>,
    seed: Option<u64>,
    photon_cap: Option<u32>,
    phi: Option<f64>,
    trials: Option<u64>,
}

#[derive(Deserialize)]
struct AmplitudeEntry {
    #[serde(rename = "J")]
    photons: u32,
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
struct MixtureEntry {
    weight: f64,
    fock: u32,
}

/// Failure that maps to an exit code.
enum Failure {
    Usage(String),
    Verification,
}

impl From<nport_core::Error> for Failure {
    fn from(e: nport_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_usage(&e.to_string()),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => report_usage(&msg),
    }
}

fn report_usage(msg: &str) -> ExitCode {
    let body = serde_json::json!({ "error": msg.trim() });
    eprintln!("{body}");
    ExitCode::from(2)
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Pattern { spec, out } => {
            let (spec, _) = build_spec(&spec)?;
            let scan = spec.scan()?;
            let text = match out.format {
                Format::Csv => scan_csv(&spec, &scan),
                Format::Json => scan_json(&spec, &scan),
            };
            write_output(&out.out, &text)
        }
        Command::NoiseSurface {
            ports,
            excess,
            convention,
            detector_sheet,
            out,
        } => {
            let ports: Vec<u32> = parse_range(&ports, "ports")?;
            let excess: Vec<u32> = parse_range(&excess, "excess")?;
            let surface = noise_surface(&ports, &excess, convention.into(), detector_sheet)?;
            let text = match out.format {
                Format::Csv => {
                    let mut s = String::from("N,E,sheet,log10_delta_phi\n");
                    for c in &surface.cells {
                        let value = c.log10().map_or_else(|| "na".to_string(), format_float);
                        let _ =
                            writeln!(s, "{},{},{},{}", c.ports, c.excess, c.sheet.as_str(), value);
                    }
                    s
                }
                Format::Json => to_json(&surface),
            };
            write_output(&out.out, &text)
        }
        Command::Verify { suite, out } => {
            let report = run_suite(&suite)?;
            write_output(out.as_deref().unwrap_or("-"), &to_json(&report))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Sample {
            spec,
            phi,
            trials,
            out,
        } => {
            let (spec, config) = build_spec(&spec)?;
            let Some(seed) = spec.seed else {
                return usage("sample requires --seed");
            };
            let phi = phi.or(config.phi).unwrap_or(std::f64::consts::FRAC_PI_2);
            let trials = trials.or(config.trials).unwrap_or(100_000);
            let dist = ensemble_distribution(&spec.output_states_at(phi)?)?;
            let dist = match &spec.loss {
                Some(loss) => thinned_distribution(&dist, loss)?,
                None => dist,
            };
            let report = sample_distribution(&dist, trials, seed)?;
            write_output(out.as_deref().unwrap_or("-"), &to_json(&report))
        }
    }
}

/// Merges the config file (if any) with flags into a validated spec.
fn build_spec(args: &SpecArgs) -> CliResult<(ExperimentSpec, Config)> {
    let config: Config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .or_else(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text).or_else(|e| usage(format!("bad config: {e}")))?
        }
        None => Config::default(),
    };
    let base = args.config.as_deref().and_then(Path::parent);

    let Some(ports) = args.ports.or(config.ports) else {
        return usage("--ports is required");
    };
    let Some(input) = args.input.as_deref().or(config.input.as_deref()) else {
        return usage("--input is required");
    };
    // Files named in a config are relative to the config; flags to the cwd.
    let input = if args.input.is_some() {
        parse_input(input, None)?
    } else {
        parse_input(input, base)?
    };
    let convention = args
        .convention
        .or(config.convention)
        .unwrap_or(Convention::Reduced);
    let mut spec = ExperimentSpec::new(ports, input, convention.into());
    if let Some(points) = args.phase_points.or(config.phase_points) {
        spec = spec.with_phase_points(points);
    }
    if let Some(detector) = args.detector.or(config.detector) {
        spec = spec.with_detector(detector.into());
    }
    if let Some(loss) = args.loss.as_ref().or(config.loss.as_ref()) {
        spec = spec.with_loss(LossSpec::real(loss)?);
    }
    if let Some(cap) = args.photon_cap.or(config.photon_cap) {
        spec.photon_cap = cap;
    }
    spec.seed = args.seed.or(config.seed);
    spec.validate()?;
    Ok((spec, config))
}

fn parse_input(text: &str, base: Option<&Path>) -> CliResult<InputState> {
    let Some((kind, value)) = text.split_once(':') else {
        return usage(format!("input {text:?} is not of the form kind:value"));
    };
    let count = |v: &str| {
        v.parse::<u32>()
            .or_else(|_| usage(format!("expected a photon number, got {v:?}")))
    };
    let path = |v: &str| match base {
        Some(dir) => dir.join(v),
        None => PathBuf::from(v),
    };
    Ok(match kind {
        "fock" => InputState::Fock {
            photons: count(value)?,
        },
        "excess" => InputState::Excess {
            excess: count(value)?,
        },
        "noon" => InputState::Noon {
            photons: count(value)?,
        },
        "coherent" => InputState::Coherent {
            mean: value
                .parse()
                .or_else(|_| usage(format!("expected a mean photon number, got {value:?}")))?,
        },
        "superposition" => {
            let entries: Vec<AmplitudeEntry> = read_json(&path(value))?;
            InputState::Superposition {
                amplitudes: entries
                    .into_iter()
                    .map(|e| (e.photons, Complex64::new(e.re, e.im)))
                    .collect(),
            }
        }
        "mixed" => {
            let entries: Vec<MixtureEntry> = read_json(&path(value))?;
            InputState::Mixed {
                components: entries.into_iter().map(|e| (e.weight, e.fock)).collect(),
            }
        }
        other => return usage(format!("unknown input kind {other:?}")),
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .or_else(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).or_else(|e| usage(format!("bad JSON in {}: {e}", path.display())))
}

/// Parses `a-b` or a comma list of such pieces.
fn parse_range(text: &str, what: &str) -> CliResult<Vec<u32>> {
    let bad = || Failure::Usage(format!("bad {what} range {text:?}"));
    let mut out = Vec::new();
    for piece in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match piece.split_once('-') {
            Some((a, b)) => {
                let (Ok(a), Ok(b)) = (a.trim().parse::<u32>(), b.trim().parse::<u32>()) else {
                    return Err(bad());
                };
                out.extend(a..=b);
            }
            None => out.push(piece.parse::<u32>().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return usage(format!("empty {what} range"));
    }
    Ok(out)
}

/// Shortest round-trip decimal; non-finite values as `inf`, `-inf`, `nan`.
fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

fn scan_csv(spec: &ExperimentSpec, scan: &Scan) -> String {
    let mut s =
        String::from("phi,mean,second_moment,variance,slope,delta_phi,convention,detector\n");
    for p in &scan.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            format_float(p.phi),
            format_float(p.moments.mean),
            format_float(p.moments.second_moment),
            format_float(p.moments.variance),
            format_float(p.slope),
            format_float(p.delta_phi.as_f64()),
            spec.convention.as_str(),
            spec.detector.as_str(),
        );
    }
    s
}

#[derive(Serialize)]
struct ScanRecord {
    phi: f64,
    mean: f64,
    second_moment: f64,
    variance: f64,
    slope: f64,
    /// `null` where the spread is infinite or undefined.
    delta_phi: Option<f64>,
    delta_phi_kind: &'static str,
    convention: &'static str,
    detector: &'static str,
}

fn scan_json(spec: &ExperimentSpec, scan: &Scan) -> String {
    let records: Vec<ScanRecord> = scan
        .points
        .iter()
        .map(|p| ScanRecord {
            phi: p.phi,
            mean: p.moments.mean,
            second_moment: p.moments.second_moment,
            variance: p.moments.variance,
            slope: p.slope,
            delta_phi: p.delta_phi.finite(),
            delta_phi_kind: match p.delta_phi {
                DeltaPhi::Finite(_) => "finite",
                DeltaPhi::Infinite => "infinite",
                DeltaPhi::Undefined => "undefined",
            },
            convention: spec.convention.as_str(),
            detector: spec.detector.as_str(),
        })
        .collect();
    to_json(&records)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn write_output(target: &str, text: &str) -> CliResult<()> {
    if target == "-" {
        let mut stdout = io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        stdout.flush()?;
    } else {
        fs::write(target, text)?;
    }
    Ok(())
}
