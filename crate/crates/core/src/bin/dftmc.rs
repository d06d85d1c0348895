use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dftmc::approx::{approx_mttf, approx_unreliability, ApproxError, ApproxOptions, ApproxOutcome};
use dftmc::dft::{Dft, Valuation};
use dftmc::io::{galileo, results};
use dftmc::measures::{evaluate_entries, sensitivity_sweep, Measure, MeasureError, MeasureParams};
use dftmc::rewrite::rewrite_with_report;
use dftmc::scenario::{parse_scenario, synthesize};
use dftmc::statespace::{build_ctmc, to_dot, to_transition_list, BuildOptions, StateSpaceError};

/// Exit codes.
const IO_ERROR: u8 = 1;
const VALIDATION: u8 = 2;
const UNDEFINED: u8 = 3;
const IMPRECISE: u8 = 4;

#[derive(Parser)]
#[command(name = "dftmc", version, about = "Dynamic fault tree synthesis and safety analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the complete fault tree of a scenario document.
    Synth {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simplify a fault tree; applied rules go to stderr.
    Rewrite {
        /// Tree file, or `-` for stdin.
        dft: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute measures on the full state space.
    Check {
        dft: PathBuf,
        /// Comma-separated measure names.
        #[arg(short, long, value_delimiter = ',', required = true)]
        measure: Vec<String>,
        /// Horizon of time-bounded measures (hours).
        #[arg(short, long, default_value_t = 10_000.0)]
        time: f64,
        /// Operational lifetime for AFH (hours).
        #[arg(long, default_value_t = 10_000.0)]
        lifetime: f64,
        /// Drive-cycle length for FLOD and SILFO (hours).
        #[arg(long, default_value_t = 1.0)]
        drivecycle: f64,
        /// Parameter override `name=value`; repeatable.
        #[arg(long = "param", value_parser = parse_assignment)]
        params: Vec<(String, f64)>,
        /// Basic events assumed failed at the start.
        #[arg(long, value_delimiter = ',')]
        evidence: Vec<String>,
        #[arg(long, default_value_t = dftmc::statespace::DEFAULT_STATE_LIMIT)]
        max_states: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bound a measure by exploring the state space partially.
    Approx {
        dft: PathBuf,
        #[arg(short, long, value_enum)]
        measure: ApproxMeasure,
        #[arg(long, default_value_t = 0.01)]
        rel_err: f64,
        #[arg(short, long, default_value_t = 10_000.0)]
        time: f64,
        #[arg(long = "param", value_parser = parse_assignment)]
        params: Vec<(String, f64)>,
        #[arg(long, default_value_t = 1000)]
        initial_budget: usize,
        #[arg(long, default_value_t = dftmc::statespace::DEFAULT_STATE_LIMIT)]
        max_states: usize,
        /// Also write one CSV row per refinement round here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the CTMC of a tree.
    Export {
        dft: PathBuf,
        #[arg(long, value_enum)]
        ctmc: ExportFormat,
        #[arg(long = "param", value_parser = parse_assignment)]
        params: Vec<(String, f64)>,
        #[arg(long, default_value_t = dftmc::statespace::DEFAULT_STATE_LIMIT)]
        max_states: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate one measure for every combination of parameter values.
    Sweep {
        dft: PathBuf,
        #[arg(short, long)]
        measure: String,
        /// `name=v1,v2,...`; repeatable, combined as a cartesian product.
        #[arg(long = "param", value_parser = parse_range, required = true)]
        params: Vec<(String, Vec<f64>)>,
        #[arg(short, long, default_value_t = 10_000.0)]
        time: f64,
        #[arg(long, default_value_t = 10_000.0)]
        lifetime: f64,
        #[arg(long, default_value_t = 1.0)]
        drivecycle: f64,
        #[arg(long, default_value_t = dftmc::statespace::DEFAULT_STATE_LIMIT)]
        max_states: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ApproxMeasure {
    Unreliability,
    Mttf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    List,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("invalid number `{v}`"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_range(s: &str) -> Result<(String, Vec<f64>), String> {
    let (k, vs) = s.split_once('=').ok_or("expected name=v1,v2,...")?;
    let values = vs
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("invalid number `{v}`")))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok((k.trim().to_string(), values))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(IO_ERROR, e)
    }
}

impl From<MeasureError> for Failure {
    fn from(e: MeasureError) -> Self {
        let code = match &e {
            MeasureError::Undefined { .. } | MeasureError::NoDegradedStates => UNDEFINED,
            MeasureError::StateSpace(s) => return s.clone().into(),
            MeasureError::Engine(_) => IO_ERROR,
            _ => VALIDATION,
        };
        Failure::new(code, e)
    }
}

impl From<StateSpaceError> for Failure {
    fn from(e: StateSpaceError) -> Self {
        let code = match e {
            StateSpaceError::StateSpaceLimitExceeded { .. } => IO_ERROR,
            _ => VALIDATION,
        };
        Failure::new(code, e)
    }
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path)
            .map_err(|e| Failure::new(IO_ERROR, format!("{}: {e}", path.display())))
    }
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::new(IO_ERROR, format!("{}: {e}", p.display()))),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn load_dft(path: &PathBuf) -> Result<Dft, Failure> {
    let text = read_input(path)?;
    galileo::parse(&text).map_err(|e| Failure::new(VALIDATION, e))
}

fn valuation(dft: &Dft, params: &[(String, f64)]) -> Result<Valuation, Failure> {
    let mut v = Valuation::new();
    for (k, x) in params {
        if !dft.parameters().contains_key(k) {
            return Err(MeasureError::MissingParameter(k.clone()).into());
        }
        v.insert(k.clone(), *x);
    }
    Ok(v)
}

fn measures(names: &[String]) -> Result<Vec<Measure>, Failure> {
    names
        .iter()
        .map(|n| n.parse::<Measure>().map_err(|e| Failure::new(VALIDATION, e)))
        .collect()
}

fn approx_output(
    outcome: &ApproxOutcome,
    measure: ApproxMeasure,
    time: f64,
    trace: &Option<PathBuf>,
) -> (String, Option<String>) {
    let (name, t, prob) = match measure {
        ApproxMeasure::Unreliability => ("unreliability", Some(time), true),
        ApproxMeasure::Mttf => ("mttf", None, false),
    };
    let csv = results::interval_csv(name, t, prob, &outcome.interval);
    let trace = trace.as_ref().map(|_| results::trace_csv(name, &outcome.trace));
    (csv, trace)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth { scenario, output } => {
            let text = read_input(&scenario)?;
            let s = parse_scenario(&text).map_err(|e| Failure::new(VALIDATION, e))?;
            let dft = synthesize(&s).map_err(|e| Failure::new(VALIDATION, e))?;
            write_output(&output, &galileo::serialize(&dft))
        }
        Command::Rewrite { dft, output } => {
            let dft = load_dft(&dft)?;
            let (out, report) = rewrite_with_report(&dft);
            for (rule, what) in &report.steps {
                eprintln!("{rule:?}: {what}");
            }
            for p in &report.protected {
                eprintln!("kept `{p}`: referenced by a label");
            }
            write_output(&output, &galileo::serialize(&out))
        }
        Command::Check {
            dft,
            measure,
            time,
            lifetime,
            drivecycle,
            params,
            evidence,
            max_states,
            output,
        } => {
            let dft = load_dft(&dft)?;
            let ms = measures(&measure)?;
            let v = valuation(&dft, &params)?;
            let opts = BuildOptions {
                max_states,
                evidence,
            };
            let ctmc = build_ctmc(&dft, &v, &opts)?;
            let p = MeasureParams {
                t: time,
                lifetime,
                drivecycle,
            };
            let rows = evaluate_entries(&ctmc, &ms, &p)?;
            for r in &rows {
                if let Some(n) = &r.notice {
                    eprintln!("{}: {n}", r.name);
                }
                if let Some(w) = &r.witness {
                    eprintln!("{}: attained in {w}", r.name);
                }
            }
            write_output(&output, &results::results_csv(&rows))
        }
        Command::Approx {
            dft,
            measure,
            rel_err,
            time,
            params,
            initial_budget,
            max_states,
            trace,
            output,
        } => {
            let dft = load_dft(&dft)?;
            let v = valuation(&dft, &params)?;
            let opts = ApproxOptions {
                rel_err,
                initial_budget,
                max_states,
                ..ApproxOptions::default()
            };
            let result = match measure {
                ApproxMeasure::Unreliability => approx_unreliability(&dft, &v, time, &opts),
                ApproxMeasure::Mttf => approx_mttf(&dft, &v, &opts),
            };
            let (outcome, imprecise) = match result {
                Ok(o) => (o, false),
                Err(ApproxError::CapReachedWithoutPrecision(o)) => (*o, true),
                Err(e @ ApproxError::Engine(_)) => return Err(Failure::new(IO_ERROR, e)),
                Err(e) => return Err(Failure::new(VALIDATION, e)),
            };
            let (csv, trace_csv) = approx_output(&outcome, measure, time, &trace);
            write_output(&output, &csv)?;
            if let (Some(path), Some(t)) = (&trace, trace_csv) {
                write_output(&Some(path.clone()), &t)?;
            }
            if outcome.interval.lower == f64::INFINITY {
                return Err(Failure::new(
                    UNDEFINED,
                    "mttf is undefined: a fail-safe state is reachable with positive probability",
                ));
            }
            if imprecise {
                return Err(Failure::new(
                    IMPRECISE,
                    format!(
                        "state cap of {max_states} reached before the requested precision; \
                         the bounds above are still sound"
                    ),
                ));
            }
            Ok(())
        }
        Command::Export {
            dft,
            ctmc,
            params,
            max_states,
            output,
        } => {
            let dft = load_dft(&dft)?;
            let v = valuation(&dft, &params)?;
            let c = build_ctmc(
                &dft,
                &v,
                &BuildOptions {
                    max_states,
                    ..BuildOptions::default()
                },
            )?;
            let text = match ctmc {
                ExportFormat::Dot => to_dot(&c),
                ExportFormat::List => to_transition_list(&c),
            };
            write_output(&output, &text)
        }
        Command::Sweep {
            dft,
            measure,
            params,
            time,
            lifetime,
            drivecycle,
            max_states,
            output,
        } => {
            let dft = load_dft(&dft)?;
            let m = measures(&[measure])?[0];
            let mut grid = vec![Valuation::new()];
            for (k, values) in &params {
                grid = grid
                    .into_iter()
                    .flat_map(|v| {
                        values.iter().map(move |x| {
                            let mut v = v.clone();
                            v.insert(k.clone(), *x);
                            v
                        })
                    })
                    .collect();
            }
            let p = MeasureParams {
                t: time,
                lifetime,
                drivecycle,
            };
            let opts = BuildOptions {
                max_states,
                ..BuildOptions::default()
            };
            let rows = sensitivity_sweep(&dft, &grid, m, &p, &opts)?;
            let names: Vec<String> = params.iter().map(|(k, _)| k.clone()).collect();
            write_output(&output, &results::sweep_csv(&names, &rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
