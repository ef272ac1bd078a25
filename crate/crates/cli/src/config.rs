use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use exgraph::pipeline::DEFAULT_BLOCK_BUDGET;
use exgraph::{Dtype, Endian, Format, GraphKind, SimplifyStep, MAX_DIM, SCHWEFEL_BOUNDS};

use crate::error::{CliError, CliResult, EXIT_CODES};

/// Overrides the default worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "EXGRAPH_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Schwefel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    /// Structured-text graph document.
    Text,
    /// Two CSV tables, PATH.nodes.csv and PATH.arcs.csv.
    Tabular,
}

/// Compute, simplify and export extremum graphs of gridded scalar fields.
#[derive(Debug, Parser)]
#[command(name = "exgraph", version, after_help = EXIT_CODES)]
pub struct Args {
    /// Raw sample file (row-major, first axis fastest).
    #[arg(long = "in", value_name = "PATH", conflicts_with = "generate")]
    pub input: Option<PathBuf>,

    /// Synthesize the field instead of reading it.
    #[arg(long, value_enum)]
    pub generate: Option<Generator>,

    /// Grid extents, first axis fastest.
    #[arg(long, value_delimiter = ',', value_name = "D0,D1,...")]
    pub dims: Vec<usize>,

    /// Sample type of the input (u8..u64, i8..i64, f32, f64).
    #[arg(long)]
    pub dtype: Option<Dtype>,

    #[arg(long, default_value = "le", value_name = "le|be")]
    pub endian: Endian,

    #[arg(long, default_value = "max", value_name = "max|min")]
    pub kind: GraphKind,

    /// Vertices per block including ghost slabs; accepts forms like 1e6.
    #[arg(long, alias = "blocks-budget", value_parser = parse_count, value_name = "N")]
    pub block_budget: Option<usize>,

    /// Worker threads (default: EXGRAPH_THREADS, else all cores).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,

    #[arg(long, value_enum, default_value = "on")]
    pub geometry: Toggle,

    /// Simplification step, applied in the order given:
    /// bundle, persist:T or saturate:PLO,PHI.
    #[arg(long = "simplify", value_name = "STEP")]
    pub simplify: Vec<SimplifyStep>,

    /// Graph output path.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "text")]
    pub format: OutFormat,

    /// JSON run report (or bench report) path.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,

    /// Benchmark sweep: threads:LIST, blocks:LIST or resolution:LIST.
    #[arg(long, value_name = "SWEEP")]
    pub bench: Option<Sweep>,

    /// Generator domain, the same on every axis.
    #[arg(long, value_delimiter = ',', num_args = 1, value_name = "LO,HI", allow_hyphen_values = true)]
    pub bounds: Option<Vec<f64>>,

    /// Print stage progress to stdout.
    #[arg(long)]
    pub progress: bool,
}

/// Parses a positive integer, also written as a float like `1e6`.
fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return if n > 0 { Ok(n) } else { Err("must be positive".into()) };
    }
    let x: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(x.is_finite() && x >= 1.0 && x.fract() == 0.0 && x <= usize::MAX as f64) {
        return Err(format!("'{s}' is not a positive integer"));
    }
    Ok(x as usize)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sweep {
    Threads(Vec<usize>),
    Blocks(Vec<usize>),
    /// Samples per axis.
    Resolution(Vec<usize>),
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Threads(_) => "threads",
            Sweep::Blocks(_) => "blocks",
            Sweep::Resolution(_) => "resolution",
        }
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, list) = s
            .split_once(':')
            .ok_or_else(|| format!("expected KIND:LIST, got '{s}'"))?;
        let points = list
            .split(',')
            .map(|p| parse_count(p.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        if points.is_empty() {
            return Err("empty sweep".into());
        }
        match kind {
            "threads" => Ok(Sweep::Threads(points)),
            "blocks" => Ok(Sweep::Blocks(points)),
            "resolution" => Ok(Sweep::Resolution(points)),
            other => Err(format!("unknown sweep '{other}' (threads, blocks or resolution)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Raw { path: PathBuf, dtype: Dtype, endian: Endian },
    Schwefel { lo: f64, hi: f64, dtype: Dtype },
}

/// A validated invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: Source,
    pub dims: Vec<usize>,
    pub kind: GraphKind,
    pub budget: usize,
    pub workers: usize,
    pub geometry: bool,
    pub steps: Vec<SimplifyStep>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub report: Option<PathBuf>,
    pub bench: Option<Sweep>,
    pub progress: bool,
}

fn default_workers(env: Option<&str>) -> CliResult<usize> {
    match env {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::usage(format!("{THREADS_ENV}='{v}' is not a positive integer"))),
        },
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

impl RunConfig {
    pub fn from_args(args: Args) -> CliResult<Self> {
        let env = std::env::var(THREADS_ENV).ok();
        Self::from_args_with_env(args, env.as_deref())
    }

    pub fn from_args_with_env(args: Args, threads_env: Option<&str>) -> CliResult<Self> {
        let resolution = matches!(args.bench, Some(Sweep::Resolution(_)));
        let source = match (args.input, args.generate) {
            (Some(path), None) => {
                if resolution {
                    return Err(CliError::usage("a resolution sweep samples the generator; drop --in"));
                }
                if args.bounds.is_some() {
                    return Err(CliError::usage("--bounds applies to --generate only"));
                }
                let dtype = args
                    .dtype
                    .ok_or_else(|| CliError::usage("--dtype is required with --in"))?;
                if dtype == Dtype::I128 {
                    return Err(CliError::usage("i128 is not an input sample type"));
                }
                Source::Raw { path, dtype, endian: args.endian }
            }
            (None, Some(Generator::Schwefel)) => {
                let (lo, hi) = match args.bounds.as_deref() {
                    None => SCHWEFEL_BOUNDS,
                    Some(&[lo, hi]) if lo < hi => (lo, hi),
                    Some(_) => return Err(CliError::usage("--bounds needs LO,HI with LO < HI")),
                };
                let dtype = args.dtype.unwrap_or(Dtype::F64);
                if !dtype.is_float() {
                    return Err(CliError::usage("--generate produces f32 or f64 samples"));
                }
                Source::Schwefel { lo, hi, dtype }
            }
            (None, None) if resolution => Source::Schwefel {
                lo: SCHWEFEL_BOUNDS.0,
                hi: SCHWEFEL_BOUNDS.1,
                dtype: args.dtype.unwrap_or(Dtype::F64),
            },
            (None, None) => return Err(CliError::usage("one of --in or --generate is required")),
            (Some(_), Some(_)) => return Err(CliError::usage("--in and --generate conflict")),
        };

        let dims = args.dims;
        if dims.is_empty() && !resolution {
            return Err(CliError::usage("--dims is required"));
        }
        if dims.len() > MAX_DIM {
            return Err(CliError::usage(format!(
                "{} dimensions requested; at most {MAX_DIM} are supported",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(CliError::usage("every extent in --dims must be positive"));
        }
        if let Some(n) = args.threads {
            if n == 0 {
                return Err(CliError::usage("--threads must be positive"));
            }
        }
        let workers = match args.threads {
            Some(n) => n,
            None => default_workers(threads_env)?,
        };
        if args.bench.is_some() && args.out.is_some() {
            return Err(CliError::usage("--bench writes a report only; drop --out"));
        }
        if let Some(p) = &args.out {
            if args.report.as_ref() == Some(p) {
                return Err(CliError::usage("--out and --report name the same file"));
            }
        }

        Ok(RunConfig {
            source,
            dims,
            kind: args.kind,
            budget: args.block_budget.unwrap_or(DEFAULT_BLOCK_BUDGET),
            workers,
            geometry: args.geometry == Toggle::On,
            steps: args.simplify,
            out: args.out,
            format: match args.format {
                OutFormat::Text => Format::Text,
                OutFormat::Tabular => Format::Tabular,
            },
            report: args.report,
            bench: args.bench,
            progress: args.progress,
        })
    }
}
