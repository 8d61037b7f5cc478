use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pcroot::analysis::{format_from_log, p_min, parse_log_value, range_report, root_index};
use pcroot::bayesnet::{compile_with, parse_bn, CompileOptions};
use pcroot::circuit::{check_structure, parse_circuit, write_circuit};
use pcroot::codegen::{emit_header, emit_source, CType, CodegenOptions};
use pcroot::engine::{evaluate, evaluate_rescaled, mpe, Domain, EvalResult, Strategy};
use pcroot::transform::{nth_root_weights, recover_log, scale_weights};
use pcroot::{Circuit, Evidence, Format, Precision};

/// Low-precision inference for deterministic probabilistic circuits.
#[derive(Parser)]
#[command(name = "pcroot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report smoothness, decomposability and determinism as JSON.
    Check { circuit: PathBuf },
    /// Compile a Bayesian network into a circuit.
    Compile {
        network: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Comma-separated topological order (names or indices).
        #[arg(long)]
        order: Option<String>,
    },
    /// Smallest non-zero output over complete assignments.
    Pmin { circuit: PathBuf },
    /// Root index needed to keep a circuit inside a format's normal range.
    RootIndex(RootIndexArgs),
    /// Apply the n-th root or a uniform scale to the weights.
    Transform(TransformArgs),
    /// Evaluate under evidence and print the result as JSON.
    Eval(EvalArgs),
    /// Most probable explanation as JSON.
    Mpe {
        circuit: PathBuf,
        #[arg(long, default_value = "")]
        evidence: String,
    },
    /// Evaluate a dataset of evidence rows at several precisions into CSV.
    Sweep(SweepArgs),
    /// Emit straight-line C (a `.c` file and a matching `.h`).
    Codegen(CodegenArgs),
}

#[derive(Args)]
struct RootIndexArgs {
    #[arg(long, conflicts_with = "pmin", required_unless_present = "pmin")]
    circuit: Option<PathBuf>,
    /// P_min as text, e.g. `4.6e-271`; parsed without forming the value.
    #[arg(long)]
    pmin: Option<String>,
    #[arg(long)]
    precision: Format,
    #[arg(long, default_value_t = 0)]
    margin: u32,
}

#[derive(Args)]
struct TransformArgs {
    circuit: PathBuf,
    #[arg(long, conflicts_with = "scale", required_unless_present = "scale")]
    nth_root: Option<u32>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    circuit: PathBuf,
    #[arg(long, default_value = "")]
    evidence: String,
    #[arg(long, default_value = "f64")]
    precision: Format,
    /// Gradual underflow instead of flush-to-zero.
    #[arg(long)]
    no_ftz: bool,
    /// Binary64 log-space evaluation.
    #[arg(long, conflicts_with_all = ["rescale"])]
    log_domain: bool,
    /// Dynamic rescaling factor.
    #[arg(long)]
    rescale: Option<f64>,
    #[arg(long, default_value = "inline", requires = "rescale")]
    strategy: Strategy,
}

#[derive(Args)]
struct SweepArgs {
    circuit: PathBuf,
    /// One evidence line per row.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "f16,f32,f64")]
    precisions: Vec<Format>,
    #[arg(long)]
    no_ftz: bool,
    #[arg(long)]
    rescale: Option<f64>,
    #[arg(long, default_value = "inline", requires = "rescale")]
    strategy: Strategy,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CodegenArgs {
    circuit: PathBuf,
    #[arg(long, default_value = "f32")]
    precision: Format,
    #[arg(long, default_value = "pc")]
    prefix: String,
    /// Source path; the header is written next to it with a `.h` extension.
    #[arg(short, long)]
    output: PathBuf,
    /// Include `<prefix>_recover`.
    #[arg(long)]
    recovery: bool,
}

#[derive(Debug)]
enum CliError {
    Core(pcroot::Error),
    Io(PathBuf, std::io::Error),
}

impl From<pcroot::Error> for CliError {
    fn from(e: pcroot::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_refusal() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_owned(), e))
}

fn load_circuit(path: &Path) -> CliResult<Circuit> {
    Ok(parse_circuit(&read(path)?)?)
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn precision(format: Format, no_ftz: bool) -> Precision {
    if no_ftz {
        Precision::gradual(format)
    } else {
        Precision::new(format)
    }
}

#[derive(Serialize)]
struct EvalOutput {
    precision: &'static str,
    ftz: bool,
    domain: Domain,
    #[serde(flatten)]
    result: EvalResult,
}

#[derive(Serialize)]
struct MpeOutput {
    assignment: Vec<usize>,
    named: BTreeMap<String, usize>,
    log_value: f64,
    recovered_log_value: f64,
    probability: f64,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Check { circuit } => print_json(&check_structure(&load_circuit(&circuit)?)),
        Command::Compile {
            network,
            output,
            order,
        } => {
            let bn = parse_bn(&read(&network)?)?;
            let order = order
                .map(|text| {
                    text.split(',')
                        .map(|tok| {
                            let tok = tok.trim();
                            bn.var_index(tok)
                                .or_else(|| tok.parse().ok())
                                .ok_or_else(|| {
                                    pcroot::Error::BadOrder(format!("unknown variable `{tok}`"))
                                })
                        })
                        .collect::<pcroot::Result<Vec<_>>>()
                })
                .transpose()?;
            let c = compile_with(
                &bn,
                &CompileOptions {
                    order,
                    memoize: true,
                },
            )?;
            write(&output, &write_circuit(&c))?;
            eprintln!("{} nodes written to {}", c.node_count(), output.display());
        }
        Command::Pmin { circuit } => {
            let c = load_circuit(&circuit)?;
            let r = p_min(&c)?;
            let log = recover_log(r.log_value, c.transform(), c.num_vars());
            println!("{}", format_from_log(log, 6));
            println!("log10 {:.6}", log / std::f64::consts::LN_10);
        }
        Command::RootIndex(args) => {
            let log_p = match (&args.circuit, &args.pmin) {
                (Some(path), _) => {
                    let c = load_circuit(path)?;
                    recover_log(p_min(&c)?.log_value, c.transform(), c.num_vars())
                }
                (None, Some(text)) => parse_log_value(text)?,
                (None, None) => unreachable!("clap requires one of the two"),
            };
            println!(
                "{}",
                root_index(log_p, Precision::new(args.precision), args.margin)?
            );
        }
        Command::Transform(args) => {
            let c = load_circuit(&args.circuit)?;
            let out = match (args.nth_root, args.scale) {
                (Some(n), _) => nth_root_weights(&c, n)?,
                (None, Some(s)) => scale_weights(&c, s)?,
                (None, None) => unreachable!("clap requires one of the two"),
            };
            write(&args.output, &write_circuit(&out))?;
        }
        Command::Eval(args) => {
            let c = load_circuit(&args.circuit)?;
            let e = Evidence::parse(&args.evidence, c.cardinalities(), c.names())?;
            let (p, domain) = if args.log_domain {
                (Precision::F64, Domain::Log)
            } else {
                (precision(args.precision, args.no_ftz), Domain::Linear)
            };
            let result = match args.rescale {
                Some(sf) => evaluate_rescaled(&c, &e, p, sf, args.strategy)?,
                None => evaluate(&c, &e, p, domain)?,
            };
            print_json(&EvalOutput {
                precision: p.format.short_name(),
                ftz: p.flush_to_zero,
                domain,
                result,
            });
        }
        Command::Mpe { circuit, evidence } => {
            let c = load_circuit(&circuit)?;
            let e = Evidence::parse(&evidence, c.cardinalities(), c.names())?;
            let r = mpe(&c, &e)?;
            let assignment = r.assignment.0;
            print_json(&MpeOutput {
                named: assignment
                    .iter()
                    .enumerate()
                    .map(|(v, &x)| (c.var_name(v), x))
                    .collect(),
                assignment,
                log_value: r.log_value,
                recovered_log_value: r.recovered_log_value,
                probability: r.recovered_log_value.exp(),
            });
        }
        Command::Sweep(args) => {
            let c = load_circuit(&args.circuit)?;
            let evidence = read(&args.dataset)?
                .lines()
                .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                .map(|l| Evidence::parse(l, c.cardinalities(), c.names()))
                .collect::<pcroot::Result<Vec<_>>>()?;
            let precisions: Vec<_> = args
                .precisions
                .iter()
                .map(|&f| precision(f, args.no_ftz))
                .collect();
            let report = range_report(
                &c,
                &evidence,
                &precisions,
                args.rescale.map(|sf| (sf, args.strategy)),
            )?;
            match &args.report {
                Some(path) => {
                    write(path, &report.to_csv())?;
                    let ops = report.total_ops();
                    println!("rows {}", report.rows.len());
                    println!("ops mul={} add={}", ops.mul, ops.add);
                }
                None => print!("{}", report.to_csv()),
            }
        }
        Command::Codegen(args) => {
            let c = load_circuit(&args.circuit)?;
            let ctype = CType::try_from(args.precision)?;
            let mut opts = CodegenOptions::new(ctype, args.prefix);
            opts.emit_recovery = args.recovery;
            opts.log_p_min = p_min(&c)
                .ok()
                .map(|r| recover_log(r.log_value, c.transform(), c.num_vars()));
            let source = emit_source(&c, &opts)?;
            let header = emit_header(&c, &opts)?;
            write(&args.output.with_extension("h"), &header)?;
            write(&args.output, &source)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
