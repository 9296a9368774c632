use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use synthkit::executor::{enumerate, render_program, EnumBudget, RunStats, Status, SynthesisResult};
use synthkit::fmgd::{self, HyperDistribution, HyperParams};
use synthkit::ilp::{emit_ilp, write_lp_file, IlpMode};
use synthkit::ir::{IOExamples, InstanceGraph, IoFile};
use synthkit::smt::emit_smtlib;
use synthkit::solver::{SolutionFormat, SolverConfig};
use synthkit::zoo::list_tasks;

mod input;
mod record;
mod report;

use input::{parse_const, Loaded, ModelArgs};
use record::RunRecord;

const SMT_SOLVER_ENV: &str = "SYNTHKIT_SMT_SOLVER";
const ILP_SOLVER_ENV: &str = "SYNTHKIT_ILP_SOLVER";

#[derive(Parser, Debug)]
#[command(name = "synthkit", version, about = "Program synthesis from IO examples over differentiable and constraint backends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a program consistent with the examples.
    Synth(SynthArgs),
    /// Write the encoding a backend would solve.
    Export(ExportArgs),
    /// Generate IO examples for a bundled task.
    Gen(GenArgs),
    /// Summarize a records file as a task × backend table.
    Report(ReportArgs),
    /// List the bundled tasks.
    Tasks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    Fmgd,
    Smt,
    Ilp,
    Enum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolutionArg {
    NameValue,
    Cbc,
}

#[derive(clap::Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    backend: Backend,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
    timeout: u64,
    /// Random restarts (fmgd).
    #[arg(long)]
    restarts: Option<usize>,
    /// Hyperparameters as JSON (fmgd); unspecified fields keep their defaults.
    #[arg(long)]
    hypers: Option<PathBuf>,
    /// Run a random hyperparameter search over this many sets (fmgd).
    #[arg(long)]
    search_sets: Option<usize>,
    /// Distribution for --search-sets as JSON; the bundled one by default.
    #[arg(long, requires = "search_sets")]
    distribution: Option<PathBuf>,
    /// Stop enumeration after this many candidates (enum).
    #[arg(long)]
    max_candidates: Option<u64>,
    /// External solver executable (smt, ilp). Falls back to
    /// SYNTHKIT_SMT_SOLVER / SYNTHKIT_ILP_SOLVER.
    #[arg(long)]
    solver_path: Option<PathBuf>,
    /// Extra solver argument, placed before the input file; may contain
    /// `{input}` and `{solution}` placeholders.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
    /// Solution file format written by the ILP solver.
    #[arg(long, value_enum, default_value_t = SolutionArg::NameValue)]
    solution_format: SolutionArg,
    /// Append the run record to this file instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Smt2,
    Lp,
    LpRelaxed,
    Ir,
}

#[derive(clap::Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    format: ExportFormat,
    /// Output file; `<name>.<ext>` in the current directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    #[arg(long)]
    task: String,
    #[arg(long = "const", value_name = "NAME=INT", value_parser = parse_const)]
    consts: Vec<(String, i64)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ReportArgs {
    /// Records file written by `synth --out`.
    records: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(args) => synth(&args),
        Command::Export(args) => export(&args).map(|()| ExitCode::SUCCESS),
        Command::Gen(args) => gen(&args).map(|()| ExitCode::SUCCESS),
        Command::Report(args) => report(&args).map(|()| ExitCode::SUCCESS),
        Command::Tasks => {
            tasks();
            Ok(ExitCode::SUCCESS)
        }
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}

fn synth(args: &SynthArgs) -> Result<ExitCode> {
    let loaded = Loaded::load(&args.model)?;
    let ig = loaded.instance(&args.model)?;
    let timeout = Duration::from_secs(args.timeout);
    let seed = args.model.seed;
    let result = match args.backend {
        Backend::Enum => {
            enumerate(&ig, EnumBudget { max_candidates: args.max_candidates, time_limit: Some(timeout) })
        }
        Backend::Fmgd => synth_fmgd(args, &ig, timeout)?,
        Backend::Smt => match solver_config(args, SMT_SOLVER_ENV, timeout) {
            Some(cfg) => synthkit::smt::synthesize(&ig, &cfg),
            None => unconfigured(&ig, "smt"),
        },
        Backend::Ilp => match solver_config(args, ILP_SOLVER_ENV, timeout) {
            Some(cfg) => synthkit::ilp::synthesize(&ig, &cfg),
            None => unconfigured(&ig, "ilp"),
        },
    };
    if let Some(p) = result.program() {
        print!("{}", render_program(&ig.graph, p));
    }
    let record = RunRecord::new(&loaded.name, seed, &result);
    match &args.out {
        Some(path) => record.append_to(path)?,
        None => println!("{}", record.to_line()),
    }
    let detail = record.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default();
    eprintln!("{} {} in {:.2} s{detail}", result.backend, record.status, record.wall_time_s);
    Ok(if result.is_success() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn synth_fmgd(args: &SynthArgs, ig: &InstanceGraph, timeout: Duration) -> Result<SynthesisResult> {
    let start = Instant::now();
    let deadline = Some(start + timeout);
    let mut h = match &args.hypers {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str::<HyperParams>(&text).with_context(|| format!("{} is not valid", path.display()))?
        }
        None => HyperParams::default(),
    };
    h.seed = args.model.seed;
    if let Some(r) = args.restarts {
        h.restarts = r;
    }
    h.validate()?;
    let Some(sets) = args.search_sets else {
        return Ok(fmgd::synthesize(ig, &h, deadline));
    };
    let dist = match &args.distribution {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            HyperDistribution::from_json(&text)?
        }
        None => HyperDistribution::default(),
    };
    let dp = fmgd::relax(ig);
    let search = fmgd::random_search_until(&dp, &dist, sets, h.restarts, h.seed, deadline);
    let (best, run) = &search.sets[search.best];
    let mut result = fmgd::result_from_run(ig, run, start);
    result.stats.extra.insert("hyper_sets".into(), serde_json::json!(search.sets.len()));
    result.stats.extra.insert("average_success".into(), serde_json::json!(search.average_success));
    result.stats.extra.insert("best_hypers".into(), serde_json::to_value(best)?);
    Ok(result)
}

fn solver_config(args: &SynthArgs, env: &str, timeout: Duration) -> Option<SolverConfig> {
    let path = args
        .solver_path
        .clone()
        .or_else(|| std::env::var_os(env).filter(|v| !v.is_empty()).map(PathBuf::from))?;
    let mut cfg = SolverConfig::new(path).with_timeout(timeout).with_args(args.solver_args.clone());
    cfg.solution_format = match args.solution_format {
        SolutionArg::NameValue => SolutionFormat::NameValue,
        SolutionArg::Cbc => SolutionFormat::Cbc,
    };
    Some(cfg)
}

fn unconfigured(ig: &InstanceGraph, backend: &str) -> SynthesisResult {
    let io = IOExamples::new(ig.examples.clone());
    let status = Status::SolverError("no solver configured".into());
    SynthesisResult::new(&ig.graph, &io, backend, status, Duration::ZERO, RunStats::default())
}

fn export(args: &ExportArgs) -> Result<()> {
    let loaded = Loaded::load(&args.model)?;
    let (text, ext) = match args.format {
        ExportFormat::Ir => (loaded.graph.dump(), "ir"),
        ExportFormat::Smt2 => (emit_smtlib(&loaded.instance(&args.model)?).text, "smt2"),
        ExportFormat::Lp => (write_lp_file(&emit_ilp(&loaded.instance(&args.model)?, IlpMode::Integral)), "lp"),
        ExportFormat::LpRelaxed => {
            (write_lp_file(&emit_ilp(&loaded.instance(&args.model)?, IlpMode::Relaxed)), "relaxed.lp")
        }
    };
    let path = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{ext}", loaded.name)));
    write_file(&path, &text)?;
    println!("{}", path.display());
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    let model = ModelArgs { model: None, task: Some(args.task.clone()), io: None, consts: args.consts.clone(), seed: args.seed };
    let loaded = Loaded::load(&model)?;
    let io = loaded.examples(&model)?;
    let mut text = IoFile::from_examples(&loaded.graph, &io).to_json();
    text.push('\n');
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report(args: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.records)
        .with_context(|| format!("cannot read {}", args.records.display()))?;
    let records = report::parse_records(&text, &mut |w| eprintln!("warning: {w}"));
    print!("{}", report::render_grid(&records));
    Ok(())
}

fn tasks() {
    println!("{:<22} {:<12} {:>8} {:>4} {:>4}", "task", "family", "log10 D", "T", "N");
    for t in list_tasks() {
        let steps = t.timesteps.map_or_else(|| "-".to_string(), |s| s.to_string());
        let stretch = if t.stretch { "  (stretch)" } else { "" };
        println!("{:<22} {:<12} {:>8.1} {:>4} {:>4}{stretch}", t.name, t.family, t.log10_d, steps, t.examples);
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
