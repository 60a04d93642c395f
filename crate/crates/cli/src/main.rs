//! `fairadapt` — validate fairness models, report static conflicts, run
//! scenarios through the adaptation loop, and explain individual decisions
//! from a recorded trace.
//!
//! Exit codes: 0 success, 1 domain/validation failure, 2 environment/IO
//! failure. `FAIRADAPT_COLOR=0` disables color.

mod explain;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairadapt_core::engine;
use fairadapt_core::trace::AdaptationTrace;
use fairadapt_core::world::WorldState;
use fairadapt_dsl::{parse_events, parse_model, Diagnostic, ParsedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Ndjson,
}

#[derive(Parser)]
#[command(
    name = "fairadapt",
    about = "Adaptive fairness: model validation, conflict analysis, scenario runs, decision explanations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file; prints nothing when it is valid.
    Validate {
        /// Model file (.frm)
        model: PathBuf,
    },
    /// Report potential conflicts between requirements of a model.
    Analyze {
        /// Model file (.frm)
        model: PathBuf,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Run a scenario timeline through the adaptation loop.
    Run {
        /// Model file (.frm)
        model: PathBuf,
        /// Scenario file (.scn)
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
        /// Also write the full ndjson trace to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Reserved for future stochastic features; the engine is
        /// deterministic and ignores it today.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Explain one requirement's status at one iteration of a trace.
    Explain {
        /// Trace file (ndjson, from `run --trace-out`)
        trace: PathBuf,
        /// Model file the trace was produced from (.frm)
        #[arg(long)]
        model: PathBuf,
        /// Requirement id
        fr: String,
        /// Iteration index
        iteration: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { model } => cmd_validate(&model),
        Command::Analyze { model, format } => cmd_analyze(&model, format),
        Command::Run {
            model,
            scenario,
            format,
            trace_out,
            seed: _,
        } => cmd_run(&model, &scenario, format, trace_out.as_deref()),
        Command::Explain {
            trace,
            model,
            fr,
            iteration,
        } => explain::cmd_explain(&trace, &model, &fr, iteration),
    };
    ExitCode::from(code)
}

/// Reads a file, mapping IO problems to exit code 2.
fn read_file(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        2
    })
}

fn print_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}", render::diagnostic(d));
    }
}

/// Parses and validates a model file; diagnostics go to standard error.
fn load_model(path: &Path) -> Result<ParsedModel, u8> {
    let text = read_file(path)?;
    let name = path.display().to_string();
    match parse_model(&text, &name) {
        Ok(parsed) => {
            print_diagnostics(&parsed.warnings);
            Ok(parsed)
        }
        Err(diags) => {
            print_diagnostics(&diags);
            Err(1)
        }
    }
}

fn cmd_validate(model: &Path) -> u8 {
    match load_model(model) {
        Ok(_) => 0,
        Err(code) => code,
    }
}

fn cmd_analyze(model: &Path, format: Format) -> u8 {
    let parsed = match load_model(model) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let edges = match engine::detect_conflicts(&parsed.bundle) {
        Ok(edges) => edges,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match format {
        Format::Human => {
            if edges.is_empty() {
                println!("no potential conflicts");
            }
            for edge in &edges {
                println!("{}", render::conflict_edge(edge));
            }
        }
        Format::Ndjson => {
            for edge in &edges {
                println!("{}", serde_json::to_string(edge).expect("edges serialise"));
            }
        }
    }
    0
}

fn cmd_run(model: &Path, scenario: &Path, format: Format, trace_out: Option<&Path>) -> u8 {
    let parsed = match load_model(model) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let scenario_text = match read_file(scenario) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let scenario_name = scenario.display().to_string();
    let timeline = match parse_events(&scenario_text, &scenario_name, &parsed.bundle) {
        Ok(events) => events,
        Err(diags) => {
            print_diagnostics(&diags);
            return 1;
        }
    };

    let (trace, _world, _bundle) = engine::run(&timeline, parsed.bundle, WorldState::default());

    if let Some(out) = trace_out {
        if let Err(e) = std::fs::write(out, trace.to_ndjson()) {
            eprintln!("error: cannot write {}: {e}", out.display());
            return 2;
        }
    }
    match format {
        Format::Human => {
            for record in &trace.records {
                print!("{}", render::iteration_summary(record));
            }
        }
        Format::Ndjson => {
            print!("{}", trace.to_ndjson());
        }
    }
    0
}

/// Loads a trace file written by `run --trace-out`.
fn load_trace(path: &Path) -> Result<AdaptationTrace, u8> {
    let text = read_file(path)?;
    AdaptationTrace::from_ndjson(&text).map_err(|e| {
        eprintln!("error: {} is not a valid trace: {e}", path.display());
        1
    })
}
