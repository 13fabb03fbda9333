mod gen;
mod report;
mod scene;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use moritakit::numerics::Tolerance;
use rayon::prelude::*;

use crate::report::{render_json, render_text, task_report, Report, Sidecars};
use crate::scene::{load_scene, Scene, TaskSpec};
use crate::tasks::{label, run_task, Context, Verdict};

/// Input problems. All of them exit with status 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid object '{name}': {reason}")]
    Validation { name: String, reason: String },
    #[error("bad parameter: {0}")]
    Param(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("scene has no '{0}' tasks")]
    NoTasks(String),
}

#[derive(Debug, Parser)]
#[command(name = "moritakit", version, about = "Check Morita-type constructions on finite-dimensional scenes")]
struct Cli {
    /// Base seed; task i runs with seed + i.
    #[arg(long, global = true, env = "MORITAKIT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_rel: f64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_abs: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate objects; runs the scene's check tasks, or checks every object.
    Check { scene: PathBuf },
    /// Minimal Stinespring dilations of CP maps.
    Dilate { scene: PathBuf },
    /// Induce representations along bimodules.
    Induce { scene: PathBuf },
    /// Decide equivalence of representations or CP maps relative to a bimodule.
    Sme { scene: PathBuf },
    /// Linking algebra representations and transports.
    Linking { scene: PathBuf },
    /// Transfer CP maps along bimodules.
    Transfer { scene: PathBuf },
    /// Transfer along a bimodule and its dual and compare with the input.
    Roundtrip { scene: PathBuf },
    /// Run the inclusion pipeline for expectation pairs.
    Rel7 { scene: PathBuf },
    /// Check the converse direction for expectation pairs.
    Rel10 { scene: PathBuf },
    /// Write a random scene.
    Gen(gen::GenArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Dilate { .. } => "dilate",
            Command::Induce { .. } => "induce",
            Command::Sme { .. } => "sme",
            Command::Linking { .. } => "linking",
            Command::Transfer { .. } => "transfer",
            Command::Roundtrip { .. } => "roundtrip",
            Command::Rel7 { .. } => "rel7",
            Command::Rel10 { .. } => "rel10",
            Command::Gen(_) => "gen",
        }
    }
}

fn tolerance(cli: &Cli) -> Result<Tolerance, CliError> {
    if !(cli.tol_rel >= 0.0 && cli.tol_abs >= 0.0) || !cli.tol_rel.is_finite() || !cli.tol_abs.is_finite() {
        return Err(CliError::Param("tolerances must be finite and non-negative".into()));
    }
    Ok(Tolerance { rel: cli.tol_rel, abs: cli.tol_abs })
}

/// The tasks a command runs, with their index in the scene file.
fn select(scene: &Scene, command: &str) -> Result<Vec<(usize, TaskSpec)>, CliError> {
    let chosen: Vec<_> = scene
        .file
        .tasks
        .iter()
        .enumerate()
        .filter(|(_, t)| t.command() == command)
        .map(|(i, t)| (i, t.clone()))
        .collect();
    if !chosen.is_empty() {
        return Ok(chosen);
    }
    if command == "check" {
        return Ok(scene
            .objects()
            .enumerate()
            .map(|(i, (name, _))| (i, TaskSpec::Check { target: name.to_string() }))
            .collect());
    }
    Err(CliError::NoTasks(command.into()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_scene(cli: &Cli, command: &'static str, path: &Path) -> Result<Report, CliError> {
    let tol = tolerance(cli)?;
    let scene = load_scene(path, &tol)?;
    let chosen = select(&scene, command)?;
    let ctx = Context { scene: &scene, tol };
    let runs: Vec<_> = chosen
        .par_iter()
        .map(|(i, task)| {
            let seed = cli.seed.wrapping_add(*i as u64);
            let start = Instant::now();
            let outcome = run_task(&ctx, task, seed);
            (*i, task.command(), label(task), seed, outcome, start.elapsed().as_secs_f64())
        })
        .collect();
    let sidecars = Sidecars::for_report(cli.report.as_deref(), path);
    let mut tasks = Vec::new();
    let mut timings = Vec::new();
    for (i, cmd, lbl, seed, outcome, secs) in runs {
        tasks.push(task_report(i, cmd, lbl, seed, outcome, &sidecars)?);
        timings.push(secs);
    }
    let passed = tasks.iter().filter(|t| t.verdict == Verdict::Pass).count();
    Ok(Report {
        tool: "moritakit",
        version: env!("CARGO_PKG_VERSION"),
        command: command.into(),
        scene: path.display().to_string(),
        seed: cli.seed,
        tol_rel: tol.rel,
        tol_abs: tol.abs,
        failed: tasks.len() - passed,
        passed,
        tasks,
        timings,
    })
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = match &cli.command {
        Command::Gen(args) => {
            let file = gen::generate(args, cli.seed)?;
            write_output(args.out.as_deref(), &scene::save_scene(&file))?;
            return Ok(true);
        }
        Command::Check { scene }
        | Command::Dilate { scene }
        | Command::Induce { scene }
        | Command::Sme { scene }
        | Command::Linking { scene }
        | Command::Transfer { scene }
        | Command::Roundtrip { scene }
        | Command::Rel7 { scene }
        | Command::Rel10 { scene } => scene,
    };
    let report = run_scene(cli, cli.command.name(), path)?;
    let text = if cli.json { render_json(&report) } else { render_text(&report) };
    write_output(cli.report.as_deref(), &text)?;
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("moritakit: {e}");
            ExitCode::from(2)
        }
    }
}
