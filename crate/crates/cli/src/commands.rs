//! File-level implementations of the `blackout` subcommands. Each returns
//! the text to print on success.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use blackout_core::evaluation;
use blackout_core::learner::{self, Stage};
use blackout_core::pddl::{self, Domain, Problem};
use blackout_core::simulator::{self, SokobanLevel};
use blackout_core::trace::{self, Trajectory};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_domain(path: &Path) -> Result<Domain> {
    pddl::parse_domain(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn load_trace(domain: &Domain, path: &Path) -> Result<Trajectory> {
    trace::parse_trace(&read(path)?, domain).with_context(|| format!("in {}", path.display()))
}

/// Parses a `.sok` file; an untitled level takes the file stem as its name.
pub fn load_level(path: &Path) -> Result<SokobanLevel> {
    let mut level =
        simulator::parse_level(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    if level.name == "level" {
        if let Some(stem) = path.file_stem() {
            level.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(level)
}

/// A `.sok` level (compiled) or a PDDL problem, chosen by extension.
pub fn load_problem(domain: &Domain, path: &Path) -> Result<Problem> {
    if path.extension().is_some_and(|e| e == "sok") {
        return Ok(simulator::compile_level(&load_level(path)?));
    }
    pddl::parse_problem(&read(path)?, domain).with_context(|| format!("in {}", path.display()))
}

/// Peak resident set size of this process in KiB, where the platform
/// exposes it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
}

pub fn learn(domain: &Path, traces: &[PathBuf], stage: u8, out: &Path) -> Result<String> {
    let Some(stage) = Stage::from_number(stage) else {
        bail!("stage must be 1, 2 or 3, got {stage}");
    };
    let start = Instant::now();
    let d = load_domain(domain)?;
    let trajectories = traces
        .iter()
        .map(|p| load_trace(&d, p))
        .collect::<Result<Vec<_>>>()?;
    let parsed = start.elapsed();
    let output = learner::learn_stages(&trajectories, &d)?;
    let model = output.model(stage).to_domain(&d);
    write(out, &pddl::print_domain(&model))?;

    let mut s = String::new();
    let transitions: usize = trajectories.iter().map(Trajectory::len).sum();
    let failures: usize = trajectories.iter().map(Trajectory::failures).sum();
    writeln!(
        s,
        "trajectories: {} ({transitions} transitions, {failures} failed)",
        trajectories.len()
    )?;
    writeln!(s, "parse: {:.3} ms", parsed.as_secs_f64() * 1e3)?;
    for (i, t) in output.timings.iter().enumerate() {
        writeln!(s, "stage {}: {:.3} ms", i + 1, t.as_secs_f64() * 1e3)?;
    }
    writeln!(s, "total: {:.3} ms", start.elapsed().as_secs_f64() * 1e3)?;
    if let Some(kb) = peak_rss_kb() {
        writeln!(s, "peak-rss-kb: {kb}")?;
    }
    writeln!(
        s,
        "wrote stage {} model with {} action(s) to {}",
        stage as u8,
        model.actions.len(),
        out.display()
    )?;
    if stage == Stage::Invariants {
        for inv in &output.invariants {
            writeln!(s, "invariant: {inv}")?;
        }
    }
    for diag in &output.diagnostics {
        writeln!(s, "diagnostic: {}: {}", diag.action, diag.message)?;
    }
    Ok(s)
}

pub fn simulate(
    domain: &Path,
    problem: &Path,
    plan: &Path,
    out: &Path,
    stop_on_failure: bool,
) -> Result<String> {
    let d = load_domain(domain)?;
    let p = load_problem(&d, problem)?;
    let plan =
        simulator::parse_plan(&read(plan)?).with_context(|| format!("in {}", plan.display()))?;
    let t = simulator::run_plan(&p, &plan, &d, stop_on_failure)?;
    write(out, &trace::write_trace(&t))?;
    Ok(format!(
        "{} transitions ({} failed); goal {}\n",
        t.len(),
        t.failures(),
        if p.goal_satisfied(t.current()) {
            "reached"
        } else {
            "not reached"
        }
    ))
}

pub fn play(domain: &Path, level: &Path, moves: &str, out: &Path) -> Result<String> {
    let d = load_domain(domain)?;
    let p = load_problem(&d, level)?;
    let moves = simulator::parse_moves(moves)?;
    let t = simulator::play(&p, &d, &moves)?;
    write(out, &trace::write_trace(&t))?;
    let grid = simulator::render(&p, t.current())?.join("\n");
    Ok(format!(
        "{} transitions ({} failed); goal {}\n{grid}\n",
        t.len(),
        t.failures(),
        if p.goal_satisfied(t.current()) {
            "reached"
        } else {
            "not reached"
        }
    ))
}

pub fn compile_level(level: &Path, out: &Path) -> Result<String> {
    let p = simulator::compile_level(&load_level(level)?);
    write(out, &pddl::print_problem(&p))?;
    Ok(format!(
        "wrote problem `{}` with {} objects\n",
        p.name,
        p.objects.len()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

pub fn eval(truth: &Path, model: &Path, format: Format) -> Result<String> {
    let t = load_domain(truth)?;
    let m = load_domain(model)?;
    let r = evaluation::report(&m, &t)?;
    Ok(match format {
        Format::Text => r.to_text(),
        Format::Json => r.to_json(),
    })
}

pub fn export_fama(domain: &Path, input: &Path, out: &Path) -> Result<String> {
    let d = load_domain(domain)?;
    let t = load_trace(&d, input)?;
    write(out, &trace::write_fama(&t))?;
    Ok(format!(
        "kept {} of {} transitions\n",
        t.len() - t.failures(),
        t.len()
    ))
}
