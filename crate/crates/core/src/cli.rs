//! Command-line front end: `check`, `run`, `explore` and `trace`.

use crate::ast::ClassTable;
use crate::parser::parse;
use crate::rtcheck::{check_program_runtime, HarnessReport, Mode};
use crate::runtime::{self, group_summaries, trace_json, ExploreOptions, NoMonitor, Policy, RunResult};
use crate::typecheck::check_program;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exit code for parse, well-formedness and type errors, and for bad input.
pub const EXIT_STATIC: i32 = 1;
/// Exit code when `--check-types` finds a runtime typing violation.
pub const EXIT_VIOLATION: i32 = 5;
/// Exit code for a malformed command line.
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "kog", version, about = "Check, run and explore kernel group programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and type check a program.
    Check { file: PathBuf },
    /// Execute one schedule and print the outcome and final groups.
    Run(RunArgs),
    /// Enumerate every interleaving up to the bounds.
    Explore(ExploreArgs),
    /// Execute one schedule and print its JSON trace.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Random,
    RoundRobin,
}

#[derive(Args, Debug)]
struct Schedule {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Random)]
    policy: PolicyArg,
}

#[derive(Args, Debug)]
struct Common {
    /// Skip the static type check (well-formedness still applies).
    #[arg(long = "unsafe")]
    unsafe_: bool,
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Report elapsed time on stderr.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    file: PathBuf,
    #[command(flatten)]
    schedule: Schedule,
    /// Check every reached configuration with the runtime type system.
    #[arg(long)]
    check_types: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    depth: u64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    state_bound: u64,
    #[arg(long)]
    check_types: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TraceArgs {
    file: PathBuf,
    #[command(flatten)]
    schedule: Schedule,
    #[command(flatten)]
    common: Common,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

type CliResult = Result<i32, String>;

impl Schedule {
    fn policy(&self, env_seed: Option<&str>) -> Result<Policy, String> {
        Ok(match self.policy {
            PolicyArg::RoundRobin => Policy::RoundRobin,
            PolicyArg::Random => {
                let seed = match env_seed {
                    Some(s) => s
                        .trim()
                        .parse()
                        .map_err(|_| format!("KOG_SEED must be an unsigned 64-bit integer, got `{s}`"))?,
                    None => self.seed,
                };
                Policy::Random { seed }
            }
        })
    }
}

fn load(file: &Path, unsafe_: bool, io: &mut Io) -> Result<Option<ClassTable>, String> {
    let name = file.display().to_string();
    let source = std::fs::read_to_string(file).map_err(|e| format!("{name}: {e}"))?;
    let program = match parse(&source) {
        Ok(p) => p,
        Err(e) => {
            writeln!(io.err, "{}", e.render(&name)).map_err(|e| e.to_string())?;
            return Ok(None);
        }
    };
    let checked = if unsafe_ {
        ClassTable::new(program)
    } else {
        check_program(program)
    };
    match checked {
        Ok(table) => Ok(Some(table)),
        Err(errors) => {
            for e in errors {
                writeln!(io.err, "{}", e.render(&name)).map_err(|e| e.to_string())?;
            }
            Ok(None)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn print_violations(report: &HarnessReport, io: &mut Io) -> std::io::Result<()> {
    writeln!(
        io.out,
        "type check: {} state(s), {} transition(s), {} violation(s)",
        report.states_checked,
        report.transitions_checked,
        report.violations.len()
    )?;
    for v in &report.violations {
        writeln!(io.out, "  {} at {}: {} (after {} step(s))", v.rule, v.location, v.message, v.path.len())?;
    }
    Ok(())
}

fn print_run(table: &ClassTable, result: &RunResult, io: &mut Io) -> std::io::Result<()> {
    writeln!(io.out, "outcome: {}", result.outcome)?;
    writeln!(io.out, "steps: {}", result.steps.len())?;
    for g in group_summaries(table, &result.last) {
        writeln!(io.out, "{}: intf {{{}}}", g.id, g.intf.join(", "))?;
    }
    Ok(())
}

fn cmd_check(file: &Path, io: &mut Io) -> CliResult {
    match load(file, false, io)? {
        Some(_) => {
            writeln!(io.out, "ok").map_err(|e| e.to_string())?;
            Ok(0)
        }
        None => Ok(EXIT_STATIC),
    }
}

fn cmd_run(args: &RunArgs, env_seed: Option<&str>, io: &mut Io) -> CliResult {
    let Some(table) = load(&args.file, args.common.unsafe_, io)? else {
        return Ok(EXIT_STATIC);
    };
    let policy = args.schedule.policy(env_seed)?;
    let max_steps = args.schedule.max_steps as usize;
    let (result, report) = if args.check_types {
        let mut report = check_program_runtime(&table, Mode::Trace { policy, max_steps });
        (report.run.take().expect("trace mode keeps the run"), Some(report))
    } else {
        (runtime::run(&table, policy, max_steps), None)
    };
    if let Some(path) = &args.common.json {
        write_file(path, &trace_json(&table, &result))?;
    }
    let io_err = |e: std::io::Error| e.to_string();
    print_run(&table, &result, io).map_err(io_err)?;
    let mut code = result.outcome.exit_code();
    if let Some(report) = report {
        print_violations(&report, io).map_err(io_err)?;
        if !report.ok() {
            code = EXIT_VIOLATION;
        }
    }
    Ok(code)
}

fn cmd_explore(args: &ExploreArgs, io: &mut Io) -> CliResult {
    let Some(table) = load(&args.file, args.common.unsafe_, io)? else {
        return Ok(EXIT_STATIC);
    };
    let options = ExploreOptions {
        depth: args.depth as usize,
        state_bound: args.state_bound as usize,
    };
    let (report, harness) = if args.check_types {
        let mut h = check_program_runtime(&table, Mode::Explore(options));
        (h.exploration.take().expect("explore mode keeps statistics"), Some(h))
    } else {
        (runtime::explore(&table, options, &mut NoMonitor), None)
    };
    let io_err = |e: std::io::Error| e.to_string();
    let out = &mut io.out;
    writeln!(out, "states: {}", report.states).map_err(io_err)?;
    writeln!(out, "transitions: {}", report.transitions).map_err(io_err)?;
    writeln!(out, "max depth: {}", report.max_depth).map_err(io_err)?;
    writeln!(out, "truncated: {}", report.truncated).map_err(io_err)?;
    for (label, n) in &report.outcomes {
        writeln!(out, "final {label}: {n}").map_err(io_err)?;
    }
    let uncovered: Vec<&str> = report.uncovered().iter().map(|r| r.label()).collect();
    writeln!(out, "rules covered: {}/{}", runtime::RuleName::ALL.len() - uncovered.len(), runtime::RuleName::ALL.len())
        .map_err(io_err)?;
    if !uncovered.is_empty() {
        writeln!(out, "rules not covered: {}", uncovered.join(", ")).map_err(io_err)?;
    }
    let mut code = 0;
    match &harness {
        Some(h) => {
            print_violations(h, io).map_err(io_err)?;
            if let Some(path) = &args.common.json {
                write_file(path, &h.to_json())?;
            }
            if !h.ok() {
                code = EXIT_VIOLATION;
            }
        }
        None => {
            if let Some(path) = &args.common.json {
                let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
                write_file(path, &(json + "\n"))?;
            }
        }
    }
    Ok(code)
}

fn cmd_trace(args: &TraceArgs, env_seed: Option<&str>, io: &mut Io) -> CliResult {
    let Some(table) = load(&args.file, args.common.unsafe_, io)? else {
        return Ok(EXIT_STATIC);
    };
    let policy = args.schedule.policy(env_seed)?;
    let result = runtime::run(&table, policy, args.schedule.max_steps as usize);
    let json = trace_json(&table, &result);
    match &args.common.json {
        Some(path) => write_file(path, &json)?,
        None => io.out.write_all(json.as_bytes()).map_err(|e| e.to_string())?,
    }
    Ok(result.outcome.exit_code())
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. `env_seed` is the value of `KOG_SEED`, which overrides `--seed`.
pub fn main_with<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let mut io = Io { out, err };
    let start = Instant::now();
    let timing = match &cli.command {
        Command::Check { .. } => false,
        Command::Run(a) => a.common.timing,
        Command::Explore(a) => a.common.timing,
        Command::Trace(a) => a.common.timing,
    };
    let result = match &cli.command {
        Command::Check { file } => cmd_check(file, &mut io),
        Command::Run(a) => cmd_run(a, env_seed, &mut io),
        Command::Explore(a) => cmd_explore(a, &mut io),
        Command::Trace(a) => cmd_trace(a, env_seed, &mut io),
    };
    if timing {
        let _ = writeln!(io.err, "time: {:.3} ms", start.elapsed().as_secs_f64() * 1000.0);
    }
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(io.err, "kog: {message}");
            EXIT_STATIC
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str], seed: Option<&str>) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(std::iter::once("kog").chain(args.iter().copied()), seed, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn program(src: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(src.as_bytes()).unwrap();
        f
    }

    #[test]
    fn check_prints_ok() {
        let f = program("{ skip; }");
        let (code, out, _) = run_cli(&["check", f.path().to_str().unwrap()], None);
        assert_eq!((code, out.as_str()), (0, "ok\n"));
    }

    #[test]
    fn type_errors_exit_one() {
        let f = program("{ Bool b; Any a; b = a; }");
        let (code, out, err) = run_cli(&["check", f.path().to_str().unwrap()], None);
        assert_eq!(code, EXIT_STATIC);
        assert!(out.is_empty());
        assert!(err.contains("T-Sub"), "{err}");
    }

    #[test]
    fn env_seed_overrides_flag() {
        let schedule = Schedule {
            seed: 1,
            max_steps: 10,
            policy: PolicyArg::Random,
        };
        assert_eq!(schedule.policy(Some("9")).unwrap(), Policy::Random { seed: 9 });
        assert_eq!(schedule.policy(None).unwrap(), Policy::Random { seed: 1 });
        assert!(schedule.policy(Some("x")).is_err());
    }

    #[test]
    fn zero_bounds_are_rejected() {
        let f = program("{ skip; }");
        let (code, _, _) = run_cli(&["run", f.path().to_str().unwrap(), "--max-steps", "0"], None);
        assert_ne!(code, 0);
    }

    #[test]
    fn run_reports_groups() {
        let f = program("interface I {} class A() implements I {} { Group<> g; I a; g = newgroup; a = new A(); a joins g as I; }");
        let (code, out, _) = run_cli(&["run", f.path().to_str().unwrap(), "--check-types"], None);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("outcome: terminated"));
        assert!(out.contains("g0: intf {I}"));
        assert!(out.contains("0 violation(s)"));
    }

    #[test]
    fn missing_file_is_an_error() {
        let (code, _, err) = run_cli(&["check", "/nonexistent/x.kog"], None);
        assert_eq!(code, EXIT_STATIC);
        assert!(err.starts_with("kog: "));
    }
}
