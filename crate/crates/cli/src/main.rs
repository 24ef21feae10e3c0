//! Command line front end: generate lower-bound family instances, solve
//! games under the improvement policies, benchmark iteration counts,
//! validate 1-sink certificates, audit counter traces and reduce parity
//! games to payoff games.
//!
//! Exit codes: 0 success, 1 usage error, 2 file or format error, 3 a check
//! failed, 4 a resource cap was hit.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use pgsi::counterlab::check_counter_trace;
use pgsi::families::{gen_globally, gen_locally, Family, RoleMap};
use pgsi::format::{
    parse_game, parse_strategy, parse_trace, write_dpg, write_game, write_mpg, write_ssg,
    write_strategy, write_trace,
};
use pgsi::payoff::{to_dpg, to_mpg, to_ssg};
use pgsi::policies::{optimal_by_local, PolicyKind};
use pgsi::solver::{solve, validate_one_sink, SolveError, SolveOptions, SolveReport};
use pgsi::{ParityGame, Strategy};

#[derive(Parser)]
#[command(
    name = "pgsi",
    version,
    about = "Strategy iteration laboratory for parity games and their payoff reductions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a lower-bound family instance and its initial strategy.
    Generate {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Output path for the game file.
        #[arg(long)]
        out: PathBuf,
        /// Output path for the initial strategy file.
        #[arg(long)]
        init_out: Option<PathBuf>,
    },
    /// Run strategy iteration on a game file.
    Solve {
        /// Game file to solve.
        #[arg(long)]
        game: PathBuf,
        /// Initial strategy file; defaults to smallest-id choices.
        #[arg(long)]
        init: Option<PathBuf>,
        /// Improvement policy: local, global or linear.
        #[arg(long)]
        policy: String,
        /// Write the improvement trace to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Retain full valuations in the trace.
        #[arg(long)]
        full_trace: bool,
        /// Family of the game, enabling phase annotations in the trace.
        #[arg(long)]
        family: Option<String>,
        /// Instance size accompanying --family.
        #[arg(long)]
        n: Option<u32>,
        /// Abort after this many improvement steps.
        #[arg(long, default_value_t = 1 << 24)]
        max_iterations: u64,
    },
    /// Solve a range of instances and append iteration counts to a CSV.
    Bench {
        /// Family to generate: loc or glo.
        #[arg(long)]
        family: String,
        /// Improvement policy: local, global or linear.
        #[arg(long)]
        policy: String,
        #[arg(long)]
        n_min: u32,
        #[arg(long)]
        n_max: u32,
        /// CSV output path; rows are appended, the header written once.
        #[arg(long)]
        csv: PathBuf,
    },
    /// Check the 1-sink certificate of a game.
    Validate {
        #[arg(long)]
        game: PathBuf,
        /// Initial strategy file; defaults to smallest-id choices.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Audit a recorded trace against the counter discipline of a family
    /// instance.
    TraceCheck {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Trace file produced by solve --trace-out.
        #[arg(long)]
        trace: PathBuf,
    },
    /// Reduce a parity game to a payoff game file.
    Reduce {
        #[arg(long)]
        game: PathBuf,
        /// Target class: mpg, dpg or ssg.
        #[arg(long)]
        to: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Family to generate: loc or glo.
    #[arg(long)]
    family: String,
    /// Instance size, at least 1.
    #[arg(long)]
    n: u32,
    /// Remove the top gate's closing edge (loc family only).
    #[arg(long)]
    drop_top_edge: bool,
}

enum CliError {
    Usage(String),
    Format(String),
    CheckFailed(String),
    ResourceCap(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Format(_) => 2,
            CliError::CheckFailed(_) => 3,
            CliError::ResourceCap(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Format(m)
            | CliError::CheckFailed(m)
            | CliError::ResourceCap(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn parse_family(text: &str) -> Result<Family, CliError> {
    text.parse().map_err(CliError::Usage)
}

fn generate_instance(args: &InstanceArgs) -> Result<(ParityGame, Strategy, RoleMap), CliError> {
    let family = parse_family(&args.family)?;
    if args.drop_top_edge && family != Family::Loc {
        return Err(CliError::Usage(
            "--drop-top-edge is only valid with --family loc".to_string(),
        ));
    }
    let generated = match family {
        Family::Loc => gen_locally(args.n, args.drop_top_edge),
        Family::Glo => gen_globally(args.n),
    };
    generated.map_err(|e| CliError::Usage(e.to_string()))
}

/// Prints a report to stdout. A broken pipe (the consumer stopped reading,
/// as in `pgsi ... | head`) is not an error: the command's own exit code
/// still stands and nothing further will be printed anyway.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    let done = out
        .write_all(text.as_bytes())
        .and_then(|()| out.write_all(b"\n"))
        .and_then(|()| out.flush());
    match done {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Format(format!("cannot write to stdout: {e}"))),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Format(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Format(format!("cannot write {}: {e}", path.display())))
}

fn load_game(path: &Path) -> Result<ParityGame, CliError> {
    let text = read_file(path)?;
    parse_game(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn load_init(path: &Option<PathBuf>, g: &ParityGame) -> Result<Strategy, CliError> {
    match path {
        None => Ok(Strategy::min_successor(g, pgsi::Player::P0)),
        Some(path) => {
            let text = read_file(path)?;
            let s = parse_strategy(&text, g)
                .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
            if s.player != pgsi::Player::P0 {
                return Err(CliError::Format(format!(
                    "{}: initial strategy must belong to player 0",
                    path.display()
                )));
            }
            Ok(s)
        }
    }
}

fn build_policy(name: &str, g: &ParityGame, init: &Strategy) -> Result<PolicyKind, CliError> {
    match name {
        "local" => Ok(PolicyKind::Local),
        "global" => Ok(PolicyKind::Global),
        "linear" => {
            let target = optimal_by_local(g, init)
                .map_err(|e| CliError::CheckFailed(format!("computing linear target: {e}")))?;
            Ok(PolicyKind::Linear(target))
        }
        other => Err(CliError::Usage(format!(
            "unknown policy '{other}' (expected local, global or linear)"
        ))),
    }
}

fn map_solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::IterationCap { .. } => CliError::ResourceCap(e.to_string()),
        _ => CliError::CheckFailed(e.to_string()),
    }
}

fn solve_report_json(policy: &str, report: &SolveReport) -> Value {
    let sigma: Map<String, Value> = report
        .fixpoint_sigma
        .choices()
        .map(|(v, u)| (v.to_string(), json!(u)))
        .collect();
    json!({
        "policy": policy,
        "iterations": report.iterations,
        "w0": report.w0,
        "w1": report.w1,
        "fixpoint_sigma": sigma,
    })
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate {
            instance,
            out,
            init_out,
        } => {
            let (game, init, _) = generate_instance(&instance)?;
            write_file(&out, &write_game(&game))?;
            if let Some(init_out) = init_out {
                write_file(&init_out, &write_strategy(&init))?;
            }
            Ok(())
        }
        Command::Solve {
            game,
            init,
            policy,
            trace_out,
            full_trace,
            family,
            n,
            max_iterations,
        } => {
            let g = load_game(&game)?;
            let init = load_init(&init, &g)?;
            init.validate(&g)
                .map_err(|e| CliError::Format(e.to_string()))?;
            let kind = build_policy(&policy, &g, &init)?;
            let map = role_map_for(&family, &n, &g)?;
            let opts = SolveOptions {
                iteration_cap: max_iterations,
                record_trace: trace_out.is_some(),
                full_trace,
            };
            let report = solve(&g, &init, &kind, &opts).map_err(map_solve_error)?;
            if let Some(trace_out) = &trace_out {
                write_file(trace_out, &write_trace(&report.trace, map.as_ref()))?;
            }
            let out = solve_report_json(&policy, &report);
            emit(&serde_json::to_string_pretty(&out).unwrap())?;
            Ok(())
        }
        Command::Bench {
            family,
            policy,
            n_min,
            n_max,
            csv,
        } => {
            if n_min == 0 || n_min > n_max {
                return Err(CliError::Usage(
                    "need 1 <= n-min <= n-max".to_string(),
                ));
            }
            let fam = parse_family(&family)?;
            let mut rows = String::new();
            if !csv.exists() || fs::metadata(&csv).map(|m| m.len()).unwrap_or(0) == 0 {
                rows.push_str("family,policy,n,nodes,edges,iterations,wall_ms\n");
            }
            for n in n_min..=n_max {
                let (g, init, _) = generate_instance(&InstanceArgs {
                    family: family.clone(),
                    n,
                    drop_top_edge: false,
                })?;
                let kind = build_policy(&policy, &g, &init)?;
                let opts = SolveOptions {
                    record_trace: false,
                    ..SolveOptions::default()
                };
                let start = Instant::now();
                let report = solve(&g, &init, &kind, &opts).map_err(map_solve_error)?;
                let wall_ms = start.elapsed().as_millis();
                rows.push_str(&format!(
                    "{fam},{policy},{n},{},{},{},{wall_ms}\n",
                    g.node_count(),
                    g.edge_count(),
                    report.iterations
                ));
            }
            let mut existing = if csv.exists() {
                fs::read_to_string(&csv)
                    .map_err(|e| CliError::Format(format!("cannot read {}: {e}", csv.display())))?
            } else {
                String::new()
            };
            existing.push_str(&rows);
            write_file(&csv, &existing)?;
            Ok(())
        }
        Command::Validate { game, init } => {
            let g = load_game(&game)?;
            let init = load_init(&init, &g)?;
            let cert = validate_one_sink(&g, &init).map_err(map_solve_error)?;
            let out = json!({
                "sink": cert.sink,
                "sink_existence": cert.sink_existence,
                "all_won_by_p1": cert.all_won_by_p1,
                "initial_cycle_components_ok": cert.initial_cycle_components_ok,
                "per_step_sink_seeking_ok": cert.per_step_sink_seeking_ok,
                "valid": cert.is_valid(),
            });
            emit(&serde_json::to_string_pretty(&out).unwrap())?;
            if cert.is_valid() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(
                    "1-sink certificate is not valid".to_string(),
                ))
            }
        }
        Command::TraceCheck { instance, trace } => {
            let (g, _, map) = generate_instance(&instance)?;
            let text = read_file(&trace)?;
            let sigmas = parse_trace(&text, &g)
                .map_err(|e| CliError::Format(format!("{}: {e}", trace.display())))?;
            match check_counter_trace(&g, &map, &sigmas) {
                Ok(report) => {
                    let out = json!({
                        "ok": true,
                        "steps_checked": report.steps_checked,
                        "values": report.values,
                        "phases": report.phases.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        "settled_steps": report.settled_steps,
                    });
                    emit(&serde_json::to_string_pretty(&out).unwrap())?;
                    Ok(())
                }
                Err(e) => {
                    let out = json!({ "ok": false, "error": e.to_string() });
                    emit(&serde_json::to_string_pretty(&out).unwrap())?;
                    Err(CliError::CheckFailed(e.to_string()))
                }
            }
        }
        Command::Reduce { game, to, out } => {
            let g = load_game(&game)?;
            let text = match to.as_str() {
                "mpg" => write_mpg(&to_mpg(&g)),
                "dpg" => write_dpg(&to_dpg(to_mpg(&g))),
                "ssg" => write_ssg(&to_ssg(&to_dpg(to_mpg(&g)))),
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown reduction target '{other}' (expected mpg, dpg or ssg)"
                    )))
                }
            };
            write_file(&out, &text)?;
            Ok(())
        }
    }
}

/// Regenerates the role map when the caller names a family, checking that the
/// loaded game has the matching shape.
fn role_map_for(
    family: &Option<String>,
    n: &Option<u32>,
    g: &ParityGame,
) -> Result<Option<RoleMap>, CliError> {
    let (family, n) = match (family, n) {
        (None, None) => return Ok(None),
        (Some(f), Some(n)) => (f.clone(), *n),
        _ => {
            return Err(CliError::Usage(
                "--family and --n must be given together".to_string(),
            ))
        }
    };
    let (generated, _, map) = generate_instance(&InstanceArgs {
        family,
        n,
        drop_top_edge: false,
    })?;
    if generated.node_count() != g.node_count() {
        return Err(CliError::Format(format!(
            "game has {} nodes but the named instance has {}",
            g.node_count(),
            generated.node_count()
        )));
    }
    Ok(Some(map))
}
