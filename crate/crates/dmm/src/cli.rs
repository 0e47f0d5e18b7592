//! Command-line runner: parse a network file, execute it, print a trace.
//!
//! Trace lines are `tick<TAB>port<TAB>value`, one per watched port per
//! tick. Exit codes: 0 success, 1 usage, 2 parse or validation error,
//! 3 run-time halt.

use crate::dsl::{parse_program, serialize_program};
use crate::error::Error;
use crate::literal;
use crate::network::OutputPortId;
use crate::transform::TransformRegistry;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_HALTED: i32 = 3;

#[derive(Parser)]
#[command(name = "dmm", version, about = "Run dataflow matrix machine networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a network and print trace lines for the watched ports
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Network description file
    #[arg(long)]
    net: PathBuf,

    /// Number of ticks to execute
    #[arg(long)]
    ticks: u64,

    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Watch this output port (repeatable; overrides the file's watch list)
    #[arg(long, value_name = "PORT")]
    watch: Vec<String>,

    /// Print the canonical form of the network and exit
    #[arg(long)]
    dump_canonical: bool,
}

/// Runs the CLI against `args` (the first element is the program name).
/// Writes trace lines to `out` and diagnostics to `err`; returns the
/// process exit code.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    return EXIT_OK;
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    return EXIT_USAGE;
                }
            }
        }
    };
    let Command::Run(run) = cli.command;
    run_network(&run, out, err)
}

fn run_network(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match std::fs::read_to_string(&args.net) {
        Ok(text) => text,
        Err(e) => {
            let _ = writeln!(err, "dmm: cannot read {}: {e}", args.net.display());
            return EXIT_USAGE;
        }
    };

    let registry = TransformRegistry::builtin();
    let program = match parse_program(&text, &registry) {
        Ok(program) => program,
        Err(e) => {
            let _ = writeln!(err, "dmm: {e}");
            return EXIT_INVALID;
        }
    };

    if args.dump_canonical {
        let _ = write!(out, "{}", serialize_program(&program));
        return EXIT_OK;
    }

    let watch = if args.watch.is_empty() {
        program.watch.clone()
    } else {
        let mut ports = Vec::with_capacity(args.watch.len());
        for text in &args.watch {
            match literal::parse_output_port(text) {
                Ok(port) => ports.push(port),
                Err(m) => {
                    let _ = writeln!(err, "dmm: invalid --watch port: {m}");
                    return EXIT_USAGE;
                }
            }
        }
        ports
    };
    for port in &watch {
        if program.signature.output_kind(port).is_none() {
            let _ = writeln!(
                err,
                "dmm: watched port {port} references unknown type {}",
                port.type_name
            );
            return EXIT_INVALID;
        }
    }

    let mut machine = match program.machine(args.seed) {
        Ok(machine) => machine,
        Err(e) => {
            let _ = writeln!(err, "dmm: {e}");
            return EXIT_INVALID;
        }
    };

    for _ in 0..args.ticks {
        if let Err(e) = machine.step() {
            let _ = writeln!(err, "dmm: {e}");
            return match e {
                Error::Halted { .. } => EXIT_HALTED,
                Error::Invalid(_) => EXIT_INVALID,
                _ => EXIT_HALTED,
            };
        }
        for port in &watch {
            let value = watched(&machine, port);
            let _ = writeln!(out, "{}\t{port}\t{value}", machine.tick());
        }
    }
    let _ = out.flush();
    EXIT_OK
}

fn watched(machine: &crate::engine::MachineState, port: &OutputPortId) -> String {
    match machine.output(port) {
        Some(value) => value.to_string(),
        None => {
            let kind = machine
                .signature()
                .output_kind(port)
                .expect("watch ports are checked before running");
            crate::stream::neutral(kind).to_string()
        }
    }
}
