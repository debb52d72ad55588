use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use radial_sweep::io::{
    parse_network_file, render_residuals, render_result, render_table, AngleUnit, NetworkFormat,
    OutputFormat,
};
use radial_sweep::{
    check_residuals, reference_solve_at, ConvergenceMeasure, Error, ErrorKind, PreparedNetwork,
    SweepMode, SweepOptions,
};

#[derive(Parser)]
#[command(
    name = "radial-sweep",
    version,
    about = "Backward/forward sweep power flow for radial feeders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one network file (JSON) or CSV directory.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    TwoStep,
    Trx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Complex,
    Magnitude,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Network JSON file, or a directory (or file within it) holding buses.csv and branches.csv.
    input: PathBuf,
    /// Input format; guessed from the path when omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "two-step")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "table")]
    output: Output,
    /// Voltage change measure for the convergence test.
    #[arg(long, value_enum, default_value = "complex")]
    measure: Measure,
    /// Voltage magnitude below which the solve aborts [pu].
    #[arg(long = "v-min", default_value_t = 0.2)]
    v_min: f64,
    /// Print angles in radians in table output.
    #[arg(long)]
    radians: bool,
    /// Print Kirchhoff residuals of the solution.
    #[arg(long)]
    verify: bool,
    /// Solve again with the reference nodal solver and print the largest deviation.
    #[arg(long = "cross-check")]
    cross_check: bool,
    /// Print T and TRX as plain-text matrices.
    #[arg(long = "dump-matrices")]
    dump_matrices: bool,
}

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Input => 1,
        ErrorKind::Validation => 2,
        ErrorKind::Numerical => 3,
    }
}

fn solve(args: &SolveArgs) -> Result<(), Error> {
    let format = match args.format {
        Some(InputFormat::Json) => NetworkFormat::Json,
        Some(InputFormat::Csv) => NetworkFormat::Csv,
        None => NetworkFormat::detect(&args.input).unwrap_or(NetworkFormat::Json),
    };
    let net = parse_network_file(&args.input, format)?;
    let opts = SweepOptions {
        epsilon: args.epsilon,
        max_iterations: args.max_iter,
        mode: match args.mode {
            Mode::TwoStep => SweepMode::TwoStep,
            Mode::Trx => SweepMode::SingleEquationTrx,
        },
        measure: match args.measure {
            Measure::Complex => ConvergenceMeasure::ComplexDifference,
            Measure::Magnitude => ConvergenceMeasure::MagnitudeDifference,
        },
        v_min: args.v_min,
        ..SweepOptions::default()
    };
    opts.validate()?;

    let prepared = PreparedNetwork::new(&net)?;

    // Reports go to stderr when stdout carries JSON.
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut side: Box<dyn Write> = match args.output {
        Output::Table => Box::new(stdout.lock()),
        Output::Json => Box::new(stderr.lock()),
    };

    if args.dump_matrices {
        let _ = write!(
            side,
            "T =\n{}\nTRX =\n{}\n",
            prepared.topology().to_text(),
            prepared.trx().to_text()
        );
    }

    let result = prepared.solve(&opts)?;
    let text = match (args.output, args.radians) {
        (Output::Json, _) => render_result(&result, OutputFormat::Json),
        (Output::Table, false) => render_table(&result, AngleUnit::Degrees),
        (Output::Table, true) => render_table(&result, AngleUnit::Radians),
    };
    let _ = out.write_all(text.as_bytes());
    drop(out);

    if args.verify {
        let report = check_residuals(&net, &result)?;
        let status = if report.within(10.0 * opts.epsilon) {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = write!(
            side,
            "verify ({status}, limit {:e}):\n{}",
            10.0 * opts.epsilon,
            render_residuals(&report)
        );
    }
    if args.cross_check {
        let reference = reference_solve_at(&net, opts.v_ref, 1e-12)?;
        let _ = writeln!(
            side,
            "cross-check: max deviation from reference solver {:.3e} pu ({} iterations)",
            reference.max_deviation(&result),
            reference.iterations
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => solve(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
