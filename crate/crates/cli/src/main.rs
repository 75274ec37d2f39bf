use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cp_bures_cli::{execute, Command, FormulationChoice, JobSpec};

#[derive(Parser)]
#[command(name = "cp-bures", version, about = "Bures distance between completely positive maps")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Solver tolerance on the duality gap.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Form::Auto)]
    formulation: Form,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Auto,
    Intertwiner,
    Extension,
}

#[derive(Subcommand)]
enum Sub {
    /// Bures distance between two maps.
    Bures { a: PathBuf, b: PathBuf },
    /// Completely bounded norm of the difference of two maps.
    Cbnorm { a: PathBuf, b: PathBuf },
    /// Distance together with its cb-norm bounds.
    Bounds { a: PathBuf, b: PathBuf },
    /// Decomposition phi = c^* . c + psi from the distance to the identity.
    Rigidity { a: PathBuf },
    /// Parse and validate a map file.
    Verify { a: PathBuf },
    /// Randomized metric and perturbation property checks.
    Suite {
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Pairwise distance table as CSV.
    Matrix {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, inputs, trials) = match cli.command {
        Sub::Bures { a, b } => (Command::Bures, vec![a, b], 0),
        Sub::Cbnorm { a, b } => (Command::Cbnorm, vec![a, b], 0),
        Sub::Bounds { a, b } => (Command::Bounds, vec![a, b], 0),
        Sub::Rigidity { a } => (Command::Rigidity, vec![a], 0),
        Sub::Verify { a } => (Command::Verify, vec![a], 0),
        Sub::Suite { trials } => (Command::Suite, vec![], trials),
        Sub::Matrix { files } => (Command::Matrix, files, 0),
    };
    let job = JobSpec {
        command,
        inputs,
        formulation: match cli.opts.formulation {
            Form::Auto => FormulationChoice::Auto,
            Form::Intertwiner => FormulationChoice::Intertwiner,
            Form::Extension => FormulationChoice::Extension,
        },
        tol: cli.opts.tol,
        seed: cli.opts.seed,
        trials,
        output: cli.opts.output,
    };

    let result = execute(&job).and_then(|(text, code)| {
        match &job.output {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
