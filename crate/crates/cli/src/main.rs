use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};

use herman::exact::Arithmetic;
use herman_cli::{run, Command, CliError, ExperimentSpec, FunctionalKind};

/// Exact solves, potential checks, scans and simulations for Herman's
/// token ring. Every run writes a JSON report.
#[derive(Debug, Parser)]
#[command(name = "herman-cli", version)]
#[command(group(ArgGroup::new("mode").args(["exact", "float"])))]
struct Args {
    /// What to run. Omit when `--spec` is given.
    #[arg(value_enum, required_unless_present = "spec")]
    command: Option<Command>,

    /// Read the experiment spec from a JSON file instead of flags.
    #[arg(long, conflicts_with = "command")]
    spec: Option<PathBuf>,

    /// Ring size (lower end of the range for range commands).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Token positions, 1-based, comma separated.
    #[arg(long, value_delimiter = ',')]
    tokens: Option<Vec<usize>>,
    /// Three gaps `a,b,c`; the configuration starts at node 1.
    #[arg(long, value_delimiter = ',')]
    gaps: Option<Vec<usize>>,
    #[arg(long, value_enum, ignore_case = true)]
    functional: Option<FunctionalKind>,
    /// Report the configurations maximizing E(T).
    #[arg(long)]
    argmax: bool,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base `a` of E(a^T).
    #[arg(long)]
    base: Option<f64>,
    /// Lattice spacing for scan-q.
    #[arg(long)]
    step: Option<f64>,
    /// Spacing of the exported Q samples.
    #[arg(long)]
    sample_step: Option<f64>,
    /// Exclusion radius around the origin and the corner for scan-q.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    t_max: Option<u64>,
    /// Lower bound asserted by scan-q and scan-ratio.
    #[arg(long)]
    threshold: Option<f64>,
    /// Residual bound asserted by verify-recursion.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    /// Floating-point arithmetic (default).
    #[arg(long)]
    float: bool,
    /// Report path; defaults to `$HERMAN_REPORT_DIR` or `./reports`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the CSV projection next to the report.
    #[arg(long)]
    csv: bool,
    /// Overwrite an existing report.
    #[arg(long)]
    force: bool,
}

impl Args {
    fn into_spec(self) -> Result<(ExperimentSpec, bool), CliError> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path)?;
            let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
            if self.out.is_some() {
                spec.out = self.out;
            }
            spec.csv |= self.csv;
            return Ok((spec, self.force));
        }
        let mut spec = ExperimentSpec::new(self.command.expect("clap requires a command"));
        spec.n = self.n;
        spec.n_max = self.n_max;
        spec.functional = self.functional;
        spec.argmax = self.argmax;
        spec.runs = self.runs;
        spec.seed = self.seed;
        spec.base = self.base;
        spec.step = self.step;
        spec.sample_step = self.sample_step;
        spec.delta = self.delta;
        spec.t_max = self.t_max;
        spec.threshold = self.threshold;
        spec.tolerance = self.tolerance;
        spec.arithmetic = if self.exact { Arithmetic::Exact } else { Arithmetic::Float };
        spec.out = self.out;
        spec.csv = self.csv;
        Ok((spec.with_config_input(self.tokens, self.gaps)?, self.force))
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = args.into_spec().and_then(|(spec, force)| run(spec, force));
    match outcome {
        Ok((report, path)) => {
            println!("report: {}", path.display());
            for check in &report.checks {
                println!("{} {}", if check.passed { "PASS" } else { "FAIL" }, check.name);
            }
            ExitCode::from(herman_cli::exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("herman-cli: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
