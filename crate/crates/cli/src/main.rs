use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use floquet_core::newton::LRule;
use floquet_lab::commands::{cmd_evolve, cmd_newton, cmd_spectrum, cmd_verify_all};
use floquet_lab::config::{ExperimentConfig, JRange};
use floquet_lab::manifest::{RunManifest, MANIFEST_NAME};
use floquet_lab::{exit, init_threads, CliError};

#[derive(Parser)]
#[command(
    name = "floquet-lab",
    version,
    about = "Spectral and dynamical experiments on the resonant Floquet lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-gap check, local eigenvalues lambda_j and the spacing report.
    Spectrum(Overrides),
    /// Newton certificates, dense comparison and the inverse-power fit.
    Newton(Overrides),
    /// Split-step evolution with Sobolev norm history.
    Evolve(Overrides),
    /// The full acceptance suite.
    VerifyAll(Overrides),
}

/// Every flag overrides the matching field of the JSON config.
#[derive(Args)]
struct Overrides {
    /// JSON experiment config; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long)]
    j_max: Option<i64>,
    /// Target `j` or inclusive range `a..b`.
    #[arg(long, allow_hyphen_values = true)]
    j: Option<JRange>,
    /// `minimal` (L = |j|) or `maximal` (L = 2(|j| - 1)).
    #[arg(long)]
    l_rule: Option<LRule>,
    #[arg(long)]
    l0: Option<u32>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    compare_dense: bool,
    /// Fourier radius of the evolved datum.
    #[arg(long = "J", alias = "big-j")]
    big_j: Option<usize>,
    /// Time half-width of the Bloch box.
    #[arg(long = "N", alias = "n-max")]
    n_max: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    steps_per_period: Option<usize>,
    /// Sobolev indices, comma separated.
    #[arg(long = "s", alias = "s-values", value_delimiter = ',')]
    s_values: Option<Vec<f64>>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    bloch_check: bool,
    #[arg(long = "bloch-J")]
    bloch_j: Option<usize>,
    #[arg(long)]
    bloch_periods: Option<usize>,
    #[arg(long)]
    bloch_steps_per_period: Option<usize>,
    /// Reduced sizes for verify-all.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

impl Overrides {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(
            output_dir,
            experiment,
            delta,
            j_max,
            j,
            l_rule,
            l0,
            max_iter,
            big_j,
            n_max,
            periods,
            steps_per_period,
            s_values,
            power,
            bloch_j,
            bloch_periods,
            bloch_steps_per_period,
            seed
        );
        if self.tolerance.is_some() {
            c.tolerance = self.tolerance;
        }
        c.compare_dense |= self.compare_dense;
        c.bloch_check |= self.bloch_check;
        c.quick |= self.quick;
        Ok(c)
    }
}

fn report(m: &RunManifest, print_steps: bool) {
    if print_steps {
        for s in &m.steps {
            println!(
                "[{}] {}: {}",
                if s.pass { "PASS" } else { "FAIL" },
                s.name,
                s.detail
            );
        }
    }
    for w in &m.warnings {
        println!("warning: {w}");
    }
    println!(
        "{} in {:.1} s; manifest at {}",
        if m.pass {
            "all checks passed"
        } else {
            "some checks FAILED"
        },
        m.wall_clock_seconds,
        m.config.output_dir.join(MANIFEST_NAME).display()
    );
}

fn run(command: Command) -> Result<RunManifest, CliError> {
    let (ov, which) = match command {
        Command::Spectrum(o) => (o, 0),
        Command::Newton(o) => (o, 1),
        Command::Evolve(o) => (o, 2),
        Command::VerifyAll(o) => (o, 3),
    };
    let level = if ov.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let config = ov.resolve()?;
    config.validate()?;
    if let Some(n) = init_threads()? {
        log::info!("using {n} worker threads");
    }
    let manifest = match which {
        0 => cmd_spectrum(&config)?,
        1 => cmd_newton(&config)?,
        2 => cmd_evolve(&config)?,
        _ => cmd_verify_all(&config, std::io::stdout())?,
    };
    report(&manifest, which != 3);
    Ok(manifest)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::PASS
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(m) if m.pass => ExitCode::from(exit::PASS as u8),
        Ok(m) => {
            for s in m.steps.iter().filter(|s| !s.pass) {
                eprintln!("failed: {}", s.name);
            }
            ExitCode::from(exit::ACCEPTANCE_FAILURE as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
