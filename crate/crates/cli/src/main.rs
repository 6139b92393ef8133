use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ksec_cli::*;
use ksec_core::montecarlo::Sampler;
use ksec_core::{PolicyKind, PolicyParams};

#[derive(Parser)]
#[command(name = "ksec", version, about = "Analyze, simulate and optimize SINGLE-REF and OPTIMISTIC k-secretary policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output format (default: csv for `table`, json otherwise)
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads, 0 = one per core
    #[arg(long, env = "KSEC_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct Instance {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// First position eligible for acceptance (the sampling phase is 1..t-1)
    #[arg(long)]
    t: usize,
    /// Reference rank (SINGLE-REF only)
    #[arg(long, default_value_t = 1)]
    r: usize,
}

impl Instance {
    fn params(&self) -> CliResult<PolicyParams> {
        Ok(PolicyParams::new(self.n, self.k, self.t, self.r)?)
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PolicyArg {
    SingleRef,
    Optimistic,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::SingleRef => PolicyKind::SingleRef,
            PolicyArg::Optimistic => PolicyKind::Optimistic,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SamplerArg {
    Auto,
    FullOrder,
    TopRanks,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Auto => Sampler::Auto,
            SamplerArg::FullOrder => Sampler::FullOrder,
            SamplerArg::TopRanks => Sampler::TopRanks,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact finite-n acceptance probabilities and ratio of SINGLE-REF
    Exact {
        #[command(flatten)]
        inst: Instance,
        #[command(flatten)]
        common: Common,
    },
    /// Optimal (r, c) and asymptotic ratio for k = 1..=k-max, with Kleinberg's bound
    Table {
        #[arg(long)]
        k_max: usize,
        /// Golden-section tolerance on c
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimate of slot probabilities and ratio
    Simulate {
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[command(flatten)]
        inst: Instance,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        sampler: SamplerArg,
        #[command(flatten)]
        common: Common,
    },
    /// Check the combinatorial identities by enumerating all orders, n <= n-max
    Verify {
        #[arg(long)]
        n_max: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Maximize the asymptotic ratio for one k, or for OPTIMISTIC with k = 2
    Optimize {
        #[arg(long, conflicts_with = "optimistic_k2", required_unless_present = "optimistic_k2")]
        k: Option<usize>,
        #[arg(long)]
        optimistic_k2: bool,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Exact acceptance counts over all n! orders (n <= 12)
    Oracle {
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[command(flatten)]
        inst: Instance,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Exact { common, .. }
            | Command::Table { common, .. }
            | Command::Simulate { common, .. }
            | Command::Verify { common, .. }
            | Command::Optimize { common, .. }
            | Command::Oracle { common, .. } => common,
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Table { .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn run(cmd: &Command) -> CliResult<String> {
    let format = cmd.common().format.unwrap_or(cmd.default_format());
    let text = match cmd {
        Command::Exact { inst, .. } => exact_report(inst.n, inst.k, inst.t, inst.r)?.render(format),
        Command::Table { k_max, tolerance, .. } => {
            if *k_max == 0 {
                return Err(CliError::Usage("--k-max must be at least 1".into()));
            }
            table_report(*k_max, *tolerance)?.render(format)
        }
        Command::Simulate { policy, inst, trials, seed, sampler, .. } => {
            let params = match policy {
                PolicyArg::SingleRef => inst.params()?,
                PolicyArg::Optimistic => PolicyParams::without_reference(inst.n, inst.k, inst.t)?,
            };
            simulate_report((*policy).into(), params, *trials, *seed, (*sampler).into())?.render(format)
        }
        Command::Verify { n_max, .. } => {
            let rep = verify_report(*n_max)?;
            let text = rep.render(format);
            if !rep.passed {
                let message = format!("{} of {} identity checks failed", rep.failures, rep.instances);
                return Err(CliError::Failed { message, report: Some(text) });
            }
            text
        }
        Command::Optimize { k, optimistic_k2, tolerance, .. } => {
            optimize_report(*k, *optimistic_k2, *tolerance)?.render(format)
        }
        Command::Oracle { policy, inst, .. } => {
            let params = match policy {
                PolicyArg::SingleRef => inst.params()?,
                PolicyArg::Optimistic => PolicyParams::without_reference(inst.n, inst.k, inst.t)?,
            };
            oracle_report((*policy).into(), params)?.render(format)
        }
    };
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global() {
        eprintln!("ksec: cannot start worker pool: {e}");
        return ExitCode::from(exit::USAGE as u8);
    }
    let (text, code) = match run(&cli.command) {
        Ok(text) => (Some(text), exit::OK),
        Err(CliError::Failed { message, report }) => {
            eprintln!("ksec: {message}");
            (report, exit::VERIFICATION_FAILED)
        }
        Err(CliError::Usage(message)) => {
            eprintln!("ksec: {message}");
            (None, exit::USAGE)
        }
    };
    if let Some(text) = text {
        if let Err(e) = write_output(&text, common.output.as_deref()) {
            eprintln!("ksec: cannot write output: {e}");
            return ExitCode::from(exit::USAGE as u8);
        }
    }
    ExitCode::from(code as u8)
}
