//! tentflow command-line front end: norm evaluation, inequality campaigns,
//! solver runs, and parameter sweeps.
//!
//! Exit codes: 0 success, 1 validation/config error, 2 diverged runs or
//! unstable verdicts. `TENTFLOW_THREADS` caps worker parallelism.

mod config;
mod runs;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "tentflow",
    version,
    about = "Tent-space norms, operator campaigns, and a mild Navier-Stokes solver on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a norm of a preset field or a checkpoint slice
    Norm(NormCli),
    /// Run a named inequality campaign (or `all`)
    Verify(VerifyCli),
    /// Run the mild solver from a named preset
    Solve(SolveCli),
    /// Grid of (alpha, eps0, N) solver runs from a config file
    Sweep(SweepCli),
}

#[derive(Args)]
struct NormCli {
    /// u_alpha|bmo_minus1|v_alpha|besov_inf_inf|besov_two_inf|sobolev|e_alpha
    #[arg(long, default_value = "u_alpha")]
    family: String,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Tent weight exponent (families tent_t / tent_boldt)
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Sobolev smoothness (family = sobolev)
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Integrability power (classical tent family)
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Named preset field (zero|bump|sine|rough|single_mode|taylor_green)
    #[arg(long)]
    preset: Option<String>,
    /// Checkpoint file to read the field from
    #[arg(long)]
    input: Option<PathBuf>,
    /// first|last|<index> slice of the checkpoint trajectory
    #[arg(long, default_value = "first")]
    slice: String,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyCli {
    /// Campaign id (timederiv|maxreg|leray|gradprod|key|bilinear|embed|mollify|linear_flow|scaling|offdiag|all)
    #[arg(long, default_value = "all")]
    id: String,
    /// Base grid; refinement doubles it
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// JSON run config (overrides the flags above)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveCli {
    /// zero|single_mode|taylor_green|bump|rough
    #[arg(long, default_value = "bump")]
    preset: String,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    eps0: f64,
    /// Peak amplitude of the density lump `rho0 - 1`
    #[arg(long, default_value_t = 0.0)]
    rho_dev: f64,
    #[arg(long, default_value_t = 0.1)]
    t_final: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCli {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("TENTFLOW_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Norm(a) => runs::run_norm(&runs::NormArgs {
            family: a.family.clone(),
            alpha: a.alpha,
            beta: a.beta,
            s: a.s,
            p: a.p,
            preset: a.preset.clone(),
            input: a.input.clone(),
            slice: a.slice.clone(),
            n: a.n,
            l: a.l,
            out: a.out.clone(),
        }),
        Command::Verify(a) => runs::run_verify(&runs::VerifyArgs {
            id: a.id.clone(),
            n: a.n,
            alpha: a.alpha,
            seed: a.seed,
            samples: a.samples,
            out: a.out.clone(),
            config: a.config.clone(),
        }),
        Command::Solve(a) => runs::run_solve(&runs::SolveArgs {
            preset: a.preset.clone(),
            n: a.n,
            alpha: a.alpha,
            eps0: a.eps0,
            rho_dev: a.rho_dev,
            t_final: a.t_final,
            out: a.out.clone(),
            config: a.config.clone(),
        }),
        Command::Sweep(a) => runs::run_sweep(&runs::SweepArgs {
            config: a.config.clone(),
            out: a.out.clone(),
        }),
    };
    match result {
        Ok(runs::ExitStatus(code)) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
