//! `kstab`: toric K-stability, Futaki invariants, Abreu's equation and
//! Kempf–Ness flows from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit codes shared by `solve` and `pipeline`.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const UNSTABLE: u8 = 2;
    pub const FUTAKI: u8 = 3;
    pub const DIVERGENCE: u8 = 4;
    pub const UNSUPPORTED: u8 = 5;
    pub const NOT_CONVERGED: u8 = 6;
}

#[derive(Parser, Debug)]
#[command(name = "kstab", version, about = "Toric K-stability toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Directory for reports, CSV files and the run manifest.
    #[arg(long, global = true, default_value = "kstab-out")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "KSTAB_THREADS")]
    pub threads: Option<usize>,
    /// Seed for randomised inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Volumes, A, centroids, Delzant condition and Futaki invariant.
    Analyze {
        polytope: PathBuf,
    },
    /// Search crease functions max(0, <a,x> - c) for a destabiliser.
    Destabilize {
        polytope: PathBuf,
        #[arg(long, default_value_t = 8)]
        resolution: u32,
        /// Also write the witness (if any) as JSON to this path.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Lattice-point weights w_k / (k d_k) and their 1/k expansion.
    Futaki {
        polytope: PathBuf,
        /// Generator of the one-parameter subgroup, e.g. `1,0`.
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        #[arg(long, default_value_t = 1)]
        kmin: u64,
        #[arg(long, default_value_t = 40)]
        kmax: u64,
    },
    /// Futaki invariant of the filtration defined by a convex PL function.
    Filtration {
        polytope: PathBuf,
        /// Affine piece `a1,..,an:b` of f = max(pieces); repeat for several pieces.
        #[arg(long = "piece", allow_hyphen_values = true)]
        pieces: Vec<String>,
        /// Crease `a1,..,an:c`, shorthand for the pieces `0:0` and `a:-c`.
        #[arg(long, allow_hyphen_values = true)]
        crease: Option<String>,
        #[arg(long, default_value_t = 64)]
        k: u64,
    },
    /// Solve Abreu's equation on a segment or rectangle.
    Solve {
        polytope: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Write the grid every N iterations (0: only the final grid).
        #[arg(long, default_value_t = 0)]
        dump_every: usize,
        /// Run even when the Futaki invariant is non-zero.
        #[arg(long)]
        force: bool,
        /// Amplitude of a smooth bump added to the initial potential.
        #[arg(long, default_value_t = 0.0)]
        perturbation: f64,
    },
    /// Slope of the Mabuchi functional along u0 + s f for quadratic f.
    Ray {
        polytope: PathBuf,
        /// Hessian rows separated by `;`, e.g. `2` or `2,0;0,0`.
        #[arg(long, allow_hyphen_values = true)]
        hessian: String,
        /// Linear coefficients, e.g. `1,0` (default zero).
        #[arg(long, allow_hyphen_values = true)]
        linear: Option<String>,
        #[arg(long, default_value_t = 1000.0)]
        s_max: f64,
        #[arg(long, default_value_t = 256)]
        mesh: usize,
    },
    /// Gradient flow of |mu|^2 for points on the sphere.
    FlowSphere {
        /// File with lines `x y z [multiplicity]`.
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        points: Option<PathBuf>,
        /// Use this many random points (seeded by --seed) instead of a file.
        #[arg(long)]
        random: Option<usize>,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Gradient flow of |[A, A*]|^2 along a conjugation orbit.
    FlowMatrix {
        /// File with one matrix row per line, entries like `1`, `2i`, `1-0.5i`.
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Destabilise, then solve: exit 0 solved, 2 unstable, 3 Futaki non-zero,
    /// 4 divergence certificate, 5 domain not supported by the solver, 6 not converged.
    Pipeline {
        polytope: PathBuf,
        #[arg(long, default_value_t = 8)]
        resolution: u32,
        #[command(flatten)]
        solve: SolveArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Cells per axis of the graded mesh.
    #[arg(long, default_value_t = 64)]
    pub mesh: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Divergence ceiling for sup |phi| (default 1000 diam(P) A).
    #[arg(long)]
    pub ceiling: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct FlowArgs {
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_steps: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(exit::ERROR);
        }
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::ERROR)
        }
    }
}
