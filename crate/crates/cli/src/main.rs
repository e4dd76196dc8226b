use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use contact_penalty::experiment::{
    check_criterion, read_displacement, run_penalty, run_signorini, run_sweep, write_displacement, ExperimentConfig,
    Setup,
};

/// Penalty approximation of frictional contact for a 2D elastic body.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (`key = value` lines); defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the random probe points; overrides `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the triangulation to `mesh.txt`.
    Mesh {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the rigid-foundation problem.
    Signorini {
        #[command(flatten)]
        common: Common,
    },
    /// Solve one penalty problem.
    Penalty {
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the lambda sweep and write `sweep.csv` and `sweep_report.txt`.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Print the residuals of a displacement file.
    Criterion {
        #[arg(long)]
        solution: PathBuf,
        /// Number of random probe points (defaults to `probes` from the configuration).
        #[arg(long)]
        probes: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output.clone());
        Ok((cfg, out))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Mesh { common } => {
            let (cfg, out) = common.load()?;
            let setup = Setup::new(&cfg).context("building the mesh")?;
            create_dir(&out)?;
            println!(
                "{} nodes, {} triangles, {} boundary edges",
                setup.mesh.num_nodes(),
                setup.mesh.num_triangles(),
                setup.mesh.boundary_edges.len()
            );
            write(out.join("mesh.txt"), &setup.mesh.to_text())?;
        }
        Command::Signorini { common } => {
            let (cfg, out) = common.load()?;
            let setup = Setup::new(&cfg).context("assembling the system")?;
            let res = run_signorini(&setup).context("solving the rigid-foundation problem")?;
            println!("{}", res.report);
            println!(
                "max |reaction * u_nu| = {:e}, max u_nu = {:e}",
                res.max_complementarity(),
                res.max_penetration()
            );
            create_dir(&out)?;
            let path = out.join("signorini_displacement.txt");
            write_displacement(&path, &res.field)?;
            println!("wrote {}", path.display());
            write(out.join("signorini_complementarity.txt"), &res.complementarity_text())?;
        }
        Command::Penalty { lambda, common } => {
            let (cfg, out) = common.load()?;
            let setup = Setup::new(&cfg).context("assembling the system")?;
            let rep = run_penalty(&setup, lambda, None).with_context(|| format!("solving with lambda = {lambda}"))?;
            println!("{rep}");
            println!("max penetration = {:e}", setup.system.max_penetration(&rep.solution));
            create_dir(&out)?;
            let path = out.join("penalty_displacement.txt");
            write_displacement(&path, &setup.system.expand(&rep.solution))?;
            println!("wrote {}", path.display());
        }
        Command::Sweep { common } => {
            let (cfg, out) = common.load()?;
            let setup = Setup::new(&cfg).context("assembling the system")?;
            let sweep = run_sweep(&setup).context("running the sweep")?;
            let csv = sweep.to_csv()?;
            print!("{csv}");
            print!("{}", sweep.summary());
            create_dir(&out)?;
            write(out.join("sweep.csv"), &csv)?;
            write(out.join("sweep_report.txt"), &sweep.summary())?;
        }
        Command::Criterion {
            solution,
            probes,
            common,
        } => {
            let (cfg, _) = common.load()?;
            let setup = Setup::new(&cfg).context("assembling the system")?;
            let field = read_displacement(&solution).with_context(|| format!("reading {}", solution.display()))?;
            let rep = check_criterion(&setup, &field, probes.unwrap_or(cfg.probes), cfg.seed)?;
            println!("{rep}");
        }
    }
    Ok(())
}
