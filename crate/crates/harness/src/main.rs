use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use steep_harness::experiments::{run_needles, run_optimize, run_phylo, run_spectral_scan};
use steep_harness::summary::summarize_dir;
use steep_harness::{Experiment, HarnessError, LadderSpec, Overrides, Result, RunConfig};

#[derive(Parser)]
#[command(name = "steep", version, about = "Tempered Small-World sampler experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-needle Gaussian mixture in the plane.
    Needles(RunArgs),
    /// Tree topologies under a Jukes-Cantor likelihood with two equal modes.
    Phylo(RunArgs),
    /// Exact spectral gaps of grid chains across temperatures, plus the inequality suites.
    SpectralScan(RunArgs),
    /// The sampler run below temperature 1 as a global optimiser.
    Optimize(RunArgs),
    /// Recompute summary.json from a run directory and print it.
    Summarize {
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file layered over the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Required here or in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<u64>,
    /// Iterations after burn-in.
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long)]
    thin: Option<u64>,
    /// `t_H,tau`, `auto`, or an explicit list starting at 1.
    #[arg(long, allow_hyphen_values = true)]
    ladder: Option<LadderSpec>,
    /// Probability of a long-range move.
    #[arg(long)]
    s: Option<f64>,
}

impl RunArgs {
    fn resolve(&self, experiment: Experiment) -> Result<RunConfig> {
        let o = Overrides {
            seed: self.seed,
            out: self.out.clone(),
            reps: self.reps,
            iters: self.iters,
            burn_in: self.burn_in,
            thin: self.thin,
            ladder: self.ladder.clone(),
            s: self.s,
        };
        RunConfig::resolve(experiment, self.config.as_deref(), &o)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Needles(a) => {
            let cfg = a.resolve(Experiment::Needles)?;
            let r = run_needles(&cfg)?;
            let n = r.summary.needles.as_ref().expect("needles summary");
            println!(
                "needles: {} reps, ladder {:?}; mode occupancy mean {:.4} sd {:.4} (p5 {:.4}, p95 {:.4}); region p mean {:.4}",
                cfg.reps,
                r.temperatures,
                n.mode_occupancy.mean,
                n.mode_occupancy.sd,
                n.mode_occupancy.p5,
                n.mode_occupancy.p95,
                n.region.mean
            );
            if let Some(b) = &r.baseline {
                println!("local baseline: {} visits near the second mean in {} steps", b.visits, b.steps);
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Phylo(a) => {
            let cfg = a.resolve(Experiment::Phylo)?;
            let r = run_phylo(&cfg)?;
            let p = r.summary.phylo.as_ref().expect("phylo summary");
            println!(
                "phylo: ladder {:?}; mass A {:.4}, B {:.4}, on modes {:.4}; switches {:?}",
                r.temperatures, p.mass_a.mean, p.mass_b.mean, p.mass_on_modes.mean, p.switches
            );
            if let Some(e) = &r.exact {
                println!("exact posterior: P(A) {:.4}, P(B) {:.4}, TV {:.4}", e.probability_a, e.probability_b, e.tv);
            }
            if let Some(b) = &r.baseline {
                println!("NNI baseline: {} visits to B in {} steps", b.visits, b.steps);
            }
            if let Some(o) = &r.oracle {
                println!("{}-taxon oracle: TV {:.4} over {} topologies", o.taxa, o.tv, o.topologies);
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::SpectralScan(a) => {
            let cfg = a.resolve(Experiment::SpectralScan)?;
            let r = run_spectral_scan(&cfg)?;
            for row in &r.rows {
                println!(
                    "t = {:>6}: gap exploring {:.6}, gap sampling {:.6}",
                    row.t, row.gap_exploring, row.gap_sampling
                );
            }
            println!(
                "slopes: exploring {:?} in {:?}, sampling {:?} in {:?}; suites clean: {}",
                r.slope_exploring, r.band_exploring, r.slope_sampling, r.band_sampling, r.suites.clean
            );
            println!("wrote {}", cfg.out.display());
            if !r.passes {
                return Err(HarnessError::Band(r.failures().join("; ")));
            }
        }
        Command::Optimize(a) => {
            let cfg = a.resolve(Experiment::Optimize)?;
            let r = run_optimize(&cfg)?;
            for rep in &r.reps {
                println!(
                    "rep {}: best {:?} (log density {:.6}) at iteration {}, within {} at {}; distance to optimum {:?}",
                    rep.rep,
                    rep.best,
                    rep.best_log_density,
                    rep.best_iteration,
                    r.epsilon,
                    rep.first_entry,
                    rep.distance_to_optimum
                );
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Summarize { dir } => {
            print!("{}", summarize_dir(&dir)?.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
