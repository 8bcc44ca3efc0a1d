use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use critgraph::branching::{progeny_moments, write_moments_csv, BranchingProcess, MomentRow, Root, DEFAULT_PROGENY_CAP};
use critgraph::graph::{coalescent_family, components, generate_dense, generate_sparse, write_components_csv, KernelKind, DEFAULT_DENSE_GUARD};
use critgraph::harness::{run_experiment, stats::summarize, ExperimentConfig};
use critgraph::levy::{sample_clocks, thinned_path, HorizonPolicy, ThinnedLevyParams, DEFAULT_TRUNCATION};
use critgraph::model::{apply_window, build_weights, critical_pareto, limit_params, nu_n, WeightSequence};
use critgraph::rng::stream_rng;
use critgraph::{exploration, Error, Result};

#[derive(Parser)]
#[command(name = "critgraph", version, about = "Critical inhomogeneous random graphs and their scaling limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Tail exponent in (3, 4); the weights follow the critical Pareto law.
    #[arg(long, default_value_t = 3.5)]
    tau: f64,
    /// Location in the critical window.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one graph; writes edges.csv and components.csv.
    Gen {
        #[arg(long)]
        n: usize,
        /// norros_reittu (sparse sampler), chung_lu or grg (pairwise).
        #[arg(long, default_value = "norros_reittu")]
        kernel: String,
        #[command(flatten)]
        common: Common,
    },
    /// Explore the cluster of one vertex; writes trace.csv.
    Explore {
        #[arg(long)]
        n: usize,
        /// 1-based start vertex.
        #[arg(long, default_value_t = 1)]
        start: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sample a thinned Levy path; writes path.csv.
    Levy {
        #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
        truncation: u64,
        /// Path horizon; defaults to the hitting-time policy's initial horizon.
        #[arg(long)]
        horizon: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Graph coalescent states on a time grid; writes coalescent.csv.
    Coalesce {
        #[arg(long)]
        n: usize,
        /// Comma-separated ascending times added to lambda.
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        t: Vec<f64>,
        /// Number of largest masses written per time.
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Branching-process moments against their closed forms; writes moments.csv.
    Bp {
        #[arg(long)]
        n: usize,
        /// Target nu_n, reached by rescaling the weights.
        #[arg(long, default_value_t = 0.9)]
        nu: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named experiment; writes report.json and samples_*.csv.
    Experiment {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn create(dir: &Path, file: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(file))?))
}

fn weights(tau: f64, n: usize, lambda: f64) -> Result<WeightSequence> {
    apply_window(&build_weights(&critical_pareto(tau)?, n)?, lambda)
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen { n, kernel, common } => {
            let w = weights(common.tau, n, common.lambda)?;
            let mut rng = stream_rng(common.seed, "gen", 0);
            let g = match kernel.as_str() {
                "norros_reittu" => generate_sparse(&w, &mut rng)?,
                "chung_lu" => generate_dense(&w, KernelKind::ChungLu, DEFAULT_DENSE_GUARD, &mut rng)?,
                "grg" => generate_dense(&w, KernelKind::Grg, DEFAULT_DENSE_GUARD, &mut rng)?,
                other => return Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
            };
            g.write_csv(create(&common.out, "edges.csv")?)?;
            let comps = components(&g, &w)?;
            write_components_csv(&comps, create(&common.out, "components.csv")?)?;
            println!("{} edges, {} components, largest {}", g.edges.len(), comps.len(), comps.iter().map(|c| c.size).max().unwrap_or(0));
        }
        Command::Explore { n, start, common } => {
            let w = weights(common.tau, n, common.lambda)?;
            if start == 0 {
                return Err(Error::VertexOutOfRange { vertex: 0, n });
            }
            let mut rng = stream_rng(common.seed, "explore", 0);
            let t = exploration::explore_cluster(&w, start - 1, &[], None, &mut rng)?;
            t.write_csv(create(&common.out, "trace.csv")?)?;
            println!("cluster size {}, weight {}, vertex checks {}", t.cluster_size, t.cluster_weight, t.checks);
        }
        Command::Levy { truncation, horizon, common } => {
            let p = limit_params(&critical_pareto(common.tau)?, common.lambda)?;
            let tp = ThinnedLevyParams::from_limit(&p, truncation)?;
            let horizon = horizon.unwrap_or_else(|| HorizonPolicy::default().initial_horizon(&tp));
            let mut rng = stream_rng(common.seed, "levy", 0);
            let clocks = sample_clocks(&tp, horizon, false, &mut rng);
            let path = thinned_path(&tp, &clocks, horizon)?;
            path.write_csv(create(&common.out, "path.csv")?)?;
            match path.hitting_time() {
                Some(h) => println!("H(0) = {h}"),
                None => println!("no passage before {horizon}"),
            }
        }
        Command::Coalesce { n, t, top, common } => {
            let w = weights(common.tau, n, 0.0)?;
            let mut rng = stream_rng(common.seed, "coalesce", 0);
            let fam = coalescent_family(&w, common.lambda, &t, &mut rng)?;
            let mut rows = Vec::new();
            for (k, state) in fam.states.iter().enumerate() {
                for (r, x) in state.iter().take(top).enumerate() {
                    rows.push(vec![fam.t[k], (r + 1) as f64, *x]);
                }
            }
            critgraph::harness::report::write_csv(&common.out.join("coalescent.csv"), &["t", "rank", "mass"], &rows)?;
            println!("{} clocks below the largest threshold", fam.clocks);
        }
        Command::Bp { n, nu, reps, common } => {
            let base = weights(common.tau, n, common.lambda)?;
            let s = nu / nu_n(&base)?;
            let w = WeightSequence::from_weights(base.weights().iter().map(|x| x * s).collect(), Some(common.tau))?;
            let pm = progeny_moments(&w, None)?;
            let bp = BranchingProcess::new(&w)?;
            let mut rng = stream_rng(common.seed, "bp", 0);
            let outs: Vec<_> = (0..reps).map(|_| bp.simulate(Root::SizeBiased, DEFAULT_PROGENY_CAP, &mut rng)).filter(|o| !o.capped).collect();
            let t: Vec<f64> = outs.iter().map(|o| o.t as f64).collect();
            let wt: Vec<f64> = outs.iter().map(|o| o.wt).collect();
            let (st, sw) = (summarize(&t)?, summarize(&wt)?);
            let rows = [MomentRow::new("E[T]", pm.mean_t, st.mean, st.se), MomentRow::new("E[w_T]", pm.mean_wt, sw.mean, sw.se)];
            write_moments_csv(&rows, create(&common.out, "moments.csv")?)?;
            for r in &rows {
                println!("{}: analytic {:.6}, monte carlo {:.6} (z = {:.2})", r.quantity, r.analytic, r.monte_carlo, r.z);
            }
        }
        Command::Experiment { name, config, seed, out } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::from_file(path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(file_name) = &cfg.experiment {
                if file_name != &name {
                    return Err(Error::Config(format!("config is for '{file_name}', not '{name}'")));
                }
            }
            cfg.experiment = Some(name);
            cfg.seed = seed.or(cfg.seed);
            cfg.out = out.or(cfg.out);
            if cfg.out.is_none() {
                return Err(Error::Config("--out is required".into()));
            }
            let report = run_experiment(&cfg)?;
            for line in report.criterion_lines() {
                println!("{line}");
            }
            for e in &report.errors {
                eprintln!("replication error: {e}");
            }
            println!("runtime {:.1}s", report.runtime_secs);
            return Ok(if report.all_pass { ExitCode::SUCCESS } else { ExitCode::from(2) });
        }
    }
    Ok(ExitCode::SUCCESS)
}
