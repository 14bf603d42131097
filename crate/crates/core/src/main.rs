use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use z2lab::disorder::{sample_disorder, Disorder};
use z2lab::lattice::{Lattice, SiteId, WilsonLoopSpec};
use z2lab::scan::{
    self, locate_peak, read_summaries, resume_scan, run_scan, stored_config, GridSpec, LoopConfig, PeakAxis,
    RunOptions, ScanConfig, ScanModel,
};
use z2lab::spins::{enumerate_states, System};
use z2lab::toric;

#[derive(Parser)]
#[command(name = "z2lab", version, about = "Random-plaquette gauge model and toric-code laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (p, beta) scan.
    Scan(ScanArgs),
    /// Finish an interrupted scan.
    Resume {
        /// Output directory of the partial scan.
        output: PathBuf,
        /// Config to check against the stored one; defaults to the stored config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "Z2LAB_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Exact enumeration of a small system.
    Exact {
        #[arg(long, default_value = "gauge3d")]
        model: ScanModel,
        #[arg(short = 'L', long = "size", default_value_t = 2)]
        size: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        /// Disorder sample seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
    },
    /// Exact decoding success probability on a small torus.
    ToricOracle {
        #[arg(short = 'L', long = "size", default_value_t = 3)]
        size: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
    },
    /// Locate the specific-heat peak in a summary.json.
    Peak {
        summary: PathBuf,
        /// Coordinate along the cut; inferred when omitted.
        #[arg(long)]
        axis: Option<String>,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// TOML config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = "Z2LAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    model: Option<ScanModel>,
    #[arg(short = 'L', long = "size")]
    size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Put every p on the Nishimori line.
    #[arg(long)]
    nishimori: bool,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    thermalization: Option<usize>,
    #[arg(long)]
    measurement: Option<usize>,
    #[arg(long)]
    interval: Option<usize>,
    #[arg(long)]
    r_max: Option<usize>,
    #[arg(long)]
    no_loops: bool,
    #[arg(long)]
    quiet: bool,
}

impl ScanArgs {
    fn into_config(self) -> Result<(ScanConfig, RunOptions)> {
        let mut cfg = match &self.config {
            Some(path) => ScanConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => {
                let (Some(model), Some(size), Some(n)) = (self.model, self.size, self.n_samples) else {
                    bail!("without --config, --model, --size and --n-samples are required");
                };
                ScanConfig::new(model, size, GridSpec::default(), n, 0)
            }
        };
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if let Some(l) = self.size {
            cfg.size = l;
        }
        if let Some(n) = self.n_samples {
            cfg.n_samples = n;
        }
        if let Some(s) = self.master_seed {
            cfg.master_seed = s;
        }
        if self.p.is_some() || self.beta.is_some() || self.nishimori {
            let p = self.p.unwrap_or_else(|| cfg.grid.p.clone());
            cfg.grid = if self.nishimori {
                GridSpec::nishimori(p)
            } else {
                GridSpec::product(p, self.beta.unwrap_or_else(|| cfg.grid.beta.clone()))
            };
        }
        if let Some(t) = self.thermalization {
            cfg.sweeps.thermalization = t;
        }
        if let Some(m) = self.measurement {
            cfg.sweeps.measurement = m;
        }
        if let Some(i) = self.interval {
            cfg.sweeps.interval = i;
        }
        if self.no_loops {
            cfg.loops = Some(LoopConfig::disabled());
        } else if let Some(r) = self.r_max {
            cfg.loops = Some(LoopConfig {
                enabled: true,
                r_max: Some(r),
            });
        }
        if self.output.is_some() {
            cfg.output = self.output;
        }
        if cfg.output.is_none() {
            bail!("an output directory is required (--output or `output` in the config)");
        }
        let mut opts = RunOptions::default();
        if let Some(w) = self.workers {
            opts.workers = w;
        }
        opts.progress = !self.quiet;
        Ok((cfg, opts))
    }
}

fn report(out: &scan::ScanOutput) -> Result<()> {
    let dir = out.dir.as_deref().map(|d| d.display().to_string()).unwrap_or_default();
    if !out.complete {
        println!("partial scan in {dir}: {} tasks written", out.outcomes.len());
        return Ok(());
    }
    println!("p,beta,n_samples,c,c_err,c_fluctuation,verdict,alpha,alpha_err,gamma,gamma_err");
    for s in &out.summaries {
        let d = s.decay.as_ref();
        println!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.p,
            s.beta,
            s.n_samples,
            s.c_ensemble,
            s.c_err,
            s.c_fluctuation,
            d.map_or("", |d| d.verdict.as_str()),
            d.map_or(f64::NAN, |d| d.alpha),
            d.map_or(f64::NAN, |d| d.alpha_err),
            d.map_or(f64::NAN, |d| d.gamma),
            d.map_or(f64::NAN, |d| d.gamma_err),
        );
    }
    eprintln!("wrote {dir}");
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Scan(args) => {
            let (cfg, opts) = args.into_config()?;
            report(&run_scan(&cfg, &opts)?)?;
        }
        Command::Resume {
            output,
            config,
            workers,
            quiet,
        } => {
            let mut cfg = match config {
                Some(path) => ScanConfig::load(&path)?,
                None => stored_config(&output)?,
            };
            cfg.output = Some(output);
            let mut opts = RunOptions::default();
            if let Some(w) = workers {
                opts.workers = w;
            }
            opts.progress = !quiet;
            report(&resume_scan(&cfg, &opts)?)?;
        }
        Command::Exact {
            model,
            size,
            p,
            seed,
            beta,
        } => {
            let lat = Lattice::new(model.dim(), size)?;
            let sys = System::new(lat.clone(), model.model());
            let dis = if p == 0.0 {
                Disorder::uniform(&lat, model.model())
            } else {
                sample_disorder(&lat, model.model(), p, seed)?
            };
            let loops: Vec<WilsonLoopSpec> = match model {
                ScanModel::Gauge3d => vec![WilsonLoopSpec::new((0, 1), SiteId(0), (1, 1))],
                ScanModel::Ising2d => Vec::new(),
            };
            let dos = enumerate_states(&sys, &dis, &loops)?;
            println!("beta,log_z,mean_energy,specific_heat,wilson_1x1");
            for b in beta {
                let r = dos.at_beta(b);
                let w = r.wilson.first().map_or(f64::NAN, |x| x.1);
                println!(
                    "{b},{},{},{},{w}",
                    r.log_z,
                    r.mean_energy,
                    r.specific_heat(b, lat.n_sites())
                );
            }
        }
        Command::ToricOracle { size, p } => {
            let counts = toric::exact_success_counts(size)?;
            println!("p,success");
            for q in p {
                println!("{q},{}", counts.probability(q)?);
            }
        }
        Command::Peak { summary, axis } => {
            let sums = read_summaries(&summary)?;
            let axis = match axis.as_deref() {
                None => PeakAxis::infer(&sums)?,
                Some("beta") => PeakAxis::Beta,
                Some("p") => PeakAxis::P,
                Some(other) => bail!("unknown axis {other:?}, expected beta or p"),
            };
            let pk = locate_peak(&sums, axis)?;
            println!("{}", serde_json::to_string_pretty(&pk)?);
        }
    }
    Ok(())
}
