use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use jass_core::harness::{run_ablation, run_mismatch_experiment, run_roc_experiment, ExperimentConfig};
use jass_core::signal::ChannelSource;
use jass_core::{DetectorKind, JammerKind};

#[derive(Parser)]
#[command(name = "jass", version, about = "Jammer-resilient synchronization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo ROC sweep; writes roc.csv and roc.json.
    #[command(args_override_self = true)]
    Roc {
        #[command(flatten)]
        common: Common,
    },
    /// Histogram of L - l_hat at one threshold with a fixed arrival time.
    #[command(args_override_self = true)]
    Mismatch {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        /// Jammer kinds to run; defaults to all six attacks.
        #[arg(long, value_delimiter = ',')]
        jammers: Option<Vec<JammerKind>>,
    },
    /// ROC sweep repeated for each value of one scenario parameter.
    #[command(args_override_self = true)]
    Ablation {
        #[command(flatten)]
        common: Common,
        /// One of k, b, snr_db, rho_db, i, t_max, i_hat.
        #[arg(long)]
        vary: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<DetectorKind>>,
    #[arg(long)]
    jammer: Option<JammerKind>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho_db: Option<f64>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    i: Option<usize>,
    #[arg(long)]
    i_hat: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    fixed_l: Option<usize>,
    #[arg(long)]
    channel_file: Option<PathBuf>,
}

impl Common {
    fn build(&self, file_name: &str) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        let sc = &mut cfg.scenario;
        if let Some(v) = self.seed {
            sc.master_seed = v;
        }
        if let Some(v) = self.jammer {
            sc.jammer_kind = v;
        }
        if let Some(v) = self.snr_db {
            sc.snr_db = v;
        }
        if let Some(v) = self.rho_db {
            sc.rho_db = v;
        }
        if let Some(v) = self.b {
            sc.bs_antennas = v;
        }
        if let Some(v) = self.i {
            sc.jammer_antennas = v;
        }
        if let Some(v) = self.i_hat {
            sc.assumed_jammer_antennas = v;
        }
        if let Some(v) = self.k {
            sc.seq_len = v;
        }
        if let Some(v) = self.t_max {
            sc.power_iterations = v;
        }
        if let Some(path) = &self.channel_file {
            sc.channel_source = ChannelSource::File {
                path: path.clone(),
                normalize: true,
            };
        }
        if let Some(v) = self.trials {
            cfg.num_trials = v;
        }
        if let Some(v) = &self.detectors {
            cfg.detectors = v.clone();
        }
        if self.fixed_l.is_some() {
            cfg.fixed_l = self.fixed_l;
        }
        cfg.output_path = Some(self.out.join(file_name));
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Roc { common } => {
            let cfg = common.build("roc.csv")?;
            let result = run_roc_experiment(&cfg)?;
            for (kind, _) in &result.curves {
                let best = result.best(*kind).expect("curve present");
                println!("{kind:>14}  best TER {:.4} at alpha {:.3}", best.ter, best.alpha);
            }
            println!("wrote {}", cfg.output_path.unwrap().display());
        }
        Command::Mismatch { common, alpha, jammers } => {
            let mut cfg = common.build("mismatch.csv")?;
            if cfg.fixed_l.is_none() {
                cfg.fixed_l = Some(4 * cfg.scenario.seq_len);
            }
            let jammers = jammers.unwrap_or_else(|| JammerKind::ALL[1..].to_vec());
            if jammers.is_empty() {
                bail!("no jammer kinds selected");
            }
            let pmfs = run_mismatch_experiment(&cfg, alpha, &jammers)?;
            for p in &pmfs {
                println!(
                    "{:>18} {:>12}  detections {:>6}  false negatives {:>6}",
                    p.jammer.as_str(),
                    p.detector.as_str(),
                    p.detections(),
                    p.false_negatives
                );
            }
            println!("wrote {}", cfg.output_path.unwrap().display());
        }
        Command::Ablation { common, vary, values } => {
            let cfg = common.build("roc.csv")?;
            for (value, result) in run_ablation(&cfg, &vary, &values)? {
                for (kind, _) in &result.curves {
                    let best = result.best(*kind).expect("curve present");
                    println!("{vary}={value:<8} {kind:>14}  best TER {:.4} at alpha {:.3}", best.ter, best.alpha);
                }
            }
            println!("wrote results under {}", common.out.display());
        }
    }
    Ok(())
}
