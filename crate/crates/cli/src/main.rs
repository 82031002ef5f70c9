use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mingle_core::gcn::Routing;
use mingle_core::graphs::adjacency_csv;
use mingle_core::harness::{
    ablation_csv, cdf_csv, evaluate, localize_with, preprocess, run_ablation, run_lambda_sweep, sweep_csv, train_mingle,
    trajectory_svg, Method, Mode, Scenario, TrajectoryEstimate,
};
use mingle_core::simulator::{generate, preset, SupervisionMask};
use mingle_core::training::{loss_log_csv, TrainConfig};
use mingle_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mingle", version, about = "WiFi RTT trajectory localization with mobility graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario from a named walking pattern.
    Simulate {
        #[arg(long, default_value = "type3")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian ranging noise in meters.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        nlos_p: Option<f64>,
        #[arg(long)]
        nlos_mu: Option<f64>,
        /// Label every turn MP (`corners`), a fraction like `0.1`, or `none`.
        #[arg(long)]
        labels: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pseudo-labels from combinatorial multilateration.
    Cda {
        scene: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Estimate the trajectory of a scenario.
    Localize {
        scene: PathBuf,
        #[arg(long, default_value = "mingle")]
        method: Method,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write an SVG of the estimate against ground truth.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the per-epoch loss log (graph model only).
        #[arg(long)]
        loss_log: Option<PathBuf>,
        /// Directory for tmg.csv and dmg.csv adjacency dumps.
        #[arg(long)]
        dump_graphs: Option<PathBuf>,
    },
    /// Score an estimate CSV against the scenario's ground truth.
    Evaluate {
        scene: PathBuf,
        estimate: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        cdf: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Train all eight feature/graph routings and tabulate their errors.
    Ablate {
        scene: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train once per regularizer weight.
    SweepLambda {
        scene: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,3,10,30")]
        values: Vec<f64>,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "self")]
    mode: Mode,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<usize>,
    #[arg(long)]
    h1: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// For example `F1-TMG+F2-DMG` or `F2-TMG`.
    #[arg(long)]
    routing: Option<Routing>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
}

impl TrainArgs {
    fn config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let max_epochs = self.max_epochs.unwrap_or(d.max_epochs);
        let cfg = TrainConfig {
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            patience: self.patience.unwrap_or(d.patience.min(max_epochs)),
            max_epochs,
            repetitions: self.repetitions.unwrap_or(d.repetitions),
            lambda: self.lambda.unwrap_or(d.lambda),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            hidden: self.h1.unwrap_or(d.hidden),
            seed: self.seed.unwrap_or(d.seed),
            routing: self.routing.unwrap_or(d.routing),
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents)?,
        None => std::io::stdout().write_all(contents.as_bytes())?,
    }
    Ok(())
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&fs::read_to_string(path)?)
}

fn parse_mask(s: &str) -> Result<SupervisionMask> {
    match s {
        "none" => Ok(SupervisionMask::None),
        "corners" => Ok(SupervisionMask::Corners),
        _ => match s.parse::<f64>() {
            Ok(f) if (0.0..=1.0).contains(&f) => Ok(SupervisionMask::Fraction(f)),
            _ => Err(Error::Contract(format!("--labels expects none, corners or a fraction in [0, 1], got {s:?}"))),
        },
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            preset: name,
            seed,
            noise,
            nlos_p,
            nlos_mu,
            labels,
            output,
        } => {
            let mut spec = preset(&name)?;
            if let Some(v) = noise {
                spec.noise.sigma = v;
            }
            if let Some(v) = nlos_p {
                spec.noise.nlos_p = v;
            }
            if let Some(v) = nlos_mu {
                spec.noise.nlos_mu = v;
            }
            if let Some(m) = labels {
                spec.mask = parse_mask(&m)?;
            }
            emit(output.as_deref(), &generate(&spec, seed)?.to_json()?)
        }
        Command::Cda { scene, output } => {
            let sc = load(&scene)?;
            let pre = preprocess(&sc, TrainConfig::default().epsilon)?;
            emit(output.as_deref(), &(serde_json::to_string_pretty(&pre.cda)? + "\n"))
        }
        Command::Localize {
            scene,
            method,
            train,
            output,
            svg,
            loss_log,
            dump_graphs,
        } => {
            let sc = load(&scene)?;
            let cfg = train.config()?;
            let pre = preprocess(&sc, cfg.epsilon)?;
            if let Some(dir) = &dump_graphs {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("tmg.csv"), adjacency_csv(&pre.graphs.a))?;
                fs::write(dir.join("dmg.csv"), adjacency_csv(&pre.graphs.b))?;
            }
            let est = if method == Method::Mingle {
                let (est, outcome) = train_mingle(&sc, &pre, train.mode, &cfg)?;
                if let Some(p) = &loss_log {
                    fs::write(p, loss_log_csv(&outcome.log))?;
                }
                est
            } else {
                if loss_log.is_some() {
                    return Err(Error::Contract("--loss-log needs --method mingle".into()));
                }
                localize_with(&sc, &pre, method, train.mode, &cfg)?
            };
            if let Some(p) = &svg {
                fs::write(p, trajectory_svg(&est.coords, &sc.gt, &sc.aps))?;
            }
            let flagged = est.flagged.iter().filter(|&&f| f).count();
            if flagged > 0 {
                eprintln!("{flagged} MPs fell back to a substitute estimate");
            }
            emit(output.as_deref(), &est.to_csv())
        }
        Command::Evaluate {
            scene,
            estimate,
            output,
            cdf,
            svg,
        } => {
            let sc = load(&scene)?;
            let est = TrajectoryEstimate::from_csv("file", &fs::read_to_string(&estimate)?)?;
            let report = evaluate(&est.coords, &sc.gt)?;
            if let Some(p) = &cdf {
                fs::write(p, cdf_csv(&report))?;
            }
            if let Some(p) = &svg {
                fs::write(p, trajectory_svg(&est.coords, &sc.gt, &sc.aps))?;
            }
            emit(output.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
        }
        Command::Ablate { scene, train, output } => {
            let sc = load(&scene)?;
            let rows = run_ablation(&sc, train.mode, &train.config()?)?;
            emit(output.as_deref(), &ablation_csv(&rows))
        }
        Command::SweepLambda {
            scene,
            values,
            train,
            output,
        } => {
            let sc = load(&scene)?;
            let rows = run_lambda_sweep(&sc, &values, train.mode, &train.config()?)?;
            emit(output.as_deref(), &sweep_csv(&rows))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
