//! Command-line driver: configuration ingestion, staged pipeline runs, and
//! JSON/CSV report emission.

mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use morsehom::config::ExperimentConfig;
use morsehom::functionals::{truncated::build_truncated, Functional};

use pipeline::{stage_closure, write_outputs, Pipeline, Stage, ALL_STAGES};
use report::to_json;

#[derive(Parser)]
#[command(
    name = "morsehom",
    version,
    about = "Critical points, spectral splittings, non-degeneracy certificates, \
             gradient-flow orbit counts, and GF(2) homology for quasilinear energies"
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: config `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma-separated stage subset for `run` (dependencies are added).
    #[arg(long, global = true, value_delimiter = ',')]
    stage: Vec<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute the enabled stages and write report.json + manifest.json.
    Run,
    /// Locate critical points; print them as a JSON array.
    FindCritical,
    /// Eigensplittings, Morse indices and margins per critical point.
    Index,
    /// Non-degeneracy certificates per critical point.
    Certify,
    /// Integrate the gradient-like flow, count connecting orbits, export CSV.
    Flow {
        /// Shots per unstable sphere.
        #[arg(long)]
        shoot: Option<usize>,
        /// Restrict to `hi-lo` pairs, comma-separated (default: all).
        #[arg(long)]
        pairs: Option<String>,
        #[arg(long)]
        sphere_radius: Option<f64>,
        /// Value band `a,b` for the containment diagnostics.
        #[arg(long)]
        band: Option<String>,
    },
    /// Assemble the chain complex and compute Betti numbers.
    Homology,
    /// Growth classification, p-Laplacian spectrum, resonance flag.
    DiagnoseCerami,
    /// Isolation-failure demonstration for the truncated sequence functional.
    Counterexample {
        /// Truncation orders.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 10, 20])]
        orders: Vec<usize>,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--config <path> is required for this subcommand"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn run_pipeline(cli: &Cli, stages: &[Stage]) -> anyhow::Result<(Pipeline, Vec<Stage>)> {
    let cfg = load_config(cli)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&out_dir)?;
    let enabled = stage_closure(stages);
    let mut pipe = Pipeline::new(cfg, seed, out_dir);
    pipe.run_stages(&enabled)?;
    Ok((pipe, enabled))
}

fn requested_stages(cli: &Cli) -> anyhow::Result<Vec<Stage>> {
    if cli.stage.is_empty() {
        Ok(ALL_STAGES.to_vec())
    } else {
        cli.stage.iter().map(|s| Stage::parse(s)).collect()
    }
}

fn counterexample_json(orders: &[usize]) -> anyhow::Result<String> {
    #[derive(serde::Serialize)]
    struct OrderReport {
        order: usize,
        nearest_nonzero_distance: f64,
        residual_at_candidate: f64,
        hessian_signature_at_zero: Signature,
    }
    #[derive(serde::Serialize)]
    struct Signature {
        negative: usize,
        zero: usize,
        positive: usize,
    }
    #[derive(serde::Serialize)]
    struct Out {
        orders: Vec<OrderReport>,
        isolation_failure: bool,
    }
    let mut out = Vec::new();
    let mut distances = Vec::new();
    for &n in orders {
        let f = build_truncated(n)?;
        let (v, dist) = f.nearest_nonzero_critical::<f64>();
        let residual = Functional::<f64>::eval_grad(&f, &v)?.norm();
        let hess = Functional::<f64>::eval_hess(&f, &DVector::zeros(n))?;
        let mut sig = Signature {
            negative: 0,
            zero: 0,
            positive: 0,
        };
        for k in 0..n {
            let d = hess[(k, k)];
            if d < -1e-14 {
                sig.negative += 1;
            } else if d > 1e-14 {
                sig.positive += 1;
            } else {
                sig.zero += 1;
            }
        }
        distances.push(dist);
        out.push(OrderReport {
            order: n,
            nearest_nonzero_distance: dist,
            residual_at_candidate: residual,
            hessian_signature_at_zero: sig,
        });
    }
    let shrinking = distances.windows(2).all(|w| w[1] < w[0]);
    to_json(&Out {
        orders: out,
        isolation_failure: shrinking,
    })
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Run => {
            let stages = requested_stages(&cli)?;
            let (pipe, _enabled) = run_pipeline(&cli, &stages)?;
            let out_dir = pipe.out_dir.clone();
            let (report, manifest) = pipe.into_report();
            write_outputs(&out_dir, &report, &manifest)?;
            for c in &report.summary.checks {
                println!(
                    "{}: {} ({})",
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
            println!("report: {}", out_dir.join("report.json").display());
            Ok(if report.summary.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::FindCritical => {
            let (pipe, _) = run_pipeline(&cli, &[Stage::Find])?;
            #[derive(serde::Serialize)]
            struct P {
                id: usize,
                value: f64,
                residual: f64,
                coefficients: Vec<f64>,
            }
            let points: Vec<P> = pipe
                .points
                .iter()
                .map(|p| P {
                    id: p.id,
                    value: p.value,
                    residual: p.residual,
                    coefficients: p.coefficients.iter().copied().collect(),
                })
                .collect();
            print!("{}", to_json(&points)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Index => {
            let (pipe, _) = run_pipeline(&cli, &[Stage::Index])?;
            print!("{}", to_json(&pipe.reports.index)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Certify => {
            let (pipe, _) = run_pipeline(&cli, &[Stage::Certify])?;
            print!("{}", to_json(&pipe.reports.certify)?);
            let ok = pipe.checks.iter().all(|c| c.pass);
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Flow {
            shoot,
            pairs,
            sphere_radius,
            band,
        } => {
            let (pipe, _) = {
                // Apply flag overrides onto the loaded config.
                let cfg_path_cli = &cli;
                let cfg = load_config(cfg_path_cli)?;
                let seed = cli.seed.unwrap_or(cfg.seed);
                let out_dir = cli
                    .out
                    .clone()
                    .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
                std::fs::create_dir_all(&out_dir)?;
                let mut cfg = cfg;
                if let Some(s) = shoot {
                    cfg.flow.shoot = *s;
                }
                if let Some(r) = sphere_radius {
                    cfg.flow.sphere_radius = Some(*r);
                }
                if let Some(bstr) = band {
                    let parts: Vec<&str> = bstr.split(',').collect();
                    if parts.len() != 2 {
                        anyhow::bail!("--band expects 'a,b'");
                    }
                    cfg.flow.band = Some((parts[0].parse()?, parts[1].parse()?));
                }
                let mut pipe = Pipeline::new(cfg, seed, out_dir);
                if let Some(filter) = pairs {
                    let wanted: Vec<(usize, usize)> = filter
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            let (h, l) = s
                                .split_once('-')
                                .ok_or_else(|| anyhow::anyhow!("--pairs expects 'hi-lo,...'"))?;
                            Ok::<_, anyhow::Error>((h.trim().parse()?, l.trim().parse()?))
                        })
                        .collect::<Result<_, _>>()?;
                    pipe.pairs_filter = Some(wanted);
                }
                pipe.run_stages(&stage_closure(&[Stage::Flow]))?;
                (pipe, ())
            };
            print!("{}", to_json(&pipe.reports.flow)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Homology => {
            let (pipe, _) = run_pipeline(&cli, &[Stage::Homology])?;
            print!("{}", to_json(&pipe.reports.homology)?);
            let ok = pipe.checks.iter().all(|c| c.pass);
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::DiagnoseCerami => {
            let (pipe, _) = run_pipeline(&cli, &[Stage::Cerami])?;
            print!("{}", to_json(&pipe.reports.diagnose_cerami)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Counterexample { orders } => {
            print!("{}", counterexample_json(orders)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Config/schema problems exit 2; stage failures exit 1.
            let msg = format!("{err:#}");
            if msg.contains("config error")
                || msg.contains("--config")
                || msg.contains("cannot read config")
                || msg.contains("unknown stage")
            {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
