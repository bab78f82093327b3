use std::path::PathBuf;
use std::process::ExitCode;

use carnot_cli::{run, CliError, CliResult, ExperimentConfig};
use carnot_core::family::TestFunctionFamily;
use carnot_core::hopflax::{hopf_lax_apply, HopfLaxOperator};
use carnot_core::metric::{cc_distance, koranyi_gauge, GroupMetric};
use carnot_core::CarnotGroup;
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "carnot", version, about = "Carnot-group inequality laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage of a config; exits 0 only if all checks pass.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// CC distance and Korányi gauge between two points.
    Distance {
        #[arg(long, default_value = "heisenberg1")]
        group: CarnotGroup,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        /// Base point; the identity when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        from: Option<Vec<f64>>,
    },
    /// Apply Q_t to one family member or probe of a config on its grid.
    Hopflax {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, conflicts_with = "probe")]
        member: Option<usize>,
        #[arg(long)]
        probe: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot a trace CSV as SVG with the largest upward jump marked.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: &PathBuf, text: String) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.clone(),
        source: e,
    })
}

fn execute(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let manifest = run(&cfg)?;
            for (name, pass) in &manifest.checks {
                println!("{} {name}", if *pass { "PASS" } else { "FAIL" });
            }
            println!("manifest {}", manifest.out.join("manifest.json").display());
            Ok(manifest.pass)
        }
        Command::Distance { group, point, from } => {
            let b = group.point(point)?;
            let a = match from {
                Some(c) => group.point(c)?,
                None => group.identity(),
            };
            let rel = group.compose(&group.inverse(&a)?, &b)?;
            let body = json!({
                "group": group,
                "distance": cc_distance(&group, &a, &b)?,
                "koranyi": koranyi_gauge(&group, &rel)?,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&body).expect("serializes")
            );
            Ok(true)
        }
        Command::Hopflax {
            config,
            t,
            member,
            probe,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let grid = cfg.build_grid()?;
            let f = match probe {
                Some(i) => cfg
                    .probes
                    .get(i)
                    .cloned()
                    .ok_or_else(|| CliError::Config(format!("no probe {i}")))?,
                None => {
                    let fam = TestFunctionFamily::generate(&cfg.family.spec(cfg.seed), &cfg.group)?;
                    let i = member.unwrap_or(0);
                    fam.members
                        .get(i)
                        .cloned()
                        .ok_or_else(|| CliError::Config(format!("no member {i}")))?
                }
            };
            let values = f.on_grid(&cfg.group, &grid)?;
            let op = HopfLaxOperator::new(t, cfg.exponents, cfg.normalization)?;
            let r = hopf_lax_apply(&values, &op, &GroupMetric::new(cfg.group.clone()))?;
            let body = json!({
                "schema": carnot_core::report::SCHEMA,
                "t": t,
                "operator": op,
                "function": f,
                "truncated_nodes": r.truncated.iter().filter(|&&x| x).count(),
                "values": r.values,
            });
            write(
                &out,
                serde_json::to_string(&body).expect("serializes") + "\n",
            )?;
            Ok(true)
        }
        Command::Plot { input, out } => {
            let jump = carnot_cli::trace::plot(&input, &out)?;
            println!("max upward jump {jump:e}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
