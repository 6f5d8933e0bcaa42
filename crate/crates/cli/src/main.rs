use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use hmptcp_core::agent::{training_log_csv, EpisodeRecord};
use hmptcp_core::experiment::{
    line_plot_svg, run_preset, train_agent, PlotSeries, PresetOptions, RunOptions, Scenario, Simulation, TrainOptions, PRESETS,
};
use hmptcp_core::transport::Controller;
use hmptcp_core::workload::metrics_csv;

#[derive(Parser)]
#[command(name = "hmptcp", version, about = "Hybrid multipath TCP simulator for distributed edge learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write every packet send, drop and ACK to packets.csv.
        #[arg(long)]
        packet_log: bool,
        #[arg(long)]
        plots: bool,
    },
    /// Run a canned experiment.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        name: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        scale: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write SVG line plots.
        #[arg(long)]
        plots: bool,
    },
    /// Train agents on randomized scenarios and write checkpoints and
    /// learning curves.
    Train {
        #[arg(long, default_value_t = 3)]
        sessions: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Connection-slots of experience per session.
        #[arg(long, default_value_t = 30_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = Which::Both)]
        controller: Which,
        #[arg(long)]
        plots: bool,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Hybrid,
    DrlOnly,
    Both,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(scenario: &Path, out: &Path, packet_log: bool, plots: bool) -> Result<()> {
    let s = Scenario::load(scenario)?;
    let options = RunOptions {
        packet_log,
        ..RunOptions::default()
    };
    let output = Simulation::new(&s, options)?.run()?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    write(out, "metrics.csv", &metrics_csv(std::slice::from_ref(&output.metrics)))?;
    write(out, "series.csv", &output.series_csv())?;
    if let Some(log) = &output.packet_log {
        write(out, "packets.csv", &format!("t_s,flow_id,subflow_id,seq,kind\n{log}"))?;
    }
    if s.agent.mode == hmptcp_core::experiment::AgentMode::Train {
        let records: Vec<EpisodeRecord> = output
            .agents
            .iter()
            .enumerate()
            .map(|(k, (_, a))| EpisodeRecord {
                episode: k as u64,
                steps: a.stats.train_steps,
                mean_reward: output.metrics.learning_score.unwrap_or(f64::NAN),
                critic_loss: a.stats.last_critic_loss,
            })
            .collect();
        write(out, "training_log.csv", &training_log_csv(&records))?;
        for (label, a) in &output.agents {
            a.nets.save(&out.join(format!("{label}.ckpt")))?;
        }
    }
    if plots {
        let series: Vec<PlotSeries> = output
            .flow_rates
            .iter()
            .enumerate()
            .map(|(id, r)| PlotSeries {
                label: format!("flow {id}"),
                points: r.iter().enumerate().map(|(k, &v)| ((k + 1) as f64 * s.agent.slot_s, v)).collect(),
            })
            .collect();
        write(out, "rates.svg", &line_plot_svg(&s.name, "t (s)", "pps", &series))?;
    }
    println!(
        "{}: mean iteration time {:.3} s, unfairness {:.3}, fluctuation {:.2} pps; wrote {}",
        s.name,
        output.metrics.mean_iteration_time,
        output.metrics.unfairness,
        output.metrics.throughput_fluctuation,
        out.display()
    );
    Ok(())
}

fn train(sessions: u32, out: &Path, seed: u64, samples: u64, which: Which, plots: bool) -> Result<()> {
    let options = TrainOptions {
        sessions,
        seed,
        session_samples: samples,
        ..TrainOptions::default()
    };
    let controllers = match which {
        Which::Hybrid => vec![Controller::Hybrid],
        Which::DrlOnly => vec![Controller::DrlOnly],
        Which::Both => vec![Controller::Hybrid, Controller::DrlOnly],
    };
    let mut curves = Vec::new();
    for c in controllers {
        let run = train_agent(c, &options, |r| {
            eprintln!("{c} episode {}: {} steps, reward {:.3}, critic loss {:.4}", r.episode, r.steps, r.mean_reward, r.critic_loss)
        })?;
        write(out, &format!("learning_curve_{c}.csv"), &run.curve_csv())?;
        run.agent.nets.save(&out.join(format!("{c}.ckpt")))?;
        println!("{c}: final learning score {:.4} after {} episodes", run.final_score(), run.log.len());
        curves.push(PlotSeries {
            label: c.to_string(),
            points: run.curve.iter().enumerate().map(|(k, &v)| (k as f64, v)).collect(),
        });
    }
    if plots {
        write(out, "learning_curve.svg", &line_plot_svg("learning score", "episode", "reward", &curves))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            packet_log,
            plots,
        } => run(&scenario, &out, packet_log, plots),
        Command::Preset {
            name,
            seed,
            scale,
            out,
            plots,
        } => (|| {
            let options = PresetOptions {
                seed,
                scale,
                plots,
                ..PresetOptions::default()
            };
            let result = run_preset(&name, &options)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            result.write_to(&out)?;
            println!("{name}: {} runs, {} files in {}", result.runs.len(), result.files.len(), out.display());
            Ok(())
        })(),
        Command::Train {
            sessions,
            out,
            seed,
            samples,
            controller,
            plots,
        } => train(sessions, &out, seed, samples, controller, plots),
        Command::Validate { scenario } => (|| {
            let s = Scenario::load(&scenario)?;
            for w in s.warnings() {
                eprintln!("warning: {w}");
            }
            println!("{}: ok", scenario.display());
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
