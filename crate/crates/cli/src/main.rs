//! `homesim`: deterministic smart-home activity simulation pipeline.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use homesim_cli::config::{load_config, parse_date, Overrides};
use homesim_cli::logging::{LogLevel, Logger};
use homesim_cli::pipeline::run_generate;
use homesim_cli::train_eval::{render_text_table, run_train_eval, TrainEvalArgs};
use homesim_core::action_script::{load_script_file, render_step, Script};
use homesim_core::dataset::{
    compute_stats, export_casas, parse_windows_jsonl, render_windows_jsonl, segment_windows,
    ActivitySpan, LabelMapping, SourceMeta, TdostVariant,
};
use homesim_core::env_model::load_layout;
use homesim_core::grounding::{
    build_vocabulary_indices, ground_script, vocabulary_from_layout, DeterministicProvider,
    EmbeddingProvider, GroundingContext, GroundingThresholds, HttpEmbeddingClient, NullRepair,
    VocabularyFile,
};
use homesim_core::har::TrainConfig;
use homesim_core::sensors::{detect_motion, instrument, SensorEvent};
use homesim_core::sim_engine::{simulate, SimParams};

#[derive(Parser)]
#[command(
    name = "homesim",
    about = "Simulate daily routines in virtual homes and package the resulting ambient-sensor data as labeled activity datasets",
    version
)]
struct Cli {
    /// Log verbosity: off, error, info, debug.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Place motion sensors and bind door/device sensors for a layout.
    Instrument {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
    },
    /// Clean and ground a raw script against a layout's vocabulary.
    Ground {
        #[arg(long)]
        layout: PathBuf,
        /// Vocabulary file; derived from the layout when omitted.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        script: PathBuf,
        /// Grounded script output (canonical command lines).
        #[arg(long)]
        out: PathBuf,
        /// Grounding report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        tau_act: f64,
        #[arg(long, default_value_t = 0.6)]
        tau_obj: f64,
        #[arg(long, default_value_t = 3)]
        max_retries: u32,
        /// Embedding provider: deterministic (hermetic) or http (from env).
        #[arg(long, default_value = "deterministic")]
        provider: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        dim: usize,
    },
    /// Execute a grounded script: trajectory CSV plus transition log.
    Simulate {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        dt: f64,
        /// Walking speed in m/s.
        #[arg(long, default_value_t = 1.2)]
        speed: f64,
        #[arg(long, default_value_t = 3.0)]
        run_speed: f64,
        #[arg(long, default_value = "2024-01-01")]
        date: String,
        #[arg(long)]
        out_traj: PathBuf,
        #[arg(long)]
        out_transitions: PathBuf,
        /// Also write raw per-sample detection records (CSV).
        #[arg(long)]
        raw_detections: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
    },
    /// Run the whole pipeline over a config: ground, simulate, sense, export.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        tau_act: Option<f64>,
        #[arg(long)]
        tau_obj: Option<f64>,
        #[arg(long)]
        max_retries: Option<u32>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        date: Option<String>,
    },
    /// Export an event/span pair as a CASAS-style log or windows JSONL.
    Export {
        /// Sensor events, one JSON object per line.
        #[arg(long)]
        events: PathBuf,
        /// Activity spans, one JSON object per line.
        #[arg(long)]
        spans: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long, default_value = "casas")]
        format: String,
        #[arg(long, default_value = "basic")]
        variant: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corpus statistics over windows JSONL files.
    Stats {
        #[arg(long, required = true)]
        windows: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare real-only training against virtual pretraining.
    TrainEval {
        #[arg(long = "virtual")]
        virtual_windows: PathBuf,
        #[arg(long = "real")]
        real_windows: PathBuf,
        #[arg(long = "real-fraction", default_values_t = vec![1.0])]
        real_fraction: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        folds: usize,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value = "basic")]
        variant: String,
        #[arg(long, default_value_t = 4096)]
        dim: usize,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 0.0)]
        weight_decay: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        /// Finetune on virtual + real combined instead of real alone.
        #[arg(long)]
        mix: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also train on all virtual + all real data and save the model.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))
}

fn load_script_checked(path: &PathBuf, logger: &Logger) -> Result<Script> {
    let (script, diagnostics) = load_script_file(&read(path)?);
    for d in &diagnostics {
        logger.error(
            "script diagnostic",
            serde_json::json!({"file": path.display().to_string(), "line": d.line, "column": d.column, "message": d.message}),
        );
    }
    if script.steps.is_empty() {
        bail!("{path:?} contains no valid command lines");
    }
    Ok(script)
}

fn main() {
    let cli = Cli::parse();
    let level: LogLevel = match cli.log_level.parse() {
        Ok(level) => level,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let logger = Logger::new(level);
    if let Err(e) = run(cli.command, &logger) {
        logger.error("fatal", serde_json::json!({"error": format!("{e:#}")}));
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(command: Command, logger: &Logger) -> Result<()> {
    match command {
        Command::Instrument {
            layout,
            out,
            radius,
        } => {
            let home = load_layout(&read(&layout)?)?;
            let suite = instrument(&home, radius)?;
            let map = suite.to_map_file(&home.name);
            std::fs::write(&out, serde_json::to_string_pretty(&map)?)?;
            logger.summary(&format!(
                "instrumented {}: {} motion, {} door, {} device sensor(s) -> {}",
                home.name,
                suite.motion.len(),
                suite.doors.len(),
                suite.devices.len(),
                out.display()
            ));
        }
        Command::Ground {
            layout,
            vocab,
            script,
            out,
            report,
            tau_act,
            tau_obj,
            max_retries,
            provider,
            seed,
            dim,
        } => {
            let home = load_layout(&read(&layout)?)?;
            let vocabulary = match vocab {
                Some(path) => VocabularyFile::from_json(&read(&path)?)?,
                None => vocabulary_from_layout(&home),
            };
            let deterministic;
            let http;
            let provider: &dyn EmbeddingProvider = match provider.as_str() {
                "deterministic" => {
                    deterministic = DeterministicProvider::new(dim, seed);
                    &deterministic
                }
                "http" => {
                    http = HttpEmbeddingClient::from_env()?;
                    &http
                }
                other => bail!("unknown provider {other:?} (deterministic|http)"),
            };
            let (action_index, object_index) = build_vocabulary_indices(&vocabulary, provider)?;
            let parts = homesim_core::action_script::split_script_file(&read(&script)?);
            let ctx = GroundingContext {
                layout: &home,
                action_index: &action_index,
                object_index: &object_index,
                thresholds: GroundingThresholds {
                    tau_act,
                    tau_obj,
                    max_retries,
                },
                provider,
            };
            let (grounded, mut grounding_report) =
                ground_script(&parts.body, parts.metadata.clone(), &ctx, &NullRepair)?;
            for line in &mut grounding_report.lines {
                line.source_line += parts.body_start_line - 1;
            }
            let mut text = String::new();
            if !parts.metadata.persona.is_empty()
                || !parts.metadata.day.is_empty()
                || !parts.metadata.activity.is_empty()
            {
                text.push_str("---\n");
                if !parts.metadata.persona.is_empty() {
                    text.push_str(&format!("persona: {}\n", parts.metadata.persona));
                }
                if !parts.metadata.day.is_empty() {
                    text.push_str(&format!("day: {}\n", parts.metadata.day));
                }
                if !parts.metadata.activity.is_empty() {
                    text.push_str(&format!("activity: {}\n", parts.metadata.activity));
                }
                text.push_str("---\n");
            }
            for step in &grounded.steps {
                text.push_str(&render_step(step));
                text.push('\n');
            }
            std::fs::write(&out, text)?;
            if let Some(report_path) = report {
                std::fs::write(
                    &report_path,
                    serde_json::to_string_pretty(&grounding_report)?,
                )?;
            }
            logger.summary(&format!(
                "grounded {}: {} accepted, {} repaired, {} discarded",
                script.display(),
                grounding_report.accepted(),
                grounding_report.repaired(),
                grounding_report.discarded()
            ));
        }
        Command::Simulate {
            layout,
            script,
            dt,
            speed,
            run_speed,
            date,
            out_traj,
            out_transitions,
            raw_detections,
            radius,
        } => {
            let home = load_layout(&read(&layout)?)?;
            let parsed = load_script_checked(&script, logger)?;
            let params = SimParams {
                dt,
                walk_speed: speed,
                run_speed,
                jitter_eps: 0.1,
                epoch_date: parse_date(&date)?,
            };
            let out = simulate(&parsed, &home, &params)?;
            for issue in out.step_errors.iter().chain(&out.warnings) {
                logger.info(
                    "step issue",
                    serde_json::json!({"step": issue.step_index, "message": issue.message}),
                );
            }
            let mut csv = String::from("t,x,y,z,step_index\n");
            for s in &out.trajectory.samples {
                csv.push_str(&format!(
                    "{:.6},{:.6},{:.6},{:.6},{}\n",
                    s.t_seconds(),
                    s.position.x,
                    s.position.y,
                    s.position.z,
                    s.step_index
                ));
            }
            std::fs::write(&out_traj, csv)?;
            let mut jsonl = String::new();
            for t in &out.transitions {
                jsonl.push_str(&serde_json::to_string(t)?);
                jsonl.push('\n');
            }
            std::fs::write(&out_transitions, jsonl)?;
            if let Some(path) = raw_detections {
                let suite = instrument(&home, radius)?;
                let mut csv = String::from("t,sensor_id,room,x,y,z\n");
                for d in detect_motion(&out.trajectory, &suite) {
                    csv.push_str(&format!(
                        "{:.6},{},{},{:.6},{:.6},{:.6}\n",
                        d.t_us as f64 / 1e6,
                        d.sensor_id,
                        d.room,
                        d.position.x,
                        d.position.y,
                        d.position.z
                    ));
                }
                std::fs::write(&path, csv)?;
            }
            logger.summary(&format!(
                "simulated {} step(s): {} samples, {} transition(s), {} step error(s)",
                parsed.steps.len(),
                out.trajectory.samples.len(),
                out.transitions.len(),
                out.step_errors.len()
            ));
        }
        Command::Generate {
            config,
            out_dir,
            seed,
            jobs,
            tau_act,
            tau_obj,
            max_retries,
            dt,
            date,
        } => {
            let overrides = Overrides {
                out_dir,
                seed,
                tau_act,
                tau_obj,
                max_retries,
                dt,
                date,
            };
            let resolved = load_config(&config, &overrides)?;
            run_generate(&resolved, jobs, logger)?;
        }
        Command::Export {
            events,
            spans,
            mapping,
            format,
            variant,
            out,
        } => {
            let mapping = LabelMapping::from_json(&read(&mapping)?)?;
            let mut parsed_events: Vec<SensorEvent> = Vec::new();
            for (i, line) in read(&events)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                parsed_events.push(
                    serde_json::from_str(line).with_context(|| format!("events line {}", i + 1))?,
                );
            }
            let mut parsed_spans: Vec<ActivitySpan> = Vec::new();
            for (i, line) in read(&spans)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                parsed_spans.push(
                    serde_json::from_str(line).with_context(|| format!("spans line {}", i + 1))?,
                );
            }
            match format.as_str() {
                "casas" => export_casas(&parsed_events, &parsed_spans, &mapping, &out)?,
                "jsonl" => {
                    let variant: TdostVariant = variant.parse().map_err(anyhow::Error::msg)?;
                    let segmented = segment_windows(
                        &parsed_events,
                        &parsed_spans,
                        &mapping,
                        &SourceMeta::default(),
                    )?;
                    std::fs::write(
                        &out,
                        render_windows_jsonl(&segmented.windows, Some(variant)),
                    )?;
                }
                other => bail!("unknown format {other:?} (casas|jsonl)"),
            }
            logger.summary(&format!(
                "exported {} event(s) -> {}",
                parsed_events.len(),
                out.display()
            ));
        }
        Command::Stats { windows, out } => {
            let mut all = Vec::new();
            for path in &windows {
                all.extend(parse_windows_jsonl(&read(path)?)?);
            }
            let stats = compute_stats(&all);
            std::fs::write(&out, serde_json::to_string_pretty(&stats)?)?;
            logger.summary(&format!(
                "{} window(s), triggers min {} max {} mean {:.2} -> {}",
                stats.window_count,
                stats.triggers_min,
                stats.triggers_max,
                stats.triggers_mean,
                out.display()
            ));
        }
        Command::TrainEval {
            virtual_windows,
            real_windows,
            real_fraction,
            folds,
            seeds,
            variant,
            dim,
            epochs,
            lr,
            weight_decay,
            batch_size,
            mix,
            out,
            model_out,
        } => {
            let args = TrainEvalArgs {
                virtual_path: virtual_windows,
                real_path: real_windows,
                variant: variant.parse().map_err(anyhow::Error::msg)?,
                fractions: real_fraction,
                folds,
                seeds,
                dim,
                train: TrainConfig {
                    epochs,
                    learning_rate: lr,
                    weight_decay,
                    batch_size,
                    seed: 0,
                    patience: None,
                },
                mix,
            };
            let report = run_train_eval(&args, logger)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            let table = render_text_table(&report);
            print!("{table}");
            if let Some(model_path) = model_out {
                let saved = homesim_cli::train_eval::train_full_model(&args)?;
                std::fs::write(&model_path, serde_json::to_string(&saved)?)?;
                logger.summary(&format!("model written to {}", model_path.display()));
            }
            logger.summary(&format!("metrics written to {}", out.display()));
        }
    }
    Ok(())
}
