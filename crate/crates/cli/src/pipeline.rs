//! The generate pipeline: ground each script, simulate it, derive sensor
//! events, and package per-home datasets plus merged statistics.
//!
//! Aggregate outputs are sorted by (home, script, timestamp), so a run is
//! byte-deterministic for a given config and seed regardless of worker
//! count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use serde::Serialize;

use homesim_core::action_script::split_script_file;
use homesim_core::dataset::{
    compute_stats, render_casas, render_windows_jsonl, segment_windows, ActivitySpan,
    ActivityWindow, DatasetStats, LabelMapping, SourceMeta, TdostVariant,
};
use homesim_core::env_model::{load_layout, HomeLayout};
use homesim_core::grounding::{
    build_vocabulary_indices, ground_script, vocabulary_from_layout, DeterministicProvider,
    GroundingContext, GroundingReport, NullRepair, VocabularyFile,
};
use homesim_core::sensors::{door_device_events, instrument, merge_events, motion_triggers};
use homesim_core::time::{Timestamp, MICROS_PER_MINUTE};

use crate::config::ResolvedConfig;
use crate::logging::Logger;

#[derive(Debug, Clone, Serialize)]
pub struct ScriptReport {
    pub script: String,
    pub accepted: usize,
    pub repaired: usize,
    pub discarded: usize,
    pub step_errors: usize,
    pub warnings: usize,
    #[serde(flatten)]
    pub grounding: GroundingReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomeCounts {
    pub scripts: usize,
    pub accepted_lines: usize,
    pub repaired_lines: usize,
    pub discarded_lines: usize,
    pub dropped_in_cleaning: usize,
    pub step_errors: usize,
    pub sim_warnings: usize,
    pub windows: usize,
    pub dropped_spans: usize,
}

pub struct HomeOutcome {
    pub name: String,
    pub windows: Vec<ActivityWindow>,
    pub counts: HomeCounts,
    pub files: Vec<PathBuf>,
}

pub struct GenerateOutcome {
    pub out_dir: PathBuf,
    pub homes: Vec<HomeOutcome>,
    pub stats: DatasetStats,
}

/// Everything one home renders, before anything touches the filesystem.
struct HomeArtifacts {
    name: String,
    casas: String,
    windows_basic: String,
    windows_temporal: String,
    sensors_json: String,
    grounding_json: String,
    windows: Vec<ActivityWindow>,
    counts: HomeCounts,
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))
}

fn process_home(
    resolved: &ResolvedConfig,
    home_index: usize,
    mapping: &LabelMapping,
    logger: &Logger,
) -> Result<HomeArtifacts> {
    let home = &resolved.homes[home_index];
    let config = &resolved.config;
    let layout: HomeLayout = load_layout(&read_to_string(&home.layout)?)
        .with_context(|| format!("layout {:?}", home.layout))?;
    let vocab: VocabularyFile = match &resolved.vocabulary {
        Some(path) => VocabularyFile::from_json(&read_to_string(path)?)?,
        None => vocabulary_from_layout(&layout),
    };
    let provider = DeterministicProvider::new(config.embedding_dim, config.seed)
        .with_synonyms(config.synonyms.clone());
    let (action_index, object_index) = build_vocabulary_indices(&vocab, &provider)?;
    let suite = instrument(&layout, config.sensor_radius)?;
    let base_params = config.sim.to_params()?;

    // Each distinct day label gets its own calendar date, in sorted order.
    let mut day_labels: Vec<String> = Vec::new();
    let mut scripts = Vec::with_capacity(home.scripts.len());
    for path in &home.scripts {
        let parts = split_script_file(&read_to_string(path)?);
        if !day_labels.contains(&parts.metadata.day) {
            day_labels.push(parts.metadata.day.clone());
        }
        scripts.push((path.clone(), parts));
    }
    day_labels.sort();
    let date_of = |day: &str| -> NaiveDate {
        let idx = day_labels.iter().position(|d| d == day).unwrap_or(0);
        base_params.epoch_date + chrono::Duration::days(idx as i64)
    };

    let ctx = GroundingContext {
        layout: &layout,
        action_index: &action_index,
        object_index: &object_index,
        thresholds: config.thresholds,
        provider: &provider,
    };

    let mut counts = HomeCounts {
        scripts: scripts.len(),
        accepted_lines: 0,
        repaired_lines: 0,
        discarded_lines: 0,
        dropped_in_cleaning: 0,
        step_errors: 0,
        sim_warnings: 0,
        windows: 0,
        dropped_spans: 0,
    };
    let mut script_reports = Vec::new();
    let mut all_events = Vec::new();
    let mut all_spans: Vec<ActivitySpan> = Vec::new();
    let mut windows: Vec<ActivityWindow> = Vec::new();

    for (path, parts) in &scripts {
        let script_name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let (script, mut report) =
            ground_script(&parts.body, parts.metadata.clone(), &ctx, &NullRepair)?;
        for line in &mut report.lines {
            line.source_line += parts.body_start_line - 1;
        }
        counts.accepted_lines += report.accepted();
        counts.repaired_lines += report.repaired();
        counts.discarded_lines += report.discarded();
        counts.dropped_in_cleaning += report.dropped_in_cleaning;

        let mut step_errors = 0;
        let mut warnings = 0;
        if script.steps.is_empty() {
            logger.info(
                "script produced no executable steps",
                serde_json::json!({"home": home.name, "script": script_name}),
            );
        } else {
            let date = date_of(&script.metadata.day);
            let params = homesim_core::sim_engine::SimParams {
                epoch_date: date,
                ..base_params
            };
            let out = homesim_core::sim_engine::simulate(&script, &layout, &params)
                .with_context(|| format!("simulating {script_name}"))?;
            step_errors = out.step_errors.len();
            warnings = out.warnings.len();
            for issue in &out.step_errors {
                logger.info(
                    "step error",
                    serde_json::json!({
                        "home": home.name, "script": script_name,
                        "step": issue.step_index, "message": issue.message,
                    }),
                );
            }
            let motion = motion_triggers(&out.trajectory, &suite, &params);
            let activations = door_device_events(&out.transitions, &suite, config.emit_reverse);
            let events = merge_events(&[motion, activations]);

            let minute_windows = script.minute_windows();
            let first = minute_windows.first().expect("nonempty script");
            let last = minute_windows.last().expect("nonempty script");
            let activity = if script.metadata.activity.is_empty() {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "unknown".into())
            } else {
                script.metadata.activity.clone()
            };
            let span = ActivitySpan {
                activity_name: activity,
                start: Timestamp::from_midnight_micros(date, first.0 as i64 * MICROS_PER_MINUTE),
                end: Timestamp::from_midnight_micros(date, last.1 as i64 * MICROS_PER_MINUTE),
                room: script.steps[0].room.clone(),
            };
            let source = SourceMeta {
                persona: script.metadata.persona.clone(),
                home: home.name.clone(),
                day: script.metadata.day.clone(),
            };
            let segmented =
                segment_windows(&events, std::slice::from_ref(&span), mapping, &source)?;
            counts.dropped_spans += segmented.dropped_spans;
            windows.extend(segmented.windows);
            all_spans.push(span);
            all_events.push(events);
        }
        counts.step_errors += step_errors;
        counts.sim_warnings += warnings;
        script_reports.push(ScriptReport {
            script: script_name,
            accepted: report.accepted(),
            repaired: report.repaired(),
            discarded: report.discarded(),
            step_errors,
            warnings,
            grounding: report,
        });
    }

    let merged = merge_events(&all_events);
    windows.sort_by(|a, b| {
        (a.span.start, &a.span.activity_name).cmp(&(b.span.start, &b.span.activity_name))
    });
    counts.windows = windows.len();

    let casas = render_casas(&merged, &all_spans, mapping)?;
    let windows_basic = render_windows_jsonl(&windows, Some(TdostVariant::Basic));
    let windows_temporal = render_windows_jsonl(&windows, Some(TdostVariant::Temporal));
    let sensors_json = serde_json::to_string_pretty(&suite.to_map_file(&layout.name))?;
    let grounding_json = serde_json::to_string_pretty(&script_reports)?;

    Ok(HomeArtifacts {
        name: home.name.clone(),
        casas,
        windows_basic,
        windows_temporal,
        sensors_json,
        grounding_json,
        windows,
        counts,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    seed: u64,
    homes: Vec<ManifestHome>,
}

#[derive(Serialize)]
struct ManifestHome {
    name: String,
    files: Vec<String>,
    #[serde(flatten)]
    counts: HomeCounts,
}

/// Run the whole pipeline. Homes are processed in a worker pool of `jobs`
/// threads; rendering happens in workers, writing in deterministic order on
/// this thread.
pub fn run_generate(
    resolved: &ResolvedConfig,
    jobs: usize,
    logger: &Logger,
) -> Result<GenerateOutcome> {
    let mapping = LabelMapping::from_json(&read_to_string(&resolved.label_mapping)?)?;
    let n = resolved.homes.len();
    let results: Mutex<Vec<Option<Result<HomeArtifacts>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let result = process_home(resolved, i, &mapping, logger);
                results.lock().expect("results lock")[i] = Some(result);
            });
        }
    });

    let artifacts: Vec<HomeArtifacts> = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.unwrap_or_else(|| bail_missing(i))
                .with_context(|| format!("home {:?}", resolved.homes[i].name))
        })
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(&resolved.out_dir)?;
    let mut homes = Vec::with_capacity(artifacts.len());
    let mut per_home_stats = BTreeMap::new();
    let mut all_windows = Vec::new();
    let mut manifest_homes = Vec::new();
    for artifact in artifacts {
        let dir = resolved.out_dir.join(&artifact.name);
        std::fs::create_dir_all(&dir)?;
        let entries = [
            ("casas.txt", &artifact.casas),
            ("windows_basic.jsonl", &artifact.windows_basic),
            ("windows_temporal.jsonl", &artifact.windows_temporal),
            ("sensors.json", &artifact.sensors_json),
            ("grounding_report.json", &artifact.grounding_json),
        ];
        let mut files = Vec::new();
        for (file_name, content) in entries {
            let path = dir.join(file_name);
            std::fs::write(&path, content).with_context(|| format!("writing {path:?}"))?;
            files.push(path);
        }
        per_home_stats.insert(artifact.name.clone(), compute_stats(&artifact.windows));
        all_windows.extend(artifact.windows.clone());
        manifest_homes.push(ManifestHome {
            name: artifact.name.clone(),
            files: files
                .iter()
                .map(|p| {
                    p.strip_prefix(&resolved.out_dir)
                        .unwrap_or(p)
                        .to_string_lossy()
                        .into_owned()
                })
                .collect(),
            counts: artifact.counts.clone(),
        });
        homes.push(HomeOutcome {
            name: artifact.name,
            windows: artifact.windows,
            counts: manifest_homes.last().unwrap().counts.clone(),
            files,
        });
    }

    let stats = compute_stats(&all_windows);
    #[derive(Serialize)]
    struct StatsReport<'a> {
        overall: &'a DatasetStats,
        per_home: &'a BTreeMap<String, DatasetStats>,
    }
    std::fs::write(
        resolved.out_dir.join("stats.json"),
        serde_json::to_string_pretty(&StatsReport {
            overall: &stats,
            per_home: &per_home_stats,
        })?,
    )?;
    std::fs::write(
        resolved.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&Manifest {
            config_hash: &resolved.config_hash,
            seed: resolved.config.seed,
            homes: manifest_homes,
        })?,
    )?;

    logger.summary(&format!(
        "generated {} window(s) across {} home(s) into {}",
        stats.window_count,
        homes.len(),
        resolved.out_dir.display()
    ));
    Ok(GenerateOutcome {
        out_dir: resolved.out_dir.clone(),
        homes,
        stats,
    })
}

fn bail_missing(i: usize) -> Result<HomeArtifacts> {
    Err(anyhow::anyhow!("worker dropped home {i} without a result"))
}
