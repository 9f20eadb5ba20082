//! `stainbench` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a submission fails validation, 2 for
//! usage errors and any other failure.

mod config;
mod loss;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use stainbench_core::demo::{run_demo, DemoConfig};
use stainbench_core::json::to_canonical_string;
use stainbench_core::model::{Her2Level, LandmarkSet, PatchManifest, Split};
use stainbench_core::patch::{patchify, qc_flags, PatchRecord};
use stainbench_core::registration::render_overlay;
use stainbench_core::{
    evaluate_set, load_image, rank_teams, register_wsi_pair, save_image, validate_submission, MetricReport, SsimMode,
    TeamEntry,
};

use config::Config;
use loss::LossName;

#[derive(Debug, Parser)]
#[command(name = "stainbench", version, about = "Virtual staining benchmark toolkit")]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "STAINBENCH_THREADS")]
    threads: Option<usize>,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Register an H&E slide onto its IHC counterpart.
    Register {
        #[arg(long)]
        he: PathBuf,
        #[arg(long)]
        ihc: PathBuf,
        /// JSON file of `{"pairs": [{"moving": [x, y], "fixed": [x, y]}, ...]}`.
        #[arg(long)]
        landmarks: PathBuf,
        /// Registered H&E image.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Cut a registered pair into patches and write a manifest.
    Patchify {
        #[arg(long)]
        he: PathBuf,
        #[arg(long)]
        ihc: PathBuf,
        #[arg(long)]
        wsi_id: String,
        #[arg(long)]
        her2: Her2Level,
        #[arg(long)]
        split: Split,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Score predictions against ground truth by file name.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value = "windowed")]
        ssim: SsimMode,
        #[arg(long)]
        team: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank teams from metric reports or a JSON array of team entries.
    Rank {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a submission directory against a manifest.
    Validate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a loss functional on tensor inputs.
    Loss {
        name: LossName,
        #[arg(long, num_args = 0..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
        /// Destination for tensor-valued results (wavelet transforms).
        #[arg(long)]
        tensor_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Blend two images 50/50.
    Overlay {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the pipeline end to end on a synthetic pair.
    Demo {
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        patch_size: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Ok,
    Invalid,
}

fn emit<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = to_canonical_string(value)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Loads one `rank` input: an array of team entries, or a single metric
/// report whose team defaults to the file stem.
fn rank_inputs(path: &Path) -> Result<Vec<TeamEntry>> {
    let v: Value = read_json(path)?;
    if v.is_array() {
        return serde_json::from_value(v).with_context(|| format!("team entries in {}", path.display()));
    }
    let report: MetricReport =
        serde_json::from_value(v).with_context(|| format!("metric report in {}", path.display()))?;
    let team = match report.team {
        Some(t) => t,
        None => path.file_stem().and_then(|s| s.to_str()).context("report has no team name")?.to_string(),
    };
    Ok(vec![TeamEntry {
        team,
        mean_psnr_db: report.aggregate.mean_psnr_db,
        mean_ssim: report.aggregate.mean_ssim,
    }])
}

fn run(cli: Cli, cfg: Config) -> Result<Outcome> {
    match cli.command {
        Command::Register { he, ihc, landmarks, out, report, overlay } => {
            let he = load_image(&he)?;
            let ihc = load_image(&ihc)?;
            let lm: LandmarkSet = read_json(&landmarks)?;
            let reg = register_wsi_pair(&he, &ihc, &lm, &cfg.registration)?;
            save_image(&reg.image, &out)?;
            if let Some(p) = overlay {
                save_image(&render_overlay(&reg.image, &ihc)?, &p)?;
            }
            emit(&reg.report, report.as_deref())?;
        }
        Command::Patchify { he, ihc, wsi_id, her2, split, out, size, stride } => {
            let size = size.unwrap_or(cfg.patch.size);
            let stride = stride.or(cfg.patch.stride).unwrap_or(size);
            let he = load_image(&he)?;
            let ihc = load_image(&ihc)?;
            let pairs = patchify(&he, &ihc, size, stride)?;
            let flags = qc_flags(&pairs, &cfg.tissue, &cfg.alignment)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut records = Vec::with_capacity(pairs.len());
            for (pair, qc) in pairs.iter().zip(flags) {
                let id = stainbench_core::patch::patch_id(&wsi_id, pair.origin);
                save_image(&pair.he, out.join(format!("{id}_HE.png")))?;
                save_image(&pair.ihc, out.join(format!("{id}_IHC.png")))?;
                records.push(PatchRecord { wsi_id: wsi_id.clone(), origin: pair.origin, qc });
            }
            let labels = BTreeMap::from([(wsi_id.clone(), her2)]);
            let splits = BTreeMap::from([(wsi_id, split)]);
            let manifest = stainbench_core::patch::build_manifest(&records, size, stride, &labels, &splits)?;
            std::fs::write(out.join("manifest.json"), manifest.to_json()?)?;
            emit(&manifest.summary(), None)?;
        }
        Command::Evaluate { pred, gt, ssim, team, out } => {
            let mut report = evaluate_set(&pred, &gt, ssim, &cfg.ssim)?;
            report.team = team;
            emit(&report, out.as_deref())?;
        }
        Command::Rank { inputs, out } => {
            let mut entries = Vec::new();
            for p in &inputs {
                entries.extend(rank_inputs(p)?);
            }
            emit(&rank_teams(&entries)?, out.as_deref())?;
        }
        Command::Validate { pred, manifest, out } => {
            let text = std::fs::read_to_string(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
            let manifest = PatchManifest::from_json(&text)?;
            let verdict = validate_submission(&pred, &manifest, &cfg.validation)?;
            emit(&verdict, out.as_deref())?;
            if !verdict.valid {
                return Ok(Outcome::Invalid);
            }
        }
        Command::Loss { name, inputs, params, tensor_out, out } => {
            let params: Value = match params {
                Some(p) => read_json(&p)?,
                None => Value::Object(Default::default()),
            };
            if !params.is_object() {
                bail!("loss parameters must be a JSON object");
            }
            emit(&loss::run(name, &inputs, &params, tensor_out.as_ref())?, out.as_deref())?;
        }
        Command::Overlay { a, b, out } => {
            save_image(&render_overlay(&load_image(&a)?, &load_image(&b)?)?, &out)?;
        }
        Command::Demo { size, patch_size, out } => {
            let demo = DemoConfig {
                seed: cli.seed.or(cfg.seed).unwrap_or(DemoConfig::default().seed),
                size: size.unwrap_or(cfg.demo.size),
                patch_size: patch_size.unwrap_or(cfg.demo.patch_size),
                ..DemoConfig::default()
            };
            emit(&run_demo(&demo)?, out.as_deref())?;
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = Config::load(cli.config.as_deref()).and_then(|cfg| {
        let threads = cli.threads.or(cfg.threads).unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        pool.install(|| run(cli, cfg))
    });
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Invalid) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
