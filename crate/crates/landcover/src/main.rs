//! Command-line front end for the land-cover classification pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate
//! outcome (the transfer stage fell back to the pre-trained model).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use landcover::classifier::load_model;
use landcover::pipeline::{
    harvest_sources, load_config, run_all, run_classify, run_evaluate, run_pretrain,
    run_transfer, stage_seed, synth_scene, Overrides, PipelineConfig, PipelineError, Scene,
    SceneSpec,
};
use landcover::raster::{export_mask_png, read_mask, read_raster, write_mask, write_raster};

#[derive(Parser)]
#[command(
    name = "landcover",
    version,
    about = "Transferable patch-based land-cover classification",
    after_help = "Configuration comes from an optional `key = value` file (--config) with \
                  flag overrides layered on top. Artifacts land in the configured output \
                  directory (--out)."
)]
struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pseudo-label confidence threshold in (0, 1).
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Nearest source neighbors that must agree during retrieval.
    #[arg(long, global = true)]
    delta: Option<usize>,
    /// Cap on mined candidates per pseudo-label class.
    #[arg(long, global = true)]
    mu: Option<usize>,
    /// Comma-separated window sizes, smallest = grid cell.
    #[arg(long, global = true, value_delimiter = ',')]
    scales: Option<Vec<usize>>,
    /// Scale parameter of the initial graph-based segmentation.
    #[arg(long = "seg-k", global = true)]
    seg_k: Option<f64>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled scene.
    Synth {
        /// Apply the configured spectral shift (target-domain variant).
        #[arg(long)]
        shifted: bool,
        /// Scene seed; defaults to the stage seed `run-all` would use for
        /// this scene (source-0, or target when --shifted).
        #[arg(long)]
        scene_seed: Option<u64>,
        /// File stem for `<stem>.mbr`, `<stem>.msk`, `<stem>.png`.
        #[arg(long, default_value = "scene")]
        stem: String,
    },
    /// Pre-train the classifier on labeled source scenes.
    Pretrain {
        /// Source raster; repeat for several scenes, paired with --truth.
        #[arg(long = "scene", required = true)]
        scenes: Vec<PathBuf>,
        /// Ground-truth mask for the scene at the same position.
        #[arg(long = "truth", required = true)]
        truths: Vec<PathBuf>,
    },
    /// Mine pseudo-labeled samples from an unlabeled target and fine-tune.
    Transfer {
        /// Pre-trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Unlabeled target raster.
        #[arg(long)]
        target: PathBuf,
        /// The source scenes the model was pre-trained on (for retrieval).
        #[arg(long = "scene", required = true)]
        scenes: Vec<PathBuf>,
        #[arg(long = "truth", required = true)]
        truths: Vec<PathBuf>,
    },
    /// Classify a raster: patchwise map, segmentation, voted final map.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Artifact stem, e.g. `<stem>_final.msk`.
        #[arg(long, default_value = "map")]
        stem: String,
    },
    /// Score a predicted mask against ground truth.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "eval")]
        stem: String,
    },
    /// Full experiment: synth source+target, pretrain, transfer, classify
    /// with both models, evaluate all maps.
    RunAll,
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        sigma: cli.sigma,
        delta: cli.delta,
        mu: cli.mu,
        scales: cli.scales.clone(),
        seg_k: cli.seg_k,
        out_dir: cli.out.clone(),
    };
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn load_scenes(scenes: &[PathBuf], truths: &[PathBuf]) -> Result<Vec<Scene>, PipelineError> {
    if scenes.len() != truths.len() {
        return Err(PipelineError::SceneTruthMismatch {
            scenes: scenes.len(),
            truths: truths.len(),
        });
    }
    scenes
        .iter()
        .zip(truths)
        .map(|(s, t)| Ok((read_raster(s)?, read_mask(t)?)))
        .collect()
}

fn run(cli: &Cli) -> Result<u8, PipelineError> {
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Synth { shifted, scene_seed, stem } => {
            let stage = if *shifted { "target" } else { "source-0" };
            let seed = scene_seed.unwrap_or_else(|| stage_seed(cfg.seed, stage));
            let spec = SceneSpec::from_pipeline(&cfg, seed, *shifted);
            let (raster, mask) = synth_scene(&spec)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            write_raster(&raster, cfg.out_dir.join(format!("{stem}.mbr")))?;
            write_mask(&mask, cfg.out_dir.join(format!("{stem}.msk")))?;
            export_mask_png(&mask, &cfg.legend()?, cfg.out_dir.join(format!("{stem}.png")))?;
            println!(
                "wrote {}x{} scene ({} bands, {} classes) to {}/{stem}.{{mbr,msk,png}}",
                raster.width(),
                raster.height(),
                raster.bands(),
                cfg.classes,
                cfg.out_dir.display()
            );
            Ok(0)
        }
        Command::Pretrain { scenes, truths } => {
            let sources = load_scenes(scenes, truths)?;
            let outcome = run_pretrain(&cfg, &sources)?;
            for (i, report) in outcome.reports.iter().enumerate() {
                for (scale, class, got) in report.shortfalls() {
                    eprintln!(
                        "warning: scene {i} scale index {scale}: class {class} yielded only {got} of {} samples",
                        report.requested_per_class_per_scale
                    );
                }
            }
            println!(
                "trained on {} samples -> {}",
                outcome.samples.len(),
                cfg.out_dir.join("pretrained.clf").display()
            );
            Ok(0)
        }
        Command::Transfer { model, target, scenes, truths } => {
            let model = load_model(model)?;
            let sources = load_scenes(scenes, truths)?;
            let (samples, _) = harvest_sources(&cfg, &sources)?;
            let target = read_raster(target)?;
            let outcome = run_transfer(&cfg, &model, &samples, &target)?;
            println!(
                "{} of {} candidates survived mining -> {}",
                outcome.survivors,
                outcome.candidates,
                cfg.out_dir.join("finetuned.clf").display()
            );
            if outcome.fallback {
                eprintln!("warning: empty survivor set; kept the pre-trained model");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Classify { model, target, stem } => {
            let model = load_model(model)?;
            let target = read_raster(target)?;
            let outcome = run_classify(&cfg, &model, &target, stem)?;
            println!(
                "classified {}x{} into {} regions -> {}/{stem}_*.{{msk,seg,png}}",
                target.width(),
                target.height(),
                outcome.segmentation.region_count(),
                cfg.out_dir.display()
            );
            Ok(0)
        }
        Command::Evaluate { truth, pred, stem } => {
            let truth = read_mask(truth)?;
            let pred = read_mask(pred)?;
            let report = run_evaluate(&cfg, &truth, &pred, stem)?;
            print!("{}", report.to_text(None));
            println!("report: {}", cfg.out_dir.join(format!("{stem}_metrics.csv")).display());
            Ok(0)
        }
        Command::RunAll => {
            let summary = run_all(&cfg)?;
            print!(
                "pretrained OA {:.4} -> finetuned OA {:.4} ({} survivors)\n",
                summary.pretrained_final_oa, summary.finetuned_final_oa, summary.survivors
            );
            println!("artifacts in {}", cfg.out_dir.display());
            if summary.fallback {
                eprintln!("warning: transfer fell back to the pre-trained model");
                return Ok(3);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap treats --help/--version as errors; keep them exit 0 and
            // report genuine usage problems as exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
