//! End-to-end orchestration: configuration, synthetic scenes, and the
//! pretrain → transfer → classify → evaluate experiment runner behind the
//! CLI. Every stage persists its artifacts under the configured output
//! directory and derives its randomness from the one global seed.

mod config;
mod synth;

pub use config::{load_config, parse_config, ConfigError, Overrides, PipelineConfig};
pub use synth::{
    apply_shift, illumination_ladder, synth_from_mask, synth_scene, SceneSpec, SynthError,
};

use std::fs;
use std::path::PathBuf;

use crate::classifier::{
    fine_tune, save_model, train_with_hidden, ClassifierModel, ModelIoError, TrainError,
};
use crate::fusion::{classify_map, FusionError};
use crate::metrics::{confusion, MetricReport, MetricsError};
use crate::patching::{
    extract_training_samples, sliding_candidates, HarvestReport, LabeledSample, PatchError,
};
use crate::raster::{
    export_mask_png, write_mask, write_raster, LabelMask, MultibandRaster, RasterError,
};
use crate::segmentation::{
    export_boundary_overlay, segment, write_segmentation, SegError, Segmentation,
};
use crate::transfer::{mine_finetune_set, TransferError};
use crate::voting::{majority_vote, VotingError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no source scenes provided")]
    EmptySourceList,
    #[error("{scenes} source scenes but {truths} truth masks; pass one --truth per --scene")]
    SceneTruthMismatch { scenes: usize, truths: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    ModelIo(#[from] ModelIoError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Seg(#[from] SegError),
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit code the CLI maps this error to: 1 for usage problems
    /// (configuration), 2 for data problems (everything else). The
    /// degenerate-outcome code 3 is not an error; see
    /// [`TransferOutcome::fallback`].
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::SceneTruthMismatch { .. } => 1,
            _ => 2,
        }
    }
}

/// A labeled scene: the imagery and its ground-truth mask.
pub type Scene = (MultibandRaster, LabelMask);

/// Derive a stage-local seed from the global seed and a stage name:
/// FNV-1a over the name, XORed into the seed, finalized with a splitmix64
/// round. Stages stay reproducible in isolation without sharing streams.
pub fn stage_seed(global: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in stage.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = (global ^ h).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Recipe for the `index`-th synthetic source scene: seeded off the global
/// seed and placed on the illumination ladder. Texture cover ramps up with
/// illumination — strong light accentuates surface structure — so bright
/// acquisitions are mostly textured while smooth patches dominate the dim
/// scenes near the reference illumination.
pub fn source_scene_spec(cfg: &PipelineConfig, index: usize) -> SceneSpec {
    let mut spec =
        SceneSpec::from_pipeline(cfg, stage_seed(cfg.seed, &format!("source-{index}")), false);
    spec.brightness = illumination_ladder(cfg.illum_span, index, cfg.source_scenes);
    let t = if cfg.illum_span > 0.0 { spec.brightness / cfg.illum_span } else { 0.0 };
    let cover = (cfg.texture_cover + (0.9 - cfg.texture_cover) * t).max(cfg.texture_cover);
    for c in spec.texture_cover.iter_mut() {
        if *c < 1.0 {
            *c = cover.min(1.0);
        }
    }
    spec
}

/// Recipe for the synthetic shifted target scene.
pub fn target_scene_spec(cfg: &PipelineConfig) -> SceneSpec {
    SceneSpec::from_pipeline(cfg, stage_seed(cfg.seed, "target"), true)
}

/// Harvest purity-filtered training windows from every source scene.
pub fn harvest_sources(
    cfg: &PipelineConfig,
    sources: &[Scene],
) -> Result<(Vec<LabeledSample>, Vec<HarvestReport>), PipelineError> {
    let sc = cfg.scale_config()?;
    let mut samples = Vec::new();
    let mut reports = Vec::new();
    for (i, (raster, mask)) in sources.iter().enumerate() {
        let seed = stage_seed(cfg.seed, &format!("harvest-{i}"));
        let (mut s, report) =
            extract_training_samples(raster, mask, &sc, cfg.samples_per_class, cfg.purity, seed)?;
        samples.append(&mut s);
        reports.push(report);
    }
    Ok((samples, reports))
}

#[derive(Debug)]
pub struct PretrainOutcome {
    pub model: ClassifierModel,
    /// The harvested source samples, kept for retrieval during transfer.
    pub samples: Vec<LabeledSample>,
    pub reports: Vec<HarvestReport>,
}

/// Pre-train the classifier on labeled source scenes and persist it as
/// `pretrained.clf`.
pub fn run_pretrain(
    cfg: &PipelineConfig,
    sources: &[Scene],
) -> Result<PretrainOutcome, PipelineError> {
    cfg.validate()?;
    if sources.is_empty() {
        return Err(PipelineError::EmptySourceList);
    }
    let (samples, reports) = harvest_sources(cfg, sources)?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = stage_seed(cfg.seed, "pretrain");
    let model = train_with_hidden(&samples, cfg.hidden, &train_cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    save_model(&model, &cfg.out_dir.join("pretrained.clf"))?;
    Ok(PretrainOutcome { model, samples, reports })
}

#[derive(Debug)]
pub struct TransferOutcome {
    /// The fine-tuned model, or a copy of the input model when `fallback`.
    pub model: ClassifierModel,
    /// True when the survivor set was empty and fine-tuning was skipped;
    /// the CLI reports this as the degenerate outcome (exit code 3).
    pub fallback: bool,
    pub candidates: usize,
    pub survivors: usize,
}

/// Mine pseudo-labeled fine-tuning samples from the unlabeled target and
/// fine-tune (falling back to the input model when nothing survives).
/// Persists `finetuned.clf` and the per-candidate `transfer_audit.txt`.
pub fn run_transfer(
    cfg: &PipelineConfig,
    model: &ClassifierModel,
    source_samples: &[LabeledSample],
    target: &MultibandRaster,
) -> Result<TransferOutcome, PipelineError> {
    cfg.validate()?;
    let sc = cfg.scale_config()?;
    let candidates = sliding_candidates(target, &sc)?;
    let (finetune_set, audit) =
        mine_finetune_set(model, &candidates, source_samples, &cfg.transfer)?;

    fs::create_dir_all(&cfg.out_dir)?;
    let audit_file = fs::File::create(cfg.out_dir.join("transfer_audit.txt"))?;
    audit.write_to(std::io::BufWriter::new(audit_file))?;

    let (out_model, fallback) = if finetune_set.is_empty() {
        (model.clone(), true)
    } else {
        let mut ft_cfg = cfg.train.clone();
        ft_cfg.seed = stage_seed(cfg.seed, "finetune");
        ft_cfg.epochs = cfg.finetune_epochs;
        ft_cfg.initial_lr = cfg.finetune_lr;
        (fine_tune(model, &finetune_set, &ft_cfg)?, false)
    };
    save_model(&out_model, &cfg.out_dir.join("finetuned.clf"))?;
    Ok(TransferOutcome {
        model: out_model,
        fallback,
        candidates: candidates.len(),
        survivors: audit.survivors(),
    })
}

#[derive(Debug)]
pub struct ClassifyOutcome {
    pub patchwise: LabelMask,
    pub final_map: LabelMask,
    pub segmentation: Segmentation,
}

/// Produce the patch-wise map, the segmentation, and the majority-voted
/// final map, persisting all three plus PNG previews under `<stem>_*`.
pub fn run_classify(
    cfg: &PipelineConfig,
    model: &ClassifierModel,
    target: &MultibandRaster,
    stem: &str,
) -> Result<ClassifyOutcome, PipelineError> {
    cfg.validate()?;
    let sc = cfg.scale_config()?;
    let legend = cfg.legend()?;
    let patchwise = classify_map(model, target, &sc)?;
    let segmentation = segment(target, &cfg.seg)?;
    let final_map = majority_vote(&patchwise, &segmentation)?;

    fs::create_dir_all(&cfg.out_dir)?;
    let path = |name: String| -> PathBuf { cfg.out_dir.join(name) };
    write_mask(&patchwise, path(format!("{stem}_patchwise.msk")))?;
    write_mask(&final_map, path(format!("{stem}_final.msk")))?;
    write_segmentation(&segmentation, &path(format!("{stem}.seg")))?;
    export_mask_png(&patchwise, &legend, path(format!("{stem}_patchwise.png")))?;
    export_mask_png(&final_map, &legend, path(format!("{stem}_final.png")))?;
    export_boundary_overlay(target, &segmentation, &path(format!("{stem}_boundaries.png")))?;
    Ok(ClassifyOutcome { patchwise, final_map, segmentation })
}

/// Score a prediction against labeled truth and persist the metric report
/// as `<stem>_metrics.csv` and `<stem>_metrics.txt`.
pub fn run_evaluate(
    cfg: &PipelineConfig,
    truth: &LabelMask,
    pred: &LabelMask,
    stem: &str,
) -> Result<MetricReport, PipelineError> {
    let cm = confusion(truth, pred, cfg.classes as usize)?;
    let report = MetricReport::from_matrix(&cm)?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join(format!("{stem}_metrics.csv")), report.to_csv())?;
    fs::write(cfg.out_dir.join(format!("{stem}_metrics.txt")), report.to_text(Some(&cm)))?;
    Ok(report)
}

/// Headline numbers of one full experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub fallback: bool,
    pub survivors: usize,
    pub pretrained_patchwise_oa: f64,
    pub pretrained_final_oa: f64,
    pub finetuned_patchwise_oa: f64,
    pub finetuned_final_oa: f64,
}

impl RunSummary {
    fn to_text(&self) -> String {
        format!(
            "survivors: {}\nfallback: {}\npretrained patchwise OA: {}\npretrained final OA: {}\nfinetuned patchwise OA: {}\nfinetuned final OA: {}\nnote: margin pixels beyond the last full grid cell stay background and score as rejected\n",
            self.survivors,
            self.fallback,
            self.pretrained_patchwise_oa,
            self.pretrained_final_oa,
            self.finetuned_patchwise_oa,
            self.finetuned_final_oa,
        )
    }
}

/// The whole experiment: synthesize labeled source scenes and a spectrally
/// shifted target, pre-train, transfer, classify the target with both the
/// pre-trained and fine-tuned models, and evaluate all four maps. Every
/// artifact lands in `cfg.out_dir`; identical configs produce
/// byte-identical artifacts.
pub fn run_all(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;

    let mut sources = Vec::new();
    for i in 0..cfg.source_scenes {
        let (raster, mask) = synth_scene(&source_scene_spec(cfg, i))?;
        write_raster(&raster, cfg.out_dir.join(format!("source_{i}.mbr")))?;
        write_mask(&mask, cfg.out_dir.join(format!("source_{i}.msk")))?;
        sources.push((raster, mask));
    }
    let (target, truth) = synth_scene(&target_scene_spec(cfg))?;
    write_raster(&target, cfg.out_dir.join("target.mbr"))?;
    write_mask(&truth, cfg.out_dir.join("target_truth.msk"))?;
    export_mask_png(&truth, &cfg.legend()?, cfg.out_dir.join("target_truth.png"))?;

    let pretrain = run_pretrain(cfg, &sources)?;
    let transfer = run_transfer(cfg, &pretrain.model, &pretrain.samples, &target)?;

    let pt = run_classify(cfg, &pretrain.model, &target, "pretrained")?;
    let ft = run_classify(cfg, &transfer.model, &target, "finetuned")?;

    let pt_patch = run_evaluate(cfg, &truth, &pt.patchwise, "pretrained_patchwise")?;
    let pt_final = run_evaluate(cfg, &truth, &pt.final_map, "pretrained_final")?;
    let ft_patch = run_evaluate(cfg, &truth, &ft.patchwise, "finetuned_patchwise")?;
    let ft_final = run_evaluate(cfg, &truth, &ft.final_map, "finetuned_final")?;

    let summary = RunSummary {
        fallback: transfer.fallback,
        survivors: transfer.survivors,
        pretrained_patchwise_oa: pt_patch.overall_accuracy,
        pretrained_final_oa: pt_final.overall_accuracy,
        finetuned_patchwise_oa: ft_patch.overall_accuracy,
        finetuned_final_oa: ft_final.overall_accuracy,
    };
    fs::write(cfg.out_dir.join("summary.txt"), summary.to_text())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::load_model;
    use crate::metrics::overall_accuracy;
    use crate::raster::{read_mask, read_raster, BACKGROUND};
    use crate::segmentation::read_segmentation;

    /// Small, fast configuration for unit-level runs.
    fn small_cfg(out: &std::path::Path) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.out_dir = out.to_path_buf();
        cfg.classes = 3;
        cfg.scales = vec![8, 16];
        cfg.scene_width = 96;
        cfg.scene_height = 96;
        cfg.bands = 2;
        cfg.sites = 9;
        cfg.hidden = 24;
        cfg.samples_per_class = 25;
        cfg.train.epochs = 12;
        cfg.source_scenes = 1;
        cfg.seg.min_region = 30;
        cfg.validate().unwrap();
        cfg
    }

    fn scene_for(cfg: &PipelineConfig, seed: u64, shifted: bool) -> Scene {
        synth_scene(&SceneSpec::from_pipeline(cfg, seed, shifted)).unwrap()
    }

    /// Fraction of purity-filtered validation windows the model labels
    /// correctly.
    fn sample_accuracy(cfg: &PipelineConfig, model: &ClassifierModel, scene: &Scene) -> f64 {
        let sc = cfg.scale_config().unwrap();
        let (samples, _) =
            extract_training_samples(&scene.0, &scene.1, &sc, 30, cfg.purity, 987).unwrap();
        assert!(!samples.is_empty());
        let correct = samples
            .iter()
            .filter(|s| model.predict_proba(&s.patch).top().0 == s.label)
            .count();
        correct as f64 / samples.len() as f64
    }

    #[test]
    fn stage_seeds_are_deterministic_and_distinct() {
        assert_eq!(stage_seed(7, "pretrain"), stage_seed(7, "pretrain"));
        assert_ne!(stage_seed(7, "pretrain"), stage_seed(7, "finetune"));
        assert_ne!(stage_seed(7, "pretrain"), stage_seed(8, "pretrain"));
        let names = ["harvest-0", "harvest-1", "pretrain", "finetune", "target", "source-0"];
        let seeds: std::collections::BTreeSet<u64> =
            names.iter().map(|n| stage_seed(3, n)).collect();
        assert_eq!(seeds.len(), names.len());
    }

    #[test]
    fn pretrain_requires_sources_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg(dir.path());
        assert!(matches!(run_pretrain(&cfg, &[]), Err(PipelineError::EmptySourceList)));

        let source = scene_for(&cfg, stage_seed(cfg.seed, "source-0"), false);
        let a = run_pretrain(&cfg, std::slice::from_ref(&source)).unwrap();
        let bytes_a = fs::read(cfg.out_dir.join("pretrained.clf")).unwrap();
        let b = run_pretrain(&cfg, std::slice::from_ref(&source)).unwrap();
        let bytes_b = fs::read(cfg.out_dir.join("pretrained.clf")).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(bytes_a, bytes_b);
        assert_eq!(load_model(&cfg.out_dir.join("pretrained.clf")).unwrap(), a.model);
    }

    #[test]
    fn pretrained_model_generalizes_to_held_out_scene() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        cfg.classes = 2;
        cfg.sites = 8;
        let train_scene = scene_for(&cfg, 100, false);
        let held_out = scene_for(&cfg, 200, false);
        let pre = run_pretrain(&cfg, &[train_scene]).unwrap();
        let acc = sample_accuracy(&cfg, &pre.model, &held_out);
        assert!(acc >= 0.95, "held-out accuracy {acc}");
    }

    #[test]
    fn impossible_sigma_falls_back_to_the_input_model() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        let source = scene_for(&cfg, stage_seed(cfg.seed, "source-0"), false);
        let (target, _) = scene_for(&cfg, stage_seed(cfg.seed, "target"), true);
        let pre = run_pretrain(&cfg, std::slice::from_ref(&source)).unwrap();

        cfg.transfer.confidence_threshold = 0.999_999_9;
        let outcome = run_transfer(&cfg, &pre.model, &pre.samples, &target).unwrap();
        assert!(outcome.fallback);
        assert_eq!(outcome.survivors, 0);
        assert_eq!(outcome.model, pre.model);
        // The persisted fallback model is the pre-trained model.
        assert_eq!(load_model(&cfg.out_dir.join("finetuned.clf")).unwrap(), pre.model);
        assert!(cfg.out_dir.join("transfer_audit.txt").exists());
    }

    #[test]
    fn unshifted_target_keeps_accuracy_within_two_points() {
        let mut pt_acc = 0.0;
        let mut ft_acc = 0.0;
        let seeds = [500u64, 501];
        for &seed in &seeds {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = small_cfg(dir.path());
            cfg.seed = seed;
            let source = scene_for(&cfg, stage_seed(cfg.seed, "source-0"), false);
            // Unshifted target drawn from the same distribution.
            let target_scene = scene_for(&cfg, stage_seed(cfg.seed, "target"), false);
            let pre = run_pretrain(&cfg, std::slice::from_ref(&source)).unwrap();
            let outcome = run_transfer(&cfg, &pre.model, &pre.samples, &target_scene.0).unwrap();
            assert!(!outcome.fallback, "seed {seed} fell back");
            assert!(outcome.survivors > 0);
            pt_acc += sample_accuracy(&cfg, &pre.model, &target_scene);
            ft_acc += sample_accuracy(&cfg, &outcome.model, &target_scene);
        }
        pt_acc /= seeds.len() as f64;
        ft_acc /= seeds.len() as f64;
        assert!(
            (pt_acc - ft_acc).abs() <= 0.02,
            "pre-trained {pt_acc} vs fine-tuned {ft_acc}"
        );
    }

    #[test]
    fn constant_scene_classifies_to_a_constant_final_map() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        cfg.classes = 2;
        cfg.sites = 8;
        cfg.bands = 1;
        let source = scene_for(&cfg, 42, false);
        let pre = run_pretrain(&cfg, &[source]).unwrap();

        // A raster pinned to class 1's mean is unambiguous everywhere.
        let spec = SceneSpec::from_pipeline(&cfg, 0, false);
        let value = spec.class_means[1][0] as f32;
        let flat = MultibandRaster::filled(48, 48, 1, value).unwrap();
        let out = run_classify(&cfg, &pre.model, &flat, "flat").unwrap();
        assert!(out.final_map.labels().iter().all(|&l| l == 1));
        assert_eq!(out.segmentation.region_count(), 1);
    }

    #[test]
    fn final_map_is_constant_within_segmentation_regions() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg(dir.path());
        let source = scene_for(&cfg, stage_seed(cfg.seed, "source-0"), false);
        let (target, _) = scene_for(&cfg, stage_seed(cfg.seed, "target"), true);
        let pre = run_pretrain(&cfg, &[source]).unwrap();
        let out = run_classify(&cfg, &pre.model, &target, "check").unwrap();

        let mut region_label = vec![None; out.segmentation.region_count()];
        for (&label, &region) in out.final_map.labels().iter().zip(out.segmentation.ids()) {
            match region_label[region as usize] {
                None => region_label[region as usize] = Some(label),
                Some(seen) => assert_eq!(seen, label, "region {region} not constant"),
            }
        }
        // Artifacts round-trip through their readers.
        let patch = read_mask(cfg.out_dir.join("check_patchwise.msk")).unwrap();
        assert_eq!(patch.labels(), out.patchwise.labels());
        let final_m = read_mask(cfg.out_dir.join("check_final.msk")).unwrap();
        assert_eq!(final_m.labels(), out.final_map.labels());
        let seg = read_segmentation(&cfg.out_dir.join("check.seg")).unwrap();
        assert_eq!(seg.ids(), out.segmentation.ids());
        assert!(cfg.out_dir.join("check_final.png").exists());
        assert!(cfg.out_dir.join("check_boundaries.png").exists());
    }

    #[test]
    fn evaluate_writes_reports_that_reparse() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        cfg.classes = 2;

        // 10x10 masks realizing the confusion matrix [[30,20],[20,30]].
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for i in 0..100u16 {
            let t = u16::from(i >= 50);
            truth.push(t);
            let correct = (i % 50) < 30;
            pred.push(if correct { t } else { 1 - t });
        }
        let truth = LabelMask::new(10, 10, 2, truth).unwrap();
        let pred = LabelMask::new(10, 10, 2, pred).unwrap();

        let report = run_evaluate(&cfg, &truth, &pred, "fixture").unwrap();
        assert!((report.overall_accuracy - 0.6).abs() < 1e-12);
        assert!((report.kappa.value - 0.2).abs() < 1e-12);

        let csv = fs::read_to_string(cfg.out_dir.join("fixture_metrics.csv")).unwrap();
        let reparsed = MetricReport::from_csv(&csv).unwrap();
        assert_eq!(reparsed, report);
        let text = fs::read_to_string(cfg.out_dir.join("fixture_metrics.txt")).unwrap();
        assert!(text.contains("overall accuracy: 0.6000"));

        // Perfect prediction scores 1.0 on both headline metrics.
        let perfect = run_evaluate(&cfg, &truth, &truth, "perfect").unwrap();
        assert_eq!(perfect.overall_accuracy, 1.0);
        assert!((perfect.kappa.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn run_all_produces_identical_artifacts_across_runs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg_a = small_cfg(dir_a.path());
        let cfg_b = small_cfg(dir_b.path());

        let summary_a = run_all(&cfg_a).unwrap();
        let summary_b = run_all(&cfg_b).unwrap();
        assert_eq!(summary_a, summary_b);
        assert!(!summary_a.fallback);

        for name in [
            "source_0.mbr",
            "source_0.msk",
            "target.mbr",
            "target_truth.msk",
            "pretrained.clf",
            "finetuned.clf",
            "transfer_audit.txt",
            "pretrained_patchwise.msk",
            "finetuned_final.msk",
            "finetuned.seg",
            "finetuned_final_metrics.csv",
            "pretrained_final_metrics.csv",
            "summary.txt",
            "finetuned_final.png",
        ] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "artifact {name} differs between runs");
        }

        // Readers accept every structured artifact.
        read_raster(dir_a.path().join("target.mbr")).unwrap();
        let truth = read_mask(dir_a.path().join("target_truth.msk")).unwrap();
        load_model(&dir_a.path().join("finetuned.clf")).unwrap();
        read_segmentation(&dir_a.path().join("finetuned.seg")).unwrap();
        let final_map = read_mask(dir_a.path().join("finetuned_final.msk")).unwrap();

        // The summary's OA matches an independent recomputation from the
        // persisted masks.
        let cm = confusion(&truth, &final_map, cfg_a.classes as usize).unwrap();
        let oa = overall_accuracy(&cm).unwrap();
        assert!((oa - summary_a.finetuned_final_oa).abs() < 1e-12);

        // 96 divides evenly into 8-pixel cells, so the patchwise map has no
        // background margin.
        let patch = read_mask(dir_a.path().join("finetuned_patchwise.msk")).unwrap();
        assert!(patch.labels().iter().all(|&l| l != BACKGROUND));
    }
}
