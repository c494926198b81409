//! Walk the sample-mining chain on a shifted target scene: pseudo-label
//! assignment, entropy ranking with the per-class cap, retrieval-based
//! unanimity filtering, and the fine-tune that follows. Prints where each
//! stage loses candidates and how window accuracy moves.
//!
//!     cargo run --example transfer_mining

use landcover::patching::{extract_training_samples, sliding_candidates};
use landcover::pipeline::{
    run_pretrain, run_transfer, source_scene_spec, synth_scene, target_scene_spec,
    PipelineConfig,
};
use landcover::transfer::{mine_finetune_set, MiningDecision};

fn main() {
    let mut cfg = PipelineConfig::default();
    cfg.out_dir = "out/transfer_mining".into();

    let sources: Vec<_> = (0..cfg.source_scenes)
        .map(|i| synth_scene(&source_scene_spec(&cfg, i)).expect("generate scene"))
        .collect();
    let (target, truth) = synth_scene(&target_scene_spec(&cfg)).unwrap();

    let pretrain = run_pretrain(&cfg, &sources).expect("pre-train");

    // Re-run the mining stage by hand to look inside the audit trail.
    let sc = cfg.scale_config().unwrap();
    let candidates = sliding_candidates(&target, &sc).unwrap();
    let (survivor_set, audit) =
        mine_finetune_set(&pretrain.model, &candidates, &pretrain.samples, &cfg.transfer)
            .expect("mine");

    let mut unconfident = 0;
    let mut capped = 0;
    let mut contradicted = 0;
    for r in &audit.records {
        match r.decision {
            MiningDecision::Unconfident => unconfident += 1,
            MiningDecision::Capped => capped += 1,
            MiningDecision::Contradicted { .. } => contradicted += 1,
            MiningDecision::Kept { .. } => {}
        }
    }
    println!("candidates: {}", candidates.len());
    println!("  below confidence threshold: {unconfident}");
    println!("  lost the per-class cap:     {capped}");
    println!("  contradicted by retrieval:  {contradicted}");
    println!("  survivors:                  {}", survivor_set.len());

    let per_class = {
        let mut counts = vec![0usize; cfg.classes as usize];
        for s in &survivor_set {
            counts[s.label as usize] += 1;
        }
        counts
    };
    println!("survivors per pseudo-label class: {per_class:?}");

    // The official stage: writes finetuned.clf and transfer_audit.txt.
    let transfer = run_transfer(&cfg, &pretrain.model, &pretrain.samples, &target).unwrap();
    assert!(!transfer.fallback, "mining found survivors, so no fallback");

    let (windows, _) =
        extract_training_samples(&target, &truth, &sc, 60, cfg.purity, 31337).unwrap();
    let acc = |model: &landcover::ClassifierModel| {
        let hits = windows
            .iter()
            .filter(|s| model.predict_proba(&s.patch).top().0 == s.label)
            .count();
        hits as f64 / windows.len() as f64
    };
    println!(
        "target window accuracy: pre-trained {:.4} -> fine-tuned {:.4}",
        acc(&pretrain.model),
        acc(&transfer.model)
    );
}
