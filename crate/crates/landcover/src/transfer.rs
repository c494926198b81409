//! Semi-supervised sample mining for domain transfer.
//!
//! The selection chain turns unlabeled target-domain patches into a
//! fine-tuning set in three stages:
//!
//! 1. pseudo-label each patch with the source-trained classifier and keep
//!    only confident predictions (max probability at or above a threshold);
//! 2. rank the keepers by descending prediction entropy and cap the number
//!    retained per class;
//! 3. keep a candidate only when its nearest source-domain embeddings are
//!    unanimous and agree with the pseudo-label.

use rayon::prelude::*;

use crate::classifier::{extract_features, ClassifierModel, Embedding, ProbVector};
use crate::patching::{LabeledSample, Patch};

/// Knobs of the sample-mining chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferConfig {
    /// Minimum max-probability for a pseudo-label to be kept; in (0, 1).
    pub confidence_threshold: f64,
    /// How many nearest source embeddings must unanimously agree; >= 1.
    pub unanimity_depth: usize,
    /// Cap on candidates retained per pseudo-label class; >= 1.
    pub per_class_cap: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig { confidence_threshold: 0.8, unanimity_depth: 5, per_class_cap: 4000 }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<(), TransferError> {
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold < 1.0) {
            return Err(TransferError::BadConfig("confidence threshold must lie in (0, 1)"));
        }
        if self.unanimity_depth == 0 {
            return Err(TransferError::BadConfig("unanimity depth must be at least 1"));
        }
        if self.per_class_cap == 0 {
            return Err(TransferError::BadConfig("per-class cap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransferError {
    #[error("invalid transfer parameter: {0}")]
    BadConfig(&'static str),
    #[error("source set of {have} embeddings is smaller than unanimity depth {needed}")]
    SourceTooSmall { needed: usize, have: usize },
    #[error("no candidates were provided")]
    NoCandidates,
    #[error("no labeled source samples were provided")]
    NoSource,
    #[error("sample mining left no survivors; fine-tuning has nothing to train on")]
    EmptySurvivorSet,
}

/// A target-domain patch with the label the classifier assigned to it.
#[derive(Debug, Clone)]
pub struct PseudoLabeledSample {
    pub patch: Patch,
    pub pseudo_label: u16,
    /// Max softmax probability behind the pseudo-label.
    pub confidence: f64,
    /// Prediction entropy in nats.
    pub entropy: f64,
    pub embedding: Embedding,
}

/// Shannon entropy of a probability vector, in nats.
pub fn entropy(p: &ProbVector) -> f64 {
    p.entropy()
}

/// Pseudo-label every candidate and keep the ones predicted with
/// confidence at or above `threshold`. Order is preserved.
pub fn assign_pseudo_labels(
    model: &ClassifierModel,
    candidates: &[Patch],
    threshold: f64,
) -> Vec<PseudoLabeledSample> {
    candidates
        .par_iter()
        .filter_map(|patch| {
            let (embedding, probs) = model.forward(extract_features(patch).values());
            let (pseudo_label, confidence) = probs.top();
            (confidence >= threshold).then(|| PseudoLabeledSample {
                patch: patch.clone(),
                pseudo_label,
                confidence,
                entropy: probs.entropy(),
                embedding,
            })
        })
        .collect()
}

/// Order samples by descending entropy (stable in the input order) and keep
/// at most `cap` per pseudo-label class.
pub fn rank_and_cap(samples: &[PseudoLabeledSample], cap: usize) -> Vec<PseudoLabeledSample> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .entropy
            .partial_cmp(&samples[a].entropy)
            .expect("entropies are finite")
    });
    let classes = samples.iter().map(|s| s.pseudo_label as usize + 1).max().unwrap_or(0);
    let mut taken = vec![0usize; classes];
    let mut out = Vec::new();
    for idx in order {
        let class = samples[idx].pseudo_label as usize;
        if taken[class] < cap {
            taken[class] += 1;
            out.push(samples[idx].clone());
        }
    }
    out
}

/// Indices of the `depth` nearest source embeddings (squared Euclidean,
/// ties by source index).
fn nearest_source(query: &Embedding, source: &[(Embedding, u16)], depth: usize) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize)> = source
        .iter()
        .enumerate()
        .map(|(i, (e, _))| (query.squared_distance(e), i))
        .collect();
    ranked.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(depth).map(|(_, i)| i).collect()
}

/// Keep exactly the samples whose `depth` nearest source embeddings all
/// carry the sample's pseudo-label.
pub fn retrieve_filter(
    samples: &[PseudoLabeledSample],
    source: &[(Embedding, u16)],
    depth: usize,
) -> Result<Vec<PseudoLabeledSample>, TransferError> {
    if source.len() < depth {
        return Err(TransferError::SourceTooSmall { needed: depth, have: source.len() });
    }
    Ok(samples
        .par_iter()
        .filter(|s| {
            nearest_source(&s.embedding, source, depth)
                .iter()
                .all(|&i| source[i].1 == s.pseudo_label)
        })
        .cloned()
        .collect())
}

/// Why a candidate did or did not survive the mining chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MiningDecision {
    /// Confidence fell below the threshold.
    Unconfident,
    /// Lost the per-class entropy ranking.
    Capped,
    /// Nearest source labels were not unanimously the pseudo-label.
    Contradicted { neighbor_labels: Vec<u16> },
    /// Survived every stage.
    Kept { neighbor_labels: Vec<u16> },
}

/// One audit record per input candidate, in candidate order.
#[derive(Debug, Clone)]
pub struct MiningRecord {
    pub candidate: usize,
    pub pseudo_label: Option<u16>,
    pub confidence: f64,
    pub entropy: f64,
    pub decision: MiningDecision,
}

/// Line-delimited trace of one mining run.
#[derive(Debug, Clone, Default)]
pub struct TransferAudit {
    pub records: Vec<MiningRecord>,
}

impl TransferAudit {
    pub fn survivors(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.decision, MiningDecision::Kept { .. }))
            .count()
    }

    /// One `key=value` line per candidate.
    pub fn write_to(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for r in &self.records {
            let label = r.pseudo_label.map_or_else(|| "-".to_string(), |l| l.to_string());
            let (decision, neighbors) = match &r.decision {
                MiningDecision::Unconfident => ("unconfident", String::from("-")),
                MiningDecision::Capped => ("capped", String::from("-")),
                MiningDecision::Contradicted { neighbor_labels } => {
                    ("contradicted", join_labels(neighbor_labels))
                }
                MiningDecision::Kept { neighbor_labels } => ("kept", join_labels(neighbor_labels)),
            };
            writeln!(
                out,
                "candidate={} pseudo_label={} confidence={:.6} entropy={:.6} decision={} neighbor_labels={}",
                r.candidate, label, r.confidence, r.entropy, decision, neighbors
            )?;
        }
        Ok(())
    }
}

fn join_labels(labels: &[u16]) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
}

/// Run the full mining chain and return the fine-tuning set. An empty
/// survivor set is a distinct error so callers can fall back to the
/// pre-trained model.
pub fn build_finetune_set(
    model: &ClassifierModel,
    candidates: &[Patch],
    source: &[LabeledSample],
    cfg: &TransferConfig,
) -> Result<Vec<LabeledSample>, TransferError> {
    mine_finetune_set(model, candidates, source, cfg).and_then(|(samples, _)| {
        if samples.is_empty() {
            Err(TransferError::EmptySurvivorSet)
        } else {
            Ok(samples)
        }
    })
}

/// Like [`build_finetune_set`] but also returns the per-candidate audit
/// trail, and reports an empty survivor set as an empty vector rather than
/// an error (the audit explains why).
pub fn mine_finetune_set(
    model: &ClassifierModel,
    candidates: &[Patch],
    source: &[LabeledSample],
    cfg: &TransferConfig,
) -> Result<(Vec<LabeledSample>, TransferAudit), TransferError> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(TransferError::NoCandidates);
    }
    if source.is_empty() {
        return Err(TransferError::NoSource);
    }
    let source_embeddings: Vec<(Embedding, u16)> = source
        .par_iter()
        .map(|s| (model.embed(&s.patch), s.label))
        .collect();
    if source_embeddings.len() < cfg.unanimity_depth {
        return Err(TransferError::SourceTooSmall {
            needed: cfg.unanimity_depth,
            have: source_embeddings.len(),
        });
    }

    // Evaluate every candidate once; the audit needs records for the
    // rejected ones too.
    let evaluated: Vec<(PseudoLabeledSample, usize)> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, patch)| {
            let (embedding, probs) = model.forward(extract_features(patch).values());
            let (pseudo_label, confidence) = probs.top();
            let entropy = probs.entropy();
            (
                PseudoLabeledSample {
                    patch: patch.clone(),
                    pseudo_label,
                    confidence,
                    entropy,
                    embedding,
                },
                i,
            )
        })
        .collect();

    let confident: Vec<&(PseudoLabeledSample, usize)> = evaluated
        .iter()
        .filter(|(s, _)| s.confidence >= cfg.confidence_threshold)
        .collect();

    // Entropy ranking with per-class cap, tracking original indices.
    let mut order: Vec<usize> = (0..confident.len()).collect();
    order.sort_by(|&a, &b| {
        confident[b]
            .0
            .entropy
            .partial_cmp(&confident[a].0.entropy)
            .expect("entropies are finite")
    });
    let classes = model.num_classes();
    let mut taken = vec![0usize; classes];
    let mut capped_in: Vec<bool> = vec![false; confident.len()];
    let mut ranked: Vec<&(PseudoLabeledSample, usize)> = Vec::new();
    for idx in order {
        let class = confident[idx].0.pseudo_label as usize;
        if taken[class] < cfg.per_class_cap {
            taken[class] += 1;
            capped_in[idx] = true;
            ranked.push(confident[idx]);
        }
    }

    let neighbor_votes: Vec<Vec<u16>> = ranked
        .par_iter()
        .map(|(s, _)| {
            nearest_source(&s.embedding, &source_embeddings, cfg.unanimity_depth)
                .iter()
                .map(|&i| source_embeddings[i].1)
                .collect()
        })
        .collect();

    // Survivors keep the entropy-ranked order, matching the composition
    // assign_pseudo_labels -> rank_and_cap -> retrieve_filter exactly.
    let mut decisions: Vec<Option<MiningDecision>> = vec![None; candidates.len()];
    let mut survivors = Vec::new();
    for ((s, cand_idx), labels) in ranked.iter().zip(neighbor_votes) {
        if labels.iter().all(|&g| g == s.pseudo_label) {
            survivors.push(LabeledSample { patch: s.patch.clone(), label: s.pseudo_label });
            decisions[*cand_idx] = Some(MiningDecision::Kept { neighbor_labels: labels });
        } else {
            decisions[*cand_idx] = Some(MiningDecision::Contradicted { neighbor_labels: labels });
        }
    }
    for (pos, (_, cand_idx)) in confident.iter().enumerate() {
        if !capped_in[pos] {
            decisions[*cand_idx] = Some(MiningDecision::Capped);
        }
    }

    let mut audit = TransferAudit::default();
    for (s, i) in &evaluated {
        audit.records.push(MiningRecord {
            candidate: *i,
            pseudo_label: Some(s.pseudo_label),
            confidence: s.confidence,
            entropy: s.entropy,
            decision: decisions[*i].clone().unwrap_or(MiningDecision::Unconfident),
        });
    }

    Ok((survivors, audit))
}
