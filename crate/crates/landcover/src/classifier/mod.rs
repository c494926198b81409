//! Patch classifier: handcrafted features into a single-hidden-layer
//! softmax network trained with minibatch SGD.
//!
//! The network is deliberately small — one tanh hidden layer — so that the
//! post-nonlinearity hidden activations double as a compact patch embedding
//! for nearest-neighbour retrieval.

pub(crate) mod features;

pub use features::{extract_features, PatchFeatures, INTENSITY_BINS, ORIENTATION_BINS};

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::patching::{LabeledSample, Patch};

/// Default hidden-layer width.
pub const DEFAULT_HIDDEN: usize = 64;

/// Relative loss improvement below which an epoch counts toward a plateau.
pub const PLATEAU_REL_TOL: f64 = 1e-3;

/// Hyperparameters of one SGD training run. A copy of the config used to
/// produce a model travels with it through persistence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub initial_lr: f64,
    /// Learning-rate divisor applied when the loss plateaus.
    pub lr_drop_factor: f64,
    /// Consecutive low-improvement epochs that trigger a learning-rate drop.
    pub plateau_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 15,
            momentum: 0.9,
            initial_lr: 0.1,
            lr_drop_factor: 10.0,
            plateau_patience: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("class {0} has no training samples")]
    MissingClass(u16),
    #[error("sample feature length {found} does not match expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: u16, classes: usize },
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid hyperparameter: {0}")]
    BadConfig(&'static str),
}

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("malformed model header")]
    MalformedHeader,
    #[error("model payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Class-probability vector: finite, non-negative, sums to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Option<Self> {
        let ok = !probs.is_empty()
            && probs.iter().all(|&p| p.is_finite() && p >= 0.0)
            && (probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        ok.then_some(ProbVector(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    /// Highest probability and its class; ties resolve to the lowest class id.
    pub fn top(&self) -> (u16, f64) {
        let mut best = 0usize;
        for (k, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = k;
            }
        }
        (best as u16, self.0[best])
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }
}

/// Hidden-layer activation vector used as a patch embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn squared_distance(&self, other: &Embedding) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Gradients of the mean cross-entropy over a batch, matching the parameter
/// layout of [`ClassifierModel`].
#[derive(Debug, Clone)]
pub struct ModelGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// One-hidden-layer softmax classifier over patch feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    input_dim: usize,
    hidden: usize,
    classes: usize,
    /// Hidden weights, row-major `hidden x input_dim`.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// Output weights, row-major `hidden x classes`.
    w2: Vec<f64>,
    b2: Vec<f64>,
    train_cfg: TrainConfig,
}

impl ClassifierModel {
    /// Fresh model with Gaussian(0, 0.1) weights drawn from `seed`.
    pub fn random_init(input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.1).expect("valid std");
        let mut draw = |n: usize| (0..n).map(|_| normal.sample(&mut rng)).collect::<Vec<f64>>();
        ClassifierModel {
            input_dim,
            hidden,
            classes,
            w1: draw(hidden * input_dim),
            b1: draw(hidden),
            w2: draw(hidden * classes),
            b2: draw(classes),
            train_cfg: TrainConfig { seed, ..TrainConfig::default() },
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    /// Hyperparameters of the run that produced this model.
    pub fn train_config(&self) -> &TrainConfig {
        &self.train_cfg
    }

    /// Forward pass over a raw feature vector: hidden activations and
    /// class probabilities.
    pub fn forward(&self, x: &[f64]) -> (Embedding, ProbVector) {
        assert_eq!(x.len(), self.input_dim, "feature length mismatch");
        let mut hidden = vec![0.0f64; self.hidden];
        for (h, act) in hidden.iter_mut().enumerate() {
            let row = &self.w1[h * self.input_dim..(h + 1) * self.input_dim];
            let pre: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[h];
            *act = pre.tanh();
        }
        let mut logits = self.b2.clone();
        for (h, &a) in hidden.iter().enumerate() {
            let row = &self.w2[h * self.classes..(h + 1) * self.classes];
            for (k, &w) in row.iter().enumerate() {
                logits[k] += w * a;
            }
        }
        (Embedding(hidden), ProbVector(softmax(&logits)))
    }

    /// Class probabilities for one patch.
    pub fn predict_proba(&self, patch: &Patch) -> ProbVector {
        self.forward(extract_features(patch).values()).1
    }

    /// Hidden-layer embedding for one patch.
    pub fn embed(&self, patch: &Patch) -> Embedding {
        self.forward(extract_features(patch).values()).0
    }

    /// Mean cross-entropy of the labels under the model.
    pub fn mean_loss(&self, xs: &[Vec<f64>], ys: &[u16]) -> f64 {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len() as f64;
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| {
                let p = self.forward(x).1;
                -p.probs()[y as usize].max(f64::MIN_POSITIVE).ln()
            })
            .sum::<f64>()
            / n
    }

    /// Analytic gradients of [`Self::mean_loss`] over the batch.
    pub fn gradients(&self, xs: &[Vec<f64>], ys: &[u16]) -> ModelGradients {
        assert_eq!(xs.len(), ys.len());
        assert!(!xs.is_empty());
        let mut g = ModelGradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        };
        let inv_n = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let (hidden, probs) = self.forward(x);
            let a = hidden.values();
            // dL/dlogit_k = p_k - [k == y]
            let mut dlogits = probs.probs().to_vec();
            dlogits[y as usize] -= 1.0;
            for (k, &dl) in dlogits.iter().enumerate() {
                g.b2[k] += inv_n * dl;
                for (h, &ah) in a.iter().enumerate() {
                    g.w2[h * self.classes + k] += inv_n * ah * dl;
                }
            }
            for (h, &ah) in a.iter().enumerate() {
                let da: f64 = dlogits
                    .iter()
                    .enumerate()
                    .map(|(k, &dl)| self.w2[h * self.classes + k] * dl)
                    .sum();
                let dpre = (1.0 - ah * ah) * da;
                g.b1[h] += inv_n * dpre;
                for (i, &xi) in x.iter().enumerate() {
                    g.w1[h * self.input_dim + i] += inv_n * xi * dpre;
                }
            }
        }
        g
    }

    fn apply_update(&mut self, velocity: &mut ModelGradients, g: &ModelGradients, lr: f64, mu: f64) {
        let step = |p: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..p.len() {
                v[i] = mu * v[i] + g[i];
                p[i] -= lr * v[i];
            }
        };
        step(&mut self.w1, &mut velocity.w1, &g.w1);
        step(&mut self.b1, &mut velocity.b1, &g.b1);
        step(&mut self.w2, &mut velocity.w2, &g.w2);
        step(&mut self.b2, &mut velocity.b2, &g.b2);
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.iter().map(|&e| e / sum).collect()
}

fn to_feature_batch(
    samples: &[LabeledSample],
    expected_dim: usize,
    classes: usize,
) -> Result<(Vec<Vec<f64>>, Vec<u16>), TrainError> {
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for s in samples {
        let f = extract_features(&s.patch);
        if f.len() != expected_dim {
            return Err(TrainError::DimensionMismatch { expected: expected_dim, found: f.len() });
        }
        if (s.label as usize) >= classes {
            return Err(TrainError::LabelOutOfRange { label: s.label, classes });
        }
        xs.push(f.values().to_vec());
        ys.push(s.label);
    }
    Ok((xs, ys))
}

fn check_config(cfg: &TrainConfig) -> Result<(), TrainError> {
    if cfg.batch_size == 0 {
        return Err(TrainError::BadConfig("batch_size must be positive"));
    }
    if !(cfg.initial_lr.is_finite() && cfg.initial_lr > 0.0) {
        return Err(TrainError::BadConfig("initial_lr must be positive"));
    }
    if !(cfg.lr_drop_factor.is_finite() && cfg.lr_drop_factor > 1.0) {
        return Err(TrainError::BadConfig("lr_drop_factor must exceed 1"));
    }
    if !(0.0..1.0).contains(&cfg.momentum) {
        return Err(TrainError::BadConfig("momentum must lie in [0, 1)"));
    }
    Ok(())
}

/// Train a classifier with the default hidden width. The class count is
/// `max label + 1`; every class must appear at least once.
pub fn train(samples: &[LabeledSample], cfg: &TrainConfig) -> Result<ClassifierModel, TrainError> {
    train_with_hidden(samples, DEFAULT_HIDDEN, cfg)
}

/// Train a classifier with an explicit hidden width.
pub fn train_with_hidden(
    samples: &[LabeledSample],
    hidden: usize,
    cfg: &TrainConfig,
) -> Result<ClassifierModel, TrainError> {
    check_config(cfg)?;
    if samples.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let classes = samples.iter().map(|s| s.label as usize + 1).max().unwrap();
    if classes < 2 {
        return Err(TrainError::TooFewClasses(classes));
    }
    let mut seen = vec![false; classes];
    for s in samples {
        seen[s.label as usize] = true;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(TrainError::MissingClass(missing as u16));
    }

    let input_dim = extract_features(&samples[0].patch).len();
    let model = ClassifierModel::random_init(input_dim, hidden, classes, cfg.seed);
    run_sgd(model, samples, cfg)
}

/// Continue training an existing model on new samples. Weights start from
/// the current model; the optimizer state starts fresh.
pub fn fine_tune(
    model: &ClassifierModel,
    samples: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<ClassifierModel, TrainError> {
    check_config(cfg)?;
    if samples.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    run_sgd(model.clone(), samples, cfg)
}

fn run_sgd(
    mut model: ClassifierModel,
    samples: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<ClassifierModel, TrainError> {
    let (xs, ys) = to_feature_batch(samples, model.input_dim, model.classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5347_445f_7374_6570);
    let mut velocity = ModelGradients {
        w1: vec![0.0; model.w1.len()],
        b1: vec![0.0; model.b1.len()],
        w2: vec![0.0; model.w2.len()],
        b2: vec![0.0; model.b2.len()],
    };
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut lr = cfg.initial_lr;
    let mut best = f64::INFINITY;
    let mut stalled = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let by: Vec<u16> = chunk.iter().map(|&i| ys[i]).collect();
            let g = model.gradients(&bx, &by);
            model.apply_update(&mut velocity, &g, lr, cfg.momentum);
        }
        let loss = model.mean_loss(&xs, &ys);
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        // Plateau rule: an epoch whose loss fails to beat the best seen by
        // more than PLATEAU_REL_TOL (relative) counts toward the patience
        // budget; exhausting it divides the learning rate.
        if best.is_finite() && (best - loss) / best > PLATEAU_REL_TOL {
            best = loss;
            stalled = 0;
        } else {
            best = best.min(loss);
            stalled += 1;
            if stalled >= cfg.plateau_patience {
                lr /= cfg.lr_drop_factor;
                stalled = 0;
            }
        }
    }
    model.train_cfg = cfg.clone();
    Ok(model)
}

/// Serialize a model to the binary CLF1 layout: an ASCII dimension header,
/// an ASCII line recording the training hyperparameters, then all
/// parameters as little-endian f64 in w1, b1, w2, b2 order.
pub fn save_model(model: &ClassifierModel, path: &Path) -> Result<(), ModelIoError> {
    let mut header = String::new();
    writeln!(header, "CLF1 {} {} {}", model.input_dim, model.hidden, model.classes).unwrap();
    let c = &model.train_cfg;
    writeln!(
        header,
        "TRAIN {} {} {} {} {} {} {}",
        c.batch_size, c.epochs, c.momentum, c.initial_lr, c.lr_drop_factor, c.plateau_patience, c.seed
    )
    .unwrap();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(header.as_bytes())?;
    for part in [&model.w1, &model.b1, &model.w2, &model.b2] {
        for &v in part.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`save_model`].
pub fn load_model(path: &Path) -> Result<ClassifierModel, ModelIoError> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;

    let mut lines = data.splitn(3, |&b| b == b'\n');
    let dims = lines.next().ok_or(ModelIoError::MalformedHeader)?;
    let train = lines.next().ok_or(ModelIoError::MalformedHeader)?;
    let payload = lines.next().ok_or(ModelIoError::MalformedHeader)?;

    let dims = std::str::from_utf8(dims).map_err(|_| ModelIoError::MalformedHeader)?;
    let mut it = dims.split_ascii_whitespace();
    if it.next() != Some("CLF1") {
        return Err(ModelIoError::MalformedHeader);
    }
    let mut dim = || -> Result<usize, ModelIoError> {
        it.next()
            .and_then(|t| t.parse().ok())
            .filter(|&v: &usize| v > 0)
            .ok_or(ModelIoError::MalformedHeader)
    };
    let (input_dim, hidden, classes) = (dim()?, dim()?, dim()?);

    let train = std::str::from_utf8(train).map_err(|_| ModelIoError::MalformedHeader)?;
    let mut it = train.split_ascii_whitespace();
    if it.next() != Some("TRAIN") {
        return Err(ModelIoError::MalformedHeader);
    }
    fn field<T: std::str::FromStr>(
        it: &mut std::str::SplitAsciiWhitespace<'_>,
    ) -> Result<T, ModelIoError> {
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or(ModelIoError::MalformedHeader)
    }
    let train_cfg = TrainConfig {
        batch_size: field(&mut it)?,
        epochs: field(&mut it)?,
        momentum: field(&mut it)?,
        initial_lr: field(&mut it)?,
        lr_drop_factor: field(&mut it)?,
        plateau_patience: field(&mut it)?,
        seed: field(&mut it)?,
    };

    let expected = (input_dim * hidden + hidden + hidden * classes + classes) * 8;
    if payload.len() != expected {
        return Err(ModelIoError::TruncatedPayload { expected, found: payload.len() });
    }
    let mut floats = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |n: usize| -> Vec<f64> { floats.by_ref().take(n).collect() };
    Ok(ClassifierModel {
        input_dim,
        hidden,
        classes,
        w1: take(hidden * input_dim),
        b1: take(hidden),
        w2: take(hidden * classes),
        b2: take(classes),
        train_cfg,
    })
}
