//! End-to-end configuration: one struct, a `key = value` file format, and
//! the handful of flag overrides the CLI exposes for sensitivity sweeps.

use std::path::{Path, PathBuf};

use crate::classifier::TrainConfig;
use crate::patching::ScaleConfig;
use crate::raster::ColorLegend;
use crate::segmentation::SegConfig;
use crate::transfer::TransferConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line} is not `key = value`: {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for config key {key}")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Everything the experiment runner needs, in one place. Field groups map
/// onto the pipeline stages; the synthetic-scene knobs drive `synth` and
/// `run-all`.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Global seed; every stage derives its own seed from it.
    pub seed: u64,
    /// Number of land-cover classes K.
    pub classes: u16,
    /// Window sizes for multi-scale sampling; the smallest is the grid cell.
    pub scales: Vec<usize>,
    /// All patches are resized to this square size before featurization.
    pub canonical_size: usize,
    /// Hidden width of the classifier.
    pub hidden: usize,
    /// Class display names; colors come from the generated legend.
    pub class_names: Option<Vec<String>>,
    /// Where artifacts are written.
    pub out_dir: PathBuf,

    pub train: TrainConfig,
    /// Epochs for the fine-tuning pass (optimizer restarts fresh).
    pub finetune_epochs: usize,
    /// Learning rate for fine-tuning; lower than pre-training so the
    /// pseudo-labeled samples adjust rather than overwrite the model.
    pub finetune_lr: f64,
    pub transfer: TransferConfig,
    pub seg: SegConfig,

    /// Training windows harvested per class per scale from each source.
    pub samples_per_class: usize,
    /// Fraction of a window's pixels the dominant class must exceed.
    pub purity: f64,

    // Synthetic scene generation.
    pub scene_width: usize,
    pub scene_height: usize,
    pub bands: usize,
    /// Voronoi site count per scene.
    pub sites: usize,
    /// Width of the per-scene illumination ladder source scenes span; the
    /// target scene sits at the reference illumination 0.
    pub illum_span: f64,
    pub noise_std: f64,
    pub texture_amp: f64,
    /// Approximate fraction of each class's area carrying stripe texture.
    pub texture_cover: f64,
    /// Spectral shift applied to the synthetic target scene.
    pub shift_gain: f64,
    pub shift_offset: f64,
    /// Number of labeled source scenes `run-all` generates.
    pub source_scenes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            classes: 4,
            scales: vec![8, 16, 32],
            canonical_size: 8,
            hidden: 64,
            class_names: None,
            out_dir: PathBuf::from("out"),
            train: TrainConfig::default(),
            finetune_epochs: 8,
            finetune_lr: 0.02,
            transfer: TransferConfig::default(),
            // Segments sized for ~26-pixel land-cover parcels at 256x256;
            // the module-level default favors much coarser regions.
            seg: SegConfig { k_scale: 60.0, ..SegConfig::default() },
            samples_per_class: 40,
            purity: 0.9,
            scene_width: 256,
            scene_height: 256,
            bands: 3,
            sites: 24,
            illum_span: 50.0,
            noise_std: 8.0,
            texture_amp: 20.0,
            texture_cover: 0.4,
            shift_gain: 1.25,
            shift_offset: 20.0,
            source_scenes: 6,
        }
    }
}

impl PipelineConfig {
    pub fn scale_config(&self) -> Result<ScaleConfig, ConfigError> {
        ScaleConfig::new(self.scales.clone(), self.canonical_size)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn legend(&self) -> Result<ColorLegend, ConfigError> {
        match &self.class_names {
            None => Ok(ColorLegend::generate(self.classes as usize)),
            Some(names) => {
                if names.len() != self.classes as usize {
                    return Err(ConfigError::Invalid(format!(
                        "{} class names for {} classes",
                        names.len(),
                        self.classes
                    )));
                }
                let generated = ColorLegend::generate(self.classes as usize);
                let entries = names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (n.clone(), generated.color(i).unwrap()))
                    .collect();
                ColorLegend::new(entries).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
        }
    }

    /// Cross-field validation; component invariants are delegated to the
    /// component validators.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.classes < 2 {
            return invalid(format!("need at least 2 classes, got {}", self.classes));
        }
        self.scale_config()?;
        self.legend()?;
        self.transfer.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.seg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.hidden == 0 {
            return invalid("hidden width must be positive".into());
        }
        if self.finetune_epochs == 0 {
            return invalid("finetune_epochs must be positive".into());
        }
        if !(self.finetune_lr > 0.0) {
            return invalid("finetune_lr must be positive".into());
        }
        if self.samples_per_class == 0 {
            return invalid("samples_per_class must be positive".into());
        }
        if !(self.purity > 0.5 && self.purity <= 1.0) {
            return invalid("purity must lie in (0.5, 1.0]".into());
        }
        if self.scene_width == 0 || self.scene_height == 0 || self.bands == 0 {
            return invalid("scene dimensions and bands must be positive".into());
        }
        if self.sites < self.classes as usize {
            return invalid(format!(
                "need at least one site per class: {} sites for {} classes",
                self.sites, self.classes
            ));
        }
        if !(self.shift_gain > 0.0) {
            return invalid("shift_gain must be positive".into());
        }
        if self.noise_std < 0.0 || self.texture_amp < 0.0 || self.illum_span < 0.0 {
            return invalid("noise_std, texture_amp and illum_span must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.texture_cover) {
            return invalid(format!("texture_cover {} outside [0, 1]", self.texture_cover));
        }
        if self.source_scenes == 0 {
            return invalid("source_scenes must be positive".into());
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

/// Parse `key = value` lines into a config, starting from the defaults.
/// `#` starts a comment; blank lines are ignored; keys may appear once or
/// many times (last wins). The result is validated.
pub fn parse_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = PipelineConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::MalformedLine {
            line: idx + 1,
            text: raw.to_string(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "seed" => cfg.seed = parse_num(key, value)?,
            "classes" => cfg.classes = parse_num(key, value)?,
            "scales" => cfg.scales = parse_list(key, value)?,
            "canonical_size" => cfg.canonical_size = parse_num(key, value)?,
            "hidden" => cfg.hidden = parse_num(key, value)?,
            "class_names" => {
                cfg.class_names =
                    Some(value.split(',').map(|n| n.trim().to_string()).collect());
            }
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "batch_size" => cfg.train.batch_size = parse_num(key, value)?,
            "epochs" => cfg.train.epochs = parse_num(key, value)?,
            "momentum" => cfg.train.momentum = parse_num(key, value)?,
            "learning_rate" => cfg.train.initial_lr = parse_num(key, value)?,
            "lr_drop_factor" => cfg.train.lr_drop_factor = parse_num(key, value)?,
            "plateau_patience" => cfg.train.plateau_patience = parse_num(key, value)?,
            "finetune_epochs" => cfg.finetune_epochs = parse_num(key, value)?,
            "finetune_lr" => cfg.finetune_lr = parse_num(key, value)?,
            "sigma" => cfg.transfer.confidence_threshold = parse_num(key, value)?,
            "delta" => cfg.transfer.unanimity_depth = parse_num(key, value)?,
            "mu" => cfg.transfer.per_class_cap = parse_num(key, value)?,
            "seg_k" => cfg.seg.k_scale = parse_num(key, value)?,
            "min_region" => cfg.seg.min_region = parse_num(key, value)?,
            "merge_stop" => cfg.seg.merge_stop = parse_num(key, value)?,
            "w_color" => cfg.seg.w_color = parse_num(key, value)?,
            "w_texture" => cfg.seg.w_texture = parse_num(key, value)?,
            "w_size" => cfg.seg.w_size = parse_num(key, value)?,
            "w_fill" => cfg.seg.w_fill = parse_num(key, value)?,
            "samples_per_class" => cfg.samples_per_class = parse_num(key, value)?,
            "purity" => cfg.purity = parse_num(key, value)?,
            "scene_width" => cfg.scene_width = parse_num(key, value)?,
            "scene_height" => cfg.scene_height = parse_num(key, value)?,
            "bands" => cfg.bands = parse_num(key, value)?,
            "sites" => cfg.sites = parse_num(key, value)?,
            "illum_span" => cfg.illum_span = parse_num(key, value)?,
            "noise_std" => cfg.noise_std = parse_num(key, value)?,
            "texture_amp" => cfg.texture_amp = parse_num(key, value)?,
            "texture_cover" => cfg.texture_cover = parse_num(key, value)?,
            "shift_gain" => cfg.shift_gain = parse_num(key, value)?,
            "shift_offset" => cfg.shift_offset = parse_num(key, value)?,
            "source_scenes" => cfg.source_scenes = parse_num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// The sensitivity-sweep flags the CLI can lay over any config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub sigma: Option<f64>,
    pub delta: Option<usize>,
    pub mu: Option<usize>,
    pub scales: Option<Vec<usize>>,
    pub seg_k: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    /// Apply the set flags on top of `cfg` and re-validate.
    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(sigma) = self.sigma {
            cfg.transfer.confidence_threshold = sigma;
        }
        if let Some(delta) = self.delta {
            cfg.transfer.unanimity_depth = delta;
        }
        if let Some(mu) = self.mu {
            cfg.transfer.per_class_cap = mu;
        }
        if let Some(scales) = &self.scales {
            cfg.scales = scales.clone();
        }
        if let Some(k) = self.seg_k {
            cfg.seg.k_scale = k;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        cfg.validate()
    }
}
