//! Confusion-matrix accounting and accuracy metrics.
//!
//! Scoring runs over labeled truth pixels only (truth BACKGROUND is
//! ignored). A prediction of BACKGROUND under labeled truth is real error
//! mass, so each row carries a reserved extra column for it: those pixels
//! inflate the row total (the denominator) without crediting any class.

use crate::raster::{LabelMask, BACKGROUND};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("truth mask {tw}x{th} does not match prediction {pw}x{ph}")]
    DimensionMismatch { tw: usize, th: usize, pw: usize, ph: usize },
    #[error("{which} label {label} is out of range for {classes} classes")]
    LabelOutOfRange { which: &'static str, label: u16, classes: usize },
    #[error("confusion matrix has no labeled pixels")]
    EmptyMatrix,
    #[error("class {class} is out of range for {classes} classes")]
    ClassOutOfRange { class: u16, classes: usize },
    #[error("malformed metric report line: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// K x (K+1) tally: entry (a, b) counts pixels of true class `a` predicted
/// as class `b`; the extra column counts predictions of BACKGROUND.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn empty(classes: usize) -> Self {
        ConfusionMatrix { classes, counts: vec![0; classes * (classes + 1)] }
    }

    /// Build from explicit rows, each of length K (no rejected pixels) or
    /// K+1 (last entry = predicted-background count).
    pub fn from_counts(rows: Vec<Vec<u64>>) -> Self {
        let classes = rows.len();
        let mut cm = ConfusionMatrix::empty(classes);
        for (a, row) in rows.iter().enumerate() {
            assert!(
                row.len() == classes || row.len() == classes + 1,
                "row {a} must have {classes} or {} entries",
                classes + 1
            );
            for (b, &n) in row.iter().enumerate() {
                cm.counts[a * (classes + 1) + b] = n;
            }
        }
        cm
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Pixels of true class `a` predicted as class `b`.
    pub fn count(&self, a: usize, b: usize) -> u64 {
        assert!(a < self.classes && b < self.classes);
        self.counts[a * (self.classes + 1) + b]
    }

    /// Pixels of true class `a` predicted as BACKGROUND.
    pub fn rejected(&self, a: usize) -> u64 {
        assert!(a < self.classes);
        self.counts[a * (self.classes + 1) + self.classes]
    }

    /// Row total t_a: all labeled pixels of true class `a`, including the
    /// rejected column.
    pub fn row_total(&self, a: usize) -> u64 {
        (0..=self.classes).map(|b| self.counts[a * (self.classes + 1) + b]).sum()
    }

    /// Column total t_b over the K class columns.
    pub fn col_total(&self, b: usize) -> u64 {
        (0..self.classes).map(|a| self.count(a, b)).sum()
    }

    /// All labeled pixels.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|a| self.count(a, a)).sum()
    }

    /// Associative merge for tile-parallel tallying.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.classes, other.classes);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Tally predictions against labeled truth. Truth BACKGROUND pixels are
/// skipped; any other label must lie below `classes`.
pub fn confusion(
    truth: &LabelMask,
    pred: &LabelMask,
    classes: usize,
) -> Result<ConfusionMatrix, MetricsError> {
    if truth.width() != pred.width() || truth.height() != pred.height() {
        return Err(MetricsError::DimensionMismatch {
            tw: truth.width(),
            th: truth.height(),
            pw: pred.width(),
            ph: pred.height(),
        });
    }
    let mut cm = ConfusionMatrix::empty(classes);
    for (&t, &p) in truth.labels().iter().zip(pred.labels()) {
        if t == BACKGROUND {
            continue;
        }
        if (t as usize) >= classes {
            return Err(MetricsError::LabelOutOfRange { which: "truth", label: t, classes });
        }
        let column = if p == BACKGROUND {
            classes
        } else if (p as usize) >= classes {
            return Err(MetricsError::LabelOutOfRange { which: "prediction", label: p, classes });
        } else {
            p as usize
        };
        cm.counts[t as usize * (classes + 1) + column] += 1;
    }
    Ok(cm)
}

/// Fraction of labeled pixels predicted correctly: Σ_a P_aa / Σ_a t_a.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// Chance-corrected agreement with its degeneracy marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa {
    pub value: f64,
    /// True when chance agreement P_c = 1 (all mass in a single cell); the
    /// value is then defined as 0.
    pub degenerate: bool,
}

/// Cohen's kappa: (P_o - P_c) / (1 - P_c) with P_o the overall accuracy
/// and P_c = Σ_k t_k · t'_k / T² the chance agreement from the marginals
/// (row totals include rejected pixels; column totals cover class columns).
pub fn kappa(cm: &ConfusionMatrix) -> Result<Kappa, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let t = total as f64;
    let p_o = cm.trace() as f64 / t;
    let p_c = (0..cm.classes())
        .map(|k| cm.row_total(k) as f64 * cm.col_total(k) as f64)
        .sum::<f64>()
        / (t * t);
    if p_c >= 1.0 {
        return Ok(Kappa { value: 0.0, degenerate: true });
    }
    Ok(Kappa { value: (p_o - p_c) / (1.0 - p_c), degenerate: false })
}

/// Fraction of class-`b` predictions that are correct: P_bb / t_b.
/// `None` when nothing was predicted as `b` (undefined, distinct from 0).
pub fn users_accuracy(cm: &ConfusionMatrix, b: u16) -> Result<Option<f64>, MetricsError> {
    if (b as usize) >= cm.classes() {
        return Err(MetricsError::ClassOutOfRange { class: b, classes: cm.classes() });
    }
    let col = cm.col_total(b as usize);
    if col == 0 {
        return Ok(None);
    }
    Ok(Some(cm.count(b as usize, b as usize) as f64 / col as f64))
}

/// All metrics of one evaluation, ready for plain-text and CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub overall_accuracy: f64,
    pub kappa: Kappa,
    pub users_accuracy: Vec<Option<f64>>,
}

impl MetricReport {
    pub fn from_matrix(cm: &ConfusionMatrix) -> Result<Self, MetricsError> {
        Ok(MetricReport {
            overall_accuracy: overall_accuracy(cm)?,
            kappa: kappa(cm)?,
            users_accuracy: (0..cm.classes() as u16)
                .map(|b| users_accuracy(cm, b))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Human-readable summary, optionally with the confusion matrix.
    pub fn to_text(&self, cm: Option<&ConfusionMatrix>) -> String {
        let mut out = String::new();
        if let Some(cm) = cm {
            out.push_str("confusion matrix (rows = truth, last column = predicted background)\n");
            for a in 0..cm.classes() {
                out.push_str(&format!("  true {a:>2}:"));
                for b in 0..cm.classes() {
                    out.push_str(&format!(" {:>8}", cm.count(a, b)));
                }
                out.push_str(&format!(" | {:>8}\n", cm.rejected(a)));
            }
        }
        out.push_str(&format!("overall accuracy: {:.4}\n", self.overall_accuracy));
        if self.kappa.degenerate {
            out.push_str("kappa: 0.0000 (degenerate: all mass in one cell)\n");
        } else {
            out.push_str(&format!("kappa: {:.4}\n", self.kappa.value));
        }
        for (class, ua) in self.users_accuracy.iter().enumerate() {
            match ua {
                Some(v) => out.push_str(&format!("user's accuracy class {class}: {v:.4}\n")),
                None => out.push_str(&format!("user's accuracy class {class}: n/a\n")),
            }
        }
        out
    }

    /// Machine-readable `metric,class,value` table. Floats print in
    /// shortest-roundtrip form, so parsing back is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,class,value\n");
        out.push_str(&format!("overall_accuracy,,{}\n", self.overall_accuracy));
        out.push_str(&format!("kappa,,{}\n", self.kappa.value));
        out.push_str(&format!("kappa_degenerate,,{}\n", self.kappa.degenerate));
        for (class, ua) in self.users_accuracy.iter().enumerate() {
            match ua {
                Some(v) => out.push_str(&format!("users_accuracy,{class},{v}\n")),
                None => out.push_str(&format!("users_accuracy,{class},n/a\n")),
            }
        }
        out
    }

    /// Inverse of [`Self::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, MetricsError> {
        let mut oa = None;
        let mut kappa_value = None;
        let mut degenerate = None;
        let mut users: Vec<(usize, Option<f64>)> = Vec::new();
        let bad = |line: &str| MetricsError::MalformedReport(line.to_string());

        for line in text.lines().skip(1) {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.splitn(3, ',');
            let (metric, class, value) = (
                fields.next().ok_or_else(|| bad(line))?,
                fields.next().ok_or_else(|| bad(line))?,
                fields.next().ok_or_else(|| bad(line))?,
            );
            match metric {
                "overall_accuracy" => oa = Some(value.parse().map_err(|_| bad(line))?),
                "kappa" => kappa_value = Some(value.parse().map_err(|_| bad(line))?),
                "kappa_degenerate" => degenerate = Some(value.parse().map_err(|_| bad(line))?),
                "users_accuracy" => {
                    let class: usize = class.parse().map_err(|_| bad(line))?;
                    let ua = if value == "n/a" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| bad(line))?)
                    };
                    users.push((class, ua));
                }
                _ => return Err(bad(line)),
            }
        }
        users.sort_by_key(|(c, _)| *c);
        Ok(MetricReport {
            overall_accuracy: oa.ok_or_else(|| bad("missing overall_accuracy"))?,
            kappa: Kappa {
                value: kappa_value.ok_or_else(|| bad("missing kappa"))?,
                degenerate: degenerate.ok_or_else(|| bad("missing kappa_degenerate"))?,
            },
            users_accuracy: users.into_iter().map(|(_, ua)| ua).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn mask(w: usize, h: usize, classes: usize, labels: Vec<u16>) -> LabelMask {
        LabelMask::new(w, h, classes, labels).unwrap()
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let truth = mask(3, 2, 3, vec![0, 1, 2, 0, 1, BACKGROUND]);
        let cm = confusion(&truth, &truth, 3).unwrap();
        assert_eq!(cm.trace(), 5);
        assert_eq!(cm.total(), 5);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(cm.count(a, b), 0);
                }
            }
            assert_eq!(cm.rejected(a), 0);
        }
        assert_eq!(overall_accuracy(&cm).unwrap(), 1.0);
        let k = kappa(&cm).unwrap();
        assert!(!k.degenerate);
        assert_relative_eq!(k.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn all_background_truth_gives_empty_matrix() {
        let truth = mask(2, 2, 2, vec![BACKGROUND; 4]);
        let pred = mask(2, 2, 2, vec![0, 1, 0, 1]);
        let cm = confusion(&truth, &pred, 2).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(matches!(overall_accuracy(&cm), Err(MetricsError::EmptyMatrix)));
        assert!(matches!(kappa(&cm), Err(MetricsError::EmptyMatrix)));
    }

    #[test]
    fn tally_matches_per_pixel_oracle() {
        let truth_labels = vec![0, 0, 1, 2, 1, BACKGROUND, 2, 1, 0];
        let pred_labels = vec![0, 1, 1, 2, BACKGROUND, 0, 0, 1, 0];
        let truth = mask(3, 3, 3, truth_labels.clone());
        let pred = mask(3, 3, 3, pred_labels.clone());
        let cm = confusion(&truth, &pred, 3).unwrap();

        // Brute-force per-pixel tally.
        let mut expected = vec![[0u64; 4]; 3];
        for (&t, &p) in truth_labels.iter().zip(&pred_labels) {
            if t == BACKGROUND {
                continue;
            }
            let col = if p == BACKGROUND { 3 } else { p as usize };
            expected[t as usize][col] += 1;
        }
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(cm.count(a, b), expected[a][b], "cell ({a},{b})");
            }
            assert_eq!(cm.rejected(a), expected[a][3], "rejected row {a}");
        }
    }

    #[test]
    fn hand_fixture_two_class() {
        let cm = ConfusionMatrix::from_counts(vec![vec![30, 20], vec![20, 30]]);
        assert_relative_eq!(overall_accuracy(&cm).unwrap(), 0.6, epsilon = 1e-12);
        let k = kappa(&cm).unwrap();
        assert!(!k.degenerate);
        assert_relative_eq!(k.value, 0.2, epsilon = 1e-12);
        assert_relative_eq!(users_accuracy(&cm, 0).unwrap().unwrap(), 0.6, epsilon = 1e-12);
        assert_relative_eq!(users_accuracy(&cm, 1).unwrap().unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn chance_level_prediction_scores_zero_kappa() {
        let cm = ConfusionMatrix::from_counts(vec![vec![25, 25], vec![25, 25]]);
        assert_relative_eq!(kappa(&cm).unwrap().value, 0.0, epsilon = 1e-12);
        assert_relative_eq!(overall_accuracy(&cm).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_diagonal_scores_zero_accuracy() {
        let cm = ConfusionMatrix::from_counts(vec![vec![0, 40], vec![60, 0]]);
        assert_eq!(overall_accuracy(&cm).unwrap(), 0.0);
    }

    #[test]
    fn single_cell_matrix_is_degenerate() {
        let cm = ConfusionMatrix::from_counts(vec![vec![17, 0], vec![0, 0]]);
        let k = kappa(&cm).unwrap();
        assert!(k.degenerate);
        assert_eq!(k.value, 0.0);
    }

    #[test]
    fn empty_column_gives_undefined_users_accuracy() {
        let cm = ConfusionMatrix::from_counts(vec![vec![10, 0], vec![5, 0]]);
        assert_eq!(users_accuracy(&cm, 1).unwrap(), None);
        assert_relative_eq!(users_accuracy(&cm, 0).unwrap().unwrap(), 10.0 / 15.0, epsilon = 1e-12);
        assert!(matches!(
            users_accuracy(&cm, 7),
            Err(MetricsError::ClassOutOfRange { class: 7, classes: 2 })
        ));
    }

    #[test]
    fn rejected_predictions_count_as_error_mass() {
        let truth = mask(4, 1, 2, vec![0, 0, 1, 1]);
        let pred = mask(4, 1, 2, vec![0, BACKGROUND, 1, 1]);
        let cm = confusion(&truth, &pred, 2).unwrap();
        assert_eq!(cm.rejected(0), 1);
        assert_eq!(cm.row_total(0), 2);
        assert_relative_eq!(overall_accuracy(&cm).unwrap(), 0.75, epsilon = 1e-12);
        // P_c = (2*1 + 2*2)/16, kappa = (0.75 - 0.375) / 0.625.
        assert_relative_eq!(kappa(&cm).unwrap().value, 0.6, epsilon = 1e-12);
        assert_eq!(users_accuracy(&cm, 0).unwrap(), Some(1.0));
    }

    #[test]
    fn kappa_identity_and_ranges_hold_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let classes = rng.gen_range(2..5);
            let rows: Vec<Vec<u64>> = (0..classes)
                .map(|_| (0..classes + 1).map(|_| rng.gen_range(0..30)).collect())
                .collect();
            let cm = ConfusionMatrix::from_counts(rows);
            if cm.total() == 0 {
                continue;
            }
            let oa = overall_accuracy(&cm).unwrap();
            let k = kappa(&cm).unwrap();
            assert!((0.0..=1.0).contains(&oa));
            if !k.degenerate {
                assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k.value), "kappa {}", k.value);
                // The defining identity, recomputed independently.
                let t = cm.total() as f64;
                let p_c = (0..cm.classes())
                    .map(|c| cm.row_total(c) as f64 * cm.col_total(c) as f64)
                    .sum::<f64>()
                    / (t * t);
                assert_relative_eq!(k.value, (oa - p_c) / (1.0 - p_c), epsilon = 1e-12);
            }
            for b in 0..classes as u16 {
                if let Some(ua) = users_accuracy(&cm, b).unwrap() {
                    assert!((0.0..=1.0).contains(&ua));
                }
            }
        }
    }

    #[test]
    fn self_confusion_is_diagonal_for_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let labels: Vec<u16> = (0..48)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        BACKGROUND
                    } else {
                        rng.gen_range(0..4)
                    }
                })
                .collect();
            let m = mask(8, 6, 4, labels);
            let cm = confusion(&m, &m, 4).unwrap();
            assert_eq!(cm.trace(), cm.total());
        }
    }

    #[test]
    fn out_of_range_labels_are_rejected() {
        let truth = mask(2, 1, 5, vec![4, 0]);
        let pred = mask(2, 1, 5, vec![0, 0]);
        assert!(matches!(
            confusion(&truth, &pred, 3),
            Err(MetricsError::LabelOutOfRange { which: "truth", label: 4, .. })
        ));
        let truth = mask(2, 1, 5, vec![0, 0]);
        let pred = mask(2, 1, 5, vec![0, 4]);
        assert!(matches!(
            confusion(&truth, &pred, 3),
            Err(MetricsError::LabelOutOfRange { which: "prediction", label: 4, .. })
        ));
        let a = mask(2, 1, 2, vec![0, 1]);
        let b = mask(1, 2, 2, vec![0, 1]);
        assert!(matches!(confusion(&a, &b, 2), Err(MetricsError::DimensionMismatch { .. })));
    }

    #[test]
    fn merge_is_associative_tallying() {
        let t1 = mask(2, 1, 2, vec![0, 1]);
        let p1 = mask(2, 1, 2, vec![0, 0]);
        let t2 = mask(2, 1, 2, vec![1, 1]);
        let p2 = mask(2, 1, 2, vec![1, BACKGROUND]);
        let mut left = confusion(&t1, &p1, 2).unwrap();
        left.merge(&confusion(&t2, &p2, 2).unwrap());

        // Tally of the concatenated masks equals the merged tallies.
        let t_all = mask(4, 1, 2, vec![0, 1, 1, 1]);
        let p_all = mask(4, 1, 2, vec![0, 0, 1, BACKGROUND]);
        assert_eq!(left, confusion(&t_all, &p_all, 2).unwrap());
    }

    #[test]
    fn report_round_trips_through_csv() {
        let cm = ConfusionMatrix::from_counts(vec![
            vec![31, 2, 0, 7],
            vec![4, 55, 0, 1],
            vec![0, 0, 0, 0],
        ]);
        let report = MetricReport::from_matrix(&cm).unwrap();
        assert_eq!(report.users_accuracy[2], None); // empty column -> n/a
        let csv = report.to_csv();
        let back = MetricReport::from_csv(&csv).unwrap();
        assert_eq!(back, report);
        assert!(csv.contains("users_accuracy,2,n/a"));

        let text = report.to_text(Some(&cm));
        assert!(text.contains("overall accuracy"));
        assert!(text.contains("n/a"));
        assert!(text.contains("kappa"));
    }
}
