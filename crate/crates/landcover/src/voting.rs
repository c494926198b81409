//! Object-based refinement: majority voting inside segmentation regions.

use rayon::prelude::*;

use crate::raster::{LabelMask, RasterError, BACKGROUND};
use crate::segmentation::Segmentation;

#[derive(Debug, thiserror::Error)]
pub enum VotingError {
    #[error("classified map {cw}x{ch} does not match segmentation {sw}x{sh}")]
    DimensionMismatch { cw: usize, ch: usize, sw: usize, sh: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Stamp every region with the most frequent non-BACKGROUND label among its
/// pixels in `classified`; ties go to the lowest class id, and regions with
/// only BACKGROUND pixels stay BACKGROUND.
pub fn majority_vote(
    classified: &LabelMask,
    seg: &Segmentation,
) -> Result<LabelMask, VotingError> {
    if classified.width() != seg.width() || classified.height() != seg.height() {
        return Err(VotingError::DimensionMismatch {
            cw: classified.width(),
            ch: classified.height(),
            sw: seg.width(),
            sh: seg.height(),
        });
    }
    let classes = classified.num_classes();

    // Tally labels per region.
    let mut counts = vec![0u64; seg.region_count() * classes];
    for (pixel, &region) in seg.ids().iter().enumerate() {
        let label = classified.labels()[pixel];
        if label != BACKGROUND {
            counts[region as usize * classes + label as usize] += 1;
        }
    }

    // Modal label per region; lowest class wins ties because the scan is in
    // ascending class order with a strict comparison.
    let winners: Vec<u16> = counts
        .par_chunks(classes)
        .map(|tally| {
            let mut best = BACKGROUND;
            let mut best_count = 0u64;
            for (class, &n) in tally.iter().enumerate() {
                if n > best_count {
                    best_count = n;
                    best = class as u16;
                }
            }
            best
        })
        .collect();

    let mut out = LabelMask::filled(seg.width(), seg.height(), classes, BACKGROUND)?;
    for y in 0..seg.height() {
        for x in 0..seg.width() {
            out.set(x, y, winners[seg.id_at(x, y) as usize]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(width: usize, height: usize, classes: usize, labels: Vec<u16>) -> LabelMask {
        LabelMask::new(width, height, classes, labels).unwrap()
    }

    fn seg_from(width: usize, height: usize, ids: Vec<u32>) -> Segmentation {
        Segmentation::new(width, height, ids).unwrap()
    }

    #[test]
    fn strict_majority_wins() {
        // One region with labels {1, 1, 2}: everything becomes 1.
        let classified = mask_from(3, 1, 3, vec![1, 1, 2]);
        let seg = seg_from(3, 1, vec![0, 0, 0]);
        let voted = majority_vote(&classified, &seg).unwrap();
        assert_eq!(voted.labels(), &[1, 1, 1]);
    }

    #[test]
    fn constant_map_is_a_fixed_point() {
        let classified = mask_from(4, 4, 3, vec![2; 16]);
        let ids: Vec<u32> = (0..16).map(|i| u32::from(i % 4 >= 2)).collect();
        let seg = seg_from(4, 4, ids);
        let voted = majority_vote(&classified, &seg).unwrap();
        assert_eq!(voted.labels(), classified.labels());
    }

    #[test]
    fn ties_resolve_to_lowest_class_and_match_counting_oracle() {
        // Region A (left) holds {0, 0, 1, 1} -> tie -> 0; region B (right)
        // holds {2, 1, 1, 2, 2, 2} -> 2.
        let labels = vec![
            0, 0, 2, 1, 1, //
            1, 1, 2, 2, 2,
        ];
        let ids = vec![
            0, 0, 1, 1, 1, //
            0, 0, 1, 1, 1,
        ];
        let classified = mask_from(5, 2, 3, labels.clone());
        let seg = seg_from(5, 2, ids.clone());
        let voted = majority_vote(&classified, &seg).unwrap();

        // Exhaustive per-region counting oracle.
        for region in 0..seg.region_count() as u32 {
            let mut tally = [0usize; 3];
            for (i, &id) in ids.iter().enumerate() {
                if id == region && labels[i] != BACKGROUND {
                    tally[labels[i] as usize] += 1;
                }
            }
            let expected = (0..3)
                .max_by_key(|&c| (tally[c], std::cmp::Reverse(c)))
                .map(|c| c as u16)
                .unwrap();
            for (i, &id) in ids.iter().enumerate() {
                if id == region {
                    assert_eq!(voted.labels()[i], expected, "pixel {i}");
                }
            }
        }
        assert_eq!(voted.labels()[0], 0); // tie in region A went to class 0
        assert_eq!(voted.labels()[2], 2);
    }

    #[test]
    fn background_is_excluded_from_votes() {
        // Region with {BACKGROUND, BACKGROUND, 1}: the single labeled pixel
        // decides, and the background pixels get the label too.
        let classified = mask_from(3, 1, 2, vec![BACKGROUND, BACKGROUND, 1]);
        let seg = seg_from(3, 1, vec![0, 0, 0]);
        let voted = majority_vote(&classified, &seg).unwrap();
        assert_eq!(voted.labels(), &[1, 1, 1]);
    }

    #[test]
    fn all_background_region_stays_background() {
        let classified = mask_from(4, 1, 2, vec![BACKGROUND, BACKGROUND, 0, 0]);
        let seg = seg_from(4, 1, vec![0, 0, 1, 1]);
        let voted = majority_vote(&classified, &seg).unwrap();
        assert_eq!(voted.labels(), &[BACKGROUND, BACKGROUND, 0, 0]);
    }

    #[test]
    fn voting_is_idempotent() {
        let labels = vec![0, 1, 1, 2, 2, 2, 0, 0, BACKGROUND];
        let classified = mask_from(3, 3, 3, labels);
        let ids = vec![0, 0, 1, 0, 0, 1, 2, 2, 2];
        let seg = seg_from(3, 3, ids);
        let once = majority_vote(&classified, &seg).unwrap();
        let twice = majority_vote(&once, &seg).unwrap();
        assert_eq!(once.labels(), twice.labels());
    }

    #[test]
    fn output_is_constant_within_regions() {
        let labels = vec![0, 1, 0, 1, 2, 0, 1, 2, 2, 1, 0, 0];
        let classified = mask_from(4, 3, 3, labels);
        let ids = vec![0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 2, 2];
        let seg = seg_from(4, 3, ids);
        let voted = majority_vote(&classified, &seg).unwrap();
        for region in 0..seg.region_count() as u32 {
            let mut seen = None;
            for (i, &id) in seg.ids().iter().enumerate() {
                if id == region {
                    let l = voted.labels()[i];
                    assert_eq!(*seen.get_or_insert(l), l);
                }
            }
        }
        assert_eq!((voted.width(), voted.height()), (4, 3));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let classified = mask_from(3, 1, 2, vec![0, 0, 1]);
        let seg = seg_from(2, 1, vec![0, 1]);
        assert!(matches!(
            majority_vote(&classified, &seg),
            Err(VotingError::DimensionMismatch { .. })
        ));
    }
}
