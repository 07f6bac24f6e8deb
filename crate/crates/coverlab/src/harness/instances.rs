//! Shared demo instances used by the acceptance suite and the CLI examples.

use crate::error::Result;
use crate::hypotheses::{Hypothesis, HypothesisClass};
use crate::space::{InstanceSpace, LabelSpace};

/// Thresholds over `[n]` with a band of ⋆ points directly below the cut:
/// partial hypotheses modeling a margin assumption.
pub fn margin_band_thresholds(n: usize, band: usize) -> Result<HypothesisClass> {
    let members: Vec<Hypothesis> = (0..=n)
        .map(|t| {
            Hypothesis::partial(
                (0..n)
                    .map(|x| {
                        if x >= t {
                            Some(1)
                        } else if x + band >= t {
                            None
                        } else {
                            Some(0)
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    HypothesisClass::explicit(InstanceSpace::new(n)?, LabelSpace::binary(), members)
}

/// Six-point class on the unit payload grid {0, 1/4, ..., 1}: seven sharp
/// step functions (0 -> 1 jumps, unfair under a graded line metric) plus
/// four shifted ramps climbing one grid step per point (fair).
pub fn graded_step_ramp_class() -> Result<HypothesisClass> {
    let labels = LabelSpace::unit_grid(5)?;
    let n = 6usize;
    let mut members = Vec::new();
    for t in 0..=n {
        members.push(Hypothesis::total(
            (0..n).map(|x| if x >= t { 4 } else { 0 }).collect(),
        ));
    }
    for shift in 0..4usize {
        members.push(Hypothesis::total(
            (0..n).map(|x| x.saturating_sub(shift).min(4)).collect(),
        ));
    }
    HypothesisClass::explicit(InstanceSpace::new(n)?, labels, members)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_band_star_positions() {
        let cls = margin_band_thresholds(10, 2).unwrap();
        assert_eq!(cls.len(), 11);
        let h = cls.member(6);
        assert_eq!(h.label(3), Some(0));
        assert_eq!(h.label(4), None);
        assert_eq!(h.label(5), None);
        assert_eq!(h.label(6), Some(1));
    }

    #[test]
    fn graded_class_member_count() {
        let cls = graded_step_ramp_class().unwrap();
        assert_eq!(cls.len(), 11);
        assert!(cls.label_space().has_payloads());
    }
}
