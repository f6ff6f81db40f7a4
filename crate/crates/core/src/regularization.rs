//! Temporal attention variation and the regularized training objective.

use crate::error::{Error, Result};
use crate::prompt::AttentionMapSequence;

/// Components of `total = task_loss + lambda * variation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub task_loss: f64,
    pub variation: f64,
    pub lambda: f64,
    pub total: f64,
}

/// Mean squared Frobenius distance between consecutive attention maps.
///
/// With `T - 1` maps there are `T - 2` pairs; a single map has no pair and
/// the variation is defined as 0.
pub fn temporal_variation(attn: &AttentionMapSequence) -> Result<f64> {
    if attn.is_empty() {
        return Err(Error::Empty("attention map sequence"));
    }
    let pairs = attn.len() - 1;
    if pairs == 0 {
        return Ok(0.0);
    }
    let sum: f64 = attn
        .iter()
        .zip(attn.iter().skip(1))
        .map(|(prev, next)| {
            next.iter()
                .zip(prev)
                .map(|(b, a)| (b - a) * (b - a))
                .sum::<f64>()
        })
        .sum();
    Ok(sum / pairs as f64)
}

pub fn total_loss(task_loss: f64, variation: f64, lambda: f64) -> Result<LossBreakdown> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Domain(format!(
            "penalty weight must be non-negative, got {lambda}"
        )));
    }
    if variation.is_nan() || variation < 0.0 {
        return Err(Error::Domain(format!(
            "variation must be non-negative, got {variation}"
        )));
    }
    Ok(LossBreakdown {
        task_loss,
        variation,
        lambda,
        total: task_loss + lambda * variation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(maps: &[f64], side: usize) -> AttentionMapSequence {
        let data = maps
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, side * side))
            .collect();
        AttentionMapSequence::new(side, side, maps.len(), data).unwrap()
    }

    #[test]
    fn static_sequence_has_no_variation() {
        assert_eq!(
            temporal_variation(&seq(&[0.3, 0.3, 0.3, 0.3], 3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn constant_offset_pair() {
        // H*W*c^2 with H=W=3, c=0.25, one pair
        let v = temporal_variation(&seq(&[0.5, 0.75], 3)).unwrap();
        assert!((v - 9.0 * 0.0625).abs() < 1e-15);
    }

    #[test]
    fn zero_one_zero_on_2x2() {
        assert_eq!(temporal_variation(&seq(&[0.0, 1.0, 0.0], 2)).unwrap(), 4.0);
    }

    #[test]
    fn single_map_is_zero() {
        assert_eq!(temporal_variation(&seq(&[0.9], 4)).unwrap(), 0.0);
    }

    #[test]
    fn combined_loss() {
        let l = total_loss(0.7, 3.0, 0.0).unwrap();
        assert_eq!(l.total, 0.7);
        let l = total_loss(1.0, 4.0, 2.5).unwrap();
        assert_eq!(l.total, 11.0);
        assert_eq!((l.task_loss, l.variation, l.lambda), (1.0, 4.0, 2.5));
        assert_eq!(total_loss(0.0, 0.0, 1.0).unwrap().total, 0.0);
        assert!(total_loss(1.0, 1.0, -0.1).is_err());
        assert!(total_loss(1.0, -1.0, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn variation_laws(values in proptest::collection::vec(0.0f64..=1.0, 4..40),
                          c in 0.0f64..=1.0, l1 in 0.0f64..10.0, l2 in 0.0f64..10.0) {
            let maps = values.len() / 4;
            let data = values[..maps * 4].to_vec();
            let a = AttentionMapSequence::new(2, 2, maps, data.clone()).unwrap();
            let v = temporal_variation(&a).unwrap();
            prop_assert!(v >= 0.0);
            let r = temporal_variation(&a.reversed()).unwrap();
            prop_assert!((v - r).abs() <= 1e-12 * v.max(1.0));

            let scaled = AttentionMapSequence::new(
                2, 2, maps, data.iter().map(|x| c * x).collect()).unwrap();
            let vs = temporal_variation(&scaled).unwrap();
            prop_assert!((vs - c * c * v).abs() <= 1e-12 * v.max(1.0));

            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            prop_assert!(total_loss(0.3, v, lo).unwrap().total
                <= total_loss(0.3, v, hi).unwrap().total);
        }
    }
}
