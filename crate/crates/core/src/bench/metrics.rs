use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BoundingBox;

pub const N_THRESHOLDS: usize = 21;

/// Overlap thresholds 0.00, 0.05, ..., 1.00.
pub fn thresholds() -> [f64; N_THRESHOLDS] {
    std::array::from_fn(|i| i as f64 / 20.0)
}

/// Intersection over union of two boxes; 0 when they are disjoint.
pub fn iou(t: &BoundingBox, gt: &BoundingBox) -> f64 {
    let iw = (t.x + t.w).min(gt.x + gt.w) - t.x.max(gt.x);
    let ih = (t.y + t.h).min(gt.y + gt.h) - t.y.max(gt.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = t.area() + gt.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Fraction of frames whose overlap is strictly greater than each threshold.
pub fn success_curve(overlaps: &[f64]) -> Result<SuccessCurve> {
    if overlaps.is_empty() {
        return Err(Error::InvalidInput("success curve of zero frames".into()));
    }
    let n = overlaps.len() as f64;
    let ts = thresholds();
    let rates = ts
        .iter()
        .map(|&t| overlaps.iter().filter(|&&o| o > t).count() as f64 / n)
        .collect();
    Ok(SuccessCurve {
        thresholds: ts.to_vec(),
        rates,
    })
}

/// Mean success rate over the threshold grid.
pub fn auc(curve: &SuccessCurve) -> f64 {
    curve.rates.iter().sum::<f64>() / curve.rates.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn iou_cases() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb(20.0, 0.0, 5.0, 5.0)), 0.0);
        assert_eq!(iou(&a, &bb(10.0, 0.0, 5.0, 5.0)), 0.0);
        assert_eq!(iou(&a, &bb(5.0, 0.0, 10.0, 10.0)), 1.0 / 3.0);
    }

    #[test]
    fn curve_cases() {
        let perfect = success_curve(&[1.0; 7]).unwrap();
        assert!(perfect.rates[..20].iter().all(|&r| r == 1.0));
        assert_eq!(perfect.rates[20], 0.0);
        assert_eq!(auc(&perfect), 20.0 / 21.0);

        let half = success_curve(&[0.5]).unwrap();
        assert_eq!(half.rates.iter().filter(|&&r| r == 1.0).count(), 10);
        assert_eq!(auc(&half), 10.0 / 21.0);

        let zero = success_curve(&[0.0, 0.0]).unwrap();
        assert!(zero.rates.iter().all(|&r| r == 0.0));
        assert_eq!(auc(&zero), 0.0);

        let ones = SuccessCurve {
            thresholds: thresholds().to_vec(),
            rates: vec![1.0; 21],
        };
        assert_eq!(auc(&ones), 1.0);
        assert!(success_curve(&[]).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let t = thresholds();
        assert_eq!((t[0], t[10], t[20]), (0.0, 0.5, 1.0));
    }

    fn int_box() -> impl Strategy<Value = BoundingBox> {
        (-50i32..50, -50i32..50, 1i32..40, 1i32..40)
            .prop_map(|(x, y, w, h)| bb(x as f64, y as f64, w as f64, h as f64))
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded(a in int_box(), b in int_box()) {
            let v = iou(&a, &b);
            prop_assert_eq!(v, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn iou_is_translation_invariant(a in int_box(), b in int_box(), dx in -100i32..100, dy in -100i32..100) {
            let (dx, dy) = (dx as f64, dy as f64);
            prop_assert_eq!(iou(&a, &b), iou(&a.translated(dx, dy), &b.translated(dx, dy)));
        }

        #[test]
        fn rates_never_increase(overlaps in prop::collection::vec(0.0f64..=1.0, 1..50)) {
            let c = success_curve(&overlaps).unwrap();
            for w in c.rates.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }
    }
}
