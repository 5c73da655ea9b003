//! Evaluation metrics: PSNR, IoU and symmetric Chamfer distance.

use serde::{Deserialize, Serialize};

use crate::io::Image;
use crate::{Error, Result};

/// Reported for identical signals, where `10·log10(1/0)` is unbounded.
pub const PSNR_CAP_DB: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub name: String,
    pub value: f64,
    /// What the metric was evaluated over.
    pub support: String,
}

impl MetricResult {
    pub fn new(name: impl Into<String>, value: f64, support: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            support: support.into(),
        }
    }
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::invalid("mse of empty signals"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

/// PSNR for signals on a unit range, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

/// PSNR over all pixels and channels.
pub fn psnr(predicted: &Image, reference: &Image) -> Result<f64> {
    if !predicted.same_shape(reference) {
        return Err(Error::invalid(format!(
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            predicted.width,
            predicted.height,
            predicted.channels,
            reference.width,
            reference.height,
            reference.channels
        )));
    }
    Ok(psnr_from_mse(mse(&predicted.data, &reference.data)?))
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets have IoU 1.
pub fn iou(predicted: &[bool], reference: &[bool]) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(Error::invalid(format!(
            "mask supports differ: {} vs {}",
            predicted.len(),
            reference.len()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in predicted.iter().zip(reference) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For each point of `from`, the index of and squared distance to its
/// nearest point in `to` (first index wins ties). Brute force.
pub fn nearest<P: AsRef<[f64]>, Q: AsRef<[f64]>>(from: &[P], to: &[Q]) -> Vec<(usize, f64)> {
    from.iter()
        .map(|a| {
            let a = a.as_ref();
            let mut best = (0, f64::INFINITY);
            for (j, b) in to.iter().enumerate() {
                let d = sq_dist(a, b.as_ref());
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect()
}

/// Mean squared nearest-neighbor distance from `a` to `b` plus from `b` to `a`.
pub fn chamfer_symmetric<P: AsRef<[f64]>, Q: AsRef<[f64]>>(a: &[P], b: &[Q]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("chamfer distance needs non-empty point sets"));
    }
    let ab: f64 = nearest(a, b).iter().map(|x| x.1).sum::<f64>() / a.len() as f64;
    let ba: f64 = nearest(b, a).iter().map(|x| x.1).sum::<f64>() / b.len() as f64;
    Ok(ab + ba)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psnr_closed_forms() {
        let a = Image::filled(4, 4, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), 100.0);
        let b = Image::filled(4, 4, &[0.6, 0.6, 0.6]).unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        let checker = Image::from_fn(4, 4, 1, |x, y| vec![((x + y) % 2) as f64]).unwrap();
        let inverse = Image::from_fn(4, 4, 1, |x, y| vec![((x + y + 1) % 2) as f64]).unwrap();
        assert_eq!(psnr(&checker, &inverse).unwrap(), 0.0);
        assert!(psnr(&a, &checker).is_err());
    }

    #[test]
    fn iou_cases() {
        let raster = |f: &dyn Fn(usize, usize) -> bool| (0..16).map(|i| f(i % 4, i / 4)).collect::<Vec<bool>>();
        let a = raster(&|x, _| x < 2);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        let b = raster(&|x, _| x >= 2);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
        // 2x2 squares offset by one column: overlap 2, union 6
        let s1 = raster(&|x, y| x < 2 && y < 2);
        let s2 = raster(&|x, y| (1..3).contains(&x) && y < 2);
        assert!((iou(&s1, &s2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&[false; 4], &[false; 4]).unwrap(), 1.0);
        assert!(iou(&[true], &[true, false]).is_err());
    }

    #[test]
    fn chamfer_cases() {
        let a = vec![[0.0, 0.0], [1.0, 2.0]];
        assert_eq!(chamfer_symmetric(&a, &a).unwrap(), 0.0);
        assert_eq!(chamfer_symmetric(&[[0.0]], &[[1.0]]).unwrap(), 2.0);
        let empty: Vec<[f64; 2]> = Vec::new();
        assert!(chamfer_symmetric(&a, &empty).is_err());
    }

    proptest! {
        #[test]
        fn psnr_consistent_with_mse(a in proptest::collection::vec(0.0f64..1.0, 12), b in proptest::collection::vec(0.0f64..1.0, 12)) {
            let ia = Image::new(2, 2, 3, a.clone()).unwrap();
            let ib = Image::new(2, 2, 3, b.clone()).unwrap();
            let m = mse(&a, &b).unwrap();
            prop_assume!(m > 1e-10);
            prop_assert!((psnr(&ia, &ib).unwrap() - 10.0 * (1.0 / m).log10()).abs() < 1e-12);
        }

        #[test]
        fn iou_symmetric_and_bounded(a in proptest::collection::vec(any::<bool>(), 20), b in proptest::collection::vec(any::<bool>(), 20)) {
            let x = iou(&a, &b).unwrap();
            prop_assert_eq!(x, iou(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn chamfer_symmetric_exactly(a in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..30),
                                     b in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..30)) {
            let a: Vec<[f64; 2]> = a.into_iter().map(|(x, y)| [x, y]).collect();
            let b: Vec<[f64; 2]> = b.into_iter().map(|(x, y)| [x, y]).collect();
            let ab = chamfer_symmetric(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, chamfer_symmetric(&b, &a).unwrap());
        }
    }
}
