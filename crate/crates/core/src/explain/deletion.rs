//! Deletion curves: classifier confidence as the most relevant pixels are
//! zeroed out, in bins of roughly equal relevance.

use serde::{Deserialize, Serialize};

use super::DifferentiableClassifier;
use crate::error::{Error, Result};
use crate::tensor::{Heatmap, Video};

pub const DEFAULT_BINS: usize = 25;

/// Relative slack when comparing a group's relevance with its target share,
/// so that rounding in the running sums does not push a pixel into the next
/// group.
const SHARE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletionCurve {
    /// Cumulative relevance removed, starting at 0.
    pub alphas: Vec<f64>,
    /// Classifier output after each removal step; `confidences[0]` is the
    /// untouched video.
    pub confidences: Vec<f64>,
    /// Trapezoidal area under the curve, normalized by the final alpha.
    pub score: f64,
}

impl DeletionCurve {
    /// Builds the curve and its score from matching point sequences.
    pub fn from_points(alphas: Vec<f64>, confidences: Vec<f64>) -> Result<Self> {
        if alphas.len() != confidences.len() || alphas.len() < 2 {
            return Err(Error::InvalidConfig("a deletion curve needs at least two matching points".into()));
        }
        let score = trapezoid_score(&alphas, &confidences)?;
        Ok(DeletionCurve {
            alphas,
            confidences,
            score,
        })
    }
}

fn trapezoid_score(alphas: &[f64], confidences: &[f64]) -> Result<f64> {
    let span = alphas[alphas.len() - 1] - alphas[0];
    if span <= 0.0 {
        return Err(Error::DegenerateHeatmap);
    }
    let area: f64 = alphas
        .windows(2)
        .zip(confidences.windows(2))
        .map(|(a, c)| (a[1] - a[0]) * 0.5 * (c[0] + c[1]))
        .sum();
    Ok(area / span)
}

/// Pixel indices (scan order) sorted by descending relevance, ties by
/// ascending index.
pub fn removal_order(h: &Heatmap) -> Vec<usize> {
    let values = h.values();
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Greedy prefix partition of the removal order into at most `bins` groups.
///
/// A group closes once its relevance reaches the remaining relevance divided
/// by the remaining group count, or when every later group needs the pixels
/// that are left. Every group holds at least one pixel; with `bins >= N`
/// every pixel is its own group.
pub fn relevance_bins(h: &Heatmap, bins: usize) -> Result<Vec<Vec<usize>>> {
    if bins == 0 {
        return Err(Error::InvalidConfig("bins must be at least 1".into()));
    }
    let values = h.values();
    let order = removal_order(h);
    let n = order.len();
    let mut remaining: f64 = values.iter().sum();
    let mut bins_left = bins.min(n);
    let mut groups = Vec::with_capacity(bins_left);
    let mut current = Vec::new();
    let mut acc = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        current.push(i);
        acc += values[i];
        if bins_left == 1 {
            continue;
        }
        let pixels_after = n - pos - 1;
        if acc >= (1.0 - SHARE_SLACK) * remaining / bins_left as f64 || pixels_after < bins_left {
            groups.push(std::mem::take(&mut current));
            remaining -= acc;
            acc = 0.0;
            bins_left -= 1;
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    Ok(groups)
}

/// Zeroes pixel groups in order of relevance and records the classifier
/// output after each step. Lower scores indicate a more faithful heatmap.
pub fn deletion_score(f: &dyn DifferentiableClassifier, v: &Video, h: &Heatmap, bins: usize) -> Result<DeletionCurve> {
    v.grid().check_same(&h.grid())?;
    f.check_input(v.data().shape())?;
    let groups = relevance_bins(h, bins)?;
    let values = h.values();
    let grid = h.grid();
    let channels = v.channels();

    let mut masked = v.data().clone();
    let mut alphas = Vec::with_capacity(groups.len() + 1);
    let mut confidences = Vec::with_capacity(groups.len() + 1);
    alphas.push(0.0);
    confidences.push(f.evaluate(masked.view()));
    let mut alpha = 0.0;
    for group in &groups {
        for &i in group {
            let [t, u, w] = grid.coord(i);
            for c in 0..channels {
                masked[[t, u, w, c]] = 0.0;
            }
            alpha += values[i];
        }
        alphas.push(alpha);
        confidences.push(f.evaluate(masked.view()));
    }
    DeletionCurve::from_points(alphas, confidences)
}

/// Arithmetic mean of per-video deletion scores.
pub fn mean_score(curves: &[DeletionCurve]) -> Option<f64> {
    if curves.is_empty() {
        return None;
    }
    Some(curves.iter().map(|c| c.score).sum::<f64>() / curves.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{ConstantClassifier, MaskedMeanClassifier};
    use crate::tensor::Grid;
    use ndarray::{Array3, Array4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_video(shape: [usize; 4], seed: u64) -> Video {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Video::new(Array4::from_shape_fn(shape, |_| rng.random::<f64>())).unwrap()
    }

    #[test]
    fn constant_classifier_scores_its_value() {
        let v = random_video([2, 3, 3, 3], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = Heatmap::from_relevance(Array3::from_shape_fn((2, 3, 3), |_| rng.random::<f64>())).unwrap();
        for bins in [1, 4, 25, 100] {
            let curve = deletion_score(&ConstantClassifier(0.37), &v, &h, bins).unwrap();
            assert!((curve.score - 0.37).abs() <= 1e-12);
            assert!(curve.confidences.iter().all(|&c| c == 0.37));
        }
    }

    #[test]
    fn bins_cover_every_pixel_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = Heatmap::from_relevance(Array3::from_shape_fn((2, 4, 4), |_| rng.random::<f64>().powi(4))).unwrap();
        for bins in [1, 2, 5, 25, 32, 50] {
            let groups = relevance_bins(&h, bins).unwrap();
            assert!(groups.len() <= bins.min(32));
            assert!(groups.iter().all(|g| !g.is_empty()));
            let mut all: Vec<usize> = groups.concat();
            assert_eq!(all, removal_order(&h));
            all.sort();
            assert_eq!(all, (0..32).collect::<Vec<_>>());
        }
        assert_eq!(relevance_bins(&h, 32).unwrap().len(), 32);
        assert!(relevance_bins(&h, 0).is_err());
    }

    #[test]
    fn bins_have_similar_relevance() {
        let g = Grid::new(1, 10, 10).unwrap();
        let h = Heatmap::uniform(g);
        let groups = relevance_bins(&h, 25).unwrap();
        assert_eq!(groups.len(), 25);
        assert!(groups.iter().all(|g| g.len() == 4));
    }

    #[test]
    fn tiny_grid_matches_prefix_enumeration() {
        // masked mean over the first row of a 1x2x2 grid, heatmap one-hot inside it
        let region = Array3::from_shape_fn((1, 2, 2), |(_, u, _)| u == 0);
        let f = MaskedMeanClassifier::new(region, 1).unwrap();
        let v = Video::new(Array4::from_shape_vec((1, 2, 2, 1), vec![0.2, 0.6, 0.9, 0.4]).unwrap()).unwrap();
        let h = Heatmap::one_hot(Grid::new(1, 2, 2).unwrap(), [0, 0, 1]).unwrap();
        let curve = deletion_score(&f, &v, &h, 4).unwrap();
        // removal order: (0,0,1) then zeros in scan order (0,0,0), (0,1,0), (0,1,1)
        assert_eq!(curve.alphas, vec![0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(curve.confidences, vec![0.4, 0.1, 0.0, 0.0, 0.0]);
        assert_eq!(curve.score, 0.25);
    }

    #[test]
    fn aligned_heatmap_scores_lower() {
        let (t, hh, w) = (2, 4, 4);
        let region = Array3::from_shape_fn((t, hh, w), |(_, u, ww)| u < 2 && ww < 3);
        let f = MaskedMeanClassifier::new(region.clone(), 3).unwrap();
        let v = random_video([t, hh, w, 3], 5);
        let aligned = Heatmap::from_relevance(region.mapv(|b| if b { 1.0 } else { 0.0 })).unwrap();
        let anti = Heatmap::from_relevance(region.mapv(|b| if b { 0.0 } else { 1.0 })).unwrap();
        let a = deletion_score(&f, &v, &aligned, 25).unwrap().score;
        let b = deletion_score(&f, &v, &anti, 25).unwrap().score;
        assert!(a < b, "{a} !< {b}");
        assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
    }

    #[test]
    fn mean_of_scores() {
        let c = |s| DeletionCurve::from_points(vec![0.0, 1.0], vec![s, s]).unwrap();
        assert_eq!(mean_score(&[c(0.2), c(0.4)]), Some(0.30000000000000004));
        assert_eq!(mean_score(&[]), None);
    }
}
