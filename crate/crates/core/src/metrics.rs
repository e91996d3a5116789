//! Visual-quality metrics of a heatmap: smoothness (total variation),
//! locality (volume of the coordinate covariance) and sparsity (Gini index).

use ndarray::{ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use crate::linalg::{det3, symmetric_eigenvalues3, Mat3};
use crate::tensor::{forward_difference_l1, Heatmap};

/// Relative eigenvalue cutoff below which a covariance direction counts as
/// collapsed when reporting its rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Locality {
    /// Expected pixel coordinate `(t, u, w)`.
    pub mean: [f64; 3],
    pub covariance: Mat3,
    /// `|det(covariance)|`, in pixel^6.
    pub sigma_det: f64,
    /// Cube root of `sigma_det`, in pixel^2.
    pub sigma_cuberoot: f64,
    /// Numerical rank of the covariance; below 3 the determinant is zero
    /// because the heatmap is flat along some direction.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub tv: f64,
    pub gini: f64,
    #[serde(flatten)]
    pub locality: Locality,
}

impl QualityScores {
    pub fn compute(h: &Heatmap) -> Self {
        QualityScores {
            tv: total_variation(h),
            gini: gini_index(h),
            locality: locality(h),
        }
    }
}

/// Mean over all pixels of the L1 forward-difference gradient.
pub fn total_variation(h: &Heatmap) -> f64 {
    let grid = h.grid();
    let field = h.view();
    let sum: f64 = grid.coords().map(|c| forward_difference_l1(field, c)).sum();
    sum / grid.len() as f64
}

/// Sum of 1D total variations along every axis-parallel line, divided by the
/// element count.
pub fn anisotropic_tv(a: ArrayView3<'_, f64>) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for axis in 0..3 {
        for lane in a.lanes(Axis(axis)) {
            total += lane
                .iter()
                .zip(lane.iter().skip(1))
                .map(|(x, y)| (y - x).abs())
                .sum::<f64>();
        }
    }
    total / n as f64
}

pub fn locality(h: &Heatmap) -> Locality {
    let grid = h.grid();
    let mut mean = [0.0; 3];
    for (c, &p) in grid.coords().zip(h.values()) {
        for k in 0..3 {
            mean[k] += c[k] as f64 * p;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for (c, &p) in grid.coords().zip(h.values()) {
        if p == 0.0 {
            continue;
        }
        let d = [
            c[0] as f64 - mean[0],
            c[1] as f64 - mean[1],
            c[2] as f64 - mean[2],
        ];
        for i in 0..3 {
            for j in i..3 {
                cov[i][j] += d[i] * d[j] * p;
            }
        }
    }
    for i in 0..3 {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let sigma_det = det3(&cov).abs();
    let ev = symmetric_eigenvalues3(&cov);
    let scale = ev[0].abs();
    let rank = if scale == 0.0 {
        0
    } else {
        ev.iter().filter(|&&e| e > RANK_TOLERANCE * scale).count()
    };
    Locality {
        mean,
        covariance: cov,
        sigma_det,
        sigma_cuberoot: sigma_det.cbrt(),
        rank,
    }
}

pub fn gini_index(h: &Heatmap) -> f64 {
    gini_of_values(h.values())
}

/// Gini index of nonnegative values, using 1-based ranks of the ascending
/// sort. Returns 0 for an all-zero input.
pub fn gini_of_values(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i + 1) as f64 * x)
        .sum();
    let n = n as f64;
    (2.0 / n) * (weighted / total) - (n + 1.0) / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Grid;
    use ndarray::{Array, Array3};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hm(shape: (usize, usize, usize), v: Vec<f64>) -> Heatmap {
        Heatmap::new(Array::from_shape_vec(shape, v).unwrap()).unwrap()
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&Heatmap::uniform(Grid::new(3, 4, 5).unwrap())), 0.0);
        assert_eq!(total_variation(&hm((1, 2, 2), vec![0.5, 0.0, 0.0, 0.5])), 0.5);
        assert_eq!(total_variation(&hm((1, 1, 2), vec![0.25, 0.75])), 0.25);
    }

    #[test]
    fn anisotropic_examples() {
        assert_eq!(anisotropic_tv(Array3::from_elem((2, 3, 4), 0.7).view()), 0.0);
        let ramp = Array::from_shape_vec((1, 1, 4), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(anisotropic_tv(ramp.view()), 0.75);
    }

    #[test]
    fn anisotropic_matches_slice_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Array3<f64> = Array3::from_shape_fn((2, 3, 3), |_| rng.random_range(-1.0..1.0));
        // every line along t, then u, then w, enumerated by explicit index loops
        let mut sum = 0.0;
        for u in 0..3 {
            for w in 0..3 {
                sum += (a[[1, u, w]] - a[[0, u, w]]).abs();
            }
        }
        for t in 0..2 {
            for w in 0..3 {
                for u in 0..2 {
                    sum += (a[[t, u + 1, w]] - a[[t, u, w]]).abs();
                }
            }
        }
        for t in 0..2 {
            for u in 0..3 {
                for w in 0..2 {
                    sum += (a[[t, u, w + 1]] - a[[t, u, w]]).abs();
                }
            }
        }
        assert!((anisotropic_tv(a.view()) - sum / 18.0).abs() < 1e-14);
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini_index(&Heatmap::uniform(Grid::new(2, 4, 4).unwrap())), 0.0);
        let one_hot = Heatmap::one_hot(Grid::new(2, 2, 2).unwrap(), [1, 0, 1]).unwrap();
        assert_eq!(gini_index(&one_hot), 0.875);
        assert_eq!(gini_index(&hm((1, 2, 2), vec![0.5, 0.0, 0.5, 0.0])), 0.5);
    }

    #[test]
    fn locality_point_mass() {
        let h = Heatmap::one_hot(Grid::new(4, 8, 9).unwrap(), [2, 5, 7]).unwrap();
        let loc = locality(&h);
        assert_eq!(loc.mean, [2.0, 5.0, 7.0]);
        assert_eq!(loc.covariance, [[0.0; 3]; 3]);
        assert_eq!(loc.sigma_det, 0.0);
        assert_eq!(loc.rank, 0);
    }

    #[test]
    fn locality_uniform_matches_discrete_uniform_variance() {
        let (t, h, w) = (3usize, 4usize, 6usize);
        let loc = locality(&Heatmap::uniform(Grid::new(t, h, w).unwrap()));
        let var = |n: usize| ((n * n) as f64 - 1.0) / 12.0;
        // pairwise brute force: Var = (1 / 2n^2) sum_{i,j} (i - j)^2
        let pairwise = |n: usize| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += ((i as f64) - (j as f64)).powi(2);
                }
            }
            s / (2.0 * (n * n) as f64)
        };
        for (k, n) in [t, h, w].into_iter().enumerate() {
            assert!((loc.covariance[k][k] - var(n)).abs() < 1e-9);
            assert!((pairwise(n) - var(n)).abs() < 1e-12);
        }
        let expected = var(t) * var(h) * var(w);
        assert!((loc.sigma_det - expected).abs() < 1e-9);
        assert_eq!(loc.rank, 3);
    }

    #[test]
    fn single_frame_is_rank_deficient() {
        let mut a = Array3::zeros((3, 4, 4));
        a.index_axis_mut(Axis(0), 1).fill(1.0);
        let loc = locality(&Heatmap::from_relevance(a).unwrap());
        assert_eq!(loc.sigma_det, 0.0);
        assert_eq!(loc.rank, 2);
    }

    fn relevance_strategy() -> impl Strategy<Value = Array3<f64>> {
        (1usize..3, 1usize..5, 1usize..5).prop_flat_map(|(t, h, w)| {
            prop::collection::vec(0.0f64..1.0, t * h * w)
                .prop_map(move |v| Array3::from_shape_vec((t, h, w), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn anisotropic_equals_tv_on_heatmaps(a in relevance_strategy()) {
            prop_assume!(a.sum() > 0.0);
            let h = Heatmap::from_relevance(a).unwrap();
            prop_assert!((anisotropic_tv(h.view()) - total_variation(&h)).abs() <= 1e-12);
        }

        #[test]
        fn gini_permutation_and_scale_invariant(v in prop::collection::vec(0.0f64..1.0, 1..40), scale in 0.01f64..100.0, seed in any::<u64>()) {
            prop_assume!(v.iter().sum::<f64>() > 0.0);
            let base = gini_of_values(&v);
            let mut shuffled = v.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!((gini_of_values(&shuffled) - base).abs() <= 1e-12);
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            prop_assert!((gini_of_values(&scaled) - base).abs() <= 1e-12);
            let n = v.len() as f64;
            prop_assert!(base >= -1e-12 && base <= (n - 1.0) / n + 1e-12);
        }

        #[test]
        fn covariance_psd_and_translation(a in relevance_strategy(), dt in 0usize..2, du in 0usize..3, dw in 0usize..3) {
            prop_assume!(a.sum() > 0.0);
            let (t, h, w) = a.dim();
            let h0 = Heatmap::from_relevance(a.clone()).unwrap();
            let loc = locality(&h0);
            let ev = symmetric_eigenvalues3(&loc.covariance);
            prop_assert!(ev[2] >= -1e-8);
            for i in 0..3 { for j in 0..3 {
                prop_assert_eq!(loc.covariance[i][j], loc.covariance[j][i]);
            }}

            let mut big = Array3::zeros((t + dt, h + du, w + dw));
            big.slice_mut(ndarray::s![dt.., du.., dw..]).assign(&a);
            let h1 = Heatmap::from_relevance(big).unwrap();
            let moved = locality(&h1);
            for k in 0..3 {
                let off = [dt, du, dw][k] as f64;
                prop_assert!((moved.mean[k] - loc.mean[k] - off).abs() <= 1e-9);
                for j in 0..3 {
                    prop_assert!((moved.covariance[k][j] - loc.covariance[k][j]).abs() <= 1e-9);
                }
            }
            prop_assert!((moved.sigma_det - loc.sigma_det).abs() <= 1e-9 * (1.0 + loc.sigma_det));
        }

        #[test]
        fn tv_translation_invariant(v in prop::collection::vec(0.0f64..1.0, 8), dt in 0usize..2, du in 0usize..2, dw in 0usize..2) {
            prop_assume!(v.iter().sum::<f64>() > 0.0);
            // 2x2x2 support placed at two offsets inside a 5x5x5 grid; both keep a
            // one-pixel zero margin on every side of the support
            let place = |o: [usize; 3]| {
                let mut big = Array3::zeros((5, 5, 5));
                for (i, &x) in v.iter().enumerate() {
                    big[[1 + o[0] + i / 4, 1 + o[1] + (i / 2) % 2, 1 + o[2] + i % 2]] = x;
                }
                Heatmap::from_relevance(big).unwrap()
            };
            let a = total_variation(&place([0, 0, 0]));
            let b = total_variation(&place([dt, du, dw]));
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
