//! Differentiable classifier interface and closed-form classifiers with exact
//! gradients.

use ndarray::{Array1, Array2, Array3, Array4, ArrayView4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar score `f(v)` with its input gradient.
///
/// Implementations must be stateless with respect to evaluation so that they
/// can be shared across threads. Inputs are not required to lie in `[0, 1]`:
/// noise-perturbed videos routinely leave that range.
pub trait DifferentiableClassifier: Send + Sync {
    fn evaluate(&self, v: ArrayView4<'_, f64>) -> f64;

    fn gradient(&self, v: ArrayView4<'_, f64>) -> Array4<f64>;

    /// Expected `(T, H, W, C)` input shape, if the classifier has one.
    fn input_shape(&self) -> Option<[usize; 4]> {
        None
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        match self.input_shape() {
            Some(expected) if shape != expected => Err(Error::ShapeMismatch {
                expected: expected.to_vec(),
                found: shape.to_vec(),
            }),
            _ => Ok(()),
        }
    }
}

impl<C: DifferentiableClassifier + ?Sized> DifferentiableClassifier for Box<C> {
    fn evaluate(&self, v: ArrayView4<'_, f64>) -> f64 {
        (**self).evaluate(v)
    }

    fn gradient(&self, v: ArrayView4<'_, f64>) -> Array4<f64> {
        (**self).gradient(v)
    }

    fn input_shape(&self) -> Option<[usize; 4]> {
        (**self).input_shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantClassifier(pub f64);

impl DifferentiableClassifier for ConstantClassifier {
    fn evaluate(&self, _v: ArrayView4<'_, f64>) -> f64 {
        self.0
    }

    fn gradient(&self, v: ArrayView4<'_, f64>) -> Array4<f64> {
        Array4::zeros(v.raw_dim())
    }
}

/// `f(v) = bias + <weights, v>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    weights: Array4<f64>,
    bias: f64,
}

impl LinearClassifier {
    pub fn new(weights: Array4<f64>, bias: f64) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(LinearClassifier {
            weights: weights.as_standard_layout().into_owned(),
            bias,
        })
    }

    /// Nonnegative weights summing to one, so `f` maps `[0, 1]` videos into
    /// `[0, 1]` when `bias = 0`.
    pub fn random(shape: [usize; 4], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Array4::from_shape_fn(shape, |_| rng.random::<f64>());
        let total = w.sum();
        w.mapv_inplace(|x| x / total);
        LinearClassifier { weights: w, bias: 0.0 }
    }

    pub fn weights(&self) -> &Array4<f64> {
        &self.weights
    }
}

impl DifferentiableClassifier for LinearClassifier {
    fn evaluate(&self, v: ArrayView4<'_, f64>) -> f64 {
        self.bias + self.weights.iter().zip(v.iter()).map(|(w, x)| w * x).sum::<f64>()
    }

    fn gradient(&self, _v: ArrayView4<'_, f64>) -> Array4<f64> {
        self.weights.clone()
    }

    fn input_shape(&self) -> Option<[usize; 4]> {
        let s = self.weights.shape();
        Some([s[0], s[1], s[2], s[3]])
    }
}

/// Output nonlinearity applied to the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Squash {
    /// Identity: the Hessian is constant.
    None,
    /// Logistic sigmoid into `(0, 1)`.
    Logistic,
}

/// `f(v) = s(bias + g.x + x'Hx / 2)` on the flattened video `x`, with `H`
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticClassifier {
    shape: [usize; 4],
    bias: f64,
    linear: Array1<f64>,
    hessian: Array2<f64>,
    squash: Squash,
}

impl QuadraticClassifier {
    pub fn new(shape: [usize; 4], bias: f64, linear: Array1<f64>, hessian: Array2<f64>, squash: Squash) -> Result<Self> {
        let n: usize = shape.iter().product();
        if linear.len() != n {
            return Err(Error::ShapeMismatch {
                expected: vec![n],
                found: vec![linear.len()],
            });
        }
        if hessian.dim() != (n, n) {
            return Err(Error::ShapeMismatch {
                expected: vec![n, n],
                found: hessian.shape().to_vec(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if hessian[[i, j]] != hessian[[j, i]] {
                    return Err(Error::InvalidConfig("quadratic form must be symmetric".into()));
                }
            }
        }
        Ok(QuadraticClassifier {
            shape,
            bias,
            linear,
            hessian,
            squash,
        })
    }

    /// Random symmetric form. Coefficients are scaled so that the quadratic
    /// part varies by at most `0.5` over `[0, 1]^n`; without squashing the
    /// bias is `0.5`, so `f` stays in `[0, 1]` on valid videos. With logistic
    /// squashing the form is stretched by a factor of 8 around a zero bias to
    /// make the curvature of the sigmoid visible.
    pub fn random(shape: [usize; 4], seed: u64, squash: Squash) -> Self {
        let n: usize = shape.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut linear: Array1<f64> = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let mut hessian: Array2<f64> = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                hessian[[i, j]] = x;
                hessian[[j, i]] = x;
            }
        }
        let bound = linear.iter().map(|x| x.abs()).sum::<f64>() + 0.5 * hessian.iter().map(|x| x.abs()).sum::<f64>();
        let (target, bias) = match squash {
            Squash::None => (0.5, 0.5),
            Squash::Logistic => (4.0, 0.0),
        };
        let scale = target / bound;
        linear.mapv_inplace(|x| x * scale);
        hessian.mapv_inplace(|x| x * scale);
        QuadraticClassifier {
            shape,
            bias,
            linear,
            hessian,
            squash,
        }
    }

    fn form(&self, x: &Array1<f64>) -> (f64, Array1<f64>) {
        let hx = self.hessian.dot(x);
        let q = self.bias + self.linear.dot(x) + 0.5 * x.dot(&hx);
        (q, &self.linear + &hx)
    }

    fn flatten(v: ArrayView4<'_, f64>) -> Array1<f64> {
        Array1::from_iter(v.iter().copied())
    }
}

fn logistic(q: f64) -> f64 {
    1.0 / (1.0 + (-q).exp())
}

impl DifferentiableClassifier for QuadraticClassifier {
    fn evaluate(&self, v: ArrayView4<'_, f64>) -> f64 {
        let (q, _) = self.form(&Self::flatten(v));
        match self.squash {
            Squash::None => q,
            Squash::Logistic => logistic(q),
        }
    }

    fn gradient(&self, v: ArrayView4<'_, f64>) -> Array4<f64> {
        let (q, grad) = self.form(&Self::flatten(v));
        let grad = match self.squash {
            Squash::None => grad,
            Squash::Logistic => {
                let s = logistic(q);
                grad * (s * (1.0 - s))
            }
        };
        grad.into_shape_with_order(self.shape).expect("gradient length equals input size")
    }

    fn input_shape(&self) -> Option<[usize; 4]> {
        Some(self.shape)
    }
}

/// Mean intensity over a pixel subset (all channels).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMeanClassifier {
    region: Array3<bool>,
    channels: usize,
    count: usize,
}

impl MaskedMeanClassifier {
    pub fn new(region: Array3<bool>, channels: usize) -> Result<Self> {
        let count = region.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::EmptyMask);
        }
        if channels == 0 {
            return Err(Error::UnsupportedChannels(0));
        }
        Ok(MaskedMeanClassifier {
            region: region.as_standard_layout().into_owned(),
            channels,
            count,
        })
    }

    pub fn region(&self) -> &Array3<bool> {
        &self.region
    }
}

impl DifferentiableClassifier for MaskedMeanClassifier {
    fn evaluate(&self, v: ArrayView4<'_, f64>) -> f64 {
        let mut sum = 0.0;
        for ((t, u, w, _), &x) in v.indexed_iter() {
            if self.region[[t, u, w]] {
                sum += x;
            }
        }
        sum / (self.count * self.channels) as f64
    }

    fn gradient(&self, v: ArrayView4<'_, f64>) -> Array4<f64> {
        let g = 1.0 / (self.count * self.channels) as f64;
        Array4::from_shape_fn(v.raw_dim(), |(t, u, w, _)| if self.region[[t, u, w]] { g } else { 0.0 })
    }

    fn input_shape(&self) -> Option<[usize; 4]> {
        let (t, h, w) = self.region.dim();
        Some([t, h, w, self.channels])
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Central finite differences of `f` at `v`, one coordinate at a time.
    pub(crate) fn finite_difference_gradient(f: &dyn DifferentiableClassifier, v: &Array4<f64>, step: f64) -> Array4<f64> {
        let mut out = Array4::zeros(v.raw_dim());
        let mut probe = v.clone();
        for (idx, g) in out.indexed_iter_mut() {
            let x0 = probe[idx];
            probe[idx] = x0 + step;
            let up = f.evaluate(probe.view());
            probe[idx] = x0 - step;
            let down = f.evaluate(probe.view());
            probe[idx] = x0;
            *g = (up - down) / (2.0 * step);
        }
        out
    }

    fn assert_close_rel(a: &Array4<f64>, b: &Array4<f64>, tol: f64) {
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= tol * scale.max(1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let shape = [2, 3, 3, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let classifiers: Vec<Box<dyn DifferentiableClassifier>> = vec![
            Box::new(LinearClassifier::random(shape, 1)),
            Box::new(QuadraticClassifier::random(shape, 2, Squash::None)),
            Box::new(QuadraticClassifier::random(shape, 3, Squash::Logistic)),
            Box::new(MaskedMeanClassifier::new(Array3::from_shape_fn((2, 3, 3), |(t, u, w)| (t + u * w) % 2 == 0), 3).unwrap()),
        ];
        for f in &classifiers {
            for _ in 0..5 {
                let v = Array4::from_shape_fn(shape, |_| rng.random::<f64>());
                let fd = finite_difference_gradient(f.as_ref(), &v, 1e-5);
                assert_close_rel(&f.gradient(v.view()), &fd, 1e-5);
            }
        }
    }

    #[test]
    fn unsquashed_quadratic_stays_in_unit_range() {
        let shape = [1, 2, 2, 3];
        let f = QuadraticClassifier::random(shape, 5, Squash::None);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let v = Array4::from_shape_fn(shape, |_| rng.random::<f64>());
            let y = f.evaluate(v.view());
            assert!((0.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        let h = ndarray::array![[1.0, 2.0], [0.0, 1.0]];
        assert!(QuadraticClassifier::new([1, 1, 2, 1], 0.0, Array1::zeros(2), h, Squash::None).is_err());
    }

    #[test]
    fn shape_check() {
        let f = LinearClassifier::random([1, 2, 2, 1], 0);
        assert!(f.check_input(&[1, 2, 2, 1]).is_ok());
        assert!(f.check_input(&[1, 2, 3, 1]).is_err());
        assert!(ConstantClassifier(0.3).check_input(&[5, 5, 5, 3]).is_ok());
    }
}
