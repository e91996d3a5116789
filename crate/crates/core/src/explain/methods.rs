use ndarray::{Array4, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DifferentiableClassifier;
use crate::error::{Error, Result};
use crate::tensor::{RawAttribution, Video};

/// Width of the valid intensity interval; noise scales are fractions of it.
pub const INTENSITY_RANGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothGradConfig {
    pub samples: usize,
    /// Noise standard deviation as a fraction of the intensity range.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SmoothGradConfig {
    fn default() -> Self {
        SmoothGradConfig {
            samples: 25,
            noise_scale: 0.15,
            seed: 0,
        }
    }
}

impl SmoothGradConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig("smoothgrad samples must be at least 1".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidConfig("smoothgrad noise_scale must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    /// All-zero video.
    Black,
    Video(Video),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedGradConfig {
    pub steps: usize,
    pub baseline: Baseline,
}

impl Default for IntegratedGradConfig {
    fn default() -> Self {
        IntegratedGradConfig {
            steps: 25,
            baseline: Baseline::Black,
        }
    }
}

/// The four gradient-based explanation methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sensitivity,
    GradXInput,
    SmoothGrad,
    IntGrad,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sensitivity => "sensitivity",
            Method::GradXInput => "gradxinput",
            Method::SmoothGrad => "smoothgrad",
            Method::IntGrad => "intgrad",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sensitivity" => Ok(Method::Sensitivity),
            "gradxinput" => Ok(Method::GradXInput),
            "smoothgrad" => Ok(Method::SmoothGrad),
            "intgrad" => Ok(Method::IntGrad),
            other => Err(Error::InvalidConfig(format!("unknown explanation method `{other}`"))),
        }
    }
}

fn checked_gradient(f: &dyn DifferentiableClassifier, v: ndarray::ArrayView4<'_, f64>) -> Result<Array4<f64>> {
    let g = f.gradient(v);
    if g.shape() != v.shape() {
        return Err(Error::ShapeMismatch {
            expected: v.shape().to_vec(),
            found: g.shape().to_vec(),
        });
    }
    if let Some(i) = g.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(g)
}

/// The input gradient at `v`.
pub fn sensitivity(f: &dyn DifferentiableClassifier, v: &Video) -> Result<RawAttribution> {
    f.check_input(v.data().shape())?;
    RawAttribution::new(checked_gradient(f, v.view())?)
}

pub fn gradient_times_input(f: &dyn DifferentiableClassifier, v: &Video) -> Result<RawAttribution> {
    f.check_input(v.data().shape())?;
    let g = checked_gradient(f, v.view())?;
    RawAttribution::new(g * v.data())
}

/// Sample mean of noisy gradients together with the per-element sample
/// standard deviation across the draws.
#[derive(Debug, Clone)]
pub struct SmoothGradEstimate {
    pub mean: RawAttribution,
    pub std: Array4<f64>,
}

/// Averages gradients at `samples` copies of `v` perturbed by i.i.d.
/// Gaussian noise. Perturbed inputs are not clamped.
pub fn smoothgrad(f: &dyn DifferentiableClassifier, v: &Video, cfg: &SmoothGradConfig) -> Result<RawAttribution> {
    Ok(smoothgrad_estimate(f, v, cfg)?.mean)
}

pub fn smoothgrad_estimate(f: &dyn DifferentiableClassifier, v: &Video, cfg: &SmoothGradConfig) -> Result<SmoothGradEstimate> {
    cfg.validate()?;
    f.check_input(v.data().shape())?;
    let std = cfg.noise_scale * INTENSITY_RANGE;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mean = Array4::zeros(v.data().raw_dim());
    let mut m2 = Array4::zeros(v.data().raw_dim());
    let mut noisy = v.data().clone();
    for k in 1..=cfg.samples {
        Zip::from(&mut noisy).and(v.data()).for_each(|x, &base| {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = base + std * z;
        });
        let g = checked_gradient(f, noisy.view())?;
        // running mean keeps a constant gradient bit-exact
        let kf = k as f64;
        Zip::from(&mut mean).and(&mut m2).and(&g).for_each(|m, s, &x| {
            let delta = x - *m;
            *m += delta / kf;
            *s += delta * (x - *m);
        });
    }
    let denom = (cfg.samples.max(2) - 1) as f64;
    let std = if cfg.samples > 1 {
        m2.mapv(|s: f64| (s / denom).sqrt())
    } else {
        Array4::zeros(m2.raw_dim())
    };
    Ok(SmoothGradEstimate {
        mean: RawAttribution::new(mean)?,
        std,
    })
}

/// `(v - baseline)` times the midpoint-rule average of gradients along the
/// straight path from the baseline to `v`.
pub fn integrated_gradients(f: &dyn DifferentiableClassifier, v: &Video, cfg: &IntegratedGradConfig) -> Result<RawAttribution> {
    if cfg.steps == 0 {
        return Err(Error::InvalidConfig("integrated gradients needs at least 1 step".into()));
    }
    f.check_input(v.data().shape())?;
    let baseline = match &cfg.baseline {
        Baseline::Black => Array4::zeros(v.data().raw_dim()),
        Baseline::Video(b) => {
            if b.data().shape() != v.data().shape() {
                return Err(Error::ShapeMismatch {
                    expected: v.data().shape().to_vec(),
                    found: b.data().shape().to_vec(),
                });
            }
            b.data().clone()
        }
    };
    let diff = v.data() - &baseline;
    let mut mean = Array4::zeros(v.data().raw_dim());
    let mut point = baseline.clone();
    for k in 0..cfg.steps {
        let alpha = (k as f64 + 0.5) / cfg.steps as f64;
        Zip::from(&mut point)
            .and(&baseline)
            .and(&diff)
            .for_each(|p, &b, &d| *p = b + alpha * d);
        let g = checked_gradient(f, point.view())?;
        let kf = (k + 1) as f64;
        Zip::from(&mut mean).and(&g).for_each(|m, &x| *m += (x - *m) / kf);
    }
    RawAttribution::new(mean * diff)
}

pub fn explain(
    method: Method,
    f: &dyn DifferentiableClassifier,
    v: &Video,
    smooth: &SmoothGradConfig,
    integrated: &IntegratedGradConfig,
) -> Result<RawAttribution> {
    match method {
        Method::Sensitivity => sensitivity(f, v),
        Method::GradXInput => gradient_times_input(f, v),
        Method::SmoothGrad => smoothgrad(f, v, smooth),
        Method::IntGrad => integrated_gradients(f, v, integrated),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::classifier::tests::finite_difference_gradient;
    use crate::explain::{ConstantClassifier, LinearClassifier, QuadraticClassifier, Squash};
    use crate::tensor::normalize_attribution;
    use rand::Rng;

    fn random_video(shape: [usize; 4], seed: u64) -> Video {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Video::new(Array4::from_shape_fn(shape, |_| rng.random::<f64>())).unwrap()
    }

    #[test]
    fn sensitivity_of_linear_is_weights() {
        let f = LinearClassifier::random([1, 2, 3, 3], 4);
        let v = random_video([1, 2, 3, 3], 5);
        assert_eq!(sensitivity(&f, &v).unwrap().data(), f.weights());
    }

    #[test]
    fn constant_classifier_is_degenerate() {
        let v = random_video([1, 2, 2, 3], 1);
        let a = sensitivity(&ConstantClassifier(0.4), &v).unwrap();
        assert!(a.data().iter().all(|&x| x == 0.0));
        assert!(matches!(normalize_attribution(&a), Err(Error::DegenerateHeatmap)));
    }

    #[test]
    fn sensitivity_of_quadratic_matches_finite_differences() {
        let shape = [1, 2, 3, 3];
        let f = QuadraticClassifier::random(shape, 8, Squash::Logistic);
        let v = random_video(shape, 9);
        let fd = finite_difference_gradient(&f, v.data(), 1e-5);
        let a = sensitivity(&f, &v).unwrap();
        let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in a.data().iter().zip(fd.iter()) {
            assert!((x - y).abs() <= 1e-5 * scale);
        }
    }

    #[test]
    fn gradient_times_input_cases() {
        let shape = [1, 2, 2, 3];
        let f = LinearClassifier::random(shape, 1);
        let zero = Video::zeros(crate::Grid::new(1, 2, 2).unwrap(), 3).unwrap();
        assert!(gradient_times_input(&f, &zero).unwrap().data().iter().all(|&x| x == 0.0));
        let v = random_video(shape, 2);
        assert_eq!(gradient_times_input(&f, &v).unwrap().data(), &(f.weights() * v.data()));

        let q = QuadraticClassifier::random(shape, 3, Squash::None);
        let g = q.gradient(v.view());
        let a = gradient_times_input(&q, &v).unwrap();
        for (idx, &x) in a.data().indexed_iter() {
            assert_eq!(x, g[idx] * v.data()[idx]);
        }
    }

    #[test]
    fn smoothgrad_without_noise_is_sensitivity() {
        let shape = [1, 2, 3, 3];
        let f = QuadraticClassifier::random(shape, 3, Squash::Logistic);
        let v = random_video(shape, 4);
        for samples in [1, 7, 25] {
            let cfg = SmoothGradConfig {
                samples,
                noise_scale: 0.0,
                seed: 11,
            };
            assert_eq!(smoothgrad(&f, &v, &cfg).unwrap(), sensitivity(&f, &v).unwrap());
        }
    }

    #[test]
    fn smoothgrad_of_linear_is_exact() {
        let shape = [2, 2, 2, 3];
        let f = LinearClassifier::random(shape, 6);
        let v = random_video(shape, 7);
        let a = smoothgrad(&f, &v, &SmoothGradConfig::default()).unwrap();
        assert_eq!(a.data(), f.weights());
    }

    #[test]
    fn smoothgrad_is_seed_deterministic() {
        let shape = [1, 2, 2, 3];
        let f = QuadraticClassifier::random(shape, 3, Squash::Logistic);
        let v = random_video(shape, 4);
        let cfg = SmoothGradConfig {
            seed: 99,
            ..Default::default()
        };
        let a = smoothgrad(&f, &v, &cfg).unwrap();
        let b = smoothgrad(&f, &v, &cfg).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = smoothgrad(&f, &v, &SmoothGradConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn smoothgrad_converges_on_constant_hessian() {
        let shape = [1, 2, 2, 1];
        let f = QuadraticClassifier::random(shape, 21, Squash::None);
        let v = random_video(shape, 22);
        let cfg = SmoothGradConfig {
            samples: 10_000,
            noise_scale: 0.15,
            seed: 23,
        };
        let est = smoothgrad_estimate(&f, &v, &cfg).unwrap();
        let exact = f.gradient(v.view());
        let n = cfg.samples as f64;
        for ((m, s), g) in est.mean.data().iter().zip(est.std.iter()).zip(exact.iter()) {
            assert!((m - g).abs() <= 3.0 * s / n.sqrt(), "{m} vs {g} (std {s})");
        }
    }

    #[test]
    fn integrated_gradients_cases() {
        let shape = [1, 2, 2, 3];
        let f = QuadraticClassifier::random(shape, 3, Squash::Logistic);
        let v = random_video(shape, 4);
        let cfg = IntegratedGradConfig {
            steps: 25,
            baseline: Baseline::Video(v.clone()),
        };
        assert!(integrated_gradients(&f, &v, &cfg).unwrap().data().iter().all(|&x| x == 0.0));

        let lin = LinearClassifier::random(shape, 5);
        for steps in [1, 3, 25] {
            let cfg = IntegratedGradConfig {
                steps,
                baseline: Baseline::Black,
            };
            assert_eq!(integrated_gradients(&lin, &v, &cfg).unwrap().data(), &(lin.weights() * v.data()));
        }
        let zero = IntegratedGradConfig {
            steps: 0,
            baseline: Baseline::Black,
        };
        assert!(integrated_gradients(&lin, &v, &zero).is_err());
    }

    #[test]
    fn integrated_gradients_completeness() {
        let shape = [1, 2, 2, 3];
        let f = QuadraticClassifier::random(shape, 3, Squash::Logistic);
        let v = random_video(shape, 4);
        let target = f.evaluate(v.view()) - f.evaluate(Array4::zeros(shape).view());
        let mut last = f64::INFINITY;
        for steps in [5, 25, 125] {
            let cfg = IntegratedGradConfig {
                steps,
                baseline: Baseline::Black,
            };
            let err = (integrated_gradients(&f, &v, &cfg).unwrap().data().sum() - target).abs();
            assert!(err < last);
            if steps == 25 {
                assert!(err <= 1e-3);
            }
            last = err;
        }
    }

    #[test]
    fn method_names_roundtrip() {
        for m in [Method::Sensitivity, Method::GradXInput, Method::SmoothGrad, Method::IntGrad] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lime".parse::<Method>().is_err());
    }
}
