//! Gradient-based explanation methods over a pluggable classifier, and
//! deletion-curve faithfulness.

mod classifier;
mod deletion;
mod methods;

pub use classifier::{
    ConstantClassifier, DifferentiableClassifier, LinearClassifier, MaskedMeanClassifier, QuadraticClassifier, Squash,
};
pub use deletion::{deletion_score, mean_score, relevance_bins, removal_order, DeletionCurve, DEFAULT_BINS};
pub use methods::{
    explain, gradient_times_input, integrated_gradients, sensitivity, smoothgrad, smoothgrad_estimate, Baseline,
    IntegratedGradConfig, Method, SmoothGradConfig, SmoothGradEstimate, INTENSITY_RANGE,
};
