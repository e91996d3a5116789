use std::f64::consts::FRAC_PI_2;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::linalg::symmetric_eigen2;
use crate::tensor::Heatmap;

/// Ellipse axes are drawn at this many standard deviations by default.
pub const DEFAULT_AXIS_SCALE: f64 = 2.0;

/// Gaussian summary of one frame of a heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseOverlay {
    pub frame: usize,
    /// Mean `(u, w)` of the frame-restricted distribution.
    pub center: [f64; 2],
    /// Covariance eigenvalues, major first (pixel^2).
    pub variances: [f64; 2],
    /// Semi-axis lengths, major first: `scale * sqrt(variance)`.
    pub axes: [f64; 2],
    /// Angle of the major axis from the column (`w`) axis towards increasing
    /// rows, in `[-pi/2, pi/2)`.
    pub orientation: f64,
    /// Heatmap mass in the frame.
    pub mass: f64,
}

/// One ellipse per frame with nonzero mass.
pub fn gaussian_match(h: &Heatmap, axis_scale: f64) -> Vec<EllipseOverlay> {
    let mut out = Vec::new();
    for (frame, slice) in h.data().axis_iter(Axis(0)).enumerate() {
        let mass: f64 = slice.sum();
        if mass <= 0.0 {
            continue;
        }
        let (mut mu, mut mw) = (0.0, 0.0);
        for ((u, w), &p) in slice.indexed_iter() {
            mu += u as f64 * p;
            mw += w as f64 * p;
        }
        mu /= mass;
        mw /= mass;
        let (mut suu, mut sww, mut suw) = (0.0, 0.0, 0.0);
        for ((u, w), &p) in slice.indexed_iter() {
            let (du, dw) = (u as f64 - mu, w as f64 - mw);
            suu += du * du * p;
            sww += dw * dw * p;
            suw += du * dw * p;
        }
        suu /= mass;
        sww /= mass;
        suw /= mass;
        // eigen-decomposition in (x = w, y = u) image coordinates
        let (ev, vec) = symmetric_eigen2(sww, suw, suu);
        let ev = [ev[0].max(0.0), ev[1].max(0.0)];
        let mut orientation = vec[1].atan2(vec[0]);
        // fold into [-pi/2, pi/2)
        if orientation >= FRAC_PI_2 {
            orientation -= std::f64::consts::PI;
        } else if orientation < -FRAC_PI_2 {
            orientation += std::f64::consts::PI;
        }
        out.push(EllipseOverlay {
            frame,
            center: [mu, mw],
            variances: ev,
            axes: [axis_scale * ev[0].sqrt(), axis_scale * ev[1].sqrt()],
            orientation,
            mass,
        });
    }
    out
}
