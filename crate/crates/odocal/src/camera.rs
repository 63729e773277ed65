//! Camera projection and distortion models.
//!
//! Pinhole projection with radial/tangential distortion, plus the unified
//! (mirror-parameter) model for fisheye lenses, which normalizes by
//! `z + zeta * |P|` instead of `z` and reduces to the pinhole model at
//! `zeta = 0`.

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    /// Point has non-positive depth and cannot be projected by the pinhole
    /// model.
    #[error("point behind camera: z = {z}")]
    BehindCamera { z: f64 },
    /// The unified-model denominator `z + zeta*|P|` is not positive.
    #[error("invalid ray: z + zeta*|P| = {denom}")]
    InvalidRay { denom: f64 },
    /// Undistortion fixed-point iteration failed to converge.
    #[error(
        "undistort did not converge within {max_iterations} iterations (last step {last_step})"
    )]
    NoConvergence {
        max_iterations: usize,
        last_step: f64,
    },
}

/// Pinhole projection parameters, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Axis skew; enters the projection matrix as `fx * alpha`.
    pub alpha: f64,
}

/// Radial (k1, k2, k3) and tangential (p1, p2) distortion coefficients on
/// normalized image coordinates. `k3` defaults to 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistortionParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Unified projection model: pinhole preceded by a mirror parameter `zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnifiedModel {
    pub pinhole: PinholeIntrinsics,
    pub dist: DistortionParams,
    pub zeta: f64,
}

impl PinholeIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        PinholeIntrinsics {
            fx,
            fy,
            cx,
            cy,
            alpha: 0.0,
        }
    }

    /// RealSense ZR300 RGB camera constants.
    pub fn zr300_rgb() -> Self {
        Self::new(617.92, 618.54, 316.07, 244.96)
    }

    /// RealSense ZR300 fisheye camera constants (use with
    /// [`DistortionParams::zr300_fisheye`] and zeta = 1.743).
    pub fn zr300_fisheye() -> Self {
        Self::new(761.95, 761.42, 309.99, 234.27)
    }

    fn pixel_from_normalized(&self, xy: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(
            self.fx * xy.x + self.fx * self.alpha * xy.y + self.cx,
            self.fy * xy.y + self.cy,
        )
    }
}

impl DistortionParams {
    pub fn new(k1: f64, k2: f64, p1: f64, p2: f64) -> Self {
        DistortionParams {
            k1,
            k2,
            k3: 0.0,
            p1,
            p2,
        }
    }

    pub fn zr300_rgb() -> Self {
        Self::new(0.1182, -0.2507, -4.410e-4, 2.824e-4)
    }

    pub fn zr300_fisheye() -> Self {
        Self::new(-0.07772, 0.2731, -2.380e-3, 3.120e-3)
    }
}

impl UnifiedModel {
    pub fn zr300_fisheye() -> Self {
        UnifiedModel {
            pinhole: PinholeIntrinsics::zr300_fisheye(),
            dist: DistortionParams::zr300_fisheye(),
            zeta: 1.743,
        }
    }
}

/// Applies radial then tangential distortion to normalized coordinates.
pub fn distort(xy: &Vector2<f64>, dist: &DistortionParams) -> Vector2<f64> {
    let (x, y) = (xy.x, xy.y);
    let r2 = x * x + y * y;
    let radial = 1.0 + dist.k1 * r2 + dist.k2 * r2 * r2 + dist.k3 * r2 * r2 * r2;
    Vector2::new(
        x * radial + 2.0 * dist.p1 * x * y + dist.p2 * (r2 + 2.0 * x * x),
        y * radial + dist.p1 * (r2 + 2.0 * y * y) + 2.0 * dist.p2 * x * y,
    )
}

const UNDISTORT_MAX_ITERATIONS: usize = 50;
const UNDISTORT_STEP_TOL: f64 = 1e-10;

/// Inverts [`distort`] by fixed-point iteration `x <- x_d - delta(x)` where
/// `delta(x) = distort(x) - x`. Valid within the model's invertible radius
/// (about |xy| <= 0.8 at calibration-grade coefficient magnitudes).
pub fn undistort(
    xy_d: &Vector2<f64>,
    dist: &DistortionParams,
) -> Result<Vector2<f64>, CameraError> {
    let mut x = *xy_d;
    let mut last_step = f64::INFINITY;
    for _ in 0..UNDISTORT_MAX_ITERATIONS {
        let delta = distort(&x, dist) - x;
        let next = xy_d - delta;
        last_step = (next - x).norm();
        x = next;
        if last_step < UNDISTORT_STEP_TOL {
            return Ok(x);
        }
    }
    Err(CameraError::NoConvergence {
        max_iterations: UNDISTORT_MAX_ITERATIONS,
        last_step,
    })
}

/// Projects a camera-frame point through the pinhole model with distortion.
pub fn project_pinhole(
    p: &Vector3<f64>,
    intr: &PinholeIntrinsics,
    dist: &DistortionParams,
) -> Result<Vector2<f64>, CameraError> {
    if p.z <= 0.0 {
        return Err(CameraError::BehindCamera { z: p.z });
    }
    let xy = Vector2::new(p.x / p.z, p.y / p.z);
    Ok(intr.pixel_from_normalized(&distort(&xy, dist)))
}

/// Projects through the unified model: normalize by `z + zeta*|P|`, then
/// distort and map to pixels. Reduces to [`project_pinhole`] at zeta = 0.
pub fn project_unified(
    p: &Vector3<f64>,
    model: &UnifiedModel,
) -> Result<Vector2<f64>, CameraError> {
    let norm = p.norm();
    let denom = p.z + model.zeta * norm;
    if norm == 0.0 || denom <= 0.0 {
        return Err(CameraError::InvalidRay { denom });
    }
    let xy = Vector2::new(p.x / denom, p.y / denom);
    Ok(model
        .pinhole
        .pixel_from_normalized(&distort(&xy, &model.dist)))
}
