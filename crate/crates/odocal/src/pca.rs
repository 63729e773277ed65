//! Pitch/roll estimation from gyroscope data by principal component
//! analysis.
//!
//! Planar motion rotates the chassis only about its Z axis, so every
//! angular-velocity measurement in the IMU frame lies (up to noise) along a
//! single direction: the chassis Z axis expressed in the IMU frame. The
//! pipeline symmetrizes the measurements (each sample enters with both
//! signs, forcing a zero mean), eigendecomposes the covariance, takes the
//! dominant eigenvector as the mean rotation axis, resolves its sign
//! against a coarse mounting prior, and converts the axis into the pitch
//! and roll of the IMU relative to the chassis plane.

use crate::geometry::{rot_from_axis_angle, ypr_from_rot, AxisAngle, Rot3};
use crate::imu::ImuSample;
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    /// Too few samples exceed the rate threshold to support the estimate.
    #[error(
        "insufficient rotation: {admitted} samples at or above min_rate (need >= {MIN_ADMITTED})"
    )]
    InsufficientRotation { admitted: usize },
    /// The dominant eigenvalue is numerically zero or tied with the second,
    /// so no single rotation direction dominates.
    #[error("degenerate covariance: eigenvalues {eigenvalues:?} have no dominant direction")]
    DegenerateCovariance { eigenvalues: [f64; 3] },
    /// The prior maps the axis too close to the chassis plane to pick a
    /// sign.
    #[error("ambiguous sign: |prior * v_max . e_z| = {dot_abs} < 1e-3")]
    AmbiguousSign { dot_abs: f64 },
    /// The axis points opposite the chassis Z axis; the aligning rotation
    /// is undefined. Indicates a wrong sign prior.
    #[error("axis antiparallel to e_z (dot = {dot})")]
    AntiparallelAxis { dot: f64 },
}

/// Minimum number of admitted samples for a usable estimate.
pub const MIN_ADMITTED: usize = 100;

/// Length of the leading stationary interval used to estimate the gyro
/// bias, seconds. Recordings must begin with the robot at rest.
pub const BIAS_WINDOW_S: f64 = 1.0;

/// Configuration for the tilt estimate.
#[derive(Debug, Clone, Copy)]
pub struct TiltConfig {
    /// Admission threshold on |gyro|, rad/s; samples slower than this carry
    /// mostly bias and noise.
    pub min_rate: f64,
    /// Coarse mounting guess used only to resolve the axis sign.
    pub prior_r_b_o: Rot3,
}

impl Default for TiltConfig {
    fn default() -> Self {
        TiltConfig {
            min_rate: 0.2,
            prior_r_b_o: Rot3::identity(),
        }
    }
}

/// Result of the PCA tilt calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltResult {
    /// Pitch of the IMU relative to the chassis plane, radians.
    pub pitch: f64,
    /// Roll of the IMU relative to the chassis plane, radians.
    pub roll: f64,
    /// Mean rotation axis in the IMU frame (unit, sign-resolved).
    pub v_max: Vector3<f64>,
    /// Covariance eigenvalues, sorted descending.
    pub eigenvalues: Vector3<f64>,
    /// Number of admitted samples.
    pub n_samples: usize,
}

/// Builds the symmetrized PCA dataset: rows `w` and `-w` for every sample
/// with `|w| >= min_rate`, which forces the dataset mean to exactly zero.
pub fn build_dataset(
    gyro_samples: &[Vector3<f64>],
    cfg: &TiltConfig,
) -> Result<Vec<Vector3<f64>>, PcaError> {
    let mut rows = Vec::new();
    for w in gyro_samples {
        if w.norm() >= cfg.min_rate {
            rows.push(*w);
            rows.push(-*w);
        }
    }
    let admitted = rows.len() / 2;
    if admitted < MIN_ADMITTED {
        return Err(PcaError::InsufficientRotation { admitted });
    }
    Ok(rows)
}

/// Eigendecomposition of the dataset covariance `X^T X / (K - 1)` (K =
/// number of admitted samples, i.e. half the row count). Returns the
/// eigenvalues sorted descending and the unit eigenvector of the largest.
///
/// Fails when the largest eigenvalue vanishes or ties the second within
/// relative 1e-9: planar-motion data cannot legitimately produce a tie, so
/// no arbitrary pick is made.
pub fn principal_axis(rows: &[Vector3<f64>]) -> Result<(Vector3<f64>, Vector3<f64>), PcaError> {
    assert!(rows.len() >= 6, "need at least 6 rows (3 admitted samples)");
    let k = rows.len() / 2;
    let mut sigma = Matrix3::zeros();
    for w in rows {
        sigma += w * w.transpose();
    }
    sigma /= (k - 1) as f64;

    let eig = nalgebra::SymmetricEigen::new(sigma);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let lambdas = Vector3::new(
        eig.eigenvalues[idx[0]],
        eig.eigenvalues[idx[1]],
        eig.eigenvalues[idx[2]],
    );
    if lambdas[0] < 1e-12 || lambdas[0] - lambdas[1] < 1e-9 * lambdas[0] {
        return Err(PcaError::DegenerateCovariance {
            eigenvalues: [lambdas[0], lambdas[1], lambdas[2]],
        });
    }
    let v = eig.eigenvectors.column(idx[0]).normalize();
    Ok((lambdas, v))
}

/// Resolves the sign of the rotation axis: the chassis Z axis must map
/// upward through the prior mounting rotation.
pub fn disambiguate_sign(v_max: &Vector3<f64>, prior: &Rot3) -> Result<Vector3<f64>, PcaError> {
    let d = prior.apply(v_max).z;
    if d.abs() < 1e-3 {
        return Err(PcaError::AmbiguousSign { dot_abs: d.abs() });
    }
    Ok(if d > 0.0 { *v_max } else { -*v_max })
}

/// The exact rotation taking `v` onto `e_z`: axis `v x e_z` (normalized),
/// angle `atan2(|v x e_z|, v . e_z)`.
pub fn axis_to_z_rotation(v: &Vector3<f64>) -> Result<Rot3, PcaError> {
    let ez = Vector3::z();
    let cross = v.cross(&ez);
    let dot = v.dot(&ez);
    if dot < -1.0 + 1e-9 {
        return Err(PcaError::AntiparallelAxis { dot });
    }
    let s = cross.norm();
    if s < 1e-15 {
        return Ok(Rot3::identity());
    }
    let angle = s.atan2(dot);
    Ok(rot_from_axis_angle(&AxisAngle {
        theta: cross * (angle / s),
    }))
}

/// Converts a unit rotation axis into the (pitch, roll) of the IMU relative
/// to the chassis plane, radians.
///
/// The yaw of the aligning rotation is discarded: any rotation mapping `v`
/// onto `e_z` differs from any other only by a leading yaw, so pitch and
/// roll are well defined.
pub fn tilt_from_axis(v: &Vector3<f64>) -> Result<(f64, f64), PcaError> {
    let rot = axis_to_z_rotation(v)?;
    let ypr =
        ypr_from_rot(&rot).expect("aligning rotation never reaches gimbal lock for |dot| < 1");
    Ok((ypr.pitch, ypr.roll))
}

/// Full tilt pipeline over a timestamped IMU stream: estimate the gyro bias
/// from the leading stationary second, subtract it, build the symmetrized
/// dataset, eigendecompose, resolve the sign, and extract pitch/roll.
pub fn estimate_tilt(samples: &[ImuSample], cfg: &TiltConfig) -> Result<TiltResult, PcaError> {
    if samples.is_empty() {
        return Err(PcaError::InsufficientRotation { admitted: 0 });
    }
    let t0 = samples[0].t;
    let mut bias = Vector3::zeros();
    let mut n_still = 0usize;
    for s in samples {
        if s.t - t0 <= BIAS_WINDOW_S {
            bias += s.gyro;
            n_still += 1;
        }
    }
    bias /= n_still as f64;

    let corrected: Vec<Vector3<f64>> = samples.iter().map(|s| s.gyro - bias).collect();
    let rows = build_dataset(&corrected, cfg)?;
    let (eigenvalues, v_raw) = principal_axis(&rows)?;
    let v_max = disambiguate_sign(&v_raw, &cfg.prior_r_b_o)?;
    let (pitch, roll) = tilt_from_axis(&v_max)?;
    Ok(TiltResult {
        pitch,
        roll,
        v_max,
        eigenvalues,
        n_samples: rows.len() / 2,
    })
}
