//! Mecanum chassis velocity-error model, wheel kinematics, and dead
//! reckoning.
//!
//! The measured chassis velocity is modeled as `K * v + eta` with a
//! diagonal scale-error matrix `K = diag(s_x, s_y, s_z)` acting on the body
//! X velocity, Y velocity, and yaw rate. Wheel-level kinematics use the
//! standard X-configuration with 45-degree rollers; they exist so the
//! simulator can exercise realistic inputs and are never needed by the
//! calibration itself.

use crate::geometry::{wrap_angle, Pose2, Rot2, StampedPose2};
use nalgebra::{Vector2, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChassisError {
    #[error("non-monotone timestamps: t[{index}] = {t} does not increase over {prev}")]
    NonMonotoneTime { index: usize, t: f64, prev: f64 },
}

/// Per-axis velocity scale errors (X, Y, yaw rate). All entries positive;
/// `s_z` is carried for completeness but never optimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChassisScale {
    pub s_x: f64,
    pub s_y: f64,
    pub s_z: f64,
}

impl ChassisScale {
    pub fn unit() -> Self {
        ChassisScale {
            s_x: 1.0,
            s_y: 1.0,
            s_z: 1.0,
        }
    }

    /// Componentwise reciprocal, for use as a correction.
    pub fn inverse(&self) -> Self {
        ChassisScale {
            s_x: 1.0 / self.s_x,
            s_y: 1.0 / self.s_y,
            s_z: 1.0 / self.s_z,
        }
    }
}

/// Planar body velocity: translation in m/s, yaw rate in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyVelocity {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl BodyVelocity {
    pub fn zero() -> Self {
        BodyVelocity {
            vx: 0.0,
            vy: 0.0,
            omega: 0.0,
        }
    }
}

/// A body velocity with its sample time in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedVelocity {
    pub t: f64,
    pub v: BodyVelocity,
}

/// Mecanum chassis dimensions, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MecanumGeometry {
    pub wheel_radius: f64,
    /// Chassis center to front axle (a).
    pub half_length: f64,
    /// Chassis center to wheel plane (b).
    pub half_width: f64,
}

/// `K * v + eta`: the velocity the odometer reports for a true body
/// velocity `v`, with optional white measurement noise.
pub fn measure_velocity(
    v: &BodyVelocity,
    k: &ChassisScale,
    noise_std: &Vector3<f64>,
    rng: &mut impl Rng,
) -> BodyVelocity {
    let mut eta = [0.0; 3];
    for (i, e) in eta.iter_mut().enumerate() {
        if noise_std[i] > 0.0 {
            let w: f64 = rng.sample(StandardNormal);
            *e = w * noise_std[i];
        }
    }
    BodyVelocity {
        vx: k.s_x * v.vx + eta[0],
        vy: k.s_y * v.vy + eta[1],
        omega: k.s_z * v.omega + eta[2],
    }
}

/// Applies a scale correction componentwise (typically the inverse scales
/// recovered by calibration).
pub fn correct_velocity(v: &BodyVelocity, k_inv: &ChassisScale) -> BodyVelocity {
    BodyVelocity {
        vx: k_inv.s_x * v.vx,
        vy: k_inv.s_y * v.vy,
        omega: k_inv.s_z * v.omega,
    }
}

/// Inverse kinematics: wheel angular velocities (front-left, front-right,
/// rear-left, rear-right), rad/s, for a body velocity.
pub fn wheel_speeds_from_body(v: &BodyVelocity, g: &MecanumGeometry) -> Vector4<f64> {
    let c = g.half_length + g.half_width;
    Vector4::new(
        (v.vx - v.vy - c * v.omega) / g.wheel_radius,
        (v.vx + v.vy + c * v.omega) / g.wheel_radius,
        (v.vx + v.vy - c * v.omega) / g.wheel_radius,
        (v.vx - v.vy + c * v.omega) / g.wheel_radius,
    )
}

/// Forward kinematics: least-squares body velocity from four wheel speeds
/// (the pseudo-inverse of [`wheel_speeds_from_body`]).
pub fn body_from_wheel_speeds(w: &Vector4<f64>, g: &MecanumGeometry) -> BodyVelocity {
    let r = g.wheel_radius;
    let c = g.half_length + g.half_width;
    BodyVelocity {
        vx: r * (w[0] + w[1] + w[2] + w[3]) / 4.0,
        vy: r * (-w[0] + w[1] + w[2] - w[3]) / 4.0,
        omega: r * (-w[0] + w[1] - w[2] + w[3]) / (4.0 * c),
    }
}

/// Integrates measured body velocities into a planar pose stream, applying
/// the scale correction `k_inv` to each sample first.
///
/// Midpoint scheme: each step uses the mean of the two bracketing velocity
/// samples and rotates it into the world frame at the mid-step heading,
/// keeping the integration second-order through speed ramps and turns. The
/// output starts at the identity pose at the first timestamp and has one
/// pose per input sample.
pub fn dead_reckon(
    measured: &[StampedVelocity],
    k_inv: &ChassisScale,
) -> Result<Vec<StampedPose2>, ChassisError> {
    let mut out = Vec::with_capacity(measured.len());
    if measured.is_empty() {
        return Ok(out);
    }
    let mut pose = Pose2::identity();
    out.push(StampedPose2 {
        t: measured[0].t,
        pose,
    });
    for i in 1..measured.len() {
        let dt = measured[i].t - measured[i - 1].t;
        if dt <= 0.0 {
            return Err(ChassisError::NonMonotoneTime {
                index: i,
                t: measured[i].t,
                prev: measured[i - 1].t,
            });
        }
        let a = correct_velocity(&measured[i - 1].v, k_inv);
        let b = correct_velocity(&measured[i].v, k_inv);
        let v = BodyVelocity {
            vx: 0.5 * (a.vx + b.vx),
            vy: 0.5 * (a.vy + b.vy),
            omega: 0.5 * (a.omega + b.omega),
        };
        let theta_mid = pose.rot.theta + 0.5 * v.omega * dt;
        let step = Rot2::new(theta_mid).apply(&Vector2::new(v.vx * dt, v.vy * dt));
        pose = Pose2 {
            rot: Rot2::new(wrap_angle(pose.rot.theta + v.omega * dt)),
            p: pose.p + step,
        };
        out.push(StampedPose2 {
            t: measured[i].t,
            pose,
        });
    }
    Ok(out)
}
