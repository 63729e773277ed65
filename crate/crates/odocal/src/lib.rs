//! Calibration toolkit for wheeled-robot chassis and IMU parameters.
//!
//! The toolkit estimates the mounting of an IMU on a mobile-robot chassis in
//! two steps: the pitch and roll of the IMU relative to the chassis plane are
//! recovered from gyroscope data by principal component analysis
//! ([`pca`]), and the heading angle, planar displacement, and chassis
//! velocity-scale errors are recovered by nonlinear least squares over paired
//! odometry paths ([`extrinsics`]). Supporting modules provide the IMU
//! systematic/stochastic error model ([`imu`]), Allan-deviation noise
//! identification ([`allan`]), camera projection models ([`camera`]),
//! Mecanum chassis kinematics and dead reckoning ([`chassis`]), and a
//! synthetic measurement simulator with known ground truth ([`sim`]).
//!
//! The `parallel` feature (enabled by default) runs batch evaluations on a
//! rayon thread pool; results are identical to the sequential fallback.

pub mod allan;
pub mod camera;
pub mod chassis;
pub mod extrinsics;
pub mod geometry;
pub mod imu;
pub mod pca;
pub mod sim;

mod exec;

pub use geometry::{AxisAngle, EulerYPR, Pose2, Pose3, Rot2, Rot3, StampedPose2, StampedPose3};
