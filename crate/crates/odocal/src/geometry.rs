//! Rotation and rigid-transform representations.
//!
//! Three interchangeable rotation parameterizations are provided: rotation
//! matrices ([`Rot3`]), axis-angle vectors ([`AxisAngle`]), and Z-Y'-X''
//! Euler angles ([`EulerYPR`], yaw-pitch-roll). Planar poses ([`Pose2`])
//! carry a [`Rot2`] heading; spatial poses ([`Pose3`]) carry a [`Rot3`].
//!
//! Euler angles follow the yaw-about-Z, then pitch-about-Y', then
//! roll-about-X'' convention, i.e. `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// Pitch is at +/-90 degrees and yaw/roll are not separable.
    #[error("gimbal lock: |R31| = {r31_abs} leaves yaw and roll indistinct")]
    GimbalLock { r31_abs: f64 },
}

/// Threshold on |R31| beyond which the Euler extraction refuses to answer.
/// Calibration tilts are far from +/-90 degree pitch, so this is never hit
/// on real data.
const GIMBAL_LOCK_TOL: f64 = 1e-9;

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = theta % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// A 3-D rotation matrix in SO(3): `R * R^T = I`, `det(R) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3 {
    m: Matrix3<f64>,
}

/// Axis-angle rotation vector: axis `u` scaled by angle `phi`, canonical
/// form has `phi` in [0, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub theta: Vector3<f64>,
}

/// Z-Y'-X'' Euler angles in radians. Canonical ranges: yaw and roll in
/// (-pi, pi], pitch in [-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerYPR {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

/// Planar rotation by `theta` radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot2 {
    pub theta: f64,
}

/// Planar rigid pose: heading plus translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub rot: Rot2,
    pub p: Vector2<f64>,
}

/// Spatial rigid pose: rotation plus translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose3 {
    pub rot: Rot3,
    pub p: Vector3<f64>,
}

/// A planar pose with its sample time in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose2 {
    pub t: f64,
    pub pose: Pose2,
}

/// A spatial pose with its sample time in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose3 {
    pub t: f64,
    pub pose: Pose3,
}

impl Rot3 {
    pub fn identity() -> Self {
        Rot3 {
            m: Matrix3::identity(),
        }
    }

    /// Wraps a matrix assumed to satisfy the SO(3) constraints. Debug builds
    /// assert orthonormality; release builds trust the caller.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        debug_assert!(
            (m * m.transpose() - Matrix3::identity()).abs().max() < 1e-6,
            "matrix is not orthonormal"
        );
        Rot3 { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn transpose(&self) -> Rot3 {
        Rot3 {
            m: self.m.transpose(),
        }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    pub fn compose(&self, other: &Rot3) -> Rot3 {
        Rot3 {
            m: self.m * other.m,
        }
    }

    /// Max elementwise deviation from the orthonormality and determinant
    /// constraints; used by tests and input validation.
    pub fn constraint_violation(&self) -> f64 {
        let ortho = (self.m * self.m.transpose() - Matrix3::identity())
            .abs()
            .max();
        let det = (self.m.determinant() - 1.0).abs();
        ortho.max(det)
    }
}

impl Rot2 {
    pub fn identity() -> Self {
        Rot2 { theta: 0.0 }
    }

    pub fn new(theta: f64) -> Self {
        Rot2 { theta }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        let (s, c) = self.theta.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    pub fn apply(&self, v: &Vector2<f64>) -> Vector2<f64> {
        let (s, c) = self.theta.sin_cos();
        Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    pub fn inverse(&self) -> Rot2 {
        Rot2 { theta: -self.theta }
    }

    pub fn compose(&self, other: &Rot2) -> Rot2 {
        Rot2 {
            theta: wrap_angle(self.theta + other.theta),
        }
    }
}

/// Builds the rotation matrix of the Z-Y'-X'' composition
/// `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn rot_from_ypr(e: &EulerYPR) -> Rot3 {
    let (s1, c1) = e.yaw.sin_cos();
    let (s2, c2) = e.pitch.sin_cos();
    let (s3, c3) = e.roll.sin_cos();
    // Closed form of Rz*Ry*Rx.
    let m = Matrix3::new(
        c1 * c2,
        c1 * s2 * s3 - c3 * s1,
        s1 * s3 + c1 * c3 * s2,
        c2 * s1,
        c1 * c3 + s1 * s2 * s3,
        c3 * s1 * s2 - c1 * s3,
        -s2,
        c2 * s3,
        c2 * c3,
    );
    Rot3 { m }
}

/// Extracts Z-Y'-X'' Euler angles, the inverse of [`rot_from_ypr`].
///
/// Fails with [`GeometryError::GimbalLock`] when pitch is within numerical
/// reach of +/-90 degrees.
pub fn ypr_from_rot(r: &Rot3) -> Result<EulerYPR, GeometryError> {
    let m = &r.m;
    let r31 = m[(2, 0)];
    if r31.abs() > 1.0 - GIMBAL_LOCK_TOL {
        return Err(GeometryError::GimbalLock { r31_abs: r31.abs() });
    }
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    let pitch = (-r31).atan2((m[(2, 1)].powi(2) + m[(2, 2)].powi(2)).sqrt());
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    Ok(EulerYPR { yaw, pitch, roll })
}

/// Rodrigues construction: rotation about `theta/|theta|` by `|theta|`
/// radians. The zero vector maps to the identity.
pub fn rot_from_axis_angle(a: &AxisAngle) -> Rot3 {
    let phi = a.theta.norm();
    if phi < 1e-12 {
        // Second-order series in the full rotation vector.
        let k = skew(&a.theta);
        return Rot3 {
            m: Matrix3::identity() + k + 0.5 * k * k,
        };
    }
    let u = a.theta / phi;
    let k = skew(&u);
    let m = Matrix3::identity() + phi.sin() * k + (1.0 - phi.cos()) * (k * k);
    Rot3 { m }
}

/// Recovers the canonical axis-angle vector (angle in [0, pi]) from a
/// rotation matrix.
pub fn axis_angle_from_rot(r: &Rot3) -> AxisAngle {
    let m = &r.m;
    // vee(R - R^T)/2 = sin(phi) * u
    let sv = Vector3::new(
        (m[(2, 1)] - m[(1, 2)]) / 2.0,
        (m[(0, 2)] - m[(2, 0)]) / 2.0,
        (m[(1, 0)] - m[(0, 1)]) / 2.0,
    );
    let s = sv.norm();
    let c = (m.trace() - 1.0) / 2.0;
    let phi = s.atan2(c);
    if s > 1e-9 {
        return AxisAngle {
            theta: sv * (phi / s),
        };
    }
    if c > 0.0 {
        // phi ~ 0: sin(phi) ~ phi, so sv already is the rotation vector.
        return AxisAngle { theta: sv };
    }
    // phi ~ pi: R + I = 2*u*u^T up to O(pi - phi). Extract u from the
    // column with the largest diagonal entry, which is the best-conditioned
    // one, and fix the sign deterministically.
    let b = (m + Matrix3::identity()) / 2.0;
    let diag = [b[(0, 0)], b[(1, 1)], b[(2, 2)]];
    let i = diag
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let col = b.column(i);
    let mut u = Vector3::new(col[0], col[1], col[2]) / diag[i].sqrt();
    u.normalize_mut();
    let k = u.iamax();
    if u[k] < 0.0 {
        u = -u;
    }
    AxisAngle { theta: u * phi }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl Pose3 {
    pub fn identity() -> Self {
        Pose3 {
            rot: Rot3::identity(),
            p: Vector3::zeros(),
        }
    }

    /// Rigid composition: `a.compose(b)` maps b-frame coordinates through b
    /// into a's parent frame.
    pub fn compose(&self, other: &Pose3) -> Pose3 {
        Pose3 {
            rot: self.rot.compose(&other.rot),
            p: self.rot.apply(&other.p) + self.p,
        }
    }

    pub fn inverse(&self) -> Pose3 {
        let rt = self.rot.transpose();
        Pose3 {
            rot: rt,
            p: -rt.apply(&self.p),
        }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rot.apply(v) + self.p
    }
}

impl Pose2 {
    pub fn identity() -> Self {
        Pose2 {
            rot: Rot2::identity(),
            p: Vector2::zeros(),
        }
    }

    pub fn new(theta: f64, x: f64, y: f64) -> Self {
        Pose2 {
            rot: Rot2::new(theta),
            p: Vector2::new(x, y),
        }
    }

    pub fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2 {
            rot: self.rot.compose(&other.rot),
            p: self.rot.apply(&other.p) + self.p,
        }
    }

    pub fn inverse(&self) -> Pose2 {
        let inv = self.rot.inverse();
        Pose2 {
            rot: inv,
            p: -inv.apply(&self.p),
        }
    }

    pub fn apply(&self, v: &Vector2<f64>) -> Vector2<f64> {
        self.rot.apply(v) + self.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn mat_close(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    pub(crate) fn random_ypr(rng: &mut impl Rng, max_pitch: f64) -> EulerYPR {
        EulerYPR {
            yaw: rng.random_range(-PI..PI),
            pitch: rng.random_range(-max_pitch..max_pitch),
            roll: rng.random_range(-PI..PI),
        }
    }

    #[test]
    fn ypr_identity() {
        let r = rot_from_ypr(&EulerYPR {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        });
        assert!(mat_close(r.matrix(), &Matrix3::identity(), 1e-15));
    }

    #[test]
    fn ypr_pure_z_rotation() {
        let r = rot_from_ypr(&EulerYPR {
            yaw: FRAC_PI_2,
            pitch: 0.0,
            roll: 0.0,
        });
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(mat_close(r.matrix(), &expected, 1e-15));

        let e = ypr_from_rot(&r).unwrap();
        assert_abs_diff_eq!(e.yaw, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(e.pitch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.roll, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ypr_round_trip_fixed() {
        let e = EulerYPR {
            yaw: 0.3,
            pitch: -0.2,
            roll: 0.1,
        };
        let back = ypr_from_rot(&rot_from_ypr(&e)).unwrap();
        assert_abs_diff_eq!(back.yaw, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(back.pitch, -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(back.roll, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn ypr_round_trip_random() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let e = random_ypr(&mut rng, 1.4);
            let r = rot_from_ypr(&e);
            let back = ypr_from_rot(&r).unwrap();
            assert_abs_diff_eq!(back.yaw, e.yaw, epsilon = 1e-9);
            assert_abs_diff_eq!(back.pitch, e.pitch, epsilon = 1e-9);
            assert_abs_diff_eq!(back.roll, e.roll, epsilon = 1e-9);
            assert!(mat_close(rot_from_ypr(&back).matrix(), r.matrix(), 1e-9));
        }
    }

    #[test]
    fn ypr_gimbal_lock_detected() {
        let r = rot_from_ypr(&EulerYPR {
            yaw: 0.4,
            pitch: FRAC_PI_2,
            roll: -0.1,
        });
        assert!(matches!(
            ypr_from_rot(&r),
            Err(GeometryError::GimbalLock { .. })
        ));
    }

    #[test]
    fn axis_angle_basics() {
        let id = rot_from_axis_angle(&AxisAngle {
            theta: Vector3::zeros(),
        });
        assert!(mat_close(id.matrix(), &Matrix3::identity(), 1e-15));

        let r = rot_from_axis_angle(&AxisAngle {
            theta: Vector3::new(0.0, 0.0, FRAC_PI_2),
        });
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(mat_close(r.matrix(), &expected, 1e-15));
        let back = axis_angle_from_rot(&r);
        assert_abs_diff_eq!(back.theta.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.theta.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.theta.z, FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn axis_angle_preserves_axis() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..200 {
            let theta = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            if theta.norm() < 1e-3 {
                continue;
            }
            let axis = theta.normalize();
            let r = rot_from_axis_angle(&AxisAngle { theta });
            let rotated = r.apply(&axis);
            assert!((rotated - axis).norm() < 1e-12);
        }
    }

    #[test]
    fn axis_angle_round_trip_random() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let e = random_ypr(&mut rng, 1.5);
            let r = rot_from_ypr(&e);
            let aa = axis_angle_from_rot(&r);
            let phi = aa.theta.norm();
            assert!(
                (0.0..=PI + 1e-12).contains(&phi),
                "non-canonical angle {phi}"
            );
            let back = rot_from_axis_angle(&aa);
            assert!(mat_close(back.matrix(), r.matrix(), 1e-9));
        }
    }

    #[test]
    fn axis_angle_half_turns() {
        // phi = pi exercises the largest-diagonal column extraction.
        for axis in [
            Vector3::x(),
            Vector3::y(),
            Vector3::z(),
            Vector3::new(1.0, 1.0, 0.0).normalize(),
            Vector3::new(-0.3, 0.5, 0.81).normalize(),
        ] {
            let r = rot_from_axis_angle(&AxisAngle { theta: axis * PI });
            let aa = axis_angle_from_rot(&r);
            let back = rot_from_axis_angle(&aa);
            assert!(mat_close(back.matrix(), r.matrix(), 1e-9), "axis {axis:?}");
        }
    }

    #[test]
    fn axis_angle_z_matches_yaw() {
        for k in -6..=6 {
            let theta = k as f64 * PI / 6.5;
            let a = rot_from_axis_angle(&AxisAngle {
                theta: Vector3::new(0.0, 0.0, theta),
            });
            let b = rot_from_ypr(&EulerYPR {
                yaw: theta,
                pitch: 0.0,
                roll: 0.0,
            });
            assert!(mat_close(a.matrix(), b.matrix(), 1e-13));
        }
    }

    #[test]
    fn rot2_matches_yaw_block() {
        for k in -6..=6 {
            let theta = k as f64 * 0.47;
            let m2 = Rot2::new(theta).matrix();
            let m3 = rot_from_ypr(&EulerYPR {
                yaw: theta,
                pitch: 0.0,
                roll: 0.0,
            });
            assert_abs_diff_eq!(m2[(0, 0)], m3.matrix()[(0, 0)], epsilon = 1e-15);
            assert_abs_diff_eq!(m2[(0, 1)], m3.matrix()[(0, 1)], epsilon = 1e-15);
            assert_abs_diff_eq!(m2[(1, 0)], m3.matrix()[(1, 0)], epsilon = 1e-15);
            assert_abs_diff_eq!(m2[(1, 1)], m3.matrix()[(1, 1)], epsilon = 1e-15);
        }
    }

    #[test]
    fn pose_group_laws() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..200 {
            let mk = |rng: &mut ChaCha12Rng| Pose3 {
                rot: rot_from_ypr(&random_ypr(rng, 1.5)),
                p: Vector3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ),
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let c = mk(&mut rng);

            let ident = a.compose(&a.inverse());
            assert!(mat_close(ident.rot.matrix(), &Matrix3::identity(), 1e-9));
            assert!(ident.p.norm() < 1e-9);

            let ib = Pose3::identity().compose(&b);
            assert!(mat_close(ib.rot.matrix(), b.rot.matrix(), 1e-15));
            assert!((ib.p - b.p).norm() < 1e-15);

            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert!(mat_close(left.rot.matrix(), right.rot.matrix(), 1e-9));
            assert!((left.p - right.p).norm() < 1e-9);
        }
    }

    #[test]
    fn pose2_group_laws() {
        let a = Pose2::new(0.7, 1.0, -2.0);
        let b = Pose2::new(-1.2, 0.3, 0.4);
        let ident = a.compose(&a.inverse());
        assert_abs_diff_eq!(ident.rot.theta, 0.0, epsilon = 1e-12);
        assert!(ident.p.norm() < 1e-12);
        let ib = Pose2::identity().compose(&b);
        assert_abs_diff_eq!(ib.rot.theta, b.rot.theta, epsilon = 1e-15);
        assert!((ib.p - b.p).norm() < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..=20 {
            let a = wrap_angle(k as f64 * 1.7);
            assert!(a > -PI - 1e-12 && a <= PI + 1e-12);
        }
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-3.0 * PI), PI, epsilon = 1e-12);
    }
}
