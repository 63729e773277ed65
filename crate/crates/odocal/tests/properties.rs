//! Property tests for the algebraic invariants the modules promise.

use nalgebra::{Matrix3, Vector2, Vector3};
use odocal::camera::{distort, undistort, DistortionParams};
use odocal::chassis::{correct_velocity, measure_velocity, BodyVelocity, ChassisScale};
use odocal::extrinsics::{residual, ExtrinsicParams, RelativePosePair};
use odocal::geometry::{
    axis_angle_from_rot, rot_from_axis_angle, rot_from_ypr, ypr_from_rot, AxisAngle, EulerYPR,
    Pose3, Rot2,
};
use odocal::imu::{
    correct_accel, correct_gyro, simulate_accel, simulate_gyro, ImuIntrinsics, ImuNoiseParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn ypr_strategy() -> impl Strategy<Value = EulerYPR> {
    (-3.1f64..3.1, -1.4f64..1.4, -3.1f64..3.1).prop_map(|(yaw, pitch, roll)| EulerYPR {
        yaw,
        pitch,
        roll,
    })
}

proptest! {
    #[test]
    fn ypr_round_trip(e in ypr_strategy()) {
        let r = rot_from_ypr(&e);
        let back = ypr_from_rot(&r).unwrap();
        prop_assert!((back.yaw - e.yaw).abs() < 1e-9);
        prop_assert!((back.pitch - e.pitch).abs() < 1e-9);
        prop_assert!((back.roll - e.roll).abs() < 1e-9);
        let again = rot_from_ypr(&back);
        prop_assert!((again.matrix() - r.matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn axis_angle_round_trip(e in ypr_strategy()) {
        let r = rot_from_ypr(&e);
        let aa = axis_angle_from_rot(&r);
        prop_assert!(aa.theta.norm() <= std::f64::consts::PI + 1e-12);
        let back = rot_from_axis_angle(&aa);
        prop_assert!((back.matrix() - r.matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn z_axis_angle_equals_yaw(theta in -3.1f64..3.1) {
        let a = rot_from_axis_angle(&AxisAngle { theta: Vector3::new(0.0, 0.0, theta) });
        let b = rot_from_ypr(&EulerYPR { yaw: theta, pitch: 0.0, roll: 0.0 });
        prop_assert!((a.matrix() - b.matrix()).abs().max() < 1e-13);
    }

    #[test]
    fn pose_inverse_composes_to_identity(
        e in ypr_strategy(),
        x in -5.0f64..5.0,
        y in -5.0f64..5.0,
        z in -5.0f64..5.0,
    ) {
        let pose = Pose3 { rot: rot_from_ypr(&e), p: Vector3::new(x, y, z) };
        let ident = pose.compose(&pose.inverse());
        prop_assert!((ident.rot.matrix() - Matrix3::identity()).abs().max() < 1e-9);
        prop_assert!(ident.p.norm() < 1e-9);
    }

    /// Invertible calibration-grade distortion: round trip through the
    /// fixed-point inverse stays below 1e-6.
    #[test]
    fn distort_undistort_round_trip(
        k1 in -0.15f64..0.15,
        k2 in -0.1f64..0.1,
        p1 in -0.003f64..0.003,
        p2 in -0.003f64..0.003,
        x in -0.5f64..0.5,
        y in -0.5f64..0.5,
    ) {
        prop_assume!((x * x + y * y).sqrt() <= 0.7);
        let dist = DistortionParams { k1, k2, k3: 0.0, p1, p2 };
        let xy = Vector2::new(x, y);
        let back = undistort(&distort(&xy, &dist), &dist).unwrap();
        prop_assert!((back - xy).norm() < 1e-6);
    }

    /// Simulating a measurement and correcting it is the identity for any
    /// invertible intrinsics (both sensors), with noise off.
    #[test]
    fn simulate_correct_identity(
        a_off in proptest::array::uniform3(-0.1f64..0.1),
        g_off in proptest::array::uniform6(-0.1f64..0.1),
        scales in proptest::array::uniform6(0.9f64..1.1),
        biases in proptest::array::uniform6(-0.5f64..0.5),
        signal in proptest::array::uniform6(-5.0f64..5.0),
        seed in 0u64..1000,
    ) {
        let intr = ImuIntrinsics {
            t_accel: Matrix3::new(1.0, a_off[0], a_off[1], 0.0, 1.0, a_off[2], 0.0, 0.0, 1.0),
            k_accel: Vector3::new(scales[0], scales[1], scales[2]),
            b_accel: Vector3::new(biases[0], biases[1], biases[2]),
            t_gyro: Matrix3::new(
                1.0, g_off[0], g_off[1],
                g_off[2], 1.0, g_off[3],
                g_off[4], g_off[5], 1.0,
            ),
            k_gyro: Vector3::new(scales[3], scales[4], scales[5]),
            b_gyro: Vector3::new(biases[3], biases[4], biases[5]),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let noise = ImuNoiseParams::zero();

        let a_true = Vector3::new(signal[0], signal[1], signal[2]);
        let raw = simulate_accel(&a_true, &intr, &noise, 0.005, &mut rng).unwrap();
        prop_assert!((correct_accel(&raw, &intr) - a_true).norm() < 1e-12);

        let w_true = Vector3::new(signal[3], signal[4], signal[5]);
        let raw = simulate_gyro(&w_true, &intr, &noise, 0.005, &mut rng).unwrap();
        prop_assert!((correct_gyro(&raw, &intr) - w_true).norm() < 1e-12);
    }

    /// Scale corruption followed by the inverse correction is the identity.
    #[test]
    fn velocity_scale_inverse(
        s in proptest::array::uniform3(0.9f64..1.1),
        v in proptest::array::uniform3(-1.0f64..1.0),
    ) {
        let k = ChassisScale { s_x: s[0], s_y: s[1], s_z: s[2] };
        let vel = BodyVelocity { vx: v[0], vy: v[1], omega: v[2] };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let measured = measure_velocity(&vel, &k, &Vector3::zeros(), &mut rng);
        let back = correct_velocity(&measured, &k.inverse());
        prop_assert!((back.vx - vel.vx).abs() < 1e-12);
        prop_assert!((back.vy - vel.vy).abs() < 1e-12);
        prop_assert!((back.omega - vel.omega).abs() < 1e-12);
    }

    /// The residual vanishes identically on pairs constructed from the same
    /// parameters without noise (the algebraic identity behind the solver).
    #[test]
    fn residual_zero_on_consistent_pairs(
        px in -0.4f64..0.4,
        py in -0.4f64..0.4,
        theta in -3.1f64..3.1,
        qx in 0.8f64..1.2,
        qy in 0.8f64..1.2,
        dx in -0.5f64..0.5,
        dy in -0.5f64..0.5,
        dtheta in -0.6f64..0.6,
    ) {
        let x = ExtrinsicParams { p: Vector2::new(px, py), theta, q_x: qx, q_y: qy };
        let d = Vector2::new(dx, dy);
        let pair = RelativePosePair {
            dp_f: Rot2::new(-x.theta).apply(&(d - x.p + Rot2::new(dtheta).apply(&x.p))),
            dp_o: Vector2::new(d.x / x.q_x, d.y / x.q_y),
            dtheta,
            t_start: 0.0,
            t_end: 0.5,
        };
        prop_assert!(residual(&x, &pair).norm() < 1e-12);
    }
}
