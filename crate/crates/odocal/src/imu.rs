//! Systematic and stochastic IMU error models.
//!
//! The systematic model maps a raw sensor-frame reading into the corrected
//! orthogonal frame through an axis-deviation matrix `T`, a diagonal scale
//! matrix `K`, and a zero offset `b`:
//!
//! ```text
//! corrected = T * K * (raw + b)
//! ```
//!
//! [`correct_accel`]/[`correct_gyro`] apply the model; [`simulate_accel`]/
//! [`simulate_gyro`] invert it to turn a true orthogonal-frame signal into a
//! raw measurement, optionally with additive white noise. Bias instability
//! is modeled separately as a per-axis random walk ([`evolve_bias`]).
//!
//! [`ImuIntrinsics::bmi055`] ships measured constants for a BMI055 unit as a
//! ready-made fixture.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImuError {
    /// A scale matrix has a non-positive diagonal entry and cannot be
    /// inverted for simulation.
    #[error("singular intrinsics: scale diagonal {axis} is {value} (must be > 0)")]
    SingularIntrinsics { axis: usize, value: f64 },
    /// An axis-deviation matrix does not have the required shape.
    #[error("invalid intrinsics: {0}")]
    InvalidShape(String),
}

/// Systematic IMU error parameters.
///
/// `t_accel` is upper-triangular with unit diagonal; `t_gyro` has unit
/// diagonal but free off-diagonal entries. Scales are stored as the
/// diagonals of the respective `K` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuIntrinsics {
    /// Accelerometer axis deviation, m/s² frame correction (dimensionless).
    pub t_accel: Matrix3<f64>,
    /// Accelerometer per-axis scale factors (diagonal of K_a).
    pub k_accel: Vector3<f64>,
    /// Accelerometer zero offset, m/s².
    pub b_accel: Vector3<f64>,
    /// Gyroscope axis deviation (dimensionless).
    pub t_gyro: Matrix3<f64>,
    /// Gyroscope per-axis scale factors (diagonal of K_g).
    pub k_gyro: Vector3<f64>,
    /// Gyroscope zero offset, rad/s.
    pub b_gyro: Vector3<f64>,
}

/// Stochastic IMU error densities.
///
/// White-noise entries are continuous-time densities (per √Hz); bias
/// instability entries are random-walk drive densities, i.e. the standard
/// deviation of the bias grows as `density * sqrt(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuNoiseParams {
    /// Accelerometer white noise density, m/s²/√Hz.
    pub accel_white: Vector3<f64>,
    /// Gyroscope white noise density, rad/s/√Hz.
    pub gyro_white: Vector3<f64>,
    /// Accelerometer bias random-walk density, m/s³-equivalent.
    pub accel_bias_instability: Vector3<f64>,
    /// Gyroscope bias random-walk density, rad/s²-equivalent.
    pub gyro_bias_instability: Vector3<f64>,
}

/// One timestamped six-axis reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// Sample time, seconds.
    pub t: f64,
    /// Angular rate, rad/s.
    pub gyro: Vector3<f64>,
    /// Specific force, m/s².
    pub accel: Vector3<f64>,
}

impl ImuIntrinsics {
    /// Identity model: no axis deviation, unit scales, zero offsets.
    pub fn identity() -> Self {
        ImuIntrinsics {
            t_accel: Matrix3::identity(),
            k_accel: Vector3::new(1.0, 1.0, 1.0),
            b_accel: Vector3::zeros(),
            t_gyro: Matrix3::identity(),
            k_gyro: Vector3::new(1.0, 1.0, 1.0),
            b_gyro: Vector3::zeros(),
        }
    }

    /// Measured constants for a Bosch BMI055 six-axis unit (axis deviation
    /// matrices plus per-axis scale factors and zero offsets).
    pub fn bmi055() -> Self {
        ImuIntrinsics {
            t_accel: Matrix3::new(
                1.0, -0.0388, -0.0025, //
                0.0, 1.0, 0.0223, //
                0.0, 0.0, 1.0,
            ),
            k_accel: Vector3::new(1.01807, 1.01469, 1.00625),
            b_accel: Vector3::new(0.080551, 0.119632, -0.340042),
            t_gyro: Matrix3::new(
                1.0, -0.0573, 0.00110, //
                0.0647, 1.0, 0.01660, //
                0.0038, -0.0150, 1.0,
            ),
            k_gyro: Vector3::new(0.99514, 1.00125, 0.99586),
            b_gyro: Vector3::new(-0.0032665, -0.0044932, 0.0010749),
        }
    }

    /// Checks the structural invariants: unit diagonals on both deviation
    /// matrices, zeros below the accelerometer diagonal, positive scales.
    pub fn validate(&self) -> Result<(), ImuError> {
        for i in 0..3 {
            if (self.t_accel[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(ImuError::InvalidShape(format!(
                    "t_accel diagonal entry {i} is {}, expected 1",
                    self.t_accel[(i, i)]
                )));
            }
            if (self.t_gyro[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(ImuError::InvalidShape(format!(
                    "t_gyro diagonal entry {i} is {}, expected 1",
                    self.t_gyro[(i, i)]
                )));
            }
        }
        for (i, j) in [(1, 0), (2, 0), (2, 1)] {
            if self.t_accel[(i, j)] != 0.0 {
                return Err(ImuError::InvalidShape(format!(
                    "t_accel[({i},{j})] is {}, expected 0 below the diagonal",
                    self.t_accel[(i, j)]
                )));
            }
        }
        check_scales(&self.k_accel)?;
        check_scales(&self.k_gyro)
    }
}

impl ImuNoiseParams {
    pub fn zero() -> Self {
        ImuNoiseParams {
            accel_white: Vector3::zeros(),
            gyro_white: Vector3::zeros(),
            accel_bias_instability: Vector3::zeros(),
            gyro_bias_instability: Vector3::zeros(),
        }
    }

    /// Allan-identified densities for the BMI055 fixture.
    ///
    /// The source table prints the accelerometer rows with rad/s-family
    /// units and the gyroscope rows with m/s²-family units, an evident
    /// header swap; values are assigned here by their units, so the rad/s
    /// numbers belong to the gyroscope.
    pub fn bmi055() -> Self {
        ImuNoiseParams {
            accel_white: Vector3::new(1.103e-1, 2.980e-2, 3.271e-2),
            gyro_white: Vector3::new(2.938e-3, 4.813e-3, 6.184e-3),
            accel_bias_instability: Vector3::new(1.194e-3, 1.996e-4, 2.904e-4),
            gyro_bias_instability: Vector3::new(1.352e-5, 1.085e-5, 1.920e-5),
        }
    }
}

fn check_scales(k: &Vector3<f64>) -> Result<(), ImuError> {
    for i in 0..3 {
        if !k[i].is_finite() || k[i] <= 0.0 {
            return Err(ImuError::SingularIntrinsics {
                axis: i,
                value: k[i],
            });
        }
    }
    Ok(())
}

fn diag(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_diagonal(v)
}

fn diag_inv(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0 / v.x, 1.0 / v.y, 1.0 / v.z))
}

/// `T_a * K_a * (raw + b_a)`: raw accelerometer reading to the corrected
/// orthogonal frame, m/s².
pub fn correct_accel(a_raw: &Vector3<f64>, intr: &ImuIntrinsics) -> Vector3<f64> {
    intr.t_accel * (diag(&intr.k_accel) * (a_raw + intr.b_accel))
}

/// `T_g * K_g * (raw + b_g)`: raw gyroscope reading to the corrected
/// orthogonal frame, rad/s.
pub fn correct_gyro(w_raw: &Vector3<f64>, intr: &ImuIntrinsics) -> Vector3<f64> {
    intr.t_gyro * (diag(&intr.k_gyro) * (w_raw + intr.b_gyro))
}

/// Inverts the accelerometer model: produces the raw reading whose
/// correction recovers `a_true`, with white noise of density
/// `noise.accel_white` discretized at `1/sqrt(dt)`.
pub fn simulate_accel(
    a_true: &Vector3<f64>,
    intr: &ImuIntrinsics,
    noise: &ImuNoiseParams,
    dt: f64,
    rng: &mut impl Rng,
) -> Result<Vector3<f64>, ImuError> {
    check_scales(&intr.k_accel)?;
    let t_inv = intr
        .t_accel
        .try_inverse()
        .ok_or_else(|| ImuError::InvalidShape("t_accel is not invertible".into()))?;
    let eta = white_noise(&noise.accel_white, dt, rng);
    Ok(diag_inv(&intr.k_accel) * (t_inv * a_true) - intr.b_accel - eta)
}

/// Inverts the gyroscope model; see [`simulate_accel`].
pub fn simulate_gyro(
    w_true: &Vector3<f64>,
    intr: &ImuIntrinsics,
    noise: &ImuNoiseParams,
    dt: f64,
    rng: &mut impl Rng,
) -> Result<Vector3<f64>, ImuError> {
    check_scales(&intr.k_gyro)?;
    let t_inv = intr
        .t_gyro
        .try_inverse()
        .ok_or_else(|| ImuError::InvalidShape("t_gyro is not invertible".into()))?;
    let eta = white_noise(&noise.gyro_white, dt, rng);
    Ok(diag_inv(&intr.k_gyro) * (t_inv * w_true) - intr.b_gyro - eta)
}

/// Applies both systematic corrections to one sample.
pub fn correct_sample(s: &ImuSample, intr: &ImuIntrinsics) -> ImuSample {
    ImuSample {
        t: s.t,
        gyro: correct_gyro(&s.gyro, intr),
        accel: correct_accel(&s.accel, intr),
    }
}

/// One random-walk step of a bias state: `b + w*sqrt(dt)` with `w` drawn
/// per-axis at the instability density, so `Var(b)` grows as
/// `density² * t`.
pub fn evolve_bias(
    b: &Vector3<f64>,
    instability: &Vector3<f64>,
    dt: f64,
    rng: &mut impl Rng,
) -> Vector3<f64> {
    let sqrt_dt = dt.sqrt();
    let mut out = *b;
    for i in 0..3 {
        if instability[i] > 0.0 {
            let w: f64 = rng.sample(StandardNormal);
            out[i] += w * instability[i] * sqrt_dt;
        }
    }
    out
}

/// Discretized white noise: per-sample std is `density / sqrt(dt)`.
fn white_noise(density: &Vector3<f64>, dt: f64, rng: &mut impl Rng) -> Vector3<f64> {
    let scale = 1.0 / dt.sqrt();
    let mut eta = Vector3::zeros();
    for i in 0..3 {
        if density[i] > 0.0 {
            let w: f64 = rng.sample(StandardNormal);
            eta[i] = w * density[i] * scale;
        }
    }
    eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn identity_correction_is_identity() {
        let intr = ImuIntrinsics::identity();
        let a = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(correct_accel(&a, &intr), a);
        let w = Vector3::new(0.1, 0.0, 0.0);
        assert_eq!(correct_gyro(&w, &intr), w);
    }

    #[test]
    fn bias_cancellation() {
        let intr = ImuIntrinsics::bmi055();
        let a = -intr.b_accel;
        assert!(correct_accel(&a, &intr).norm() < 1e-15);
        let w = -intr.b_gyro;
        assert!(correct_gyro(&w, &intr).norm() < 1e-15);
    }

    #[test]
    fn bmi055_zero_input_accel_matches_hand_product() {
        // Oracle: T_a * K_a * b_a multiplied out by hand (scalar arithmetic,
        // independent of the matrix types used by the implementation).
        let intr = ImuIntrinsics::bmi055();
        let kb = [1.01807 * 0.080551, 1.01469 * 0.119632, 1.00625 * -0.340042];
        let expected = [
            kb[0] + -0.0388 * kb[1] + -0.0025 * kb[2],
            kb[1] + 0.0223 * kb[2],
            kb[2],
        ];
        let got = correct_accel(&Vector3::zeros(), &intr);
        for i in 0..3 {
            assert_abs_diff_eq!(got[i], expected[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn bmi055_gyro_unit_x_matches_hand_product() {
        // Oracle: T_g * K_g * (e_x + b_g) expanded by hand.
        let intr = ImuIntrinsics::bmi055();
        let kb = [
            0.99514 * (1.0 + -0.0032665),
            1.00125 * -0.0044932,
            0.99586 * 0.0010749,
        ];
        let expected = [
            kb[0] + -0.0573 * kb[1] + 0.00110 * kb[2],
            0.0647 * kb[0] + kb[1] + 0.01660 * kb[2],
            0.0038 * kb[0] + -0.0150 * kb[1] + kb[2],
        ];
        let got = correct_gyro(&Vector3::new(1.0, 0.0, 0.0), &intr);
        for i in 0..3 {
            assert_abs_diff_eq!(got[i], expected[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn simulate_then_correct_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let noise = ImuNoiseParams::zero();
        for intr in [ImuIntrinsics::identity(), ImuIntrinsics::bmi055()] {
            intr.validate().unwrap();
            for _ in 0..100 {
                let a = Vector3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                );
                let raw = simulate_accel(&a, &intr, &noise, 0.01, &mut rng).unwrap();
                let back = correct_accel(&raw, &intr);
                assert!((back - a).norm() < 1e-12, "accel round trip {:?}", back - a);

                let w = Vector3::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                );
                let raw = simulate_gyro(&w, &intr, &noise, 0.01, &mut rng).unwrap();
                let back = correct_gyro(&raw, &intr);
                assert!((back - w).norm() < 1e-12, "gyro round trip {:?}", back - w);
            }
        }
    }

    #[test]
    fn simulate_rejects_nonpositive_scale() {
        let mut intr = ImuIntrinsics::identity();
        intr.k_accel.y = 0.0;
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let err = simulate_accel(
            &Vector3::zeros(),
            &intr,
            &ImuNoiseParams::zero(),
            0.01,
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ImuError::SingularIntrinsics {
                axis: 1,
                value: 0.0
            }
        );
    }

    #[test]
    fn white_noise_std_matches_density() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let intr = ImuIntrinsics::identity();
        let sigma = 0.02;
        let dt = 0.01;
        let mut noise = ImuNoiseParams::zero();
        noise.gyro_white = Vector3::new(sigma, sigma, sigma);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let s = simulate_gyro(&Vector3::zeros(), &intr, &noise, dt, &mut rng).unwrap();
            sum += s.x;
            sum_sq += s.x * s.x;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        let expected = sigma / dt.sqrt();
        assert!(
            (std - expected).abs() / expected < 0.03,
            "std {std} vs {expected}"
        );
        // Mean test: |mean| < 4 sigma / sqrt(N).
        assert!(
            mean.abs() < 4.0 * expected / (n as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn bias_random_walk_variance() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let density = 1e-3;
        let dt = 0.1;
        let steps = 100;
        let trials = 10_000;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let mut b = Vector3::zeros();
            for _ in 0..steps {
                b = evolve_bias(&b, &Vector3::new(density, density, density), dt, &mut rng);
            }
            sum_sq += b.x * b.x;
        }
        let var = sum_sq / trials as f64;
        let expected = steps as f64 * dt * density * density;
        assert!(
            (var - expected).abs() / expected < 0.05,
            "var {var} vs {expected}"
        );
    }

    #[test]
    fn zero_instability_keeps_bias() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let b = Vector3::new(0.1, -0.2, 0.3);
        let out = evolve_bias(&b, &Vector3::zeros(), 0.01, &mut rng);
        assert_eq!(out, b);

        // dt -> 0 limit: step magnitude vanishes.
        let out = evolve_bias(&b, &Vector3::new(1.0, 1.0, 1.0), 1e-30, &mut rng);
        assert!((out - b).norm() < 1e-12);
    }

    #[test]
    fn bmi055_fixture_validates() {
        ImuIntrinsics::bmi055().validate().unwrap();
        ImuIntrinsics::identity().validate().unwrap();
    }

    #[test]
    fn lower_triangle_violation_rejected() {
        let mut intr = ImuIntrinsics::identity();
        intr.t_accel[(2, 0)] = 0.01;
        assert!(matches!(intr.validate(), Err(ImuError::InvalidShape(_))));
    }
}
