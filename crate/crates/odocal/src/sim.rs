//! Ground-truth trajectory and measurement simulator.
//!
//! A scenario is a scripted sequence of planar motion segments (lines,
//! constant-curvature arcs, spins, pauses) with trapezoidal speed ramps, so
//! position, velocity, and acceleration all have closed forms and the true
//! IMU signals are exact rather than finite-differenced. From the script
//! the generator derives:
//!
//! * the IMU stream: true body rates and specific force (including the
//!   centripetal terms from the lever arm between chassis center and IMU),
//!   pushed backward through the systematic error model and corrupted with
//!   white noise and bias random walks;
//! * the wheel-odometry path: the dead-reckoned path a chassis with scale
//!   errors reports. With zero velocity noise this is evaluated in closed
//!   form (the measured path is itself the exact path of a speed-scaled
//!   script), so no integration error pollutes recovery tests;
//! * a VIO-like path: the true IMU body poses plus white noise and a
//!   position random walk.
//!
//! Generation is deterministic per seed; each noise source draws from its
//! own stream.

use crate::chassis::{dead_reckon, measure_velocity, BodyVelocity, ChassisScale, StampedVelocity};
use crate::extrinsics::ExtrinsicParams;
use crate::geometry::{
    rot_from_ypr, wrap_angle, EulerYPR, Pose2, Pose3, Rot2, Rot3, StampedPose2, StampedPose3,
};
use crate::imu::{
    evolve_bias, simulate_accel, simulate_gyro, ImuIntrinsics, ImuNoiseParams, ImuSample,
};
use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Gravity constant used throughout the simulator, m/s².
pub const GRAVITY: f64 = 9.8;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid motion script: {0}")]
    InvalidScript(String),
}

/// One scripted motion segment. All segments ramp their speeds up from and
/// back down to zero, so velocity is continuous across segment boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    /// Translation at a fixed heading with target body velocity (vx, vy) m/s.
    Line { vx: f64, vy: f64 },
    /// Constant-curvature arc: target forward speed (m/s) and yaw rate
    /// (rad/s); curvature is `yaw_rate / speed`.
    Arc { speed: f64, yaw_rate: f64 },
    /// Rotation in place at the target yaw rate, rad/s.
    Spin { yaw_rate: f64 },
    /// No motion.
    Pause,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub duration: f64,
}

/// True mounting of the IMU on the chassis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountingTruth {
    /// Lever arm from chassis center to the IMU's planar projection, m.
    pub p_f_o: Vector2<f64>,
    /// Heading of the F frame in the chassis frame, rad.
    pub theta_f_o: f64,
    /// IMU pitch relative to the chassis plane, rad.
    pub tilt_pitch: f64,
    /// IMU roll relative to the chassis plane, rad.
    pub tilt_roll: f64,
    /// Height of the IMU above the chassis plane, m.
    pub p_bz_o: f64,
}

/// VIO measurement corruption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VioNoise {
    /// Per-pose white position noise, m.
    pub position_std: f64,
    /// Per-pose white yaw noise, rad.
    pub yaw_std: f64,
    /// Position random-walk density, m/√s.
    pub drift_rate: f64,
}

impl VioNoise {
    pub fn zero() -> Self {
        VioNoise {
            position_std: 0.0,
            yaw_std: 0.0,
            drift_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Total duration, s. Must equal the sum of segment durations.
    pub duration: f64,
    pub sample_rate_imu: f64,
    pub sample_rate_odom: f64,
    pub motion_script: Vec<Segment>,
    pub mounting: MountingTruth,
    pub imu_intrinsics: ImuIntrinsics,
    pub imu_noise: ImuNoiseParams,
    /// True chassis velocity scale errors.
    pub chassis_scale: ChassisScale,
    /// White noise on the measured chassis velocity (vx, vy, omega).
    pub chassis_noise_std: Vector3<f64>,
    pub vio_noise: VioNoise,
    pub seed: u64,
}

impl ScenarioSpec {
    /// The ground-truth extrinsic parameter vector this scenario encodes.
    pub fn true_extrinsics(&self) -> ExtrinsicParams {
        ExtrinsicParams {
            p: self.mounting.p_f_o,
            theta: self.mounting.theta_f_o,
            q_x: 1.0 / self.chassis_scale.s_x,
            q_y: 1.0 / self.chassis_scale.s_y,
        }
    }

    /// Copy with every noise source zeroed (systematic errors kept).
    pub fn without_noise(&self) -> Self {
        ScenarioSpec {
            imu_noise: ImuNoiseParams::zero(),
            chassis_noise_std: Vector3::zeros(),
            vio_noise: VioNoise::zero(),
            ..self.clone()
        }
    }
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub imu_stream: Vec<ImuSample>,
    /// Measured (scale-corrupted, optionally noisy) wheel-odometry path.
    pub odom_path: Vec<StampedPose2>,
    /// Measured VIO path: IMU body poses in the world frame plus noise.
    pub vio_path: Vec<StampedPose3>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub extrinsics: ExtrinsicParams,
    pub tilt_pitch: f64,
    pub tilt_roll: f64,
    pub p_bz_o: f64,
    pub scale: ChassisScale,
    /// True chassis pose in the world frame, at the odometry rate.
    pub chassis_path: Vec<StampedPose2>,
    /// True IMU body pose in the world frame (the noise-free VIO path).
    pub body_path: Vec<StampedPose3>,
}

// ---------------------------------------------------------------------------
// Analytic motion profile
// ---------------------------------------------------------------------------

/// Maximum ramp time of the trapezoidal speed profile, s.
const RAMP_S: f64 = 0.5;

/// Kinematic state of the chassis at one instant.
#[derive(Debug, Clone, Copy)]
struct MotionState {
    theta: f64,
    p: Vector2<f64>,
    /// Body-frame velocity (vx, vy), m/s.
    v_body: Vector2<f64>,
    omega: f64,
    /// World-frame acceleration of the chassis origin, m/s².
    a_world: Vector2<f64>,
    /// Yaw acceleration, rad/s².
    alpha: f64,
}

#[derive(Debug, Clone, Copy)]
struct SegmentProfile {
    t_start: f64,
    duration: f64,
    ramp: f64,
    kind: SegmentKind,
    theta0: f64,
    p0: Vector2<f64>,
}

/// Trapezoidal profile scalar: (u, du/dt, integral of u from 0 to tau).
fn trapezoid(tau: f64, duration: f64, ramp: f64) -> (f64, f64, f64) {
    let tau = tau.clamp(0.0, duration);
    if ramp <= 0.0 {
        return (1.0, 0.0, tau);
    }
    if tau <= ramp {
        (tau / ramp, 1.0 / ramp, tau * tau / (2.0 * ramp))
    } else if tau <= duration - ramp {
        (1.0, 0.0, ramp / 2.0 + (tau - ramp))
    } else {
        let remaining = duration - tau;
        (
            remaining / ramp,
            -1.0 / ramp,
            ramp / 2.0
                + (duration - 2.0 * ramp)
                + (ramp * ramp - remaining * remaining) / (2.0 * ramp),
        )
    }
}

struct MotionProfile {
    segments: Vec<SegmentProfile>,
    duration: f64,
}

impl MotionProfile {
    fn build(script: &[Segment]) -> Result<Self, SimError> {
        if script.is_empty() {
            return Err(SimError::InvalidScript("motion script is empty".into()));
        }
        let mut segments = Vec::with_capacity(script.len());
        let mut t = 0.0;
        let mut theta = 0.0;
        let mut p = Vector2::zeros();
        for (i, seg) in script.iter().enumerate() {
            if !seg.duration.is_finite() || seg.duration <= 0.0 {
                return Err(SimError::InvalidScript(format!(
                    "segment {i} has non-positive duration {}",
                    seg.duration
                )));
            }
            match seg.kind {
                SegmentKind::Arc { speed, yaw_rate } if speed == 0.0 || yaw_rate == 0.0 => {
                    return Err(SimError::InvalidScript(format!(
                        "segment {i}: arc needs nonzero speed and yaw_rate (got {speed}, {yaw_rate})"
                    )));
                }
                SegmentKind::Line { vx, vy } if !vx.is_finite() || !vy.is_finite() => {
                    return Err(SimError::InvalidScript(format!(
                        "segment {i}: non-finite speeds"
                    )));
                }
                _ => {}
            }
            let ramp = match seg.kind {
                SegmentKind::Pause => 0.0,
                _ => RAMP_S.min(seg.duration / 4.0),
            };
            let profile = SegmentProfile {
                t_start: t,
                duration: seg.duration,
                ramp,
                kind: seg.kind,
                theta0: theta,
                p0: p,
            };
            let end = eval_segment(&profile, seg.duration);
            theta = end.theta;
            p = end.p;
            t += seg.duration;
            segments.push(profile);
        }
        Ok(MotionProfile {
            segments,
            duration: t,
        })
    }

    fn eval(&self, t: f64) -> MotionState {
        let t = t.clamp(0.0, self.duration);
        let idx = self
            .segments
            .partition_point(|s| s.t_start <= t)
            .saturating_sub(1);
        let seg = &self.segments[idx];
        eval_segment(seg, t - seg.t_start)
    }
}

fn eval_segment(seg: &SegmentProfile, tau: f64) -> MotionState {
    let (u, du, integral) = trapezoid(tau, seg.duration, seg.ramp);
    match seg.kind {
        SegmentKind::Pause => MotionState {
            theta: seg.theta0,
            p: seg.p0,
            v_body: Vector2::zeros(),
            omega: 0.0,
            a_world: Vector2::zeros(),
            alpha: 0.0,
        },
        SegmentKind::Spin { yaw_rate } => MotionState {
            theta: seg.theta0 + yaw_rate * integral,
            p: seg.p0,
            v_body: Vector2::zeros(),
            omega: yaw_rate * u,
            a_world: Vector2::zeros(),
            alpha: yaw_rate * du,
        },
        SegmentKind::Line { vx, vy } => {
            let dir = Rot2::new(seg.theta0).apply(&Vector2::new(vx, vy));
            MotionState {
                theta: seg.theta0,
                p: seg.p0 + dir * integral,
                v_body: Vector2::new(vx * u, vy * u),
                omega: 0.0,
                a_world: dir * du,
                alpha: 0.0,
            }
        }
        SegmentKind::Arc { speed, yaw_rate } => {
            // Constant curvature: heading is proportional to arc length, so
            // the path is an exact circle whatever the speed profile.
            let kappa = yaw_rate / speed;
            let theta = seg.theta0 + yaw_rate * integral;
            let p = seg.p0
                + Vector2::new(
                    (theta.sin() - seg.theta0.sin()) / kappa,
                    -(theta.cos() - seg.theta0.cos()) / kappa,
                );
            let heading = Vector2::new(theta.cos(), theta.sin());
            let normal = Vector2::new(-theta.sin(), theta.cos());
            MotionState {
                theta,
                p,
                v_body: Vector2::new(speed * u, 0.0),
                omega: yaw_rate * u,
                a_world: heading * (speed * du) + normal * (speed * u * yaw_rate * u),
                alpha: yaw_rate * du,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

// Noise stream ids; each source draws from its own ChaCha stream so sensor
// outputs are independent of each other's sampling order.
const STREAM_GYRO_WHITE: u64 = 0;
const STREAM_ACCEL_WHITE: u64 = 1;
const STREAM_GYRO_BIAS: u64 = 2;
const STREAM_ACCEL_BIAS: u64 = 3;
const STREAM_ODOM: u64 = 4;
const STREAM_VIO: u64 = 5;

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs a scenario: integrates the script, derives true sensor signals, and
/// corrupts them per the scenario's error parameters.
pub fn generate(spec: &ScenarioSpec) -> Result<Dataset, SimError> {
    if !spec.duration.is_finite() || spec.duration <= 0.0 {
        return Err(SimError::InvalidScript(format!(
            "duration {} must be > 0",
            spec.duration
        )));
    }
    if !(spec.sample_rate_imu.is_finite() && spec.sample_rate_imu > 0.0)
        || !(spec.sample_rate_odom.is_finite() && spec.sample_rate_odom > 0.0)
    {
        return Err(SimError::InvalidScript("sample rates must be > 0".into()));
    }
    let profile = MotionProfile::build(&spec.motion_script)?;
    if (profile.duration - spec.duration).abs() > 1e-9 {
        return Err(SimError::InvalidScript(format!(
            "segment durations sum to {} but duration is {}",
            profile.duration, spec.duration
        )));
    }

    let r_b_o = rot_from_ypr(&EulerYPR {
        yaw: spec.mounting.theta_f_o,
        pitch: spec.mounting.tilt_pitch,
        roll: spec.mounting.tilt_roll,
    });
    let r_o_b = r_b_o.transpose();

    let imu_stream = generate_imu(spec, &profile, &r_o_b);
    let chassis_path = sample_true_path(&profile, spec.sample_rate_odom, spec.duration);
    let odom_path = generate_odom(spec, &profile)?;
    let body_path = body_poses(spec, &profile, &r_b_o);
    let vio_path = corrupt_vio(spec, &body_path);

    Ok(Dataset {
        imu_stream,
        odom_path,
        vio_path,
        truth: GroundTruth {
            extrinsics: spec.true_extrinsics(),
            tilt_pitch: spec.mounting.tilt_pitch,
            tilt_roll: spec.mounting.tilt_roll,
            p_bz_o: spec.mounting.p_bz_o,
            scale: spec.chassis_scale,
            chassis_path,
            body_path,
        },
    })
}

/// True IMU signals at one instant, before any corruption.
pub fn true_imu_signals(
    state_theta: f64,
    omega: f64,
    alpha: f64,
    a_world: &Vector2<f64>,
    r_o_b: &Rot3,
    p_b_o: &Vector2<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let gyro = r_o_b.apply(&Vector3::new(0.0, 0.0, omega));
    // Lever arm in world: alpha x r and omega x (omega x r) terms.
    let r_w = Rot2::new(state_theta).apply(p_b_o);
    let a_imu = a_world + Vector2::new(-alpha * r_w.y, alpha * r_w.x) - r_w * (omega * omega);
    let f_world = Vector3::new(a_imu.x, a_imu.y, GRAVITY);
    let f_chassis = Rot2::new(-state_theta).apply(&Vector2::new(f_world.x, f_world.y));
    let accel = r_o_b.apply(&Vector3::new(f_chassis.x, f_chassis.y, f_world.z));
    (gyro, accel)
}

fn generate_imu(spec: &ScenarioSpec, profile: &MotionProfile, r_o_b: &Rot3) -> Vec<ImuSample> {
    let dt = 1.0 / spec.sample_rate_imu;
    let n = (spec.duration * spec.sample_rate_imu).round() as usize;
    let mut gyro_white = stream_rng(spec.seed, STREAM_GYRO_WHITE);
    let mut accel_white = stream_rng(spec.seed, STREAM_ACCEL_WHITE);
    let mut gyro_bias_rng = stream_rng(spec.seed, STREAM_GYRO_BIAS);
    let mut accel_bias_rng = stream_rng(spec.seed, STREAM_ACCEL_BIAS);
    let mut gyro_bias = Vector3::zeros();
    let mut accel_bias = Vector3::zeros();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let state = profile.eval(t);
        let (gyro_true, accel_true) = true_imu_signals(
            state.theta,
            state.omega,
            state.alpha,
            &state.a_world,
            r_o_b,
            &spec.mounting.p_f_o,
        );
        gyro_bias = evolve_bias(
            &gyro_bias,
            &spec.imu_noise.gyro_bias_instability,
            dt,
            &mut gyro_bias_rng,
        );
        accel_bias = evolve_bias(
            &accel_bias,
            &spec.imu_noise.accel_bias_instability,
            dt,
            &mut accel_bias_rng,
        );
        // Intrinsics were validated at scenario construction; the only
        // failure mode is a non-invertible scale, which validate() rejects.
        let gyro = simulate_gyro(
            &gyro_true,
            &spec.imu_intrinsics,
            &spec.imu_noise,
            dt,
            &mut gyro_white,
        )
        .expect("scenario intrinsics must be invertible")
            - gyro_bias;
        let accel = simulate_accel(
            &accel_true,
            &spec.imu_intrinsics,
            &spec.imu_noise,
            dt,
            &mut accel_white,
        )
        .expect("scenario intrinsics must be invertible")
            - accel_bias;
        out.push(ImuSample { t, gyro, accel });
    }
    out
}

fn sample_true_path(profile: &MotionProfile, rate: f64, duration: f64) -> Vec<StampedPose2> {
    let dt = 1.0 / rate;
    let n = (duration * rate).round() as usize;
    (0..n)
        .map(|j| {
            let t = j as f64 * dt;
            let s = profile.eval(t);
            StampedPose2 {
                t,
                pose: Pose2::new(wrap_angle(s.theta), s.p.x, s.p.y),
            }
        })
        .collect()
}

/// Scales script speeds by the chassis error matrix: the measured odometry
/// path of the true script is exactly the true path of the scaled script.
fn scaled_script(script: &[Segment], k: &ChassisScale) -> Vec<Segment> {
    script
        .iter()
        .map(|seg| Segment {
            duration: seg.duration,
            kind: match seg.kind {
                SegmentKind::Pause => SegmentKind::Pause,
                SegmentKind::Spin { yaw_rate } => SegmentKind::Spin {
                    yaw_rate: k.s_z * yaw_rate,
                },
                SegmentKind::Line { vx, vy } => SegmentKind::Line {
                    vx: k.s_x * vx,
                    vy: k.s_y * vy,
                },
                SegmentKind::Arc { speed, yaw_rate } => SegmentKind::Arc {
                    speed: k.s_x * speed,
                    yaw_rate: k.s_z * yaw_rate,
                },
            },
        })
        .collect()
}

fn generate_odom(
    spec: &ScenarioSpec,
    profile: &MotionProfile,
) -> Result<Vec<StampedPose2>, SimError> {
    if spec.chassis_noise_std == Vector3::zeros() {
        // Closed form: evaluate the scaled script.
        let scaled =
            MotionProfile::build(&scaled_script(&spec.motion_script, &spec.chassis_scale))?;
        return Ok(sample_true_path(
            &scaled,
            spec.sample_rate_odom,
            spec.duration,
        ));
    }
    // Velocity noise forces numerical integration of the measured stream.
    let dt = 1.0 / spec.sample_rate_odom;
    let n = (spec.duration * spec.sample_rate_odom).round() as usize;
    let mut rng = stream_rng(spec.seed, STREAM_ODOM);
    let measured: Vec<StampedVelocity> = (0..n)
        .map(|j| {
            let t = j as f64 * dt;
            let s = profile.eval(t);
            let v = BodyVelocity {
                vx: s.v_body.x,
                vy: s.v_body.y,
                omega: s.omega,
            };
            StampedVelocity {
                t,
                v: measure_velocity(&v, &spec.chassis_scale, &spec.chassis_noise_std, &mut rng),
            }
        })
        .collect();
    dead_reckon(&measured, &ChassisScale::unit())
        .map_err(|e| SimError::InvalidScript(e.to_string()))
}

fn body_poses(spec: &ScenarioSpec, profile: &MotionProfile, r_b_o: &Rot3) -> Vec<StampedPose3> {
    let dt = 1.0 / spec.sample_rate_odom;
    let n = (spec.duration * spec.sample_rate_odom).round() as usize;
    let p_b_o = Vector3::new(
        spec.mounting.p_f_o.x,
        spec.mounting.p_f_o.y,
        spec.mounting.p_bz_o,
    );
    (0..n)
        .map(|j| {
            let t = j as f64 * dt;
            let s = profile.eval(t);
            let world_yaw = rot_from_ypr(&EulerYPR {
                yaw: s.theta,
                pitch: 0.0,
                roll: 0.0,
            });
            let p_xy = s.p + Rot2::new(s.theta).apply(&spec.mounting.p_f_o);
            StampedPose3 {
                t,
                pose: Pose3 {
                    rot: world_yaw.compose(r_b_o),
                    p: Vector3::new(p_xy.x, p_xy.y, p_b_o.z),
                },
            }
        })
        .collect()
}

fn corrupt_vio(spec: &ScenarioSpec, body_path: &[StampedPose3]) -> Vec<StampedPose3> {
    let noise = spec.vio_noise;
    if noise.position_std == 0.0 && noise.yaw_std == 0.0 && noise.drift_rate == 0.0 {
        return body_path.to_vec();
    }
    let mut rng = stream_rng(spec.seed, STREAM_VIO);
    let dt = 1.0 / spec.sample_rate_odom;
    let mut drift = Vector3::zeros();
    body_path
        .iter()
        .map(|sp| {
            for i in 0..3 {
                if noise.drift_rate > 0.0 {
                    let w: f64 = rng.sample(StandardNormal);
                    drift[i] += w * noise.drift_rate * dt.sqrt();
                }
            }
            let mut p = sp.pose.p + drift;
            if noise.position_std > 0.0 {
                for i in 0..3 {
                    let w: f64 = rng.sample(StandardNormal);
                    p[i] += w * noise.position_std;
                }
            }
            let rot = if noise.yaw_std > 0.0 {
                let w: f64 = rng.sample(StandardNormal);
                rot_from_ypr(&EulerYPR {
                    yaw: w * noise.yaw_std,
                    pitch: 0.0,
                    roll: 0.0,
                })
                .compose(&sp.pose.rot)
            } else {
                sp.pose.rot
            };
            StampedPose3 {
                t: sp.t,
                pose: Pose3 { rot, p },
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Standard scenarios
// ---------------------------------------------------------------------------

fn default_mounting() -> MountingTruth {
    MountingTruth {
        p_f_o: Vector2::new(0.1008, 0.064),
        theta_f_o: -89.29_f64.to_radians(),
        tilt_pitch: 3.0_f64.to_radians(),
        tilt_roll: -91.0_f64.to_radians(),
        p_bz_o: 0.3,
    }
}

fn default_scale() -> ChassisScale {
    // Inverse scales 0.99733 and 1.0374 from the reference experiment.
    ChassisScale {
        s_x: 1.0 / 0.99733,
        s_y: 1.0 / 1.0374,
        s_z: 1.0,
    }
}

fn default_vio_noise() -> VioNoise {
    VioNoise {
        position_std: 0.002,
        yaw_std: 0.05_f64.to_radians(),
        drift_rate: 0.0,
    }
}

/// Spin-heavy script for tilt calibration: stationary lead-in for the bias
/// window, then spins in both directions.
pub fn tilt_cal_scenario() -> ScenarioSpec {
    let script = vec![
        Segment {
            kind: SegmentKind::Pause,
            duration: 3.0,
        },
        Segment {
            kind: SegmentKind::Spin { yaw_rate: 0.9 },
            duration: 12.0,
        },
        Segment {
            kind: SegmentKind::Pause,
            duration: 2.0,
        },
        Segment {
            kind: SegmentKind::Spin { yaw_rate: -0.8 },
            duration: 14.0,
        },
        Segment {
            kind: SegmentKind::Pause,
            duration: 2.0,
        },
        Segment {
            kind: SegmentKind::Spin { yaw_rate: 0.7 },
            duration: 12.0,
        },
        Segment {
            kind: SegmentKind::Pause,
            duration: 2.0,
        },
        Segment {
            kind: SegmentKind::Spin { yaw_rate: -0.9 },
            duration: 14.0,
        },
        Segment {
            kind: SegmentKind::Pause,
            duration: 3.0,
        },
    ];
    ScenarioSpec {
        duration: 64.0,
        sample_rate_imu: 200.0,
        sample_rate_odom: 50.0,
        motion_script: script,
        mounting: default_mounting(),
        imu_intrinsics: ImuIntrinsics::bmi055(),
        imu_noise: ImuNoiseParams::bmi055(),
        chassis_scale: default_scale(),
        chassis_noise_std: Vector3::zeros(),
        vio_noise: default_vio_noise(),
        seed: 1,
    }
}

/// Mixed spins and straight runs (forward, strafe, diagonal) separated by
/// pauses longer than the pairing interval, for extrinsic calibration. The
/// spins provide the rotation excitation the lever arm needs; the
/// translations in both body axes make both scale factors observable.
pub fn extrinsics_cal_scenario() -> ScenarioSpec {
    let block = |sign: f64| {
        vec![
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Line { vx: 0.4, vy: 0.0 },
                duration: 4.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Spin {
                    yaw_rate: 0.9 * sign,
                },
                duration: 4.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Line { vx: 0.0, vy: 0.35 },
                duration: 4.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Spin {
                    yaw_rate: -0.7 * sign,
                },
                duration: 5.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Line { vx: 0.3, vy: -0.3 },
                duration: 4.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Spin {
                    yaw_rate: 0.5 * sign,
                },
                duration: 6.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Line { vx: -0.35, vy: 0.0 },
                duration: 3.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Spin {
                    yaw_rate: -0.9 * sign,
                },
                duration: 4.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Line { vx: 0.0, vy: -0.3 },
                duration: 4.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Spin {
                    yaw_rate: 0.8 * sign,
                },
                duration: 5.0,
            },
        ]
    };
    let mut script = block(1.0);
    script.extend(block(-1.0));
    script.push(Segment {
        kind: SegmentKind::Pause,
        duration: 2.0,
    });
    ScenarioSpec {
        duration: 108.0,
        sample_rate_imu: 200.0,
        sample_rate_odom: 100.0,
        motion_script: script,
        mounting: default_mounting(),
        imu_intrinsics: ImuIntrinsics::bmi055(),
        imu_noise: ImuNoiseParams::bmi055(),
        chassis_scale: default_scale(),
        chassis_noise_std: Vector3::zeros(),
        vio_noise: default_vio_noise(),
        seed: 1,
    }
}

/// Ten stationary hours for Allan-variance noise identification.
pub fn still_10h_scenario() -> ScenarioSpec {
    ScenarioSpec {
        duration: 36_000.0,
        sample_rate_imu: 100.0,
        sample_rate_odom: 1.0,
        motion_script: vec![Segment {
            kind: SegmentKind::Pause,
            duration: 36_000.0,
        }],
        mounting: default_mounting(),
        imu_intrinsics: ImuIntrinsics::bmi055(),
        imu_noise: ImuNoiseParams::bmi055(),
        chassis_scale: default_scale(),
        chassis_noise_std: Vector3::zeros(),
        vio_noise: VioNoise::zero(),
        seed: 1,
    }
}

/// All shipped scenarios by name.
pub fn standard_scenarios() -> Vec<(&'static str, ScenarioSpec)> {
    vec![
        ("tilt-cal", tilt_cal_scenario()),
        ("extrinsics-cal", extrinsics_cal_scenario()),
        ("still-10h", still_10h_scenario()),
    ]
}

/// Looks a shipped scenario up by name.
pub fn scenario_by_name(name: &str) -> Option<ScenarioSpec> {
    standard_scenarios()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, spec)| spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chassis::correct_velocity;
    use crate::extrinsics::{build_pose_pairs, residual, solve, vio_path_to_f, SolverConfig};
    use crate::pca::{estimate_tilt, TiltConfig, TiltResult};
    use approx::assert_abs_diff_eq;

    fn still_spec(duration: f64) -> ScenarioSpec {
        ScenarioSpec {
            duration,
            sample_rate_imu: 100.0,
            sample_rate_odom: 10.0,
            motion_script: vec![Segment {
                kind: SegmentKind::Pause,
                duration,
            }],
            mounting: default_mounting(),
            imu_intrinsics: ImuIntrinsics::identity(),
            imu_noise: ImuNoiseParams::zero(),
            chassis_scale: ChassisScale::unit(),
            chassis_noise_std: Vector3::zeros(),
            vio_noise: VioNoise::zero(),
            seed: 7,
        }
    }

    #[test]
    fn pause_scenario_is_gravity_only() {
        let ds = generate(&still_spec(10.0)).unwrap();
        let r_o_b = rot_from_ypr(&EulerYPR {
            yaw: default_mounting().theta_f_o,
            pitch: default_mounting().tilt_pitch,
            roll: default_mounting().tilt_roll,
        })
        .transpose();
        let expected_accel = r_o_b.apply(&Vector3::new(0.0, 0.0, GRAVITY));
        for s in &ds.imu_stream {
            assert!(s.gyro.norm() < 1e-15, "gyro {:?}", s.gyro);
            assert!((s.accel - expected_accel).norm() < 1e-12);
        }
        for sp in &ds.odom_path {
            assert!(sp.pose.p.norm() < 1e-15);
        }
        for sp in &ds.vio_path {
            assert_abs_diff_eq!(sp.pose.p.z, 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn spin_scenario_gyro_magnitude_matches_script() {
        let mut spec = still_spec(20.0);
        spec.motion_script = vec![
            Segment {
                kind: SegmentKind::Pause,
                duration: 2.0,
            },
            Segment {
                kind: SegmentKind::Spin { yaw_rate: 0.8 },
                duration: 16.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 2.0,
            },
        ];
        let ds = generate(&spec).unwrap();
        let profile = MotionProfile::build(&spec.motion_script).unwrap();
        for s in &ds.imu_stream {
            let omega = profile.eval(s.t).omega;
            assert!(
                (s.gyro.norm() - omega.abs()).abs() < 1e-12,
                "t={} |gyro|={} omega={omega}",
                s.t,
                s.gyro.norm()
            );
        }
        // Plateau reaches the scripted rate.
        let mid = profile.eval(10.0);
        assert_abs_diff_eq!(mid.omega, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn zero_tilt_spin_gyro_is_pure_z() {
        let mut spec = still_spec(12.0);
        spec.mounting = MountingTruth {
            p_f_o: Vector2::zeros(),
            theta_f_o: 0.0,
            tilt_pitch: 0.0,
            tilt_roll: 0.0,
            p_bz_o: 0.0,
        };
        spec.motion_script = vec![
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Spin { yaw_rate: 0.6 },
                duration: 10.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
        ];
        let ds = generate(&spec).unwrap();
        let profile = MotionProfile::build(&spec.motion_script).unwrap();
        for s in &ds.imu_stream {
            let omega = profile.eval(s.t).omega;
            assert!(s.gyro.x.abs() < 1e-15 && s.gyro.y.abs() < 1e-15);
            assert_abs_diff_eq!(s.gyro.z, omega, epsilon = 1e-12);
        }
    }

    #[test]
    fn arc_odometry_corrected_by_inverse_scales_matches_truth() {
        let mut spec = still_spec(60.0);
        spec.chassis_scale = default_scale();
        spec.sample_rate_odom = 100.0;
        spec.motion_script = vec![
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
            Segment {
                kind: SegmentKind::Arc {
                    speed: 0.4,
                    yaw_rate: 0.3,
                },
                duration: 58.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 1.0,
            },
        ];
        let ds = generate(&spec).unwrap();
        // Rebuild the measured velocity stream, correct by true inverse
        // scales, and dead-reckon: must land on the true path.
        let profile = MotionProfile::build(&spec.motion_script).unwrap();
        let k_inv = spec.chassis_scale.inverse();
        let measured: Vec<StampedVelocity> = ds
            .odom_path
            .iter()
            .map(|sp| {
                let s = profile.eval(sp.t);
                let v = BodyVelocity {
                    vx: s.v_body.x,
                    vy: s.v_body.y,
                    omega: s.omega,
                };
                let mut rng = ChaCha12Rng::seed_from_u64(0);
                StampedVelocity {
                    t: sp.t,
                    v: measure_velocity(&v, &spec.chassis_scale, &Vector3::zeros(), &mut rng),
                }
            })
            .collect();
        let corrected: Vec<StampedVelocity> = measured
            .iter()
            .map(|sv| StampedVelocity {
                t: sv.t,
                v: correct_velocity(&sv.v, &k_inv),
            })
            .collect();
        let reckoned = dead_reckon(&corrected, &ChassisScale::unit()).unwrap();
        for (a, b) in reckoned.iter().zip(&ds.truth.chassis_path).step_by(200) {
            assert!(
                (a.pose.p - b.pose.p).norm() < 1e-4,
                "t={}: {:?} vs {:?}",
                a.t,
                a.pose.p,
                b.pose.p
            );
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut spec = tilt_cal_scenario();
        spec.duration = 33.0;
        spec.motion_script = vec![
            Segment {
                kind: SegmentKind::Pause,
                duration: 3.0,
            },
            Segment {
                kind: SegmentKind::Spin { yaw_rate: 0.9 },
                duration: 12.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 2.0,
            },
            Segment {
                kind: SegmentKind::Spin { yaw_rate: -0.8 },
                duration: 14.0,
            },
            Segment {
                kind: SegmentKind::Pause,
                duration: 2.0,
            },
        ];
        spec.chassis_noise_std = Vector3::new(1e-3, 1e-3, 1e-4);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);

        let mut other = spec.clone();
        other.seed = 2;
        let c = generate(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_scripts_rejected() {
        let mut spec = still_spec(10.0);
        spec.motion_script = vec![];
        assert!(matches!(generate(&spec), Err(SimError::InvalidScript(_))));

        let mut spec = still_spec(10.0);
        spec.motion_script = vec![Segment {
            kind: SegmentKind::Pause,
            duration: 8.0,
        }];
        assert!(matches!(generate(&spec), Err(SimError::InvalidScript(_))));

        let mut spec = still_spec(10.0);
        spec.motion_script = vec![Segment {
            kind: SegmentKind::Arc {
                speed: 0.0,
                yaw_rate: 0.5,
            },
            duration: 10.0,
        }];
        assert!(matches!(generate(&spec), Err(SimError::InvalidScript(_))));
    }

    #[test]
    fn shipped_scenarios_generate() {
        for (name, spec) in standard_scenarios() {
            let sum: f64 = spec.motion_script.iter().map(|s| s.duration).sum();
            assert!((sum - spec.duration).abs() < 1e-9, "{name} durations");
            if name == "still-10h" {
                assert_eq!(spec.duration, 36_000.0);
                assert_eq!(spec.motion_script.len(), 1);
            }
            let ds = generate(&spec).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(
                ds.imu_stream.len(),
                (spec.duration * spec.sample_rate_imu).round() as usize,
                "{name} imu rows"
            );
        }
        assert!(scenario_by_name("extrinsics-cal").is_some());
        assert!(scenario_by_name("nope").is_none());
    }

    #[test]
    fn extrinsics_scenario_has_rotation_excitation() {
        let spec = extrinsics_cal_scenario().without_noise();
        let ds = generate(&spec).unwrap();
        let tilt = TiltResult {
            pitch: spec.mounting.tilt_pitch,
            roll: spec.mounting.tilt_roll,
            v_max: Vector3::z(),
            eigenvalues: Vector3::new(1.0, 0.0, 0.0),
            n_samples: 0,
        };
        let path_f = vio_path_to_f(&ds.vio_path, &tilt, spec.mounting.p_bz_o);
        let pairs = build_pose_pairs(&path_f, &ds.odom_path, 0.5).unwrap();
        let rotating = pairs.iter().filter(|p| p.dtheta.abs() > 0.05).count();
        assert!(rotating > 20, "only {rotating} rotating pairs");
        assert!(pairs.len() >= 200);
    }

    #[test]
    fn noise_free_pipeline_recovers_ground_truth() {
        let spec = extrinsics_cal_scenario().without_noise();
        let ds = generate(&spec).unwrap();

        // Tilt stage, on the intrinsics-corrected stream.
        let corrected: Vec<ImuSample> = ds
            .imu_stream
            .iter()
            .map(|s| crate::imu::correct_sample(s, &spec.imu_intrinsics))
            .collect();
        let prior = rot_from_ypr(&EulerYPR {
            yaw: spec.mounting.theta_f_o,
            pitch: 0.0,
            roll: -90_f64.to_radians(),
        });
        let tilt = estimate_tilt(
            &corrected,
            &TiltConfig {
                min_rate: 0.2,
                prior_r_b_o: prior,
            },
        )
        .unwrap();
        assert!(
            (tilt.pitch - spec.mounting.tilt_pitch).abs() < 1e-9,
            "pitch {}",
            tilt.pitch
        );
        assert!(
            (tilt.roll - spec.mounting.tilt_roll).abs() < 1e-9,
            "roll {}",
            tilt.roll
        );

        // Extrinsics stage.
        let path_f = vio_path_to_f(&ds.vio_path, &tilt, spec.mounting.p_bz_o);
        let pairs = build_pose_pairs(&path_f, &ds.odom_path, 0.5).unwrap();
        let truth = ds.truth.extrinsics;
        for pair in &pairs {
            assert!(
                residual(&truth, pair).norm() < 1e-9,
                "pair at {}",
                pair.t_start
            );
        }
        let report = solve(&pairs, &SolverConfig::default()).unwrap();
        assert!((report.x_star.p - truth.p).norm() < 1e-6);
        assert!((report.x_star.theta - truth.theta).abs() < 1e-6);
        assert!((report.x_star.q_x - truth.q_x).abs() < 1e-6);
        assert!((report.x_star.q_y - truth.q_y).abs() < 1e-6);
    }

    #[test]
    fn vio_noise_free_path_matches_truth_in_f() {
        let spec = extrinsics_cal_scenario().without_noise();
        let ds = generate(&spec).unwrap();
        let tilt = TiltResult {
            pitch: spec.mounting.tilt_pitch,
            roll: spec.mounting.tilt_roll,
            v_max: Vector3::z(),
            eigenvalues: Vector3::new(1.0, 0.0, 0.0),
            n_samples: 0,
        };
        let path_f = vio_path_to_f(&ds.vio_path, &tilt, spec.mounting.p_bz_o);
        // The F path must be the chassis path displaced by the rotating
        // lever arm, with yaw offset theta_f_o.
        for (f, o) in path_f.iter().zip(&ds.truth.chassis_path) {
            let expected_p = o.pose.p + Rot2::new(o.pose.rot.theta).apply(&spec.mounting.p_f_o);
            assert!((f.pose.p - expected_p).norm() < 1e-9);
            let expected_yaw = wrap_angle(o.pose.rot.theta + spec.mounting.theta_f_o);
            assert!((wrap_angle(f.pose.rot.theta - expected_yaw)).abs() < 1e-9);
        }
    }
}
