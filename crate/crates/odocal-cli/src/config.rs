//! Calibration config file: JSON schema and conversion into core types.
//!
//! Unknown keys are rejected everywhere so typos cannot silently change a
//! calibration run. Angles are degrees in the file and radians internally;
//! sensor noise densities stay in SI units.
//!
//! Blocks are individually optional; each subcommand checks that the
//! blocks it needs are present.

use crate::error::CliError;
use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};
use odocal::chassis::{ChassisScale, MecanumGeometry};
use odocal::extrinsics::{ExtrinsicParams, Loss, SolverConfig};
use odocal::geometry::{rot_from_ypr, EulerYPR, Rot3};
use odocal::imu::{ImuIntrinsics, ImuNoiseParams};
use odocal::pca::TiltConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imu: Option<ImuBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cameras: Vec<CameraBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis: Option<ChassisBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mounting: Option<MountingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ImuBlock {
    pub intrinsics: ImuIntrinsicsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<ImuNoiseBlock>,
}

/// Row-major 3x3 deviation matrices, per-axis scales, and zero offsets.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ImuIntrinsicsBlock {
    #[serde(rename = "T_a")]
    pub t_a: [f64; 9],
    #[serde(rename = "K_a")]
    pub k_a: [f64; 3],
    pub b_a: [f64; 3],
    #[serde(rename = "T_g")]
    pub t_g: [f64; 9],
    #[serde(rename = "K_g")]
    pub k_g: [f64; 3],
    pub b_g: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ImuNoiseBlock {
    pub accel_white: [f64; 3],
    pub gyro_white: [f64; 3],
    pub accel_bias_instability: [f64; 3],
    pub gyro_bias_instability: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CameraBlock {
    pub name: String,
    /// "pinhole" or "unified".
    pub model: String,
    /// `[fx, fy, cx, cy]` or `[fx, fy, cx, cy, alpha]`, pixels.
    pub intrinsics: Vec<f64>,
    /// `[k1, k2, p1, p2]` or `[k1, k2, p1, p2, k3]`.
    pub distortion: Vec<f64>,
    #[serde(default)]
    pub zeta: f64,
    /// Camera-to-IMU transform, 4x4 row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_c_b: Option<[f64; 16]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChassisBlock {
    pub wheel_radius: f64,
    pub half_length: f64,
    pub half_width: f64,
    /// `[s_x, s_y, s_z]` velocity scale errors.
    pub scales: [f64; 3],
    #[serde(default)]
    pub velocity_noise_std: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MountingBlock {
    /// Coarse mounting guess as yaw/pitch/roll, degrees.
    pub prior_r_b_o_ypr_deg: [f64; 3],
    /// Manually measured IMU height above the chassis plane, meters.
    pub p_bz_o: f64,
    /// Gyro-rate admission threshold for the tilt stage, rad/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt_min_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    /// "huber" or "none".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub huber_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<X0Block>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct X0Block {
    pub p: [f64; 2],
    pub theta_deg: f64,
    pub q: [f64; 2],
}

fn mat3(rows: &[f64; 9]) -> Matrix3<f64> {
    Matrix3::from_row_slice(rows)
}

impl Config {
    pub fn parse(content: &str, path: &Path) -> Result<Config, CliError> {
        let cfg: Config = serde_json::from_str(content)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    fn validate(&self, path: &Path) -> Result<(), CliError> {
        if let Some(imu) = &self.imu {
            imu.intrinsics
                .to_core()
                .validate()
                .map_err(|e| CliError::data(format!("{}: imu intrinsics: {e}", path.display())))?;
            if let Some(n) = &imu.noise {
                let all = n
                    .accel_white
                    .iter()
                    .chain(&n.gyro_white)
                    .chain(&n.accel_bias_instability)
                    .chain(&n.gyro_bias_instability);
                for v in all {
                    if *v < 0.0 || !v.is_finite() {
                        return Err(CliError::data(format!(
                            "{}: imu noise densities must be >= 0",
                            path.display()
                        )));
                    }
                }
            }
        }
        for cam in &self.cameras {
            cam.validate(path)?;
        }
        if let Some(ch) = &self.chassis {
            if [ch.wheel_radius, ch.half_length, ch.half_width]
                .iter()
                .any(|v| !v.is_finite() || *v <= 0.0)
            {
                return Err(CliError::data(format!(
                    "{}: chassis dimensions must be > 0",
                    path.display()
                )));
            }
            if ch.scales.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                return Err(CliError::data(format!(
                    "{}: chassis scales must be > 0",
                    path.display()
                )));
            }
        }
        if let Some(m) = &self.mounting {
            if let Some(r) = m.tilt_min_rate {
                if r < 0.0 {
                    return Err(CliError::data(format!(
                        "{}: tilt_min_rate must be >= 0",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn imu_block(&self, path: &Path) -> Result<&ImuBlock, CliError> {
        self.imu
            .as_ref()
            .ok_or_else(|| CliError::data(format!("{}: missing `imu` block", path.display())))
    }

    pub fn mounting_block(&self, path: &Path) -> Result<&MountingBlock, CliError> {
        self.mounting
            .as_ref()
            .ok_or_else(|| CliError::data(format!("{}: missing `mounting` block", path.display())))
    }

    /// Solver configuration: defaults, overlaid with the config block.
    pub fn solver_config(&self) -> SolverConfig {
        let mut out = SolverConfig::default();
        if let Some(b) = &self.solver {
            if let Some(loss) = &b.loss {
                out.loss = match loss.as_str() {
                    "none" => Loss::None,
                    _ => Loss::Huber {
                        delta: b.huber_delta.unwrap_or(0.05),
                    },
                };
            } else if let Some(delta) = b.huber_delta {
                out.loss = Loss::Huber { delta };
            }
            if let Some(v) = b.max_iterations {
                out.max_iterations = v;
            }
            if let Some(v) = b.gradient_tol {
                out.gradient_tol = v;
            }
            if let Some(v) = b.step_tol {
                out.step_tol = v;
            }
            if let Some(x0) = &b.x0 {
                out.x0 = ExtrinsicParams {
                    p: Vector2::new(x0.p[0], x0.p[1]),
                    theta: x0.theta_deg.to_radians(),
                    q_x: x0.q[0],
                    q_y: x0.q[1],
                };
            }
        }
        out
    }
}

impl ImuIntrinsicsBlock {
    pub fn to_core(&self) -> ImuIntrinsics {
        ImuIntrinsics {
            t_accel: mat3(&self.t_a),
            k_accel: Vector3::from_row_slice(&self.k_a),
            b_accel: Vector3::from_row_slice(&self.b_a),
            t_gyro: mat3(&self.t_g),
            k_gyro: Vector3::from_row_slice(&self.k_g),
            b_gyro: Vector3::from_row_slice(&self.b_g),
        }
    }

    pub fn from_core(intr: &ImuIntrinsics) -> Self {
        ImuIntrinsicsBlock {
            t_a: intr.t_accel.transpose().as_slice().try_into().unwrap(),
            k_a: [intr.k_accel.x, intr.k_accel.y, intr.k_accel.z],
            b_a: [intr.b_accel.x, intr.b_accel.y, intr.b_accel.z],
            t_g: intr.t_gyro.transpose().as_slice().try_into().unwrap(),
            k_g: [intr.k_gyro.x, intr.k_gyro.y, intr.k_gyro.z],
            b_g: [intr.b_gyro.x, intr.b_gyro.y, intr.b_gyro.z],
        }
    }
}

impl ImuNoiseBlock {
    pub fn to_core(&self) -> ImuNoiseParams {
        ImuNoiseParams {
            accel_white: Vector3::from_row_slice(&self.accel_white),
            gyro_white: Vector3::from_row_slice(&self.gyro_white),
            accel_bias_instability: Vector3::from_row_slice(&self.accel_bias_instability),
            gyro_bias_instability: Vector3::from_row_slice(&self.gyro_bias_instability),
        }
    }

    pub fn from_core(n: &ImuNoiseParams) -> Self {
        let arr = |v: &Vector3<f64>| [v.x, v.y, v.z];
        ImuNoiseBlock {
            accel_white: arr(&n.accel_white),
            gyro_white: arr(&n.gyro_white),
            accel_bias_instability: arr(&n.accel_bias_instability),
            gyro_bias_instability: arr(&n.gyro_bias_instability),
        }
    }
}

impl CameraBlock {
    fn validate(&self, path: &Path) -> Result<(), CliError> {
        if self.model != "pinhole" && self.model != "unified" {
            return Err(CliError::data(format!(
                "{}: camera `{}`: model must be \"pinhole\" or \"unified\"",
                path.display(),
                self.name
            )));
        }
        if !(self.intrinsics.len() == 4 || self.intrinsics.len() == 5) {
            return Err(CliError::data(format!(
                "{}: camera `{}`: intrinsics must be [fx, fy, cx, cy] or [fx, fy, cx, cy, alpha]",
                path.display(),
                self.name
            )));
        }
        if !(self.distortion.len() == 4 || self.distortion.len() == 5) {
            return Err(CliError::data(format!(
                "{}: camera `{}`: distortion must be [k1, k2, p1, p2] or [k1, k2, p1, p2, k3]",
                path.display(),
                self.name
            )));
        }
        if self.intrinsics[..2]
            .iter()
            .any(|f| !f.is_finite() || *f <= 0.0)
        {
            return Err(CliError::data(format!(
                "{}: camera `{}`: focal lengths must be > 0",
                path.display(),
                self.name
            )));
        }
        if self.zeta < 0.0 {
            return Err(CliError::data(format!(
                "{}: camera `{}`: zeta must be >= 0",
                path.display(),
                self.name
            )));
        }
        if let Some(t) = &self.t_c_b {
            let m = Matrix4::from_row_slice(t);
            let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
            if bottom != [0.0, 0.0, 0.0, 1.0] {
                return Err(CliError::data(format!(
                    "{}: camera `{}`: t_c_b bottom row must be [0, 0, 0, 1]",
                    path.display(),
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn pinhole(&self) -> odocal::camera::PinholeIntrinsics {
        odocal::camera::PinholeIntrinsics {
            fx: self.intrinsics[0],
            fy: self.intrinsics[1],
            cx: self.intrinsics[2],
            cy: self.intrinsics[3],
            alpha: self.intrinsics.get(4).copied().unwrap_or(0.0),
        }
    }

    pub fn distortion_params(&self) -> odocal::camera::DistortionParams {
        odocal::camera::DistortionParams {
            k1: self.distortion[0],
            k2: self.distortion[1],
            p1: self.distortion[2],
            p2: self.distortion[3],
            k3: self.distortion.get(4).copied().unwrap_or(0.0),
        }
    }
}

impl ChassisBlock {
    pub fn geometry(&self) -> MecanumGeometry {
        MecanumGeometry {
            wheel_radius: self.wheel_radius,
            half_length: self.half_length,
            half_width: self.half_width,
        }
    }

    pub fn scale(&self) -> ChassisScale {
        ChassisScale {
            s_x: self.scales[0],
            s_y: self.scales[1],
            s_z: self.scales[2],
        }
    }
}

impl MountingBlock {
    pub fn prior_rotation(&self) -> Rot3 {
        rot_from_ypr(&EulerYPR {
            yaw: self.prior_r_b_o_ypr_deg[0].to_radians(),
            pitch: self.prior_r_b_o_ypr_deg[1].to_radians(),
            roll: self.prior_r_b_o_ypr_deg[2].to_radians(),
        })
    }

    pub fn tilt_config(&self) -> TiltConfig {
        TiltConfig {
            min_rate: self.tilt_min_rate.unwrap_or(TiltConfig::default().min_rate),
            prior_r_b_o: self.prior_rotation(),
        }
    }
}
