//! Scenario files for the simulator: JSON schema with angles in degrees,
//! converted to the core (radian) representation.

use crate::config::{ImuIntrinsicsBlock, ImuNoiseBlock};
use crate::error::CliError;
use nalgebra::{Vector2, Vector3};
use odocal::chassis::ChassisScale;
use odocal::imu::{ImuIntrinsics, ImuNoiseParams};
use odocal::sim::{MountingTruth, ScenarioSpec, Segment, SegmentKind, VioNoise};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub duration_s: f64,
    pub sample_rate_imu_hz: f64,
    pub sample_rate_odom_hz: f64,
    pub motion_script: Vec<SegmentEntry>,
    pub mounting: MountingEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imu_intrinsics: Option<ImuIntrinsicsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imu_noise: Option<ImuNoiseBlock>,
    /// `[s_x, s_y, s_z]`; defaults to unit scales.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis_scales: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis_velocity_noise_std: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vio_noise: Option<VioNoiseEntry>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum SegmentEntry {
    Line {
        duration_s: f64,
        vx: f64,
        vy: f64,
    },
    Arc {
        duration_s: f64,
        speed: f64,
        yaw_rate_deg_s: f64,
    },
    Spin {
        duration_s: f64,
        yaw_rate_deg_s: f64,
    },
    Pause {
        duration_s: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountingEntry {
    pub p_f_o_m: [f64; 2],
    pub theta_f_o_deg: f64,
    pub tilt_pitch_deg: f64,
    pub tilt_roll_deg: f64,
    pub p_bz_o_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VioNoiseEntry {
    #[serde(default)]
    pub position_std_m: f64,
    #[serde(default)]
    pub yaw_std_deg: f64,
    #[serde(default)]
    pub drift_rate_m_sqrt_s: f64,
}

impl ScenarioFile {
    pub fn parse(content: &str, path: &Path) -> Result<ScenarioSpec, CliError> {
        let file: ScenarioFile = serde_json::from_str(content)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Ok(file.to_spec())
    }

    pub fn to_spec(&self) -> ScenarioSpec {
        let script = self
            .motion_script
            .iter()
            .map(|e| match *e {
                SegmentEntry::Line { duration_s, vx, vy } => Segment {
                    kind: SegmentKind::Line { vx, vy },
                    duration: duration_s,
                },
                SegmentEntry::Arc {
                    duration_s,
                    speed,
                    yaw_rate_deg_s,
                } => Segment {
                    kind: SegmentKind::Arc {
                        speed,
                        yaw_rate: yaw_rate_deg_s.to_radians(),
                    },
                    duration: duration_s,
                },
                SegmentEntry::Spin {
                    duration_s,
                    yaw_rate_deg_s,
                } => Segment {
                    kind: SegmentKind::Spin {
                        yaw_rate: yaw_rate_deg_s.to_radians(),
                    },
                    duration: duration_s,
                },
                SegmentEntry::Pause { duration_s } => Segment {
                    kind: SegmentKind::Pause,
                    duration: duration_s,
                },
            })
            .collect();
        let scales = self.chassis_scales.unwrap_or([1.0, 1.0, 1.0]);
        let vnoise = self.chassis_velocity_noise_std.unwrap_or([0.0; 3]);
        ScenarioSpec {
            duration: self.duration_s,
            sample_rate_imu: self.sample_rate_imu_hz,
            sample_rate_odom: self.sample_rate_odom_hz,
            motion_script: script,
            mounting: MountingTruth {
                p_f_o: Vector2::new(self.mounting.p_f_o_m[0], self.mounting.p_f_o_m[1]),
                theta_f_o: self.mounting.theta_f_o_deg.to_radians(),
                tilt_pitch: self.mounting.tilt_pitch_deg.to_radians(),
                tilt_roll: self.mounting.tilt_roll_deg.to_radians(),
                p_bz_o: self.mounting.p_bz_o_m,
            },
            imu_intrinsics: self
                .imu_intrinsics
                .as_ref()
                .map(|b| b.to_core())
                .unwrap_or_else(ImuIntrinsics::identity),
            imu_noise: self
                .imu_noise
                .as_ref()
                .map(|b| b.to_core())
                .unwrap_or_else(ImuNoiseParams::zero),
            chassis_scale: ChassisScale {
                s_x: scales[0],
                s_y: scales[1],
                s_z: scales[2],
            },
            chassis_noise_std: Vector3::from_row_slice(&vnoise),
            vio_noise: self
                .vio_noise
                .as_ref()
                .map(|v| VioNoise {
                    position_std: v.position_std_m,
                    yaw_std: v.yaw_std_deg.to_radians(),
                    drift_rate: v.drift_rate_m_sqrt_s,
                })
                .unwrap_or_else(VioNoise::zero),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_scenario() {
        let text = serde_json::json!({
            "duration_s": 10.0,
            "sample_rate_imu_hz": 100.0,
            "sample_rate_odom_hz": 50.0,
            "motion_script": [
                { "kind": "pause", "duration_s": 2.0 },
                { "kind": "spin", "duration_s": 6.0, "yaw_rate_deg_s": 45.0 },
                { "kind": "pause", "duration_s": 2.0 }
            ],
            "mounting": {
                "p_f_o_m": [0.1, 0.05],
                "theta_f_o_deg": -90.0,
                "tilt_pitch_deg": 2.0,
                "tilt_roll_deg": -91.0,
                "p_bz_o_m": 0.3
            },
            "seed": 5
        })
        .to_string();
        let spec = ScenarioFile::parse(&text, Path::new("s.json")).unwrap();
        assert_eq!(spec.motion_script.len(), 3);
        match spec.motion_script[1].kind {
            SegmentKind::Spin { yaw_rate } => {
                assert!((yaw_rate - 45f64.to_radians()).abs() < 1e-12)
            }
            _ => panic!("expected spin"),
        }
        assert!((spec.mounting.theta_f_o - (-90f64).to_radians()).abs() < 1e-12);
        assert_eq!(spec.chassis_scale, ChassisScale::unit());
        odocal::sim::generate(&spec).unwrap();
    }

    #[test]
    fn rejects_unknown_segment_kind() {
        let text = r#"{
            "duration_s": 1.0, "sample_rate_imu_hz": 10.0, "sample_rate_odom_hz": 10.0,
            "motion_script": [{ "kind": "teleport", "duration_s": 1.0 }],
            "mounting": { "p_f_o_m": [0,0], "theta_f_o_deg": 0, "tilt_pitch_deg": 0,
                          "tilt_roll_deg": 0, "p_bz_o_m": 0 },
            "seed": 1
        }"#;
        assert!(ScenarioFile::parse(text, Path::new("s.json")).is_err());
    }
}
