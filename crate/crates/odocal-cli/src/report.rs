//! Result files: tilt JSON, Allan fit JSON, the combined calibration
//! report, and the simulator's ground-truth file.
//!
//! Angles are reported in both radians and degrees; inverse scales also as
//! percent. The ground-truth file contains no timestamps so repeated runs
//! with the same seed are byte-identical.

use odocal::allan::AllanFit;
use odocal::extrinsics::SolveReport;
use odocal::pca::TiltResult;
use odocal::sim::{GroundTruth, ScenarioSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TiltReport {
    pub pitch_rad: f64,
    pub pitch_deg: f64,
    pub roll_rad: f64,
    pub roll_deg: f64,
    pub v_max: [f64; 3],
    pub eigenvalues: [f64; 3],
    pub n_samples: usize,
}

impl TiltReport {
    pub fn from_result(r: &TiltResult) -> Self {
        TiltReport {
            pitch_rad: r.pitch,
            pitch_deg: r.pitch.to_degrees(),
            roll_rad: r.roll,
            roll_deg: r.roll.to_degrees(),
            v_max: [r.v_max.x, r.v_max.y, r.v_max.z],
            eigenvalues: [r.eigenvalues.x, r.eigenvalues.y, r.eigenvalues.z],
            n_samples: r.n_samples,
        }
    }

    pub fn to_result(&self) -> TiltResult {
        TiltResult {
            pitch: self.pitch_rad,
            roll: self.roll_rad,
            v_max: nalgebra::Vector3::from_row_slice(&self.v_max),
            eigenvalues: nalgebra::Vector3::from_row_slice(&self.eigenvalues),
            n_samples: self.n_samples,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExtrinsicsReport {
    /// Lever arm p_F^O, meters.
    pub p_f_o_m: [f64; 2],
    pub theta_f_o_rad: f64,
    pub theta_f_o_deg: f64,
    /// Inverse scales s_x^-1, s_y^-1.
    pub q_x: f64,
    pub q_y: f64,
    pub s_x_inv_percent: f64,
    pub s_y_inv_percent: f64,
    pub final_cost_m2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_rms_m: f64,
    pub covariance: [[f64; 5]; 5],
    pub n_pairs: usize,
}

impl ExtrinsicsReport {
    pub fn from_report(r: &SolveReport) -> Self {
        let mut covariance = [[0.0; 5]; 5];
        for (i, row) in covariance.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = r.covariance[(i, j)];
            }
        }
        ExtrinsicsReport {
            p_f_o_m: [r.x_star.p.x, r.x_star.p.y],
            theta_f_o_rad: r.x_star.theta,
            theta_f_o_deg: r.x_star.theta.to_degrees(),
            q_x: r.x_star.q_x,
            q_y: r.x_star.q_y,
            s_x_inv_percent: r.x_star.q_x * 100.0,
            s_y_inv_percent: r.x_star.q_y * 100.0,
            final_cost_m2: r.final_cost,
            iterations: r.iterations,
            converged: r.converged,
            residual_rms_m: r.residual_rms,
            covariance,
            n_pairs: r.n_pairs,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool_version: String,
    pub created_unix_s: u64,
    pub vio_file: String,
    pub odom_file: String,
    pub config_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt_file: Option<String>,
    pub interval_s: f64,
    pub loss: String,
}

/// The combined calibration report cmd_extrinsics writes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CalibrationReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<TiltReport>,
    pub extrinsics: ExtrinsicsReport,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AllanFitEntry {
    pub white_noise_density: f64,
    pub bias_instability: f64,
    pub tau_at_minimum_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AllanAxisReport {
    pub axis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<AllanFitEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub curve_file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AllanReport {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub axes: Vec<AllanAxisReport>,
}

impl AllanFitEntry {
    pub fn from_fit(f: &AllanFit) -> Self {
        AllanFitEntry {
            white_noise_density: f.white_noise_density,
            bias_instability: f.bias_instability,
            tau_at_minimum_s: f.tau_at_minimum,
        }
    }
}

/// Ground truth written next to simulated data. Deliberately free of
/// timestamps and environment state.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub scenario: String,
    pub seed: u64,
    pub p_f_o_m: [f64; 2],
    pub theta_f_o_rad: f64,
    pub theta_f_o_deg: f64,
    pub q_x: f64,
    pub q_y: f64,
    pub tilt_pitch_rad: f64,
    pub tilt_pitch_deg: f64,
    pub tilt_roll_rad: f64,
    pub tilt_roll_deg: f64,
    pub p_bz_o_m: f64,
    pub scales: [f64; 3],
}

impl TruthFile {
    pub fn new(name: &str, spec: &ScenarioSpec, truth: &GroundTruth) -> Self {
        TruthFile {
            scenario: name.to_string(),
            seed: spec.seed,
            p_f_o_m: [truth.extrinsics.p.x, truth.extrinsics.p.y],
            theta_f_o_rad: truth.extrinsics.theta,
            theta_f_o_deg: truth.extrinsics.theta.to_degrees(),
            q_x: truth.extrinsics.q_x,
            q_y: truth.extrinsics.q_y,
            tilt_pitch_rad: truth.tilt_pitch,
            tilt_pitch_deg: truth.tilt_pitch.to_degrees(),
            tilt_roll_rad: truth.tilt_roll,
            tilt_roll_deg: truth.tilt_roll.to_degrees(),
            p_bz_o_m: truth.p_bz_o,
            scales: [truth.scale.s_x, truth.scale.s_y, truth.scale.s_z],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use odocal::extrinsics::{ExtrinsicParams, Matrix5};

    #[test]
    fn calibration_report_round_trips_losslessly() {
        let solve = SolveReport {
            x_star: ExtrinsicParams {
                p: Vector2::new(0.1008, 0.064),
                theta: -89.29_f64.to_radians(),
                q_x: 0.99733,
                q_y: 1.0374,
            },
            final_cost: 1.25e-6,
            iterations: 7,
            converged: true,
            residual_rms: 0.0011,
            covariance: Matrix5::identity() * 1e-8,
            n_pairs: 215,
            cost_history: vec![1.0, 0.5],
        };
        let report = CalibrationReport {
            tilt: Some(TiltReport {
                pitch_rad: 0.05,
                pitch_deg: 0.05_f64.to_degrees(),
                roll_rad: -1.588,
                roll_deg: -1.588_f64.to_degrees(),
                v_max: [0.01, 0.99, 0.02],
                eigenvalues: [1.0, 1e-4, 1e-5],
                n_samples: 9000,
            }),
            extrinsics: ExtrinsicsReport::from_report(&solve),
            provenance: Provenance {
                tool_version: "0.1.0".into(),
                created_unix_s: 1_700_000_000,
                vio_file: "vio_path.tum".into(),
                odom_file: "odom_path.tum".into(),
                config_file: "config.json".into(),
                tilt_file: Some("tilt.json".into()),
                interval_s: 0.5,
                loss: "huber(0.05)".into(),
            },
        };
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: CalibrationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
        // And once more through the string: canonical form is stable.
        let text2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn tilt_report_round_trips() {
        let r = TiltResult {
            pitch: 3.0_f64.to_radians(),
            roll: -91.0_f64.to_radians(),
            v_max: nalgebra::Vector3::new(0.0, 1.0, 0.01),
            eigenvalues: nalgebra::Vector3::new(0.5, 1e-4, 9e-5),
            n_samples: 4200,
        };
        let rep = TiltReport::from_result(&r);
        assert!((rep.pitch_deg - 3.0).abs() < 1e-12);
        let back = rep.to_result();
        assert_eq!(back, r);
    }
}
