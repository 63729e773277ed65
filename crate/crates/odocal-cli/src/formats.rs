//! On-disk data formats: the IMU CSV stream and TUM trajectory files.
//!
//! IMU CSV: header `t,gx,gy,gz,ax,ay,az`, one sample per line, SI units
//! (s, rad/s, m/s²), UTF-8.
//!
//! TUM trajectory: `t x y z qx qy qz qw` per line (quaternion in xyzw
//! order), `#` comment lines ignored. Quaternions appear only here; the
//! calibration core works with rotation matrices.
//!
//! All writers go through a temp-file-and-rename so partially written
//! outputs are never observed.

use crate::error::CliError;
use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use odocal::geometry::{Pose2, Pose3, Rot3, StampedPose2, StampedPose3};
use odocal::imu::ImuSample;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const IMU_CSV_HEADER: &str = "t,gx,gy,gz,ax,ay,az";

/// Writes `content` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)
        .map_err(|e| CliError::internal(format!("creating {}: {e}", dir.display())))?;
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::internal(format!("temp file in {}: {e}", dir.display())))?;
    fs::write(tmp.path(), content)
        .map_err(|e| CliError::internal(format!("writing {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::internal(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))
}

pub fn imu_csv_to_string(samples: &[ImuSample]) -> String {
    let mut out = String::with_capacity(samples.len() * 64 + IMU_CSV_HEADER.len() + 1);
    out.push_str(IMU_CSV_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.t, s.gyro.x, s.gyro.y, s.gyro.z, s.accel.x, s.accel.y, s.accel.z
        );
    }
    out
}

pub fn parse_imu_csv(content: &str, path: &Path) -> Result<Vec<ImuSample>, CliError> {
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == IMU_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(CliError::data(format!(
                "{}: line 1: expected header `{IMU_CSV_HEADER}`, found `{}`",
                path.display(),
                header.trim_end()
            )))
        }
        None => return Err(CliError::data(format!("{}: empty file", path.display()))),
    }
    let mut samples = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CliError::data(format!(
                "{}: line {line_no}: expected 7 fields, found {}",
                path.display(),
                fields.len()
            )));
        }
        let mut v = [0.0f64; 7];
        for (i, f) in fields.iter().enumerate() {
            v[i] = f.trim().parse().map_err(|e| {
                CliError::data(format!(
                    "{}: line {line_no}: field {}: {e}",
                    path.display(),
                    i + 1
                ))
            })?;
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(CliError::data(format!(
                "{}: line {line_no}: non-finite value",
                path.display()
            )));
        }
        if v[0] < prev_t {
            return Err(CliError::data(format!(
                "{}: line {line_no}: timestamp {} decreases below {}",
                path.display(),
                v[0],
                prev_t
            )));
        }
        prev_t = v[0];
        samples.push(ImuSample {
            t: v[0],
            gyro: Vector3::new(v[1], v[2], v[3]),
            accel: Vector3::new(v[4], v[5], v[6]),
        });
    }
    Ok(samples)
}

fn quat_from_rot3(rot: &Rot3) -> UnitQuaternion<f64> {
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*rot.matrix()))
}

fn rot3_from_quat(q: &UnitQuaternion<f64>) -> Rot3 {
    Rot3::from_matrix_unchecked(q.to_rotation_matrix().into_inner())
}

pub fn tum_pose3_to_string(path: &[StampedPose3]) -> String {
    let mut out = String::with_capacity(path.len() * 96);
    for sp in path {
        let q = quat_from_rot3(&sp.pose.rot);
        let c = q.coords; // (x, y, z, w)
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            sp.t, sp.pose.p.x, sp.pose.p.y, sp.pose.p.z, c.x, c.y, c.z, c.w
        );
    }
    out
}

pub fn tum_pose2_to_string(path: &[StampedPose2]) -> String {
    let mut out = String::with_capacity(path.len() * 96);
    for sp in path {
        let half = sp.pose.rot.theta / 2.0;
        let _ = writeln!(
            out,
            "{} {} {} 0 0 0 {} {}",
            sp.t,
            sp.pose.p.x,
            sp.pose.p.y,
            half.sin(),
            half.cos()
        );
    }
    out
}

pub fn parse_tum_pose3(content: &str, path: &Path) -> Result<Vec<StampedPose3>, CliError> {
    let mut out = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(CliError::data(format!(
                "{}: line {line_no}: expected 8 fields `t x y z qx qy qz qw`, found {}",
                path.display(),
                fields.len()
            )));
        }
        let mut v = [0.0f64; 8];
        for (i, f) in fields.iter().enumerate() {
            v[i] = f.parse().map_err(|e| {
                CliError::data(format!(
                    "{}: line {line_no}: field {}: {e}",
                    path.display(),
                    i + 1
                ))
            })?;
        }
        let q = Quaternion::new(v[7], v[4], v[5], v[6]); // w, x, y, z
        if q.norm() < 1e-9 {
            return Err(CliError::data(format!(
                "{}: line {line_no}: zero quaternion",
                path.display()
            )));
        }
        out.push(StampedPose3 {
            t: v[0],
            pose: Pose3 {
                rot: rot3_from_quat(&UnitQuaternion::from_quaternion(q)),
                p: Vector3::new(v[1], v[2], v[3]),
            },
        });
    }
    if out.is_empty() {
        return Err(CliError::data(format!("{}: no poses", path.display())));
    }
    Ok(out)
}

/// Reads a TUM file and projects each pose onto the plane (x, y, yaw).
pub fn parse_tum_pose2(content: &str, path: &Path) -> Result<Vec<StampedPose2>, CliError> {
    let poses = parse_tum_pose3(content, path)?;
    Ok(poses
        .iter()
        .map(|sp| {
            let m: &Matrix3<f64> = sp.pose.rot.matrix();
            let yaw = m[(1, 0)].atan2(m[(0, 0)]);
            StampedPose2 {
                t: sp.t,
                pose: Pose2::new(yaw, sp.pose.p.x, sp.pose.p.y),
            }
        })
        .collect())
}
