//! Heading, displacement, and chassis-scale calibration by nonlinear least
//! squares.
//!
//! The five parameters are the planar position of the fake-body frame F in
//! the odometer frame O, the heading of F in O, and the inverse velocity
//! scales of the chassis X and Y axes. For each inter-frame interval, the
//! displacement predicted from the VIO path through the candidate
//! extrinsics must match the inverse-scale-corrected wheel-odometry
//! displacement:
//!
//! ```text
//! r = p + R(theta) * dp_F - R(dtheta) * p - diag(q_x, q_y) * dp_O
//! ```
//!
//! Parameterizing by inverse scales makes the scale Jacobians constants,
//! and the position block `I - R(dtheta)` shows why rotation excitation is
//! required: without it the lever arm is unobservable.
//!
//! The problem is solved by Levenberg-Marquardt on the dense 5-parameter
//! normal equations with an optional Huber kernel. Residual and Jacobian
//! evaluation across pairs is parallel under the `parallel` feature;
//! contributions are reduced in pair order, so reports are reproducible.

use crate::exec::map_collect;
use crate::geometry::{
    rot_from_ypr, wrap_angle, EulerYPR, Pose3, Rot2, Rot3, StampedPose2, StampedPose3,
};
use crate::pca::TiltResult;
use nalgebra::{Matrix2, SMatrix, SVector, Vector2, Vector3};
use thiserror::Error;

pub type Matrix2x5 = SMatrix<f64, 2, 5>;
pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Vector5 = SVector<f64, 5>;

#[derive(Debug, Error, PartialEq)]
pub enum ExtrinsicsError {
    #[error("time misalignment: nearest sample to grid time {grid_t} is {found_t} (skew limit {max_skew})")]
    TimeMisalignment {
        grid_t: f64,
        found_t: f64,
        max_skew: f64,
    },
    #[error("paths share no usable time window (overlap {overlap} s, need >= {required} s)")]
    EmptyOverlap { overlap: f64, required: f64 },
    /// Not enough rotation excitation (or too few pairs) to observe the
    /// lever arm.
    #[error("unobservable: {0}")]
    Unobservable(String),
    #[error("no convergence within {0} iterations")]
    MaxIterations(usize),
    #[error("rank-deficient normal equations: condition number {cond:.3e} exceeds 1e12")]
    RankDeficient { cond: f64 },
}

/// Minimum relative chassis yaw for a pair to count as rotation excitation.
pub const MIN_ROTATION_RAD: f64 = 0.05;
/// Minimum number of pose pairs the solver accepts.
pub const MIN_PAIRS: usize = 20;

/// The optimization vector: lever arm `p` (m), heading `theta` (rad), and
/// inverse scales `q = s^-1` (dimensionless, sane range (0.5, 2.0)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrinsicParams {
    pub p: Vector2<f64>,
    pub theta: f64,
    pub q_x: f64,
    pub q_y: f64,
}

impl ExtrinsicParams {
    /// Neutral starting point: zero lever arm and heading, unit scales.
    pub fn neutral() -> Self {
        ExtrinsicParams {
            p: Vector2::zeros(),
            theta: 0.0,
            q_x: 1.0,
            q_y: 1.0,
        }
    }

    /// Sanity check on the inverse scales (open interval (0.5, 2.0));
    /// calibration-grade scale errors are a few percent.
    pub fn is_sane(&self) -> bool {
        self.q_x > 0.5
            && self.q_x < 2.0
            && self.q_y > 0.5
            && self.q_y < 2.0
            && self.p.x.is_finite()
            && self.p.y.is_finite()
            && self.theta.is_finite()
    }

    fn as_vector(&self) -> Vector5 {
        Vector5::new(self.p.x, self.p.y, self.theta, self.q_x, self.q_y)
    }

    fn from_vector(v: &Vector5) -> Self {
        ExtrinsicParams {
            p: Vector2::new(v[0], v[1]),
            theta: wrap_angle(v[2]),
            q_x: v[3],
            q_y: v[4],
        }
    }
}

/// One inter-frame observation: VIO displacement expressed in the starting
/// F frame, wheel-odometry displacement in the starting O frame, and the
/// relative chassis yaw over the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePosePair {
    pub dp_f: Vector2<f64>,
    pub dp_o: Vector2<f64>,
    pub dtheta: f64,
    pub t_start: f64,
    pub t_end: f64,
}

/// Robust kernel applied to squared residual norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    None,
    /// Quadratic within `delta` meters, linear beyond.
    Huber {
        delta: f64,
    },
}

impl Loss {
    /// (cost, IRLS weight) for a residual of norm `r`.
    fn evaluate(&self, r: f64) -> (f64, f64) {
        match *self {
            Loss::None => (r * r, 1.0),
            Loss::Huber { delta } => {
                if r <= delta {
                    (r * r, 1.0)
                } else {
                    (2.0 * delta * r - delta * delta, delta / r)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub loss: Loss,
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub step_tol: f64,
    pub x0: ExtrinsicParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            loss: Loss::Huber { delta: 0.05 },
            max_iterations: 100,
            gradient_tol: 1e-12,
            step_tol: 1e-14,
            x0: ExtrinsicParams::neutral(),
        }
    }
}

/// Solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_star: ExtrinsicParams,
    /// Final robust cost, m².
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// RMS of the scalar residual components at the solution, meters.
    pub residual_rms: f64,
    /// `(J^T J)^-1` scaled by the residual variance at the solution.
    pub covariance: Matrix5,
    pub n_pairs: usize,
    /// Robust cost after each accepted iteration, starting at x0.
    pub cost_history: Vec<f64>,
}

/// Converts a spatial IMU-pose path into the planar path of the F frame.
///
/// The fixed transform from F to the IMU body is built from the calibrated
/// tilt (zero yaw) and the manually measured height offset `p_bz_o`; each
/// body pose is composed with it and projected onto the plane (x, y, yaw).
pub fn vio_path_to_f(
    body_poses: &[StampedPose3],
    tilt: &TiltResult,
    p_bz_o: f64,
) -> Vec<StampedPose2> {
    let t_b_f = Pose3 {
        rot: rot_from_ypr(&EulerYPR {
            yaw: 0.0,
            pitch: tilt.pitch,
            roll: tilt.roll,
        }),
        p: Vector3::new(0.0, 0.0, p_bz_o),
    };
    let t_f_b = t_b_f.inverse();
    body_poses
        .iter()
        .map(|sp| {
            let f_pose = sp.pose.compose(&t_f_b);
            let m = f_pose.rot.matrix();
            let yaw = m[(1, 0)].atan2(m[(0, 0)]);
            StampedPose2 {
                t: sp.t,
                pose: crate::geometry::Pose2::new(yaw, f_pose.p.x, f_pose.p.y),
            }
        })
        .collect()
}

fn nearest_pose(path: &[StampedPose2], t: f64) -> &StampedPose2 {
    let idx = path.partition_point(|sp| sp.t < t);
    if idx == 0 {
        return &path[0];
    }
    if idx >= path.len() {
        return &path[path.len() - 1];
    }
    if (path[idx].t - t).abs() < (t - path[idx - 1].t).abs() {
        &path[idx]
    } else {
        &path[idx - 1]
    }
}

/// Samples both paths on a shared time grid and forms consecutive,
/// non-overlapping relative-pose pairs.
///
/// Both paths must overlap by at least ten intervals; every grid time must
/// have a sample within `interval / 10` in each path.
pub fn build_pose_pairs(
    path_f: &[StampedPose2],
    path_o: &[StampedPose2],
    interval: f64,
) -> Result<Vec<RelativePosePair>, ExtrinsicsError> {
    assert!(interval > 0.0, "interval must be positive");
    let required = 10.0 * interval;
    if path_f.is_empty() || path_o.is_empty() {
        return Err(ExtrinsicsError::EmptyOverlap {
            overlap: 0.0,
            required,
        });
    }
    let t_lo = path_f[0].t.max(path_o[0].t);
    let t_hi = path_f.last().unwrap().t.min(path_o.last().unwrap().t);
    let overlap = t_hi - t_lo;
    if overlap < required {
        return Err(ExtrinsicsError::EmptyOverlap { overlap, required });
    }

    let max_skew = interval / 10.0;
    let n_grid = (overlap / interval).floor() as usize + 1;
    let mut grid = Vec::with_capacity(n_grid);
    for k in 0..n_grid {
        let t = t_lo + k as f64 * interval;
        let f = nearest_pose(path_f, t);
        let o = nearest_pose(path_o, t);
        for found in [f.t, o.t] {
            if (found - t).abs() > max_skew {
                return Err(ExtrinsicsError::TimeMisalignment {
                    grid_t: t,
                    found_t: found,
                    max_skew,
                });
            }
        }
        grid.push((f, o));
    }

    let mut pairs = Vec::with_capacity(grid.len().saturating_sub(1));
    for w in grid.windows(2) {
        let ((f0, o0), (f1, o1)) = (w[0], w[1]);
        let dp_f = Rot2::new(-f0.pose.rot.theta).apply(&(f1.pose.p - f0.pose.p));
        let dp_o = Rot2::new(-o0.pose.rot.theta).apply(&(o1.pose.p - o0.pose.p));
        let dtheta = wrap_angle(o1.pose.rot.theta - o0.pose.rot.theta);
        pairs.push(RelativePosePair {
            dp_f,
            dp_o,
            dtheta,
            t_start: f0.t,
            t_end: f1.t,
        });
    }
    Ok(pairs)
}

/// The per-pair residual, meters.
pub fn residual(x: &ExtrinsicParams, pair: &RelativePosePair) -> Vector2<f64> {
    let rotated_vio = Rot2::new(x.theta).apply(&pair.dp_f);
    let rotated_lever = Rot2::new(pair.dtheta).apply(&x.p);
    let scaled_odo = Vector2::new(x.q_x * pair.dp_o.x, x.q_y * pair.dp_o.y);
    x.p + rotated_vio - rotated_lever - scaled_odo
}

/// Analytic Jacobian of [`residual`], columns ordered
/// `(p_x, p_y, theta, q_x, q_y)`.
pub fn jacobian(x: &ExtrinsicParams, pair: &RelativePosePair) -> Matrix2x5 {
    let mut j = Matrix2x5::zeros();
    // d r / d p = I - R(dtheta)
    let r_dt = Rot2::new(pair.dtheta).matrix();
    let dp_block = Matrix2::identity() - r_dt;
    j.fixed_view_mut::<2, 2>(0, 0).copy_from(&dp_block);
    // d r / d theta = R(theta + pi/2) * dp_f
    let dtheta_col = Rot2::new(x.theta + std::f64::consts::FRAC_PI_2).apply(&pair.dp_f);
    j[(0, 2)] = dtheta_col.x;
    j[(1, 2)] = dtheta_col.y;
    // d r / d q = -dp_o componentwise
    j[(0, 3)] = -pair.dp_o.x;
    j[(1, 4)] = -pair.dp_o.y;
    j
}

struct Assembled {
    cost: f64,
    jtj: Matrix5,
    jtr: Vector5,
    /// Unweighted sum of squared residual components.
    ssr: f64,
}

fn assemble(x: &ExtrinsicParams, pairs: &[RelativePosePair], loss: Loss) -> Assembled {
    let parts = map_collect(pairs, |pair| {
        let r = residual(x, pair);
        let j = jacobian(x, pair);
        let (cost, w) = loss.evaluate(r.norm());
        (
            w * (j.transpose() * j),
            w * (j.transpose() * r),
            cost,
            r.norm_squared(),
        )
    });
    let mut out = Assembled {
        cost: 0.0,
        jtj: Matrix5::zeros(),
        jtr: Vector5::zeros(),
        ssr: 0.0,
    };
    for (jtj, jtr, cost, ssr) in parts {
        out.jtj += jtj;
        out.jtr += jtr;
        out.cost += cost;
        out.ssr += ssr;
    }
    out
}

fn cost_only(x: &ExtrinsicParams, pairs: &[RelativePosePair], loss: Loss) -> f64 {
    map_collect(pairs, |pair| loss.evaluate(residual(x, pair).norm()).0)
        .iter()
        .sum()
}

/// Solves the five-parameter problem by Levenberg-Marquardt.
///
/// Requires at least [`MIN_PAIRS`] pairs, some of which must carry rotation
/// excitation (|dtheta| > [`MIN_ROTATION_RAD`]); without rotation the lever
/// arm does not enter the residual and the problem is unobservable.
pub fn solve(
    pairs: &[RelativePosePair],
    cfg: &SolverConfig,
) -> Result<SolveReport, ExtrinsicsError> {
    if pairs.len() < MIN_PAIRS {
        return Err(ExtrinsicsError::Unobservable(format!(
            "{} pairs provided, need >= {MIN_PAIRS}",
            pairs.len()
        )));
    }
    let rotating = pairs
        .iter()
        .filter(|p| p.dtheta.abs() > MIN_ROTATION_RAD)
        .count();
    if rotating == 0 {
        return Err(ExtrinsicsError::Unobservable(format!(
            "no pair has |dtheta| > {MIN_ROTATION_RAD} rad; lever arm unobservable"
        )));
    }
    debug_assert!(cfg.x0.is_sane(), "starting point violates sanity bounds");

    let mut x = cfg.x0;
    let mut lambda = 1e-4;
    let mut cost_history = Vec::with_capacity(cfg.max_iterations + 1);
    let mut last = assemble(&x, pairs, cfg.loss);
    cost_history.push(last.cost);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;

        let eig = nalgebra::SymmetricEigen::new(last.jtj);
        let max_eig = eig.eigenvalues.amax();
        let min_eig = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let cond = max_eig / min_eig.max(f64::MIN_POSITIVE);
        if cond.is_nan() || cond >= 1e12 || min_eig <= 0.0 {
            return Err(ExtrinsicsError::RankDeficient { cond });
        }

        if last.jtr.norm() < cfg.gradient_tol {
            converged = true;
            break;
        }

        // Inner damping loop: retry with a stiffer step until the cost drops.
        let mut step_norm = 0.0;
        let mut accepted = false;
        while lambda < 1e14 {
            let mut damped = last.jtj;
            for i in 0..5 {
                damped[(i, i)] += lambda * last.jtj[(i, i)].max(1e-12);
            }
            let delta = match damped.cholesky() {
                Some(ch) => ch.solve(&(-last.jtr)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let x_new = ExtrinsicParams::from_vector(&(x.as_vector() + delta));
            let new_cost = cost_only(&x_new, pairs, cfg.loss);
            if new_cost < last.cost {
                x = x_new;
                step_norm = delta.norm();
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No damping produces a descent step: already at a minimum to
            // numerical precision.
            converged = true;
            break;
        }

        last = assemble(&x, pairs, cfg.loss);
        cost_history.push(last.cost);

        if step_norm < cfg.step_tol {
            converged = true;
            break;
        }
    }

    if !converged && last.jtr.norm() >= cfg.gradient_tol {
        return Err(ExtrinsicsError::MaxIterations(cfg.max_iterations));
    }

    let n_scalar = 2 * pairs.len();
    let dof = (n_scalar as f64 - 5.0).max(1.0);
    let sigma2 = last.ssr / dof;
    let covariance = last
        .jtj
        .try_inverse()
        .map(|inv| inv * sigma2)
        .unwrap_or_else(Matrix5::zeros);

    Ok(SolveReport {
        x_star: x,
        final_cost: last.cost,
        iterations,
        converged: true,
        residual_rms: (last.ssr / n_scalar as f64).sqrt(),
        covariance,
        n_pairs: pairs.len(),
        cost_history,
    })
}

/// Reference transform used by simulation and tests: the full mounting
/// rotation of the IMU in the chassis frame implied by extrinsics plus
/// tilt.
pub fn mounting_rotation(theta_f_o: f64, pitch: f64, roll: f64) -> Rot3 {
    rot_from_ypr(&EulerYPR {
        yaw: theta_f_o,
        pitch,
        roll,
    })
}
