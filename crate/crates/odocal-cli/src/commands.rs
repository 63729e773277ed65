//! Subcommand implementations, kept as library functions so the test suite
//! can drive them without spawning processes.

use crate::config::Config;
use crate::error::CliError;
use crate::formats;
use crate::report::{
    AllanAxisReport, AllanFitEntry, AllanReport, CalibrationReport, ExtrinsicsReport, Provenance,
    TiltReport, TruthFile,
};
use crate::scenario::ScenarioFile;
use odocal::allan::{allan_deviation, default_taus, fit_noise_params, uniform_rate};
use odocal::extrinsics::{build_pose_pairs, residual, solve, vio_path_to_f, Loss};
use odocal::imu::correct_sample;
use odocal::pca::estimate_tilt;
use odocal::sim::{generate, scenario_by_name, standard_scenarios, ScenarioSpec};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Resolves a scenario argument: shipped name first, then a JSON file.
pub fn resolve_scenario(arg: &str) -> Result<(String, ScenarioSpec), CliError> {
    if let Some(spec) = scenario_by_name(arg) {
        return Ok((arg.to_string(), spec));
    }
    let path = Path::new(arg);
    if path.exists() {
        let content = formats::read_to_string(path)?;
        let spec = ScenarioFile::parse(&content, path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| arg.to_string());
        return Ok((name, spec));
    }
    let names: Vec<&str> = standard_scenarios().iter().map(|(n, _)| *n).collect();
    Err(CliError::data(format!(
        "unknown scenario `{arg}`: not a shipped name ({}) and no such file",
        names.join(", ")
    )))
}

/// `simulate`: writes imu.csv, odom_path.tum, vio_path.tum, truth.json.
pub fn cmd_simulate(scenario: &str, out_dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let (name, mut spec) = resolve_scenario(scenario)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let dataset = generate(&spec)?;
    formats::write_atomic(
        &out_dir.join("imu.csv"),
        &formats::imu_csv_to_string(&dataset.imu_stream),
    )?;
    formats::write_atomic(
        &out_dir.join("odom_path.tum"),
        &formats::tum_pose2_to_string(&dataset.odom_path),
    )?;
    formats::write_atomic(
        &out_dir.join("vio_path.tum"),
        &formats::tum_pose3_to_string(&dataset.vio_path),
    )?;
    let truth = TruthFile::new(&name, &spec, &dataset.truth);
    let truth_json = serde_json::to_string_pretty(&truth)
        .map_err(|e| CliError::internal(format!("serializing truth: {e}")))?;
    formats::write_atomic(&out_dir.join("truth.json"), &(truth_json + "\n"))?;
    Ok(())
}

/// Axis selector for `allan`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisSel {
    All,
    One(usize), // 0..3 gyro xyz, 3..6 accel xyz
}

pub const AXIS_NAMES: [&str; 6] = ["gx", "gy", "gz", "ax", "ay", "az"];

impl AxisSel {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        if s == "all" {
            return Ok(AxisSel::All);
        }
        AXIS_NAMES
            .iter()
            .position(|n| *n == s)
            .map(AxisSel::One)
            .ok_or_else(|| {
                CliError::data(format!(
                    "unknown axis `{s}` (use all, gx, gy, gz, ax, ay, az)"
                ))
            })
    }

    fn indices(&self) -> Vec<usize> {
        match self {
            AxisSel::All => (0..6).collect(),
            AxisSel::One(i) => vec![*i],
        }
    }
}

/// `allan`: per-axis Allan-deviation CSV plus a JSON fit summary.
pub fn cmd_allan(
    imu_csv: &Path,
    axis: AxisSel,
    sample_rate: Option<f64>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let samples = formats::parse_imu_csv(&formats::read_to_string(imu_csv)?, imu_csv)?;
    if samples.len() < 2 {
        return Err(CliError::data(format!(
            "{}: need at least 2 samples",
            imu_csv.display()
        )));
    }
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let inferred = uniform_rate(&times)?;
    let rate = sample_rate.unwrap_or(inferred);

    let taus = default_taus(rate, samples.len());
    if taus.is_empty() {
        return Err(CliError::data(format!(
            "{}: stream too short for an Allan curve at {rate} Hz",
            imu_csv.display()
        )));
    }

    let mut axes = Vec::new();
    for idx in axis.indices() {
        let channel: Vec<f64> = samples
            .iter()
            .map(|s| match idx {
                0 => s.gyro.x,
                1 => s.gyro.y,
                2 => s.gyro.z,
                3 => s.accel.x,
                4 => s.accel.y,
                _ => s.accel.z,
            })
            .collect();
        let curve = allan_deviation(&channel, rate, &taus)?;
        let name = AXIS_NAMES[idx];
        let mut csv = String::from("tau,adev\n");
        for p in &curve {
            let _ = writeln!(csv, "{},{}", p.tau, p.adev);
        }
        let curve_file = format!("allan_{name}.csv");
        formats::write_atomic(&out_dir.join(&curve_file), &csv)?;

        let (fit, fit_error) = match fit_noise_params(&curve) {
            Ok(f) => (Some(AllanFitEntry::from_fit(&f)), None),
            Err(e) => (None, Some(e.to_string())),
        };
        axes.push(AllanAxisReport {
            axis: name.to_string(),
            fit,
            fit_error,
            curve_file,
        });
    }

    let report = AllanReport {
        sample_rate_hz: rate,
        n_samples: samples.len(),
        axes,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::internal(format!("serializing allan report: {e}")))?;
    formats::write_atomic(&out_dir.join("allan_fit.json"), &(json + "\n"))?;
    Ok(())
}

/// `tilt`: PCA pitch/roll estimate from an IMU stream.
///
/// The config must carry the mounting block (sign prior); when an IMU
/// intrinsics block is present the stream is corrected with it first.
pub fn cmd_tilt(imu_csv: &Path, config_path: &Path, out: &Path) -> Result<(), CliError> {
    let config = Config::parse(&formats::read_to_string(config_path)?, config_path)?;
    let mounting = config.mounting_block(config_path)?;
    let mut samples = formats::parse_imu_csv(&formats::read_to_string(imu_csv)?, imu_csv)?;
    if let Some(imu) = &config.imu {
        let intr = imu.intrinsics.to_core();
        for s in &mut samples {
            *s = correct_sample(s, &intr);
        }
    }
    let result = estimate_tilt(&samples, &mounting.tilt_config())?;
    let json = serde_json::to_string_pretty(&TiltReport::from_result(&result))
        .map_err(|e| CliError::internal(format!("serializing tilt report: {e}")))?;
    formats::write_atomic(out, &(json + "\n"))?;
    Ok(())
}

pub struct ExtrinsicsArgs {
    pub vio: PathBuf,
    pub odom: PathBuf,
    pub config: PathBuf,
    pub tilt: Option<PathBuf>,
    pub zero_tilt: bool,
    pub out: PathBuf,
    pub residuals: Option<PathBuf>,
    pub interval: f64,
    pub loss: Option<String>,
    pub max_iters: Option<usize>,
}

pub fn parse_loss_flag(s: &str) -> Result<Loss, CliError> {
    if s == "none" {
        return Ok(Loss::None);
    }
    if s == "huber" {
        return Ok(Loss::Huber { delta: 0.05 });
    }
    if let Some(rest) = s.strip_prefix("huber:") {
        let delta: f64 = rest
            .parse()
            .map_err(|e| CliError::data(format!("bad --loss value `{s}`: {e}")))?;
        if delta <= 0.0 {
            return Err(CliError::data(format!(
                "huber delta must be > 0, got {delta}"
            )));
        }
        return Ok(Loss::Huber { delta });
    }
    Err(CliError::data(format!(
        "bad --loss value `{s}` (use none, huber, or huber:<delta>)"
    )))
}

fn loss_label(loss: &Loss) -> String {
    match loss {
        Loss::None => "none".to_string(),
        Loss::Huber { delta } => format!("huber({delta})"),
    }
}

/// `extrinsics`: heading/displacement/scale solve over paired paths.
pub fn cmd_extrinsics(args: &ExtrinsicsArgs) -> Result<(), CliError> {
    let config = Config::parse(&formats::read_to_string(&args.config)?, &args.config)?;
    let mounting = config.mounting_block(&args.config)?;

    let tilt_result = match (&args.tilt, args.zero_tilt) {
        (Some(path), false) => {
            let report: TiltReport = serde_json::from_str(&formats::read_to_string(path)?)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            report.to_result()
        }
        (None, true) => odocal::pca::TiltResult {
            pitch: 0.0,
            roll: 0.0,
            v_max: nalgebra::Vector3::z(),
            eigenvalues: nalgebra::Vector3::new(1.0, 0.0, 0.0),
            n_samples: 0,
        },
        (Some(_), true) => {
            return Err(CliError::data(
                "--tilt and --zero-tilt are mutually exclusive",
            ))
        }
        (None, false) => {
            return Err(CliError::data(
                "a tilt estimate is required: pass --tilt <tilt.json> or --zero-tilt",
            ))
        }
    };

    let vio = formats::parse_tum_pose3(&formats::read_to_string(&args.vio)?, &args.vio)?;
    let odom = formats::parse_tum_pose2(&formats::read_to_string(&args.odom)?, &args.odom)?;

    let mut solver_cfg = config.solver_config();
    if let Some(loss) = &args.loss {
        solver_cfg.loss = parse_loss_flag(loss)?;
    }
    if let Some(n) = args.max_iters {
        solver_cfg.max_iterations = n;
    }

    let path_f = vio_path_to_f(&vio, &tilt_result, mounting.p_bz_o);
    let pairs = build_pose_pairs(&path_f, &odom, args.interval)?;
    let report = solve(&pairs, &solver_cfg)?;

    if let Some(res_path) = &args.residuals {
        let mut csv = String::from("t_start,t_end,rx,ry,norm\n");
        for pair in &pairs {
            let r = residual(&report.x_star, pair);
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                pair.t_start,
                pair.t_end,
                r.x,
                r.y,
                r.norm()
            );
        }
        formats::write_atomic(res_path, &csv)?;
    }

    let created_unix_s = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let full = CalibrationReport {
        tilt: (!args.zero_tilt).then(|| TiltReport::from_result(&tilt_result)),
        extrinsics: ExtrinsicsReport::from_report(&report),
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_s,
            vio_file: args.vio.display().to_string(),
            odom_file: args.odom.display().to_string(),
            config_file: args.config.display().to_string(),
            tilt_file: args.tilt.as_ref().map(|p| p.display().to_string()),
            interval_s: args.interval,
            loss: loss_label(&solver_cfg.loss),
        },
    };
    let json = serde_json::to_string_pretty(&full)
        .map_err(|e| CliError::internal(format!("serializing report: {e}")))?;
    formats::write_atomic(&args.out, &(json + "\n"))?;
    Ok(())
}

/// `apply-imu`: row-wise systematic correction of an IMU stream.
pub fn cmd_apply_imu(imu_csv: &Path, config_path: &Path, out: &Path) -> Result<(), CliError> {
    let config = Config::parse(&formats::read_to_string(config_path)?, config_path)?;
    let imu = config.imu_block(config_path)?;
    let intr = imu.intrinsics.to_core();
    intr.validate()?;
    let samples = formats::parse_imu_csv(&formats::read_to_string(imu_csv)?, imu_csv)?;
    let corrected: Vec<_> = samples.iter().map(|s| correct_sample(s, &intr)).collect();
    formats::write_atomic(out, &formats::imu_csv_to_string(&corrected))?;
    Ok(())
}
