use clap::{Parser, Subcommand};
use odocal_cli::commands::{
    cmd_allan, cmd_apply_imu, cmd_extrinsics, cmd_simulate, cmd_tilt, AxisSel, ExtrinsicsArgs,
};
use odocal_cli::error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Chassis-IMU calibration toolkit: simulate datasets, identify IMU noise,
/// estimate mounting tilt, and solve for heading, displacement, and chassis
/// scale errors.
#[derive(Parser)]
#[command(name = "odocal", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (imu.csv, odom_path.tum, vio_path.tum,
    /// truth.json) from a shipped scenario name or a scenario JSON file.
    Simulate {
        /// Shipped scenario (tilt-cal, extrinsics-cal, still-10h) or a
        /// scenario file path.
        scenario: String,
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute Allan-deviation curves and fit noise parameters.
    Allan {
        /// IMU CSV stream (t,gx,gy,gz,ax,ay,az).
        #[arg(long)]
        imu: PathBuf,
        /// Axis to analyze: all, gx, gy, gz, ax, ay, az.
        #[arg(long, default_value = "all")]
        axis: String,
        /// Sample rate in Hz; inferred from timestamps when omitted.
        #[arg(long)]
        sample_rate: Option<f64>,
        /// Output directory for allan_<axis>.csv and allan_fit.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Estimate IMU pitch/roll relative to the chassis from gyro data.
    Tilt {
        /// IMU CSV stream recorded while the robot rotates in place.
        #[arg(long)]
        imu: PathBuf,
        /// Calibration config (mounting block required; imu block applied
        /// as a correction when present).
        #[arg(long)]
        config: PathBuf,
        /// Output tilt JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for heading, displacement, and inverse scales from paired
    /// VIO and wheel-odometry trajectories.
    Extrinsics {
        /// VIO trajectory, TUM format.
        #[arg(long)]
        vio: PathBuf,
        /// Wheel-odometry trajectory, TUM format.
        #[arg(long)]
        odom: PathBuf,
        /// Calibration config (mounting block required).
        #[arg(long)]
        config: PathBuf,
        /// Tilt JSON produced by the tilt subcommand.
        #[arg(long)]
        tilt: Option<PathBuf>,
        /// Assume zero mounting tilt instead of --tilt.
        #[arg(long)]
        zero_tilt: bool,
        /// Output calibration report JSON path.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-pair residual CSV path.
        #[arg(long)]
        residuals: Option<PathBuf>,
        /// Pairing interval in seconds.
        #[arg(long, default_value_t = 0.5)]
        interval: f64,
        /// Robust loss: none, huber, or huber:<delta-in-meters>.
        #[arg(long)]
        loss: Option<String>,
        /// Iteration cap for the solver.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Apply the systematic IMU correction to a raw stream, row by row.
    ApplyImu {
        /// Raw IMU CSV stream.
        #[arg(long)]
        imu: PathBuf,
        /// Calibration config (imu block required).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            scenario,
            out_dir,
            seed,
        } => cmd_simulate(&scenario, &out_dir, seed),
        Command::Allan {
            imu,
            axis,
            sample_rate,
            out_dir,
        } => cmd_allan(&imu, AxisSel::parse(&axis)?, sample_rate, &out_dir),
        Command::Tilt { imu, config, out } => cmd_tilt(&imu, &config, &out),
        Command::Extrinsics {
            vio,
            odom,
            config,
            tilt,
            zero_tilt,
            out,
            residuals,
            interval,
            loss,
            max_iters,
        } => cmd_extrinsics(&ExtrinsicsArgs {
            vio,
            odom,
            config,
            tilt,
            zero_tilt,
            out,
            residuals,
            interval,
            loss,
            max_iters,
        }),
        Command::ApplyImu { imu, config, out } => cmd_apply_imu(&imu, &config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
