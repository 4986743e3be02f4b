//! Command-line front end for the compartment localization pipeline.
//!
//! Five subcommands cover the deployment stages: `simulate` produces
//! synthetic scans with ground truth, `calibrate` estimates the scanner
//! extrinsics from planar-target samples, `setup-parking` locates the
//! reflective corner boards once and caches the world frame, `detect` runs
//! the localization on a scan, and `eval` scores batches of detections
//! against annotations.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 unreadable or malformed
//! input, 3 degenerate calibration geometry, 4 reflector not found, 5 no
//! vehicle in the parking area, 6 no overlap between results and
//! annotations, 7 segmentation failure, 8 insufficient contour edges,
//! 9 degenerate contour geometry.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "loadbay",
    version,
    about = "Rotating-LiDAR truck compartment localization"
)]
struct Cli {
    /// Bundled defaults (sensor, extrinsics, detection parameters); command
    /// flags override the matching section
    #[arg(long = "config", global = true, value_name = "CONFIG")]
    bundle: Option<PathBuf>,

    /// Seed for every randomized step (simulation noise, consensus fits)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for debug dumps (segmentation colors, detected segments)
    #[arg(long, global = true)]
    debug_dump: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scan of a scene description
    Simulate {
        /// scene description (JSON)
        scene: PathBuf,
        /// sensor configuration (JSON, degrees); defaults apply when omitted
        #[arg(long)]
        sensor: Option<PathBuf>,
        /// scanner extrinsics (JSON, degrees/mm); identity when omitted
        #[arg(long)]
        extrinsics: Option<PathBuf>,
        /// output cloud (ASCII PCD, platform frame)
        #[arg(long)]
        out: PathBuf,
        /// ground-truth sidecar (JSON annotations in the parking frame)
        #[arg(long)]
        truth_out: Option<PathBuf>,
        /// raw samples labeled by hit surface (CSV), for calibration
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Estimate scanner-to-platform extrinsics from planar-target samples
    Calibrate {
        /// plane samples (CSV: plane_id,range,azimuth,platform — radians)
        planes: PathBuf,
        /// initial extrinsics guess (JSON); zero when omitted
        #[arg(long)]
        init: Option<PathBuf>,
        /// calibration result (JSON, degrees/mm)
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate the four reflective corner boards and cache the world frame
    SetupParking {
        /// scene cloud (PCD or PLY, platform frame)
        cloud: PathBuf,
        /// reflector seed regions and crop bounds (JSON)
        config: PathBuf,
        /// cached world frame (JSON)
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate the compartment key points in a scan
    Detect {
        /// scene cloud (PCD or PLY, platform frame)
        cloud: PathBuf,
        /// cached world frame from setup-parking (JSON)
        world: PathBuf,
        /// detection parameters (JSON); defaults apply when omitted
        #[arg(long)]
        params: Option<PathBuf>,
        /// detection result (JSON)
        #[arg(long)]
        out: PathBuf,
        /// wireframe overlay for inspection (PLY)
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// vehicle id recorded in the result (default: cloud file stem)
        #[arg(long)]
        id: Option<String>,
    },
    /// Score detection results against annotations
    Eval {
        /// detection result file, or a directory of them
        results: PathBuf,
        /// annotations (JSON; the simulator truth sidecar works directly)
        annotations: PathBuf,
        /// full report (JSON); the summary table always prints
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: failed to configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }

    let bundle = match cli.bundle.as_deref().map(commands::load_bundle).transpose() {
        Ok(bundle) => bundle.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {:#}", e.message);
            return ExitCode::from(e.code);
        }
    };

    let outcome = match &cli.command {
        Command::Simulate {
            scene,
            sensor,
            extrinsics,
            out,
            truth_out,
            samples_out,
        } => commands::simulate(
            scene,
            sensor.as_deref(),
            extrinsics.as_deref(),
            out,
            truth_out.as_deref(),
            samples_out.as_deref(),
            cli.seed,
            &bundle,
        ),
        Command::Calibrate { planes, init, out } => {
            commands::calibrate(planes, init.as_deref(), out, &bundle)
        }
        Command::SetupParking { cloud, config, out } => {
            commands::setup_parking(cloud, config, out, cli.seed)
        }
        Command::Detect {
            cloud,
            world,
            params,
            out,
            overlay,
            id,
        } => commands::detect(
            cloud,
            world,
            params.as_deref(),
            out,
            overlay.as_deref(),
            id.as_deref(),
            cli.debug_dump.as_deref(),
            &bundle,
        ),
        Command::Eval {
            results,
            annotations,
            out,
        } => commands::eval(results, annotations, out.as_deref()),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message);
            ExitCode::from(e.code)
        }
    }
}
