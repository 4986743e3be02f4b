//! Subcommand implementations mapping library errors onto the documented
//! exit codes.

use std::path::Path;

use anyhow::Context;
use loadbay_core::calib::{self, CalibError};
use loadbay_core::contour::ContourError;
use loadbay_core::io;
use loadbay_core::metrics::{self, VehiclePrediction};
use loadbay_core::pipeline::{self, PipelineError};
use loadbay_core::scan::{samples_to_cloud, SensorConfig};
use loadbay_core::sim::{returns_to_samples, simulate_scan};
use loadbay_core::world::{self, WorldError};
use loadbay_core::PointCloud;

/// An error carrying its exit code.
pub struct CliError {
    pub code: u8,
    pub message: anyhow::Error,
}

type CliResult = Result<(), CliError>;

const EXIT_UNEXPECTED: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_DEGENERATE_CALIBRATION: u8 = 3;
const EXIT_REFLECTOR_NOT_FOUND: u8 = 4;
const EXIT_NO_VEHICLE: u8 = 5;
const EXIT_EMPTY_INTERSECTION: u8 = 6;
const EXIT_SEGMENTATION: u8 = 7;
const EXIT_INSUFFICIENT_EDGES: u8 = 8;
const EXIT_DEGENERATE_CONTOUR: u8 = 9;

fn fail(code: u8, message: anyhow::Error) -> CliError {
    CliError { code, message }
}

fn bad_input<E: Into<anyhow::Error>>(e: E) -> CliError {
    fail(EXIT_BAD_INPUT, e.into())
}

pub fn load_bundle(path: &Path) -> Result<io::PipelineConfigFile, CliError> {
    io::read_json(path).map_err(bad_input)
}

fn read_cloud(path: &Path) -> Result<PointCloud, CliError> {
    let by_extension = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match by_extension.as_deref() {
        Some("ply") => io::read_ply(path).map_err(bad_input),
        _ => io::read_pcd(path).map_err(bad_input),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    scene_path: &Path,
    sensor_path: Option<&Path>,
    extrinsics_path: Option<&Path>,
    out: &Path,
    truth_out: Option<&Path>,
    samples_out: Option<&Path>,
    seed: u64,
    bundle: &io::PipelineConfigFile,
) -> CliResult {
    let scene_file: io::SceneFile = io::read_json(scene_path).map_err(bad_input)?;
    let built = scene_file
        .build(seed)
        .map_err(|reason| bad_input(anyhow::anyhow!("invalid scene: {reason}")))?;

    let sensor = match sensor_path {
        Some(p) => {
            let file: io::SensorConfigFile = io::read_json(p).map_err(bad_input)?;
            file.to_config().map_err(bad_input)?
        }
        None => match &bundle.sensor {
            Some(file) => file.to_config().map_err(bad_input)?,
            None => SensorConfig {
                mount_height: built.mount_height,
                ..SensorConfig::default()
            },
        },
    };
    let extrinsics = match extrinsics_path {
        Some(p) => {
            let file: io::ExtrinsicsFile = io::read_json(p).map_err(bad_input)?;
            file.to_extrinsics()
        }
        None => bundle
            .extrinsics
            .as_ref()
            .map(|f| f.to_extrinsics())
            .unwrap_or_default(),
    };

    let returns = simulate_scan(&built.scene, &sensor, &extrinsics, seed);
    let cloud = samples_to_cloud(&returns_to_samples(&returns), &extrinsics)
        .map_err(|e| fail(EXIT_UNEXPECTED, e.into()))?;
    io::write_pcd(&cloud, out).map_err(bad_input)?;
    println!(
        "simulated {} returns over {} primitives -> {}",
        returns.len(),
        built.scene.primitives.len(),
        out.display()
    );

    if let Some(truth_path) = truth_out {
        match &built.truth {
            Some(truth) => io::write_json(truth, truth_path).map_err(bad_input)?,
            None => {
                return Err(bad_input(anyhow::anyhow!(
                    "scene has no parking section; no ground truth to write"
                )))
            }
        }
    }
    if let Some(samples_path) = samples_out {
        let rows: Vec<(String, loadbay_core::ScanSample)> = returns
            .iter()
            .map(|r| (built.scene.primitives[r.primitive].label.clone(), r.sample))
            .collect();
        io::write_plane_samples_csv(&rows, samples_path).map_err(bad_input)?;
    }
    Ok(())
}

pub fn calibrate(
    planes: &Path,
    init: Option<&Path>,
    out: &Path,
    bundle: &io::PipelineConfigFile,
) -> CliResult {
    let by_extension = planes
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let groups = match by_extension.as_deref() {
        Some("json") => {
            let file: io::PlaneSamplesFile = io::read_json(planes).map_err(bad_input)?;
            file.to_groups()
        }
        _ => io::read_plane_samples_csv(planes).map_err(bad_input)?,
    };
    let datasets: Vec<calib::PlaneDataset> = groups
        .into_iter()
        .map(|(id, samples)| calib::PlaneDataset::new(id, samples))
        .collect::<Result<_, _>>()
        .map_err(|e| fail(EXIT_DEGENERATE_CALIBRATION, e.into()))?;
    let init = match init {
        Some(p) => {
            let file: io::ExtrinsicsFile = io::read_json(p).map_err(bad_input)?;
            file.to_extrinsics()
        }
        None => bundle
            .extrinsics
            .as_ref()
            .map(|f| f.to_extrinsics())
            .unwrap_or_default(),
    };
    let result = calib::calibrate(&datasets, &init).map_err(|e| {
        let code = match e {
            CalibError::InsufficientPlanes { .. }
            | CalibError::DegenerateGeometry { .. }
            | CalibError::SingleSweepAngle { .. } => EXIT_DEGENERATE_CALIBRATION,
            _ => EXIT_UNEXPECTED,
        };
        fail(code, e.into())
    })?;
    io::write_json(&io::CalibrationResultFile::from(&result), out).map_err(bad_input)?;
    let e = &result.extrinsics;
    println!(
        "calibrated: roll {:+.3}°, yaw {:+.3}°, t_x {:+.2} mm, t_z {:+.2} mm \
         ({} + {} iterations, pinned: {})",
        e.rotation.roll.to_degrees(),
        e.rotation.yaw.to_degrees(),
        e.translation.x * 1e3,
        e.translation.z * 1e3,
        result.rot_iterations,
        result.trans_iterations,
        result.pinned_parameters.join(", ")
    );
    Ok(())
}

pub fn setup_parking(cloud_path: &Path, config: &Path, out: &Path, seed: u64) -> CliResult {
    let cloud = read_cloud(cloud_path)?;
    let config: io::ParkingConfigFile = io::read_json(config).map_err(bad_input)?;
    let mut centers = Vec::with_capacity(4);
    for (i, spec_file) in config.reflectors.iter().enumerate() {
        let spec = spec_file.to_spec();
        let find = world::locate_reflector(&cloud, &spec, seed.wrapping_add(i as u64)).map_err(
            |e| match e {
                WorldError::TooFewReflectorPoints { .. } | WorldError::ReflectorFit { .. } => {
                    fail(EXIT_REFLECTOR_NOT_FOUND, e.into())
                }
                other => fail(EXIT_UNEXPECTED, other.into()),
            },
        )?;
        if find.radius_warning {
            eprintln!(
                "warning: reflector `{}` radius {:.3} m deviates from expected {:.3} m",
                spec.name, find.estimated_radius, spec.expected_radius
            );
        }
        println!(
            "reflector `{}`: center ({:.3}, {:.3}, {:.3}), {} inliers",
            spec.name, find.center.x, find.center.y, find.center.z, find.inlier_count
        );
        centers.push(find.center);
    }
    let corners = [centers[0], centers[1], centers[2], centers[3]];
    let (transform, area) =
        world::build_world_frame(&corners).map_err(|e| fail(EXIT_BAD_INPUT, e.into()))?;
    let file = io::WorldFrameFile {
        schema_version: io::SCHEMA_VERSION,
        world_from_platform: transform.to_matrix4_rows(),
        x_max: area.x_max,
        y_max: area.y_max,
        crop: config.crop,
        corners_platform: area.corners.map(|c| [c.x, c.y, c.z]),
    };
    io::write_json(&file, out).map_err(bad_input)?;
    println!(
        "parking area {:.2} m x {:.2} m -> {}",
        area.x_max,
        area.y_max,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn detect(
    cloud_path: &Path,
    world_path: &Path,
    params_path: Option<&Path>,
    out: &Path,
    overlay: Option<&Path>,
    id: Option<&str>,
    debug_dump: Option<&Path>,
    bundle: &io::PipelineConfigFile,
) -> CliResult {
    let cloud = read_cloud(cloud_path)?;
    let world_file: io::WorldFrameFile = io::read_json(world_path).map_err(bad_input)?;
    let transform = world_file.transform().map_err(bad_input)?;
    let area = world_file.area();
    let bounds = world_file.crop.to_bounds().map_err(bad_input)?;
    let params = match params_path {
        Some(p) => {
            let file: io::DetectParamsFile = io::read_json(p).map_err(bad_input)?;
            file.to_params()
        }
        None => bundle
            .detect
            .as_ref()
            .map(|f| f.to_params())
            .unwrap_or_default(),
    };

    let detection = pipeline::detect_compartment(&cloud, &transform, &area, &bounds, &params)
        .map_err(|e| {
            let code = match &e {
                PipelineError::EmptyCrop { .. } => EXIT_NO_VEHICLE,
                PipelineError::Segmentation(_) | PipelineError::NoLineSegments { .. } => {
                    EXIT_SEGMENTATION
                }
                PipelineError::Contour(ContourError::NoSegments)
                | PipelineError::Contour(ContourError::InsufficientEdges { .. }) => {
                    EXIT_INSUFFICIENT_EDGES
                }
                PipelineError::Contour(ContourError::DegenerateContour { .. }) => {
                    EXIT_DEGENERATE_CONTOUR
                }
            };
            fail(code, e.into())
        })?;

    let vehicle_id = id
        .map(|s| s.to_string())
        .or_else(|| {
            cloud_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "vehicle".into());
    let file = io::DetectionFile::from_result(
        &vehicle_id,
        &detection.result,
        &detection.stats,
        &detection.timings,
    );
    io::write_json(&file, out).map_err(bad_input)?;

    let t = &detection.timings;
    println!(
        "{} points cropped to {}, {} regions, {} segments",
        detection.stats.input_points,
        detection.stats.cropped_points,
        detection.stats.region_count,
        detection.stats.segment_count
    );
    println!(
        "stage timings: crop {:.3} s, normals {:.3} s, regions {:.3} s, \
         lines {:.3} s, key points {:.3} s, total {:.3} s",
        t.crop, t.normals, t.regions, t.lines, t.keypoints, t.total
    );
    println!(
        "compartment {:.2} m x {:.2} m x {:.2} m -> {}",
        detection.result.dims[0],
        detection.result.dims[1],
        detection.result.dims[2],
        out.display()
    );

    if let Some(overlay_path) = overlay {
        io::write_overlay_ply(
            &detection.cropped,
            &detection.result.contour_edges,
            overlay_path,
        )
        .map_err(bad_input)?;
    }
    if let Some(dir) = debug_dump {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(|e| fail(EXIT_UNEXPECTED, e))?;
        io::write_region_debug_ply(
            &detection.cropped.positions,
            &detection.regions,
            &dir.join(format!("{vehicle_id}_regions.ply")),
        )
        .map_err(bad_input)?;
        let segments: Vec<Vec<[[f64; 3]; 2]>> = detection
            .segments
            .iter()
            .map(|p| {
                p.segments
                    .iter()
                    .map(|s| {
                        [
                            [s.start.x, s.start.y, s.start.z],
                            [s.end.x, s.end.y, s.end.z],
                        ]
                    })
                    .collect()
            })
            .collect();
        io::write_json(&segments, &dir.join(format!("{vehicle_id}_segments.json")))
            .map_err(bad_input)?;
    }
    Ok(())
}

pub fn eval(results: &Path, annotations: &Path, out: Option<&Path>) -> CliResult {
    let truth: io::TruthFile = io::read_json(annotations).map_err(bad_input)?;
    let annotations: Vec<metrics::Annotation> = truth
        .annotations
        .iter()
        .map(|a| a.to_annotation())
        .collect();

    let mut result_paths = Vec::new();
    if results.is_dir() {
        let entries = std::fs::read_dir(results)
            .with_context(|| format!("reading {}", results.display()))
            .map_err(bad_input)?;
        for entry in entries {
            let path = entry.map_err(|e| bad_input(anyhow::Error::from(e)))?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("json") {
                result_paths.push(path);
            }
        }
        result_paths.sort();
    } else {
        result_paths.push(results.to_path_buf());
    }

    let mut predictions = Vec::new();
    for path in &result_paths {
        let file: io::DetectionFile = io::read_json(path).map_err(bad_input)?;
        predictions.push(VehiclePrediction {
            id: file.id.clone(),
            key_points: file.key_points_vec(),
            runtime_seconds: Some(file.timings.total_s),
        });
    }

    let report = metrics::evaluate_batch(&predictions, &annotations);
    for warning in &report.errors {
        eprintln!("warning: {warning}");
    }
    if report.per_vehicle.is_empty() {
        return Err(fail(
            EXIT_EMPTY_INTERSECTION,
            anyhow::anyhow!(
                "no overlap between {} result(s) and {} annotation(s)",
                predictions.len(),
                annotations.len()
            ),
        ));
    }
    print!("{}", metrics::render_report_table(&report));
    if let Some(out_path) = out {
        io::write_json(
            &io::ReportFile {
                schema_version: io::SCHEMA_VERSION,
                report,
            },
            out_path,
        )
        .map_err(bad_input)?;
    }
    Ok(())
}
