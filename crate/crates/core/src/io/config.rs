//! JSON schemas for configuration, scene description, cached world frames,
//! calibration results, detections, annotations, and reports.
//!
//! Angles are degrees and small lengths millimeters in these files; the
//! conversion to the library's radians/meters happens here and nowhere else.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::calib::CalibrationResult;
use crate::contour::{ClusterParams, CompartmentResult, FusionParams};
use crate::geom::{EulerAngles, Real, RigidTransform, Vec3};
use crate::lines::LineDetectParams;
use crate::metrics::{Annotation, EvalReport, SizeClass};
use crate::pipeline::{DetectParams, StageStats, StageTimings};
use crate::scan::{Extrinsics, SensorConfig};
use crate::segment::SegmentationParams;
use crate::site::{ClutterBox, FenceTruck, ParkingLayout, SiteBuilder};
use crate::world::{CropBounds, ReflectorSpec};

pub const SCHEMA_VERSION: u32 = 1;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::file(path, e))
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

// ── sensor ──────────────────────────────────────────────────────────────

/// Sensor settings with degree-valued angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfigFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub scan_sector_deg: [Real; 2],
    pub beam_resolution_deg: Real,
    pub platform_sweep_deg: [Real; 2],
    pub platform_resolution_deg: Real,
    pub scan_frequency_hz: Real,
    pub range_noise_sigma_m: Real,
    pub mount_height_m: Real,
}

impl Default for SensorConfigFile {
    fn default() -> Self {
        Self::from(&SensorConfig::default())
    }
}

impl From<&SensorConfig> for SensorConfigFile {
    fn from(c: &SensorConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scan_sector_deg: [c.scan_sector[0].to_degrees(), c.scan_sector[1].to_degrees()],
            beam_resolution_deg: c.beam_resolution.to_degrees(),
            platform_sweep_deg: [
                c.platform_sweep[0].to_degrees(),
                c.platform_sweep[1].to_degrees(),
            ],
            platform_resolution_deg: c.platform_resolution.to_degrees(),
            scan_frequency_hz: c.scan_frequency,
            range_noise_sigma_m: c.range_noise_sigma,
            mount_height_m: c.mount_height,
        }
    }
}

impl SensorConfigFile {
    pub fn to_config(&self) -> Result<SensorConfig, crate::scan::ScanError> {
        let cfg = SensorConfig {
            scan_sector: [
                self.scan_sector_deg[0].to_radians(),
                self.scan_sector_deg[1].to_radians(),
            ],
            beam_resolution: self.beam_resolution_deg.to_radians(),
            platform_sweep: [
                self.platform_sweep_deg[0].to_radians(),
                self.platform_sweep_deg[1].to_radians(),
            ],
            platform_resolution: self.platform_resolution_deg.to_radians(),
            scan_frequency: self.scan_frequency_hz,
            range_noise_sigma: self.range_noise_sigma_m,
            mount_height: self.mount_height_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

// ── extrinsics / calibration ────────────────────────────────────────────

/// Extrinsics with degree angles and millimeter translations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrinsicsFile {
    pub roll_deg: Real,
    pub pitch_deg: Real,
    pub yaw_deg: Real,
    pub translation_mm: [Real; 3],
}

impl From<&Extrinsics> for ExtrinsicsFile {
    fn from(e: &Extrinsics) -> Self {
        Self {
            roll_deg: e.rotation.roll.to_degrees(),
            pitch_deg: e.rotation.pitch.to_degrees(),
            yaw_deg: e.rotation.yaw.to_degrees(),
            translation_mm: [
                e.translation.x * 1e3,
                e.translation.y * 1e3,
                e.translation.z * 1e3,
            ],
        }
    }
}

impl ExtrinsicsFile {
    pub fn to_extrinsics(&self) -> Extrinsics {
        Extrinsics::new(
            EulerAngles::from_degrees(self.roll_deg, self.pitch_deg, self.yaw_deg),
            Vec3::new(
                self.translation_mm[0] / 1e3,
                self.translation_mm[1] / 1e3,
                self.translation_mm[2] / 1e3,
            ),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationResultFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub extrinsics: ExtrinsicsFile,
    pub std_error_roll_deg: Real,
    pub std_error_yaw_deg: Real,
    pub std_error_tx_mm: Real,
    pub std_error_tz_mm: Real,
    pub rot_residual_norm: Real,
    pub trans_residual_norm: Real,
    pub rot_iterations: usize,
    pub trans_iterations: usize,
    pub pinned_parameters: Vec<String>,
}

impl From<&CalibrationResult> for CalibrationResultFile {
    fn from(r: &CalibrationResult) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            extrinsics: ExtrinsicsFile::from(&r.extrinsics),
            std_error_roll_deg: r.std_errors.roll.to_degrees(),
            std_error_yaw_deg: r.std_errors.yaw.to_degrees(),
            std_error_tx_mm: r.std_errors.t_x * 1e3,
            std_error_tz_mm: r.std_errors.t_z * 1e3,
            rot_residual_norm: r.rot_residual_norm,
            trans_residual_norm: r.trans_residual_norm,
            rot_iterations: r.rot_iterations,
            trans_iterations: r.trans_iterations,
            pinned_parameters: r.pinned_parameters.clone(),
        }
    }
}

// ── scene description ───────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveFile {
    /// upright box, platform frame
    Box {
        label: String,
        center: [Real; 3],
        size: [Real; 3],
        #[serde(default)]
        yaw_deg: Real,
        intensity: Real,
    },
    /// horizontal rectangle at a fixed height
    HorizontalRect {
        label: String,
        center: [Real; 3],
        size: [Real; 2],
        intensity: Real,
    },
    /// vertical rectangle (width along the yawed x axis)
    VerticalRect {
        label: String,
        center: [Real; 3],
        width: Real,
        height: Real,
        #[serde(default)]
        yaw_deg: Real,
        intensity: Real,
    },
    /// horizontal disc
    Disc {
        label: String,
        center: [Real; 3],
        radius: Real,
        intensity: Real,
    },
}

impl PrimitiveFile {
    fn to_primitive(&self) -> crate::scene::ScenePrimitive {
        use crate::scene::{ground_disc, horizontal_rect, vertical_rect, yawed_box};
        match self {
            PrimitiveFile::Box {
                label,
                center,
                size,
                yaw_deg,
                intensity,
            } => yawed_box(
                label,
                Vec3::new(center[0], center[1], center[2]),
                Vec3::new(size[0], size[1], size[2]),
                yaw_deg.to_radians(),
                *intensity,
            ),
            PrimitiveFile::HorizontalRect {
                label,
                center,
                size,
                intensity,
            } => horizontal_rect(label, [center[0], center[1]], *size, center[2], *intensity),
            PrimitiveFile::VerticalRect {
                label,
                center,
                width,
                height,
                yaw_deg,
                intensity,
            } => vertical_rect(
                label,
                Vec3::new(center[0], center[1], center[2]),
                *width,
                *height,
                yaw_deg.to_radians(),
                *intensity,
            ),
            PrimitiveFile::Disc {
                label,
                center,
                radius,
                intensity,
            } => ground_disc(
                label,
                [center[0], center[1]],
                center[2],
                *radius,
                *intensity,
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterFile {
    pub center: [Real; 2],
    pub size: [Real; 3],
    #[serde(default)]
    pub yaw_deg: Real,
    pub intensity: Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruckFile {
    pub id: String,
    pub length: Real,
    pub width: Real,
    pub fence_height: Real,
    #[serde(default = "default_bed_height")]
    pub bed_height: Real,
    #[serde(default = "default_true")]
    pub rear_fence: bool,
    /// cab block: [length, height from ground]
    #[serde(default)]
    pub cab: Option<[Real; 2]>,
    #[serde(default)]
    pub clutter: Vec<ClutterFile>,
    /// site-frame position of the interior corner
    pub position: [Real; 2],
    #[serde(default)]
    pub yaw_deg: Real,
}

fn default_bed_height() -> Real {
    1.1
}

fn default_true() -> bool {
    true
}

impl TruckFile {
    fn to_truck(&self) -> FenceTruck {
        let mut t = FenceTruck::new(self.length, self.width, self.fence_height);
        t.bed_height = self.bed_height;
        t.rear_fence = self.rear_fence;
        t.cab = self.cab.map(|c| (c[0], c[1]));
        t.clutter = self
            .clutter
            .iter()
            .map(|c| ClutterBox {
                center_xy: c.center,
                size: Vec3::new(c.size[0], c.size[1], c.size[2]),
                yaw: c.yaw_deg.to_radians(),
                intensity: c.intensity,
            })
            .collect();
        t.position = self.position;
        t.yaw = self.yaw_deg.to_radians();
        t
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParkingFile {
    /// ground-plane corners in site coordinates (origin under the sensor):
    /// origin corner, along length, diagonal, along width
    pub corners: [[Real; 2]; 4],
    #[serde(default = "default_reflector_radius")]
    pub reflector_radius: Real,
    #[serde(default = "default_reflector_intensity")]
    pub reflector_intensity: Real,
}

fn default_reflector_radius() -> Real {
    0.2
}

fn default_reflector_intensity() -> Real {
    0.95
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteFile {
    #[serde(default)]
    pub walls: bool,
    #[serde(default)]
    pub outside_clutter: bool,
    #[serde(default = "default_ground_intensity")]
    pub ground_intensity: Real,
}

fn default_ground_intensity() -> Real {
    0.2
}

/// Scene description consumed by the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default = "default_mount_height")]
    pub mount_height: Real,
    #[serde(default)]
    pub site: Option<SiteFile>,
    #[serde(default)]
    pub parking: Option<ParkingFile>,
    #[serde(default)]
    pub trucks: Vec<TruckFile>,
    #[serde(default)]
    pub primitives: Vec<PrimitiveFile>,
    /// randomly posed planar calibration targets (placed from the run seed)
    #[serde(default)]
    pub calibration_boards: Option<usize>,
}

fn default_mount_height() -> Real {
    3.3
}

/// A scene assembled from its description, with any available ground truth.
pub struct BuiltScene {
    pub scene: crate::scene::SceneModel,
    pub mount_height: Real,
    pub parking: Option<ParkingLayout>,
    pub truth: Option<TruthFile>,
}

impl SceneFile {
    pub fn build(&self, seed: u64) -> Result<BuiltScene, String> {
        let parking = self.parking.as_ref().map(|p| ParkingLayout {
            corners_site: p.corners.map(|c| Vec3::new(c[0], c[1], 0.0)),
            reflector_radius: p.reflector_radius,
            reflector_intensity: p.reflector_intensity,
        });
        let mut builder = SiteBuilder {
            mount_height: self.mount_height,
            trucks: self.trucks.iter().map(|t| t.to_truck()).collect(),
            ..Default::default()
        };
        if let Some(site) = &self.site {
            builder.with_walls = site.walls;
            builder.outside_clutter = site.outside_clutter;
            builder.ground_intensity = site.ground_intensity;
        }

        let mut scene;
        let mut truth = None;
        if let Some(layout) = &parking {
            builder.parking = layout.clone();
            scene = builder.build();
            let world = builder.world_from_platform();
            let annotations: Vec<AnnotationFileEntry> = self
                .trucks
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let corners = builder.truth_corners_world(i);
                    AnnotationFileEntry {
                        id: t.id.clone(),
                        key_points: corners.map(|c| [c.x, c.y, c.z]),
                        dims: [t.length, t.width, t.fence_height],
                        size_class: SizeClass::from_length(t.length),
                    }
                })
                .collect();
            truth = Some(TruthFile {
                schema_version: SCHEMA_VERSION,
                world_from_platform: Some(world.to_matrix4_rows()),
                annotations,
            });
        } else if self.site.is_some() || !self.trucks.is_empty() {
            return Err(
                "trucks or site features require a `parking` section (truth is \
                 expressed in the parking frame)"
                    .into(),
            );
        } else {
            scene = crate::scene::SceneModel::default();
        }

        for p in &self.primitives {
            scene.primitives.push(p.to_primitive());
        }
        if let Some(n) = self.calibration_boards {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x0b0a_4d5f);
            scene
                .primitives
                .extend(crate::calib::calibration_boards(n, &mut rng));
        }
        if scene.primitives.is_empty() {
            return Ok(BuiltScene {
                scene,
                mount_height: self.mount_height,
                parking,
                truth,
            });
        }
        let scene = crate::scene::SceneModel::new(scene.primitives).map_err(|e| e.to_string())?;
        Ok(BuiltScene {
            scene,
            mount_height: self.mount_height,
            parking,
            truth,
        })
    }
}

// ── plane samples (JSON form) ───────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneSamplesEntry {
    pub id: String,
    /// rows of (range m, azimuth rad, platform rad)
    pub samples: Vec<[Real; 3]>,
}

/// JSON alternative to the plane-sample CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneSamplesFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub datasets: Vec<PlaneSamplesEntry>,
}

impl PlaneSamplesFile {
    pub fn to_groups(&self) -> Vec<(String, Vec<crate::scan::ScanSample>)> {
        self.datasets
            .iter()
            .map(|d| {
                (
                    d.id.clone(),
                    d.samples
                        .iter()
                        .map(|s| crate::scan::ScanSample::new(s[0], s[1], s[2]))
                        .collect(),
                )
            })
            .collect()
    }
}

/// Bundled defaults loadable with the global `--config` flag; any section a
/// command needs can still be overridden by its specific flag.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfigFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub sensor: Option<SensorConfigFile>,
    #[serde(default)]
    pub extrinsics: Option<ExtrinsicsFile>,
    #[serde(default)]
    pub detect: Option<DetectParamsFile>,
}

// ── annotations / truth ─────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationFileEntry {
    pub id: String,
    pub key_points: [[Real; 3]; 8],
    pub dims: [Real; 3],
    pub size_class: SizeClass,
}

impl AnnotationFileEntry {
    pub fn to_annotation(&self) -> Annotation {
        Annotation {
            id: self.id.clone(),
            key_points: self.key_points.map(|p| Vec3::new(p[0], p[1], p[2])),
            dims: self.dims,
            size_class: self.size_class,
        }
    }
}

/// Ground-truth sidecar written by the simulator; doubles as the annotation
/// schema for externally labeled clouds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub world_from_platform: Option<[[Real; 4]; 4]>,
    pub annotations: Vec<AnnotationFileEntry>,
}

// ── parking / world frame ───────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectorSpecFile {
    pub name: String,
    pub seed_min: [Real; 3],
    pub seed_max: [Real; 3],
    pub intensity_threshold: Real,
    pub expected_radius: Real,
}

impl ReflectorSpecFile {
    pub fn to_spec(&self) -> ReflectorSpec {
        ReflectorSpec {
            name: self.name.clone(),
            seed_min: Vec3::new(self.seed_min[0], self.seed_min[1], self.seed_min[2]),
            seed_max: Vec3::new(self.seed_max[0], self.seed_max[1], self.seed_max[2]),
            intensity_threshold: self.intensity_threshold,
            expected_radius: self.expected_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropBoundsFile {
    pub z_min: Real,
    pub z_max: Real,
}

impl CropBoundsFile {
    pub fn to_bounds(&self) -> Result<CropBounds, crate::world::WorldError> {
        CropBounds::new(self.z_min, self.z_max)
    }
}

/// One-time parking setup input: the four reflector priors plus the crop
/// window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParkingConfigFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub reflectors: [ReflectorSpecFile; 4],
    pub crop: CropBoundsFile,
}

/// Cached world frame reused across runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldFrameFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    /// row-major homogeneous platform-to-world transform, meters
    pub world_from_platform: [[Real; 4]; 4],
    pub x_max: Real,
    pub y_max: Real,
    pub crop: CropBoundsFile,
    /// reflector centers in the platform frame, for diagnostics
    pub corners_platform: [[Real; 3]; 4],
}

impl WorldFrameFile {
    pub fn transform(&self) -> Result<RigidTransform, crate::geom::GeomError> {
        RigidTransform::from_matrix4_rows(&self.world_from_platform)
    }

    pub fn area(&self) -> crate::world::ParkingArea {
        crate::world::ParkingArea {
            corners: self.corners_platform.map(|c| Vec3::new(c[0], c[1], c[2])),
            x_max: self.x_max,
            y_max: self.y_max,
        }
    }
}

// ── detection parameters and results ────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectParamsFile {
    pub schema_version: u32,
    pub k_neighbors: usize,
    pub normal_angle_deg: Real,
    pub min_region_size: usize,
    pub line_outlier_scale: Real,
    pub line_support_scale: Real,
    pub fusion_latitude_bin_deg: Real,
    pub fusion_relative_offset_max: Real,
    pub fusion_perp_factor: Real,
    pub cluster_cos_tolerance: Real,
    pub cluster_max_distance: Real,
    pub cluster_min_separation: Real,
    pub cluster_min_overlap: Real,
}

impl Default for DetectParamsFile {
    fn default() -> Self {
        Self::from(&DetectParams::default())
    }
}

impl From<&DetectParams> for DetectParamsFile {
    fn from(p: &DetectParams) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            k_neighbors: p.segmentation.k,
            normal_angle_deg: p.segmentation.normal_angle.to_degrees(),
            min_region_size: p.segmentation.min_region_size,
            line_outlier_scale: p.line_detect.outlier_scale,
            line_support_scale: p.line_detect.support_scale,
            fusion_latitude_bin_deg: p.fusion.latitude_bin.to_degrees(),
            fusion_relative_offset_max: p.fusion.relative_offset_max,
            fusion_perp_factor: p.fusion.perp_factor,
            cluster_cos_tolerance: p.cluster.cos_tolerance,
            cluster_max_distance: p.cluster.max_distance,
            cluster_min_separation: p.cluster.min_separation,
            cluster_min_overlap: p.cluster.min_overlap,
        }
    }
}

impl DetectParamsFile {
    pub fn to_params(&self) -> DetectParams {
        DetectParams {
            segmentation: SegmentationParams {
                k: self.k_neighbors,
                normal_angle: self.normal_angle_deg.to_radians(),
                min_region_size: self.min_region_size,
            },
            line_detect: LineDetectParams {
                outlier_scale: self.line_outlier_scale,
                support_scale: self.line_support_scale,
            },
            fusion: FusionParams {
                latitude_bin: self.fusion_latitude_bin_deg.to_radians(),
                relative_offset_max: self.fusion_relative_offset_max,
                perp_factor: self.fusion_perp_factor,
            },
            cluster: ClusterParams {
                cos_tolerance: self.cluster_cos_tolerance,
                max_distance: self.cluster_max_distance,
                min_separation: self.cluster_min_separation,
                min_overlap: self.cluster_min_overlap,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingsFile {
    pub crop_s: Real,
    pub normals_s: Real,
    pub regions_s: Real,
    pub lines_s: Real,
    pub keypoints_s: Real,
    pub total_s: Real,
}

impl From<&StageTimings> for TimingsFile {
    fn from(t: &StageTimings) -> Self {
        Self {
            crop_s: t.crop,
            normals_s: t.normals,
            regions_s: t.regions,
            lines_s: t.lines,
            keypoints_s: t.keypoints,
            total_s: t.total,
        }
    }
}

/// Detection result written by the `detect` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub id: String,
    /// world frame, meters; bottom ring counterclockwise then top ring
    pub key_points: [[Real; 3]; 8],
    pub dims: [Real; 3],
    /// corners grown past their detected segment, per clustered edge and end
    pub extended_corners: [[bool; 2]; 4],
    pub input_points: usize,
    pub cropped_points: usize,
    pub region_count: usize,
    pub segment_count: usize,
    pub timings: TimingsFile,
}

impl DetectionFile {
    pub fn from_result(
        id: &str,
        result: &CompartmentResult,
        stats: &StageStats,
        timings: &StageTimings,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.to_string(),
            key_points: result.key_points.map(|p| [p.x, p.y, p.z]),
            dims: result.dims,
            extended_corners: result.diagnostics.extended,
            input_points: stats.input_points,
            cropped_points: stats.cropped_points,
            region_count: stats.region_count,
            segment_count: stats.segment_count,
            timings: TimingsFile::from(timings),
        }
    }

    pub fn key_points_vec(&self) -> [Vec3; 8] {
        self.key_points.map(|p| Vec3::new(p[0], p[1], p[2]))
    }
}

/// Report wrapper with the schema version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sensor_config_degree_round_trip() {
        let cfg = SensorConfig::default();
        let file = SensorConfigFile::from(&cfg);
        assert_relative_eq!(file.scan_sector_deg[0], 45.0, epsilon = 1e-12);
        assert_relative_eq!(file.beam_resolution_deg, 0.25, epsilon = 1e-12);
        let back = file.to_config().unwrap();
        assert_relative_eq!(back.scan_sector[0], cfg.scan_sector[0], epsilon = 1e-12);
    }

    #[test]
    fn extrinsics_units_convert() {
        let file = ExtrinsicsFile {
            roll_deg: -1.46,
            pitch_deg: 5.36,
            yaw_deg: -0.45,
            translation_mm: [14.56, -0.16, 119.67],
        };
        let e = file.to_extrinsics();
        assert_relative_eq!(e.translation.z, 0.11967, epsilon = 1e-12);
        assert_relative_eq!(e.rotation.pitch.to_degrees(), 5.36, epsilon = 1e-12);
        let back = ExtrinsicsFile::from(&e);
        assert_relative_eq!(back.translation_mm[0], 14.56, epsilon = 1e-9);
    }

    #[test]
    fn scene_file_builds_truck_scene_with_truth() {
        let text = r#"{
            "parking": {"corners": [[-7.5,-2.6],[7.5,-2.6],[7.5,1.4],[-7.5,1.4]]},
            "trucks": [{
                "id": "truck_0", "length": 8.0, "width": 2.4, "fence_height": 1.0,
                "position": [-5.0, -1.8]
            }]
        }"#;
        let file: SceneFile = serde_json::from_str(text).unwrap();
        let built = file.build(7).unwrap();
        assert!(!built.scene.is_empty());
        let truth = built.truth.unwrap();
        assert_eq!(truth.annotations.len(), 1);
        assert_eq!(truth.annotations[0].id, "truck_0");
        // corners are expressed in the parking frame: all inside the box
        for p in truth.annotations[0].key_points {
            assert!(p[0] > 0.0 && p[0] < 15.0);
            assert!(p[1] > 0.0 && p[1] < 4.0);
        }
    }

    #[test]
    fn trucks_without_parking_are_rejected() {
        let text = r#"{
            "trucks": [{
                "id": "t", "length": 8.0, "width": 2.4, "fence_height": 1.0,
                "position": [0.0, -3.0]
            }]
        }"#;
        let file: SceneFile = serde_json::from_str(text).unwrap();
        assert!(file.build(1).is_err());
    }

    #[test]
    fn detect_params_round_trip() {
        let params = DetectParams::default();
        let file = DetectParamsFile::from(&params);
        assert_eq!(file.k_neighbors, 33);
        assert_relative_eq!(file.normal_angle_deg, 19.0, epsilon = 1e-12);
        let back = file.to_params();
        assert_eq!(back.segmentation.k, params.segmentation.k);
        assert_relative_eq!(
            back.segmentation.normal_angle,
            params.segmentation.normal_angle,
            epsilon = 1e-12
        );
        assert_eq!(back.cluster, params.cluster);
        assert_eq!(back.line_detect, params.line_detect);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"corners": [[0,0],[1,0],[1,1],[0,1]], "bogus": 1}"#;
        assert!(serde_json::from_str::<ParkingFile>(text).is_err());
    }
}
