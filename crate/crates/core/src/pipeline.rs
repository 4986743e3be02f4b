//! One-call detection pipeline: crop, segment, detect lines, locate the
//! compartment key points, with per-stage timings.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::contour::{
    cluster_edges, complete_contour, fuse_stage, refine_edge_extents, ClusterParams,
    CompartmentResult, ContourError, FusionParams, PlaneLines,
};
use crate::geom::{Real, RigidTransform, Vec3};
use crate::knn::KnnGraph;
use crate::lines::{detect_lines_in_plane, LineDetectParams};
use crate::segment::{estimate_normals, region_grow, SegmentError, SegmentationParams};
use crate::world::{crop_to_parking, CropBounds, ParkingArea};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no vehicle in parking area: {kept} of {total} points inside the crop box")]
    EmptyCrop { kept: usize, total: usize },
    #[error("segmentation stage: {0}")]
    Segmentation(#[from] SegmentError),
    #[error("line stage: no line segments detected in {regions} regions")]
    NoLineSegments { regions: usize },
    #[error(transparent)]
    Contour(#[from] ContourError),
}

/// All tunables of the detection stages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectParams {
    pub segmentation: SegmentationParams,
    pub line_detect: LineDetectParams,
    pub fusion: FusionParams,
    pub cluster: ClusterParams,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub crop: Real,
    pub normals: Real,
    pub regions: Real,
    pub lines: Real,
    pub keypoints: Real,
    pub total: Real,
}

/// Sizes of the intermediate products.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageStats {
    pub input_points: usize,
    pub cropped_points: usize,
    pub region_count: usize,
    pub segment_count: usize,
}

/// A completed detection with its intermediates for inspection.
pub struct Detection {
    pub result: CompartmentResult,
    pub timings: StageTimings,
    pub stats: StageStats,
    /// cropped world-frame cloud the detection ran on
    pub cropped: PointCloud,
    pub regions: Vec<crate::segment::PlanarRegion>,
    pub segments: Vec<PlaneLines>,
}

/// Run the full localization on a platform-frame cloud.
pub fn detect_compartment(
    cloud: &PointCloud,
    world_from_platform: &RigidTransform,
    area: &ParkingArea,
    bounds: &CropBounds,
    params: &DetectParams,
) -> Result<Detection, PipelineError> {
    let t_start = Instant::now();
    let mut timings = StageTimings::default();
    let mut stats = StageStats {
        input_points: cloud.len(),
        ..Default::default()
    };

    let t = Instant::now();
    let cropped = crop_to_parking(cloud, world_from_platform, area, bounds);
    timings.crop = t.elapsed().as_secs_f64();
    stats.cropped_points = cropped.len();
    if cropped.len() <= params.segmentation.k {
        return Err(PipelineError::EmptyCrop {
            kept: cropped.len(),
            total: cloud.len(),
        });
    }

    let t = Instant::now();
    let graph = KnnGraph::build(&cropped.positions, params.segmentation.k);
    let viewpoint = world_from_platform.apply(&Vec3::zeros());
    let normals = estimate_normals(&cropped.positions, &graph, &viewpoint)?;
    timings.normals = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let regions = region_grow(&cropped.positions, &normals, &graph, &params.segmentation)?;
    timings.regions = t.elapsed().as_secs_f64();
    stats.region_count = regions.len();

    let t = Instant::now();
    let segments: Vec<PlaneLines> = regions
        .par_iter()
        .map(|region| PlaneLines {
            segments: detect_lines_in_plane(&cropped.positions, region, &params.line_detect),
            s_k: region.s_k,
        })
        .collect();
    timings.lines = t.elapsed().as_secs_f64();
    stats.segment_count = segments.iter().map(|p| p.segments.len()).sum();
    if stats.segment_count == 0 {
        return Err(PipelineError::NoLineSegments {
            regions: regions.len(),
        });
    }

    let t = Instant::now();
    let (fused, global_scale) = fuse_stage(&segments, &params.fusion)?;
    let edges = cluster_edges(&fused, &params.cluster)?;
    // grazing-angle sampling starves the boundary grids near the far ends of
    // long vehicles; the surfaces still carry points, so stretch each edge to
    // the extent of its in-tube support before closing the contour
    let tube = (0.75 * global_scale).clamp(0.05, 0.12);
    let edges = refine_edge_extents(&edges, &cropped.positions, tube);
    let result = complete_contour(&edges)?;
    timings.keypoints = t.elapsed().as_secs_f64();
    timings.total = t_start.elapsed().as_secs_f64();

    Ok(Detection {
        result,
        timings,
        stats,
        cropped,
        regions,
        segments,
    })
}
