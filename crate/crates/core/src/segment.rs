//! Normal estimation and region-growing plane segmentation.
//!
//! Normals come from per-point PCA over the k-nearest neighborhood, oriented
//! toward the sensor. Region growing seeds at the lowest-curvature unvisited
//! point and admits a neighbor exactly when its normal is within the angle
//! threshold of the seed normal, so every member provably satisfies the
//! threshold against its region's seed.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{Mat3, Plane, Real, Vec3};
use crate::knn::KnnGraph;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("cloud has {got} points; normal estimation needs more than k = {k}")]
    TooFewPoints { got: usize, k: usize },
    #[error("invalid segmentation parameters: {0}")]
    InvalidParams(String),
}

/// Region-growing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams {
    /// neighbors per point, shared by normal estimation and growing
    pub k: usize,
    /// admission threshold on the angle to the seed normal, radians
    pub normal_angle: Real,
    /// regions smaller than this are discarded as unsegmented
    pub min_region_size: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            k: 33,
            normal_angle: 19f64.to_radians(),
            min_region_size: 60,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), SegmentError> {
        if self.k < 3 {
            return Err(SegmentError::InvalidParams("k must be at least 3".into()));
        }
        if !(self.normal_angle > 0.0 && self.normal_angle < std::f64::consts::FRAC_PI_2) {
            return Err(SegmentError::InvalidParams(
                "normal angle threshold must be in (0, π/2)".into(),
            ));
        }
        Ok(())
    }
}

/// Per-point surface estimate.
#[derive(Debug, Clone, Copy)]
pub struct NormalEstimate {
    pub normal: Vec3,
    /// surface variation: λ_min / (λ0 + λ1 + λ2)
    pub curvature: Real,
}

/// PCA normals over the precomputed neighbor graph, oriented toward
/// `viewpoint`.
pub fn estimate_normals(
    positions: &[Vec3],
    graph: &KnnGraph,
    viewpoint: &Vec3,
) -> Result<Vec<NormalEstimate>, SegmentError> {
    if positions.len() <= graph.k {
        return Err(SegmentError::TooFewPoints {
            got: positions.len(),
            k: graph.k,
        });
    }
    let out: Vec<NormalEstimate> = (0..positions.len())
        .into_par_iter()
        .map(|i| {
            let neighbors = graph.neighbors_of(i);
            let mut mean = positions[i];
            for &j in neighbors {
                mean += positions[j as usize];
            }
            mean /= (neighbors.len() + 1) as Real;
            let mut cov = Mat3::zeros();
            let d0 = positions[i] - mean;
            cov += d0 * d0.transpose();
            for &j in neighbors {
                let d = positions[j as usize] - mean;
                cov += d * d.transpose();
            }
            let eig = SymmetricEigen::new(cov);
            let mut min_i = 0;
            for a in 1..3 {
                if eig.eigenvalues[a] < eig.eigenvalues[min_i] {
                    min_i = a;
                }
            }
            let mut normal = eig.eigenvectors.column(min_i).into_owned();
            if normal.dot(&(viewpoint - positions[i])) < 0.0 {
                normal = -normal;
            }
            let trace = eig.eigenvalues.sum();
            let curvature = if trace > 0.0 {
                eig.eigenvalues[min_i].max(0.0) / trace
            } else {
                0.0
            };
            NormalEstimate { normal, curvature }
        })
        .collect();
    Ok(out)
}

/// A planar region found by growing.
#[derive(Debug, Clone)]
pub struct PlanarRegion {
    pub indices: Vec<u32>,
    pub plane: Plane,
    pub centroid: Vec3,
    /// orthonormal in-plane basis
    pub basis: (Vec3, Vec3),
    /// plane scale: median k-th-neighbor distance over members
    pub s_k: Real,
    /// point scale: median nearest-neighbor distance over members
    pub s_ps: Real,
}

/// Grow planar regions from low-curvature seeds.
///
/// Deterministic: seeds in ascending (curvature, index) order, breadth-first
/// over the stored neighbor lists, each point consumed by the first region
/// that reaches it.
pub fn region_grow(
    positions: &[Vec3],
    normals: &[NormalEstimate],
    graph: &KnnGraph,
    params: &SegmentationParams,
) -> Result<Vec<PlanarRegion>, SegmentError> {
    params.validate()?;
    let n = positions.len();
    assert_eq!(normals.len(), n);
    let cos_tol = params.normal_angle.cos();

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        normals[a as usize]
            .curvature
            .total_cmp(&normals[b as usize].curvature)
            .then(a.cmp(&b))
    });

    let mut visited = vec![false; n];
    let mut regions = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for &seed in &order {
        if visited[seed as usize] {
            continue;
        }
        let seed_normal = normals[seed as usize].normal;
        visited[seed as usize] = true;
        queue.clear();
        queue.push_back(seed);
        let mut members = vec![seed];
        while let Some(current) = queue.pop_front() {
            for &nb in graph.neighbors_of(current as usize) {
                let j = nb as usize;
                if visited[j] {
                    continue;
                }
                if normals[j].normal.dot(&seed_normal).abs() >= cos_tol {
                    visited[j] = true;
                    members.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        if members.len() < params.min_region_size {
            // too small to be a surface; its points stay consumed
            continue;
        }
        if let Some(region) = finish_region(positions, graph, members) {
            regions.push(region);
        }
    }
    Ok(regions)
}

fn finish_region(positions: &[Vec3], graph: &KnnGraph, members: Vec<u32>) -> Option<PlanarRegion> {
    let pts: Vec<Vec3> = members.iter().map(|&i| positions[i as usize]).collect();
    let n = pts.len() as Real;
    let centroid = pts.iter().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for p in &pts {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let e1 = eig.eigenvectors.column(idx[0]).into_owned();
    let normal = eig.eigenvectors.column(idx[2]).into_owned();
    let e2 = normal.cross(&e1);
    let plane = Plane::from_point_normal(&centroid, normal).ok()?;

    let mut kth: Vec<Real> = members
        .iter()
        .map(|&i| graph.kth_dist[i as usize])
        .collect();
    let mut nearest: Vec<Real> = members
        .iter()
        .map(|&i| graph.nearest_dist[i as usize])
        .collect();
    kth.sort_by(Real::total_cmp);
    nearest.sort_by(Real::total_cmp);
    let s_k = kth[kth.len() / 2];
    let s_ps = nearest[nearest.len() / 2];

    Some(PlanarRegion {
        indices: members,
        plane,
        centroid,
        basis: (e1, e2),
        s_k,
        s_ps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_plane(n: usize, pitch: Real, z: Real) -> Vec<Vec3> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Vec3::new(i as Real * pitch, j as Real * pitch, z));
            }
        }
        pts
    }

    #[test]
    fn plane_normals_point_up() {
        let pts = grid_plane(20, 0.05, 0.0);
        let graph = KnnGraph::build(&pts, 8);
        let normals = estimate_normals(&pts, &graph, &Vec3::new(0.5, 0.5, 5.0)).unwrap();
        for n in &normals {
            assert!(n.normal.z > 0.999, "normal {:?}", n.normal);
            assert!(n.curvature < 1e-9);
        }
    }

    #[test]
    fn sphere_normals_are_radial() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = Vec::new();
        // dense sampling of the unit sphere
        for _ in 0..8000 {
            let z: Real = rng.random_range(-1.0..1.0);
            let a: Real = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            pts.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
        let graph = KnnGraph::build(&pts, 12);
        let normals = estimate_normals(&pts, &graph, &Vec3::zeros()).unwrap();
        let tol = 5f64.to_radians().cos();
        let mut bad = 0;
        for (p, n) in pts.iter().zip(&normals) {
            if n.normal.dot(&p.normalize()).abs() < tol {
                bad += 1;
            }
        }
        assert!(bad < pts.len() / 100, "{bad} normals off by > 5°");
    }

    #[test]
    fn k_larger_than_cloud_errors() {
        let pts = grid_plane(3, 0.1, 0.0);
        let graph = KnnGraph::build(&pts, 8);
        // graph.k = 8 fits, but ask for normals on a 9-point cloud with k=9
        let graph_big = KnnGraph::build(&pts, 9);
        assert!(matches!(
            estimate_normals(&pts, &graph_big, &Vec3::zeros()),
            Err(SegmentError::TooFewPoints { .. })
        ));
        let _ = graph;
    }

    #[test]
    fn single_plane_yields_single_region() {
        let pts = grid_plane(30, 0.04, 0.0);
        let graph = KnnGraph::build(&pts, 12);
        let normals = estimate_normals(&pts, &graph, &Vec3::new(0.0, 0.0, 5.0)).unwrap();
        let params = SegmentationParams {
            k: 12,
            ..Default::default()
        };
        let regions = region_grow(&pts, &normals, &graph, &params).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].indices.len(), pts.len());
        // scales reflect the grid pitch
        assert!((regions[0].s_ps - 0.04).abs() < 1e-9);
        assert!(regions[0].s_k >= 0.04);
    }

    #[test]
    fn perpendicular_half_planes_split_in_two() {
        let pitch = 0.02;
        let mut pts = Vec::new();
        // floor strip y in [0, 1], wall rising from the crease at y = 1
        for i in 0..100 {
            for j in 0..50 {
                pts.push(Vec3::new(i as Real * pitch, j as Real * pitch, 0.0));
            }
        }
        for i in 0..100 {
            for j in 1..50 {
                pts.push(Vec3::new(i as Real * pitch, 1.0, j as Real * pitch));
            }
        }
        let graph = KnnGraph::build(&pts, 12);
        let normals = estimate_normals(&pts, &graph, &Vec3::new(1.0, -2.0, 4.0)).unwrap();
        let params = SegmentationParams {
            k: 12,
            min_region_size: 100,
            ..Default::default()
        };
        let regions = region_grow(&pts, &normals, &graph, &params).unwrap();
        assert_eq!(regions.len(), 2, "got {} regions", regions.len());
        // members respect the admission threshold against their seed normal
        for r in &regions {
            let seed = r.indices[0] as usize;
            for &m in &r.indices {
                let angle = normals[m as usize]
                    .normal
                    .dot(&normals[seed].normal)
                    .abs()
                    .clamp(0.0, 1.0)
                    .acos();
                assert!(angle <= params.normal_angle + 1e-9);
            }
        }
        // boundary members stay near the crease plane on both sides
        for r in &regions {
            let horizontal = r.plane.normal().z.abs() > 0.9;
            for &m in &r.indices {
                let p = pts[m as usize];
                if horizontal {
                    assert!(p.y <= 1.0 + 2.0 * pitch);
                } else {
                    assert!(p.z >= -2.0 * pitch);
                }
            }
        }
    }

    #[test]
    fn tighter_angle_oversegments_noisy_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pts = grid_plane(60, 0.02, 0.0);
        for p in &mut pts {
            p.z += rng.random_range(-0.004..0.004);
        }
        let graph = KnnGraph::build(&pts, 10);
        let normals = estimate_normals(&pts, &graph, &Vec3::new(0.5, 0.5, 4.0)).unwrap();
        let loose = SegmentationParams {
            k: 10,
            min_region_size: 10,
            ..Default::default()
        };
        let tight = SegmentationParams {
            normal_angle: 1.5f64.to_radians(),
            ..loose
        };
        let n_loose = region_grow(&pts, &normals, &graph, &loose).unwrap().len();
        let n_tight = region_grow(&pts, &normals, &graph, &tight).unwrap().len();
        assert!(
            n_tight > n_loose,
            "tight {n_tight} should exceed loose {n_loose}"
        );
    }

    #[test]
    fn truck_faces_dominate_their_regions() {
        use crate::scan::{sample_to_world, Extrinsics, SensorConfig};
        use crate::sim::simulate_scan;
        let truck = crate::site::FenceTruck {
            position: [-4.0, -1.8],
            clutter: vec![],
            cab: None,
            ..crate::site::FenceTruck::new(8.0, 2.4, 1.1)
        };
        let site = crate::site::SiteBuilder {
            trucks: vec![truck],
            ..Default::default()
        };
        let scene = site.build();
        let cfg = SensorConfig {
            beam_resolution: 0.45f64.to_radians(),
            platform_resolution: 0.45f64.to_radians(),
            range_noise_sigma: 0.002,
            ..SensorConfig::default()
        };
        let e = Extrinsics::default();
        let returns = simulate_scan(&scene, &cfg, &e, 77);

        // keep truck points only, tracking the face labels
        let (wfp, area) =
            crate::world::build_world_frame(&site.parking_corners_platform()).unwrap();
        let bounds = crate::world::CropBounds::for_mount_height(site.mount_height);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for r in &returns {
            let p = wfp.apply(&sample_to_world(&r.sample, &e).unwrap());
            if (0.0..=area.x_max).contains(&p.x)
                && (0.0..=area.y_max).contains(&p.y)
                && (bounds.z_min..=bounds.z_max).contains(&p.z)
            {
                pts.push(p);
                labels.push(scene.primitives[r.primitive].label.clone());
            }
        }
        assert!(
            pts.len() > 5000,
            "cropped truck cloud too small: {}",
            pts.len()
        );

        let params = SegmentationParams::default();
        let graph = KnnGraph::build(&pts, params.k);
        let viewpoint = wfp.apply(&Vec3::zeros());
        let normals = estimate_normals(&pts, &graph, &viewpoint).unwrap();
        let regions = region_grow(&pts, &normals, &graph, &params).unwrap();
        assert!(regions.len() >= 4, "got {} regions", regions.len());

        // for each truck face, its dominant region covers >= 90% of its points
        for face in ["truck_floor", "fence_left", "fence_right", "fence_front"] {
            let total = labels.iter().filter(|l| l.as_str() == face).count();
            assert!(total > 200, "{face} barely sampled: {total}");
            let best = regions
                .iter()
                .map(|r| {
                    r.indices
                        .iter()
                        .filter(|&&i| labels[i as usize] == face)
                        .count()
                })
                .max()
                .unwrap();
            let coverage = best as f64 / total as f64;
            assert!(
                coverage >= 0.9,
                "{face}: dominant region covers {coverage:.2}"
            );
        }
    }
}
