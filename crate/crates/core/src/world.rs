//! World-frame establishment from reflective corner boards, and parking-area
//! cropping.
//!
//! Four round high-intensity boards mark the parking rectangle. Each is
//! located by intensity filtering inside an operator-provided seed region
//! followed by a RANSAC plane fit and an in-plane disc-center fit. The four
//! centers define the world frame: origin at the first corner, x along the
//! length side, z the up-oriented board-plane normal, y completing a
//! right-handed frame. Scene clouds are cropped to the parking box in that
//! frame.

use thiserror::Error;

use crate::calib::{fit_plane_lsq, fit_plane_ransac, CalibError};
use crate::cloud::PointCloud;
use crate::geom::{Mat3, Real, RigidTransform, Vec3};

/// Required high-intensity points inside a seed region.
pub const MIN_REFLECTOR_POINTS: usize = 30;
/// Max deviation of the four centers from their common plane.
pub const COPLANARITY_TOL: Real = 0.03;
/// Opposite parking sides must agree within this relative tolerance.
pub const RECTANGULARITY_TOL: Real = 0.02;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("reflector `{name}`: {got} high-intensity points in seed region, need {need}")]
    TooFewReflectorPoints {
        name: String,
        got: usize,
        need: usize,
    },
    #[error("reflector `{name}`: plane fit failed: {source}")]
    ReflectorFit { name: String, source: CalibError },
    #[error("parking corners are not coplanar: max deviation {max_dev:.4} m exceeds {tol} m")]
    NotCoplanar { max_dev: Real, tol: Real },
    #[error("parking corners are not rectangular: {detail}")]
    NotRectangular { detail: String },
    #[error("crop bounds invalid: z_min {z_min} must be below z_max {z_max}")]
    InvalidCropBounds { z_min: Real, z_max: Real },
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}

/// Operator-provided prior for one reflective board.
#[derive(Debug, Clone)]
pub struct ReflectorSpec {
    pub name: String,
    /// axis-aligned seed region in the platform frame
    pub seed_min: Vec3,
    pub seed_max: Vec3,
    pub intensity_threshold: Real,
    pub expected_radius: Real,
}

/// Result of locating one reflector.
#[derive(Debug, Clone)]
pub struct ReflectorFind {
    pub center: Vec3,
    pub estimated_radius: Real,
    pub inlier_count: usize,
    /// set when the estimated radius deviates more than 50% from expectation
    pub radius_warning: bool,
}

/// Locate one reflective board: intensity filter inside the seed region,
/// RANSAC plane fit, then a least-squares disc-center fit in the plane.
pub fn locate_reflector(
    cloud: &PointCloud,
    spec: &ReflectorSpec,
    seed: u64,
) -> Result<ReflectorFind, WorldError> {
    let candidates: Vec<Vec3> = cloud
        .iter()
        .filter(|(p, intensity)| {
            *intensity >= spec.intensity_threshold
                && p.x >= spec.seed_min.x
                && p.x <= spec.seed_max.x
                && p.y >= spec.seed_min.y
                && p.y <= spec.seed_max.y
                && p.z >= spec.seed_min.z
                && p.z <= spec.seed_max.z
        })
        .map(|(p, _)| *p)
        .collect();
    if candidates.len() < MIN_REFLECTOR_POINTS {
        return Err(WorldError::TooFewReflectorPoints {
            name: spec.name.clone(),
            got: candidates.len(),
            need: MIN_REFLECTOR_POINTS,
        });
    }

    let (plane, mask) = fit_plane_ransac(&candidates, 0.008, 200, seed).map_err(|source| {
        WorldError::ReflectorFit {
            name: spec.name.clone(),
            source,
        }
    })?;
    let inliers: Vec<Vec3> = candidates
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(p, _)| plane.project(p))
        .collect();

    // disc center: the scan grid samples an obliquely viewed board with an
    // uneven, geometry-dependent density, which biases a raw centroid.
    // Weight each inlier by the inverse of a kernel density estimate whose
    // bandwidth exceeds the coarsest scan-row gap: the smooth density
    // pattern is flattened without chasing the row-to-row moiré. The radius
    // comes from a circle fit on the convex hull.
    let n = inliers.len() as Real;
    let centroid = inliers.iter().sum::<Vec3>() / n;
    let e1 = (inliers[0] - centroid)
        .cross(plane.normal())
        .cross(plane.normal());
    let e1 = if e1.norm() > 1e-9 {
        e1.normalize()
    } else {
        // centroid coincides with a sample; any in-plane direction works
        plane.normal().cross(&Vec3::x()).normalize()
    };
    let e2 = plane.normal().cross(&e1);
    let uv: Vec<[Real; 2]> = inliers
        .iter()
        .map(|p| {
            let d = p - centroid;
            [d.dot(&e1), d.dot(&e2)]
        })
        .collect();
    let (u_c, v_c) = density_flattened_centroid(&uv);
    let center = centroid + e1 * u_c + e2 * v_c;
    let estimated_radius = match convex_hull(&uv).as_slice() {
        hull if hull.len() >= 5 => match kasa_circle_fit(hull) {
            Some((_, r)) => r,
            None => second_moment_radius(&uv),
        },
        _ => second_moment_radius(&uv),
    };
    let radius_warning =
        (estimated_radius - spec.expected_radius).abs() > 0.5 * spec.expected_radius;

    Ok(ReflectorFind {
        center,
        estimated_radius,
        inlier_count: inliers.len(),
        radius_warning,
    })
}

/// Centroid of a 2-D sample set with the smooth density variation divided
/// out: weights are inverse kernel-density estimates, bandwidth set from the
/// median distance to the 10th neighbor so scan rows blur together.
fn density_flattened_centroid(uv: &[[Real; 2]]) -> (Real, Real) {
    let k = 10.min(uv.len() - 1).max(1);
    let mut spacing: Vec<Real> = uv
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d2: Vec<Real> = uv
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| {
                    let du = p[0] - q[0];
                    let dv = p[1] - q[1];
                    du * du + dv * dv
                })
                .collect();
            d2.sort_by(Real::total_cmp);
            d2[k - 1].sqrt()
        })
        .collect();
    spacing.sort_by(Real::total_cmp);
    let bandwidth = (2.5 * spacing[spacing.len() / 2]).max(1e-4);
    let bw2 = bandwidth * bandwidth;

    let mut u = 0.0;
    let mut v = 0.0;
    let mut total = 0.0;
    for p in uv {
        let mut density = 0.0;
        for q in uv {
            let du = p[0] - q[0];
            let dv = p[1] - q[1];
            let t = (du * du + dv * dv) / bw2;
            if t < 1.0 {
                density += 1.0 - t;
            }
        }
        let w = 1.0 / density.max(1e-9);
        u += w * p[0];
        v += w * p[1];
        total += w;
    }
    (u / total, v / total)
}

/// Radius of a uniformly sampled disc from its second moment.
fn second_moment_radius(uv: &[[Real; 2]]) -> Real {
    let n = uv.len() as Real;
    let mean_r2 = uv.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<Real>() / n;
    (2.0 * mean_r2).sqrt()
}

/// Andrew's monotone chain, returning hull vertices in order.
fn convex_hull(points: &[[Real; 2]]) -> Vec<[Real; 2]> {
    let mut pts: Vec<[Real; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[Real; 2], a: &[Real; 2], b: &[Real; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[Real; 2]> = Vec::with_capacity(pts.len() * 2);
    for p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Algebraic least-squares circle fit: center and radius.
fn kasa_circle_fit(points: &[[Real; 2]]) -> Option<([Real; 2], Real)> {
    let n = points.len() as Real;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sxz, mut syz, mut sz) = (0.0, 0.0, 0.0);
    for p in points {
        let z = p[0] * p[0] + p[1] * p[1];
        sx += p[0];
        sy += p[1];
        sxx += p[0] * p[0];
        syy += p[1] * p[1];
        sxy += p[0] * p[1];
        sxz += p[0] * z;
        syz += p[1] * z;
        sz += z;
    }
    let a = nalgebra::Matrix3::new(sxx, sxy, sx, sxy, syy, sy, sx, sy, n);
    let b = nalgebra::Vector3::new(sxz, syz, sz);
    let sol = a.lu().solve(&b)?;
    let cx = sol[0] / 2.0;
    let cy = sol[1] / 2.0;
    let r2 = sol[2] + cx * cx + cy * cy;
    if !(r2.is_finite() && r2 > 0.0) {
        return None;
    }
    Some(([cx, cy], r2.sqrt()))
}

/// Validated parking rectangle in the platform frame.
#[derive(Debug, Clone)]
pub struct ParkingArea {
    /// corner order: origin, along length, diagonal, along width
    pub corners: [Vec3; 4],
    pub x_max: Real,
    pub y_max: Real,
}

/// Height window of the detection volume in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropBounds {
    pub z_min: Real,
    pub z_max: Real,
}

impl CropBounds {
    pub fn new(z_min: Real, z_max: Real) -> Result<Self, WorldError> {
        if z_min >= z_max {
            return Err(WorldError::InvalidCropBounds { z_min, z_max });
        }
        Ok(Self { z_min, z_max })
    }

    /// 30 cm above the ground up to 30 cm below the sensor.
    pub fn for_mount_height(mount_height: Real) -> Self {
        Self {
            z_min: 0.30,
            z_max: mount_height - 0.30,
        }
    }
}

/// Build the world frame from the four corner centers (platform frame).
///
/// Returns the platform-to-world transform together with the validated area.
/// The corner labels must form a cycle around the rectangle; if the cycle
/// winds the wrong way for a right-handed frame with z up, the length and
/// width corners are swapped rather than rejected.
pub fn build_world_frame(corners: &[Vec3; 4]) -> Result<(RigidTransform, ParkingArea), WorldError> {
    // coplanarity
    let plane = fit_plane_lsq(corners.as_ref()).ok_or(WorldError::NotRectangular {
        detail: "corners are collinear".into(),
    })?;
    let max_dev = corners
        .iter()
        .map(|c| plane.distance(c))
        .fold(0.0, Real::max);
    if max_dev > COPLANARITY_TOL {
        return Err(WorldError::NotCoplanar {
            max_dev,
            tol: COPLANARITY_TOL,
        });
    }

    // opposite sides within tolerance
    let side = |a: usize, b: usize| (corners[b] - corners[a]).norm();
    let (l1, l2) = (side(0, 1), side(3, 2));
    let (w1, w2) = (side(0, 3), side(1, 2));
    let rel = |a: Real, b: Real| (a - b).abs() / a.max(b);
    if rel(l1, l2) > RECTANGULARITY_TOL || rel(w1, w2) > RECTANGULARITY_TOL {
        return Err(WorldError::NotRectangular {
            detail: format!(
                "opposite sides differ: lengths {l1:.3}/{l2:.3} m, widths {w1:.3}/{w2:.3} m \
                 (tolerance {RECTANGULARITY_TOL})"
            ),
        });
    }

    let mut ordered = *corners;
    // z up: oriented toward the sensor side (platform origin)
    let mut z_axis = *plane.normal();
    if z_axis.dot(&ordered[0]) > 0.0 {
        z_axis = -z_axis;
    }
    let mut x_axis = (ordered[1] - ordered[0]).normalize();
    let mut y_axis = z_axis.cross(&x_axis);
    if y_axis.dot(&(ordered[3] - ordered[0])) < 0.0 {
        // wrong winding: swap the length and width corners
        ordered.swap(1, 3);
        x_axis = (ordered[1] - ordered[0]).normalize();
    }
    // orthogonalize: x exactly in the plane, y completing the triad
    x_axis = (x_axis - z_axis * x_axis.dot(&z_axis)).normalize();
    y_axis = z_axis.cross(&x_axis);

    let rotation = Mat3::from_columns(&[x_axis, y_axis, z_axis]);
    let world_from_platform = RigidTransform::new(rotation, ordered[0])?.inverse();
    let area = ParkingArea {
        corners: ordered,
        x_max: (ordered[1] - ordered[0]).norm(),
        y_max: (ordered[3] - ordered[0]).norm(),
    };
    Ok((world_from_platform, area))
}

/// Crop a platform-frame cloud to the parking box; output is in the world
/// frame. Exactly the points satisfying the box predicate survive.
pub fn crop_to_parking(
    cloud: &PointCloud,
    world_from_platform: &RigidTransform,
    area: &ParkingArea,
    bounds: &CropBounds,
) -> PointCloud {
    let mut out = PointCloud::new();
    for (p, intensity) in cloud.iter() {
        let a = world_from_platform.apply(p);
        if a.x >= 0.0
            && a.x <= area.x_max
            && a.y >= 0.0
            && a.y <= area.y_max
            && a.z >= bounds.z_min
            && a.z <= bounds.z_max
        {
            out.push(a, intensity);
        }
    }
    out
}
