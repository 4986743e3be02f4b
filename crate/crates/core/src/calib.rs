//! Extrinsic calibration of the 2-D scanner against the rotating platform
//! from segmented planar-target scans.
//!
//! Each planar target, scanned across several platform angles, yields scan
//! lines whose directions must be perpendicular to the target normal, and
//! points that must be coplanar. Two cost functions follow:
//!
//! - rotational: residual per scan line, `n̂ᵀ·(Q(φ)·R_w·û)` where `û` is the
//!   line direction fitted in the scanner frame;
//! - translational: residual per point, `n̂ᵀ·p̂ − μ` with `μ` the per-target
//!   mean projection, which profiles the unknown plane offset out.
//!
//! Both are minimized by Levenberg–Marquardt, rotation first, then
//! translation with the rotation held fixed. The rotation and translation
//! components along the platform axis (pitch, t_y) are unobservable under
//! single-axis rotation and stay pinned at their initial values.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{platform_rotation, rot_x, rot_y, rot_z, EulerAngles, Mat3, Plane, Real, Vec3};
use crate::scan::{polar_to_lidar_point, Extrinsics, ScanSample};
use crate::sim::ScanReturn;

/// Minimum samples for a usable plane dataset.
pub const MIN_PLANE_SAMPLES: usize = 20;
/// Minimum plane datasets for a well-posed calibration.
pub const MIN_PLANE_DATASETS: usize = 6;
/// LM termination: step norm below this counts as converged.
pub const LM_STEP_TOL: Real = 1e-10;
/// LM iteration cap per stage.
pub const LM_MAX_ITERS: usize = 200;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("plane dataset `{id}` has {got} samples, need at least {need}")]
    TooFewSamples { id: String, got: usize, need: usize },
    #[error("plane dataset `{id}` spans a single platform angle and constrains no rotation")]
    SingleSweepAngle { id: String },
    #[error("{got} plane datasets provided, calibration needs at least {need}")]
    InsufficientPlanes { got: usize, need: usize },
    #[error("degenerate calibration geometry: {detail}")]
    DegenerateGeometry { detail: String },
    #[error("plane fit needs at least 3 points, got {got}")]
    TooFewPoints { got: usize },
    #[error("all candidate points are collinear; no plane is defined")]
    CollinearPoints,
    #[error("solver failed to converge (final residual norm {residual:.3e})")]
    NonConvergence { residual: Real },
    #[error(transparent)]
    Scan(#[from] crate::scan::ScanError),
}

/// Raw samples belonging to one physical planar target.
#[derive(Debug, Clone)]
pub struct PlaneDataset {
    pub id: String,
    pub samples: Vec<ScanSample>,
}

impl PlaneDataset {
    pub fn new(id: impl Into<String>, samples: Vec<ScanSample>) -> Result<Self, CalibError> {
        let id = id.into();
        if samples.len() < MIN_PLANE_SAMPLES {
            return Err(CalibError::TooFewSamples {
                id,
                got: samples.len(),
                need: MIN_PLANE_SAMPLES,
            });
        }
        let first = samples[0].platform;
        if samples.iter().all(|s| (s.platform - first).abs() < 1e-12) {
            return Err(CalibError::SingleSweepAngle { id });
        }
        Ok(Self { id, samples })
    }

    /// Group simulated returns by hit primitive into per-plane datasets,
    /// skipping primitives too grazed or occluded to contribute scan lines
    /// (fewer than two platform rows with three or more samples).
    pub fn group_returns(returns: &[ScanReturn]) -> Vec<PlaneDataset> {
        use std::collections::BTreeMap;
        let mut by_prim: BTreeMap<usize, Vec<ScanSample>> = BTreeMap::new();
        for r in returns {
            by_prim.entry(r.primitive).or_default().push(r.sample);
        }
        by_prim
            .into_iter()
            .filter(|(_, samples)| {
                let mut per_phi: BTreeMap<i64, usize> = BTreeMap::new();
                for s in samples {
                    *per_phi
                        .entry((s.platform * 1e9).round() as i64)
                        .or_default() += 1;
                }
                per_phi.values().filter(|&&c| c >= 3).count() >= 2
            })
            .filter_map(|(prim, samples)| PlaneDataset::new(format!("plane_{prim}"), samples).ok())
            .collect()
    }
}

/// One scan line of a target: platform angle and the fitted in-plane
/// direction of the sample points in the scanner frame (unit, z = 0).
#[derive(Debug, Clone, Copy)]
struct ScanLine {
    phi: Real,
    dir: Vec3,
}

/// Dataset preprocessed for optimization.
#[derive(Debug, Clone)]
pub struct PreparedPlane {
    pub id: String,
    lines: Vec<ScanLine>,
    /// scanner-frame points with their platform angles
    points: Vec<(Vec3, Real)>,
    /// current normal estimate in the platform frame
    pub normal: Vec3,
}

impl PreparedPlane {
    fn prepare(dataset: &PlaneDataset) -> Result<Self, CalibError> {
        // group samples by platform angle; rounding guards text round-trips
        use std::collections::BTreeMap;
        let mut groups: BTreeMap<i64, Vec<Vec3>> = BTreeMap::new();
        let mut points = Vec::with_capacity(dataset.samples.len());
        for s in &dataset.samples {
            let q = polar_to_lidar_point(s.range, s.azimuth)?;
            points.push((q, s.platform));
            let key = (s.platform * 1e9).round() as i64;
            groups.entry(key).or_default().push(q);
        }
        let mut lines = Vec::new();
        for (key, pts) in &groups {
            if pts.len() < 3 {
                continue;
            }
            if let Some(dir) = fit_line_direction_2d(pts) {
                lines.push(ScanLine {
                    phi: *key as Real / 1e9,
                    dir,
                });
            }
        }
        if lines.len() < 2 {
            return Err(CalibError::SingleSweepAngle {
                id: dataset.id.clone(),
            });
        }
        Ok(Self {
            id: dataset.id.clone(),
            lines,
            points,
            normal: Vec3::z(),
        })
    }

    /// Target normal implied by an extrinsics estimate: total-least-squares
    /// plane normal of the reconstructed points. Anchoring the normal to the
    /// point geometry (not just the line directions) keeps the rotational
    /// cost from collapsing into the spurious solutions where every line
    /// direction maps onto the platform axis.
    fn normal_for(&self, rw: &Mat3, t: &Vec3) -> Vec3 {
        let reconstructed: Vec<Vec3> = self
            .points
            .iter()
            .map(|(q, phi)| platform_rotation(*phi) * (rw * q + t))
            .collect();
        let n = fit_plane_lsq(&reconstructed)
            .map(|p| *p.normal())
            .unwrap_or_else(Vec3::z);
        // deterministic sign
        if n.z < 0.0 || (n.z == 0.0 && n.x < 0.0) {
            -n
        } else {
            n
        }
    }

    fn refit_normal(&mut self, rw: &Mat3, t: &Vec3) {
        self.normal = self.normal_for(rw, t);
    }
}

/// Total-least-squares direction of 2-D points in the scan plane.
fn fit_line_direction_2d(pts: &[Vec3]) -> Option<Vec3> {
    let n = pts.len() as Real;
    let mean = pts
        .iter()
        .fold(Vector2::zeros(), |acc, p| acc + Vector2::new(p.x, p.y))
        / n;
    let mut cov = Matrix2::zeros();
    for p in pts {
        let d = Vector2::new(p.x, p.y) - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let big = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        0
    } else {
        1
    };
    // degenerate spread: points nearly coincident
    if eig.eigenvalues[big] < 1e-12 {
        return None;
    }
    let v = eig.eigenvectors.column(big);
    let dir = Vec3::new(v[0], v[1], 0.0).normalize();
    // deterministic sign
    Some(if dir.x < 0.0 || (dir.x == 0.0 && dir.y < 0.0) {
        -dir
    } else {
        dir
    })
}

fn d_rot_x(a: Real) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn d_rot_z(a: Real) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

fn rot_residuals_with(
    w: &EulerAngles,
    planes: &[PreparedPlane],
    normals: &[Vec3],
) -> DVector<Real> {
    let rw = crate::geom::euler_to_rotation(*w);
    let mut out = Vec::new();
    for (p, n) in planes.iter().zip(normals) {
        for line in &p.lines {
            let d = platform_rotation(line.phi) * (rw * line.dir);
            out.push(n.dot(&d));
        }
    }
    DVector::from_vec(out)
}

fn rot_jacobian_with(w: &EulerAngles, planes: &[PreparedPlane], normals: &[Vec3]) -> DMatrix<Real> {
    let d_roll = rot_z(w.yaw) * rot_y(w.pitch) * d_rot_x(w.roll);
    let d_yaw = d_rot_z(w.yaw) * rot_y(w.pitch) * rot_x(w.roll);
    let m: usize = planes.iter().map(|p| p.lines.len()).sum();
    let mut jac = DMatrix::zeros(m, 2);
    let mut row = 0;
    for (p, n) in planes.iter().zip(normals) {
        for line in &p.lines {
            let q = platform_rotation(line.phi);
            jac[(row, 0)] = n.dot(&(q * (d_roll * line.dir)));
            jac[(row, 1)] = n.dot(&(q * (d_yaw * line.dir)));
            row += 1;
        }
    }
    jac
}

/// Rotational cost: one residual per scan line, `n̂ᵀ·(Q(φ)·R_w·û)`.
/// Zero for every line exactly when the rotated directions lie in their
/// target planes. Uses each dataset's currently fitted normal.
pub fn rotational_residuals(w: &EulerAngles, planes: &[PreparedPlane]) -> DVector<Real> {
    let normals: Vec<Vec3> = planes.iter().map(|p| p.normal).collect();
    rot_residuals_with(w, planes, &normals)
}

/// Analytic Jacobian of [`rotational_residuals`] with respect to `(roll, yaw)`.
pub fn rotational_jacobian(w: &EulerAngles, planes: &[PreparedPlane]) -> DMatrix<Real> {
    let normals: Vec<Vec3> = planes.iter().map(|p| p.normal).collect();
    rot_jacobian_with(w, planes, &normals)
}

/// Translational cost: one residual per point, `n̂ᵀ·p̂ − μ` with `μ` the mean
/// projection of the point's dataset. Sums to zero per dataset by
/// construction; zero everywhere exactly when each dataset is coplanar.
pub fn translational_residuals(
    t: &Vec3,
    planes: &[PreparedPlane],
    w_fixed: &EulerAngles,
) -> DVector<Real> {
    let rw = crate::geom::euler_to_rotation(*w_fixed);
    let mut out = Vec::new();
    for p in planes {
        let projections: Vec<Real> = p
            .points
            .iter()
            .map(|(q, phi)| {
                let world = platform_rotation(*phi) * (rw * q + t);
                p.normal.dot(&world)
            })
            .collect();
        let mu = projections.iter().sum::<Real>() / projections.len() as Real;
        out.extend(projections.into_iter().map(|v| v - mu));
    }
    DVector::from_vec(out)
}

/// Analytic Jacobian of [`translational_residuals`] with respect to
/// `(t_x, t_z)`; constant in `t`.
pub fn translational_jacobian(planes: &[PreparedPlane]) -> DMatrix<Real> {
    let m: usize = planes.iter().map(|p| p.points.len()).sum();
    let mut jac = DMatrix::zeros(m, 2);
    let mut row = 0;
    for p in planes {
        let rows: Vec<(Real, Real)> = p
            .points
            .iter()
            .map(|(_, phi)| {
                let q = platform_rotation(*phi);
                let nq = q.transpose() * p.normal;
                (nq.x, nq.z)
            })
            .collect();
        let n = rows.len() as Real;
        let mean_x = rows.iter().map(|r| r.0).sum::<Real>() / n;
        let mean_z = rows.iter().map(|r| r.1).sum::<Real>() / n;
        for (jx, jz) in rows {
            jac[(row, 0)] = jx - mean_x;
            jac[(row, 1)] = jz - mean_z;
            row += 1;
        }
    }
    jac
}

struct LmOutcome {
    x: [Real; 2],
    iterations: usize,
    converged: bool,
    residual_norm: Real,
    jtj: Matrix2<Real>,
    residual_count: usize,
}

/// Damped Gauss-Newton over two parameters: λ starts at 1e-3, ×10 on a
/// rejected step, ÷10 on an accepted one.
fn lm_minimize_2(
    mut eval: impl FnMut(&[Real; 2]) -> (DVector<Real>, DMatrix<Real>),
    x0: [Real; 2],
    max_iters: usize,
) -> LmOutcome {
    let mut x = x0;
    let mut lambda = 1e-3;
    let (mut r, mut jac) = eval(&x);
    let mut cost = r.norm_squared();
    let mut iterations = 0;
    let mut converged = false;
    let mut jtj_last = Matrix2::zeros();

    while iterations < max_iters {
        iterations += 1;
        let jtj = Matrix2::new(
            jac.column(0).dot(&jac.column(0)),
            jac.column(0).dot(&jac.column(1)),
            jac.column(1).dot(&jac.column(0)),
            jac.column(1).dot(&jac.column(1)),
        );
        jtj_last = jtj;
        let jtr = Vector2::new(jac.column(0).dot(&r), jac.column(1).dot(&r));
        let damped = jtj + Matrix2::identity() * lambda;
        let Some(step) = damped.try_inverse().map(|inv| inv * (-jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let candidate = [x[0] + step.x, x[1] + step.y];
        let (r_new, jac_new) = eval(&candidate);
        let new_cost = r_new.norm_squared();
        if new_cost <= cost {
            x = candidate;
            r = r_new;
            jac = jac_new;
            cost = new_cost;
            lambda = (lambda / 10.0).max(1e-12);
            if step.norm() < LM_STEP_TOL {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // no direction improves; accept the current point
                converged = true;
                break;
            }
        }
    }
    LmOutcome {
        x,
        iterations,
        converged,
        residual_norm: cost.sqrt(),
        jtj: jtj_last,
        residual_count: r.len(),
    }
}

/// Per-parameter report of the two-stage solve.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub extrinsics: Extrinsics,
    pub std_errors: StdErrors,
    pub rot_residual_norm: Real,
    pub trans_residual_norm: Real,
    pub rot_iterations: usize,
    pub trans_iterations: usize,
    /// parameters held at their initial values (unobservable under
    /// single-axis rotation)
    pub pinned_parameters: Vec<String>,
}

/// Standard errors of the free parameters: roll, yaw in radians; t_x, t_z in
/// meters.
#[derive(Debug, Clone, Copy, Default)]
pub struct StdErrors {
    pub roll: Real,
    pub yaw: Real,
    pub t_x: Real,
    pub t_z: Real,
}

fn std_errors_from(outcome: &LmOutcome) -> (Real, Real) {
    let dof = outcome.residual_count.saturating_sub(2).max(1) as Real;
    let sigma2 = outcome.residual_norm.powi(2) / dof;
    match outcome.jtj.try_inverse() {
        Some(inv) => ((sigma2 * inv[(0, 0)]).sqrt(), (sigma2 * inv[(1, 1)]).sqrt()),
        None => (Real::NAN, Real::NAN),
    }
}

fn check_conditioning(jac: &DMatrix<Real>, names: [&str; 2]) -> Result<(), CalibError> {
    let jtj = Matrix2::new(
        jac.column(0).dot(&jac.column(0)),
        jac.column(0).dot(&jac.column(1)),
        jac.column(1).dot(&jac.column(0)),
        jac.column(1).dot(&jac.column(1)),
    );
    let eig = SymmetricEigen::new(jtj);
    let max_e = eig.eigenvalues.max();
    let min_e = eig.eigenvalues.min();
    if max_e <= 0.0 || min_e / max_e < 1e-12 {
        // the eigenvector of the vanishing eigenvalue names the flat direction
        let idx = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
            0
        } else {
            1
        };
        let v = eig.eigenvectors.column(idx);
        let dominant = if v[0].abs() >= v[1].abs() { 0 } else { 1 };
        return Err(CalibError::DegenerateGeometry {
            detail: format!(
                "cost is flat along `{}` (JᵀJ eigenvalue ratio {:.3e}); \
                 add targets with more varied normals",
                names[dominant],
                if max_e > 0.0 { min_e / max_e } else { 0.0 }
            ),
        });
    }
    Ok(())
}

/// Two-stage extrinsic calibration. Pitch and t_y stay at `init`.
pub fn calibrate(
    datasets: &[PlaneDataset],
    init: &Extrinsics,
) -> Result<CalibrationResult, CalibError> {
    if datasets.len() < MIN_PLANE_DATASETS {
        return Err(CalibError::InsufficientPlanes {
            got: datasets.len(),
            need: MIN_PLANE_DATASETS,
        });
    }
    let mut planes: Vec<PreparedPlane> = datasets
        .iter()
        .map(PreparedPlane::prepare)
        .collect::<Result<_, _>>()?;

    // initial normals from the initial extrinsics guess
    let rw0 = init.rotation_matrix();
    for p in &mut planes {
        p.refit_normal(&rw0, &init.translation);
    }
    if planes.iter().all(|p| p.normal.y.abs() > 0.95) {
        return Err(CalibError::DegenerateGeometry {
            detail: "every target normal is aligned with the platform axis; \
                     roll and yaw are unobservable"
                .into(),
        });
    }
    check_conditioning(
        &rotational_jacobian(&init.rotation, &planes),
        ["roll", "yaw"],
    )?;
    check_conditioning(&translational_jacobian(&planes), ["t_x", "t_z"])?;

    // The target normals couple the two stages: they are fit from the
    // reconstructed points, which depend on the extrinsics being estimated.
    // Alternate normal refits with the rotation and translation solves until
    // the estimate stops moving; each solve holds the normals fixed.
    let pitch = init.rotation.pitch;
    let ty = init.translation.y;
    let mut w = init.rotation;
    let mut t = init.translation;
    let mut rot_iterations = 0;
    let mut trans_iterations = 0;
    let mut rot_outcome: Option<LmOutcome> = None;
    let mut trans_outcome: Option<LmOutcome> = None;
    for _round in 0..12 {
        let planes_ref = &planes;
        let rot = lm_minimize_2(
            |x| {
                let cand = EulerAngles::new(x[0], pitch, x[1]);
                (
                    rotational_residuals(&cand, planes_ref),
                    rotational_jacobian(&cand, planes_ref),
                )
            },
            [w.roll, w.yaw],
            LM_MAX_ITERS,
        );
        rot_iterations += rot.iterations;
        let w_new = EulerAngles::new(rot.x[0], pitch, rot.x[1]);

        let w_fixed = w_new;
        let trans = lm_minimize_2(
            |x| {
                let cand = Vec3::new(x[0], ty, x[1]);
                (
                    translational_residuals(&cand, planes_ref, &w_fixed),
                    translational_jacobian(planes_ref),
                )
            },
            [t.x, t.z],
            LM_MAX_ITERS,
        );
        trans_iterations += trans.iterations;
        let t_new = Vec3::new(trans.x[0], ty, trans.x[1]);

        let moved = (w_new.roll - w.roll).abs() + (w_new.yaw - w.yaw).abs() + (t_new - t).norm();
        w = w_new;
        t = t_new;
        rot_outcome = Some(rot);
        trans_outcome = Some(trans);
        let rw = crate::geom::euler_to_rotation(w);
        for p in &mut planes {
            p.refit_normal(&rw, &t);
        }
        if moved < 1e-12 {
            break;
        }
    }
    let mut rot_outcome = rot_outcome.expect("at least one round runs");
    let mut trans_outcome = trans_outcome.expect("at least one round runs");
    rot_outcome.iterations = rot_iterations;
    trans_outcome.iterations = trans_iterations;
    if !rot_outcome.converged {
        return Err(CalibError::NonConvergence {
            residual: rot_outcome.residual_norm,
        });
    }
    if !trans_outcome.converged {
        return Err(CalibError::NonConvergence {
            residual: trans_outcome.residual_norm,
        });
    }

    let (se_roll, se_yaw) = std_errors_from(&rot_outcome);
    let (se_tx, se_tz) = std_errors_from(&trans_outcome);
    Ok(CalibrationResult {
        extrinsics: Extrinsics::new(w, Vec3::new(trans_outcome.x[0], ty, trans_outcome.x[1])),
        std_errors: StdErrors {
            roll: se_roll,
            yaw: se_yaw,
            t_x: se_tx,
            t_z: se_tz,
        },
        rot_residual_norm: rot_outcome.residual_norm,
        trans_residual_norm: trans_outcome.residual_norm,
        rot_iterations,
        trans_iterations: trans_outcome.iterations,
        pinned_parameters: vec!["pitch".into(), "t_y".into()],
    })
}

/// Prepared view of datasets for direct cost evaluation (gradient checks,
/// diagnostics). Normals are fitted from points reconstructed with the
/// supplied extrinsics.
pub fn prepare_planes(
    datasets: &[PlaneDataset],
    extrinsics: &Extrinsics,
) -> Result<Vec<PreparedPlane>, CalibError> {
    let rw = extrinsics.rotation_matrix();
    datasets
        .iter()
        .map(|d| {
            PreparedPlane::prepare(d).map(|mut p| {
                p.refit_normal(&rw, &extrinsics.translation);
                p
            })
        })
        .collect()
}

/// RANSAC plane fit: maximize inliers within `dist_tol`, then refit by total
/// least squares on the consensus set. Returns the plane and the inlier mask
/// against the refit plane.
pub fn fit_plane_ransac(
    points: &[Vec3],
    dist_tol: Real,
    iters: usize,
    seed: u64,
) -> Result<(Plane, Vec<bool>), CalibError> {
    if points.len() < 3 {
        return Err(CalibError::TooFewPoints { got: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Plane)> = None;
    for _ in 0..iters {
        let i = rng.random_range(0..points.len());
        let j = rng.random_range(0..points.len());
        let k = rng.random_range(0..points.len());
        if i == j || j == k || i == k {
            continue;
        }
        let n = (points[j] - points[i]).cross(&(points[k] - points[i]));
        if n.norm() < 1e-12 {
            continue;
        }
        let Ok(plane) = Plane::from_point_normal(&points[i], n) else {
            continue;
        };
        let inliers = points
            .iter()
            .filter(|p| plane.distance(p) <= dist_tol)
            .count();
        if best.as_ref().map_or(true, |(c, _)| inliers > *c) {
            best = Some((inliers, plane));
        }
    }
    let Some((_, coarse)) = best else {
        return Err(CalibError::CollinearPoints);
    };

    // refit on the consensus set
    let members: Vec<Vec3> = points
        .iter()
        .filter(|p| coarse.distance(p) <= dist_tol)
        .copied()
        .collect();
    let refined = fit_plane_lsq(&members).unwrap_or(coarse);
    let mask: Vec<bool> = points
        .iter()
        .map(|p| refined.distance(p) <= dist_tol)
        .collect();
    Ok((refined, mask))
}

/// Total-least-squares plane through a point set (centroid + smallest
/// principal direction). `None` when the set is degenerate.
pub fn fit_plane_lsq(points: &[Vec3]) -> Option<Plane> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as Real;
    let centroid = points.iter().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut min_i = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[min_i] {
            min_i = i;
        }
    }
    // collinear sets have two vanishing eigenvalues
    let mut sorted = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    sorted.sort_by(Real::total_cmp);
    if sorted[1] < 1e-12 * sorted[2].max(1e-30) {
        return None;
    }
    let normal = eig.eigenvectors.column(min_i).into_owned();
    Plane::from_point_normal(&centroid, normal).ok()
}

/// Randomly posed calibration boards around the sensor, in the platform
/// frame: 1.6–3.2 m out, normals facing the sensor with strong orientation
/// diversity (tilt is what makes roll observable from scan-line directions),
/// placed away from both the blind cone and the degenerate axis-aligned pose.
pub fn calibration_boards<R: Rng>(n: usize, rng: &mut R) -> Vec<crate::scene::ScenePrimitive> {
    use crate::scene::{PrimitiveShape, ScenePrimitive};
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // alternate the two visible, non-degenerate azimuth bands
        let azimuth = if i % 2 == 0 {
            rng.random_range(-72f64.to_radians()..-10f64.to_radians())
        } else {
            rng.random_range(-170f64.to_radians()..-108f64.to_radians())
        };
        let dist = rng.random_range(1.6..3.2);
        // every third board lies nearly flat below the sensor: its scan
        // chords run along the platform axis, the direction that pins roll
        let (height, normal) = if i % 3 == 0 {
            let h = rng.random_range(-2.6..-1.8);
            let lean = rng.random_range(0.15..0.35);
            (
                h,
                Vec3::new(-lean * azimuth.cos(), -lean * azimuth.sin(), 1.0).normalize(),
            )
        } else {
            let h = rng.random_range(-1.6..0.7);
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            let tilt = side * rng.random_range(0.4..0.9);
            (
                h,
                Vec3::new(-azimuth.cos(), -azimuth.sin(), tilt).normalize(),
            )
        };
        let center = Vec3::new(dist * azimuth.cos(), dist * azimuth.sin(), height);
        let u = Vec3::z().cross(&normal).normalize();
        let v = normal.cross(&u);
        out.push(ScenePrimitive {
            label: format!("board_{i}"),
            shape: PrimitiveShape::Rect {
                center,
                u,
                v,
                half_u: 0.6,
                half_v: 0.45,
            },
            intensity: 0.6,
        });
    }
    out
}
