//! Geometric value types and exact transform algebra.
//!
//! Everything downstream (scan reconstruction, calibration, world-frame
//! cropping, contour reasoning) is built on these types. Angles are radians
//! internally; degrees appear only at I/O boundaries.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Scalar type used throughout the library.
pub type Real = f64;
/// 3-D vector / point, meters (unitless when used as a direction).
pub type Vec3 = Vector3<Real>;
/// 3×3 real matrix.
pub type Mat3 = Matrix3<Real>;

/// Absolute tolerance for orthonormality checks (per Gram-matrix entry).
pub const ORTHONORMAL_TOL: Real = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("rotation matrix is not orthonormal with det +1 (max Gram deviation {deviation:.3e})")]
    NonOrthonormalRotation { deviation: Real },
    #[error("degenerate line segment: endpoints coincide")]
    DegenerateSegment,
    #[error("plane normal has zero length")]
    ZeroNormal,
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
}

/// Intrinsic rotation angles, radians. Applied as `Rz(yaw)·Ry(pitch)·Rx(roll)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: Real,
    pub pitch: Real,
    pub yaw: Real,
}

impl EulerAngles {
    pub fn new(roll: Real, pitch: Real, yaw: Real) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn from_degrees(roll: Real, pitch: Real, yaw: Real) -> Self {
        Self {
            roll: roll.to_radians(),
            pitch: pitch.to_radians(),
            yaw: yaw.to_radians(),
        }
    }

    pub fn to_rotation(self) -> Mat3 {
        euler_to_rotation(self)
    }
}

/// Rotation about x by `a`.
pub fn rot_x(a: Real) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation about y by `a`.
pub fn rot_y(a: Real) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Rotation about z by `a`.
pub fn rot_z(a: Real) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Composite rotation `Rz(yaw)·Ry(pitch)·Rx(roll)`.
pub fn euler_to_rotation(w: EulerAngles) -> Mat3 {
    rot_z(w.yaw) * rot_y(w.pitch) * rot_x(w.roll)
}

/// Rotation of the scan plane by the platform encoder angle: a y-axis rotation.
pub fn platform_rotation(phi: Real) -> Mat3 {
    rot_y(phi)
}

fn gram_deviation(r: &Mat3) -> Real {
    let gram = r.transpose() * r;
    let mut dev: Real = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev
}

/// Rigid transform `p ↦ R·p + t`. The rotation is validated orthonormal with
/// determinant +1 at construction; composition and inversion stay closed
/// under that invariant to machine precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Mat3,
    translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeomError> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeomError::NonFinite {
                context: "rigid transform",
            });
        }
        let deviation = gram_deviation(&rotation);
        if deviation > ORTHONORMAL_TOL || rotation.determinant() < 0.0 {
            return Err(GeomError::NonOrthonormalRotation { deviation });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: t,
        }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Rotate a direction (no translation).
    pub fn apply_direction(&self, d: &Vec3) -> Vec3 {
        self.rotation * d
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Row-major 4×4 homogeneous matrix, for serialization.
    pub fn to_matrix4_rows(&self) -> [[Real; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_matrix4_rows(rows: &[[Real; 4]; 4]) -> Result<Self, GeomError> {
        let rotation = Mat3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        );
        let translation = Vec3::new(rows[0][3], rows[1][3], rows[2][3]);
        Self::new(rotation, translation)
    }
}

/// Plane in Hesse normal form: `n·p = offset`, with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vec3,
    offset: Real,
}

impl Plane {
    pub fn new(normal: Vec3, offset: Real) -> Result<Self, GeomError> {
        let len = normal.norm();
        if !len.is_finite() || len < 1e-12 {
            return Err(GeomError::ZeroNormal);
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub fn from_point_normal(point: &Vec3, normal: Vec3) -> Result<Self, GeomError> {
        let len = normal.norm();
        if !len.is_finite() || len < 1e-12 {
            return Err(GeomError::ZeroNormal);
        }
        let n = normal / len;
        Ok(Self {
            normal: n,
            offset: n.dot(point),
        })
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn offset(&self) -> Real {
        self.offset
    }

    pub fn signed_distance(&self, p: &Vec3) -> Real {
        self.normal.dot(p) - self.offset
    }

    pub fn distance(&self, p: &Vec3) -> Real {
        self.signed_distance(p).abs()
    }

    /// Orthogonal projection of `p` onto the plane.
    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * self.signed_distance(p)
    }

    /// Flip the normal (and offset) so the plane is unchanged as a point set.
    pub fn flipped(&self) -> Self {
        Self {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}

/// Line segment between two distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment3D {
    pub start: Vec3,
    pub end: Vec3,
}

impl LineSegment3D {
    pub fn new(start: Vec3, end: Vec3) -> Result<Self, GeomError> {
        if (end - start).norm() <= 0.0 {
            return Err(GeomError::DegenerateSegment);
        }
        Ok(Self { start, end })
    }

    pub fn length(&self) -> Real {
        (self.end - self.start).norm()
    }

    pub fn direction(&self) -> Vec3 {
        (self.end - self.start).normalize()
    }

    pub fn midpoint(&self) -> Vec3 {
        (self.start + self.end) * 0.5
    }

    /// Endpoint order normalized lexicographically, for deterministic
    /// processing of detector output.
    pub fn canonical(&self) -> Self {
        let a = [self.start.x, self.start.y, self.start.z];
        let b = [self.end.x, self.end.y, self.end.z];
        if a <= b {
            *self
        } else {
            Self {
                start: self.end,
                end: self.start,
            }
        }
    }

    /// Minimum distance from `p` to the segment (not the infinite line).
    pub fn distance_to_point(&self, p: &Vec3) -> Real {
        let d = self.end - self.start;
        let t = ((p - self.start).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        (p - (self.start + d * t)).norm()
    }
}

/// Minimum distance between two segments, evaluated on the segments
/// themselves (closest points clamped inside both).
pub fn segment_distance(a: &LineSegment3D, b: &LineSegment3D) -> Real {
    let d1 = a.end - a.start;
    let d2 = b.end - b.start;
    let r = a.start - b.start;
    let a11 = d1.norm_squared();
    let a22 = d2.norm_squared();
    let a12 = d1.dot(&d2);
    let b1 = d1.dot(&r);
    let b2 = d2.dot(&r);
    let det = a11 * a22 - a12 * a12;

    let mut s = if det > 1e-14 * a11 * a22 {
        ((a12 * b2 - a22 * b1) / det).clamp(0.0, 1.0)
    } else {
        // near-parallel: pick s = 0 and clamp t below
        0.0
    };
    let t = ((a12 * s + b2) / a22).clamp(0.0, 1.0);
    s = ((a12 * t - b1) / a11).clamp(0.0, 1.0);
    let p = a.start + d1 * s;
    let q = b.start + d2 * t;
    (p - q).norm()
}

/// Distance between the infinite support lines of two segments, replaced by
/// the segment-to-segment distance when the lines' closest points fall
/// outside the segments (two coplanar edges "intersect" far beyond their
/// extents otherwise).
pub fn line_distance(a: &LineSegment3D, b: &LineSegment3D) -> Real {
    let d1 = a.end - a.start;
    let d2 = b.end - b.start;
    let r = a.start - b.start;
    let a11 = d1.norm_squared();
    let a22 = d2.norm_squared();
    let a12 = d1.dot(&d2);
    let det = a11 * a22 - a12 * a12;
    if det <= 1e-12 * a11 * a22 {
        // parallel: perpendicular offset between the lines
        let dir = d1 / a11.sqrt();
        return (r - dir * r.dot(&dir)).norm();
    }
    let b1 = d1.dot(&r);
    let b2 = d2.dot(&r);
    let s = (a12 * b2 - a22 * b1) / det;
    let t = (a11 * b2 - a12 * b1) / det;
    if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
        ((a.start + d1 * s) - (b.start + d2 * t)).norm()
    } else {
        segment_distance(a, b)
    }
}

/// Orthogonal projection of `p` onto the line through `a` and `b`.
///
/// Returns the foot point and the line parameter; the parameter is in
/// `[0, 1]` exactly when the foot lies inside the segment.
pub fn project_point_onto_line(p: &Vec3, a: &Vec3, b: &Vec3) -> Result<(Vec3, Real), GeomError> {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 <= 0.0 {
        return Err(GeomError::DegenerateSegment);
    }
    let param = (p - a).dot(&d) / len2;
    Ok((a + d * param, param))
}
