//! Parametric scenes for the synthetic scan simulator.
//!
//! A scene is a list of ray-castable primitives, each with a constant surface
//! intensity. Scenes are described in the platform frame: origin at the
//! sensor, z up, ground plane at `z = -mount_height`.

use thiserror::Error;

use crate::geom::{rot_z, Mat3, Real, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("primitive `{name}`: {reason}")]
    InvalidPrimitive { name: String, reason: String },
}

const RAY_EPS: Real = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveShape {
    /// Oriented box: local axes given by `rotation` columns, extents from center.
    Box {
        center: Vec3,
        rotation: Mat3,
        half_extents: Vec3,
    },
    /// Planar rectangle spanned by orthonormal in-plane axes `u`, `v`.
    Rect {
        center: Vec3,
        u: Vec3,
        v: Vec3,
        half_u: Real,
        half_v: Real,
    },
    /// Planar disc.
    Disc {
        center: Vec3,
        normal: Vec3,
        radius: Real,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePrimitive {
    pub label: String,
    pub shape: PrimitiveShape,
    pub intensity: Real,
}

impl ScenePrimitive {
    /// Distance along the unit ray `origin + t·dir` to the nearest surface
    /// hit, if any. Surfaces are two-sided.
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<Real> {
        match &self.shape {
            PrimitiveShape::Box {
                center,
                rotation,
                half_extents,
            } => {
                let rt = rotation.transpose();
                let o = rt * (origin - center);
                let d = rt * dir;
                let mut t_near = Real::NEG_INFINITY;
                let mut t_far = Real::INFINITY;
                for a in 0..3 {
                    if d[a].abs() < 1e-15 {
                        if o[a].abs() > half_extents[a] {
                            return None;
                        }
                        continue;
                    }
                    let inv = 1.0 / d[a];
                    let mut t1 = (-half_extents[a] - o[a]) * inv;
                    let mut t2 = (half_extents[a] - o[a]) * inv;
                    if t1 > t2 {
                        std::mem::swap(&mut t1, &mut t2);
                    }
                    t_near = t_near.max(t1);
                    t_far = t_far.min(t2);
                    if t_near > t_far {
                        return None;
                    }
                }
                if t_near > RAY_EPS {
                    Some(t_near)
                } else if t_far > RAY_EPS {
                    Some(t_far)
                } else {
                    None
                }
            }
            PrimitiveShape::Rect {
                center,
                u,
                v,
                half_u,
                half_v,
            } => {
                let n = u.cross(v);
                let denom = n.dot(dir);
                if denom.abs() < 1e-12 {
                    return None;
                }
                let t = n.dot(&(center - origin)) / denom;
                if t <= RAY_EPS {
                    return None;
                }
                let q = origin + dir * t - center;
                if q.dot(u).abs() <= *half_u && q.dot(v).abs() <= *half_v {
                    Some(t)
                } else {
                    None
                }
            }
            PrimitiveShape::Disc {
                center,
                normal,
                radius,
            } => {
                let denom = normal.dot(dir);
                if denom.abs() < 1e-12 {
                    return None;
                }
                let t = normal.dot(&(center - origin)) / denom;
                if t <= RAY_EPS {
                    return None;
                }
                let q = origin + dir * t - center;
                if (q - normal * q.dot(normal)).norm() <= *radius {
                    Some(t)
                } else {
                    None
                }
            }
        }
    }

    /// Unsigned distance from `p` to the primitive surface.
    pub fn surface_distance(&self, p: &Vec3) -> Real {
        match &self.shape {
            PrimitiveShape::Box {
                center,
                rotation,
                half_extents,
            } => {
                let q = rotation.transpose() * (p - center);
                let d = Vec3::new(
                    q.x.abs() - half_extents.x,
                    q.y.abs() - half_extents.y,
                    q.z.abs() - half_extents.z,
                );
                let outside = Vec3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0)).norm();
                let inside = d.x.max(d.y).max(d.z).min(0.0);
                (outside + inside).abs()
            }
            PrimitiveShape::Rect {
                center,
                u,
                v,
                half_u,
                half_v,
            } => {
                let q = p - center;
                let n = u.cross(v);
                let du = (q.dot(u).abs() - half_u).max(0.0);
                let dv = (q.dot(v).abs() - half_v).max(0.0);
                let dn = q.dot(&n);
                (du * du + dv * dv + dn * dn).sqrt()
            }
            PrimitiveShape::Disc {
                center,
                normal,
                radius,
            } => {
                let q = p - center;
                let dn = q.dot(normal);
                let radial = ((q - normal * dn).norm() - radius).max(0.0);
                (dn * dn + radial * radial).sqrt()
            }
        }
    }

    fn validate(&self) -> Result<(), SceneError> {
        let fail = |reason: &str| {
            Err(SceneError::InvalidPrimitive {
                name: self.label.clone(),
                reason: reason.to_string(),
            })
        };
        if !(0.0..=1.0).contains(&self.intensity) {
            return fail("intensity outside [0, 1]");
        }
        match &self.shape {
            PrimitiveShape::Box {
                center,
                rotation,
                half_extents,
            } => {
                if !center.iter().all(|c| c.is_finite())
                    || !rotation.iter().all(|c| c.is_finite())
                    || !half_extents.iter().all(|c| c.is_finite() && *c > 0.0)
                {
                    return fail("non-finite pose or non-positive extents");
                }
            }
            PrimitiveShape::Rect {
                center,
                u,
                v,
                half_u,
                half_v,
            } => {
                if !center.iter().all(|c| c.is_finite()) || !(*half_u > 0.0 && *half_v > 0.0) {
                    return fail("non-finite pose or non-positive extents");
                }
                if (u.norm() - 1.0).abs() > 1e-6
                    || (v.norm() - 1.0).abs() > 1e-6
                    || u.dot(v).abs() > 1e-6
                {
                    return fail("in-plane axes must be orthonormal");
                }
            }
            PrimitiveShape::Disc {
                center,
                normal,
                radius,
            } => {
                if !center.iter().all(|c| c.is_finite()) || *radius <= 0.0 {
                    return fail("non-finite pose or non-positive radius");
                }
                if (normal.norm() - 1.0).abs() > 1e-6 {
                    return fail("normal must be unit length");
                }
            }
        }
        Ok(())
    }
}

/// Ray-castable scene: a flat list of textured primitives.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneModel {
    pub primitives: Vec<ScenePrimitive>,
}

impl SceneModel {
    pub fn new(primitives: Vec<ScenePrimitive>) -> Result<Self, SceneError> {
        for p in &primitives {
            p.validate()?;
        }
        Ok(Self { primitives })
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Nearest hit along a unit ray: `(range, primitive index)`.
    pub fn ray_cast(&self, origin: &Vec3, dir: &Vec3) -> Option<(Real, usize)> {
        let mut best: Option<(Real, usize)> = None;
        for (i, prim) in self.primitives.iter().enumerate() {
            if let Some(t) = prim.ray_hit(origin, dir) {
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best
    }

    /// Distance from `p` to the nearest primitive surface.
    pub fn nearest_surface_distance(&self, p: &Vec3) -> Real {
        self.primitives
            .iter()
            .map(|prim| prim.surface_distance(p))
            .fold(Real::INFINITY, Real::min)
    }

    pub fn extend(&mut self, other: Vec<ScenePrimitive>) {
        self.primitives.extend(other);
    }
}

/// Axis-aligned helper: rectangle in the z = `height` plane.
pub fn horizontal_rect(
    label: &str,
    center_xy: [Real; 2],
    size_xy: [Real; 2],
    height: Real,
    intensity: Real,
) -> ScenePrimitive {
    ScenePrimitive {
        label: label.to_string(),
        shape: PrimitiveShape::Rect {
            center: Vec3::new(center_xy[0], center_xy[1], height),
            u: Vec3::x(),
            v: Vec3::y(),
            half_u: size_xy[0] / 2.0,
            half_v: size_xy[1] / 2.0,
        },
        intensity,
    }
}

/// Vertical rectangle whose in-plane axes are `yaw`-rotated x (width) and z
/// (height).
pub fn vertical_rect(
    label: &str,
    center: Vec3,
    width: Real,
    height: Real,
    yaw: Real,
    intensity: Real,
) -> ScenePrimitive {
    let u = rot_z(yaw) * Vec3::x();
    ScenePrimitive {
        label: label.to_string(),
        shape: PrimitiveShape::Rect {
            center,
            u,
            v: Vec3::z(),
            half_u: width / 2.0,
            half_v: height / 2.0,
        },
        intensity,
    }
}

/// Upright box with a yaw about z.
pub fn yawed_box(
    label: &str,
    center: Vec3,
    size: Vec3,
    yaw: Real,
    intensity: Real,
) -> ScenePrimitive {
    ScenePrimitive {
        label: label.to_string(),
        shape: PrimitiveShape::Box {
            center,
            rotation: rot_z(yaw),
            half_extents: size / 2.0,
        },
        intensity,
    }
}

/// Disc parallel to the ground at height `z`.
pub fn ground_disc(
    label: &str,
    center_xy: [Real; 2],
    z: Real,
    radius: Real,
    intensity: Real,
) -> ScenePrimitive {
    ScenePrimitive {
        label: label.to_string(),
        shape: PrimitiveShape::Disc {
            center: Vec3::new(center_xy[0], center_xy[1], z),
            normal: Vec3::z(),
            radius,
        },
        intensity,
    }
}
