//! Synthetic measurement-site builder: ground plane, reflective corner
//! boards, parking rectangle, walls, and a parametric fence truck with
//! ground-truth compartment corners.
//!
//! Site coordinates: z up, ground at z = 0, sensor at `(0, 0, mount_height)`.
//! The scanner's blind cone surrounds its +y axis, so everything of interest
//! sits on the -y side. Converted to the platform frame (sensor at origin) by
//! a pure vertical translation.

use rand::Rng;

use crate::geom::{rot_z, Real, RigidTransform, Vec3};
use crate::scene::{
    ground_disc, horizontal_rect, vertical_rect, yawed_box, SceneModel, ScenePrimitive,
};

/// Parking rectangle and reflective corner boards.
#[derive(Debug, Clone)]
pub struct ParkingLayout {
    /// Corner order: origin, along length, diagonal, along width
    /// (counterclockwise seen from above).
    pub corners_site: [Vec3; 4],
    pub reflector_radius: Real,
    pub reflector_intensity: Real,
}

impl Default for ParkingLayout {
    fn default() -> Self {
        Self {
            // the sensor's ground projection falls inside the box (and the
            // compartment footprint of a parked truck): fences then never
            // shadow the floor creases sideways. The far side stays shy of
            // the scanner's blind cone around its +y axis.
            corners_site: [
                Vec3::new(-7.5, -2.6, 0.0),
                Vec3::new(7.5, -2.6, 0.0),
                Vec3::new(7.5, 1.4, 0.0),
                Vec3::new(-7.5, 1.4, 0.0),
            ],
            reflector_radius: 0.25,
            reflector_intensity: 0.95,
        }
    }
}

impl ParkingLayout {
    pub fn reflector_primitives(&self) -> Vec<ScenePrimitive> {
        self.corners_site
            .iter()
            .enumerate()
            .map(|(i, c)| {
                // lifted a hair above the ground so the disc wins the ray cast
                ground_disc(
                    &format!("reflector_{}", i + 1),
                    [c.x, c.y],
                    c.z + 0.002,
                    self.reflector_radius,
                    self.reflector_intensity,
                )
            })
            .collect()
    }

    /// Analytic world frame: maps site coordinates to the parking frame
    /// (origin at corner 1, x along length, y along width, z up).
    pub fn world_from_site(&self) -> RigidTransform {
        let p1 = self.corners_site[0];
        let x = (self.corners_site[1] - p1).normalize();
        let z = Vec3::z();
        let y = z.cross(&x);
        let r_site_from_world = crate::geom::Mat3::from_columns(&[x, y, z]);
        RigidTransform::new(r_site_from_world, p1)
            .expect("axes orthonormal by construction")
            .inverse()
    }

    pub fn length(&self) -> Real {
        (self.corners_site[1] - self.corners_site[0]).norm()
    }

    pub fn width(&self) -> Real {
        (self.corners_site[3] - self.corners_site[0]).norm()
    }
}

/// A clutter box resting on the compartment floor, in truck-local
/// coordinates (origin at the interior corner, x along the length).
#[derive(Debug, Clone, Copy)]
pub struct ClutterBox {
    pub center_xy: [Real; 2],
    pub size: Vec3,
    pub yaw: Real,
    pub intensity: Real,
}

/// Parametric fence truck: floor, two side fences, a front fence, and an
/// optional rear fence, built from thin panels. Interior corner sits at
/// `position` with the length axis yawed about z.
#[derive(Debug, Clone)]
pub struct FenceTruck {
    /// Interior length, width, fence height.
    pub interior: [Real; 3],
    /// Ground to compartment floor surface.
    pub bed_height: Real,
    pub rear_fence: bool,
    /// Cab block in front of the compartment: (length, height from ground).
    pub cab: Option<(Real, Real)>,
    pub clutter: Vec<ClutterBox>,
    pub floor_intensity: Real,
    pub panel_intensity: Real,
    /// Site position of the interior corner (local origin), on the ground plane.
    pub position: [Real; 2],
    pub yaw: Real,
}

impl FenceTruck {
    pub fn new(length: Real, width: Real, fence_height: Real) -> Self {
        Self {
            interior: [length, width, fence_height],
            bed_height: 1.1,
            rear_fence: true,
            cab: Some((1.8, 2.5)),
            clutter: Vec::new(),
            floor_intensity: 0.4,
            panel_intensity: 0.5,
            position: [0.0, 0.0],
            yaw: 0.0,
        }
    }

    fn local_to_site(&self, p: Vec3) -> Vec3 {
        rot_z(self.yaw) * p + Vec3::new(self.position[0], self.position[1], self.bed_height)
    }

    /// Scene primitives in site coordinates.
    pub fn primitives(&self) -> Vec<ScenePrimitive> {
        let [l, w, h] = self.interior;
        let mut out = Vec::new();
        let place = |p: ScenePrimitive| p;

        // floor: horizontal rect at local z=0
        let floor_center = self.local_to_site(Vec3::new(l / 2.0, w / 2.0, 0.0));
        let mut floor = horizontal_rect(
            "truck_floor",
            [floor_center.x, floor_center.y],
            [l, w],
            floor_center.z,
            self.floor_intensity,
        );
        if let crate::scene::PrimitiveShape::Rect { u, v, .. } = &mut floor.shape {
            *u = rot_z(self.yaw) * Vec3::x();
            *v = rot_z(self.yaw) * Vec3::y();
        }
        out.push(place(floor));

        // side fences: vertical panels along the length at local y = 0 and y = w
        for (label, y) in [("fence_left", 0.0), ("fence_right", w)] {
            let c = self.local_to_site(Vec3::new(l / 2.0, y, h / 2.0));
            out.push(place(vertical_rect(
                label,
                c,
                l,
                h,
                self.yaw,
                self.panel_intensity,
            )));
        }
        // front fence at local x = 0, rear optional at x = l
        let mut walls = vec![("fence_front", 0.0)];
        if self.rear_fence {
            walls.push(("fence_rear", l));
        }
        for (label, x) in walls {
            let c = self.local_to_site(Vec3::new(x, w / 2.0, h / 2.0));
            out.push(place(vertical_rect(
                label,
                c,
                w,
                h,
                self.yaw + std::f64::consts::FRAC_PI_2,
                self.panel_intensity,
            )));
        }

        if let Some((cab_len, cab_height)) = self.cab {
            // cabs sit forward of the bed with a gap and are narrower than
            // the compartment, so their faces never merge with the fences
            let gap = 0.4;
            let cab_w = (w - 0.3).max(1.2);
            let center_local = Vec3::new(
                -gap - cab_len / 2.0,
                w / 2.0,
                cab_height / 2.0 - self.bed_height,
            );
            out.push(place(yawed_box(
                "cab",
                self.local_to_site(center_local),
                Vec3::new(cab_len, cab_w, cab_height),
                self.yaw,
                0.35,
            )));
        }

        for (i, c) in self.clutter.iter().enumerate() {
            let center_local = Vec3::new(c.center_xy[0], c.center_xy[1], c.size.z / 2.0);
            out.push(place(yawed_box(
                &format!("clutter_{i}"),
                self.local_to_site(center_local),
                c.size,
                self.yaw + c.yaw,
                c.intensity,
            )));
        }
        out
    }

    /// The eight interior corners in site coordinates: floor rectangle then
    /// fence-top rectangle, counterclockwise in local x-y.
    pub fn truth_corners_site(&self) -> [Vec3; 8] {
        let [l, w, h] = self.interior;
        let local = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(l, 0.0, 0.0),
            Vec3::new(l, w, 0.0),
            Vec3::new(0.0, w, 0.0),
            Vec3::new(0.0, 0.0, h),
            Vec3::new(l, 0.0, h),
            Vec3::new(l, w, h),
            Vec3::new(0.0, w, h),
        ];
        local.map(|p| self.local_to_site(p))
    }

    /// Interior dimensions `(l, w, h)`.
    pub fn dims(&self) -> [Real; 3] {
        self.interior
    }
}

/// Full synthetic site: ground, reflectors, optional walls/clutter, trucks.
#[derive(Debug, Clone)]
pub struct SiteBuilder {
    pub mount_height: Real,
    pub parking: ParkingLayout,
    pub ground_intensity: Real,
    pub with_walls: bool,
    pub outside_clutter: bool,
    pub trucks: Vec<FenceTruck>,
}

impl Default for SiteBuilder {
    fn default() -> Self {
        Self {
            mount_height: 3.3,
            parking: ParkingLayout::default(),
            ground_intensity: 0.2,
            with_walls: false,
            outside_clutter: false,
            trucks: Vec::new(),
        }
    }
}

impl SiteBuilder {
    /// Assemble the scene in platform-frame coordinates.
    pub fn build(&self) -> SceneModel {
        let mut prims = vec![horizontal_rect(
            "ground",
            [0.0, -1.0],
            [26.0, 12.0],
            0.0,
            self.ground_intensity,
        )];
        prims.extend(self.parking.reflector_primitives());
        if self.with_walls {
            prims.push(vertical_rect(
                "wall_south",
                Vec3::new(0.0, -6.8, 2.0),
                24.0,
                4.0,
                0.0,
                0.3,
            ));
            prims.push(vertical_rect(
                "wall_east",
                Vec3::new(12.5, -1.5, 2.0),
                9.0,
                4.0,
                std::f64::consts::FRAC_PI_2,
                0.3,
            ));
        }
        if self.outside_clutter {
            // forklift-sized blocks outside the parking rectangle
            prims.push(yawed_box(
                "forklift",
                Vec3::new(-10.0, -1.0, 0.9),
                Vec3::new(1.4, 2.3, 1.8),
                0.4,
                0.45,
            ));
            prims.push(yawed_box(
                "pallet_stack",
                Vec3::new(10.5, -0.2, 0.5),
                Vec3::new(1.2, 1.2, 1.0),
                0.1,
                0.55,
            ));
        }
        for t in &self.trucks {
            prims.extend(t.primitives());
        }
        // shift everything from site coordinates to the platform frame
        let dz = -self.mount_height;
        for p in &mut prims {
            shift_z(p, dz);
        }
        SceneModel::new(prims).expect("site primitives are valid by construction")
    }

    /// Analytic platform-to-world transform implied by the layout.
    pub fn world_from_platform(&self) -> RigidTransform {
        let site_from_platform =
            RigidTransform::from_translation(Vec3::new(0.0, 0.0, self.mount_height));
        self.parking.world_from_site().compose(&site_from_platform)
    }

    /// Parking corner centers in platform coordinates.
    pub fn parking_corners_platform(&self) -> [Vec3; 4] {
        self.parking
            .corners_site
            .map(|c| c - Vec3::new(0.0, 0.0, self.mount_height))
    }

    /// Ground-truth corners of truck `i` in the world (parking) frame.
    pub fn truth_corners_world(&self, i: usize) -> [Vec3; 8] {
        let w = self.parking.world_from_site();
        self.trucks[i].truth_corners_site().map(|p| w.apply(&p))
    }
}

fn shift_z(p: &mut ScenePrimitive, dz: Real) {
    use crate::scene::PrimitiveShape::*;
    match &mut p.shape {
        Box { center, .. } => center.z += dz,
        Rect { center, .. } => center.z += dz,
        Disc { center, .. } => center.z += dz,
    }
}

/// Draw a randomized fence truck parked inside the layout, following the
/// benchmark conventions: length 5–13 m, random yaw and lateral jitter,
/// 40% missing rear fence, 50% with interior clutter.
pub fn random_truck<R: Rng>(rng: &mut R, parking: &ParkingLayout) -> FenceTruck {
    let length = rng.random_range(5.0..13.0);
    let width = rng.random_range(2.1..2.5);
    let fence_h = rng.random_range(0.6..1.4);
    let mut truck = FenceTruck::new(length, width, fence_h);
    truck.bed_height = rng.random_range(0.8..1.3);
    truck.rear_fence = rng.random_range(0.0..1.0) > 0.4;
    if rng.random_range(0.0..1.0) < 0.5 {
        let n = rng.random_range(1..4usize);
        for _ in 0..n {
            let size = Vec3::new(
                rng.random_range(0.3..1.1),
                rng.random_range(0.3..1.0),
                rng.random_range(0.3..fence_h + 0.3),
            );
            truck.clutter.push(ClutterBox {
                center_xy: [
                    rng.random_range(size.x / 2.0 + 0.3..length - size.x / 2.0 - 0.3),
                    rng.random_range(size.y / 2.0 + 0.2..width - size.y / 2.0 - 0.2),
                ],
                size,
                yaw: rng.random_range(-0.5..0.5),
                intensity: rng.random_range(0.25..0.7),
            });
        }
    }

    // park inside the rectangle with clearance, small random yaw
    let p1 = parking.corners_site[0];
    let yaw = rng.random_range(-0.035..0.035);
    let margin_x = (parking.length() - length).max(0.4);
    let x_hi = margin_x - 0.2;
    let x_lo = x_hi.min(2.3); // cab room when the slot allows it
    let x0 = p1.x
        + if x_hi - x_lo > 1e-9 {
            rng.random_range(x_lo..x_hi)
        } else {
            x_lo
        };
    let y0 = p1.y + rng.random_range(0.5..(parking.width() - width - 0.5).max(0.6));
    truck.position = [x0, y0];
    truck.yaw = yaw;
    truck
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truth_corners_transform_with_pose() {
        let mut t = FenceTruck::new(8.0, 2.4, 1.0);
        t.position = [2.0, -3.0];
        t.yaw = 0.1;
        let c = t.truth_corners_site();
        // first corner is the posed local origin at bed height
        assert!((c[0] - Vec3::new(2.0, -3.0, t.bed_height)).norm() < 1e-12);
        // top face sits fence-height above the bottom face
        for i in 0..4 {
            assert!(((c[i + 4] - c[i]).z - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn world_frame_puts_parking_origin_at_zero() {
        let site = SiteBuilder::default();
        let w = site.world_from_platform();
        let corners = site.parking_corners_platform();
        let p1 = w.apply(&corners[0]);
        assert!(p1.norm() < 1e-12);
        let p2 = w.apply(&corners[1]);
        assert!((p2 - Vec3::new(site.parking.length(), 0.0, 0.0)).norm() < 1e-9);
        let p4 = w.apply(&corners[3]);
        assert!((p4 - Vec3::new(0.0, site.parking.width(), 0.0)).norm() < 1e-9);
    }

    #[test]
    fn random_trucks_stay_inside_parking() {
        let parking = ParkingLayout::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let t = random_truck(&mut rng, &parking);
            let w = parking.world_from_site();
            for c in t.truth_corners_site() {
                let a = w.apply(&c);
                assert!(a.x > -0.2 && a.x < parking.length() + 0.2, "x={}", a.x);
                assert!(a.y > 0.0 && a.y < parking.width(), "y={}", a.y);
            }
        }
    }
}
