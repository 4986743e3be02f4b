//! Forward measurement model of the rotating 2-D LiDAR.
//!
//! A sample `(r, θ, φ)` maps to a platform-frame point via
//! `P = Q(φ)·(R_w·q + t)` with `q = r·(sin θ, cos θ, 0)`; `Q` is the platform
//! rotation about the y axis and `(R_w, t)` the sensor extrinsics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geom::{euler_to_rotation, platform_rotation, EulerAngles, Mat3, Real, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error("range must be positive, got {0}")]
    NonPositiveRange(Real),
    #[error("invalid sensor config: {0}")]
    InvalidConfig(String),
}

/// One raw sensor return: range, beam azimuth in the 2-D scan plane, and the
/// platform encoder angle. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub range: Real,
    pub azimuth: Real,
    pub platform: Real,
}

impl ScanSample {
    pub fn new(range: Real, azimuth: Real, platform: Real) -> Self {
        Self {
            range,
            azimuth,
            platform,
        }
    }
}

/// Rigid transform from the 2-D LiDAR frame to the platform frame:
/// rotation given as Euler angles, translation in meters.
///
/// The pitch and y-translation components lie along the platform rotation
/// axis and are only weakly observable by planar calibration; they are pinned
/// during estimation (see the calibration module).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Extrinsics {
    pub rotation: EulerAngles,
    pub translation: Vec3,
}

impl Extrinsics {
    pub fn new(rotation: EulerAngles, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        euler_to_rotation(self.rotation)
    }
}

/// Sensor geometry and acquisition settings. Angles in radians internally;
/// the JSON schema uses degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Beam azimuth sector `[min, max]` of the 2-D scan plane.
    pub scan_sector: [Real; 2],
    /// Angular step between beams.
    pub beam_resolution: Real,
    /// Platform sweep `[min, max]`.
    pub platform_sweep: [Real; 2],
    /// Angular step between platform positions.
    pub platform_resolution: Real,
    /// Scan-line frequency, Hz. Affects reported acquisition time only.
    pub scan_frequency: Real,
    /// Additive Gaussian noise on range, meters (1σ).
    pub range_noise_sigma: Real,
    /// Sensor height above the ground plane, meters.
    pub mount_height: Real,
}

/// Widest supported scan sector of the 2-D unit.
pub const MAX_SCAN_SECTOR: Real = 270.0 * std::f64::consts::PI / 180.0;

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            scan_sector: [45f64.to_radians(), 315f64.to_radians()],
            beam_resolution: 0.25f64.to_radians(),
            platform_sweep: [0.0, 180f64.to_radians()],
            platform_resolution: 0.2f64.to_radians(),
            scan_frequency: 25.0,
            range_noise_sigma: 0.002,
            mount_height: 3.3,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), ScanError> {
        let sector = self.scan_sector[1] - self.scan_sector[0];
        if !(sector > 0.0 && sector <= MAX_SCAN_SECTOR + 1e-12) {
            return Err(ScanError::InvalidConfig(format!(
                "scan sector spans {:.2}°, must be in (0°, 270°]",
                sector.to_degrees()
            )));
        }
        if self.beam_resolution <= 0.0 || self.platform_resolution <= 0.0 {
            return Err(ScanError::InvalidConfig(
                "angular resolutions must be positive".into(),
            ));
        }
        if self.platform_sweep[1] <= self.platform_sweep[0] {
            return Err(ScanError::InvalidConfig(
                "platform sweep must be a non-empty interval".into(),
            ));
        }
        if self.range_noise_sigma < 0.0 {
            return Err(ScanError::InvalidConfig(
                "range noise sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Beam azimuths of one scan line.
    pub fn beam_angles(&self) -> Vec<Real> {
        grid(self.scan_sector, self.beam_resolution)
    }

    /// Platform encoder angles of one sweep.
    pub fn platform_angles(&self) -> Vec<Real> {
        grid(self.platform_sweep, self.platform_resolution)
    }
}

fn grid(span: [Real; 2], step: Real) -> Vec<Real> {
    let n = ((span[1] - span[0]) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| span[0] + step * i as Real).collect()
}

/// Beam endpoint in the 2-D LiDAR frame: `q = r·(sin θ, cos θ, 0)`.
pub fn polar_to_lidar_point(range: Real, azimuth: Real) -> Result<Vec3, ScanError> {
    if range <= 0.0 || !range.is_finite() {
        return Err(ScanError::NonPositiveRange(range));
    }
    Ok(Vec3::new(range * azimuth.sin(), range * azimuth.cos(), 0.0))
}

/// Measurement equation: platform-frame point of one sample.
pub fn sample_to_world(sample: &ScanSample, extrinsics: &Extrinsics) -> Result<Vec3, ScanError> {
    let q = polar_to_lidar_point(sample.range, sample.azimuth)?;
    let rotated = extrinsics.rotation_matrix() * q + extrinsics.translation;
    Ok(platform_rotation(sample.platform) * rotated)
}

/// Batch reconstruction preserving per-sample intensity.
pub fn samples_to_cloud(
    samples: &[(ScanSample, Real)],
    extrinsics: &Extrinsics,
) -> Result<PointCloud, ScanError> {
    let rw = extrinsics.rotation_matrix();
    let mut cloud = PointCloud::with_capacity(samples.len());
    for (s, intensity) in samples {
        let q = polar_to_lidar_point(s.range, s.azimuth)?;
        let p = platform_rotation(s.platform) * (rw * q + extrinsics.translation);
        cloud.push(p, *intensity);
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn polar_examples() {
        assert_relative_eq!(
            polar_to_lidar_point(1.0, std::f64::consts::FRAC_PI_2).unwrap(),
            Vec3::new(1.0, 0.0, 0.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            polar_to_lidar_point(2.0, 0.0).unwrap(),
            Vec3::new(0.0, 2.0, 0.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            polar_to_lidar_point(1.5, std::f64::consts::PI).unwrap(),
            Vec3::new(0.0, -1.5, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn polar_rejects_non_positive_range() {
        assert!(polar_to_lidar_point(0.0, 1.0).is_err());
        assert!(polar_to_lidar_point(-2.0, 1.0).is_err());
    }

    #[test]
    fn sample_to_world_identity_extrinsics() {
        let e = Extrinsics::default();
        let p =
            sample_to_world(&ScanSample::new(1.0, std::f64::consts::FRAC_PI_2, 0.0), &e).unwrap();
        assert_relative_eq!(p, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-12);

        let p = sample_to_world(
            &ScanSample::new(
                1.0,
                std::f64::consts::FRAC_PI_2,
                std::f64::consts::FRAC_PI_2,
            ),
            &e,
        )
        .unwrap();
        assert_relative_eq!(p, Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-12);
    }

    #[test]
    fn sample_to_world_deployment_extrinsics() {
        // Expected value frozen from an independent evaluation of the
        // measurement equation (explicit matrix arithmetic in a scratchpad).
        let e = Extrinsics::new(
            EulerAngles::from_degrees(-1.46, 5.36, -0.45),
            Vec3::new(0.01456, -0.00016, 0.11967),
        );
        let p =
            sample_to_world(&ScanSample::new(2.0, std::f64::consts::FRAC_PI_2, 0.0), &e).unwrap();
        let expected = Vec3::new(2.005_753_428_975_14, -0.015799118188662, -0.067156514147501);
        assert_relative_eq!(p, expected, epsilon = 1e-12);

        // independent re-derivation with scalar trig, no shared rotation code
        let (wx, wy, wz) = (
            (-1.46f64).to_radians(),
            5.36f64.to_radians(),
            (-0.45f64).to_radians(),
        );
        let q = [2.0, 0.0, 0.0];
        let rx = [
            [1.0, 0.0, 0.0],
            [0.0, wx.cos(), -wx.sin()],
            [0.0, wx.sin(), wx.cos()],
        ];
        let ry = [
            [wy.cos(), 0.0, wy.sin()],
            [0.0, 1.0, 0.0],
            [-wy.sin(), 0.0, wy.cos()],
        ];
        let rz = [
            [wz.cos(), -wz.sin(), 0.0],
            [wz.sin(), wz.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ];
        let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut out = [[0.0; 3]; 3];
            for (i, row) in out.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            out
        };
        let rw = mul(rz, mul(ry, rx));
        let mut oracle = [0.0; 3];
        for (i, out) in oracle.iter_mut().enumerate() {
            *out = (0..3).map(|k| rw[i][k] * q[k]).sum::<f64>();
        }
        oracle[0] += 0.01456;
        oracle[1] += -0.00016;
        oracle[2] += 0.11967;
        for i in 0..3 {
            assert_relative_eq!(oracle[i], expected[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SensorConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.scan_sector = [0.0, 290f64.to_radians()];
        assert!(cfg.validate().is_err());
        cfg = SensorConfig {
            beam_resolution: 0.0,
            ..SensorConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_counts() {
        let cfg = SensorConfig::default();
        // 270° sector at 0.25° -> 1081 beams; 180° sweep at 0.2° -> 901 stops
        assert_eq!(cfg.beam_angles().len(), 1081);
        assert_eq!(cfg.platform_angles().len(), 901);
    }

    #[test]
    fn empty_sample_list_maps_to_empty_cloud() {
        let cloud = samples_to_cloud(&[], &Extrinsics::default()).unwrap();
        assert!(cloud.is_empty());
    }

    proptest! {
        // distinct grid samples map to distinct platform-frame points
        #[test]
        fn measurement_injective_on_grid(
            r1 in 0.5f64..20.0, r2 in 0.5f64..20.0,
            i1 in 0usize..200, i2 in 0usize..200,
            j1 in 0usize..180, j2 in 0usize..180,
        ) {
            prop_assume!(i1 != i2 || j1 != j2 || (r1 - r2).abs() > 1e-6);
            let e = Extrinsics::new(
                EulerAngles::from_degrees(-1.46, 5.36, -0.45),
                Vec3::new(0.015, 0.0, 0.12),
            );
            let theta = |i: usize| 45f64.to_radians() + i as f64 * 0.25f64.to_radians();
            let phi = |j: usize| j as f64 * 1.0f64.to_radians();
            let a = sample_to_world(&ScanSample::new(r1, theta(i1), phi(j1)), &e).unwrap();
            let b = sample_to_world(&ScanSample::new(r2, theta(i2), phi(j2)), &e).unwrap();
            prop_assert!((a - b).norm() > 1e-9);
        }
    }
}
