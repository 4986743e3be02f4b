//! Point cloud container shared by every pipeline stage.

use crate::geom::{Real, Vec3};

/// Ordered set of 3-D points with per-point intensity in `[0, 1]`.
///
/// Stored as parallel arrays; `intensities` always has the same length as
/// `positions` (zero-filled when the source had no intensity channel).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vec3>,
    pub intensities: Vec<Real>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            positions: Vec::with_capacity(n),
            intensities: Vec::with_capacity(n),
        }
    }

    pub fn from_positions(positions: Vec<Vec3>) -> Self {
        let intensities = vec![0.0; positions.len()];
        Self {
            positions,
            intensities,
        }
    }

    pub fn push(&mut self, position: Vec3, intensity: Real) {
        self.positions.push(position);
        self.intensities.push(intensity);
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec3, Real)> + '_ {
        self.positions.iter().zip(self.intensities.iter().copied())
    }

    /// Subset selected by index, preserving order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::with_capacity(indices.len());
        for &i in indices {
            out.push(self.positions[i], self.intensities[i]);
        }
        out
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.is_empty() {
            return None;
        }
        let sum: Vec3 = self.positions.iter().sum();
        Some(sum / self.positions.len() as Real)
    }
}

impl FromIterator<(Vec3, Real)> for PointCloud {
    fn from_iter<T: IntoIterator<Item = (Vec3, Real)>>(iter: T) -> Self {
        let mut cloud = Self::new();
        for (p, i) in iter {
            cloud.push(p, i);
        }
        cloud
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_preserves_order_and_intensity() {
        let mut cloud = PointCloud::new();
        for i in 0..5 {
            cloud.push(Vec3::new(i as f64, 0.0, 0.0), i as f64 / 10.0);
        }
        let sub = cloud.select(&[4, 1]);
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.positions[0].x, 4.0);
        assert_eq!(sub.intensities[1], 0.1);
    }

    #[test]
    fn centroid_of_empty_is_none() {
        assert!(PointCloud::new().centroid().is_none());
    }
}
