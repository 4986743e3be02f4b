//! Wide field-of-view rotating-LiDAR truck-compartment localization.
//!
//! A 2-D scanner on a single-axis rotating platform sweeps a dense 3-D point
//! cloud over the loading area. This crate implements the full measurement
//! and localization stack:
//!
//! - forward sensor model and a ray-casting scan simulator ([`scan`], [`sim`],
//!   [`scene`], [`site`]),
//! - extrinsic calibration of the scanner against the platform from planar
//!   targets ([`calib`]),
//! - world-frame construction from reflective corner boards and parking-area
//!   cropping ([`world`]),
//! - region-growing plane segmentation and per-plane line detection
//!   ([`segment`], [`lines`]),
//! - compartment contour fusion, clustering, completion, and eight-key-point
//!   output ([`contour`]),
//! - localization metrics and batch evaluation ([`metrics`]),
//! - ASCII PCD/PLY and JSON/CSV interchange ([`io`]), and a one-call
//!   detection pipeline ([`pipeline`]).

pub mod calib;
pub mod cloud;
pub mod contour;
pub mod geom;
pub mod io;
pub mod knn;
pub mod lines;
pub mod metrics;
pub mod pipeline;
pub mod scan;
pub mod scene;
pub mod segment;
pub mod sim;
pub mod site;
pub mod world;

pub use cloud::PointCloud;
pub use geom::{EulerAngles, GeomError, LineSegment3D, Mat3, Plane, Real, RigidTransform, Vec3};
pub use scan::{Extrinsics, ScanSample, SensorConfig};
