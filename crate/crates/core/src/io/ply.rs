//! ASCII PLY reader and writers, including debug overlays.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::IoError;
use crate::cloud::PointCloud;
use crate::geom::{LineSegment3D, Vec3};
use crate::segment::PlanarRegion;

/// Write an ASCII PLY with double-precision vertices and intensity.
pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        write!(
            w,
            "ply\nformat ascii 1.0\nelement vertex {}\n\
             property double x\nproperty double y\nproperty double z\n\
             property double intensity\nend_header\n",
            cloud.len()
        )?;
        for (p, i) in cloud.iter() {
            writeln!(w, "{} {} {} {}", p.x, p.y, p.z, i)?;
        }
        Ok(())
    })()
    .map_err(|e| IoError::file(path, e))
}

/// Read an ASCII PLY. Vertex properties x, y, z required (float or double),
/// intensity optional; other properties and elements are skipped.
pub fn read_ply(path: &Path) -> Result<PointCloud, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut vertex_count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    let mut line_no = 0usize;

    loop {
        line.clear();
        let read = reader
            .read_line(&mut line)
            .map_err(|e| IoError::file(path, e))?;
        line_no += 1;
        if read == 0 {
            return Err(IoError::format(path, "unexpected end of header"));
        }
        let trimmed = line.trim();
        if line_no == 1 && trimmed != "ply" {
            return Err(IoError::format(path, "missing `ply` magic"));
        }
        if trimmed.starts_with("format") && !trimmed.contains("ascii") {
            return Err(IoError::format(path, "binary ply unsupported"));
        }
        if let Some(rest) = trimmed.strip_prefix("element ") {
            let mut parts = rest.split_whitespace();
            let name = parts.next().unwrap_or_default();
            in_vertex_element = name == "vertex";
            if in_vertex_element {
                vertex_count = parts.next().and_then(|v| v.parse().ok());
                if vertex_count.is_none() {
                    return Err(IoError::parse(path, line_no, "bad vertex count"));
                }
            }
        } else if let Some(rest) = trimmed.strip_prefix("property ") {
            if in_vertex_element {
                let mut parts = rest.split_whitespace();
                let _ty = parts.next();
                if let Some(name) = parts.next() {
                    properties.push(name.to_string());
                }
            }
        } else if trimmed == "end_header" {
            break;
        }
    }

    let n = vertex_count.ok_or_else(|| IoError::format(path, "missing vertex element"))?;
    let find = |name: &str| properties.iter().position(|p| p == name);
    let ix = find("x").ok_or_else(|| IoError::format(path, "missing property x"))?;
    let iy = find("y").ok_or_else(|| IoError::format(path, "missing property y"))?;
    let iz = find("z").ok_or_else(|| IoError::format(path, "missing property z"))?;
    let ii = find("intensity");

    let mut cloud = PointCloud::with_capacity(n);
    for _ in 0..n {
        line.clear();
        let read = reader
            .read_line(&mut line)
            .map_err(|e| IoError::file(path, e))?;
        line_no += 1;
        if read == 0 {
            return Err(IoError::format(
                path,
                format!("header declares {n} vertices but body ended early"),
            ));
        }
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() < properties.len() {
            return Err(IoError::parse(path, line_no, "short vertex row"));
        }
        let parse = |idx: usize| -> Result<f64, IoError> {
            values[idx]
                .parse::<f64>()
                .map_err(|_| IoError::parse(path, line_no, format!("bad number `{}`", values[idx])))
        };
        let p = Vec3::new(parse(ix)?, parse(iy)?, parse(iz)?);
        if !p.iter().all(|v| v.is_finite()) {
            return Err(IoError::parse(path, line_no, "non-finite coordinate"));
        }
        cloud.push(p, ii.map(parse).transpose()?.unwrap_or(0.0));
    }
    Ok(cloud)
}

/// Inspection overlay: the cloud in gray plus a red wireframe of segments,
/// written as colored vertices and edge elements.
pub fn write_overlay_ply(
    cloud: &PointCloud,
    wireframe: &[LineSegment3D],
    path: &Path,
) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = BufWriter::new(file);
    let n_vertices = cloud.len() + wireframe.len() * 2;
    (|| -> std::io::Result<()> {
        write!(
            w,
            "ply\nformat ascii 1.0\nelement vertex {}\n\
             property double x\nproperty double y\nproperty double z\n\
             property uchar red\nproperty uchar green\nproperty uchar blue\n\
             element edge {}\nproperty int vertex1\nproperty int vertex2\n\
             end_header\n",
            n_vertices,
            wireframe.len()
        )?;
        for (p, i) in cloud.iter() {
            let shade = (80.0 + i * 150.0).clamp(0.0, 255.0) as u8;
            writeln!(w, "{} {} {} {shade} {shade} {shade}", p.x, p.y, p.z)?;
        }
        for s in wireframe {
            writeln!(w, "{} {} {} 255 40 40", s.start.x, s.start.y, s.start.z)?;
            writeln!(w, "{} {} {} 255 40 40", s.end.x, s.end.y, s.end.z)?;
        }
        for (i, _) in wireframe.iter().enumerate() {
            let base = cloud.len() + 2 * i;
            writeln!(w, "{} {}", base, base + 1)?;
        }
        Ok(())
    })()
    .map_err(|e| IoError::file(path, e))
}

/// Inspection dump of a segmentation: each region gets a distinct color,
/// unsegmented points stay dark gray.
pub fn write_region_debug_ply(
    positions: &[Vec3],
    regions: &[PlanarRegion],
    path: &Path,
) -> Result<(), IoError> {
    const PALETTE: [[u8; 3]; 10] = [
        [230, 60, 60],
        [60, 160, 230],
        [70, 200, 90],
        [240, 180, 40],
        [170, 90, 230],
        [60, 220, 200],
        [240, 110, 180],
        [150, 150, 60],
        [90, 110, 240],
        [250, 140, 70],
    ];
    let mut colors = vec![[60u8, 60, 60]; positions.len()];
    for (r, region) in regions.iter().enumerate() {
        let c = PALETTE[r % PALETTE.len()];
        for &i in &region.indices {
            colors[i as usize] = c;
        }
    }
    let file = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        write!(
            w,
            "ply\nformat ascii 1.0\nelement vertex {}\n\
             property double x\nproperty double y\nproperty double z\n\
             property uchar red\nproperty uchar green\nproperty uchar blue\n\
             end_header\n",
            positions.len()
        )?;
        for (p, c) in positions.iter().zip(&colors) {
            writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, c[0], c[1], c[2])?;
        }
        Ok(())
    })()
    .map_err(|e| IoError::file(path, e))
}
