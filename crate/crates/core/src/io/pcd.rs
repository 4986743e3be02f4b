//! ASCII PCD reader and writer (format version 0.7).

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::IoError;
use crate::cloud::PointCloud;
use crate::geom::Vec3;

/// Write an ASCII PCD file with fields x y z intensity.
pub fn write_pcd(cloud: &PointCloud, path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = BufWriter::new(file);
    let n = cloud.len();
    let mut emit = |s: String| w.write_all(s.as_bytes());
    (|| -> std::io::Result<()> {
        emit("# .PCD v0.7 - Point Cloud Data file format\n".into())?;
        emit("VERSION 0.7\n".into())?;
        emit("FIELDS x y z intensity\n".into())?;
        emit("SIZE 8 8 8 8\n".into())?;
        emit("TYPE F F F F\n".into())?;
        emit("COUNT 1 1 1 1\n".into())?;
        emit(format!("WIDTH {n}\n"))?;
        emit("HEIGHT 1\n".into())?;
        emit("VIEWPOINT 0 0 0 1 0 0 0\n".into())?;
        emit(format!("POINTS {n}\n"))?;
        emit("DATA ascii\n".into())?;
        for (p, i) in cloud.iter() {
            emit(format!("{} {} {} {}\n", p.x, p.y, p.z, i))?;
        }
        Ok(())
    })()
    .map_err(|e| IoError::file(path, e))
}

/// Read an ASCII PCD file. Fields x, y, z are required, intensity optional;
/// the declared point count must match the body.
pub fn read_pcd(path: &Path) -> Result<PointCloud, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::file(path, e))?;
    let reader = BufReader::new(file);
    let mut fields: Vec<String> = Vec::new();
    let mut declared: Option<usize> = None;
    let mut data_ascii = false;
    let mut cloud = PointCloud::new();
    let mut in_body = false;
    let mut body_count = 0usize;

    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IoError::file(path, e))?;
        let line_no = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !in_body {
            let mut parts = trimmed.split_whitespace();
            let keyword = parts.next().unwrap_or_default().to_ascii_uppercase();
            match keyword.as_str() {
                "FIELDS" => fields = parts.map(|s| s.to_string()).collect(),
                "POINTS" => {
                    declared = parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .map(Some)
                        .ok_or_else(|| IoError::parse(path, line_no, "bad POINTS value"))?;
                }
                "DATA" => {
                    let kind = parts.next().unwrap_or_default();
                    if kind != "ascii" {
                        return Err(IoError::format(
                            path,
                            format!("unsupported DATA mode `{kind}` (ascii only)"),
                        ));
                    }
                    data_ascii = true;
                    in_body = true;
                }
                // VERSION, SIZE, TYPE, COUNT, WIDTH, HEIGHT, VIEWPOINT
                _ => {}
            }
            continue;
        }
        // body
        let ix =
            field_index(&fields, "x").ok_or_else(|| IoError::format(path, "missing field x"))?;
        let iy =
            field_index(&fields, "y").ok_or_else(|| IoError::format(path, "missing field y"))?;
        let iz =
            field_index(&fields, "z").ok_or_else(|| IoError::format(path, "missing field z"))?;
        let ii = field_index(&fields, "intensity");
        let values: Vec<&str> = trimmed.split_whitespace().collect();
        if values.len() < fields.len() {
            return Err(IoError::parse(
                path,
                line_no,
                format!("expected {} columns, got {}", fields.len(), values.len()),
            ));
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
        let intensity = match ii {
            Some(idx) => parse(idx)?,
            None => 0.0,
        };
        cloud.push(p, intensity);
        body_count += 1;
    }

    if !data_ascii {
        return Err(IoError::format(path, "missing DATA ascii section"));
    }
    match declared {
        Some(n) if n == body_count => Ok(cloud),
        Some(n) => Err(IoError::format(
            path,
            format!("header declares {n} points but body has {body_count}"),
        )),
        None => Err(IoError::format(path, "missing POINTS header")),
    }
}

fn field_index(fields: &[String], name: &str) -> Option<usize> {
    fields.iter().position(|f| f == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut cloud = PointCloud::new();
        for _ in 0..500 {
            cloud.push(
                Vec3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-5.0..5.0),
                ),
                rng.random_range(0.0..1.0),
            );
        }
        let dir = std::env::temp_dir().join("pcd_round_trip_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cloud.pcd");
        write_pcd(&cloud, &path).unwrap();
        let back = read_pcd(&path).unwrap();
        assert_eq!(cloud, back);
        // and the re-written bytes are identical
        let path2 = dir.join("cloud2.pcd");
        write_pcd(&back, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let dir = std::env::temp_dir().join("pcd_bad_count_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.pcd");
        std::fs::write(
            &path,
            "VERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n\
             WIDTH 3\nHEIGHT 1\nPOINTS 3\nDATA ascii\n0 0 0\n1 1 1\n",
        )
        .unwrap();
        assert!(matches!(read_pcd(&path), Err(IoError::Format { .. })));
    }

    #[test]
    fn empty_cloud_round_trips() {
        let dir = std::env::temp_dir().join("pcd_empty_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.pcd");
        write_pcd(&PointCloud::new(), &path).unwrap();
        let back = read_pcd(&path).unwrap();
        assert!(back.is_empty());
    }
}
