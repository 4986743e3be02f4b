//! Per-plane 3-D line segment detection.
//!
//! Region members are projected onto the region's in-plane basis, an
//! occupancy grid sized from the region's point scales marks its footprint,
//! and the boundary is traced into closed loops (outer contours and hole
//! contours alike). Each loop, snapped to per-cell point centroids, is broken
//! into straight pieces by recursive splitting with an outlier threshold and
//! a minimum-support threshold, then refit and lifted back onto the plane.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

use crate::geom::{LineSegment3D, Real, Vec3};
use crate::segment::PlanarRegion;

/// Line-detection thresholds, expressed as multiples of the region's point
/// scale (the median nearest-neighbor distance), resolved at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineDetectParams {
    /// outlier threshold th_O = outlier_scale · point scale
    pub outlier_scale: Real,
    /// minimum support th_P = support_scale · point scale
    pub support_scale: Real,
}

impl Default for LineDetectParams {
    fn default() -> Self {
        Self {
            outlier_scale: 1.0,
            support_scale: 50.0,
        }
    }
}

/// Detect boundary line segments of one planar region.
pub fn detect_lines_in_plane(
    positions: &[Vec3],
    region: &PlanarRegion,
    params: &LineDetectParams,
) -> Vec<LineSegment3D> {
    let th_o = params.outlier_scale * region.s_ps;
    let th_p = params.support_scale * region.s_ps;
    if !(th_o > 0.0 && th_p > 0.0) {
        return Vec::new();
    }

    // project members onto the in-plane basis
    let (e1, e2) = region.basis;
    let uv: Vec<Vector2<Real>> = region
        .indices
        .iter()
        .map(|&i| {
            let d = positions[i as usize] - region.centroid;
            Vector2::new(d.dot(&e1), d.dot(&e2))
        })
        .collect();
    if uv.len() < 4 {
        return Vec::new();
    }

    // occupancy grid at twice the point scale; obliquely scanned surfaces
    // sample anisotropically (the nearest neighbor sits along the dense
    // axis), so the k-neighborhood scale sets a floor that keeps sparse-axis
    // rows from striping the grid
    let cell = (2.0 * region.s_ps).max(0.8 * region.s_k);
    let dp_eps = th_o.max(0.75 * cell);
    let mut min_u = Real::INFINITY;
    let mut min_v = Real::INFINITY;
    let mut max_u = Real::NEG_INFINITY;
    let mut max_v = Real::NEG_INFINITY;
    for p in &uv {
        min_u = min_u.min(p.x);
        min_v = min_v.min(p.y);
        max_u = max_u.max(p.x);
        max_v = max_v.max(p.y);
    }
    let w = (((max_u - min_u) / cell).floor() as usize + 1).min(8192);
    let h = (((max_v - min_v) / cell).floor() as usize + 1).min(8192);
    let mut occupied = vec![false; w * h];
    let mut sums = vec![Vector2::<Real>::zeros(); w * h];
    let mut counts = vec![0u32; w * h];
    for p in &uv {
        let i = (((p.x - min_u) / cell) as usize).min(w - 1);
        let j = (((p.y - min_v) / cell) as usize).min(h - 1);
        let c = j * w + i;
        occupied[c] = true;
        sums[c] += p;
        counts[c] += 1;
    }

    let loops = trace_boundary_loops(&occupied, w, h);

    let mut segments = Vec::new();
    for cell_loop in loops {
        // snap each boundary cell to the centroid of its points
        let mut poly: Vec<Vector2<Real>> = Vec::with_capacity(cell_loop.len());
        for &(i, j) in &cell_loop {
            let c = j * w + i;
            if counts[c] == 0 {
                continue;
            }
            let centroid = sums[c] / counts[c] as Real;
            if poly.last().map_or(true, |l| (l - centroid).norm() > 1e-12) {
                poly.push(centroid);
            }
        }
        if poly.len() < 4 {
            continue;
        }
        for piece in split_closed_polyline(&poly, dp_eps) {
            if piece.len() < 2 {
                continue;
            }
            if let Some((a, b)) = refit_piece(&poly, &piece) {
                if (b - a).norm() >= th_p {
                    let start = region.centroid + e1 * a.x + e2 * a.y;
                    let end = region.centroid + e1 * b.x + e2 * b.y;
                    if let Ok(seg) = LineSegment3D::new(start, end) {
                        segments.push(seg.canonical());
                    }
                }
            }
        }
    }
    segments
}

/// Trace the cell-boundary cracks of a binary grid into closed loops of
/// boundary cells. Outer contours and hole contours both appear; every crack
/// is used exactly once, so the result is deterministic.
fn trace_boundary_loops(occupied: &[bool], w: usize, h: usize) -> Vec<Vec<(usize, usize)>> {
    let occ = |x: i64, y: i64| -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < w
            && (y as usize) < h
            && occupied[y as usize * w + x as usize]
    };
    // directions: E, N, W, S; crack exists at corner (x, y) heading d when
    // the cell on its left is occupied and the cell on its right is not
    let exists = |x: i64, y: i64, d: u8| -> bool {
        match d {
            0 => occ(x, y) && !occ(x, y - 1),         // E: owner (x, y)
            1 => occ(x - 1, y) && !occ(x, y),         // N: owner (x-1, y)
            2 => occ(x - 1, y - 1) && !occ(x - 1, y), // W: owner (x-1, y-1)
            _ => occ(x, y - 1) && !occ(x - 1, y - 1), // S: owner (x, y-1)
        }
    };
    let owner = |x: i64, y: i64, d: u8| -> (usize, usize) {
        let (cx, cy) = match d {
            0 => (x, y),
            1 => (x - 1, y),
            2 => (x - 1, y - 1),
            _ => (x, y - 1),
        };
        (cx as usize, cy as usize)
    };
    let step = |x: i64, y: i64, d: u8| -> (i64, i64) {
        match d {
            0 => (x + 1, y),
            1 => (x, y + 1),
            2 => (x - 1, y),
            _ => (x, y - 1),
        }
    };

    let corner_stride = w + 2;
    let mut used = vec![false; (w + 2) * (h + 2) * 4];
    let key = |x: i64, y: i64, d: u8| -> usize {
        ((y as usize) * corner_stride + x as usize) * 4 + d as usize
    };

    let mut loops = Vec::new();
    for j in 0..h as i64 {
        for i in 0..w as i64 {
            for d in 0..4u8 {
                if !exists(i, j, d) || used[key(i, j, d)] {
                    continue;
                }
                // follow the loop from this crack
                let mut cells = Vec::new();
                let (mut x, mut y, mut dir) = (i, j, d);
                loop {
                    used[key(x, y, dir)] = true;
                    let c = owner(x, y, dir);
                    if cells.last() != Some(&c) {
                        cells.push(c);
                    }
                    let (nx, ny) = step(x, y, dir);
                    // prefer left turn, then straight, then right
                    let mut next_dir = None;
                    for turn in [1u8, 0, 3] {
                        let cand = (dir + turn) % 4;
                        if exists(nx, ny, cand) {
                            next_dir = Some(cand);
                            break;
                        }
                    }
                    let Some(nd) = next_dir else {
                        break; // malformed boundary; abandon this loop
                    };
                    x = nx;
                    y = ny;
                    dir = nd;
                    if x == i && y == j && dir == d {
                        break;
                    }
                }
                if cells.len() >= 2 && cells.first() == cells.last() {
                    cells.pop();
                }
                if cells.len() >= 2 {
                    loops.push(cells);
                }
            }
        }
    }
    loops
}

/// Break a closed polyline into maximal straight pieces: recursive splitting
/// at the farthest-deviation point (threshold `eps`), followed by a merge
/// pass across the artificial seams. Returns index ranges into the polyline,
/// in cyclic order.
fn split_closed_polyline(poly: &[Vector2<Real>], eps: Real) -> Vec<Vec<usize>> {
    let n = poly.len();
    // split the cycle at the two mutually farthest-ish vertices
    let a = farthest_from(poly, &poly[0]);
    let b = farthest_from(poly, &poly[a]);
    let (a, b) = (a.min(b), a.max(b));
    if a == b {
        return vec![(0..n).collect()];
    }

    let mut breaks: Vec<usize> = vec![a, b];
    let forward: Vec<usize> = (a..=b).collect();
    let backward: Vec<usize> = (b..n).chain(0..=a).collect();
    douglas_peucker(poly, &forward, eps, &mut breaks);
    douglas_peucker(poly, &backward, eps, &mut breaks);
    breaks.sort_unstable();
    breaks.dedup();

    // merge pass: drop breakpoints whose removal keeps the chord within eps
    loop {
        let m = breaks.len();
        if m <= 2 {
            break;
        }
        let mut removed = false;
        let mut idx = 0;
        while idx < breaks.len() && breaks.len() > 2 {
            let m = breaks.len();
            let prev = breaks[(idx + m - 1) % m];
            let mid = breaks[idx];
            let next = breaks[(idx + 1) % m];
            let span = cyclic_range(prev, next, poly.len());
            let _ = mid;
            if max_chord_deviation(poly, &span) <= eps {
                breaks.remove(idx);
                removed = true;
            } else {
                idx += 1;
            }
        }
        if !removed {
            break;
        }
    }

    // pieces between consecutive breakpoints, cyclically
    let m = breaks.len();
    (0..m)
        .map(|i| cyclic_range(breaks[i], breaks[(i + 1) % m], n))
        .collect()
}

fn cyclic_range(from: usize, to: usize, n: usize) -> Vec<usize> {
    if from <= to {
        (from..=to).collect()
    } else {
        (from..n).chain(0..=to).collect()
    }
}

fn farthest_from(poly: &[Vector2<Real>], p: &Vector2<Real>) -> usize {
    let mut best = 0;
    let mut best_d = -1.0;
    for (i, q) in poly.iter().enumerate() {
        let d = (q - p).norm_squared();
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn chord_deviation(poly: &[Vector2<Real>], span: &[usize], i: usize) -> Real {
    let a = poly[span[0]];
    let b = poly[*span.last().unwrap()];
    let d = b - a;
    let len = d.norm();
    if len < 1e-12 {
        return (poly[span[i]] - a).norm();
    }
    let v = poly[span[i]] - a;
    (v.x * d.y - v.y * d.x).abs() / len
}

fn max_chord_deviation(poly: &[Vector2<Real>], span: &[usize]) -> Real {
    (1..span.len().saturating_sub(1))
        .map(|i| chord_deviation(poly, span, i))
        .fold(0.0, Real::max)
}

fn douglas_peucker(poly: &[Vector2<Real>], span: &[usize], eps: Real, breaks: &mut Vec<usize>) {
    if span.len() <= 2 {
        return;
    }
    let mut worst = 0;
    let mut worst_d = 0.0;
    for i in 1..span.len() - 1 {
        let d = chord_deviation(poly, span, i);
        if d > worst_d {
            worst_d = d;
            worst = i;
        }
    }
    if worst_d > eps {
        breaks.push(span[worst]);
        douglas_peucker(poly, &span[..=worst], eps, breaks);
        douglas_peucker(poly, &span[worst..], eps, breaks);
    }
}

/// Total-least-squares segment through the piece's vertices: returns the two
/// extreme projections onto the fitted direction.
fn refit_piece(poly: &[Vector2<Real>], piece: &[usize]) -> Option<(Vector2<Real>, Vector2<Real>)> {
    let pts: Vec<Vector2<Real>> = piece.iter().map(|&i| poly[i]).collect();
    let n = pts.len() as Real;
    let mean = pts.iter().sum::<Vector2<Real>>() / n;
    let mut cov = Matrix2::zeros();
    for p in &pts {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let big = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        0
    } else {
        1
    };
    if eig.eigenvalues[big] < 1e-18 {
        return None;
    }
    let dir = eig.eigenvectors.column(big).into_owned().normalize();
    let mut t_min = Real::INFINITY;
    let mut t_max = Real::NEG_INFINITY;
    for p in &pts {
        let t = (p - mean).dot(&dir);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    if t_max - t_min < 1e-12 {
        return None;
    }
    Some((mean + dir * t_min, mean + dir * t_max))
}
