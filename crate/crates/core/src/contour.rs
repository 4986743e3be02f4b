//! Compartment contour reasoning: in-plane segment fusion, spatial
//! clustering around the longest edge, contour completion, and the eight
//! compartment key points.
//!
//! Detected boundary segments arrive fragmented and partially missing. They
//! are fused per plane (latitude-binned, origin-offset and perpendicular
//! gates), the four lengthwise compartment edges are selected by cosine
//! similarity and distance to the longest segment, truncated extents are
//! completed by growing every edge to the union of the detected spans, and
//! the resulting hexahedron vertices are emitted in a canonical order.

use thiserror::Error;

use crate::geom::{line_distance, project_point_onto_line, LineSegment3D, Real, Vec3};

#[derive(Debug, Error)]
pub enum ContourError {
    #[error("fusion stage: no input line segments")]
    NoSegments,
    #[error(
        "clustering stage: insufficient contour edges: found {found} candidates \
         parallel to the reference edge, need 3"
    )]
    InsufficientEdges { found: usize },
    #[error("completion stage: degenerate contour geometry: {detail}")]
    DegenerateContour { detail: String },
}

/// In-plane fusion gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    /// latitude bin width, radians
    pub latitude_bin: Real,
    /// relative origin-offset gate: |d_i − d_j| / d_mag below this
    pub relative_offset_max: Real,
    /// perpendicular gate: endpoint distances below perp_factor · s_k
    pub perp_factor: Real,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            latitude_bin: 6f64.to_radians(),
            relative_offset_max: 0.1,
            perp_factor: 4.0,
        }
    }
}

/// Edge-clustering gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    /// direction gate: accept when 1 − |cos ∠(s, reference)| ≤ this
    pub cos_tolerance: Real,
    /// distance gate to the reference edge, meters
    pub max_distance: Real,
    /// candidates closer than this to an already-kept edge are duplicates
    pub min_separation: Real,
    /// a candidate must share at least this fraction of the shorter span
    /// with the reference along its direction (compartment edges overlap;
    /// cab or neighboring-structure edges sit axially apart)
    pub min_overlap: Real,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            cos_tolerance: 0.03,
            max_distance: 4.0,
            min_separation: 0.3,
            min_overlap: 0.15,
        }
    }
}

/// Overlap of two segments projected on the first one's direction, as a
/// fraction of the shorter projected span.
fn axial_overlap(reference: &LineSegment3D, candidate: &LineSegment3D) -> Real {
    let u = reference.direction();
    let r1 = (reference.end - reference.start).dot(&u);
    let c0 = (candidate.start - reference.start).dot(&u);
    let c1 = (candidate.end - reference.start).dot(&u);
    let (r_lo, r_hi) = (r1.min(0.0), r1.max(0.0));
    let (c_lo, c_hi) = (c0.min(c1), c0.max(c1));
    let overlap = (r_hi.min(c_hi) - r_lo.max(c_lo)).max(0.0);
    let shorter = (r_hi - r_lo).min(c_hi - c_lo);
    if shorter <= 0.0 {
        0.0
    } else {
        overlap / shorter
    }
}

/// Segments detected in one plane, with that plane's scale.
#[derive(Debug, Clone)]
pub struct PlaneLines {
    pub segments: Vec<LineSegment3D>,
    pub s_k: Real,
}

/// Direction canonicalized to the upper hemisphere, for latitude binning.
fn canonical_direction(seg: &LineSegment3D) -> Vec3 {
    let d = seg.direction();
    if d.z < 0.0 || (d.z == 0.0 && (d.x < 0.0 || (d.x == 0.0 && d.y < 0.0))) {
        -d
    } else {
        d
    }
}

fn latitude_bin(seg: &LineSegment3D, bin: Real) -> usize {
    let lat = canonical_direction(seg).z.clamp(-1.0, 1.0).asin();
    // latitude of a canonical direction is in [0, π/2]
    ((lat / bin) as usize).min((std::f64::consts::FRAC_PI_2 / bin) as usize)
}

fn mergeable(
    a: &LineSegment3D,
    b: &LineSegment3D,
    params: &FusionParams,
    s_k: Real,
    d_mag: Real,
) -> bool {
    if latitude_bin(a, params.latitude_bin) != latitude_bin(b, params.latitude_bin) {
        return false;
    }
    // origin offset of each support line; collinear fragments agree exactly,
    // whatever their endpoint order, so gaps do not block the merge
    let da = a.start.cross(&a.direction()).norm();
    let db = b.start.cross(&b.direction()).norm();
    if (da - db).abs() / d_mag >= params.relative_offset_max {
        return false;
    }
    let gate = params.perp_factor * s_k;
    let Ok((foot1, _)) = project_point_onto_line(&b.start, &a.start, &a.end) else {
        return false;
    };
    let Ok((foot2, _)) = project_point_onto_line(&b.end, &a.start, &a.end) else {
        return false;
    };
    (b.start - foot1).norm() < gate && (b.end - foot2).norm() < gate
}

fn merge_pair(a: &LineSegment3D, b: &LineSegment3D) -> LineSegment3D {
    // new endpoints: the two farthest points among the four
    let pts = [a.start, a.end, b.start, b.end];
    let mut best = (0, 1);
    let mut best_d = -1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            let d = (pts[i] - pts[j]).norm_squared();
            if d > best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    LineSegment3D::new(pts[best.0], pts[best.1])
        .expect("farthest pair of distinct segments cannot coincide")
        .canonical()
}

/// Fuse fragmented collinear segments within one plane. Starting from the
/// longest segment, others in the same latitude bin merge into it when the
/// origin-offset and perpendicular gates pass; repeated to a fixpoint, so the
/// operation is idempotent.
pub fn fuse_lines_in_plane(
    segments: &[LineSegment3D],
    params: &FusionParams,
    s_k: Real,
) -> Vec<LineSegment3D> {
    let mut pool: Vec<LineSegment3D> = segments.iter().map(|s| s.canonical()).collect();
    if pool.is_empty() {
        return pool;
    }
    let d_mag = pool[0].start.norm().max(1e-6);
    loop {
        sort_segments(&mut pool);
        let mut merged_any = false;
        let mut out: Vec<LineSegment3D> = Vec::with_capacity(pool.len());
        'outer: for seg in pool.drain(..) {
            for kept in out.iter_mut() {
                if mergeable(kept, &seg, params, s_k, d_mag) {
                    *kept = merge_pair(kept, &seg);
                    merged_any = true;
                    continue 'outer;
                }
            }
            out.push(seg);
        }
        pool = out;
        if !merged_any {
            break;
        }
    }
    sort_segments(&mut pool);
    pool
}

/// Descending length, endpoint order as the deterministic tie-break.
fn sort_segments(segments: &mut [LineSegment3D]) {
    segments.sort_by(|a, b| {
        b.length().total_cmp(&a.length()).then_with(|| {
            let ka = [a.start.x, a.start.y, a.start.z, a.end.x, a.end.y, a.end.z];
            let kb = [b.start.x, b.start.y, b.start.z, b.end.x, b.end.y, b.end.z];
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
}

/// The four clustered compartment edges. `l_max` and `l2` bound one face;
/// `l4` sits on the same side as `l_max` in the other group.
#[derive(Debug, Clone)]
pub struct ClusteredEdges {
    pub l_max: LineSegment3D,
    pub l2: LineSegment3D,
    pub l3: LineSegment3D,
    pub l4: LineSegment3D,
}

impl ClusteredEdges {
    pub fn as_array(&self) -> [&LineSegment3D; 4] {
        [&self.l_max, &self.l2, &self.l3, &self.l4]
    }
}

/// Absolute cosine similarity between segment directions.
pub fn direction_similarity(a: &LineSegment3D, b: &LineSegment3D) -> Real {
    a.direction().dot(&b.direction()).abs()
}

/// Select the four lengthwise compartment edges.
///
/// The longest segment is the reference. Candidates must be directionally
/// within the cosine gate and within the distance gate of the reference;
/// near-coincident duplicates are suppressed. The three longest survivors
/// join the reference: the nearest becomes `l2` (same face), and the sign of
/// the projection-vector comparison orients the remaining pair so `l4` sits
/// on the reference's side.
pub fn cluster_edges(
    segments: &[LineSegment3D],
    params: &ClusterParams,
) -> Result<ClusteredEdges, ContourError> {
    if segments.is_empty() {
        return Err(ContourError::NoSegments);
    }
    let mut pool: Vec<LineSegment3D> = segments.to_vec();
    sort_segments(&mut pool);
    let l_max = pool[0];

    let mut kept: Vec<LineSegment3D> = Vec::new();
    for cand in pool.iter().skip(1) {
        if 1.0 - direction_similarity(cand, &l_max) > params.cos_tolerance {
            continue;
        }
        let d_ref = line_distance(cand, &l_max);
        if d_ref > params.max_distance || d_ref < params.min_separation {
            continue;
        }
        if axial_overlap(&l_max, cand) < params.min_overlap {
            continue;
        }
        if kept
            .iter()
            .all(|k| line_distance(cand, k) >= params.min_separation)
        {
            kept.push(*cand);
        }
        if kept.len() == 3 {
            break;
        }
    }
    if kept.len() < 3 {
        return Err(ContourError::InsufficientEdges { found: kept.len() });
    }

    // nearest to the reference pairs with it
    let mut by_dist = kept.clone();
    by_dist.sort_by(|a, b| {
        line_distance(a, &l_max)
            .total_cmp(&line_distance(b, &l_max))
            .then_with(|| a.length().total_cmp(&b.length()).reverse())
    });
    let l2 = by_dist[0];
    let (mut l3, mut l4) = (by_dist[1], by_dist[2]);

    // orient the second group: the projection vector from l2 toward the
    // reference must agree with the vector from l3 toward l4
    let proj_vec = |from: &LineSegment3D, onto: &LineSegment3D| -> Vec3 {
        match project_point_onto_line(&from.start, &onto.start, &onto.end) {
            Ok((foot, _)) => foot - from.start,
            Err(_) => Vec3::zeros(),
        }
    };
    let v_ref = proj_vec(&l2, &l_max);
    let v_other = proj_vec(&l3, &l4);
    let s = v_ref.dot(&v_other);
    if s <= 0.0 {
        std::mem::swap(&mut l3, &mut l4);
    }

    Ok(ClusteredEdges { l_max, l2, l3, l4 })
}

/// Diagnostics of the completion stage.
#[derive(Debug, Clone, Default)]
pub struct CompletionDiagnostics {
    /// per edge (reference, l2, l3, l4), per end: corner extended beyond the
    /// detected segment
    pub extended: [[bool; 2]; 4],
}

impl CompletionDiagnostics {
    pub fn extended_count(&self) -> usize {
        self.extended.iter().flatten().filter(|&&e| e).count()
    }
}

/// Eight key points plus derived quantities.
#[derive(Debug, Clone)]
pub struct CompartmentResult {
    /// canonical order: bottom face counterclockwise (seen from above)
    /// starting at the corner nearest the world origin, then the top face in
    /// matching order
    pub key_points: [Vec3; 8],
    pub edges: ClusteredEdges,
    /// the twelve hexahedron edges: bottom ring, top ring, verticals (the
    /// rings carry the four lengthwise edges)
    pub contour_edges: Vec<LineSegment3D>,
    /// loadable dimensions: length, width, height (edge-length means)
    pub dims: [Real; 3],
    pub diagnostics: CompletionDiagnostics,
}

/// Opposite faces of the completed contour must be parallel within this.
const FACE_PARALLEL_TOL: Real = 10.0 * std::f64::consts::PI / 180.0;

/// Close the contour from the four clustered edges and emit the eight key
/// points.
///
/// Each edge may be truncated at either end. Growing from the reference
/// endpoints toward the partner lines and replacing interior projections by
/// the partner's farther endpoint, repeated until no edge changes, makes
/// every edge span the union of the detected extents; the corners are the
/// support lines evaluated at the two shared extents.
pub fn complete_contour(edges: &ClusteredEdges) -> Result<CompartmentResult, ContourError> {
    let lines = edges.as_array();
    let u = lines[0].direction();
    let origin = lines[0].start;

    // shared axial extent: the union of the detected spans
    let mut t_front = Real::INFINITY;
    let mut t_rear = Real::NEG_INFINITY;
    for line in lines {
        let ta = (line.start - origin).dot(&u);
        let tb = (line.end - origin).dot(&u);
        t_front = t_front.min(ta.min(tb));
        t_rear = t_rear.max(ta.max(tb));
    }
    if t_rear - t_front < 1e-9 {
        return Err(ContourError::DegenerateContour {
            detail: "edges have no extent along the reference direction".into(),
        });
    }

    // corner of edge e at axial position t: its support line evaluated where
    // the reference-direction coordinate equals t
    let mut corners = [[Vec3::zeros(); 2]; 4];
    let mut diagnostics = CompletionDiagnostics::default();
    for (e, line) in lines.iter().enumerate() {
        let d = line.direction();
        let along = d.dot(&u);
        if along.abs() < 0.5 {
            return Err(ContourError::DegenerateContour {
                detail: format!("edge {e} is not aligned with the reference"),
            });
        }
        for (end, t) in [(0, t_front), (1, t_rear)] {
            let s = (t - (line.start - origin).dot(&u)) / along;
            corners[e][end] = line.start + d * s;
            let detected = (corners[e][end] - line.start)
                .norm()
                .min((corners[e][end] - line.end).norm());
            diagnostics.extended[e][end] = detected > 1e-6;
        }
    }

    validate_hexahedron(&corners)?;
    let (key_points, contour_edges, dims) = canonicalize(&corners)?;

    Ok(CompartmentResult {
        key_points,
        edges: edges.clone(),
        contour_edges,
        dims,
        diagnostics,
    })
}

fn quad_normal(q: [Vec3; 4]) -> Vec3 {
    // robust quad normal via the diagonals
    (q[2] - q[0]).cross(&(q[3] - q[1])).normalize()
}

/// The four side faces of the prism: (0,1), (2,3) opposite, (0,3), (1,2)
/// opposite. Face (i,j) has corners iA, jA, jB, iB.
fn face(corners: &[[Vec3; 2]; 4], i: usize, j: usize) -> [Vec3; 4] {
    [corners[i][0], corners[j][0], corners[j][1], corners[i][1]]
}

fn validate_hexahedron(corners: &[[Vec3; 2]; 4]) -> Result<(), ContourError> {
    // all lengthwise edges non-degenerate
    for (i, c) in corners.iter().enumerate() {
        if (c[1] - c[0]).norm() < 1e-9 {
            return Err(ContourError::DegenerateContour {
                detail: format!("lengthwise edge {i} has zero extent"),
            });
        }
    }
    let opposite_pairs = [((0, 1), (3, 2)), ((0, 3), (1, 2))];
    for ((a1, a2), (b1, b2)) in opposite_pairs {
        let na = quad_normal(face(corners, a1, a2));
        let nb = quad_normal(face(corners, b1, b2));
        if !na.iter().all(|v| v.is_finite()) || !nb.iter().all(|v| v.is_finite()) {
            return Err(ContourError::DegenerateContour {
                detail: "side face collapsed".into(),
            });
        }
        let angle = na.dot(&nb).abs().clamp(0.0, 1.0).acos();
        if angle > FACE_PARALLEL_TOL {
            return Err(ContourError::DegenerateContour {
                detail: format!(
                    "opposite side faces are {:.1}° from parallel (limit {:.0}°)",
                    angle.to_degrees(),
                    FACE_PARALLEL_TOL.to_degrees()
                ),
            });
        }
    }
    // front and rear faces
    let front = [corners[0][0], corners[1][0], corners[2][0], corners[3][0]];
    let rear = [corners[0][1], corners[1][1], corners[2][1], corners[3][1]];
    let angle = quad_normal(front)
        .dot(&quad_normal(rear))
        .abs()
        .clamp(0.0, 1.0)
        .acos();
    if angle > FACE_PARALLEL_TOL {
        return Err(ContourError::DegenerateContour {
            detail: format!(
                "front and rear faces are {:.1}° from parallel (limit {:.0}°)",
                angle.to_degrees(),
                FACE_PARALLEL_TOL.to_degrees()
            ),
        });
    }
    Ok(())
}

type CanonicalContour = ([Vec3; 8], Vec<LineSegment3D>, [Real; 3]);

/// Canonical key-point ordering and derived edges/dimensions.
fn canonicalize(corners: &[[Vec3; 2]; 4]) -> Result<CanonicalContour, ContourError> {
    // decide which opposite face pair is horizontal (top/bottom): the pair
    // whose normals align best with vertical
    let pair_a = [(0usize, 1usize), (3, 2)]; // faces (l_max,l2) and (l4,l3)
    let pair_b = [(0usize, 3usize), (1, 2)]; // faces (l_max,l4) and (l2,l3)
    let vertical_score = |pair: &[(usize, usize); 2]| -> Real {
        pair.iter()
            .map(|&(i, j)| quad_normal(face(corners, i, j)).z.abs())
            .sum()
    };
    let horizontal_pair = if vertical_score(&pair_a) >= vertical_score(&pair_b) {
        pair_a
    } else {
        pair_b
    };
    let mean_z = |&(i, j): &(usize, usize)| -> Real {
        (corners[i][0].z + corners[i][1].z + corners[j][0].z + corners[j][1].z) / 4.0
    };
    let (bottom_face, _top_face) = if mean_z(&horizontal_pair[0]) <= mean_z(&horizontal_pair[1]) {
        (horizontal_pair[0], horizontal_pair[1])
    } else {
        (horizontal_pair[1], horizontal_pair[0])
    };

    // vertical partner of each edge: the other member of its vertical face
    let partner = if horizontal_pair == pair_a {
        // vertical faces are (0,3) and (1,2)
        [3usize, 2, 1, 0]
    } else {
        // vertical faces are (0,1) and (2,3)
        [1usize, 0, 3, 2]
    };

    // bottom ring in face order: iA, jA, jB, iB
    let (bi, bj) = bottom_face;
    let mut bottom: Vec<(usize, usize)> = vec![(bi, 0), (bj, 0), (bj, 1), (bi, 1)];
    // counterclockwise about +z
    let pos = |&(e, end): &(usize, usize)| corners[e][end];
    let centroid: Vec3 = bottom.iter().map(pos).sum::<Vec3>() / 4.0;
    let signed_area: Real = (0..4)
        .map(|i| {
            let p = pos(&bottom[i]) - centroid;
            let q = pos(&bottom[(i + 1) % 4]) - centroid;
            p.x * q.y - p.y * q.x
        })
        .sum();
    if signed_area < 0.0 {
        bottom.reverse();
    }
    // start at the corner nearest the origin
    let start = (0..4)
        .min_by(|&i, &j| pos(&bottom[i]).norm().total_cmp(&pos(&bottom[j]).norm()))
        .unwrap();
    bottom.rotate_left(start);

    let mut key_points = [Vec3::zeros(); 8];
    for (i, &(e, end)) in bottom.iter().enumerate() {
        key_points[i] = corners[e][end];
        key_points[i + 4] = corners[partner[e]][end];
    }

    // twelve edges: bottom ring, top ring, verticals (the rings include the
    // four lengthwise edges)
    let mut contour_edges = Vec::with_capacity(12);
    for i in 0..4 {
        let seg = LineSegment3D::new(key_points[i], key_points[(i + 1) % 4]);
        let top = LineSegment3D::new(key_points[4 + i], key_points[4 + (i + 1) % 4]);
        let vert = LineSegment3D::new(key_points[i], key_points[4 + i]);
        for s in [seg, top, vert] {
            contour_edges.push(s.map_err(|_| ContourError::DegenerateContour {
                detail: "zero-length contour edge".into(),
            })?);
        }
    }

    // dimensions: lengthwise mean, ring-cross mean, vertical mean. The
    // bottom ring alternates lengthwise and cross sides; the cross pair is
    // whichever ring direction differs more from the lengthwise mean.
    let length = corners.iter().map(|c| (c[1] - c[0]).norm()).sum::<Real>() / 4.0;
    let height = (0..4)
        .map(|i| (key_points[4 + i] - key_points[i]).norm())
        .sum::<Real>()
        / 4.0;
    let ring_a =
        ((key_points[1] - key_points[0]).norm() + (key_points[3] - key_points[2]).norm()) / 2.0;
    let ring_b =
        ((key_points[2] - key_points[1]).norm() + (key_points[0] - key_points[3]).norm()) / 2.0;
    let width = if (ring_a - length).abs() > (ring_b - length).abs() {
        ring_a
    } else {
        ring_b
    };

    Ok((key_points, contour_edges, [length, width, height]))
}

/// Per-plane fusion followed by one cross-plane pass, returning the fused
/// segment soup and the median plane scale.
///
/// The cross-plane pass exists because adjacent planes detect the same
/// physical crease (floor boundary and fence bottom), leaving near-coincident
/// duplicates; a quarter of the in-plane perpendicular gate absorbs those
/// without gluing distinct parallel structure edges together.
pub fn fuse_stage(
    per_plane: &[PlaneLines],
    fusion: &FusionParams,
) -> Result<(Vec<LineSegment3D>, Real), ContourError> {
    if per_plane.iter().all(|p| p.segments.is_empty()) {
        return Err(ContourError::NoSegments);
    }
    let mut fused: Vec<LineSegment3D> = Vec::new();
    let mut scales: Vec<Real> = Vec::new();
    for plane in per_plane {
        if plane.segments.is_empty() {
            continue;
        }
        fused.extend(fuse_lines_in_plane(&plane.segments, fusion, plane.s_k));
        scales.push(plane.s_k);
    }
    scales.sort_by(Real::total_cmp);
    let global_scale = scales[scales.len() / 2];
    let dedupe = FusionParams {
        perp_factor: fusion.perp_factor * 0.25,
        ..*fusion
    };
    Ok((
        fuse_lines_in_plane(&fused, &dedupe, global_scale),
        global_scale,
    ))
}

/// Stretch each clustered edge to the axial extent of the cloud points
/// supporting its line. Boundary extraction underestimates edge spans where
/// grazing-angle sampling thins out, while the surfaces along the edge still
/// carry points; robust quantiles of the in-tube axial positions recover the
/// true span. Extents only grow, never shrink.
pub fn refine_edge_extents(
    edges: &ClusteredEdges,
    positions: &[Vec3],
    radius: Real,
) -> ClusteredEdges {
    let refine = |seg: &LineSegment3D| -> LineSegment3D {
        let origin = seg.start;
        let dir = seg.direction();
        let mut ts: Vec<Real> = positions
            .iter()
            .filter_map(|p| {
                let d = p - origin;
                let t = d.dot(&dir);
                let off = (d - dir * t).norm();
                (off <= radius).then_some(t)
            })
            .collect();
        if ts.len() < 20 {
            return *seg;
        }
        ts.sort_by(Real::total_cmp);
        let clip = (ts.len() as Real * 0.003) as usize;
        let lo = ts[clip].min(0.0);
        let hi = ts[ts.len() - 1 - clip].max(seg.length());
        LineSegment3D::new(origin + dir * lo, origin + dir * hi)
            .map(|s| s.canonical())
            .unwrap_or(*seg)
    };
    ClusteredEdges {
        l_max: refine(&edges.l_max),
        l2: refine(&edges.l2),
        l3: refine(&edges.l3),
        l4: refine(&edges.l4),
    }
}

/// Full key-point localization: per-plane fusion, cross-plane dedupe,
/// clustering, and completion.
pub fn locate_keypoints(
    per_plane: &[PlaneLines],
    fusion: &FusionParams,
    cluster: &ClusterParams,
) -> Result<CompartmentResult, ContourError> {
    let (fused, _) = fuse_stage(per_plane, fusion)?;
    let edges = cluster_edges(&fused, cluster)?;
    complete_contour(&edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seg(a: [Real; 3], b: [Real; 3]) -> LineSegment3D {
        LineSegment3D::new(Vec3::new(a[0], a[1], a[2]), Vec3::new(b[0], b[1], b[2])).unwrap()
    }

    /// The four lengthwise edges of an axis-aligned box compartment.
    fn box_edges(l: Real, w: Real, h: Real, origin: Vec3) -> Vec<LineSegment3D> {
        let o = origin;
        vec![
            seg([o.x, o.y, o.z + h], [o.x + l, o.y, o.z + h]),
            seg([o.x, o.y, o.z], [o.x + l, o.y, o.z]),
            seg([o.x, o.y + w, o.z], [o.x + l, o.y + w, o.z]),
            seg([o.x, o.y + w, o.z + h], [o.x + l, o.y + w, o.z + h]),
        ]
    }

    fn analytic_corners(l: Real, w: Real, h: Real, origin: Vec3) -> Vec<Vec3> {
        let mut out = Vec::new();
        for (dx, dy, dz) in [
            (0.0, 0.0, 0.0),
            (l, 0.0, 0.0),
            (l, w, 0.0),
            (0.0, w, 0.0),
            (0.0, 0.0, h),
            (l, 0.0, h),
            (l, w, h),
            (0.0, w, h),
        ] {
            out.push(origin + Vec3::new(dx, dy, dz));
        }
        out
    }

    fn assert_same_corner_set(got: &[Vec3; 8], want: &[Vec3], tol: Real) {
        for w in want {
            let nearest = got
                .iter()
                .map(|g| (g - w).norm())
                .fold(Real::INFINITY, Real::min);
            assert!(nearest < tol, "corner {w:?} unmatched (nearest {nearest})");
        }
    }

    #[test]
    fn collinear_segments_fuse_across_gap() {
        let a = seg([0.0, 1.0, 0.5], [1.5, 1.0, 0.5]);
        let b = seg([1.7, 1.0, 0.5], [4.0, 1.0, 0.5]);
        let fused = fuse_lines_in_plane(&[a, b], &FusionParams::default(), 0.05);
        assert_eq!(fused.len(), 1);
        assert_relative_eq!(fused[0].length(), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn distant_parallel_segments_stay_apart() {
        let s_k = 0.05;
        let a = seg([0.0, 1.0, 0.5], [4.0, 1.0, 0.5]);
        // parallel, offset by 10 · s_k: perpendicular gate rejects
        let b = seg([0.0, 1.5, 0.5], [4.0, 1.5, 0.5]);
        let fused = fuse_lines_in_plane(&[a, b], &FusionParams::default(), s_k);
        assert_eq!(fused.len(), 2);
    }

    #[test]
    fn fragmented_side_recovers_full_extent() {
        let jitter = 0.01;
        let pieces = vec![
            seg([0.0, 2.0, 1.2], [1.2, 2.0, 1.2]),
            seg([1.35, 2.0 + jitter, 1.2], [2.6, 2.0 + jitter, 1.2]),
            seg([2.75, 2.0 - jitter, 1.2], [4.0, 2.0, 1.2]),
        ];
        let fused = fuse_lines_in_plane(&pieces, &FusionParams::default(), 0.03);
        assert_eq!(fused.len(), 1);
        assert!((fused[0].length() - 4.0).abs() < 0.04);
    }

    #[test]
    fn fusion_is_idempotent() {
        let soup = vec![
            seg([0.0, 1.0, 0.0], [1.0, 1.0, 0.0]),
            seg([1.1, 1.0, 0.0], [2.3, 1.0, 0.0]),
            seg([0.0, 1.0, 1.0], [2.0, 1.0, 1.0]),
            seg([0.2, 0.1, 0.0], [0.2, 0.1, 1.4]),
        ];
        let once = fuse_lines_in_plane(&soup, &FusionParams::default(), 0.05);
        let twice = fuse_lines_in_plane(&once, &FusionParams::default(), 0.05);
        assert_eq!(once, twice);
    }

    #[test]
    fn fusion_never_shortens_coverage() {
        use rand::{Rng, SeedableRng};
        let params = FusionParams::default();
        for soup_seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(soup_seed);
            let n = rng.random_range(2..10);
            let soup: Vec<LineSegment3D> = (0..n)
                .map(|_| {
                    let a = Vec3::new(
                        rng.random_range(-4.0..4.0),
                        rng.random_range(-4.0..4.0),
                        rng.random_range(-1.0..1.0),
                    );
                    let d = Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    let d = if d.norm() < 1e-3 { Vec3::x() } else { d };
                    LineSegment3D::new(a, a + d * rng.random_range(0.2..3.0)).unwrap()
                })
                .collect();
            let fused = fuse_lines_in_plane(&soup, &params, 0.05);
            // every input endpoint projects inside some fused segment's span
            for input in &soup {
                for endpoint in [input.start, input.end] {
                    let covered = fused.iter().any(|f| {
                        let d = f.end - f.start;
                        let t = (endpoint - f.start).dot(&d) / d.norm_squared();
                        (-1e-6..=1.0 + 1e-6).contains(&t)
                    });
                    assert!(covered, "soup {soup_seed}: endpoint {endpoint:?} uncovered");
                }
            }
        }
    }

    #[test]
    fn cluster_identifies_box_edges() {
        let mut edges = box_edges(8.0, 2.4, 1.2, Vec3::new(1.0, 0.8, 1.0));
        // make the top-left rail the longest
        edges[0] = seg([0.9, 0.8, 2.2], [9.1, 0.8, 2.2]);
        // a long diagonal distractor, well within distance but off-direction
        edges.push(seg([1.0, 0.8, 1.0], [8.0, 3.0, 2.0]));
        // short clutter parallel to the rails
        edges.push(seg([3.0, 1.5, 1.3], [4.2, 1.5, 1.3]));
        let clustered = cluster_edges(&edges, &ClusterParams::default()).unwrap();
        assert_relative_eq!(clustered.l_max.length(), 8.2, epsilon = 1e-9);
        // l2 shares the reference's face: the bottom-left edge
        assert!(clustered.l2.midpoint().y < 1.0);
        // the second group sits on the right side
        assert!(clustered.l3.midpoint().y > 3.0);
        assert!(clustered.l4.midpoint().y > 3.0);
        // l4 is at the same height position as the reference (top)
        assert!(clustered.l4.midpoint().z > clustered.l3.midpoint().z);
    }

    #[test]
    fn parallel_segments_have_unit_similarity() {
        let a = seg([0.0, 0.0, 0.0], [5.0, 0.0, 0.0]);
        let b = seg([9.0, 2.0, 1.0], [1.0, 2.0, 1.0]);
        assert_relative_eq!(direction_similarity(&a, &b), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_candidates_is_an_error() {
        let edges = vec![
            seg([0.0, 0.0, 0.0], [5.0, 0.0, 0.0]),
            seg([0.0, 2.0, 0.0], [5.0, 2.0, 0.0]),
        ];
        assert!(matches!(
            cluster_edges(&edges, &ClusterParams::default()),
            Err(ContourError::InsufficientEdges { found: 1 })
        ));
    }

    #[test]
    fn cluster_is_input_order_invariant() {
        let mut edges = box_edges(8.0, 2.4, 1.2, Vec3::new(1.0, 0.8, 1.0));
        edges.push(seg([2.0, 1.4, 1.25], [3.1, 1.4, 1.25]));
        let a = cluster_edges(&edges, &ClusterParams::default()).unwrap();
        edges.reverse();
        let b = cluster_edges(&edges, &ClusterParams::default()).unwrap();
        assert_eq!(a.l_max, b.l_max);
        assert_eq!(a.l2, b.l2);
        assert_eq!(a.l3, b.l3);
        assert_eq!(a.l4, b.l4);
    }

    #[test]
    fn ideal_box_completes_to_exact_corners() {
        let origin = Vec3::new(1.0, 0.8, 1.0);
        let (l, w, h) = (12.0, 2.4, 2.7);
        let edges = box_edges(l, w, h, origin);
        let clustered = cluster_edges(&edges, &ClusterParams::default()).unwrap();
        let result = complete_contour(&clustered).unwrap();
        assert_same_corner_set(&result.key_points, &analytic_corners(l, w, h, origin), 1e-6);
        assert_relative_eq!(result.dims[0], l, epsilon = 1e-9);
        assert_relative_eq!(result.dims[1], w, epsilon = 1e-9);
        assert_relative_eq!(result.dims[2], h, epsilon = 1e-9);
        assert_eq!(result.diagnostics.extended_count(), 0);
        assert_eq!(result.contour_edges.len(), 12);
        // canonical order: bottom ring first, counterclockwise, origin-nearest first
        assert!(result.key_points[..4]
            .iter()
            .all(|p| (p.z - origin.z).abs() < 1e-9));
        assert_relative_eq!(result.key_points[0], origin, epsilon = 1e-9);
    }

    #[test]
    fn truncated_rear_edge_is_recovered() {
        let origin = Vec3::new(0.5, 1.0, 1.1);
        let (l, w, h) = (10.0, 2.4, 1.2);
        let mut edges = box_edges(l, w, h, origin);
        // bottom-right edge loses 30% at the rear
        edges[2] = seg(
            [origin.x, origin.y + w, origin.z],
            [origin.x + 0.7 * l, origin.y + w, origin.z],
        );
        let clustered = cluster_edges(&edges, &ClusterParams::default()).unwrap();
        let result = complete_contour(&clustered).unwrap();
        let mean_dim = (l + w + h) / 3.0;
        assert_same_corner_set(
            &result.key_points,
            &analytic_corners(l, w, h, origin),
            0.02 * mean_dim,
        );
        assert!(result.diagnostics.extended_count() >= 1);
    }

    #[test]
    fn locate_keypoints_runs_the_full_chain() {
        let origin = Vec3::new(0.5, 1.0, 1.1);
        let (l, w, h) = (9.0, 2.4, 1.2);
        let edges = box_edges(l, w, h, origin);
        // fragment one edge across two "planes" and add floor boundary noise
        let per_plane = vec![
            PlaneLines {
                segments: vec![
                    edges[0],
                    seg(
                        [origin.x, origin.y, origin.z],
                        [origin.x + 4.0, origin.y, origin.z],
                    ),
                    seg(
                        [origin.x + 4.15, origin.y, origin.z],
                        [origin.x + l, origin.y, origin.z],
                    ),
                ],
                s_k: 0.05,
            },
            PlaneLines {
                segments: vec![edges[2], edges[3]],
                s_k: 0.05,
            },
        ];
        let result = locate_keypoints(
            &per_plane,
            &FusionParams::default(),
            &ClusterParams::default(),
        )
        .unwrap();
        assert_same_corner_set(&result.key_points, &analytic_corners(l, w, h, origin), 1e-6);
    }

    #[test]
    fn rigid_motion_covariance_of_keypoints() {
        use crate::geom::{EulerAngles, RigidTransform};
        let origin = Vec3::new(0.5, 1.0, 1.1);
        let (l, w, h) = (7.0, 2.2, 1.0);
        let edges = box_edges(l, w, h, origin);
        let clustered = cluster_edges(&edges, &ClusterParams::default()).unwrap();
        let base = complete_contour(&clustered).unwrap();

        let motion = RigidTransform::new(
            crate::geom::euler_to_rotation(EulerAngles::new(0.0, 0.0, 0.6)),
            Vec3::new(2.0, -1.0, 0.4),
        )
        .unwrap();
        let moved: Vec<LineSegment3D> = edges
            .iter()
            .map(|s| LineSegment3D::new(motion.apply(&s.start), motion.apply(&s.end)).unwrap())
            .collect();
        let clustered_m = cluster_edges(&moved, &ClusterParams::default()).unwrap();
        let result_m = complete_contour(&clustered_m).unwrap();

        // the key-point set transforms with the motion
        for p in &base.key_points {
            let q = motion.apply(p);
            let nearest = result_m
                .key_points
                .iter()
                .map(|g| (g - q).norm())
                .fold(Real::INFINITY, Real::min);
            assert!(nearest < 1e-6, "moved corner unmatched: {nearest}");
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            locate_keypoints(&[], &FusionParams::default(), &ClusterParams::default()),
            Err(ContourError::NoSegments)
        ));
    }
}
