//! Compact kd-tree for fixed 3-D point sets, plus the k-nearest-neighbor
//! graph used by normal estimation and region growing.

use rayon::prelude::*;

use crate::geom::{Real, Vec3};

/// Static kd-tree over a point set. Median-split, axis by largest extent.
pub struct KdTree3 {
    points: Vec<[Real; 3]>,
    /// permutation of original indices, partitioned recursively
    order: Vec<u32>,
    /// split axis of each internal node, stored at the node's median slot
    axis_at_mid: Vec<u8>,
}

const LEAF_SIZE: usize = 16;

impl KdTree3 {
    pub fn build(points: &[Vec3]) -> Self {
        let pts: Vec<[Real; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        let mut axis_at_mid = vec![0u8; pts.len()];
        if !pts.is_empty() {
            build_range(&pts, &mut order, &mut axis_at_mid);
        }
        Self {
            points: pts,
            order,
            axis_at_mid,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices and squared distances of the `k` nearest neighbors of `query`,
    /// ascending, ties broken by index. `exclude` removes one index (the
    /// query point itself when querying the tree's own points).
    pub fn nearest_k(&self, query: &Vec3, k: usize, exclude: Option<u32>) -> Vec<(u32, Real)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let q = [query.x, query.y, query.z];
        let mut heap = BoundedHeap::new(k);
        self.search(0, self.order.len(), &q, exclude, &mut heap);
        heap.into_sorted()
    }

    fn search(
        &self,
        lo: usize,
        hi: usize,
        q: &[Real; 3],
        exclude: Option<u32>,
        heap: &mut BoundedHeap,
    ) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                if Some(i) == exclude {
                    continue;
                }
                let p = &self.points[i as usize];
                let d2 = sq(p[0] - q[0]) + sq(p[1] - q[1]) + sq(p[2] - q[2]);
                heap.push(i, d2);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let axis = self.axis_at_mid[mid] as usize;
        let median = self.order[mid];
        let mp = &self.points[median as usize];
        if Some(median) != exclude {
            let d2 = sq(mp[0] - q[0]) + sq(mp[1] - q[1]) + sq(mp[2] - q[2]);
            heap.push(median, d2);
        }
        let split = mp[axis];
        let delta = q[axis] - split;
        let (near, far) = if delta <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, q, exclude, heap);
        if !heap.full() || delta * delta <= heap.worst() {
            self.search(far.0, far.1, q, exclude, heap);
        }
    }
}

// `axes` runs parallel to `order`: the split axis of a node whose range is
// [lo, hi) in the order array is stored at slot lo + (hi-lo)/2, which search
// recomputes without any explicit node structure.
fn build_range(pts: &[[Real; 3]], order: &mut [u32], axes: &mut [u8]) {
    if order.len() <= LEAF_SIZE {
        return;
    }
    let axis = widest_axis(pts, order);
    let mid = order.len() / 2;
    axes[mid] = axis as u8;
    order.select_nth_unstable_by(mid, |&a, &b| {
        pts[a as usize][axis]
            .total_cmp(&pts[b as usize][axis])
            .then(a.cmp(&b))
    });
    // the median element stays at its slot; children get the strict halves
    let (lo, rest) = order.split_at_mut(mid);
    let hi = &mut rest[1..];
    let (axes_lo, axes_rest) = axes.split_at_mut(mid);
    let axes_hi = &mut axes_rest[1..];
    if lo.len() > 4096 {
        rayon::join(
            || build_range(pts, lo, axes_lo),
            || build_range(pts, hi, axes_hi),
        );
    } else {
        build_range(pts, lo, axes_lo);
        build_range(pts, hi, axes_hi);
    }
}

fn widest_axis(pts: &[[Real; 3]], order: &[u32]) -> usize {
    let mut min = [Real::INFINITY; 3];
    let mut max = [Real::NEG_INFINITY; 3];
    // sampling the range is enough to pick a split axis
    let step = (order.len() / 64).max(1);
    for &i in order.iter().step_by(step) {
        let p = &pts[i as usize];
        for a in 0..3 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    let mut axis = 0;
    let mut best = max[0] - min[0];
    for a in 1..3 {
        let ext = max[a] - min[a];
        if ext > best {
            best = ext;
            axis = a;
        }
    }
    axis
}

fn sq(x: Real) -> Real {
    x * x
}

/// Fixed-capacity max-heap keeping the k smallest (distance, index) pairs.
struct BoundedHeap {
    k: usize,
    items: Vec<(Real, u32)>,
}

impl BoundedHeap {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k),
        }
    }

    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> Real {
        self.items.first().map_or(Real::INFINITY, |v| v.0)
    }

    fn push(&mut self, idx: u32, d2: Real) {
        if self.items.len() < self.k {
            self.items.push((d2, idx));
            self.sift_up(self.items.len() - 1);
        } else if (d2, idx) < (self.items[0].0, self.items[0].1) {
            self.items[0] = (d2, idx);
            self.sift_down(0);
        }
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.items[i] > self.items[parent] {
                self.items.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut largest = i;
            if l < self.items.len() && self.items[l] > self.items[largest] {
                largest = l;
            }
            if r < self.items.len() && self.items[r] > self.items[largest] {
                largest = r;
            }
            if largest == i {
                return;
            }
            self.items.swap(i, largest);
            i = largest;
        }
    }

    fn into_sorted(self) -> Vec<(u32, Real)> {
        let mut v: Vec<(u32, Real)> = self.items.into_iter().map(|(d, i)| (i, d)).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }
}

/// k-nearest-neighbor graph over a whole cloud: flat `n × k` neighbor table
/// plus the per-point first and k-th neighbor distances (point scales).
pub struct KnnGraph {
    pub k: usize,
    pub neighbors: Vec<u32>,
    pub nearest_dist: Vec<Real>,
    pub kth_dist: Vec<Real>,
}

impl KnnGraph {
    pub fn build(points: &[Vec3], k: usize) -> Self {
        let tree = KdTree3::build(points);
        let n = points.len();
        let mut neighbors = vec![0u32; n * k];
        let mut nearest_dist = vec![0.0; n];
        let mut kth_dist = vec![0.0; n];
        let chunk = 1024;
        neighbors
            .par_chunks_mut(chunk * k)
            .zip(nearest_dist.par_chunks_mut(chunk))
            .zip(kth_dist.par_chunks_mut(chunk))
            .enumerate()
            .for_each(|(ci, ((nb, nd), kd))| {
                let base = ci * chunk;
                for j in 0..nd.len() {
                    let i = base + j;
                    let found = tree.nearest_k(&points[i], k, Some(i as u32));
                    for (slot, &(idx, _)) in found.iter().enumerate() {
                        nb[j * k + slot] = idx;
                    }
                    // pad short results (tiny clouds) by repeating the last
                    for slot in found.len()..k {
                        nb[j * k + slot] = found.last().map(|v| v.0).unwrap_or(i as u32);
                    }
                    nd[j] = found.first().map(|v| v.1.sqrt()).unwrap_or(0.0);
                    kd[j] = found.last().map(|v| v.1.sqrt()).unwrap_or(0.0);
                }
            });
        Self {
            k,
            neighbors,
            nearest_dist,
            kth_dist,
        }
    }

    pub fn neighbors_of(&self, i: usize) -> &[u32] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }
}
