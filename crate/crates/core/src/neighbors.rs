//! Exact nearest-neighbor search over the rows of a point matrix.
//!
//! A static kd-tree is used above [`BRUTE_FORCE_BELOW`] points, a linear scan
//! below it. Both paths return identical results: neighbors are ordered by
//! `(distance, index)`, so ties resolve toward the smaller row index and
//! queries are deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::ArrayView2;

pub const BRUTE_FORCE_BELOW: usize = 256;
const LEAF_SIZE: usize = 16;
const NO_CHILD: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    /// Max-norm, as used by the KSG estimator.
    Chebyshev,
}

impl Metric {
    /// Distance in the metric's internal (monotone) scale: squared for
    /// Euclidean, plain for Chebyshev.
    #[inline]
    fn reduced(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Metric::Chebyshev => a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())),
        }
    }

    #[inline]
    fn reduce_axis(self, diff: f64) -> f64 {
        match self {
            Metric::Euclidean => diff * diff,
            Metric::Chebyshev => diff.abs(),
        }
    }

    #[inline]
    fn to_distance(self, reduced: f64) -> f64 {
        match self {
            Metric::Euclidean => reduced.sqrt(),
            Metric::Chebyshev => reduced,
        }
    }

    #[inline]
    fn to_reduced(self, distance: f64) -> f64 {
        match self {
            Metric::Euclidean => distance * distance,
            Metric::Chebyshev => distance,
        }
    }
}

/// A neighbor of a query point: row index into the indexed matrix and its
/// distance (in the true metric, not squared).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    reduced: f64,
    index: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.reduced
            .total_cmp(&other.reduced)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    split_dim: usize,
    split_value: f64,
    left: usize,
    right: usize,
}

/// Exact neighbor index over a subset of rows of a matrix.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    metric: Metric,
    /// Row-major copy of the indexed points, in tree order.
    points: Vec<f64>,
    /// Original row index of each point in tree order.
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

impl NeighborIndex {
    /// Index every row of `data`.
    pub fn new(data: ArrayView2<'_, f64>, metric: Metric) -> Self {
        let rows: Vec<usize> = (0..data.nrows()).collect();
        Self::with_rows(data, &rows, metric)
    }

    /// Index only the listed rows of `data`. Returned neighbor indices refer to
    /// rows of `data`, not positions in `rows`.
    pub fn with_rows(data: ArrayView2<'_, f64>, rows: &[usize], metric: Metric) -> Self {
        let dim = data.ncols();
        let mut ids = rows.to_vec();
        let mut index = NeighborIndex {
            dim,
            metric,
            points: Vec::new(),
            ids: Vec::new(),
            nodes: Vec::new(),
        };
        if ids.len() >= BRUTE_FORCE_BELOW && dim > 0 {
            index.build(&data, &mut ids, 0, rows.len());
        }
        index.points = Vec::with_capacity(ids.len() * dim);
        for &r in &ids {
            index.points.extend(data.row(r).iter().copied());
        }
        index.ids = ids;
        index
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn build(&mut self, data: &ArrayView2<'_, f64>, ids: &mut [usize], start: usize, end: usize) -> usize {
        let node_id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            split_dim: 0,
            split_value: 0.0,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        if end - start <= LEAF_SIZE {
            return node_id;
        }
        // split on the axis of largest spread
        let slice = &mut ids[start..end];
        let mut best_dim = 0;
        let mut best_spread = -1.0;
        for d in 0..self.dim {
            let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = data[[r, d]];
                (lo.min(v), hi.max(v))
            });
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if best_spread <= 0.0 {
            // all points coincide
            return node_id;
        }
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            data[[a, best_dim]].total_cmp(&data[[b, best_dim]]).then(a.cmp(&b))
        });
        let split_value = data[[slice[mid], best_dim]];
        let left = self.build(data, ids, start, start + mid);
        let right = self.build(data, ids, start + mid, end);
        let node = &mut self.nodes[node_id];
        node.split_dim = best_dim;
        node.split_value = split_value;
        node.left = left;
        node.right = right;
        node_id
    }

    #[inline]
    fn point(&self, pos: usize) -> &[f64] {
        &self.points[pos * self.dim..(pos + 1) * self.dim]
    }

    /// The `k` nearest indexed rows to `query`, skipping rows for which
    /// `exclude(row)` is true. Sorted by ascending distance, ties by index.
    /// Fewer than `k` neighbors are returned only if fewer are eligible.
    pub fn knn<F>(&self, query: &[f64], k: usize, exclude: F) -> Vec<Neighbor>
    where
        F: Fn(usize) -> bool,
    {
        debug_assert_eq!(query.len(), self.dim);
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        if self.nodes.is_empty() {
            self.scan(0, self.ids.len(), query, k, &exclude, &mut heap);
        } else {
            self.search(0, query, k, &exclude, &mut heap);
        }
        let mut out: Vec<HeapEntry> = heap.into_vec();
        out.sort();
        out.into_iter()
            .map(|e| Neighbor {
                index: e.index,
                distance: self.metric.to_distance(e.reduced),
            })
            .collect()
    }

    fn scan<F>(&self, start: usize, end: usize, query: &[f64], k: usize, exclude: &F, heap: &mut BinaryHeap<HeapEntry>)
    where
        F: Fn(usize) -> bool,
    {
        for pos in start..end {
            let id = self.ids[pos];
            if exclude(id) {
                continue;
            }
            let entry = HeapEntry {
                reduced: self.metric.reduced(query, self.point(pos)),
                index: id,
            };
            if heap.len() < k {
                heap.push(entry);
            } else if entry < *heap.peek().expect("heap is full") {
                heap.pop();
                heap.push(entry);
            }
        }
    }

    fn search<F>(&self, node_id: usize, query: &[f64], k: usize, exclude: &F, heap: &mut BinaryHeap<HeapEntry>)
    where
        F: Fn(usize) -> bool,
    {
        let node = &self.nodes[node_id];
        if node.left == NO_CHILD {
            self.scan(node.start, node.end, query, k, exclude, heap);
            return;
        }
        let diff = query[node.split_dim] - node.split_value;
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, query, k, exclude, heap);
        let plane = self.metric.reduce_axis(diff);
        // visit on equality: a tie with a smaller index may live on the far side
        if heap.len() < k || plane <= heap.peek().expect("heap is non-empty").reduced {
            self.search(far, query, k, exclude, heap);
        }
    }

    /// Number of indexed rows within `radius` of `query` (strictly closer when
    /// `strict`), skipping excluded rows.
    pub fn count_within<F>(&self, query: &[f64], radius: f64, strict: bool, exclude: F) -> usize
    where
        F: Fn(usize) -> bool,
    {
        let limit = self.metric.to_reduced(radius);
        let inside = |d: f64| if strict { d < limit } else { d <= limit };
        if self.nodes.is_empty() {
            return (0..self.ids.len())
                .filter(|&p| !exclude(self.ids[p]) && inside(self.metric.reduced(query, self.point(p))))
                .count();
        }
        let mut count = 0;
        let mut stack = vec![0usize];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id];
            if node.left == NO_CHILD {
                count += (node.start..node.end)
                    .filter(|&p| !exclude(self.ids[p]) && inside(self.metric.reduced(query, self.point(p))))
                    .count();
                continue;
            }
            let diff = query[node.split_dim] - node.split_value;
            let plane = self.metric.reduce_axis(diff);
            let (near, far) = if diff < 0.0 {
                (node.left, node.right)
            } else {
                (node.right, node.left)
            };
            stack.push(near);
            if inside(plane) || plane == limit {
                stack.push(far);
            }
        }
        count
    }
}
