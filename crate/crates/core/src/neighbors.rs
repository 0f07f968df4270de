//! Exact k-nearest-neighbor search under Euclidean distance.
//!
//! Results are ordered by squared distance, then by ascending [`RowId`].
//! The KD-tree only prunes a subtree when its lower bound is strictly worse
//! than the current k-th candidate (with a small relative slack absorbing
//! rounding in the incremental bound), so it returns exactly what an
//! exhaustive scan returns, ties included.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RowId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const LEAF_SIZE: usize = 16;
/// Above this dimension `SearchMode::Auto` scans exhaustively.
const TREE_MAX_DIM: usize = 16;
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    #[default]
    Auto,
    Tree,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Row position in the indexed matrix.
    pub position: usize,
    pub id: RowId,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityScore {
    pub row_id: RowId,
    pub mean_knn_distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Immutable index over the rows of a feature matrix.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Matrix,
    ids: Vec<RowId>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
    use_tree: bool,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    id: RowId,
    position: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Collector {
    k: usize,
    exclude: Option<RowId>,
    heap: BinaryHeap<Candidate>,
}

impl Collector {
    fn new(k: usize, exclude: Option<RowId>) -> Self {
        Collector { k, exclude, heap: BinaryHeap::with_capacity(k + 1) }
    }

    #[inline]
    fn offer(&mut self, c: Candidate) {
        if Some(c.id) == self.exclude {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(top) = self.heap.peek() {
            if c < *top {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    /// Squared distance bound beyond which nothing can enter.
    #[inline]
    fn worst(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |c| c.dist2)
        }
    }

    fn finish(self) -> Vec<Neighbor> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor { position: c.position, id: c.id, distance: c.dist2.sqrt() })
            .collect()
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl NeighborIndex {
    /// Index with row ids `0..n`.
    pub fn build(points: Matrix) -> Result<Self> {
        let ids = (0..points.nrows() as u64).map(RowId).collect();
        Self::build_with_ids(points, ids, SearchMode::Auto)
    }

    pub fn build_with_ids(points: Matrix, ids: Vec<RowId>, mode: SearchMode) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("neighbor index needs at least one row"));
        }
        if ids.len() != points.nrows() {
            return Err(Error::DimensionMismatch { expected: points.nrows(), actual: ids.len() });
        }
        if !points.all_finite() {
            return Err(Error::NonFinite("neighbor index input"));
        }
        let use_tree = match mode {
            SearchMode::Tree => true,
            SearchMode::BruteForce => false,
            SearchMode::Auto => points.ncols() <= TREE_MAX_DIM && points.nrows() > LEAF_SIZE,
        };
        let mut index = NeighborIndex {
            perm: (0..points.nrows()).collect(),
            points,
            ids,
            nodes: Vec::new(),
            use_tree,
        };
        if use_tree {
            let n = index.perm.len();
            index.build_node(0, n);
        }
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let slot = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return slot;
        }
        let points = &self.points;
        let p = points.ncols();
        let mut best = (0, 0.0);
        for d in 0..p {
            let (lo, hi) = self.perm[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = points.get(i, d);
                (lo.min(v), hi.max(v))
            });
            if hi - lo > best.1 {
                best = (d, hi - lo);
            }
        }
        let (dim, spread) = best;
        if spread == 0.0 {
            // all rows identical in every coordinate
            self.nodes.push(Node::Leaf { start, end });
            return slot;
        }
        let mid = start + (end - start) / 2;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points.get(a, dim).total_cmp(&points.get(b, dim)).then(a.cmp(&b))
        });
        let value = points.get(self.perm[mid], dim);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[slot] = Node::Split { dim, value, left, right };
        slot
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn ids(&self) -> &[RowId] {
        &self.ids
    }

    pub fn uses_tree(&self) -> bool {
        self.use_tree
    }

    fn contains_id(&self, id: RowId) -> bool {
        self.ids.contains(&id)
    }

    /// Up to `k` nearest rows to `query`, skipping the row whose id equals
    /// `exclude`.
    pub fn knn(&self, query: &[f64], k: usize, exclude: Option<RowId>) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: query.len() });
        }
        let mut collector = Collector::new(k, exclude);
        if self.use_tree {
            let mut offsets = vec![0.0; self.dim()];
            self.search(0, query, &mut offsets, 0.0, &mut collector);
        } else {
            for (i, row) in self.points.rows_iter().enumerate() {
                collector.offer(Candidate { dist2: squared_distance(query, row), id: self.ids[i], position: i });
            }
        }
        Ok(collector.finish())
    }

    fn search(&self, node: usize, query: &[f64], offsets: &mut [f64], rd: f64, out: &mut Collector) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    let dist2 = squared_distance(query, self.points.row(i));
                    out.offer(Candidate { dist2, id: self.ids[i], position: i });
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, offsets, rd, out);
                let old = offsets[dim];
                let far_rd = rd - old * old + diff * diff;
                if far_rd * (1.0 - PRUNE_SLACK) <= out.worst() {
                    offsets[dim] = diff;
                    self.search(far, query, offsets, far_rd, out);
                    offsets[dim] = old;
                }
            }
        }
    }

    /// Mean distance from each query row to its `k` nearest indexed rows.
    ///
    /// With `exclude_self`, `query_ids` must be given and each query skips
    /// the indexed row carrying its own id.
    pub fn mean_knn_distances(
        &self,
        queries: &Matrix,
        query_ids: &[RowId],
        k: usize,
        exclude_self: bool,
    ) -> Result<Vec<DensityScore>> {
        if queries.nrows() != query_ids.len() {
            return Err(Error::DimensionMismatch { expected: queries.nrows(), actual: query_ids.len() });
        }
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        // a query only loses a neighbor when its own id is indexed
        let any_self = exclude_self && query_ids.iter().any(|&id| self.contains_id(id));
        let available = if any_self { self.len() - 1 } else { self.len() };
        if k > available {
            return Err(Error::TooFewRows { k, available });
        }
        (0..queries.nrows())
            .into_par_iter()
            .map(|i| {
                let id = query_ids[i];
                let neighbors = self.knn(queries.row(i), k, exclude_self.then_some(id))?;
                let mean = neighbors.iter().map(|nb| nb.distance).sum::<f64>() / neighbors.len() as f64;
                Ok(DensityScore { row_id: id, mean_knn_distance: mean })
            })
            .collect()
    }

    /// Scores every indexed row against the other indexed rows.
    pub fn self_density_scores(&self, k: usize) -> Result<Vec<DensityScore>> {
        self.mean_knn_distances(&self.points, &self.ids, k, true)
    }
}
