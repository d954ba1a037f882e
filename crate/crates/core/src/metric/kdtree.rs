//! A static k-d tree over a borrowed point set.
//!
//! Node boxes are tight bounding boxes of their points. On a torus the box
//! lower bound uses circular per-axis gaps, so a single query covers every
//! periodic image.

use super::{better, NearestNeighbor};
use crate::point::{PointSet, Space};

const LEAF_SIZE: usize = 8;
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    start: usize,
    end: usize,
    // children are (left, right) node indices; None for leaves
    children: Option<(usize, usize)>,
    split_axis: usize,
    split_value: f64,
}

#[derive(Debug)]
pub struct KdTree<'a> {
    set: &'a PointSet,
    space: &'a Space,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn build(space: &'a Space, set: &'a PointSet) -> Self {
        let mut tree = KdTree {
            set,
            space,
            perm: (0..set.len()).collect(),
            nodes: Vec::with_capacity(2 * set.len() / LEAF_SIZE + 1),
        };
        if !set.is_empty() {
            tree.build_node(0, set.len());
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let dim = self.set.dim();
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.perm[start..end] {
            let p = self.set.get(i);
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            children: None,
            split_axis: 0,
            split_value: 0.0,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] - lo[axis] <= 0.0 {
            // all points coincide
            return id;
        }
        let mid = start + (end - start) / 2;
        let set = self.set;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            set.get(a)[axis]
                .total_cmp(&set.get(b)[axis])
                .then(a.cmp(&b))
        });
        let split_value = set.get(self.perm[mid])[axis];
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        let node = &mut self.nodes[id];
        node.children = Some((left, right));
        node.split_axis = axis;
        node.split_value = split_value;
        id
    }

    fn box_lower_bound(&self, node: &Node, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..q.len() {
            let (lo, hi, v) = (node.lo[k], node.hi[k], q[k]);
            let gap = if v >= lo && v <= hi {
                0.0
            } else {
                match self.space {
                    Space::Euclidean => {
                        if v < lo {
                            lo - v
                        } else {
                            v - hi
                        }
                    }
                    Space::Torus { extent } => {
                        let l = extent[k];
                        let circ = |d: f64| {
                            let d = d.abs();
                            d.min(l - d)
                        };
                        circ(v - lo).min(circ(v - hi))
                    }
                }
            };
            acc += gap * gap;
        }
        acc
    }

    fn search(&self, id: usize, q: &[f64], best: &mut (f64, usize)) {
        let node = &self.nodes[id];
        if best.1 != usize::MAX && self.box_lower_bound(node, q) > best.0 * (1.0 + PRUNE_SLACK) {
            return;
        }
        match node.children {
            None => {
                for &i in &self.perm[node.start..node.end] {
                    let d = self.space.sq_dist(q, self.set.get(i));
                    if better((d, i), *best) {
                        *best = (d, i);
                    }
                }
            }
            Some((left, right)) => {
                let (near, far) = if q[node.split_axis] < node.split_value {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, best);
                self.search(far, q, best);
            }
        }
    }
}

impl NearestNeighbor for KdTree<'_> {
    fn nearest(&self, q: &[f64]) -> (usize, f64) {
        let mut best = (f64::INFINITY, usize::MAX);
        if !self.nodes.is_empty() {
            self.search(0, q, &mut best);
        }
        (best.1, best.0)
    }
}
