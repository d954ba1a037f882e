//! Uniform grid hash with expanding-ring nearest-neighbor queries.

use super::{better, NearestNeighbor};
use crate::point::{wrap_into, PointSet, Space};

const STOP_SLACK: f64 = 1e-9;

#[derive(Debug)]
pub struct GridHash<'a> {
    set: &'a PointSet,
    space: &'a Space,
    origin: Vec<f64>,
    bucket: Vec<f64>,
    dims: Vec<usize>,
    // CSR layout: items of cell c are items[starts[c]..starts[c + 1]]
    starts: Vec<usize>,
    items: Vec<usize>,
    min_bucket: f64,
}

impl<'a> GridHash<'a> {
    /// Builds the grid. `bucket_hint` is the preferred bucket side (the
    /// lattice pitch when one exists); without one the side is chosen for
    /// about one point per bucket.
    pub fn build(space: &'a Space, set: &'a PointSet, bucket_hint: Option<f64>) -> Self {
        let dim = set.dim();
        let n = set.len().max(1);
        let (origin, bucket, dims) = match space {
            Space::Torus { extent } => {
                let hint = bucket_hint
                    .filter(|h| *h > 0.0)
                    .unwrap_or_else(|| auto_side(extent.iter().product(), n, dim));
                let dims: Vec<usize> = extent
                    .iter()
                    .map(|&l| ((l / hint).floor() as usize).max(1))
                    .collect();
                let dims = cap_cells(dims, n);
                let bucket: Vec<f64> = extent
                    .iter()
                    .zip(&dims)
                    .map(|(&l, &d)| l / d as f64)
                    .collect();
                (vec![0.0; dim], bucket, dims)
            }
            Space::Euclidean => {
                let mut lo = vec![f64::INFINITY; dim];
                let mut hi = vec![f64::NEG_INFINITY; dim];
                for p in set.iter() {
                    for k in 0..dim {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                if set.is_empty() {
                    lo.fill(0.0);
                    hi.fill(0.0);
                }
                let span: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
                let hint = bucket_hint.filter(|h| *h > 0.0).unwrap_or_else(|| {
                    let vol: f64 = span.iter().map(|s| s.max(1e-12)).product();
                    auto_side(vol, n, dim)
                });
                let dims: Vec<usize> = span
                    .iter()
                    .map(|&s| ((s / hint).floor() as usize + 1).max(1))
                    .collect();
                let dims = cap_cells(dims, n);
                let bucket: Vec<f64> = span
                    .iter()
                    .zip(&dims)
                    .map(|(&s, &d)| if s > 0.0 { s / d as f64 } else { hint.max(1.0) })
                    .collect();
                (lo, bucket, dims)
            }
        };
        let min_bucket = bucket.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut grid = GridHash {
            set,
            space,
            origin,
            bucket,
            dims,
            starts: Vec::new(),
            items: Vec::new(),
            min_bucket,
        };
        grid.fill();
        grid
    }

    fn fill(&mut self) {
        let n_cells: usize = self.dims.iter().product();
        let cells: Vec<usize> = self
            .set
            .iter()
            .map(|p| self.flat(&self.cell_of(p)))
            .collect();
        let mut counts = vec![0usize; n_cells + 1];
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for c in 0..n_cells {
            counts[c + 1] += counts[c];
        }
        let mut cursor = counts.clone();
        let mut items = vec![0usize; cells.len()];
        for (i, &c) in cells.iter().enumerate() {
            items[cursor[c]] = i;
            cursor[c] += 1;
        }
        self.starts = counts;
        self.items = items;
    }

    fn cell_of(&self, p: &[f64]) -> Vec<isize> {
        (0..p.len())
            .map(|k| {
                let v = match self.space {
                    Space::Torus { extent } => wrap_into(p[k], extent[k]),
                    Space::Euclidean => p[k],
                };
                let c = ((v - self.origin[k]) / self.bucket[k]).floor();
                c.clamp(0.0, (self.dims[k] - 1) as f64) as isize
            })
            .collect()
    }

    fn flat(&self, cell: &[isize]) -> usize {
        cell.iter()
            .zip(&self.dims)
            .fold(0usize, |acc, (&c, &d)| acc * d + c as usize)
    }

    /// Maps a raw cell coordinate to a stored cell, wrapping on a torus.
    fn resolve(&self, cell: &[isize], out: &mut [isize]) -> bool {
        for k in 0..cell.len() {
            let d = self.dims[k] as isize;
            let c = cell[k];
            out[k] = match self.space {
                Space::Torus { .. } => c.rem_euclid(d),
                Space::Euclidean => {
                    if c < 0 || c >= d {
                        return false;
                    }
                    c
                }
            };
        }
        true
    }

    fn max_ring(&self, center: &[isize]) -> isize {
        match self.space {
            Space::Torus { .. } => self.dims.iter().map(|&d| (d / 2) as isize).max().unwrap_or(0),
            Space::Euclidean => center
                .iter()
                .zip(&self.dims)
                .map(|(&c, &d)| c.max(d as isize - 1 - c))
                .max()
                .unwrap_or(0),
        }
    }

    fn scan_cell(&self, cell: &[isize], q: &[f64], best: &mut (f64, usize)) {
        let c = self.flat(cell);
        for &i in &self.items[self.starts[c]..self.starts[c + 1]] {
            let d = self.space.sq_dist(q, self.set.get(i));
            if better((d, i), *best) {
                *best = (d, i);
            }
        }
    }

    /// Visits every cell at Chebyshev offset exactly `r` from `center`.
    fn visit_ring(&self, center: &[isize], r: isize, q: &[f64], best: &mut (f64, usize)) {
        let dim = center.len();
        let mut offset = vec![0isize; dim];
        let mut raw = vec![0isize; dim];
        let mut resolved = vec![0isize; dim];
        self.ring_rec(0, false, center, r, &mut offset, &mut raw, &mut resolved, q, best);
    }

    #[allow(clippy::too_many_arguments)]
    fn ring_rec(
        &self,
        axis: usize,
        on_boundary: bool,
        center: &[isize],
        r: isize,
        offset: &mut [isize],
        raw: &mut [isize],
        resolved: &mut [isize],
        q: &[f64],
        best: &mut (f64, usize),
    ) {
        let dim = center.len();
        if axis == dim {
            for k in 0..dim {
                raw[k] = center[k] + offset[k];
            }
            if self.resolve(raw, resolved) {
                self.scan_cell(resolved, q, best);
            }
            return;
        }
        let last = axis + 1 == dim;
        if last && !on_boundary {
            offset[axis] = -r;
            self.ring_rec(axis + 1, true, center, r, offset, raw, resolved, q, best);
            if r > 0 {
                offset[axis] = r;
                self.ring_rec(axis + 1, true, center, r, offset, raw, resolved, q, best);
            }
        } else {
            for o in -r..=r {
                offset[axis] = o;
                let edge = on_boundary || o.abs() == r;
                self.ring_rec(axis + 1, edge, center, r, offset, raw, resolved, q, best);
            }
        }
    }
}

fn auto_side(volume: f64, n: usize, dim: usize) -> f64 {
    (volume / n as f64).powf(1.0 / dim as f64).max(1e-9)
}

fn cap_cells(mut dims: Vec<usize>, n: usize) -> Vec<usize> {
    let limit = 4 * n + 64;
    while dims.iter().product::<usize>() > limit {
        for d in dims.iter_mut() {
            *d = (*d / 2).max(1);
        }
    }
    dims
}

impl NearestNeighbor for GridHash<'_> {
    fn nearest(&self, q: &[f64]) -> (usize, f64) {
        let mut best = (f64::INFINITY, usize::MAX);
        if self.items.is_empty() {
            return (usize::MAX, f64::INFINITY);
        }
        let center = self.cell_of(q);
        let r_max = self.max_ring(&center);
        for r in 0..=r_max {
            self.visit_ring(&center, r, q, &mut best);
            let reach = r as f64 * self.min_bucket;
            if best.1 != usize::MAX && best.0 < reach * reach * (1.0 - STOP_SLACK) {
                break;
            }
        }
        (best.1, best.0)
    }
}
