//! Mean square minimum distance (MSMD) between two finite point sets.
//!
//! For sets `X` and `S` the MSMD is
//!
//! ```text
//! D²(X, S) = ( Σ_{x∈X} min_{s∈S} ‖x − s‖² + Σ_{s∈S} min_{x∈X} ‖s − x‖² ) / (|X| + |S|)
//! ```
//!
//! and the RMSMD is its square root. Three routes compute the same value:
//! exhaustive search, an accelerated nearest-neighbor index, and the
//! Voronoi-cell regrouping of both sums.

mod grid;
mod kdtree;

pub use grid::GridHash;
pub use kdtree::KdTree;

use crate::error::{Error, Result};
use crate::point::{PointSet, Space};

/// The two sums of the MSMD and their normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsmdBreakdown {
    pub msmd: f64,
    /// Σ over X of the squared distance to the nearest member of S.
    pub forward_sum: f64,
    /// Σ over S of the squared distance to the nearest member of X.
    pub backward_sum: f64,
    pub count: usize,
}

impl MsmdBreakdown {
    fn from_sums(forward_sum: f64, backward_sum: f64, count: usize) -> Self {
        MsmdBreakdown {
            msmd: (forward_sum + backward_sum) / count as f64,
            forward_sum,
            backward_sum,
            count,
        }
    }

    pub fn rmsmd(&self) -> f64 {
        self.msmd.sqrt()
    }
}

/// Nearest-member lookup. Ties resolve to the lowest index.
pub trait NearestNeighbor {
    /// Returns `(index, squared distance)` of the nearest indexed point.
    fn nearest(&self, q: &[f64]) -> (usize, f64);
}

/// Lexicographic `(distance, index)` ordering shared by every backend.
#[inline]
pub(crate) fn better(cand: (f64, usize), best: (f64, usize)) -> bool {
    cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1)
}

/// Exhaustive linear scan.
#[derive(Debug)]
pub struct BruteForce<'a> {
    set: &'a PointSet,
    space: &'a Space,
}

impl<'a> BruteForce<'a> {
    pub fn new(space: &'a Space, set: &'a PointSet) -> Self {
        BruteForce { set, space }
    }
}

impl NearestNeighbor for BruteForce<'_> {
    fn nearest(&self, q: &[f64]) -> (usize, f64) {
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, p) in self.set.iter().enumerate() {
            let d = self.space.sq_dist(q, p);
            if better((d, i), best) {
                best = (d, i);
            }
        }
        (best.1, best.0)
    }
}

/// Accelerated nearest-neighbor engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Uniform buckets; `bucket` is the preferred side length.
    GridHash { bucket: Option<f64> },
    KdTree,
}

impl Backend {
    /// Grid hash sized to the lattice pitch when one is known, else k-d tree.
    pub fn default_for(pitch: Option<f64>) -> Self {
        match pitch {
            Some(a) if a > 0.0 => Backend::GridHash { bucket: Some(a) },
            _ => Backend::KdTree,
        }
    }
}

/// A built spatial index over one point set.
#[derive(Debug)]
pub enum SpatialIndex<'a> {
    Grid(GridHash<'a>),
    Kd(KdTree<'a>),
}

impl<'a> SpatialIndex<'a> {
    pub fn build(space: &'a Space, set: &'a PointSet, backend: Backend) -> Self {
        match backend {
            Backend::GridHash { bucket } => SpatialIndex::Grid(GridHash::build(space, set, bucket)),
            Backend::KdTree => SpatialIndex::Kd(KdTree::build(space, set)),
        }
    }
}

impl NearestNeighbor for SpatialIndex<'_> {
    fn nearest(&self, q: &[f64]) -> (usize, f64) {
        match self {
            SpatialIndex::Grid(g) => g.nearest(q),
            SpatialIndex::Kd(k) => k.nearest(q),
        }
    }
}

/// Sum with pairwise (tree) reduction; error grows as O(log n) instead of
/// O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub(crate) fn validate_pair(space: &Space, x: &PointSet, s: &PointSet) -> Result<()> {
    if x.is_empty() || s.is_empty() {
        return Err(Error::EmptySet);
    }
    if x.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: s.dim(),
        });
    }
    space.check_dim(x.dim())?;
    if let Space::Torus { extent } = space {
        for set in [x, s] {
            for (i, p) in set.iter().enumerate() {
                if p.iter().zip(extent).any(|(&c, &l)| !(0.0..l).contains(&c)) {
                    return Err(Error::invalid(
                        "points",
                        format!("point {i} lies outside the torus; wrap it first"),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Squared distance from every point of `queries` to its nearest member of
/// the indexed set, plus the chosen indices.
pub fn nearest_all(index: &impl NearestNeighbor, queries: &PointSet) -> (Vec<usize>, Vec<f64>) {
    queries.iter().map(|q| index.nearest(q)).unzip()
}

fn msmd_with(
    x: &PointSet,
    s: &PointSet,
    x_index: &impl NearestNeighbor,
    s_index: &impl NearestNeighbor,
) -> MsmdBreakdown {
    let (_, forward) = nearest_all(s_index, x);
    let (_, backward) = nearest_all(x_index, s);
    MsmdBreakdown::from_sums(
        pairwise_sum(&forward),
        pairwise_sum(&backward),
        x.len() + s.len(),
    )
}

/// Exact MSMD by exhaustive pairwise minima.
pub fn msmd_bruteforce(space: &Space, x: &PointSet, s: &PointSet) -> Result<MsmdBreakdown> {
    validate_pair(space, x, s)?;
    Ok(msmd_with(
        x,
        s,
        &BruteForce::new(space, x),
        &BruteForce::new(space, s),
    ))
}

/// MSMD through a spatial index. Selects the same minima as
/// [`msmd_bruteforce`] and sums them in the same order.
pub fn msmd_accelerated(
    space: &Space,
    x: &PointSet,
    s: &PointSet,
    backend: Backend,
) -> Result<MsmdBreakdown> {
    validate_pair(space, x, s)?;
    let x_index = SpatialIndex::build(space, x, backend);
    let s_index = SpatialIndex::build(space, s, backend);
    Ok(msmd_with(x, s, &x_index, &s_index))
}

/// Assigns every point of `points` to the Voronoi cell of its nearest
/// member of `centers` (lowest index on ties).
pub fn voronoi_assign(space: &Space, points: &PointSet, centers: &PointSet) -> Vec<usize> {
    let index = BruteForce::new(space, centers);
    points.iter().map(|p| index.nearest(p).0).collect()
}

/// Per-cell sums of squared distances between each cell center and the
/// points assigned to it, then summed across cells.
fn cellwise_sum(space: &Space, points: &PointSet, centers: &PointSet) -> f64 {
    let owner = voronoi_assign(space, points, centers);
    let mut per_cell = vec![Vec::new(); centers.len()];
    for (p, &c) in points.iter().zip(&owner) {
        per_cell[c].push(space.sq_dist(p, centers.get(c)));
    }
    let cell_totals: Vec<f64> = per_cell.iter().map(|v| pairwise_sum(v)).collect();
    pairwise_sum(&cell_totals)
}

/// MSMD regrouped by Voronoi cells: every point of one set is binned into
/// the cell of its nearest member of the other set and the squared
/// distances are summed cell by cell.
pub fn msmd_voronoi_form(space: &Space, x: &PointSet, s: &PointSet) -> Result<MsmdBreakdown> {
    validate_pair(space, x, s)?;
    // Σ_x min_s: members of X binned into the cells V(s)
    let forward = cellwise_sum(space, x, s);
    // Σ_s min_x: members of S binned into the cells V(x)
    let backward = cellwise_sum(space, s, x);
    Ok(MsmdBreakdown::from_sums(forward, backward, x.len() + s.len()))
}

/// RMSMD of a pair of kernel sets: the i-th estimate is paired with the
/// i-th emitter, so only the paired distances enter.
pub fn paired_rmsmd(space: &Space, xhat: &PointSet, s: &PointSet) -> Result<f64> {
    validate_pair(space, xhat, s)?;
    if xhat.len() != s.len() {
        return Err(Error::SizeMismatch {
            left: xhat.len(),
            right: s.len(),
        });
    }
    let sq: Vec<f64> = xhat
        .iter()
        .zip(s.iter())
        .map(|(a, b)| space.sq_dist(a, b))
        .collect();
    Ok((pairwise_sum(&sq) / s.len() as f64).sqrt())
}

/// True when every `xhat[i]` is nearest to `s[i]` and vice versa, the
/// condition under which [`paired_rmsmd`] equals the full RMSMD.
pub fn is_mutually_nearest(space: &Space, xhat: &PointSet, s: &PointSet) -> bool {
    if xhat.len() != s.len() {
        return false;
    }
    let a = voronoi_assign(space, xhat, s);
    let b = voronoi_assign(space, s, xhat);
    a.iter().enumerate().all(|(i, &j)| i == j) && b.iter().enumerate().all(|(i, &j)| i == j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e() -> Space {
        Space::Euclidean
    }

    #[test]
    fn identical_singletons() {
        let a = PointSet::from_xy(&[(0.0, 0.0)]).unwrap();
        let r = msmd_bruteforce(&e(), &a, &a).unwrap();
        assert_eq!(r.msmd, 0.0);
    }

    #[test]
    fn single_pair_three_four_five() {
        let x = PointSet::from_xy(&[(3.0, 4.0)]).unwrap();
        let s = PointSet::from_xy(&[(0.0, 0.0)]).unwrap();
        let r = msmd_bruteforce(&e(), &x, &s).unwrap();
        assert_eq!(r.msmd, 25.0);
        assert_eq!(r.rmsmd(), 5.0);
    }

    #[test]
    fn hand_enumerated_sums() {
        // forward: (0,0)->(1,0) = 1, (10,0)->(1,0) = 81; backward: (1,0)->(0,0) = 1
        let x = PointSet::from_xy(&[(0.0, 0.0), (10.0, 0.0)]).unwrap();
        let s = PointSet::from_xy(&[(1.0, 0.0)]).unwrap();
        for r in [
            msmd_bruteforce(&e(), &x, &s).unwrap(),
            msmd_accelerated(&e(), &x, &s, Backend::KdTree).unwrap(),
            msmd_accelerated(&e(), &x, &s, Backend::GridHash { bucket: None }).unwrap(),
            msmd_voronoi_form(&e(), &x, &s).unwrap(),
        ] {
            assert_eq!(r.forward_sum, 82.0);
            assert_eq!(r.backward_sum, 1.0);
            assert_eq!(r.count, 3);
            assert_eq!(r.msmd, 83.0 / 3.0);
        }
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let a = PointSet::from_xy(&[(0.0, 0.0)]).unwrap();
        let empty = PointSet::empty(2).unwrap();
        let three = PointSet::from_flat(3, vec![0.0; 3]).unwrap();
        assert_eq!(msmd_bruteforce(&e(), &a, &empty), Err(Error::EmptySet));
        assert_eq!(msmd_voronoi_form(&e(), &empty, &a), Err(Error::EmptySet));
        assert!(matches!(
            msmd_accelerated(&e(), &a, &three, Backend::KdTree),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(Error::EmptySet.to_string(), "metric undefined on empty set");
    }

    #[test]
    fn voronoi_tie_goes_to_lower_index() {
        let x = PointSet::from_xy(&[(5.0, 0.0)]).unwrap();
        let s = PointSet::from_xy(&[(0.0, 0.0), (10.0, 0.0)]).unwrap();
        assert_eq!(voronoi_assign(&e(), &x, &s), vec![0]);
        let r = msmd_voronoi_form(&e(), &x, &s).unwrap();
        assert_eq!(r.forward_sum, 25.0);
        // each emitter's nearest estimate is the single point: 25 + 25
        assert_eq!(r.backward_sum, 50.0);
        assert_eq!(r, msmd_bruteforce(&e(), &x, &s).unwrap());
    }

    #[test]
    fn all_points_in_one_cell() {
        // every x is nearest to s0; s1 is far away
        let x = PointSet::from_xy(&[(1.0, 0.0), (0.0, 2.0), (-1.0, -1.0)]).unwrap();
        let s = PointSet::from_xy(&[(0.0, 0.0), (100.0, 0.0)]).unwrap();
        let r = msmd_voronoi_form(&e(), &x, &s).unwrap();
        // X lands in V(s0) only: 1 + 4 + 2
        assert_eq!(r.forward_sum, 7.0);
        // s0 -> (1,0) = 1, s1 -> (1,0) = 99²
        assert_eq!(r.backward_sum, 1.0 + 99.0 * 99.0);
    }

    #[test]
    fn coincident_points_are_finite() {
        let x = PointSet::from_xy(&[(2.0, 2.0); 50]).unwrap();
        let s = PointSet::from_xy(&[(2.0, 2.0); 7]).unwrap();
        for backend in [Backend::KdTree, Backend::GridHash { bucket: None }] {
            let r = msmd_accelerated(&e(), &x, &s, backend).unwrap();
            assert_eq!(r.msmd, 0.0);
        }
        let far = PointSet::from_xy(&[(5.0, 6.0); 3]).unwrap();
        let r = msmd_accelerated(&e(), &x, &far, Backend::GridHash { bucket: None }).unwrap();
        assert_eq!(r.msmd, 25.0);
    }

    #[test]
    fn paired_cases() {
        let s = PointSet::from_xy(&[(0.0, 0.0), (200.0, 0.0), (0.0, 200.0)]).unwrap();
        assert_eq!(paired_rmsmd(&e(), &s, &s).unwrap(), 0.0);
        let shifted = s.translated(&[3.0, 4.0]);
        assert!((paired_rmsmd(&e(), &shifted, &s).unwrap() - 5.0).abs() < 1e-12);
        let short = PointSet::from_xy(&[(0.0, 0.0)]).unwrap();
        assert!(matches!(
            paired_rmsmd(&e(), &short, &s),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn torus_inputs_must_be_wrapped() {
        let t = Space::torus(vec![400.0, 400.0]).unwrap();
        let ok = PointSet::from_xy(&[(10.0, 390.0)]).unwrap();
        let bad = PointSet::from_xy(&[(-1.0, 0.0)]).unwrap();
        assert!(msmd_bruteforce(&t, &ok, &ok).is_ok());
        assert!(msmd_bruteforce(&t, &bad, &ok).is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_inputs() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
