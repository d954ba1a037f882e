//! Emitter fields: the square lattice on a torus, irregular fields in a box,
//! their Voronoi cells, and the closed-form cell integrals.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{pairwise_sum, Backend, NearestNeighbor, SpatialIndex};
use crate::point::{wrap_into, Point, PointSet, Space};
use crate::rng::{stream, stream_rng};

/// The region Ω the emitters and localizations live in.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Periodic box `[0, extent_k)` per axis.
    Torus { extent: Vec<f64> },
    /// Closed axis-aligned box.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Region {
    pub fn volume(&self) -> f64 {
        match self {
            Region::Torus { extent } => extent.iter().product(),
            Region::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).product(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Torus { extent } => extent.len(),
            Region::Box { lower, .. } => lower.len(),
        }
    }

    pub fn space(&self) -> Space {
        match self {
            Region::Torus { extent } => Space::Torus {
                extent: extent.clone(),
            },
            Region::Box { .. } => Space::Euclidean,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Torus { extent } => p.iter().zip(extent).all(|(&c, &l)| (0.0..l).contains(&c)),
            Region::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&c, (&l, &u))| c >= l && c <= u),
        }
    }

    fn validate(&self) -> Result<()> {
        crate::point::check_dim(self.dim())?;
        let ok = match self {
            Region::Torus { extent } => extent.iter().all(|&l| l > 0.0 && l.is_finite()),
            Region::Box { lower, upper } => {
                lower.len() == upper.len()
                    && lower.iter().zip(upper).all(|(l, u)| u > l && l.is_finite() && u.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("region", "volume must be positive and finite"))
        }
    }
}

/// Axis-aligned Voronoi cell of a lattice emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub center: Point,
    pub half_widths: Vec<f64>,
}

/// Ground-truth emitter locations with their geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterField {
    emitters: PointSet,
    /// Lattice pitch; 0 for irregular fields.
    pitch: f64,
    grid_dims: Option<(usize, usize)>,
    region: Region,
}

/// Square lattice with pitch `a`: emitter `(i, j)` sits at `(i·a, j·a)` on a
/// torus of size `(rows·a, cols·a)`. Emitter index is `i·cols + j`.
pub fn build_lattice(pitch: f64, rows: usize, cols: usize) -> Result<EmitterField> {
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(Error::invalid("pitch_a", "must be positive"));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("rows/cols", "lattice needs at least one row and column"));
    }
    let mut coords = Vec::with_capacity(2 * rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            coords.push(i as f64 * pitch);
            coords.push(j as f64 * pitch);
        }
    }
    Ok(EmitterField {
        emitters: PointSet::from_flat(2, coords)?,
        pitch,
        grid_dims: Some((rows, cols)),
        region: Region::Torus {
            extent: vec![rows as f64 * pitch, cols as f64 * pitch],
        },
    })
}

impl EmitterField {
    /// An irregular field (no lattice metadata) inside `region`.
    pub fn irregular(emitters: PointSet, region: Region) -> Result<Self> {
        region.validate()?;
        if emitters.is_empty() {
            return Err(Error::EmptySet);
        }
        if emitters.dim() != region.dim() {
            return Err(Error::DimensionMismatch {
                expected: region.dim(),
                actual: emitters.dim(),
            });
        }
        if let Some(i) = emitters.iter().position(|p| !region.contains(p)) {
            return Err(Error::invalid(
                "emitters",
                format!("emitter {i} lies outside the region"),
            ));
        }
        Ok(EmitterField {
            emitters,
            pitch: 0.0,
            grid_dims: None,
            region,
        })
    }

    pub fn emitters(&self) -> &PointSet {
        &self.emitters
    }

    pub fn len(&self) -> usize {
        self.emitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.emitters.dim()
    }

    pub fn pitch(&self) -> Option<f64> {
        (self.pitch > 0.0).then_some(self.pitch)
    }

    pub fn grid_dims(&self) -> Option<(usize, usize)> {
        self.grid_dims
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn space(&self) -> Space {
        self.region.space()
    }

    pub fn is_lattice(&self) -> bool {
        self.grid_dims.is_some()
    }

    /// Default nearest-neighbor backend for metric computations on this
    /// field.
    pub fn backend(&self) -> Backend {
        Backend::default_for(self.pitch())
    }

    /// The Voronoi cell of emitter `i`, for lattice fields.
    pub fn cell(&self, i: usize) -> Option<VoronoiCell> {
        if !self.is_lattice() || i >= self.len() {
            return None;
        }
        Some(VoronoiCell {
            center: Point::new(self.emitters.get(i).to_vec()).ok()?,
            half_widths: vec![0.5 * self.pitch; self.dim()],
        })
    }
}

/// Reduces `p` onto the torus `[0, width) × [0, height)`.
pub fn wrap_point(p: &Point, region: &Region) -> Result<Point> {
    match region {
        Region::Box { .. } => Err(Error::WrapUndefined),
        Region::Torus { extent } => {
            if extent.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: extent.len(),
                    actual: p.dim(),
                });
            }
            let coords: Vec<f64> = p
                .coords()
                .iter()
                .zip(extent)
                .map(|(&c, &l)| wrap_into(c, l))
                .collect();
            Point::new(coords)
        }
    }
}

fn check_pitch(pitch: f64) -> Result<()> {
    if pitch > 0.0 && pitch.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("pitch_a", "must be positive"))
    }
}

/// MSMD of estimates uniformly distributed over one square cell: `a²/6`.
pub fn uniform_cell_msmd(pitch: f64) -> Result<f64> {
    check_pitch(pitch)?;
    Ok(pitch * pitch / 6.0)
}

/// Mean squared distance from a square cell's center to its boundary,
/// uniformly parameterized along the perimeter: `a²/3`.
pub fn boundary_mean_square(pitch: f64) -> Result<f64> {
    check_pitch(pitch)?;
    Ok(pitch * pitch / 3.0)
}

/// Lower bound `(1 + e⁻¹)·a²/6` on the large-error MSMD of the averaged
/// image, from Poisson(1) cell occupancy.
pub fn poisson_mixture_lower_bound(pitch: f64) -> Result<f64> {
    check_pitch(pitch)?;
    Ok((1.0 + (-1.0f64).exp()) * pitch * pitch / 6.0)
}

/// Minimum sample budget accepted by [`worst_image_msmd`].
pub const MIN_WORST_IMAGE_SAMPLES: usize = 10_000;

const REGION_CHUNK: usize = 8192;

/// Monte-Carlo estimate of the worst-image MSMD
/// `(1/M) Σ_i (1/|V(s_i) ∩ Ω|) ∫_{V(s_i) ∩ Ω} ‖s_i − x‖² dx`.
///
/// Lattice fields draw an equal number of uniform samples inside every
/// cell. Other fields draw uniformly over the region, bin samples by
/// nearest emitter and average the per-cell means over non-empty cells.
pub fn worst_image_msmd(field: &EmitterField, samples: usize, seed: u64) -> Result<f64> {
    if samples < MIN_WORST_IMAGE_SAMPLES {
        return Err(Error::invalid(
            "samples",
            format!("need at least {MIN_WORST_IMAGE_SAMPLES}, got {samples}"),
        ));
    }
    let m = field.len();
    if field.is_lattice() {
        let per_cell = samples.div_ceil(m);
        let half = 0.5 * field.pitch;
        let dim = field.dim();
        let cell_means: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, &[stream::WORST_IMAGE, i as u64]);
                let sq: Vec<f64> = (0..per_cell)
                    .map(|_| {
                        (0..dim)
                            .map(|_| {
                                let u = rng.random_range(-half..=half);
                                u * u
                            })
                            .sum()
                    })
                    .collect();
                pairwise_sum(&sq) / per_cell as f64
            })
            .collect();
        return Ok(pairwise_sum(&cell_means) / m as f64);
    }

    let space = field.space();
    let (lower, upper): (Vec<f64>, Vec<f64>) = match &field.region {
        Region::Torus { extent } => (vec![0.0; extent.len()], extent.clone()),
        Region::Box { lower, upper } => (lower.clone(), upper.clone()),
    };
    let chunks = samples.div_ceil(REGION_CHUNK);
    let partials: Vec<(Vec<f64>, Vec<usize>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let index = SpatialIndex::build(&space, &field.emitters, Backend::KdTree);
            let mut rng = stream_rng(seed, &[stream::WORST_IMAGE, c as u64]);
            let n = REGION_CHUNK.min(samples - c * REGION_CHUNK);
            let mut sums = vec![0.0; m];
            let mut counts = vec![0usize; m];
            let mut p = vec![0.0; lower.len()];
            for _ in 0..n {
                for k in 0..p.len() {
                    p[k] = rng.random_range(lower[k]..upper[k]);
                }
                let (i, d) = index.nearest(&p);
                sums[i] += d;
                counts[i] += 1;
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for (s, n) in &partials {
        for i in 0..m {
            sums[i] += s[i];
            counts[i] += n[i];
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&s, &n)| s / n as f64)
        .collect();
    Ok(pairwise_sum(&means) / means.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_lattice() {
        let f = build_lattice(200.0, 2, 2).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(f.region().volume(), 160_000.0);
        assert_eq!(f.emitters().get(3), &[200.0, 200.0]);
        assert_eq!(
            f.cell(0).unwrap().half_widths,
            vec![100.0, 100.0],
            "cells of side 200"
        );
    }

    #[test]
    fn rejects_bad_lattice_arguments() {
        assert!(build_lattice(0.0, 2, 2).is_err());
        assert!(build_lattice(-1.0, 2, 2).is_err());
        assert!(build_lattice(200.0, 0, 2).is_err());
    }

    #[test]
    fn wrap_examples() {
        let f = build_lattice(200.0, 2, 2).unwrap();
        let w = wrap_point(&Point::xy(450.0, -30.0), f.region()).unwrap();
        assert_eq!(w.coords(), &[50.0, 370.0]);
        let inside = Point::xy(12.5, 399.0);
        assert_eq!(wrap_point(&inside, f.region()).unwrap(), inside);
        let p = Point::xy(123.0, 45.0);
        assert_eq!(
            wrap_point(&Point::xy(123.0 + 400.0, 45.0), f.region()).unwrap(),
            wrap_point(&p, f.region()).unwrap()
        );
        let boxed = Region::Box {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        assert_eq!(wrap_point(&p, &boxed), Err(Error::WrapUndefined));
    }

    #[test]
    fn closed_forms() {
        assert!((uniform_cell_msmd(200.0).unwrap() - 6666.666_666_666_667).abs() < 1e-9);
        assert!((uniform_cell_msmd(200.0).unwrap().sqrt() - 81.65).abs() < 5e-3);
        assert_eq!(uniform_cell_msmd(1.0).unwrap(), 1.0 / 6.0);
        assert!((boundary_mean_square(200.0).unwrap() - 13_333.333).abs() < 1e-3);
        assert_eq!(boundary_mean_square(1.0).unwrap(), 1.0 / 3.0);
        let lb = poisson_mixture_lower_bound(200.0).unwrap();
        // (1 + e⁻¹)·200²/6 evaluated independently
        assert!((lb - 9119.196_274_476).abs() < 1e-6, "{lb}");
        assert!((lb.sqrt() - 95.49).abs() < 5e-3);
        assert!((poisson_mixture_lower_bound(1.0).unwrap() - 0.22798).abs() < 1e-5);
        for a in [1e-3, 1.0, 200.0, 1e5] {
            assert!(poisson_mixture_lower_bound(a).unwrap() > uniform_cell_msmd(a).unwrap());
        }
        assert!(uniform_cell_msmd(0.0).is_err());
    }

    #[test]
    fn worst_image_single_emitter_unit_box() {
        let s = PointSet::from_xy(&[(0.0, 0.0)]).unwrap();
        let region = Region::Box {
            lower: vec![-0.5, -0.5],
            upper: vec![0.5, 0.5],
        };
        let f = EmitterField::irregular(s, region).unwrap();
        let v = worst_image_msmd(&f, 200_000, 1).unwrap();
        assert!((v - 1.0 / 6.0).abs() / (1.0 / 6.0) < 0.01, "{v}");
    }

    #[test]
    fn worst_image_two_emitters_on_matching_torus() {
        // lattice route
        let f = build_lattice(200.0, 2, 1).unwrap();
        let v = worst_image_msmd(&f, 200_000, 3).unwrap();
        assert!((v / (200.0 * 200.0 / 6.0) - 1.0).abs() < 0.01, "{v}");
        // region route on the same geometry
        let g = EmitterField::irregular(f.emitters().clone(), f.region().clone()).unwrap();
        let w = worst_image_msmd(&g, 200_000, 3).unwrap();
        assert!((w / (200.0 * 200.0 / 6.0) - 1.0).abs() < 0.01, "{w}");
    }

    #[test]
    fn worst_image_rejects_small_budget() {
        let f = build_lattice(200.0, 2, 2).unwrap();
        assert!(worst_image_msmd(&f, 9_999, 0).is_err());
    }

    #[test]
    fn irregular_field_validation() {
        let region = Region::Box {
            lower: vec![0.0, 0.0],
            upper: vec![10.0, 10.0],
        };
        let outside = PointSet::from_xy(&[(11.0, 0.0)]).unwrap();
        assert!(EmitterField::irregular(outside, region.clone()).is_err());
        let empty = PointSet::empty(2).unwrap();
        assert_eq!(EmitterField::irregular(empty, region), Err(Error::EmptySet));
    }
}
