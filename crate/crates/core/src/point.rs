//! Points, point sets and the distance space they live in.

use crate::error::{Error, Result};

/// A single location in the plane or in 3D space, in nanometers.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords = coords.into();
        check_dim(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(Point(coords))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point(vec![x, y])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// An ordered collection of points sharing one dimension, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// An empty set of the given dimension.
    pub fn empty(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(PointSet {
            dim,
            coords: Vec::new(),
        })
    }

    /// Builds a set from flat coordinates `[x0, y0, x1, y1, ...]`.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if coords.len() % dim != 0 {
            return Err(Error::invalid(
                "coords",
                format!("length {} is not a multiple of {dim}", coords.len()),
            ));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_xy(points: &[(f64, f64)]) -> Result<Self> {
        let coords = points.iter().flat_map(|&(x, y)| [x, y]).collect();
        Self::from_flat(2, coords)
    }

    pub fn from_points(dim: usize, points: &[Point]) -> Result<Self> {
        let mut set = Self::empty(dim)?;
        for p in points {
            set.push(p.coords())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: self.len() });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Applies `f` to every point in place.
    pub fn map_points(&mut self, mut f: impl FnMut(&mut [f64])) {
        for p in self.coords.chunks_exact_mut(self.dim) {
            f(p);
        }
    }

    /// Returns a copy with every point shifted by `t`.
    pub fn translated(&self, t: &[f64]) -> PointSet {
        let mut out = self.clone();
        out.map_points(|p| p.iter_mut().zip(t).for_each(|(c, d)| *c += d));
        out
    }

    /// Returns a copy with every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> PointSet {
        PointSet {
            dim: self.dim,
            coords: self.coords.iter().map(|v| v * c).collect(),
        }
    }
}

/// The distance geometry points are compared in.
///
/// `Torus` uses minimum-image distances over a periodic box whose corner is
/// the origin; coordinates are expected to be wrapped into `[0, extent)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Euclidean,
    Torus { extent: Vec<f64> },
}

impl Space {
    pub fn torus(extent: impl Into<Vec<f64>>) -> Result<Self> {
        let extent = extent.into();
        check_dim(extent.len())?;
        if extent.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::invalid("extent", "torus sides must be positive"));
        }
        Ok(Space::Torus { extent })
    }

    /// Signed per-axis displacement `a - b`, minimum-image on a torus.
    #[inline]
    pub fn delta(&self, a: f64, b: f64, axis: usize) -> f64 {
        let d = a - b;
        match self {
            Space::Euclidean => d,
            Space::Torus { extent } => {
                let l = extent[axis];
                let h = 0.5 * l;
                if d > h {
                    d - l
                } else if d < -h {
                    d + l
                } else {
                    d
                }
            }
        }
    }

    /// Squared distance between two points. Every backend routes through
    /// this function so that selected minima are bit-identical.
    #[inline]
    pub fn sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..a.len() {
            let d = self.delta(a[k], b[k], k);
            acc += d * d;
        }
        acc
    }

    pub fn extent(&self) -> Option<&[f64]> {
        match self {
            Space::Euclidean => None,
            Space::Torus { extent } => Some(extent),
        }
    }

    /// Reduces a coordinate into `[0, extent)` along `axis`; identity in
    /// Euclidean space.
    #[inline]
    pub fn wrap_coord(&self, v: f64, axis: usize) -> f64 {
        match self {
            Space::Euclidean => v,
            Space::Torus { extent } => wrap_into(v, extent[axis]),
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Space::Torus { extent } if extent.len() != dim => Err(Error::DimensionMismatch {
                expected: extent.len(),
                actual: dim,
            }),
            _ => Ok(()),
        }
    }
}

#[inline]
pub(crate) fn wrap_into(v: f64, l: f64) -> f64 {
    let r = v.rem_euclid(l);
    // rem_euclid can round up to exactly `l` for tiny negative inputs
    if r >= l {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert_eq!(PointSet::empty(1), Err(Error::UnsupportedDimension(1)));
        assert!(PointSet::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn minimum_image_delta() {
        let t = Space::torus(vec![400.0, 400.0]).unwrap();
        assert_eq!(t.delta(390.0, 10.0, 0), -20.0);
        assert_eq!(t.delta(10.0, 390.0, 0), 20.0);
        assert_eq!(t.sq_dist(&[390.0, 0.0], &[10.0, 0.0]), 400.0);
        assert_eq!(Space::Euclidean.sq_dist(&[390.0, 0.0], &[10.0, 0.0]), 380.0 * 380.0);
    }

    #[test]
    fn wrap_handles_rounding_edge() {
        assert_eq!(wrap_into(-1e-18, 400.0), 0.0);
        assert_eq!(wrap_into(450.0, 400.0), 50.0);
        assert_eq!(wrap_into(-30.0, 400.0), 370.0);
    }
}
