//! Synthesis of FFL localization sets from an emitter field.
//!
//! Every activation of emitter `i` yields one estimate
//! `x = s_i + b_i + d + ε`, with `ε` zero-mean Gaussian, `b_i` a per-emitter
//! bias fixed for the whole movie, and `d` a global sample drift. Samples
//! are wrapped onto the torus for lattice fields.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::activation::ActivationCounts;
use crate::error::{Error, Result};
use crate::lattice::{EmitterField, Region};
use crate::point::{PointSet, Space};
use crate::rng::{stream, stream_rng};

/// Per-axis standard deviation of the localization error.
#[derive(Debug, Clone, PartialEq)]
pub enum Spread {
    /// Same σ on every axis of every emitter.
    Isotropic(f64),
    /// `sigma[i][k]` for emitter `i`, axis `k`.
    PerAxis(Vec<Vec<f64>>),
}

/// Per-emitter estimator bias.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasMode {
    Zero,
    Fixed(Vec<Vec<f64>>),
    /// `b_i ~ N(0, δ²I)`, drawn once per field realization.
    Random { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub spread: Spread,
    pub bias: BiasMode,
    /// Global sample drift; empty means none.
    pub drift: Vec<f64>,
}

impl ErrorModel {
    pub fn isotropic(sigma: f64) -> Self {
        ErrorModel {
            spread: Spread::Isotropic(sigma),
            bias: BiasMode::Zero,
            drift: Vec::new(),
        }
    }

    pub fn with_bias_spread(mut self, delta: f64) -> Self {
        self.bias = if delta == 0.0 {
            BiasMode::Zero
        } else {
            BiasMode::Random { delta }
        };
        self
    }

    pub fn with_biases(mut self, biases: Vec<Vec<f64>>) -> Self {
        self.bias = BiasMode::Fixed(biases);
        self
    }

    pub fn with_drift(mut self, drift: impl Into<Vec<f64>>) -> Self {
        self.drift = drift.into();
        self
    }

    /// σ of emitter `i` along axis `k`.
    pub fn sigma(&self, i: usize, k: usize) -> f64 {
        match &self.spread {
            Spread::Isotropic(s) => *s,
            Spread::PerAxis(v) => v[i][k],
        }
    }

    pub fn drift_or_zero(&self, dim: usize) -> Vec<f64> {
        if self.drift.is_empty() {
            vec![0.0; dim]
        } else {
            self.drift.clone()
        }
    }

    pub fn validate(&self, m: usize, dim: usize) -> Result<()> {
        let finite_nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} must be finite and ≥ 0")))
            }
        };
        match &self.spread {
            Spread::Isotropic(s) => finite_nonneg("sigma", *s)?,
            Spread::PerAxis(v) => {
                if v.len() != m || v.iter().any(|row| row.len() != dim) {
                    return Err(Error::invalid("sigma", "per-axis table must be M × n"));
                }
                for &s in v.iter().flatten() {
                    finite_nonneg("sigma", s)?;
                }
            }
        }
        match &self.bias {
            BiasMode::Zero => {}
            BiasMode::Random { delta } => finite_nonneg("delta", *delta)?,
            BiasMode::Fixed(b) => {
                if b.len() != m || b.iter().any(|row| row.len() != dim) {
                    return Err(Error::invalid("biases", "bias list must be M × n"));
                }
                if b.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("biases", "must be finite"));
                }
            }
        }
        if !self.drift.is_empty() && self.drift.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.drift.len(),
            });
        }
        if self.drift.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("drift", "must be finite"));
        }
        Ok(())
    }

    /// The bias vectors for one field realization.
    pub fn realize_biases(&self, m: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        match &self.bias {
            BiasMode::Zero => vec![vec![0.0; dim]; m],
            BiasMode::Fixed(b) => b.clone(),
            BiasMode::Random { delta } => (0..m)
                .map(|i| {
                    let mut rng = stream_rng(seed, &[stream::BIAS, i as u64]);
                    (0..dim)
                        .map(|_| delta * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect(),
        }
    }
}

/// The estimated point set `X` with its oracle partition.
#[derive(Debug, Clone, PartialEq)]
pub struct FflImage {
    pub points: PointSet,
    /// Emitter that produced each point.
    pub source_index: Vec<usize>,
    pub field: EmitterField,
    pub realized_biases: Vec<Vec<f64>>,
    pub drift: Vec<f64>,
}

impl FflImage {
    /// Number of points per emitter.
    pub fn counts(&self) -> Vec<u64> {
        let mut n = vec![0u64; self.field.len()];
        for &i in &self.source_index {
            n[i] += 1;
        }
        n
    }

    pub fn total(&self) -> usize {
        self.points.len()
    }
}

/// Draws `counts[i]` localizations around every emitter.
pub fn synthesize_ffl(
    field: &EmitterField,
    counts: &ActivationCounts,
    err: &ErrorModel,
    seed: u64,
) -> Result<FflImage> {
    let m = field.len();
    let dim = field.dim();
    if counts.len() != m {
        return Err(Error::SizeMismatch {
            left: counts.len(),
            right: m,
        });
    }
    err.validate(m, dim)?;
    let space = field.space();
    let biases = err.realize_biases(m, dim, seed);
    let drift = err.drift_or_zero(dim);

    let total = counts.total as usize;
    let mut coords = Vec::with_capacity(total * dim);
    let mut source_index = Vec::with_capacity(total);
    let mut p = vec![0.0; dim];
    for (i, &n) in counts.counts.iter().enumerate() {
        let s = field.emitters().get(i);
        let mut rng = stream_rng(seed, &[stream::POINTS, i as u64]);
        for _ in 0..n {
            for k in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                let v = s[k] + biases[i][k] + drift[k] + err.sigma(i, k) * z;
                p[k] = space.wrap_coord(v, k);
            }
            coords.extend_from_slice(&p);
            source_index.push(i);
        }
    }
    Ok(FflImage {
        points: PointSet::from_flat(dim, coords)?,
        source_index,
        field: field.clone(),
        realized_biases: biases,
        drift,
    })
}

/// Count-weighted Gaussian mixture density `g(x) = Σ (N_i/N) f_i(x)` with
/// the realized biases and drift folded into the component means. On a
/// torus each component is the wrapped Gaussian.
pub fn mixture_density(x: &[f64], image: &FflImage, err: &ErrorModel) -> Result<f64> {
    let total = image.total();
    if total == 0 {
        return Err(Error::EmptyImage);
    }
    let dim = image.field.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        });
    }
    let counts = image.counts();
    let space = image.field.space();
    let mut g = 0.0;
    for (i, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let s = image.field.emitters().get(i);
        let mut f = 1.0;
        for k in 0..dim {
            let sigma = err.sigma(i, k);
            if sigma <= 0.0 {
                return Err(Error::invalid("sigma", "density needs σ > 0"));
            }
            let mean = s[k] + image.realized_biases[i][k] + image.drift[k];
            f *= axis_density(x[k], mean, sigma, &space, k, image.field.region());
        }
        g += n as f64 / total as f64 * f;
    }
    Ok(g)
}

fn axis_density(x: f64, mean: f64, sigma: f64, space: &Space, k: usize, region: &Region) -> f64 {
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let gauss = |d: f64| norm * (-0.5 * (d / sigma).powi(2)).exp();
    match (space, region) {
        (Space::Torus { extent }, _) => {
            let l = extent[k];
            let d0 = space.delta(x, space.wrap_coord(mean, k), k);
            // images beyond ±(8σ + L) contribute below f64 resolution
            let reach = ((8.0 * sigma) / l).ceil() as i64 + 1;
            (-reach..=reach).map(|j| gauss(d0 + j as f64 * l)).sum()
        }
        _ => gauss(x - mean),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    fn image_with(field: &EmitterField, counts: Vec<u64>, err: &ErrorModel, seed: u64) -> FflImage {
        let c = ActivationCounts::from_counts(counts, 1.0);
        synthesize_ffl(field, &c, err, seed).unwrap()
    }

    #[test]
    fn zero_error_points_sit_on_emitters() {
        let f = build_lattice(200.0, 4, 4).unwrap();
        let img = image_with(&f, vec![3; 16], &ErrorModel::isotropic(0.0), 1);
        assert_eq!(img.total(), 48);
        for (p, &i) in img.points.iter().zip(&img.source_index) {
            assert_eq!(p, f.emitters().get(i));
        }
    }

    #[test]
    fn pure_drift_offsets_every_point() {
        let f = build_lattice(200.0, 4, 4).unwrap();
        let err = ErrorModel::isotropic(0.0).with_drift(vec![3.0, 4.0]);
        let img = image_with(&f, vec![2; 16], &err, 1);
        let space = f.space();
        for (p, &i) in img.points.iter().zip(&img.source_index) {
            assert!((space.sq_dist(p, f.emitters().get(i)) - 25.0).abs() < 1e-9);
        }
    }

    #[test]
    fn samples_are_wrapped_onto_the_torus() {
        let f = build_lattice(200.0, 2, 2).unwrap();
        let img = image_with(&f, vec![50; 4], &ErrorModel::isotropic(300.0), 4);
        assert!(img.points.iter().all(|p| f.region().contains(p)));
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let f = build_lattice(200.0, 2, 2).unwrap();
        let c = ActivationCounts::from_counts(vec![1, 2], 1.0);
        assert!(synthesize_ffl(&f, &c, &ErrorModel::isotropic(1.0), 0).is_err());
    }

    #[test]
    fn fixed_bias_is_recorded() {
        let f = build_lattice(200.0, 1, 2).unwrap();
        let b = vec![vec![1.0, -2.0], vec![0.5, 0.5]];
        let err = ErrorModel::isotropic(0.0).with_biases(b.clone());
        let img = image_with(&f, vec![1, 1], &err, 0);
        assert_eq!(img.realized_biases, b);
        assert_eq!(img.points.get(1), &[0.5, 200.5]);
    }

    #[test]
    fn peak_density_of_single_gaussian() {
        let s = PointSet::from_xy(&[(0.0, 0.0)]).unwrap();
        let region = Region::Box {
            lower: vec![-1000.0, -1000.0],
            upper: vec![1000.0, 1000.0],
        };
        let f = EmitterField::irregular(s, region).unwrap();
        let err = ErrorModel::isotropic(25.0);
        let img = image_with(&f, vec![10], &err, 0);
        let g = mixture_density(&[0.0, 0.0], &img, &err).unwrap();
        let expect = 1.0 / (2.0 * PI * 625.0);
        assert!((g - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn mixture_weights_follow_counts() {
        let s = PointSet::from_xy(&[(0.0, 0.0), (1000.0, 0.0)]).unwrap();
        let region = Region::Box {
            lower: vec![-2000.0, -2000.0],
            upper: vec![3000.0, 2000.0],
        };
        let f = EmitterField::irregular(s, region).unwrap();
        let err = ErrorModel::isotropic(10.0);
        let img = image_with(&f, vec![1, 3], &err, 0);
        let peak = 1.0 / (2.0 * PI * 100.0);
        let g0 = mixture_density(&[0.0, 0.0], &img, &err).unwrap();
        let g1 = mixture_density(&[1000.0, 0.0], &img, &err).unwrap();
        assert!((g0 / peak - 0.25).abs() < 1e-12);
        assert!((g1 / peak - 0.75).abs() < 1e-12);
    }

    #[test]
    fn density_needs_points_and_spread() {
        let f = build_lattice(200.0, 1, 1).unwrap();
        let err = ErrorModel::isotropic(5.0);
        let empty = image_with(&f, vec![0], &err, 0);
        assert_eq!(mixture_density(&[0.0, 0.0], &empty, &err), Err(Error::EmptyImage));
        let zero = ErrorModel::isotropic(0.0);
        let img = image_with(&f, vec![1], &zero, 0);
        assert!(mixture_density(&[0.0, 0.0], &img, &zero).is_err());
    }
}
