//! Closed-form reference values: MSE of raw and averaged images, their
//! large-λ limits, and the lattice bounds.

use crate::error::{Error, Result};
use crate::lattice::{poisson_mixture_lower_bound, uniform_cell_msmd, EmitterField};
use crate::localization::FflImage;
use crate::metric::{nearest_all, pairwise_sum, SpatialIndex};

/// Per-emitter biases, either realized or as the expected ensemble spread.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasSpec {
    Realized(Vec<Vec<f64>>),
    /// Biases drawn from `N(0, δ²I)`; expectations use `E b_k² = δ²`.
    Expected { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormInputs {
    /// `sigma_per_axis[i][k]` for emitter `i`, axis `k`.
    pub sigma_per_axis: Vec<Vec<f64>>,
    pub biases: BiasSpec,
    pub lambda: f64,
    pub pitch: f64,
    pub drift: Vec<f64>,
}

impl ClosedFormInputs {
    /// Isotropic σ for `m` emitters in `dim` dimensions, no bias or drift,
    /// λ = 1 until set.
    pub fn isotropic(sigma: f64, m: usize, dim: usize) -> Self {
        ClosedFormInputs {
            sigma_per_axis: vec![vec![sigma; dim]; m.max(1)],
            biases: BiasSpec::Expected { delta: 0.0 },
            lambda: 1.0,
            pitch: 0.0,
            drift: vec![0.0; dim],
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_pitch(mut self, pitch: f64) -> Self {
        self.pitch = pitch;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.biases = BiasSpec::Expected { delta };
        self
    }

    pub fn with_biases(mut self, biases: Vec<Vec<f64>>) -> Self {
        self.biases = BiasSpec::Realized(biases);
        self
    }

    pub fn with_drift(mut self, drift: impl Into<Vec<f64>>) -> Self {
        self.drift = drift.into();
        self
    }

    fn m(&self) -> usize {
        self.sigma_per_axis.len()
    }

    fn dim(&self) -> usize {
        self.sigma_per_axis.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        let dim = self.dim();
        if m == 0 || self.sigma_per_axis.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("sigma_per_axis", "must be a non-empty M × n table"));
        }
        if self.drift.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.drift.len(),
            });
        }
        if let BiasSpec::Realized(b) = &self.biases {
            if b.len() != m || b.iter().any(|r| r.len() != dim) {
                return Err(Error::invalid("biases", "must be an M × n table"));
            }
        }
        if !(self.lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        Ok(())
    }

    /// Expected squared effective offset `E (b_ik + d_k)²` for emitter `i`,
    /// axis `k`.
    fn offset_sq(&self, i: usize, k: usize) -> f64 {
        let d = self.drift[k];
        match &self.biases {
            BiasSpec::Realized(b) => (b[i][k] + d).powi(2),
            BiasSpec::Expected { delta } => delta * delta + d * d,
        }
    }

    /// Largest effective offset magnitude on axis `k` used by the premise
    /// gate; the ensemble spread δ stands in for unrealized biases.
    fn offset_abs_max(&self, k: usize) -> f64 {
        let d = self.drift[k].abs();
        match &self.biases {
            BiasSpec::Realized(b) => b.iter().map(|r| r[k].abs()).fold(0.0, f64::max) + d,
            BiasSpec::Expected { delta } => delta + d,
        }
    }

    fn mse_with_variance_scale(&self, scale: f64) -> f64 {
        let m = self.m();
        let terms: Vec<f64> = (0..m)
            .map(|i| {
                (0..self.dim())
                    .map(|k| self.sigma_per_axis[i][k].powi(2) * scale + self.offset_sq(i, k))
                    .sum()
            })
            .collect();
        pairwise_sum(&terms) / m as f64
    }
}

/// `h²(X, S) = (1/M) Σ_i Σ_k (σ_ik² + b_ik²)`, with the drift folded into the
/// bias.
pub fn mse_closed(inputs: &ClosedFormInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.mse_with_variance_scale(1.0))
}

/// `h²(X̂, S) = (1/M) Σ_i Σ_k (σ_ik²/λ + b_ik²)`.
pub fn mse_averaged_closed(inputs: &ClosedFormInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.mse_with_variance_scale(1.0 / inputs.lambda))
}

/// MSE of the raw and averaged images under a global drift only:
/// `(nσ² + ‖d‖², nσ²/λ + ‖d‖²)`.
pub fn drift_mse_closed(sigma: f64, lambda: f64, drift: &[f64]) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    let n = drift.len() as f64;
    let d2: f64 = drift.iter().map(|d| d * d).sum();
    Ok((n * sigma * sigma + d2, n * sigma * sigma / lambda + d2))
}

/// Large-λ RMSMD of the raw image when every localization stays inside its
/// own emitter's cell: it coincides with the RMSE.
///
/// The premise is checked per axis as `6σ_ik + |b_ik| + |d_k| < a`, i.e.
/// the ±3σ spread plus the offsets fits within one cell width.
pub fn limit_rmsmd_small_error(inputs: &ClosedFormInputs) -> Result<f64> {
    inputs.validate()?;
    if !(inputs.pitch > 0.0) {
        return Err(Error::invalid("pitch", "premise check needs the lattice pitch"));
    }
    for k in 0..inputs.dim() {
        let sigma = inputs
            .sigma_per_axis
            .iter()
            .map(|r| r[k])
            .fold(0.0, f64::max);
        let reach = 6.0 * sigma + inputs.offset_abs_max(k);
        if reach >= inputs.pitch {
            return Err(Error::PremiseViolated(format!(
                "axis {k}: 6σ + |b| + |d| = {reach} ≥ a = {}",
                inputs.pitch
            )));
        }
    }
    Ok(mse_closed(inputs)?.sqrt())
}

/// Data-driven large-λ approximation of the RMSMD: the mean over all
/// localizations of the squared distance to the nearest emitter, i.e. the
/// points binned by Voronoi cell of `S`.
pub fn empirical_limit_rmsmd(image: &FflImage, field: &EmitterField) -> Result<f64> {
    if image.points.is_empty() {
        return Err(Error::EmptyImage);
    }
    let space = field.space();
    let index = SpatialIndex::build(&space, field.emitters(), field.backend());
    let (_, sq) = nearest_all(&index, &image.points);
    Ok((pairwise_sum(&sq) / sq.len() as f64).sqrt())
}

/// Every closed-form value for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    /// nm²
    pub mse_x: f64,
    /// nm²
    pub mse_xhat: f64,
    /// nm; `None` when the small-error premise fails.
    pub rmsmd_limit_x: Option<f64>,
    /// nm; `None` when the small-error premise fails.
    pub rmsmd_limit_xhat: Option<f64>,
    /// `sqrt(mse_x / mse_xhat)`
    pub fold: f64,
    /// nm, `a/√6`
    pub upper_bound_x: f64,
    /// nm, `sqrt((1 + e⁻¹)/6)·a`
    pub lower_bound_xhat: f64,
}

impl TheoryReport {
    pub fn evaluate(inputs: &ClosedFormInputs) -> Result<Self> {
        let mse_x = mse_closed(inputs)?;
        let mse_xhat = mse_averaged_closed(inputs)?;
        let premise = limit_rmsmd_small_error(inputs).ok();
        Ok(TheoryReport {
            mse_x,
            mse_xhat,
            rmsmd_limit_x: premise,
            rmsmd_limit_xhat: premise.map(|_| mse_xhat.sqrt()),
            fold: if mse_xhat > 0.0 {
                (mse_x / mse_xhat).sqrt()
            } else {
                f64::INFINITY
            },
            upper_bound_x: uniform_cell_msmd(inputs.pitch)?.sqrt(),
            lower_bound_xhat: poisson_mixture_lower_bound(inputs.pitch)?.sqrt(),
        })
    }

    /// Column names used when the report is written next to simulation
    /// results.
    pub const CSV_HEADER: &'static str =
        "mse_X_nm2,mse_Xhat_nm2,rmsmd_limit_X_nm,rmsmd_limit_Xhat_nm,fold,upper_bound_X_nm,lower_bound_Xhat_nm";

    /// One CSV row; inapplicable limits are left empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.mse_x,
            self.mse_xhat,
            opt(self.rmsmd_limit_x),
            opt(self.rmsmd_limit_xhat),
            self.fold,
            self.upper_bound_x,
            self.lower_bound_xhat
        )
    }
}
