//! Per-emitter activation counts over an L-frame movie.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

/// How activation counts are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationModel {
    /// Two-state ON/OFF chain per emitter, started from its stationary law.
    /// Every ON frame yields one localization.
    Markov {
        p_on_to_on: f64,
        p_off_to_on: f64,
        frames: u64,
    },
    /// `N_i ~ Binomial(frames, p)`: independent frames.
    Binomial { p: f64, frames: u64 },
    /// `N_i ~ Poisson(lambda)`: the large-`L` limit.
    Poisson { lambda: f64 },
}

impl ActivationModel {
    /// Stationary per-frame activation probability, when the model has
    /// frames.
    pub fn stationary_p(&self) -> Option<f64> {
        match *self {
            ActivationModel::Markov {
                p_on_to_on,
                p_off_to_on,
                ..
            } => Some(p_off_to_on / (1.0 - p_on_to_on + p_off_to_on)),
            ActivationModel::Binomial { p, .. } => Some(p),
            ActivationModel::Poisson { .. } => None,
        }
    }

    pub fn frames(&self) -> Option<u64> {
        match *self {
            ActivationModel::Markov { frames, .. } | ActivationModel::Binomial { frames, .. } => {
                Some(frames)
            }
            ActivationModel::Poisson { .. } => None,
        }
    }

    /// Mean activations per emitter, `λ = p·L`.
    pub fn lambda(&self) -> f64 {
        match *self {
            ActivationModel::Poisson { lambda } => lambda,
            _ => self.stationary_p().unwrap_or(0.0) * self.frames().unwrap_or(0) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} is not a probability")))
            }
        };
        match *self {
            ActivationModel::Markov {
                p_on_to_on,
                p_off_to_on,
                frames,
            } => {
                prob("p_on_to_on", p_on_to_on)?;
                prob("p_off_to_on", p_off_to_on)?;
                if p_off_to_on == 0.0 {
                    return Err(Error::invalid("p_off_to_on", "must be positive"));
                }
                if p_on_to_on == 0.0 && p_off_to_on == 1.0 {
                    return Err(Error::invalid("p_on_to_on", "chain is periodic"));
                }
                if frames == 0 {
                    return Err(Error::invalid("frames", "must be positive"));
                }
            }
            ActivationModel::Binomial { p, frames } => {
                prob("p", p)?;
                if p == 0.0 {
                    return Err(Error::invalid("p", "must be positive"));
                }
                if frames == 0 {
                    return Err(Error::invalid("frames", "must be positive"));
                }
            }
            ActivationModel::Poisson { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::invalid("lambda", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Activation counts `N_i` for every emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCounts {
    pub counts: Vec<u64>,
    pub total: u64,
    /// Model mean activations per emitter.
    pub lambda: f64,
}

impl ActivationCounts {
    pub fn from_counts(counts: Vec<u64>, lambda: f64) -> Self {
        let total = counts.iter().sum();
        ActivationCounts {
            counts,
            total,
            lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Draws independent counts for `m_emitters`. Each emitter has its own
/// stream keyed by `(seed, emitter index)`.
pub fn simulate_counts(
    model: &ActivationModel,
    m_emitters: usize,
    seed: u64,
) -> Result<ActivationCounts> {
    model.validate()?;
    if m_emitters == 0 {
        return Err(Error::invalid("m_emitters", "must be at least 1"));
    }
    let counts = (0..m_emitters)
        .map(|i| {
            let mut rng = stream_rng(seed, &[stream::COUNTS, i as u64]);
            draw_count(model, &mut rng)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(ActivationCounts::from_counts(counts, model.lambda()))
}

fn draw_count(model: &ActivationModel, rng: &mut impl Rng) -> Result<u64> {
    match *model {
        ActivationModel::Binomial { p, frames } => {
            let d = Binomial::new(frames, p).map_err(|e| Error::invalid("p", e.to_string()))?;
            Ok(d.sample(rng))
        }
        ActivationModel::Poisson { lambda } => {
            let d = Poisson::new(lambda).map_err(|e| Error::invalid("lambda", e.to_string()))?;
            Ok(d.sample(rng) as u64)
        }
        ActivationModel::Markov {
            p_on_to_on,
            p_off_to_on,
            frames,
        } => {
            let p = model.stationary_p().unwrap_or(0.0);
            let mut on = rng.random_bool(p);
            let mut n = on as u64;
            for _ in 1..frames {
                on = rng.random_bool(if on { p_on_to_on } else { p_off_to_on });
                n += on as u64;
            }
            Ok(n)
        }
    }
}

/// Simulates the ON/OFF state of one emitter for every frame. Exposed for
/// stationarity diagnostics.
pub fn simulate_markov_frames(model: &ActivationModel, seed: u64, emitter: u64) -> Result<Vec<bool>> {
    model.validate()?;
    let ActivationModel::Markov {
        p_on_to_on,
        p_off_to_on,
        frames,
    } = *model
    else {
        return Err(Error::invalid("model", "frame traces need the Markov mode"));
    };
    let p = model.stationary_p().unwrap_or(0.0);
    let mut rng = stream_rng(seed, &[stream::COUNTS, emitter]);
    let mut on = rng.random_bool(p);
    let mut trace = Vec::with_capacity(frames as usize);
    trace.push(on);
    for _ in 1..frames {
        on = rng.random_bool(if on { p_on_to_on } else { p_off_to_on });
        trace.push(on);
    }
    Ok(trace)
}

/// Mean activations per emitter observed in `counts`: `total / M`.
pub fn empirical_lambda(counts: &ActivationCounts) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    counts.total as f64 / counts.len() as f64
}
