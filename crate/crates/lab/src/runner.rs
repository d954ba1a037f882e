//! Sweep orchestration.
//!
//! Each (sweep index, replicate) pair is one job with its own seed derived
//! from the master seed, so results do not depend on the worker count or on
//! the order in which jobs finish.

use rayon::prelude::*;

use rmsmd_core::activation::simulate_counts;
use rmsmd_core::averaging::{average_oracle, average_voronoi, rmsmd_to_field, AveragedImage};
use rmsmd_core::lattice::{
    build_lattice, poisson_mixture_lower_bound, uniform_cell_msmd, EmitterField,
};
use rmsmd_core::localization::{synthesize_ffl, ErrorModel, FflImage};
use rmsmd_core::rng::{derive_seed, stream};
use rmsmd_core::theory::{mse_averaged_closed, mse_closed, ClosedFormInputs};

use crate::config::{ParameterPoint, PlotConfig, ScenarioConfig, SweepAxis};
use crate::error::Result;

/// Tag separating scatter-panel seeds from sweep-job seeds.
const PANEL: u64 = 0x7061_6e65_6c;

/// One simulated image with both averaged versions.
#[derive(Debug, Clone)]
pub struct Realization {
    pub image: FflImage,
    pub oracle: AveragedImage,
    pub voronoi: AveragedImage,
}

pub fn realize(field: &EmitterField, point: &ParameterPoint, seed: u64) -> Result<Realization> {
    let counts = simulate_counts(&point.activation, field.len(), seed)?;
    let err = ErrorModel::isotropic(point.sigma)
        .with_bias_spread(point.delta)
        .with_drift(point.drift.to_vec());
    let image = synthesize_ffl(field, &counts, &err, seed)?;
    let oracle = average_oracle(&image)?;
    let voronoi = average_voronoi(&image)?;
    Ok(Realization {
        image,
        oracle,
        voronoi,
    })
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub sweep_value: f64,
    pub replicate: usize,
    pub rmsmd_x: f64,
    pub rmsmd_xhat_oracle: f64,
    pub rmsmd_xhat_voronoi: f64,
    /// Closed form with the expected bias energy 2δ².
    pub rmse_x: f64,
    pub rmse_xhat: f64,
    /// `a/√6`
    pub bound_upper: f64,
    /// `√(1+e⁻¹)·a/√6`
    pub bound_lower: f64,
    pub seed: u64,
}

/// RMSMDs of one scatter panel, drawn as markers on the sweep plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelMark {
    pub sweep_value: f64,
    pub rmsmd_x: f64,
    pub rmsmd_xhat_oracle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub axis: SweepAxis,
    pub plot: PlotConfig,
    /// Ordered by sweep index, then replicate.
    pub rows: Vec<ReplicateRow>,
    pub panels: Vec<PanelMark>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single replicate.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

/// Replicate statistics at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub replicates: usize,
    pub rmsmd_x: MeanSd,
    pub rmsmd_xhat_oracle: MeanSd,
    pub rmsmd_xhat_voronoi: MeanSd,
    pub rmse_x: f64,
    pub rmse_xhat: f64,
    pub bound_upper: f64,
    pub bound_lower: f64,
}

impl SweepResult {
    pub fn summary(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.rows.len() {
            let v = self.rows[start].sweep_value;
            let end = start
                + self.rows[start..]
                    .iter()
                    .take_while(|r| r.sweep_value == v)
                    .count();
            let block = &self.rows[start..end];
            let col = |f: fn(&ReplicateRow) -> f64| MeanSd::of(&block.iter().map(f).collect::<Vec<_>>());
            out.push(SweepPoint {
                value: v,
                replicates: block.len(),
                rmsmd_x: col(|r| r.rmsmd_x),
                rmsmd_xhat_oracle: col(|r| r.rmsmd_xhat_oracle),
                rmsmd_xhat_voronoi: col(|r| r.rmsmd_xhat_voronoi),
                rmse_x: block[0].rmse_x,
                rmse_xhat: block[0].rmse_xhat,
                bound_upper: block[0].bound_upper,
                bound_lower: block[0].bound_lower,
            });
            start = end;
        }
        out
    }
}

pub fn field_of(config: &ScenarioConfig) -> Result<EmitterField> {
    Ok(build_lattice(
        config.field.pitch_nm,
        config.field.rows,
        config.field.cols,
    )?)
}

pub fn job_seed(master: u64, sweep_index: usize, replicate: usize) -> u64 {
    derive_seed(master, &[stream::JOB, sweep_index as u64, replicate as u64])
}

pub fn panel_seed(master: u64, panel_index: usize) -> u64 {
    derive_seed(master, &[PANEL, panel_index as u64])
}

/// Closed-form `(rmse_X, rmse_X̂)` at one parameter point.
pub fn closed_forms(point: &ParameterPoint, m: usize, pitch: f64) -> Result<(f64, f64)> {
    let inputs = ClosedFormInputs::isotropic(point.sigma, m, 2)
        .with_delta(point.delta)
        .with_lambda(point.activation.lambda())
        .with_pitch(pitch)
        .with_drift(point.drift.to_vec());
    Ok((mse_closed(&inputs)?.sqrt(), mse_averaged_closed(&inputs)?.sqrt()))
}

/// Runs every (sweep value, replicate) job on a pool of `workers` threads
/// (rayon's default when `None`).
pub fn run_scenario(config: &ScenarioConfig, workers: Option<usize>) -> Result<SweepResult> {
    config.validate()?;
    let (axis, values) = config.sweep_axis()?;
    let field = field_of(config)?;
    let pitch = config.field.pitch_nm;
    let bound_upper = uniform_cell_msmd(pitch)?.sqrt();
    let bound_lower = poisson_mixture_lower_bound(pitch)?.sqrt();

    let points = values
        .iter()
        .map(|&v| config.point(v))
        .collect::<Result<Vec<_>>>()?;
    let forms = points
        .iter()
        .map(|p| closed_forms(p, field.len(), pitch))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|i| (0..config.replicates).map(move |r| (i, r)))
        .collect();

    let run_job = |&(i, r): &(usize, usize)| -> Result<ReplicateRow> {
        let seed = job_seed(config.seed, i, r);
        let real = realize(&field, &points[i], seed)?;
        Ok(ReplicateRow {
            sweep_value: values[i],
            replicate: r,
            rmsmd_x: rmsmd_to_field(&real.image.points, &field)?,
            rmsmd_xhat_oracle: rmsmd_to_field(&real.oracle.points, &field)?,
            rmsmd_xhat_voronoi: rmsmd_to_field(&real.voronoi.points, &field)?,
            rmse_x: forms[i].0,
            rmse_xhat: forms[i].1,
            bound_upper,
            bound_lower,
            seed,
        })
    };
    let run_panel = |(k, &v): (usize, &f64)| -> Result<PanelMark> {
        let real = realize(&field, &config.point(v)?, panel_seed(config.seed, k))?;
        Ok(PanelMark {
            sweep_value: v,
            rmsmd_x: rmsmd_to_field(&real.image.points, &field)?,
            rmsmd_xhat_oracle: rmsmd_to_field(&real.oracle.points, &field)?,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()?;
    // indexed collects keep job order regardless of completion order
    let (rows, panels) = pool.install(|| {
        let rows = jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>();
        let panels = config
            .plot
            .panels
            .par_iter()
            .enumerate()
            .map(run_panel)
            .collect::<Result<Vec<_>>>();
        (rows, panels)
    });

    Ok(SweepResult {
        name: config.name.clone(),
        axis,
        plot: config.plot.clone(),
        rows: rows?,
        panels: panels?,
    })
}
