//! The acceptance suite behind `verify` and the `acceptance` test target.
//!
//! Targets are written out from their formulas here rather than taken from
//! the library's closed-form routines, so a wrong closed form cannot make
//! its own check pass.

use std::fmt;

use rand::Rng;

use rmsmd_core::activation::{simulate_counts, ActivationCounts, ActivationModel};
use rmsmd_core::lattice::{build_lattice, worst_image_msmd};
use rmsmd_core::localization::{synthesize_ffl, ErrorModel, Spread};
use rmsmd_core::metric::{msmd_accelerated, msmd_bruteforce, msmd_voronoi_form, Backend};
use rmsmd_core::rng::stream_rng;
use rmsmd_core::theory::{mse_closed, BiasSpec, ClosedFormInputs};
use rmsmd_core::{PointSet, Space};

use crate::config::{
    ActivationConfig, ActivationMode, ErrorConfig, FieldConfig, PlotConfig, ScenarioConfig,
    SweepConfig,
};
use crate::error::Result;
use crate::presets::preset;
use crate::runner::{run_scenario, MeanSd, SweepResult};
use crate::table::sweep_csv_bytes;

const PITCH: f64 = 200.0;

/// Tag for criterion-local random streams.
const SUITE: u64 = 0x7375_6974_65;

#[derive(Debug, Clone)]
pub struct Suite {
    pub replicates: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Suite {
    /// Desk scale: 16×16 torus, 16 replicates.
    pub fn quick() -> Self {
        Suite {
            replicates: 16,
            seed: 1,
            workers: None,
        }
    }

    /// Same criteria and tolerances with 64 replicates.
    pub fn full() -> Self {
        Suite {
            replicates: 64,
            ..Suite::quick()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {:<34} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }
}

pub const TITLES: [&str; 10] = [
    "metric identity",
    "raw-image limit √2·σ",
    "√λ fold of oracle averaging",
    "worst-image bound a/√6",
    "averaged-image lower bound",
    "bias case and bias floor",
    "drift case and periodicity",
    "closed-form MSE vs Monte Carlo",
    "activation statistics",
    "determinism of figures fig1f",
];

/// Collects the individual checks of one criterion.
struct Checks {
    parts: Vec<String>,
    passed: bool,
}

impl Checks {
    fn new() -> Self {
        Checks {
            parts: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, ok: bool, text: String) {
        self.passed &= ok;
        self.parts.push(if ok { text } else { format!("✗ {text}") });
    }

    /// `value` within `tol` (relative) of `target`.
    fn near(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        let rel = (value - target).abs() / target.abs();
        self.check(
            rel <= tol,
            format!("{what} = {value:.4} (target {target:.4} ± {}%, off {:+.2}%)", tol * 100.0, 100.0 * (value - target) / target),
        );
    }

    fn finish(self, id: u8) -> Outcome {
        Outcome {
            id,
            title: TITLES[id as usize - 1],
            passed: self.passed,
            detail: self.parts.join("; "),
        }
    }
}

/// A 16×16, a = 200 nm Poisson-mode scenario with the given sweep.
fn desk_scenario(suite: &Suite, name: &str, error: ErrorConfig, lambda: Option<f64>, sweep: SweepConfig) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        replicates: suite.replicates,
        seed: suite.seed,
        field: FieldConfig {
            pitch_nm: PITCH,
            rows: 16,
            cols: 16,
        },
        activation: ActivationConfig {
            mode: ActivationMode::Poisson,
            lambda,
            p: None,
            frames: None,
            p_on_to_on: None,
            p_off_to_on: None,
        },
        error,
        sweep,
        plot: PlotConfig::default(),
    }
}

fn error(sigma: f64, delta: f64, drift: f64) -> ErrorConfig {
    ErrorConfig {
        sigma_nm: sigma,
        delta_nm: delta,
        drift_nm: [drift, drift],
    }
}

/// Replicate statistics of one column at sweep value `v`.
fn column(r: &SweepResult, v: f64, f: impl Fn(&crate::runner::ReplicateRow) -> f64) -> MeanSd {
    let vals: Vec<f64> = r.rows.iter().filter(|x| x.sweep_value == v).map(f).collect();
    MeanSd::of(&vals)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn metric_identity(suite: &Suite) -> Result<Outcome> {
    let mut rng = stream_rng(suite.seed, &[SUITE, 1]);
    let torus = Space::torus(vec![1000.0, 1000.0])?;
    let mut worst: f64 = 0.0;
    for pair in 0..200 {
        let nx = rng.random_range(1..=500usize);
        let ns = rng.random_range(1..=500usize);
        let mut gen = |n: usize| {
            let c: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.0..1000.0)).collect();
            PointSet::from_flat(2, c)
        };
        let x = gen(nx)?;
        let s = gen(ns)?;
        let space = if pair % 2 == 0 { &Space::Euclidean } else { &torus };
        let brute = msmd_bruteforce(space, &x, &s)?.msmd;
        for backend in [Backend::KdTree, Backend::GridHash { bucket: None }] {
            worst = worst.max(rel(msmd_accelerated(space, &x, &s, backend)?.msmd, brute));
        }
        worst = worst.max(rel(msmd_voronoi_form(space, &x, &s)?.msmd, brute));
    }
    let mut c = Checks::new();
    c.check(
        worst <= 1e-12,
        format!("200 pairs (plane and torus), max relative deviation from brute force {worst:.1e} (≤ 1e-12)"),
    );
    Ok(c.finish(1))
}

pub fn raw_limit(suite: &Suite) -> Result<Outcome> {
    let cfg = desk_scenario(
        suite,
        "raw-limit",
        error(25.0, 0.0, 0.0),
        None,
        SweepConfig {
            lambda: Some(vec![2.0, 25.0]),
            ..Default::default()
        },
    );
    let r = run_scenario(&cfg, suite.workers)?;
    let at25 = column(&r, 25.0, |x| x.rmsmd_x);
    let at2 = column(&r, 2.0, |x| x.rmsmd_x);
    let mut c = Checks::new();
    c.near("mean D(X) at λ=25", at25.mean, 2f64.sqrt() * 25.0, 0.03);
    c.check(
        at25.sd < at2.sd,
        format!("replicate sd {:.3} at λ=25 < {:.3} at λ=2", at25.sd, at2.sd),
    );
    Ok(c.finish(2))
}

pub fn sqrt_lambda_fold(suite: &Suite) -> Result<Outcome> {
    let cfg = desk_scenario(
        suite,
        "fold",
        error(25.0, 0.0, 0.0),
        None,
        SweepConfig {
            lambda: Some(vec![10.0, 25.0]),
            ..Default::default()
        },
    );
    let r = run_scenario(&cfg, suite.workers)?;
    let fold = |l: f64| column(&r, l, |x| x.rmsmd_x / x.rmsmd_xhat_oracle).mean;
    let mut c = Checks::new();
    c.near(
        "mean D(X̂) at λ=25",
        column(&r, 25.0, |x| x.rmsmd_xhat_oracle).mean,
        25.0 * (2.0f64 / 25.0).sqrt(),
        0.10,
    );
    c.near("fold at λ=25", fold(25.0), 5.0, 0.10);
    c.near("fold at λ=10", fold(10.0), 10f64.sqrt(), 0.10);
    Ok(c.finish(3))
}

pub fn worst_image(suite: &Suite) -> Result<Outcome> {
    let cfg = desk_scenario(
        suite,
        "worst",
        error(0.0, 0.0, 0.0),
        Some(25.0),
        SweepConfig {
            sigma_nm: Some(vec![2000.0]),
            ..Default::default()
        },
    );
    let r = run_scenario(&cfg, suite.workers)?;
    let bound = PITCH / 6f64.sqrt();
    let mut c = Checks::new();
    c.near("mean D(X) at σ=2000", column(&r, 2000.0, |x| x.rmsmd_x).mean, bound, 0.03);
    let field = build_lattice(PITCH, 16, 16)?;
    let mc = worst_image_msmd(&field, 1_000_000, stream_rng_seed(suite.seed, 4))?;
    c.near("worst-image MSMD, 10⁶ samples (nm²)", mc, PITCH * PITCH / 6.0, 0.005);
    Ok(c.finish(4))
}

pub fn averaged_lower_bound(suite: &Suite) -> Result<Outcome> {
    let cfg = desk_scenario(
        suite,
        "crossover",
        error(0.0, 0.0, 0.0),
        Some(25.0),
        SweepConfig {
            sigma_nm: Some(vec![2000.0]),
            ..Default::default()
        },
    );
    let r = run_scenario(&cfg, suite.workers)?;
    let xhat = column(&r, 2000.0, |x| x.rmsmd_xhat_oracle).mean;
    let x = column(&r, 2000.0, |x| x.rmsmd_x).mean;
    let floor = (1.0 + (-1.0f64).exp()).sqrt() * PITCH / 6f64.sqrt() * (1.0 - 0.02);
    let mut c = Checks::new();
    c.check(xhat > floor, format!("mean D(X̂) = {xhat:.4} > {floor:.4}"));
    c.check(xhat > x, format!("D(X̂) {xhat:.4} > D(X) {x:.4}"));
    Ok(c.finish(5))
}

pub fn bias_case(suite: &Suite) -> Result<Outcome> {
    let cfg = desk_scenario(
        suite,
        "bias",
        error(25.0, 25.0, 0.0),
        None,
        SweepConfig {
            lambda: Some(vec![25.0, 400.0]),
            ..Default::default()
        },
    );
    let r = run_scenario(&cfg, suite.workers)?;
    let (s2, d2) = (25.0f64 * 25.0, 25.0f64 * 25.0);
    let mut c = Checks::new();
    c.near("mean D(X) at λ=25", column(&r, 25.0, |x| x.rmsmd_x).mean, (2.0 * (s2 + d2)).sqrt(), 0.05);
    c.near(
        "mean D(X̂) at λ=25",
        column(&r, 25.0, |x| x.rmsmd_xhat_oracle).mean,
        (2.0 * (s2 / 25.0 + d2)).sqrt(),
        0.05,
    );
    c.near(
        "mean D(X̂) at λ=400",
        column(&r, 400.0, |x| x.rmsmd_xhat_oracle).mean,
        2f64.sqrt() * 25.0,
        0.05,
    );
    Ok(c.finish(6))
}

pub fn drift_case(suite: &Suite) -> Result<Outcome> {
    let drift_cfg = |d: f64, sigma: f64| {
        desk_scenario(
            suite,
            "drift",
            error(sigma, 0.0, 0.0),
            Some(25.0),
            SweepConfig {
                drift_nm: Some(vec![d]),
                ..Default::default()
            },
        )
    };
    let r = run_scenario(&drift_cfg(-40.0, 25.0), suite.workers)?;
    let (s2, d2) = (25.0f64 * 25.0, 40.0f64 * 40.0);
    let mut c = Checks::new();
    c.near("mean D(X) at d=-40", column(&r, -40.0, |x| x.rmsmd_x).mean, (2.0 * (s2 + d2)).sqrt(), 0.05);
    c.near(
        "mean D(X̂) at d=-40",
        column(&r, -40.0, |x| x.rmsmd_xhat_oracle).mean,
        (2.0 * (s2 / 25.0 + d2)).sqrt(),
        0.05,
    );

    let shifted = run_scenario(&drift_cfg(-40.0 + PITCH, 25.0), suite.workers)?;
    let gap = r
        .rows
        .iter()
        .zip(&shifted.rows)
        .flat_map(|(a, b)| {
            [
                (a.rmsmd_x - b.rmsmd_x).abs(),
                (a.rmsmd_xhat_oracle - b.rmsmd_xhat_oracle).abs(),
                (a.rmsmd_xhat_voronoi - b.rmsmd_xhat_voronoi).abs(),
            ]
        })
        .fold(0.0, f64::max);
    c.check(gap <= 1e-9, format!("d vs d+(a,a): max RMSMD gap {gap:.1e} nm (≤ 1e-9)"));

    let worst = run_scenario(&drift_cfg(PITCH / 2.0, 1.0), suite.workers)?;
    let half_diag = PITCH / 2f64.sqrt();
    let x = column(&worst, PITCH / 2.0, |x| x.rmsmd_x).mean;
    c.near("mean D(X) at d=a/2, σ=1", x, half_diag, 0.02);
    c.check(x > PITCH / 6f64.sqrt(), format!("{x:.4} > a/√6"));
    Ok(c.finish(7))
}

pub fn mse_oracle(suite: &Suite) -> Result<Outcome> {
    let field = build_lattice(PITCH, 4, 4)?;
    let space = field.space();
    let m = field.len();
    let per_emitter = 1_000_000 / m as u64;
    let counts = ActivationCounts::from_counts(vec![per_emitter; m], per_emitter as f64);
    let mut rng = stream_rng(suite.seed, &[SUITE, 8]);
    let mut c = Checks::new();
    let mut worst: f64 = 0.0;
    for setting in 0..10u64 {
        let sigma: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..2).map(|_| rng.random_range(5.0..60.0)).collect())
            .collect();
        let bias: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..2).map(|_| rng.random_range(-40.0..40.0)).collect())
            .collect();
        let err = ErrorModel {
            spread: Spread::PerAxis(sigma.clone()),
            ..ErrorModel::isotropic(0.0)
        }
        .with_biases(bias.clone());
        let img = synthesize_ffl(&field, &counts, &err, stream_rng_seed(suite.seed, 80 + setting))?;
        let sum: f64 = img
            .points
            .iter()
            .zip(&img.source_index)
            .map(|(p, &i)| space.sq_dist(p, field.emitters().get(i)))
            .sum();
        let mc = sum / img.total() as f64;
        let closed = mse_closed(&ClosedFormInputs {
            sigma_per_axis: sigma,
            biases: BiasSpec::Realized(bias),
            lambda: 1.0,
            pitch: PITCH,
            drift: vec![0.0, 0.0],
        })?;
        worst = worst.max((mc - closed).abs() / closed);
    }
    c.check(
        worst <= 0.01,
        format!("10 random (σ, b) settings, 10⁶ samples each: max relative gap {:.3}% (≤ 1%)", worst * 100.0),
    );
    Ok(c.finish(8))
}

pub fn activation_statistics(suite: &Suite) -> Result<Outcome> {
    let n = 10_000;
    let stats = |c: &ActivationCounts| {
        let v: Vec<f64> = c.counts.iter().map(|&k| k as f64).collect();
        let s = MeanSd::of(&v);
        (s.mean, s.sd * s.sd)
    };
    let mut c = Checks::new();
    let binom = simulate_counts(
        &ActivationModel::Binomial { p: 0.1, frames: 100 },
        n,
        stream_rng_seed(suite.seed, 90),
    )?;
    let (mean, var) = stats(&binom);
    c.near("binomial(100, 0.1) mean", mean, 10.0, 0.05);
    c.near("binomial(100, 0.1) variance", var, 9.0, 0.05);
    let pois = simulate_counts(&ActivationModel::Poisson { lambda: 25.0 }, n, stream_rng_seed(suite.seed, 91))?;
    let (mean, var) = stats(&pois);
    c.near("poisson(25) mean", mean, 25.0, 0.05);
    c.near("poisson(25) variance/mean", var / mean, 1.0, 0.05);
    Ok(c.finish(9))
}

pub fn determinism(suite: &Suite) -> Result<Outcome> {
    let mut cfg = preset("fig1f")?;
    cfg.seed = 7;
    let a = sweep_csv_bytes(&run_scenario(&cfg, Some(1))?)?;
    let b = sweep_csv_bytes(&run_scenario(&cfg, suite.workers)?)?;
    let mut c = Checks::new();
    c.check(
        a == b,
        format!("two runs at seed 7 (1 worker vs pool): {} vs {} CSV bytes, identical = {}", a.len(), b.len(), a == b),
    );
    Ok(c.finish(10))
}

fn stream_rng_seed(master: u64, tag: u64) -> u64 {
    rmsmd_core::rng::derive_seed(master, &[SUITE, tag])
}

/// Runs criterion `id` (1–10); an internal error counts as a failure.
pub fn run_criterion(id: u8, suite: &Suite) -> Outcome {
    let r = match id {
        1 => metric_identity(suite),
        2 => raw_limit(suite),
        3 => sqrt_lambda_fold(suite),
        4 => worst_image(suite),
        5 => averaged_lower_bound(suite),
        6 => bias_case(suite),
        7 => drift_case(suite),
        8 => mse_oracle(suite),
        9 => activation_statistics(suite),
        10 => determinism(suite),
        _ => panic!("no acceptance criterion {id}"),
    };
    r.unwrap_or_else(|e| Outcome {
        id,
        title: TITLES[id as usize - 1],
        passed: false,
        detail: format!("error: {e}"),
    })
}

pub fn run_all(suite: &Suite) -> Vec<Outcome> {
    (1..=10).map(|id| run_criterion(id, suite)).collect()
}
