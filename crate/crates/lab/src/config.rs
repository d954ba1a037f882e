//! Scenario files.
//!
//! A scenario is a flat TOML document:
//!
//! ```toml
//! name = "fig1f"
//! replicates = 16
//! seed = 7
//!
//! [field]
//! pitch_nm = 200.0
//! rows = 16
//! cols = 16
//!
//! [activation]
//! mode = "poisson"        # poisson | binomial | markov
//! lambda = 25.0           # poisson
//! # p = 0.1, frames = 250                           binomial
//! # p_on_to_on = 0.5, p_off_to_on = 0.01, frames = 2500   markov
//!
//! [error]
//! sigma_nm = 25.0
//! delta_nm = 0.0          # spread of per-emitter biases
//! drift_nm = [0.0, 0.0]
//!
//! [sweep]                 # exactly one of lambda, sigma_nm, delta_nm, drift_nm
//! lambda = [1.0, 2.0, 5.0, 10.0]
//!
//! [plot]                  # optional
//! x_scale = "log"         # linear | log
//! y_scale = "linear"
//! bounds = ["upper"]      # upper = a/√6, lower = √(1+e⁻¹)·a/√6
//! voronoi = true          # draw the Voronoi-averaged curve
//! panels = [10.0]         # sweep values rendered as scatter panels
//! ```
//!
//! A drift sweep value `d` means the drift vector `(d, d)`. Sweeping `lambda`
//! in binomial or markov mode rescales the activation probability so that
//! `p·frames = λ`.

use serde::{Deserialize, Serialize};

use rmsmd_core::activation::ActivationModel;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    pub field: FieldConfig,
    pub activation: ActivationConfig,
    #[serde(default)]
    pub error: ErrorConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub plot: PlotConfig,
}

fn default_replicates() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub pitch_nm: f64,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationMode {
    Poisson,
    Binomial,
    Markov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationConfig {
    pub mode: ActivationMode,
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    pub frames: Option<u64>,
    pub p_on_to_on: Option<f64>,
    pub p_off_to_on: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorConfig {
    #[serde(default)]
    pub sigma_nm: f64,
    #[serde(default)]
    pub delta_nm: f64,
    #[serde(default)]
    pub drift_nm: [f64; 2],
}

impl Default for ErrorConfig {
    fn default() -> Self {
        ErrorConfig {
            sigma_nm: 0.0,
            delta_nm: 0.0,
            drift_nm: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda: Option<Vec<f64>>,
    pub sigma_nm: Option<Vec<f64>>,
    pub delta_nm: Option<Vec<f64>>,
    pub drift_nm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Lambda,
    Sigma,
    Delta,
    Drift,
}

impl SweepAxis {
    /// Value of the `sweep_axis` CSV column.
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Sigma => "sigma",
            SweepAxis::Delta => "delta",
            SweepAxis::Drift => "drift",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lambda" => Some(SweepAxis::Lambda),
            "sigma" => Some(SweepAxis::Sigma),
            "delta" => Some(SweepAxis::Delta),
            "drift" => Some(SweepAxis::Drift),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "λ (mean activations per emitter)",
            SweepAxis::Sigma => "σ (nm)",
            SweepAxis::Delta => "δ (nm)",
            SweepAxis::Drift => "d (nm), drift (d, d)",
        }
    }

    fn key(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Sigma => "sigma_nm",
            SweepAxis::Delta => "delta_nm",
            SweepAxis::Drift => "drift_nm",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// `a/√6`
    Upper,
    /// `√(1+e⁻¹)·a/√6`
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotConfig {
    #[serde(default)]
    pub x_scale: Scale,
    #[serde(default)]
    pub y_scale: Scale,
    #[serde(default = "default_bounds")]
    pub bounds: Vec<BoundKind>,
    #[serde(default = "default_true")]
    pub voronoi: bool,
    #[serde(default)]
    pub panels: Vec<f64>,
}

fn default_bounds() -> Vec<BoundKind> {
    vec![BoundKind::Upper, BoundKind::Lower]
}

fn default_true() -> bool {
    true
}

impl Default for PlotConfig {
    fn default() -> Self {
        PlotConfig {
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            bounds: default_bounds(),
            voronoi: true,
            panels: Vec::new(),
        }
    }
}

/// Every parameter of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    pub activation: ActivationModel,
    pub sigma: f64,
    pub delta: f64,
    pub drift: [f64; 2],
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// The single sweep axis and its grid.
    pub fn sweep_axis(&self) -> Result<(SweepAxis, &[f64])> {
        let given: Vec<(SweepAxis, &Vec<f64>)> = [
            (SweepAxis::Lambda, &self.sweep.lambda),
            (SweepAxis::Sigma, &self.sweep.sigma_nm),
            (SweepAxis::Delta, &self.sweep.delta_nm),
            (SweepAxis::Drift, &self.sweep.drift_nm),
        ]
        .into_iter()
        .filter_map(|(axis, v)| v.as_ref().map(|v| (axis, v)))
        .collect();
        match given.as_slice() {
            [(axis, values)] => Ok((*axis, values.as_slice())),
            [] => Err(LabError::config(
                "sweep",
                "no sweep axis given (expected one of lambda, sigma_nm, delta_nm, drift_nm)",
            )),
            many => Err(LabError::config(
                "sweep",
                format!(
                    "exactly one sweep axis allowed, found {}",
                    many.iter().map(|(a, _)| a.key()).collect::<Vec<_>>().join(", ")
                ),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(LabError::config(
                "name",
                "must be non-empty and use only ASCII letters, digits, '-' and '_'",
            ));
        }
        if self.replicates == 0 {
            return Err(LabError::config("replicates", "must be at least 1"));
        }
        positive("field.pitch_nm", self.field.pitch_nm)?;
        if self.field.rows == 0 {
            return Err(LabError::config("field.rows", "must be at least 1"));
        }
        if self.field.cols == 0 {
            return Err(LabError::config("field.cols", "must be at least 1"));
        }
        non_negative("error.sigma_nm", self.error.sigma_nm)?;
        non_negative("error.delta_nm", self.error.delta_nm)?;
        for (k, d) in self.error.drift_nm.iter().enumerate() {
            finite(&format!("error.drift_nm[{k}]"), *d)?;
        }

        let (axis, values) = self.sweep_axis()?;
        let key = format!("sweep.{}", axis.key());
        if values.is_empty() {
            return Err(LabError::config(&key, "grid is empty"));
        }
        for (i, &v) in values.iter().enumerate() {
            let field = format!("{key}[{i}]");
            match axis {
                SweepAxis::Lambda => positive(&field, v)?,
                SweepAxis::Sigma | SweepAxis::Delta => non_negative(&field, v)?,
                SweepAxis::Drift => finite(&field, v)?,
            }
            if values[..i].contains(&v) {
                return Err(LabError::config(field, format!("duplicate value {v}")));
            }
        }
        if self.plot.x_scale == Scale::Log {
            if let Some(i) = values.iter().position(|&v| v <= 0.0) {
                return Err(LabError::config(
                    "plot.x_scale",
                    format!("log axis needs positive sweep values, {key}[{i}] is {}", values[i]),
                ));
            }
        }
        for (i, &v) in self.plot.panels.iter().enumerate() {
            finite(&format!("plot.panels[{i}]"), v)?;
        }

        self.check_activation(axis == SweepAxis::Lambda)?;
        // every grid point must resolve to a valid model
        for &v in values {
            self.point(v)?;
        }
        for &v in &self.plot.panels {
            self.point(v)?;
        }
        Ok(())
    }

    fn check_activation(&self, lambda_swept: bool) -> Result<()> {
        let a = &self.activation;
        let need = |name: &str, v: Option<f64>| -> Result<f64> {
            v.ok_or_else(|| {
                LabError::config(
                    format!("activation.{name}"),
                    format!("required for mode \"{}\"", mode_name(a.mode)),
                )
            })
        };
        let reject = |name: &str, v: bool| -> Result<()> {
            if v {
                Err(LabError::config(
                    format!("activation.{name}"),
                    format!("not used by mode \"{}\"", mode_name(a.mode)),
                ))
            } else {
                Ok(())
            }
        };
        match a.mode {
            ActivationMode::Poisson => {
                reject("p", a.p.is_some())?;
                reject("frames", a.frames.is_some())?;
                reject("p_on_to_on", a.p_on_to_on.is_some())?;
                reject("p_off_to_on", a.p_off_to_on.is_some())?;
                if !lambda_swept {
                    positive("activation.lambda", need("lambda", a.lambda)?)?;
                }
            }
            ActivationMode::Binomial => {
                reject("lambda", a.lambda.is_some())?;
                reject("p_on_to_on", a.p_on_to_on.is_some())?;
                reject("p_off_to_on", a.p_off_to_on.is_some())?;
                self.frames()?;
                if !lambda_swept {
                    probability("activation.p", need("p", a.p)?)?;
                }
            }
            ActivationMode::Markov => {
                reject("lambda", a.lambda.is_some())?;
                reject("p", a.p.is_some())?;
                self.frames()?;
                probability("activation.p_on_to_on", need("p_on_to_on", a.p_on_to_on)?)?;
                if !lambda_swept {
                    probability("activation.p_off_to_on", need("p_off_to_on", a.p_off_to_on)?)?;
                }
            }
        }
        Ok(())
    }

    fn frames(&self) -> Result<u64> {
        match self.activation.frames {
            None => Err(LabError::config(
                "activation.frames",
                format!("required for mode \"{}\"", mode_name(self.activation.mode)),
            )),
            Some(0) => Err(LabError::config("activation.frames", "must be at least 1")),
            Some(f) => Ok(f),
        }
    }

    /// Parameters at sweep value `value`.
    pub fn point(&self, value: f64) -> Result<ParameterPoint> {
        let (axis, _) = self.sweep_axis()?;
        let mut sigma = self.error.sigma_nm;
        let mut delta = self.error.delta_nm;
        let mut drift = self.error.drift_nm;
        let mut lambda = None;
        match axis {
            SweepAxis::Lambda => lambda = Some(value),
            SweepAxis::Sigma => sigma = value,
            SweepAxis::Delta => delta = value,
            SweepAxis::Drift => drift = [value, value],
        }
        let a = &self.activation;
        let activation = match a.mode {
            ActivationMode::Poisson => ActivationModel::Poisson {
                lambda: lambda.or(a.lambda).unwrap_or(0.0),
            },
            ActivationMode::Binomial => {
                let frames = self.frames()?;
                let p = match lambda {
                    Some(l) => swept_probability(l, frames)?,
                    None => a.p.unwrap_or(0.0),
                };
                ActivationModel::Binomial { p, frames }
            }
            ActivationMode::Markov => {
                let frames = self.frames()?;
                let p11 = a.p_on_to_on.unwrap_or(0.0);
                let p01 = match lambda {
                    // stationary p = p01 / (1 − p11 + p01)
                    Some(l) => {
                        let p = swept_probability(l, frames)?;
                        if p >= 1.0 {
                            return Err(LabError::config(
                                "sweep.lambda",
                                format!("λ = {l} needs every frame ON, which a markov chain with p_off_to_on < 1 cannot reach"),
                            ));
                        }
                        p * (1.0 - p11) / (1.0 - p)
                    }
                    None => a.p_off_to_on.unwrap_or(0.0),
                };
                ActivationModel::Markov {
                    p_on_to_on: p11,
                    p_off_to_on: p01,
                    frames,
                }
            }
        };
        activation.validate().map_err(|e| {
            LabError::config("activation", format!("at sweep value {value}: {e}"))
        })?;
        Ok(ParameterPoint {
            activation,
            sigma,
            delta,
            drift,
        })
    }
}

fn mode_name(mode: ActivationMode) -> &'static str {
    match mode {
        ActivationMode::Poisson => "poisson",
        ActivationMode::Binomial => "binomial",
        ActivationMode::Markov => "markov",
    }
}

fn swept_probability(lambda: f64, frames: u64) -> Result<f64> {
    let p = lambda / frames as f64;
    if p > 1.0 {
        return Err(LabError::config(
            "sweep.lambda",
            format!("λ = {lambda} exceeds activation.frames = {frames}"),
        ));
    }
    Ok(p)
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(LabError::config(field, format!("{v} is not finite")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v < 0.0 {
        return Err(LabError::config(field, format!("must be ≥ 0, got {v}")));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v <= 0.0 {
        return Err(LabError::config(field, format!("must be > 0, got {v}")));
    }
    Ok(())
}

fn probability(field: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(LabError::config(field, format!("{v} is not a probability")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "t"
[field]
pitch_nm = 200.0
rows = 4
cols = 4
[activation]
mode = "poisson"
lambda = 25.0
[error]
sigma_nm = 25.0
[sweep]
delta_nm = [0.0, 10.0]
"#;

    fn field_of(text: &str) -> String {
        match ScenarioConfig::from_toml(text) {
            Err(LabError::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn base_parses_with_defaults() {
        let c = ScenarioConfig::from_toml(BASE).unwrap();
        assert_eq!(c.replicates, 16);
        assert_eq!(c.sweep_axis().unwrap().0, SweepAxis::Delta);
        assert_eq!(c.plot, PlotConfig::default());
        let p = c.point(10.0).unwrap();
        assert_eq!(p.delta, 10.0);
        assert_eq!(p.activation, ActivationModel::Poisson { lambda: 25.0 });
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::from_toml(BASE).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn exactly_one_axis() {
        let two = BASE.replace("delta_nm = [0.0, 10.0]", "delta_nm = [0.0]\nlambda = [1.0]");
        let err = ScenarioConfig::from_toml(&two).unwrap_err();
        assert_eq!(err.to_string(), "sweep: exactly one sweep axis allowed, found lambda, delta_nm");
        let none = BASE.replace("delta_nm = [0.0, 10.0]", "");
        assert_eq!(field_of(&none), "sweep");
    }

    #[test]
    fn field_precise_messages() {
        assert_eq!(field_of(&BASE.replace("pitch_nm = 200.0", "pitch_nm = 0.0")), "field.pitch_nm");
        assert_eq!(field_of(&BASE.replace("sigma_nm = 25.0", "sigma_nm = -1.0")), "error.sigma_nm");
        assert_eq!(field_of(&BASE.replace("[0.0, 10.0]", "[0.0, -10.0]")), "sweep.delta_nm[1]");
        assert_eq!(field_of(&BASE.replace("[0.0, 10.0]", "[5.0, 5.0]")), "sweep.delta_nm[1]");
        assert_eq!(field_of(&BASE.replace("[0.0, 10.0]", "[]")), "sweep.delta_nm");
        assert_eq!(field_of(&BASE.replace("name = \"t\"", "name = \"t\"\nreplicates = 0")), "replicates");
        assert_eq!(field_of(&BASE.replace("lambda = 25.0", "")), "activation.lambda");
        assert_eq!(field_of(&BASE.replace("lambda = 25.0", "lambda = 25.0\np = 0.1")), "activation.p");
        let log = format!("{BASE}[plot]\nx_scale = \"log\"\n");
        assert_eq!(field_of(&log), "plot.x_scale");
    }

    #[test]
    fn drift_may_be_negative() {
        let c = ScenarioConfig::from_toml(&BASE.replace("delta_nm = [0.0, 10.0]", "drift_nm = [-40.0, 160.0]")).unwrap();
        assert_eq!(c.point(-40.0).unwrap().drift, [-40.0, -40.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = BASE.replace("rows = 4", "rows = 4\nrow = 4");
        assert!(matches!(ScenarioConfig::from_toml(&bad), Err(LabError::Toml(_))));
    }

    #[test]
    fn lambda_sweep_rescales_probabilities() {
        let binom = BASE
            .replace("mode = \"poisson\"\nlambda = 25.0", "mode = \"binomial\"\nframes = 100")
            .replace("delta_nm = [0.0, 10.0]", "lambda = [10.0, 50.0]");
        let c = ScenarioConfig::from_toml(&binom).unwrap();
        assert_eq!(c.point(10.0).unwrap().activation, ActivationModel::Binomial { p: 0.1, frames: 100 });

        let markov = BASE
            .replace(
                "mode = \"poisson\"\nlambda = 25.0",
                "mode = \"markov\"\nframes = 1000\np_on_to_on = 0.5",
            )
            .replace("delta_nm = [0.0, 10.0]", "lambda = [10.0]");
        let c = ScenarioConfig::from_toml(&markov).unwrap();
        let model = c.point(10.0).unwrap().activation;
        assert!((model.lambda() - 10.0).abs() < 1e-9);

        let over = binom.replace("[10.0, 50.0]", "[500.0]");
        assert_eq!(field_of(&over), "sweep.lambda");
    }
}
