//! Scenario files for the six figure reproductions, embedded at build time.

use crate::config::ScenarioConfig;
use crate::error::{LabError, Result};

pub const PRESET_NAMES: [&str; 6] = ["fig1f", "fig2c", "fig3c", "fig3d", "fig4c", "fig4d"];

pub fn preset_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1f" => include_str!("../presets/fig1f.toml"),
        "fig2c" => include_str!("../presets/fig2c.toml"),
        "fig3c" => include_str!("../presets/fig3c.toml"),
        "fig3d" => include_str!("../presets/fig3d.toml"),
        "fig4c" => include_str!("../presets/fig4c.toml"),
        "fig4d" => include_str!("../presets/fig4d.toml"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let text = preset_source(name).ok_or_else(|| LabError::UnknownPreset(name.to_string()))?;
    ScenarioConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepAxis;

    #[test]
    fn every_preset_validates() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert_eq!(c.name, name);
            assert_eq!((c.field.rows, c.field.cols, c.field.pitch_nm), (16, 16, 200.0));
            assert_eq!(c.replicates, 16);
        }
        assert!(matches!(preset("fig9z"), Err(LabError::UnknownPreset(_))));
    }

    #[test]
    fn drift_preset_spans_two_periods() {
        let c = preset("fig4c").unwrap();
        let (axis, values) = c.sweep_axis().unwrap();
        assert_eq!(axis, SweepAxis::Drift);
        let span = values.last().unwrap() - values.first().unwrap();
        assert_eq!(span, 2.0 * c.field.pitch_nm);
    }
}
