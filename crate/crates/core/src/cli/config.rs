use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::acquisition::SweepConfig;
use crate::analysis::SpectrumWindow;
use crate::sensor::SensorParams;
use crate::sequence::Protocol;
use crate::sim::{Backend, SimSettings};
use crate::waveform::{parse_waveform_expr, SampledWaveform, TriggeredSignal, Waveform};

/// A scenario file. Every block except `signal` has defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub backend: Backend,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub sensor: SensorParams,
    #[serde(default)]
    pub sim: SimSettings,
    pub signal: Option<SignalConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub analysis: Vec<AnalysisKind>,
    #[serde(default)]
    pub analysis_options: AnalysisOptions,
    #[serde(default)]
    pub bode: BodeConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub reconstruct: ReconstructConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    /// One of `square270`, `sine4MHz`, `fig4`.
    pub builtin: Option<String>,
    /// Expression in `t` (seconds), evaluated in tesla.
    pub expr: Option<String>,
    /// Sample file, relative to the scenario file.
    pub file: Option<PathBuf>,
    pub trep_s: f64,
    pub lowpass_rise_10_90_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    RiseTime,
    Spectrum,
    InverseFilter,
    BaselineNoise,
    Modulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub spectrum_window: SpectrumWindow,
    pub inverse_lambda: f64,
    /// Fraction of the peak |B_true| below which the field counts as quiet.
    pub quiet_threshold: f64,
    /// Grid step of the modulation dump.
    pub modulation_step_s: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            spectrum_window: SpectrumWindow::None,
            inverse_lambda: 1e-4,
            quiet_threshold: 0.0,
            modulation_step_s: 0.5e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodeConfig {
    /// Defaults to the sweep's `tint_s`, then 20 ns.
    pub tint_s: Option<f64>,
    pub f_max_hz: f64,
    pub f_step_hz: f64,
    pub impulse_fwhm_s: f64,
    pub impulse_step_s: f64,
    /// Defaults to the signal's repetition time, then 344 ns.
    pub trep_s: Option<f64>,
}

impl Default for BodeConfig {
    fn default() -> Self {
        Self {
            tint_s: None,
            f_max_hz: 100e6,
            f_step_hz: 1e6,
            impulse_fwhm_s: 2e-9,
            impulse_step_s: 0.25e-9,
            trep_s: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub tint_s: f64,
    /// Defaults to the signal's repetition time, then 344 ns.
    pub tw_s: Option<f64>,
    pub k_min: i64,
    pub k_max: i64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            tint_s: 20e-9,
            tw_s: None,
            k_min: 1,
            k_max: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub protocols: Vec<Protocol>,
    /// Ramsey sample step; defaults to the sweep's.
    pub ramsey_ts_s: Option<f64>,
    /// Ramsey sweep end; defaults to the sweep's.
    pub ramsey_t_stop_s: Option<f64>,
    pub window: usize,
    /// Extra clearance around the sensing window when selecting baseline
    /// points.
    pub quiet_margin_s: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            protocols: vec![Protocol::IntegrativeRamsey, Protocol::DifferentialEcho],
            ramsey_ts_s: None,
            ramsey_t_stop_s: None,
            window: 4,
            quiet_margin_s: 4e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub window: usize,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self { window: 4 }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn sweep(&self) -> Result<&SweepConfig, CliError> {
        self.sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sweep] block".into()))
    }

    /// Build the triggered signal, resolving sample files against `base`.
    pub fn signal(&self, base: &Path) -> Result<TriggeredSignal, CliError> {
        let s = self
            .signal
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [signal] block".into()))?;
        let given = [s.builtin.is_some(), s.expr.is_some(), s.file.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(CliError::Config(
                "[signal] needs exactly one of builtin, expr, file".into(),
            ));
        }
        let w = if let Some(name) = &s.builtin {
            Waveform::builtin(name).map_err(|e| CliError::Config(e.to_string()))?
        } else if let Some(src) = &s.expr {
            parse_waveform_expr(src).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            let path = base.join(s.file.as_ref().expect("checked above"));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Waveform::Samples(
                SampledWaveform::from_text(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            )
        };
        let sig =
            TriggeredSignal::new(w, s.trep_s).map_err(|e| CliError::Config(e.to_string()))?;
        match s.lowpass_rise_10_90_s {
            Some(r) => sig
                .with_lowpass(r)
                .map_err(|e| CliError::Config(e.to_string())),
            None => Ok(sig),
        }
    }

    pub fn trep(&self) -> Option<f64> {
        self.signal.as_ref().map(|s| s.trep_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario() {
        let c = ScenarioConfig::parse(
            r#"
            seed = 3
            [signal]
            builtin = "square270"
            trep_s = 700e-9
            [sweep]
            protocol = "differential_echo"
            t_start_s = 0.0
            t_stop_s = 400e-9
            ts_s = 4e-9
            tint_s = 20e-9
            k = 2
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.backend, Backend::Filter);
        assert_eq!(c.sensor, SensorParams::default());
        assert_eq!(c.sweep().unwrap().n_points(), 101);
        let sig = c.signal(Path::new(".")).unwrap();
        assert_eq!(sig.trep(), 700e-9);
    }

    #[test]
    fn signal_source_must_be_unique() {
        let c = ScenarioConfig::parse(
            r#"
            [signal]
            builtin = "fig4"
            expr = "1e-6"
            trep_s = 1e-6
            "#,
        )
        .unwrap();
        assert!(matches!(c.signal(Path::new(".")), Err(CliError::Config(_))));
    }

    #[test]
    fn missing_sample_file_is_io() {
        let c = ScenarioConfig::parse(
            r#"
            [signal]
            file = "does/not/exist.txt"
            trep_s = 1e-6
            "#,
        )
        .unwrap();
        assert!(matches!(c.signal(Path::new(".")), Err(CliError::Io(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::parse("sede = 1").is_err());
    }
}
