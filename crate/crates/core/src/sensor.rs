//! Physical parameters of the two-level sensor.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Electron gyromagnetic ratio over 2 pi, in Hz/T.
pub const ELECTRON_GAMMA_HZ_PER_T: f64 = 28.02e9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid sensor parameter {name}: {msg}")]
pub struct SensorError {
    pub name: &'static str,
    pub msg: String,
}

/// Sensor constants.
///
/// `gamma` is stored in angular units (rad s^-1 T^-1); the amplitude limit
/// divides by 2 pi explicitly. Serialised keys carry their units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    #[serde(rename = "gamma_rad_per_s_per_t")]
    pub gamma: f64,
    /// Coherence time; may be infinite.
    #[serde(rename = "t2_s")]
    pub t2: f64,
    /// Rabi frequency Omega / 2 pi.
    #[serde(rename = "rabi_hz")]
    pub rabi_freq: f64,
    /// Initialisation plus readout overhead per sequence.
    #[serde(rename = "tm_s")]
    pub tm: f64,
    pub readout_c: f64,
    /// Replaces the pi-pulse duration derived from `rabi_freq` when set.
    #[serde(rename = "tpi_override_s", skip_serializing_if = "Option::is_none")]
    pub tpi_override: Option<f64>,
    /// Stretch exponent of the coherence decay `exp(-(span/T2)^n)`; 1 is a
    /// plain exponential.
    pub decay_stretch: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            gamma: 2.0 * PI * ELECTRON_GAMMA_HZ_PER_T,
            t2: 14e-6,
            rabi_freq: 25e6,
            tm: 3e-6,
            readout_c: 0.02,
            tpi_override: None,
            decay_stretch: 1.0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<(), SensorError> {
        let positive = |name, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(SensorError {
                    name,
                    msg: format!("must be positive, got {v}"),
                })
            }
        };
        positive("gamma_rad_per_s_per_t", self.gamma)?;
        positive("t2_s", self.t2)?;
        positive("rabi_hz", self.rabi_freq)?;
        positive("tm_s", self.tm)?;
        positive("decay_stretch", self.decay_stretch)?;
        if !(self.readout_c > 0.0 && self.readout_c <= 1.0) {
            return Err(SensorError {
                name: "readout_c",
                msg: format!("must lie in (0, 1], got {}", self.readout_c),
            });
        }
        if let Some(t) = self.tpi_override {
            positive("tpi_override_s", t)?;
        }
        for (name, v) in [
            ("gamma_rad_per_s_per_t", self.gamma),
            ("rabi_hz", self.rabi_freq),
        ] {
            if !v.is_finite() {
                return Err(SensorError {
                    name,
                    msg: "must be finite".into(),
                });
            }
        }
        Ok(())
    }

    /// Duration of a pi pulse, `1 / (2 rabi_freq)` unless overridden.
    pub fn tpi(&self) -> f64 {
        self.tpi_override.unwrap_or(1.0 / (2.0 * self.rabi_freq))
    }

    /// Angular drive rate during a pulse, consistent with [`Self::tpi`].
    pub fn drive_rate(&self) -> f64 {
        PI / self.tpi()
    }

    pub fn gamma_hz_per_t(&self) -> f64 {
        self.gamma / (2.0 * PI)
    }

    /// Largest peak-to-peak field the pi pulses still invert:
    /// `((gamma / 2 pi) tpi)^-1`.
    pub fn amplitude_limit(&self) -> f64 {
        1.0 / (self.gamma_hz_per_t() * self.tpi())
    }
}

pub fn pi_pulse_duration(p: &SensorParams) -> f64 {
    p.tpi()
}

pub fn amplitude_limit(p: &SensorParams) -> f64 {
    p.amplitude_limit()
}

/// Rotating-frame amplitudes of the two sensor levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorState {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl SensorState {
    pub fn ground() -> Self {
        Self {
            c0: Complex64::new(1.0, 0.0),
            c1: Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    /// Probability of finding the sensor in the upper level.
    pub fn excited_population(&self) -> f64 {
        self.c1.norm_sqr()
    }

    /// Bloch vector `(x, y, z)` with `z = +1` for the ground level.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let rho01 = self.c0 * self.c1.conj();
        [
            2.0 * rho01.re,
            -2.0 * rho01.im,
            self.c0.norm_sqr() - self.c1.norm_sqr(),
        ]
    }

    pub fn apply(&mut self, u: &[[Complex64; 2]; 2]) {
        let c0 = u[0][0] * self.c0 + u[0][1] * self.c1;
        let c1 = u[1][0] * self.c0 + u[1][1] * self.c1;
        self.c0 = c0;
        self.c1 = c1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_rabi(rabi: f64) -> SensorParams {
        SensorParams {
            rabi_freq: rabi,
            ..SensorParams::default()
        }
    }

    #[test]
    fn pi_pulse_durations() {
        assert!((pi_pulse_duration(&with_rabi(25e6)) - 20e-9).abs() < 1e-20);
        assert!((pi_pulse_duration(&with_rabi(500e6)) - 1e-9).abs() < 1e-21);
        assert!((pi_pulse_duration(&with_rabi(250e6)) - 2e-9).abs() < 1e-21);
    }

    #[test]
    fn amplitude_limit_values() {
        let p = SensorParams {
            gamma: 1.7608e11,
            ..SensorParams::default()
        };
        let lim = amplitude_limit(&p);
        assert!((lim - 1.784e-3).abs() < 1e-6, "{lim}");

        let halved = SensorParams {
            tpi_override: Some(10e-9),
            ..p
        };
        assert!((amplitude_limit(&halved) / lim - 2.0).abs() < 1e-12);
        let doubled_gamma = SensorParams {
            gamma: 2.0 * p.gamma,
            ..p
        };
        assert!((amplitude_limit(&doubled_gamma) / lim - 0.5).abs() < 1e-12);
    }

    #[test]
    fn amplitude_limit_identity() {
        let p = SensorParams::default();
        let v = amplitude_limit(&p) * p.gamma_hz_per_t() * p.tpi();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn defaults() {
        let p = SensorParams::default();
        assert!((p.gamma_hz_per_t() - 28.02e9).abs() < 1.0);
        assert_eq!(p.t2, 14e-6);
        assert_eq!(p.tm, 3e-6);
        assert_eq!(p.readout_c, 0.02);
        assert_eq!(p.rabi_freq, 25e6);
        p.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_values() {
        let p = SensorParams {
            readout_c: 1.5,
            ..SensorParams::default()
        };
        assert_eq!(p.validate().unwrap_err().name, "readout_c");
        let p = SensorParams {
            t2: -1.0,
            ..SensorParams::default()
        };
        assert!(p.validate().is_err());
        let p = SensorParams {
            t2: f64::INFINITY,
            ..SensorParams::default()
        };
        p.validate().unwrap();
    }

    #[test]
    fn config_keys() {
        let text = r#"
            gamma_rad_per_s_per_t = 1.76e11
            t2_s = 1e-5
            rabi_hz = 5e7
            tm_s = 2e-6
            readout_c = 0.05
            tpi_override_s = 1.2e-8
        "#;
        let p: SensorParams = toml::from_str(text).unwrap();
        assert_eq!(p.tpi(), 1.2e-8);
        assert_eq!(p.decay_stretch, 1.0);
    }

    #[test]
    fn ground_state_bloch_vector() {
        let s = SensorState::ground();
        assert_eq!(s.bloch_vector(), [0.0, 0.0, 1.0]);
        assert_eq!(s.excited_population(), 0.0);
    }
}
