use serde::Serialize;

use crate::sensor::SensorParams;

pub const SENSITIVITY_CSV_HEADER: &str =
    "k,bmin_t_per_sqrthz,branch_k1,branch_khalf,branch_decoh";

/// Minimum detectable field per root hertz:
/// `sqrt(tm + 2 k tw) exp(2 k tw / T2) / (2 gamma k C tint)`.
pub fn bmin(p: &SensorParams, tint: f64, tw: f64, k: f64) -> f64 {
    (p.tm + 2.0 * k * tw).sqrt() * (2.0 * k * tw / p.t2).exp()
        / (2.0 * p.gamma * k * p.readout_c * tint)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCurve {
    pub k: Vec<u64>,
    pub bmin: Vec<f64>,
    /// Overhead-dominated asymptote, proportional to `1/k`.
    pub branch_k1: Vec<f64>,
    /// Sensing-time-dominated asymptote, proportional to `k^-1/2`.
    pub branch_khalf: Vec<f64>,
    /// `k^-1/2` branch including the coherence decay.
    pub branch_decoh: Vec<f64>,
}

impl SensitivityCurve {
    /// Smallest sampled value and its `k`.
    pub fn minimum(&self) -> Option<(u64, f64)> {
        self.k
            .iter()
            .zip(&self.bmin)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, b)| (*k, *b))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SENSITIVITY_CSV_HEADER);
        out.push('\n');
        for i in 0..self.k.len() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                self.k[i], self.bmin[i], self.branch_k1[i], self.branch_khalf[i], self.branch_decoh[i]
            ));
        }
        out
    }
}

pub fn bmin_curve(p: &SensorParams, tint: f64, tw: f64, k_values: &[u64]) -> SensitivityCurve {
    let denom = |k: f64| 2.0 * p.gamma * k * p.readout_c * tint;
    let mut c = SensitivityCurve {
        k: k_values.to_vec(),
        bmin: Vec::with_capacity(k_values.len()),
        branch_k1: Vec::with_capacity(k_values.len()),
        branch_khalf: Vec::with_capacity(k_values.len()),
        branch_decoh: Vec::with_capacity(k_values.len()),
    };
    for &k in k_values {
        let k = k as f64;
        c.bmin.push(bmin(p, tint, tw, k));
        c.branch_k1.push(p.tm.sqrt() / denom(k));
        let half = (2.0 * k * tw).sqrt() / denom(k);
        c.branch_khalf.push(half);
        c.branch_decoh.push(half * (2.0 * k * tw / p.t2).exp());
    }
    c
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
