use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ise::{run_ise, OutcomeReport};
use crate::error::{Error, Result};
use crate::hamiltonian::{ChirpPulse, Hyperfine, SpinSystemParams};
use crate::propagator::IntegratorConfig;

/// Dipolar strength (MHz) used for β axes; gives B = 2.25 MHz at β = 45°.
pub const DEFAULT_DIPOLAR_D: f64 = 1.5;

fn default_d() -> f64 {
    DEFAULT_DIPOLAR_D
}

/// Axes of a parameter scan. An empty axis keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    #[serde(default)]
    pub omega0n: Vec<f64>,
    #[serde(default)]
    pub rate: Vec<f64>,
    #[serde(default)]
    pub omega1: Vec<f64>,
    /// Electron–nucleus angle in degrees; couplings follow the point-dipole form.
    #[serde(default)]
    pub beta_deg: Vec<f64>,
    #[serde(default = "default_d")]
    pub dipolar_d: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            omega0n: Vec::new(),
            rate: Vec::new(),
            omega1: Vec::new(),
            beta_deg: Vec::new(),
            dipolar_d: DEFAULT_DIPOLAR_D,
        }
    }
}

impl ScanGrid {
    pub fn is_empty(&self) -> bool {
        self.omega0n.is_empty() && self.rate.is_empty() && self.omega1.is_empty() && self.beta_deg.is_empty()
    }

    pub fn len(&self) -> usize {
        [&self.omega0n, &self.rate, &self.omega1, &self.beta_deg]
            .iter()
            .map(|a| a.len().max(1))
            .product()
    }

    /// Grid points in row-major order (ω0n slowest, β fastest).
    pub fn points(&self, base: &SpinSystemParams, pulse: &ChirpPulse) -> Vec<(SpinSystemParams, ChirpPulse, Option<f64>)> {
        let or = |axis: &Vec<f64>, v: f64| if axis.is_empty() { vec![v] } else { axis.clone() };
        let betas: Vec<Option<f64>> = if self.beta_deg.is_empty() {
            vec![None]
        } else {
            self.beta_deg.iter().copied().map(Some).collect()
        };
        let mut out = Vec::with_capacity(self.len());
        for &w0 in &or(&self.omega0n, base.omega0n) {
            for &k in &or(&self.rate, pulse.rate) {
                for &w1 in &or(&self.omega1, pulse.omega1) {
                    for &beta in &betas {
                        let mut p = SpinSystemParams { omega0n: w0, ..*base };
                        if let Some(b) = beta {
                            p.hyperfine = Hyperfine::Dipolar {
                                d: self.dipolar_d,
                                beta: b.to_radians(),
                            };
                        }
                        let pl = ChirpPulse {
                            rate: k,
                            omega1: w1,
                            ..*pulse
                        };
                        out.push((p, pl, beta));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub omega0n: f64,
    pub rate: f64,
    pub omega1: f64,
    pub beta_deg: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub report: Option<OutcomeReport>,
    pub error: Option<String>,
}

/// One [`run_ise`] per grid point, run in parallel; per-point failures are kept
/// in the table.
pub fn scan_parameters(
    grid: &ScanGrid,
    base: &SpinSystemParams,
    pulse: &ChirpPulse,
    cfg: &IntegratorConfig,
) -> Result<Vec<ScanPoint>> {
    if grid.is_empty() {
        return Err(Error::Empty("scan grid"));
    }
    let points = grid.points(base, pulse);
    Ok(points
        .par_iter()
        .map(|(p, pl, beta)| {
            let (a, b) = p.hyperfine.ab();
            let (report, error) = match run_ise(pl, p, cfg) {
                Ok(run) => (Some(run.report), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ScanPoint {
                omega0n: p.omega0n,
                rate: pl.rate,
                omega1: pl.omega1,
                beta_deg: *beta,
                a,
                b,
                report,
                error,
            }
        })
        .collect())
}
