use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ise::{run_ise, window_covers_both, Classification};
use crate::error::{Error, Result};
use crate::hamiltonian::{ChirpPulse, SpinSystemParams};
use crate::propagator::{IntegratorConfig, Observable};

/// Inhomogeneous EPR line as weighted spin packets. Offsets are sorted and the
/// weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EprLine {
    offsets: Vec<f64>,
    weights: Vec<f64>,
}

/// Serializable description of an [`EprLine`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum LineShape {
    /// Packets on an even grid over center ± `half_span` (default 2σ), Gaussian weights.
    Gaussian {
        #[serde(default)]
        center: f64,
        sigma: f64,
        packets: usize,
        #[serde(default)]
        half_span: Option<f64>,
    },
    /// Offsets drawn from a normal distribution, equal weights.
    Sampled {
        #[serde(default)]
        center: f64,
        sigma: f64,
        packets: usize,
    },
    Uniform { start: f64, end: f64, packets: usize },
    Explicit {
        offsets: Vec<f64>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

impl LineShape {
    /// `seed` only matters for [`LineShape::Sampled`].
    pub fn build(&self, seed: u64) -> Result<EprLine> {
        match self {
            LineShape::Gaussian {
                center,
                sigma,
                packets,
                half_span,
            } => EprLine::gaussian(*center, *sigma, *packets, half_span.unwrap_or(2.0 * sigma)),
            LineShape::Sampled { center, sigma, packets } => EprLine::sampled(*center, *sigma, *packets, seed),
            LineShape::Uniform { start, end, packets } => EprLine::uniform(*start, *end, *packets),
            LineShape::Explicit { offsets, weights } => {
                let weights = weights.clone().unwrap_or_else(|| vec![1.0; offsets.len()]);
                EprLine::explicit(offsets.clone(), weights)
            }
        }
    }
}

fn grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (start + end)];
    }
    (0..n)
        .map(|k| start + (end - start) * k as f64 / (n - 1) as f64)
        .collect()
}

impl EprLine {
    pub fn explicit(offsets: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::Empty("EPR line"));
        }
        if offsets.len() != weights.len() {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("{} weights for {} offsets", weights.len(), offsets.len()),
            });
        }
        if offsets.iter().chain(&weights).any(|x| !x.is_finite()) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "offsets must be finite and weights finite and non-negative".into(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "weights sum to zero".into(),
            });
        }
        let mut pairs: Vec<(f64, f64)> = offsets.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            offsets: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn gaussian(center: f64, sigma: f64, packets: usize, half_span: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be positive, got {sigma}"),
            });
        }
        let offsets = grid(center - half_span, center + half_span, packets);
        let weights = offsets
            .iter()
            .map(|x| (-0.5 * ((x - center) / sigma).powi(2)).exp())
            .collect();
        Self::explicit(offsets, weights)
    }

    pub fn sampled(center: f64, sigma: f64, packets: usize, seed: u64) -> Result<Self> {
        let normal = Normal::new(center, sigma).map_err(|e| Error::InvalidParameter {
            name: "sigma",
            reason: e.to_string(),
        })?;
        let mut rng = StdRng::seed_from_u64(seed);
        let offsets = (0..packets).map(|_| normal.sample(&mut rng)).collect();
        Self::explicit(offsets, vec![1.0; packets])
    }

    pub fn uniform(start: f64, end: f64, packets: usize) -> Result<Self> {
        Self::explicit(grid(start, end, packets), vec![1.0; packets])
    }

    /// Gaussian centred on the sweep window with ±2σ filling it.
    pub fn default_for(pulse: &ChirpPulse, packets: usize) -> Result<Self> {
        let (lo, hi) = pulse.window();
        let sigma = 0.25 * (hi - lo);
        Self::gaussian(0.5 * (lo + hi), sigma, packets, 2.0 * sigma)
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketResult {
    pub packet_offset: f64,
    pub weight: f64,
    /// NaN when the packet's run failed.
    pub iz_final: f64,
    pub sz_final: f64,
    /// Both matching offsets of this packet fall inside the sweep window.
    pub in_window: bool,
    pub classification: Option<Classification>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DnpProfile {
    pub packets: Vec<PacketResult>,
    /// Σ weight·⟨Iz⟩_final over packets that ran.
    pub aggregate_iz: f64,
}

impl DnpProfile {
    pub fn in_window(&self) -> impl Iterator<Item = &PacketResult> {
        self.packets.iter().filter(|p| p.in_window)
    }
}

/// Independent [`run_ise`] for every packet of `line`; failures are recorded per
/// packet rather than aborting the profile.
pub fn run_epr_line(
    pulse: &ChirpPulse,
    template: &SpinSystemParams,
    line: &EprLine,
    cfg: &IntegratorConfig,
) -> Result<DnpProfile> {
    if line.is_empty() {
        return Err(Error::Empty("EPR line"));
    }
    let packets: Vec<PacketResult> = line
        .offsets
        .par_iter()
        .zip(line.weights.par_iter())
        .map(|(&offset, &weight)| {
            let p = template.with_packet_offset(offset);
            let in_window = window_covers_both(pulse, &p).map(|(_, c)| c).unwrap_or(false);
            match run_ise(pulse, &p, cfg) {
                Ok(run) => PacketResult {
                    packet_offset: offset,
                    weight,
                    iz_final: run.report.iz_final,
                    sz_final: run.trajectory.final_value(Observable::Sz).unwrap_or(f64::NAN),
                    in_window,
                    classification: Some(run.report.classification),
                    error: None,
                },
                Err(e) => PacketResult {
                    packet_offset: offset,
                    weight,
                    iz_final: f64::NAN,
                    sz_final: f64::NAN,
                    in_window,
                    classification: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let aggregate_iz = packets
        .iter()
        .filter(|p| p.error.is_none())
        .map(|p| p.weight * p.iz_final)
        .sum();
    Ok(DnpProfile { packets, aggregate_iz })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_are_sorted_and_normalized() {
        let line = EprLine::explicit(vec![3.0, -1.0, 2.0], vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(line.offsets(), &[-1.0, 2.0, 3.0]);
        assert_eq!(line.weights(), &[0.5, 0.25, 0.25]);
        let g = EprLine::gaussian(0.0, 10.0, 21, 20.0).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g.offsets()[10], 0.0);
        assert!(g.weights()[10] > g.weights()[0]);
    }

    #[test]
    fn line_validation() {
        assert!(matches!(EprLine::explicit(vec![], vec![]), Err(Error::Empty(_))));
        assert!(EprLine::explicit(vec![1.0], vec![-1.0]).is_err());
        assert!(EprLine::explicit(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(EprLine::gaussian(0.0, 0.0, 3, 1.0).is_err());
    }

    #[test]
    fn sampled_line_is_seeded() {
        let a = EprLine::sampled(0.0, 50.0, 16, 7).unwrap();
        let b = EprLine::sampled(0.0, 50.0, 16, 7).unwrap();
        let c = EprLine::sampled(0.0, 50.0, 16, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn default_line_fills_window() {
        let pulse = ChirpPulse::new(8.0, -300.0, 300.0, 1.5).unwrap();
        let line = EprLine::default_for(&pulse, 25).unwrap();
        assert_eq!(line.offsets()[0], -300.0);
        assert_eq!(line.offsets()[24], 300.0);
    }

    #[test]
    fn shapes_build() {
        let s: LineShape = serde_json::from_str(r#"{"shape":"uniform","start":-10,"end":10,"packets":5}"#).unwrap();
        assert_eq!(s.build(0).unwrap().offsets(), &[-10.0, -5.0, 0.0, 5.0, 10.0]);
        let e: LineShape = serde_json::from_str(r#"{"shape":"explicit","offsets":[1,2]}"#).unwrap();
        assert_eq!(e.build(0).unwrap().weights(), &[0.5, 0.5]);
    }

    #[test]
    fn far_packet_stays_unpolarized() {
        let pulse = ChirpPulse::new(10.0, -150.0, 150.0, 20.0).unwrap();
        let p = SpinSystemParams::new(100.0, 0.0, 2.25).unwrap();
        let line = EprLine::explicit(vec![5000.0], vec![1.0]).unwrap();
        let profile = run_epr_line(&pulse, &p, &line, &IntegratorConfig::default().with_dt(0.01)).unwrap();
        assert!(profile.packets[0].iz_final.abs() < 1e-3);
        assert!(!profile.packets[0].in_window);
    }
}
