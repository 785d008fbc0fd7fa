use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{ChirpHamiltonian, ChirpPulse};
use crate::propagator::{evolve, IntegratorConfig, Series, Trajectory};
use crate::spin::{DensityState, Op2};

/// Starting state of a single electron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    /// ρ0 = Sz.
    Z,
    /// ρ0 = sin φ·Sx + cos φ·Sy, φ in degrees.
    Coherence { phi_deg: f64 },
}

impl InitialState {
    pub fn density(self) -> DensityState<2> {
        match self {
            InitialState::Z => DensityState::polarization(),
            InitialState::Coherence { phi_deg } => DensityState::coherence(phi_deg.to_radians()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChirpRun {
    pub packet_offsets: Vec<f64>,
    pub packets: Vec<Trajectory<2>>,
    /// Equal-weight average over packets, on the shared time grid.
    pub mean: Trajectory<2>,
}

/// Sweep independent electron packets and average them.
pub fn run_chirp_single(
    pulse: &ChirpPulse,
    packet_offsets: &[f64],
    rho0: InitialState,
    cfg: &IntegratorConfig,
) -> Result<ChirpRun> {
    if packet_offsets.is_empty() {
        return Err(Error::Empty("packet list"));
    }
    pulse.validate()?;
    let rho = rho0.density();
    let duration = pulse.duration();
    let max_offset = packet_offsets.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    let nu_max = pulse.offset_start.abs().max(pulse.offset_end.abs()) + max_offset;
    let cfg = IntegratorConfig {
        dt: Some(cfg.step_for(duration, nu_max.max(pulse.omega1))),
        ..*cfg
    };

    let packets = packet_offsets
        .par_iter()
        .map(|&offset| {
            let h = ChirpHamiltonian::new(pulse, offset);
            evolve(&rho, |t| h.at(t), (0.0, duration), &cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mean = average(&packets);
    Ok(ChirpRun {
        packet_offsets: packet_offsets.to_vec(),
        packets,
        mean,
    })
}

fn average(runs: &[Trajectory<2>]) -> Trajectory<2> {
    let w = 1.0 / runs.len() as f64;
    let first = &runs[0];
    let series = first
        .series
        .iter()
        .enumerate()
        .map(|(k, s)| Series {
            observable: s.observable,
            values: (0..s.values.len())
                .map(|i| runs.iter().map(|r| r.series[k].values[i]).sum::<f64>() * w)
                .collect(),
        })
        .collect();
    let matrix = runs
        .iter()
        .fold(Op2::zeros(), |acc, r| acc + r.final_state.matrix())
        .map(|z| z * w);
    Trajectory {
        times: first.times.clone(),
        series,
        final_state: DensityState::from_matrix_unchecked(matrix),
        states: None,
        dt: first.dt,
    }
}
