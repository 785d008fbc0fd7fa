use serde::Serialize;

use super::ise::window_covers_both;
use crate::error::{Error, Result};
use crate::hamiltonian::{h_se_static, ChirpPulse, IseHamiltonian, SpinSystemParams};
use crate::propagator::{evolve, IntegratorConfig, Observable};
use crate::spin::DensityState;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AseBuildup {
    /// ⟨Iz⟩ at the end of each sweep.
    pub iz_after_sweep: Vec<f64>,
    pub sz_after_sweep: Vec<f64>,
    /// Change of ⟨Iz⟩ produced by each sweep (the first is relative to zero).
    pub increments: Vec<f64>,
}

impl AseBuildup {
    /// Number of sign changes between consecutive non-zero increments.
    pub fn increment_sign_changes(&self) -> usize {
        let signs: Vec<f64> = self
            .increments
            .iter()
            .filter(|d| **d != 0.0)
            .map(|d| d.signum())
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Repeated sweeps through the DQ condition only. After each sweep the offset
/// jumps back to the window start; the state carries over, optionally after a
/// microwave-off delay of `delay` µs.
pub fn run_ase(
    pulse: &ChirpPulse,
    p: &SpinSystemParams,
    n_sweeps: usize,
    delay: f64,
    cfg: &IntegratorConfig,
) -> Result<AseBuildup> {
    pulse.validate()?;
    p.validate()?;
    if n_sweeps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_sweeps",
            reason: "at least one sweep is required".into(),
        });
    }
    if !(delay >= 0.0 && delay.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "delay",
            reason: format!("must be non-negative, got {delay}"),
        });
    }
    let (sweep, _) = window_covers_both(pulse, p)?;
    let (start, end) = pulse.window();
    let inside = |x: f64| x >= start && x <= end;
    if inside(sweep.zq) {
        return Err(Error::WindowCoversZq { start, end, zq: sweep.zq });
    }
    if !inside(sweep.dq) {
        return Err(Error::WindowMissesDq { start, end, dq: sweep.dq });
    }

    let cfg = IntegratorConfig {
        sample_stride: Some(usize::MAX),
        ..super::resolved(cfg, pulse, Some(p))
    };
    let h = IseHamiltonian::new(pulse, p);
    let h_delay = h_se_static(p, pulse.offset_start + p.packet_offset, 0.0);

    let mut rho = DensityState::electron_polarization();
    let mut out = AseBuildup {
        iz_after_sweep: Vec::with_capacity(n_sweeps),
        sz_after_sweep: Vec::with_capacity(n_sweeps),
        increments: Vec::with_capacity(n_sweeps),
    };
    let mut last_iz = 0.0;
    for k in 0..n_sweeps {
        if k > 0 && delay > 0.0 {
            rho = evolve(&rho, |_| h_delay, (0.0, delay), &cfg)?.final_state;
        }
        let traj = evolve(&rho, |t| h.at(t), (0.0, pulse.duration()), &cfg)?;
        let iz = traj.final_value(Observable::Iz).unwrap_or(0.0);
        out.iz_after_sweep.push(iz);
        out.sz_after_sweep.push(traj.final_value(Observable::Sz).unwrap_or(0.0));
        out.increments.push(iz - last_iz);
        last_iz = iz;
        rho = traj.final_state;
    }
    Ok(out)
}
