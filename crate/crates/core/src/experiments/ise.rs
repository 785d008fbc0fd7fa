use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{matching_offsets, ChirpPulse, IseHamiltonian, MatchingOffsets, SpinSystemParams};
use crate::propagator::{evolve, evolve_converged, IntegratorConfig, Observable, Trajectory};
use crate::spin::DensityState;

/// Hysteresis for calling a DSE: the final |⟨Iz⟩| must fall this fraction below
/// the post-DQ value.
pub const DSE_EPSILON: f64 = 0.05;

/// Share of the DQ→ZQ interval, centred on its midpoint, over which ⟨Iz⟩ is
/// averaged to get the post-DQ polarization.
const PLATEAU_FRACTION: f64 = 0.2;

/// Post-DQ polarizations below this are round-off, not transfer.
const POLARIZATION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Classification {
    Ise,
    Dse,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeReport {
    pub classification: Classification,
    pub iz_after_dq: f64,
    pub iz_final: f64,
    pub zqx_at_zq: f64,
    pub zqy_at_zq: f64,
    /// Coherence-based call: ISE when ⟨ZQy⟩ > ⟨ZQx⟩ at the ZQ matching time.
    pub predicted: Classification,
    pub predictor_agrees: bool,
    /// Same comparison on magnitudes, |⟨ZQy⟩| > |⟨ZQx⟩|.
    pub magnitude_predictor_agrees: bool,
    pub warning: Option<String>,
}

impl OutcomeReport {
    fn degenerate(iz_final: f64, warning: String) -> Self {
        Self {
            classification: Classification::None,
            iz_after_dq: f64::NAN,
            iz_final,
            zqx_at_zq: f64::NAN,
            zqy_at_zq: f64::NAN,
            predicted: Classification::None,
            predictor_agrees: false,
            magnitude_predictor_agrees: false,
            warning: Some(warning),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IseRun {
    pub trajectory: Trajectory<4>,
    pub report: OutcomeReport,
}

/// Matching offsets of `p`, in the pulse's sweep coordinate (electron offset
/// minus packet offset), and whether the window contains both.
pub fn window_covers_both(pulse: &ChirpPulse, p: &SpinSystemParams) -> Result<(MatchingOffsets, bool)> {
    let m = matching_offsets(p, pulse.omega1)?;
    let sweep = MatchingOffsets {
        dq: m.dq - p.packet_offset,
        zq: m.zq - p.packet_offset,
    };
    let (lo, hi) = pulse.window();
    let inside = |x: f64| x >= lo && x <= hi;
    Ok((sweep, inside(sweep.dq) && inside(sweep.zq)))
}

pub fn classify(iz_after_dq: f64, iz_final: f64) -> Classification {
    if iz_after_dq.abs() < POLARIZATION_FLOOR {
        return Classification::None;
    }
    let same_sign = iz_after_dq * iz_final > 0.0;
    if same_sign && iz_final.abs() > iz_after_dq.abs() {
        Classification::Ise
    } else if iz_final.abs() < iz_after_dq.abs() * (1.0 - DSE_EPSILON) {
        Classification::Dse
    } else {
        Classification::None
    }
}

/// Classify a recorded pair trajectory of `pulse` applied to `p`.
///
/// ⟨Iz⟩ after the DQ stage is the mean over the central part of the interval
/// between the two matching times, where the electron is near its SQ resonance
/// and neither DNP transition is active.
pub fn classify_outcome(traj: &Trajectory<4>, p: &SpinSystemParams, pulse: &ChirpPulse) -> Result<OutcomeReport> {
    let (sweep, covered) = window_covers_both(pulse, p)?;
    if !covered {
        let (start, end) = pulse.window();
        return Err(Error::WindowTooNarrow {
            start,
            end,
            dq: sweep.dq,
            zq: sweep.zq,
        });
    }
    let t_dq = pulse.time_at_offset(sweep.dq).expect("window covers DQ");
    let t_zq = pulse.time_at_offset(sweep.zq).expect("window covers ZQ");
    let iz = traj.get(Observable::Iz).ok_or(Error::Empty("Iz series"))?;

    let mid = 0.5 * (t_dq + t_zq);
    let half = 0.5 * PLATEAU_FRACTION * (t_zq - t_dq).abs();
    let plateau: Vec<f64> = traj
        .times
        .iter()
        .zip(iz)
        .filter(|(t, _)| (**t - mid).abs() <= half)
        .map(|(_, v)| *v)
        .collect();
    let iz_after_dq = if plateau.is_empty() {
        traj.value_at(Observable::Iz, mid).unwrap_or(0.0)
    } else {
        plateau.iter().sum::<f64>() / plateau.len() as f64
    };
    let iz_final = *iz.last().ok_or(Error::Empty("trajectory"))?;

    let zqx = traj.value_at(Observable::ZQx, t_zq).unwrap_or(0.0);
    let zqy = traj.value_at(Observable::ZQy, t_zq).unwrap_or(0.0);
    let classification = classify(iz_after_dq, iz_final);
    let predicted = if zqy > zqx { Classification::Ise } else { Classification::Dse };
    let by_magnitude = if zqy.abs() > zqx.abs() {
        Classification::Ise
    } else {
        Classification::Dse
    };
    Ok(OutcomeReport {
        classification,
        iz_after_dq,
        iz_final,
        zqx_at_zq: zqx,
        zqy_at_zq: zqy,
        predicted,
        predictor_agrees: predicted == classification,
        magnitude_predictor_agrees: by_magnitude == classification,
        warning: None,
    })
}

/// Full 4×4 sweep of one pair from ρ0 = Sz, classified as ISE, DSE or neither.
///
/// A window that misses either matching offset still runs, but the report is
/// NONE with a warning.
pub fn run_ise(pulse: &ChirpPulse, p: &SpinSystemParams, cfg: &IntegratorConfig) -> Result<IseRun> {
    pulse.validate()?;
    p.validate()?;
    let cfg = super::resolved(cfg, pulse, Some(p));
    let h = IseHamiltonian::new(pulse, p);
    let trajectory = evolve(
        &DensityState::electron_polarization(),
        |t| h.at(t),
        (0.0, pulse.duration()),
        &cfg,
    )?;
    let report = report_for(&trajectory, p, pulse)?;
    Ok(IseRun { trajectory, report })
}

/// [`run_ise`] with the step halved until the final ⟨Sz⟩ and ⟨Iz⟩ settle to
/// `cfg.conv_tol`. Returns the run and the number of halvings used.
pub fn run_ise_converged(pulse: &ChirpPulse, p: &SpinSystemParams, cfg: &IntegratorConfig) -> Result<(IseRun, u32)> {
    pulse.validate()?;
    p.validate()?;
    let cfg = super::resolved(cfg, pulse, Some(p));
    let h = IseHamiltonian::new(pulse, p);
    let conv = evolve_converged(
        &DensityState::electron_polarization(),
        |t| h.at(t),
        (0.0, pulse.duration()),
        &cfg,
    )?;
    let report = report_for(&conv.trajectory, p, pulse)?;
    Ok((
        IseRun {
            trajectory: conv.trajectory,
            report,
        },
        conv.halvings,
    ))
}

fn report_for(trajectory: &Trajectory<4>, p: &SpinSystemParams, pulse: &ChirpPulse) -> Result<OutcomeReport> {
    match classify_outcome(trajectory, p, pulse) {
        Ok(r) => Ok(r),
        Err(e @ Error::WindowTooNarrow { .. }) => Ok(OutcomeReport::degenerate(
            trajectory.final_value(Observable::Iz).unwrap_or(0.0),
            e.to_string(),
        )),
        Err(e) => Err(e),
    }
}
