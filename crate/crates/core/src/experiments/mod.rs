//! Drivers for the sweep regimes: single-electron chirps, ISE/DSE pair sweeps,
//! broad EPR lines, repeated ASE sweeps and parameter scans.

mod ase;
mod chirp;
mod ise;
mod line;
mod scan;

pub use ase::{run_ase, AseBuildup};
pub use chirp::{run_chirp_single, ChirpRun, InitialState};
pub use ise::{classify, classify_outcome, run_ise, run_ise_converged, window_covers_both, Classification, IseRun, OutcomeReport, DSE_EPSILON};
pub use line::{run_epr_line, DnpProfile, EprLine, LineShape, PacketResult};
pub use scan::{scan_parameters, ScanGrid, ScanPoint, DEFAULT_DIPOLAR_D};

use crate::hamiltonian::{max_linear_frequency, ChirpPulse, SpinSystemParams};
use crate::propagator::IntegratorConfig;

/// `cfg` with its step resolved for this pulse (and pair, if any).
pub(crate) fn resolved(cfg: &IntegratorConfig, pulse: &ChirpPulse, p: Option<&SpinSystemParams>) -> IntegratorConfig {
    let dt = cfg.step_for(pulse.duration(), max_linear_frequency(pulse, p));
    IntegratorConfig { dt: Some(dt), ..*cfg }
}
