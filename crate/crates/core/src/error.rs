use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("observable is not Hermitian (max |M - M†| = {0:e})")]
    NonHermitianObservable(f64),

    #[error("Hamiltonian is not Hermitian (max |H - H†| = {0:e})")]
    NonHermitianHamiltonian(f64),

    #[error("expectation value has imaginary residue {0:e}; the state is corrupted")]
    ImaginaryResidue(f64),

    #[error("time {t} µs lies outside the pulse duration [0, {duration}] µs")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("nuclear Larmor frequency must be non-zero")]
    ZeroNuclearLarmor,

    #[error("microwave amplitude {omega1} MHz is not below the nuclear Larmor frequency {omega0n} MHz; no matching offset exists")]
    AmplitudeExceedsNuclearLarmor { omega1: f64, omega0n: f64 },

    #[error("sweep rate must be positive, got {0} MHz/µs")]
    NonPositiveRate(f64),

    #[error("T2 must be positive, got {0} µs")]
    NonPositiveT2(f64),

    #[error("time step must be positive, got {0} µs")]
    NonPositiveStep(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("relaxation mode `{0}` needs a two-spin (4×4) state")]
    RelaxModeUnsupported(&'static str),

    #[error(
        "step-size refinement did not converge after {halvings} halvings (dt = {dt:e} µs): \
         last (Sz, Iz) = ({last_sz}, {last_iz}), previous = ({prev_sz}, {prev_iz})"
    )]
    ConvergenceFailure {
        halvings: u32,
        dt: f64,
        last_sz: f64,
        last_iz: f64,
        prev_sz: f64,
        prev_iz: f64,
    },

    #[error("sweep window [{start}, {end}] MHz does not cover both matching offsets (DQ {dq}, ZQ {zq}) in electron-offset units")]
    WindowTooNarrow { start: f64, end: f64, dq: f64, zq: f64 },

    #[error("sweep window [{start}, {end}] MHz covers the ZQ matching offset {zq}; that is an ISE sweep, not ASE")]
    WindowCoversZq { start: f64, end: f64, zq: f64 },

    #[error("sweep window [{start}, {end}] MHz misses the DQ matching offset {dq}")]
    WindowMissesDq { start: f64, end: f64, dq: f64 },

    #[error("{0} must not be empty")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
