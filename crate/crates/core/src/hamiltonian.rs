//! Hamiltonians of the electron–nucleus pair under chirped microwave irradiation.
//!
//! Units: every user-facing frequency is a linear frequency in MHz, times are in
//! µs, and sweep rates are in MHz/µs. Hamiltonian matrices are angular (rad/µs);
//! the single conversion point is the `TWO_PI` factor applied by the builders.
//!
//! Sweep convention: the pulse's offset coordinate Ω(t) runs linearly from
//! `offset_start` to `offset_end`. A spin packet whose Larmor frequency sits
//! `packet_offset` away from the sweep centre sees the electron offset
//! Ω_e(t) = Ω(t) + packet_offset, which is the coefficient of S_z.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{spin_half_operators, two_spin_operators, Component, Op2, Op4, Subspace};

pub const TWO_PI: f64 = 2.0 * PI;

#[inline]
fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Secular (A) and pseudo-secular (B) hyperfine couplings, either given directly
/// or derived from a point-dipole strength and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum Hyperfine {
    Explicit { a: f64, b: f64 },
    /// `d` in MHz, `beta` in radians from the static field.
    Dipolar { d: f64, beta: f64 },
}

impl Hyperfine {
    /// (A, B) in MHz.
    pub fn ab(&self) -> (f64, f64) {
        match *self {
            Hyperfine::Explicit { a, b } => (a, b),
            Hyperfine::Dipolar { d, beta } => hyperfine_from_dipolar(d, beta),
        }
    }
}

/// Point-dipole decomposition: A = d(3cos²β − 1), B = (3/2)·d·sin 2β.
///
/// This is a convention for generating orientation-dependent couplings, not a
/// fitted model; any (A, B) pair can also be supplied explicitly.
pub fn hyperfine_from_dipolar(d: f64, beta: f64) -> (f64, f64) {
    let c = beta.cos();
    (d * (3.0 * c * c - 1.0), 1.5 * d * (2.0 * beta).sin())
}

/// Sign of the nuclear Zeeman term, s_n in s_n·ω0n·I_z.
///
/// With `Positive` the DQ block {|αα⟩, |ββ⟩} is resonant at negative electron
/// offset and is therefore crossed first by a low-to-high sweep. Flipping the
/// sign swaps which block resonates on which side; |⟨I_z⟩| trajectories are
/// unchanged when A = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuclearSign {
    #[default]
    Positive,
    Negative,
}

impl NuclearSign {
    pub fn value(self) -> f64 {
        match self {
            NuclearSign::Positive => 1.0,
            NuclearSign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSystemParams {
    /// Nuclear Larmor frequency, MHz.
    pub omega0n: f64,
    pub hyperfine: Hyperfine,
    /// Electron packet offset from the sweep centre, MHz.
    #[serde(default)]
    pub packet_offset: f64,
    #[serde(default)]
    pub nuclear_sign: NuclearSign,
}

impl SpinSystemParams {
    pub fn new(omega0n: f64, a: f64, b: f64) -> Result<Self> {
        let p = Self {
            omega0n,
            hyperfine: Hyperfine::Explicit { a, b },
            packet_offset: 0.0,
            nuclear_sign: NuclearSign::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_dipolar(omega0n: f64, d: f64, beta: f64) -> Result<Self> {
        let p = Self {
            omega0n,
            hyperfine: Hyperfine::Dipolar { d, beta },
            packet_offset: 0.0,
            nuclear_sign: NuclearSign::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_packet_offset(mut self, offset: f64) -> Self {
        self.packet_offset = offset;
        self
    }

    pub fn with_nuclear_sign(mut self, sign: NuclearSign) -> Self {
        self.nuclear_sign = sign;
        self
    }

    pub fn a(&self) -> f64 {
        self.hyperfine.ab().0
    }

    pub fn b(&self) -> f64 {
        self.hyperfine.ab().1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0n.is_finite() && self.omega0n > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega0n",
                reason: format!("must be positive and finite, got {}", self.omega0n),
            });
        }
        let (a, b) = self.hyperfine.ab();
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "hyperfine",
                reason: "couplings must be finite".into(),
            });
        }
        if !self.packet_offset.is_finite() {
            return Err(Error::InvalidParameter {
                name: "packet_offset",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// A linear frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpPulse {
    /// Microwave amplitude, MHz.
    pub omega1: f64,
    pub offset_start: f64,
    pub offset_end: f64,
    /// Sweep rate, MHz/µs.
    pub rate: f64,
    /// Microwave phase, radians.
    #[serde(default)]
    pub phase: f64,
}

impl ChirpPulse {
    pub fn new(omega1: f64, offset_start: f64, offset_end: f64, rate: f64) -> Result<Self> {
        let pulse = Self {
            omega1,
            offset_start,
            offset_end,
            rate,
            phase: 0.0,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::NonPositiveRate(self.rate));
        }
        if !(self.omega1.is_finite() && self.omega1 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega1",
                reason: format!("must be non-negative and finite, got {}", self.omega1),
            });
        }
        if !(self.offset_start.is_finite() && self.offset_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "offset window",
                reason: "window ends must be finite".into(),
            });
        }
        if self.offset_start == self.offset_end {
            return Err(Error::InvalidParameter {
                name: "offset window",
                reason: "window has zero width".into(),
            });
        }
        if !self.phase.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phase",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// µs.
    pub fn duration(&self) -> f64 {
        (self.offset_end - self.offset_start).abs() / self.rate
    }

    /// +1 for a low-to-high sweep, −1 for high-to-low.
    pub fn direction(&self) -> f64 {
        (self.offset_end - self.offset_start).signum()
    }

    /// Ω(t), unchecked.
    #[inline]
    pub fn offset_at(&self, t: f64) -> f64 {
        self.offset_start + self.direction() * self.rate * t
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let duration = self.duration();
        let slack = 1e-9 * duration.max(1.0);
        if !(t >= -slack && t <= duration + slack) {
            return Err(Error::TimeOutOfRange { t, duration });
        }
        Ok(())
    }

    /// Time at which the sweep coordinate passes `offset`, if it does.
    pub fn time_at_offset(&self, offset: f64) -> Option<f64> {
        let t = (offset - self.offset_start) / (self.direction() * self.rate);
        (t >= 0.0 && t <= self.duration()).then_some(t)
    }

    pub fn window(&self) -> (f64, f64) {
        (
            self.offset_start.min(self.offset_end),
            self.offset_start.max(self.offset_end),
        )
    }
}

/// Time-independent solid-effect Hamiltonian (rad/µs) at electron offset `offset`:
/// 2π·[offset·S_z + s_n·ω0n·I_z + A·S_zI_z + B·S_zI_x + ω1·S_x].
pub fn h_se_static(p: &SpinSystemParams, offset: f64, omega1: f64) -> Op4 {
    IseHamiltonian::from_parts(p, omega1, 0.0).with_electron_offset(offset)
}

/// Precomputed pieces of the pair Hamiltonian; only the S_z coefficient moves
/// during a sweep.
#[derive(Debug, Clone, Copy)]
pub struct IseHamiltonian {
    fixed: Op4,
    sz: Op4,
    pulse: Option<ChirpPulse>,
    packet_offset: f64,
}

impl IseHamiltonian {
    fn from_parts(p: &SpinSystemParams, omega1: f64, phase: f64) -> Self {
        use Component::*;
        let ts = two_spin_operators();
        let (a, b) = p.hyperfine.ab();
        let drive = ts.sx * re(phase.cos()) + ts.sy * re(phase.sin());
        let fixed = (ts.iz * re(p.nuclear_sign.value() * p.omega0n)
            + ts.product(Z, Z) * re(a)
            + ts.product(Z, X) * re(b)
            + drive * re(omega1))
            * re(TWO_PI);
        Self {
            fixed,
            sz: ts.sz * re(TWO_PI),
            pulse: None,
            packet_offset: p.packet_offset,
        }
    }

    pub fn new(pulse: &ChirpPulse, p: &SpinSystemParams) -> Self {
        let mut h = Self::from_parts(p, pulse.omega1, pulse.phase);
        h.pulse = Some(*pulse);
        h
    }

    pub fn with_electron_offset(&self, offset: f64) -> Op4 {
        self.fixed + self.sz * re(offset)
    }

    /// H(t) without range checks.
    #[inline]
    pub fn at(&self, t: f64) -> Op4 {
        let sweep = self.pulse.map_or(0.0, |pl| pl.offset_at(t));
        self.with_electron_offset(sweep + self.packet_offset)
    }
}

/// Chirped pair Hamiltonian at time t: the static solid-effect Hamiltonian
/// with the electron offset following the sweep.
pub fn h_ise(t: f64, pulse: &ChirpPulse, p: &SpinSystemParams) -> Result<Op4> {
    pulse.check_time(t)?;
    Ok(IseHamiltonian::new(pulse, p).at(t))
}

/// Single-electron chirp Hamiltonian, see [`h_chirp`].
#[derive(Debug, Clone, Copy)]
pub struct ChirpHamiltonian {
    drive: Op2,
    sz: Op2,
    pulse: ChirpPulse,
    packet_offset: f64,
}

impl ChirpHamiltonian {
    pub fn new(pulse: &ChirpPulse, packet_offset: f64) -> Self {
        let s = spin_half_operators();
        let drive =
            (s.x * re(pulse.phase.cos()) + s.y * re(pulse.phase.sin())) * re(TWO_PI * pulse.omega1);
        Self {
            drive,
            sz: s.z * re(TWO_PI),
            pulse: *pulse,
            packet_offset,
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Op2 {
        self.drive + self.sz * re(self.pulse.offset_at(t) + self.packet_offset)
    }
}

/// 2π·[Ω_e(t)·S_z + ω1·(cos φ·S_x + sin φ·S_y)].
pub fn h_chirp(t: f64, pulse: &ChirpPulse, packet_offset: f64) -> Result<Op2> {
    pulse.check_time(t)?;
    Ok(ChirpHamiltonian::new(pulse, packet_offset).at(t))
}

/// Effective solid-effect Hamiltonian at the DQ or ZQ matching condition.
///
/// Returns the coupling c = ω1·B/(2ω0n) in MHz and the matrix 2π·c·(DQx or ZQx).
pub fn h_effective_se(kind: Subspace, p: &SpinSystemParams, omega1: f64) -> Result<(f64, Op4)> {
    if p.omega0n == 0.0 {
        return Err(Error::ZeroNuclearLarmor);
    }
    let c = omega1 * p.b() / (2.0 * p.omega0n);
    let basis = crate::spin::fictitious_basis();
    let qx = match kind {
        Subspace::Dq => basis.dqx,
        Subspace::Zq => basis.zqx,
    };
    Ok((c, qx * re(TWO_PI * c)))
}

/// Electron offsets (MHz) satisfying √(Ω_e² + ω1²) = ω0n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchingOffsets {
    pub dq: f64,
    pub zq: f64,
}

pub fn matching_offsets(p: &SpinSystemParams, omega1: f64) -> Result<MatchingOffsets> {
    if omega1.abs() >= p.omega0n {
        return Err(Error::AmplitudeExceedsNuclearLarmor {
            omega1,
            omega0n: p.omega0n,
        });
    }
    let root = (p.omega0n * p.omega0n - omega1 * omega1).sqrt();
    let s = p.nuclear_sign.value();
    Ok(MatchingOffsets {
        dq: -s * root,
        zq: s * root,
    })
}

/// Nuclear transition frequency (MHz) averaged over the two electron manifolds,
/// ½·Σ± √((ω0n ± A/2)² + (B/2)²).
pub fn nuclear_frequency(p: &SpinSystemParams) -> f64 {
    let (a, b) = p.hyperfine.ab();
    let branch = |sign: f64| (p.omega0n + sign * 0.5 * a).hypot(0.5 * b);
    0.5 * (branch(1.0) + branch(-1.0))
}

/// Anticrossing centres of the full pair Hamiltonian: [`matching_offsets`] with
/// ω0n replaced by the hyperfine-shifted [`nuclear_frequency`].
pub fn resonant_offsets(p: &SpinSystemParams, omega1: f64) -> Result<MatchingOffsets> {
    let shifted = SpinSystemParams {
        omega0n: nuclear_frequency(p),
        ..*p
    };
    matching_offsets(&shifted, omega1)
}

/// Landau–Zener adiabaticity of a linear passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauZener {
    /// π·p²/(2k) with the full gap p and rate k in angular units.
    pub factor: f64,
    /// Probability of staying in the diabatic state, exp(−factor).
    pub diabatic_probability: f64,
}

/// `gap` is the full anticrossing splitting in linear MHz, `rate` the sweep rate of
/// the diabatic energy difference in MHz/µs.
pub fn lz_factor(gap: f64, rate: f64) -> Result<LandauZener> {
    if !(rate > 0.0) {
        return Err(Error::NonPositiveRate(rate));
    }
    let gap_ang = TWO_PI * gap;
    let rate_ang = TWO_PI * rate;
    let factor = PI * gap_ang * gap_ang / (2.0 * rate_ang);
    Ok(LandauZener {
        factor,
        diabatic_probability: (-factor).exp(),
    })
}

/// Magnitude (MHz) and tilt from +z (radians) of the instantaneous effective field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveField {
    pub magnitude: f64,
    /// atan2(ω1, Ω_e): π/2 on resonance, → 0 above, → π below.
    pub theta: f64,
}

pub fn effective_field(t: f64, pulse: &ChirpPulse, packet_offset: f64) -> Result<EffectiveField> {
    pulse.check_time(t)?;
    let offset = pulse.offset_at(t) + packet_offset;
    Ok(EffectiveField {
        magnitude: offset.hypot(pulse.omega1),
        theta: pulse.omega1.atan2(offset),
    })
}

/// Largest single linear frequency appearing in a pair Hamiltonian over the sweep.
pub fn max_linear_frequency(pulse: &ChirpPulse, p: Option<&SpinSystemParams>) -> f64 {
    let offset = p.map_or(0.0, |p| p.packet_offset);
    let mut nu = (pulse.offset_start + offset)
        .abs()
        .max((pulse.offset_end + offset).abs())
        .max(pulse.omega1);
    if let Some(p) = p {
        let (a, b) = p.hyperfine.ab();
        nu = nu.max(p.omega0n).max(a.abs()).max(b.abs());
    }
    nu
}
