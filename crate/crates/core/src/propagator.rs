//! Piecewise-constant propagation of density states with optional T2 damping.
//!
//! Each step samples H at the interval midpoint, applies U = exp(−iHΔt) and then
//! damps the selected coherences by exp(−Δt/T2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::unitary_propagator;
use crate::spin::{
    fictitious_basis, hermiticity_error, spin_half_operators, trace_product, two_spin_operators,
    DensityState, Op2, Op4, Operator, HERMITIAN_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxMode {
    #[default]
    AllOffdiagonal,
    /// Only the DQ (|αα⟩↔|ββ⟩) and ZQ (|αβ⟩↔|βα⟩) coherences.
    DqZqOnly,
}

impl RelaxMode {
    pub fn name(self) -> &'static str {
        match self {
            RelaxMode::AllOffdiagonal => "all-offdiagonal",
            RelaxMode::DqZqOnly => "dq-zq-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Step in µs; `None` lets the caller pick [`default_dt`].
    pub dt: Option<f64>,
    pub t2: Option<f64>,
    pub relax_mode: RelaxMode,
    pub conv_tol: f64,
    pub max_halvings: u32,
    /// Record observables every this many steps (the last step is always
    /// recorded); `None` picks a stride giving about [`AUTO_SAMPLES`] samples.
    pub sample_stride: Option<usize>,
    pub store_states: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t2: None,
            relax_mode: RelaxMode::AllOffdiagonal,
            conv_tol: 1e-6,
            max_halvings: 10,
            sample_stride: None,
            store_states: false,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_t2(mut self, t2: f64, mode: RelaxMode) -> Self {
        self.t2 = Some(t2);
        self.relax_mode = mode;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = Some(stride);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::NonPositiveStep(dt));
            }
        }
        if let Some(t2) = self.t2 {
            if !(t2 > 0.0) {
                return Err(Error::NonPositiveT2(t2));
            }
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "conv_tol",
                reason: format!("must be positive, got {}", self.conv_tol),
            });
        }
        if self.sample_stride == Some(0) {
            return Err(Error::InvalidParameter {
                name: "sample_stride",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Resolved step: the configured one, or [`default_dt`].
    pub fn step_for(&self, duration: f64, nu_max: f64) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(duration, nu_max))
    }
}

pub const AUTO_SAMPLES: usize = 20_000;

/// min(0.001·duration, 0.05/ν_max), i.e. at least 20 samples per period of the
/// fastest linear frequency ν_max (MHz).
pub fn default_dt(duration: f64, nu_max: f64) -> f64 {
    let by_duration = 1e-3 * duration;
    if nu_max > 0.0 {
        by_duration.min(0.05 / nu_max)
    } else {
        by_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Observable {
    Sz,
    Iz,
    Sx,
    Sy,
    DQx,
    DQy,
    DQz,
    ZQx,
    ZQy,
    ZQz,
}

impl Observable {
    pub const ALL: [Observable; 10] = [
        Observable::Sz,
        Observable::Iz,
        Observable::Sx,
        Observable::Sy,
        Observable::DQx,
        Observable::DQy,
        Observable::DQz,
        Observable::ZQx,
        Observable::ZQy,
        Observable::ZQz,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Observable::Sz => "Sz",
            Observable::Iz => "Iz",
            Observable::Sx => "Sx",
            Observable::Sy => "Sy",
            Observable::DQx => "DQx",
            Observable::DQy => "DQy",
            Observable::DQz => "DQz",
            Observable::ZQx => "ZQx",
            Observable::ZQy => "ZQy",
            Observable::ZQz => "ZQz",
        }
    }
}

/// Spaces whose standard observables the propagator records.
pub trait Tracked: Sized {
    fn tracked() -> Vec<(Observable, Self)>;
}

impl Tracked for Op2 {
    fn tracked() -> Vec<(Observable, Self)> {
        let s = spin_half_operators();
        vec![(Observable::Sz, s.z), (Observable::Sx, s.x), (Observable::Sy, s.y)]
    }
}

impl Tracked for Op4 {
    fn tracked() -> Vec<(Observable, Self)> {
        let t = two_spin_operators();
        let f = fictitious_basis();
        vec![
            (Observable::Sz, t.sz),
            (Observable::Iz, t.iz),
            (Observable::Sx, t.sx),
            (Observable::Sy, t.sy),
            (Observable::DQx, f.dqx),
            (Observable::DQy, f.dqy),
            (Observable::DQz, f.dqz),
            (Observable::ZQx, f.zqx),
            (Observable::ZQy, f.zqy),
            (Observable::ZQz, f.zqz),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub observable: Observable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub series: Vec<Series>,
    pub final_state: DensityState<N>,
    pub states: Option<Vec<DensityState<N>>>,
    /// Step actually used (µs).
    pub dt: f64,
}

impl<const N: usize> Trajectory<N> {
    pub fn get(&self, obs: Observable) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|s| s.observable == obs)
            .map(|s| s.values.as_slice())
    }

    pub fn tracks(&self, obs: Observable) -> bool {
        self.get(obs).is_some()
    }

    pub fn final_value(&self, obs: Observable) -> Option<f64> {
        self.get(obs).and_then(|v| v.last().copied())
    }

    /// Linear interpolation between recorded samples; clamps outside the span.
    pub fn value_at(&self, obs: Observable, t: f64) -> Option<f64> {
        let values = self.get(obs)?;
        let times = &self.times;
        if t <= times[0] {
            return Some(values[0]);
        }
        let last = times.len() - 1;
        if t >= times[last] {
            return Some(values[last]);
        }
        let hi = times.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let w = (t - times[lo]) / (times[hi] - times[lo]);
        Some(values[lo] + w * (values[hi] - values[lo]))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// ρ' = U ρ U† with U = exp(−i·H·dt).
pub fn step_unitary<const N: usize>(
    rho: &DensityState<N>,
    h: &Operator<N>,
    dt: f64,
) -> Result<DensityState<N>> {
    let err = hermiticity_error(h);
    if err > HERMITIAN_TOL * h.norm().max(1.0) {
        return Err(Error::NonHermitianHamiltonian(err));
    }
    let u = unitary_propagator(h, dt);
    Ok(DensityState::from_matrix_unchecked(u * rho.matrix() * u.adjoint()))
}

/// Damping mask for `mode`: true where an element decays.
fn damping_mask<const N: usize>(mode: RelaxMode) -> Result<[[bool; N]; N]> {
    let mut mask = [[false; N]; N];
    match mode {
        RelaxMode::AllOffdiagonal => {
            for (i, row) in mask.iter_mut().enumerate() {
                for (j, m) in row.iter_mut().enumerate() {
                    *m = i != j;
                }
            }
        }
        RelaxMode::DqZqOnly => {
            if N != 4 {
                return Err(Error::RelaxModeUnsupported(mode.name()));
            }
            for (i, j) in [(0, 3), (3, 0), (1, 2), (2, 1)] {
                mask[i][j] = true;
            }
        }
    }
    Ok(mask)
}

fn damp<const N: usize>(m: &mut Operator<N>, mask: &[[bool; N]; N], factor: f64) {
    for (i, row) in mask.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if d {
                m[(i, j)] *= factor;
            }
        }
    }
}

/// Multiply the selected coherences by exp(−dt/t2).
pub fn apply_t2<const N: usize>(
    rho: &DensityState<N>,
    dt: f64,
    t2: f64,
    mode: RelaxMode,
) -> Result<DensityState<N>> {
    if !(t2 > 0.0) {
        return Err(Error::NonPositiveT2(t2));
    }
    let mask = damping_mask::<N>(mode)?;
    let mut m = *rho.matrix();
    damp(&mut m, &mask, (-dt / t2).exp());
    Ok(DensityState::from_matrix_unchecked(m))
}

/// Propagate `rho0` across `t_span` under `h(t)`.
///
/// `cfg.dt` must be set (see [`IntegratorConfig::step_for`]); it is shrunk so an
/// integer number of steps spans the interval exactly.
pub fn evolve<const N: usize, F>(
    rho0: &DensityState<N>,
    h: F,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>>
where
    F: Fn(f64) -> Operator<N>,
    Operator<N>: Tracked,
{
    cfg.validate()?;
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter {
            name: "t_span",
            reason: format!("end {t1} precedes start {t0}"),
        });
    }
    let duration = t1 - t0;
    let requested = cfg.dt.unwrap_or(1e-3 * duration.max(f64::MIN_POSITIVE));
    let steps = if duration > 0.0 {
        (duration / requested).ceil().max(1.0) as usize
    } else {
        0
    };
    let dt = if steps > 0 { duration / steps as f64 } else { requested };

    let relax = match cfg.t2 {
        Some(t2) => Some((damping_mask::<N>(cfg.relax_mode)?, (-dt / t2).exp())),
        None => None,
    };

    let tracked = Operator::<N>::tracked();
    let stride = cfg.sample_stride.unwrap_or_else(|| (steps / AUTO_SAMPLES).max(1));
    let capacity = steps / stride + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut values: Vec<Vec<f64>> = tracked.iter().map(|_| Vec::with_capacity(capacity)).collect();
    let mut states = cfg.store_states.then(|| Vec::with_capacity(capacity));

    let mut rho = *rho0.matrix();
    let mut record = |t: f64, rho: &Operator<N>| {
        times.push(t);
        for ((_, op), vals) in tracked.iter().zip(values.iter_mut()) {
            vals.push(trace_product(op, rho).re);
        }
        if let Some(s) = states.as_mut() {
            s.push(DensityState::from_matrix_unchecked(*rho));
        }
    };
    record(t0, &rho);

    for n in 0..steps {
        let mid = t0 + (n as f64 + 0.5) * dt;
        let hm = h(mid);
        let err = hermiticity_error(&hm);
        if err > HERMITIAN_TOL * hm.norm().max(1.0) {
            return Err(Error::NonHermitianHamiltonian(err));
        }
        let u = unitary_propagator(&hm, dt);
        rho = u * rho * u.adjoint();
        if let Some((mask, factor)) = &relax {
            damp(&mut rho, mask, *factor);
        }
        let done = n + 1;
        if done % stride == 0 || done == steps {
            let t = if done == steps { t1 } else { t0 + done as f64 * dt };
            record(t, &rho);
        }
    }

    let series = tracked
        .iter()
        .zip(values)
        .map(|((obs, _), values)| Series {
            observable: *obs,
            values,
        })
        .collect();
    Ok(Trajectory {
        times,
        series,
        final_state: DensityState::from_matrix_unchecked(rho),
        states,
        dt,
    })
}

#[derive(Debug, Clone)]
pub struct Converged<const N: usize> {
    pub trajectory: Trajectory<N>,
    /// Step of the returned trajectory.
    pub dt: f64,
    pub halvings: u32,
}

fn convergence_probe<const N: usize>(traj: &Trajectory<N>) -> (f64, f64) {
    (
        traj.final_value(Observable::Sz).unwrap_or(0.0),
        traj.final_value(Observable::Iz).unwrap_or(0.0),
    )
}

/// Run [`evolve`] with successively halved steps until the final ⟨Sz⟩ and ⟨Iz⟩
/// of two consecutive runs differ by less than `cfg.conv_tol`.
pub fn evolve_converged<const N: usize, F>(
    rho0: &DensityState<N>,
    h: F,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Converged<N>>
where
    F: Fn(f64) -> Operator<N>,
    Operator<N>: Tracked,
{
    cfg.validate()?;
    let mut dt = cfg.dt.unwrap_or(1e-3 * (t_span.1 - t_span.0));
    let mut prev = evolve(rho0, &h, t_span, &IntegratorConfig { dt: Some(dt), ..*cfg })?;
    let mut prev_probe = convergence_probe(&prev);
    for halving in 1..=cfg.max_halvings {
        dt /= 2.0;
        // keep the sample grid in time fixed while the step shrinks
        let stride = cfg.sample_stride.map(|s| s.saturating_mul(1 << halving));
        let next = evolve(
            rho0,
            &h,
            t_span,
            &IntegratorConfig {
                dt: Some(dt),
                sample_stride: stride,
                ..*cfg
            },
        )?;
        let probe = convergence_probe(&next);
        if (probe.0 - prev_probe.0).abs() < cfg.conv_tol && (probe.1 - prev_probe.1).abs() < cfg.conv_tol {
            let dt = next.dt;
            return Ok(Converged {
                trajectory: next,
                dt,
                halvings: halving,
            });
        }
        if halving == cfg.max_halvings {
            return Err(Error::ConvergenceFailure {
                halvings: halving,
                dt: next.dt,
                last_sz: probe.0,
                last_iz: probe.1,
                prev_sz: prev_probe.0,
                prev_iz: prev_probe.1,
            });
        }
        prev = next;
        prev_probe = probe;
    }
    // max_halvings == 0: nothing to compare against
    let dt = prev.dt;
    Err(Error::ConvergenceFailure {
        halvings: 0,
        dt,
        last_sz: prev_probe.0,
        last_iz: prev_probe.1,
        prev_sz: f64::NAN,
        prev_iz: f64::NAN,
    })
}
