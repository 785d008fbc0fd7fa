#![allow(dead_code)]

use chirpdnp::experiments::run_ise;
use chirpdnp::hamiltonian::{matching_offsets, ChirpPulse, SpinSystemParams};
use chirpdnp::propagator::{IntegratorConfig, Observable};
use chirpdnp::spin::{reduce_subspace, Subspace};

fn stored(cfg: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        store_states: true,
        ..*cfg
    }
}

/// Largest change of ⟨ZQx⟩, ⟨ZQy⟩, ⟨ZQz⟩ from their initial values before the
/// sweep reaches the DQ matching offset.
pub fn zq_drift_before_dq(p: &SpinSystemParams, pulse: &ChirpPulse, cfg: &IntegratorConfig) -> f64 {
    let run = run_ise(pulse, p, cfg).unwrap();
    let m = matching_offsets(p, pulse.omega1).unwrap();
    let t_dq = pulse.time_at_offset(m.dq - p.packet_offset).unwrap();
    let tr = &run.trajectory;
    let mut drift: f64 = 0.0;
    for obs in [Observable::ZQx, Observable::ZQy, Observable::ZQz] {
        let v = tr.get(obs).unwrap();
        for (t, x) in tr.times.iter().zip(v) {
            if *t >= t_dq {
                break;
            }
            drift = drift.max((x - v[0]).abs());
        }
    }
    drift
}

/// Compare the DQ block at sweep offset −`d`·ω1 with the ZQ block at +`d`·ω1.
///
/// Inverting the electron maps |αα⟩ → |βα⟩ and |ββ⟩ → |αβ⟩, so the DQ
/// populations reappear in reverse order in the ZQ block. Coherences pick up a
/// dynamic phase during the passage and are compared by modulus. Returns the
/// largest mismatch relative to the largest DQ element.
pub fn sq_swap_mismatch(p: &SpinSystemParams, pulse: &ChirpPulse, d: f64, cfg: &IntegratorConfig) -> f64 {
    let run = run_ise(pulse, p, &stored(cfg)).unwrap();
    let tr = &run.trajectory;
    let states = tr.states.as_ref().unwrap();
    let index = |offset: f64| {
        let t = pulse.time_at_offset(offset - p.packet_offset).unwrap();
        tr.times.partition_point(|&x| x < t).min(tr.len() - 1)
    };
    let before = reduce_subspace(&states[index(-d * pulse.omega1)], Subspace::Dq);
    let after = reduce_subspace(&states[index(d * pulse.omega1)], Subspace::Zq);
    let (b, a) = (before.matrix(), after.matrix());
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diffs = [
        (a[(0, 0)] - b[(1, 1)]).norm(),
        (a[(1, 1)] - b[(0, 0)]).norm(),
        (a[(0, 1)].norm() - b[(0, 1)].norm()).abs(),
    ];
    diffs.iter().fold(0.0, |m: f64, x| m.max(*x)) / scale
}
