//! Run one experiment from a config file and write its outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use chirpdnp::experiments::{
    run_ase, run_chirp_single, run_epr_line, run_ise, run_ise_converged, scan_parameters, Classification, EprLine,
    InitialState, OutcomeReport, ScanGrid,
};
use chirpdnp::hamiltonian::{
    matching_offsets, max_linear_frequency, resonant_offsets, ChirpHamiltonian, ChirpPulse, SpinSystemParams,
};
use chirpdnp::propagator::{evolve_converged, IntegratorConfig, Observable};
use chirpdnp::Error;
use serde_json::json;

use crate::config::{parse_config, ConfigError, ExperimentKind, Overrides, Plan, Validated};
use crate::output::{csv_table, fmt_f64, json, trajectory_csv, trajectory_gnuplot, write_all, Artifact, RunManifest, RunStatus};

/// One command-line invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub kind: ExperimentKind,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub overrides: Overrides,
}

#[derive(Debug)]
struct Outcome {
    artifacts: Vec<Artifact>,
    dt_used: f64,
    halvings: Option<u32>,
    warnings: Vec<String>,
}

fn failure(e: Error) -> (RunStatus, String) {
    match e {
        Error::ConvergenceFailure { .. } => (RunStatus::ConvergenceFailure, e.to_string()),
        other => (RunStatus::Error, other.to_string()),
    }
}

/// Load, validate and run. The manifest is written to the output directory
/// whatever happens and is also returned.
pub fn execute(inv: &Invocation) -> RunManifest {
    let start = Instant::now();
    let mut manifest = RunManifest::new(inv.kind, &inv.config);
    let mut prefix = inv.kind.name().to_string();

    let result = parse_config(&inv.config)
        .and_then(|mut cfg| {
            cfg.apply(&inv.overrides);
            manifest.config = serde_json::to_value(&cfg).ok();
            cfg.validate(inv.kind)
        })
        .map_err(|e| (RunStatus::ValidationError, e.to_string()))
        .and_then(|v| {
            prefix = v.prefix.clone();
            compute(&v).map_err(failure)
        });

    match result {
        Ok(outcome) => {
            manifest.dt_used = Some(outcome.dt_used);
            manifest.halvings = outcome.halvings;
            manifest.warnings = outcome.warnings;
            match write_all(&inv.out_dir, &outcome.artifacts) {
                Ok(paths) => manifest.outputs = paths.iter().map(|p| p.display().to_string()).collect(),
                Err(e) => manifest.fail(RunStatus::Error, format!("cannot write outputs: {e}")),
            }
        }
        Err((status, message)) => manifest.fail(status, message),
    }

    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let path = inv.out_dir.join(format!("{prefix}_manifest.json"));
    if let Err(e) = std::fs::create_dir_all(&inv.out_dir).and_then(|_| std::fs::write(&path, json(&manifest))) {
        eprintln!("chirpdnp: cannot write {}: {e}", path.display());
    }
    manifest
}

/// Parse and validate only.
pub fn check(kind: Option<ExperimentKind>, path: &Path) -> Result<Validated, ConfigError> {
    let cfg = parse_config(path)?;
    let kind = kind.or(cfg.experiment).ok_or_else(|| ConfigError::Validation {
        field: "experiment".into(),
        reason: "required when no command names the experiment".into(),
    })?;
    cfg.validate(kind)
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn header(v: &Validated, pulse: &ChirpPulse, spin: Option<&SpinSystemParams>, dt: f64) -> Vec<(String, String)> {
    let cfg = &v.integrator;
    let mut h = vec![
        kv("experiment", v.kind.name()),
        kv("omega1_MHz", fmt_f64(pulse.omega1)),
        kv("offset_start_MHz", fmt_f64(pulse.offset_start)),
        kv("offset_end_MHz", fmt_f64(pulse.offset_end)),
        kv("rate_MHz_per_us", fmt_f64(pulse.rate)),
        kv("phase_rad", fmt_f64(pulse.phase)),
    ];
    if let Some(p) = spin {
        h.extend([
            kv("omega0n_MHz", fmt_f64(p.omega0n)),
            kv("A_MHz", fmt_f64(p.a())),
            kv("B_MHz", fmt_f64(p.b())),
            kv("packet_offset_MHz", fmt_f64(p.packet_offset)),
            kv("nuclear_sign", fmt_f64(p.nuclear_sign.value())),
        ]);
    }
    h.push(kv("dt_us", fmt_f64(dt)));
    h.push(kv("t2_us", cfg.t2.map_or("none".to_string(), fmt_f64)));
    h.push(kv("relax_mode", cfg.relax_mode.name()));
    h
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::Ise => "ISE",
        Classification::Dse => "DSE",
        Classification::None => "NONE",
    }
}

fn compute(v: &Validated) -> Result<Outcome, Error> {
    let prefix = &v.prefix;
    let cfg = &v.integrator;
    match &v.plan {
        Plan::Chirp {
            pulse,
            offsets,
            initial,
        } => chirp(v, pulse, offsets, *initial),
        Plan::Ise { pulse, spin } => {
            let (run, halvings) = if v.converge {
                let (run, h) = run_ise_converged(pulse, spin, cfg)?;
                (run, Some(h))
            } else {
                (run_ise(pulse, spin, cfg)?, None)
            };
            let dt = run.trajectory.dt;
            let h = header(v, pulse, Some(spin), dt);
            let summary = json!({
                "experiment": v.kind.name(),
                "report": run.report,
                "matching_offsets": matching_offsets(spin, pulse.omega1)?,
                "resonant_offsets": resonant_offsets(spin, pulse.omega1)?,
                "dt_used": dt,
            });
            Ok(Outcome {
                artifacts: vec![
                    Artifact {
                        name: format!("{prefix}_trajectory.csv"),
                        contents: trajectory_csv(&h, &run.trajectory),
                    },
                    Artifact {
                        name: format!("{prefix}_trajectory.dat"),
                        contents: trajectory_gnuplot(&h, &run.trajectory),
                    },
                    Artifact {
                        name: format!("{prefix}_summary.json"),
                        contents: json(&summary),
                    },
                ],
                dt_used: dt,
                halvings,
                warnings: run.report.warning.into_iter().collect(),
            })
        }
        Plan::EprLine { pulse, spin, line } => epr_line(v, pulse, spin, line),
        Plan::Ase {
            pulse,
            spin,
            sweeps,
            delay,
        } => {
            let buildup = run_ase(pulse, spin, *sweeps, *delay, cfg)?;
            let dt = cfg.step_for(pulse.duration(), max_linear_frequency(pulse, Some(spin)));
            let mut h = header(v, pulse, Some(spin), dt);
            h.push(kv("delay_us", fmt_f64(*delay)));
            let records = (0..buildup.iz_after_sweep.len()).map(|i| {
                vec![
                    (i + 1).to_string(),
                    fmt_f64(buildup.iz_after_sweep[i]),
                    fmt_f64(buildup.sz_after_sweep[i]),
                    fmt_f64(buildup.increments[i]),
                ]
            });
            let table = csv_table(&h, &["sweep", "iz", "sz", "increment"], records);
            let summary = json!({
                "experiment": v.kind.name(),
                "buildup": buildup,
                "increment_sign_changes": buildup.increment_sign_changes(),
                "dt_used": dt,
            });
            Ok(Outcome {
                artifacts: vec![
                    Artifact {
                        name: format!("{prefix}_buildup.csv"),
                        contents: table,
                    },
                    Artifact {
                        name: format!("{prefix}_summary.json"),
                        contents: json(&summary),
                    },
                ],
                dt_used: dt,
                halvings: None,
                warnings: Vec::new(),
            })
        }
        Plan::Scan { pulse, spin, grid } => scan(v, pulse, spin, grid),
    }
}

fn chirp(v: &Validated, pulse: &ChirpPulse, offsets: &[f64], initial: InitialState) -> Result<Outcome, Error> {
    let mut cfg = v.integrator;
    let mut halvings = None;
    if v.converge {
        let duration = pulse.duration();
        let rho = initial.density();
        let (mut dt, mut most) = (f64::INFINITY, 0);
        for &o in offsets {
            let nu = pulse.offset_start.abs().max(pulse.offset_end.abs()) + o.abs();
            let probe = IntegratorConfig {
                dt: Some(cfg.step_for(duration, nu.max(pulse.omega1))),
                ..cfg
            };
            let h = ChirpHamiltonian::new(pulse, o);
            let c = evolve_converged(&rho, |t| h.at(t), (0.0, duration), &probe)?;
            dt = dt.min(c.dt);
            most = most.max(c.halvings);
        }
        cfg.dt = Some(dt);
        halvings = Some(most);
    }
    let run = run_chirp_single(pulse, offsets, initial, &cfg)?;
    let dt = run.mean.dt;
    let mut h = header(v, pulse, None, dt);
    h.push(kv("packets", offsets.len()));
    let finals: Vec<_> = run
        .packet_offsets
        .iter()
        .zip(&run.packets)
        .map(|(o, t)| {
            json!({
                "packet_offset": o,
                "Sz": t.final_value(Observable::Sz),
                "Sx": t.final_value(Observable::Sx),
                "Sy": t.final_value(Observable::Sy),
            })
        })
        .collect();
    let summary = json!({
        "experiment": v.kind.name(),
        "initial": initial,
        "packets": finals,
        "mean_sz_final": run.mean.final_value(Observable::Sz),
        "dt_used": dt,
    });
    let prefix = &v.prefix;
    Ok(Outcome {
        artifacts: vec![
            Artifact {
                name: format!("{prefix}_trajectory.csv"),
                contents: trajectory_csv(&h, &run.mean),
            },
            Artifact {
                name: format!("{prefix}_trajectory.dat"),
                contents: trajectory_gnuplot(&h, &run.mean),
            },
            Artifact {
                name: format!("{prefix}_summary.json"),
                contents: json(&summary),
            },
        ],
        dt_used: dt,
        halvings,
        warnings: Vec::new(),
    })
}

fn epr_line(v: &Validated, pulse: &ChirpPulse, spin: &SpinSystemParams, line: &EprLine) -> Result<Outcome, Error> {
    let cfg = &v.integrator;
    let profile = run_epr_line(pulse, spin, line, cfg)?;
    let dt = line
        .offsets()
        .iter()
        .map(|&o| cfg.step_for(pulse.duration(), max_linear_frequency(pulse, Some(&spin.with_packet_offset(o)))))
        .fold(f64::INFINITY, f64::min);
    let mut h = header(v, pulse, Some(spin), dt);
    h.push(kv("packets", line.len()));
    h.push(kv("aggregate_iz", fmt_f64(profile.aggregate_iz)));
    let records = profile.packets.iter().map(|r| {
        vec![
            fmt_f64(r.packet_offset),
            fmt_f64(r.weight),
            fmt_f64(r.iz_final),
            fmt_f64(r.sz_final),
            r.in_window.to_string(),
            r.classification.map_or("", class_name).to_string(),
            r.error.clone().unwrap_or_default(),
        ]
    });
    let table = csv_table(
        &h,
        &["packet_offset", "weight", "iz_final", "sz_final", "in_window", "classification", "error"],
        records,
    );
    let warnings = profile
        .packets
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("packet {}: {e}", fmt_f64(r.packet_offset))))
        .collect();
    let summary = json!({
        "experiment": v.kind.name(),
        "profile": profile,
        "dt_used": dt,
    });
    let prefix = &v.prefix;
    Ok(Outcome {
        artifacts: vec![
            Artifact {
                name: format!("{prefix}_profile.csv"),
                contents: table,
            },
            Artifact {
                name: format!("{prefix}_summary.json"),
                contents: json(&summary),
            },
        ],
        dt_used: dt,
        halvings: None,
        warnings,
    })
}

fn scan(v: &Validated, pulse: &ChirpPulse, spin: &SpinSystemParams, grid: &ScanGrid) -> Result<Outcome, Error> {
    let cfg = &v.integrator;
    let table = scan_parameters(grid, spin, pulse, cfg)?;
    let dt = grid
        .points(spin, pulse)
        .iter()
        .map(|(p, k, _)| cfg.step_for(k.duration(), max_linear_frequency(k, Some(p))))
        .fold(f64::INFINITY, f64::min);
    let h = header(v, pulse, Some(spin), dt);
    let records = table.iter().map(|s| {
        let r = s.report.as_ref();
        let num = |f: fn(&OutcomeReport) -> f64| r.map_or(String::new(), |r| fmt_f64(f(r)));
        vec![
            fmt_f64(s.omega0n),
            fmt_f64(s.rate),
            fmt_f64(s.omega1),
            s.beta_deg.map_or(String::new(), fmt_f64),
            fmt_f64(s.a),
            fmt_f64(s.b),
            r.map_or("", |r| class_name(r.classification)).to_string(),
            num(|r| r.iz_after_dq),
            num(|r| r.iz_final),
            num(|r| r.zqx_at_zq),
            num(|r| r.zqy_at_zq),
            r.map_or("", |r| class_name(r.predicted)).to_string(),
            r.map_or(String::new(), |r| r.predictor_agrees.to_string()),
            s.error.clone().unwrap_or_default(),
        ]
    });
    let csv = csv_table(
        &h,
        &[
            "omega0n",
            "rate",
            "omega1",
            "beta_deg",
            "a",
            "b",
            "classification",
            "iz_after_dq",
            "iz_final",
            "zqx_at_zq",
            "zqy_at_zq",
            "predicted",
            "predictor_agrees",
            "error",
        ],
        records,
    );
    let warnings = table
        .iter()
        .filter_map(|s| {
            let from_run = s.report.as_ref().and_then(|r| r.warning.clone());
            s.error.clone().or(from_run).map(|e| {
                format!("omega0n {} rate {} omega1 {}: {e}", fmt_f64(s.omega0n), fmt_f64(s.rate), fmt_f64(s.omega1))
            })
        })
        .collect();
    let summary = json!({
        "experiment": v.kind.name(),
        "points": table,
        "dt_used": dt,
    });
    let prefix = &v.prefix;
    Ok(Outcome {
        artifacts: vec![
            Artifact {
                name: format!("{prefix}_scan.csv"),
                contents: csv,
            },
            Artifact {
                name: format!("{prefix}_summary.json"),
                contents: json(&summary),
            },
        ],
        dt_used: dt,
        halvings: None,
        warnings,
    })
}
