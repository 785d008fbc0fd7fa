//! JSON run configuration (`schema_version: 1`).
//!
//! Every section is optional at the serde level so that a missing required
//! value is reported as a [`ConfigError::Validation`] naming the field, not as
//! a bare parse failure. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use chirpdnp::experiments::{window_covers_both, EprLine, InitialState, LineShape, ScanGrid};
use chirpdnp::hamiltonian::{matching_offsets, ChirpPulse, Hyperfine, NuclearSign, SpinSystemParams};
use chirpdnp::propagator::{IntegratorConfig, RelaxMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[serde(alias = "chirp-single")]
    Chirp,
    Ise,
    EprLine,
    Ase,
    Scan,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Chirp => "chirp",
            ExperimentKind::Ise => "ise",
            ExperimentKind::EprLine => "epr-line",
            ExperimentKind::Ase => "ase",
            ExperimentKind::Scan => "scan",
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    fn missing(field: &str, kind: ExperimentKind) -> Self {
        Self::invalid(field, format!("required for {} runs", kind.name()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSection {
    /// Nuclear Larmor frequency, MHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperfine: Option<Hyperfine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet_offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuclear_sign: Option<NuclearSign>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_end: Option<f64>,
    /// MHz/µs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    /// µs; default min(0.001·duration, 0.05/ν_max).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax_mode: Option<RelaxMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_halvings: Option<u32>,
    /// Halve dt until final ⟨Sz⟩, ⟨Iz⟩ settle (chirp and ise only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet_offsets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    /// Microwave-off evolution between sweeps, µs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    /// Must match the subcommand when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<SpinSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chirp: Option<ChirpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<LineShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ase: Option<AseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Keep every n-th integration step in trajectory outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_stride: Option<usize>,
    /// Output file prefix; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_prefix: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t2: Option<f64>,
    pub seed: Option<u64>,
    pub stride: Option<usize>,
}

/// A validated run, in library types.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Chirp {
        pulse: ChirpPulse,
        offsets: Vec<f64>,
        initial: InitialState,
    },
    Ise {
        pulse: ChirpPulse,
        spin: SpinSystemParams,
    },
    EprLine {
        pulse: ChirpPulse,
        spin: SpinSystemParams,
        line: EprLine,
    },
    Ase {
        pulse: ChirpPulse,
        spin: SpinSystemParams,
        sweeps: usize,
        delay: f64,
    },
    Scan {
        pulse: ChirpPulse,
        spin: SpinSystemParams,
        grid: ScanGrid,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub kind: ExperimentKind,
    pub plan: Plan,
    pub integrator: IntegratorConfig,
    pub converge: bool,
    pub prefix: String,
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}

pub fn to_json(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

fn finite(field: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::invalid(field, "must be finite"))
    }
}

fn required(field: &str, x: Option<f64>, kind: ExperimentKind) -> Result<f64, ConfigError> {
    finite(field, x.ok_or_else(|| ConfigError::missing(field, kind))?)
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if o.dt.is_some() || o.t2.is_some() {
            let integ = self.integrator.get_or_insert_with(IntegratorSection::default);
            integ.dt = o.dt.or(integ.dt);
            integ.t2 = o.t2.or(integ.t2);
        }
        self.seed = o.seed.or(self.seed);
        self.sample_stride = o.stride.or(self.sample_stride);
    }

    fn pulse(&self, kind: ExperimentKind) -> Result<ChirpPulse, ConfigError> {
        let s = self.pulse.as_ref().ok_or_else(|| ConfigError::missing("pulse", kind))?;
        let rate = required("pulse.rate", s.rate, kind)?;
        if rate <= 0.0 {
            return Err(ConfigError::invalid("pulse.rate", "rate must be positive"));
        }
        let omega1 = required("pulse.omega1", s.omega1, kind)?;
        if omega1 < 0.0 {
            return Err(ConfigError::invalid("pulse.omega1", "amplitude must be non-negative"));
        }
        let start = required("pulse.offset_start", s.offset_start, kind)?;
        let end = required("pulse.offset_end", s.offset_end, kind)?;
        if start == end {
            return Err(ConfigError::invalid("pulse.offset_end", "window has zero width"));
        }
        let phase = finite("pulse.phase_deg", s.phase_deg.unwrap_or(0.0))?;
        ChirpPulse::new(omega1, start, end, rate)
            .map(|p| p.with_phase(phase.to_radians()))
            .map_err(|e| ConfigError::invalid("pulse", e.to_string()))
    }

    fn spin(&self, kind: ExperimentKind) -> Result<SpinSystemParams, ConfigError> {
        let s = self.spin.as_ref().ok_or_else(|| ConfigError::missing("spin", kind))?;
        let omega0n = required("spin.omega0n", s.omega0n, kind)?;
        if omega0n == 0.0 {
            return Err(ConfigError::invalid("spin.omega0n", "nuclear Larmor frequency must be non-zero"));
        }
        let hyperfine = s.hyperfine.ok_or_else(|| ConfigError::missing("spin.hyperfine", kind))?;
        let values = match hyperfine {
            Hyperfine::Explicit { a, b } => [("spin.hyperfine.a", a), ("spin.hyperfine.b", b)],
            Hyperfine::Dipolar { d, beta } => [("spin.hyperfine.d", d), ("spin.hyperfine.beta", beta)],
        };
        for (field, v) in values {
            finite(field, v)?;
        }
        let p = SpinSystemParams {
            omega0n,
            hyperfine,
            packet_offset: finite("spin.packet_offset", s.packet_offset.unwrap_or(0.0))?,
            nuclear_sign: s.nuclear_sign.unwrap_or_default(),
        };
        p.validate().map_err(|e| ConfigError::invalid("spin", e.to_string()))?;
        Ok(p)
    }

    fn integrator(&self) -> Result<(IntegratorConfig, bool), ConfigError> {
        let s = self.integrator.clone().unwrap_or_default();
        let base = IntegratorConfig::default();
        if let Some(dt) = s.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(ConfigError::invalid("integrator.dt", "step must be positive"));
            }
        }
        if let Some(t2) = s.t2 {
            if !(t2.is_finite() && t2 > 0.0) {
                return Err(ConfigError::invalid("integrator.t2", "T2 must be positive"));
            }
        }
        let conv_tol = finite("integrator.conv_tol", s.conv_tol.unwrap_or(base.conv_tol))?;
        if conv_tol <= 0.0 {
            return Err(ConfigError::invalid("integrator.conv_tol", "tolerance must be positive"));
        }
        if self.sample_stride == Some(0) {
            return Err(ConfigError::invalid("sample_stride", "stride must be at least 1"));
        }
        let cfg = IntegratorConfig {
            dt: s.dt,
            t2: s.t2,
            relax_mode: s.relax_mode.unwrap_or(base.relax_mode),
            conv_tol,
            max_halvings: s.max_halvings.unwrap_or(base.max_halvings),
            sample_stride: self.sample_stride,
            store_states: false,
        };
        Ok((cfg, s.converge.unwrap_or(false)))
    }

    /// Check the configuration for a `kind` run and convert it to library types.
    pub fn validate(&self, kind: ExperimentKind) -> Result<Validated, ConfigError> {
        match self.schema_version {
            None => return Err(ConfigError::missing("schema_version", kind)),
            Some(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(ConfigError::invalid(
                    "schema_version",
                    format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
                ))
            }
        }
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(ConfigError::invalid(
                    "experiment",
                    format!("config is for `{}` but the `{}` command was given", k.name(), kind.name()),
                ));
            }
        }
        let (integrator, converge) = self.integrator()?;
        if converge && !matches!(kind, ExperimentKind::Chirp | ExperimentKind::Ise) {
            return Err(ConfigError::invalid(
                "integrator.converge",
                "step refinement is available for chirp and ise runs",
            ));
        }
        if integrator.relax_mode == RelaxMode::DqZqOnly && integrator.t2.is_some() && kind == ExperimentKind::Chirp {
            return Err(ConfigError::invalid(
                "integrator.relax_mode",
                "dq-zq-only needs the electron-nucleus pair",
            ));
        }
        let pulse = self.pulse(kind)?;
        let plan = match kind {
            ExperimentKind::Chirp => {
                let section = self.chirp.clone().unwrap_or_default();
                let offsets = section.packet_offsets.unwrap_or_else(|| vec![0.0]);
                if offsets.is_empty() {
                    return Err(ConfigError::invalid("chirp.packet_offsets", "at least one packet is required"));
                }
                for &o in &offsets {
                    finite("chirp.packet_offsets", o)?;
                }
                let initial = section.initial.unwrap_or(InitialState::Z);
                if let InitialState::Coherence { phi_deg } = initial {
                    finite("chirp.initial.phi_deg", phi_deg)?;
                }
                Plan::Chirp {
                    pulse,
                    offsets,
                    initial,
                }
            }
            ExperimentKind::Ise => {
                let spin = self.spin(kind)?;
                matching_offsets(&spin, pulse.omega1).map_err(|e| ConfigError::invalid("pulse.omega1", e.to_string()))?;
                Plan::Ise { pulse, spin }
            }
            ExperimentKind::EprLine => {
                let spin = self.spin(kind)?;
                matching_offsets(&spin, pulse.omega1).map_err(|e| ConfigError::invalid("pulse.omega1", e.to_string()))?;
                let shape = self.line.as_ref().ok_or_else(|| ConfigError::missing("line", kind))?;
                let line = shape
                    .build(self.seed.unwrap_or(0))
                    .map_err(|e| ConfigError::invalid("line", e.to_string()))?;
                Plan::EprLine { pulse, spin, line }
            }
            ExperimentKind::Ase => {
                let spin = self.spin(kind)?;
                let section = self.ase.clone().unwrap_or_default();
                let sweeps = section.sweeps.unwrap_or(20);
                if sweeps == 0 {
                    return Err(ConfigError::invalid("ase.sweeps", "at least one sweep is required"));
                }
                let delay = finite("ase.delay", section.delay.unwrap_or(0.0))?;
                if delay < 0.0 {
                    return Err(ConfigError::invalid("ase.delay", "delay must be non-negative"));
                }
                let (m, _) = window_covers_both(&pulse, &spin)
                    .map_err(|e| ConfigError::invalid("pulse.omega1", e.to_string()))?;
                let (lo, hi) = pulse.window();
                if (lo..=hi).contains(&m.zq) {
                    return Err(ConfigError::invalid(
                        "pulse",
                        format!("window [{lo}, {hi}] covers the ZQ matching offset {:.3}", m.zq),
                    ));
                }
                if !(lo..=hi).contains(&m.dq) {
                    return Err(ConfigError::invalid(
                        "pulse",
                        format!("window [{lo}, {hi}] misses the DQ matching offset {:.3}", m.dq),
                    ));
                }
                Plan::Ase {
                    pulse,
                    spin,
                    sweeps,
                    delay,
                }
            }
            ExperimentKind::Scan => {
                let spin = self.spin(kind)?;
                let grid = self.scan.clone().ok_or_else(|| ConfigError::missing("scan", kind))?;
                if grid.is_empty() {
                    return Err(ConfigError::invalid("scan", "at least one axis must have values"));
                }
                let axes = [
                    ("scan.omega0n", &grid.omega0n),
                    ("scan.rate", &grid.rate),
                    ("scan.omega1", &grid.omega1),
                    ("scan.beta_deg", &grid.beta_deg),
                ];
                for (field, axis) in axes {
                    for &v in axis.iter() {
                        finite(field, v)?;
                    }
                }
                if grid.rate.iter().any(|&k| k <= 0.0) {
                    return Err(ConfigError::invalid("scan.rate", "rate must be positive"));
                }
                finite("scan.dipolar_d", grid.dipolar_d)?;
                Plan::Scan { pulse, spin, grid }
            }
        };
        Ok(Validated {
            kind,
            plan,
            integrator,
            converge,
            prefix: self.output_prefix.clone().unwrap_or_else(|| kind.name().to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ISE: &str = r#"{
        "schema_version": 1,
        "experiment": "ise",
        "spin": { "omega0n": 100, "hyperfine": { "form": "explicit", "a": 0, "b": 2.25 } },
        "pulse": { "omega1": 25.15, "offset_start": -200, "offset_end": 200, "rate": 1 }
    }"#;

    fn field_of(e: ConfigError) -> String {
        match e {
            ConfigError::Validation { field, .. } => field,
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn ise_config_echoes_values() {
        let cfg = parse_str(ISE).unwrap();
        let v = cfg.validate(ExperimentKind::Ise).unwrap();
        match v.plan {
            Plan::Ise { pulse, spin } => {
                assert_eq!(pulse.omega1, 25.15);
                assert_eq!(spin.b(), 2.25);
            }
            other => panic!("wrong plan {other:?}"),
        }
        assert_eq!(v.prefix, "ise");
        assert!(!v.converge);
    }

    #[test]
    fn missing_omega0n_names_the_field() {
        let text = ISE.replace("\"omega0n\": 100, ", "");
        let err = parse_str(&text).unwrap().validate(ExperimentKind::Ise).unwrap_err();
        assert_eq!(field_of(err), "spin.omega0n");
    }

    #[test]
    fn zero_rate_is_rejected() {
        let text = ISE.replace("\"rate\": 1", "\"rate\": 0");
        let err = parse_str(&text).unwrap().validate(ExperimentKind::Ise).unwrap_err();
        assert!(err.to_string().contains("rate must be positive"), "{err}");
        assert_eq!(field_of(err), "pulse.rate");
    }

    #[test]
    fn unknown_keys_and_bad_json_are_parse_errors() {
        let text = ISE.replace("\"rate\": 1", "\"rate\": 1, \"speed\": 2");
        assert!(matches!(parse_str(&text), Err(ConfigError::Parse { .. })));
        match parse_str("{\n  \"schema_version\": 1,\n  oops\n}") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kind_and_version_must_match() {
        let cfg = parse_str(ISE).unwrap();
        assert_eq!(field_of(cfg.validate(ExperimentKind::Ase).unwrap_err()), "experiment");
        let text = ISE.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert_eq!(field_of(parse_str(&text).unwrap().validate(ExperimentKind::Ise).unwrap_err()), "schema_version");
    }

    #[test]
    fn ase_window_is_checked_before_running() {
        let text = ISE.replace("\"experiment\": \"ise\"", "\"experiment\": \"ase\"");
        let err = parse_str(&text).unwrap().validate(ExperimentKind::Ase).unwrap_err();
        assert!(err.to_string().contains("ZQ"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = parse_str(ISE).unwrap();
        cfg.apply(&Overrides {
            dt: Some(0.01),
            t2: Some(5.0),
            seed: Some(3),
            stride: Some(7),
        });
        let v = cfg.validate(ExperimentKind::Ise).unwrap();
        assert_eq!(v.integrator.dt, Some(0.01));
        assert_eq!(v.integrator.t2, Some(5.0));
        assert_eq!(v.integrator.sample_stride, Some(7));
        assert_eq!(cfg.seed, Some(3));
    }

    #[test]
    fn chirp_defaults() {
        let cfg = parse_str(
            r#"{"schema_version": 1, "pulse": {"omega1": 4, "offset_start": -600, "offset_end": 600, "rate": 1.5}}"#,
        )
        .unwrap();
        match cfg.validate(ExperimentKind::Chirp).unwrap().plan {
            Plan::Chirp { offsets, initial, .. } => {
                assert_eq!(offsets, vec![0.0]);
                assert_eq!(initial, InitialState::Z);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(field_of(cfg.validate(ExperimentKind::Ise).unwrap_err()), "spin");
    }
}
