use chirpdnp::experiments::{InitialState, LineShape, ScanGrid};
use chirpdnp::hamiltonian::{Hyperfine, NuclearSign};
use chirpdnp::propagator::RelaxMode;
use chirpdnp_cli::config::{AseSection, ChirpSection, IntegratorSection, PulseSection, SpinSection};
use chirpdnp_cli::{parse_str, ExperimentKind, RunConfig};
use proptest::prelude::*;

fn num() -> impl Strategy<Value = f64> {
    -1e4..1e4f64
}

fn opt<T: std::fmt::Debug + Clone>(s: impl Strategy<Value = T>) -> impl Strategy<Value = Option<T>> {
    proptest::option::of(s)
}

fn hyperfine() -> impl Strategy<Value = Hyperfine> {
    prop_oneof![
        (num(), num()).prop_map(|(a, b)| Hyperfine::Explicit { a, b }),
        (num(), num()).prop_map(|(d, beta)| Hyperfine::Dipolar { d, beta }),
    ]
}

fn spin() -> impl Strategy<Value = SpinSection> {
    (
        opt(num()),
        opt(hyperfine()),
        opt(num()),
        opt(prop_oneof![Just(NuclearSign::Positive), Just(NuclearSign::Negative)]),
    )
        .prop_map(|(omega0n, hyperfine, packet_offset, nuclear_sign)| SpinSection {
            omega0n,
            hyperfine,
            packet_offset,
            nuclear_sign,
        })
}

fn pulse() -> impl Strategy<Value = PulseSection> {
    (opt(num()), opt(num()), opt(num()), opt(num()), opt(num())).prop_map(
        |(omega1, offset_start, offset_end, rate, phase_deg)| PulseSection {
            omega1,
            offset_start,
            offset_end,
            rate,
            phase_deg,
        },
    )
}

fn integrator() -> impl Strategy<Value = IntegratorSection> {
    (
        opt(num()),
        opt(num()),
        opt(prop_oneof![Just(RelaxMode::AllOffdiagonal), Just(RelaxMode::DqZqOnly)]),
        opt(num()),
        opt(0..20u32),
        opt(any::<bool>()),
    )
        .prop_map(|(dt, t2, relax_mode, conv_tol, max_halvings, converge)| IntegratorSection {
            dt,
            t2,
            relax_mode,
            conv_tol,
            max_halvings,
            converge,
        })
}

fn line() -> impl Strategy<Value = LineShape> {
    prop_oneof![
        (num(), num(), 1..50usize, opt(num())).prop_map(|(center, sigma, packets, half_span)| LineShape::Gaussian {
            center,
            sigma,
            packets,
            half_span
        }),
        (num(), num(), 1..50usize).prop_map(|(center, sigma, packets)| LineShape::Sampled { center, sigma, packets }),
        (num(), num(), 1..50usize).prop_map(|(start, end, packets)| LineShape::Uniform { start, end, packets }),
        (prop::collection::vec(num(), 1..6), opt(prop::collection::vec(num(), 1..6)))
            .prop_map(|(offsets, weights)| LineShape::Explicit { offsets, weights }),
    ]
}

fn grid() -> impl Strategy<Value = ScanGrid> {
    let axis = || prop::collection::vec(num(), 0..4);
    (axis(), axis(), axis(), axis(), num()).prop_map(|(omega0n, rate, omega1, beta_deg, dipolar_d)| ScanGrid {
        omega0n,
        rate,
        omega1,
        beta_deg,
        dipolar_d,
    })
}

fn kind() -> impl Strategy<Value = ExperimentKind> {
    prop_oneof![
        Just(ExperimentKind::Chirp),
        Just(ExperimentKind::Ise),
        Just(ExperimentKind::EprLine),
        Just(ExperimentKind::Ase),
        Just(ExperimentKind::Scan),
    ]
}

fn config() -> impl Strategy<Value = RunConfig> {
    let chirp = (
        opt(prop::collection::vec(num(), 0..5)),
        opt(prop_oneof![Just(InitialState::Z), num().prop_map(|phi_deg| InitialState::Coherence { phi_deg })]),
    )
        .prop_map(|(packet_offsets, initial)| ChirpSection { packet_offsets, initial });
    let ase = (opt(0..100usize), opt(num())).prop_map(|(sweeps, delay)| AseSection { sweeps, delay });
    (
        (opt(0..3u32), opt(kind()), opt(spin()), opt(pulse()), opt(integrator())),
        (opt(chirp), opt(line()), opt(ase), opt(grid())),
        (opt(any::<u64>()), opt(1..1000usize), opt("[a-z_]{1,12}")),
    )
        .prop_map(
            |(
                (schema_version, experiment, spin, pulse, integrator),
                (chirp, line, ase, scan),
                (seed, sample_stride, output_prefix),
            )| RunConfig {
                schema_version,
                experiment,
                spin,
                pulse,
                integrator,
                chirp,
                line,
                ase,
                scan,
                seed,
                sample_stride,
                output_prefix,
            },
        )
}

proptest! {
    #[test]
    fn serialized_configs_parse_back_unchanged(cfg in config()) {
        let text = chirpdnp_cli::config::to_json(&cfg);
        prop_assert_eq!(parse_str(&text).unwrap(), cfg);
    }
}
