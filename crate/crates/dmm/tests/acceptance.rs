//! Acceptance gate for the crate: one test per shipped guarantee.
//! Each test pins its tolerances as constants and prints a PASS line
//! describing what was checked.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dmm::transform;
use dmm::{
    parse_program, serialize_program, validate, Error, MachineState, NetworkMatrix, NeuronId,
    NeuronType, OutputPortId, Program, Sign, Signature, StreamKind, StreamValue, TransformRegistry,
};

fn networks_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("networks")
}

fn read_network(name: &str) -> String {
    std::fs::read_to_string(networks_dir().join(name)).unwrap()
}

fn load(name: &str) -> Program {
    parse_program(&read_network(name), &TransformRegistry::builtin()).unwrap()
}

fn out(type_name: &str, copy: u32) -> OutputPortId {
    NeuronId::new(type_name, copy).output()
}

fn scalar(value: &StreamValue) -> f64 {
    match value {
        StreamValue::Scalar(x) => *x,
        other => panic!("expected scalar, got {other}"),
    }
}

const RNN_TOLERANCE: f64 = 1e-12;
const RNN_INSTANCES: u64 = 20;
const RNN_UNITS: usize = 8;
const RNN_INPUTS: usize = 4;
const RNN_TICKS: u64 = 50;

#[test]
fn criterion_1_recurrent_networks_match_reference_simulation() {
    let mut worst: f64 = 0.0;
    for instance in 0..RNN_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + instance);
        let w: Vec<Vec<f64>> = (0..RNN_UNITS)
            .map(|_| {
                (0..RNN_UNITS)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let u: Vec<Vec<f64>> = (0..RNN_UNITS)
            .map(|_| {
                (0..RNN_INPUTS)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let x: Vec<f64> = (0..RNN_INPUTS)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();

        let mut types = vec![NeuronType::new(
            "h",
            vec![StreamKind::Scalar],
            StreamKind::Scalar,
            transform::tanh_scalar(),
        )
        .unwrap()];
        for (m, &xm) in x.iter().enumerate() {
            types.push(
                NeuronType::new(
                    format!("in{m}"),
                    vec![],
                    StreamKind::Scalar,
                    transform::const_scalar(xm),
                )
                .unwrap(),
            );
        }
        let signature = Signature::new(types).unwrap();

        let mut matrix = NetworkMatrix::new();
        for j in 0..RNN_UNITS {
            let input = NeuronId::new("h", j as u32).input(0);
            for (k, row) in w[j].iter().enumerate() {
                matrix.insert_entry(input.clone(), out("h", k as u32), *row);
            }
            for (m, coeff) in u[j].iter().enumerate() {
                matrix.insert_entry(input.clone(), out(&format!("in{m}"), 0), *coeff);
            }
        }

        let mut initial = BTreeMap::new();
        for (m, &xm) in x.iter().enumerate() {
            initial.insert(out(&format!("in{m}"), 0), StreamValue::Scalar(xm));
        }
        let mut machine = MachineState::init(signature, matrix, initial, None, 0).unwrap();

        let watch: Vec<OutputPortId> = (0..RNN_UNITS).map(|j| out("h", j as u32)).collect();
        let trace = machine.run(RNN_TICKS, &watch).unwrap();

        let mut h = vec![0.0f64; RNN_UNITS];
        for record in &trace {
            let mut next = vec![0.0f64; RNN_UNITS];
            for j in 0..RNN_UNITS {
                let mut acc = 0.0f64;
                for (k, value) in h.iter().enumerate() {
                    acc += w[j][k] * value;
                }
                for (m, value) in x.iter().enumerate() {
                    acc += u[j][m] * value;
                }
                next[j] = acc.tanh();
            }
            h = next;
            for (j, (port, value)) in record.values.iter().enumerate() {
                assert_eq!(port, &watch[j]);
                worst = worst.max((scalar(value) - h[j]).abs());
            }
        }
    }
    assert!(worst <= RNN_TOLERANCE, "worst deviation {worst:e}");
    println!(
        "criterion 1: {RNN_INSTANCES} recurrent networks x {RNN_TICKS} ticks match a \
         reference simulation within {RNN_TOLERANCE:e} (worst {worst:e}): PASS"
    );
}

const REMIX_TICKS: u64 = 10_000;
const SIGMA_BOUND: f64 = 3.0;

fn sample_of(record: &dmm::TickRecord) -> &dmm::SampleValue {
    match &record.values[0].1 {
        StreamValue::Sample(s) => s,
        other => panic!("expected sample, got {other}"),
    }
}

#[test]
fn criterion_2_remix_frequencies_and_weights() {
    let program = load("remix.dmm");
    let mut machine = program.machine(2024).unwrap();
    let trace = machine.run(REMIX_TICKS, &[out("mix", 0)]).unwrap();
    let expected_weight = 0.0 + 0.3f64.abs() * 1.0 + 0.7f64.abs() * 1.0;
    let mut count_a = 0u64;
    for record in &trace {
        let sample = sample_of(record);
        assert_eq!(
            sample.weight, expected_weight,
            "weight must equal the fold exactly"
        );
        assert_eq!(sample.sign, Sign::Plus);
        match sample.payload.as_str() {
            "a" => count_a += 1,
            "b" => {}
            other => panic!("unexpected payload {other}"),
        }
    }
    let freq_a = count_a as f64 / REMIX_TICKS as f64;
    let sigma = (0.3 * 0.7 / REMIX_TICKS as f64).sqrt();
    assert!(
        (freq_a - 0.3).abs() <= SIGMA_BOUND * sigma,
        "frequency {freq_a} outside 0.3 +/- {}",
        SIGMA_BOUND * sigma
    );

    let text = "\
type s1 arity 0 out sample<tok> transform sample_source(p:1)
type s2 arity 0 out sample<tok> transform sample_source(q:1)
type s3 arity 0 out sample<tok> transform sample_source(r:1)
type mix arity 1 in sample<tok> out sample<tok> transform sample_identity
weight mix.0.0 <- s1.0 1
weight mix.0.0 <- s2.0 2
weight mix.0.0 <- s3.0 3
init s1.0 p/1/+
init s2.0 q/1/+
init s3.0 r/1/+
watch mix.0
";
    let program = parse_program(text, &TransformRegistry::builtin()).unwrap();
    let mut machine = program.machine(77).unwrap();
    let trace = machine.run(REMIX_TICKS, &[out("mix", 0)]).unwrap();
    let expected_weight = 0.0 + 1.0f64.abs() * 1.0 + 2.0f64.abs() * 1.0 + 3.0f64.abs() * 1.0;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for record in &trace {
        let sample = sample_of(record);
        assert_eq!(sample.weight, expected_weight);
        *counts.entry(sample.payload.clone()).or_default() += 1;
    }
    for (payload, p) in [("p", 1.0 / 6.0), ("q", 2.0 / 6.0), ("r", 3.0 / 6.0)] {
        let freq = *counts.get(payload).unwrap_or(&0) as f64 / REMIX_TICKS as f64;
        let sigma = (p * (1.0 - p) / REMIX_TICKS as f64).sqrt();
        assert!(
            (freq - p).abs() <= SIGMA_BOUND * sigma,
            "payload {payload}: frequency {freq} outside {p} +/- {}",
            SIGMA_BOUND * sigma
        );
    }
    println!(
        "criterion 2: remix frequencies over {REMIX_TICKS} ticks within {SIGMA_BOUND} sigma \
         and emitted weights exactly equal the coefficient-weight fold: PASS"
    );
}

const SUPPORT_TICKS: u64 = 1000;

fn assert_support_clean(matrix: &NetworkMatrix) {
    assert!(matrix.support_size() < 1000, "support grew unexpectedly");
    for (input, output, coefficient) in matrix.entries() {
        assert!(
            coefficient != 0.0,
            "stored zero coefficient at {input} <- {output}"
        );
    }
}

#[test]
fn criterion_3_finite_support_is_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let signature = Signature::new(vec![NeuronType::new(
        "s",
        vec![StreamKind::Scalar],
        StreamKind::Scalar,
        transform::tanh_scalar(),
    )
    .unwrap()])
    .unwrap();
    let mut matrix = NetworkMatrix::new();
    for c_in in 0..5u32 {
        for c_out in 0..5u32 {
            let coefficient: f64 = rng.random_range(-1.0..1.0);
            if coefficient.abs() > 0.25 {
                matrix.insert_entry(
                    NeuronId::new("s", c_in).input(0),
                    out("s", c_out),
                    coefficient,
                );
            }
        }
    }
    assert!(!matrix.is_empty());
    let mut initial = BTreeMap::new();
    for c in 0..5u32 {
        initial.insert(
            out("s", c),
            StreamValue::Scalar(rng.random_range(-1.0..1.0)),
        );
    }
    let mut machine = MachineState::init(signature, matrix, initial, None, 5).unwrap();
    for _ in 0..SUPPORT_TICKS {
        machine.step().unwrap();
        assert_support_clean(machine.matrix());
    }

    // A self-updating network whose update cancels one entry to exact zero:
    // mix receives MA - MB, and both share an identical (s.0.0 <- s.0) entry.
    let s_in = NeuronId::new("s", 0).input(0);
    let mix_in = NeuronId::new("mix", 0).input(0);
    let mut target = NetworkMatrix::new();
    target.insert_entry(mix_in.clone(), out("ma", 0), 1.0);
    target.insert_entry(mix_in.clone(), out("mb", 0), -1.0);
    target.insert_entry(s_in.clone(), out("one", 0), 1.0);
    let mut ma = target.clone();
    ma.insert_entry(s_in.clone(), out("s", 0), 2.0);
    let mut mb = NetworkMatrix::new();
    mb.insert_entry(s_in.clone(), out("s", 0), 2.0);

    let signature = Signature::new(vec![
        NeuronType::new(
            "one",
            vec![],
            StreamKind::Scalar,
            transform::const_scalar(1.0),
        )
        .unwrap(),
        NeuronType::new(
            "s",
            vec![StreamKind::Scalar],
            StreamKind::Scalar,
            transform::identity_scalar(),
        )
        .unwrap(),
        NeuronType::new(
            "ma",
            vec![],
            StreamKind::Matrix,
            transform::const_matrix(ma.clone()),
        )
        .unwrap(),
        NeuronType::new(
            "mb",
            vec![],
            StreamKind::Matrix,
            transform::const_matrix(mb.clone()),
        )
        .unwrap(),
        NeuronType::new(
            "mix",
            vec![StreamKind::Matrix],
            StreamKind::Matrix,
            transform::identity_matrix_stream(),
        )
        .unwrap(),
    ])
    .unwrap();

    let mut start = target.clone();
    start.insert_entry(s_in.clone(), out("s", 0), 5.0);
    let mut initial = BTreeMap::new();
    initial.insert(out("one", 0), StreamValue::Scalar(1.0));
    initial.insert(out("s", 0), StreamValue::Scalar(1.0));
    initial.insert(out("ma", 0), StreamValue::Matrix(ma));
    initial.insert(out("mb", 0), StreamValue::Matrix(mb));
    let mut machine =
        MachineState::init(signature, start, initial, Some(out("mix", 0)), 5).unwrap();
    for _ in 0..SUPPORT_TICKS {
        machine.step().unwrap();
        assert_eq!(
            machine.matrix(),
            &target,
            "swap must land exactly on the difference"
        );
        assert!(!machine.matrix().contains(&s_in, &out("s", 0)));
        assert_support_clean(machine.matrix());
    }
    println!(
        "criterion 3: support stayed finite with no stored zeros across {SUPPORT_TICKS} ticks, \
         including exact cancellation through every self-update: PASS"
    );
}

#[test]
fn criterion_4_counting_and_pair_recurrence_are_exact() {
    let program = load("accumulator.dmm");
    let mut machine = program.machine(0).unwrap();
    let trace = machine.run(100, &[out("s", 0)]).unwrap();
    for (i, record) in trace.iter().enumerate() {
        assert_eq!(
            scalar(&record.values[0].1),
            (i + 1) as f64,
            "tick {}",
            i + 1
        );
    }

    let program = load("fib.dmm");
    let mut machine = program.machine(0).unwrap();
    let trace = machine.run(40, &[out("x", 0)]).unwrap();
    let (mut prev, mut curr) = (1u64, 1u64);
    for record in &trace {
        assert_eq!(
            scalar(&record.values[0].1),
            curr as f64,
            "tick {}",
            record.tick
        );
        (prev, curr) = (curr, prev + curr);
    }
    assert_eq!(prev, 165_580_141);
    println!(
        "criterion 4: counting matches 1..=100 and the pair recurrence matches the \
         integer reference through tick 40, both exactly: PASS"
    );
}

const EQUIVALENCE_TICKS: u64 = 20;

#[test]
fn criterion_5_self_update_matches_freshly_initialized_machine() {
    let program = load("selfmod.dmm");
    let mut a = program.machine(0).unwrap();
    a.step().unwrap();

    let mut expected = NetworkMatrix::new();
    expected.insert_entry(NeuronId::new("hold", 0).input(0), out("u", 0), 1.0);
    expected.insert_entry(NeuronId::new("s", 0).input(0), out("s", 0), 2.0);
    assert_eq!(
        a.matrix(),
        &expected,
        "first step must install the updater's payload"
    );

    let mut probe = a.clone();
    for _ in 0..EQUIVALENCE_TICKS {
        probe.step().unwrap();
        assert_eq!(probe.matrix(), &expected);
    }

    let mut b = MachineState::init(
        program.signature.clone(),
        expected.clone(),
        a.outputs().clone(),
        program.updater.clone(),
        0,
    )
    .unwrap();
    let watch = [out("s", 0), out("hold", 0)];
    let trace_a = a.run(EQUIVALENCE_TICKS, &watch).unwrap();
    let trace_b = b.run(EQUIVALENCE_TICKS, &watch).unwrap();
    for (ra, rb) in trace_a.iter().zip(&trace_b) {
        assert_eq!(ra.tick, rb.tick + 1);
        assert_eq!(ra.values, rb.values);
        assert_eq!(ra.support_size, rb.support_size);
    }
    println!(
        "criterion 5: the rewritten machine equals a machine initialized directly with the \
         new matrix and the tick-1 outputs, for {EQUIVALENCE_TICKS} further ticks: PASS"
    );
}

#[test]
fn criterion_6_equal_seeds_give_byte_identical_traces() {
    let run = |name: &str, seed: &str| {
        let net = networks_dir().join(name);
        let output = Command::new(env!("CARGO_BIN_EXE_dmm"))
            .args([
                "run",
                "--net",
                net.to_str().unwrap(),
                "--ticks",
                "200",
                "--seed",
                seed,
            ])
            .output()
            .expect("failed to spawn dmm");
        assert!(output.status.success());
        output.stdout
    };
    let first = run("remix.dmm", "42");
    assert_eq!(
        first,
        run("remix.dmm", "42"),
        "same seed must reproduce bytes"
    );
    assert_ne!(
        first,
        run("remix.dmm", "43"),
        "different seed should diverge"
    );
    assert_eq!(run("fib.dmm", "1"), run("fib.dmm", "99"));
    println!("criterion 6: repeated runs with equal seeds are byte-identical: PASS");
}

#[test]
fn criterion_7_shipped_networks_round_trip_canonically() {
    let registry = TransformRegistry::builtin();
    let mut count = 0;
    for entry in std::fs::read_dir(networks_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("dmm") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let program = parse_program(&text, &registry).unwrap();
        let canon = serialize_program(&program);
        let reparsed =
            parse_program(&canon, &registry).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(program, reparsed, "{}", path.display());
        assert_eq!(serialize_program(&reparsed), canon, "{}", path.display());
        count += 1;
    }
    assert_eq!(count, 6, "expected all shipped networks to be covered");
    println!(
        "criterion 7: all {count} shipped networks round-trip and re-serialize verbatim: PASS"
    );
}

const FUZZ_EDITS: usize = 1000;

#[test]
fn criterion_8_mutated_sources_parse_or_diagnose() {
    let registry = TransformRegistry::builtin();
    let names = [
        "accumulator.dmm",
        "fib.dmm",
        "flipflop.dmm",
        "mixed.dmm",
        "remix.dmm",
        "selfmod.dmm",
    ];
    let sources: Vec<String> = names.iter().map(|n| read_network(n)).collect();
    let fragments = [
        "weight ",
        "<-",
        "vector<",
        "sample<",
        "init ",
        "9",
        ".",
        "#",
        "~",
        "transform",
        "{",
        "watch ",
        "arity ",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut still_valid = 0usize;
    for i in 0..FUZZ_EDITS {
        let mut chars: Vec<char> = sources[i % sources.len()].chars().collect();
        for _ in 0..rng.random_range(1..=3) {
            match rng.random_range(0..4u32) {
                0 if !chars.is_empty() => {
                    let at = rng.random_range(0..chars.len());
                    chars[at] = rng.random_range(0x20u8..0x7f) as char;
                }
                1 if !chars.is_empty() => {
                    let at = rng.random_range(0..chars.len());
                    chars.remove(at);
                }
                2 => {
                    let at = rng.random_range(0..=chars.len());
                    chars.insert(at, rng.random_range(0x20u8..0x7f) as char);
                }
                _ => {
                    let at = rng.random_range(0..=chars.len());
                    let fragment = fragments[rng.random_range(0..fragments.len())];
                    for (k, ch) in fragment.chars().enumerate() {
                        chars.insert(at + k, ch);
                    }
                }
            }
        }
        let text: String = chars.into_iter().collect();
        match parse_program(&text, &registry) {
            Ok(program) => {
                still_valid += 1;
                assert!(
                    validate(&program.signature, &program.matrix).is_empty(),
                    "accepted program must validate"
                );
            }
            Err(Error::Parse(d)) => {
                assert!(d.line >= 1, "diagnostic without a line: {d}");
                assert!(d.column >= 1, "diagnostic without a column: {d}");
            }
            Err(other) => panic!("parser returned a non-diagnostic error: {other}"),
        }
    }
    println!(
        "criterion 8: {FUZZ_EDITS} mutated sources each parsed cleanly ({still_valid}) or \
         produced a positioned diagnostic, with no panics: PASS"
    );
}
