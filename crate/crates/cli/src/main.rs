//! Command-line front end: run and sample circuits, verify gadgets, run
//! the Clifford-group survey, decompose ancilla states, and benchmark
//! scaling.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use serde::Serialize;

use magicsim::bench::scaling_bench;
use magicsim::circuit::Circuit;
use magicsim::decomp::{pauli_coefficients, stabilizer_frame};
use magicsim::error::Error;
use magicsim::gadget::{
    builtin, expand_gadgets, state_from_json, verify_gadget, AncillaState, GadgetDef, GadgetLibrary,
    BUILTIN_NAMES,
};
use magicsim::mixture::{exact_distribution, run_sample, StabMixture, MAX_EXACT_MEASUREMENTS};
use magicsim::search::{cache_from_json, cache_to_json, enumerate_group, survey_elements};

#[derive(Parser)]
#[command(name = "magicsim", version, about = "Stabilizer-circuit simulation and magic-state gadget analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct CommonOpts {
    /// RNG seed; always echoed in the output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Expand gadgets and compute the exact outcome distribution.
    Run {
        /// Circuit file in the text grammar.
        circuit: PathBuf,
        /// Extra gadget definition files (JSON) made available by name.
        #[arg(long = "gadget")]
        gadgets: Vec<PathBuf>,
        /// Refuse circuits with more recorded measurements than this.
        #[arg(long, default_value_t = MAX_EXACT_MEASUREMENTS)]
        max_measurements: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Expand gadgets and sample outcome records shot by shot.
    Sample {
        circuit: PathBuf,
        #[arg(long)]
        shots: usize,
        #[arg(long = "gadget")]
        gadgets: Vec<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Verify a gadget (builtin name or JSON file) against the oracle.
    VerifyGadget {
        /// Builtin gadget name or path to a gadget JSON file.
        #[arg(long)]
        gadget: String,
        /// Random data inputs checked beyond the 6-state design.
        #[arg(long, default_value_t = 100)]
        random_inputs: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Enumerate the Clifford group and search for reusable gadgets.
    Search {
        /// Body size: 1 (degenerate, no ancilla) or 2 (1 data + 1 ancilla).
        #[arg(long, default_value_t = 2)]
        qubits: usize,
        /// Enumeration cache file: loaded when present, written otherwise.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decompose a state file over Paulis and the stabilizer frame.
    Decompose {
        /// JSON state file: vector of [re,im] pairs or a square matrix.
        state: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Benchmark mixture-simulation scaling.
    Bench {
        /// Data-qubit sizes to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![64usize, 128, 256, 512])]
        sizes: Vec<usize>,
        /// Timing repetitions per point (median reported).
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
}

const SCHEMA: u32 = 1;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        // Bad inputs and violated preconditions are validation failures.
        Error::Parse { .. }
        | Error::UnknownGadget(_)
        | Error::InvalidGadget(_)
        | Error::InvalidDensity(_)
        | Error::InvalidState(_)
        | Error::NotExpanded(_)
        | Error::TooLarge(_)
        | Error::BranchOverflow(..)
        | Error::QubitOutOfRange { .. }
        | Error::BitOutOfRange { .. }
        | Error::DimensionMismatch(..)
        | Error::Io(_)
        | Error::Json(_) => 1,
        Error::NonPhysical(_) => 2,
    }
}

fn dispatch(cmd: Command) -> magicsim::Result<()> {
    match cmd {
        Command::Run { circuit, gadgets, max_measurements, common } => run_cmd(&circuit, &gadgets, max_measurements, &common),
        Command::Sample { circuit, shots, gadgets, common } => sample_cmd(&circuit, shots, &gadgets, &common),
        Command::VerifyGadget { gadget, random_inputs, common } => verify_cmd(&gadget, random_inputs, &common),
        Command::Search { qubits, cache, common } => search_cmd(qubits, cache.as_deref(), &common),
        Command::Decompose { state, common } => decompose_cmd(&state, &common),
        Command::Bench { sizes, repeats, common } => bench_cmd(&sizes, repeats, &common),
    }
}

fn library_with(gadget_paths: &[PathBuf]) -> magicsim::Result<GadgetLibrary> {
    let mut lib = GadgetLibrary::standard();
    for path in gadget_paths {
        let text = std::fs::read_to_string(path)?;
        let def = GadgetDef::from_json(&text)?;
        lib.register(def.name.clone(), def);
    }
    Ok(lib)
}

/// Expanded circuit plus its initial mixture.
fn prepare(path: &std::path::Path, lib: &GadgetLibrary) -> magicsim::Result<(Circuit, StabMixture)> {
    let text = std::fs::read_to_string(path)?;
    let circuit = Circuit::parse(&text)?;
    let (expanded, map) = expand_gadgets(&circuit, lib)?;
    let mixture = if map.allocations.is_empty() {
        StabMixture::trivial(&expanded)?
    } else {
        let q = map.total_ancilla_qubits();
        if q >= 2 {
            eprintln!(
                "note: {q} ancilla qubits decompose into up to {} stabilizer-frame terms; \
                 consumable gadgets grow this with every occurrence",
                6usize.pow(q as u32)
            );
        }
        StabMixture::init(&expanded, &map.joint_density()?, &map.ancilla_qubits())?
    };
    Ok((expanded, mixture))
}

#[derive(Serialize)]
struct RunOutput {
    schema: u32,
    command: &'static str,
    seed: u64,
    qubits: usize,
    classical_bits: usize,
    term_count: usize,
    distribution: BTreeMap<String, f64>,
}

fn run_cmd(path: &std::path::Path, gadgets: &[PathBuf], max_measurements: usize, common: &CommonOpts) -> magicsim::Result<()> {
    let lib = library_with(gadgets)?;
    let (expanded, mixture) = prepare(path, &lib)?;
    let measurements = expanded.measurement_count();
    if measurements > max_measurements {
        return Err(Error::BranchOverflow(measurements, max_measurements));
    }
    let distribution = exact_distribution(&expanded, &mixture)?;
    let out = RunOutput {
        schema: SCHEMA,
        command: "run",
        seed: common.seed,
        qubits: expanded.num_qubits,
        classical_bits: expanded.num_classical_bits,
        term_count: mixture.term_count(),
        distribution,
    };
    match common.format {
        Format::Json => println!("{}", serde_json::to_string(&out)?),
        Format::Text => {
            println!("qubits: {}  bits: {}  terms: {}  seed: {}", out.qubits, out.classical_bits, out.term_count, out.seed);
            for (k, p) in &out.distribution {
                let key = if k.is_empty() { "(empty)" } else { k };
                println!("  {key}  {p:.10}");
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SampleOutput {
    schema: u32,
    command: &'static str,
    seed: u64,
    shots: usize,
    classical_bits: usize,
    term_count: usize,
    counts: BTreeMap<String, usize>,
}

fn sample_cmd(path: &std::path::Path, shots: usize, gadgets: &[PathBuf], common: &CommonOpts) -> magicsim::Result<()> {
    if shots == 0 {
        return Err(Error::InvalidState("--shots must be positive".into()));
    }
    let lib = library_with(gadgets)?;
    let (expanded, mixture) = prepare(path, &lib)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for shot in 0..shots {
        // Per-shot stream: growing the shot count never reshuffles
        // earlier shots.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(common.seed);
        rng.set_stream(shot as u64);
        let record = run_sample(&expanded, &mixture, &mut rng)?;
        *counts.entry(record.bitstring(expanded.num_classical_bits)).or_insert(0) += 1;
    }
    let out = SampleOutput {
        schema: SCHEMA,
        command: "sample",
        seed: common.seed,
        shots,
        classical_bits: expanded.num_classical_bits,
        term_count: mixture.term_count(),
        counts,
    };
    match common.format {
        Format::Json => println!("{}", serde_json::to_string(&out)?),
        Format::Text => {
            println!("shots: {}  bits: {}  terms: {}  seed: {}", out.shots, out.classical_bits, out.term_count, out.seed);
            for (k, c) in &out.counts {
                let key = if k.is_empty() { "(empty)" } else { k };
                println!("  {key}  {c}");
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    schema: u32,
    command: &'static str,
    seed: u64,
    report: magicsim::gadget::GadgetReport,
}

fn verify_cmd(gadget: &str, random_inputs: usize, common: &CommonOpts) -> magicsim::Result<()> {
    let def = if BUILTIN_NAMES.contains(&gadget) {
        builtin(gadget)?
    } else if gadget == "T" {
        builtin("T_inject")?
    } else {
        let text = std::fs::read_to_string(gadget)?;
        GadgetDef::from_json(&text)?
    };
    let report = verify_gadget(&def, random_inputs)?;
    let pass = report.pass;
    let out = VerifyOutput { schema: SCHEMA, command: "verify-gadget", seed: common.seed, report };
    match common.format {
        Format::Json => println!("{}", serde_json::to_string(&out)?),
        Format::Text => {
            let r = &out.report;
            println!("gadget: {}  reusable: {}", r.name, r.reusable);
            println!("  unitary_match:    {:.3e} below 1", 1.0 - r.unitary_match);
            match r.ancilla_restored {
                Some(f) => println!("  ancilla_restored: {:.3e} below 1", 1.0 - f),
                None => println!("  ancilla_restored: n/a (consumable)"),
            }
            match r.leakage {
                Some(l) => println!("  leakage:          {l:.3e}"),
                None => println!("  leakage:          n/a (consumable)"),
            }
            println!("  body_contains_claimed_kind: {}", r.body_contains_claimed_kind);
            println!("  pass: {}", r.pass);
        }
    }
    if !pass {
        return Err(Error::InvalidGadget("verification failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SearchOutput {
    schema: u32,
    command: &'static str,
    seed: u64,
    report: magicsim::search::SurveyReport,
}

fn search_cmd(qubits: usize, cache: Option<&std::path::Path>, common: &CommonOpts) -> magicsim::Result<()> {
    let elements = match cache {
        Some(path) if path.exists() => cache_from_json(&std::fs::read_to_string(path)?)?,
        other => {
            let elems = enumerate_group(qubits)?;
            if let Some(path) = other {
                std::fs::write(path, cache_to_json(&elems)?)?;
            }
            elems
        }
    };
    let report = survey_elements(&elements, qubits)?;
    let out = SearchOutput { schema: SCHEMA, command: "search", seed: common.seed, report };
    match common.format {
        Format::Json => println!("{}", serde_json::to_string(&out)?),
        Format::Text => {
            let r = &out.report;
            println!(
                "group size {} ({} data + {} ancilla); solved {}, inconclusive {}",
                r.group_size,
                r.data_qubits,
                r.ancilla_qubits,
                r.solved,
                r.inconclusive_elements.len()
            );
            println!(
                "elements with solutions: {}  (families: {})  total solutions: {}",
                r.elements_with_solutions, r.family_count, r.total_solutions
            );
            println!("non-Clifford induced unitaries: {}", r.non_clifford_count);
            println!("induced unitaries up to phase:");
            for f in &r.families {
                println!("  {:>6}  {:?}  {}", f.count, f.classification, f.label);
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DecomposeOutput {
    schema: u32,
    command: &'static str,
    seed: u64,
    pauli: magicsim::decomp::PauliDecomposition,
    frame: magicsim::decomp::FrameDecomposition,
    frame_term_count: usize,
    weight_sum: f64,
}

fn decompose_cmd(path: &std::path::Path, common: &CommonOpts) -> magicsim::Result<()> {
    let state = state_from_json(&std::fs::read_to_string(path)?)?;
    let rho = match state {
        AncillaState::Pure(s) => s.density(),
        AncillaState::Mixed(m) => m,
    };
    let pauli = pauli_coefficients(&rho)?;
    let frame = stabilizer_frame(&pauli);
    let out = DecomposeOutput {
        schema: SCHEMA,
        command: "decompose",
        seed: common.seed,
        frame_term_count: frame.term_count(),
        weight_sum: frame.weight_sum(),
        pauli,
        frame,
    };
    match common.format {
        Format::Json => println!("{}", serde_json::to_string(&out)?),
        Format::Text => {
            println!("Pauli coefficients ({} qubit(s)):", out.pauli.num_qubits);
            for (k, c) in &out.pauli.coefficients {
                if c.abs() > 1e-15 {
                    println!("  {k}  {c:+.12}");
                }
            }
            println!("stabilizer frame ({} terms, weight sum {:.12}):", out.frame_term_count, out.weight_sum);
            for t in &out.frame.terms {
                let labels: Vec<&str> = t.labels.iter().map(|l| l.text()).collect();
                println!("  {:+.12}  |{}⟩", t.weight, labels.join(","));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput {
    schema: u32,
    command: &'static str,
    seed: u64,
    report: magicsim::bench::ScalingReport,
}

fn bench_cmd(sizes: &[usize], repeats: usize, common: &CommonOpts) -> magicsim::Result<()> {
    if sizes.is_empty() || repeats == 0 {
        return Err(Error::InvalidState("bench needs at least one size and one repeat".into()));
    }
    let term_sweep_qubits = sizes.iter().copied().max().unwrap_or(128).min(256);
    let report = scaling_bench(sizes, term_sweep_qubits, common.seed, repeats)?;
    let out = BenchOutput { schema: SCHEMA, command: "bench", seed: common.seed, report };
    match common.format {
        Format::Json => println!("{}", serde_json::to_string(&out)?),
        Format::Text => {
            let r = &out.report;
            println!("time vs data qubits (1 ancilla qubit, 6 terms, depth = 4n):");
            println!("  {:>8} {:>8} {:>7} {:>12}", "n", "depth", "terms", "ms");
            for p in &r.size_points {
                println!("  {:>8} {:>8} {:>7} {:>12.3}", p.data_qubits, p.depth, p.term_count, p.millis);
            }
            println!("  log-log slope: {:.3}", r.loglog_slope);
            println!("time vs term count (fixed n = {term_sweep_qubits}):");
            println!("  {:>8} {:>12}", "terms", "ms");
            for p in &r.term_points {
                println!("  {:>8} {:>12.3}", p.term_count, p.millis);
            }
            println!("  max deviation from linear fit: {:.1}%", 100.0 * r.term_linearity_max_rel_dev);
        }
    }
    Ok(())
}
