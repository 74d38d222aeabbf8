//! `defect-forge`: compile, verify and size Clifford+T circuits.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use defect_forge::circuit::parse_circuit;
use defect_forge::distill::{DistillationSpec, MagicKind, DEFAULT_BOX_CAP};
use defect_forge::icm::{expand_all, CorrectionsReport, IcmProgram};
use defect_forge::pipeline::{artifact_name, compile, stats, PipelineConfig, Stage};
use defect_forge::verify::{verify_program, VerifyConfig, VerifyError, VerifyReport};
use log::{debug, info};

const EXIT_VERIFY_FAILED: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "defect-forge", version, about = "Lower Clifford+T circuits to braided surface-code assemblies")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline and write its artifacts.
    Compile(CompileArgs),
    /// Check an ICM expansion against its source circuit branch by branch.
    Verify(VerifyArgs),
    /// Print gate counts and projected distillation boxes.
    Stats(StatsArgs),
}

#[derive(Args, Clone)]
struct PlanArgs {
    /// Probability that all required magic states are produced.
    #[arg(long, default_value_t = 0.999)]
    target_reliability: f64,
    /// Success probability of one A-state box.
    #[arg(long, default_value_t = 0.9)]
    distill_p_a: f64,
    /// Success probability of one Y-state box.
    #[arg(long, default_value_t = 0.9)]
    distill_p_y: f64,
    /// A-box size in cells, `X,Y,Z` or `XxYxZ`.
    #[arg(long, default_value = "8,6,6", value_parser = parse_dims)]
    box_dims_a: [i64; 3],
    /// Y-box size in cells.
    #[arg(long, default_value = "4,4,4", value_parser = parse_dims)]
    box_dims_y: [i64; 3],
    /// Seed for box heralding and verify's random inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Last stage to run: parse, icm, schedule or assembly.
    #[arg(long, default_value = "assembly")]
    stop_after: Stage,
    /// Corrections report to resume from. Defaults to the
    /// `<name>.corrections.json` sibling of an `.icm.qc` input.
    #[arg(long)]
    corrections: Option<PathBuf>,
    /// Also write a `.obj` line export of the assembly.
    #[arg(long)]
    obj: bool,
    /// Record stage timings in the report.
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Source circuit.
    #[arg(long)]
    input: PathBuf,
    /// Pre-built ICM circuit to check instead of expanding the source.
    #[arg(long, requires = "corrections")]
    icm: Option<PathBuf>,
    /// Corrections report belonging to `--icm`.
    #[arg(long, requires = "icm")]
    corrections: Option<PathBuf>,
    /// Largest number of simultaneously live qubits to simulate.
    #[arg(long, default_value_t = 20)]
    max_qubits: usize,
    /// Random input states to try.
    #[arg(long, default_value_t = 4)]
    inputs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print every branch row instead of the first 64.
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    plan: PlanArgs,
}

fn parse_dims(s: &str) -> Result<[i64; 3], String> {
    let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
    let nums: Vec<i64> =
        parts.iter().map(|p| p.parse::<i64>()).collect::<Result<_, _>>().map_err(|e| format!("`{s}`: {e}"))?;
    match nums[..] {
        [x, y, z] if x > 0 && y > 0 && z > 0 => Ok([x, y, z]),
        _ => Err(format!("`{s}`: expected three positive integers")),
    }
}

fn pipeline_config(p: &PlanArgs) -> Result<PipelineConfig> {
    let specs: BTreeMap<MagicKind, DistillationSpec> = [
        DistillationSpec::new(MagicKind::A, p.distill_p_a, p.box_dims_a)?,
        DistillationSpec::new(MagicKind::Y, p.distill_p_y, p.box_dims_y)?,
    ]
    .into_iter()
    .map(|s| (s.state_kind, s))
    .collect();
    let cfg = PipelineConfig {
        reliability_target: p.target_reliability,
        specs,
        seed: p.seed,
        box_cap: DEFAULT_BOX_CAP,
        ..PipelineConfig::default()
    };
    cfg.validate().map_err(anyhow::Error::msg)?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn corrections_sibling(input: &Path) -> Option<PathBuf> {
    let file = input.file_name()?.to_str()?;
    let stem = file.strip_suffix(".icm.qc")?;
    let p = input.with_file_name(format!("{stem}.corrections.json"));
    p.exists().then_some(p)
}

fn cmd_compile(a: CompileArgs) -> Result<ExitCode> {
    let mut cfg = pipeline_config(&a.plan)?;
    cfg.stop_after = a.stop_after;
    cfg.obj = a.obj;
    cfg.timings = a.timings;
    let text = read(&a.input)?;
    let corr_path = a.corrections.clone().or_else(|| corrections_sibling(&a.input));
    let corrections = match &corr_path {
        Some(p) => {
            info!("resuming from {}", p.display());
            Some(read(p)?)
        }
        None => None,
    };
    let name = artifact_name(&a.input);
    let result = compile(&name, &text, corrections.as_deref(), &cfg)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (file, contents) in &result.artifacts {
        let path = a.out_dir.join(file);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        debug!("wrote {}", path.display());
    }
    let r = &result.report;
    println!(
        "{name}: stage {}, {} qubits, {} cnots, t_count {}, {} artifacts in {}",
        r.stage.name(),
        r.qubit_count,
        r.cnot_count,
        r.t_count,
        result.artifacts.len(),
        a.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_table(report: &VerifyReport, all: bool) {
    const SHOWN: usize = 64;
    println!("{:>5}  {:<24} {:<12} {:>12}  {:>16}  result", "input", "branch", "source", "probability", "fidelity");
    let failures = report.checks.iter().filter(|c| !c.pass);
    let rows: Vec<_> = if all {
        report.checks.iter().collect()
    } else {
        // failures first so a truncated table still shows them
        failures.chain(report.checks.iter().filter(|c| c.pass)).take(SHOWN).collect()
    };
    for c in &rows {
        let src = if c.source_branch.is_empty() { "-" } else { c.source_branch.as_str() };
        println!(
            "{:>5}  {:<24} {:<12} {:>12.6}  {:>16.12}  {}",
            c.input,
            c.branch,
            src,
            c.probability,
            c.fidelity,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    if rows.len() < report.checks.len() {
        println!("... {} more rows (use --all)", report.checks.len() - rows.len());
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let source = parse_circuit(&read(&a.input)?).with_context(|| format!("parsing {}", a.input.display()))?;
    let program = match (&a.icm, &a.corrections) {
        (Some(icm), Some(corr)) => {
            let circuit = parse_circuit(&read(icm)?).with_context(|| format!("parsing {}", icm.display()))?;
            let report: CorrectionsReport =
                serde_json::from_str(&read(corr)?).with_context(|| format!("parsing {}", corr.display()))?;
            IcmProgram::from_parts(circuit, report)
        }
        _ => {
            let norm = defect_forge::circuit::normalize_gates(&source)?;
            expand_all(&norm)?
        }
    };
    if a.max_qubits > defect_forge::oracle::MAX_QUBITS {
        bail!("--max-qubits {} exceeds the simulator limit of {}", a.max_qubits, defect_forge::oracle::MAX_QUBITS);
    }
    let cfg = VerifyConfig { inputs: a.inputs, seed: a.seed, max_qubits: a.max_qubits, ..VerifyConfig::default() };
    let report = match verify_program(&source, &program, &cfg) {
        Ok(r) => r,
        Err(e @ VerifyError::CapacityExceeded { .. }) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_CAPACITY));
        }
        Err(e) => return Err(e.into()),
    };
    print_table(&report, a.all);
    let mode = if report.exhaustive { "exhaustive" } else { "sampled" };
    match report.first_failure() {
        None => {
            println!(
                "PASS: {} branches over {} inputs ({mode}), min fidelity {:.12}, max probability error {:.3e}",
                report.checks.len(),
                a.inputs,
                report.min_fidelity,
                report.max_probability_error
            );
            Ok(ExitCode::SUCCESS)
        }
        Some(f) => {
            let failed = report.checks.iter().filter(|c| !c.pass).count();
            println!(
                "FAIL: input {} branch {} fidelity {:.12} ({failed} of {} branches fail, {mode})",
                f.input,
                f.branch,
                f.fidelity,
                report.checks.len()
            );
            Ok(ExitCode::from(EXIT_VERIFY_FAILED))
        }
    }
}

fn cmd_stats(a: StatsArgs) -> Result<ExitCode> {
    let cfg = pipeline_config(&a.plan)?;
    let s = stats(&read(&a.input)?, &cfg)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        println!("t_count: {}", s.t_count);
        println!("icm qubits: {}", s.qubit_count);
        println!("icm cnots: {}", s.cnot_count);
        for k in MagicKind::ALL {
            println!(
                "{} required: {}, boxes: {}",
                k.label(),
                s.required.get(&k).copied().unwrap_or(0),
                s.boxes.get(&k).copied().unwrap_or(0)
            );
        }
        println!("reliability target: {}", s.reliability_target);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DEFECT_FORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Command::Compile(a) => cmd_compile(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
