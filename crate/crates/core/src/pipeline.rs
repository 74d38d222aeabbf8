//! Whole-compiler driver: parse → normalize → ICM expansion → wire
//! schedule → distillation plan → assembly, producing named text artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{normalize_gates, parse_circuit, print_circuit, Circuit, InitState};
use crate::distill::{
    count_required, herald, make_plan, DistillationPlan, DistillationSpec, MagicKind, DEFAULT_BOX_CAP,
};
use crate::geometry::{
    build_assembly, check_assembly, episode_geometry, export_assembly, export_obj, place_boxes, wire_outputs, Assembly,
    BoxPlacement, InitSite,
};
use crate::icm::{expand_all, CorrectionsReport, GadgetKind, IcmProgram};
use crate::schedule::{schedule, EpisodeStart, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parse,
    Icm,
    Schedule,
    Assembly,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Icm => "icm",
            Stage::Schedule => "schedule",
            Stage::Assembly => "assembly",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parse" => Ok(Stage::Parse),
            "icm" => Ok(Stage::Icm),
            "schedule" => Ok(Stage::Schedule),
            "assembly" => Ok(Stage::Assembly),
            other => Err(format!("unknown stage `{other}` (expected parse, icm, schedule or assembly)")),
        }
    }
}

/// Failure of one stage, tagged with the stage name.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage.name(), self.message)
    }
}

impl std::error::Error for PipelineError {}

fn at<E: fmt::Display>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError { stage, message: e.to_string() }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub reliability_target: f64,
    pub specs: BTreeMap<MagicKind, DistillationSpec>,
    pub seed: u64,
    pub stop_after: Stage,
    /// Adds wall-clock stage timings to the report (breaks byte-level
    /// reproducibility of the report).
    pub timings: bool,
    /// Also emit a `.obj` line export of the assembly.
    pub obj: bool,
    pub box_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            reliability_target: 0.999,
            specs: MagicKind::ALL.iter().map(|k| (*k, DistillationSpec::default_for(*k))).collect(),
            seed: 0,
            stop_after: Stage::Assembly,
            timings: false,
            obj: false,
            box_cap: DEFAULT_BOX_CAP,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.reliability_target > 0.0 && self.reliability_target < 1.0) {
            return Err(format!("reliability target {} is outside (0, 1)", self.reliability_target));
        }
        for s in self.specs.values() {
            DistillationSpec::new(s.state_kind, s.success_prob, s.box_dims).map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub stage: Stage,
    pub seed: u64,
    pub qubit_count: usize,
    pub op_count: usize,
    pub cnot_count: usize,
    pub t_count: usize,
    pub inits: BTreeMap<String, usize>,
    pub wire_count: Option<usize>,
    pub max_live: Option<usize>,
    pub required: Option<BTreeMap<MagicKind, usize>>,
    pub box_counts: Option<BTreeMap<MagicKind, usize>>,
    pub bbox_volume: Option<u64>,
    pub occupancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub version: u32,
    pub required: BTreeMap<MagicKind, usize>,
    /// Boxes the reliability target calls for.
    pub boxes: BTreeMap<MagicKind, usize>,
    /// Boxes added after the draw because a kind fell short.
    pub extra_boxes: BTreeMap<MagicKind, usize>,
    pub reliability_target: f64,
    pub achieved: BTreeMap<MagicKind, f64>,
    pub seed: u64,
    pub specs: BTreeMap<MagicKind, DistillationSpec>,
    pub placements: Vec<BoxPlacement>,
}

/// Every intermediate result of one run.
#[derive(Clone, Debug)]
pub struct CompileResult {
    pub name: String,
    pub source: Circuit,
    pub program: Option<IcmProgram>,
    pub schedule: Option<Schedule>,
    pub plan: Option<PlanReport>,
    pub assembly: Option<Assembly>,
    pub report: RunReport,
    /// `(file name, contents)` in emission order.
    pub artifacts: Vec<(String, String)>,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

/// Artifact base name: the file stem without a trailing `.icm`.
pub fn artifact_name(path: &std::path::Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("circuit");
    stem.strip_suffix(".icm").unwrap_or(stem).to_string()
}

fn inits(c: &Circuit) -> BTreeMap<String, usize> {
    c.init_counts()
        .into_iter()
        .map(|(k, n)| {
            let key = match k {
                InitState::Zero => "Zero",
                InitState::Plus => "Plus",
                InitState::A => "A",
                InitState::Y => "Y",
            };
            (key.to_string(), n)
        })
        .collect()
}

fn t_gadgets(p: &IcmProgram) -> usize {
    p.corrections.iter().filter(|c| matches!(c.gadget, GadgetKind::T | GadgetKind::Tdg)).count()
}

/// Runs the pipeline on `.qc` text. `corrections` is the report of an
/// earlier `--stop-after icm` run when resuming from its `.icm.qc`.
pub fn compile(
    name: &str,
    text: &str,
    corrections: Option<&str>,
    cfg: &PipelineConfig,
) -> Result<CompileResult, PipelineError> {
    cfg.validate().map_err(at(Stage::Parse))?;
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |stage: Stage, timings: &mut BTreeMap<String, f64>| {
        timings.insert(stage.name().to_string(), clock.elapsed().as_secs_f64() * 1e3);
        clock = Instant::now();
    };
    let mut artifacts = Vec::new();

    let source = parse_circuit(text).map_err(at(Stage::Parse))?;
    info!("parsed {name}: {} qubits, {} ops", source.qubits().len(), source.ops().len());
    let mut report = RunReport {
        version: 1,
        stage: Stage::Parse,
        seed: cfg.seed,
        qubit_count: source.qubits().len(),
        op_count: source.ops().len(),
        cnot_count: source.cnot_count(),
        t_count: crate::icm::t_count(&source),
        inits: inits(&source),
        wire_count: None,
        max_live: None,
        required: None,
        box_counts: None,
        bbox_volume: None,
        occupancy: None,
        timings_ms: None,
    };
    let mut result = CompileResult {
        name: name.to_string(),
        source: source.clone(),
        program: None,
        schedule: None,
        plan: None,
        assembly: None,
        report: report.clone(),
        artifacts: Vec::new(),
    };
    let finish = |mut result: CompileResult,
                  mut report: RunReport,
                  mut artifacts: Vec<(String, String)>,
                  timings: BTreeMap<String, f64>| {
        if cfg.timings {
            report.timings_ms = Some(timings);
        }
        artifacts.push((format!("{name}.report.json"), json(&report)));
        result.report = report;
        result.artifacts = artifacts;
        Ok(result)
    };
    lap(Stage::Parse, &mut timings);
    if cfg.stop_after == Stage::Parse {
        let normalized = normalize_gates(&source).map_err(at(Stage::Parse))?;
        artifacts.push((format!("{name}.norm.qc"), print_circuit(&normalized)));
        return finish(result, report, artifacts, timings);
    }

    let program = match corrections {
        Some(corr) => {
            let rep: CorrectionsReport = serde_json::from_str(corr).map_err(at(Stage::Icm))?;
            IcmProgram::from_parts(source.clone(), rep)
        }
        None => {
            let normalized = normalize_gates(&source).map_err(at(Stage::Icm))?;
            expand_all(&normalized).map_err(at(Stage::Icm))?
        }
    };
    let icm = &program.circuit;
    debug!("icm: {} qubits, {} cnots, {} corrections", icm.qubits().len(), icm.cnot_count(), program.corrections.len());
    report.stage = Stage::Icm;
    report.qubit_count = icm.qubits().len();
    report.op_count = icm.ops().len();
    report.cnot_count = icm.cnot_count();
    report.t_count = t_gadgets(&program);
    report.inits = inits(icm);
    artifacts.push((format!("{name}.icm.qc"), print_circuit(icm)));
    artifacts.push((format!("{name}.corrections.json"), json(&program.corrections_report())));
    result.program = Some(program.clone());
    lap(Stage::Icm, &mut timings);
    if cfg.stop_after == Stage::Icm {
        return finish(result, report, artifacts, timings);
    }

    let sched = schedule(icm).map_err(at(Stage::Schedule))?;
    debug!("schedule: {} wires, max live {}", sched.assignment.wire_count, sched.assignment.max_live);
    report.stage = Stage::Schedule;
    report.wire_count = Some(sched.assignment.wire_count);
    report.max_live = Some(sched.assignment.max_live);
    artifacts.push((format!("{name}.wires.json"), json(&sched.assignment.report())));
    result.schedule = Some(sched.clone());
    lap(Stage::Schedule, &mut timings);
    if cfg.stop_after == Stage::Schedule {
        return finish(result, report, artifacts, timings);
    }

    let (plan, masks, extra, placements) = plan_boxes(icm, cfg).map_err(at(Stage::Assembly))?;
    let episodes = episode_geometry(&sched);
    let sites = InitSite::from_episodes(&episodes, |i| match sched.episodes[i].start {
        EpisodeStart::Init(s) => MagicKind::of(s),
        EpisodeStart::Input => None,
    });
    let connections = wire_outputs(&placements, &sites).map_err(at(Stage::Assembly))?;
    let assembly = build_assembly(icm.ops(), &sched, placements.clone(), &connections).map_err(at(Stage::Assembly))?;
    check_assembly(&assembly).map_err(at(Stage::Assembly))?;
    let box_counts: BTreeMap<MagicKind, usize> = masks.iter().map(|(k, m)| (*k, m.len())).collect();
    let plan_report = PlanReport {
        version: 1,
        required: plan.required.clone(),
        boxes: plan.boxes.clone(),
        extra_boxes: MagicKind::ALL.iter().map(|k| (*k, extra.get(k).copied().unwrap_or(0))).collect(),
        reliability_target: plan.reliability_target,
        achieved: plan.achieved.clone(),
        seed: cfg.seed,
        specs: cfg.specs.clone(),
        placements,
    };
    report.stage = Stage::Assembly;
    report.required = Some(plan.required.clone());
    report.box_counts = Some(box_counts);
    report.bbox_volume = Some(assembly.metrics.as_ref().map_or(0, |m| m.bbox_volume));
    report.occupancy = Some(assembly.metrics.as_ref().map_or(0.0, |m| m.occupancy));
    artifacts.push((format!("{name}.plan.json"), json(&plan_report)));
    artifacts.push((format!("{name}.assembly.json"), export_assembly(&assembly)));
    if cfg.obj {
        artifacts.push((format!("{name}.obj"), export_obj(&assembly)));
    }
    result.plan = Some(plan_report);
    result.assembly = Some(assembly);
    lap(Stage::Assembly, &mut timings);
    finish(result, report, artifacts, timings)
}

type Heralded = (DistillationPlan, BTreeMap<MagicKind, Vec<bool>>, BTreeMap<MagicKind, usize>, Vec<BoxPlacement>);

fn plan_boxes(icm: &Circuit, cfg: &PipelineConfig) -> Result<Heralded, crate::distill::PlanError> {
    let required = count_required(icm)?;
    let plan = make_plan(&required, &cfg.specs, cfg.reliability_target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (masks, extra) = herald(&plan, &cfg.specs, &mut rng, cfg.box_cap)?;
    let counts: BTreeMap<MagicKind, usize> = masks.iter().map(|(k, m)| (*k, m.len())).collect();
    let dims: BTreeMap<MagicKind, [i64; 3]> = MagicKind::ALL
        .iter()
        .map(|k| (*k, cfg.specs.get(k).copied().unwrap_or_else(|| DistillationSpec::default_for(*k)).box_dims))
        .collect();
    let placements = place_boxes(&counts, &dims, &masks);
    Ok((plan, masks, extra, placements))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub t_count: usize,
    pub qubit_count: usize,
    pub cnot_count: usize,
    pub required: BTreeMap<MagicKind, usize>,
    pub boxes: BTreeMap<MagicKind, usize>,
    pub reliability_target: f64,
}

/// Counts and projected box numbers without building geometry.
pub fn stats(text: &str, cfg: &PipelineConfig) -> Result<StatsReport, PipelineError> {
    cfg.validate().map_err(at(Stage::Parse))?;
    let source = parse_circuit(text).map_err(at(Stage::Parse))?;
    let normalized = normalize_gates(&source).map_err(at(Stage::Icm))?;
    let program = expand_all(&normalized).map_err(at(Stage::Icm))?;
    let required = count_required(&program.circuit).map_err(at(Stage::Assembly))?;
    let plan = make_plan(&required, &cfg.specs, cfg.reliability_target).map_err(at(Stage::Assembly))?;
    Ok(StatsReport {
        t_count: crate::icm::t_count(&source),
        qubit_count: program.circuit.qubits().len(),
        cnot_count: program.circuit.cnot_count(),
        required,
        boxes: plan.boxes,
        reliability_target: cfg.reliability_target,
    })
}
