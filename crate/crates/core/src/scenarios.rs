//! Experiment families: declarative scenario descriptions plus the
//! runner that executes them on either backend and emits [`RunRecord`]s.
//!
//! Four families are provided: random heterogeneous batches, preset
//! batches (which also cover homogeneous ones), one-long-plus-X-short
//! batches, and a three-stage detect/classify/recognize pipeline whose
//! stages have different scaling profiles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator;
use crate::engine::{self, EngineError};
use crate::model::{Batch, CostModel, JobSpec, ModelError, RunRecord, Variant};
use crate::rng::{mix64, uniform_in};
use crate::simulator::{self, SimError, SimResult};

/// Execution backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Analytic cost-model simulation, exact and noise-free.
    Sim,
    /// Real CPU kernels with per-part worker pools.
    Cpu,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim" => Ok(Backend::Sim),
            "cpu" => Ok(Backend::Cpu),
            other => Err(format!("unknown backend `{other}` (expected sim or cpu)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("size range must satisfy 1 <= lo <= hi")]
    BadRange,
    #[error("X and trials must be >= 1")]
    BadCount,
    #[error("sizes must be positive and non-empty")]
    ZeroSize,
    #[error("n_boxes is {expected} but {got} box sizes were given")]
    SizeMismatch { expected: usize, got: usize },
    #[error("pipeline scenarios use analytic stage models and run on the sim backend only")]
    PipelineNeedsSim,
    #[error("scenario has no batches or zero reps")]
    EmptyScenario,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("scenario JSON: {0}")]
    Json(String),
}

/// Recognition-like stage profile: dominated by parallelizable work
/// with a small non-parallelizable share.
pub fn recognition_model() -> CostModel {
    CostModel::new(0.05, 1.0, 0.0).expect("valid model")
}

/// Classification-like stage profile: per-thread overhead dominates for
/// small inputs, so the optimum thread count `sqrt(n / 2)` stays below 4
/// for inputs up to 32 elements.
pub fn classification_model() -> CostModel {
    CostModel::new(0.0, 1.0, 2.0).expect("valid model")
}

/// Pipeline stage configuration: a fixed detection cost shared by all
/// variants, then classification and recognition stages over the boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub detect_cost: f64,
    pub cls_model: CostModel,
    pub rec_model: CostModel,
}

/// Declarative description of one experiment.
///
/// Serializes to JSON as `{"name", "cores", "model", "batches",
/// "variants", "reps", "seed"}` with batches given as size lists;
/// per-job seeds derive from `seed` and the batch/job indexes. Pipeline
/// scenarios carry an extra `pipeline` object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub cores: usize,
    pub model: CostModel,
    pub batches: Vec<Vec<usize>>,
    pub variants: Vec<Variant>,
    pub reps: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pipeline: Option<PipelineSpec>,
}

/// Default core budget, matching a 16-core deployment.
pub const DEFAULT_CORES: usize = 16;

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| ScenarioError::Json(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical JSON form: fixed field order, compact separators.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.batches.is_empty() || self.reps < 1 {
            return Err(ScenarioError::EmptyScenario);
        }
        if self.cores < 1 {
            return Err(ModelError::BadCores.into());
        }
        if self.batches.iter().any(|b| b.is_empty() || b.iter().any(|&s| s < 1)) {
            return Err(ScenarioError::ZeroSize);
        }
        Ok(())
    }

    /// Materializes batch `index` with the given core budget and kernel
    /// width. Job seeds are `mix64(scenario_seed, batch_index, job_index)`.
    pub fn batch(&self, index: usize, cores: usize, hidden_dim: usize) -> Result<Batch, ModelError> {
        let jobs = self.batches[index]
            .iter()
            .enumerate()
            .map(|(j, &size)| JobSpec {
                id: j as u64,
                size,
                seed: mix64(self.seed, index as u64, j as u64),
                hidden_dim,
            })
            .collect();
        Batch::new(jobs, cores)
    }
}

/// Random heterogeneous batches: `trials` batches of `x` sizes drawn
/// uniformly from `lo..=hi`.
pub fn gen_random_hetero(
    x: usize,
    lo: usize,
    hi: usize,
    trials: usize,
    seed: u64,
) -> Result<ScenarioSpec, ScenarioError> {
    if lo < 1 || lo > hi {
        return Err(ScenarioError::BadRange);
    }
    if x < 1 || trials < 1 {
        return Err(ScenarioError::BadCount);
    }
    let batches = (0..trials)
        .map(|t| {
            (0..x).map(|j| uniform_in(seed, t as u64, j as u64, lo as u64, hi as u64) as usize).collect()
        })
        .collect();
    Ok(ScenarioSpec {
        name: format!("hetero:X={x}"),
        cores: DEFAULT_CORES,
        model: recognition_model(),
        batches,
        variants: vec![Variant::PadBatch, Variant::PrunDef],
        reps: 5,
        seed,
        pipeline: None,
    })
}

/// A single preset batch with exactly the given sizes, e.g. `16-64-256`.
pub fn gen_preset(sizes: &[usize]) -> Result<ScenarioSpec, ScenarioError> {
    if sizes.is_empty() || sizes.iter().any(|&s| s < 1) {
        return Err(ScenarioError::ZeroSize);
    }
    let label: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    Ok(ScenarioSpec {
        name: format!("preset:{}", label.join("-")),
        cores: DEFAULT_CORES,
        model: recognition_model(),
        batches: vec![sizes.to_vec()],
        variants: vec![Variant::PadBatch, Variant::PrunDef],
        reps: 5,
        seed: 0,
        pipeline: None,
    })
}

/// Homogeneous batch of `count` equal parts of length `len`.
pub fn gen_homogeneous(len: usize, count: usize) -> Result<ScenarioSpec, ScenarioError> {
    if len < 1 || count < 1 {
        return Err(ScenarioError::ZeroSize);
    }
    let mut spec = gen_preset(&vec![len; count])?;
    spec.name = format!("homog:{count}x{len}");
    spec.variants = vec![Variant::PadBatch, Variant::NoBatch, Variant::PrunDef];
    Ok(spec)
}

/// One long part of 256 elements plus `x` short parts of 16.
pub fn gen_long_short(x: usize) -> ScenarioSpec {
    let mut sizes = vec![256];
    sizes.extend(std::iter::repeat(16).take(x));
    ScenarioSpec {
        name: format!("long-short:X={x}"),
        cores: DEFAULT_CORES,
        model: recognition_model(),
        batches: vec![sizes],
        variants: vec![Variant::PadBatch, Variant::PrunDef],
        reps: 5,
        seed: 0,
        pipeline: None,
    }
}

/// Three-stage pipeline over `n_boxes` detected boxes: a fixed-cost
/// detection stage, a classification stage in the negative-scaling
/// regime, and a recognition stage that scales well.
pub fn gen_pipeline(
    n_boxes: usize,
    box_sizes: &[usize],
    detect_cost: f64,
    cls_model: CostModel,
    rec_model: CostModel,
) -> Result<ScenarioSpec, ScenarioError> {
    if n_boxes != box_sizes.len() {
        return Err(ScenarioError::SizeMismatch { expected: n_boxes, got: box_sizes.len() });
    }
    if box_sizes.is_empty() || box_sizes.iter().any(|&s| s < 1) {
        return Err(ScenarioError::ZeroSize);
    }
    Ok(ScenarioSpec {
        name: format!("pipeline:boxes={n_boxes}"),
        cores: DEFAULT_CORES,
        model: rec_model,
        batches: vec![box_sizes.to_vec()],
        variants: vec![Variant::Base, Variant::Prun1, Variant::PrunEq, Variant::PrunDef],
        reps: 5,
        seed: 0,
        pipeline: Some(PipelineSpec { detect_cost, cls_model, rec_model }),
    })
}

/// Default detection cost for a pipeline: three quarters of the
/// recognition stage's all-cores sequential time, which dilutes a
/// recognition-only speedup of ~2.4x to ~1.5x end to end.
pub fn default_detect_cost(box_sizes: &[usize], cores: usize, rec_model: &CostModel) -> f64 {
    0.75 * box_sizes.iter().map(|&s| simulator::part_time(s, cores, rec_model)).sum::<f64>()
}

/// Effective execution options for a scenario run.
#[derive(Debug, Clone, Copy)]
pub struct RunOpts {
    pub cores: usize,
    pub reps: usize,
    pub pinning: bool,
    pub hidden_dim: usize,
}

impl RunOpts {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self {
            cores: spec.cores,
            reps: spec.reps,
            pinning: false,
            hidden_dim: JobSpec::DEFAULT_HIDDEN_DIM,
        }
    }
}

fn sim_variant(batch: &Batch, variant: Variant, model: &CostModel) -> Result<SimResult, ScenarioError> {
    match variant {
        Variant::PadBatch => Ok(simulator::simulate_padded_batch(batch, model)),
        Variant::NoBatch => Ok(simulator::simulate_no_batch(batch, model)),
        _ => {
            let plan = allocator::plan_for_variant(batch, variant).expect("planned variant");
            Ok(simulator::simulate_prun(batch, &plan, model)?)
        }
    }
}

fn record_shell(spec: &ScenarioSpec, variant: Variant, opts: &RunOpts, batch_index: usize, rep: usize) -> RunRecord {
    RunRecord {
        scenario: spec.name.clone(),
        variant,
        cores: opts.cores,
        rep,
        batch_index,
        part_latencies: Vec::new(),
        part_checksums: None,
        makespan: 0.0,
        throughput: 0.0,
    }
}

fn run_sim_once(
    spec: &ScenarioSpec,
    batch: &Batch,
    variant: Variant,
    opts: &RunOpts,
    batch_index: usize,
) -> Result<RunRecord, ScenarioError> {
    let mut rec = record_shell(spec, variant, opts, batch_index, 0);
    if let Some(pipeline) = &spec.pipeline {
        let cls = sim_variant(batch, variant, &pipeline.cls_model)?;
        let recg = sim_variant(batch, variant, &pipeline.rec_model)?;
        let makespan = pipeline.detect_cost + cls.makespan + recg.makespan;
        rec.part_latencies = vec![pipeline.detect_cost, cls.makespan, recg.makespan];
        rec.makespan = makespan;
        rec.throughput = 1.0 / makespan;
    } else {
        let sim = sim_variant(batch, variant, &spec.model)?;
        rec.makespan = sim.makespan;
        rec.throughput = batch.len() as f64 / sim.makespan;
        rec.part_latencies = sim.part_times;
    }
    Ok(rec)
}

fn run_cpu_once(
    spec: &ScenarioSpec,
    batch: &Batch,
    variant: Variant,
    opts: &RunOpts,
    batch_index: usize,
    rep: usize,
) -> Result<RunRecord, ScenarioError> {
    let mut rec = record_shell(spec, variant, opts, batch_index, rep);
    match variant {
        Variant::PadBatch => {
            let (output, elapsed) = engine::run_padded_batch(batch, opts.pinning);
            rec.part_latencies = vec![elapsed];
            rec.part_checksums = Some(vec![output.checksum]);
            rec.makespan = elapsed;
        }
        _ => {
            let plan = allocator::plan_for_variant(batch, variant).expect("planned variant");
            let outcome = engine::run_prun(batch, &plan, opts.pinning)?;
            rec.part_latencies = outcome.parts.iter().map(|p| p.latency_ms).collect();
            rec.part_checksums = Some(outcome.parts.iter().map(|p| p.output.checksum).collect());
            rec.makespan = outcome.makespan_ms;
        }
    }
    rec.throughput = batch.len() as f64 / rec.makespan;
    Ok(rec)
}

/// Executes the scenario: for each batch and variant, plans via the
/// allocator and runs on the chosen backend, one record per repetition.
///
/// The simulator is exact, so for it repetitions collapse to a single
/// record after a second evaluation confirms determinism. Batches run
/// serially to keep wall-clock measurements interference-free.
pub fn run_scenario(
    spec: &ScenarioSpec,
    backend: Backend,
    opts: &RunOpts,
) -> Result<Vec<RunRecord>, ScenarioError> {
    spec.validate()?;
    if spec.pipeline.is_some() && backend == Backend::Cpu {
        return Err(ScenarioError::PipelineNeedsSim);
    }

    let mut records = Vec::new();
    for batch_index in 0..spec.batches.len() {
        let batch = spec.batch(batch_index, opts.cores, opts.hidden_dim)?;
        for &variant in &spec.variants {
            match backend {
                Backend::Sim => {
                    let rec = run_sim_once(spec, &batch, variant, opts, batch_index)?;
                    if opts.reps > 1 {
                        let again = run_sim_once(spec, &batch, variant, opts, batch_index)?;
                        assert_eq!(rec, again, "simulator must be deterministic");
                    }
                    records.push(rec);
                }
                Backend::Cpu => {
                    for rep in 0..opts.reps {
                        records.push(run_cpu_once(spec, &batch, variant, opts, batch_index, rep)?);
                    }
                }
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hetero_sizes_stay_in_range() {
        let spec = gen_random_hetero(2, 16, 512, 1000, 7).unwrap();
        assert_eq!(spec.batches.len(), 1000);
        for batch in &spec.batches {
            assert_eq!(batch.len(), 2);
            assert!(batch.iter().all(|&s| (16..=512).contains(&s)));
        }
    }

    #[test]
    fn hetero_is_reproducible() {
        let a = gen_random_hetero(8, 16, 512, 50, 7).unwrap();
        let b = gen_random_hetero(8, 16, 512, 50, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_random_hetero(8, 16, 512, 50, 8).unwrap();
        assert_ne!(a.batches, c.batches);
    }

    #[test]
    fn hetero_degenerate_range() {
        let spec = gen_random_hetero(1, 5, 5, 3, 0).unwrap();
        assert_eq!(spec.batches, vec![vec![5], vec![5], vec![5]]);
    }

    #[test]
    fn hetero_rejects_bad_args() {
        assert!(matches!(gen_random_hetero(2, 0, 5, 1, 0), Err(ScenarioError::BadRange)));
        assert!(matches!(gen_random_hetero(2, 9, 5, 1, 0), Err(ScenarioError::BadRange)));
        assert!(matches!(gen_random_hetero(0, 1, 5, 1, 0), Err(ScenarioError::BadCount)));
    }

    #[test]
    fn preset_names_and_sizes() {
        let spec = gen_preset(&[16, 64, 256]).unwrap();
        assert_eq!(spec.name, "preset:16-64-256");
        assert_eq!(spec.batches, vec![vec![16, 64, 256]]);
        assert!(matches!(gen_preset(&[16, 0]), Err(ScenarioError::ZeroSize)));
        assert!(matches!(gen_preset(&[]), Err(ScenarioError::ZeroSize)));
    }

    #[test]
    fn long_short_shapes() {
        assert_eq!(gen_long_short(0).batches, vec![vec![256]]);
        assert_eq!(gen_long_short(3).batches, vec![vec![256, 16, 16, 16]]);
        let fifteen = gen_long_short(15);
        assert_eq!(fifteen.batches[0].len(), 16);
    }

    #[test]
    fn pipeline_validates_box_count() {
        let err = gen_pipeline(3, &[16, 16], 1.0, classification_model(), recognition_model());
        assert!(matches!(err, Err(ScenarioError::SizeMismatch { expected: 3, got: 2 })));
    }

    #[test]
    fn scenario_json_round_trip_is_stable() {
        let spec = gen_preset(&[16, 64, 256]).unwrap();
        let json = spec.to_json();
        let parsed = ScenarioSpec::from_json(&json).unwrap();
        assert_eq!(parsed, spec);
        assert_eq!(parsed.to_json(), json);
    }

    #[test]
    fn pipeline_json_round_trip() {
        let spec =
            gen_pipeline(2, &[16, 16], 10.0, classification_model(), recognition_model()).unwrap();
        let parsed = ScenarioSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn sim_run_emits_one_record_per_batch_variant() {
        let spec = gen_preset(&[16, 64, 256]).unwrap();
        let opts = RunOpts::from_spec(&spec);
        let records = run_scenario(&spec, Backend::Sim, &opts).unwrap();
        // reps collapse on the deterministic backend.
        assert_eq!(records.len(), spec.variants.len());
        assert!(records.iter().all(|r| r.rep == 0));
    }

    #[test]
    fn sim_preset_matches_simulator_directly() {
        let spec = gen_preset(&[16, 64, 256]).unwrap();
        let opts = RunOpts::from_spec(&spec);
        let records = run_scenario(&spec, Backend::Sim, &opts).unwrap();
        let pad = &records[0];
        let prun = &records[1];
        assert_eq!(pad.variant, Variant::PadBatch);
        assert_eq!(prun.variant, Variant::PrunDef);
        assert!((pad.makespan - 86.4).abs() < 1e-12);
        assert!((prun.makespan - 34.133333333333333).abs() < 1e-9);
    }

    #[test]
    fn long_short_zero_gives_equal_makespans() {
        let spec = gen_long_short(0);
        let opts = RunOpts::from_spec(&spec);
        let records = run_scenario(&spec, Backend::Sim, &opts).unwrap();
        assert_eq!(records[0].makespan, records[1].makespan);
    }

    #[test]
    fn pipeline_detection_cost_identical_across_variants() {
        let sizes = [16, 24, 16, 40, 16, 16];
        let detect = default_detect_cost(&sizes, 16, &recognition_model());
        let spec =
            gen_pipeline(6, &sizes, detect, classification_model(), recognition_model()).unwrap();
        let opts = RunOpts::from_spec(&spec);
        let records = run_scenario(&spec, Backend::Sim, &opts).unwrap();
        assert_eq!(records.len(), 4);
        for rec in &records {
            assert_eq!(rec.part_latencies[0], detect);
            assert_eq!(
                rec.makespan,
                rec.part_latencies[0] + rec.part_latencies[1] + rec.part_latencies[2]
            );
        }
    }

    #[test]
    fn pipeline_single_box_prun_def_equals_base() {
        let spec = gen_pipeline(1, &[32], 5.0, classification_model(), recognition_model()).unwrap();
        let opts = RunOpts::from_spec(&spec);
        let records = run_scenario(&spec, Backend::Sim, &opts).unwrap();
        let base = records.iter().find(|r| r.variant == Variant::Base).unwrap();
        let def = records.iter().find(|r| r.variant == Variant::PrunDef).unwrap();
        assert_eq!(base.makespan, def.makespan);
    }

    #[test]
    fn pipeline_rejects_cpu_backend() {
        let spec = gen_pipeline(2, &[16, 16], 1.0, classification_model(), recognition_model()).unwrap();
        let opts = RunOpts::from_spec(&spec);
        assert!(matches!(
            run_scenario(&spec, Backend::Cpu, &opts),
            Err(ScenarioError::PipelineNeedsSim)
        ));
    }

    #[test]
    fn cpu_run_produces_checksums_and_reps() {
        let mut spec = gen_preset(&[8, 24]).unwrap();
        spec.variants = vec![Variant::PrunDef, Variant::PadBatch];
        let mut opts = RunOpts::from_spec(&spec);
        opts.cores = 2;
        opts.reps = 2;
        opts.hidden_dim = 8;
        let records = run_scenario(&spec, Backend::Cpu, &opts).unwrap();
        assert_eq!(records.len(), 4);
        for rec in &records {
            let sums = rec.part_checksums.as_ref().unwrap();
            assert_eq!(sums.len(), rec.part_latencies.len());
            assert!(rec.makespan > 0.0);
        }
        // Checksums are repetition-independent.
        assert_eq!(records[0].part_checksums, records[1].part_checksums);
    }

    #[test]
    fn base_and_no_batch_agree_in_sim() {
        let mut spec = gen_preset(&[31, 9, 140]).unwrap();
        spec.variants = vec![Variant::Base, Variant::NoBatch];
        let opts = RunOpts::from_spec(&spec);
        let records = run_scenario(&spec, Backend::Sim, &opts).unwrap();
        assert_eq!(records[0].makespan, records[1].makespan);
    }
}
