//! End-to-end orchestration: simulate → slice → train → mine → evaluate,
//! as composable stages over a shared output directory.
//!
//! Every stage is deterministic under a fixed config (including the seed) and
//! idempotent over its output directory. Progress goes to standard error;
//! machine-readable results go to files, and the final report table is
//! returned for standard output.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluator::{build_ground_truth, classify, MiningReport};
use crate::flow::Flow;
use crate::miner::{
    detect_initiating_events, mine, save_patterns, load_patterns, MinerParams, ModelSuite,
};
use crate::seq_model::{load_model, save_model, train_models, AnyModel, Hyperparams, ModelKind};
use crate::simulator::{save_provenance, simulate, Initiator, SimConfig};
use crate::slicer::{slice_with_policy, AddrlessPolicy, SliceIndexEntry, SliceMethod};
use crate::trace::{Trace, Vocabulary};

/// Pattern-filter toggles.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Filters {
    pub causality: bool,
    pub initiating: bool,
}

/// Full pipeline configuration. Loadable from a JSON document; every field
/// has a default so partial configs are valid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Flow definition files.
    pub flows: Vec<String>,
    /// Launching blocks; empty means one per distinct start-event source.
    pub initiators: Vec<Initiator>,
    pub instances_per_initiator: u32,
    pub delay_min: u32,
    pub delay_max: u32,
    pub address_pool: u64,
    pub seed: u64,
    /// Number of traces to simulate; trace `i` uses seed `seed + i`.
    pub trace_count: u32,
    pub slicing: SliceMethod,
    pub addrless_policy: AddrlessPolicy,
    pub model: ModelKind,
    pub hyperparams: Hyperparams,
    pub theta: f64,
    pub theta_prime: f64,
    pub max_len: usize,
    pub filters: Filters,
    /// Output directory.
    pub out: String,
    /// Worker count for per-length model training.
    pub jobs: usize,
    /// Execution-enumeration bound.
    pub max_steps: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            flows: Vec::new(),
            initiators: Vec::new(),
            instances_per_initiator: 100,
            delay_min: 1,
            delay_max: 10,
            address_pool: 8,
            seed: 0,
            trace_count: 1,
            slicing: SliceMethod::None,
            addrless_policy: AddrlessPolicy::CopyAll,
            model: ModelKind::Count,
            hyperparams: Hyperparams::default(),
            theta: 0.2,
            theta_prime: 0.2,
            max_len: 8,
            filters: Filters::default(),
            out: "out".into(),
            jobs: 1,
            max_steps: crate::flow::DEFAULT_MAX_STEPS,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn miner_params(&self) -> MinerParams {
        MinerParams {
            theta: self.theta,
            theta_prime: self.theta_prime,
            max_len: self.max_len,
            causality_filter: self.filters.causality,
            initiating_filter: self.filters.initiating,
        }
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            initiators: self.initiators.clone(),
            instances_per_initiator: self.instances_per_initiator,
            delay_min: self.delay_min,
            delay_max: self.delay_max,
            seed,
            address_pool: self.address_pool,
        }
    }

    /// Reject inconsistent configs before any work happens.
    pub fn validate(&self) -> Result<()> {
        if self.flows.is_empty() {
            return Err(Error::Config("`flows` must list at least one flow file".into()));
        }
        self.miner_params().check().map_err(|e| Error::Config(e.to_string()))?;
        if self.max_len > crate::evaluator::MAX_UNIVERSE_LEN {
            return Err(Error::Config(format!(
                "max_len {} exceeds the evaluation cap {}",
                self.max_len,
                crate::evaluator::MAX_UNIVERSE_LEN
            )));
        }
        if self.trace_count < 1 {
            return Err(Error::Config("trace_count must be >= 1".into()));
        }
        if self.delay_min < 1 || self.delay_min > self.delay_max {
            return Err(Error::Config("delay range must satisfy 1 <= min <= max".into()));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.out)
    }

    fn load_flows(&self) -> Result<Vec<Flow>> {
        self.flows.iter().map(Flow::load).collect()
    }
}

/// Hash of the canonical config serialization, recorded in the manifest.
pub fn config_hash(cfg: &PipelineConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config_sha256: String,
    seed: u64,
    version: String,
}

fn write_manifest(cfg: &PipelineConfig) -> Result<()> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let manifest = Manifest {
        config_sha256: config_hash(cfg),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn progress(msg: &str) {
    eprintln!("[flowmine] {msg}");
}

/// Simulate `trace_count` traces; returns the trace file paths.
pub fn cmd_simulate(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    write_manifest(cfg)?;
    let flows = cfg.load_flows()?;
    let dir = cfg.out_dir().join("traces");
    fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut paths = Vec::new();
    for i in 0..cfg.trace_count {
        let sim_cfg = cfg.sim_config(cfg.seed.wrapping_add(i as u64));
        let out = simulate(&flows, &sim_cfg)?;
        let trace_path = dir.join(format!("trace_{i:03}.jsonl"));
        out.trace.save(&trace_path)?;
        save_provenance(&out.provenance, dir.join(format!("provenance_{i:03}.jsonl")))?;
        progress(&format!(
            "simulated trace {i}: {} steps, {} events",
            out.trace.steps.len(),
            out.trace.total_events()
        ));
        paths.push(trace_path);
    }
    Ok(paths)
}

/// The trace files cmd_simulate would have produced for this config.
pub fn default_trace_files(cfg: &PipelineConfig) -> Vec<PathBuf> {
    let dir = cfg.out_dir().join("traces");
    (0..cfg.trace_count).map(|i| dir.join(format!("trace_{i:03}.jsonl"))).collect()
}

/// Slice each trace file; writes one trace file per sub-trace plus an index.
pub fn cmd_slice(cfg: &PipelineConfig, trace_files: &[PathBuf]) -> Result<PathBuf> {
    cfg.validate()?;
    write_manifest(cfg)?;
    let slices_dir = cfg.out_dir().join("slices");
    fs::create_dir_all(&slices_dir).map_err(|e| Error::io(slices_dir.display().to_string(), e))?;
    let mut index: Vec<SliceIndexEntry> = Vec::new();
    for (ti, trace_path) in trace_files.iter().enumerate() {
        let trace = Trace::load(trace_path)?;
        let subs = slice_with_policy(&trace, cfg.slicing, cfg.addrless_policy);
        let sub_dir = slices_dir.join(format!("trace_{ti:03}"));
        fs::create_dir_all(&sub_dir).map_err(|e| Error::io(sub_dir.display().to_string(), e))?;
        for (si, sub) in subs.iter().enumerate() {
            let file = sub_dir.join(format!("sub_{si:03}.jsonl"));
            sub.to_trace().save(&file)?;
            index.push(SliceIndexEntry {
                file: format!("slices/trace_{ti:03}/sub_{si:03}.jsonl"),
                method: sub.origin.to_string(),
                key: sub.key,
            });
        }
        progress(&format!("sliced trace {ti}: {} sub-traces ({})", subs.len(), cfg.slicing));
    }
    let index_path = slices_dir.join("index.json");
    let text = serde_json::to_string_pretty(&index)?;
    fs::write(&index_path, text + "\n")
        .map_err(|e| Error::io(index_path.display().to_string(), e))?;
    Ok(index_path)
}

/// Sub-trace files listed in the slice index.
pub fn subtrace_files_from_index(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let index_path = cfg.out_dir().join("slices").join("index.json");
    let text = fs::read_to_string(&index_path)
        .map_err(|e| Error::io(index_path.display().to_string(), e))?;
    let entries: Vec<SliceIndexEntry> = serde_json::from_str(&text)
        .map_err(|e| Error::json(index_path.display().to_string(), e))?;
    Ok(entries.into_iter().map(|e| cfg.out_dir().join(e.file)).collect())
}

/// Train one model per pattern length on the sub-trace files; writes the
/// vocabulary and the model files. Lengths with no training windows are
/// omitted.
pub fn cmd_train(cfg: &PipelineConfig, subtrace_files: &[PathBuf]) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    write_manifest(cfg)?;
    let mut subs = Vec::new();
    for path in subtrace_files {
        subs.push(Trace::load(path)?);
    }
    let vocab = Vocabulary::build(subs.iter());
    if vocab.is_empty() {
        return Err(Error::InvalidParams("no events in the training sub-traces".into()));
    }
    let seqs: Vec<Vec<usize>> = subs.iter().map(|t| vocab.encode(&t.linearize())).collect();

    let models = train_models(
        &seqs,
        vocab.len(),
        cfg.max_len,
        cfg.model,
        &cfg.hyperparams,
        cfg.seed,
        cfg.jobs.max(1),
    )?;

    let dir = cfg.out_dir().join("models");
    fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    vocab.save(dir.join("vocabulary.json"))?;
    let mut paths = Vec::new();
    for model in &models {
        let w = model.pattern_length();
        let path = dir.join(format!("model_w{w}.json"));
        save_model(model, &vocab, &path)?;
        progress(&format!("trained {:?} model for length {w}", cfg.model));
        paths.push(path);
    }
    if paths.len() + 1 < cfg.max_len {
        progress(&format!(
            "note: no training windows beyond length {}, shorter suite trained",
            paths.len() + 1
        ));
    }
    Ok(paths)
}

pub fn default_model_files(cfg: &PipelineConfig) -> Vec<PathBuf> {
    let dir = cfg.out_dir().join("models");
    (2..=cfg.max_len)
        .map(|w| dir.join(format!("model_w{w}.json")))
        .filter(|p| p.exists())
        .collect()
}

/// Chain the trained models into mined patterns; writes `patterns.jsonl`.
pub fn cmd_mine(cfg: &PipelineConfig, model_files: &[PathBuf]) -> Result<PathBuf> {
    cfg.validate()?;
    write_manifest(cfg)?;
    if model_files.is_empty() {
        return Err(Error::MissingModel { length: 2 });
    }
    let mut loaded: Vec<(AnyModel, Vocabulary)> = Vec::new();
    for path in model_files {
        loaded.push(load_model(path)?);
    }
    let vocab = loaded[0].1.clone();
    for (_, v) in &loaded {
        if v != &vocab {
            return Err(Error::Config(
                "model files disagree on the vocabulary; retrain the suite".into(),
            ));
        }
    }
    let suite: ModelSuite<'_> = loaded.iter().map(|(m, _)| m.as_dyn()).collect();

    let initiating = if cfg.filters.initiating {
        let mut traces = Vec::new();
        for path in default_trace_files(cfg) {
            traces.push(Trace::load(&path)?);
        }
        let set = detect_initiating_events(&traces);
        progress(&format!("detected {} initiating event type(s)", set.len()));
        Some(set)
    } else {
        None
    };

    let mut params = cfg.miner_params();
    let trained_max = suite.max_length().unwrap_or(1);
    if trained_max < params.max_len {
        progress(&format!("clamping max pattern length to trained suite ({trained_max})"));
        params.max_len = trained_max;
    }
    let patterns = mine(&suite, &vocab, &params, initiating.as_ref())?;
    progress(&format!("mined {} pattern(s)", patterns.len()));
    let path = cfg.out_dir().join("patterns.jsonl");
    save_patterns(&patterns, &path)?;
    Ok(path)
}

/// Classify the mined patterns against the flows' ground truth; writes
/// `report.csv` and returns the rendered table.
pub fn cmd_eval(cfg: &PipelineConfig, pattern_file: &Path) -> Result<(PathBuf, MiningReport)> {
    cfg.validate()?;
    write_manifest(cfg)?;
    let flows = cfg.load_flows()?;
    let gt = build_ground_truth(&flows, cfg.max_steps, cfg.max_len)?;
    let patterns = load_patterns(pattern_file)?;
    let report = classify(&patterns, &gt, cfg.max_len);
    let path = cfg.out_dir().join("report.csv");
    report.save_csv(&path)?;
    progress(&format!(
        "evaluated {} pattern(s): {} valid found in total",
        patterns.len(),
        report.total_valid_found()
    ));
    Ok((path, report))
}

/// The full pipeline in order. Equivalent to running the five stages by hand
/// with the same config.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<(PathBuf, MiningReport)> {
    cfg.validate()?;
    let trace_files = cmd_simulate(cfg)?;
    cmd_slice(cfg, &trace_files)?;
    let sub_files = subtrace_files_from_index(cfg)?;
    let model_files = cmd_train(cfg, &sub_files)?;
    let pattern_file = cmd_mine(cfg, &model_files)?;
    cmd_eval(cfg, &pattern_file)
}

/// Initiating events over the simulated traces of this config, recomputed
/// from the trace files.
pub fn detected_initiating(cfg: &PipelineConfig) -> Result<BTreeSet<crate::event::EventType>> {
    let mut traces = Vec::new();
    for path in default_trace_files(cfg) {
        traces.push(Trace::load(&path)?);
    }
    Ok(detect_initiating_events(&traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quickstart_cfg(out: &Path) -> PipelineConfig {
        PipelineConfig {
            flows: vec![format!(
                "{}/../../flows/v1/dma_posted_write.json",
                env!("CARGO_MANIFEST_DIR")
            )],
            instances_per_initiator: 30,
            trace_count: 2,
            seed: 5,
            theta: 0.5,
            theta_prime: 0.5,
            max_len: 6,
            filters: Filters { causality: true, initiating: true },
            out: out.display().to_string(),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn quickstart_run_finds_valid_patterns() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quickstart_cfg(dir.path());
        let (_, report) = cmd_run(&cfg).unwrap();
        assert!(report.total_valid_found() >= 1, "{}", report.render_table());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quickstart_cfg(dir.path());
        cmd_run(&cfg).unwrap();
        let read_all = |root: &Path| -> Vec<(String, Vec<u8>)> {
            let mut files = Vec::new();
            let mut stack = vec![root.to_path_buf()];
            while let Some(d) = stack.pop() {
                for entry in fs::read_dir(&d).unwrap() {
                    let p = entry.unwrap().path();
                    if p.is_dir() {
                        stack.push(p);
                    } else {
                        files.push((
                            p.strip_prefix(root).unwrap().display().to_string(),
                            fs::read(&p).unwrap(),
                        ));
                    }
                }
            }
            files.sort();
            files
        };
        let first = read_all(dir.path());
        cmd_run(&cfg).unwrap();
        let second = read_all(dir.path());
        assert_eq!(first.len(), second.len());
        for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(second.iter()) {
            assert_eq!(name_a, name_b);
            assert_eq!(bytes_a, bytes_b, "file {name_a} differs between runs");
        }
    }

    #[test]
    fn theta_prime_above_theta_is_rejected_before_any_work() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            theta: 0.2,
            theta_prime: 0.4,
            ..quickstart_cfg(dir.path())
        };
        assert!(matches!(cmd_run(&cfg), Err(Error::Config(_))));
        assert!(!dir.path().join("traces").exists(), "no work before validation");
    }

    #[test]
    fn stages_compose_to_the_same_artifacts_as_run() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg_a = quickstart_cfg(dir_a.path());
        let cfg_b = quickstart_cfg(dir_b.path());

        cmd_run(&cfg_a).unwrap();

        let traces = cmd_simulate(&cfg_b).unwrap();
        cmd_slice(&cfg_b, &traces).unwrap();
        let subs = subtrace_files_from_index(&cfg_b).unwrap();
        let models = cmd_train(&cfg_b, &subs).unwrap();
        let patterns = cmd_mine(&cfg_b, &models).unwrap();
        cmd_eval(&cfg_b, &patterns).unwrap();

        for file in ["patterns.jsonl", "report.csv", "traces/trace_000.jsonl"] {
            let a = fs::read(dir_a.path().join(file)).unwrap();
            let b = fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between composed and one-shot runs");
        }
    }

    #[test]
    fn manifest_records_config_hash_and_seed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quickstart_cfg(dir.path());
        cmd_simulate(&cfg).unwrap();
        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(manifest["seed"], 5);
        assert_eq!(manifest["config_sha256"], serde_json::json!(config_hash(&cfg)));
        assert!(manifest["version"].is_string());
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quickstart_cfg(dir.path());
        let path = dir.path().join("cfg.json");
        fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        let loaded = PipelineConfig::load(&path).unwrap();
        assert_eq!(serde_json::to_string(&loaded).unwrap(), serde_json::to_string(&cfg).unwrap());
    }
}
