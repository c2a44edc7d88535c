//! Experiment configuration: one JSON document, optionally patched by
//! `RELMAS_*` environment variables.

use std::path::{Path, PathBuf};

use relmas_core::agent::{Checkpoint, OverheadConstants, Policy, TrainerConfig};
use relmas_core::cost::{load_cost_table, CostTable};
use relmas_core::model::{parse_bandwidth, MasConfig, ModelZoo, QosLevel};
use relmas_core::rational::Rational;
use relmas_core::sched::{scheduler_names, MagmaConfig, PremaConfig};
use relmas_core::workload::{
    generate_trace, parse_trace_jsonl, pareto_scale_for_load, QosMix, RequestTrace, TraceParams,
    WorkloadKind, WorkloadSet,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{read_file, CliError, Result};

pub const ENV_PREFIX: &str = "RELMAS_";

/// Inline MAS description or a path to a JSON file holding one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MasSource {
    Path(PathBuf),
    Inline(MasConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub duration_cycles: u64,
    pub pareto_shape: f64,
    /// Target average load; ignored when `pareto_scale_cycles` is set.
    pub load: f64,
    pub pareto_scale_cycles: Option<f64>,
    pub qos_medium_factor: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            duration_cycles: 2_000_000,
            pareto_shape: 1.5,
            load: 0.8,
            pareto_scale_cycles: None,
            qos_medium_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    /// Write a checkpoint every this many episodes; 0 writes only the final one.
    pub checkpoint_every: u64,
    pub resume: Option<PathBuf>,
    /// Trace seeds of the held-out evaluation set.
    pub eval_seeds: Vec<u64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { checkpoint_every: 10, resume: None, eval_seeds: vec![1_000_001, 1_000_002] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    /// Bandwidth literals in bytes per cycle (`16`, `12.5`, `25/2`).
    pub bandwidths: Vec<String>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { bandwidths: ["16", "12", "8", "4"].map(String::from).to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadOptions {
    pub hidden_sizes: Vec<usize>,
    pub periods: Vec<u64>,
    pub constants: OverheadConstants,
}

impl Default for OverheadOptions {
    fn default() -> Self {
        OverheadOptions {
            hidden_sizes: vec![64, 128, 256],
            periods: vec![40_000, 20_000, 10_000],
            constants: OverheadConstants::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Defaults to the six-SA reference system.
    pub mas: Option<MasSource>,
    /// JSON array of model descriptions; defaults to the bundled zoo.
    pub models: Option<PathBuf>,
    /// Cost CSV; the analytic model is used when absent.
    pub cost_table: Option<PathBuf>,
    pub allow_partial_costs: bool,
    pub workloads: Vec<String>,
    /// `low`, `medium`, `high` or `uniform`.
    pub qos_levels: Vec<String>,
    pub trace: TraceConfig,
    /// Replay this JSON-lines trace instead of generating one per seed.
    pub trace_file: Option<PathBuf>,
    pub period_cycles: u64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub schedulers: Vec<String>,
    pub prema: PremaConfig,
    pub magma: MagmaConfig,
    /// Trained policy used by the `relmas` scheduler.
    pub checkpoint: Option<PathBuf>,
    /// Fill the `runtime_ms` column. Off by default so result files are
    /// reproducible byte for byte.
    pub record_runtime: bool,
    pub trainer: TrainerConfig,
    pub train: TrainOptions,
    pub sweep: SweepOptions,
    pub overhead: OverheadOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mas: None,
            models: None,
            cost_table: None,
            allow_partial_costs: false,
            workloads: vec!["light".into()],
            qos_levels: vec!["medium".into()],
            trace: TraceConfig::default(),
            trace_file: None,
            period_cycles: 10_000,
            seeds: vec![0],
            out_dir: PathBuf::from("out"),
            schedulers: vec!["fcfs-h".into(), "prema-h".into(), "herald".into()],
            prema: PremaConfig::default(),
            magma: MagmaConfig::default(),
            checkpoint: None,
            record_runtime: false,
            trainer: TrainerConfig::default(),
            train: TrainOptions::default(),
            sweep: SweepOptions::default(),
            overhead: OverheadOptions::default(),
        }
    }
}

/// Applies `RELMAS_A__B=value` as `config.a.b = value`. The value is read as
/// JSON when it parses and as a plain string otherwise.
pub fn apply_env_overrides<I>(doc: &mut Value, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<_> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> =
            key[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(String::is_empty) {
            return Err(CliError::config(format!("malformed override `{key}`")));
        }
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        let mut node = &mut *doc;
        for (depth, part) in path.iter().enumerate() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
            let map = node
                .as_object_mut()
                .ok_or_else(|| CliError::config(format!("`{key}` overrides a non-object")))?;
            if depth + 1 == path.len() {
                map.insert(part.clone(), value);
                break;
            }
            node = map.entry(part.clone()).or_insert(Value::Null);
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses `text` after applying overrides from `vars`.
    pub fn from_json_with<I>(text: &str, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        if !doc.is_object() {
            return Err(CliError::config("top level must be a JSON object"));
        }
        apply_env_overrides(&mut doc, vars)?;
        let cfg: ExperimentConfig = serde_json::from_value(doc).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(CliError::config("seeds must not be empty"));
        }
        if self.period_cycles == 0 {
            return Err(CliError::config("period_cycles must be positive"));
        }
        if self.workloads.is_empty() || self.qos_levels.is_empty() {
            return Err(CliError::config("workloads and qos_levels must not be empty"));
        }
        for w in &self.workloads {
            WorkloadKind::parse(w).map_err(|e| CliError::config(e.to_string()))?;
        }
        for q in &self.qos_levels {
            qos_mix(q)?;
        }
        for s in &self.schedulers {
            if !scheduler_names().contains(&s.as_str()) {
                return Err(CliError::config(format!(
                    "unknown scheduler `{s}` (expected one of {})",
                    scheduler_names().join(", ")
                )));
            }
        }
        self.trainer.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    }

    /// Resolves relative input paths against `base`.
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(MasSource::Path(p)) = &mut self.mas {
            fix(p);
        }
        for p in [&mut self.models, &mut self.cost_table, &mut self.trace_file, &mut self.checkpoint, &mut self.train.resume]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    fn check_paths(&self) -> Result<()> {
        let mut paths: Vec<(&str, &PathBuf)> = Vec::new();
        if let Some(MasSource::Path(p)) = &self.mas {
            paths.push(("mas", p));
        }
        let optional = [
            ("models", &self.models),
            ("cost_table", &self.cost_table),
            ("trace_file", &self.trace_file),
            ("train.resume", &self.train.resume),
        ];
        paths.extend(optional.iter().filter_map(|(n, p)| p.as_ref().map(|p| (*n, p))));
        for (name, p) in paths {
            if !p.is_file() {
                return Err(CliError::config(format!("{name}: {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// Maps a `qos_levels` entry onto a deadline mix.
pub fn qos_mix(name: &str) -> Result<QosMix> {
    if name.eq_ignore_ascii_case("uniform") {
        return Ok(QosMix::uniform());
    }
    QosLevel::parse(name)
        .map(QosMix::only)
        .ok_or_else(|| CliError::config(format!("unknown QoS level `{name}`")))
}

/// One (workload, QoS) pair of the scenario grid.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Scenario {
    pub workload: String,
    pub qos_level: String,
}

/// A loaded experiment: config plus the resolved system, models and costs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub mas: MasConfig,
    pub zoo: ModelZoo,
    pub table: CostTable,
}

impl Experiment {
    /// Reads the config at `path`, applying overrides from the process
    /// environment.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, std::env::vars())
    }

    pub fn load_with<I>(path: &Path, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config = ExperimentConfig::from_json_with(&text, vars)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.rebase(base);
        Self::from_config(config)
    }

    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        config.check_paths()?;
        let mas = match &config.mas {
            None => MasConfig::reference(),
            Some(MasSource::Inline(cfg)) => cfg.clone(),
            Some(MasSource::Path(p)) => serde_json::from_str(&read_file(p)?)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        };
        let zoo = match &config.models {
            None => ModelZoo::bundled(),
            Some(p) => ModelZoo::from_json(&read_file(p)?)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        };
        let table = build_table(&config, &zoo, &mas)?;
        let exp = Experiment { config, mas, zoo, table };
        for w in &exp.config.workloads {
            let kind = WorkloadKind::parse(w).map_err(|e| CliError::config(e.to_string()))?;
            WorkloadSet::resolve(kind, &exp.table).map_err(|e| CliError::config(e.to_string()))?;
        }
        Ok(exp)
    }

    /// Cost table for `mas`, which may differ from the configured system in
    /// bandwidth.
    pub fn table_for(&self, mas: &MasConfig) -> Result<CostTable> {
        build_table(&self.config, &self.zoo, mas)
    }

    pub fn with_bandwidth(&self, literal: &str) -> Result<(MasConfig, Rational)> {
        let b = parse_bandwidth(literal).map_err(|e| CliError::config(e.to_string()))?;
        let mas = self.mas.with_bandwidth(b.clone()).map_err(|e| CliError::config(e.to_string()))?;
        Ok((mas, b))
    }

    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for w in &self.config.workloads {
            for q in &self.config.qos_levels {
                out.push(Scenario { workload: w.to_ascii_lowercase(), qos_level: q.to_ascii_lowercase() });
            }
        }
        out
    }

    pub fn trace_params(&self, scenario: &Scenario, seed: u64) -> Result<TraceParams> {
        let kind = WorkloadKind::parse(&scenario.workload).map_err(|e| CliError::config(e.to_string()))?;
        let workload = WorkloadSet::resolve(kind, &self.table).map_err(|e| CliError::config(e.to_string()))?;
        let t = &self.config.trace;
        let scale = match t.pareto_scale_cycles {
            Some(s) => s,
            None => pareto_scale_for_load(t.load, t.pareto_shape, &workload, &self.table, self.mas.num_sas())
                .map_err(|e| CliError::config(e.to_string()))?,
        };
        let params = TraceParams {
            workload,
            duration_cycles: t.duration_cycles,
            pareto_shape: t.pareto_shape,
            pareto_scale_cycles: scale,
            qos_medium_factor: t.qos_medium_factor,
            qos_mix: qos_mix(&scenario.qos_level)?,
            seed,
        };
        params.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(params)
    }

    /// The configured trace file, or a generated trace for `seed`.
    pub fn trace(&self, scenario: &Scenario, seed: u64) -> Result<RequestTrace> {
        match &self.config.trace_file {
            Some(p) => Ok(parse_trace_jsonl(&read_file(p)?, &self.table)?),
            None => Ok(generate_trace(&self.trace_params(scenario, seed)?, &self.table)?),
        }
    }

    /// Loads the policy for the `relmas` scheduler.
    pub fn policy(&self) -> Result<Policy> {
        let path = self
            .config
            .checkpoint
            .as_ref()
            .ok_or_else(|| CliError::config("scheduler `relmas` needs `checkpoint`"))?;
        // checked here rather than at load: `train` writes this file
        if !path.is_file() {
            return Err(CliError::config(format!("checkpoint: {} does not exist", path.display())));
        }
        load_policy(path, &self.mas, &self.table)
    }
}

fn build_table(config: &ExperimentConfig, zoo: &ModelZoo, mas: &MasConfig) -> Result<CostTable> {
    match &config.cost_table {
        Some(p) => load_cost_table(p, mas, zoo, config.allow_partial_costs)
            .map_err(|e| CliError::config(format!("{}: {e}", p.display()))),
        None => CostTable::analytic(zoo, mas).map_err(|e| CliError::config(e.to_string())),
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Checkpoint::decode(&bytes).map_err(|source| CliError::Checkpoint { path: path.to_path_buf(), source })
}

/// Loads a policy and checks it fits the system and cost table.
pub fn load_policy(path: &Path, mas: &MasConfig, table: &CostTable) -> Result<Policy> {
    let ckpt = load_checkpoint(path)?;
    if ckpt.num_sas != mas.num_sas() {
        return Err(CliError::config(format!(
            "checkpoint is for {} SAs, system has {}",
            ckpt.num_sas,
            mas.num_sas()
        )));
    }
    if ckpt.norms.num_models != table.num_models() || ckpt.norms.max_layers != table.max_layers() {
        return Err(CliError::config("checkpoint was trained on a different model set"));
    }
    ckpt.policy().map_err(|source| CliError::Checkpoint { path: path.to_path_buf(), source })
}
