use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use relmas_core::agent::{overhead_energy, policy_mac_count, Checkpoint, Policy, RelmasScheduler, Trainer, TrainingSetup};
use relmas_core::cost::CostTable;
use relmas_core::model::MasConfig;
use relmas_core::sched::{FcfsH, HeraldLb, MagmaConfig, MagmaScheduler, PremaH, RandomScheduler, Scheduler};
use relmas_core::sim::{run_trace, RunOptions};
use relmas_core::rational::to_decimal;
use relmas_core::workload::RequestTrace;
use serde_json::json;

use crate::config::{load_checkpoint, Experiment, Scenario};
use crate::error::{read_file, write_file, CliError, Result};
use crate::report::{
    bar_chart_svg, line_chart_svg, read_csv, write_csv, CurveRow, OverheadRow, ResultRow, SweepRow,
};

/// Files written by a command, in write order.
pub type Outputs = Vec<PathBuf>;

fn out(exp: &Experiment, name: &str) -> PathBuf {
    exp.config.out_dir.join(name)
}

/// Builds the named scheduler for one run. `seed` perturbs the stochastic
/// policies so different seeds are independent samples.
pub fn build_scheduler(exp: &Experiment, name: &str, seed: u64, policy: Option<&Policy>) -> Result<Box<dyn Scheduler>> {
    Ok(match name {
        "fcfs-h" => Box::new(FcfsH),
        "prema-h" => Box::new(PremaH { cfg: exp.config.prema }),
        "herald" => Box::new(HeraldLb),
        "random" => Box::new(RandomScheduler::new(seed)),
        "magma" => Box::new(MagmaScheduler::new(MagmaConfig {
            seed: exp.config.magma.seed.wrapping_add(seed),
            ..exp.config.magma
        })),
        "relmas" => {
            let policy = policy.ok_or_else(|| CliError::config("scheduler `relmas` needs `checkpoint`"))?;
            Box::new(RelmasScheduler::new(policy.clone()))
        }
        other => return Err(CliError::config(format!("unknown scheduler `{other}`"))),
    })
}

fn needs_policy(exp: &Experiment) -> Result<Option<Policy>> {
    if exp.config.schedulers.iter().any(|s| s == "relmas") {
        exp.policy().map(Some)
    } else {
        Ok(None)
    }
}

/// Runs one scheduler over one trace.
#[allow(clippy::too_many_arguments)]
fn run_row(
    exp: &Experiment,
    mas: &MasConfig,
    table: &CostTable,
    trace: &RequestTrace,
    scenario: &Scenario,
    scheduler: &str,
    seed: u64,
    policy: Option<&Policy>,
) -> Result<ResultRow> {
    let mut sched = build_scheduler(exp, scheduler, seed, policy)?;
    let start = Instant::now();
    let result = run_trace(mas, table, trace, sched.as_mut(), exp.config.period_cycles, &RunOptions::default())?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let m = result.metrics;
    Ok(ResultRow {
        scheduler: scheduler.to_string(),
        workload: scenario.workload.clone(),
        qos_level: scenario.qos_level.clone(),
        bandwidth: to_decimal(mas.dram_bandwidth()),
        seed,
        sla_rate: m.sla_satisfaction_rate,
        misses: m.jobs_missed,
        energy_pj: m.total_energy_pj,
        makespan: m.makespan,
        runtime_ms: exp.config.record_runtime.then_some(elapsed),
    })
}

/// Writes one trace per scenario and seed, each headed by a provenance line.
pub fn gen_workload(exp: &Experiment) -> Result<Outputs> {
    let mut written = Vec::new();
    for scenario in exp.scenarios() {
        for &seed in &exp.config.seeds {
            let params = exp.trace_params(&scenario, seed)?;
            let trace = relmas_core::workload::generate_trace(&params, &exp.table)?;
            let models: Vec<&str> =
                params.workload.model_ids.iter().filter_map(|&m| exp.table.model_name(m)).collect();
            let header = json!({
                "provenance": {
                    "generator": "relmas gen-workload",
                    "seed": seed,
                    "workload": scenario.workload,
                    "qos_level": scenario.qos_level,
                    "models": models,
                    "duration_cycles": params.duration_cycles,
                    "pareto_shape": params.pareto_shape,
                    "pareto_scale_cycles": params.pareto_scale_cycles,
                    "qos_medium_factor": params.qos_medium_factor,
                    "qos_mix": params.qos_mix,
                    "jobs": trace.len(),
                }
            });
            let mut text = header.to_string();
            text.push('\n');
            text.push_str(&trace.to_jsonl(&exp.table));
            let path = out(exp, &format!("traces/{}-{}-s{seed}.jsonl", scenario.workload, scenario.qos_level));
            write_file(&path, text)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Runs every selected scheduler on identical traces and writes
/// `results.csv` plus a bar chart drawn from the CSV as written.
pub fn compare(exp: &Experiment) -> Result<Outputs> {
    let policy = needs_policy(exp)?;
    let mut traces = Vec::new();
    for scenario in exp.scenarios() {
        for &seed in &exp.config.seeds {
            traces.push((scenario.clone(), seed, exp.trace(&scenario, seed)?));
        }
    }
    let tasks: Vec<(&Scenario, u64, &RequestTrace, &str)> = traces
        .iter()
        .flat_map(|(sc, seed, tr)| exp.config.schedulers.iter().map(move |s| (sc, *seed, tr, s.as_str())))
        .collect();
    let mut rows = tasks
        .par_iter()
        .map(|&(sc, seed, tr, s)| run_row(exp, &exp.mas, &exp.table, tr, sc, s, seed, policy.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let csv_path = out(exp, "results.csv");
    write_csv(&csv_path, &rows)?;
    let svg_path = out(exp, "results.svg");
    write_file(&svg_path, bar_chart_svg(&read_csv::<ResultRow>(&csv_path)?))?;
    Ok(vec![csv_path, svg_path])
}

/// Normalises each series to its own best; an all-zero series maps to 1.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let best = values.iter().copied().fold(0.0, f64::max);
    values.iter().map(|&v| if best > 0.0 { v / best } else { 1.0 }).collect()
}

/// Re-runs every scheduler on a fixed trace per scenario and seed at each
/// configured bandwidth.
pub fn sweep_bandwidth(exp: &Experiment) -> Result<Outputs> {
    let literals = &exp.config.sweep.bandwidths;
    if literals.is_empty() {
        return Err(CliError::config("sweep.bandwidths must not be empty"));
    }
    let policy = needs_policy(exp)?;
    let mut systems = Vec::new();
    for literal in literals {
        let (mas, _) = exp.with_bandwidth(literal)?;
        let table = exp.table_for(&mas)?;
        systems.push((mas, table));
    }
    let mut traces = Vec::new();
    for scenario in exp.scenarios() {
        for &seed in &exp.config.seeds {
            traces.push((scenario.clone(), seed, exp.trace(&scenario, seed)?));
        }
    }
    let mut tasks = Vec::new();
    for (ti, _) in traces.iter().enumerate() {
        for s in &exp.config.schedulers {
            for bi in 0..systems.len() {
                tasks.push((ti, s.as_str(), bi));
            }
        }
    }
    let runs = tasks
        .par_iter()
        .map(|&(ti, s, bi)| {
            let (sc, seed, tr) = &traces[ti];
            let (mas, table) = &systems[bi];
            run_row(exp, mas, table, tr, sc, s, *seed, policy.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    // tasks are grouped by (trace, scheduler) with bandwidths contiguous
    let mut rows = Vec::with_capacity(runs.len());
    for chunk in runs.chunks(systems.len()) {
        let rates: Vec<f64> = chunk.iter().map(|r| r.sla_rate).collect();
        for (r, n) in chunk.iter().zip(normalize(&rates)) {
            rows.push(SweepRow {
                scheduler: r.scheduler.clone(),
                workload: r.workload.clone(),
                qos_level: r.qos_level.clone(),
                bandwidth: r.bandwidth.clone(),
                seed: r.seed,
                sla_rate: r.sla_rate,
                normalized_sla: n,
            });
        }
    }
    // stable sort keeps the configured bandwidth order inside each series
    rows.sort_by(|a, b| {
        (&a.scheduler, &a.workload, &a.qos_level, a.seed).cmp(&(&b.scheduler, &b.workload, &b.qos_level, b.seed))
    });
    let csv_path = out(exp, "sweep.csv");
    write_csv(&csv_path, &rows)?;
    let svg_path = out(exp, "sweep.svg");
    write_file(&svg_path, sweep_chart(&read_csv::<SweepRow>(&csv_path)?))?;
    Ok(vec![csv_path, svg_path])
}

fn sweep_chart(rows: &[SweepRow]) -> String {
    let mut labels: Vec<String> = Vec::new();
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for r in rows {
        if !labels.contains(&r.bandwidth) {
            labels.push(r.bandwidth.clone());
        }
        let name = format!("{} {}/{} s{}", r.scheduler, r.workload, r.qos_level, r.seed);
        match series.last_mut() {
            Some((n, ys)) if *n == name => ys.push(r.normalized_sla),
            _ => series.push((name, vec![r.normalized_sla])),
        }
    }
    line_chart_svg("Normalized SLA rate vs DRAM bandwidth (B/cycle)", &labels, &series, 1.0)
}

/// Policy energy as a share of workload energy over the hidden-size and
/// scheduling-period grid, on the first scenario's first seed.
pub fn overhead(exp: &Experiment) -> Result<Outputs> {
    let opts = &exp.config.overhead;
    let scenario = exp.scenarios().into_iter().next().ok_or_else(|| CliError::config("no scenario"))?;
    let trace = exp.trace(&scenario, exp.config.seeds[0])?;
    let m = exp.mas.num_sas();
    let mut rows = Vec::new();
    for &period in &opts.periods {
        if period == 0 {
            return Err(CliError::config("overhead periods must be positive"));
        }
        let run = run_trace(&exp.mas, &exp.table, &trace, &mut FcfsH, period, &RunOptions::default())?;
        for &h in &opts.hidden_sizes {
            if h == 0 || h % 2 != 0 {
                return Err(CliError::config(format!("hidden size {h} must be even and positive")));
            }
            let report = overhead_energy(h, m, &run.rq_lengths, &opts.constants, run.metrics.total_energy_pj);
            rows.push(OverheadRow {
                hidden: h,
                period_cycles: period,
                invocations: report.invocations,
                macs_per_step: policy_mac_count(h, m),
                policy_pj: report.policy_pj,
                workload_pj: run.metrics.total_energy_pj,
                overhead_percent: report.percent,
            });
        }
    }
    rows.sort_by_key(|r| (r.hidden, std::cmp::Reverse(r.period_cycles)));
    let csv_path = out(exp, "overhead.csv");
    write_csv(&csv_path, &rows)?;
    let svg_path = out(exp, "overhead.svg");
    write_file(&svg_path, overhead_chart(&read_csv::<OverheadRow>(&csv_path)?))?;
    Ok(vec![csv_path, svg_path])
}

fn overhead_chart(rows: &[OverheadRow]) -> String {
    let mut labels: Vec<String> = Vec::new();
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for r in rows {
        let label = r.period_cycles.to_string();
        if !labels.contains(&label) {
            labels.push(label);
        }
        let name = format!("h={}", r.hidden);
        match series.last_mut() {
            Some((n, ys)) if *n == name => ys.push(r.overhead_percent),
            _ => series.push((name, vec![r.overhead_percent])),
        }
    }
    let max = rows.iter().map(|r| r.overhead_percent).fold(0.0, f64::max);
    line_chart_svg("Policy energy overhead (%) vs scheduling period", &labels, &series, max)
}

/// Trains on the first scenario, writing `checkpoint.bin` (full trainer
/// state), `policy.bin` (deployable actor), the config sidecar and
/// `curves.csv`. `trainer.episodes` is the total target, so a resumed run
/// only trains the remainder.
pub fn train(exp: &Experiment) -> Result<Outputs> {
    let cfg = exp.config.trainer.clone();
    let scenario = exp.scenarios().into_iter().next().ok_or_else(|| CliError::config("no scenario"))?;
    let trace_params = exp.trace_params(&scenario, cfg.seed)?;
    let mut eval_traces = Vec::new();
    for &s in &exp.config.train.eval_seeds {
        eval_traces.push(exp.trace(&scenario, s)?);
    }
    let setup = TrainingSetup {
        cfg: &exp.mas,
        table: &exp.table,
        period: exp.config.period_cycles,
        trace_params,
        eval_traces,
    };
    let curves_path = out(exp, "curves.csv");
    let (mut trainer, mut curve) = match &exp.config.train.resume {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            let trainer = Trainer::resume(cfg.clone(), &setup, &ckpt)?;
            let mut curve: Vec<CurveRow> =
                if curves_path.is_file() { read_csv(&curves_path)? } else { Vec::new() };
            curve.retain(|r| r.episode <= ckpt.episodes_done);
            (trainer, curve)
        }
        None => (Trainer::new(cfg.clone(), &setup)?, Vec::new()),
    };
    let mut written = Vec::new();
    let sidecar = out(exp, "checkpoint.json");
    write_file(&sidecar, serde_json::to_string_pretty(&cfg).expect("trainer config serializes"))?;
    written.push(sidecar);
    let every = exp.config.train.checkpoint_every;
    while trainer.episodes_done() < cfg.episodes {
        trainer.train(&setup, 1, |_, p| {
            curve.push(CurveRow { episode: p.episode, mean_reward: p.mean_reward, eval_sla_rate: p.eval_sla_rate });
            Ok(())
        })?;
        let done = trainer.episodes_done();
        if every > 0 && done % every == 0 {
            let path = out(exp, &format!("checkpoints/ep{done:06}.bin"));
            write_checkpoint(&path, &trainer.checkpoint())?;
            write_csv(&curves_path, &curve)?;
        }
    }
    let state = out(exp, "checkpoint.bin");
    write_checkpoint(&state, &trainer.checkpoint())?;
    let policy = out(exp, "policy.bin");
    write_checkpoint(&policy, &Checkpoint::from_policy(&trainer.policy(), trainer.episodes_done()))?;
    write_csv(&curves_path, &curve)?;
    written.extend([state, policy, curves_path]);
    Ok(written)
}

fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_file(path, ckpt.encode())
}

/// Reads back a trace written by [`gen_workload`].
pub fn read_trace(exp: &Experiment, path: &Path) -> Result<RequestTrace> {
    Ok(relmas_core::workload::parse_trace_jsonl(&read_file(path)?, &exp.table)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize(&[0.5, 1.0, 0.25]), vec![0.5, 1.0, 0.25]);
        assert_eq!(normalize(&[0.2, 0.4]), vec![0.5, 1.0]);
        assert_eq!(normalize(&[0.0, 0.0]), vec![1.0, 1.0]);
        assert_eq!(normalize(&[0.3]), vec![1.0]);
    }
}
