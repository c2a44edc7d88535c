//! Per-(model, layer, sub-accelerator) cost figures: latency in cycles, DRAM
//! traffic and energy.
//!
//! Costs come either from [`analytic_cost`], a roofline estimate, or from an
//! externally produced CSV table (the registration path for models profiled
//! offline). Bandwidth is kept as the exact pair `(bytes, cycles)`.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cycles, Dataflow, LayerDesc, MasConfig, ModelZoo, SaSpec};
use crate::rational::{self, Rational};

pub const CSV_HEADER: [&str; 6] =
    ["model", "layer", "sa", "cycles", "bandwidth_bytes_per_cycle", "energy_pj"];

#[derive(Debug, Error)]
pub enum CostError {
    #[error("layer has zero MACs")]
    ZeroMacs,
    #[error("cost table line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("cost table is missing ({model}, layer {layer}, sa {sa})")]
    Incomplete { model: String, layer: usize, sa: usize },
    #[error("unknown model id {0}")]
    UnknownModel(usize),
    #[error("cost table shape mismatch: {0}")]
    Shape(String),
    #[error("reading cost table: {0}")]
    Io(#[from] std::io::Error),
}

/// Tunable constants of the analytic estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostParams {
    pub row_stationary_utilization: f64,
    pub weight_stationary_utilization: f64,
    pub row_stationary_mac_pj: f64,
    pub weight_stationary_mac_pj: f64,
    pub dram_byte_pj: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            row_stationary_utilization: 0.75,
            weight_stationary_utilization: 0.85,
            row_stationary_mac_pj: 0.5,
            weight_stationary_mac_pj: 0.4,
            dram_byte_pj: 4.0,
        }
    }
}

impl CostParams {
    pub fn utilization(&self, dataflow: Dataflow) -> f64 {
        match dataflow {
            Dataflow::RowStationary => self.row_stationary_utilization,
            Dataflow::WeightStationary => self.weight_stationary_utilization,
        }
    }

    pub fn mac_pj(&self, dataflow: Dataflow) -> f64 {
        match dataflow {
            Dataflow::RowStationary => self.row_stationary_mac_pj,
            Dataflow::WeightStationary => self.weight_stationary_mac_pj,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerCost {
    /// Contention-free latency (`>= 1`).
    pub cycles: Cycles,
    /// Total DRAM bytes moved over `cycles`.
    pub bytes: u64,
    pub energy_pj: f64,
}

impl LayerCost {
    /// Required DRAM bandwidth, bytes per cycle.
    pub fn bandwidth(&self) -> Rational {
        rational::ratio(self.bytes, self.cycles.max(1))
    }

    pub fn bandwidth_f64(&self) -> f64 {
        self.bytes as f64 / self.cycles.max(1) as f64
    }
}

/// Roofline estimate of running `layer` on `sa`.
pub fn analytic_cost(layer: &LayerDesc, sa: &SaSpec, cfg: &MasConfig) -> Result<LayerCost, CostError> {
    if layer.macs == 0 {
        return Err(CostError::ZeroMacs);
    }
    let params = cfg.cost_params();
    let utilization = rational::parse_decimal(&params.utilization(sa.dataflow).to_string())
        .filter(|u| !u.is_zero() && *u > Rational::zero())
        .unwrap_or_else(|| rational::from_u64(1));
    let throughput = rational::from_u64(sa.peak_macs_per_cycle()) * utilization;
    let compute_cycles = rational::ceil_u64(&(rational::from_u64(layer.macs) / throughput))
        .unwrap_or(u64::MAX);
    let bytes = layer.total_bytes();
    let mem_cycles =
        rational::ceil_u64(&(rational::from_u64(bytes) / cfg.dram_bandwidth())).unwrap_or(u64::MAX);
    let cycles = compute_cycles.max(mem_cycles).max(1);
    let energy_pj = layer.macs as f64 * params.mac_pj(sa.dataflow)
        + bytes as f64 * params.dram_byte_pj
        + bytes as f64 * 8.0 * cfg.nop_energy_pj_per_bit();
    Ok(LayerCost { cycles, bytes, energy_pj })
}

/// Complete cost table: `costs[model][layer][sa]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    model_names: Vec<String>,
    num_sas: usize,
    costs: Vec<Vec<Vec<LayerCost>>>,
}

impl CostTable {
    /// Builds a table from explicit entries; every layer must have one cost
    /// per SA.
    pub fn from_entries(
        model_names: Vec<String>,
        costs: Vec<Vec<Vec<LayerCost>>>,
    ) -> Result<Self, CostError> {
        if model_names.len() != costs.len() {
            return Err(CostError::Shape("one name per model required".into()));
        }
        let num_sas = costs.first().and_then(|m| m.first()).map_or(0, Vec::len);
        if num_sas == 0 {
            return Err(CostError::Shape("no sub-accelerators".into()));
        }
        for (m, layers) in costs.iter().enumerate() {
            if layers.is_empty() {
                return Err(CostError::Shape(format!("model {} has no layers", model_names[m])));
            }
            for (s, per_sa) in layers.iter().enumerate() {
                if per_sa.len() != num_sas {
                    return Err(CostError::Incomplete {
                        model: model_names[m].clone(),
                        layer: s,
                        sa: per_sa.len().min(num_sas),
                    });
                }
                if per_sa.iter().any(|c| c.cycles == 0) {
                    return Err(CostError::Shape(format!(
                        "model {} layer {s} has a zero-cycle entry",
                        model_names[m]
                    )));
                }
            }
        }
        Ok(CostTable { model_names, num_sas, costs })
    }

    /// Fully analytic table for every model in `zoo`.
    pub fn analytic(zoo: &ModelZoo, cfg: &MasConfig) -> Result<Self, CostError> {
        let mut costs = Vec::with_capacity(zoo.len());
        for model in zoo.models() {
            let mut layers = Vec::with_capacity(model.layers.len());
            for layer in &model.layers {
                let per_sa = cfg
                    .sas()
                    .iter()
                    .map(|sa| analytic_cost(layer, sa, cfg))
                    .collect::<Result<Vec<_>, _>>()?;
                layers.push(per_sa);
            }
            costs.push(layers);
        }
        let names = zoo.models().iter().map(|m| m.name.clone()).collect();
        CostTable::from_entries(names, costs)
    }

    /// Parses the CSV format (see [`CSV_HEADER`]). With `allow_partial`,
    /// missing `(layer, sa)` pairs are filled from [`analytic_cost`].
    pub fn from_csv_reader<R: Read>(
        reader: R,
        cfg: &MasConfig,
        zoo: &ModelZoo,
        allow_partial: bool,
    ) -> Result<Self, CostError> {
        let num_sas = cfg.num_sas();
        let mut found: HashMap<(usize, usize, usize), LayerCost> = HashMap::new();
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut header_seen = false;
        for record in csv.records() {
            let record = record.map_err(|e| CostError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if record.iter().ne(CSV_HEADER.iter().copied()) {
                    return Err(CostError::Parse {
                        line,
                        message: format!("expected header `{}`", CSV_HEADER.join(",")),
                    });
                }
                continue;
            }
            let parse_err = |message: String| CostError::Parse { line, message };
            if record.len() != CSV_HEADER.len() {
                return Err(parse_err(format!("expected 6 fields, found {}", record.len())));
            }
            let model = zoo
                .by_name(&record[0])
                .ok_or_else(|| parse_err(format!("unknown model `{}`", &record[0])))?;
            let layer: usize =
                record[1].parse().map_err(|_| parse_err(format!("bad layer `{}`", &record[1])))?;
            let sa: usize =
                record[2].parse().map_err(|_| parse_err(format!("bad sa `{}`", &record[2])))?;
            let cycles: u64 =
                record[3].parse().map_err(|_| parse_err(format!("bad cycles `{}`", &record[3])))?;
            if layer >= model.layers.len() {
                return Err(parse_err(format!("layer {layer} out of range for {}", model.name)));
            }
            if sa >= num_sas {
                return Err(parse_err(format!("sa {sa} out of range ({num_sas} SAs)")));
            }
            if cycles == 0 {
                return Err(parse_err("cycles must be at least 1".into()));
            }
            let bandwidth = rational::parse_decimal(&record[4])
                .filter(|b| *b >= Rational::zero())
                .ok_or_else(|| parse_err(format!("bad bandwidth `{}`", &record[4])))?;
            let bytes = rational::round_u64(&(bandwidth * rational::from_u64(cycles)))
                .ok_or_else(|| parse_err("bandwidth overflows".into()))?;
            let energy_pj: f64 = record[5]
                .parse()
                .ok()
                .filter(|e: &f64| e.is_finite() && *e >= 0.0)
                .ok_or_else(|| parse_err(format!("bad energy `{}`", &record[5])))?;
            let key = (model.model_id, layer, sa);
            if found.insert(key, LayerCost { cycles, bytes, energy_pj }).is_some() {
                return Err(parse_err(format!("duplicate entry for ({}, {layer}, {sa})", model.name)));
            }
        }

        let mut costs = Vec::with_capacity(zoo.len());
        for model in zoo.models() {
            let mut layers = Vec::with_capacity(model.layers.len());
            for layer in &model.layers {
                let mut per_sa = Vec::with_capacity(num_sas);
                for sa in cfg.sas() {
                    match found.get(&(model.model_id, layer.layer_id, sa.id)) {
                        Some(cost) => per_sa.push(*cost),
                        None if allow_partial => per_sa.push(analytic_cost(layer, sa, cfg)?),
                        None => {
                            return Err(CostError::Incomplete {
                                model: model.name.clone(),
                                layer: layer.layer_id,
                                sa: sa.id,
                            })
                        }
                    }
                }
                layers.push(per_sa);
            }
            costs.push(layers);
        }
        let names = zoo.models().iter().map(|m| m.name.clone()).collect();
        CostTable::from_entries(names, costs)
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for (m, layers) in self.costs.iter().enumerate() {
            for (s, per_sa) in layers.iter().enumerate() {
                for (sa, c) in per_sa.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{s},{sa},{},{},{}\n",
                        self.model_names[m],
                        c.cycles,
                        c.bytes as f64 / c.cycles as f64,
                        c.energy_pj
                    ));
                }
            }
        }
        out
    }

    pub fn num_sas(&self) -> usize {
        self.num_sas
    }

    pub fn num_models(&self) -> usize {
        self.costs.len()
    }

    pub fn model_name(&self, model_id: usize) -> Option<&str> {
        self.model_names.get(model_id).map(String::as_str)
    }

    pub fn model_id(&self, name: &str) -> Option<usize> {
        self.model_names.iter().position(|n| n.eq_ignore_ascii_case(name))
    }

    pub fn num_layers(&self, model_id: usize) -> Option<usize> {
        self.costs.get(model_id).map(Vec::len)
    }

    pub fn max_layers(&self) -> usize {
        self.costs.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Cost of `layer` of `model_id` on `sa`. Panics on out-of-range
    /// indices; use [`CostTable::try_get`] for untrusted lookups.
    pub fn get(&self, model_id: usize, layer: usize, sa: usize) -> &LayerCost {
        &self.costs[model_id][layer][sa]
    }

    pub fn try_get(&self, model_id: usize, layer: usize, sa: usize) -> Option<&LayerCost> {
        self.costs.get(model_id)?.get(layer)?.get(sa)
    }

    pub fn layer_costs(&self, model_id: usize, layer: usize) -> &[LayerCost] {
        &self.costs[model_id][layer]
    }

    /// Sum over layers `from..` of the cheapest per-SA latency.
    pub fn min_remaining_latency(&self, model_id: usize, from: usize) -> Result<Cycles, CostError> {
        let layers = self.costs.get(model_id).ok_or(CostError::UnknownModel(model_id))?;
        Ok(layers
            .iter()
            .skip(from)
            .map(|per_sa| per_sa.iter().map(|c| c.cycles).min().unwrap_or(0))
            .sum())
    }
}

/// Contention-free latency of a whole job: layers run back to back, each on
/// its fastest SA.
pub fn min_job_latency(model_id: usize, table: &CostTable) -> Result<Cycles, CostError> {
    table.min_remaining_latency(model_id, 0)
}

pub fn load_cost_table(
    path: &Path,
    cfg: &MasConfig,
    zoo: &ModelZoo,
    allow_partial: bool,
) -> Result<CostTable, CostError> {
    let file = std::fs::File::open(path)?;
    CostTable::from_csv_reader(std::io::BufReader::new(file), cfg, zoo, allow_partial)
}
