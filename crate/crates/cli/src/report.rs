//! Result tables and the SVG charts drawn from them.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{write_file, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheduler: String,
    pub workload: String,
    pub qos_level: String,
    pub bandwidth: String,
    pub seed: u64,
    pub sla_rate: f64,
    pub misses: u64,
    pub energy_pj: f64,
    pub makespan: u64,
    pub runtime_ms: Option<f64>,
}

impl ResultRow {
    pub fn sort_key(&self) -> (&str, &str, &str, &str, u64) {
        (&self.scheduler, &self.workload, &self.qos_level, &self.bandwidth, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheduler: String,
    pub workload: String,
    pub qos_level: String,
    pub bandwidth: String,
    pub seed: u64,
    pub sla_rate: f64,
    pub normalized_sla: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadRow {
    pub hidden: usize,
    pub period_cycles: u64,
    pub invocations: u64,
    pub macs_per_step: u64,
    pub policy_pj: f64,
    pub workload_pj: f64,
    pub overhead_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: u64,
    pub mean_reward: f64,
    pub eval_sla_rate: Option<f64>,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_file(path, to_csv(rows)?)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    from_csv(&crate::error::read_file(path)?)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let bottom = HEIGHT - MARGIN;
    let _ = writeln!(s, r#"<line x1="{MARGIN}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="black"/>"#, WIDTH - MARGIN);
    let _ = writeln!(s, r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{bottom}" stroke="black"/>"#);
    s
}

fn legend(s: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let x = WIDTH - MARGIN - 110.0;
        let _ = writeln!(s, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/>"#, y - 9.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 14.0, escape(name));
    }
}

/// Scale for values in `[0, max]`; `max` defaults to 1.
fn y_of(value: f64, max: f64) -> f64 {
    let plot = HEIGHT - 2.0 * MARGIN;
    HEIGHT - MARGIN - plot * (value / max).clamp(0.0, 1.0)
}

fn unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in items {
        if !out.iter().any(|o| o == item) {
            out.push(item.to_string());
        }
    }
    out
}

/// Grouped bars of SLA rate: one group per scenario and seed, one bar per
/// scheduler. Each bar carries its CSV value in `data-value`.
pub fn bar_chart_svg(rows: &[ResultRow]) -> String {
    let mut s = svg_open("SLA satisfaction rate");
    let schedulers = unique(rows.iter().map(|r| r.scheduler.as_str()));
    let group_of = |r: &ResultRow| format!("{}/{}/B={}/s{}", r.workload, r.qos_level, r.bandwidth, r.seed);
    let groups: Vec<String> = {
        let mut g: Vec<String> = rows.iter().map(group_of).collect();
        g.sort();
        g.dedup();
        g
    };
    let plot_w = WIDTH - 2.0 * MARGIN - 120.0;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / schedulers.len().max(1) as f64;
    for (gi, group) in groups.iter().enumerate() {
        let gx = MARGIN + group_w * gi as f64 + group_w * 0.1;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            HEIGHT - MARGIN + 14.0,
            escape(group)
        );
        for row in rows.iter().filter(|r| &group_of(r) == group) {
            let si = schedulers.iter().position(|n| *n == row.scheduler).unwrap_or(0);
            let top = y_of(row.sla_rate, 1.0);
            let _ = writeln!(
                s,
                r#"<rect class="bar" x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}" data-scheduler="{}" data-value="{}"/>"#,
                gx + bar_w * si as f64,
                HEIGHT - MARGIN - top,
                PALETTE[si % PALETTE.len()],
                escape(&row.scheduler),
                row.sla_rate
            );
        }
    }
    legend(&mut s, &schedulers);
    s.push_str("</svg>\n");
    s
}

/// One polyline per series over a shared categorical x axis.
pub fn line_chart_svg(title: &str, x_labels: &[String], series: &[(String, Vec<f64>)], y_max: f64) -> String {
    let mut s = svg_open(title);
    let plot_w = WIDTH - 2.0 * MARGIN - 120.0;
    let step = if x_labels.len() > 1 { plot_w / (x_labels.len() - 1) as f64 } else { 0.0 };
    let x_of = |i: usize| MARGIN + 10.0 + step * i as f64;
    for (i, label) in x_labels.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, x_of(i), HEIGHT - MARGIN + 14.0, escape(label));
    }
    let y_max = if y_max > 0.0 && y_max.is_finite() { y_max } else { 1.0 };
    let _ = writeln!(s, r#"<text x="{}" y="{MARGIN}" text-anchor="end">{}</text>"#, MARGIN - 4.0, y_max);
    for (k, (name, ys)) in series.iter().enumerate() {
        let points: Vec<String> =
            ys.iter().enumerate().map(|(i, &y)| format!("{:.2},{:.2}", x_of(i), y_of(y, y_max))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{}" stroke-width="2" points="{}" data-series="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            points.join(" "),
            escape(name)
        );
    }
    let names: Vec<String> = series.iter().map(|(n, _)| n.clone()).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheduler: &str, seed: u64, sla: f64) -> ResultRow {
        ResultRow {
            scheduler: scheduler.into(),
            workload: "light".into(),
            qos_level: "medium".into(),
            bandwidth: "12.5".into(),
            seed,
            sla_rate: sla,
            misses: 3,
            energy_pj: 1.0e9 / 3.0,
            makespan: 77,
            runtime_ms: None,
        }
    }

    #[test]
    fn result_csv_round_trips() {
        let mut rows = vec![row("fcfs-h", 0, 0.1 + 0.2), row("herald", 1, 1.0)];
        rows[1].runtime_ms = Some(12.5);
        let text = to_csv(&rows).unwrap();
        assert!(text.starts_with(
            "scheduler,workload,qos_level,bandwidth,seed,sla_rate,misses,energy_pj,makespan,runtime_ms\n"
        ));
        assert_eq!(from_csv::<ResultRow>(&text).unwrap(), rows);
    }

    #[test]
    fn other_tables_round_trip() {
        let curves = vec![
            CurveRow { episode: 1, mean_reward: -0.25, eval_sla_rate: None },
            CurveRow { episode: 2, mean_reward: 1e-17, eval_sla_rate: Some(0.5) },
        ];
        assert_eq!(from_csv::<CurveRow>(&to_csv(&curves).unwrap()).unwrap(), curves);
        let o = vec![OverheadRow {
            hidden: 64,
            period_cycles: 10,
            invocations: 3,
            macs_per_step: 5,
            policy_pj: 2.5,
            workload_pj: 7.0,
            overhead_percent: 0.1,
        }];
        assert_eq!(from_csv::<OverheadRow>(&to_csv(&o).unwrap()).unwrap(), o);
    }

    #[test]
    fn bars_match_values() {
        let rows = vec![row("fcfs-h", 0, 0.25), row("prema-h", 0, 0.75)];
        let svg = bar_chart_svg(&rows);
        assert_eq!(svg.matches(r#"class="bar""#).count(), 2);
        assert!(svg.contains(r#"data-value="0.25""#));
        assert!(svg.contains(r#"data-value="0.75""#));
        // 0.75 of the 264-pixel plot height
        assert!(svg.contains(r#"height="198.00""#));
    }

    #[test]
    fn line_chart_has_one_polyline_per_series() {
        let svg = line_chart_svg(
            "t <&>",
            &["16".into(), "8".into()],
            &[("a".into(), vec![1.0, 0.5]), ("b".into(), vec![1.0, 1.0])],
            1.0,
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t &lt;&amp;&gt;"));
    }
}
