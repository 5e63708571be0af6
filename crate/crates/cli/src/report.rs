//! Sweep aggregation: group per-run records by axis value, compute summary
//! statistics, and render them as a CSV table, a console table, and two
//! small self-contained SVG plots (wall time scatter, success rate bars).

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::sweep::{RunRecord, FAILED_REASON};

/// Per-group summary. Means and the median ignore failed runs; the success
/// rate counts tolerance stops against all runs of the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub sweep_value: String,
    pub runs: u64,
    pub failed: u64,
    pub success_rate: f64,
    pub mean_err_m2: f64,
    pub median_err_m2: f64,
    pub mean_iterations: f64,
    pub mean_wall_s: f64,
    pub mean_classify_ms: f64,
    pub mean_cluster_ms: f64,
    pub mean_distance_ms: f64,
}

/// Group by sweep value in first-appearance order.
pub fn aggregate(records: &[RunRecord]) -> Vec<GroupStats> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.sweep_value.as_str()) {
            order.push(&r.sweep_value);
        }
    }
    order
        .into_iter()
        .map(|value| {
            let group: Vec<&RunRecord> =
                records.iter().filter(|r| r.sweep_value == value).collect();
            let ok: Vec<&&RunRecord> =
                group.iter().filter(|r| r.stop_reason != FAILED_REASON).collect();
            let n = ok.len().max(1) as f64;
            let mean = |f: &dyn Fn(&RunRecord) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / n;
            let mut errs: Vec<f64> = ok.iter().map(|r| r.final_err_m2).collect();
            errs.sort_by(|a, b| a.partial_cmp(b).expect("objective values are finite"));
            GroupStats {
                sweep_value: value.to_string(),
                runs: group.len() as u64,
                failed: (group.len() - ok.len()) as u64,
                success_rate: group.iter().filter(|r| r.stop_reason == "tolerance").count() as f64
                    / group.len() as f64,
                mean_err_m2: mean(&|r| r.final_err_m2),
                median_err_m2: median(&errs),
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_wall_s: mean(&|r| r.wall_time_s),
                mean_classify_ms: mean(&|r| r.mean_classify_ms),
                mean_cluster_ms: mean(&|r| r.mean_cluster_ms),
                mean_distance_ms: mean(&|r| r.mean_distance_ms),
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

pub fn write_report(stats: &[GroupStats], records: &[RunRecord], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let path = out_dir.join("group_stats.csv");
    let mut w = csv::Writer::from_path(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    for s in stats {
        w.serialize(s)?;
    }
    w.flush()?;

    std::fs::write(out_dir.join("scatter.svg"), scatter_svg(stats, records))?;
    std::fs::write(out_dir.join("success.svg"), success_svg(stats))?;
    Ok(())
}

pub fn render_table(stats: &[GroupStats]) -> String {
    let mut out = String::new();
    let wv = stats.iter().map(|s| s.sweep_value.len()).max().unwrap_or(5).max(5);
    let _ = writeln!(
        out,
        "{:<wv$}  {:>4}  {:>6}  {:>7}  {:>12}  {:>12}  {:>10}  {:>10}",
        "value", "runs", "failed", "success", "mean_err_m2", "median_err_m2", "mean_iters", "mean_wall_s",
    );
    for s in stats {
        let _ = writeln!(
            out,
            "{:<wv$}  {:>4}  {:>6}  {:>7.2}  {:>12.4e}  {:>12.4e}  {:>10.1}  {:>10.2}",
            s.sweep_value,
            s.runs,
            s.failed,
            s.success_rate,
            s.mean_err_m2,
            s.median_err_m2,
            s.mean_iterations,
            s.mean_wall_s,
        );
    }
    out
}

// Plot geometry shared by both SVGs.
const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 55.0;

struct Frame {
    groups: Vec<String>,
    y_max: f64,
}

impl Frame {
    fn x_center(&self, group: usize) -> f64 {
        let plot_w = W - LEFT - RIGHT;
        LEFT + (group as f64 + 0.5) * plot_w / self.groups.len() as f64
    }

    fn y(&self, value: f64) -> f64 {
        let plot_h = H - TOP - BOTTOM;
        H - BOTTOM - (value / self.y_max).clamp(0.0, 1.0) * plot_h
    }

    /// Axes, y ticks and x group labels.
    fn chrome(&self, svg: &mut String, y_label: &str) {
        let _ = write!(
            svg,
            r#"<rect width="{W}" height="{H}" fill="white"/>
<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{y0}" stroke="black"/>
<line x1="{LEFT}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>
"#,
            y0 = H - BOTTOM,
            x1 = W - RIGHT,
        );
        for i in 0..=4 {
            let v = self.y_max * i as f64 / 4.0;
            let y = self.y(v);
            let _ = write!(
                svg,
                r#"<line x1="{x0}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>
<text x="{xt}" y="{yt}" font-size="11" text-anchor="end" font-family="sans-serif">{v:.3}</text>
"#,
                x0 = LEFT - 4.0,
                xt = LEFT - 7.0,
                yt = y + 4.0,
            );
        }
        for (i, g) in self.groups.iter().enumerate() {
            let _ = write!(
                svg,
                r#"<text x="{x}" y="{y}" font-size="11" text-anchor="middle" font-family="sans-serif">{g}</text>
"#,
                x = self.x_center(i),
                y = H - BOTTOM + 16.0,
            );
        }
        let _ = write!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 {x} {y})">{y_label}</text>
"#,
            x = 16.0,
            y = (TOP + H - BOTTOM) / 2.0,
        );
    }
}

/// Wall time of every run, one column per group, group means as bars.
fn scatter_svg(stats: &[GroupStats], records: &[RunRecord]) -> String {
    let groups: Vec<String> = stats.iter().map(|s| s.sweep_value.clone()).collect();
    let y_max = records
        .iter()
        .filter(|r| r.stop_reason != FAILED_REASON)
        .map(|r| r.wall_time_s)
        .fold(0.0_f64, f64::max)
        .max(1e-9)
        * 1.05;
    let frame = Frame { groups, y_max };

    let mut svg = svg_open();
    frame.chrome(&mut svg, "wall time (s)");
    for (i, s) in stats.iter().enumerate() {
        let x = frame.x_center(i);
        let y = frame.y(s.mean_wall_s);
        let _ = write!(
            svg,
            r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#444" stroke-width="2"/>
"##,
            x0 = x - 14.0,
            x1 = x + 14.0,
        );
    }
    for r in records.iter().filter(|r| r.stop_reason != FAILED_REASON) {
        let Some(i) = frame.groups.iter().position(|g| *g == r.sweep_value) else {
            continue;
        };
        let _ = write!(
            svg,
            r##"<circle cx="{x}" cy="{y}" r="3.5" fill="#2a6fb0" fill-opacity="0.7"/>
"##,
            x = frame.x_center(i),
            y = frame.y(r.wall_time_s),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-group fraction of runs that stopped on tolerance.
fn success_svg(stats: &[GroupStats]) -> String {
    let groups: Vec<String> = stats.iter().map(|s| s.sweep_value.clone()).collect();
    let frame = Frame { groups, y_max: 1.0 };

    let mut svg = svg_open();
    frame.chrome(&mut svg, "success rate");
    let bar_w = ((W - LEFT - RIGHT) / stats.len() as f64 * 0.6).min(60.0);
    for (i, s) in stats.iter().enumerate() {
        let x = frame.x_center(i);
        let y = frame.y(s.success_rate);
        let _ = write!(
            svg,
            r##"<rect x="{rx}" y="{y}" width="{bar_w}" height="{h}" fill="#3c915c"/>
<text x="{x}" y="{ty}" font-size="11" text-anchor="middle" font-family="sans-serif">{v:.2}</text>
"##,
            rx = x - bar_w / 2.0,
            h = (H - BOTTOM - y).max(0.0),
            ty = y - 5.0,
            v = s.success_rate,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn svg_open() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(value: &str, err: f64, wall: f64, reason: &str) -> RunRecord {
        RunRecord {
            sweep_value: value.into(),
            seed: 0,
            final_err_m2: err,
            iterations: 10,
            evaluations: 92,
            wall_time_s: wall,
            mean_classify_ms: 5.0,
            mean_cluster_ms: 1.0,
            mean_distance_ms: 2.0,
            stop_reason: reason.into(),
            mem_estimate_bytes: 0,
            mem_rss_bytes: 0,
        }
    }

    #[test]
    fn groups_keep_first_appearance_order_and_stats() {
        let records = vec![
            record("b", 4.0, 2.0, "tolerance"),
            record("a", 1.0, 1.0, "time_limit"),
            record("b", 2.0, 4.0, "tolerance"),
            record("b", 3.0, 3.0, "failed"),
        ];
        let stats = aggregate(&records);
        assert_eq!(stats.len(), 2);
        assert_eq!(stats[0].sweep_value, "b");
        assert_eq!(stats[0].runs, 3);
        assert_eq!(stats[0].failed, 1);
        // Failed runs count against the success rate but not the means.
        assert!((stats[0].success_rate - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(stats[0].mean_err_m2, 3.0);
        assert_eq!(stats[0].median_err_m2, 3.0);
        assert_eq!(stats[0].mean_wall_s, 3.0);
        assert_eq!(stats[1].sweep_value, "a");
        assert_eq!(stats[1].success_rate, 0.0);
    }

    #[test]
    fn median_of_even_group_averages_the_middle() {
        let records = vec![
            record("a", 1.0, 1.0, "tolerance"),
            record("a", 10.0, 1.0, "tolerance"),
            record("a", 2.0, 1.0, "tolerance"),
            record("a", 5.0, 1.0, "tolerance"),
        ];
        let stats = aggregate(&records);
        assert_eq!(stats[0].median_err_m2, 3.5);
    }

    #[test]
    fn all_failed_group_reports_zero_stats() {
        let records = vec![record("a", 0.0, 0.0, "failed")];
        let stats = aggregate(&records);
        assert_eq!(stats[0].failed, 1);
        assert_eq!(stats[0].success_rate, 0.0);
        assert_eq!(stats[0].mean_err_m2, 0.0);
    }

    #[test]
    fn svgs_are_well_formed_enough() {
        let records =
            vec![record("a", 1.0, 2.0, "tolerance"), record("b", 1.0, 3.0, "time_limit")];
        let stats = aggregate(&records);
        let scatter = scatter_svg(&stats, &records);
        assert!(scatter.starts_with("<svg"));
        assert!(scatter.trim_end().ends_with("</svg>"));
        assert_eq!(scatter.matches("<circle").count(), 2);
        let success = success_svg(&stats);
        assert_eq!(success.matches("<rect").count(), 3); // background + 2 bars
        assert!(success.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn table_lists_one_row_per_group() {
        let records =
            vec![record("16x12x12", 1.0, 2.0, "tolerance"), record("24x18x18", 1.0, 3.0, "tolerance")];
        let table = render_table(&aggregate(&records));
        assert_eq!(table.lines().count(), 3);
        assert!(table.contains("16x12x12"));
    }
}
