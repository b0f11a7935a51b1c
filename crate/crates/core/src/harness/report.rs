use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    ave_acc, best_acc, summarize_windows, BaselineResult, ExplorationConfig, ExplorationRun,
    HarnessError, StepRecord, WindowStat, DEFAULT_WINDOW,
};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SVG_FILE: &str = "accuracy.svg";

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    #[serde(rename = "t")]
    pub step: usize,
    pub acc: f64,
    pub n_selected: usize,
    pub reward_sum: f64,
    pub advised_flips: usize,
}

impl From<&StepRecord> for MetricsRow {
    fn from(r: &StepRecord) -> Self {
        MetricsRow {
            step: r.step,
            acc: r.acc,
            n_selected: r.n_selected,
            reward_sum: r.reward_sum(),
            advised_flips: r.advised_flip_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExplorationConfig>,
    pub steps: usize,
    pub best_acc: f64,
    pub ave_acc: f64,
    /// Step of the first occurrence of the best accuracy.
    pub best_step: usize,
    #[serde(default)]
    pub best_subset: Vec<usize>,
    pub windows: Vec<WindowStat>,
    /// Number of steps that received a given number of advised flips.
    pub flips_histogram: BTreeMap<usize, usize>,
    #[serde(default)]
    pub baselines: Vec<BaselineResult>,
}

impl RunSummary {
    pub fn from_rows(rows: &[MetricsRow]) -> Result<Self, HarnessError> {
        let acc: Vec<f64> = rows.iter().map(|r| r.acc).collect();
        let best = best_acc(&acc, 0, acc.len())?;
        let mut flips_histogram = BTreeMap::new();
        for r in rows {
            *flips_histogram.entry(r.advised_flips).or_insert(0) += 1;
        }
        Ok(RunSummary {
            dataset: None,
            config: None,
            steps: rows.len(),
            best_acc: best,
            ave_acc: ave_acc(&acc, 0, acc.len())?,
            best_step: acc.iter().position(|&a| a == best).unwrap_or(0),
            best_subset: Vec::new(),
            windows: summarize_windows(&acc, DEFAULT_WINDOW)?,
            flips_histogram,
            baselines: Vec::new(),
        })
    }

    pub fn from_run(run: &ExplorationRun) -> Result<Self, HarnessError> {
        let rows: Vec<MetricsRow> = run.records.iter().map(MetricsRow::from).collect();
        let mut s = Self::from_rows(&rows)?;
        s.config = Some(run.config.clone());
        s.best_subset = crate::selected_indices(&run.records[s.best_step].actions);
        Ok(s)
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_metrics_csv(records: &[StepRecord], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(io(path))?;
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(MetricsRow::from(r))?;
    }
    w.flush().map_err(io(path))?;
    Ok(())
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>, HarnessError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io(path))?;
    let rows = csv::Reader::from_reader(file)
        .deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()?;
    if rows.is_empty() {
        return Err(HarnessError::Metrics {
            path: path.to_path_buf(),
            message: "no rows".into(),
        });
    }
    Ok(rows)
}

/// Accuracy per step with the running best, as a standalone SVG document.
pub fn render_svg(rows: &[MetricsRow], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 320.0;
    const PAD: f64 = 40.0;
    let n = rows.len().max(2) as f64 - 1.0;
    let lo = rows.iter().map(|r| r.acc).fold(1.0, f64::min).min(0.5);
    let x = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / n;
    let y = |a: f64| H - PAD - (H - 2.0 * PAD) * (a - lo) / (1.0 - lo).max(1e-9);
    let mut acc_pts = String::new();
    let mut best_pts = String::new();
    let mut best = f64::NEG_INFINITY;
    for (i, r) in rows.iter().enumerate() {
        best = best.max(r.acc);
        let _ = write!(acc_pts, "{:.1},{:.1} ", x(i), y(r.acc));
        let _ = write!(best_pts, "{:.1},{:.1} ", x(i), y(best));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        out,
        r#"<text x="4" y="{:.1}" font-family="sans-serif" font-size="10">{lo:.2}</text><text x="4" y="{:.1}" font-family="sans-serif" font-size="10">1.00</text>"#,
        y(lo),
        y(1.0)
    );
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#9ab" stroke-width="1" points="{}"/>"##,
        acc_pts.trim_end()
    );
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#c33" stroke-width="2" points="{}"/>"##,
        best_pts.trim_end()
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `metrics.csv`, `summary.json` and optionally `accuracy.svg` into `dir`.
pub fn write_run(
    dir: impl AsRef<Path>,
    run: &ExplorationRun,
    dataset_name: Option<&str>,
    baselines: Vec<BaselineResult>,
    svg: bool,
) -> Result<RunSummary, HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io(dir))?;
    write_metrics_csv(&run.records, dir.join(METRICS_FILE))?;
    let mut summary = RunSummary::from_run(run)?;
    summary.dataset = dataset_name.map(str::to_owned);
    summary.baselines = baselines;
    write_summary(dir, &summary)?;
    if svg {
        let rows: Vec<MetricsRow> = run.records.iter().map(MetricsRow::from).collect();
        let path = dir.join(SVG_FILE);
        fs::write(&path, render_svg(&rows, dataset_name.unwrap_or("exploration"))).map_err(io(&path))?;
    }
    Ok(summary)
}

pub fn write_summary(dir: &Path, summary: &RunSummary) -> Result<PathBuf, HarnessError> {
    let path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(summary)?;
    fs::write(&path, json + "\n").map_err(io(&path))?;
    Ok(path)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary, HarnessError> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(io(&path))?;
    Ok(serde_json::from_str(&text)?)
}
