//! Experiment harnesses: threshold versus rigidity on Erdős–Rényi graphs, and
//! whether graphical lasso selects a model the same data can fit. Records are
//! written as JSONL or CSV, and per-cell fractions can be drawn as an SVG.
//!
//! Every record carries its own seed, derived from the master seed and the
//! record coordinates, so a single record can be reproduced in isolation.
//! Records are sorted before being returned, which makes the output
//! independent of thread scheduling.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, Graph};
use crate::mlt::{self, csv_line, BoundsOptions, EstimateOptions, EstimatedMlt, RankStats, SCHEMA};
use crate::models::graphical_subspace;
use crate::seed;
use crate::solver::{fit_mle, glasso, GlassoOptions, MleOptions, MleVerdict, SampleCovariance};

/// Largest `n` for which the ER harness runs the Monte Carlo estimator.
pub const ER_EMPIRICAL_MAX_N: usize = 12;

fn schema() -> String {
    SCHEMA.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErRecord {
    #[serde(default = "schema")]
    pub schema: String,
    pub n: usize,
    pub c: f64,
    pub trial: usize,
    pub seed: u64,
    pub edges: usize,
    pub omega: usize,
    pub buhl_upper: usize,
    pub rigidity_d: usize,
    pub rigidity_upper: usize,
    /// Edgeless graph: the independence dimension is taken as 0.
    pub degenerate: bool,
    /// Bounds only; the estimator was skipped for size.
    pub bounds_only: bool,
    pub estimated_mlt: Option<EstimatedMlt>,
    /// `estimated_mlt == rigidity_d + 1`, when an exact estimate exists.
    pub agree: Option<bool>,
    pub sandwich: Option<bool>,
    pub per_rank: Vec<RankStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlassoRecord {
    #[serde(default = "schema")]
    pub schema: String,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub trial: usize,
    pub seed: u64,
    pub rank_s: usize,
    pub selected_edges: usize,
    pub omega: usize,
    pub buhl_upper: usize,
    pub rigidity_upper: usize,
    /// `rigidity_upper <= rank(S)`.
    pub fits_same_data: bool,
    /// Direct MLE existence on the selected model with the same `S`, when run.
    pub confirmed: Option<bool>,
    pub glasso_converged: bool,
}

#[derive(Clone, Debug)]
pub struct ErOptions {
    /// Samples per rank for the threshold estimator.
    pub mlt_trials: usize,
    pub empirical_max_n: usize,
    pub estimate: EstimateOptions,
}

impl Default for ErOptions {
    fn default() -> Self {
        ErOptions {
            mlt_trials: 20,
            empirical_max_n: ER_EMPIRICAL_MAX_N,
            estimate: EstimateOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlassoExpOptions {
    /// Confirm `fits_same_data` with a direct MLE fit.
    pub confirm: bool,
    pub glasso: GlassoOptions,
    pub mle: MleOptions,
}

impl Default for GlassoExpOptions {
    fn default() -> Self {
        GlassoExpOptions {
            confirm: true,
            glasso: GlassoOptions::default(),
            mle: MleOptions::default(),
        }
    }
}

/// Runs `trials_per_cell` graphs `G(n, c/n)` for every `(n, c)` pair.
pub fn er_experiment(
    n_list: &[usize],
    c_list: &[f64],
    trials_per_cell: usize,
    master_seed: u64,
    opts: &ErOptions,
) -> Result<Vec<ErRecord>> {
    for &n in n_list {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        for &c in c_list {
            if !(c >= 0.0 && c < n as f64) {
                return Err(Error::Domain(format!("need 0 <= c < n, got c = {c}, n = {n}")));
            }
        }
    }
    let cells: Vec<(usize, f64, usize)> = n_list
        .iter()
        .flat_map(|&n| {
            c_list
                .iter()
                .flat_map(move |&c| (0..trials_per_cell).map(move |t| (n, c, t)))
        })
        .collect();
    let mut records: Vec<ErRecord> = cells
        .into_par_iter()
        .map(|(n, c, trial)| er_record(n, c, trial, master_seed, opts))
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| {
        (a.n, a.c, a.trial)
            .partial_cmp(&(b.n, b.c, b.trial))
            .expect("finite c")
    });
    Ok(records)
}

fn er_record(n: usize, c: f64, trial: usize, master_seed: u64, opts: &ErOptions) -> Result<ErRecord> {
    let rec_seed = seed::mix(master_seed, &[n as u64, c.to_bits(), trial as u64]);
    let g = graph::erdos_renyi(n, c / n as f64, seed::mix(rec_seed, &[0]));
    let bounds_opts = BoundsOptions {
        seed: seed::mix(rec_seed, &[1]),
    };
    let degenerate = g.num_edges() == 0;
    let bounds_only = n > opts.empirical_max_n;
    let report = if degenerate {
        let mut r = mlt::mlt_bounds(&g, &bounds_opts);
        r.estimated_mlt = Some(EstimatedMlt::Exact(1));
        r
    } else if bounds_only {
        mlt::mlt_bounds(&g, &bounds_opts)
    } else {
        mlt::estimate_graph(
            &g,
            opts.mlt_trials,
            seed::mix(rec_seed, &[2]),
            &bounds_opts,
            &opts.estimate,
        )?
    };
    let rigidity_d = report.rigidity_d.expect("bounds filled");
    let agree = report
        .estimated_mlt
        .and_then(EstimatedMlt::exact)
        .map(|e| e == rigidity_d + 1);
    Ok(ErRecord {
        schema: schema(),
        n,
        c,
        trial,
        seed: rec_seed,
        edges: g.num_edges(),
        omega: report.omega.expect("bounds filled"),
        buhl_upper: report.buhl_upper.expect("bounds filled"),
        rigidity_d,
        rigidity_upper: report.rigidity_upper.expect("bounds filled"),
        degenerate,
        bounds_only,
        sandwich: report.sandwich_holds(),
        estimated_mlt: report.estimated_mlt,
        agree,
        per_rank: report.per_rank,
    })
}

/// Graphical lasso on `trials` centered Gaussian samples of size `d`, one
/// fit per `alpha`. The lasso sees `S / d`; existence questions use `S`.
pub fn glasso_experiment(
    n: usize,
    d: usize,
    alphas: &[f64],
    trials: usize,
    master_seed: u64,
    opts: &GlassoExpOptions,
) -> Result<Vec<GlassoRecord>> {
    if d < 2 {
        return Err(Error::Domain("need d >= 2 so the centered S is nonzero".into()));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::Domain(format!("alpha must be positive, got {a}")));
    }
    let per_trial: Vec<Vec<GlassoRecord>> = (0..trials)
        .into_par_iter()
        .map(|trial| glasso_trial(n, d, alphas, trial, master_seed, opts))
        .collect::<Result<_>>()?;
    let mut records: Vec<GlassoRecord> = per_trial.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        (a.alpha, a.trial)
            .partial_cmp(&(b.alpha, b.trial))
            .expect("finite alpha")
    });
    Ok(records)
}

fn glasso_trial(
    n: usize,
    d: usize,
    alphas: &[f64],
    trial: usize,
    master_seed: u64,
    opts: &GlassoExpOptions,
) -> Result<Vec<GlassoRecord>> {
    let rec_seed = seed::mix(master_seed, &[n as u64, d as u64, trial as u64]);
    let data = crate::solver::gaussian_sample(n, d, &mut seed::rng(rec_seed));
    let s = crate::solver::sample_covariance(&data, true)?;
    let s_lasso = s.scaled(1.0 / d as f64);
    alphas
        .iter()
        .map(|&alpha| {
            let fit = glasso(&s_lasso, alpha, &opts.glasso)?;
            let bounds = mlt::mlt_bounds(
                &fit.selected,
                &BoundsOptions {
                    seed: seed::mix(rec_seed, &[alpha.to_bits()]),
                },
            );
            let rigidity_upper = bounds.rigidity_upper.expect("bounds filled");
            let confirmed = if opts.confirm {
                Some(mle_exists(&fit.selected, &s, &opts.mle)?)
            } else {
                None
            };
            Ok(GlassoRecord {
                schema: schema(),
                n,
                d,
                alpha,
                trial,
                seed: rec_seed,
                rank_s: s.rank(),
                selected_edges: fit.selected.num_edges(),
                omega: bounds.omega.expect("bounds filled"),
                buhl_upper: bounds.buhl_upper.expect("bounds filled"),
                rigidity_upper,
                fits_same_data: rigidity_upper <= s.rank(),
                confirmed,
                glasso_converged: fit.converged,
            })
        })
        .collect()
}

fn mle_exists(g: &Graph, s: &SampleCovariance, opts: &MleOptions) -> Result<bool> {
    Ok(fit_mle(&graphical_subspace(g), s, opts)?.verdict == MleVerdict::Exists)
}

/// Wilson score interval at 95% for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = n as f64;
    let p = k as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Aggregate of one cell: a fraction with its Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub series: String,
    pub x: f64,
    /// Records that entered the fraction.
    pub count: usize,
    pub hits: usize,
    pub fraction: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CellSummary {
    fn new(series: String, x: f64, hits: usize, count: usize) -> Self {
        let (lo, hi) = wilson_interval(hits, count);
        CellSummary {
            series,
            x,
            count,
            hits,
            fraction: if count == 0 { f64::NAN } else { hits as f64 / count as f64 },
            lo,
            hi,
        }
    }
}

/// Records that can be written as reports and summarized per cell.
pub trait Record: Serialize + DeserializeOwned + Sized {
    fn csv_header() -> &'static str;
    fn csv_row(&self) -> String;
    fn summarize(records: &[Self]) -> Vec<CellSummary>;
    /// Axis labels for the summary plot.
    fn axes() -> (&'static str, &'static str);
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Groups by `(series, x)` in first-seen order after sorting by key.
fn group<R>(records: &[R], key: impl Fn(&R) -> (String, f64), hit: impl Fn(&R) -> Option<bool>) -> Vec<CellSummary> {
    let mut cells: Vec<(String, f64, usize, usize)> = Vec::new();
    for r in records {
        let (series, x) = key(r);
        let idx = match cells.iter().position(|(s, cx, _, _)| *s == series && *cx == x) {
            Some(i) => i,
            None => {
                cells.push((series, x, 0, 0));
                cells.len() - 1
            }
        };
        if let Some(h) = hit(r) {
            cells[idx].3 += 1;
            if h {
                cells[idx].2 += 1;
            }
        }
    }
    cells.sort_by(|a, b| (&a.0, a.1).partial_cmp(&(&b.0, b.1)).expect("finite keys"));
    cells
        .into_iter()
        .map(|(s, x, hits, count)| CellSummary::new(s, x, hits, count))
        .collect()
}

impl Record for ErRecord {
    fn csv_header() -> &'static str {
        "schema,n,c,trial,seed,edges,omega,buhl_upper,rigidity_d,rigidity_upper,degenerate,bounds_only,estimated_mlt,agree,sandwich,per_rank"
    }

    fn csv_row(&self) -> String {
        let ranks: Vec<String> = self
            .per_rank
            .iter()
            .map(|r| format!("{}:{}/{}", r.d, r.successes, r.trials))
            .collect();
        csv_line(&[
            self.schema.clone(),
            self.n.to_string(),
            self.c.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
            self.edges.to_string(),
            self.omega.to_string(),
            self.buhl_upper.to_string(),
            self.rigidity_d.to_string(),
            self.rigidity_upper.to_string(),
            self.degenerate.to_string(),
            self.bounds_only.to_string(),
            opt(self.estimated_mlt),
            opt(self.agree),
            opt(self.sandwich),
            ranks.join(";"),
        ])
    }

    /// Agreement fraction per `(n, c)`, over records with an exact estimate.
    fn summarize(records: &[Self]) -> Vec<CellSummary> {
        group(records, |r| (format!("n={}", r.n), r.c), |r| r.agree)
    }

    fn axes() -> (&'static str, &'static str) {
        ("c (edge probability c/n)", "fraction with MLT = d + 1")
    }
}

impl Record for GlassoRecord {
    fn csv_header() -> &'static str {
        "schema,n,d,alpha,trial,seed,rank_s,selected_edges,omega,buhl_upper,rigidity_upper,fits_same_data,confirmed,glasso_converged"
    }

    fn csv_row(&self) -> String {
        csv_line(&[
            self.schema.clone(),
            self.n.to_string(),
            self.d.to_string(),
            self.alpha.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
            self.rank_s.to_string(),
            self.selected_edges.to_string(),
            self.omega.to_string(),
            self.buhl_upper.to_string(),
            self.rigidity_upper.to_string(),
            self.fits_same_data.to_string(),
            opt(self.confirmed),
            self.glasso_converged.to_string(),
        ])
    }

    /// Fraction of fits with `fits_same_data` per `(n, d, alpha)`.
    fn summarize(records: &[Self]) -> Vec<CellSummary> {
        group(
            records,
            |r| (format!("n={},d={}", r.n, r.d), r.alpha),
            |r| Some(r.fits_same_data),
        )
    }

    fn axes() -> (&'static str, &'static str) {
        ("alpha", "fraction fitting the same data")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Jsonl,
    Csv,
}

/// Serializes records as JSONL (one object per line) or CSV (header plus one
/// row per record; an empty list gives the header alone).
pub fn render_report<R: Record>(records: &[R], format: ReportFormat) -> Result<String> {
    let mut out = String::new();
    match format {
        ReportFormat::Jsonl => {
            for r in records {
                out.push_str(&serde_json::to_string(r)?);
                out.push('\n');
            }
        }
        ReportFormat::Csv => {
            out.push_str(R::csv_header());
            out.push('\n');
            for r in records {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn write_report<R: Record>(records: &[R], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(records, format)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads a JSONL report back; blank lines are skipped.
pub fn read_jsonl<R: Record>(path: &Path) -> Result<Vec<R>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(idx + 1, e.to_string()))?);
    }
    Ok(out)
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG of the per-cell fractions with Wilson error bars, one series per
/// remaining parameter combination.
pub fn render_plot(cells: &[CellSummary], x_label: &str, y_label: &str) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::Precondition("nothing to plot: no records".into()));
    }
    let (mut xmin, mut xmax) = cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| (a.min(c.x), b.max(c.x)));
    if xmin == xmax {
        xmin -= 0.5;
        xmax += 0.5;
    }
    let pad = 0.05 * (xmax - xmin);
    let (xmin, xmax) = (xmin - pad, xmax + pad);
    let inner_w = PLOT_W - MARGIN_L - MARGIN_R;
    let inner_h = PLOT_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - xmin) / (xmax - xmin) * inner_w;
    let sy = |y: f64| MARGIN_T + (1.0 - y) * inner_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN_L, PLOT_W - MARGIN_R, MARGIN_T, PLOT_H - MARGIN_B);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let mut xs: Vec<f64> = cells.iter().map(|c| c.x).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    xs.dedup();
    for &x in &xs {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r#"<line class="tick" x1="{px}" y1="{y1}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" text-anchor="middle">{x}</text>"#,
            y1 + 5.0,
            y1 + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        PLOT_H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );

    let mut series: Vec<&str> = Vec::new();
    for c in cells {
        if !series.contains(&c.series.as_str()) {
            series.push(&c.series);
        }
    }
    for (k, name) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<&CellSummary> = cells
            .iter()
            .filter(|c| c.series == *name && c.count > 0)
            .collect();
        let path: Vec<String> = pts
            .iter()
            .map(|c| format!("{:.2},{:.2}", sx(c.x), sy(c.fraction)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}"/>"#,
                path.join(" ")
            );
        }
        for c in &pts {
            let px = sx(c.x);
            let _ = writeln!(
                svg,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/><circle cx="{px:.2}" cy="{:.2}" r="3.5" fill="{color}"><title>{} x={}: {}/{}</title></circle>"#,
                sy(c.lo),
                sy(c.hi),
                sy(c.fraction),
                escape(name),
                c.x,
                c.hits,
                c.count
            );
        }
        let ly = MARGIN_T + 10.0 + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            x1 + 15.0,
            ly - 9.0,
            x1 + 30.0,
            ly,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn plot_summary<R: Record>(records: &[R], path: &Path) -> Result<()> {
    let (xl, yl) = R::axes();
    let svg = render_plot(&R::summarize(records), xl, yl)?;
    std::fs::write(path, svg)?;
    Ok(())
}
