//! Maximum likelihood thresholds: combinatorial and rigidity bounds, closed
//! forms for generic linear concentration and directed models, and the
//! Monte Carlo estimator.
//!
//! For a graph `G` with clique number `omega`, treewidth `tau`, and smallest
//! `d` such that `G` is `d`-independent, the threshold satisfies
//! `omega <= MLT <= min(tau + 1, d + 1)`.
//!
//! The estimator draws `S = X X^T` with `X` an `n x d` standard normal sample
//! for each rank `d` and counts how often the MLE exists. The threshold is a
//! statement about almost all `S`, so a rank counts only when every trial
//! succeeds; below the threshold failure may have probability strictly
//! between 0 and 1, and the per-rank rates are reported as observed.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{self, Digraph, Graph, TreewidthMode, EXACT_TREEWIDTH_MAX_N};
use crate::models::{graphical_subspace, LinearSubspaceModel};
use crate::rigidity;
use crate::seed;
use crate::solver::{
    completion_feasible, fit_mle, CompletionVerdict, MleOptions, MleVerdict, SampleCovariance,
};

pub const SCHEMA: &str = "mlt-lab/1";
pub const DEFAULT_TRIALS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatedMlt {
    Exact(usize),
    /// No rank up to `n` had all trials succeed; the value is a lower bound.
    AtLeast(usize),
    Undetermined,
}

impl EstimatedMlt {
    pub fn exact(self) -> Option<usize> {
        match self {
            EstimatedMlt::Exact(k) => Some(k),
            _ => None,
        }
    }
}

impl std::fmt::Display for EstimatedMlt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatedMlt::Exact(k) => write!(f, "{k}"),
            EstimatedMlt::AtLeast(k) => write!(f, ">={k}"),
            EstimatedMlt::Undetermined => write!(f, "undetermined"),
        }
    }
}

/// Serialized as an integer, `">=k"`, or `"undetermined"`.
impl Serialize for EstimatedMlt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EstimatedMlt::Exact(k) => s.serialize_u64(*k as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl std::str::FromStr for EstimatedMlt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "undetermined" {
            return Ok(EstimatedMlt::Undetermined);
        }
        let bad = || Error::Domain(format!("invalid threshold estimate '{s}'"));
        match s.strip_prefix(">=") {
            Some(k) => k.parse().map(EstimatedMlt::AtLeast).map_err(|_| bad()),
            None => s.parse().map(EstimatedMlt::Exact).map_err(|_| bad()),
        }
    }
}

impl<'de> Deserialize<'de> for EstimatedMlt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => Ok(EstimatedMlt::Exact(k)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankStatus {
    AllSuccess,
    Partial,
    /// Unresolved instances or decider disagreements exceeded the budget.
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankStats {
    pub d: usize,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    /// Instances still marginal or undetermined after the resample budget.
    pub marginals: usize,
    /// Hard contradictions between the MLE solver and the completion checker.
    pub disagreements: usize,
    /// Fresh-seed resamples triggered by marginal instances.
    pub resamples: usize,
    /// Reduced-size run above the first all-success rank.
    pub spot_check: bool,
    pub status: RankStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct MltReport {
    pub schema: &'static str,
    pub id: String,
    pub n: usize,
    pub edges: Option<usize>,
    pub omega: Option<usize>,
    pub buhl_upper: Option<usize>,
    /// True when `buhl_upper` comes from the min-fill cover.
    pub buhl_heuristic: bool,
    /// Smallest independence dimension; 0 for edgeless graphs.
    pub rigidity_d: Option<usize>,
    pub rigidity_upper: Option<usize>,
    pub per_rank: Vec<RankStats>,
    pub estimated_mlt: Option<EstimatedMlt>,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl MltReport {
    fn new(id: String, n: usize, seed: u64) -> Self {
        MltReport {
            schema: SCHEMA,
            id,
            n,
            edges: None,
            omega: None,
            buhl_upper: None,
            buhl_heuristic: false,
            rigidity_d: None,
            rigidity_upper: None,
            per_rank: Vec::new(),
            estimated_mlt: None,
            seed,
            notes: Vec::new(),
        }
    }

    /// `min(buhl_upper, rigidity_upper)` when both are known.
    pub fn upper_bound(&self) -> Option<usize> {
        match (self.buhl_upper, self.rigidity_upper) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// `omega <= estimate <= min(buhl_upper, rigidity_upper)`; `None` when the
    /// estimate is not an exact value or the bounds are missing.
    pub fn sandwich_holds(&self) -> Option<bool> {
        let est = self.estimated_mlt?.exact()?;
        let lo = self.omega?;
        let hi = self.upper_bound()?;
        Some(lo <= est && est <= hi)
    }

    pub fn rank(&self, d: usize) -> Option<&RankStats> {
        self.per_rank.iter().find(|r| r.d == d)
    }

    pub fn csv_header() -> &'static str {
        "schema,id,n,edges,omega,buhl_upper,buhl_heuristic,rigidity_d,rigidity_upper,estimated_mlt,seed,per_rank"
    }

    /// One CSV line; `per_rank` is `d:successes/trials` joined by `;`.
    pub fn csv_row(&self) -> String {
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let ranks: Vec<String> = self
            .per_rank
            .iter()
            .map(|r| format!("{}:{}/{}", r.d, r.successes, r.trials))
            .collect();
        csv_line(&[
            self.schema.to_string(),
            self.id.clone(),
            self.n.to_string(),
            opt(self.edges),
            opt(self.omega),
            opt(self.buhl_upper),
            self.buhl_heuristic.to_string(),
            opt(self.rigidity_d),
            opt(self.rigidity_upper),
            self.estimated_mlt.map(|e| e.to_string()).unwrap_or_default(),
            self.seed.to_string(),
            ranks.join(";"),
        ])
    }
}

/// One CSV record, quoted where needed, without the trailing newline.
pub(crate) fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    let mut out = String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 fields");
    out.pop();
    out
}

#[derive(Clone, Debug)]
pub struct BoundsOptions {
    /// Seed for the rigidity placements.
    pub seed: u64,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions {
            seed: seed::DEFAULT_SEED,
        }
    }
}

/// Clique number, treewidth bound and rigidity bound of a graph.
pub fn mlt_bounds(g: &Graph, opts: &BoundsOptions) -> MltReport {
    let mut report = MltReport::new(format!("graph(n={},m={})", g.n(), g.num_edges()), g.n(), opts.seed);
    fill_bounds(&mut report, g, opts);
    report
}

fn fill_bounds(report: &mut MltReport, g: &Graph, opts: &BoundsOptions) {
    report.edges = Some(g.num_edges());
    report.omega = Some(graph::clique_number(g));
    let mode = if g.n() <= EXACT_TREEWIDTH_MAX_N {
        TreewidthMode::Exact
    } else {
        TreewidthMode::Heuristic
    };
    let tw = graph::treewidth(g, mode).expect("mode chosen within capability");
    report.buhl_upper = Some(tw.width + 1);
    report.buhl_heuristic = !tw.exact;
    if !tw.exact {
        report
            .notes
            .push("buhl_upper from the min-fill chordal cover (upper bound only)".into());
    }
    match rigidity::min_independence_dim(g, opts.seed) {
        Ok(d) => {
            report.rigidity_d = Some(d);
            report.rigidity_upper = Some(d + 1);
        }
        Err(_) => {
            report.rigidity_d = Some(0);
            report.rigidity_upper = Some(1);
            report
                .notes
                .push("edgeless graph: independence dimension taken as 0 (diagonal model)".into());
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimateOptions {
    pub mle: MleOptions,
    /// Run the completion checker alongside the MLE solver (graphical models).
    pub cross_check: bool,
    /// Fresh-seed retries per marginal instance.
    pub marginal_resamples: usize,
    /// Largest tolerated fraction of unresolved or contradictory instances.
    pub undetermined_budget: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            mle: MleOptions::default(),
            cross_check: true,
            marginal_resamples: 3,
            undetermined_budget: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialOutcome {
    Success,
    Failure,
    Marginal,
    Disagreement,
}

/// Existence decision for one `S`, cross-checked on graphical models.
pub fn decide(
    model: &LinearSubspaceModel,
    s: &SampleCovariance,
    opts: &EstimateOptions,
) -> Result<TrialOutcome> {
    let mle = fit_mle(model, s, &opts.mle)?.verdict;
    let completion = match model.kind() {
        crate::models::ModelKind::Graphical { graph } if opts.cross_check => {
            Some(completion_feasible(graph, s).verdict)
        }
        _ => None,
    };
    Ok(match (mle, completion) {
        (MleVerdict::Exists, None | Some(CompletionVerdict::Feasible)) => TrialOutcome::Success,
        (MleVerdict::Nonexistent, None | Some(CompletionVerdict::Infeasible)) => TrialOutcome::Failure,
        (MleVerdict::Exists, Some(CompletionVerdict::Infeasible))
        | (MleVerdict::Nonexistent, Some(CompletionVerdict::Feasible)) => TrialOutcome::Disagreement,
        _ => TrialOutcome::Marginal,
    })
}

/// One trial at rank `d`, resampling marginal draws with fresh seeds.
fn run_trial(
    model: &LinearSubspaceModel,
    d: usize,
    index: usize,
    master_seed: u64,
    opts: &EstimateOptions,
) -> Result<(TrialOutcome, usize)> {
    let mut resamples = 0;
    for attempt in 0..=opts.marginal_resamples {
        let s_seed = seed::mix(master_seed, &[d as u64, index as u64, attempt as u64]);
        let s = SampleCovariance::synthetic(model.n(), d, s_seed);
        let outcome = decide(model, &s, opts)?;
        if outcome != TrialOutcome::Marginal {
            return Ok((outcome, resamples));
        }
        if attempt < opts.marginal_resamples {
            resamples += 1;
        }
    }
    Ok((TrialOutcome::Marginal, resamples))
}

fn run_rank(
    model: &LinearSubspaceModel,
    d: usize,
    trials: usize,
    master_seed: u64,
    opts: &EstimateOptions,
    spot_check: bool,
) -> Result<RankStats> {
    let outcomes: Vec<(TrialOutcome, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(model, d, i, master_seed, opts))
        .collect::<Result<_>>()?;
    let count = |o: TrialOutcome| outcomes.iter().filter(|(x, _)| *x == o).count();
    let successes = count(TrialOutcome::Success);
    let failures = count(TrialOutcome::Failure);
    let marginals = count(TrialOutcome::Marginal);
    let disagreements = count(TrialOutcome::Disagreement);
    let unresolved = (marginals + disagreements) as f64;
    let status = if unresolved > opts.undetermined_budget * trials as f64 {
        RankStatus::Undetermined
    } else if successes == trials {
        RankStatus::AllSuccess
    } else {
        RankStatus::Partial
    };
    Ok(RankStats {
        d,
        trials,
        successes,
        failures,
        marginals,
        disagreements,
        resamples: outcomes.iter().map(|(_, r)| r).sum(),
        spot_check,
        status,
    })
}

/// Monte Carlo threshold estimate for any model with a PD point.
///
/// Ranks are scanned upward. The estimate is the first rank at which every
/// trial succeeds; all higher ranks are then spot-checked with `trials / 5`
/// instances each and must not fail.
pub fn empirical_mlt(
    model: &LinearSubspaceModel,
    trials: usize,
    master_seed: u64,
    opts: &EstimateOptions,
) -> Result<MltReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let n = model.n();
    let mut report = MltReport::new(model_id(model), n, master_seed);
    let mut estimate: Option<usize> = None;
    let mut lower_undetermined = false;
    for d in 1..=n {
        let spot = estimate.is_some();
        let count = if spot { (trials / 5).max(1) } else { trials };
        let stats = run_rank(model, d, count, master_seed, opts, spot)?;
        match stats.status {
            RankStatus::AllSuccess if estimate.is_none() => estimate = Some(d),
            RankStatus::AllSuccess => {}
            _ if spot => report.notes.push(format!(
                "guard violation: rank {d} above the estimated threshold did not fully succeed"
            )),
            RankStatus::Undetermined => {
                lower_undetermined = true;
                report.notes.push(format!(
                    "rank {d} undetermined: {} marginal, {} disagreements out of {}",
                    stats.marginals, stats.disagreements, stats.trials
                ));
            }
            RankStatus::Partial => {}
        }
        if stats.disagreements > 0 {
            report.notes.push(format!(
                "decider disagreement at rank {d}: {} of {} instances",
                stats.disagreements, stats.trials
            ));
        }
        report.per_rank.push(stats);
    }
    let guard_violated = report.notes.iter().any(|n| n.starts_with("guard violation"));
    report.estimated_mlt = Some(match estimate {
        Some(_) if guard_violated || lower_undetermined => EstimatedMlt::Undetermined,
        Some(d) => EstimatedMlt::Exact(d),
        None if lower_undetermined => EstimatedMlt::Undetermined,
        None => EstimatedMlt::AtLeast(n + 1),
    });
    Ok(report)
}

fn model_id(model: &LinearSubspaceModel) -> String {
    use crate::models::ModelKind;
    match model.kind() {
        ModelKind::Graphical { graph } => format!("graph(n={},m={})", graph.n(), graph.num_edges()),
        ModelKind::Rcon {
            graph,
            vertex_parts,
            edge_parts,
        } => format!(
            "rcon(n={},vparts={},eparts={})",
            graph.n(),
            vertex_parts.parts().len(),
            edge_parts.parts().len()
        ),
        ModelKind::Generic { m, seed } => format!("generic(n={},m={m},seed={seed})", model.n()),
        ModelKind::Explicit => format!("explicit(n={},dim={})", model.n(), model.dim()),
    }
}

/// Bounds plus the empirical estimate for a graphical model.
pub fn estimate_graph(
    g: &Graph,
    trials: usize,
    master_seed: u64,
    bounds: &BoundsOptions,
    opts: &EstimateOptions,
) -> Result<MltReport> {
    let mut report = empirical_mlt(&graphical_subspace(g), trials, master_seed, opts)?;
    fill_bounds(&mut report, g, bounds);
    if report.sandwich_holds() == Some(false) {
        report.notes.push(format!(
            "SANDWICH VIOLATION: omega {:?}, estimate {:?}, upper {:?}",
            report.omega,
            report.estimated_mlt,
            report.upper_bound()
        ));
    }
    Ok(report)
}

/// Smallest `d` with `m <= n d - d (d - 1) / 2`.
pub fn mlt_generic_linear(n: usize, m: usize) -> Result<usize> {
    let max = n * (n + 1) / 2;
    if n == 0 || m == 0 || m > max {
        return Err(Error::Domain(format!("m = {m} outside 1..={max} for n = {n}")));
    }
    Ok((1..=n)
        .find(|&d| m <= n * d - d * (d - 1) / 2)
        .expect("d = n gives n(n+1)/2"))
}

/// Maximum in-degree, floored at 1: an arcless model still needs one sample
/// for the noise variances.
pub fn mlt_sem(d: &Digraph) -> usize {
    graph::max_in_degree(d).max(1)
}
