use mlt_core::experiments::{
    er_experiment, glasso_experiment, read_jsonl, render_report, wilson_interval, write_report,
    ErOptions, ErRecord, GlassoExpOptions, GlassoRecord, Record, ReportFormat,
};
use mlt_core::graph::{clique_number, erdos_renyi};
use mlt_core::mlt::{
    empirical_mlt, estimate_graph, mlt_bounds, BoundsOptions, EstimateOptions, EstimatedMlt,
};
use mlt_core::models::{generic_subspace, graphical_subspace};
use mlt_core::rigidity::min_independence_dim;
use mlt_core::seed::{mix, DEFAULT_SEED};
use mlt_core::solver::{
    completion_feasible, fit_mle, CompletionVerdict, MleOptions, MleVerdict, SampleCovariance,
};
use mlt_core::Graph;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_are_ordered(n in 2usize..9, p in 0.1f64..1.0, seed in any::<u64>()) {
        let g = erdos_renyi(n, p, seed);
        prop_assume!(g.num_edges() > 0);
        let r = mlt_bounds(&g, &BoundsOptions::default());
        prop_assert_eq!(r.omega, Some(clique_number(&g)));
        prop_assert_eq!(r.rigidity_upper, Some(min_independence_dim(&g, DEFAULT_SEED).unwrap() + 1));
        prop_assert!(r.omega <= r.rigidity_upper);
        prop_assert!(r.rigidity_upper <= r.upper_bound());
    }

    #[test]
    fn mle_and_completion_agree_away_from_the_threshold(n in 3usize..7, p in 0.3f64..1.0, seed in any::<u64>()) {
        let g = erdos_renyi(n, p, seed);
        prop_assume!(g.num_edges() > 0);
        let mlt = min_independence_dim(&g, 1).unwrap() + 1;
        let model = graphical_subspace(&g);
        // Rank ω - 1 always fails; rank n always succeeds.
        let cases = [(clique_number(&g) - 1, false), (n, true)];
        for (d, exists) in cases {
            prop_assume!(d >= 1);
            let s = SampleCovariance::synthetic(n, d, mix(seed, &[d as u64]));
            let mle = fit_mle(&model, &s, &MleOptions::default()).unwrap().verdict;
            let comp = completion_feasible(&g, &s).verdict;
            prop_assert_eq!(mle == MleVerdict::Exists, exists, "d = {} mlt = {}", d, mlt);
            let want = if exists { CompletionVerdict::Feasible } else { CompletionVerdict::Infeasible };
            prop_assert_eq!(comp, want);
        }
    }
}

#[test]
fn estimator_is_reproducible() {
    let g = Graph::cycle(5);
    let opts = EstimateOptions::default();
    let a = estimate_graph(&g, 10, 42, &BoundsOptions::default(), &opts).unwrap();
    let b = estimate_graph(&g, 10, 42, &BoundsOptions::default(), &opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.csv_row(), b.csv_row());
}

#[test]
fn estimate_respects_the_sandwich_on_small_graphs() {
    for (i, g) in [Graph::cycle(4), Graph::path(5), Graph::complete(4), Graph::complete_bipartite(2, 3)]
        .iter()
        .enumerate()
    {
        let r = estimate_graph(g, 30, mix(7, &[i as u64]), &BoundsOptions::default(), &EstimateOptions::default()).unwrap();
        assert_eq!(r.sandwich_holds(), Some(true), "{:?}", r.estimated_mlt);
        assert_eq!(r.estimated_mlt, r.rigidity_upper.map(EstimatedMlt::Exact), "{}", g.to_edge_list());
    }
}

#[test]
fn full_space_threshold_is_n() {
    let model = generic_subspace(4, 10, 3).unwrap();
    let r = empirical_mlt(&model, 10, 5, &EstimateOptions::default()).unwrap();
    assert_eq!(r.estimated_mlt, Some(EstimatedMlt::Exact(4)));
}

#[test]
fn report_json_round_trips() {
    let r = estimate_graph(&Graph::path(3), 5, 1, &BoundsOptions::default(), &EstimateOptions::default()).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], "mlt-lab/1");
    assert_eq!(v["estimated_mlt"], 2);
    assert_eq!(v["rigidity_upper"], 2);
    assert_eq!(v["per_rank"][0]["d"], 1);
    for s in ["3", "\">=7\"", "\"undetermined\""] {
        let e: EstimatedMlt = serde_json::from_str(s).unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), s);
    }
}

fn small_er() -> Vec<ErRecord> {
    let opts = ErOptions { mlt_trials: 6, ..ErOptions::default() };
    er_experiment(&[5, 6], &[0.0, 2.0], 3, 99, &opts).unwrap()
}

#[test]
fn er_experiment_is_deterministic_and_round_trips() {
    let a = small_er();
    let b = small_er();
    assert_eq!(a.len(), 12);
    let ja = render_report(&a, ReportFormat::Jsonl).unwrap();
    assert_eq!(ja, render_report(&b, ReportFormat::Jsonl).unwrap());
    assert_eq!(ja.lines().count(), a.len());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("er.jsonl");
    write_report(&a, ReportFormat::Jsonl, &path).unwrap();
    let back: Vec<ErRecord> = read_jsonl(&path).unwrap();
    assert_eq!(render_report(&back, ReportFormat::Jsonl).unwrap(), ja);

    let csv = render_report(&a, ReportFormat::Csv).unwrap();
    assert_eq!(csv.lines().next().unwrap(), ErRecord::csv_header());
    assert_eq!(csv.lines().count(), a.len() + 1);
    for r in &a {
        assert_ne!(r.sandwich, Some(false));
    }
}

#[test]
fn glasso_experiment_round_trips() {
    let opts = GlassoExpOptions::default();
    let recs = glasso_experiment(5, 4, &[0.05, 0.5], 2, 3, &opts).unwrap();
    assert_eq!(recs.len(), 4);
    let text = render_report(&recs, ReportFormat::Jsonl).unwrap();
    let again = glasso_experiment(5, 4, &[0.05, 0.5], 2, 3, &opts).unwrap();
    assert_eq!(render_report(&again, ReportFormat::Jsonl).unwrap(), text);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.jsonl");
    write_report(&recs, ReportFormat::Jsonl, &path).unwrap();
    let back: Vec<GlassoRecord> = read_jsonl(&path).unwrap();
    assert_eq!(render_report(&back, ReportFormat::Jsonl).unwrap(), text);
    for r in &recs {
        if let Some(c) = r.confirmed {
            assert_eq!(c, r.fits_same_data);
        }
    }
}

#[test]
fn summaries_carry_wilson_intervals() {
    let recs = small_er();
    for cell in ErRecord::summarize(&recs) {
        let (lo, hi) = wilson_interval(cell.hits, cell.count);
        assert_eq!((cell.lo, cell.hi), (lo, hi));
        assert!(lo <= cell.fraction && cell.fraction <= hi);
    }
}
