use mlt_core::graph::{
    clique_number, complement, is_chordal, is_perfect_elimination_ordering, max_clique, perfect_elimination_ordering,
    random_chordal, treewidth, TreewidthMode,
};
use mlt_core::rigidity::{generic_rank, min_independence_dim};
use mlt_core::Graph;
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (1..=n)
            .flat_map(|u| (u + 1..=n).map(move |v| (u, v)))
            .collect();
        proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |keep| {
            let edges = pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| *e);
            Graph::new(n, edges).unwrap()
        })
    })
}

fn is_clique(g: &Graph, vs: &[usize]) -> bool {
    vs.iter()
        .enumerate()
        .all(|(i, &u)| vs[i + 1..].iter().all(|&v| g.has_edge(u, v)))
}

// Brute-force clique number over all vertex subsets.
fn brute_clique_number(g: &Graph) -> usize {
    let n = g.n();
    (0u32..1 << n)
        .filter_map(|mask| {
            let vs: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            is_clique(g, &vs).then_some(vs.len())
        })
        .max()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complement_is_an_involution(g in arb_graph(9)) {
        let c = complement(&g);
        prop_assert_eq!(c.num_edges() + g.num_edges(), g.n() * (g.n() - 1) / 2);
        prop_assert_eq!(complement(&c), g);
    }

    #[test]
    fn clique_number_matches_brute_force(g in arb_graph(9)) {
        let k = max_clique(&g);
        prop_assert!(is_clique(&g, &k));
        prop_assert_eq!(clique_number(&g), brute_clique_number(&g));
    }

    #[test]
    fn heuristic_treewidth_bounds_exact(g in arb_graph(9)) {
        let exact = treewidth(&g, TreewidthMode::Exact).unwrap();
        let heur = treewidth(&g, TreewidthMode::Heuristic).unwrap();
        prop_assert!(exact.exact);
        prop_assert!(heur.width >= exact.width);
        prop_assert!(exact.width + 1 >= clique_number(&g));
        for tw in [&exact, &heur] {
            prop_assert!(g.is_subgraph_of(&tw.cover));
            prop_assert!(is_chordal(&tw.cover));
            prop_assert_eq!(clique_number(&tw.cover), tw.width + 1);
            let mut order = tw.order.clone();
            order.sort_unstable();
            prop_assert_eq!(order, (1..=g.n()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn chordal_treewidth_is_clique_number_minus_one(n in 2usize..12, seed in any::<u64>()) {
        let g = random_chordal(n, seed);
        prop_assert!(is_chordal(&g));
        let tw = treewidth(&g, TreewidthMode::Exact).unwrap();
        prop_assert_eq!(tw.width + 1, clique_number(&g));
        let peo = perfect_elimination_ordering(&g).unwrap();
        prop_assert!(is_perfect_elimination_ordering(&g, &peo));
    }

    #[test]
    fn bounds_are_monotone_under_subgraphs(g in arb_graph(7), drop in any::<u64>()) {
        prop_assume!(g.num_edges() >= 2);
        let edges = g.edges().to_vec();
        let skip = (drop % edges.len() as u64) as usize;
        let h = Graph::new(g.n(), edges.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, e)| *e)).unwrap();
        prop_assert!(clique_number(&h) <= clique_number(&g));
        let tw_h = treewidth(&h, TreewidthMode::Exact).unwrap().width;
        let tw_g = treewidth(&g, TreewidthMode::Exact).unwrap().width;
        prop_assert!(tw_h <= tw_g);
        prop_assert!(min_independence_dim(&h, 7).unwrap() <= min_independence_dim(&g, 7).unwrap());
        for d in 1..=3 {
            prop_assert!(generic_rank(&h, d, 7) <= generic_rank(&g, d, 7));
        }
    }
}

#[test]
fn treewidth_of_named_graphs() {
    let cases = [
        (Graph::cycle(6), 2),
        (Graph::complete(5), 4),
        (Graph::complete_bipartite(3, 3), 3),
        (Graph::petersen(), 4),
        (Graph::path(7), 1),
    ];
    for (g, tw) in cases {
        assert_eq!(treewidth(&g, TreewidthMode::Exact).unwrap().width, tw);
    }
}
