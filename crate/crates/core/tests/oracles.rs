//! Implementations checked against independent brute-force recomputations.

mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgn_transfer::ctdg::{
    generate_synthetic, make_batches, parse_csv, sample_negatives, write_csv, EventStream, GeneratorConfig,
    IngestConfig, TemporalEvent,
};
use tgn_transfer::splitter::{aggregate_static, louvain, make_transfer_split, modularity, SplitFallback, WeightedGraph};
use tgn_transfer::structfeat::{
    aggregate_window, all_node_features, correlate_distances, FeatureConfig, StructuralFeatureVector,
};
use tgn_transfer::structmap::{structmap_loss, StructMap};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn structural_features_match_exact_oracles() {
    let mut r = rng(100);
    for i in 0..200 {
        let (n, edges) = common::random_graph(&mut r, 12);
        let bad = common::structfeat_mismatches(n, &edges);
        assert!(bad.is_empty(), "graph {i} ({n} nodes, {edges:?}): {:?}", &bad[..bad.len().min(5)]);
    }
}

#[test]
fn structural_features_are_permutation_equivariant() {
    let mut r = rng(101);
    let cfg = FeatureConfig::default();
    for _ in 0..50 {
        let (n, edges) = common::random_graph(&mut r, 12);
        let g = common::window_graph(n, &edges);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.gen_range(0..=i));
        }
        let a = all_node_features(&g, &cfg);
        let b = all_node_features(&g.permuted(&perm), &cfg);
        for v in 0..n {
            for (x, y) in a[v].values.iter().zip(&b[perm[v]].values) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "node {v}: {x} vs {y}");
            }
        }
    }
}

fn weighted(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
    WeightedGraph::from_edges(n, edges.iter().copied())
}

#[test]
fn modularity_matches_definition() {
    let mut r = rng(102);
    for _ in 0..100 {
        let n = r.gen_range(2..15);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if r.gen_bool(0.3) {
                    edges.push((u, v, r.gen_range(1..4) as f64));
                }
            }
        }
        let comm: Vec<usize> = (0..n).map(|_| r.gen_range(0..3)).collect();
        let q = modularity(&weighted(n, &edges), &comm);
        assert!((q - common::modularity(n, &edges, &comm)).abs() < 1e-9);
    }
}

#[test]
fn louvain_reports_its_own_modularity() {
    let mut r = rng(103);
    for _ in 0..50 {
        let block = r.gen_range(3..20);
        let (n, edges, _) = common::planted_partition(&mut r, block, 0.5, 0.1);
        let a = louvain(&weighted(n, &edges), &mut r);
        assert!((a.modularity - common::modularity(n, &edges, &a.community_of)).abs() < 1e-9);
        assert!(a.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12), "levels never lose modularity");
    }
}

#[test]
fn louvain_never_beats_exhaustive_optimum() {
    let mut r = rng(104);
    for _ in 0..30 {
        let n = r.gen_range(2..=8);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if r.gen_bool(0.4) {
                    edges.push((u, v, 1.0));
                }
            }
        }
        let best = common::best_modularity(n, &edges);
        let a = louvain(&weighted(n, &edges), &mut r);
        assert!(a.modularity <= best + 1e-12, "{} > optimum {best}", a.modularity);
    }
}

#[test]
fn two_bridged_cliques_reach_the_optimum() {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for u in 0..5 {
            for v in u + 1..5 {
                edges.push((base + u, base + v, 1.0));
            }
        }
    }
    edges.push((4, 5, 1.0));
    let best = common::best_modularity(10, &edges);
    let a = louvain(&weighted(10, &edges), &mut rng(1));
    assert!((a.modularity - best).abs() < 1e-12);
    assert_eq!(a.community_of, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
}

#[test]
fn complete_graph_is_one_community() {
    let mut edges = Vec::new();
    for u in 0..5 {
        for v in u + 1..5 {
            edges.push((u, v, 1.0));
        }
    }
    let a = louvain(&weighted(5, &edges), &mut rng(2));
    assert_eq!(a.num_communities(), 1);
    assert!(a.modularity.abs() < 1e-12);
    assert!((common::best_modularity(5, &edges) - 0.0).abs() < 1e-12);
}

#[test]
fn edgeless_graph_gives_singletons() {
    let a = louvain(&WeightedGraph::new(4), &mut rng(3));
    assert_eq!(a.community_of, vec![0, 1, 2, 3]);
    assert_eq!(a.modularity, 0.0);
}

#[test]
fn planted_blocks_are_recovered() {
    for seed in 0..20 {
        let mut r = rng(200 + seed);
        let (n, edges, truth) = {
            let (block, p_in, p_out) = common::PLANTED;
            common::planted_partition(&mut r, block, p_in, p_out)
        };
        let a = louvain(&weighted(n, &edges), &mut r);
        let agree = common::two_block_agreement(&a.community_of, &truth);
        assert!(agree >= 0.9, "seed {seed}: agreement {agree}");
    }
}

#[test]
fn correlation_matches_all_pairs_oracle() {
    let gap = common::correlation_oracle_gap(&mut rng(105), 100, 30);
    assert!(gap < 1e-12, "gap {gap}");
}

#[test]
fn correlation_is_invariant_to_isometries() {
    let mut r = rng(106);
    let a = common::random_matrix(&mut r, 20, 3);
    let b = common::random_matrix(&mut r, 20, 4);
    let base = correlate_distances(&a, &b, usize::MAX, &mut r).unwrap();
    // Rotate the first two axes, reflect the third and translate.
    let (c, s) = (0.6f64, 0.8f64);
    let moved: Vec<Vec<f64>> = a
        .iter()
        .map(|x| vec![c * x[0] - s * x[1] + 3.0, s * x[0] + c * x[1] - 1.0, -x[2] + 0.5])
        .collect();
    let m = correlate_distances(&moved, &b, usize::MAX, &mut r).unwrap();
    assert!((m.pearson - base.pearson).abs() < 1e-12);
    assert!((m.spearman - base.spearman).abs() < 1e-12);
    // Uniform scaling of one space changes neither coefficient.
    let scaled: Vec<Vec<f64>> = b.iter().map(|x| x.iter().map(|v| 2.5 * v).collect()).collect();
    let s2 = correlate_distances(&a, &scaled, usize::MAX, &mut r).unwrap();
    assert!((s2.pearson - base.pearson).abs() < 1e-12);
}

#[test]
fn full_window_equals_static_aggregate() {
    let mut r = rng(107);
    let events = common::micro_stream(&mut r, 9, 60, 0);
    let stream = EventStream::from_events(events, 9).unwrap();
    let end = stream.end_time().unwrap();
    let start = stream.start_time().unwrap();
    let span = end - start;
    let g = aggregate_window(&stream, end + 1e-9, 1.0, span + 2e-9);
    let w: BTreeSet<(usize, usize)> = g.edges().collect();
    let s: BTreeSet<(usize, usize)> = aggregate_static(&stream).edges().map(|(u, v, _)| (u, v)).collect();
    assert_eq!(w, s);
}

#[test]
fn static_aggregate_conserves_event_count() {
    let mut r = rng(108);
    let events = common::micro_stream(&mut r, 12, 500, 0);
    let stream = EventStream::from_events(events, 12).unwrap();
    let g = aggregate_static(&stream);
    let total: f64 = g.edges().map(|(_, _, w)| w).sum();
    assert_eq!(total, 500.0);
    for (u, v, w) in g.edges() {
        let count = stream
            .events()
            .iter()
            .filter(|e| (e.src, e.dst) == (u, v) || (e.src, e.dst) == (v, u))
            .count();
        assert_eq!(w, count as f64);
    }
}

#[test]
fn negatives_are_uniform_over_non_destinations() {
    let n = 11;
    let events: Vec<TemporalEvent> = (0..2000).map(|i| TemporalEvent::new(0, 3, i as f64)).collect();
    let negs = sample_negatives(&events, n, 5, &mut rng(109)).unwrap();
    let mut counts = vec![0usize; n];
    for &v in &negs.nodes {
        counts[v] += 1;
    }
    assert_eq!(counts[3], 0);
    let expected = negs.nodes.len() as f64 / (n - 1) as f64;
    let chi2: f64 = counts
        .iter()
        .enumerate()
        .filter(|&(v, _)| v != 3)
        .map(|(_, &c)| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 99.9th percentile of chi-square with 9 degrees of freedom.
    assert!(chi2 < 27.88, "chi2 {chi2}");
}

#[test]
fn csv_round_trip_of_ten_thousand_events() {
    let mut r = rng(110);
    let events = common::micro_stream(&mut r, 300, 10_000, 2);
    let stream = EventStream::from_events(events, 300).unwrap();
    let text = write_csv(&stream, false, &["generated".into()]);
    let back = parse_csv(&text, &IngestConfig { dense_ids: true, ..IngestConfig::default() }).unwrap();
    assert_eq!(back.len(), stream.len());
    for (a, b) in stream.events().iter().zip(back.events()) {
        assert_eq!((a.src, a.dst, a.timestamp, &a.edge_feat), (b.src, b.dst, b.timestamp, &b.edge_feat));
    }
}

#[test]
fn thousand_events_make_five_batches() {
    let events: Vec<TemporalEvent> = (0..1000).map(|i| TemporalEvent::new(i % 5, (i + 1) % 5, i as f64)).collect();
    let stream = EventStream::from_events(events, 5).unwrap();
    let batches = make_batches(&stream, 200).unwrap();
    assert_eq!(batches.len(), 5);
    assert!(batches.iter().all(|b| b.len() == 200));
}

#[test]
fn synthetic_communities_are_recovered() {
    let cfg = GeneratorConfig {
        num_communities: 2,
        nodes_per_community: 20,
        num_events: 2000,
        ..GeneratorConfig::default()
    };
    let mut r = rng(111);
    let syn = generate_synthetic(&cfg, &mut r).unwrap();
    let a = louvain(&aggregate_static(&syn.stream), &mut r);
    let agree = common::two_block_agreement(&a.community_of, &syn.community_of);
    assert!(agree >= 0.9, "agreement {agree}");
}

#[test]
fn six_communities_split_evenly() {
    let cfg = GeneratorConfig {
        num_communities: 6,
        nodes_per_community: 20,
        num_events: 6000,
        ..GeneratorConfig::default()
    };
    let mut r = rng(112);
    let syn = generate_synthetic(&cfg, &mut r).unwrap();
    let a = louvain(&aggregate_static(&syn.stream), &mut r);
    let split = make_transfer_split(&syn.stream, &a, 0.25, SplitFallback::Fail).unwrap();
    let sizes = [split.train_nodes.len(), split.val_nodes.len(), split.test_nodes.len()];
    let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
    assert!(hi as f64 <= 1.25 * lo as f64, "group sizes {sizes:?}");
    assert!(split.report.balanced);
    let all: BTreeSet<usize> = split.train_nodes.iter().chain(&split.val_nodes).chain(&split.test_nodes).copied().collect();
    assert_eq!(all.len(), sizes.iter().sum::<usize>(), "groups are node-disjoint");
}

#[test]
fn structmap_loss_matches_hand_computation() {
    let mut sm = StructMap::new(2, 2, 2, &mut rng(113)).unwrap();
    // Zero the hidden layers and set the output bias: f(x) = (0.5, -1).
    for p in tgn_transfer::nn::Module::parameters_mut(&mut sm) {
        p.fill(0.0);
    }
    let last = sm.mlp.layers_mut().last_mut().unwrap();
    last.bias.as_mut().unwrap().values_mut().copy_from_slice(&[0.5, -1.0]);
    let f = |v: Vec<f64>| StructuralFeatureVector { values: v, standardized: true };
    let feats = [f(vec![1.0, 2.0]), f(vec![-3.0, 0.0])];
    let targets = [vec![1.0, 1.0], vec![0.0, -2.0]];
    // ((0.5)^2 + 2^2 + 0.5^2 + 1^2) / 4
    let expected = (0.25 + 4.0 + 0.25 + 1.0) / 4.0;
    assert!((structmap_loss(&sm, &feats, &targets).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn zero_structmap_predicts_zero() {
    let mut sm = StructMap::new(3, 4, 5, &mut rng(114)).unwrap();
    for p in tgn_transfer::nn::Module::parameters_mut(&mut sm) {
        p.fill(0.0);
    }
    let out = sm
        .forward(&StructuralFeatureVector { values: vec![1.0, -2.0, 3.0], standardized: true })
        .unwrap();
    assert_eq!(out, vec![0.0; 5]);
}
