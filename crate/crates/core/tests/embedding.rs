// SPDX-License-Identifier: Apache-2.0

use graphrecov::embed::{generate_walks, train_skipgram, train_skipgram_with_stats, Embedding, TrainConfig, WalkConfig};
use graphrecov::plausibility::cosine;
use graphrecov::Graph;

fn two_cliques() -> Graph {
    let mut edges = Vec::new();
    for base in [0u32, 10] {
        for a in 0..10 {
            for b in a + 1..10 {
                edges.push((base + a, base + b));
            }
        }
    }
    edges.push((9, 10));
    Graph::from_edges(20, edges)
}

fn embed(g: &Graph, dim: usize, seed: u64, workers: usize) -> Embedding {
    let walk = WalkConfig { walk_length: 40, walk_times: 20, window: 5, seed };
    let corpus = generate_walks(g, &walk).unwrap();
    let train = TrainConfig { dimension: dim, seed, workers, ..TrainConfig::default() };
    train_skipgram(&corpus, walk.window, &train).unwrap()
}

fn mean_cos(emb: &Embedding, pairs: impl Iterator<Item = (u32, u32)>) -> f64 {
    let (sum, n) = pairs.fold((0.0, 0), |(s, n), (a, b)| {
        (s + cosine(emb.vector(a).unwrap(), emb.vector(b).unwrap()).unwrap(), n + 1)
    });
    sum / n as f64
}

fn intra_minus_inter(emb: &Embedding) -> f64 {
    let intra = mean_cos(
        emb,
        (0..10u32).flat_map(|a| (a + 1..10).flat_map(move |b| [(a, b), (a + 10, b + 10)])),
    );
    let inter = mean_cos(emb, (0..10u32).flat_map(|a| (10..20).map(move |b| (a, b))));
    intra - inter
}

#[test]
fn cliques_separate() {
    let g = two_cliques();
    for seed in 0..3 {
        let gap = intra_minus_inter(&embed(&g, 16, seed, 1));
        assert!(gap > 0.0, "seed {seed}: gap {gap}");
    }
}

#[test]
fn parallel_training_also_separates() {
    let gap = intra_minus_inter(&embed(&two_cliques(), 16, 4, 4));
    assert!(gap > 0.0, "gap {gap}");
}

#[test]
fn bridge_is_less_plausible_than_clique_edges() {
    // Barbell: the bridge (9, 10) should score below a typical clique edge in
    // most seeds.
    let g = two_cliques();
    let wins = (0..5)
        .filter(|&seed| {
            let emb = embed(&g, 16, seed, 1);
            let bridge = cosine(emb.vector(9).unwrap(), emb.vector(10).unwrap()).unwrap();
            let clique = mean_cos(&emb, (0..9u32).flat_map(|a| (a + 1..9).map(move |b| (a, b))));
            bridge < clique
        })
        .count();
    assert!(wins >= 3, "{wins}/5");
}

#[test]
fn serial_training_is_bitwise_deterministic() {
    let g = two_cliques();
    let a = embed(&g, 16, 7, 1);
    let b = embed(&g, 16, 7, 1);
    assert_eq!(a.to_binary_bytes(), b.to_binary_bytes());
    assert_ne!(a.to_binary_bytes(), embed(&g, 16, 8, 1).to_binary_bytes());
}

#[test]
fn loss_decreases_over_training() {
    let g = two_cliques();
    let drops = (0..5)
        .filter(|&seed| {
            let walk = WalkConfig { walk_length: 40, walk_times: 20, window: 5, seed };
            let corpus = generate_walks(&g, &walk).unwrap();
            let train = TrainConfig { dimension: 16, seed, ..TrainConfig::default() };
            let (_, stats) = train_skipgram_with_stats(&corpus, walk.window, &train).unwrap();
            stats.quarter_loss[3] < stats.quarter_loss[0]
        })
        .count();
    assert!(drops >= 3, "{drops}/5");
}

#[test]
fn shape_and_isolated_nodes() {
    // Node 3 is isolated, so it never appears in a walk but still gets a row.
    let g = Graph::from_edges(4, [(0, 1), (1, 2)]);
    let emb = embed(&g, 8, 0, 1);
    assert_eq!(emb.node_count(), 4);
    assert_eq!(emb.dim(), 8);
    assert!(emb.is_finite());
    let mut workers = embed(&g, 8, 0, 3);
    assert_eq!(workers.node_count(), 4);
    assert!(workers.is_finite());
    workers = embed(&two_cliques(), 32, 1, 2);
    assert_eq!(workers.as_slice().len(), 20 * 32);
}
