//! Randomized oracle checks of the NEAT operators, 1000 cases each.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use seesaw_core::neat::{
    compatibility_distance, crossover, CompatibilityNormalizer, Genome, Innovation, InnovationRegistry, NeatConfig, NodeId,
};
use seesaw_core::Seed;

const CASES: u64 = 1000;

fn mutated(base: &Genome, reg: &mut InnovationRegistry, cfg: &NeatConfig, rng: &mut impl Rng, steps: usize) -> Genome {
    let mut g = base.clone();
    for _ in 0..steps {
        match rng.random_range(0..5) {
            0 => {
                g.mutate_add_node(reg, rng);
            }
            1 => {
                g.mutate_delete_node(rng);
            }
            2 => {
                g.mutate_add_connection(reg, cfg, rng);
            }
            3 => {
                g.mutate_delete_connection(rng);
            }
            _ => g.mutate_weights(cfg, rng),
        }
    }
    g
}

/// Two relatives sharing a registry: a common ancestor mutated independently.
fn relatives(case: u64, cfg: &NeatConfig) -> (Genome, Genome, InnovationRegistry) {
    let mut rng = Seed(case).named("relatives").rng();
    let (ni, no) = (rng.random_range(1..5), rng.random_range(1..4));
    let mut reg = InnovationRegistry::new(ni, no);
    let root = Genome::initial(ni, no, &mut reg, cfg, &mut rng);
    let steps = rng.random_range(0..6);
    let ancestor = mutated(&root, &mut reg, cfg, &mut rng, steps);
    let (sa, sb) = (rng.random_range(0..8), rng.random_range(0..8));
    let a = mutated(&ancestor, &mut reg, cfg, &mut rng, sa);
    let b = mutated(&ancestor, &mut reg, cfg, &mut rng, sb);
    (a, b, reg)
}

fn by_innovation(g: &Genome) -> BTreeMap<Innovation, f64> {
    g.connections().iter().map(|c| (c.innovation, c.weight)).collect()
}

#[test]
pub fn compatibility_distance_matches_set_alignment() {
    for case in 0..CASES {
        let mut cfg = NeatConfig::default();
        if case % 2 == 1 {
            cfg.compatibility_normalizer = CompatibilityNormalizer::LargerGenome;
        }
        let (a, b, _) = relatives(case, &cfg);
        let (ma, mb) = (by_innovation(&a), by_innovation(&b));
        let shared: Vec<_> = ma.keys().filter(|k| mb.contains_key(k)).collect();
        let unmatched = ma.len() + mb.len() - 2 * shared.len();
        let mean_diff = if shared.is_empty() {
            0.0
        } else {
            shared.iter().map(|k| (ma[k] - mb[k]).abs()).sum::<f64>() / shared.len() as f64
        };
        let n = match cfg.compatibility_normalizer {
            CompatibilityNormalizer::One => 1.0,
            CompatibilityNormalizer::LargerGenome => ma.len().max(mb.len()).max(1) as f64,
        };
        let expected = cfg.compatibility_disjoint_coefficient * unmatched as f64 / n + cfg.compatibility_weight_coefficient * mean_diff;
        let got = compatibility_distance(&a, &b, &cfg);
        assert!((got - expected).abs() < 1e-12, "case {case}: {got} vs {expected}");
        assert_eq!(got.to_bits(), compatibility_distance(&b, &a, &cfg).to_bits(), "case {case}: asymmetric");
    }
}

#[test]
pub fn crossover_inherits_structure_from_the_fitter_parent() {
    let cfg = NeatConfig::default();
    let (mut from_other, mut matching_total) = (0usize, 0usize);
    for case in 0..CASES {
        let (mut a, mut b, _) = relatives(case, &cfg);
        let mut rng = Seed(case).named("fitness").rng();
        a.fitness = Some(rng.random_range(-1.0..1.0));
        b.fitness = if case % 10 == 0 { a.fitness } else { Some(rng.random_range(-1.0..1.0)) };
        let (fit, other) = if b.fitness > a.fitness { (&b, &a) } else { (&a, &b) };
        let child = crossover(&a, &b, &mut Seed(case).named("crossover").rng()).unwrap();
        child.validate().unwrap();

        let fit_innov: BTreeSet<_> = fit.connections().iter().map(|c| c.innovation).collect();
        let child_innov: BTreeSet<_> = child.connections().iter().map(|c| c.innovation).collect();
        assert_eq!(child_innov, fit_innov, "case {case}: gene set");
        let fit_nodes: BTreeSet<NodeId> = fit.nodes().iter().map(|n| n.id).collect();
        let child_nodes: BTreeSet<NodeId> = child.nodes().iter().map(|n| n.id).collect();
        assert_eq!(child_nodes, fit_nodes, "case {case}: node set");

        for gene in child.connections() {
            let f = fit.connection(gene.innovation).unwrap();
            match other.connection(gene.innovation) {
                Some(o) => {
                    matching_total += 1;
                    assert!(gene == f || gene == o, "case {case}: matching gene from neither parent");
                    if gene == o && o != f {
                        from_other += 1;
                    }
                }
                None => assert_eq!(gene, f, "case {case}: disjoint gene altered"),
            }
        }
    }
    // Matching genes come from each parent about half the time (identical genes count for the fitter one).
    let share = from_other as f64 / matching_total as f64;
    assert!(share > 0.2 && share < 0.5, "share from less-fit parent {share}");
}

#[test]
pub fn innovation_numbers_are_unique_and_reused() {
    let cfg = NeatConfig { add_connection_probability: 0.5, add_node_probability: 0.3, delete_node_probability: 0.1, ..NeatConfig::default() };
    for case in 0..CASES {
        let mut rng = Seed(case).named("registry").rng();
        let (ni, no) = (rng.random_range(1..4), rng.random_range(1..3));
        let mut reg = InnovationRegistry::new(ni, no);
        let root = Genome::initial(ni, no, &mut reg, &cfg, &mut rng);
        let mut pop: Vec<Genome> = (0..6).map(|_| root.clone()).collect();
        for _ in 0..4 {
            for g in pop.iter_mut() {
                g.mutate_structural(&mut reg, &cfg, &mut rng);
            }
        }
        let mut pair_of: BTreeMap<Innovation, (NodeId, NodeId)> = BTreeMap::new();
        for g in &pop {
            g.validate().unwrap();
            let innovs: BTreeSet<_> = g.connections().iter().map(|c| c.innovation).collect();
            assert_eq!(innovs.len(), g.connections().len(), "case {case}: duplicate innovation in a genome");
            for c in g.connections() {
                assert!(c.innovation.0 < reg.innovation_count());
                assert_eq!(reg.lookup(c.from, c.to), Some(c.innovation), "case {case}: registry disagrees");
                let pair = *pair_of.entry(c.innovation).or_insert((c.from, c.to));
                assert_eq!(pair, (c.from, c.to), "case {case}: innovation names two pairs");
            }
        }
        let pairs: BTreeSet<_> = pair_of.values().collect();
        assert_eq!(pairs.len(), pair_of.len(), "case {case}: pair has two innovations");
    }
}

#[test]
pub fn weights_stay_in_range_under_fuzzing() {
    for case in 0..CASES {
        let mut rng = Seed(case).named("clamp").rng();
        let cfg = NeatConfig {
            weight_mutation_power: rng.random_range(0.01..100.0),
            weight_mutation_rate: rng.random_range(0.0..0.7),
            weight_replace_rate: rng.random_range(0.0..0.3),
            initial_weight_stdev: rng.random_range(0.0..50.0),
            weight_range: [-rng.random_range(0.5..30.0), rng.random_range(0.5..30.0)],
            ..NeatConfig::default()
        };
        let (lo, hi) = (cfg.min_weight(), cfg.max_weight());
        let mut reg = InnovationRegistry::new(3, 2);
        let mut g = Genome::initial(3, 2, &mut reg, &cfg, &mut rng);
        for _ in 0..5 {
            g.mutate_structural(&mut reg, &cfg, &mut rng);
            g.mutate_weights(&cfg, &mut rng);
        }
        let in_range = |v: f64| v.is_finite() && (lo..=hi).contains(&v);
        assert!(g.connections().iter().all(|c| in_range(c.weight)), "case {case}");
        assert!(g.nodes().iter().all(|n| in_range(n.bias)), "case {case}");

        let wild: Vec<f64> = (0..g.weight_vector_len()).map(|_| rng.random_range(-1e6..1e6)).collect();
        let applied = g.apply_weight_vector(&wild, &cfg).unwrap();
        for (got, raw) in applied.extract_weight_vector().iter().zip(&wild) {
            assert_eq!(*got, raw.clamp(lo, hi), "case {case}");
        }
    }
}
