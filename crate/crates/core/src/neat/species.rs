use serde::{Deserialize, Serialize};

use super::{compatibility_distance, Genome, NeatConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: u32,
    pub representative: Genome,
    /// Indices into the population the species was formed from.
    pub members: Vec<usize>,
    pub best_fitness: f64,
    /// Generations since `best_fitness` last improved.
    pub stagnation: u32,
}

/// Assigns every genome to the first species whose representative lies
/// within the compatibility threshold, founding new species as needed.
///
/// Members must carry fitness (missing fitness counts as negative infinity).
/// Afterwards each species' best fitness and stagnation counter are updated,
/// its representative becomes its champion, and species stagnant for
/// `max_stagnation` generations are dropped unless they rank among the top
/// `species_elitism` by best fitness.
pub fn speciate(population: &[Genome], previous: &[Species], cfg: &NeatConfig, next_id: &mut u32) -> Vec<Species> {
    let mut species: Vec<Species> = previous
        .iter()
        .map(|s| Species { members: Vec::new(), ..s.clone() })
        .collect();
    let carried = species.len();
    for (idx, genome) in population.iter().enumerate() {
        let home = species
            .iter()
            .position(|s| compatibility_distance(genome, &s.representative, cfg) < cfg.compatibility_distance_threshold);
        match home {
            Some(k) => species[k].members.push(idx),
            None => {
                species.push(Species {
                    id: *next_id,
                    representative: genome.clone(),
                    members: vec![idx],
                    best_fitness: f64::NEG_INFINITY,
                    stagnation: 0,
                });
                *next_id += 1;
            }
        }
    }

    let fitness = |i: usize| population[i].fitness.unwrap_or(f64::NEG_INFINITY);
    let mut alive: Vec<(bool, Species)> = species
        .into_iter()
        .enumerate()
        .filter(|(_, s)| !s.members.is_empty())
        .map(|(k, mut s)| {
            let champion = champion(&s.members, &fitness);
            let top = fitness(champion);
            if k >= carried || top > s.best_fitness {
                s.stagnation = 0;
                s.best_fitness = s.best_fitness.max(top);
            } else {
                s.stagnation += 1;
            }
            s.representative = population[champion].clone();
            (k >= carried, s)
        })
        .collect();

    let mut ranking: Vec<usize> = (0..alive.len()).collect();
    ranking.sort_by(|&a, &b| alive[b].1.best_fitness.total_cmp(&alive[a].1.best_fitness).then(a.cmp(&b)));
    let mut protected = vec![false; alive.len()];
    for &k in ranking.iter().take(cfg.species_elitism) {
        protected[k] = true;
    }
    let mut k = 0;
    alive.retain(|(_, s)| {
        let keep = protected[k] || s.stagnation < cfg.max_stagnation;
        k += 1;
        keep
    });
    alive.into_iter().map(|(_, s)| s).collect()
}

/// Highest fitness, lowest index on ties.
pub(super) fn champion(members: &[usize], fitness: &impl Fn(usize) -> f64) -> usize {
    let mut best = members[0];
    for &m in &members[1..] {
        if fitness(m) > fitness(best) {
            best = m;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neat::genome::tests::chain_genome;

    fn with_fitness(mut g: Genome, f: f64) -> Genome {
        g.fitness = Some(f);
        g
    }

    #[test]
    fn identical_genomes_form_one_species() {
        let g = with_fitness(chain_genome(&[(1, 0.5), (2, 0.5)]), 1.0);
        let pop = vec![g; 10];
        let mut next = 0;
        let s = speciate(&pop, &[], &NeatConfig::default(), &mut next);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].members, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn two_clusters_two_species() {
        let cfg = NeatConfig::default();
        // cluster A: genes 1..=4, cluster B: genes 10..=13 -> 8 unmatched genes across
        let a1 = chain_genome(&[(1, 0.1), (2, 0.1), (3, 0.1), (4, 0.1)]);
        let a2 = chain_genome(&[(1, 0.3), (2, 0.1), (3, 0.1), (5, 0.1)]);
        let b1 = chain_genome(&[(10, 0.1), (11, 0.1), (12, 0.1), (13, 0.1)]);
        let b2 = chain_genome(&[(10, 0.9), (11, 0.1), (12, 0.1), (13, 0.1)]);
        assert!(compatibility_distance(&a1, &a2, &cfg) < 3.0);
        assert!(compatibility_distance(&b1, &b2, &cfg) < 3.0);
        for a in [&a1, &a2] {
            for b in [&b1, &b2] {
                assert!(compatibility_distance(a, b, &cfg) > 3.0);
            }
        }
        let pop: Vec<Genome> = [a1, b1, a2, b2].into_iter().map(|g| with_fitness(g, 0.0)).collect();
        let mut next = 0;
        let s = speciate(&pop, &[], &cfg, &mut next);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].members, vec![0, 2]);
        assert_eq!(s[1].members, vec![1, 3]);
    }

    #[test]
    fn stagnant_low_ranked_species_removed() {
        let cfg = NeatConfig::default();
        let genes = |base: u64| [(base, 0.0), (base + 1, 0.0), (base + 2, 0.0), (base + 3, 0.0)];
        let pop: Vec<Genome> = (0..4).map(|k| with_fitness(chain_genome(&genes(10 * k + 1)), k as f64)).collect();
        let mut next = 0;
        let mut prev = speciate(&pop, &[], &cfg, &mut next);
        assert_eq!(prev.len(), 4);
        // species 1 ranks 3rd by best fitness (best are 3, 2, 1, 0)
        for s in prev.iter_mut() {
            s.best_fitness += 10.0;
            s.stagnation = if s.id == 1 { 14 } else { 0 };
        }
        let s = speciate(&pop, &prev, &cfg, &mut next);
        assert!(s.iter().all(|s| s.id != 1));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn top_species_survive_stagnation() {
        let cfg = NeatConfig::default();
        let pop = vec![with_fitness(chain_genome(&[(1, 0.0)]), 1.0)];
        let mut next = 0;
        let mut prev = speciate(&pop, &[], &cfg, &mut next);
        prev[0].stagnation = 100;
        prev[0].best_fitness = 5.0;
        let s = speciate(&pop, &prev, &cfg, &mut next);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].stagnation, 101);
    }
}
