use rand::Rng;

use super::species::champion;
use super::{crossover, Genome, InnovationRegistry, NeatConfig, NeatError, Species};

/// Splits `total` offspring seats across species.
///
/// Species with at least `elitism_threshold` members first receive one seat
/// for their champion; the remaining seats are shared in proportion to
/// `scores` using the largest-remainder method (ties go to the lower species
/// index). All-zero scores share equally.
pub fn offspring_quotas(scores: &[f64], sizes: &[usize], total: usize, elitism_threshold: usize) -> Vec<usize> {
    assert_eq!(scores.len(), sizes.len());
    if scores.is_empty() {
        return Vec::new();
    }
    let reserved: Vec<usize> = sizes.iter().map(|&n| usize::from(n >= elitism_threshold)).collect();
    let free = total.saturating_sub(reserved.iter().sum());
    let sum: f64 = scores.iter().sum();
    let shares: Vec<f64> = if sum > 0.0 {
        scores.iter().map(|s| free as f64 * s / sum).collect()
    } else {
        vec![free as f64 / scores.len() as f64; scores.len()]
    };
    let mut quotas: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut left = free - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (shares[a] - shares[a].floor(), shares[b] - shares[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        quotas[k] += 1;
        left -= 1;
    }
    quotas.iter().zip(&reserved).map(|(q, r)| q + r).collect()
}

/// Produces the next population from evaluated, speciated genomes.
///
/// Species scores are the mean of member fitness shifted so the worst
/// surviving genome scores zero (the species' summed shared fitness).
/// Within a species the top `survival_threshold` fraction (at least two
/// where possible) are parents; species of `elitism_threshold` or more
/// members copy their champion unchanged. Every other child is a crossover
/// of two random parents followed by structural and weight mutation.
pub fn next_generation<R: Rng + ?Sized>(
    population: &[Genome],
    species: &[Species],
    registry: &mut InnovationRegistry,
    cfg: &NeatConfig,
    rng: &mut R,
) -> Result<Vec<Genome>, NeatError> {
    if species.is_empty() || species.iter().all(|s| s.members.is_empty()) {
        return Err(NeatError::EmptyPopulation);
    }
    for s in species {
        if let Some(&m) = s.members.iter().find(|&&m| population[m].fitness.is_none()) {
            return Err(NeatError::MissingFitness { index: m });
        }
    }
    let fitness = |i: usize| population[i].fitness.expect("checked above");
    let floor = species
        .iter()
        .flat_map(|s| s.members.iter())
        .map(|&m| fitness(m))
        .fold(f64::INFINITY, f64::min);
    let scores: Vec<f64> = species
        .iter()
        .map(|s| s.members.iter().map(|&m| fitness(m) - floor).sum::<f64>() / s.members.len() as f64)
        .collect();
    let sizes: Vec<usize> = species.iter().map(|s| s.members.len()).collect();
    let quotas = offspring_quotas(&scores, &sizes, cfg.population_size, cfg.elitism_threshold);

    let mut out = Vec::with_capacity(cfg.population_size);
    for (s, &quota) in species.iter().zip(&quotas) {
        if quota == 0 || s.members.is_empty() {
            continue;
        }
        let mut ranked = s.members.clone();
        ranked.sort_by(|&a, &b| fitness(b).total_cmp(&fitness(a)).then(a.cmp(&b)));
        let mut produced = 0;
        if s.members.len() >= cfg.elitism_threshold {
            let mut elite = population[champion(&s.members, &fitness)].clone();
            elite.fitness = None;
            out.push(elite);
            produced += 1;
        }
        let cut = ((cfg.survival_threshold * ranked.len() as f64).ceil() as usize).max(2).min(ranked.len());
        let parents = &ranked[..cut];
        while produced < quota {
            let a = &population[parents[rng.random_range(0..parents.len())]];
            let b = &population[parents[rng.random_range(0..parents.len())]];
            let mut child = crossover(a, b, rng)?;
            child.mutate_structural(registry, cfg, rng);
            child.mutate_weights(cfg, rng);
            child.fitness = None;
            out.push(child);
            produced += 1;
        }
    }
    Ok(out)
}
