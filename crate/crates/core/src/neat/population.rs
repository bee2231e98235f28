use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{next_generation, speciate, Genome, InnovationRegistry, NeatConfig, NeatError, Species};

/// A NEAT population together with its species and innovation history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub genomes: Vec<Genome>,
    pub species: Vec<Species>,
    pub registry: InnovationRegistry,
    pub generation: u64,
    next_species_id: u32,
    num_inputs: usize,
    num_outputs: usize,
    /// Number of extinction resets performed.
    pub resets: u32,
}

impl Population {
    pub fn new<R: Rng + ?Sized>(cfg: &NeatConfig, num_inputs: usize, num_outputs: usize, rng: &mut R) -> Self {
        let mut registry = InnovationRegistry::new(num_inputs, num_outputs);
        let genomes = (0..cfg.population_size)
            .map(|_| Genome::initial(num_inputs, num_outputs, &mut registry, cfg, rng))
            .collect();
        Population {
            genomes,
            species: Vec::new(),
            registry,
            generation: 0,
            next_species_id: 0,
            num_inputs,
            num_outputs,
            resets: 0,
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    /// Index of the fittest genome (lowest index on ties), if any has fitness.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in self.genomes.iter().enumerate() {
            if let Some(f) = g.fitness {
                if best.is_none_or(|(_, b)| f > b) {
                    best = Some((i, f));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Speciates the evaluated population and replaces it with the next
    /// generation. If every species is gone, the population is rebuilt from
    /// minimal genomes when `reset_on_extinction` is set.
    pub fn evolve<R: Rng + ?Sized>(&mut self, cfg: &NeatConfig, rng: &mut R) -> Result<(), NeatError> {
        if let Some(i) = self.genomes.iter().position(|g| g.fitness.is_none()) {
            return Err(NeatError::MissingFitness { index: i });
        }
        self.species = speciate(&self.genomes, &self.species, cfg, &mut self.next_species_id);
        self.genomes = match next_generation(&self.genomes, &self.species, &mut self.registry, cfg, rng) {
            Ok(next) => next,
            Err(NeatError::EmptyPopulation) if cfg.reset_on_extinction => {
                self.species.clear();
                self.resets += 1;
                (0..cfg.population_size)
                    .map(|_| Genome::initial(self.num_inputs, self.num_outputs, &mut self.registry, cfg, rng))
                    .collect()
            }
            Err(e) => return Err(e),
        };
        self.generation += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Seed;

    #[test]
    fn size_is_preserved() {
        let cfg = NeatConfig::default();
        let mut pop = Population::new(&cfg, 4, 3, &mut Seed(1).rng());
        let mut rng = Seed(2).rng();
        for gen in 0..10 {
            for (i, g) in pop.genomes.iter_mut().enumerate() {
                g.fitness = Some(((i * 7 + gen) % 13) as f64);
            }
            pop.evolve(&cfg, &mut rng).unwrap();
            assert_eq!(pop.genomes.len(), 64);
            pop.genomes.iter().for_each(|g| g.validate().unwrap());
        }
    }

    #[test]
    fn unevaluated_population_is_rejected() {
        let cfg = NeatConfig::default();
        let mut pop = Population::new(&cfg, 2, 2, &mut Seed(1).rng());
        assert!(matches!(pop.evolve(&cfg, &mut Seed(1).rng()), Err(NeatError::MissingFitness { index: 0 })));
    }
}
