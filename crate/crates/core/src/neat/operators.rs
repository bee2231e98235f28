use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::genome::sample_initial;
use super::{ConnectionGene, Genome, InnovationRegistry, NeatConfig, NeatError, NodeGene, NodeKind};

impl Genome {
    /// Independent Bernoulli attempts at add-node, delete-node,
    /// add-connection and delete-connection, in that order. Attempts that
    /// cannot apply leave the genome unchanged.
    pub fn mutate_structural<R: Rng + ?Sized>(&mut self, registry: &mut InnovationRegistry, cfg: &NeatConfig, rng: &mut R) {
        if rng.random::<f64>() < cfg.add_node_probability {
            self.mutate_add_node(registry, rng);
        }
        if rng.random::<f64>() < cfg.delete_node_probability {
            self.mutate_delete_node(rng);
        }
        if rng.random::<f64>() < cfg.add_connection_probability {
            self.mutate_add_connection(registry, cfg, rng);
        }
        if rng.random::<f64>() < cfg.delete_connection_probability {
            self.mutate_delete_connection(rng);
        }
    }

    /// Splits a random enabled connection `a -> b` into `a -> h` (weight 1)
    /// and `h -> b` (old weight); the original gene is disabled.
    pub fn mutate_add_node<R: Rng + ?Sized>(&mut self, registry: &mut InnovationRegistry, rng: &mut R) -> bool {
        let enabled: Vec<usize> = (0..self.connections().len()).filter(|&i| self.connections()[i].enabled).collect();
        if enabled.is_empty() {
            return false;
        }
        let idx = enabled[rng.random_range(0..enabled.len())];
        let old = self.connections()[idx].clone();
        let hidden = registry.split_node(old.innovation, self);
        self.connections_mut()[idx].enabled = false;
        self.insert_node(NodeGene::new(hidden, NodeKind::Hidden, 0.0));
        self.insert_connection(ConnectionGene {
            innovation: registry.connection(old.from, hidden),
            from: old.from,
            to: hidden,
            weight: 1.0,
            enabled: true,
        });
        self.insert_connection(ConnectionGene {
            innovation: registry.connection(hidden, old.to),
            from: hidden,
            to: old.to,
            weight: old.weight,
            enabled: true,
        });
        true
    }

    /// Removes a random hidden node together with every incident connection.
    pub fn mutate_delete_node<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let hidden: Vec<_> = self.nodes().iter().filter(|n| n.kind == NodeKind::Hidden).map(|n| n.id).collect();
        if hidden.is_empty() {
            return false;
        }
        let victim = hidden[rng.random_range(0..hidden.len())];
        self.nodes_mut().retain(|n| n.id != victim);
        self.connections_mut().retain(|c| c.from != victim && c.to != victim);
        true
    }

    /// Connects a random source node to a random non-input node; cycles and
    /// self-loops are allowed. An already present pair is a no-op.
    pub fn mutate_add_connection<R: Rng + ?Sized>(
        &mut self,
        registry: &mut InnovationRegistry,
        cfg: &NeatConfig,
        rng: &mut R,
    ) -> bool {
        let from = self.nodes()[rng.random_range(0..self.nodes().len())].id;
        let targets: Vec<_> = self.nodes().iter().filter(|n| n.kind != NodeKind::Input).map(|n| n.id).collect();
        let to = targets[rng.random_range(0..targets.len())];
        if self.has_pair(from, to) {
            return false;
        }
        let weight = cfg.clamp_weight(sample_initial(cfg, rng));
        self.insert_connection(ConnectionGene { innovation: registry.connection(from, to), from, to, weight, enabled: true });
        true
    }

    pub fn mutate_delete_connection<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.connections().is_empty() {
            return false;
        }
        let idx = rng.random_range(0..self.connections().len());
        self.connections_mut().remove(idx);
        true
    }

    /// Per weight (then per bias): Gaussian perturbation with probability
    /// `weight_mutation_rate`, uniform replacement over the weight range with
    /// probability `weight_replace_rate`, otherwise unchanged. Results are clamped.
    pub fn mutate_weights<R: Rng + ?Sized>(&mut self, cfg: &NeatConfig, rng: &mut R) {
        let noise = Normal::new(0.0, cfg.weight_mutation_power).expect("validated mutation power");
        let mutate = |v: f64, rng: &mut R| {
            let r: f64 = rng.random();
            let out = if r < cfg.weight_mutation_rate {
                v + noise.sample(rng)
            } else if r < cfg.weight_mutation_rate + cfg.weight_replace_rate {
                rng.random_range(cfg.min_weight()..=cfg.max_weight())
            } else {
                v
            };
            cfg.clamp_weight(out)
        };
        for c in self.connections_mut().iter_mut() {
            c.weight = mutate(c.weight, rng);
        }
        for n in self.nodes_mut().iter_mut().filter(|n| n.kind != NodeKind::Input) {
            n.bias = mutate(n.bias, rng);
        }
    }
}

/// Aligns genes by innovation number. Matching genes come from either parent
/// with equal probability; disjoint and excess genes come from the fitter
/// parent (`parent_a` on ties or missing fitness).
pub fn crossover<R: Rng + ?Sized>(parent_a: &Genome, parent_b: &Genome, rng: &mut R) -> Result<Genome, NeatError> {
    if !parent_a.same_io(parent_b) {
        return Err(NeatError::IncompatibleIo);
    }
    let fa = parent_a.fitness.unwrap_or(f64::NEG_INFINITY);
    let fb = parent_b.fitness.unwrap_or(f64::NEG_INFINITY);
    let (fit, other) = if fb > fa { (parent_b, parent_a) } else { (parent_a, parent_b) };

    let connections: Vec<ConnectionGene> = fit
        .connections()
        .iter()
        .map(|gene| match other.connection(gene.innovation) {
            Some(alt) if rng.random::<bool>() => alt.clone(),
            _ => gene.clone(),
        })
        .collect();
    let nodes: Vec<NodeGene> = fit
        .nodes()
        .iter()
        .map(|node| match other.node(node.id) {
            Some(alt) if node.kind != NodeKind::Input && rng.random::<bool>() => {
                NodeGene { bias: alt.bias, ..node.clone() }
            }
            _ => node.clone(),
        })
        .collect();
    Ok(Genome::from_sorted_parts(fit.num_inputs(), fit.num_outputs(), nodes, connections))
}
