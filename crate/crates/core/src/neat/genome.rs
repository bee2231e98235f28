use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Activation, Aggregation, CompatibilityNormalizer, InnovationRegistry, NeatConfig, NeatError};

pub const GENOME_FORMAT_VERSION: u32 = 1;

/// Node identifier. Inputs occupy `0..num_inputs`, outputs the next
/// `num_outputs` ids, hidden nodes are allocated by the registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Historical marking shared by every connection gene joining the same node pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Innovation(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Output,
    Hidden,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub kind: NodeKind,
    pub activation: Activation,
    pub aggregation: Aggregation,
    /// Unused for input nodes, which emit their raw input.
    pub bias: f64,
}

impl NodeGene {
    pub fn new(id: NodeId, kind: NodeKind, bias: f64) -> Self {
        NodeGene { id, kind, activation: Activation::Sigmoid, aggregation: Aggregation::Sum, bias }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: Innovation,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// A NEAT individual: node genes sorted by id and connection genes sorted by
/// innovation number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    num_inputs: usize,
    num_outputs: usize,
    nodes: Vec<NodeGene>,
    connections: Vec<ConnectionGene>,
    pub fitness: Option<f64>,
}

impl Genome {
    /// Minimal genome: every input wired to every output, weights and
    /// biases drawn from `N(0, initial_weight_stdev)` and clamped.
    pub fn initial<R: Rng + ?Sized>(
        num_inputs: usize,
        num_outputs: usize,
        registry: &mut InnovationRegistry,
        cfg: &NeatConfig,
        rng: &mut R,
    ) -> Genome {
        let mut nodes = Vec::with_capacity(num_inputs + num_outputs);
        for i in 0..num_inputs {
            nodes.push(NodeGene::new(NodeId(i as u32), NodeKind::Input, 0.0));
        }
        for o in 0..num_outputs {
            let bias = cfg.clamp_weight(sample_initial(cfg, rng));
            nodes.push(NodeGene::new(NodeId((num_inputs + o) as u32), NodeKind::Output, bias));
        }
        let mut connections = Vec::with_capacity(num_inputs * num_outputs);
        for i in 0..num_inputs {
            for o in 0..num_outputs {
                let from = NodeId(i as u32);
                let to = NodeId((num_inputs + o) as u32);
                let weight = cfg.clamp_weight(sample_initial(cfg, rng));
                connections.push(ConnectionGene {
                    innovation: registry.connection(from, to),
                    from,
                    to,
                    weight,
                    enabled: true,
                });
            }
        }
        connections.sort_by_key(|c| c.innovation);
        Genome { num_inputs, num_outputs, nodes, connections, fitness: None }
    }

    /// Builds a genome from explicit genes and checks every invariant.
    pub fn from_genes(
        num_inputs: usize,
        num_outputs: usize,
        mut nodes: Vec<NodeGene>,
        mut connections: Vec<ConnectionGene>,
    ) -> Result<Genome, NeatError> {
        nodes.sort_by_key(|n| n.id);
        connections.sort_by_key(|c| c.innovation);
        let g = Genome { num_inputs, num_outputs, nodes, connections, fitness: None };
        g.validate()?;
        Ok(g)
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn connections(&self) -> &[ConnectionGene] {
        &self.connections
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn connection(&self, innovation: Innovation) -> Option<&ConnectionGene> {
        self.connections
            .binary_search_by_key(&innovation, |c| c.innovation)
            .ok()
            .map(|i| &self.connections[i])
    }

    pub fn has_pair(&self, from: NodeId, to: NodeId) -> bool {
        self.connections.iter().any(|c| c.from == from && c.to == to)
    }

    pub fn input_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Input).map(|n| n.id)
    }

    pub fn output_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Output).map(|n| n.id)
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    pub fn enabled_connection_count(&self) -> usize {
        self.connections.iter().filter(|c| c.enabled).count()
    }

    /// Number of biases that take part in evaluation (output and hidden nodes).
    pub fn bias_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind != NodeKind::Input).count()
    }

    /// True when both genomes expose the same input and output node sets.
    pub fn same_io(&self, other: &Genome) -> bool {
        self.num_inputs == other.num_inputs
            && self.num_outputs == other.num_outputs
            && self.input_ids().eq(other.input_ids())
            && self.output_ids().eq(other.output_ids())
    }

    pub(super) fn nodes_mut(&mut self) -> &mut Vec<NodeGene> {
        &mut self.nodes
    }

    pub(super) fn connections_mut(&mut self) -> &mut Vec<ConnectionGene> {
        &mut self.connections
    }

    pub(super) fn from_sorted_parts(
        num_inputs: usize,
        num_outputs: usize,
        nodes: Vec<NodeGene>,
        connections: Vec<ConnectionGene>,
    ) -> Genome {
        Genome { num_inputs, num_outputs, nodes, connections, fitness: None }
    }

    pub(super) fn insert_node(&mut self, node: NodeGene) {
        let at = self.nodes.partition_point(|n| n.id < node.id);
        self.nodes.insert(at, node);
    }

    pub(super) fn insert_connection(&mut self, conn: ConnectionGene) {
        let at = self.connections.partition_point(|c| c.innovation < conn.innovation);
        self.connections.insert(at, conn);
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), NeatError> {
        let bad = |msg: String| Err(NeatError::InvalidGenome(msg));
        if !self.nodes.windows(2).all(|w| w[0].id < w[1].id) {
            return bad("node ids are not unique and sorted".into());
        }
        if !self.connections.windows(2).all(|w| w[0].innovation < w[1].innovation) {
            return bad("innovation numbers are not unique and sorted".into());
        }
        for i in 0..self.num_inputs + self.num_outputs {
            let expected = if i < self.num_inputs { NodeKind::Input } else { NodeKind::Output };
            match self.node(NodeId(i as u32)) {
                Some(n) if n.kind == expected => {}
                _ => return bad(format!("node {i} must be an {expected:?} node")),
            }
        }
        let io = self.num_inputs + self.num_outputs;
        if self.nodes.iter().filter(|n| n.kind != NodeKind::Hidden).count() != io {
            return bad("unexpected input/output node outside the reserved id range".into());
        }
        let mut pairs = BTreeSet::new();
        for c in &self.connections {
            let Some(to) = self.node(c.to) else {
                return bad(format!("connection {} targets missing node {}", c.innovation.0, c.to.0));
            };
            if !self.contains_node(c.from) {
                return bad(format!("connection {} starts at missing node {}", c.innovation.0, c.from.0));
            }
            if to.kind == NodeKind::Input {
                return bad(format!("connection {} feeds input node {}", c.innovation.0, c.to.0));
            }
            if !pairs.insert((c.from, c.to)) {
                return bad(format!("duplicate connection {} -> {}", c.from.0, c.to.0));
            }
            if !c.weight.is_finite() {
                return bad(format!("connection {} has a non-finite weight", c.innovation.0));
            }
        }
        if self.nodes.iter().any(|n| !n.bias.is_finite()) {
            return bad("non-finite bias".into());
        }
        Ok(())
    }

    /// Enabled connection weights by innovation number, then hidden/output
    /// biases by node id.
    pub fn extract_weight_vector(&self) -> Vec<f64> {
        self.connections
            .iter()
            .filter(|c| c.enabled)
            .map(|c| c.weight)
            .chain(self.nodes.iter().filter(|n| n.kind != NodeKind::Input).map(|n| n.bias))
            .collect()
    }

    pub fn weight_vector_len(&self) -> usize {
        self.enabled_connection_count() + self.bias_count()
    }

    /// Inverse of [`Genome::extract_weight_vector`]; values are clamped to the weight range.
    pub fn apply_weight_vector(&self, values: &[f64], cfg: &NeatConfig) -> Result<Genome, NeatError> {
        let expected = self.weight_vector_len();
        if values.len() != expected {
            return Err(NeatError::LengthMismatch { expected, got: values.len() });
        }
        let mut out = self.clone();
        let mut it = values.iter().map(|&v| cfg.clamp_weight(v));
        for c in out.connections.iter_mut().filter(|c| c.enabled) {
            c.weight = it.next().unwrap_or(c.weight);
        }
        for n in out.nodes.iter_mut().filter(|n| n.kind != NodeKind::Input) {
            n.bias = it.next().unwrap_or(n.bias);
        }
        out.fitness = None;
        Ok(out)
    }
}

pub(super) fn sample_initial<R: Rng + ?Sized>(cfg: &NeatConfig, rng: &mut R) -> f64 {
    if cfg.initial_weight_stdev == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, cfg.initial_weight_stdev).expect("validated stdev").sample(rng)
}

/// `c1 * (disjoint + excess) / N + c3 * mean |weight difference of matching genes|`.
pub fn compatibility_distance(a: &Genome, b: &Genome, cfg: &NeatConfig) -> f64 {
    let (ca, cb) = (a.connections(), b.connections());
    let (mut i, mut j) = (0, 0);
    let mut unmatched = 0usize;
    let mut matching = 0usize;
    let mut weight_diff = 0.0;
    while i < ca.len() && j < cb.len() {
        match ca[i].innovation.cmp(&cb[j].innovation) {
            std::cmp::Ordering::Equal => {
                weight_diff += (ca[i].weight - cb[j].weight).abs();
                matching += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                unmatched += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                unmatched += 1;
                j += 1;
            }
        }
    }
    unmatched += (ca.len() - i) + (cb.len() - j);
    let normalizer = match cfg.compatibility_normalizer {
        CompatibilityNormalizer::One => 1.0,
        CompatibilityNormalizer::LargerGenome => ca.len().max(cb.len()).max(1) as f64,
    };
    let mean_diff = if matching == 0 { 0.0 } else { weight_diff / matching as f64 };
    cfg.compatibility_disjoint_coefficient * unmatched as f64 / normalizer + cfg.compatibility_weight_coefficient * mean_diff
}

/// Versioned genome file: the NEAT configuration plus the genome's genes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenomeCheckpoint {
    pub format: String,
    pub version: u32,
    pub config: NeatConfig,
    pub genome: Genome,
}

impl GenomeCheckpoint {
    const FORMAT: &'static str = "seesaw-genome";

    pub fn new(config: NeatConfig, genome: Genome) -> Self {
        GenomeCheckpoint { format: Self::FORMAT.into(), version: GENOME_FORMAT_VERSION, config, genome }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, NeatError> {
        let ck: GenomeCheckpoint = serde_json::from_str(text).map_err(|e| NeatError::Format(e.to_string()))?;
        if ck.format != Self::FORMAT {
            return Err(NeatError::Format(format!("unexpected format tag {:?}", ck.format)));
        }
        if ck.version != GENOME_FORMAT_VERSION {
            return Err(NeatError::Format(format!("unsupported version {}", ck.version)));
        }
        ck.genome.validate()?;
        Ok(ck)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::Seed;

    /// Genome with one input, one output and the given (innovation, weight) genes,
    /// all between node 0 and node 1 or on fresh hidden nodes.
    pub(crate) fn chain_genome(genes: &[(u64, f64)]) -> Genome {
        let mut nodes = vec![NodeGene::new(NodeId(0), NodeKind::Input, 0.0), NodeGene::new(NodeId(1), NodeKind::Output, 0.0)];
        let mut conns = Vec::new();
        for &(inn, w) in genes {
            let hidden = NodeId(100 + inn as u32);
            nodes.push(NodeGene::new(hidden, NodeKind::Hidden, 0.0));
            conns.push(ConnectionGene { innovation: Innovation(inn), from: NodeId(0), to: hidden, weight: w, enabled: true });
        }
        Genome::from_genes(1, 1, nodes, conns).unwrap()
    }

    #[test]
    fn identical_genomes_have_zero_distance() {
        let cfg = NeatConfig::default();
        let mut reg = InnovationRegistry::new(3, 2);
        let g = Genome::initial(3, 2, &mut reg, &cfg, &mut Seed(1).rng());
        assert_eq!(compatibility_distance(&g, &g, &cfg), 0.0);
    }

    #[test]
    fn distance_counts_disjoint_and_excess() {
        let cfg = NeatConfig::default();
        let a = chain_genome(&[(1, 0.5), (2, 0.5), (3, 0.5)]);
        let b = chain_genome(&[(1, 0.5), (2, 0.5), (4, 0.5)]);
        assert!((compatibility_distance(&a, &b, &cfg) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn distance_weight_term() {
        let cfg = NeatConfig::default();
        let a = chain_genome(&[(1, 1.0), (2, 2.0)]);
        let b = chain_genome(&[(1, 2.0), (2, 4.0)]);
        assert!((compatibility_distance(&a, &b, &cfg) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn larger_genome_normalizer() {
        let cfg = NeatConfig { compatibility_normalizer: CompatibilityNormalizer::LargerGenome, ..Default::default() };
        let a = chain_genome(&[(1, 0.5), (2, 0.5), (3, 0.5)]);
        let b = chain_genome(&[(1, 0.5), (2, 0.5), (4, 0.5), (5, 0.5)]);
        assert!((compatibility_distance(&a, &b, &cfg) - 3.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn weight_vector_counts_enabled_connections_and_biases() {
        let n = |id, kind| NodeGene::new(NodeId(id), kind, 0.25);
        let c = |inn, from, to, enabled| ConnectionGene {
            innovation: Innovation(inn),
            from: NodeId(from),
            to: NodeId(to),
            weight: inn as f64,
            enabled,
        };
        let g = Genome::from_genes(
            1,
            1,
            vec![n(0, NodeKind::Input), n(1, NodeKind::Output), n(2, NodeKind::Hidden), n(3, NodeKind::Hidden)],
            vec![c(1, 0, 2, true), c(2, 2, 3, true), c(3, 3, 1, true), c(4, 0, 1, false)],
        )
        .unwrap();
        let v = g.extract_weight_vector();
        // 3 enabled weights + biases of 1 output and 2 hidden nodes
        assert_eq!(v.len(), 3 + 3);
        assert_eq!(&v[..3], &[1.0, 2.0, 3.0]);
        let cfg = NeatConfig::default();
        assert_eq!(g.apply_weight_vector(&v, &cfg).unwrap(), g);
        let mut big = v.clone();
        big[0] = 99.0;
        let clamped = g.apply_weight_vector(&big, &cfg).unwrap();
        assert_eq!(clamped.connections()[0].weight, 30.0);
        assert_eq!(clamped.connections()[3].weight, 4.0, "disabled genes are untouched");
        assert!(matches!(g.apply_weight_vector(&v[..5], &cfg), Err(NeatError::LengthMismatch { expected: 6, got: 5 })));
    }

    #[test]
    fn validation_catches_broken_invariants() {
        let nodes = vec![NodeGene::new(NodeId(0), NodeKind::Input, 0.0), NodeGene::new(NodeId(1), NodeKind::Output, 0.0)];
        let into_input =
            ConnectionGene { innovation: Innovation(0), from: NodeId(1), to: NodeId(0), weight: 1.0, enabled: true };
        assert!(Genome::from_genes(1, 1, nodes.clone(), vec![into_input]).is_err());
        let dangling =
            ConnectionGene { innovation: Innovation(0), from: NodeId(7), to: NodeId(1), weight: 1.0, enabled: true };
        assert!(Genome::from_genes(1, 1, nodes.clone(), vec![dangling]).is_err());
        let dup = |inn| ConnectionGene { innovation: Innovation(inn), from: NodeId(0), to: NodeId(1), weight: 1.0, enabled: true };
        assert!(Genome::from_genes(1, 1, nodes, vec![dup(0), dup(1)]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_and_version_check() {
        let cfg = NeatConfig::default();
        let mut reg = InnovationRegistry::new(4, 3);
        let g = Genome::initial(4, 3, &mut reg, &cfg, &mut Seed(5).rng());
        let text = GenomeCheckpoint::new(cfg.clone(), g.clone()).to_json();
        let back = GenomeCheckpoint::from_json(&text).unwrap();
        assert_eq!(back.genome, g);
        assert_eq!(back.config, cfg);
        let bumped = text.replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(GenomeCheckpoint::from_json(&bumped), Err(NeatError::Format(_))));
        // field order is part of the format
        let fmt = text.find("\"format\"").unwrap();
        let ver = text.find("\"version\"").unwrap();
        let conf = text.find("\"config\"").unwrap();
        let gen = text.find("\"genome\"").unwrap();
        assert!(fmt < ver && ver < conf && conf < gen);
    }
}
