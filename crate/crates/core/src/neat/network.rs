use std::collections::{BTreeMap, BTreeSet};

use super::{Genome, NeatError, NodeId, NodeKind};

/// Standard logistic function.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Copy, Debug)]
enum Source {
    Input(usize),
    Slot(usize),
}

#[derive(Clone, Debug)]
struct Slot {
    bias: f64,
    incoming: Vec<(Source, f64)>,
}

/// A genome compiled for repeated stepping.
///
/// Non-input nodes are updated in place in a fixed order (topological where
/// the enabled graph allows it, lowest id first when a cycle blocks
/// progress). A node therefore reads the current-step value of every source
/// already updated and the previous-step value of the rest, which covers
/// self-loops and back edges.
#[derive(Clone, Debug)]
pub struct Network {
    num_inputs: usize,
    slots: Vec<Slot>,
    outputs: Vec<usize>,
}

/// Node values carried between steps; all zeros at episode start.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    values: Vec<f64>,
}

impl NetworkState {
    pub fn reset(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Network {
    pub fn new(genome: &Genome) -> Network {
        let compute: Vec<NodeId> = genome.nodes().iter().filter(|n| n.kind != NodeKind::Input).map(|n| n.id).collect();
        let order = evaluation_order(genome, &compute);
        let slot_of: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let input_of: BTreeMap<NodeId, usize> = genome.input_ids().enumerate().map(|(i, id)| (id, i)).collect();

        let mut slots: Vec<Slot> = order
            .iter()
            .map(|&id| Slot { bias: genome.node(id).map_or(0.0, |n| n.bias), incoming: Vec::new() })
            .collect();
        for c in genome.connections().iter().filter(|c| c.enabled) {
            let src = match input_of.get(&c.from) {
                Some(&i) => Source::Input(i),
                None => Source::Slot(slot_of[&c.from]),
            };
            slots[slot_of[&c.to]].incoming.push((src, c.weight));
        }
        let outputs = genome.output_ids().map(|id| slot_of[&id]).collect();
        Network { num_inputs: genome.num_inputs(), slots, outputs }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn initial_state(&self) -> NetworkState {
        NetworkState { values: vec![0.0; self.slots.len()] }
    }

    /// One synchronous step; returns the output activations in output-id order.
    pub fn activate(&self, inputs: &[f64], state: &mut NetworkState) -> Result<Vec<f64>, NeatError> {
        if inputs.len() != self.num_inputs {
            return Err(NeatError::ShapeMismatch { expected: self.num_inputs, got: inputs.len() });
        }
        debug_assert_eq!(state.values.len(), self.slots.len());
        for (i, slot) in self.slots.iter().enumerate() {
            let mut sum = slot.bias;
            for &(src, w) in &slot.incoming {
                sum += w * match src {
                    Source::Input(k) => inputs[k],
                    Source::Slot(k) => state.values[k],
                };
            }
            state.values[i] = sigmoid(sum);
        }
        Ok(self.outputs.iter().map(|&k| state.values[k]).collect())
    }
}

/// Convenience wrapper that compiles `genome` and performs one step.
pub fn activate(genome: &Genome, inputs: &[f64], state: &mut NetworkState) -> Result<Vec<f64>, NeatError> {
    Network::new(genome).activate(inputs, state)
}

fn evaluation_order(genome: &Genome, compute: &[NodeId]) -> Vec<NodeId> {
    let members: BTreeSet<NodeId> = compute.iter().copied().collect();
    let mut preds: BTreeMap<NodeId, BTreeSet<NodeId>> = compute.iter().map(|&id| (id, BTreeSet::new())).collect();
    let mut succs: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for c in genome.connections().iter().filter(|c| c.enabled) {
        if c.from != c.to && members.contains(&c.from) && preds.get_mut(&c.to).is_some_and(|p| p.insert(c.from)) {
            succs.entry(c.from).or_default().push(c.to);
        }
    }
    let mut ready: BTreeSet<NodeId> = preds.iter().filter(|(_, p)| p.is_empty()).map(|(&id, _)| id).collect();
    let mut remaining: BTreeSet<NodeId> = members;
    let mut order = Vec::with_capacity(compute.len());
    while !remaining.is_empty() {
        let next = match ready.pop_first() {
            Some(id) => id,
            // cycle: break it at the lowest remaining id
            None => *remaining.first().expect("nonempty"),
        };
        remaining.remove(&next);
        order.push(next);
        for &s in succs.get(&next).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(p) = preds.get_mut(&s) {
                p.remove(&next);
                if p.is_empty() && remaining.contains(&s) {
                    ready.insert(s);
                }
            }
        }
    }
    order
}
