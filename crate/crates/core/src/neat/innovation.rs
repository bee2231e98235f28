use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Genome, Innovation, NodeId};

/// Run-wide historical markings.
///
/// A node pair keeps the innovation number it was first given for the whole
/// run, and splitting the same connection yields the same hidden node id, so
/// genomes that make the same structural change line up during crossover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RegistryRecord", into = "RegistryRecord")]
pub struct InnovationRegistry {
    pairs: BTreeMap<(NodeId, NodeId), Innovation>,
    splits: BTreeMap<Innovation, NodeId>,
    next_innovation: u64,
    next_node: u32,
}

impl InnovationRegistry {
    pub fn new(num_inputs: usize, num_outputs: usize) -> Self {
        InnovationRegistry {
            pairs: BTreeMap::new(),
            splits: BTreeMap::new(),
            next_innovation: 0,
            next_node: (num_inputs + num_outputs) as u32,
        }
    }

    /// Innovation number for the connection `from -> to`.
    pub fn connection(&mut self, from: NodeId, to: NodeId) -> Innovation {
        let next = &mut self.next_innovation;
        *self.pairs.entry((from, to)).or_insert_with(|| {
            let inn = Innovation(*next);
            *next += 1;
            inn
        })
    }

    /// Hidden node introduced by splitting connection `conn` in `genome`.
    ///
    /// Reuses the id recorded for this split unless the genome already owns
    /// that node (a re-split after re-enabling), in which case a fresh id is issued.
    pub fn split_node(&mut self, conn: Innovation, genome: &Genome) -> NodeId {
        if let Some(&id) = self.splits.get(&conn) {
            if !genome.contains_node(id) {
                return id;
            }
            return self.fresh_node();
        }
        let id = self.fresh_node();
        self.splits.insert(conn, id);
        id
    }

    pub fn fresh_node(&mut self) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        id
    }

    pub fn innovation_count(&self) -> u64 {
        self.next_innovation
    }

    pub fn lookup(&self, from: NodeId, to: NodeId) -> Option<Innovation> {
        self.pairs.get(&(from, to)).copied()
    }
}

#[derive(Serialize, Deserialize)]
struct RegistryRecord {
    next_innovation: u64,
    next_node: u32,
    /// `[from, to, innovation]`
    pairs: Vec<(u32, u32, u64)>,
    /// `[connection innovation, node]`
    splits: Vec<(u64, u32)>,
}

impl From<InnovationRegistry> for RegistryRecord {
    fn from(r: InnovationRegistry) -> Self {
        RegistryRecord {
            next_innovation: r.next_innovation,
            next_node: r.next_node,
            pairs: r.pairs.iter().map(|(&(f, t), &i)| (f.0, t.0, i.0)).collect(),
            splits: r.splits.iter().map(|(&c, &n)| (c.0, n.0)).collect(),
        }
    }
}

impl From<RegistryRecord> for InnovationRegistry {
    fn from(r: RegistryRecord) -> Self {
        InnovationRegistry {
            pairs: r.pairs.into_iter().map(|(f, t, i)| ((NodeId(f), NodeId(t)), Innovation(i))).collect(),
            splits: r.splits.into_iter().map(|(c, n)| (Innovation(c), NodeId(n))).collect(),
            next_innovation: r.next_innovation,
            next_node: r.next_node,
        }
    }
}
