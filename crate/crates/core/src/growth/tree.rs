//! Coding trees and retrieval.

use serde::{Deserialize, Serialize};

use crate::synapse::effective_strength;

use super::{GrowthError, InputPattern, Network, NeuronId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Neuron(CodingTree),
    /// A sensory line: input slot and line index within it.
    Line { slot: usize, line: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeBranch {
    /// Lower-layer slot this branch covers.
    pub lower_slot: usize,
    pub strength: f64,
    pub child: TreeNode,
}

/// The strongest synapse per receptive-field slot, followed down to the
/// input lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingTree {
    pub root: NeuronId,
    pub children: Vec<TreeBranch>,
}

impl CodingTree {
    /// `(input slot, line)` leaves in slot order.
    pub fn leaves(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out.sort_unstable();
        out
    }

    fn collect_leaves(&self, out: &mut Vec<(usize, usize)>) {
        for b in &self.children {
            match &b.child {
                TreeNode::Neuron(t) => t.collect_leaves(out),
                TreeNode::Line { slot, line } => out.push((*slot, *line)),
            }
        }
    }

    /// Every neuron in the tree, root first.
    pub fn neurons(&self) -> Vec<NeuronId> {
        let mut out = vec![self.root];
        for b in &self.children {
            if let TreeNode::Neuron(t) = &b.child {
                out.extend(t.neurons());
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|b| match &b.child {
                TreeNode::Neuron(t) => t.depth(),
                TreeNode::Line { .. } => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Winning coding neuron plus the input reconstructed from its tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub winner: Option<NeuronId>,
    pub reconstruction: InputPattern,
}

impl Network {
    pub fn coding_tree(&self, root: NeuronId) -> Result<CodingTree, GrowthError> {
        let unit = self.unit(root)?;
        if !unit.alive {
            return Err(GrowthError::DeadNeuron(root));
        }
        let lower = self.lower_slot_lines(root.layer);
        let mut children = Vec::new();
        for &lower_slot in &self.shapes[root.layer - 1].fields[unit.slot] {
            let lines = &lower[lower_slot];
            let best = unit
                .dendrites
                .iter()
                .filter(|d| lines.contains(&d.line))
                .map(|d| (d.line, effective_strength(&self.synapses[d.synapse])))
                .filter(|&(_, w)| w > 0.0)
                .fold(None, |best: Option<(usize, f64)>, (line, w)| match best {
                    Some((bl, bw)) if bw > w || (bw == w && bl < line) => Some((bl, bw)),
                    _ => Some((line, w)),
                });
            let Some((line, strength)) = best else { continue };
            let child = if root.layer == 1 {
                TreeNode::Line { slot: lower_slot, line: line - lines[0] }
            } else {
                let id = NeuronId { layer: root.layer - 1, index: line };
                if !self.unit(id)?.alive {
                    continue;
                }
                TreeNode::Neuron(self.coding_tree(id)?)
            };
            children.push(TreeBranch { lower_slot, strength, child });
        }
        Ok(CodingTree { root, children })
    }

    /// Finds the coding neuron for `pattern` and reconstructs the input it
    /// stands for by descending its coding tree.
    pub fn retrieve(&self, pattern: &InputPattern) -> Result<Retrieval, GrowthError> {
        let enc = self.encode(pattern)?;
        let mut values = vec![None; self.config.slot_sizes.len()];
        for id in enc.winners.iter().flatten() {
            for (slot, line) in self.coding_tree(*id)?.leaves() {
                values[slot] = Some(line);
            }
        }
        Ok(Retrieval { winner: enc.winner(), reconstruction: self.pattern(&values) })
    }
}
