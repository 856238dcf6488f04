// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Coupled-cell networks: typed directed multigraphs, colourings, quotients,
//! fibrations and feedforward lifts.
//!
//! Node ids are 1-based and contiguous. An arrow `from -> to` means that the
//! head node `to` receives input from the tail node `from`; each arrow carries
//! a type tag and a weight that is either numeric or a named parameter
//! resolved when a rate system is built.

mod balance;
mod builtin;
mod format;
mod iso;
mod lift;

pub use balance::{check_fibration, is_balanced, quotient};
pub(crate) use builtin::biped_pairs;
pub use builtin::{builtin, BuiltinNetwork, BUILTIN_NAMES};
pub use format::NetworkDoc;
pub use iso::{automorphisms, find_isomorphism, MAX_ISO_NODES};
pub use lift::{feedforward_lift, Lift, LiftLayout, LiftSpec, ModuleKind};

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    /// Zero-based position of this node in state vectors.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(i: usize) -> Self {
        NodeId(i + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Coupling strength of an arrow: a number, or a parameter name such as
/// `"alpha"` that is bound at simulation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Value(f64),
    Symbol(String),
}

impl Weight {
    pub fn symbol(name: &str) -> Self {
        Weight::Symbol(name.to_string())
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        match (self, other) {
            // +0.0 normalises -0.0
            (Weight::Value(a), Weight::Value(b)) => (a + 0.0).total_cmp(&(b + 0.0)),
            (Weight::Value(_), Weight::Symbol(_)) => Ordering::Less,
            (Weight::Symbol(_), Weight::Value(_)) => Ordering::Greater,
            (Weight::Symbol(a), Weight::Symbol(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Value(v) => write!(f, "{v}"),
            Weight::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrow {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(rename = "type")]
    pub kind: String,
    pub weight: Weight,
}

impl Arrow {
    pub fn new(from: usize, to: usize, kind: &str, weight: Weight) -> Self {
        Arrow {
            from: NodeId(from),
            to: NodeId(to),
            kind: kind.to_string(),
            weight,
        }
    }
}

/// Label of one input arrow as seen by its head: arrow type, weight and the
/// class (colour, or image under a node map) of its tail.
#[derive(Clone, Debug)]
pub(crate) struct InputLabel<'a> {
    kind: &'a str,
    weight: &'a Weight,
    tail_class: usize,
}

impl PartialEq for InputLabel<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for InputLabel<'_> {}

impl PartialOrd for InputLabel<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InputLabel<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(other.kind)
            .then_with(|| self.weight.cmp_key(other.weight))
            .then_with(|| self.tail_class.cmp(&other.tail_class))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    name: String,
    nodes: Vec<Node>,
    arrows: Vec<Arrow>,
}

impl Network {
    /// Builds a network, checking that node ids are exactly `1..=n` in order
    /// and that every arrow references existing nodes.
    pub fn new(name: impl Into<String>, nodes: Vec<Node>, arrows: Vec<Arrow>) -> Result<Self> {
        for (i, node) in nodes.iter().enumerate() {
            if node.id != NodeId::from_index(i) {
                return Err(Error::InvalidNetwork(format!(
                    "node ids must be contiguous from 1; found {} at position {}",
                    node.id,
                    i + 1
                )));
            }
        }
        let n = nodes.len();
        for a in &arrows {
            for end in [a.from, a.to] {
                if end.0 == 0 || end.0 > n {
                    return Err(Error::InvalidNetwork(format!(
                        "arrow {} -> {} references missing node {}",
                        a.from, a.to, end
                    )));
                }
            }
        }
        Ok(Network {
            name: name.into(),
            nodes,
            arrows,
        })
    }

    /// Network with `n` nodes of a single type.
    pub fn uniform(name: impl Into<String>, n: usize, kind: &str, arrows: Vec<Arrow>) -> Result<Self> {
        let nodes = (1..=n)
            .map(|i| Node {
                id: NodeId(i),
                kind: kind.to_string(),
            })
            .collect();
        Network::new(name, nodes, arrows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn kind(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].kind
    }

    /// Arrows whose head is `id`.
    pub fn inputs(&self, id: NodeId) -> impl Iterator<Item = &Arrow> + '_ {
        self.arrows.iter().filter(move |a| a.to == id)
    }

    /// Sorted input labels of `id`, with tails classified by `class_of`.
    pub(crate) fn input_signature<F>(&self, id: NodeId, class_of: F) -> Vec<InputLabel<'_>>
    where
        F: Fn(NodeId) -> usize,
    {
        let mut sig: Vec<_> = self
            .inputs(id)
            .map(|a| InputLabel {
                kind: &a.kind,
                weight: &a.weight,
                tail_class: class_of(a.from),
            })
            .collect();
        sig.sort();
        sig
    }

    /// True if some node of `targets` is reachable from some node of `sources`
    /// along arrows.
    pub fn has_path(&self, sources: &[NodeId], targets: &[NodeId]) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<NodeId> = sources.to_vec();
        for s in sources {
            seen[s.index()] = true;
        }
        while let Some(v) = stack.pop() {
            if targets.contains(&v) {
                return true;
            }
            for a in self.arrows.iter().filter(|a| a.from == v) {
                if !seen[a.to.index()] {
                    seen[a.to.index()] = true;
                    stack.push(a.to);
                }
            }
        }
        false
    }

    /// Replaces every weight by the result of `f`. Used to bind symbols.
    pub fn map_weights<F>(&self, mut f: F) -> Result<Network>
    where
        F: FnMut(&Weight) -> Result<Weight>,
    {
        let arrows = self
            .arrows
            .iter()
            .map(|a| {
                Ok(Arrow {
                    weight: f(&a.weight)?,
                    ..a.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Network {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            arrows,
        })
    }
}

/// Total assignment of colours `1..=k` to the nodes of a network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    colours: Vec<usize>,
}

impl Coloring {
    /// `assignment[i]` is the colour of node `i + 1`. Colours must cover
    /// `1..=k` with no gaps.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().copied().max().unwrap_or(0);
        let mut used = vec![false; k + 1];
        for &c in &assignment {
            if c == 0 {
                return Err(Error::InvalidColoring("colour ids start at 1".into()));
            }
            used[c] = true;
        }
        if let Some(missing) = (1..=k).find(|&c| !used[c]) {
            return Err(Error::InvalidColoring(format!("colour {missing} is unused")));
        }
        Ok(Coloring { colours: assignment })
    }

    /// Builds a colouring from clusters of node ids; clusters are numbered in
    /// the order given.
    pub fn from_classes(n: usize, classes: &[Vec<usize>]) -> Result<Self> {
        let mut colours = vec![0; n];
        for (c, class) in classes.iter().enumerate() {
            for &node in class {
                if node == 0 || node > n {
                    return Err(Error::InvalidColoring(format!("node {node} does not exist")));
                }
                if colours[node - 1] != 0 {
                    return Err(Error::InvalidColoring(format!("node {node} coloured twice")));
                }
                colours[node - 1] = c + 1;
            }
        }
        if let Some(i) = colours.iter().position(|&c| c == 0) {
            return Err(Error::InvalidColoring(format!("node {} has no colour", i + 1)));
        }
        Coloring::new(colours)
    }

    /// Every node its own colour.
    pub fn trivial(n: usize) -> Self {
        Coloring {
            colours: (1..=n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    pub fn colour(&self, id: NodeId) -> usize {
        self.colours[id.index()]
    }

    pub fn n_colours(&self) -> usize {
        self.colours.iter().copied().max().unwrap_or(0)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.colours
    }

    /// Node ids grouped by colour, colour 1 first.
    pub fn classes(&self) -> Vec<Vec<NodeId>> {
        let mut classes = vec![Vec::new(); self.n_colours()];
        for (i, &c) in self.colours.iter().enumerate() {
            classes[c - 1].push(NodeId::from_index(i));
        }
        classes
    }

    pub(crate) fn check_total_on(&self, net: &Network) -> Result<()> {
        if self.len() != net.len() {
            return Err(Error::InvalidColoring(format!(
                "colouring covers {} nodes but network has {}",
                self.len(),
                net.len()
            )));
        }
        Ok(())
    }
}

/// Map between the node sets of two networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeMap {
    pub source: String,
    pub target: String,
    pub mapping: Vec<NodeId>,
}

impl NodeMap {
    pub fn new(source: &Network, target: &Network, mapping: Vec<usize>) -> Self {
        NodeMap {
            source: source.name().to_string(),
            target: target.name().to_string(),
            mapping: mapping.into_iter().map(NodeId).collect(),
        }
    }

    pub fn identity(net: &Network) -> Self {
        NodeMap::new(net, net, (1..=net.len()).collect())
    }

    pub fn apply(&self, id: NodeId) -> NodeId {
        self.mapping[id.index()]
    }
}
