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

use super::{Arrow, Coloring, Network, Node, NodeId, NodeMap};
use crate::error::{Error, Result};

/// True iff same-coloured nodes have the same node type and colour-isomorphic
/// input sets (matching arrow type, weight and tail colour).
pub fn is_balanced(net: &Network, col: &Coloring) -> Result<bool> {
    col.check_total_on(net)?;
    for class in col.classes() {
        let first = class[0];
        let sig = net.input_signature(first, |t| col.colour(t));
        for &other in &class[1..] {
            if net.kind(other) != net.kind(first) {
                return Ok(false);
            }
            if net.input_signature(other, |t| col.colour(t)) != sig {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Collapses each colour class of a balanced colouring to a single node.
/// Quotient node `c` carries the inputs of any representative of colour `c`,
/// with tails replaced by their colours.
pub fn quotient(net: &Network, col: &Coloring) -> Result<(Network, NodeMap)> {
    if !is_balanced(net, col)? {
        return Err(Error::NotBalanced);
    }
    let classes = col.classes();
    let mut nodes = Vec::with_capacity(classes.len());
    let mut arrows = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        let rep = class[0];
        let id = NodeId::from_index(c);
        nodes.push(Node {
            id,
            kind: net.kind(rep).to_string(),
        });
        for a in net.inputs(rep) {
            arrows.push(Arrow {
                from: NodeId(col.colour(a.from)),
                to: id,
                kind: a.kind.clone(),
                weight: a.weight.clone(),
            });
        }
    }
    let q = Network::new(format!("{}/quotient", net.name()), nodes, arrows)?;
    let map = NodeMap::new(net, &q, col.assignment().to_vec());
    Ok((q, map))
}

/// True iff `map` preserves node types and sends the input set of every
/// source node bijectively onto the input set of its image, matching arrow
/// types and weights.
pub fn check_fibration(src: &Network, dst: &Network, map: &NodeMap) -> Result<bool> {
    if map.mapping.len() != src.len() {
        return Err(Error::InvalidNetwork(format!(
            "node map covers {} nodes but source has {}",
            map.mapping.len(),
            src.len()
        )));
    }
    if let Some(bad) = map.mapping.iter().find(|m| m.0 == 0 || m.0 > dst.len()) {
        return Err(Error::InvalidNetwork(format!("node map targets missing node {bad}")));
    }
    for v in src.node_ids() {
        let w = map.apply(v);
        if src.kind(v) != dst.kind(w) {
            return Ok(false);
        }
        let lhs = src.input_signature(v, |t| map.apply(t).0);
        let rhs = dst.input_signature(w, |t| t.0);
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}
