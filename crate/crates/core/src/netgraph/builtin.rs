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

use super::{feedforward_lift, Arrow, Coloring, LiftLayout, LiftSpec, ModuleKind, Network, NodeId, Weight};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: &[&str] = &[
    "ring3",
    "chain7",
    "biped4",
    "biped-ff(k)",
    "biped-lateral(k)",
    "five-node",
];

/// A catalogued network with its default colouring, plus the lift layout
/// when the network is a lift of a CPG.
#[derive(Clone, Debug)]
pub struct BuiltinNetwork {
    pub network: Network,
    pub coloring: Coloring,
    pub layout: Option<LiftLayout>,
    pub cpg: Option<Network>,
}

impl BuiltinNetwork {
    fn plain(network: Network) -> Self {
        let n = network.len();
        BuiltinNetwork {
            network,
            coloring: Coloring::trivial(n),
            layout: None,
            cpg: None,
        }
    }
}

fn ring3() -> Network {
    let arrows = [(3, 1), (1, 2), (2, 3)]
        .into_iter()
        .map(|(f, t)| Arrow::new(f, t, "ring", Weight::symbol("alpha")))
        .collect();
    Network::uniform("ring3", 3, "std", arrows).expect("ring3 is well formed")
}

const BIPED_KINDS: [(&str, &str); 3] = [("diag", "alpha"), ("lateral", "beta"), ("medial", "gamma")];

/// Builds a network from per-node (diagonal, lateral, medial) tails.
fn biped_like(name: &str, tails: &[[usize; 3]]) -> Network {
    let mut arrows = Vec::with_capacity(3 * tails.len());
    for (i, row) in tails.iter().enumerate() {
        for (&from, (kind, w)) in row.iter().zip(BIPED_KINDS) {
            arrows.push(Arrow::new(from, i + 1, kind, Weight::symbol(w)));
        }
    }
    Network::uniform(name, tails.len(), "std", arrows).expect("builtin is well formed")
}

fn biped4() -> Network {
    biped_like("biped4", &[[4, 3, 2], [3, 4, 1], [2, 1, 4], [1, 2, 3]])
}

fn five_node() -> Network {
    biped_like("five-node", &[[4, 3, 2], [3, 4, 1], [2, 1, 4], [5, 2, 3], [4, 3, 2]])
}

pub(crate) fn biped_pairs() -> Vec<(NodeId, NodeId)> {
    vec![(NodeId(1), NodeId(3)), (NodeId(2), NodeId(4))]
}

fn lift_of(name: String, cpg: Network, module: ModuleKind, n_modules: usize) -> Result<BuiltinNetwork> {
    let lift = feedforward_lift(&LiftSpec {
        cpg: cpg.clone(),
        module,
        n_modules,
    })?;
    Ok(BuiltinNetwork {
        network: lift.network.with_name(name),
        coloring: lift.coloring,
        layout: Some(lift.layout),
        cpg: Some(cpg),
    })
}

/// Parses `base(k)`, `base:k` or plain `base` (k = 1).
fn parse_count(name: &str, base: &str) -> Option<Result<usize>> {
    let rest = name.strip_prefix(base)?;
    if rest.is_empty() {
        return Some(Ok(1));
    }
    let digits = rest
        .strip_prefix(':')
        .or_else(|| rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')))?;
    Some(
        digits
            .trim()
            .parse()
            .map_err(|_| Error::UnknownNetwork(name.to_string())),
    )
}

/// Looks up a catalogued network by name.
pub fn builtin(name: &str) -> Result<BuiltinNetwork> {
    match name {
        "ring3" => return Ok(BuiltinNetwork::plain(ring3())),
        "biped4" => return Ok(BuiltinNetwork::plain(biped4())),
        "chain7" => return lift_of("chain7".into(), ring3(), ModuleKind::SingleNode, 4),
        "five-node" => {
            let network = five_node();
            let coloring = Coloring::from_classes(5, &[vec![1, 5], vec![2], vec![3], vec![4]])?;
            return Ok(BuiltinNetwork {
                network,
                coloring,
                layout: None,
                cpg: None,
            });
        }
        _ => {}
    }
    if let Some(k) = parse_count(name, "biped-ff") {
        let k = k?;
        return lift_of(format!("biped-ff({k})"), biped4(), ModuleKind::SingleNode, k);
    }
    if let Some(k) = parse_count(name, "biped-lateral") {
        let k = k?;
        let module = ModuleKind::TwoNodeLateral {
            pairs: biped_pairs(),
            lateral: None,
        };
        return lift_of(format!("biped-lateral({k})"), biped4(), module, k);
    }
    Err(Error::UnknownNetwork(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tails(net: &Network, v: usize) -> Vec<usize> {
        net.inputs(NodeId(v)).map(|a| a.from.0).collect()
    }

    #[test]
    fn chain7_wiring() {
        let c = builtin("chain7").unwrap();
        assert_eq!(c.network.len(), 7);
        assert_eq!(tails(&c.network, 1), vec![3]);
        for v in 2..=7 {
            assert_eq!(tails(&c.network, v), vec![v - 1], "node {v}");
        }
        assert_eq!(c.coloring.assignment(), &[1, 2, 3, 1, 2, 3, 1]);
    }

    #[test]
    fn biped4_inputs() {
        let b = builtin("biped4").unwrap().network;
        assert_eq!(b.len(), 4);
        for v in b.node_ids() {
            let kinds: Vec<_> = b.inputs(v).map(|a| a.kind.as_str()).collect();
            assert_eq!(kinds, vec!["diag", "lateral", "medial"]);
        }
    }

    #[test]
    fn five_node_unique_arrows() {
        let f = builtin("five-node").unwrap().network;
        assert_eq!(f.len(), 5);
        let is_uni = |from: usize, to: usize| {
            let kind = &f
                .arrows()
                .iter()
                .find(|a| a.from.0 == from && a.to.0 == to)
                .unwrap()
                .kind;
            !f.arrows()
                .iter()
                .any(|a| a.from.0 == to && a.to.0 == from && &a.kind == kind)
        };
        assert!(is_uni(2, 5));
        assert!(is_uni(3, 5));
        assert!(is_uni(4, 1));
    }

    #[test]
    fn parametrised_names() {
        assert_eq!(builtin("biped-ff(3)").unwrap().network.len(), 7);
        assert_eq!(builtin("biped-ff:2").unwrap().network.len(), 6);
        assert_eq!(builtin("biped-ff").unwrap().network.len(), 5);
        assert_eq!(builtin("biped-lateral(2)").unwrap().network.len(), 8);
    }

    #[test]
    fn unknown_names() {
        for name in ["chain8", "biped-ff(x)", "biped-ffx", ""] {
            assert!(matches!(builtin(name), Err(Error::UnknownNetwork(_))), "{name}");
        }
    }
}
