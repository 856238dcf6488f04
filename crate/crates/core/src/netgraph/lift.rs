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

use serde::{Deserialize, Serialize};

use super::{Arrow, Coloring, Network, Node, NodeId, Weight};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ModuleKind {
    /// Each module is one chain node. Module `k` copies CPG node
    /// `(k mod n) + 1`.
    SingleNode,
    /// Each module is a pair of chain nodes joined by lateral arrows. Module
    /// `k` copies `pairs[k mod pairs.len()]`. `lateral` replaces the weight of
    /// the within-pair arrows; `None` keeps the CPG weight.
    TwoNodeLateral {
        pairs: Vec<(NodeId, NodeId)>,
        lateral: Option<Weight>,
    },
}

impl ModuleKind {
    pub fn module_size(&self) -> usize {
        match self {
            ModuleKind::SingleNode => 1,
            ModuleKind::TwoNodeLateral { .. } => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LiftSpec {
    pub cpg: Network,
    pub module: ModuleKind,
    pub n_modules: usize,
}

/// Where the chain nodes of a lift sit and which CPG node each copies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftLayout {
    pub cpg_size: usize,
    /// Chain node ids of each module, in feedforward order.
    pub modules: Vec<Vec<NodeId>>,
    /// CPG node synchronous with each node of the lift (CPG nodes map to
    /// themselves).
    pub counterpart: Vec<NodeId>,
}

impl LiftLayout {
    pub fn counterpart_of(&self, id: NodeId) -> NodeId {
        self.counterpart[id.index()]
    }

    pub fn n_nodes(&self) -> usize {
        self.counterpart.len()
    }
}

#[derive(Clone, Debug)]
pub struct Lift {
    pub network: Network,
    pub coloring: Coloring,
    pub layout: LiftLayout,
}

fn validate(spec: &LiftSpec) -> Result<()> {
    let n = spec.cpg.len();
    if n == 0 {
        return Err(Error::InvalidNetwork("CPG has no nodes".into()));
    }
    if let ModuleKind::TwoNodeLateral { pairs, .. } = &spec.module {
        if pairs.is_empty() && spec.n_modules > 0 {
            return Err(Error::InvalidNetwork("two-node module needs at least one pair".into()));
        }
        for &(p, q) in pairs {
            if p == q || p.0 == 0 || q.0 == 0 || p.0 > n || q.0 > n {
                return Err(Error::InvalidNetwork(format!("invalid lateral pair ({p}, {q})")));
            }
        }
    }
    Ok(())
}

/// Appends a chain of modules to the CPG. Every chain node copies the input
/// set of its CPG counterpart: each input arrow is redrawn from the most
/// recent earlier node of the same colour (the CPG is the first column), and
/// for two-node modules the arrows between the pair are redrawn inside the
/// module.
pub fn feedforward_lift(spec: &LiftSpec) -> Result<Lift> {
    validate(spec)?;
    let cpg = &spec.cpg;
    let n = cpg.len();
    let m = spec.n_modules;
    let size = spec.module.module_size();
    let total = n + m * size;

    let mut counterpart: Vec<NodeId> = cpg.node_ids().collect();
    counterpart.resize(total, NodeId(0));
    let mut modules = Vec::with_capacity(m);
    for k in 0..m {
        let ids = match &spec.module {
            ModuleKind::SingleNode => {
                let id = NodeId(n + 1 + k);
                counterpart[id.index()] = NodeId(k % n + 1);
                vec![id]
            }
            ModuleKind::TwoNodeLateral { pairs, .. } => {
                let (p, q) = pairs[k % pairs.len()];
                let a = NodeId(n + 1 + k);
                let b = NodeId(n + 1 + m + k);
                counterpart[a.index()] = p;
                counterpart[b.index()] = q;
                vec![a, b]
            }
        };
        modules.push(ids);
    }

    let mut arrows: Vec<Arrow> = cpg.arrows().to_vec();
    // latest[c] is the most recent node synchronous with CPG node c + 1.
    let mut latest: Vec<NodeId> = cpg.node_ids().collect();
    for ids in &modules {
        for &v in ids {
            let c = counterpart[v.index()];
            for a in cpg.inputs(c) {
                let within = ids.iter().find(|&&w| w != v && counterpart[w.index()] == a.from);
                let (from, weight) = match (within, &spec.module) {
                    (Some(&w), ModuleKind::TwoNodeLateral { lateral, .. }) => {
                        (w, lateral.clone().unwrap_or_else(|| a.weight.clone()))
                    }
                    _ => (latest[a.from.index()], a.weight.clone()),
                };
                arrows.push(Arrow {
                    from,
                    to: v,
                    kind: a.kind.clone(),
                    weight,
                });
            }
        }
        for &v in ids {
            latest[counterpart[v.index()].index()] = v;
        }
    }

    let nodes = (0..total)
        .map(|i| Node {
            id: NodeId::from_index(i),
            kind: cpg.kind(counterpart[i]).to_string(),
        })
        .collect();
    let network = Network::new(format!("{}/lift", cpg.name()), nodes, arrows)?;
    let coloring = Coloring::new(counterpart.iter().map(|c| c.0).collect())?;
    Ok(Lift {
        network,
        coloring,
        layout: LiftLayout {
            cpg_size: n,
            modules,
            counterpart,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{builtin, is_balanced};
    use proptest::prelude::*;

    fn biped() -> Network {
        builtin("biped4").unwrap().network
    }

    fn lateral_pairs() -> ModuleKind {
        ModuleKind::TwoNodeLateral {
            pairs: vec![(NodeId(1), NodeId(3)), (NodeId(2), NodeId(4))],
            lateral: None,
        }
    }

    #[test]
    fn zero_modules_returns_cpg() {
        let lift = feedforward_lift(&LiftSpec {
            cpg: biped(),
            module: ModuleKind::SingleNode,
            n_modules: 0,
        })
        .unwrap();
        assert_eq!(lift.network.arrows(), biped().arrows());
        assert_eq!(lift.coloring, Coloring::trivial(4));
    }

    #[test]
    fn single_node_lift_of_biped() {
        let lift = feedforward_lift(&LiftSpec {
            cpg: biped(),
            module: ModuleKind::SingleNode,
            n_modules: 4,
        })
        .unwrap();
        assert_eq!(lift.network.len(), 8);
        assert!(is_balanced(&lift.network, &lift.coloring).unwrap());
        let chain: Vec<_> = (5..=8).map(NodeId).collect();
        let cpg: Vec<_> = (1..=4).map(NodeId).collect();
        assert!(!lift.network.has_path(&chain, &cpg));
        // node 5 copies node 1 and reads only the CPG
        let tails: Vec<_> = lift.network.inputs(NodeId(5)).map(|a| a.from.0).collect();
        assert_eq!(tails, vec![4, 3, 2]);
    }

    #[test]
    fn lateral_lift_of_biped() {
        let lift = feedforward_lift(&LiftSpec {
            cpg: biped(),
            module: ModuleKind::TwoNodeLateral {
                pairs: vec![(NodeId(1), NodeId(3)), (NodeId(2), NodeId(4))],
                lateral: Some(Weight::Value(0.3)),
            },
            n_modules: 2,
        })
        .unwrap();
        assert_eq!(lift.network.len(), 8);
        assert_eq!(
            lift.layout.modules,
            vec![vec![NodeId(5), NodeId(7)], vec![NodeId(6), NodeId(8)]]
        );
        let lat: Vec<_> = lift.network.inputs(NodeId(5)).filter(|a| a.kind == "lateral").collect();
        assert_eq!(lat.len(), 1);
        assert_eq!(lat[0].from, NodeId(7));
        assert_eq!(lat[0].weight, Weight::Value(0.3));
        let chain: Vec<_> = (5..=8).map(NodeId).collect();
        let cpg: Vec<_> = (1..=4).map(NodeId).collect();
        assert!(!lift.network.has_path(&chain, &cpg));
    }

    #[test]
    fn bad_pair_is_rejected() {
        let spec = LiftSpec {
            cpg: biped(),
            module: ModuleKind::TwoNodeLateral {
                pairs: vec![(NodeId(1), NodeId(1))],
                lateral: None,
            },
            n_modules: 1,
        };
        assert!(feedforward_lift(&spec).is_err());
    }

    fn arb_cpg() -> impl Strategy<Value = Network> {
        (2usize..=6)
            .prop_flat_map(|n| {
                let arrow = (1..=n, 1..=n, 0usize..2, prop_oneof![Just(-1.0), Just(0.5), Just(2.0)]);
                (Just(n), proptest::collection::vec(arrow, 0..12))
            })
            .prop_map(|(n, arrows)| {
                let arrows = arrows
                    .into_iter()
                    .filter(|(f, t, _, _)| f != t)
                    .map(|(f, t, k, w)| Arrow::new(f, t, ["p", "q"][k], Weight::Value(w)))
                    .collect();
                Network::uniform("random", n, "std", arrows).unwrap()
            })
    }

    proptest! {
        #[test]
        fn lifts_are_balanced(cpg in arb_cpg(), m in 0usize..5, lateral in any::<bool>()) {
            let n = cpg.len();
            let module = if lateral {
                ModuleKind::TwoNodeLateral { pairs: vec![(NodeId(1), NodeId(2)), (NodeId(n), NodeId(1))], lateral: None }
            } else {
                ModuleKind::SingleNode
            };
            let size = module.module_size();
            let lift = feedforward_lift(&LiftSpec { cpg, module, n_modules: m }).unwrap();
            prop_assert_eq!(lift.network.len(), n + m * size);
            prop_assert!(is_balanced(&lift.network, &lift.coloring).unwrap());
            let chain: Vec<_> = (n + 1..=lift.network.len()).map(NodeId).collect();
            let cpg_ids: Vec<_> = (1..=n).map(NodeId).collect();
            prop_assert!(!lift.network.has_path(&chain, &cpg_ids));
        }

        #[test]
        fn lift_quotient_fibration_round_trip(cpg in arb_cpg(), m in 0usize..4) {
            let lift = feedforward_lift(&LiftSpec { cpg: cpg.clone(), module: ModuleKind::SingleNode, n_modules: m }).unwrap();
            let (q, map) = crate::netgraph::quotient(&lift.network, &lift.coloring).unwrap();
            prop_assert!(crate::netgraph::check_fibration(&lift.network, &q, &map).unwrap());
            prop_assert!(crate::netgraph::find_isomorphism(&q, &cpg).unwrap().is_some());
        }
    }

    #[test]
    fn lateral_pairs_default_keeps_weights_balanced() {
        let lift = feedforward_lift(&LiftSpec {
            cpg: biped(),
            module: lateral_pairs(),
            n_modules: 3,
        })
        .unwrap();
        assert!(is_balanced(&lift.network, &lift.coloring).unwrap());
    }
}
