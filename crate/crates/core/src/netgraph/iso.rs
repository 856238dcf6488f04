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

//! Brute-force isomorphism search for the small networks used here.

use std::cmp::Ordering;

use super::{Network, NodeId, Weight};
use crate::error::{Error, Result};

pub const MAX_ISO_NODES: usize = 10;

type ArrowKey<'a> = (usize, usize, &'a str, &'a Weight);

fn cmp_arrow(x: &ArrowKey<'_>, y: &ArrowKey<'_>) -> Ordering {
    x.0.cmp(&y.0)
        .then(x.1.cmp(&y.1))
        .then(x.2.cmp(y.2))
        .then_with(|| x.3.cmp_key(y.3))
}

fn sorted_arrows<'a>(net: &'a Network, perm: &[usize]) -> Vec<ArrowKey<'a>> {
    let mut v: Vec<_> = net
        .arrows()
        .iter()
        .map(|a| (perm[a.from.index()], perm[a.to.index()], a.kind.as_str(), &a.weight))
        .collect();
    v.sort_by(cmp_arrow);
    v
}

/// Permutation-invariant fingerprint of a node used to prune the search.
fn fingerprint(net: &Network, v: NodeId) -> (String, usize, Vec<String>) {
    let out = net.arrows().iter().filter(|a| a.from == v).count();
    let mut ins: Vec<String> = net.inputs(v).map(|a| format!("{}:{}", a.kind, a.weight)).collect();
    ins.sort();
    (net.kind(v).to_string(), out, ins)
}

fn search<F>(a: &Network, b: &Network, mut accept: F) -> Result<()>
where
    F: FnMut(&[usize]) -> bool,
{
    let n = a.len();
    if n > MAX_ISO_NODES || b.len() > MAX_ISO_NODES {
        return Err(Error::InvalidNetwork(format!(
            "isomorphism search is limited to {MAX_ISO_NODES} nodes"
        )));
    }
    if n != b.len() || a.arrows().len() != b.arrows().len() {
        return Ok(());
    }
    let fa: Vec<_> = a.node_ids().map(|v| fingerprint(a, v)).collect();
    let fb: Vec<_> = b.node_ids().map(|v| fingerprint(b, v)).collect();
    let target = sorted_arrows(b, &(0..n).collect::<Vec<_>>());
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];

    // Returns true to stop the search.
    #[allow(clippy::too_many_arguments)]
    fn rec<F: FnMut(&[usize]) -> bool>(
        i: usize,
        a: &Network,
        fa: &[(String, usize, Vec<String>)],
        fb: &[(String, usize, Vec<String>)],
        target: &[ArrowKey<'_>],
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        accept: &mut F,
    ) -> bool {
        let n = perm.len();
        if i == n {
            let mapped = sorted_arrows(a, perm);
            let same = mapped.len() == target.len()
                && mapped
                    .iter()
                    .zip(target)
                    .all(|(x, y)| cmp_arrow(x, y) == Ordering::Equal);
            return same && accept(perm);
        }
        for j in 0..n {
            if used[j] || fa[i] != fb[j] {
                continue;
            }
            used[j] = true;
            perm[i] = j;
            if rec(i + 1, a, fa, fb, target, perm, used, accept) {
                return true;
            }
            used[j] = false;
        }
        false
    }

    rec(0, a, &fa, &fb, &target, &mut perm, &mut used, &mut accept);
    Ok(())
}

/// Finds a bijection `p` with `p[i]` the image of node `i + 1` that carries
/// nodes, node types and the arrow multiset of `a` onto those of `b`.
pub fn find_isomorphism(a: &Network, b: &Network) -> Result<Option<Vec<NodeId>>> {
    let mut found = None;
    search(a, b, |p| {
        found = Some(p.iter().map(|&j| NodeId::from_index(j)).collect());
        true
    })?;
    Ok(found)
}

/// All automorphisms of `net`, identity included.
pub fn automorphisms(net: &Network) -> Result<Vec<Vec<NodeId>>> {
    let mut all = Vec::new();
    search(net, net, |p| {
        all.push(p.iter().map(|&j| NodeId::from_index(j)).collect());
        false
    })?;
    Ok(all)
}
