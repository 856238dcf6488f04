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

//! Splitting a lift's monodromy into its CPG and per-module transverse
//! blocks.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{eig, Block, MonodromyResult, MultiplierSet};
use crate::error::{Error, Result};
use crate::netgraph::LiftLayout;

/// Largest relative modulus difference between two multisets matched in
/// order of decreasing modulus; `None` when the sizes differ.
pub fn compare_multisets(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let sorted = |v: &[Complex64]| {
        let mut m: Vec<f64> = v.iter().map(|z| z.norm()).collect();
        m.sort_by(|x, y| y.total_cmp(x));
        m
    };
    let (a, b) = (sorted(a), sorted(b));
    Some(a.iter().zip(&b).fold(0.0, |worst: f64, (x, y)| {
        let scale = x.max(*y);
        if scale == 0.0 {
            worst
        } else {
            worst.max((x - y).abs() / scale)
        }
    }))
}

#[derive(Clone, Debug)]
pub struct SplitReport {
    pub set: MultiplierSet,
    /// Largest relative modulus gap between a module's transverse
    /// multipliers and those of module 1.
    pub module_spread: f64,
    /// Largest entry of the blocks above the diagonal, relative to the
    /// largest entry of the transformed matrix.
    pub coupling_residual: f64,
}

impl SplitReport {
    pub fn repeats(&self, rel_tol: f64) -> bool {
        self.module_spread <= rel_tol
    }
}

/// Changes to coordinates measuring each chain node's deviation from its
/// CPG counterpart, checks that the monodromy is block lower triangular in
/// feedforward order (CPG, module 1, module 2, ...), and takes the
/// eigenvalues of each diagonal block.
pub fn split_multipliers(full: &MonodromyResult, layout: &LiftLayout, struct_tol: f64) -> Result<SplitReport> {
    let n = layout.n_nodes();
    let d = 2 * n;
    if full.dim() != d {
        return Err(Error::StructureMismatch(format!(
            "monodromy has dimension {} but the lift needs {d}",
            full.dim()
        )));
    }
    // y = P x with P = I - E, where E copies counterpart coordinates into
    // chain rows; E^2 = 0, so P^{-1} = I + E.
    let mut e = DMatrix::zeros(d, d);
    for ids in &layout.modules {
        for v in ids {
            let c = layout.counterpart_of(*v).index();
            let i = v.index();
            if c >= layout.cpg_size {
                return Err(Error::StructureMismatch(format!("node {v} does not copy a CPG node")));
            }
            e[(i, c)] = 1.0;
            e[(n + i, n + c)] = 1.0;
        }
    }
    let id = DMatrix::<f64>::identity(d, d);
    let y = (&id - &e) * &full.matrix * (&id + &e);

    let mut blocks: Vec<(Block, Vec<usize>)> = Vec::new();
    let cpg: Vec<usize> = (0..layout.cpg_size).chain(n..n + layout.cpg_size).collect();
    blocks.push((Block::Cpg, cpg));
    for (k, ids) in layout.modules.iter().enumerate() {
        let mut rows: Vec<usize> = ids.iter().map(|v| v.index()).collect();
        rows.extend(ids.iter().map(|v| n + v.index()));
        blocks.push((Block::Transverse(k + 1), rows));
    }

    let scale = y.amax().max(f64::MIN_POSITIVE);
    let mut residual: f64 = 0.0;
    for (a, (_, rows)) in blocks.iter().enumerate() {
        for (_, cols) in &blocks[a + 1..] {
            for &i in rows {
                for &j in cols {
                    residual = residual.max(y[(i, j)].abs() / scale);
                }
            }
        }
    }
    if residual > struct_tol {
        return Err(Error::StructureMismatch(format!(
            "monodromy is not block triangular in feedforward order (residual {residual:.3e})"
        )));
    }

    let mut set = MultiplierSet::default();
    let mut module_sets: Vec<Vec<Complex64>> = Vec::new();
    for (block, rows) in &blocks {
        let sub = DMatrix::from_fn(rows.len(), rows.len(), |i, j| y[(rows[i], rows[j])]);
        let ev = eig(&sub)?;
        if *block != Block::Cpg {
            module_sets.push(ev.clone());
        }
        set.extend(ev, *block);
    }
    let module_spread = module_sets
        .iter()
        .skip(1)
        .map(|m| compare_multisets(m, &module_sets[0]).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    Ok(SplitReport {
        set,
        module_spread,
        coupling_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{monodromy, transverse_monodromy_1node};
    use crate::netgraph::builtin;
    use crate::orbit::{find_orbit, random_state, OrbitConfig};
    use crate::ratemodel::{RateParams, RateSystem};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn multiset_comparison() {
        assert_eq!(compare_multisets(&[c(1.0), c(0.5)], &[c(0.5), c(1.0)]), Some(0.0));
        assert!(compare_multisets(&[c(1.0)], &[c(1.0), c(2.0)]).is_none());
        let d = compare_multisets(&[c(1.0), c(0.5)], &[c(1.0), c(0.505)]).unwrap();
        assert!((d - 0.005 / 0.505).abs() < 1e-12);
    }

    fn lift_report(name: &str) -> (SplitReport, Vec<Complex64>, Vec<Complex64>) {
        let b = builtin(name).unwrap();
        let p = RateParams::biped(0.67, 1.8, 1.1, 0.5, 0.6, 0.8);
        let sys = RateSystem::new(&b.network, &p).unwrap();
        let cpg_sys = RateSystem::new(b.cpg.as_ref().unwrap(), &p).unwrap();
        let cfg = OrbitConfig::for_epsilon(0.67);
        let orbit = find_orbit(&random_state(2 * b.network.len(), 7, 0), &sys, &cfg).unwrap();
        let full = monodromy(&orbit, &sys, &cfg.integrator).unwrap();
        let rep = split_multipliers(&full, b.layout.as_ref().unwrap(), 1e-6).unwrap();
        let cpg_orbit = find_orbit(&random_state(8, 7, 0), &cpg_sys, &cfg).unwrap();
        let cpg = eig(&monodromy(&cpg_orbit, &cpg_sys, &cfg.integrator).unwrap().matrix).unwrap();
        let tr = eig(
            &transverse_monodromy_1node(&cpg_orbit, &cpg_sys, crate::netgraph::NodeId(1), &cfg.integrator)
                .unwrap()
                .matrix,
        )
        .unwrap();
        (rep, cpg, tr)
    }

    #[test]
    fn one_module_split() {
        let (rep, cpg, tr) = lift_report("biped-ff(1)");
        assert_eq!(rep.set.len(), 10);
        assert_eq!(rep.set.block(Block::Cpg).len(), 8);
        assert_eq!(rep.set.block(Block::Transverse(1)).len(), 2);
        assert!(compare_multisets(&rep.set.block(Block::Cpg), &cpg).unwrap() < 0.01);
        assert!(compare_multisets(&rep.set.block(Block::Transverse(1)), &tr).unwrap() < 0.01);
    }

    #[test]
    fn two_modules_repeat() {
        let (rep, _, _) = lift_report("biped-ff(2)");
        assert!(rep.repeats(0.01), "{}", rep.module_spread);
    }

    #[test]
    fn zero_modules_all_cpg() {
        let b = builtin("biped-ff(0)").unwrap();
        let m = MonodromyResult::single(DMatrix::identity(8, 8) * 0.5, 1.0, Block::Cpg);
        let rep = split_multipliers(&m, b.layout.as_ref().unwrap(), 1e-6).unwrap();
        assert!(rep.set.multipliers.iter().all(|m| m.block == Block::Cpg));
    }

    #[test]
    fn wrong_shape_is_structure_mismatch() {
        let b = builtin("biped-ff(1)").unwrap();
        let m = MonodromyResult::single(DMatrix::identity(8, 8), 1.0, Block::Cpg);
        assert!(matches!(
            split_multipliers(&m, b.layout.as_ref().unwrap(), 1e-6),
            Err(Error::StructureMismatch(_))
        ));
        let dense = MonodromyResult::single(DMatrix::from_element(10, 10, 1.0), 1.0, Block::Cpg);
        assert!(matches!(
            split_multipliers(&dense, b.layout.as_ref().unwrap(), 1e-6),
            Err(Error::StructureMismatch(_))
        ));
    }
}
