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

//! Monodromy matrices and Floquet multipliers of periodic orbits, including
//! the transverse blocks of feedforward lifts.

mod eig;
mod split;
mod transverse;

pub use eig::{eig, sort_by_modulus, MAX_EIG_DIM};
pub use split::{compare_multisets, split_multipliers, SplitReport};
pub use transverse::{transverse_matrix_2node, transverse_monodromy_1node, transverse_monodromy_2node};

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::odeint::{flow_with_variational, IntegratorConfig, OdeSystem};
use crate::orbit::PeriodicOrbit;

pub const UNIT_TOLERANCE: f64 = 0.02;

/// Which diagonal block of a lift's linearisation a multiplier belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Cpg,
    /// Transverse block of chain module `k` (1-based).
    Transverse(usize),
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Cpg => f.write_str("cpg"),
            Block::Transverse(k) => write!(f, "transverse:{k}"),
        }
    }
}

impl Serialize for Block {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "cpg" {
            return Ok(Block::Cpg);
        }
        s.strip_prefix("transverse:")
            .and_then(|k| k.parse().ok())
            .map(Block::Transverse)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown block {s:?}")))
    }
}

/// Monodromy matrix with the row ranges of its diagonal blocks.
#[derive(Clone, Debug)]
pub struct MonodromyResult {
    pub matrix: DMatrix<f64>,
    pub period: f64,
    pub blocks: Vec<(Block, Vec<usize>)>,
}

impl MonodromyResult {
    fn single(matrix: DMatrix<f64>, period: f64, block: Block) -> Self {
        let n = matrix.nrows();
        MonodromyResult {
            matrix,
            period,
            blocks: vec![(block, (0..n).collect())],
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues of the whole matrix, all tagged with the first block.
    pub fn multipliers(&self) -> Result<MultiplierSet> {
        let tag = self.blocks.first().map_or(Block::Cpg, |b| b.0);
        Ok(MultiplierSet::tagged(eig(&self.matrix)?, tag))
    }
}

/// Monodromy of the variational equation along the solution from `x0` over
/// `period`, integrated with the base solution in lockstep.
pub fn monodromy_from<S: OdeSystem + ?Sized>(
    x0: &[f64],
    period: f64,
    sys: &S,
    cfg: &IntegratorConfig,
) -> Result<MonodromyResult> {
    let d = x0.len();
    let (_, phi) = flow_with_variational(x0, &DMatrix::identity(d, d), sys, cfg, 0.0, period)?;
    Ok(MonodromyResult::single(phi, period, Block::Cpg))
}

pub fn monodromy<S: OdeSystem + ?Sized>(
    orbit: &PeriodicOrbit,
    sys: &S,
    cfg: &IntegratorConfig,
) -> Result<MonodromyResult> {
    monodromy_from(orbit.base(), orbit.period, sys, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multiplier {
    pub value: Complex64,
    pub block: Block,
}

impl Multiplier {
    pub fn abs(&self) -> f64 {
        self.value.norm()
    }
}

/// Floquet multipliers sorted by decreasing modulus, each tagged with its
/// block.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiplierSet {
    pub multipliers: Vec<Multiplier>,
}

impl MultiplierSet {
    pub fn tagged(values: Vec<Complex64>, block: Block) -> Self {
        let mut s = MultiplierSet::default();
        s.extend(values, block);
        s
    }

    pub fn extend(&mut self, values: Vec<Complex64>, block: Block) {
        self.multipliers
            .extend(values.into_iter().map(|value| Multiplier { value, block }));
        self.multipliers
            .sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.value.im.total_cmp(&a.value.im)));
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.multipliers.iter().map(|m| m.value).collect()
    }

    pub fn block(&self, block: Block) -> Vec<Complex64> {
        self.multipliers
            .iter()
            .filter(|m| m.block == block)
            .map(|m| m.value)
            .collect()
    }

    /// Multipliers outside the CPG block.
    pub fn transverse(&self) -> Vec<Complex64> {
        self.multipliers
            .iter()
            .filter(|m| m.block != Block::Cpg)
            .map(|m| m.value)
            .collect()
    }

    /// Number of multipliers within `tol` of the unit circle.
    pub fn count_near_unit(&self, tol: f64) -> usize {
        self.multipliers.iter().filter(|m| (m.abs() - 1.0).abs() <= tol).count()
    }

    pub fn product(&self) -> Complex64 {
        self.multipliers
            .iter()
            .fold(Complex64::new(1.0, 0.0), |p, m| p * m.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

/// Stable when the only multiplier near the unit circle is a single CPG
/// multiplier (the tangent direction) and all others lie strictly inside.
pub fn stability_verdict(ms: &MultiplierSet, unit_tol: f64) -> Verdict {
    if ms.multipliers.iter().any(|m| m.abs() > 1.0 + unit_tol) {
        return Verdict::Unstable;
    }
    let near: Vec<&Multiplier> = ms
        .multipliers
        .iter()
        .filter(|m| (m.abs() - 1.0).abs() <= unit_tol)
        .collect();
    if near.len() == 1 && near[0].block == Block::Cpg {
        Verdict::Stable
    } else {
        Verdict::Marginal
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierEntry {
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub block: Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub period: f64,
    pub multipliers: Vec<MultiplierEntry>,
    pub verdict: Verdict,
}

impl MultiplierReport {
    pub fn new(period: f64, ms: &MultiplierSet, unit_tol: f64) -> Self {
        MultiplierReport {
            period,
            multipliers: ms
                .multipliers
                .iter()
                .map(|m| MultiplierEntry {
                    re: m.value.re,
                    im: m.value.im,
                    abs: m.abs(),
                    block: m.block,
                })
                .collect(),
            verdict: stability_verdict(ms, unit_tol),
        }
    }
}

/// `∫ trace Df` over one period by the trapezoidal rule on the orbit samples
/// (spectrally accurate for periodic integrands).
pub fn trace_integral<S: OdeSystem + ?Sized>(orbit: &PeriodicOrbit, sys: &S) -> f64 {
    let d = orbit.dim();
    let mut jac = DMatrix::zeros(d, d);
    let mut sum = 0.0;
    for s in orbit.samples() {
        sys.jacobian(0.0, s, &mut jac);
        sum += jac.trace();
    }
    sum * orbit.spacing()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::builtin;
    use crate::odeint::tests::{expm, Linear};
    use crate::orbit::{find_orbit, random_state, OrbitConfig};
    use crate::ratemodel::{RateParams, RateSystem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lti_monodromy_is_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in 2..=8 {
            let j = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let sys = Linear(j.clone());
            let cfg = IntegratorConfig::new(1e-3).unwrap();
            let res = monodromy_from(&vec![0.0; d], 1.3, &sys, &cfg).unwrap();
            let exact = expm(&(j * 1.3));
            assert!((&res.matrix - &exact).amax() < 1e-8);
            let a = eig(&res.matrix).unwrap();
            let b = eig(&exact).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn verdicts() {
        let stable = MultiplierSet::tagged(vec![c(1.0, 0.0), c(0.4, 0.2), c(0.4, -0.2), c(0.01, 0.0)], Block::Cpg);
        assert_eq!(stability_verdict(&stable, UNIT_TOLERANCE), Verdict::Stable);
        let mut walk = MultiplierSet::tagged(vec![c(0.998, 0.0), c(0.3, 0.0)], Block::Cpg);
        walk.extend(vec![c(0.0047, 0.0)], Block::Transverse(1));
        assert_eq!(stability_verdict(&walk, UNIT_TOLERANCE), Verdict::Stable);
        let big = MultiplierSet::tagged(vec![c(1.3, 0.0), c(1.0, 0.0)], Block::Cpg);
        assert_eq!(stability_verdict(&big, UNIT_TOLERANCE), Verdict::Unstable);
        let two = MultiplierSet::tagged(vec![c(1.0, 0.0), c(0.99, 0.0)], Block::Cpg);
        assert_eq!(stability_verdict(&two, UNIT_TOLERANCE), Verdict::Marginal);
        let mut tr = MultiplierSet::tagged(vec![c(1.0, 0.0)], Block::Cpg);
        tr.extend(vec![c(-0.995, 0.0)], Block::Transverse(1));
        assert_eq!(stability_verdict(&tr, UNIT_TOLERANCE), Verdict::Marginal);
    }

    #[test]
    fn report_json_shape() {
        let mut ms = MultiplierSet::tagged(vec![c(1.0, 0.0)], Block::Cpg);
        ms.extend(vec![c(0.5, 0.0)], Block::Transverse(2));
        let rep = MultiplierReport::new(6.5, &ms, UNIT_TOLERANCE);
        let text = serde_json::to_string(&rep).unwrap();
        assert_eq!(
            text,
            r#"{"period":6.5,"multipliers":[{"re":1.0,"im":0.0,"abs":1.0,"block":"cpg"},{"re":0.5,"im":0.0,"abs":0.5,"block":"transverse:2"}],"verdict":"stable"}"#
        );
        assert_eq!(serde_json::from_str::<MultiplierReport>(&text).unwrap(), rep);
    }

    #[test]
    fn hop_orbit_multipliers() {
        let net = builtin("biped4").unwrap().network;
        let sys = RateSystem::new(&net, &RateParams::biped(0.67, 1.8, 1.1, 0.5, 0.6, 0.8)).unwrap();
        let cfg = OrbitConfig::for_epsilon(0.67);
        let orbit = find_orbit(&random_state(8, 7, 0), &sys, &cfg).unwrap();
        let res = monodromy(&orbit, &sys, &cfg.integrator).unwrap();
        let ms = res.multipliers().unwrap();
        assert_eq!(ms.count_near_unit(UNIT_TOLERANCE), 1);
        assert_eq!(stability_verdict(&ms, UNIT_TOLERANCE), Verdict::Stable);
        // Liouville
        let want = trace_integral(&orbit, &sys).exp();
        let got = ms.product();
        assert!((got.re - want).abs() < 1e-6 * want, "{got} vs {want}");
        let det = res.matrix.clone().lu().determinant();
        assert!((det - want).abs() < 1e-6 * want);
        // conjugate symmetry
        for m in &ms.multipliers {
            if m.value.im != 0.0 {
                assert!(ms.values().iter().any(|v| (v - m.value.conj()).norm() < 1e-8));
            }
        }
    }
}
