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

//! Analytic transverse-stability conditions evaluated along a CPG orbit.
//!
//! `η(t)` is the gain slope at the gain argument of the CPG node that a chain
//! node copies, and `ζ(t) = g η(t)`. The conditions bound `ζ` using the
//! infimum `D0` and supremum `D` of `η` over the orbit.

use std::collections::BTreeMap;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{eig, transverse_matrix_2node};
use crate::netgraph::NodeId;
use crate::orbit::PeriodicOrbit;
use crate::ratemodel::{gain_prime, RateSystem};

/// Relative widening applied to the sampled extremes of `η`.
pub const ETA_SAFETY: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBounds {
    pub d0: f64,
    pub d: f64,
    pub samples: usize,
}

impl EtaBounds {
    /// Bounds from sampled values, widened by [`ETA_SAFETY`] and clipped to
    /// `[0, max_slope]`.
    pub fn from_values(values: &[f64], max_slope: f64) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let d = (hi * (1.0 + ETA_SAFETY)).min(max_slope);
        let d0 = (lo * (1.0 - ETA_SAFETY)).max(0.0).min(d);
        EtaBounds {
            d0,
            d,
            samples: values.len(),
        }
    }

    /// Bounds that hold for any orbit: `0 <= η <= max_slope`.
    pub fn global(max_slope: f64) -> Self {
        EtaBounds {
            d0: 0.0,
            d: max_slope,
            samples: 0,
        }
    }
}

/// `η` at every orbit sample for the chain node copying `node`.
pub fn eta_series(orbit: &PeriodicOrbit, sys: &RateSystem, node: NodeId) -> Vec<f64> {
    orbit.samples().iter().map(|s| sys.eta(s, node.index())).collect()
}

pub fn eta_bounds(orbit: &PeriodicOrbit, sys: &RateSystem, node: NodeId) -> EtaBounds {
    EtaBounds::from_values(&eta_series(orbit, sys, node), sys.gain_params().max_slope())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub holds: bool,
    pub margin: f64,
    pub inputs: BTreeMap<String, f64>,
}

impl ConditionReport {
    fn new(condition: &str, margin: f64, inputs: &[(&str, f64)]) -> Self {
        ConditionReport {
            condition: condition.to_string(),
            holds: margin > 0.0,
            margin,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// Margin of `ζ ∈ [g D0, g D]` inside the open interval `(lo, hi)`. The
/// lower end only binds when it is positive, since `ζ >= 0`.
fn interval_margin(lo: f64, hi: f64, g: f64, b: &EtaBounds) -> f64 {
    let upper = hi - g * b.d;
    if lo < 0.0 {
        upper
    } else {
        upper.min(g * b.d0 - lo)
    }
}

/// First Liapunov condition: `g D <= 3`.
pub fn check_liap1(g: f64, b: &EtaBounds) -> ConditionReport {
    ConditionReport::new("liap1", 3.0 - g * b.d, &[("g", g), ("D0", b.d0), ("D", b.d)])
}

/// Zeros of `4ζ² - 8ζ - 8 + 3ε`, i.e. `1 ∓ √(3(4 - ε))/2`.
pub fn floquet_bound_interval(epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon <= 4.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let r = (3.0 * (4.0 - epsilon)).sqrt() / 2.0;
    Ok((1.0 - r, 1.0 + r))
}

/// Exponential-decay condition: every `ζ(t)` inside
/// [`floquet_bound_interval`]. Fails outright when `ε > 4`.
pub fn check_floquet_bound(g: f64, epsilon: f64, b: &EtaBounds) -> ConditionReport {
    let inputs = [("g", g), ("epsilon", epsilon), ("D0", b.d0), ("D", b.d)];
    match floquet_bound_interval(epsilon) {
        Ok((lo, hi)) => ConditionReport::new("floquet_bound", interval_margin(lo, hi, g, b), &inputs),
        Err(_) => ConditionReport::new("floquet_bound", (4.0 - epsilon).min(-f64::MIN_POSITIVE), &inputs),
    }
}

/// Roots of `(εζ - 1)² - 4ε`, i.e. `(1 ∓ 2√ε)/ε`.
pub fn liap2_interval(epsilon: f64) -> (f64, f64) {
    let s = 2.0 * epsilon.sqrt();
    ((1.0 - s) / epsilon, (1.0 + s) / epsilon)
}

/// Second Liapunov condition: `(εζ - 1)² - 4ε < 0` over the range of `ζ`.
pub fn check_liap2(g: f64, epsilon: f64, b: &EtaBounds) -> ConditionReport {
    let (lo, hi) = liap2_interval(epsilon);
    ConditionReport::new(
        "liap2",
        interval_margin(lo, hi, g, b),
        &[("g", g), ("epsilon", epsilon), ("D0", b.d0), ("D", b.d)],
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSample {
    pub t: f64,
    pub eigenvalues: Vec<Complex64>,
    pub trace: f64,
    pub det: f64,
}

/// Eigenvalues of a real 2×2 matrix from its characteristic polynomial.
pub fn eig2(m: &Matrix2<f64>) -> [Complex64; 2] {
    let tr = m.trace();
    let det = m.determinant();
    let disc = 0.25 * tr * tr - det;
    let half = 0.5 * tr;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [Complex64::new(half + r, 0.0), Complex64::new(half - r, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [Complex64::new(half, r), Complex64::new(half, -r)]
    }
}

/// The node's own linearised block at every orbit sample, with gain slope
/// taken at the counterpart `node`.
pub fn transverse_eigs_1node(orbit: &PeriodicOrbit, sys: &RateSystem, node: NodeId) -> Vec<BlockSample> {
    eta_series(orbit, sys, node)
        .into_iter()
        .enumerate()
        .map(|(k, eta)| {
            let b = sys.node_block(eta);
            BlockSample {
                t: k as f64 * orbit.spacing(),
                eigenvalues: eig2(&b).to_vec(),
                trace: b.trace(),
                det: b.determinant(),
            }
        })
        .collect()
}

/// The two-node transverse Jacobian at every orbit sample. Trace and
/// determinant are of the matrix scaled by the activity timescale (`εJ` in
/// the default convention).
pub fn transverse_eigs_2node(
    orbit: &PeriodicOrbit,
    sys: &RateSystem,
    pair: (NodeId, NodeId),
    h: f64,
) -> Result<Vec<BlockSample>> {
    let (re, _) = sys.rates();
    orbit
        .samples()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let j = transverse_matrix_2node(sys, sys.eta(s, pair.0.index()), sys.eta(s, pair.1.index()), h);
            let scaled = &j / re;
            Ok(BlockSample {
                t: k as f64 * orbit.spacing(),
                eigenvalues: eig(&j)?,
                trace: scaled.trace(),
                det: scaled.clone().lu().determinant(),
            })
        })
        .collect()
}

/// `√((g + 1/G1)(g + 1/G2))`, the lateral coupling at which the two-node
/// determinant vanishes.
pub fn lateral_boundary(g: f64, g1: f64, g2: f64) -> f64 {
    ((g + 1.0 / g1) * (g + 1.0 / g2)).sqrt()
}

/// Smallest lateral boundary along the orbit, with the margin `boundary - |h|`.
pub fn lateral_margin(orbit: &PeriodicOrbit, sys: &RateSystem, pair: (NodeId, NodeId), h: f64) -> ConditionReport {
    let g = sys.g();
    let boundary = orbit
        .samples()
        .iter()
        .map(|s| lateral_boundary(g, sys.eta(s, pair.0.index()), sys.eta(s, pair.1.index())))
        .fold(f64::INFINITY, f64::min);
    ConditionReport::new(
        "lateral",
        boundary - h.abs(),
        &[("g", g), ("h", h), ("boundary", boundary)],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityBound {
    pub activity_max: f64,
    pub slope: f64,
    pub g_bound: f64,
}

/// Refined bound on `g` for the first Liapunov condition when the orbit's
/// activities stay below the gain threshold: the gain slope is increasing
/// there, so `η` is at most the slope at the activity maximum.
pub fn activity_g_bound(orbit: &PeriodicOrbit, sys: &RateSystem) -> ActivityBound {
    let gp = sys.gain_params();
    let activity_max = (0..orbit.n_nodes())
        .flat_map(|i| orbit.samples().iter().map(move |s| s[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    let slope = if activity_max < gp.c {
        gain_prime(activity_max, gp)
    } else {
        gp.max_slope()
    };
    ActivityBound {
        activity_max,
        slope,
        g_bound: 3.0 / slope,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{eig as eigen, transverse_monodromy_1node};
    use crate::netgraph::builtin;
    use crate::orbit::{find_orbit, random_state, OrbitConfig};
    use crate::ratemodel::RateParams;
    use proptest::prelude::*;

    fn d2() -> EtaBounds {
        EtaBounds::global(2.0)
    }

    fn try_orbit(p: &RateParams, seed: u64) -> Result<(RateSystem, PeriodicOrbit)> {
        let sys = RateSystem::new(&builtin("biped4").unwrap().network, p)?;
        let orbit = find_orbit(&random_state(8, seed, 0), &sys, &OrbitConfig::for_epsilon(p.epsilon))?;
        Ok((sys, orbit))
    }

    fn orbit_for(p: &RateParams, seed: u64) -> (RateSystem, PeriodicOrbit) {
        try_orbit(p, seed).unwrap()
    }

    #[test]
    fn liap1_cases() {
        assert!(check_liap1(1.4, &d2()).holds);
        let r = check_liap1(1.8, &d2());
        assert!(!r.holds);
        assert!((r.margin + 0.6).abs() < 1e-12);
        assert_eq!(check_liap1(0.0, &d2()).margin, 3.0);
    }

    #[test]
    fn floquet_intervals() {
        let (lo, hi) = floquet_bound_interval(0.6).unwrap();
        assert!((lo + 0.596872).abs() < 1e-6 && (hi - 2.59687).abs() < 1e-5);
        let (lo, hi) = floquet_bound_interval(1e-12).unwrap();
        assert!((lo - (1.0 - 3f64.sqrt())).abs() < 1e-6 && (hi - (1.0 + 3f64.sqrt())).abs() < 1e-6);
        assert_eq!(floquet_bound_interval(4.0).unwrap(), (1.0, 1.0));
        assert!(matches!(floquet_bound_interval(4.5), Err(Error::EpsilonOutOfRange(_))));
        let (_, hi) = floquet_bound_interval(0.5).unwrap();
        assert!((hi - 2.62019).abs() < 1e-5);
        assert!((hi / 2.0 - 1.31010).abs() < 1e-5);
    }

    #[test]
    fn floquet_bound_checks() {
        assert!(check_floquet_bound(1.0, 0.6, &d2()).holds);
        assert!(check_floquet_bound(0.0, 2.0, &d2()).holds);
        assert!(!check_floquet_bound(1.4, 0.5, &d2()).holds);
        assert!(!check_floquet_bound(0.0, 5.0, &d2()).holds);
        // lower end is positive once ε > 8/3
        let (lo, _) = floquet_bound_interval(3.5).unwrap();
        assert!(lo > 0.0);
        let b = EtaBounds {
            d0: 0.0,
            d: 0.5,
            samples: 1,
        };
        assert!(!check_floquet_bound(1.0, 3.5, &b).holds);
    }

    #[test]
    fn liap2_cases() {
        let (lo, hi) = liap2_interval(0.5);
        assert!((lo + 0.828427).abs() < 1e-6 && (hi - 4.82843).abs() < 1e-5);
        assert!(check_liap2(1.4, 0.5, &d2()).holds);
        assert!((hi / 2.0 - 2.41421).abs() < 1e-5);
        let (lo, _) = liap2_interval(0.25);
        assert!(lo.abs() < 1e-15);
    }

    #[test]
    fn two_by_two_eigenvalues_agree_with_qr() {
        let p = RateParams::biped(0.67, 1.8, 1.1, 0.5, 0.6, 0.8);
        let (sys, orbit) = orbit_for(&p, 7);
        for s in transverse_eigs_1node(&orbit, &sys, NodeId(1)) {
            assert!((s.trace - (-1.0 / 0.67 - 1.0)).abs() < 1e-12);
            assert!(s.det > 0.0 && s.eigenvalues.iter().all(|l| l.re < 0.0));
        }
        let eta = eta_series(&orbit, &sys, NodeId(1));
        for e in eta.iter().step_by(17) {
            let b = sys.node_block(*e);
            let mut closed = eig2(&b).to_vec();
            crate::floquet::sort_by_modulus(&mut closed);
            let qr = eigen(&nalgebra::DMatrix::from_column_slice(2, 2, b.as_slice())).unwrap();
            for (a, q) in closed.iter().zip(&qr) {
                assert!((a - q).norm() < 1e-10, "{a} vs {q}");
            }
        }
    }

    #[test]
    fn decoupled_eigenvalues() {
        let p = RateParams::biped(0.5, 0.0, 1.0, 0.0, 0.0, 0.0);
        let sys = RateSystem::new(&builtin("biped4").unwrap().network, &p).unwrap();
        let b = sys.node_block(1.3);
        let mut ev = eig2(&b);
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(ev[0], Complex64::new(-2.0, 0.0));
        assert_eq!(ev[1], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn hop_refined_bound() {
        let p = RateParams::biped(0.5, 1.4, 0.7, 0.5, 0.6, 0.8);
        let (sys, orbit) = orbit_for(&p, 7);
        let ab = activity_g_bound(&orbit, &sys);
        assert!((ab.activity_max - 0.97).abs() < 0.01, "{ab:?}");
        assert!((ab.g_bound - 1.52).abs() < 0.05 * 1.52, "{ab:?}");
        let b = eta_bounds(&orbit, &sys, NodeId(1));
        assert!(b.d <= 2.0 && b.d0 <= b.d && b.d0 >= 0.0);
        assert!(check_liap2(1.4, 0.5, &b).holds);
    }

    #[test]
    fn constant_input_gives_equal_bounds() {
        let b = EtaBounds::from_values(&[0.8; 10], 2.0);
        assert!((b.d - 0.808).abs() < 1e-12 && (b.d0 - 0.792).abs() < 1e-12);
    }

    #[test]
    fn lateral_boundary_cases() {
        assert!((lateral_boundary(1.8, 2.0, 2.0) - 2.3).abs() < 1e-12);
        let p = RateParams::biped(0.67, 1.8, 1.1, 0.5, 0.6, 0.8);
        let (sys, orbit) = orbit_for(&p, 7);
        let pair = (NodeId(1), NodeId(3));
        let r0 = lateral_margin(&orbit, &sys, pair, 0.0);
        assert!(r0.holds && r0.margin > 1.8);
        let boundary = r0.inputs["boundary"];
        for (h, sign) in [(boundary * 1.001, -1.0), (boundary * 0.999, 1.0)] {
            let r = lateral_margin(&orbit, &sys, pair, h);
            let min_det = transverse_eigs_2node(&orbit, &sys, pair, h)
                .unwrap()
                .iter()
                .map(|s| s.det)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(r.holds, sign > 0.0);
            assert_eq!(min_det > 0.0, sign > 0.0, "h={h} det={min_det}");
        }
    }

    #[test]
    fn two_node_closed_forms() {
        let p = RateParams::biped(0.67, 1.8, 1.1, 0.5, 0.6, 0.8);
        let (sys, orbit) = orbit_for(&p, 7);
        let pair = (NodeId(1), NodeId(3));
        let h = 0.6;
        let eps: f64 = 0.67;
        for (s, x) in transverse_eigs_2node(&orbit, &sys, pair, h)
            .unwrap()
            .iter()
            .zip(orbit.samples())
        {
            let (g1, g2) = (sys.eta(x, 0), sys.eta(x, 2));
            let det = eps.powi(2) * ((1.0 + 1.8 * g1) * (1.0 + 1.8 * g2) - h * h * g1 * g2);
            assert!((s.trace - (-2.0 - 2.0 * eps)).abs() < 1e-12);
            assert!((s.det - det).abs() < 1e-10 * det.abs().max(1.0));
            assert!(s.eigenvalues.iter().all(|l| l.re < 0.0));
        }
        // h = 0 splits into two single-node blocks
        let zero = transverse_eigs_2node(&orbit, &sys, pair, 0.0).unwrap();
        let a = transverse_eigs_1node(&orbit, &sys, pair.0);
        let b = transverse_eigs_1node(&orbit, &sys, pair.1);
        for k in (0..orbit.len()).step_by(31) {
            let mut joint: Vec<Complex64> = a[k].eigenvalues.iter().chain(&b[k].eigenvalues).copied().collect();
            crate::floquet::sort_by_modulus(&mut joint);
            for l in &zero[k].eigenvalues {
                assert!(joint.iter().any(|j| (j - l).norm() < 1e-9));
            }
        }
    }

    #[test]
    fn floquet_bound_implies_small_multipliers() {
        let mut exercised = 0;
        for (eps, g, i, sgn) in [
            (0.6, 1.25, 1.1, -1.0),
            (0.6, 1.25, 0.9, 1.0),
            (1.0, 1.2, 1.1, -1.0),
            (0.3, 1.3, 1.1, 1.0),
        ] {
            let p = RateParams::biped(eps, g, i, 0.5 * sgn, -0.6, 0.8 * sgn);
            let Ok((sys, orbit)) = try_orbit(&p, 3) else { continue };
            let b = eta_bounds(&orbit, &sys, NodeId(1));
            if check_floquet_bound(g, eps, &b).holds {
                exercised += 1;
                let cfg = OrbitConfig::for_epsilon(eps).integrator;
                let m = transverse_monodromy_1node(&orbit, &sys, NodeId(1), &cfg).unwrap();
                assert!(eigen(&m.matrix).unwrap().iter().all(|l| l.norm() < 1.0));
            }
        }
        assert!(exercised > 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn node_block_trace_det(eps in 0.05f64..4.0, g in 0.0f64..5.0, eta in 0.0f64..2.0) {
            let p = RateParams::biped(eps, g, 1.0, 0.5, 0.6, 0.8);
            let sys = RateSystem::new(&builtin("biped4").unwrap().network, &p).unwrap();
            let b = sys.node_block(eta);
            prop_assert!(b.trace() < 0.0);
            prop_assert!(b.determinant() > 0.0);
            prop_assert!(eig2(&b).iter().all(|l| l.re < 0.0));
        }

        #[test]
        fn liap1_discriminant_consistent(g in 0.0f64..3.0, d in 0.0f64..2.0) {
            let b = EtaBounds { d0: 0.0, d, samples: 1 };
            let z = g * d;
            if check_liap1(g, &b).holds {
                prop_assert!(z * z - 2.0 * z - 3.0 < 0.0);
            }
        }

        #[test]
        fn interval_roots(eps in 1e-6f64..4.0) {
            let (lo, hi) = floquet_bound_interval(eps).unwrap();
            for z in [lo, hi] {
                prop_assert!((4.0 * z * z - 8.0 * z - 8.0 + 3.0 * eps).abs() < 1e-12);
            }
            let (a, b) = liap2_interval(eps);
            for z in [a, b] {
                prop_assert!(((eps * z - 1.0).powi(2) - 4.0 * eps).abs() < 1e-9 * (1.0 + (eps * z).powi(2)));
            }
        }
    }
}
