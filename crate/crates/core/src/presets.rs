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

//! Bundled parameter sets with reference values.

use crate::orbit::GaitLabel;
use crate::ratemodel::{RateParams, Timescale};

/// A parameter set with reference period and multiplier moduli.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub network: &'static str,
    pub params: RateParams,
    pub gait: Option<GaitLabel>,
    pub period: f64,
    /// CPG multiplier moduli, largest first.
    pub cpg: &'static [f64],
    /// Single-node transverse multiplier moduli, largest first.
    pub transverse: &'static [f64],
    /// Two-node transverse multiplier moduli (lateral coupling equal to β).
    pub transverse_2node: &'static [f64],
    /// Whether the two-node transverse multipliers come in complex pairs.
    pub complex_2node: bool,
}

fn chain(input: f64, alpha: f64, g: f64, epsilon: f64) -> RateParams {
    let mut p = RateParams::biped(epsilon, g, input, alpha, 0.0, 0.0);
    p.beta = None;
    p.gamma = None;
    p.timescale = Timescale::Fatigue;
    p
}

/// Travelling-wave parameter sets for the seven-node chain over a
/// three-node ring.
pub fn chain7_sets() -> Vec<Preset> {
    let base = |name, params, period, cpg, transverse| Preset {
        name,
        network: "chain7",
        params,
        gait: None,
        period,
        cpg,
        transverse,
        transverse_2node: &[],
        complex_2node: false,
    };
    vec![
        base(
            "chain7-set1",
            chain(2.0, -5.0, 2.0, 0.1),
            5.783,
            &[1.0, 0.470, 0.470, 0.396, 0.0368, 1.58e-6],
            &[0.546, 0.00315],
        ),
        base(
            "chain7-set2",
            chain(2.0, -5.0, 2.0, 0.5),
            4.612,
            &[1.0, 0.0989, 0.0989, 0.0428, 0.0428, 0.0000538],
            &[0.0898, 0.0110],
        ),
        base(
            "chain7-set3",
            chain(4.0, -3.0, 2.0, 0.2),
            3.146,
            &[1.0, 0.526, 0.526, 0.419, 0.0578, 0.00178],
            &[0.151, 0.151],
        ),
        base(
            "chain7-set4",
            chain(2.0, -8.0, 3.0, 0.8),
            4.373,
            &[1.0, 0.0294, 0.0294, 0.0138, 0.00215, 0.00215],
            &[0.0260, 0.0146],
        ),
    ]
}

const SIGNS: [(GaitLabel, f64, f64, f64); 4] = [
    (GaitLabel::Hop, 1.0, 1.0, 1.0),
    (GaitLabel::Run, -1.0, -1.0, 1.0),
    (GaitLabel::Jump, -1.0, 1.0, -1.0),
    (GaitLabel::Walk, 1.0, -1.0, -1.0),
];

fn gait_params(label: GaitLabel, epsilon: f64, g: f64, input: f64) -> RateParams {
    let (_, a, b, c) = SIGNS.iter().copied().find(|s| s.0 == label).expect("primary gait");
    RateParams::biped(epsilon, g, input, 0.5 * a, 0.6 * b, 0.8 * c)
}

/// The four primary gaits at `ε = 0.67`, `g = 1.8`, `I = 1.1`.
pub fn biped_gaits() -> Vec<Preset> {
    let p = |gait, name, period, cpg, transverse, transverse_2node, complex_2node| Preset {
        name,
        network: "biped4",
        params: gait_params(gait, 0.67, 1.8, 1.1),
        gait: Some(gait),
        period,
        cpg,
        transverse,
        transverse_2node,
        complex_2node,
    };
    vec![
        p(
            GaitLabel::Hop,
            "hop",
            6.646,
            &[
                0.999, 0.00117, 0.000946, 0.000400, 0.000258, 0.0000143, 4.27e-6, 2.35e-6,
            ],
            &[0.00172, 0.0000188],
            &[0.0184, 0.000322, 0.000216, 3.16e-6],
            false,
        ),
        p(
            GaitLabel::Run,
            "run",
            4.991,
            &[1.0, 0.150, 0.00714, 0.00110, 0.000322, 0.000166, 0.0000773, 0.0000497],
            &[0.00685, 0.000571],
            &[0.0281, 0.0190, 0.000283, 0.000102],
            false,
        ),
        p(
            GaitLabel::Jump,
            "jump",
            5.257,
            &[1.0, 0.505, 0.000427, 0.000427, 0.000212, 0.000212, 0.0000641, 0.0000641],
            &[0.00522, 0.000389],
            &[0.0182, 0.0182, 0.000111, 0.000111],
            true,
        ),
        p(
            GaitLabel::Walk,
            "walk",
            5.368,
            &[
                0.998, 0.916, 0.000424, 0.000424, 0.000105, 0.000105, 0.0000555, 0.0000555,
            ],
            &[0.00470, 0.000325],
            &[0.0205, 0.0205, 0.0000751, 0.0000751],
            true,
        ),
    ]
}

/// Gait parameters at `g = 1.4`, `ε = 0.5` with reference activity maxima
/// and refined bounds on `g`.
pub fn refined_gaits() -> Vec<(GaitLabel, RateParams, f64, f64)> {
    vec![
        (GaitLabel::Hop, gait_params(GaitLabel::Hop, 0.5, 1.4, 0.7), 0.97, 1.52),
        (
            GaitLabel::Jump,
            gait_params(GaitLabel::Jump, 0.5, 1.4, 1.1),
            0.46,
            28.95,
        ),
        (GaitLabel::Run, gait_params(GaitLabel::Run, 0.5, 1.4, 1.1), 0.69, 5.25),
        (
            GaitLabel::Walk,
            gait_params(GaitLabel::Walk, 0.5, 1.4, 1.1),
            0.37,
            58.67,
        ),
    ]
}

/// Looks up a bundled parameter set by name: `chain7-set1` .. `chain7-set4`,
/// `hop`, `run`, `jump`, `walk`, or `refined-<gait>`.
pub fn params_by_name(name: &str) -> Option<RateParams> {
    if let Some(gait) = name.strip_prefix("refined-") {
        return refined_gaits()
            .into_iter()
            .find(|(g, ..)| g.to_string() == gait)
            .map(|(_, p, ..)| p);
    }
    chain7_sets()
        .into_iter()
        .chain(biped_gaits())
        .find(|p| p.name == name)
        .map(|p| p.params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!(params_by_name("walk").unwrap().beta, Some(-0.6));
        assert_eq!(
            params_by_name("refined-hop").unwrap().input,
            crate::ratemodel::Input::Uniform(0.7)
        );
        assert_eq!(params_by_name("chain7-set3").unwrap().timescale, Timescale::Fatigue);
        assert!(params_by_name("gallop").is_none());
    }

    #[test]
    fn sign_patterns() {
        let run = params_by_name("run").unwrap();
        assert_eq!((run.alpha, run.beta, run.gamma), (Some(-0.5), Some(-0.6), Some(0.8)));
        let jump = params_by_name("refined-jump").unwrap();
        assert_eq!((jump.alpha, jump.beta, jump.gamma), (Some(-0.5), Some(0.6), Some(-0.8)));
    }
}
