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

//! Wilson–Cowan rate equations bound to a network.
//!
//! Node `i` has an activity `xE_i` and a fatigue `xH_i`; states store all
//! activities first, then all fatigues. With the default activity timescale
//!
//! ```text
//! ε dxE_i/dt = -xE_i + G(-g xH_i + Σ_j A_ij xE_j + I_i)
//!   dxH_i/dt =  xE_i - xH_i
//! ```
//!
//! The fatigue timescale measures time in units of ε instead, which puts the
//! factor ε on the fatigue equation and leaves the activity equation unscaled.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::{Network, Weight};
use crate::odeint::OdeSystem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GainParams {
    fn default() -> Self {
        GainParams { a: 1.0, b: 8.0, c: 1.0 }
    }
}

impl GainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "gain needs a > 0 and b > 0, got a={} b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Largest value of the gain derivative, attained at `x = c`.
    pub fn max_slope(&self) -> f64 {
        self.a * self.b / 4.0
    }
}

/// Logistic gain `a / (1 + exp(-b (x - c)))`.
pub fn gain(x: f64, gp: &GainParams) -> f64 {
    let z = gp.b * (x - gp.c);
    if z >= 0.0 {
        gp.a / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        gp.a * e / (1.0 + e)
    }
}

/// Derivative of [`gain`].
pub fn gain_prime(x: f64, gp: &GainParams) -> f64 {
    // symmetric in z, so use the decaying exponential on both sides
    let e = (-(gp.b * (x - gp.c)).abs()).exp();
    gp.a * gp.b * e / ((1.0 + e) * (1.0 + e))
}

/// Which equation carries the factor ε.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timescale {
    /// `ε dxE/dt = ...`, `dxH/dt = xE - xH`.
    #[default]
    Activity,
    /// `dxE/dt = ...`, `dxH/dt = ε (xE - xH)`.
    Fatigue,
}

/// External input: one value for every node, or one per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Input {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Input {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Input::Uniform(v) => Ok(vec![*v; n]),
            Input::PerNode(v) if v.len() == n => Ok(v.clone()),
            Input::PerNode(v) => Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            }),
        }
    }
}

/// Rate-model parameters as read from a parameter file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub epsilon: f64,
    pub g: f64,
    #[serde(rename = "I")]
    pub input: Input,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub gain: GainParams,
    /// Lateral coupling; `None` means the value of `beta`.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub timescale: Timescale,
    /// Further named weights.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub symbols: BTreeMap<String, f64>,
}

impl RateParams {
    /// Parameters with `g`, `ε`, uniform input and (α, β, γ) set.
    pub fn biped(epsilon: f64, g: f64, input: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        RateParams {
            epsilon,
            g,
            input: Input::Uniform(input),
            alpha: Some(alpha),
            beta: Some(beta),
            gamma: Some(gamma),
            gain: GainParams::default(),
            h: None,
            timescale: Timescale::Activity,
            symbols: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidParams(format!("g must be >= 0, got {}", self.g)));
        }
        self.gain.validate()
    }

    /// Lateral coupling strength, defaulting to β.
    pub fn lateral(&self) -> Result<f64> {
        self.h.or(self.beta).ok_or_else(|| Error::UnresolvedSymbol("h".into()))
    }

    pub fn resolve(&self, w: &Weight) -> Result<f64> {
        let name = match w {
            Weight::Value(v) => return Ok(*v),
            Weight::Symbol(s) => s.as_str(),
        };
        let v = match name {
            "alpha" => self.alpha,
            "beta" => self.beta,
            "gamma" => self.gamma,
            "h" => self.h.or(self.beta),
            other => self.symbols.get(other).copied(),
        };
        v.ok_or_else(|| Error::UnresolvedSymbol(name.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: RateParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        RateParams::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A network bound to numeric rate-model parameters.
#[derive(Clone, Debug)]
pub struct RateSystem {
    n: usize,
    /// `coupling[(i, j)]` is the summed weight of arrows from `j` into `i`.
    coupling: DMatrix<f64>,
    input: Vec<f64>,
    epsilon: f64,
    g: f64,
    gain: GainParams,
    timescale: Timescale,
}

impl RateSystem {
    pub fn new(net: &Network, p: &RateParams) -> Result<Self> {
        p.validate()?;
        let n = net.len();
        let mut coupling = DMatrix::zeros(n, n);
        for a in net.arrows() {
            if a.from == a.to {
                return Err(Error::InvalidNetwork(format!("self-coupling at node {}", a.to)));
            }
            coupling[(a.to.index(), a.from.index())] += p.resolve(&a.weight)?;
        }
        Ok(RateSystem {
            n,
            coupling,
            input: p.input.resolve(n)?,
            epsilon: p.epsilon,
            g: p.g,
            gain: p.gain,
            timescale: p.timescale,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn gain_params(&self) -> &GainParams {
        &self.gain
    }

    pub fn timescale(&self) -> Timescale {
        self.timescale
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// Factors multiplying the activity and fatigue equations.
    pub fn rates(&self) -> (f64, f64) {
        match self.timescale {
            Timescale::Activity => (1.0 / self.epsilon, 1.0),
            Timescale::Fatigue => (1.0, self.epsilon),
        }
    }

    /// Argument of the gain at node `i` (0-based).
    pub fn gain_argument(&self, x: &[f64], i: usize) -> f64 {
        let n = self.n;
        let mut s = self.input[i] - self.g * x[n + i];
        for (j, xj) in x[..n].iter().enumerate() {
            s += self.coupling[(i, j)] * xj;
        }
        s
    }

    /// Gain derivative at node `i`'s gain argument.
    pub fn eta(&self, x: &[f64], i: usize) -> f64 {
        gain_prime(self.gain_argument(x, i), &self.gain)
    }

    /// Linearisation of one node's own dynamics when its gain slope is `eta`.
    pub fn node_block(&self, eta: f64) -> Matrix2<f64> {
        let (re, rh) = self.rates();
        Matrix2::new(-re, -re * self.g * eta, rh, -rh)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != 2 * self.n {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// Checked right-hand side.
    pub fn derivative(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut dx = vec![0.0; x.len()];
        self.rhs(0.0, x, &mut dx);
        Ok(dx)
    }

    /// Checked Jacobian.
    pub fn jacobian_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x.len())?;
        let mut j = DMatrix::zeros(x.len(), x.len());
        self.jacobian(0.0, x, &mut j);
        Ok(j)
    }

    /// Trace of the Jacobian, which does not depend on the state.
    pub fn jacobian_trace(&self) -> f64 {
        let (re, rh) = self.rates();
        -(self.n as f64) * (re + rh)
    }
}

impl OdeSystem for RateSystem {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn rhs(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let n = self.n;
        let (re, rh) = self.rates();
        for i in 0..n {
            let u = gain(self.gain_argument(x, i), &self.gain);
            dx[i] = re * (u - x[i]);
            dx[n + i] = rh * (x[i] - x[n + i]);
        }
    }

    fn jacobian(&self, _t: f64, x: &[f64], jac: &mut DMatrix<f64>) {
        let n = self.n;
        let (re, rh) = self.rates();
        jac.fill(0.0);
        for i in 0..n {
            let s = re * self.eta(x, i);
            for j in 0..n {
                jac[(i, j)] = s * self.coupling[(i, j)];
            }
            jac[(i, i)] = -re;
            jac[(i, n + i)] = -s * self.g;
            jac[(n + i, i)] = rh;
            jac[(n + i, n + i)] = -rh;
        }
    }
}
