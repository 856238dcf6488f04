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

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid colouring: {0}")]
    InvalidColoring(String),
    #[error("colouring is not balanced")]
    NotBalanced,
    #[error("malformed network: {0}")]
    InvalidNetwork(String),
    #[error("unknown network `{0}`")]
    UnknownNetwork(String),
    #[error("unresolved weight symbol `{0}`")]
    UnresolvedSymbol(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("no oscillation detected (peak-to-peak amplitude {amplitude:.3e})")]
    NoOscillation { amplitude: f64 },
    #[error("irregular period: gap std {std:.3e} vs mean {mean:.6}")]
    IrregularPeriod { mean: f64, std: f64 },
    #[error("orbit failed to close: defect {defect:.3e} exceeds {limit:.3e}")]
    ClosureFailure { defect: f64, limit: f64 },
    #[error("orbit is degenerate (equilibrium, amplitude {amplitude:.3e})")]
    DegenerateOrbit { amplitude: f64 },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("monodromy does not match lift structure: {0}")]
    StructureMismatch(String),
    #[error("epsilon = {0} is outside (0, 4]")]
    EpsilonOutOfRange(f64),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
