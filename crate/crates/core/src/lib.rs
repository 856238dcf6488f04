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

//! Wilson–Cowan rate models on coupled-cell networks: network construction,
//! periodic orbits, Floquet multipliers and transverse-stability conditions
//! for feedforward lifts of central pattern generators.

pub mod cli;
pub mod error;
pub mod floquet;
pub mod netgraph;
pub mod odeint;
pub mod orbit;
pub mod presets;
pub mod ratemodel;
pub mod stability;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
