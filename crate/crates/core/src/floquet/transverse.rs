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

//! Linear periodic systems governing deviations of chain nodes from their
//! synchronous CPG nodes.

use nalgebra::DMatrix;

use super::{Block, MonodromyResult};
use crate::error::Result;
use crate::netgraph::NodeId;
use crate::odeint::{flow_with_companion, IntegratorConfig};
use crate::orbit::PeriodicOrbit;
use crate::ratemodel::RateSystem;

/// Transverse monodromy of a single chain node copying CPG node
/// `counterpart`. The deviation `(u, v)` of activity and fatigue obeys the
/// node's own linearised block with gain slope taken at the counterpart's
/// gain argument along the CPG orbit.
pub fn transverse_monodromy_1node(
    orbit: &PeriodicOrbit,
    sys: &RateSystem,
    counterpart: NodeId,
    cfg: &IntegratorConfig,
) -> Result<MonodromyResult> {
    let c = counterpart.index();
    let (_, phi) = flow_with_companion(
        orbit.base(),
        &DMatrix::identity(2, 2),
        sys,
        cfg,
        0.0,
        orbit.period,
        |_, x, m| {
            let b = sys.node_block(sys.eta(x, c));
            m.copy_from(&b);
        },
    )?;
    Ok(MonodromyResult::single(phi, orbit.period, Block::Transverse(1)))
}

/// Transverse Jacobian of a laterally coupled pair, in the order
/// `(u1, u2, v1, v2)` of activity then fatigue deviations.
pub fn transverse_matrix_2node(sys: &RateSystem, eta1: f64, eta2: f64, h: f64) -> DMatrix<f64> {
    let (re, rh) = sys.rates();
    let g = sys.g();
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        -re,           re * h * eta1, -re * g * eta1, 0.0,
        re * h * eta2, -re,           0.0,            -re * g * eta2,
        rh,            0.0,           -rh,            0.0,
        0.0,           rh,            0.0,            -rh,
    ]);
    m
}

/// Transverse monodromy of a two-node module copying the CPG pair `pair`
/// with lateral coupling `h`.
pub fn transverse_monodromy_2node(
    orbit: &PeriodicOrbit,
    sys: &RateSystem,
    pair: (NodeId, NodeId),
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<MonodromyResult> {
    let (p, q) = (pair.0.index(), pair.1.index());
    let (_, phi) = flow_with_companion(
        orbit.base(),
        &DMatrix::identity(4, 4),
        sys,
        cfg,
        0.0,
        orbit.period,
        |_, x, m| {
            m.copy_from(&transverse_matrix_2node(sys, sys.eta(x, p), sys.eta(x, q), h));
        },
    )?;
    Ok(MonodromyResult::single(phi, orbit.period, Block::Transverse(1)))
}
