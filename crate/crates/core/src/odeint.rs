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

//! Fixed-step classical Runge–Kutta integration of an ODE and of linear
//! systems driven along its solutions (variational equations and transverse
//! subsystems).

#![allow(clippy::needless_range_loop)]

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An autonomous or time-dependent ODE `x' = f(t, x)` with an exact Jacobian.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]);
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut DMatrix<f64>);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub step: f64,
    pub method: Method,
    /// Longest span a single call may integrate.
    pub max_time: f64,
}

impl IntegratorConfig {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "integration step must be > 0, got {step}"
            )));
        }
        Ok(IntegratorConfig {
            step,
            method: Method::Rk4,
            max_time: 1e6,
        })
    }

    /// Default step `min(1e-3, ε/20)`.
    pub fn for_epsilon(epsilon: f64) -> Self {
        IntegratorConfig::new(default_step(epsilon)).expect("positive epsilon")
    }

    fn check_span(&self, t0: f64, t1: f64) -> Result<()> {
        if t1.partial_cmp(&t0).is_none_or(|o| o.is_lt()) {
            return Err(Error::InvalidParams(format!("end time {t1} precedes start {t0}")));
        }
        if t1 - t0 > self.max_time {
            return Err(Error::InvalidParams(format!(
                "span {} exceeds max_time {}",
                t1 - t0,
                self.max_time
            )));
        }
        Ok(())
    }

    /// Number of equal steps, none longer than `step`, that cover `[t0, t1]`.
    pub fn steps_for(&self, span: f64) -> usize {
        if span <= 0.0 {
            0
        } else {
            (span / self.step - 1e-9).ceil().max(1.0) as usize
        }
    }
}

pub fn default_step(epsilon: f64) -> f64 {
    (epsilon / 20.0).min(1e-3)
}

/// Uniformly spaced samples of a solution, stored row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    /// Trajectory built from given rows sampled every `step` from time 0.
    pub fn from_rows(step: f64, rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        Trajectory {
            t0: 0.0,
            step,
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// One-dimensional trajectory from a scalar series.
    pub fn from_series(step: f64, values: &[f64]) -> Self {
        Trajectory {
            t0: 0.0,
            step,
            dim: 1,
            data: values.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn t1(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Time series of one component.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states().map(|s| s[c]).collect()
    }

    /// Samples from index `k` on, re-based at their own start time.
    pub fn tail_from(&self, k: usize) -> Trajectory {
        Trajectory {
            t0: self.time(k),
            step: self.step,
            dim: self.dim,
            data: self.data[k * self.dim..].to_vec(),
        }
    }

    /// Every `stride`-th sample, starting with the first.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let mut data = Vec::with_capacity(self.data.len() / stride + self.dim);
        for s in self.states().step_by(stride) {
            data.extend_from_slice(s);
        }
        Trajectory {
            t0: self.t0,
            step: self.step * stride as f64,
            dim: self.dim,
            data,
        }
    }

    /// Writes `t,x1E,...,xnE,x1H,...,xnH` rows. The state must hold an
    /// activity and a fatigue per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.dim / 2;
        let mut header = String::from("t");
        for i in 1..=n {
            header.push_str(&format!(",x{i}E"));
        }
        for i in 1..=n {
            header.push_str(&format!(",x{i}H"));
        }
        writeln!(out, "{header}")?;
        for (k, s) in self.states().enumerate() {
            write!(out, "{}", self.time(k))?;
            for v in s {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    y: Vec<f64>,
}

impl Rk4Work {
    fn new(d: usize) -> Self {
        Rk4Work {
            k1: vec![0.0; d],
            k2: vec![0.0; d],
            k3: vec![0.0; d],
            k4: vec![0.0; d],
            y: vec![0.0; d],
        }
    }
}

fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, x: &mut [f64], h: f64, w: &mut Rk4Work) {
    let half = 0.5 * h;
    sys.rhs(t, x, &mut w.k1);
    for i in 0..x.len() {
        w.y[i] = x[i] + half * w.k1[i];
    }
    sys.rhs(t + half, &w.y, &mut w.k2);
    for i in 0..x.len() {
        w.y[i] = x[i] + half * w.k2[i];
    }
    sys.rhs(t + half, &w.y, &mut w.k3);
    for i in 0..x.len() {
        w.y[i] = x[i] + h * w.k3[i];
    }
    sys.rhs(t + h, &w.y, &mut w.k4);
    for i in 0..x.len() {
        x[i] += h / 6.0 * (w.k1[i] + 2.0 * (w.k2[i] + w.k3[i]) + w.k4[i]);
    }
}

fn check_finite(x: &[f64], t: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

fn check_dim<S: OdeSystem + ?Sized>(sys: &S, x: &[f64]) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Samples the solution from `x0` every `cfg.step` time units, ending at the
/// last grid point not after `t1`.
pub fn integrate<S: OdeSystem + ?Sized>(
    x0: &[f64],
    sys: &S,
    cfg: &IntegratorConfig,
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    check_dim(sys, x0)?;
    cfg.check_span(t0, t1)?;
    let h = cfg.step;
    let n_steps = ((t1 - t0) / h + 1e-9).floor() as usize;
    let d = x0.len();
    let mut data = Vec::with_capacity((n_steps + 1) * d);
    data.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut w = Rk4Work::new(d);
    for k in 0..n_steps {
        let t = t0 + k as f64 * h;
        rk4_step(sys, t, &mut x, h, &mut w);
        check_finite(&x, t + h)?;
        data.extend_from_slice(&x);
    }
    Ok(Trajectory {
        t0,
        step: h,
        dim: d,
        data,
    })
}

/// State at exactly `t1`, using equal steps no longer than `cfg.step`.
pub fn flow<S: OdeSystem + ?Sized>(x0: &[f64], sys: &S, cfg: &IntegratorConfig, t0: f64, t1: f64) -> Result<Vec<f64>> {
    check_dim(sys, x0)?;
    cfg.check_span(t0, t1)?;
    let n = cfg.steps_for(t1 - t0);
    let mut x = x0.to_vec();
    if n == 0 {
        return Ok(x);
    }
    let h = (t1 - t0) / n as f64;
    let mut w = Rk4Work::new(x.len());
    for k in 0..n {
        let t = t0 + k as f64 * h;
        rk4_step(sys, t, &mut x, h, &mut w);
        check_finite(&x, t + h)?;
    }
    Ok(x)
}

/// Integrates `x' = f(t, x)` together with the linear system `V' = M(t, x) V`
/// using the same Runge–Kutta stages, so the coefficient matrix is always
/// evaluated on the stage states of the base solution. `coeff` fills the
/// square matrix `M`, whose size is the row count of `v0`.
pub fn flow_with_companion<S, F>(
    x0: &[f64],
    v0: &DMatrix<f64>,
    sys: &S,
    cfg: &IntegratorConfig,
    t0: f64,
    t1: f64,
    coeff: F,
) -> Result<(Vec<f64>, DMatrix<f64>)>
where
    S: OdeSystem + ?Sized,
    F: Fn(f64, &[f64], &mut DMatrix<f64>),
{
    check_dim(sys, x0)?;
    cfg.check_span(t0, t1)?;
    let n = cfg.steps_for(t1 - t0);
    let mut x = x0.to_vec();
    let mut v = v0.clone();
    if n == 0 {
        return Ok((x, v));
    }
    let h = (t1 - t0) / n as f64;
    let half = 0.5 * h;
    let d = x.len();
    let r = v.nrows();
    let mut w = Rk4Work::new(d);
    let mut m = DMatrix::zeros(r, r);
    let mut vs = v.clone();
    let (mut l1, mut l2, mut l3, mut l4) = (v.clone(), v.clone(), v.clone(), v.clone());
    for k in 0..n {
        let t = t0 + k as f64 * h;
        sys.rhs(t, &x, &mut w.k1);
        coeff(t, &x, &mut m);
        m.mul_to(&v, &mut l1);

        for i in 0..d {
            w.y[i] = x[i] + half * w.k1[i];
        }
        vs.copy_from(&v);
        axpy(&mut vs, half, &l1);
        sys.rhs(t + half, &w.y, &mut w.k2);
        coeff(t + half, &w.y, &mut m);
        m.mul_to(&vs, &mut l2);

        for i in 0..d {
            w.y[i] = x[i] + half * w.k2[i];
        }
        vs.copy_from(&v);
        axpy(&mut vs, half, &l2);
        sys.rhs(t + half, &w.y, &mut w.k3);
        coeff(t + half, &w.y, &mut m);
        m.mul_to(&vs, &mut l3);

        for i in 0..d {
            w.y[i] = x[i] + h * w.k3[i];
        }
        vs.copy_from(&v);
        axpy(&mut vs, h, &l3);
        sys.rhs(t + h, &w.y, &mut w.k4);
        coeff(t + h, &w.y, &mut m);
        m.mul_to(&vs, &mut l4);

        for i in 0..d {
            x[i] += h / 6.0 * (w.k1[i] + 2.0 * (w.k2[i] + w.k3[i]) + w.k4[i]);
        }
        l2 += &l3;
        axpy(&mut v, h / 6.0, &l1);
        axpy(&mut v, h / 3.0, &l2);
        axpy(&mut v, h / 6.0, &l4);
        check_finite(&x, t + h)?;
        check_finite(v.as_slice(), t + h)?;
    }
    Ok((x, v))
}

fn axpy(y: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

/// Flow of `x' = f(x)` together with its variational equation `V' = Df(x) V`.
pub fn flow_with_variational<S: OdeSystem + ?Sized>(
    x0: &[f64],
    v0: &DMatrix<f64>,
    sys: &S,
    cfg: &IntegratorConfig,
    t0: f64,
    t1: f64,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if v0.nrows() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: v0.nrows(),
        });
    }
    flow_with_companion(x0, v0, sys, cfg, t0, t1, |t, x, m| sys.jacobian(t, x, m))
}
