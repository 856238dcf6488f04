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

//! Periodic orbits: transient removal, period detection, Newton refinement,
//! uniform sampling, phase shifts and gait labels.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::Coloring;
use crate::odeint::{flow, flow_with_variational, integrate, IntegratorConfig, OdeSystem, Trajectory};

pub const MIN_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitConfig {
    pub transient: f64,
    /// Length of the window searched for a period after the transient.
    pub window: f64,
    pub amplitude_floor: f64,
    /// Largest accepted spread of crossing gaps, relative to their mean.
    pub max_irregularity: f64,
    pub samples: usize,
    pub gait_tolerance: f64,
    /// Sup-norm tolerance for grouping synchronous nodes, relative to the
    /// waveform amplitude.
    pub cluster_tolerance: f64,
    /// Closure tolerance, relative to the state norm.
    pub closure_tolerance: f64,
    pub integrator: IntegratorConfig,
}

impl OrbitConfig {
    pub fn for_epsilon(epsilon: f64) -> Self {
        OrbitConfig {
            transient: 300.0,
            window: 80.0,
            amplitude_floor: 1e-4,
            max_irregularity: 0.01,
            samples: MIN_SAMPLES,
            gait_tolerance: 0.02,
            cluster_tolerance: 1e-4,
            closure_tolerance: 1e-6,
            integrator: IntegratorConfig::for_epsilon(epsilon),
        }
    }
}

/// Uniform random state in `[0, 1]^dim` from a seed and a stream index.
pub fn random_state(dim: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..dim).map(|_| rng.random_range(0.0..=1.0)).collect()
}

/// State after integrating for `t_transient`.
pub fn settle<S: OdeSystem + ?Sized>(
    x0: &[f64],
    sys: &S,
    cfg: &IntegratorConfig,
    t_transient: f64,
) -> Result<Vec<f64>> {
    flow(x0, sys, cfg, 0.0, t_transient)
}

/// Cubic through four equally spaced values at -1, 0, 1, 2, evaluated at `u`.
fn cubic(p: [f64; 4], u: f64) -> f64 {
    let [a, b, c, d] = p;
    let l0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    let l1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    let l2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    let l3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    a * l0 + b * l1 + c * l2 + d * l3
}

/// Upward crossings of `level`, in fractional sample indices. A new crossing
/// is only counted once the signal has dropped below `level - guard`.
fn upward_crossings(s: &[f64], level: f64, guard: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut armed = false;
    for k in 0..s.len().saturating_sub(1) {
        if s[k] < level - guard {
            armed = true;
        }
        if armed && s[k] < level && s[k + 1] >= level {
            armed = false;
            let frac = if k >= 1 && k + 2 < s.len() {
                let p = [s[k - 1] - level, s[k] - level, s[k + 1] - level, s[k + 2] - level];
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if cubic(p, mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            } else {
                (level - s[k]) / (s[k + 1] - s[k])
            };
            out.push(k as f64 + frac);
        }
    }
    out
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Period of the activity of node `probe` (0-based) from upward crossings of
/// its temporal mean.
///
/// Waveforms with several crossings per period give gaps that repeat in a
/// cycle; consecutive gaps are then summed in groups of two or three before
/// the regularity test.
pub fn detect_period(traj: &Trajectory, probe: usize, amplitude_floor: f64, max_irregularity: f64) -> Result<f64> {
    let s = traj.component(probe);
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let amplitude = hi - lo;
    if amplitude.is_nan() || amplitude < amplitude_floor {
        return Err(Error::NoOscillation {
            amplitude: if amplitude.is_finite() { amplitude } else { 0.0 },
        });
    }
    let level = s.iter().sum::<f64>() / s.len() as f64;
    let crossings = upward_crossings(&s, level, 0.05 * amplitude);
    if crossings.len() < 5 {
        return Err(Error::NoOscillation { amplitude });
    }
    let gaps: Vec<f64> = crossings.windows(2).map(|w| (w[1] - w[0]) * traj.step).collect();
    let mut first = None;
    for group in 1..=3 {
        let grouped: Vec<f64> = gaps.chunks_exact(group).map(|c| c.iter().sum()).collect();
        if grouped.len() < 4 {
            break;
        }
        let (mean, std) = mean_std(&grouped);
        if std <= max_irregularity * mean {
            return Ok(mean);
        }
        first.get_or_insert((mean, std));
    }
    let (mean, std) = first.unwrap_or_else(|| mean_std(&gaps));
    Err(Error::IrregularPeriod { mean, std })
}

/// Newton shooting for `φ_T(x) = x`, with the phase fixed along the
/// coordinate in which the vector field is largest. Returns the corrected
/// point and period, or the input when the iteration does not improve it.
pub fn refine<S: OdeSystem + ?Sized>(
    x0: &[f64],
    period: f64,
    sys: &S,
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, f64)> {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut t = period;
    let mut f = vec![0.0; d];
    let residual = |x: &[f64], t: f64| -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        let (xt, phi) = flow_with_variational(x, &DMatrix::identity(d, d), sys, cfg, 0.0, t)?;
        let r: Vec<f64> = xt.iter().zip(x).map(|(a, b)| a - b).collect();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok((norm, xt, phi))
    };
    let (mut norm, mut xt, mut phi) = residual(&x, t)?;
    let target = 1e-11 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
    for _ in 0..12 {
        if norm < target {
            break;
        }
        sys.rhs(0.0, &x, &mut f);
        let p = (0..d).max_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs())).unwrap_or(0);
        let mut ft = vec![0.0; d];
        sys.rhs(0.0, &xt, &mut ft);
        let mut m = DMatrix::zeros(d + 1, d + 1);
        let mut rhs = DVector::zeros(d + 1);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = phi[(i, j)];
            }
            m[(i, i)] -= 1.0;
            m[(i, d)] = ft[i];
            rhs[i] = x[i] - xt[i];
        }
        m[(d, p)] = 1.0;
        let Some(step) = m.lu().solve(&rhs) else { break };
        let xn: Vec<f64> = (0..d).map(|i| x[i] + step[i]).collect();
        let tn = t + step[d];
        if !(tn > 0.5 * period && tn < 2.0 * period) {
            break;
        }
        let Ok((nn, xtn, phin)) = residual(&xn, tn) else { break };
        if nn >= norm {
            break;
        }
        (x, t, norm, xt, phi) = (xn, tn, nn, xtn, phin);
    }
    Ok((x, t))
}

/// One period of a periodic solution at `m` uniformly spaced times.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub period: f64,
    samples: Vec<Vec<f64>>,
    pub closure_defect: f64,
}

impl PeriodicOrbit {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn n_nodes(&self) -> usize {
        self.dim() / 2
    }

    pub fn base(&self) -> &[f64] {
        &self.samples[0]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.len() as f64
    }

    /// Activity waveform of node `i` (0-based).
    pub fn activity(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[i]).collect()
    }

    /// State at time `t` (taken modulo the period), re-integrated from the
    /// nearest earlier sample.
    pub fn state_at<S: OdeSystem + ?Sized>(&self, sys: &S, cfg: &IntegratorConfig, t: f64) -> Result<Vec<f64>> {
        let tau = t.rem_euclid(self.period);
        let k = ((tau / self.spacing()).floor() as usize).min(self.len() - 1);
        let t0 = k as f64 * self.spacing();
        flow(&self.samples[k], sys, cfg, t0, tau.max(t0))
    }

    /// Largest peak-to-peak range over all state components.
    pub fn amplitude(&self) -> f64 {
        (0..self.dim())
            .map(|c| {
                let (lo, hi) = self
                    .samples
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
                        (a.min(s[c]), b.max(s[c]))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// Samples the solution through `x` at `m` equally spaced times over one
/// period and checks that it closes up.
pub fn sample_orbit<S: OdeSystem + ?Sized>(
    x: &[f64],
    sys: &S,
    period: f64,
    m: usize,
    ocfg: &OrbitConfig,
) -> Result<PeriodicOrbit> {
    if m < MIN_SAMPLES {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_SAMPLES} samples, got {m}"
        )));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParams(format!("period must be positive, got {period}")));
    }
    let dt = period / m as f64;
    let mut samples = Vec::with_capacity(m);
    let mut cur = x.to_vec();
    for k in 0..m {
        let next = flow(&cur, sys, &ocfg.integrator, k as f64 * dt, (k + 1) as f64 * dt)?;
        samples.push(std::mem::replace(&mut cur, next));
    }
    let defect = cur.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let orbit = PeriodicOrbit {
        period,
        samples,
        closure_defect: defect,
    };
    let amplitude = orbit.amplitude();
    if amplitude < ocfg.amplitude_floor {
        return Err(Error::DegenerateOrbit { amplitude });
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let limit = ocfg.closure_tolerance * norm.max(1.0);
    if defect > limit {
        return Err(Error::ClosureFailure { defect, limit });
    }
    Ok(orbit)
}

/// Index of the node whose activity varies most along `traj`.
pub fn liveliest_node(traj: &Trajectory, n_nodes: usize) -> usize {
    (0..n_nodes)
        .map(|i| {
            let s = traj.component(i);
            let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (i, hi - lo)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Settles from `x0`, estimates the period, refines it by shooting and
/// samples the orbit.
pub fn find_orbit<S: OdeSystem + ?Sized>(x0: &[f64], sys: &S, ocfg: &OrbitConfig) -> Result<PeriodicOrbit> {
    let icfg = &ocfg.integrator;
    let x = settle(x0, sys, icfg, ocfg.transient)?;
    let traj = integrate(&x, sys, icfg, 0.0, ocfg.window)?;
    let probe = liveliest_node(&traj, sys.dim() / 2);
    let period = detect_period(&traj, probe, ocfg.amplitude_floor, ocfg.max_irregularity)?;
    let (x, period) = refine(traj.last(), period, sys, icfg)?;
    sample_orbit(&x, sys, period, ocfg.samples, ocfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaitLabel {
    Hop,
    Walk,
    Jump,
    Run,
    Other,
}

impl fmt::Display for GaitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GaitLabel::Hop => "hop",
            GaitLabel::Walk => "walk",
            GaitLabel::Jump => "jump",
            GaitLabel::Run => "run",
            GaitLabel::Other => "other",
        };
        f.write_str(s)
    }
}

/// Phase shifts as fractions of the period: node `i` follows
/// `x_i(t) = x_ref(t + shift_i T)`. Clusters group nodes with equal shifts
/// and matching waveforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePattern {
    pub period: f64,
    pub clusters: Vec<Vec<usize>>,
    pub shifts: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gait: Option<GaitLabel>,
}

impl PhasePattern {
    pub fn shift(&self, node: usize) -> f64 {
        self.shifts[&node]
    }

    pub fn shift_vec(&self) -> Vec<f64> {
        self.shifts.values().copied().collect()
    }
}

/// Distance between two phases on the unit circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Reduces to `[0, 1)`, sending lags a rounding error below a full period
/// to zero.
fn wrap(s: f64) -> f64 {
    let w = s.rem_euclid(1.0);
    if w >= 1.0 - 1e-9 {
        0.0
    } else {
        w
    }
}

/// Fractional lag `s` maximising `Σ_j w[j] r[j + s m]` (circularly), refined
/// by a parabola through the peak.
fn best_lag(w: &[f64], r: &[f64]) -> f64 {
    let m = w.len();
    let centre = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / m as f64;
        v.iter().map(|x| x - mean).collect::<Vec<_>>()
    };
    let (w, r) = (centre(w), centre(r));
    let corr: Vec<f64> = (0..m).map(|k| (0..m).map(|j| w[j] * r[(j + k) % m]).sum()).collect();
    let k = (0..m).max_by(|&a, &b| corr[a].total_cmp(&corr[b])).unwrap_or(0);
    let (cm, c0, cp) = (corr[(k + m - 1) % m], corr[k], corr[(k + 1) % m]);
    let denom = cm - 2.0 * c0 + cp;
    let delta = if denom.abs() > 0.0 {
        0.5 * (cm - cp) / denom
    } else {
        0.0
    };
    wrap((k as f64 + delta.clamp(-0.5, 0.5)) / m as f64)
}

fn waveform_range(w: &[f64]) -> f64 {
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Phase shifts of every node relative to `reference` (0-based) and the
/// synchronous clusters of the orbit.
pub fn phase_shifts(orbit: &PeriodicOrbit, reference: usize, ocfg: &OrbitConfig) -> PhasePattern {
    let n = orbit.n_nodes();
    let waves: Vec<Vec<f64>> = (0..n).map(|i| orbit.activity(i)).collect();
    let shifts: Vec<f64> = (0..n)
        .map(|i| {
            if i == reference {
                0.0
            } else {
                best_lag(&waves[i], &waves[reference])
            }
        })
        .collect();
    let amplitude = waves.iter().map(|w| waveform_range(w)).fold(0.0, f64::max);
    let tol = ocfg.cluster_tolerance * amplitude.max(f64::MIN_POSITIVE);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let home = clusters.iter_mut().find(|c| {
            let j = c[0] - 1;
            circular_distance(shifts[i], shifts[j]) <= ocfg.gait_tolerance
                && waves[i].iter().zip(&waves[j]).all(|(a, b)| (a - b).abs() <= tol)
        });
        match home {
            Some(c) => c.push(i + 1),
            None => clusters.push(vec![i + 1]),
        }
    }
    PhasePattern {
        period: orbit.period,
        clusters,
        shifts: shifts.iter().enumerate().map(|(i, &s)| (i + 1, s)).collect(),
        gait: None,
    }
}

const GAITS: [(GaitLabel, [f64; 4]); 4] = [
    (GaitLabel::Hop, [0.0, 0.0, 0.0, 0.0]),
    (GaitLabel::Walk, [0.0, 0.5, 0.5, 0.0]),
    (GaitLabel::Jump, [0.0, 0.5, 0.0, 0.5]),
    (GaitLabel::Run, [0.0, 0.0, 0.5, 0.5]),
];

/// Primary biped gait of the first four nodes, if any.
pub fn classify_shifts(shifts: &[f64], tolerance: f64) -> GaitLabel {
    if shifts.len() < 4 {
        return GaitLabel::Other;
    }
    let base = shifts[0];
    for (label, template) in GAITS {
        if (0..4).all(|i| circular_distance(shifts[i] - base, template[i]) <= tolerance) {
            return label;
        }
    }
    GaitLabel::Other
}

pub fn classify_gait(pattern: &PhasePattern, tolerance: f64) -> GaitLabel {
    classify_shifts(&pattern.shift_vec(), tolerance)
}

/// Largest sup-norm difference between same-coloured nodes' states over the
/// last quarter of `traj`; synchronous iff below `tol`.
pub fn synchrony_check(traj: &Trajectory, col: &Coloring, tol: f64) -> Result<(bool, f64)> {
    let n = traj.dim() / 2;
    if col.len() != n {
        return Err(Error::InvalidColoring(format!(
            "colouring covers {} nodes but trajectory has {n}",
            col.len()
        )));
    }
    let start = traj.len() - traj.len().div_ceil(4);
    let classes = col.classes();
    let mut defect: f64 = 0.0;
    for s in (start..traj.len()).map(|k| traj.state(k)) {
        for class in &classes {
            let r = class[0].index();
            for v in &class[1..] {
                let i = v.index();
                defect = defect.max((s[i] - s[r]).abs()).max((s[n + i] - s[n + r]).abs());
            }
        }
    }
    Ok((defect < tol, defect))
}
