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

//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage, parse or I/O errors, 2 when no
//! periodic orbit is found.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::{
    monodromy, split_multipliers, trace_integral, transverse_monodromy_1node, transverse_monodromy_2node, Block,
    MultiplierReport, MultiplierSet, UNIT_TOLERANCE,
};
use crate::netgraph::{builtin, feedforward_lift, BuiltinNetwork, LiftSpec, ModuleKind, Network, NodeId, Weight};
use crate::odeint::{integrate, IntegratorConfig};
use crate::orbit::{
    classify_gait, find_orbit, phase_shifts, random_state, settle, synchrony_check, OrbitConfig, PeriodicOrbit,
    PhasePattern, MIN_SAMPLES,
};
use crate::presets;
use crate::ratemodel::{RateParams, RateSystem};
use crate::stability::{
    activity_g_bound, check_floquet_bound, check_liap1, check_liap2, eta_series, lateral_margin, ActivityBound,
    ConditionReport, EtaBounds,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_ORBIT: i32 = 2;

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "GAITLIFT_THREADS";

/// Synchrony defect below which coloured nodes count as synchronous.
const SYNCHRONY_TOLERANCE: f64 = 1e-5;
/// Relative tolerance for the block structure of a lift monodromy.
const STRUCTURE_TOLERANCE: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(
    name = "gaitlift",
    version,
    about = "Rate-model dynamics on CPG networks and their feedforward lifts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a network and report its phase pattern.
    Simulate(SimulateArgs),
    /// Floquet multipliers of the CPG orbit and optional module.
    Floquet(FloquetArgs),
    /// Analytic transverse-stability conditions.
    Stability(StabilityArgs),
    /// Gait classification over an (alpha, beta, gamma) grid.
    Sweep(SweepArgs),
    /// Network utilities.
    Net {
        #[command(subcommand)]
        command: NetCommand,
    },
    /// Recompute a bundled reference table.
    Repro(ReproArgs),
}

#[derive(Subcommand, Debug)]
pub enum NetCommand {
    /// Print a builtin network as JSON.
    Export { name: String },
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Builtin network name or path to a network file.
    #[arg(long, default_value = "biped4")]
    pub net: String,
    /// Parameter file path or bundled set name.
    #[arg(long)]
    pub params: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 300.0)]
    pub transient: f64,
    /// Integration step; defaults to min(1e-3, epsilon/20).
    #[arg(long)]
    pub step: Option<f64>,
    /// Samples per period.
    #[arg(long, default_value_t = MIN_SAMPLES)]
    pub samples: usize,
    /// Lateral coupling inside two-node modules; overrides the parameter file.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Length of the exported trajectory after the transient.
    #[arg(long, default_value_t = 50.0)]
    pub duration: f64,
    /// Keep every n-th integration step in the exported trajectory.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Directory receiving trajectory.csv and pattern.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleArg {
    None,
    #[value(name = "1node")]
    OneNode,
    #[value(name = "2node")]
    TwoNode,
}

impl ModuleArg {
    fn name(self) -> &'static str {
        match self {
            ModuleArg::None => "none",
            ModuleArg::OneNode => "1node",
            ModuleArg::TwoNode => "2node",
        }
    }
}

#[derive(Args, Debug)]
pub struct FloquetArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "none")]
    pub module_kind: ModuleArg,
    /// CPG node copied by a single-node module.
    #[arg(long, default_value_t = 1)]
    pub node: usize,
    /// CPG pair copied by a two-node module.
    #[arg(long, value_parser = parse_pair, default_value = "1,3")]
    pub pair: (usize, usize),
    /// Integrate the whole lift and split its monodromy by module.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "1node")]
    pub module_kind: ModuleArg,
    #[arg(long, value_parser = parse_pair, default_value = "1,3")]
    pub pair: (usize, usize),
    /// Use the orbit-independent bounds 0 <= eta <= ab/4 instead of a
    /// computed orbit.
    #[arg(long)]
    pub global_bounds: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value = "biped4")]
    pub net: String,
    /// `lo:hi:n` or a single value.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub alpha: Grid,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub beta: Grid,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub gamma: Grid,
    #[arg(long)]
    pub g: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long = "I", alias = "input")]
    pub input: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 300.0)]
    pub transient: f64,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = MIN_SAMPLES)]
    pub samples: usize,
    /// CSV destination; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    Chain7,
    #[value(name = "biped-1node")]
    Biped1Node,
    #[value(name = "biped-2node")]
    Biped2Node,
    #[value(name = "gait-bounds")]
    GaitBounds,
}

#[derive(Args, Debug)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub table: TableId,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// Clap's value_parser wants `Result<_, String>`-style errors.
fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `i,j`, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad node id `{t}`: {e}"));
    let (a, b) = (p(a)?, p(b)?);
    if a == 0 || b == 0 || a == b {
        return Err(format!("pair must name two distinct nodes, got `{s}`"));
    }
    Ok((a, b))
}

/// Inclusive, evenly spaced grid values.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_range(s: &str) -> std::result::Result<Grid, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(Grid(vec![num(v)?])),
        [lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|e| format!("bad count `{n}`: {e}"))?;
            match n {
                0 => Err("grid count must be positive".into()),
                1 => Ok(Grid(vec![lo])),
                _ => Ok(Grid(
                    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
                )),
            }
        }
        _ => Err(format!("expected `lo:hi:n` or a value, got `{s}`")),
    }
}

/// Run metadata embedded in every JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub step: f64,
    pub transient: f64,
    pub samples: usize,
    pub network: String,
    pub params: RateParams,
}

impl Provenance {
    fn new(network: &str, params: &RateParams, seed: u64, ocfg: &OrbitConfig) -> Self {
        Provenance {
            tool: "gaitlift",
            version: crate::VERSION,
            seed,
            step: ocfg.integrator.step,
            transient: ocfg.transient,
            samples: ocfg.samples,
            network: network.to_string(),
            params: params.clone(),
        }
    }
}

/// Loads a parameter file, falling back to the bundled sets by name.
pub fn load_params(spec: &str) -> Result<RateParams> {
    let path = Path::new(spec);
    if path.is_file() {
        return RateParams::load(path);
    }
    presets::params_by_name(spec).ok_or_else(|| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no parameter file or bundled set named `{spec}`"),
        ))
    })
}

/// Loads a network file or builtin. A two-node lateral lift is rebuilt with
/// the lateral weight `h` when `h` is given.
pub fn load_network(spec: &str, h: Option<f64>) -> Result<(Network, Option<BuiltinNetwork>)> {
    let path = Path::new(spec);
    if path.is_file() {
        return Ok((Network::load(path)?, None));
    }
    let mut b = builtin(spec)?;
    if let (Some(_), Some(layout), Some(cpg)) = (h, &b.layout, &b.cpg) {
        if spec.starts_with("biped-lateral") {
            let lift = feedforward_lift(&LiftSpec {
                cpg: cpg.clone(),
                module: ModuleKind::TwoNodeLateral {
                    pairs: crate::netgraph::biped_pairs(),
                    lateral: Some(Weight::Symbol("h".into())),
                },
                n_modules: layout.modules.len(),
            })?;
            b = BuiltinNetwork {
                network: lift.network.with_name(b.network.name()),
                coloring: lift.coloring,
                layout: Some(lift.layout),
                cpg: b.cpg,
            };
        }
    }
    Ok((b.network.clone(), Some(b)))
}

fn orbit_config(params: &RateParams, transient: f64, step: Option<f64>, samples: usize) -> Result<OrbitConfig> {
    if !(transient >= 0.0 && transient.is_finite()) {
        return Err(Error::InvalidParams(format!("transient must be >= 0, got {transient}")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let mut ocfg = OrbitConfig::for_epsilon(params.epsilon);
    ocfg.transient = transient;
    ocfg.samples = samples;
    if let Some(step) = step {
        ocfg.integrator = IntegratorConfig::new(step)?;
    }
    Ok(ocfg)
}

struct Prepared {
    network: Network,
    builtin: Option<BuiltinNetwork>,
    params: RateParams,
    ocfg: OrbitConfig,
    seed: u64,
    provenance: Provenance,
}

impl Prepared {
    fn new(a: &RunArgs) -> Result<Self> {
        let mut params = load_params(&a.params)?;
        if a.h.is_some() {
            params.h = a.h;
        }
        params.validate()?;
        let (network, builtin) = load_network(&a.net, params.h)?;
        let ocfg = orbit_config(&params, a.transient, a.step, a.samples)?;
        let provenance = Provenance::new(&a.net, &params, a.seed, &ocfg);
        Ok(Prepared {
            network,
            builtin,
            params,
            ocfg,
            seed: a.seed,
            provenance,
        })
    }

    /// The CPG of a builtin lift, otherwise the network itself.
    fn cpg(&self) -> &Network {
        self.builtin
            .as_ref()
            .and_then(|b| b.cpg.as_ref())
            .unwrap_or(&self.network)
    }

    fn orbit_on(&self, net: &Network) -> Result<(RateSystem, PeriodicOrbit)> {
        let sys = RateSystem::new(net, &self.params)?;
        let x0 = random_state(2 * sys.n_nodes(), self.seed, 0);
        let orbit = find_orbit(&x0, &sys, &self.ocfg)?;
        Ok((sys, orbit))
    }
}

fn node(n: usize, id: usize) -> Result<NodeId> {
    if id == 0 || id > n {
        return Err(Error::InvalidParams(format!("node {id} is not in 1..={n}")));
    }
    Ok(NodeId(id))
}

fn emit_json<T: Serialize>(value: &T, out: &mut dyn Write, file: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(path) = file {
        std::fs::write(path, format!("{text}\n"))?;
    } else {
        writeln!(out, "{text}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Synchrony {
    synchronous: bool,
    defect: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    provenance: Provenance,
    #[serde(flatten)]
    pattern: PhasePattern,
    closure_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    synchrony: Option<Synchrony>,
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let p = Prepared::new(&a.run)?;
    if !(a.duration > 0.0 && a.duration.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "duration must be > 0, got {}",
            a.duration
        )));
    }
    let (sys, orbit) = p.orbit_on(&p.network)?;
    let mut pattern = phase_shifts(&orbit, 0, &p.ocfg);
    pattern.gait = Some(classify_gait(&pattern, p.ocfg.gait_tolerance));

    let icfg = &p.ocfg.integrator;
    let x0 = random_state(2 * sys.n_nodes(), p.seed, 0);
    let x = settle(&x0, &sys, icfg, p.ocfg.transient)?;
    let traj = integrate(&x, &sys, icfg, p.ocfg.transient, p.ocfg.transient + a.duration)?;
    let synchrony = match &p.builtin {
        Some(b) if b.coloring.n_colours() < b.network.len() => {
            let (synchronous, defect) = synchrony_check(&traj, &b.coloring, SYNCHRONY_TOLERANCE)?;
            Some(Synchrony { synchronous, defect })
        }
        _ => None,
    };
    let report = SimulateReport {
        provenance: p.provenance.clone(),
        pattern,
        closure_defect: orbit.closure_defect,
        synchrony,
    };
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let file = std::fs::File::create(dir.join("trajectory.csv"))?;
            traj.subsample(a.stride).write_csv(std::io::BufWriter::new(file))?;
            emit_json(&report, out, Some(&dir.join("pattern.json")))?;
            emit_json(&report, out, None)
        }
        None => emit_json(&report, out, None),
    }
}

#[derive(Serialize)]
struct FloquetOutput {
    provenance: Provenance,
    module_kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(flatten)]
    report: MultiplierReport,
    /// `|prod(multipliers) / exp(∫ trace) - 1|` for the integrated system.
    liouville_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    module_spread: Option<f64>,
}

fn liouville_defect(ms: &MultiplierSet, orbit: &PeriodicOrbit, sys: &RateSystem) -> f64 {
    let det = ms.values().iter().product::<num_complex::Complex64>();
    (det.re / trace_integral(orbit, sys).exp() - 1.0).abs()
}

fn cmd_floquet(a: &FloquetArgs, out: &mut dyn Write) -> Result<()> {
    let p = Prepared::new(&a.run)?;
    let lateral = p.params.lateral().ok();
    if a.full {
        let layout = p
            .builtin
            .as_ref()
            .and_then(|b| b.layout.clone())
            .ok_or_else(|| Error::InvalidNetwork(format!("`{}` is not a builtin lift", a.run.net)))?;
        let (sys, orbit) = p.orbit_on(&p.network)?;
        let full = monodromy(&orbit, &sys, &p.ocfg.integrator)?;
        let defect = liouville_defect(&full.multipliers()?, &orbit, &sys);
        let split = split_multipliers(&full, &layout, STRUCTURE_TOLERANCE)?;
        let report = FloquetOutput {
            provenance: p.provenance.clone(),
            module_kind: "lift",
            h: lateral.filter(|_| p.params.h.is_some()),
            report: MultiplierReport::new(orbit.period, &split.set, UNIT_TOLERANCE),
            liouville_defect: defect,
            module_spread: Some(split.module_spread),
        };
        return emit_json(&report, out, a.out.as_deref());
    }

    let (sys, orbit) = p.orbit_on(p.cpg())?;
    let icfg = &p.ocfg.integrator;
    let mut ms = monodromy(&orbit, &sys, icfg)?.multipliers()?;
    let defect = liouville_defect(&ms, &orbit, &sys);
    let n = sys.n_nodes();
    let h = match a.module_kind {
        ModuleArg::None => None,
        ModuleArg::OneNode => {
            let t = transverse_monodromy_1node(&orbit, &sys, node(n, a.node)?, icfg)?;
            ms.extend(t.multipliers()?.values(), Block::Transverse(1));
            None
        }
        ModuleArg::TwoNode => {
            let h = p.params.lateral()?;
            let pair = (node(n, a.pair.0)?, node(n, a.pair.1)?);
            let t = transverse_monodromy_2node(&orbit, &sys, pair, h, icfg)?;
            ms.extend(t.multipliers()?.values(), Block::Transverse(1));
            Some(h)
        }
    };
    let report = FloquetOutput {
        provenance: p.provenance.clone(),
        module_kind: a.module_kind.name(),
        h,
        report: MultiplierReport::new(orbit.period, &ms, UNIT_TOLERANCE),
        liouville_defect: defect,
        module_spread: None,
    };
    emit_json(&report, out, a.out.as_deref())
}

#[derive(Serialize)]
struct StabilityOutput {
    provenance: Provenance,
    module_kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    eta_bounds: EtaBounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    activity_bound: Option<ActivityBound>,
    conditions: Vec<ConditionReport>,
}

fn cmd_stability(a: &StabilityArgs, out: &mut dyn Write) -> Result<()> {
    let p = Prepared::new(&a.run)?;
    let max_slope = p.params.gain.max_slope();
    let g = p.params.g;
    let eps = p.params.epsilon;
    let (period, bounds, activity_bound, orbit) = if a.global_bounds {
        (None, EtaBounds::global(max_slope), None, None)
    } else {
        let (sys, orbit) = p.orbit_on(p.cpg())?;
        let etas: Vec<f64> = (1..=sys.n_nodes())
            .flat_map(|i| eta_series(&orbit, &sys, NodeId(i)))
            .collect();
        let bounds = EtaBounds::from_values(&etas, max_slope);
        let ab = activity_g_bound(&orbit, &sys);
        (Some(orbit.period), bounds, Some(ab), Some((sys, orbit)))
    };
    let mut conditions = Vec::new();
    if a.module_kind != ModuleArg::None {
        conditions.push(check_liap1(g, &bounds));
        conditions.push(check_floquet_bound(g, eps, &bounds));
        conditions.push(check_liap2(g, eps, &bounds));
    }
    if a.module_kind == ModuleArg::TwoNode {
        let (sys, orbit) = orbit
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("the lateral condition needs an orbit".into()))?;
        let n = sys.n_nodes();
        let pair = (node(n, a.pair.0)?, node(n, a.pair.1)?);
        conditions.push(lateral_margin(orbit, sys, pair, p.params.lateral()?));
    }
    let report = StabilityOutput {
        provenance: p.provenance.clone(),
        module_kind: a.module_kind.name(),
        period,
        eta_bounds: bounds,
        activity_bound,
        conditions,
    };
    emit_json(&report, out, a.out.as_deref())
}

/// One row of a gait sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub gait: String,
    pub period: Option<f64>,
}

fn sweep_point(net: &Network, params: &RateParams, ocfg: &OrbitConfig, seed: u64, index: u64) -> (String, Option<f64>) {
    let result = RateSystem::new(net, params).and_then(|sys| {
        let x0 = random_state(2 * sys.n_nodes(), seed, index);
        find_orbit(&x0, &sys, ocfg)
    });
    match result {
        Ok(orbit) => {
            let pattern = phase_shifts(&orbit, 0, ocfg);
            (
                classify_gait(&pattern, ocfg.gait_tolerance).to_string(),
                Some(orbit.period),
            )
        }
        Err(Error::NoOscillation { .. } | Error::DegenerateOrbit { .. }) => ("equilibrium".into(), None),
        Err(_) => ("other".into(), None),
    }
}

fn worker_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Classifies every grid point, in parallel, with seed stream equal to the
/// grid index.
pub fn run_sweep(a: &SweepArgs) -> Result<Vec<SweepRow>> {
    let (net, _) = load_network(&a.net, None)?;
    let mut points = Vec::new();
    for &alpha in &a.alpha.0 {
        for &beta in &a.beta.0 {
            for &gamma in &a.gamma.0 {
                points.push((alpha, beta, gamma));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidParams("sweep grid is empty".into()));
    }
    let base = RateParams::biped(a.epsilon, a.g, a.input, 0.0, 0.0, 0.0);
    base.validate()?;
    let ocfg = orbit_config(&base, a.transient, a.step, a.samples)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_threads() {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(k, &(alpha, beta, gamma))| {
                let mut params = base.clone();
                params.alpha = Some(alpha);
                params.beta = Some(beta);
                params.gamma = Some(gamma);
                let (gait, period) = sweep_point(&net, &params, &ocfg, a.seed, k as u64);
                SweepRow {
                    alpha,
                    beta,
                    gamma,
                    gait,
                    period,
                }
            })
            .collect()
    });
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("alpha,beta,gamma,gait,period\n");
    for r in rows {
        let period = r.period.map(|t| format!("{t:.6}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.alpha, r.beta, r.gamma, r.gait, period);
    }
    s
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let csv = sweep_csv(&run_sweep(a)?);
    match &a.out {
        Some(path) => std::fs::write(path, csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ReproRow {
    name: String,
    provenance: Provenance,
    period: Option<f64>,
    reference_period: Option<f64>,
    computed: Vec<f64>,
    reference: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ReproOutput {
    tool: &'static str,
    version: &'static str,
    table: String,
    rows: Vec<ReproRow>,
}

fn moduli(ms: &MultiplierSet) -> Vec<f64> {
    ms.values().iter().map(|v| v.norm()).collect()
}

fn repro_row(
    name: &str,
    network: &str,
    params: &RateParams,
    seed: u64,
    reference_period: Option<f64>,
    reference: &[f64],
    compute: impl FnOnce(&RateSystem, &PeriodicOrbit, &OrbitConfig) -> Result<Vec<f64>>,
) -> ReproRow {
    let ocfg = OrbitConfig::for_epsilon(params.epsilon);
    let provenance = Provenance::new(network, params, seed, &ocfg);
    let result = builtin(network).and_then(|b| {
        let sys = RateSystem::new(&b.network, params)?;
        let orbit = find_orbit(&random_state(2 * sys.n_nodes(), seed, 0), &sys, &ocfg)?;
        let values = compute(&sys, &orbit, &ocfg)?;
        Ok((orbit.period, values))
    });
    let (period, computed, error) = match result {
        Ok((t, v)) => (Some(t), v, None),
        Err(e) => (None, Vec::new(), Some(e.to_string())),
    };
    ReproRow {
        name: name.to_string(),
        provenance,
        period,
        reference_period,
        computed,
        reference: reference.to_vec(),
        error,
    }
}

/// Recomputes a bundled reference table. Each row lists computed and
/// reference moduli (or bounds) side by side.
fn repro(table: TableId, seed: u64) -> Vec<ReproRow> {
    match table {
        TableId::Chain7 => presets::chain7_sets()
            .iter()
            .flat_map(|p| {
                let reference: Vec<f64> = p.cpg.iter().chain(p.transverse).copied().collect();
                [repro_row(
                    p.name,
                    "ring3",
                    &p.params,
                    seed,
                    Some(p.period),
                    &reference,
                    |sys, orbit, ocfg| {
                        let mut v = moduli(&monodromy(orbit, sys, &ocfg.integrator)?.multipliers()?);
                        let t = transverse_monodromy_1node(orbit, sys, NodeId(1), &ocfg.integrator)?;
                        v.extend(moduli(&t.multipliers()?));
                        Ok(v)
                    },
                )]
            })
            .collect(),
        TableId::Biped1Node => presets::biped_gaits()
            .iter()
            .map(|p| {
                let reference: Vec<f64> = p.cpg.iter().chain(p.transverse).copied().collect();
                repro_row(
                    p.name,
                    "biped4",
                    &p.params,
                    seed,
                    Some(p.period),
                    &reference,
                    |sys, orbit, ocfg| {
                        let mut v = moduli(&monodromy(orbit, sys, &ocfg.integrator)?.multipliers()?);
                        let t = transverse_monodromy_1node(orbit, sys, NodeId(1), &ocfg.integrator)?;
                        v.extend(moduli(&t.multipliers()?));
                        Ok(v)
                    },
                )
            })
            .collect(),
        TableId::Biped2Node => presets::biped_gaits()
            .iter()
            .map(|p| {
                let h = p.params.lateral().unwrap_or(0.0);
                repro_row(
                    p.name,
                    "biped4",
                    &p.params,
                    seed,
                    Some(p.period),
                    p.transverse_2node,
                    |sys, orbit, ocfg| {
                        let t = transverse_monodromy_2node(orbit, sys, (NodeId(1), NodeId(3)), h, &ocfg.integrator)?;
                        Ok(moduli(&t.multipliers()?))
                    },
                )
            })
            .collect(),
        TableId::GaitBounds => presets::refined_gaits()
            .iter()
            .map(|(gait, params, act, bound)| {
                repro_row(
                    &gait.to_string(),
                    "biped4",
                    params,
                    seed,
                    None,
                    &[*act, *bound],
                    |sys, orbit, _| {
                        let ab = activity_g_bound(orbit, sys);
                        Ok(vec![ab.activity_max, ab.g_bound])
                    },
                )
            })
            .collect(),
    }
}

fn cmd_repro(a: &ReproArgs, out: &mut dyn Write) -> Result<()> {
    let table = a
        .table
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let report = ReproOutput {
        tool: "gaitlift",
        version: crate::VERSION,
        table,
        rows: repro(a.table, a.seed),
    };
    emit_json(&report, out, a.out.as_deref())
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Floquet(a) => cmd_floquet(a, out),
        Command::Stability(a) => cmd_stability(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Net {
            command: NetCommand::Export { name },
        } => {
            let text = builtin(name)?.network.to_json();
            writeln!(out, "{text}")?;
            Ok(())
        }
        Command::Repro(a) => cmd_repro(a, out),
    }
}

/// Exit code for an error: 2 when no periodic orbit could be established.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoOscillation { .. }
        | Error::DegenerateOrbit { .. }
        | Error::IrregularPeriod { .. }
        | Error::ClosureFailure { .. } => EXIT_NO_ORBIT,
        _ => EXIT_ERROR,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "gaitlift: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("gaitlift").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.5").unwrap().0, vec![0.5]);
        assert_eq!(parse_range("-1:1:3").unwrap().0, vec![-1.0, 0.0, 1.0]);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("1,3").unwrap(), (1, 3));
        assert!(parse_pair("2,2").is_err());
        assert!(parse_pair("0,1").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run_capture(&["simulate"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("--params"));
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
        let (code, _, err) = run_capture(&["simulate", "--params", "/no/such/file.json"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("gaitlift:"));
    }

    #[test]
    fn export_round_trips() {
        let (code, out, _) = run_capture(&["net", "export", "biped4"]);
        assert_eq!(code, EXIT_OK);
        let net = Network::from_json(&out).unwrap();
        assert_eq!(net, builtin("biped4").unwrap().network);
    }

    #[test]
    fn lateral_rebuild_uses_h() {
        let (net, b) = load_network("biped-lateral(1)", Some(0.3)).unwrap();
        assert_eq!(net.len(), 6);
        assert!(net.arrows().iter().any(|a| a.weight == Weight::Symbol("h".into())));
        assert!(b.unwrap().layout.is_some());
        let (plain, _) = load_network("biped-lateral(1)", None).unwrap();
        assert!(!plain.arrows().iter().any(|a| a.weight == Weight::Symbol("h".into())));
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::NoOscillation { amplitude: 0.0 }), EXIT_NO_ORBIT);
        assert_eq!(exit_code(&Error::UnknownNetwork("x".into())), EXIT_ERROR);
    }
}
