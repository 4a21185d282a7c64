//! Forward-Euler enthalpy scheme `V^j = V^{j−1} − Δt·ℒ^{Δx}Φ(V^{j−1})`,
//! run loop with snapshots, invariant monitors and refinement studies.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{excess_mass, fmt17, l1_local_distance, FarField, Field, Grid1D, InitialDatum};
use crate::nonlinearity::StefanGraph;
use crate::operator::Stencil;

/// Slack allowed on the CFL bound when a time step is supplied directly.
const CFL_SLACK: f64 = 1e-12;
/// Slack on the discrete maximum principle before a run aborts.
const STABILITY_SLACK: f64 = 1e-9;

/// `θ / (Lip(Φ)·row_sum)`, the largest monotone step scaled by `θ`.
pub fn cfl_dt(st: &Stencil, graph: &StefanGraph, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(
            "theta",
            format!("must lie in (0, 1], got {theta}"),
        ));
    }
    Ok(theta / (graph.lipschitz_bound() * st.row_sum()))
}

/// Which per-step records a run keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Monitors {
    /// Record every `log_every` steps; 0 disables the log.
    pub log_every: usize,
    /// Abort when a nodal value leaves the initial range.
    pub stability: bool,
}

impl Default for Monitors {
    fn default() -> Self {
        Monitors {
            log_every: 1,
            stability: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub graph: StefanGraph,
    pub stencil: Stencil,
    pub grid: Grid1D,
    pub farfield: FarField,
    pub final_time: f64,
    pub theta: f64,
    pub snapshot_times: Vec<f64>,
    pub monitors: Monitors,
}

impl RunConfig {
    /// Config with `θ = 0.9`, a full-window stencil and default monitors.
    pub fn new(
        graph: StefanGraph,
        stencil: Stencil,
        grid: Grid1D,
        farfield: FarField,
        final_time: f64,
        snapshot_times: Vec<f64>,
    ) -> Self {
        RunConfig {
            graph,
            stencil,
            grid,
            farfield,
            final_time,
            theta: 0.9,
            snapshot_times,
            monitors: Monitors::default(),
        }
    }

    pub fn dt(&self) -> Result<f64> {
        cfl_dt(&self.stencil, &self.graph, self.theta)
    }

    fn validate(&self) -> Result<()> {
        if (self.stencil.dx() - self.grid.dx()).abs() > 1e-12 * self.grid.dx() {
            return Err(Error::GridMismatch(
                "stencil spacing differs from the grid".into(),
            ));
        }
        if !(self.final_time.is_finite() && self.final_time > 0.0) {
            return Err(Error::param(
                "T",
                format!("final time must be > 0, got {}", self.final_time),
            ));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param(
                "snapshot_times",
                "must be strictly increasing",
            ));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.final_time))
        {
            return Err(Error::param(
                "snapshot_times",
                format!("{t} lies outside [0, T]"),
            ));
        }
        Ok(())
    }
}

/// A field at the first grid time `t_j >= requested`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub requested: f64,
    pub time: f64,
    pub step: usize,
    pub field: Field,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorRecord {
    pub step: usize,
    pub time: f64,
    pub sup: f64,
    pub inf: f64,
    pub excess_mass: f64,
    /// Cumulative mass that has left the window through the far-field terms.
    pub deposited: f64,
}

/// Snapshots, the monitor log and enough provenance to interpret them.
#[derive(Clone, Debug)]
pub struct SnapshotSeries {
    initial: Field,
    snapshots: Vec<Snapshot>,
    monitor_log: Vec<MonitorRecord>,
    graph: StefanGraph,
    dt: f64,
    steps: usize,
    datum: Option<InitialDatum>,
}

impl SnapshotSeries {
    pub fn initial(&self) -> &Field {
        &self.initial
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn monitor_log(&self) -> &[MonitorRecord] {
        &self.monitor_log
    }

    pub fn graph(&self) -> &StefanGraph {
        &self.graph
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn datum(&self) -> Option<&InitialDatum> {
        self.datum.as_ref()
    }

    /// Records the initial datum the run started from.
    pub fn with_datum(mut self, datum: InitialDatum) -> Self {
        self.datum = Some(datum);
        self
    }

    /// Snapshot taken for the requested time `t`.
    pub fn at(&self, t: f64) -> Result<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.requested - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| Error::Domain(format!("no snapshot was requested at t = {t}")))
    }

    /// Largest `|t_j − requested|` over all snapshots.
    pub fn alignment_error(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| s.time - s.requested)
            .fold(0.0, f64::max)
    }

    /// `|excess(t) + deposited(t) − excess(0)|` at the last record.
    pub fn mass_drift(&self) -> f64 {
        match (self.monitor_log.first(), self.monitor_log.last()) {
            (Some(a), Some(b)) => (b.excess_mass + b.deposited - a.excess_mass).abs(),
            _ => 0.0,
        }
    }

    /// Monitor CSV `step,time,sup,inf,excess_mass,deposited`.
    pub fn write_monitor_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,time,sup,inf,excess_mass,deposited")?;
        for r in &self.monitor_log {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step,
                fmt17(r.time),
                fmt17(r.sup),
                fmt17(r.inf),
                fmt17(r.excess_mass),
                fmt17(r.deposited)
            )?;
        }
        Ok(())
    }
}

/// Reusable buffers for repeated steps with one stencil and graph.
struct Engine<'a> {
    st: &'a Stencil,
    graph: &'a StefanGraph,
    far_u: (f64, f64),
    u: Vec<f64>,
    lu: Vec<f64>,
    left_out: Vec<f64>,
    right_out: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(st: &'a Stencil, graph: &'a StefanGraph, n: usize, far: FarField) -> Self {
        let (left_out, right_out) = (0..n).map(|b| st.offwindow_weights(n, b)).unzip();
        Engine {
            st,
            graph,
            far_u: (graph.eval(far.left), graph.eval(far.right)),
            u: vec![0.0; n],
            lu: vec![0.0; n],
            left_out,
            right_out,
        }
    }

    /// Advances `v` in place; returns the mass that left the window.
    fn advance(&mut self, v: &mut [f64], dt: f64, dx: f64) -> f64 {
        self.graph.eval_into(v, &mut self.u);
        self.st.apply_into(&self.u, self.far_u, &mut self.lu);
        for (v, l) in v.iter_mut().zip(&self.lu) {
            *v -= dt * l;
        }
        let (fl, fr) = self.far_u;
        let flux: f64 = self
            .u
            .iter()
            .zip(self.left_out.iter().zip(&self.right_out))
            .map(|(u, (lo, ro))| (u - fl) * lo + (u - fr) * ro)
            .sum();
        dt * dx * flux
    }
}

fn check_dt(st: &Stencil, graph: &StefanGraph, dt: f64) -> Result<()> {
    let max = cfl_dt(st, graph, 1.0)?;
    if !(dt > 0.0) || dt > max * (1.0 + CFL_SLACK) {
        return Err(Error::CflViolation { dt, max });
    }
    Ok(())
}

/// One explicit step. The far field is left unchanged.
pub fn step(state: &Field, st: &Stencil, graph: &StefanGraph, dt: f64) -> Result<Field> {
    check_dt(st, graph, dt)?;
    if (st.dx() - state.grid().dx()).abs() > 1e-12 * st.dx() {
        return Err(Error::GridMismatch(
            "stencil spacing differs from the grid".into(),
        ));
    }
    let mut v = state.values().to_vec();
    let mut engine = Engine::new(st, graph, v.len(), state.farfield());
    engine.advance(&mut v, dt, state.grid().dx());
    Ok(state.with_values(v, state.farfield()))
}

/// Mass that one step from `state` moves beyond the window.
pub fn step_outflow(state: &Field, st: &Stencil, graph: &StefanGraph, dt: f64) -> f64 {
    let mut v = state.values().to_vec();
    let mut engine = Engine::new(st, graph, v.len(), state.farfield());
    engine.advance(&mut v, dt, state.grid().dx())
}

/// Runs `cfg` from `initial` up to the first grid time `>= T`.
pub fn run(cfg: &RunConfig, initial: &Field) -> Result<SnapshotSeries> {
    cfg.validate()?;
    if !cfg.grid.same_as(initial.grid()) {
        return Err(Error::GridMismatch(
            "initial field is not on the run grid".into(),
        ));
    }
    if initial.farfield() != cfg.farfield {
        return Err(Error::param(
            "farfield",
            "initial field and config disagree",
        ));
    }
    let dt = cfg.dt()?;
    let dx = cfg.grid.dx();
    let ff = cfg.farfield;
    let lower = initial.min().min(ff.min()) - STABILITY_SLACK;
    let upper = initial.max().max(ff.max()) + STABILITY_SLACK;

    let mut v = initial.values().to_vec();
    let mut engine = Engine::new(&cfg.stencil, &cfg.graph, v.len(), ff);
    let mut snapshots = Vec::with_capacity(cfg.snapshot_times.len());
    let mut log = Vec::new();
    let mut pending = cfg.snapshot_times.iter().copied().peekable();
    let mut deposited = 0.0;
    let mut j = 0usize;
    loop {
        let t = j as f64 * dt;
        let current = || initial.with_values(v.clone(), ff);
        while let Some(req) = pending.next_if(|req| *req <= t + 1e-12 * dt) {
            snapshots.push(Snapshot {
                requested: req,
                time: t,
                step: j,
                field: current(),
            });
        }
        let log_now = cfg.monitors.log_every > 0 && j.is_multiple_of(cfg.monitors.log_every);
        let done = t >= cfg.final_time - 1e-12 * dt && pending.peek().is_none();
        if log_now || (done && cfg.monitors.log_every > 0) {
            let field = current();
            log.push(MonitorRecord {
                step: j,
                time: t,
                sup: field.max(),
                inf: field.min(),
                excess_mass: excess_mass(&field, &ff),
                deposited,
            });
        }
        if done {
            break;
        }
        deposited += engine.advance(&mut v, dt, dx);
        j += 1;
        if cfg.monitors.stability {
            if let Some((node, value)) = v
                .iter()
                .enumerate()
                .find(|(_, h)| !(**h >= lower && **h <= upper))
            {
                return Err(Error::StabilityViolation {
                    node,
                    time: j as f64 * dt,
                    value: *value,
                    lower,
                    upper,
                });
            }
        }
    }
    Ok(SnapshotSeries {
        initial: initial.clone(),
        snapshots,
        monitor_log: log,
        graph: cfg.graph,
        dt,
        steps: j,
        datum: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairRecord {
    pub step: usize,
    pub time: f64,
    /// `first <= second` at every node.
    pub ordered: bool,
    /// `dx·Σ(first − second)⁺`.
    pub l1_plus: f64,
}

/// Two runs advanced in lockstep.
#[derive(Clone, Debug)]
pub struct PairReport {
    pub first: Field,
    pub second: Field,
    pub records: Vec<PairRecord>,
}

impl PairReport {
    pub fn comparison_held(&self) -> bool {
        self.records.iter().all(|r| r.ordered)
    }

    /// Whether `dx·Σ(a − b)⁺` never increased by more than `slack`.
    pub fn l1_contracted(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].l1_plus <= w[0].l1_plus + slack)
    }
}

/// Runs the same configuration from two data with the same far field,
/// recording the comparison flag and the positive-part `L¹` gap each step.
pub fn run_pair(cfg: &RunConfig, a: &Field, b: &Field) -> Result<PairReport> {
    if a.farfield() != b.farfield() {
        return Err(Error::param(
            "farfield",
            "paired runs need equal far fields",
        ));
    }
    cfg.validate()?;
    let dt = cfg.dt()?;
    let dx = cfg.grid.dx();
    let gap = |x: &[f64], y: &[f64]| -> (bool, f64) {
        let ordered = x.iter().zip(y).all(|(p, q)| p <= q);
        let plus: f64 = x.iter().zip(y).map(|(p, q)| (p - q).max(0.0)).sum();
        (ordered, dx * plus)
    };
    let mut va = a.values().to_vec();
    let mut vb = b.values().to_vec();
    let mut ea = Engine::new(&cfg.stencil, &cfg.graph, va.len(), a.farfield());
    let mut eb = Engine::new(&cfg.stencil, &cfg.graph, vb.len(), b.farfield());
    let mut records = Vec::new();
    let mut j = 0usize;
    loop {
        let t = j as f64 * dt;
        let (ordered, l1_plus) = gap(&va, &vb);
        records.push(PairRecord {
            step: j,
            time: t,
            ordered,
            l1_plus,
        });
        if t >= cfg.final_time - 1e-12 * dt {
            break;
        }
        ea.advance(&mut va, dt, dx);
        eb.advance(&mut vb, dt, dx);
        j += 1;
    }
    Ok(PairReport {
        first: a.with_values(va, a.farfield()),
        second: b.with_values(vb, b.farfield()),
        records,
    })
}

/// Largest jump `|u_{β+1} − u_β|` of the temperature.
pub fn max_temperature_jump(field: &Field, graph: &StefanGraph) -> f64 {
    let u = graph.temperatures(field.values());
    u.windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}

/// Average of `fine` over the cells of `coarse`, sampled at the nodes of
/// `coarse` that lie in `k`.
///
/// For an even ratio `r` the coarse cell edges sit on fine nodes, which then
/// count with weight 1/2; for odd `r` the cell holds exactly `r` fine nodes.
pub fn restrict_to(fine: &Field, coarse: &Grid1D) -> Result<Vec<f64>> {
    let r = coarse
        .nested_ratio(fine.grid())
        .ok_or_else(|| Error::GridMismatch("grids are not nested".into()))?;
    let offset = ((coarse.x_min() - fine.grid().x_min()) / fine.grid().dx()).round() as isize;
    let fv = fine.values();
    let n = fv.len() as isize;
    let half = (r / 2) as isize;
    let get = |i: isize| -> f64 {
        if i < 0 {
            fine.farfield().left
        } else if i >= n {
            fine.farfield().right
        } else {
            fv[i as usize]
        }
    };
    Ok((0..coarse.len() as isize)
        .map(|c| {
            let center = offset + c * r as isize;
            if r == 1 {
                return get(center);
            }
            let mut sum = 0.0;
            if r % 2 == 0 {
                for k in -(half - 1)..=(half - 1) {
                    sum += get(center + k);
                }
                sum += 0.5 * (get(center - half) + get(center + half));
            } else {
                for k in -half..=half {
                    sum += get(center + k);
                }
            }
            sum / r as f64
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub error: f64,
    /// `error / previous error`, absent on the first level.
    pub ratio: Option<f64>,
}

/// For each level, the maximum over common snapshot times of the `L¹(K)`
/// distance to the cell-averaged reference.
pub fn convergence_study(
    levels: &[SnapshotSeries],
    reference: &SnapshotSeries,
    k: (f64, f64),
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for level in levels {
        let grid = *level.initial().grid();
        if grid.nested_ratio(reference.initial().grid()).is_none() {
            return Err(Error::GridMismatch(format!(
                "level dx = {} is not nested in the reference grid",
                grid.dx()
            )));
        }
        let mut error: f64 = 0.0;
        for snap in level.snapshots() {
            let refsnap = reference.at(snap.requested)?;
            let restricted = restrict_to(&refsnap.field, &grid)?;
            let restricted = snap.field.with_values(restricted, snap.field.farfield());
            error = error.max(l1_local_distance(&snap.field, &restricted, k)?);
        }
        let ratio = rows.last().map(|prev| error / prev.error);
        rows.push(ConvergenceRow {
            dx: grid.dx(),
            error,
            ratio,
        });
    }
    Ok(rows)
}
