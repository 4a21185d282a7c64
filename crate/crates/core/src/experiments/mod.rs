//! Scenario driver: runs configs, writes snapshots, monitor logs,
//! metadata, plots and manifests, and reproduces the qualitative figures.

pub mod artifacts;
pub mod config;
pub mod figures;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{fmt17, InitialDatum};
use crate::nonlinearity::{GraphKind, StefanGraph};
use crate::operator::{Order, Stencil};
use crate::oracle::{antisym_exact_u, weak_residual, BumpTest};
use crate::selfsimilar::{collapse_error, detect_interfaces, extract_profile};
use crate::stepper::{max_temperature_jump, run, SnapshotSeries};

pub use artifacts::{blob_hash, snapshot_name, OutputDir};
pub use config::{Analysis, LadderConfig, OrderSpec, ScenarioConfig};
pub use figures::{
    figure2, figure4, figure5, positivity_check, sandwich_check, Figure2Settings, Figure4Settings,
    Figure5Settings,
};

/// Runs a scenario without writing anything.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SnapshotSeries> {
    let rc = cfg.run_config()?;
    let initial = cfg.initial_field()?;
    Ok(run(&rc, &initial)?.with_datum(cfg.datum.clone()))
}

#[derive(Clone, Debug, Serialize)]
pub struct MonitorSummary {
    pub sup_max: f64,
    pub inf_min: f64,
    pub excess_mass_initial: f64,
    pub excess_mass_final: f64,
    pub deposited: f64,
    pub mass_drift: f64,
    pub mass_drift_per_time: f64,
    pub max_temperature_jump_final: f64,
}

pub fn monitor_summary(series: &SnapshotSeries) -> MonitorSummary {
    let log = series.monitor_log();
    let first = log.first();
    let last = log.last();
    let t_end = last.map_or(0.0, |r| r.time);
    let drift = series.mass_drift();
    let final_field = series
        .snapshots()
        .last()
        .map(|s| &s.field)
        .unwrap_or_else(|| series.initial());
    MonitorSummary {
        sup_max: log.iter().map(|r| r.sup).fold(f64::NEG_INFINITY, f64::max),
        inf_min: log.iter().map(|r| r.inf).fold(f64::INFINITY, f64::min),
        excess_mass_initial: first.map_or(0.0, |r| r.excess_mass),
        excess_mass_final: last.map_or(0.0, |r| r.excess_mass),
        deposited: last.map_or(0.0, |r| r.deposited),
        mass_drift: drift,
        mass_drift_per_time: if t_end > 0.0 { drift / t_end } else { 0.0 },
        max_temperature_jump_final: max_temperature_jump(final_field, series.graph()),
    }
}

/// Amplitude `P` of antisymmetric Riemann data for a two-phase graph.
fn antisymmetric_amplitude(graph: &StefanGraph, datum: &InitialDatum) -> Result<f64> {
    let (b1, b2) = match datum {
        InitialDatum::Riemann { b1, b2, c } if *c == 0.0 => (*b1, *b2),
        _ => {
            return Err(Error::Domain(
                "oracle comparison needs Riemann data at 0".into(),
            ))
        }
    };
    let (lo, hi) = match graph.kind {
        GraphKind::OnePhase => {
            return Err(Error::Domain(
                "oracle comparison needs a two-phase graph".into(),
            ))
        }
        _ => graph.flat_interval(),
    };
    let (p1, p2) = (b1 - hi, lo - b2);
    if (p1 - p2).abs() > 1e-12 * p1.abs().max(1.0) || p1 <= 0.0 {
        return Err(Error::Domain(format!(
            "oracle comparison needs P1 = P2 > 0, got {p1} and {p2}"
        )));
    }
    Ok(p1)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison {
    pub p: f64,
    pub s: f64,
    pub time: f64,
    pub region: [f64; 2],
    pub max_abs_error: f64,
    pub u_at_origin: f64,
}

/// Error of the final snapshot against the exact antisymmetric temperature
/// on `|x| <= 2`, plus the table `x,u_num,u_exact`.
pub fn oracle_comparison(series: &SnapshotSeries, s: f64) -> Result<(OracleComparison, String)> {
    let graph = series.graph();
    let datum = series
        .datum()
        .ok_or_else(|| Error::Domain("series carries no datum".into()))?;
    let p = antisymmetric_amplitude(graph, datum)?;
    let snap = series
        .snapshots()
        .last()
        .ok_or_else(|| Error::Domain("series has no snapshots".into()))?;
    let grid = snap.field.grid();
    let u = graph.temperatures(snap.field.values());
    let mut table = String::from("x,u_num,u_exact\n");
    let mut max_err: f64 = 0.0;
    for i in grid.indices_in((-2.0, 2.0)) {
        let x = grid.node(i);
        let exact = antisym_exact_u(p, s, x, snap.time)?;
        max_err = max_err.max((u[i] - exact).abs());
        table.push_str(&format!("{},{},{}\n", fmt17(x), fmt17(u[i]), fmt17(exact)));
    }
    let origin = grid.nearest(0.0);
    if grid.node(origin).abs() > 1e-9 * grid.dx() {
        return Err(Error::Domain("x = 0 is not a grid node".into()));
    }
    Ok((
        OracleComparison {
            p,
            s,
            time: snap.time,
            region: [-2.0, 2.0],
            max_abs_error: max_err,
            u_at_origin: u[origin],
        },
        table,
    ))
}

fn plot_snapshots(out: &mut OutputDir, series: &SnapshotSeries, tag: &str) -> Result<()> {
    let graph = series.graph();
    let mut hs = Vec::new();
    let mut us = Vec::new();
    for snap in series.snapshots() {
        let grid = snap.field.grid();
        let label = format!("t = {}", snap.requested);
        let h: Vec<(f64, f64)> = grid
            .nodes()
            .zip(snap.field.values().iter().copied())
            .collect();
        let u: Vec<(f64, f64)> = h.iter().map(|(x, h)| (*x, graph.eval(*h))).collect();
        hs.push((label.clone(), h));
        us.push((label, u));
    }
    let title = |q: &str| format!("{tag}: {q}");
    out.write(
        "plot_h.svg",
        artifacts::line_chart(&title("enthalpy"), "x", "h", &hs).as_bytes(),
    )?;
    out.write(
        "plot_u.svg",
        artifacts::line_chart(&title("temperature"), "x", "u", &us).as_bytes(),
    )?;
    Ok(())
}

fn write_snapshots(out: &mut OutputDir, series: &SnapshotSeries) -> Result<()> {
    let graph = *series.graph();
    for snap in series.snapshots() {
        out.write_with(&snapshot_name(snap.requested), |w| {
            snap.field.write_csv(&graph, w)
        })?;
    }
    out.write_with("monitor.csv", |w| series.write_monitor_csv(w))?;
    Ok(())
}

fn stencil_header(st: &Stencil) -> Value {
    st.header_json()
}

/// What `simulate` produced.
#[derive(Debug)]
pub struct SimulationOutput {
    pub series: SnapshotSeries,
    pub metadata: Value,
}

/// Runs `cfg` and writes snapshots, the monitor log, metadata, plots and a
/// manifest into `out`.
pub fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<SimulationOutput> {
    let mut dir = OutputDir::create(out)?;
    let started = Instant::now();
    let series = run_scenario(cfg)?;
    let wall = started.elapsed().as_secs_f64();
    write_snapshots(&mut dir, &series)?;
    plot_snapshots(&mut dir, &series, &cfg.scenario)?;

    let order = cfg.order()?;
    let mut analyses = serde_json::Map::new();
    for a in &cfg.analyses {
        let (key, value) = run_analysis(*a, cfg, order, &series, &mut dir)?;
        analyses.insert(key.to_string(), value);
    }
    let stencil = cfg.stencil()?;
    let metadata = json!({
        "config": cfg,
        "dt": series.dt(),
        "steps": series.steps(),
        "wall_time_s": wall,
        "sampling": cfg.sampling,
        "snapshot_alignment_error": series.alignment_error(),
        "snapshot_times": series.snapshots().iter().map(|s| json!({
            "requested": s.requested, "time": s.time, "step": s.step
        })).collect::<Vec<_>>(),
        "stencil": stencil_header(&stencil),
        "monitors": monitor_summary(&series),
        "analyses": analyses,
    });
    dir.write_json("metadata.json", &metadata)?;
    dir.finish(json!({
        "command": "simulate",
        "config": cfg,
        "dx": cfg.dx,
        "dt": series.dt(),
        "theta": cfg.theta,
    }))?;
    Ok(SimulationOutput { series, metadata })
}

fn run_analysis(
    a: Analysis,
    cfg: &ScenarioConfig,
    order: Order,
    series: &SnapshotSeries,
    dir: &mut OutputDir,
) -> Result<(&'static str, Value)> {
    let t_end = cfg.final_time;
    Ok(match a {
        Analysis::Oracle => {
            let s = match order {
                Order::Fractional(s) => s,
                Order::Local => {
                    return Ok((
                        "oracle",
                        json!({"skipped": "no kernel for the local operator"}),
                    ))
                }
            };
            let (cmp, table) = oracle_comparison(series, s)?;
            dir.write("oracle.csv", table.as_bytes())?;
            ("oracle", serde_json::to_value(cmp)?)
        }
        Analysis::Interfaces => {
            let p = extract_profile(series, order, t_end)?;
            match detect_interfaces(&p, None) {
                Ok(r) => {
                    dir.write_json("interfaces.json", &r)?;
                    ("interfaces", serde_json::to_value(r)?)
                }
                Err(Error::NoCrossing { level }) => {
                    ("interfaces", json!({"status": "window", "level": level}))
                }
                Err(e) => return Err(e),
            }
        }
        Analysis::Profile => {
            let mut files = Vec::new();
            for snap in series.snapshots().iter().filter(|s| s.time > 0.0) {
                let p = extract_profile(series, order, snap.requested)?;
                let name = format!("profile_t{}.csv", snap.requested);
                dir.write_with(&name, |w| p.write_csv(w))?;
                files.push(name);
            }
            ("profile", json!({ "files": files }))
        }
        Analysis::Positivity => {
            let r = positivity_check(series, None)?;
            ("positivity", serde_json::to_value(r)?)
        }
        Analysis::Sandwich => {
            let r = sandwich_check(cfg)?;
            ("sandwich", serde_json::to_value(r)?)
        }
        Analysis::WeakResidual => {
            let grid = cfg.grid()?;
            let len = grid.x_max() - grid.x_min();
            let psi = BumpTest {
                center: 0.5 * (grid.x_min() + grid.x_max()),
                radius: 0.25 * len,
                horizon: t_end,
            };
            let r = weak_residual(series, series.graph(), &psi, &cfg.stencil()?)?;
            (
                "weak_residual",
                json!({ "residual": r, "test_radius": psi.radius }),
            )
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileEntry {
    pub requested: f64,
    pub time: f64,
    pub file: String,
    pub interfaces: Value,
}

/// Runs a Riemann scenario and writes the profile at every positive
/// snapshot time, the interface points and the collapse errors of
/// consecutive profiles on the central half of the window.
pub fn profile(cfg: &ScenarioConfig, out: &Path) -> Result<Value> {
    let mut dir = OutputDir::create(out)?;
    let order = cfg.order()?;
    let series = run_scenario(cfg)?;
    let mut entries = Vec::new();
    let mut plots = Vec::new();
    let snaps: Vec<_> = series.snapshots().iter().filter(|s| s.time > 0.0).collect();
    for snap in &snaps {
        let p = extract_profile(&series, order, snap.requested)?;
        let file = format!("profile_t{}.csv", snap.requested);
        dir.write_with(&file, |w| p.write_csv(w))?;
        let interfaces = match detect_interfaces(&p, None) {
            Ok(r) => serde_json::to_value(r)?,
            Err(Error::NoCrossing { level }) => json!({"status": "window", "level": level}),
            Err(e) => return Err(e),
        };
        plots.push((
            format!("t = {}", snap.requested),
            p.xi.iter()
                .copied()
                .zip(p.h.iter().copied())
                .collect::<Vec<_>>(),
        ));
        entries.push(ProfileEntry {
            requested: snap.requested,
            time: snap.time,
            file,
            interfaces,
        });
    }
    let grid = cfg.grid()?;
    let k = (0.5 * grid.x_min(), 0.5 * grid.x_max());
    let mut collapse = Vec::new();
    for w in snaps.windows(2) {
        // ξ-range of the later time is the smaller one
        let scale = w[1].time.powf(-order.scaling_exponent());
        let kk = (k.0 * scale, k.1 * scale);
        let e = collapse_error(&series, order, (w[0].requested, w[1].requested), kk)?;
        collapse.push(
            json!({"times": [w[0].requested, w[1].requested], "K": [kk.0, kk.1], "error": e}),
        );
    }
    dir.write(
        "profiles.svg",
        artifacts::line_chart(&format!("{}: profiles", cfg.scenario), "xi", "H", &plots).as_bytes(),
    )?;
    let summary = json!({
        "config": cfg,
        "dt": series.dt(),
        "profiles": entries,
        "collapse": collapse,
    });
    dir.write_json("profile_summary.json", &summary)?;
    dir.finish(json!({"command": "profile", "config": cfg, "dx": cfg.dx, "dt": series.dt(), "theta": cfg.theta}))?;
    Ok(summary)
}

/// Convergence study of a ladder; writes `ladder.csv` and a manifest.
pub fn converge(
    ladder: &LadderConfig,
    out: Option<&Path>,
) -> Result<Vec<crate::stepper::ConvergenceRow>> {
    let reference = run_scenario(&ladder.at(ladder.reference_dx))?;
    let levels = ladder
        .levels
        .iter()
        .map(|dx| run_scenario(&ladder.at(*dx)))
        .collect::<Result<Vec<_>>>()?;
    let table = crate::stepper::convergence_study(&levels, &reference, (ladder.k[0], ladder.k[1]))?;
    if let Some(out) = out {
        let mut dir = OutputDir::create(out)?;
        let mut csv = String::from("dx,error,ratio\n");
        for r in &table {
            let ratio = r.ratio.map(fmt17).unwrap_or_default();
            csv.push_str(&format!("{},{},{}\n", fmt17(r.dx), fmt17(r.error), ratio));
        }
        dir.write("ladder.csv", csv.as_bytes())?;
        let pts: Vec<(f64, f64)> = table
            .iter()
            .map(|r| (r.dx.log10(), r.error.log10()))
            .collect();
        dir.write(
            "ladder.svg",
            artifacts::line_chart(
                "convergence",
                "log10 dx",
                "log10 error",
                &[("L1(K)".into(), pts)],
            )
            .as_bytes(),
        )?;
        let dts: Vec<f64> = levels.iter().map(|l| l.dt()).collect();
        dir.finish(json!({
            "command": "converge",
            "ladder": ladder,
            "dx": ladder.levels,
            "dt": dts,
            "reference_dt": reference.dt(),
            "theta": ladder.base.theta,
        }))?;
    }
    Ok(table)
}
