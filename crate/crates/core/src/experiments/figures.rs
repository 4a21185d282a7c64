//! Qualitative figure reproductions and the positivity/sandwich checks.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::artifacts::{line_chart, snapshot_name, OutputDir};
use super::config::ScenarioConfig;
use super::run_scenario;
use crate::error::{Error, Result};
use crate::grid::{fmt17, sample_initial, FarField, Field, Grid1D, InitialDatum};
use crate::nonlinearity::{GraphKind, StefanGraph};
use crate::operator::{Order, Stencil};
use crate::selfsimilar::{default_tol_u, detect_interfaces, extract_profile, InterfaceReport};
use crate::stepper::{run, RunConfig, SnapshotSeries};

/// Riemann run `b1 | b2` on `[−X, X]` with a full-window stencil.
#[allow(clippy::too_many_arguments)]
pub fn riemann_run(
    graph: StefanGraph,
    s: f64,
    dx: f64,
    half_window: f64,
    b1: f64,
    b2: f64,
    final_time: f64,
    times: Vec<f64>,
) -> Result<SnapshotSeries> {
    let grid = Grid1D::from_window(-half_window, half_window, dx)?;
    let datum = InitialDatum::Riemann { b1, b2, c: 0.0 };
    let ff = datum.background();
    let initial = sample_initial(&grid, &datum, ff)?;
    let st = Stencil::fractional(s, dx, grid.len())?;
    let cfg = RunConfig::new(graph, st, grid, ff, final_time, times);
    Ok(run(&cfg, &initial)?.with_datum(datum))
}

/// Interfaces of a Riemann run at `t = 1`.
fn riemann_interfaces(
    graph: StefanGraph,
    s: f64,
    dx: f64,
    half_window: f64,
    b1: f64,
    b2: f64,
) -> Result<InterfaceReport> {
    let series = riemann_run(graph, s, dx, half_window, b1, b2, 1.0, vec![1.0])?;
    let p = extract_profile(&series, Order::Fractional(s), 1.0)?;
    detect_interfaces(&p, None)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Figure2Settings {
    pub latent: f64,
    pub p1: f64,
    pub dx: f64,
    pub half_window: f64,
    pub final_time: f64,
}

impl Default for Figure2Settings {
    fn default() -> Self {
        Figure2Settings {
            latent: 1.0,
            p1: 1.0,
            dx: 0.02,
            half_window: 20.0,
            final_time: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure2Row {
    pub s: f64,
    pub p2: f64,
    pub dx: f64,
    /// `"ok"`, or `"window"` when an interface left the window.
    pub status: String,
    pub xi_w: Option<f64>,
    pub xi_i: Option<f64>,
    pub mushy_width: Option<f64>,
}

impl Figure2Row {
    /// Mushy region wider than two cells.
    pub fn resolved(&self) -> bool {
        self.mushy_width.is_some_and(|w| w > 2.0 * self.dx)
    }
}

/// Two-phase Riemann runs `L + P1 | −P2` for every `(s, P2)` pair; mushy
/// widths of the profiles at `T`.
pub fn figure2(
    s_list: &[f64],
    p2_list: &[f64],
    settings: Figure2Settings,
    out: Option<&Path>,
) -> Result<Vec<Figure2Row>> {
    if s_list.is_empty() || p2_list.is_empty() {
        return Err(Error::param("figure2", "need at least one s and one P2"));
    }
    let graph = StefanGraph::two_phase(settings.latent)?;
    let mut rows = Vec::new();
    let mut dir = out.map(OutputDir::create).transpose()?;
    let mut curves = Vec::new();
    for &s in s_list {
        for &p2 in p2_list {
            let t = settings.final_time;
            let series = riemann_run(
                graph,
                s,
                settings.dx,
                settings.half_window,
                settings.latent + settings.p1,
                -p2,
                t,
                vec![t],
            )?;
            let p = extract_profile(&series, Order::Fractional(s), t)?;
            let row = match detect_interfaces(&p, None) {
                Ok(r) => Figure2Row {
                    s,
                    p2,
                    dx: p.dxi(),
                    status: "ok".into(),
                    xi_w: Some(r.xi_w),
                    xi_i: Some(r.xi_i),
                    mushy_width: Some(r.mushy_width),
                },
                Err(Error::NoCrossing { .. }) => Figure2Row {
                    s,
                    p2,
                    dx: p.dxi(),
                    status: "window".into(),
                    xi_w: None,
                    xi_i: None,
                    mushy_width: None,
                },
                Err(e) => return Err(e),
            };
            if let Some(dir) = dir.as_mut() {
                dir.write_with(&format!("profile_s{s}_p2{p2}.csv"), |w| p.write_csv(w))?;
                let pts =
                    p.xi.iter()
                        .zip(&p.h)
                        .filter(|(x, _)| x.abs() <= 5.0)
                        .map(|(x, h)| (*x, *h))
                        .collect();
                curves.push((format!("s={s}, P2={p2}"), pts));
            }
            rows.push(row);
        }
    }
    if let Some(mut dir) = dir {
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        let mut csv = String::from("s,P2,dx,xi_w,xi_i,mushy_width,status\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.s,
                r.p2,
                fmt17(r.dx),
                opt(r.xi_w),
                opt(r.xi_i),
                opt(r.mushy_width),
                r.status
            ));
        }
        dir.write("figure2.csv", csv.as_bytes())?;
        dir.write(
            "figure2_profiles.svg",
            line_chart("mushy regions", "xi", "H", &curves).as_bytes(),
        )?;
        dir.finish(json!({
            "command": "figure2",
            "s": s_list,
            "P2": p2_list,
            "settings": settings,
            "theta": 0.9,
        }))?;
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure4Settings {
    pub s: f64,
    pub latent: f64,
    pub dx: f64,
    pub half_window: f64,
    pub times: Vec<f64>,
    /// Radius the negative set must reach to count as infinite speed.
    pub sentinel: f64,
    /// `ε` of the one-phase control.
    pub eps: f64,
}

impl Default for Figure4Settings {
    fn default() -> Self {
        Figure4Settings {
            s: 0.25,
            latent: 1.0,
            dx: 0.05,
            half_window: 60.0,
            times: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            sentinel: 20.0,
            eps: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontSpeed {
    Finite,
    Infinite,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportRecord {
    pub time: f64,
    /// Extent `[min x, max x]` of `{u > tol}`, if nonempty.
    pub positive: Option<[f64; 2]>,
    pub negative: Option<[f64; 2]>,
    /// Envelope radius `R + ξ0·t^{1/2s}` of the positive part.
    pub envelope: f64,
    pub inside_envelope: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure4Case {
    pub name: String,
    pub records: Vec<SupportRecord>,
    pub negative_front: FrontSpeed,
    /// Radius of `supp (Φ(h0 + ε))_+`.
    pub control_radius: f64,
    pub xi0: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure4Report {
    pub cases: Vec<Figure4Case>,
    /// Data with `u0 >= 0`: the negative set must stay empty.
    pub sanity_negative_empty: bool,
}

impl Figure4Report {
    pub fn classifications_differ(&self) -> bool {
        self.cases.len() >= 2 && self.cases[0].negative_front != self.cases[1].negative_front
    }

    pub fn envelopes_hold(&self) -> bool {
        self.cases
            .iter()
            .all(|c| c.records.iter().all(|r| r.inside_envelope))
    }
}

fn extent(grid: &Grid1D, pred: impl Fn(usize) -> bool) -> Option<[f64; 2]> {
    let idx: Vec<usize> = (0..grid.len()).filter(|i| pred(*i)).collect();
    match (idx.first(), idx.last()) {
        (Some(a), Some(b)) => Some([grid.node(*a), grid.node(*b)]),
        _ => None,
    }
}

/// Largest `|x|` in the datum's support where `pred(h0(x))` holds, scanned
/// at spacing `1e−4`.
fn datum_radius(datum: &InitialDatum, pred: impl Fn(f64) -> bool) -> f64 {
    let (a, b) = datum.support().unwrap_or((0.0, 0.0));
    let n = ((b - a) / 1e-4).ceil() as usize;
    (0..=n)
        .map(|k| a + (b - a) * k as f64 / n.max(1) as f64)
        .filter(|x| pred(datum.value_at(*x)))
        .fold(0.0, |r, x| r.max(x.abs()))
}

fn compact_run(
    graph: StefanGraph,
    s: f64,
    dx: f64,
    half_window: f64,
    datum: &InitialDatum,
    times: &[f64],
) -> Result<SnapshotSeries> {
    let grid = Grid1D::from_window(-half_window, half_window, dx)?;
    let ff = datum.background();
    let initial = sample_initial(&grid, datum, ff)?;
    let st = Stencil::fractional(s, dx, grid.len())?;
    let t = *times.last().ok_or_else(|| Error::param("times", "empty"))?;
    let cfg = RunConfig::new(graph, st, grid, ff, t, times.to_vec());
    Ok(run(&cfg, &initial)?.with_datum(datum.clone()))
}

/// The two captioned bump data at `s = 1/4`: positivity and negativity
/// extents per snapshot, front classification of the negative phase, and
/// the one-phase envelope of the positive part.
pub fn figure4(settings: &Figure4Settings, out: Option<&Path>) -> Result<Figure4Report> {
    let l = settings.latent;
    let graph = StefanGraph::two_phase(l)?;
    let pi = std::f64::consts::PI;
    let data = [
        (
            "cos_3pi_2",
            InitialDatum::CosineBump {
                amplitude: l + 1.0,
                offset: 0.0,
                radius: 1.5 * pi,
                center: 0.0,
                background: 0.0,
            },
        ),
        (
            "cos_plus_3_4_6pi_5",
            InitialDatum::CosineBump {
                amplitude: l + 1.0,
                offset: 0.75,
                radius: 1.2 * pi,
                center: 0.0,
                background: 0.0,
            },
        ),
    ];
    let dx = settings.dx;
    let mut dir = out.map(OutputDir::create).transpose()?;
    let mut cases = Vec::new();
    let exponent = 0.5 / settings.s;
    for (name, datum) in &data {
        let sup = datum_radius(datum, |_| true);
        let sup_h = (0..=20000)
            .map(|k| datum.value_at(-sup + 2.0 * sup * k as f64 / 20000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let control_radius = datum_radius(datum, |h| graph.eval(h + settings.eps) > 0.0);
        let one = StefanGraph::one_phase(l)?;
        let xi0 = riemann_interfaces(
            one,
            settings.s,
            dx,
            settings.half_window,
            sup_h,
            l - settings.eps,
        )?
        .xi_w;
        let series = compact_run(
            graph,
            settings.s,
            dx,
            settings.half_window,
            datum,
            &settings.times,
        )?;
        let mut records = Vec::new();
        let mut speed = FrontSpeed::Finite;
        for snap in series.snapshots() {
            let grid = *snap.field.grid();
            let u = graph.temperatures(snap.field.values());
            let tol = default_tol_u(&u);
            let positive = extent(&grid, |i| u[i] > tol);
            let negative = extent(&grid, |i| u[i] < -tol);
            if negative.is_some_and(|[a, b]| a <= -settings.sentinel || b >= settings.sentinel) {
                speed = FrontSpeed::Infinite;
            }
            let envelope = control_radius + xi0 * snap.time.powf(exponent);
            let inside = positive.is_none_or(|[a, b]| a.abs().max(b.abs()) <= envelope + 2.0 * dx);
            records.push(SupportRecord {
                time: snap.time,
                positive,
                negative,
                envelope,
                inside_envelope: inside,
            });
            if let Some(dir) = dir.as_mut() {
                dir.write_with(&format!("{name}_{}", snapshot_name(snap.requested)), |w| {
                    snap.field.write_csv(&graph, w)
                })?;
            }
        }
        if let Some(dir) = dir.as_mut() {
            let curves: Vec<_> = series
                .snapshots()
                .iter()
                .map(|s| {
                    let g = s.field.grid();
                    let pts = g
                        .nodes()
                        .zip(s.field.values())
                        .filter(|(x, _)| x.abs() <= 2.0 * settings.sentinel)
                        .map(|(x, h)| (x, graph.eval(*h)))
                        .collect();
                    (format!("t = {}", s.requested), pts)
                })
                .collect();
            dir.write(
                &format!("{name}_u.svg"),
                line_chart(name, "x", "u", &curves).as_bytes(),
            )?;
        }
        cases.push(Figure4Case {
            name: name.to_string(),
            records,
            negative_front: speed,
            control_radius,
            xi0,
        });
    }
    let sanity = InitialDatum::CosineBump {
        amplitude: l + 1.0,
        offset: 0.0,
        radius: 0.5 * pi,
        center: 0.0,
        background: 0.0,
    };
    let series = compact_run(
        graph,
        settings.s,
        dx,
        0.5 * settings.half_window,
        &sanity,
        &settings.times,
    )?;
    let sanity_ok = series
        .snapshots()
        .iter()
        .all(|s| s.field.values().iter().all(|h| graph.eval(*h) >= 0.0));
    let report = Figure4Report {
        cases,
        sanity_negative_empty: sanity_ok,
    };
    if let Some(mut dir) = dir {
        dir.write_json("figure4.json", &report)?;
        dir.finish(json!({"command": "figure4", "settings": settings, "theta": 0.9}))?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure5Settings {
    pub s: f64,
    pub latent: f64,
    pub dx: f64,
    pub half_window: f64,
    pub times: Vec<f64>,
    pub datum: InitialDatum,
}

impl Default for Figure5Settings {
    fn default() -> Self {
        Figure5Settings {
            s: 0.25,
            latent: 1.0,
            dx: 0.05,
            half_window: 60.0,
            times: vec![
                0.25, 0.5, 1.0, 2.0, 3.0, 3.5, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0,
            ],
            // hot core, mushy shell, shallow ice
            datum: InitialDatum::Steps {
                breaks: vec![-6.0, -1.0, 1.0, 6.0],
                values: vec![-0.25, 0.5, 4.0, 0.5, -0.25],
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WaterRecord {
    pub time: f64,
    /// `|{h > L + tol}|`
    pub water: f64,
    /// `|{0 <= h <= L}|`
    pub mushy: f64,
    pub water_radius: f64,
    pub mushy_radius: f64,
    pub water_envelope: f64,
    pub mushy_envelope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure5Report {
    pub history: Vec<WaterRecord>,
    pub control_radius: f64,
    pub ice_level: f64,
    pub xi_w: f64,
    pub xi_i: f64,
    pub all_ice_water_zero: bool,
}

impl Figure5Report {
    /// The water measure rises above its first value and ends at 0.
    pub fn expands_contracts_disappears(&self) -> bool {
        let w: Vec<f64> = self.history.iter().map(|r| r.water).collect();
        let peak = w.iter().copied().fold(0.0, f64::max);
        match (w.first(), w.last()) {
            (Some(first), Some(last)) => peak > *first && *last == 0.0,
            _ => false,
        }
    }

    pub fn envelopes_hold(&self, dx: f64) -> bool {
        self.history.iter().all(|r| {
            r.water_radius <= r.water_envelope + 2.0 * dx
                && r.mushy_radius <= r.mushy_envelope + 2.0 * dx
        })
    }
}

const WATER_TOL: f64 = 1e-9;

fn water_history(
    series: &SnapshotSeries,
    latent: f64,
    control: f64,
    xi: (f64, f64),
    exponent: f64,
) -> Vec<WaterRecord> {
    series
        .snapshots()
        .iter()
        .map(|snap| {
            let g = snap.field.grid();
            let h = snap.field.values();
            let water_idx: Vec<usize> = (0..h.len())
                .filter(|i| h[*i] > latent + WATER_TOL)
                .collect();
            let mushy_idx: Vec<usize> = (0..h.len())
                .filter(|i| h[*i] >= 0.0 && h[*i] <= latent)
                .collect();
            let radius = |idx: &[usize]| idx.iter().map(|i| g.node(*i).abs()).fold(0.0, f64::max);
            let grow = snap.time.powf(exponent);
            WaterRecord {
                time: snap.time,
                water: g.dx() * water_idx.len() as f64,
                mushy: g.dx() * mushy_idx.len() as f64,
                water_radius: radius(&water_idx),
                mushy_radius: radius(&mushy_idx),
                water_envelope: control + xi.0 * grow,
                mushy_envelope: control + xi.1 * grow,
            }
        })
        .collect()
}

/// Compact water in shallow ice: water-measure history and the two-phase
/// envelopes of the water and mushy regions.
pub fn figure5(settings: &Figure5Settings, out: Option<&Path>) -> Result<Figure5Report> {
    let l = settings.latent;
    let graph = StefanGraph::two_phase(l)?;
    let datum = &settings.datum;
    datum.validate()?;
    let (bl, br) = datum.far_values();
    if bl != br || bl >= 0.0 {
        return Err(Error::param(
            "datum",
            "needs the same negative enthalpy on both sides",
        ));
    }
    let ice_level = -bl;
    // h0 <= −C outside B_R
    let control = datum_radius(datum, |h| h > -ice_level);
    let sup_h = match datum {
        InitialDatum::Steps { values, .. } => {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
        other => {
            let (a, b) = other.support().unwrap_or((0.0, 0.0));
            (0..=20000)
                .map(|k| other.value_at(a + (b - a) * k as f64 / 20000.0))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    };
    let xi = riemann_interfaces(
        graph,
        settings.s,
        settings.dx,
        settings.half_window,
        sup_h,
        -ice_level,
    )?;
    let series = compact_run(
        graph,
        settings.s,
        settings.dx,
        settings.half_window,
        datum,
        &settings.times,
    )?;
    let exponent = 0.5 / settings.s;
    let history = water_history(&series, l, control, (xi.xi_w, xi.xi_i), exponent);

    let ice = InitialDatum::Steps {
        breaks: vec![-2.0, 2.0],
        values: vec![bl, -0.5 * ice_level, bl],
    };
    let short: Vec<f64> = settings
        .times
        .iter()
        .copied()
        .filter(|t| *t <= 4.0)
        .collect();
    let ice_series = compact_run(
        graph,
        settings.s,
        settings.dx,
        0.5 * settings.half_window,
        &ice,
        &short,
    )?;
    let all_ice = water_history(&ice_series, l, 0.0, (0.0, 0.0), exponent)
        .iter()
        .all(|r| r.water == 0.0);

    let report = Figure5Report {
        history,
        control_radius: control,
        ice_level,
        xi_w: xi.xi_w,
        xi_i: xi.xi_i,
        all_ice_water_zero: all_ice,
    };
    if let Some(out) = out {
        let mut dir = OutputDir::create(out)?;
        for snap in series.snapshots() {
            dir.write_with(&snapshot_name(snap.requested), |w| {
                snap.field.write_csv(&graph, w)
            })?;
        }
        let mut csv = String::from(
            "time,water,mushy,water_radius,mushy_radius,water_envelope,mushy_envelope\n",
        );
        for r in &report.history {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt17(r.time),
                fmt17(r.water),
                fmt17(r.mushy),
                fmt17(r.water_radius),
                fmt17(r.mushy_radius),
                fmt17(r.water_envelope),
                fmt17(r.mushy_envelope)
            ));
        }
        dir.write("figure5_history.csv", csv.as_bytes())?;
        let w: Vec<(f64, f64)> = report.history.iter().map(|r| (r.time, r.water)).collect();
        let m: Vec<(f64, f64)> = report.history.iter().map(|r| (r.time, r.mushy)).collect();
        dir.write(
            "figure5_history.svg",
            line_chart(
                "water and mushy measure",
                "t",
                "measure",
                &[("water".into(), w), ("mushy".into(), m)],
            )
            .as_bytes(),
        )?;
        let curves: Vec<_> = series
            .snapshots()
            .iter()
            .map(|s| {
                let pts = s
                    .field
                    .grid()
                    .nodes()
                    .zip(s.field.values().iter().copied())
                    .filter(|(x, _)| x.abs() <= 15.0)
                    .collect();
                (format!("t = {}", s.requested), pts)
            })
            .collect();
        dir.write(
            "figure5_h.svg",
            line_chart("enthalpy", "x", "h", &curves).as_bytes(),
        )?;
        dir.write_json("figure5.json", &report)?;
        dir.finish(json!({"command": "figure5", "settings": settings, "theta": 0.9}))?;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub status: CheckStatus,
    pub note: String,
    pub t_star: f64,
    /// Nodes of the positivity set at `t*`.
    pub omega_nodes: usize,
    pub checked_snapshots: usize,
}

/// Temperature positivity is kept on the positivity set `Ω` of the
/// snapshot requested at `t_star` (default: the first positive time).
pub fn positivity_check(series: &SnapshotSeries, t_star: Option<f64>) -> Result<PositivityReport> {
    let graph = series.graph();
    if graph.kind != GraphKind::OnePhase {
        return Ok(PositivityReport {
            status: CheckStatus::Skipped,
            note: "positivity is only kept by the one-phase problem".into(),
            t_star: t_star.unwrap_or(0.0),
            omega_nodes: 0,
            checked_snapshots: 0,
        });
    }
    let snaps = series.snapshots();
    let start = match t_star {
        Some(t) => snaps
            .iter()
            .position(|s| (s.requested - t).abs() <= 1e-12 * t.max(1.0)),
        None => snaps.iter().position(|s| s.time > 0.0),
    }
    .ok_or_else(|| Error::Domain("no snapshot for t*".into()))?;
    let u0 = graph.temperatures(snaps[start].field.values());
    let omega: Vec<usize> = (0..u0.len()).filter(|i| u0[*i] > 0.0).collect();
    let mut failed = None;
    for snap in &snaps[start + 1..] {
        let v = snap.field.values();
        if let Some(i) = omega.iter().find(|i| graph.eval(v[**i]) <= 0.0) {
            failed = Some((snap.time, *i));
            break;
        }
    }
    let (status, note) = match (omega.is_empty(), failed) {
        (true, _) => (CheckStatus::Pass, "empty positivity set".to_string()),
        (false, None) => (CheckStatus::Pass, String::new()),
        (false, Some((t, i))) => (CheckStatus::Fail, format!("u <= 0 at node {i}, t = {t}")),
    };
    Ok(PositivityReport {
        status,
        note,
        t_star: snaps[start].time,
        omega_nodes: omega.len(),
        checked_snapshots: snaps.len() - start - 1,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub holds: bool,
    /// `max(h − upper)⁺` over snapshots and nodes.
    pub upper_violation: f64,
    /// `max(lower − h)⁺`
    pub lower_violation: f64,
    /// `max |upper − h|`
    pub upper_gap: f64,
    /// `max |h − lower|`
    pub lower_gap: f64,
    /// `upper_gap <= 1e−9`
    pub upper_equal: bool,
    pub lower_equal: bool,
    /// Some node has `lower < h < upper` with both gaps above `1e−9`.
    pub strict_somewhere: bool,
    pub snapshots: usize,
}

const SANDWICH_SLACK: f64 = 1e-9;

/// Runs the two-phase scenario and the one-phase bounds built from
/// `max(h0, 0)` and `L − min(h0, L)`, and checks `lower <= h <= upper`
/// at every snapshot.
pub fn sandwich_check(cfg: &ScenarioConfig) -> Result<SandwichReport> {
    if cfg.graph.kind != GraphKind::TwoPhase {
        return Err(Error::param(
            "graph",
            "sandwich check needs the two-phase graph",
        ));
    }
    let l = cfg.graph.latent();
    let [_, k1, k2] = cfg.graph.conductivities();
    let main = run_scenario(cfg)?;
    let initial = main.initial();
    let map_field = |f: &dyn Fn(f64) -> f64| -> Result<Field> {
        let ff = initial.farfield();
        Field::new(
            *initial.grid(),
            initial.values().iter().map(|h| f(*h)).collect(),
            FarField::new(f(ff.left), f(ff.right)).with_split(ff.split),
        )
    };
    let lip = cfg.graph.lipschitz_bound();
    let bound_run = |k: f64, start: Field| -> Result<SnapshotSeries> {
        let mut rc = cfg.run_config()?;
        rc.graph = StefanGraph::new(GraphKind::OnePhase, l, [k, 1.0, 1.0])?;
        // same time step as the two-phase run
        rc.theta = cfg.theta * k / lip;
        rc.farfield = start.farfield();
        run(&rc, &start)
    };
    let upper = bound_run(k1, map_field(&|h| h.max(0.0))?)?;
    let tilde = bound_run(k2, map_field(&|h| l - h.min(l))?)?;
    let close = |a: f64| (a - main.dt()).abs() <= 1e-14 * main.dt();
    if !close(upper.dt()) || !close(tilde.dt()) {
        return Err(Error::Domain(
            "bounding runs use a different time step".into(),
        ));
    }
    let mut r = SandwichReport {
        holds: true,
        upper_violation: 0.0,
        lower_violation: 0.0,
        upper_gap: 0.0,
        lower_gap: 0.0,
        upper_equal: false,
        lower_equal: false,
        strict_somewhere: false,
        snapshots: main.snapshots().len(),
    };
    for ((m, u), t) in main
        .snapshots()
        .iter()
        .zip(upper.snapshots())
        .zip(tilde.snapshots())
    {
        for ((h, hu), ht) in m
            .field
            .values()
            .iter()
            .zip(u.field.values())
            .zip(t.field.values())
        {
            let lower = l - ht;
            r.upper_violation = r.upper_violation.max(h - hu);
            r.lower_violation = r.lower_violation.max(lower - h);
            r.upper_gap = r.upper_gap.max((hu - h).abs());
            r.lower_gap = r.lower_gap.max((h - lower).abs());
            if h - lower > SANDWICH_SLACK && hu - h > SANDWICH_SLACK {
                r.strict_somewhere = true;
            }
        }
    }
    r.upper_equal = r.upper_gap <= SANDWICH_SLACK;
    r.lower_equal = r.lower_gap <= SANDWICH_SLACK;
    r.holds = r.upper_violation <= SANDWICH_SLACK && r.lower_violation <= SANDWICH_SLACK;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(kind: &str, datum: &str) -> ScenarioConfig {
        ScenarioConfig::from_json(&format!(
            r#"{{"scenario": "t", "graph": {{"kind": "{kind}", "L": 1.0}}, "s": 0.5,
                "dx": 0.1, "window": [-4.0, 4.0], "T": 0.5,
                "snapshot_times": [0.1, 0.2, 0.3, 0.4], "datum": {datum}}}"#
        ))
        .unwrap()
    }

    const BUMP: &str = r#"{"type": "cosine_bump", "amplitude": 2.0, "offset": 0.0, "radius": 1.5, "center": 0.0, "background": 0.0}"#;

    #[test]
    fn positivity_on_one_phase_bump() {
        let series = run_scenario(&scenario("one_phase", BUMP)).unwrap();
        let r = positivity_check(&series, None).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert!(r.omega_nodes > 0);
        assert_eq!(r.checked_snapshots, 4);
    }

    #[test]
    fn positivity_vacuous_and_skipped() {
        let cold = r#"{"type": "constant", "value": 0.5}"#;
        let series = run_scenario(&scenario("one_phase", cold)).unwrap();
        let r = positivity_check(&series, None).unwrap();
        assert_eq!((r.status, r.omega_nodes), (CheckStatus::Pass, 0));
        let series = run_scenario(&scenario("two_phase", BUMP)).unwrap();
        assert_eq!(
            positivity_check(&series, None).unwrap().status,
            CheckStatus::Skipped
        );
    }

    #[test]
    fn sandwich_equalities() {
        // h0 >= 0: upper bound is the solution itself
        let r = sandwich_check(&scenario("two_phase", BUMP)).unwrap();
        assert!(r.holds && r.upper_equal && !r.lower_equal, "{r:?}");
        let low = BUMP
            .replace("\"amplitude\": 2.0", "\"amplitude\": -1.5")
            .replace("\"background\": 0.0", "\"background\": 0.5");
        let r = sandwich_check(&scenario("two_phase", &low)).unwrap();
        assert!(r.holds && r.lower_equal && !r.upper_equal, "{r:?}");
        let mixed = r#"{"type": "riemann", "b1": 2.0, "b2": -1.0}"#;
        let r = sandwich_check(&scenario("two_phase", mixed)).unwrap();
        assert!(r.holds && r.strict_somewhere, "{r:?}");
    }

    #[test]
    fn sandwich_needs_two_phase() {
        assert!(sandwich_check(&scenario("one_phase", BUMP)).is_err());
    }
}
