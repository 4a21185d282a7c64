//! Selfsimilar profiles `H(ξ)`, `ξ = x·t^{−1/2s}`, extracted from Riemann
//! runs: interface points, exponent fits, mass transfer and the residual
//! of the profile equation `−(1/2s)·ξ·H' + (−Δ)^s Φ(H) = 0`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{fmt17, FarField, InitialDatum};
use crate::nonlinearity::{GraphKind, StefanGraph};
use crate::operator::{Order, Stencil};
use crate::stepper::SnapshotSeries;

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub xi: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
    pub order: Order,
    pub graph: StefanGraph,
    pub farfield: FarField,
    /// Grid time of the snapshot the profile was read from.
    pub time: f64,
}

impl Profile {
    /// Profile sampled at the given abscissae; no provenance checks.
    pub fn new(
        xi: Vec<f64>,
        h: Vec<f64>,
        order: Order,
        graph: StefanGraph,
        farfield: FarField,
    ) -> Result<Self> {
        if xi.len() != h.len() || xi.len() < 3 {
            return Err(Error::GridMismatch(
                "profile needs matching xi/H with >= 3 points".into(),
            ));
        }
        if xi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("profile abscissae must increase".into()));
        }
        let u = graph.temperatures(&h);
        Ok(Profile {
            xi,
            h,
            u,
            order,
            graph,
            farfield,
            time: 1.0,
        })
    }

    /// Spacing of the (uniform) `ξ` grid.
    pub fn dxi(&self) -> f64 {
        self.xi[1] - self.xi[0]
    }

    /// Largest upward step `max(H_{k+1} − H_k, 0)`.
    pub fn max_increase(&self) -> f64 {
        self.h
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `H` by linear interpolation, extended by the end values.
    pub fn h_at(&self, x: f64) -> f64 {
        interpolate(&self.xi, &self.h, x)
    }

    /// CSV `xi,H,U`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "xi,H,U")?;
        for ((x, h), u) in self.xi.iter().zip(&self.h).zip(&self.u) {
            writeln!(out, "{},{},{}", fmt17(*x), fmt17(*h), fmt17(*u))?;
        }
        Ok(())
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|v| *v <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] * (1.0 - w) + ys[k + 1] * w
}

/// Rescales the snapshot requested at `t_ref` to `ξ = x·t^{−1/2s}`.
///
/// The series must come from Riemann (or constant) data jumping at 0.
pub fn extract_profile(series: &SnapshotSeries, order: Order, t_ref: f64) -> Result<Profile> {
    match series.datum() {
        Some(InitialDatum::Riemann { c, .. }) if *c == 0.0 => {}
        Some(InitialDatum::Constant { .. }) => {}
        _ => {
            return Err(Error::Domain(
                "selfsimilar profiles need Riemann data with the jump at 0".into(),
            ))
        }
    }
    let snap = series.at(t_ref)?;
    if snap.time <= 0.0 {
        return Err(Error::Domain("profile time must be positive".into()));
    }
    let scale = snap.time.powf(-order.scaling_exponent());
    let grid = snap.field.grid();
    let xi = grid.nodes().map(|x| x * scale).collect();
    let mut p = Profile::new(
        xi,
        snap.field.values().to_vec(),
        order,
        *series.graph(),
        snap.field.farfield(),
    )?;
    p.time = snap.time;
    Ok(p)
}

/// `L¹(K)` distance between the profiles at two times, the later one
/// interpolated onto the `ξ` grid of the earlier one.
pub fn collapse_error(
    series: &SnapshotSeries,
    order: Order,
    times: (f64, f64),
    k: (f64, f64),
) -> Result<f64> {
    let (t1, t2) = if times.0 <= times.1 {
        times
    } else {
        (times.1, times.0)
    };
    let a = extract_profile(series, order, t1)?;
    let b = extract_profile(series, order, t2)?;
    let sum: f64 =
        a.xi.iter()
            .zip(&a.h)
            .filter(|(x, _)| **x >= k.0 && **x <= k.1)
            .map(|(x, h)| (h - b.h_at(*x)).abs())
            .sum();
    Ok(a.dxi() * sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterfaceReport {
    pub xi_w: f64,
    pub xi_i: f64,
    pub mushy_width: f64,
    pub tol_u: f64,
    pub dx: f64,
    pub interpolation: &'static str,
}

/// `max(1e−10, 1e−6·max|U|)`.
pub fn default_tol_u(u: &[f64]) -> f64 {
    let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (1e-6 * m).max(1e-10)
}

/// Water interface: last node with `U > tol` and the crossing of `H`
/// through the top of the flat interval after it. Ice interface: first
/// node with `U < −tol` and the crossing through the bottom level before
/// it. For the one-phase graph both are the water interface.
pub fn detect_interfaces(p: &Profile, tol_u: Option<f64>) -> Result<InterfaceReport> {
    let tol = tol_u.unwrap_or_else(|| default_tol_u(&p.u));
    let (lo_level, hi_level) = p.graph.flat_interval();
    let n = p.xi.len();
    let cross = |k: usize, level: f64| -> f64 {
        let (h0, h1) = (p.h[k], p.h[k + 1]);
        let w = if h0 == h1 {
            0.5
        } else {
            ((h0 - level) / (h0 - h1)).clamp(0.0, 1.0)
        };
        p.xi[k] + w * (p.xi[k + 1] - p.xi[k])
    };
    let water =
        p.u.iter()
            .rposition(|u| *u > tol)
            .filter(|k| k + 1 < n)
            .ok_or(Error::NoCrossing { level: hi_level })?;
    let xi_w = cross(water, hi_level);
    let xi_i = if p.graph.kind == GraphKind::OnePhase {
        xi_w
    } else {
        let ice =
            p.u.iter()
                .position(|u| *u < -tol)
                .filter(|k| *k > 0)
                .ok_or(Error::NoCrossing { level: lo_level })?;
        cross(ice - 1, lo_level)
    };
    Ok(InterfaceReport {
        xi_w,
        xi_i,
        mushy_width: (xi_i - xi_w).max(0.0),
        tol_u: tol,
        dx: p.dxi(),
        interpolation: "linear",
    })
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slope of `log y` against `log x`; needs at least 8 positive samples.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() < 8 {
        return Err(Error::Domain(format!(
            "exponent fit needs >= 8 points, window holds {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("exponent fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    Ok(least_squares_slope(&lx, &ly))
}

/// Decay exponent of `H − level` over `ξ ∈ window` on the positive side.
///
/// The window may not enter the outer 20% of the `ξ` range, where the
/// finite window pollutes the profile.
pub fn fit_tail_exponent(p: &Profile, level: f64, window: (f64, f64)) -> Result<f64> {
    let edge = p.xi[p.xi.len() - 1];
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::Domain(format!("bad tail window {window:?}")));
    }
    if window.1 > 0.8 * edge {
        return Err(Error::Domain(format!(
            "tail window reaches {} beyond 80% of the range {edge}",
            window.1
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        p.xi.iter()
            .zip(&p.h)
            .filter(|(x, _)| **x >= window.0 && **x <= window.1)
            .map(|(x, h)| (*x, h - level))
            .unzip();
    fit_loglog(&xs, &ys)
}

/// Exponent of `H − L` against `ξ0 − ξ` for `ξ < ξ0`, with distances in
/// `side_window` and the 3 nodes nearest `ξ0` dropped.
pub fn fit_boundary_exponent(p: &Profile, xi0: f64, side_window: (f64, f64)) -> Result<f64> {
    let latent = p.graph.flat_interval().1;
    let mut pts: Vec<(f64, f64)> =
        p.xi.iter()
            .zip(&p.h)
            .filter(|(x, _)| **x < xi0)
            .map(|(x, h)| (xi0 - x, h - latent))
            .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts
        .into_iter()
        .skip(3)
        .filter(|(d, _)| *d >= side_window.0 && *d <= side_window.1)
        .unzip();
    fit_loglog(&xs, &ys)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MassClass {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassTransfer {
    pub radii: Vec<f64>,
    /// `∫_{−R}^0 (b1 − H)`
    pub i_minus: Vec<f64>,
    /// `∫_0^R (H − b2)`
    pub i_plus: Vec<f64>,
    pub class_minus: MassClass,
    pub class_plus: MassClass,
    pub classification: MassClass,
}

/// Trapezoid rule for the linear interpolant of `(xs, ys)` over `[a, b]`.
fn trapz(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    let mut pts = vec![(a, interpolate(xs, ys, a))];
    pts.extend(
        xs.iter()
            .zip(ys)
            .filter(|(x, _)| **x > a && **x < b)
            .map(|(x, y)| (*x, *y)),
    );
    pts.push((b, interpolate(xs, ys, b)));
    pts.windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Increments `I(R0), I(R1) − I(R0), …` classified as convergent when the
/// last is below a tenth of the first, divergent when from the second on
/// each is at least 80% of its predecessor.
pub fn classify_increments(values: &[f64]) -> MassClass {
    let inc: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 { *v } else { v - values[k - 1] })
        .collect();
    let (first, last) = (inc[0], inc[inc.len() - 1]);
    if first > 0.0 && last / first < 0.1 {
        MassClass::Convergent
    } else if inc.len() >= 3 && inc.windows(2).skip(1).all(|w| w[1] >= 0.8 * w[0]) {
        MassClass::Divergent
    } else {
        MassClass::Inconclusive
    }
}

pub fn mass_transfer(p: &Profile, b1: f64, b2: f64, radii: &[f64]) -> Result<MassTransfer> {
    if radii.len() < 3 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::Domain(
            "need at least 3 increasing positive radii".into(),
        ));
    }
    let (lo, hi) = (p.xi[0], p.xi[p.xi.len() - 1]);
    if let Some(r) = radii.iter().find(|r| -**r < lo || **r > hi) {
        return Err(Error::Domain(format!(
            "radius {r} leaves the profile range"
        )));
    }
    let deficit: Vec<f64> = p.h.iter().map(|h| b1 - h).collect();
    let surplus: Vec<f64> = p.h.iter().map(|h| h - b2).collect();
    let i_minus: Vec<f64> = radii
        .iter()
        .map(|r| trapz(&p.xi, &deficit, -r, 0.0))
        .collect();
    let i_plus: Vec<f64> = radii
        .iter()
        .map(|r| trapz(&p.xi, &surplus, 0.0, *r))
        .collect();
    let class_minus = classify_increments(&i_minus);
    let class_plus = classify_increments(&i_plus);
    let classification = if class_minus == class_plus {
        class_minus
    } else {
        MassClass::Inconclusive
    };
    Ok(MassTransfer {
        radii: radii.to_vec(),
        i_minus,
        i_plus,
        class_minus,
        class_plus,
        classification,
    })
}

/// Nodal residual `−(1/2s)·ξ·D_c H + ℒU` at interior nodes; the ends are 0.
pub fn sss_residual_nodes(p: &Profile, st: &Stencil) -> Result<Vec<f64>> {
    let d = p.dxi();
    if (st.dx() - d).abs() > 1e-9 * d {
        return Err(Error::GridMismatch(format!(
            "stencil spacing {} differs from the profile spacing {d}",
            st.dx()
        )));
    }
    let far = (
        p.graph.eval(p.farfield.left),
        p.graph.eval(p.farfield.right),
    );
    let lu = st.apply(&p.u, far);
    let k = p.order.scaling_exponent();
    let n = p.xi.len();
    Ok((0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                let dh = (p.h[i + 1] - p.h[i - 1]) / (2.0 * d);
                -k * p.xi[i] * dh + lu[i]
            }
        })
        .collect())
}

/// Mean absolute residual of the profile equation away from the
/// interfaces (more than 5 cells) and the outer 20% of the range.
pub fn sss_residual(p: &Profile, st: &Stencil) -> Result<f64> {
    let res = sss_residual_nodes(p, st)?;
    let d = p.dxi();
    let marks: Vec<f64> = match detect_interfaces(p, None) {
        Ok(r) => vec![r.xi_w, r.xi_i],
        Err(_) => Vec::new(),
    };
    let reach = 0.8 * p.xi[0].abs().min(p.xi[p.xi.len() - 1].abs());
    let (sum, count) =
        p.xi.iter()
            .zip(&res)
            .filter(|(x, _)| x.abs() <= reach && marks.iter().all(|m| (**x - m).abs() > 5.0 * d))
            .fold((0.0, 0usize), |(s, c), (_, r)| (s + r.abs(), c + 1));
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

fn mirror_check(p: &Profile) -> Result<()> {
    let n = p.xi.len();
    let tol = 1e-9 * p.dxi();
    if (0..n).any(|k| (p.xi[k] + p.xi[n - 1 - k]).abs() > tol) {
        return Err(Error::GridMismatch(
            "profile grid is not symmetric about 0".into(),
        ));
    }
    Ok(())
}

/// `max |U(ξ) + U(−ξ)|`.
pub fn antisymmetry_defect(p: &Profile) -> Result<f64> {
    mirror_check(p)?;
    let n = p.u.len();
    Ok((0..n)
        .map(|k| (p.u[k] + p.u[n - 1 - k]).abs())
        .fold(0.0, f64::max))
}

/// `max |H(ξ) + H(−ξ) − L|` over nodes other than `ξ = 0`.
pub fn antisymmetry_defect_enthalpy(p: &Profile, latent: f64) -> Result<f64> {
    mirror_check(p)?;
    let n = p.h.len();
    let half = 0.5 * p.dxi();
    Ok((0..n)
        .filter(|k| p.xi[*k].abs() > half)
        .map(|k| (p.h[k] + p.h[n - 1 - k] - latent).abs())
        .fold(0.0, f64::max))
}

/// Water-interface position `x_w(t)` at every snapshot with `t > 0`.
pub fn free_boundary_history(series: &SnapshotSeries, order: Order) -> Result<Vec<(f64, f64)>> {
    series
        .snapshots()
        .iter()
        .filter(|s| s.time > 0.0)
        .map(|s| {
            let p = extract_profile(series, order, s.requested)?;
            let r = detect_interfaces(&p, None)?;
            Ok((s.time, r.xi_w * s.time.powf(order.scaling_exponent())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(h: impl Fn(f64) -> f64, graph: StefanGraph) -> Profile {
        let xi: Vec<f64> = (0..401).map(|i| -20.0 + 0.1 * i as f64).collect();
        let hv = xi.iter().map(|x| h(*x)).collect();
        Profile::new(
            xi,
            hv,
            Order::Fractional(0.5),
            graph,
            FarField::new(2.0, -1.0),
        )
        .unwrap()
    }

    #[test]
    fn tail_fit_recovers_power() {
        let g = StefanGraph::one_phase(1.0).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let p = synthetic(|x| 0.5 + x.abs().max(1e-3).powf(-2.0 * s), g);
            let slope = fit_tail_exponent(&p, 0.5, (2.0, 15.0)).unwrap();
            assert!((slope + 2.0 * s).abs() < 1e-6, "{slope}");
        }
        let p = synthetic(|x| 0.5 + x.abs().powf(-1.0), g);
        assert!(fit_tail_exponent(&p, 0.5, (2.0, 19.0)).is_err());
        assert!(fit_tail_exponent(&p, 0.5, (2.0, 2.5)).is_err());
        assert!(fit_tail_exponent(&p, 2.0, (2.0, 15.0)).is_err());
    }

    #[test]
    fn boundary_fit_recovers_power() {
        let g = StefanGraph::one_phase(1.0).unwrap();
        let xi0 = 3.05;
        let p = synthetic(
            |x| {
                if x < xi0 {
                    1.0 + (xi0 - x).powf(0.5)
                } else {
                    0.5
                }
            },
            g,
        );
        let slope = fit_boundary_exponent(&p, xi0, (0.0, 2.0)).unwrap();
        assert!((slope - 0.5).abs() < 1e-10);
    }

    #[test]
    fn interfaces_of_a_ramp() {
        let g = StefanGraph::two_phase(1.0).unwrap();
        // H = 0.5 − x/2 crosses 1 at x = −1 and 0 at x = 1
        let p = synthetic(|x| 0.5 - 0.5 * x, g);
        let r = detect_interfaces(&p, None).unwrap();
        assert!((r.xi_w + 1.0).abs() < 1e-9 && (r.xi_i - 1.0).abs() < 1e-9);
        assert!((r.mushy_width - 2.0).abs() < 1e-9);
        let flat = synthetic(|_| 0.5, g);
        assert!(matches!(
            detect_interfaces(&flat, None),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn mass_transfer_threshold() {
        let g = StefanGraph::one_phase(1.0).unwrap();
        let radii = [10.0, 20.0, 40.0, 80.0, 160.0];
        let xi: Vec<f64> = (0..40001).map(|i| -200.0 + 0.01 * i as f64).collect();
        for (s, want) in [(0.75, MassClass::Convergent), (0.25, MassClass::Divergent)] {
            let h = xi
                .iter()
                .map(|x| {
                    let t = x.abs().max(1.0).powf(-2.0 * s);
                    if *x < 0.0 {
                        2.0 - t
                    } else {
                        t
                    }
                })
                .collect();
            let p = Profile::new(
                xi.clone(),
                h,
                Order::Fractional(s),
                g,
                FarField::new(2.0, 0.0),
            )
            .unwrap();
            let m = mass_transfer(&p, 2.0, 0.0, &radii).unwrap();
            assert_eq!(m.classification, want, "s={s}: {m:?}");
        }
    }

    #[test]
    fn antisymmetry_of_odd_temperature() {
        let g = StefanGraph::two_phase(1.0).unwrap();
        let p = synthetic(|x| 0.5 - 2.0 * x, g);
        assert!(antisymmetry_defect(&p).unwrap() < 1e-12);
        assert!(antisymmetry_defect_enthalpy(&p, 1.0).unwrap() < 1e-12);
        let q = synthetic(|x| 0.7 - 2.0 * x, g);
        assert!(antisymmetry_defect(&q).unwrap() > 0.1);
    }

    #[test]
    fn constant_profile_has_zero_residual() {
        let g = StefanGraph::two_phase(1.0).unwrap();
        let xi: Vec<f64> = (0..101).map(|i| -5.0 + 0.1 * i as f64).collect();
        let p = Profile::new(
            xi,
            vec![1.5; 101],
            Order::Fractional(0.5),
            g,
            FarField::uniform(1.5),
        )
        .unwrap();
        let st = Stencil::fractional(0.5, 0.1, 101).unwrap();
        assert!(sss_residual(&p, &st).unwrap() < 1e-12);
    }

    #[test]
    fn csv_format() {
        let g = StefanGraph::two_phase(1.0).unwrap();
        let p = synthetic(|x| -x, g);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("xi,H,U\n"));
        assert_eq!(text.lines().count(), 402);
    }
}
