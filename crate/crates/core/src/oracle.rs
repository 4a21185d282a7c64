//! Reference solutions independent of the scheme: the fractional heat
//! kernel, the exact temperature of antisymmetric Riemann data, a
//! principal-value quadrature of `(−Δ)^s ψ`, and the very weak residual.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::fmt17;
use crate::nonlinearity::StefanGraph;
use crate::operator::{normalization_constant, Stencil};
use crate::quadrature::{adaptive, GaussLegendre};
use crate::stepper::SnapshotSeries;

/// How the heat kernel is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelQuadrature {
    /// Cauchy kernel, only for `s = 1/2`.
    ClosedForm,
    /// `(1/π)∫_0^ρmax e^{−tρ^{2s}} cos(xρ) dρ` with Gauss–Legendre panels
    /// of `points` nodes; `cutoff` bounds the neglected factor
    /// `e^{−tρmax^{2s}}`.
    FourierCosine { points: usize, cutoff: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelSpec {
    pub s: f64,
    pub quadrature: KernelQuadrature,
}

impl HeatKernelSpec {
    /// Closed form at `s = 1/2`, Fourier quadrature otherwise.
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidOrder(s));
        }
        let quadrature = if s == 0.5 {
            KernelQuadrature::ClosedForm
        } else {
            KernelQuadrature::FourierCosine {
                points: 16,
                cutoff: 1e-12,
            }
        };
        Ok(HeatKernelSpec { s, quadrature })
    }

    /// Forces the Fourier route, also at `s = 1/2`.
    pub fn fourier(s: f64) -> Result<Self> {
        let mut spec = Self::new(s)?;
        spec.quadrature = KernelQuadrature::FourierCosine {
            points: 16,
            cutoff: 1e-12,
        };
        Ok(spec)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("time must be > 0, got {t}")));
    }
    Ok(())
}

/// `∫_0^ρmax g(ρ) dρ` where `g` decays like `e^{−tρ^{2s}}` and may oscillate
/// with frequency `freq`.
///
/// Panels are dyadic towards the origin, where `ρ^{2s}` is not smooth, and
/// split further so that no sub-panel spans more than half a period. The
/// sub-panel count is doubled until two passes agree to `1e−10`.
fn fourier_integral<F: Fn(f64) -> f64>(g: F, freq: f64, rho_max: f64, points: usize) -> f64 {
    let rule = GaussLegendre::new(points);
    let pass = |refine: usize| -> f64 {
        let mut total = 0.0;
        let mut hi = rho_max;
        for _ in 0..60 {
            let lo = 0.5 * hi;
            let periods = ((hi - lo) * freq / PI).ceil().max(1.0) as usize;
            total += rule.integrate_composite(lo, hi, periods * refine, &g);
            hi = lo;
        }
        total + rule.integrate(0.0, hi, &g)
    };
    let mut refine = 1;
    let mut prev = pass(refine);
    while refine < 256 {
        refine *= 2;
        let next = pass(refine);
        if (next - prev).abs() <= 1e-10 {
            return next;
        }
        prev = next;
    }
    prev
}

fn rho_max(s: f64, t: f64, cutoff: f64) -> f64 {
    (-cutoff.ln() / t).powf(0.5 / s)
}

/// Fractional heat kernel `P_s(x, t)`, the fundamental solution of
/// `∂_t + (−Δ)^s`.
pub fn heat_kernel(spec: &HeatKernelSpec, x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = spec.s;
    Ok(match spec.quadrature {
        KernelQuadrature::ClosedForm => {
            if s != 0.5 {
                return Err(Error::param(
                    "quadrature",
                    "closed form exists only for s = 1/2",
                ));
            }
            t / (PI * (t * t + x * x))
        }
        KernelQuadrature::FourierCosine { points, cutoff } => {
            let rm = rho_max(s, t, cutoff);
            let g = |r: f64| (-t * r.powf(2.0 * s)).exp() * (x * r).cos();
            fourier_integral(g, x.abs(), rm, points) / PI
        }
    })
}

/// Exact temperature for the data `u0 = P` on `x <= 0` and `−P` on
/// `x > 0`, i.e. `u(x,t) = sign(−x)·P·∫_{−|ξ|}^{|ξ|} P_s(z,1) dz` with
/// `ξ = x·t^{−1/2s}`.
pub fn antisym_exact_u(p: f64, s: f64, x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let spec = HeatKernelSpec::new(s)?;
    antisym_exact_u_with(&spec, p, x, t)
}

pub fn antisym_exact_u_with(spec: &HeatKernelSpec, p: f64, x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = spec.s;
    if x == 0.0 {
        return Ok(0.0);
    }
    let a = (x / t.powf(0.5 / s)).abs();
    let mass = match spec.quadrature {
        KernelQuadrature::ClosedForm => 2.0 / PI * a.atan(),
        KernelQuadrature::FourierCosine { points, cutoff } => {
            let rm = rho_max(s, 1.0, cutoff);
            let g = |r: f64| {
                let sinc = if r * a < 1e-8 { a } else { (a * r).sin() / r };
                (-r.powf(2.0 * s)).exp() * sinc
            };
            2.0 / PI * fourier_integral(g, a, rm, points)
        }
    };
    Ok(-x.signum() * p * mass)
}

/// Oracle table `x,u_exact`.
pub fn write_oracle_csv<W: Write>(out: &mut W, p: f64, s: f64, t: f64, xs: &[f64]) -> Result<()> {
    writeln!(out, "x,u_exact")?;
    for x in xs {
        writeln!(
            out,
            "{},{}",
            fmt17(*x),
            fmt17(antisym_exact_u(p, s, *x, t)?)
        )?;
    }
    Ok(())
}

/// `ψ''(x)` by Richardson extrapolation of centred second differences.
pub fn second_derivative(psi: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let d2 = |h: f64| (psi(x + h) - 2.0 * psi(x) + psi(x - h)) / (h * h);
    let h = 1e-2;
    (4.0 * d2(0.5 * h) - d2(h)) / 3.0
}

fn fourth_derivative(psi: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 2e-2;
    let f = |k: f64| psi(x + k * h);
    (f(2.0) - 4.0 * f(1.0) + 6.0 * f(0.0) - 4.0 * f(-1.0) + f(-2.0)) / h.powi(4)
}

/// `(−Δ)^s ψ(x) = c_{1,s} ∫_0^∞ (2ψ(x) − ψ(x+z) − ψ(x−z)) z^{−1−2s} dz`
/// for `ψ` vanishing outside `support`.
///
/// On `z < 10^{−2}` the bracket is replaced by its Taylor polynomial
/// `−ψ''z² − ψ''''z⁴/12`, which avoids cancellation in the integrand; the
/// rest is adaptive Gauss–Kronrod, and the `2ψ(x)` part beyond `z = 1` is
/// integrated analytically.
pub fn fractional_laplacian_pv(
    psi: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    s: f64,
    x: f64,
) -> f64 {
    let two_s = 2.0 * s;
    let z0: f64 = 1e-2;
    let d2 = second_derivative(psi, x);
    let d4 = fourth_derivative(psi, x);
    let inner = -d2 * z0.powf(2.0 - two_s) / (2.0 - two_s)
        - d4 / 12.0 * z0.powf(4.0 - two_s) / (4.0 - two_s);
    let px = psi(x);
    let bracket = |z: f64| (2.0 * px - psi(x + z) - psi(x - z)) * z.powf(-1.0 - two_s);
    let mut cuts = vec![z0, 1.0];
    for edge in [support.0 - x, support.1 - x, x - support.0, x - support.1] {
        if edge > z0 && edge < 1.0 {
            cuts.push(edge);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let middle: f64 = cuts
        .windows(2)
        .map(|w| adaptive(bracket, w[0], w[1], 1e-13))
        .sum();
    let kernel = |z: f64| z.powf(-1.0 - two_s);
    let mut outer = 2.0 * px / two_s;
    // ψ(x+z) is nonzero for z ∈ [a−x, b−x], ψ(x−z) for z ∈ [x−b, x−a]
    for (lo, hi, sign) in [
        (support.0 - x, support.1 - x, 1.0),
        (x - support.1, x - support.0, -1.0),
    ] {
        let (lo, hi) = (lo.max(1.0), hi);
        if hi > lo {
            outer -= adaptive(|z| psi(x + sign * z) * kernel(z), lo, hi, 1e-13);
        }
    }
    normalization_constant(s) * (inner + middle + outer)
}

/// A smooth test function on space-time with compact support.
pub trait SpaceTimeTest {
    fn value(&self, x: f64, t: f64) -> f64;
    fn dt(&self, x: f64, t: f64) -> f64;
    /// Spatial interval outside of which the function vanishes.
    fn x_support(&self) -> (f64, f64);
}

/// `ψ(x,t) = exp(1 − 1/(1 − r²))·cos²(πt/2T)` with `r = (x − center)/radius`.
#[derive(Clone, Copy, Debug)]
pub struct BumpTest {
    pub center: f64,
    pub radius: f64,
    pub horizon: f64,
}

impl BumpTest {
    fn space(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.radius;
        if r.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        }
    }
}

impl SpaceTimeTest for BumpTest {
    fn value(&self, x: f64, t: f64) -> f64 {
        if t >= self.horizon {
            return 0.0;
        }
        let c = (0.5 * PI * t / self.horizon).cos();
        self.space(x) * c * c
    }

    fn dt(&self, x: f64, t: f64) -> f64 {
        if t >= self.horizon {
            return 0.0;
        }
        let a = 0.5 * PI * t / self.horizon;
        -self.space(x) * (0.5 * PI / self.horizon) * (2.0 * a).sin()
    }

    fn x_support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Very weak residual
/// `∫∫ (h ∂_t ψ − Φ(h) ℒψ) dx dt + ∫ h0 ψ(·,0) dx`.
///
/// Between recorded times `h` and `ℒΦ(h)` are interpolated linearly; the
/// `h ∂_t ψ` part is integrated by parts exactly, so a stationary field
/// has zero residual. `ℒψ` is the discrete operator; by the symmetry of
/// the weights the pairing is evaluated as `Σ ψ_β (ℒΦ(h))_β`, which also
/// accounts for `Φ(h)` beyond the window.
pub fn weak_residual(
    series: &SnapshotSeries,
    graph: &StefanGraph,
    psi: &dyn SpaceTimeTest,
    st: &Stencil,
) -> Result<f64> {
    let grid = *series.initial().grid();
    let (a, b) = psi.x_support();
    if a <= grid.x_min() || b >= grid.x_max() {
        return Err(Error::Domain(
            "test function support touches the window edge".into(),
        ));
    }
    let ff = series.initial().farfield();
    let far = (graph.eval(ff.left), graph.eval(ff.right));
    let dx = grid.dx();
    let xs: Vec<f64> = grid.nodes().collect();
    let mut frames: Vec<(f64, &[f64])> = vec![(0.0, series.initial().values())];
    frames.extend(
        series
            .snapshots()
            .iter()
            .map(|s| (s.time, s.field.values())),
    );
    frames.dedup_by(|b, a| b.0 == a.0);
    let lus: Vec<Vec<f64>> = frames
        .iter()
        .map(|(_, h)| st.apply(&graph.temperatures(h), far))
        .collect();
    let gl = GaussLegendre::new(6);
    let mut total = 0.0;
    for k in 1..frames.len() {
        let (t0, h0) = frames[k - 1];
        let (t1, h1) = frames[k];
        let span = t1 - t0;
        for (i, x) in xs.iter().enumerate() {
            if *x <= a || *x >= b {
                continue;
            }
            let (mut mean_psi, mut lin_psi) = (0.0, 0.0);
            for (z, w) in gl.nodes().iter().zip(gl.weights()) {
                let lam = 0.5 * (z + 1.0);
                let p = 0.5 * w * psi.value(*x, t0 + lam * span);
                mean_psi += p;
                lin_psi += lam * p;
            }
            let by_parts =
                h1[i] * psi.value(*x, t1) - h0[i] * psi.value(*x, t0) - (h1[i] - h0[i]) * mean_psi;
            let diffusion = span * (lus[k - 1][i] * (mean_psi - lin_psi) + lus[k][i] * lin_psi);
            total += (by_parts - diffusion) * dx;
        }
    }
    let initial: f64 = xs
        .iter()
        .zip(series.initial().values())
        .map(|(x, h)| h * psi.value(*x, 0.0))
        .sum::<f64>()
        * dx;
    Ok(total + initial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_kernel_at_origin() {
        let spec = HeatKernelSpec::new(0.5).unwrap();
        assert!((heat_kernel(&spec, 0.0, 1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(heat_kernel(&spec, 0.0, 0.0).is_err());
    }

    #[test]
    fn fourier_route_matches_closed_form() {
        let f = HeatKernelSpec::fourier(0.5).unwrap();
        for x in [0.0, 0.3, 1.0, 4.0, 20.0] {
            let exact = 1.0 / (PI * (1.0 + x * x));
            let v = heat_kernel(&f, x, 1.0).unwrap();
            assert!((v - exact).abs() < 1e-10, "x={x}: {v} vs {exact}");
        }
    }

    #[test]
    fn kernel_value_at_origin_matches_gamma() {
        for s in [0.25, 0.6, 0.75] {
            let spec = HeatKernelSpec::new(s).unwrap();
            let exact = libm::tgamma(1.0 + 0.5 / s) / PI;
            assert!((heat_kernel(&spec, 0.0, 1.0).unwrap() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn antisymmetric_solution_closed_form() {
        assert!((antisym_exact_u(1.0, 0.5, -1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(antisym_exact_u(1.0, 0.75, 0.0, 3.0).unwrap(), 0.0);
        let spec = HeatKernelSpec::fourier(0.5).unwrap();
        for x in [-3.0, -0.2, 0.7, 5.0] {
            let a = antisym_exact_u_with(&spec, 1.3, x, 2.0).unwrap();
            let b = antisym_exact_u(1.3, 0.5, x, 2.0).unwrap();
            assert!((a - b).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn pv_quadrature_of_gaussian_at_one_half() {
        // (1/π)∫_0^∞ ρ·√π e^{−ρ²/4} dρ = 2/√π
        let psi = |x: f64| (-x * x).exp();
        let v = fractional_laplacian_pv(&psi, (-9.0, 9.0), 0.5, 0.0);
        let exact = 2.0 / PI.sqrt();
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
    }

    #[test]
    fn second_derivative_of_gaussian() {
        let psi = |x: f64| (-x * x).exp();
        for x in [0.0f64, 0.5, 1.3] {
            let exact = (4.0 * x * x - 2.0) * (-x * x).exp();
            assert!((second_derivative(&psi, x) - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn oracle_csv_header() {
        let mut buf = Vec::new();
        write_oracle_csv(&mut buf, 1.0, 0.5, 1.0, &[-1.0, 0.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,u_exact\n"));
        assert_eq!(text.lines().count(), 3);
    }

    fn riemann_residual(dx: f64) -> f64 {
        use crate::grid::{sample_initial, Grid1D, InitialDatum};
        use crate::stepper::{run, RunConfig};
        let graph = StefanGraph::two_phase(1.0).unwrap();
        let grid = Grid1D::from_window(-3.0, 3.0, dx).unwrap();
        let datum = InitialDatum::Riemann {
            b1: 2.0,
            b2: -1.0,
            c: 0.0,
        };
        let ff = datum.background();
        let h0 = sample_initial(&grid, &datum, ff).unwrap();
        let st = Stencil::fractional(0.5, dx, grid.len()).unwrap();
        let times: Vec<f64> = (1..=20).map(|k| 0.01 * k as f64).collect();
        let cfg = RunConfig::new(graph, st.clone(), grid, ff, 0.2, times);
        let series = run(&cfg, &h0).unwrap();
        let psi = BumpTest {
            center: 0.1,
            radius: 1.5,
            horizon: 0.2,
        };
        weak_residual(&series, &graph, &psi, &st).unwrap()
    }

    #[test]
    fn weak_residual_shrinks_under_refinement() {
        let r: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|dx| riemann_residual(*dx).abs())
            .collect();
        assert!(r[1] < r[0] && r[2] < r[1], "{r:?}");
        assert!(r[2] < 1e-2, "{r:?}");
    }
}
