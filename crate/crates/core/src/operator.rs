//! Monotone finite-difference discretization of `(−Δ)^s` on a uniform grid,
//! and the standard three-point discretization of `−Δ`.
//!
//! ```text
//! L^{dx} w_β = Σ_{0<|γ|≤R} (w_β − w_{β+γ}) ω_|γ|
//!            + (w_β − φ_left)·tail + (w_β − φ_right)·tail
//! ```
//!
//! Reads outside the window use the constant far-field temperature of that
//! side. The two tail terms integrate the kernel exactly over
//! `|z| > (R + 1/2) dx`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fmt17, Grid1D};
use crate::oracle;

/// Order of the diffusion operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `(−Δ)^s` with `0 < s < 1`.
    Fractional(f64),
    /// The local Laplacian `−Δ`.
    Local,
}

impl Order {
    pub fn fractional(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidOrder(s));
        }
        Ok(Order::Fractional(s))
    }

    /// `s`, with the local operator counted as `s = 1`.
    pub fn s(&self) -> f64 {
        match self {
            Order::Fractional(s) => *s,
            Order::Local => 1.0,
        }
    }

    /// Exponent `1/(2s)` of the selfsimilar variable `ξ = x·t^{−1/(2s)}`.
    pub fn scaling_exponent(&self) -> f64 {
        0.5 / self.s()
    }
}

/// `c_{1,s} = 4^s Γ(1/2 + s) s / (√π Γ(1 − s))`, the constant that makes
/// the singular integral have Fourier symbol `|ξ|^{2s}`.
pub fn normalization_constant(s: f64) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    4f64.powf(s) * libm::tgamma(0.5 + s) * s / (sqrt_pi * libm::tgamma(1.0 - s))
}

/// Weights of the discrete operator.
///
/// `weights[γ − 1]` is `ω_γ`; `outer[m]` is the total weight of all
/// neighbours beyond distance `m` nodes, tail included.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    order: Order,
    dx: f64,
    weights: Vec<f64>,
    outer: Vec<f64>,
    tail_coeff: f64,
    c1s: f64,
    row_sum: f64,
}

impl Stencil {
    /// Builds the fractional stencil with truncation radius `r_cut` nodes.
    pub fn fractional(s: f64, dx: f64, r_cut: usize) -> Result<Self> {
        let order = Order::fractional(s)?;
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::param("dx", format!("spacing must be > 0, got {dx}")));
        }
        if r_cut < 2 {
            return Err(Error::param(
                "r_cut",
                format!("need R_cut >= 2, got {r_cut}"),
            ));
        }
        let c1s = normalization_constant(s);
        let two_s = 2.0 * s;
        let scale = c1s / two_s * dx.powf(-two_s);
        let weights: Vec<f64> = (1..=r_cut)
            .map(|g| {
                // (γ − 1/2)^{−2s} − (γ + 1/2)^{−2s} without cancellation
                let a = g as f64 - 0.5;
                let diff = -a.powf(-two_s) * (-two_s * (1.0 / a).ln_1p()).exp_m1();
                scale * diff
            })
            .collect();
        let mut weights = weights;
        // near-singularity correction: ∫_{|z|<dx/2} ≈ −ψ''·(dx/2)^{2−2s}/(2−2s),
        // with ψ'' replaced by the centred second difference
        weights[0] += c1s * (0.5 * dx).powf(2.0 - two_s) / ((2.0 - two_s) * dx * dx);
        let tail_coeff = c1s / two_s * ((r_cut as f64 + 0.5) * dx).powf(-two_s);
        Ok(Self::assemble(order, dx, weights, tail_coeff, c1s))
    }

    /// Fractional stencil reaching across a window of `nodes` nodes.
    pub fn fractional_full(s: f64, dx: f64, nodes: usize) -> Result<Self> {
        Self::fractional(s, dx, nodes.max(2))
    }

    /// Three-point Laplacian, `(2w_β − w_{β+1} − w_{β−1}) / dx²`.
    pub fn local(dx: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::param("dx", format!("spacing must be > 0, got {dx}")));
        }
        Ok(Self::assemble(
            Order::Local,
            dx,
            vec![1.0 / (dx * dx)],
            0.0,
            1.0,
        ))
    }

    pub fn for_order(order: Order, dx: f64, r_cut: usize) -> Result<Self> {
        match order {
            Order::Fractional(s) => Self::fractional(s, dx, r_cut),
            Order::Local => Self::local(dx),
        }
    }

    fn assemble(order: Order, dx: f64, weights: Vec<f64>, tail_coeff: f64, c1s: f64) -> Self {
        assert!(
            weights.iter().all(|w| *w >= 0.0 && w.is_finite()),
            "stencil weights must be finite and nonnegative"
        );
        let r = weights.len();
        let mut outer = vec![0.0; r + 1];
        outer[r] = tail_coeff;
        for m in (0..r).rev() {
            outer[m] = outer[m + 1] + weights[m];
        }
        let row_sum = 2.0 * outer[0];
        Stencil {
            order,
            dx,
            weights,
            outer,
            tail_coeff,
            c1s,
            row_sum,
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn r_cut(&self) -> usize {
        self.weights.len()
    }

    /// `ω_γ` for `γ >= 1`; zero beyond the truncation radius.
    pub fn weight(&self, gamma: usize) -> f64 {
        if gamma == 0 {
            0.0
        } else {
            self.weights.get(gamma - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_coeff(&self) -> f64 {
        self.tail_coeff
    }

    pub fn c1s(&self) -> f64 {
        self.c1s
    }

    /// `Σ_{γ≠0} ω_γ + 2·tail`, the diagonal coefficient of the operator.
    pub fn row_sum(&self) -> f64 {
        self.row_sum
    }

    /// Weight that node `beta` of an `n`-node window puts on the far field
    /// of each side, tail included.
    pub fn offwindow_weights(&self, n: usize, beta: usize) -> (f64, f64) {
        let r = self.weights.len();
        let ml = beta.min(r);
        let mr = (n - 1 - beta).min(r);
        (self.outer[ml], self.outer[mr])
    }

    /// Applies the operator to nodal temperatures `w`, with far-field
    /// temperatures `far = (left, right)`.
    pub fn apply(&self, w: &[f64], far: (f64, f64)) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        self.apply_into(w, far, &mut out);
        out
    }

    /// Like [`Stencil::apply`] but writes into `out`.
    ///
    /// The per-node sum runs in a fixed order (left neighbours, right
    /// neighbours, far-field terms), so results do not depend on how nodes
    /// are scheduled.
    pub fn apply_into(&self, w: &[f64], far: (f64, f64), out: &mut [f64]) {
        let n = w.len();
        assert_eq!(out.len(), n, "output length must match input");
        let r = self.weights.len();
        let reversed: Vec<f64> = w.iter().rev().copied().collect();
        for (b, slot) in out.iter_mut().enumerate() {
            let c = w[b];
            let ml = b.min(r);
            let mr = (n - 1 - b).min(r);
            // w[b-1], w[b-2], ... are contiguous in `reversed` from n-b
            let left = weighted_diff(c, &self.weights[..ml], &reversed[n - b..n - b + ml]);
            let right = weighted_diff(c, &self.weights[..mr], &w[b + 1..b + 1 + mr]);
            *slot = left + right + (c - far.0) * self.outer[ml] + (c - far.1) * self.outer[mr];
        }
    }

    /// JSON header of the debug dump.
    pub fn header_json(&self) -> serde_json::Value {
        let s = match self.order {
            Order::Fractional(s) => serde_json::json!(s),
            Order::Local => serde_json::json!("local"),
        };
        serde_json::json!({
            "s": s,
            "dx": self.dx,
            "R_cut": self.r_cut(),
            "c1s": self.c1s,
            "row_sum": self.row_sum,
        })
    }

    /// Debug dump: `gamma,omega` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "gamma,omega")?;
        for (i, w) in self.weights.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, fmt17(*w))?;
        }
        Ok(())
    }
}

/// `Σ_k wts[k]·(c − vals[k])` with four interleaved partial sums.
#[inline]
fn weighted_diff(c: f64, wts: &[f64], vals: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let wc = wts.chunks_exact(4);
    let vc = vals.chunks_exact(4);
    let (wr, vr) = (wc.remainder(), vc.remainder());
    for (w4, v4) in wc.zip(vc) {
        for l in 0..4 {
            acc[l] += w4[l] * (c - v4[l]);
        }
    }
    let mut rest = 0.0;
    for (w, v) in wr.iter().zip(vr) {
        rest += w * (c - v);
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + rest
}

/// Discrete L¹ distance on `grid` between the stencil applied to samples of
/// `psi` and a reference evaluation of the continuous operator.
///
/// `psi` must vanish outside `support`, which has to sit inside the grid.
/// The reference is the principal-value quadrature for fractional orders
/// and a Richardson-extrapolated second difference for the local one.
pub fn consistency_error(
    st: &Stencil,
    grid: &Grid1D,
    psi: &dyn Fn(f64) -> f64,
    support: (f64, f64),
) -> Result<f64> {
    if (st.dx() - grid.dx()).abs() > 1e-12 * grid.dx() {
        return Err(Error::GridMismatch(
            "stencil and grid spacing differ".into(),
        ));
    }
    if support.0 < grid.x_min() || support.1 > grid.x_max() {
        return Err(Error::Domain(
            "test function support leaves the window".into(),
        ));
    }
    let samples: Vec<f64> = grid.nodes().map(psi).collect();
    let discrete = st.apply(&samples, (0.0, 0.0));
    let total: f64 = grid
        .nodes()
        .zip(&discrete)
        .map(|(x, d)| {
            let exact = match st.order() {
                Order::Fractional(s) => oracle::fractional_laplacian_pv(psi, support, s, x),
                Order::Local => -oracle::second_derivative(psi, x),
            };
            (d - exact).abs()
        })
        .sum();
    Ok(grid.dx() * total)
}
