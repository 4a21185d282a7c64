//! Uniform 1-D grids, nodal enthalpy fields, initial-data sampling and the
//! discrete norms used by the monitors and the convergence study.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::StefanGraph;
use crate::quadrature::GaussLegendre;

/// Uniform grid `x_β = x_min + β·dx`, `β = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    dx: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::param("dx", format!("spacing must be > 0, got {dx}")));
        }
        if n < 3 {
            return Err(Error::param("n", format!("need at least 3 nodes, got {n}")));
        }
        if !x_min.is_finite() {
            return Err(Error::param("x_min", "must be finite"));
        }
        Ok(Grid1D { x_min, dx, n })
    }

    /// Grid covering `[x_min, x_max]` whose length is a whole number of cells.
    pub fn from_window(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::param(
                "window",
                format!("empty window [{x_min}, {x_max}]"),
            ));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::param("dx", format!("spacing must be > 0, got {dx}")));
        }
        let cells = (x_max - x_min) / dx;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(Error::param(
                "dx",
                format!(
                    "window length {} is not a multiple of dx = {dx}",
                    x_max - x_min
                ),
            ));
        }
        Self::new(x_min, dx, rounded as usize + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Indices of the nodes inside the closed interval `k`.
    pub fn indices_in(&self, k: (f64, f64)) -> std::ops::Range<usize> {
        let eps = 1e-9 * self.dx;
        let lo = ((k.0 - eps - self.x_min) / self.dx).ceil().max(0.0);
        let hi = ((k.1 + eps - self.x_min) / self.dx).floor() + 1.0;
        let hi = hi.min(self.n as f64).max(0.0);
        let lo = lo.min(hi);
        lo as usize..hi as usize
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
            && (self.x_min - other.x_min).abs() <= 1e-9 * self.dx
    }

    /// Whether the nodes are placed symmetrically about the origin.
    pub fn is_symmetric(&self) -> bool {
        (self.x_min + self.x_max()).abs() <= 1e-9 * self.dx
    }

    /// If every node of `self` is a node of `fine`, the refinement ratio.
    pub fn nested_ratio(&self, fine: &Grid1D) -> Option<usize> {
        let r = self.dx / fine.dx;
        let ri = r.round();
        if ri < 1.0 || (r - ri).abs() > 1e-9 * ri {
            return None;
        }
        let offset = (self.x_min - fine.x_min) / fine.dx;
        if (offset - offset.round()).abs() > 1e-6 || offset < -1e-6 {
            return None;
        }
        let last = offset.round() as usize + (self.n - 1) * ri as usize;
        (last < fine.n).then_some(ri as usize)
    }
}

/// Constant enthalpies used outside the window: `left` for `x <= split`,
/// `right` beyond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub left: f64,
    pub right: f64,
    #[serde(default)]
    pub split: f64,
}

impl FarField {
    pub fn new(left: f64, right: f64) -> Self {
        FarField {
            left,
            right,
            split: 0.0,
        }
    }

    pub fn uniform(value: f64) -> Self {
        Self::new(value, value)
    }

    pub fn with_split(mut self, split: f64) -> Self {
        self.split = split;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.left.is_finite() && self.right.is_finite() && self.split.is_finite()
    }

    /// Average of the piecewise-constant background over `[a, b]`.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        if b <= self.split {
            self.left
        } else if a >= self.split {
            self.right
        } else {
            (self.left * (self.split - a) + self.right * (b - self.split)) / (b - a)
        }
    }

    pub fn min(&self) -> f64 {
        self.left.min(self.right)
    }

    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

/// How nodal values were obtained from the initial datum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingRule {
    #[default]
    CellAverage,
    Pointwise,
}

/// Initial enthalpy `h0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialDatum {
    Constant {
        value: f64,
    },
    /// `b1` for `x <= c`, `b2` for `x > c`.
    Riemann {
        b1: f64,
        b2: f64,
        #[serde(default)]
        c: f64,
    },
    /// `amplitude·(cos(x − center) + offset)` on `|x − center| < radius`,
    /// `background` elsewhere.
    CosineBump {
        amplitude: f64,
        #[serde(default)]
        offset: f64,
        radius: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        background: f64,
    },
    /// Piecewise constant: `values[0]` left of `breaks[0]`, ...,
    /// `values[k]` right of `breaks[k-1]`.
    Steps {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// Linear interpolation of samples, extended by the end values.
    Tabulated {
        x: Vec<f64>,
        h: Vec<f64>,
    },
}

impl InitialDatum {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            InitialDatum::Constant { value } if !value.is_finite() => {
                Err(Error::param("datum.value", "must be finite"))
            }
            InitialDatum::Riemann { b1, b2, c } if !finite(&[*b1, *b2, *c]) => {
                Err(Error::param("datum", "Riemann constants must be finite"))
            }
            InitialDatum::CosineBump { radius, .. } if !(*radius > 0.0) => {
                Err(Error::param("datum.radius", "must be > 0"))
            }
            InitialDatum::Steps { breaks, values } => {
                if values.len() != breaks.len() + 1 || breaks.is_empty() {
                    return Err(Error::param(
                        "datum.values",
                        "need one more value than breaks, and at least one break",
                    ));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) || !finite(breaks) || !finite(values) {
                    return Err(Error::param(
                        "datum.breaks",
                        "must be finite and increasing",
                    ));
                }
                Ok(())
            }
            InitialDatum::Tabulated { x, h } => {
                if x.len() != h.len() || x.len() < 2 {
                    return Err(Error::param(
                        "datum.h",
                        "need matching x/h with >= 2 samples",
                    ));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) || !finite(x) || !finite(h) {
                    return Err(Error::param("datum.x", "must be finite and increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value.
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            InitialDatum::Constant { value } => *value,
            InitialDatum::Riemann { b1, b2, c } => {
                if x <= *c {
                    *b1
                } else {
                    *b2
                }
            }
            InitialDatum::CosineBump {
                amplitude,
                offset,
                radius,
                center,
                background,
            } => {
                let y = x - center;
                if y.abs() < *radius {
                    amplitude * (y.cos() + offset)
                } else {
                    *background
                }
            }
            InitialDatum::Steps { breaks, values } => {
                let k = breaks.partition_point(|b| *b < x);
                values[k]
            }
            InitialDatum::Tabulated { x: xs, h } => {
                if x <= xs[0] {
                    return h[0];
                }
                let last = xs.len() - 1;
                if x >= xs[last] {
                    return h[last];
                }
                let k = xs.partition_point(|v| *v <= x) - 1;
                let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
                h[k] * (1.0 - w) + h[k + 1] * w
            }
        }
    }

    /// Constants the datum takes far to the left and right.
    pub fn far_values(&self) -> (f64, f64) {
        match self {
            InitialDatum::Constant { value } => (*value, *value),
            InitialDatum::Riemann { b1, b2, .. } => (*b1, *b2),
            InitialDatum::CosineBump { background, .. } => (*background, *background),
            InitialDatum::Steps { values, .. } => (values[0], values[values.len() - 1]),
            InitialDatum::Tabulated { h, .. } => (h[0], h[h.len() - 1]),
        }
    }

    /// Background far field implied by the datum.
    pub fn background(&self) -> FarField {
        let (l, r) = self.far_values();
        let split = match self {
            InitialDatum::Riemann { c, .. } => *c,
            _ => 0.0,
        };
        FarField::new(l, r).with_split(split)
    }

    /// Interval outside of which the datum equals its far values.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            InitialDatum::Constant { .. } => None,
            InitialDatum::Riemann { c, .. } => Some((*c, *c)),
            InitialDatum::CosineBump { radius, center, .. } => {
                Some((center - radius, center + radius))
            }
            InitialDatum::Steps { breaks, .. } => Some((breaks[0], breaks[breaks.len() - 1])),
            InitialDatum::Tabulated { x, .. } => Some((x[0], x[x.len() - 1])),
        }
    }

    /// Points where the datum or its derivative may jump.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            InitialDatum::Constant { .. } => Vec::new(),
            InitialDatum::Riemann { c, .. } => vec![*c],
            InitialDatum::CosineBump { radius, center, .. } => {
                vec![center - radius, center + radius]
            }
            InitialDatum::Steps { breaks, .. } => breaks.clone(),
            InitialDatum::Tabulated { x, .. } => x.clone(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            InitialDatum::Constant { .. } | InitialDatum::Tabulated { .. } => true,
            InitialDatum::Riemann { b1, b2, .. } => b1 == b2,
            InitialDatum::CosineBump {
                amplitude,
                offset,
                radius,
                background,
                ..
            } => (amplitude * (radius.cos() + offset) - background).abs() < 1e-12,
            InitialDatum::Steps { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    pub fn is_riemann(&self) -> bool {
        matches!(self, InitialDatum::Riemann { .. })
    }

    /// Average over `[a, b]`, exact for piecewise-constant data and a
    /// 16-point Gauss–Legendre rule on each smooth piece otherwise.
    pub fn cell_average(&self, a: f64, b: f64, rule: &GaussLegendre) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|p| *p > a && *p < b));
        cuts.push(b);
        let piecewise_constant = matches!(
            self,
            InitialDatum::Constant { .. }
                | InitialDatum::Riemann { .. }
                | InitialDatum::Steps { .. }
        );
        if piecewise_constant && cuts.len() == 2 {
            return self.value_at(0.5 * (a + b));
        }
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            total += if piecewise_constant {
                self.value_at(0.5 * (lo + hi)) * (hi - lo)
            } else {
                rule.integrate(lo, hi, |x| self.value_at(x))
            };
        }
        total / (b - a)
    }
}

/// Nodal enthalpies on a grid together with the far-field extension.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
    farfield: FarField,
    sampling: SamplingRule,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>, farfield: FarField) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {i}")));
        }
        if !farfield.is_finite() {
            return Err(Error::param("farfield", "must be finite"));
        }
        Ok(Field {
            grid,
            values,
            farfield,
            sampling: SamplingRule::CellAverage,
        })
    }

    pub fn constant(grid: Grid1D, value: f64) -> Self {
        Field {
            grid,
            values: vec![value; grid.len()],
            farfield: FarField::uniform(value),
            sampling: SamplingRule::CellAverage,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn farfield(&self) -> FarField {
        self.farfield
    }

    pub fn sampling(&self) -> SamplingRule {
        self.sampling
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid and sampling metadata, new values and far field.
    pub fn with_values(&self, values: Vec<f64>, farfield: FarField) -> Field {
        assert_eq!(
            values.len(),
            self.grid.len(),
            "value count must match the grid"
        );
        Field {
            grid: self.grid,
            values,
            farfield,
            sampling: self.sampling,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes the `x,h,u` table with 17 significant digits.
    pub fn write_csv<W: Write>(&self, graph: &StefanGraph, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,h,u")?;
        for (i, h) in self.values.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                fmt17(self.grid.node(i)),
                fmt17(*h),
                fmt17(graph.eval(*h))
            )?;
        }
        Ok(())
    }
}

/// Decimal with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Samples `datum` on `grid` by cell averages.
pub fn sample_initial(grid: &Grid1D, datum: &InitialDatum, farfield: FarField) -> Result<Field> {
    sample_initial_with(grid, datum, farfield, SamplingRule::CellAverage)
}

pub fn sample_initial_with(
    grid: &Grid1D,
    datum: &InitialDatum,
    farfield: FarField,
    rule: SamplingRule,
) -> Result<Field> {
    datum.validate()?;
    if let Some((a, b)) = datum.support() {
        let half = 0.5 * grid.dx();
        let inside = a >= grid.x_min() - half && b <= grid.x_max() + half;
        let (l, r) = datum.far_values();
        let agrees = l == farfield.left && r == farfield.right;
        if !inside && !agrees {
            return Err(Error::param(
                "datum",
                format!(
                    "support [{a}, {b}] leaves the window [{}, {}] and the background \
                     ({l}, {r}) disagrees with the far field ({}, {})",
                    grid.x_min(),
                    grid.x_max(),
                    farfield.left,
                    farfield.right
                ),
            ));
        }
    }
    let half = 0.5 * grid.dx();
    let values: Vec<f64> = match rule {
        SamplingRule::CellAverage => {
            let gl = GaussLegendre::new(16);
            grid.nodes()
                .map(|x| datum.cell_average(x - half, x + half, &gl))
                .collect()
        }
        SamplingRule::Pointwise => {
            if !datum.is_continuous() {
                return Err(Error::param(
                    "sampling",
                    "pointwise sampling needs a continuous datum",
                ));
            }
            grid.nodes().map(|x| datum.value_at(x)).collect()
        }
    };
    let mut field = Field::new(*grid, values, farfield)?;
    field.sampling = rule;
    Ok(field)
}

/// `dx · Σ_{x_β ∈ K} |a_β − b_β|`.
pub fn l1_local_distance(a: &Field, b: &Field, k: (f64, f64)) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    let range = a.grid.indices_in(k);
    if range.is_empty() {
        return Err(Error::Domain(format!(
            "interval [{}, {}] contains no grid node",
            k.0, k.1
        )));
    }
    let sum: f64 = range.map(|i| (a.values[i] - b.values[i]).abs()).sum();
    Ok(a.grid.dx() * sum)
}

/// Mass of `f` above the piecewise-constant `background`, with the
/// background cell-averaged like the data so that a freshly sampled
/// Riemann datum has zero excess.
pub fn excess_mass(f: &Field, background: &FarField) -> f64 {
    let dx = f.grid.dx();
    let half = 0.5 * dx;
    let sum: f64 = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = f.grid.node(i);
            v - background.cell_average(x - half, x + half)
        })
        .sum();
    dx * sum
}
