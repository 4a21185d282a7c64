//! Stefan graphs `u = Φ(h)` and the exact transforms between the one-phase
//! and two-phase problems.
//!
//! All graphs are piecewise linear with a flat interval of length `L`
//! (the latent heat). No smoothing of the kinks is performed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FarField, Field};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// `Φ(h) = k0·max(h − L, 0)`
    OnePhase,
    /// `Φ(h) = k1·max(h − L, 0) + k2·min(h, 0)`
    TwoPhase,
    /// Two-phase graph with the flat interval moved to `[−L/2, L/2]`.
    TwoPhaseCentered,
}

/// A Stefan nonlinearity with latent heat `L` and conductivities `k0, k1, k2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StefanGraph {
    pub kind: GraphKind,
    #[serde(rename = "L")]
    latent: f64,
    #[serde(default = "unit_conductivities")]
    k: [f64; 3],
}

fn unit_conductivities() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

impl StefanGraph {
    pub fn new(kind: GraphKind, latent: f64, k: [f64; 3]) -> Result<Self> {
        let graph = StefanGraph { kind, latent, k };
        graph.validate()?;
        Ok(graph)
    }

    pub fn one_phase(latent: f64) -> Result<Self> {
        Self::new(GraphKind::OnePhase, latent, unit_conductivities())
    }

    pub fn two_phase(latent: f64) -> Result<Self> {
        Self::new(GraphKind::TwoPhase, latent, unit_conductivities())
    }

    pub fn two_phase_centered(latent: f64) -> Result<Self> {
        Self::new(GraphKind::TwoPhaseCentered, latent, unit_conductivities())
    }

    /// Checks the invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        if !(self.latent.is_finite() && self.latent > 0.0) {
            return Err(Error::param(
                "L",
                format!("latent heat must be > 0, got {}", self.latent),
            ));
        }
        if self.k.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::param(
                "k",
                format!("conductivities must be > 0, got {:?}", self.k),
            ));
        }
        Ok(())
    }

    pub fn latent(&self) -> f64 {
        self.latent
    }

    pub fn conductivities(&self) -> [f64; 3] {
        self.k
    }

    /// The interval on which `Φ` vanishes.
    pub fn flat_interval(&self) -> (f64, f64) {
        match self.kind {
            GraphKind::OnePhase => (f64::NEG_INFINITY, self.latent),
            GraphKind::TwoPhase => (0.0, self.latent),
            GraphKind::TwoPhaseCentered => (-0.5 * self.latent, 0.5 * self.latent),
        }
    }

    /// Temperature `u = Φ(h)`.
    #[inline]
    pub fn eval(&self, h: f64) -> f64 {
        let [k0, k1, k2] = self.k;
        match self.kind {
            GraphKind::OnePhase => k0 * (h - self.latent).max(0.0),
            GraphKind::TwoPhase => k1 * (h - self.latent).max(0.0) + k2 * h.min(0.0),
            GraphKind::TwoPhaseCentered => {
                let half = 0.5 * self.latent;
                k1 * (h - half).max(0.0) + k2 * (h + half).min(0.0)
            }
        }
    }

    /// Applies `Φ` to a slice of enthalpies.
    pub fn eval_into(&self, h: &[f64], u: &mut [f64]) {
        for (u, h) in u.iter_mut().zip(h) {
            *u = self.eval(*h);
        }
    }

    pub fn temperatures(&self, h: &[f64]) -> Vec<f64> {
        h.iter().map(|h| self.eval(*h)).collect()
    }

    /// Largest slope of the active branches; drives the CFL rule.
    pub fn lipschitz_bound(&self) -> f64 {
        let [k0, k1, k2] = self.k;
        match self.kind {
            GraphKind::OnePhase => k0,
            GraphKind::TwoPhase | GraphKind::TwoPhaseCentered => k1.max(k2),
        }
    }
}

/// Maps a two-phase solution to a one-phase one: `h ↦ −h + L`.
///
/// The map is an involution. It also reflects the far field.
pub fn reflect_two_to_one(field: &Field, latent: f64) -> Field {
    let values = field.values().iter().map(|h| latent - h).collect();
    let ff = field.farfield();
    let farfield = FarField::new(latent - ff.left, latent - ff.right).with_split(ff.split);
    field.with_values(values, farfield)
}

/// Shifts the enthalpy by `−L/2` so that the two-phase problem can be
/// written with the centered graph.
pub fn center_shift(field: &Field, latent: f64) -> Field {
    let half = 0.5 * latent;
    let values = field.values().iter().map(|h| h - half).collect();
    let ff = field.farfield();
    let farfield = FarField::new(ff.left - half, ff.right - half).with_split(ff.split);
    field.with_values(values, farfield)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    #[test]
    fn evaluates_branches() {
        let two = StefanGraph::two_phase(1.0).unwrap();
        assert_eq!(two.eval(0.5), 0.0);
        assert_eq!(two.eval(-0.25), -0.25);
        let one = StefanGraph::one_phase(1.0).unwrap();
        assert_eq!(one.eval(1.5), 0.5);
        assert_eq!(one.eval(-3.0), 0.0);
    }

    #[test]
    fn lipschitz_bounds() {
        assert_eq!(StefanGraph::one_phase(1.0).unwrap().lipschitz_bound(), 1.0);
        let g = StefanGraph::new(GraphKind::TwoPhase, 1.0, [1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.lipschitz_bound(), 3.0);
        assert_eq!(
            StefanGraph::two_phase_centered(1.0)
                .unwrap()
                .lipschitz_bound(),
            1.0
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StefanGraph::one_phase(0.0).is_err());
        assert!(StefanGraph::new(GraphKind::TwoPhase, 1.0, [1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn flat_interval_is_exactly_zero() {
        let g = StefanGraph::two_phase(1.0).unwrap();
        for i in 0..=100 {
            assert_eq!(g.eval(i as f64 / 100.0), 0.0);
        }
    }

    fn field(values: Vec<f64>, left: f64, right: f64) -> Field {
        let grid = Grid1D::new(-1.0, 0.5, values.len()).unwrap();
        Field::new(grid, values, FarField::new(left, right)).unwrap()
    }

    #[test]
    fn reflection_examples() {
        let f = field(vec![1.0; 5], 1.0, 1.0);
        assert!(reflect_two_to_one(&f, 1.0)
            .values()
            .iter()
            .all(|v| *v == 0.0));

        let p2 = 0.3;
        let f = field(vec![-p2; 5], -p2, -p2);
        let r = reflect_two_to_one(&f, 1.0);
        assert!(r.values().iter().all(|v| (*v - (1.0 + p2)).abs() < 1e-15));
        assert!((r.farfield().left - 1.3).abs() < 1e-15);

        let f = field(vec![0.25, -2.0, 3.5, 0.75, 1.0], 0.25, 1.0);
        let back = reflect_two_to_one(&reflect_two_to_one(&f, 1.0), 1.0);
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn center_shift_examples() {
        let f = field(vec![1.0; 5], 1.0, 1.0);
        assert!(center_shift(&f, 1.0).values().iter().all(|v| *v == 0.5));
        let f = field(vec![0.5; 5], 0.5, 0.5);
        assert!(center_shift(&f, 1.0).values().iter().all(|v| *v == 0.0));

        let two = StefanGraph::two_phase(1.0).unwrap();
        let centered = StefanGraph::two_phase_centered(1.0).unwrap();
        let hs: Vec<f64> = (0..401).map(|i| -2.0 + i as f64 * 0.01).collect();
        let f = field(hs.clone(), -2.0, 2.0);
        let shifted = center_shift(&f, 1.0);
        for (h, ht) in hs.iter().zip(shifted.values()) {
            assert!((centered.eval(*ht) - two.eval(*h)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_phase_is_reflected_one_phase_below_latent() {
        let one = StefanGraph::one_phase(1.0).unwrap();
        let two = StefanGraph::two_phase(1.0).unwrap();
        for i in 0..300 {
            let h = -2.0 + i as f64 * 0.01;
            assert!((two.eval(h) + one.eval(-h + 1.0)).abs() < 1e-15);
        }
    }
}
