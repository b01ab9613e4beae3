//! Time grids with quadrature weights and time-sampled field trajectories.

use crate::error::{Error, Result};
use crate::field::{FieldParts, PeriodicGrid, ScalarField};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    LogUniform,
    Uniform,
    Custom,
}

/// Strictly increasing positive time nodes with positive quadrature weights
/// for integrals against `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
}

impl TimeGrid {
    /// Geometric nodes `t_min * rho^k` (endpoints included) with cell weights
    /// on the log scale: `w_k = c_k * delta * t_k`, `c_k = 1/2` at the ends.
    /// Exact for integrands proportional to `1/t`.
    pub fn log_uniform(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_min must be strictly positive (power-law weights are non-integrable at 0), got {t_min}"
            )));
        }
        if !(t_max > t_min) {
            return Err(Error::InvalidParameter(format!(
                "empty range: t_min={t_min}, t_max={t_max}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "count must be >= 2, got {count}"
            )));
        }
        let delta = (t_max / t_min).ln() / (count - 1) as f64;
        let nodes: Vec<f64> = (0..count)
            .map(|k| t_min * (delta * k as f64).exp())
            .collect();
        let weights: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let c = if k == 0 || k == count - 1 { 0.5 } else { 1.0 };
                c * delta * t
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::LogUniform,
        })
    }

    /// Evenly spaced nodes on `[t_min, t_max]` with trapezoid weights.
    pub fn uniform(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_min must be positive, got {t_min}"
            )));
        }
        if !(t_max > t_min) {
            return Err(Error::InvalidParameter(format!(
                "empty range: t_min={t_min}, t_max={t_max}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "count must be >= 2, got {count}"
            )));
        }
        let dt = (t_max - t_min) / (count - 1) as f64;
        let nodes: Vec<f64> = (0..count).map(|k| t_min + dt * k as f64).collect();
        let weights: Vec<f64> = (0..count)
            .map(|k| {
                if k == 0 || k == count - 1 {
                    0.5 * dt
                } else {
                    dt
                }
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::Uniform,
        })
    }

    pub fn from_nodes_weights(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "need >= 2 nodes with matching weights".into(),
            ));
        }
        if !(nodes[0] > 0.0) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "nodes must be strictly increasing and positive".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::Custom,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Quadrature of `f(t)` against `dt` over the whole grid.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// Cell boundaries `b_0 = 0 < b_1 < ... < b_m = t_m` tiling `[0, t_m]`,
    /// with node `t_i` inside `[b_{i-1}, b_i]`. Interior boundaries sit at the
    /// geometric (log grids) or arithmetic midpoints between nodes.
    pub fn cell_boundaries_upto(&self, m: usize) -> Vec<f64> {
        let mut b = Vec::with_capacity(m + 2);
        b.push(0.0);
        for i in 0..m {
            let mid = match self.kind {
                GridKind::LogUniform => (self.nodes[i] * self.nodes[i + 1]).sqrt(),
                _ => 0.5 * (self.nodes[i] + self.nodes[i + 1]),
            };
            b.push(mid);
        }
        b.push(self.nodes[m]);
        b
    }

    /// Restrict to every `stride`-th node (always keeping the first node).
    pub fn subsample(&self, stride: usize) -> TimeGrid {
        let nodes: Vec<f64> = self.nodes.iter().step_by(stride).copied().collect();
        let weights: Vec<f64> = self
            .weights
            .iter()
            .step_by(stride)
            .map(|w| w * stride as f64)
            .collect();
        TimeGrid {
            nodes,
            weights,
            kind: GridKind::Custom,
        }
    }
}

/// A time-sampled family of fields with quadrature weights: one slice per
/// node, all slices on one grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeField<F: FieldParts> {
    time: TimeGrid,
    slices: Vec<F>,
}

impl<F: FieldParts> SpaceTimeField<F> {
    pub fn new(time: TimeGrid, slices: Vec<F>) -> Result<Self> {
        if slices.len() != time.len() {
            return Err(Error::GridMismatch(format!(
                "slice count {} != node count {}",
                slices.len(),
                time.len()
            )));
        }
        let grid = slices[0].part_grid();
        if slices.iter().any(|s| s.part_grid() != grid) {
            return Err(Error::GridMismatch("slices on different grids".into()));
        }
        Ok(Self { time, slices })
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.slices[0].part_grid()
    }

    pub fn slices(&self) -> &[F] {
        &self.slices
    }

    pub fn slice(&self, m: usize) -> &F {
        &self.slices[m]
    }

    pub fn map_slices<G: FieldParts>(&self, f: impl Fn(&F) -> G) -> SpaceTimeField<G> {
        SpaceTimeField {
            time: self.time.clone(),
            slices: self.slices.iter().map(f).collect(),
        }
    }

    /// Pointwise squared magnitude of every slice.
    pub fn sq_slices(&self) -> Vec<Vec<f64>> {
        self.slices.iter().map(|s| s.sq_magnitude()).collect()
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        assert_eq!(
            self.time.nodes(),
            other.time.nodes(),
            "trajectories on different time grids"
        );
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| {
                F::from_parts(
                    a.parts()
                        .iter()
                        .zip(b.parts())
                        .map(|(x, y)| f(x, y))
                        .collect(),
                )
            })
            .collect();
        Self {
            time: self.time.clone(),
            slices,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            time: self.time.clone(),
            slices: self
                .slices
                .iter()
                .map(|s| F::from_parts(s.parts().iter().map(|p| p.scale(c)).collect()))
                .collect(),
        }
    }

    /// Weighted space-time L2 norm `(sum_m w_m |u(t_m)|_{L2}^2)^(1/2)`.
    pub fn l2_space_time(&self) -> f64 {
        let vol = self.grid().cell_volume();
        self.time
            .weights()
            .iter()
            .zip(&self.slices)
            .map(|(&w, s)| w * s.sq_magnitude().iter().sum::<f64>() * vol)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.sq_magnitude().iter().fold(0.0f64, |m, v| m.max(*v)))
            .fold(0.0f64, f64::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices
            .iter()
            .all(|s| s.parts().iter().all(|p| p.is_finite()))
    }

    /// Time derivative by second-order finite differences on the (possibly
    /// non-uniform) node set; one-sided at the endpoints.
    pub fn time_derivative(&self) -> Self {
        let t = self.time.nodes();
        let m = t.len();
        let parts_count = self.slices[0].parts().len();
        let grid = self.grid();
        let npts = grid.len();
        let mut out_slices = Vec::with_capacity(m);
        for i in 0..m {
            let (ia, ib, ic, ca, cb, cc) = fd_coeffs(t, i);
            let mut parts = Vec::with_capacity(parts_count);
            for p in 0..parts_count {
                let a = self.slices[ia].parts()[p].values();
                let b = self.slices[ib].parts()[p].values();
                let c = self.slices[ic].parts()[p].values();
                let mut vals = vec![0.0; npts];
                for j in 0..npts {
                    vals[j] = ca * a[j] + cb * b[j] + cc * c[j];
                }
                parts.push(ScalarField::from_values(grid, vals).expect("finite fd"));
            }
            out_slices.push(F::from_parts(parts));
        }
        Self {
            time: self.time.clone(),
            slices: out_slices,
        }
    }

    /// Richardson-style self-estimate of the time-derivative error: compare
    /// the full-grid derivative against the derivative on every other node,
    /// at shared interior nodes, in relative space-time L2.
    pub fn time_derivative_self_error(&self) -> f64 {
        if self.time.len() < 5 {
            return f64::INFINITY;
        }
        let full = self.time_derivative();
        let half = SpaceTimeField {
            time: self.time.subsample(2),
            slices: self.slices.iter().step_by(2).cloned().collect(),
        }
        .time_derivative();
        let vol = self.grid().cell_volume();
        let mut num = 0.0;
        let mut den = 0.0;
        for (hi, full_idx) in (0..self.time.len()).step_by(2).enumerate() {
            if hi == 0 || hi + 1 >= half.slices.len() {
                continue; // endpoints use different one-sided stencils
            }
            let w = self.time.weights()[full_idx];
            for (pa, pb) in full.slices[full_idx]
                .parts()
                .iter()
                .zip(half.slices[hi].parts())
            {
                for (a, b) in pa.values().iter().zip(pb.values()) {
                    num += w * (a - b) * (a - b) * vol;
                    den += w * a * a * vol;
                }
            }
        }
        if den <= 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }
}

/// Three-point finite-difference stencil (indices and coefficients) for the
/// derivative at node `i` of a non-uniform grid.
fn fd_coeffs(t: &[f64], i: usize) -> (usize, usize, usize, f64, f64, f64) {
    let m = t.len();
    if i == 0 {
        let h1 = t[1] - t[0];
        let h2 = t[2] - t[1];
        (
            0,
            1,
            2,
            -(2.0 * h1 + h2) / (h1 * (h1 + h2)),
            (h1 + h2) / (h1 * h2),
            -h1 / (h2 * (h1 + h2)),
        )
    } else if i == m - 1 {
        let h1 = t[m - 2] - t[m - 3];
        let h2 = t[m - 1] - t[m - 2];
        (
            m - 3,
            m - 2,
            m - 1,
            h2 / (h1 * (h1 + h2)),
            -(h1 + h2) / (h1 * h2),
            (h1 + 2.0 * h2) / (h2 * (h1 + h2)),
        )
    } else {
        let h1 = t[i] - t[i - 1];
        let h2 = t[i + 1] - t[i];
        (
            i - 1,
            i,
            i + 1,
            -h2 / (h1 * (h1 + h2)),
            (h2 - h1) / (h1 * h2),
            h1 / (h2 * (h1 + h2)),
        )
    }
}
