//! Discretized families of balls `B(x_0, r)` and the shared sup-quadrature
//! engine behind every tent norm.

use crate::error::{Error, Result};
use crate::field::PeriodicGrid;
use crate::norms::report::BallValue;
use crate::timegrid::TimeGrid;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The norm families distinguished by their normalization exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TentFamily {
    /// Initial-data family: `r^{n - 2 alpha - 2}` against `t^{-alpha}` on the
    /// gradient extension (`alpha = -1` labels the BMO^{-1} form).
    InitData,
    /// Solution family: `r^{n + 2 beta - 4}` against `t^beta`.
    Solution,
    /// Gradient family: `r^{n + 2 beta - 2}` against `t^beta`.
    Gradient,
    /// Classical (infty, p) family: `r^n`, p-th power.
    Classic,
    /// Sobolev-Slobodeckij double-ball family: `r^{n - 2 alpha - 2}`.
    Slobodeckij,
}

impl TentFamily {
    pub fn label(&self) -> &'static str {
        match self {
            TentFamily::InitData => "U",
            TentFamily::Solution => "T",
            TentFamily::Gradient => "BoldT",
            TentFamily::Classic => "ClassicT",
            TentFamily::Slobodeckij => "V",
        }
    }

    /// Exponent `E` in the normalization `1 / r^E`.
    pub fn r_exponent(&self, dim: usize, param: f64) -> f64 {
        let n = dim as f64;
        match self {
            TentFamily::InitData | TentFamily::Slobodeckij => n - 2.0 * param - 2.0,
            TentFamily::Solution => n + 2.0 * param - 4.0,
            TentFamily::Gradient => n + 2.0 * param - 2.0,
            TentFamily::Classic => n,
        }
    }
}

/// Family label plus its parameter (`alpha` or `beta`; integrability power
/// `p` for the classical family).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TentWeight {
    pub family: TentFamily,
    pub param: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

/// Finite discretization of the `sup` over `(x_0, r)`: centers on a coarse
/// sub-lattice, dyadic radii `L * 2^{-j}` capped at `L/4` so no ball wraps.
#[derive(Debug, Clone)]
pub struct BallFamily {
    grid: PeriodicGrid,
    centers: Vec<usize>,
    /// Strictly decreasing.
    radii: Vec<f64>,
}

impl BallFamily {
    /// Default family: centers with stride `N/8`, radii `L 2^{-j}` for
    /// `j = 2 ..= max(4, log2 N - 2)`.
    pub fn standard(grid: &PeriodicGrid) -> Self {
        let n = grid.points_per_axis();
        let j_max = ((n as f64).log2() as u32 - 2).max(4);
        Self::new(grid, 8, 2, j_max).expect("standard family is valid")
    }

    /// Family with `centers_per_axis` centers per axis and radii
    /// `L 2^{-j}` for `j in j_min ..= j_max`.
    pub fn new(
        grid: &PeriodicGrid,
        centers_per_axis: usize,
        j_min: u32,
        j_max: u32,
    ) -> Result<Self> {
        let n = grid.points_per_axis();
        if centers_per_axis == 0 || centers_per_axis > n || !n.is_multiple_of(centers_per_axis) {
            return Err(Error::InvalidParameter(format!(
                "centers_per_axis must divide N={n}, got {centers_per_axis}"
            )));
        }
        if j_min < 2 {
            return Err(Error::InvalidParameter(format!(
                "j_min must be >= 2 so radii stay <= L/4 (no wrap), got {j_min}"
            )));
        }
        if j_max < j_min + 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 3 radii: j range [{j_min}, {j_max}]"
            )));
        }
        let stride = n / centers_per_axis;
        let dim = grid.dim();
        let mut centers = Vec::with_capacity(centers_per_axis.pow(dim as u32));
        let total = centers_per_axis.pow(dim as u32);
        for flat in 0..total {
            let mut rem = flat;
            let mut coords = [0usize; 3];
            for slot in coords.iter_mut().take(dim) {
                *slot = (rem % centers_per_axis) * stride;
                rem /= centers_per_axis;
            }
            centers.push(grid.flat_index(&coords[..dim]));
        }
        let l = grid.side_length();
        let radii: Vec<f64> = (j_min..=j_max)
            .map(|j| l * (2.0f64).powi(-(j as i32)))
            .collect();
        Ok(Self {
            grid: *grid,
            centers,
            radii,
        })
    }

    /// Same radii plus one further halving, with doubled center density:
    /// a strict superset of `self`'s tents.
    pub fn enlarged(&self) -> Result<Self> {
        let n = self.grid.points_per_axis();
        let per_axis = n / self.stride();
        let j_min = (self.grid.side_length() / self.radii[0]).log2().round() as u32;
        let j_max = (self.grid.side_length() / *self.radii.last().unwrap())
            .log2()
            .round() as u32;
        Self::new(&self.grid, (per_axis * 2).min(n), j_min, j_max + 1)
    }

    fn stride(&self) -> usize {
        let per_axis = (self.centers.len() as f64)
            .powf(1.0 / self.grid.dim() as f64)
            .round() as usize;
        self.grid.points_per_axis() / per_axis
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn r_max(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_min(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// A single-ball family (used by per-ball oracles).
    pub fn single(grid: &PeriodicGrid, center: &[usize], radius: f64) -> Result<Self> {
        if radius > grid.side_length() / 4.0 {
            return Err(Error::InvalidParameter(format!(
                "radius {radius} exceeds L/4 wrap cap"
            )));
        }
        Ok(Self {
            grid: *grid,
            centers: vec![grid.flat_index(center)],
            radii: vec![radius],
        })
    }

    /// Lattice offsets sorted by distance, with the prefix count for every
    /// radius (ascending in radius).
    pub(crate) fn geometry(&self) -> BallGeometry {
        let grid = &self.grid;
        let h = grid.spacing();
        let n = grid.points_per_axis() as i64;
        let dim = grid.dim();
        let r_max = self.r_max();
        let reach = (r_max / h).floor() as i64;
        let mut offsets: Vec<(f64, [i64; 3])> = Vec::new();
        let side = 2 * reach + 1;
        let total = (side as usize).pow(dim as u32);
        for flat in 0..total {
            let mut rem = flat as i64;
            let mut delta = [0i64; 3];
            let mut dist_sq = 0.0;
            for slot in delta.iter_mut().take(dim) {
                *slot = rem % side - reach;
                rem /= side;
                let d = *slot as f64 * h;
                dist_sq += d * d;
            }
            if dist_sq.sqrt() <= r_max {
                offsets.push((dist_sq.sqrt(), delta));
            }
        }
        offsets.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Prefix counts per radius, ascending.
        let mut radii_asc = self.radii.clone();
        radii_asc.reverse();
        let counts = radii_asc
            .iter()
            .map(|&r| offsets.partition_point(|(d, _)| *d <= r))
            .collect();
        BallGeometry {
            offsets: offsets.into_iter().map(|(_, d)| d).collect(),
            radius_counts: counts,
            radii_asc,
            n_per_axis: n,
        }
    }
}

pub(crate) struct BallGeometry {
    /// Per-axis lattice deltas, sorted by physical distance.
    offsets: Vec<[i64; 3]>,
    /// For each radius (ascending), the number of leading offsets inside it.
    radius_counts: Vec<usize>,
    radii_asc: Vec<f64>,
    n_per_axis: i64,
}

impl BallGeometry {
    /// Resolve the offsets around one center into wrapped flat indices,
    /// preserving the sorted order.
    pub(crate) fn indices_around(&self, grid: &PeriodicGrid, center: usize) -> Vec<u32> {
        let c = grid.coords(center);
        let n = self.n_per_axis;
        let mask = n - 1;
        let dim = grid.dim();
        self.offsets
            .iter()
            .map(|delta| {
                let mut idx: i64 = 0;
                for axis in (0..dim).rev() {
                    idx = idx * n + ((c[axis] as i64 + delta[axis]) & mask);
                }
                idx as u32
            })
            .collect()
    }

    pub(crate) fn radius_counts(&self) -> &[usize] {
        &self.radius_counts
    }

    pub(crate) fn radii_asc(&self) -> &[f64] {
        &self.radii_asc
    }
}

/// Shared sup-quadrature: for every ball, integrate the prepared integrand
/// slices over the tent `B(x_0, r) x (0, r^2]` against `w_m t_m^{t_exp}`,
/// normalize by `r^{r_exp}`, take the `1/root` power, and return all ball
/// values together with the sup.
pub(crate) fn tent_sup(
    grid: &PeriodicGrid,
    family: &BallFamily,
    integrand_slices: &[Vec<f64>],
    time: &TimeGrid,
    t_exp: f64,
    r_exp: f64,
    root: f64,
) -> (f64, Vec<BallValue>) {
    let geometry = family.geometry();
    let h_n = grid.cell_volume();
    let nodes = time.nodes();
    let weights = time.weights();
    // Weighted time factors, and per-radius node cutoffs t <= r^2.
    let t_factors: Vec<f64> = nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| w * t.powf(t_exp))
        .collect();
    let node_counts: Vec<usize> = geometry
        .radii_asc()
        .iter()
        .map(|&r| nodes.partition_point(|&t| t <= r * r * (1.0 + 1e-12)))
        .collect();

    let per_center: Vec<Vec<BallValue>> = family
        .centers()
        .par_iter()
        .map(|&center| {
            let indices = geometry.indices_around(grid, center);
            let counts = geometry.radius_counts();
            let radii = geometry.radii_asc();
            // integral[j] accumulates over the j-th (ascending) radius.
            let mut integral = vec![0.0f64; radii.len()];
            let max_nodes = node_counts.iter().copied().max().unwrap_or(0);
            for (m, slice) in integrand_slices.iter().enumerate() {
                if m >= max_nodes {
                    break;
                }
                let factor = t_factors[m];
                let mut sum = 0.0;
                let mut start = 0;
                for (j, &count) in counts.iter().enumerate() {
                    for &idx in &indices[start..count] {
                        sum += slice[idx as usize];
                    }
                    start = count;
                    // Only nodes with t <= r_j^2 enter this radius' tent.
                    if m < node_counts[j] {
                        integral[j] += factor * sum * h_n;
                    }
                }
            }
            let center_pos = grid.position(center)[..grid.dim()].to_vec();
            radii
                .iter()
                .zip(&integral)
                .map(|(&r, &i)| BallValue {
                    center: center_pos.clone(),
                    radius: r,
                    value: (i.max(0.0) / r.powf(r_exp)).powf(1.0 / root),
                })
                .collect()
        })
        .collect();

    let mut all: Vec<BallValue> = per_center.into_iter().flatten().collect();
    // Report radii in the family's (descending) order per center.
    all.sort_by(|a, b| {
        a.center
            .partial_cmp(&b.center)
            .unwrap()
            .then(b.radius.partial_cmp(&a.radius).unwrap())
    });
    let best = all.iter().map(|bv| bv.value).fold(0.0f64, f64::max);
    (best, all)
}
