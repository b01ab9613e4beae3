//! Semi-Lagrangian transport for the density: characteristics traced
//! backward with second-order midpoint stepping, departure values read by
//! multilinear interpolation. Interpolation is a convex combination of grid
//! values, so `min rho <= output <= max rho` holds pointwise.

use crate::error::{Error, Result};
use crate::field::{PeriodicGrid, ScalarField, VectorField};
use crate::timegrid::SpaceTimeField;
use rayon::prelude::*;

/// Multilinear periodic interpolation at an arbitrary physical position.
fn interp_periodic(grid: &PeriodicGrid, values: &[f64], pos: &[f64]) -> f64 {
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let dim = grid.dim();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for axis in 0..dim {
        let s = pos[axis] / h;
        let f = s.floor();
        base[axis] = (f.rem_euclid(n as f64)) as usize % n;
        frac[axis] = s - f;
    }
    let corners = 1usize << dim;
    let mut acc = 0.0;
    for corner in 0..corners {
        let mut weight = 1.0;
        let mut coords = [0usize; 3];
        for axis in 0..dim {
            if corner >> axis & 1 == 1 {
                coords[axis] = (base[axis] + 1) % n;
                weight *= frac[axis];
            } else {
                coords[axis] = base[axis];
                weight *= 1.0 - frac[axis];
            }
        }
        acc += weight * values[grid.flat_index(&coords[..dim])];
    }
    acc
}

/// Velocity of the trajectory at an arbitrary time: linear interpolation
/// between the bracketing slices, clamped at the ends.
fn velocity_at(traj: &SpaceTimeField<VectorField>, t: f64) -> Vec<Vec<f64>> {
    let nodes = traj.time().nodes();
    let dim = traj.grid().dim();
    let m = nodes.partition_point(|&s| s < t);
    if m == 0 {
        return (0..dim)
            .map(|a| traj.slice(0).component(a).values().to_vec())
            .collect();
    }
    if m >= nodes.len() {
        let last = nodes.len() - 1;
        return (0..dim)
            .map(|a| traj.slice(last).component(a).values().to_vec())
            .collect();
    }
    let (t0, t1) = (nodes[m - 1], nodes[m]);
    let theta = (t - t0) / (t1 - t0);
    (0..dim)
        .map(|a| {
            traj.slice(m - 1)
                .component(a)
                .values()
                .iter()
                .zip(traj.slice(m).component(a).values())
                .map(|(&u0, &u1)| (1.0 - theta) * u0 + theta * u1)
                .collect()
        })
        .collect()
}

/// One semi-Lagrangian step from `t_a` to `t_b`.
fn step(
    grid: &PeriodicGrid,
    rho: &ScalarField,
    traj: &SpaceTimeField<VectorField>,
    t_a: f64,
    t_b: f64,
) -> Result<ScalarField> {
    let dt = t_b - t_a;
    let dim = grid.dim();
    let u_end = velocity_at(traj, t_b);
    let u_mid = velocity_at(traj, t_b - 0.5 * dt);
    let cap = grid.side_length() / 4.0;

    let values: Result<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.position(idx);
            // Midpoint back-trace: half step with the arrival velocity, full
            // step with the mid-time velocity at the half-way point.
            let mut x_half = [0.0f64; 3];
            for axis in 0..dim {
                x_half[axis] = x[axis] - 0.5 * dt * u_end[axis][idx];
            }
            let mut excursion_sq = 0.0;
            let mut x_dep = [0.0f64; 3];
            for axis in 0..dim {
                let v = interp_periodic(grid, &u_mid[axis], &x_half[..dim]);
                let d = dt * v;
                excursion_sq += d * d;
                x_dep[axis] = x[axis] - d;
            }
            if excursion_sq.sqrt() > cap {
                return Err(Error::Cfl(format!(
                    "back-trace excursion {} exceeds L/4 = {cap} in one step",
                    excursion_sq.sqrt()
                )));
            }
            Ok(interp_periodic(grid, rho.values(), &x_dep[..dim]))
        })
        .collect();
    ScalarField::from_values(*grid, values?)
}

/// Transport `rho` from `t_from` to `t_to` along the trajectory, stepping
/// through the trajectory nodes in between.
pub fn transport_density(
    rho: &ScalarField,
    u_traj: &SpaceTimeField<VectorField>,
    t_from: f64,
    t_to: f64,
) -> Result<ScalarField> {
    if !(t_from < t_to) {
        return Err(Error::InvalidParameter(format!(
            "transport needs t_from < t_to, got [{t_from}, {t_to}]"
        )));
    }
    if t_to > u_traj.time().last() * (1.0 + 1e-12) {
        return Err(Error::TimeCoverage(format!(
            "transport target {t_to} beyond trajectory end {}",
            u_traj.time().last()
        )));
    }
    let grid = u_traj.grid();
    if grid != *rho.grid() {
        return Err(Error::GridMismatch(
            "density and trajectory grids differ".into(),
        ));
    }
    let mut times: Vec<f64> = vec![t_from];
    for &t in u_traj.time().nodes() {
        if t > t_from && t < t_to {
            times.push(t);
        }
    }
    times.push(t_to);
    let mut current = rho.clone();
    for pair in times.windows(2) {
        current = step(&grid, &current, u_traj, pair[0], pair[1])?;
    }
    Ok(current)
}

/// Density at every trajectory node, transported from `rho0` at `t = 0`.
pub fn transport_along(
    rho0: &ScalarField,
    u_traj: &SpaceTimeField<VectorField>,
) -> Result<SpaceTimeField<ScalarField>> {
    let grid = u_traj.grid();
    if grid != *rho0.grid() {
        return Err(Error::GridMismatch(
            "density and trajectory grids differ".into(),
        ));
    }
    let nodes = u_traj.time().nodes().to_vec();
    let mut slices = Vec::with_capacity(nodes.len());
    let mut current = step(&grid, rho0, u_traj, 0.0, nodes[0])?;
    slices.push(current.clone());
    for pair in nodes.windows(2) {
        current = step(&grid, &current, u_traj, pair[0], pair[1])?;
        slices.push(current.clone());
    }
    SpaceTimeField::new(u_traj.time().clone(), slices)
}
