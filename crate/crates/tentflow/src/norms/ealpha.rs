//! The composite solution-space functional: time-derivative and Laplacian in
//! the solution tent family, gradient in the gradient family, plus the two
//! uniform controls `t^{1/2} u` and the negative Besov bound.

use crate::error::Result;
use crate::field::FieldParts;
use crate::heat::{gradient_parts, laplacian};
use crate::norms::balls::BallFamily;
use crate::norms::carleson::{tent_bold_t_norm, tent_t_norm};
use crate::norms::spectral::{besov_heatflow_on_grid, BesovFlavor};
use crate::timegrid::{SpaceTimeField, TimeGrid};
use serde::{Deserialize, Serialize};

/// The five component norms and their max. `total = max(components)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EAlphaReport {
    pub alpha: f64,
    /// `|d_t u|` in the solution family with weight `t^{1-alpha}`.
    pub dt_norm: f64,
    /// `|Delta u|` in the solution family with weight `t^{1-alpha}`.
    pub lap_norm: f64,
    /// `|grad u|` in the gradient family with weight `t^{-alpha}`.
    pub grad_norm: f64,
    /// `sup_t t^{1/2} max |u(., t)|`.
    pub sqrt_t_sup: f64,
    /// `sup_t` of the heat-flow Besov norm of `u(., t)` at `s = -1`.
    pub besov_sup: f64,
    pub total: f64,
    /// Self-reported relative error of the time-derivative stencil
    /// (full grid vs every other node).
    pub dt_self_error: f64,
    /// Set when `dt_self_error` exceeds 5%.
    pub under_resolved_dt: bool,
}

/// Number of heat-flow nodes used for the per-slice Besov sup.
const BESOV_NODES: usize = 32;

pub fn e_alpha_norm<F: FieldParts + Send + Sync>(
    u: &SpaceTimeField<F>,
    alpha: f64,
    balls: &BallFamily,
) -> Result<EAlphaReport> {
    let dt_u = u.time_derivative();
    let dt_self_error = u.time_derivative_self_error();
    let dt_norm = tent_t_norm(&dt_u, 1.0 - alpha, balls)?.value;
    let lap_norm = tent_t_norm(&u.map_slices(laplacian), 1.0 - alpha, balls)?.value;
    let grad_norm = tent_bold_t_norm(&u.map_slices(gradient_parts), -alpha, balls)?.value;

    let mut sqrt_t_sup: f64 = 0.0;
    let mut besov_sup: f64 = 0.0;
    let grid = u.grid();
    let (b_lo, b_hi) = crate::norms::spectral::besov_time_window(&grid);
    let besov_grid = TimeGrid::log_uniform(b_lo, b_hi, BESOV_NODES)?;
    for (&t, slice) in u.time().nodes().iter().zip(u.slices()) {
        let max_abs = slice
            .sq_magnitude()
            .iter()
            .fold(0.0f64, |a, &b| a.max(b))
            .sqrt();
        sqrt_t_sup = sqrt_t_sup.max(t.sqrt() * max_abs);
        let (b, _) = besov_heatflow_on_grid(slice, -1.0, BesovFlavor::InfInf, &besov_grid)?;
        besov_sup = besov_sup.max(b);
    }
    let total = dt_norm
        .max(lap_norm)
        .max(grad_norm)
        .max(sqrt_t_sup)
        .max(besov_sup);
    Ok(EAlphaReport {
        alpha,
        dt_norm,
        lap_norm,
        grad_norm,
        sqrt_t_sup,
        besov_sup,
        total,
        dt_self_error,
        under_resolved_dt: !(dt_self_error < 0.05),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PeriodicGrid, ScalarField, VectorField};
    use crate::norms::carleson::norm_time_grid;

    #[test]
    fn zero_trajectory_has_zero_components() {
        let grid = PeriodicGrid::new(2, 1.0, 16).unwrap();
        let balls = BallFamily::standard(&grid);
        let time = norm_time_grid(&grid, &balls, 24);
        let slices: Vec<VectorField> = time
            .nodes()
            .iter()
            .map(|_| VectorField::zeros(grid))
            .collect();
        let u = SpaceTimeField::new(time, slices).unwrap();
        let report = e_alpha_norm(&u, 0.5, &balls).unwrap();
        assert_eq!(report.total, 0.0);
        assert_eq!(report.dt_norm, 0.0);
        assert_eq!(report.lap_norm, 0.0);
        assert_eq!(report.grad_norm, 0.0);
        assert_eq!(report.sqrt_t_sup, 0.0);
        assert_eq!(report.besov_sup, 0.0);
        assert!(!report.under_resolved_dt);
    }

    #[test]
    fn heat_mode_has_matching_dt_and_laplacian_norms() {
        // u(y, t) = e^{-t |k|^2} cos(k.y) satisfies d_t u = Delta u exactly,
        // so the two solution-family norms differ only by the FD error.
        let grid = PeriodicGrid::new(2, 1.0, 32).unwrap();
        let balls = BallFamily::standard(&grid);
        let time = norm_time_grid(&grid, &balls, 128);
        let tau = std::f64::consts::TAU;
        let k_sq = tau * tau * 2.0;
        let base = ScalarField::from_fn(grid, move |x| (tau * (x[0] + x[1])).cos());
        let slices: Vec<VectorField> = time
            .nodes()
            .iter()
            .map(|&t| {
                VectorField::new(vec![
                    base.scale((-t * k_sq).exp()),
                    ScalarField::zeros(grid),
                ])
                .unwrap()
            })
            .collect();
        let u = SpaceTimeField::new(time, slices).unwrap();
        let report = e_alpha_norm(&u, 0.5, &balls).unwrap();
        assert!(
            (report.dt_norm - report.lap_norm).abs() / report.lap_norm < 0.02,
            "dt {} vs lap {}",
            report.dt_norm,
            report.lap_norm
        );
        assert!(report.total >= report.besov_sup);
        assert!(
            !report.under_resolved_dt,
            "self error {}",
            report.dt_self_error
        );
    }
}
