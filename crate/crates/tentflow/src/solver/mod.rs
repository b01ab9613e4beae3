//! Desk-scale solver for the variable-density incompressible Navier-Stokes
//! system in mild form: mollified data, Duhamel splitting `u_L + v + w`,
//! Picard iteration over whole velocity trajectories, and max-principle
//! transport for the density. A constant-density pseudo-spectral solver
//! serves as the independent reference.

mod checkpoint;
mod reference;
mod transport;

pub use checkpoint::{
    diagnostics_csv, read_checkpoint, write_checkpoint, Checkpoint, DIAGNOSTICS_HEADER,
};
pub use reference::{reference_solve, ReferenceRun};
pub use transport::{transport_along, transport_density};

use crate::error::{Error, Result};
use crate::field::{dealias_vector, FieldParts, PeriodicGrid, ScalarField, VectorField};
use crate::heat::{
    divergence, duhamel, heat_semigroup, leray_project, mollify, partial_derivative,
};
use crate::norms::{e_alpha_norm, u_alpha_norm, BallFamily, EAlphaReport};
use crate::timegrid::{SpaceTimeField, TimeGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dim: usize,
    pub l: f64,
    pub n: usize,
    /// Tent exponent of the initial-data norm, in (0, 1).
    pub alpha: f64,
    /// Smallness target for `|u0|_{U_alpha} + |rho0 - 1|_{L^inf}`.
    pub eps0: f64,
    pub t_final: f64,
    pub time_nodes: usize,
    /// First trajectory node as a fraction of `t_final`.
    #[serde(default = "default_t_min_factor")]
    pub t_min_factor: f64,
    pub picard_max: usize,
    pub picard_tol: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    #[serde(default = "default_mollify_k")]
    pub mollify_k: u32,
}

fn default_t_min_factor() -> f64 {
    1e-6
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

fn default_mollify_k() -> u32 {
    8
}

impl SolverConfig {
    /// Defaults sized for the standard desk runs.
    pub fn standard(dim: usize, n: usize) -> Self {
        Self {
            dim,
            l: 1.0,
            n,
            alpha: 0.5,
            eps0: 0.05,
            t_final: 0.1,
            time_nodes: 96,
            t_min_factor: default_t_min_factor(),
            picard_max: 30,
            picard_tol: 1e-8,
            dealias_fraction: default_dealias(),
            mollify_k: default_mollify_k(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.eps0 > 0.0) {
            return Err(Error::Config(format!(
                "eps0 must be positive, got {}",
                self.eps0
            )));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol < 1.0) {
            return Err(Error::Config(format!(
                "picard_tol must be in (0,1), got {}",
                self.picard_tol
            )));
        }
        if !(self.dealias_fraction > 0.5 && self.dealias_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dealias_fraction must be in (1/2, 1], got {}",
                self.dealias_fraction
            )));
        }
        if !(self.t_final > 0.0) || self.time_nodes < 8 {
            return Err(Error::Config("need t_final > 0 and time_nodes >= 8".into()));
        }
        // The composite-norm diagnostics integrate over tents of height up to
        // (L/4)^2; the trajectory must cover them.
        let r_max_sq = (self.l / 4.0) * (self.l / 4.0);
        if self.t_final < r_max_sq * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "t_final = {} is below (L/4)^2 = {r_max_sq}: the trajectory would not cover the largest tent",
                self.t_final
            )));
        }
        if !(self.t_min_factor > 0.0 && self.t_min_factor <= 1e-3) {
            return Err(Error::Config(format!(
                "t_min_factor must be in (0, 1e-3], got {}",
                self.t_min_factor
            )));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.dim, self.l, self.n)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::log_uniform(
            self.t_min_factor * self.t_final,
            self.t_final,
            self.time_nodes,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Diverged,
}

/// Per-iterate diagnostics history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub iterate: usize,
    pub e_alpha_total: f64,
    pub e_alpha: EAlphaReport,
    /// `sup_t |rho(t) - 1|_{L^inf}` along the trajectory.
    pub rho_dev: f64,
    /// `0.5 |u(t_final)|^2 + int_0^{t_final} |grad u|^2`.
    pub energy_lhs: f64,
    /// `0.5 |u0|^2`.
    pub energy_rhs: f64,
    pub div_max: f64,
    /// Relative space-time L2 change against the previous iterate.
    pub increment: f64,
    pub increment_e_alpha: f64,
}

/// Evolving state of the Picard iteration.
pub struct SolverState {
    /// Density at the final time.
    pub rho: ScalarField,
    /// Density along the whole trajectory (re-transported per iterate).
    pub rho_traj: SpaceTimeField<ScalarField>,
    /// `rho - 1` along the trajectory.
    pub a_traj: SpaceTimeField<ScalarField>,
    pub u_traj: SpaceTimeField<VectorField>,
    pub dt_u_traj: SpaceTimeField<VectorField>,
    pub iterate_index: usize,
    pub diagnostics: Vec<IterationDiagnostics>,
}

/// The mild-formulation splitting of one iterate.
pub struct DuhamelSplit {
    pub u_l: SpaceTimeField<VectorField>,
    pub v: SpaceTimeField<VectorField>,
    pub w: SpaceTimeField<VectorField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepReport {
    /// `|u0_prepared|_{U_alpha} / |u0_raw|_{U_alpha}` before rescaling.
    pub c_moll: f64,
    /// Factor applied to meet the smallness target (1 when already small).
    pub rescale_factor: f64,
    /// `|u0|_{U_alpha}` after preparation.
    pub u0_norm: f64,
    pub rho_dev: f64,
}

/// Mollify, project, dealias, and (if needed) rescale the initial data so
/// that `|u0|_{U_alpha} + |rho0 - 1|_{L^inf} <= eps0`.
pub fn prepare_data(
    u0_raw: &VectorField,
    rho0: &ScalarField,
    cfg: &SolverConfig,
) -> Result<(VectorField, ScalarField, PrepReport)> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if *u0_raw.grid() != grid || *rho0.grid() != grid {
        return Err(Error::GridMismatch(
            "data grids differ from config grid".into(),
        ));
    }
    if rho0.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(
            "density must be positive everywhere".into(),
        ));
    }
    let rho_dev = rho0
        .values()
        .iter()
        .fold(0.0f64, |m, &v| m.max((v - 1.0).abs()));
    if rho_dev > cfg.eps0 {
        return Err(Error::InvalidParameter(format!(
            "|rho0 - 1|_inf = {rho_dev} exceeds eps0 = {}: the density cannot be rescaled",
            cfg.eps0
        )));
    }
    let balls = BallFamily::standard(&grid);
    let raw_norm = u_alpha_norm(u0_raw, cfg.alpha, &balls, cfg.time_nodes.min(64))?.value;
    let mut u0 = dealias_vector(
        &leray_project(&mollify(u0_raw, cfg.mollify_k)),
        cfg.dealias_fraction,
    );
    let prepared_norm = u_alpha_norm(&u0, cfg.alpha, &balls, cfg.time_nodes.min(64))?.value;
    let c_moll = if raw_norm > 0.0 {
        prepared_norm / raw_norm
    } else {
        1.0
    };
    let budget = cfg.eps0 - rho_dev;
    let rescale_factor = if prepared_norm > budget && prepared_norm > 0.0 {
        budget / prepared_norm
    } else {
        1.0
    };
    if rescale_factor != 1.0 {
        u0 = u0.scale(rescale_factor);
    }
    Ok((
        u0,
        rho0.clone(),
        PrepReport {
            c_moll,
            rescale_factor,
            u0_norm: prepared_norm * rescale_factor,
            rho_dev,
        },
    ))
}

pub struct SolveOutcome {
    pub state: SolverState,
    pub e_alpha: EAlphaReport,
    pub status: SolveStatus,
    pub prep: PrepReport,
    pub split: DuhamelSplit,
}

/// The Picard operator and its fixed data.
pub struct MildSolver {
    cfg: SolverConfig,
    grid: PeriodicGrid,
    balls: BallFamily,
    u0: VectorField,
    rho0: ScalarField,
    u_l: SpaceTimeField<VectorField>,
    prep: PrepReport,
}

impl MildSolver {
    pub fn new(cfg: SolverConfig, u0_raw: &VectorField, rho0: &ScalarField) -> Result<Self> {
        let (u0, rho0, prep) = prepare_data(u0_raw, rho0, &cfg)?;
        let grid = cfg.grid()?;
        let time = cfg.time_grid()?;
        let slices: Result<Vec<VectorField>> = time
            .nodes()
            .iter()
            .map(|&t| heat_semigroup(&u0, t))
            .collect();
        let u_l = SpaceTimeField::new(time, slices?)?;
        Ok(Self {
            cfg,
            grid,
            balls: BallFamily::standard(&grid),
            u0,
            rho0: rho0.clone(),
            u_l,
            prep,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn prep_report(&self) -> &PrepReport {
        &self.prep
    }

    pub fn initial_data(&self) -> &VectorField {
        &self.u0
    }

    pub fn linear_flow(&self) -> &SpaceTimeField<VectorField> {
        &self.u_l
    }

    /// Iterate zero: the heat flow of the prepared data, with the density
    /// transported along it.
    pub fn initial_state(&self) -> Result<SolverState> {
        let rho_traj = transport_along(&self.rho0, &self.u_l)?;
        let a_traj = rho_traj.map_slices(|r| r.shift(-1.0));
        let dt_u_traj = self.u_l.time_derivative();
        let mut state = SolverState {
            rho: rho_traj.slices().last().unwrap().clone(),
            rho_traj,
            a_traj,
            u_traj: self.u_l.clone(),
            dt_u_traj,
            iterate_index: 0,
            diagnostics: Vec::new(),
        };
        let diag = self.diagnostics_for(&state, f64::INFINITY, f64::INFINITY)?;
        state.diagnostics.push(diag);
        Ok(state)
    }

    /// Forcing slices `P(rho u . grad u)` and `P(a d_t u)`, dealiased, with
    /// the mean removed (torus surrogate of the whole-space mild form, which
    /// carries no zero mode; this keeps the mean velocity exactly constant).
    fn forcings(
        &self,
        state: &SolverState,
    ) -> (SpaceTimeField<VectorField>, SpaceTimeField<VectorField>) {
        let grid = self.grid;
        let dim = grid.dim();
        let project_center = |raw: VectorField| -> VectorField {
            let projected = leray_project(&dealias_vector(&raw, self.cfg.dealias_fraction));
            VectorField::from_parts(
                projected
                    .components()
                    .iter()
                    .map(|c| c.shift(-c.mean()))
                    .collect(),
            )
        };
        let f1_slices: Vec<VectorField> = state
            .u_traj
            .slices()
            .iter()
            .zip(state.rho_traj.slices())
            .map(|(u, rho)| {
                let mut comps = Vec::with_capacity(dim);
                for j in 0..dim {
                    let mut vals = vec![0.0f64; grid.len()];
                    for k in 0..dim {
                        let dk_uj = partial_derivative(u.component(j), k);
                        for ((v, &adv), &d) in vals
                            .iter_mut()
                            .zip(u.component(k).values())
                            .zip(dk_uj.values())
                        {
                            *v += adv * d;
                        }
                    }
                    for (v, &r) in vals.iter_mut().zip(rho.values()) {
                        *v *= r;
                    }
                    comps.push(ScalarField::from_values(grid, vals).expect("finite forcing"));
                }
                project_center(VectorField::from_parts(comps))
            })
            .collect();
        let f2_slices: Vec<VectorField> = state
            .dt_u_traj
            .slices()
            .iter()
            .zip(state.a_traj.slices())
            .map(|(dt_u, a)| {
                let comps = dt_u
                    .components()
                    .iter()
                    .map(|c| c.mul_pointwise(a))
                    .collect();
                project_center(VectorField::from_parts(comps))
            })
            .collect();
        let time = state.u_traj.time().clone();
        (
            SpaceTimeField::new(time.clone(), f1_slices).expect("forcing trajectory"),
            SpaceTimeField::new(time, f2_slices).expect("forcing trajectory"),
        )
    }

    /// One Picard step: rebuild the trajectory from the mild formula with the
    /// previous iterate in the nonlinearities, refresh the time derivative,
    /// and re-transport the density from `t = 0` along the new velocity.
    pub fn picard_step(&self, state: &SolverState) -> Result<(SolverState, DuhamelSplit)> {
        let (f1, f2) = self.forcings(state);
        let v = duhamel(&f1)?.scale(-1.0);
        let w = duhamel(&f2)?.scale(-1.0);
        let u_new = self.u_l.add(&v).add(&w);
        if !u_new.is_finite() {
            return Err(Error::NonFinite(format!(
                "Picard iterate {} blew up",
                state.iterate_index + 1
            )));
        }
        let dt_u_traj = u_new.time_derivative();
        let rho_traj = transport_along(&self.rho0, &u_new)?;
        let a_traj = rho_traj.map_slices(|r| r.shift(-1.0));

        let denom = state.u_traj.l2_space_time().max(1e-300);
        let increment = u_new.sub(&state.u_traj).l2_space_time() / denom;

        let mut next = SolverState {
            rho: rho_traj.slices().last().unwrap().clone(),
            rho_traj,
            a_traj,
            u_traj: u_new,
            dt_u_traj,
            iterate_index: state.iterate_index + 1,
            diagnostics: state.diagnostics.clone(),
        };
        let prev_e = state
            .diagnostics
            .last()
            .map(|d| d.e_alpha_total)
            .unwrap_or(f64::INFINITY);
        let diag = self.diagnostics_for(&next, increment, prev_e)?;
        next.diagnostics.push(diag);
        Ok((
            next,
            DuhamelSplit {
                u_l: self.u_l.clone(),
                v,
                w,
            },
        ))
    }

    fn diagnostics_for(
        &self,
        state: &SolverState,
        increment: f64,
        prev_e_alpha: f64,
    ) -> Result<IterationDiagnostics> {
        let e_alpha = e_alpha_norm(&state.u_traj, self.cfg.alpha, &self.balls)?;
        let rho_dev = state
            .a_traj
            .slices()
            .iter()
            .map(|a| a.max_abs())
            .fold(0.0f64, f64::max);
        let energy = energy_check(&state.u_traj, Some(&self.u0));
        let div_max = state
            .u_traj
            .slices()
            .iter()
            .map(|u| divergence(u).max_abs())
            .fold(0.0f64, f64::max);
        let increment_e_alpha = if prev_e_alpha.is_finite() && prev_e_alpha > 0.0 {
            (e_alpha.total - prev_e_alpha).abs() / prev_e_alpha
        } else if e_alpha.total == 0.0 && prev_e_alpha == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Ok(IterationDiagnostics {
            iterate: state.iterate_index,
            e_alpha_total: e_alpha.total,
            e_alpha,
            rho_dev,
            energy_lhs: energy.lhs_final,
            energy_rhs: energy.rhs,
            div_max,
            increment,
            increment_e_alpha,
        })
    }

    /// Run the Picard iteration to convergence (both the relative space-time
    /// L2 change and the relative change of the composite norm must fall
    /// below `picard_tol`).
    pub fn solve(&self) -> Result<SolveOutcome> {
        let mut state = self.initial_state()?;
        let mut split = DuhamelSplit {
            u_l: self.u_l.clone(),
            v: self.u_l.scale(0.0),
            w: self.u_l.scale(0.0),
        };
        let mut status = SolveStatus::MaxIters;
        for _ in 0..self.cfg.picard_max {
            // Zero data: the heat flow is the exact fixed point.
            if state.u_traj.max_abs() == 0.0 {
                status = SolveStatus::Converged;
                break;
            }
            match self.picard_step(&state) {
                Ok((next, s)) => {
                    let diag = next.diagnostics.last().unwrap();
                    let done = diag.increment < self.cfg.picard_tol
                        && diag.increment_e_alpha < self.cfg.picard_tol;
                    state = next;
                    split = s;
                    if done {
                        status = SolveStatus::Converged;
                        break;
                    }
                }
                Err(Error::NonFinite(_)) => {
                    status = SolveStatus::Diverged;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let e_alpha = e_alpha_norm(&state.u_traj, self.cfg.alpha, &self.balls)?;
        Ok(SolveOutcome {
            state,
            e_alpha,
            status,
            prep: self.prep.clone(),
            split,
        })
    }
}

/// Convenience wrapper: prepare data and run the full iteration.
pub fn solve(cfg: &SolverConfig, u0_raw: &VectorField, rho0: &ScalarField) -> Result<SolveOutcome> {
    MildSolver::new(cfg.clone(), u0_raw, rho0)?.solve()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `max_t (LHS(t) - RHS) / RHS`, signed.
    pub max_slack: f64,
    /// `max_t |LHS(t) - RHS| / RHS` (equality defect).
    pub max_defect: f64,
    /// LHS evaluated at the final node.
    pub lhs_final: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Energy balance along a constant-density trajectory:
/// `0.5 |u(t)|^2 + int_0^t |grad u|^2 <= 0.5 |u0|^2`, with PASS when the
/// worst slack stays below the quadrature tolerance 1e-3. When `u0` is given
/// the dissipation integral includes the `[0, t_1]` piece by trapezoid from
/// the initial data; otherwise integration starts at the first node.
pub fn energy_check(traj: &SpaceTimeField<VectorField>, u0: Option<&VectorField>) -> EnergyReport {
    let grad_sq = |u: &VectorField| -> f64 {
        crate::heat::gradient_parts(u)
            .parts()
            .iter()
            .map(|p| p.l2_norm().powi(2))
            .sum()
    };
    let nodes = traj.time().nodes();
    let rhs = match u0 {
        Some(u) => 0.5 * u.l2_norm().powi(2),
        None => 0.5 * traj.slice(0).l2_norm().powi(2),
    };
    // Per-cell quadrature of the dissipation: fit g(t) by an exponential
    // between nodes (exact for single-mode decay, where g is a pure
    // exponential; falls back to trapezoid when the fit degenerates).
    let cell = |ta: f64, tb: f64, ga: f64, gb: f64| -> f64 {
        let dt = tb - ta;
        if ga <= 0.0 || gb <= 0.0 || ga == gb {
            return 0.5 * dt * (ga + gb);
        }
        let lambda = (ga / gb).ln() / dt;
        if lambda.abs() < 1e-12 {
            0.5 * dt * (ga + gb)
        } else {
            (ga - gb) / lambda
        }
    };
    let mut cumulative = 0.0;
    let mut prev_t = 0.0;
    let mut prev_g = match u0 {
        Some(u) => grad_sq(u),
        None => {
            prev_t = nodes[0];
            grad_sq(traj.slice(0))
        }
    };
    let mut max_slack = f64::NEG_INFINITY;
    let mut max_defect = 0.0f64;
    let mut lhs_final = 0.0;
    for (m, &t) in nodes.iter().enumerate() {
        let g = grad_sq(traj.slice(m));
        cumulative += cell(prev_t, t, prev_g, g);
        prev_t = t;
        prev_g = g;
        let lhs = 0.5 * traj.slice(m).l2_norm().powi(2) + cumulative;
        lhs_final = lhs;
        if rhs > 0.0 {
            let slack = (lhs - rhs) / rhs;
            max_slack = max_slack.max(slack);
            max_defect = max_defect.max(slack.abs());
        }
    }
    if rhs == 0.0 {
        max_slack = 0.0;
    }
    EnergyReport {
        max_slack,
        max_defect,
        lhs_final,
        rhs,
        pass: max_slack <= 1e-3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{bump_velocity, periodized_gaussian, single_mode_velocity};

    fn small_cfg(n: usize) -> SolverConfig {
        let mut cfg = SolverConfig::standard(2, n);
        cfg.time_nodes = 32;
        cfg.picard_max = 12;
        cfg.picard_tol = 1e-7;
        cfg
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut cfg = small_cfg(16);
        cfg.alpha = 1.2;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(16);
        cfg.dealias_fraction = 0.4;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(16);
        cfg.picard_tol = 0.0;
        assert!(cfg.validate().is_err());
        assert!(small_cfg(16).validate().is_ok());
    }

    #[test]
    fn prepare_data_rejects_bad_density() {
        let cfg = small_cfg(16);
        let grid = cfg.grid().unwrap();
        let u0 = VectorField::zeros(grid);
        let negative = ScalarField::constant(grid, -0.5);
        assert!(prepare_data(&u0, &negative, &cfg).is_err());
        let too_far = ScalarField::constant(grid, 1.0 + 2.0 * cfg.eps0);
        assert!(prepare_data(&u0, &too_far, &cfg).is_err());
    }

    #[test]
    fn prepare_data_projects_gradients_to_zero() {
        let cfg = small_cfg(32);
        let grid = cfg.grid().unwrap();
        let q = periodized_gaussian(grid, &[0.5, 0.5], 0.004, 1.0);
        let grad_q = crate::heat::gradient(&q);
        let rho0 = ScalarField::constant(grid, 1.0);
        let (u0, _, prep) = prepare_data(&grad_q, &rho0, &cfg).unwrap();
        assert!(u0.max_abs() <= 1e-10 * grad_q.max_abs());
        assert_eq!(prep.rescale_factor, 1.0);
    }

    #[test]
    fn prepare_data_mollifier_is_near_identity_at_large_k() {
        let mut cfg = small_cfg(32);
        cfg.mollify_k = 40;
        cfg.eps0 = 1e9; // no rescale
        let grid = cfg.grid().unwrap();
        // Band-limited divergence-free data: inside the dealias cutoff the
        // whole preparation reduces to the k = 40 mollifier.
        let u0_raw = dealias_vector(&bump_velocity(grid), 0.5);
        let rho0 = ScalarField::constant(grid, 1.0);
        let (u0, _, prep) = prepare_data(&u0_raw, &rho0, &cfg).unwrap();
        let scale = u0_raw.max_abs();
        for (a, b) in u0.components().iter().zip(u0_raw.components()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-6 * scale);
            }
        }
        assert!((prep.c_moll - 1.0).abs() < 1e-3, "c_moll {}", prep.c_moll);
    }

    #[test]
    fn zero_data_converges_immediately_to_zero() {
        let cfg = small_cfg(16);
        let grid = cfg.grid().unwrap();
        let rho0 = ScalarField::constant(grid, 1.02);
        let out = solve(&cfg, &VectorField::zeros(grid), &rho0).unwrap();
        assert_eq!(out.status, SolveStatus::Converged);
        assert_eq!(out.state.u_traj.max_abs(), 0.0);
        assert_eq!(out.e_alpha.total, 0.0);
        // Density untouched by zero flow.
        for slice in out.state.rho_traj.slices() {
            for &v in slice.values() {
                assert!((v - 1.02).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_density_kills_the_w_component() {
        let cfg = small_cfg(32);
        let grid = cfg.grid().unwrap();
        let u0 = single_mode_velocity(grid, 0.02);
        let rho0 = ScalarField::constant(grid, 1.0);
        let solver = MildSolver::new(cfg, &u0, &rho0).unwrap();
        let state = solver.initial_state().unwrap();
        let (next, split) = solver.picard_step(&state).unwrap();
        assert!(split.w.max_abs() <= 1e-14, "w = {}", split.w.max_abs());
        // Split reproduces the trajectory by construction.
        let recomposed = split.u_l.add(&split.v).add(&split.w);
        let diff = recomposed.sub(&next.u_traj);
        assert!(diff.max_abs() <= 1e-10 * next.u_traj.max_abs().max(1e-30));
    }

    #[test]
    fn small_data_solve_converges_with_monotone_density_and_divfree_slices() {
        let mut cfg = small_cfg(32);
        cfg.eps0 = 0.08;
        let grid = cfg.grid().unwrap();
        let u0 = bump_velocity(grid);
        let rho0 = periodized_gaussian(grid, &[0.4, 0.5], 0.01, 0.002).shift(1.0);
        let out = solve(&cfg, &u0, &rho0).unwrap();
        assert_eq!(out.status, SolveStatus::Converged);
        let scale = out.state.u_traj.max_abs();
        for diag in &out.state.diagnostics {
            assert!(
                diag.div_max <= 1e-8 * scale.max(1e-30),
                "div {}",
                diag.div_max
            );
        }
        // Transport max principle along the converged trajectory.
        let rho0_dev = out.prep.rho_dev;
        let mut prev = rho0_dev;
        for a in out.state.a_traj.slices() {
            let dev = a.max_abs();
            assert!(
                dev <= prev + 1e-12,
                "density deviation grew: {dev} > {prev}"
            );
            prev = dev;
        }
        // Mean momentum constant across the trajectory.
        let mean0: Vec<f64> = out
            .state
            .u_traj
            .slice(0)
            .components()
            .iter()
            .map(|c| c.mean())
            .collect();
        for slice in out.state.u_traj.slices() {
            for (c, &m0) in slice.components().iter().zip(&mean0) {
                assert!((c.mean() - m0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn energy_check_passes_on_pure_heat_flow() {
        let grid = PeriodicGrid::new(2, 1.0, 32).unwrap();
        let u0 = bump_velocity(grid);
        let time = TimeGrid::log_uniform(1e-7, 0.05, 128).unwrap();
        let slices: Result<Vec<VectorField>> = time
            .nodes()
            .iter()
            .map(|&t| heat_semigroup(&u0, t))
            .collect();
        let traj = SpaceTimeField::new(time, slices.unwrap()).unwrap();
        let report = energy_check(&traj, Some(&u0));
        assert!(report.pass, "slack {}", report.max_slack);
        assert!(report.max_defect < 1e-3, "defect {}", report.max_defect);

        let zero = SpaceTimeField::new(
            TimeGrid::log_uniform(1e-7, 0.05, 16).unwrap(),
            (0..16).map(|_| VectorField::zeros(grid)).collect(),
        )
        .unwrap();
        let zr = energy_check(&zero, None);
        assert!(zr.pass);
        assert_eq!(zr.max_slack, 0.0);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let cfg = small_cfg(16);
        let grid = cfg.grid().unwrap();
        let u0 = single_mode_velocity(grid, 0.01);
        let rho0 = ScalarField::constant(grid, 1.01);
        let solver = MildSolver::new(cfg.clone(), &u0, &rho0).unwrap();
        let state = solver.initial_state().unwrap();
        let dir = std::env::temp_dir().join("tentflow_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.ckpt");
        write_checkpoint(&path, &cfg, &state).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.config.n, cfg.n);
        assert_eq!(back.time.nodes(), state.u_traj.time().nodes());
        let orig = state.u_traj.slice(3).component(0).values();
        let read = back.velocity.slice(3).component(0).values();
        assert_eq!(orig, read);
        let rho_read = back.density.slice(0).values();
        assert_eq!(state.rho_traj.slice(0).values(), rho_read);
        assert!(back.diagnostics_csv.starts_with(DIAGNOSTICS_HEADER));
        std::fs::remove_dir_all(&dir).ok();
    }
}
