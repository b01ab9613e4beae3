//! Reference constant-density solver: pseudo-spectral Galerkin with 2/3
//! dealiasing, low-storage Williamson RK3 in time, and integrating-factor
//! treatment of the Laplacian (exact heat decay between stages).

use crate::error::{Error, Result};
use crate::field::{dealias_vector, ScalarField, VectorField};
use crate::heat::{divergence, heat_semigroup, leray_project, partial_derivative};
use crate::timegrid::{SpaceTimeField, TimeGrid};

/// `-P(u . grad u)`, dealiased, with the zero mode removed (whole-space
/// surrogate: the mean force vanishes identically for divergence-free `u`).
pub(crate) fn nonlinear_term(u: &VectorField, dealias_fraction: f64) -> VectorField {
    let grid = *u.grid();
    let dim = grid.dim();
    let mut components = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut conv = vec![0.0f64; grid.len()];
        for k in 0..dim {
            let dk_uj = partial_derivative(u.component(j), k);
            for ((c, &adv), &d) in conv
                .iter_mut()
                .zip(u.component(k).values())
                .zip(dk_uj.values())
            {
                *c += adv * d;
            }
        }
        components.push(ScalarField::from_values(grid, conv).expect("finite convection"));
    }
    let projected = leray_project(&dealias_vector(
        &VectorField::new(components).expect("convection components"),
        dealias_fraction,
    ));
    let centered: Vec<ScalarField> = projected
        .components()
        .iter()
        .map(|c| c.shift(-c.mean()))
        .collect();
    VectorField::new(centered)
        .expect("centered components")
        .scale(-1.0)
}

pub struct ReferenceRun {
    pub trajectory: SpaceTimeField<VectorField>,
    pub steps: usize,
    pub dt: f64,
}

/// Integrate `d_t u = -P(u . grad u) + Delta u` from `u0` to `t_final`.
///
/// The advective CFL sets the step (`cfl * h / max|u|`, capped at
/// `t_final / min_steps`); the viscous term is exact through the integrating
/// factor. About `max_slices` equispaced slices are stored (always the last).
pub fn reference_solve(
    u0: &VectorField,
    t_final: f64,
    dealias_fraction: f64,
    max_slices: usize,
) -> Result<ReferenceRun> {
    let grid = *u0.grid();
    let scale = u0.max_abs();
    if divergence(u0).max_abs() > 1e-8 * scale.max(1e-30) {
        return Err(Error::InvalidParameter(
            "reference solver needs divergence-free initial data".into(),
        ));
    }
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    if max_slices < 2 {
        return Err(Error::InvalidParameter("need max_slices >= 2".into()));
    }
    let h = grid.spacing();
    let cfl = 0.5;
    // High floor on the step count: the stored slices must resolve the
    // fast early dissipation well enough for the energy diagnostic.
    let min_steps = 256usize;
    let dt_advective = if scale > 0.0 {
        cfl * h / scale
    } else {
        f64::INFINITY
    };
    let dt_target = dt_advective.min(t_final / min_steps as f64);
    let mut steps = (t_final / dt_target).ceil() as usize;
    // Round the step count up to a multiple of the storage stride so stored
    // nodes are exactly equispaced.
    let stride = steps.div_ceil(max_slices.max(1));
    steps = steps.div_ceil(stride) * stride;
    let dt = t_final / steps as f64;

    // Williamson 2N-storage RK3 coefficients and stage-end fractions.
    const A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
    const B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];
    const THETA: [f64; 3] = [1.0 / 3.0, 3.0 / 4.0, 1.0];

    let mut u = dealias_vector(u0, dealias_fraction);
    let mut nodes = Vec::new();
    let mut slices = Vec::new();
    let cfl_limit = 1.0;
    for step in 1..=steps {
        let mut register = VectorField::zeros(grid);
        let mut theta_prev = 0.0;
        for stage in 0..3 {
            if u.max_abs() * dt / h > cfl_limit {
                return Err(Error::Cfl(format!(
                    "advective CFL exceeded at step {step}: max|u| dt / h = {}",
                    u.max_abs() * dt / h
                )));
            }
            let g = nonlinear_term(&u, dealias_fraction);
            register = register.scale(A[stage]).add(&g.scale(dt));
            u = u.add(&register.scale(B[stage]));
            let factor_t = (THETA[stage] - theta_prev) * dt;
            u = heat_semigroup(&u, factor_t)?;
            register = heat_semigroup(&register, factor_t)?;
            theta_prev = THETA[stage];
        }
        if !u.is_finite() {
            return Err(Error::NonFinite(format!(
                "reference solver blew up at step {step}"
            )));
        }
        if step % stride == 0 {
            nodes.push(step as f64 * dt);
            slices.push(u.clone());
        }
    }
    let count = nodes.len();
    let time = TimeGrid::uniform(nodes[0], nodes[count - 1], count)?;
    let trajectory = SpaceTimeField::new(time, slices)?;
    Ok(ReferenceRun {
        trajectory,
        steps,
        dt,
    })
}
