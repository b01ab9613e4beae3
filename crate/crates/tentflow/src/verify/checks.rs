//! The individual inequality checks. Each evaluates per-sample LHS/RHS pairs
//! at one resolution; the campaign layer in the parent module assembles
//! refinement tables and verdicts.
//!
//! Every check uses the same ball family and time grid on both sides of its
//! ratio, so the one-sided bias of discretizing the sup largely cancels.

use crate::error::{Error, Result};
use crate::field::{dealias, FieldParts, PeriodicGrid, ScalarField};
use crate::heat::{
    duhamel, duhamel_gradient, gradient_parts, heat_semigroup, laplacian, leray_project,
    maximal_regularity, mollify, partial_derivative,
};
use crate::norms::{
    besov_heatflow_on_grid, besov_time_window, e_alpha_norm, norm_time_grid, sobolev_norm,
    tent_bold_t_norm, tent_t_norm, u_alpha_norm, v_alpha_norm, BallFamily, BesovFlavor,
};
use crate::timegrid::{SpaceTimeField, TimeGrid};
use crate::verify::ensemble::Ensemble;
use crate::verify::RatioSample;
use serde::{Deserialize, Serialize};

/// Evaluation context at one resolution.
pub struct CheckContext {
    pub grid: PeriodicGrid,
    pub balls: BallFamily,
    pub time_nodes: usize,
}

impl CheckContext {
    pub fn new(dim: usize, l: f64, n: usize, time_nodes: usize) -> Result<Self> {
        let grid = PeriodicGrid::new(dim, l, n)?;
        let balls = BallFamily::standard(&grid);
        Ok(Self {
            grid,
            balls,
            time_nodes,
        })
    }

    fn norm_grid(&self) -> TimeGrid {
        norm_time_grid(&self.grid, &self.balls, self.time_nodes)
    }
}

fn ratio_samples(
    size: usize,
    mut eval: impl FnMut(usize) -> Result<(f64, f64)>,
) -> Result<Vec<RatioSample>> {
    (0..size)
        .map(|i| {
            let (lhs, rhs) = eval(i)?;
            Ok(RatioSample::new(i, lhs, rhs))
        })
        .collect()
}

/// Time-derivative bound: the heat flow of data with finite initial-data
/// norm has its time derivative in the solution family with weight
/// `t^{1-alpha}`. LHS uses `d_t e^{t Delta} f = Delta e^{t Delta} f`
/// computed spectrally.
pub fn check_lemma_timederiv(
    ens: &Ensemble,
    alpha: f64,
    ctx: &CheckContext,
) -> Result<Vec<RatioSample>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Hypothesis(format!(
            "time-derivative bound requires alpha in (0,1), got {alpha}"
        )));
    }
    let time = ctx.norm_grid();
    ratio_samples(ens.size, |i| {
        let f = ens.scalar(i, &ctx.grid);
        let slices: Result<Vec<ScalarField>> = time
            .nodes()
            .iter()
            .map(|&t| Ok(laplacian(&heat_semigroup(&f, t)?)))
            .collect();
        let traj = SpaceTimeField::new(time.clone(), slices?)?;
        let lhs = tent_t_norm(&traj, 1.0 - alpha, &ctx.balls)?.value;
        let rhs = u_alpha_norm(&f, alpha, &ctx.balls, ctx.time_nodes)?.value;
        Ok((lhs, rhs))
    })
}

/// Maximal-regularity boundedness on the solution family, for every
/// requested `beta < 1`. One operator application serves all betas.
pub fn check_maxreg_bound(
    ens: &Ensemble,
    betas: &[f64],
    ctx: &CheckContext,
) -> Result<Vec<Vec<RatioSample>>> {
    for &beta in betas {
        if !(beta < 1.0) {
            return Err(Error::Hypothesis(format!(
                "the maximal regularity operator is bounded on T^(inf,2)(t^beta) only for beta < 1; got beta = {beta}"
            )));
        }
    }
    let time = ctx.norm_grid();
    let mut per_beta: Vec<Vec<RatioSample>> = vec![Vec::new(); betas.len()];
    for i in 0..ens.size {
        let u = ens.heat_flow_scalar(i, &ctx.grid, &time);
        let mu = maximal_regularity(&u)?;
        for (b, &beta) in betas.iter().enumerate() {
            let lhs = tent_t_norm(&mu, beta, &ctx.balls)?.value;
            let rhs = tent_t_norm(&u, beta, &ctx.balls)?.value;
            per_beta[b].push(RatioSample::new(i, lhs, rhs));
        }
    }
    Ok(per_beta)
}

/// Leray-projector boundedness on the solution family for `beta < 2`.
pub fn check_leray_tent(
    ens: &Ensemble,
    betas: &[f64],
    ctx: &CheckContext,
) -> Result<Vec<Vec<RatioSample>>> {
    for &beta in betas {
        if !(beta < 2.0) {
            return Err(Error::Hypothesis(format!(
                "the Leray projector is bounded on T^(inf,2)(t^beta) only for beta < 2; got beta = {beta}"
            )));
        }
    }
    let time = ctx.norm_grid();
    let mut per_beta: Vec<Vec<RatioSample>> = vec![Vec::new(); betas.len()];
    for i in 0..ens.size {
        let u = ens.heat_flow_vector(i, &ctx.grid, &time, false);
        let pu = u.map_slices(leray_project);
        for (b, &beta) in betas.iter().enumerate() {
            let lhs = tent_t_norm(&pu, beta, &ctx.balls)?.value;
            let rhs = tent_t_norm(&u, beta, &ctx.balls)?.value;
            per_beta[b].push(RatioSample::new(i, lhs, rhs));
        }
    }
    Ok(per_beta)
}

/// Gradient bound (an identity under the gradient-of-heat-kernel extension)
/// and the pointwise product bound for `v . grad v`. Returns
/// (identity samples, product samples).
pub fn check_gradient_and_product(
    ens: &Ensemble,
    alpha: f64,
    ctx: &CheckContext,
) -> Result<(Vec<RatioSample>, Vec<RatioSample>)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Hypothesis(format!(
            "gradient/product bounds require alpha in (0,1), got {alpha}"
        )));
    }
    let time = ctx.norm_grid();
    let identity = ratio_samples(ens.size, |i| {
        let f = ens.scalar(i, &ctx.grid);
        let slices: Result<Vec<_>> = time
            .nodes()
            .iter()
            .map(|&t| Ok(gradient_parts(&heat_semigroup(&f, t)?)))
            .collect();
        let traj = SpaceTimeField::new(time.clone(), slices?)?;
        let lhs = tent_bold_t_norm(&traj, -alpha, &ctx.balls)?.value;
        let rhs = u_alpha_norm(&f, alpha, &ctx.balls, ctx.time_nodes)?.value;
        Ok((lhs, rhs))
    })?;

    let product = ratio_samples(ens.size, |i| {
        let v = ens.heat_flow_vector(i, &ctx.grid, &time, false);
        let dim = ctx.grid.dim();
        let conv_slices: Vec<crate::field::VectorField> = v
            .slices()
            .iter()
            .map(|u| {
                let comps = (0..dim)
                    .map(|j| {
                        let mut vals = vec![0.0f64; ctx.grid.len()];
                        for k in 0..dim {
                            let d = partial_derivative(u.component(j), k);
                            for ((slot, &adv), &g) in
                                vals.iter_mut().zip(u.component(k).values()).zip(d.values())
                            {
                                *slot += adv * g;
                            }
                        }
                        ScalarField::from_values(ctx.grid, vals).expect("finite product")
                    })
                    .collect();
                crate::field::VectorField::from_parts(comps)
            })
            .collect();
        let conv = SpaceTimeField::new(time.clone(), conv_slices)?;
        let lhs = tent_t_norm(&conv, 1.0 - alpha, &ctx.balls)?.value;
        let grad_traj = v.map_slices(gradient_parts);
        let sup_half: f64 = time
            .nodes()
            .iter()
            .zip(v.slices())
            .map(|(&t, s)| t.sqrt() * s.max_abs())
            .fold(0.0, f64::max);
        let rhs = sup_half * tent_bold_t_norm(&grad_traj, -alpha, &ctx.balls)?.value;
        Ok((lhs, rhs))
    })?;
    Ok((identity, product))
}

/// The three Duhamel estimates against the solution-family norm of the
/// forcing: uniform `t^{1/2}`-control, gradient tent control, and the
/// negative-Besov control. Returns per-sample triples sharing one RHS.
pub fn check_key_inequalities(
    ens: &Ensemble,
    alpha: f64,
    ctx: &CheckContext,
) -> Result<[Vec<RatioSample>; 3]> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Hypothesis(format!(
            "the Duhamel estimates require alpha in (0,1), got {alpha}"
        )));
    }
    let time = ctx.norm_grid();
    let (b_lo, b_hi) = besov_time_window(&ctx.grid);
    let besov_grid = TimeGrid::log_uniform(b_lo, b_hi, 24)?;
    let mut out: [Vec<RatioSample>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..ens.size {
        let f = ens.heat_flow_vector(i, &ctx.grid, &time, false);
        let rhs = tent_t_norm(&f, 1.0 - alpha, &ctx.balls)?.value;
        let integral = duhamel(&f)?;
        let lhs1: f64 = time
            .nodes()
            .iter()
            .zip(integral.slices())
            .map(|(&t, s)| t.sqrt() * s.max_abs())
            .fold(0.0, f64::max);
        let lhs2 = tent_bold_t_norm(&duhamel_gradient(&f)?, -alpha, &ctx.balls)?.value;
        let mut lhs3: f64 = 0.0;
        for slice in integral.slices().iter().step_by(2) {
            let (b, _) = besov_heatflow_on_grid(slice, -1.0, BesovFlavor::InfInf, &besov_grid)?;
            lhs3 = lhs3.max(b);
        }
        out[0].push(RatioSample::new(i, lhs1, rhs));
        out[1].push(RatioSample::new(i, lhs2, rhs));
        out[2].push(RatioSample::new(i, lhs3, rhs));
    }
    Ok(out)
}

/// Bilinear product estimate in the homogeneous Sobolev scale:
/// `|ab|_{H^1} <= C (|a|_{B^{-1}} |b|_{H^2} + |b|_{B^{-1}} |a|_{H^2})`.
pub fn check_bilinear(ens: &Ensemble, ctx: &CheckContext) -> Result<Vec<RatioSample>> {
    let besov = |f: &ScalarField| -> Result<f64> {
        let (b_lo, b_hi) = besov_time_window(&ctx.grid);
        let grid = TimeGrid::log_uniform(b_lo, b_hi, 48)?;
        Ok(besov_heatflow_on_grid(f, -1.0, BesovFlavor::InfInf, &grid)?.0)
    };
    ratio_samples(ens.size, |i| {
        let a = ens.scalar_mean_zero(2 * i, &ctx.grid);
        let b = ens.scalar_mean_zero(2 * i + 1, &ctx.grid);
        let product = dealias(&a.mul_pointwise(&b), 2.0 / 3.0);
        let centered = product.shift(-product.mean());
        let lhs = sobolev_norm(&centered, 1.0)?;
        let rhs = besov(&a)? * sobolev_norm(&b, 2.0)? + besov(&b)? * sobolev_norm(&a, 2.0)?;
        Ok((lhs, rhs))
    })
}

/// Embedding constants: Slobodeckij into the initial-data family (rough
/// ensemble) and the critical-Besov embedding (band-limited ensemble).
pub fn check_embeddings(
    rough: &Ensemble,
    band: &Ensemble,
    alpha: f64,
    ctx: &CheckContext,
) -> Result<(Vec<RatioSample>, Vec<RatioSample>)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Hypothesis(format!(
            "the embeddings require alpha in (0,1), got {alpha}"
        )));
    }
    let slobodeckij = ratio_samples(rough.size, |i| {
        let f = rough.scalar(i, &ctx.grid);
        let lhs = u_alpha_norm(&f, alpha, &ctx.balls, ctx.time_nodes)?.value;
        let rhs = v_alpha_norm(&f, alpha, &ctx.balls)?.value;
        Ok((lhs, rhs))
    })?;
    let n_half = ctx.grid.dim() as f64 / 2.0;
    let besov = ratio_samples(band.size, |i| {
        let f = band.scalar_mean_zero(i, &ctx.grid);
        let lhs = u_alpha_norm(&f, alpha, &ctx.balls, ctx.time_nodes)?.value;
        let (b_lo, b_hi) = besov_time_window(&ctx.grid);
        let grid = TimeGrid::log_uniform(b_lo, b_hi, 64)?;
        let rhs = besov_heatflow_on_grid(&f, -1.0 + n_half, BesovFlavor::TwoInf, &grid)?.0;
        Ok((lhs, rhs))
    })?;
    Ok((slobodeckij, besov))
}

/// Uniform boundedness of the mollification family in the initial-data norm:
/// `|e^{2^{-k} Delta} a| / |a|` over `k = 0..=k_max`. The worst ratio per
/// sample is recorded.
pub fn check_mollification(
    ens: &Ensemble,
    alpha: f64,
    k_max: u32,
    ctx: &CheckContext,
) -> Result<Vec<RatioSample>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Hypothesis(format!(
            "the mollification bound requires alpha in (0,1), got {alpha}"
        )));
    }
    ratio_samples(ens.size, |i| {
        let a = ens.scalar(i, &ctx.grid);
        let rhs = u_alpha_norm(&a, alpha, &ctx.balls, ctx.time_nodes)?.value;
        let mut worst = 0.0f64;
        for k in 0..=k_max {
            let lhs = u_alpha_norm(&mollify(&a, k), alpha, &ctx.balls, ctx.time_nodes)?.value;
            worst = worst.max(lhs);
        }
        Ok((worst, rhs))
    })
}

/// Composite-norm control of the linear flow: `E_alpha(e^{t Delta} f)`
/// against the initial-data norm of `f`. This is the empirical stand-in for
/// the linear-estimate constant aggregated across the lemma campaigns.
pub fn check_linear_flow(
    ens: &Ensemble,
    alpha: f64,
    ctx: &CheckContext,
) -> Result<Vec<RatioSample>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Hypothesis(format!(
            "the linear-flow bound requires alpha in (0,1), got {alpha}"
        )));
    }
    let time = ctx.norm_grid();
    ratio_samples(ens.size, |i| {
        let f = ens.vector(i, &ctx.grid, true);
        let slices: Result<Vec<_>> = time
            .nodes()
            .iter()
            .map(|&t| heat_semigroup(&f, t))
            .collect();
        let traj = SpaceTimeField::new(time.clone(), slices?)?;
        let lhs = e_alpha_norm(&traj, alpha, &ctx.balls)?.total;
        let rhs = u_alpha_norm(&f, alpha, &ctx.balls, ctx.time_nodes)?.value;
        Ok((lhs, rhs))
    })
}

/// Scaling check: `|f_lambda|` for `f_lambda(x) = f(lambda x)` computed by
/// spectral transplant onto the grid `(L/lambda, N/lambda)`, with the
/// correspondingly scaled ball family. Returns per-lambda relative
/// deviations of `lambda |f_lambda|` from `|f|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub alpha: f64,
    pub grid_n: usize,
    pub base_norm: f64,
    /// (lambda, lambda * |f_lambda|, relative deviation)
    pub entries: Vec<(f64, f64, f64)>,
    pub max_deviation: f64,
    pub pass: bool,
}

pub fn check_scaling<F: FieldParts + Sync>(
    f: &F,
    alpha: f64,
    lambdas: &[f64],
    ctx: &CheckContext,
    tolerance: f64,
) -> Result<ScalingReport> {
    let base = u_alpha_norm(f, alpha, &ctx.balls, ctx.time_nodes)?.value;
    if base <= 0.0 {
        return Err(Error::InvalidParameter(
            "scaling check needs a nonzero field".into(),
        ));
    }
    let grid = ctx.grid;
    let mut entries = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let log2 = lambda.log2();
        if (log2 - log2.round()).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "scaling check needs dyadic lambda, got {lambda}"
            )));
        }
        let n_target = (grid.points_per_axis() as f64 / lambda).round() as usize;
        let target = PeriodicGrid::new(grid.dim(), grid.side_length() / lambda, n_target)?;
        let parts: Result<Vec<ScalarField>> = f
            .parts()
            .iter()
            .map(|p| crate::field::resample(p, &target))
            .collect();
        let f_lambda = F::from_parts(parts?);
        let balls = BallFamily::standard(&target);
        let scaled = u_alpha_norm(&f_lambda, alpha, &balls, ctx.time_nodes)?.value;
        let deviation = (lambda * scaled - base).abs() / base;
        entries.push((lambda, lambda * scaled, deviation));
    }
    let max_deviation = entries.iter().map(|e| e.2).fold(0.0, f64::max);
    Ok(ScalingReport {
        alpha,
        grid_n: grid.points_per_axis(),
        base_norm: base,
        entries,
        max_deviation,
        pass: max_deviation < tolerance,
    })
}

/// One off-diagonal measurement: mass of `theta Delta e^{theta Delta}` of an
/// annulus-supported field, measured on the inner ball, against the annulus
/// mass and the polynomial decay factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OffDiagonalSample {
    pub j: u32,
    pub theta: f64,
    /// `(2^j r)^2 / theta`.
    pub x: f64,
    pub lhs: f64,
    pub annulus_mass: f64,
    pub decay_factor: f64,
    /// `lhs / (decay_factor * annulus_mass)`.
    pub ratio: f64,
}

pub fn check_offdiagonal(
    f: &ScalarField,
    j: u32,
    theta: f64,
    n_exp: f64,
    center: &[usize],
    r: f64,
) -> Result<OffDiagonalSample> {
    let grid = *f.grid();
    let outer = (2.0f64).powi(j as i32) * r;
    if outer > grid.side_length() / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "annulus radius 2^{j} r = {outer} exceeds the L/4 wrap cap"
        )));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let h = grid.spacing();
    let dim = grid.dim();
    let c = grid.coords(grid.flat_index(center));
    let dist = |idx: usize| -> f64 {
        let p = grid.coords(idx);
        let mut d_sq = 0.0;
        for axis in 0..dim {
            let d = grid.min_image((p[axis] as f64 - c[axis] as f64) * h);
            d_sq += d * d;
        }
        d_sq.sqrt()
    };
    let inner = outer / 2.0;
    // Restrict to the annulus F.
    let masked = ScalarField::from_values(
        grid,
        (0..grid.len())
            .map(|idx| {
                let d = dist(idx);
                if d > inner && d <= outer {
                    f.values()[idx]
                } else {
                    0.0
                }
            })
            .collect(),
    )?;
    let annulus_mass = masked.values().iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
    // theta * Delta * e^{theta Delta} applied spectrally.
    let smoothed = laplacian(&heat_semigroup(&masked, theta)?).scale(theta);
    let lhs = smoothed
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| dist(*idx) <= r)
        .map(|(_, v)| v * v)
        .sum::<f64>()
        * grid.cell_volume();
    let x = outer * outer / theta;
    let decay_factor = (1.0 + x).powf(-2.0 * n_exp);
    Ok(OffDiagonalSample {
        j,
        theta,
        x,
        lhs,
        annulus_mass,
        decay_factor,
        ratio: lhs / (decay_factor * annulus_mass).max(1e-300),
    })
}

/// Sweep of the off-diagonal measurement over `theta = (2^j r)^2 4^{-m}`
/// with a least-squares log-log slope fit per annulus index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OffDiagonalReport {
    pub n_exp: f64,
    pub slope_threshold: f64,
    pub samples: Vec<OffDiagonalSample>,
    /// (j, fitted slope of `ln(lhs/annulus_mass)` vs `ln x`).
    pub slopes: Vec<(u32, f64)>,
    pub pass: bool,
}

pub fn offdiagonal_sweep(
    f: &ScalarField,
    js: &[u32],
    ms: &[i32],
    n_exp: f64,
    center: &[usize],
    r: f64,
) -> Result<OffDiagonalReport> {
    let mut samples = Vec::new();
    let mut slopes = Vec::new();
    for &j in js {
        let outer = (2.0f64).powi(j as i32) * r;
        let mut points = Vec::new();
        for &m in ms {
            let theta = outer * outer * (4.0f64).powi(-m);
            let sample = check_offdiagonal(f, j, theta, n_exp, center, r)?;
            points.push((
                sample.x.ln(),
                (sample.lhs / sample.annulus_mass.max(1e-300)).ln(),
            ));
            samples.push(sample);
        }
        slopes.push((j, least_squares_slope(&points)));
    }
    let threshold = -2.0 * n_exp + 0.2;
    let pass = slopes.iter().all(|&(_, s)| s <= threshold);
    Ok(OffDiagonalReport {
        n_exp,
        slope_threshold: threshold,
        samples,
        slopes,
        pass,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    cov / var
}
