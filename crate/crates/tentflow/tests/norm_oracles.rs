//! Independent oracles for the norm functionals: a dense direct-quadrature
//! evaluation of the initial-data norm (closed-form Gaussian heat extension,
//! uniform grid in the parabolic variable s = sqrt(t), naive ball sums), a
//! brute-force double sum for the Slobodeckij norm, a per-mode analytic
//! maximization for the heat-flow Besov norm, and ensemble equivalence and
//! refinement studies.

use tentflow::field::{PeriodicGrid, ScalarField};
use tentflow::norms::{
    besov_heatflow_norm, bmo_minus1_norm, carleson_gradient_norm, tent_t_norm, u_alpha_norm,
    v_alpha_norm, BallFamily, BesovFlavor,
};
use tentflow::presets::bump_scalar;
use tentflow::timegrid::{SpaceTimeField, TimeGrid};
use tentflow::verify::{check_scaling, CheckContext, Ensemble, EnsembleKind};

/// Gradient of the periodized Gaussian heat extension of the mass-1 bump
/// centered at `c` with variance `var`: closed form, no transforms.
fn bump_gradient_sq(grid: &PeriodicGrid, c: [f64; 2], var: f64, tau_heat: f64) -> Vec<f64> {
    let l = grid.side_length();
    let v = var + 2.0 * tau_heat;
    let norm = 1.0 / (std::f64::consts::TAU * v);
    (0..grid.len())
        .map(|idx| {
            let p = grid.position(idx);
            let mut gx = 0.0;
            let mut gy = 0.0;
            for ix in -2i64..=2 {
                for iy in -2i64..=2 {
                    let dx = p[0] - c[0] - ix as f64 * l;
                    let dy = p[1] - c[1] - iy as f64 * l;
                    let g = norm * (-(dx * dx + dy * dy) / (2.0 * v)).exp();
                    gx += g * (-dx / v);
                    gy += g * (-dy / v);
                }
            }
            gx * gx + gy * gy
        })
        .collect()
}

#[test]
fn u_alpha_matches_dense_direct_quadrature_on_the_bump() {
    let n = 64;
    let grid = PeriodicGrid::new(2, 1.0, n).unwrap();
    let balls = BallFamily::standard(&grid);
    let alpha = 0.5;
    let f = bump_scalar(grid);
    let fast = u_alpha_norm(&f, alpha, &balls, 64).unwrap().value;

    // Oracle: uniform grid in s = sqrt(t) starting at the same cutoff
    // t = h^2/100, closed-form integrand, naive membership ball sums:
    //   value^2 = r^{2a+2-n} * 2 * int s^{1-2a} sum_B |grad e^{s^2 D} f|^2 h^n ds.
    let h = grid.spacing();
    let l = grid.side_length();
    let var = (l / 16.0) * (l / 16.0);
    let center = [0.5 * l, 0.5 * l];
    let s_lo = h / 10.0;
    let r_max = balls.r_max();
    let s_steps = 384usize;
    let ds = (r_max - s_lo) / s_steps as f64;
    // Ball membership lists, built naively.
    let mut members: Vec<(usize, f64, Vec<usize>)> = Vec::new();
    for &center_idx in balls.centers() {
        let cp = grid.position(center_idx);
        for &r in balls.radii() {
            let pts: Vec<usize> = (0..grid.len())
                .filter(|&idx| {
                    let p = grid.position(idx);
                    let dx = grid.min_image(p[0] - cp[0]);
                    let dy = grid.min_image(p[1] - cp[1]);
                    (dx * dx + dy * dy).sqrt() <= r
                })
                .collect();
            members.push((center_idx, r, pts));
        }
    }
    let mut integrals = vec![0.0f64; members.len()];
    for step in 0..s_steps {
        let s = s_lo + (step as f64 + 0.5) * ds;
        let field = bump_gradient_sq(&grid, center, var, s * s);
        let weight = 2.0 * ds * s.powf(1.0 - 2.0 * alpha) * h * h;
        for (slot, (_, r, pts)) in integrals.iter_mut().zip(&members) {
            if s <= *r {
                let sum: f64 = pts.iter().map(|&i| field[i]).sum();
                *slot += weight * sum;
            }
        }
    }
    let dim = 2.0;
    let oracle = members
        .iter()
        .zip(&integrals)
        .map(|((_, r, _), &i)| (r.powf(2.0 * alpha + 2.0 - dim) * i).sqrt())
        .fold(0.0f64, f64::max);
    let rel = (fast - oracle).abs() / oracle;
    assert!(
        rel < 0.02,
        "fast {fast} vs oracle {oracle} ({rel:.4} relative)"
    );
}

#[test]
fn v_alpha_matches_brute_force_double_sum_on_sine() {
    let n = 64;
    let grid = PeriodicGrid::new(2, 1.0, n).unwrap();
    let balls = BallFamily::standard(&grid);
    let alpha = 0.5;
    let f = ScalarField::from_fn(grid, |x| (std::f64::consts::TAU * x[0]).sin());
    let fast = v_alpha_norm(&f, alpha, &balls).unwrap().value;

    // Brute force: ordered double sum over every pair in every ball, with
    // the kernel evaluated by powf on the fly.
    let h = grid.spacing();
    let exponent = 2.0 + 2.0 * alpha;
    let h4 = h * h * h * h;
    let mut oracle = 0.0f64;
    for &center_idx in balls.centers() {
        let cp = grid.position(center_idx);
        for &r in balls.radii() {
            let pts: Vec<(usize, [f64; 2])> = (0..grid.len())
                .filter_map(|idx| {
                    let p = grid.position(idx);
                    let dx = grid.min_image(p[0] - cp[0]);
                    let dy = grid.min_image(p[1] - cp[1]);
                    if (dx * dx + dy * dy).sqrt() <= r {
                        Some((idx, [p[0], p[1]]))
                    } else {
                        None
                    }
                })
                .collect();
            let mut sum = 0.0f64;
            for (ia, pa) in &pts {
                for (ib, pb) in &pts {
                    if ia == ib {
                        continue;
                    }
                    let dx = grid.min_image(pa[0] - pb[0]);
                    let dy = grid.min_image(pa[1] - pb[1]);
                    let dist = (dx * dx + dy * dy).sqrt();
                    let diff = f.values()[*ia] - f.values()[*ib];
                    sum += diff * diff * dist.powf(-exponent);
                }
            }
            let value = (sum * h4 * r.powf(2.0 * alpha + 2.0 - 2.0)).sqrt();
            oracle = oracle.max(value);
        }
    }
    let rel = (fast - oracle).abs() / oracle;
    assert!(
        rel < 0.02,
        "fast {fast} vs oracle {oracle} ({rel:.4} relative)"
    );
}

#[test]
fn besov_two_inf_matches_per_mode_maximization() {
    let grid = PeriodicGrid::new(2, 1.0, 64).unwrap();
    let ens = Ensemble::new(EnsembleKind::BandLimitedRandom, 5, 1);
    let f = ens.scalar_mean_zero(0, &grid);
    let s = -1.0 + grid.dim() as f64 / 2.0;
    let fast = besov_heatflow_norm(&f, s, BesovFlavor::TwoInf, 256).unwrap();

    // Oracle: dense scan of the closed-form mode sum over the same window.
    let vol = 1.0f64;
    let xi_sq = grid.xi_sq_table();
    let coeffs: Vec<f64> = f.spectral().iter().map(|c| c.norm_sqr()).collect();
    let h = grid.spacing();
    let (t_lo, t_hi) = (h * h * 1e-2, 1.0);
    let scans = 200_000;
    let mut oracle = 0.0f64;
    for i in 0..=scans {
        let t = t_lo * (t_hi / t_lo).powf(i as f64 / scans as f64);
        let sum: f64 = coeffs
            .iter()
            .zip(&xi_sq)
            .filter(|(_, &k2)| k2 > 0.0)
            .map(|(&c, &k2)| c * (-2.0 * t * k2).exp())
            .sum();
        oracle = oracle.max(t.powf(-s / 2.0) * (sum * vol).sqrt());
    }
    let rel = (fast - oracle).abs() / oracle;
    assert!(rel < 0.01, "fast {fast} vs oracle {oracle} ({rel:.4})");
}

#[test]
fn bmo_equivalence_with_gradient_extension_is_stable() {
    // The Carleson-measure form and the square-function form at alpha = -1
    // are equivalent norms; the measured constant is stable under doubling.
    let ens = Ensemble::new(EnsembleKind::LocalizedBumps, 13, 8);
    let constant_at = |n: usize| -> f64 {
        let grid = PeriodicGrid::new(2, 1.0, n).unwrap();
        let balls = BallFamily::standard(&grid);
        let mut worst = 1.0f64;
        for i in 0..ens.size {
            let f = ens.scalar(i, &grid);
            let carleson = bmo_minus1_norm(&f, &balls, 48).unwrap().value;
            let square = carleson_gradient_norm(&f, -1.0, &balls, 48).unwrap().value;
            let ratio = carleson / square;
            worst = worst.max(ratio.max(1.0 / ratio));
        }
        worst
    };
    let coarse = constant_at(32);
    let fine = constant_at(64);
    let drift = (fine - coarse).abs() / coarse;
    assert!(
        drift < 0.20,
        "equivalence constant drift {drift}: {coarse} -> {fine}"
    );
}

#[test]
fn u_alpha_family_is_nested() {
    // alpha' <= alpha gives a larger space with controlled norm:
    // |f|_{U_alpha'} <= C |f|_{U_alpha}, C stable under refinement.
    let ens = Ensemble::new(EnsembleKind::LocalizedBumps, 17, 6);
    let constant_at = |n: usize| -> f64 {
        let grid = PeriodicGrid::new(2, 1.0, n).unwrap();
        let balls = BallFamily::standard(&grid);
        let mut worst = 0.0f64;
        for i in 0..ens.size {
            let f = ens.scalar(i, &grid);
            let weak = u_alpha_norm(&f, 0.25, &balls, 48).unwrap().value;
            let strong = u_alpha_norm(&f, 0.75, &balls, 48).unwrap().value;
            worst = worst.max(weak / strong);
        }
        worst
    };
    let coarse = constant_at(32);
    let fine = constant_at(64);
    assert!(
        (fine - coarse).abs() / coarse < 0.25,
        "nesting constant {coarse} -> {fine}"
    );
}

#[test]
fn sup_discretization_converges_under_family_refinement() {
    let grid = PeriodicGrid::new(2, 1.0, 64).unwrap();
    let coarse_balls = BallFamily::standard(&grid);
    let dense_balls = BallFamily::new(&grid, 16, 2, 4).unwrap();
    let ens = Ensemble::new(EnsembleKind::LocalizedBumps, 23, 4);
    for i in 0..ens.size {
        let f = ens.scalar(i, &grid);
        let a = u_alpha_norm(&f, 0.5, &coarse_balls, 48).unwrap().value;
        let b = u_alpha_norm(&f, 0.5, &dense_balls, 96).unwrap().value;
        assert!((b - a).abs() / a < 0.05, "sample {i}: {a} vs {b}");

        let v_a = v_alpha_norm(&f, 0.5, &coarse_balls).unwrap().value;
        let v_b = v_alpha_norm(&f, 0.5, &dense_balls).unwrap().value;
        assert!(
            (v_b - v_a).abs() / v_a < 0.05,
            "sample {i}: v {v_a} vs {v_b}"
        );
    }
}

/// Parabolic transplant of a trajectory onto the grid scaled by `lambda`,
/// with amplitude weight `lambda^p`.
fn rescale_trajectory(
    u: &SpaceTimeField<ScalarField>,
    target: &PeriodicGrid,
    lambda: f64,
    weight: f64,
) -> SpaceTimeField<ScalarField> {
    let scaled_time = TimeGrid::log_uniform(
        u.time().first() / (lambda * lambda),
        u.time().last() / (lambda * lambda),
        u.time().len(),
    )
    .unwrap();
    let slices: Vec<ScalarField> = u
        .slices()
        .iter()
        .map(|s| tentflow::field::resample(s, target).unwrap().scale(weight))
        .collect();
    SpaceTimeField::new(scaled_time, slices).unwrap()
}

#[test]
fn tent_t_scaling_is_critical() {
    // The solution family holds second-derivative objects, which carry the
    // parabolic weight lambda^3: g -> lambda^3 g(lambda y, lambda^2 t) leaves
    // the norm invariant. (The velocity weight lambda belongs to the
    // composite solution functional, tested below.)
    let grid = PeriodicGrid::new(2, 1.0, 64).unwrap();
    let balls = BallFamily::standard(&grid);
    let r_sq = balls.r_max() * balls.r_max();
    let time = TimeGrid::log_uniform(1e-6 * r_sq, r_sq, 64).unwrap();
    let ens = Ensemble::new(EnsembleKind::LocalizedBumps, 29, 1);
    let u = ens.heat_flow_scalar(0, &grid, &time);
    let beta = 0.5;
    let base = tent_t_norm(&u, beta, &balls).unwrap().value;

    let lambda = 2.0;
    let target = PeriodicGrid::new(2, 0.5, 32).unwrap();
    let scaled = rescale_trajectory(&u, &target, lambda, lambda.powi(3));
    let scaled_balls = BallFamily::standard(&target);
    let value = tent_t_norm(&scaled, beta, &scaled_balls).unwrap().value;
    let rel = (value - base).abs() / base;
    assert!(
        rel < 0.05,
        "criticality violated: {base} vs {value} ({rel:.4})"
    );
}

#[test]
fn composite_solution_norm_is_critical_for_velocity_scaling() {
    // E_alpha(lambda u(lambda y, lambda^2 t)) = E_alpha(u): every component
    // balances the velocity weight lambda.
    use tentflow::field::VectorField;
    use tentflow::norms::e_alpha_norm;
    let grid = PeriodicGrid::new(2, 1.0, 64).unwrap();
    let balls = BallFamily::standard(&grid);
    let r_sq = balls.r_max() * balls.r_max();
    let time = TimeGrid::log_uniform(1e-6 * r_sq, r_sq, 96).unwrap();
    let ens = Ensemble::new(EnsembleKind::LocalizedBumps, 31, 2);
    let slices: Vec<VectorField> = {
        let a = ens.heat_flow_scalar(0, &grid, &time);
        let b = ens.heat_flow_scalar(1, &grid, &time);
        a.slices()
            .iter()
            .zip(b.slices())
            .map(|(x, y)| VectorField::new(vec![x.clone(), y.clone()]).unwrap())
            .collect()
    };
    let u = SpaceTimeField::new(time.clone(), slices).unwrap();
    let alpha = 0.5;
    let base = e_alpha_norm(&u, alpha, &balls).unwrap().total;

    let lambda = 2.0;
    let target = PeriodicGrid::new(2, 0.5, 32).unwrap();
    let scaled_time = TimeGrid::log_uniform(
        time.first() / (lambda * lambda),
        time.last() / (lambda * lambda),
        time.len(),
    )
    .unwrap();
    let scaled_slices: Vec<VectorField> = u
        .slices()
        .iter()
        .map(|s| {
            VectorField::new(
                s.components()
                    .iter()
                    .map(|c| tentflow::field::resample(c, &target).unwrap().scale(lambda))
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let scaled = SpaceTimeField::new(scaled_time, scaled_slices).unwrap();
    let scaled_balls = BallFamily::standard(&target);
    let value = e_alpha_norm(&scaled, alpha, &scaled_balls).unwrap().total;
    let rel = (value - base).abs() / base;
    assert!(
        rel < 0.05,
        "E_alpha criticality violated: {base} vs {value} ({rel:.4})"
    );
}

#[test]
fn u_alpha_scaling_law_holds_at_n64() {
    let ctx = CheckContext::new(2, 1.0, 64, 64).unwrap();
    let f = bump_scalar(ctx.grid);
    let report = check_scaling(&f, 0.5, &[0.5, 2.0], &ctx, 0.05).unwrap();
    assert!(report.pass, "max deviation {}", report.max_deviation);
    assert!(
        check_scaling(&f, 0.5, &[1.5], &ctx, 0.05).is_err(),
        "non-dyadic lambda"
    );
}
