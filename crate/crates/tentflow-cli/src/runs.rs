//! Command implementations and artifact emission (JSON reports, CSV series).

use crate::config::{RunConfig, SweepSection};
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};
use tentflow::norms::{
    besov_heatflow_norm, bmo_minus1_norm, e_alpha_norm, sobolev_norm, space_time_norm,
    u_alpha_norm, v_alpha_norm, BallFamily, BesovFlavor, NormReport, TentFamily, TentWeight,
};
use tentflow::presets::{bump_scalar, periodized_gaussian, preset_scalar, preset_velocity};
use tentflow::solver::{
    diagnostics_csv, read_checkpoint, solve, write_checkpoint, SolveStatus, SolverConfig,
};
use tentflow::verify::{
    check_scaling, offdiagonal_sweep, run_campaign, CampaignConfig, CheckContext, InequalityReport,
    Verdict, CAMPAIGN_IDS,
};
use tentflow::{Error, PeriodicGrid, Result, ScalarField, VectorField};

pub struct ExitStatus(pub i32);

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Two-column CSV series, the plot-ready artifact format.
pub fn write_series(path: &Path, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let mut text = format!("{},{}\n", header.0, header.1);
    for (x, y) in rows {
        text.push_str(&format!("{x},{y}\n"));
    }
    write_text(path, &text)
}

// ---------------------------------------------------------------- norm ----

pub struct NormArgs {
    pub family: String,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub p: f64,
    pub preset: Option<String>,
    pub input: Option<PathBuf>,
    pub slice: String,
    pub n: usize,
    pub l: f64,
    pub out: PathBuf,
}

fn load_norm_field(args: &NormArgs) -> Result<(ScalarField, Option<VectorField>)> {
    if let Some(path) = &args.input {
        let ckpt = read_checkpoint(path)?;
        let count = ckpt.velocity.time().len();
        let index = match args.slice.as_str() {
            "first" => 0,
            "last" => count - 1,
            other => other
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad --slice '{other}'")))?
                .min(count - 1),
        };
        let u = ckpt.velocity.slice(index).clone();
        Ok((u.component(0).clone(), Some(u)))
    } else {
        let name = args.preset.as_deref().unwrap_or("bump");
        let grid = PeriodicGrid::new(2, args.l, args.n)?;
        match preset_velocity(name, grid, 1.0) {
            Ok(u) if name != "bump" => Ok((u.component(0).clone(), Some(u))),
            _ => Ok((preset_scalar(name, grid)?, None)),
        }
    }
}

pub fn run_norm(args: &NormArgs) -> Result<ExitStatus> {
    ensure_dir(&args.out)?;
    let (scalar, vector) = load_norm_field(args)?;
    let grid = *scalar.grid();
    let balls = BallFamily::standard(&grid);
    let nodes = 64;
    let report: NormReport = match args.family.as_str() {
        "u_alpha" => match &vector {
            Some(u) => u_alpha_norm(u, args.alpha, &balls, nodes)?,
            None => u_alpha_norm(&scalar, args.alpha, &balls, nodes)?,
        },
        "bmo_minus1" => match &vector {
            Some(u) => bmo_minus1_norm(u, &balls, nodes)?,
            None => bmo_minus1_norm(&scalar, &balls, nodes)?,
        },
        "v_alpha" => match &vector {
            Some(u) => v_alpha_norm(u, args.alpha, &balls)?,
            None => v_alpha_norm(&scalar, args.alpha, &balls)?,
        },
        "besov_inf_inf" | "besov_two_inf" | "sobolev" => {
            let value = match args.family.as_str() {
                "besov_inf_inf" => {
                    besov_heatflow_norm(&scalar, -1.0, BesovFlavor::InfInf, 128)?
                }
                "besov_two_inf" => besov_heatflow_norm(
                    &scalar,
                    -1.0 + grid.dim() as f64 / 2.0,
                    BesovFlavor::TwoInf,
                    128,
                )?,
                _ => sobolev_norm(&scalar, args.s)?,
            };
            NormReport {
                family: args.family.clone(),
                param: if args.family == "sobolev" { args.s } else { -1.0 },
                value,
                argmax_center: vec![],
                argmax_radius: 0.0,
                grid_n: grid.points_per_axis(),
                time_nodes: 128,
                p: None,
                tail_estimate: None,
                diagonal_removed_estimate: None,
            }
        }
        "e_alpha" => {
            let path = args.input.as_ref().ok_or_else(|| {
                Error::Config("--family e_alpha needs --input <checkpoint>".into())
            })?;
            let ckpt = read_checkpoint(path)?;
            let report = e_alpha_norm(&ckpt.velocity, args.alpha, &balls)?;
            let text = serde_json::to_string_pretty(&report)?;
            write_text(&args.out.join("norm_e_alpha.json"), &text)?;
            println!("e_alpha total = {}", report.total);
            return Ok(ExitStatus(0));
        }
        "tent_t" | "tent_boldt" | "classic_t" => {
            let path = args.input.as_ref().ok_or_else(|| {
                Error::Config(format!("--family {} needs --input <checkpoint>", args.family))
            })?;
            let ckpt = read_checkpoint(path)?;
            let traj_grid = ckpt.velocity.grid();
            let traj_balls = BallFamily::standard(&traj_grid);
            let weight = match args.family.as_str() {
                "tent_t" => TentWeight { family: TentFamily::Solution, param: args.beta, p: None },
                "tent_boldt" => TentWeight { family: TentFamily::Gradient, param: args.beta, p: None },
                _ => TentWeight { family: TentFamily::Classic, param: args.p, p: Some(args.p) },
            };
            space_time_norm(&ckpt.velocity, &weight, &traj_balls)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown norm family '{other}' (u_alpha|bmo_minus1|v_alpha|besov_inf_inf|besov_two_inf|sobolev|e_alpha|tent_t|tent_boldt|classic_t)"
            )))
        }
    };
    let path = args.out.join(format!("norm_{}.json", args.family));
    write_text(&path, &report.to_json())?;
    println!("{} = {}", args.family, report.value);
    Ok(ExitStatus(0))
}

// -------------------------------------------------------------- verify ----

pub struct VerifyArgs {
    pub id: String,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub samples: usize,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

fn samples_csv(report: &InequalityReport) -> String {
    let mut text = String::from("index,lhs,rhs,ratio\n");
    for s in &report.samples {
        let ratio = s
            .ratio
            .map(|r| r.to_string())
            .unwrap_or_else(|| "skipped".into());
        text.push_str(&format!("{},{},{},{}\n", s.index, s.lhs, s.rhs, ratio));
    }
    text
}

/// Per-report artifacts: JSON report, per-sample ratio CSV, and refinement
/// series for plotting.
pub fn emit_inequality_report(out: &Path, report: &InequalityReport) -> Result<()> {
    let id = &report.inequality_id;
    write_text(
        &out.join(format!("report_{id}.json")),
        &serde_json::to_string_pretty(report)?,
    )?;
    write_text(&out.join(format!("samples_{id}.csv")), &samples_csv(report))?;
    let rows: Vec<(f64, f64)> = report
        .refinement
        .iter()
        .map(|&(n, c)| (n as f64, c))
        .collect();
    write_series(
        &out.join(format!("plot_{id}_c_emp_vs_n.csv")),
        ("grid_n", "c_emp"),
        &rows,
    )?;
    Ok(())
}

/// C_emp-vs-beta series for the operator families that sweep beta.
fn emit_beta_series(out: &Path, prefix: &str, reports: &[InequalityReport]) -> Result<()> {
    let rows: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.inequality_id.starts_with(prefix))
        .filter_map(|r| r.params.get("beta").map(|&b| (b, r.c_emp)))
        .collect();
    if !rows.is_empty() {
        write_series(
            &out.join(format!("plot_{prefix}_c_emp_vs_beta.csv")),
            ("beta", "c_emp"),
            &rows,
        )?;
    }
    Ok(())
}

pub fn run_verify(args: &VerifyArgs) -> Result<ExitStatus> {
    ensure_dir(&args.out)?;
    let campaign = match &args.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            cfg.verify
                .ok_or_else(|| Error::Config("config has no verify section".into()))?
                .campaign
        }
        None => {
            let mut c = CampaignConfig::standard(args.seed);
            c.base_n = args.n;
            c.alpha = args.alpha;
            c.samples = args.samples;
            c
        }
    };
    let mut all_ok = true;
    let ids: Vec<&str> = match args.id.as_str() {
        "all" => {
            let mut v = CAMPAIGN_IDS.to_vec();
            v.push("scaling");
            v.push("offdiag");
            v
        }
        single => vec![single],
    };
    for id in ids {
        match id {
            "scaling" => {
                let ctx = CheckContext::new(
                    campaign.dim,
                    campaign.l,
                    campaign.base_n * 2,
                    campaign.time_nodes,
                )?;
                let f = bump_scalar(ctx.grid);
                let report = check_scaling(&f, campaign.alpha, &[0.5, 2.0], &ctx, 0.05)?;
                write_text(
                    &args.out.join("report_scaling.json"),
                    &serde_json::to_string_pretty(&report)?,
                )?;
                let rows: Vec<(f64, f64)> =
                    report.entries.iter().map(|&(l, _, d)| (l, d)).collect();
                write_series(
                    &args.out.join("plot_scaling_deviation_vs_lambda.csv"),
                    ("lambda", "relative_deviation"),
                    &rows,
                )?;
                println!(
                    "scaling: max deviation {:.4} -> {}",
                    report.max_deviation,
                    if report.pass { "PASS" } else { "FAIL" }
                );
                all_ok &= report.pass;
            }
            "offdiag" => {
                // Geometry check, not an ensemble campaign: needs every probe
                // scale sqrt(theta) resolved by the grid (theta >= h^2) while
                // 2^4 r stays under the L/4 wrap cap, hence the fixed fine
                // grid with r = 8h = L/64.
                if campaign.dim != 2 {
                    return Err(Error::Config(
                        "the off-diagonal sweep is sized for dim = 2".into(),
                    ));
                }
                let n = 512;
                let grid = PeriodicGrid::new(campaign.dim, campaign.l, n)?;
                let f = tentflow::verify::Ensemble::new(
                    tentflow::verify::EnsembleKind::BandLimitedRandom,
                    campaign.seed,
                    1,
                )
                .scalar(0, &grid);
                let center = vec![n / 2; campaign.dim];
                let r = campaign.l / 64.0;
                let report = offdiagonal_sweep(&f, &[2, 3, 4], &[3, 4, 5], 2.0, &center, r)?;
                write_text(
                    &args.out.join("report_offdiag.json"),
                    &serde_json::to_string_pretty(&report)?,
                )?;
                let rows: Vec<(f64, f64)> = report
                    .samples
                    .iter()
                    .map(|s| (s.x.ln(), (s.lhs / s.annulus_mass.max(1e-300)).ln()))
                    .collect();
                write_series(
                    &args.out.join("plot_offdiag_loglog.csv"),
                    ("ln_x", "ln_lhs_over_mass"),
                    &rows,
                )?;
                let worst = report
                    .slopes
                    .iter()
                    .map(|s| s.1)
                    .fold(f64::NEG_INFINITY, f64::max);
                println!(
                    "offdiag: worst slope {:.2} (threshold {:.2}) -> {}",
                    worst,
                    report.slope_threshold,
                    if report.pass { "PASS" } else { "FAIL" }
                );
                all_ok &= report.pass;
            }
            other => {
                let reports = run_campaign(other, &campaign)?;
                for report in &reports {
                    emit_inequality_report(&args.out, report)?;
                    let stable = report.verdict == Verdict::BoundedStable;
                    println!(
                        "{}: C_emp = {:.4}, drift {:.1}% -> {}",
                        report.inequality_id,
                        report.c_emp,
                        report.drift * 100.0,
                        if stable { "BOUNDED_STABLE" } else { "UNSTABLE" }
                    );
                    all_ok &= stable;
                }
                emit_beta_series(&args.out, "maxreg", &reports)?;
                emit_beta_series(&args.out, "leray", &reports)?;
            }
        }
    }
    Ok(ExitStatus(if all_ok { 0 } else { 2 }))
}

// --------------------------------------------------------------- solve ----

pub struct SolveArgs {
    pub preset: String,
    pub n: usize,
    pub alpha: f64,
    pub eps0: f64,
    pub rho_dev: f64,
    pub t_final: f64,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

pub fn preset_density(grid: PeriodicGrid, dev: f64) -> ScalarField {
    if dev == 0.0 {
        return ScalarField::constant(grid, 1.0);
    }
    let l = grid.side_length();
    let center = vec![0.6 * l; grid.dim()];
    // Gaussian lump scaled to peak amplitude `dev`.
    let var = (l / 8.0) * (l / 8.0);
    let lump = periodized_gaussian(grid, &center, var, 1.0);
    let peak = lump.max_abs();
    lump.scale(dev / peak).shift(1.0)
}

pub fn run_solve(args: &SolveArgs) -> Result<ExitStatus> {
    ensure_dir(&args.out)?;
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?
            .solver
            .ok_or_else(|| Error::Config("config has no solver section".into()))?,
        None => {
            let mut c = SolverConfig::standard(2, args.n);
            c.alpha = args.alpha;
            c.eps0 = args.eps0;
            c.t_final = args.t_final;
            c
        }
    };
    cfg.validate()?;
    let grid = cfg.grid()?;
    let u0 = preset_velocity(&args.preset, grid, 1.0)?;
    let rho0 = preset_density(grid, args.rho_dev);
    let outcome = solve(&cfg, &u0, &rho0)?;
    let status = match outcome.status {
        SolveStatus::Converged => "CONVERGED",
        SolveStatus::MaxIters => "MAX_ITERS",
        SolveStatus::Diverged => "DIVERGED",
    };
    let ckpt_path = args.out.join(format!("solve_{}.ckpt", args.preset));
    write_checkpoint(&ckpt_path, &cfg, &outcome.state)?;
    write_text(
        &args.out.join(format!("diagnostics_{}.csv", args.preset)),
        &diagnostics_csv(&cfg, &outcome.state.diagnostics),
    )?;
    // Plot series: density deviation along the trajectory, composite norm
    // and increments per iterate.
    let rho_rows: Vec<(f64, f64)> = outcome
        .state
        .u_traj
        .time()
        .nodes()
        .iter()
        .zip(outcome.state.a_traj.slices())
        .map(|(&t, a)| (t, a.max_abs()))
        .collect();
    write_series(
        &args
            .out
            .join(format!("plot_{}_rho_dev_vs_t.csv", args.preset)),
        ("t", "rho_dev"),
        &rho_rows,
    )?;
    let e_rows: Vec<(f64, f64)> = outcome
        .state
        .diagnostics
        .iter()
        .map(|d| (d.iterate as f64, d.e_alpha_total))
        .collect();
    write_series(
        &args
            .out
            .join(format!("plot_{}_e_alpha_vs_iter.csv", args.preset)),
        ("iterate", "e_alpha_total"),
        &e_rows,
    )?;
    println!(
        "solve {}: {} after {} iterates; E_alpha total = {:.6e}; |u0|_U = {:.6e}",
        args.preset,
        status,
        outcome.state.iterate_index,
        outcome.e_alpha.total,
        outcome.prep.u0_norm
    );
    Ok(ExitStatus(if outcome.status == SolveStatus::Diverged {
        2
    } else {
        0
    }))
}

// --------------------------------------------------------------- sweep ----

pub struct SweepArgs {
    pub config: PathBuf,
    pub out: PathBuf,
}

pub fn run_sweep(args: &SweepArgs) -> Result<ExitStatus> {
    ensure_dir(&args.out)?;
    let cfg = RunConfig::load(&args.config)?;
    let sweep: SweepSection = cfg
        .sweep
        .ok_or_else(|| Error::Config("config has no sweep section".into()))?;
    let mut points = Vec::new();
    for &alpha in &sweep.alphas {
        for &eps0 in &sweep.eps0s {
            for &n in &sweep.ns {
                points.push((alpha, eps0, n));
            }
        }
    }
    // Independent runs dispatched to the worker pool.
    type SweepRow = (f64, f64, usize, SolveStatus, usize, f64, f64);
    let results: Vec<Result<SweepRow>> = points
        .par_iter()
        .map(|&(alpha, eps0, n)| {
            let mut run_cfg = sweep.base.clone();
            run_cfg.alpha = alpha;
            run_cfg.eps0 = eps0;
            run_cfg.n = n;
            run_cfg.validate()?;
            let grid = run_cfg.grid()?;
            let u0 = preset_velocity(&sweep.preset, grid, 1.0)?;
            let rho0 = preset_density(grid, 0.5 * eps0);
            let outcome = solve(&run_cfg, &u0, &rho0)?;
            Ok((
                alpha,
                eps0,
                n,
                outcome.status,
                outcome.state.iterate_index,
                outcome.e_alpha.total,
                outcome.prep.u0_norm,
            ))
        })
        .collect();
    let mut csv = String::from("alpha,eps0,n,status,iterates,e_alpha_total,u0_norm\n");
    let mut any_diverged = false;
    for r in results {
        let (alpha, eps0, n, status, iters, total, u0n) = r?;
        let status_txt = match status {
            SolveStatus::Converged => "CONVERGED",
            SolveStatus::MaxIters => "MAX_ITERS",
            SolveStatus::Diverged => "DIVERGED",
        };
        any_diverged |= status == SolveStatus::Diverged;
        csv.push_str(&format!(
            "{alpha},{eps0},{n},{status_txt},{iters},{total},{u0n}\n"
        ));
    }
    write_text(&args.out.join("sweep_summary.csv"), &csv)?;
    println!("sweep complete: {} runs", points.len());
    Ok(ExitStatus(if any_diverged { 2 } else { 0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_writes_header_only_csv() {
        let dir = std::env::temp_dir().join(format!("tentflow_series_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.csv");
        write_series(&path, ("x", "y"), &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x,y\n");
        write_series(&path, ("beta", "c_emp"), &[(0.5, 1.25)]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "beta,c_emp\n0.5,1.25\n"
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn preset_density_has_requested_deviation() {
        let grid = PeriodicGrid::new(2, 1.0, 32).unwrap();
        let rho = preset_density(grid, 0.05);
        let dev = rho
            .values()
            .iter()
            .fold(0.0f64, |m, &v| m.max((v - 1.0).abs()));
        assert!((dev - 0.05).abs() < 1e-12);
        assert!(rho.values().iter().all(|&v| v > 0.0));
        let flat = preset_density(grid, 0.0);
        assert!(flat.values().iter().all(|&v| v == 1.0));
    }
}
