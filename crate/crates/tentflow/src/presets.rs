//! Named test fields used by the CLI presets and the test suites.

use crate::error::{Error, Result};
use crate::field::{PeriodicGrid, ScalarField, VectorField};
use crate::heat::leray_project;

/// Periodized Gaussian with total mass `amplitude`, center `center`, and
/// variance `var` (in physical units). Image sums run over +-2 boxes, which
/// is far below double precision for the widths used here.
pub fn periodized_gaussian(
    grid: PeriodicGrid,
    center: &[f64],
    var: f64,
    amplitude: f64,
) -> ScalarField {
    let l = grid.side_length();
    let dim = grid.dim();
    let center: Vec<f64> = center[..dim].to_vec();
    let norm = amplitude / (std::f64::consts::TAU * var).powf(dim as f64 / 2.0);
    let images: Vec<Vec<f64>> = enumerate_box(dim, 2)
        .into_iter()
        .map(|m| m.iter().map(|&v| v as f64 * l).collect())
        .collect();
    ScalarField::from_fn(grid, move |x| {
        let mut sum = 0.0;
        for image in &images {
            let mut r_sq = 0.0;
            for axis in 0..dim {
                let d = x[axis] - center[axis] - image[axis];
                r_sq += d * d;
            }
            sum += (-r_sq / (2.0 * var)).exp();
        }
        norm * sum
    })
}

/// A localized scalar bump in the central half of the box: the standard
/// "bump" test field.
pub fn bump_scalar(grid: PeriodicGrid) -> ScalarField {
    let l = grid.side_length();
    let center = vec![0.5 * l; grid.dim()];
    periodized_gaussian(grid, &center, (l / 16.0) * (l / 16.0), 1.0)
}

/// Divergence-free localized bump velocity: the Leray projection of a bump
/// carried by the first coordinate axis (plus a weaker transverse lobe so the
/// projection is generic).
pub fn bump_velocity(grid: PeriodicGrid) -> VectorField {
    let l = grid.side_length();
    let c0 = [0.45 * l, 0.55 * l, 0.5 * l];
    let c1 = [0.55 * l, 0.45 * l, 0.5 * l];
    let var = (l / 16.0) * (l / 16.0);
    let mut comps = vec![
        periodized_gaussian(grid, &c0[..grid.dim()], var, 1.0),
        periodized_gaussian(grid, &c1[..grid.dim()], var, -0.6),
    ];
    if grid.dim() == 3 {
        let c2 = vec![0.5 * l, 0.5 * l, 0.45 * l];
        comps.push(periodized_gaussian(grid, &c2, var, 0.3));
    }
    leray_project(&VectorField::new(comps).expect("bump components"))
}

/// Single divergence-free Fourier mode `amp * e_perp cos(k . x)`.
pub fn single_mode_velocity(grid: PeriodicGrid, amp: f64) -> VectorField {
    let tau = std::f64::consts::TAU;
    let l = grid.side_length();
    let k: [f64; 3] = [1.0, 2.0, 0.0];
    // e_perp orthogonal to k (2D: rotate; 3D: use the z-free rotation too).
    let norm = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let e = [-k[1] / norm, k[0] / norm, 0.0];
    VectorField::from_fns(grid, move |axis, x| {
        let mut phase = 0.0;
        for (ka, &xa) in k.iter().zip(x) {
            phase += ka * xa;
        }
        amp * e[axis] * (tau * phase / l).cos()
    })
}

/// Taylor-Green-type mode pair. In 2D this is the classical vortex whose
/// nonlinearity is a pure gradient, so it decays by the heat flow alone.
pub fn taylor_green(grid: PeriodicGrid, amp: f64) -> VectorField {
    let tau = std::f64::consts::TAU;
    let l = grid.side_length();
    VectorField::from_fns(grid, move |axis, x| {
        let a = tau * x[0] / l;
        let b = tau * x[1] / l;
        match axis {
            0 => amp * a.cos() * b.sin(),
            1 => -amp * a.sin() * b.cos(),
            _ => 0.0,
        }
    })
}

/// Enumerate all integer vectors in `[-radius, radius]^dim`.
pub(crate) fn enumerate_box(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut flat| {
            (0..dim)
                .map(|_| {
                    let v = (flat % side) as i64 - radius;
                    flat /= side;
                    v
                })
                .collect()
        })
        .collect()
}

/// A rough field: random-phase Fourier series with |k|^(-(s + dim/2)) decay,
/// finite Slobodeckij seminorms for alpha < s.
pub fn rough_scalar(grid: PeriodicGrid, s: f64, kmax: i64, seed: u64) -> ScalarField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let l = grid.side_length();
    let dim = grid.dim();
    let mut modes: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for k in enumerate_box(dim, kmax) {
        let k_sq: f64 = k.iter().map(|&v| (v * v) as f64).sum();
        if k_sq == 0.0 || k_sq > (kmax * kmax) as f64 {
            continue;
        }
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let phase: f64 = rng.gen_range(0.0..tau);
        let decay = k_sq.sqrt().powf(-(s + dim as f64 / 2.0));
        modes.push((k.iter().map(|&v| v as f64).collect(), amp * decay, phase));
    }
    ScalarField::from_fn(grid, move |x| {
        modes
            .iter()
            .map(|(k, a, p)| {
                let dot: f64 = k.iter().zip(x).map(|(ka, xa)| ka * xa).sum();
                a * (tau * dot / l + p).cos()
            })
            .sum()
    })
}

/// Look up a named preset velocity field.
pub fn preset_velocity(name: &str, grid: PeriodicGrid, amp: f64) -> Result<VectorField> {
    match name {
        "zero" => Ok(VectorField::zeros(grid)),
        "single_mode" => Ok(single_mode_velocity(grid, amp)),
        "taylor_green" => Ok(taylor_green(grid, amp)),
        "bump" => Ok(bump_velocity(grid).scale(amp)),
        "rough" => {
            let comps = (0..grid.dim())
                .map(|a| rough_scalar(grid, 0.7, 8, 1000 + a as u64).scale(amp))
                .collect();
            Ok(leray_project(&VectorField::new(comps)?))
        }
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (expected zero|single_mode|taylor_green|bump|rough)"
        ))),
    }
}

/// Preset scalar fields for norm evaluation.
pub fn preset_scalar(name: &str, grid: PeriodicGrid) -> Result<ScalarField> {
    match name {
        "zero" => Ok(ScalarField::zeros(grid)),
        "bump" => Ok(bump_scalar(grid)),
        "sine" => {
            let l = grid.side_length();
            Ok(ScalarField::from_fn(grid, move |x| {
                (std::f64::consts::TAU * x[0] / l).sin()
            }))
        }
        "rough" => Ok(rough_scalar(grid, 0.7, 8, 1000)),
        other => Err(Error::Config(format!(
            "unknown scalar preset '{other}' (expected zero|bump|sine|rough)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::divergence;

    #[test]
    fn bump_velocity_is_divergence_free() {
        let grid = PeriodicGrid::new(2, 1.0, 64).unwrap();
        let u = bump_velocity(grid);
        assert!(divergence(&u).max_abs() <= 1e-10 * u.max_abs());
    }

    #[test]
    fn scalar_bump_is_localized_in_the_central_half() {
        // Wrap-around contamination below 1e-8 of the peak at the box edge
        // (the projected velocity is periodic-by-nature, not localized: the
        // Leray kernel has power-law tails).
        let grid = PeriodicGrid::new(2, 1.0, 64).unwrap();
        let f = bump_scalar(grid);
        let mut boundary_max: f64 = 0.0;
        for idx in 0..grid.len() {
            let c = grid.coords(idx);
            if c[0] == 0 || c[1] == 0 {
                boundary_max = boundary_max.max(f.values()[idx].abs());
            }
        }
        assert!(
            boundary_max <= 1e-8 * f.max_abs(),
            "boundary leak {boundary_max}"
        );
    }

    #[test]
    fn gaussian_mass_is_amplitude() {
        let grid = PeriodicGrid::new(2, 2.0, 64).unwrap();
        let f = periodized_gaussian(grid, &[1.0, 1.0], 0.01, 3.0);
        let mass: f64 = f.values().iter().sum::<f64>() * grid.cell_volume();
        assert!((mass - 3.0).abs() < 1e-10, "mass {mass}");
    }

    #[test]
    fn presets_resolve_by_name() {
        let grid = PeriodicGrid::new(2, 1.0, 16).unwrap();
        for name in ["zero", "single_mode", "taylor_green", "bump", "rough"] {
            assert!(preset_velocity(name, grid, 1.0).is_ok(), "{name}");
        }
        assert!(preset_velocity("nope", grid, 1.0).is_err());
    }
}
