//! Fourier-multiplier operators: heat semigroup, Laplacian, Riesz transforms,
//! Leray projector, Duhamel integrals, and the maximal regularity operator.
//!
//! All operators act diagonally in frequency. The zero mode follows one
//! convention throughout: Riesz transforms and other `|xi|^(-1)`-type symbols
//! map it to zero, the Leray projector is the identity on it, so the mean of
//! a velocity field is never destroyed. Odd symbols (`i xi_j`) zero the
//! Nyquist mode on their axis to keep real fields real.

use crate::error::{Error, Result};
use crate::field::{FieldBundle, FieldParts, PeriodicGrid, ScalarField, VectorField};
use crate::timegrid::SpaceTimeField;
use num_complex::Complex64;
use rayon::prelude::*;

/// A scalar Fourier multiplier with a diagnostic label. The symbol receives
/// the signed integer mode indices and the angular wavevector.
type Symbol = Box<dyn Fn(&[i64], &[f64]) -> Complex64 + Send + Sync>;

pub struct MultiplierOp {
    pub label: &'static str,
    symbol: Symbol,
}

impl MultiplierOp {
    pub fn new(
        label: &'static str,
        symbol: impl Fn(&[i64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label,
            symbol: Box::new(symbol),
        }
    }

    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        let grid = *f.grid();
        let mut coeffs = f.spectral().to_vec();
        apply_symbol(&grid, &mut coeffs, &self.symbol);
        ScalarField::from_spectral(grid, coeffs).expect("multiplier output stays finite")
    }
}

fn apply_symbol(
    grid: &PeriodicGrid,
    coeffs: &mut [Complex64],
    symbol: &(dyn Fn(&[i64], &[f64]) -> Complex64 + Send + Sync),
) {
    let wn = grid.wavenumbers();
    let dim = grid.dim();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let coords = grid.coords(idx);
        let mut k = [0i64; 3];
        let mut xi = [0.0f64; 3];
        for axis in 0..dim {
            k[axis] = grid.signed_index(coords[axis]);
            xi[axis] = wn[coords[axis]];
        }
        *c *= symbol(&k[..dim], &xi[..dim]);
    }
}

/// `e^{t Delta}` applied componentwise; `t = 0` is the identity and the mean
/// is preserved exactly.
pub fn heat_semigroup<F: FieldParts>(f: &F, t: f64) -> Result<F> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heat semigroup needs t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let grid = f.part_grid();
    let xi_sq = grid.xi_sq_table();
    let parts = f
        .parts()
        .iter()
        .map(|p| {
            let mut coeffs = p.spectral().to_vec();
            for (c, &s) in coeffs.iter_mut().zip(&xi_sq) {
                *c *= (-t * s).exp();
            }
            ScalarField::from_spectral(grid, coeffs).expect("heat output finite")
        })
        .collect();
    Ok(F::from_parts(parts))
}

/// Mollification `a_k = e^{2^{-k} Delta} a`.
pub fn mollify<F: FieldParts>(a: &F, k: u32) -> F {
    heat_semigroup(a, (2.0f64).powi(-(k as i32))).expect("nonnegative mollification time")
}

/// Pointwise heat kernel `(4 pi t)^{-dim/2} exp(-|x|^2 / (4t))`.
pub fn heat_kernel_eval(x: &[f64], t: f64, dim: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heat kernel needs t > 0, got {t}"
        )));
    }
    let r_sq: f64 = x.iter().take(dim).map(|v| v * v).sum();
    Ok((4.0 * std::f64::consts::PI * t).powf(-(dim as f64) / 2.0) * (-r_sq / (4.0 * t)).exp())
}

fn is_nyquist(k: i64, n: usize) -> bool {
    k == (n as i64) / 2
}

/// Spectral partial derivative `d/dx_axis` (odd symbol, Nyquist zeroed).
pub fn partial_derivative(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let mut coeffs = f.spectral().to_vec();
    let wn = grid.wavenumbers();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let coords = grid.coords(idx);
        let k = grid.signed_index(coords[axis]);
        if is_nyquist(k, n) {
            *c = Complex64::default();
        } else {
            *c *= Complex64::new(0.0, wn[coords[axis]]);
        }
    }
    ScalarField::from_spectral(grid, coeffs).expect("derivative finite")
}

/// Full gradient of a scalar field.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    VectorField::new(
        (0..grid.dim())
            .map(|axis| partial_derivative(f, axis))
            .collect(),
    )
    .expect("gradient components share the grid")
}

/// All partial derivatives of all components, flattened into a bundle
/// (the full Jacobian for a vector field).
pub fn gradient_parts<F: FieldParts>(f: &F) -> FieldBundle {
    let grid = f.part_grid();
    let mut parts = Vec::with_capacity(f.parts().len() * grid.dim());
    for p in f.parts() {
        for axis in 0..grid.dim() {
            parts.push(partial_derivative(p, axis));
        }
    }
    FieldBundle::new(parts).expect("jacobian parts share the grid")
}

/// Spectral Laplacian, componentwise.
pub fn laplacian<F: FieldParts>(f: &F) -> F {
    let grid = f.part_grid();
    let xi_sq = grid.xi_sq_table();
    let parts = f
        .parts()
        .iter()
        .map(|p| {
            let mut coeffs = p.spectral().to_vec();
            for (c, &s) in coeffs.iter_mut().zip(&xi_sq) {
                *c *= -s;
            }
            ScalarField::from_spectral(grid, coeffs).expect("laplacian finite")
        })
        .collect();
    F::from_parts(parts)
}

/// Spectral divergence of a vector field.
pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = *u.grid();
    let mut acc = ScalarField::zeros(grid);
    for (axis, comp) in u.components().iter().enumerate() {
        acc = acc.add(&partial_derivative(comp, axis));
    }
    acc
}

/// Riesz transform `R_j = i xi_j / |xi|`; the zero mode maps to zero.
pub fn riesz_transform(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let wn = grid.wavenumbers();
    let mut coeffs = f.spectral().to_vec();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let coords = grid.coords(idx);
        let mut norm_sq = 0.0;
        for a in 0..grid.dim() {
            norm_sq += wn[coords[a]] * wn[coords[a]];
        }
        let k = grid.signed_index(coords[axis]);
        if norm_sq == 0.0 || is_nyquist(k, n) {
            *c = Complex64::default();
        } else {
            *c *= Complex64::new(0.0, wn[coords[axis]] / norm_sq.sqrt());
        }
    }
    ScalarField::from_spectral(grid, coeffs).expect("riesz finite")
}

/// Leray projector `I - xi xi^T / |xi|^2` per mode (identity on the zero
/// mode). The output is discretely divergence-free.
pub fn leray_project(u: &VectorField) -> VectorField {
    let grid = *u.grid();
    let dim = grid.dim();
    let wn = grid.wavenumbers();
    let mut spectra: Vec<Vec<Complex64>> = u
        .components()
        .iter()
        .map(|c| c.spectral().to_vec())
        .collect();
    for idx in 0..grid.len() {
        let coords = grid.coords(idx);
        let mut xi = [0.0f64; 3];
        let mut norm_sq = 0.0;
        for a in 0..dim {
            xi[a] = wn[coords[a]];
            norm_sq += xi[a] * xi[a];
        }
        if norm_sq == 0.0 {
            continue;
        }
        let mut dot = Complex64::default();
        for a in 0..dim {
            dot += spectra[a][idx] * xi[a];
        }
        let scale = dot / norm_sq;
        for (a, spectrum) in spectra.iter_mut().enumerate() {
            spectrum[idx] -= scale * xi[a];
        }
    }
    VectorField::new(
        spectra
            .into_iter()
            .map(|s| ScalarField::from_spectral(grid, s).expect("projection finite"))
            .collect(),
    )
    .expect("projection components share the grid")
}

/// The mean-zero convolution family `f * Psi_t` with `Psi` the gradient of
/// the heat kernel: component `j` is `t d_j e^{t^2 Delta} f`, i.e. the
/// multiplier `t (i xi_j) exp(-t^2 |xi|^2)`.
pub fn psi_convolve(f: &ScalarField, t: f64) -> Result<VectorField> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "psi_convolve needs t > 0, got {t}"
        )));
    }
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let wn = grid.wavenumbers();
    let xi_sq = grid.xi_sq_table();
    let base = f.spectral();
    let components = (0..grid.dim())
        .map(|axis| {
            let mut coeffs = base.to_vec();
            for (idx, c) in coeffs.iter_mut().enumerate() {
                let coords = grid.coords(idx);
                let k = grid.signed_index(coords[axis]);
                if is_nyquist(k, n) {
                    *c = Complex64::default();
                } else {
                    *c *= Complex64::new(0.0, t * wn[coords[axis]]) * (-t * t * xi_sq[idx]).exp();
                }
            }
            ScalarField::from_spectral(grid, coeffs).expect("psi output finite")
        })
        .collect();
    VectorField::new(components)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellKernel {
    /// `int e^{-(t-s)|xi|^2} ds` over a cell.
    Heat,
    /// `int -|xi|^2 e^{-(t-s)|xi|^2} ds` over a cell.
    MaxReg,
}

/// Shared engine for the trajectory integrals: at every output node `t_m`,
/// integrate the multiplier exactly over each quadrature cell of `[0, t_m]`,
/// with the slice value held constant per cell. This handles the apparent
/// kernel singularity at `s -> t` exactly (the multiplier is integrable).
fn trajectory_integral_spectral<F: FieldParts + Sync>(
    u: &SpaceTimeField<F>,
    kernel: CellKernel,
) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let time = u.time();
    if time.first() > 1e-3 * time.last() {
        return Err(Error::TimeCoverage(format!(
            "trajectory must start near 0: t_1 = {} > 1e-3 * t_M = {}",
            time.first(),
            1e-3 * time.last()
        )));
    }
    let grid = u.grid();
    let xi_sq = grid.xi_sq_table();
    let npts = grid.len();
    let parts_count = u.slices()[0].parts().len();

    // Forward transforms of every slice component.
    let spectra: Vec<Vec<Vec<Complex64>>> = u
        .slices()
        .iter()
        .map(|s| s.parts().iter().map(|p| p.spectral().to_vec()).collect())
        .collect();

    let out: Vec<Vec<Vec<Complex64>>> = (0..time.len())
        .into_par_iter()
        .map(|m| {
            let t_out = time.nodes()[m];
            let bounds = time.cell_boundaries_upto(m);
            let mut acc = vec![vec![Complex64::default(); npts]; parts_count];
            // exp(-(t_m - b_i)|xi|^2) carried across cells: one exp per (cell, mode).
            let mut e_prev: Vec<f64> = xi_sq.iter().map(|&s| (-t_out * s).exp()).collect();
            for (i, cell) in bounds.windows(2).enumerate() {
                let width = cell[1] - cell[0];
                let e_cur: Vec<f64> = xi_sq
                    .iter()
                    .map(|&s| (-(t_out - cell[1]) * s).exp())
                    .collect();
                for p in 0..parts_count {
                    let src = &spectra[i][p];
                    let dst = &mut acc[p];
                    for idx in 0..npts {
                        let factor = match kernel {
                            CellKernel::Heat => {
                                if xi_sq[idx] == 0.0 {
                                    width
                                } else {
                                    (e_cur[idx] - e_prev[idx]) / xi_sq[idx]
                                }
                            }
                            CellKernel::MaxReg => {
                                if xi_sq[idx] == 0.0 {
                                    0.0
                                } else {
                                    -(e_cur[idx] - e_prev[idx])
                                }
                            }
                        };
                        dst[idx] += src[idx] * factor;
                    }
                }
                e_prev = e_cur;
            }
            acc
        })
        .collect();
    Ok(out)
}

/// The maximal regularity operator
/// `M_+ u(t) = int_0^t Delta e^{(t-s) Delta} u(s) ds`, evaluated at every
/// node of the input trajectory.
pub fn maximal_regularity<F: FieldParts + Send + Sync>(
    u: &SpaceTimeField<F>,
) -> Result<SpaceTimeField<F>> {
    let spectral = trajectory_integral_spectral(u, CellKernel::MaxReg)?;
    assemble_trajectory(u, spectral)
}

/// Duhamel integral `int_0^t e^{(t-s) Delta} f(s) ds` at every node.
pub fn duhamel<F: FieldParts + Send + Sync>(f: &SpaceTimeField<F>) -> Result<SpaceTimeField<F>> {
    let spectral = trajectory_integral_spectral(f, CellKernel::Heat)?;
    assemble_trajectory(f, spectral)
}

/// Duhamel integral with a gradient: `int_0^t grad e^{(t-s) Delta} f(s) ds`.
/// Output parts are ordered (part 0 d/dx_0, part 0 d/dx_1, ..., part 1 d/dx_0, ...).
pub fn duhamel_gradient<F: FieldParts + Sync>(
    f: &SpaceTimeField<F>,
) -> Result<SpaceTimeField<FieldBundle>> {
    let spectral = trajectory_integral_spectral(f, CellKernel::Heat)?;
    let grid = f.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let wn = grid.wavenumbers();
    let slices: Result<Vec<FieldBundle>> = spectral
        .into_iter()
        .map(|parts| {
            let mut out_parts = Vec::with_capacity(parts.len() * dim);
            for part in &parts {
                for axis in 0..dim {
                    let mut coeffs = part.clone();
                    for (idx, c) in coeffs.iter_mut().enumerate() {
                        let coords = grid.coords(idx);
                        let k = grid.signed_index(coords[axis]);
                        if is_nyquist(k, n) {
                            *c = Complex64::default();
                        } else {
                            *c *= Complex64::new(0.0, wn[coords[axis]]);
                        }
                    }
                    out_parts.push(ScalarField::from_spectral(grid, coeffs)?);
                }
            }
            FieldBundle::new(out_parts)
        })
        .collect();
    SpaceTimeField::new(f.time().clone(), slices?)
}

fn assemble_trajectory<F: FieldParts + Send>(
    reference: &SpaceTimeField<F>,
    spectral: Vec<Vec<Vec<Complex64>>>,
) -> Result<SpaceTimeField<F>> {
    let grid = reference.grid();
    let slices: Result<Vec<F>> = spectral
        .into_par_iter()
        .map(|parts| {
            let fields: Result<Vec<ScalarField>> = parts
                .into_iter()
                .map(|coeffs| ScalarField::from_spectral(grid, coeffs))
                .collect();
            Ok(F::from_parts(fields?))
        })
        .collect();
    SpaceTimeField::new(reference.time().clone(), slices?)
}
