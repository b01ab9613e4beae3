//! Discretization substrate: periodic grids and scalar/vector fields with
//! paired physical/spectral views.
//!
//! The domain is the torus `[0, L)^dim`. Fields are immutable after
//! construction; every operation returns a new field, so shared read-only
//! access from parallel workers is safe.

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;
use std::sync::OnceLock;

pub const MAX_DIM: usize = 3;

/// Uniform periodic grid on the torus `[0, L)^dim` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    side_length: f64,
    points_per_axis: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, side_length: f64, points_per_axis: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dim must be 2 or 3, got {dim}"
            )));
        }
        if !(side_length > 0.0 && side_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "side_length must be positive, got {side_length}"
            )));
        }
        let n = points_per_axis;
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "points_per_axis must be a power of two >= 4, got {n}"
            )));
        }
        Ok(Self {
            dim,
            side_length,
            points_per_axis: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing `h = L / N`, identical on every axis.
    pub fn spacing(&self) -> f64 {
        self.side_length / self.points_per_axis as f64
    }

    /// Total number of grid points `N^dim`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Decompose a flat index (axis 0 fastest) into per-axis indices.
    pub fn coords(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let n = self.points_per_axis;
        let mut out = [0usize; MAX_DIM];
        for slot in out.iter_mut().take(self.dim) {
            *slot = idx % n;
            idx /= n;
        }
        out
    }

    pub fn flat_index(&self, coords: &[usize]) -> usize {
        let n = self.points_per_axis;
        let mut idx = 0usize;
        for axis in (0..self.dim).rev() {
            idx = idx * n + (coords[axis] & (n - 1));
        }
        idx
    }

    /// Physical coordinates of a grid point.
    pub fn position(&self, idx: usize) -> [f64; MAX_DIM] {
        let c = self.coords(idx);
        let h = self.spacing();
        let mut out = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = c[axis] as f64 * h;
        }
        out
    }

    /// Signed integer frequency for FFT bin `i`: `i` for `i <= N/2`, else `i - N`.
    pub fn signed_index(&self, i: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Angular wavenumbers `2 pi k / L` per FFT bin along one axis.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let factor = std::f64::consts::TAU / self.side_length;
        (0..self.points_per_axis)
            .map(|i| factor * self.signed_index(i) as f64)
            .collect()
    }

    /// `|xi|^2` for every flat spectral index.
    pub fn xi_sq_table(&self) -> Vec<f64> {
        let wn = self.wavenumbers();
        let mut out = vec![0.0; self.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let c = self.coords(idx);
            let mut s = 0.0;
            for axis in 0..self.dim {
                s += wn[c[axis]] * wn[c[axis]];
            }
            *slot = s;
        }
        out
    }

    /// Minimal-image displacement between two coordinates on one axis, in
    /// physical units.
    pub fn min_image(&self, delta: f64) -> f64 {
        let l = self.side_length;
        let mut d = delta % l;
        if d > l / 2.0 {
            d -= l;
        } else if d < -l / 2.0 {
            d += l;
        }
        d
    }
}

/// Scalar field on a [`PeriodicGrid`], stored in physical space with a lazily
/// computed spectral view.
#[derive(Debug)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.clone(),
            spectral: self.spectral.clone(),
        }
    }
}

impl ScalarField {
    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("scalar field values".into()));
        }
        Ok(Self {
            grid,
            values,
            spectral: OnceLock::new(),
        })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            spectral: OnceLock::new(),
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
            spectral: OnceLock::new(),
        }
    }

    /// Sample a function of the physical coordinates.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let p = grid.position(idx);
                f(&p[..grid.dim()])
            })
            .collect();
        Self {
            grid,
            values,
            spectral: OnceLock::new(),
        }
    }

    /// Build a field from spectral coefficients (trigonometric amplitudes);
    /// the imaginary part left by the inverse transform is dropped.
    pub fn from_spectral(grid: PeriodicGrid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        fft::inverse(&mut coeffs, grid.points_per_axis(), grid.dim());
        let values: Vec<f64> = coeffs.iter().map(|c| c.re).collect();
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(
                "inverse transform of spectral data".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            spectral: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spectral coefficients, computed once and cached.
    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let mut buf: Vec<Complex64> = self
                .values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            fft::forward(&mut buf, self.grid.points_per_axis(), self.grid.dim());
            buf
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Physical-measure L2 norm `(sum v^2 h^dim)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectral: OnceLock::new(),
        }
    }

    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert_eq!(self.grid, other.grid, "field grids must match");
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            spectral: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul_pointwise(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    pub fn shift(&self, c: f64) -> ScalarField {
        self.map(|v| v + c)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Vector field: `dim` scalar components on a shared grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "vector field needs components".into(),
            ));
        }
        let grid = *components[0].grid();
        if components.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch(
                "vector components on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_fns(grid: PeriodicGrid, f: impl Fn(usize, &[f64]) -> f64) -> Self {
        Self {
            components: (0..grid.dim())
                .map(|axis| ScalarField::from_fn(grid, |x| f(axis, x)))
                .collect(),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    /// Pointwise squared Euclidean magnitude.
    pub fn magnitude_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid().len()];
        for comp in &self.components {
            for (slot, v) in out.iter_mut().zip(comp.values()) {
                *slot += v * v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude_sq()
            .iter()
            .fold(0.0f64, |m, v| m.max(*v))
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.magnitude_sq().iter().sum::<f64>() * self.grid().cell_volume()).sqrt()
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField {
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    fn zip(
        &self,
        other: &VectorField,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> VectorField {
        assert_eq!(self.components.len(), other.components.len());
        VectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }
}

/// An arbitrary collection of scalar components on a shared grid; used for
/// objects like full velocity Jacobians that are neither scalar nor
/// `dim`-vector fields.
#[derive(Debug, Clone)]
pub struct FieldBundle {
    parts: Vec<ScalarField>,
}

impl FieldBundle {
    pub fn new(parts: Vec<ScalarField>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter(
                "bundle needs at least one part".into(),
            ));
        }
        let grid = *parts[0].grid();
        if parts.iter().any(|p| *p.grid() != grid) {
            return Err(Error::GridMismatch(
                "bundle parts on different grids".into(),
            ));
        }
        Ok(Self { parts })
    }
}

/// Uniform access to the scalar components of scalar, vector, and bundle
/// fields, so tent norms and trajectory operators can be written once.
pub trait FieldParts: Clone {
    fn parts(&self) -> &[ScalarField];
    fn from_parts(parts: Vec<ScalarField>) -> Self;

    fn part_grid(&self) -> PeriodicGrid {
        *self.parts()[0].grid()
    }

    /// Pointwise sum of squared components.
    fn sq_magnitude(&self) -> Vec<f64> {
        let parts = self.parts();
        let mut out = vec![0.0; parts[0].grid().len()];
        for p in parts {
            for (slot, v) in out.iter_mut().zip(p.values()) {
                *slot += v * v;
            }
        }
        out
    }
}

impl FieldParts for ScalarField {
    fn parts(&self) -> &[ScalarField] {
        std::slice::from_ref(self)
    }

    fn from_parts(mut parts: Vec<ScalarField>) -> Self {
        assert_eq!(parts.len(), 1, "scalar field has exactly one part");
        parts.pop().unwrap()
    }
}

impl FieldParts for VectorField {
    fn parts(&self) -> &[ScalarField] {
        &self.components
    }

    fn from_parts(parts: Vec<ScalarField>) -> Self {
        VectorField::new(parts).expect("vector parts invariant")
    }
}

impl FieldParts for FieldBundle {
    fn parts(&self) -> &[ScalarField] {
        &self.parts
    }

    fn from_parts(parts: Vec<ScalarField>) -> Self {
        FieldBundle::new(parts).expect("bundle parts invariant")
    }
}

/// Zero every spectral mode with `|k| > fraction * N/2` on any axis.
pub fn dealias(field: &ScalarField, fraction: f64) -> ScalarField {
    let grid = *field.grid();
    let cutoff = fraction * grid.points_per_axis() as f64 / 2.0;
    let mut coeffs = field.spectral().to_vec();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let coords = grid.coords(idx);
        for &coord in coords.iter().take(grid.dim()) {
            if (grid.signed_index(coord).unsigned_abs() as f64) > cutoff {
                *c = Complex64::default();
                break;
            }
        }
    }
    ScalarField::from_spectral(grid, coeffs).expect("dealias keeps values finite")
}

pub fn dealias_vector(field: &VectorField, fraction: f64) -> VectorField {
    VectorField::from_parts(
        field
            .components()
            .iter()
            .map(|c| dealias(c, fraction))
            .collect(),
    )
}

/// Spectral resampling between grids of equal dimension.
///
/// Coefficients are transplanted by integer mode index, zero-padding or
/// truncating: exact on band-limited fields. Source Nyquist modes are split
/// across the `+-N/2` pair when enlarging and folded back when shrinking,
/// which keeps real fields real. When the side lengths differ the result
/// represents `x -> f(lambda x)` with `lambda = L_src / L_target`.
pub fn resample(field: &ScalarField, target: &PeriodicGrid) -> Result<ScalarField> {
    let src = *field.grid();
    if src.dim() != target.dim() {
        return Err(Error::GridMismatch("resample across dimensions".into()));
    }
    if src.points_per_axis() == target.points_per_axis() {
        let mut out = field.clone();
        out.grid = *target;
        return Ok(out);
    }
    let coeffs = resample_all_axes(
        field.spectral(),
        src.points_per_axis(),
        target.points_per_axis(),
        src.dim(),
    );
    ScalarField::from_spectral(*target, coeffs)
}

/// Resize every axis of a spectral buffer from `s` to `t` points.
fn resample_all_axes(src: &[Complex64], s: usize, t: usize, dim: usize) -> Vec<Complex64> {
    let mut cur = src.to_vec();
    let mut shape = vec![s; dim];
    for axis in 0..dim {
        cur = resize_one_axis(&cur, &shape, axis, t);
        shape[axis] = t;
    }
    cur
}

fn resize_one_axis(data: &[Complex64], shape: &[usize], axis: usize, t: usize) -> Vec<Complex64> {
    let s = shape[axis];
    let mut out_shape = shape.to_vec();
    out_shape[axis] = t;
    let out_len: usize = out_shape.iter().product();
    let mut out = vec![Complex64::default(); out_len];

    let stride_in: usize = shape[..axis].iter().product();
    let stride_out: usize = out_shape[..axis].iter().product();
    let outer: usize = shape[axis + 1..].iter().product();

    let signed = |i: usize, n: usize| -> i64 {
        let n = n as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    };
    let bin = |k: i64, n: usize| -> usize {
        if k >= 0 {
            k as usize
        } else {
            (k + n as i64) as usize
        }
    };

    for o in 0..outer {
        for inner in 0..stride_in {
            for i in 0..s {
                let v = data[inner + stride_in * (i + s * o)];
                let k = signed(i, s);
                let half_t = (t / 2) as i64;
                if k.abs() < half_t.min((s / 2) as i64) {
                    out[inner + stride_out * (bin(k, t) + t * o)] += v;
                } else if s < t && k == (s / 2) as i64 {
                    // Enlarging: split the source Nyquist across +-s/2.
                    out[inner + stride_out * (bin(k, t) + t * o)] += v * 0.5;
                    out[inner + stride_out * (bin(-k, t) + t * o)] += v * 0.5;
                } else if s > t && k.abs() == half_t {
                    // Shrinking: fold +-t/2 into the target Nyquist bin.
                    out[inner + stride_out * ((t / 2) + t * o)] += v;
                }
                // |k| > t/2 when shrinking: dropped.
            }
        }
    }
    out
}
