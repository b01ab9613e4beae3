//! Thin n-dimensional FFT layer over rustfft for flat row-major buffers.
//!
//! Plans are cached globally; `Fft` handles are `Send + Sync`, so the cached
//! plans can be applied concurrently with per-call scratch.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanKey = (usize, bool);
type PlanCache = Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let dir = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(len, dir)
        })
        .clone()
}

/// In-place FFT along every axis of a flat row-major `[n; dim]` buffer.
/// Axis 0 is the fastest-varying index.
fn transform(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    assert_eq!(data.len(), n.pow(dim as u32));
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::default(); n];
    let total = data.len();
    for axis in 0..dim {
        let stride = n.pow(axis as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        // Gather strided lines into a contiguous scratch line and scatter back.
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, value) in line.iter().enumerate() {
                    data[start + i * stride] = *value;
                }
            }
        }
    }
}

/// Forward DFT with the 1/N^dim normalization on the forward side, so that
/// spectral coefficients are the trigonometric-series amplitudes.
pub fn forward(data: &mut [Complex64], n: usize, dim: usize) {
    transform(data, n, dim, false);
    let scale = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Inverse DFT matching [`forward`] (no additional scaling).
pub fn inverse(data: &mut [Complex64], n: usize, dim: usize) {
    transform(data, n, dim, true);
}
