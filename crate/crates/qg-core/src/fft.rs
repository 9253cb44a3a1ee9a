//! Cached 2D FFT plans and the crate's normalization convention.
//!
//! The forward transform carries the full `1/n^2` factor, so spectral
//! coefficients are Fourier-series coefficients: `f(x) = sum_k c_k e^{i k.x}`.
//! The inverse transform is the plain synthesis sum with no scaling.

use ndarray::Array2;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

static PLANS: Lazy<Mutex<HashMap<usize, PlanPair>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plans_for(n: usize) -> PlanPair {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft(n, FftDirection::Forward),
                planner.plan_fft(n, FftDirection::Inverse),
            )
        })
        .clone()
}

/// Planned transforms for one grid size.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = plans_for(n);
        Self { n, fwd, inv }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All rows, then all columns, with the given 1-D plan.
    fn transform2(&self, buf: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(buf.dim(), (n, n));
        plan.process(buf.as_slice_mut().expect("standard layout"));
        // `buf.t().to_owned()` would keep the transposed (Fortran) memory
        // order; the scratch must be C-contiguous for the row pass.
        let mut t = Array2::zeros((n, n));
        t.assign(&buf.t());
        plan.process(t.as_slice_mut().expect("standard layout"));
        buf.assign(&t.t());
    }

    /// Physical samples -> Fourier coefficients (carries 1/n^2).
    pub fn forward(&self, phys: &Array2<Complex64>) -> Array2<Complex64> {
        let mut buf = phys.clone();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut Array2<Complex64>) {
        let plan = self.fwd.clone();
        self.transform2(buf, &plan);
        let scale = 1.0 / (self.n * self.n) as f64;
        buf.mapv_inplace(|c| c * scale);
    }

    /// Fourier coefficients -> physical samples (synthesis sum, no scaling).
    pub fn inverse(&self, coeffs: &Array2<Complex64>) -> Array2<Complex64> {
        let mut buf = coeffs.clone();
        self.inverse_in_place(&mut buf);
        buf
    }

    pub fn inverse_in_place(&self, buf: &mut Array2<Complex64>) {
        let plan = self.inv.clone();
        self.transform2(buf, &plan);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    #[test]
    fn round_trip_is_identity() {
        let n = 16;
        let fft = Fft2::new(n);
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let phys = Array2::from_shape_fn((n, n), |_| Complex64::new(next(), 0.0));
        let coeffs = fft.forward(&phys);
        let back = fft.inverse(&coeffs);
        let err = phys
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-13, "round-trip error {err}");
    }

    #[test]
    fn single_mode_lands_at_its_index() {
        // f(x) = e^{i 3 x_1} on the 2*pi box: coefficient 1 at (k1, k2) = (3, 0).
        let n = 16;
        let g = Grid2D::new(n).unwrap();
        let fft = Fft2::new(n);
        let phys = Array2::from_shape_fn((n, n), |(i, _j)| {
            let x = i as f64 * g.spacing();
            Complex64::new(0.0, 3.0 * x).exp()
        });
        let coeffs = fft.forward(&phys);
        for i in 0..n {
            for j in 0..n {
                let expect = if (i, j) == (g.index_of(3), 0) { 1.0 } else { 0.0 };
                assert!(
                    (coeffs[[i, j]] - Complex64::new(expect, 0.0)).norm() < 1e-13,
                    "coefficient at ({i},{j})"
                );
            }
        }
    }

    // Convention fixed here: phys[[i, j]] samples x = (i*h, j*h), and
    // coeffs[[a, b]] multiplies e^{i (k_a x_1 + k_b x_2)}.
    #[test]
    fn axis_convention_matches_storage() {
        let n = 16;
        let g = Grid2D::new(n).unwrap();
        let fft = Fft2::new(n);
        let phys = Array2::from_shape_fn((n, n), |(_i, j)| {
            let y = j as f64 * g.spacing();
            Complex64::new(0.0, -2.0 * y).exp()
        });
        let coeffs = fft.forward(&phys);
        assert!((coeffs[[0, g.index_of(-2)]] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
    }
}
