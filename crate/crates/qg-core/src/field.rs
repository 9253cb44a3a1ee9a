//! Spectral representation of a real scalar field on the periodic box.
//!
//! Coefficients live on the full n x n Fourier lattice in FFT storage order.
//! Three invariants hold for every constructed field: Hermitian symmetry
//! `c(-k) = conj(c(k))`, a real mean mode, and a zeroed Nyquist row/column.

use crate::error::{QgError, QgResult};
use crate::fft::Fft2;
use crate::grid::Grid2D;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Array2<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid2D) -> Self {
        let n = grid.n();
        Self {
            grid,
            coeffs: Array2::zeros((n, n)),
        }
    }

    /// Wraps a coefficient array, validating Hermitian symmetry and scrubbing
    /// the Nyquist modes and any imaginary part of the mean.
    pub fn from_coeffs(grid: Grid2D, coeffs: Array2<Complex64>) -> QgResult<Self> {
        if coeffs.dim() != (grid.n(), grid.n()) {
            return Err(QgError::LatticeMismatch {
                left: grid.describe(),
                right: format!("coeff array {:?}", coeffs.dim()),
            });
        }
        let mut field = Self { grid, coeffs };
        field.zero_nyquist();
        let err = field.hermitian_asymmetry();
        if err > HERMITIAN_TOL {
            return Err(QgError::NotHermitian {
                err,
                tol: HERMITIAN_TOL,
            });
        }
        field.coeffs[[0, 0]].im = 0.0;
        Ok(field)
    }

    /// Builds a field from explicit modes; each `(k1, k2, c)` sets the
    /// coefficient and its conjugate partner at `-k`.
    pub fn from_modes(grid: Grid2D, modes: &[(i64, i64, Complex64)]) -> QgResult<Self> {
        let mut field = Self::zeros(grid);
        for &(k1, k2, c) in modes {
            if grid.is_nyquist(k1) || grid.is_nyquist(k2) {
                return Err(QgError::InvalidParameter(format!(
                    "mode ({k1},{k2}) sits on the Nyquist line"
                )));
            }
            let i = grid.index_of(k1);
            let j = grid.index_of(k2);
            field.coeffs[[i, j]] = c;
            if (k1, k2) != (0, 0) {
                let im = grid.index_of(-k1);
                let jm = grid.index_of(-k2);
                field.coeffs[[im, jm]] = c.conj();
            } else {
                field.coeffs[[0, 0]] = Complex64::new(c.re, 0.0);
            }
        }
        Ok(field)
    }

    /// Forward transform of real samples.
    pub fn from_physical(grid: Grid2D, phys: &Array2<f64>) -> QgResult<Self> {
        if phys.dim() != (grid.n(), grid.n()) {
            return Err(QgError::LatticeMismatch {
                left: grid.describe(),
                right: format!("sample array {:?}", phys.dim()),
            });
        }
        let fft = Fft2::new(grid.n());
        let complex = phys.mapv(|x| Complex64::new(x, 0.0));
        let coeffs = fft.forward(&complex);
        let mut field = Self { grid, coeffs };
        field.zero_nyquist();
        field.coeffs[[0, 0]].im = 0.0;
        Ok(field)
    }

    /// Synthesis to physical samples; the imaginary residue of a Hermitian
    /// field is at round-off level and is dropped.
    pub fn to_physical(&self) -> Array2<f64> {
        let fft = Fft2::new(self.grid.n());
        let phys = fft.inverse(&self.coeffs);
        phys.mapv(|c| c.re)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[[self.grid.index_of(k1), self.grid.index_of(k2)]]
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[[0, 0]].re
    }

    pub fn require_mean_zero(&self, tol: f64) -> QgResult<()> {
        let mean = self.mean();
        if mean.abs() > tol {
            return Err(QgError::MeanNotZero { mean, tol });
        }
        Ok(())
    }

    pub fn zero_nyquist(&mut self) {
        let n = self.grid.n();
        let ny = n / 2;
        for j in 0..n {
            self.coeffs[[ny, j]] = Complex64::new(0.0, 0.0);
            self.coeffs[[j, ny]] = Complex64::new(0.0, 0.0);
        }
    }

    /// Applies the 2/3-rule mask in place.
    pub fn dealias_truncate(&mut self) {
        let n = self.grid.n();
        for i in 0..n {
            let k1 = self.grid.wavenumber(i);
            for j in 0..n {
                let k2 = self.grid.wavenumber(j);
                if !self.grid.keeps(k1, k2) {
                    self.coeffs[[i, j]] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Max deviation from `c(-k) = conj(c(k))`, relative to the largest
    /// coefficient magnitude (0 for the zero field).
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.grid.n();
        let mut max_dev = 0.0f64;
        let mut max_mag = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let c = self.coeffs[[i, j]];
                max_mag = max_mag.max(c.norm());
                let im = (n - i) % n;
                let jm = (n - j) % n;
                let dev = (c - self.coeffs[[im, jm]].conj()).norm();
                max_dev = max_dev.max(dev);
            }
        }
        if max_mag == 0.0 {
            0.0
        } else {
            max_dev / max_mag
        }
    }

    /// `L * sqrt(sum |c_k|^2)`: the L2 norm by Parseval.
    pub fn l2_spectral(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        self.grid.box_length() * sum.sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.mapv(|c| c * factor),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, factor: f64) {
        debug_assert_eq!(self.grid, other.grid);
        self.coeffs.zip_mut_with(&other.coeffs, |a, b| {
            *a += b * factor;
        });
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    /// Relative L2 distance, normalized by `max(|self|, |other|)` or absolute
    /// when both vanish.
    pub fn rel_l2_distance(&self, other: &Self) -> f64 {
        let diff = self.sub(other).l2_spectral();
        let scale = self.l2_spectral().max(other.l2_spectral());
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }

    /// Seeded Gaussian band: independent complex Gaussians on the annulus
    /// `k_lo <= |k| <= k_hi`, spectral tilt `e^{-tilt |k|_1}`, Hermitian pairs
    /// set explicitly, then the whole field rescaled to `|f|_inf = linf_target`.
    pub fn random_annulus(
        grid: Grid2D,
        seed: u64,
        k_lo: f64,
        k_hi: f64,
        tilt: f64,
        linf_target: f64,
    ) -> QgResult<Self> {
        if !(k_lo >= 0.0 && k_hi >= k_lo) {
            return Err(QgError::InvalidParameter(format!(
                "annulus [{k_lo}, {k_hi}] is empty"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut field = Self::zeros(grid);
        let lim = grid.dealias_limit();
        // Fixed lexicographic order over one half-lattice keeps banks
        // reproducible across platforms.
        for k1 in -lim..=lim {
            for k2 in -lim..=lim {
                let canonical = k2 > 0 || (k2 == 0 && k1 > 0);
                if !canonical {
                    continue;
                }
                let mag = ((k1 * k1 + k2 * k2) as f64).sqrt();
                if mag < k_lo || mag > k_hi {
                    continue;
                }
                let l1 = (k1.abs() + k2.abs()) as f64;
                let amp = (-tilt * l1).exp();
                let (g1, g2) = gaussian_pair(&mut rng);
                let c = Complex64::new(g1, g2) * amp;
                let i = grid.index_of(k1);
                let j = grid.index_of(k2);
                field.coeffs[[i, j]] = c;
                field.coeffs[[grid.index_of(-k1), grid.index_of(-k2)]] = c.conj();
            }
        }
        let max = field
            .to_physical()
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()));
        if max > 0.0 {
            let s = linf_target / max;
            field.coeffs.mapv_inplace(|c| c * s);
        }
        Ok(field)
    }
}

/// Box-Muller draw; avoids pulling a distributions crate into the core.
fn gaussian_pair(rng: &mut impl Rng) -> (f64, f64) {
    let u1: f64 = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = crate::grid::TWO_PI * u2;
    (r * th.cos(), r * th.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2D {
        Grid2D::new(16).unwrap()
    }

    #[test]
    fn from_modes_builds_cosine() {
        // cos(x_1) = (e^{i x_1} + e^{-i x_1}) / 2.
        let f = SpectralField::from_modes(grid(), &[(1, 0, Complex64::new(0.5, 0.0))]).unwrap();
        let phys = f.to_physical();
        let g = grid();
        for i in 0..g.n() {
            let x = i as f64 * g.spacing();
            assert!((phys[[i, 0]] - x.cos()).abs() < 1e-13);
        }
        assert_eq!(f.hermitian_asymmetry(), 0.0);
    }

    #[test]
    fn from_coeffs_rejects_asymmetry() {
        let g = grid();
        let mut coeffs: Array2<Complex64> = Array2::zeros((g.n(), g.n()));
        coeffs[[1, 0]] = Complex64::new(1.0, 0.5);
        // No conjugate partner at (-1, 0).
        let err = SpectralField::from_coeffs(g, coeffs).unwrap_err();
        assert!(matches!(err, QgError::NotHermitian { .. }));
    }

    #[test]
    fn nyquist_is_scrubbed_on_construction() {
        let g = grid();
        let mut coeffs: Array2<Complex64> = Array2::zeros((g.n(), g.n()));
        let ny = g.n() / 2;
        coeffs[[ny, 3]] = Complex64::new(1.0, 0.0);
        coeffs[[2, ny]] = Complex64::new(0.5, 0.0);
        let f = SpectralField::from_coeffs(g, coeffs).unwrap();
        assert_eq!(f.coeffs()[[ny, 3]], Complex64::new(0.0, 0.0));
        assert_eq!(f.coeffs()[[2, ny]], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn physical_round_trip() {
        let g = grid();
        let f =
            SpectralField::random_annulus(g, 7, 1.0, 4.0, 0.0, 0.5).unwrap();
        let back = SpectralField::from_physical(g, &f.to_physical()).unwrap();
        assert!(f.rel_l2_distance(&back) < 1e-13);
    }

    #[test]
    fn random_annulus_is_reproducible_and_clean() {
        let g = grid();
        let a = SpectralField::random_annulus(g, 42, 1.0, 3.0, 0.2, 0.1).unwrap();
        let b = SpectralField::random_annulus(g, 42, 1.0, 3.0, 0.2, 0.1).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        assert_eq!(a.mean(), 0.0);
        assert!(a.hermitian_asymmetry() < 1e-15);
        let max = a.to_physical().iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!((max - 0.1).abs() < 1e-12);
        let c = SpectralField::random_annulus(g, 43, 1.0, 3.0, 0.2, 0.1).unwrap();
        assert!(a.rel_l2_distance(&c) > 1e-3);
    }

    #[test]
    fn parseval_matches_grid_sum() {
        let g = grid();
        let f = SpectralField::random_annulus(g, 3, 1.0, 4.0, 0.0, 1.0).unwrap();
        let phys = f.to_physical();
        let riemann: f64 = phys.iter().map(|x| x * x).sum::<f64>() * g.cell_area();
        assert!((riemann.sqrt() - f.l2_spectral()).abs() < 1e-10);
    }
}
