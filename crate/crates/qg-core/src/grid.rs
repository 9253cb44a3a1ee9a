//! Periodic grid and its discrete Fourier lattice.
//!
//! Wavenumbers follow FFT storage order: index `i` holds integer wavenumber
//! `i` for `i < n/2` and `i - n` otherwise, so the DC mode sits at `(0, 0)`.
//! The Nyquist wavenumber `-n/2` has no conjugate partner on the lattice and
//! is kept identically zero everywhere in this crate.

use crate::error::{QgError, QgResult};
use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    n: usize,
    box_length: f64,
}

impl Grid2D {
    /// Square grid on the standard `[0, 2*pi)^2` box.
    pub fn new(n: usize) -> QgResult<Self> {
        Self::with_box_length(n, TWO_PI)
    }

    pub fn with_box_length(n: usize, box_length: f64) -> QgResult<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(QgError::BadGridSize { n });
        }
        if !box_length.is_finite() || box_length <= 0.0 {
            return Err(QgError::BadBoxLength { len: box_length });
        }
        Ok(Self { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Integer wavenumber stored at index `i`, in `[-n/2, n/2)`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage index of integer wavenumber `k` (wraps negatives).
    pub fn index_of(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(k >= -n / 2 && k < n / 2);
        k.rem_euclid(n) as usize
    }

    /// Physical wavenumber for integer wavenumber `k`: `2*pi*k / L`.
    pub fn xi(&self, k: i64) -> f64 {
        self.wavenumber_unit() * k as f64
    }

    /// Spacing of the physical wavenumber lattice, `2*pi / L` (1 on the 2*pi box).
    pub fn wavenumber_unit(&self) -> f64 {
        TWO_PI / self.box_length
    }

    pub fn is_nyquist(&self, k: i64) -> bool {
        k == -(self.n as i64) / 2
    }

    /// Largest integer wavenumber magnitude kept by the 2/3 rule, `floor(n/3)`.
    pub fn dealias_limit(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Whether mode `(k1, k2)` survives 2/3-rule truncation (per axis).
    pub fn keeps(&self, k1: i64, k2: i64) -> bool {
        let lim = self.dealias_limit();
        k1.abs() <= lim && k2.abs() <= lim
    }

    /// Largest physical `|xi|_l1` over retained modes; bounds weight exponents.
    pub fn max_l1_retained(&self) -> f64 {
        2.0 * self.dealias_limit() as f64 * self.wavenumber_unit()
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Integer wavenumbers in storage order, shared by both axes.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn describe(&self) -> String {
        format!("n={} box={:.6}", self.n, self.box_length)
    }

    pub fn check_same(&self, other: &Grid2D) -> QgResult<()> {
        if self.n != other.n || self.box_length != other.box_length {
            return Err(QgError::LatticeMismatch {
                left: self.describe(),
                right: other.describe(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two_and_small() {
        assert!(Grid2D::new(0).is_err());
        assert!(Grid2D::new(6).is_err());
        assert!(Grid2D::new(4).is_err());
        assert!(Grid2D::new(8).is_ok());
        assert!(Grid2D::new(48).is_err());
        assert!(Grid2D::new(64).is_ok());
    }

    #[test]
    fn wavenumber_layout_wraps_at_half() {
        let g = Grid2D::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for i in 0..8 {
            let k = g.wavenumber(i);
            assert_eq!(g.index_of(k), i);
        }
        assert!(g.is_nyquist(-4));
        assert!(!g.is_nyquist(3));
    }

    #[test]
    fn dealias_limit_is_floor_n_over_3() {
        assert_eq!(Grid2D::new(64).unwrap().dealias_limit(), 21);
        assert_eq!(Grid2D::new(128).unwrap().dealias_limit(), 42);
        assert_eq!(Grid2D::new(16).unwrap().dealias_limit(), 5);
        let g = Grid2D::new(64).unwrap();
        assert!(g.keeps(21, -21));
        assert!(!g.keeps(22, 0));
        assert!(!g.keeps(0, -32));
    }

    #[test]
    fn physical_wavenumbers_scale_with_box() {
        let g = Grid2D::with_box_length(16, 4.0 * std::f64::consts::PI).unwrap();
        assert!((g.xi(2) - 1.0).abs() < 1e-15);
        let g2 = Grid2D::new(16).unwrap();
        assert!((g2.xi(3) - 3.0).abs() < 1e-15);
    }
}
