//! Lebesgue and Sobolev-type norms on the grid.
//!
//! Finite-p norms are grid Riemann sums; for band-limited fields the p = 2
//! sum coincides with the Parseval value to round-off because the squared
//! field stays below the sampling band.

use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::multiplier::fractional_laplacian;

/// Lebesgue exponent: finite `p >= 1` or the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lp {
    P(f64),
    Inf,
}

impl Lp {
    pub fn validate(&self) -> QgResult<()> {
        match self {
            Lp::P(p) if !(*p >= 1.0 && p.is_finite()) => Err(QgError::InvalidParameter(format!(
                "Lebesgue exponent p = {p} must satisfy p >= 1"
            ))),
            _ => Ok(()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Lp::P(p) => format!("{p}"),
            Lp::Inf => "inf".into(),
        }
    }
}

pub fn lp_norm(f: &SpectralField, p: Lp) -> QgResult<f64> {
    p.validate()?;
    let phys = f.to_physical();
    Ok(match p {
        Lp::Inf => phys.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
        Lp::P(p) => {
            let sum: f64 = phys.iter().map(|x| x.abs().powf(p)).sum();
            (sum * f.grid().cell_area()).powf(1.0 / p)
        }
    })
}

/// `|| Lambda^s f ||_{L^2}` via Parseval.
pub fn sobolev_seminorm(f: &SpectralField, s: f64) -> f64 {
    let lam = fractional_laplacian(*f.grid(), s);
    lam.apply(f).expect("same grid").l2_spectral()
}

/// `|| grad f ||_{L^2}`; equals the s = 1 fractional seminorm.
pub fn h1_seminorm(f: &SpectralField) -> f64 {
    sobolev_seminorm(f, 1.0)
}

/// Instantaneous dissipation `|| Lambda^{gamma/2} f ||_{L^2}^2`.
pub fn dissipation_rate(f: &SpectralField, gamma: f64) -> f64 {
    let v = sobolev_seminorm(f, gamma / 2.0);
    v * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use num_complex::Complex64;

    #[test]
    fn l2_of_cosine_is_sqrt_two_pi_squared() {
        // ||cos x_1||_{L^2([0,2pi)^2)} = sqrt(2) * pi = 4.442882938...
        let g = Grid2D::new(64).unwrap();
        let f = SpectralField::from_modes(g, &[(1, 0, Complex64::new(0.5, 0.0))]).unwrap();
        let expect = (2.0f64).sqrt() * std::f64::consts::PI;
        assert!((lp_norm(&f, Lp::P(2.0)).unwrap() - expect).abs() < 1e-12);
        assert!((f.l2_spectral() - expect).abs() < 1e-12);
        assert!((lp_norm(&f, Lp::Inf).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p4_norm_of_cosine_matches_closed_form() {
        // ||cos||_{L^4}^4 over the box = (2pi)^2 * 3/8.
        let g = Grid2D::new(64).unwrap();
        let f = SpectralField::from_modes(g, &[(1, 0, Complex64::new(0.5, 0.0))]).unwrap();
        let expect = ((2.0 * std::f64::consts::PI).powi(2) * 3.0 / 8.0).powf(0.25);
        assert!((lp_norm(&f, Lp::P(4.0)).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn invalid_exponent_rejected() {
        let g = Grid2D::new(16).unwrap();
        let f = SpectralField::zeros(g);
        assert!(lp_norm(&f, Lp::P(0.5)).is_err());
        assert!(lp_norm(&f, Lp::P(f64::INFINITY)).is_err());
        assert!(lp_norm(&f, Lp::Inf).is_ok());
    }

    #[test]
    fn gradient_seminorm_matches_mode_magnitude() {
        let g = Grid2D::new(32).unwrap();
        let f = SpectralField::from_modes(g, &[(3, 4, Complex64::new(0.5, 0.0))]).unwrap();
        // ||Lambda cos(3x+4y)||_2 = 5 ||cos||_2 = 5 sqrt(2) pi.
        let expect = 5.0 * (2.0f64).sqrt() * std::f64::consts::PI;
        assert!((h1_seminorm(&f) - expect).abs() < 1e-12);
        let d = dissipation_rate(&f, 1.0);
        assert!((d - expect * expect / 5.0).abs() < 1e-10);
    }
}
