//! Fourier multipliers: fractional Laplacian powers, dissipation semigroup,
//! Riesz transforms, gradients, and exponential l1 weights.
//!
//! Symbols are precomputed on the grid's physical wavenumber lattice
//! `xi = 2*pi*k / L` and applied coefficient-wise.

use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::grid::Grid2D;
use crate::params::PhysicalParams;
use ndarray::Array2;
use num_complex::Complex64;

/// Guard on exponential weight arguments; `e^200` is near the top of the
/// f64 range once multiplied by O(1) coefficients.
pub const EXP_CAP: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    fn pick(self, xi1: f64, xi2: f64) -> f64 {
        match self {
            Axis::X1 => xi1,
            Axis::X2 => xi2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiplierSymbol {
    label: String,
    grid: Grid2D,
    values: Array2<Complex64>,
}

impl MultiplierSymbol {
    /// Samples `f(xi1, xi2)` over the lattice. The Nyquist row/column is
    /// forced to zero so applying a symbol can never resurrect those modes.
    pub fn from_fn(
        grid: Grid2D,
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Self {
        let n = grid.n();
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            let k1 = grid.wavenumber(i);
            for j in 0..n {
                let k2 = grid.wavenumber(j);
                values[[i, j]] = if grid.is_nyquist(k1) || grid.is_nyquist(k2) {
                    Complex64::new(0.0, 0.0)
                } else {
                    f(grid.xi(k1), grid.xi(k2))
                };
            }
        }
        Self {
            label: label.into(),
            grid,
            values,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn value_at(&self, k1: i64, k2: i64) -> Complex64 {
        self.values[[self.grid.index_of(k1), self.grid.index_of(k2)]]
    }

    pub fn apply(&self, f: &SpectralField) -> QgResult<SpectralField> {
        self.grid.check_same(f.grid())?;
        let coeffs = &self.values * f.coeffs();
        // Conjugate-symmetric symbols preserve the field invariants exactly;
        // this is not re-validated on the hot path.
        let mut out = SpectralField::zeros(self.grid);
        *out.coeffs_mut() = coeffs;
        Ok(out)
    }

    pub fn apply_raw(&self, coeffs: &Array2<Complex64>) -> Array2<Complex64> {
        &self.values * coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `|xi|^s`, with the zero mode mapped to 0.
pub fn fractional_laplacian(grid: Grid2D, s: f64) -> MultiplierSymbol {
    MultiplierSymbol::from_fn(grid, format!("lambda^{s}"), move |x1, x2| {
        let m = (x1 * x1 + x2 * x2).sqrt();
        if m == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(m.powf(s), 0.0)
        }
    })
}

/// Dissipation semigroup `e^{-t kappa Lambda^gamma}`; exact per mode.
pub fn semigroup(grid: Grid2D, t: f64, params: PhysicalParams) -> QgResult<MultiplierSymbol> {
    if t < 0.0 {
        return Err(QgError::NegativeTime { t });
    }
    let (gamma, kappa) = (params.gamma, params.kappa);
    Ok(MultiplierSymbol::from_fn(
        grid,
        format!("heat(t={t},gamma={gamma})"),
        move |x1, x2| {
            let m = (x1 * x1 + x2 * x2).sqrt();
            Complex64::new((-t * kappa * m.powf(gamma)).exp(), 0.0)
        },
    ))
}

/// Exponential l1 weight `e^{a |xi|_1}`. Positive rates are guarded: the
/// largest exponent over retained modes must stay at or below `cap`.
pub fn l1_weight(grid: Grid2D, a: f64, cap: f64) -> QgResult<MultiplierSymbol> {
    if a > 0.0 {
        let worst = a * grid.max_l1_retained();
        if worst > cap {
            return Err(QgError::ExpOverflow {
                time: f64::NAN,
                shell: grid.max_l1_retained(),
                exponent: worst,
                cap,
            });
        }
    }
    Ok(MultiplierSymbol::from_fn(
        grid,
        format!("exp({a}|xi|_1)"),
        move |x1, x2| Complex64::new((a * (x1.abs() + x2.abs())).exp(), 0.0),
    ))
}

/// Riesz transform symbol `i xi_l / |xi|`, zero at the mean mode.
pub fn riesz(grid: Grid2D, axis: Axis) -> MultiplierSymbol {
    MultiplierSymbol::from_fn(grid, format!("riesz({axis:?})"), move |x1, x2| {
        let m = (x1 * x1 + x2 * x2).sqrt();
        if m == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, axis.pick(x1, x2) / m)
        }
    })
}

/// `i xi_l`: the partial derivative along one axis.
pub fn gradient(grid: Grid2D, axis: Axis) -> MultiplierSymbol {
    MultiplierSymbol::from_fn(grid, format!("d/dx{axis:?}"), move |x1, x2| {
        Complex64::new(0.0, axis.pick(x1, x2))
    })
}

/// One-axis damping `e^{-b |xi_axis|}` (used by the sign-split product).
pub fn axis_damping(grid: Grid2D, axis: Axis, b: f64) -> MultiplierSymbol {
    MultiplierSymbol::from_fn(grid, format!("exp(-{b}|xi_{axis:?}|)"), move |x1, x2| {
        Complex64::new((-b * axis.pick(x1, x2).abs()).exp(), 0.0)
    })
}

/// Velocity from the active scalar: `v = (-R_2 theta, R_1 theta)`.
/// Divergence-free exactly: `i xi . v^ = (-xi_1 xi_2 + xi_2 xi_1)/|xi| = 0`
/// holds per mode in exact arithmetic and to round-off here.
pub fn riesz_velocity(theta: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = *theta.grid();
    let r1 = riesz(grid, Axis::X1);
    let r2 = riesz(grid, Axis::X2);
    let v1 = r2.apply(theta).expect("same grid").scaled(-1.0);
    let v2 = r1.apply(theta).expect("same grid");
    (v1, v2)
}
