//! Dissipation parameters shared across the solver and analysis layers.

use crate::error::{QgError, QgResult};
use serde::{Deserialize, Serialize};

/// Fractional dissipation `kappa * Lambda^gamma` with `1 <= gamma <= 2`.
/// `gamma = 1` is the critical balance between transport and dissipation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub gamma: f64,
    pub kappa: f64,
}

impl PhysicalParams {
    pub fn new(gamma: f64, kappa: f64) -> QgResult<Self> {
        if !(1.0..=2.0).contains(&gamma) {
            return Err(QgError::InvalidParameter(format!(
                "gamma = {gamma} must lie in [1, 2]"
            )));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(QgError::InvalidParameter(format!(
                "kappa = {kappa} must be positive"
            )));
        }
        Ok(Self { gamma, kappa })
    }

    pub fn is_critical(&self) -> bool {
        self.gamma == 1.0
    }

    /// Largest admissible weight growth rate for the analyticity machinery:
    /// 1 in the subcritical range, 1/4 at the critical exponent (the l1
    /// wavenumber modulus is within a factor 1/2 of the Euclidean one in 2D,
    /// and the critical argument spends half the dissipation on absorption).
    pub fn max_weight_rate(&self) -> f64 {
        if self.is_critical() {
            0.25
        } else {
            1.0
        }
    }

    pub fn validate_weight_rate(&self, alpha: f64) -> QgResult<()> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(QgError::InvalidParameter(format!(
                "weight rate alpha = {alpha} must lie in (0, 1]"
            )));
        }
        if alpha > self.max_weight_rate() {
            return Err(QgError::InvalidParameter(format!(
                "weight rate alpha = {alpha} exceeds {} allowed at gamma = {}",
                self.max_weight_rate(),
                self.gamma
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_range_enforced() {
        assert!(PhysicalParams::new(2.5, 1.0).is_err());
        assert!(PhysicalParams::new(0.9, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0).is_ok());
        assert!(PhysicalParams::new(2.0, 1.0).is_ok());
        assert!(PhysicalParams::new(1.5, 0.0).is_err());
        assert!(PhysicalParams::new(1.5, -1.0).is_err());
    }

    #[test]
    fn critical_weight_rate_capped_at_quarter() {
        let critical = PhysicalParams::new(1.0, 1.0).unwrap();
        assert!(critical.validate_weight_rate(0.25).is_ok());
        assert!(critical.validate_weight_rate(0.3).is_err());
        let sub = PhysicalParams::new(1.5, 1.0).unwrap();
        assert!(sub.validate_weight_rate(1.0).is_ok());
        assert!(sub.validate_weight_rate(1.1).is_err());
        assert!(sub.validate_weight_rate(0.0).is_err());
    }
}
