//! Fixed-point iteration for the mild form of the equation,
//! `theta(t) = e^{-t kappa Lambda^gamma} theta_0
//!            - int_0^t e^{-(t-s) kappa Lambda^gamma} div(v theta)(s) ds`,
//! discretized on uniform time nodes with composite trapezoid quadrature.

use crate::dynamics::nonlinear_term;
use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::multiplier::semigroup;
use crate::params::PhysicalParams;

fn nonlinear_at_nodes(states: &[SpectralField]) -> QgResult<Vec<SpectralField>> {
    states.iter().map(nonlinear_term).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    pub params: PhysicalParams,
    pub t_end: f64,
    /// Number of time nodes including both endpoints.
    pub n_nodes: usize,
    /// Iteration stops once the sup-in-time relative update falls below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl PicardConfig {
    pub fn new(params: PhysicalParams, t_end: f64, n_nodes: usize) -> QgResult<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(QgError::InvalidParameter(format!(
                "picard horizon t_end = {t_end} must be positive"
            )));
        }
        if n_nodes < 5 {
            return Err(QgError::InvalidParameter(format!(
                "picard needs at least 5 time nodes, got {n_nodes}"
            )));
        }
        Ok(Self {
            params,
            t_end,
            n_nodes,
            tol: 1e-9,
            max_iters: 60,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub times: Vec<f64>,
    /// Final iterate at each node.
    pub states: Vec<SpectralField>,
    /// Sup-over-nodes relative update after each completed sweep.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl PicardSolution {
    /// Ratios of consecutive residuals; values below 1 certify contraction.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residual_history
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("non-empty node list")
    }
}

fn sup_l2(fields: &[SpectralField]) -> f64 {
    fields.iter().map(|f| f.l2_spectral()).fold(0.0, f64::max)
}

/// Runs the iteration from the linear flow until the update stalls below
/// `tol`. Three consecutive residual increases, or a non-finite residual,
/// abort with the history attached.
pub fn picard_solve(theta0: &SpectralField, cfg: PicardConfig) -> QgResult<PicardSolution> {
    let grid = *theta0.grid();
    let scale = theta0.max_abs_coeff().max(1.0);
    theta0.require_mean_zero(1e-13 * scale)?;
    let mut base = theta0.clone();
    base.dealias_truncate();
    base.zero_nyquist();

    let dt = cfg.t_end / (cfg.n_nodes - 1) as f64;
    let times: Vec<f64> = (0..cfg.n_nodes).map(|i| i as f64 * dt).collect();
    let e_step = semigroup(grid, dt, cfg.params)?;

    // Linear flow as the zeroth iterate; e^{-t_i A} by repeated application
    // of the one-step factor, matching the quadrature recursion below.
    let mut current: Vec<SpectralField> = Vec::with_capacity(cfg.n_nodes);
    current.push(base.clone());
    for i in 1..cfg.n_nodes {
        let prev = &current[i - 1];
        current.push(e_step.apply(prev)?);
    }

    let mut residual_history = Vec::new();
    let mut growth_streak = 0usize;
    for sweep in 1..=cfg.max_iters {
        let forcing = nonlinear_at_nodes(&current)?;
        // Trapezoid Duhamel via the recursion
        //   S_0 = 0,
        //   S_i = E_dt S_{i-1} + dt/2 (E_dt F_{i-1} + F_i),
        // which telescopes to dt (F_0/2 E_i + sum E_{i-j} F_j + F_i/2).
        let mut next: Vec<SpectralField> = Vec::with_capacity(cfg.n_nodes);
        next.push(base.clone());
        let mut duhamel = SpectralField::zeros(grid);
        let mut linear = base.clone();
        for i in 1..cfg.n_nodes {
            linear = e_step.apply(&linear)?;
            let mut incr = e_step.apply(&forcing[i - 1])?;
            incr.add_scaled(&forcing[i], 1.0);
            duhamel = e_step.apply(&duhamel)?;
            duhamel.add_scaled(&incr, dt / 2.0);
            let mut state = linear.clone();
            state.add_scaled(&duhamel, -1.0);
            next.push(state);
        }

        let diffs: Vec<SpectralField> = next
            .iter()
            .zip(current.iter())
            .map(|(a, b)| a.sub(b))
            .collect();
        let denom = sup_l2(&next).max(1e-300);
        let residual = sup_l2(&diffs) / denom;
        current = next;

        if !residual.is_finite() {
            residual_history.push(residual);
            return Err(QgError::NonContraction {
                history: residual_history,
            });
        }
        if let Some(&prev) = residual_history.last() {
            if residual > prev {
                growth_streak += 1;
            } else {
                growth_streak = 0;
            }
        }
        residual_history.push(residual);
        if growth_streak >= 3 {
            return Err(QgError::NonContraction {
                history: residual_history,
            });
        }
        if residual <= cfg.tol {
            return Ok(PicardSolution {
                times,
                states: current,
                residual_history,
                iterations: sweep,
                converged: true,
            });
        }
    }
    Ok(PicardSolution {
        times,
        states: current,
        residual_history,
        iterations: cfg.max_iters,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, SolverConfig};
    use crate::grid::Grid2D;
    use num_complex::Complex64;

    fn params(gamma: f64) -> PhysicalParams {
        PhysicalParams::new(gamma, 1.0).unwrap()
    }

    #[test]
    fn pure_mode_converges_in_one_sweep() {
        // Single cos mode: the transport term vanishes, the linear flow is
        // already the fixed point and the first sweep certifies it.
        let g = Grid2D::new(32).unwrap();
        let theta0 = SpectralField::from_modes(g, &[(1, 0, Complex64::new(0.5, 0.0))]).unwrap();
        let cfg = PicardConfig::new(params(1.5), 0.5, 33).unwrap();
        let sol = picard_solve(&theta0, cfg).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 1);
        assert!(sol.residual_history[0] <= 1e-13);
        let expect = theta0.scaled((-0.5f64).exp());
        assert!(sol.last().rel_l2_distance(&expect) < 1e-12);
    }

    #[test]
    fn small_data_contracts_and_matches_stepper() {
        let g = Grid2D::new(32).unwrap();
        let theta0 = SpectralField::from_modes(
            g,
            &[
                (1, 0, Complex64::new(0.0, -0.05)),
                (0, 1, Complex64::new(0.05, 0.0)),
            ],
        )
        .unwrap();
        let cfg = PicardConfig::new(params(1.5), 0.5, 65).unwrap();
        let sol = picard_solve(&theta0, cfg).unwrap();
        assert!(sol.converged, "history {:?}", sol.residual_history);
        for r in sol.contraction_ratios() {
            assert!(r < 0.5, "contraction ratio {r}");
        }
        let run_cfg = SolverConfig::new(params(1.5), 1e-3, 0.5, 1_000_000).unwrap();
        let traj = simulate(&theta0, run_cfg).unwrap();
        let rel = sol.last().rel_l2_distance(traj.last());
        assert!(rel <= 1e-5, "picard vs stepper: {rel:.3e}");
    }

    #[test]
    fn large_data_detected_as_non_contractive() {
        let g = Grid2D::new(32).unwrap();
        let theta0 = SpectralField::random_annulus(g, 9, 1.0, 4.0, 0.0, 60.0).unwrap();
        let cfg = PicardConfig::new(params(1.5), 2.0, 33).unwrap();
        match picard_solve(&theta0, cfg) {
            Err(QgError::NonContraction { history }) => {
                assert!(history.len() >= 2);
            }
            other => panic!("expected non-contraction, got {other:?}"),
        }
    }

    #[test]
    fn node_count_must_be_reasonable() {
        assert!(PicardConfig::new(params(1.5), 0.5, 3).is_err());
        assert!(PicardConfig::new(params(1.5), -1.0, 33).is_err());
    }
}
