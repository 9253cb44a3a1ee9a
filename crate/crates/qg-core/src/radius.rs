//! Spectral decay fits. The decay rate of `log |coeff|` against the l1
//! frequency radius estimates how far the solution extends analytically off
//! the real torus; log-log slopes of gradient norms in time estimate decay
//! exponents.

use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectoryRecord;
use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::gevrey::DecaySlope;
use crate::norms::sobolev_seminorm;

/// Shells whose peak magnitude falls below this fraction of the largest
/// coefficient are excluded from fits.
pub const RADIUS_NOISE_FLOOR: f64 = 1e-14;

/// Fewest qualifying shells for a trustworthy fit.
pub const MIN_SHELLS: usize = 4;

/// Fit quality below which an estimate is flagged unreliable.
pub const QUALITY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub time: f64,
    /// Exponential decay rate of the spectrum in `|k|_1`, clamped at 0.
    pub radius: f64,
    /// R^2 of the log-linear fit.
    pub fit_quality: f64,
    pub shells_used: usize,
    pub reliable: bool,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = syy - slope * sxy;
    let r2 = if syy <= 1e-30 {
        0.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

/// Peak coefficient magnitude on each integer l1 shell `|k1| + |k2| = m`.
fn shell_maxima(f: &SpectralField) -> Vec<f64> {
    let grid = *f.grid();
    let n = grid.n();
    let m_max = 2 * (n as i64 / 2 - 1) as usize;
    let mut shells = vec![0.0f64; m_max + 1];
    for ((i, j), c) in f.coeffs().indexed_iter() {
        let k1 = grid.wavenumber(i);
        let k2 = grid.wavenumber(j);
        if grid.is_nyquist(k1) || grid.is_nyquist(k2) {
            continue;
        }
        let m = (k1.abs() + k2.abs()) as usize;
        shells[m] = shells[m].max(c.norm());
    }
    shells
}

fn fit_radius(f: &SpectralField, time: f64) -> RadiusEstimate {
    let unit = f.grid().wavenumber_unit();
    let shells = shell_maxima(f);
    let top = shells.iter().fold(0.0f64, |m, &x| m.max(x));
    let floor = top * RADIUS_NOISE_FLOOR;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (m, &v) in shells.iter().enumerate() {
        if v > floor && v > 0.0 {
            xs.push(m as f64 * unit);
            ys.push(v.ln());
        }
    }
    if xs.len() < MIN_SHELLS {
        return RadiusEstimate {
            time,
            radius: 0.0,
            fit_quality: 0.0,
            shells_used: xs.len(),
            reliable: false,
        };
    }
    let (slope, _, r2) = least_squares(&xs, &ys);
    let radius = (-slope).max(0.0);
    RadiusEstimate {
        time,
        radius,
        fit_quality: r2,
        shells_used: xs.len(),
        reliable: r2 >= QUALITY_THRESHOLD,
    }
}

pub fn analyticity_radius(f: &SpectralField) -> RadiusEstimate {
    fit_radius(f, 0.0)
}

pub fn analyticity_radius_at(f: &SpectralField, time: f64) -> RadiusEstimate {
    fit_radius(f, time)
}

/// Radius estimate for every snapshot of a trajectory.
pub fn radius_trajectory(traj: &TrajectoryRecord) -> Vec<RadiusEstimate> {
    traj.times
        .iter()
        .zip(traj.snapshots.iter())
        .map(|(&t, f)| fit_radius(f, t))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: DecaySlope,
    /// True when a straight line in `(t, log y)` explains the series better
    /// than one in `(log t, log y)`; power-law readings are then meaningless.
    pub exponential_dominates: bool,
}

/// Log-log least-squares slope of `|grad^k theta(t)|_{L^2}` over the window.
/// The window must span at least one decade.
pub fn decay_rate_fit(
    traj: &TrajectoryRecord,
    k: u32,
    window: (f64, f64),
) -> QgResult<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(QgError::InvalidParameter(format!(
            "bad fit window ({lo}, {hi})"
        )));
    }
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(QgError::InvalidParameter(format!(
            "fit window ({lo}, {hi}) spans less than a decade"
        )));
    }
    let mut log_t = Vec::new();
    let mut lin_t = Vec::new();
    let mut log_y = Vec::new();
    for (&t, f) in traj.times.iter().zip(traj.snapshots.iter()) {
        if t < lo || t > hi {
            continue;
        }
        let y = sobolev_seminorm(f, k as f64);
        if y > 1e-300 {
            log_t.push(t.ln());
            lin_t.push(t);
            log_y.push(y.ln());
        }
    }
    if log_t.len() < 3 {
        return Err(QgError::InvalidParameter(format!(
            "only {} usable samples in the fit window",
            log_t.len()
        )));
    }
    let (slope, _, r2_loglog) = least_squares(&log_t, &log_y);
    let (_, _, r2_semilog) = least_squares(&lin_t, &log_y);
    Ok(DecayFit {
        slope: DecaySlope {
            k,
            slope,
            r_squared: r2_loglog,
            window,
        },
        exponential_dominates: r2_semilog > r2_loglog,
    })
}

/// Least-squares exponent of `radius(t) ~ t^rho` over reliable estimates in
/// the window; feeds the growth-rate entry of the norm report.
pub fn radius_growth_fit(
    estimates: &[RadiusEstimate],
    window: (f64, f64),
) -> QgResult<DecaySlope> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for e in estimates {
        if e.time >= window.0 && e.time <= window.1 && e.reliable && e.radius > 0.0 {
            xs.push(e.time.ln());
            ys.push(e.radius.ln());
        }
    }
    if xs.len() < 3 {
        return Err(QgError::InvalidParameter(format!(
            "only {} reliable radius estimates in the window",
            xs.len()
        )));
    }
    let (slope, _, r2) = least_squares(&xs, &ys);
    Ok(DecaySlope {
        k: 0,
        slope,
        r_squared: r2,
        window,
    })
}
