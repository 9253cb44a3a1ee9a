//! Named, seedable verification suites. Each suite measures a set of scalar
//! invariants and compares them against pinned thresholds; callers may
//! tighten thresholds but never loosen them.

use crate::dynamics::{monitors, simulate, SolverConfig};
use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::gevrey::{
    bilinear_bt_decomposed, bilinear_bt_direct, concavity_gap, concavity_gap_operator,
    gevrey_transform_field, mixed_weight_amplification, GevreyConfig,
};
use crate::grid::Grid2D;
use crate::kernels::{beta_identity_check, half_integral_check, kernel_scaling_check};
use crate::lp::{build_frame, paraproduct_split};
use crate::multiplier::{fractional_laplacian, l1_weight, riesz_velocity, semigroup, EXP_CAP};
use crate::norms::{h1_seminorm, lp_norm, Lp};
use crate::params::PhysicalParams;
use crate::product::dealiased_product;
use num_complex::Complex64;

/// Regression constants measured once on the pinned seed banks below, then
/// committed with slack. A later measurement drifting outside the stated
/// band is a behavioral regression, not tolerance noise.
pub mod frozen {
    /// Sup of |B_t(f,g)|_{L2} / |fg|_{L2} over the pinned bilinear sweep.
    pub const BILINEAR_AMPLIFICATION_L2: f64 = 1.0;
    /// Same ratio in L4.
    pub const BILINEAR_AMPLIFICATION_L4: f64 = 1.0;
    /// Sup over the pinned bank of the half-integral ratio
    /// sup_t |int_0^t (t-s)^{-1/2} a| / |a|_{L2}.
    pub const HALF_INTEGRAL_SUP_RATIO: f64 = 1.0154;
    /// Worst Lp amplification of e^{a^{1/gamma} L1 - a Lambda^gamma / 2}
    /// over the pinned a-sweep at gamma = 1.5.
    pub const MIXED_WEIGHT_AMPLIFICATION: f64 = 2.6428;
    /// Weighted-trajectory Besov growth factor for the subcritical
    /// small-data reference run.
    pub const GEVREY_NORM_GROWTH: f64 = 1.3683;
    /// Same for the critical reference run. The critical weight rate keeps
    /// every weighted mode nonincreasing, so the sup sits at t = 0.
    pub const CRITICAL_GEVREY_GROWTH: f64 = 1.0;
    /// Guaranteed fraction of t^{1/gamma} reached by the fitted spectral
    /// decay rate on small-data runs.
    pub const RADIUS_RATE_FRACTION: f64 = 0.8;
    /// Relative slack applied to the regression constants above.
    pub const SLACK: f64 = 0.10;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub direction: Direction,
    pub pass: bool,
}

impl CheckResult {
    fn judge(name: &str, measured: f64, threshold: f64, direction: Direction) -> Self {
        let pass = match direction {
            Direction::AtMost => measured <= threshold,
            Direction::AtLeast => measured >= threshold,
        } && measured.is_finite();
        Self {
            name: name.to_string(),
            measured,
            threshold,
            direction,
            pass,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub results: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

pub const SUITE_NAMES: &[&str] = &[
    "frame",
    "multipliers",
    "bilinear",
    "dynamics",
    "kernels",
    "gevrey",
];

struct Checks {
    overrides: Vec<(String, f64)>,
    used: Vec<bool>,
    results: Vec<CheckResult>,
}

impl Checks {
    fn new(overrides: &[(String, f64)]) -> Self {
        Self {
            overrides: overrides.to_vec(),
            used: vec![false; overrides.len()],
            results: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, measured: f64, default: f64, dir: Direction) -> QgResult<()> {
        let mut threshold = default;
        for (i, (key, value)) in self.overrides.iter().enumerate() {
            if key == name {
                let tightens = match dir {
                    Direction::AtMost => *value <= default,
                    Direction::AtLeast => *value >= default,
                };
                if !tightens {
                    return Err(QgError::InvalidParameter(format!(
                        "tolerance override {key}={value} would loosen the default {default}"
                    )));
                }
                threshold = *value;
                self.used[i] = true;
            }
        }
        self.results.push(CheckResult::judge(name, measured, threshold, dir));
        Ok(())
    }

    fn finish(self, suite: &str) -> QgResult<SuiteReport> {
        for (i, (key, _)) in self.overrides.iter().enumerate() {
            if !self.used[i] {
                return Err(QgError::InvalidParameter(format!(
                    "tolerance override {key} matches no check in suite {suite}"
                )));
            }
        }
        Ok(SuiteReport {
            suite: suite.to_string(),
            results: self.results,
        })
    }
}

fn band_field(grid: Grid2D, seed: u64, linf: f64) -> QgResult<SpectralField> {
    SpectralField::random_annulus(grid, seed, 1.0, grid.dealias_limit() as f64 * 0.9, 0.1, linf)
}

fn frame_suite(seed: u64, overrides: &[(String, f64)]) -> QgResult<SuiteReport> {
    let mut c = Checks::new(overrides);
    let grid = Grid2D::new(64)?;
    let frame = build_frame(grid)?;

    c.push(
        "frame.partition_deviation",
        frame.partition_max_deviation(),
        1e-12,
        Direction::AtMost,
    )?;

    let mut recon_worst = 0.0f64;
    let mut para_worst = 0.0f64;
    let mut bern_lo = f64::INFINITY;
    let mut bern_hi = 0.0f64;
    for i in 0..5 {
        let f = band_field(grid, seed.wrapping_add(i), 1.0)?;
        let parts = frame.decompose(&f)?;
        let back = parts.reconstruct();
        recon_worst = recon_worst.max(back.rel_l2_distance(&f));

        let mut fz = f.clone();
        fz.coeffs_mut()[[0, 0]] = Complex64::new(0.0, 0.0);
        let g = {
            let mut g = band_field(grid, seed.wrapping_add(100 + i), 1.0)?;
            g.coeffs_mut()[[0, 0]] = Complex64::new(0.0, 0.0);
            g
        };
        let split = paraproduct_split(&fz, &g, &frame)?;
        let total = split.total();
        let product = dealiased_product(&fz, &g)?;
        para_worst = para_worst.max(total.rel_l2_distance(&product));

        for j in frame.levels() {
            let block = frame.block(&f, j)?;
            let l2 = block.l2_spectral();
            if l2 < 1e-13 {
                continue;
            }
            let ratio = h1_seminorm(&block) / l2;
            let scale = (2.0f64).powi(j);
            bern_lo = bern_lo.min(ratio / (scale / 2.0));
            bern_hi = bern_hi.max(ratio / (scale * 2.0));
        }
    }
    c.push("frame.reconstruction", recon_worst, 1e-12, Direction::AtMost)?;
    c.push("frame.paraproduct", para_worst, 1e-10, Direction::AtMost)?;
    c.push("frame.bernstein_low", bern_lo, 1.0, Direction::AtLeast)?;
    c.push("frame.bernstein_high", bern_hi, 1.0, Direction::AtMost)?;

    let mut heat_worst = 0.0f64;
    for gamma in [1.0, 1.5, 2.0] {
        let params = PhysicalParams::new(gamma, 1.0)?;
        for t in [0.01, 0.1, 1.0] {
            let e = semigroup(grid, t, params)?;
            for i in 0..3 {
                let f = band_field(grid, seed.wrapping_add(200 + i), 1.0)?;
                for j in frame.levels() {
                    let block = frame.block(&f, j)?;
                    let l2 = block.l2_spectral();
                    if l2 < 1e-13 {
                        continue;
                    }
                    // Block support starts above 2^{j-1}, so the semigroup
                    // contracts it at least by e^{-t 2^{gamma(j-1)}}.
                    let floor = (-t * (2.0f64).powi(j - 1).powf(gamma)).exp();
                    let damped = e.apply(&block)?;
                    heat_worst = heat_worst.max(damped.l2_spectral() / (floor * l2));
                }
            }
        }
    }
    c.push(
        "frame.heat_localization",
        heat_worst,
        1.0 + 1e-12,
        Direction::AtMost,
    )?;
    c.finish("frame")
}

fn multipliers_suite(seed: u64, overrides: &[(String, f64)]) -> QgResult<SuiteReport> {
    let mut c = Checks::new(overrides);
    let grid = Grid2D::new(64)?;

    let mut div_worst = 0.0f64;
    for i in 0..5 {
        let f = band_field(grid, seed.wrapping_add(i), 1.0)?;
        let (v1, v2) = riesz_velocity(&f);
        let d1 = crate::multiplier::gradient(grid, crate::multiplier::Axis::X1).apply(&v1)?;
        let d2 = crate::multiplier::gradient(grid, crate::multiplier::Axis::X2).apply(&v2)?;
        let mut div = d1;
        div.add_scaled(&d2, 1.0);
        div_worst = div_worst.max(div.max_abs_coeff() / f.max_abs_coeff().max(1e-300));
    }
    c.push("multipliers.divergence_free", div_worst, 1e-13, Direction::AtMost)?;

    let params = PhysicalParams::new(1.5, 0.8)?;
    let f = band_field(grid, seed.wrapping_add(10), 1.0)?;
    let one_then_other = semigroup(grid, 0.3, params)?.apply(&semigroup(grid, 0.2, params)?.apply(&f)?)?;
    let combined = semigroup(grid, 0.5, params)?.apply(&f)?;
    c.push(
        "multipliers.semigroup_composition",
        one_then_other.rel_l2_distance(&combined),
        1e-13,
        Direction::AtMost,
    )?;

    let w = l1_weight(grid, 0.25, EXP_CAP)?;
    let wi = l1_weight(grid, -0.25, EXP_CAP)?;
    let back = wi.apply(&w.apply(&f)?)?;
    c.push(
        "multipliers.weight_cancellation",
        back.rel_l2_distance(&f),
        1e-12,
        Direction::AtMost,
    )?;

    let lam = fractional_laplacian(grid, 1.5);
    let expected = ((3.0f64 * 3.0 + 4.0 * 4.0).sqrt()).powf(1.5);
    let dev = (lam.value_at(3, 4).re - expected).abs() / expected;
    c.push("multipliers.fractional_symbol", dev, 1e-13, Direction::AtMost)?;
    c.finish("multipliers")
}

fn bilinear_suite(seed: u64, overrides: &[(String, f64)]) -> QgResult<SuiteReport> {
    let mut c = Checks::new(overrides);
    let grid = Grid2D::new(32)?;

    let mut identity_worst = 0.0f64;
    let mut amp2 = 0.0f64;
    let mut amp4 = 0.0f64;
    for gamma in [1.0, 1.5, 2.0] {
        let cfg = GevreyConfig::new(PhysicalParams::new(gamma, 1.0)?, 0.2)?;
        for t in [0.0, 0.1, 1.0] {
            for i in 0..5 {
                let f = band_field(grid, seed.wrapping_add(2 * i), 1.0)?;
                let g = band_field(grid, seed.wrapping_add(2 * i + 1), 1.0)?;
                let direct = bilinear_bt_direct(&f, &g, t, &cfg)?;
                let split = bilinear_bt_decomposed(&f, &g, t, &cfg)?;
                identity_worst = identity_worst.max(split.rel_l2_distance(&direct));
                let plain = dealiased_product(&f, &g)?;
                let denom2 = lp_norm(&plain, Lp::P(2.0))?.max(1e-300);
                let denom4 = lp_norm(&plain, Lp::P(4.0))?.max(1e-300);
                amp2 = amp2.max(lp_norm(&direct, Lp::P(2.0))? / denom2);
                amp4 = amp4.max(lp_norm(&direct, Lp::P(4.0))? / denom4);
            }
        }
    }
    c.push("bilinear.identity", identity_worst, 1e-10, Direction::AtMost)?;

    let small = Grid2D::new(16)?;
    let lim = small.dealias_limit();
    let mut max_exponent = f64::NEG_INFINITY;
    for x1 in -lim..=lim {
        for x2 in -lim..=lim {
            for y1 in -lim..=lim {
                for y2 in -lim..=lim {
                    let s = ((x1 + y1).abs() + (x2 + y2).abs()) as f64;
                    let parts = (x1.abs() + x2.abs() + y1.abs() + y2.abs()) as f64;
                    max_exponent = max_exponent.max(s - parts);
                }
            }
        }
    }
    c.push("bilinear.weight_sign", max_exponent, 0.0, Direction::AtMost)?;

    c.push(
        "bilinear.amplification_l2_high",
        amp2,
        frozen::BILINEAR_AMPLIFICATION_L2 * (1.0 + frozen::SLACK),
        Direction::AtMost,
    )?;
    c.push(
        "bilinear.amplification_l2_low",
        amp2,
        frozen::BILINEAR_AMPLIFICATION_L2 * (1.0 - frozen::SLACK),
        Direction::AtLeast,
    )?;
    c.push(
        "bilinear.amplification_l4_high",
        amp4,
        frozen::BILINEAR_AMPLIFICATION_L4 * (1.0 + frozen::SLACK),
        Direction::AtMost,
    )?;
    c.push(
        "bilinear.amplification_l4_low",
        amp4,
        frozen::BILINEAR_AMPLIFICATION_L4 * (1.0 - frozen::SLACK),
        Direction::AtLeast,
    )?;
    c.finish("bilinear")
}

fn dynamics_suite(seed: u64, overrides: &[(String, f64)]) -> QgResult<SuiteReport> {
    let mut c = Checks::new(overrides);
    let grid = Grid2D::new(64)?;

    let mode = SpectralField::from_modes(grid, &[(1, 0, Complex64::new(0.5, 0.0))])?;
    let mut linear_worst = 0.0f64;
    for gamma in [1.0, 1.5, 2.0] {
        let cfg = SolverConfig::new(PhysicalParams::new(gamma, 1.0)?, 0.01, 1.0, 100)?;
        let traj = simulate(&mode, cfg)?;
        let expect = mode.scaled((-1.0f64).exp());
        linear_worst = linear_worst.max(traj.last().rel_l2_distance(&expect));
    }
    c.push("dynamics.linear_exactness", linear_worst, 1e-8, Direction::AtMost)?;

    // The two wavevectors need different moduli; equal-modulus pairs
    // interact with cancelling cross terms and leave the flow linear.
    let g32 = Grid2D::new(32)?;
    let two_mode = SpectralField::from_modes(
        g32,
        &[
            (1, 0, Complex64::new(0.0, -0.25)),
            (1, 2, Complex64::new(0.15, 0.0)),
        ],
    )?;
    let params = PhysicalParams::new(1.5, 1.0)?;
    let finals: Vec<SpectralField> = [0.04, 0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let cfg = SolverConfig::new(params, dt, 0.4, 1_000_000)?;
            Ok(simulate(&two_mode, cfg)?.last().clone())
        })
        .collect::<QgResult<_>>()?;
    let e01 = finals[0].sub(&finals[1]).l2_spectral();
    let e12 = finals[1].sub(&finals[2]).l2_spectral();
    let e23 = finals[2].sub(&finals[3]).l2_spectral();
    let order = (e01 / e12).log2().min((e12 / e23).log2());
    c.push("dynamics.observed_order", order, 3.8, Direction::AtLeast)?;

    let mut balance_worst = 0.0f64;
    let mut principle_worst = 0.0f64;
    let mut mean_worst = 0.0f64;
    for gamma in [1.0, 1.5] {
        let theta0 = SpectralField::random_annulus(grid, seed, 1.0, 2.0, 0.0, 0.1)?;
        let cfg = SolverConfig::new(PhysicalParams::new(gamma, 1.0)?, 1e-4, 0.05, 100)?;
        let report = monitors(&simulate(&theta0, cfg)?);
        balance_worst = balance_worst.max(report.max_balance_residual);
        principle_worst = principle_worst.max(report.max_principle_violation);
        mean_worst = mean_worst.max(report.mean_drift);
    }
    c.push("dynamics.energy_balance", balance_worst, 1e-6, Direction::AtMost)?;
    c.push("dynamics.max_principle", principle_worst, 1e-6, Direction::AtMost)?;
    c.push("dynamics.mean_conservation", mean_worst, 1e-13, Direction::AtMost)?;
    c.finish("dynamics")
}

fn kernels_suite(_seed: u64, overrides: &[(String, f64)]) -> QgResult<SuiteReport> {
    let mut c = Checks::new(overrides);
    let grid_pts = [0.1, 0.3, 0.5, 0.7, 0.9];
    let beta = beta_identity_check(&grid_pts, &grid_pts, &[0.5, 1.0, 2.0])?;
    c.push(
        "kernels.beta_identity",
        beta.max_ratio_deviation,
        1e-6,
        Direction::AtMost,
    )?;

    let scaling = kernel_scaling_check(&[0.5, 1.0, 2.0, 4.0], &[2.0, 4.0])?;
    let worst_plain = scaling
        .plain
        .iter()
        .map(|f| f.rel_deviation)
        .fold(0.0f64, f64::max);
    let worst_conj = scaling
        .conjugate
        .iter()
        .map(|f| f.rel_deviation)
        .fold(0.0f64, f64::max);
    let worst_mass = scaling
        .unit_mass
        .iter()
        .map(|(_, m)| (m - 1.0).abs())
        .fold(0.0f64, f64::max);
    c.push("kernels.scaling_exponent", worst_plain, 0.02, Direction::AtMost)?;
    c.push(
        "kernels.conjugate_scaling_exponent",
        worst_conj,
        0.02,
        Direction::AtMost,
    )?;
    c.push("kernels.unit_mass", worst_mass, 1e-9, Direction::AtMost)?;

    let hls = half_integral_check(&[11, 12, 13, 14, 15], 10.0)?;
    c.push(
        "kernels.half_integral_high",
        hls.sup_ratio,
        frozen::HALF_INTEGRAL_SUP_RATIO * (1.0 + frozen::SLACK),
        Direction::AtMost,
    )?;
    c.push(
        "kernels.half_integral_low",
        hls.sup_ratio,
        frozen::HALF_INTEGRAL_SUP_RATIO * (1.0 - frozen::SLACK),
        Direction::AtLeast,
    )?;
    c.finish("kernels")
}

fn gevrey_suite(seed: u64, overrides: &[(String, f64)]) -> QgResult<SuiteReport> {
    let mut c = Checks::new(overrides);
    let grid = Grid2D::new(32)?;
    let cfg = GevreyConfig::new(PhysicalParams::new(1.5, 1.0)?, 1.0)?;

    let f = band_field(grid, seed, 1.0)?;
    let id = gevrey_transform_field(&f, 0.0, &cfg)?;
    c.push(
        "gevrey.zero_time_identity",
        id.rel_l2_distance(&f),
        1e-15,
        Direction::AtMost,
    )?;

    let mode = SpectralField::from_modes(grid, &[(1, 0, Complex64::new(0.5, 0.0))])?;
    let cfg2 = GevreyConfig::new(PhysicalParams::new(2.0, 1.0)?, 1.0)?;
    let weighted = gevrey_transform_field(&mode, 4.0, &cfg2)?;
    let dev = (weighted.coeff(1, 0).re / mode.coeff(1, 0).re - (2.0f64).exp()).abs();
    c.push("gevrey.single_mode_weight", dev, 1e-12, Direction::AtMost)?;

    let mut gap_min = f64::INFINITY;
    for i in 1..=40 {
        let t = i as f64 * 0.25;
        for j in 0..=20 {
            let s = t * j as f64 / 20.0;
            for gamma in [1.0, 1.5, 2.0] {
                gap_min = gap_min.min(concavity_gap(s, t, gamma)?);
            }
        }
    }
    c.push("gevrey.concavity_gap_min", gap_min, -1e-15, Direction::AtLeast)?;

    let mut sup_amp = 0.0f64;
    for i in 0..3 {
        let f = band_field(grid, seed.wrapping_add(i), 1.0)?;
        let sup_in = lp_norm(&f, Lp::Inf)?;
        for s in [0.1, 0.5, 0.9] {
            let out = concavity_gap_operator(&f, s, 1.0, 1.5)?;
            sup_amp = sup_amp.max(lp_norm(&out, Lp::Inf)? / sup_in);
        }
    }
    c.push(
        "gevrey.gap_operator_sup_bound",
        sup_amp,
        1.0 + 1e-9,
        Direction::AtMost,
    )?;

    let mixed = mixed_weight_amplification(
        grid,
        1.5,
        &[0.01, 0.1, 1.0, 10.0, 100.0],
        &[seed, seed.wrapping_add(1)],
    )?;
    c.push(
        "gevrey.mixed_weight_high",
        mixed.max_amplification,
        frozen::MIXED_WEIGHT_AMPLIFICATION * (1.0 + frozen::SLACK),
        Direction::AtMost,
    )?;
    c.push(
        "gevrey.mixed_weight_low",
        mixed.max_amplification,
        frozen::MIXED_WEIGHT_AMPLIFICATION * (1.0 - frozen::SLACK),
        Direction::AtLeast,
    )?;
    c.finish("gevrey")
}

/// Runs one named suite. Unknown names are a usage error; tolerance
/// overrides may only tighten the built-in defaults.
pub fn run_suite(suite: &str, seed: u64, overrides: &[(String, f64)]) -> QgResult<SuiteReport> {
    match suite {
        "frame" => frame_suite(seed, overrides),
        "multipliers" => multipliers_suite(seed, overrides),
        "bilinear" => bilinear_suite(seed, overrides),
        "dynamics" => dynamics_suite(seed, overrides),
        "kernels" => kernels_suite(seed, overrides),
        "gevrey" => gevrey_suite(seed, overrides),
        other => Err(QgError::InvalidParameter(format!(
            "unknown verification suite {other:?}; expected one of {SUITE_NAMES:?}"
        ))),
    }
}
