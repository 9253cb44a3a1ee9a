//! Exponential frequency weights `e^{alpha t^{1/gamma} (|k_1|+|k_2|)}`, the
//! time-weighted solution norms built on them, and the weighted product
//! operator with its sign-split decomposition.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DiagRow, TrajectoryRecord};
use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::grid::Grid2D;
use crate::lp::{besov_norm, tilde_besov_norm, BesovIndex, LpFrame, Lq};
use crate::multiplier::{l1_weight, riesz_velocity, MultiplierSymbol, EXP_CAP};
use crate::norms::{dissipation_rate, h1_seminorm, lp_norm, sobolev_seminorm, Lp};
use crate::params::PhysicalParams;
use crate::product::{convolved_product, dealias_mask, dealiased_product_raw};

/// Default relative magnitude below which coefficients are zeroed before the
/// growing weight is applied; keeps round-off at high shells from being
/// amplified into the weighted norms.
pub const NOISE_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GevreyConfig {
    pub params: PhysicalParams,
    /// Weight growth rate; capped at 1/4 in the critical case gamma = 1.
    pub alpha: f64,
    pub exp_cap: f64,
    pub noise_floor_rel: f64,
}

impl GevreyConfig {
    pub fn new(params: PhysicalParams, alpha: f64) -> QgResult<Self> {
        params.validate_weight_rate(alpha)?;
        Ok(Self {
            params,
            alpha,
            exp_cap: EXP_CAP,
            noise_floor_rel: NOISE_FLOOR_REL,
        })
    }

    /// Weight rate at time `t`: `alpha t^{1/gamma}`.
    pub fn rate_at(&self, t: f64) -> QgResult<f64> {
        if t < 0.0 {
            return Err(QgError::NegativeTime { t });
        }
        Ok(self.alpha * t.powf(1.0 / self.params.gamma))
    }
}

/// Smallest retained l1 frequency radius whose weight exponent exceeds the
/// cap, in physical wavenumber units.
fn first_failing_shell(grid: Grid2D, rate: f64, cap: f64) -> f64 {
    let unit = grid.wavenumber_unit();
    let m_max = 2 * grid.dealias_limit();
    for m in 1..=m_max {
        let r = m as f64 * unit;
        if rate * r > cap {
            return r;
        }
    }
    grid.max_l1_retained()
}

fn grown_weight(grid: Grid2D, rate: f64, cap: f64, t: f64) -> QgResult<MultiplierSymbol> {
    l1_weight(grid, rate, cap).map_err(|e| match e {
        QgError::ExpOverflow { .. } => {
            let shell = first_failing_shell(grid, rate, cap);
            QgError::ExpOverflow {
                time: t,
                shell,
                exponent: rate * shell,
                cap,
            }
        }
        other => other,
    })
}

fn masked_by_noise_floor(theta: &SpectralField, rel: f64) -> SpectralField {
    let floor = rel * theta.max_abs_coeff();
    let mut out = theta.clone();
    for c in out.coeffs_mut().iter_mut() {
        if c.norm() < floor {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Applies `e^{alpha t^{1/gamma} (|k_1|+|k_2|)}` to one snapshot taken at
/// time `t`, after zeroing coefficients under the relative noise floor.
pub fn gevrey_transform_field(
    theta: &SpectralField,
    t: f64,
    cfg: &GevreyConfig,
) -> QgResult<SpectralField> {
    let rate = cfg.rate_at(t)?;
    let weight = grown_weight(*theta.grid(), rate, cfg.exp_cap, t)?;
    let masked = masked_by_noise_floor(theta, cfg.noise_floor_rel);
    weight.apply(&masked)
}

/// Weighs every snapshot of a trajectory by its own time. Diagnostics are
/// recomputed from the weighted snapshots at snapshot times; the velocity of
/// the weighted state is the Riesz velocity of the weighted scalar.
pub fn gevrey_transform(traj: &TrajectoryRecord, cfg: &GevreyConfig) -> QgResult<TrajectoryRecord> {
    if (cfg.params.gamma - traj.params.gamma).abs() > 1e-14 {
        return Err(QgError::InvalidParameter(format!(
            "weight built for gamma = {} but trajectory has gamma = {}",
            cfg.params.gamma, traj.params.gamma
        )));
    }
    let mut snapshots = Vec::with_capacity(traj.snapshots.len());
    let mut diag = Vec::with_capacity(traj.snapshots.len());
    for (&t, theta) in traj.times.iter().zip(traj.snapshots.iter()) {
        let weighted = gevrey_transform_field(theta, t, cfg)?;
        let (v1, v2) = riesz_velocity(&weighted);
        let max_speed = v1
            .to_physical()
            .iter()
            .zip(v2.to_physical().iter())
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0f64, f64::max);
        let gamma = traj.params.gamma;
        diag.push(DiagRow {
            time: t,
            l2: weighted.l2_spectral(),
            linf: lp_norm(&weighted, Lp::Inf)?,
            h1: h1_seminorm(&weighted),
            dissipation: dissipation_rate(&weighted, gamma),
            grad_dissipation: {
                let v = sobolev_seminorm(&weighted, 1.0 + gamma / 2.0);
                v * v
            },
            mean: weighted.mean(),
            max_speed,
        });
        snapshots.push(weighted);
    }
    Ok(TrajectoryRecord {
        grid: traj.grid,
        params: traj.params,
        times: traj.times.clone(),
        snapshots,
        diag,
    })
}

/// Index package for the time-weighted norms. The solution-space regularity
/// is pinned to `s = 2/p + 1 - gamma`; the remaining exponents obey
///   (i)   0 < 2/r < gamma - 1,
///   (ii)  2/p + 1 - gamma - 2/r > 0,
///   (iii) 0 < beta < 1 - alpha_k/gamma,  beta = 1 - 1/gamma - 2/(r gamma),
/// all collected into one rejection when violated. The critical case
/// gamma = 1 only uses (p, q).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// Extra-regularity exponent of the second sup term.
    pub alpha_k: f64,
}

impl WeightedNormSpec {
    pub fn new(gamma: f64, p: f64, q: f64, r: f64, alpha_k: f64) -> QgResult<Self> {
        let spec = Self {
            gamma,
            p,
            q,
            r,
            alpha_k,
        };
        let violations = spec.violations();
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(QgError::BadNormSpec { violations })
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let Self {
            gamma,
            p,
            q,
            r,
            alpha_k,
        } = *self;
        if !(1.0..=2.0).contains(&gamma) || !gamma.is_finite() {
            out.push(format!("gamma = {gamma} outside [1, 2]"));
            return out;
        }
        if !(p >= 1.0 && p.is_finite()) {
            out.push(format!("lebesgue exponent p = {p} must be finite and >= 1"));
        }
        if !(q >= 1.0 && q.is_finite()) {
            out.push(format!("summation exponent q = {q} must be finite and >= 1"));
        }
        if self.is_critical() {
            return out;
        }
        if !(r >= 1.0 && r.is_finite()) {
            out.push(format!(
                "auxiliary integrability r = {r} must be finite and >= 1"
            ));
            return out;
        }
        if !(2.0 / r > 0.0 && 2.0 / r < gamma - 1.0) {
            out.push(format!(
                "need 0 < 2/r < gamma - 1: got 2/r = {} with gamma - 1 = {}",
                2.0 / r,
                gamma - 1.0
            ));
        }
        let gap = 2.0 / p + 1.0 - gamma - 2.0 / r;
        if !(gap > 0.0) {
            out.push(format!(
                "need 2/p + 1 - gamma - 2/r > 0: got {gap}"
            ));
        }
        let beta = self.beta();
        if !(beta > 0.0 && beta < 1.0 - alpha_k / gamma) {
            out.push(format!(
                "need 0 < beta < 1 - alpha_k/gamma: got beta = {beta} against {}",
                1.0 - alpha_k / gamma
            ));
        }
        if !(alpha_k > 0.0 && alpha_k.is_finite()) {
            out.push(format!(
                "extra-regularity exponent alpha_k = {alpha_k} must be positive"
            ));
        }
        out
    }

    pub fn is_critical(&self) -> bool {
        self.gamma == 1.0
    }

    /// Base regularity `2/p + 1 - gamma`.
    pub fn s(&self) -> f64 {
        2.0 / self.p + 1.0 - self.gamma
    }

    /// Time weight on the auxiliary Lebesgue term.
    pub fn beta(&self) -> f64 {
        1.0 - 1.0 / self.gamma - 2.0 / (self.r * self.gamma)
    }

    /// Lebesgue exponent of the unweighted velocity-space term, `2/(gamma-1)`.
    pub fn p1(&self) -> f64 {
        2.0 / (self.gamma - 1.0)
    }
}

/// A sup-in-time value together with where it was attained.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SupTrace {
    pub value: f64,
    pub at_time: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecaySlope {
    /// Gradient order whose norm was fitted.
    pub k: u32,
    pub slope: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Evaluated norm budgets for one trajectory. Subcritical specs fill the two
/// sup-type budgets; the critical spec fills the time-integrated one. Radius
/// and decay fits are attached by the analysis pass when available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub gamma: f64,
    pub t_end: f64,
    pub k_norm: Option<SupTrace>,
    pub g_norm: Option<SupTrace>,
    pub e1_norm: Option<f64>,
    pub radius_growth: Option<DecaySlope>,
    pub decay_slopes: Vec<DecaySlope>,
}

impl NormReport {
    pub fn empty(gamma: f64, t_end: f64) -> Self {
        Self {
            gamma,
            t_end,
            k_norm: None,
            g_norm: None,
            e1_norm: None,
            radius_growth: None,
            decay_slopes: Vec::new(),
        }
    }
}

fn sup_trace(times: &[f64], values: &[f64]) -> SupTrace {
    let mut best = SupTrace {
        value: f64::NEG_INFINITY,
        at_time: times[0],
    };
    for (&t, &v) in times.iter().zip(values.iter()) {
        if v > best.value {
            best = SupTrace { value: v, at_time: t };
        }
    }
    best
}

/// Evaluates the weighted budgets of a (typically weighted) trajectory:
/// subcritical
///   sup_t [ |th(t)|_{B^{s}_{p,q}} + t^{alpha_k/gamma} |th(t)|_{B^{s+alpha_k}_{p,q}} ]
///   sup_t [ |th(t)|_{L^{p1}} + t^{beta} |th(t)|_{L^{r}} ],
/// critical
///   per-block sup-in-t at regularity 2/p plus per-block time integral at
///   regularity 2/p + 1.
/// Per-snapshot values of the norm budgets. Subcritical rows carry the two
/// sup-type integrands; critical rows carry the running value of the
/// time-integrated budget over `[0, t]`, so the last row equals the full
/// budget.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BudgetRow {
    pub time: f64,
    pub k: Option<f64>,
    pub g: Option<f64>,
    pub e1: Option<f64>,
}

pub fn budget_series(
    traj: &TrajectoryRecord,
    spec: &WeightedNormSpec,
    frame: &LpFrame,
) -> QgResult<Vec<BudgetRow>> {
    let violations = spec.violations();
    if !violations.is_empty() {
        return Err(QgError::BadNormSpec { violations });
    }
    if traj.snapshots.is_empty() {
        return Err(QgError::InvalidParameter("empty trajectory".into()));
    }
    let p = Lp::P(spec.p);
    let q = Lq::P(spec.q);
    let mut rows = Vec::with_capacity(traj.snapshots.len());
    if spec.is_critical() {
        let base = BesovIndex::new(2.0 / spec.p, p, q)?;
        let smooth = BesovIndex::new(2.0 / spec.p + 1.0, p, q)?;
        for i in 0..traj.snapshots.len() {
            let times = &traj.times[..=i];
            let fields = &traj.snapshots[..=i];
            let sup_part = tilde_besov_norm(times, fields, frame, &base, Lq::Inf)?;
            let int_part = tilde_besov_norm(times, fields, frame, &smooth, Lq::P(1.0))?;
            rows.push(BudgetRow {
                time: traj.times[i],
                k: None,
                g: None,
                e1: Some(sup_part + int_part),
            });
        }
        return Ok(rows);
    }
    let base = BesovIndex::new(spec.s(), p, q)?;
    let extra = BesovIndex::new(spec.s() + spec.alpha_k, p, q)?;
    let wk = spec.alpha_k / spec.gamma;
    for (&t, th) in traj.times.iter().zip(traj.snapshots.iter()) {
        let b0 = besov_norm(th, frame, &base)?;
        let b1 = besov_norm(th, frame, &extra)?;
        let l_p1 = lp_norm(th, Lp::P(spec.p1()))?;
        let l_r = lp_norm(th, Lp::P(spec.r))?;
        rows.push(BudgetRow {
            time: t,
            k: Some(b0 + t.powf(wk) * b1),
            g: Some(l_p1 + t.powf(spec.beta()) * l_r),
            e1: None,
        });
    }
    Ok(rows)
}

pub fn k_g_e1_norms(
    traj: &TrajectoryRecord,
    spec: &WeightedNormSpec,
    frame: &LpFrame,
) -> QgResult<NormReport> {
    let rows = budget_series(traj, spec, frame)?;
    let t_end = *traj.times.last().unwrap();
    let mut report = NormReport::empty(spec.gamma, t_end);
    if spec.is_critical() {
        report.e1_norm = rows.last().and_then(|r| r.e1);
        return Ok(report);
    }
    let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let k_vals: Vec<f64> = rows.iter().map(|r| r.k.unwrap()).collect();
    let g_vals: Vec<f64> = rows.iter().map(|r| r.g.unwrap()).collect();
    report.k_norm = Some(sup_trace(&times, &k_vals));
    report.g_norm = Some(sup_trace(&times, &g_vals));
    Ok(report)
}

/// Weighted product `e^{a L1}( e^{-a L1} f . e^{-a L1} g )` with
/// `a = t^{1/gamma}` and `L1` the multiplier `|k_1| + |k_2|`. Every output
/// mode carries `e^{a(|k|_1 - |k'|_1 - |k''|_1)} <= 1`, so the operator never
/// amplifies a product mode.
pub fn bilinear_bt_direct(
    f: &SpectralField,
    g: &SpectralField,
    t: f64,
    cfg: &GevreyConfig,
) -> QgResult<SpectralField> {
    f.grid().check_same(g.grid())?;
    if t < 0.0 {
        return Err(QgError::NegativeTime { t });
    }
    let a = t.powf(1.0 / cfg.params.gamma);
    let grid = *f.grid();
    let damp = l1_weight(grid, -a, cfg.exp_cap)?;
    let grow = grown_weight(grid, a, cfg.exp_cap, t)?;
    let fd = damp.apply(f)?;
    let gd = damp.apply(g)?;
    // Explicit convolution: the growth factor below magnifies any FFT
    // round-off sitting in high modes past the identity tolerance.
    let prod = convolved_product(&fd, &gd)?;
    grow.apply(&prod)
}

/// One sign branch of the decomposition: per axis, the output quadrant, the
/// half-line carrying f, and the half-line carrying g.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub out_sign: [i8; 2],
    pub f_sign: [i8; 2],
    pub g_sign: [i8; 2],
}

/// All 64 sign assignments: 4 output quadrants times 16 input half-line
/// pairs. Branches whose inputs both oppose the output on some axis land
/// outside that output quadrant and contribute zero after projection.
pub fn branch_table() -> Vec<Branch> {
    let signs = [1i8, -1i8];
    let mut out = Vec::with_capacity(64);
    for &o1 in &signs {
        for &o2 in &signs {
            for &f1 in &signs {
                for &f2 in &signs {
                    for &g1 in &signs {
                        for &g2 in &signs {
                            out.push(Branch {
                                out_sign: [o1, o2],
                                f_sign: [f1, f2],
                                g_sign: [g1, g2],
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// 0/1 mask selecting the closed positive (`sign = +1`, including 0) or open
/// negative half-line of one frequency axis.
fn half_line_mask(grid: Grid2D, axis: usize, sign: i8) -> Array2<f64> {
    let n = grid.n();
    let mut m = Array2::zeros((n, n));
    for ((i, j), v) in m.indexed_iter_mut() {
        let k = if axis == 0 {
            grid.wavenumber(i)
        } else {
            grid.wavenumber(j)
        };
        let hit = if sign >= 0 { k >= 0 } else { k < 0 };
        if hit {
            *v = 1.0;
        }
    }
    m
}

fn damped_piece(
    grid: Grid2D,
    coeffs: &Array2<Complex64>,
    input_sign: [i8; 2],
    out_sign: [i8; 2],
    a: f64,
) -> Array2<Complex64> {
    let mut piece = coeffs.clone();
    for axis in 0..2 {
        let mask = half_line_mask(grid, axis, input_sign[axis]);
        for (c, m) in piece.iter_mut().zip(mask.iter()) {
            *c *= *m;
        }
        if input_sign[axis] != out_sign[axis] {
            // Anti-aligned axis: the weight cancellation leaves e^{-2a|k_i|}
            // acting on this input's own frequency.
            for ((i, j), c) in piece.indexed_iter_mut() {
                let k = if axis == 0 {
                    grid.wavenumber(i)
                } else {
                    grid.wavenumber(j)
                };
                *c *= (-2.0 * a * (k.abs() as f64) * grid.wavenumber_unit()).exp();
            }
        }
    }
    piece
}

fn branch_sum_raw(
    grid: Grid2D,
    fc: &Array2<Complex64>,
    gc: &Array2<Complex64>,
    a: f64,
) -> Array2<Complex64> {
    let n = grid.n();
    let alias = dealias_mask(&grid);
    let mut total: Array2<Complex64> = Array2::zeros((n, n));
    for branch in branch_table() {
        let fp = damped_piece(grid, fc, branch.f_sign, branch.out_sign, a);
        let gp = damped_piece(grid, gc, branch.g_sign, branch.out_sign, a);
        let prod = dealiased_product_raw(&grid, &fp, &gp);
        let m1 = half_line_mask(grid, 0, branch.out_sign[0]);
        let m2 = half_line_mask(grid, 1, branch.out_sign[1]);
        for (((t, p), a1), a2) in total
            .iter_mut()
            .zip(prod.iter())
            .zip(m1.iter())
            .zip(m2.iter())
        {
            *t += *p * (*a1 * *a2);
        }
    }
    for (t, m) in total.iter_mut().zip(alias.iter()) {
        *t *= *m;
    }
    total
}

/// Same operator as [`bilinear_bt_direct`], assembled from half-line
/// projections and per-axis damping instead of conjugation by the weight.
/// Never forms a growing exponential.
pub fn bilinear_bt_decomposed(
    f: &SpectralField,
    g: &SpectralField,
    t: f64,
    cfg: &GevreyConfig,
) -> QgResult<SpectralField> {
    f.grid().check_same(g.grid())?;
    if t < 0.0 {
        return Err(QgError::NegativeTime { t });
    }
    let a = t.powf(1.0 / cfg.params.gamma);
    let grid = *f.grid();
    let total = branch_sum_raw(grid, f.coeffs(), g.coeffs(), a);
    SpectralField::from_coeffs(grid, total)
}

/// Multiplier `e^{-a(|k_1|+|k_2|)}` with the concavity gap
/// `a = (t-s)^{1/gamma} + s^{1/gamma} - t^{1/gamma} >= 0`. Its kernel is a
/// product of one-dimensional positive unit-mass kernels, so it never
/// amplifies the sup norm.
pub fn concavity_gap(s: f64, t: f64, gamma: f64) -> QgResult<f64> {
    if !(0.0..=t).contains(&s) || t < 0.0 {
        return Err(QgError::InvalidParameter(format!(
            "need 0 <= s <= t, got s = {s}, t = {t}"
        )));
    }
    let e = 1.0 / gamma;
    Ok((t - s).powf(e) + s.powf(e) - t.powf(e))
}

pub fn concavity_gap_operator(
    f: &SpectralField,
    s: f64,
    t: f64,
    gamma: f64,
) -> QgResult<SpectralField> {
    let a = concavity_gap(s, t, gamma)?;
    if a == 0.0 {
        return Ok(f.clone());
    }
    let damp = l1_weight(*f.grid(), -a, EXP_CAP)?;
    damp.apply(f)
}

/// Largest lattice value of `exp(a^{1/gamma}|k|_1 - a|k|^{gamma}/2)`; finite
/// and attained at small `|k|` for gamma > 1, uniformly over a >= 0.
pub fn mixed_weight_symbol_max(grid: Grid2D, gamma: f64, a: f64) -> f64 {
    let unit = grid.wavenumber_unit();
    let lim = grid.dealias_limit();
    let root = a.powf(1.0 / gamma);
    let mut best = f64::NEG_INFINITY;
    for k1 in -lim..=lim {
        for k2 in -lim..=lim {
            let x1 = k1 as f64 * unit;
            let x2 = k2 as f64 * unit;
            let l1 = x1.abs() + x2.abs();
            let l2 = (x1 * x1 + x2 * x2).sqrt();
            best = best.max(root * l1 - 0.5 * a * l2.powf(gamma));
        }
    }
    best.exp()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedWeightReport {
    pub gamma: f64,
    /// Per a-value: (a, lattice symbol max, worst measured Lp amplification).
    pub rows: Vec<(f64, f64, f64)>,
    pub max_amplification: f64,
}

/// Applies `e^{a^{1/gamma} L1 - (a/2) Lambda^gamma}` to a bank of seeded
/// band-limited fields and records the worst `L^p` amplification for
/// p in {2, 4}. Uniform boundedness over `a` is the assertion target; the
/// caller compares against a frozen bound.
pub fn mixed_weight_amplification(
    grid: Grid2D,
    gamma: f64,
    a_values: &[f64],
    seeds: &[u64],
) -> QgResult<MixedWeightReport> {
    if gamma <= 1.0 {
        return Err(QgError::InvalidParameter(format!(
            "mixed weight needs gamma > 1, got {gamma}"
        )));
    }
    let bank: Vec<SpectralField> = seeds
        .iter()
        .map(|&s| SpectralField::random_annulus(grid, s, 1.0, grid.dealias_limit() as f64, 0.05, 1.0))
        .collect::<QgResult<_>>()?;
    let mut rows = Vec::with_capacity(a_values.len());
    let mut overall = 0.0f64;
    for &a in a_values {
        if a < 0.0 {
            return Err(QgError::InvalidParameter(format!(
                "weight parameter a = {a} must be nonnegative"
            )));
        }
        let root = a.powf(1.0 / gamma);
        let sym = MultiplierSymbol::from_fn(grid, format!("mixed({a})"), move |x1, x2| {
            let l1 = x1.abs() + x2.abs();
            let l2 = (x1 * x1 + x2 * x2).sqrt();
            Complex64::new((root * l1 - 0.5 * a * l2.powf(gamma)).exp(), 0.0)
        });
        let mut worst = 0.0f64;
        for f in &bank {
            let out = sym.apply(f)?;
            for p in [2.0, 4.0] {
                let denom = lp_norm(f, Lp::P(p))?.max(1e-300);
                worst = worst.max(lp_norm(&out, Lp::P(p))? / denom);
            }
        }
        rows.push((a, mixed_weight_symbol_max(grid, gamma, a), worst));
        overall = overall.max(worst);
    }
    Ok(MixedWeightReport {
        gamma,
        rows,
        max_amplification: overall,
    })
}
