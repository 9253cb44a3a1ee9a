//! Scalar kernel and inequality checks: the singular time-convolution
//! integral against its Beta closed form, decay-kernel L^p scaling, and the
//! half-integral sup bound on a seeded function bank.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QgError, QgResult};

const MAX_DEPTH: u32 = 48;

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> QgResult<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(QgError::InvalidParameter(format!(
            "integrand not finite inside [{a}, {b}]"
        )));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let refined = left + right;
    if (refined - whole).abs() <= 15.0 * tol || (b - a).abs() < 1e-15 {
        return Ok(refined + (refined - whole) / 15.0);
    }
    if depth == 0 {
        return Err(QgError::InvalidParameter(format!(
            "quadrature failed to converge on [{a}, {b}]"
        )));
    }
    let l = adapt(f, a, fa, lm, flm, m, fm, left, tol / 2.0, depth - 1)?;
    let r = adapt(f, m, fm, rm, frm, b, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson quadrature with Richardson correction. `tol` is an
/// absolute error target; the integrand must stay finite on the interval.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> QgResult<f64> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(QgError::InvalidParameter(format!(
            "bad quadrature interval [{a}, {b}]"
        )));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(QgError::InvalidParameter(format!(
            "integrand not finite on [{a}, {b}]"
        )));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adapt(f, a, fa, m, fm, b, fb, whole, tol, MAX_DEPTH)
}

/// `B(x, y)` through log-gamma.
pub fn beta_function(x: f64, y: f64) -> f64 {
    (libm::lgamma(x) + libm::lgamma(y) - libm::lgamma(x + y)).exp()
}

/// `int_0^t (t-s)^{-a} s^{-b} ds` for `a, b` in (0,1), by splitting at `t/2`
/// and absorbing each endpoint singularity into a power substitution:
/// with `u = s^{1-b}` the lower half becomes `1/(1-b) int (t - u^{1/(1-b)})^{-a} du`,
/// and symmetrically for the upper half.
pub fn singular_time_integral(a: f64, b: f64, t: f64, tol: f64) -> QgResult<f64> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(QgError::InvalidParameter(format!(
                "exponent {name} = {v} outside (0, 1)"
            )));
        }
    }
    if !(t > 0.0) {
        return Err(QgError::InvalidParameter(format!("time {t} must be positive")));
    }
    let half = 0.5 * t;
    let lower = {
        let pow = 1.0 - b;
        let up = half.powf(pow);
        let f = move |u: f64| (t - u.powf(1.0 / pow)).powf(-a) / pow;
        adaptive_simpson(&f, 0.0, up, tol)?
    };
    let upper = {
        let pow = 1.0 - a;
        let up = half.powf(pow);
        let f = move |w: f64| (t - w.powf(1.0 / pow)).powf(-b) / pow;
        adaptive_simpson(&f, 0.0, up, tol)?
    };
    Ok(lower + upper)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BetaRow {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub quadrature: f64,
    pub closed_form: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaIdentityReport {
    pub rows: Vec<BetaRow>,
    pub max_ratio_deviation: f64,
}

/// Quadrature vs `B(1-a, 1-b) t^{1-a-b}` over a grid of exponent pairs.
pub fn beta_identity_check(
    a_values: &[f64],
    b_values: &[f64],
    t_values: &[f64],
) -> QgResult<BetaIdentityReport> {
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &a in a_values {
        for &b in b_values {
            for &t in t_values {
                let closed = beta_function(1.0 - a, 1.0 - b) * t.powf(1.0 - a - b);
                let quad = singular_time_integral(a, b, t, 1e-10 * closed.abs())?;
                let ratio = quad / closed;
                worst = worst.max((ratio - 1.0).abs());
                rows.push(BetaRow {
                    a,
                    b,
                    t,
                    quadrature: quad,
                    closed_form: closed,
                    ratio,
                });
            }
        }
    }
    Ok(BetaIdentityReport {
        rows,
        max_ratio_deviation: worst,
    })
}

/// Radial profile of the 2D decay kernel `t / (2 pi (t^2 + |x|^2)^{3/2})`.
fn decay_kernel(t: f64, r: f64) -> f64 {
    t / (2.0 * std::f64::consts::PI * (t * t + r * r).powf(1.5))
}

/// Integrates `f` over `[0, big_r]` in panels `[0, t], [t, 2t], [2t, 4t]...`.
/// A single pass over the whole range samples too coarsely to see the peak
/// near `r ~ t` and would accept 0.
fn radial_panels<F: Fn(f64) -> f64>(f: &F, t: f64, big_r: f64, tol: f64) -> QgResult<f64> {
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = t;
    while lo < big_r {
        total += adaptive_simpson(f, lo, hi.min(big_r), tol)?;
        lo = hi;
        hi *= 2.0;
    }
    Ok(total)
}

/// L^p norm of the decay kernel by radial quadrature; the `p = 1` mass is
/// completed with the exact tail `t / sqrt(t^2 + R^2)`.
pub fn decay_kernel_lp(t: f64, p: f64, tol: f64) -> QgResult<f64> {
    if !(t > 0.0 && p >= 1.0) {
        return Err(QgError::InvalidParameter(format!(
            "need t > 0 and p >= 1, got t = {t}, p = {p}"
        )));
    }
    let big_r = 2048.0 * t;
    let f = move |r: f64| decay_kernel(t, r).powf(p) * 2.0 * std::f64::consts::PI * r;
    let body = radial_panels(&f, t, big_r, tol)?;
    // Exact tail of int_R^inf r (t^2+r^2)^{-3p/2} dr.
    let tail = (t / (2.0 * std::f64::consts::PI)).powf(p)
        * 2.0
        * std::f64::consts::PI
        * (t * t + big_r * big_r).powf(1.0 - 1.5 * p)
        / (3.0 * p - 2.0);
    Ok((body + tail).powf(1.0 / p))
}

/// L^p norm of the conjugate kernel `x_1 / (2 pi (t^2 + |x|^2)^{3/2})`,
/// splitting off the angular factor `int |cos|^p`.
pub fn conjugate_kernel_lp(t: f64, p: f64, tol: f64) -> QgResult<f64> {
    if !(t > 0.0 && p > 1.0) {
        return Err(QgError::InvalidParameter(format!(
            "conjugate kernel is L^p only for p > 1, got p = {p} (t = {t})"
        )));
    }
    let angular = adaptive_simpson(
        &|phi: f64| phi.cos().abs().powf(p),
        0.0,
        2.0 * std::f64::consts::PI,
        tol.max(1e-13),
    )?;
    let big_r = 2048.0 * t;
    let f = move |r: f64| r.powf(p + 1.0) * (t * t + r * r).powf(-1.5 * p);
    let radial = radial_panels(&f, t, big_r, tol * t.powf(2.0 - 2.0 * p))?;
    Ok((angular * radial).powf(1.0 / p) / (2.0 * std::f64::consts::PI))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentFit {
    pub p: f64,
    pub fitted: f64,
    pub expected: f64,
    pub rel_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelScalingReport {
    pub plain: Vec<ExponentFit>,
    pub conjugate: Vec<ExponentFit>,
    /// (t, measured L^1 mass) pairs; the kernel integrates to 1.
    pub unit_mass: Vec<(f64, f64)>,
}

fn fit_exponent(ts: &[f64], vals: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    sxy / sxx
}

/// Fits `log |kernel|_{L^p}` against `log t` over `t_values` and compares to
/// the dimensional prediction `-2(1 - 1/p)` for both kernel families.
pub fn kernel_scaling_check(t_values: &[f64], p_values: &[f64]) -> QgResult<KernelScalingReport> {
    let mut plain = Vec::new();
    let mut conjugate = Vec::new();
    for &p in p_values {
        let expected = -2.0 * (1.0 - 1.0 / p);
        let vals: Vec<f64> = t_values
            .iter()
            .map(|&t| decay_kernel_lp(t, p, 1e-11))
            .collect::<QgResult<_>>()?;
        let fitted = fit_exponent(t_values, &vals);
        plain.push(ExponentFit {
            p,
            fitted,
            expected,
            rel_deviation: ((fitted - expected) / expected).abs(),
        });
        if p > 1.0 {
            let vals: Vec<f64> = t_values
                .iter()
                .map(|&t| conjugate_kernel_lp(t, p, 1e-11))
                .collect::<QgResult<_>>()?;
            let fitted = fit_exponent(t_values, &vals);
            conjugate.push(ExponentFit {
                p,
                fitted,
                expected,
                rel_deviation: ((fitted - expected) / expected).abs(),
            });
        }
    }
    let unit_mass = t_values
        .iter()
        .map(|&t| decay_kernel_lp(t, 1.0, 1e-12).map(|v| (t, v)))
        .collect::<QgResult<_>>()?;
    Ok(KernelScalingReport {
        plain,
        conjugate,
        unit_mass,
    })
}

/// One seeded trigonometric test function on `[0, span]` with its exact L^2
/// norm; the half-integral check applies the kernel `(t-s)^{-1/2}` to it.
struct TrigBank {
    cos_coef: Vec<f64>,
    sin_coef: Vec<f64>,
    span: f64,
}

impl TrigBank {
    fn seeded(seed: u64, modes: usize, span: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cos_coef = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sin_coef = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self {
            cos_coef,
            sin_coef,
            span,
        }
    }

    fn eval(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (m, (&c, &d)) in self.cos_coef.iter().zip(self.sin_coef.iter()).enumerate() {
            let w = std::f64::consts::PI * (m + 1) as f64 * s / self.span;
            acc += c * w.cos() + d * w.sin();
        }
        acc
    }

    fn l2_norm(&self) -> f64 {
        // Orthogonality on [0, span] leaves the diagonal terms only.
        let sq: f64 = self
            .cos_coef
            .iter()
            .zip(self.sin_coef.iter())
            .map(|(c, d)| c * c + d * d)
            .sum();
        (self.span / 2.0 * sq).sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfIntegralReport {
    /// Per seed: sup over t of |int_0^t (t-s)^{-1/2} a(s) ds| / |a|_{L^2}.
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
}

/// Evaluates the half-integral on a seeded bank, removing the kernel
/// singularity with `u = sqrt(t - s)`:
/// `int_0^t (t-s)^{-1/2} a(s) ds = 2 int_0^{sqrt t} a(t - u^2) du`.
pub fn half_integral_check(seeds: &[u64], span: f64) -> QgResult<HalfIntegralReport> {
    let mut ratios = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let bank = TrigBank::seeded(seed, 20, span);
        let norm = bank.l2_norm();
        let mut sup = 0.0f64;
        for i in 1..=20 {
            let t = span * i as f64 / 20.0;
            let f = |u: f64| bank.eval(t - u * u);
            let val = 2.0 * adaptive_simpson(&f, 0.0, t.sqrt(), 1e-9)?;
            sup = sup.max(val.abs());
        }
        ratios.push(sup / norm);
    }
    let sup_ratio = ratios.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok(HalfIntegralReport { ratios, sup_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_exact_on_polynomials() {
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-12);
        let v = adaptive_simpson(&f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn simpson_refuses_singular_integrand() {
        assert!(adaptive_simpson(&|x: f64| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn beta_half_half_is_pi() {
        assert_relative_eq!(
            beta_function(0.5, 0.5),
            std::f64::consts::PI,
            max_relative = 1e-12
        );
        let v = singular_time_integral(0.5, 0.5, 1.0, 1e-10).unwrap();
        assert_relative_eq!(v, std::f64::consts::PI, max_relative = 1e-8);
    }

    #[test]
    fn beta_identity_on_grid() {
        let pts = [0.25, 0.5, 0.75];
        let report = beta_identity_check(&pts, &pts, &[0.5, 2.0]).unwrap();
        assert_eq!(report.rows.len(), 18);
        assert!(
            report.max_ratio_deviation <= 1e-6,
            "worst {:.3e}",
            report.max_ratio_deviation
        );
    }

    #[test]
    fn decay_kernel_has_unit_mass() {
        for t in [0.5, 1.0, 4.0] {
            let mass = decay_kernel_lp(t, 1.0, 1e-12).unwrap();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn decay_kernel_l2_matches_closed_form() {
        // |P_t|_2^2 = (2 pi)^{-1}/4 t^{-2}.
        let t = 1.0f64;
        let expect = (1.0 / (8.0 * std::f64::consts::PI)).sqrt();
        let v = decay_kernel_lp(t, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, expect, max_relative = 1e-8);
    }

    #[test]
    fn scaling_exponents_match_dimensional_count() {
        let report = kernel_scaling_check(&[0.5, 1.0, 2.0, 4.0], &[2.0, 4.0]).unwrap();
        for fit in report.plain.iter().chain(report.conjugate.iter()) {
            assert!(
                fit.rel_deviation <= 0.02,
                "p = {}: fitted {} vs {}",
                fit.p,
                fit.fitted,
                fit.expected
            );
        }
        for (_, mass) in report.unit_mass {
            assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn half_integral_ratios_are_finite_and_stable() {
        let report = half_integral_check(&[1, 2, 3], 10.0).unwrap();
        assert_eq!(report.ratios.len(), 3);
        assert!(report.sup_ratio.is_finite() && report.sup_ratio > 0.0);
        let again = half_integral_check(&[1, 2, 3], 10.0).unwrap();
        assert_eq!(report.sup_ratio, again.sup_ratio);
    }
}
