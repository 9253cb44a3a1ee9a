//! Dyadic frequency decomposition, Besov-type norms, paraproducts.
//!
//! The radial profile `eta` equals 1 on [0, 3/4] and 0 on [4/3, inf) with a
//! smooth `exp(-1/x)` bridge, `psi(r) = eta(r/2) - eta(r)`. Masks sample
//! `psi(|k| / (S 2^j))` on the integer wavenumber lattice with base scale
//! `S = 0.7`, which puts the unit shell inside the plateau of annulus 0, so
//! the level-0 low-frequency cutoff captures exactly the mean mode. Dyadic
//! rescaling halves the profile argument exactly in floating point, so the
//! telescoping identities below hold to the last ulp.

use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::grid::Grid2D;
use crate::norms::{lp_norm, Lp};
use crate::product::dealiased_product;
use ndarray::Array2;
use std::io::Write;

pub const BASE_SCALE: f64 = 0.7;
pub const PARTITION_TOL: f64 = 1e-12;

/// `exp(-1/x)` for x > 0, else 0; the standard smooth cutoff seed.
fn ramp(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth profile: 1 on [0, 3/4], 0 on [4/3, inf).
pub fn eta(s: f64) -> f64 {
    const LO: f64 = 0.75;
    const HI: f64 = 4.0 / 3.0;
    if s <= LO {
        1.0
    } else if s >= HI {
        0.0
    } else {
        let u = (s - LO) / (HI - LO);
        let a = ramp(1.0 - u);
        let b = ramp(u);
        a / (a + b)
    }
}

/// Annulus profile `psi(r) = eta(r/2) - eta(r)`; supported on [3/4, 8/3],
/// identically 1 on [4/3, 3/2].
pub fn psi(r: f64) -> f64 {
    eta(r / 2.0) - eta(r)
}

#[derive(Debug, Clone)]
pub struct LpFrame {
    grid: Grid2D,
    j_min: i32,
    j_max: i32,
    /// psi_j masks for j = j_min..=j_max.
    masks: Vec<Array2<f64>>,
    /// chi mask at level j_min (captures the mean mode only).
    chi: Array2<f64>,
}

/// Scale denominator `S * 2^j` built by exact doubling.
fn scale_of(j: i32) -> f64 {
    let mut s = BASE_SCALE;
    if j >= 0 {
        for _ in 0..j {
            s *= 2.0;
        }
    } else {
        for _ in 0..(-j) {
            s /= 2.0;
        }
    }
    s
}

fn radial_mask(grid: &Grid2D, f: impl Fn(f64) -> f64) -> Array2<f64> {
    let n = grid.n();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let k1 = grid.wavenumber(i) as f64;
        let k2 = grid.wavenumber(j) as f64;
        f((k1 * k1 + k2 * k2).sqrt())
    })
}

pub fn build_frame(grid: Grid2D) -> QgResult<LpFrame> {
    let k_max = grid.dealias_limit();
    let j_max = (k_max as f64).log2().ceil() as i32;
    let levels = (j_max + 1) as usize;
    if levels < 3 {
        return Err(QgError::FrameTooSmall {
            n: grid.n(),
            levels,
        });
    }
    let masks = (0..=j_max)
        .map(|j| {
            let s = scale_of(j);
            radial_mask(&grid, |r| psi(r / s))
        })
        .collect();
    let chi = radial_mask(&grid, |r| eta(r / scale_of(0)));
    Ok(LpFrame {
        grid,
        j_min: 0,
        j_max,
        masks,
        chi,
    })
}

impl LpFrame {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn mask(&self, j: i32) -> &Array2<f64> {
        assert!(j >= self.j_min && j <= self.j_max, "level {j} out of range");
        &self.masks[(j - self.j_min) as usize]
    }

    pub fn mask_value(&self, j: i32, k1: i64, k2: i64) -> f64 {
        self.mask(j)[[self.grid.index_of(k1), self.grid.index_of(k2)]]
    }

    /// Frequency block `Delta_j f`.
    pub fn block(&self, f: &SpectralField, j: i32) -> QgResult<SpectralField> {
        self.grid.check_same(f.grid())?;
        let mut out = SpectralField::zeros(self.grid);
        let mask = self.mask(j);
        let coeffs = out.coeffs_mut();
        for ((idx, c), m) in coeffs.indexed_iter_mut().zip(mask.iter()) {
            *c = f.coeffs()[idx] * *m;
        }
        Ok(out)
    }

    /// Low-frequency cutoff `S_j f`: profile at scale `S 2^j`. Levels up to
    /// `j_max + 1` are meaningful (the top cutoff covers the whole band).
    pub fn low_cutoff(&self, f: &SpectralField, j: i32) -> QgResult<SpectralField> {
        self.grid.check_same(f.grid())?;
        assert!(j >= self.j_min && j <= self.j_max + 1, "level {j} out of range");
        let s = scale_of(j);
        let mask = radial_mask(&self.grid, |r| eta(r / s));
        let mut out = SpectralField::zeros(self.grid);
        let coeffs = out.coeffs_mut();
        for ((idx, c), m) in coeffs.indexed_iter_mut().zip(mask.iter()) {
            *c = f.coeffs()[idx] * *m;
        }
        Ok(out)
    }

    pub fn decompose(&self, f: &SpectralField) -> QgResult<DyadicDecomposition> {
        let low = self.low_cutoff(f, self.j_min)?;
        let blocks = self
            .levels()
            .map(|j| self.block(f, j))
            .collect::<QgResult<Vec<_>>>()?;
        Ok(DyadicDecomposition {
            j_min: self.j_min,
            low,
            blocks,
        })
    }

    /// Partition total `chi + sum_j psi_j` at a lattice point.
    pub fn partition_total(&self, k1: i64, k2: i64) -> f64 {
        let i = self.grid.index_of(k1);
        let j = self.grid.index_of(k2);
        let mut total = self.chi[[i, j]];
        for m in &self.masks {
            total += m[[i, j]];
        }
        total
    }

    /// Worst deviation of the partition total from 1 over the retained
    /// lattice.
    pub fn partition_max_deviation(&self) -> f64 {
        let lim = self.grid.dealias_limit();
        let mut worst = 0.0f64;
        for k1 in -lim..=lim {
            for k2 in -lim..=lim {
                worst = worst.max((self.partition_total(k1, k2) - 1.0).abs());
            }
        }
        worst
    }

    /// Radial profile rows `(j, |k|, value)` for every distinct retained
    /// lattice radius; the masks are exactly radial.
    pub fn export_masks_csv(&self, mut w: impl Write) -> QgResult<()> {
        writeln!(w, "j,k_radius,mask_value")?;
        let lim = self.grid.dealias_limit();
        let mut radii: Vec<f64> = Vec::new();
        for k1 in 0..=lim {
            for k2 in 0..=k1 {
                radii.push(((k1 * k1 + k2 * k2) as f64).sqrt());
            }
        }
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        for j in self.levels() {
            let s = scale_of(j);
            for &r in &radii {
                writeln!(w, "{},{:.17e},{:.17e}", j, r, psi(r / s))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DyadicDecomposition {
    j_min: i32,
    pub low: SpectralField,
    pub blocks: Vec<SpectralField>,
}

impl DyadicDecomposition {
    pub fn block(&self, j: i32) -> &SpectralField {
        &self.blocks[(j - self.j_min) as usize]
    }

    pub fn reconstruct(&self) -> SpectralField {
        let mut out = self.low.clone();
        for b in &self.blocks {
            out.add_scaled(b, 1.0);
        }
        out
    }
}

/// Summability exponent for the dyadic sum: finite `q >= 1` or sup.
pub type Lq = Lp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovIndex {
    pub s: f64,
    pub p: Lp,
    pub q: Lq,
}

impl BesovIndex {
    pub fn new(s: f64, p: Lp, q: Lq) -> QgResult<Self> {
        p.validate()?;
        q.validate()?;
        Ok(Self { s, p, q })
    }

    pub fn describe(&self) -> String {
        format!("B^{}_({},{})", self.s, self.p.describe(), self.q.describe())
    }
}

/// Homogeneous Besov norm over the frame's levels; the mean mode carries no
/// block weight and is excluded by construction.
pub fn besov_norm(f: &SpectralField, frame: &LpFrame, idx: &BesovIndex) -> QgResult<f64> {
    let terms = frame
        .levels()
        .map(|j| {
            let b = frame.block(f, j)?;
            let w = (2.0f64).powi(j).powf(idx.s);
            Ok(w * lp_norm(&b, idx.p)?)
        })
        .collect::<QgResult<Vec<f64>>>()?;
    Ok(sequence_norm(&terms, idx.q))
}

pub fn sequence_norm(terms: &[f64], q: Lq) -> f64 {
    match q {
        Lq::Inf => terms.iter().fold(0.0f64, |m, &x| m.max(x)),
        Lq::P(q) => terms.iter().map(|x| x.powf(q)).sum::<f64>().powf(1.0 / q),
    }
}

/// Time-averaged Besov norm: per level, the L^r-in-time norm of the block's
/// spatial norm (trapezoid over snapshot times; sup for r = inf), then the
/// weighted l^q sum over levels. Taking the time norm inside the dyadic sum
/// is what distinguishes this from the plain Bochner norm.
pub fn tilde_besov_norm(
    times: &[f64],
    fields: &[SpectralField],
    frame: &LpFrame,
    idx: &BesovIndex,
    r_time: Lq,
) -> QgResult<f64> {
    r_time.validate()?;
    if times.len() != fields.len() || times.is_empty() {
        return Err(QgError::InvalidParameter(
            "tilde norm needs matching, non-empty time and field lists".into(),
        ));
    }
    let mut terms = Vec::new();
    for j in frame.levels() {
        let series = fields
            .iter()
            .map(|f| lp_norm(&frame.block(f, j)?, idx.p))
            .collect::<QgResult<Vec<f64>>>()?;
        let time_norm = match r_time {
            Lq::Inf => series.iter().fold(0.0f64, |m, &x| m.max(x)),
            Lq::P(r) => trapezoid(times, &series.iter().map(|x| x.powf(r)).collect::<Vec<_>>())
                .powf(1.0 / r),
        };
        terms.push((2.0f64).powi(j).powf(idx.s) * time_norm);
    }
    Ok(sequence_norm(&terms, idx.q))
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mut acc = 0.0;
    for i in 1..xs.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    acc
}

#[derive(Debug, Clone)]
pub struct Paraproduct {
    /// sum_j S_{j-1} f . Delta_j g (low-high).
    pub t_fg: SpectralField,
    /// sum_j S_{j-1} g . Delta_j f (high-low).
    pub t_gf: SpectralField,
    /// sum_{|j-j'|<=1} Delta_j f . Delta_{j'} g (resonant).
    pub remainder: SpectralField,
}

impl Paraproduct {
    pub fn total(&self) -> SpectralField {
        let mut out = self.t_fg.clone();
        out.add_scaled(&self.t_gf, 1.0);
        out.add_scaled(&self.remainder, 1.0);
        out
    }
}

/// Bony splitting of the de-aliased product of mean-zero fields. The three
/// pieces partition the block-pair interactions exactly, so their sum equals
/// `dealiased_product(f, g)`.
pub fn paraproduct_split(
    f: &SpectralField,
    g: &SpectralField,
    frame: &LpFrame,
) -> QgResult<Paraproduct> {
    frame.grid().check_same(f.grid())?;
    frame.grid().check_same(g.grid())?;
    f.require_mean_zero(1e-13)?;
    g.require_mean_zero(1e-13)?;

    let fblocks: Vec<SpectralField> = frame
        .levels()
        .map(|j| frame.block(f, j))
        .collect::<QgResult<_>>()?;
    let gblocks: Vec<SpectralField> = frame
        .levels()
        .map(|j| frame.block(g, j))
        .collect::<QgResult<_>>()?;

    let mut t_fg = SpectralField::zeros(*frame.grid());
    let mut t_gf = SpectralField::zeros(*frame.grid());
    let mut remainder = SpectralField::zeros(*frame.grid());

    for j in frame.levels() {
        if j - 1 >= frame.j_min() {
            // S_{j-1} of a mean-zero field is the sum of blocks below j-1.
            let sf = frame.low_cutoff(f, j - 1)?;
            let sg = frame.low_cutoff(g, j - 1)?;
            let jj = (j - frame.j_min()) as usize;
            t_fg.add_scaled(&dealiased_product(&sf, &gblocks[jj])?, 1.0);
            t_gf.add_scaled(&dealiased_product(&sg, &fblocks[jj])?, 1.0);
        }
        for jp in (j - 1).max(frame.j_min())..=(j + 1).min(frame.j_max()) {
            let a = (j - frame.j_min()) as usize;
            let b = (jp - frame.j_min()) as usize;
            remainder.add_scaled(&dealiased_product(&fblocks[a], &gblocks[b])?, 1.0);
        }
    }
    Ok(Paraproduct {
        t_fg,
        t_gf,
        remainder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid() -> Grid2D {
        Grid2D::new(64).unwrap()
    }

    #[test]
    fn frame_levels_for_n64() {
        // k_max = 21 after truncation; ceil(log2 21) = 5.
        let frame = build_frame(grid()).unwrap();
        assert_eq!(frame.j_min(), 0);
        assert_eq!(frame.j_max(), 5);
    }

    #[test]
    fn frame_rejects_too_small_grids() {
        let g = Grid2D::new(8).unwrap();
        assert!(matches!(
            build_frame(g),
            Err(QgError::FrameTooSmall { .. })
        ));
        assert!(build_frame(Grid2D::new(16).unwrap()).is_ok());
    }

    #[test]
    fn partition_of_unity_on_retained_modes() {
        let frame = build_frame(grid()).unwrap();
        let g = grid();
        let lim = g.dealias_limit();
        let mut worst = 0.0f64;
        for k1 in -lim..=lim {
            for k2 in -lim..=lim {
                if (k1, k2) == (0, 0) {
                    continue;
                }
                worst = worst.max((frame.partition_total(k1, k2) - 1.0).abs());
            }
        }
        assert!(worst <= PARTITION_TOL, "partition deviation {worst:.3e}");
        // chi carries the mean alone.
        assert_eq!(frame.partition_total(0, 0), 1.0 + 0.0);
    }

    #[test]
    fn annulus_support_bounds() {
        let frame = build_frame(grid()).unwrap();
        let g = grid();
        let lim = g.dealias_limit();
        for j in frame.levels() {
            let lo = BASE_SCALE * 0.75 * (2.0f64).powi(j);
            let hi = BASE_SCALE * (8.0 / 3.0) * (2.0f64).powi(j);
            for k1 in -lim..=lim {
                for k2 in -lim..=lim {
                    let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
                    let v = frame.mask_value(j, k1, k2);
                    if r < lo - 1e-9 || r > hi + 1e-9 {
                        assert_eq!(v, 0.0, "psi_{j} at |k|={r}");
                    }
                    // Support sits inside the dyadic window [2^(j-1), 2^(j+1)].
                    if v > 0.0 {
                        assert!(r >= (2.0f64).powi(j - 1) - 1e-9);
                        assert!(r <= (2.0f64).powi(j + 1) + 1e-9);
                    }
                }
            }
        }
        // Spot value: psi_0 vanishes at |k| = 4.5, well past its annulus.
        assert_eq!(frame.mask_value(0, 4, 2), 0.0);
    }

    #[test]
    fn adjacent_only_overlap() {
        let frame = build_frame(grid()).unwrap();
        let g = grid();
        let lim = g.dealias_limit();
        for j in frame.levels() {
            for jp in frame.levels() {
                if (j - jp).abs() >= 2 {
                    for k1 in -lim..=lim {
                        for k2 in -lim..=lim {
                            let prod =
                                frame.mask_value(j, k1, k2) * frame.mask_value(jp, k1, k2);
                            assert_eq!(prod, 0.0, "levels {j},{jp} overlap at ({k1},{k2})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unit_shell_sits_in_block_zero_plateau() {
        let frame = build_frame(grid()).unwrap();
        assert_eq!(frame.mask_value(0, 1, 0), 1.0);
        assert_eq!(frame.mask_value(0, 0, -1), 1.0);
    }

    #[test]
    fn telescoping_cutoffs() {
        let frame = build_frame(grid()).unwrap();
        let f = SpectralField::random_annulus(grid(), 21, 1.0, 20.0, 0.0, 1.0).unwrap();
        for j in frame.levels() {
            let s_next = frame.low_cutoff(&f, j + 1).unwrap();
            let mut s_plus_block = frame.low_cutoff(&f, j).unwrap();
            s_plus_block.add_scaled(&frame.block(&f, j).unwrap(), 1.0);
            let dev = s_next.sub(&s_plus_block).max_abs_coeff();
            assert!(dev <= 1e-15 * f.max_abs_coeff(), "level {j}: {dev:.3e}");
        }
    }

    #[test]
    fn decomposition_reconstructs() {
        let frame = build_frame(grid()).unwrap();
        let f = SpectralField::random_annulus(grid(), 33, 1.0, 21.0, 0.0, 1.0).unwrap();
        let d = frame.decompose(&f).unwrap();
        assert!(d.reconstruct().rel_l2_distance(&f) < 1e-12);
    }

    #[test]
    fn besov_of_unit_mode_matches_l2() {
        // One active block with partition 1 there, s-weight 2^0: the B^0_{2,2}
        // norm must equal the L2 norm to high accuracy.
        let f = SpectralField::from_modes(grid(), &[(1, 0, Complex64::new(0.5, 0.0))]).unwrap();
        let frame = build_frame(grid()).unwrap();
        let idx = BesovIndex::new(0.0, Lp::P(2.0), Lq::P(2.0)).unwrap();
        let b = besov_norm(&f, &frame, &idx).unwrap();
        let l2 = f.l2_spectral();
        assert!(
            (b - l2).abs() / l2 < 1e-2,
            "besov {b} vs l2 {l2}"
        );
    }

    #[test]
    fn besov_scaling_weight_tracks_block_index() {
        // A mode at |k| ~ 2^j picks up the 2^{js} weight.
        let f = SpectralField::from_modes(grid(), &[(8, 0, Complex64::new(0.5, 0.0))]).unwrap();
        let frame = build_frame(grid()).unwrap();
        let idx0 = BesovIndex::new(0.0, Lp::P(2.0), Lq::Inf).unwrap();
        let idx1 = BesovIndex::new(1.0, Lp::P(2.0), Lq::Inf).unwrap();
        let b0 = besov_norm(&f, &frame, &idx0).unwrap();
        let b1 = besov_norm(&f, &frame, &idx1).unwrap();
        // |k| = 8 sits in the plateau of annulus 3 (8 / (0.7 * 8) = 1.43).
        assert_eq!(frame.mask_value(3, 8, 0), 1.0);
        assert!((b1 / b0 - 8.0).abs() < 1e-10);
    }

    #[test]
    fn tilde_norm_time_integral_of_decaying_mode() {
        // theta(t) = e^{-t} cos(x_1): block j = 0, L^1 in time over [0, 1]
        // gives (1 - e^{-1}) times the spatial norm, up to trapezoid error.
        let g = grid();
        let frame = build_frame(g).unwrap();
        let m = 400usize;
        let times: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let fields: Vec<SpectralField> = times
            .iter()
            .map(|&t| {
                SpectralField::from_modes(
                    g,
                    &[(1, 0, Complex64::new(0.5 * (-t as f64).exp(), 0.0))],
                )
                .unwrap()
            })
            .collect();
        let idx = BesovIndex::new(0.0, Lp::P(2.0), Lq::P(2.0)).unwrap();
        let tilde = tilde_besov_norm(&times, &fields, &frame, &idx, Lq::P(1.0)).unwrap();
        let spatial = fields[0].l2_spectral();
        let exact = spatial * (1.0 - (-1.0f64).exp());
        let h = 1.0 / m as f64;
        // e^{-t} has |f''| <= 1: composite trapezoid error bound h^2/12.
        let bound = spatial * h * h / 12.0 * 1.5;
        assert!(
            (tilde - exact).abs() <= bound,
            "tilde {tilde} vs exact {exact} (bound {bound:.2e})"
        );
        // r = inf reduces to the sup over times.
        let sup = tilde_besov_norm(&times, &fields, &frame, &idx, Lq::Inf).unwrap();
        assert!((sup - spatial).abs() / spatial < 1e-2);
    }

    #[test]
    fn paraproduct_sum_equals_dealiased_product() {
        let g = grid();
        let frame = build_frame(g).unwrap();
        let f = SpectralField::random_annulus(g, 101, 1.0, 18.0, 0.1, 1.0).unwrap();
        let h = SpectralField::random_annulus(g, 202, 1.0, 18.0, 0.1, 1.0).unwrap();
        let split = paraproduct_split(&f, &h, &frame).unwrap();
        let direct = dealiased_product(&f, &h).unwrap();
        let rel = split.total().rel_l2_distance(&direct);
        assert!(rel <= 1e-10, "splitting mismatch {rel:.3e}");
    }

    #[test]
    fn paraproduct_requires_mean_zero() {
        let g = grid();
        let frame = build_frame(g).unwrap();
        let mut f = SpectralField::random_annulus(g, 1, 1.0, 4.0, 0.0, 1.0).unwrap();
        f.coeffs_mut()[[0, 0]] = Complex64::new(0.5, 0.0);
        let h = SpectralField::random_annulus(g, 2, 1.0, 4.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            paraproduct_split(&f, &h, &frame),
            Err(QgError::MeanNotZero { .. })
        ));
    }

    #[test]
    fn mask_csv_has_header_and_rows() {
        let frame = build_frame(Grid2D::new(16).unwrap()).unwrap();
        let mut buf = Vec::new();
        frame.export_masks_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "j,k_radius,mask_value");
        assert!(text.lines().count() > 10);
    }
}
