//! TOML configuration for runs and analyses.
//!
//! Loading reports every constraint violation at once, not just the first.
//! `canonical_toml` re-emits a loaded config with defaults materialized;
//! load -> dump -> load is a fixed point.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qg_core::dynamics::SolverConfig;
use qg_core::field::SpectralField;
use qg_core::gevrey::{GevreyConfig, WeightedNormSpec};
use qg_core::grid::Grid2D;
use qg_core::params::PhysicalParams;
use qg_core::picard::PicardConfig;

use crate::Failure;

fn default_box_length() -> f64 {
    std::f64::consts::TAU
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Seed for the random initial-field bank.
    pub seed: u64,
    pub solver: SolverSection,
    pub initial: InitialSection,
    pub gevrey: GevreySection,
    #[serde(default)]
    pub norms: Vec<NormSection>,
    #[serde(default)]
    pub picard: PicardSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub gamma: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot cadence in steps.
    pub snapshot_every: usize,
}

/// Initial state: either a seeded random band (`kind = "annulus"`) or an
/// explicit coefficient list (`kind = "modes"`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: String,
    pub n: usize,
    #[serde(default = "default_box_length")]
    pub box_length: f64,
    /// Annulus band in lattice-index modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<f64>,
    /// Spectral slope of the annulus profile; 0 is flat.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<f64>,
    /// Sup-norm the random state is rescaled to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linf: Option<f64>,
    /// Rows `[k1, k2, re, im]` with integral wavevector components; the
    /// conjugate mode at `-k` is filled in automatically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<[f64; 4]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GevreySection {
    /// Weight growth rate of e^{alpha t^{1/gamma} |k|_1}.
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub alpha_k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    pub n_nodes: usize,
    /// Contraction horizon; defaults to the solver horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            n_nodes: 65,
            t_end: None,
        }
    }
}

impl RunConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let s = &self.solver;
        let params = match PhysicalParams::new(s.gamma, s.kappa) {
            Ok(p) => Some(p),
            Err(e) => {
                out.push(format!("solver: {e}"));
                None
            }
        };
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            out.push(format!("solver: dt = {} must be positive and finite", s.dt));
        }
        if !(s.t_end >= s.dt && s.t_end.is_finite()) {
            out.push(format!(
                "solver: t_end = {} must be finite and at least dt",
                s.t_end
            ));
        }
        if s.snapshot_every == 0 {
            out.push("solver: snapshot_every must be at least 1".into());
        }

        let i = &self.initial;
        let grid = match Grid2D::with_box_length(i.n, i.box_length) {
            Ok(g) => Some(g),
            Err(e) => {
                out.push(format!("initial: {e}"));
                None
            }
        };
        match i.kind.as_str() {
            "annulus" => {
                if i.modes.is_some() {
                    out.push("initial: modes list is only valid with kind = \"modes\"".into());
                }
                match (i.k_min, i.k_max) {
                    (Some(lo), Some(hi)) => {
                        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                            out.push(format!(
                                "initial: annulus band [{lo}, {hi}] must satisfy 0 < k_min <= k_max"
                            ));
                        }
                    }
                    _ => out.push("initial: kind = \"annulus\" requires k_min and k_max".into()),
                }
                if let Some(t) = i.tilt {
                    if !(t >= 0.0 && t.is_finite()) {
                        out.push(format!("initial: tilt = {t} must be nonnegative"));
                    }
                }
                match i.linf {
                    Some(a) if a > 0.0 && a.is_finite() => {}
                    Some(a) => out.push(format!("initial: linf = {a} must be positive")),
                    None => out.push("initial: kind = \"annulus\" requires linf".into()),
                }
            }
            "modes" => {
                for (name, val) in [
                    ("k_min", i.k_min),
                    ("k_max", i.k_max),
                    ("tilt", i.tilt),
                    ("linf", i.linf),
                ] {
                    if val.is_some() {
                        out.push(format!(
                            "initial: {name} is only valid with kind = \"annulus\""
                        ));
                    }
                }
                match &i.modes {
                    None => out.push("initial: kind = \"modes\" requires a modes list".into()),
                    Some(list) if list.is_empty() => {
                        out.push("initial: modes list must not be empty".into())
                    }
                    Some(list) => {
                        for (idx, row) in list.iter().enumerate() {
                            if row[0].fract() != 0.0 || row[1].fract() != 0.0 {
                                out.push(format!(
                                    "initial: modes[{idx}] wavevector ({}, {}) must be integral",
                                    row[0], row[1]
                                ));
                                continue;
                            }
                            let (k1, k2) = (row[0] as i64, row[1] as i64);
                            if k1 == 0 && k2 == 0 {
                                out.push(format!(
                                    "initial: modes[{idx}] sets the mean mode; states are mean-free"
                                ));
                            } else if let Some(g) = grid {
                                if !g.keeps(k1, k2) {
                                    out.push(format!(
                                        "initial: modes[{idx}] wavevector ({k1}, {k2}) falls \
                                         outside the dealiased lattice (limit {})",
                                        g.dealias_limit()
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            other => out.push(format!(
                "initial: unknown kind {other:?}; expected \"annulus\" or \"modes\""
            )),
        }

        if let Some(p) = params {
            if let Err(e) = p.validate_weight_rate(self.gevrey.alpha) {
                out.push(format!("gevrey: {e}"));
            }
            for (idx, n) in self.norms.iter().enumerate() {
                let spec = WeightedNormSpec {
                    gamma: p.gamma,
                    p: n.p,
                    q: n.q,
                    r: n.r,
                    alpha_k: n.alpha_k,
                };
                for v in spec.violations() {
                    out.push(format!("norms[{idx}]: {v}"));
                }
            }
        }

        if self.picard.n_nodes < 2 {
            out.push(format!(
                "picard: n_nodes = {} must be at least 2",
                self.picard.n_nodes
            ));
        }
        if let Some(t) = self.picard.t_end {
            if !(t > 0.0 && t.is_finite()) {
                out.push(format!("picard: t_end = {t} must be positive"));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            out.push("output_dir must not be empty".into());
        }
        out
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams::new(self.solver.gamma, self.solver.kappa).expect("validated at load")
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D::with_box_length(self.initial.n, self.initial.box_length)
            .expect("validated at load")
    }

    pub fn initial_field(&self) -> Result<SpectralField, Failure> {
        let grid = self.grid();
        let i = &self.initial;
        match i.kind.as_str() {
            "annulus" => Ok(SpectralField::random_annulus(
                grid,
                self.seed,
                i.k_min.unwrap(),
                i.k_max.unwrap(),
                i.tilt.unwrap_or(0.0),
                i.linf.unwrap(),
            )?),
            "modes" => {
                let modes: Vec<(i64, i64, Complex64)> = i
                    .modes
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|row| (row[0] as i64, row[1] as i64, Complex64::new(row[2], row[3])))
                    .collect();
                Ok(SpectralField::from_modes(grid, &modes)?)
            }
            _ => unreachable!("validated at load"),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig, Failure> {
        SolverConfig::new(
            self.params(),
            self.solver.dt,
            self.solver.t_end,
            self.solver.snapshot_every,
        )
        .map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn gevrey_config(&self) -> Result<GevreyConfig, Failure> {
        GevreyConfig::new(self.params(), self.gevrey.alpha)
            .map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn picard_config(&self) -> Result<PicardConfig, Failure> {
        PicardConfig::new(
            self.params(),
            self.picard.t_end.unwrap_or(self.solver.t_end),
            self.picard.n_nodes,
        )
        .map_err(|e| Failure::Config(e.to_string()))
    }
}

/// Analysis settings for `qg analyze`. The norm indices are checked against
/// the trajectory's gamma when the trajectory is loaded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Time window for the log-log fit of the spectral radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_window: Option<[f64; 2]>,
    /// Time window for gradient-norm decay fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_window: Option<[f64; 2]>,
    /// Gradient orders fitted inside decay_window.
    #[serde(default = "default_decay_orders")]
    pub decay_orders: Vec<u32>,
    /// When present, the trajectory is weighted before norms are evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gevrey: Option<GevreySection>,
    pub norm: NormSection,
}

fn default_decay_orders() -> Vec<u32> {
    vec![1]
}

impl AnalysisSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, w) in [
            ("radius_window", self.radius_window),
            ("decay_window", self.decay_window),
        ] {
            if let Some([lo, hi]) = w {
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    out.push(format!("{name} = [{lo}, {hi}] must satisfy 0 <= lo < hi"));
                }
            }
        }
        if self.decay_orders.is_empty() {
            out.push("decay_orders must not be empty".into());
        }
        if let Some(g) = &self.gevrey {
            if !(g.alpha > 0.0 && g.alpha.is_finite()) {
                out.push(format!("gevrey: alpha = {} must be positive", g.alpha));
            }
        }
        out
    }
}

fn parse<T: serde::de::DeserializeOwned>(
    text: &str,
    violations: impl Fn(&T) -> Vec<String>,
) -> Result<T, Failure> {
    let cfg: T =
        toml::from_str(text).map_err(|e| Failure::Config(format!("config parse error: {e}")))?;
    let found = violations(&cfg);
    if found.is_empty() {
        Ok(cfg)
    } else {
        let mut msg = String::from("invalid configuration:");
        for v in &found {
            msg.push_str("\n  - ");
            msg.push_str(v);
        }
        Err(Failure::Config(msg))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, Failure> {
    parse(&read(path)?, RunConfig::violations)
}

pub fn load_analysis_spec(path: &Path) -> Result<AnalysisSpec, Failure> {
    parse(&read(path)?, AnalysisSpec::violations)
}

pub fn canonical_toml(cfg: &RunConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}
