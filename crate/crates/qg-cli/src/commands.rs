//! One function per subcommand. Configuration problems surface as
//! `Failure::Config` (exit 2), everything that goes wrong during a run as
//! `Failure::Runtime` (exit 1).

use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use qg_core::checks::{run_suite, Direction, SuiteReport, SUITE_NAMES};
use qg_core::dynamics::{monitors, simulate, TrajectoryRecord};
use qg_core::gevrey::{
    budget_series, gevrey_transform, k_g_e1_norms, GevreyConfig, NormReport, SupTrace,
    WeightedNormSpec,
};
use qg_core::lp::build_frame;
use qg_core::norms::{lp_norm, Lp};
use qg_core::picard::picard_solve;
use qg_core::radius::{decay_rate_fit, radius_growth_fit, radius_trajectory};
use qg_core::snapshot::{
    load_snapshot, load_trajectory, save_trajectory, SNAPSHOT_MAGIC, TRAJECTORY_MAGIC,
};
use qg_core::QgResult;

use crate::config::{self, RunConfig};
use crate::emit::{self, AnalyzeRow};
use crate::Failure;

fn write_canonical(cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(
        cfg.output_dir.join("canonical.toml"),
        config::canonical_toml(cfg),
    )?;
    Ok(())
}

pub fn run(config_path: &Path, dry_run: bool) -> Result<(), Failure> {
    let cfg = config::load_run_config(config_path)?;
    if dry_run {
        print!("{}", config::canonical_toml(&cfg));
        return Ok(());
    }
    let theta0 = cfg.initial_field()?;
    let solver = cfg.solver_config()?;
    let traj = simulate(&theta0, solver)?;
    write_canonical(&cfg)?;
    let traj_path = cfg.output_dir.join("trajectory.qgt");
    save_trajectory(&traj_path, &traj)?;
    fs::write(
        cfg.output_dir.join("diagnostics.csv"),
        emit::diagnostics_csv(&traj),
    )?;
    if !cfg.norms.is_empty() {
        let weighted = gevrey_transform(&traj, &cfg.gevrey_config()?)?;
        let frame = build_frame(traj.grid)?;
        let mut reports = Vec::new();
        for n in &cfg.norms {
            let spec =
                WeightedNormSpec::new(cfg.params().gamma, n.p, n.q, n.r, n.alpha_k)
                    .expect("validated at load");
            reports.push(k_g_e1_norms(&weighted, &spec, &frame)?);
        }
        fs::write(cfg.output_dir.join("norms.json"), emit::reports_json(&reports))?;
        for (n, r) in cfg.norms.iter().zip(reports.iter()) {
            match (&r.k_norm, r.e1_norm) {
                (Some(k), _) => println!(
                    "norm budget (p = {}, r = {}): k sup {:.6e}, g sup {:.6e}",
                    n.p,
                    n.r,
                    k.value,
                    r.g_norm.as_ref().map(|g| g.value).unwrap_or(f64::NAN)
                ),
                (None, Some(e1)) => {
                    println!("norm budget (p = {}): e1 {:.6e}", n.p, e1)
                }
                _ => {}
            }
        }
    }
    let m = monitors(&traj);
    let last = traj.diag.last().expect("run recorded diagnostics");
    println!(
        "run complete: t = {:.6}, {} snapshots, {} steps",
        traj.times.last().unwrap(),
        traj.snapshots.len(),
        traj.diag.len().saturating_sub(1)
    );
    println!(
        "final norms: l2 {:.6e}, linf {:.6e}, h1 {:.6e}",
        last.l2, last.linf, last.h1
    );
    println!(
        "monitors: balance {:.3e}, principle {:.3e}, mean drift {:.3e}",
        m.max_balance_residual, m.max_principle_violation, m.mean_drift
    );
    println!("wrote {}", traj_path.display());
    Ok(())
}

pub fn picard(config_path: &Path, dry_run: bool) -> Result<(), Failure> {
    let cfg = config::load_run_config(config_path)?;
    if dry_run {
        print!("{}", config::canonical_toml(&cfg));
        return Ok(());
    }
    let theta0 = cfg.initial_field()?;
    let pcfg = cfg.picard_config()?;
    let sol = picard_solve(&theta0, pcfg)?;
    write_canonical(&cfg)?;
    let traj = TrajectoryRecord {
        grid: *theta0.grid(),
        params: cfg.params(),
        times: sol.times.clone(),
        snapshots: sol.states.clone(),
        diag: Vec::new(),
    };
    let traj_path = cfg.output_dir.join("picard.qgt");
    save_trajectory(&traj_path, &traj)?;
    println!(
        "picard: {} sweeps over {} nodes, converged = {}",
        sol.iterations,
        sol.times.len(),
        sol.converged
    );
    for (i, r) in sol.residual_history.iter().enumerate() {
        println!("  sweep {}: residual {:.6e}", i + 1, r);
    }
    let ratios = sol.contraction_ratios();
    if !ratios.is_empty() {
        let worst = ratios.iter().fold(0.0f64, |m, &x| m.max(x));
        println!("worst contraction ratio: {worst:.4}");
    }
    println!("wrote {}", traj_path.display());
    if !sol.converged {
        return Err(Failure::Runtime(format!(
            "fixed-point iteration did not converge within {} sweeps \
             (last residual {:.3e}); shorten the horizon or refine the nodes",
            sol.iterations,
            sol.residual_history.last().copied().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

pub fn analyze(traj_path: &Path, spec_path: &Path, out_dir: &Path) -> Result<(), Failure> {
    let spec = config::load_analysis_spec(spec_path)?;
    let traj = load_trajectory(traj_path)?;
    let wspec = WeightedNormSpec::new(
        traj.params.gamma,
        spec.norm.p,
        spec.norm.q,
        spec.norm.r,
        spec.norm.alpha_k,
    )
    .map_err(|e| Failure::Config(e.to_string()))?;
    let frame = build_frame(traj.grid)?;
    let measured = match &spec.gevrey {
        Some(g) => {
            let gcfg = GevreyConfig::new(traj.params, g.alpha)
                .map_err(|e| Failure::Config(e.to_string()))?;
            gevrey_transform(&traj, &gcfg)?
        }
        None => traj.clone(),
    };
    let budgets = budget_series(&measured, &wspec, &frame)?;

    let mut report = NormReport::empty(wspec.gamma, *traj.times.last().unwrap());
    if wspec.is_critical() {
        report.e1_norm = budgets.last().and_then(|r| r.e1);
    } else {
        let sup = |pick: fn(&qg_core::gevrey::BudgetRow) -> Option<f64>| {
            budgets
                .iter()
                .filter_map(|r| pick(r).map(|v| (r.time, v)))
                .fold(None::<SupTrace>, |best, (t, v)| match best {
                    Some(b) if b.value >= v => Some(b),
                    _ => Some(SupTrace { value: v, at_time: t }),
                })
        };
        report.k_norm = sup(|r| r.k);
        report.g_norm = sup(|r| r.g);
    }

    // Radius and decay read the raw spectrum; weighting would double-count.
    let estimates = radius_trajectory(&traj);
    if let Some([lo, hi]) = spec.radius_window {
        report.radius_growth = Some(radius_growth_fit(&estimates, (lo, hi))?);
    }
    if let Some([lo, hi]) = spec.decay_window {
        for &k in &spec.decay_orders {
            let fit = decay_rate_fit(&traj, k, (lo, hi))?;
            if fit.exponential_dominates {
                println!(
                    "note: order-{k} decay looks exponential on [{lo}, {hi}]; \
                     the power-law slope is not meaningful"
                );
            }
            report.decay_slopes.push(fit.slope);
        }
    }

    fs::create_dir_all(out_dir)?;
    let json_path = out_dir.join("report.json");
    fs::write(&json_path, emit::report_json(&report))?;
    let rows: Vec<AnalyzeRow> = estimates
        .iter()
        .zip(budgets.iter())
        .map(|(e, b)| AnalyzeRow {
            time: e.time,
            radius: e.radius,
            fit_quality: e.fit_quality,
            k_norm: b.k,
            g_norm: b.g,
            e1_norm: b.e1,
        })
        .collect();
    let csv_path = out_dir.join("report.csv");
    fs::write(&csv_path, emit::analyze_csv(&rows))?;

    if let Some(k) = &report.k_norm {
        println!("k budget: sup {:.6e} at t = {:.4}", k.value, k.at_time);
    }
    if let Some(g) = &report.g_norm {
        println!("g budget: sup {:.6e} at t = {:.4}", g.value, g.at_time);
    }
    if let Some(e1) = report.e1_norm {
        println!("e1 budget: {e1:.6e}");
    }
    if let Some(r) = &report.radius_growth {
        println!(
            "radius growth: slope {:.4} (r2 {:.4}) on [{}, {}]",
            r.slope, r.r_squared, r.window.0, r.window.1
        );
    }
    for s in &report.decay_slopes {
        println!(
            "order-{} decay slope: {:.4} (r2 {:.4})",
            s.k, s.slope, s.r_squared
        );
    }
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

fn worker_count(jobs: usize) -> Result<usize, Failure> {
    let cap = match std::env::var("QG_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| {
                Failure::Config(format!("QG_THREADS = {s:?} must be a positive integer"))
            })?,
        Err(std::env::VarError::NotPresent) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
        Err(e) => return Err(Failure::Config(format!("QG_THREADS: {e}"))),
    };
    Ok(cap.min(jobs).max(1))
}

fn run_suites_parallel(
    suites: &[String],
    seed: u64,
    overrides: &[(String, f64)],
    threads: usize,
) -> Vec<QgResult<SuiteReport>> {
    let next = AtomicUsize::new(0);
    let collected: Mutex<Vec<(usize, QgResult<SuiteReport>)>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= suites.len() {
                    break;
                }
                let r = run_suite(&suites[i], seed, overrides);
                collected.lock().unwrap().push((i, r));
            });
        }
    });
    let mut results = collected.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

pub fn verify(suites: &[String], seed: u64, tols: &[String]) -> Result<(), Failure> {
    let mut overrides = Vec::new();
    for t in tols {
        let (name, value) = t.split_once('=').ok_or_else(|| {
            Failure::Config(format!(
                "tolerance override {t:?} must look like check.name=value"
            ))
        })?;
        let v: f64 = value.parse().map_err(|_| {
            Failure::Config(format!("tolerance override {t:?} has a non-numeric value"))
        })?;
        overrides.push((name.to_string(), v));
    }
    for s in suites {
        if !SUITE_NAMES.contains(&s.as_str()) {
            return Err(Failure::Config(format!(
                "unknown verification suite {s:?}; expected one of {SUITE_NAMES:?}"
            )));
        }
    }
    let threads = worker_count(suites.len())?;
    let mut all_pass = true;
    for result in run_suites_parallel(suites, seed, &overrides, threads) {
        // Remaining error paths are override mistakes: unknown check name or
        // a value that loosens the default.
        let report = result.map_err(|e| Failure::Config(e.to_string()))?;
        let mut failed = 0usize;
        for c in &report.results {
            let dir = match c.direction {
                Direction::AtMost => "at most",
                Direction::AtLeast => "at least",
            };
            let tag = if c.pass { "PASS" } else { "FAIL" };
            println!(
                "{}: measured {:.6e} ({dir} {:.3e}) {tag}",
                c.name, c.measured, c.threshold
            );
            if !c.pass {
                failed += 1;
            }
        }
        if failed == 0 {
            println!("suite {}: ok ({} checks)", report.suite, report.results.len());
        } else {
            println!(
                "suite {}: FAILED ({failed} of {} checks)",
                report.suite,
                report.results.len()
            );
            all_pass = false;
        }
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Runtime("verification failures listed above".into()))
    }
}

pub fn inspect(file: &Path) -> Result<(), Failure> {
    let mut magic = [0u8; 4];
    fs::File::open(file)?.read_exact(&mut magic)?;
    if &magic == SNAPSHOT_MAGIC {
        let (field, time, gamma) = load_snapshot(file)?;
        let grid = field.grid();
        let active = field.coeffs().iter().filter(|c| c.norm() > 0.0).count();
        println!("snapshot {}", file.display());
        println!(
            "  grid n = {}, box length = {:.6}, dealias limit = {}",
            grid.n(),
            grid.box_length(),
            grid.dealias_limit()
        );
        println!("  time = {:.6}, gamma = {gamma}", time);
        println!(
            "  l2 = {:.6e}, linf = {:.6e}, mean = {:.3e}, active modes = {active}",
            lp_norm(&field, Lp::P(2.0))?,
            lp_norm(&field, Lp::Inf)?,
            field.mean().abs()
        );
        let est = qg_core::radius::analyticity_radius_at(&field, time);
        println!(
            "  spectral decay rate = {:.6e} (r2 {:.4}, reliable = {})",
            est.radius, est.fit_quality, est.reliable
        );
    } else if &magic == TRAJECTORY_MAGIC {
        let traj = load_trajectory(file)?;
        println!("trajectory {}", file.display());
        println!(
            "  grid n = {}, box length = {:.6}",
            traj.grid.n(),
            traj.grid.box_length()
        );
        println!(
            "  gamma = {}, kappa = {}, {} snapshots on [{:.6}, {:.6}]",
            traj.params.gamma,
            traj.params.kappa,
            traj.snapshots.len(),
            traj.times.first().unwrap(),
            traj.times.last().unwrap()
        );
        println!("  {:>12} {:>14} {:>14}", "time", "l2", "linf");
        for (t, f) in traj.times.iter().zip(traj.snapshots.iter()) {
            println!(
                "  {:>12.6} {:>14.6e} {:>14.6e}",
                t,
                lp_norm(f, Lp::P(2.0))?,
                lp_norm(f, Lp::Inf)?
            );
        }
    } else {
        return Err(Failure::Runtime(format!(
            "unrecognized file magic {magic:?}; expected a snapshot or trajectory file"
        )));
    }
    Ok(())
}
