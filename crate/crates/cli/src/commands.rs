use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use lpwave::analysis::{
    check_global_decay, convergence_study, default_fit_window, fit_decay_rate,
    global_damping_bound, trajectory_energies, ProblemSpec,
};
use lpwave::energy::{
    energy_cal_ep, energy_dissipation, energy_ep, energy_overbar, multiplier_ratio,
    solve_elliptic_multiplier, PairMode,
};
use lpwave::ineq::{run_suite, SuiteConfig};
use lpwave::riemann::{evolve, reconstruct_z, Trajectory};
use lpwave::{build_cutoffs, make_grid, sample_damping, DampingSpec, InitialData, PExponent};

use crate::config::{describe, Command, RunConfig};
use crate::plot::plot_energy_csv;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Core(#[from] lpwave::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for anything the user can fix in the invocation, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use lpwave::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(
                E::InvalidArgument(_)
                | E::HypothesisViolation(_)
                | E::InvalidGeometry(_)
                | E::InvalidData(_)
                | E::OutOfRegime(_)
                | E::InvalidUse(_)
                | E::InvalidGrid(_),
            ) => 2,
            _ => 1,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Energy must not grow by more than this between recorded samples.
pub const MONOTONE_TOL: f64 = 1e-10;

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    log::info!("running {} (seed {})", cfg.command, cfg.seed);
    let mut out = match cfg.command {
        Command::Simulate => simulate(cfg)?,
        Command::Decay => decay(cfg)?,
        Command::GlobalBound => global_bound(cfg)?,
        Command::OracleCompare => oracle_compare(cfg)?,
        Command::VerifyInequalities => verify_inequalities(cfg)?,
        Command::Plot => plot(cfg)?,
    };
    let meta = cfg.out_dir.join("run.meta");
    write_text(&meta, &describe(cfg))?;
    out.files.push(meta);
    Ok(out)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    write_text(path, &String::from_utf8_lossy(&bytes))
}

fn exponents(cfg: &RunConfig) -> Result<Vec<PExponent>, CliError> {
    Ok(cfg
        .p_list
        .iter()
        .map(|&p| PExponent::new(p))
        .collect::<Result<Vec<_>, _>>()?)
}

fn trajectory(cfg: &RunConfig, damping: &DampingSpec) -> Result<Trajectory, CliError> {
    let grid = make_grid(cfg.n_cells)?;
    let profile = sample_damping(damping, &grid)?;
    let data = InitialData::from_tag(&cfg.initial)?;
    Ok(evolve(&data, &profile, &grid, cfg.t_end, cfg.record_stride)?)
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ps = exponents(cfg)?;
    let traj = trajectory(cfg, &cfg.damping)?;
    let (grid, damping) = (&traj.grid, &traj.damping);

    let per_p: Vec<(Vec<Vec<String>>, f64)> = ps
        .par_iter()
        .map(|&p| {
            let mut rows = Vec::with_capacity(traj.states.len());
            let mut prev: Option<f64> = None;
            let mut worst = 0.0f64;
            for s in &traj.states {
                let e = energy_ep(s, grid, p);
                if let Some(e0) = prev {
                    let inc = if e0 > 0.0 { (e - e0) / e0 } else { e - e0 };
                    worst = worst.max(inc);
                }
                prev = Some(e);
                rows.push(vec![
                    s.t.to_string(),
                    p.p().to_string(),
                    e.to_string(),
                    energy_cal_ep(s, grid, p).to_string(),
                    energy_dissipation(s, damping, grid, p).to_string(),
                    energy_overbar(s, damping, grid, p, cfg.overbar).to_string(),
                ]);
            }
            (rows, worst)
        })
        .collect();

    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut passed = true;
    for (&p, (r, worst)) in ps.iter().zip(per_p) {
        rows.extend(r);
        let ok = worst <= MONOTONE_TOL;
        passed &= ok;
        summary.push_str(&format!(
            "p = {}: worst relative increase {:.3e} ({})\n",
            p.p(),
            worst,
            if ok { "non-increasing" } else { "INCREASES" }
        ));
    }
    let path = cfg.out_dir.join("energy.csv");
    write_csv(&path, &["t", "p", "E_p", "calE_p", "dissipation", "overbar"], &rows)?;
    let mut files = vec![path];

    if let Some([e0, e1, e2]) = cfg.cutoffs {
        let omega = match cfg.damping {
            DampingSpec::SmoothBump { omega, .. } | DampingSpec::IndicatorSmoothed { omega, .. } => omega,
            _ => lpwave::Interval::new(0.0, 1.0),
        };
        let cut = build_cutoffs(e0, e1, e2, omega)?;
        let mut mrows = Vec::new();
        for &p in &ps {
            let modes: &[PairMode] = if p.p() > 1.0 && p.p() < 2.0 {
                &[PairMode::Power, PairMode::Modified]
            } else {
                &[PairMode::Power]
            };
            for s in &traj.states {
                let z = reconstruct_z(s, grid).z;
                let e = energy_ep(s, grid, p);
                for &mode in modes {
                    let v = solve_elliptic_multiplier(&z, &cut, grid, p, mode);
                    let ratio = if e > 0.0 { multiplier_ratio(&v, grid, p, e) } else { 0.0 };
                    mrows.push(vec![
                        s.t.to_string(),
                        p.p().to_string(),
                        format!("{mode:?}").to_lowercase(),
                        ratio.to_string(),
                    ]);
                }
            }
        }
        let mpath = cfg.out_dir.join("multiplier.csv");
        write_csv(&mpath, &["t", "p", "mode", "ratio"], &mrows)?;
        files.push(mpath);
    }

    Ok(Outcome {
        passed,
        files,
        summary,
    })
}

fn decay(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ps = exponents(cfg)?;
    let traj = trajectory(cfg, &cfg.damping)?;
    let window = cfg.decay_window.unwrap_or_else(|| default_fit_window(cfg.t_end));
    let fits = ps
        .par_iter()
        .map(|&p| {
            let (t, e) = trajectory_energies(&traj, p);
            fit_decay_rate(&t, &e, window).map(|f| (p, f))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut passed = true;
    for (p, f) in &fits {
        passed &= f.gamma_hat > 0.0;
        summary.push_str(&format!(
            "p = {}: gamma_hat = {:.6}, r^2 = {:.6} on {}\n",
            p.p(),
            f.gamma_hat,
            f.r_squared,
            f.window
        ));
        rows.push(vec![
            p.p().to_string(),
            f.gamma_hat.to_string(),
            f.intercept.to_string(),
            f.r_squared.to_string(),
            f.window.lo.to_string(),
            f.window.hi.to_string(),
            f.samples.to_string(),
        ]);
    }
    let path = cfg.out_dir.join("decay.csv");
    write_csv(
        &path,
        &["p", "gamma_hat", "intercept", "r_squared", "window_lo", "window_hi", "samples"],
        &rows,
    )?;
    Ok(Outcome {
        passed,
        files: vec![path],
        summary,
    })
}

fn global_bound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ps = exponents(cfg)?;
    if cfg.alphas.is_empty() {
        return Err(CliError::Usage(
            "global-bound needs damping.alpha (or constant damping)".into(),
        ));
    }
    // refuse out-of-regime values before simulating anything
    for &alpha in &cfg.alphas {
        for &p in &ps {
            global_damping_bound(p, alpha, 0.0, 1.0)?;
        }
    }
    let jobs: Vec<(f64, PExponent)> = cfg
        .alphas
        .iter()
        .flat_map(|&a| ps.iter().map(move |&p| (a, p)))
        .collect();
    let trajs = cfg
        .alphas
        .par_iter()
        .map(|&alpha| trajectory(cfg, &DampingSpec::constant_alpha(alpha)).map(|t| (alpha, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let reports = jobs
        .par_iter()
        .map(|&(alpha, p)| {
            let traj = &trajs.iter().find(|(a, _)| *a == alpha).expect("simulated").1;
            check_global_decay(traj, p, alpha)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut passed = true;
    for r in &reports {
        passed &= r.bound_satisfied;
        summary.push_str(&format!(
            "alpha = {}, p = {}: M_alpha = {:.6}, worst E/bound = {:.6} ({})\n",
            r.alpha,
            r.p,
            r.m_alpha,
            r.worst_margin,
            if r.bound_satisfied { "ok" } else { "VIOLATED" }
        ));
        rows.push(vec![
            r.alpha.to_string(),
            r.p.to_string(),
            r.k_p.to_string(),
            r.m_alpha.to_string(),
            r.worst_margin.to_string(),
            r.bound_satisfied.to_string(),
            r.samples.to_string(),
        ]);
    }
    let path = cfg.out_dir.join("global_bound.csv");
    write_csv(
        &path,
        &["alpha", "p", "K_p", "M_alpha", "worst_margin", "bound_satisfied", "samples"],
        &rows,
    )?;
    Ok(Outcome {
        passed,
        files: vec![path],
        summary,
    })
}

/// Order demanded from the last refinement of a damped convergence study.
pub const MIN_ORDER: f64 = 1.8;
/// Error accepted outright (free evolution is reproduced to roundoff).
pub const EXACT_TOL: f64 = 1e-10;

fn oracle_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut problem = ProblemSpec::new(
        InitialData::from_tag(&cfg.initial)?,
        cfg.damping.clone(),
        cfg.oracle_t_end,
    );
    problem.picard_tol = cfg.oracle_tol;
    let table = convergence_study(&problem, &cfg.oracle_n)?;
    let exact = table.iter().all(|r| r.error <= EXACT_TOL);
    let last_order = table.last().and_then(|r| r.order);
    let passed = exact || last_order.is_some_and(|o| o >= MIN_ORDER);
    let mut summary = String::new();
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            summary.push_str(&format!(
                "N = {}: error {:.3e}, order {}\n",
                r.n,
                r.error,
                r.order.map_or("-".into(), |o| format!("{o:.3}"))
            ));
            vec![
                r.n.to_string(),
                r.error.to_string(),
                r.order.map(|o| o.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let path = cfg.out_dir.join("convergence.csv");
    write_csv(&path, &["n", "error", "order"], &rows)?;
    Ok(Outcome {
        passed,
        files: vec![path],
        summary,
    })
}

fn verify_inequalities(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let suite = SuiteConfig {
        seed: cfg.seed,
        ..cfg.inequalities.clone()
    };
    let table = run_suite(&suite)?;
    let passed = table.iter().all(|r| r.passed());
    let mut summary = String::new();
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            summary.push_str(&format!(
                "{:<20} p = {:<5} C_min = {:<12} violations {}/{}\n",
                r.inequality,
                r.p,
                r.c_min.map_or("-".into(), |c| format!("{c:.6}")),
                r.violations,
                r.samples
            ));
            vec![
                r.inequality.clone(),
                r.p.to_string(),
                r.c_min.map(|c| c.to_string()).unwrap_or_default(),
                r.samples.to_string(),
                r.violations.to_string(),
                r.max_excess.to_string(),
            ]
        })
        .collect();
    let path = cfg.out_dir.join("inequalities.csv");
    write_csv(
        &path,
        &["inequality", "p", "c_min", "samples", "violations", "max_slack"],
        &rows,
    )?;
    Ok(Outcome {
        passed,
        files: vec![path],
        summary,
    })
}

fn plot(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let input = cfg
        .plot_input
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("energy.csv"));
    let output = cfg
        .plot_output
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("energy.svg"));
    let text = fs::read_to_string(&input).map_err(io_err(&input))?;
    let (svg, n_series) = plot_energy_csv(&text)?;
    write_text(&output, &svg)?;
    Ok(Outcome {
        passed: true,
        files: vec![output],
        summary: format!("{n_series} series from {}\n", input.display()),
    })
}
