//! Command implementations shared by the binary and the acceptance suite.

use std::path::{Path, PathBuf};

use serde::Serialize;

use aifsim::analysis::{build_r_q, is_hurwitz, max_real_eigenvalue, solve_lyapunov};
use aifsim::closed_form::{
    gene_openloop_variance, gene_variance_beta_limit, gene_variance_closed_form,
    maturation_openloop_variance, maturation_stability, maturation_variance_closed_form,
};
use aifsim::controller::{ergodicity_guard, nominal_input, GuardStatus};
use aifsim::rng::derive_seed;
use aifsim::{
    estimate_beta, invariant_report, run_ensemble, ClosedLoopNetwork, Error, FeedbackKind,
    ObservableLayout, Result, SeedPlan, TimeGrid, Track,
};

use crate::config::{preset_config, ExperimentConfig, SweepGrid};
use crate::figures::{self, FigureClass, FigureSpec};
use crate::output::{ensure_dir, write_manifest, CsvValue, CsvWriter, Manifest};
use crate::sweep::{run_sweep, SweepSettings};

/// Overrides from the command line, applied to the config before the
/// manifest is written so reruns see the resolved values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub paper_scale: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(n) = self.n {
            config.n = n;
        }
        if self.paper_scale {
            config.n = 1_000_000;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
    }
}

fn opt_float(v: Option<f64>) -> CsvValue {
    v.map_or(CsvValue::Empty, CsvValue::Float)
}

fn opt_bool(v: Option<bool>) -> CsvValue {
    v.map_or(CsvValue::Empty, CsvValue::Bool)
}

/// `simulate`: one closed-loop ensemble; trajectory-stats CSV + manifest.
pub fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(out_dir)?;
    let network = config.network()?;
    let loop_config = config.controller.resolve(&network)?;
    let closed = ClosedLoopNetwork::build(&network, loop_config)?;
    let layout = ObservableLayout::closed_loop(&closed, Track::Feedback);
    let grid = TimeGrid::uniform(config.t_end, config.grid_points)?;
    let x0 = closed.initial_state_with_z(&config.initial_counts(&network)?, config.z0.0, config.z0.1)?;

    let stats = run_ensemble(
        &closed.network,
        &x0,
        &grid,
        config.n,
        SeedPlan::new(config.seed),
        &layout,
    )?;

    // Resolve covariance pairs against the closed-loop species list.
    let pairs: Vec<(usize, usize, String)> = config
        .cov_pairs
        .iter()
        .map(|(a, b)| {
            let ia = closed
                .network
                .species_index(a)
                .ok_or_else(|| Error::Config(format!("cov pair names unknown species '{a}'")))?;
            let ib = closed
                .network
                .species_index(b)
                .ok_or_else(|| Error::Config(format!("cov pair names unknown species '{b}'")))?;
            Ok((ia, ib, format!("cov:{a}:{b}")))
        })
        .collect::<Result<_>>()?;

    let species: Vec<String> = closed
        .network
        .species()
        .iter()
        .map(|s| s.name.clone())
        .collect();
    let mut header = vec!["time".to_string()];
    header.extend(species.iter().map(|s| format!("mean:{s}")));
    header.extend(species.iter().map(|s| format!("var:{s}")));
    header.extend(pairs.iter().map(|(_, _, label)| label.clone()));

    let mut csv = CsvWriter::create(out_dir, "trajectory_stats.csv", &header)?;
    for (g, &t) in grid.points().iter().enumerate() {
        let acc = stats.point(g);
        let mut row = vec![CsvValue::Float(t)];
        for i in 0..species.len() {
            row.push(CsvValue::Float(acc.mean(i)));
        }
        for i in 0..species.len() {
            row.push(CsvValue::Float(acc.variance(i)));
        }
        for &(ia, ib, _) in &pairs {
            row.push(CsvValue::Float(acc.covariance(ia, ib)));
        }
        csv.write_row(&row)?;
    }
    let csv_path = csv.finish()?;

    let tail = stats.stationary(config.window)?;
    let beta = estimate_beta(&tail)?;
    let controlled = loop_config.controlled;
    println!(
        "simulate: n = {}, stationary mean[{}] = {:.4} (set-point {}), var = {:.4}, beta = {:.4}",
        config.n,
        config.controller.controlled,
        tail.mean(controlled),
        loop_config.set_point(),
        tail.variance(controlled),
        beta
    );
    if let Ok(lin) = network.linearize_propensities() {
        if let Ok(u_star) = nominal_input(
            &lin,
            loop_config.controlled,
            loop_config.actuated,
            loop_config.mu,
            loop_config.theta,
        ) {
            if let GuardStatus::Warning(msg) = ergodicity_guard(loop_config.feedback, u_star, loop_config.mu)
            {
                println!("warning: {msg}");
            }
        }
    }

    let mut manifest = Manifest::new("simulate", config)?;
    manifest.outputs = vec!["trajectory_stats.csv".into()];
    let manifest_path = write_manifest(out_dir, &manifest)?;
    Ok(vec![csv_path, manifest_path])
}

const SWEEP_HEADER: [&str; 13] = [
    "k",
    "Kp",
    "beta_hat",
    "mean_ssa",
    "var_ssa",
    "var_formula",
    "rel_err",
    "settling_time",
    "settled",
    "guard_ok",
    "diverging",
    "hurwitz",
    "error",
];

fn write_sweep_csv(
    out_dir: &Path,
    name: &str,
    cells: &[crate::sweep::SweepCell],
) -> Result<PathBuf> {
    let header: Vec<String> = SWEEP_HEADER.iter().map(|s| s.to_string()).collect();
    let mut csv = CsvWriter::create(out_dir, name, &header)?;
    for cell in cells {
        csv.write_row(&[
            CsvValue::Float(cell.k),
            CsvValue::Float(cell.kp),
            CsvValue::Float(cell.beta_hat),
            CsvValue::Float(cell.mean_ssa),
            CsvValue::Float(cell.var_ssa),
            opt_float(cell.var_formula),
            opt_float(cell.rel_err),
            opt_float(cell.settling_time),
            CsvValue::Bool(cell.settled),
            opt_bool(cell.guard_ok),
            CsvValue::Bool(cell.diverging),
            opt_bool(cell.hurwitz),
            cell.error
                .as_ref()
                .map_or(CsvValue::Empty, |e| CsvValue::Text(e.replace(',', ";"))),
        ])?;
    }
    csv.finish()
}

fn sweep_settings(config: &ExperimentConfig, kind: FeedbackKind) -> Result<SweepSettings> {
    Ok(SweepSettings {
        n: config.n,
        grid: TimeGrid::uniform(config.t_end, config.grid_points)?,
        base_seed: config.seed,
        window: config.window,
        band: config.band,
        kind,
    })
}

/// `sweep`: evaluate the (k, Kp) grid from the config.
pub fn cmd_sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let grid_spec = config
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep command needs a 'sweep' block".into()))?;
    ensure_dir(out_dir)?;
    let network = config.network()?;
    let base = config.controller.resolve(&network)?;
    let kind = match grid_spec.kind.as_str() {
        "on_off" => FeedbackKind::OnOff { kp: 0.0 },
        "hill" => FeedbackKind::Hill { kp: 0.0 },
        other => return Err(Error::Config(format!("unknown sweep kind '{other}'"))),
    };
    let settings = sweep_settings(config, kind)?;
    let cells = run_sweep(
        &network,
        base,
        &config.initial_counts(&network)?,
        config.z0,
        &settings,
        &grid_spec.k,
        &grid_spec.kp,
    );
    let n_failed = cells.iter().filter(|c| c.error.is_some()).count();
    println!(
        "sweep: {} cells ({} failed), n = {} per cell",
        cells.len(),
        n_failed,
        config.n
    );
    let csv_path = write_sweep_csv(out_dir, "sweep.csv", &cells)?;
    let mut manifest = Manifest::new("sweep", config)?;
    manifest.outputs = vec!["sweep.csv".into()];
    let manifest_path = write_manifest(out_dir, &manifest)?;
    Ok(vec![csv_path, manifest_path])
}

/// `invariants`: the four stationary identities of the antithetic motif.
pub fn cmd_invariants(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(out_dir)?;
    let network = config.network()?;
    let loop_config = config.controller.resolve(&network)?;
    let closed = ClosedLoopNetwork::build(&network, loop_config)?;
    let layout = ObservableLayout::closed_loop(&closed, Track::Invariants);
    let grid = TimeGrid::uniform(config.t_end, config.grid_points)?;
    let x0 = closed.initial_state_with_z(&config.initial_counts(&network)?, config.z0.0, config.z0.1)?;
    let stats = run_ensemble(
        &closed.network,
        &x0,
        &grid,
        config.n,
        SeedPlan::new(config.seed),
        &layout,
    )?;
    let tail = stats.stationary(config.window)?;
    let report = invariant_report(&tail, &closed.config)?;

    println!("{:<42} {:>12} {:>12} {:>10}", "invariant", "measured", "predicted", "rel.dev");
    for row in &report {
        println!(
            "{:<42} {:>12.6} {:>12.6} {:>9.2}%",
            row.name,
            row.measured,
            row.predicted,
            row.relative_deviation * 100.0
        );
    }

    let header: Vec<String> = ["invariant", "measured", "predicted", "relative_deviation"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut csv = CsvWriter::create(out_dir, "invariants.csv", &header)?;
    for row in &report {
        csv.write_row(&[
            CsvValue::Text(row.name.to_string()),
            CsvValue::Float(row.measured),
            CsvValue::Float(row.predicted),
            CsvValue::Float(row.relative_deviation),
        ])?;
    }
    let csv_path = csv.finish()?;
    let mut manifest = Manifest::new("invariants", config)?;
    manifest.outputs = vec!["invariants.csv".into()];
    let manifest_path = write_manifest(out_dir, &manifest)?;
    Ok(vec![csv_path, manifest_path])
}

#[derive(Serialize)]
struct AnalysisReport {
    model_hash: String,
    controller: serde_json::Value,
    beta: f64,
    u_star: f64,
    stationary_mean: Vec<f64>,
    r: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    eigenvalues_re: Vec<f64>,
    eigenvalues_im: Vec<f64>,
    hurwitz: bool,
    max_real_eigenvalue: f64,
    sigma: Option<Vec<Vec<f64>>>,
    variance_controlled: Option<f64>,
    closed_form: Option<serde_json::Value>,
    validity: serde_json::Value,
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// `analyze`: moment-closure report without any simulation.
pub fn cmd_analyze(config: &ExperimentConfig, beta: f64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(out_dir)?;
    let network = config.network()?;
    let loop_config = config.controller.resolve(&network)?;
    let lin = network.linearize_propensities().map_err(|_| {
        Error::Unsupported(
            "moment analysis applies only to unimolecular mass-action networks".into(),
        )
    })?;
    let matrices = build_r_q(
        &lin,
        loop_config.controlled,
        loop_config.actuated,
        loop_config.mu,
        loop_config.theta,
        loop_config.k,
        beta,
    )?;
    let hurwitz = is_hurwitz(&matrices.r)?;
    let max_re = max_real_eigenvalue(&matrices.r)?;
    let eigs = matrices.r.clone().complex_eigenvalues();
    let sigma = if hurwitz {
        Some(solve_lyapunov(&matrices.r, &matrices.q)?)
    } else {
        None
    };

    let mu = loop_config.mu;
    let theta = loop_config.theta;
    let k = loop_config.k;
    let closed_form = if let Some(p) = figures::gene_params_of(&network) {
        Some(serde_json::json!({
            "family": "gene-expression",
            "openloop_variance": gene_openloop_variance(&p, mu, theta),
            "closed_loop_variance": gene_variance_closed_form(&p, mu, theta, k, beta).ok(),
            "beta_limit": gene_variance_beta_limit(&p, mu, theta),
        }))
    } else {
        figures::maturation_params_of(&network).map(|p| {
            serde_json::json!({
                "family": "maturation",
                "openloop_variance": maturation_openloop_variance(&p, mu, theta),
                "closed_loop_variance": maturation_variance_closed_form(&p, mu, theta, k, beta).ok(),
                "stable": maturation_stability(&p, theta, k, beta),
            })
        })
    };

    // Deterministic PI mean trajectory over the configured grid: time, the
    // species means, the integrator state, and the output error.
    let grid = TimeGrid::uniform(config.t_end, config.grid_points)?;
    let x0: Vec<f64> = config
        .initial_counts(&network)?
        .iter()
        .map(|&c| c as f64)
        .collect();
    let sys = aifsim::meanode::LinearClosedLoop::new(
        &lin,
        loop_config.controlled,
        loop_config.actuated,
        loop_config.mu,
        loop_config.theta,
        loop_config.k,
        beta,
        &x0,
    )?;
    let states = aifsim::meanode::integrate_mean(&sys, grid.points())?;
    let mut header = vec!["time".to_string()];
    header.extend(network.species().iter().map(|s| format!("mean:{}", s.name)));
    header.push("integrator".into());
    header.push("error".into());
    let mut ode_csv = CsvWriter::create(out_dir, "mean_ode.csv", &header)?;
    for (g, &t) in grid.points().iter().enumerate() {
        let state = &states[g];
        let mut row = vec![CsvValue::Float(t)];
        for i in 0..network.dim() {
            row.push(CsvValue::Float(state[i]));
        }
        row.push(CsvValue::Float(state[network.dim()]));
        row.push(CsvValue::Float(sys.set_point - sys.output(state)));
        ode_csv.write_row(&row)?;
    }
    let ode_path = ode_csv.finish()?;

    let report = AnalysisReport {
        model_hash: crate::output::model_hash(&network)?,
        controller: serde_json::to_value(&config.controller)
            .map_err(|e| Error::Config(e.to_string()))?,
        beta,
        u_star: matrices.c,
        stationary_mean: matrices.stationary_mean.iter().copied().collect(),
        r: matrix_rows(&matrices.r),
        q: matrix_rows(&matrices.q),
        eigenvalues_re: eigs.iter().map(|e| e.re).collect(),
        eigenvalues_im: eigs.iter().map(|e| e.im).collect(),
        hurwitz,
        max_real_eigenvalue: max_re,
        sigma: sigma.as_ref().map(matrix_rows),
        variance_controlled: sigma
            .as_ref()
            .map(|s| s[(loop_config.controlled, loop_config.controlled)]),
        closed_form,
        validity: serde_json::json!({
            "unimolecular": true,
            "hurwitz": hurwitz,
        }),
    };
    let path = out_dir.join("analysis.json");
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;

    println!(
        "analyze: u* = {:.6}, hurwitz = {}, max Re(eig) = {:.6e}",
        matrices.c, hurwitz, max_re
    );
    if let Some(v) = report.variance_controlled {
        println!("analyze: moment-closure Var[{}] = {v:.6}", config.controller.controlled);
    }

    let mut manifest = Manifest::new("analyze", config)?;
    manifest.outputs = vec!["analysis.json".into(), "mean_ode.csv".into()];
    let manifest_path = write_manifest(out_dir, &manifest)?;
    Ok(vec![path, ode_path, manifest_path])
}

/// Feedback gains plotted in the trajectory figure classes.
const TRAJECTORY_GAINS: [f64; 5] = [0.0, 5.0, 10.0, 20.0, 30.0];

/// Default sweep grids for the surface figure classes.
const SWEEP_K: [f64; 4] = [1.0, 3.0, 5.0, 7.0];
const SWEEP_KP: [f64; 4] = [0.0, 5.0, 10.0, 20.0];

/// `reproduce <id>`: emit the dataset behind one figure class.
pub fn cmd_reproduce(id: &str, overrides: &Overrides, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if id == "help" || id == "list" {
        println!("figure catalog:");
        for entry in figures::CATALOG {
            println!("  {entry}");
        }
        return Ok(vec![]);
    }
    let Some(spec) = figures::parse_figure_id(id) else {
        let mut msg = format!("unknown figure id '{id}'; catalog:\n");
        for entry in figures::CATALOG {
            msg.push_str("  ");
            msg.push_str(entry);
            msg.push('\n');
        }
        return Err(Error::Config(msg));
    };
    let mut config = preset_config(spec.model)?;
    overrides.apply(&mut config);
    ensure_dir(out_dir)?;

    let paths = match spec.class {
        FigureClass::MeanTrajectories | FigureClass::VarianceTrajectories => {
            reproduce_trajectories(&spec, &config, out_dir)?
        }
        _ => {
            config.sweep = Some(SweepGrid {
                k: SWEEP_K.to_vec(),
                kp: SWEEP_KP.to_vec(),
                kind: spec.feedback_kind.to_string(),
            });
            let network = config.network()?;
            let base = config.controller.resolve(&network)?;
            let kind = match spec.feedback_kind {
                "hill" => FeedbackKind::Hill { kp: 0.0 },
                _ => FeedbackKind::OnOff { kp: 0.0 },
            };
            let settings = sweep_settings(&config, kind)?;
            let cells = run_sweep(
                &network,
                base,
                &config.initial_counts(&network)?,
                config.z0,
                &settings,
                &SWEEP_K,
                &SWEEP_KP,
            );
            let csv = write_sweep_csv(out_dir, &format!("{}.csv", spec.id), &cells)?;
            vec![csv]
        }
    };

    println!("reproduce {}: wrote {} file(s)", spec.id, paths.len());
    let mut manifest = Manifest::new(format!("reproduce {}", spec.id), &config)?;
    manifest.outputs = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let manifest_path = write_manifest(out_dir, &manifest)?;
    let mut all = paths;
    all.push(manifest_path);
    Ok(all)
}

/// Mean or variance trajectories of the controlled species for a list of
/// feedback gains at fixed k, one column per gain.
fn reproduce_trajectories(
    spec: &FigureSpec,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let network = config.network()?;
    let base = config.controller.resolve(&network)?;
    let grid = TimeGrid::uniform(config.t_end, config.grid_points)?;
    let x0_open = config.initial_counts(&network)?;

    let runs: Vec<(f64, aifsim::EnsembleStats)> = TRAJECTORY_GAINS
        .iter()
        .enumerate()
        .map(|(i, &kp)| {
            let feedback = match spec.feedback_kind {
                "hill" => FeedbackKind::Hill { kp },
                _ => FeedbackKind::OnOff { kp },
            };
            let closed = ClosedLoopNetwork::build(
                &network,
                aifsim::ClosedLoopConfig {
                    feedback,
                    ..base
                },
            )?;
            let layout = ObservableLayout::closed_loop(&closed, Track::Feedback);
            let x0 = closed.initial_state_with_z(&x0_open, config.z0.0, config.z0.1)?;
            let stats = run_ensemble(
                &closed.network,
                &x0,
                &grid,
                config.n,
                SeedPlan::new(derive_seed(config.seed, i as u64)),
                &layout,
            )?;
            Ok((kp, stats))
        })
        .collect::<Result<_>>()?;

    let mean_figure = matches!(spec.class, FigureClass::MeanTrajectories);
    let controlled = base.controlled;

    let mut header = vec!["time".to_string()];
    for (kp, _) in &runs {
        header.push(format!("{}[Kp={kp}]", if mean_figure { "mean" } else { "var" }));
    }
    // Reference line: set-point for means, constitutive variance when known.
    let reference = if mean_figure {
        Some(("set_point".to_string(), base.set_point()))
    } else if let Some(p) = figures::gene_params_of(&network) {
        Some(("var_constitutive".to_string(), gene_openloop_variance(&p, base.mu, base.theta)))
    } else {
        figures::maturation_params_of(&network).map(|p| {
            (
                "var_constitutive".to_string(),
                maturation_openloop_variance(&p, base.mu, base.theta),
            )
        })
    };
    if let Some((label, _)) = &reference {
        header.push(label.clone());
    }

    let mut csv = CsvWriter::create(out_dir, &format!("{}.csv", spec.id), &header)?;
    for (g, &t) in grid.points().iter().enumerate() {
        let mut row = vec![CsvValue::Float(t)];
        for (_, stats) in &runs {
            let acc = stats.point(g);
            row.push(CsvValue::Float(if mean_figure {
                acc.mean(controlled)
            } else {
                acc.variance(controlled)
            }));
        }
        if let Some((_, value)) = &reference {
            row.push(CsvValue::Float(*value));
        }
        csv.write_row(&row)?;
    }
    Ok(vec![csv.finish()?])
}
