//! Browser bindings: interactive closed-loop ensembles for the gene
//! expression preset, the closed-form variance-vs-gain curve, and the
//! maturation stability map. All functions take and return JSON strings so
//! the page needs no generated TypeScript glue.

use serde::Deserialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use aifsim::analysis::{build_r_q, is_hurwitz, integrate_covariance_ode, solve_lyapunov};
use aifsim::closed_form::{
    gene_openloop_variance, gene_variance_beta_limit, gene_variance_closed_form,
    maturation_stability, maturation_variance_closed_form,
};
use aifsim::controller::{ergodicity_guard, nominal_input, GuardStatus};
use aifsim::meanode::{integrate_mean, pi_zero, LinearClosedLoop};
use aifsim::presets::{self, GENE_PARAMS, MATURATION_PARAMS};
use aifsim::{
    estimate_beta, run_ensemble, ClosedLoopConfig, ClosedLoopNetwork, FeedbackKind,
    ObservableLayout, SeedPlan, TimeGrid, Track,
};

#[wasm_bindgen(start)]
pub fn start() {
    console_error_panic_hook::set_once();
}

fn err_json(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

#[derive(Deserialize)]
struct EnsembleParams {
    k: f64,
    #[serde(default)]
    kp: f64,
    /// "none", "on_off", or "hill"
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_t_end")]
    t_end: f64,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default)]
    seed: u64,
}

fn default_kind() -> String {
    "on_off".into()
}
fn default_n() -> usize {
    500
}
fn default_t_end() -> f64 {
    20.0
}
fn default_points() -> usize {
    121
}

/// Run a gene-expression closed-loop ensemble and return mean/variance
/// trajectories of the protein together with the deterministic mean and
/// transient moment-closure overlays.
#[wasm_bindgen]
pub fn simulate_gene_ensemble(params_json: &str) -> String {
    let params: EnsembleParams = match serde_json::from_str(params_json) {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let n = params.n.clamp(2, 20_000);
    let points = params.points.clamp(2, 2_001);

    let feedback = match params.kind.as_str() {
        "none" => FeedbackKind::None,
        "on_off" => FeedbackKind::OnOff { kp: params.kp },
        "hill" => FeedbackKind::Hill { kp: params.kp },
        other => return err_json(format!("unknown feedback kind '{other}'")),
    };
    let network = presets::gene_network(&GENE_PARAMS);
    let config = ClosedLoopConfig::new(presets::MU, presets::THETA, presets::ETA, params.k, 1)
        .with_feedback(feedback);
    let closed = match ClosedLoopNetwork::build(&network, config) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let grid = match TimeGrid::uniform(params.t_end, points) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let layout = ObservableLayout::closed_loop(&closed, Track::Feedback);
    let x0 = closed.initial_state(&[0, 0]).unwrap();
    let stats = match run_ensemble(&closed.network, &x0, &grid, n, SeedPlan::new(params.seed), &layout)
    {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };

    let mean = stats.mean_series(1);
    let var = stats.variance_series(1);
    let tail = match stats.stationary(0.25) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let beta_hat = estimate_beta(&tail).unwrap_or(0.0);

    let lin = network.linearize_propensities().unwrap();
    let sys = LinearClosedLoop::new(&lin, 1, 0, presets::MU, presets::THETA, params.k, beta_hat, &[0.0, 0.0])
        .unwrap();
    let ode_mean: Vec<f64> = match integrate_mean(&sys, grid.points()) {
        Ok(states) => states.iter().map(|x| x[1]).collect(),
        Err(_) => vec![],
    };

    // Transient moment closure at the measured beta (valid only when R is
    // Hurwitz; the overlay is omitted otherwise).
    let (ode_var, formula_var, hurwitz) =
        match build_r_q(&lin, 1, 0, presets::MU, presets::THETA, params.k, beta_hat) {
            Ok(m) => match is_hurwitz(&m.r) {
                Ok(true) => {
                    let zero = nalgebra_zeros(3);
                    let path = integrate_covariance_ode(&m.r, &m.q, &zero, grid.points(), 0.02)
                        .unwrap_or_default();
                    let series: Vec<f64> = path.iter().map(|s| s[(1, 1)]).collect();
                    let stationary = solve_lyapunov(&m.r, &m.q).ok().map(|s| s[(1, 1)]);
                    (series, stationary, true)
                }
                _ => (vec![], None, false),
            },
            Err(_) => (vec![], None, false),
        };

    let u_star = nominal_input(&lin, 1, 0, presets::MU, presets::THETA).unwrap();
    let guard = match ergodicity_guard(feedback, u_star, presets::MU) {
        GuardStatus::Ok => None,
        GuardStatus::Warning(msg) => Some(msg),
    };

    json!({
        "times": grid.points(),
        "mean": mean,
        "var": var,
        "ode_mean": ode_mean,
        "ode_var": ode_var,
        "set_point": presets::MU / presets::THETA,
        "var_constitutive": gene_openloop_variance(&GENE_PARAMS, presets::MU, presets::THETA),
        "beta_hat": beta_hat,
        "formula_var": formula_var,
        "hurwitz": hurwitz,
        "pi_zero": pi_zero(params.k, beta_hat, presets::THETA),
        "u_star": u_star,
        "guard_warning": guard,
        "n": n,
    })
    .to_string()
}

fn nalgebra_zeros(n: usize) -> aifsim::nalgebra::DMatrix<f64> {
    aifsim::nalgebra::DMatrix::zeros(n, n)
}

/// Closed-form stationary protein variance as a function of the effective
/// proportional gain, for a fixed integral gain.
#[wasm_bindgen]
pub fn gene_variance_curve(k: f64, beta_max: f64, points: usize) -> String {
    let points = points.clamp(2, 5_000);
    if !(k > 0.0) || !(beta_max > 0.0) {
        return err_json("k and beta_max must be positive");
    }
    let mut betas = Vec::with_capacity(points);
    let mut variance: Vec<Option<f64>> = Vec::with_capacity(points);
    for i in 0..points {
        let beta = beta_max * i as f64 / (points - 1) as f64;
        betas.push(beta);
        variance
            .push(gene_variance_closed_form(&GENE_PARAMS, presets::MU, presets::THETA, k, beta).ok());
    }
    json!({
        "betas": betas,
        "variance": variance,
        "openloop": gene_openloop_variance(&GENE_PARAMS, presets::MU, presets::THETA),
        "beta_limit": gene_variance_beta_limit(&GENE_PARAMS, presets::MU, presets::THETA),
    })
    .to_string()
}

/// Closed-form mature-protein variance over a (k, beta) grid, with the
/// analytic stability boundary. Cells outside the Hurwitz region are null.
#[wasm_bindgen]
pub fn maturation_variance_map(k_max: f64, beta_max: f64, nk: usize, nbeta: usize) -> String {
    let nk = nk.clamp(2, 400);
    let nbeta = nbeta.clamp(2, 400);
    if !(k_max > 0.0) || !(beta_max > 0.0) {
        return err_json("k_max and beta_max must be positive");
    }
    let k_values: Vec<f64> = (0..nk)
        .map(|i| k_max * (i as f64 + 0.5) / nk as f64)
        .collect();
    let beta_values: Vec<f64> = (0..nbeta)
        .map(|j| beta_max * (j as f64 + 0.5) / nbeta as f64)
        .collect();
    let mut cells: Vec<Option<f64>> = Vec::with_capacity(nk * nbeta);
    for &k in &k_values {
        for &beta in &beta_values {
            cells.push(
                maturation_variance_closed_form(&MATURATION_PARAMS, presets::MU, presets::THETA, k, beta)
                    .ok(),
            );
        }
    }
    // Analytic boundary in beta for each k (when the region is non-empty).
    let boundary: Vec<Option<(f64, f64)>> = k_values
        .iter()
        .map(|&k| {
            let disc = 49.0 - 6.0 * k;
            if disc <= 0.0 {
                return None;
            }
            let lo = ((41.0 - 7.0 * disc.sqrt()) / 3.0).max(0.0);
            let hi = (41.0 + 7.0 * disc.sqrt()) / 3.0;
            Some((lo, hi))
        })
        .collect();
    json!({
        "k_values": k_values,
        "beta_values": beta_values,
        "variance": cells,
        "boundary": boundary,
        "stable_check": maturation_stability(&MATURATION_PARAMS, presets::THETA, 3.0, 10.0),
    })
    .to_string()
}
