//! Closed-form stationary variances and stability conditions for the two
//! unimolecular case studies.
//!
//! Every formula here must agree with the Lyapunov solution assembled by
//! [`crate::analysis::build_r_q`] to high precision inside the stability
//! region; the test suite enforces that equivalence on random parameter
//! draws.

use crate::error::{Error, Result};

/// Gene expression rates: translation `k_p`, mRNA degradation `gamma_r`,
/// protein degradation `gamma_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneExpressionParams {
    pub k_p: f64,
    pub gamma_r: f64,
    pub gamma_p: f64,
}

/// Maturation rates: gene expression plus maturation `k_mat`
/// (`X2 -> X3`) and mature-protein degradation `gamma_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaturationParams {
    pub k_p: f64,
    pub gamma_r: f64,
    pub gamma_p: f64,
    pub k_mat: f64,
    pub gamma_m: f64,
}

// ---------------------------------------------------------------------------
// Gene expression
// ---------------------------------------------------------------------------

/// Constitutive (open-loop) stationary protein variance:
/// `(mu/theta) (1 + k_p/(gamma_r + gamma_p))`.
pub fn gene_openloop_variance(p: &GeneExpressionParams, mu: f64, theta: f64) -> f64 {
    mu / theta * (1.0 + p.k_p / (p.gamma_r + p.gamma_p))
}

/// Stability margin of the closed loop: the denominator
/// `1 - k theta k_p / (gamma_r gamma_p (gamma_r + gamma_p)) + beta k_p / (gamma_r gamma_p)`.
/// The gene-expression `R` matrix is Hurwitz iff this is positive.
pub fn gene_stability_margin(p: &GeneExpressionParams, theta: f64, k: f64, beta: f64) -> f64 {
    1.0 - k * theta * p.k_p / (p.gamma_r * p.gamma_p * (p.gamma_r + p.gamma_p))
        + beta * p.k_p / (p.gamma_r * p.gamma_p)
}

/// Closed-loop stationary protein variance under integral gain `k` and
/// effective proportional gain `beta`.
pub fn gene_variance_closed_form(
    p: &GeneExpressionParams,
    mu: f64,
    theta: f64,
    k: f64,
    beta: f64,
) -> Result<f64> {
    let den = gene_stability_margin(p, theta, k, beta);
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "gene-expression stability margin {den:.6e} is not positive"
        )));
    }
    let num = 1.0
        + p.k_p / (p.gamma_r + p.gamma_p)
        + k * p.k_p / (p.gamma_r * p.gamma_p)
        + beta * p.k_p / (p.gamma_r * (p.gamma_r + p.gamma_p));
    Ok(mu / theta * num / den)
}

/// Closed-loop variance of the pure integral controller (`beta = 0`).
pub fn gene_integral_variance(p: &GeneExpressionParams, mu: f64, theta: f64, k: f64) -> Result<f64> {
    gene_variance_closed_form(p, mu, theta, k, 0.0)
}

/// Ratio of integral-controlled to constitutive variance; greater than 1
/// whenever the margin is positive.
pub fn gene_variance_ratio(p: &GeneExpressionParams, mu: f64, theta: f64, k: f64) -> Result<f64> {
    Ok(gene_integral_variance(p, mu, theta, k)? / gene_openloop_variance(p, mu, theta))
}

/// Limit of the closed-loop variance as `beta -> infinity`:
/// `(mu/theta) gamma_p / (gamma_r + gamma_p)`, always below the set-point.
pub fn gene_variance_beta_limit(p: &GeneExpressionParams, mu: f64, theta: f64) -> f64 {
    mu / theta * p.gamma_p / (p.gamma_r + p.gamma_p)
}

// ---------------------------------------------------------------------------
// Maturation
// ---------------------------------------------------------------------------

/// Elementary symmetric combinations reused across the maturation formulas.
struct MatSums {
    /// gamma_r + gamma_p + gamma_m + k_mat
    a: f64,
    /// gamma_r gamma_p + gamma_r gamma_m + gamma_p gamma_m + gamma_r k_mat + gamma_m k_mat
    b: f64,
    /// gamma_r gamma_m (gamma_p + k_mat)
    c0: f64,
}

fn mat_sums(p: &MaturationParams) -> MatSums {
    let MaturationParams {
        gamma_r: gr,
        gamma_p: gp,
        k_mat: km,
        gamma_m: gm,
        ..
    } = *p;
    MatSums {
        a: gr + gp + gm + km,
        b: gr * gp + gr * gm + gp * gm + gr * km + gm * km,
        c0: gr * gm * (gp + km),
    }
}

/// Open-loop stationary variance of the mature protein.
pub fn maturation_openloop_variance(p: &MaturationParams, mu: f64, theta: f64) -> f64 {
    let s = mat_sums(p);
    let denom = (p.gamma_r + p.gamma_m)
        * (p.gamma_r + p.gamma_p + p.k_mat)
        * (p.gamma_p + p.gamma_m + p.k_mat);
    mu / theta * (1.0 + p.k_p * p.k_mat * s.a / denom)
}

/// Both Hurwitz conditions for the maturation `R` matrix:
/// a linear bound on `beta` and a concave quadratic constraint mixing
/// `beta` and the integral gain `k`.
pub fn maturation_stability(p: &MaturationParams, theta: f64, k: f64, beta: f64) -> bool {
    let s = mat_sums(p);
    let kk = p.k_p * p.k_mat;
    let cond1 = beta < (s.a * s.b - s.c0) / kk;
    let sigma1 = kk * (2.0 * s.c0 - s.a * s.b);
    let sigma0 = -s.c0 * s.a * s.b + s.c0 * s.c0 + k * kk * theta * s.a * s.a;
    let cond2 = kk * kk * beta * beta + sigma1 * beta + sigma0 < 0.0;
    cond1 && cond2
}

/// Coefficients of the quadratic stability constraint
/// `(k_p k_mat)^2 beta^2 + sigma1 beta + sigma0 < 0`.
pub fn maturation_stability_quadratic(p: &MaturationParams, theta: f64, k: f64) -> (f64, f64, f64) {
    let s = mat_sums(p);
    let kk = p.k_p * p.k_mat;
    let sigma1 = kk * (2.0 * s.c0 - s.a * s.b);
    let sigma0 = -s.c0 * s.a * s.b + s.c0 * s.c0 + k * kk * theta * s.a * s.a;
    (kk * kk, sigma1, sigma0)
}

/// Closed-loop stationary variance of the mature protein.
pub fn maturation_variance_closed_form(
    p: &MaturationParams,
    mu: f64,
    theta: f64,
    k: f64,
    beta: f64,
) -> Result<f64> {
    if !maturation_stability(p, theta, k, beta) {
        return Err(Error::Domain(format!(
            "maturation loop with k = {k}, beta = {beta} is outside the stability region"
        )));
    }
    let MaturationParams {
        k_p: kp,
        gamma_r: gr,
        gamma_p: gp,
        k_mat: km,
        gamma_m: gm,
    } = *p;
    let s = mat_sums(p);
    let kk = kp * km;

    let xi_d = gr * gm * (gr + gm) * (gp + km) * (gr + gp + km) * (gp + gm + km);
    let xi_k = -kk * theta * s.a * s.a;
    let xi_beta = kk
        * (gr * gr * gp
            + gr * gr * gm
            + gr * gr * km
            + gr * gp * gp
            + gr * gp * gm
            + 2.0 * gr * gp * km
            + gr * gm * gm
            + gr * gm * km
            + gr * km * km
            + gp * gp * gm
            + gp * gm * gm
            + 2.0 * gp * gm * km
            + gm * gm * km
            + gm * km * km);
    let xi_beta2 = -kk * kk;

    let zeta_k = kk
        * (gr * gr * gp
            + gr * gr * gm
            + gr * gr * km
            + gr * gp * gp
            + 2.0 * gr * gp * gm
            + 2.0 * gr * gp * km
            + gr * gm * gm
            + 2.0 * gr * gm * km
            - theta * gr * gm
            + gr * km * km
            + gp * gp * gm
            + gp * gm * gm
            + 2.0 * gp * gm * km
            - theta * gp * gm
            + gm * gm * km
            - theta * gm * gm
            + gm * km * km
            - theta * gm * km);
    let zeta_beta = gm
        * kk
        * (gr * gr
            + gr * gp
            + gr * km
            + gm * gr
            + gp * gp
            + 2.0 * gp * km
            + gm * gp
            + km * km
            + gm * km);
    let zeta_kbeta = -kk * kk;

    let var_ol = maturation_openloop_variance(p, mu, theta);
    let num = theta / mu * var_ol
        + zeta_k / xi_d * k
        + zeta_beta / xi_d * beta
        + zeta_kbeta / xi_d * k * beta;
    let den = 1.0 + xi_k / xi_d * k + xi_beta / xi_d * beta + xi_beta2 / xi_d * beta * beta;
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "maturation closed-form denominator {den:.6e} is not positive"
        )));
    }
    Ok(mu / theta * num / den)
}
