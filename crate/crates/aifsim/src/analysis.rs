//! Moment-closure analysis of the closed loop for unimolecular networks.
//!
//! For an open loop with affine propensities `lambda(x) = W x + w0`, the
//! stationary covariance of `(X, Z)` with `Z = Z1 - Z2` is approximated by
//! the solution of the Lyapunov equation `R S + S R^T + Q = 0`, where
//!
//! ```text
//! R = [ SW - beta e_a e_l^T   k e_a ]      Q = [ S D S^T + c e_a e_a^T   0    ]
//!     [ -theta e_l^T          0     ]          [ 0                       2 mu ]
//! ```
//!
//! with `D = diag(W E[X] + w0)` and `c` the nominal constitutive input. The
//! approximation is valid only when `R` is Hurwitz stable; requests outside
//! that domain are refused.

use nalgebra::{DMatrix, DVector};

use crate::controller::nominal_input;
use crate::error::{Error, Result};
use crate::model::LinearPropensityStructure;

/// Assembled matrices of the stationary covariance approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisMatrices {
    /// (d+1) x (d+1) closed-loop mean matrix; last coordinate is Z.
    pub r: DMatrix<f64>,
    /// (d+1) x (d+1) symmetric diffusion matrix.
    pub q: DMatrix<f64>,
    /// K x K diagonal of stationary propensities.
    pub d: DMatrix<f64>,
    /// Nominal constitutive input (equals the ergodicity reference u*).
    pub c: f64,
    /// Effective proportional gain used in the assembly.
    pub beta: f64,
    /// Stationary mean of the open-loop species under the closed loop.
    pub stationary_mean: DVector<f64>,
}

/// Stationary mean of the open-loop species when the loop holds the
/// controlled species at `mu / theta`: `m = -(SW)^{-1} (S w0 + c e_a)`.
pub fn closed_loop_stationary_mean(
    lin: &LinearPropensityStructure,
    controlled: usize,
    actuated: usize,
    mu: f64,
    theta: f64,
) -> Result<DVector<f64>> {
    let c = nominal_input(lin, controlled, actuated, mu, theta)?;
    let sw = lin.sw();
    let mut rhs = -(lin.sw0());
    rhs[actuated] -= c;
    let m = sw
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Analysis("open loop has no unique stationary mean".into()))?;
    let residual = (&sw * &m - &rhs).norm();
    if residual > 1e-8 * (sw.norm() * m.norm() + rhs.norm()).max(1.0) {
        return Err(Error::Analysis(
            "open loop has no unique stationary mean".into(),
        ));
    }
    Ok(m)
}

/// Assemble `R`, `Q`, `D` and `c` for the given gains.
pub fn build_r_q(
    lin: &LinearPropensityStructure,
    controlled: usize,
    actuated: usize,
    mu: f64,
    theta: f64,
    k: f64,
    beta: f64,
) -> Result<AnalysisMatrices> {
    let d = lin.dim();
    let mean = closed_loop_stationary_mean(lin, controlled, actuated, mu, theta)?;
    let c = nominal_input(lin, controlled, actuated, mu, theta)?;

    let sw = lin.sw();
    let mut r = DMatrix::zeros(d + 1, d + 1);
    r.view_mut((0, 0), (d, d)).copy_from(&sw);
    r[(actuated, controlled)] -= beta;
    r[(actuated, d)] = k;
    r[(d, controlled)] = -theta;

    let lambda = &lin.w * &mean + &lin.w0;
    let kn = lin.w.nrows();
    let d_mat = DMatrix::from_fn(kn, kn, |i, j| if i == j { lambda[i] } else { 0.0 });

    let sds = &lin.s * &d_mat * lin.s.transpose();
    let mut q = DMatrix::zeros(d + 1, d + 1);
    q.view_mut((0, 0), (d, d)).copy_from(&sds);
    q[(actuated, actuated)] += c;
    q[(d, d)] = 2.0 * mu;

    Ok(AnalysisMatrices {
        r,
        q,
        d: d_mat,
        c,
        beta,
        stationary_mean: mean,
    })
}

/// Largest real part among the eigenvalues of a square matrix.
pub fn max_real_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let eigs = m.clone().complex_eigenvalues();
    eigs.iter()
        .map(|e| e.re)
        .fold(None, |acc: Option<f64>, re| {
            Some(acc.map_or(re, |a| a.max(re)))
        })
        .ok_or_else(|| Error::Numeric("eigenvalue computation returned nothing".into()))
}

/// True iff all eigenvalues have real part below `-1e-9 * scale`, so
/// boundary cases are not declared stable.
pub fn is_hurwitz(m: &DMatrix<f64>) -> Result<bool> {
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    Ok(max_real_eigenvalue(m)? < -1e-9 * scale)
}

/// Solve `R S + S R^T + Q = 0` by vectorizing to a dense linear system.
///
/// Dimensions stay tiny here (d+1 <= 11), so the Kronecker-sum system is
/// solved directly and the residual is verified before returning.
pub fn solve_lyapunov(r: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = r.nrows();
    if r.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Structure("R and Q must be square of equal size".into()));
    }
    let max_re = max_real_eigenvalue(r)?;
    if max_re >= 0.0 {
        return Err(Error::Domain(format!(
            "approximation outside validity domain: R is not Hurwitz (max Re(eig) = {max_re:.6e})"
        )));
    }

    // (I (x) R + R (x) I) vec(S) = -vec(Q), column-major vec.
    let mut a = DMatrix::zeros(n * n, n * n);
    for col in 0..n {
        // I (x) R places R on the (col, col) diagonal block.
        for i in 0..n {
            for j in 0..n {
                a[(col * n + i, col * n + j)] += r[(i, j)];
            }
        }
        // R (x) I scatters R entries across blocks.
        for block in 0..n {
            for i in 0..n {
                a[(block * n + i, col * n + i)] += r[(block, col)];
            }
        }
    }
    let b = DVector::from_fn(n * n, |idx, _| -q[(idx % n, idx / n)]);
    let vec_sigma = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric("Lyapunov system is singular".into()))?;

    let mut sigma = DMatrix::from_fn(n, n, |i, j| vec_sigma[j * n + i]);
    sigma = (&sigma + sigma.transpose()) * 0.5;

    let residual = (r * &sigma + &sigma * r.transpose() + q).norm();
    let scale = r.norm() * sigma.norm() + q.norm();
    if residual > 1e-10 * scale.max(1.0) {
        return Err(Error::Numeric(format!(
            "Lyapunov residual {residual:.3e} exceeds tolerance (scale {scale:.3e})"
        )));
    }
    Ok(sigma)
}

/// Integrate the transient second-moment system `dS/dt = R S + S R^T + Q`
/// with fixed-step RK4, returning `S` at each grid time. An extension of
/// the stationary closure: it relaxes to the Lyapunov solution as t grows.
pub fn integrate_covariance_ode(
    r: &DMatrix<f64>,
    q: &DMatrix<f64>,
    sigma0: &DMatrix<f64>,
    grid_times: &[f64],
    max_step: f64,
) -> Result<Vec<DMatrix<f64>>> {
    if !(max_step > 0.0) {
        return Err(Error::Config("max_step must be positive".into()));
    }
    let deriv = |s: &DMatrix<f64>| r * s + s * r.transpose() + q;
    let mut out = Vec::with_capacity(grid_times.len());
    let mut sigma = sigma0.clone();
    let mut t = grid_times
        .first()
        .copied()
        .ok_or_else(|| Error::Config("empty grid".into()))?;
    out.push(sigma.clone());
    for &target in &grid_times[1..] {
        let span = target - t;
        let steps = (span / max_step).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = deriv(&sigma);
            let k2 = deriv(&(&sigma + &k1 * (h / 2.0)));
            let k3 = deriv(&(&sigma + &k2 * (h / 2.0)));
            let k4 = deriv(&(&sigma + &k3 * h));
            sigma += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        t = target;
        out.push(sigma.clone());
    }
    Ok(out)
}
