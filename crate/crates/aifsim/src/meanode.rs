//! Deterministic PI analogue of the closed loop.
//!
//! The mean dynamics of the controlled network follow the linear system
//! `d/dt [x; I] = A [x; I] + offset`, where `A` equals the moment-analysis
//! matrix `R` and the offset generalizes the error-feedback input
//! `[beta/theta e_a; 1] mu` with the basal inflow `S w0` added to the
//! species rows (zero for the case-study presets).

use nalgebra::{DMatrix, DVector};

use crate::analysis::is_hurwitz;
use crate::error::{Error, Result};
use crate::model::LinearPropensityStructure;

/// Closed-loop linear mean system with integrator state appended.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClosedLoop {
    pub a: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub x0: DVector<f64>,
    /// Index of the controlled (output) component.
    pub controlled: usize,
    pub set_point: f64,
}

impl LinearClosedLoop {
    /// Assemble the mean system for a unimolecular open loop under the
    /// antithetic controller with effective proportional gain `beta`.
    pub fn new(
        lin: &LinearPropensityStructure,
        controlled: usize,
        actuated: usize,
        mu: f64,
        theta: f64,
        k: f64,
        beta: f64,
        x0_open: &[f64],
    ) -> Result<Self> {
        let d = lin.dim();
        if controlled >= d || actuated >= d {
            return Err(Error::Structure("species index out of range".into()));
        }
        if x0_open.len() != d {
            return Err(Error::Structure(format!(
                "initial mean has {} entries, open loop has {d}",
                x0_open.len()
            )));
        }
        let sw = lin.sw();
        let mut a = DMatrix::zeros(d + 1, d + 1);
        a.view_mut((0, 0), (d, d)).copy_from(&sw);
        a[(actuated, controlled)] -= beta;
        a[(actuated, d)] = k;
        a[(d, controlled)] = -theta;

        let sw0 = lin.sw0();
        let mut offset = DVector::zeros(d + 1);
        for i in 0..d {
            offset[i] = sw0[i];
        }
        offset[actuated] += beta / theta * mu;
        offset[d] = mu;

        let mut x0 = DVector::zeros(d + 1);
        for (i, &v) in x0_open.iter().enumerate() {
            x0[i] = v;
        }

        Ok(Self {
            a,
            offset,
            x0,
            controlled,
            set_point: mu / theta,
        })
    }

    /// Fixed point of the affine dynamics (`A x* + offset = 0`).
    pub fn steady_state(&self) -> Result<DVector<f64>> {
        let rhs = -&self.offset;
        self.a
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Analysis("closed-loop matrix is singular".into()))
    }

    pub fn output(&self, state: &DVector<f64>) -> f64 {
        state[self.controlled]
    }
}

/// Integrate the mean system with fixed-step RK4 (step at most a tenth of
/// the grid spacing), returning the full state at each grid time.
pub fn integrate_mean(sys: &LinearClosedLoop, grid_times: &[f64]) -> Result<Vec<DVector<f64>>> {
    if grid_times.is_empty() {
        return Err(Error::Config("empty time grid".into()));
    }
    if sys.a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("system matrix has non-finite entries".into()));
    }
    let deriv = |x: &DVector<f64>| &sys.a * x + &sys.offset;
    let mut out = Vec::with_capacity(grid_times.len());
    let mut x = sys.x0.clone();
    out.push(x.clone());
    for w in grid_times.windows(2) {
        let span = w[1] - w[0];
        let steps = 10usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = deriv(&x);
            let k2 = deriv(&(&x + &k1 * (h / 2.0)));
            let k3 = deriv(&(&x + &k2 * (h / 2.0)));
            let k4 = deriv(&(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Zero of the PI control law `u = (beta/theta)(mu - theta y) + k Int(mu - theta y)`
/// in the error channel: `s = -k theta / beta`. No zero without
/// proportional action.
pub fn pi_zero(k: f64, beta: f64, theta: f64) -> Option<f64> {
    if beta == 0.0 {
        None
    } else {
        Some(-k * theta / beta)
    }
}

/// Settling time of the deterministic output into `set_point (1 ± band)`,
/// evaluated on the given grid. Errors when the system is not Hurwitz.
pub fn settling_time_ode(
    sys: &LinearClosedLoop,
    grid_times: &[f64],
    band: f64,
) -> Result<Option<f64>> {
    if !is_hurwitz(&sys.a)? {
        return Err(Error::Domain(
            "mean system is not Hurwitz; settling time undefined".into(),
        ));
    }
    let states = integrate_mean(sys, grid_times)?;
    let outputs: Vec<f64> = states.iter().map(|x| sys.output(x)).collect();
    Ok(crate::ssa::settling_time(
        grid_times,
        &outputs,
        sys.set_point,
        band,
    ))
}
