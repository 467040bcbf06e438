//! Quantile regression by the bounded dual of the pinball-loss LP:
//!
//! ```text
//! maximize y'a  subject to  X'a = (1 - tau) X'1,  0 <= a_i <= 1
//! ```
//!
//! The coefficients are the (negated) simplex multipliers of the equality
//! rows, and the pinball loss equals `y'a - (1 - tau) sum(y)` at the optimum.
//! The returned fit is certified by the duality gap between the two.

use super::ols::{check_full_rank, least_squares, residuals};
use super::simplex::{self, Problem};
use super::{pseudo_r2, Fit, LaggedDesign, ModelKind, RegressionReport};
use crate::error::{Error, Result};
use crate::series::quantile_sorted;

/// Relative duality gap accepted as optimal.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-9;

/// `sum rho_tau(u_i)` with `rho_tau(u) = u (tau - 1{u < 0})`.
pub fn pinball_loss(residuals: impl IntoIterator<Item = f64>, tau: f64) -> f64 {
    residuals
        .into_iter()
        .map(|u| if u < 0.0 { u * (tau - 1.0) } else { u * tau })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub duality_gap: f64,
    pub iterations: usize,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("tau must lie in (0, 1), got {tau}")))
    }
}

/// Minimizer of `sum rho_tau(y_i - b)` over constants `b`. When the
/// minimizers form an interval its midpoint is returned.
pub fn intercept_only_fit(y: &[f64], tau: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    if y.is_empty() {
        return Err(Error::InsufficientData {
            context: "intercept-only quantile fit".into(),
            needed: 1,
            available: 0,
        });
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = n as f64 * tau;
    let nearest = k.round();
    // One-based order statistics: the minimizer set is [y_(k), y_(k+1)] when
    // n tau is an integer k, and y_(ceil(n tau)) otherwise.
    let b = if (k - nearest).abs() < 1e-9 && nearest >= 1.0 && (nearest as usize) < n {
        let k = nearest as usize;
        0.5 * (sorted[k - 1] + sorted[k])
    } else {
        sorted[(k.ceil() as usize).clamp(1, n) - 1]
    };
    Ok((b, pinball_loss(y.iter().map(|v| v - b), tau)))
}

fn is_intercept_only(design: &LaggedDesign) -> bool {
    design.ncols() == 1 && design.x.iter().all(|v| *v == 1.0)
}

/// Coefficients minimizing the pinball loss at `tau`.
pub(crate) fn fit_quantile(design: &LaggedDesign, tau: f64) -> Result<QuantileFit> {
    check_tau(tau)?;
    let (n, m) = (design.nrows(), design.ncols());
    if n < m {
        return Err(Error::InsufficientData {
            context: format!("quantile regression at tau = {tau}"),
            needed: m,
            available: n,
        });
    }
    if is_intercept_only(design) {
        let (b, objective) = intercept_only_fit(&design.y, tau)?;
        return Ok(QuantileFit {
            coefficients: vec![b],
            objective,
            duality_gap: 0.0,
            iterations: 0,
        });
    }
    check_full_rank(design)?;

    // Scale columns to unit max-abs for conditioning; coefficients are
    // rescaled on the way out.
    let mut scale = vec![0.0f64; m];
    for i in 0..n {
        for (s, v) in scale.iter_mut().zip(design.row(i)) {
            *s = s.max(v.abs());
        }
    }
    let scaled: Vec<f64> = (0..n)
        .flat_map(|i| design.row(i).iter().zip(&scale).map(|(v, s)| v / s).collect::<Vec<_>>())
        .collect();
    let mut rhs = vec![0.0; m];
    for i in 0..n {
        for (r, v) in rhs.iter_mut().zip(&scaled[i * m..(i + 1) * m]) {
            *r += (1.0 - tau) * v;
        }
    }
    let cost: Vec<f64> = design.y.iter().map(|v| -v).collect();
    let upper = vec![1.0; n];

    // Warm start: signs of residuals around the OLS fit shifted to its
    // tau-quantile.
    let ols_beta = least_squares(design)?;
    let mut e = residuals(design, &ols_beta);
    let mut sorted = e.clone();
    sorted.sort_by(f64::total_cmp);
    let shift = quantile_sorted(&sorted, tau);
    e.iter_mut().for_each(|v| *v -= shift);
    let start: Vec<f64> = e.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();

    let y_scale = design.y.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    let opt_tol = 1e-12 * y_scale.max(f64::MIN_POSITIVE);
    let problem = Problem {
        rows: m,
        columns: &scaled,
        cost: &cost,
        upper: &upper,
        rhs: &rhs,
    };
    let max_iter = 50 * (n + m) + 1000;
    let solution = simplex::solve(&problem, &start, opt_tol, max_iter)?;

    let coefficients: Vec<f64> = solution
        .duals
        .iter()
        .zip(&scale)
        .map(|(pi, s)| -pi / s)
        .collect();
    let objective = pinball_loss(residuals(design, &coefficients), tau);
    let dual_objective = design.y.iter().zip(&solution.x).map(|(y, a)| y * a).sum::<f64>()
        - (1.0 - tau) * design.y.iter().sum::<f64>();
    let duality_gap = objective - dual_objective;
    // Relative to the optimum, with a floor for the rounding in y'a on
    // (near) exact fits.
    let tolerance = OPTIMALITY_TOLERANCE * objective.abs() + 1e-12 * y_scale * n as f64;
    if duality_gap.abs() > tolerance {
        return Err(Error::Solver {
            iterations: solution.iterations,
            objective,
            gap: duality_gap,
        });
    }
    Ok(QuantileFit {
        coefficients,
        objective,
        duality_gap,
        iterations: solution.iterations,
    })
}

/// Quantile regression at `tau`, with the pseudo R² against the
/// intercept-only fit.
pub fn quantile_regression(design: &LaggedDesign, tau: f64) -> Result<RegressionReport> {
    let fit = fit_quantile(design, tau)?;
    let (_, restricted) = intercept_only_fit(&design.y, tau)?;
    // The nested fit can only be worse; allow for the solver tolerance.
    let full = if fit.objective > restricted
        && fit.objective - restricted <= OPTIMALITY_TOLERANCE * restricted
    {
        restricted
    } else {
        fit.objective
    };
    Ok(RegressionReport {
        model: ModelKind::Quantile { tau },
        labels: design.column_labels.clone(),
        coefficients: fit.coefficients,
        n_obs: design.nrows(),
        lags: design.lags,
        fit: Fit::PseudoR2(pseudo_r2(full, restricted)?),
        r2: None,
        objective: full,
        restricted_objective: Some(restricted),
        filter: None,
        dropped_rows: design.dropped.len(),
    })
}
