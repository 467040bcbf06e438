use nalgebra::{DMatrix, DVector};

use super::{adjusted_r2, FilterInfo, Fit, LaggedDesign, ModelKind, RegressionReport, Threshold};
use crate::error::{Error, Result};
use crate::series::quantile_sorted;

const RANK_TOLERANCE: f64 = 1e-10;

/// Columns that are (numerically) linear combinations of earlier columns,
/// by modified Gram-Schmidt with one reorthogonalization pass.
pub(crate) fn dependent_columns(design: &LaggedDesign) -> Vec<usize> {
    let (n, m) = (design.nrows(), design.ncols());
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..m {
        let mut v: Vec<f64> = (0..n).map(|i| design.x[i * m + j]).collect();
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= dot * qi);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 || norm <= RANK_TOLERANCE * norm0 {
            dependent.push(j);
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    dependent
}

pub(crate) fn check_full_rank(design: &LaggedDesign) -> Result<()> {
    let dependent = dependent_columns(design);
    if dependent.is_empty() {
        Ok(())
    } else {
        Err(Error::SingularDesign {
            columns: dependent
                .into_iter()
                .map(|j| design.column_labels[j].clone())
                .collect(),
        })
    }
}

/// Least-squares coefficients via Householder QR.
pub(crate) fn least_squares(design: &LaggedDesign) -> Result<Vec<f64>> {
    check_full_rank(design)?;
    let (n, m) = (design.nrows(), design.ncols());
    if n < m {
        return Err(Error::InsufficientData {
            context: "least squares".into(),
            needed: m,
            available: n,
        });
    }
    let x = DMatrix::from_row_slice(n, m, &design.x);
    let y = DVector::from_column_slice(&design.y);
    let qr = x.qr();
    let qty = qr.q().transpose() * y;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign {
            columns: design.column_labels.clone(),
        })?;
    Ok(beta.iter().copied().collect())
}

pub(crate) fn residuals(design: &LaggedDesign, beta: &[f64]) -> Vec<f64> {
    (0..design.nrows())
        .map(|i| {
            let fitted: f64 = design.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            design.y[i] - fitted
        })
        .collect()
}

pub fn ols(design: &LaggedDesign) -> Result<RegressionReport> {
    let n = design.nrows();
    let needed = design.ncols() + 1;
    if n < needed {
        return Err(Error::InsufficientData {
            context: "OLS".into(),
            needed,
            available: n,
        });
    }
    let beta = least_squares(design)?;
    let ssr: f64 = residuals(design, &beta).iter().map(|e| e * e).sum();
    let mean = design.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = design.y.iter().map(|y| (y - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::InvalidValue("response has zero variance".into()));
    }
    let r2 = 1.0 - ssr / sst;
    Ok(RegressionReport {
        model: ModelKind::Ols,
        labels: design.column_labels.clone(),
        coefficients: beta,
        n_obs: n,
        lags: design.lags,
        fit: Fit::AdjustedR2(adjusted_r2(r2, n, design.slopes())?),
        r2: Some(r2),
        objective: ssr,
        restricted_objective: None,
        filter: None,
        dropped_rows: design.dropped.len(),
    })
}

/// OLS on the rows whose response lies strictly below `threshold`, the
/// threshold being computed on the full response sample of `design`.
pub fn quasi_quantile_ols(design: &LaggedDesign, threshold: Threshold) -> Result<RegressionReport> {
    let rows_total = design.nrows();
    let threshold_value = match threshold {
        Threshold::Unbounded => f64::INFINITY,
        Threshold::Mean => design.y.iter().sum::<f64>() / rows_total as f64,
        Threshold::Percentile(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidValue(format!("percentile threshold must lie in (0, 1), got {q}")));
            }
            let mut sorted = design.y.clone();
            sorted.sort_by(f64::total_cmp);
            quantile_sorted(&sorted, q)
        }
    };
    let mut report = if threshold == Threshold::Unbounded {
        ols(design)?
    } else {
        let filtered = design.filter_rows(|y| y < threshold_value);
        ols(&filtered).map_err(|e| match e {
            Error::InsufficientData { needed, available, .. } => Error::InsufficientData {
                context: format!("quasi-quantile OLS below {threshold} = {threshold_value} ({rows_total} rows before filtering)"),
                needed,
                available,
            },
            other => other,
        })?
    };
    report.model = ModelKind::QuasiQuantile { threshold };
    report.filter = Some(FilterInfo {
        threshold,
        threshold_value,
        rows_total,
        rows_kept: report.n_obs,
    });
    Ok(report)
}
