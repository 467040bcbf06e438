//! Forecasting regressions of weekly index returns on lagged indicator
//! returns: OLS, quasi-quantile OLS below thresholds, and quantile
//! regression across tau, on the regime-switching synthetic panel.

#[path = "../tests/common/synthetic.rs"]
mod synthetic;

use ivrvsri::regression::{build_design, ols, quantile_regression, quasi_quantile_ols, Threshold};
use ivrvsri::series::{compute_returns, ReturnKind, TimeSeries};

fn main() -> ivrvsri::Result<()> {
    let panel = synthetic::regime_switching_panel(7, 1040);
    let index = TimeSeries::from_values("index", panel.dates.clone(), panel.index)?;
    let indicator = TimeSeries::from_values("IVRVSRI", panel.dates, panel.indicator)?;
    let y = compute_returns(&index, ReturnKind::Simple, 1, true)?;
    let x = compute_returns(&indicator, ReturnKind::Simple, 1, true)?;
    let design = build_design(&y, &[x], 1)?;
    println!("{} rows, columns {:?}", design.nrows(), design.column_labels);

    let r = ols(&design)?;
    println!("OLS                 adj. R² = {:+.4}  slope = {:+.4}", r.fit.value(), r.coefficients[1]);
    for t in ["mean", "P25", "P10", "P5"] {
        let r = quasi_quantile_ols(&design, t.parse::<Threshold>()?)?;
        println!("quasi-quantile {t:<5} adj. R² = {:+.4}  slope = {:+.4}  n = {}", r.fit.value(), r.coefficients[1], r.n_obs);
    }
    for tau in [0.5, 0.25, 0.1, 0.05, 0.01] {
        let r = quantile_regression(&design, tau)?;
        println!("quantile tau={tau:<5} pseudo R² = {:.4}  slope = {:+.4}", r.fit.value(), r.coefficients[1]);
    }
    Ok(())
}
