//! The benchmark systemic-risk measures: SRISK, CATFIN and the Cleveland
//! distance-to-default spread.

use chrono::NaiveDate;
use ivrvsri::benchmarks::{catfin_combine, cleveland_spread, srisk_aggregate, srisk_firm, FirmSnapshot, StressRules};
use ivrvsri::series::TimeSeries;

fn main() -> ivrvsri::Result<()> {
    let firms = [
        FirmSnapshot::new("Alpha Bank", 100.0, 900.0, 0.6, 0.08)?,
        FirmSnapshot::new("Beta Corp", 250.0, 1500.0, 0.35, 0.08)?,
        FirmSnapshot::new("Gamma Trust", 80.0, 120.0, 0.2, 0.08)?,
    ];
    let mut shortfalls = Vec::new();
    for f in &firms {
        let s = srisk_firm(f)?;
        println!("SRISK {:<12} {s:8.3}  (leverage {:.1})", f.name, f.leverage());
        shortfalls.push(s);
    }
    println!("system SRISK {:.3}", srisk_aggregate(&shortfalls));

    println!("CATFIN(1, 1, 1) = {:.4}", catfin_combine(1.0, 1.0, 1.0));
    println!("CATFIN(0.5, -0.2, 1.3) = {:.4}", catfin_combine(0.5, -0.2, 1.3));

    let start = NaiveDate::from_ymd_opt(2008, 9, 1).expect("valid date");
    let dates: Vec<NaiveDate> = (0..8).map(|d| start + chrono::Days::new(d)).collect();
    let bank = |base: f64| {
        TimeSeries::from_values("bank", dates.clone(), (0..8).map(move |t| base - 0.3 * t as f64)).expect("sorted dates")
    };
    let banks = [bank(4.0), bank(3.5), bank(5.0)];
    let pdd = TimeSeries::from_values("pdd", dates.clone(), (0..8).map(|t| 3.6 - 0.1 * t as f64))?;
    let spread = cleveland_spread(&banks, &pdd, StressRules::default())?;
    for (t, d) in spread.dates().iter().enumerate() {
        println!(
            "{d}  ADD-PDD = {:+.3}  stress = {}",
            spread.spread.get(t).unwrap_or(f64::NAN),
            if spread.flags[t].major { "major" } else if spread.flags[t].elevated { "elevated" } else { "none" }
        );
    }
    Ok(())
}
