//! Dynamic quartile risk map of an indicator, printed as colour runs and
//! rendered as an SVG heat strip.

use chrono::NaiveDate;
use ivrvsri::io::plot::heat_strip;
use ivrvsri::riskmap::{classify, occupancy, MapPolicy, MapWindow};
use ivrvsri::series::TimeSeries;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let dates: Vec<NaiveDate> = (0..600).map(|d| start + chrono::Days::new(d)).collect();
    let values = (0..600).map(|t| 20.0 + 8.0 * (t as f64 / 45.0).sin() + 0.02 * t as f64);
    let indicator = TimeSeries::from_values("IVRVSRI", dates, values)?;

    for window in [MapWindow::Expanding, MapWindow::Rolling(252)] {
        let map = classify(&indicator, &MapPolicy { window, ..MapPolicy::default() })?;
        println!("{window:?}: occupancy {:.3?}", occupancy(&map)?);
        let colors = map.colors();
        let mut t = 0;
        while t < colors.len() {
            let run = colors[t..].iter().take_while(|c| **c == colors[t]).count();
            if t + run > 520 {
                println!("  {} .. {}  {}", map.dates[t], map.dates[t + run - 1], colors[t].as_deref().unwrap_or("warmup"));
            }
            t += run;
        }
    }

    let map = classify(&indicator, &MapPolicy::default())?;
    let svg = heat_strip("IVRVSRI risk map", &[&map]);
    let path = std::env::temp_dir().join("ivrvsri_riskmap.svg");
    std::fs::write(&path, svg)?;
    println!("wrote {}", path.display());
    Ok(())
}
