//! Seeded synthetic data: a four-market equity/volatility panel with
//! benchmark inputs (the shipped fixture), and a regime-switching pair of
//! index and indicator levels whose lagged indicator returns move only the
//! lower tail of index returns.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub const MARKETS: [(&str, f64); 4] = [("USA", 35.6), ("EUR", 3.7), ("JAP", 5.5), ("BRA", 1.0)];

pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

fn n(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn csv(header: &str, dates: &[NaiveDate], cols: &[&[Option<f64>]], keep: &[bool]) -> String {
    let mut s = format!("{header}\n");
    for (t, d) in dates.iter().enumerate() {
        if !keep[t] {
            continue;
        }
        let _ = write!(s, "{d}");
        for c in cols {
            match c[t] {
                Some(v) => {
                    let _ = write!(s, ",{v:.6}");
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

/// Files of the shipped fixture, as `(file name, contents)`.
pub fn fixture_files(seed: u64, days: usize) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dates = business_days(NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid"), days);
    let mut files = Vec::new();

    // Common stress factor: a persistent two-state regime.
    let mut stress = vec![false; days];
    let mut s = false;
    for st in stress.iter_mut() {
        let u: f64 = rng.gen();
        s = if s { u < 0.96 } else { u < 0.01 };
        *st = s;
    }
    let global: Vec<f64> = (0..days).map(|_| n(&mut rng)).collect();

    for (k, (name, _)) in MARKETS.iter().enumerate() {
        let base_vol: f64 = [0.010, 0.012, 0.011, 0.016][k];
        let mut price = 100.0 * (k as f64 + 1.0);
        let mut var = base_vol * base_vol;
        let mut p = Vec::with_capacity(days);
        let mut iv = Vec::with_capacity(days);
        for t in 0..days {
            let target = if stress[t] { 9.0 } else { 1.0 } * base_vol * base_vol;
            var = 0.94 * var + 0.06 * target;
            let sd = var.sqrt();
            let e = 0.7 * global[t] + 0.71 * n(&mut rng);
            let r = 0.0002 - 0.5 * var + sd * e;
            price *= r.exp();
            p.push(Some(price));
            // Implied vol in index points: annualized conditional vol plus a
            // premium and noise.
            iv.push(Some((100.0 * sd * 252f64.sqrt() * 1.1 + 1.5 + 0.4 * n(&mut rng)).max(5.0)));
        }
        // Market holidays: dates absent from this market's files.
        let keep: Vec<bool> = (0..days).map(|t| t == 0 || rng.gen::<f64>() > 0.015).collect();
        if k == 2 {
            iv[days / 3] = None;
        }
        let lower = name.to_lowercase();
        files.push((format!("prices_{lower}.csv"), csv("date,close", &dates, &[&p], &keep)));
        files.push((format!("iv_{lower}.csv"), csv("date,iv", &dates, &[&iv], &keep)));
    }

    // Benchmark inputs on the full business-day calendar.
    let all = vec![true; days];
    let mut srisk = Vec::with_capacity(days);
    let mut ciss = Vec::with_capacity(days);
    let mut level = 500.0;
    let mut c = 0.1;
    for t in 0..days {
        level *= (0.002 * n(&mut rng) + if stress[t] { 0.004 } else { -0.0002 }).exp();
        srisk.push(Some(level));
        let target = if stress[t] { 0.6 } else { 0.12 };
        c = (0.95 * c + 0.05 * target + 0.01 * n(&mut rng)).clamp(0.01, 0.99);
        ciss.push(if t % 97 == 50 { None } else { Some(c) });
    }
    files.push(("srisk.csv".into(), csv("date,srisk", &dates, &[&srisk], &all)));
    files.push(("ciss.csv".into(), csv("date,ciss", &dates, &[&ciss], &all)));

    let banks = 5;
    let mut dd: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(days); banks];
    let mut pdd = Vec::with_capacity(days);
    let mut x: Vec<f64> = (0..banks).map(|b| 4.0 + 0.5 * b as f64).collect();
    for t in 0..days {
        let target = if stress[t] { 1.2 } else { 4.5 };
        for (b, xb) in x.iter_mut().enumerate() {
            *xb = 0.97 * *xb + 0.03 * (target + 0.3 * b as f64) + 0.08 * n(&mut rng);
            dd[b].push(if (t + b * 31) % 211 == 7 { None } else { Some(*xb) });
        }
        let avg = x.iter().sum::<f64>() / banks as f64;
        let gap = if stress[t] { 0.05 } else { 0.9 };
        pdd.push(Some(avg - gap + 0.05 * n(&mut rng)));
    }
    let dd_refs: Vec<&[Option<f64>]> = dd.iter().map(|v| v.as_slice()).collect();
    let header = format!("date,{}", (1..=banks).map(|b| format!("bank{b}")).collect::<Vec<_>>().join(","));
    files.push(("dd_panel.csv".into(), csv(&header, &dates, &dd_refs, &all)));
    files.push(("pdd.csv".into(), csv("date,pdd", &dates, &[&pdd], &all)));

    let mut gpd = Vec::with_capacity(days);
    let mut sged = Vec::with_capacity(days);
    let mut np = Vec::with_capacity(days);
    for t in 0..days {
        let base = if stress[t] { 0.09 } else { 0.03 } + 0.004 * n(&mut rng);
        gpd.push(Some(base + 0.003 * n(&mut rng)));
        sged.push(Some(base * 1.1 + 0.003 * n(&mut rng)));
        np.push(Some(base * 0.9 + 0.004 * n(&mut rng)));
    }
    files.push(("catfin_var.csv".into(), csv("date,gpd,sged,np", &dates, &[&gpd, &sged, &np], &all)));

    files.push((
        "firms.csv".into(),
        "name,W,D,lrmes\nAlpha Bank,100,900,0.6\nBeta Corp,250,1500,0.35\nGamma Trust,80,120,0.2\nDelta Financial,40,700,0.55\n".into(),
    ));
    let mut chain = String::from("strike,quote\n");
    for k in (80..=120).step_by(5) {
        let kf = k as f64;
        // Out-of-the-money quotes decaying away from the forward.
        let q = 2.3 * (-((kf - 101.0) / 6.0).powi(2)).exp() + 0.02;
        let _ = writeln!(chain, "{k},{q:.4}");
    }
    files.push(("chain.csv".into(), chain));
    files.push(("ivrvsri.toml".into(), FIXTURE_CONFIG.into()));
    files
}

pub const FIXTURE_CONFIG: &str = r#"# Synthetic four-market fixture.
out_dir = "out"
w_iv = 0.5
rv_window = 21
annualization = 252
rv_scale = 100

[[markets]]
name = "USA"
price_csv = "prices_usa.csv"
iv_csv = "iv_usa.csv"
cap = 35.6

[[markets]]
name = "EUR"
price_csv = "prices_eur.csv"
iv_csv = "iv_eur.csv"
cap = 3.7

[[markets]]
name = "JAP"
price_csv = "prices_jap.csv"
iv_csv = "iv_jap.csv"
cap = 5.5

[[markets]]
name = "BRA"
price_csv = "prices_bra.csv"
iv_csv = "iv_bra.csv"
cap = 1.0

[riskmap]
breakpoints = [0.25, 0.5, 0.75]
window = { kind = "expanding" }
warmup = 252

[regression]
response = "USA"
lags = 5
thresholds = ["mean", "P25", "P10", "P5", "P2.5", "P1"]
taus = [0.5, 0.25, 0.1, 0.05, 0.01]
overlap = "both"
horizon = 5
return_kind = "simple"

[benchmarks]
srisk = "srisk.csv"
ciss = "ciss.csv"
firms = "firms.csv"
firm_k = 0.08
dd_panel = "dd_panel.csv"
pdd = "pdd.csv"
catfin_var = "catfin_var.csv"

[[chains]]
name = "USA_30d"
path = "chain.csv"
expiry = 0.0833333333
rate = 0.01
forward = 101.0
"#;

pub fn write_fixture(dir: &Path, seed: u64, days: usize) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in fixture_files(seed, days) {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Levels of an index and of a risk indicator, sampled weekly. A hidden
/// calm/stress chain switches the index into a crash regime in which the
/// previous week's rise of the indicator pulls the index down; in calm weeks
/// the indicator carries no information. The centre of the return
/// distribution is therefore nearly unaffected while its lower tail is.
pub struct RegimePanel {
    pub dates: Vec<NaiveDate>,
    pub index: Vec<f64>,
    pub indicator: Vec<f64>,
}

pub fn regime_switching_panel(seed: u64, weeks: usize) -> RegimePanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let calm_noise = Normal::<f64>::new(0.0015, 0.02).expect("valid");
    let x_calm = Normal::<f64>::new(0.0, 0.05).expect("valid");
    let x_stress = Normal::<f64>::new(0.03, 0.15).expect("valid");
    let start = NaiveDate::from_ymd_opt(2000, 1, 7).expect("valid");
    let dates: Vec<NaiveDate> = (0..weeks).map(|w| start + chrono::Days::new(7 * w as u64)).collect();

    let (mut idx, mut ind) = (1000.0, 50.0);
    let mut index = Vec::with_capacity(weeks);
    let mut indicator = Vec::with_capacity(weeks);
    let mut stress = false;
    let mut prev_x = 0.0f64;
    for _ in 0..weeks {
        let u: f64 = rng.gen();
        stress = if stress { u < 0.6 } else { u < 0.05 };
        let mut y = calm_noise.sample(&mut rng);
        if stress {
            y -= 0.8 * prev_x.max(0.0) + 0.01;
        }
        idx *= 1.0 + y.max(-0.9);
        let x = if stress { x_stress.sample(&mut rng) } else { x_calm.sample(&mut rng) };
        ind *= x.exp();
        index.push(idx);
        indicator.push(ind);
        prev_x = x;
    }
    RegimePanel { dates, index, indicator }
}
