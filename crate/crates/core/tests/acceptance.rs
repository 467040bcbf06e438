//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit status
//! if any criterion fails. Thresholds are fixed here and never relaxed.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use approx::relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ivrvsri::benchmarks::{catfin_combine, srisk_aggregate, srisk_firm, FirmSnapshot};
use ivrvsri::indicator::{cap_weights, IndicatorSet, MarketVol, MixWeights};
use ivrvsri::io::{run_pipeline, EngineConfig, RunOptions, Stage};
use ivrvsri::regression::{build_design, intercept_only_fit, pinball_loss, quantile_regression, LaggedDesign};
use ivrvsri::riskmap::{classify, occupancy, MapPolicy};
use ivrvsri::series::{compute_returns, ReturnKind, TimeSeries};
use ivrvsri::volatility::{implied_variance_index, realized_vol, OptionChainSlice, RvParams};
use ivrvsri::Error;

use common::synthetic::{business_days, regime_switching_panel};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"))
}

fn dates(n: usize) -> Vec<chrono::NaiveDate> {
    business_days(chrono::NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), n)
}

fn series(name: &str, v: &[f64]) -> TimeSeries {
    TimeSeries::from_values(name, dates(v.len()), v.iter().copied()).unwrap()
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("M{i}")).collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn c1_weights() -> Outcome {
    let w = cap_weights(&labels(4), &[35.6, 3.7, 5.5, 1.0]).map_err(|e| e.to_string())?;
    let published = [77.7, 8.1, 12.0, 2.2];
    let worst = w.weights.iter().zip(published).map(|(a, b)| (100.0 * a - b).abs()).fold(0.0, f64::max);
    ensure(worst <= 0.05, format!("max deviation {worst:.4} pp"))?;
    Ok(format!("max deviation {worst:.4} pp"))
}

fn c2_composition() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mix = MixWeights::new(0.37).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let caps: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..50.0)).collect();
        let weights = cap_weights(&labels(4), &caps).unwrap();
        let markets: Vec<MarketVol> = (0..4)
            .map(|m| {
                let iv: Vec<f64> = (0..500).map(|_| rng.gen_range(8.0..80.0)).collect();
                let rv: Vec<f64> = (0..500).map(|_| rng.gen_range(5.0..90.0)).collect();
                MarketVol { label: format!("M{m}"), iv: series("iv", &iv), rv: series("rv", &rv) }
            })
            .collect();
        let set = IndicatorSet::build(&markets, weights.clone(), mix).map_err(|e| e.to_string())?;
        // Mix of composites versus composite of per-market mixes, both
        // evaluated here from the raw inputs.
        for t in 0..500 {
            let (mut iv, mut rv, mut per_market) = (0.0, 0.0, 0.0);
            for (m, w) in markets.iter().zip(&weights.weights) {
                let (i, r) = (m.iv.get(t).unwrap(), m.rv.get(t).unwrap());
                iv += w * i;
                rv += w * r;
                per_market += w * (mix.w_iv() * i + mix.w_rv() * r);
            }
            let eq7 = mix.w_iv() * iv + mix.w_rv() * rv;
            let engine = set.ivrvsri.get(t).unwrap();
            worst = worst.max((eq7 - per_market).abs()).max((engine - per_market).abs());
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-10, format!("max-abs discrepancy {worst:e}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("max-abs discrepancy {worst:e} in {elapsed:?}"))
}

fn c3_realized_vol() -> Outcome {
    let params = RvParams::default();
    let growth: Vec<f64> = (0..22).map(|t| (0.01 * t as f64).exp()).collect();
    let rv = realized_vol(&series("p", &growth), params).map_err(|e| e.to_string())?;
    let last = rv.get(21).ok_or("no value at the end of the window")?;
    ensure((last - 0.158745).abs() <= 1e-6, format!("RV {last}"))?;

    let flat = realized_vol(&series("p", &[42.0; 30]), params).map_err(|e| e.to_string())?;
    ensure(flat.present().all(|v| v == 0.0) && flat.count_present() == 9, "constant prices do not give exactly 0")?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p = 100.0;
    let prices: Vec<f64> = (0..300)
        .map(|_| {
            p *= (0.02 * normal(&mut rng)).exp();
            p
        })
        .collect();
    let base = realized_vol(&series("p", &prices), params).unwrap();
    let mut worst = 0.0f64;
    for c in [1e-3, 0.37, 7.0, 1e4] {
        let scaled: Vec<f64> = prices.iter().map(|v| v * c).collect();
        let other = realized_vol(&series("p", &scaled), params).unwrap();
        for (a, b) in base.values().iter().zip(other.values()) {
            match (a, b) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                _ => return Err("scaling changed the missing pattern".into()),
            }
        }
    }
    ensure(worst <= 1e-12, format!("scale invariance off by {worst:e}"))?;
    Ok(format!("RV {last:.7}; flat 0; scale invariance {worst:e}"))
}

fn c4_implied_variance() -> Outcome {
    let slice = OptionChainSlice::new(0.25, 0.0, 100.0, vec![100.0, 105.0], vec![2.0, 1.0]).map_err(|e| e.to_string())?;
    let index = implied_variance_index(&slice).map_err(|e| e.to_string())?;
    let hand = 100.0 * (8.0 * (5.0 * 2.0 / 100.0f64.powi(2) + 5.0 * 1.0 / 105.0f64.powi(2))).sqrt();
    ensure((index - 10.783).abs() <= 0.001, format!("index {index}"))?;
    ensure((index - hand).abs() <= 1e-12, format!("index {index} vs hand strip {hand}"))?;

    let zero = OptionChainSlice::new(0.25, 0.0, 102.5, vec![100.0, 105.0], vec![0.0, 0.0]).map_err(|e| e.to_string())?;
    match implied_variance_index(&zero) {
        Err(Error::DegenerateChain { variance }) if variance < 0.0 => {
            Ok(format!("index {index:.4}; zero-quote chain rejected (σ² = {variance:e})"))
        }
        other => Err(format!("zero-quote chain gave {other:?}")),
    }
}

fn c5_srisk() -> Outcome {
    let (w, d, k, l) = (100.0, 900.0, 0.08, 0.6);
    let s = FirmSnapshot::new("fixture", w, d, l, k).map_err(|e| e.to_string())?;
    let v = srisk_firm(&s).map_err(|e| e.to_string())?;
    let direct = k * d - (1.0 - k) * w * (1.0 - l);
    let leverage = w * (k * (d + w) / w + (1.0 - k) * l - 1.0);
    // "Exactly" at double precision: a few ulps of the result.
    let ulps = 4.0 * f64::EPSILON * 35.2;
    for (name, x) in [("engine", v), ("direct form", direct), ("leverage form", leverage)] {
        ensure((x - 35.2).abs() <= ulps, format!("{name} gives {x}"))?;
    }
    let agg = srisk_aggregate(&[35.2, -10.0, 5.0]);
    ensure((agg - 40.2).abs() <= ulps, format!("aggregate {agg}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let base = FirmSnapshot::new(
            "r",
            rng.gen_range(1.0..500.0),
            rng.gen_range(0.0..5000.0),
            rng.gen_range(0.0..0.95),
            rng.gen_range(0.01..0.2),
        )
        .unwrap();
        let v0 = srisk_firm(&base).map_err(|e| e.to_string())?;
        let bump = |f: &dyn Fn(&mut FirmSnapshot)| {
            let mut s = base.clone();
            f(&mut s);
            srisk_firm(&s).unwrap()
        };
        let more_debt = bump(&|s| s.debt *= 1.1);
        let more_equity = bump(&|s| s.equity *= 1.1);
        let more_lrmes = bump(&|s| s.lrmes = (s.lrmes + 0.02).min(0.99));
        let more_k = bump(&|s| s.k += 0.01);
        let ok = more_debt >= v0 && more_equity < v0 && more_lrmes >= v0 && more_k > v0;
        ensure(ok, format!("monotonicity violated on snapshot {i}: {base:?}"))?;
    }
    Ok(format!("{v} (both forms); aggregate {agg}; 1000 monotonicity checks"))
}

fn c6_catfin() -> Outcome {
    let all = catfin_combine(1.0, 1.0, 1.0);
    let first = catfin_combine(1.0, 0.0, 0.0);
    ensure((all - 1.7308).abs() <= 1e-10, format!("(1,1,1) -> {all}"))?;
    ensure(first == 0.5700, format!("(1,0,0) -> {first}"))?;
    Ok(format!("(1,1,1) -> {all}; (1,0,0) -> {first}"))
}

fn design(rows: &[Vec<f64>], y: &[f64]) -> LaggedDesign {
    let labels = (0..rows[0].len()).map(|j| if j == 0 { "intercept".into() } else { format!("x{j}") }).collect();
    LaggedDesign::from_rows(y.to_vec(), rows.to_vec(), labels).unwrap()
}

/// Best pinball loss over the lines through two observations: with one
/// regressor and an intercept, some optimal basic solution interpolates two
/// points.
fn pair_oracle(x: &[f64], y: &[f64], tau: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] != x[j] {
                let b = (y[j] - y[i]) / (x[j] - x[i]);
                let a = y[i] - b * x[i];
                best = best.min(pinball_loss(x.iter().zip(y).map(|(u, v)| v - a - b * u), tau));
            }
        }
    }
    best
}

fn c7_quantile_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = rng.gen_range(3..=30);
        let tau = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, rng.gen_range(0.02..0.98)][i % 8];
        let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.3 - 0.7 * v + normal(&mut rng).powi(3)).collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![1.0, *v]).collect();
        let fit = quantile_regression(&design(&rows, &y), tau).map_err(|e| format!("instance {i}: {e}"))?;
        let oracle = pair_oracle(&x, &y, tau);
        let rel = (fit.objective - oracle).abs() / oracle.max(1e-300);
        worst = worst.max(rel);
        ensure(rel <= 1e-9, format!("instance {i} (n={n}, τ={tau}): {} vs oracle {oracle}", fit.objective))?;

        // Intercept only: scan the order statistics.
        let (b, v) = intercept_only_fit(&y, tau).map_err(|e| e.to_string())?;
        let scan = y.iter().map(|c| pinball_loss(y.iter().map(|v| v - c), tau)).fold(f64::INFINITY, f64::min);
        let at_b = pinball_loss(y.iter().map(|v| v - b), tau);
        ensure(
            relative_eq!(v, scan, max_relative = 1e-12, epsilon = 1e-15)
                && relative_eq!(at_b, scan, max_relative = 1e-12, epsilon = 1e-15),
            format!("instance {i}: intercept-only objective {v} (at b: {at_b}) vs scan {scan}"),
        )?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("200 instances, worst relative gap {worst:e}, {elapsed:?}"))
}

fn c8_pseudo_r2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let n = rng.gen_range(20..120);
        let tau = [0.05, 0.25, 0.5, 0.9][i % 4];
        let extra = rng.gen_range(1..4);
        let full_rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r = vec![1.0];
                r.extend((0..1 + extra).map(|_| normal(&mut rng)));
                r
            })
            .collect();
        let y: Vec<f64> = full_rows.iter().map(|r| 0.4 * r[1] - 0.2 * r[2] + normal(&mut rng)).collect();
        let small_rows: Vec<Vec<f64>> = full_rows.iter().map(|r| r[..2].to_vec()).collect();
        let small = quantile_regression(&design(&small_rows, &y), tau).map_err(|e| format!("pair {i}: {e}"))?;
        let full = quantile_regression(&design(&full_rows, &y), tau).map_err(|e| format!("pair {i}: {e}"))?;
        for r in [&small, &full] {
            let restricted = r.restricted_objective.ok_or("missing restricted objective")?;
            ensure(r.objective <= restricted, format!("pair {i}: v_full {} > v_restricted {restricted}", r.objective))?;
            ensure((0.0..=1.0).contains(&r.fit.value()), format!("pair {i}: pseudo R² {}", r.fit.value()))?;
        }
        ensure(
            full.fit.value() >= small.fit.value() - 1e-9,
            format!("pair {i}: pseudo R² fell from {} to {}", small.fit.value(), full.fit.value()),
        )?;
    }

    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![1.0, i as f64]).collect();
    let y: Vec<f64> = (0..12).map(|i| 1.0 + 2.0 * i as f64).collect();
    let one = quantile_regression(&design(&rows, &y), 0.3).map_err(|e| e.to_string())?.fit.value();
    let ones: Vec<Vec<f64>> = y.iter().map(|_| vec![1.0]).collect();
    let zero = quantile_regression(&design(&ones, &y), 0.3).map_err(|e| e.to_string())?.fit.value();
    ensure(one == 1.0 && zero == 0.0, format!("trivial fixtures gave {one} and {zero}"))?;
    Ok("100 nested pairs monotone; trivial fixtures 1 and 0".into())
}

fn c9_riskmap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let policy = MapPolicy { warmup: 60, ..MapPolicy::default() };
    for i in 0..50 {
        let mut level = 0.0;
        let x: Vec<f64> = (0..400)
            .map(|_| {
                level += 0.1 * normal(&mut rng);
                level
            })
            .collect();
        let a = classify(&series("x", &x), &policy).unwrap();
        let b = classify(&series("x", &x).map(f64::exp), &policy).unwrap();
        ensure(a.buckets == b.buckets, format!("series {i}: exp changed the buckets"))?;
        ensure(a.classified() > 0, "nothing classified")?;
    }

    let x: Vec<f64> = (0..1500).map(|_| normal(&mut rng)).collect();
    let full = classify(&series("x", &x), &policy).unwrap();
    for _ in 0..20 {
        let cut = rng.gen_range(1..x.len());
        let head = classify(&series("x", &x).truncate(cut), &policy).unwrap();
        ensure(head.buckets[..] == full.buckets[..cut], format!("future data changed buckets before cut {cut}"))?;
    }

    let u: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
    let occ = occupancy(&classify(&series("u", &u), &MapPolicy::default()).unwrap()).unwrap();
    let worst = occ.iter().map(|o| (o - 0.25).abs()).fold(0.0, f64::max);
    ensure(worst <= 0.03, format!("occupancy {occ:?}"))?;
    Ok(format!("50 series rank-invariant; 20 cuts causal; occupancy {occ:.3?}"))
}

fn c10_tail_dominance() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut failures = Vec::new();
    for seed in 0..100 {
        let panel = regime_switching_panel(seed, 1040);
        let index = TimeSeries::from_values("index", panel.dates.clone(), panel.index).unwrap();
        let indicator = TimeSeries::from_values("IVRVSRI", panel.dates, panel.indicator).unwrap();
        let y = compute_returns(&index, ReturnKind::Simple, 1, true).map_err(|e| e.to_string())?;
        let x = compute_returns(&indicator, ReturnKind::Simple, 1, true).map_err(|e| e.to_string())?;
        let d = build_design(&y, &[x], 1).map_err(|e| e.to_string())?;
        let tail = quantile_regression(&d, 0.01).map_err(|e| e.to_string())?.fit.value();
        let centre = quantile_regression(&d, 0.5).map_err(|e| e.to_string())?.fit.value();
        if tail > centre {
            wins += 1;
        } else {
            failures.push(seed);
        }
    }
    let elapsed = start.elapsed();
    ensure(wins >= 90, format!("{wins}/100 seeds; failing seeds {failures:?}"))?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!("{wins}/100 seeds, {elapsed:?}"))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                let mut bytes = std::fs::read(&path).unwrap();
                if rel == "manifest.json" {
                    let mut m: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                    m.as_object_mut().unwrap().remove("timestamp");
                    bytes = serde_json::to_vec(&m).unwrap();
                }
                out.insert(rel, bytes);
            }
        }
    }
    out
}

fn c11_determinism() -> Outcome {
    let cfg = EngineConfig::load(common::fixture_dir().join("ivrvsri.toml")).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let opts = RunOptions { out_dir: Some(tmp.path().join(run)), ..RunOptions::default() };
        run_pipeline(&cfg, Stage::All, &opts).map_err(|e| e.to_string())?;
        trees.push(read_tree(&tmp.path().join(run)));
    }
    ensure(trees[0].len() > 20, format!("only {} artifacts", trees[0].len()))?;
    let differing: Vec<&String> = trees[0]
        .iter()
        .filter(|(k, v)| trees[1].get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    ensure(
        differing.is_empty() && trees[0].len() == trees[1].len(),
        format!("differing artifacts: {differing:?}"),
    )?;
    Ok(format!("{} artifacts byte-identical", trees[0].len()))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "market weights", c1_weights),
        (2, "composition identity", c2_composition),
        (3, "realized volatility closed form", c3_realized_vol),
        (4, "implied-variance strip", c4_implied_variance),
        (5, "SRISK", c5_srisk),
        (6, "CATFIN constants", c6_catfin),
        (7, "quantile-regression oracle", c7_quantile_oracle),
        (8, "pseudo R² contract", c8_pseudo_r2),
        (9, "risk-map invariance and causality", c9_riskmap),
        (10, "tail dominance on regime-switching panel", c10_tail_dominance),
        (11, "end-to-end determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("criterion {id}: PASS — {name}: {detail}"),
            Ok(Err(detail)) => {
                failed += 1;
                println!("criterion {id}: FAIL — {name}: {detail}");
            }
            Err(_) => {
                failed += 1;
                println!("criterion {id}: FAIL — {name}: panicked");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
