use serde::Serialize;

use super::{align, AlignPolicy, TimeSeries};
use crate::error::Result;

const MIN_PAIRS: usize = 3;

/// Pearson correlations between the row series at `t` and the column series
/// at `t - lag` (positions on the union date index). With `lag = 0` the
/// matrix is symmetric with a unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<Option<f64>>>,
    pub lag: usize,
    pub diagnostics: Vec<String>,
}

impl CorrelationMatrix {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.entries[row][col]
    }
}

pub fn correlation_matrix(panel: &[TimeSeries], lag: usize) -> Result<CorrelationMatrix> {
    let aligned = align(panel, AlignPolicy::Union)?;
    let k = aligned.len();
    let mut entries = vec![vec![None; k]; k];
    let mut diagnostics = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if lag == 0 && j < i {
                entries[i][j] = entries[j][i];
                continue;
            }
            let (x, y) = (aligned[i].values(), aligned[j].values());
            let pairs: Vec<(f64, f64)> = (lag..x.len())
                .filter_map(|t| Some((x[t]?, y[t - lag]?)))
                .collect();
            if pairs.len() < MIN_PAIRS {
                diagnostics.push(format!(
                    "{} vs {} (lag {lag}): only {} complete pairs",
                    aligned[i].name(),
                    aligned[j].name(),
                    pairs.len()
                ));
                continue;
            }
            entries[i][j] = if lag == 0 && i == j {
                Some(1.0)
            } else {
                let r = pearson(&pairs);
                if r.is_none() {
                    diagnostics.push(format!(
                        "{} vs {} (lag {lag}): zero variance",
                        aligned[i].name(),
                        aligned[j].name()
                    ));
                }
                r
            };
        }
    }
    Ok(CorrelationMatrix {
        labels: aligned.iter().map(|s| s.name().to_string()).collect(),
        entries,
        lag,
        diagnostics,
    })
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
