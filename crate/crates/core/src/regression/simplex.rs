//! Dense bounded-variable primal simplex for
//!
//! ```text
//! minimize c'x  subject to  A x = b,  0 <= x_j <= u_j
//! ```
//!
//! with few equality rows and many columns. Columns are stored contiguously,
//! which for the quantile-regression dual is exactly the row-major design
//! matrix. A two-phase method with one artificial per row is used; the basis
//! inverse is kept explicitly and refactored periodically.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-10;
/// Degenerate steps tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

pub(crate) struct Problem<'a> {
    pub rows: usize,
    /// `n * rows` values, column `j` at `j * rows..(j + 1) * rows`.
    pub columns: &'a [f64],
    pub cost: &'a [f64],
    pub upper: &'a [f64],
    pub rhs: &'a [f64],
}

pub(crate) struct Solution {
    pub x: Vec<f64>,
    /// Simplex multipliers `pi` with `B' pi = c_B`.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Basic(usize),
    Lower,
    Upper,
}

struct Tableau<'a> {
    p: &'a Problem<'a>,
    n: usize,
    m: usize,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    /// Row-major `m x m` basis inverse.
    binv: Vec<f64>,
    art_upper: f64,
    iterations: usize,
}

impl<'a> Tableau<'a> {
    fn column(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            out.copy_from_slice(&self.p.columns[j * self.m..(j + 1) * self.m]);
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j - self.n] = self.art_sign[j - self.n];
        }
    }

    fn upper(&self, j: usize) -> f64 {
        if j < self.n {
            self.p.upper[j]
        } else {
            self.art_upper
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = DMatrix::<f64>::zeros(m, m);
        let mut col = vec![0.0; m];
        for (pos, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for r in 0..m {
                b[(r, pos)] = col[r];
            }
        }
        let inv = b.try_inverse().ok_or(Error::Solver {
            iterations: self.iterations,
            objective: f64::NAN,
            gap: f64::INFINITY,
        })?;
        for r in 0..m {
            for c in 0..m {
                self.binv[r * m + c] = inv[(r, c)];
            }
        }
        // Basic values from the nonbasic ones.
        let mut resid = self.p.rhs.to_vec();
        for j in 0..self.n + m {
            if !matches!(self.status[j], Status::Basic(_)) && self.x[j] != 0.0 {
                self.column(j, &mut col);
                resid.iter_mut().zip(&col).for_each(|(r, a)| *r -= a * self.x[j]);
            }
        }
        for pos in 0..m {
            let v: f64 = (0..m).map(|c| self.binv[pos * m + c] * resid[c]).sum();
            self.x[self.basis[pos]] = v;
        }
        Ok(())
    }

    fn multipliers(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (pos, &j) in self.basis.iter().enumerate() {
            let c = cost(j);
            if c != 0.0 {
                for k in 0..m {
                    pi[k] += c * self.binv[pos * m + k];
                }
            }
        }
        pi
    }

    /// Runs simplex iterations for `cost` until optimal.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64, opt_tol: f64, max_iter: usize) -> Result<()> {
        let m = self.m;
        let mut stall = 0usize;
        let mut alpha = vec![0.0; m];
        let mut col = vec![0.0; m];
        loop {
            if self.iterations % REFACTOR_EVERY == 0 {
                self.refactor()?;
            }
            if self.iterations >= max_iter {
                return Err(Error::Solver {
                    iterations: self.iterations,
                    objective: (0..self.n).map(|j| cost(j) * self.x[j]).sum(),
                    gap: f64::NAN,
                });
            }
            let pi = self.multipliers(cost);

            // Pricing over nonbasic structurals; artificials never re-enter.
            let bland = stall >= STALL_LIMIT;
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.n {
                let status = self.status[j];
                if matches!(status, Status::Basic(_)) {
                    continue;
                }
                let cj = &self.p.columns[j * m..(j + 1) * m];
                let d = cost(j) - pi.iter().zip(cj).map(|(a, b)| a * b).sum::<f64>();
                let gain = match status {
                    Status::Lower if d < -opt_tol && self.p.upper[j] > 0.0 => -d,
                    Status::Upper if d > opt_tol => d,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return Ok(());
            };
            let dir = if self.status[q] == Status::Lower { 1.0 } else { -1.0 };

            self.column(q, &mut col);
            for r in 0..m {
                alpha[r] = (0..m).map(|c| self.binv[r * m + c] * col[c]).sum();
            }

            // Harris two-pass ratio test. Basic x_B moves by -dir * t * alpha.
            let slack = |pos: usize, rate: f64, tab: &Self| -> f64 {
                let j = tab.basis[pos];
                if rate > 0.0 {
                    tab.x[j]
                } else {
                    tab.upper(j) - tab.x[j]
                }
            };
            let mut t_relaxed = self.upper(q);
            for pos in 0..m {
                let rate = dir * alpha[pos];
                if rate.abs() > PIVOT_TOL {
                    let bound_room = slack(pos, rate, self);
                    if bound_room.is_finite() {
                        t_relaxed = t_relaxed.min((bound_room + FEAS_TOL) / rate.abs());
                    }
                }
            }
            let mut leave: Option<usize> = None;
            let mut step = self.upper(q);
            let mut best_pivot = 0.0;
            for pos in 0..m {
                let rate = dir * alpha[pos];
                if rate.abs() > PIVOT_TOL {
                    let bound_room = slack(pos, rate, self);
                    if !bound_room.is_finite() {
                        continue;
                    }
                    let ratio = bound_room.max(0.0) / rate.abs();
                    if ratio <= t_relaxed && rate.abs() > best_pivot {
                        best_pivot = rate.abs();
                        leave = Some(pos);
                        step = ratio;
                    }
                }
            }
            if leave.is_some() && self.upper(q) <= step {
                // The entering variable reaches its opposite bound first.
                leave = None;
                step = self.upper(q);
            }
            if !step.is_finite() {
                return Err(Error::Solver {
                    iterations: self.iterations,
                    objective: f64::NEG_INFINITY,
                    gap: f64::INFINITY,
                });
            }

            stall = if step > 0.0 { 0 } else { stall + 1 };
            self.x[q] += dir * step;
            for pos in 0..m {
                let j = self.basis[pos];
                self.x[j] -= dir * step * alpha[pos];
            }
            match leave {
                None => {
                    self.status[q] = if dir > 0.0 { Status::Upper } else { Status::Lower };
                    self.x[q] = if dir > 0.0 { self.upper(q) } else { 0.0 };
                }
                Some(r) => {
                    let out = self.basis[r];
                    let rate = dir * alpha[r];
                    if rate > 0.0 {
                        self.x[out] = 0.0;
                        self.status[out] = Status::Lower;
                    } else {
                        self.x[out] = self.upper(out);
                        self.status[out] = Status::Upper;
                    }
                    self.pivot(r, q, &alpha);
                }
            }
            self.iterations += 1;
        }
    }

    /// Replaces basis position `r` by column `q`, whose transformed column
    /// is `alpha`.
    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let row_r: Vec<f64> = (0..m).map(|c| self.binv[r * m + c] / piv).collect();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = alpha[i];
            if f != 0.0 {
                for c in 0..m {
                    self.binv[i * m + c] -= f * row_r[c];
                }
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);
        self.basis[r] = q;
        self.status[q] = Status::Basic(r);
    }

    /// Pivots zero-valued artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) -> Result<()> {
        self.refactor()?;
        let m = self.m;
        let mut col = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let candidate = (0..self.n)
                .filter(|j| !matches!(self.status[*j], Status::Basic(_)))
                .map(|j| {
                    let cj = &self.p.columns[j * m..(j + 1) * m];
                    let a_r: f64 = (0..m).map(|c| self.binv[r * m + c] * cj[c]).sum();
                    (j, a_r.abs())
                })
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, mag)) = candidate {
                if mag > 1e-7 {
                    self.column(j, &mut col);
                    for i in 0..m {
                        alpha[i] = (0..m).map(|c| self.binv[i * m + c] * col[c]).sum();
                    }
                    let out = self.basis[r];
                    self.x[out] = 0.0;
                    self.status[out] = Status::Lower;
                    self.pivot(r, j, &alpha);
                }
            }
        }
        self.refactor()
    }
}

/// Solves the problem from a start point whose entries are each at a bound.
pub(crate) fn solve(p: &Problem<'_>, start: &[f64], opt_tol: f64, max_iter: usize) -> Result<Solution> {
    let m = p.rows;
    let n = p.cost.len();
    debug_assert_eq!(p.columns.len(), n * m);
    debug_assert_eq!(start.len(), n);

    let mut x = start.to_vec();
    x.resize(n + m, 0.0);
    let mut resid = p.rhs.to_vec();
    for j in 0..n {
        if x[j] != 0.0 {
            for r in 0..m {
                resid[r] -= p.columns[j * m + r] * x[j];
            }
        }
    }
    let art_sign: Vec<f64> = resid.iter().map(|r| if *r < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut status: Vec<Status> = start
        .iter()
        .zip(p.upper)
        .map(|(v, u)| if *v > 0.0 && *v >= *u { Status::Upper } else { Status::Lower })
        .collect();
    for r in 0..m {
        x[n + r] = resid[r].abs();
        status.push(Status::Basic(r));
    }
    let mut binv = vec![0.0; m * m];
    for r in 0..m {
        binv[r * m + r] = art_sign[r];
    }

    let mut tab = Tableau {
        p,
        n,
        m,
        art_sign,
        x,
        status,
        basis: (n..n + m).collect(),
        binv,
        art_upper: f64::INFINITY,
        iterations: 0,
    };

    let rhs_scale = p.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
    tab.optimize(&phase1_cost, 1e-12, max_iter)?;
    let infeasibility: f64 = tab.x[n..].iter().sum();
    if infeasibility > 1e-8 * rhs_scale {
        return Err(Error::Solver {
            iterations: tab.iterations,
            objective: f64::NAN,
            gap: infeasibility,
        });
    }
    tab.art_upper = 0.0;
    for r in 0..m {
        if !matches!(tab.status[n + r], Status::Basic(_)) {
            tab.x[n + r] = 0.0;
        }
    }
    tab.drive_out_artificials()?;

    let phase2_cost = |j: usize| if j < n { p.cost[j] } else { 0.0 };
    tab.optimize(&phase2_cost, opt_tol, max_iter)?;
    tab.refactor()?;
    let duals = tab.multipliers(&phase2_cost);
    let mut x = tab.x;
    x.truncate(n);
    for (v, u) in x.iter_mut().zip(p.upper) {
        *v = v.clamp(0.0, *u);
    }
    Ok(Solution {
        x,
        duals,
        iterations: tab.iterations,
    })
}
