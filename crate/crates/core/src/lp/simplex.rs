//! Dense revised simplex with explicit basis inverse and periodic
//! refactorization.
//!
//! The constraint systems built by the relaxation layer are heavily
//! rank-deficient and almost every rhs entry is zero, which makes two
//! classical pathologies bite at once: degenerate stalling and numerical
//! drift. Three countermeasures keep the solver fast and trustworthy:
//!
//! * a tiny deterministic rhs perturbation, applied in the current basis
//!   frame, makes ratio tests nondegenerate; it is swapped back out before
//!   extraction (dual feasibility does not depend on the rhs, so
//!   certificates are unaffected);
//! * a Harris two-pass ratio test always pivots on the largest eligible
//!   element, never on elimination garbage;
//! * the basis inverse is rebuilt from the original data every
//!   [`REFACTOR_EVERY`] pivots and once more before extraction, so drift
//!   cannot accumulate beyond one refactorization window.
//!
//! Bland's rule remains as a termination backstop after long stalls.

use super::{LinearProgramSpec, LpError, LpOutcome, LpSolution};
use rayon::prelude::*;

const ENTER_EPS: f64 = 1e-9;
/// Relative floor for an acceptable pivot element in the ratio test.
const PIVOT_REL: f64 = 1e-7;
const PIVOT_ABS: f64 = 1e-10;
/// Minimum pivot magnitude for an entering column to be accepted at all.
const PIVOT_OK: f64 = 1e-7;
/// How many priced columns the ratio test may reject per iteration.
const CANDIDATES: usize = 8;
/// Harris ratio-test feasibility relaxation per pivot.
const HARRIS_DELTA: f64 = 1e-9;
/// Scale of the rhs perturbation that breaks degenerate ties.
const PERTURB: f64 = 1e-7;
const MAX_ITERS: usize = 200_000;
const STALL_LIMIT: usize = 2_000;
const REFACTOR_EVERY: usize = 128;
/// Basis dimension above which dense row operations use the rayon pool.
const PAR_DIM: usize = 512;

/// Column-compressed copy of the constraint matrix (sign-normalized so
/// every rhs is nonnegative).
struct Columns {
    m: usize,
    n: usize,
    starts: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl Columns {
    fn build(lp: &LinearProgramSpec, row_sign: &[f64]) -> Columns {
        let (m, n) = (lp.constraints.len(), lp.n_vars);
        let mut counts = vec![0usize; n];
        for c in &lp.constraints {
            for &(j, _) in &c.terms {
                counts[j as usize] += 1;
            }
        }
        let mut starts = vec![0usize; n + 1];
        for j in 0..n {
            starts[j + 1] = starts[j] + counts[j];
        }
        let nnz = starts[n];
        let mut idx = vec![0u32; nnz];
        let mut val = vec![0.0f64; nnz];
        let mut fill = starts.clone();
        for (r, c) in lp.constraints.iter().enumerate() {
            for &(j, v) in &c.terms {
                let k = fill[j as usize];
                idx[k] = r as u32;
                val[k] = row_sign[r] * v;
                fill[j as usize] = k + 1;
            }
        }
        Columns { m, n, starts, idx, val }
    }

    fn col(&self, j: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.starts[j], self.starts[j + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }

    /// Sparse dot of column `j` with a dense vector.
    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let (idx, val) = self.col(j);
        idx.iter().zip(val).map(|(&i, &v)| y[i as usize] * v).sum()
    }
}

struct Solver {
    cols: Columns,
    /// Current rhs (original plus any active perturbation), sign-normalized.
    b_cur: Vec<f64>,
    b_orig: Vec<f64>,
    /// Basic variable per row; values `>= n` are artificials.
    basis: Vec<usize>,
    /// Dense basis inverse, row-major `m x m`.
    binv: Vec<f64>,
    /// Basic solution `B^-1 b_cur`.
    xb: Vec<f64>,
    costs: Vec<f64>,
    is_basic: Vec<bool>,
    bland: bool,
    iters: usize,
}

pub(super) fn solve(lp: &LinearProgramSpec) -> Result<LpOutcome, LpError> {
    // The relaxation constraint systems are heavily redundant (their rank is
    // far below the row count), which both slows the simplex down and makes
    // honest bases impossible to maintain numerically. Work on a maximal
    // independent subset of rows; dropped rows keep dual multiplier zero,
    // which is certificate-sound (verification runs on the original data,
    // and a wrongly dropped row could only weaken the bound, never fake it).
    match independent_rows(lp)? {
        RowSelection::Inconsistent => return Ok(LpOutcome::Infeasible),
        RowSelection::All => solve_full(lp, None),
        RowSelection::Subset(keep) => {
            let reduced = LinearProgramSpec {
                n_vars: lp.n_vars,
                objective: lp.objective.clone(),
                constraints: keep.iter().map(|&r| lp.constraints[r].clone()).collect(),
            };
            solve_full(&reduced, Some((keep, lp.constraints.len())))
        }
    }
}

enum RowSelection {
    All,
    Subset(Vec<usize>),
    Inconsistent,
}

/// Row-echelon pass over `[A | b]` identifying a maximal set of linearly
/// independent rows. A dependent row whose rhs fails to follow marks the
/// equality system (even before `x >= 0`) as inconsistent.
fn independent_rows(lp: &LinearProgramSpec) -> Result<RowSelection, LpError> {
    let (m, n) = (lp.constraints.len(), lp.n_vars);
    if m <= 1 {
        return Ok(RowSelection::All);
    }
    let width = n + 1;
    let mut w = vec![0.0f64; m * width];
    let mut scale = vec![0.0f64; m];
    for (r, c) in lp.constraints.iter().enumerate() {
        for &(j, v) in &c.terms {
            w[r * width + j as usize] += v;
        }
        w[r * width + n] = c.rhs;
        scale[r] = c.terms.iter().map(|&(_, v)| v.abs()).fold(c.rhs.abs(), f64::max).max(1.0);
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rank = 0usize;
    for col in 0..n {
        let Some((pos, _)) = order[rank..]
            .iter()
            .enumerate()
            .map(|(i, &r)| (i, w[r * width + col].abs() / scale[r]))
            .filter(|&(_, v)| v > 1e-7)
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            continue;
        };
        order.swap(rank, rank + pos);
        let prow_idx = order[rank];
        let inv = 1.0 / w[prow_idx * width + col];
        let prow: Vec<f64> = w[prow_idx * width..(prow_idx + 1) * width]
            .iter()
            .map(|v| v * inv)
            .collect();
        let rest = &order[rank + 1..];
        let elim = |r: usize, w: &mut [f64]| {
            let row = &mut w[r * width..(r + 1) * width];
            let f = row[col];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[col] = 0.0;
            }
        };
        for &r in rest {
            elim(r, &mut w);
        }
        rank += 1;
        if rank == m {
            break;
        }
    }
    // Rows beyond the rank are dependent; their residual rhs must vanish.
    for &r in &order[rank..] {
        if w[r * width + n].abs() > 1e-6 * scale[r] {
            return Ok(RowSelection::Inconsistent);
        }
    }
    if rank == m {
        return Ok(RowSelection::All);
    }
    let mut keep: Vec<usize> = order[..rank].to_vec();
    keep.sort_unstable();
    Ok(RowSelection::Subset(keep))
}

/// Scatters a reduced-system dual back over the original row set.
fn expand_dual(dual: Vec<f64>, mapping: &Option<(Vec<usize>, usize)>) -> Vec<f64> {
    match mapping {
        None => dual,
        Some((keep, full_m)) => {
            let mut y = vec![0.0; *full_m];
            for (i, &r) in keep.iter().enumerate() {
                y[r] = dual[i];
            }
            y
        }
    }
}

fn solve_full(
    lp: &LinearProgramSpec,
    mapping: Option<(Vec<usize>, usize)>,
) -> Result<LpOutcome, LpError> {
    let (m, n) = (lp.constraints.len(), lp.n_vars);
    if m == 0 {
        return Ok(if lp.objective.iter().any(|&c| c < 0.0) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal(LpSolution {
                primal: vec![0.0; n],
                objective_value: 0.0,
                dual: expand_dual(vec![], &mapping),
            })
        });
    }
    let row_sign: Vec<f64> = lp.constraints.iter().map(|c| if c.rhs < 0.0 { -1.0 } else { 1.0 }).collect();
    let b_orig: Vec<f64> = lp
        .constraints
        .iter()
        .zip(&row_sign)
        .map(|(c, s)| s * c.rhs)
        .collect();
    let cols = Columns::build(lp, &row_sign);

    let mut s = Solver {
        cols,
        b_cur: b_orig.clone(),
        b_orig,
        basis: (n..n + m).collect(),
        binv: identity(m),
        xb: vec![0.0; m],
        costs: vec![0.0; n + m],
        is_basic: vec![false; n + m],
        bland: false,
        iters: 0,
    };
    for j in n..n + m {
        s.is_basic[j] = true;
    }

    // Phase 1: minimize the artificial sum from the all-artificial basis.
    for c in &mut s.costs[n..] {
        *c = 1.0;
    }
    s.xb.copy_from_slice(&s.b_cur);
    s.perturb();
    if !s.run_phase(false)? {
        return Err(LpError::Numerical("phase 1 reported unbounded".into()));
    }
    // Swap the original rhs back; for a consistent system the artificial
    // mass left over from the perturbation disappears with it.
    s.set_rhs_to_original();
    let infeas: f64 = (0..m)
        .filter(|&r| s.basis[r] >= n)
        .map(|r| s.xb[r].abs())
        .sum::<f64>()
        + s.xb.iter().map(|&v| (-v).max(0.0)).sum::<f64>();
    if infeas > 1e-6 * (1.0 + s.b_orig.iter().map(|b| b.abs()).sum::<f64>()) {
        return Ok(LpOutcome::Infeasible);
    }

    // Phase 2 on the real objective, freshly perturbed.
    for j in 0..n {
        s.costs[j] = lp.objective[j];
    }
    for c in &mut s.costs[n..] {
        *c = 0.0;
    }
    s.perturb();
    s.bland = false;
    if !s.run_phase(true)? {
        return Ok(LpOutcome::Unbounded);
    }

    // Final refactorization against the original rhs, then extract.
    s.b_cur = s.b_orig.clone();
    s.refactorize()?;
    let mut primal = vec![0.0; n];
    for r in 0..m {
        let level = s.xb[r];
        if level < -1e-6 {
            return Err(LpError::Numerical(format!(
                "basis infeasible after perturbation swap-back (level {level:.3e})"
            )));
        }
        if s.basis[r] < n {
            primal[s.basis[r]] = level.max(0.0);
        } else if level > 1e-7 {
            return Err(LpError::Numerical("artificial variable stuck at positive level".into()));
        }
    }
    for (r, c) in lp.constraints.iter().enumerate() {
        let lhs: f64 = c.terms.iter().map(|&(j, v)| v * primal[j as usize]).sum();
        let scale = 1.0 + c.terms.iter().map(|&(_, v)| v.abs()).sum::<f64>();
        if (lhs - c.rhs).abs() > 1e-6 * scale {
            return Err(LpError::Numerical(format!(
                "primal residual {:.3e} in row {r}",
                (lhs - c.rhs).abs()
            )));
        }
    }
    let y_signed = s.dual_signed();
    let dual: Vec<f64> = y_signed
        .iter()
        .zip(&row_sign)
        .map(|(&y, &sg)| y * sg)
        .collect();
    let dual = expand_dual(dual, &mapping);
    let objective_value = lp.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
    if std::env::var_os("ONEIND_LP_STATS").is_some() {
        eprintln!("lp: {m} rows x {n} cols, {} pivots", s.iters);
    }
    Ok(LpOutcome::Optimal(LpSolution { primal, objective_value, dual }))
}

fn identity(m: usize) -> Vec<f64> {
    let mut e = vec![0.0; m * m];
    for i in 0..m {
        e[i * m + i] = 1.0;
    }
    e
}

impl Solver<'_> {
    fn m(&self) -> usize {
        self.cols.m
    }

    fn n(&self) -> usize {
        self.cols.n
    }

    /// `y = c_B B^-1` against the sign-normalized system.
    fn dual_signed(&self) -> Vec<f64> {
        let m = self.m();
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = self.costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, bi) in y.iter_mut().zip(row) {
                    *yi += cb * bi;
                }
            }
        }
        y
    }

    fn objective_of_basis(&self) -> f64 {
        (0..self.m()).map(|r| self.costs[self.basis[r]] * self.xb[r]).sum()
    }

    /// Adds a deterministic offset to the basic solution (a perturbation of
    /// the rhs expressed in the current basis frame, so feasibility is kept
    /// by construction). `b_cur` is updated to match for refactorization.
    fn perturb(&mut self) {
        let m = self.m();
        let n = self.n();
        for r in 0..m {
            let eps = PERTURB * (r + 1) as f64 / m as f64;
            self.xb[r] += eps;
            // b_cur += eps * (basis column r)
            let j = self.basis[r];
            if j < n {
                let (idx, val) = self.cols.col(j);
                for (&i, &v) in idx.iter().zip(val) {
                    self.b_cur[i as usize] += eps * v;
                }
            } else {
                self.b_cur[j - n] += eps;
            }
        }
    }

    fn set_rhs_to_original(&mut self) {
        self.b_cur = self.b_orig.clone();
        self.recompute_xb();
    }

    fn recompute_xb(&mut self) {
        let m = self.m();
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.xb[r] = row.iter().zip(&self.b_cur).map(|(a, b)| a * b).sum();
        }
    }

    /// Runs pivots until optimal (true) or unbounded (false). With
    /// `guard_artificials` set (phase 2), rows whose basic variable is an
    /// artificial also bound the ratio test from below, so an artificial at
    /// level zero can never grow back; it is pivoted out instead.
    fn run_phase(&mut self, guard_artificials: bool) -> Result<bool, LpError> {
        let mut best = f64::INFINITY;
        let mut stall = 0usize;
        let mut since_refactor = 0usize;
        let mut retried_fresh = false;
        loop {
            let value = self.objective_of_basis();
            if !value.is_finite() || value.abs() > 1e12 {
                return Err(LpError::Numerical(format!("objective diverged to {value:.3e}")));
            }
            let y = self.dual_signed();
            let candidates = self.entering_candidates(&y);
            if candidates.is_empty() {
                return Ok(true);
            }
            // Take the best-priced candidate whose ratio test offers a sane
            // pivot element; a nearly dependent column would wreck the basis.
            let mut picked = None;
            let mut saw_unbounded_column = false;
            for &q in &candidates {
                let w = self.ftran(q);
                match self.leaving(&w, guard_artificials) {
                    Some((r, theta, mag)) if mag >= PIVOT_OK => {
                        picked = Some((q, w, r, theta));
                        break;
                    }
                    Some(_) => {}
                    None => saw_unbounded_column = true,
                }
            }
            let Some((q, w, r, theta)) = picked else {
                if saw_unbounded_column {
                    return Ok(false);
                }
                // Every candidate column is nearly dependent on the basis;
                // retry once against a freshly refactorized inverse.
                if !retried_fresh {
                    retried_fresh = true;
                    self.refactorize()?;
                    continue;
                }
                return Err(LpError::Numerical(
                    "no numerically acceptable pivot among priced columns".into(),
                ));
            };
            retried_fresh = false;
            self.pivot(r, q, &w, theta);
            self.iters += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactorize()?;
                since_refactor = 0;
            }
            if self.iters > MAX_ITERS {
                return Err(LpError::Numerical(format!("no convergence in {MAX_ITERS} pivots")));
            }
            if value < best - 1e-15 {
                best = value;
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    self.bland = true;
                }
            }
        }
    }

    /// Nonbasic columns with negative reduced cost, best first (at most
    /// [`CANDIDATES`]; just the first eligible index under Bland).
    fn entering_candidates(&self, y: &[f64]) -> Vec<usize> {
        let n = self.n();
        if self.bland {
            return (0..n)
                .find(|&j| !self.is_basic[j] && self.costs[j] - self.cols.dot(j, y) < -ENTER_EPS)
                .into_iter()
                .collect();
        }
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(CANDIDATES + 1);
        for j in 0..n {
            if !self.is_basic[j] {
                let rc = self.costs[j] - self.cols.dot(j, y);
                if rc < -ENTER_EPS {
                    let pos = best.partition_point(|&(v, _)| v < rc);
                    if pos < CANDIDATES {
                        best.insert(pos, (rc, j));
                        best.truncate(CANDIDATES);
                    }
                }
            }
        }
        best.into_iter().map(|(_, j)| j).collect()
    }

    /// `w = B^-1 A_q`.
    fn ftran(&self, q: usize) -> Vec<f64> {
        let m = self.m();
        let (idx, val) = self.cols.col(q);
        let binv = &self.binv;
        let row_dot = |r: usize| -> f64 {
            let row = &binv[r * m..(r + 1) * m];
            idx.iter().zip(val).map(|(&i, &v)| row[i as usize] * v).sum()
        };
        if m >= PAR_DIM {
            (0..m).into_par_iter().map(row_dot).collect()
        } else {
            (0..m).map(row_dot).collect()
        }
    }

    /// Harris two-pass ratio test over `xb / w`. A row is eligible if its
    /// basic variable decreases (`w > 0`) or, under the artificial guard, if
    /// a basic artificial would increase (`w < 0`); either way the step is
    /// bounded by `xb / |w|`. Returns (row, step, pivot magnitude).
    fn leaving(&self, w: &[f64], guard_artificials: bool) -> Option<(usize, f64, f64)> {
        let n = self.n();
        let wmax = w.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let tol = PIVOT_ABS.max(PIVOT_REL * wmax);
        let denom = |r: usize| -> Option<f64> {
            let a = w[r];
            if a > tol {
                Some(a)
            } else if guard_artificials && self.basis[r] >= n && a < -tol {
                Some(-a)
            } else {
                None
            }
        };
        let mut theta = f64::INFINITY;
        for r in 0..self.m() {
            if let Some(d) = denom(r) {
                theta = theta.min((self.xb[r].max(0.0) + HARRIS_DELTA) / d);
            }
        }
        if theta.is_infinite() {
            return None;
        }
        let mut choice: Option<(usize, f64)> = None;
        for r in 0..self.m() {
            if let Some(d) = denom(r) {
                if self.xb[r].max(0.0) / d <= theta {
                    if self.bland {
                        match choice {
                            Some((rc, _)) if self.basis[rc] <= self.basis[r] => {}
                            _ => choice = Some((r, d)),
                        }
                    } else {
                        match choice {
                            Some((_, cd)) if cd >= d => {}
                            _ => choice = Some((r, d)),
                        }
                    }
                }
            }
        }
        choice.map(|(r, d)| (r, self.xb[r].max(0.0) / d, d))
    }

    fn pivot(&mut self, r: usize, q: usize, w: &[f64], theta: f64) {
        let m = self.m();
        for (x, &wi) in self.xb.iter_mut().zip(w) {
            *x -= theta * wi;
        }
        self.xb[r] = theta;
        // binv <- E binv with eta column derived from w
        let inv = 1.0 / w[r];
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (prow, tail) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v *= inv;
        }
        let update = |rows: &mut [f64], base: usize| {
            for (k, chunk) in rows.chunks_mut(m).enumerate() {
                let f = w[base + k];
                if f != 0.0 {
                    for (v, p) in chunk.iter_mut().zip(prow.iter()) {
                        *v -= f * p;
                    }
                }
            }
        };
        if m >= PAR_DIM {
            rayon::join(
                || {
                    head.par_chunks_mut(m).enumerate().for_each(|(k, chunk)| {
                        let f = w[k];
                        if f != 0.0 {
                            for (v, p) in chunk.iter_mut().zip(prow.iter()) {
                                *v -= f * p;
                            }
                        }
                    })
                },
                || {
                    tail.par_chunks_mut(m).enumerate().for_each(|(k, chunk)| {
                        let f = w[r + 1 + k];
                        if f != 0.0 {
                            for (v, p) in chunk.iter_mut().zip(prow.iter()) {
                                *v -= f * p;
                            }
                        }
                    })
                },
            );
        } else {
            update(head, 0);
            update(tail, r + 1);
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Rebuilds `binv` and `xb` from the original column data by
    /// Gauss-Jordan elimination with partial pivoting.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.m();
        let n = self.n();
        // aug = [B | I], eliminated in place
        let width = 2 * m;
        let mut aug = vec![0.0; m * width];
        for (slot, &j) in self.basis.iter().enumerate() {
            if j < n {
                let (idx, val) = self.cols.col(j);
                for (&i, &v) in idx.iter().zip(val) {
                    aug[i as usize * width + slot] = v;
                }
            } else {
                aug[(j - n) * width + slot] = 1.0;
            }
        }
        for i in 0..m {
            aug[i * width + m + i] = 1.0;
        }
        for col in 0..m {
            let (piv_row, piv_val) = (col..m)
                .map(|r| (r, aug[r * width + col].abs()))
                .fold((col, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if piv_val < 1e-11 {
                return Err(LpError::Numerical(format!(
                    "singular basis at refactorization (column {col})"
                )));
            }
            if piv_row != col {
                for k in 0..width {
                    aug.swap(piv_row * width + k, col * width + k);
                }
            }
            let inv = 1.0 / aug[col * width + col];
            for k in 0..width {
                aug[col * width + k] *= inv;
            }
            let prow: Vec<f64> = aug[col * width..(col + 1) * width].to_vec();
            let eliminate = |r: usize, row: &mut [f64]| {
                if r != col {
                    let f = row[col];
                    if f != 0.0 {
                        for (v, p) in row.iter_mut().zip(&prow) {
                            *v -= f * p;
                        }
                    }
                }
            };
            if m >= PAR_DIM {
                aug.par_chunks_mut(width).enumerate().for_each(|(r, row)| eliminate(r, row));
            } else {
                for r in 0..m {
                    let row = &mut aug[r * width..(r + 1) * width];
                    eliminate(r, row);
                }
            }
        }
        // Solution of B X = I sits in the right half, ordered by basis slot:
        // row `slot` of binv is row `slot` of X = aug rows? After full
        // Gauss-Jordan, aug = [I | B^-1] in the permuted row order that maps
        // slot k to row k, since the pivot for column k was swapped into row
        // k. So binv row k = right half of row k.
        for r in 0..m {
            self.binv[r * m..(r + 1) * m]
                .copy_from_slice(&aug[r * width + m..r * width + 2 * m]);
        }
        self.recompute_xb();
        Ok(())
    }
}
