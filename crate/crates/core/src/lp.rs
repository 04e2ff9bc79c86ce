//! Dense two-phase simplex for the small linear programs arising from
//! curvature computations.
//!
//! Problems are stated as minimization over variables with optional lower
//! and upper bounds. Internally everything is substituted into standard
//! form (nonnegative variables, equality rows) and solved on a dense
//! tableau. Pivoting is deterministic: Dantzig's rule with ties broken by
//! lowest index, switching permanently to Bland's rule after a run of
//! degenerate pivots so cycling cannot occur.

use serde::Serialize;
use thiserror::Error;

const TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const DEGENERATE_LIMIT: u32 = 64;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidProgram(String),
    #[error("simplex failed: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelOp {
    Eq,
    Le,
    Ge,
}

/// One linear constraint `sum coeffs . x  op  rhs`. Coefficient indices may
/// repeat; repeated entries accumulate.
#[derive(Clone, Debug, Serialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub op: RelOp,
    pub rhs: f64,
}

/// Minimize `objective . x` subject to `constraints`, with per-variable
/// bounds `(lower, upper)`; `None` means unbounded on that side.
#[derive(Clone, Debug, Serialize)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal { value: f64, solution: Vec<f64> },
    Unbounded,
    Infeasible,
}

enum VarMap {
    /// `x = shift + x'`, `x' >= 0`.
    Shifted { col: usize, shift: f64 },
    /// `x = shift - x'`, `x' >= 0`.
    Negated { col: usize, shift: f64 },
    /// `x = x_pos - x_neg`.
    Split { pos: usize, neg: usize },
}

struct StdRow {
    coeffs: Vec<f64>,
    op: RelOp,
    rhs: f64,
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    if lp.objective.len() != lp.num_vars || lp.bounds.len() != lp.num_vars {
        return Err(LpError::InvalidProgram(format!(
            "objective/bounds length must equal num_vars = {}",
            lp.num_vars
        )));
    }
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(LpError::InvalidProgram("non-finite objective coefficient".into()));
    }
    for (i, &(lo, hi)) in lp.bounds.iter().enumerate() {
        for b in [lo, hi].into_iter().flatten() {
            if !b.is_finite() {
                return Err(LpError::InvalidProgram(format!("non-finite bound on variable {i}")));
            }
        }
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return Err(LpError::InvalidProgram(format!(
                    "variable {i} has lower bound {l} above upper bound {h}"
                )));
            }
        }
    }
    for (k, con) in lp.constraints.iter().enumerate() {
        if !con.rhs.is_finite() {
            return Err(LpError::InvalidProgram(format!("non-finite rhs in constraint {k}")));
        }
        for &(i, c) in &con.coeffs {
            if i >= lp.num_vars {
                return Err(LpError::InvalidProgram(format!(
                    "constraint {k} references variable {i} of {}",
                    lp.num_vars
                )));
            }
            if !c.is_finite() {
                return Err(LpError::InvalidProgram(format!(
                    "non-finite coefficient in constraint {k}"
                )));
            }
        }
    }
    Ok(())
}

/// Solves the program. `Optimal` solutions satisfy every constraint to
/// about 1e-6 absolute; values are exact up to simplex roundoff.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    validate(lp)?;

    // Substitute every variable by nonnegative standard-form variables.
    let mut maps = Vec::with_capacity(lp.num_vars);
    let mut n_std = 0usize;
    let mut extra_rows: Vec<StdRow> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        match (lo, hi) {
            (Some(l), Some(h)) => {
                let col = n_std;
                n_std += 1;
                maps.push(VarMap::Shifted { col, shift: l });
                let mut coeffs = vec![0.0; 0];
                coeffs.resize(col + 1, 0.0);
                coeffs[col] = 1.0;
                extra_rows.push(StdRow { coeffs, op: RelOp::Le, rhs: h - l });
            }
            (Some(l), None) => {
                let col = n_std;
                n_std += 1;
                maps.push(VarMap::Shifted { col, shift: l });
            }
            (None, Some(h)) => {
                let col = n_std;
                n_std += 1;
                maps.push(VarMap::Negated { col, shift: h });
            }
            (None, None) => {
                let pos = n_std;
                let neg = n_std + 1;
                n_std += 2;
                maps.push(VarMap::Split { pos, neg });
            }
        }
    }
    for row in &mut extra_rows {
        row.coeffs.resize(n_std, 0.0);
    }

    let mut rows: Vec<StdRow> = Vec::with_capacity(lp.constraints.len() + extra_rows.len());
    for con in &lp.constraints {
        let mut coeffs = vec![0.0; n_std];
        let mut rhs = con.rhs;
        for &(i, c) in &con.coeffs {
            match maps[i] {
                VarMap::Shifted { col, shift } => {
                    coeffs[col] += c;
                    rhs -= c * shift;
                }
                VarMap::Negated { col, shift } => {
                    coeffs[col] -= c;
                    rhs -= c * shift;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += c;
                    coeffs[neg] -= c;
                }
            }
        }
        rows.push(StdRow { coeffs, op: con.op, rhs });
    }
    rows.extend(extra_rows);

    let mut cost_std = vec![0.0; n_std];
    for (i, &c) in lp.objective.iter().enumerate() {
        match maps[i] {
            VarMap::Shifted { col, .. } => cost_std[col] += c,
            VarMap::Negated { col, .. } => cost_std[col] -= c,
            VarMap::Split { pos, neg } => {
                cost_std[pos] += c;
                cost_std[neg] -= c;
            }
        }
    }

    let solution_std = match solve_standard(rows, n_std, &cost_std)? {
        StdOutcome::Unbounded => return Ok(LpOutcome::Unbounded),
        StdOutcome::Infeasible => return Ok(LpOutcome::Infeasible),
        StdOutcome::Optimal(x) => x,
    };

    let mut solution = vec![0.0; lp.num_vars];
    for (i, map) in maps.iter().enumerate() {
        solution[i] = match *map {
            VarMap::Shifted { col, shift } => shift + solution_std[col],
            VarMap::Negated { col, shift } => shift - solution_std[col],
            VarMap::Split { pos, neg } => solution_std[pos] - solution_std[neg],
        };
    }
    let value: f64 = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
    debug_assert!(residual(lp, &solution) < 1e-6, "simplex returned an infeasible point");
    Ok(LpOutcome::Optimal { value, solution })
}

/// Largest constraint or bound violation of `x`, for checking solutions.
pub fn residual(lp: &LinearProgram, x: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for con in &lp.constraints {
        let lhs: f64 = con.coeffs.iter().map(|&(i, c)| c * x[i]).sum();
        let violation = match con.op {
            RelOp::Eq => (lhs - con.rhs).abs(),
            RelOp::Le => (lhs - con.rhs).max(0.0),
            RelOp::Ge => (con.rhs - lhs).max(0.0),
        };
        worst = worst.max(violation);
    }
    for (i, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if let Some(l) = lo {
            worst = worst.max(l - x[i]);
        }
        if let Some(h) = hi {
            worst = worst.max(x[i] - h);
        }
    }
    worst
}

enum StdOutcome {
    Optimal(Vec<f64>),
    Unbounded,
    Infeasible,
}

enum PivotResult {
    Optimal,
    Unbounded,
}

/// Standard-form solve: rows over `n` nonnegative variables, minimize
/// `cost`. Consumes the rows, appends slack and artificial columns.
fn solve_standard(rows: Vec<StdRow>, n: usize, cost: &[f64]) -> Result<StdOutcome, LpError> {
    let m = rows.len();
    // Column layout: [structural | slacks | artificials], built below.
    let mut slack_count = 0;
    for row in &rows {
        if row.op != RelOp::Eq {
            slack_count += 1;
        }
    }
    let mut width = n + slack_count;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut artificial_from = usize::MAX;

    let mut next_slack = n;
    let mut pending_basis: Vec<Option<usize>> = Vec::with_capacity(m);
    for row in rows {
        let mut r = row.coeffs;
        r.resize(width, 0.0);
        let mut slack_col = None;
        match row.op {
            RelOp::Le => {
                r[next_slack] = 1.0;
                slack_col = Some((next_slack, 1.0));
                next_slack += 1;
            }
            RelOp::Ge => {
                r[next_slack] = -1.0;
                slack_col = Some((next_slack, -1.0));
                next_slack += 1;
            }
            RelOp::Eq => {}
        }
        let mut rhs = row.rhs;
        let mut slack_sign = slack_col.map(|(_, s)| s).unwrap_or(0.0);
        if rhs < 0.0 {
            for v in r.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
            slack_sign = -slack_sign;
        }
        r.push(rhs);
        a.push(r);
        // A slack that ends up with coefficient +1 serves as the initial
        // basic variable; otherwise the row needs an artificial.
        if slack_sign > 0.5 {
            pending_basis.push(Some(slack_col.unwrap().0));
        } else {
            pending_basis.push(None);
        }
    }

    // Move rhs aside while inserting artificial columns.
    let needs_artificial: Vec<usize> =
        pending_basis.iter().enumerate().filter(|(_, b)| b.is_none()).map(|(i, _)| i).collect();
    if !needs_artificial.is_empty() {
        artificial_from = width;
        width += needs_artificial.len();
        for row in a.iter_mut() {
            let rhs = row.pop().unwrap();
            row.resize(width, 0.0);
            row.push(rhs);
        }
        for (k, &row_i) in needs_artificial.iter().enumerate() {
            let col = artificial_from + k;
            a[row_i][col] = 1.0;
            pending_basis[row_i] = Some(col);
        }
    }
    for b in pending_basis {
        basis.push(b.expect("every row has an initial basic column"));
    }

    if artificial_from != usize::MAX {
        let mut phase1_cost = vec![0.0; width];
        for c in phase1_cost.iter_mut().skip(artificial_from) {
            *c = 1.0;
        }
        let allowed = vec![true; width];
        match run_simplex(&mut a, &mut basis, &phase1_cost, &allowed)? {
            PivotResult::Unbounded => {
                return Err(LpError::Internal("phase 1 cannot be unbounded".into()));
            }
            PivotResult::Optimal => {}
        }
        let phase1_value: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= artificial_from)
            .map(|(i, _)| a[i][width])
            .sum();
        if phase1_value > PHASE1_TOL {
            return Ok(StdOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis; rows that cannot
        // pivot are redundant and get dropped.
        let mut i = 0;
        while i < a.len() {
            if basis[i] >= artificial_from {
                let pivot_col =
                    (0..artificial_from).find(|&j| a[i][j].abs() > TOL && allowed[j]);
                match pivot_col {
                    Some(j) => {
                        pivot(&mut a, &mut basis, i, j);
                        i += 1;
                    }
                    None => {
                        a.remove(i);
                        basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    let mut phase2_cost = vec![0.0; width];
    phase2_cost[..n].copy_from_slice(&cost[..n]);
    let mut allowed = vec![true; width];
    if artificial_from != usize::MAX {
        for flag in allowed.iter_mut().skip(artificial_from) {
            *flag = false;
        }
    }
    match run_simplex(&mut a, &mut basis, &phase2_cost, &allowed)? {
        PivotResult::Unbounded => return Ok(StdOutcome::Unbounded),
        PivotResult::Optimal => {}
    }

    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = a[i][width];
        }
    }
    Ok(StdOutcome::Optimal(x))
}

/// Runs simplex iterations in place until optimal or unbounded. The last
/// column of each row is the rhs; `allowed` masks columns that may enter.
fn run_simplex(
    a: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    allowed: &[bool],
) -> Result<PivotResult, LpError> {
    let m = a.len();
    let width = cost.len();
    let mut bland = false;
    let mut degenerate_run = 0u32;
    let max_iters = 1000 + 200 * (m + width);

    for _ in 0..max_iters {
        // Reduced costs from scratch each round; the tableau stays the
        // single source of truth.
        let y: Vec<f64> = (0..m).map(|i| cost[basis[i]]).collect();
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..width {
            if !allowed[j] || basis.contains(&j) {
                continue;
            }
            let mut r = cost[j];
            for i in 0..m {
                r -= y[i] * a[i][j];
            }
            if r < -TOL {
                if bland {
                    entering = Some((j, r));
                    break;
                }
                match entering {
                    Some((_, best)) if r >= best => {}
                    _ => entering = Some((j, r)),
                }
            }
        }
        let Some((enter, _)) = entering else {
            return Ok(PivotResult::Optimal);
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if a[i][enter] > TOL {
                let ratio = a[i][width] / a[i][enter];
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - TOL || (ratio < lr + TOL && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((leave_row, ratio)) = leave else {
            return Ok(PivotResult::Unbounded);
        };

        if ratio.abs() <= TOL {
            degenerate_run += 1;
            if degenerate_run > DEGENERATE_LIMIT {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        pivot(a, basis, leave_row, enter);
    }
    Err(LpError::Internal("iteration limit exceeded".into()))
}

fn pivot(a: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let width = a[row].len();
    let p = a[row][col];
    for v in a[row].iter_mut() {
        *v /= p;
    }
    for i in 0..a.len() {
        if i == row {
            continue;
        }
        let factor = a[i][col];
        if factor == 0.0 {
            continue;
        }
        // Indexing keeps the pivot row and the eliminated row borrowable.
        #[allow(clippy::needless_range_loop)]
        for j in 0..width {
            let delta = factor * a[row][j];
            a[i][j] -= delta;
        }
        a[i][col] = 0.0;
    }
    basis[row] = col;
}
